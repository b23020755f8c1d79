//! The fixed menu of honest and adversarial behaviours.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocols::ProtocolId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Committer,
    Receiver,
}

/// Committer (Adam) behaviours.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AdamStrategy {
    Honest,
    /// Commit honestly, then announce one position (default: the last)
    /// with the other label to open the other bit.
    QubitLie { position: Option<usize> },
    /// QBC2: announce a different name in every retained set while flipping
    /// the bit.
    NameLie,
    /// QBC1: commit the last qubit as the midpoint `R(δ/2)|ψ⟩` and open
    /// either way.
    FixedMidpoint,
    /// EPR cheat whose rotation is computed from the actual states.
    UhlmannMatched,
    /// QBC1: EPR cheat whose rotation is computed for an independently drawn
    /// ψ-sequence.
    UhlmannMismatched,
    /// QBC3: EPR cheat computed as if the receiver measured nothing.
    NoMeasurementCheat,
    /// QBC2: identify each retained set's permutation with the optimal
    /// 24-outcome measurement and exploit the guess.
    OptimalDetection,
}

/// Receiver (Babe) behaviours.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BabeStrategy {
    Honest,
    /// QBC2: send `sets` sets (default: all) with every qubit at `angle`.
    UniformAngle { angle: f64, sets: Option<usize> },
}

impl AdamStrategy {
    pub fn role(&self) -> Role {
        Role::Committer
    }

    pub fn name(&self) -> &'static str {
        match self {
            AdamStrategy::Honest => "honest",
            AdamStrategy::QubitLie { .. } => "qubit-lie",
            AdamStrategy::NameLie => "name-lie",
            AdamStrategy::FixedMidpoint => "fixed-midpoint",
            AdamStrategy::UhlmannMatched => "uhlmann-matched",
            AdamStrategy::UhlmannMismatched => "uhlmann-mismatched",
            AdamStrategy::NoMeasurementCheat => "no-measurement-cheat",
            AdamStrategy::OptimalDetection => "optimal-detection",
        }
    }

    pub fn is_honest(&self) -> bool {
        matches!(self, AdamStrategy::Honest)
    }

    /// Rejects strategies that the protocol does not define.
    pub fn validate_for(&self, protocol: ProtocolId, n: usize) -> Result<()> {
        use AdamStrategy::*;
        let ok = match protocol {
            ProtocolId::Qbc0 | ProtocolId::Qbc01 => matches!(self, Honest | QubitLie { .. } | UhlmannMatched),
            ProtocolId::Qbc1 => {
                matches!(self, Honest | QubitLie { .. } | FixedMidpoint | UhlmannMatched | UhlmannMismatched)
            }
            ProtocolId::Qbc2 => matches!(self, Honest | NameLie | OptimalDetection),
            ProtocolId::Qbc3 => matches!(self, Honest | QubitLie { .. } | NoMeasurementCheat),
        };
        if !ok {
            return Err(Error::InvalidParameter(format!("committer strategy {} is not defined for {protocol}", self.name())));
        }
        if let QubitLie { position: Some(p) } = self {
            if *p >= n {
                return Err(Error::InvalidParameter(format!("lie position {p} outside 0..{n}")));
            }
        }
        Ok(())
    }
}

impl BabeStrategy {
    pub fn role(&self) -> Role {
        Role::Receiver
    }

    pub fn name(&self) -> &'static str {
        match self {
            BabeStrategy::Honest => "honest",
            BabeStrategy::UniformAngle { .. } => "uniform-angle",
        }
    }

    pub fn validate_for(&self, protocol: ProtocolId, n: usize) -> Result<()> {
        match self {
            BabeStrategy::Honest => Ok(()),
            BabeStrategy::UniformAngle { angle, sets } => {
                if protocol != ProtocolId::Qbc2 {
                    return Err(Error::InvalidParameter(format!("receiver strategy uniform-angle is not defined for {protocol}")));
                }
                if !angle.is_finite() {
                    return Err(Error::InvalidParameter("cheating angle must be finite".into()));
                }
                if sets.is_some_and(|s| s > n) {
                    return Err(Error::InvalidParameter(format!("{} cheating sets exceed n = {n}", sets.unwrap_or(0))));
                }
                Ok(())
            }
        }
    }
}

impl std::str::FromStr for AdamStrategy {
    type Err = Error;

    /// `honest`, `qubit-lie[:POS]`, `name-lie`, `fixed-midpoint`,
    /// `uhlmann-matched`, `uhlmann-mismatched`, `no-measurement-cheat`,
    /// `optimal-detection`.
    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let st = match head {
            "honest" => AdamStrategy::Honest,
            "qubit-lie" => AdamStrategy::QubitLie {
                position: arg
                    .map(|a| a.parse::<usize>().map_err(|_| Error::InvalidParameter(format!("bad lie position {a:?}"))))
                    .transpose()?,
            },
            "name-lie" => AdamStrategy::NameLie,
            "fixed-midpoint" => AdamStrategy::FixedMidpoint,
            "uhlmann-matched" => AdamStrategy::UhlmannMatched,
            "uhlmann-mismatched" => AdamStrategy::UhlmannMismatched,
            "no-measurement-cheat" => AdamStrategy::NoMeasurementCheat,
            "optimal-detection" => AdamStrategy::OptimalDetection,
            other => return Err(Error::InvalidParameter(format!("unknown committer strategy {other:?}"))),
        };
        if arg.is_some() && !matches!(st, AdamStrategy::QubitLie { .. }) {
            return Err(Error::InvalidParameter(format!("strategy {head} takes no argument")));
        }
        Ok(st)
    }
}

impl std::str::FromStr for BabeStrategy {
    type Err = Error;

    /// `honest` or `angle=RADIANS[,sets=K]`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "honest" {
            return Ok(BabeStrategy::Honest);
        }
        let mut angle = None;
        let mut sets = None;
        for part in s.split(',') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameter(format!("expected key=value, got {part:?}")))?;
            match k.trim() {
                "angle" => {
                    angle = Some(v.trim().parse::<f64>().map_err(|_| Error::InvalidParameter(format!("bad angle {v:?}")))?)
                }
                "sets" => {
                    sets = Some(v.trim().parse::<usize>().map_err(|_| Error::InvalidParameter(format!("bad set count {v:?}")))?)
                }
                other => return Err(Error::InvalidParameter(format!("unknown receiver option {other:?}"))),
            }
        }
        let angle = angle.ok_or_else(|| Error::InvalidParameter("receiver cheat needs angle=…".into()))?;
        Ok(BabeStrategy::UniformAngle { angle, sets })
    }
}
