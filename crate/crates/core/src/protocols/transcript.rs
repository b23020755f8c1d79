//! Message logs and verdicts.
//!
//! A transcript serializes to JSON lines, one message per line:
//! `{"dir": "A→B" | "B→A", "kind": …, "payload": …}`. Quantum payloads use
//! the `qstate-v1` encoding.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::Result;
use crate::protocols::{AdamStrategy, BabeStrategy, ProtocolParams};
use crate::qstate::json::QStateJson;
use crate::qstate::Ket;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "A→B")]
    AdamToBabe,
    #[serde(rename = "B→A")]
    BabeToAdam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub dir: Direction,
    pub kind: String,
    pub payload: Value,
}

/// Outcome of one individual verification step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Reject,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProtocolTranscript {
    pub params: ProtocolParams,
    pub adam: AdamStrategy,
    pub babe: BabeStrategy,
    pub messages: Vec<Message>,
    pub committed_bit: u8,
    /// `None` when the run aborted before the opening.
    pub opened_bit: Option<u8>,
    pub verdict: Verdict,
    pub checks: Vec<Check>,
}

impl ProtocolTranscript {
    pub(crate) fn start(params: &ProtocolParams, adam: &AdamStrategy, babe: &BabeStrategy) -> Self {
        ProtocolTranscript {
            params: params.clone(),
            adam: adam.clone(),
            babe: babe.clone(),
            messages: Vec::new(),
            committed_bit: 0,
            opened_bit: None,
            verdict: Verdict::Reject,
            checks: Vec::new(),
        }
    }

    pub(crate) fn send(&mut self, dir: Direction, kind: &str, payload: Value) {
        self.messages.push(Message { dir, kind: kind.to_string(), payload });
    }

    pub(crate) fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    /// Sets the verdict from the checks: accept iff the opening happened and
    /// every check passed.
    pub(crate) fn finish(mut self) -> Self {
        let ok = self.opened_bit.is_some() && self.checks.iter().all(|c| c.passed);
        self.verdict = if ok { Verdict::Accept } else { Verdict::Reject };
        self
    }

    pub fn accepted(&self) -> bool {
        self.verdict == Verdict::Accept
    }

    pub fn checks_passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }

    /// One JSON object per message, newline-terminated.
    pub fn to_json_lines(&self) -> Result<String> {
        let mut out = String::new();
        for m in &self.messages {
            out.push_str(&serde_json::to_string(m)?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Single-line summary of the outcome.
    pub fn verdict_line(&self) -> Result<String> {
        let failed: Vec<&str> = self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        Ok(serde_json::to_string(&json!({
            "verdict": self.verdict,
            "protocol": self.params.protocol,
            "seed": self.params.seed,
            "adam": self.adam.name(),
            "babe": self.babe.name(),
            "committed_bit": self.committed_bit,
            "opened_bit": self.opened_bit,
            "checks": self.checks.len(),
            "failed_checks": failed,
        }))?)
    }
}

/// Kets as a JSON array of `qstate-v1` objects.
pub fn kets_payload(kets: &[Ket]) -> Value {
    Value::Array(kets.iter().map(|k| serde_json::to_value(QStateJson::from(k)).expect("plain data")).collect())
}
