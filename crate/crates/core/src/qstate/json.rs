//! The `qstate-v1` JSON encoding.
//!
//! ```json
//! {"schema": "qstate-v1", "dim": 2, "re": [...], "im": [...]}
//! ```
//!
//! `re`/`im` hold `dim` entries for a ket and `dim²` entries (row-major) for
//! an operator. The `schema` field is written on output and optional on
//! input; when present it must equal `"qstate-v1"`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::linalg::{CMatrix, CVector, C64};
use crate::qstate::{DensityOperator, Ket, Operator};

pub const SCHEMA: &str = "qstate-v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QStateJson {
    #[serde(default = "default_schema")]
    pub schema: String,
    pub dim: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

fn default_schema() -> String {
    SCHEMA.to_string()
}

/// Payload decoded from `qstate-v1`.
#[derive(Clone, Debug)]
pub enum QStatePayload {
    Ket(Ket),
    Operator(CMatrix),
}

impl QStateJson {
    pub fn from_vector(v: &CVector) -> Self {
        QStateJson {
            schema: default_schema(),
            dim: v.len(),
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }

    pub fn from_matrix(m: &CMatrix) -> Self {
        let d = m.nrows();
        let mut re = Vec::with_capacity(d * d);
        let mut im = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        QStateJson { schema: default_schema(), dim: d, re, im }
    }

    fn check(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(Error::InvalidParameter(format!("unsupported schema {:?}", self.schema)));
        }
        if self.re.len() != self.im.len() {
            return Err(Error::DimensionMismatch("re and im lengths differ".into()));
        }
        Ok(())
    }

    pub fn decode(&self) -> Result<QStatePayload> {
        self.check()?;
        let d = self.dim;
        let n = self.re.len();
        let z = |k: usize| C64::new(self.re[k], self.im[k]);
        if n == d {
            Ok(QStatePayload::Ket(Ket::new(CVector::from_fn(d, |k, _| z(k)))?))
        } else if n == d * d {
            Ok(QStatePayload::Operator(CMatrix::from_fn(d, d, |i, j| z(i * d + j))))
        } else {
            Err(Error::DimensionMismatch(format!("{n} entries fit neither a ket nor an operator of dim {d}")))
        }
    }

    pub fn to_ket(&self) -> Result<Ket> {
        match self.decode()? {
            QStatePayload::Ket(k) => Ok(k),
            QStatePayload::Operator(_) => Err(Error::InvalidState("expected a ket, found an operator".into())),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        match self.decode()? {
            QStatePayload::Operator(m) => Ok(m),
            QStatePayload::Ket(_) if self.dim == 1 => Ok(CMatrix::from_element(1, 1, C64::new(self.re[0], self.im[0]))),
            QStatePayload::Ket(_) => Err(Error::InvalidState("expected an operator, found a ket".into())),
        }
    }

    pub fn to_density(&self) -> Result<DensityOperator> {
        DensityOperator::new(self.to_matrix()?)
    }

    pub fn to_operator(&self) -> Result<Operator> {
        Operator::new(self.to_matrix()?)
    }
}

impl From<&Ket> for QStateJson {
    fn from(k: &Ket) -> Self {
        QStateJson::from_vector(k.amplitudes())
    }
}

impl From<&Operator> for QStateJson {
    fn from(o: &Operator) -> Self {
        QStateJson::from_matrix(o.matrix())
    }
}

impl From<&DensityOperator> for QStateJson {
    fn from(r: &DensityOperator) -> Self {
        QStateJson::from_matrix(r.matrix())
    }
}
