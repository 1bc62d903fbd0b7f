//! JSON formats: versioned state files and experiment descriptors.
//!
//! Complex numbers are written as [re, im]; descriptors also accept a
//! plain number for a real value.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::catalysis::CatalysisStep;
use crate::error::{Error, Result};
use crate::fock::{DensityOperator, FockVector, State};
use crate::gaussian::{coherent_vector, BeamsplitterParam};
use crate::targets::TargetSpec;

pub const STATE_FORMAT_VERSION: u32 = 1;

#[derive(Deserialize)]
#[serde(untagged)]
enum ComplexRepr {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexRepr> for C64 {
    fn from(r: ComplexRepr) -> Self {
        match r {
            ComplexRepr::Real(x) => C64::new(x, 0.0),
            ComplexRepr::Pair([re, im]) => C64::new(re, im),
        }
    }
}

/// `#[serde(with = "complex")]` for C64 fields.
pub mod complex {
    use super::*;

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<C64, D::Error> {
        Ok(ComplexRepr::deserialize(d)?.into())
    }
}

/// `#[serde(with = "complex_opt")]` for Option<C64> fields.
pub mod complex_opt {
    use super::*;

    pub fn serialize<S: Serializer>(z: &Option<C64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        z.map(|z| [z.re, z.im]).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<C64>, D::Error> {
        Ok(Option::<ComplexRepr>::deserialize(d)?.map(Into::into))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Pure,
    Density,
}

/// On-disk state: amplitudes (pure) or the row-major density matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub version: u32,
    pub cutoff: usize,
    pub mode_dims: Vec<usize>,
    pub kind: StateKind,
    pub data: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<serde_json::Value>,
}

impl StateFile {
    pub fn from_state(state: &State) -> Self {
        let (kind, data, dim) = match state {
            State::Pure(v) => (StateKind::Pure, v.amplitudes().iter().map(|z| [z.re, z.im]).collect(), v.dim()),
            State::Mixed(r) => {
                let m = r.matrix();
                let d = m.nrows();
                let data = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| [m[(i, j)].re, m[(i, j)].im]).collect();
                (StateKind::Density, data, d)
            }
        };
        Self {
            version: STATE_FORMAT_VERSION,
            cutoff: dim - 1,
            mode_dims: vec![dim],
            kind,
            data,
            meta: None,
        }
    }

    pub fn with_meta(mut self, meta: serde_json::Value) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn to_state(&self) -> Result<State> {
        if self.version != STATE_FORMAT_VERSION {
            return Err(Error::InvalidParameter(format!(
                "state file version {} (expected {STATE_FORMAT_VERSION})",
                self.version
            )));
        }
        if self.mode_dims != [self.cutoff + 1] {
            return Err(Error::DimensionMismatch(format!(
                "mode_dims {:?} do not describe one mode with cutoff {}",
                self.mode_dims, self.cutoff
            )));
        }
        let d = self.cutoff + 1;
        let z: Vec<C64> = self.data.iter().map(|&[re, im]| C64::new(re, im)).collect();
        match self.kind {
            StateKind::Pure => {
                if z.len() != d {
                    return Err(Error::DimensionMismatch(format!("{} amplitudes for dimension {d}", z.len())));
                }
                Ok(State::Pure(FockVector::from_dvector(DVector::from_vec(z))?))
            }
            StateKind::Density => {
                if z.len() != d * d {
                    return Err(Error::DimensionMismatch(format!("{} entries for a {d}×{d} matrix", z.len())));
                }
                let m = DMatrix::from_row_slice(d, d, &z);
                Ok(State::Mixed(DensityOperator::single(m)?))
            }
        }
    }
}

/// Input state of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSpec {
    Coherent {
        #[serde(with = "complex")]
        alpha: C64,
    },
    Fock {
        n: usize,
    },
    /// Explicit amplitudes, normalized on load.
    Vector {
        amplitudes: Vec<[f64; 2]>,
    },
}

impl InputSpec {
    pub fn build(&self, cutoff: usize) -> Result<State> {
        Ok(State::Pure(match self {
            InputSpec::Coherent { alpha } => coherent_vector(*alpha, cutoff),
            InputSpec::Fock { n } => FockVector::basis(*n, cutoff)?,
            InputSpec::Vector { amplitudes } => {
                let z: Vec<C64> = amplitudes.iter().map(|&[re, im]| C64::new(re, im)).collect();
                if z.len() > cutoff + 1 {
                    return Err(Error::DimensionMismatch(format!(
                        "{} amplitudes exceed cutoff {cutoff}",
                        z.len()
                    )));
                }
                FockVector::new(z)?.with_cutoff(cutoff).normalized()?
            }
        }))
    }
}

/// One catalysis stage; exactly one of theta, r2 or r sets the beamsplitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    pub n: usize,
    #[serde(default = "unit")]
    pub eta: f64,
    /// Ancilla purity γ.
    #[serde(default = "unit")]
    pub gamma: f64,
}

fn unit() -> f64 {
    1.0
}

impl StepSpec {
    pub fn to_step(&self) -> Result<CatalysisStep> {
        let bs = match (self.theta, self.r2, self.r) {
            (Some(t), None, None) => BeamsplitterParam::new(t),
            (None, Some(r2), None) => BeamsplitterParam::from_r2(r2)?,
            (None, None, Some(r)) => BeamsplitterParam::from_r(r)?,
            _ => {
                return Err(Error::InvalidParameter(
                    "each step needs exactly one of theta, r2, r".into(),
                ))
            }
        };
        let step = CatalysisStep::ideal(bs, self.n).with_eta(self.eta).with_purity(self.gamma);
        step.validate()?;
        Ok(step)
    }
}

/// Catalysis experiment descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub input: InputSpec,
    pub steps: Vec<StepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpec>,
}

impl Experiment {
    pub fn validate(&self) -> Result<Vec<CatalysisStep>> {
        if self.steps.is_empty() {
            return Err(Error::InvalidParameter("steps: list is empty".into()));
        }
        let steps = self
            .steps
            .iter()
            .enumerate()
            .map(|(i, s)| s.to_step().map_err(|e| Error::InvalidParameter(format!("steps[{i}]: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if let Some(t) = &self.target {
            t.validate()?;
        }
        Ok(steps)
    }
}
