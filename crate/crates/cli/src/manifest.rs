//! Manifest schemas for the file-driven subcommands.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use fockcat::breeding::{BreedConfig, WidthChoice};
use fockcat::fock::State;
use fockcat::io::{Experiment, StateFile};
use fockcat::optimize::{NelderMeadConfig, SearchBounds};
use fockcat::targets::{GkpLogical, Lattice, Parity, TargetSpec};
use num_complex::Complex64 as C64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// A manifest that does not match its schema; exit code 1.
#[derive(Debug, thiserror::Error)]
#[error("{file}: {message}")]
pub struct SchemaError {
    pub file: String,
    pub message: String,
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        let message = if at == "." {
            e.inner().to_string()
        } else {
            format!("at {at}: {}", e.inner())
        };
        SchemaError {
            file: path.display().to_string(),
            message,
        }
        .into()
    })
}

/// Where a breeding input comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSource {
    /// A state file written by an earlier run.
    File { path: PathBuf },
    /// An ideal target state.
    Target { spec: TargetSpec },
    /// The output of a catalysis cascade, optionally re-centred by D(−restoring).
    Catalysis {
        experiment: Experiment,
        #[serde(default, with = "fockcat::io::complex_opt", skip_serializing_if = "Option::is_none")]
        restoring: Option<C64>,
    },
}

impl StateSource {
    pub fn build(&self, cutoff: usize, base: &Path) -> Result<State> {
        Ok(match self {
            StateSource::File { path } => {
                let path = if path.is_relative() { base.join(path) } else { path.clone() };
                let f: StateFile = load(&path)?;
                f.to_state()?.with_cutoff(cutoff)?
            }
            StateSource::Target { spec } => spec.build(cutoff)?,
            StateSource::Catalysis { experiment, restoring } => {
                let steps = experiment.validate()?;
                let input = experiment.input.build(cutoff)?;
                let out = fockcat::catalysis::cascade(&input, &steps)?.state;
                match restoring {
                    Some(d) => out
                        .transform(&fockcat::gaussian::displacement_matrix(-*d, cutoff))?
                        .normalized()?,
                    None => out,
                }
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GkpFitSpec {
    pub lattice: Lattice,
    #[serde(default = "two")]
    pub d: usize,
    pub logical: GkpLogical,
    pub width: WidthChoice,
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BreedManifest {
    pub a: StateSource,
    /// Defaults to a second copy of `a`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<StateSource>,
    pub config: BreedConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gkp_fits: Vec<GkpFitSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HexManifest {
    pub input: StateSource,
    #[serde(default)]
    pub n: usize,
    #[serde(default = "hex_width")]
    pub width: f64,
    #[serde(default = "two")]
    pub d: usize,
    #[serde(default = "hex_logicals")]
    pub logicals: Vec<GkpLogical>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
}

fn hex_width() -> f64 {
    0.46
}

fn hex_logicals() -> Vec<GkpLogical> {
    vec![GkpLogical::EqualMixture]
}

fn default_parities() -> Vec<Parity> {
    vec![Parity::Even, Parity::Odd]
}

fn ten() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeManifest {
    pub n_steps: usize,
    #[serde(default = "ten")]
    pub n_bound: usize,
    #[serde(default = "two")]
    pub m: usize,
    #[serde(default = "default_parities")]
    pub parities: Vec<Parity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
    #[serde(default)]
    pub bounds: SearchBounds,
    #[serde(default)]
    pub optimizer: NelderMeadConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuples: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdManifest {
    pub detections: Vec<usize>,
    pub alpha: f64,
    /// Beamsplitter reflectivities r (amplitude), one per step.
    pub r: Vec<f64>,
    pub beta: f64,
    pub xi: f64,
    pub delta: f64,
    #[serde(default = "two")]
    pub m: usize,
    #[serde(default)]
    pub parity: Parity,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    #[serde(default = "ten")]
    pub n_bound: usize,
    /// Re-fit (β, ξ, δ) of the base tuple before enumerating.
    #[serde(default = "yes")]
    pub refit_base: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
    #[serde(default)]
    pub optimizer: NelderMeadConfig,
}

fn default_thresholds() -> Vec<f64> {
    vec![0.9]
}

fn yes() -> bool {
    true
}

/// A list of values or an inclusive linear range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Values(Vec<f64>),
    Range { start: f64, stop: f64, steps: usize },
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::Values(v) => v.clone(),
            Axis::Range { start, stop, steps } => match steps {
                0 => vec![],
                1 => vec![*start],
                n => (0..*n).map(|i| start + (stop - start) * i as f64 / (*n - 1) as f64).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepManifest {
    pub m: usize,
    pub betas: Axis,
    pub xis: Axis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
}
