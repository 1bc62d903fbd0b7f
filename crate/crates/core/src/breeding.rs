//! Breeding: interfere two states on a balanced beamsplitter after a phase
//! Θ on mode a, measure mode b (photon counting or homodyne), keep mode a.

use std::f64::consts::{FRAC_PI_4, PI};
use std::io::Write;

use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{fidelity, DensityOperator, FockVector, JointVector, State, PROB_FLOOR};
use crate::gaussian::{displacement_matrix, rotate, Beamsplitter, BeamsplitterParam, BsConvention, SqueezeParam};
use crate::math::hermite_functions;
use crate::optimize::{nelder_mead, NelderMeadConfig};
use crate::targets::{gkp_state, ssv_vector, GkpLogical, Lattice, SsvTarget};

const MEASURED: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    Q,
    P,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Detector {
    Pnr { n: usize },
    Homodyne { quadrature: Quadrature, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreedConfig {
    /// Phase R_a(Θ) applied to mode a before the beamsplitter.
    pub theta_phase: f64,
    pub detector: Detector,
    #[serde(default)]
    pub convention: BsConvention,
}

impl BreedConfig {
    pub fn pnr(theta_phase: f64, n: usize) -> Self {
        Self {
            theta_phase,
            detector: Detector::Pnr { n },
            convention: BsConvention::Reflecting,
        }
    }

    pub fn homodyne(theta_phase: f64, quadrature: Quadrature, value: f64) -> Self {
        Self {
            theta_phase,
            detector: Detector::Homodyne { quadrature, value },
            convention: BsConvention::Reflecting,
        }
    }

    pub fn with_convention(mut self, convention: BsConvention) -> Self {
        self.convention = convention;
        self
    }
}

/// U_ab R_a(Θ)|a⟩|b⟩ before any measurement; each output mode has
/// dimension da + db − 1.
pub fn breed_joint(a: &FockVector, b: &FockVector, theta_phase: f64, convention: BsConvention) -> Result<JointVector> {
    let ra = rotate(a, theta_phase);
    let joint = ra.tensor(b)?;
    let bs = Beamsplitter::new(BeamsplitterParam::new(FRAC_PI_4), convention, a.cutoff() + b.cutoff());
    bs.apply(&joint)
}

/// ⟨x|n⟩ for the chosen quadrature, n = 0..=nmax.
fn quadrature_wavefunction(quadrature: Quadrature, value: f64, nmax: usize) -> Vec<C64> {
    let h = hermite_functions(value, nmax);
    match quadrature {
        Quadrature::Q => h.into_iter().map(C64::from).collect(),
        Quadrature::P => h
            .into_iter()
            .enumerate()
            .map(|(n, v)| C64::from(v) * C64::new(0.0, -1.0).powu(n as u32))
            .collect(),
    }
}

/// Project `mode` of a joint vector onto the quadrature eigenstate |x⟩.
/// Returns the normalized remaining state and the probability density.
pub fn homodyne_project(joint: &JointVector, mode: usize, quadrature: Quadrature, value: f64) -> Result<(JointVector, f64)> {
    let dims = joint.dims().to_vec();
    if mode >= dims.len() {
        return Err(Error::InvalidMode {
            index: mode,
            modes: dims.len(),
        });
    }
    if dims.len() < 2 {
        return Err(Error::InvalidParameter("projection needs at least two modes".into()));
    }
    if !value.is_finite() {
        return Err(Error::InvalidParameter(format!("homodyne value {value}")));
    }
    // ⟨x|ψ⟩ = Σ_n ⟨x|n⟩ ψ_n, with ⟨x|n⟩ = conj⟨n|x⟩.
    let wf = quadrature_wavefunction(quadrature, value, dims[mode] - 1);
    let mut acc = JointVector::new(DVector::zeros(joint.amplitudes().len() / dims[mode]), remove(&dims, mode))?;
    let mut amps = acc.amplitudes().clone();
    for (n, w) in wf.iter().enumerate() {
        if *w == C64::default() {
            continue;
        }
        let (slice, _) = joint.project_pnr_unnormalized(mode, n)?;
        amps.axpy(*w, slice.amplitudes(), C64::from(1.0));
    }
    let density = amps.norm_squared() / joint.norm_sqr();
    if !(density > PROB_FLOOR) {
        return Err(Error::ImpossibleOutcome {
            probability: density,
            step: None,
        });
    }
    amps.unscale_mut(amps.norm());
    acc = JointVector::new(amps, remove(&dims, mode))?;
    Ok((acc, density))
}

fn remove(dims: &[usize], mode: usize) -> Vec<usize> {
    dims.iter().enumerate().filter(|&(i, _)| i != mode).map(|(_, &d)| d).collect()
}

fn measure(joint: &JointVector, detector: Detector) -> Result<(FockVector, f64)> {
    let (v, p) = match detector {
        Detector::Pnr { n } => {
            if n >= joint.dims()[MEASURED] {
                return Err(Error::ImpossibleOutcome {
                    probability: 0.0,
                    step: None,
                });
            }
            joint.project_pnr(MEASURED, n)?
        }
        Detector::Homodyne { quadrature, value } => homodyne_project(joint, MEASURED, quadrature, value)?,
    };
    Ok((v.into_single()?, p))
}

/// Breed two pure states. The output keeps every photon: its cutoff is the
/// sum of the input cutoffs.
pub fn breed_pure(a: &FockVector, b: &FockVector, cfg: &BreedConfig) -> Result<(FockVector, f64)> {
    if a.cutoff() != b.cutoff() {
        return Err(Error::DimensionMismatch(format!(
            "breeding inputs have cutoffs {} and {}",
            a.cutoff(),
            b.cutoff()
        )));
    }
    let joint = breed_joint(a, b, cfg.theta_phase, cfg.convention)?;
    let (out, p) = measure(&joint, cfg.detector)?;
    Ok((out, p))
}

fn ensemble(s: &State) -> Vec<(f64, FockVector)> {
    match s {
        State::Pure(v) => vec![(1.0, v.normalized().expect("nonzero state"))],
        State::Mixed(r) => {
            let rho = r.normalized().expect("positive trace");
            let eig = SymmetricEigen::new(rho.matrix().clone());
            eig.eigenvalues
                .iter()
                .enumerate()
                .filter(|(_, &l)| l > 1e-12)
                .map(|(i, &l)| (l, FockVector::from_dvector(eig.eigenvectors.column(i).into_owned()).unwrap()))
                .collect()
        }
    }
}

/// Breed two states, pure or mixed. Mixed inputs are expanded in their
/// eigen-ensembles and each pair bred as pure states.
pub fn breed(a: &State, b: &State, cfg: &BreedConfig) -> Result<(State, f64)> {
    if let (State::Pure(x), State::Pure(y)) = (a, b) {
        let (v, p) = breed_pure(x, y, cfg)?;
        return Ok((State::Pure(v), p));
    }
    if a.cutoff() != b.cutoff() {
        return Err(Error::DimensionMismatch("breeding inputs differ in cutoff".into()));
    }
    let ea = ensemble(a);
    let eb = ensemble(b);
    let mut total = 0.0;
    let mut parts = Vec::new();
    for (wa, va) in &ea {
        for (wb, vb) in &eb {
            match breed_pure(va, vb, cfg) {
                Ok((v, p)) => {
                    total += wa * wb * p;
                    parts.push((wa * wb * p, v));
                }
                Err(Error::ImpossibleOutcome { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    if !(total > PROB_FLOOR) {
        return Err(Error::ImpossibleOutcome {
            probability: total,
            step: None,
        });
    }
    let (w, vs): (Vec<f64>, Vec<FockVector>) = parts.into_iter().map(|(w, v)| (w / total, v)).unzip();
    Ok((State::Mixed(DensityOperator::mixture(&w, &vs)?), total))
}

/// Hexagonal-lattice breeding: Θ = π/3.
pub fn breed_hex(a: &FockVector, b: &FockVector, n: usize) -> Result<(FockVector, f64)> {
    breed_pure(a, b, &BreedConfig::pnr(std::f64::consts::FRAC_PI_3, n))
}

/// All photon-counting outcomes n in `outcomes` from one joint state.
pub fn breed_outcomes(a: &FockVector, b: &FockVector, theta_phase: f64, outcomes: &[usize]) -> Result<Vec<(usize, Option<FockVector>, f64)>> {
    let joint = breed_joint(a, b, theta_phase, BsConvention::Reflecting)?;
    let total = joint.norm_sqr();
    outcomes
        .iter()
        .map(|&n| {
            if n >= joint.dims()[MEASURED] {
                return Ok((n, None, 0.0));
            }
            let (raw, p) = joint.project_pnr_unnormalized(MEASURED, n)?;
            let p = p / total;
            if p < PROB_FLOOR {
                return Ok((n, None, p));
            }
            let v = raw.into_single()?.normalized()?;
            Ok((n, Some(v), p))
        })
        .collect()
}

/// Fidelity and success-probability maps of n = 0 breeding of two
/// SSV(M, β, ξ) copies against SSV(M, √2β, ξ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMap {
    pub m: usize,
    pub betas: Vec<f64>,
    pub xis: Vec<f64>,
    /// fidelity[i][j] at (betas[i], xis[j])
    pub fidelity: Vec<Vec<f64>>,
    pub probability: Vec<Vec<f64>>,
}

impl SweepMap {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::InvalidParameter(format!("csv write: {e}"));
        wr.write_record(["beta", "xi", "fidelity", "probability"]).map_err(io)?;
        for (i, b) in self.betas.iter().enumerate() {
            for (j, x) in self.xis.iter().enumerate() {
                wr.write_record([
                    b.to_string(),
                    x.to_string(),
                    self.fidelity[i][j].to_string(),
                    self.probability[i][j].to_string(),
                ])
                .map_err(io)?;
            }
        }
        wr.flush().map_err(|e| Error::InvalidParameter(format!("csv write: {e}")))?;
        Ok(())
    }
}

/// One sweep point: (fidelity, probability).
pub fn breed_point(m: usize, beta: f64, xi: f64, cutoff: usize) -> Result<(f64, f64)> {
    SqueezeParam::real(xi)?;
    let s = ssv_vector(m, C64::from(beta), C64::from(xi), cutoff)?;
    let (out, p) = breed_pure(&s, &s, &BreedConfig::pnr(0.0, 0))?;
    let target = SsvTarget::new(m, std::f64::consts::SQRT_2 * beta, xi, Default::default(), 0.0);
    Ok((target.fidelity(&out)?, p))
}

pub fn breed_sweep(m: usize, betas: &[f64], xis: &[f64], cutoff: usize) -> Result<SweepMap> {
    if betas.iter().chain(xis).any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("sweep grid must be finite".into()));
    }
    let cells: Vec<(usize, usize)> = (0..betas.len()).flat_map(|i| (0..xis.len()).map(move |j| (i, j))).collect();
    let vals = cells
        .par_iter()
        .map(|&(i, j)| breed_point(m, betas[i], xis[j], cutoff))
        .collect::<Result<Vec<_>>>()?;
    let mut fidelity = vec![vec![0.0; xis.len()]; betas.len()];
    let mut probability = fidelity.clone();
    for (&(i, j), (f, p)) in cells.iter().zip(vals) {
        fidelity[i][j] = f;
        probability[i][j] = p;
    }
    Ok(SweepMap {
        m,
        betas: betas.to_vec(),
        xis: xis.to_vec(),
        fidelity,
        probability,
    })
}

/// Best-fit GKP target for a bred state: rotation, small displacement and
/// optionally the peak width Δ are adjusted to maximize the fidelity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GkpFit {
    pub fidelity: f64,
    pub delta: f64,
    pub rotation: f64,
    #[serde(with = "crate::io::complex")]
    pub displacement: C64,
}

/// Δ held fixed or fitted inside a range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthChoice {
    Fixed(f64),
    Fit { lo: f64, hi: f64, start: f64 },
}

/// F(D(γ)R(φ) ρ_GKP R†(φ)D†(γ), |out⟩), maximized over φ, γ (|Re γ|, |Im γ| ≤ 1)
/// and, when requested, Δ.
pub fn fit_gkp(out: &FockVector, lattice: Lattice, d: usize, logical: GkpLogical, width: WidthChoice, nm: &NelderMeadConfig) -> Result<GkpFit> {
    let cutoff = out.cutoff();
    let out = out.normalized()?;
    let fixed = match width {
        WidthChoice::Fixed(w) => Some(gkp_state(lattice, d, logical, w, cutoff)?),
        WidthChoice::Fit { .. } => None,
    };
    // move the output instead of the target: R(−φ)D(−γ)|out⟩
    let score = |x: &[f64]| -> Result<f64> {
        let gamma = C64::new(x[1], x[2]);
        let moved = rotate(&out.apply(&displacement_matrix(-gamma, cutoff))?, -x[0]);
        let target = match (&fixed, width) {
            (Some(t), _) => t.clone(),
            (None, _) => gkp_state(lattice, d, logical, x[3], cutoff)?,
        };
        fidelity(&State::Pure(moved), &target)
    };
    let objective = |x: &[f64]| score(x).unwrap_or(crate::optimize::PENALTY);
    let symmetry = match lattice {
        Lattice::Square => std::f64::consts::FRAC_PI_2,
        Lattice::Hexagonal => std::f64::consts::FRAC_PI_3,
    };
    let mut bounds = vec![(-PI, PI), (-1.0, 1.0), (-1.0, 1.0)];
    let mut start0 = vec![0.0, 0.0, 0.0];
    if let WidthChoice::Fit { lo, hi, start } = width {
        bounds.push((lo, hi));
        start0.push(start);
    }
    let single = nm.with_restarts(1);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in 0..4 {
        let mut s = start0.clone();
        s[0] = symmetry * k as f64 / 4.0;
        let r = nelder_mead(objective, &bounds, Some(&s), &single)?;
        if best.as_ref().is_none_or(|b| r.value > b.0) {
            best = Some((r.value, r.x));
        }
    }
    let (fid, x) = best.expect("four starts");
    Ok(GkpFit {
        fidelity: fid,
        delta: match width {
            WidthChoice::Fixed(w) => w,
            WidthChoice::Fit { .. } => x[3],
        },
        rotation: x[0],
        displacement: C64::new(x[1], x[2]),
    })
}
