//! Photon catalysis: interfere a state with a single-photon ancilla, detect
//! photons in one output, keep the other. Single steps, cascades, the
//! closed-form cascade amplitudes, and the displaced-photon results.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{DensityOperator, FockVector, JointVector, State, DEFAULT_TAIL_TOL, PROB_FLOOR};
use crate::gaussian::{
    coherent_vector, displacement_matrix, survival_probability, Beamsplitter, BeamsplitterParam,
    BsConvention,
};
use crate::math::ln_factorial;

/// Mode carrying the input state; it is also the detected mode.
const INPUT_MODE: usize = 0;

/// One interference + detection stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatalysisStep {
    pub bs: BeamsplitterParam,
    pub n_detect: usize,
    /// Detector efficiency η ∈ (0, 1].
    pub eta: f64,
    /// Ancilla weight γ in γ|1⟩⟨1| + (1−γ)|0⟩⟨0|.
    pub purity: f64,
}

impl CatalysisStep {
    pub fn ideal(bs: BeamsplitterParam, n_detect: usize) -> Self {
        Self {
            bs,
            n_detect,
            eta: 1.0,
            purity: 1.0,
        }
    }

    pub fn from_r(r: f64, n_detect: usize) -> Result<Self> {
        Ok(Self::ideal(BeamsplitterParam::from_r(r)?, n_detect))
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_purity(mut self, purity: f64) -> Self {
        self.purity = purity;
        self
    }

    pub fn is_ideal(&self) -> bool {
        self.eta == 1.0 && self.purity == 1.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidParameter(format!("detector efficiency {} outside (0,1]", self.eta)));
        }
        if !(0.0..=1.0).contains(&self.purity) {
            return Err(Error::InvalidParameter(format!("ancilla purity {} outside [0,1]", self.purity)));
        }
        if !self.bs.theta.is_finite() {
            return Err(Error::InvalidParameter("beamsplitter angle not finite".into()));
        }
        Ok(())
    }
}

/// Fock filter removing the q-photon amplitude: n = 1, r² = 1/(q+1).
pub fn fock_filter_step(q: usize) -> Result<CatalysisStep> {
    if q < 1 {
        return Err(Error::InvalidParameter("Fock filter needs q >= 1".into()));
    }
    Ok(CatalysisStep::ideal(BeamsplitterParam::from_r2(1.0 / (q as f64 + 1.0))?, 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeResult {
    pub state: State,
    pub probability: f64,
    pub step_probabilities: Vec<f64>,
}

/// Kraus map K_{kj}[ℓ, m] = ⟨k|_a ⟨ℓ|_b U |m⟩_a |j⟩_b from input mode a to
/// output mode b, for an input of dimension `dim_in`.
fn ancilla_kraus(bs: &Beamsplitter, k: usize, j: usize, dim_in: usize) -> DMatrix<C64> {
    let dim_out = dim_in + j;
    DMatrix::from_fn(dim_out, dim_in, |l, m| {
        if k + l == m + j {
            C64::from(bs.element(k, l, m, j))
        } else {
            C64::default()
        }
    })
}

fn impossible(p: f64) -> Error {
    Error::ImpossibleOutcome {
        probability: p,
        step: None,
    }
}

fn catalyze_pure(psi: &FockVector, step: &CatalysisStep) -> Result<(FockVector, f64)> {
    let cutoff = psi.cutoff();
    let norm = psi.norm_sqr();
    let one = FockVector::basis(1, 1)?;
    let bs = Beamsplitter::new(step.bs, BsConvention::Reflecting, cutoff + 1);
    let joint = bs.apply(&psi.tensor(&one)?)?;
    if step.n_detect >= joint.dims()[INPUT_MODE] {
        return Err(impossible(0.0));
    }
    let (out, p) = joint.project_pnr_unnormalized(INPUT_MODE, step.n_detect)?;
    let prob = p / norm;
    if !(prob >= PROB_FLOOR) {
        return Err(impossible(prob));
    }
    let out = out.into_single()?.with_cutoff(cutoff).normalized()?;
    out.warn_tail(DEFAULT_TAIL_TOL, "catalysis output");
    Ok((out, prob))
}

/// Lossy and/or impure-ancilla step on a density operator, as the sum over
/// ancilla photon number j and pre-loss photon count k of
/// w_j p(n|k) K_{kj} ρ K_{kj}†.
fn catalyze_mixed(rho: &DensityOperator, step: &CatalysisStep) -> Result<(DensityOperator, f64)> {
    if rho.num_modes() != 1 {
        return Err(Error::DimensionMismatch("catalysis input must be single-mode".into()));
    }
    let d = rho.dim();
    let cutoff = d - 1;
    let bs = Beamsplitter::new(step.bs, BsConvention::Reflecting, cutoff + 1);
    let mut acc = DMatrix::<C64>::zeros(d + 1, d + 1);
    for (j, w) in [(0usize, 1.0 - step.purity), (1usize, step.purity)] {
        if w == 0.0 {
            continue;
        }
        for k in step.n_detect..=cutoff + j {
            let pk = survival_probability(k, step.n_detect, step.eta);
            if pk == 0.0 {
                continue;
            }
            let kr = ancilla_kraus(&bs, k, j, d);
            let term = &kr * rho.matrix() * kr.adjoint();
            let rows = term.nrows();
            let mut view = acc.view_mut((0, 0), (rows, rows));
            view += term * C64::from(w * pk);
        }
    }
    let out = DensityOperator::single(hermitize(acc))?;
    let prob = out.trace() / rho.trace();
    if !(prob >= PROB_FLOOR) {
        return Err(impossible(prob));
    }
    let out = out.with_cutoff(cutoff)?.normalized()?;
    let tail = out.tail_mass();
    if tail > DEFAULT_TAIL_TOL {
        log::warn!("catalysis output: tail mass {tail:.3e} above cutoff {cutoff}");
    }
    Ok((out, prob))
}

fn hermitize(m: DMatrix<C64>) -> DMatrix<C64> {
    (&m + m.adjoint()) * C64::from(0.5)
}

/// One catalysis step. Pure input through an ideal step stays pure; any
/// detector loss, ancilla impurity or mixed input yields a density operator.
/// The output keeps the input cutoff.
pub fn catalyze_step(input: &State, step: &CatalysisStep) -> Result<(State, f64)> {
    step.validate()?;
    match (input, step.is_ideal()) {
        (State::Pure(psi), true) => {
            let (v, p) = catalyze_pure(psi, step)?;
            Ok((State::Pure(v), p))
        }
        (State::Pure(psi), false) => {
            let (r, p) = catalyze_mixed(&psi.to_density(), step)?;
            Ok((State::Mixed(r), p))
        }
        (State::Mixed(rho), _) => {
            let (r, p) = catalyze_mixed(rho, step)?;
            Ok((State::Mixed(r), p))
        }
    }
}

/// Sequential catalysis; impossible outcomes carry the failing step index.
pub fn cascade(input: &State, steps: &[CatalysisStep]) -> Result<CascadeResult> {
    if steps.is_empty() {
        return Err(Error::InvalidParameter("cascade needs at least one step".into()));
    }
    let mut state = input.normalized()?;
    let mut probs = Vec::with_capacity(steps.len());
    for (i, step) in steps.iter().enumerate() {
        let (next, p) = catalyze_step(&state, step).map_err(|e| e.at_step(i))?;
        state = next;
        probs.push(p);
    }
    Ok(CascadeResult {
        state,
        probability: probs.iter().product(),
        step_probabilities: probs,
    })
}

/// Unnormalized closed-form output of an ideal cascade: the amplitudes φ_m
/// for m = 0..=cutoff + N (so no amplitude is lost) and Σ|φ_m|², which is
/// the success probability for a normalized input.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm {
    pub amplitudes: Vec<C64>,
    pub probability: f64,
}

/// f(n, ℓ) = [n r^{n−1} t^{ℓ+1} − ℓ r^{n+1} t^{ℓ−1}] / √n!
fn step_factor(n: usize, l: usize, r: f64, t: f64) -> f64 {
    let mut v = 0.0;
    if n > 0 {
        v += n as f64 * r.powi(n as i32 - 1) * t.powi(l as i32 + 1);
    }
    if l > 0 {
        v -= l as f64 * r.powi(n as i32 + 1) * t.powi(l as i32 - 1);
    }
    v * (-0.5 * ln_factorial(n)).exp()
}

/// Closed-form amplitudes of an ideal cascade applied to `psi`, with the
/// steps listed in the order they act.
pub fn cascaded_closed_form_raw(psi: &[C64], steps: &[CatalysisStep]) -> Result<ClosedForm> {
    if steps.iter().any(|s| !s.is_ideal()) {
        return Err(Error::InvalidParameter("closed form requires ideal steps".into()));
    }
    let cutoff = psi.len() - 1;
    let n_steps = steps.len();
    let total: usize = steps.iter().map(|s| s.n_detect).sum();
    let rt: Vec<(f64, f64)> = steps.iter().map(|s| (s.bs.r(), s.bs.t())).collect();
    let mut out = vec![C64::default(); cutoff + n_steps + 1];
    for (m, slot) in out.iter_mut().enumerate() {
        // s = m − N + Σ n_j is the input Fock index feeding φ_m.
        let s = m as i64 - n_steps as i64 + total as i64;
        if s < 0 || s as usize > cutoff {
            continue;
        }
        let mut prod = 1.0;
        let mut ell = m as i64;
        for k in 0..n_steps {
            let idx = n_steps - 1 - k;
            if ell < 0 {
                prod = 0.0;
                break;
            }
            let (r, t) = rt[idx];
            prod *= step_factor(steps[idx].n_detect, ell as usize, r, t);
            if prod == 0.0 {
                break;
            }
            ell += steps[idx].n_detect as i64 - 1;
        }
        if prod == 0.0 {
            continue;
        }
        let s = s as usize;
        *slot = psi[s] * prod * (0.5 * (ln_factorial(s) - ln_factorial(m))).exp();
    }
    let probability = out.iter().map(|z| z.norm_sqr()).sum();
    Ok(ClosedForm {
        amplitudes: out,
        probability,
    })
}

/// Normalized closed-form cascade output at the input cutoff.
pub fn cascaded_closed_form(psi: &FockVector, steps: &[CatalysisStep]) -> Result<FockVector> {
    let raw = cascaded_closed_form_raw(psi.amplitudes().as_slice(), steps)?;
    if !(raw.probability / psi.norm_sqr() >= PROB_FLOOR) {
        return Err(impossible(raw.probability / psi.norm_sqr()));
    }
    let v = FockVector::new(raw.amplitudes)?.with_cutoff(psi.cutoff()).normalized()?;
    v.warn_tail(DEFAULT_TAIL_TOL, "closed-form cascade");
    Ok(v)
}

/// Success probability of an ideal cascade on the coherent input |α⟩.
pub fn cascade_success_prob(alpha: C64, steps: &[CatalysisStep], cutoff: usize) -> Result<f64> {
    let psi = coherent_vector(alpha, cutoff);
    Ok(cascaded_closed_form_raw(psi.amplitudes().as_slice(), steps)?.probability)
}

/// Closed-form fidelity between the output of one ideal step on |α⟩ and
/// D(β)|1⟩, for real α and β.
pub fn displaced_photon_fidelity(alpha: f64, bs: BeamsplitterParam, n: usize, beta: f64) -> f64 {
    let (r, t) = (bs.r(), bs.t());
    let r2 = r * r;
    let nf = n as f64;
    let d = beta - t * alpha;
    let num = nf * t * d + r2 * alpha * (1.0 + t * alpha * beta - beta * beta);
    let den = r2 * r2 * alpha * alpha + t * t * (nf - r2 * alpha * alpha).powi(2);
    (-d * d).exp() * num * num / den
}

/// D(β)|1⟩ truncated at `cutoff`.
pub fn displaced_photon(beta: C64, cutoff: usize) -> Result<FockVector> {
    let big = cutoff + 30;
    let v = FockVector::basis(1, big)?.apply(&displacement_matrix(beta, big))?;
    Ok(v.with_cutoff(cutoff))
}

/// Numeric fidelity of one catalysis step on |α⟩ against D(β)|1⟩.
pub fn displaced_photon_fidelity_numeric(alpha: C64, step: &CatalysisStep, beta: C64, cutoff: usize) -> Result<f64> {
    let input = State::Pure(coherent_vector(alpha, cutoff));
    let (out, _) = catalyze_step(&input, step)?;
    let target = State::Pure(displaced_photon(beta, cutoff)?);
    crate::fock::fidelity(&out, &target)
}

/// t²|tα⟩⟨tα| + r² D(tα)|1⟩⟨1|D†(tα): the mode-b state when mode a of
/// U|α⟩|1⟩ is discarded instead of measured.
pub fn paris_displacement_mixture(alpha: C64, bs: BeamsplitterParam, cutoff: usize) -> Result<DensityOperator> {
    let (r, t) = (bs.r(), bs.t());
    let coh = coherent_vector(alpha * t, cutoff);
    let one = displaced_photon(alpha * t, cutoff)?;
    DensityOperator::mixture(&[t * t, r * r], &[coh, one])
}

/// Displacement fidelity optimum with detector efficiency η:
/// α = √(n/(η r²)), β = √(α² − n/η).
pub fn lossy_optimal_params(n: usize, eta: f64, r: f64) -> Result<(f64, f64)> {
    if !(eta > 0.0 && eta <= 1.0) || !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidParameter(format!("η = {eta}, r = {r} out of range")));
    }
    let nf = n as f64;
    let alpha = (nf / (eta * r * r)).sqrt();
    let beta = (alpha * alpha - nf / eta).max(0.0).sqrt();
    Ok((alpha, beta))
}

/// Output of one step on an arbitrary two-mode joint input, projecting
/// mode 0 onto `n` after the beamsplitter. Used by tests as the dense
/// reference pipeline.
pub fn project_after_beamsplitter(joint: &JointVector, bs: BeamsplitterParam, n: usize) -> Result<(FockVector, f64)> {
    let dims = joint.dims();
    let b = Beamsplitter::new(bs, BsConvention::Reflecting, dims[0] + dims[1] - 2);
    let out = b.apply(joint)?;
    let (v, p) = out.project_pnr(INPUT_MODE, n)?;
    Ok((v.into_single()?, p))
}
