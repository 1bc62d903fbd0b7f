//! Target states: Schrödinger cats, M-fold superpositions of squeezed
//! vacuum (SSV), and finite-energy square and hexagonal GKP grid states.
//!
//! Quadratures are q = (a + a†)/√2 and p = (a − a†)/(i√2), so e^{−ip̂x}
//! shifts q by x and equals D(x/√2).

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::catalysis::{cascaded_closed_form_raw, CatalysisStep};
use crate::error::{Error, Result};
use crate::fock::{overlap_fidelity, DensityOperator, FockVector, State};
use crate::gaussian::{coherent_vector, displaced_squeezed_vector, displacement_element, rotate, SqueezeParam};
use crate::math::{ln_double_factorial_odd, ln_factorial};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    #[default]
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lattice {
    Square,
    Hexagonal,
}

/// Which code state of a GKP lattice to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GkpLogical {
    Mu(usize),
    /// Equal statistical mixture of all μ.
    EqualMixture,
    /// Normalized equal-weight coherent sum of all μ.
    EqualSuperposition,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TargetKind {
    DisplacedFock {
        #[serde(with = "crate::io::complex")]
        beta: C64,
        #[serde(default = "one")]
        n: usize,
    },
    Scs {
        #[serde(with = "crate::io::complex")]
        zeta: C64,
        #[serde(default)]
        parity: Parity,
    },
    Ssv {
        m: usize,
        #[serde(with = "crate::io::complex")]
        beta: C64,
        #[serde(with = "crate::io::complex")]
        xi: C64,
        #[serde(default)]
        parity: Parity,
    },
    Gkp {
        lattice: Lattice,
        d: usize,
        logical: GkpLogical,
        delta: f64,
    },
}

fn one() -> usize {
    1
}

/// A target state with an optional restoring displacement δ: the state
/// compared against is D(δ)|target⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub kind: TargetKind,
    #[serde(default, with = "crate::io::complex_opt")]
    pub restoring: Option<C64>,
}

impl TargetSpec {
    pub fn new(kind: TargetKind) -> Self {
        Self { kind, restoring: None }
    }

    pub fn with_restoring(mut self, delta: C64) -> Self {
        self.restoring = Some(delta);
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            TargetKind::Ssv { m, xi, parity, .. } => {
                if m < 2 {
                    return Err(Error::InvalidParameter(format!("SSV order M = {m} < 2")));
                }
                if parity == Parity::Odd && m != 2 {
                    return Err(Error::InvalidParameter("odd parity is defined for M = 2 only".into()));
                }
                SqueezeParam::new(xi)?;
            }
            TargetKind::Gkp { d, delta, logical, .. } => {
                check_gkp(d, delta, logical)?;
            }
            _ => {}
        }
        Ok(())
    }

    /// Build the (displaced) target at `cutoff`.
    pub fn build(&self, cutoff: usize) -> Result<State> {
        self.validate()?;
        let delta = self.restoring.unwrap_or_default();
        match self.kind {
            TargetKind::DisplacedFock { beta, n } => {
                let big = cutoff + 40;
                let v = FockVector::basis(n, big)?.apply(&crate::gaussian::displacement_matrix(beta + delta, big))?;
                Ok(State::Pure(v.with_cutoff(cutoff)))
            }
            TargetKind::Scs { zeta, parity } => {
                let t = SsvTarget {
                    m: 2,
                    beta: zeta,
                    xi: C64::default(),
                    parity,
                    delta,
                };
                Ok(State::Pure(t.vector(cutoff)?))
            }
            TargetKind::Ssv { m, beta, xi, parity } => Ok(State::Pure(
                SsvTarget {
                    m,
                    beta,
                    xi,
                    parity,
                    delta,
                }
                .vector(cutoff)?,
            )),
            TargetKind::Gkp { lattice, d, logical, delta: width } => {
                let s = gkp_state(lattice, d, logical, width, cutoff)?;
                if delta == C64::default() {
                    Ok(s)
                } else {
                    s.transform(&crate::gaussian::displacement_matrix(delta, cutoff))
                }
            }
        }
    }
}

/// Extra Fock levels used when building displaced targets, so that their
/// normalization is not biased by the cutoff.
fn target_margin(reach: f64, r: f64) -> usize {
    let e = r.abs().exp();
    (reach * reach * e * e + 10.0 * reach * e + 40.0).ceil() as usize
}

/// D(δ) Σ_k c_k D(β ω^k) S(ξ ω^{2k})|0⟩ with ω = e^{2πi/M} and c_k = (±1)^k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsvTarget {
    pub m: usize,
    pub beta: C64,
    pub xi: C64,
    pub parity: Parity,
    pub delta: C64,
}

impl SsvTarget {
    pub fn new(m: usize, beta: f64, xi: f64, parity: Parity, delta: f64) -> Self {
        Self {
            m,
            beta: C64::from(beta),
            xi: C64::from(xi),
            parity,
            delta: C64::from(delta),
        }
    }

    /// Unnormalized superposition on `cutoff` levels.
    fn raw(&self, cutoff: usize) -> Result<FockVector> {
        if self.m < 2 {
            return Err(Error::InvalidParameter(format!("SSV order M = {} < 2", self.m)));
        }
        let mut acc = nalgebra::DVector::<C64>::zeros(cutoff + 1);
        for k in 0..self.m {
            let w = C64::from_polar(1.0, 2.0 * PI * k as f64 / self.m as f64);
            let bk = self.beta * w;
            let xk = SqueezeParam::new(self.xi * w * w)?;
            let phase = C64::from_polar(1.0, (self.delta * bk.conj()).im);
            let coef = if k % 2 == 1 { self.parity.sign() } else { 1.0 };
            let v = displaced_squeezed_vector(self.delta + bk, xk, cutoff);
            acc += v.amplitudes() * (phase * coef);
        }
        FockVector::from_dvector(acc)
    }

    /// Normalized target truncated at `cutoff`. The normalization is taken on
    /// an enlarged space, so a target that does not fit reports norm < 1.
    pub fn vector(&self, cutoff: usize) -> Result<FockVector> {
        let big = cutoff.max(target_margin(self.beta.norm() + self.delta.norm(), self.xi.norm()));
        let v = self.raw(big)?;
        let n = v.norm_sqr().sqrt();
        if !(n > 1e-10) {
            return Err(Error::Unnormalizable(n));
        }
        Ok(v.scaled(C64::from(1.0 / n)).with_cutoff(cutoff))
    }

    /// |⟨target|φ⟩|² for a pure state φ (normalized internally).
    pub fn fidelity(&self, phi: &FockVector) -> Result<f64> {
        let t = self.vector(phi.cutoff())?;
        Ok(phi.inner(&t).norm_sqr() / phi.norm_sqr())
    }
}

/// Normalized cat state N(|ζ⟩ ± |−ζ⟩).
pub fn scs_vector(zeta: C64, parity: Parity, cutoff: usize) -> Result<FockVector> {
    let plus = coherent_vector(zeta, cutoff);
    let minus = coherent_vector(-zeta, cutoff);
    let norm2 = 2.0 * (1.0 + parity.sign() * (-2.0 * zeta.norm_sqr()).exp());
    if !(norm2 > 1e-20) {
        return Err(Error::Unnormalizable(norm2.sqrt()));
    }
    let amps = plus.amplitudes() + minus.amplitudes() * C64::from(parity.sign());
    Ok(FockVector::from_dvector(amps)?.scaled(C64::from(1.0 / norm2.sqrt())))
}

/// Normalized M-fold SSV Σ_k D(βω^k) S(ξω^{2k})|0⟩.
pub fn ssv_vector(m: usize, beta: C64, xi: C64, cutoff: usize) -> Result<FockVector> {
    ssv_vector_with_parity(m, beta, xi, Parity::Even, cutoff)
}

pub fn ssv_vector_with_parity(m: usize, beta: C64, xi: C64, parity: Parity, cutoff: usize) -> Result<FockVector> {
    let spec = TargetSpec::new(TargetKind::Ssv { m, beta, xi, parity });
    spec.validate()?;
    SsvTarget {
        m,
        beta,
        xi,
        parity,
        delta: C64::default(),
    }
    .vector(cutoff)
}

/// Quadrature squeezing of S(ξ) in dB.
pub fn squeezing_db(xi: f64) -> f64 {
    10.0 * (2.0 * xi.abs()).exp().log10()
}

/// Cat amplitude ζ = e^{−ξ}β of the squeezed cat equal to the M = 2 SSV.
pub fn equivalent_cat(beta: f64, xi: f64) -> f64 {
    (-xi).exp() * beta
}

fn check_gkp(d: usize, delta: f64, logical: GkpLogical) -> Result<()> {
    if d < 1 {
        return Err(Error::InvalidParameter("GKP dimension must be positive".into()));
    }
    if !(delta > 0.1 && delta < 1.5) {
        return Err(Error::InvalidParameter(format!("GKP width Δ = {delta} outside (0.1, 1.5)")));
    }
    if let GkpLogical::Mu(mu) = logical {
        if mu >= d {
            return Err(Error::InvalidParameter(format!("μ = {mu} not below d = {d}")));
        }
    }
    Ok(())
}

/// Lattice generator amplitudes (γ₁ per unit of dn₁+μ, γ₂ per unit of n₂).
fn gkp_generators(lattice: Lattice, d: usize) -> (C64, C64, f64) {
    let df = d as f64;
    match lattice {
        Lattice::Square => {
            let s = (2.0 * PI / df).sqrt();
            (C64::new(s / 2f64.sqrt(), 0.0), C64::new(0.0, s / 2f64.sqrt()), s)
        }
        Lattice::Hexagonal => {
            let s = (4.0 * PI / (df * 3f64.sqrt())).sqrt();
            // e^{−(i/2)(q̂ + √3 p̂)x} = D(x e^{−iπ/6}/√2)
            (
                C64::from_polar(s / 2f64.sqrt(), -PI / 6.0),
                C64::new(0.0, s / 2f64.sqrt()),
                s,
            )
        }
    }
}

/// e^{−Δ²N}|γ⟩ amplitudes added into `acc` with weight `w`.
fn add_damped_coherent(acc: &mut [C64], gamma: C64, delta: f64, w: C64) {
    let x = gamma.norm_sqr();
    let d2 = delta * delta;
    if x == 0.0 {
        acc[0] += w;
        return;
    }
    let lg = gamma.norm().ln();
    let arg = gamma.arg();
    for (m, slot) in acc.iter_mut().enumerate() {
        let ln_mag = -x / 2.0 + m as f64 * (lg - d2) - 0.5 * ln_factorial(m);
        if ln_mag < -745.0 {
            continue;
        }
        *slot += w * C64::from_polar(ln_mag.exp(), m as f64 * arg);
    }
}

fn gkp_component(lattice: Lattice, d: usize, mu: usize, delta: f64, cutoff: usize, window: i64) -> Vec<C64> {
    let (g1, g2, _) = gkp_generators(lattice, d);
    let mut acc = vec![C64::default(); cutoff + 1];
    for n1 in -window..=window {
        let a = g1 * (d as f64 * n1 as f64 + mu as f64);
        for n2 in -window..=window {
            let b = g2 * n2 as f64;
            let phase = C64::from_polar(1.0, (a * b.conj()).im);
            add_damped_coherent(&mut acc, a + b, delta, phase);
        }
    }
    acc
}

/// One normalized GKP code state μ with a converged lattice window.
pub fn gkp_code_vector(lattice: Lattice, d: usize, mu: usize, delta: f64, cutoff: usize) -> Result<FockVector> {
    check_gkp(d, delta, GkpLogical::Mu(mu))?;
    let (_, _, s) = gkp_generators(lattice, d);
    let mut window = (3.0 / (delta * s)).ceil() as i64;
    let mut prev = FockVector::new(gkp_component(lattice, d, mu, delta, cutoff, window))?.normalized()?;
    for _ in 0..50 {
        window += 2;
        let next = FockVector::new(gkp_component(lattice, d, mu, delta, cutoff, window))?.normalized()?;
        let change = 1.0 - overlap_fidelity(&prev, &next);
        prev = next;
        if change < 1e-8 {
            prev.warn_tail(crate::fock::DEFAULT_TAIL_TOL, "GKP state");
            return Ok(prev);
        }
    }
    Err(Error::Convergence(format!(
        "GKP lattice window did not converge (Δ = {delta}, cutoff {cutoff})"
    )))
}

/// Finite-energy GKP state e^{−Δ²N}|μ⟩, a mixture, or a superposition.
pub fn gkp_state(lattice: Lattice, d: usize, logical: GkpLogical, delta: f64, cutoff: usize) -> Result<State> {
    check_gkp(d, delta, logical)?;
    match logical {
        GkpLogical::Mu(mu) => Ok(State::Pure(gkp_code_vector(lattice, d, mu, delta, cutoff)?)),
        GkpLogical::EqualMixture => {
            let comps = (0..d)
                .map(|mu| gkp_code_vector(lattice, d, mu, delta, cutoff))
                .collect::<Result<Vec<_>>>()?;
            let w = vec![1.0 / d as f64; d];
            Ok(State::Mixed(DensityOperator::mixture(&w, &comps)?))
        }
        GkpLogical::EqualSuperposition => {
            let mut acc = nalgebra::DVector::<C64>::zeros(cutoff + 1);
            for mu in 0..d {
                acc += gkp_code_vector(lattice, d, mu, delta, cutoff)?.amplitudes();
            }
            Ok(State::Pure(FockVector::from_dvector(acc)?.normalized()?))
        }
    }
}

pub fn gkp_square(d: usize, logical: GkpLogical, delta: f64, cutoff: usize) -> Result<State> {
    gkp_state(Lattice::Square, d, logical, delta, cutoff)
}

pub fn gkp_hex(d: usize, logical: GkpLogical, delta: f64, cutoff: usize) -> Result<State> {
    gkp_state(Lattice::Hexagonal, d, logical, delta, cutoff)
}

/// The double-sum fidelity between an ideal cascade on |α⟩ and
/// D(δ)|SSV±(β, ξ)⟩ for real α, β, ξ, δ, evaluated term by term with the
/// displaced-Fock overlaps ⟨2ℓ|D(γ)|m⟩.
pub fn ssv_fidelity_analytic(
    alpha: f64,
    steps: &[CatalysisStep],
    beta: f64,
    xi: f64,
    delta: f64,
    parity: Parity,
    cutoff: usize,
) -> Result<f64> {
    // Catalysed amplitudes up to a constant: α^m/√m! Π_k t_{k+1}^m (n t² − r²(m + shift)).
    let n_steps = steps.len();
    let cat: Vec<f64> = (0..=cutoff)
        .map(|m| {
            let mf = m as f64;
            let mut ln_mag = if alpha == 0.0 {
                if m == 0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            } else {
                mf * alpha.abs().ln() - 0.5 * ln_factorial(m)
            };
            let mut sign = if alpha < 0.0 && m % 2 == 1 { -1.0 } else { 1.0 };
            let mut shift = 0.0;
            for k in 0..n_steps {
                let s_idx = n_steps - 1 - k;
                let (r, t) = (steps[s_idx].bs.r(), steps[s_idx].bs.t());
                let n = steps[s_idx].n_detect as f64;
                ln_mag += mf * steps[k].bs.t().ln();
                let factor = n * t * t - r * r * (mf + shift);
                if factor == 0.0 {
                    return 0.0;
                }
                ln_mag += factor.abs().ln();
                if factor < 0.0 {
                    sign = -sign;
                }
                shift += n - 1.0;
            }
            sign * ln_mag.exp()
        })
        .collect();
    let c_phi2 = 1.0 / cat.iter().map(|x| x * x).sum::<f64>();
    let r = xi;
    let ps = parity.sign();
    let c_ssv2 = 1.0 / (2.0 * (1.0 + ps * (-2.0 * beta * beta * (-2.0 * r).exp()).exp()));
    let tanh = r.tanh();
    let g_minus = C64::from(-beta - delta);
    let g_plus = C64::from(beta - delta);
    let lmax = (cutoff + target_margin(beta.abs() + delta.abs(), r)) / 2;
    let mut sum = C64::default();
    let mut last_block = 0.0;
    for l in 0..=lmax {
        let pref = if l == 0 {
            1.0
        } else {
            if tanh == 0.0 {
                break;
            }
            let ln = l as f64 * tanh.abs().ln() + ln_double_factorial_odd(l) - 0.5 * ln_factorial(2 * l);
            let sgn = if tanh < 0.0 && l % 2 == 1 { -1.0 } else { 1.0 };
            sgn * ln.exp()
        };
        let mut block = C64::default();
        for (m, &cm) in cat.iter().enumerate() {
            if cm == 0.0 {
                continue;
            }
            let a = displacement_element(2 * l, m, g_minus) + displacement_element(2 * l, m, g_plus) * ps;
            block += a * cm;
        }
        block *= pref;
        sum += block;
        last_block = block.norm();
    }
    if last_block > 1e-14 * sum.norm().max(1e-300) && tanh != 0.0 {
        return Err(Error::Convergence(format!(
            "SSV overlap series not converged (last term {last_block:.2e})"
        )));
    }
    Ok(c_ssv2 * c_phi2 / r.cosh() * sum.norm_sqr())
}

/// Same fidelity evaluated from state vectors: closed-form cascade output
/// against the recurrence-built target.
pub fn ssv_fidelity_numeric(
    alpha: C64,
    steps: &[CatalysisStep],
    target: &SsvTarget,
    cutoff: usize,
) -> Result<f64> {
    let psi = coherent_vector(alpha, cutoff);
    if steps.is_empty() {
        return target.fidelity(&psi);
    }
    let raw = cascaded_closed_form_raw(psi.amplitudes().as_slice(), steps)?;
    let phi = FockVector::new(raw.amplitudes)?;
    let t = target.vector(phi.cutoff())?;
    Ok(phi.inner(&t).norm_sqr() / phi.norm_sqr())
}

/// max over a grid of rotations θ of F(R(θ)φ, target) for pure states.
pub fn best_rotation_fidelity(phi: &FockVector, target: &State, samples: usize) -> Result<(f64, f64)> {
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 0..samples {
        let th = 2.0 * PI * k as f64 / samples as f64;
        let f = crate::fock::fidelity(&State::Pure(rotate(phi, th)), target)?;
        if f > best.0 {
            best = (f, th);
        }
    }
    // golden-section refinement around the best sample
    let h = 2.0 * PI / samples as f64;
    let (mut lo, mut hi) = (best.1 - h, best.1 + h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let eval = |th: f64| crate::fock::fidelity(&State::Pure(rotate(phi, th)), target);
    for _ in 0..40 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if eval(a)? > eval(b)? {
            hi = b;
        } else {
            lo = a;
        }
    }
    let th = 0.5 * (lo + hi);
    let f = eval(th)?;
    Ok(if f > best.0 { (f, th) } else { best })
}
