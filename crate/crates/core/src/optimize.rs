//! Nelder–Mead with box clamping and seeded restarts, plus the cascade
//! searches built on it: per-tuple optimization of (α, θ₁…θ_N, β, ξ, δ) and
//! threshold-fidelity aggregation over deviating detection tuples.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalysis::{cascaded_closed_form_raw, CatalysisStep};
use crate::error::{Error, Result};
use crate::fock::FockVector;
use crate::gaussian::{coherent_vector, BeamsplitterParam};
use crate::targets::{Parity, SsvTarget};

/// Objective value used where an evaluation fails (impossible outcome).
pub const PENALTY: f64 = -1.0;
/// Tuples whose base-parameter probability falls below this are skipped.
pub const PRUNE_PROBABILITY: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NelderMeadConfig {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Stop when every vertex lies within this distance (max norm) of the best.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Initial simplex edge as a fraction of each box width.
    pub initial_step: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            tolerance: 1e-7,
            max_iterations: 4000,
            restarts: 8,
            seed: 0,
            initial_step: 0.1,
        }
    }
}

impl NelderMeadConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    /// Best value after each iteration of the winning restart.
    pub trace: Vec<f64>,
    pub evaluations: usize,
    /// The winning restart stopped on the iteration limit.
    pub exhausted: bool,
}

fn check_bounds(bounds: &[(f64, f64)], cfg: &NelderMeadConfig) -> Result<()> {
    if bounds.is_empty() {
        return Err(Error::InvalidParameter("no free parameters".into()));
    }
    for &(lo, hi) in bounds {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter(format!("bad bound ({lo}, {hi})")));
        }
    }
    if !(cfg.tolerance > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    Ok(())
}

fn clamp(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.clamp(lo, hi);
    }
}

/// Maximize `f` over the box. The first run starts at `start` when given,
/// the rest at seeded random interior points.
pub fn nelder_mead<F>(f: F, bounds: &[(f64, f64)], start: Option<&[f64]>, cfg: &NelderMeadConfig) -> Result<NelderMeadResult>
where
    F: Fn(&[f64]) -> f64,
{
    check_bounds(bounds, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<NelderMeadResult> = None;
    let mut evaluations = 0;
    for k in 0..cfg.restarts.max(1) {
        let x0: Vec<f64> = match (k, start) {
            (0, Some(s)) => {
                let mut s = s.to_vec();
                clamp(&mut s, bounds);
                s
            }
            _ => bounds
                .iter()
                .map(|&(lo, hi)| lo + (hi - lo) * (0.05 + 0.9 * rng.random::<f64>()))
                .collect(),
        };
        let run = simplex_run(&f, bounds, x0, cfg);
        evaluations += run.evaluations;
        if best.as_ref().is_none_or(|b| run.value > b.value) {
            best = Some(run);
        }
    }
    let mut best = best.expect("at least one restart");
    best.evaluations = evaluations;
    Ok(best)
}

fn simplex_run<F>(f: &F, bounds: &[(f64, f64)], x0: Vec<f64>, cfg: &NelderMeadConfig) -> NelderMeadResult
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evals = 0usize;
    // minimize g = −f; NaN counts as the penalty
    let mut g = |x: &[f64]| {
        evals += 1;
        let v = f(x);
        if v.is_nan() {
            -PENALTY
        } else {
            -v
        }
    };
    let mut pts = vec![x0.clone()];
    for i in 0..n {
        let (lo, hi) = bounds[i];
        let step = cfg.initial_step * (hi - lo);
        let mut p = x0.clone();
        p[i] = if p[i] + step <= hi { p[i] + step } else { p[i] - step };
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| g(p)).collect();
    let mut trace = Vec::new();
    let mut exhausted = true;
    for _ in 0..cfg.max_iterations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        trace.push(-vals[0]);
        let diameter = pts[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if diameter < cfg.tolerance {
            exhausted = false;
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64, from: &[f64]| {
            let mut x: Vec<f64> = centroid.iter().zip(from).map(|(c, w)| c + t * (w - c)).collect();
            clamp(&mut x, bounds);
            x
        };
        let worst = pts[n].clone();
        let xr = along(-cfg.reflection, &worst);
        let fr = g(&xr);
        if fr < vals[0] {
            let xe = along(-cfg.reflection * cfg.expansion, &worst);
            let fe = g(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        // outside contraction when the reflection beat the worst vertex
        let xc = if fr < vals[n] {
            along(-cfg.reflection * cfg.contraction, &worst)
        } else {
            along(cfg.contraction, &worst)
        };
        let fc = g(&xc);
        if fc < vals[n].min(fr) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        for i in 1..=n {
            let best = pts[0].clone();
            let mut x: Vec<f64> = best.iter().zip(&pts[i]).map(|(b, p)| b + cfg.shrink * (p - b)).collect();
            clamp(&mut x, bounds);
            vals[i] = g(&x);
            pts[i] = x;
        }
    }
    let i = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    NelderMeadResult {
        x: pts[i].clone(),
        value: -vals[i],
        trace,
        evaluations: evals,
        exhausted,
    }
}

/// Full parameter set of a cascade against a displaced SSV target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeParams {
    pub alpha: f64,
    pub thetas: Vec<f64>,
    pub beta: f64,
    pub xi: f64,
    pub delta: f64,
}

impl CascadeParams {
    pub fn from_r(alpha: f64, rs: &[f64], beta: f64, xi: f64, delta: f64) -> Result<Self> {
        let thetas = rs
            .iter()
            .map(|&r| BeamsplitterParam::from_r(r).map(|b| b.theta))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            alpha,
            thetas,
            beta,
            xi,
            delta,
        })
    }

    pub fn r2s(&self) -> Vec<f64> {
        self.thetas.iter().map(|&t| t.sin().powi(2)).collect()
    }

    pub fn steps(&self, detections: &[usize]) -> Result<Vec<CatalysisStep>> {
        if detections.len() != self.thetas.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} detections for {} beamsplitters",
                detections.len(),
                self.thetas.len()
            )));
        }
        Ok(self
            .thetas
            .iter()
            .zip(detections)
            .map(|(&t, &n)| CatalysisStep::ideal(BeamsplitterParam::new(t), n))
            .collect())
    }

    fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.alpha];
        v.extend(&self.thetas);
        v.extend([self.beta, self.xi, self.delta]);
        v
    }

    fn from_vec(v: &[f64]) -> Self {
        let n = v.len() - 4;
        Self {
            alpha: v[0],
            thetas: v[1..=n].to_vec(),
            beta: v[n + 1],
            xi: v[n + 2],
            delta: v[n + 3],
        }
    }
}

/// Box for the cascade parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchBounds {
    pub alpha: (f64, f64),
    pub theta: (f64, f64),
    pub beta: (f64, f64),
    pub xi: (f64, f64),
    pub delta: (f64, f64),
}

impl Default for SearchBounds {
    fn default() -> Self {
        Self {
            alpha: (0.05, 5.5),
            theta: (0.05, FRAC_PI_2 - 0.05),
            beta: (0.0, 3.0),
            xi: (-1.2, 0.6),
            delta: (-4.0, 4.0),
        }
    }
}

impl SearchBounds {
    fn boxes(&self, n_steps: usize) -> Vec<(f64, f64)> {
        let mut b = vec![self.alpha];
        b.extend(std::iter::repeat_n(self.theta, n_steps));
        b.extend([self.beta, self.xi, self.delta]);
        b
    }
}

/// Which of α, θ's, β, ξ, δ are optimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeSet {
    All,
    /// Only the target (β, ξ, δ).
    Target,
    /// α, θ's and δ; target shape fixed.
    Protocol,
}

impl FreeSet {
    fn mask(self, n_steps: usize) -> Vec<bool> {
        let mut m = vec![!matches!(self, FreeSet::Target)];
        m.extend(std::iter::repeat_n(!matches!(self, FreeSet::Target), n_steps));
        let target_shape = !matches!(self, FreeSet::Protocol);
        m.extend([target_shape, target_shape, true]);
        m
    }
}

/// A cascade with its detection tuple and target family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeProblem {
    pub detections: Vec<usize>,
    pub m: usize,
    pub parity: Parity,
    pub cutoff: usize,
}

/// Unnormalized catalysed amplitudes (norm² = success probability).
pub fn cascade_output(alpha: f64, steps: &[CatalysisStep], cutoff: usize) -> Result<(FockVector, f64)> {
    let psi = coherent_vector(C64::from(alpha), cutoff);
    let raw = cascaded_closed_form_raw(psi.amplitudes().as_slice(), steps)?;
    Ok((FockVector::new(raw.amplitudes)?, raw.probability))
}

impl CascadeProblem {
    /// (fidelity, probability) at the given parameters.
    pub fn evaluate(&self, p: &CascadeParams) -> Result<(f64, f64)> {
        let steps = self.steps(p)?;
        let (phi, prob) = cascade_output(p.alpha, &steps, self.cutoff)?;
        if !(prob >= crate::fock::PROB_FLOOR) {
            return Err(Error::ImpossibleOutcome {
                probability: prob,
                step: None,
            });
        }
        let target = SsvTarget::new(self.m, p.beta, p.xi, self.parity, p.delta);
        Ok((target.fidelity(&phi)?, prob))
    }

    fn steps(&self, p: &CascadeParams) -> Result<Vec<CatalysisStep>> {
        p.steps(&self.detections)
    }
}

/// Optimization outcome for one detection tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub detections: Vec<usize>,
    pub parity: Parity,
    pub fidelity: f64,
    pub probability: f64,
    pub params: CascadeParams,
    pub exhausted: bool,
}

impl ExperimentResult {
    pub fn r2s(&self) -> Vec<f64> {
        self.params.r2s()
    }
}

/// Maximize the fidelity of one tuple over the free parameters, starting at `start`.
pub fn optimize_tuple(
    problem: &CascadeProblem,
    start: &CascadeParams,
    free: FreeSet,
    bounds: &SearchBounds,
    cfg: &NelderMeadConfig,
) -> Result<ExperimentResult> {
    let n_steps = problem.detections.len();
    if start.thetas.len() != n_steps {
        return Err(Error::DimensionMismatch("start parameters do not match the tuple".into()));
    }
    let full = start.to_vec();
    let mask = free.mask(n_steps);
    let boxes = bounds.boxes(n_steps);
    let idx: Vec<usize> = (0..full.len()).filter(|&i| mask[i]).collect();
    let sub_bounds: Vec<(f64, f64)> = idx.iter().map(|&i| boxes[i]).collect();
    let assemble = |x: &[f64]| {
        let mut v = full.clone();
        for (k, &i) in idx.iter().enumerate() {
            v[i] = x[k];
        }
        CascadeParams::from_vec(&v)
    };
    let objective = |x: &[f64]| match problem.evaluate(&assemble(x)) {
        Ok((f, _)) => f,
        Err(e) => {
            log::trace!("objective penalty: {e}");
            PENALTY
        }
    };
    let x0: Vec<f64> = idx.iter().map(|&i| full[i]).collect();
    let res = nelder_mead(objective, &sub_bounds, Some(&x0), cfg)?;
    let params = assemble(&res.x);
    let (fidelity, probability) = problem.evaluate(&params)?;
    Ok(ExperimentResult {
        detections: problem.detections.clone(),
        parity: problem.parity,
        fidelity,
        probability,
        params,
        exhausted: res.exhausted,
    })
}

/// Every tuple in {0..n_bound}^N in lexicographic order.
pub fn detection_tuples(n_steps: usize, n_bound: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n_steps {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..n_bound).map(move |n| {
                    let mut t = t.clone();
                    t.push(n);
                    t
                })
            })
            .collect();
    }
    out
}

/// Search configuration for `optimize_cascade`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeSearch {
    pub n_steps: usize,
    /// Each detection n_i < n_bound.
    pub n_bound: usize,
    pub m: usize,
    pub parities: Vec<Parity>,
    pub cutoff: usize,
    pub bounds: SearchBounds,
    pub nm: NelderMeadConfig,
    /// Restrict to these tuples instead of the full enumeration.
    #[serde(default)]
    pub tuples: Option<Vec<Vec<usize>>>,
}

impl CascadeSearch {
    pub fn new(n_steps: usize) -> Self {
        Self {
            n_steps,
            n_bound: 10,
            m: 2,
            parities: vec![Parity::Even, Parity::Odd],
            cutoff: crate::fock::DEFAULT_CUTOFF,
            bounds: SearchBounds::default(),
            nm: NelderMeadConfig::default(),
            tuples: None,
        }
    }
}

fn tuple_seed(seed: u64, tuple: &[usize], parity: Parity) -> u64 {
    tuple
        .iter()
        .fold(seed ^ (parity == Parity::Odd) as u64, |h, &n| h.wrapping_mul(0x100000001b3).wrapping_add(n as u64 + 1))
}

/// Optimize all parameters per detection tuple and parity; results ranked
/// by fidelity, then probability.
pub fn optimize_cascade(search: &CascadeSearch) -> Result<Vec<ExperimentResult>> {
    if search.n_steps == 0 || search.n_steps > 4 {
        return Err(Error::InvalidParameter(format!("N = {} outside 1..=4", search.n_steps)));
    }
    let tuples = search
        .tuples
        .clone()
        .unwrap_or_else(|| detection_tuples(search.n_steps, search.n_bound));
    let b = &search.bounds;
    let start = CascadeParams {
        alpha: 0.5 * (b.alpha.0 + b.alpha.1),
        thetas: vec![0.5 * (b.theta.0 + b.theta.1); search.n_steps],
        beta: 0.5 * (b.beta.0 + b.beta.1),
        xi: 0.5 * (b.xi.0 + b.xi.1),
        delta: 0.5 * (b.delta.0 + b.delta.1),
    };
    let jobs: Vec<(Vec<usize>, Parity)> = tuples
        .iter()
        .flat_map(|t| search.parities.iter().map(move |&p| (t.clone(), p)))
        .collect();
    let mut results: Vec<ExperimentResult> = jobs
        .par_iter()
        .map(|(t, parity)| {
            let problem = CascadeProblem {
                detections: t.clone(),
                m: search.m,
                parity: *parity,
                cutoff: search.cutoff,
            };
            let nm = search.nm.with_seed(tuple_seed(search.nm.seed, t, *parity));
            optimize_tuple(&problem, &start, FreeSet::All, &search.bounds, &nm).ok()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    results.sort_by(|a, b| {
        b.fidelity
            .total_cmp(&a.fidelity)
            .then(b.probability.total_cmp(&a.probability))
    });
    Ok(results)
}

/// Reference protocol: fixed α and θ's, the tuple they were optimized for,
/// and the target it reaches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseProtocol {
    pub params: CascadeParams,
    pub detections: Vec<usize>,
    pub m: usize,
    pub parity: Parity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TupleFit {
    pub detections: Vec<usize>,
    pub probability: f64,
    pub fidelity: f64,
    pub beta: f64,
    pub xi: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptList {
    pub threshold: f64,
    pub entries: Vec<TupleFit>,
    pub probability: f64,
    pub base_probability: f64,
}

impl AcceptList {
    /// Entries with F ≥ threshold, plus the base tuple itself.
    pub fn from_fits(fits: &[TupleFit], base: &[usize], threshold: f64) -> Self {
        let entries: Vec<TupleFit> = fits
            .iter()
            .filter(|f| f.detections == base || f.fidelity >= threshold)
            .cloned()
            .collect();
        let probability = entries.iter().map(|e| e.probability).sum();
        let base_probability = fits
            .iter()
            .find(|f| f.detections == base)
            .map(|f| f.probability)
            .unwrap_or(0.0);
        Self {
            threshold,
            entries,
            probability,
            base_probability,
        }
    }

    pub fn ratio(&self) -> f64 {
        self.probability / self.base_probability
    }
}

/// Bounds for re-fitting the target of a deviating tuple: β within a
/// factor of two of the base value.
pub fn refit_bounds(base: &CascadeParams) -> SearchBounds {
    let b = base.beta.abs();
    SearchBounds {
        beta: (0.5 * b, 2.0 * b),
        ..SearchBounds::default()
    }
}

/// Re-fit (β, ξ, δ) for every tuple in {0..n_bound}^N whose probability at
/// the base parameters is at least `PRUNE_PROBABILITY`. Lexicographic order.
pub fn threshold_fits(base: &BaseProtocol, n_bound: usize, cutoff: usize, cfg: &NelderMeadConfig) -> Result<Vec<TupleFit>> {
    let n_steps = base.params.thetas.len();
    if base.detections.len() != n_steps {
        return Err(Error::DimensionMismatch("base tuple length".into()));
    }
    let bounds = refit_bounds(&base.params);
    let tuples = detection_tuples(n_steps, n_bound);
    let fits = tuples
        .par_iter()
        .map(|t| -> Result<Option<TupleFit>> {
            let steps = base.params.steps(t)?;
            let (phi, prob) = cascade_output(base.params.alpha, &steps, cutoff)?;
            if prob < PRUNE_PROBABILITY {
                return Ok(None);
            }
            let problem = CascadeProblem {
                detections: t.clone(),
                m: base.m,
                parity: base.parity,
                cutoff,
            };
            // two starts: the base target and one centred on ⟨a⟩
            let mean_a = mean_annihilation(&phi).re;
            let mut best: Option<ExperimentResult> = None;
            for delta0 in [base.params.delta, mean_a] {
                let start = CascadeParams {
                    delta: delta0.clamp(bounds.delta.0, bounds.delta.1),
                    ..base.params.clone()
                };
                let nm = cfg.with_seed(tuple_seed(cfg.seed, t, base.parity)).with_restarts(1);
                let r = optimize_tuple(&problem, &start, FreeSet::Target, &bounds, &nm)?;
                if best.as_ref().is_none_or(|b| r.fidelity > b.fidelity) {
                    best = Some(r);
                }
            }
            let r = best.expect("two starts");
            Ok(Some(TupleFit {
                detections: t.clone(),
                probability: prob,
                fidelity: r.fidelity,
                beta: r.params.beta,
                xi: r.params.xi,
                delta: r.params.delta,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(fits.into_iter().flatten().collect())
}

/// Aggregate success probability of all tuples reaching `f_thr`.
pub fn threshold_success(base: &BaseProtocol, f_thr: f64, n_bound: usize, cutoff: usize, cfg: &NelderMeadConfig) -> Result<AcceptList> {
    let fits = threshold_fits(base, n_bound, cutoff, cfg)?;
    Ok(AcceptList::from_fits(&fits, &base.detections, f_thr))
}

fn mean_annihilation(v: &FockVector) -> C64 {
    let n = v.norm_sqr();
    (1..=v.cutoff())
        .map(|k| v.amplitude(k - 1).conj() * v.amplitude(k) * (k as f64).sqrt())
        .sum::<C64>()
        / n
}

/// Append results to a CSV ledger (header written when `header` is set).
pub fn write_ledger<W: Write>(results: &[ExperimentResult], w: W, header: bool) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    let io = |e: csv::Error| Error::InvalidParameter(format!("csv write: {e}"));
    if header {
        wr.write_record(["tuple", "parity", "fidelity", "probability", "alpha", "r2", "beta", "xi", "delta", "exhausted"])
            .map_err(io)?;
    }
    let join = |v: &[f64]| v.iter().map(|x| format!("{x:.8}")).collect::<Vec<_>>().join(";");
    for r in results {
        let tuple = r.detections.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(";");
        wr.write_record([
            tuple,
            format!("{:?}", r.parity).to_lowercase(),
            format!("{:.10}", r.fidelity),
            format!("{:.6e}", r.probability),
            format!("{:.8}", r.params.alpha),
            join(&r.r2s()),
            format!("{:.8}", r.params.beta),
            format!("{:.8}", r.params.xi),
            format!("{:.8}", r.params.delta),
            r.exhausted.to_string(),
        ])
        .map_err(io)?;
    }
    wr.flush().map_err(|e| Error::InvalidParameter(format!("csv write: {e}")))?;
    Ok(())
}
