use std::path::Path;

use anyhow::{anyhow, Result};
use fockcat::breeding::{breed, breed_hex, breed_sweep, fit_gkp, GkpFit, WidthChoice};
use fockcat::catalysis::{cascade, catalyze_step, displaced_photon, displaced_photon_fidelity, paris_displacement_mixture, CatalysisStep};
use fockcat::fock::{fidelity, State, DEFAULT_CUTOFF};
use fockcat::gaussian::{coherent_vector, BeamsplitterParam};
use fockcat::io::{Experiment, StateFile};
use fockcat::optimize::{
    nelder_mead, optimize_cascade, optimize_tuple, threshold_fits, write_ledger, AcceptList, BaseProtocol, CascadeParams,
    CascadeProblem, CascadeSearch, ExperimentResult, FreeSet, NelderMeadConfig, SearchBounds, PENALTY,
};
use fockcat::targets::{GkpLogical, TargetKind, TargetSpec};
use fockcat::wigner::{wigner_grid, GridSpec};
use num_complex::Complex64 as C64;
use serde::Serialize;
use serde_json::json;

use crate::manifest::{load, BreedManifest, HexManifest, OptimizeManifest, SweepManifest, ThresholdManifest};
use crate::output::{write_atomic, OutDir};
use crate::{Cli, Command, DisplaceArgs};

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Displace(a) => displace(cli, a),
        Command::Catalyze { manifest, fit_target } => catalyze(cli, manifest, *fit_target),
        Command::Optimize { manifest } => optimize(cli, manifest),
        Command::Threshold { manifest } => threshold(cli, manifest),
        Command::Breed { manifest } => breed_cmd(cli, manifest),
        Command::Hex { manifest } => hex(cli, manifest),
        Command::Sweep { manifest } => sweep(cli, manifest),
        Command::Wigner {
            state,
            half_width,
            points,
        } => wigner(cli, state, *half_width, *points),
    }
}

fn check_tail(state: &State, tol: f64) -> Result<f64> {
    let tail = state.tail_mass();
    if tail > tol {
        return Err(fockcat::Error::Truncation { tail, limit: tol }.into());
    }
    Ok(tail)
}

fn mean_photon_number(state: &State) -> f64 {
    let d = state.to_density().diagonal();
    d.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
}

fn manifest_dir(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}

fn emit<T: Serialize>(out: &OutDir, record: &T) -> Result<()> {
    out.write_json("result.json", record)?;
    println!("{}", serde_json::to_string_pretty(record)?);
    Ok(())
}

fn write_state(out: &OutDir, state: &State, meta: serde_json::Value) -> Result<String> {
    let path = out.write_json("state.json", &StateFile::from_state(state).with_meta(meta))?;
    Ok(path.display().to_string())
}

#[derive(Serialize)]
struct DisplaceResult {
    fidelity: f64,
    probability: f64,
    beta: f64,
    beta_optimized: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_form_fidelity: Option<f64>,
    tail_mass: f64,
}

fn displace(cli: &Cli, a: &DisplaceArgs) -> Result<()> {
    let cutoff = cli.cutoff.unwrap_or(DEFAULT_CUTOFF);
    let seed = cli.seed.unwrap_or(0);
    let bs = match (a.r2, a.theta) {
        (Some(r2), None) => BeamsplitterParam::from_r2(r2)?,
        (None, Some(t)) => BeamsplitterParam::new(t),
        _ => return Err(anyhow!("give exactly one of --r2, --theta")),
    };
    let alpha = C64::from(a.alpha);
    let (state, probability) = if a.paris {
        (State::Mixed(paris_displacement_mixture(alpha, bs, cutoff)?), 1.0)
    } else {
        let step = CatalysisStep::ideal(bs, a.n).with_eta(a.eta);
        step.validate()?;
        catalyze_step(&State::Pure(coherent_vector(alpha, cutoff)), &step)?
    };
    let tail_mass = check_tail(&state, cli.tail_tol)?;
    let score = |b: f64| -> fockcat::Result<f64> { fidelity(&state, &State::Pure(displaced_photon(C64::from(b), cutoff)?)) };
    let (beta, beta_optimized) = match a.beta {
        Some(b) => (b, false),
        None => {
            let guess = if a.paris {
                a.alpha * bs.t()
            } else {
                a.alpha.signum() * (a.alpha * a.alpha - a.n as f64 / a.eta).max(0.0).sqrt()
            };
            let span = a.alpha.abs() + 2.0;
            let cfg = NelderMeadConfig::default().with_restarts(1).with_seed(seed);
            let r = nelder_mead(|x| score(x[0]).unwrap_or(PENALTY), &[(-span, span)], Some(&[guess]), &cfg)?;
            (r.x[0], true)
        }
    };
    let record = DisplaceResult {
        fidelity: score(beta)?,
        probability,
        beta,
        beta_optimized,
        closed_form_fidelity: (!a.paris && a.eta == 1.0).then(|| displaced_photon_fidelity(a.alpha, bs, a.n, beta)),
        tail_mass,
    };
    let out = OutDir::new(&cli.out_dir, "displace")?;
    let params = json!({
        "alpha": a.alpha, "r2": bs.r2(), "theta": bs.theta, "n": a.n, "eta": a.eta,
        "beta": a.beta, "paris": a.paris,
    });
    write_state(&out, &state, params.clone())?;
    out.write_manifest(params, seed, cutoff, cli.tail_tol)?;
    emit(&out, &record)
}

#[derive(Serialize)]
struct CatalyzeResult {
    probability: f64,
    step_probabilities: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target: Option<TargetSpec>,
    mean_photon_number: f64,
    tail_mass: f64,
    state_file: String,
}

/// Maximize F over the real parts of an SSV target's β, ξ and restoring displacement.
fn fit_ssv(state: &State, spec: &TargetSpec, cutoff: usize, seed: u64) -> Result<TargetSpec> {
    let TargetKind::Ssv { m, beta, xi, parity } = spec.kind else {
        return Err(fockcat::Error::InvalidParameter("--fit-target needs an ssv target".into()).into());
    };
    let d0 = spec.restoring.unwrap_or_default();
    let make = |x: &[f64]| {
        TargetSpec::new(TargetKind::Ssv {
            m,
            beta: C64::new(x[0], beta.im),
            xi: C64::new(x[1], xi.im),
            parity,
        })
        .with_restoring(C64::new(x[2], d0.im))
    };
    let score = |x: &[f64]| -> fockcat::Result<f64> { fidelity(state, &make(x).build(cutoff)?) };
    let bounds = [
        (beta.re - 1.5, beta.re + 1.5),
        (xi.re.min(-1.2), xi.re.max(0.6)),
        (d0.re - 3.0, d0.re + 3.0),
    ];
    let cfg = NelderMeadConfig::default().with_restarts(4).with_seed(seed);
    let r = nelder_mead(|x| score(x).unwrap_or(PENALTY), &bounds, Some(&[beta.re, xi.re, d0.re]), &cfg)?;
    Ok(make(&r.x))
}

fn catalyze(cli: &Cli, path: &Path, fit_target: bool) -> Result<()> {
    let e: Experiment = load(path)?;
    let cutoff = cli.cutoff.or(e.cutoff).unwrap_or(DEFAULT_CUTOFF);
    let seed = cli.seed.unwrap_or(0);
    let steps = e.validate()?;
    let input = e.input.build(cutoff)?;
    let res = cascade(&input, &steps)?;
    let tail_mass = check_tail(&res.state, cli.tail_tol)?;
    let target = match (&e.target, fit_target) {
        (Some(t), true) => Some(fit_ssv(&res.state, t, cutoff, seed)?),
        (Some(t), false) => Some(t.clone()),
        (None, true) => return Err(fockcat::Error::InvalidParameter("--fit-target without a target".into()).into()),
        (None, false) => None,
    };
    let fid = target.as_ref().map(|t| fidelity(&res.state, &t.build(cutoff)?)).transpose()?;
    let out = OutDir::new(&cli.out_dir, "catalyze")?;
    let params = json!({ "experiment": e, "fit_target": fit_target });
    let state_file = write_state(&out, &res.state, params.clone())?;
    out.write_manifest(params, seed, cutoff, cli.tail_tol)?;
    emit(
        &out,
        &CatalyzeResult {
            probability: res.probability,
            step_probabilities: res.step_probabilities,
            fidelity: fid,
            target,
            mean_photon_number: mean_photon_number(&res.state),
            tail_mass,
            state_file,
        },
    )
}

#[derive(Serialize)]
struct OptimizeResult {
    evaluated: usize,
    best: Option<ExperimentResult>,
    ledger: String,
}

fn optimize(cli: &Cli, path: &Path) -> Result<()> {
    let m: OptimizeManifest = load(path)?;
    let cutoff = cli.cutoff.or(m.cutoff).unwrap_or(DEFAULT_CUTOFF);
    let seed = cli.seed.unwrap_or(m.optimizer.seed);
    let search = CascadeSearch {
        n_steps: m.n_steps,
        n_bound: m.n_bound,
        m: m.m,
        parities: m.parities.clone(),
        cutoff,
        bounds: m.bounds,
        nm: m.optimizer.with_seed(seed),
        tuples: m.tuples.clone(),
    };
    let results = optimize_cascade(&search)?;
    let out = OutDir::new(&cli.out_dir, "optimize")?;
    let ledger = out.path("ledger.csv");
    let existing = std::fs::read(&ledger).ok();
    let header = existing.is_none();
    let mut buf = existing.unwrap_or_default();
    write_ledger(&results, &mut buf, header)?;
    write_atomic(&ledger, &buf)?;
    out.write_manifest(serde_json::to_value(&search)?, seed, cutoff, cli.tail_tol)?;
    emit(
        &out,
        &OptimizeResult {
            evaluated: results.len(),
            best: results.first().cloned(),
            ledger: ledger.display().to_string(),
        },
    )
}

#[derive(Serialize)]
struct ThresholdLevel {
    threshold: f64,
    probability: f64,
    base_probability: f64,
    ratio: f64,
    accepted: usize,
}

#[derive(Serialize)]
struct ThresholdResult {
    base: BaseProtocol,
    base_fidelity: f64,
    tuples_fitted: usize,
    levels: Vec<ThresholdLevel>,
}

fn threshold(cli: &Cli, path: &Path) -> Result<()> {
    let m: ThresholdManifest = load(path)?;
    let cutoff = cli.cutoff.or(m.cutoff).unwrap_or(DEFAULT_CUTOFF);
    let seed = cli.seed.unwrap_or(m.optimizer.seed);
    let nm = m.optimizer.with_seed(seed);
    let problem = CascadeProblem {
        detections: m.detections.clone(),
        m: m.m,
        parity: m.parity,
        cutoff,
    };
    let mut params = CascadeParams::from_r(m.alpha, &m.r, m.beta, m.xi, m.delta)?;
    if m.refit_base {
        params = optimize_tuple(&problem, &params, FreeSet::Target, &SearchBounds::default(), &nm)?.params;
    }
    let (base_fidelity, _) = problem.evaluate(&params)?;
    let base = BaseProtocol {
        params,
        detections: m.detections.clone(),
        m: m.m,
        parity: m.parity,
    };
    let fits = threshold_fits(&base, m.n_bound, cutoff, &nm)?;
    let levels = m
        .thresholds
        .iter()
        .map(|&t| {
            let a = AcceptList::from_fits(&fits, &base.detections, t);
            ThresholdLevel {
                threshold: t,
                probability: a.probability,
                base_probability: a.base_probability,
                ratio: a.ratio(),
                accepted: a.entries.len(),
            }
        })
        .collect();
    let out = OutDir::new(&cli.out_dir, "threshold")?;
    let mut wr = csv::Writer::from_writer(Vec::new());
    wr.write_record(["tuple", "probability", "fidelity", "beta", "xi", "delta"])?;
    for f in &fits {
        let tuple = f.detections.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(";");
        wr.write_record([
            tuple,
            format!("{:.6e}", f.probability),
            format!("{:.10}", f.fidelity),
            format!("{:.8}", f.beta),
            format!("{:.8}", f.xi),
            format!("{:.8}", f.delta),
        ])?;
    }
    out.write_bytes("fits.csv", &wr.into_inner().map_err(|e| anyhow!("csv: {e}"))?)?;
    out.write_manifest(serde_json::to_value(&m)?, seed, cutoff, cli.tail_tol)?;
    emit(
        &out,
        &ThresholdResult {
            base,
            base_fidelity,
            tuples_fitted: fits.len(),
            levels,
        },
    )
}

#[derive(Serialize)]
struct LabelledFit {
    logical: GkpLogical,
    d: usize,
    #[serde(flatten)]
    fit: GkpFit,
}

#[derive(Serialize)]
struct BreedResult {
    probability: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    gkp_fits: Vec<LabelledFit>,
    mean_photon_number: f64,
    tail_mass: f64,
    state_file: String,
}

fn breed_cmd(cli: &Cli, path: &Path) -> Result<()> {
    let m: BreedManifest = load(path)?;
    let cutoff = cli.cutoff.or(m.cutoff).unwrap_or(DEFAULT_CUTOFF);
    let seed = cli.seed.unwrap_or(0);
    let base = manifest_dir(path);
    let a = m.a.build(cutoff, base)?;
    let b = match &m.b {
        Some(s) => s.build(cutoff, base)?,
        None => a.clone(),
    };
    let (state, probability) = breed(&a, &b, &m.config)?;
    let tail_mass = check_tail(&state, cli.tail_tol)?;
    let fid = m
        .target
        .as_ref()
        .map(|t| fidelity(&state, &t.build(state.cutoff())?))
        .transpose()?;
    let nm = NelderMeadConfig::default().with_seed(seed);
    let mut gkp_fits = Vec::new();
    for spec in &m.gkp_fits {
        let v = state
            .as_pure()
            .ok_or_else(|| fockcat::Error::InvalidParameter("GKP fits need a pure bred state".into()))?;
        gkp_fits.push(LabelledFit {
            logical: spec.logical,
            d: spec.d,
            fit: fit_gkp(v, spec.lattice, spec.d, spec.logical, spec.width, &nm)?,
        });
    }
    let out = OutDir::new(&cli.out_dir, "breed")?;
    let params = serde_json::to_value(&m)?;
    let state_file = write_state(&out, &state, params.clone())?;
    out.write_manifest(params, seed, cutoff, cli.tail_tol)?;
    emit(
        &out,
        &BreedResult {
            probability,
            fidelity: fid,
            gkp_fits,
            mean_photon_number: mean_photon_number(&state),
            tail_mass,
            state_file,
        },
    )
}

#[derive(Serialize)]
struct HexResult {
    probability: f64,
    width: f64,
    fits: Vec<LabelledFit>,
    mean_photon_number: f64,
    state_file: String,
}

fn hex(cli: &Cli, path: &Path) -> Result<()> {
    let m: HexManifest = load(path)?;
    let cutoff = cli.cutoff.or(m.cutoff).unwrap_or(DEFAULT_CUTOFF);
    let seed = cli.seed.unwrap_or(0);
    let input = m.input.build(cutoff, manifest_dir(path))?;
    let v = input
        .as_pure()
        .ok_or_else(|| fockcat::Error::InvalidParameter("hex breeding needs a pure input".into()))?;
    let (bred, probability) = breed_hex(v, v, m.n)?;
    let state = State::Pure(bred.clone());
    check_tail(&state, cli.tail_tol)?;
    let nm = NelderMeadConfig::default().with_seed(seed);
    let fits = m
        .logicals
        .iter()
        .map(|&logical| -> Result<LabelledFit> {
            Ok(LabelledFit {
                logical,
                d: m.d,
                fit: fit_gkp(&bred, fockcat::targets::Lattice::Hexagonal, m.d, logical, WidthChoice::Fixed(m.width), &nm)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let out = OutDir::new(&cli.out_dir, "hex")?;
    let params = serde_json::to_value(&m)?;
    let state_file = write_state(&out, &state, params.clone())?;
    out.write_manifest(params, seed, cutoff, cli.tail_tol)?;
    emit(
        &out,
        &HexResult {
            probability,
            width: m.width,
            fits,
            mean_photon_number: mean_photon_number(&state),
            state_file,
        },
    )
}

#[derive(Serialize)]
struct SweepResult {
    points: usize,
    best_beta: f64,
    best_xi: f64,
    best_fidelity: f64,
    best_probability: f64,
    csv: String,
}

fn sweep(cli: &Cli, path: &Path) -> Result<()> {
    let m: SweepManifest = load(path)?;
    let cutoff = cli.cutoff.or(m.cutoff).unwrap_or(DEFAULT_CUTOFF);
    let (betas, xis) = (m.betas.values(), m.xis.values());
    if betas.is_empty() || xis.is_empty() {
        return Err(fockcat::Error::InvalidParameter("sweep axes must be non-empty".into()).into());
    }
    let map = breed_sweep(m.m, &betas, &xis, cutoff)?;
    let mut best = (0, 0);
    for i in 0..betas.len() {
        for j in 0..xis.len() {
            if map.fidelity[i][j] > map.fidelity[best.0][best.1] {
                best = (i, j);
            }
        }
    }
    let out = OutDir::new(&cli.out_dir, "sweep")?;
    let mut buf = Vec::new();
    map.write_csv(&mut buf)?;
    let csv_path = out.write_bytes("csv", &buf)?;
    out.write_manifest(serde_json::to_value(&m)?, cli.seed.unwrap_or(0), cutoff, cli.tail_tol)?;
    emit(
        &out,
        &SweepResult {
            points: betas.len() * xis.len(),
            best_beta: betas[best.0],
            best_xi: xis[best.1],
            best_fidelity: map.fidelity[best.0][best.1],
            best_probability: map.probability[best.0][best.1],
            csv: csv_path.display().to_string(),
        },
    )
}

#[derive(Serialize)]
struct WignerResult {
    integral: f64,
    min: f64,
    negative_volume: f64,
    argmax: (f64, f64),
    csv: String,
}

fn wigner(cli: &Cli, path: &Path, half_width: f64, points: usize) -> Result<()> {
    let f: StateFile = load(path)?;
    let state = f.to_state()?;
    check_tail(&state, cli.tail_tol)?;
    if !(half_width > 0.0) || points < 2 {
        return Err(fockcat::Error::InvalidParameter("grid needs half-width > 0 and at least 2 points".into()).into());
    }
    let spec = GridSpec::square(half_width, points);
    let grid = wigner_grid(&state, &spec)?;
    let out = OutDir::new(&cli.out_dir, "wigner")?;
    let mut buf = Vec::new();
    grid.write_csv(&mut buf)?;
    let csv_path = out.write_bytes("csv", &buf)?;
    out.write_json("meta.json", &grid.metadata(&path.display().to_string()))?;
    let params = json!({ "state": path.display().to_string(), "grid": spec });
    out.write_manifest(params, cli.seed.unwrap_or(0), state.cutoff(), cli.tail_tol)?;
    let (min, negative_volume) = grid.negativity();
    emit(
        &out,
        &WignerResult {
            integral: grid.integral(),
            min,
            negative_volume,
            argmax: grid.argmax(),
            csv: csv_path.display().to_string(),
        },
    )
}
