//! Truncated Fock-space states: pure vectors, joint vectors and density
//! operators over up to a few modes, with the measurement and channel
//! operations needed by the catalysis pipeline.
//!
//! Multi-mode indices are row-major with the last mode fastest, so the
//! Kronecker product `a ⊗ b` puts mode 0 (a) outermost.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const DEFAULT_CUTOFF: usize = 60;
pub const DEFAULT_TAIL_TOL: f64 = 1e-8;
pub const PROB_FLOOR: f64 = 1e-14;
/// Largest dense matrix (in elements) any operation may allocate.
pub const MEMORY_BUDGET: usize = 1 << 25;

const HERMITIAN_TOL: f64 = 1e-10;
const POSITIVITY_TOL: f64 = 1e-6;

fn check_budget(elements: usize) -> Result<()> {
    if elements > MEMORY_BUDGET {
        return Err(Error::ResourceLimit {
            dim: elements,
            budget: MEMORY_BUDGET,
        });
    }
    Ok(())
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// For every index of the reduced space (mode removed) and every value k of
/// the removed mode, the flat index into the full space.
fn embed_table(dims: &[usize], mode: usize) -> Vec<Vec<usize>> {
    let full = strides(dims);
    let reduced_dims: Vec<usize> = dims
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != mode)
        .map(|(_, &d)| d)
        .collect();
    let rs = strides(&reduced_dims);
    let rdim: usize = reduced_dims.iter().product();
    (0..rdim)
        .map(|r| {
            let mut base = 0;
            let mut j = 0;
            for (i, &st) in full.iter().enumerate() {
                if i == mode {
                    continue;
                }
                base += ((r / rs[j]) % reduced_dims[j]) * st;
                j += 1;
            }
            (0..dims[mode]).map(|k| base + k * full[mode]).collect()
        })
        .collect()
}

fn check_mode(mode: usize, modes: usize) -> Result<()> {
    if mode >= modes {
        return Err(Error::InvalidMode { index: mode, modes });
    }
    Ok(())
}

/// Probability mass above `cutoff - 5`, relative to the total.
fn tail_fraction(diag: impl Iterator<Item = f64>, cutoff: usize) -> f64 {
    let start = cutoff.saturating_sub(4);
    let mut total = 0.0;
    let mut tail = 0.0;
    for (n, p) in diag.enumerate() {
        total += p;
        if n >= start {
            tail += p;
        }
    }
    if total > 0.0 {
        tail / total
    } else {
        0.0
    }
}

/// Pure single-mode state over |0⟩..|cutoff⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    amps: DVector<C64>,
}

impl FockVector {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        Self::from_dvector(DVector::from_vec(amps))
    }

    pub fn from_dvector(amps: DVector<C64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "cutoff must be at least 1 (got {} amplitudes)",
                amps.len()
            )));
        }
        Ok(Self { amps })
    }

    pub fn basis(n: usize, cutoff: usize) -> Result<Self> {
        if n > cutoff {
            return Err(Error::InvalidParameter(format!(
                "basis state {n} above cutoff {cutoff}"
            )));
        }
        let mut amps = DVector::zeros(cutoff + 1);
        amps[n] = C64::new(1.0, 0.0);
        Self::from_dvector(amps)
    }

    pub fn vacuum(cutoff: usize) -> Result<Self> {
        Self::basis(0, cutoff)
    }

    pub fn cutoff(&self) -> usize {
        self.amps.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn amplitude(&self, n: usize) -> C64 {
        self.amps.get(n).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if !(n > 1e-150) || !n.is_finite() {
            return Err(Error::Unnormalizable(n));
        }
        Ok(Self {
            amps: self.amps.unscale(n),
        })
    }

    /// ⟨self|other⟩; dimensions may differ, missing amplitudes count as zero.
    pub fn inner(&self, other: &FockVector) -> C64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn mean_photon_number(&self) -> f64 {
        let norm = self.norm_sqr();
        self.amps
            .iter()
            .enumerate()
            .map(|(n, a)| n as f64 * a.norm_sqr())
            .sum::<f64>()
            / norm
    }

    pub fn tail_mass(&self) -> f64 {
        tail_fraction(self.amps.iter().map(|a| a.norm_sqr()), self.cutoff())
    }

    /// Log a truncation warning if the tail exceeds `tol`; returns the tail.
    pub fn warn_tail(&self, tol: f64, what: &str) -> f64 {
        let tail = self.tail_mass();
        if tail > tol {
            log::warn!("{what}: tail mass {tail:.3e} above cutoff {} exceeds {tol:.1e}", self.cutoff());
        }
        tail
    }

    pub fn check_tail(&self, tol: f64) -> Result<()> {
        let tail = self.tail_mass();
        if tail > tol {
            return Err(Error::Truncation { tail, limit: tol });
        }
        Ok(())
    }

    /// Pad with zeros or truncate to a new cutoff.
    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        let mut amps = DVector::zeros(cutoff.max(1) + 1);
        let n = amps.len().min(self.amps.len());
        amps.rows_mut(0, n).copy_from(&self.amps.rows(0, n));
        Self { amps }
    }

    pub fn apply(&self, op: &DMatrix<C64>) -> Result<Self> {
        if op.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "operator has {} columns, state has dimension {}",
                op.ncols(),
                self.dim()
            )));
        }
        Self::from_dvector(op * &self.amps)
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self {
            amps: &self.amps * factor,
        }
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator {
            matrix: &self.amps * self.amps.adjoint(),
            dims: vec![self.dim()],
        }
    }

    pub fn tensor(&self, other: &FockVector) -> Result<JointVector> {
        JointVector::product(&[self, other])
    }
}

/// Pure multi-mode state.
#[derive(Debug, Clone, PartialEq)]
pub struct JointVector {
    amps: DVector<C64>,
    dims: Vec<usize>,
}

impl JointVector {
    pub fn new(amps: DVector<C64>, dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d < 1) {
            return Err(Error::InvalidParameter("empty mode dimension".into()));
        }
        let total: usize = dims.iter().product();
        if total != amps.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for mode dimensions {dims:?}",
                amps.len()
            )));
        }
        check_budget(total)?;
        Ok(Self { amps, dims })
    }

    pub fn product(factors: &[&FockVector]) -> Result<Self> {
        let dims: Vec<usize> = factors.iter().map(|f| f.dim()).collect();
        let total: usize = dims.iter().product();
        check_budget(total)?;
        let mut amps = DVector::from_element(1, C64::new(1.0, 0.0));
        for f in factors {
            amps = amps.kronecker(f.amplitudes());
        }
        Self::new(amps, dims)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_modes(&self) -> usize {
        self.dims.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn get(&self, index: &[usize]) -> C64 {
        let s = strides(&self.dims);
        let flat: usize = index.iter().zip(&s).map(|(i, st)| i * st).sum();
        self.amps[flat]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Project `mode` onto |n⟩; returns the normalized remaining state and
    /// the outcome probability (relative to this state's norm).
    pub fn project_pnr(&self, mode: usize, n: usize) -> Result<(JointVector, f64)> {
        let (raw, p) = self.project_pnr_unnormalized(mode, n)?;
        let total = self.norm_sqr();
        let prob = p / total;
        if !(prob >= PROB_FLOOR) {
            return Err(Error::ImpossibleOutcome {
                probability: prob,
                step: None,
            });
        }
        let amps = raw.amps.unscale(p.sqrt());
        Ok((JointVector { amps, dims: raw.dims }, prob))
    }

    /// Unnormalized projection ⟨n|_mode ψ and its squared norm.
    pub fn project_pnr_unnormalized(&self, mode: usize, n: usize) -> Result<(JointVector, f64)> {
        check_mode(mode, self.num_modes())?;
        if self.num_modes() < 2 {
            return Err(Error::InvalidParameter(
                "projection needs at least two modes".into(),
            ));
        }
        if n >= self.dims[mode] {
            return Err(Error::InvalidParameter(format!(
                "outcome {n} above cutoff {}",
                self.dims[mode] - 1
            )));
        }
        let table = embed_table(&self.dims, mode);
        let amps = DVector::from_iterator(table.len(), table.iter().map(|row| self.amps[row[n]]));
        let p = amps.iter().map(|a| a.norm_sqr()).sum();
        let dims = self
            .dims
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != mode)
            .map(|(_, &d)| d)
            .collect();
        Ok((JointVector { amps, dims }, p))
    }

    /// View a single-mode joint vector as a FockVector.
    pub fn into_single(self) -> Result<FockVector> {
        if self.dims.len() != 1 {
            return Err(Error::DimensionMismatch(format!(
                "expected one mode, found {}",
                self.dims.len()
            )));
        }
        FockVector::from_dvector(self.amps)
    }

    pub fn to_density(&self) -> Result<DensityOperator> {
        check_budget(self.amps.len() * self.amps.len())?;
        Ok(DensityOperator {
            matrix: &self.amps * self.amps.adjoint(),
            dims: self.dims.clone(),
        })
    }
}

/// Density operator over one or more modes.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: DMatrix<C64>,
    dims: Vec<usize>,
}

impl DensityOperator {
    /// Validates shape and Hermiticity (elementwise, 1e-10).
    pub fn from_matrix(matrix: DMatrix<C64>, dims: Vec<usize>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if matrix.nrows() != total || matrix.ncols() != total || dims.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for mode dimensions {dims:?}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let rho = Self { matrix, dims };
        let dev = rho.hermiticity_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::InvalidParameter(format!(
                "matrix is not Hermitian (deviation {dev:.3e})"
            )));
        }
        Ok(rho)
    }

    pub fn single(matrix: DMatrix<C64>) -> Result<Self> {
        let d = matrix.nrows();
        Self::from_matrix(matrix, vec![d])
    }

    /// Convex combination Σ w_k |ψ_k⟩⟨ψ_k|.
    pub fn mixture(weights: &[f64], states: &[FockVector]) -> Result<Self> {
        let first = states
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        let d = first.dim();
        let mut m = DMatrix::zeros(d, d);
        for (w, s) in weights.iter().zip(states) {
            if s.dim() != d {
                return Err(Error::DimensionMismatch("mixture components differ in cutoff".into()));
            }
            if *w < 0.0 {
                return Err(Error::InvalidParameter("negative mixture weight".into()));
            }
            m += s.amplitudes() * s.amplitudes().adjoint() * C64::from(*w);
        }
        Ok(Self { matrix: m, dims: vec![d] })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_modes(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Cutoff of a single-mode operator.
    pub fn cutoff(&self) -> usize {
        self.dims[0] - 1
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let t = self.trace();
        if !(t > 1e-300) || !t.is_finite() {
            return Err(Error::Unnormalizable(t));
        }
        Ok(Self {
            matrix: self.matrix.unscale(t),
            dims: self.dims.clone(),
        })
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let d = self.dim();
        let mut dev: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                dev = dev.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.hermitian_part()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    fn hermitian_part(&self) -> DMatrix<C64> {
        (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0)
    }

    /// Photon-number distribution of a single-mode operator.
    pub fn diagonal(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn tail_mass(&self) -> f64 {
        tail_fraction(self.diagonal().into_iter(), self.dim() - 1)
    }

    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        if self.num_modes() != 1 {
            return Err(Error::DimensionMismatch("with_cutoff needs a single mode".into()));
        }
        let d = cutoff + 1;
        let mut m = DMatrix::zeros(d, d);
        let k = d.min(self.dim());
        m.view_mut((0, 0), (k, k)).copy_from(&self.matrix.view((0, 0), (k, k)));
        Ok(Self { matrix: m, dims: vec![d] })
    }

    pub fn tensor(&self, other: &DensityOperator) -> Result<Self> {
        let d = self.dim() * other.dim();
        check_budget(d * d)?;
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Ok(Self {
            matrix: self.matrix.kronecker(&other.matrix),
            dims,
        })
    }

    pub fn partial_trace(&self, mode: usize) -> Result<Self> {
        check_mode(mode, self.num_modes())?;
        if self.num_modes() < 2 {
            return Err(Error::InvalidParameter("partial trace needs at least two modes".into()));
        }
        let table = embed_table(&self.dims, mode);
        let r = table.len();
        let m = DMatrix::from_fn(r, r, |i, j| {
            table[i]
                .iter()
                .zip(&table[j])
                .map(|(&a, &b)| self.matrix[(a, b)])
                .sum()
        });
        let dims = self
            .dims
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != mode)
            .map(|(_, &d)| d)
            .collect();
        Ok(Self { matrix: m, dims })
    }

    /// Tr_mode[(|n⟩⟨n| ⊗ 1) ρ] without normalization.
    pub fn project_pnr_unnormalized(&self, mode: usize, n: usize) -> Result<Self> {
        check_mode(mode, self.num_modes())?;
        if self.num_modes() < 2 {
            return Err(Error::InvalidParameter("projection needs at least two modes".into()));
        }
        if n >= self.dims[mode] {
            return Err(Error::InvalidParameter(format!(
                "outcome {n} above cutoff {}",
                self.dims[mode] - 1
            )));
        }
        let table = embed_table(&self.dims, mode);
        let r = table.len();
        let m = DMatrix::from_fn(r, r, |i, j| self.matrix[(table[i][n], table[j][n])]);
        let dims = self
            .dims
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != mode)
            .map(|(_, &d)| d)
            .collect();
        Ok(Self { matrix: m, dims })
    }

    /// Project `mode` onto |n⟩; returns the normalized reduced operator and
    /// the outcome probability relative to this operator's trace.
    pub fn project_pnr(&self, mode: usize, n: usize) -> Result<(Self, f64)> {
        let raw = self.project_pnr_unnormalized(mode, n)?;
        let prob = raw.trace() / self.trace();
        if !(prob >= PROB_FLOOR) {
            return Err(Error::ImpossibleOutcome {
                probability: prob,
                step: None,
            });
        }
        Ok((raw.normalized()?, prob))
    }

    /// Lift a single-mode operator on `mode` to the full space.
    fn lift(&self, mode: usize, op: &DMatrix<C64>) -> DMatrix<C64> {
        let pre: usize = self.dims[..mode].iter().product();
        let post: usize = self.dims[mode + 1..].iter().product();
        let mut full = DMatrix::<C64>::identity(pre, pre).kronecker(op);
        if post > 1 {
            full = full.kronecker(&DMatrix::<C64>::identity(post, post));
        }
        full
    }

    /// Σ_k K_k ρ K_k† with each K_k acting on `mode` (possibly rectangular).
    pub fn apply_kraus(&self, mode: usize, ops: &[DMatrix<C64>]) -> Result<Self> {
        check_mode(mode, self.num_modes())?;
        let out_dim = ops
            .first()
            .ok_or_else(|| Error::InvalidParameter("no Kraus operators".into()))?
            .nrows();
        let mut dims = self.dims.clone();
        dims[mode] = out_dim;
        let total: usize = dims.iter().product();
        check_budget(total * total)?;
        let mut acc = DMatrix::zeros(total, total);
        for k in ops {
            if k.ncols() != self.dims[mode] || k.nrows() != out_dim {
                return Err(Error::DimensionMismatch("Kraus operator shape".into()));
            }
            if self.num_modes() == 1 {
                acc += k * &self.matrix * k.adjoint();
            } else {
                let f = self.lift(mode, k);
                acc += &f * &self.matrix * f.adjoint();
            }
        }
        Ok(Self { matrix: acc, dims })
    }

    /// U ρ U† for an operator on the full space.
    pub fn conjugate(&self, u: &DMatrix<C64>, out_dims: Vec<usize>) -> Result<Self> {
        let total: usize = out_dims.iter().product();
        if u.ncols() != self.dim() || u.nrows() != total {
            return Err(Error::DimensionMismatch("operator shape".into()));
        }
        check_budget(total * total)?;
        Ok(Self {
            matrix: u * &self.matrix * u.adjoint(),
            dims: out_dims,
        })
    }

    /// Photon loss of efficiency `eta` on `mode`: a beamsplitter with
    /// cos ξ = √η against a vacuum ancilla, ancilla traced out.
    pub fn apply_loss(&self, mode: usize, eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidParameter(format!("efficiency {eta} outside [0,1]")));
        }
        check_mode(mode, self.num_modes())?;
        let ops = crate::gaussian::loss_kraus(eta, self.dims[mode]);
        self.apply_kraus(mode, &ops)
    }

    pub fn expectation(&self, op: &DMatrix<C64>) -> C64 {
        (op * &self.matrix).trace()
    }

    /// Returns an error if the minimum eigenvalue is below −1e−6 (relative to the trace).
    pub fn check_positive(&self) -> Result<()> {
        let ev = self.min_eigenvalue();
        if ev < -POSITIVITY_TOL * self.trace().abs().max(1.0) {
            return Err(Error::NotPositive(ev));
        }
        Ok(())
    }

    /// Hermitian square root with eigenvalues clamped at zero.
    pub fn sqrt(&self) -> DMatrix<C64> {
        let eig = SymmetricEigen::new(self.hermitian_part());
        let v = &eig.eigenvectors;
        let s = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from(l.max(0.0).sqrt())));
        v * s * v.adjoint()
    }
}

/// A single-mode state, pure or mixed.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Pure(FockVector),
    Mixed(DensityOperator),
}

impl State {
    pub fn cutoff(&self) -> usize {
        match self {
            State::Pure(v) => v.cutoff(),
            State::Mixed(r) => r.dim() - 1,
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, State::Pure(_))
    }

    pub fn to_density(&self) -> DensityOperator {
        match self {
            State::Pure(v) => v.to_density(),
            State::Mixed(r) => r.clone(),
        }
    }

    pub fn as_pure(&self) -> Option<&FockVector> {
        match self {
            State::Pure(v) => Some(v),
            State::Mixed(_) => None,
        }
    }

    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        Ok(match self {
            State::Pure(v) => State::Pure(v.with_cutoff(cutoff)),
            State::Mixed(r) => State::Mixed(r.with_cutoff(cutoff)?),
        })
    }

    pub fn normalized(&self) -> Result<Self> {
        Ok(match self {
            State::Pure(v) => State::Pure(v.normalized()?),
            State::Mixed(r) => State::Mixed(r.normalized()?),
        })
    }

    pub fn tail_mass(&self) -> f64 {
        match self {
            State::Pure(v) => v.tail_mass(),
            State::Mixed(r) => r.tail_mass(),
        }
    }

    /// Apply a single-mode operator: U|ψ⟩ or UρU†.
    pub fn transform(&self, u: &DMatrix<C64>) -> Result<Self> {
        Ok(match self {
            State::Pure(v) => State::Pure(v.apply(u)?),
            State::Mixed(r) => State::Mixed(r.conjugate(u, vec![u.nrows()])?),
        })
    }
}

impl From<FockVector> for State {
    fn from(v: FockVector) -> Self {
        State::Pure(v)
    }
}

impl From<DensityOperator> for State {
    fn from(r: DensityOperator) -> Self {
        State::Mixed(r)
    }
}

/// Uhlmann fidelity |Tr√(√ρ σ √ρ)|² of two single-mode states of equal
/// dimension. Inputs are normalized internally.
pub fn fidelity(a: &State, b: &State) -> Result<f64> {
    if a.cutoff() != b.cutoff() {
        return Err(Error::DimensionMismatch(format!(
            "fidelity between cutoffs {} and {}",
            a.cutoff(),
            b.cutoff()
        )));
    }
    let f = match (a, b) {
        (State::Pure(x), State::Pure(y)) => x.inner(y).norm_sqr() / (x.norm_sqr() * y.norm_sqr()),
        (State::Pure(x), State::Mixed(r)) | (State::Mixed(r), State::Pure(x)) => {
            r.check_positive()?;
            let v = x.amplitudes();
            (v.adjoint() * r.matrix() * v)[(0, 0)].re / (x.norm_sqr() * r.trace())
        }
        (State::Mixed(r), State::Mixed(s)) => {
            r.check_positive()?;
            s.check_positive()?;
            let sr = r.sqrt();
            let m = &sr * s.matrix() * &sr;
            let inner = DensityOperator {
                matrix: m,
                dims: r.dims.clone(),
            };
            let ev = SymmetricEigen::new(inner.hermitian_part()).eigenvalues;
            let tr: f64 = ev.iter().map(|l| l.max(0.0).sqrt()).sum();
            tr * tr / (r.trace() * s.trace())
        }
    };
    Ok(f.clamp(0.0, 1.0))
}

/// Squared overlap of two pure states, padding the shorter one with zeros.
pub fn overlap_fidelity(a: &FockVector, b: &FockVector) -> f64 {
    a.inner(b).norm_sqr() / (a.norm_sqr() * b.norm_sqr())
}
