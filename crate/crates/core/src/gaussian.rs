//! Truncated matrices of the Gaussian operations: displacement, squeezing,
//! phase rotation and the two-mode beamsplitter.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockVector, JointVector, DensityOperator};
use crate::math::{laguerre, ln_binomial, ln_factorial};

/// Beamsplitter angle θ with r = cos θ, t = sin θ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamsplitterParam {
    pub theta: f64,
}

impl BeamsplitterParam {
    pub fn new(theta: f64) -> Self {
        Self { theta }
    }

    /// From the reflectivity r² ∈ [0, 1].
    pub fn from_r2(r2: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r2) {
            return Err(Error::InvalidParameter(format!("r² = {r2} outside [0,1]")));
        }
        Ok(Self::new(r2.sqrt().acos()))
    }

    /// From the reflection amplitude r ∈ [0, 1].
    pub fn from_r(r: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::InvalidParameter(format!("r = {r} outside [0,1]")));
        }
        Ok(Self::new(r.acos()))
    }

    pub fn r(&self) -> f64 {
        self.theta.cos()
    }

    pub fn t(&self) -> f64 {
        self.theta.sin()
    }

    pub fn r2(&self) -> f64 {
        self.r() * self.r()
    }
}

/// Complex squeezing parameter ξ = r e^{iφ} of S(ξ) = exp[(ξ a†² − ξ* a²)/2].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeParam(pub C64);

impl SqueezeParam {
    pub const MAX_MAGNITUDE: f64 = 2.0;

    pub fn new(xi: C64) -> Result<Self> {
        if !(xi.norm() <= Self::MAX_MAGNITUDE) {
            return Err(Error::InvalidParameter(format!(
                "|ξ| = {} exceeds {}",
                xi.norm(),
                Self::MAX_MAGNITUDE
            )));
        }
        Ok(Self(xi))
    }

    pub fn real(r: f64) -> Result<Self> {
        Self::new(C64::new(r, 0.0))
    }

    pub fn magnitude(&self) -> f64 {
        self.0.norm()
    }

    /// e^{iφ}, taken as 1 at ξ = 0.
    pub fn phase(&self) -> C64 {
        let m = self.0.norm();
        if m == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            self.0 / m
        }
    }
}

fn guard_displacement(gamma: C64, cutoff: usize, what: &str) {
    if gamma.norm_sqr() > cutoff as f64 / 4.0 {
        log::warn!(
            "{what}: |γ|² = {:.3} exceeds cutoff/4 = {:.2}; truncation may be significant",
            gamma.norm_sqr(),
            cutoff as f64 / 4.0
        );
    }
}

/// ⟨n|D(γ)|m⟩ by the associated-Laguerre closed form.
pub fn displacement_element(n: usize, m: usize, gamma: C64) -> C64 {
    let x = gamma.norm_sqr();
    let (lo, hi) = if n >= m { (m, n) } else { (n, m) };
    let k = hi - lo;
    let lag = laguerre(lo, k as f64, x);
    if k == 0 {
        return C64::from((-x / 2.0).exp() * lag);
    }
    if x == 0.0 {
        return C64::default();
    }
    let mag = (0.5 * (ln_factorial(lo) - ln_factorial(hi)) + k as f64 * x.sqrt().ln() - x / 2.0).exp();
    let phase = if n >= m {
        (gamma / gamma.norm()).powu(k as u32)
    } else {
        (-gamma.conj() / gamma.norm()).powu(k as u32)
    };
    phase * (mag * lag)
}

/// Truncated matrix of D(γ) = exp(γa† − γ*a).
pub fn displacement_matrix(gamma: C64, cutoff: usize) -> DMatrix<C64> {
    guard_displacement(gamma, cutoff, "displacement_matrix");
    let d = cutoff + 1;
    DMatrix::from_fn(d, d, |n, m| displacement_element(n, m, gamma))
}

/// Diagonal phase rotation R(Θ) = e^{iΘ a†a}.
pub fn rotation_matrix(theta: f64, cutoff: usize) -> DMatrix<C64> {
    let d = cutoff + 1;
    DMatrix::from_diagonal(&DVector::from_fn(d, |n, _| C64::from_polar(1.0, theta * n as f64)))
}

/// Apply R(Θ) to a vector without forming the matrix.
pub fn rotate(v: &FockVector, theta: f64) -> FockVector {
    let amps = DVector::from_fn(v.dim(), |n, _| v.amplitude(n) * C64::from_polar(1.0, theta * n as f64));
    FockVector::from_dvector(amps).expect("rotation preserves dimension")
}

/// Coherent state |α⟩ truncated at `cutoff` (not renormalized).
pub fn coherent_vector(alpha: C64, cutoff: usize) -> FockVector {
    guard_displacement(alpha, cutoff, "coherent_vector");
    let x = alpha.norm_sqr();
    let amps = DVector::from_fn(cutoff + 1, |m, _| {
        if m == 0 {
            return C64::from((-x / 2.0).exp());
        }
        if x == 0.0 {
            return C64::default();
        }
        let mag = (-x / 2.0 + m as f64 * alpha.norm().ln() - 0.5 * ln_factorial(m)).exp();
        C64::from_polar(mag, m as f64 * alpha.arg())
    });
    FockVector::from_dvector(amps).expect("cutoff >= 1")
}

/// Squeezed vacuum S(ξ)|0⟩ from its closed-form even amplitudes.
pub fn squeeze_vector(xi: SqueezeParam, cutoff: usize) -> FockVector {
    let r = xi.magnitude();
    let ph = xi.phase();
    let ln_tanh = r.tanh().ln();
    let ln_pref = -0.5 * r.cosh().ln();
    let amps = DVector::from_fn(cutoff + 1, |n, _| {
        if n % 2 == 1 {
            return C64::default();
        }
        let l = n / 2;
        if l == 0 {
            return C64::from(ln_pref.exp());
        }
        if r == 0.0 {
            return C64::default();
        }
        let mag = (ln_pref + l as f64 * ln_tanh + 0.5 * ln_factorial(2 * l)
            - l as f64 * std::f64::consts::LN_2
            - ln_factorial(l))
        .exp();
        ph.powu(l as u32) * mag
    });
    FockVector::from_dvector(amps).expect("cutoff >= 1")
}

/// D(γ)S(ξ)|0⟩ by the three-term amplitude recurrence.
pub fn displaced_squeezed_vector(gamma: C64, xi: SqueezeParam, cutoff: usize) -> FockVector {
    guard_displacement(gamma, cutoff, "displaced_squeezed_vector");
    let r = xi.magnitude();
    let e = xi.phase();
    let (c, s) = (r.cosh(), r.sinh());
    let mut amps = DVector::zeros(cutoff + 1);
    let g2 = gamma.conj() * gamma.conj();
    amps[0] = (C64::from(-gamma.norm_sqr() / 2.0) + g2 * e * r.tanh() / 2.0).exp() / c.sqrt();
    let lin = gamma * c - gamma.conj() * e * s;
    for n in 0..cutoff {
        let mut next = lin * amps[n];
        if n > 0 {
            next += e * s * (n as f64).sqrt() * amps[n - 1];
        }
        amps[n + 1] = next / (c * ((n + 1) as f64).sqrt());
    }
    FockVector::from_dvector(amps).expect("cutoff >= 1")
}

/// exp(G) for anti-Hermitian G via the eigendecomposition of iG.
pub fn expm_anti_hermitian(g: &DMatrix<C64>) -> DMatrix<C64> {
    let h = g * C64::i();
    let h = (&h + h.adjoint()) * C64::from(0.5);
    let eig = SymmetricEigen::new(h);
    let v = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, -l)));
    v * d * v.adjoint()
}

pub fn annihilation(cutoff: usize) -> DMatrix<C64> {
    let d = cutoff + 1;
    DMatrix::from_fn(d, d, |i, j| {
        if j == i + 1 {
            C64::from((j as f64).sqrt())
        } else {
            C64::default()
        }
    })
}

/// Truncated matrix of S(ξ), computed on an enlarged space and cropped.
pub fn squeeze_matrix(xi: SqueezeParam, cutoff: usize) -> DMatrix<C64> {
    let big = cutoff + cutoff.max(40);
    let a = annihilation(big);
    let ad = a.adjoint();
    let g = (&ad * &ad * xi.0 - &a * &a * xi.0.conj()) * C64::from(0.5);
    let s = expm_anti_hermitian(&g);
    s.view((0, 0), (cutoff + 1, cutoff + 1)).into_owned()
}

/// Sign convention of the two-mode beamsplitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BsConvention {
    /// a† → r a† + t b†, b† → t a† − r b†.
    #[default]
    Reflecting,
    /// exp[θ(ab† − a†b)]: a† → r a† + t b†, b† → −t a† + r b†.
    Rotation,
}

/// Block of exp[θ(ab† − a†b)] at total photon number `n`, indexed by the
/// photon number in mode a. With S = diag(i^k) the generator becomes i·T
/// for a real symmetric tridiagonal T whose spectrum is {n, n−2, …, −n}.
fn rotation_block(theta: f64, n: usize, convention: BsConvention) -> DMatrix<f64> {
    let d = n + 1;
    if n == 0 {
        return DMatrix::from_element(1, 1, 1.0);
    }
    let nf = n as f64;
    let mut t = DMatrix::<f64>::zeros(d, d);
    for k in 1..d {
        let g = (k as f64 * (nf - k as f64 + 1.0)).sqrt();
        t[(k - 1, k)] = g;
        t[(k, k - 1)] = g;
    }
    let eig = SymmetricEigen::new(t);
    let w = &eig.eigenvectors;
    // Snap the spectrum to its exact integer values.
    let phases: Vec<(f64, f64)> = eig
        .eigenvalues
        .iter()
        .map(|&l| {
            let exact = ((l + nf) / 2.0).round() * 2.0 - nf;
            (theta * exact).sin_cos()
        })
        .collect();
    DMatrix::from_fn(d, d, |k, p| {
        let (mut c, mut s) = (0.0, 0.0);
        for (j, &(sin, cos)) in phases.iter().enumerate() {
            let ww = w[(k, j)] * w[(p, j)];
            c += ww * cos;
            s += ww * sin;
        }
        let diff = k as i64 - p as i64;
        // Re(i^diff (c + i s))
        let v = match diff.rem_euclid(4) {
            0 => c,
            1 => -s,
            2 => -c,
            _ => s,
        };
        let flip = convention == BsConvention::Reflecting && (n - p) % 2 == 1;
        if flip {
            -v
        } else {
            v
        }
    })
}

/// Photon-number-conserving two-mode beamsplitter, stored block by block.
/// Block N holds ⟨k, N−k| U |p, N−p⟩ at (k, p).
#[derive(Debug, Clone)]
pub struct Beamsplitter {
    param: BeamsplitterParam,
    convention: BsConvention,
    blocks: Vec<DMatrix<f64>>,
}

impl Beamsplitter {
    /// Blocks for all total photon numbers up to `max_total`.
    pub fn new(param: BeamsplitterParam, convention: BsConvention, max_total: usize) -> Self {
        let blocks = (0..=max_total).map(|n| rotation_block(param.theta, n, convention)).collect();
        Self {
            param,
            convention,
            blocks,
        }
    }

    pub fn param(&self) -> BeamsplitterParam {
        self.param
    }

    pub fn convention(&self) -> BsConvention {
        self.convention
    }

    pub fn max_total(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn block(&self, total: usize) -> &DMatrix<f64> {
        &self.blocks[total]
    }

    /// ⟨out_a, out_b| U |in_a, in_b⟩.
    pub fn element(&self, out_a: usize, out_b: usize, in_a: usize, in_b: usize) -> f64 {
        let n = in_a + in_b;
        if out_a + out_b != n || n > self.max_total() {
            return 0.0;
        }
        self.blocks[n][(out_a, in_a)]
    }

    /// U|ψ⟩ for a two-mode vector. The output keeps every photon, so each
    /// output mode has dimension (da − 1) + (db − 1) + 1.
    pub fn apply(&self, joint: &JointVector) -> Result<JointVector> {
        let dims = joint.dims();
        if dims.len() != 2 {
            return Err(Error::DimensionMismatch("beamsplitter needs two modes".into()));
        }
        let (da, db) = (dims[0], dims[1]);
        let nmax = da + db - 2;
        if nmax > self.max_total() {
            return Err(Error::DimensionMismatch(format!(
                "beamsplitter built for {} photons, input holds up to {nmax}",
                self.max_total()
            )));
        }
        let dout = nmax + 1;
        let mut out = DVector::<C64>::zeros(dout * dout);
        let amps = joint.amplitudes();
        for p in 0..da {
            for q in 0..db {
                let z = amps[p * db + q];
                if z == C64::default() {
                    continue;
                }
                let n = p + q;
                let col = self.blocks[n].column(p);
                for k in 0..=n {
                    out[k * dout + (n - k)] += z * col[k];
                }
            }
        }
        JointVector::new(out, vec![dout, dout])
    }

    /// Dense (possibly rectangular) matrix mapping `in_dims` to `out_dims`.
    pub fn to_matrix(&self, in_dims: (usize, usize), out_dims: (usize, usize)) -> Result<DMatrix<C64>> {
        let nmax = in_dims.0 + in_dims.1 - 2;
        if nmax > self.max_total() {
            return Err(Error::DimensionMismatch("beamsplitter blocks too small".into()));
        }
        let mut m = DMatrix::zeros(out_dims.0 * out_dims.1, in_dims.0 * in_dims.1);
        for p in 0..in_dims.0 {
            for q in 0..in_dims.1 {
                let n = p + q;
                for k in 0..=n {
                    if k < out_dims.0 && n - k < out_dims.1 {
                        m[(k * out_dims.1 + (n - k), p * in_dims.1 + q)] = C64::from(self.blocks[n][(k, p)]);
                    }
                }
            }
        }
        Ok(m)
    }

    /// UρU† on a two-mode density operator, with photon-conserving output dimensions.
    pub fn apply_density(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        let dims = rho.dims();
        if dims.len() != 2 {
            return Err(Error::DimensionMismatch("beamsplitter needs two modes".into()));
        }
        let dout = dims[0] + dims[1] - 1;
        let u = self.to_matrix((dims[0], dims[1]), (dout, dout))?;
        rho.conjugate(&u, vec![dout, dout])
    }
}

/// Kraus operators E_l = ⟨l|_c U_ac |0⟩_c of a loss beamsplitter with
/// cos ξ = √η, on a mode of dimension `dim`.
pub fn loss_kraus(eta: f64, dim: usize) -> Vec<DMatrix<C64>> {
    if eta >= 1.0 {
        return vec![DMatrix::identity(dim, dim)];
    }
    let bs = Beamsplitter::new(BeamsplitterParam::new(eta.sqrt().acos()), BsConvention::Reflecting, dim - 1);
    (0..dim)
        .map(|l| {
            DMatrix::from_fn(dim, dim, |i, m| {
                if m >= l && i == m - l {
                    C64::from(bs.element(m - l, l, m, 0))
                } else {
                    C64::default()
                }
            })
        })
        .collect()
}

/// Binomial photon-survival probability C(k,n) η^n (1−η)^{k−n}.
pub fn survival_probability(k: usize, n: usize, eta: f64) -> f64 {
    if n > k {
        return 0.0;
    }
    if eta >= 1.0 {
        return if n == k { 1.0 } else { 0.0 };
    }
    if eta <= 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (ln_binomial(k, n) + n as f64 * eta.ln() + (k - n) as f64 * (1.0 - eta).ln()).exp()
}
