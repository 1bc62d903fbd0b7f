//! Wigner functions on phase-space grids, with q = (a + a†)/√2 and
//! p = (a − a†)/(i√2), normalized so that ∬W dq dp = 1.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::State;

pub const CONVENTION: &str = "q=(a+a^dag)/sqrt2, p=(a-a^dag)/(i sqrt2)";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nq: usize,
    pub np: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::square(7.0, 281)
    }
}

impl GridSpec {
    pub fn square(half_width: f64, points: usize) -> Self {
        Self {
            q_min: -half_width,
            q_max: half_width,
            p_min: -half_width,
            p_max: half_width,
            nq: points,
            np: points,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.nq < 2 || self.np < 2 {
            return Err(Error::InvalidParameter("grid needs at least two points per axis".into()));
        }
        let ok = [self.q_min, self.q_max, self.p_min, self.p_max].iter().all(|x| x.is_finite());
        if !ok || self.q_min >= self.q_max || self.p_min >= self.p_max {
            return Err(Error::InvalidParameter("grid span must be finite and increasing".into()));
        }
        Ok(())
    }

    pub fn q_values(&self) -> Vec<f64> {
        linspace(self.q_min, self.q_max, self.nq)
    }

    pub fn p_values(&self) -> Vec<f64> {
        linspace(self.p_min, self.p_max, self.np)
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// Sampled Wigner function; `values[(i, j)]` is W(q_i, p_j).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    pub spec: GridSpec,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub values: DMatrix<f64>,
}

impl PhaseGrid {
    pub fn dq(&self) -> f64 {
        self.q[1] - self.q[0]
    }

    pub fn dp(&self) -> f64 {
        self.p[1] - self.p[0]
    }

    /// Riemann sum of W dq dp.
    pub fn integral(&self) -> f64 {
        self.values.sum() * self.dq() * self.dp()
    }

    pub fn min(&self) -> f64 {
        self.values.min()
    }

    /// Grid point of the largest value.
    pub fn argmax(&self) -> (f64, f64) {
        let (i, j) = self.values.iamax_full();
        (self.q[i], self.p[j])
    }

    pub fn argmin(&self) -> (f64, f64) {
        let mut best = (0, 0);
        for i in 0..self.q.len() {
            for j in 0..self.p.len() {
                if self.values[(i, j)] < self.values[best] {
                    best = (i, j);
                }
            }
        }
        (self.q[best.0], self.p[best.1])
    }

    /// (minimum value, Σ|min(W, 0)| dq dp).
    pub fn negativity(&self) -> (f64, f64) {
        let vol = self.values.iter().filter(|&&w| w < 0.0).map(|w| -w).sum::<f64>() * self.dq() * self.dp();
        (self.min(), vol)
    }

    /// ∫ W dp as a function of q.
    pub fn q_marginal(&self) -> Vec<f64> {
        (0..self.q.len()).map(|i| self.values.row(i).sum() * self.dp()).collect()
    }

    /// CSV with header "q,p,W", q outer, p inner.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::InvalidParameter(format!("csv write: {e}"));
        wr.write_record(["q", "p", "W"]).map_err(io)?;
        for (i, q) in self.q.iter().enumerate() {
            for (j, p) in self.p.iter().enumerate() {
                wr.write_record([format!("{q:.6}"), format!("{p:.6}"), format!("{:.12e}", self.values[(i, j)])])
                    .map_err(io)?;
            }
        }
        wr.flush().map_err(|e| Error::InvalidParameter(format!("csv write: {e}")))?;
        Ok(())
    }

    pub fn metadata(&self, state_ref: &str) -> GridMetadata {
        GridMetadata {
            grid: self.spec,
            state_ref: state_ref.to_string(),
            convention: CONVENTION.to_string(),
            integral: self.integral(),
            min: self.min(),
        }
    }
}

/// JSON sidecar describing a CSV grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMetadata {
    pub grid: GridSpec,
    pub state_ref: String,
    pub convention: String,
    pub integral: f64,
    pub min: f64,
}

/// W(q, p) of a density matrix ρ_mn = ⟨m|ρ|n⟩ by the iterative Laguerre recursion over
/// the Fock basis.
pub fn wigner_point(rho: &DMatrix<C64>, q: f64, p: f64) -> f64 {
    let m_dim = rho.nrows();
    let a = C64::new(q, p) / std::f64::consts::SQRT_2;
    let mut wl = vec![C64::default(); m_dim];
    wl[0] = C64::from((-2.0 * a.norm_sqr()).exp() / std::f64::consts::PI);
    let mut w = rho[(0, 0)].re * wl[0].re;
    for n in 1..m_dim {
        wl[n] = a * 2.0 * wl[n - 1] / (n as f64).sqrt();
        w += 2.0 * (rho[(0, n)] * wl[n]).re;
    }
    for m in 1..m_dim {
        let sm = (m as f64).sqrt();
        let mut temp = wl[m];
        wl[m] = (a.conj() * 2.0 * temp - sm * wl[m - 1]) / sm;
        w += (rho[(m, m)] * wl[m]).re;
        for n in m + 1..m_dim {
            let t2 = (a * 2.0 * wl[n - 1] - sm * temp) / (n as f64).sqrt();
            temp = wl[n];
            wl[n] = t2;
            w += 2.0 * (rho[(m, n)] * wl[n]).re;
        }
    }
    w
}

/// Tolerance on ∬W dq dp before the grid is rejected as too small.
pub const NORMALIZATION_TOL: f64 = 0.01;

/// Wigner function of a (normalized) single-mode state on a grid. Fails
/// with a truncation error when the grid misses more than 1% of the mass.
pub fn wigner_grid(state: &State, spec: &GridSpec) -> Result<PhaseGrid> {
    let grid = wigner_grid_unchecked(state, spec)?;
    let dev = (grid.integral() - 1.0).abs();
    if dev > NORMALIZATION_TOL {
        return Err(Error::Truncation {
            tail: dev,
            limit: NORMALIZATION_TOL,
        });
    }
    Ok(grid)
}

/// As `wigner_grid` without the normalization check.
pub fn wigner_grid_unchecked(state: &State, spec: &GridSpec) -> Result<PhaseGrid> {
    spec.validate()?;
    let rho = state.normalized()?.to_density();
    let r = rho.matrix();
    let q = spec.q_values();
    let p = spec.p_values();
    let rows: Vec<Vec<f64>> = q
        .par_iter()
        .map(|&qq| p.iter().map(|&pp| wigner_point(r, qq, pp)).collect())
        .collect();
    let values = DMatrix::from_fn(q.len(), p.len(), |i, j| rows[i][j]);
    Ok(PhaseGrid {
        spec: *spec,
        q,
        p,
        values,
    })
}

/// (min W, negative volume) on the grid.
pub fn negativity(state: &State, spec: &GridSpec) -> Result<(f64, f64)> {
    Ok(wigner_grid(state, spec)?.negativity())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalysis::{catalyze_step, CatalysisStep};
    use crate::fock::FockVector;
    use crate::gaussian::{coherent_vector, displacement_matrix, squeeze_vector, SqueezeParam};
    use crate::math::hermite_functions;
    use std::f64::consts::PI;

    fn pure(v: FockVector) -> State {
        State::Pure(v)
    }

    #[test]
    fn vacuum_and_photon_landmarks() {
        let vac = pure(FockVector::vacuum(10).unwrap());
        let one = pure(FockVector::basis(1, 10).unwrap());
        let v = vac.to_density();
        let o = one.to_density();
        assert!((wigner_point(&v.matrix(), 0.0, 0.0) - 1.0 / PI).abs() < 1e-14);
        assert!((wigner_point(&o.matrix(), 0.0, 0.0) + 1.0 / PI).abs() < 1e-14);
        // vacuum is a Gaussian of variance 1/2 in each quadrature
        let x: f64 = 0.8;
        let expect = (-(x * x)).exp() / PI;
        assert!((wigner_point(&v.matrix(), x, 0.0) - expect).abs() < 1e-14);
    }

    #[test]
    fn coherent_peak_location() {
        let alpha = C64::new(1.5, -0.5);
        let s = pure(coherent_vector(alpha, 40).normalized().unwrap());
        let g = wigner_grid(&s, &GridSpec::square(7.0, 281)).unwrap();
        let (q, p) = g.argmax();
        assert!((q - 2f64.sqrt() * 1.5).abs() < 0.05);
        assert!((p - 2f64.sqrt() * -0.5).abs() < 0.05);
        assert!((g.integral() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn marginal_matches_wavefunction() {
        let states = [
            FockVector::vacuum(30).unwrap(),
            FockVector::basis(1, 30).unwrap(),
            squeeze_vector(SqueezeParam::real(-0.4).unwrap(), 30),
        ];
        for v in states {
            let g = wigner_grid(&pure(v.clone()), &GridSpec::square(7.0, 141)).unwrap();
            let marg = g.q_marginal();
            let mut se = 0.0;
            for (i, q) in g.q.iter().enumerate() {
                let h = hermite_functions(*q, v.cutoff());
                let amp: C64 = (0..=v.cutoff()).map(|n| v.amplitude(n) * h[n]).sum();
                se += (amp.norm_sqr() - marg[i]).powi(2);
            }
            let rms = (se / g.q.len() as f64).sqrt();
            assert!(rms < 1e-3, "{rms}");
        }
    }

    #[test]
    fn displacement_covariance() {
        let v = squeeze_vector(SqueezeParam::real(-0.3).unwrap(), 50);
        let spec = GridSpec::square(5.0, 101);
        // shift q by 0.5 and p by −0.3 (whole grid steps of 0.1)
        let gamma = C64::new(0.5, -0.3) / 2f64.sqrt();
        let moved = v.apply(&displacement_matrix(gamma, 50)).unwrap();
        let w0 = wigner_grid_unchecked(&pure(v), &spec).unwrap();
        let w1 = wigner_grid_unchecked(&pure(moved), &spec).unwrap();
        let mut worst: f64 = 0.0;
        for i in 10..90 {
            for j in 10..90 {
                worst = worst.max((w1.values[(i + 5, j - 3)] - w0.values[(i, j)]).abs());
            }
        }
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn negativity_landmarks() {
        let spec = GridSpec::square(6.0, 121);
        let (m, vol) = negativity(&pure(FockVector::vacuum(20).unwrap()), &spec).unwrap();
        assert!(m >= -1e-12 && vol < 1e-12);
        let dp = crate::catalysis::displaced_photon(C64::new(0.7, 0.0), 40).unwrap();
        let g = wigner_grid(&pure(dp), &GridSpec::square(6.0, 121)).unwrap();
        // the minimum sits at q = √2·0.7 ≈ 0.99, between grid points; use the exact point
        let rho = g.values.clone();
        assert!(rho.min() > -1.0 / PI - 1e-12);
        let st = pure(crate::catalysis::displaced_photon(C64::new(0.7, 0.0), 40).unwrap());
        let w = wigner_point(&st.to_density().matrix(), 0.7 * 2f64.sqrt(), 0.0);
        assert!((w + 1.0 / PI).abs() < 1e-10);
    }

    #[test]
    fn catalysis_negativity_peaks_at_optimum() {
        // n = 1, r² = 0.5: exact displaced photon at α² = 2
        let step = CatalysisStep::from_r((0.5f64).sqrt(), 1).unwrap();
        let spec = GridSpec::square(6.0, 121);
        let neg = |a2: f64| {
            let input = pure(coherent_vector(C64::new(a2.sqrt(), 0.0), 40));
            let (out, _) = catalyze_step(&input, &step).unwrap();
            negativity(&out, &spec).unwrap().1
        };
        assert!(neg(2.0) > neg(1.0));
    }

    #[test]
    fn csv_and_small_grid_error() {
        let s = pure(coherent_vector(C64::new(3.0, 0.0), 40).normalized().unwrap());
        let err = wigner_grid(&s, &GridSpec::square(1.0, 21)).unwrap_err();
        assert!(matches!(err, Error::Truncation { .. }));
        let g = wigner_grid_unchecked(&s, &GridSpec::square(1.0, 3)).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "q,p,W");
        assert_eq!(text.lines().count(), 10);
    }
}
