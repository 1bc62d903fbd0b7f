use std::f64::consts::SQRT_2;

use fockcat::breeding::breed_outcomes;
use fockcat::catalysis::{cascade, cascaded_closed_form, CatalysisStep};
use fockcat::fock::{fidelity, DensityOperator, FockVector, State};
use fockcat::gaussian::{
    coherent_vector, displacement_matrix, rotate, squeeze_vector, Beamsplitter, BeamsplitterParam, BsConvention, SqueezeParam,
};
use fockcat::optimize::{AcceptList, TupleFit};
use fockcat::targets::{Parity, SsvTarget};
use fockcat::wigner::wigner_point;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

const LOW: usize = 20;

fn complex(max: f64) -> impl Strategy<Value = C64> {
    (-max..max, -max..max).prop_map(|(re, im)| C64::new(re, im))
}

fn low_block(m: &DMatrix<C64>) -> DMatrix<C64> {
    m.view((0, 0), (LOW, LOW)).into_owned()
}

fn random_state(amps: Vec<(f64, f64)>, cutoff: usize) -> FockVector {
    let z: Vec<C64> = amps.into_iter().map(|(a, b)| C64::new(a, b)).collect();
    FockVector::new(z).unwrap().with_cutoff(cutoff).normalized().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 32,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn displacement_is_unitary_on_low_levels(g in complex(1.5)) {
        let d = displacement_matrix(g, 60);
        let err = low_block(&(d.adjoint() * &d)) - DMatrix::identity(LOW, LOW);
        prop_assert!(err.norm() < 1e-9);
    }

    #[test]
    fn displacement_composition_and_braiding(a in complex(1.2), b in complex(1.2)) {
        let (da, db, dab) = (displacement_matrix(a, 60), displacement_matrix(b, 60), displacement_matrix(a + b, 60));
        let half = C64::new(0.0, (a * b.conj()).im).exp();
        prop_assert!((low_block(&(&da * &db)) - low_block(&dab) * half).norm() < 1e-9);
        let braid = (a * b.conj() - a.conj() * b).exp();
        prop_assert!((low_block(&(&da * &db)) - low_block(&(&db * &da)) * braid).norm() < 1e-9);
    }

    #[test]
    fn beamsplitter_blocks_are_orthogonal(theta in 0.0..std::f64::consts::PI, n in 0usize..40, rotation in any::<bool>()) {
        let conv = if rotation { BsConvention::Rotation } else { BsConvention::Reflecting };
        let bs = Beamsplitter::new(BeamsplitterParam::new(theta), conv, 40);
        let u = bs.block(n);
        prop_assert!((u.transpose() * u - DMatrix::identity(n + 1, n + 1)).norm() < 1e-10);
    }

    #[test]
    fn beamsplitter_preserves_norm(
        a in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 2..8),
        b in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 2..8),
        theta in 0.0..1.5f64,
    ) {
        let (va, vb) = (random_state(a, 10), random_state(b, 10));
        let joint = va.tensor(&vb).unwrap();
        let bs = Beamsplitter::new(BeamsplitterParam::new(theta), BsConvention::Reflecting, 20);
        let out = bs.apply(&joint).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn squeezed_and_rotated_states_stay_normalized(r in -1.0..1.0f64, phi in -3.0..3.0f64) {
        let s = squeeze_vector(SqueezeParam::new(C64::from_polar(r.abs(), phi)).unwrap(), 80);
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-8);
        prop_assert!((rotate(&s, phi).norm_sqr() - s.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn tensor_then_partial_trace_recovers_factor(
        a in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 2..6),
        b in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 2..6),
    ) {
        let (va, vb) = (random_state(a, 5), random_state(b, 5));
        let rho = va.tensor(&vb).unwrap().to_density().unwrap();
        let ra = rho.partial_trace(1).unwrap();
        prop_assert!((ra.matrix() - va.to_density().matrix()).norm() < 1e-12);
    }

    #[test]
    fn mixtures_are_states(w in prop::collection::vec(0.01..1.0f64, 3), g in complex(1.0)) {
        let total: f64 = w.iter().sum();
        let w: Vec<f64> = w.iter().map(|x| x / total).collect();
        let states = [FockVector::vacuum(30).unwrap(), coherent_vector(g, 30).normalized().unwrap(), FockVector::basis(3, 30).unwrap()];
        let rho = DensityOperator::mixture(&w, &states).unwrap();
        prop_assert!((rho.trace() - 1.0).abs() < 1e-12);
        prop_assert!(rho.min_eigenvalue() > -1e-12);
        prop_assert!(rho.hermiticity_deviation() < 1e-12);
    }

    #[test]
    fn lossy_cascades_give_valid_states(
        alpha in 0.3..2.0f64,
        r in prop::collection::vec(0.2..0.9f64, 1..3),
        eta in 0.7..1.0f64,
        gamma in 0.7..1.0f64,
    ) {
        let steps: Vec<CatalysisStep> = r
            .iter()
            .enumerate()
            .map(|(i, &r)| CatalysisStep::from_r(r, i % 3).unwrap().with_eta(eta).with_purity(gamma))
            .collect();
        let out = cascade(&State::Pure(coherent_vector(C64::new(alpha, 0.0), 40)), &steps).unwrap();
        let rho = out.state.to_density();
        prop_assert!((rho.trace() - 1.0).abs() < 1e-10);
        prop_assert!(rho.min_eigenvalue() > -1e-10);
        prop_assert!(out.probability > 0.0 && out.probability <= 1.0);
        prop_assert!(out.step_probabilities.iter().all(|p| *p > 0.0 && *p <= 1.0 + 1e-12));
    }

    #[test]
    fn closed_form_matches_numeric_pipeline(
        alpha in complex(1.5),
        thetas in prop::collection::vec(0.1..1.45f64, 1..4),
        ns in prop::collection::vec(0usize..4, 3),
    ) {
        let steps: Vec<CatalysisStep> = thetas.iter().zip(&ns).map(|(&t, &n)| CatalysisStep::ideal(BeamsplitterParam::new(t), n)).collect();
        let psi = coherent_vector(alpha, 40);
        if let Ok(num) = cascade(&State::Pure(psi.clone()), &steps) {
            let closed = cascaded_closed_form(&psi, &steps).unwrap();
            prop_assert!(fidelity(&num.state, &State::Pure(closed)).unwrap() > 1.0 - 1e-8);
        }
    }

    #[test]
    fn breeding_outcomes_sum_to_one(
        a in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 2..6),
        theta in 0.0..3.2f64,
    ) {
        let v = random_state(a, 6);
        let all: Vec<usize> = (0..13).collect();
        let total: f64 = breed_outcomes(&v, &v, theta, &all).unwrap().iter().map(|o| o.2).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ssv_targets_are_normalized(m in 2usize..5, beta in 0.3..2.0f64, xi in -0.5..0.3f64, delta in -1.0..1.0f64) {
        let t = SsvTarget::new(m, beta, xi, Parity::Even, delta).vector(80).unwrap();
        prop_assert!((t.norm_sqr() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn wigner_displacement_covariance(g in complex(1.0), q in -2.0..2.0f64, p in -2.0..2.0f64) {
        let base = FockVector::basis(1, 40).unwrap();
        let moved = base.apply(&displacement_matrix(g, 40)).unwrap();
        let w0 = wigner_point(base.to_density().matrix(), q, p);
        let w1 = wigner_point(moved.to_density().matrix(), q + SQRT_2 * g.re, p + SQRT_2 * g.im);
        prop_assert!((w0 - w1).abs() < 1e-8);
    }

    #[test]
    fn accept_list_grows_as_threshold_drops(
        fs in prop::collection::vec((0.5..1.0f64, 1e-6..1e-2f64), 2..12),
        t1 in 0.5..1.0f64,
        t2 in 0.5..1.0f64,
    ) {
        let fits: Vec<TupleFit> = fs
            .iter()
            .enumerate()
            .map(|(i, &(f, p))| TupleFit { detections: vec![i], probability: p, fidelity: f, beta: 0.0, xi: 0.0, delta: 0.0 })
            .collect();
        let (hi, lo) = (t1.max(t2), t1.min(t2));
        let a = AcceptList::from_fits(&fits, &[0], hi);
        let b = AcceptList::from_fits(&fits, &[0], lo);
        prop_assert!(b.probability >= a.probability);
        prop_assert!(a.ratio() >= 1.0);
    }
}

#[test]
fn wigner_landmarks() {
    let vac = FockVector::vacuum(60).unwrap().to_density();
    let one = FockVector::basis(1, 60).unwrap().to_density();
    assert!((wigner_point(vac.matrix(), 0.0, 0.0) - 1.0 / std::f64::consts::PI).abs() < 1e-12);
    assert!((wigner_point(one.matrix(), 0.0, 0.0) + 1.0 / std::f64::consts::PI).abs() < 1e-12);
}
