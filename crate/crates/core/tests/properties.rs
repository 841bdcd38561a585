use cbnorm::cbentropy;
use cbnorm::channels::Channel;
use cbnorm::inequalities::{self, mink3_sides, mink_mat_sides, ssa_sides};
use cbnorm::linalg::{
    self, hermitian_eigenvalues, kron, partial_trace, schatten_norm, schatten_norm_hermitian, singular_values,
    BipartiteState, DimSplit,
};
use cbnorm::random::{ginibre, random_density, random_unitary, rng_from_seed};
use cbnorm::vnorms::{self, NormParams};
use proptest::prelude::*;

fn quick(p: f64) -> NormParams {
    NormParams { p, restarts: 3, ..NormParams::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn schatten_unitarily_invariant(seed in any::<u64>(), p in 1.0f64..6.0) {
        let mut rng = rng_from_seed(seed);
        let m = ginibre(3, 3, &mut rng);
        let u = random_unitary(3, &mut rng);
        let v = random_unitary(3, &mut rng);
        let a = schatten_norm(&m, p).unwrap();
        let b = schatten_norm(&(&u * &m * &v), p).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
    }

    #[test]
    fn schatten_monotone_in_p(seed in any::<u64>(), p in 1.0f64..5.0, dp in 0.0f64..3.0) {
        let m = ginibre(4, 3, &mut rng_from_seed(seed));
        prop_assert!(schatten_norm(&m, p + dp).unwrap() <= schatten_norm(&m, p).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn singular_values_match_gram_spectrum(seed in any::<u64>()) {
        let m = ginibre(3, 2, &mut rng_from_seed(seed));
        let sv = singular_values(&m);
        let ev = hermitian_eigenvalues(&(m.adjoint() * &m));
        for (s, e) in sv.iter().zip(&ev) {
            prop_assert!((s * s - e).abs() <= 1e-10 * e.max(1.0));
        }
    }

    #[test]
    fn partial_trace_of_product(seed in any::<u64>(), d1 in 1usize..4, d2 in 1usize..4) {
        let mut rng = rng_from_seed(seed);
        let a = random_density(d1, &mut rng);
        let b = random_density(d2, &mut rng);
        let split = DimSplit::pair(d1, d2);
        let ab = kron(&a, &b);
        prop_assert!((partial_trace(&ab, &split, &[0]).unwrap() - &a).norm() <= 1e-12);
        prop_assert!((partial_trace(&ab, &split, &[1]).unwrap() - &b).norm() <= 1e-12);
    }

    #[test]
    fn random_channels_are_cptp(seed in any::<u64>(), d_in in 1usize..4, d_out in 1usize..4, d_env in 1usize..4) {
        prop_assume!(d_out * d_env >= d_in);
        let ch = Channel::random_cpt(d_in, d_out, d_env, seed).unwrap();
        prop_assert!(ch.tp_residual() <= 1e-10);
        let choi_min = *hermitian_eigenvalues(&ch.choi().matrix).last().unwrap();
        prop_assert!(choi_min >= -1e-10);
        let rho = random_density(d_in, &mut rng_from_seed(seed ^ 1));
        let out = ch.apply(&rho).unwrap();
        prop_assert!((linalg::trace(&out).re - 1.0).abs() <= 1e-10);
        prop_assert!(*hermitian_eigenvalues(&out).last().unwrap() >= -1e-10);
    }

    #[test]
    fn stinespring_reproduces_channel(seed in any::<u64>()) {
        let ch = Channel::random_cpt(2, 3, 2, seed).unwrap();
        let v = ch.stinespring().unwrap();
        let rho = random_density(2, &mut rng_from_seed(seed.wrapping_add(7)));
        prop_assert!((v.apply(&rho).unwrap() - ch.apply(&rho).unwrap()).norm() <= 1e-10);
    }

    #[test]
    fn adjoint_duality(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let ch = Channel::random_cpt(3, 2, 2, seed).unwrap();
        let x = ginibre(3, 3, &mut rng);
        let y = ginibre(2, 2, &mut rng);
        let lhs = linalg::trace(&(y.adjoint() * ch.apply(&x).unwrap()));
        let rhs = linalg::trace(&(ch.apply_adjoint(&y).unwrap().adjoint() * &x));
        prop_assert!((lhs - rhs).norm() <= 1e-10);
    }

    #[test]
    fn omega_ratio_never_exceeds_omega(seed in any::<u64>()) {
        let ch = Channel::depolarizing(2, 0.7).unwrap();
        let omega = cbentropy::closed_form(cbentropy::ClosedForm::OmegaDep, 2, 0.7, 2.0).unwrap();
        let coeffs = ginibre(2, 2, &mut rng_from_seed(seed));
        let psi = BipartiteState::new(coeffs.unscale(coeffs.norm())).unwrap();
        prop_assert!(cbentropy::omega_ratio(&ch, &psi, 2.0).unwrap() <= omega * (1.0 + 1e-10));
    }

    #[test]
    fn norm_p1_is_marginal_norm(seed in any::<u64>(), p in 1.0f64..4.0) {
        // ‖X‖_(p,1) = ‖Tr₂ X‖_p for PSD X
        let x = random_density(6, &mut rng_from_seed(seed));
        let split = DimSplit::pair(2, 3);
        let direct = schatten_norm_hermitian(&partial_trace(&x, &split, &[0]).unwrap(), p).unwrap();
        prop_assert!((vnorms::norm_p1(&x, &split, p).unwrap() - direct).abs() <= 1e-10);
    }

    #[test]
    fn ssa_and_minkowski_hold(seed in any::<u64>(), t in 1.0f64..2.0) {
        let x = random_density(8, &mut rng_from_seed(seed));
        let split = DimSplit::new(&[2, 2, 2]).unwrap();
        prop_assert!(ssa_sides(&x, &split).unwrap().slack() >= -1e-10);
        let y = random_density(4, &mut rng_from_seed(seed ^ 3));
        prop_assert!(mink_mat_sides(&y, &DimSplit::pair(2, 2), t).unwrap().slack() >= -1e-10);
        prop_assert!(mink3_sides(&x, &split, t).unwrap().lhs.is_finite());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn infp_norm_dominates_feasible_points(seed in any::<u64>(), p in 1.2f64..3.0) {
        let mut rng = rng_from_seed(seed);
        let x = random_density(4, &mut rng);
        let split = DimSplit::pair(2, 2);
        let infp = vnorms::norm_infp(&x, &split, &quick(p)).unwrap().value;
        let a = random_density(2, &mut rng);
        let half = linalg::psd_power(&a, 0.5);
        let w = kron(&half, &linalg::identity(2));
        let at_a = schatten_norm_hermitian(&(&w * &x * &w), p).unwrap() / schatten_norm_hermitian(&a, p).unwrap();
        let at_identity = schatten_norm_hermitian(&x, p).unwrap() * 2f64.powf(-1.0 / p);
        prop_assert!(infp >= at_a * (1.0 - 1e-8));
        prop_assert!(infp >= at_identity * (1.0 - 1e-8));
    }

    #[test]
    fn q1_minkowski_certificate(seed in any::<u64>()) {
        let w = random_density(4, &mut rng_from_seed(seed));
        let m = inequalities::mink_q1_sides(&w, &DimSplit::pair(2, 2), &quick(2.0)).unwrap();
        prop_assert!(m.sides.slack() >= -1e-9);
        prop_assert!(m.sides.rhs <= m.at_marginal + 1e-15);
    }
}

#[test]
fn nonunital_argmax_in_cp_region() {
    let grid = cbentropy::default_a_grid();
    for (lambda, tau) in [(0.6, 0.3), (0.8, 0.15)] {
        let up = cbentropy::nonunital_sweep(lambda, tau, 2.0, &grid).unwrap();
        let down = cbentropy::nonunital_sweep(lambda, -tau, 2.0, &grid).unwrap();
        assert!(up.a_star > 0.5, "λ={lambda}, τ={tau}: a* = {}", up.a_star);
        assert!(down.a_star < 0.5, "λ={lambda}, τ={}: a* = {}", -tau, down.a_star);
    }
}

#[test]
fn nonunital_gamma12_in_cp_region() {
    let (lambda, tau, a) = (0.6f64, 0.3f64, 0.7f64);
    let g = cbentropy::nonunital_gamma12(lambda, tau, a).unwrap();
    let expected = [
        a * (1.0 + tau + lambda) / 2.0,
        a * (1.0 - tau - lambda) / 2.0,
        (1.0 - a) * (1.0 + tau - lambda) / 2.0,
        (1.0 - a) * (1.0 - tau + lambda) / 2.0,
    ];
    for (i, e) in expected.iter().enumerate() {
        assert!((g[(i, i)].re - e).abs() <= 1e-12);
    }
    let off = lambda * (a * (1.0 - a)).sqrt();
    assert!((g[(0, 3)].re - off).abs() <= 1e-12 && (g[(3, 0)].re - off).abs() <= 1e-12);
}
