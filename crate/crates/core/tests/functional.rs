use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use toric_ding::catalog::lookup;
use toric_ding::duality::{legendre_dual_on_polytope, LogSumExpPotential};
use toric_ding::functional::{
    evaluate, grad_theta, modified_ding, nonlinear_term, potential_offsets, prekopa_suite, properness_family,
    properness_probe, residual, AffineDensity, QuadratureSpec, DEFAULT_SPACING, DEFAULT_TAIL_TOL,
};
use toric_ding::invariants::solve_l;
use toric_ding::ReflexivePolytope;

fn polytope(key: &str) -> ReflexivePolytope {
    lookup(key).unwrap().polytope
}

fn random_potential(p: &ReflexivePolytope, k: u32, rng: &mut ChaCha8Rng) -> LogSumExpPotential<f64> {
    let base = LogSumExpPotential::on_polytope(p, k);
    let theta = (0..base.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    base.with_theta(theta)
}

/// A box that stays valid for every perturbation used below.
fn spec(p: &ReflexivePolytope, phi: &LogSumExpPotential<f64>) -> QuadratureSpec<f64> {
    spec_with(p, phi, DEFAULT_TAIL_TOL)
}

fn spec_with(p: &ReflexivePolytope, phi: &LogSumExpPotential<f64>, tail_tol: f64) -> QuadratureSpec<f64> {
    let (lo, hi) = potential_offsets(p, phi);
    QuadratureSpec::for_offsets(p, lo - 1.0, hi + 1.0, DEFAULT_SPACING, tail_tol).unwrap()
}

fn check_gradient(key: &str, k: u32, seed: u64, tail_tol: f64) {
    let p = polytope(key);
    let l = solve_l(&p.moments()).unwrap();
    let density = AffineDensity::new(&l, &p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..20 {
        let phi = random_potential(&p, k, &mut rng);
        let q = spec_with(&p, &phi, tail_tol);
        let g = grad_theta(&phi, &density, &q).unwrap();
        let eps = 1e-4;
        let fd: Vec<f64> = (0..phi.len())
            .map(|m| {
                let mut plus = phi.theta().to_vec();
                let mut minus = plus.clone();
                plus[m] += eps;
                minus[m] -= eps;
                let dp = modified_ding(&phi.with_theta(plus), &density, &q).unwrap().total;
                let dm = modified_ding(&phi.with_theta(minus), &density, &q).unwrap().total;
                (dp - dm) / (2.0 * eps)
            })
            .collect();
        let err = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = g.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(err <= 1e-5 * scale, "{key}: relative gradient error {}", err / scale);
    }
}

#[test]
fn gradient_matches_central_differences_on_p1() {
    check_gradient("P1", 1, 11, DEFAULT_TAIL_TOL);
}

#[test]
fn refined_gradient_needs_the_pushforward_tail() {
    // With interior sample points det ∇²φ decays like e^{−|ξ|/k}, slower than
    // e^{−φ}, so the box must be sized for a smaller tail.
    check_gradient("P1", 2, 11, 1e-20);
}

#[test]
fn gradient_matches_central_differences_on_f1() {
    check_gradient("F1", 1, 12, DEFAULT_TAIL_TOL);
}

#[test]
fn gradient_sums_to_zero() {
    // D is invariant under θ ↦ θ + c, so Σ ∂D/∂θ_m = 0 up to quadrature error.
    let p = polytope("F1");
    let l = solve_l(&p.moments()).unwrap();
    let density = AffineDensity::new(&l, &p);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let phi = random_potential(&p, 2, &mut rng);
    let g = grad_theta(&phi, &density, &spec(&p, &phi)).unwrap();
    assert!(g.iter().sum::<f64>().abs() < 1e-9);
}

#[test]
fn functional_is_shift_invariant() {
    let p = polytope("F1");
    let l = solve_l(&p.moments()).unwrap();
    let density = AffineDensity::new(&l, &p);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let phi = random_potential(&p, 1, &mut rng);
        let c = rng.gen_range(-3.0..3.0);
        let shifted = phi.with_theta(phi.theta().iter().map(|t| t + c).collect());
        let (lo, hi) = potential_offsets(&p, &phi);
        let q = QuadratureSpec::for_offsets(&p, lo - 3.0, hi + 3.0, DEFAULT_SPACING, DEFAULT_TAIL_TOL).unwrap();
        let d0 = modified_ding(&phi, &density, &q).unwrap().total;
        let d1 = modified_ding(&shifted, &density, &q).unwrap().total;
        assert!((d0 - d1).abs() <= 1e-10, "shift by {c} changed D by {}", d1 - d0);
    }
}

#[test]
fn prekopa_midpoint_inequality_on_random_pairs() {
    let p = polytope("F1");
    let out = prekopa_suite::<f64>(&p, 1, 100, 99, DEFAULT_SPACING, DEFAULT_TAIL_TOL).unwrap();
    assert_eq!(out.len(), 100);
    // Dropped nodes only lower the reported slack.
    for o in &out {
        assert!(o.slack >= -1e-8, "slack {}", o.slack);
    }
}

#[test]
fn residual_integrates_to_zero_for_random_weights() {
    let p = polytope("F1");
    let l = solve_l(&p.moments()).unwrap();
    let density = AffineDensity::new(&l, &p);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..5 {
        let phi = random_potential(&p, 2, &mut rng);
        let q = spec(&p, &phi);
        let r = residual(&phi, &density, &q).unwrap();
        assert!(r.integral.abs() <= 1e-6, "{}", r.integral);
        assert!(r.l1 > 1e-4, "random weights are far from a solution");
        let e = evaluate(&phi, &density, &q).unwrap();
        assert!((e.residual_l1 - r.l1).abs() <= 1e-10 * (1.0 + r.l1));
    }
}

#[test]
fn properness_probe_on_f1_family() {
    let p = polytope("F1");
    let l = solve_l(&p.moments()).unwrap();
    let family = properness_family(&p, 50, 0).unwrap();
    assert_eq!(family.len(), 50);
    let fit = properness_probe::<f64>(&p, &l, &family, DEFAULT_SPACING, DEFAULT_TAIL_TOL).unwrap();
    assert!(fit.delta > 0.0, "delta = {}", fit.delta);
    for m in &fit.members {
        assert!(m.margin >= -1e-8, "margin {}", m.margin);
    }
}

#[test]
fn nonlinear_term_of_fubini_study_on_p1() {
    // φ = 2 log(e^{ξ/2} + e^{−ξ/2}): ∫ e^{−φ} = ∫ ¼ sech²(ξ/2) = 1.
    let p = polytope("P1");
    let phi = LogSumExpPotential::on_polytope(&p, 1).with_theta(vec![0.0, 2f64.ln(), 0.0]);
    let q = QuadratureSpec::for_potential(&p, &phi, 0.25, DEFAULT_TAIL_TOL).unwrap();
    let (n, _) = nonlinear_term(&phi, &q).unwrap();
    assert!(n.abs() < 1e-10, "{n}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn legendre_inverse_and_fenchel_young(
        theta in prop::collection::vec(-2.0f64..2.0, 4),
        x in prop::collection::vec(-0.45f64..0.45, 2),
        probe in prop::collection::vec(-4.0f64..4.0, 2),
    ) {
        let p = polytope("F1");
        let base = LogSumExpPotential::on_polytope(&p, 1);
        let mut t = theta.clone();
        t.resize(base.len(), 0.0);
        let phi = base.with_theta(t);
        // |x_i| < 0.45 keeps x inside F1 (the tightest facet is x₁ − x₂ ≤ 1).
        let d = legendre_dual_on_polytope(&phi, &p, &x).unwrap();
        let g = phi.softmax_geometry(&d.xi);
        for i in 0..2 {
            prop_assert!((g.gradient[i] - x[i]).abs() <= 1e-9);
        }
        // u(x) = ⟨x, ξ*⟩ − φ(ξ*) and u(x) ≥ ⟨x, ξ⟩ − φ(ξ) for every ξ.
        let at = |xi: &[f64]| x[0] * xi[0] + x[1] * xi[1] - phi.value(xi);
        prop_assert!((d.value - at(&d.xi)).abs() <= 1e-12 * (1.0 + d.value.abs()));
        prop_assert!(d.value >= at(&probe) - 1e-12);
    }

    #[test]
    fn gradient_round_trip(theta in prop::collection::vec(-2.0f64..2.0, 4), xi in prop::collection::vec(-6.0f64..6.0, 2)) {
        let p = polytope("F1");
        let base = LogSumExpPotential::on_polytope(&p, 1);
        let mut t = theta.clone();
        t.resize(base.len(), 0.0);
        let phi = base.with_theta(t);
        let x = phi.softmax_geometry(&xi).gradient;
        let d = toric_ding::duality::invert_gradient(&phi, &x, &[0.0, 0.0]).unwrap();
        prop_assert!((d.xi[0] - xi[0]).abs() + (d.xi[1] - xi[1]).abs() <= 1e-6);
    }
}
