use std::time::Instant;

use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use toric_ding::catalog::{builtin_catalog, lookup};
use toric_ding::cubature::{integrate_polytope, CubatureOptions};
use toric_ding::invariants::{
    alpha_invariant, ding_futaki_exact, integrate_pl, random_pl_function, solve_l, stability_report_for, AffineLinear,
    AffinePiece, PLConvexFunction,
};
use toric_ding::scalar::{int, rat, rational_to_f64, Rational};
use toric_ding::ReflexivePolytope;

/// Area, first and second moments of a lattice polygon from Green's theorem
/// on its counter-clockwise boundary.
struct PolygonMoments {
    area: Rational,
    mx: Rational,
    my: Rational,
    sxx: Rational,
    sxy: Rational,
    syy: Rational,
}

fn polygon_moments(p: &ReflexivePolytope) -> PolygonMoments {
    let mut pts: Vec<(i64, i64)> = p.vertices().iter().map(|v| (v.0[0], v.0[1])).collect();
    pts.sort_by(|a, b| (a.1 as f64).atan2(a.0 as f64).partial_cmp(&(b.1 as f64).atan2(b.0 as f64)).unwrap());
    let mut m = PolygonMoments {
        area: Rational::zero(),
        mx: Rational::zero(),
        my: Rational::zero(),
        sxx: Rational::zero(),
        sxy: Rational::zero(),
        syy: Rational::zero(),
    };
    for i in 0..pts.len() {
        let (x0, y0) = pts[i];
        let (x1, y1) = pts[(i + 1) % pts.len()];
        let c = x0 * y1 - x1 * y0;
        m.area += rat(c, 2);
        m.mx += rat(c * (x0 + x1), 6);
        m.my += rat(c * (y0 + y1), 6);
        m.sxx += rat(c * (x0 * x0 + x0 * x1 + x1 * x1), 12);
        m.syy += rat(c * (y0 * y0 + y0 * y1 + y1 * y1), 12);
        m.sxy += rat(c * (x0 * y1 + 2 * x0 * y0 + 2 * x1 * y1 + x1 * y0), 24);
    }
    m
}

fn det3(m: &[[Rational; 3]; 3]) -> Rational {
    &m[0][0] * (&m[1][1] * &m[2][2] - &m[1][2] * &m[2][1]) - &m[0][1] * (&m[1][0] * &m[2][2] - &m[1][2] * &m[2][0])
        + &m[0][2] * (&m[1][0] * &m[2][1] - &m[1][1] * &m[2][0])
}

/// `l = a + b·x` with `∫l = 1`, `∫x l = ∫y l = 0`, by Cramer's rule.
fn oracle_l(m: &PolygonMoments) -> (Rational, Rational, Rational) {
    let g = [
        [m.area.clone(), m.mx.clone(), m.my.clone()],
        [m.mx.clone(), m.sxx.clone(), m.sxy.clone()],
        [m.my.clone(), m.sxy.clone(), m.syy.clone()],
    ];
    let d = det3(&g);
    let solve_col = |k: usize| {
        let mut h = g.clone();
        for (r, row) in h.iter_mut().enumerate() {
            row[k] = if r == 0 { Rational::one() } else { Rational::zero() };
        }
        det3(&h) / &d
    };
    (solve_col(0), solve_col(1), solve_col(2))
}

fn l_of(p: &ReflexivePolytope) -> AffineLinear {
    solve_l(&p.moments()).unwrap()
}

#[test]
fn polygon_entries_agree_with_green_formula_oracle() {
    for e in builtin_catalog().into_iter().filter(|e| e.polytope.dim() == 2) {
        let p = &e.polytope;
        let om = polygon_moments(p);
        let mom = p.moments();
        assert_eq!(mom.volume, om.area, "{}", e.key);
        assert_eq!(mom.first, vec![om.mx.clone(), om.my.clone()], "{}", e.key);
        let (a, b1, b2) = oracle_l(&om);
        let l = l_of(p);
        assert_eq!((l.a.clone(), l.b.clone()), (a, vec![b1, b2]), "{}", e.key);
        let alpha = p
            .vertices()
            .iter()
            .map(|v| Rational::one() - &om.area * l.eval_lattice(v))
            .max()
            .unwrap();
        assert_eq!(alpha_invariant(p, &l), alpha, "{}", e.key);
    }
}

#[test]
fn exact_invariants_of_small_examples() {
    let start = Instant::now();
    let p1 = lookup("P1").unwrap().polytope;
    let l = l_of(&p1);
    assert_eq!((l.a.clone(), l.b.clone()), (rat(1, 2), vec![int(0)]));
    assert_eq!(alpha_invariant(&p1, &l), int(0));

    let p2 = lookup("P2").unwrap().polytope;
    assert_eq!(p2.moments().volume, rat(9, 2));
    let l = l_of(&p2);
    assert_eq!((l.a.clone(), l.b.clone()), (rat(2, 9), vec![int(0), int(0)]));
    assert_eq!(alpha_invariant(&p2, &l), int(0));

    for key in ["P1xP1", "Bl3P2"] {
        let p = lookup(key).unwrap().polytope;
        assert_eq!(alpha_invariant(&p, &l_of(&p)), int(0), "{key}");
    }

    let f1 = lookup("F1").unwrap().polytope;
    let l = l_of(&f1);
    assert_eq!((l.a.clone(), l.b.clone()), (rat(3, 11), vec![int(0), rat(-3, 22)]));
    let r = stability_report_for(&f1, &l, 0).unwrap();
    assert_eq!(r.alpha, rat(5, 11));
    assert_eq!(r.lambda, rat(3, 22));
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

/// Products of elementary integer matrices, so the determinant is ±1.
fn random_unimodular(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<i64>> {
    let mut m: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    for _ in 0..6 {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i == j {
            if rng.gen_bool(0.3) {
                m[i].iter_mut().for_each(|x| *x = -*x);
            }
            continue;
        }
        let c = rng.gen_range(-2i64..=2);
        let src = m[j].clone();
        for (a, b) in m[i].iter_mut().zip(src) {
            *a += c * b;
        }
    }
    m
}

#[test]
fn verdict_matches_vertex_sign_on_catalog_and_images() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    for e in builtin_catalog() {
        let alpha0 = alpha_invariant(&e.polytope, &l_of(&e.polytope));
        let mut images = vec![e.polytope.clone()];
        for _ in 0..20 {
            let u = random_unimodular(e.polytope.dim(), &mut rng);
            images.push(e.polytope.unimodular_transform(&u).unwrap());
        }
        for p in images {
            let l = l_of(&p);
            let alpha = alpha_invariant(&p, &l);
            let min_l = p.vertices().iter().map(|v| l.eval_lattice(v)).min().unwrap();
            assert_eq!(alpha < Rational::one(), min_l.is_positive(), "{}", e.key);
            assert_eq!(alpha, alpha0, "{}: alpha is a unimodular invariant", e.key);
            checked += 1;
        }
    }
    assert_eq!(checked, builtin_catalog().len() * 21);
}

#[test]
fn unstable_fixture_has_nonpositive_vertex_value() {
    let p = toric_ding::catalog::unstable_example().unwrap();
    let l = l_of(&p);
    let min_l = p.vertices().iter().map(|v| l.eval_lattice(v)).min().unwrap();
    assert!(!min_l.is_positive());
    assert!(alpha_invariant(&p, &l) >= Rational::one());
}

fn integral(p: &ReflexivePolytope, u: &PLConvexFunction) -> Rational {
    integrate_pl(p, u.pieces(), &AffineLinear::constant(int(1), p.dim())).integral
}

#[test]
fn stability_inequality_on_random_pl_functions() {
    let f1 = lookup("F1").unwrap().polytope;
    let l = l_of(&f1);
    let lambda = stability_report_for(&f1, &l, 0).unwrap().lambda;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = f64::INFINITY;
    for _ in 0..200 {
        let u = random_pl_function(2, &mut rng);
        let slack = ding_futaki_exact(&f1, &l, &u).unwrap() - &lambda * integral(&f1, &u);
        assert!(!slack.is_negative(), "I(u) < λ∫u by {slack}");
        worst = worst.min(rational_to_f64(&slack));
    }
    assert!(worst >= -1e-10);
}

fn catalog_polytope() -> impl Strategy<Value = ReflexivePolytope> {
    let n = builtin_catalog().len();
    (0..n).prop_map(|i| builtin_catalog().swap_remove(i).polytope)
}

fn pl_function(dim: usize) -> impl Strategy<Value = PLConvexFunction> {
    prop::collection::vec((prop::collection::vec(-8i64..=8, dim), -8i64..=8), 1..5).prop_map(move |pieces| {
        let pieces = pieces
            .into_iter()
            .map(|(c, d)| AffinePiece::new(c.into_iter().map(|x| rat(x, 4)).collect(), rat(d, 4)))
            .collect();
        PLConvexFunction::new(dim, pieces).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn futaki_is_homogeneous(u in pl_function(2), num in 1i64..20, den in 1i64..20) {
        let f1 = lookup("F1").unwrap().polytope;
        let l = l_of(&f1);
        let t = rat(num, den);
        let scaled = u.scaled(&t).unwrap();
        prop_assert_eq!(ding_futaki_exact(&f1, &l, &scaled).unwrap(), &t * ding_futaki_exact(&f1, &l, &u).unwrap());
    }

    #[test]
    fn futaki_vanishes_on_affine_functions(c in prop::collection::vec(-20i64..=20, 2), d in -20i64..=20, i in 0usize..5) {
        let p = builtin_catalog().into_iter().filter(|e| e.polytope.dim() == 2).nth(i).unwrap().polytope;
        let u = PLConvexFunction::affine(c.into_iter().map(|x| rat(x, 3)).collect(), rat(d, 3));
        prop_assert_eq!(ding_futaki_exact(&p, &l_of(&p), &u).unwrap(), int(0));
    }

    #[test]
    fn normalized_futaki_dominates_lambda_mass(u in pl_function(2)) {
        let f1 = lookup("F1").unwrap().polytope;
        let l = l_of(&f1);
        let u = u.normalized();
        let lambda = stability_report_for(&f1, &l, 0).unwrap().lambda;
        prop_assert!(ding_futaki_exact(&f1, &l, &u).unwrap() >= &lambda * integral(&f1, &u));
    }

    #[test]
    fn invariants_are_unimodular_invariants(p in catalog_polytope(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_unimodular(p.dim(), &mut rng);
        let q = p.unimodular_transform(&u).unwrap();
        prop_assert_eq!(q.moments().volume, p.moments().volume);
        prop_assert_eq!(alpha_invariant(&q, &l_of(&q)), alpha_invariant(&p, &l_of(&p)));
        prop_assert_eq!(q.facets().len(), p.facets().len());
    }

    #[test]
    fn cubature_matches_exact_quadratic_moments(
        p in catalog_polytope(),
        coef in prop::collection::vec(-3.0f64..3.0, 10),
    ) {
        let n = p.dim();
        let mom = p.moments();
        // q(x) = c0 + Σ c_i x_i + Σ_{i≤j} c_ij x_i x_j
        let lin: Vec<f64> = coef[1..=n].to_vec();
        let quad: Vec<f64> = coef[1 + n..].iter().copied().take(n * (n + 1) / 2).collect();
        let eval = |x: &[f64]| {
            let mut v = coef[0] + lin.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            let mut k = 0;
            for i in 0..n {
                for j in i..n {
                    v += quad[k] * x[i] * x[j];
                    k += 1;
                }
            }
            v
        };
        let mut exact = coef[0] * rational_to_f64(&mom.volume);
        for i in 0..n {
            exact += lin[i] * rational_to_f64(&mom.first[i]);
        }
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                exact += quad[k] * rational_to_f64(&mom.second[i][j]);
                k += 1;
            }
        }
        let got = integrate_polytope::<f64, _>(&p, eval, CubatureOptions::default());
        prop_assert!((got.value - exact).abs() <= 1e-9 * (1.0 + exact.abs()), "{} vs {}", got.value, exact);
    }
}
