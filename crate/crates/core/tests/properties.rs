use nalgebra::{DMatrix, DVector};
use polysmooth::constants;
use polysmooth::metrics::{self, log_spaced};
use polysmooth::pushforward::{self, Density1D, DensitySource, Oracle};
use polysmooth::sampler::{self, SamplerOptions};
use polysmooth::verifier::{self, Budget, TestFamily};
use polysmooth::{AffineMap, LogConcaveMeasure, Polynomial, SeededStream};
use proptest::prelude::*;

fn density(left: f64, step: f64, values: Vec<f64>) -> Density1D {
    let total: f64 = values.iter().sum::<f64>() * step;
    let values: Vec<f64> = values.iter().map(|v| v / total).collect();
    let right = left + step * values.len() as f64;
    Density1D::new(left, step, values, (left, right), 0.0, DensitySource::Imported).unwrap()
}

fn cells() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, 4..40)
}

fn poly() -> impl Strategy<Value = Polynomial> {
    let term = (prop::collection::vec(0u32..3, 2), -3.0f64..3.0);
    prop::collection::vec(term, 1..5).prop_map(|t| Polynomial::from_terms(2, t).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linear_combination_evaluates_pointwise(f in poly(), g in poly(), a in -2.0f64..2.0, b in -2.0f64..2.0,
                                             x in prop::collection::vec(-2.0f64..2.0, 2)) {
        let h = Polynomial::linear_combination(a, &f, b, &g);
        let want = a * f.eval(&x).unwrap() + b * g.eval(&x).unwrap();
        prop_assert!((h.eval(&x).unwrap() - want).abs() <= 1e-9 * (1.0 + want.abs()));
        prop_assert!(h.degree() <= f.degree().max(g.degree()));
    }

    #[test]
    fn display_parses_back(f in poly(), x in prop::collection::vec(-2.0f64..2.0, 2)) {
        let back = Polynomial::parse(&f.to_string()).unwrap();
        let (u, v) = (f.eval(&x).unwrap(), back.eval(&x[..back.nvars()]).unwrap());
        prop_assert!((u - v).abs() <= 1e-9 * (1.0 + u.abs()));
    }

    #[test]
    fn fm_below_tv_and_w1(a in cells(), b in cells(), shift in -10i32..10, step in 0.05f64..1.0) {
        let p = density(0.0, step, a);
        let q = density(shift as f64 * step, step, b);
        let tv = metrics::tv_distance(&p, &q);
        let w1 = metrics::w1_distance(&p, &q);
        let sol = metrics::fm_solution(&p, &q).unwrap();
        let fm = sol.value;
        prop_assert!(fm >= -1e-12);
        // at most 60 common cells, so at least 68 subcells each
        prop_assert!(sol.discretization_bound <= step / 100.0);
        let slack = sol.discretization_bound + 1e-9;
        prop_assert!(fm <= tv.min(w1).min(2.0) + slack, "fm {} tv {} w1 {}", fm, tv, w1);
        prop_assert!(tv <= 2.0 + 1e-12);
    }

    #[test]
    fn tv_is_a_metric(a in cells(), b in cells(), c in cells()) {
        let (p, q, r) = (density(0.0, 0.1, a), density(0.3, 0.1, b), density(-0.5, 0.1, c));
        prop_assert!(metrics::tv_distance(&p, &p) < 1e-12);
        let pq = metrics::tv_distance(&p, &q);
        prop_assert!((pq - metrics::tv_distance(&q, &p)).abs() < 1e-12);
        prop_assert!(metrics::tv_distance(&p, &r) <= pq + metrics::tv_distance(&q, &r) + 1e-12);
    }

    #[test]
    fn shift_modulus_is_symmetric_and_bounded(a in cells(), k in 0usize..30) {
        let p = density(0.0, 0.1, a);
        let h = k as f64 * 0.1;
        let plus = metrics::shift_modulus(&p, h).delta;
        prop_assert!(plus >= 0.0 && plus <= 2.0 + 1e-12);
        prop_assert!((plus - metrics::shift_modulus(&p, -h).delta).abs() < 1e-12);
        if k == 0 {
            prop_assert!(plus.abs() < 1e-12);
        }
    }

    #[test]
    fn exact_modulus_grows_with_shift(h in 1e-4f64..1.0, k in 1u32..5) {
        let o = Oracle::PowerImage { k, abs: false };
        let d1 = metrics::shift_modulus_exact(&o, h);
        let d2 = metrics::shift_modulus_exact(&o, 2.0 * h);
        prop_assert!(d1 >= 0.0 && d2 <= 2.0 + 1e-12);
        prop_assert!(d1 <= d2 + 1e-12);
    }

    #[test]
    fn c_n_tau_monotone(n in 1u32..6, tau in 0.1f64..3.0) {
        let c = constants::c_n_tau(n, tau).unwrap();
        prop_assert!(c > 1.0);
        prop_assert!(c >= constants::c_n_tau(n, tau + 0.1).unwrap());
        prop_assert!(c <= constants::c_n_tau(n + 1, tau).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sampler_is_a_function_of_seed(seed in any::<u64>(), stream in 0u64..100, dim in 1usize..4) {
        let m = LogConcaveMeasure::uniform_ball(vec![0.0; dim], 1.5).unwrap();
        let a = sampler::sample(&m, 200, SeededStream::new(seed, stream)).unwrap();
        let b = sampler::sample(&m, 200, SeededStream::new(seed, stream)).unwrap();
        prop_assert_eq!(a.to_csv(), b.to_csv());
        prop_assert!(a.rows().all(|x| x.iter().map(|v| v * v).sum::<f64>() <= 2.25 + 1e-12));
    }

    #[test]
    fn push_affine_transforms_density(s in 0.3f64..3.0, t in -2.0f64..2.0, x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let m = LogConcaveMeasure::product_exponential(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
        let map = AffineMap::new(DMatrix::from_row_slice(2, 2, &[s, 0.3, 0.0, 1.0]), DVector::from_vec(vec![t, 0.0])).unwrap();
        let pushed = m.push_affine(&map).unwrap();
        let pre = map.inverse().apply(&[x, y]);
        let want = m.density(&pre).unwrap() / map.determinant().abs();
        let got = pushed.density(&[x, y]).unwrap();
        prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want), "{} vs {}", got, want);
    }
}

#[test]
fn power_image_exponents() {
    let budget = Budget::oracle();
    for k in 1..=4u32 {
        let o = Oracle::PowerImage { k, abs: false };
        let h: Vec<f64> = log_spaced(1e-4, 1e-2, 10).iter().map(|v| v * o.variance().sqrt()).collect();
        let fit = metrics::besov_fit_oracle(&o, 1.0 / k as f64, &h).unwrap();
        assert!((fit.slope - 1.0 / k as f64).abs() < 0.05, "k={k} slope {}", fit.slope);

        let f = Polynomial::parse(&format!("x1^{k}")).unwrap();
        let r = verifier::check_small_ball(&f, &LogConcaveMeasure::standard_gaussian(1), None, None, &budget).unwrap();
        let slope = r.number("slope").unwrap();
        assert!((slope - 1.0 / k as f64).abs() < 0.05, "k={k} small-ball slope {slope}");
    }
}

#[test]
fn malliavin_constant_ignores_affine_changes() {
    // the same law of f reached through a scaled measure, and through a scaled f
    let budget = Budget::monte_carlo(200_000, 3);
    let base = verifier::check_malliavin(
        &Polynomial::parse("x1^2 + x1").unwrap(),
        &LogConcaveMeasure::standard_gaussian(1),
        None,
        None,
        TestFamily::All,
        &budget,
    )
    .unwrap();
    let stretched = verifier::check_malliavin(
        &Polynomial::parse("0.25*x1^2 + 0.5*x1").unwrap(),
        &LogConcaveMeasure::gaussian(vec![0.0], DMatrix::from_element(1, 1, 4.0)).unwrap(),
        None,
        None,
        TestFamily::All,
        &budget,
    )
    .unwrap();
    let scaled = verifier::check_malliavin(
        &Polynomial::parse("3*x1^2 + 3*x1 - 7").unwrap(),
        &LogConcaveMeasure::standard_gaussian(1),
        None,
        None,
        TestFamily::All,
        &budget,
    )
    .unwrap();
    let c = base.constant.unwrap();
    let se = base.constant_stderr.unwrap();
    for other in [&stretched, &scaled] {
        let diff = (other.constant.unwrap() - c).abs();
        assert!(diff <= 4.0 * se.max(other.constant_stderr.unwrap()), "{c} vs {:?}", other.constant);
    }
}

#[test]
fn reports_reproduce_under_fixed_seed() {
    let f = Polynomial::parse("x1*x2 + x3^2").unwrap();
    let m = LogConcaveMeasure::uniform_cube(3, 2.0).unwrap();
    let mut budget = Budget::monte_carlo(20_000, 11);
    budget.sampler = SamplerOptions::default();
    let run = || {
        let mut r = verifier::check_moment_growth(&f, &m, None, None, &budget).unwrap();
        r.provenance.runtime_seconds = None;
        serde_json::to_string(&r).unwrap()
    };
    assert_eq!(run(), run());
    let mut other = budget.clone();
    other.stream = 1;
    let mut r = verifier::check_moment_growth(&f, &m, None, None, &other).unwrap();
    r.provenance.runtime_seconds = None;
    assert_ne!(serde_json::to_string(&r).unwrap(), run());
}

#[test]
fn analytic_density_has_unit_mass() {
    for o in [Oracle::Chi2_1, Oracle::PowerImage { k: 3, abs: false }, Oracle::Uniform { a: -1.0, b: 2.0 }] {
        let rho = pushforward::analytic_density(&o, 20_000).unwrap();
        assert!((rho.mass() + rho.mass_below - 1.0).abs() < 1e-6, "{o:?}");
    }
}
