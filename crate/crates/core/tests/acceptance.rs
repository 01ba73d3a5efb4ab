//! One PASS/FAIL line per acceptance criterion, each at its stated tolerance.

use std::f64::consts::{E, PI};
use std::process::Command;
use std::time::Instant;

use polysmooth::constants;
use polysmooth::measure;
use polysmooth::metrics::{self, LpNorm};
use polysmooth::pushforward::{self, Oracle};
use polysmooth::verifier::{self, Budget, InequalityReport, TestFamily};
use polysmooth::{LogConcaveMeasure, Polynomial, SeededStream};
use rand::Rng;

type Outcome = polysmooth::Result<(bool, String)>;

fn poly(s: &str) -> Polynomial {
    Polynomial::parse(s).unwrap()
}

fn gauss1() -> LogConcaveMeasure {
    LogConcaveMeasure::standard_gaussian(1)
}

fn within(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol
}

fn slope(r: &InequalityReport) -> f64 {
    r.number("slope").unwrap_or(f64::NAN)
}

fn golden_constants() -> Outcome {
    let cases: Vec<(&str, f64, f64, f64)> = vec![
        ("c_n_tau(1,1)", constants::c_n_tau(1, 1.0)?, constants::c_n_tau_quadrature(1, 1.0)?, 1.0 + 1.0 / E),
        ("c_n_tau(3,1)", constants::c_n_tau(3, 1.0)?, constants::c_n_tau_quadrature(3, 1.0)?, 1.0 + 15.0 / E),
        ("c1_integral(2)", constants::c1_integral(2)?, constants::c1_integral_quadrature(2)?, PI / 2.0),
        ("C_nd(2,2)", constants::sphere_moment(2, 2)?, constants::sphere_moment_quadrature(2, 2)?, 2.0 / PI),
        ("C_nd(3,2)", constants::sphere_moment(3, 2)?, constants::sphere_moment_quadrature(3, 2)?, 0.5),
        (
            "gaussian_abs_moment(1)",
            constants::gaussian_abs_moment(1.0)?,
            constants::gaussian_abs_moment_quadrature(1.0)?,
            (2.0 / PI).sqrt(),
        ),
    ];
    let mut worst: f64 = 0.0;
    for (_, v, q, exact) in &cases {
        worst = worst.max((v - q).abs()).max((v - exact).abs());
    }
    Ok((worst <= 1e-8, format!("max |closed form - quadrature/exact| = {worst:.2e}")))
}

fn skorohod_exactness() -> Outcome {
    let mut gauss_err: f64 = 0.0;
    for n in 1..=3 {
        let m = LogConcaveMeasure::standard_gaussian(n);
        for e in measure::sphere_directions(n, 8) {
            gauss_err = gauss_err.max((measure::skorohod_norm(&m, &e)? - (2.0 / PI).sqrt()).abs());
        }
    }
    let mut box_err: f64 = 0.0;
    for (n, a) in [(1, 1.0), (2, 0.5), (3, 3.0)] {
        let m = LogConcaveMeasure::uniform_cube(n, a)?;
        let mut e = vec![0.0; n];
        e[n - 1] = 1.0;
        box_err = box_err.max((measure::skorohod_norm(&m, &e)? - 2.0 / a).abs());
    }
    Ok((gauss_err <= 1e-4 && box_err <= 1e-6, format!("gaussian err {gauss_err:.2e}, box err {box_err:.2e}")))
}

fn level_set_inequalities() -> Outcome {
    let mut ok = true;
    let mut failed = Vec::new();
    let mut anchor = f64::NAN;
    for n in 1..=3usize {
        let family = [
            ("gaussian", LogConcaveMeasure::standard_gaussian(n)),
            ("box", LogConcaveMeasure::uniform_box(vec![0.5; n], (1..=n).map(|i| i as f64).collect())?),
            ("laplace", LogConcaveMeasure::product_exponential(vec![0.0; n], (1..=n).map(|i| 0.5 * i as f64).collect())?),
        ];
        for (name, m) in family {
            let r = verifier::check_geometry(&m, None)?;
            let mut pass = true;
            for tau in ["0.5", "1", "2"] {
                for kind in ["volume", "radius"] {
                    pass &= r.check(&format!("{kind} tau={tau}")).map(|c| c.holds).unwrap_or(false);
                }
            }
            if name == "gaussian" && n == 1 {
                anchor = r.check("volume tau=1").and_then(|c| c.rhs).unwrap_or(f64::NAN);
            }
            if !pass {
                failed.push(format!("{name} n={n}"));
            }
            ok &= pass;
        }
    }
    let anchored = within(anchor, 1.5436, 1e-3);
    Ok((ok && anchored, format!("18 inequalities per case, failures {failed:?}; gaussian n=1 tau=1 rhs {anchor:.5}")))
}

fn besov_slopes() -> Outcome {
    let cases = [("x1^2", 0.5), ("x1", 1.0), ("x1^3", 1.0 / 3.0)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (f, want) in cases {
        let oracle = slope(&verifier::check_shift_tv(&poly(f), &gauss1(), None, None, &Budget::oracle(), None)?);
        let mc_budget = Budget::monte_carlo(1_000_000, 17);
        let mc = slope(&verifier::check_shift_tv(&poly(f), &gauss1(), None, None, &mc_budget, None)?);
        ok &= within(oracle, want, 0.05) && within(mc, want, 0.08);
        parts.push(format!("{f}: oracle {oracle:.4}, mc {mc:.4} (want {want:.4})"));
    }
    Ok((ok, parts.join("; ")))
}

fn malliavin_exponents() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (f, d) in [("x1^2", 2.0), ("x1^3", 3.0), ("x1^4", 4.0)] {
        let want = 1.0 - 1.0 / d;
        let run = |b: &Budget| verifier::check_malliavin(&poly(f), &gauss1(), None, None, TestFamily::All, b);
        let oracle = run(&Budget::oracle())?;
        let mc = run(&Budget::monte_carlo(1_000_000, 23))?;
        let c = mc.constant.unwrap_or(f64::NAN);
        let c4 = mc.number("c_hat_4x").unwrap_or(f64::NAN);
        let change = (c4 - c).abs() / c;
        ok &= within(slope(&oracle), want, 0.05) && within(slope(&mc), want, 0.08) && change < 0.1;
        parts.push(format!(
            "{f}: oracle {:.4}, mc {:.4} (want {want:.4}), C-hat change {:.1}%",
            slope(&oracle),
            slope(&mc),
            100.0 * change
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn small_ball() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (f, d) in [("x1^2", 2.0), ("x1^3", 3.0), ("x1^4", 4.0)] {
        let s = slope(&verifier::check_small_ball(&poly(f), &gauss1(), None, None, &Budget::oracle())?);
        ok &= within(s, 1.0 / d, 0.05);
        parts.push(format!("{f}: {s:.4}"));
    }
    let budget = Budget::monte_carlo(1_000_000, 29);
    let values = verifier::sample_values(&poly("x1^2"), &gauss1(), budget.samples, &budget)?;
    let spot = values.iter().filter(|v| v.abs() <= 0.01).count() as f64 / values.len() as f64;
    ok &= within(spot, 0.0797, 0.002);
    parts.push(format!("mu(x^2 <= 0.01) = {spot:.5}"));
    Ok((ok, parts.join("; ")))
}

/// `∫_{c−1}^{c+1} (Φ(t) − Φ(t − s)) dt` with `c = s/2`, through the
/// antiderivative `tΦ(t) + ϕ(t)` of `Φ`.
fn shifted_gaussian_fm(s: f64) -> f64 {
    let z = Oracle::Gaussian { mean: 0.0, sd: 1.0 };
    let g = |t: f64| t * z.cdf(t) + z.pdf(t);
    let c = s / 2.0;
    (g(c + 1.0) - g(c - 1.0)) - (g(c + 1.0 - s) - g(c - 1.0 - s))
}

fn random_oracle<R: Rng>(rng: &mut R) -> Oracle {
    match rng.random_range(0..4) {
        0 => Oracle::Gaussian { mean: rng.random_range(-2.0..2.0), sd: rng.random_range(0.2..3.0) },
        1 => {
            let a = rng.random_range(-3.0..1.0);
            Oracle::Uniform { a, b: a + rng.random_range(0.1..4.0) }
        }
        2 => Oracle::Scaled { base: Box::new(Oracle::Chi2_1), a: rng.random_range(0.2..2.0), b: rng.random_range(-1.0..1.0) },
        _ => Oracle::Scaled {
            base: Box::new(Oracle::PowerImage { k: 3, abs: false }),
            a: rng.random_range(0.2..1.0),
            b: rng.random_range(-1.0..1.0),
        },
    }
}

fn fm_correctness() -> Outcome {
    let a = pushforward::analytic_density(&Oracle::Gaussian { mean: 0.0, sd: 1.0 }, 20_000)?;
    let b = pushforward::analytic_density(&Oracle::Gaussian { mean: 0.1, sd: 1.0 }, 20_000)?;
    let fm = metrics::fm_distance(&a, &b)?;
    let closed = shifted_gaussian_fm(0.1);
    let mut ok = within(fm, 0.0683, 1e-3) && within(fm, closed, 1e-4);
    let mut rng = SeededStream::new(31, 0).rng();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..50 {
        let p = pushforward::analytic_density(&random_oracle(&mut rng), 4000)?;
        let q = pushforward::analytic_density(&random_oracle(&mut rng), 4000)?;
        let sol = metrics::fm_solution(&p, &q)?;
        let cap = metrics::tv_distance(&p, &q).min(metrics::w1_distance(&p, &q)).min(2.0);
        let excess = sol.value - cap - sol.discretization_bound;
        worst = worst.max(excess);
        ok &= excess <= 1e-9;
    }
    Ok((ok, format!("FM = {fm:.6} (closed form {closed:.6}); worst fm - min(W1, 2, TV) - bound over 50 pairs {worst:.2e}")))
}

fn tv_fm_chain() -> Outcome {
    let pairs = [
        ("x1^2", "x1^2 + 0.1"),
        ("x1^2", "1.2*x1^2"),
        ("x1^2", "x1^2 + 0.3*x1"),
        ("x1^2 - 1", "x1"),
        ("x1^2 + x1", "0.8*x1^2 - 0.5"),
    ];
    let mut ok = true;
    let mut margins = Vec::new();
    for (f, g) in pairs {
        let r = verifier::check_tv_fm(&poly(f), &poly(g), &gauss1(), Some(2), &Budget::oracle())?;
        ok &= r.check("tv_fm").map(|c| c.holds).unwrap_or(false);
        margins.push(format!("[{f}] vs [{g}]: {:.4}", r.number("margin").unwrap_or(f64::NAN)));
    }
    Ok((ok, format!("margins rhs - TV: {}", margins.join(", "))))
}

fn lp_bounds() -> Outcome {
    let r = verifier::check_lp_density(&poly("x1^2"), &gauss1(), None, 1.5, &Budget::oracle(), None)?;
    let lhs = r.number("lhs").unwrap_or(f64::NAN);
    let c = r.number("c_hat").unwrap_or(f64::NAN);
    let rhs = constants::lp_density_constant(2, 1.5, c)?;
    let divergent = matches!(metrics::lp_norm_oracle(&Oracle::Chi2_1, 2.0)?, LpNorm::Divergent);
    let rejected = verifier::check_lp_density(&poly("x1^2"), &gauss1(), None, 2.0, &Budget::oracle(), None).is_err();
    let ok = within(lhs, 1.110, 0.02) && lhs <= rhs && divergent && rejected;
    Ok((ok, format!("sigma^(1/3) ||rho||_1.5 = {lhs:.4} <= C1 = {rhs:.4} (C-hat {c:.4}); p = 2 divergent {divergent}")))
}

fn verify_all(threads: &str) -> polysmooth::Result<Vec<u8>> {
    let out = Command::new(env!("CARGO_BIN_EXE_polysmooth"))
        .args([
            "verify",
            "--suite",
            "all",
            "--measure",
            r#"{"family":"gaussian","dim":2}"#,
            "--poly",
            "x1^2 + x1*x2",
            "--no-oracle",
            "--samples",
            "100000",
            "--seed",
            "7",
            "--threads",
            threads,
            "--deterministic",
        ])
        .output()?;
    Ok(out.stdout)
}

fn reproducibility() -> Outcome {
    let a = verify_all("1")?;
    let b = verify_all("1")?;
    let c = verify_all("8")?;
    let parsed = serde_json::from_slice::<serde_json::Value>(&a).map(|v| v.as_array().map_or(0, Vec::len)).unwrap_or(0);
    Ok((parsed > 0 && a == b && a == c, format!("{parsed} reports, {} bytes; repeat identical {}, 8 threads identical {}", a.len(), a == b, a == c)))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("constants golden values", golden_constants),
        ("skorohod norm exactness", skorohod_exactness),
        ("level-set inequalities", level_set_inequalities),
        ("besov exponent fits", besov_slopes),
        ("malliavin exponents", malliavin_exponents),
        ("small-ball exponents", small_ball),
        ("fortet-mourier correctness", fm_correctness),
        ("tv-fm chain", tv_fm_chain),
        ("lp density bounds", lp_bounds),
        ("reproducibility", reproducibility),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let (pass, detail) = run().unwrap_or_else(|e| (false, format!("error: {e}")));
        failures += usize::from(!pass);
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("{verdict} {:>2} {name} [{:.1}s]: {detail}", i + 1, started.elapsed().as_secs_f64());
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
