//! Closed-form constants of the smoothness estimates, each paired with an
//! independent quadrature (or Monte Carlo) evaluation.
//!
//! Universal constants that have no numeric value (`c`, `R`, `C_n`, `C(d)`)
//! are never produced here; they enter only as caller-supplied inputs.

use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::quadrature::{exp_sinh, tanh_sinh};
use crate::sampler::SeededStream;
use crate::special::{beta, gamma, upper_gamma};

const QUAD_REL: f64 = 1e-13;

/// `c_n(τ) = n ∫₁^∞ t^{n−1} e^{−τt} dt + 1`, the level-set volume factor.
pub fn c_n_tau(n: u32, tau: f64) -> Result<f64> {
    check_tau(n, tau)?;
    let n = n as f64;
    Ok(n * upper_gamma(n, tau) / tau.powf(n) + 1.0)
}

pub fn c_n_tau_quadrature(n: u32, tau: f64) -> Result<f64> {
    check_tau(n, tau)?;
    let nf = n as f64;
    let r = exp_sinh(|s| (1.0 + s).powi(n as i32 - 1) * (-tau * (1.0 + s)).exp(), 0.0, QUAD_REL);
    Ok(nf * r.value + 1.0)
}

fn check_tau(n: u32, tau: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::Range("dimension n must be at least 1".into()));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Range(format!("tau must be positive, got {tau}")));
    }
    Ok(())
}

/// `c₂(d) = (1 + 3dπ)/2`.
pub fn c2_d(d: u32) -> Result<f64> {
    if d == 0 {
        return Err(Error::Range("degree d must be at least 1".into()));
    }
    Ok(0.5 * (1.0 + 3.0 * d as f64 * PI))
}

fn c1_exponent(d: u32) -> Result<f64> {
    if d < 2 {
        return Err(Error::Range(format!("c1_integral needs d >= 2, got {d}")));
    }
    Ok(1.0 / (2.0 * d as f64 - 2.0))
}

/// Integral factor `∫₀^∞ (s+1)^{−2} s^{1/(2d−2)} ds = B(1+β, 1−β)` of the
/// small-ball term; the absolute prefactor `c·d` stays symbolic.
pub fn c1_integral(d: u32) -> Result<f64> {
    let b = c1_exponent(d)?;
    Ok(beta(1.0 + b, 1.0 - b))
}

pub fn c1_integral_quadrature(d: u32) -> Result<f64> {
    let b = c1_exponent(d)?;
    // s = u / (1 − u), with both endpoint singularities moved to 0
    let left = tanh_sinh(|u| u.powf(b) * (1.0 - u).powf(-b), 0.0, 0.5, QUAD_REL);
    let right = tanh_sinh(|v| (1.0 - v).powf(b) * v.powf(-b), 0.0, 0.5, QUAD_REL);
    Ok(left.value + right.value)
}

fn sphere_exponent(n: u32, d: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::Range("dimension n must be at least 1".into()));
    }
    if d < 2 {
        return Err(Error::Range(format!("sphere moment needs d >= 2, got {d}")));
    }
    Ok(1.0 / (d as f64 - 1.0))
}

/// `C(n, d)`: average of `|⟨e, e₁⟩|^{1/(d−1)}` over the uniform measure on
/// the unit sphere of ℝⁿ.
pub fn sphere_moment(n: u32, d: u32) -> Result<f64> {
    let b = sphere_exponent(n, d)?;
    let nf = n as f64;
    Ok(gamma(nf / 2.0) * gamma((b + 1.0) / 2.0) / (PI.sqrt() * gamma((nf + b) / 2.0)))
}

/// Same average through the one-dimensional marginal of the first
/// coordinate, density ∝ (1 − t²)^{(n−3)/2}.
pub fn sphere_moment_quadrature(n: u32, d: u32) -> Result<f64> {
    let b = sphere_exponent(n, d)?;
    if n == 1 {
        return Ok(1.0);
    }
    let k = (n as f64 - 3.0) / 2.0;
    // split at 1/2 and write the upper half in s = 1 − t
    let split = |g: &dyn Fn(f64) -> f64| {
        tanh_sinh(|t| g(t) * (1.0 - t * t).powf(k), 0.0, 0.5, QUAD_REL).value
            + tanh_sinh(|s| g(1.0 - s) * (s * (2.0 - s)).powf(k), 0.0, 0.5, QUAD_REL).value
    };
    let num = split(&|t: f64| t.powf(b));
    let den = split(&|_| 1.0);
    Ok(num / den)
}

/// Monte Carlo sphere average: `(estimate, standard error)`.
pub fn sphere_moment_monte_carlo(n: u32, d: u32, count: usize, stream: SeededStream) -> Result<(f64, f64)> {
    let b = sphere_exponent(n, d)?;
    let mut rng = stream.rng();
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    let mut g = vec![0.0; n as usize];
    for _ in 0..count {
        for v in g.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let val = (g[0] / norm).abs().powf(b);
        sum += val;
        sum2 += val * val;
    }
    let c = count as f64;
    let mean = sum / c;
    let var = (sum2 / c - mean * mean).max(0.0);
    Ok((mean, (var / c).sqrt()))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Range(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    Ok(())
}

/// `E|Z|^α` for a standard normal `Z`, `α ∈ (0, 1]`.
pub fn gaussian_abs_moment(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(2f64.powf(alpha / 2.0) * gamma((alpha + 1.0) / 2.0) / PI.sqrt())
}

pub fn gaussian_abs_moment_quadrature(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let r = exp_sinh(|t| t.powf(alpha) * (-0.5 * t * t).exp(), 0.0, QUAD_REL);
    Ok(2.0 * r.value / (2.0 * PI).sqrt())
}

/// Upper end `d/(d−1)` of the admissible `p` range; infinite for `d = 1`.
pub fn lp_upper(d: u32) -> f64 {
    if d <= 1 {
        f64::INFINITY
    } else {
        d as f64 / (d as f64 - 1.0)
    }
}

pub fn check_p(d: u32, p: f64) -> Result<()> {
    if d == 0 {
        return Err(Error::Range("degree d must be at least 1".into()));
    }
    let hi = lp_upper(d);
    if !(p > 1.0 && p < hi) {
        return Err(Error::Range(format!("p must lie in (1, {hi}) for d = {d}, got {p}")));
    }
    Ok(())
}

/// Density `Lᵖ` bound `C₁(d,p) = (p/(p−1) + p/(d/(d−1) − p))^{1/p} · C^{d(1−1/p)}`
/// for a Malliavin-type constant `C`.
pub fn lp_density_constant(d: u32, p: f64, c: f64) -> Result<f64> {
    check_p(d, p)?;
    if !(c > 0.0) {
        return Err(Error::Range(format!("constant must be positive, got {c}")));
    }
    let hi = lp_upper(d);
    let tail = if hi.is_finite() { p / (hi - p) } else { 0.0 };
    Ok((p / (p - 1.0) + tail).powf(1.0 / p) * c.powf(d as f64 * (1.0 - 1.0 / p)))
}

/// `Lᵖ` bound for a single measure with smoothness order `α` and constant `C`
/// (valid for `1 < p < 1/(1−α)`).
pub fn lp_order_constant(alpha: f64, p: f64, c: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let hi = if alpha >= 1.0 { f64::INFINITY } else { 1.0 / (1.0 - alpha) };
    if !(p > 1.0 && p < hi) {
        return Err(Error::Range(format!("p must lie in (1, {hi}), got {p}")));
    }
    let tail = if hi.is_finite() { p / (hi - p) } else { 0.0 };
    Ok((p / (p - 1.0) + tail).powf(1.0 / p) * c.powf((1.0 - 1.0 / p) / alpha))
}

/// TV–FM constant `2 + (C_σ + C_ν)·E|Z|^α` for two laws with shift moduli
/// `C_ν|h|^α`, `C_σ|h|^α`.
pub fn tv_fm_constant(c_nu: f64, c_sigma: f64, alpha: f64) -> Result<f64> {
    if c_nu < 0.0 || c_sigma < 0.0 {
        return Err(Error::Range("shift constants must be nonnegative".into()));
    }
    Ok(2.0 + (c_sigma + c_nu) * gaussian_abs_moment(alpha)?)
}

/// TV–FM constant for two degree-`d` polynomial images:
/// `1 + 2Ĉ(σ_f^{−1/d} + σ_g^{−1/d})·E|Z|^{1/d}`.
pub fn polynomial_tv_fm_constant(c_hat: f64, sigma_f: f64, sigma_g: f64, d: u32) -> Result<f64> {
    if d == 0 {
        return Err(Error::Range("degree d must be at least 1".into()));
    }
    if !(c_hat > 0.0 && sigma_f > 0.0 && sigma_g > 0.0) {
        return Err(Error::Range("constant and standard deviations must be positive".into()));
    }
    let a = 1.0 / d as f64;
    Ok(1.0 + 2.0 * c_hat * (sigma_f.powf(-a) + sigma_g.powf(-a)) * gaussian_abs_moment(a)?)
}

/// Composite Malliavin constant `C(d) = C₁(d)(4c(d−1) + 1)` with the absolute
/// moment-comparison constant `c` left symbolic until [`evaluate`] is called.
///
/// [`evaluate`]: MalliavinComposite::evaluate
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MalliavinComposite {
    pub low_dim_constant: f64,
    pub d: u32,
}

impl MalliavinComposite {
    pub fn evaluate(&self, c: f64) -> f64 {
        self.low_dim_constant * (4.0 * c * (self.d as f64 - 1.0) + 1.0)
    }
}

/// One evaluated entry of the constant table.
#[derive(Clone, Debug, Serialize)]
pub struct ConstantValue {
    pub name: String,
    pub params: Value,
    pub value: f64,
    pub crosscheck_error: Option<f64>,
}

pub const CONSTANT_NAMES: &[&str] = &[
    "c_n_tau",
    "c2_d",
    "c1_integral",
    "C_nd",
    "gaussian_abs_moment",
    "C1_dp",
    "lp_order_constant",
    "tv_fm_constant",
    "polynomial_tv_fm_constant",
    "malliavin_composite",
];

fn get_f64(params: &Value, key: &str) -> Result<f64> {
    params
        .get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::Configuration(format!("missing numeric parameter `{key}`")))
}

fn get_u32(params: &Value, key: &str) -> Result<u32> {
    let v = get_f64(params, key)?;
    if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
        return Err(Error::Configuration(format!("parameter `{key}` must be a nonnegative integer")));
    }
    Ok(v as u32)
}

/// Evaluates a named constant from a JSON parameter object, attaching the
/// absolute difference to its independent cross-check where one exists.
pub fn evaluate(name: &str, params: &Value) -> Result<ConstantValue> {
    let (value, cross) = match name {
        "c_n_tau" => {
            let (n, tau) = (get_u32(params, "n")?, get_f64(params, "tau")?);
            (c_n_tau(n, tau)?, Some(c_n_tau_quadrature(n, tau)?))
        }
        "c2_d" => (c2_d(get_u32(params, "d")?)?, None),
        "c1_integral" => {
            let d = get_u32(params, "d")?;
            (c1_integral(d)?, Some(c1_integral_quadrature(d)?))
        }
        "C_nd" => {
            let (n, d) = (get_u32(params, "n")?, get_u32(params, "d")?);
            (sphere_moment(n, d)?, Some(sphere_moment_quadrature(n, d)?))
        }
        "gaussian_abs_moment" => {
            let a = get_f64(params, "alpha")?;
            (gaussian_abs_moment(a)?, Some(gaussian_abs_moment_quadrature(a)?))
        }
        "C1_dp" => (
            lp_density_constant(get_u32(params, "d")?, get_f64(params, "p")?, get_f64(params, "C")?)?,
            None,
        ),
        "lp_order_constant" => (
            lp_order_constant(get_f64(params, "alpha")?, get_f64(params, "p")?, get_f64(params, "C")?)?,
            None,
        ),
        "tv_fm_constant" | "lemma22_constant" => (
            tv_fm_constant(get_f64(params, "C_nu")?, get_f64(params, "C_sigma")?, get_f64(params, "alpha")?)?,
            None,
        ),
        "polynomial_tv_fm_constant" | "cor53_constant" => (
            polynomial_tv_fm_constant(
                get_f64(params, "C")?,
                get_f64(params, "sigma_f")?,
                get_f64(params, "sigma_g")?,
                get_u32(params, "d")?,
            )?,
            None,
        ),
        "malliavin_composite" => {
            let comp = MalliavinComposite { low_dim_constant: get_f64(params, "C1")?, d: get_u32(params, "d")? };
            (comp.evaluate(get_f64(params, "c")?), None)
        }
        other => return Err(Error::Configuration(format!("unknown constant `{other}`"))),
    };
    Ok(ConstantValue {
        name: name.to_string(),
        params: if params.is_null() { json!({}) } else { params.clone() },
        value,
        crosscheck_error: cross.map(|c| (c - value).abs()),
    })
}
