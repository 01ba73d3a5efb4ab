//! One-dimensional laws `μ∘f⁻¹`: histogram estimates from samples and exact
//! oracles for the families with closed-form distribution functions.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::measure::{Family, LogConcaveMeasure};
use crate::polynomial::Polynomial;
use crate::special::{gamma, normal_cdf, normal_pdf, normal_quantile};

/// Closed-form laws on ℝ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "oracle", rename_all = "snake_case")]
pub enum Oracle {
    Gaussian { mean: f64, sd: f64 },
    Chi2_1,
    /// Law of `Z^k` (or `|Z|^k` when `abs`) for `Z ~ N(0,1)`.
    PowerImage { k: u32, abs: bool },
    Uniform { a: f64, b: f64 },
    /// Law of `a·X + b` for `X` with law `base`.
    Scaled { base: Box<Oracle>, a: f64, b: f64 },
}

impl Oracle {
    pub fn from_id(id: &str, params: &Value) -> Result<Self> {
        let num = |key: &str, default: Option<f64>| -> Result<f64> {
            match params.get(key) {
                Some(v) => v
                    .as_f64()
                    .ok_or_else(|| Error::Configuration(format!("oracle parameter `{key}` must be a number"))),
                None => default.ok_or_else(|| Error::Configuration(format!("oracle parameter `{key}` is required"))),
            }
        };
        let o = match id {
            "gaussian" => Oracle::Gaussian { mean: num("mean", Some(0.0))?, sd: num("sd", Some(1.0))? },
            "chi2_1" => Oracle::Chi2_1,
            "power_image" => {
                let k = num("k", None)?;
                if !(k >= 1.0 && k.fract() == 0.0) {
                    return Err(Error::Range(format!("power_image needs an integer k >= 1, got {k}")));
                }
                let abs = params.get("abs").and_then(Value::as_bool).unwrap_or(false);
                Oracle::PowerImage { k: k as u32, abs }
            }
            "uniform" => Oracle::Uniform { a: num("a", Some(0.0))?, b: num("b", Some(1.0))? },
            other => return Err(Error::UnknownOracle(other.to_string())),
        };
        o.validate()?;
        Ok(o)
    }

    fn validate(&self) -> Result<()> {
        match self {
            Oracle::Gaussian { sd, .. } if !(*sd > 0.0) => Err(Error::Range("gaussian sd must be positive".into())),
            Oracle::Uniform { a, b } if !(b > a) => Err(Error::Range("uniform needs a < b".into())),
            Oracle::PowerImage { k: 0, .. } => Err(Error::Range("power_image needs k >= 1".into())),
            Oracle::Scaled { a, base, .. } => {
                if *a == 0.0 || !a.is_finite() {
                    return Err(Error::Range("scale must be nonzero".into()));
                }
                base.validate()
            }
            _ => Ok(()),
        }
    }

    pub fn id(&self) -> String {
        match self {
            Oracle::Gaussian { mean, sd } => format!("gaussian({mean}, {sd})"),
            Oracle::Chi2_1 => "chi2_1".into(),
            Oracle::PowerImage { k, abs: false } => format!("power_image({k})"),
            Oracle::PowerImage { k, abs: true } => format!("abs_power_image({k})"),
            Oracle::Uniform { a, b } => format!("uniform({a}, {b})"),
            Oracle::Scaled { base, a, b } => format!("{a}*{}+{b}", base.id()),
        }
    }

    /// Whether the law is carried by `[0, ∞)` as an even power of `Z`.
    fn one_sided_power(k: u32, abs: bool) -> bool {
        abs || k % 2 == 0
    }

    pub fn pdf(&self, t: f64) -> f64 {
        match self {
            Oracle::Gaussian { mean, sd } => normal_pdf((t - mean) / sd) / sd,
            Oracle::Chi2_1 => Oracle::PowerImage { k: 2, abs: false }.pdf(t),
            Oracle::PowerImage { k, abs } => {
                let kf = *k as f64;
                if *k == 1 && !abs {
                    return normal_pdf(t);
                }
                let one_sided = Self::one_sided_power(*k, *abs);
                if one_sided && t < 0.0 {
                    return 0.0;
                }
                let y = t.abs();
                if y == 0.0 {
                    return if *k == 1 { 2.0 * normal_pdf(0.0) } else { f64::INFINITY };
                }
                let z = y.powf(1.0 / kf);
                let base = normal_pdf(z) * z / (kf * y);
                if one_sided {
                    2.0 * base
                } else {
                    base
                }
            }
            Oracle::Uniform { a, b } => {
                if t >= *a && t <= *b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Oracle::Scaled { base, a, b } => base.pdf((t - b) / a) / a.abs(),
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            Oracle::Gaussian { mean, sd } => normal_cdf((t - mean) / sd),
            Oracle::Chi2_1 => Oracle::PowerImage { k: 2, abs: false }.cdf(t),
            Oracle::PowerImage { k, abs } => {
                let kf = *k as f64;
                if Self::one_sided_power(*k, *abs) {
                    if t <= 0.0 {
                        0.0
                    } else {
                        // 2Φ(z) − 1 = erf(z/√2), accurate near 0
                        let z = t.powf(1.0 / kf);
                        statrs::function::erf::erf(z / std::f64::consts::SQRT_2)
                    }
                } else {
                    normal_cdf(t.signum() * t.abs().powf(1.0 / kf))
                }
            }
            Oracle::Uniform { a, b } => ((t - a) / (b - a)).clamp(0.0, 1.0),
            Oracle::Scaled { base, a, b } => {
                let s = (t - b) / a;
                if *a > 0.0 {
                    base.cdf(s)
                } else {
                    1.0 - base.cdf(s)
                }
            }
        }
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Range(format!("quantile level must lie in (0,1), got {u}")));
        }
        Ok(match self {
            Oracle::Gaussian { mean, sd } => mean + sd * normal_quantile(u),
            Oracle::Chi2_1 => Oracle::PowerImage { k: 2, abs: false }.quantile(u)?,
            Oracle::PowerImage { k, abs } => {
                if Self::one_sided_power(*k, *abs) {
                    normal_quantile(0.5 * (1.0 + u)).powi(*k as i32)
                } else {
                    normal_quantile(u).powi(*k as i32)
                }
            }
            Oracle::Uniform { a, b } => a + u * (b - a),
            Oracle::Scaled { base, a, b } => {
                let q = if *a > 0.0 { base.quantile(u)? } else { base.quantile(1.0 - u)? };
                a * q + b
            }
        })
    }

    /// Support `[lo, hi]`, possibly infinite.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Oracle::Gaussian { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Oracle::Chi2_1 => (0.0, f64::INFINITY),
            Oracle::PowerImage { k, abs } => {
                if Self::one_sided_power(*k, *abs) {
                    (0.0, f64::INFINITY)
                } else {
                    (f64::NEG_INFINITY, f64::INFINITY)
                }
            }
            Oracle::Uniform { a, b } => (*a, *b),
            Oracle::Scaled { base, a, b } => {
                let (lo, hi) = base.support();
                let (x, y) = (a * lo + b, a * hi + b);
                (x.min(y), x.max(y))
            }
        }
    }

    /// Points where the density is singular or discontinuous.
    pub fn singular_points(&self) -> Vec<f64> {
        match self {
            Oracle::Gaussian { .. } => vec![],
            Oracle::Chi2_1 => vec![0.0],
            Oracle::PowerImage { k, abs } => {
                if *k == 1 && !abs {
                    vec![]
                } else {
                    vec![0.0]
                }
            }
            Oracle::Uniform { a, b } => vec![*a, *b],
            Oracle::Scaled { base, a, b } => base.singular_points().into_iter().map(|s| a * s + b).collect(),
        }
    }

    /// Largest `k` with density blowing up like `|t|^{1/k − 1}`; 1 when bounded.
    pub fn singularity_order(&self) -> u32 {
        match self {
            Oracle::Chi2_1 => 2,
            Oracle::PowerImage { k, .. } => *k,
            Oracle::Scaled { base, .. } => base.singularity_order(),
            _ => 1,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Oracle::Gaussian { mean, .. } => *mean,
            Oracle::Chi2_1 => 1.0,
            Oracle::PowerImage { k, abs } => {
                if *abs || k % 2 == 0 {
                    abs_normal_moment(*k as f64)
                } else {
                    0.0
                }
            }
            Oracle::Uniform { a, b } => 0.5 * (a + b),
            Oracle::Scaled { base, a, b } => a * base.mean() + b,
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Oracle::Gaussian { sd, .. } => sd * sd,
            Oracle::Chi2_1 => 2.0,
            Oracle::PowerImage { k, .. } => {
                let m = self.mean();
                abs_normal_moment(2.0 * *k as f64) - m * m
            }
            Oracle::Uniform { a, b } => (b - a).powi(2) / 12.0,
            Oracle::Scaled { base, a, .. } => a * a * base.variance(),
        }
    }

    /// `(lo, hi)` holding all but `2ε` of the mass.
    pub fn truncation(&self, eps: f64) -> (f64, f64) {
        let (lo, hi) = self.support();
        let lo = if lo.is_finite() { lo } else { self.quantile(eps).expect("eps in (0,1)") };
        let hi = if hi.is_finite() { hi } else { self.quantile(1.0 - eps).expect("eps in (0,1)") };
        (lo, hi)
    }
}

/// `E|Z|^q` for `Z ~ N(0,1)`.
pub fn abs_normal_moment(q: f64) -> f64 {
    2f64.powf(q / 2.0) * gamma((q + 1.0) / 2.0) / std::f64::consts::PI.sqrt()
}

/// Exact law of `f` under `m` when it belongs to one of the oracle families.
pub fn oracle_for(f: &Polynomial, m: &LogConcaveMeasure) -> Option<Oracle> {
    if f.is_constant() || f.nvars() > m.dim() {
        return None;
    }
    let f = f.with_nvars(m.dim()).ok()?;
    let constant = f.terms().iter().find(|(a, _)| a.iter().all(|&e| e == 0)).map(|(_, c)| *c).unwrap_or(0.0);
    let nonconst: Vec<(&Vec<u32>, f64)> =
        f.terms().iter().filter(|(a, _)| a.iter().any(|&e| e != 0)).map(|(a, c)| (a, *c)).collect();
    match m.family() {
        Family::Gaussian(g) => {
            if f.degree() == 1 {
                let n = m.dim();
                let mut b = vec![0.0; n];
                for (a, c) in &nonconst {
                    let i = a.iter().position(|&e| e == 1)?;
                    b[i] = *c;
                }
                let mean: f64 = constant + b.iter().zip(&g.mean).map(|(x, y)| x * y).sum::<f64>();
                let mut var = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        var += b[i] * g.cov[(i, j)] * b[j];
                    }
                }
                return Some(Oracle::Gaussian { mean, sd: var.sqrt() });
            }
            let [(alpha, c)] = nonconst.as_slice() else { return None };
            let vars: Vec<usize> = alpha.iter().enumerate().filter(|(_, e)| **e != 0).map(|(i, _)| i).collect();
            let [i] = vars.as_slice() else { return None };
            if g.mean[*i] != 0.0 {
                return None;
            }
            let k = alpha[*i];
            let s = g.cov[(*i, *i)].sqrt();
            let scale = c * s.powi(k as i32);
            if k == 2 && scale == 1.0 && constant == 0.0 {
                return Some(Oracle::Chi2_1);
            }
            let base = Oracle::PowerImage { k, abs: false };
            if scale == 1.0 && constant == 0.0 {
                return Some(base);
            }
            Some(Oracle::Scaled { base: Box::new(base), a: scale, b: constant })
        }
        Family::UniformBox { center, half_widths, .. } => {
            if f.degree() != 1 || nonconst.len() != 1 {
                return None;
            }
            let (alpha, c) = nonconst[0];
            let i = alpha.iter().position(|&e| e == 1)?;
            let lo = c * (center[i] - half_widths[i]) + constant;
            let hi = c * (center[i] + half_widths[i]) + constant;
            Some(Oracle::Uniform { a: lo.min(hi), b: lo.max(hi) })
        }
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensitySource {
    Histogram { samples: usize },
    Analytic { oracle: Oracle },
    Imported,
}

/// Piecewise-constant density on a uniform grid of cells
/// `[left + i·step, left + (i+1)·step)`; `values[i]` is the cell average.
#[derive(Clone, Debug, PartialEq)]
pub struct Density1D {
    pub left: f64,
    pub step: f64,
    pub values: Vec<f64>,
    pub support: (f64, f64),
    /// Mass lying left of the grid.
    pub mass_below: f64,
    pub source: DensitySource,
}

impl Density1D {
    pub fn new(left: f64, step: f64, values: Vec<f64>, support: (f64, f64), mass_below: f64, source: DensitySource) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() || !left.is_finite() {
            return Err(Error::Configuration("density grid needs finite left end and positive step".into()));
        }
        if values.is_empty() {
            return Err(Error::Configuration("density grid is empty".into()));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidMeasure("density values must be finite and nonnegative".into()));
        }
        Ok(Self { left, step, values, support, mass_below, source })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn right(&self) -> f64 {
        self.left + self.step * self.values.len() as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.left + (i as f64 + 0.5) * self.step
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.step
    }

    pub fn oracle(&self) -> Option<&Oracle> {
        match &self.source {
            DensitySource::Analytic { oracle } => Some(oracle),
            _ => None,
        }
    }

    /// Density value of the cell containing `t`; 0 off the grid.
    pub fn value_at(&self, t: f64) -> f64 {
        let x = (t - self.left) / self.step;
        if x < 0.0 || x >= self.values.len() as f64 {
            return 0.0;
        }
        self.values[x as usize]
    }

    /// Distribution function: `mass_below` plus the integral of the
    /// piecewise-constant density up to `t`.
    pub fn cdf(&self, t: f64) -> f64 {
        let x = (t - self.left) / self.step;
        if x <= 0.0 {
            return self.mass_below;
        }
        let n = self.values.len();
        let full = (x.floor() as usize).min(n);
        let mut s: f64 = self.values[..full].iter().sum::<f64>() * self.step;
        if full < n {
            s += self.values[full] * (x - full as f64) * self.step;
        }
        self.mass_below + s
    }

    /// Cumulative masses at the `len() + 1` cell boundaries.
    pub fn node_cdf(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.values.len() + 1);
        let mut acc = self.mass_below;
        out.push(acc);
        for v in &self.values {
            acc += v * self.step;
            out.push(acc);
        }
        out
    }

    /// Inverse of [`cdf`](Self::cdf) by bisection to `1e-9`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Range(format!("quantile level must lie in (0,1), got {u}")));
        }
        let (mut lo, mut hi) = (self.left, self.right());
        if self.cdf(lo) >= u {
            return Ok(lo);
        }
        if self.cdf(hi) < u {
            return Ok(hi);
        }
        for _ in 0..200 {
            if hi - lo <= 1e-9 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn mean_variance(&self) -> (f64, f64) {
        let mass = self.mass();
        let mean = (0..self.len()).map(|i| self.center(i) * self.values[i]).sum::<f64>() * self.step / mass;
        let second = (0..self.len())
            .map(|i| {
                let (a, b) = (self.left + i as f64 * self.step, self.left + (i + 1) as f64 * self.step);
                self.values[i] * (b.powi(3) - a.powi(3)) / 3.0
            })
            .sum::<f64>()
            / mass;
        (mean, (second - mean * mean).max(0.0))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let source = match &self.source {
            DensitySource::Histogram { samples } => format!("histogram ({samples} samples)"),
            DensitySource::Analytic { oracle } => format!("analytic {}", oracle.id()),
            DensitySource::Imported => "imported".into(),
        };
        let _ = writeln!(out, "# source: {source}");
        let _ = writeln!(out, "# left: {:.16e}", self.left);
        let _ = writeln!(out, "# step: {:.16e}", self.step);
        let _ = writeln!(out, "# count: {}", self.values.len());
        let _ = writeln!(out, "# mass_below: {:.16e}", self.mass_below);
        let _ = writeln!(out, "# support: {:.16e} {:.16e}", self.support.0, self.support.1);
        out.push_str("t,density\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{:.16e},{:.16e}", self.center(i), v);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut left = None;
        let mut step = None;
        let mut mass_below = 0.0;
        let mut support = None;
        let mut ts = Vec::new();
        let mut vs = Vec::new();
        let bad = |line: usize, msg: &str| Error::Configuration(format!("density CSV line {}: {msg}", line + 1));
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let Some((k, v)) = meta.split_once(':') else { continue };
                let v = v.trim();
                let num = |s: &str| s.parse::<f64>().map_err(|_| bad(ln, "malformed number"));
                match k.trim() {
                    "left" => left = Some(num(v)?),
                    "step" => step = Some(num(v)?),
                    "mass_below" => mass_below = num(v)?,
                    "support" => {
                        let parts: Vec<&str> = v.split_whitespace().collect();
                        if parts.len() == 2 {
                            support = Some((num(parts[0])?, num(parts[1])?));
                        }
                    }
                    _ => {}
                }
                continue;
            }
            if line.starts_with(|c: char| c.is_ascii_alphabetic()) {
                continue;
            }
            let mut cells = line.split(',');
            let t = cells.next().and_then(|s| s.trim().parse::<f64>().ok()).ok_or_else(|| bad(ln, "bad t"))?;
            let v = cells.next().and_then(|s| s.trim().parse::<f64>().ok()).ok_or_else(|| bad(ln, "bad density"))?;
            ts.push(t);
            vs.push(v);
        }
        if vs.is_empty() {
            return Err(Error::Configuration("density CSV has no rows".into()));
        }
        let step = match step {
            Some(s) => s,
            None if ts.len() >= 2 => ts[1] - ts[0],
            None => return Err(Error::Configuration("density CSV needs a step with a single row".into())),
        };
        let left = left.unwrap_or(ts[0] - 0.5 * step);
        let right = left + step * vs.len() as f64;
        Density1D::new(left, step, vs, support.unwrap_or((left, right)), mass_below, DensitySource::Imported)
    }
}

/// Oracle law discretized onto `count` cells starting at `left`; cell values
/// are exact CDF differences divided by the step.
pub fn analytic_density_on(oracle: &Oracle, left: f64, step: f64, count: usize) -> Result<Density1D> {
    let mut values = Vec::with_capacity(count);
    let mut prev = oracle.cdf(left);
    let mass_below = prev;
    for i in 0..count {
        let next = oracle.cdf(left + (i + 1) as f64 * step);
        values.push(((next - prev) / step).max(0.0));
        prev = next;
    }
    Density1D::new(left, step, values, oracle.support(), mass_below, DensitySource::Analytic { oracle: oracle.clone() })
}

/// Oracle law on a default grid of `count` cells covering all but `2·10⁻¹¹`
/// of the mass.
pub fn analytic_density(oracle: &Oracle, count: usize) -> Result<Density1D> {
    let (lo, hi) = oracle.truncation(1e-11);
    analytic_density_on(oracle, lo, (hi - lo) / count as f64, count)
}

/// Sorted sample of a real random variable.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalSample1D {
    values: Vec<f64>,
}

impl EmpiricalSample1D {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Configuration("empirical sample needs at least 2 values".into()));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Estimation(format!("sample value {bad} is not finite")));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Linear-interpolation quantile of the order statistics.
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.values.len();
        let x = u.clamp(0.0, 1.0) * (n - 1) as f64;
        let i = (x.floor() as usize).min(n - 2);
        let w = x - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// Empirical distribution function `#{X ≤ t}/n`.
    pub fn cdf(&self, t: f64) -> f64 {
        self.values.partition_point(|v| *v <= t) as f64 / self.values.len() as f64
    }

    pub fn mean_variance(&self) -> (f64, f64) {
        let n = self.values.len() as f64;
        let mean = self.values.iter().sum::<f64>() / n;
        let var = self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistogramOptions {
    /// Defaults to `round(√count)`.
    pub bins: Option<usize>,
    /// Quantile trimmed from each end.
    pub trim: f64,
    /// Explicit grid range, overriding the quantile trim.
    pub range: Option<(f64, f64)>,
}

impl Default for HistogramOptions {
    fn default() -> Self {
        Self { bins: None, trim: 5e-4, range: None }
    }
}

pub const MIN_HISTOGRAM_SAMPLES: usize = 1000;

pub fn estimate_density(s: &EmpiricalSample1D, opts: &HistogramOptions) -> Result<Density1D> {
    let n = s.len();
    if n < MIN_HISTOGRAM_SAMPLES {
        return Err(Error::Configuration(format!(
            "density estimation needs at least {MIN_HISTOGRAM_SAMPLES} samples, got {n}"
        )));
    }
    let (lo, hi) = opts.range.unwrap_or((s.quantile(opts.trim), s.quantile(1.0 - opts.trim)));
    if !(hi - lo > 1e-12) {
        return Err(Error::Degenerate("sample is essentially constant; f must be non-constant".into()));
    }
    let bins = opts.bins.unwrap_or(((n as f64).sqrt().round() as usize).max(1));
    let step = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    let mut below = 0usize;
    for &v in s.values() {
        if v < lo {
            below += 1;
            continue;
        }
        let i = ((v - lo) / step) as usize;
        if i < bins {
            counts[i] += 1;
        } else if v <= hi {
            counts[bins - 1] += 1;
        }
    }
    let scale = 1.0 / (n as f64 * step);
    let values = counts.iter().map(|c| *c as f64 * scale).collect();
    Density1D::new(lo, step, values, (s.values()[0], s.values()[n - 1]), below as f64 / n as f64, DensitySource::Histogram { samples: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn oracle_point_values() {
        assert!((Oracle::Chi2_1.pdf(1.0) - (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
        assert!((Oracle::Chi2_1.pdf(1.0) - 0.2420).abs() < 1e-4);
        let g = Oracle::from_id("gaussian", &json!({"mean": 0.0, "sd": 1.0})).unwrap();
        assert!((g.pdf(0.0) - 0.3989).abs() < 1e-4);
        let u = Oracle::from_id("uniform", &json!({"a": 0.0, "b": 1.0})).unwrap();
        assert_eq!(u.pdf(0.5), 1.0);
        assert!(matches!(Oracle::from_id("nosuch", &json!({})), Err(Error::UnknownOracle(_))));
    }

    #[test]
    fn oracle_cdf_quantile_consistency() {
        let cases = vec![
            Oracle::Chi2_1,
            Oracle::PowerImage { k: 3, abs: false },
            Oracle::PowerImage { k: 4, abs: false },
            Oracle::Gaussian { mean: 1.0, sd: 2.0 },
            Oracle::Scaled { base: Box::new(Oracle::Chi2_1), a: -1.5, b: 0.5 },
        ];
        for o in cases {
            for &u in &[0.01, 0.3, 0.5, 0.9, 0.999] {
                let t = o.quantile(u).unwrap();
                assert!((o.cdf(t) - u).abs() < 1e-10, "{o:?} at {u}");
            }
        }
        // P(χ²₁ ≤ t) = P(|Z| ≤ √t)
        let t = 0.0158;
        assert!((Oracle::Chi2_1.cdf(t) - (2.0 * normal_cdf(t.sqrt()) - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn oracle_variances() {
        assert_eq!(Oracle::Chi2_1.variance(), 2.0);
        // Var(Z³) = 15
        assert!((Oracle::PowerImage { k: 3, abs: false }.variance() - 15.0).abs() < 1e-10);
        // Var(Z⁴) = 105 − 9
        assert!((Oracle::PowerImage { k: 4, abs: false }.variance() - 96.0).abs() < 1e-9);
    }

    #[test]
    fn analytic_grid_mass() {
        for o in [Oracle::Chi2_1, Oracle::Gaussian { mean: 0.0, sd: 1.0 }, Oracle::PowerImage { k: 3, abs: false }] {
            let d = analytic_density(&o, 2000).unwrap();
            assert!((d.mass() + d.mass_below - 1.0).abs() < 1e-8, "{o:?}");
        }
        let d = analytic_density(&Oracle::Uniform { a: 0.0, b: 1.0 }, 100).unwrap();
        assert!((d.value_at(0.5) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn density_cdf_quantile() {
        let g = analytic_density(&Oracle::Gaussian { mean: 0.0, sd: 1.0 }, 4000).unwrap();
        assert!((g.cdf(0.0) - 0.5).abs() < 1e-10);
        let u = analytic_density(&Oracle::Uniform { a: 0.0, b: 1.0 }, 100).unwrap();
        assert!((u.quantile(0.25).unwrap() - 0.25).abs() < 1e-9);
        let c = analytic_density(&Oracle::Chi2_1, 4000).unwrap();
        assert!((c.cdf(0.0158) - 0.1).abs() < 2e-3);
        for k in 1..100 {
            let u = k as f64 / 100.0;
            assert!((g.cdf(g.quantile(u).unwrap()) - u).abs() < 1e-6);
        }
        assert!(g.quantile(1.0).is_err());
    }

    #[test]
    fn histogram_errors() {
        let s = EmpiricalSample1D::new(vec![1.0; 5000]).unwrap();
        assert!(matches!(estimate_density(&s, &HistogramOptions::default()), Err(Error::Degenerate(_))));
        let s = EmpiricalSample1D::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(estimate_density(&s, &HistogramOptions::default()).is_err());
        assert!(EmpiricalSample1D::new(vec![1.0]).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let d = analytic_density(&Oracle::Chi2_1, 50).unwrap();
        let back = Density1D::from_csv(&d.to_csv()).unwrap();
        assert_eq!(back.values, d.values);
        assert_eq!(back.left, d.left);
        assert_eq!(back.step, d.step);
        assert_eq!(back.mass_below, d.mass_below);
    }

    #[test]
    fn oracle_recognition() {
        let g = LogConcaveMeasure::standard_gaussian(1);
        let f = Polynomial::parse("x1^2").unwrap();
        assert_eq!(oracle_for(&f, &g), Some(Oracle::Chi2_1));
        let f = Polynomial::parse("2*x1 + 1").unwrap();
        assert_eq!(oracle_for(&f, &g), Some(Oracle::Gaussian { mean: 1.0, sd: 2.0 }));
        let f = Polynomial::parse("x1^2 + x1").unwrap();
        assert_eq!(oracle_for(&f, &g), None);
        let b = LogConcaveMeasure::uniform_box(vec![0.5], vec![0.5]).unwrap();
        let f = Polynomial::parse("x1").unwrap();
        assert_eq!(oracle_for(&f, &b), Some(Oracle::Uniform { a: 0.0, b: 1.0 }));
    }
}
