//! Desk-scale experiments for the smoothness and anti-concentration
//! inequalities, each producing an [`InequalityReport`].

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::constants;
use crate::error::{Error, Result};
use crate::measure::{self, LogConcaveMeasure, MeasureSpec, MomentBudget};
use crate::metrics;
use crate::polynomial::{self, Polynomial};
use crate::pushforward::{self, Density1D, EmpiricalSample1D, HistogramOptions, Oracle};
use crate::quadrature::{de_with_breaks, golden_section};
use crate::sampler::{self, SamplerOptions, SeededStream, ERROR_BATCHES};

/// Standard deviations below this make `f` degenerate.
pub const MIN_SIGMA: f64 = 1e-6;
/// Relative change allowed for an empirical constant under a larger budget.
pub const STABILITY_TOLERANCE: f64 = 0.1;
/// Slack on fitted exponents.
pub const EXPONENT_SLACK: f64 = 0.05;

/// Sampling budget and evaluation path shared by every check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub samples: usize,
    pub seed: u64,
    /// Stream index inside the seed family.
    #[serde(default)]
    pub stream: u64,
    /// Use the exact law of `f` when one is known.
    #[serde(default = "yes")]
    pub use_oracle: bool,
    #[serde(default)]
    pub sampler: SamplerOptions,
}

fn yes() -> bool {
    true
}

impl Default for Budget {
    fn default() -> Self {
        Self { samples: 200_000, seed: 0, stream: 0, use_oracle: true, sampler: SamplerOptions::default() }
    }
}

impl Budget {
    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        Self { samples, seed, use_oracle: false, ..Self::default() }
    }

    pub fn oracle() -> Self {
        Self::default()
    }

    fn stream(&self) -> SeededStream {
        SeededStream::new(self.seed, self.stream)
    }
}

/// One `lhs ≤ rhs` comparison; `rhs = None` only requires a finite `lhs`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub label: String,
    pub lhs: f64,
    pub rhs: Option<f64>,
    pub holds: bool,
}

impl Check {
    pub fn le(label: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let holds = lhs <= rhs;
        Self { label: label.into(), lhs, rhs: Some(rhs), holds }
    }

    pub fn finite(label: impl Into<String>, lhs: f64) -> Self {
        Self { label: label.into(), lhs, rhs: None, holds: lhs.is_finite() }
    }

    pub fn recompute(&self) -> bool {
        match self.rhs {
            Some(r) => self.lhs <= r,
            None => self.lhs.is_finite(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Parameters {
    pub measure: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polynomial: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub second_polynomial: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub grids: BTreeMap<String, Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub stream: u64,
    pub samples: usize,
    /// `"oracle"` or `"monte_carlo"`.
    pub path: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
}

/// Pairs for exponent plots, e.g. `(log h, log Δ(h))`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlotSeries {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityReport {
    pub id: String,
    pub parameters: Parameters,
    pub measured: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constant_stderr: Option<f64>,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub criterion: String,
    pub warnings: Vec<String>,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub plot: Vec<PlotSeries>,
}

impl InequalityReport {
    fn new(id: &str, m: &LogConcaveMeasure, budget: &Budget, path: &str) -> Self {
        Self {
            id: id.into(),
            parameters: Parameters {
                measure: json!({"family": format!("{:?}", m.tag()).to_lowercase(), "dim": m.dim()}),
                polynomial: None,
                second_polynomial: None,
                d: None,
                alpha: None,
                p: None,
                grids: BTreeMap::new(),
            },
            measured: BTreeMap::new(),
            constant: None,
            constant_stderr: None,
            checks: Vec::new(),
            pass: false,
            criterion: String::new(),
            warnings: Vec::new(),
            provenance: Provenance {
                seed: budget.seed,
                stream: budget.stream,
                samples: if path == "oracle" { 0 } else { budget.samples },
                path: path.into(),
                runtime_seconds: None,
            },
            plot: Vec::new(),
        }
    }

    fn put(&mut self, key: &str, v: impl Serialize) {
        self.measured.insert(key.into(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    fn finish(mut self, started: Instant) -> Self {
        self.pass = self.recompute_pass();
        self.provenance.runtime_seconds = Some(started.elapsed().as_secs_f64());
        self
    }

    /// Pass flag from the stored checks alone.
    pub fn recompute_pass(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(Check::recompute)
    }

    pub fn check(&self, label: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.label == label)
    }

    pub fn number(&self, key: &str) -> Option<f64> {
        self.measured.get(key).and_then(Value::as_f64)
    }
}

/// Empirical law of `f(X)`, kept sorted with each value's batch label so
/// windowed sums still give batch-means errors.
#[derive(Clone, Debug)]
pub struct EmpiricalLaw {
    sorted: Vec<(f64, u8)>,
    sample: EmpiricalSample1D,
}

impl EmpiricalLaw {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Estimation("f is non-finite on some samples".into()));
        }
        let n = values.len();
        let per = n.div_ceil(ERROR_BATCHES).max(1);
        let mut sorted: Vec<(f64, u8)> = values.iter().enumerate().map(|(i, v)| (*v, (i / per) as u8)).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { sorted, sample: EmpiricalSample1D::new(values.to_vec())? })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sample(&self) -> &EmpiricalSample1D {
        &self.sample
    }

    /// Mean of `g` over values in `[lo, hi]` (zero elsewhere) with its
    /// batch-means standard error.
    pub fn windowed_mean<G: Fn(f64) -> f64>(&self, g: G, lo: f64, hi: f64) -> (f64, f64) {
        let a = self.sorted.partition_point(|v| v.0 < lo);
        let b = self.sorted.partition_point(|v| v.0 <= hi);
        let mut sums = [0.0; 256];
        let mut counts = [0usize; 256];
        let per = self.len().div_ceil(ERROR_BATCHES).max(1);
        for i in 0..ERROR_BATCHES {
            counts[i] = per.min(self.len().saturating_sub(i * per));
        }
        let mut total = 0.0;
        for &(v, batch) in &self.sorted[a..b] {
            let x = g(v);
            total += x;
            sums[batch as usize] += x;
        }
        let n = self.len() as f64;
        let mean = total / n;
        let used: Vec<f64> =
            (0..ERROR_BATCHES).filter(|i| counts[*i] > 0).map(|i| sums[i] / counts[i] as f64).collect();
        let k = used.len() as f64;
        let se = if k > 1.0 {
            let bm = used.iter().sum::<f64>() / k;
            (used.iter().map(|x| (x - bm).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
        } else {
            f64::NAN
        };
        (mean, se)
    }

    pub fn fraction_abs_le(&self, t: f64) -> f64 {
        let a = self.sorted.partition_point(|v| v.0 < -t);
        let b = self.sorted.partition_point(|v| v.0 <= t);
        (b - a) as f64 / self.len() as f64
    }

    pub fn fraction_in(&self, lo: f64, hi: f64) -> f64 {
        let a = self.sorted.partition_point(|v| v.0 < lo);
        let b = self.sorted.partition_point(|v| v.0 <= hi);
        (b - a) as f64 / self.len() as f64
    }
}

/// Law of `f(X)`, exact or empirical.
#[derive(Clone, Debug)]
pub enum Law {
    Oracle(Oracle),
    Empirical(EmpiricalLaw),
}

impl Law {
    pub fn sigma(&self) -> (f64, f64) {
        match self {
            Law::Oracle(o) => (o.variance().sqrt(), 0.0),
            Law::Empirical(e) => {
                let v = e.sample.values();
                let (mean, _) = e.sample.mean_variance();
                let dev: Vec<f64> = v.iter().map(|x| (x - mean).powi(2)).collect();
                let (var, se) = sampler::batch_means(&dev);
                let s = var.sqrt();
                (s, if s > 0.0 { se / (2.0 * s) } else { f64::NAN })
            }
        }
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        match self {
            Law::Oracle(o) => o.quantile(u),
            Law::Empirical(e) => Ok(e.sample.quantile(u)),
        }
    }

    /// `E g(T)` for `g` vanishing outside `[lo, hi]`; `peaks` marks points
    /// where `g` is sharp.
    pub fn expect_window<G: Fn(f64) -> f64>(&self, g: G, lo: f64, hi: f64, peaks: &[f64]) -> (f64, f64) {
        match self {
            Law::Oracle(o) => {
                let (slo, shi) = o.support();
                let (a, b) = (lo.max(slo), hi.min(shi));
                if !(b > a) {
                    return (0.0, 0.0);
                }
                let mut breaks: Vec<f64> = peaks.to_vec();
                breaks.extend(o.singular_points());
                let r = de_with_breaks(|t| g(t) * o.pdf(t), &breaks, a, b, 1e-10);
                (r.value, 0.0)
            }
            Law::Empirical(e) => e.windowed_mean(g, lo, hi),
        }
    }

    pub fn prob_abs_le(&self, t: f64) -> f64 {
        match self {
            Law::Oracle(o) => (o.cdf(t) - o.cdf(-t)).max(0.0),
            Law::Empirical(e) => e.fraction_abs_le(t),
        }
    }

    pub fn prob_in(&self, lo: f64, hi: f64) -> f64 {
        match self {
            Law::Oracle(o) => (o.cdf(hi) - o.cdf(lo)).max(0.0),
            Law::Empirical(e) => e.fraction_in(lo, hi),
        }
    }

    /// Density on a grid: the exact law's cell averages or a histogram.
    pub fn density(&self, cells: usize) -> Result<Density1D> {
        match self {
            Law::Oracle(o) => pushforward::analytic_density(o, cells),
            Law::Empirical(e) => pushforward::estimate_density(&e.sample, &HistogramOptions::default()),
        }
    }

    pub fn path(&self) -> &'static str {
        match self {
            Law::Oracle(_) => "oracle",
            Law::Empirical(_) => "monte_carlo",
        }
    }
}

/// Values `f(X_i)` on `count` draws from `m`.
pub fn sample_values(f: &Polynomial, m: &LogConcaveMeasure, count: usize, budget: &Budget) -> Result<Vec<f64>> {
    let f = f.with_nvars(m.dim())?;
    let s = sampler::sample_with(m, count, budget.stream(), &budget.sampler)?;
    Ok(s.rows().map(|r| f.eval_unchecked(r)).collect())
}

/// Law of `f` under `m` at budget `budget.samples · factor`, together with
/// the law at the base budget when `factor > 1` (prefix of the same draws).
fn laws(f: &Polynomial, m: &LogConcaveMeasure, budget: &Budget, factor: usize) -> Result<(Law, Option<Law>)> {
    if f.nvars() > m.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), got: f.nvars() });
    }
    if budget.use_oracle {
        if let Some(o) = pushforward::oracle_for(f, m) {
            return Ok((Law::Oracle(o), None));
        }
    }
    let big = sample_values(f, m, budget.samples * factor, budget)?;
    let base = Law::Empirical(EmpiricalLaw::new(&big[..budget.samples])?);
    if factor > 1 {
        Ok((base, Some(Law::Empirical(EmpiricalLaw::new(&big)?))))
    } else {
        Ok((base, None))
    }
}

fn non_degenerate(law: &Law, which: &str) -> Result<f64> {
    let (s, _) = law.sigma();
    if !(s >= MIN_SIGMA) {
        return Err(Error::Degenerate(format!("{which} has standard deviation {s:e} below {MIN_SIGMA:e}")));
    }
    Ok(s)
}

fn relative_change(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (b - a).abs() / a.abs().max(b.abs())
    }
}

fn log_pairs(name: &str, x: &[f64], y: &[f64]) -> PlotSeries {
    PlotSeries { name: name.into(), x: x.iter().map(|v| v.ln()).collect(), y: y.iter().map(|v| v.ln()).collect() }
}

fn degree_of(f: &Polynomial, d: Option<u32>) -> Result<u32> {
    let d = d.unwrap_or_else(|| f.degree());
    if d == 0 {
        return Err(Error::Degenerate("f is constant".into()));
    }
    Ok(d)
}

/// Steep steps `φ_M` with `‖φ_M‖_∞ ≤ 1` and `‖φ′_M‖_∞ = M`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFamily {
    Tanh,
    GaussianStep,
    Ramp,
    #[default]
    All,
}

impl TestFamily {
    fn members(&self) -> &'static [TestFunction] {
        match self {
            TestFamily::Tanh => &[TestFunction::Tanh],
            TestFamily::GaussianStep => &[TestFunction::GaussianStep],
            TestFamily::Ramp => &[TestFunction::Ramp],
            TestFamily::All => &[TestFunction::Tanh, TestFunction::GaussianStep, TestFunction::Ramp],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    /// `tanh(M(t − t₀))`.
    Tanh,
    /// `2Φ(√(π/2)·M(t − t₀)) − 1`.
    GaussianStep,
    /// `clamp(M(t − t₀) − 1, −1, 1)`: `φ′ = M` on `[t₀, t₀ + 2/M]`, the
    /// extremal shape when the window holds the most mass.
    Ramp,
    Constant,
}

impl TestFunction {
    /// `φ′_M(t₀ + s)`.
    pub fn derivative(&self, m: f64, s: f64) -> f64 {
        match self {
            TestFunction::Tanh => {
                let c = (m * s).cosh();
                m / (c * c)
            }
            TestFunction::GaussianStep => m * (-std::f64::consts::FRAC_PI_4 * (m * s).powi(2)).exp(),
            TestFunction::Ramp => {
                if (0.0..2.0 / m).contains(&s) {
                    m
                } else {
                    0.0
                }
            }
            TestFunction::Constant => 0.0,
        }
    }
}

/// Half-width, in units of `1/M`, beyond which `φ′_M` is below `4e^{−40}·M`.
const STEP_WINDOW: f64 = 20.0;

/// `E φ′_M(T − t₀)` and its standard error.
pub fn malliavin_statistic(law: &Law, phi: TestFunction, m: f64, t0: f64) -> (f64, f64) {
    match phi {
        TestFunction::Constant => return (0.0, 0.0),
        TestFunction::Ramp => {
            if let Law::Oracle(o) = law {
                return (m * (o.cdf(t0 + 2.0 / m) - o.cdf(t0)).max(0.0), 0.0);
            }
            return law.expect_window(|_| m, t0, t0 + 2.0 / m, &[]);
        }
        _ => {}
    }
    let w = STEP_WINDOW / m;
    law.expect_window(|t| phi.derivative(m, t - t0), t0 - w, t0 + w, &[t0])
}

/// Quantile levels for the step locations `t₀`.
pub const QUANTILE_LEVELS: [f64; 21] = [
    1e-5, 1e-4, 1e-3, 0.01, 0.025, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.975, 0.99, 0.999, 0.9999,
    0.99999,
];

/// Default `M` grid, in units of `1/σ_f`.
pub fn default_m_grid() -> Vec<f64> {
    metrics::log_spaced(1e2, 1e5, 7)
}

#[derive(Clone, Debug, Serialize)]
pub struct MalliavinSweep {
    pub m: Vec<f64>,
    /// `max_{t₀, φ} E φ′_M(f)`.
    pub statistic: Vec<f64>,
    pub stderr: Vec<f64>,
    pub t0: Vec<f64>,
    pub family: Vec<TestFunction>,
    pub slope: f64,
    pub slope_stderr: f64,
    /// `max_M σ^{1/d} stat(M) / M^{1−1/d}`.
    pub c_hat: f64,
    pub c_hat_stderr: f64,
}

pub fn malliavin_sweep(law: &Law, sigma: f64, d: u32, m_grid: &[f64], family: TestFamily) -> Result<MalliavinSweep> {
    if m_grid.len() < 2 || m_grid.iter().any(|m| !(*m > 0.0)) {
        return Err(Error::Configuration("M grid needs at least two positive values".into()));
    }
    let mut t_grid: Vec<f64> = QUANTILE_LEVELS.iter().map(|u| law.quantile(*u)).collect::<Result<_>>()?;
    match law {
        Law::Oracle(o) => {
            let (lo, hi) = o.support();
            t_grid.extend(o.singular_points());
            t_grid.extend([lo, hi].into_iter().filter(|v| v.is_finite()));
        }
        Law::Empirical(e) => {
            let v = e.sample().values();
            t_grid.extend([v[0], v[v.len() - 1]]);
        }
    }
    t_grid.sort_by(f64::total_cmp);
    t_grid.dedup();
    let beta = 1.0 - 1.0 / d as f64;
    let mut out = MalliavinSweep {
        m: m_grid.to_vec(),
        statistic: Vec::new(),
        stderr: Vec::new(),
        t0: Vec::new(),
        family: Vec::new(),
        slope: f64::NAN,
        slope_stderr: f64::NAN,
        c_hat: 0.0,
        c_hat_stderr: 0.0,
    };
    for &m in m_grid {
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0, TestFunction::Tanh);
        for &phi in family.members() {
            let vals: Vec<f64> = t_grid.iter().map(|t| malliavin_statistic(law, phi, m, *t).0).collect();
            let i = (0..vals.len()).max_by(|a, b| vals[*a].total_cmp(&vals[*b])).unwrap();
            let lo = t_grid[i.saturating_sub(1)];
            let hi = t_grid[(i + 1).min(t_grid.len() - 1)];
            let (mut t, _) = golden_section(|t| -malliavin_statistic(law, phi, m, t).0, lo, hi, 1e-6 * (hi - lo));
            let (mut v, mut se) = malliavin_statistic(law, phi, m, t);
            if v < vals[i] {
                t = t_grid[i];
                (v, se) = malliavin_statistic(law, phi, m, t);
            }
            if v > best.0 {
                best = (v, se, t, phi);
            }
        }
        out.statistic.push(best.0);
        out.stderr.push(best.1);
        out.t0.push(best.2);
        out.family.push(best.3);
        let scaled = sigma.powf(1.0 / d as f64) * best.0 / m.powf(beta);
        if scaled > out.c_hat {
            out.c_hat = scaled;
            out.c_hat_stderr = sigma.powf(1.0 / d as f64) * best.1 / m.powf(beta);
        }
    }
    if out.statistic.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Estimation("Malliavin statistic vanished on the M grid; increase the sample budget".into()));
    }
    let lx: Vec<f64> = out.m.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = out.statistic.iter().map(|v| v.ln()).collect();
    let (slope, se, _) = metrics::fit_line(&lx, &ly);
    out.slope = slope;
    out.slope_stderr = se;
    Ok(out)
}

/// Malliavin-type bound `σ_f^{1/d} E φ′(f) ≤ C ‖φ′‖_∞^{1−1/d}` probed with
/// steep steps. `m_grid` is in units of `1/σ_f`; `None` uses
/// [`default_m_grid`].
pub fn check_malliavin(
    f: &Polynomial,
    m: &LogConcaveMeasure,
    d: Option<u32>,
    m_grid: Option<&[f64]>,
    family: TestFamily,
    budget: &Budget,
) -> Result<InequalityReport> {
    let started = Instant::now();
    let d = degree_of(f, d)?;
    let (law, big) = laws(f, m, budget, 4)?;
    let sigma = non_degenerate(&law, "f")?;
    let unit = m_grid.map(|g| g.to_vec()).unwrap_or_else(default_m_grid);
    let grid: Vec<f64> = unit.iter().map(|v| v / sigma).collect();
    let sweep = malliavin_sweep(&law, sigma, d, &grid, family)?;
    let beta = 1.0 - 1.0 / d as f64;
    let mut r = InequalityReport::new("malliavin", m, budget, law.path());
    r.parameters.polynomial = Some(f.to_string());
    r.parameters.d = Some(d);
    r.parameters.alpha = Some(1.0 / d as f64);
    r.parameters.grids.insert("m".into(), grid.clone());
    r.put("sigma", sigma);
    r.put("sigma_stderr", law.sigma().1);
    r.put("family", family);
    r.put("sweep", &sweep);
    r.put("slope", sweep.slope);
    r.put("slope_stderr", sweep.slope_stderr);
    r.put("expected_slope", beta);
    r.constant = Some(sweep.c_hat);
    r.constant_stderr = Some(sweep.c_hat_stderr);
    r.checks.push(Check::le("exponent", sweep.slope, beta + EXPONENT_SLACK));
    if let Some(big) = &big {
        let (s4, _) = big.sigma();
        let g4: Vec<f64> = unit.iter().map(|v| v / s4).collect();
        let c4 = malliavin_sweep(big, s4, d, &g4, family)?.c_hat;
        r.put("c_hat_4x", c4);
        r.checks.push(Check::le("stability", relative_change(sweep.c_hat, c4), STABILITY_TOLERANCE));
    }
    if d == 1 {
        r.warnings.push("d = 1 is outside the d >= 2 hypothesis of the Malliavin bound; exponent 0 expected".into());
    }
    r.criterion = format!("slope <= {beta} + {EXPONENT_SLACK} and C-hat changes < 10% under 4x samples");
    r.plot.push(log_pairs("log M vs log statistic", &grid, &sweep.statistic));
    Ok(r.finish(started))
}

/// `Δ(h)` of a law: exact for oracles, interval-restricted empirical
/// supremum with `intervals` pieces otherwise.
pub fn shift_modulus_of(law: &Law, h: f64, intervals: usize) -> f64 {
    match law {
        Law::Oracle(o) => metrics::shift_modulus_exact(o, h),
        Law::Empirical(e) => metrics::shift_modulus_empirical(e.sample(), h, intervals),
    }
}

/// Default `h` grid in units of `σ_f`. Sampled laws use larger shifts so
/// that `Δ(h)` stays well above the sampling noise.
pub fn default_h_grid(law: &Law) -> Vec<f64> {
    match law {
        Law::Oracle(_) => metrics::log_spaced(1e-4, 1e-2, 10),
        Law::Empirical(_) => metrics::log_spaced(1e-2, 1e-1, 8),
    }
}

fn exponent_slack(law: &Law) -> f64 {
    match law {
        Law::Oracle(_) => EXPONENT_SLACK,
        Law::Empirical(_) => 0.08,
    }
}

/// `sup_h Δ(h)/h^α` over `h` (absolute units).
fn shift_constant(law: &Law, h: &[f64], alpha: f64, intervals: usize) -> (f64, Vec<f64>) {
    let delta: Vec<f64> = h.iter().map(|v| shift_modulus_of(law, *v, intervals)).collect();
    let c = h.iter().zip(&delta).filter(|(h, _)| **h > 0.0).map(|(h, d)| d / h.powf(alpha)).fold(0.0, f64::max);
    (c, delta)
}

/// `σ_f^{1/d} Δ(h) ≤ 2^{1−1/d} C |h|^{1/d}` for the law of `f`. `h_grid` is
/// in units of `σ_f`. With `c_hat = (Ĉ, stderr)` from [`check_malliavin`]
/// the chain `Δ(h) ≤ 2^{1−1/d} Ĉ σ_f^{−1/d} h^{1/d}` is checked at every
/// `h`, up to three standard errors of `Ĉ`.
pub fn check_shift_tv(
    f: &Polynomial,
    m: &LogConcaveMeasure,
    d: Option<u32>,
    h_grid: Option<&[f64]>,
    budget: &Budget,
    c_hat: Option<(f64, f64)>,
) -> Result<InequalityReport> {
    let started = Instant::now();
    let d = degree_of(f, d)?;
    let alpha = 1.0 / d as f64;
    let (law, big) = laws(f, m, budget, 4)?;
    let sigma = non_degenerate(&law, "f")?;
    let unit = h_grid.map(|g| g.to_vec()).unwrap_or_else(|| default_h_grid(&law));
    let h: Vec<f64> = unit.iter().map(|v| v * sigma).collect();
    let intervals = d as usize;
    let delta: Vec<f64> = h.iter().map(|v| shift_modulus_of(&law, *v, intervals)).collect();
    let ratio: Vec<f64> = h
        .iter()
        .zip(&delta)
        .map(|(h, dl)| if *h == 0.0 { 0.0 } else { sigma.powf(alpha) * dl / h.abs().powf(alpha) })
        .collect();
    let sup = ratio.iter().cloned().fold(0.0, f64::max);
    let fit = metrics::besov_fit_points(alpha, h.iter().map(|v| v.abs()).collect(), delta.clone())?;
    let slack = exponent_slack(&law);
    let mut r = InequalityReport::new("shift_tv", m, budget, law.path());
    r.parameters.polynomial = Some(f.to_string());
    r.parameters.d = Some(d);
    r.parameters.alpha = Some(alpha);
    r.parameters.grids.insert("h".into(), h.clone());
    r.put("sigma", sigma);
    r.put("delta", &delta);
    r.put("ratio", &ratio);
    r.put("sup_ratio", sup);
    r.put("slope", fit.slope);
    r.put("slope_stderr", fit.slope_stderr);
    r.put("fit_residual", fit.residual);
    r.put("expected_slope", alpha);
    r.constant = Some(sup);
    r.checks.push(Check::le("exponent", alpha - slack, fit.slope));
    r.checks.push(Check::finite("sup_ratio", sup));
    if let Some(big) = &big {
        let (s4, _) = big.sigma();
        let sup4 = unit
            .iter()
            .map(|u| {
                let hv = u * s4;
                if hv == 0.0 {
                    0.0
                } else {
                    s4.powf(alpha) * shift_modulus_of(big, hv, intervals) / hv.abs().powf(alpha)
                }
            })
            .fold(0.0, f64::max);
        r.put("sup_ratio_4x", sup4);
        r.checks.push(Check::le("stability", relative_change(sup, sup4), STABILITY_TOLERANCE));
    }
    if let Some((c, c_se)) = c_hat {
        let factor = 2f64.powf(1.0 - alpha) * c * sigma.powf(-alpha);
        let worst = h
            .iter()
            .zip(&delta)
            .filter(|(h, _)| **h != 0.0)
            .map(|(h, dl)| dl / (factor * h.abs().powf(alpha)))
            .fold(0.0, f64::max);
        // sampling error of Ĉ widens the bound on the sampled path
        let tolerance = if c_se.is_finite() && c > 0.0 { 3.0 * c_se / c } else { 0.0 };
        r.put("c_hat", c);
        r.put("c_hat_stderr", c_se);
        r.put("chain_worst_ratio", worst);
        r.checks.push(Check::le("chain", worst, 1.0 + tolerance));
    }
    if fit.slope > alpha + 0.15 {
        r.warnings.push(format!(
            "fitted slope {:.3} exceeds 1/d = {alpha:.3} by more than 0.15; f may have lower effective degree",
            fit.slope
        ));
    }
    r.warnings.extend(fit.warnings);
    r.criterion = format!("Besov slope >= 1/d - {slack} with sigma^(1/d) Delta(h)/h^(1/d) bounded and stable");
    r.plot.push(log_pairs("log h vs log Delta(h)", &h, &delta));
    Ok(r.finish(started))
}

/// Laws of `f` and `g` under `m`, sharing draws on the sampled path.
fn paired_laws(f: &Polynomial, g: &Polynomial, m: &LogConcaveMeasure, budget: &Budget) -> Result<(Law, Law)> {
    if budget.use_oracle {
        if let (Some(a), Some(b)) = (pushforward::oracle_for(f, m), pushforward::oracle_for(g, m)) {
            return Ok((Law::Oracle(a), Law::Oracle(b)));
        }
    }
    let n = m.dim();
    let (fx, gx) = (f.with_nvars(n)?, g.with_nvars(n)?);
    let s = sampler::sample_with(m, budget.samples, budget.stream(), &budget.sampler)?;
    let fv: Vec<f64> = s.rows().map(|r| fx.eval_unchecked(r)).collect();
    let gv: Vec<f64> = s.rows().map(|r| gx.eval_unchecked(r)).collect();
    Ok((Law::Empirical(EmpiricalLaw::new(&fv)?), Law::Empirical(EmpiricalLaw::new(&gv)?)))
}

/// Cells for analytic densities in distance computations.
const ANALYTIC_CELLS: usize = 20_000;

/// Densities of two laws on a shared range (histograms use common edges).
fn paired_densities(a: &Law, b: &Law) -> Result<(Density1D, Density1D)> {
    match (a, b) {
        (Law::Empirical(x), Law::Empirical(y)) => {
            let t = HistogramOptions::default().trim;
            let lo = x.sample().quantile(t).min(y.sample().quantile(t));
            let hi = x.sample().quantile(1.0 - t).max(y.sample().quantile(1.0 - t));
            let opts = HistogramOptions { range: Some((lo, hi)), ..HistogramOptions::default() };
            if !(hi - lo > 1e-12) {
                return Err(Error::Degenerate("pooled sample is essentially constant".into()));
            }
            Ok((pushforward::estimate_density(x.sample(), &opts)?, pushforward::estimate_density(y.sample(), &opts)?))
        }
        _ => Ok((a.density(ANALYTIC_CELLS)?, b.density(ANALYTIC_CELLS)?)),
    }
}

fn tv_and_fm(a: &Law, b: &Law) -> Result<(f64, f64)> {
    let (da, db) = paired_densities(a, b)?;
    let tv = metrics::tv_distance(&da, &db);
    let fm = match (a, b) {
        (Law::Empirical(x), Law::Empirical(y)) => metrics::fm_distance_samples(x.sample(), y.sample())?,
        _ => metrics::fm_distance(&da, &db)?,
    };
    Ok((tv, fm))
}

/// `TV ≤ C(ν,σ)·FM^{α/(1+α)}` for the laws `ν`, `σ` of `f` and `g`, with
/// `α = 1/d` and the shift constants measured on the `h` grid.
pub fn check_tv_fm(
    f: &Polynomial,
    g: &Polynomial,
    m: &LogConcaveMeasure,
    d: Option<u32>,
    budget: &Budget,
) -> Result<InequalityReport> {
    let started = Instant::now();
    let d = d.unwrap_or_else(|| f.degree().max(g.degree()));
    if d == 0 {
        return Err(Error::Degenerate("f and g are constant".into()));
    }
    let alpha = 1.0 / d as f64;
    let (lf, lg) = paired_laws(f, g, m, budget)?;
    let sf = non_degenerate(&lf, "f")?;
    let sg = non_degenerate(&lg, "g")?;
    let unit = default_h_grid(&lf);
    let hf: Vec<f64> = unit.iter().map(|u| u * sf).collect();
    let hg: Vec<f64> = unit.iter().map(|u| u * sg).collect();
    let (c_nu, _) = shift_constant(&lf, &hf, alpha, d as usize);
    let (c_sigma, _) = shift_constant(&lg, &hg, alpha, d as usize);
    let (tv, fm) = tv_and_fm(&lf, &lg)?;
    let c = constants::tv_fm_constant(c_nu, c_sigma, alpha)?;
    let rhs = c * fm.powf(alpha / (1.0 + alpha));
    let mut r = InequalityReport::new("tv_fm", m, budget, lf.path());
    r.parameters.polynomial = Some(f.to_string());
    r.parameters.second_polynomial = Some(g.to_string());
    r.parameters.d = Some(d);
    r.parameters.alpha = Some(alpha);
    r.parameters.grids.insert("h_f".into(), hf);
    r.parameters.grids.insert("h_g".into(), hg);
    r.put("sigma_f", sf);
    r.put("sigma_g", sg);
    r.put("c_nu", c_nu);
    r.put("c_sigma", c_sigma);
    r.put("tv", tv);
    r.put("fm", fm);
    r.put("rhs", rhs);
    r.put("margin", rhs - tv);
    r.constant = Some(c);
    r.checks.push(Check::le("tv_fm", tv, rhs));
    r.criterion = "TV <= C(nu, sigma) FM^(alpha/(1+alpha)) with measured shift constants".into();
    Ok(r.finish(started))
}

fn malliavin_constant(law: &Law, sigma: f64, d: u32) -> Result<f64> {
    let grid: Vec<f64> = default_m_grid().iter().map(|v| v / sigma).collect();
    Ok(malliavin_sweep(law, sigma, d, &grid, TestFamily::All)?.c_hat)
}

fn lp_of(law: &Law, p: f64) -> Result<metrics::LpNorm> {
    match law {
        Law::Oracle(o) => metrics::lp_norm_oracle(o, p),
        Law::Empirical(_) => {
            let dens = law.density(0)?;
            Ok(metrics::LpNorm::Finite(metrics::lp_norm_grid(&dens.values, dens.step, p)))
        }
    }
}

/// Relative interval lengths for the small-set spot checks.
const SMALL_SET_LENGTHS: [f64; 4] = [1e-4, 1e-3, 1e-2, 1e-1];
const SMALL_SET_LEVELS: [f64; 6] = [1e-3, 0.01, 0.1, 0.5, 0.9, 0.99];

/// `σ_f^{1−1/p}‖ρ_f‖_p ≤ C₁(d,p)` with `C₁` built from the Malliavin constant
/// `Ĉ`, plus `ν(A) ≤ Ĉσ_f^{−1/d}λ(A)^{1/d}` on a family of intervals.
pub fn check_lp_density(
    f: &Polynomial,
    m: &LogConcaveMeasure,
    d: Option<u32>,
    p: f64,
    budget: &Budget,
    c_hat: Option<f64>,
) -> Result<InequalityReport> {
    let started = Instant::now();
    let d = degree_of(f, d)?;
    constants::check_p(d, p)?;
    let alpha = 1.0 / d as f64;
    let (law, _) = laws(f, m, budget, 1)?;
    let sigma = non_degenerate(&law, "f")?;
    let c = match c_hat {
        Some(c) => c,
        None => malliavin_constant(&law, sigma, d)?,
    };
    let norm = lp_of(&law, p)?;
    let norm_value = norm.value().unwrap_or(f64::INFINITY);
    let lhs = sigma.powf(1.0 - 1.0 / p) * norm_value;
    let rhs = constants::lp_density_constant(d, p, c)?;
    let mut centers: Vec<f64> = SMALL_SET_LEVELS.iter().map(|u| law.quantile(*u)).collect::<Result<_>>()?;
    if let Law::Oracle(o) = &law {
        centers.extend(o.singular_points());
    }
    let bound = c * sigma.powf(-alpha);
    let mut worst: f64 = 0.0;
    for &t in &centers {
        for &l in &SMALL_SET_LENGTHS {
            let len = l * sigma;
            for (a, b) in [(t - len / 2.0, t + len / 2.0), (t, t + len), (t - len, t)] {
                worst = worst.max(law.prob_in(a, b) / (bound * len.powf(alpha)));
            }
        }
    }
    let mut r = InequalityReport::new("lp_density", m, budget, law.path());
    r.parameters.polynomial = Some(f.to_string());
    r.parameters.d = Some(d);
    r.parameters.alpha = Some(alpha);
    r.parameters.p = Some(p);
    r.put("sigma", sigma);
    r.put("lp_norm", norm);
    r.put("lhs", lhs);
    r.put("rhs", rhs);
    r.put("c_hat", c);
    r.put("small_set_worst_ratio", worst);
    r.constant = Some(lhs);
    r.checks.push(Check::le("lp_bound", lhs, rhs));
    r.checks.push(Check::le("small_sets", worst, 1.0));
    r.criterion = "sigma^(1-1/p) ||rho||_p <= C1(d, p, C-hat) and nu(A) <= C-hat sigma^(-1/d) |A|^(1/d)".into();
    Ok(r.finish(started))
}

/// `‖ρ_f − ρ_g‖_p ≤ C₁(d,p)(σ_f^{−1/d} + σ_g^{−1/d})^{d(1−1/p)} TV^{1−d(1−1/p)}`.
pub fn check_lp_difference(
    f: &Polynomial,
    g: &Polynomial,
    m: &LogConcaveMeasure,
    d: Option<u32>,
    p: f64,
    budget: &Budget,
) -> Result<InequalityReport> {
    let started = Instant::now();
    let d = d.unwrap_or_else(|| f.degree().max(g.degree()));
    if d == 0 {
        return Err(Error::Degenerate("f and g are constant".into()));
    }
    constants::check_p(d, p)?;
    let alpha = 1.0 / d as f64;
    let spread = d as f64 * (1.0 - 1.0 / p);
    let tv_exponent = 1.0 - spread;
    let (lf, lg) = paired_laws(f, g, m, budget)?;
    let sf = non_degenerate(&lf, "f")?;
    let sg = non_degenerate(&lg, "g")?;
    let c = malliavin_constant(&lf, sf, d)?.max(malliavin_constant(&lg, sg, d)?);
    let (da, db) = paired_densities(&lf, &lg)?;
    let tv = metrics::tv_distance(&da, &db);
    let diff = match (&lf, &lg) {
        (Law::Oracle(a), Law::Oracle(b)) => metrics::lp_difference_oracle(a, b, p)?,
        _ => metrics::lp_difference(&da, &db, p)?,
    };
    let lhs = diff.value().unwrap_or(f64::INFINITY);
    let rhs = constants::lp_density_constant(d, p, c)? * (sf.powf(-alpha) + sg.powf(-alpha)).powf(spread) * tv.powf(tv_exponent);
    let mut r = InequalityReport::new("lp_difference", m, budget, lf.path());
    r.parameters.polynomial = Some(f.to_string());
    r.parameters.second_polynomial = Some(g.to_string());
    r.parameters.d = Some(d);
    r.parameters.alpha = Some(alpha);
    r.parameters.p = Some(p);
    r.put("sigma_f", sf);
    r.put("sigma_g", sg);
    r.put("c_hat", c);
    r.put("tv", tv);
    r.put("tv_exponent", tv_exponent);
    r.put("lhs", lhs);
    r.put("rhs", rhs);
    r.put("ratio", if rhs > 0.0 { lhs / rhs } else { 0.0 });
    r.checks.push(Check::le("lp_difference", lhs, rhs));
    r.criterion = "||rho_f - rho_g||_p <= C1(d,p) (sigma_f^(-1/d) + sigma_g^(-1/d))^(d(1-1/p)) TV^(1-d(1-1/p))".into();
    Ok(r.finish(started))
}

/// `E|T|^q` under an exact law; `q = 0` gives `E ln|T|`.
fn oracle_abs_moment(o: &Oracle, q: f64) -> f64 {
    let (lo, hi) = o.support();
    let mut breaks = o.singular_points();
    breaks.push(0.0);
    let g = |t: f64| {
        let p = o.pdf(t);
        if p == 0.0 {
            0.0
        } else if q == 0.0 {
            t.abs().ln() * p
        } else {
            t.abs().powf(q) * p
        }
    };
    de_with_breaks(g, &breaks, lo, hi, 1e-12).value
}

/// Default `t` grid for small-ball probabilities, in units of `E|f|`.
pub fn default_t_grid() -> Vec<f64> {
    metrics::log_spaced(1e-4, 1e-2, 9)
}

fn mean_abs(law: &Law) -> f64 {
    match law {
        Law::Oracle(o) => oracle_abs_moment(o, 1.0),
        Law::Empirical(e) => e.sample().values().iter().map(|v| v.abs()).sum::<f64>() / e.len() as f64,
    }
}

struct SmallBall {
    t: Vec<f64>,
    prob: Vec<f64>,
    c1: f64,
    slope: f64,
    slope_stderr: f64,
}

fn small_ball(law: &Law, unit: &[f64], d: u32) -> Result<SmallBall> {
    let scale = mean_abs(law);
    let t: Vec<f64> = unit.iter().map(|u| u * scale).collect();
    let prob: Vec<f64> = t.iter().map(|v| law.prob_abs_le(*v)).collect();
    if prob.iter().all(|p| *p == 0.0) {
        return Err(Error::Configuration("every sample has |f| above the largest t; widen the t grid".into()));
    }
    let alpha = 1.0 / d as f64;
    let rows: Vec<usize> = (0..t.len()).filter(|i| prob[*i] > 0.0 && prob[*i] < 1.0 && t[*i] > 0.0).collect();
    if rows.len() < 3 {
        return Err(Error::Configuration("fewer than three t values with 0 < P(|f| <= t) < 1".into()));
    }
    let c1 = rows.iter().map(|&i| prob[i] * scale.powf(alpha) / (t[i].powf(alpha) * d as f64)).fold(0.0, f64::max);
    let lx: Vec<f64> = rows.iter().map(|&i| t[i].ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|&i| prob[i].ln()).collect();
    let (slope, slope_stderr, _) = metrics::fit_line(&lx, &ly);
    Ok(SmallBall { t, prob, c1, slope, slope_stderr })
}

/// Small-ball probabilities `μ(|f| ≤ t)` against `t^{1/d}`. `t_grid` is in
/// units of `E|f|`.
pub fn check_small_ball(
    f: &Polynomial,
    m: &LogConcaveMeasure,
    d: Option<u32>,
    t_grid: Option<&[f64]>,
    budget: &Budget,
) -> Result<InequalityReport> {
    let started = Instant::now();
    let d = degree_of(f, d)?;
    let alpha = 1.0 / d as f64;
    let (law, big) = laws(f, m, budget, 4)?;
    let unit = t_grid.map(|g| g.to_vec()).unwrap_or_else(default_t_grid);
    let sb = small_ball(&law, &unit, d)?;
    let slack = exponent_slack(&law);
    let mut r = InequalityReport::new("small_ball", m, budget, law.path());
    r.parameters.polynomial = Some(f.to_string());
    r.parameters.d = Some(d);
    r.parameters.alpha = Some(alpha);
    r.parameters.grids.insert("t".into(), sb.t.clone());
    r.put("mean_abs", mean_abs(&law));
    r.put("probability", &sb.prob);
    r.put("slope", sb.slope);
    r.put("slope_stderr", sb.slope_stderr);
    r.put("expected_slope", alpha);
    r.put("c1_hat", sb.c1);
    r.constant = Some(sb.c1);
    r.checks.push(Check::le("exponent", alpha - slack, sb.slope));
    r.checks.push(Check::finite("c1_hat", sb.c1));
    if let Some(big) = &big {
        let c4 = small_ball(big, &unit, d)?.c1;
        r.put("c1_hat_4x", c4);
        r.checks.push(Check::le("stability", relative_change(sb.c1, c4), STABILITY_TOLERANCE));
    }
    let excluded = sb.prob.iter().filter(|p| **p >= 1.0).count();
    if excluded > 0 {
        r.warnings.push(format!("{excluded} t values with probability 1 excluded from the fit"));
    }
    r.criterion = format!("small-ball slope >= 1/d - {slack} with c1-hat finite and stable");
    r.plot.push(PlotSeries {
        name: "log t vs log P(|f| <= t)".into(),
        x: sb.t.iter().map(|v| v.ln()).collect(),
        y: sb.prob.iter().map(|v| v.ln()).collect(),
    });
    Ok(r.finish(started))
}

pub const DEFAULT_Q_LIST: [f64; 6] = [0.0, 1.0, 2.0, 4.0, 8.0, 16.0];

struct NormTable {
    q: Vec<f64>,
    norm: Vec<Option<f64>>,
    rel_stderr: Vec<f64>,
}

fn norm_table(f: &Polynomial, m: &LogConcaveMeasure, law: &Law, values: Option<&[f64]>, qs: &[f64]) -> Result<NormTable> {
    match (law, values) {
        (Law::Oracle(o), _) => {
            let norm = qs
                .iter()
                .map(|&q| Some(if q == 0.0 { oracle_abs_moment(o, 0.0).exp() } else { oracle_abs_moment(o, q).powf(1.0 / q) }))
                .collect();
            Ok(NormTable { q: qs.to_vec(), norm, rel_stderr: vec![0.0; qs.len()] })
        }
        (_, Some(v)) => {
            let pm = polynomial::moments_from_values(f, m, v, qs)?;
            let norm = pm.norms.iter().map(|n| n.value).collect();
            let rel = pm.norms.iter().map(|n| n.value.map_or(f64::NAN, |x| n.stderr / x)).collect();
            Ok(NormTable { q: qs.to_vec(), norm, rel_stderr: rel })
        }
        _ => Err(Error::Configuration("sampled norms need sample values".into())),
    }
}

/// `max_{p<q} (‖f‖_q/‖f‖_p)^{1/d}/(qd)` with the maximizing pair.
fn growth_constant(t: &NormTable, d: u32) -> (f64, f64, f64) {
    let mut best = (0.0, f64::NAN, f64::NAN);
    for (i, &p) in t.q.iter().enumerate() {
        for (j, &q) in t.q.iter().enumerate() {
            if !(q > p) {
                continue;
            }
            if let (Some(a), Some(b)) = (t.norm[i], t.norm[j]) {
                let c = (b / a).powf(1.0 / d as f64) / (q * d as f64);
                if c > best.0 {
                    best = (c, p, q);
                }
            }
        }
    }
    best
}

/// Moment comparison `‖f‖_q ≤ (cqd)^d ‖f‖_p`.
pub fn check_moment_growth(
    f: &Polynomial,
    m: &LogConcaveMeasure,
    d: Option<u32>,
    q_list: Option<&[f64]>,
    budget: &Budget,
) -> Result<InequalityReport> {
    let started = Instant::now();
    let d = degree_of(f, d)?;
    let mut qs = q_list.map(|q| q.to_vec()).unwrap_or_else(|| DEFAULT_Q_LIST.to_vec());
    if qs.iter().any(|q| !(*q >= 0.0) || !q.is_finite()) {
        return Err(Error::Range("norm exponents must be finite and nonnegative".into()));
    }
    qs.sort_by(f64::total_cmp);
    qs.dedup();
    let oracle = if budget.use_oracle { pushforward::oracle_for(f, m) } else { None };
    let (law, values) = match oracle {
        Some(o) => (Law::Oracle(o), None),
        None => {
            let v = sample_values(f, m, 2 * budget.samples, budget)?;
            (Law::Empirical(EmpiricalLaw::new(&v[..budget.samples])?), Some(v))
        }
    };
    let table = norm_table(f, m, &law, values.as_deref().map(|v| &v[..budget.samples]), &qs)?;
    let (c, p_at, q_at) = growth_constant(&table, d);
    let mut r = InequalityReport::new("moment_growth", m, budget, law.path());
    r.parameters.polynomial = Some(f.to_string());
    r.parameters.d = Some(d);
    r.parameters.grids.insert("q".into(), qs.clone());
    r.put("norms", &table.norm);
    r.put("norm_rel_stderr", &table.rel_stderr);
    r.put("argmax_p", p_at);
    r.put("argmax_q", q_at);
    let ratios: Vec<Value> = table
        .q
        .iter()
        .enumerate()
        .flat_map(|(i, p)| {
            let t = &table;
            t.q.iter().enumerate().filter(move |(_, q)| *q > p).map(move |(j, q)| {
                json!({"p": p, "q": q, "ratio": t.norm[i].zip(t.norm[j]).map(|(a, b)| b / a)})
            })
        })
        .collect();
    r.put("ratios", ratios);
    r.constant = Some(c);
    r.checks.push(Check::finite("c_hat", c));
    if let Some(v) = &values {
        let t2 = norm_table(f, m, &law, Some(v), &qs)?;
        let c2 = growth_constant(&t2, d).0;
        r.put("c_hat_2x", c2);
        r.checks.push(Check::le("stability", relative_change(c, c2), STABILITY_TOLERANCE));
    }
    if let Some(i) = qs.iter().position(|q| *q == 16.0) {
        if table.rel_stderr[i] > 0.2 {
            r.warnings.push(format!("heavy tails: q = 16 norm has relative stderr {:.2}", table.rel_stderr[i]));
        }
    }
    r.criterion = "c-hat = max (||f||_q/||f||_p)^(1/d)/(qd) finite and stable under 2x samples".into();
    Ok(r.finish(started))
}

/// Exact `(Var f, E|∇f|²)` for a quadratic under a Gaussian.
fn gaussian_quadratic_energy(f: &Polynomial, m: &LogConcaveMeasure) -> Option<(f64, f64)> {
    let (_, var) = polynomial::gaussian_quadratic_moments(f, m)?;
    let (mean, cov) = m.analytic_moments()?;
    let (_, b, a) = f.with_nvars(m.dim()).ok()?.quadratic_parts()?;
    let mu = nalgebra::DVector::from_column_slice(&mean);
    let w = &b + 2.0 * (&a * &mu);
    let grad = w.norm_squared() + 4.0 * (&a * &cov * &a).trace();
    Some((var, grad))
}

/// `R̂ = Var f / (∫|x − x₀|² dμ · ∫|∇f|² dμ)` with `x₀` the mean of `μ`.
pub fn check_poincare(f: &Polynomial, m: &LogConcaveMeasure, budget: &Budget) -> Result<InequalityReport> {
    let started = Instant::now();
    if f.nvars() > m.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), got: f.nvars() });
    }
    let fx = f.with_nvars(m.dim())?;
    let exact = if budget.use_oracle { gaussian_quadratic_energy(&fx, m) } else { None };
    let analytic = if budget.use_oracle { m.analytic_moments() } else { None };
    let sampled = if exact.is_none() || analytic.is_none() {
        Some(sampler::sample_with(m, budget.samples, budget.stream(), &budget.sampler)?)
    } else {
        None
    };
    let (var, grad) = match (exact, &sampled) {
        (Some(e), _) => e,
        (None, Some(s)) => {
            let vals: Vec<f64> = s.rows().map(|r| fx.eval_unchecked(r)).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
            let mut g2 = 0.0;
            for row in s.rows() {
                g2 += fx.gradient(row)?.iter().map(|v| v * v).sum::<f64>();
            }
            (var, g2 / s.len() as f64)
        }
        _ => unreachable!(),
    };
    let spread = match (&analytic, &sampled) {
        (Some((_, cov)), _) => cov.trace(),
        (None, Some(s)) => {
            let n = m.dim();
            let mut mean = vec![0.0; n];
            for row in s.rows() {
                mean.iter_mut().zip(row).for_each(|(a, b)| *a += b);
            }
            mean.iter_mut().for_each(|a| *a /= s.len() as f64);
            s.rows().map(|row| row.iter().zip(&mean).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).sum::<f64>() / s.len() as f64
        }
        _ => unreachable!(),
    };
    let ratio = if var == 0.0 || fx.is_constant() { 0.0 } else { var / (spread * grad) };
    let path = if sampled.is_none() { "oracle" } else { "monte_carlo" };
    let mut r = InequalityReport::new("poincare", m, budget, path);
    r.parameters.polynomial = Some(f.to_string());
    r.parameters.d = Some(f.degree());
    r.put("variance", var);
    r.put("second_moment", spread);
    r.put("gradient_energy", grad);
    r.put("ratio", ratio);
    r.constant = Some(ratio);
    r.checks.push(Check::finite("ratio", ratio));
    r.criterion = "R-hat = Var f / (E|x - x0|^2 E|grad f|^2) finite; the suite reports its maximum".into();
    Ok(r.finish(started))
}

pub const DEFAULT_TAU_LIST: [f64; 3] = [0.5, 1.0, 2.0];
/// Directions for the Skorohod-norm sweep.
pub const SKOROHOD_DIRECTIONS: usize = 32;

/// Level-body, envelope and Skorohod-derivative bounds for the isotropic
/// image of `m` (dimension at most 3).
pub fn check_geometry(m: &LogConcaveMeasure, tau_list: Option<&[f64]>) -> Result<InequalityReport> {
    let started = Instant::now();
    let n = m.dim();
    if n > 3 {
        return Err(Error::Configuration("geometry checks are limited to dimension <= 3".into()));
    }
    let taus = tau_list.map(|t| t.to_vec()).unwrap_or_else(|| DEFAULT_TAU_LIST.to_vec());
    let budget = Budget::oracle();
    let (_, w) = measure::isotropic_normalize_with(m, MomentBudget::Quadrature)?;
    let (max_rho, _) = measure::max_density(&w)?;
    let mut r = InequalityReport::new("geometry", m, &budget, "oracle");
    r.parameters.grids.insert("tau".into(), taus.clone());
    let mut volumes = Vec::new();
    let mut radii = Vec::new();
    for &tau in &taus {
        let ls = measure::level_set_volume(&w, tau)?;
        let c = constants::c_n_tau(n as u32, tau)?;
        r.checks.push(Check::le(format!("volume tau={tau}"), 1.0, max_rho * c * ls.volume));
        let bound = c * ((n + 1) as f64).powi(2) * tau.exp();
        r.checks.push(Check::le(format!("radius tau={tau}"), ls.radius * ls.radius, bound));
        volumes.push(ls.volume);
        radii.push(ls.radius);
    }
    let alpha = measure::envelope_alpha(n);
    let envelope = measure::envelope_fit(&w, alpha)?;
    let dirs = measure::sphere_directions(n, SKOROHOD_DIRECTIONS);
    let skorohod: Vec<f64> = dirs.iter().map(|e| measure::skorohod_norm(&w, e)).collect::<Result<_>>()?;
    let c_n = skorohod.iter().cloned().fold(0.0, f64::max);
    r.checks.push(Check::finite("envelope", envelope));
    r.checks.push(Check::finite("skorohod", c_n));
    r.put("max_density", max_rho);
    r.put("bourgain_quantity", max_rho.powf(1.0 / n as f64));
    r.put("level_volume", volumes);
    r.put("level_radius", radii);
    r.put("envelope_alpha", alpha);
    r.put("envelope_constant", envelope);
    r.put("skorohod", &skorohod);
    r.put("skorohod_max", c_n);
    r.put("skorohod_min", skorohod.iter().cloned().fold(f64::INFINITY, f64::min));
    r.constant = Some(c_n);
    r.criterion = "1 <= m_rho c_n(tau) |K|, radius^2 <= c_n(tau)(n+1)^2 e^tau, envelope and Skorohod norms finite".into();
    Ok(r.finish(started))
}

/// Suite ids with their accepted aliases.
pub const SUITES: &[(&str, &[&str])] = &[
    ("malliavin", &["thm4.1"]),
    ("shift_tv", &["cor5.1"]),
    ("lp_density", &["cor5.2"]),
    ("tv_fm", &["cor5.3"]),
    ("lp_difference", &["cor5.4"]),
    ("small_ball", &["cw", "thm1.3"]),
    ("moment_growth", &["moments", "thm1.2"]),
    ("poincare", &["thm1.4"]),
    ("geometry", &[]),
    ("all", &[]),
];

/// Canonical suite id for `id` or one of its aliases.
pub fn resolve_suite(id: &str) -> Result<&'static str> {
    SUITES
        .iter()
        .find(|(name, aliases)| *name == id || aliases.contains(&id))
        .map(|(name, _)| *name)
        .ok_or_else(|| {
            let known: Vec<&str> = SUITES.iter().map(|(n, _)| *n).collect();
            Error::Configuration(format!("unknown suite {id:?}; known suites: {}", known.join(", ")))
        })
}

/// One experiment case. Grids are in the units documented on each check.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    #[serde(default)]
    pub measure: Option<MeasureSpec>,
    #[serde(default)]
    pub poly: Option<String>,
    #[serde(default)]
    pub second_poly: Option<String>,
    #[serde(default)]
    pub d: Option<u32>,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub use_oracle: Option<bool>,
    #[serde(default)]
    pub family: Option<TestFamily>,
    #[serde(default)]
    pub m_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub h_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub t_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub q_list: Option<Vec<f64>>,
    #[serde(default)]
    pub tau_list: Option<Vec<f64>>,
}

/// A config file holds one case or an array of cases.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum SuiteConfig {
    One(CaseConfig),
    Many(Vec<CaseConfig>),
}

impl SuiteConfig {
    pub fn cases(self) -> Vec<CaseConfig> {
        match self {
            SuiteConfig::One(c) => vec![c],
            SuiteConfig::Many(v) => v,
        }
    }
}

impl CaseConfig {
    /// Fields of `self` override those of `base`.
    pub fn over(self, base: &CaseConfig) -> CaseConfig {
        let b = base.clone();
        CaseConfig {
            measure: self.measure.or(b.measure),
            poly: self.poly.or(b.poly),
            second_poly: self.second_poly.or(b.second_poly),
            d: self.d.or(b.d),
            p: self.p.or(b.p),
            samples: self.samples.or(b.samples),
            seed: self.seed.or(b.seed),
            use_oracle: self.use_oracle.or(b.use_oracle),
            family: self.family.or(b.family),
            m_grid: self.m_grid.or(b.m_grid),
            h_grid: self.h_grid.or(b.h_grid),
            t_grid: self.t_grid.or(b.t_grid),
            q_list: self.q_list.or(b.q_list),
            tau_list: self.tau_list.or(b.tau_list),
        }
    }
}

struct Case {
    spec: MeasureSpec,
    m: LogConcaveMeasure,
    f: Polynomial,
    g: Option<Polynomial>,
    d: u32,
    budget: Budget,
    cfg: CaseConfig,
}

fn prepare(cfg: &CaseConfig, base: &Budget) -> Result<Case> {
    let spec = cfg.measure.clone().unwrap_or(MeasureSpec::Gaussian { dim: 1, mean: None, cov: None });
    let m = spec.build()?;
    let f: Polynomial = cfg.poly.as_deref().unwrap_or("x1^2").parse()?;
    let g = cfg.second_poly.as_deref().map(str::parse).transpose()?;
    let d = cfg.d.unwrap_or_else(|| f.degree().max(g.as_ref().map_or(0, Polynomial::degree)));
    let mut budget = base.clone();
    if let Some(n) = cfg.samples {
        budget.samples = n;
    }
    if let Some(seed) = cfg.seed {
        budget.seed = seed;
    }
    if let Some(o) = cfg.use_oracle {
        budget.use_oracle = o;
    }
    Ok(Case { spec, m, f, g, d, budget, cfg: cfg.clone() })
}

fn default_p(d: u32) -> f64 {
    let hi = constants::lp_upper(d);
    if hi.is_finite() {
        0.5 * (1.0 + hi)
    } else {
        2.0
    }
}

fn needs_second(c: &Case, suite: &str) -> Result<Polynomial> {
    c.g.clone().ok_or_else(|| Error::Configuration(format!("suite {suite} needs second_poly")))
}

fn constant_of(r: &InequalityReport) -> Option<(f64, f64)> {
    r.constant.map(|c| (c, r.constant_stderr.unwrap_or(0.0)))
}

fn run_case(suite: &str, c: &Case) -> Result<Vec<InequalityReport>> {
    let family = c.cfg.family.unwrap_or_default();
    let d = Some(c.d);
    let malliavin = || check_malliavin(&c.f, &c.m, d, c.cfg.m_grid.as_deref(), family, &c.budget);
    let p = c.cfg.p.unwrap_or_else(|| default_p(c.d));
    let mut out = Vec::new();
    match suite {
        "malliavin" => out.push(malliavin()?),
        "shift_tv" => {
            let mal = malliavin()?;
            out.push(check_shift_tv(&c.f, &c.m, d, c.cfg.h_grid.as_deref(), &c.budget, constant_of(&mal))?);
        }
        "lp_density" => {
            let chat = malliavin()?.constant;
            out.push(check_lp_density(&c.f, &c.m, d, p, &c.budget, chat)?);
        }
        "tv_fm" => out.push(check_tv_fm(&c.f, &needs_second(c, suite)?, &c.m, d, &c.budget)?),
        "lp_difference" => out.push(check_lp_difference(&c.f, &needs_second(c, suite)?, &c.m, d, p, &c.budget)?),
        "small_ball" => out.push(check_small_ball(&c.f, &c.m, d, c.cfg.t_grid.as_deref(), &c.budget)?),
        "moment_growth" => out.push(check_moment_growth(&c.f, &c.m, d, c.cfg.q_list.as_deref(), &c.budget)?),
        "poincare" => out.push(check_poincare(&c.f, &c.m, &c.budget)?),
        "geometry" => out.push(check_geometry(&c.m, c.cfg.tau_list.as_deref())?),
        "all" => {
            let mal = malliavin()?;
            let chat = mal.constant;
            out.push(mal);
            out.push(check_shift_tv(&c.f, &c.m, d, c.cfg.h_grid.as_deref(), &c.budget, constant_of(&out[0]))?);
            if constants::check_p(c.d, p).is_ok() {
                out.push(check_lp_density(&c.f, &c.m, d, p, &c.budget, chat)?);
            }
            out.push(check_small_ball(&c.f, &c.m, d, c.cfg.t_grid.as_deref(), &c.budget)?);
            out.push(check_moment_growth(&c.f, &c.m, d, c.cfg.q_list.as_deref(), &c.budget)?);
            out.push(check_poincare(&c.f, &c.m, &c.budget)?);
            if let Some(g) = &c.g {
                out.push(check_tv_fm(&c.f, g, &c.m, d, &c.budget)?);
                if constants::check_p(c.d, p).is_ok() {
                    out.push(check_lp_difference(&c.f, g, &c.m, d, p, &c.budget)?);
                }
            }
            if c.m.dim() <= 3 {
                out.push(check_geometry(&c.m, c.cfg.tau_list.as_deref())?);
            }
        }
        _ => unreachable!("suite ids are resolved before dispatch"),
    }
    let spec = serde_json::to_value(&c.spec)?;
    for r in &mut out {
        r.parameters.measure = spec.clone();
    }
    Ok(out)
}

/// Run `suite` (id or alias) on every case; reports come back in case order.
/// Cases run in parallel, each on its own stream index.
pub fn run_suite(suite: &str, cases: &[CaseConfig], base: &Budget) -> Result<Vec<InequalityReport>> {
    use rayon::prelude::*;
    let suite = resolve_suite(suite)?;
    let cases: Vec<Case> = cases
        .iter()
        .enumerate()
        .map(|(i, cfg)| {
            let mut c = prepare(cfg, base)?;
            c.budget.stream = base.stream + i as u64;
            Ok(c)
        })
        .collect::<Result<_>>()?;
    let parts: Vec<Result<Vec<InequalityReport>>> = cases.par_iter().map(|c| run_case(suite, c)).collect();
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    let worst = out.iter().filter(|r| r.id == "poincare").filter_map(|r| r.constant).fold(f64::NAN, f64::max);
    if worst.is_finite() {
        for r in out.iter_mut().filter(|r| r.id == "poincare") {
            r.put("suite_max_ratio", worst);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::normal_cdf;

    fn poly(s: &str) -> Polynomial {
        s.parse().unwrap()
    }

    fn gauss1() -> LogConcaveMeasure {
        LogConcaveMeasure::standard_gaussian(1)
    }

    #[test]
    fn malliavin_oracle_exponents() {
        for (f, d) in [("x1^2", 2u32), ("x1^3", 3), ("x1^4", 4)] {
            let r = check_malliavin(&poly(f), &gauss1(), None, None, TestFamily::All, &Budget::oracle()).unwrap();
            let slope = r.number("slope").unwrap();
            let beta = 1.0 - 1.0 / d as f64;
            assert!((slope - beta).abs() < 0.05, "{f}: {slope}");
            assert!(r.pass);
        }
    }

    #[test]
    fn malliavin_linear_limit() {
        let law = Law::Oracle(Oracle::Gaussian { mean: 0.0, sd: 1.0 });
        let (v, _) = malliavin_statistic(&law, TestFunction::Tanh, 1e4, 0.0);
        assert!((v - 0.7979).abs() < 1e-3, "{v}");
        assert_eq!(malliavin_statistic(&law, TestFunction::Constant, 1e4, 0.0).0, 0.0);
        let r = check_malliavin(&poly("x1"), &gauss1(), None, None, TestFamily::Tanh, &Budget::oracle()).unwrap();
        assert!(r.number("slope").unwrap().abs() < 0.05);
        assert!(!r.warnings.is_empty());
    }

    #[test]
    fn shift_tv_examples() {
        let r = check_shift_tv(&poly("x1^2"), &gauss1(), None, None, &Budget::oracle(), None).unwrap();
        assert!((r.number("slope").unwrap() - 0.5).abs() < 0.05);
        let u = LogConcaveMeasure::uniform_box(vec![0.5], vec![0.5]).unwrap();
        let r = check_shift_tv(&poly("x1"), &u, None, None, &Budget::oracle(), None).unwrap();
        assert!((r.number("slope").unwrap() - 1.0).abs() < 1e-6);
        let sup = r.number("sup_ratio").unwrap();
        assert!((sup - 2.0 / 12f64.sqrt()).abs() < 1e-6, "{sup}");
        let law = Law::Oracle(Oracle::Chi2_1);
        assert_eq!(shift_modulus_of(&law, 0.0, 2), 0.0);
    }

    #[test]
    fn chain_holds_with_malliavin_constant() {
        for f in ["x1", "x1^2", "x1^3", "x1^4"] {
            let mal = check_malliavin(&poly(f), &gauss1(), None, None, TestFamily::All, &Budget::oracle()).unwrap();
            let chat = mal.constant.map(|c| (c, 0.0));
            let r = check_shift_tv(&poly(f), &gauss1(), None, None, &Budget::oracle(), chat).unwrap();
            let c = r.check("chain").unwrap();
            assert!(c.holds, "{f}: {}", c.lhs);
        }
    }

    #[test]
    fn tv_fm_examples() {
        let b = Budget::oracle();
        let r = check_tv_fm(&poly("x1"), &poly("x1"), &gauss1(), None, &b).unwrap();
        assert_eq!(r.number("tv").unwrap(), 0.0);
        assert!(r.number("fm").unwrap().abs() < 1e-12);
        assert!(r.pass);
        let r = check_tv_fm(&poly("x1"), &poly("x1 + 1"), &gauss1(), None, &b).unwrap();
        let tv = r.number("tv").unwrap();
        assert!((tv - (4.0 * normal_cdf(0.5) - 2.0)).abs() < 1e-3, "{tv}");
        assert!(r.pass);
        let mc = Budget::monte_carlo(200_000, 3);
        let r = check_tv_fm(&poly("x1^2"), &poly("x1^2 + 0.1*x1"), &gauss1(), None, &mc).unwrap();
        assert!(r.pass, "{:?}", r.measured);
    }

    #[test]
    fn lp_density_examples() {
        let r = check_lp_density(&poly("x1^2"), &gauss1(), None, 1.5, &Budget::oracle(), None).unwrap();
        let lhs = r.number("lhs").unwrap();
        assert!((lhs - 1.110).abs() < 0.02, "{lhs}");
        assert!(r.pass, "{:?}", r.checks);
        let u = LogConcaveMeasure::uniform_box(vec![0.5], vec![0.5]).unwrap();
        let r = check_lp_density(&poly("x1"), &u, None, 1.01, &Budget::oracle(), None).unwrap();
        let expected = (1.0f64 / 12f64.sqrt()).powf(1.0 - 1.0 / 1.01);
        assert!((r.number("lhs").unwrap() - expected).abs() < 1e-8);
        assert!(matches!(
            check_lp_density(&poly("x1^2"), &gauss1(), None, 2.0, &Budget::oracle(), None),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn lp_difference_examples() {
        let b = Budget::oracle();
        let r = check_lp_difference(&poly("x1^2"), &poly("x1^2"), &gauss1(), None, 1.2, &b).unwrap();
        assert_eq!(r.number("lhs").unwrap(), 0.0);
        assert_eq!(r.number("rhs").unwrap(), 0.0);
        let r = check_lp_difference(&poly("x1^2"), &poly("1.1*x1^2"), &gauss1(), None, 1.2, &b).unwrap();
        assert!(r.number("ratio").unwrap() < 1.0, "{:?}", r.measured);
        assert!(check_lp_difference(&poly("x1^2"), &poly("x1^2"), &gauss1(), None, 2.0, &b).is_err());
    }

    #[test]
    fn small_ball_examples() {
        let law = Law::Oracle(Oracle::Chi2_1);
        assert!((law.prob_abs_le(0.01) - (2.0 * normal_cdf(0.1) - 1.0)).abs() < 1e-12);
        let r = check_small_ball(&poly("x1^2"), &gauss1(), None, None, &Budget::oracle()).unwrap();
        assert!((r.number("slope").unwrap() - 0.5).abs() < 0.05);
        let u = LogConcaveMeasure::uniform_box(vec![0.0], vec![1.0]).unwrap();
        let r = check_small_ball(&poly("x1"), &u, None, Some(&[0.1, 0.2, 0.5, 1.0, 4.0]), &Budget::oracle()).unwrap();
        let c1 = r.number("c1_hat").unwrap();
        assert!(c1 >= 0.5 - 1e-12, "{c1}");
        assert!(!r.warnings.is_empty());
    }

    #[test]
    fn moment_growth_examples() {
        let r = check_moment_growth(&poly("x1"), &gauss1(), None, Some(&[2.0, 4.0]), &Budget::oracle()).unwrap();
        let norms: Vec<f64> = serde_json::from_value(r.measured["norms"].clone()).unwrap();
        assert!((norms[1] / norms[0] - 3f64.powf(0.25)).abs() < 1e-8);
        let r = check_moment_growth(&poly("x1^2"), &gauss1(), None, None, &Budget::oracle()).unwrap();
        let norms: Vec<f64> = serde_json::from_value(r.measured["norms"].clone()).unwrap();
        // E (Z²)^q = 2^q Γ(q + 1/2)/Γ(1/2)
        let exact = |q: f64| (2f64.powf(q) * crate::special::gamma(q + 0.5) / crate::special::gamma(0.5)).powf(1.0 / q);
        assert!((norms[3] - exact(4.0)).abs() < 1e-8 * exact(4.0));
        assert!(r.pass);
    }

    #[test]
    fn poincare_examples() {
        let r = check_poincare(&poly("x1"), &gauss1(), &Budget::oracle()).unwrap();
        assert!((r.constant.unwrap() - 1.0).abs() < 1e-12);
        let g2 = LogConcaveMeasure::standard_gaussian(2);
        let r = check_poincare(&poly("x1 + x2"), &g2, &Budget::oracle()).unwrap();
        assert!((r.constant.unwrap() - 0.5).abs() < 1e-12);
        let r = check_poincare(&poly("3"), &g2, &Budget::oracle()).unwrap();
        assert_eq!(r.constant.unwrap(), 0.0);
    }

    #[test]
    fn geometry_examples() {
        let r = check_geometry(&gauss1(), Some(&[1.0])).unwrap();
        let v = r.check("volume tau=1").unwrap();
        assert!((v.rhs.unwrap() - 1.5436).abs() < 1e-3);
        assert!(r.pass);
        let b = LogConcaveMeasure::uniform_cube(2, 12f64.sqrt()).unwrap();
        let r = check_geometry(&b, Some(&[1.0])).unwrap();
        let v = r.check("volume tau=1").unwrap();
        assert!((v.rhs.unwrap() - (1.0 + 4.0 / std::f64::consts::E)).abs() < 1e-6, "{}", v.rhs.unwrap());
        let r = check_geometry(&LogConcaveMeasure::standard_gaussian(2), Some(&[1.0])).unwrap();
        let (lo, hi) = (r.number("skorohod_min").unwrap(), r.number("skorohod_max").unwrap());
        let target = (2.0 / std::f64::consts::PI).sqrt();
        assert!((lo - target).abs() < 1e-4 && (hi - target).abs() < 1e-4);
    }
}
