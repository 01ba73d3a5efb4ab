//! Seeded sampling: exact draws for the built-in families, hit-and-run with
//! adaptive rejection along lines for everything else.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{Family, LogConcaveMeasure};
use crate::quadrature::minimize_convex;

/// Rows drawn per independent stream; fixes the stream plan.
pub const BATCH_ROWS: usize = 8192;

/// Number of batches behind batch-means standard errors.
pub const ERROR_BATCHES: usize = 32;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based random stream identified by `(seed, index)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeededStream {
    pub seed: u64,
    pub index: u64,
    pub counter: u64,
}

impl SeededStream {
    pub fn new(seed: u64, index: u64) -> Self {
        Self { seed, index, counter: 0 }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.index);
        rng.set_word_pos(self.counter as u128);
        rng
    }

    /// Independent child stream `b`, used for batch `b` of a draw.
    pub fn substream(&self, b: u64) -> Self {
        let seed = splitmix(self.seed ^ splitmix(self.index.wrapping_add(1)) ^ self.counter.rotate_left(17));
        Self { seed, index: b, counter: 0 }
    }

    /// Stream with a different index but the same seed.
    pub fn with_index(&self, index: u64) -> Self {
        Self { seed: self.seed, index, counter: 0 }
    }
}

/// Row-major `count × dim` sample matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Samples {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Samples {
    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (1..=self.dim).map(|i| format!("x{i}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for r in self.rows() {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Exact draws when the family allows it, hit-and-run otherwise.
    #[default]
    Auto,
    HitAndRun,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SamplerOptions {
    pub method: Method,
    /// Defaults to `1000·n` steps.
    pub burnin: Option<usize>,
    /// Defaults to `n` steps.
    pub thin: Option<usize>,
}

pub fn sample(m: &LogConcaveMeasure, count: usize, s: SeededStream) -> Result<Samples> {
    sample_with(m, count, s, &SamplerOptions::default())
}

pub fn sample_with(m: &LogConcaveMeasure, count: usize, s: SeededStream, opts: &SamplerOptions) -> Result<Samples> {
    if count == 0 {
        return Err(Error::Configuration("sample count must be positive".into()));
    }
    let n = m.dim();
    let batches = count.div_ceil(BATCH_ROWS);
    let exact = opts.method == Method::Auto && m.is_analytic();
    let start = if exact { None } else { Some(m.mode().or_else(|_| m.start_point().map(|x| (x, 0.0)))?.0) };
    let parts: Vec<Result<Vec<f64>>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let rows = BATCH_ROWS.min(count - b * BATCH_ROWS);
            let mut rng = s.substream(b as u64).rng();
            let mut out = Vec::with_capacity(rows * n);
            if exact {
                let mut x = vec![0.0; n];
                for _ in 0..rows {
                    exact_draw(m, &mut rng, &mut x);
                    out.extend_from_slice(&x);
                }
            } else {
                let burnin = opts.burnin.unwrap_or(1000 * n);
                let thin = opts.thin.unwrap_or(n).max(1);
                let mut chain = HitAndRun::new(m, start.clone().unwrap())?;
                for _ in 0..burnin {
                    chain.step(&mut rng)?;
                }
                for _ in 0..rows {
                    for _ in 0..thin {
                        chain.step(&mut rng)?;
                    }
                    out.extend_from_slice(&chain.x);
                }
            }
            Ok(out)
        })
        .collect();
    let mut data = Vec::with_capacity(count * n);
    for p in parts {
        data.extend(p?);
    }
    Ok(Samples { dim: n, data })
}

fn exact_draw<R: Rng>(m: &LogConcaveMeasure, rng: &mut R, x: &mut [f64]) {
    let n = x.len();
    match m.family() {
        Family::Gaussian(g) => {
            let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
            for i in 0..n {
                let mut v = g.mean[i];
                for j in 0..=i {
                    v += g.chol[i * n + j] * z[j];
                }
                x[i] = v;
            }
        }
        Family::UniformBox { center, half_widths, .. } => {
            for i in 0..n {
                x[i] = center[i] + half_widths[i] * (2.0 * rng.random::<f64>() - 1.0);
            }
        }
        Family::UniformBall { center, radius, .. } => {
            let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
            let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
            for i in 0..n {
                x[i] = center[i] + r * z[i] / norm;
            }
        }
        Family::ProductExponential { center, rates, .. } => {
            for i in 0..n {
                let e: f64 = Exp1.sample(rng);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                x[i] = center[i] + sign * e / rates[i];
            }
        }
        Family::Transformed { base, map, .. } => {
            let mut y = vec![0.0; n];
            exact_draw(base, rng, &mut y);
            x.copy_from_slice(&map.apply(&y));
        }
        Family::Custom { .. } => unreachable!("custom measures use hit-and-run"),
    }
}

struct HitAndRun<'a> {
    m: &'a LogConcaveMeasure,
    x: Vec<f64>,
}

impl<'a> HitAndRun<'a> {
    fn new(m: &'a LogConcaveMeasure, x: Vec<f64>) -> Result<Self> {
        if !m.potential(&x).is_finite() {
            return Err(Error::InvalidMeasure("no interior starting point for hit-and-run".into()));
        }
        Ok(Self { m, x })
    }

    fn step<R: Rng>(&mut self, rng: &mut R) -> Result<()> {
        let n = self.x.len();
        let mut d: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        d.iter_mut().for_each(|v| *v /= norm);
        let x = &self.x;
        let m = self.m;
        let line = |t: f64| {
            let p: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            m.potential(&p)
        };
        let t = sample_log_concave_line(&line, rng)?;
        for (xi, di) in self.x.iter_mut().zip(&d) {
            *xi += t * di;
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
struct Knot {
    t: f64,
    g: f64,
}

/// Exact draw from the density `∝ e^{−V(t)}` on ℝ, `V` convex and finite at 0.
///
/// Envelope: between consecutive knots the density is bounded by its value
/// at the knot closer to the mode; beyond the outer knots it is bounded by
/// the exponential of the outer chord. Rejected points become knots.
pub fn sample_log_concave_line<F: Fn(f64) -> f64, R: Rng>(v: &F, rng: &mut R) -> Result<f64> {
    let v0 = v(0.0);
    if !v0.is_finite() {
        return Err(Error::InvalidMeasure("line restriction is infinite at its anchor".into()));
    }
    let (tm, vm) = minimize_convex(v, 0.0, 1.0, 1e-10);
    let (tm, vm) = if vm <= v0 { (tm, vm) } else { (0.0, v0) };
    let g = |t: f64| v(t) - vm;
    let mut knots = vec![Knot { t: tm, g: 0.0 }];
    for dir in [1.0, -1.0] {
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut g_hi = g(tm + dir * hi);
        while g_hi < 1.0 {
            lo = hi;
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::InvalidMeasure("line density does not decay (not normalizable or not log-concave)".into()));
            }
            g_hi = g(tm + dir * hi);
        }
        if g_hi == f64::INFINITY {
            // locate the support wall, keeping the last finite point
            let mut wall = hi;
            for _ in 0..60 {
                let mid = 0.5 * (lo + wall);
                if g(tm + dir * mid).is_finite() {
                    lo = mid;
                } else {
                    wall = mid;
                }
            }
            hi = wall;
        }
        if lo > 0.0 {
            knots.push(Knot { t: tm + dir * lo, g: g(tm + dir * lo) });
        }
        knots.push(Knot { t: tm + dir * hi, g: g(tm + dir * hi) });
    }
    knots.sort_by(|a, b| a.t.total_cmp(&b.t));
    let mode_slack = 1e-9;
    for _attempt in 0..100_000 {
        // piece weights: left tail, interior pieces, right tail
        let k = knots.len();
        let mut weights = Vec::with_capacity(k + 1);
        let first = knots[0];
        let left_rate = if first.g.is_finite() {
            let r = (first.g - knots[1].g) / (knots[1].t - first.t);
            if !(r > 0.0) {
                return Err(Error::InvalidMeasure("line potential is not convex (left chord)".into()));
            }
            weights.push((-first.g).exp() / r);
            r
        } else {
            weights.push(0.0);
            0.0
        };
        let mut env = Vec::with_capacity(k - 1);
        for w in knots.windows(2) {
            let near = if w[1].t <= tm { w[1].g } else if w[0].t >= tm { w[0].g } else { 0.0 };
            let e = if near.is_finite() { near - mode_slack } else { f64::INFINITY };
            env.push(e);
            weights.push((w[1].t - w[0].t) * (-e).exp());
        }
        let last = knots[k - 1];
        let right_rate = if last.g.is_finite() {
            let r = (last.g - knots[k - 2].g) / (last.t - knots[k - 2].t);
            if !(r > 0.0) {
                return Err(Error::InvalidMeasure("line potential is not convex (right chord)".into()));
            }
            weights.push((-last.g).exp() / r);
            r
        } else {
            weights.push(0.0);
            0.0
        };
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut piece = weights.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                piece = i;
                break;
            }
            u -= w;
        }
        let (t, env_g) = if piece == 0 {
            let e: f64 = Exp1.sample(rng);
            (first.t - e / left_rate, first.g + e)
        } else if piece == weights.len() - 1 {
            let e: f64 = Exp1.sample(rng);
            (last.t + e / right_rate, last.g + e)
        } else {
            let a = knots[piece - 1].t;
            let b = knots[piece].t;
            (a + (b - a) * rng.random::<f64>(), env[piece - 1])
        };
        let gt = g(t);
        if gt < env_g - 1e-6 * (1.0 + env_g.abs()) {
            return Err(Error::InvalidMeasure(
                "adaptive rejection envelope violated: potential is not convex".into(),
            ));
        }
        let log_u = rng.random::<f64>().ln();
        if log_u <= env_g - gt {
            return Ok(t);
        }
        let span = knots[k - 1].t - knots[0].t;
        let pos = knots.partition_point(|q| q.t < t);
        let separated = (pos == 0 || t - knots[pos - 1].t > 1e-6 * span)
            && (pos == k || knots[pos].t - t > 1e-6 * span);
        if knots.len() < 64 && separated && gt.is_finite() {
            knots.insert(pos, Knot { t, g: gt });
        }
    }
    Err(Error::InvalidMeasure("adaptive rejection failed to accept a point".into()))
}

/// Mean and batch-means standard error of `values` over `ERROR_BATCHES`
/// contiguous batches.
pub fn batch_means(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < ERROR_BATCHES * 2 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n.max(2) - 1) as f64;
        return (mean, (var / n as f64).sqrt());
    }
    let means: Vec<f64> = (0..ERROR_BATCHES)
        .map(|b| {
            let lo = b * n / ERROR_BATCHES;
            let hi = (b + 1) * n / ERROR_BATCHES;
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    let bm = means.iter().sum::<f64>() / ERROR_BATCHES as f64;
    let var = means.iter().map(|v| (v - bm).powi(2)).sum::<f64>() / (ERROR_BATCHES - 1) as f64;
    (mean, (var / ERROR_BATCHES as f64).sqrt())
}

/// Monte Carlo `E g(X)` with a batch-means standard error.
pub fn expectation<G>(m: &LogConcaveMeasure, g: G, count: usize, s: SeededStream) -> Result<(f64, f64)>
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    let samples = sample(m, count, s)?;
    expectation_over(&samples, g)
}

pub fn expectation_over<G>(samples: &Samples, g: G) -> Result<(f64, f64)>
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    let values: Vec<f64> = samples.data.par_chunks_exact(samples.dim).map(&g).collect();
    let bad = values.iter().filter(|v| !v.is_finite()).count();
    if bad > 0 {
        return Err(Error::Estimation(format!(
            "integrand is non-finite on {bad} of {} samples",
            values.len()
        )));
    }
    Ok(batch_means(&values))
}
