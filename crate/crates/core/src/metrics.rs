//! Distances and smoothness functionals between laws on ℝ.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::pushforward::{Density1D, DensitySource, EmpiricalSample1D, Oracle};
use crate::quadrature::{bisect, de_with_breaks, geometric_breaks};

/// Largest grid handed to the Fortet–Mourier program.
pub const FM_MAX_CELLS: usize = 4096;

/// Two densities resampled onto one grid (union range, finer step).
#[derive(Clone, Debug)]
pub struct CommonGrid {
    pub left: f64,
    pub step: f64,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

fn cell_masses(d: &Density1D, left: f64, step: f64, count: usize) -> Vec<f64> {
    let cdf = |t: f64| match d.oracle() {
        Some(o) => o.cdf(t),
        None => d.cdf(t),
    };
    let mut prev = cdf(left);
    (0..count)
        .map(|i| {
            let next = cdf(left + (i + 1) as f64 * step);
            let m = (next - prev).max(0.0);
            prev = next;
            m
        })
        .collect()
}

/// Cell masses of `a` and `b` on their common grid.
pub fn common_grid(a: &Density1D, b: &Density1D) -> CommonGrid {
    let step = a.step.min(b.step);
    let left = a.left.min(b.left);
    let right = a.right().max(b.right());
    let count = (((right - left) / step) - 1e-9).ceil().max(1.0) as usize;
    let aligned = a.step == b.step && ((a.left - b.left) / step).fract() == 0.0;
    let grab = |d: &Density1D| {
        if aligned && d.oracle().is_none() {
            let offset = ((d.left - left) / step).round() as usize;
            let mut v = vec![0.0; count];
            for (i, x) in d.values.iter().enumerate() {
                if offset + i < count {
                    v[offset + i] = x * step;
                }
            }
            v
        } else {
            cell_masses(d, left, step, count)
        }
    };
    CommonGrid { left, step, first: grab(a), second: grab(b) }
}

/// `∫|ρ₁ − ρ₂|` over the union grid (mutually singular laws give 2).
pub fn tv_distance(a: &Density1D, b: &Density1D) -> f64 {
    let g = common_grid(a, b);
    g.first.iter().zip(&g.second).map(|(x, y)| (x - y).abs()).sum()
}

/// `W₁ = ∫|F₁ − F₂|`.
pub fn w1_distance(a: &Density1D, b: &Density1D) -> f64 {
    let g = common_grid(a, b);
    w1_from_masses(&g.first, &g.second, g.step)
}

fn w1_from_masses(a: &[f64], b: &[f64], step: f64) -> f64 {
    let mut diff = 0.0;
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let next = diff + x - y;
        // F is linear inside a cell
        acc += if diff * next >= 0.0 {
            0.5 * (diff.abs() + next.abs())
        } else {
            0.5 * (diff * diff + next * next) / (diff.abs() + next.abs())
        };
        diff = next;
    }
    acc * step
}

/// Result of the Fortet–Mourier program on a grid.
#[derive(Clone, Debug, Serialize)]
pub struct FmSolution {
    pub value: f64,
    /// Optimal test function at the cell centers.
    pub phi: Vec<f64>,
    pub left: f64,
    pub step: f64,
    /// `|objective(φ) − value|`.
    pub certificate_gap: f64,
    /// Change of the optimum when the grid is coarsened by 2.
    pub refinement_change: f64,
    /// Bound on `|value − FM|` for masses spread uniformly over their cells:
    /// moving a unit mass to its cell center costs at most `step/4` against a
    /// 1-Lipschitz test function.
    pub discretization_bound: f64,
}

/// Concave piecewise-linear function on a closed interval.
#[derive(Clone, Debug)]
struct Pwl {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Pwl {
    fn argmax(&self) -> (f64, f64, f64) {
        let max = self.y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let tol = 1e-15 * (1.0 + max.abs());
        let first = self.y.iter().position(|v| *v >= max - tol).unwrap();
        let last = self.y.iter().rposition(|v| *v >= max - tol).unwrap();
        (self.x[first], self.x[last], max)
    }

    fn clip(&mut self, lo: f64, hi: f64) {
        let interp = |x: &[f64], y: &[f64], t: f64| -> f64 {
            let k = x.partition_point(|v| *v < t).clamp(1, x.len() - 1);
            let (x0, x1, y0, y1) = (x[k - 1], x[k], y[k - 1], y[k]);
            if x1 == x0 {
                y1
            } else {
                y0 + (y1 - y0) * (t - x0) / (x1 - x0)
            }
        };
        let ylo = interp(&self.x, &self.y, lo);
        let yhi = interp(&self.x, &self.y, hi);
        let mut nx = vec![lo];
        let mut ny = vec![ylo];
        for (xv, yv) in self.x.iter().zip(&self.y) {
            if *xv > lo && *xv < hi {
                nx.push(*xv);
                ny.push(*yv);
            }
        }
        nx.push(hi);
        ny.push(yhi);
        self.x = nx;
        self.y = ny;
    }
}

fn fm_program(masses: &[f64], delta: f64) -> (f64, Vec<f64>, f64) {
    let n = masses.len();
    let mut g = Pwl { x: vec![-1.0, 1.0], y: vec![-masses[0], masses[0]] };
    let mut windows = Vec::with_capacity(n);
    for &w in &masses[1..] {
        let (a, b, max) = g.argmax();
        windows.push((a, b));
        let mut nx = Vec::with_capacity(g.x.len() + 2);
        let mut ny = Vec::with_capacity(g.x.len() + 2);
        for (xv, yv) in g.x.iter().zip(&g.y) {
            if *xv < a {
                nx.push(xv - delta);
                ny.push(*yv);
            }
        }
        nx.push(a - delta);
        ny.push(max);
        nx.push(b + delta);
        ny.push(max);
        for (xv, yv) in g.x.iter().zip(&g.y) {
            if *xv > b {
                nx.push(xv + delta);
                ny.push(*yv);
            }
        }
        g = Pwl { x: nx, y: ny };
        g.clip(-1.0, 1.0);
        for (xv, yv) in g.x.iter().zip(g.y.iter_mut()) {
            *yv += w * xv;
        }
    }
    let (a, b, value) = g.argmax();
    let mut phi = vec![0.0; n];
    phi[n - 1] = 0.0f64.clamp(a, b);
    for i in (0..n - 1).rev() {
        let next = phi[i + 1];
        let (a, b) = windows[i];
        phi[i] = next.clamp(a, b).clamp(next - delta, next + delta).clamp(-1.0, 1.0);
    }
    let objective: f64 = phi.iter().zip(masses).map(|(p, w)| p * w).sum();
    (value, phi, (objective - value).abs())
}

fn coarsen(masses: &[f64], k: usize) -> Vec<f64> {
    masses.chunks(k).map(|c| c.iter().sum()).collect()
}

/// Fortet–Mourier program on signed cell masses `masses` with spacing `step`:
/// `max Σ φᵢ wᵢ` subject to `|φᵢ| ≤ 1`, `|φᵢ₊₁ − φᵢ| ≤ step`.
pub fn fm_from_masses(masses: &[f64], left: f64, step: f64) -> Result<FmSolution> {
    if masses.is_empty() {
        return Err(Error::Configuration("empty grid".into()));
    }
    let k = masses.len().div_ceil(FM_MAX_CELLS).max(1);
    let m = coarsen(masses, k);
    let delta = step * k as f64;
    let (value, phi, gap) = fm_program(&m, delta);
    let refinement_change = if m.len() >= 4 {
        let coarse = coarsen(&m, 2);
        (fm_program(&coarse, 2.0 * delta).0 - value).abs()
    } else {
        0.0
    };
    for (i, p) in phi.iter().enumerate() {
        let ok_box = p.abs() <= 1.0 + 1e-12;
        let ok_lip = i == 0 || (p - phi[i - 1]).abs() <= delta * (1.0 + 1e-9);
        if !ok_box || !ok_lip {
            return Err(Error::Convergence(format!("Fortet-Mourier solution infeasible at cell {i}")));
        }
    }
    // a coarse cell no longer holds uniform mass, so its center is only within delta/2
    let reach = if k > 1 { delta / 2.0 } else { delta / 4.0 };
    let discretization_bound = reach * m.iter().map(|v| v.abs()).sum::<f64>();
    Ok(FmSolution { value: value.max(0.0), phi, left, step: delta, certificate_gap: gap, refinement_change, discretization_bound })
}

/// Short grids are split into equal subcells first, so cell-center
/// placement costs little.
pub fn fm_solution(a: &Density1D, b: &Density1D) -> Result<FmSolution> {
    let g = common_grid(a, b);
    let r = (FM_MAX_CELLS / g.first.len().max(1)).max(1);
    let w: Vec<f64> = g
        .first
        .iter()
        .zip(&g.second)
        .flat_map(|(x, y)| std::iter::repeat((x - y) / r as f64).take(r))
        .collect();
    fm_from_masses(&w, g.left, g.step / r as f64)
}

pub fn fm_distance(a: &Density1D, b: &Density1D) -> Result<f64> {
    Ok(fm_solution(a, b)?.value)
}

/// Fortet–Mourier distance between two empirical laws, masses binned onto
/// `FM_MAX_CELLS` cells over the pooled range.
pub fn fm_distance_samples(a: &EmpiricalSample1D, b: &EmpiricalSample1D) -> Result<f64> {
    let lo = a.values()[0].min(b.values()[0]);
    let hi = a.values()[a.len() - 1].max(b.values()[b.len() - 1]);
    let span = (hi - lo).max(1e-12);
    let step = span / FM_MAX_CELLS as f64;
    let mut w = vec![0.0; FM_MAX_CELLS];
    let bin = |v: f64| (((v - lo) / step) as usize).min(FM_MAX_CELLS - 1);
    for v in a.values() {
        w[bin(*v)] += 1.0 / a.len() as f64;
    }
    for v in b.values() {
        w[bin(*v)] -= 1.0 / b.len() as f64;
    }
    Ok(fm_from_masses(&w, lo, step)?.value)
}

/// Shift modulus evaluated at a grid-snapped `h`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ShiftModulus {
    pub h_requested: f64,
    pub h: f64,
    pub delta: f64,
    pub snapped: bool,
}

/// `Δ(h) = ∫|ρ(t+h) − ρ(t)| dt` on the density grid, `h` snapped to a
/// multiple of the step.
pub fn shift_modulus(rho: &Density1D, h: f64) -> ShiftModulus {
    let k = (h.abs() / rho.step).round() as usize;
    let snapped_h = k as f64 * rho.step;
    let snapped = (snapped_h - h.abs()).abs() > 1e-9 * rho.step;
    let v = &rho.values;
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n + k {
        let a = if i < n { v[i] } else { 0.0 };
        let b = if i >= k && i - k < n { v[i - k] } else { 0.0 };
        s += (a - b).abs();
    }
    ShiftModulus { h_requested: h, h: snapped_h * h.signum(), delta: (s * rho.step).min(2.0), snapped }
}

/// Exact `Δ(h)` for an oracle law: the integrand changes sign only at
/// roots of `ρ(t+h) = ρ(t)`, singular points and support ends, and on each
/// piece its integral is a difference of CDF values.
pub fn shift_modulus_exact(o: &Oracle, h: f64) -> f64 {
    let h = h.abs();
    if h == 0.0 {
        return 0.0;
    }
    let (lo, hi) = o.truncation(1e-15);
    let scale = (hi - lo).max(h);
    let mut marks: Vec<f64> = vec![lo - h, hi];
    for s in o.singular_points() {
        marks.push(s);
        marks.push(s - h);
    }
    let (slo, shi) = o.support();
    for e in [slo, shi] {
        if e.is_finite() {
            marks.push(e);
            marks.push(e - h);
        }
    }
    let mut scan: Vec<f64> = Vec::new();
    for m in &marks {
        scan.extend(geometric_breaks(*m, 1e-12 * scale, 2.0 * scale));
    }
    let mid = 0.5 * (lo + hi - h);
    scan.extend(geometric_breaks(mid, 1e-6 * scale, 2.0 * scale));
    let span = hi - lo + h;
    scan.extend((0..=4000).map(|i| lo - h + span * i as f64 / 4000.0));
    scan.retain(|t| *t >= lo - h && *t <= hi);
    scan.sort_by(f64::total_cmp);
    scan.dedup();
    let g = |t: f64| o.pdf(t + h) - o.pdf(t);
    let sign = |t: f64| {
        let v = g(t);
        if v.is_nan() {
            0.0
        } else {
            v.signum()
        }
    };
    let mut cuts = marks.clone();
    for w in scan.windows(2) {
        let (sa, sb) = (sign(w[0]), sign(w[1]));
        if sa != 0.0 && sb != 0.0 && sa != sb {
            cuts.push(bisect(g, w[0], w[1], 1e-15 * scale));
        }
    }
    cuts.retain(|t| t.is_finite() && *t >= lo - h && *t <= hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let piece = |a: f64, b: f64| (o.cdf(b + h) - o.cdf(a + h)) - (o.cdf(b) - o.cdf(a));
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += piece(w[0], w[1]).abs();
    }
    // tails outside the truncated range
    total += o.cdf(lo) * 2.0 + (1.0 - o.cdf(hi)) * 2.0;
    total.min(2.0)
}

/// Best gain `Σ (G(bⱼ) − G(aⱼ))` over at most `k` pairs `a₁ < b₁ < a₂ < …`.
fn best_gain(g: &[f64], k: usize) -> f64 {
    let mut buy = vec![f64::NEG_INFINITY; k];
    let mut sell = vec![0.0f64; k + 1];
    for &v in g {
        for j in (0..k).rev() {
            sell[j + 1] = sell[j + 1].max(buy[j] + v);
            buy[j] = buy[j].max(sell[j] - v);
        }
    }
    sell.into_iter().fold(0.0, f64::max)
}

/// `Δ(h)` from an empirical law without binning. Writing
/// `G(t) = F(t+h) − F(t)`, the positive part of `ρ(·+h) − ρ` integrates to
/// `sup Σⱼ (G(bⱼ) − G(aⱼ))` over unions of intervals; the supremum is taken
/// over at most `intervals` of them so sampling noise is not harvested.
/// Positive and negative parts are estimated separately and added.
pub fn shift_modulus_empirical(s: &EmpiricalSample1D, h: f64, intervals: usize) -> f64 {
    let h = h.abs();
    if h == 0.0 {
        return 0.0;
    }
    let v = s.values();
    let n = v.len() as f64;
    // G is a step function with jumps at vᵢ and vᵢ − h
    let mut g = Vec::with_capacity(2 * v.len() + 2);
    g.push(0.0);
    let (mut i, mut j) = (0usize, 0usize);
    let mut below_t = 0usize;
    let mut below_th = 0usize;
    while i < v.len() || j < v.len() {
        let t = match (v.get(i), v.get(j)) {
            (Some(a), Some(b)) => a.min(b - h),
            (Some(a), None) => *a,
            (None, Some(b)) => b - h,
            (None, None) => unreachable!(),
        };
        while i < v.len() && v[i] <= t {
            i += 1;
        }
        while j < v.len() && v[j] - h <= t {
            j += 1;
        }
        below_t = below_t.max(i);
        below_th = below_th.max(j);
        g.push((below_th as f64 - below_t as f64) / n);
    }
    g.push(0.0);
    let k = intervals.max(1);
    let pos = best_gain(&g, k);
    let neg: Vec<f64> = g.iter().map(|x| -x).collect();
    (pos + best_gain(&neg, k)).min(2.0)
}

/// `count` log-spaced values on `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

/// Least-squares line `y = a + slope·x`: `(slope, slope stderr, rms residual)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let rms = (ss / n).sqrt();
    let se = if n > 2.0 { (ss / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    (slope, se, rms)
}

#[derive(Clone, Debug, Serialize)]
pub struct BesovFit {
    pub alpha: f64,
    /// `sup_h Δ(h)/h^α`.
    pub seminorm: f64,
    pub slope: f64,
    pub slope_stderr: f64,
    pub residual: f64,
    pub h: Vec<f64>,
    pub delta: Vec<f64>,
    pub warnings: Vec<String>,
}

pub const MIN_FIT_POINTS: usize = 6;

/// Fit of `log Δ` against `log h` from precomputed pairs.
pub fn besov_fit_points(alpha: f64, h: Vec<f64>, delta: Vec<f64>) -> Result<BesovFit> {
    check_alpha(alpha)?;
    finish_fit(alpha, h, delta, Vec::new())
}

fn finish_fit(alpha: f64, h: Vec<f64>, delta: Vec<f64>, mut warnings: Vec<String>) -> Result<BesovFit> {
    let usable: Vec<(f64, f64)> = h.iter().zip(&delta).filter(|(h, d)| **h > 0.0 && **d > 0.0).map(|(a, b)| (*a, *b)).collect();
    if usable.len() < MIN_FIT_POINTS {
        return Err(Error::Configuration(format!(
            "Besov fit needs at least {MIN_FIT_POINTS} distinct positive h values, got {}",
            usable.len()
        )));
    }
    let seminorm = usable.iter().map(|(h, d)| d / h.powf(alpha)).fold(0.0, f64::max);
    let lx: Vec<f64> = usable.iter().map(|(h, _)| h.ln()).collect();
    let ly: Vec<f64> = usable.iter().map(|(_, d)| d.ln()).collect();
    let (slope, slope_stderr, residual) = fit_line(&lx, &ly);
    if residual > 0.1 {
        warnings.push(format!("log-log fit residual {residual:.3} is large"));
    }
    Ok(BesovFit { alpha, seminorm, slope, slope_stderr, residual, h, delta, warnings })
}

pub fn besov_fit(rho: &Density1D, alpha: f64, h_grid: &[f64]) -> Result<BesovFit> {
    check_alpha(alpha)?;
    let mut h = Vec::new();
    let mut delta = Vec::new();
    let mut warnings = Vec::new();
    let mut snapped_any = false;
    for &req in h_grid {
        let s = shift_modulus(rho, req);
        snapped_any |= s.snapped;
        if s.h == 0.0 || h.contains(&s.h.abs()) {
            continue;
        }
        h.push(s.h.abs());
        delta.push(s.delta);
    }
    if snapped_any {
        warnings.push("h values snapped to multiples of the grid step".into());
    }
    let range = rho.right() - rho.left;
    if h.iter().any(|v| *v > range / 4.0) {
        warnings.push("h grid extends beyond a quarter of the density range".into());
    }
    finish_fit(alpha, h, delta, warnings)
}

pub fn besov_fit_oracle(o: &Oracle, alpha: f64, h_grid: &[f64]) -> Result<BesovFit> {
    check_alpha(alpha)?;
    let mut h: Vec<f64> = h_grid.iter().map(|v| v.abs()).filter(|v| *v > 0.0).collect();
    h.dedup();
    let delta = h.iter().map(|v| shift_modulus_exact(o, *v)).collect();
    finish_fit(alpha, h, delta, Vec::new())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Range(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    Ok(())
}

/// An Lᵖ norm, or divergence past the integrability threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LpNorm {
    Finite(f64),
    Divergent,
}

impl LpNorm {
    pub fn value(&self) -> Option<f64> {
        match self {
            LpNorm::Finite(v) => Some(*v),
            LpNorm::Divergent => None,
        }
    }
}

impl Serialize for LpNorm {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LpNorm::Finite(v) => s.serialize_f64(*v),
            LpNorm::Divergent => s.serialize_str("divergent"),
        }
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Range(format!("p must satisfy 1 <= p < inf, got {p}")));
    }
    Ok(())
}

/// Grid Lᵖ norm; oracle-backed densities use quadrature on the exact law.
pub fn lp_norm(rho: &Density1D, p: f64) -> Result<LpNorm> {
    check_p(p)?;
    if let DensitySource::Analytic { oracle } = &rho.source {
        return lp_norm_oracle(oracle, p);
    }
    Ok(LpNorm::Finite(lp_norm_grid(&rho.values, rho.step, p)))
}

pub fn lp_norm_grid(values: &[f64], step: f64, p: f64) -> f64 {
    (values.iter().map(|v| v.powf(p)).sum::<f64>() * step).powf(1.0 / p)
}

/// `p(1 − 1/k) ≥ 1` makes `∫ρᵖ` diverge at a `|t|^{1/k−1}` singularity.
fn diverges(k: u32, p: f64) -> bool {
    p * (1.0 - 1.0 / k as f64) >= 1.0
}

pub fn lp_norm_oracle(o: &Oracle, p: f64) -> Result<LpNorm> {
    check_p(p)?;
    if diverges(o.singularity_order(), p) {
        return Ok(LpNorm::Divergent);
    }
    let (lo, hi) = o.support();
    let r = de_with_breaks(|t| o.pdf(t).powf(p), &o.singular_points(), lo, hi, 1e-12);
    Ok(LpNorm::Finite(r.value.powf(1.0 / p)))
}

/// `‖ρ₁ − ρ₂‖_p` for two oracle laws.
pub fn lp_difference_oracle(a: &Oracle, b: &Oracle, p: f64) -> Result<LpNorm> {
    check_p(p)?;
    if diverges(a.singularity_order().max(b.singularity_order()), p) {
        return Ok(LpNorm::Divergent);
    }
    let mut breaks = a.singular_points();
    breaks.extend(b.singular_points());
    let (alo, ahi) = a.support();
    let (blo, bhi) = b.support();
    for e in [alo, ahi, blo, bhi] {
        if e.is_finite() {
            breaks.push(e);
        }
    }
    let r = de_with_breaks(|t| (a.pdf(t) - b.pdf(t)).abs().powf(p), &breaks, f64::NEG_INFINITY, f64::INFINITY, 1e-10);
    Ok(LpNorm::Finite(r.value.powf(1.0 / p)))
}

/// Grid `‖ρ₁ − ρ₂‖_p` on the common grid.
pub fn lp_difference(a: &Density1D, b: &Density1D, p: f64) -> Result<LpNorm> {
    check_p(p)?;
    if let (Some(x), Some(y)) = (a.oracle(), b.oracle()) {
        return lp_difference_oracle(x, y, p);
    }
    let g = common_grid(a, b);
    let s: f64 = g.first.iter().zip(&g.second).map(|(x, y)| ((x - y) / g.step).abs().powf(p)).sum();
    Ok(LpNorm::Finite((s * g.step).powf(1.0 / p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pushforward::analytic_density;
    use crate::special::normal_cdf;

    fn gauss(mean: f64) -> Density1D {
        analytic_density(&Oracle::Gaussian { mean, sd: 1.0 }, 4000).unwrap()
    }

    fn uniform(a: f64, b: f64) -> Density1D {
        analytic_density(&Oracle::Uniform { a, b }, 100).unwrap()
    }

    #[test]
    fn tv_examples() {
        let g = gauss(0.0);
        assert_eq!(tv_distance(&g, &g), 0.0);
        assert!((tv_distance(&uniform(0.0, 1.0), &uniform(2.0, 3.0)) - 2.0).abs() < 1e-12);
        let exact = 4.0 * normal_cdf(0.5) - 2.0;
        assert!((tv_distance(&g, &gauss(1.0)) - exact).abs() < 1e-4);
    }

    #[test]
    fn fm_examples() {
        let g = gauss(0.0);
        assert!(fm_distance(&g, &g).unwrap().abs() < 1e-15);
        assert!((fm_distance(&uniform(0.0, 1.0), &uniform(4.0, 5.0)).unwrap() - 2.0).abs() < 1e-9);
        // φ = clamp(1.5 − t, −1, 1)
        assert!((fm_distance(&uniform(0.0, 1.0), &uniform(2.0, 3.0)).unwrap() - 1.75).abs() < 1e-3);
        // windowed closed form: ∫_{h/2−1}^{h/2+1} (Φ(t) − Φ(t−h)) dt
        let h = 0.1;
        let r = crate::quadrature::gauss_kronrod(
            |t| normal_cdf(t) - normal_cdf(t - h),
            h / 2.0 - 1.0,
            h / 2.0 + 1.0,
            crate::quadrature::Tolerance::default(),
        );
        let sol = fm_solution(&g, &gauss(h)).unwrap();
        assert!((sol.value - r.value).abs() < 1e-3, "{} vs {}", sol.value, r.value);
        assert!((r.value - 0.0683).abs() < 1e-4);
        assert!(sol.certificate_gap < 1e-9);
    }

    #[test]
    fn fm_below_tv_and_w1() {
        let a = gauss(0.0);
        for shift in [0.05, 0.5, 3.0] {
            let b = gauss(shift);
            let fm = fm_distance(&a, &b).unwrap();
            assert!(fm <= tv_distance(&a, &b) + 1e-9);
            assert!(fm <= w1_distance(&a, &b) + 1e-9);
            assert!(fm <= 2.0);
        }
        assert!((w1_distance(&a, &gauss(0.5)) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn shift_modulus_examples() {
        let u = uniform(0.0, 1.0);
        let s = shift_modulus(&u, 0.1);
        assert!((s.delta - 0.2).abs() < 1e-12);
        assert_eq!(shift_modulus(&u, 0.0).delta, 0.0);
        assert_eq!(shift_modulus(&u, 0.13).delta, shift_modulus(&u, -0.13).delta);
        let c = &Oracle::Chi2_1;
        let ratio = shift_modulus_exact(c, 4e-3) / shift_modulus_exact(c, 1e-3);
        assert!((ratio - 2.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn exact_modulus_closed_forms() {
        // χ²₁: 2(2Φ(√h) − 1); symmetric unimodal: 2P(|X| ≤ h/2)
        for h in [1e-4, 1e-2, 0.3] {
            let chi = 2.0 * (2.0 * normal_cdf(f64::sqrt(h)) - 1.0);
            assert!((shift_modulus_exact(&Oracle::Chi2_1, h) - chi).abs() < 1e-10 * (1.0 + chi));
            let g = 2.0 * (2.0 * normal_cdf(h / 2.0) - 1.0);
            let got = shift_modulus_exact(&Oracle::Gaussian { mean: 0.0, sd: 1.0 }, h);
            assert!((got - g).abs() < 1e-10, "{got} vs {g}");
        }
        let u = shift_modulus_exact(&Oracle::Uniform { a: 0.0, b: 1.0 }, 0.1);
        assert!((u - 0.2).abs() < 1e-12);
    }

    #[test]
    fn besov_examples() {
        let hs = log_spaced(1e-4, 1e-2, 10);
        let g = besov_fit_oracle(&Oracle::Gaussian { mean: 0.0, sd: 1.0 }, 1.0, &hs).unwrap();
        assert!((g.slope - 1.0).abs() < 0.05);
        let c = besov_fit_oracle(&Oracle::Chi2_1, 0.5, &hs).unwrap();
        assert!((c.slope - 0.5).abs() < 0.05);
        let u = besov_fit(&uniform(0.0, 1.0), 1.0, &log_spaced(0.01, 0.2, 8)).unwrap();
        assert!((u.seminorm - 2.0).abs() < 1e-6);
        assert!(besov_fit(&uniform(0.0, 1.0), 1.0, &[0.01, 0.02]).is_err());
    }

    #[test]
    fn lp_examples() {
        assert!((lp_norm(&uniform(0.0, 1.0), 2.0).unwrap().value().unwrap() - 1.0).abs() < 1e-12);
        let g = lp_norm(&gauss(0.0), 2.0).unwrap().value().unwrap();
        assert!((g - (2.0 * std::f64::consts::PI.sqrt()).powf(-0.5)).abs() < 1e-10);
        let c = lp_norm_oracle(&Oracle::Chi2_1, 1.5).unwrap().value().unwrap();
        assert!((c - 0.988).abs() < 1e-3, "{c}");
        assert_eq!(lp_norm_oracle(&Oracle::Chi2_1, 2.0).unwrap(), LpNorm::Divergent);
        let gd = lp_norm_grid(&gauss(0.0).values, gauss(0.0).step, 2.0);
        assert!((gd - g).abs() < 1e-5);
    }

    #[test]
    fn lp_difference_zero_for_equal() {
        let d = lp_difference_oracle(&Oracle::Chi2_1, &Oracle::Chi2_1, 1.2).unwrap().value().unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn empirical_modulus_tracks_exact() {
        use crate::sampler::SeededStream;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = SeededStream::new(7, 0).rng();
        let z: Vec<f64> = (0..200_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let g = EmpiricalSample1D::new(z.clone()).unwrap();
        let c = EmpiricalSample1D::new(z.iter().map(|x| x * x).collect()).unwrap();
        for h in [0.05, 0.3] {
            let eg = shift_modulus_exact(&Oracle::Gaussian { mean: 0.0, sd: 1.0 }, h);
            let got = shift_modulus_empirical(&g, h, 1);
            assert!((got - eg).abs() < 0.12 * eg, "{h}: {got} vs {eg}");
            let ec = shift_modulus_exact(&Oracle::Chi2_1, h);
            assert!((shift_modulus_empirical(&c, h, 2) - ec).abs() < 0.05 * ec, "{h}");
        }
        assert_eq!(shift_modulus_empirical(&g, 0.0, 2), 0.0);
    }
}
