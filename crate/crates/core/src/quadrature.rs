//! One-dimensional quadrature and line search.
//!
//! Adaptive Gauss–Kronrod (7/15) for smooth or piecewise-smooth integrands,
//! double-exponential rules for endpoint singularities and half-infinite
//! ranges, and golden-section minimization of convex (possibly
//! extended-real) functions along a line.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-13, rel: 1e-11, max_intervals: 4000 }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel, ..Self::default() }
    }

    pub fn with_max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod over `[a, b]`.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Integral {
    gauss_kronrod_breaks(f, &[a, b], tol)
}

/// Adaptive Gauss–Kronrod over consecutive segments of `points`, which must be
/// sorted. Break points are where the integrand may have kinks or jumps.
pub fn gauss_kronrod_breaks<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: Tolerance) -> Integral {
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let (value, error) = kronrod15(&f, a, b);
        total += value;
        total_err += error;
        heap.push(Segment { a, b, value, error });
    }
    while total_err > tol.abs.max(tol.rel * total.abs()) && heap.len() < tol.max_intervals {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            heap.push(worst);
            break;
        }
        let (v1, e1) = kronrod15(&f, worst.a, mid);
        let (v2, e2) = kronrod15(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // re-sum to shed accumulated cancellation in the running totals
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
    Integral { value, error }
}

/// Break points placed geometrically around `center` out to `radius`, so an
/// adaptive rule over a wide window cannot step over a narrow bump.
pub fn geometric_breaks(center: f64, inner: f64, radius: f64) -> Vec<f64> {
    let mut offsets = vec![0.0];
    let mut r = inner;
    while r < radius {
        offsets.push(r);
        r *= 2.0;
    }
    offsets.push(radius);
    let mut pts: Vec<f64> = offsets.iter().rev().map(|o| center - o).collect();
    pts.extend(offsets.iter().skip(1).map(|o| center + o));
    pts
}

const DE_LEVELS: usize = 12;

fn de_sum<G: Fn(f64) -> f64>(term: G, t_lo: f64, t_hi: f64, rel: f64) -> Integral {
    // term(t) already includes the Jacobian; sums over t = j*h
    let mut h = 0.5;
    let mut sum = 0.0;
    let mut j = (t_lo / h).ceil() as i64;
    while (j as f64) * h <= t_hi {
        sum += term(j as f64 * h);
        j += 1;
    }
    let mut estimate = sum * h;
    let mut error = f64::INFINITY;
    for level in 1..DE_LEVELS {
        h *= 0.5;
        let mut j = (t_lo / h).ceil() as i64;
        if j % 2 == 0 {
            j += 1;
        }
        while (j as f64) * h <= t_hi {
            sum += term(j as f64 * h);
            j += 2;
        }
        let next = sum * h;
        error = (next - estimate).abs();
        estimate = next;
        if level >= 3 && error <= rel * estimate.abs().max(1e-300) {
            break;
        }
    }
    Integral { value: estimate, error }
}

/// Tanh–sinh rule on a finite interval. Tolerates integrable singularities at
/// either endpoint; the integrand is never evaluated at the endpoints. Near
/// `b` the abscissae are `b − δ` in floating point, so a strong singularity
/// at a nonzero `b` is better moved to a left endpoint at 0.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel: f64) -> Integral {
    if !(b > a) {
        return Integral { value: 0.0, error: 0.0 };
    }
    let half = 0.5 * (b - a);
    let pi2 = std::f64::consts::FRAC_PI_2;
    let term = |t: f64| {
        let u = pi2 * t.abs().sinh();
        let cu = u.cosh();
        if !cu.is_finite() {
            return 0.0;
        }
        let w = half * pi2 * t.cosh() / (cu * cu);
        let e2 = (-2.0 * u).exp();
        let dist = half * 2.0 * e2 / (1.0 + e2);
        if dist <= 0.0 {
            return 0.0;
        }
        let x = if t >= 0.0 { b - dist } else { a + dist };
        if x <= a || x >= b {
            return 0.0;
        }
        let v = f(x);
        if v == 0.0 {
            0.0
        } else {
            w * v
        }
    };
    de_sum(term, -4.0, 4.0, rel)
}

/// Exp–sinh rule on `[a, ∞)`; tolerates an integrable singularity at `a`.
pub fn exp_sinh<F: Fn(f64) -> f64>(f: F, a: f64, rel: f64) -> Integral {
    let pi2 = std::f64::consts::FRAC_PI_2;
    let term = |t: f64| {
        let s = pi2 * t.sinh();
        let offset = s.exp();
        if offset == 0.0 || !offset.is_finite() {
            return 0.0;
        }
        let x = a + offset;
        if x <= a {
            return 0.0;
        }
        let v = f(x);
        if v == 0.0 {
            0.0
        } else {
            v * pi2 * t.cosh() * offset
        }
    };
    de_sum(term, -6.5, 4.5, rel)
}

/// Integral over `(-∞, a]` via reflection.
pub fn exp_sinh_left<F: Fn(f64) -> f64>(f: F, a: f64, rel: f64) -> Integral {
    exp_sinh(|y| f(2.0 * a - y), a, rel)
}

/// Integral of `f` over the real line split at sorted break points; each
/// segment (including the two infinite tails) gets a double-exponential rule,
/// so integrable singularities are allowed at the break points.
pub fn de_with_breaks<F: Fn(f64) -> f64>(f: F, breaks: &[f64], lo: f64, hi: f64, rel: f64) -> Integral {
    let mut pts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|p| p.is_finite() && *p > lo && *p < hi)
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut acc = Integral { value: 0.0, error: 0.0 };
    let mut add = |r: Integral| {
        acc.value += r.value;
        acc.error += r.error;
    };
    if pts.is_empty() {
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => add(tanh_sinh(&f, lo, hi, rel)),
            (true, false) => add(exp_sinh(&f, lo, rel)),
            (false, true) => add(exp_sinh_left(&f, hi, rel)),
            (false, false) => {
                add(exp_sinh(&f, 0.0, rel));
                add(exp_sinh_left(&f, 0.0, rel));
            }
        }
        return acc;
    }
    let first = pts[0];
    let last = *pts.last().unwrap();
    if lo.is_finite() {
        add(tanh_sinh(&f, lo, first, rel));
    } else {
        add(exp_sinh_left(&f, first, rel));
    }
    for w in pts.windows(2) {
        add(tanh_sinh(&f, w[0], w[1], rel));
    }
    if hi.is_finite() {
        add(tanh_sinh(&f, last, hi, rel));
    } else {
        add(exp_sinh(&f, last, rel));
    }
    acc
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section minimization on `[lo, hi]`. Works with `+∞` values as long
/// as the function is unimodal on the bracket.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iter = 0;
    while (b - a) > tol * (1.0 + c.abs()) && iter < 200 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iter += 1;
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Minimizes a convex extended-real function of one variable, starting from
/// a point where it is finite. The bracket grows geometrically downhill.
pub fn minimize_convex<F: Fn(f64) -> f64>(f: F, t0: f64, step: f64, tol: f64) -> (f64, f64) {
    let f0 = f(t0);
    let fr = f(t0 + step);
    let fl = f(t0 - step);
    let downhill = |dir: f64, first: f64| {
        // offsets of the last three probes: a < b < c with f(b) < f(a)
        let (mut a, mut b, mut c) = (0.0, 0.0, step);
        let (mut fb, mut fc) = (f0, first);
        while fc < fb && c < 1e12 {
            a = b;
            b = c;
            fb = fc;
            c *= 2.0;
            fc = f(t0 + dir * c);
        }
        if dir > 0.0 {
            (t0 + a, t0 + c)
        } else {
            (t0 - c, t0 - a)
        }
    };
    let (lo, hi) = if fr < f0 {
        downhill(1.0, fr)
    } else if fl < f0 {
        downhill(-1.0, fl)
    } else {
        (t0 - step, t0 + step)
    };
    let (t, v) = golden_section(&f, lo, hi, tol);
    if f0 <= v {
        (t0, f0)
    } else {
        (t, v)
    }
}

/// Bisection for a sign change of `f` on `[a, b]`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= tol || m == a || m == b {
            return m;
        }
        let fm = f(m);
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
