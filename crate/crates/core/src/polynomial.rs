//! Sparse multivariate polynomials over variables `x1 … xN`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{Family, LogConcaveMeasure};
use crate::sampler::{self, batch_means, SeededStream};

/// Monomial map `{exponent multi-index → coefficient}`; every key has length
/// `nvars` and no stored coefficient is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
    degree: u32,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new(), degree: 0 }
    }

    pub fn from_terms<I: IntoIterator<Item = (Vec<u32>, f64)>>(nvars: usize, terms: I) -> Result<Self> {
        let mut map: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (mut alpha, c) in terms {
            if alpha.len() > nvars {
                if alpha[nvars..].iter().any(|&a| a != 0) {
                    return Err(Error::DimensionMismatch { expected: nvars, got: alpha.len() });
                }
                alpha.truncate(nvars);
            }
            alpha.resize(nvars, 0);
            *map.entry(alpha).or_insert(0.0) += c;
        }
        Ok(Self::canonical(nvars, map))
    }

    fn canonical(nvars: usize, mut terms: BTreeMap<Vec<u32>, f64>) -> Self {
        terms.retain(|_, c| *c != 0.0);
        let degree = terms.keys().map(|a| a.iter().sum::<u32>()).max().unwrap_or(0);
        Self { nvars, terms, degree }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Self::from_terms(nvars, [(vec![0; nvars], c)]).expect("valid constant")
    }

    /// The coordinate `x_{i+1}` (0-based `i`).
    pub fn variable(nvars: usize, i: usize) -> Result<Self> {
        if i >= nvars {
            return Err(Error::DimensionMismatch { expected: nvars, got: i + 1 });
        }
        let mut a = vec![0; nvars];
        a[i] = 1;
        Self::from_terms(nvars, [(a, 1.0)])
    }

    pub fn parse(text: &str) -> Result<Self> {
        Parser::new(text).parse()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.degree == 0
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, f64> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Same polynomial viewed in `n ≥ nvars` variables.
    pub fn with_nvars(&self, n: usize) -> Result<Self> {
        if n < self.nvars {
            let used = self.terms.keys().any(|a| a[n..].iter().any(|&e| e != 0));
            if used {
                return Err(Error::DimensionMismatch { expected: self.nvars, got: n });
            }
        }
        Self::from_terms(n, self.terms.iter().map(|(a, c)| (a.clone(), *c)))
    }

    fn check_span(&self, len: usize) -> Result<()> {
        if len < self.nvars {
            Err(Error::DimensionMismatch { expected: self.nvars, got: len })
        } else {
            Ok(())
        }
    }

    /// Evaluation without the length check; `x` must cover all variables.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (alpha, c) in &self.terms {
            let mut t = *c;
            for (xi, &a) in x.iter().zip(alpha) {
                if a > 0 {
                    t *= xi.powi(a as i32);
                }
            }
            s += t;
        }
        s
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_span(x.len())?;
        Ok(self.eval_unchecked(x))
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_span(x.len())?;
        let mut g = vec![0.0; x.len()];
        for (alpha, c) in &self.terms {
            for i in 0..self.nvars {
                if alpha[i] == 0 {
                    continue;
                }
                let mut t = c * alpha[i] as f64;
                for (j, (xj, &a)) in x.iter().zip(alpha).enumerate() {
                    let e = if j == i { a - 1 } else { a };
                    if e > 0 {
                        t *= xj.powi(e as i32);
                    }
                }
                g[i] += t;
            }
        }
        Ok(g)
    }

    /// `∂_e f = Σ e_i ∂_i f`, in `e.len()` variables.
    pub fn directional(&self, e: &[f64]) -> Result<Self> {
        self.check_span(e.len())?;
        let n = e.len();
        let mut out: Vec<(Vec<u32>, f64)> = Vec::new();
        for (alpha, c) in &self.terms {
            for i in 0..self.nvars {
                if alpha[i] == 0 || e[i] == 0.0 {
                    continue;
                }
                let mut b = alpha.clone();
                b.resize(n, 0);
                b[i] -= 1;
                out.push((b, c * alpha[i] as f64 * e[i]));
            }
        }
        Self::from_terms(n, out)
    }

    /// `a·f + b·g` over the larger variable span.
    pub fn linear_combination(a: f64, f: &Self, b: f64, g: &Self) -> Self {
        let n = f.nvars.max(g.nvars);
        let terms = f
            .terms
            .iter()
            .map(|(k, c)| (k.clone(), a * c))
            .chain(g.terms.iter().map(|(k, c)| (k.clone(), b * c)));
        Self::from_terms(n, terms).expect("padding only")
    }

    /// `(c, b, A)` with `f(x) = c + bᵀx + xᵀAx`, when `deg f ≤ 2`.
    pub fn quadratic_parts(&self) -> Option<(f64, DVector<f64>, DMatrix<f64>)> {
        if self.degree > 2 {
            return None;
        }
        let n = self.nvars;
        let mut c = 0.0;
        let mut b = DVector::zeros(n);
        let mut a = DMatrix::zeros(n, n);
        for (alpha, coef) in &self.terms {
            let idx: Vec<usize> = alpha
                .iter()
                .enumerate()
                .flat_map(|(i, &e)| std::iter::repeat_n(i, e as usize))
                .collect();
            match idx.as_slice() {
                [] => c += coef,
                [i] => b[*i] += coef,
                [i, j] if i == j => a[(*i, *i)] += coef,
                [i, j] => {
                    a[(*i, *j)] += 0.5 * coef;
                    a[(*j, *i)] += 0.5 * coef;
                }
                _ => unreachable!(),
            }
        }
        Some((c, b, a))
    }
}

impl FromStr for Polynomial {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

fn monomial_text(alpha: &[u32]) -> String {
    let mut parts = Vec::new();
    for (i, &a) in alpha.iter().enumerate() {
        match a {
            0 => {}
            1 => parts.push(format!("x{}", i + 1)),
            _ => parts.push(format!("x{}^{}", i + 1, a)),
        }
    }
    parts.join("*")
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut ordered: Vec<(&Vec<u32>, &f64)> = self.terms.iter().collect();
        ordered.sort_by(|a, b| {
            let da: u32 = a.0.iter().sum();
            let db: u32 = b.0.iter().sum();
            db.cmp(&da).then_with(|| b.0.cmp(a.0))
        });
        for (k, (alpha, &c)) in ordered.into_iter().enumerate() {
            let mono = monomial_text(alpha);
            let (sign, mag) = if c < 0.0 { ("-", -c) } else { ("+", c) };
            if k == 0 {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if mono.is_empty() {
                write!(f, "{mag:?}")?;
            } else if mag == 1.0 {
                write!(f, "{mono}")?;
            } else {
                write!(f, "{mag:?}*{mono}")?;
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Self { src: text.as_bytes(), pos: 0 }
    }

    fn err<T>(&self, pos: usize, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn parse(mut self) -> Result<Polynomial> {
        let mut terms: Vec<(BTreeMap<usize, u32>, f64)> = Vec::new();
        if self.peek().is_none() {
            return self.err(self.pos, "empty polynomial");
        }
        let mut first = true;
        loop {
            let mut sign = 1.0;
            match self.peek() {
                Some(b'+') if !first => self.pos += 1,
                Some(b'-') if !first => {
                    sign = -1.0;
                    self.pos += 1
                }
                None => break,
                Some(_) if !first => return self.err(self.pos, "expected `+` or `-`"),
                _ => {}
            }
            first = false;
            let (mono, c) = self.term()?;
            terms.push((mono, sign * c));
            if self.peek().is_none() {
                break;
            }
        }
        let nvars = terms.iter().flat_map(|(m, _)| m.keys().map(|i| i + 1)).max().unwrap_or(0);
        let expanded = terms.into_iter().map(|(m, c)| {
            let mut a = vec![0u32; nvars];
            for (i, e) in m {
                a[i] += e;
            }
            (a, c)
        });
        Polynomial::from_terms(nvars, expanded)
    }

    fn term(&mut self) -> Result<(BTreeMap<usize, u32>, f64)> {
        let mut mono = BTreeMap::new();
        let mut coef = 1.0;
        loop {
            self.factor(&mut mono, &mut coef)?;
            if self.peek() == Some(b'*') {
                self.pos += 1;
            } else {
                break;
            }
        }
        Ok((mono, coef))
    }

    fn factor(&mut self, mono: &mut BTreeMap<usize, u32>, coef: &mut f64) -> Result<()> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                *coef = -*coef;
                self.factor(mono, coef)
            }
            Some(b'+') => {
                self.pos += 1;
                self.factor(mono, coef)
            }
            Some(b'x') => {
                let start = self.pos;
                self.pos += 1;
                let digits = self.digits();
                if digits.is_empty() {
                    return self.err(self.pos, "expected variable index after `x`");
                }
                let idx: usize = digits
                    .parse()
                    .map_err(|_| Error::Parse { pos: start, msg: "variable index too large".into() })?;
                if idx == 0 {
                    return self.err(start, "variables are numbered from x1");
                }
                let e = self.exponent()?;
                *mono.entry(idx - 1).or_insert(0) += e;
                Ok(())
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let v = self.number()?;
                let e = self.exponent()?;
                *coef *= v.powi(e as i32);
                Ok(())
            }
            Some(_) => self.err(self.pos, format!("unexpected character `{}`", self.src[self.pos] as char)),
            None => self.err(self.pos, "unexpected end of input"),
        }
    }

    fn digits(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        self.digits();
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            self.digits();
        }
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if self.digits().is_empty() {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        text.parse::<f64>()
            .map_err(|_| Error::Parse { pos: start, msg: format!("malformed number `{text}`") })
    }

    fn exponent(&mut self) -> Result<u32> {
        if self.peek() != Some(b'^') {
            return Ok(1);
        }
        self.pos += 1;
        let at = {
            self.skip_ws();
            self.pos
        };
        match self.src.get(at) {
            Some(c) if c.is_ascii_digit() => {}
            Some(b'-') => return self.err(at, "exponent must be a nonnegative integer"),
            Some(_) => return self.err(at, "expected an integer exponent"),
            None => return self.err(at, "unexpected end of input after `^`"),
        }
        let digits = self.digits();
        if matches!(self.src.get(self.pos), Some(b'.') | Some(b'e') | Some(b'E')) {
            return self.err(at, "exponent must be a nonnegative integer");
        }
        digits
            .parse()
            .map_err(|_| Error::Parse { pos: at, msg: "exponent too large".into() })
    }
}

/// `‖f‖_q`; `None` for `q = 0` when `f` vanishes on a set of positive mass.
#[derive(Clone, Debug, Serialize)]
pub struct NormEstimate {
    pub q: f64,
    pub value: Option<f64>,
    pub stderr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PolynomialMoments {
    pub mean: f64,
    pub mean_stderr: f64,
    pub variance: f64,
    pub variance_stderr: f64,
    /// `E|f − Ef|^{1/(d−1)}`; absent for `d ≤ 1`.
    pub centered_moment: Option<f64>,
    pub centered_moment_stderr: Option<f64>,
    pub norms: Vec<NormEstimate>,
    /// Mean and variance come from closed forms.
    pub exact_mean_variance: bool,
    pub zero_fraction: f64,
}

/// Fraction of exact zeros above which `‖f‖_0` is reported undefined.
pub const ZERO_FRACTION_THRESHOLD: f64 = 1e-3;

/// Closed-form mean and variance of a quadratic under a Gaussian measure.
pub fn gaussian_quadratic_moments(f: &Polynomial, m: &LogConcaveMeasure) -> Option<(f64, f64)> {
    let Family::Gaussian(g) = m.family() else { return None };
    let f = f.with_nvars(m.dim()).ok()?;
    let (c, b, a) = f.quadratic_parts()?;
    let mu = DVector::from_column_slice(&g.mean);
    let s = &g.cov;
    let mean = c + b.dot(&mu) + mu.dot(&(&a * &mu)) + (&a * s).trace();
    let w = &b + 2.0 * (&a * &mu);
    let as_ = &a * s;
    let var = w.dot(&(s * &w)) + 2.0 * (&as_ * &as_).trace();
    Some((mean, var.max(0.0)))
}

pub fn moments(f: &Polynomial, m: &LogConcaveMeasure, qs: &[f64], count: usize, s: SeededStream) -> Result<PolynomialMoments> {
    f.check_span(m.dim())?;
    if qs.iter().any(|q| !(*q >= 0.0) || !q.is_finite()) {
        return Err(Error::Range("norm exponents must be finite and nonnegative".into()));
    }
    let samples = sampler::sample(m, count, s)?;
    let values: Vec<f64> = samples.rows().map(|r| f.eval_unchecked(r)).collect();
    moments_from_values(f, m, &values, qs)
}

/// Same report from precomputed values `f(X_i)`.
pub fn moments_from_values(f: &Polynomial, m: &LogConcaveMeasure, values: &[f64], qs: &[f64]) -> Result<PolynomialMoments> {
    if values.iter().any(|v| !v.is_finite()) {
        let bad = values.iter().filter(|v| !v.is_finite()).count();
        return Err(Error::Estimation(format!("f is non-finite on {bad} samples")));
    }
    let (mc_mean, mean_se) = batch_means(values);
    let dev: Vec<f64> = values.iter().map(|v| (v - mc_mean).powi(2)).collect();
    let (mc_var, var_se) = batch_means(&dev);
    let exact = gaussian_quadratic_moments(f, m);
    let (mean, variance, exact_flag, mean_se, var_se) = match exact {
        Some((e, v)) => (e, v, true, 0.0, 0.0),
        None => (mc_mean, mc_var, false, mean_se, var_se),
    };
    let d = f.degree();
    let (centered, centered_se) = if d >= 2 {
        let b = 1.0 / (d as f64 - 1.0);
        let c: Vec<f64> = values.iter().map(|v| (v - mean).abs().powf(b)).collect();
        let (e, se) = batch_means(&c);
        (Some(e), Some(se))
    } else {
        (None, None)
    };
    let zeros = values.iter().filter(|v| **v == 0.0).count();
    let zero_fraction = zeros as f64 / values.len() as f64;
    let mut norms = Vec::with_capacity(qs.len());
    for &q in qs {
        if q == 0.0 {
            if zero_fraction > ZERO_FRACTION_THRESHOLD {
                norms.push(NormEstimate { q, value: None, stderr: f64::NAN });
                continue;
            }
            let logs: Vec<f64> = values.iter().filter(|v| **v != 0.0).map(|v| v.abs().ln()).collect();
            let (e, se) = batch_means(&logs);
            let v = e.exp();
            norms.push(NormEstimate { q, value: Some(v), stderr: v * se });
        } else {
            let p: Vec<f64> = values.iter().map(|v| v.abs().powf(q)).collect();
            let (e, se) = batch_means(&p);
            let v = e.powf(1.0 / q);
            let dse = if e > 0.0 { v / q * se / e } else { 0.0 };
            norms.push(NormEstimate { q, value: Some(v), stderr: dse });
        }
    }
    Ok(PolynomialMoments {
        mean,
        mean_stderr: mean_se,
        variance,
        variance_stderr: var_se,
        centered_moment: centered,
        centered_moment_stderr: centered_se,
        norms,
        exact_mean_variance: exact_flag,
        zero_fraction,
    })
}
