//! Log-concave measures on ℝⁿ: densities, moments, whitening, and the
//! geometric quantities of their level sets and sections.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::constants::c_n_tau;
use crate::error::{Error, Result};
use crate::quadrature::{
    gauss_kronrod_breaks, geometric_breaks, golden_section, minimize_convex, Tolerance,
};
use crate::sampler::{self, SeededStream};
use crate::special::ln_gamma;

/// Convex potential `V`, with `+∞` outside the support.
pub type Potential = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Support {
    AllSpace,
    Box { center: Vec<f64>, half_widths: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    Gaussian,
    UniformBox,
    UniformBall,
    ProductExponential,
    Custom,
}

/// Invertible affine map `x ↦ Ax + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    pub matrix: DMatrix<f64>,
    pub shift: DVector<f64>,
}

impl AffineMap {
    pub fn new(matrix: DMatrix<f64>, shift: DVector<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() != shift.len() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), got: shift.len() });
        }
        let det = matrix.determinant();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::Degenerate("affine map has zero determinant".into()));
        }
        Ok(Self { matrix, shift })
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: DMatrix::identity(n, n), shift: DVector::zeros(n) }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut out = self.shift.as_slice().to_vec();
        for i in 0..n {
            for j in 0..n {
                out[i] += self.matrix[(i, j)] * x[j];
            }
        }
        out
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.determinant()
    }

    pub fn inverse(&self) -> Self {
        let inv = self
            .matrix
            .clone()
            .try_inverse()
            .expect("constructor guarantees invertibility");
        let shift = -(&inv * &self.shift);
        Self { matrix: inv, shift }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineMap) -> Self {
        Self {
            matrix: &self.matrix * &inner.matrix,
            shift: &self.matrix * &inner.shift + &self.shift,
        }
    }

    /// Largest entrywise deviation of `(A, b)` from `(I, 0)`.
    pub fn distance_to_identity(&self) -> f64 {
        let n = self.dim();
        let id = DMatrix::<f64>::identity(n, n);
        let dm = (&self.matrix - id).amax();
        dm.max(self.shift.amax())
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.matrix[(i, j)] != 0.0 {
                    return None;
                }
            }
        }
        Some((0..n).map(|i| self.matrix[(i, i)]).collect())
    }
}

#[derive(Clone)]
pub(crate) struct GaussianParts {
    pub mean: Vec<f64>,
    pub cov: DMatrix<f64>,
    /// Row-major lower-triangular Cholesky factor `L`, `Σ = LLᵀ`.
    pub chol: Vec<f64>,
    /// Row-major lower-triangular `L⁻¹`.
    pub chol_inv: Vec<f64>,
    pub log_norm: f64,
}

#[derive(Clone)]
pub(crate) enum Family {
    Gaussian(GaussianParts),
    UniformBox { center: Vec<f64>, half_widths: Vec<f64>, log_volume: f64 },
    UniformBall { center: Vec<f64>, radius: f64, log_volume: f64 },
    ProductExponential { center: Vec<f64>, rates: Vec<f64>, log_norm: f64 },
    Custom { potential: Potential, start: Option<Vec<f64>> },
    Transformed { base: Arc<LogConcaveMeasure>, map: AffineMap, inverse: AffineMap, log_det: f64 },
}

/// First two moments, with Monte Carlo standard errors when estimated.
#[derive(Clone, Debug)]
pub struct Moments {
    pub mean: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub mean_stderr: Option<Vec<f64>>,
    pub covariance_stderr: Option<DMatrix<f64>>,
    pub exact: bool,
}

/// How non-analytic moments are obtained.
#[derive(Clone, Copy, Debug)]
pub enum MomentBudget {
    Quadrature,
    MonteCarlo { count: usize, stream: SeededStream },
}

impl Default for MomentBudget {
    fn default() -> Self {
        MomentBudget::Quadrature
    }
}

/// A log-concave probability measure `e^{−V} dx` on ℝⁿ.
#[derive(Clone)]
pub struct LogConcaveMeasure {
    dim: usize,
    family: Family,
    support: Support,
    log_norm: Arc<OnceLock<std::result::Result<f64, String>>>,
    mode: Arc<OnceLock<std::result::Result<(Vec<f64>, f64), String>>>,
}

impl fmt::Debug for LogConcaveMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LogConcaveMeasure")
            .field("dim", &self.dim)
            .field("family", &self.tag())
            .field("support", &self.support)
            .finish()
    }
}

fn lower_tri_inverse(l: &[f64], n: usize) -> Vec<f64> {
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0 / l[i * n + i];
        for j in 0..i {
            let mut s = 0.0;
            for k in j..i {
                s += l[i * n + k] * inv[k * n + j];
            }
            inv[i * n + j] = -s / l[i * n + i];
        }
    }
    inv
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        Err(Error::DimensionMismatch { expected, got })
    } else {
        Ok(())
    }
}

fn ln_unit_ball_volume(n: usize) -> f64 {
    let nf = n as f64;
    0.5 * nf * PI.ln() - ln_gamma(nf / 2.0 + 1.0)
}

impl LogConcaveMeasure {
    fn from_family(dim: usize, family: Family, support: Support) -> Self {
        Self {
            dim,
            family,
            support,
            log_norm: Arc::new(OnceLock::new()),
            mode: Arc::new(OnceLock::new()),
        }
    }

    pub fn gaussian(mean: Vec<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if n == 0 {
            return Err(Error::Configuration("dimension must be positive".into()));
        }
        if cov.nrows() != n || cov.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: cov.nrows() });
        }
        let sym = (&cov + cov.transpose()) * 0.5;
        let chol = sym
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Degenerate("Gaussian covariance is not positive definite".into()))?;
        let l = chol.l();
        let mut lrow = vec![0.0; n * n];
        let mut log_det = 0.0;
        for i in 0..n {
            for j in 0..=i {
                lrow[i * n + j] = l[(i, j)];
            }
            log_det += 2.0 * l[(i, i)].ln();
        }
        let chol_inv = lower_tri_inverse(&lrow, n);
        let log_norm = 0.5 * (n as f64 * (2.0 * PI).ln() + log_det);
        let parts = GaussianParts { mean, cov: sym, chol: lrow, chol_inv, log_norm };
        Ok(Self::from_family(n, Family::Gaussian(parts), Support::AllSpace))
    }

    pub fn standard_gaussian(n: usize) -> Self {
        Self::gaussian(vec![0.0; n], DMatrix::identity(n, n)).expect("identity covariance")
    }

    pub fn uniform_box(center: Vec<f64>, half_widths: Vec<f64>) -> Result<Self> {
        let n = center.len();
        check_len(n, half_widths.len())?;
        if n == 0 || half_widths.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
            return Err(Error::Configuration("box half-widths must be positive".into()));
        }
        let log_volume = half_widths.iter().map(|h| (2.0 * h).ln()).sum();
        let support = Support::Box { center: center.clone(), half_widths: half_widths.clone() };
        Ok(Self::from_family(n, Family::UniformBox { center, half_widths, log_volume }, support))
    }

    /// Uniform measure on the cube `[−side/2, side/2]ⁿ`.
    pub fn uniform_cube(n: usize, side: f64) -> Result<Self> {
        Self::uniform_box(vec![0.0; n], vec![0.5 * side; n])
    }

    pub fn uniform_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let n = center.len();
        if n == 0 || !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Configuration("ball radius must be positive".into()));
        }
        let log_volume = ln_unit_ball_volume(n) + n as f64 * radius.ln();
        let support = Support::Ball { center: center.clone(), radius };
        Ok(Self::from_family(n, Family::UniformBall { center, radius, log_volume }, support))
    }

    /// Product of two-sided exponential (Laplace) laws with the given rates.
    pub fn product_exponential(center: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        let n = center.len();
        check_len(n, rates.len())?;
        if n == 0 || rates.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::Configuration("exponential rates must be positive".into()));
        }
        let log_norm = -rates.iter().map(|r| (0.5 * r).ln()).sum::<f64>();
        Ok(Self::from_family(
            n,
            Family::ProductExponential { center, rates, log_norm },
            Support::AllSpace,
        ))
    }

    /// A measure given only through its potential. `start`, when supplied,
    /// must be a point where the potential is finite.
    pub fn custom(dim: usize, potential: Potential, support: Support, start: Option<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Configuration("dimension must be positive".into()));
        }
        if let Some(s) = &start {
            check_len(dim, s.len())?;
        }
        Ok(Self::from_family(dim, Family::Custom { potential, start }, support))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub(crate) fn family(&self) -> &Family {
        &self.family
    }

    pub fn tag(&self) -> FamilyTag {
        match &self.family {
            Family::Gaussian(_) => FamilyTag::Gaussian,
            Family::UniformBox { .. } => FamilyTag::UniformBox,
            Family::UniformBall { .. } => FamilyTag::UniformBall,
            Family::ProductExponential { .. } => FamilyTag::ProductExponential,
            Family::Custom { .. } | Family::Transformed { .. } => FamilyTag::Custom,
        }
    }

    /// True when density, moments and sampling all have closed forms.
    pub fn is_analytic(&self) -> bool {
        match &self.family {
            Family::Custom { .. } => false,
            Family::Transformed { base, .. } => base.is_analytic(),
            _ => true,
        }
    }

    /// The potential `V`, normalized for built-in families (so that
    /// `ρ = e^{−V}`) and raw for custom ones.
    pub fn potential(&self, x: &[f64]) -> f64 {
        match &self.family {
            Family::Gaussian(g) => {
                let n = self.dim;
                let mut q = 0.0;
                for i in 0..n {
                    let mut z = 0.0;
                    for j in 0..=i {
                        z += g.chol_inv[i * n + j] * (x[j] - g.mean[j]);
                    }
                    q += z * z;
                }
                0.5 * q + g.log_norm
            }
            Family::UniformBox { center, half_widths, log_volume } => {
                let inside = x
                    .iter()
                    .zip(center.iter().zip(half_widths))
                    .all(|(xi, (c, h))| (xi - c).abs() <= *h);
                if inside {
                    *log_volume
                } else {
                    f64::INFINITY
                }
            }
            Family::UniformBall { center, radius, log_volume } => {
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                if r2 <= radius * radius {
                    *log_volume
                } else {
                    f64::INFINITY
                }
            }
            Family::ProductExponential { center, rates, log_norm } => {
                x.iter()
                    .zip(center.iter().zip(rates))
                    .map(|(xi, (c, r))| r * (xi - c).abs())
                    .sum::<f64>()
                    + log_norm
            }
            Family::Custom { potential, .. } => {
                let v = potential(x);
                if v.is_nan() {
                    f64::INFINITY
                } else {
                    v
                }
            }
            Family::Transformed { base, inverse, log_det, .. } => {
                base.potential(&inverse.apply(x)) + log_det
            }
        }
    }

    /// `ln Z` such that `ρ = e^{−V − ln Z}`.
    pub fn log_normalizer(&self) -> Result<f64> {
        match &self.family {
            Family::Custom { .. } => self
                .log_norm
                .get_or_init(|| self.custom_log_normalizer().map_err(|e| e.to_string()))
                .clone()
                .map_err(Error::Configuration),
            Family::Transformed { base, .. } => base.log_normalizer(),
            _ => Ok(0.0),
        }
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        check_len(self.dim, x.len())?;
        let v = self.potential(x);
        if v == f64::INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(-v - self.log_normalizer()?)
    }

    pub fn density(&self, x: &[f64]) -> Result<f64> {
        Ok(self.log_density(x)?.exp())
    }

    /// Closed-form `(mean, covariance)` for built-in families.
    pub fn analytic_moments(&self) -> Option<(Vec<f64>, DMatrix<f64>)> {
        let n = self.dim;
        match &self.family {
            Family::Gaussian(g) => Some((g.mean.clone(), g.cov.clone())),
            Family::UniformBox { center, half_widths, .. } => Some((
                center.clone(),
                DMatrix::from_diagonal(&DVector::from_iterator(n, half_widths.iter().map(|h| h * h / 3.0))),
            )),
            Family::UniformBall { center, radius, .. } => {
                let v = radius * radius / (n as f64 + 2.0);
                Some((center.clone(), DMatrix::identity(n, n) * v))
            }
            Family::ProductExponential { center, rates, .. } => Some((
                center.clone(),
                DMatrix::from_diagonal(&DVector::from_iterator(n, rates.iter().map(|r| 2.0 / (r * r)))),
            )),
            Family::Custom { .. } => None,
            Family::Transformed { base, map, .. } => {
                let (m, c) = base.analytic_moments()?;
                Some(push_moments(map, &m, &c))
            }
        }
    }

    pub fn mean_and_covariance(&self, budget: MomentBudget) -> Result<Moments> {
        if let Some((mean, covariance)) = self.analytic_moments() {
            return Ok(Moments { mean, covariance, mean_stderr: None, covariance_stderr: None, exact: true });
        }
        if let Family::Transformed { base, map, .. } = &self.family {
            let m = base.mean_and_covariance(budget)?;
            let (mean, covariance) = push_moments(map, &m.mean, &m.covariance);
            let mean_stderr = m.mean_stderr.as_ref().map(|se| {
                let a2 = map.matrix.map(|v| v * v);
                (&a2 * DVector::from_column_slice(&se.iter().map(|s| s * s).collect::<Vec<_>>()))
                    .map(f64::sqrt)
                    .as_slice()
                    .to_vec()
            });
            return Ok(Moments { mean, covariance, mean_stderr, covariance_stderr: None, exact: false });
        }
        let moments = match budget {
            MomentBudget::Quadrature => self.quadrature_moments()?,
            MomentBudget::MonteCarlo { count, stream } => self.monte_carlo_moments(count, stream)?,
        };
        let eig = moments.covariance.clone().symmetric_eigen();
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        if !(min > 1e-10 * max) {
            return Err(Error::Estimation(format!(
                "covariance estimate is ill-conditioned (eigenvalues {min:e} .. {max:e}); increase the budget"
            )));
        }
        Ok(moments)
    }

    fn monte_carlo_moments(&self, count: usize, stream: SeededStream) -> Result<Moments> {
        let n = self.dim;
        if count < 64 {
            return Err(Error::Estimation("Monte Carlo budget too small for covariance".into()));
        }
        let samples = sampler::sample(self, count, stream)?;
        let mut mean = vec![0.0; n];
        for row in samples.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        let c = samples.len() as f64;
        mean.iter_mut().for_each(|m| *m /= c);
        let mut cov = DMatrix::<f64>::zeros(n, n);
        let mut m4 = vec![0.0; n];
        for row in samples.rows() {
            for i in 0..n {
                let di = row[i] - mean[i];
                m4[i] += di * di;
                for j in 0..=i {
                    cov[(i, j)] += di * (row[j] - mean[j]);
                }
            }
        }
        for i in 0..n {
            for j in 0..=i {
                let v = cov[(i, j)] / (c - 1.0);
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        let mean_stderr: Vec<f64> = (0..n).map(|i| (cov[(i, i)] / c).sqrt()).collect();
        Ok(Moments { mean, covariance: cov, mean_stderr: Some(mean_stderr), covariance_stderr: None, exact: false })
    }

    fn quadrature_moments(&self) -> Result<Moments> {
        let n = self.dim;
        if n > 3 {
            return Err(Error::Configuration(
                "quadrature moments are limited to dimension <= 3; use a Monte Carlo budget".into(),
            ));
        }
        let log_z = self.log_normalizer()?;
        let (lo, hi) = self.integration_box()?;
        let k = 1 + n + n * (n + 1) / 2;
        let integrand = |x: &[f64], out: &mut [f64]| {
            let r = (-self.potential(x) - log_z).exp();
            out[0] = r;
            let mut idx = 1;
            for i in 0..n {
                out[idx] = r * x[i];
                idx += 1;
            }
            for i in 0..n {
                for j in 0..=i {
                    out[idx] = r * x[i] * x[j];
                    idx += 1;
                }
            }
        };
        let vals = refined_tensor_integral(&integrand, &lo, &hi, k, 1e-9)?;
        let mass = vals[0];
        let mean: Vec<f64> = (0..n).map(|i| vals[1 + i] / mass).collect();
        let mut cov = DMatrix::zeros(n, n);
        let mut idx = 1 + n;
        for i in 0..n {
            for j in 0..=i {
                let v = vals[idx] / mass - mean[i] * mean[j];
                cov[(i, j)] = v;
                cov[(j, i)] = v;
                idx += 1;
            }
        }
        Ok(Moments { mean, covariance: cov, mean_stderr: None, covariance_stderr: None, exact: false })
    }

    /// Total mass of `e^{−V − ln Z}` by tensor quadrature (dims ≤ 3).
    pub fn quadrature_mass(&self) -> Result<f64> {
        if self.dim > 3 {
            return Err(Error::Configuration("quadrature is limited to dimension <= 3".into()));
        }
        let log_z = self.log_normalizer()?;
        let (lo, hi) = self.integration_box()?;
        let f = |x: &[f64], out: &mut [f64]| out[0] = (-self.potential(x) - log_z).exp();
        Ok(refined_tensor_integral(&f, &lo, &hi, 1, 1e-10)?[0])
    }

    fn custom_log_normalizer(&self) -> Result<f64> {
        if self.dim > 3 {
            return Err(Error::Configuration(
                "normalization of custom potentials is only available in dimension <= 3".into(),
            ));
        }
        let (_, vmin) = self.mode()?;
        let (lo, hi) = self.integration_box()?;
        let f = |x: &[f64], out: &mut [f64]| out[0] = (vmin - self.potential(x)).exp();
        let mass = refined_tensor_integral(&f, &lo, &hi, 1, 1e-10)?[0];
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::Configuration("potential is not normalizable".into()));
        }
        Ok(mass.ln() - vmin)
    }

    /// Minimizer of `V` and the minimum value.
    pub fn mode(&self) -> Result<(Vec<f64>, f64)> {
        self.mode
            .get_or_init(|| self.compute_mode().map_err(|e| e.to_string()))
            .clone()
            .map_err(Error::Convergence)
    }

    fn compute_mode(&self) -> Result<(Vec<f64>, f64)> {
        let analytic = match &self.family {
            Family::Gaussian(g) => Some(g.mean.clone()),
            Family::UniformBox { center, .. }
            | Family::UniformBall { center, .. }
            | Family::ProductExponential { center, .. } => Some(center.clone()),
            Family::Transformed { base, map, .. } => Some(map.apply(&base.mode()?.0)),
            Family::Custom { .. } => None,
        };
        if let Some(x) = analytic {
            let v = self.potential(&x);
            return Ok((x, v));
        }
        let mut x = self.start_point()?;
        let mut v = self.potential(&x);
        for _sweep in 0..500 {
            let before = v;
            for i in 0..self.dim {
                let (t, fv) = minimize_convex(
                    |t| {
                        let mut y = x.clone();
                        y[i] += t;
                        self.potential(&y)
                    },
                    0.0,
                    0.5,
                    1e-11,
                );
                if fv < v {
                    x[i] += t;
                    v = fv;
                }
            }
            if (before - v).abs() <= 1e-13 * (1.0 + v.abs()) {
                return Ok((x, v));
            }
        }
        Err(Error::Convergence("potential minimization did not converge".into()))
    }

    /// A point where the potential is finite.
    pub fn start_point(&self) -> Result<Vec<f64>> {
        let mut candidates: Vec<Vec<f64>> = Vec::new();
        if let Family::Custom { start: Some(s), .. } = &self.family {
            candidates.push(s.clone());
        }
        match &self.support {
            Support::Box { center, .. } | Support::Ball { center, .. } => candidates.push(center.clone()),
            Support::AllSpace => {}
        }
        candidates.push(vec![0.0; self.dim]);
        candidates
            .into_iter()
            .find(|c| self.potential(c).is_finite())
            .ok_or_else(|| Error::InvalidMeasure("no point with finite potential found".into()))
    }

    /// Radial distance from `origin` along unit `dir` at which `V` first
    /// exceeds `level`; `None` when it never does within `1e8`.
    fn radial_extent(&self, origin: &[f64], dir: &[f64], level: f64, scale: f64) -> Option<f64> {
        let at = |r: f64| {
            let p: Vec<f64> = origin.iter().zip(dir).map(|(o, d)| o + r * d).collect();
            self.potential(&p)
        };
        let mut lo = 0.0;
        let mut hi = scale;
        while at(hi) <= level {
            lo = hi;
            hi *= 2.0;
            if hi > 1e8 {
                return None;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi || hi - lo <= 1e-13 * hi {
                break;
            }
            if at(mid) <= level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// Bounding box of `{V ≤ V_min + 40}` intersected with the support.
    fn integration_box(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.dim;
        if let Support::Box { center, half_widths } = &self.support {
            let lo = center.iter().zip(half_widths).map(|(c, h)| c - h).collect();
            let hi = center.iter().zip(half_widths).map(|(c, h)| c + h).collect();
            return Ok((lo, hi));
        }
        if let Support::Ball { center, radius } = &self.support {
            let lo = center.iter().map(|c| c - radius).collect();
            let hi = center.iter().map(|c| c + radius).collect();
            return Ok((lo, hi));
        }
        let (x0, vmin) = self.mode()?;
        let mut lo = x0.clone();
        let mut hi = x0.clone();
        for dir in sphere_directions(n, 200) {
            let r = self
                .radial_extent(&x0, &dir, vmin + 40.0, 1.0)
                .ok_or_else(|| Error::Configuration("potential is not normalizable (mass diverges)".into()))?;
            for i in 0..n {
                let p = x0[i] + r * dir[i];
                lo[i] = lo[i].min(p);
                hi[i] = hi[i].max(p);
            }
        }
        for i in 0..n {
            let pad = 0.1 * (hi[i] - lo[i]);
            lo[i] -= pad;
            hi[i] += pad;
        }
        Ok((lo, hi))
    }

    /// Largest eigenvalue of the covariance, square-rooted; the measure's
    /// length scale. Falls back to the level-set box for custom measures.
    fn length_scale(&self) -> Result<f64> {
        if let Some((_, c)) = self.analytic_moments() {
            return Ok(c.symmetric_eigen().eigenvalues.max().sqrt());
        }
        let (lo, hi) = self.integration_box()?;
        Ok(lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max) / 12.0)
    }

    /// Measure pushed forward by `map`: the law of `map(X)` for `X ~ self`.
    pub fn push_affine(&self, map: &AffineMap) -> Result<Self> {
        check_len(self.dim, map.dim())?;
        let diag = map.diagonal();
        let scalar = diag
            .as_ref()
            .filter(|d| d.iter().all(|v| *v == d[0]))
            .map(|d| d[0]);
        match (&self.family, &diag) {
            (Family::Gaussian(g), _) => {
                let (mean, cov) = push_moments(map, &g.mean, &g.cov);
                Self::gaussian(mean, cov)
            }
            (Family::UniformBox { center, half_widths, .. }, Some(d)) => Self::uniform_box(
                map.apply(center),
                half_widths.iter().zip(d).map(|(h, a)| h * a.abs()).collect(),
            ),
            (Family::UniformBall { center, radius, .. }, _) if scalar.is_some() => {
                Self::uniform_ball(map.apply(center), radius * scalar.unwrap().abs())
            }
            (Family::ProductExponential { center, rates, .. }, Some(d)) => Self::product_exponential(
                map.apply(center),
                rates.iter().zip(d).map(|(r, a)| r / a.abs()).collect(),
            ),
            (Family::Transformed { base, map: inner, .. }, _) => {
                let composed = map.compose(inner);
                Ok(Self::transformed(base.clone(), composed))
            }
            _ => Ok(Self::transformed(Arc::new(self.clone()), map.clone())),
        }
    }

    fn transformed(base: Arc<LogConcaveMeasure>, map: AffineMap) -> Self {
        let inverse = map.inverse();
        let log_det = map.determinant().abs().ln();
        let dim = base.dim;
        Self::from_family(dim, Family::Transformed { base, map, inverse, log_det }, Support::AllSpace)
    }

    /// Checks convexity of `V` on all pairs of `points` at `t ∈ {¼, ½, ¾}`;
    /// returns the largest normalized violation (0 when convex).
    pub fn convexity_defect(&self, points: &[Vec<f64>]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, x) in points.iter().enumerate() {
            let vx = self.potential(x);
            if !vx.is_finite() {
                continue;
            }
            for y in &points[i + 1..] {
                let vy = self.potential(y);
                if !vy.is_finite() {
                    continue;
                }
                for &t in &[0.25, 0.5, 0.75] {
                    let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| t * a + (1.0 - t) * b).collect();
                    let vz = self.potential(&z);
                    let slack = t * vx + (1.0 - t) * vy + 1e-9 * (1.0 + vx.abs() + vy.abs());
                    if vz > slack {
                        worst = worst.max((vz - slack) / (1.0 + vx.abs() + vy.abs()));
                    }
                }
            }
        }
        worst
    }
}

fn push_moments(map: &AffineMap, mean: &[f64], cov: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let m = map.apply(mean);
    let c = &map.matrix * cov * map.matrix.transpose();
    let c = (&c + c.transpose()) * 0.5;
    (m, c)
}

/// Evenly spread unit vectors: `±1` in one dimension, equally spaced angles in
/// two, a Fibonacci lattice in three or more (first three coordinates).
pub fn sphere_directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => {
            let golden = PI * (3.0 - 5f64.sqrt());
            let mut out = Vec::with_capacity(count + 2 * n);
            for k in 0..count {
                let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                let r = (1.0 - z * z).sqrt();
                let a = golden * k as f64;
                let mut v = vec![0.0; n];
                v[0] = r * a.cos();
                v[1] = r * a.sin();
                v[2] = z;
                out.push(v);
            }
            for i in 0..n {
                for s in [1.0, -1.0] {
                    let mut v = vec![0.0; n];
                    v[i] = s;
                    out.push(v);
                }
            }
            out
        }
    }
}

const GL8_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_W: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

fn composite_nodes(lo: f64, hi: f64, panels: usize) -> Vec<(f64, f64)> {
    let w = (hi - lo) / panels as f64;
    let mut out = Vec::with_capacity(panels * 8);
    for p in 0..panels {
        let c = lo + (p as f64 + 0.5) * w;
        for k in 0..4 {
            for s in [-1.0, 1.0] {
                out.push((c + s * 0.5 * w * GL8_X[k], 0.5 * w * GL8_W[k]));
            }
        }
    }
    out
}

fn tensor_integral<F: Fn(&[f64], &mut [f64])>(f: &F, lo: &[f64], hi: &[f64], k: usize, panels: usize) -> Vec<f64> {
    let n = lo.len();
    let nodes: Vec<Vec<(f64, f64)>> = (0..n).map(|i| composite_nodes(lo[i], hi[i], panels)).collect();
    let mut acc = vec![0.0; k];
    let mut buf = vec![0.0; k];
    let mut x = vec![0.0; n];
    let mut idx = vec![0usize; n];
    let m = nodes[0].len();
    loop {
        let mut w = 1.0;
        for d in 0..n {
            let (xv, wv) = nodes[d][idx[d]];
            x[d] = xv;
            w *= wv;
        }
        f(&x, &mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += w * b;
        }
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < m {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == n {
                return acc;
            }
        }
    }
}

/// Composite 8-point Gauss–Legendre tensor rule, doubling the panel count
/// until the first component is stable to `rel`.
fn refined_tensor_integral<F: Fn(&[f64], &mut [f64])>(
    f: &F,
    lo: &[f64],
    hi: &[f64],
    k: usize,
    rel: f64,
) -> Result<Vec<f64>> {
    let n = lo.len();
    let max_panels = match n {
        1 => 4096,
        2 => 256,
        _ => 48,
    };
    let mut panels = match n {
        1 => 16,
        2 => 8,
        _ => 6,
    };
    let mut prev = tensor_integral(f, lo, hi, k, panels);
    loop {
        panels *= 2;
        let next = tensor_integral(f, lo, hi, k, panels);
        let diff = (next[0] - prev[0]).abs();
        if diff <= rel * next[0].abs() {
            return Ok(next);
        }
        if panels >= max_panels {
            if diff <= 1e-5 * next[0].abs() {
                return Ok(next);
            }
            return Err(Error::Estimation(format!(
                "tensor quadrature did not stabilize (relative change {:e})",
                diff / next[0].abs()
            )));
        }
        prev = next;
    }
}

/// Whitening map `T` with `m ∘ T⁻¹` centered with identity covariance.
pub fn whitening_map(moments: &Moments) -> Result<AffineMap> {
    let n = moments.mean.len();
    let cov = &moments.covariance;
    let is_diag = (0..n).all(|i| (0..n).all(|j| i == j || cov[(i, j)] == 0.0));
    let a = if is_diag {
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            if !(cov[(i, i)] > 0.0) {
                return Err(Error::Degenerate("covariance is singular".into()));
            }
            a[(i, i)] = 1.0 / cov[(i, i)].sqrt();
        }
        a
    } else {
        let eig = cov.clone().symmetric_eigen();
        let max = eig.eigenvalues.max();
        if !(eig.eigenvalues.min() > 1e-12 * max) {
            return Err(Error::Degenerate(
                "covariance is singular: measure lives on a proper affine subspace".into(),
            ));
        }
        let inv_sqrt = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
        &eig.eigenvectors * DMatrix::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose()
    };
    let mean = DVector::from_column_slice(&moments.mean);
    let shift = -(&a * mean);
    AffineMap::new(a, shift)
}

pub fn isotropic_normalize(m: &LogConcaveMeasure) -> Result<(AffineMap, LogConcaveMeasure)> {
    isotropic_normalize_with(m, MomentBudget::default())
}

pub fn isotropic_normalize_with(m: &LogConcaveMeasure, budget: MomentBudget) -> Result<(AffineMap, LogConcaveMeasure)> {
    let moments = m.mean_and_covariance(budget)?;
    let t = whitening_map(&moments)?;
    let pushed = m.push_affine(&t)?;
    Ok((t, pushed))
}

/// Isotropic constant `L_μ` of a centered measure with scalar covariance.
pub fn isotropic_constant(m: &LogConcaveMeasure, budget: MomentBudget) -> Result<f64> {
    let moments = m.mean_and_covariance(budget)?;
    let n = m.dim();
    let s = moments.covariance.trace() / n as f64;
    let tol: f64 = if moments.exact { 1e-9 } else { 1e-2 };
    let mean_dev = moments.mean.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if mean_dev > tol.max(1e-12) * s.sqrt().max(1.0) {
        return Err(Error::NotIsotropic(format!("mean is not zero (max |mean_i| = {mean_dev:e})")));
    }
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { s } else { 0.0 };
            dev = dev.max((moments.covariance[(i, j)] - target).abs());
        }
    }
    if dev > 1e-2 * s {
        return Err(Error::NotIsotropic(format!(
            "covariance is not a scalar multiple of the identity (relative deviation {:e})",
            dev / s
        )));
    }
    Ok(s.sqrt())
}

/// `(max ρ, argmax)`.
pub fn max_density(m: &LogConcaveMeasure) -> Result<(f64, Vec<f64>)> {
    if !m.is_analytic() && m.dim() > 3 {
        return Err(Error::Configuration("numerical max-density search is limited to dimension <= 3".into()));
    }
    let (x, v) = m.mode()?;
    Ok(((-v - m.log_normalizer()?).exp(), x))
}

/// Volume of the level body `K = {ρ ≥ e^{−τ} max ρ}` and `sup_{x∈K} |x|`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LevelSet {
    pub volume: f64,
    pub radius: f64,
}

pub fn level_set_volume(m: &LogConcaveMeasure, tau: f64) -> Result<LevelSet> {
    let n = m.dim();
    if n > 3 {
        return Err(Error::Configuration("level-set quadrature is limited to dimension <= 3".into()));
    }
    if !(tau > 0.0) {
        return Err(Error::Range(format!("tau must be positive, got {tau}")));
    }
    m.log_normalizer()?;
    let (x0, vmin) = m.mode()?;
    let level = vmin + tau;
    let scale = m.length_scale()?.max(1e-12);
    let extent = |dir: &[f64]| -> Result<f64> {
        m.radial_extent(&x0, dir, level, scale)
            .ok_or_else(|| Error::Configuration("level set is unbounded; measure not normalizable".into()))
    };
    let norm_at = |dir: &[f64], r: f64| -> f64 {
        x0.iter().zip(dir).map(|(o, d)| (o + r * d).powi(2)).sum::<f64>().sqrt()
    };
    let tol = Tolerance::new(0.0, 1e-7).with_max_intervals(400);
    let (volume, err, radius) = match n {
        1 => {
            let rp = extent(&[1.0])?;
            let rm = extent(&[-1.0])?;
            (rp + rm, 0.0, (x0[0] + rp).abs().max((x0[0] - rm).abs()))
        }
        2 => {
            let failed = std::cell::Cell::new(false);
            let r_of = |a: f64| {
                extent(&[a.cos(), a.sin()]).unwrap_or_else(|_| {
                    failed.set(true);
                    0.0
                })
            };
            let breaks: Vec<f64> = (0..=8).map(|k| k as f64 * PI / 4.0).collect();
            let res = gauss_kronrod_breaks(|a| 0.5 * r_of(a).powi(2), &breaks, tol);
            if failed.get() {
                return Err(Error::Configuration("level set is unbounded".into()));
            }
            let mut best: f64 = 0.0;
            let mut best_a = 0.0;
            for k in 0..720 {
                let a = 2.0 * PI * k as f64 / 720.0;
                let dir = [a.cos(), a.sin()];
                let v = norm_at(&dir, r_of(a));
                if v > best {
                    best = v;
                    best_a = a;
                }
            }
            let step = 2.0 * PI / 720.0;
            let (_, neg) = golden_section(
                |a| -norm_at(&[a.cos(), a.sin()], r_of(a)),
                best_a - step,
                best_a + step,
                1e-10,
            );
            (res.value, res.error, best.max(-neg))
        }
        _ => {
            let failed = std::cell::Cell::new(false);
            let r_of = |theta: f64, phi: f64| {
                let dir = [phi.sin() * theta.cos(), phi.sin() * theta.sin(), phi.cos()];
                extent(&dir).unwrap_or_else(|_| {
                    failed.set(true);
                    0.0
                })
            };
            let theta_breaks: Vec<f64> = (0..=8).map(|k| k as f64 * PI / 4.0).collect();
            let phi_breaks: Vec<f64> = (0..=4).map(|k| k as f64 * PI / 4.0).collect();
            let inner_tol = Tolerance::new(0.0, 1e-8).with_max_intervals(200);
            let res = gauss_kronrod_breaks(
                |theta| {
                    gauss_kronrod_breaks(
                        |phi| r_of(theta, phi).powi(3) * phi.sin() / 3.0,
                        &phi_breaks,
                        inner_tol,
                    )
                    .value
                },
                &theta_breaks,
                Tolerance::new(0.0, 1e-6).with_max_intervals(200),
            );
            if failed.get() {
                return Err(Error::Configuration("level set is unbounded".into()));
            }
            let mut best: f64 = 0.0;
            for i in 0..=90 {
                for j in 0..=180 {
                    let theta = 2.0 * PI * j as f64 / 180.0;
                    let phi = PI * i as f64 / 90.0;
                    let dir = [phi.sin() * theta.cos(), phi.sin() * theta.sin(), phi.cos()];
                    best = best.max(norm_at(&dir, r_of(theta, phi)));
                }
            }
            (res.value, res.error, best)
        }
    };
    if err > 1e-2 * volume {
        return Err(Error::Estimation("level-set volume did not resolve to 1%".into()));
    }
    Ok(LevelSet { volume, radius })
}

/// `r = (n+1)·√(c_n(1)·e)`: radius enclosing the `τ = 1` level body of an
/// isotropic measure.
pub fn level_body_radius(n: usize) -> f64 {
    (n as f64 + 1.0) * (c_n_tau(n as u32, 1.0).expect("n >= 1") * std::f64::consts::E).sqrt()
}

/// Envelope exponent `α = 1/(3r)` used for truncation and envelope fits.
pub fn envelope_alpha(n: usize) -> f64 {
    1.0 / (3.0 * level_body_radius(n))
}

fn orthonormal_complement(e: &[f64]) -> Vec<Vec<f64>> {
    let n = e.len();
    let mut basis: Vec<Vec<f64>> = vec![e.to_vec()];
    for k in 0..n {
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= dot * bi;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
        if basis.len() == n {
            break;
        }
    }
    basis.remove(0);
    basis
}

/// Parameter range of `t` where `p + t·e` lies in the box, by slab clipping.
fn clip_to_box(p: &[f64], e: &[f64], center: &[f64], half_widths: &[f64]) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..p.len() {
        let offset = p[i] - center[i];
        let h = half_widths[i];
        if e[i].abs() < 1e-15 {
            if offset.abs() > h {
                return None;
            }
            continue;
        }
        let (a, b) = ((-h - offset) / e[i], (h - offset) / e[i]);
        lo = lo.max(a.min(b));
        hi = hi.min(a.max(b));
    }
    (lo <= hi).then_some((lo, hi))
}

/// Ends of the interval of `s` in `[lo, hi]` where the convex predicate
/// `hits` holds, located by a scan and bisection.
fn section_interval<H: Fn(f64) -> bool>(hits: H, lo: f64, hi: f64) -> Option<(f64, f64)> {
    const SCAN: usize = 256;
    let at = |k: usize| lo + (hi - lo) * k as f64 / SCAN as f64;
    let first = (0..=SCAN).find(|&k| hits(at(k)))?;
    let last = (first..=SCAN).rev().find(|&k| hits(at(k)))?;
    let edge = |mut inside: f64, mut outside: f64| {
        for _ in 0..60 {
            let mid = 0.5 * (inside + outside);
            if hits(mid) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    let a = if first == 0 { lo } else { edge(at(first), at(first - 1)) };
    let b = if last == SCAN { hi } else { edge(at(last), at(last + 1)) };
    (b > a).then_some((a, b))
}

/// Total variation of the Skorohod derivative along unit `e`, by the
/// max-section formula `2 ∫_{e⊥} max_t ρ(x + te) dx`.
pub fn skorohod_norm(m: &LogConcaveMeasure, e: &[f64]) -> Result<f64> {
    let n = m.dim();
    check_len(n, e.len())?;
    if n > 3 {
        return Err(Error::Configuration("section quadrature is limited to dimension <= 3".into()));
    }
    let norm = e.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::Range(format!("direction must have unit length, |e| = {norm}")));
    }
    let log_z = m.log_normalizer()?;
    let (x0, vmin) = m.mode()?;
    if n == 1 {
        return Ok(2.0 * (-vmin - log_z).exp());
    }
    let scale = m.length_scale()?;
    let basis = orthonormal_complement(e);
    let center: Vec<f64> = match m.support() {
        Support::Box { center, .. } | Support::Ball { center, .. } => center.clone(),
        Support::AllSpace => x0.clone(),
    };
    let line_scan = 8.0 * scale.max(1e-12) * (n as f64);
    let section_point = |s: &[f64]| -> Vec<f64> {
        let mut p = center.clone();
        for (sj, u) in s.iter().zip(&basis) {
            for (pi, ui) in p.iter_mut().zip(u) {
                *pi += sj * ui;
            }
        }
        p
    };
    let section_max = |s: &[f64]| -> f64 {
        let p = section_point(s);
        let along = |t: f64| {
            let q: Vec<f64> = p.iter().zip(e).map(|(a, b)| a + t * b).collect();
            m.potential(&q)
        };
        let mut t0 = 0.0;
        if let Support::Box { half_widths, .. } = m.support() {
            // short chords near the shadow boundary are easy to miss by scanning
            match clip_to_box(&p, e, &center, half_widths) {
                Some((a, b)) => t0 = 0.5 * (a + b),
                None => return 0.0,
            }
        }
        if !along(t0).is_finite() {
            let mut found = None;
            for k in 1..=64 {
                for sgn in [1.0, -1.0] {
                    let t = sgn * line_scan * k as f64 / 64.0;
                    if along(t).is_finite() {
                        found = Some(t);
                        break;
                    }
                }
                if found.is_some() {
                    break;
                }
            }
            match found {
                Some(t) => t0 = t,
                None => return 0.0,
            }
        }
        let (_, v) = minimize_convex(along, t0, 0.25 * scale.max(1e-12), 1e-8);
        (-v - log_z).exp()
    };
    // outer window and kink locations per axis of e⊥
    let mut windows: Vec<(f64, f64, Vec<f64>)> = Vec::new();
    for u in &basis {
        match m.support() {
            Support::Box { half_widths, .. } => {
                let reach: f64 = u.iter().zip(half_widths).map(|(a, h)| a.abs() * h).sum();
                let mut breaks = vec![-reach, reach];
                for corner in 0..(1usize << n) {
                    let proj: f64 = (0..n)
                        .map(|i| if corner >> i & 1 == 1 { half_widths[i] } else { -half_widths[i] } * u[i])
                        .sum();
                    breaks.push(proj);
                }
                breaks.push(0.0);
                breaks.sort_by(f64::total_cmp);
                breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
                windows.push((-reach, reach, breaks));
            }
            Support::Ball { radius, .. } => {
                windows.push((-radius, *radius, vec![-radius, 0.0, *radius]));
            }
            Support::AllSpace => {
                let radius = (1e12f64).ln() / envelope_alpha(n) * scale;
                let offset: f64 = x0.iter().zip(&center).zip(u).map(|((a, c), b)| (a - c) * b).sum();
                windows.push((-radius, radius, geometric_breaks(offset, 0.25 * scale, radius)));
            }
        }
    }
    let value = if n == 2 {
        let (_, _, b) = &windows[0];
        gauss_kronrod_breaks(|s| section_max(&[s]), b, Tolerance::new(0.0, 1e-9)).value
    } else {
        let (_, _, b0) = &windows[0];
        let (lo1, hi1, b1) = &windows[1];
        let hit_range = |s0: f64| -> Option<(f64, f64)> {
            match m.support() {
                Support::AllSpace => Some((*lo1, *hi1)),
                Support::Ball { radius, .. } => {
                    let r2 = radius * radius - s0 * s0;
                    (r2 > 0.0).then(|| (-r2.sqrt(), r2.sqrt()))
                }
                Support::Box { half_widths, .. } => {
                    let hits = |s1: f64| clip_to_box(&section_point(&[s0, s1]), e, &center, half_widths).is_some();
                    section_interval(hits, *lo1, *hi1)
                }
            }
        };
        gauss_kronrod_breaks(
            |s0| {
                let Some((a, b)) = hit_range(s0) else { return 0.0 };
                // the section is smooth inside the chord, so only its ends are breaks
                let mut breaks = vec![a];
                breaks.extend(b1.iter().copied().filter(|v| *v > a && *v < b));
                breaks.push(b);
                gauss_kronrod_breaks(|s1| section_max(&[s0, s1]), &breaks, Tolerance::new(1e-14, 1e-9)).value
            },
            b0,
            Tolerance::new(0.0, 1e-8),
        )
        .value
    };
    Ok(2.0 * value)
}

/// Smallest `c` with `ρ(x) ≤ c·e^{−α|x|}` over a direction grid; `+∞` when
/// `ρ(x)e^{α|x|}` has no finite supremum.
pub fn envelope_fit(m: &LogConcaveMeasure, alpha: f64) -> Result<f64> {
    let n = m.dim();
    if n > 3 {
        return Err(Error::Configuration("envelope fit is limited to dimension <= 3".into()));
    }
    if !(alpha >= 0.0) {
        return Err(Error::Range(format!("alpha must be nonnegative, got {alpha}")));
    }
    let log_z = m.log_normalizer()?;
    let (x0, vmin) = m.mode()?;
    if alpha == 0.0 {
        return Ok((-vmin - log_z).exp());
    }
    let origin = vec![0.0; n];
    if !m.potential(&origin).is_finite() {
        return Err(Error::Configuration("envelope is measured from the origin, which lies outside the support".into()));
    }
    let scale = m.length_scale()?.max(1e-12);
    let truncation = 1e6 * scale;
    let mut best = f64::NEG_INFINITY;
    let count = match n {
        1 => 2,
        2 => 720,
        _ => 2000,
    };
    for dir in sphere_directions(n, count) {
        let g = |r: f64| {
            if r < 0.0 {
                return f64::INFINITY;
            }
            let p: Vec<f64> = dir.iter().map(|d| r * d).collect();
            m.potential(&p) - alpha * r
        };
        let (r, v) = minimize_convex(g, 0.0, 0.25 * scale, 1e-12);
        if r > truncation {
            return Ok(f64::INFINITY);
        }
        best = best.max(-v);
    }
    // the mode itself may not lie on a grid ray
    let r0 = x0.iter().map(|v| v * v).sum::<f64>().sqrt();
    best = best.max(-vmin + alpha * r0);
    Ok((best - log_z).exp())
}

/// Measure JSON: `{"family": ..., "dim": n, ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MeasureSpec {
    Gaussian {
        dim: usize,
        #[serde(default)]
        mean: Option<Vec<f64>>,
        #[serde(default)]
        cov: Option<Vec<Vec<f64>>>,
    },
    UniformBox {
        dim: usize,
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default)]
        half_widths: Option<Vec<f64>>,
        #[serde(default)]
        side: Option<f64>,
    },
    UniformBall {
        dim: usize,
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default)]
        radius: Option<f64>,
    },
    ProductExponential {
        dim: usize,
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default)]
        rates: Option<Vec<f64>>,
        #[serde(default)]
        rate: Option<f64>,
    },
}

impl MeasureSpec {
    pub fn build(&self) -> Result<LogConcaveMeasure> {
        match self {
            MeasureSpec::Gaussian { dim, mean, cov } => {
                let mean = mean.clone().unwrap_or_else(|| vec![0.0; *dim]);
                check_len(*dim, mean.len())?;
                let cov = match cov {
                    None => DMatrix::identity(*dim, *dim),
                    Some(rows) => {
                        if rows.len() != *dim || rows.iter().any(|r| r.len() != *dim) {
                            return Err(Error::Configuration("cov must be a dim x dim array".into()));
                        }
                        DMatrix::from_fn(*dim, *dim, |i, j| rows[i][j])
                    }
                };
                LogConcaveMeasure::gaussian(mean, cov)
            }
            MeasureSpec::UniformBox { dim, center, half_widths, side } => {
                let center = center.clone().unwrap_or_else(|| vec![0.0; *dim]);
                let hw = match (half_widths, side) {
                    (Some(h), _) => h.clone(),
                    (None, Some(s)) => vec![0.5 * s; *dim],
                    (None, None) => vec![0.5; *dim],
                };
                check_len(*dim, center.len())?;
                LogConcaveMeasure::uniform_box(center, hw)
            }
            MeasureSpec::UniformBall { dim, center, radius } => {
                let center = center.clone().unwrap_or_else(|| vec![0.0; *dim]);
                check_len(*dim, center.len())?;
                LogConcaveMeasure::uniform_ball(center, radius.unwrap_or(1.0))
            }
            MeasureSpec::ProductExponential { dim, center, rates, rate } => {
                let center = center.clone().unwrap_or_else(|| vec![0.0; *dim]);
                let rates = rates.clone().unwrap_or_else(|| vec![rate.unwrap_or(1.0); *dim]);
                check_len(*dim, center.len())?;
                LogConcaveMeasure::product_exponential(center, rates)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sqrt12() -> f64 {
        12f64.sqrt()
    }

    #[test]
    fn log_density_examples() {
        let g = LogConcaveMeasure::standard_gaussian(1);
        assert_relative_eq!(g.log_density(&[0.0]).unwrap(), -0.5 * (2.0 * PI).ln(), epsilon = 1e-14);
        let b = LogConcaveMeasure::uniform_cube(2, 1.0).unwrap();
        assert_eq!(b.log_density(&[0.2, 0.3]).unwrap(), 0.0);
        assert_eq!(b.log_density(&[2.0, 0.0]).unwrap(), f64::NEG_INFINITY);
        assert!(matches!(b.log_density(&[0.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn analytic_moment_examples() {
        let g = LogConcaveMeasure::standard_gaussian(3);
        let m = g.mean_and_covariance(MomentBudget::Quadrature).unwrap();
        assert_eq!(m.mean, vec![0.0; 3]);
        assert_eq!(m.covariance, DMatrix::identity(3, 3));
        let b = LogConcaveMeasure::uniform_cube(2, 1.0).unwrap();
        let m = b.mean_and_covariance(MomentBudget::Quadrature).unwrap();
        assert_relative_eq!(m.covariance[(0, 0)], 1.0 / 12.0, epsilon = 1e-15);
        let l = LogConcaveMeasure::product_exponential(vec![0.0; 2], vec![1.0; 2]).unwrap();
        let m = l.mean_and_covariance(MomentBudget::Quadrature).unwrap();
        assert_eq!(m.covariance, DMatrix::identity(2, 2) * 2.0);
    }

    #[test]
    fn builtin_densities_integrate_to_one() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]);
        let measures = vec![
            LogConcaveMeasure::standard_gaussian(1),
            LogConcaveMeasure::gaussian(vec![0.5, -1.0], cov).unwrap(),
            LogConcaveMeasure::uniform_cube(3, 2.0).unwrap(),
            LogConcaveMeasure::product_exponential(vec![0.0], vec![1.5]).unwrap(),
            LogConcaveMeasure::standard_gaussian(3),
        ];
        for m in measures {
            let mass = m.quadrature_mass().unwrap();
            assert!((mass - 1.0).abs() < 1e-6, "{m:?}: mass {mass}");
        }
    }

    #[test]
    fn builtins_are_convex() {
        let pts: Vec<Vec<f64>> = (0..12)
            .map(|k| {
                let a = k as f64 * 0.7;
                vec![a.sin() * 1.3, (1.7 * a).cos() * 0.4]
            })
            .collect();
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.8, 0.8, 1.0]);
        for m in [
            LogConcaveMeasure::gaussian(vec![0.0, 0.1], cov).unwrap(),
            LogConcaveMeasure::uniform_cube(2, 2.0).unwrap(),
            LogConcaveMeasure::uniform_ball(vec![0.0; 2], 1.2).unwrap(),
            LogConcaveMeasure::product_exponential(vec![0.0; 2], vec![1.0, 3.0]).unwrap(),
        ] {
            assert_eq!(m.convexity_defect(&pts), 0.0);
        }
        let bad = LogConcaveMeasure::custom(
            2,
            Arc::new(|x: &[f64]| -(x[0] * x[0] + x[1] * x[1])),
            Support::AllSpace,
            None,
        )
        .unwrap();
        assert!(bad.convexity_defect(&pts) > 0.0);
    }

    #[test]
    fn custom_quartic_normalization_and_moments() {
        let m = LogConcaveMeasure::custom(1, Arc::new(|x: &[f64]| x[0].powi(4) / 4.0), Support::AllSpace, None).unwrap();
        // Z = ∫ e^{-x⁴/4} dx = 2 · 4^{1/4} Γ(5/4)
        let z = 2.0 * 4f64.powf(0.25) * crate::special::gamma(1.25);
        assert_relative_eq!(m.log_normalizer().unwrap(), z.ln(), epsilon = 1e-9);
        let mom = m.mean_and_covariance(MomentBudget::Quadrature).unwrap();
        let ex2 = 2.0 * crate::special::gamma(0.75) / crate::special::gamma(0.25);
        assert_relative_eq!(mom.covariance[(0, 0)], ex2, epsilon = 1e-8);
        assert!(mom.mean[0].abs() < 1e-10);
    }

    #[test]
    fn custom_two_dimensional_matches_gaussian() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.9, 0.9, 1.0]);
        let g = LogConcaveMeasure::gaussian(vec![1.0, 0.0], cov).unwrap();
        let g2 = g.clone();
        let c = LogConcaveMeasure::custom(2, Arc::new(move |x: &[f64]| g2.potential(x) + 3.0), Support::AllSpace, None)
            .unwrap();
        assert!((c.log_density(&[0.3, 0.2]).unwrap() - g.log_density(&[0.3, 0.2]).unwrap()).abs() < 1e-7);
        let mom = c.mean_and_covariance(MomentBudget::Quadrature).unwrap();
        assert!((mom.mean[0] - 1.0).abs() < 1e-6);
        assert!((mom.covariance[(0, 1)] - 0.9).abs() < 1e-6);
    }

    #[test]
    fn non_normalizable_custom_rejected() {
        let c = LogConcaveMeasure::custom(1, Arc::new(|_: &[f64]| 0.0), Support::AllSpace, None).unwrap();
        assert!(matches!(c.log_density(&[0.0]), Err(Error::Configuration(_))));
    }

    #[test]
    fn whitening_examples() {
        let cov = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 2.0]);
        let g = LogConcaveMeasure::gaussian(vec![1.0, -2.0], cov).unwrap();
        let (_, w) = isotropic_normalize(&g).unwrap();
        let (m, c) = w.analytic_moments().unwrap();
        assert!(m.iter().all(|v| v.abs() < 1e-12));
        assert!((c - DMatrix::identity(2, 2)).amax() < 1e-12);
        let (t2, _) = isotropic_normalize(&w).unwrap();
        assert!(t2.distance_to_identity() < 1e-6);

        let b = LogConcaveMeasure::uniform_cube(2, 1.0).unwrap();
        let (_, wb) = isotropic_normalize(&b).unwrap();
        match wb.support() {
            Support::Box { half_widths, .. } => {
                for h in half_widths {
                    assert_relative_eq!(2.0 * h, sqrt12(), epsilon = 1e-12);
                }
            }
            s => panic!("expected a box, got {s:?}"),
        }
        let (t, _) = isotropic_normalize(&LogConcaveMeasure::standard_gaussian(3)).unwrap();
        assert!(t.distance_to_identity() < 1e-12);
    }

    #[test]
    fn singular_covariance_is_degenerate() {
        let mom = Moments {
            mean: vec![0.0, 0.0],
            covariance: DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]),
            mean_stderr: None,
            covariance_stderr: None,
            exact: true,
        };
        assert!(matches!(whitening_map(&mom), Err(Error::Degenerate(_))));
    }

    #[test]
    fn affine_map_inverse_roundtrip() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, -1.0, 1.0, 0.3, 0.2, 0.0, 3.0]);
        let t = AffineMap::new(a, DVector::from_vec(vec![1.0, 2.0, 3.0])).unwrap();
        let id = t.compose(&t.inverse());
        assert!(id.distance_to_identity() < 1e-12);
        assert!(AffineMap::new(DMatrix::zeros(2, 2), DVector::zeros(2)).is_err());
    }

    #[test]
    fn transformed_custom_tracks_base() {
        let base = LogConcaveMeasure::custom(1, Arc::new(|x: &[f64]| x[0].powi(4) / 4.0), Support::AllSpace, None).unwrap();
        let t = AffineMap::new(DMatrix::from_element(1, 1, 2.0), DVector::from_element(1, 1.0)).unwrap();
        let pushed = base.push_affine(&t).unwrap();
        let lhs = pushed.log_density(&[1.0 + 2.0 * 0.7]).unwrap();
        let rhs = base.log_density(&[0.7]).unwrap() - 2f64.ln();
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn isotropic_constant_examples() {
        let b = MomentBudget::Quadrature;
        assert_relative_eq!(isotropic_constant(&LogConcaveMeasure::standard_gaussian(2), b).unwrap(), 1.0);
        let cube = LogConcaveMeasure::uniform_cube(2, 1.0).unwrap();
        assert_relative_eq!(isotropic_constant(&cube, b).unwrap(), 1.0 / sqrt12(), epsilon = 1e-12);
        let cube = LogConcaveMeasure::uniform_cube(3, sqrt12()).unwrap();
        assert_relative_eq!(isotropic_constant(&cube, b).unwrap(), 1.0, epsilon = 1e-12);
        let aniso = LogConcaveMeasure::uniform_box(vec![0.0; 2], vec![1.0, 2.0]).unwrap();
        assert!(matches!(isotropic_constant(&aniso, b), Err(Error::NotIsotropic(_))));
    }

    #[test]
    fn max_density_examples() {
        let (v, x) = max_density(&LogConcaveMeasure::standard_gaussian(1)).unwrap();
        assert_relative_eq!(v, 1.0 / (2.0 * PI).sqrt(), epsilon = 1e-14);
        assert_eq!(x, vec![0.0]);
        let (v, _) = max_density(&LogConcaveMeasure::uniform_cube(2, sqrt12()).unwrap()).unwrap();
        assert_relative_eq!(v, 1.0 / 12.0, epsilon = 1e-14);
        let g4 = LogConcaveMeasure::gaussian(vec![0.0], DMatrix::from_element(1, 1, 4.0)).unwrap();
        assert_relative_eq!(max_density(&g4).unwrap().0, 0.5 / (2.0 * PI).sqrt(), epsilon = 1e-14);
        // numeric path
        let g2 = g4.clone();
        let c = LogConcaveMeasure::custom(1, Arc::new(move |x: &[f64]| g2.potential(&[x[0] - 0.3])), Support::AllSpace, None)
            .unwrap();
        let (v, x) = max_density(&c).unwrap();
        assert!(((v - 0.5 / (2.0 * PI).sqrt()) / v).abs() < 1e-4);
        assert!((x[0] - 0.3).abs() < 1e-4);
    }

    #[test]
    fn level_set_examples() {
        let cube = LogConcaveMeasure::uniform_cube(2, sqrt12()).unwrap();
        let k = level_set_volume(&cube, 0.5).unwrap();
        assert!((k.volume - 12.0).abs() < 12e-3);
        assert!((k.radius - 6f64.sqrt()).abs() < 1e-3);
        let g = LogConcaveMeasure::standard_gaussian(1);
        let k = level_set_volume(&g, 1.0).unwrap();
        assert!((k.volume - 2.0 * 2f64.sqrt()).abs() < 1e-9);
        assert!((k.radius - 2f64.sqrt()).abs() < 1e-9);
        let bound = 2.0 * (c_n_tau(1, 1.0).unwrap() * std::f64::consts::E).sqrt();
        assert!((bound - 3.857).abs() < 1e-3);
        assert!(k.radius <= bound);
        let g2 = LogConcaveMeasure::standard_gaussian(2);
        let k = level_set_volume(&g2, 1.0).unwrap();
        assert!((k.volume - 2.0 * PI).abs() < 1e-6);
        let g3 = LogConcaveMeasure::standard_gaussian(3);
        let k = level_set_volume(&g3, 2.0).unwrap();
        let exact = 4.0 / 3.0 * PI * 4f64.powf(1.5);
        assert!(((k.volume - exact) / exact).abs() < 1e-3);
    }

    #[test]
    fn skorohod_examples() {
        let target = (2.0 / PI).sqrt();
        assert!((skorohod_norm(&LogConcaveMeasure::standard_gaussian(1), &[1.0]).unwrap() - target).abs() < 1e-12);
        let s = skorohod_norm(&LogConcaveMeasure::standard_gaussian(2), &[0.6, 0.8]).unwrap();
        assert!((s - target).abs() < 1e-6, "{s}");
        let a = 1.7;
        let cube = LogConcaveMeasure::uniform_cube(2, a).unwrap();
        let s = skorohod_norm(&cube, &[1.0, 0.0]).unwrap();
        assert!((s - 2.0 / a).abs() < 1e-9, "{s}");
        assert!(skorohod_norm(&cube, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn skorohod_diagonal_square() {
        // for the unit square along (1,1)/√2 the max section is 1 on a
        // projected window of width √2
        let cube = LogConcaveMeasure::uniform_cube(2, 1.0).unwrap();
        let e = [0.5f64.sqrt(), 0.5f64.sqrt()];
        let s = skorohod_norm(&cube, &e).unwrap();
        assert!((s - 2.0 * 2f64.sqrt()).abs() < 1e-6, "{s}");
    }

    #[test]
    fn skorohod_oblique_cube() {
        // shadow of [-1,1]³ on e⊥ has area 4·Σ|eᵢ| and the density is 1/8
        let cube = LogConcaveMeasure::uniform_cube(3, 2.0).unwrap();
        for e in [[0.6, 0.0, 0.8], [0.48, 0.6, 0.64]] {
            let s = skorohod_norm(&cube, &e).unwrap();
            let want: f64 = e.iter().map(|v: &f64| v.abs()).sum();
            assert!((s - want).abs() < 1e-6, "{e:?}: {s} vs {want}");
        }
    }

    #[test]
    fn envelope_examples() {
        let g = LogConcaveMeasure::standard_gaussian(1);
        let c = envelope_fit(&g, 1.0).unwrap();
        assert!(((c - 0.5f64.exp() / (2.0 * PI).sqrt()) / c).abs() < 1e-3);
        let cube = LogConcaveMeasure::uniform_cube(1, sqrt12()).unwrap();
        let c = envelope_fit(&cube, 1.0).unwrap();
        assert!(((c - 3f64.sqrt().exp() / sqrt12()) / c).abs() < 1e-3);
        assert_eq!(envelope_fit(&g, 0.0).unwrap(), max_density(&g).unwrap().0);
        let lap = LogConcaveMeasure::product_exponential(vec![0.0], vec![1.0]).unwrap();
        assert_eq!(envelope_fit(&lap, 2.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn measure_spec_json() {
        let spec: MeasureSpec = serde_json::from_str(r#"{"family":"gaussian","dim":2}"#).unwrap();
        let m = spec.build().unwrap();
        assert_eq!(m.dim(), 2);
        let spec: MeasureSpec = serde_json::from_str(r#"{"family":"uniform_box","dim":1,"side":2.0}"#).unwrap();
        assert_eq!(spec.build().unwrap().log_density(&[0.9]).unwrap(), -(2f64.ln()));
        assert!(serde_json::from_str::<MeasureSpec>(r#"{"family":"nosuch","dim":1}"#).is_err());
    }
}
