//! Thin wrappers around `statrs` special functions plus the normal law.

use std::f64::consts::{PI, SQRT_2};

pub use statrs::function::beta::beta;
pub use statrs::function::gamma::{gamma, ln_gamma};

/// Upper incomplete gamma Γ(s, x) = ∫ₓ^∞ t^{s−1} e^{−t} dt (not regularized).
pub fn upper_gamma(s: f64, x: f64) -> f64 {
    statrs::function::gamma::gamma_ui(s, x)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / SQRT_2)
}

/// Inverse of the standard normal CDF.
pub fn normal_quantile(u: f64) -> f64 {
    -SQRT_2 * statrs::function::erf::erfc_inv(2.0 * u)
}

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_symmetry() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.3) + normal_cdf(-1.3) - 1.0).abs() < 1e-14);
        assert!((normal_quantile(normal_cdf(0.7)) - 0.7).abs() < 1e-10);
    }

    #[test]
    fn upper_gamma_integer_order() {
        // Γ(3, 1) = 2 e^{-1} (1 + 1 + 1/2)
        let exact = 5.0 * (-1.0f64).exp();
        assert!((upper_gamma(3.0, 1.0) - exact).abs() < 1e-12);
    }
}
