//! Thin wrappers over `statrs` special functions used throughout the crate.

use statrs::function::{erf, gamma};

pub fn gamma_fn(x: f64) -> f64 {
    gamma::gamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x)
}

/// Regularised lower incomplete gamma P(a, x).
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    gamma::gamma_lr(a, x)
}

pub fn erfc(x: f64) -> f64 {
    erf::erfc(x)
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile.
pub fn norm_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erf::erfc_inv(2.0 * p)
}

/// `exp(x) * Phi(-y)` evaluated without overflow for large `x` and `y`.
pub fn exp_times_norm_tail(x: f64, y: f64) -> f64 {
    if y < 5.0 {
        return (x + norm_cdf(-y).ln()).exp();
    }
    // Mills ratio: Phi(-y) = phi(y) R(y), R from a continued fraction.
    let mut r = 0.0;
    for k in (1..=60).rev() {
        r = k as f64 / (y + r);
    }
    let mills = 1.0 / (y + r);
    (x - 0.5 * y * y - 0.5 * (2.0 * std::f64::consts::PI).ln()).exp() * mills
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_quantile_inverts_cdf() {
        for &p in &[0.01, 0.25, 0.5, 0.75, 0.99] {
            assert!((norm_cdf(norm_quantile(p)) - p).abs() < 1e-12);
        }
    }

    #[test]
    fn scaled_tail_matches_direct_product() {
        for &(x, y) in &[(1.0f64, 0.5f64), (3.0, 4.9), (10.0, 5.1), (20.0, 6.0)] {
            let direct = x.exp() * norm_cdf(-y);
            let scaled = exp_times_norm_tail(x, y);
            assert!(((direct - scaled) / direct).abs() < 1e-10, "{x} {y}");
        }
    }
}
