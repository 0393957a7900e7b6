//! Two-parameter Mittag-Leffler function `E_{α,β}(z) = Σ z^k / Γ(αk + β)` on the real line.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::quad;
use crate::special::{gamma_fn, ln_gamma};

/// `|z|^{1/α}` below which the power series is summed directly for negative arguments.
pub const SERIES_RADIUS: f64 = 4.0;

/// How a value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exponential,
    Series,
    Integral,
    Recurrence,
}

/// Evaluation record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MittagLefflerEval {
    pub alpha: f64,
    pub beta: f64,
    pub z: f64,
    pub value: f64,
    pub method: Method,
    pub series_radius: f64,
}

pub fn mittag_leffler(alpha: f64, beta: f64, z: f64) -> Result<f64> {
    evaluate(alpha, beta, z).map(|e| e.value)
}

pub fn evaluate(alpha: f64, beta: f64, z: f64) -> Result<MittagLefflerEval> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(domain(format!("Mittag-Leffler order α = {alpha} outside (0, 2]")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(domain(format!("Mittag-Leffler order β = {beta} must be positive")));
    }
    if !z.is_finite() {
        return Err(domain("Mittag-Leffler argument must be finite"));
    }
    let (value, method) = dispatch(alpha, beta, z)?;
    Ok(MittagLefflerEval { alpha, beta, z, value, method, series_radius: SERIES_RADIUS })
}

fn dispatch(alpha: f64, beta: f64, z: f64) -> Result<(f64, Method)> {
    if z == 0.0 {
        return Ok((1.0 / gamma_fn(beta), Method::Series));
    }
    if alpha == 1.0 && beta == 1.0 {
        return Ok((z.exp(), Method::Exponential));
    }
    if z > 0.0 || z.abs().powf(1.0 / alpha) <= SERIES_RADIUS {
        return series(alpha, beta, z).map(|v| (v, Method::Series));
    }
    let x = -z;
    if beta >= 1.0 + alpha {
        // E_{α,β}(z) = (E_{α,β-α}(z) − 1/Γ(β−α)) / z
        let (inner, _) = dispatch(alpha, beta - alpha, z)?;
        return Ok(((inner - 1.0 / gamma_fn(beta - alpha)) / z, Method::Recurrence));
    }
    if alpha == 1.0 {
        return unit_order_negative(beta, x).map(|v| (v, Method::Integral));
    }
    negative_integral(alpha, beta, x).map(|v| (v, Method::Integral))
}

fn series(alpha: f64, beta: f64, z: f64) -> Result<f64> {
    let lz = z.abs().ln();
    let neg = z < 0.0;
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut peak: f64 = 0.0;
    for k in 0..20_000usize {
        let arg = alpha * k as f64 + beta;
        let mag = (k as f64 * lz - ln_gamma(arg)).exp();
        let term = if neg && k % 2 == 1 { -mag } else { mag };
        // Neumaier compensated summation.
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        peak = peak.max(mag);
        if k as f64 * alpha > 2.0 * (z.abs().powf(1.0 / alpha) + 1.0) && mag <= 1e-17 * (sum + comp).abs().max(1e-300) {
            let value = sum + comp;
            if !value.is_finite() {
                return Err(Error::AccuracyLoss { context: format!("series overflow at z = {z}"), estimate: f64::INFINITY });
            }
            if peak * 1e-16 > 1e-8 * value.abs() {
                return Err(Error::AccuracyLoss {
                    context: format!("series cancellation for E_{{{alpha},{beta}}}({z})"),
                    estimate: peak * 1e-16 / value.abs(),
                });
            }
            return Ok(value);
        }
    }
    Err(Error::AccuracyLoss { context: format!("series did not converge at z = {z}"), estimate: f64::NAN })
}

/// Real-line representation for `z = −x < 0`, `α ∈ (0,2]∖{1}`, `β < 1 + α`:
/// a branch-cut integral plus the residues of the two principal poles when `α > 1`.
fn negative_integral(alpha: f64, beta: f64, x: f64) -> Result<f64> {
    let (sb, sab, ca) = ((PI * beta).sin(), (PI * (alpha - beta)).sin(), (PI * alpha).cos());
    let p = 1.0 / (1.0 + alpha - beta);
    let integrand = |v: f64| {
        if v == 0.0 {
            return if (alpha - beta + 1.0) * p == 1.0 { p * (-x * sab) / (x * x) } else { 0.0 };
        }
        let r = v.powf(p);
        let ra = r.powf(alpha);
        let num = ra * sb - x * sab;
        let den = ra * ra + 2.0 * x * ra * ca + x * x;
        // r^{α-β} dr = p dv
        p * (-r).exp() * num / den
    };
    let scale = 1.0 / (x * PI);
    let mut value = quad::integrate_to_infinity(integrand, 0.0, 1e-16 * scale, 1e-13)? / PI;
    if alpha > 1.0 {
        let sp = Complex64::from_polar(x.powf(1.0 / alpha), PI / alpha);
        let res = sp.exp() * sp.powf(1.0 - beta);
        value += 2.0 / alpha * res.re;
    }
    Ok(value)
}

/// `α = 1`: `E_{1,β}(−x) = Γ(β)^{-1} ∫_0^1 exp(−x(1 − u^{1/(β−1)})) du` for `β > 1`,
/// reached from `β ≤ 1` through `E_{1,β} = 1/Γ(β) + z E_{1,β+1}`.
fn unit_order_negative(beta: f64, x: f64) -> Result<f64> {
    if beta <= 1.0 {
        let up = unit_order_negative(beta + 1.0, x)?;
        let value = 1.0 / gamma_fn(beta) - x * up;
        if (1.0 / gamma_fn(beta)).abs() > 1e6 * value.abs() {
            return Err(Error::AccuracyLoss {
                context: format!("cancellation in E_{{1,{beta}}}(−{x})"),
                estimate: 1e-16 / gamma_fn(beta) / value.abs(),
            });
        }
        return Ok(value);
    }
    let q = 1.0 / (beta - 1.0);
    let f = |u: f64| (-x * (1.0 - u.powf(q))).exp();
    Ok(quad::integrate(f, 0.0, 1.0, 1e-300, 1e-13)? / gamma_fn(beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::erfc;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    /// Brute-force partial sum with compensated accumulation.
    fn brute_series(alpha: f64, beta: f64, z: f64, terms: usize) -> f64 {
        let mut s = 0.0f64;
        let mut c = 0.0f64;
        for k in 0..terms {
            let mag = (k as f64 * z.abs().ln() - ln_gamma(alpha * k as f64 + beta)).exp();
            let t = if z < 0.0 && k % 2 == 1 { -mag } else { mag };
            let y = t - c;
            let u = s + y;
            c = (u - s) - y;
            s = u;
        }
        s
    }

    #[test]
    fn exponential_case() {
        assert!((mittag_leffler(1.0, 1.0, -1.0).unwrap() - 0.36787944117144233).abs() < 1e-15);
        for z in [-20.0, -7.3, -0.2, 0.0, 3.3, 20.0] {
            assert!(rel(mittag_leffler(1.0, 1.0, z).unwrap(), f64::exp(z)) < 1e-12);
        }
    }

    #[test]
    fn value_at_zero() {
        for beta in [0.3, 1.0, 2.5] {
            assert!(rel(mittag_leffler(0.7, beta, 0.0).unwrap(), 1.0 / gamma_fn(beta)) < 1e-15);
        }
    }

    #[test]
    fn half_order_against_erfc() {
        for x in [0.1, 0.9, 1.5, 3.0, 6.0, 20.0, 50.0] {
            let expect = crate::special::exp_times_norm_tail(x * x, x * std::f64::consts::SQRT_2) * 2.0;
            assert!(rel(mittag_leffler(0.5, 1.0, -x).unwrap(), expect) < 1e-10, "x = {x}");
        }
        // E_{1/2,1/2}(z) = 1/√π + z E_{1/2,1}(z)
        // erfc(1) to full double precision.
        let expect = 1.0 / PI.sqrt() - 1f64.exp() * 0.157_299_207_050_285_13;
        assert!((erfc(1.0) - 0.157_299_207_050_285_13).abs() < 1e-10);
        let v = mittag_leffler(0.5, 0.5, -1.0).unwrap();
        assert!(rel(v, expect) < 1e-12);
        assert!(rel(v, brute_series(0.5, 0.5, -1.0, 200)) < 1e-12);
    }

    #[test]
    fn order_two_trigonometric() {
        for x in [0.5f64, 2.0, 4.5, 7.0] {
            let c = mittag_leffler(2.0, 1.0, -x * x).unwrap();
            let s = mittag_leffler(2.0, 2.0, -x * x).unwrap();
            assert!((c - x.cos()).abs() < 1e-10, "cos {x}: {c}");
            assert!((s - x.sin() / x).abs() < 1e-10, "sin {x}: {s}");
        }
    }

    #[test]
    fn integral_branch_matches_series_at_switch() {
        for &(a, b) in &[(0.3, 0.3), (0.5, 1.0), (0.75, 0.75), (0.9, 1.2), (1.5, 1.5), (0.6, 2.1)] {
            let x = SERIES_RADIUS.powf(a) * 0.999;
            let s = series(a, b, -x).unwrap();
            let i = if b >= 1.0 + a {
                let (v, _) = dispatch(a, b, -x * 1.002).unwrap();
                let s2 = series(a, b, -x * 1.002).unwrap();
                assert!(rel(v, s2) < 1e-9);
                continue;
            } else {
                negative_integral(a, b, x).unwrap()
            };
            assert!(rel(i, s) < 1e-10, "α={a} β={b}: {i} vs {s}");
        }
    }

    #[test]
    fn derivative_identity() {
        // E_{α,α}(z) = α d/dz E_{α,1}(z)
        for &(a, z) in &[(0.5f64, -3.0f64), (0.75, -10.0), (0.3, -40.0), (0.9, -2.0)] {
            let h = 1e-4 * (1.0f64 + z.abs());
            let d = (mittag_leffler(a, 1.0, z + h).unwrap() - mittag_leffler(a, 1.0, z - h).unwrap()) / (2.0 * h);
            let v = mittag_leffler(a, a, z).unwrap();
            assert!(rel(a * d, v) < 1e-6, "α={a} z={z}");
        }
    }

    #[test]
    fn unit_order_general_beta() {
        // E_{1,2}(−x) = (1 − e^{−x})/x
        for x in [5.0f64, 30.0] {
            assert!(rel(mittag_leffler(1.0, 2.0, -x).unwrap(), -(-x).exp_m1() / x) < 1e-12);
        }
        let v = mittag_leffler(1.0, 1.5, -10.0).unwrap();
        let direct =
            quad::integrate(|t: f64| (-10.0 * t).exp() * (1.0 - t).powf(-0.5), 0.0, 1.0, 1e-15, 1e-12).unwrap() / gamma_fn(0.5);
        assert!(rel(v, direct) < 1e-8);
    }

    #[test]
    fn rejects_bad_orders() {
        assert!(mittag_leffler(0.0, 1.0, -1.0).is_err());
        assert!(mittag_leffler(2.5, 1.0, -1.0).is_err());
        assert!(mittag_leffler(0.5, 0.0, -1.0).is_err());
    }
}
