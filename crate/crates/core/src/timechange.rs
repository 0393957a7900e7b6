//! Time-change functions `f` with `f(0) = 0`, non-decreasing and with
//! at-most-linearly growing derivative.

use std::fmt;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum TimeChangeFn {
    Identity,
    /// `a₁ x`.
    Linear(f64),
    /// `a₁ x + a₂ x²`.
    LinearPlusQuadratic(f64, f64),
    /// `x^p`, `p ∈ [1, 2]`.
    Power(f64),
    /// Piecewise linear through `(x_i, y_i)`, extended with the last slope.
    Tabulated {
        xs: Vec<f64>,
        ys: Vec<f64>,
    },
}

impl TimeChangeFn {
    pub fn linear(a1: f64) -> Result<Self> {
        if !(a1 > 0.0 && a1.is_finite()) {
            return Err(invalid(format!("linear time change needs a₁ > 0, got {a1}")));
        }
        Ok(Self::Linear(a1))
    }

    pub fn linear_plus_quadratic(a1: f64, a2: f64) -> Result<Self> {
        if !(a1 >= 0.0 && a2 >= 0.0 && a1 + a2 > 0.0 && a1.is_finite() && a2.is_finite()) {
            return Err(invalid(format!("need a₁, a₂ ≥ 0 not both zero, got ({a1}, {a2})")));
        }
        Ok(Self::LinearPlusQuadratic(a1, a2))
    }

    /// `x + x²/2`.
    pub fn figure_quadratic() -> Self {
        Self::LinearPlusQuadratic(1.0, 0.5)
    }

    pub fn power(p: f64) -> Result<Self> {
        if !(1.0..=2.0).contains(&p) {
            return Err(invalid(format!("power time change needs p ∈ [1, 2], got {p}")));
        }
        Ok(Self::Power(p))
    }

    pub fn tabulated(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() || xs[0] != 0.0 || ys[0] != 0.0 {
            return Err(invalid("tabulated time change needs ≥ 2 rows starting at (0, 0)"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) || ys.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("tabulated time change must be increasing in x and non-decreasing in y"));
        }
        Ok(Self::Tabulated { xs, ys })
    }

    pub fn is_affine(&self) -> bool {
        matches!(self, Self::Identity | Self::Linear(_))
            || matches!(self, Self::LinearPlusQuadratic(_, a2) if *a2 == 0.0)
            || matches!(self, Self::Power(p) if *p == 1.0)
    }

    /// Slope of an affine `f`.
    pub fn affine_slope(&self) -> Option<f64> {
        match self {
            Self::Identity => Some(1.0),
            Self::Linear(a) => Some(*a),
            Self::LinearPlusQuadratic(a, b) if *b == 0.0 => Some(*a),
            Self::Power(p) if *p == 1.0 => Some(1.0),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match self {
            Self::Identity => x,
            Self::Linear(a) => a * x,
            Self::LinearPlusQuadratic(a, b) => a * x + b * x * x,
            Self::Power(p) => x.powf(*p),
            Self::Tabulated { xs, ys } => {
                let i = segment(xs, x);
                ys[i] + (ys[i + 1] - ys[i]) * (x - xs[i]) / (xs[i + 1] - xs[i])
            }
        }
    }

    /// `f′(x)`, right derivative at kinks.
    pub fn derivative(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match self {
            Self::Identity => 1.0,
            Self::Linear(a) => *a,
            Self::LinearPlusQuadratic(a, b) => a + 2.0 * b * x,
            Self::Power(p) => {
                if *p == 1.0 {
                    1.0
                } else {
                    p * x.powf(p - 1.0)
                }
            }
            Self::Tabulated { xs, ys } => {
                let i = match xs.binary_search_by(|v| v.total_cmp(&x)) {
                    Ok(i) => i.min(xs.len() - 2),
                    Err(_) => segment(xs, x),
                };
                (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
            }
        }
    }

    /// Constant `c` with `f′(x) ≤ c(1 + x)`.
    pub fn growth_constant(&self) -> f64 {
        match self {
            Self::Identity => 1.0,
            Self::Linear(a) => *a,
            Self::LinearPlusQuadratic(a, b) => a.max(2.0 * b),
            Self::Power(p) => *p,
            Self::Tabulated { xs, ys } => {
                (0..xs.len() - 1).map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]) / (1.0 + xs[i])).fold(0.0, f64::max)
            }
        }
    }

    /// `f^{-1}(y) = inf{x ≥ 0 : f(x) ≥ y}`; infinite when `y` is out of range.
    pub fn inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        match self {
            Self::Identity => y,
            Self::Linear(a) => y / a,
            Self::LinearPlusQuadratic(a, b) => {
                if *b == 0.0 {
                    y / a
                } else {
                    2.0 * y / (a + (a * a + 4.0 * b * y).sqrt())
                }
            }
            Self::Power(p) => y.powf(1.0 / p),
            Self::Tabulated { xs, ys } => {
                let last = ys.len() - 1;
                if y > ys[last] {
                    let slope = (ys[last] - ys[last - 1]) / (xs[last] - xs[last - 1]);
                    return if slope > 0.0 { xs[last] + (y - ys[last]) / slope } else { f64::INFINITY };
                }
                // First index with ys[i] ≥ y.
                let i = ys.partition_point(|v| *v < y);
                let (x0, x1, y0, y1) = (xs[i - 1], xs[i], ys[i - 1], ys[i]);
                x0 + (x1 - x0) * (y - y0) / (y1 - y0)
            }
        }
    }

    /// `c² f(x / c)`.
    pub fn rescaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(invalid("rescaling constant must be positive"));
        }
        Ok(match self {
            Self::Identity => Self::Linear(c),
            Self::Linear(a) => Self::Linear(a * c),
            Self::LinearPlusQuadratic(a, b) => Self::LinearPlusQuadratic(a * c, *b),
            Self::Power(p) => {
                return Err(Error::Config(format!(
                    "power time change x^{p} has no closed rescaled family; use linear-plus-quadratic"
                )))
            }
            Self::Tabulated { xs, ys } => {
                Self::Tabulated { xs: xs.iter().map(|x| x * c).collect(), ys: ys.iter().map(|y| y * c * c).collect() }
            }
        })
    }

    /// Parses `identity`, `linear:a1=2`, `quadratic:a1=1,a2=0.5` or `power:p=1.5`.
    pub fn parse(s: &str) -> Result<Self> {
        let (name, params) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        let mut a1 = None;
        let mut a2 = None;
        let mut p = None;
        for kv in params.split(',').filter(|kv| !kv.trim().is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Parse(format!("bad parameter `{kv}`")))?;
            let v: f64 = v.trim().parse().map_err(|e| Error::Parse(format!("`{kv}`: {e}")))?;
            match k.trim() {
                "a1" => a1 = Some(v),
                "a2" => a2 = Some(v),
                "p" => p = Some(v),
                other => return Err(Error::Parse(format!("unknown time-change parameter `{other}`"))),
            }
        }
        match name {
            "identity" | "x" => Ok(Self::Identity),
            "linear" => Self::linear(a1.unwrap_or(1.0)),
            "quadratic" | "linear_plus_quadratic" => Self::linear_plus_quadratic(a1.unwrap_or(1.0), a2.unwrap_or(0.5)),
            "power" => Self::power(p.ok_or_else(|| Error::Parse("power needs p".into()))?),
            other => Err(Error::Parse(format!("unknown time change `{other}`"))),
        }
    }
}

fn segment(xs: &[f64], x: f64) -> usize {
    xs.partition_point(|v| *v <= x).saturating_sub(1).min(xs.len() - 2)
}

impl fmt::Display for TimeChangeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => write!(f, "identity"),
            Self::Linear(a) => write!(f, "linear:a1={a}"),
            Self::LinearPlusQuadratic(a, b) => write!(f, "quadratic:a1={a},a2={b}"),
            Self::Power(p) => write!(f, "power:p={p}"),
            Self::Tabulated { xs, .. } => write!(f, "tabulated:rows={}", xs.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn families() -> Vec<TimeChangeFn> {
        vec![
            TimeChangeFn::Identity,
            TimeChangeFn::linear(2.5).unwrap(),
            TimeChangeFn::figure_quadratic(),
            TimeChangeFn::power(1.5).unwrap(),
            TimeChangeFn::tabulated(vec![0.0, 1.0, 2.0, 4.0], vec![0.0, 1.0, 1.0, 7.0]).unwrap(),
        ]
    }

    #[test]
    fn inverse_round_trip() {
        for f in families() {
            assert_eq!(f.eval(0.0), 0.0);
            for y in [1e-6, 0.3, 1.0, 5.0, 40.0] {
                let x = f.inverse(y);
                assert!((f.eval(x) - y).abs() <= 1e-10 * (1.0 + y), "{f}: y={y}");
            }
        }
    }

    #[test]
    fn inverse_takes_infimum_on_flat_pieces() {
        let f = TimeChangeFn::tabulated(vec![0.0, 1.0, 2.0, 4.0], vec![0.0, 1.0, 1.0, 7.0]).unwrap();
        assert_eq!(f.inverse(1.0), 1.0);
    }

    #[test]
    fn growth_bound_holds() {
        for f in families() {
            let c = f.growth_constant();
            for x in [0.0, 0.5, 3.0, 100.0] {
                assert!(f.derivative(x) <= c * (1.0 + x) + 1e-12, "{f} at {x}");
            }
        }
    }

    #[test]
    fn rescaling_matches_definition() {
        let f = TimeChangeFn::figure_quadratic();
        let g = f.rescaled(3.0).unwrap();
        for x in [0.1, 2.0, 9.0] {
            assert!((g.eval(x) - 9.0 * f.eval(x / 3.0)).abs() < 1e-12);
        }
        assert!(TimeChangeFn::power(1.5).unwrap().rescaled(2.0).is_err());
    }

    #[test]
    fn parse_round_trip() {
        for f in families().into_iter().take(4) {
            assert_eq!(TimeChangeFn::parse(&f.to_string()).unwrap(), f);
        }
        assert!(TimeChangeFn::parse("cubic").is_err());
    }
}
