//! Input curves built from constant, exponential and power terms, with closed-form integrals.

use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::special::gamma_fn;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Term {
    /// `c`.
    Const(f64),
    /// `c e^{r t}`.
    Exp { scale: f64, rate: f64 },
    /// `c t^p`, `p > −1`.
    Power { scale: f64, power: f64 },
}

impl Term {
    fn value(&self, t: f64) -> f64 {
        match *self {
            Term::Const(c) => c,
            Term::Exp { scale, rate } => scale * (rate * t).exp(),
            Term::Power { scale, power } => {
                if power == 0.0 {
                    scale
                } else {
                    scale * t.powf(power)
                }
            }
        }
    }

    fn integral(&self, t: f64) -> f64 {
        match *self {
            Term::Const(c) => c * t,
            Term::Exp { scale, rate } => {
                if rate == 0.0 {
                    scale * t
                } else {
                    scale * (rate * t).exp_m1() / rate
                }
            }
            Term::Power { scale, power } => scale * t.powf(power + 1.0) / (power + 1.0),
        }
    }
}

/// A finite sum of [`Term`]s on `[0, ∞)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Curve {
    terms: Vec<Term>,
}

impl Curve {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: vec![Term::Const(c)] }
    }

    pub fn exponential(scale: f64, rate: f64) -> Self {
        Self { terms: vec![Term::Exp { scale, rate }] }
    }

    pub fn power(scale: f64, power: f64) -> Result<Self> {
        if !(power > -1.0) {
            return Err(invalid(format!("power term needs p > −1, got {power}")));
        }
        Ok(Self { terms: vec![Term::Power { scale, power }] })
    }

    pub fn plus(mut self, other: Curve) -> Self {
        self.terms.extend(other.terms);
        self
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| match *t {
                    Term::Const(c) => Term::Const(c * k),
                    Term::Exp { scale, rate } => Term::Exp { scale: scale * k, rate },
                    Term::Power { scale, power } => Term::Power { scale: scale * k, power },
                })
                .collect(),
        }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| match *t {
            Term::Const(c) => c == 0.0,
            Term::Exp { scale, .. } | Term::Power { scale, .. } => scale == 0.0,
        })
    }

    pub fn value(&self, t: f64) -> f64 {
        self.terms.iter().map(|x| x.value(t)).sum()
    }

    /// `∫_0^t`.
    pub fn integral(&self, t: f64) -> f64 {
        self.terms.iter().map(|x| x.integral(t)).sum()
    }

    /// `∫_0^t (t−s)^{α−1}/Γ(α) · curve(s) ds` for power and constant terms,
    /// used for fractional-kernel convolutions with closed forms.
    pub fn fractional_integral(&self, alpha: f64, t: f64) -> Option<f64> {
        let mut acc = 0.0;
        for term in &self.terms {
            match *term {
                Term::Const(c) => acc += c * t.powf(alpha) / gamma_fn(alpha + 1.0),
                Term::Power { scale, power } => {
                    acc += scale * gamma_fn(power + 1.0) / gamma_fn(power + 1.0 + alpha) * t.powf(power + alpha)
                }
                Term::Exp { .. } => return None,
            }
        }
        Some(acc)
    }

    /// Parses terms joined by `+`: `const:c`, `exp:c:r`, `pow:c:p`, or a bare number.
    pub fn parse(s: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for part in s.split('+').map(str::trim).filter(|p| !p.is_empty()) {
            let fields: Vec<&str> = part.split(':').map(str::trim).collect();
            let num = |i: usize| -> Result<f64> {
                fields
                    .get(i)
                    .ok_or_else(|| Error::Parse(format!("curve term `{part}` is missing a field")))?
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("curve term `{part}`: {e}")))
            };
            let term = match fields[0] {
                "const" => Term::Const(num(1)?),
                "exp" => Term::Exp { scale: num(1)?, rate: num(2)? },
                "pow" => {
                    let power = num(2)?;
                    if !(power > -1.0) {
                        return Err(invalid(format!("power term needs p > −1, got {power}")));
                    }
                    Term::Power { scale: num(1)?, power }
                }
                _ => Term::Const(num(0)?),
            };
            terms.push(term);
        }
        Ok(Self { terms })
    }
}

impl fmt::Display for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "const:0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            match t {
                Term::Const(c) => write!(f, "const:{c}")?,
                Term::Exp { scale, rate } => write!(f, "exp:{scale}:{rate}")?,
                Term::Power { scale, power } => write!(f, "pow:{scale}:{power}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrals_and_parse() {
        let c = Curve::parse("const:1 + exp:100:-1").unwrap();
        assert!((c.value(0.0) - 101.0).abs() < 1e-12);
        assert!((c.integral(1.0) - (1.0 + 100.0 * (1.0 - (-1.0f64).exp()))).abs() < 1e-12);
        assert_eq!(Curve::parse(&c.to_string()).unwrap(), c);
        assert_eq!(Curve::parse("2.5").unwrap(), Curve::constant(2.5));
        assert!(Curve::parse("pow:1:-2").is_err());
    }

    #[test]
    fn fractional_integral_of_constant() {
        let c = Curve::constant(1.0);
        let v = c.fractional_integral(0.5, 4.0).unwrap();
        assert!((v - 2.0 / gamma_fn(1.5)).abs() < 1e-12);
    }
}
