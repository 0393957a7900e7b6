//! Memory kernels: closed-form evaluation, integrals, Laplace transforms,
//! exact cell-mass discretisation and Dirac-scaling diagnostics.
//!
//! Fractional and gamma kernels use the Γ-normalised convention
//! `K(t) = c e^{bt} t^{α-1} / Γ(α)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use crate::error::{domain, invalid, Error, Result};
use crate::quad;
use crate::special::{gamma_fn, gamma_p};

/// A kernel given by samples `(t_i, K(t_i))` and cumulative integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedKernel {
    times: Vec<f64>,
    values: Vec<f64>,
    cumulative: Vec<f64>,
}

impl TabulatedKernel {
    /// Builds a table; cumulative integrals come from the trapezoid rule.
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::check_grid(&times, values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("tabulated kernel values must be finite"));
        }
        let mut cumulative = vec![0.0; times.len()];
        for i in 1..times.len() {
            let h = times[i] - times[i - 1];
            cumulative[i] = cumulative[i - 1] + 0.5 * h * (values[i] + values[i - 1]);
        }
        Ok(Self { times, values, cumulative })
    }

    /// Builds a table with externally supplied cumulative integrals, which lets
    /// integrable singularities at the first node be represented exactly.
    pub fn with_cumulative(times: Vec<f64>, values: Vec<f64>, cumulative: Vec<f64>) -> Result<Self> {
        Self::check_grid(&times, values.len())?;
        if cumulative.len() != times.len() || cumulative[0] != 0.0 {
            return Err(invalid("cumulative table must match times and start at 0"));
        }
        if cumulative.windows(2).any(|w| !(w[1].is_finite())) {
            return Err(invalid("cumulative integrals must be finite"));
        }
        Ok(Self { times, values, cumulative })
    }

    fn check_grid(times: &[f64], nvalues: usize) -> Result<()> {
        if times.len() < 2 || times.len() != nvalues {
            return Err(invalid("tabulated kernel needs at least two (t, K) rows"));
        }
        if times[0] != 0.0 {
            return Err(invalid("tabulated kernel must start at t = 0"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("tabulated kernel times must be strictly increasing"));
        }
        Ok(())
    }

    /// Reads a two-column comma-separated `t,K(t)` file. A header line is skipped.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (Some(a), Some(b)) = (cols.next(), cols.next()) else {
                return Err(Error::Parse(format!("line {}: expected two columns", lineno + 1)));
            };
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(t), Ok(k)) => {
                    times.push(t);
                    values.push(k);
                }
                _ if times.is_empty() => continue,
                _ => return Err(Error::Parse(format!("line {}: not numeric", lineno + 1))),
            }
        }
        Self::new(times, values)
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("non-empty")
    }

    fn locate(&self, t: f64) -> usize {
        match self.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => i.min(self.times.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.times.len() - 2),
        }
    }

    fn eval(&self, t: f64) -> f64 {
        let i = self.locate(t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        if !v0.is_finite() || !v1.is_finite() {
            return (self.cumulative[i + 1] - self.cumulative[i]) / (t1 - t0);
        }
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    fn integral(&self, t: f64) -> f64 {
        let i = self.locate(t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        self.cumulative[i] + w * (self.cumulative[i + 1] - self.cumulative[i])
    }

    fn laplace(&self, lambda: f64) -> f64 {
        // K constant on each cell with the cell's exact mass.
        let mut acc = 0.0;
        for i in 0..self.times.len() - 1 {
            let (t0, t1) = (self.times[i], self.times[i + 1]);
            let mass = self.cumulative[i + 1] - self.cumulative[i];
            let h = t1 - t0;
            let avg = if lambda == 0.0 { 1.0 } else { (-lambda * t0).exp() * (-(-lambda * h).exp_m1()) / (lambda * h) };
            acc += mass * avg;
        }
        acc
    }
}

/// A convolution kernel family.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    /// `c e^{bt}`.
    Exponential {
        c: f64,
        b: f64,
    },
    /// `c t^{α-1} / Γ(α)`.
    Fractional {
        c: f64,
        alpha: f64,
    },
    /// `c e^{bt} t^{α-1} / Γ(α)`.
    Gamma {
        c: f64,
        b: f64,
        alpha: f64,
    },
    /// `K(t + ε)`.
    Shifted {
        base: Box<KernelSpec>,
        eps: f64,
    },
    /// `n K(n t)`.
    DiracScaled {
        base: Box<KernelSpec>,
        n: f64,
    },
    Tabulated(TabulatedKernel),
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite")))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("fractional order must lie in (0, 1], got {alpha}")))
    }
}

impl KernelSpec {
    pub fn exponential(c: f64, b: f64) -> Result<Self> {
        check_finite("c", c)?;
        check_finite("b", b)?;
        Ok(Self::Exponential { c, b })
    }

    /// The constant kernel `K ≡ c`.
    pub fn constant(c: f64) -> Result<Self> {
        Self::exponential(c, 0.0)
    }

    pub fn fractional(c: f64, alpha: f64) -> Result<Self> {
        check_finite("c", c)?;
        check_alpha(alpha)?;
        Ok(Self::Fractional { c, alpha })
    }

    /// `K(t) = t^{-1/2}`, i.e. the fractional family with `c = Γ(1/2)`.
    pub fn inverse_sqrt() -> Self {
        Self::Fractional { c: PI.sqrt(), alpha: 0.5 }
    }

    pub fn gamma(c: f64, b: f64, alpha: f64) -> Result<Self> {
        check_finite("c", c)?;
        check_finite("b", b)?;
        check_alpha(alpha)?;
        Ok(Self::Gamma { c, b, alpha })
    }

    pub fn shifted(base: KernelSpec, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(invalid(format!("shift must be positive, got {eps}")));
        }
        Ok(Self::Shifted { base: Box::new(base), eps })
    }

    pub fn dirac_scaled(base: KernelSpec, n: f64) -> Result<Self> {
        if !(n > 0.0 && n.is_finite()) {
            return Err(invalid(format!("scale must be positive, got {n}")));
        }
        Ok(Self::DiracScaled { base: Box::new(base), n })
    }

    pub fn tabulated(table: TabulatedKernel) -> Self {
        Self::Tabulated(table)
    }

    /// Returns `factor * K`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            Self::Exponential { c, b } => Self::Exponential { c: c * factor, b: *b },
            Self::Fractional { c, alpha } => Self::Fractional { c: c * factor, alpha: *alpha },
            Self::Gamma { c, b, alpha } => Self::Gamma { c: c * factor, b: *b, alpha: *alpha },
            Self::Shifted { base, eps } => Self::Shifted { base: Box::new(base.scaled(factor)), eps: *eps },
            Self::DiracScaled { base, n } => Self::DiracScaled { base: Box::new(base.scaled(factor)), n: *n },
            Self::Tabulated(t) => Self::Tabulated(TabulatedKernel {
                times: t.times.clone(),
                values: t.values.iter().map(|v| v * factor).collect(),
                cumulative: t.cumulative.iter().map(|v| v * factor).collect(),
            }),
        }
    }

    /// Folds `DiracScaled` wrappers of closed-form families into the family itself.
    pub fn simplified(&self) -> KernelSpec {
        match self {
            Self::DiracScaled { base, n } => match base.simplified() {
                Self::Exponential { c, b } => Self::Exponential { c: c * n, b: b * n },
                Self::Fractional { c, alpha } => Self::Fractional { c: c * n.powf(alpha), alpha },
                Self::Gamma { c, b, alpha } => Self::Gamma { c: c * n.powf(alpha), b: b * n, alpha },
                other => Self::DiracScaled { base: Box::new(other), n: *n },
            },
            other => other.clone(),
        }
    }

    /// Family-level complete-monotonicity flag. Tabulated kernels are never flagged.
    pub fn is_completely_monotone(&self) -> bool {
        match self {
            Self::Exponential { c, b } | Self::Gamma { c, b, .. } => *c >= 0.0 && *b <= 0.0,
            Self::Fractional { c, .. } => *c >= 0.0,
            Self::Shifted { base, .. } | Self::DiracScaled { base, .. } => base.is_completely_monotone(),
            Self::Tabulated(_) => false,
        }
    }

    /// Whether `K(0+)` is infinite.
    pub fn is_singular(&self) -> bool {
        match self {
            Self::Fractional { alpha, c } | Self::Gamma { alpha, c, .. } => *alpha < 1.0 && *c != 0.0,
            Self::DiracScaled { base, .. } => base.is_singular(),
            _ => false,
        }
    }

    /// Whether the kernel is square-integrable near zero.
    pub fn is_square_integrable(&self) -> bool {
        match self {
            Self::Fractional { alpha, c } | Self::Gamma { alpha, c, .. } => *c == 0.0 || *alpha > 0.5,
            Self::DiracScaled { base, .. } => base.is_square_integrable(),
            Self::Tabulated(t) => t.values.iter().all(|v| v.is_finite()),
            _ => true,
        }
    }

    /// `K(t)`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if t < 0.0 || (t == 0.0 && self.is_singular()) || t.is_nan() {
            return Err(domain(format!("kernel evaluated at t = {t}")));
        }
        Ok(match self {
            Self::Exponential { c, b } => c * (b * t).exp(),
            Self::Fractional { c, alpha } => {
                if *alpha == 1.0 {
                    *c
                } else {
                    c * t.powf(alpha - 1.0) / gamma_fn(*alpha)
                }
            }
            Self::Gamma { c, b, alpha } => {
                let p = if *alpha == 1.0 { 1.0 } else { t.powf(alpha - 1.0) };
                c * (b * t).exp() * p / gamma_fn(*alpha)
            }
            Self::Shifted { base, eps } => base.eval(t + eps)?,
            Self::DiracScaled { base, n } => n * base.eval(n * t)?,
            Self::Tabulated(tab) => {
                if t > tab.horizon() {
                    return Err(domain(format!("t = {t} beyond tabulated horizon {}", tab.horizon())));
                }
                tab.eval(t)
            }
        })
    }

    /// `K̄(t) = ∫_0^t K(s) ds`.
    pub fn integrated(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(domain(format!("integrated kernel at t = {t}")));
        }
        Ok(match self {
            Self::Exponential { c, b } => {
                if *b == 0.0 {
                    c * t
                } else {
                    c * (b * t).exp_m1() / b
                }
            }
            Self::Fractional { c, alpha } => c * t.powf(*alpha) / gamma_fn(alpha + 1.0),
            Self::Gamma { c, b, alpha } => c * gamma_integral(*b, *alpha, t),
            Self::Shifted { base, eps } => base.integrated(t + eps)? - base.integrated(*eps)?,
            Self::DiracScaled { base, n } => base.integrated(n * t)?,
            Self::Tabulated(tab) => {
                if t > tab.horizon() * (1.0 + 1e-12) {
                    return Err(domain(format!("t = {t} beyond tabulated horizon {}", tab.horizon())));
                }
                tab.integral(t)
            }
        })
    }

    /// Order `α` and `∫_0^t K^{∗i}(s) ds` for the singular closed-form families.
    pub(crate) fn convolution_power(&self) -> Option<(f64, Box<dyn Fn(u32, f64) -> f64>)> {
        if !self.is_singular() {
            return None;
        }
        match self.simplified() {
            Self::Fractional { c, alpha } => Some((
                alpha,
                Box::new(move |i, t| {
                    let a = i as f64 * alpha;
                    c.powi(i as i32) * t.powf(a) / gamma_fn(a + 1.0)
                }),
            )),
            Self::Gamma { c, b, alpha } => {
                Some((alpha, Box::new(move |i, t| c.powi(i as i32) * gamma_integral(b, i as f64 * alpha, t))))
            }
            _ => None,
        }
    }

    /// Exact integral of `K` over `[t0, t1]`, computed to avoid cancellation.
    pub fn cell_mass(&self, t0: f64, t1: f64) -> Result<f64> {
        match self {
            Self::Exponential { c, b } if *b != 0.0 => Ok(c * (b * t0).exp() * (b * (t1 - t0)).exp_m1() / b),
            Self::Fractional { c, alpha } if t0 > 0.0 => {
                let r = (alpha * (t1 / t0).ln()).exp_m1();
                Ok(c * t0.powf(*alpha) * r / gamma_fn(alpha + 1.0))
            }
            Self::Gamma { c, b, alpha } if *b < 0.0 && -b * t0 > *alpha + 1.0 => {
                // Both endpoints sit in the upper tail: difference of upper incomplete integrals.
                let rate = -b;
                let q0 = 1.0 - gamma_p(*alpha, rate * t0);
                let q1 = 1.0 - gamma_p(*alpha, rate * t1);
                if q0 > 1e-3 {
                    Ok(c * rate.powf(-alpha) * (q0 - q1))
                } else {
                    let g = |s: f64| c * (b * s).exp() * s.powf(alpha - 1.0) / gamma_fn(*alpha);
                    quad::integrate(g, t0, t1, 0.0, 1e-13)
                }
            }
            Self::Shifted { base, eps } => base.cell_mass(t0 + eps, t1 + eps),
            Self::DiracScaled { base, n } => base.cell_mass(n * t0, n * t1),
            _ => Ok(self.integrated(t1)? - self.integrated(t0)?),
        }
    }

    /// `K̂(λ) = ∫_0^∞ K(s) e^{-λs} ds`.
    pub fn laplace(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(domain(format!("Laplace transform at λ = {lambda}")));
        }
        let divergent = || domain(format!("Laplace transform diverges at λ = {lambda}"));
        match self {
            Self::Exponential { c, b } => {
                if *c == 0.0 {
                    Ok(0.0)
                } else if lambda > *b {
                    Ok(c / (lambda - b))
                } else {
                    Err(divergent())
                }
            }
            Self::Fractional { c, alpha } => {
                if *c == 0.0 {
                    Ok(0.0)
                } else if lambda > 0.0 {
                    Ok(c * lambda.powf(-alpha))
                } else {
                    Err(divergent())
                }
            }
            Self::Gamma { c, b, alpha } => {
                if *c == 0.0 {
                    Ok(0.0)
                } else if lambda > *b {
                    Ok(c * (lambda - b).powf(-alpha))
                } else {
                    Err(divergent())
                }
            }
            Self::Shifted { base, eps } => {
                let total = base.laplace(lambda)?;
                // ∫_0^ε K e^{-λu} du by parts, using the continuous K̄.
                let head = if lambda == 0.0 {
                    base.integrated(*eps)?
                } else {
                    let kbar = |u: f64| base.integrated(u).unwrap_or(f64::NAN) * (-lambda * u).exp();
                    base.integrated(*eps)? * (-lambda * eps).exp() + lambda * quad::integrate(kbar, 0.0, *eps, 1e-15, 1e-13)?
                };
                Ok((lambda * eps).exp() * (total - head))
            }
            Self::DiracScaled { base, n } => base.laplace(lambda / n),
            Self::Tabulated(tab) => Ok(tab.laplace(lambda)),
        }
    }

    /// `‖K‖_{L¹(ℝ₊)}` when finite.
    pub fn l1_norm(&self) -> Result<f64> {
        self.laplace(0.0)
    }

    /// Approximates `K(t) ≈ Σ w_r e^{-x_r t}` on `[t_lo, t_hi]` from the
    /// Bernstein representation of the family. Returns `(rate, weight)` pairs,
    /// or `None` when no such representation is available.
    pub fn exponential_sum(&self, t_lo: f64, t_hi: f64) -> Option<Vec<(f64, f64)>> {
        if !(t_lo > 0.0 && t_hi > t_lo) {
            return None;
        }
        match self {
            Self::Exponential { c, b } => Some(vec![(-b, *c)]),
            Self::Fractional { c, alpha } => {
                Some(fractional_factors(*alpha, t_lo, t_hi).into_iter().map(|(x, w)| (x, w * c)).collect())
            }
            Self::Gamma { c, b, alpha } => {
                Some(fractional_factors(*alpha, t_lo, t_hi).into_iter().map(|(x, w)| (x - b, w * c)).collect())
            }
            Self::Shifted { base, eps } => base
                .exponential_sum(t_lo + eps, t_hi + eps)
                .map(|f| f.into_iter().map(|(x, w)| (x, w * (-x * eps).exp())).collect()),
            Self::DiracScaled { base, n } => {
                base.exponential_sum(n * t_lo, n * t_hi).map(|f| f.into_iter().map(|(x, w)| (x * n, w * n)).collect())
            }
            Self::Tabulated(_) => None,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Self::Exponential { .. } => "exponential",
            Self::Fractional { .. } => "fractional",
            Self::Gamma { .. } => "gamma",
            Self::Shifted { .. } => "shifted",
            Self::DiracScaled { .. } => "dirac_scaled",
            Self::Tabulated(_) => "tabulated",
        }
    }

    /// Serialises as `key = value` lines; nested bases use a `base.` prefix.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        self.write_kv("", &mut out);
        out
    }

    fn write_kv(&self, prefix: &str, out: &mut String) {
        use std::fmt::Write;
        let _ = writeln!(out, "{prefix}family = {}", self.family_name());
        match self {
            Self::Exponential { c, b } => {
                let _ = writeln!(out, "{prefix}c = {c}\n{prefix}b = {b}");
            }
            Self::Fractional { c, alpha } => {
                let _ = writeln!(out, "{prefix}c = {c}\n{prefix}alpha = {alpha}");
            }
            Self::Gamma { c, b, alpha } => {
                let _ = writeln!(out, "{prefix}c = {c}\n{prefix}b = {b}\n{prefix}alpha = {alpha}");
            }
            Self::Shifted { base, eps } => {
                let _ = writeln!(out, "{prefix}eps = {eps}");
                base.write_kv(&format!("{prefix}base."), out);
            }
            Self::DiracScaled { base, n } => {
                let _ = writeln!(out, "{prefix}n = {n}");
                base.write_kv(&format!("{prefix}base."), out);
            }
            Self::Tabulated(t) => {
                let _ = writeln!(out, "{prefix}rows = {}", t.times.len());
            }
        }
    }

    /// Parses a `key = value` block as written by [`KernelSpec::to_key_values`].
    /// Tabulated kernels are referenced with `file = path.csv`.
    pub fn from_key_values(text: &str) -> Result<Self> {
        let map: BTreeMap<String, String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .filter_map(|l| l.split_once('=').map(|(k, v)| (k.trim().to_string(), v.trim().to_string())))
            .collect();
        Self::from_map(&map, "")
    }

    pub(crate) fn from_map(map: &BTreeMap<String, String>, prefix: &str) -> Result<Self> {
        let get = |k: &str| -> Result<f64> {
            let key = format!("{prefix}{k}");
            map.get(&key)
                .ok_or_else(|| Error::Parse(format!("missing kernel key `{key}`")))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("`{key}`: {e}")))
        };
        let get_or = |k: &str, d: f64| -> Result<f64> {
            if map.contains_key(&format!("{prefix}{k}")) {
                get(k)
            } else {
                Ok(d)
            }
        };
        let family = map.get(&format!("{prefix}family")).ok_or_else(|| Error::Parse(format!("missing `{prefix}family`")))?;
        match family.as_str() {
            "exponential" => Self::exponential(get_or("c", 1.0)?, get_or("b", 0.0)?),
            "constant" => Self::constant(get_or("c", 1.0)?),
            "fractional" => Self::fractional(get_or("c", 1.0)?, get("alpha")?),
            "gamma" => Self::gamma(get_or("c", 1.0)?, get("b")?, get("alpha")?),
            "shifted" => Self::shifted(Self::from_map(map, &format!("{prefix}base."))?, get("eps")?),
            "dirac_scaled" => Self::dirac_scaled(Self::from_map(map, &format!("{prefix}base."))?, get("n")?),
            "tabulated" => {
                let file =
                    map.get(&format!("{prefix}file")).ok_or_else(|| Error::Parse("tabulated kernel needs `file`".into()))?;
                Ok(Self::Tabulated(TabulatedKernel::from_csv(file)?))
            }
            other => Err(Error::Parse(format!("unknown kernel family `{other}`"))),
        }
    }

    /// Parses the compact form `family:k=v,k=v`, with nested bases chained by `/`,
    /// e.g. `dirac_scaled:n=10/exponential:c=1,b=-1`.
    pub fn parse_compact(s: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut prefix = String::new();
        for part in s.split('/') {
            let (family, params) = part.split_once(':').unwrap_or((part, ""));
            map.insert(format!("{prefix}family"), family.trim().to_string());
            for kv in params.split(',').filter(|p| !p.trim().is_empty()) {
                let (k, v) = kv.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got `{kv}`")))?;
                map.insert(format!("{prefix}{}", k.trim()), v.trim().to_string());
            }
            prefix.push_str("base.");
        }
        Self::from_map(&map, "")
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exponential { c, b } => write!(f, "exponential:c={c},b={b}"),
            Self::Fractional { c, alpha } => write!(f, "fractional:c={c},alpha={alpha}"),
            Self::Gamma { c, b, alpha } => write!(f, "gamma:c={c},b={b},alpha={alpha}"),
            Self::Shifted { base, eps } => write!(f, "shifted:eps={eps}/{base}"),
            Self::DiracScaled { base, n } => write!(f, "dirac_scaled:n={n}/{base}"),
            Self::Tabulated(t) => write!(f, "tabulated:rows={}", t.times.len()),
        }
    }
}

/// `∫_0^t e^{bs} s^{α-1} / Γ(α) ds`.
fn gamma_integral(b: f64, alpha: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    if b == 0.0 {
        return t.powf(alpha) / gamma_fn(alpha + 1.0);
    }
    if b < 0.0 {
        return (-b).powf(-alpha) * gamma_p(alpha, -b * t);
    }
    // b > 0: power series Σ b^k t^{α+k} / (k! (α+k)) / Γ(α).
    let mut term = t.powf(alpha);
    let mut sum = term / alpha;
    for k in 1..500 {
        term *= b * t / k as f64;
        let add = term / (alpha + k as f64);
        sum += add;
        if add < 1e-17 * sum {
            break;
        }
    }
    sum / gamma_fn(alpha)
}

/// Factors for `t^{α-1}/Γ(α) = sin(πα)/π ∫_0^∞ x^{-α} e^{-xt} dx` on `[t_lo, t_hi]`.
fn fractional_factors(alpha: f64, t_lo: f64, t_hi: f64) -> Vec<(f64, f64)> {
    if alpha >= 1.0 {
        return vec![(0.0, 1.0)];
    }
    let pref = (PI * alpha).sin() / PI;
    let x_lo = 1e-6 / t_hi;
    let x_hi = 36.0 / t_lo;
    let mut out = Vec::new();
    // Mass on [0, x_lo] lumped at its first-moment point.
    out.push((x_lo * (1.0 - alpha) / (2.0 - alpha), pref * x_lo.powf(1.0 - alpha) / (1.0 - alpha)));
    let (y0, y1) = (x_lo.ln(), x_hi.ln());
    let panels = ((y1 - y0) / 1.5).ceil().max(1.0) as usize;
    let width = (y1 - y0) / panels as f64;
    let (gx, gw) = quad::gauss_legendre(10);
    for p in 0..panels {
        let a = y0 + p as f64 * width;
        for (u, w) in gx.iter().zip(&gw) {
            let y = a + 0.5 * width * (u + 1.0);
            let x = y.exp();
            // x^{-α} dx = e^{(1-α) y} dy
            out.push((x, pref * 0.5 * width * w * ((1.0 - alpha) * y).exp()));
        }
    }
    out
}

/// Exact cell-mass discretisation of a kernel on a uniform grid.
#[derive(Debug, Clone)]
pub struct KernelGrid {
    pub spec: KernelSpec,
    pub step: f64,
    pub horizon: f64,
    /// `m_j = ∫_{jΔ}^{(j+1)Δ} K`.
    pub masses: Vec<f64>,
    /// `K̄(jΔ)` for `j = 0..=N`.
    pub cumulative: Vec<f64>,
    pub completely_monotone: bool,
}

impl KernelGrid {
    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.len()).map(|j| j as f64 * self.step).collect()
    }
}

/// Number of grid cells covering `[0, horizon]` with the given step.
pub fn cell_count(step: f64, horizon: f64) -> usize {
    ((horizon / step) - 1e-9).ceil().max(1.0) as usize
}

/// Discretises `spec` into exact cell masses on a uniform grid of `step` up to `horizon`.
pub fn discretize(spec: &KernelSpec, step: f64, horizon: f64) -> Result<KernelGrid> {
    if !(step > 0.0) || !(horizon >= step * (1.0 - 1e-12)) {
        return Err(invalid(format!("grid needs 0 < Δ ≤ T, got Δ = {step}, T = {horizon}")));
    }
    let n = cell_count(step, horizon);
    let mut masses = Vec::with_capacity(n);
    let mut cumulative = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    cumulative.push(0.0);
    for j in 0..n {
        let m = spec.cell_mass(j as f64 * step, (j + 1) as f64 * step)?;
        masses.push(m);
        acc += m;
        cumulative.push(acc);
    }
    Ok(KernelGrid {
        spec: spec.clone(),
        step,
        horizon: n as f64 * step,
        masses,
        cumulative,
        completely_monotone: spec.is_completely_monotone(),
    })
}

/// One row of a Dirac-scaling table.
#[derive(Debug, Clone, PartialEq)]
pub struct DiracRow {
    pub n: f64,
    pub lambda: f64,
    /// `|K̂(λ/n) − K̂(0)|`.
    pub deviation: f64,
}

#[derive(Debug, Clone)]
pub struct DiracReport {
    pub l1_norm: f64,
    pub rows: Vec<DiracRow>,
    /// Per λ probe: deviations strictly decreasing along the ladder.
    pub monotone: Vec<(f64, bool)>,
}

impl DiracReport {
    pub fn all_monotone(&self) -> bool {
        self.monotone.iter().all(|m| m.1)
    }
}

/// Tabulates `|K̂(λ/n) − K̂(0)|` over a ladder of scales `n`.
pub fn dirac_family_check(spec: &KernelSpec, ladder: &[f64], probes: &[f64]) -> Result<DiracReport> {
    let l1 = spec.l1_norm().map_err(|_| domain("Dirac scaling check needs an integrable base kernel"))?;
    let mut rows = Vec::new();
    let mut monotone = Vec::new();
    for &lambda in probes {
        let mut prev = f64::INFINITY;
        let mut ok = true;
        for &n in ladder {
            let scaled = KernelSpec::dirac_scaled(spec.clone(), n)?;
            let deviation = (scaled.laplace(lambda)? - l1).abs();
            ok &= deviation < prev;
            prev = deviation;
            rows.push(DiracRow { n, lambda, deviation });
        }
        monotone.push((lambda, ok));
    }
    Ok(DiracReport { l1_norm: l1, rows, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn closed_form_examples() {
        let k = KernelSpec::exponential(1.0, 0.0).unwrap();
        assert_eq!(k.eval(2.0).unwrap(), 1.0);
        assert_eq!(k.integrated(3.0).unwrap(), 3.0);
        let k = KernelSpec::fractional(1.0, 0.5).unwrap();
        assert!((k.eval(1.0).unwrap() - 0.5641895835477563).abs() < 1e-12);
        let k = KernelSpec::dirac_scaled(KernelSpec::exponential(1.0, -1.0).unwrap(), 10.0).unwrap();
        assert!((k.eval(0.3).unwrap() - 10.0 * (-3.0f64).exp()).abs() < 1e-12);
        assert!((KernelSpec::inverse_sqrt().integrated(0.04).unwrap() - 0.4).abs() < 1e-14);
        assert!((KernelSpec::exponential(1.0, -1.0).unwrap().laplace(1.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(KernelSpec::fractional(1.0, 0.0).is_err());
        assert!(KernelSpec::fractional(1.0, 1.5).is_err());
        assert!(KernelSpec::gamma(1.0, -1.0, -0.2).is_err());
        assert!(KernelSpec::shifted(KernelSpec::constant(1.0).unwrap(), 0.0).is_err());
        assert!(KernelSpec::dirac_scaled(KernelSpec::constant(1.0).unwrap(), -1.0).is_err());
    }

    #[test]
    fn singular_families_reject_origin() {
        assert!(KernelSpec::inverse_sqrt().eval(0.0).is_err());
        assert!(KernelSpec::inverse_sqrt().eval(-1.0).is_err());
        assert!(KernelSpec::exponential(1.0, -1.0).unwrap().laplace(-2.0).is_err());
        assert!(KernelSpec::exponential(1.0, 0.0).unwrap().laplace(0.0).is_err());
        assert!(KernelSpec::inverse_sqrt().l1_norm().is_err());
    }

    #[test]
    fn cm_flags() {
        assert!(KernelSpec::gamma(1.0, -1.0, 0.5).unwrap().is_completely_monotone());
        assert!(!KernelSpec::exponential(1.0, 0.5).unwrap().is_completely_monotone());
        assert!(!KernelSpec::exponential(-1.0, 0.0).unwrap().is_completely_monotone());
        let tab = TabulatedKernel::new(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert!(!KernelSpec::tabulated(tab).is_completely_monotone());
    }

    #[test]
    fn discretisation_examples() {
        let g = discretize(&KernelSpec::constant(1.0).unwrap(), 0.1, 1.0).unwrap();
        assert_eq!(g.len(), 10);
        assert!(g.masses.iter().all(|m| (m - 0.1).abs() < 1e-15));
        let g = discretize(&KernelSpec::inverse_sqrt(), 0.01, 1.0).unwrap();
        assert!((g.masses[0] - 0.2).abs() < 1e-14);
        assert!(g.masses.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn key_value_round_trip() {
        let k = KernelSpec::dirac_scaled(KernelSpec::gamma(2.0, -0.5, 0.3).unwrap(), 7.0).unwrap();
        let back = KernelSpec::from_key_values(&k.to_key_values()).unwrap();
        assert_eq!(k, back);
        let c = KernelSpec::parse_compact("dirac_scaled:n=10/exponential:c=1,b=-1").unwrap();
        assert_eq!(c, KernelSpec::dirac_scaled(KernelSpec::exponential(1.0, -1.0).unwrap(), 10.0).unwrap());
        assert_eq!(KernelSpec::parse_compact(&c.to_string()).unwrap(), c);
    }

    #[test]
    fn dirac_closed_forms() {
        let r = dirac_family_check(&KernelSpec::exponential(1.0, -1.0).unwrap(), &[1.0, 10.0, 100.0], &[2.0]).unwrap();
        for row in &r.rows {
            let expect = 1.0 - row.n / (row.n + 2.0);
            assert!((row.deviation - expect).abs() < 1e-14);
        }
        assert!(r.all_monotone());
        let r = dirac_family_check(&KernelSpec::gamma(1.0, -1.0, 0.5).unwrap(), &[1.0, 10.0, 100.0], &[1.0]).unwrap();
        for row in &r.rows {
            let expect = 1.0 - (1.0 + 1.0 / row.n).powf(-0.5);
            assert!((row.deviation - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn shifted_laplace_matches_quadrature() {
        let k = KernelSpec::shifted(KernelSpec::inverse_sqrt(), 0.3).unwrap();
        let direct = quad::integrate_to_infinity(|s| (s + 0.3f64).powf(-0.5) * (-2.0 * s).exp(), 0.0, 1e-14, 1e-12).unwrap();
        assert!((k.laplace(2.0).unwrap() - direct).abs() < 1e-9);
    }

    #[test]
    fn csv_reader_parses_header_and_rows() {
        let dir = std::env::temp_dir().join(format!("vk_csv_{}", std::process::id()));
        std::fs::write(&dir, "t,K\n0,1\n0.5,1\n1.0,1\n").unwrap();
        let tab = TabulatedKernel::from_csv(&dir).unwrap();
        std::fs::remove_file(&dir).ok();
        let k = KernelSpec::tabulated(tab);
        assert!((k.integrated(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(k.eval(2.0).is_err());
    }

    #[test]
    fn gamma_integral_matches_quadrature() {
        let k = KernelSpec::gamma(1.0, -1.0, 0.5).unwrap();
        // s = u² removes the endpoint singularity.
        let direct =
            quad::integrate(|u| if u == 0.0 { 0.0 } else { 2.0 * u * k.eval(u * u).unwrap() }, 0.0, 1.0, 1e-15, 1e-13).unwrap();
        assert!((k.integrated(1.0).unwrap() - direct).abs() < 1e-8);
    }

    #[test]
    fn gamma_cell_masses_match_quadrature() {
        let k = KernelSpec::gamma(2.0, -3.0, 0.7).unwrap();
        let g = discretize(&k, 0.05, 4.0).unwrap();
        let a = 0.7f64;
        for (j, m) in g.masses.iter().enumerate() {
            let (t0, t1) = (j as f64 * 0.05, (j + 1) as f64 * 0.05);
            let q = if j == 0 {
                let h = |u: f64| if u == 0.0 { 0.0 } else { k.eval(u.powf(1.0 / a)).unwrap() * u.powf(1.0 / a - 1.0) / a };
                quad::integrate(h, 0.0, t1.powf(a), 1e-15, 1e-13).unwrap()
            } else {
                quad::integrate(|s| k.eval(s).unwrap(), t0, t1, 1e-15, 1e-13).unwrap()
            };
            assert!((m - q).abs() < 1e-10, "cell {j}: {m} vs {q}");
        }
    }

    fn tabulated_inverse_sqrt(h: f64, horizon: f64) -> KernelSpec {
        let n = (horizon / h).round() as usize;
        let times: Vec<f64> = (0..=n).map(|j| j as f64 * h).collect();
        let values = times.iter().map(|t| t.powf(-0.5)).collect();
        let cumulative = times.iter().map(|t| 2.0 * t.sqrt()).collect();
        KernelSpec::tabulated(TabulatedKernel::with_cumulative(times, values, cumulative).unwrap())
    }

    #[test]
    fn tabulated_inverse_sqrt_laplace() {
        let k = tabulated_inverse_sqrt(1e-3, 60.0);
        for lambda in [0.5, 1.0, 2.0] {
            let exact = (std::f64::consts::PI / lambda).sqrt();
            let rel = (k.laplace(lambda).unwrap() - exact).abs() / exact;
            assert!(rel < 1e-4, "λ = {lambda}: {rel}");
        }
    }

    #[test]
    fn tabulated_dirac_ladder_decreases() {
        let times: Vec<f64> = (0..=4000).map(|j| j as f64 * 0.01).collect();
        let values = times.iter().map(|t| (-t).exp()).collect();
        let k = KernelSpec::tabulated(TabulatedKernel::new(times, values).unwrap());
        let r = dirac_family_check(&k, &[1.0, 10.0, 100.0], &[0.5, 1.0, 5.0]).unwrap();
        assert!(r.all_monotone(), "{:?}", r.rows);
        assert!((r.l1_norm - 1.0).abs() < 1e-4);
    }

    #[test]
    fn dirac_scaled_masses_are_base_masses_on_stretched_grid() {
        let base = KernelSpec::gamma(1.0, -1.0, 0.6).unwrap();
        let n = 8.0;
        let scaled = discretize(&KernelSpec::dirac_scaled(base.clone(), n).unwrap(), 0.01, 1.0).unwrap();
        let stretched = discretize(&base, 0.08, 8.0).unwrap();
        assert_eq!(scaled.len(), stretched.len());
        for (a, b) in scaled.masses.iter().zip(&stretched.masses) {
            assert!((a - b).abs() <= 1e-15 * b.abs().max(1e-300) + 1e-17);
        }
    }

    fn cm_kernel() -> impl Strategy<Value = KernelSpec> {
        prop_oneof![
            (0.1f64..5.0, -5.0f64..0.0).prop_map(|(c, b)| KernelSpec::exponential(c, b).unwrap()),
            (0.1f64..5.0, 0.05f64..1.0).prop_map(|(c, a)| KernelSpec::fractional(c, a).unwrap()),
            (0.1f64..5.0, -5.0f64..0.0, 0.05f64..1.0).prop_map(|(c, b, a)| KernelSpec::gamma(c, b, a).unwrap()),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn cm_kernels_are_monotone(k in cm_kernel(), s in 0.001f64..5.0, dt in 0.0f64..5.0, h in 0.001f64..0.2) {
            prop_assert!(k.is_completely_monotone());
            prop_assert!(k.eval(s + dt).unwrap() <= k.eval(s).unwrap());
            let g = discretize(&k, h, 2.0).unwrap();
            prop_assert!(g.masses.iter().all(|m| *m >= 0.0));
            prop_assert!(g.masses.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        }

        #[test]
        fn masses_sum_to_integrated_kernel(k in cm_kernel(), h in 0.001f64..0.2) {
            let g = discretize(&k, h, 2.0).unwrap();
            let total: f64 = g.masses.iter().sum();
            let exact = k.integrated(g.horizon).unwrap();
            prop_assert!((total - exact).abs() <= 1e-12 * exact.max(1.0), "{} vs {}", total, exact);
        }

        #[test]
        fn dirac_scaled_laplace_identity(k in cm_kernel(), n in 1.0f64..1000.0, lambda in 0.01f64..50.0) {
            let d = KernelSpec::dirac_scaled(k.clone(), n).unwrap();
            prop_assert_eq!(d.laplace(lambda).unwrap(), k.laplace(lambda / n).unwrap());
        }
    }
}
