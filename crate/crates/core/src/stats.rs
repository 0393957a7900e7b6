//! Empirical distributions, Kolmogorov–Smirnov statistics and Monte Carlo means.

use crate::error::{invalid, Result};

/// Level used for pass/fail gates.
pub const GATE_LEVEL: f64 = 0.01;

/// Sorted draws with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    pub seed: Option<u64>,
    pub generator: String,
}

impl Sample {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| v.is_nan()) {
            return Err(invalid("sample contains NaN"));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values, seed: None, generator: String::new() })
    }

    pub fn with_provenance(mut self, seed: u64, generator: impl Into<String>) -> Self {
        self.seed = Some(seed);
        self.generator = generator.into();
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `F̂(x) = #{v ≤ x}/n`.
    pub fn ecdf(&self, x: f64) -> f64 {
        self.values.partition_point(|v| *v <= x) as f64 / self.len() as f64
    }

    /// Empirical quantile by the inverse of `F̂`.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.len();
        let i = ((p * n as f64).ceil() as usize).clamp(1, n) - 1;
        self.values[i]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsOneSample {
    pub statistic: f64,
    /// DKW 95% band `√(ln(2/0.05)/(2n))`.
    pub band: f64,
    pub n: usize,
}

impl KsOneSample {
    pub fn within_band(&self) -> bool {
        self.statistic <= self.band
    }
}

pub fn dkw_band(n: usize) -> f64 {
    ((2.0f64 / 0.05).ln() / (2.0 * n as f64)).sqrt()
}

/// `sup_x |F̂(x) − F(x)|`.
pub fn ks_one_sample(s: &Sample, cdf: impl Fn(f64) -> f64) -> Result<KsOneSample> {
    if s.is_empty() {
        return Err(invalid("KS statistic of an empty sample"));
    }
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    let v = s.values();
    let mut i = 0;
    while i < v.len() {
        // Ties: F̂ jumps from i/n to j/n at v[i].
        let mut j = i + 1;
        while j < v.len() && v[j] == v[i] {
            j += 1;
        }
        // F̂ is i/n just below v[i] and j/n at v[i].
        let below = cdf(v[i].next_down()).clamp(0.0, 1.0);
        let at = cdf(v[i]).clamp(0.0, 1.0);
        d = d.max((below - i as f64 / n).abs()).max((j as f64 / n - at).abs());
        i = j;
    }
    Ok(KsOneSample { statistic: d, band: dkw_band(s.len()), n: s.len() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsTwoSample {
    pub statistic: f64,
    /// `c(α)√((n+m)/(nm))` at [`GATE_LEVEL`].
    pub threshold: f64,
    pub n: usize,
    pub m: usize,
}

impl KsTwoSample {
    pub fn passes(&self) -> bool {
        self.statistic <= self.threshold
    }
}

/// `c(α) = √(−ln(α/2)/2)`.
pub fn ks_critical(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

pub fn ks_two_sample(a: &Sample, b: &Sample) -> Result<KsTwoSample> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("KS statistic of an empty sample"));
    }
    let (x, y) = (a.values(), b.values());
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let t = x[i].min(y[j]);
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(KsTwoSample { statistic: d, threshold: ks_critical(GATE_LEVEL) * ((n + m) / (n * m)).sqrt(), n: x.len(), m: y.len() })
}

/// Sample mean and standard error `s/√n`.
pub fn mc_mean(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(invalid("Monte Carlo mean needs at least two values"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Sample variance and its standard error (from the fourth central moment).
pub fn mc_variance(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 4 {
        return Err(invalid("variance standard error needs at least four values"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let var = m2 * n / (n - 1.0);
    Ok((var, ((m4 - m2 * m2) / n).max(0.0).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn own_ecdf_gives_zero() {
        let s = Sample::new(vec![3.0, 1.0, 2.0, 2.0]).unwrap();
        let copy = s.clone();
        let r = ks_one_sample(&s, |x| copy.ecdf(x)).unwrap();
        assert!(r.statistic < 1e-15);
        assert_eq!(ks_two_sample(&s, &s).unwrap().statistic, 0.0);
    }

    #[test]
    fn shifted_uniform() {
        let s = Sample::new((0..1000).map(|i| 0.1 + 0.9 * (i as f64 + 0.5) / 1000.0).collect()).unwrap();
        let r = ks_one_sample(&s, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!((r.statistic - 0.1).abs() < 2e-3);
    }

    #[test]
    fn disjoint_supports() {
        let a = Sample::new(vec![0.0, 1.0, 2.0]).unwrap();
        let b = Sample::new(vec![5.0, 6.0]).unwrap();
        assert_eq!(ks_two_sample(&a, &b).unwrap().statistic, 1.0);
    }

    #[test]
    fn mean_examples() {
        assert_eq!(mc_mean(&[4.0; 10]).unwrap(), (4.0, 0.0));
        let (m, se) = mc_mean(&[0.0, 2.0]).unwrap();
        assert_eq!((m, se), (1.0, 1.0));
        assert!(mc_mean(&[1.0]).is_err());
        assert!(ks_one_sample(&Sample::new(vec![]).unwrap(), |x| x).is_err());
    }

    #[test]
    fn band_shrinks_like_inverse_root() {
        assert!((dkw_band(400) / dkw_band(1600) - 2.0).abs() < 1e-12);
    }
}
