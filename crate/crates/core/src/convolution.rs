//! Discrete history convolutions `A(d) = Σ_i m_{n-1-i+d} p_i` against kernel cell
//! masses, with a sum-of-exponentials far field when the kernel family admits one.

use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::kernels::{discretize, KernelSpec};

/// Relative accuracy required of the far-field masses before it is used.
pub const FAR_FIELD_TOL: f64 = 1e-7;

/// Precomputed data shared by every path on the same grid.
#[derive(Debug, Clone)]
pub struct ConvolutionPlan {
    masses: Vec<f64>,
    near: usize,
    coef: Vec<f64>,
    decay: Vec<f64>,
    entry: Vec<f64>,
    far_error: f64,
}

impl ConvolutionPlan {
    /// Plan for `steps` pushes of a kernel on step `step`. Lags up to `steps`
    /// are available (so both `d = 0` and `d = 1` work after every push).
    pub fn new(spec: &KernelSpec, step: f64, steps: usize) -> Result<Self> {
        Self::with_near_field(spec, step, steps, None)
    }

    /// As [`ConvolutionPlan::new`], optionally overriding the near-field length.
    pub fn with_near_field(spec: &KernelSpec, step: f64, steps: usize, near: Option<usize>) -> Result<Self> {
        if steps == 0 {
            return Err(invalid("convolution plan needs at least one step"));
        }
        let grid = discretize(spec, step, (steps + 1) as f64 * step)?;
        let masses = grid.masses;
        let direct = |masses: Vec<f64>| Self {
            near: masses.len(),
            masses,
            coef: Vec::new(),
            decay: Vec::new(),
            entry: Vec::new(),
            far_error: 0.0,
        };
        let exact_exp = matches!(spec, KernelSpec::Exponential { .. });
        let near = near.unwrap_or(if exact_exp { 1 } else { 48 }).max(1);
        if near + 1 >= masses.len() {
            return Ok(direct(masses));
        }
        let t_lo = near as f64 * step;
        let t_hi = masses.len() as f64 * step;
        let Some(factors) = spec.exponential_sum(t_lo, t_hi) else {
            return Ok(direct(masses));
        };
        let coef: Vec<f64> =
            factors.iter().map(|&(x, w)| if x == 0.0 { w * step } else { -w * (-x * step).exp_m1() / x }).collect();
        let decay: Vec<f64> = factors.iter().map(|&(x, _)| (-x * step).exp()).collect();
        let entry: Vec<f64> = factors.iter().map(|&(x, _)| (-x * t_lo).exp()).collect();
        let mut plan = Self { masses, near, coef, decay, entry, far_error: 0.0 };
        plan.far_error = plan.measure_far_error();
        if plan.far_error > FAR_FIELD_TOL {
            log::warn!(
                "far-field masses off by {:.2e} (tolerance {:.0e}); using direct convolution",
                plan.far_error,
                FAR_FIELD_TOL
            );
            return Ok(direct(plan.masses));
        }
        Ok(plan)
    }

    /// Largest relative error of the exponential-sum masses over far lags.
    fn measure_far_error(&self) -> f64 {
        let mut pow: Vec<f64> = self.entry.clone();
        let mut worst: f64 = 0.0;
        for lag in self.near..self.masses.len() {
            let approx: f64 = self.coef.iter().zip(&pow).map(|(c, p)| c * p).sum();
            let exact = self.masses[lag];
            let scale = exact.abs().max(1e-300);
            worst = worst.max((approx - exact).abs() / scale);
            for (p, d) in pow.iter_mut().zip(&self.decay) {
                *p *= d;
            }
        }
        worst
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn is_direct(&self) -> bool {
        self.coef.is_empty()
    }

    pub fn far_field_error(&self) -> f64 {
        self.far_error
    }

    pub fn factor_count(&self) -> usize {
        self.coef.len()
    }

    pub fn convolver(self: &Arc<Self>) -> HistoryConvolver {
        HistoryConvolver {
            plan: Arc::clone(self),
            pushes: Vec::with_capacity(self.masses.len()),
            state: vec![0.0; self.coef.len()],
        }
    }
}

/// Per-path convolution state.
#[derive(Debug, Clone)]
pub struct HistoryConvolver {
    plan: Arc<ConvolutionPlan>,
    pushes: Vec<f64>,
    state: Vec<f64>,
}

impl HistoryConvolver {
    pub fn len(&self) -> usize {
        self.pushes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pushes.is_empty()
    }

    pub fn push(&mut self, p: f64) {
        let plan = &*self.plan;
        let n = self.pushes.len();
        if !plan.is_direct() && n + 1 > plan.near {
            let leaving = self.pushes[n - plan.near];
            for ((s, d), (c, e)) in self.state.iter_mut().zip(&plan.decay).zip(plan.coef.iter().zip(&plan.entry)) {
                *s = *s * d + c * e * leaving;
            }
        }
        self.pushes.push(p);
    }

    /// `Σ_i m_{n-1-i+shift} p_i` over the pushes so far.
    pub fn value(&self, shift: usize) -> f64 {
        let plan = &*self.plan;
        let n = self.pushes.len();
        let near_start = n.saturating_sub(plan.near);
        let mut acc = 0.0;
        for (i, p) in self.pushes.iter().enumerate().skip(near_start) {
            acc += plan.masses[n - 1 - i + shift] * p;
        }
        if !plan.is_direct() {
            match shift {
                0 => acc += self.state.iter().sum::<f64>(),
                _ => {
                    for (s, d) in self.state.iter().zip(&plan.decay) {
                        acc += s * d.powi(shift as i32);
                    }
                }
            }
        }
        acc
    }

    pub fn reset(&mut self) {
        self.pushes.clear();
        self.state.iter_mut().for_each(|s| *s = 0.0);
    }
}

/// Direct `O(n)` evaluation, for checking.
pub fn direct_convolution(masses: &[f64], pushes: &[f64], shift: usize) -> f64 {
    let n = pushes.len();
    pushes.iter().enumerate().map(|(i, p)| masses[n - 1 - i + shift] * p).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn compare(spec: &KernelSpec, step: f64, steps: usize) -> f64 {
        let plan = Arc::new(ConvolutionPlan::new(spec, step, steps).unwrap());
        let mut conv = plan.convolver();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut pushes = Vec::new();
        let mut worst: f64 = 0.0;
        for _ in 0..steps {
            let p: f64 = rng.random_range(-1.0..1.0);
            conv.push(p);
            pushes.push(p);
            let scale: f64 = pushes.iter().map(|p| p.abs()).sum::<f64>() * plan.masses()[0];
            for d in 0..2 {
                let e = direct_convolution(plan.masses(), &pushes, d);
                worst = worst.max((conv.value(d) - e).abs() / scale);
            }
        }
        worst
    }

    #[test]
    fn fractional_far_field_is_accurate() {
        for alpha in [0.1, 0.5, 0.75, 0.99] {
            let spec = KernelSpec::fractional(1.0, alpha).unwrap();
            let plan = ConvolutionPlan::new(&spec, 1e-3, 4000).unwrap();
            assert!(!plan.is_direct(), "alpha {alpha}: {:.2e}", plan.far_field_error());
            assert!(compare(&spec, 1e-3, 600) < 1e-8);
        }
    }

    #[test]
    fn gamma_shifted_and_scaled_kernels() {
        let specs = [
            KernelSpec::gamma(2.0, -1.5, 0.4).unwrap(),
            KernelSpec::shifted(KernelSpec::fractional(1.0, 0.3).unwrap(), 0.05).unwrap(),
            KernelSpec::dirac_scaled(KernelSpec::exponential(1.0, -1.0).unwrap(), 50.0).unwrap(),
            KernelSpec::exponential(-0.7, 0.2).unwrap(),
        ];
        for spec in &specs {
            assert!(compare(spec, 2e-3, 500) < 1e-8, "{spec}");
        }
    }

    #[test]
    fn tabulated_uses_direct_sum() {
        let tab = crate::kernels::TabulatedKernel::new(vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.2]).unwrap();
        let plan = ConvolutionPlan::new(&KernelSpec::tabulated(tab), 0.01, 100).unwrap();
        assert!(plan.is_direct());
    }
}
