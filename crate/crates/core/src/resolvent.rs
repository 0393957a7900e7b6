//! Resolvents of the second kind (`K − R = K∗R`), first-kind deconvolution and
//! the shifted input curve `G̃₀ = G₀ − R_λ∗G₀`.

use std::io::Write;
use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::kernels::{KernelGrid, KernelSpec};
use crate::mittag_leffler::mittag_leffler;
use crate::quad;

/// Closed-form resolvent of an exponential, fractional or gamma kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum ClosedResolvent {
    /// `c e^{(b−c)t}`.
    Exponential { c: f64, b: f64 },
    /// `c e^{bt} t^{α−1} E_{α,α}(−c t^α)`.
    MittagLeffler { c: f64, b: f64, alpha: f64 },
}

impl ClosedResolvent {
    pub fn eval(&self, t: f64) -> Result<f64> {
        match *self {
            Self::Exponential { c, b } => Ok(c * ((b - c) * t).exp()),
            Self::MittagLeffler { c, b, alpha } => {
                if t <= 0.0 {
                    return Err(crate::error::domain(format!("resolvent evaluated at t = {t}")));
                }
                let ta = t.powf(alpha);
                Ok(c * (b * t).exp() * ta / t * mittag_leffler(alpha, alpha, -c * ta)?)
            }
        }
    }

    /// `R̄(t) = ∫_0^t R`.
    pub fn integrated(&self, t: f64) -> Result<f64> {
        match *self {
            Self::Exponential { c, b } => {
                if b == c {
                    Ok(c * t)
                } else {
                    Ok(c * ((b - c) * t).exp_m1() / (b - c))
                }
            }
            Self::MittagLeffler { c, b, alpha } if b == 0.0 => Ok(1.0 - mittag_leffler(alpha, 1.0, -c * t.powf(alpha))?),
            Self::MittagLeffler { alpha, .. } => {
                // Substitute s = u^{1/α} to absorb the endpoint singularity.
                let f = |u: f64| {
                    if u == 0.0 {
                        return 0.0;
                    }
                    let s = u.powf(1.0 / alpha);
                    self.eval(s).unwrap_or(f64::NAN) * s / (alpha * u)
                };
                quad::integrate(f, 0.0, t.powf(alpha), 1e-14, 1e-12)
            }
        }
    }

    /// Cell averages on `[jΔ, (j+1)Δ]`.
    pub fn cell_averages(&self, step: f64, cells: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(cells);
        let mut prev = 0.0;
        for j in 0..cells {
            let next = self.integrated((j + 1) as f64 * step)?;
            out.push((next - prev) / step);
            prev = next;
        }
        Ok(out)
    }
}

/// Closed-form resolvent, or `Unsupported` for families without one.
pub fn resolvent_closed_form(spec: &KernelSpec) -> Result<ClosedResolvent> {
    match spec.simplified() {
        KernelSpec::Exponential { c, b } => Ok(ClosedResolvent::Exponential { c, b }),
        KernelSpec::Fractional { c, alpha } if alpha == 1.0 => Ok(ClosedResolvent::Exponential { c, b: 0.0 }),
        KernelSpec::Fractional { c, alpha } => Ok(ClosedResolvent::MittagLeffler { c, b: 0.0, alpha }),
        KernelSpec::Gamma { c, b, alpha } if alpha == 1.0 => Ok(ClosedResolvent::Exponential { c, b }),
        KernelSpec::Gamma { c, b, alpha } => Ok(ClosedResolvent::MittagLeffler { c, b, alpha }),
        other => Err(Error::Unsupported(format!(
            "no closed-form resolvent for the {} family; use resolvent_numeric",
            other.family_name()
        ))),
    }
}

/// Numerical resolvent as cell averages on a uniform grid.
#[derive(Debug, Clone)]
pub struct ResolventGrid {
    pub step: f64,
    pub horizon: f64,
    /// Cell averages `r_j`.
    pub values: Vec<f64>,
    /// `R̄(jΔ)` for `j = 0..=N`.
    pub cumulative: Vec<f64>,
    /// `max_j |k_j − r_j − (k∗r)_j|`.
    pub residual: f64,
    /// `K̂(0) / (1 + K̂(0))`, or 1 for non-integrable kernels; `None` if unknown.
    pub infinite_mass: Option<f64>,
}

impl ResolventGrid {
    pub fn total_mass(&self) -> f64 {
        *self.cumulative.last().expect("non-empty")
    }

    /// `Σ_j r_j ∫_{cell j} e^{−λt} dt`.
    pub fn laplace(&self, lambda: f64) -> f64 {
        let h = self.step;
        let cell = if lambda == 0.0 { h } else { -(-lambda * h).exp_m1() / lambda };
        let decay = (-lambda * h).exp();
        let mut w = cell;
        let mut acc = 0.0;
        for r in &self.values {
            acc += r * w;
            w *= decay;
        }
        acc
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "t,R")?;
        for (j, r) in self.values.iter().enumerate() {
            writeln!(f, "{},{}", (j as f64 + 0.5) * self.step, r)?;
        }
        Ok(())
    }
}

/// `ω_ℓ = Δ^{-1} ∫∫_{cell×cell} K(ℓΔ + u − v) du dv`: the cell average of
/// `K∗1_{cell}` over the cell `ℓ` lags later.
pub fn cell_average_weights(spec: &KernelSpec, step: f64, cells: usize) -> Result<Vec<f64>> {
    let (gx, gw) = quad::gauss_legendre(10);
    let kbar = |u: f64| spec.integrated(u).unwrap_or(f64::NAN);
    let k2 = quad::integrate(kbar, 0.0, step, 1e-300, 1e-13)?;
    let k1 = spec.integrated(step)?;
    // ∫_a^{a+Δ} K(t) w(t) dt with a smooth weight.
    let panel = |a: f64, weight: &dyn Fn(f64) -> f64| -> Result<f64> {
        let mut acc = 0.0;
        for (x, w) in gx.iter().zip(&gw) {
            let t = a + 0.5 * step * (x + 1.0);
            acc += w * spec.eval(t)? * weight(t);
        }
        Ok(0.5 * step * acc)
    };
    let mut out = Vec::with_capacity(cells);
    out.push(k2 / step);
    if cells > 1 {
        let tail = panel(step, &|t| 2.0 - t / step)?;
        out.push((step * k1 - k2) / step + tail);
    }
    for l in 2..cells {
        let c = l as f64 * step;
        let left = panel(c - step, &|t| 1.0 - (c - t) / step)?;
        let right = panel(c, &|t| 1.0 - (t - c) / step)?;
        out.push(left + right);
    }
    Ok(out)
}

/// Neumann terms subtracted at most; kernels of lower order are solved directly.
const MAX_SUBTRACTED: u32 = 64;

/// Forward substitution for `x + ω∗x = rhs`; returns `x` and the largest residual.
fn solve_second_kind(omega: &[f64], rhs: &[f64]) -> (Vec<f64>, f64) {
    let n = rhs.len();
    let diag = 1.0 + omega[0];
    let mut x = vec![0.0; n];
    for j in 0..n {
        let mut acc = rhs[j];
        for i in 0..j {
            acc -= omega[j - i] * x[i];
        }
        x[j] = acc / diag;
    }
    let mut residual: f64 = 0.0;
    for j in 0..n {
        let conv: f64 = (0..=j).map(|i| omega[j - i] * x[i]).sum();
        residual = residual.max((rhs[j] - x[j] - conv).abs());
    }
    (x, residual)
}

/// Solves `r = k − ω∗r` cell by cell, where `k_j = m_j/Δ` and `ω` are the
/// cell-average weights of the grid's kernel.
///
/// For singular fractional and gamma kernels the leading Neumann terms are
/// exact: `R = Σ_{i≤m} (−1)^{i−1} K^{∗i} + (−1)^m Q` with `Q = K^{∗m}∗R`, where
/// `m` is the first order with `K^{∗(m+1)}` bounded, and the solve is for `Q`
/// from `Q + K∗Q = K^{∗(m+1)}`.
pub fn resolvent_numeric(grid: &KernelGrid) -> Result<ResolventGrid> {
    let n = grid.len();
    let h = grid.step;
    let omega = cell_average_weights(&grid.spec, h, n)?;
    let diag = 1.0 + omega[0];
    if diag.abs() < 1e-8 {
        return Err(Error::Conditioning(format!("leading coefficient 1 + ω₀ = {diag:.3e}")));
    }
    let k: Vec<f64> = grid.masses.iter().map(|m| m / h).collect();
    let (r, residual) = match grid.spec.convolution_power() {
        Some((alpha, power)) if alpha * MAX_SUBTRACTED as f64 >= 1.0 => {
            let m = (1.0 / alpha).ceil() as u32 - 1;
            let cells =
                |i: u32| -> Vec<f64> { (0..n).map(|j| (power(i, (j + 1) as f64 * h) - power(i, j as f64 * h)) / h).collect() };
            let (q, residual) = solve_second_kind(&omega, &cells(m + 1));
            let mut r = k.clone();
            for i in 2..=m {
                let sign = if i % 2 == 0 { -1.0 } else { 1.0 };
                for (v, p) in r.iter_mut().zip(cells(i)) {
                    *v += sign * p;
                }
            }
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            for (v, p) in r.iter_mut().zip(&q) {
                *v += sign * p;
            }
            (r, residual)
        }
        _ => solve_second_kind(&omega, &k),
    };
    let mut cumulative = Vec::with_capacity(n + 1);
    cumulative.push(0.0);
    let mut acc = 0.0;
    for v in &r {
        acc += v * h;
        cumulative.push(acc);
    }
    let infinite_mass = match grid.spec.l1_norm() {
        Ok(l1) => Some(l1 / (1.0 + l1)),
        Err(_) if grid.completely_monotone => Some(1.0),
        Err(_) => None,
    };
    Ok(ResolventGrid { step: h, horizon: grid.horizon, values: r, cumulative, residual, infinite_mass })
}

/// One probe of the scaled Laplace identity.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceProbe {
    pub lambda: f64,
    pub numeric: f64,
    pub formula: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone)]
pub struct ScaledLaplaceReport {
    pub n: f64,
    pub probes: Vec<LaplaceProbe>,
}

impl ScaledLaplaceReport {
    pub fn max_rel_error(&self) -> f64 {
        self.probes.iter().map(|p| p.rel_error).fold(0.0, f64::max)
    }

    /// Largest `|R̂ⁿ(λ) − 1|` over the probes.
    pub fn distance_from_one(&self) -> f64 {
        self.probes.iter().map(|p| (p.formula - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Compares the transform of the numerical resolvent of `n K` with `nK̂/(1 + nK̂)`.
pub fn resolvent_scaled_laplace_check(
    spec: &KernelSpec,
    n: f64,
    probes: &[f64],
    step: f64,
    horizon: f64,
) -> Result<ScaledLaplaceReport> {
    if !spec.is_completely_monotone() {
        return Err(invalid("scaled Laplace check needs a completely monotone kernel"));
    }
    let scaled = spec.scaled(n);
    let grid = crate::kernels::discretize(&scaled, step, horizon)?;
    let rg = resolvent_numeric(&grid)?;
    let mut out = Vec::new();
    for &lambda in probes {
        let nk = n * spec.laplace(lambda)?;
        let formula = nk / (1.0 + nk);
        let numeric = rg.laplace(lambda);
        out.push(LaplaceProbe { lambda, numeric, formula, rel_error: (numeric - formula).abs() / formula.abs() });
    }
    Ok(ScaledLaplaceReport { n, probes: out })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassReport {
    pub min_value: f64,
    pub total_mass: f64,
    /// Mass over `[0, ∞)` from the Laplace transform at zero, when known.
    pub infinite_mass: Option<f64>,
    pub nonnegative: bool,
    pub mass_bounded: bool,
}

impl MassReport {
    pub fn ok(&self) -> bool {
        self.nonnegative && self.mass_bounded
    }
}

/// Checks `r_j ≥ −tol` and `R̄ ≤ 1 + tol` along the grid.
pub fn check_resolvent_mass(rgrid: &ResolventGrid, completely_monotone: bool, tol: f64) -> Result<MassReport> {
    if !completely_monotone {
        return Err(invalid("mass law applies only to completely monotone kernels"));
    }
    let min_value = rgrid.values.iter().copied().fold(f64::INFINITY, f64::min);
    let max_cum = rgrid.cumulative.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(MassReport {
        min_value,
        total_mass: rgrid.total_mass(),
        infinite_mass: rgrid.infinite_mass,
        nonnegative: min_value >= -tol,
        mass_bounded: max_cum <= 1.0 + tol,
    })
}

/// Point values of `K∗Υ` on the grid for piecewise-constant `Υ`:
/// `path_{j+1} = Σ_{i≤j} m_{j−i} Υ_i`, `path_0 = 0`.
pub fn convolve_cells(grid: &KernelGrid, upsilon: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; upsilon.len() + 1];
    for j in 0..upsilon.len() {
        out[j + 1] = (0..=j).map(|i| grid.masses[j - i] * upsilon[i]).sum();
    }
    out
}

/// Solves `K∗Υ = path` for piecewise-constant `Υ`, given path values at grid points.
pub fn deconvolve_first_kind(grid: &KernelGrid, path: &[f64]) -> Result<Vec<f64>> {
    if path.is_empty() || path[0].abs() > 1e-12 * path.iter().fold(1.0f64, |a, b| a.max(b.abs())) {
        return Err(invalid("first-kind deconvolution needs path(0) = 0"));
    }
    let cells = path.len() - 1;
    if cells > grid.len() {
        return Err(invalid(format!("path has {cells} cells but the kernel grid only {}", grid.len())));
    }
    let m0 = grid.masses.first().copied().unwrap_or(0.0);
    if m0 == 0.0 || !m0.is_finite() {
        return Err(Error::Singular("leading kernel mass is zero".into()));
    }
    let mut ups = vec![0.0; cells];
    for j in 0..cells {
        let mut acc = path[j + 1];
        for i in 0..j {
            acc -= grid.masses[j - i] * ups[i];
        }
        ups[j] = acc / m0;
    }
    Ok(ups)
}

/// `G̃₀ = G₀ − R_λ∗G₀` at grid points, computed as the solution of
/// `G̃₀ + λK∗G̃₀ = G₀` with trapezoidal cell values.
pub fn shifted_input_curve(g0: &[f64], lambda: f64, spec: &KernelSpec, step: f64) -> Result<Vec<f64>> {
    if !(lambda > 0.0) {
        return Err(invalid("shifted input curve needs λ > 0"));
    }
    if g0.len() < 2 {
        return Err(invalid("input curve needs at least two grid values"));
    }
    let cells = g0.len() - 1;
    let grid = crate::kernels::discretize(spec, step, cells as f64 * step)?;
    let m = &grid.masses;
    let mut out = vec![0.0; g0.len()];
    out[0] = g0[0];
    let diag = 1.0 + 0.5 * lambda * m[0];
    for k in 1..=cells {
        let mut acc = g0[k] - 0.5 * lambda * m[0] * out[k - 1];
        for i in 0..k - 1 {
            acc -= lambda * m[k - 1 - i] * 0.5 * (out[i] + out[i + 1]);
        }
        out[k] = acc / diag;
    }
    let scale = g0.iter().fold(1.0f64, |a, b| a.max(b.abs()));
    let tol = 1e-8 * scale;
    if let Some(k) = (1..out.len()).find(|&k| out[k] < out[k - 1] - tol || out[k] < -tol) {
        return Err(Error::Numerical(format!("shifted input curve not non-decreasing at t = {}", k as f64 * step)));
    }
    Ok(out)
}

/// Writes a closed-form resolvent sampled at `times` as `t,R` rows.
pub fn write_closed_form_csv(res: &ClosedResolvent, times: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "t,R")?;
    for &t in times {
        writeln!(f, "{},{}", t, res.eval(t)?)?;
    }
    Ok(())
}
