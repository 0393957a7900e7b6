//! The first-passage limit `X*_t = inf{s ≥ 0 : d·s − νW_{f(s)} > L(t)}` and its
//! marginal laws (Inverse Gaussian, one-sided ½-stable, curved boundaries).

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::brownian::BrownianClock;
use crate::clock::first_upcrossing;
use crate::error::{invalid, Error, Result};
use crate::special::{exp_times_norm_tail, norm_cdf};
use crate::timechange::TimeChangeFn;

/// Boundary data for the first-passage limit.
#[derive(Debug, Clone)]
pub struct LimitSpec {
    pub f: TimeChangeFn,
    /// Coefficient `d` of `s` (`1 + λ` in the standard form, `λ` in the fast regime).
    pub drift: f64,
    pub nu: f64,
    /// `λ` in the decoration profile `F*(s) = νW(f(s)) − λs`.
    pub decoration_rate: f64,
    /// Probe times `t_k`, increasing, starting at 0.
    pub times: Vec<f64>,
    /// Non-decreasing levels `L(t_k)`.
    pub levels: Vec<f64>,
}

impl LimitSpec {
    /// `inf{s : (1+λ)s − νW_{f(s)} > G₀(t)}`.
    pub fn standard(f: TimeChangeFn, lambda: f64, nu: f64, times: Vec<f64>, g0: Vec<f64>) -> Result<Self> {
        Self::with_drift(f, 1.0 + lambda, lambda, nu, times, g0)
    }

    pub fn with_drift(
        f: TimeChangeFn,
        drift: f64,
        decoration_rate: f64,
        nu: f64,
        times: Vec<f64>,
        levels: Vec<f64>,
    ) -> Result<Self> {
        if !(drift > 0.0) {
            return Err(invalid(format!("limit drift must be positive, got {drift}")));
        }
        if !(nu >= 0.0) {
            return Err(invalid("ν must be nonnegative"));
        }
        if times.len() != levels.len() || times.is_empty() {
            return Err(invalid("limit levels must match the time grid"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("limit time grid must be increasing"));
        }
        let scale = levels.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        if levels.windows(2).any(|w| w[1] < w[0] - 1e-12 * scale) {
            return Err(invalid("limit levels must be non-decreasing"));
        }
        Ok(Self { f, drift, nu, decoration_rate, times, levels })
    }

    /// `F*(s)` for a Brownian value `w = W(f(s))`.
    pub fn decoration(&self, s: f64, w: f64) -> f64 {
        self.nu * w - self.decoration_rate * s
    }
}

/// One jump of a limit path, with its decoration range.
#[derive(Debug, Clone, PartialEq)]
pub struct Jump {
    pub index: usize,
    pub t: f64,
    pub left: f64,
    pub right: f64,
    /// `min/max F*` over `[left, right]`.
    pub decoration: (f64, f64),
    /// `(s, F*(s))` at clock nodes inside the jump, plus both endpoints.
    pub profile: Vec<(f64, f64)>,
}

/// A limit path on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpPath {
    pub times: Vec<f64>,
    /// `X*_{t_k}`.
    pub values: Vec<f64>,
    /// Levels used, `L(t_k)`.
    pub levels: Vec<f64>,
    pub jumps: Vec<Jump>,
    /// False when the clock budget ran out before the last level was crossed.
    pub complete: bool,
}

impl JumpPath {
    /// `X*_{t_k−}`, taken on the grid as `X*_{t_{k−1}}`.
    pub fn left_limits(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.values.len());
        out.push(self.values[0]);
        out.extend_from_slice(&self.values[..self.values.len() - 1]);
        out
    }

    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0])
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|x| *x <= t + 1e-12).saturating_sub(1);
        self.values[i]
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "t,X_left,X")?;
        for ((t, l), x) in self.times.iter().zip(self.left_limits()).zip(&self.values) {
            writeln!(f, "{t},{l},{x}")?;
        }
        Ok(())
    }

    pub fn write_decorations(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "t,s,F")?;
        for j in &self.jumps {
            for (s, v) in &j.profile {
                writeln!(f, "{},{},{}", j.t, s, v)?;
            }
        }
        Ok(())
    }
}

/// Options for [`simulate_limit_grid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    /// Brownian-bridge maximum correction inside clock cells (affine `f` only).
    pub bridge_correction: bool,
    /// Record decorations for jumps larger than this.
    pub jump_threshold: f64,
    pub max_cells: usize,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self { bridge_correction: false, jump_threshold: f64::INFINITY, max_cells: 50_000_000 }
    }
}

/// `Z` on one clock cell as `q(s) = a s² + b s + c` in the `s` variable.
struct CellShape {
    s_lo: f64,
    s_hi: f64,
    z_lo: f64,
    z_hi: f64,
    quad: Option<(f64, f64, f64)>,
}

fn cell_shape(spec: &LimitSpec, clock: &BrownianClock, j: usize) -> CellShape {
    let delta = clock.step();
    let w = clock.values();
    let (u_lo, u_hi) = (j as f64 * delta, (j + 1) as f64 * delta);
    let s_lo = spec.f.inverse(u_lo);
    let s_hi = spec.f.inverse(u_hi);
    let z_lo = spec.drift * s_lo - spec.nu * w[j];
    let z_hi = spec.drift * s_hi - spec.nu * w[j + 1];
    let sigma = (w[j + 1] - w[j]) / delta;
    let base = w[j] - sigma * u_lo;
    let quad = match spec.f {
        TimeChangeFn::Identity => Some((1.0, 0.0)),
        TimeChangeFn::Linear(a) => Some((a, 0.0)),
        TimeChangeFn::LinearPlusQuadratic(a, b) => Some((a, b)),
        _ => None,
    }
    .map(|(a1, a2)| (-spec.nu * sigma * a2, spec.drift - spec.nu * sigma * a1, -spec.nu * base));
    CellShape { s_lo, s_hi, z_lo, z_hi, quad }
}

impl CellShape {
    fn z(&self, s: f64, spec: &LimitSpec, clock: &BrownianClock) -> f64 {
        match self.quad {
            Some((a, b, c)) => (a * s + b) * s + c,
            None => spec.drift * s - spec.nu * clock.value_within(spec.f.eval(s)),
        }
    }

    /// Supremum of the interpolated `Z` over the cell.
    fn sup(&self) -> f64 {
        let mut m = self.z_lo.max(self.z_hi);
        if let Some((a, b, c)) = self.quad {
            if a < 0.0 {
                let v = -b / (2.0 * a);
                if v > self.s_lo && v < self.s_hi {
                    m = m.max((a * v + b) * v + c);
                }
            }
        }
        m
    }

    /// First `s` in the cell with `Z(s) ≥ level`, or `None`.
    fn crossing(&self, level: f64, from: f64, spec: &LimitSpec, clock: &BrownianClock) -> Option<f64> {
        let lo = from.max(self.s_lo);
        if self.z(lo, spec, clock) >= level {
            return Some(lo);
        }
        match self.quad {
            Some((a, b, c)) => first_upcrossing(a, b, c - level, lo, self.s_hi),
            None => {
                let mut prev = lo;
                for i in 1..=32 {
                    let s = lo + (self.s_hi - lo) * i as f64 / 32.0;
                    if self.z(s, spec, clock) >= level {
                        let (mut a, mut b) = (prev, s);
                        for _ in 0..100 {
                            let m = 0.5 * (a + b);
                            if self.z(m, spec, clock) >= level {
                                b = m;
                            } else {
                                a = m;
                            }
                        }
                        return Some(b);
                    }
                    prev = s;
                }
                None
            }
        }
    }
}

/// First-passage limit on the Brownian clock grid; the clock is extended as needed.
pub fn simulate_limit_grid(spec: &LimitSpec, clock: &mut BrownianClock, opts: GridOptions) -> Result<JumpPath> {
    if opts.bridge_correction && !spec.f.is_affine() {
        return Err(invalid("bridge correction needs an affine time change"));
    }
    let delta = clock.step();
    let mut values = Vec::with_capacity(spec.levels.len());
    let mut jumps = Vec::new();
    let mut cell = 0usize;
    let mut prev_x = 0.0f64;
    let mut complete = true;
    // Bridge-corrected supremum of the current cell, drawn once per cell.
    let mut cell_sup: Option<(usize, f64)> = None;
    for (k, &level) in spec.levels.iter().enumerate() {
        if level <= 0.0 || !complete {
            values.push(prev_x);
            continue;
        }
        let x = loop {
            if cell >= opts.max_cells {
                complete = false;
                break prev_x;
            }
            clock.extend_to((cell + 1) as f64 * delta)?;
            let shape = cell_shape(spec, clock, cell);
            if shape.quad.is_none() || shape.sup() >= level {
                if let Some(s) = shape.crossing(level, prev_x, spec, clock) {
                    break s;
                }
            }
            if opts.bridge_correction {
                let sup = match cell_sup {
                    Some((c, v)) if c == cell => v,
                    _ => {
                        let u = clock.cell_uniform(cell);
                        let du = shape.z_hi - shape.z_lo;
                        let slope = spec.f.affine_slope().unwrap_or(1.0);
                        let var = spec.nu * spec.nu * delta * slope;
                        let v = 0.5 * (shape.z_lo + shape.z_hi + (du * du - 2.0 * var * u.ln()).sqrt());
                        cell_sup = Some((cell, v));
                        v
                    }
                };
                if sup >= level {
                    // Place the crossing proportionally between the left node and the bridge maximum.
                    let frac = ((level - shape.z_lo) / (sup - shape.z_lo)).clamp(0.0, 1.0);
                    let s = shape.s_lo + frac * (shape.s_hi - shape.s_lo);
                    break s.max(prev_x);
                }
            }
            cell += 1;
        };
        if complete && x - prev_x > opts.jump_threshold && k > 0 {
            jumps.push(decorate(spec, clock, k, prev_x, x)?);
        }
        prev_x = x;
        values.push(x);
    }
    Ok(JumpPath { times: spec.times.clone(), values, levels: spec.levels.clone(), jumps, complete })
}

/// Decoration `F*([left, right])` from the clock nodes between the endpoints.
pub fn decorate(spec: &LimitSpec, clock: &mut BrownianClock, k: usize, left: f64, right: f64) -> Result<Jump> {
    let (u_l, u_r) = (spec.f.eval(left), spec.f.eval(right));
    clock.extend_to(u_r + clock.step())?;
    let mut profile = vec![(left, spec.decoration(left, clock.value_within(u_l)))];
    let first = clock.cell_of(u_l) + 1;
    let last = clock.cell_of(u_r);
    for i in first..=last {
        let u = i as f64 * clock.step();
        if u > u_l && u < u_r {
            let s = spec.f.inverse(u);
            profile.push((s, spec.decoration(s, clock.values()[i])));
        }
    }
    profile.push((right, spec.decoration(right, clock.value_within(u_r))));
    let lo = profile.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi = profile.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(Jump { index: k, t: spec.times[k], left, right, decoration: (lo, hi), profile })
}

/// One `IG(μ, shape)` draw by the transformation-with-roots method.
pub fn ig_sample<R: Rng + ?Sized>(mu: f64, shape: f64, rng: &mut R) -> f64 {
    let n: f64 = StandardNormal.sample(rng);
    let r = mu * n * n / shape;
    // Smaller root, written without cancellation.
    let x = mu / (1.0 + 0.5 * r + (r + 0.25 * r * r).sqrt());
    let u: f64 = rng.random();
    if u <= mu / (mu + x) {
        x
    } else {
        mu * mu / x
    }
}

/// `IG(μ, shape)` draw from a fresh seeded stream.
pub fn ig_sampler(mu: f64, shape: f64, seed: u64) -> Result<f64> {
    check_ig(mu, shape)?;
    Ok(ig_sample(mu, shape, &mut ChaCha8Rng::seed_from_u64(seed)))
}

pub fn ig_samples(mu: f64, shape: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    check_ig(mu, shape)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| ig_sample(mu, shape, &mut rng)).collect())
}

fn check_ig(mu: f64, shape: f64) -> Result<()> {
    if !(mu > 0.0 && shape > 0.0) {
        return Err(invalid(format!("IG parameters must be positive, got ({mu}, {shape})")));
    }
    Ok(())
}

/// `IG(μ, shape)` CDF; `μ = ∞` gives the Lévy law.
pub fn ig_cdf(x: f64, mu: f64, shape: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let r = (shape / x).sqrt();
    if mu.is_infinite() {
        return 2.0 * norm_cdf(-r);
    }
    (norm_cdf(r * (x / mu - 1.0)) + exp_times_norm_tail(2.0 * shape / mu, r * (x / mu + 1.0))).min(1.0)
}

pub fn ig_pdf(x: f64, mu: f64, shape: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let dev = if mu.is_infinite() { 1.0 } else { (x - mu) / mu };
    let expo = if mu.is_infinite() { -shape / (2.0 * x) } else { -shape * dev * dev / (2.0 * x) };
    (shape / (2.0 * std::f64::consts::PI * x.powi(3))).sqrt() * expo.exp()
}

/// Lévy CDF of `(level/ν)²/N²`.
pub fn levy_cdf(x: f64, level: f64, nu: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        2.0 * norm_cdf(-(level / nu) / x.sqrt())
    }
}

/// `inf{s : −νW_s > level} = (level/ν)²/N²`.
pub fn sample_stable_half<R: Rng + ?Sized>(level: f64, nu: f64, rng: &mut R) -> f64 {
    let n: f64 = StandardNormal.sample(rng);
    (level / nu).powi(2) / (n * n)
}

/// Exact limit path for affine `f`: independent IG increments in the level variable.
pub fn sample_affine_exact<R: Rng + ?Sized>(spec: &LimitSpec, rng: &mut R) -> Result<JumpPath> {
    let slope =
        spec.f.affine_slope().ok_or_else(|| Error::SchemeMismatch(format!("exact sampler needs affine f, got {}", spec.f)))?;
    if !(spec.nu > 0.0) {
        return Err(invalid("exact sampler needs ν > 0"));
    }
    let mut values = Vec::with_capacity(spec.levels.len());
    let mut x = 0.0;
    let mut prev = 0.0f64;
    for &level in &spec.levels {
        let l = level.max(0.0);
        let dl = l - prev;
        if dl > 0.0 {
            x += ig_sample(dl / spec.drift, dl * dl / (spec.nu * spec.nu * slope), rng);
        }
        prev = prev.max(l);
        values.push(x);
    }
    Ok(JumpPath { times: spec.times.clone(), values, levels: spec.levels.clone(), jumps: Vec::new(), complete: true })
}

/// Options for [`tangent_step_sampler_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentOptions {
    /// Tangent corrections per step after the first draw; 0 gives the single-tangent proxy.
    pub max_corrections: usize,
    /// Residual gap, relative to the step's level increment, below which a step is accepted.
    pub gap_tol: f64,
}

impl Default for TangentOptions {
    fn default() -> Self {
        TangentOptions { max_corrections: 500, gap_tol: 1e-9 }
    }
}

/// Tangent sampler with default corrections.
pub fn tangent_step_sampler<R: Rng + ?Sized>(spec: &LimitSpec, rng: &mut R) -> Result<JumpPath> {
    tangent_step_sampler_with(spec, TangentOptions::default(), rng)
}

/// Per step the boundary is linearised at the current crossing point and the clock
/// increment is drawn from the resulting IG law. When `f` is convex the tangent lies
/// below the boundary, so the draw undershoots; the walk then restarts from the hit
/// point with a new tangent until the residual gap is below tolerance.
pub fn tangent_step_sampler_with<R: Rng + ?Sized>(spec: &LimitSpec, opts: TangentOptions, rng: &mut R) -> Result<JumpPath> {
    if !(spec.nu > 0.0) {
        return Err(invalid("tangent sampler needs ν > 0"));
    }
    let mut values = Vec::with_capacity(spec.levels.len());
    let mut s = 0.0f64;
    let mut prev = 0.0f64;
    let (mut fallbacks, mut capped) = (0usize, 0usize);
    for &level in &spec.levels {
        let l = level.max(0.0);
        let dl = l - prev;
        if dl > 0.0 {
            // Standard BM b against the boundary c(v) = (dl − drift·(f⁻¹(u0 + v) − s0))/ν.
            let (s0, u0) = (s, spec.f.eval(s));
            let boundary = |v: f64| (dl - spec.drift * (spec.f.inverse(u0 + v) - s0)) / spec.nu;
            let (mut v, mut b) = (0.0f64, 0.0f64);
            let mut gap = dl / spec.nu;
            let tol = opts.gap_tol * gap;
            let mut round = 0usize;
            loop {
                let sv = if round == 0 { s0 } else { spec.f.inverse(u0 + v) };
                let mut slope = spec.f.derivative(sv);
                if !(slope > 1e-12) {
                    // Secant slope over the remaining deterministic step.
                    let ahead = sv + gap * spec.nu / spec.drift;
                    slope = (spec.f.eval(ahead) - spec.f.eval(sv)) / (ahead - sv);
                    fallbacks += 1;
                }
                let mu = spec.drift / (spec.nu * slope);
                let w = ig_sample(gap / mu, gap * gap, rng);
                v += w;
                b += gap - mu * w;
                gap = boundary(v) - b;
                round += 1;
                if !(gap > tol) {
                    break;
                }
                if round > opts.max_corrections {
                    capped += 1;
                    break;
                }
            }
            s = spec.f.inverse(u0 + v);
        }
        prev = prev.max(l);
        values.push(s);
    }
    if fallbacks > 0 {
        log::debug!("tangent sampler used {fallbacks} secant steps");
    }
    if capped > 0 {
        log::debug!("tangent sampler hit the correction cap {capped} times");
    }
    Ok(JumpPath { times: spec.times.clone(), values, levels: spec.levels.clone(), jumps: Vec::new(), complete: true })
}

/// Writes sample values, one per line, with a header.
pub fn write_samples(values: &[f64], header: &str, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{header}")?;
    for v in values {
        writeln!(f, "{v}")?;
    }
    Ok(())
}
