//! Volterra clock simulation
//! `X = G₀ + K∗(−λX + νW_{f(X)})` by an SDE scheme (square-integrable kernels)
//! and by a time-change scheme (any locally integrable kernel).

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::brownian::{path_seed, BrownianClock};
use crate::convolution::ConvolutionPlan;
use crate::curves::Curve;
use crate::error::{invalid, Error, Result};
use crate::kernels::{cell_count, discretize, KernelGrid, KernelSpec};
use crate::resolvent::deconvolve_first_kind;
use crate::timechange::TimeChangeFn;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Sde,
    TimeChange,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Sde => "sde",
            Scheme::TimeChange => "timechange",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sde" => Ok(Scheme::Sde),
            "timechange" | "time-change" | "tc" => Ok(Scheme::TimeChange),
            other => Err(Error::Parse(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Where `g₀` comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    /// `g₀ = a + K∗b`.
    Split { a: Curve, b: Curve },
    /// `g₀` given directly.
    Direct(Curve),
}

/// Brownian clock grid: base step (default from a deterministic run) and dyadic level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockGrid {
    pub step: Option<f64>,
    pub level: u32,
}

impl Default for ClockGrid {
    fn default() -> Self {
        Self { step: None, level: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct ClockInput {
    pub kernel: KernelSpec,
    pub source: Source,
    pub f: TimeChangeFn,
    pub lambda: f64,
    pub nu: f64,
    pub horizon: f64,
    pub step: f64,
    pub seed: u64,
    pub scheme: Scheme,
    pub clock: ClockGrid,
}

impl ClockInput {
    pub fn new(kernel: KernelSpec, a: Curve, b: Curve, f: TimeChangeFn) -> Self {
        Self {
            kernel,
            source: Source::Split { a, b },
            f,
            lambda: 0.0,
            nu: 0.0,
            horizon: 1.0,
            step: 1e-3,
            seed: 0,
            scheme: Scheme::TimeChange,
            clock: ClockGrid::default(),
        }
    }

    pub fn rates(mut self, lambda: f64, nu: f64) -> Self {
        self.lambda = lambda;
        self.nu = nu;
        self
    }

    pub fn grid(mut self, horizon: f64, step: f64) -> Self {
        self.horizon = horizon;
        self.step = step;
        self
    }

    pub fn scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn clock_step(mut self, step: f64) -> Self {
        self.clock.step = Some(step);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.nu >= 0.0 && self.lambda.is_finite() && self.nu.is_finite()) {
            return Err(invalid("λ and ν must be finite and nonnegative"));
        }
        if !(self.step > 0.0 && self.horizon >= self.step * (1.0 - 1e-12)) {
            return Err(invalid(format!("need 0 < Δ ≤ T, got Δ = {}, T = {}", self.step, self.horizon)));
        }
        if let Some(s) = self.clock.step {
            if !(s > 0.0) {
                return Err(invalid("clock step must be positive"));
            }
        }
        Ok(())
    }

    /// Precomputes the grid, `g₀`, `G₀`, kernel masses and the clock step.
    pub fn prepare(&self) -> Result<Arc<PreparedInput>> {
        PreparedInput::new(self).map(Arc::new)
    }
}

/// Deterministic data shared by all paths of one input.
#[derive(Debug)]
pub struct PreparedInput {
    pub input: ClockInput,
    pub steps: usize,
    pub step: f64,
    /// `g₀(t_k)`.
    pub g0: Vec<f64>,
    /// `G₀(t_k)`.
    pub big_g0: Vec<f64>,
    pub kernel_grid: KernelGrid,
    pub plan: Arc<ConvolutionPlan>,
    pub clock_step: f64,
}

impl PreparedInput {
    fn new(input: &ClockInput) -> Result<Self> {
        input.validate()?;
        let h = input.step;
        let n = cell_count(h, input.horizon);
        let kernel_grid = discretize(&input.kernel, h, (n + 1) as f64 * h)?;
        let plan = Arc::new(ConvolutionPlan::new(&input.kernel, h, n)?);
        let times: Vec<f64> = (0..=n).map(|k| k as f64 * h).collect();
        let (g0, big_g0) = match &input.source {
            Source::Direct(g) => (times.iter().map(|&t| g.value(t)).collect(), times.iter().map(|&t| g.integral(t)).collect()),
            Source::Split { a, b } => split_input(a, b, &kernel_grid, &times),
        };
        let scale = big_g0.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if big_g0.windows(2).any(|w| w[1] < w[0] - 1e-10 * scale) || big_g0[0].abs() > 1e-12 {
            return Err(invalid("G₀ must start at 0 and be non-decreasing"));
        }
        if let Source::Split { a, b } = &input.source {
            if times.iter().any(|&t| a.value(t) < 0.0 || b.value(t) < 0.0) {
                return Err(invalid("input pieces a and b must be nonnegative"));
            }
        }
        let mut prepared = Self { input: input.clone(), steps: n, step: h, g0, big_g0, kernel_grid, plan, clock_step: 1.0 };
        prepared.clock_step = match input.clock.step {
            Some(s) => s,
            None => {
                let x_est = deterministic_path(&prepared).last().copied().unwrap_or(0.0);
                let fx = input.f.eval(x_est.max(prepared.big_g0[n]));
                if fx > 0.0 {
                    fx / 2048.0
                } else {
                    h
                }
            }
        };
        Ok(prepared)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| k as f64 * self.step).collect()
    }

    pub fn brownian_clock(&self, seed: u64) -> Result<BrownianClock> {
        BrownianClock::refined(self.clock_step, self.input.clock.level, seed)
    }
}

fn split_input(a: &Curve, b: &Curve, kg: &KernelGrid, times: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = times.len() - 1;
    let mut g0: Vec<f64> = times.iter().map(|&t| a.value(t)).collect();
    let mut big: Vec<f64> = times.iter().map(|&t| a.integral(t)).collect();
    if b.is_zero() {
        return (g0, big);
    }
    let bmid: Vec<f64> = (0..n).map(|i| 0.5 * (b.value(times[i]) + b.value(times[i + 1]))).collect();
    let bbar: Vec<f64> = times.iter().map(|&t| b.integral(t)).collect();
    let kbar = &kg.cumulative;
    for k in 1..=n {
        let mut conv = 0.0;
        let mut cum = 0.0;
        for i in 0..k {
            conv += kg.masses[k - 1 - i] * bmid[i];
            cum += (bbar[i + 1] - bbar[i]) * 0.5 * (kbar[k - i] + kbar[k - 1 - i]);
        }
        g0[k] += conv;
        big[k] += cum;
    }
    (g0, big)
}

/// `X` with `ν = 0`, from the time-change recursion.
pub fn deterministic_path(p: &PreparedInput) -> Vec<f64> {
    let m0 = p.plan.masses()[0];
    let lambda = p.input.lambda;
    let mut conv = p.plan.convolver();
    let mut x = vec![0.0; p.steps + 1];
    for k in 0..p.steps {
        let c = p.big_g0[k + 1] + conv.value(1);
        x[k + 1] = (c / (1.0 + lambda * m0)).max(x[k]);
        conv.push(-lambda * x[k + 1]);
    }
    x
}

/// A simulated clock.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockPath {
    pub step: f64,
    pub x: Vec<f64>,
    pub m: Vec<f64>,
    /// Clock times `s_i` (sorted) and Brownian values `W(s_i)`.
    pub clock_times: Vec<f64>,
    pub clock_values: Vec<f64>,
    pub scheme: Scheme,
    pub seed: u64,
    /// Time-change scheme: clock cells scanned by the root search; SDE: floor events.
    pub iterations: u64,
    pub max_iterations_per_step: u64,
}

impl ClockPath {
    pub fn times(&self) -> Vec<f64> {
        (0..self.x.len()).map(|k| k as f64 * self.step).collect()
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let k = ((t / self.step).round() as usize).min(self.x.len() - 1);
        self.x[k]
    }

    pub fn is_monotone(&self) -> bool {
        self.x[0] == 0.0 && self.x.windows(2).all(|w| w[1] >= w[0])
    }

    /// Writes `t,X,M,Upsilon` rows; `upsilon` may be empty.
    pub fn write_csv(&self, upsilon: &[f64], path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "t,X,M,Upsilon")?;
        for k in 0..self.x.len() {
            let u = upsilon.get(k).map(|v| v.to_string()).unwrap_or_default();
            writeln!(f, "{},{},{},{}", k as f64 * self.step, self.x[k], self.m[k], u)?;
        }
        Ok(())
    }
}

/// One path of the SDE scheme for `Y = dX/dt`.
pub fn sde_path(p: &PreparedInput, seed: u64) -> Result<ClockPath> {
    let inp = &p.input;
    if !inp.kernel.is_square_integrable() {
        return Err(Error::SchemeMismatch(format!("kernel {} is not square-integrable; use the time-change scheme", inp.kernel)));
    }
    let h = p.step;
    let sq = h.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut conv = p.plan.convolver();
    let n = p.steps;
    let mut x = Vec::with_capacity(n + 1);
    let mut m = Vec::with_capacity(n + 1);
    let mut ct = Vec::with_capacity(n + 1);
    let (mut xk, mut mk, mut yk) = (0.0, 0.0, p.g0[0].max(0.0));
    let mut floors = 0u64;
    x.push(0.0);
    m.push(0.0);
    ct.push(0.0);
    for k in 0..n {
        let z: f64 = StandardNormal.sample(&mut rng);
        let incr = if inp.nu == 0.0 { 0.0 } else { (inp.f.derivative(xk) * yk).max(0.0).sqrt() * sq * z };
        conv.push(-inp.lambda * yk * h + inp.nu * incr);
        xk += yk * h;
        mk += incr;
        let y = p.g0[k + 1] + conv.value(0) / h;
        if y < 0.0 {
            floors += 1;
        }
        yk = y.max(0.0);
        x.push(xk);
        m.push(mk);
        ct.push(inp.f.eval(xk));
    }
    Ok(ClockPath {
        step: h,
        clock_values: m.clone(),
        x,
        m,
        clock_times: ct,
        scheme: Scheme::Sde,
        seed,
        iterations: floors,
        max_iterations_per_step: 0,
    })
}

/// Smallest `x ∈ [lo, hi]` with `a x² + b x + c ≥ 0`, given `q(lo) < 0`.
pub(crate) fn first_upcrossing(a: f64, b: f64, c: f64, lo: f64, hi: f64) -> Option<f64> {
    let q = |x: f64| (a * x + b) * x + c;
    let end = q(hi);
    if a == 0.0 {
        return (end >= 0.0).then(|| (-c / b).clamp(lo, hi));
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return (end >= 0.0).then_some(hi);
    }
    let sq = disc.sqrt();
    let t = -0.5 * (b + b.signum() * sq);
    let (mut r1, mut r2) = (t / a, if t != 0.0 { c / t } else { t / a });
    if r1 > r2 {
        std::mem::swap(&mut r1, &mut r2);
    }
    let root = [r1, r2].into_iter().find(|r| *r >= lo && *r <= hi);
    match root {
        Some(r) => Some(r),
        None if end >= 0.0 => Some(bisect(q, lo, hi)),
        None => None,
    }
}

fn bisect(q: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if q(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Smallest `x ≥ x0` with `(1 + λm₀)x − νm₀ W(f(x)) ≥ level`, scanning Brownian clock cells.
fn solve_step(
    f: &TimeChangeFn,
    clock: &mut BrownianClock,
    x0: f64,
    level: f64,
    lambda_m0: f64,
    nu_m0: f64,
) -> Result<(f64, u64)> {
    let slope = 1.0 + lambda_m0;
    if nu_m0 == 0.0 {
        return Ok(((level / slope).max(x0), 0));
    }
    let delta = clock.step();
    let s0 = f.eval(x0);
    clock.extend_to(s0 + delta)?;
    if slope * x0 - nu_m0 * clock.value_within(s0) >= level {
        return Ok((x0, 0));
    }
    let quad = match f {
        TimeChangeFn::Identity => Some((1.0, 0.0)),
        TimeChangeFn::Linear(a) => Some((*a, 0.0)),
        TimeChangeFn::LinearPlusQuadratic(a, b) => Some((*a, *b)),
        TimeChangeFn::Power(p) if *p == 1.0 => Some((1.0, 0.0)),
        _ => None,
    };
    let mut j = clock.cell_of(s0);
    let mut lo = x0;
    let mut scanned = 0u64;
    loop {
        scanned += 1;
        let s_hi = (j + 1) as f64 * delta;
        clock.extend_to(s_hi)?;
        let hi = f.inverse(s_hi).max(lo);
        let w = clock.values();
        let (wl, wr) = (w[j], w[j + 1]);
        let sigma = (wr - wl) / delta;
        let base = wl - sigma * j as f64 * delta;
        // φ(x) − level = slope·x − νm₀(base + σ f(x)) − level
        let found = if let Some((a1, a2)) = quad {
            first_upcrossing(-nu_m0 * sigma * a2, slope - nu_m0 * sigma * a1, -nu_m0 * base - level, lo, hi)
        } else {
            let phi = |x: f64| slope * x - nu_m0 * (base + sigma * f.eval(x)) - level;
            let mut prev = lo;
            let mut hit = None;
            for i in 1..=16 {
                let xi = lo + (hi - lo) * i as f64 / 16.0;
                if phi(xi) >= 0.0 {
                    hit = Some(bisect(&phi, prev, xi));
                    break;
                }
                prev = xi;
            }
            hit
        };
        if let Some(x) = found {
            return Ok((x.max(x0), scanned));
        }
        lo = hi;
        j += 1;
    }
}

/// One path of the time-change scheme.
pub fn timechange_path(p: &PreparedInput, seed: u64) -> Result<ClockPath> {
    let inp = &p.input;
    let mut clock = p.brownian_clock(seed)?;
    let m0 = p.plan.masses()[0];
    let mut conv = p.plan.convolver();
    let n = p.steps;
    let mut x = Vec::with_capacity(n + 1);
    let mut m = Vec::with_capacity(n + 1);
    x.push(0.0);
    m.push(0.0);
    let (mut total, mut worst) = (0u64, 0u64);
    for k in 0..n {
        let level = p.big_g0[k + 1] + conv.value(1);
        let (xn, scanned) = solve_step(&inp.f, &mut clock, x[k], level, inp.lambda * m0, inp.nu * m0).map_err(|e| match e {
            Error::Budget(msg) => Error::NonConvergence { step: k, time: (k + 1) as f64 * p.step, detail: msg },
            other => other,
        })?;
        total += scanned;
        worst = worst.max(scanned);
        let wn = if inp.nu == 0.0 { 0.0 } else { clock.value(inp.f.eval(xn))? };
        conv.push(-inp.lambda * xn + inp.nu * wn);
        x.push(xn);
        m.push(wn);
    }
    let fx = inp.f.eval(x[n]);
    let keep = if inp.nu == 0.0 { 1 } else { (clock.cell_of(fx) + 2).min(clock.values().len()) };
    let clock_times = (0..keep).map(|i| i as f64 * clock.step()).collect();
    let clock_values = clock.values()[..keep].to_vec();
    Ok(ClockPath {
        step: p.step,
        x,
        m,
        clock_times,
        clock_values,
        scheme: Scheme::TimeChange,
        seed,
        iterations: total,
        max_iterations_per_step: worst,
    })
}

/// One path with the input's scheme.
pub fn simulate_path(p: &PreparedInput, seed: u64) -> Result<ClockPath> {
    match p.input.scheme {
        Scheme::Sde => sde_path(p, seed),
        Scheme::TimeChange => timechange_path(p, seed),
    }
}

/// `n_paths` paths in parallel; path `i` uses `path_seed(input.seed, i)`.
pub fn simulate_many<T: Send>(
    p: &PreparedInput,
    n_paths: usize,
    reduce: impl Fn(ClockPath) -> T + Sync + Send,
) -> Result<Vec<T>> {
    (0..n_paths).into_par_iter().map(|i| simulate_path(p, path_seed(p.input.seed, i as u64)).map(&reduce)).collect()
}

pub fn simulate_sde(input: &ClockInput, n_paths: usize) -> Result<Vec<ClockPath>> {
    let p = input.clone().scheme(Scheme::Sde).prepare()?;
    simulate_many(&p, n_paths, |c| c)
}

pub fn simulate_timechange(input: &ClockInput, n_paths: usize) -> Result<Vec<ClockPath>> {
    let p = input.clone().scheme(Scheme::TimeChange).prepare()?;
    simulate_many(&p, n_paths, |c| c)
}

/// The driving force `Υ = νW_{f(X)} − λX`, its clock profile and a deconvolution estimate.
#[derive(Debug, Clone)]
pub struct Bursts {
    /// `Υ(t_k)`.
    pub upsilon: Vec<f64>,
    /// Clock-coordinate grid `s` covering `[0, X_T]`.
    pub profile_s: Vec<f64>,
    /// `F(s) = νW(f(s)) − λs`.
    pub profile: Vec<f64>,
    /// Cell values of `Υ̂` solving `K∗Υ̂ = X − G₀`.
    pub upsilon_hat: Vec<f64>,
}

pub fn extract_bursts(path: &ClockPath, p: &PreparedInput) -> Result<Bursts> {
    let inp = &p.input;
    let upsilon: Vec<f64> = path.x.iter().zip(&path.m).map(|(x, m)| inp.nu * m - inp.lambda * x).collect();
    let mut profile_s = Vec::with_capacity(path.clock_times.len());
    let mut profile = Vec::with_capacity(path.clock_times.len());
    let xt = *path.x.last().expect("non-empty");
    for (c, w) in path.clock_times.iter().zip(&path.clock_values) {
        let s = inp.f.inverse(*c);
        if s > xt && !profile_s.is_empty() {
            break;
        }
        profile_s.push(s);
        profile.push(inp.nu * w - inp.lambda * s);
    }
    let diff: Vec<f64> = path.x.iter().zip(&p.big_g0).map(|(x, g)| x - g).collect();
    let upsilon_hat = deconvolve_first_kind(&p.kernel_grid, &diff)?;
    Ok(Bursts { upsilon, profile_s, profile, upsilon_hat })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncrementBoundReport {
    pub pairs_checked: usize,
    pub violations: usize,
    pub worst_excess: f64,
}

/// Checks `X_t − X_s ≤ G₀(t) − G₀(s) + 2ν‖M‖_∞ K̄(t−s) + tol` over all grid pairs.
pub fn pathwise_increment_bound_check(path: &ClockPath, p: &PreparedInput, tol: f64) -> IncrementBoundReport {
    let sup_m = path.m.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let c = 2.0 * p.input.nu * sup_m;
    let kbar = &p.kernel_grid.cumulative;
    let n = path.x.len();
    let (mut pairs, mut violations, mut worst) = (0usize, 0usize, f64::NEG_INFINITY);
    for s in 0..n {
        for t in s + 1..n {
            let bound = p.big_g0[t] - p.big_g0[s] + c * kbar[t - s] + tol;
            let excess = path.x[t] - path.x[s] - bound;
            pairs += 1;
            worst = worst.max(excess);
            if excess > 0.0 {
                violations += 1;
            }
        }
    }
    IncrementBoundReport { pairs_checked: pairs, violations, worst_excess: worst }
}

/// Writes a batch manifest describing the input of a set of path dumps.
pub fn write_manifest(input: &ClockInput, n_paths: usize, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "seed = {}", input.seed)?;
    writeln!(f, "scheme = {}", input.scheme.name())?;
    writeln!(f, "paths = {n_paths}")?;
    writeln!(f, "kernel = {}", input.kernel)?;
    match &input.source {
        Source::Split { a, b } => {
            writeln!(f, "a = {a}")?;
            writeln!(f, "b = {b}")?;
        }
        Source::Direct(g) => writeln!(f, "g0 = {g}")?,
    }
    writeln!(f, "f = {}", input.f)?;
    writeln!(f, "lambda = {}", input.lambda)?;
    writeln!(f, "nu = {}", input.nu)?;
    writeln!(f, "T = {}", input.horizon)?;
    writeln!(f, "dt = {}", input.step)?;
    Ok(())
}
