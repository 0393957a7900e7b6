//! Reproducible regime experiments with persisted reports.
//!
//! Environment: `VCLOCK_OUT_DIR` overrides the output directory of every run and
//! `VCLOCK_THREADS` fixes the size of the worker pool.

mod bursts;
mod config;
mod figure;
mod regimes;
mod report;
mod selftest;

use std::path::PathBuf;

pub use bursts::{burst_target, run_burst_diagnostics, BurstPath};
pub use config::Config;
pub use figure::{figure1, Figure1Output};
pub use regimes::{run_fast_regime, run_hyper_rough, run_large_time};
pub use report::{non_increasing, strictly_decreasing, Gate, LadderRow, Marginal, RegimeReport};
pub use selftest::topology_selftest;

use crate::clock::{ClockInput, Scheme, Source};
use crate::curves::Curve;
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::timechange::TimeChangeFn;

pub const OUT_DIR_VAR: &str = "VCLOCK_OUT_DIR";
pub const THREADS_VAR: &str = "VCLOCK_THREADS";

/// Sizes the global worker pool from `VCLOCK_THREADS`; a no-op if unset or already built.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v.trim().parse().map_err(|e| Error::Config(format!("{THREADS_VAR}={v}: {e}")))?;
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("worker pool already initialised");
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Fast,
    LargeTime,
    HyperRough,
    CustomDirac,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Fast => "fast",
            Self::LargeTime => "large_time",
            Self::HyperRough => "hyper_rough",
            Self::CustomDirac => "custom_dirac",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "fast" => Ok(Self::Fast),
            "large_time" => Ok(Self::LargeTime),
            "hyper_rough" => Ok(Self::HyperRough),
            "custom_dirac" => Ok(Self::CustomDirac),
            other => Err(Error::Config(format!("unknown regime `{other}` (fast, large_time, hyper_rough, custom_dirac)"))),
        }
    }
}

/// Everything a regime run needs.
///
/// In the large-time regime `lambda` is the mean-reversion speed of the kernel
/// `e^{−λt}` and the clock itself runs with zero damping; `y0` and `theta` set
/// `g₀(t) = θ + (Y₀ − θ)e^{−λt}`.
#[derive(Debug, Clone)]
pub struct RegimeConfig {
    pub regime: Regime,
    /// `n` values, or `α` values in the hyper-rough regime.
    pub ladder: Vec<f64>,
    pub kernel: KernelSpec,
    pub a: Curve,
    pub b: Curve,
    pub f: TimeChangeFn,
    pub lambda: f64,
    pub nu: f64,
    pub horizon: f64,
    /// Fixed `Δ`; when absent `Δ = T/(step_factor·n)`.
    pub step: Option<f64>,
    pub step_factor: f64,
    pub scheme: Scheme,
    pub paths: usize,
    pub probes: Vec<f64>,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    /// Brownian clock nodes across the deterministic limit range.
    pub clock_resolution: f64,
    pub ks_threshold: f64,
    pub y0: f64,
    pub theta: f64,
    pub burst_paths: usize,
}

pub const CONFIG_KEYS: &[&str] = &[
    "regime",
    "ladder",
    "kernel",
    "a",
    "b",
    "f",
    "lambda",
    "nu",
    "horizon",
    "step",
    "step_factor",
    "scheme",
    "paths",
    "probes",
    "seed",
    "out",
    "clock_resolution",
    "ks_threshold",
    "y0",
    "theta",
    "burst_paths",
];

impl RegimeConfig {
    /// Desk-scale defaults for each regime.
    pub fn preset(regime: Regime) -> Self {
        let base = Self {
            regime,
            ladder: vec![4.0, 16.0, 64.0],
            kernel: KernelSpec::inverse_sqrt(),
            a: Curve::constant(1.0),
            b: Curve::zero(),
            f: TimeChangeFn::Identity,
            lambda: 1.0,
            nu: 1.0,
            horizon: 1.0,
            step: None,
            step_factor: 200.0,
            scheme: Scheme::TimeChange,
            paths: 5000,
            probes: vec![1.0],
            seed: 1,
            out_dir: None,
            clock_resolution: 4096.0,
            ks_threshold: 0.08,
            y0: 1.0,
            theta: 0.0,
            burst_paths: 20,
        };
        match regime {
            Regime::Fast => Self { b: Curve::exponential(100.0, -1.0), horizon: 0.1, probes: vec![0.05, 0.1], ..base },
            Regime::LargeTime => Self {
                kernel: KernelSpec::exponential(1.0, -1.0).expect("valid"),
                ladder: vec![2.0, 4.0, 8.0],
                step: Some(1e-2),
                paths: 10_000,
                ks_threshold: 0.05,
                ..base
            },
            Regime::HyperRough => Self { ladder: vec![0.5, 0.25, 0.1], step: Some(1e-3), ..base },
            Regime::CustomDirac => {
                Self { kernel: KernelSpec::exponential(1.0, -1.0).expect("valid"), paths: 20, burst_paths: 20, ..base }
            }
        }
    }

    /// Preset for `regime` (or the config's `regime` key) overridden by the config's keys.
    pub fn from_config(cfg: &Config) -> Result<Self> {
        cfg.check_keys(CONFIG_KEYS)?;
        let regime = Regime::parse(cfg.get_str("regime").ok_or_else(|| Error::Config("missing `regime`".into()))?)?;
        let mut c = Self::preset(regime);
        if let Some(v) = cfg.get_list("ladder")? {
            c.ladder = v;
        }
        if let Some(v) = cfg.get_str("kernel") {
            c.kernel = KernelSpec::parse_compact(v)?;
        }
        if let Some(v) = cfg.get_str("a") {
            c.a = Curve::parse(v)?;
        }
        if let Some(v) = cfg.get_str("b") {
            c.b = Curve::parse(v)?;
        }
        if let Some(v) = cfg.get_str("f") {
            c.f = TimeChangeFn::parse(v)?;
        }
        if let Some(v) = cfg.get_str("scheme") {
            c.scheme = Scheme::parse(v)?;
        }
        if let Some(v) = cfg.get_str("out") {
            c.out_dir = Some(PathBuf::from(v));
        }
        if let Some(v) = cfg.get_list("probes")? {
            c.probes = v;
        }
        c.step = cfg.get("step")?.or(c.step);
        c.lambda = cfg.get_or("lambda", c.lambda)?;
        c.nu = cfg.get_or("nu", c.nu)?;
        c.horizon = cfg.get_or("horizon", c.horizon)?;
        c.step_factor = cfg.get_or("step_factor", c.step_factor)?;
        c.paths = cfg.get_or("paths", c.paths)?;
        c.seed = cfg.get_or("seed", c.seed)?;
        c.clock_resolution = cfg.get_or("clock_resolution", c.clock_resolution)?;
        c.ks_threshold = cfg.get_or("ks_threshold", c.ks_threshold)?;
        c.y0 = cfg.get_or("y0", c.y0)?;
        c.theta = cfg.get_or("theta", c.theta)?;
        c.burst_paths = cfg.get_or("burst_paths", c.burst_paths)?;
        c.validate()?;
        Ok(c)
    }

    /// Config echo that reproduces this run.
    pub fn to_config(&self) -> Config {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let mut c = Config::default();
        c.set("regime", self.regime.name());
        c.set("ladder", list(&self.ladder));
        c.set("kernel", &self.kernel);
        c.set("a", &self.a);
        c.set("b", &self.b);
        c.set("f", &self.f);
        c.set("lambda", self.lambda);
        c.set("nu", self.nu);
        c.set("horizon", self.horizon);
        if let Some(s) = self.step {
            c.set("step", s);
        }
        c.set("step_factor", self.step_factor);
        c.set("scheme", self.scheme.name());
        c.set("paths", self.paths);
        c.set("probes", list(&self.probes));
        c.set("seed", self.seed);
        if let Some(o) = &self.out_dir {
            c.set("out", o.display());
        }
        c.set("clock_resolution", self.clock_resolution);
        c.set("ks_threshold", self.ks_threshold);
        c.set("y0", self.y0);
        c.set("theta", self.theta);
        c.set("burst_paths", self.burst_paths);
        c
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.ladder.is_empty() {
            return bad("empty ladder".into());
        }
        match self.regime {
            Regime::HyperRough => {
                if self.ladder.windows(2).any(|w| !(w[1] < w[0])) {
                    return bad("α ladder must be strictly decreasing".into());
                }
                if self.ladder.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
                    return bad("hyper-rough orders must lie in (0, 1); α = 1 is the Markovian clock".into());
                }
            }
            _ => {
                if self.ladder.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("n ladder must be strictly increasing".into());
                }
                if self.ladder.iter().any(|n| !(*n > 0.0)) {
                    return bad("ladder entries must be positive".into());
                }
            }
        }
        if self.probes.iter().any(|t| !(*t > 0.0 && *t <= self.horizon * (1.0 + 1e-12))) {
            return bad(format!("probe times must lie in (0, {}]", self.horizon));
        }
        if !(self.horizon > 0.0) || self.paths == 0 || !(self.clock_resolution >= 16.0) {
            return bad("need T > 0, paths > 0 and clock_resolution ≥ 16".into());
        }
        if !(self.lambda >= 0.0 && self.nu >= 0.0) {
            return bad("λ and ν must be nonnegative".into());
        }
        if let Some(s) = self.step {
            if !(s > 0.0) {
                return bad("step must be positive".into());
            }
        }
        Ok(())
    }

    /// `Δ` at ladder value `n`.
    pub fn step_for(&self, n: f64) -> f64 {
        self.step.unwrap_or(self.horizon / (self.step_factor * n))
    }

    /// Output directory: `VCLOCK_OUT_DIR`, then the config, then `runs/<regime>-seed<seed>`.
    pub fn output_dir(&self) -> PathBuf {
        if let Ok(v) = std::env::var(OUT_DIR_VAR) {
            return PathBuf::from(v);
        }
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from(format!("runs/{}-seed{}", self.regime.name(), self.seed)))
    }

    pub(crate) fn template(&self, kernel: KernelSpec, a: Curve, b: Curve) -> ClockInput {
        ClockInput::new(kernel, a, b, self.f.clone()).scheme(self.scheme).seed(self.seed)
    }
}

/// Runs the regime named by `cfg`, writes its report into [`RegimeConfig::output_dir`]
/// and returns the report with the written files.
pub fn run_regime(cfg: &RegimeConfig) -> Result<(RegimeReport, Vec<PathBuf>)> {
    let report = match cfg.regime {
        Regime::Fast => run_fast_regime(cfg)?,
        Regime::LargeTime => run_large_time(cfg)?,
        Regime::HyperRough => run_hyper_rough(cfg)?,
        Regime::CustomDirac => {
            let (r, bursts) = run_burst_diagnostics(cfg)?;
            let dir = cfg.output_dir();
            std::fs::create_dir_all(&dir)?;
            let mut body = String::from("path,seed");
            for n in &cfg.ladder {
                body.push_str(&format!(",d_frak_n{n}"));
            }
            body.push_str(",endpoint_error,record_error,jumps\n");
            for (i, b) in bursts.iter().enumerate() {
                body.push_str(&format!("{i},{}", b.seed));
                for d in &b.d_frak {
                    body.push_str(&format!(",{d}"));
                }
                body.push_str(&format!(",{},{},{}\n", b.endpoint_error, b.record_error, b.jumps));
            }
            std::fs::write(dir.join("bursts.csv"), body)?;
            r
        }
    };
    let mut files = report.write(cfg.output_dir(), &cfg.to_config().to_string())?;
    if cfg.regime == Regime::CustomDirac {
        files.push(cfg.output_dir().join("bursts.csv"));
    }
    Ok((report, files))
}

/// Keys accepted by [`clock_input_from_config`].
pub const SIMULATE_KEYS: &[&str] =
    &["kernel", "a", "b", "g0", "f", "lambda", "nu", "horizon", "step", "scheme", "seed", "paths", "clock_step", "out"];

/// Reads a clock input and a path count. `g0` (a curve for `g₀` itself) excludes `a` and `b`.
pub fn clock_input_from_config(cfg: &Config) -> Result<(ClockInput, usize)> {
    cfg.check_keys(SIMULATE_KEYS)?;
    let kernel = KernelSpec::parse_compact(cfg.get_str("kernel").ok_or_else(|| Error::Config("missing `kernel`".into()))?)?;
    let f = cfg.get_str("f").map(TimeChangeFn::parse).transpose()?.unwrap_or(TimeChangeFn::Identity);
    let curve = |k: &str| cfg.get_str(k).map(Curve::parse).transpose();
    let mut input = ClockInput::new(kernel, Curve::zero(), Curve::zero(), f);
    input.source = match (curve("g0")?, curve("a")?, curve("b")?) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => return Err(Error::Config("`g0` excludes `a` and `b`".into())),
        (Some(g), None, None) => Source::Direct(g),
        (None, a, b) => Source::Split { a: a.unwrap_or_else(Curve::zero), b: b.unwrap_or_else(Curve::zero) },
    };
    input = input
        .rates(cfg.get_or("lambda", 0.0)?, cfg.get_or("nu", 0.0)?)
        .grid(cfg.get_or("horizon", 1.0)?, cfg.get_or("step", 1e-3)?)
        .seed(cfg.get_or("seed", 0)?);
    if let Some(s) = cfg.get_str("scheme") {
        input = input.scheme(Scheme::parse(s)?);
    }
    if let Some(s) = cfg.get::<f64>("clock_step")? {
        input = input.clock_step(s);
    }
    input.validate()?;
    Ok((input, cfg.get_or("paths", 1)?))
}
