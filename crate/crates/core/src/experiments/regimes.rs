//! Fast, large-time and hyper-rough ladders.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use super::report::{strictly_decreasing, Gate, LadderRow, Marginal, RegimeReport};
use super::{Regime, RegimeConfig};
use crate::brownian::{path_seed, BrownianClock};
use crate::cadlag::{m1_distance_up, CadlagPath};
use crate::clock::{simulate_many, simulate_path, ClockInput, PreparedInput, Source};
use crate::curves::Curve;
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::limit::{ig_cdf, simulate_limit_grid, GridOptions, LimitSpec};
use crate::stats::{ks_one_sample, ks_two_sample, mc_mean, mc_variance, Sample};
use crate::timechange::TimeChangeFn;

/// Salt for oracle streams that must not share the clock's Brownian motion.
const ORACLE_SALT: u64 = 0x6f72_6163_6c65;

/// Limit of the clock marginals `X_{s·t}/v` at probe `t`:
/// `inf{drift·s − νW_{f(s)} > level(t)}`.
#[derive(Clone)]
pub(crate) struct LimitLaw {
    pub f: TimeChangeFn,
    pub drift: f64,
    pub rate: f64,
    pub nu: f64,
    pub level: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub time_scale: f64,
    pub value_scale: f64,
    /// The limit is driven by the clock's own Brownian motion.
    pub matched: bool,
}

impl LimitLaw {
    fn spec(&self, times: Vec<f64>) -> Result<LimitSpec> {
        let levels = times.iter().map(|t| (self.level)(*t)).collect();
        LimitSpec::with_drift(self.f.clone(), self.drift, self.rate, self.nu, times, levels)
    }

    /// Clock step putting `resolution` nodes across the deterministic limit range.
    pub fn clock_step(&self, horizon: f64, resolution: f64) -> f64 {
        let top = self.f.eval((self.level)(horizon) / self.drift);
        if top > 0.0 {
            top / resolution
        } else {
            1.0 / resolution
        }
    }
}

struct PathSummary {
    seed: u64,
    values: Vec<f64>,
    m_t: f64,
    fx_t: f64,
    monotone: bool,
}

/// Simulates one ladder point and compares its marginals with `law`.
pub(crate) fn ladder_row(
    cfg: &RegimeConfig,
    param: f64,
    input: ClockInput,
    law: &LimitLaw,
) -> Result<(LadderRow, Arc<PreparedInput>)> {
    let p = input.prepare()?;
    let probes = cfg.probes.clone();
    let ts = law.time_scale;
    let vs = law.value_scale;
    let f = p.input.f.clone();
    let summaries = simulate_many(&p, cfg.paths, |c| PathSummary {
        seed: c.seed,
        values: probes.iter().map(|t| c.value_at(ts * t) / vs).collect(),
        m_t: *c.m.last().expect("non-empty"),
        fx_t: f.eval(*c.x.last().expect("non-empty")),
        monotone: c.is_monotone(),
    })?;
    let needs_oracle = law.nu > 0.0 && law.f.affine_slope().is_none();
    let oracle: Option<Vec<Vec<f64>>> = if needs_oracle {
        let spec = law.spec(probes.clone())?;
        let step = law.clock_step(*probes.last().expect("probes"), cfg.clock_resolution);
        Some(
            summaries
                .par_iter()
                .enumerate()
                .map(|(i, s)| {
                    let mut clock = if law.matched {
                        p.brownian_clock(s.seed)?
                    } else {
                        BrownianClock::new(step, path_seed(cfg.seed ^ ORACLE_SALT, i as u64))?
                    };
                    let j = simulate_limit_grid(&spec, &mut clock, GridOptions::default())?;
                    if !j.complete {
                        return Err(Error::Budget(format!("limit oracle for path {i} ran out of clock cells")));
                    }
                    Ok(j.values)
                })
                .collect::<Result<_>>()?,
        )
    } else {
        None
    };
    let mut marginals = Vec::new();
    for (j, &t) in probes.iter().enumerate() {
        let xs: Vec<f64> = summaries.iter().map(|s| s.values[j]).collect();
        let level = (law.level)(t);
        let sample = Sample::new(xs)?.with_provenance(cfg.seed, "clock");
        let mean = sample.mean();
        let m = if law.nu == 0.0 {
            let v = level / law.drift;
            Marginal {
                t,
                statistic: (mean - v).abs() / v.abs().max(1e-300),
                reference: "deterministic".into(),
                mean,
                limit_mean: v,
            }
        } else if let Some(a1) = law.f.affine_slope() {
            let (mu, shape) = (level / law.drift, level * level / (law.nu * law.nu * a1));
            let ks = ks_one_sample(&sample, |x| ig_cdf(x, mu, shape))?;
            Marginal { t, statistic: ks.statistic, reference: format!("ig({mu},{shape})"), mean, limit_mean: mu }
        } else {
            let o = oracle.as_ref().expect("oracle computed");
            let lim = Sample::new(o.iter().map(|v| v[j]).collect())?;
            let ks = ks_two_sample(&sample, &lim)?;
            let kind = if law.matched { "matched_grid" } else { "grid" };
            Marginal { t, statistic: ks.statistic, reference: kind.into(), mean, limit_mean: lim.mean() }
        };
        marginals.push(m);
    }
    let mut moments = Vec::new();
    moments.push(Gate::flag("monotone", summaries.iter().all(|s| s.monotone)));
    if p.input.nu > 0.0 && cfg.paths >= 4 {
        let ms: Vec<f64> = summaries.iter().map(|s| s.m_t).collect();
        let fx: Vec<f64> = summaries.iter().map(|s| s.fx_t).collect();
        let (m_mean, m_se) = mc_mean(&ms)?;
        let (m_var, var_se) = mc_variance(&ms)?;
        let (f_mean, f_se) = mc_mean(&fx)?;
        moments.push(Gate::at_most("martingale_mean", m_mean.abs(), 3.0 * m_se));
        moments.push(Gate::at_most("martingale_variance", (m_var - f_mean).abs(), 3.0 * (var_se.powi(2) + f_se.powi(2)).sqrt()));
    }
    let m1 = if law.matched && law.time_scale == 1.0 && law.value_scale == 1.0 && law.nu > 0.0 {
        Some(matched_m1(&p, law)?)
    } else {
        None
    };
    let row = LadderRow { param, step: p.step, paths: cfg.paths, marginals, m1, d_frak: None, moments };
    Ok((row, p))
}

/// M1 distance between the first clock path and its matched limit path on the clock's grid.
fn matched_m1(p: &PreparedInput, law: &LimitLaw) -> Result<f64> {
    let seed = path_seed(p.input.seed, 0);
    let path = simulate_path(p, seed)?;
    let times = p.times();
    let mut clock = p.brownian_clock(seed)?;
    let j = simulate_limit_grid(&law.spec(times.clone())?, &mut clock, GridOptions::default())?;
    let x = CadlagPath::continuous(times.clone(), path.x.clone())?;
    let lim = CadlagPath::step(times, j.values)?;
    m1_distance_up(&x, &lim)
}

fn ladder_gates(report: &mut RegimeReport, probes: &[f64], threshold: f64) {
    for &t in probes {
        let series = report.statistic_series(t);
        report.gates.push(Gate::flag(format!("decreasing.t={t}"), strictly_decreasing(&series)));
        if let Some(last) = series.last() {
            report.gates.push(Gate::at_most(format!("final.t={t}"), *last, threshold));
        }
    }
}

fn check_nondecreasing(c: &Curve, horizon: f64, name: &str) -> Result<()> {
    let v: Vec<f64> = (0..=200).map(|k| c.value(horizon * k as f64 / 200.0)).collect();
    if v.windows(2).any(|w| w[1] < w[0] - 1e-12 * w[0].abs().max(1.0)) {
        return Err(Error::Config(format!("{name} must be non-decreasing")));
    }
    Ok(())
}

fn check_nonnegative(c: &Curve, horizon: f64, name: &str) -> Result<()> {
    if (0..=200).any(|k| c.value(horizon * k as f64 / 200.0) < 0.0) {
        return Err(Error::Config(format!("{name} must be nonnegative")));
    }
    Ok(())
}

fn expect_regime(cfg: &RegimeConfig, r: Regime) -> Result<()> {
    if cfg.regime != r {
        return Err(Error::Config(format!("config is for regime `{}`, not `{}`", cfg.regime.name(), r.name())));
    }
    Ok(())
}

/// Fast regime: input `(K, G₀ⁿ, f, nλ, nν)` with `g₀ⁿ = a + nK∗b`, limit
/// `inf{λs − νW_{f(s)} > b̄(t)}` on the clock's own Brownian motion.
pub fn run_fast_regime(cfg: &RegimeConfig) -> Result<RegimeReport> {
    expect_regime(cfg, Regime::Fast)?;
    let started = Instant::now();
    if !cfg.kernel.is_completely_monotone() {
        return Err(Error::Config(format!("fast regime needs a completely monotone kernel, got {}", cfg.kernel)));
    }
    if !(cfg.lambda > 0.0) {
        return Err(Error::Config("fast regime needs λ > 0".into()));
    }
    check_nondecreasing(&cfg.a, cfg.horizon, "a")?;
    check_nonnegative(&cfg.a, cfg.horizon, "a")?;
    check_nonnegative(&cfg.b, cfg.horizon, "b")?;
    let b = cfg.b.clone();
    let law = LimitLaw {
        f: cfg.f.clone(),
        drift: cfg.lambda,
        rate: cfg.lambda,
        nu: cfg.nu,
        level: Arc::new(move |t| b.integral(t)),
        time_scale: 1.0,
        value_scale: 1.0,
        matched: true,
    };
    let clock_step = law.clock_step(cfg.horizon, cfg.clock_resolution);
    let mut report = RegimeReport::new("fast", "n");
    for &n in &cfg.ladder {
        let input = cfg
            .template(cfg.kernel.clone(), cfg.a.clone(), cfg.b.scaled(n))
            .rates(n * cfg.lambda, n * cfg.nu)
            .grid(cfg.horizon, cfg.step_for(n))
            .clock_step(clock_step);
        let (row, _) = ladder_row(cfg, n, input, &law)?;
        log::info!("fast n={n}: {:?}", row.marginals.iter().map(|m| m.statistic).collect::<Vec<_>>());
        report.rows.push(row);
    }
    ladder_gates(&mut report, &cfg.probes, cfg.ks_threshold);
    report.runtime_seconds = started.elapsed().as_secs_f64();
    Ok(report)
}

/// Hyper-rough regime: `Kⁿ(t) = t^{αₙ−1}/Γ(αₙ)`, limit `inf{(1+λ)s − νW_{f(s)} > ā(t) + b̄(t)}`.
pub fn run_hyper_rough(cfg: &RegimeConfig) -> Result<RegimeReport> {
    expect_regime(cfg, Regime::HyperRough)?;
    let started = Instant::now();
    let (a, b) = (cfg.a.clone(), cfg.b.clone());
    let law = LimitLaw {
        f: cfg.f.clone(),
        drift: 1.0 + cfg.lambda,
        rate: cfg.lambda,
        nu: cfg.nu,
        level: Arc::new(move |t| a.integral(t) + b.integral(t)),
        time_scale: 1.0,
        value_scale: 1.0,
        matched: true,
    };
    let clock_step = law.clock_step(cfg.horizon, cfg.clock_resolution);
    let mut report = RegimeReport::new("hyper_rough", "alpha");
    for &alpha in &cfg.ladder {
        let kernel = KernelSpec::fractional(1.0, alpha)?;
        let input = cfg
            .template(kernel, cfg.a.clone(), cfg.b.clone())
            .rates(cfg.lambda, cfg.nu)
            .grid(cfg.horizon, cfg.step_for(1.0))
            .clock_step(clock_step);
        let (row, _) = ladder_row(cfg, alpha, input, &law)?;
        log::info!("hyper-rough α={alpha}: {:?}", row.marginals.iter().map(|m| m.statistic).collect::<Vec<_>>());
        report.rows.push(row);
    }
    ladder_gates(&mut report, &cfg.probes, cfg.ks_threshold);
    report.runtime_seconds = started.elapsed().as_secs_f64();
    Ok(report)
}

/// Large-time regime for the integrated CIR clock: kernel `e^{−λt}`, `g₀ = θ + (Y₀−θ)e^{−λt}`,
/// clock run to `nT`. For `θ = 0` the limit of `X_{nt}` is `inf{λs − νW_{f(s)} > Y₀}`; for `θ > 0`
/// the limit of `X_{nt}/n` is `θt` (affine `f`) or `inf{λs − νW_{f(s)} > λθt}` (quadratic `f`).
pub fn run_large_time(cfg: &RegimeConfig) -> Result<RegimeReport> {
    expect_regime(cfg, Regime::LargeTime)?;
    let started = Instant::now();
    let kappa = cfg.lambda;
    if !(kappa > 0.0) {
        return Err(Error::Config("large-time regime needs λ > 0".into()));
    }
    if !(cfg.y0 >= 0.0 && cfg.theta >= 0.0) {
        return Err(Error::Config("Y₀ and θ must be nonnegative".into()));
    }
    let homogeneous_quadratic = matches!(cfg.f, TimeChangeFn::Power(p) if p == 2.0)
        || matches!(cfg.f, TimeChangeFn::LinearPlusQuadratic(a1, _) if a1 == 0.0);
    if cfg.theta > 0.0 && !cfg.f.is_affine() && !homogeneous_quadratic {
        return Err(Error::Config(format!(
            "the rescaling X_(nt)/n needs f affine or purely quadratic, got {}; the linear part of a mixed f does not survive it",
            cfg.f
        )));
    }
    let kernel = KernelSpec::exponential(1.0, -kappa)?;
    let g0 = Curve::constant(cfg.theta).plus(Curve::exponential(cfg.y0 - cfg.theta, -kappa));
    let mut report = RegimeReport::new("large_time", "n");
    for &n in &cfg.ladder {
        let (y0, theta) = (cfg.y0, cfg.theta);
        let law = if cfg.theta == 0.0 {
            LimitLaw {
                f: cfg.f.clone(),
                drift: kappa,
                rate: kappa,
                nu: cfg.nu,
                level: Arc::new(move |_| y0),
                time_scale: n,
                value_scale: 1.0,
                matched: true,
            }
        } else {
            LimitLaw {
                f: cfg.f.clone(),
                drift: kappa,
                rate: kappa,
                nu: if cfg.f.is_affine() { 0.0 } else { cfg.nu },
                level: Arc::new(move |t| kappa * theta * t),
                time_scale: n,
                value_scale: n,
                matched: false,
            }
        };
        let mut input = ClockInput::new(kernel.clone(), Curve::zero(), Curve::zero(), cfg.f.clone())
            .scheme(cfg.scheme)
            .seed(cfg.seed)
            .rates(0.0, cfg.nu)
            .grid(n * cfg.horizon, cfg.step_for(n));
        input.source = Source::Direct(g0.clone());
        let (row, _) = ladder_row(cfg, n, input, &law)?;
        log::info!("large-time n={n}: {:?}", row.marginals.iter().map(|m| m.statistic).collect::<Vec<_>>());
        report.rows.push(row);
    }
    if let Some(last) = report.rows.last() {
        for m in &last.marginals {
            let name = if cfg.theta > 0.0 && cfg.f.is_affine() { "mean_rel_dev" } else { "final" };
            let threshold = if name == "mean_rel_dev" { 0.02 } else { cfg.ks_threshold };
            report.gates.push(Gate::at_most(format!("{name}.t={}", m.t), m.statistic, threshold));
        }
    }
    if cfg.theta > 0.0 && !cfg.f.is_affine() {
        for &t in &cfg.probes {
            let series = report.statistic_series(t);
            report.gates.push(Gate::flag(format!("decreasing.t={t}"), strictly_decreasing(&series)));
        }
    }
    report.runtime_seconds = started.elapsed().as_secs_f64();
    Ok(report)
}
