//! Burst diagnostics: embedded `Υⁿ` against the decorated limit `(X* − G₀, I*)`.

use std::time::Instant;

use rayon::prelude::*;

use super::report::{strictly_decreasing, Gate, LadderRow, RegimeReport};
use super::{Regime, RegimeConfig};
use crate::brownian::path_seed;
use crate::cadlag::{d_frak, decorated_limit_check, CadlagPath, DecoratedPath, Mark};
use crate::clock::{extract_bursts, simulate_path, ClockInput};
use crate::error::{Error, Result};
use crate::kernels::{cell_count, KernelSpec};
use crate::limit::{simulate_limit_grid, GridOptions, JumpPath, LimitSpec};

/// Per-path burst record.
#[derive(Debug, Clone, PartialEq)]
pub struct BurstPath {
    pub seed: u64,
    /// `d_frak` per ladder entry.
    pub d_frak: Vec<f64>,
    /// Largest gap between `F*` at jump endpoints and `X* − G₀` there.
    pub endpoint_error: f64,
    /// Gap between the limit record's decoration of the largest jump and `F*` recomputed from the clock path's Brownian record.
    pub record_error: f64,
    pub jumps: usize,
}

/// `(X* − G₀, I*)` on the limit's grid: a step base with a decoration at every increment.
pub fn burst_target(limit: &JumpPath) -> Result<DecoratedPath> {
    let base_values: Vec<f64> = limit.values.iter().zip(&limit.levels).map(|(x, l)| x - l.max(0.0)).collect();
    let base = CadlagPath::step(limit.times.clone(), base_values)?;
    let marks = limit
        .jumps
        .iter()
        .map(|j| {
            let (x, xl) = base.eval(j.t);
            Mark { t: j.t, lo: j.decoration.0.min(x).min(xl), hi: j.decoration.1.max(x).max(xl) }
        })
        .collect();
    DecoratedPath::new(base, marks)
}

fn endpoint_error(limit: &JumpPath) -> f64 {
    let base: Vec<f64> = limit.values.iter().zip(&limit.levels).map(|(x, l)| x - l.max(0.0)).collect();
    limit
        .jumps
        .iter()
        .map(|j| {
            let first = j.profile.first().expect("profile").1;
            let last = j.profile.last().expect("profile").1;
            (first - base[j.index - 1]).abs().max((last - base[j.index]).abs())
        })
        .fold(0.0, f64::max)
}

struct Setup {
    kernels: Vec<KernelSpec>,
    steps: Vec<f64>,
    spec_times: Vec<f64>,
    levels: Vec<f64>,
    clock_step: f64,
}

fn setup(cfg: &RegimeConfig) -> Result<Setup> {
    let (kernels, steps): (Vec<KernelSpec>, Vec<f64>) = match cfg.regime {
        Regime::CustomDirac => {
            let l1 = cfg.kernel.l1_norm()?;
            if (l1 - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("burst ladder needs a kernel of unit mass, got ‖K‖₁ = {l1}")));
            }
            cfg.ladder
                .iter()
                .map(|n| Ok((KernelSpec::dirac_scaled(cfg.kernel.clone(), *n)?, cfg.step_for(*n))))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .unzip()
        }
        Regime::HyperRough => cfg
            .ladder
            .iter()
            .map(|a| Ok((KernelSpec::fractional(1.0, *a)?, cfg.step_for(1.0))))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip(),
        other => {
            return Err(Error::Config(format!(
                "burst diagnostics run on custom_dirac or hyper_rough configs, not {}",
                other.name()
            )))
        }
    };
    let finest = steps.iter().copied().fold(f64::INFINITY, f64::min);
    let n = cell_count(finest, cfg.horizon);
    let spec_times: Vec<f64> = (0..=n).map(|k| k as f64 * finest).collect();
    let levels: Vec<f64> = spec_times.iter().map(|t| cfg.a.integral(*t) + cfg.b.integral(*t)).collect();
    let drift = 1.0 + cfg.lambda;
    let top = cfg.f.eval(levels[n] / drift);
    let clock_step = if top > 0.0 { top / cfg.clock_resolution } else { 1.0 / cfg.clock_resolution };
    Ok(Setup { kernels, steps, spec_times, levels, clock_step })
}

/// Matched clock and limit paths across the ladder; `d_frak` of the embedded `Υⁿ` against the decorated limit.
pub fn run_burst_diagnostics(cfg: &RegimeConfig) -> Result<(RegimeReport, Vec<BurstPath>)> {
    let started = Instant::now();
    let s = setup(cfg)?;
    let spec = LimitSpec::standard(cfg.f.clone(), cfg.lambda, cfg.nu, s.spec_times.clone(), s.levels.clone())?;
    let prepared = s
        .kernels
        .iter()
        .zip(&s.steps)
        .map(|(k, h)| {
            ClockInput::new(k.clone(), cfg.a.clone(), cfg.b.clone(), cfg.f.clone())
                .scheme(cfg.scheme)
                .seed(cfg.seed)
                .rates(cfg.lambda, cfg.nu)
                .grid(cfg.horizon, *h)
                .clock_step(s.clock_step)
                .prepare()
        })
        .collect::<Result<Vec<_>>>()?;
    let records: Vec<(BurstPath, Vec<CadlagPath>, JumpPath)> = (0..cfg.burst_paths)
        .into_par_iter()
        .map(|i| {
            let seed = path_seed(cfg.seed, i as u64);
            let mut clock = prepared[0].brownian_clock(seed)?;
            let opts = GridOptions { jump_threshold: 0.0, ..GridOptions::default() };
            let limit = simulate_limit_grid(&spec, &mut clock, opts)?;
            if !limit.complete {
                return Err(Error::Budget(format!("limit path {i} ran out of clock cells")));
            }
            let target = burst_target(&limit)?;
            let mut d = Vec::with_capacity(prepared.len());
            let mut embedded = Vec::with_capacity(prepared.len());
            let mut record_error = 0.0;
            for (k, p) in prepared.iter().enumerate() {
                let path = simulate_path(p, seed)?;
                let bursts = extract_bursts(&path, p)?;
                let ups = CadlagPath::continuous(p.times(), bursts.upsilon)?;
                d.push(d_frak(&DecoratedPath::embed(ups.clone()), &target));
                embedded.push(ups);
                if k + 1 == prepared.len() {
                    record_error = record_check(&limit, &path.clock_times, &path.clock_values, cfg)?;
                }
            }
            let bp =
                BurstPath { seed, d_frak: d, endpoint_error: endpoint_error(&limit), record_error, jumps: limit.jumps.len() };
            Ok((bp, embedded, limit))
        })
        .collect::<Result<_>>()?;
    let mut report =
        RegimeReport::new(&format!("bursts_{}", cfg.regime.name()), if cfg.regime == Regime::HyperRough { "alpha" } else { "n" });
    let count = records.len() as f64;
    for (k, &param) in cfg.ladder.iter().enumerate() {
        let mean = records.iter().map(|r| r.0.d_frak[k]).sum::<f64>() / count;
        report.rows.push(LadderRow {
            param,
            step: s.steps[k],
            paths: records.len(),
            marginals: Vec::new(),
            m1: None,
            d_frak: Some(mean),
            moments: Vec::new(),
        });
    }
    let series: Vec<f64> = report.rows.iter().filter_map(|r| r.d_frak).collect();
    report.gates.push(Gate::flag("d_frak_decreasing", strictly_decreasing(&series)));
    let endpoint = records.iter().map(|r| r.0.endpoint_error).fold(0.0, f64::max);
    report.gates.push(Gate::at_most("decoration_endpoints", endpoint, 1e-8));
    let record = records.iter().map(|r| r.0.record_error).fold(0.0, f64::max);
    report.gates.push(Gate::at_most("decoration_record", record, 1e-8));
    if let Some((_, seq, limit)) = records.first() {
        let target = burst_target(limit)?;
        let mut big: Vec<_> = limit.jumps.iter().map(|j| (j.right - j.left, j.t)).collect();
        big.sort_by(|a, b| b.0.total_cmp(&a.0));
        let probes: Vec<f64> = big.iter().take(3).map(|b| b.1).collect();
        let check = decorated_limit_check(seq, &target, &probes, &[0.2, 0.1, 0.05]);
        for row in &check.rows {
            report.notes.push(format!("decorated_check t={} tails={:?} decays={}", row.t, row.tail, row.decays));
        }
    }
    report.runtime_seconds = started.elapsed().as_secs_f64();
    Ok((report, records.into_iter().map(|r| r.0).collect()))
}

/// Recomputes the range of `F*` over the largest limit jump from the clock path's own Brownian record.
fn record_check(limit: &JumpPath, clock_times: &[f64], clock_values: &[f64], cfg: &RegimeConfig) -> Result<f64> {
    let Some(j) = limit.jumps.iter().max_by(|a, b| (a.right - a.left).total_cmp(&(b.right - b.left))) else {
        return Ok(0.0);
    };
    let (ul, ur) = (cfg.f.eval(j.left), cfg.f.eval(j.right));
    if clock_times.last().map_or(true, |u| *u < ur) {
        // The clock path stopped short of the jump; nothing to compare.
        return Ok(0.0);
    }
    let interp = |u: f64| {
        let i = clock_times.partition_point(|c| *c <= u).clamp(1, clock_times.len() - 1);
        let (c0, c1) = (clock_times[i - 1], clock_times[i]);
        clock_values[i - 1] + (clock_values[i] - clock_values[i - 1]) * (u - c0) / (c1 - c0)
    };
    let fstar = |s: f64, w: f64| cfg.nu * w - cfg.lambda * s;
    let mut lo = fstar(j.left, interp(ul)).min(fstar(j.right, interp(ur)));
    let mut hi = fstar(j.left, interp(ul)).max(fstar(j.right, interp(ur)));
    for (u, w) in clock_times.iter().zip(clock_values).filter(|(u, _)| **u > ul && **u < ur) {
        let v = fstar(cfg.f.inverse(*u), *w);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo - j.decoration.0).abs().max((hi - j.decoration.1).abs()))
}
