//! Deterministic topology checks on synthetic paths.

use super::report::Gate;
use crate::cadlag::*;
use crate::error::Result;

fn ramp(n: f64) -> Result<CadlagPath> {
    CadlagPath::continuous(vec![0.0, 0.5 - 0.5 / n, 0.5 + 0.5 / n, 1.0], vec![0.0, 0.0, 1.0, 1.0])
}

fn unit_step(at: f64) -> Result<CadlagPath> {
    CadlagPath::step(vec![0.0, at, 1.0], vec![0.0, 1.0, 1.0])
}

/// Deterministic pseudo-random monotone path.
fn lcg_path(seed: u64) -> Result<CadlagPath> {
    let mut s = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1;
    let mut next = || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (s >> 11) as f64 / (1u64 << 53) as f64
    };
    let k = 3 + (next() * 5.0) as usize;
    let mut ts = vec![0.0];
    let mut ls = vec![0.0];
    let mut rs = vec![0.0];
    let mut v = 0.0;
    for i in 1..=k {
        ts.push(i as f64 / k as f64);
        v += 0.5 * next();
        ls.push(v);
        v += if next() < 0.5 { next() } else { 0.0 };
        rs.push(v);
    }
    CadlagPath::new(ts, ls, rs)
}

/// Runs the deterministic topology suite; every gate must pass.
pub fn topology_selftest() -> Result<Vec<Gate>> {
    let mut g = Vec::new();
    let close = |a: f64, b: f64, tol: f64| (a - b).abs() <= tol;

    // Composition.
    let phi = ContinuousPath::new(vec![0.0, 0.3, 0.7, 2.0], vec![0.0, 1.0, -1.0, 0.5])?;
    let tau = CadlagPath::new(vec![0.0, 0.4, 1.0], vec![0.0, 0.5, 2.0], vec![0.0, 0.9, 2.0])?;
    let x = TimeChangedPath::new(phi.clone(), tau.clone())?.compose();
    let err = (0..=1000).map(|k| k as f64 / 1000.0).map(|t| (x.value(t) - phi.eval(tau.value(t))).abs()).fold(0.0, f64::max);
    g.push(Gate::at_most("compose_exact", err, 1e-13));
    let id = ContinuousPath::new(vec![0.0, 1.0], vec![0.0, 1.0])?;
    let stepped = TimeChangedPath::new(id, unit_step(0.5)?)?.compose();
    g.push(Gate::flag("compose_step", stepped == unit_step(0.5)?));
    let jump = CadlagPath::step(vec![0.0, 0.5, 1.0], vec![0.2, 0.8, 0.8])?;
    let a = ContinuousPath::from_fn(1.0, 100, |s| s * s)?;
    let b = ContinuousPath::from_fn(1.0, 100, |s| if s > 0.2 && s < 0.8 { s * s + (5.0 * (s - 0.2)).sin() } else { s * s })?;
    let xa = TimeChangedPath::new(a, jump.clone())?.compose();
    let xb = TimeChangedPath::new(b, jump)?.compose();
    let err = [0.0, 0.3, 0.5, 0.7, 1.0].iter().map(|t| (xa.value(*t) - xb.value(*t)).abs()).fold(0.0, f64::max);
    g.push(Gate::at_most("compose_shared_base", err, 1e-14));

    // M1 on D↑.
    let step = unit_step(0.5)?;
    g.push(Gate::at_most("m1_self", m1_distance_up(&step, &step)?, 0.0));
    let ladder: Vec<f64> = [2.0, 8.0, 32.0, 128.0].iter().map(|n| m1_distance_up(&ramp(*n)?, &step)).collect::<Result<_>>()?;
    g.push(Gate::flag("m1_ramp_decay", ladder.windows(2).all(|w| w[1] < w[0])));
    let d = m1_distance_up(&step, &unit_step(0.55)?)?;
    g.push(Gate::flag("m1_shifted_step", close(d, 0.05, 1e-12)));
    let paths: Vec<CadlagPath> = (0..12).map(lcg_path).collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for x in &paths {
        for y in &paths {
            let dxy = m1_distance_up(x, y)?;
            worst = worst.max((dxy - m1_distance_up(y, x)?).abs());
            for z in &paths {
                worst = worst.max(dxy - m1_distance_up(x, z)? - m1_distance_up(z, y)?);
            }
        }
    }
    g.push(Gate::at_most("m1_pseudometric", worst, 1e-12));

    // Product distance.
    let phi = ContinuousPath::from_fn(2.0, 40, |s| s.sin())?;
    let p = TimeChangedPath::new(phi.clone(), ramp(4.0)?)?;
    let shifted = ContinuousPath::new(phi.grid().to_vec(), phi.values().iter().map(|v| v + 0.25).collect())?;
    let q = TimeChangedPath::new(shifted, ramp(4.0)?)?;
    g.push(Gate::flag("dcirc_shift", close(dcirc_distance(&p, &q, 2.0)?, 0.25, 1e-14)));

    // Locally uniform convergence away from the jump.
    let seq: Vec<CadlagPath> = [2.0, 8.0, 32.0, 128.0, 512.0].iter().map(|n| ramp(*n)).collect::<Result<_>>()?;
    let r = local_uniform_check(&seq, &step, &[0.5], &[0.25, 0.45, 0.55, 0.9], &[0.2, 0.1, 0.04, 0.01]);
    g.push(Gate::flag("local_uniform_decay", r.all_decay() && r.worst_final() == 0.0 && r.skipped.is_empty()));

    // Jump ranges and envelopes.
    let sine = ContinuousPath::from_fn(2.0, 4000, |s| (std::f64::consts::PI * s).sin())?;
    let tau = CadlagPath::step(vec![0.0, 0.5, 1.0], vec![0.0, 2.0, 2.0])?;
    let (lo, hi) = TimeChangedPath::new(sine, tau)?.jump_range(0.5);
    g.push(Gate::flag("jump_range_sine", close(lo, -1.0, 1e-6) && close(hi, 1.0, 1e-6)));
    let wiggle = ContinuousPath::from_fn(3.0, 300, |s| (7.0 * s).sin() - 0.3 * s)?;
    let p = TimeChangedPath::new(wiggle, CadlagPath::from_fn(1.0, 37, |t| 0.1 + 2.5 * t * t)?)?;
    let e = p.running_envelopes();
    let x = p.compose();
    let mut m = f64::INFINITY;
    let mut last = 0.0;
    let mut err = 0.0f64;
    let mut hat_min = f64::INFINITY;
    for k in 0..=2000 {
        let t = k as f64 / 2000.0;
        m = m.min(x.range(last, t).0);
        last = t;
        err = err.max((e.lower_x.value(t) - m).abs());
        hat_min = hat_min.min(e.hat_x.value(t));
    }
    g.push(Gate::at_most("running_inf_exact", err, 1e-12));
    g.push(Gate::flag("hat_nonnegative", hat_min >= -1e-15));

    // Skorokhod map.
    let down = CadlagPath::continuous(vec![0.0, 1.0], vec![0.0, -1.0])?;
    let (l, hat) = skorokhod_map(&down);
    let err = [0.0, 0.3, 1.0].iter().map(|t| (l.value(*t) - t).abs().max(hat.value(*t).abs())).fold(0.0, f64::max);
    g.push(Gate::at_most("skorokhod_down", err, 1e-15));
    let ok = paths.iter().map(|p| p.map(|v| (3.0 * v).sin())).all(|x| {
        let (l, hat) = skorokhod_map(&x);
        l.is_nondecreasing() && hat.lefts().iter().chain(hat.rights()).all(|v| *v >= -1e-12)
    });
    g.push(Gate::flag("skorokhod_invariants", ok));

    // Decorated distance and limits.
    let dec = DecoratedPath::new(step.clone(), vec![Mark { t: 0.5, lo: 0.0, hi: 1.0 }])?;
    let wider = DecoratedPath::new(step.clone(), vec![Mark { t: 0.5, lo: -0.05, hi: 1.0 }])?;
    g.push(Gate::at_most("d_frak_self", d_frak(&dec, &dec), 0.0));
    g.push(Gate::flag("d_frak_vertical", close(d_frak(&dec, &wider), 0.05, 1e-12)));
    let seq: Vec<CadlagPath> = [4.0, 16.0, 64.0, 256.0].iter().map(|n| ramp(*n)).collect::<Result<_>>()?;
    let r = decorated_limit_check(&seq, &dec, &[0.25, 0.5, 0.75], &[0.2, 0.05, 0.01]);
    g.push(Gate::flag("decorated_ramp_decay", r.all_decay() && r.worst_final() < 1e-12));
    Ok(g)
}
