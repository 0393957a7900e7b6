//! End-to-end acceptance gates. Prints one PASS/FAIL line per gate and exits non-zero on any failure.

use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use volterra_clocks::brownian::{path_seed, BrownianClock};
use volterra_clocks::clock::{simulate_many, simulate_path, ClockInput, Scheme};
use volterra_clocks::curves::Curve;
use volterra_clocks::experiments::{
    figure1, run_burst_diagnostics, run_fast_regime, run_hyper_rough, run_large_time, run_regime, topology_selftest, Regime,
    RegimeConfig, RegimeReport,
};
use volterra_clocks::kernels::{dirac_family_check, TabulatedKernel};
use volterra_clocks::limit::{
    ig_cdf, ig_samples, levy_cdf, sample_affine_exact, sample_stable_half, simulate_limit_grid, GridOptions, LimitSpec,
};
use volterra_clocks::resolvent::{
    check_resolvent_mass, resolvent_closed_form, resolvent_numeric, resolvent_scaled_laplace_check,
};
use volterra_clocks::stats::{ks_one_sample, ks_two_sample, mc_mean, mc_variance, Sample};
use volterra_clocks::timechange::TimeChangeFn;
use volterra_clocks::{discretize, KernelSpec, Result};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { pass, detail: detail.into() })
}

fn families() -> Result<Vec<KernelSpec>> {
    let t: Vec<f64> = (0..=400).map(|k| k as f64 * 0.01).collect();
    let v = t.iter().map(|s| (-2.0 * s).exp()).collect();
    Ok(vec![
        KernelSpec::constant(1.0)?,
        KernelSpec::exponential(2.0, -1.0)?,
        KernelSpec::fractional(1.0, 0.5)?,
        KernelSpec::fractional(0.5, 1.0)?,
        KernelSpec::gamma(1.0, -1.0, 0.6)?,
        KernelSpec::shifted(KernelSpec::fractional(1.0, 0.5)?, 0.1)?,
        KernelSpec::dirac_scaled(KernelSpec::exponential(1.0, -1.0)?, 10.0)?,
        KernelSpec::tabulated(TabulatedKernel::new(t, v)?),
    ])
}

fn resolvent_identity() -> Result<Outcome> {
    let (dt, horizon) = (1e-3, 2.0);
    let mut residual = 0.0f64;
    for k in families()? {
        residual = residual.max(resolvent_numeric(&discretize(&k, dt, horizon)?)?.residual);
    }
    let exp = KernelSpec::exponential(2.0, -1.0)?;
    let r = resolvent_numeric(&discretize(&exp, dt, horizon)?)?;
    let sup =
        r.values.iter().enumerate().map(|(j, v)| (v - 2.0 * (-3.0 * (j as f64 + 0.5) * dt).exp()).abs()).fold(0.0, f64::max);
    let frac = KernelSpec::fractional(1.0, 0.5)?;
    let r = resolvent_numeric(&discretize(&frac, dt, horizon)?)?;
    let closed = resolvent_closed_form(&frac)?;
    let mut rel = 0.0f64;
    for (j, c) in r.cumulative.iter().enumerate().skip(1) {
        let exact = closed.integrated(j as f64 * dt)?;
        rel = rel.max((c - exact).abs() / exact);
    }
    outcome(
        residual <= 1e-8 && sup <= 1e-3 && rel <= 1e-3,
        format!("max residual {residual:.2e}, exponential sup error {sup:.2e}, fractional ½ rel error {rel:.2e}"),
    )
}

fn sign_and_mass_laws() -> Result<Outcome> {
    let cm = [
        KernelSpec::constant(1.0)?,
        KernelSpec::exponential(1.0, -1.0)?,
        KernelSpec::fractional(1.0, 0.3)?,
        KernelSpec::fractional(2.0, 0.5)?,
        KernelSpec::fractional(1.0, 0.9)?,
        KernelSpec::gamma(1.0, -0.5, 0.6)?,
    ];
    let mut ok = true;
    let (mut worst_min, mut worst_mass) = (f64::INFINITY, 0.0f64);
    for k in &cm {
        assert!(k.is_completely_monotone());
        for horizon in [1.0, 10.0, 100.0] {
            let r = resolvent_numeric(&discretize(k, horizon / 10_000.0, horizon)?)?;
            let m = check_resolvent_mass(&r, true, 1e-8)?;
            ok &= m.ok();
            worst_min = worst_min.min(m.min_value);
            worst_mass = worst_mass.max(r.cumulative.iter().copied().fold(0.0, f64::max));
        }
    }
    let decreasing = [
        KernelSpec::constant(-1.0)?,
        KernelSpec::exponential(-1.0, -1.0)?,
        KernelSpec::fractional(-1.0, 0.5)?,
        KernelSpec::gamma(-1.0, -1.0, 0.7)?,
    ];
    let mut worst_neg = f64::NEG_INFINITY;
    for k in &decreasing {
        let r = resolvent_numeric(&discretize(k, 1e-3, 2.0)?)?;
        worst_neg = worst_neg.max(r.values.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    ok &= worst_neg <= 1e-10;
    outcome(ok, format!("CM min value {worst_min:.2e}, max R̄ {worst_mass:.8}, largest value for −K {worst_neg:.2e}"))
}

fn dirac_scaling() -> Result<Outcome> {
    let base = KernelSpec::exponential(1.0, -1.0)?;
    let ladder = [1.0, 10.0, 100.0, 1000.0];
    let probes = [0.5, 1.0, 5.0];
    let rep = dirac_family_check(&base, &ladder, &probes)?;
    let k_final = rep.rows.iter().filter(|r| r.n == 1000.0).map(|r| r.deviation).fold(0.0, f64::max);
    let mut dist: Vec<Vec<f64>> = vec![Vec::new(); probes.len()];
    let mut transform_err = 0.0f64;
    for n in ladder {
        let r = resolvent_scaled_laplace_check(&base, n, &probes, 1e-2 / n, 40.0 / n)?;
        transform_err = transform_err.max(r.max_rel_error());
        for (i, p) in r.probes.iter().enumerate() {
            dist[i].push((p.numeric - 1.0).abs());
        }
    }
    let r_monotone = dist.iter().all(|d| d.windows(2).all(|w| w[1] < w[0]));
    let r_final = dist.iter().map(|d| *d.last().unwrap()).fold(0.0, f64::max);
    outcome(
        rep.all_monotone() && r_monotone && k_final <= 1e-2 && r_final <= 1e-2 && transform_err <= 1e-2,
        format!("final |K̂(λ/n) − K̂(0)| {k_final:.2e}, final |R̂ⁿ(λ) − 1| {r_final:.2e}, transform error {transform_err:.1e}"),
    )
}

fn clock_invariants() -> Result<Outcome> {
    let input = ClockInput::new(
        KernelSpec::constant(1.0)?,
        Curve::constant(1.0),
        Curve::exponential(100.0, -1.0),
        TimeChangeFn::Identity,
    )
    .rates(1.0, 1.0)
    .grid(1.0, 1e-3)
    .seed(7);
    let p = input.prepare()?;
    let grid: Vec<usize> = (0..=10).map(|k| k * p.steps / 10).collect();
    let rows = simulate_many(&p, 10_000, |c| {
        (c.is_monotone(), *c.m.last().unwrap(), *c.x.last().unwrap(), grid.iter().map(|k| c.x[*k]).collect::<Vec<_>>())
    })?;
    let monotone = rows.iter().all(|r| r.0);
    let m: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let fx: Vec<f64> = rows.iter().map(|r| input.f.eval(r.2)).collect();
    let (mm, mse) = mc_mean(&m)?;
    let (mv, vse) = mc_variance(&m)?;
    let (fm, fse) = mc_mean(&fx)?;
    let mean_ok = mm.abs() <= 3.0 * mse;
    let var_ok = (mv - fm).abs() <= 3.0 * (vse * vse + fse * fse).sqrt();
    let mut worst = f64::NEG_INFINITY;
    for w in 0..grid.len() - 1 {
        let inc: Vec<f64> = rows.iter().map(|r| r.3[w + 1] - r.3[w]).collect();
        let (im, ise) = mc_mean(&inc)?;
        let bound = p.big_g0[grid[w + 1]] - p.big_g0[grid[w]] + 3.0 * ise;
        worst = worst.max(im - bound);
    }
    outcome(
        monotone && mean_ok && var_ok && worst <= 0.0,
        format!(
            "monotone {monotone}, E[M_T] {mm:.4} ± {mse:.4}, Var(M_T) {mv:.3} vs E[f(X_T)] {fm:.3}, increment slack {:.3}",
            -worst
        ),
    )
}

fn scheme_cross_validation() -> Result<Outcome> {
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for k in [KernelSpec::exponential(1.0, -1.0)?, KernelSpec::fractional(1.0, 0.75)?] {
        let input = ClockInput::new(k.clone(), Curve::constant(1.0), Curve::exponential(2.0, -1.0), TimeChangeFn::Identity)
            .rates(1.0, 1.0)
            .grid(1.0, 1e-3);
        let tc = input.clone().scheme(Scheme::TimeChange).seed(21).prepare()?;
        let sde = input.scheme(Scheme::Sde).seed(22).prepare()?;
        let a = Sample::new(simulate_many(&tc, 10_000, |c| *c.x.last().unwrap())?)?;
        let b = Sample::new(simulate_many(&sde, 10_000, |c| *c.x.last().unwrap())?)?;
        let ks = ks_two_sample(&a, &b)?.statistic;
        worst = worst.max(ks);
        parts.push(format!("{} KS {ks:.4}", k.family_name()));
    }
    outcome(worst <= 0.03, parts.join(", "))
}

fn limit_law_oracles() -> Result<Outcome> {
    let ig = Sample::new(ig_samples(1.5, 2.0, 10_000, 61)?)?;
    let ks_ig = ks_one_sample(&ig, |x| ig_cdf(x, 1.5, 2.0))?.statistic;
    let times = vec![0.0, 0.5, 1.0];
    let spec = LimitSpec::standard(TimeChangeFn::Identity, 1.0, 1.0, times.clone(), times)?;
    let opts = GridOptions { bridge_correction: true, ..GridOptions::default() };
    let grid: Vec<f64> = (0..10_000u64)
        .into_par_iter()
        .map(|i| {
            let mut clock = BrownianClock::new(1e-3, path_seed(62, i))?;
            Ok(*simulate_limit_grid(&spec, &mut clock, opts)?.values.last().unwrap())
        })
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(63);
    let exact: Vec<f64> =
        (0..10_000).map(|_| Ok(*sample_affine_exact(&spec, &mut rng)?.values.last().unwrap())).collect::<Result<_>>()?;
    let ks_grid = ks_two_sample(&Sample::new(grid)?, &Sample::new(exact)?)?.statistic;
    let stable = Sample::new((0..10_000).map(|_| sample_stable_half(0.8, 1.2, &mut rng)).collect())?;
    let ks_stable = ks_one_sample(&stable, |x| levy_cdf(x, 0.8, 1.2))?.statistic;
    outcome(
        ks_ig <= 0.015 && ks_grid <= 0.02 && ks_stable <= 0.015,
        format!("IG KS {ks_ig:.4}, grid vs exact KS {ks_grid:.4}, ½-stable KS {ks_stable:.4}"),
    )
}

fn report_line(r: &RegimeReport) -> String {
    let mut parts: Vec<String> = Vec::new();
    for row in &r.rows {
        let s: Vec<String> = row.marginals.iter().map(|m| format!("{:.4}", m.statistic)).collect();
        if !s.is_empty() {
            parts.push(format!("{}={}: {}", r.ladder_name, row.param, s.join("/")));
        }
        if let Some(d) = row.d_frak {
            parts.push(format!("{}={}: d {:.4}", r.ladder_name, row.param, d));
        }
    }
    let failed: Vec<&str> = r.gates.iter().filter(|g| !g.pass).map(|g| g.name.as_str()).collect();
    if !failed.is_empty() {
        parts.push(format!("failed gates {failed:?}"));
    }
    parts.join("; ")
}

fn fast_regime() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (tag, f) in [("x", TimeChangeFn::Identity), ("x+x²/2", TimeChangeFn::figure_quadratic())] {
        let cfg = RegimeConfig { f, paths: 5000, ..RegimeConfig::preset(Regime::Fast) };
        let r = run_fast_regime(&cfg)?;
        pass &= r.pass();
        parts.push(format!("f={tag} [{}]", report_line(&r)));
    }
    outcome(pass, parts.join(" "))
}

fn large_time() -> Result<Outcome> {
    let zero = RegimeConfig::preset(Regime::LargeTime);
    let a = run_large_time(&zero)?;
    let positive = RegimeConfig {
        theta: 1.0,
        y0: 1.5,
        ladder: vec![16.0, 64.0, 256.0],
        probes: vec![0.5, 1.0],
        paths: 2000,
        ..RegimeConfig::preset(Regime::LargeTime)
    };
    let b = run_large_time(&positive)?;
    outcome(a.pass() && b.pass(), format!("θ=0 [{}] θ=1 [{}]", report_line(&a), report_line(&b)))
}

fn hyper_rough() -> Result<Outcome> {
    let cfg = RegimeConfig { paths: 5000, ..RegimeConfig::preset(Regime::HyperRough) };
    let r = run_hyper_rough(&cfg)?;
    outcome(r.pass(), report_line(&r))
}

fn topology() -> Result<Outcome> {
    let gates = topology_selftest()?;
    let failed: Vec<&str> = gates.iter().filter(|g| !g.pass).map(|g| g.name.as_str()).collect();
    outcome(failed.is_empty(), format!("{} checks, failed {failed:?}", gates.len()))
}

fn bursts() -> Result<Outcome> {
    let cfg = RegimeConfig::preset(Regime::CustomDirac);
    let (r, _) = run_burst_diagnostics(&cfg)?;
    let gate = |n: &str| r.gate(n).map_or(f64::NAN, |g| g.value);
    outcome(
        r.pass(),
        format!(
            "{}; endpoint error {:.1e}, record error {:.1e}",
            report_line(&r),
            gate("decoration_endpoints"),
            gate("decoration_record")
        ),
    )
}

fn tables(dir: &Path) -> Result<Vec<(String, Vec<u8>)>> {
    let mut out = Vec::new();
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<std::io::Result<_>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let name = e.file_name().to_string_lossy().into_owned();
        if name.ends_with(".csv") {
            out.push((name, std::fs::read(e.path())?));
        }
    }
    Ok(out)
}

fn run_all_small(root: &Path) -> Result<()> {
    let runs = [
        RegimeConfig { ladder: vec![4.0, 16.0], paths: 200, ..RegimeConfig::preset(Regime::Fast) },
        RegimeConfig {
            f: TimeChangeFn::figure_quadratic(),
            ladder: vec![4.0, 16.0],
            paths: 200,
            ..RegimeConfig::preset(Regime::Fast)
        },
        RegimeConfig { ladder: vec![2.0, 4.0], paths: 300, ..RegimeConfig::preset(Regime::LargeTime) },
        RegimeConfig { ladder: vec![0.5, 0.25], paths: 200, ..RegimeConfig::preset(Regime::HyperRough) },
        RegimeConfig { ladder: vec![4.0, 16.0], burst_paths: 3, ..RegimeConfig::preset(Regime::CustomDirac) },
    ];
    for (i, cfg) in runs.into_iter().enumerate() {
        run_regime(&RegimeConfig { out_dir: Some(root.join(format!("run{i}"))), ..cfg })?;
    }
    figure1(&RegimeConfig { ladder: vec![4.0, 16.0], ..RegimeConfig::preset(Regime::Fast) }, 2, root.join("figure1"))?;
    let input =
        ClockInput::new(KernelSpec::fractional(1.0, 0.6)?, Curve::constant(1.0), Curve::zero(), TimeChangeFn::figure_quadratic())
            .rates(1.0, 1.0)
            .seed(5);
    let p = input.prepare()?;
    let dir = root.join("simulate");
    std::fs::create_dir_all(&dir)?;
    for i in 0..3 {
        let path = simulate_path(&p, path_seed(5, i))?;
        path.write_csv(&path.m, dir.join(format!("path{i}.csv")))?;
    }
    Ok(())
}

fn determinism() -> Result<Outcome> {
    let a = tempfile::tempdir()?;
    let b = tempfile::tempdir()?;
    run_all_small(a.path())?;
    run_all_small(b.path())?;
    let mut compared = 0;
    let mut differing = Vec::new();
    let mut dirs: Vec<_> = std::fs::read_dir(a.path())?.collect::<std::io::Result<_>>()?;
    dirs.sort_by_key(|e| e.file_name());
    for d in dirs {
        let name = d.file_name();
        let (ta, tb) = (tables(&d.path())?, tables(&b.path().join(&name))?);
        if ta.len() != tb.len() {
            differing.push(format!("{}: table count", name.to_string_lossy()));
        }
        for (x, y) in ta.iter().zip(&tb) {
            compared += 1;
            if x != y {
                differing.push(format!("{}/{}", name.to_string_lossy(), x.0));
            }
        }
    }
    outcome(compared > 0 && differing.is_empty(), format!("{compared} tables compared, differing {differing:?}"))
}

fn main() {
    volterra_clocks::experiments::init_threads().expect("thread pool");
    let gates: [(&str, fn() -> Result<Outcome>); 12] = [
        ("resolvent_identity", resolvent_identity),
        ("resolvent_sign_and_mass", sign_and_mass_laws),
        ("dirac_scaling", dirac_scaling),
        ("clock_invariants", clock_invariants),
        ("scheme_cross_validation", scheme_cross_validation),
        ("limit_law_oracles", limit_law_oracles),
        ("fast_regime_figure", fast_regime),
        ("large_time", large_time),
        ("hyper_rough", hyper_rough),
        ("topology", topology),
        ("bursts", bursts),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in gates.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let started = Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "{} {:>2} {name} ({:.1}s): {detail}",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            started.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance gate(s) failed");
        std::process::exit(1);
    }
}
