//! First-passage limits: Inverse Gaussian and ½-stable oracles, the grid-crossing
//! simulator, the tangent sampler and jump decorations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use volterra_clocks::brownian::{path_seed, BrownianClock};
use volterra_clocks::limit::{
    ig_cdf, ig_samples, levy_cdf, sample_affine_exact, sample_stable_half, simulate_limit_grid, tangent_step_sampler,
    tangent_step_sampler_with, GridOptions, LimitSpec, TangentOptions,
};
use volterra_clocks::stats::{ks_one_sample, ks_two_sample, Sample};
use volterra_clocks::timechange::TimeChangeFn;

fn main() -> volterra_clocks::Result<()> {
    let n = 10_000;
    let ig = Sample::new(ig_samples(1.0, 2.0, n, 5)?)?;
    println!("IG(1, 2): mean {:.4}, KS vs cdf {:.4}", ig.mean(), ks_one_sample(&ig, |x| ig_cdf(x, 1.0, 2.0))?.statistic);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let st = Sample::new((0..n).map(|_| sample_stable_half(1.0, 1.0, &mut rng)).collect())?;
    println!(
        "½-stable: median {:.4} (exact 2.1981), KS vs Lévy {:.4}",
        st.quantile(0.5),
        ks_one_sample(&st, |x| levy_cdf(x, 1.0, 1.0))?.statistic
    );

    // X*_t = inf{s : s − W_s > t} on [0, 1].
    let times: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let spec = LimitSpec::with_drift(TimeChangeFn::Identity, 1.0, 0.0, 1.0, times.clone(), times.clone())?;
    let opts = GridOptions { bridge_correction: true, ..GridOptions::default() };
    let grid: Vec<f64> = (0..4000)
        .map(|i| {
            let mut clock = BrownianClock::new(1e-3, path_seed(7, i))?;
            Ok(*simulate_limit_grid(&spec, &mut clock, opts)?.values.last().unwrap())
        })
        .collect::<volterra_clocks::Result<_>>()?;
    let exact: Vec<f64> = (0..4000)
        .map(|_| Ok(*sample_affine_exact(&spec, &mut rng)?.values.last().unwrap()))
        .collect::<volterra_clocks::Result<_>>()?;
    let ks = ks_two_sample(&Sample::new(grid)?, &Sample::new(exact)?)?;
    println!("grid crossing vs exact IG(1, 1) at t = 1: KS {:.4}", ks.statistic);

    // Quadratic time change: the tangent sampler against the grid simulator.
    let q = LimitSpec::with_drift(TimeChangeFn::figure_quadratic(), 2.0, 1.0, 1.0, times.clone(), times)?;
    let grid_q: Vec<f64> = (0..2000)
        .map(|i| {
            let mut clock = BrownianClock::new(1e-3, path_seed(8, i))?;
            Ok(*simulate_limit_grid(&q, &mut clock, GridOptions::default())?.values.last().unwrap())
        })
        .collect::<volterra_clocks::Result<_>>()?;
    let tangent: Vec<f64> = (0..2000)
        .map(|_| Ok(*tangent_step_sampler(&q, &mut rng)?.values.last().unwrap()))
        .collect::<volterra_clocks::Result<_>>()?;
    let single = TangentOptions { max_corrections: 0, ..TangentOptions::default() };
    let proxy: Vec<f64> = (0..2000)
        .map(|_| Ok(*tangent_step_sampler_with(&q, single, &mut rng)?.values.last().unwrap()))
        .collect::<volterra_clocks::Result<_>>()?;
    let grid_q = Sample::new(grid_q)?;
    let ks = ks_two_sample(&grid_q, &Sample::new(tangent)?)?;
    println!("quadratic f: tangent sampler vs grid KS {:.4}", ks.statistic);
    let ks = ks_two_sample(&grid_q, &Sample::new(proxy)?)?;
    println!("quadratic f: single tangent per step vs grid KS {:.4}", ks.statistic);

    let mut clock = BrownianClock::new(1e-4, 42)?;
    let path = simulate_limit_grid(&spec, &mut clock, GridOptions { jump_threshold: 0.05, ..GridOptions::default() })?;
    println!("path 42: {} decorated jumps above 0.05", path.jumps.len());
    for j in path.jumps.iter().take(5) {
        println!("  t = {:.1}: X jumps {:.4} → {:.4}, F* ∈ [{:.4}, {:.4}]", j.t, j.left, j.right, j.decoration.0, j.decoration.1);
    }
    Ok(())
}
