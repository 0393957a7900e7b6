//! Large-time limits of a clock with kernel `e^{−λt}` and `g₀(t) = θ + (Y₀ − θ)e^{−λt}`:
//! an Inverse Gaussian total when `θ = 0`, linear growth `X_{nt}/n → θt` when `θ > 0`.

use volterra_clocks::experiments::{run_large_time, Regime, RegimeConfig};

fn main() -> volterra_clocks::Result<()> {
    let paths = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let mut cfg = RegimeConfig::preset(Regime::LargeTime);
    cfg.paths = paths;
    println!("θ = 0, Y₀ = {}: X at the horizon nT against IG", cfg.y0);
    print!("{}", run_large_time(&cfg)?.marginal_table());

    cfg.theta = 1.0;
    cfg.y0 = 1.5;
    cfg.ladder = vec![16.0, 64.0, 256.0];
    cfg.probes = vec![0.5, 1.0];
    println!("\nθ = 1, Y₀ = 1.5: relative deviation of E[X_nt]/n from θt");
    let report = run_large_time(&cfg)?;
    print!("{}", report.marginal_table());
    for g in &report.gates {
        println!("  {} = {:.4} ({})", g.name, g.value, if g.pass { "pass" } else { "FAIL" });
    }
    Ok(())
}
