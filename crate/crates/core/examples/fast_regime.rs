//! Fast regime at reduced scale: the clock driven by `(K, a + nK∗b, nλ, nν)` against
//! its first-passage limit, then the path tables of the figure configuration.
//!
//! `cargo run --release --example fast_regime -- 5000` runs the full ladder.

use volterra_clocks::experiments::{figure1, run_fast_regime, Regime, RegimeConfig};
use volterra_clocks::timechange::TimeChangeFn;

fn main() -> volterra_clocks::Result<()> {
    let paths = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(800);
    let mut cfg = RegimeConfig::preset(Regime::Fast);
    cfg.paths = paths;
    for f in [TimeChangeFn::Identity, TimeChangeFn::figure_quadratic()] {
        cfg.f = f;
        let report = run_fast_regime(&cfg)?;
        println!("f(x) = {}", cfg.f);
        print!("{}", report.marginal_table());
        for g in &report.gates {
            println!("  {:<22} {:.4} (≤ {}) {}", g.name, g.value, g.threshold, if g.pass { "pass" } else { "FAIL" });
        }
    }

    let dir = std::env::temp_dir().join("vclock_figure1");
    let out = figure1(&RegimeConfig::preset(Regime::Fast), 3, &dir)?;
    println!("\n{} tables in {}", out.files.len(), dir.display());
    for (f, n, i, d) in out.distances.iter().filter(|d| d.2 == 0) {
        println!("  {f:<9} n = {n:<3} path {i}: M1 to matched limit {d:.4}");
    }
    Ok(())
}
