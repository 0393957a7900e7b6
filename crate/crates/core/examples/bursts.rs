//! Bursts of an exponential-kernel clock: the driving force `Υⁿ = νW_{f(Xⁿ)} − λXⁿ`
//! against the decorated limit, per path and across the ladder.

use volterra_clocks::experiments::{run_burst_diagnostics, Regime, RegimeConfig};

fn main() -> volterra_clocks::Result<()> {
    let mut cfg = RegimeConfig::preset(Regime::CustomDirac);
    cfg.burst_paths = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let (report, paths) = run_burst_diagnostics(&cfg)?;
    println!(
        "{:>5} {:>6} {}",
        "path",
        "jumps",
        cfg.ladder.iter().map(|n| format!("{:>10}", format!("n={n}"))).collect::<String>()
    );
    for (i, p) in paths.iter().enumerate() {
        println!("{i:>5} {:>6} {}", p.jumps, p.d_frak.iter().map(|d| format!("{d:>10.4}")).collect::<String>());
    }
    println!();
    print!("{}", report.summary());
    Ok(())
}
