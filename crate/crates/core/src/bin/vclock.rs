use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use volterra_clocks::clock::{simulate_path, write_manifest};
use volterra_clocks::experiments::{
    clock_input_from_config, figure1, init_threads, run_regime, topology_selftest, Config, Regime, RegimeConfig, CONFIG_KEYS,
    SIMULATE_KEYS,
};
use volterra_clocks::resolvent::{resolvent_closed_form, resolvent_numeric};
use volterra_clocks::{discretize, Error, KernelSpec};

/// Stochastic Volterra clocks and their jump limits.
#[derive(Parser)]
#[command(name = "vclock", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate clock paths from a key-value config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "runs/simulate")]
        out: PathBuf,
    },
    /// Numerical resolvent of the second kind, against the closed form when one exists.
    Resolvent {
        /// Compact kernel, e.g. `fractional:alpha=0.5,c=1`.
        #[arg(long)]
        kernel: String,
        #[arg(long = "T", default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value = "resolvent.csv")]
        out: PathBuf,
    },
    /// Run a regime ladder and write its report.
    Converge {
        #[arg(long)]
        regime: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Deterministic checks of the path-space machinery.
    TopologySelftest,
    /// Clock and matched limit path tables for both time changes.
    Figure1 {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        paths: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "runs/figure1")]
        out: PathBuf,
    },
}

fn schema(keys: &[&str]) -> String {
    format!("accepted keys (one `key = value` per line, `[section]` prefixes, `#` comments):\n  {}", keys.join("\n  "))
}

fn regime_config(regime: Regime, path: Option<&PathBuf>) -> volterra_clocks::Result<RegimeConfig> {
    let mut cfg = match path {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match cfg.get_str("regime") {
        Some(r) if Regime::parse(r)? != regime => {
            return Err(Error::Config(format!("config regime `{r}` conflicts with --regime {}", regime.name())))
        }
        _ => cfg.set("regime", regime.name()),
    }
    RegimeConfig::from_config(&cfg)
}

fn run(cmd: Cmd) -> volterra_clocks::Result<bool> {
    match cmd {
        Cmd::Simulate { config, paths, seed, out } => {
            let (mut input, n) = clock_input_from_config(&Config::load(&config)?)?;
            if let Some(s) = seed {
                input.seed = s;
            }
            let n = paths.unwrap_or(n);
            let p = input.prepare()?;
            std::fs::create_dir_all(&out)?;
            for i in 0..n {
                let seed = volterra_clocks::brownian::path_seed(input.seed, i as u64);
                let path = simulate_path(&p, seed)?;
                let upsilon: Vec<f64> = path.x.iter().zip(&path.m).map(|(x, m)| input.nu * m - input.lambda * x).collect();
                path.write_csv(&upsilon, out.join(format!("path{i}.csv")))?;
            }
            write_manifest(&input, n, out.join("manifest.txt"))?;
            println!("wrote {n} paths to {}", out.display());
            Ok(true)
        }
        Cmd::Resolvent { kernel, horizon, dt, out } => {
            let spec = KernelSpec::parse_compact(&kernel)?;
            let grid = discretize(&spec, dt, horizon)?;
            let r = resolvent_numeric(&grid)?;
            let closed = match resolvent_closed_form(&spec) {
                Ok(c) => Some(c.cell_averages(dt, r.values.len())?),
                Err(Error::Unsupported(m)) => {
                    eprintln!("{m}");
                    None
                }
                Err(e) => return Err(e),
            };
            let mut body = String::from(if closed.is_some() { "t,R,R_closed\n" } else { "t,R\n" });
            let (mut worst, mut worst_tail): (f64, f64) = (0.0, 0.0);
            for (j, v) in r.values.iter().enumerate() {
                let t = (j as f64 + 0.5) * dt;
                match &closed {
                    Some(c) => {
                        let e = (v - c[j]).abs() / c[j].abs().max(1e-300);
                        worst = worst.max(e);
                        if j >= 10 {
                            worst_tail = worst_tail.max(e);
                        }
                        body.push_str(&format!("{t},{v},{}\n", c[j]));
                    }
                    None => body.push_str(&format!("{t},{v}\n")),
                }
            }
            std::fs::write(&out, body)?;
            println!("kernel = {spec}");
            println!("residual = {:e}", r.residual);
            println!("mass = {}", r.total_mass());
            if closed.is_some() {
                println!("max_rel_error_vs_closed = {worst:e}");
                println!("max_rel_error_vs_closed_from_cell_10 = {worst_tail:e}");
            }
            println!("table = {}", out.display());
            Ok(true)
        }
        Cmd::Converge { regime, config, seed, paths, out } => {
            let mut cfg = regime_config(Regime::parse(&regime)?, config.as_ref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(p) = paths {
                cfg.paths = p;
                cfg.burst_paths = p;
            }
            if out.is_some() {
                cfg.out_dir = out;
            }
            let (report, files) = run_regime(&cfg)?;
            print!("{}", report.summary());
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(report.pass())
        }
        Cmd::TopologySelftest => {
            let gates = topology_selftest()?;
            for g in &gates {
                println!("{} {}", if g.pass { "PASS" } else { "FAIL" }, g.name);
            }
            Ok(gates.iter().all(|g| g.pass))
        }
        Cmd::Figure1 { config, paths, seed, out } => {
            let mut cfg = regime_config(Regime::Fast, config.as_ref())?;
            cfg.seed = seed;
            let res = figure1(&cfg, paths, &out)?;
            println!("f,n,path,m1");
            for (f, n, i, d) in &res.distances {
                println!("{f},{n},{i},{d}");
            }
            println!("wrote {} files to {}", res.files.len(), out.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let keys = match &cli.cmd {
        Cmd::Simulate { .. } => SIMULATE_KEYS,
        _ => CONFIG_KEYS,
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more gates failed");
            ExitCode::FAILURE
        }
        Err(e @ (Error::Config(_) | Error::Parse(_))) => {
            eprintln!("error: {e}\n{}", schema(keys));
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
