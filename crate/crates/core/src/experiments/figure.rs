//! Path tables for the fast-regime figure: clock paths for both time changes and the
//! limit jump paths driven by the same Brownian motion.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{Regime, RegimeConfig};
use crate::brownian::path_seed;
use crate::cadlag::{m1_distance_up, CadlagPath};
use crate::clock::simulate_path;
use crate::error::{Error, Result};
use crate::limit::{simulate_limit_grid, GridOptions, LimitSpec};
use crate::timechange::TimeChangeFn;

#[derive(Debug, Clone, PartialEq)]
pub struct Figure1Output {
    pub files: Vec<PathBuf>,
    /// `(f, n, path index, M1 distance to the matched limit)`.
    pub distances: Vec<(String, f64, usize, f64)>,
}

/// Runs the figure configuration for `f(x) = x` and `f(x) = x + x²/2`, writing
/// `clock_<f>_n<n>.csv` (one column per path), `limit_<f>_path<i>.csv` and
/// `limit_<f>_path<i>_decorations.csv` into `dir`.
pub fn figure1(cfg: &RegimeConfig, paths: usize, dir: impl AsRef<Path>) -> Result<Figure1Output> {
    if cfg.regime != Regime::Fast {
        return Err(Error::Config("figure1 runs on a fast-regime config".into()));
    }
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut out = Figure1Output { files: Vec::new(), distances: Vec::new() };
    for (tag, f) in [("linear", TimeChangeFn::Identity), ("quadratic", TimeChangeFn::figure_quadratic())] {
        let b = cfg.b.clone();
        let top = f.eval(b.integral(cfg.horizon) / cfg.lambda);
        let clock_step = if top > 0.0 { top / cfg.clock_resolution } else { 1.0 / cfg.clock_resolution };
        let mut times = Vec::new();
        let mut clocks = Vec::new();
        for &n in &cfg.ladder {
            let mut c = cfg.clone();
            c.f = f.clone();
            let p = c
                .template(c.kernel.clone(), c.a.clone(), c.b.scaled(n))
                .rates(n * c.lambda, n * c.nu)
                .grid(c.horizon, c.step_for(n))
                .clock_step(clock_step)
                .prepare()?;
            times = p.times();
            let xs: Vec<Vec<f64>> =
                (0..paths).map(|i| simulate_path(&p, path_seed(cfg.seed, i as u64)).map(|c| c.x)).collect::<Result<_>>()?;
            let mut body = String::from("t");
            for i in 0..paths {
                let _ = write!(body, ",x{i}");
            }
            body.push('\n');
            for (k, t) in times.iter().enumerate() {
                let _ = write!(body, "{t}");
                for x in &xs {
                    let _ = write!(body, ",{}", x[k]);
                }
                body.push('\n');
            }
            let file = dir.join(format!("clock_{tag}_n{n}.csv"));
            std::fs::write(&file, body)?;
            out.files.push(file);
            clocks.push((n, times.clone(), xs));
        }
        let levels: Vec<f64> = times.iter().map(|t| b.integral(*t)).collect();
        let spec = LimitSpec::with_drift(f.clone(), cfg.lambda, cfg.lambda, cfg.nu, times.clone(), levels)?;
        for i in 0..paths {
            let seed = path_seed(cfg.seed, i as u64);
            let mut clock = crate::brownian::BrownianClock::new(clock_step, seed)?;
            let opts = GridOptions { jump_threshold: 1e-3 * top.max(1e-12), ..GridOptions::default() };
            let limit = simulate_limit_grid(&spec, &mut clock, opts)?;
            let lp = dir.join(format!("limit_{tag}_path{i}.csv"));
            let dp = dir.join(format!("limit_{tag}_path{i}_decorations.csv"));
            limit.write_csv(&lp)?;
            limit.write_decorations(&dp)?;
            out.files.push(lp);
            out.files.push(dp);
            for (n, t_n, xs) in &clocks {
                let x = CadlagPath::continuous(t_n.clone(), xs[i].clone())?;
                let lim = CadlagPath::step(limit.times.clone(), limit.values.clone())?;
                out.distances.push((tag.to_string(), *n, i, m1_distance_up(&x, &lim)?));
            }
        }
    }
    let mut table = String::from("f,n,path,m1\n");
    for (f, n, i, d) in &out.distances {
        let _ = writeln!(table, "{f},{n},{i},{d}");
    }
    let file = dir.join("m1.csv");
    std::fs::write(&file, table)?;
    out.files.push(file);
    Ok(out)
}
