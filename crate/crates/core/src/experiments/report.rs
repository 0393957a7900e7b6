//! Regime reports: gates, ladder tables and their on-disk form.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::Result;

/// A checked quantity with its threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Gate {
    /// Passes when `value ≤ threshold`.
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, pass: value <= threshold }
    }

    /// Boolean gate; `value` is 1 for true.
    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self { name: name.into(), value: if ok { 1.0 } else { 0.0 }, threshold: 1.0, pass: ok }
    }
}

/// Marginal comparison at one probe time.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    pub t: f64,
    /// KS statistic (or sup error when the limit is deterministic).
    pub statistic: f64,
    /// What the marginal was compared with.
    pub reference: String,
    pub mean: f64,
    pub limit_mean: f64,
}

/// One ladder point.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderRow {
    /// Ladder parameter (`n`, or `α` in the hyper-rough regime).
    pub param: f64,
    pub step: f64,
    pub paths: usize,
    pub marginals: Vec<Marginal>,
    /// M1 distance between the matched first clock path and its limit path.
    pub m1: Option<f64>,
    /// Mean decorated distance over the burst paths.
    pub d_frak: Option<f64>,
    pub moments: Vec<Gate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub regime: String,
    pub ladder_name: String,
    pub rows: Vec<LadderRow>,
    pub gates: Vec<Gate>,
    pub notes: Vec<String>,
    pub runtime_seconds: f64,
}

impl RegimeReport {
    pub fn new(regime: &str, ladder_name: &str) -> Self {
        Self {
            regime: regime.into(),
            ladder_name: ladder_name.into(),
            rows: Vec::new(),
            gates: Vec::new(),
            notes: Vec::new(),
            runtime_seconds: 0.0,
        }
    }

    pub fn pass(&self) -> bool {
        self.gates.iter().all(|g| g.pass)
    }

    pub fn gate(&self, name: &str) -> Option<&Gate> {
        self.gates.iter().find(|g| g.name == name)
    }

    /// Statistic at probe `t` along the ladder.
    pub fn statistic_series(&self, t: f64) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.marginals.iter().find(|m| (m.t - t).abs() < 1e-12).map(|m| m.statistic)).collect()
    }

    /// Line-oriented `key = value` summary; the runtime is the last line.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "regime = {}", self.regime);
        let _ = writeln!(s, "ladder = {}", self.ladder_name);
        for r in &self.rows {
            let p = format!("{}={}", self.ladder_name, r.param);
            let _ = writeln!(s, "{p}.step = {:e}", r.step);
            let _ = writeln!(s, "{p}.paths = {}", r.paths);
            for m in &r.marginals {
                let _ = writeln!(s, "{p}.t={}.statistic = {}", m.t, m.statistic);
                let _ = writeln!(s, "{p}.t={}.reference = {}", m.t, m.reference);
                let _ = writeln!(s, "{p}.t={}.mean = {}", m.t, m.mean);
                let _ = writeln!(s, "{p}.t={}.limit_mean = {}", m.t, m.limit_mean);
            }
            if let Some(d) = r.m1 {
                let _ = writeln!(s, "{p}.m1 = {d}");
            }
            if let Some(d) = r.d_frak {
                let _ = writeln!(s, "{p}.d_frak = {d}");
            }
            for g in &r.moments {
                let _ = writeln!(s, "{p}.{} = {} (threshold {}, {})", g.name, g.value, g.threshold, verdict(g.pass));
            }
        }
        for g in &self.gates {
            let _ = writeln!(s, "gate.{} = {} (threshold {}, {})", g.name, g.value, g.threshold, verdict(g.pass));
        }
        for (i, n) in self.notes.iter().enumerate() {
            let _ = writeln!(s, "note.{i} = {n}");
        }
        let _ = writeln!(s, "pass = {}", self.pass());
        let _ = writeln!(s, "runtime_seconds = {:.3}", self.runtime_seconds);
        s
    }

    /// Marginal table as CSV.
    pub fn marginal_table(&self) -> String {
        let mut s = format!("{},t,statistic,mean,limit_mean,reference\n", self.ladder_name);
        for r in &self.rows {
            for m in &r.marginals {
                let _ = writeln!(s, "{},{},{},{},{},{}", r.param, m.t, m.statistic, m.mean, m.limit_mean, m.reference);
            }
        }
        s
    }

    /// Path-level distances as CSV.
    pub fn distance_table(&self) -> String {
        let mut s = format!("{},m1,d_frak\n", self.ladder_name);
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{}", r.param, opt(r.m1), opt(r.d_frak));
        }
        s
    }

    /// Writes `summary.txt`, `marginals.csv` and `distances.csv`, plus the config echo.
    pub fn write(&self, dir: impl AsRef<Path>, config_echo: &str) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let files = [
            ("config.txt", config_echo.to_string()),
            ("summary.txt", self.summary()),
            ("marginals.csv", self.marginal_table()),
            ("distances.csv", self.distance_table()),
        ];
        let mut out = Vec::new();
        for (name, body) in files {
            let p = dir.join(name);
            std::fs::write(&p, body)?;
            out.push(p);
        }
        Ok(out)
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}

/// Strictly decreasing sequence.
pub fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Non-increasing sequence.
pub fn non_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}
