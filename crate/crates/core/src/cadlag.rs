//! Càdlàg paths, time-changed pairs `(φ, τ)`, decorated paths and the
//! distances and limit checks built on them.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{invalid, Error, Result};

/// Piecewise-linear càdlàg path: node `i` carries the left limit and value at `t_i`,
/// and the path runs linearly from `(t_i, right_i)` to `(t_{i+1}, left_{i+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct CadlagPath {
    times: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
}

impl CadlagPath {
    pub fn new(times: Vec<f64>, left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != left.len() || times.len() != right.len() {
            return Err(invalid("path tables must be non-empty and of equal length"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("path breakpoints must be strictly increasing"));
        }
        if times.iter().chain(&left).chain(&right).any(|v| !v.is_finite()) {
            return Err(invalid("path entries must be finite"));
        }
        let mut left = left;
        left[0] = right[0];
        Ok(Self { times, left, right })
    }

    /// Continuous piecewise-linear interpolation of samples.
    pub fn continuous(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(times, values.clone(), values)
    }

    /// Right-continuous step function taking `values[i]` on `[t_i, t_{i+1})`.
    pub fn step(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("empty step path"));
        }
        let mut left = Vec::with_capacity(values.len());
        left.push(values[0]);
        left.extend_from_slice(&values[..values.len() - 1]);
        Self::new(times, left, values)
    }

    /// Samples `g` at `n + 1` equispaced nodes on `[0, T]`.
    pub fn from_fn(horizon: f64, n: usize, mut g: impl FnMut(f64) -> f64) -> Result<Self> {
        let times: Vec<f64> = (0..=n).map(|i| horizon * i as f64 / n as f64).collect();
        let values = times.iter().map(|t| g(*t)).collect();
        Self::continuous(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn lefts(&self) -> &[f64] {
        &self.left
    }

    pub fn rights(&self) -> &[f64] {
        &self.right
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// `(x(t), x(t−))`; constant extension outside the breakpoint range.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let n = self.times.len();
        if t <= self.times[0] {
            return (self.right[0], self.left[0]);
        }
        if t >= self.times[n - 1] {
            return if t == self.times[n - 1] {
                (self.right[n - 1], self.left[n - 1])
            } else {
                (self.right[n - 1], self.right[n - 1])
            };
        }
        let i = self.times.partition_point(|x| *x <= t) - 1;
        if self.times[i] == t {
            return (self.right[i], self.left[i]);
        }
        let v = self.segment_value(i, t);
        (v, v)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval(t).0
    }

    fn segment_value(&self, i: usize, t: f64) -> f64 {
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let (v0, v1) = (self.right[i], self.left[i + 1]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Times with `x(t−) ≠ x(t)`.
    pub fn jump_times(&self) -> Vec<f64> {
        (1..self.len()).filter(|&i| self.left[i] != self.right[i]).map(|i| self.times[i]).collect()
    }

    pub fn is_nondecreasing(&self) -> bool {
        (0..self.len()).all(|i| self.right[i] >= self.left[i] && (i + 1 == self.len() || self.left[i + 1] >= self.right[i]))
    }

    /// Membership in `D↑`: nonnegative and non-decreasing.
    pub fn is_up(&self) -> bool {
        self.right[0] >= 0.0 && self.is_nondecreasing()
    }

    pub fn sup_norm(&self) -> f64 {
        self.left.iter().chain(&self.right).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, g: impl Fn(f64) -> f64) -> CadlagPath {
        CadlagPath {
            times: self.times.clone(),
            left: self.left.iter().map(|v| g(*v)).collect(),
            right: self.right.iter().map(|v| g(*v)).collect(),
        }
    }

    /// Closure of `x([a, b])` as sorted disjoint intervals.
    pub fn image(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let (a, b) = (a.max(self.start()), b.min(self.horizon()));
        let mut pieces = vec![(self.value(a), self.value(a))];
        for i in 0..self.len().saturating_sub(1) {
            let (t0, t1) = (self.times[i], self.times[i + 1]);
            if t1 <= a || t0 > b {
                continue;
            }
            let lo = t0.max(a);
            let hi = t1.min(b);
            let v0 = if lo == t0 { self.right[i] } else { self.segment_value(i, lo) };
            let v1 = if hi == t1 { self.left[i + 1] } else { self.segment_value(i, hi) };
            pieces.push((v0.min(v1), v0.max(v1)));
            if hi == t1 && t1 <= b {
                pieces.push((self.right[i + 1], self.right[i + 1]));
            }
        }
        merge_intervals(pieces)
    }

    /// `(min, max)` of the closure of `x([a, b])`.
    pub fn range(&self, a: f64, b: f64) -> (f64, f64) {
        let img = self.image(a, b);
        (img[0].0, img[img.len() - 1].1)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "t,left,value")?;
        for i in 0..self.len() {
            writeln!(f, "{},{},{}", self.times[i], self.left[i], self.right[i])?;
        }
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let rows = read_table(path, 3)?;
        let mut cols = [Vec::new(), Vec::new(), Vec::new()];
        for r in rows {
            for (c, v) in cols.iter_mut().zip(r) {
                c.push(v);
            }
        }
        let [t, l, r] = cols;
        Self::new(t, l, r)
    }
}

fn read_table(path: impl AsRef<Path>, width: usize) -> Result<Vec<Vec<f64>>> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (k, line) in f.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (k == 0 && line.chars().any(|c| c.is_alphabetic())) {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", k + 1))))
            .collect::<Result<_>>()?;
        if row.len() != width {
            return Err(Error::Parse(format!("line {}: expected {width} columns", k + 1)));
        }
        out.push(row);
    }
    Ok(out)
}

fn merge_intervals(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for (lo, hi) in v {
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

/// Hausdorff distance between a union of disjoint sorted intervals and `[a, b]`.
pub fn hausdorff_to_interval(set: &[(f64, f64)], a: f64, b: f64) -> f64 {
    let lo = set[0].0;
    let hi = set[set.len() - 1].1;
    let outer = (a - lo).max(hi - b).max(0.0);
    outer.max(hausdorff_to_union_one_sided(set, a, b))
}

/// Continuous path on `[s_0, s_N]` by linear interpolation, extended flat to the right.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousPath {
    grid: Vec<f64>,
    values: Vec<f64>,
    modulus: f64,
}

impl ContinuousPath {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.is_empty() || grid.len() != values.len() {
            return Err(invalid("continuous path needs matching non-empty samples"));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("sample grid must be strictly increasing"));
        }
        let modulus = values.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        Ok(Self { grid, values, modulus })
    }

    pub fn from_fn(s_max: f64, n: usize, mut g: impl FnMut(f64) -> f64) -> Result<Self> {
        let grid: Vec<f64> = (0..=n).map(|i| s_max * i as f64 / n as f64).collect();
        let values = grid.iter().map(|s| g(*s)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn start(&self) -> f64 {
        self.grid[0]
    }

    pub fn end(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// Largest increment between neighbouring samples; bounds interpolation error for sampled paths.
    pub fn modulus(&self) -> f64 {
        self.modulus
    }

    pub fn eval(&self, s: f64) -> f64 {
        let n = self.grid.len();
        if s <= self.grid[0] {
            return self.values[0];
        }
        if s >= self.grid[n - 1] {
            return self.values[n - 1];
        }
        let i = self.grid.partition_point(|x| *x <= s) - 1;
        let (s0, s1) = (self.grid[i], self.grid[i + 1]);
        self.values[i] + (self.values[i + 1] - self.values[i]) * (s - s0) / (s1 - s0)
    }

    /// `(min, max)` of the path over `[a, b]`.
    pub fn range(&self, a: f64, b: f64) -> (f64, f64) {
        let (a, b) = (a.min(b), a.max(b));
        let (mut lo, mut hi) = {
            let (x, y) = (self.eval(a), self.eval(b));
            (x.min(y), x.max(y))
        };
        let i0 = self.grid.partition_point(|x| *x <= a);
        let i1 = self.grid.partition_point(|x| *x < b);
        for v in &self.values[i0..i1.max(i0)] {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
        (lo, hi)
    }

    /// Running infimum (or supremum) from `s0`, exact for piecewise-linear input.
    pub fn running(&self, s0: f64, inf: bool) -> ContinuousPath {
        let sign = if inf { 1.0 } else { -1.0 };
        let mut grid = vec![s0];
        let mut m = sign * self.eval(s0);
        let mut values = vec![sign * m];
        let mut prev = (s0, m);
        for (s, v) in self.grid.iter().zip(&self.values).filter(|(s, _)| **s > s0) {
            let v = sign * v;
            if v < m {
                if prev.1 > m {
                    // Insert the point where the segment drops through the running level.
                    let sc = prev.0 + (prev.1 - m) / (prev.1 - v) * (s - prev.0);
                    if sc > *grid.last().unwrap() && sc < *s {
                        grid.push(sc);
                        values.push(sign * m);
                    }
                }
                m = v;
            }
            grid.push(*s);
            values.push(sign * m);
            prev = (*s, v);
        }
        if self.start() < s0 {
            grid.insert(0, self.start());
            values.insert(0, values[0]);
        }
        ContinuousPath::new(grid, values).expect("running envelope grid is increasing")
    }

    /// Pointwise combination on the merged grid.
    pub fn zip_with(&self, other: &ContinuousPath, g: impl Fn(f64, f64) -> f64) -> ContinuousPath {
        let mut grid: Vec<f64> = self.grid.iter().chain(&other.grid).copied().collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let values = grid.iter().map(|s| g(self.eval(*s), other.eval(*s))).collect();
        ContinuousPath::new(grid, values).expect("merged grid is increasing")
    }

    /// `sup_{[0, S]} |φ − ψ|`, exact for piecewise-linear paths.
    pub fn sup_distance(&self, other: &ContinuousPath, s_max: f64) -> f64 {
        self.grid
            .iter()
            .chain(&other.grid)
            .copied()
            .filter(|s| *s <= s_max)
            .chain([0.0, s_max])
            .map(|s| (self.eval(s) - other.eval(s)).abs())
            .fold(0.0, f64::max)
    }
}

/// The pair `(φ, τ)` with `x = φ ∘ τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeChangedPath {
    pub phi: ContinuousPath,
    pub tau: CadlagPath,
}

impl TimeChangedPath {
    /// `φ` is frozen at `φ(τ(T))` beyond `τ(T)`.
    pub fn new(phi: ContinuousPath, tau: CadlagPath) -> Result<Self> {
        if !tau.is_up() {
            return Err(invalid("τ must be nonnegative and non-decreasing"));
        }
        let lo = tau.rights()[0];
        let hi = tau.rights()[tau.len() - 1];
        let slack = 1e-12 * (1.0 + hi.abs());
        if phi.start() > lo + slack || phi.end() < hi - slack {
            return Err(Error::Coverage(format!("φ sampled on [{}, {}] but τ ranges over [{lo}, {hi}]", phi.start(), phi.end())));
        }
        let phi = if phi.end() > hi {
            let mut grid: Vec<f64> = phi.grid.iter().copied().filter(|s| *s < hi).collect();
            let mut values: Vec<f64> = grid.iter().map(|s| phi.eval(*s)).collect();
            grid.push(hi);
            values.push(phi.eval(hi));
            ContinuousPath::new(grid, values)?
        } else {
            phi
        };
        Ok(Self { phi, tau })
    }

    pub fn horizon(&self) -> f64 {
        self.tau.horizon()
    }

    /// `x = φ ∘ τ`, exact for piecewise-linear `φ` and `τ`.
    pub fn compose(&self) -> CadlagPath {
        let tau = &self.tau;
        let mut times = Vec::new();
        let mut left = Vec::new();
        let mut right = Vec::new();
        for i in 0..tau.len() {
            times.push(tau.times[i]);
            left.push(self.phi.eval(tau.left[i]));
            right.push(self.phi.eval(tau.right[i]));
            if i + 1 < tau.len() {
                let (t0, t1) = (tau.times[i], tau.times[i + 1]);
                let (u0, u1) = (tau.right[i], tau.left[i + 1]);
                if u1 > u0 {
                    for s in self.phi.grid.iter().filter(|s| **s > u0 && **s < u1) {
                        let t = t0 + (s - u0) / (u1 - u0) * (t1 - t0);
                        if t > *times.last().unwrap() && t < t1 {
                            let v = self.phi.eval(*s);
                            times.push(t);
                            left.push(v);
                            right.push(v);
                        }
                    }
                }
            }
        }
        CadlagPath::new(times, left, right).expect("composition breakpoints are increasing")
    }

    /// `φ([τ(t−), τ(t)])`; degenerate `{x(t)}` at continuity points of `τ`.
    pub fn jump_range(&self, t: f64) -> (f64, f64) {
        let (u, ul) = self.tau.eval(t);
        if u == ul {
            let x = self.phi.eval(u);
            return (x, x);
        }
        self.phi.range(ul, u)
    }

    pub fn running_envelopes(&self) -> Envelopes {
        let s0 = self.tau.rights()[0];
        let lower = self.phi.running(s0, true);
        let upper = self.phi.running(s0, false);
        let hat = self.phi.zip_with(&lower, |a, b| a - b);
        let comp = |phi: &ContinuousPath| TimeChangedPath { phi: phi.clone(), tau: self.tau.clone() }.compose();
        Envelopes { lower_x: comp(&lower), upper_x: comp(&upper), hat_x: comp(&hat), lower, upper, hat }
    }

    /// Decorated path whose marks are the jumps of `τ`.
    pub fn decorated(&self) -> DecoratedPath {
        let base = self.compose();
        let marks = self
            .tau
            .jump_times()
            .into_iter()
            .map(|t| {
                let (lo, hi) = self.jump_range(t);
                let (x, xl) = base.eval(t);
                Mark { t, lo: lo.min(x).min(xl), hi: hi.max(x).max(xl) }
            })
            .collect();
        DecoratedPath { base, marks }
    }
}

/// Running envelopes of `φ` from `τ(0)` and their compositions with `τ`.
#[derive(Debug, Clone)]
pub struct Envelopes {
    pub lower: ContinuousPath,
    pub upper: ContinuousPath,
    pub hat: ContinuousPath,
    pub lower_x: CadlagPath,
    pub upper_x: CadlagPath,
    pub hat_x: CadlagPath,
}

/// `l(t) = −inf_{s≤t} x(s)` and `x̂ = x + l`.
pub fn skorokhod_map(x: &CadlagPath) -> (CadlagPath, CadlagPath) {
    let mut times = vec![x.times[0]];
    let mut l_left = vec![-x.right[0]];
    let mut l_right = vec![-x.right[0]];
    let mut xs_left = vec![x.right[0]];
    let mut xs_right = vec![x.right[0]];
    let mut m = x.right[0];
    for i in 1..x.len() {
        let (t0, t1) = (x.times[i - 1], x.times[i]);
        let (v0, v1) = (x.right[i - 1], x.left[i]);
        if v1 < m && v0 > m {
            let tc = t0 + (v0 - m) / (v0 - v1) * (t1 - t0);
            if tc > t0 && tc < t1 {
                times.push(tc);
                let vc = m;
                l_left.push(-m);
                l_right.push(-m);
                xs_left.push(vc);
                xs_right.push(vc);
            }
        }
        let m_left = m.min(v1);
        m = m_left.min(x.right[i]);
        times.push(t1);
        l_left.push(-m_left);
        l_right.push(-m);
        xs_left.push(v1);
        xs_right.push(x.right[i]);
    }
    let hat_left: Vec<f64> = xs_left.iter().zip(&l_left).map(|(a, b)| a + b).collect();
    let hat_right: Vec<f64> = xs_right.iter().zip(&l_right).map(|(a, b)| a + b).collect();
    let l = CadlagPath::new(times.clone(), l_left, l_right).expect("increasing");
    let hat = CadlagPath::new(times, hat_left, hat_right).expect("increasing");
    (l, hat)
}

/// M1-type distance on `D↑`: Hausdorff distance of completed graphs under the max metric,
/// combined by maximum with the endpoint gaps.
///
/// In coordinates `σ = t + x`, `δ = x − t` a completed monotone graph is a 1-Lipschitz
/// function of `σ` and the max metric becomes `(|Δσ| + |Δδ|)/2`, which makes the
/// computation exact on the merged breakpoints.
pub fn m1_distance_up(x: &CadlagPath, y: &CadlagPath) -> Result<f64> {
    if !x.is_nondecreasing() || !y.is_nondecreasing() {
        return Err(Error::Domain("M1 distance is defined here for non-decreasing paths".into()));
    }
    let gx = rotated(x);
    let gy = rotated(y);
    let h = directed(&gx, &gy).max(directed(&gy, &gx));
    let ends = (x.right[0] - y.right[0]).abs().max((x.right[x.len() - 1] - y.right[y.len() - 1]).abs());
    Ok(h.max(ends))
}

fn rotated(x: &CadlagPath) -> Vec<(f64, f64)> {
    let mut pts = Vec::with_capacity(2 * x.len());
    for i in 0..x.len() {
        for v in [x.left[i], x.right[i]] {
            let p = (x.times[i] + v, v - x.times[i]);
            if pts.last() != Some(&p) {
                pts.push(p);
            }
        }
    }
    pts
}

fn rotated_eval(g: &[(f64, f64)], s: f64) -> f64 {
    if s <= g[0].0 {
        return g[0].1;
    }
    if s >= g[g.len() - 1].0 {
        return g[g.len() - 1].1;
    }
    let i = g.partition_point(|p| p.0 <= s) - 1;
    let (a, b) = (g[i], g[i + 1]);
    if b.0 == a.0 {
        return b.1;
    }
    a.1 + (b.1 - a.1) * (s - a.0) / (b.0 - a.0)
}

fn directed(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let (lo, hi) = (b[0].0, b[b.len() - 1].0);
    let mut probes: Vec<f64> = a.iter().map(|p| p.0).collect();
    probes.extend(b.iter().map(|p| p.0).filter(|s| *s > a[0].0 && *s < a[a.len() - 1].0));
    probes
        .into_iter()
        .map(|s| {
            let c = s.clamp(lo, hi);
            0.5 * ((s - c).abs() + (rotated_eval(a, s) - rotated_eval(b, c)).abs())
        })
        .fold(0.0, f64::max)
}

/// Product distance on pairs: `sup_{[0,S]} |φ − ψ|` against the M1 distance of the clocks.
pub fn dcirc_distance(p: &TimeChangedPath, q: &TimeChangedPath, s_max: f64) -> Result<f64> {
    if (p.horizon() - q.horizon()).abs() > 1e-12 * p.horizon().max(1.0) {
        return Err(invalid("pairs must share the physical horizon"));
    }
    Ok(p.phi.sup_distance(&q.phi, s_max).max(m1_distance_up(&p.tau, &q.tau)?))
}

/// Decoration at a marked time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mark {
    pub t: f64,
    pub lo: f64,
    pub hi: f64,
}

/// A base path with interval decorations at finitely many times; elsewhere `I_t = {x(t−), x(t)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoratedPath {
    pub base: CadlagPath,
    pub marks: Vec<Mark>,
}

impl DecoratedPath {
    pub fn new(base: CadlagPath, mut marks: Vec<Mark>) -> Result<Self> {
        marks.sort_by(|a, b| a.t.total_cmp(&b.t));
        for m in &marks {
            let (x, xl) = base.eval(m.t);
            let tol = 1e-12 * (1.0 + x.abs().max(xl.abs()));
            if !(m.lo <= m.hi) || x < m.lo - tol || x > m.hi + tol || xl < m.lo - tol || xl > m.hi + tol {
                return Err(invalid(format!("decoration [{}, {}] at t = {} misses the base path", m.lo, m.hi, m.t)));
            }
        }
        Ok(Self { base, marks })
    }

    /// Embedding with the minimal decoration.
    pub fn embed(base: CadlagPath) -> Self {
        Self { base, marks: Vec::new() }
    }

    /// `I_t` as an interval hull.
    pub fn decoration(&self, t: f64) -> (f64, f64) {
        if let Some(m) = self.marks.iter().find(|m| m.t == t) {
            return (m.lo, m.hi);
        }
        let (x, xl) = self.base.eval(t);
        (x.min(xl), x.max(xl))
    }

    /// Exact set `I_t`: the mark, or the two base values.
    fn decoration_set(&self, t: f64) -> Vec<(f64, f64)> {
        if let Some(m) = self.marks.iter().find(|m| m.t == t) {
            return vec![(m.lo, m.hi)];
        }
        let (x, xl) = self.base.eval(t);
        merge_intervals(vec![(x, x), (xl, xl)])
    }

    /// `Γ(I)` as segments `((t0, z0), (t1, z1))`: graph arcs and vertical decorations.
    pub fn graph_segments(&self) -> Vec<Segment> {
        let b = &self.base;
        let mut segs = Vec::with_capacity(b.len() + self.marks.len());
        for i in 0..b.len() {
            segs.push(Segment { a: (b.times[i], b.right[i]), b: (b.times[i], b.right[i]) });
            segs.push(Segment { a: (b.times[i], b.left[i]), b: (b.times[i], b.left[i]) });
            if i + 1 < b.len() {
                segs.push(Segment { a: (b.times[i], b.right[i]), b: (b.times[i + 1], b.left[i + 1]) });
            }
        }
        for m in &self.marks {
            segs.push(Segment { a: (m.t, m.lo), b: (m.t, m.hi) });
        }
        segs
    }

    /// Points of `Γ(I)` spaced at most `h` apart in the max metric.
    pub fn decoration_graph(&self, h: f64) -> Vec<(f64, f64)> {
        let mut pts = Vec::new();
        for s in self.graph_segments() {
            let len = (s.b.0 - s.a.0).abs().max((s.b.1 - s.a.1).abs());
            let k = ((len / h).ceil() as usize).max(1);
            for j in 0..=k {
                let u = j as f64 / k as f64;
                pts.push((s.a.0 + u * (s.b.0 - s.a.0), s.a.1 + u * (s.b.1 - s.a.1)));
            }
        }
        pts
    }

    pub fn write_csv(&self, base: impl AsRef<Path>, marks: impl AsRef<Path>) -> Result<()> {
        self.base.write_csv(base)?;
        let mut f = std::io::BufWriter::new(std::fs::File::create(marks)?);
        writeln!(f, "t,lo,hi")?;
        for m in &self.marks {
            writeln!(f, "{},{},{}", m.t, m.lo, m.hi)?;
        }
        Ok(())
    }

    pub fn read_csv(base: impl AsRef<Path>, marks: impl AsRef<Path>) -> Result<Self> {
        let base = CadlagPath::read_csv(base)?;
        let marks = read_table(marks, 3)?.into_iter().map(|r| Mark { t: r[0], lo: r[1], hi: r[2] }).collect();
        Self::new(base, marks)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: (f64, f64),
    pub b: (f64, f64),
}

impl Segment {
    fn t_span(&self) -> (f64, f64) {
        (self.a.0.min(self.b.0), self.a.0.max(self.b.0))
    }

    /// Max-metric distance from `p`, minimising a convex piecewise-linear function of the segment parameter.
    pub fn distance(&self, p: (f64, f64)) -> f64 {
        let (dx, dy) = (self.b.0 - self.a.0, self.b.1 - self.a.1);
        let (ex, ey) = (self.a.0 - p.0, self.a.1 - p.1);
        let f = |v: f64| (ex + v * dx).abs().max((ey + v * dy).abs());
        let mut best = f(0.0).min(f(1.0));
        let mut try_v = |v: f64| {
            if v > 0.0 && v < 1.0 {
                best = best.min(f(v));
            }
        };
        if dx != 0.0 {
            try_v(-ex / dx);
        }
        if dy != 0.0 {
            try_v(-ey / dy);
        }
        if dx != dy {
            try_v((ey - ex) / (dx - dy));
        }
        if dx != -dy {
            try_v(-(ex + ey) / (dx + dy));
        }
        best
    }
}

struct SegmentIndex {
    segs: Vec<Segment>,
    max_width: f64,
}

impl SegmentIndex {
    fn new(mut segs: Vec<Segment>) -> Self {
        segs.sort_by(|a, b| a.t_span().0.total_cmp(&b.t_span().0));
        let max_width = segs.iter().map(|s| s.t_span().1 - s.t_span().0).fold(0.0, f64::max);
        Self { segs, max_width }
    }

    fn distance(&self, p: (f64, f64)) -> f64 {
        let n = self.segs.len();
        let start = self.segs.partition_point(|s| s.t_span().0 <= p.0);
        let mut best = f64::INFINITY;
        // Outward scan in both directions until the time gap alone exceeds the best distance.
        let mut i = start;
        while i < n {
            let s = &self.segs[i];
            if s.t_span().0 - p.0 > best {
                break;
            }
            best = best.min(s.distance(p));
            i += 1;
        }
        let mut i = start;
        while i > 0 {
            i -= 1;
            let s = &self.segs[i];
            if p.0 - s.t_span().0 > best + self.max_width {
                break;
            }
            best = best.min(s.distance(p));
        }
        best
    }
}

/// Decorated distance: Hausdorff distance of the graphs `Γ(I)` under the max metric,
/// with `Γ` discretised at spacing `h`; the error is at most `h/2`.
pub fn d_frak_with(d: &DecoratedPath, e: &DecoratedPath, h: f64) -> f64 {
    if d == e {
        return 0.0;
    }
    let ia = SegmentIndex::new(d.graph_segments());
    let ib = SegmentIndex::new(e.graph_segments());
    let ab = d.decoration_graph(h).into_iter().map(|p| ib.distance(p)).fold(0.0, f64::max);
    let ba = e.decoration_graph(h).into_iter().map(|p| ia.distance(p)).fold(0.0, f64::max);
    ab.max(ba)
}

/// [`d_frak_with`] at a spacing of `10⁻⁴` times the extent of both graphs.
pub fn d_frak(d: &DecoratedPath, e: &DecoratedPath) -> f64 {
    let extent = |p: &DecoratedPath| {
        let v = p.base.sup_norm().max(p.marks.iter().fold(0.0, |m, k| m.max(k.lo.abs()).max(k.hi.abs())));
        p.base.horizon() - p.base.start() + 2.0 * v
    };
    let h = 1e-4 * extent(d).max(extent(e)).max(1e-12);
    d_frak_with(d, e, h)
}

/// Ladder table at one probe time.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub t: f64,
    /// `table[n][j]` for sequence member `n` and ladder entry `δ_j`.
    pub table: Vec<Vec<f64>>,
    /// Maximum over the second half of the sequence, per `δ`.
    pub tail: Vec<f64>,
    /// Tail values are non-increasing as `δ` decreases.
    pub decays: bool,
}

/// Report of a ladder-based limit check.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderReport {
    pub deltas: Vec<f64>,
    pub rows: Vec<ProbeRow>,
    /// `|xⁿ(T) − x(T)|` along the sequence.
    pub endpoint_errors: Vec<f64>,
    /// Probes dropped because they hit the exclusion set.
    pub skipped: Vec<f64>,
}

impl LadderReport {
    pub fn all_decay(&self) -> bool {
        self.rows.iter().all(|r| r.decays)
    }

    /// Probes whose ladder is not monotone.
    pub fn flagged(&self) -> Vec<f64> {
        self.rows.iter().filter(|r| !r.decays).map(|r| r.t).collect()
    }

    /// Largest tail value at the smallest `δ`.
    pub fn worst_final(&self) -> f64 {
        self.rows.iter().filter_map(|r| r.tail.last().copied()).fold(0.0, f64::max)
    }
}

fn ladder_row(t: f64, deltas: &[f64], n: usize, value: impl Fn(usize, f64) -> f64) -> ProbeRow {
    let table: Vec<Vec<f64>> = (0..n).map(|k| deltas.iter().map(|d| value(k, *d)).collect()).collect();
    let from = n / 2;
    let tail: Vec<f64> = (0..deltas.len()).map(|j| table[from..].iter().map(|r| r[j]).fold(0.0, f64::max)).collect();
    let decays = tail.windows(2).all(|w| w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()));
    ProbeRow { t, table, tail, decays }
}

fn sorted_ladder(deltas: &[f64]) -> Vec<f64> {
    let mut d = deltas.to_vec();
    d.sort_by(|a, b| b.total_cmp(a));
    d
}

/// Locally uniform convergence check: `sup{|zⁿ(s) − z(r)| : s, r ∈ B(t, δ)}` over the ladder.
pub fn local_uniform_check(
    seq: &[CadlagPath],
    z: &CadlagPath,
    exclusion: &[f64],
    probes: &[f64],
    deltas: &[f64],
) -> LadderReport {
    let deltas = sorted_ladder(deltas);
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for &t in probes {
        if exclusion.iter().any(|e| (e - t).abs() <= 1e-14 * (1.0 + t.abs())) {
            skipped.push(t);
            continue;
        }
        rows.push(ladder_row(t, &deltas, seq.len(), |k, d| {
            let (a, b) = (t - d, t + d);
            let (lo_n, hi_n) = seq[k].range(a, b);
            let (lo, hi) = z.range(a, b);
            (hi_n - lo).max(hi - lo_n)
        }));
    }
    let zt = z.value(z.horizon());
    let endpoint_errors = seq.iter().map(|x| (x.value(x.horizon()) - zt).abs()).collect();
    LadderReport { deltas, rows, endpoint_errors, skipped }
}

/// Decorated limit check: `d_H(xⁿ(B(t, δ)), I_t)` over the ladder.
pub fn decorated_limit_check(seq: &[CadlagPath], target: &DecoratedPath, probes: &[f64], deltas: &[f64]) -> LadderReport {
    let deltas = sorted_ladder(deltas);
    let rows = probes
        .iter()
        .map(|&t| {
            let set = target.decoration_set(t);
            let (a, b) = (set[0].0, set[set.len() - 1].1);
            ladder_row(t, &deltas, seq.len(), |k, d| {
                let img = seq[k].image(t - d, t + d);
                if set.len() == 1 {
                    hausdorff_to_interval(&img, a, b)
                } else {
                    hausdorff_sets(&img, &set)
                }
            })
        })
        .collect();
    let zt = target.base.value(target.base.horizon());
    let endpoint_errors = seq.iter().map(|x| (x.value(x.horizon()) - zt).abs()).collect();
    LadderReport { deltas, rows, endpoint_errors, skipped: Vec::new() }
}

fn hausdorff_sets(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let directed = |p: &[(f64, f64)], q: &[(f64, f64)]| {
        p.iter().map(|(lo, hi)| hausdorff_to_union_one_sided(q, *lo, *hi)).fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

/// `sup_{z ∈ [lo, hi]} dist(z, set)`.
fn hausdorff_to_union_one_sided(set: &[(f64, f64)], lo: f64, hi: f64) -> f64 {
    let dist = |z: f64| {
        set.iter()
            .map(|(l, h)| {
                if z < *l {
                    l - z
                } else if z > *h {
                    z - h
                } else {
                    0.0
                }
            })
            .fold(f64::INFINITY, f64::min)
    };
    let mut m = dist(lo).max(dist(hi));
    for w in set.windows(2) {
        // Farthest point of a gap is its midpoint, clamped into [lo, hi].
        let mid = (0.5 * (w[0].1 + w[1].0)).clamp(lo, hi);
        m = m.max(dist(mid));
    }
    m
}

/// Limiting range of `φ∘τ + ψ∘ς` at `t` when the jump sets are disjoint.
pub fn sum_range(p: &TimeChangedPath, q: &TimeChangedPath, t: f64) -> Result<(f64, f64)> {
    let pj = p.tau.jump_times().contains(&t);
    let qj = q.tau.jump_times().contains(&t);
    match (pj, qj) {
        (true, true) => Err(invalid(format!("both clocks jump at t = {t}"))),
        (true, false) => {
            let y = q.phi.eval(q.tau.value(t));
            let (lo, hi) = p.jump_range(t);
            Ok((lo + y, hi + y))
        }
        (false, true) => {
            let x = p.phi.eval(p.tau.value(t));
            let (lo, hi) = q.jump_range(t);
            Ok((lo + x, hi + x))
        }
        (false, false) => {
            let v = p.phi.eval(p.tau.value(t)) + q.phi.eval(q.tau.value(t));
            Ok((v, v))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(n: f64) -> CadlagPath {
        let t = vec![0.0, 0.5 - 0.5 / n, 0.5 + 0.5 / n, 1.0];
        CadlagPath::continuous(t, vec![0.0, 0.0, 1.0, 1.0]).unwrap()
    }

    fn unit_step(at: f64) -> CadlagPath {
        CadlagPath::step(vec![0.0, at, 1.0], vec![0.0, 1.0, 1.0]).unwrap()
    }

    /// Points on the completed graph, spaced at most `h`.
    fn completed_points(x: &CadlagPath, h: f64) -> Vec<(f64, f64)> {
        let mut nodes = Vec::new();
        for i in 0..x.len() {
            nodes.push((x.times()[i], x.lefts()[i]));
            nodes.push((x.times()[i], x.rights()[i]));
        }
        let mut pts = Vec::new();
        for w in nodes.windows(2) {
            let len = (w[1].0 - w[0].0).abs().max((w[1].1 - w[0].1).abs());
            let k = ((len / h).ceil() as usize).max(1);
            for j in 0..=k {
                let u = j as f64 / k as f64;
                pts.push((w[0].0 + u * (w[1].0 - w[0].0), w[0].1 + u * (w[1].1 - w[0].1)));
            }
        }
        pts
    }

    fn brute_hausdorff(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
        let d = |p: &(f64, f64), q: &(f64, f64)| (p.0 - q.0).abs().max((p.1 - q.1).abs());
        let dir = |a: &[(f64, f64)], b: &[(f64, f64)]| {
            a.iter().map(|p| b.iter().map(|q| d(p, q)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
        };
        dir(a, b).max(dir(b, a))
    }

    #[test]
    fn compose_identity_and_step() {
        let phi = ContinuousPath::from_fn(1.0, 50, |s| (3.0 * s).sin()).unwrap();
        let tau = CadlagPath::continuous(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let x = TimeChangedPath::new(phi.clone(), tau).unwrap().compose();
        for s in [0.0, 0.13, 0.5, 0.999] {
            assert!((x.value(s) - phi.eval(s)).abs() < 1e-14);
        }
        let phi = ContinuousPath::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let x = TimeChangedPath::new(phi, unit_step(0.5)).unwrap().compose();
        assert_eq!(x, unit_step(0.5));
    }

    #[test]
    fn compose_ignores_traversal_inside_jump() {
        let tau = CadlagPath::step(vec![0.0, 0.5, 1.0], vec![0.2, 0.8, 0.8]).unwrap();
        let a = ContinuousPath::from_fn(1.0, 100, |s| s * s).unwrap();
        let b = ContinuousPath::from_fn(1.0, 100, |s| {
            if s > 0.2 && s < 0.8 {
                s * s + (std::f64::consts::PI * (s - 0.2) / 0.6).sin()
            } else {
                s * s
            }
        })
        .unwrap();
        let xa = TimeChangedPath::new(a, tau.clone()).unwrap().compose();
        let xb = TimeChangedPath::new(b, tau).unwrap().compose();
        for t in [0.0, 0.3, 0.5, 0.7, 1.0] {
            assert!((xa.value(t) - xb.value(t)).abs() < 1e-14);
            assert!((xa.eval(t).1 - xb.eval(t).1).abs() < 1e-14);
        }
    }

    #[test]
    fn compose_is_exact_for_linear_inputs() {
        let phi = ContinuousPath::new(vec![0.0, 0.3, 0.7, 2.0], vec![0.0, 1.0, -1.0, 0.5]).unwrap();
        let tau = CadlagPath::new(vec![0.0, 0.4, 1.0], vec![0.0, 0.5, 2.0], vec![0.0, 0.9, 2.0]).unwrap();
        let p = TimeChangedPath::new(phi.clone(), tau.clone()).unwrap();
        let x = p.compose();
        for k in 0..=1000 {
            let t = k as f64 / 1000.0;
            assert!((x.value(t) - phi.eval(tau.value(t))).abs() < 1e-13);
        }
        assert!(matches!(TimeChangedPath::new(ContinuousPath::from_fn(1.0, 4, |s| s).unwrap(), tau), Err(Error::Coverage(_))));
    }

    #[test]
    fn m1_examples() {
        let x = ramp(4.0);
        assert_eq!(m1_distance_up(&x, &x).unwrap(), 0.0);
        let step = unit_step(0.5);
        let d: Vec<f64> = [2.0, 8.0, 32.0, 128.0].iter().map(|n| m1_distance_up(&ramp(*n), &step).unwrap()).collect();
        assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
        assert!(d[3] < 0.01);
        for delta in [0.01, 0.05, 0.1] {
            let m = m1_distance_up(&unit_step(0.5), &unit_step(0.5 + delta)).unwrap();
            assert!((m - delta).abs() < 1e-12, "{m}");
            let brute =
                brute_hausdorff(&completed_points(&unit_step(0.5), 1e-3), &completed_points(&unit_step(0.5 + delta), 1e-3));
            assert!((brute - delta).abs() <= 1e-3);
        }
    }

    #[test]
    fn m1_matches_brute_force_on_ramps() {
        for n in [2.0, 5.0, 20.0] {
            let exact = m1_distance_up(&ramp(n), &unit_step(0.5)).unwrap();
            let brute = brute_hausdorff(&completed_points(&ramp(n), 2e-3), &completed_points(&unit_step(0.5), 2e-3));
            assert!((exact - brute).abs() <= 2e-3, "{exact} vs {brute}");
        }
    }

    #[test]
    fn dcirc_examples() {
        let phi = ContinuousPath::from_fn(2.0, 40, |s| s.sin()).unwrap();
        let tau = ramp(4.0);
        let p = TimeChangedPath::new(phi.clone(), tau.clone()).unwrap();
        assert_eq!(dcirc_distance(&p, &p, 2.0).unwrap(), 0.0);
        let shifted = ContinuousPath::new(phi.grid().to_vec(), phi.values().iter().map(|v| v + 0.25).collect()).unwrap();
        let q = TimeChangedPath::new(shifted, tau).unwrap();
        assert!((dcirc_distance(&p, &q, 2.0).unwrap() - 0.25).abs() < 1e-14);
        let limit = TimeChangedPath::new(phi.clone(), unit_step(0.5)).unwrap();
        let ds: Vec<f64> = [2.0, 8.0, 32.0, 128.0]
            .iter()
            .map(|n| {
                let phin = ContinuousPath::new(phi.grid().to_vec(), phi.values().iter().map(|v| v + 1.0 / n).collect()).unwrap();
                dcirc_distance(&TimeChangedPath::new(phin, ramp(*n)).unwrap(), &limit, 1.0).unwrap()
            })
            .collect();
        assert!(ds.windows(2).all(|w| w[1] < w[0]) && ds[3] < 0.01, "{ds:?}");
    }

    #[test]
    fn local_uniform_examples() {
        let z = unit_step(0.5);
        let constant = vec![z.clone(); 4];
        let r = local_uniform_check(&constant, &z, &[0.5], &[0.2, 0.5, 0.8], &[0.1, 0.05, 0.01]);
        assert_eq!(r.skipped, vec![0.5]);
        assert!(r.rows.iter().all(|row| row.table.iter().flatten().all(|v| *v == 0.0)));
        let seq: Vec<CadlagPath> = [2.0, 8.0, 32.0, 128.0, 512.0].iter().map(|n| ramp(*n)).collect();
        let r = local_uniform_check(&seq, &z, &[0.5], &[0.25, 0.45, 0.55, 0.9], &[0.2, 0.1, 0.04, 0.01]);
        assert!(r.all_decay(), "{:?}", r.flagged());
        assert_eq!(r.worst_final(), 0.0);
        assert!(r.endpoint_errors.iter().all(|e| *e == 0.0));
    }

    #[test]
    fn jump_range_examples() {
        let id = ContinuousPath::new(vec![0.0, 2.0], vec![0.0, 2.0]).unwrap();
        let tau = CadlagPath::step(vec![0.0, 0.5, 1.0], vec![0.0, 2.0, 2.0]).unwrap();
        let p = TimeChangedPath::new(id, tau.clone()).unwrap();
        assert_eq!(p.jump_range(0.5), (0.0, 2.0));
        assert_eq!(p.jump_range(0.3), (0.0, 0.0));
        let sine = ContinuousPath::from_fn(2.0, 4000, |s| (std::f64::consts::PI * s).sin()).unwrap();
        let p = TimeChangedPath::new(sine.clone(), tau).unwrap();
        let (lo, hi) = p.jump_range(0.5);
        let fine: Vec<f64> = (0..=4000).map(|k| sine.eval(2.0 * k as f64 / 4000.0)).collect();
        let olo = fine.iter().copied().fold(f64::INFINITY, f64::min);
        let ohi = fine.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!((lo - olo).abs() < 1e-14 && (hi - ohi).abs() < 1e-14);
        assert!((lo + 1.0).abs() < 1e-6 && (hi - 1.0).abs() < 1e-6);
    }

    #[test]
    fn envelopes() {
        let phi = ContinuousPath::from_fn(1.0, 10, |s| s * s).unwrap();
        let tau = CadlagPath::continuous(vec![0.0, 1.0], vec![0.2, 1.0]).unwrap();
        let e = TimeChangedPath::new(phi.clone(), tau).unwrap().running_envelopes();
        for s in [0.0, 0.2, 0.5, 1.0] {
            assert!((e.lower.eval(s) - 0.04).abs() < 1e-14);
            assert!((e.hat.eval(s) - (phi.eval(s) - 0.04)).abs() < 1e-14);
        }
        // Brownian-like samples composed with a continuous clock.
        let mut w = 0.0f64;
        let mut state = 12345u64;
        let phi = ContinuousPath::from_fn(3.0, 600, |_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            w += ((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 0.2;
            w
        })
        .unwrap();
        let tau = CadlagPath::from_fn(1.0, 37, |t| 0.1 + 2.5 * t * t).unwrap();
        let p = TimeChangedPath::new(phi, tau).unwrap();
        let e = p.running_envelopes();
        let x = p.compose();
        let mut m = f64::INFINITY;
        let mut last_t = 0.0;
        let mut pts: Vec<f64> = x.times().to_vec();
        pts.extend((0..=3000).map(|k| k as f64 / 3000.0));
        pts.sort_by(f64::total_cmp);
        for t in pts {
            let (lo, _) = x.range(last_t, t);
            m = m.min(lo);
            last_t = t;
            assert!((e.lower_x.value(t) - m).abs() < 1e-12, "t = {t}");
            assert!(e.hat_x.value(t) >= -1e-15);
        }
    }

    #[test]
    fn skorokhod_examples() {
        let x = CadlagPath::continuous(vec![0.0, 1.0], vec![0.5, 2.0]).unwrap();
        let (l, hat) = skorokhod_map(&x);
        assert!(l.rights().iter().all(|v| *v == -0.5));
        assert!((hat.value(1.0) - 1.5).abs() < 1e-15);
        let x = CadlagPath::continuous(vec![0.0, 1.0], vec![0.0, -1.0]).unwrap();
        let (l, hat) = skorokhod_map(&x);
        for t in [0.0, 0.3, 1.0] {
            assert!((l.value(t) - t).abs() < 1e-15 && hat.value(t).abs() < 1e-15);
        }
    }

    #[test]
    fn skorokhod_sawtooth_against_scan() {
        let times: Vec<f64> = (0..=40).map(|k| k as f64 / 40.0).collect();
        let mut state = 99u64;
        let mut v = 0.0;
        let vals: Vec<f64> = times
            .iter()
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                v += ((state >> 11) as f64 / (1u64 << 53) as f64 - 0.55) * 0.6;
                v
            })
            .collect();
        let x = CadlagPath::continuous(times, vals).unwrap();
        let (l, hat) = skorokhod_map(&x);
        let mut m = f64::INFINITY;
        for k in 0..=20000 {
            let t = k as f64 / 20000.0;
            m = m.min(x.value(t));
            assert!((l.value(t) + m).abs() < 1e-3, "t = {t}");
            assert!(hat.value(t) >= -1e-14);
        }
    }

    #[test]
    fn d_frak_examples() {
        let base = ramp(10.0);
        let d = DecoratedPath::embed(base.clone());
        assert_eq!(d_frak(&d, &d), 0.0);
        let step = unit_step(0.5);
        let a = DecoratedPath::new(step.clone(), vec![Mark { t: 0.5, lo: 0.0, hi: 1.0 }]).unwrap();
        let b = DecoratedPath::new(step, vec![Mark { t: 0.5, lo: -0.05, hi: 1.0 }]).unwrap();
        assert!((d_frak(&a, &b) - 0.05).abs() < 1e-12);
        let brute = brute_hausdorff(&a.decoration_graph(1e-3), &b.decoration_graph(1e-3));
        assert!((brute - 0.05).abs() < 1e-3);
        let x = CadlagPath::from_fn(1.0, 50, |t| (4.0 * t).sin()).unwrap();
        let y = x.map(|v| v + 0.03);
        let exact = d_frak(&DecoratedPath::embed(x.clone()), &DecoratedPath::embed(y.clone()));
        let brute =
            brute_hausdorff(&DecoratedPath::embed(x).decoration_graph(1e-3), &DecoratedPath::embed(y).decoration_graph(1e-3));
        assert!((exact - brute).abs() < 1e-3 && exact <= 0.03 + 1e-12, "{exact} {brute}");
    }

    #[test]
    fn decorated_checks() {
        let step = unit_step(0.5);
        let target = DecoratedPath::new(step.clone(), vec![Mark { t: 0.5, lo: 0.0, hi: 1.0 }]).unwrap();
        let same = DecoratedPath::embed(step.clone());
        let r = decorated_limit_check(&vec![step.clone(); 3], &same, &[0.25, 0.5, 0.75], &[0.1, 0.01]);
        assert!(r.rows.iter().all(|row| row.table.iter().flatten().all(|v| *v == 0.0)));
        let seq: Vec<CadlagPath> = [4.0, 16.0, 64.0, 256.0].iter().map(|n| ramp(*n)).collect();
        let r = decorated_limit_check(&seq, &target, &[0.25, 0.5, 0.75], &[0.2, 0.05, 0.01]);
        assert!(r.all_decay() && r.worst_final() < 1e-12, "{:?}", r.rows);
        // Oscillating traversal of [−1, 1] before settling at −1.
        let phi =
            ContinuousPath::from_fn(2.0, 2000, |s| if s <= 1.0 { 0.0 } else { (1.5 * std::f64::consts::PI * (s - 1.0)).sin() })
                .unwrap();
        let clock = |n: f64| CadlagPath::continuous(vec![0.0, 0.5 - 1.0 / n, 0.5, 1.0], vec![0.0, 1.0, 2.0, 2.0]).unwrap();
        let limit_tau = CadlagPath::new(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 2.0]).unwrap();
        let target = TimeChangedPath::new(phi.clone(), limit_tau).unwrap().decorated();
        assert_eq!(target.marks.len(), 1);
        assert!((target.marks[0].lo + 1.0).abs() < 1e-5 && (target.marks[0].hi - 1.0).abs() < 1e-5);
        let seq: Vec<CadlagPath> =
            [8.0, 32.0, 128.0, 512.0].iter().map(|n| TimeChangedPath::new(phi.clone(), clock(*n)).unwrap().compose()).collect();
        let r = decorated_limit_check(&seq, &target, &[0.3, 0.5, 0.8], &[0.1, 0.03, 0.01]);
        assert!(r.all_decay() && r.worst_final() < 1e-9, "{:?}", r.rows);
        let naive = decorated_limit_check(&seq, &DecoratedPath::embed(target.base.clone()), &[0.5], &[0.01]);
        assert!(naive.worst_final() > 0.9);
    }

    #[test]
    fn sum_of_disjoint_jumps() {
        let phi = ContinuousPath::from_fn(2.0, 400, |s| (3.0 * s).sin()).unwrap();
        let psi = ContinuousPath::from_fn(2.0, 400, |s| s * s).unwrap();
        let jump_at = |at: f64| CadlagPath::new(vec![0.0, at, 1.0], vec![0.0, 0.5, 2.0], vec![0.0, 1.5, 2.0]).unwrap();
        let ramp_at = |at: f64, n: f64| {
            CadlagPath::continuous(vec![0.0, at - 1.0 / n, at, 1.0], vec![0.0, 0.5 * (at - 1.0 / n) / at, 1.5, 2.0]).unwrap()
        };
        let p = TimeChangedPath::new(phi.clone(), jump_at(0.3)).unwrap();
        let q = TimeChangedPath::new(psi.clone(), jump_at(0.7)).unwrap();
        assert!(sum_range(&p, &p, 0.3).is_err());
        for (t, n_seq) in [(0.3, [16.0, 64.0, 256.0, 1024.0]), (0.7, [16.0, 64.0, 256.0, 1024.0])] {
            let (lo, hi) = sum_range(&p, &q, t).unwrap();
            let seq: Vec<CadlagPath> = n_seq
                .iter()
                .map(|n| {
                    let xn = TimeChangedPath::new(phi.clone(), ramp_at(0.3, *n)).unwrap().compose();
                    let yn = TimeChangedPath::new(psi.clone(), ramp_at(0.7, *n)).unwrap().compose();
                    let grid: Vec<f64> = (0..=20000).map(|k| k as f64 / 20000.0).collect();
                    let vals = grid.iter().map(|s| xn.value(*s) + yn.value(*s)).collect();
                    CadlagPath::continuous(grid, vals).unwrap()
                })
                .collect();
            let base = CadlagPath::from_fn(1.0, 20000, |s| p.compose().value(s) + q.compose().value(s)).unwrap();
            let target = DecoratedPath { base, marks: vec![Mark { t, lo, hi }] };
            let r = decorated_limit_check(&seq, &target, &[t], &[0.1, 0.02, 0.005]);
            assert!(r.worst_final() < 0.05, "t = {t}: {:?}", r.rows[0].tail);
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let d = DecoratedPath::new(unit_step(0.5), vec![Mark { t: 0.5, lo: -0.5, hi: 1.0 }]).unwrap();
        d.write_csv(dir.path().join("b.csv"), dir.path().join("m.csv")).unwrap();
        let back = DecoratedPath::read_csv(dir.path().join("b.csv"), dir.path().join("m.csv")).unwrap();
        assert_eq!(back, d);
    }

    fn up_path() -> impl Strategy<Value = CadlagPath> {
        prop::collection::vec((0.001f64..0.3, 0.0f64..0.5, 0.0f64..0.5), 1..8).prop_map(|steps| {
            let total: f64 = steps.iter().map(|s| s.0).sum();
            let mut t = 0.0;
            let mut v = 0.0;
            let (mut ts, mut ls, mut rs) = (vec![0.0], vec![0.0], vec![0.0]);
            for (dt, dv, jump) in steps {
                t += dt / total;
                v += dv;
                ts.push(t.min(1.0));
                ls.push(v);
                v += jump;
                rs.push(v);
            }
            *ts.last_mut().unwrap() = 1.0;
            ts.dedup();
            let n = ts.len();
            CadlagPath::new(ts, ls[..n].to_vec(), rs[..n].to_vec()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn m1_is_a_pseudometric(x in up_path(), y in up_path(), z in up_path()) {
            let dxy = m1_distance_up(&x, &y).unwrap();
            let dyx = m1_distance_up(&y, &x).unwrap();
            prop_assert!((dxy - dyx).abs() <= 1e-12);
            prop_assert!(m1_distance_up(&x, &x).unwrap() == 0.0);
            let dxz = m1_distance_up(&x, &z).unwrap();
            let dzy = m1_distance_up(&z, &y).unwrap();
            prop_assert!(dxy <= dxz + dzy + 1e-12);
        }

        #[test]
        fn skorokhod_outputs(vals in prop::collection::vec(-2.0f64..2.0, 2..30), jumps in prop::collection::vec(-1.0f64..1.0, 2..30)) {
            let n = vals.len().min(jumps.len());
            let times: Vec<f64> = (0..n).map(|k| k as f64).collect();
            let right: Vec<f64> = (0..n).map(|k| vals[k] + jumps[k]).collect();
            let x = CadlagPath::new(times, vals[..n].to_vec(), right).unwrap();
            let (l, hat) = skorokhod_map(&x);
            prop_assert!(l.is_nondecreasing());
            prop_assert!(hat.lefts().iter().chain(hat.rights()).all(|v| *v >= -1e-12));
        }

        #[test]
        fn equal_compositions_have_equal_limits(a in 0.1f64..0.9, c in 0.5f64..3.0) {
            // φ∘τ = g∘ς with g(s) = φ(s/c) and ς = cτ.
            let phi = ContinuousPath::from_fn(2.0, 200, |s| (2.0 * s).cos()).unwrap();
            let g = ContinuousPath::from_fn(2.0 * c, 200, |s| (2.0 * s / c).cos()).unwrap();
            let tau = CadlagPath::new(vec![0.0, a, 1.0], vec![0.0, 0.5, 2.0], vec![0.0, 1.5, 2.0]).unwrap();
            let x = TimeChangedPath::new(phi, tau.clone()).unwrap().compose();
            let y = TimeChangedPath::new(g, tau.map(|v| c * v)).unwrap().compose();
            for k in 0..=50 {
                let t = k as f64 / 50.0;
                prop_assert!((x.value(t) - y.value(t)).abs() < 1e-9);
            }
        }
    }
}
