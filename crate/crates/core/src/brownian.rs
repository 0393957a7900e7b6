//! A lazily extended Brownian path on a uniform clock grid, with dyadic
//! bridge refinement. Every node value is a function of `(seed, level, index)`
//! only, so values never depend on the order of queries.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};

/// Stream used for per-cell auxiliary uniforms.
const AUX_STREAM: u64 = 1 << 20;

/// Keyed random source: draw `index` of stream `stream` is always the same.
#[derive(Debug, Clone)]
struct KeyedStream {
    rng: ChaCha8Rng,
    next: u64,
}

impl KeyedStream {
    fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, next: 0 }
    }

    fn seek(&mut self, index: u64) {
        if index != self.next {
            self.rng.set_word_pos(index as u128 * 4);
            self.next = index;
        }
    }

    fn uniform_pair(&mut self, index: u64) -> (f64, f64) {
        self.seek(index);
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        self.next += 1;
        (open01(a), open01(b))
    }

    fn normal(&mut self, index: u64) -> f64 {
        let (u, v) = self.uniform_pair(index);
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    }
}

fn open01(x: u64) -> f64 {
    ((x >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Brownian motion `W` on `[0, ∞)` sampled at `k δ`, `δ = base_step / 2^level`.
#[derive(Debug, Clone)]
pub struct BrownianClock {
    seed: u64,
    base_step: f64,
    level: u32,
    step: f64,
    values: Vec<f64>,
    streams: Vec<KeyedStream>,
    aux: KeyedStream,
    max_nodes: usize,
}

impl BrownianClock {
    pub fn new(base_step: f64, seed: u64) -> Result<Self> {
        Self::refined(base_step, 0, seed)
    }

    /// A clock whose coarse nodes coincide with `BrownianClock::new(base_step, seed)`
    /// and whose finer nodes are bridge draws.
    pub fn refined(base_step: f64, level: u32, seed: u64) -> Result<Self> {
        if !(base_step > 0.0 && base_step.is_finite()) {
            return Err(invalid(format!("clock step must be positive, got {base_step}")));
        }
        if level > 30 {
            return Err(invalid("refinement level above 30"));
        }
        Ok(Self {
            seed,
            base_step,
            level,
            step: base_step / f64::from(1u32 << level),
            values: vec![0.0],
            streams: (0..=u64::from(level)).map(|l| KeyedStream::new(seed, l)).collect(),
            aux: KeyedStream::new(seed, AUX_STREAM),
            max_nodes: 200_000_000,
        })
    }

    /// Caps the number of stored nodes; queries beyond it fail with a budget error.
    pub fn with_node_budget(mut self, max_nodes: usize) -> Self {
        self.max_nodes = max_nodes;
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn base_step(&self) -> f64 {
        self.base_step
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Node values `W(kδ)` generated so far.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Clock time covered so far.
    pub fn horizon(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.step
    }

    /// Makes sure nodes cover `[0, s]`.
    pub fn extend_to(&mut self, s: f64) -> Result<()> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(invalid(format!("Brownian clock queried at {s}")));
        }
        let fine_per_coarse = 1usize << self.level;
        let needed = (s / self.step).ceil() as usize + 1;
        if needed > self.max_nodes {
            return Err(Error::Budget(format!("clock time {s} needs {needed} nodes")));
        }
        while self.values.len() < needed {
            self.push_coarse_cell(fine_per_coarse);
        }
        Ok(())
    }

    fn push_coarse_cell(&mut self, fine: usize) {
        let k = ((self.values.len() - 1) / fine) as u64;
        let left = *self.values.last().expect("non-empty");
        let right = left + self.base_step.sqrt() * self.streams[0].normal(k);
        let mut cell = vec![0.0; fine + 1];
        cell[0] = left;
        cell[fine] = right;
        let mut span = fine;
        let mut h = self.base_step;
        for l in 1..=self.level as usize {
            let half = span / 2;
            let per_cell = (fine / span) as u64;
            for c in 0..fine / span {
                let (a, b) = (c * span, (c + 1) * span);
                let z = self.streams[l].normal(k * per_cell + c as u64);
                cell[a + half] = 0.5 * (cell[a] + cell[b]) + (0.25 * h).sqrt() * z;
            }
            span = half;
            h *= 0.5;
        }
        self.values.extend_from_slice(&cell[1..]);
    }

    /// `W(s)`, linearly interpolated between nodes.
    pub fn value(&mut self, s: f64) -> Result<f64> {
        self.extend_to(s)?;
        Ok(self.value_within(s))
    }

    /// `W(s)` for `s` already covered; clamps to the covered range.
    pub fn value_within(&self, s: f64) -> f64 {
        let x = s / self.step;
        let i = (x.floor() as usize).min(self.values.len() - 1);
        if i + 1 >= self.values.len() {
            return self.values[i];
        }
        let w = x - i as f64;
        self.values[i] + w * (self.values[i + 1] - self.values[i])
    }

    /// Node index `k` with `kδ ≤ s < (k+1)δ`.
    pub fn cell_of(&self, s: f64) -> usize {
        (s / self.step).floor().max(0.0) as usize
    }

    /// A uniform on `(0, 1)` attached to grid cell `k`.
    pub fn cell_uniform(&mut self, k: usize) -> f64 {
        self.aux.uniform_pair(k as u64).0
    }
}

/// Seed of replication `index` under `master`, via two rounds of splitmix64.
pub fn path_seed(master: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(master) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_order_does_not_matter() {
        let mut a = BrownianClock::refined(0.1, 3, 42).unwrap();
        let mut b = BrownianClock::refined(0.1, 3, 42).unwrap();
        let x = a.value(5.0).unwrap();
        for s in [0.3, 1.7, 4.2, 5.0] {
            b.value(s).unwrap();
        }
        assert_eq!(x, b.value(5.0).unwrap());
        assert_eq!(a.values(), &b.values()[..a.values().len()]);
    }

    #[test]
    fn refinement_keeps_coarse_nodes() {
        let mut coarse = BrownianClock::new(0.5, 9).unwrap();
        let mut fine = BrownianClock::refined(0.5, 4, 9).unwrap();
        coarse.extend_to(20.0).unwrap();
        fine.extend_to(20.0).unwrap();
        for (k, v) in coarse.values().iter().enumerate() {
            assert_eq!(*v, fine.values()[16 * k]);
        }
    }

    #[test]
    fn increments_have_brownian_variance() {
        let mut c = BrownianClock::refined(1.0, 2, 1).unwrap();
        c.extend_to(40_000.0).unwrap();
        let v = c.values();
        let n = v.len() - 1;
        let q: f64 = v.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / n as f64;
        assert!((q / c.step() - 1.0).abs() < 0.02, "{q}");
    }

    #[test]
    fn budget_is_enforced() {
        let mut c = BrownianClock::new(0.1, 1).unwrap().with_node_budget(100);
        assert!(matches!(c.value(50.0), Err(Error::Budget(_))));
    }
}
