//! Counter-keyed random substreams.
//!
//! Every stochastic draw pulls from a generator derived from
//! `(run seed, module, step index, actor)`, so results do not depend on the
//! order in which modules are evaluated within a step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Module {
    Scenario = 1,
    Kick = 2,
    Perception = 3,
    Hough = 4,
    Gyro = 5,
    Odometry = 6,
    Trial = 7,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded generator for one `(seed, module, step, actor)` key.
pub fn substream(seed: u64, module: Module, step: u64, actor: u64) -> Substream {
    let mut key = [0u8; 32];
    let mut h = splitmix64(seed);
    for (i, word) in [module as u64, step, actor, 0x5EED].into_iter().enumerate() {
        h = splitmix64(h ^ word);
        key[i * 8..(i + 1) * 8].copy_from_slice(&h.to_le_bytes());
    }
    Substream(ChaCha8Rng::from_seed(key))
}

pub struct Substream(ChaCha8Rng);

impl Substream {
    pub fn gaussian(&mut self, std: f64) -> f64 {
        if std == 0.0 {
            return 0.0;
        }
        let z: f64 = StandardNormal.sample(&mut self.0);
        z * std
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.0.random::<f64>()
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.0.random_range(0..n)
    }

    pub fn chance(&mut self, p: f64) -> bool {
        p > 0.0 && self.uniform() < p
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.random()
    }
}
