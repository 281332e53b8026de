use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knapsack::KnapsackInstance;

/// How the capacity of a generated instance is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityRule {
    /// `round(fraction * sum(weights))`, at least 1.
    Fraction(f64),
    Fixed(u64),
}

impl Default for CapacityRule {
    fn default() -> Self {
        CapacityRule::Fraction(0.5)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub objects: usize,
    pub weight_range: (u64, u64),
    pub value_range: (u64, u64),
    #[serde(default)]
    pub capacity: CapacityRule,
}

impl GeneratorParams {
    pub fn new(objects: usize, capacity: CapacityRule) -> Self {
        Self {
            objects,
            weight_range: (1, 8),
            value_range: (1, 12),
            capacity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.objects == 0 {
            return Err(Error::Config("generator needs at least one object".into()));
        }
        for (name, (lo, hi)) in [("weight", self.weight_range), ("value", self.value_range)] {
            if lo == 0 || lo > hi {
                return Err(Error::Config(format!("{name} range {lo}..{hi} is empty or contains 0")));
            }
        }
        match self.capacity {
            CapacityRule::Fraction(f) if !(f > 0.0 && f.is_finite()) => {
                Err(Error::Config(format!("capacity fraction {f} must be positive")))
            }
            CapacityRule::Fixed(0) => Err(Error::Config("capacity must be at least 1".into())),
            _ => Ok(()),
        }
    }

    /// Draws an instance from `seed`. The same parameters and seed always
    /// give the same instance.
    pub fn generate(&self, seed: u64) -> Result<KnapsackInstance> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights: Vec<u64> = (0..self.objects)
            .map(|_| rng.random_range(self.weight_range.0..=self.weight_range.1))
            .collect();
        let values: Vec<u64> = (0..self.objects)
            .map(|_| rng.random_range(self.value_range.0..=self.value_range.1))
            .collect();
        let capacity = match self.capacity {
            CapacityRule::Fraction(f) => ((f * weights.iter().sum::<u64>() as f64).round() as u64).max(1),
            CapacityRule::Fixed(w) => w,
        };
        KnapsackInstance::new(values, weights, capacity)
    }
}
