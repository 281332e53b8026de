use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::crossbar::DeviceBank;
use crate::error::Result;

/// Where the solver's random decisions come from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RngSource {
    #[default]
    Software,
    /// Thresholded reads of simulated noisy devices.
    DeviceBank,
}

/// Neurons to flip in one move.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FlipPlan {
    pub indices: Vec<usize>,
}

impl FlipPlan {
    pub fn flip_count(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

// Nominal device parameters; only the symmetric threshold matters.
const DEVICE_MEAN: f64 = 1.0;
const DEVICE_STD: f64 = 0.05;

/// Draws flip plans and initial states from either random source.
#[derive(Clone, Debug)]
pub struct FlipSampler {
    n_neurons: usize,
    banks: Option<Banks>,
}

#[derive(Clone, Debug)]
struct Banks {
    count: DeviceBank,
    index: DeviceBank,
    bit: DeviceBank,
}

impl FlipSampler {
    /// `max_bound` is the largest flip bound that will be requested.
    pub fn new(n_neurons: usize, max_bound: usize, source: RngSource) -> Result<Self> {
        let banks = match source {
            RngSource::Software => None,
            RngSource::DeviceBank => Some(Banks {
                count: DeviceBank::for_outcomes(max_bound as u64 + 1, DEVICE_MEAN, DEVICE_STD)?,
                index: DeviceBank::for_outcomes(n_neurons as u64, DEVICE_MEAN, DEVICE_STD)?,
                bit: DeviceBank::new(1, DEVICE_MEAN, DEVICE_STD)?,
            }),
        };
        Ok(Self { n_neurons, banks })
    }

    pub fn source(&self) -> RngSource {
        if self.banks.is_some() {
            RngSource::DeviceBank
        } else {
            RngSource::Software
        }
    }

    pub fn random_bit<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        match &self.banks {
            None => rng.random(),
            Some(b) => b.bit.draw_bits(rng) == 1,
        }
    }

    fn uniform<R: Rng + ?Sized>(&self, bank: Option<&DeviceBank>, count: usize, rng: &mut R) -> Result<usize> {
        Ok(match bank {
            None => rng.random_range(0..count),
            Some(bank) => bank.draw_uniform(count as u64, rng)? as usize,
        })
    }

    /// A flip count uniform on `0..=bound`, then that many distinct indices
    /// drawn uniformly with duplicates redrawn.
    pub fn sample<R: Rng + ?Sized>(&self, bound: usize, rng: &mut R) -> Result<FlipPlan> {
        let bound = bound.min(self.n_neurons);
        let m = self.uniform(self.banks.as_ref().map(|b| &b.count), bound + 1, rng)?;
        let mut indices = Vec::with_capacity(m);
        while indices.len() < m {
            let i = self.uniform(self.banks.as_ref().map(|b| &b.index), self.n_neurons, rng)?;
            if !indices.contains(&i) {
                indices.push(i);
            }
        }
        Ok(FlipPlan { indices })
    }
}

pub fn sample_flip_plan<R: Rng + ?Sized>(
    n_neurons: usize,
    bound: usize,
    source: RngSource,
    rng: &mut R,
) -> Result<FlipPlan> {
    FlipSampler::new(n_neurons, bound, source)?.sample(bound, rng)
}
