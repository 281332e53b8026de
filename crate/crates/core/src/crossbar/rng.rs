//! Random integers from thresholded device noise.
//!
//! Each device read is Gaussian around its mean; reading above the mean gives
//! a 1. `D` such bits form a pattern `P` in `0..2^D`, mapped onto `0..count`
//! by `P mod count` after rejecting the `2^D mod count` highest patterns.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Rejected patterns before falling back to a plain modulo.
pub const MAX_REDRAWS: u32 = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Device {
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeviceBank {
    devices: Vec<Device>,
}

impl DeviceBank {
    /// `count` identical devices.
    pub fn new(count: usize, mean: f64, std: f64) -> Result<Self> {
        Self::from_devices(vec![Device { mean, std }; count])
    }

    pub fn from_devices(devices: Vec<Device>) -> Result<Self> {
        if devices.is_empty() || devices.len() > 63 {
            return Err(Error::InvalidArgument(format!(
                "device bank needs 1..=63 devices, got {}",
                devices.len()
            )));
        }
        if devices.iter().any(|d| d.std.is_nan() || d.std < 0.0 || !d.mean.is_finite()) {
            return Err(Error::InvalidArgument(
                "device means must be finite and stds nonnegative".into(),
            ));
        }
        Ok(Self { devices })
    }

    /// Smallest bank (per [`min_devices`]) able to address `count` outcomes.
    pub fn for_outcomes(count: u64, mean: f64, std: f64) -> Result<Self> {
        let d = if count < 2 { 1 } else { min_devices(count)? };
        Self::new(d as usize, mean, std)
    }

    pub fn len(&self) -> usize {
        self.devices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.devices.is_empty()
    }

    pub fn patterns(&self) -> u64 {
        1u64 << self.devices.len()
    }

    /// One read of every device. Device 0 is the most significant bit.
    pub fn draw_bits<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.devices.iter().fold(0u64, |pattern, d| {
            let z: f64 = StandardNormal.sample(rng);
            let read = d.mean + d.std * z;
            (pattern << 1) | u64::from(read > d.mean)
        })
    }

    pub fn draw_uniform<R: Rng + ?Sized>(&self, count: u64, rng: &mut R) -> Result<u64> {
        Ok(self.draw_uniform_counted(count, rng)?.value)
    }

    /// Like [`draw_uniform`](Self::draw_uniform), also reporting rejected patterns.
    pub fn draw_uniform_counted<R: Rng + ?Sized>(
        &self,
        count: u64,
        rng: &mut R,
    ) -> Result<UniformDraw> {
        let patterns = self.patterns();
        if count == 0 || count > patterns {
            return Err(Error::BankTooSmall {
                devices: self.len(),
                count,
            });
        }
        let accept_below = patterns - patterns % count;
        let mut redraws = 0;
        loop {
            let p = self.draw_bits(rng);
            if p < accept_below || redraws == MAX_REDRAWS {
                return Ok(UniformDraw {
                    value: p % count,
                    redraws,
                });
            }
            redraws += 1;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UniformDraw {
    pub value: u64,
    pub redraws: u32,
}

/// Fraction of `D`-bit patterns left over when mapping onto `count` outcomes,
/// as `(2^D mod count, 2^D)`.
pub fn redundancy(count: u64, devices: u32) -> (u64, u64) {
    let patterns = 1u64 << devices;
    (patterns % count, patterns)
}

/// Device count for drawing uniform integers in `0..count`.
///
/// Among `D0..=D0+2`, where `D0 = ceil(log2 count)`, picks the `D` with the
/// smallest redundancy fraction, preferring fewer devices on ties.
pub fn min_devices(count: u64) -> Result<u32> {
    if count < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 outcomes, got {count}"
        )));
    }
    let d0 = u64::BITS - (count - 1).leading_zeros();
    if d0 + 2 > 63 {
        return Err(Error::InvalidArgument(format!("{count} outcomes is too many")));
    }
    let mut best = d0;
    for d in d0 + 1..=d0 + 2 {
        let (r, p) = redundancy(count, d);
        let (best_r, best_p) = redundancy(count, best);
        if (r as u128) * (best_p as u128) < (best_r as u128) * (p as u128) {
            best = d;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::stats::chi_square_uniform;

    #[test]
    fn device_counts_match_reference_table() {
        assert_eq!(min_devices(5).unwrap(), 4);
        assert_eq!(redundancy(5, 4), (1, 16));
        assert_eq!(min_devices(6).unwrap(), 5);
        assert_eq!(redundancy(6, 5), (2, 32));
        assert_eq!(min_devices(7).unwrap(), 3);
        assert_eq!(redundancy(7, 3), (1, 8));
        assert_eq!(min_devices(2).unwrap(), 1);
        assert_eq!(min_devices(8).unwrap(), 3);
        assert_eq!(min_devices(16).unwrap(), 4);
        assert!(min_devices(1).is_err());
    }

    #[test]
    fn rejection_rule() {
        let bank = DeviceBank::new(4, 0.0, 1.0).unwrap();
        let accept_below = 16 - 16 % 5;
        assert_eq!(accept_below, 15);
        assert_eq!(7 % 5, 2);
        assert!(bank.draw_uniform(17, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            assert_eq!(bank.draw_uniform_counted(16, &mut rng).unwrap().redraws, 0);
        }
    }

    #[test]
    fn zero_noise_reads_resolve_to_zero() {
        let bank = DeviceBank::new(3, 0.4, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(bank.draw_bits(&mut rng), 0);
        // Every pattern is 0, so a count that rejects nothing still returns 0.
        assert_eq!(bank.draw_uniform(8, &mut rng).unwrap(), 0);
        // 0 is never redundant for counts that fit.
        assert_eq!(bank.draw_uniform(5, &mut rng).unwrap(), 0);
    }

    #[test]
    fn patterns_are_uniform() {
        let bank = DeviceBank::new(4, 1.0, 0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = [0u64; 16];
        for _ in 0..100_000 {
            counts[bank.draw_bits(&mut rng) as usize] += 1;
        }
        assert!(chi_square_uniform(&counts, 0.99).passed, "{counts:?}");
    }

    #[test]
    fn uniform_draws_pass_chi_square() {
        for count in [5u64, 7] {
            let bank = DeviceBank::for_outcomes(count, 0.5, 0.1).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(count);
            let mut counts = vec![0u64; count as usize];
            for _ in 0..100_000 {
                counts[bank.draw_uniform(count, &mut rng).unwrap() as usize] += 1;
            }
            assert!(chi_square_uniform(&counts, 0.99).passed, "{count}: {counts:?}");
        }
    }
}
