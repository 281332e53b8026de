//! Simulated analog memristor crossbar.
//!
//! A signed Hamiltonian is split over a positive and a negative array, scaled
//! so that `max|H|` maps to full-scale conductance, quantized to uniformly
//! spaced levels and programmed with Gaussian error that stays frozen. Each
//! energy read gates rows and columns by `q` and adds fresh Gaussian read
//! noise on every active cell of both arrays. With `R` replicas the readouts
//! are averaged.

mod rng;

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use self::rng::{min_devices, redundancy, Device, DeviceBank, UniformDraw, MAX_REDRAWS};
use crate::encoder::{quadratic_form, Hamiltonian, NeuronState};
use crate::error::{Error, Result};
use crate::num::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossbarConfig {
    pub rows: usize,
    pub cols: usize,
    pub quant_bits: u32,
    /// Full-scale conductance.
    pub g_max: f64,
    /// Programming error std as a fraction of `g_max`.
    pub prog_noise_std: f64,
    /// Per-cell, per-read error std as a fraction of `g_max`.
    pub read_noise_std: f64,
    pub noise_multiplier: f64,
    pub replicas: usize,
}

impl Default for CrossbarConfig {
    fn default() -> Self {
        Self {
            rows: 64,
            cols: 64,
            quant_bits: 16,
            g_max: 1.0,
            prog_noise_std: NATIVE_PROG_NOISE,
            read_noise_std: NATIVE_READ_NOISE,
            noise_multiplier: 1.0,
            replicas: 1,
        }
    }
}

/// Native programming error, as a fraction of full scale.
pub const NATIVE_PROG_NOISE: f64 = 4.0e-6;
/// Native per-cell read error, as a fraction of full scale.
pub const NATIVE_READ_NOISE: f64 = 4.0e-6;

impl CrossbarConfig {
    pub fn noiseless() -> Self {
        Self {
            noise_multiplier: 0.0,
            ..Self::default()
        }
    }

    pub fn with_multiplier(mut self, multiplier: f64) -> Self {
        self.noise_multiplier = multiplier;
        self
    }

    pub fn with_replicas(mut self, replicas: usize) -> Self {
        self.replicas = replicas;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidCrossbar(msg));
        if self.rows == 0 || self.cols == 0 {
            return bad(format!("array shape {}x{} is empty", self.rows, self.cols));
        }
        if !(1..=16).contains(&self.quant_bits) {
            return bad(format!("quant_bits {} outside 1..=16", self.quant_bits));
        }
        if !(self.g_max > 0.0 && self.g_max.is_finite()) {
            return bad(format!("g_max {} must be positive", self.g_max));
        }
        for (name, v) in [
            ("prog_noise_std", self.prog_noise_std),
            ("read_noise_std", self.read_noise_std),
            ("noise_multiplier", self.noise_multiplier),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} {v} must be nonnegative"));
            }
        }
        if self.replicas == 0 {
            return bad("replicas must be at least 1".into());
        }
        Ok(())
    }

    pub fn fits(&self, dimension: usize) -> bool {
        dimension <= self.rows && dimension <= self.cols
    }

    pub fn levels(&self) -> u32 {
        (1u32 << self.quant_bits) - 1
    }

    /// Conductance spacing between adjacent levels.
    pub fn step(&self) -> f64 {
        self.g_max / self.levels() as f64
    }
}

/// Elementwise `(max(H, 0), max(-H, 0))` over the full square matrix.
pub fn split_signed<T: Real>(h: &Hamiltonian<T>) -> (Vec<Vec<T>>, Vec<Vec<T>>) {
    let zero = T::zero();
    h.rows()
        .map(|row| {
            let pos = row.iter().map(|&v| if v > zero { v } else { zero }).collect();
            let neg = row.iter().map(|&v| if v < zero { -v } else { zero }).collect();
            (pos, neg)
        })
        .unzip()
}

#[derive(Clone, Debug)]
struct Replica<T> {
    pos: Vec<T>,
    neg: Vec<T>,
}

/// A Hamiltonian written into `R` nominally identical array pairs.
#[derive(Clone, Debug)]
pub struct ProgrammedCrossbar<T> {
    n: usize,
    config: CrossbarConfig,
    scale: T,
    offset: T,
    target: Hamiltonian<T>,
    replicas: Vec<Replica<T>>,
    /// Replica-averaged signed matrix in Hamiltonian units, folded onto the
    /// upper triangle so it can be read as a quadratic form.
    folded: Vec<T>,
}

pub fn program<T: Real, R: Rng + ?Sized>(
    h: &Hamiltonian<T>,
    config: &CrossbarConfig,
    rng: &mut R,
) -> Result<ProgrammedCrossbar<T>> {
    config.validate()?;
    let n = h.dimension();
    if !config.fits(n) {
        return Err(Error::DoesNotFit {
            dimension: n,
            rows: config.rows,
            cols: config.cols,
        });
    }
    let g_max = T::of(config.g_max);
    let max_abs = h.max_abs();
    let scale = if max_abs.is_zero() {
        T::one()
    } else {
        max_abs / g_max
    };
    let levels = T::of(config.levels() as f64);
    let quantize = |v: T| ((v / scale / g_max) * levels).round() / levels * g_max;
    let (pos, neg) = split_signed(h);
    let pos: Vec<T> = pos.into_iter().flatten().map(quantize).collect();
    let neg: Vec<T> = neg.into_iter().flatten().map(quantize).collect();

    let sigma = T::of(config.prog_noise_std * config.noise_multiplier * config.g_max);
    let perturb = |targets: &[T], rng: &mut R| -> Vec<T> {
        targets
            .iter()
            .map(|&g| {
                let z: f64 = StandardNormal.sample(rng);
                (g + sigma * T::of(z)).max(T::zero()).min(g_max)
            })
            .collect()
    };
    let replicas: Vec<Replica<T>> = (0..config.replicas)
        .map(|_| Replica {
            pos: perturb(&pos, rng),
            neg: perturb(&neg, rng),
        })
        .collect();

    let count = T::of(config.replicas as f64);
    let mut signed = vec![T::zero(); n * n];
    for r in &replicas {
        for (cell, (p, m)) in signed.iter_mut().zip(r.pos.iter().zip(&r.neg)) {
            *cell = *cell + (*p - *m);
        }
    }
    let mut folded = vec![T::zero(); n * n];
    for i in 0..n {
        folded[i * n + i] = signed[i * n + i] / count * scale;
        for j in i + 1..n {
            folded[i * n + j] = (signed[i * n + j] + signed[j * n + i]) / count * scale;
        }
    }
    Ok(ProgrammedCrossbar {
        n,
        config: config.clone(),
        scale,
        offset: h.offset(),
        target: h.clone(),
        replicas,
        folded,
    })
}

/// One cell of a full-array readout, all values in Hamiltonian units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReadoutCell<T> {
    pub row: usize,
    pub col: usize,
    pub target: T,
    pub programmed: T,
    pub read: T,
    pub error: T,
}

#[derive(Clone, Debug)]
pub struct Readout<T> {
    /// Full `n x n` signed matrix as read.
    pub matrix: Vec<Vec<T>>,
    pub cells: Vec<ReadoutCell<T>>,
}

impl<T: Real> Readout<T> {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["row", "col", "target", "programmed", "read", "error"])?;
        for c in &self.cells {
            w.write_record([
                c.row.to_string(),
                c.col.to_string(),
                c.target.as_f64().to_string(),
                c.programmed.as_f64().to_string(),
                c.read.as_f64().to_string(),
                c.error.as_f64().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl<T: Real> ProgrammedCrossbar<T> {
    pub fn program<R: Rng + ?Sized>(
        h: &Hamiltonian<T>,
        config: &CrossbarConfig,
        rng: &mut R,
    ) -> Result<Self> {
        program(h, config, rng)
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn config(&self) -> &CrossbarConfig {
        &self.config
    }

    /// Hamiltonian units per conductance unit.
    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn offset(&self) -> T {
        self.offset
    }

    pub fn target(&self) -> &Hamiltonian<T> {
        &self.target
    }

    /// Quantization step in Hamiltonian units.
    pub fn step(&self) -> T {
        T::of(self.config.step()) * self.scale
    }

    pub fn positive(&self, replica: usize) -> &[T] {
        &self.replicas[replica].pos
    }

    pub fn negative(&self, replica: usize) -> &[T] {
        &self.replicas[replica].neg
    }

    /// The programmed (noise-free read) matrix as an upper-triangular Hamiltonian.
    pub fn effective_hamiltonian(&self) -> Hamiltonian<T> {
        let rows = self
            .folded
            .chunks(self.n)
            .map(|r| r.to_vec())
            .collect::<Vec<_>>();
        Hamiltonian::from_upper(
            rows,
            self.offset,
            self.target.layout().clone(),
            *self.target.penalties(),
        )
        .expect("folded matrix is upper triangular")
    }

    /// Energy without read noise.
    pub fn programmed_energy(&self, q: &NeuronState) -> Result<T> {
        let active = self.active(q)?;
        Ok(quadratic_form(&self.folded, self.n, &active) + self.offset)
    }

    /// Std of one energy read (Hamiltonian units) with `active` gated neurons.
    pub fn read_noise_std(&self, active: usize) -> T {
        let c = &self.config;
        // Both arrays, `active^2` cells each, averaged over the replicas.
        let cells = 2.0 * (active * active) as f64 / c.replicas as f64;
        T::of(c.read_noise_std * c.noise_multiplier * c.g_max * cells.sqrt()) * self.scale
    }

    /// One noisy in-array energy read.
    ///
    /// The per-cell read errors are independent Gaussians, so their sum is
    /// drawn as a single Gaussian of the summed variance. Exactly one normal
    /// is consumed per call regardless of configuration.
    pub fn evaluate_energy<R: Rng + ?Sized>(&self, q: &NeuronState, rng: &mut R) -> Result<T> {
        let active = self.active(q)?;
        let base = quadratic_form(&self.folded, self.n, &active) + self.offset;
        let z: f64 = StandardNormal.sample(rng);
        Ok(base + self.read_noise_std(active.len()) * T::of(z))
    }

    /// One noisy read of every cell, recombined into signed Hamiltonian units.
    pub fn readout_matrix<R: Rng + ?Sized>(&self, rng: &mut R) -> Readout<T> {
        let n = self.n;
        let c = &self.config;
        let sigma = T::of(c.read_noise_std * c.noise_multiplier * c.g_max);
        let count = T::of(c.replicas as f64);
        let mut read = vec![T::zero(); n * n];
        let mut programmed = vec![T::zero(); n * n];
        for r in &self.replicas {
            for cell in 0..n * n {
                let zp: f64 = StandardNormal.sample(rng);
                let zn: f64 = StandardNormal.sample(rng);
                let p = r.pos[cell];
                let m = r.neg[cell];
                read[cell] = read[cell] + (p + sigma * T::of(zp)) - (m + sigma * T::of(zn));
                programmed[cell] = programmed[cell] + (p - m);
            }
        }
        let mut cells = Vec::with_capacity(n * n);
        let mut matrix = vec![vec![T::zero(); n]; n];
        for row in 0..n {
            for col in 0..n {
                let cell = row * n + col;
                let value = read[cell] / count * self.scale;
                let target = self.target.get(row, col);
                matrix[row][col] = value;
                cells.push(ReadoutCell {
                    row,
                    col,
                    target,
                    programmed: programmed[cell] / count * self.scale,
                    read: value,
                    error: value - target,
                });
            }
        }
        Readout { matrix, cells }
    }

    fn active(&self, q: &NeuronState) -> Result<Vec<usize>> {
        if q.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: q.len(),
            });
        }
        Ok(q.active().collect())
    }
}
