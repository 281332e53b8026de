//! Ising/QUBO encoding of knapsack instances.
//!
//! Neurons are laid out as `q = [x_1 .. x_N, y_1 .. y_M]`: item neurons first,
//! then capacity-slot neurons with coefficients `c_j`. The energy
//!
//! ```text
//! E = -s1 * sum v_i x_i + s2 * (1 - sum y_j)^2 + s3 * (sum c_j y_j - sum w_i x_i)^2
//! ```
//!
//! is stored as an upper-triangular matrix (linear terms on the diagonal,
//! cross terms once above it) plus a constant offset. The log encoding
//! represents totals as subset sums of its coefficients, so it drops the
//! one-hot term (and with it the `s2` offset).

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knapsack::{KnapsackInstance, Selection};
use crate::num::Scalar;

/// Largest Hamiltonian [`exhaustive_min`] will enumerate.
pub const EXHAUSTIVE_CAP: usize = 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum CapacityEncoding {
    /// One slot per total size `1..=W`.
    Unary,
    /// Slots at multiples of the step: `s, 2s, .., ceil(W/s)*s`.
    Shrink { step: u64 },
    /// Powers of two with a capped final coefficient.
    Log,
}

impl CapacityEncoding {
    /// Whether exactly one slot neuron must be set in a valid state.
    pub fn is_one_hot(self) -> bool {
        !matches!(self, CapacityEncoding::Log)
    }
}

impl fmt::Display for CapacityEncoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CapacityEncoding::Unary => write!(f, "unary"),
            CapacityEncoding::Shrink { step } => write!(f, "shrink:{step}"),
            CapacityEncoding::Log => write!(f, "log"),
        }
    }
}

impl FromStr for CapacityEncoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unary" => Ok(CapacityEncoding::Unary),
            "log" => Ok(CapacityEncoding::Log),
            other => {
                let step = other
                    .strip_prefix("shrink:")
                    .and_then(|s| s.parse::<u64>().ok())
                    .filter(|&s| s >= 1)
                    .ok_or_else(|| {
                        Error::InvalidEncoding(format!(
                            "{other:?} (expected unary, shrink:<s> or log)"
                        ))
                    })?;
                Ok(CapacityEncoding::Shrink { step })
            }
        }
    }
}

impl From<CapacityEncoding> for String {
    fn from(e: CapacityEncoding) -> String {
        e.to_string()
    }
}

impl TryFrom<String> for CapacityEncoding {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Slot coefficients `c_j` for a capacity under the given encoding.
pub fn capacity_slots(capacity: u64, encoding: CapacityEncoding) -> Result<Vec<u64>> {
    if capacity == 0 {
        return Err(Error::InvalidArgument("capacity must be at least 1".into()));
    }
    match encoding {
        CapacityEncoding::Unary => Ok((1..=capacity).collect()),
        CapacityEncoding::Shrink { step } => {
            if step == 0 || step > capacity {
                return Err(Error::InvalidEncoding(format!(
                    "shrink step {step} must lie in 1..={capacity}"
                )));
            }
            Ok((1..=capacity.div_ceil(step)).map(|j| j * step).collect())
        }
        CapacityEncoding::Log => {
            let k = capacity.ilog2();
            let mut slots: Vec<u64> = (0..k).map(|j| 1u64 << j).collect();
            slots.push(capacity + 1 - (1u64 << k));
            Ok(slots)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyWeights<T> {
    pub sigma1: T,
    pub sigma2: T,
    pub sigma3: T,
}

impl<T: Scalar> PenaltyWeights<T> {
    pub fn new(sigma1: T, sigma2: T, sigma3: T) -> Self {
        Self {
            sigma1,
            sigma2,
            sigma3,
        }
    }

    /// `s1 = 1`, `s3 = max(v) + 1`, `s2 = W * max(v) + 1`.
    ///
    /// `s3` outweighs any single unit of size mismatch. `s2` outweighs the
    /// value that can be smuggled in by switching on several slots, whose
    /// summed coefficients exceed `W` by at most `(k-1) * W`.
    pub fn default_for(instance: &KnapsackInstance) -> Self {
        let max_value = instance.max_value() as i64;
        let capacity = instance.capacity as i64;
        Self {
            sigma1: T::one(),
            sigma2: T::from_int(capacity * max_value + 1),
            sigma3: T::from_int(max_value + 1),
        }
    }

    pub fn validate(&self, instance: &KnapsackInstance) -> Result<()> {
        let zero = T::zero();
        if !(self.sigma1 > zero && self.sigma2 > zero && self.sigma3 > zero) {
            return Err(Error::InvalidPenalties(format!(
                "all weights must be positive, got {self:?}"
            )));
        }
        let floor = self.sigma1 * T::from_int(instance.max_value() as i64);
        if !(self.sigma2 > floor && self.sigma3 > floor) {
            return Err(Error::InvalidPenalties(format!(
                "sigma2 and sigma3 must exceed sigma1 * max value = {floor:?}"
            )));
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> PenaltyWeights<U> {
        let c = |v: T| U::from_f64(v.as_f64()).expect("penalty representable");
        PenaltyWeights::new(c(self.sigma1), c(self.sigma2), c(self.sigma3))
    }
}

pub fn default_penalties<T: Scalar>(instance: &KnapsackInstance) -> PenaltyWeights<T> {
    PenaltyWeights::default_for(instance)
}

/// Where each neuron lives in `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    pub items: usize,
    pub slots: Vec<u64>,
    pub encoding: CapacityEncoding,
}

impl Layout {
    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    pub fn dimension(&self) -> usize {
        self.items + self.slots.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian<T> {
    n: usize,
    // Row-major n*n; entries below the diagonal stay zero.
    upper: Vec<T>,
    offset: T,
    layout: Layout,
    penalties: PenaltyWeights<T>,
}

impl<T: Scalar> Hamiltonian<T> {
    /// Assembles a Hamiltonian from an explicit upper-triangular matrix.
    /// Lower-triangle entries of `rows` must be zero.
    pub fn from_upper(
        rows: Vec<Vec<T>>,
        offset: T,
        layout: Layout,
        penalties: PenaltyWeights<T>,
    ) -> Result<Self> {
        let n = rows.len();
        if layout.dimension() != n {
            return Err(Error::DimensionMismatch {
                expected: layout.dimension(),
                actual: n,
            });
        }
        let mut upper = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual: row.len(),
                });
            }
            if row[..i].iter().any(|v| !v.is_zero()) {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has entries below the diagonal"
                )));
            }
            upper.extend(row);
        }
        Ok(Self {
            n,
            upper,
            offset,
            layout,
            penalties,
        })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn offset(&self) -> T {
        self.offset
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn penalties(&self) -> &PenaltyWeights<T> {
        &self.penalties
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.upper[row * self.n + col]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.upper.chunks(self.n)
    }

    pub fn max_abs(&self) -> T {
        self.upper
            .iter()
            .map(|v| v.abs())
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Hamiltonian<U> {
        Hamiltonian {
            n: self.n,
            upper: self.upper.iter().map(|&v| f(v)).collect(),
            offset: f(self.offset),
            layout: self.layout.clone(),
            penalties: PenaltyWeights::new(
                f(self.penalties.sigma1),
                f(self.penalties.sigma2),
                f(self.penalties.sigma3),
            ),
        }
    }

    pub fn cast<U: Scalar>(&self) -> Hamiltonian<U> {
        self.map(|v| U::from_f64(v.as_f64()).expect("entry representable"))
    }

    pub fn energy(&self, q: &NeuronState) -> Result<T> {
        energy_exact(self, q)
    }

    /// Writes the matrix as CSV preceded by a single metadata line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let p = &self.penalties;
        writeln!(
            out,
            "n={},N={},M={},encoding={},sigma1={},sigma2={},sigma3={},offset={}",
            self.n,
            self.layout.items,
            self.layout.slot_count(),
            self.layout.encoding,
            p.sigma1.as_f64(),
            p.sigma2.as_f64(),
            p.sigma3.as_f64(),
            self.offset.as_f64()
        )?;
        for row in self.rows() {
            let line: Vec<String> = row.iter().map(|v| v.as_f64().to_string()).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

pub fn build_hamiltonian<T: Scalar>(
    instance: &KnapsackInstance,
    encoding: CapacityEncoding,
    penalties: &PenaltyWeights<T>,
) -> Result<Hamiltonian<T>> {
    instance.ensure_valid()?;
    penalties.validate(instance)?;
    let slots = capacity_slots(instance.capacity, encoding)?;
    let items = instance.len();
    let n = items + slots.len();
    let PenaltyWeights {
        sigma1: s1,
        sigma2: s2,
        sigma3: s3,
    } = *penalties;
    let one_hot = encoding.is_one_hot();
    let two = T::from_int(2);
    let int = |v: u64| T::from_int(v as i64);

    let mut upper = vec![T::zero(); n * n];
    for i in 0..items {
        let wi = int(instance.weights[i]);
        upper[i * n + i] = s3 * wi * wi - s1 * int(instance.values[i]);
        for j in i + 1..items {
            upper[i * n + j] = two * s3 * wi * int(instance.weights[j]);
        }
        for (k, &c) in slots.iter().enumerate() {
            upper[i * n + items + k] = -(two * s3 * int(c) * wi);
        }
    }
    for (a, &ca) in slots.iter().enumerate() {
        let row = items + a;
        let ca = int(ca);
        upper[row * n + row] = if one_hot {
            s3 * ca * ca - s2
        } else {
            s3 * ca * ca
        };
        for (b, &cb) in slots.iter().enumerate().skip(a + 1) {
            let cross = ca * int(cb) * s3;
            upper[row * n + items + b] = if one_hot {
                two * (s2 + cross)
            } else {
                two * cross
            };
        }
    }
    Ok(Hamiltonian {
        n,
        upper,
        offset: if one_hot { s2 } else { T::zero() },
        layout: Layout {
            items,
            slots,
            encoding,
        },
        penalties: *penalties,
    })
}

/// Binary neuron vector `q`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NeuronState {
    bits: Vec<u8>,
}

impl NeuronState {
    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![0; n] }
    }

    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if let Some(i) = bits.iter().position(|&b| b > 1) {
            return Err(Error::InvalidArgument(format!(
                "neuron {i} has non-binary value {}",
                bits[i]
            )));
        }
        Ok(Self { bits })
    }

    /// Concatenates item bits and slot bits.
    pub fn from_parts(items: &[u8], slots: &[u8]) -> Result<Self> {
        Self::from_bits(items.iter().chain(slots).copied().collect())
    }

    /// Bit `i` of `mask` (counted from the most significant of `n`) becomes neuron `i`.
    pub fn from_mask(mask: u64, n: usize) -> Self {
        Self {
            bits: (0..n).map(|i| ((mask >> (n - 1 - i)) & 1) as u8).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.bits[i] != 0
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.bits[i] ^= 1;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b != 0).count()
    }

    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0)
            .map(|(i, _)| i)
    }
}

impl fmt::Display for NeuronState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// `q H q^T + offset` for a binary `q`.
pub fn energy_exact<T: Scalar>(h: &Hamiltonian<T>, q: &NeuronState) -> Result<T> {
    if q.len() != h.n {
        return Err(Error::DimensionMismatch {
            expected: h.n,
            actual: q.len(),
        });
    }
    let mut active = Vec::with_capacity(h.n);
    active.extend(q.active());
    Ok(quadratic_form(&h.upper, h.n, &active) + h.offset)
}

/// Sum of `m[i][j]` over `i <= j` with both indices in `active` (ascending).
#[inline]
pub(crate) fn quadratic_form<T: Scalar>(m: &[T], n: usize, active: &[usize]) -> T {
    let mut sum = T::zero();
    for (a, &i) in active.iter().enumerate() {
        let row = &m[i * n..(i + 1) * n];
        for &j in &active[a..] {
            sum = sum + row[j];
        }
    }
    sum
}

/// Direct evaluation of the penalty formulation from the selection and slot bits,
/// independent of the matrix.
pub fn formulation_energy<T: Scalar>(
    instance: &KnapsackInstance,
    layout: &Layout,
    penalties: &PenaltyWeights<T>,
    q: &NeuronState,
) -> Result<T> {
    if q.len() != layout.dimension() {
        return Err(Error::DimensionMismatch {
            expected: layout.dimension(),
            actual: q.len(),
        });
    }
    let int = |v: u64| T::from_int(v as i64);
    let (x, y) = q.bits().split_at(layout.items);
    let selection = instance.evaluate_selection(x)?;
    let slot_total: u64 = y
        .iter()
        .zip(&layout.slots)
        .filter(|(&b, _)| b != 0)
        .map(|(_, &c)| c)
        .sum();
    let slots_on = y.iter().filter(|&&b| b != 0).count() as i64;
    let mismatch = int(slot_total) - int(selection.total_weight);
    let mut e = -(penalties.sigma1 * int(selection.total_value)) + penalties.sigma3 * mismatch * mismatch;
    if layout.encoding.is_one_hot() {
        let gap = T::one() - T::from_int(slots_on);
        e = e + penalties.sigma2 * gap * gap;
    }
    Ok(e)
}

/// Constraint status of the slot neurons.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlotReport {
    pub slots_on: usize,
    pub slot_total: u64,
    pub one_hot: bool,
    pub size_match: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decoded {
    pub selection: Selection,
    pub slots: SlotReport,
    /// Whether the slot bits satisfy every constraint of the encoding.
    pub consistent: bool,
}

pub fn decode(
    q: &NeuronState,
    instance: &KnapsackInstance,
    encoding: CapacityEncoding,
) -> Result<Decoded> {
    let slots = capacity_slots(instance.capacity, encoding)?;
    decode_with(q, instance, &slots, encoding)
}

pub(crate) fn decode_with(
    q: &NeuronState,
    instance: &KnapsackInstance,
    slots: &[u64],
    encoding: CapacityEncoding,
) -> Result<Decoded> {
    let expected = instance.len() + slots.len();
    if q.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            actual: q.len(),
        });
    }
    let (x, y) = q.bits().split_at(instance.len());
    let selection = instance.evaluate_selection(x)?;
    let slots_on = y.iter().filter(|&&b| b != 0).count();
    let slot_total = y
        .iter()
        .zip(slots)
        .filter(|(&b, _)| b != 0)
        .map(|(_, &c)| c)
        .sum();
    let report = SlotReport {
        slots_on,
        slot_total,
        one_hot: slots_on == 1,
        size_match: slot_total == selection.total_weight,
    };
    let consistent = report.size_match && (report.one_hot || !encoding.is_one_hot());
    Ok(Decoded {
        selection,
        slots: report,
        consistent,
    })
}

impl<T: Scalar> Hamiltonian<T> {
    pub fn decode(&self, q: &NeuronState, instance: &KnapsackInstance) -> Result<Decoded> {
        decode_with(q, instance, &self.layout.slots, self.layout.encoding)
    }
}

/// Global minimum by enumeration of all `2^n` states.
///
/// Returns the lexicographically smallest minimizer. States are visited in
/// Gray-code order with an O(n) energy update per step; the update is exact
/// for integer-valued and rational Hamiltonians.
pub fn exhaustive_min<T: Scalar>(h: &Hamiltonian<T>) -> Result<(NeuronState, T)> {
    let n = h.n;
    if n > EXHAUSTIVE_CAP {
        return Err(Error::TooLarge {
            what: "hamiltonian",
            size: n,
            cap: EXHAUSTIVE_CAP,
        });
    }
    // Symmetric coupling view: coupling(i, j) = H[min][max] for i != j.
    let coupling = |i: usize, j: usize| if i < j { h.get(i, j) } else { h.get(j, i) };
    let mut q = vec![false; n];
    let mut mask = 0u64;
    let mut energy = h.offset;
    let mut best_mask = 0u64;
    let mut best = energy;
    for step in 1u64..(1u64 << n) {
        let neuron = n - 1 - step.trailing_zeros() as usize;
        let mut field = h.get(neuron, neuron);
        for (j, &on) in q.iter().enumerate() {
            if on && j != neuron {
                field = field + coupling(neuron, j);
            }
        }
        if q[neuron] {
            energy = energy - field;
        } else {
            energy = energy + field;
        }
        q[neuron] = !q[neuron];
        mask ^= 1u64 << (n - 1 - neuron);
        if energy < best || (energy == best && mask < best_mask) {
            best = energy;
            best_mask = mask;
        }
    }
    Ok((NeuronState::from_mask(best_mask, n), best))
}

#[cfg(test)]
mod tests {
    use num_rational::Rational64;

    use super::*;

    fn reference() -> KnapsackInstance {
        KnapsackInstance::new(vec![5, 8, 4, 11, 3], vec![3, 2, 8, 5, 4], 10).unwrap()
    }

    fn twelve() -> PenaltyWeights<f64> {
        PenaltyWeights::new(1.0, 12.0, 12.0)
    }

    fn unary_state(x: &[u8], slot: Option<usize>, capacity: usize) -> NeuronState {
        let mut y = vec![0; capacity];
        if let Some(s) = slot {
            y[s - 1] = 1;
        }
        NeuronState::from_parts(x, &y).unwrap()
    }

    #[test]
    fn slot_coefficients() {
        assert_eq!(
            capacity_slots(10, CapacityEncoding::Unary).unwrap(),
            (1..=10).collect::<Vec<_>>()
        );
        assert_eq!(capacity_slots(1, CapacityEncoding::Unary).unwrap(), vec![1]);
        assert_eq!(
            capacity_slots(10, CapacityEncoding::Log).unwrap(),
            vec![1, 2, 4, 3]
        );
        assert_eq!(capacity_slots(1, CapacityEncoding::Log).unwrap(), vec![1]);
        assert_eq!(
            capacity_slots(10, CapacityEncoding::Shrink { step: 3 }).unwrap(),
            vec![3, 6, 9, 12]
        );
        assert!(capacity_slots(10, CapacityEncoding::Shrink { step: 11 }).is_err());
    }

    #[test]
    fn log_slots_cover_every_total() {
        for capacity in 1..=64u64 {
            let slots = capacity_slots(capacity, CapacityEncoding::Log).unwrap();
            let mut reachable = vec![false; slots.iter().sum::<u64>() as usize + 1];
            for mask in 0u32..(1 << slots.len()) {
                let total: u64 = (0..slots.len())
                    .filter(|&k| mask >> k & 1 == 1)
                    .map(|k| slots[k])
                    .sum();
                reachable[total as usize] = true;
            }
            assert!(
                reachable[..=capacity as usize].iter().all(|&r| r),
                "W={capacity}"
            );
        }
    }

    #[test]
    fn parses_encodings() {
        assert_eq!("unary".parse::<CapacityEncoding>().unwrap(), CapacityEncoding::Unary);
        assert_eq!("log".parse::<CapacityEncoding>().unwrap(), CapacityEncoding::Log);
        assert_eq!(
            "shrink:2".parse::<CapacityEncoding>().unwrap(),
            CapacityEncoding::Shrink { step: 2 }
        );
        for bad in ["binary", "shrink:", "shrink:0", "shrink:x"] {
            assert!(bad.parse::<CapacityEncoding>().is_err(), "{bad}");
        }
    }

    #[test]
    fn default_penalty_rule() {
        let p = default_penalties::<i64>(&reference());
        assert_eq!((p.sigma1, p.sigma2, p.sigma3), (1, 111, 12));
        let tiny = KnapsackInstance::new(vec![1], vec![1], 1).unwrap();
        let p = default_penalties::<i64>(&tiny);
        assert_eq!((p.sigma1, p.sigma2, p.sigma3), (1, 2, 2));
        let skewed = KnapsackInstance::new(vec![100, 1], vec![1, 1], 1).unwrap();
        let p = default_penalties::<i64>(&skewed);
        assert_eq!((p.sigma1, p.sigma2, p.sigma3), (1, 101, 101));
        assert!(p.validate(&skewed).is_ok());
        assert!(PenaltyWeights::new(1, 100, 101).validate(&skewed).is_err());
        assert!(PenaltyWeights::new(0, 200, 200).validate(&skewed).is_err());
    }

    #[test]
    fn hamiltonian_entries() {
        let h = build_hamiltonian(&reference(), CapacityEncoding::Unary, &twelve()).unwrap();
        assert_eq!(h.dimension(), 15);
        assert_eq!(h.get(0, 0), 103.0);
        assert_eq!(h.get(0, 1), 144.0);
        assert_eq!(h.get(0, 5), -72.0);
        assert_eq!(h.get(5, 6), 72.0);
        assert_eq!(h.get(5, 5), 0.0);
        assert_eq!(h.offset(), 12.0);
        for i in 0..15 {
            for j in 0..i {
                assert_eq!(h.get(i, j), 0.0);
            }
        }

        let tiny = KnapsackInstance::new(vec![1], vec![1], 1).unwrap();
        let h = build_hamiltonian(&tiny, CapacityEncoding::Unary, &PenaltyWeights::new(1, 2, 2))
            .unwrap();
        let rows: Vec<Vec<i64>> = h.rows().map(|r| r.to_vec()).collect();
        assert_eq!(rows, vec![vec![1, -4], vec![0, 0]]);
        assert_eq!(h.offset(), 2);
    }

    #[test]
    fn log_encoding_has_no_one_hot_term() {
        let h = build_hamiltonian(&reference(), CapacityEncoding::Log, &twelve()).unwrap();
        assert_eq!(h.dimension(), 9);
        assert_eq!(h.offset(), 0.0);
        // Slot 4 has coefficient 3.
        assert_eq!(h.get(8, 8), 12.0 * 9.0);
        assert_eq!(h.get(5, 6), 2.0 * 12.0 * 2.0);
    }

    #[test]
    fn energy_examples() {
        let k = reference();
        let h = build_hamiltonian(&k, CapacityEncoding::Unary, &twelve()).unwrap();
        assert_eq!(energy_exact(&h, &NeuronState::zeros(15)).unwrap(), 12.0);
        let ground = unary_state(&[1, 1, 0, 1, 0], Some(10), 10);
        assert_eq!(energy_exact(&h, &ground).unwrap(), -24.0);
        let all = unary_state(&[1, 1, 1, 1, 1], Some(10), 10);
        assert_eq!(energy_exact(&h, &all).unwrap(), 1697.0);
        assert!(matches!(
            energy_exact(&h, &NeuronState::zeros(3)),
            Err(Error::DimensionMismatch { expected: 15, actual: 3 })
        ));
    }

    #[test]
    fn rational_energy_is_exact() {
        let k = reference();
        let p = PenaltyWeights::new(
            Rational64::new(1, 3),
            Rational64::new(25, 2),
            Rational64::new(37, 3),
        );
        let h = build_hamiltonian(&k, CapacityEncoding::Unary, &p).unwrap();
        for mask in [0u64, 0b11010_0000000001, 0b10101_0110000000, 0x7fff] {
            let q = NeuronState::from_mask(mask, 15);
            assert_eq!(
                energy_exact(&h, &q).unwrap(),
                formulation_energy(&k, h.layout(), &p, &q).unwrap()
            );
        }
    }

    #[test]
    fn decode_examples() {
        let k = reference();
        let ground = unary_state(&[1, 1, 0, 1, 0], Some(10), 10);
        let d = decode(&ground, &k, CapacityEncoding::Unary).unwrap();
        assert_eq!(d.selection.total_value, 24);
        assert!(d.selection.feasible && d.slots.one_hot && d.slots.size_match && d.consistent);

        let d = decode(&NeuronState::zeros(15), &k, CapacityEncoding::Unary).unwrap();
        assert_eq!(d.selection.total_value, 0);
        assert!(!d.slots.one_hot && !d.consistent);

        let q = unary_state(&[0, 1, 0, 0, 0], Some(3), 10);
        let d = decode(&q, &k, CapacityEncoding::Unary).unwrap();
        assert!(d.slots.one_hot && !d.slots.size_match && !d.consistent);
    }

    #[test]
    fn exhaustive_examples() {
        let k = reference();
        let h = build_hamiltonian(&k, CapacityEncoding::Unary, &default_penalties::<i64>(&k))
            .unwrap();
        let (q, e) = exhaustive_min(&h).unwrap();
        assert_eq!(e, -24);
        assert_eq!(q, unary_state(&[1, 1, 0, 1, 0], Some(10), 10));

        let tiny = KnapsackInstance::new(vec![1], vec![1], 1).unwrap();
        let h = build_hamiltonian(&tiny, CapacityEncoding::Unary, &PenaltyWeights::new(1, 2, 2))
            .unwrap();
        let energies: Vec<i64> = (0..4)
            .map(|m| energy_exact(&h, &NeuronState::from_mask(m, 2)).unwrap())
            .collect();
        assert_eq!(energies, vec![2, 2, 3, -1]);
        let (q, e) = exhaustive_min(&h).unwrap();
        assert_eq!((q.bits(), e), (&[1u8, 1][..], -1));

        // Nothing fits: the empty selection wins. The lone slot costs s3 * 1
        // which ties the bare s2 offset, and the tie goes to q = [0, 0].
        let heavy = KnapsackInstance::new(vec![5], vec![9], 1).unwrap();
        let h = build_hamiltonian(&heavy, CapacityEncoding::Unary, &default_penalties::<i64>(&heavy))
            .unwrap();
        let (q, e) = exhaustive_min(&h).unwrap();
        assert_eq!(q.bits(), &[0, 0]);
        assert_eq!(e, 6);
        assert_eq!(energy_exact(&h, &NeuronState::from_mask(0b01, 2)).unwrap(), 6);
    }

    #[test]
    fn exhaustive_rejects_oversized() {
        let k = KnapsackInstance::new(vec![1; 3], vec![1; 3], 20).unwrap();
        let h = build_hamiltonian(&k, CapacityEncoding::Unary, &default_penalties::<f64>(&k))
            .unwrap();
        assert!(matches!(exhaustive_min(&h), Err(Error::TooLarge { size: 23, .. })));
    }

    #[test]
    fn csv_export() {
        let tiny = KnapsackInstance::new(vec![1], vec![1], 1).unwrap();
        let h = build_hamiltonian(&tiny, CapacityEncoding::Unary, &PenaltyWeights::new(1.0, 2.0, 2.0))
            .unwrap();
        let mut out = Vec::new();
        h.write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "n=2,N=1,M=1,encoding=unary,sigma1=1,sigma2=2,sigma3=2,offset=2\n1,-4\n0,0\n"
        );
    }
}
