//! 0/1 knapsack instances, selection evaluation and the exhaustive oracle.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest item count the exhaustive oracle will enumerate.
pub const BRUTE_FORCE_CAP: usize = 30;

/// A 0/1 knapsack problem. Matches the JSON problem-file layout.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnapsackInstance {
    pub values: Vec<u64>,
    pub weights: Vec<u64>,
    pub capacity: u64,
}

/// Outcome of [`KnapsackInstance::validate`]; never an error by itself.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            write!(f, "valid")
        } else {
            write!(f, "{}", self.violations.join("; "))
        }
    }
}

/// A candidate subset together with its totals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub chosen: Vec<u8>,
    pub total_value: u64,
    pub total_weight: u64,
    pub feasible: bool,
}

impl KnapsackInstance {
    /// Builds an instance, rejecting anything [`validate`](Self::validate) would flag.
    pub fn new(values: Vec<u64>, weights: Vec<u64>, capacity: u64) -> Result<Self> {
        let instance = Self {
            values,
            weights,
            capacity,
        };
        instance.ensure_valid()?;
        Ok(instance)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let instance: Self = serde_json::from_str(text)?;
        instance.ensure_valid()?;
        Ok(instance)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_value(&self) -> u64 {
        self.values.iter().copied().max().unwrap_or(0)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if self.values.is_empty() {
            violations.push("instance has no items".to_string());
        }
        if self.values.len() != self.weights.len() {
            violations.push(format!(
                "{} values but {} weights",
                self.values.len(),
                self.weights.len()
            ));
        }
        if let Some(i) = self.values.iter().position(|&v| v == 0) {
            violations.push(format!("value of item {i} is zero"));
        }
        if let Some(i) = self.weights.iter().position(|&w| w == 0) {
            violations.push(format!("weight of item {i} is zero"));
        }
        if self.capacity == 0 {
            violations.push("capacity is zero".to_string());
        }
        ValidationReport { violations }
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidInstance(report.to_string()))
        }
    }

    pub fn evaluate_selection(&self, chosen: &[u8]) -> Result<Selection> {
        if chosen.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                actual: chosen.len(),
            });
        }
        let mut total_value = 0;
        let mut total_weight = 0;
        for ((&x, &v), &w) in chosen.iter().zip(&self.values).zip(&self.weights) {
            if x != 0 {
                total_value += v;
                total_weight += w;
            }
        }
        Ok(Selection {
            chosen: chosen.iter().map(|&x| u8::from(x != 0)).collect(),
            total_value,
            total_weight,
            feasible: total_weight <= self.capacity,
        })
    }

    /// Exhaustive search for a maximum-value feasible subset.
    ///
    /// Ties resolve to the lexicographically smallest chosen vector. Subsets
    /// are visited in Gray-code order so each step costs one item update.
    pub fn brute_force_optimum(&self) -> Result<Selection> {
        self.ensure_valid()?;
        let n = self.len();
        if n > BRUTE_FORCE_CAP {
            return Err(Error::TooLarge {
                what: "knapsack instance",
                size: n,
                cap: BRUTE_FORCE_CAP,
            });
        }
        // Item i lives at bit n-1-i so integer order is lexicographic order.
        let bit = |i: usize| 1u64 << (n - 1 - i);
        let mut mask = 0u64;
        let mut value = 0u64;
        let mut weight = 0u64;
        let mut best_mask = 0u64;
        let mut best_value = 0u64;
        for step in 1u64..(1u64 << n) {
            let position = step.trailing_zeros() as usize;
            // Gray code flips bit `position` counted from the least significant end.
            let item = n - 1 - position;
            mask ^= bit(item);
            if mask & bit(item) != 0 {
                value += self.values[item];
                weight += self.weights[item];
            } else {
                value -= self.values[item];
                weight -= self.weights[item];
            }
            if weight <= self.capacity
                && (value > best_value || (value == best_value && mask < best_mask))
            {
                best_value = value;
                best_mask = mask;
            }
        }
        let chosen: Vec<u8> = (0..n).map(|i| u8::from(best_mask & bit(i) != 0)).collect();
        self.evaluate_selection(&chosen)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference() -> KnapsackInstance {
        KnapsackInstance::new(vec![5, 8, 4, 11, 3], vec![3, 2, 8, 5, 4], 10).unwrap()
    }

    #[test]
    fn validate_reports_violations() {
        assert!(reference().validate().is_valid());

        let empty = KnapsackInstance {
            values: vec![],
            weights: vec![],
            capacity: 1,
        };
        assert!(!empty.validate().is_valid());

        let mismatch = KnapsackInstance {
            values: vec![1, 2],
            weights: vec![1],
            capacity: 3,
        };
        let report = mismatch.validate();
        assert!(!report.is_valid());
        assert!(report.to_string().contains("2 values but 1 weights"));

        let zeros = KnapsackInstance {
            values: vec![0],
            weights: vec![0],
            capacity: 0,
        };
        assert_eq!(zeros.validate().violations.len(), 3);
    }

    #[test]
    fn evaluates_selections() {
        let k = reference();
        let s = k.evaluate_selection(&[1, 1, 0, 1, 0]).unwrap();
        assert_eq!((s.total_value, s.total_weight, s.feasible), (24, 10, true));
        let s = k.evaluate_selection(&[0; 5]).unwrap();
        assert_eq!((s.total_value, s.total_weight, s.feasible), (0, 0, true));
        let s = k.evaluate_selection(&[1; 5]).unwrap();
        assert_eq!((s.total_value, s.total_weight, s.feasible), (31, 22, false));
        assert!(matches!(
            k.evaluate_selection(&[1, 0]),
            Err(Error::LengthMismatch { expected: 5, actual: 2 })
        ));
    }

    #[test]
    fn oracle_examples() {
        let s = reference().brute_force_optimum().unwrap();
        assert_eq!(s.chosen, vec![1, 1, 0, 1, 0]);
        assert_eq!(s.total_value, 24);

        let single = KnapsackInstance::new(vec![7], vec![5], 4).unwrap();
        let s = single.brute_force_optimum().unwrap();
        assert_eq!((s.chosen, s.total_value), (vec![0], 0));

        let tight = KnapsackInstance::new(vec![5, 8, 4, 11, 3], vec![3, 2, 8, 5, 4], 7).unwrap();
        let s = tight.brute_force_optimum().unwrap();
        assert_eq!((s.chosen, s.total_value), (vec![0, 1, 0, 1, 0], 19));
    }

    #[test]
    fn oracle_breaks_ties_lexicographically() {
        // {0} and {1} both reach value 4; [0,1] < [1,0].
        let k = KnapsackInstance::new(vec![4, 4], vec![2, 2], 3).unwrap();
        assert_eq!(k.brute_force_optimum().unwrap().chosen, vec![0, 1]);
    }

    #[test]
    fn oracle_rejects_oversized() {
        let k = KnapsackInstance::new(vec![1; 31], vec![1; 31], 5).unwrap();
        assert!(matches!(
            k.brute_force_optimum(),
            Err(Error::TooLarge { size: 31, .. })
        ));
    }

    fn small_instance() -> impl Strategy<Value = KnapsackInstance> {
        (1usize..=12).prop_flat_map(|n| {
            (
                proptest::collection::vec(1u64..=20, n),
                proptest::collection::vec(1u64..=10, n),
                1u64..=40,
            )
                .prop_map(|(values, weights, capacity)| KnapsackInstance {
                    values,
                    weights,
                    capacity,
                })
        })
    }

    proptest! {
        #[test]
        fn oracle_is_optimal(k in small_instance()) {
            let best = k.brute_force_optimum().unwrap();
            prop_assert!(best.feasible);
            // Plain binary counting, independent of the Gray-code walk.
            let n = k.len();
            let mut expected = 0;
            for mask in 0u32..(1 << n) {
                let chosen: Vec<u8> = (0..n).map(|i| ((mask >> i) & 1) as u8).collect();
                let s = k.evaluate_selection(&chosen).unwrap();
                if s.feasible {
                    expected = expected.max(s.total_value);
                }
            }
            prop_assert_eq!(best.total_value, expected);
            prop_assert_eq!(k.brute_force_optimum().unwrap().chosen, best.chosen);
        }

        #[test]
        fn evaluation_is_additive(k in small_instance(), seed in any::<u64>()) {
            let n = k.len();
            let a: Vec<u8> = (0..n).map(|i| ((seed >> i) & 1) as u8).collect();
            let b: Vec<u8> = (0..n).map(|i| u8::from(a[i] == 0 && (seed >> (i + 32)) & 1 == 1)).collect();
            let union: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x | y).collect();
            let (sa, sb, su) = (
                k.evaluate_selection(&a).unwrap(),
                k.evaluate_selection(&b).unwrap(),
                k.evaluate_selection(&union).unwrap(),
            );
            prop_assert_eq!(su.total_value, sa.total_value + sb.total_value);
            prop_assert_eq!(su.total_weight, sa.total_weight + sb.total_weight);
        }
    }
}
