//! Fiber bounds and mutual algebraicity of relations.
//!
//! A relation `B ⊆ U^n` is K-mutually algebraic when, for every split of its
//! coordinates into two nonempty blocks `X ⊔ Y`, fixing the `Y` coordinates of
//! a tuple of `B` leaves at most `K` tuples of `B`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::structure::{ElemId, Relation};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum MaError {
    #[error("partitions need a positive arity")]
    ZeroArity,
    #[error("partition is for arity {expected}, relation has arity {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("invalid partition {y:?} of arity {arity}")]
    InvalidPartition { arity: usize, y: Vec<usize> },
}

/// A proper partition of the coordinates `0..arity`, identified by its
/// projection block `Y` (sorted, nonempty, not everything).
///
/// Ordering is by `|Y|`, then lexicographic on `Y`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartitionKey {
    arity: usize,
    y: Vec<usize>,
}

impl PartitionKey {
    pub fn new(arity: usize, mut y: Vec<usize>) -> Result<Self, MaError> {
        y.sort_unstable();
        y.dedup();
        if y.is_empty() || y.len() >= arity || y.iter().any(|&c| c >= arity) {
            return Err(MaError::InvalidPartition { arity, y });
        }
        Ok(PartitionKey { arity, y })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Projection coordinates (0-based).
    pub fn y(&self) -> &[usize] {
        &self.y
    }

    /// The complementary block (0-based).
    pub fn x(&self) -> Vec<usize> {
        (0..self.arity).filter(|c| !self.y.contains(c)).collect()
    }
}

impl Ord for PartitionKey {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.arity, self.y.len(), &self.y).cmp(&(other.arity, other.y.len(), &other.y))
    }
}

impl PartialOrd for PartitionKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn one_based(cols: &[usize]) -> Vec<usize> {
    cols.iter().map(|c| c + 1).collect()
}

impl fmt::Display for PartitionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |cols: Vec<usize>| {
            cols.iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(
            f,
            "X={{{}}} Y={{{}}}",
            show(one_based(&self.x())),
            show(one_based(&self.y))
        )
    }
}

impl Serialize for PartitionKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("PartitionKey", 2)?;
        st.serialize_field("x", &one_based(&self.x()))?;
        st.serialize_field("y", &one_based(&self.y))?;
        st.end()
    }
}

/// All `2^n - 2` proper partitions of `0..n` in canonical order.
pub fn proper_partitions(n: usize) -> Result<Vec<PartitionKey>, MaError> {
    if n == 0 {
        return Err(MaError::ZeroArity);
    }
    let mut keys: Vec<PartitionKey> = (1u64..(1u64 << n) - 1)
        .map(|mask| PartitionKey {
            arity: n,
            y: (0..n).filter(|&c| mask & (1 << c) != 0).collect(),
        })
        .collect();
    keys.sort();
    Ok(keys)
}

/// Largest fiber `|π_Y⁻¹(b̄_Y) ∩ B|` over the Y-projections present in `B`.
pub fn fiber_bound(relation: &Relation, partition: &PartitionKey) -> Result<usize, MaError> {
    if partition.arity != relation.arity() {
        return Err(MaError::ArityMismatch {
            expected: partition.arity,
            found: relation.arity(),
        });
    }
    Ok(fiber_max(relation, &partition.y))
}

fn fiber_max(relation: &Relation, y: &[usize]) -> usize {
    let mut buckets: HashMap<Vec<ElemId>, usize> = HashMap::new();
    for t in relation.iter() {
        *buckets
            .entry(y.iter().map(|&c| t[c]).collect())
            .or_default() += 1;
    }
    buckets.into_values().max().unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PartitionBound {
    pub partition: PartitionKey,
    pub max_fiber: usize,
}

/// Per-partition fiber bounds and their maximum.
///
/// For arity 0 or 1 there are no proper partitions: `per_partition` is empty,
/// `uniform_k` is 0 and `vacuous` is set, so callers can tell "no constraint"
/// apart from "empty relation".
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MaProfile {
    pub arity: usize,
    pub per_partition: Vec<PartitionBound>,
    pub uniform_k: usize,
    pub vacuous: bool,
}

impl MaProfile {
    pub fn bound_for(&self, partition: &PartitionKey) -> Option<usize> {
        self.per_partition
            .iter()
            .find(|b| &b.partition == partition)
            .map(|b| b.max_fiber)
    }

    /// Whether this profile is within a claimed bound.
    pub fn respects(&self, k: usize) -> bool {
        self.vacuous || self.uniform_k <= k
    }
}

pub fn ma_profile(relation: &Relation) -> MaProfile {
    let arity = relation.arity();
    if arity <= 1 {
        return MaProfile {
            arity,
            per_partition: Vec::new(),
            uniform_k: 0,
            vacuous: true,
        };
    }
    let per_partition: Vec<PartitionBound> = proper_partitions(arity)
        .expect("arity is positive")
        .into_iter()
        .map(|p| {
            let max_fiber = fiber_max(relation, &p.y);
            PartitionBound {
                partition: p,
                max_fiber,
            }
        })
        .collect();
    let uniform_k = per_partition.iter().map(|b| b.max_fiber).max().unwrap_or(0);
    MaProfile {
        arity,
        per_partition,
        uniform_k,
        vacuous: false,
    }
}

/// Whether every proper partition has fibers of size at most `k`.
pub fn is_k_ma(relation: &Relation, k: usize) -> bool {
    ma_profile(relation).respects(k)
}
