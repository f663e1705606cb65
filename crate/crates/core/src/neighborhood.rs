//! Exact Euclidean nearest-neighbour queries.
//!
//! Brute force: the datasets this crate targets have at most a few thousand
//! rows. Ties in distance are broken by ascending row index.

use std::collections::BTreeSet;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::tensor::Tensor2D;

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The `k` rows of `pool` (row indices into `points`) closest to `query`,
/// ordered by (distance, index).
pub fn nearest(points: &Tensor2D, query: &[f64], pool: &[usize], k: usize) -> Vec<usize> {
    let mut scored: Vec<(f64, usize)> = pool
        .iter()
        .map(|&i| (squared_distance(points.row(i), query), i))
        .collect();
    let k = k.min(scored.len());
    let by_distance_then_index =
        |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < scored.len() && k > 0 {
        scored.select_nth_unstable_by(k - 1, by_distance_then_index);
        scored.truncate(k);
    }
    scored.sort_unstable_by(by_distance_then_index);
    scored.truncate(k);
    scored.into_iter().map(|(_, i)| i).collect()
}

/// Minority neighbourhoods: for each minority row (in ascending row order),
/// its `neb` nearest minority rows, itself first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborhoodIndex {
    /// Minority row positions in the dataset, ascending.
    pub points: Vec<usize>,
    /// `neighbors[i]` is the neighbourhood of `points[i]`, as dataset rows.
    pub neighbors: Vec<Vec<usize>>,
}

impl NeighborhoodIndex {
    pub fn neb(&self) -> usize {
        self.neighbors.first().map_or(0, Vec::len)
    }

    pub fn of(&self, minority_rank: usize) -> &[usize] {
        &self.neighbors[minority_rank]
    }
}

pub fn knn_minority(d: &Dataset, neb: usize) -> Result<NeighborhoodIndex> {
    let minority = d.minority_indices();
    if minority.is_empty() {
        return Err(Error::validation("minority class is empty"));
    }
    if neb < 2 && minority.len() >= 2 {
        return Err(Error::validation(format!("neighbourhood size must be at least 2, got {neb}")));
    }
    let neighbors = minority
        .iter()
        .map(|&i| nearest(d.features(), d.features().row(i), &minority, neb))
        .collect();
    Ok(NeighborhoodIndex {
        points: minority,
        neighbors,
    })
}

/// For each minority row (ascending), its `neb` nearest majority rows.
pub fn knn_majority(d: &Dataset, neb: usize) -> Result<Vec<Vec<usize>>> {
    let minority = d.minority_indices();
    let majority = d.majority_indices();
    if minority.is_empty() || majority.is_empty() {
        return Err(Error::validation("both classes must be non-empty"));
    }
    Ok(minority
        .iter()
        .map(|&i| nearest(d.features(), d.features().row(i), &majority, neb))
        .collect())
}

/// Union over minority rows of their `neb` nearest majority rows, ascending.
pub fn proximal_majority(d: &Dataset, neb: usize) -> Result<Vec<usize>> {
    let per_point = knn_majority(d, neb)?;
    let set: BTreeSet<usize> = per_point.into_iter().flatten().collect();
    Ok(set.into_iter().collect())
}
