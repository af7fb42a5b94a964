//! Analogue search: exact k-nearest neighbours of target states among the
//! database states that still have successors up to `tau_max`.

pub mod kdtree;

use crate::embedding::EmbeddedSeries;
use crate::error::{Error, Result};
use kdtree::{Candidates, KdTree};

/// Default ensemble size.
pub const DEFAULT_K: usize = 50;

/// Exact Euclidean k-NN index over the admissible part of a database.
#[derive(Debug)]
pub struct NeighborIndex<'a> {
    database: &'a EmbeddedSeries,
    tree: KdTree,
    tau_max: usize,
    admissible: usize,
}

/// The `k` analogues of one target, nearest first.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogEnsemble {
    /// Time index of the target in its own series, when known.
    pub target_time_index: Option<usize>,
    /// Database time indices, ascending distance, ties by smaller index.
    pub analogue_time_indices: Vec<usize>,
    pub distances: Vec<f64>,
    /// Distance to the k-th analogue.
    pub epsilon_k: f64,
}

impl AnalogEnsemble {
    pub fn k(&self) -> usize {
        self.analogue_time_indices.len()
    }
}

/// Reusable per-thread query buffers.
#[derive(Debug)]
pub struct QueryScratch {
    candidates: Candidates,
    offsets: Vec<f64>,
}

impl Default for QueryScratch {
    fn default() -> Self {
        QueryScratch {
            candidates: Candidates::new(0),
            offsets: Vec::new(),
        }
    }
}

/// Builds the index over database rows whose time index is at most
/// `last - tau_max`, so every analogue has successors at all `tau <= tau_max`.
pub fn build_index(database: &EmbeddedSeries, tau_max: usize) -> Result<NeighborIndex<'_>> {
    let states = database.len();
    if states == 0 || tau_max >= states {
        return Err(Error::EmptyAdmissibleRange { states, tau_max });
    }
    let admissible = states - tau_max;
    let dim = database.dim();
    let tree = KdTree::build(&database.states()[..admissible * dim], dim);
    Ok(NeighborIndex {
        database,
        tree,
        tau_max,
        admissible,
    })
}

impl<'a> NeighborIndex<'a> {
    pub fn database(&self) -> &'a EmbeddedSeries {
        self.database
    }

    pub fn tau_max(&self) -> usize {
        self.tau_max
    }

    /// Number of searchable database states.
    pub fn admissible_count(&self) -> usize {
        self.admissible
    }

    /// Largest admissible database time index.
    pub fn max_admissible_time_index(&self) -> usize {
        self.database.time_of_row(self.admissible - 1)
    }

    pub fn k_nearest(&self, target: &[f64], k: usize) -> Result<AnalogEnsemble> {
        self.k_nearest_with(target, k, &mut QueryScratch::default())
    }

    pub fn k_nearest_with(
        &self,
        target: &[f64],
        k: usize,
        scratch: &mut QueryScratch,
    ) -> Result<AnalogEnsemble> {
        if target.len() != self.database.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.database.dim(),
                got: target.len(),
            });
        }
        if k == 0 || k > self.admissible {
            return Err(Error::TooManyNeighbors {
                k,
                admissible: self.admissible,
            });
        }
        self.tree
            .knn_into(target, k, &mut scratch.candidates, &mut scratch.offsets);
        let found = scratch.candidates.as_slice();
        let analogue_time_indices = found
            .iter()
            .map(|&(_, row)| self.database.time_of_row(row as usize))
            .collect();
        let distances: Vec<f64> = found.iter().map(|&(d2, _)| d2.sqrt()).collect();
        Ok(AnalogEnsemble {
            target_time_index: None,
            analogue_time_indices,
            epsilon_k: distances[k - 1],
            distances,
        })
    }

    /// States at the analogue times shifted by `tau`, in ensemble order,
    /// concatenated row-major.
    pub fn successors(&self, ensemble: &AnalogEnsemble, tau: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(ensemble.k() * self.database.dim());
        self.successors_into(ensemble, tau, &mut out)?;
        Ok(out)
    }

    pub fn successors_into(
        &self,
        ensemble: &AnalogEnsemble,
        tau: usize,
        out: &mut Vec<f64>,
    ) -> Result<()> {
        if tau > self.tau_max {
            return Err(Error::TauOutOfRange {
                tau,
                tau_max: self.tau_max,
            });
        }
        out.clear();
        for &t in &ensemble.analogue_time_indices {
            let row = self
                .database
                .row_of_time(t + tau)
                .ok_or(Error::TauOutOfRange {
                    tau,
                    tau_max: self.tau_max,
                })?;
            out.extend_from_slice(self.database.state(row));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{takens_embed, EmbedParams};
    use crate::synthesis::TimeSeries;
    use std::sync::Arc;

    fn embedded(values: Vec<f64>, p: usize) -> EmbeddedSeries {
        let s = Arc::new(TimeSeries::new(values, 1.0).unwrap());
        takens_embed(s, EmbedParams { p, m: 1 }).unwrap()
    }

    #[test]
    fn hand_enumerated_tie() {
        let db = embedded(vec![0.0, 1.0, 3.0, 7.0], 1);
        let index = build_index(&db, 0).unwrap();
        let e = index.k_nearest(&[2.0], 2).unwrap();
        assert_eq!(e.analogue_time_indices, vec![1, 2]);
        assert_eq!(e.distances, vec![1.0, 1.0]);
        assert_eq!(e.epsilon_k, 1.0);
    }

    #[test]
    fn self_coincidence() {
        let db = embedded((0..50).map(|i| (i as f64 * 0.7).sin()).collect(), 3);
        let index = build_index(&db, 5).unwrap();
        let target = db.state(10).to_vec();
        let e = index.k_nearest(&target, 3).unwrap();
        assert_eq!(e.distances[0], 0.0);
        assert_eq!(e.analogue_time_indices[0], db.time_of_row(10));
    }

    #[test]
    fn single_admissible_state() {
        let db = embedded(vec![1.0, 2.0, 3.0, 4.0], 1);
        let index = build_index(&db, 3).unwrap();
        assert_eq!(index.admissible_count(), 1);
        for q in [-5.0, 1.0, 100.0] {
            assert_eq!(index.k_nearest(&[q], 1).unwrap().analogue_time_indices, vec![0]);
        }
    }

    #[test]
    fn admissible_range_excludes_tail() {
        let db = embedded((0..1000).map(f64::from).collect(), 1);
        let index = build_index(&db, 100).unwrap();
        assert_eq!(index.admissible_count(), 900);
        assert_eq!(index.max_admissible_time_index(), 899);
        let e = index.k_nearest(&[999.0], 1).unwrap();
        assert_eq!(e.analogue_time_indices, vec![899]);
    }

    #[test]
    fn build_and_query_errors() {
        let db = embedded(vec![1.0, 2.0, 3.0], 1);
        assert!(matches!(build_index(&db, 3), Err(Error::EmptyAdmissibleRange { .. })));
        let index = build_index(&db, 1).unwrap();
        assert!(matches!(index.k_nearest(&[0.0], 3), Err(Error::TooManyNeighbors { .. })));
        assert!(matches!(
            index.k_nearest(&[0.0, 1.0], 1),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn successors_boundaries() {
        let db = embedded((0..20).map(f64::from).collect(), 2);
        let index = build_index(&db, 4).unwrap();
        // Boundary analogue: the last admissible state.
        let last = index.max_admissible_time_index();
        let e = index.k_nearest(&[last as f64, last as f64 - 1.0], 2).unwrap();
        assert_eq!(e.analogue_time_indices[0], last);
        let s = index.successors(&e, 4).unwrap();
        assert_eq!(s.len(), 2 * 2);
        assert_eq!(s[0], (last + 4) as f64);
        assert!(matches!(index.successors(&e, 5), Err(Error::TauOutOfRange { .. })));
        // Zero shift returns the analogues themselves.
        let s0 = index.successors(&e, 0).unwrap();
        assert_eq!(s0[0], last as f64);
        assert_eq!(index.successors(&e, 2).unwrap(), index.successors(&e, 2 + 0).unwrap());
    }

    #[test]
    fn epsilon_monotone_in_k() {
        let db = embedded((0..400).map(|i| (i as f64 * 1.3).cos()).collect(), 3);
        let index = build_index(&db, 10).unwrap();
        let target = [0.1, -0.2, 0.3];
        let eps: Vec<f64> = (1..30).map(|k| index.k_nearest(&target, k).unwrap().epsilon_k).collect();
        assert!(eps.windows(2).all(|w| w[0] <= w[1]));
    }
}
