//! Analogue and successor volumes.
//!
//! The volume of an ensemble of `k` states is the mean squared Euclidean
//! distance over its `k(k-1)/2` unordered pairs. It equals
//! `2k/(k-1) * sum_c Var_c`, with `Var_c` the population variance of
//! coordinate `c` over the ensemble; the records pipeline uses that
//! O(kp) form, the pairwise O(k^2 p) sum is kept as the literal definition.

use rayon::prelude::*;

use crate::analogues::{NeighborIndex, QueryScratch};
use crate::embedding::EmbeddedSeries;
use crate::error::{Error, Result};

fn ensemble_size(states: &[f64], dim: usize) -> Result<usize> {
    if dim == 0 || states.len() % dim != 0 {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: states.len(),
        });
    }
    let k = states.len() / dim;
    if k < 2 {
        return Err(Error::EnsembleTooSmall(k));
    }
    Ok(k)
}

/// Pairwise definition: `2/(k(k-1)) * sum_{i>=1} sum_{j<i} |x_i - x_j|^2`,
/// `states` holding `k` row-major vectors of length `dim`.
pub fn analogue_volume(states: &[f64], dim: usize) -> Result<f64> {
    let k = ensemble_size(states, dim)?;
    let mut sum = 0.0;
    for i in 1..k {
        let xi = &states[i * dim..(i + 1) * dim];
        for j in 0..i {
            let xj = &states[j * dim..(j + 1) * dim];
            sum += xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
    }
    Ok(2.0 * sum / (k * (k - 1)) as f64)
}

/// Same contract as [`analogue_volume`], applied to successor states.
pub fn successor_volume(states: &[f64], dim: usize) -> Result<f64> {
    analogue_volume(states, dim)
}

/// Volume through the per-coordinate variance identity.
pub fn scatter_volume(states: &[f64], dim: usize) -> Result<f64> {
    let k = ensemble_size(states, dim)?;
    Ok(scatter_volume_unchecked(states, dim, k))
}

#[inline]
fn scatter_volume_unchecked(states: &[f64], dim: usize, k: usize) -> f64 {
    let mut total = 0.0;
    for c in 0..dim {
        let mut m = 0.0;
        for i in 0..k {
            m += states[i * dim + c];
        }
        m /= k as f64;
        let mut v = 0.0;
        for i in 0..k {
            let d = states[i * dim + c] - m;
            v += d * d;
        }
        total += v / k as f64;
    }
    2.0 * k as f64 / (k - 1) as f64 * total
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeRecord {
    pub target_time_index: usize,
    pub delta_a: f64,
    /// Successor volumes aligned with [`VolumeTable::taus`].
    pub delta_s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeTable {
    /// Successor delays in samples, strictly increasing.
    pub taus: Vec<usize>,
    pub records: Vec<VolumeRecord>,
}

impl VolumeTable {
    pub fn tau_position(&self, tau: usize) -> Option<usize> {
        self.taus.binary_search(&tau).ok()
    }

    /// `delta_s` of every record at one grid position.
    pub fn delta_s_column(&self, tau_index: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.delta_s[tau_index]).collect()
    }

    pub fn delta_a(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.delta_a).collect()
    }
}

fn check_independent(database: &EmbeddedSeries, measure: &EmbeddedSeries) -> Result<()> {
    let seed = |e: &EmbeddedSeries| e.source().params.map(|p| p.seed);
    if let (Some(a), Some(b)) = (seed(database), seed(measure)) {
        if a == b {
            return Err(Error::InvalidParams(format!(
                "database and measure share seed {a}; they must be independent realizations"
            )));
        }
    }
    Ok(())
}

/// One record per measure state: its analogue volume and the successor
/// volumes at every `tau` in `taus` (each in `1..=tau_max`).
pub fn compute_volume_records(
    index: &NeighborIndex<'_>,
    measure: &EmbeddedSeries,
    k: usize,
    taus: &[usize],
) -> Result<VolumeTable> {
    let database = index.database();
    check_independent(database, measure)?;
    if measure.dim() != database.dim() {
        return Err(Error::DimensionMismatch {
            expected: database.dim(),
            got: measure.dim(),
        });
    }
    if k < 2 {
        return Err(Error::EnsembleTooSmall(k));
    }
    if !taus.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidParams("tau grid must be strictly increasing".into()));
    }
    for &tau in taus {
        if tau == 0 || tau > index.tau_max() {
            return Err(Error::TauOutOfRange {
                tau,
                tau_max: index.tau_max(),
            });
        }
    }
    let dim = database.dim();
    let records = (0..measure.len())
        .into_par_iter()
        .map_init(
            || (QueryScratch::default(), Vec::with_capacity(k * dim)),
            |(scratch, buf), row| {
                let mut ens = index.k_nearest_with(measure.state(row), k, scratch)?;
                let target_time_index = measure.time_of_row(row);
                ens.target_time_index = Some(target_time_index);
                index.successors_into(&ens, 0, buf)?;
                let delta_a = scatter_volume_unchecked(buf, dim, k);
                let mut delta_s = Vec::with_capacity(taus.len());
                for &tau in taus {
                    index.successors_into(&ens, tau, buf)?;
                    delta_s.push(scatter_volume_unchecked(buf, dim, k));
                }
                Ok(VolumeRecord {
                    target_time_index,
                    delta_a,
                    delta_s,
                })
            },
        )
        .collect::<Result<Vec<_>>>()?;
    Ok(VolumeTable {
        taus: taus.to_vec(),
        records,
    })
}
