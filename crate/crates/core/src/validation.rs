//! Structure-function check of synthesized series.
//!
//! Empirical moments `E|x(t) - x(t - tau)|^q` over all valid `t`, and their
//! log-log slopes `zeta(q)` over a scale window. This path only touches the
//! raw series, independent of the phase-space machinery.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::regression::{fit_line, log_uniform_integers};
use crate::synthesis::TimeSeries;

/// Lags per decade of the default structure-function lag grid.
pub const LAGS_PER_DECADE: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct StructureFunctionTable {
    /// Lags in units of `dt`.
    pub lags: Vec<usize>,
    pub orders: Vec<f64>,
    /// `values[lag_index][order_index]`.
    pub values: Vec<Vec<f64>>,
    pub dt: f64,
}

impl StructureFunctionTable {
    pub fn value(&self, lag_index: usize, order_index: usize) -> f64 {
        self.values[lag_index][order_index]
    }
}

/// Log-uniform lag grid from 1 to `max_lag`.
pub fn default_lags(max_lag: usize) -> Vec<usize> {
    log_uniform_integers(1, max_lag.max(1), LAGS_PER_DECADE)
}

pub fn structure_functions(
    series: &TimeSeries,
    lags: &[usize],
    orders: &[f64],
) -> Result<StructureFunctionTable> {
    let n = series.len();
    for &lag in lags {
        if lag == 0 || lag >= n {
            return Err(Error::LagOutOfRange { lag, len: n });
        }
    }
    if let Some(&max) = lags.iter().max() {
        if max * 10 >= n {
            log::warn!("max lag {max} is not below n/10 = {}", n / 10);
        }
    }
    let x = &series.values;
    let values = lags
        .par_iter()
        .map(|&lag| {
            let count = (n - lag) as f64;
            let mut sums = vec![0.0; orders.len()];
            for t in lag..n {
                let inc = (x[t] - x[t - lag]).abs();
                for (s, &q) in sums.iter_mut().zip(orders) {
                    *s += if q == 0.0 {
                        1.0
                    } else if q == 2.0 {
                        inc * inc
                    } else {
                        inc.powf(q)
                    };
                }
            }
            sums.into_iter().map(|s| s / count).collect()
        })
        .collect();
    Ok(StructureFunctionTable {
        lags: lags.to_vec(),
        orders: orders.to_vec(),
        values,
        dt: series.dt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingExponent {
    pub q: f64,
    pub zeta: f64,
    pub stderr: f64,
    pub n_points: usize,
    /// False when fewer than three finite points fell inside the window.
    pub valid: bool,
}

/// Least-squares slope of `ln S_q(tau)` against `ln tau` for each order,
/// using lags with `tau_lo <= lag * dt <= tau_hi`.
pub fn scaling_exponents(
    table: &StructureFunctionTable,
    tau_lo: f64,
    tau_hi: f64,
) -> Result<Vec<ScalingExponent>> {
    let inside: Vec<usize> = (0..table.lags.len())
        .filter(|&i| {
            let tau = table.lags[i] as f64 * table.dt;
            tau >= tau_lo && tau <= tau_hi
        })
        .collect();
    if inside.len() < 5 {
        return Err(Error::DegenerateFit(format!(
            "{} lags inside [{tau_lo}, {tau_hi}], need at least 5",
            inside.len()
        )));
    }
    let out = table
        .orders
        .iter()
        .enumerate()
        .map(|(qi, &q)| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = inside
                .iter()
                .map(|&i| ((table.lags[i] as f64 * table.dt).ln(), table.value(i, qi).ln()))
                .filter(|(_, y)| y.is_finite())
                .unzip();
            match fit_line(&xs, &ys) {
                Some(f) if xs.len() >= 3 => ScalingExponent {
                    q,
                    zeta: f.slope,
                    stderr: f.slope_stderr,
                    n_points: f.n_points,
                    valid: true,
                },
                _ => ScalingExponent {
                    q,
                    zeta: f64::NAN,
                    stderr: f64::NAN,
                    n_points: xs.len(),
                    valid: false,
                },
            }
        })
        .collect();
    Ok(out)
}

/// `zeta(q)` from a set of exponents, if that order was estimated.
pub fn zeta_at(exponents: &[ScalingExponent], q: f64) -> Option<f64> {
    exponents.iter().find(|e| e.q == q && e.valid).map(|e| e.zeta)
}

/// Flatness `E[d^4] / E[d^2]^2` of increments at `lag`.
pub fn flatness(series: &TimeSeries, lag: usize) -> Result<f64> {
    let t = structure_functions(series, &[lag], &[2.0, 4.0])?;
    Ok(t.value(0, 1) / (t.value(0, 0) * t.value(0, 0)))
}

/// Sample skewness of increments at `lag`.
pub fn increment_skewness(series: &TimeSeries, lag: usize) -> Result<f64> {
    let n = series.len();
    if lag == 0 || lag >= n {
        return Err(Error::LagOutOfRange { lag, len: n });
    }
    let inc: Vec<f64> = (lag..n)
        .map(|t| series.values[t] - series.values[t - lag])
        .collect();
    let m = crate::regression::mean(&inc);
    let m2 = inc.iter().map(|d| (d - m).powi(2)).sum::<f64>() / inc.len() as f64;
    let m3 = inc.iter().map(|d| (d - m).powi(3)).sum::<f64>() / inc.len() as f64;
    Ok(m3 / m2.powf(1.5))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: Vec<f64>) -> TimeSeries {
        TimeSeries::new(values, 1.0).unwrap()
    }

    #[test]
    fn zeroth_order_is_one() {
        let s = series((0..200).map(|i| (i as f64 * 0.37).sin()).collect());
        let t = structure_functions(&s, &[1, 5, 17], &[0.0, 2.0]).unwrap();
        for i in 0..3 {
            assert_eq!(t.value(i, 0), 1.0);
        }
    }

    #[test]
    fn constant_series_has_zero_moments() {
        let s = series(vec![3.0; 100]);
        let t = structure_functions(&s, &[1, 2, 9], &[0.5, 1.0, 4.0]).unwrap();
        assert!(t.values.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn lag_at_or_beyond_length_rejected() {
        let s = series(vec![0.0; 10]);
        assert!(structure_functions(&s, &[10], &[2.0]).is_err());
        assert!(structure_functions(&s, &[0], &[2.0]).is_err());
    }

    #[test]
    fn exact_power_law_table() {
        let lags: Vec<usize> = (1..=20).collect();
        let values = lags.iter().map(|&l| vec![(l as f64).powf(1.5)]).collect();
        let table = StructureFunctionTable {
            lags,
            orders: vec![2.0],
            values,
            dt: 1.0,
        };
        let z = scaling_exponents(&table, 1.0, 20.0).unwrap();
        assert!((z[0].zeta - 1.5).abs() < 1e-12);
        assert!(z[0].valid);
    }

    #[test]
    fn too_few_lags_in_window() {
        let table = StructureFunctionTable {
            lags: vec![1, 2, 3, 4],
            orders: vec![2.0],
            values: vec![vec![1.0]; 4],
            dt: 1.0,
        };
        assert!(scaling_exponents(&table, 1.0, 4.0).is_err());
    }

    #[test]
    fn non_finite_points_flag_order() {
        // Zero moments make ln S = -inf for every lag: flagged, not fitted.
        let lags: Vec<usize> = (1..=6).collect();
        let values = lags.iter().map(|&l| vec![0.0, l as f64]).collect();
        let table = StructureFunctionTable {
            lags,
            orders: vec![1.0, 2.0],
            values,
            dt: 1.0,
        };
        let z = scaling_exponents(&table, 1.0, 6.0).unwrap();
        assert!(!z[0].valid);
        assert!(z[1].valid);
        assert_eq!(zeta_at(&z, 1.0), None);
    }

    #[test]
    fn scale_invariance_of_exponents() {
        let s = series((0..5000).map(|i| ((i as f64) * 0.01).sin() + 0.001 * i as f64).collect());
        let lags = default_lags(400);
        let orders = [1.0, 2.0, 3.0];
        let a = scaling_exponents(&structure_functions(&s, &lags, &orders).unwrap(), 5.0, 300.0)
            .unwrap();
        let scaled = series(s.values.iter().map(|v| 7.5 * v).collect());
        let b = scaling_exponents(&structure_functions(&scaled, &lags, &orders).unwrap(), 5.0, 300.0)
            .unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.zeta - y.zeta).abs() < 1e-9);
        }
    }
}
