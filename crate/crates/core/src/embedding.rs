//! Takens delay embedding.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::synthesis::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbedParams {
    /// Embedding dimension.
    pub p: usize,
    /// Delay multiplier; the delay is `m * dt`.
    pub m: usize,
}

impl Default for EmbedParams {
    fn default() -> Self {
        EmbedParams { p: 3, m: 1 }
    }
}

/// Delay vectors of a series, one row per time, stored row-major.
///
/// Row `i` is `(x(t_i), x(t_i - m dt), ..., x(t_i - (p-1) m dt))` with
/// `t_i = first_time_index + i`.
#[derive(Debug, Clone)]
pub struct EmbeddedSeries {
    states: Vec<f64>,
    dim: usize,
    delay: usize,
    first_time_index: usize,
    source: Arc<TimeSeries>,
}

impl EmbeddedSeries {
    pub fn len(&self) -> usize {
        self.states.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn first_time_index(&self) -> usize {
        self.first_time_index
    }

    pub fn source(&self) -> &Arc<TimeSeries> {
        &self.source
    }

    pub fn state(&self, row: usize) -> &[f64] {
        &self.states[row * self.dim..(row + 1) * self.dim]
    }

    /// Contiguous row-major storage.
    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks_exact(self.dim)
    }

    pub fn time_of_row(&self, row: usize) -> usize {
        self.first_time_index + row
    }

    /// Row holding the state at `time`, if embedded.
    pub fn row_of_time(&self, time: usize) -> Option<usize> {
        time.checked_sub(self.first_time_index)
            .filter(|&r| r < self.len())
    }
}

pub fn takens_embed(series: Arc<TimeSeries>, params: EmbedParams) -> Result<EmbeddedSeries> {
    let EmbedParams { p, m } = params;
    if p == 0 || m == 0 {
        return Err(Error::InvalidParams(format!(
            "embedding needs p >= 1 and m >= 1, got p = {p}, m = {m}"
        )));
    }
    let span = (p - 1) * m;
    let n = series.len();
    if n <= span {
        return Err(Error::SeriesTooShort {
            len: n,
            p,
            m,
            required: span + 1,
        });
    }
    let rows = n - span;
    let x = &series.values;
    let mut states = Vec::with_capacity(rows * p);
    for i in 0..rows {
        let t = span + i;
        states.extend((0..p).map(|c| x[t - c * m]));
    }
    Ok(EmbeddedSeries {
        states,
        dim: p,
        delay: m,
        first_time_index: span,
        source: series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn shared(values: Vec<f64>) -> Arc<TimeSeries> {
        Arc::new(TimeSeries::new(values, 1.0).unwrap())
    }

    #[test]
    fn three_dimensional_unit_delay() {
        let e = takens_embed(shared(vec![1., 2., 3., 4., 5.]), EmbedParams { p: 3, m: 1 }).unwrap();
        let rows: Vec<&[f64]> = e.rows().collect();
        assert_eq!(rows, vec![&[3., 2., 1.][..], &[4., 3., 2.], &[5., 4., 3.]]);
        assert_eq!(e.first_time_index(), 2);
    }

    #[test]
    fn one_dimensional_is_the_series() {
        let v = vec![0.5, -1.0, 2.0];
        let e = takens_embed(shared(v.clone()), EmbedParams { p: 1, m: 4 }).unwrap();
        assert_eq!(e.states(), &v[..]);
    }

    #[test]
    fn state_count_by_enumeration() {
        let e = takens_embed(shared((0..10).map(f64::from).collect()), EmbedParams { p: 3, m: 2 })
            .unwrap();
        let enumerated = (0..10usize).filter(|t| t.checked_sub(4).is_some()).count();
        assert_eq!(e.len(), enumerated);
        assert_eq!(e.len(), 6);
    }

    #[test]
    fn too_short_names_minimum() {
        let err = takens_embed(shared(vec![0.0; 4]), EmbedParams { p: 3, m: 2 }).unwrap_err();
        match err {
            Error::SeriesTooShort { required, .. } => assert_eq!(required, 5),
            other => panic!("unexpected {other:?}"),
        }
        assert!(takens_embed(shared(vec![0.0; 4]), EmbedParams { p: 0, m: 1 }).is_err());
    }

    proptest! {
        #[test]
        fn shift_structure_and_column_zero(
            values in prop::collection::vec(-1e3f64..1e3, 1..80),
            p in 1usize..5,
            m in 1usize..4,
        ) {
            let s = shared(values.clone());
            match takens_embed(s, EmbedParams { p, m }) {
                Err(_) => prop_assert!(values.len() <= (p - 1) * m),
                Ok(e) => {
                    prop_assert_eq!(e.len(), values.len() - (p - 1) * m);
                    let col0: Vec<f64> = e.rows().map(|r| r[0]).collect();
                    prop_assert_eq!(&col0[..], &values[(p - 1) * m..]);
                    for i in 0..e.len().saturating_sub(m) {
                        prop_assert_eq!(&e.state(i + m)[1..], &e.state(i)[..p - 1]);
                    }
                    for i in 0..e.len() {
                        let t = e.time_of_row(i);
                        for c in 0..p {
                            prop_assert_eq!(e.state(i)[c], values[t - c * m]);
                        }
                    }
                }
            }
        }
    }
}
