//! Small numeric helpers shared by the estimators: moments and ordinary
//! least-squares line fits.

/// Arithmetic mean; `NaN` for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Two-pass population variance (divides by `n`).
pub fn population_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Result of a least-squares fit `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope. Zero when the points are collinear,
    /// `NaN` with fewer than three points.
    pub slope_stderr: f64,
    /// Root-mean-square residual.
    pub rms_residual: f64,
    pub n_points: usize,
}

/// Ordinary least squares on paired samples. Returns `None` when fewer than
/// two points are given or all `x` coincide.
pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mx = mean(x);
    let my = mean(y);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let dx = xi - mx;
        sxx += dx * dx;
        sxy += dx * (yi - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let r = yi - (slope * xi + intercept);
            r * r
        })
        .sum();
    let slope_stderr = if n > 2 {
        (ssr / (n - 2) as f64 / sxx).sqrt()
    } else {
        f64::NAN
    };
    Some(LineFit {
        slope,
        intercept,
        slope_stderr,
        rms_residual: (ssr / n as f64).sqrt(),
        n_points: n,
    })
}

/// Median of a slice (sorts a copy). `NaN` for an empty slice.
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Log-uniform grid of distinct integers in `[lo, hi]`, `per_decade` points
/// per factor of ten before rounding.
pub fn log_uniform_integers(lo: usize, hi: usize, per_decade: usize) -> Vec<usize> {
    assert!(lo >= 1 && hi >= lo && per_decade >= 1);
    let (a, b) = ((lo as f64).log10(), (hi as f64).log10());
    let steps = ((b - a) * per_decade as f64 + 1e-9).floor() as usize;
    let mut out: Vec<usize> = (0..=steps)
        .map(|i| 10f64.powf(a + i as f64 / per_decade as f64).round() as usize)
        .map(|v| v.clamp(lo, hi))
        .collect();
    out.dedup();
    if out.last() != Some(&hi) {
        out.push(hi);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_is_recovered() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.5 * v - 2.0).collect();
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope - 1.5).abs() < 1e-12);
        assert!((f.intercept + 2.0).abs() < 1e-12);
        assert!(f.slope_stderr < 1e-12);
        assert_eq!(f.n_points, 10);
    }

    #[test]
    fn degenerate_abscissa() {
        assert!(fit_line(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]).is_none());
        assert!(fit_line(&[1.0], &[0.0]).is_none());
    }

    #[test]
    fn stderr_matches_textbook_formula() {
        // Hand computation: sxy = 3, sxx = 5.
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 0.0, 3.0, 2.0];
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope - 0.6).abs() < 1e-12);
        // residuals 0.4, -1.2, 1.2, -0.4 -> ssr = 3.2
        let expected = (3.2f64 / 2.0 / 5.0).sqrt();
        assert!((f.slope_stderr - expected).abs() < 1e-12);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn log_grid_is_distinct_and_bounded() {
        let g = log_uniform_integers(1, 2048, 10);
        assert_eq!(g[0], 1);
        assert_eq!(*g.last().unwrap(), 2048);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        // 1, 2, 3, 4, 5, 6, 8, 10, 13, 16, 20, ...
        assert_eq!(&g[..8], &[1, 2, 3, 4, 5, 6, 8, 10]);
    }

    #[test]
    fn population_variance_known_value() {
        assert!((population_variance(&[1.0, 2.0, 3.0, 4.0]) - 1.25).abs() < 1e-15);
    }
}
