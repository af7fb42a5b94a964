//! Ensemble statistics over volume records: the distribution of
//! `log delta_a`, the mean successor dispersion `<delta_s>(tau)`, the
//! volume-to-volume exponent `alpha(tau)`, the three scale-domain fits and
//! the pooled intermittency coefficient of `alpha`.

use crate::error::{Error, Result};
use crate::metrics::VolumeTable;
use crate::regression::{fit_line, mean, median, population_variance};

pub const DEFAULT_BINS: usize = 100;

/// Largest tolerated fraction of zero analogue volumes.
pub const MAX_ZERO_FRACTION: f64 = 0.001;

#[derive(Debug, Clone, PartialEq)]
pub struct LogVolumePdf {
    pub bin_centers: Vec<f64>,
    pub bin_width: f64,
    pub densities: Vec<f64>,
    /// Mean of the raw `log delta_a` samples.
    pub mean: f64,
    /// Population standard deviation of the raw samples.
    pub std: f64,
    /// All samples equal; `std` is zero.
    pub degenerate: bool,
    pub n_samples: usize,
    /// Records dropped because `delta_a == 0`.
    pub dropped_zero: usize,
}

impl LogVolumePdf {
    /// Riemann sum of the densities.
    pub fn integral(&self) -> f64 {
        self.densities.iter().sum::<f64>() * self.bin_width
    }
}

/// Normalized histogram of `samples` over `n_bins` equal bins spanning
/// `[min, max]`.
pub fn histogram_pdf(samples: &[f64], n_bins: usize) -> Result<LogVolumePdf> {
    if samples.is_empty() {
        return Err(Error::InvalidParams("no samples for histogram".into()));
    }
    if n_bins == 0 {
        return Err(Error::InvalidParams("n_bins must be positive".into()));
    }
    let m = mean(samples);
    let std = population_variance(samples).sqrt();
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let degenerate = hi <= lo;
    let (start, width) = if degenerate {
        // Unit-width bins centred so the single value sits mid-bin.
        (lo - (n_bins / 2) as f64 - 0.5, 1.0)
    } else {
        (lo, (hi - lo) / n_bins as f64)
    };
    let mut counts = vec![0usize; n_bins];
    for &v in samples {
        let b = (((v - start) / width).floor() as usize).min(n_bins - 1);
        counts[b] += 1;
    }
    let norm = 1.0 / (samples.len() as f64 * width);
    Ok(LogVolumePdf {
        bin_centers: (0..n_bins)
            .map(|i| start + (i as f64 + 0.5) * width)
            .collect(),
        bin_width: width,
        densities: counts.iter().map(|&c| c as f64 * norm).collect(),
        mean: m,
        std: if degenerate { 0.0 } else { std },
        degenerate,
        n_samples: samples.len(),
        dropped_zero: 0,
    })
}

/// Distribution of `ln delta_a` over the records. Zero volumes are dropped
/// and counted; more than 0.1% of them is an error.
pub fn log_volume_pdf(table: &VolumeTable, n_bins: usize) -> Result<LogVolumePdf> {
    let total = table.records.len();
    let logs: Vec<f64> = table
        .records
        .iter()
        .filter(|r| r.delta_a > 0.0)
        .map(|r| r.delta_a.ln())
        .collect();
    let dropped = total - logs.len();
    if dropped as f64 > MAX_ZERO_FRACTION * total as f64 {
        return Err(Error::TooManyZeroVolumes { dropped, total });
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} zero analogue volumes of {total}");
    }
    let mut pdf = histogram_pdf(&logs, n_bins)?;
    pdf.dropped_zero = dropped;
    Ok(pdf)
}

/// Abscissa standardized to `(x - mean) / std`, densities scaled by `std`.
pub fn rescaled_pdf(pdf: &LogVolumePdf) -> Result<LogVolumePdf> {
    if pdf.degenerate || !(pdf.std > 0.0) {
        return Err(Error::DegenerateStd);
    }
    let s = pdf.std;
    Ok(LogVolumePdf {
        bin_centers: pdf.bin_centers.iter().map(|c| (c - pdf.mean) / s).collect(),
        bin_width: pdf.bin_width / s,
        densities: pdf.densities.iter().map(|d| d * s).collect(),
        mean: 0.0,
        std: 1.0,
        degenerate: false,
        n_samples: pdf.n_samples,
        dropped_zero: pdf.dropped_zero,
    })
}

/// Regression used for `alpha(tau)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlphaEstimator {
    #[default]
    LeastSquares,
    /// Median of slopes over the disjoint pairs `(i, i + n/2)`.
    TheilSen,
}

impl AlphaEstimator {
    pub fn name(self) -> &'static str {
        match self {
            AlphaEstimator::LeastSquares => "ols",
            AlphaEstimator::TheilSen => "theil-sen",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ols" => Some(AlphaEstimator::LeastSquares),
            "theil-sen" => Some(AlphaEstimator::TheilSen),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionCurve {
    pub taus: Vec<usize>,
    /// Arithmetic mean of `delta_s` over targets.
    pub mean_delta_s: Vec<f64>,
    /// Mean of `ln delta_s` over targets.
    pub mean_log_delta_s: Vec<f64>,
    pub alpha: Vec<f64>,
    pub alpha_stderr: Vec<f64>,
    /// Grid delays dropped because some volume was zero or non-finite.
    pub rejected_taus: Vec<usize>,
}

fn theil_sen_pairs(x: &[f64], y: &[f64]) -> (f64, f64) {
    let half = x.len() / 2;
    let slopes: Vec<f64> = (0..half)
        .filter_map(|i| {
            let dx = x[i + half] - x[i];
            (dx != 0.0).then(|| (y[i + half] - y[i]) / dx)
        })
        .collect();
    let slope = median(&slopes);
    // Spread of pair slopes: scaled MAD over sqrt(pairs).
    let dev: Vec<f64> = slopes.iter().map(|s| (s - slope).abs()).collect();
    let stderr = 1.4826 * median(&dev) / (slopes.len() as f64).sqrt();
    (slope, stderr)
}

/// Per delay: mean successor volume, and the slope of `ln delta_s` against
/// `ln delta_a` across targets.
pub fn dispersion_curve(table: &VolumeTable, estimator: AlphaEstimator) -> Result<DispersionCurve> {
    let kept: Vec<usize> = (0..table.records.len())
        .filter(|&i| table.records[i].delta_a > 0.0 && table.records[i].delta_a.is_finite())
        .collect();
    if kept.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "{} records with positive analogue volume",
            kept.len()
        )));
    }
    if kept.len() < 1000 {
        log::warn!("only {} records; alpha fits need about 10^3", kept.len());
    }
    let log_a: Vec<f64> = kept.iter().map(|&i| table.records[i].delta_a.ln()).collect();
    let mut curve = DispersionCurve {
        taus: Vec::new(),
        mean_delta_s: Vec::new(),
        mean_log_delta_s: Vec::new(),
        alpha: Vec::new(),
        alpha_stderr: Vec::new(),
        rejected_taus: Vec::new(),
    };
    for (ti, &tau) in table.taus.iter().enumerate() {
        let ds: Vec<f64> = kept.iter().map(|&i| table.records[i].delta_s[ti]).collect();
        if ds.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            curve.rejected_taus.push(tau);
            continue;
        }
        let log_s: Vec<f64> = ds.iter().map(|v| v.ln()).collect();
        let (alpha, stderr) = match estimator {
            AlphaEstimator::LeastSquares => {
                let f = fit_line(&log_a, &log_s).ok_or_else(|| {
                    Error::DegenerateFit("all analogue volumes equal".into())
                })?;
                (f.slope, f.slope_stderr)
            }
            AlphaEstimator::TheilSen => theil_sen_pairs(&log_a, &log_s),
        };
        curve.taus.push(tau);
        curve.mean_delta_s.push(mean(&ds));
        curve.mean_log_delta_s.push(mean(&log_s));
        curve.alpha.push(alpha);
        curve.alpha_stderr.push(stderr);
    }
    if !curve.rejected_taus.is_empty() {
        log::warn!("rejected taus with non-positive volumes: {:?}", curve.rejected_taus);
    }
    Ok(curve)
}

/// Log-log line fit over a scale window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    /// Window `[lo, hi]` in time units.
    pub fit_range: (f64, f64),
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainFits {
    /// `tau < tau_K`.
    pub dissipative: ScalingFit,
    /// `3 tau_K <= tau <= T/3`.
    pub inertial: ScalingFit,
    /// Mean of `<delta_s>` over `tau > 2T`.
    pub plateau_level: f64,
    pub plateau_points: usize,
}

/// Inertial fit window `[3 tau_K, T/3]`.
pub fn inertial_window(tau_k: f64, big_t: f64) -> (f64, f64) {
    (3.0 * tau_k, big_t / 3.0)
}

fn fit_window(
    curve: &DispersionCurve,
    dt: f64,
    big_t: f64,
    range: (f64, f64),
    include: impl Fn(f64) -> bool,
    name: &str,
) -> Result<ScalingFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = curve
        .taus
        .iter()
        .zip(&curve.mean_delta_s)
        .filter(|(&tau, _)| include(tau as f64 * dt))
        .map(|(&tau, &m)| ((tau as f64 * dt / big_t).ln(), m.ln()))
        .unzip();
    if xs.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "{} grid points in the {name} domain, need 3",
            xs.len()
        )));
    }
    let f = fit_line(&xs, &ys)
        .ok_or_else(|| Error::DegenerateFit(format!("{name} domain has repeated taus")))?;
    Ok(ScalingFit {
        slope: f.slope,
        intercept: f.intercept,
        stderr: f.slope_stderr,
        fit_range: range,
        n_points: f.n_points,
    })
}

/// Fits `ln <delta_s>` against `ln(tau / T)` in the dissipative and inertial
/// domains and averages the integral-domain plateau.
pub fn fit_domain_slopes(
    curve: &DispersionCurve,
    tau_k: f64,
    big_t: f64,
    dt: f64,
) -> Result<DomainFits> {
    let dissipative = fit_window(curve, dt, big_t, (0.0, tau_k), |t| t < tau_k, "dissipative")?;
    let (lo, hi) = inertial_window(tau_k, big_t);
    let inertial = fit_window(curve, dt, big_t, (lo, hi), |t| t >= lo && t <= hi, "inertial")?;
    let plateau: Vec<f64> = curve
        .taus
        .iter()
        .zip(&curve.mean_delta_s)
        .filter(|(&tau, _)| tau as f64 * dt > 2.0 * big_t)
        .map(|(_, &m)| m)
        .collect();
    if plateau.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "{} grid points beyond 2T, need 3",
            plateau.len()
        )));
    }
    Ok(DomainFits {
        dissipative,
        inertial,
        plateau_level: mean(&plateau),
        plateau_points: plateau.len(),
    })
}

/// Pooled model for `alpha(tau)` across intermittency coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GammaModel {
    /// `alpha = a_c - gamma sqrt(c2) ln(tau/T)`, one offset per curve.
    #[default]
    PerCurveOffset,
    /// `alpha = -gamma sqrt(c2) ln(tau/T)`.
    ThroughOrigin,
}

impl GammaModel {
    pub fn name(self) -> &'static str {
        match self {
            GammaModel::PerCurveOffset => "per-curve-offset",
            GammaModel::ThroughOrigin => "through-origin",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaFit {
    pub gamma: f64,
    pub stderr: f64,
    pub n_points: usize,
    pub n_curves: usize,
    pub model: GammaModel,
    /// Fitted offsets per curve (zero for `ThroughOrigin`), in input order of
    /// the curves that entered the fit.
    pub offsets: Vec<f64>,
}

/// Joint least-squares estimate of `gamma` over inertial delays, pooling
/// the `(c2, curve)` pairs. Curves with `c2 == 0` carry no information on
/// `gamma` and are left out.
pub fn fit_alpha_intermittency(
    curves: &[(f64, &DispersionCurve)],
    tau_k: f64,
    big_t: f64,
    dt: f64,
    model: GammaModel,
) -> Result<GammaFit> {
    let (lo, hi) = inertial_window(tau_k, big_t);
    let mut groups: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let mut distinct: Vec<f64> = Vec::new();
    for &(c2, curve) in curves {
        if !(c2 > 0.0) {
            continue;
        }
        let (z, a): (Vec<f64>, Vec<f64>) = curve
            .taus
            .iter()
            .zip(&curve.alpha)
            .filter(|(&tau, _)| {
                let t = tau as f64 * dt;
                t >= lo && t <= hi
            })
            .map(|(&tau, &alpha)| (-c2.sqrt() * (tau as f64 * dt / big_t).ln(), alpha))
            .unzip();
        if z.is_empty() {
            continue;
        }
        if !distinct.contains(&c2) {
            distinct.push(c2);
        }
        groups.push((z, a));
    }
    if distinct.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "need at least 2 distinct c2 > 0 with inertial points, got {}",
            distinct.len()
        )));
    }
    let n: usize = groups.iter().map(|g| g.0.len()).sum();
    let centered = model == GammaModel::PerCurveOffset;
    let centers: Vec<(f64, f64)> = groups
        .iter()
        .map(|(z, a)| if centered { (mean(z), mean(a)) } else { (0.0, 0.0) })
        .collect();
    let (mut szz, mut sza) = (0.0, 0.0);
    for ((z, a), &(mz, ma)) in groups.iter().zip(&centers) {
        for (zi, ai) in z.iter().zip(a) {
            szz += (zi - mz) * (zi - mz);
            sza += (zi - mz) * (ai - ma);
        }
    }
    if !(szz > 0.0) {
        return Err(Error::DegenerateFit("single tau per curve".into()));
    }
    let gamma = sza / szz;
    let offsets: Vec<f64> = centers.iter().map(|&(mz, ma)| ma - gamma * mz).collect();
    let mut ssr = 0.0;
    for ((z, a), off) in groups.iter().zip(&offsets) {
        for (zi, ai) in z.iter().zip(a) {
            let r = ai - (off + gamma * zi);
            ssr += r * r;
        }
    }
    let params = if centered { groups.len() + 1 } else { 1 };
    let stderr = if n > params {
        (ssr / (n - params) as f64 / szz).sqrt()
    } else {
        f64::NAN
    };
    Ok(GammaFit {
        gamma,
        stderr,
        n_points: n,
        n_curves: groups.len(),
        model,
        offsets,
    })
}
