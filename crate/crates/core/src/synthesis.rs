//! Regularized fractional Brownian motion (c2 = 0) and regularized
//! multifractal random walk (c2 > 0) synthesis.
//!
//! A realization is the circular convolution of a tabulated kernel
//! `psi_T(t) * P_{H,tau_K}(t)` with the weighted white noise
//! `M(t) * W(t) * sqrt(dt)`, standardized afterwards to zero mean and unit
//! variance. `M` is a log-normal multiplicative chaos built from a
//! log-correlated Gaussian field, itself drawn by circulant embedding.
//!
//! Times `tau_k`, `big_t` and `dt` share one unit; sample `j` sits at
//! `t = j * dt`.
//!
//! Randomness: ChaCha8 seeded with `seed`; the white noise `W` is drawn
//! from stream 0 and the log-correlated field from stream 1, so the two are
//! disjoint sub-streams of one seed. Normal deviates use the ziggurat
//! `StandardNormal` of `rand_distr`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::regression::{mean, population_variance};

const WHITE_NOISE_STREAM: u64 = 0;
const LOG_FIELD_STREAM: u64 = 1;

/// Largest tolerated fraction of circulant eigenvalue mass clipped to zero.
pub const MAX_CLIPPED_FRACTION: f64 = 0.01;

/// Shape of the power-law factor of the synthesis kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelShape {
    /// `t / ||t||^{3/2 - H}`: odd, gives a `|f|^{-(2H+1)}` spectrum for
    /// every `H` in (0, 1).
    #[default]
    Antisymmetric,
    /// `1 / ||t||^{1/2 - H}`: even. Degenerates to a constant at `H = 1/2`.
    Symmetric,
}

impl KernelShape {
    pub fn name(self) -> &'static str {
        match self {
            KernelShape::Antisymmetric => "antisymmetric",
            KernelShape::Symmetric => "symmetric",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "antisymmetric" => Some(KernelShape::Antisymmetric),
            "symmetric" => Some(KernelShape::Symmetric),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessParams {
    /// Hurst exponent, in (0, 1).
    pub hurst: f64,
    /// Intermittency coefficient; 0 gives r-fBm.
    pub c2: f64,
    /// Regularization (dissipative) scale.
    pub tau_k: f64,
    /// Large-scale cutoff (integral scale).
    pub big_t: f64,
    /// Number of samples.
    pub n: usize,
    pub dt: f64,
    pub seed: u64,
    pub kernel: KernelShape,
}

impl ProcessParams {
    /// Parameters with `dt = 1` and the default kernel.
    pub fn new(hurst: f64, c2: f64, tau_k: f64, big_t: f64, n: usize, seed: u64) -> Self {
        ProcessParams {
            hurst,
            c2,
            tau_k,
            big_t,
            n,
            dt: 1.0,
            seed,
            kernel: KernelShape::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return bad(format!("hurst = {} must satisfy 0 < H < 1", self.hurst));
        }
        if !(self.c2 >= 0.0) || !self.c2.is_finite() {
            return bad(format!("c2 = {} must be >= 0", self.c2));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("dt = {} must be > 0", self.dt));
        }
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        let span = self.n as f64 * self.dt;
        if !(self.tau_k > 0.0 && self.tau_k < self.big_t && self.big_t < span) {
            return bad(format!(
                "need 0 < tau_k < big_t < n*dt, got tau_k = {}, big_t = {}, n*dt = {}",
                self.tau_k, self.big_t, span
            ));
        }
        Ok(())
    }

    /// Whether the series is long enough for wraparound of the Gaussian
    /// cutoff to be negligible (`n * dt >= 8 T`).
    pub fn wraparound_negligible(&self) -> bool {
        self.n as f64 * self.dt >= 8.0 * self.big_t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub values: Vec<f64>,
    pub dt: f64,
    /// Generation metadata; `None` for externally loaded data.
    pub params: Option<ProcessParams>,
}

impl TimeSeries {
    /// Wraps external samples. Fails on non-finite values or `dt <= 0`.
    pub fn new(values: Vec<f64>, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParams(format!("dt = {dt} must be > 0")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite sample at index {i}")));
        }
        Ok(TimeSeries {
            values,
            dt,
            params: None,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_shared(self) -> Arc<TimeSeries> {
        Arc::new(self)
    }
}

fn normal_stream(n: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// `n` i.i.d. standard normal samples, a pure function of `seed`.
pub fn gaussian_white_noise(n: usize, seed: u64) -> Result<TimeSeries> {
    if n == 0 {
        return Err(Error::InvalidParams("n must be positive".into()));
    }
    Ok(TimeSeries {
        values: normal_stream(n, seed, WHITE_NOISE_STREAM),
        dt: 1.0,
        params: None,
    })
}

/// Signed time offset of FFT-order index `j` on a grid of `n` points.
/// The Nyquist index of an even grid maps to `+n/2`.
fn wrapped_offset(j: usize, n: usize) -> f64 {
    if j <= n / 2 {
        j as f64
    } else {
        j as f64 - n as f64
    }
}

/// `||t||_{tau_K} = sqrt(t^2 + tau_K^2)`.
fn regularized_norm(t: f64, tau_k: f64) -> f64 {
    t.hypot(tau_k)
}

/// Gaussian large-scale cutoff `psi_T(t) = exp(-t^2 / (2 T^2))`.
pub fn gaussian_cutoff(t: f64, big_t: f64) -> f64 {
    (-(t * t) / (2.0 * big_t * big_t)).exp()
}

/// Power-law factor `P_{H,tau_K}(t)` for the given kernel shape.
pub fn power_law_factor(t: f64, hurst: f64, tau_k: f64, shape: KernelShape) -> f64 {
    let norm = regularized_norm(t, tau_k);
    match shape {
        KernelShape::Symmetric => norm.powf(hurst - 0.5),
        KernelShape::Antisymmetric => t * norm.powf(hurst - 1.5),
    }
}

/// Kernel tabulated at `t = j * dt` in FFT wraparound order, truncated at
/// `|t| <= n * dt / 2`.
pub fn synthesis_kernel(params: &ProcessParams) -> Vec<f64> {
    let n = params.n;
    let mut kernel: Vec<f64> = (0..n)
        .map(|j| {
            let t = wrapped_offset(j, n) * params.dt;
            gaussian_cutoff(t, params.big_t)
                * power_law_factor(t, params.hurst, params.tau_k, params.kernel)
        })
        .collect();
    // The Nyquist sample has no mirror partner; zero it so the odd kernel
    // stays exactly odd on the circle.
    if params.kernel == KernelShape::Antisymmetric && n % 2 == 0 && n > 0 {
        kernel[n / 2] = 0.0;
    }
    kernel
}

/// Covariance of the log-correlated field, `max(0, ln(T / ||t||_{tau_K}))`.
pub fn log_covariance(t: f64, tau_k: f64, big_t: f64) -> f64 {
    (big_t / regularized_norm(t, tau_k)).ln().max(0.0)
}

/// A log-correlated Gaussian series and its circulant-embedding diagnostics.
#[derive(Debug, Clone)]
pub struct LogCorrelatedField {
    pub series: TimeSeries,
    /// Exact marginal variance of the embedded field, `C(0)`.
    pub variance: f64,
    /// Fraction of eigenvalue mass (in absolute value) clipped to zero.
    pub clipped_fraction: f64,
}

fn fft_in_place(planner: &mut FftPlanner<f64>, buf: &mut [Complex64], inverse: bool) {
    let fft = if inverse {
        planner.plan_fft_inverse(buf.len())
    } else {
        planner.plan_fft_forward(buf.len())
    };
    fft.process(buf);
}

/// Stationary Gaussian field with autocovariance `log_covariance`, drawn by
/// circulant embedding on the `n`-point circle.
pub fn log_correlated_field(params: &ProcessParams) -> Result<LogCorrelatedField> {
    params.validate()?;
    let n = params.n;
    let mut planner = FftPlanner::<f64>::new();

    let mut eig: Vec<Complex64> = (0..n)
        .map(|j| {
            let t = wrapped_offset(j, n) * params.dt;
            Complex64::new(log_covariance(t, params.tau_k, params.big_t), 0.0)
        })
        .collect();
    fft_in_place(&mut planner, &mut eig, false);

    let total: f64 = eig.iter().map(|c| c.re.abs()).sum();
    let clipped: f64 = eig.iter().filter(|c| c.re < 0.0).map(|c| -c.re).sum();
    let clipped_fraction = if total > 0.0 { clipped / total } else { 0.0 };
    if clipped_fraction > MAX_CLIPPED_FRACTION {
        return Err(Error::CirculantEmbedding { clipped_fraction });
    }

    let z = normal_stream(n, params.seed, LOG_FIELD_STREAM);
    let mut buf: Vec<Complex64> = z.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_in_place(&mut planner, &mut buf, false);
    for (b, l) in buf.iter_mut().zip(&eig) {
        *b *= l.re.max(0.0).sqrt();
    }
    fft_in_place(&mut planner, &mut buf, true);
    let scale = 1.0 / n as f64;
    let values = buf.iter().map(|c| c.re * scale).collect();

    Ok(LogCorrelatedField {
        series: TimeSeries {
            values,
            dt: params.dt,
            params: Some(*params),
        },
        variance: log_covariance(0.0, params.tau_k, params.big_t),
        clipped_fraction,
    })
}

/// `M(t) = exp(-sqrt(c2) X(t) - (c2 / 2) Var[X])`, which has unit mean.
pub fn multiplicative_chaos(field: &LogCorrelatedField, c2: f64) -> Vec<f64> {
    let a = c2.sqrt();
    let shift = 0.5 * c2 * field.variance;
    field
        .series
        .values
        .iter()
        .map(|x| (-a * x - shift).exp())
        .collect()
}

/// Shifts and scales `values` to zero mean and unit population variance.
pub fn standardize(values: &mut [f64]) {
    let m = mean(values);
    for v in values.iter_mut() {
        *v -= m;
    }
    let sd = population_variance(values).sqrt();
    if sd > 0.0 {
        for v in values.iter_mut() {
            *v /= sd;
        }
    }
}

/// One standardized realization of the process.
pub fn synthesize(params: &ProcessParams) -> Result<TimeSeries> {
    params.validate()?;
    if !params.wraparound_negligible() {
        log::warn!(
            "n*dt = {} < 8 T = {}: circular wraparound of the kernel is not negligible",
            params.n as f64 * params.dt,
            8.0 * params.big_t
        );
    }
    let n = params.n;
    let mut weights = normal_stream(n, params.seed, WHITE_NOISE_STREAM);
    if params.c2 > 0.0 {
        let field = log_correlated_field(params)?;
        for (w, m) in weights.iter_mut().zip(multiplicative_chaos(&field, params.c2)) {
            *w *= m;
        }
    }
    let sqrt_dt = params.dt.sqrt();

    let mut planner = FftPlanner::<f64>::new();
    let mut noise: Vec<Complex64> = weights
        .iter()
        .map(|&w| Complex64::new(w * sqrt_dt, 0.0))
        .collect();
    let mut kernel: Vec<Complex64> = synthesis_kernel(params)
        .into_iter()
        .map(|k| Complex64::new(k, 0.0))
        .collect();
    fft_in_place(&mut planner, &mut noise, false);
    fft_in_place(&mut planner, &mut kernel, false);
    for (a, b) in noise.iter_mut().zip(&kernel) {
        *a *= *b;
    }
    fft_in_place(&mut planner, &mut noise, true);

    let mut values: Vec<f64> = noise.iter().map(|c| c.re).collect();
    standardize(&mut values);
    Ok(TimeSeries {
        values,
        dt: params.dt,
        params: Some(*params),
    })
}
