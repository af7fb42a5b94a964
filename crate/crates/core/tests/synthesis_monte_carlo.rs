//! Monte-Carlo checks of the synthesis stack against closed-form targets.

use fracanalog::synthesis::{log_correlated_field, log_covariance, synthesize, ProcessParams};
use fracanalog::validation::increment_skewness;
use rustfft::{num_complex::Complex, FftPlanner};

fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let mx = x.iter().sum::<f64>() / x.len() as f64;
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// 10^3 field realizations at T = 2350, tau_K = 5: variance at a fixed time,
/// covariance beyond T, and the logarithmic decay in between.
#[test]
fn log_correlated_field_covariance() {
    let (tau_k, big_t) = (5.0, 2350.0);
    let n = 1 << 15;
    let reps = 1000;
    let lags: Vec<usize> = vec![10, 20, 40, 80, 160, 235, 2350, 3000];
    let mut fixed_sq = 0.0;
    let mut cov = vec![0.0; lags.len()];
    for seed in 0..reps {
        let p = ProcessParams::new(0.5, 0.1, tau_k, big_t, n, seed);
        let x = log_correlated_field(&p).unwrap().series.values;
        fixed_sq += x[n / 2] * x[n / 2];
        for (c, &lag) in cov.iter_mut().zip(&lags) {
            *c += (0..n).map(|t| x[t] * x[(t + lag) % n]).sum::<f64>() / n as f64;
        }
    }
    let var = fixed_sq / reps as f64;
    cov.iter_mut().for_each(|c| *c /= reps as f64);
    let target = (big_t / tau_k).ln();
    println!("fixed-time variance {var}, target {target}; covariance {cov:?}");
    assert!((var / target - 1.0).abs() < 0.05, "variance {var} vs {target}");
    assert!(cov[6].abs() < 0.05 && cov[7].abs() < 0.05);

    // Between tau_K and T the covariance follows -ln ||t|| with unit slope.
    let x: Vec<f64> = lags[..6]
        .iter()
        .map(|&l| -(l as f64 * l as f64 + tau_k * tau_k).sqrt().ln())
        .collect();
    let slope = fit_slope(&x, &cov[..6]);
    println!("covariance slope against -ln||t|| = {slope}");
    assert!((slope - 1.0).abs() < 0.05, "slope {slope}");
    for (l, c) in lags[..6].iter().zip(&cov) {
        assert!((c - log_covariance(*l as f64, tau_k, big_t)).abs() < 0.15);
    }
}

/// Averaged periodogram of r-fBm at H = 0.5, fitted on log-spaced frequency
/// bins over the inertial band.
fn spectrum_slope(big_t: f64) -> f64 {
    let tau_k = 5.0;
    let n = 1 << 16;
    let reps = 16;
    let mut power = vec![0.0; n / 2];
    let fft = FftPlanner::new().plan_fft_forward(n);
    for seed in 0..reps {
        let s = synthesize(&ProcessParams::new(0.5, 0.0, tau_k, big_t, n, 100 + seed)).unwrap();
        let mut buf: Vec<Complex<f64>> = s.values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        fft.process(&mut buf);
        for (p, c) in power.iter_mut().zip(&buf[..n / 2]) {
            *p += c.norm_sqr();
        }
    }
    // Inertial band as angular frequencies 3/T <= omega <= 1/(3 tau_K).
    let two_pi = 2.0 * std::f64::consts::PI;
    let (lo, hi) = ((3.0 / big_t / two_pi).ln(), (1.0 / (3.0 * tau_k) / two_pi).ln());
    let bins = 20;
    let mut acc = vec![(0.0, 0.0, 0usize); bins];
    for (j, &p) in power.iter().enumerate().skip(1) {
        let lf = (j as f64 / n as f64).ln();
        if lf >= lo && lf <= hi {
            let b = (((lf - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1);
            acc[b].0 += lf;
            acc[b].1 += p;
            acc[b].2 += 1;
        }
    }
    let (x, y): (Vec<f64>, Vec<f64>) = acc
        .iter()
        .filter(|a| a.2 > 0)
        .map(|&(sf, sp, c)| (sf / c as f64, (sp / c as f64).ln()))
        .unzip();
    fit_slope(&x, &y)
}

#[test]
fn fbm_spectrum_slope() {
    let slope = spectrum_slope(2350.0);
    println!("spectral slope {slope}");
    assert!((slope + 2.0).abs() < 0.15, "slope {slope}");
}

#[test]
fn gaussian_increments_are_symmetric() {
    for (i, h) in [0.3, 0.5, 0.7].into_iter().enumerate() {
        let s = synthesize(&ProcessParams::new(h, 0.0, 5.0, 512.0, 1 << 20, 7 + i as u64)).unwrap();
        for lag in [1, 5, 15, 50, 170, 512] {
            let skew = increment_skewness(&s, lag).unwrap();
            assert!(skew.abs() < 0.05, "H={h} lag={lag} skew={skew}");
        }
    }
}

#[test]
fn params_echoed() {
    let p = ProcessParams::new(0.3, 0.05, 5.0, 64.0, 1024, 3);
    assert_eq!(synthesize(&p).unwrap().params, Some(p));
}
