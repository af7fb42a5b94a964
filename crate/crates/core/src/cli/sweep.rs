//! Grid of runs over `(hurst, c2)` with a summary table and pooled gamma fits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::RunConfig;
use super::pipeline::{run_pipeline, single_curve_gamma, RunResults};
use crate::error::Result;
use crate::statistics::{fit_alpha_intermittency, DispersionCurve, GammaModel};

pub const SUMMARY_HEADER: &str = "hurst,c2,mean_log_delta_a,std_log_delta_a,dissipative_slope,inertial_slope,plateau,alpha_inertial_mean,alpha_inertial_log_slope,single_curve_gamma,status";

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub hurst: f64,
    pub c2: f64,
    pub dir: PathBuf,
    pub outcome: std::result::Result<PointSummary, String>,
}

#[derive(Debug, Clone)]
pub struct PointSummary {
    pub mean_log_delta_a: f64,
    pub std_log_delta_a: f64,
    pub dissipative_slope: f64,
    pub inertial_slope: f64,
    pub plateau: f64,
    pub alpha_inertial_mean: f64,
    pub alpha_inertial_log_slope: f64,
    pub single_curve_gamma: f64,
    pub dispersion: DispersionCurve,
}

impl PointSummary {
    fn from_results(r: &RunResults) -> Self {
        PointSummary {
            mean_log_delta_a: r.pdf.mean,
            std_log_delta_a: r.pdf.std,
            dissipative_slope: r.domains.dissipative.slope,
            inertial_slope: r.domains.inertial.slope,
            plateau: r.domains.plateau_level,
            alpha_inertial_mean: r.alpha_inertial_mean,
            alpha_inertial_log_slope: r.alpha_inertial.map_or(f64::NAN, |f| f.slope),
            single_curve_gamma: single_curve_gamma(r),
            dispersion: r.dispersion.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub points: Vec<SweepPoint>,
    pub summary_path: PathBuf,
    pub fits_path: PathBuf,
}

impl SweepOutcome {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.outcome.is_err()).count()
    }
}

fn point_dir(base: &Path, hurst: f64, c2: f64) -> PathBuf {
    base.join(format!("h{hurst}_c2{c2}"))
}

/// Runs every grid point; a failing point is recorded and the sweep goes on.
pub fn run_sweep(config: &RunConfig) -> Result<SweepOutcome> {
    let base = config.output_dir.clone();
    fs::create_dir_all(&base)?;
    let mut points = Vec::new();
    for (hurst, c2) in config.sweep_points() {
        let mut cfg = config.clone();
        cfg.hurst = hurst;
        cfg.c2 = c2;
        cfg.sweep_hurst.clear();
        cfg.sweep_c2.clear();
        cfg.output_dir = point_dir(&base, hurst, c2);
        log::info!("sweep point H = {hurst}, c2 = {c2}");
        let outcome = cfg
            .validate_with_lines(&Default::default())
            .and_then(|_| run_pipeline(&cfg))
            .map(|r| PointSummary::from_results(&r))
            .map_err(|e| {
                log::error!("sweep point H = {hurst}, c2 = {c2} failed: {e}");
                e.to_string()
            });
        points.push(SweepPoint {
            hurst,
            c2,
            dir: cfg.output_dir,
            outcome,
        });
    }

    let summary_path = base.join("summary.csv");
    fs::write(&summary_path, summary_csv(&points))?;
    let fits_path = base.join("sweep_fits.txt");
    fs::write(&fits_path, pooled_gamma_text(config, &points))?;
    Ok(SweepOutcome {
        points,
        summary_path,
        fits_path,
    })
}

pub fn summary_csv(points: &[SweepPoint]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{SUMMARY_HEADER}");
    for p in points {
        match &p.outcome {
            Ok(v) => {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{},ok",
                    p.hurst,
                    p.c2,
                    v.mean_log_delta_a,
                    v.std_log_delta_a,
                    v.dissipative_slope,
                    v.inertial_slope,
                    v.plateau,
                    v.alpha_inertial_mean,
                    v.alpha_inertial_log_slope,
                    v.single_curve_gamma
                );
            }
            Err(msg) => {
                let nan = f64::NAN;
                let clean: String = msg.chars().map(|c| if c == ',' || c == '\n' { ';' } else { c }).collect();
                let _ = writeln!(
                    s,
                    "{},{},{nan},{nan},{nan},{nan},{nan},{nan},{nan},{nan},failed: {clean}",
                    p.hurst, p.c2
                );
            }
        }
    }
    s
}

/// Pooled gamma per Hurst exponent over the successful `c2 > 0` points,
/// under both offset models.
pub fn pooled_gamma_text(config: &RunConfig, points: &[SweepPoint]) -> String {
    let mut hursts: Vec<f64> = Vec::new();
    for p in points {
        if !hursts.contains(&p.hurst) {
            hursts.push(p.hurst);
        }
    }
    let mut s = String::new();
    for h in hursts {
        let curves: Vec<(f64, &DispersionCurve)> = points
            .iter()
            .filter(|p| p.hurst == h)
            .filter_map(|p| p.outcome.as_ref().ok().map(|v| (p.c2, &v.dispersion)))
            .collect();
        for model in [GammaModel::PerCurveOffset, GammaModel::ThroughOrigin] {
            let key = format!("gamma.h{h}.{}", model.name());
            match fit_alpha_intermittency(&curves, config.tau_k, config.big_t, config.dt, model) {
                Ok(g) => {
                    let _ = writeln!(s, "{key} = {}", g.gamma);
                    let _ = writeln!(s, "{key}.stderr = {}", g.stderr);
                    let _ = writeln!(s, "{key}.n_curves = {}", g.n_curves);
                    let _ = writeln!(s, "{key}.n_points = {}", g.n_points);
                }
                Err(e) => {
                    let _ = writeln!(s, "{key} = NaN");
                    let _ = writeln!(s, "{key}.error = {e}");
                }
            }
        }
    }
    s
}
