//! Single run: synthesize a database and a measure, search analogues, reduce
//! volumes to statistics, and export the results.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use sha2::{Digest, Sha256};

use super::config::RunConfig;
use crate::analogues::build_index;
use crate::embedding::takens_embed;
use crate::error::{Error, Result};
use crate::metrics::{compute_volume_records, VolumeTable};
use crate::regression::{fit_line, mean, LineFit};
use crate::statistics::{
    dispersion_curve, fit_domain_slopes, inertial_window, log_volume_pdf, rescaled_pdf, DispersionCurve,
    DomainFits, LogVolumePdf,
};
use crate::synthesis::{synthesize, TimeSeries};
use crate::validation::{
    default_lags, flatness, increment_skewness, scaling_exponents, structure_functions, zeta_at, ScalingExponent,
    StructureFunctionTable,
};

/// Everything a run computes, before export.
#[derive(Debug, Clone)]
pub struct RunResults {
    pub config: RunConfig,
    pub database: Arc<TimeSeries>,
    pub measure: Arc<TimeSeries>,
    pub structure_functions: StructureFunctionTable,
    pub zeta: Vec<ScalingExponent>,
    pub zeta_window: (f64, f64),
    /// Increment flatness and skewness of the database at the smallest
    /// inertial lag, `ceil(3 tau_K / dt)`.
    pub increment_lag: usize,
    pub flatness: f64,
    pub skewness: f64,
    pub admissible_states: usize,
    pub volumes: VolumeTable,
    pub pdf: LogVolumePdf,
    pub pdf_rescaled: LogVolumePdf,
    pub dispersion: DispersionCurve,
    pub domains: DomainFits,
    /// `alpha` against `ln(tau/T)` over the inertial window.
    pub alpha_inertial: Option<LineFit>,
    pub alpha_inertial_mean: f64,
    pub stage_seconds: Vec<(&'static str, f64)>,
}

fn timed<T>(
    times: &mut Vec<(&'static str, f64)>,
    stage: &'static str,
    f: impl FnOnce() -> Result<T>,
) -> Result<T> {
    let start = Instant::now();
    let out = f().map_err(Error::in_stage(stage))?;
    let secs = start.elapsed().as_secs_f64();
    log::info!("{stage}: {secs:.2} s");
    times.push((stage, secs));
    Ok(out)
}

/// Runs every stage in memory, on the current rayon pool.
pub fn execute(config: &RunConfig) -> Result<RunResults> {
    let mut times = Vec::new();
    let t = &mut times;
    let database = timed(t, "synthesis-database", || synthesize(&config.database_params()))?.into_shared();
    let measure = timed(t, "synthesis-measure", || synthesize(&config.measure_params()))?.into_shared();

    let zeta_window = inertial_window(config.tau_k, config.big_t);
    let increment_lag = (zeta_window.0 / config.dt).ceil().max(1.0) as usize;
    let (sf, zeta, flat, skew) = timed(t, "validation", || {
        let lags = default_lags(config.sf_max_lag());
        let sf = structure_functions(&database, &lags, &config.sf_orders)?;
        let zeta = scaling_exponents(&sf, zeta_window.0, zeta_window.1)?;
        let flat = flatness(&database, increment_lag)?;
        let skew = increment_skewness(&database, increment_lag)?;
        Ok((sf, zeta, flat, skew))
    })?;

    let (db_embedded, measure_embedded) = timed(t, "embedding", || {
        Ok((
            takens_embed(database.clone(), config.embed)?,
            takens_embed(measure.clone(), config.embed)?,
        ))
    })?;
    let index = timed(t, "index", || build_index(&db_embedded, config.tau_max))?;
    let admissible_states = index.admissible_count();
    let taus = config.tau_grid();
    let volumes = timed(t, "analogues", || {
        compute_volume_records(&index, &measure_embedded, config.k, &taus)
    })?;
    drop(index);

    let (pdf, pdf_rescaled, dispersion, domains) = timed(t, "statistics", || {
        let pdf = log_volume_pdf(&volumes, config.n_bins)?;
        let pdf_rescaled = rescaled_pdf(&pdf)?;
        let dispersion = dispersion_curve(&volumes, config.alpha_estimator)?;
        let domains = fit_domain_slopes(&dispersion, config.tau_k, config.big_t, config.dt)?;
        Ok((pdf, pdf_rescaled, dispersion, domains))
    })?;

    let (xs, alphas): (Vec<f64>, Vec<f64>) = dispersion
        .taus
        .iter()
        .zip(&dispersion.alpha)
        .filter(|(&tau, _)| {
            let t = tau as f64 * config.dt;
            t >= zeta_window.0 && t <= zeta_window.1
        })
        .map(|(&tau, &a)| ((tau as f64 * config.dt / config.big_t).ln(), a))
        .unzip();
    let alpha_inertial = if xs.len() >= 3 { fit_line(&xs, &alphas) } else { None };
    let alpha_inertial_mean = if alphas.is_empty() { f64::NAN } else { mean(&alphas) };

    Ok(RunResults {
        config: config.clone(),
        database,
        measure,
        structure_functions: sf,
        zeta,
        zeta_window,
        increment_lag,
        flatness: flat,
        skewness: skew,
        admissible_states,
        volumes,
        pdf,
        pdf_rescaled,
        dispersion,
        domains,
        alpha_inertial,
        alpha_inertial_mean,
        stage_seconds: times,
    })
}

/// `gamma` estimated from one curve: `-slope / sqrt(c2)`; NaN when `c2 = 0`.
pub fn single_curve_gamma(results: &RunResults) -> f64 {
    match results.alpha_inertial {
        Some(f) if results.config.c2 > 0.0 => -f.slope / results.config.c2.sqrt(),
        _ => f64::NAN,
    }
}

/// Deterministic `key = value` summary of the fitted quantities.
pub fn fits_text(r: &RunResults) -> String {
    let c = &r.config;
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("hurst", c.hurst.to_string());
    kv("c2", c.c2.to_string());
    kv("tau_k", c.tau_k.to_string());
    kv("big_t", c.big_t.to_string());
    kv("k", c.k.to_string());
    kv("n_targets", r.volumes.records.len().to_string());
    kv("admissible_states", r.admissible_states.to_string());

    kv("increments.lag", r.increment_lag.to_string());
    kv("increments.flatness", r.flatness.to_string());
    kv("increments.skewness", r.skewness.to_string());
    kv("zeta.window_lo", r.zeta_window.0.to_string());
    kv("zeta.window_hi", r.zeta_window.1.to_string());
    for e in &r.zeta {
        kv(&format!("zeta.q{}", e.q), e.zeta.to_string());
        kv(&format!("zeta.q{}.stderr", e.q), e.stderr.to_string());
    }
    if let (Some(z2), Some(z4)) = (zeta_at(&r.zeta, 2.0), zeta_at(&r.zeta, 4.0)) {
        kv("zeta.q2.minus_2h", (z2 - 2.0 * c.hurst).to_string());
        kv("zeta.q4_minus_2q2", (z4 - 2.0 * z2).to_string());
    }

    kv("log_delta_a.mean", r.pdf.mean.to_string());
    kv("log_delta_a.std", r.pdf.std.to_string());
    kv("log_delta_a.n_samples", r.pdf.n_samples.to_string());
    kv("log_delta_a.dropped_zero", r.pdf.dropped_zero.to_string());

    let d = &r.domains;
    for (name, f) in [("dissipative", &d.dissipative), ("inertial", &d.inertial)] {
        kv(&format!("{name}.slope"), f.slope.to_string());
        kv(&format!("{name}.stderr"), f.stderr.to_string());
        kv(&format!("{name}.intercept"), f.intercept.to_string());
        kv(&format!("{name}.window_lo"), f.fit_range.0.to_string());
        kv(&format!("{name}.window_hi"), f.fit_range.1.to_string());
        kv(&format!("{name}.n_points"), f.n_points.to_string());
    }
    // The inertial slope is compared with both H and 2H.
    let dh = d.inertial.slope - c.hurst;
    let d2h = d.inertial.slope - 2.0 * c.hurst;
    kv("inertial.slope_minus_h", dh.to_string());
    kv("inertial.slope_minus_2h", d2h.to_string());
    kv(
        "inertial.closer_to",
        (if dh.abs() <= d2h.abs() { "H" } else { "2H" }).to_string(),
    );
    kv("plateau.level", d.plateau_level.to_string());
    kv("plateau.expected", (2 * c.embed.p).to_string());
    kv("plateau.n_points", d.plateau_points.to_string());

    kv("alpha.estimator", c.alpha_estimator.name().to_string());
    kv("alpha.inertial_mean", r.alpha_inertial_mean.to_string());
    match r.alpha_inertial {
        Some(f) => {
            kv("alpha.inertial_log_slope", f.slope.to_string());
            kv("alpha.inertial_log_slope.stderr", f.slope_stderr.to_string());
        }
        None => kv("alpha.inertial_log_slope", f64::NAN.to_string()),
    }
    kv("alpha.single_curve_gamma", single_curve_gamma(r).to_string());
    let rejected: Vec<String> = r.dispersion.rejected_taus.iter().map(|t| t.to_string()).collect();
    kv("dispersion.rejected_taus", rejected.join(","));
    s
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::with_capacity(1 << 20, File::create(path)?))
}

fn write_pdf(path: &Path, pdf: &LogVolumePdf) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "bin_center,density")?;
    for (c, d) in pdf.bin_centers.iter().zip(&pdf.densities) {
        writeln!(w, "{c},{d}")?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the CSV tables and `fits.txt` into `dir`; returns the file names
/// in write order.
pub fn write_tables(r: &RunResults, dir: &Path) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut names = Vec::new();
    let mut file = |name: &str| {
        names.push(name.to_string());
        dir.join(name)
    };

    let mut w = create(&file("structure_functions.csv"))?;
    writeln!(w, "tau,q,value")?;
    let sf = &r.structure_functions;
    for (li, &lag) in sf.lags.iter().enumerate() {
        for (qi, q) in sf.orders.iter().enumerate() {
            writeln!(w, "{},{q},{}", lag as f64 * sf.dt, sf.value(li, qi))?;
        }
    }
    w.flush()?;

    let mut w = create(&file("zeta.csv"))?;
    writeln!(w, "q,zeta,stderr")?;
    for e in &r.zeta {
        writeln!(w, "{},{},{}", e.q, e.zeta, e.stderr)?;
    }
    w.flush()?;

    let mut w = create(&file("volumes.csv"))?;
    writeln!(w, "target_index,delta_a")?;
    for rec in &r.volumes.records {
        writeln!(w, "{},{}", rec.target_time_index, rec.delta_a)?;
    }
    w.flush()?;

    if r.config.write_successor_volumes {
        let mut w = create(&file("successor_volumes.csv"))?;
        writeln!(w, "target_index,tau,delta_s")?;
        for rec in &r.volumes.records {
            for (tau, ds) in r.volumes.taus.iter().zip(&rec.delta_s) {
                writeln!(w, "{},{},{ds}", rec.target_time_index, *tau as f64 * r.config.dt)?;
            }
        }
        w.flush()?;
    }

    write_pdf(&file("pdf.csv"), &r.pdf)?;
    write_pdf(&file("pdf_rescaled.csv"), &r.pdf_rescaled)?;

    let mut w = create(&file("dispersion.csv"))?;
    writeln!(w, "tau,mean_delta_s,alpha,alpha_stderr,mean_log_delta_s")?;
    let d = &r.dispersion;
    for i in 0..d.taus.len() {
        writeln!(
            w,
            "{},{},{},{},{}",
            d.taus[i] as f64 * r.config.dt,
            d.mean_delta_s[i],
            d.alpha[i],
            d.alpha_stderr[i],
            d.mean_log_delta_s[i]
        )?;
    }
    w.flush()?;

    fs::write(file("fits.txt"), fits_text(r))?;
    Ok(names)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

/// Config echo, version, timings and checksums of `files` (relative to `dir`).
pub fn write_manifest(
    dir: &Path,
    config: &RunConfig,
    stage_seconds: &[(&'static str, f64)],
    files: &[String],
) -> Result<PathBuf> {
    let mut s = String::new();
    let _ = writeln!(s, "[program]");
    let _ = writeln!(s, "name = {}", env!("CARGO_PKG_NAME"));
    let _ = writeln!(s, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "threads = {}", rayon::current_num_threads());
    let _ = writeln!(s, "\n[config]");
    s.push_str(&config.to_text());
    let _ = writeln!(s, "\n[wall_seconds]");
    for (stage, secs) in stage_seconds {
        let _ = writeln!(s, "{stage} = {secs:.3}");
    }
    let _ = writeln!(s, "\n[sha256]");
    for name in files {
        let _ = writeln!(s, "{name} = {}", sha256_file(&dir.join(name))?);
    }
    let path = dir.join("manifest.txt");
    fs::write(&path, s)?;
    Ok(path)
}

/// Builds a pool with `threads` workers (all cores when `None`) and runs
/// `f` inside it.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Executes and exports one run into `config.output_dir`.
pub fn run_pipeline(config: &RunConfig) -> Result<RunResults> {
    let mut results = execute(config)?;
    let dir = &config.output_dir;
    let start = Instant::now();
    let files = write_tables(&results, dir).map_err(Error::in_stage("export"))?;
    results.stage_seconds.push(("export", start.elapsed().as_secs_f64()));
    write_manifest(dir, config, &results.stage_seconds, &files).map_err(Error::in_stage("export"))?;
    Ok(results)
}
