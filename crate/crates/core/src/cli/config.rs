//! `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Absent keys take the defaults of the selected preset (`desk` unless the
//! file or the command line says otherwise). Lists are comma separated.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::embedding::EmbedParams;
use crate::error::{Error, Result};
use crate::regression::log_uniform_integers;
use crate::statistics::{AlphaEstimator, DEFAULT_BINS};
use crate::synthesis::{KernelShape, ProcessParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Laptop-sized: N_D = 2^20, N_M = 2^18, T = 512.
    Desk,
    /// N_D = 5 * 2^21, N_M = 2^21, T = 2350.
    Paper,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Desk => "desk",
            Preset::Paper => "paper",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "desk" => Some(Preset::Desk),
            "paper" => Some(Preset::Paper),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Preset,
    pub hurst: f64,
    pub c2: f64,
    pub tau_k: f64,
    pub big_t: f64,
    pub dt: f64,
    pub kernel: KernelShape,
    pub n_database: usize,
    pub n_measure: usize,
    pub embed: EmbedParams,
    pub k: usize,
    /// Successor delay grid, in samples: log-uniform from `tau_min` to
    /// `tau_max` with `tau_per_decade` points per decade.
    pub tau_min: usize,
    pub tau_max: usize,
    pub tau_per_decade: usize,
    pub n_bins: usize,
    pub alpha_estimator: AlphaEstimator,
    pub sf_orders: Vec<f64>,
    pub seed_database: u64,
    pub seed_measure: u64,
    pub output_dir: PathBuf,
    pub write_successor_volumes: bool,
    /// Sweep grid; empty means "the single value above".
    pub sweep_hurst: Vec<f64>,
    pub sweep_c2: Vec<f64>,
}

impl RunConfig {
    pub fn preset(preset: Preset) -> Self {
        let (n_database, n_measure, big_t) = match preset {
            Preset::Desk => (1 << 20, 1 << 18, 512.0),
            Preset::Paper => (5 << 21, 1 << 21, 2350.0),
        };
        RunConfig {
            preset,
            hurst: 0.5,
            c2: 0.0,
            tau_k: 5.0,
            big_t,
            dt: 1.0,
            kernel: KernelShape::default(),
            n_database,
            n_measure,
            embed: EmbedParams::default(),
            k: crate::analogues::DEFAULT_K,
            tau_min: 1,
            tau_max: (4.0 * big_t).round() as usize,
            tau_per_decade: 10,
            n_bins: DEFAULT_BINS,
            alpha_estimator: AlphaEstimator::default(),
            sf_orders: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            seed_database: 1,
            seed_measure: 2,
            output_dir: PathBuf::from("fracanalog-out"),
            write_successor_volumes: true,
            sweep_hurst: Vec::new(),
            sweep_c2: Vec::new(),
        }
    }

    pub fn database_params(&self) -> ProcessParams {
        self.process_params(self.n_database, self.seed_database)
    }

    pub fn measure_params(&self) -> ProcessParams {
        self.process_params(self.n_measure, self.seed_measure)
    }

    fn process_params(&self, n: usize, seed: u64) -> ProcessParams {
        ProcessParams {
            hurst: self.hurst,
            c2: self.c2,
            tau_k: self.tau_k,
            big_t: self.big_t,
            n,
            dt: self.dt,
            seed,
            kernel: self.kernel,
        }
    }

    pub fn tau_grid(&self) -> Vec<usize> {
        log_uniform_integers(self.tau_min, self.tau_max, self.tau_per_decade)
    }

    /// Structure-function lags: 12 per decade up to `min(4T, n/10)`.
    pub fn sf_max_lag(&self) -> usize {
        let by_scale = (4.0 * self.big_t / self.dt).round() as usize;
        by_scale.min(self.n_database / 10 - 1).max(1)
    }

    /// Grid points of the sweep, `hurst` outer.
    pub fn sweep_points(&self) -> Vec<(f64, f64)> {
        let hs = if self.sweep_hurst.is_empty() {
            vec![self.hurst]
        } else {
            self.sweep_hurst.clone()
        };
        let cs = if self.sweep_c2.is_empty() {
            vec![self.c2]
        } else {
            self.sweep_c2.clone()
        };
        hs.iter()
            .flat_map(|&h| cs.iter().map(move |&c| (h, c)))
            .collect()
    }

    /// The configuration as parseable `key = value` text.
    pub fn to_text(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("preset", self.preset.name().into());
        kv("hurst", self.hurst.to_string());
        kv("c2", self.c2.to_string());
        kv("tau_k", self.tau_k.to_string());
        kv("big_t", self.big_t.to_string());
        kv("dt", self.dt.to_string());
        kv("kernel", self.kernel.name().into());
        kv("n_database", self.n_database.to_string());
        kv("n_measure", self.n_measure.to_string());
        kv("p", self.embed.p.to_string());
        kv("m", self.embed.m.to_string());
        kv("k", self.k.to_string());
        kv("tau_min", self.tau_min.to_string());
        kv("tau_max", self.tau_max.to_string());
        kv("tau_per_decade", self.tau_per_decade.to_string());
        kv("n_bins", self.n_bins.to_string());
        kv("alpha_estimator", self.alpha_estimator.name().into());
        kv("sf_orders", list(&self.sf_orders));
        kv("seed_database", self.seed_database.to_string());
        kv("seed_measure", self.seed_measure.to_string());
        kv("output_dir", self.output_dir.display().to_string());
        kv("write_successor_volumes", self.write_successor_volumes.to_string());
        kv("sweep_hurst", list(&self.sweep_hurst));
        kv("sweep_c2", list(&self.sweep_c2));
        s
    }

    /// Checks every invariant; `lines` maps keys to their source lines for
    /// error reporting (0 when the value came from a default).
    pub fn validate_with_lines(&self, lines: &BTreeMap<String, usize>) -> Result<()> {
        let at = |keys: &[&str]| keys.iter().filter_map(|k| lines.get(*k)).copied().max().unwrap_or(0);
        let fail = |keys: &[&str], msg: String| Err(Error::config(at(keys), msg));

        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return fail(&["hurst"], format!("hurst = {} violates 0 < H < 1", self.hurst));
        }
        if !(self.c2 >= 0.0) || !self.c2.is_finite() {
            return fail(&["c2"], format!("c2 = {} must be >= 0", self.c2));
        }
        if !(self.dt > 0.0) {
            return fail(&["dt"], format!("dt = {} must be > 0", self.dt));
        }
        if !(self.tau_k > 0.0 && self.tau_k < self.big_t) {
            return fail(
                &["tau_k", "big_t"],
                format!("need 0 < tau_k < big_t, got {} and {}", self.tau_k, self.big_t),
            );
        }
        for (key, n) in [("n_database", self.n_database), ("n_measure", self.n_measure)] {
            if !(self.big_t < n as f64 * self.dt) {
                return fail(&[key, "big_t"], format!("{key} * dt = {} must exceed big_t", n as f64 * self.dt));
            }
        }
        if self.seed_database == self.seed_measure {
            return fail(
                &["seed_database", "seed_measure"],
                format!(
                    "seed_database and seed_measure are both {}; database and measure must be independent realizations",
                    self.seed_database
                ),
            );
        }
        if self.embed.p == 0 || self.embed.m == 0 {
            return fail(&["p", "m"], "p and m must be >= 1".into());
        }
        if self.k < 2 {
            return fail(&["k"], format!("k = {} must be >= 2", self.k));
        }
        if self.tau_min == 0 || self.tau_min > self.tau_max || self.tau_per_decade == 0 {
            return fail(
                &["tau_min", "tau_max", "tau_per_decade"],
                format!(
                    "need 1 <= tau_min <= tau_max and tau_per_decade >= 1, got {}, {}, {}",
                    self.tau_min, self.tau_max, self.tau_per_decade
                ),
            );
        }
        let db_states = self
            .n_database
            .saturating_sub((self.embed.p - 1) * self.embed.m);
        if self.tau_max + self.k > db_states {
            return fail(
                &["tau_max", "n_database", "k"],
                format!(
                    "database with {db_states} states cannot hold tau_max = {} plus k = {} analogues",
                    self.tau_max, self.k
                ),
            );
        }
        if self.n_measure <= (self.embed.p - 1) * self.embed.m {
            return fail(&["n_measure"], "measure too short to embed".into());
        }
        if self.n_bins == 0 {
            return fail(&["n_bins"], "n_bins must be >= 1".into());
        }
        if self.n_database / 10 < 2 {
            return fail(&["n_database"], "n_database too small for structure functions".into());
        }
        for &h in &self.sweep_hurst {
            if !(h > 0.0 && h < 1.0) {
                return fail(&["sweep_hurst"], format!("sweep hurst {h} violates 0 < H < 1"));
            }
        }
        for &c in &self.sweep_c2 {
            if !(c >= 0.0) {
                return fail(&["sweep_c2"], format!("sweep c2 {c} must be >= 0"));
            }
        }
        if self.n_database < 4 * self.n_measure {
            log::warn!(
                "n_database = {} is less than 4 x n_measure = {}; analogues may be poor",
                self.n_database,
                self.n_measure
            );
        }
        Ok(())
    }
}

fn parse_list(v: &str) -> Option<Vec<f64>> {
    if v.trim().is_empty() {
        return Some(Vec::new());
    }
    v.split(',').map(|x| x.trim().parse().ok()).collect()
}

const KEYS: &[&str] = &[
    "preset",
    "hurst",
    "c2",
    "tau_k",
    "big_t",
    "dt",
    "kernel",
    "n_database",
    "n_measure",
    "p",
    "m",
    "k",
    "tau_min",
    "tau_max",
    "tau_per_decade",
    "n_bins",
    "alpha_estimator",
    "sf_orders",
    "seed_database",
    "seed_measure",
    "output_dir",
    "write_successor_volumes",
    "sweep_hurst",
    "sweep_c2",
];

/// Parses and validates a configuration. `preset_override` (from the
/// command line) wins over a `preset` key in the file.
pub fn parse_config(text: &str, preset_override: Option<Preset>) -> Result<RunConfig> {
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::config(line_no, format!("expected key = value, got {line:?}")))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(Error::config(line_no, format!("unknown key `{key}`")));
        }
        if let Some((first, _)) = entries.get(key) {
            return Err(Error::config(line_no, format!("duplicate key `{key}` (first on line {first})")));
        }
        entries.insert(key.to_string(), (line_no, value.trim().to_string()));
    }

    let file_preset = match entries.get("preset") {
        Some((line, v)) => Some(
            Preset::parse(v).ok_or_else(|| Error::config(*line, format!("preset must be desk or paper, got {v:?}")))?,
        ),
        None => None,
    };
    let preset = preset_override.or(file_preset).unwrap_or(Preset::Desk);
    let mut cfg = RunConfig::preset(preset);
    // An explicit big_t moves the default tau_max along with it.
    let mut tau_max_explicit = false;

    for (key, (line, value)) in &entries {
        let line = *line;
        let mismatch = |what: &str| Error::config(line, format!("`{key}` expects {what}, got {value:?}"));
        let real = || value.parse::<f64>().map_err(|_| mismatch("a real number"));
        let count = || value.parse::<usize>().map_err(|_| mismatch("a non-negative integer"));
        let seed = || value.parse::<u64>().map_err(|_| mismatch("an unsigned 64-bit integer"));
        match key.as_str() {
            "preset" => {}
            "hurst" => cfg.hurst = real()?,
            "c2" => cfg.c2 = real()?,
            "tau_k" => cfg.tau_k = real()?,
            "big_t" => cfg.big_t = real()?,
            "dt" => cfg.dt = real()?,
            "kernel" => {
                cfg.kernel = KernelShape::parse(value).ok_or_else(|| mismatch("antisymmetric or symmetric"))?
            }
            "n_database" => cfg.n_database = count()?,
            "n_measure" => cfg.n_measure = count()?,
            "p" => cfg.embed.p = count()?,
            "m" => cfg.embed.m = count()?,
            "k" => cfg.k = count()?,
            "tau_min" => cfg.tau_min = count()?,
            "tau_max" => {
                cfg.tau_max = count()?;
                tau_max_explicit = true;
            }
            "tau_per_decade" => cfg.tau_per_decade = count()?,
            "n_bins" => cfg.n_bins = count()?,
            "alpha_estimator" => {
                cfg.alpha_estimator = AlphaEstimator::parse(value).ok_or_else(|| mismatch("ols or theil-sen"))?
            }
            "sf_orders" => cfg.sf_orders = parse_list(value).ok_or_else(|| mismatch("a list of reals"))?,
            "seed_database" => cfg.seed_database = seed()?,
            "seed_measure" => cfg.seed_measure = seed()?,
            "output_dir" => cfg.output_dir = PathBuf::from(value),
            "write_successor_volumes" => {
                cfg.write_successor_volumes = value.parse().map_err(|_| mismatch("true or false"))?
            }
            "sweep_hurst" => cfg.sweep_hurst = parse_list(value).ok_or_else(|| mismatch("a list of reals"))?,
            "sweep_c2" => cfg.sweep_c2 = parse_list(value).ok_or_else(|| mismatch("a list of reals"))?,
            _ => unreachable!("key list checked above"),
        }
    }
    if !tau_max_explicit {
        cfg.tau_max = (4.0 * cfg.big_t / cfg.dt).round() as usize;
    }
    let lines = entries.iter().map(|(k, (l, _))| (k.clone(), *l)).collect();
    cfg.validate_with_lines(&lines)?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_desk_defaults() {
        let c = parse_config("", None).unwrap();
        assert_eq!(c, RunConfig::preset(Preset::Desk));
        assert_eq!((c.n_database, c.n_measure, c.k), (1 << 20, 1 << 18, 50));
        assert_eq!((c.tau_k, c.big_t, c.tau_max), (5.0, 512.0, 2048));
        assert_eq!(c.embed, EmbedParams { p: 3, m: 1 });
    }

    #[test]
    fn large_preset() {
        let c = parse_config("# large run\npreset = paper\n", None).unwrap();
        assert_eq!((c.n_database, c.n_measure, c.big_t), (5 * (1 << 21), 1 << 21, 2350.0));
        assert_eq!(c.tau_max, 9400);
        let d = parse_config("preset = paper", Some(Preset::Desk)).unwrap();
        assert_eq!(d.preset, Preset::Desk);
    }

    #[test]
    fn hurst_out_of_range() {
        let err = parse_config("\nhurst=1.5\n", None).unwrap_err();
        match err {
            Error::Config { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("0 < H < 1"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equal_seeds_rejected() {
        let err = parse_config("seed_database=1\nseed_measure=1", None).unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn unknown_key_and_type_mismatch() {
        assert!(matches!(
            parse_config("a = 1\nfoo = 2", None),
            Err(Error::Config { line: 1, .. })
        ));
        assert!(matches!(
            parse_config("k = 3\nn_measure = many", None),
            Err(Error::Config { line: 2, .. })
        ));
        assert!(matches!(parse_config("just words", None), Err(Error::Config { line: 1, .. })));
        assert!(matches!(parse_config("k=3\nk=4", None), Err(Error::Config { line: 2, .. })));
    }

    #[test]
    fn overrides_and_lists() {
        let c = parse_config(
            "big_t = 128  # smaller\nsweep_hurst = 0.3, 0.5,0.7\nsweep_c2 = 0,0.1\nalpha_estimator = theil-sen",
            None,
        )
        .unwrap();
        assert_eq!(c.tau_max, 512);
        assert_eq!(c.sweep_points().len(), 6);
        assert_eq!(c.sweep_points()[1], (0.3, 0.1));
        assert_eq!(c.alpha_estimator, AlphaEstimator::TheilSen);
    }

    #[test]
    fn text_round_trip() {
        let c = parse_config("hurst = 0.7\nc2 = 0.05\nsweep_c2 = 0,0.05", None).unwrap();
        assert_eq!(parse_config(&c.to_text(), None).unwrap(), c);
    }

    #[test]
    fn database_too_small_for_grid() {
        let err = parse_config("n_database = 2000\nn_measure = 2000\nbig_t = 512", None).unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
    }
}
