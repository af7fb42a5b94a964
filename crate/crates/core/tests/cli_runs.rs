//! Small end-to-end runs through the batch driver and the binary.

use std::fs;
use std::path::Path;
use std::process::Command;

use fracanalog::cli::{parse_config, run_pipeline, run_sweep, with_threads, RunConfig};
use fracanalog::series_io::read_binary;

const SMALL: &str = "
n_database = 16384
n_measure = 4096
big_t = 128
tau_k = 4
k = 20
hurst = 0.6
c2 = 0.05
write_successor_volumes = true
";

fn small(dir: &Path) -> RunConfig {
    let text = format!("{SMALL}output_dir = {}\n", dir.display());
    parse_config(&text, None).unwrap()
}

const TABLES: &[&str] = &[
    "structure_functions.csv",
    "zeta.csv",
    "volumes.csv",
    "successor_volumes.csv",
    "pdf.csv",
    "pdf_rescaled.csv",
    "dispersion.csv",
    "fits.txt",
];

#[test]
fn outputs_are_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in [1, 3] {
        let mut cfg = small(tmp.path());
        cfg.output_dir = tmp.path().join(format!("t{threads}"));
        with_threads(Some(threads), || run_pipeline(&cfg)).unwrap().unwrap();
        outputs.push(cfg.output_dir);
    }
    for name in TABLES {
        let a = fs::read(outputs[0].join(name)).unwrap();
        let b = fs::read(outputs[1].join(name)).unwrap();
        assert!(a == b, "{name} differs between thread counts");
    }
    let manifest = fs::read_to_string(outputs[0].join("manifest.txt")).unwrap();
    assert!(manifest.contains("[sha256]") && manifest.contains("dispersion.csv = "));
    assert!(manifest.contains("seed_measure = 2"));
}

#[test]
fn csv_headers_match_schemas() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small(tmp.path());
    let r = run_pipeline(&cfg).unwrap();
    let header = |name: &str| {
        fs::read_to_string(tmp.path().join(name))
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_string()
    };
    assert_eq!(header("structure_functions.csv"), "tau,q,value");
    assert_eq!(header("zeta.csv"), "q,zeta,stderr");
    assert_eq!(header("volumes.csv"), "target_index,delta_a");
    assert_eq!(header("successor_volumes.csv"), "target_index,tau,delta_s");
    assert_eq!(header("pdf.csv"), "bin_center,density");
    assert_eq!(header("pdf_rescaled.csv"), "bin_center,density");
    assert_eq!(header("dispersion.csv"), "tau,mean_delta_s,alpha,alpha_stderr,mean_log_delta_s");
    let rows = fs::read_to_string(tmp.path().join("successor_volumes.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + r.volumes.records.len() * r.volumes.taus.len());
    let fits = fs::read_to_string(tmp.path().join("fits.txt")).unwrap();
    assert!(fits.contains(&format!("log_delta_a.std = {}\n", r.pdf.std)));
    assert!(fits.contains("inertial.slope_minus_2h = "));
}

#[test]
fn sweep_summary_matches_run_fits() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(tmp.path());
    cfg.sweep_hurst = vec![0.4];
    cfg.sweep_c2 = vec![0.03, 0.08];
    let out = run_sweep(&cfg).unwrap();
    assert_eq!(out.failures(), 0);
    let summary = fs::read_to_string(&out.summary_path).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 3);
    for (line, point) in lines[1..].iter().zip(&out.points) {
        let fields: Vec<&str> = line.split(',').collect();
        let fits = fs::read_to_string(point.dir.join("fits.txt")).unwrap();
        assert!(fits.contains(&format!("log_delta_a.mean = {}\n", fields[2])));
        assert!(fits.contains(&format!("log_delta_a.std = {}\n", fields[3])));
        assert!(fits.contains(&format!("plateau.level = {}\n", fields[6])));
        assert_eq!(*fields.last().unwrap(), "ok");
    }
    let pooled = fs::read_to_string(&out.fits_path).unwrap();
    assert!(pooled.contains("gamma.h0.4.per-curve-offset.n_curves = 2"));
    assert!(pooled.contains("gamma.h0.4.through-origin = "));
}

#[test]
fn sweep_records_failing_point_and_continues() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(tmp.path());
    cfg.sweep_hurst = vec![0.5];
    cfg.sweep_c2 = vec![0.0, 0.05];
    // A regular file where the first point's directory should go.
    fs::create_dir_all(tmp.path()).unwrap();
    fs::write(tmp.path().join("h0.5_c20"), "occupied").unwrap();
    let out = run_sweep(&cfg).unwrap();
    assert_eq!(out.failures(), 1);
    let summary = fs::read_to_string(&out.summary_path).unwrap();
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert!(rows[0].contains("failed: stage `export`"), "{}", rows[0]);
    assert!(rows[1].ends_with(",ok"));
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fracanalog"))
}

#[test]
fn binary_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.cfg");
    fs::write(&bad, "hurst = 1.5\n").unwrap();
    let out = binary().args(["run", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    // Output directory blocked by a regular file: runtime failure.
    let blocker = tmp.path().join("blocker");
    fs::write(&blocker, "x").unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, format!("{SMALL}output_dir = {}\n", blocker.join("sub").display())).unwrap();
    let out = binary().args(["run", "--threads", "1", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("export"));
}

#[test]
fn binary_synth_writes_series() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("s.cfg");
    fs::write(&cfg, SMALL).unwrap();
    let bin = tmp.path().join("series.bin");
    let out = binary().args(["synth", "--config"]).arg(&cfg).arg("--out").arg(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = read_binary(&bin).unwrap();
    assert_eq!(s.len(), 16384);
    let p = s.params.unwrap();
    assert_eq!((p.hurst, p.c2, p.seed), (0.6, 0.05, 1));
}
