use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use fracanalog::cli::{parse_config, run_pipeline, run_sweep, with_threads, Preset, RunConfig};
use fracanalog::series_io::{write_binary, write_csv};
use fracanalog::synthesis::synthesize;
use fracanalog::Error;

#[derive(Parser)]
#[command(name = "fracanalog", version, about = "Analogue dispersion of synthetic fractional and multifractal signals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Desk,
    Paper,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Database,
    Measure,
}

#[derive(clap::Args)]
struct Common {
    /// `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the preset named in the file.
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// One run, exported to the configured output directory.
    Run(Common),
    /// Grid over sweep_hurst x sweep_c2.
    Sweep(Common),
    /// Synthesize one series (binary, or CSV when the path ends in .csv).
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "database")]
        which: Which,
    },
}

fn load(common: &Common) -> Result<RunConfig, Error> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| Error::config(0, format!("cannot read {}: {e}", common.config.display())))?;
    let preset = common.preset.map(|p| match p {
        PresetArg::Desk => Preset::Desk,
        PresetArg::Paper => Preset::Paper,
    });
    parse_config(&text, preset)
}

fn synth(config: &RunConfig, out: &Path, which: Which) -> Result<(), Error> {
    let params = match which {
        Which::Database => config.database_params(),
        Which::Measure => config.measure_params(),
    };
    let series = synthesize(&params)?;
    if out.extension().is_some_and(|e| e == "csv") {
        write_csv(out, &series)
    } else {
        write_binary(out, &series)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Run(c) | Command::Sweep(c) => c,
        Command::Synth { common, .. } => common,
    };
    let config = match load(common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(1);
        }
    };
    let outcome = with_threads(common.threads, || match &cli.command {
        Command::Run(_) => run_pipeline(&config).map(|r| {
            println!("wrote {}", r.config.output_dir.display());
        }),
        Command::Sweep(_) => run_sweep(&config).map(|s| {
            println!(
                "wrote {} ({} of {} points failed)",
                s.summary_path.display(),
                s.failures(),
                s.points.len()
            );
        }),
        Command::Synth { out, which, .. } => synth(&config, out, *which).map(|_| {
            println!("wrote {}", out.display());
        }),
    });
    match outcome.and_then(|r| r) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
