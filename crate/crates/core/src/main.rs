use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use qmoire::analysis::{expected_beat_period, BeatPeriod};
use qmoire::harness::{fit_scan, read_csv, render_preset, resolve, run_preset, FitPlan, FitReport, RunMode};
use qmoire::Error;

/// Moiré fringes in two-photon coincidence images.
#[derive(Debug, Parser)]
#[command(name = "qmoire", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Analytic,
    Mc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Model {
    Product,
    Envelope,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a preset (fig1a, fig1b, fig3a, fig3b, fig5a, fig5b) or a config file.
    Run {
        target: String,
        #[arg(long, value_enum, default_value = "analytic")]
        mode: Mode,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Worker threads (results do not depend on this).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Fit a scan CSV and print the fit report.
    Fit {
        csv: PathBuf,
        #[arg(long, value_enum)]
        model: Model,
        /// Period of the fast carrier under the envelope, mm.
        #[arg(long)]
        fast_period: Option<f64>,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render the superposed gratings of a preset or config file as PGM.
    Render {
        target: String,
        #[arg(long)]
        out: PathBuf,
        /// Relative grating angle, radians in [0, π/2].
        #[arg(long)]
        angle: Option<f64>,
    },
    /// Print the moiré beat period of two grating periods, mm.
    #[command(allow_negative_numbers = true)]
    Beat { p1: f64, p2: f64 },
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            target,
            mode,
            out,
            threads,
        } => {
            let preset = resolve(&target)?;
            let mode = match mode {
                Mode::Analytic => RunMode::Analytic,
                Mode::Mc => RunMode::MonteCarlo,
            };
            let bundle = run_preset(&preset, mode, &out, threads)?;
            for p in bundle.data.iter().chain(&bundle.images).chain([&bundle.fit_report]) {
                println!("wrote {}", p.display());
            }
        }
        Command::Fit {
            csv,
            model,
            fast_period,
            out,
        } => {
            let plan = match model {
                Model::Product => {
                    if fast_period.is_some() {
                        return Err(Error::InvalidParameter {
                            name: "fast period",
                            reason: "applies to the envelope model only".into(),
                        });
                    }
                    FitPlan::Product
                }
                Model::Envelope => FitPlan::Envelope { fast_period },
            };
            let record = read_csv(&csv)?;
            let report = FitReport {
                source: csv.display().to_string(),
                fit: fit_scan(&record, plan).map_err(|e| e.to_string()),
                extras: Vec::new(),
            };
            print!("{}", report.render());
            if let Some(path) = out {
                report.write(&path)?;
            }
        }
        Command::Render { target, out, angle } => {
            let preset = resolve(&target)?;
            let image = render_preset(&preset, angle, &out)?;
            println!("wrote {} ({}×{})", out.display(), image.width(), image.height());
        }
        Command::Beat { p1, p2 } => match expected_beat_period(p1, p2)? {
            BeatPeriod::Finite(p) => println!("{p:.12}"),
            BeatPeriod::Infinite => println!("infinite"),
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 1 } else { 2 })
        }
    }
}
