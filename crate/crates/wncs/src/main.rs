use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use wncs::scenario_file;
use wncs::tables;
use wncs::trace_csv;
use wncs_core::approx::SeriesKind;
use wncs_core::sim::{self, Mode, Scenario};
use wncs_core::stability::{self, ScalarDde};

#[derive(Parser)]
#[command(name = "wncs", version, about = "Delayed wireless speed-loop simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    NoSp,
    Csp,
    Asp,
}

#[derive(Clone, Copy, ValueEnum)]
enum SeriesArg {
    Dfr,
    Pade,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write its trace as CSV.
    Run {
        /// Scenario file; built-in defaults when omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, value_enum)]
        series: Option<SeriesArg>,
        #[arg(long)]
        seed: Option<u64>,
        /// Delay model of the fixed predictor (s).
        #[arg(long)]
        fixed_t_m: Option<f64>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rightmost characteristic root real part over a delay grid, as CSV.
    SweepStability {
        #[arg(long, default_value_t = 0.1)]
        td_min: f64,
        #[arg(long, default_value_t = 0.8)]
        td_max: f64,
        #[arg(long, default_value_t = 71)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Step-response ISE of each delay approximant.
    IseTable,
    /// Delay at which the loop without predictor loses stability.
    CriticalDelay {
        #[arg(long, default_value_t = 0.1)]
        lo: f64,
        #[arg(long, default_value_t = 0.8)]
        hi: f64,
    },
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { scenario, mode, series, seed, fixed_t_m, out } => {
            let mut s = match &scenario {
                Some(p) => scenario_file::load_scenario(p).with_context(|| format!("reading {}", p.display()))?,
                None => Scenario::default(),
            };
            if let Some(m) = mode {
                s.mode = match m {
                    ModeArg::NoSp => Mode::NoSp,
                    ModeArg::Csp => Mode::Csp,
                    ModeArg::Asp => Mode::Asp,
                };
            }
            if let Some(k) = series {
                s.series = match k {
                    SeriesArg::Dfr => SeriesKind::Dfr,
                    SeriesArg::Pade => SeriesKind::Pade,
                };
            }
            if let Some(seed) = seed {
                s.seed = seed;
            }
            if fixed_t_m.is_some() {
                s.fixed_t_m = fixed_t_m;
            }
            if s.mode == Mode::Csp && s.fixed_t_m.is_none() {
                anyhow::bail!("csp mode needs a delay model: set `fixed_t_m` in the scenario or pass --fixed-t-m");
            }
            let trace = sim::run_scenario(&s)?;
            trace_csv::write_trace(&trace, output(out.as_ref())?)?;
            let m = sim::compute_metrics(&trace);
            eprintln!(
                "max duty {:.1}%  min duty {:.1}%  steady-state error {:.2}%  oscillation {}",
                m.max_duty, m.min_duty, m.sse_pct, m.oscillation
            );
        }
        Command::SweepStability { td_min, td_max, steps, out } => {
            let pts = tables::stability_sweep(&ScalarDde::speed_loop(td_min), td_min, td_max, steps)?;
            tables::write_sweep(&pts, output(out.as_ref())?)?;
        }
        Command::IseTable => {
            print!("{}", tables::format_ise_table(&tables::ise_table()?));
        }
        Command::CriticalDelay { lo, hi } => {
            let dde = ScalarDde::speed_loop(lo);
            let t = stability::critical_delay(&dde, lo, hi)?;
            let (w, t_oracle) = stability::crossing_oracle(&dde)?;
            println!("critical delay (spectral)   {t:.4} s");
            println!("critical delay (crossing)   {t_oracle:.4} s at {w:.4} rad/s");
        }
    }
    Ok(())
}
