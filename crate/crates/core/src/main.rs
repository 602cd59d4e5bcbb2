use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use haar_svie::brownian::{grid_count_for, simulate_path, PathEnsembleConfig};
use haar_svie::cli::{self, Format, Mode, RunConfig, REGISTRY};
use haar_svie::montecarlo::DEFAULT_CONFIDENCE;
use haar_svie::{Error, Result};

#[derive(Parser)]
#[command(name = "haar-svie", version, about = "Haar wavelet solver for 2D stochastic Volterra integral equations")]
struct Args {
    /// Worker threads for path solves (defaults to all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem at one level over an ensemble of Brownian paths.
    Run {
        #[arg(long)]
        problem: String,
        #[arg(long, default_value_t = 1)]
        level: u32,
        #[arg(long, default_value_t = 1000)]
        paths: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
        confidence: f64,
        /// Drop the stochastic kernel.
        #[arg(long)]
        deterministic: bool,
        #[arg(long, default_value = "results.csv")]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        /// Also write a long-format x,y,mean surface file.
        #[arg(long)]
        grid_out: Option<PathBuf>,
    },
    /// Run the example problem at levels 0..=max-level and compare with the reference table.
    Table1 {
        #[arg(long, default_value_t = 1000)]
        paths: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
        confidence: f64,
        #[arg(long, default_value_t = 4)]
        max_level: u32,
        /// Output file; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write one simulated Brownian path as k,t,B CSV.
    DumpPath {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        index: usize,
        /// Collocation level the path must serve; sets the grid to 4·2^level cells.
        #[arg(long, default_value_t = 1)]
        level: u32,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// List registered problems.
    List,
}

fn sink(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run {
            problem,
            level,
            paths,
            seed,
            confidence,
            deterministic,
            output,
            format,
            grid_out,
        } => {
            let config = RunConfig {
                problem,
                level,
                paths,
                seed,
                confidence,
                mode: if deterministic { Mode::Deterministic } else { Mode::Stochastic },
                output,
                format: match format {
                    FormatArg::Csv => Format::Csv,
                    FormatArg::Json => Format::Json,
                },
                grid_out,
            };
            let report = cli::run(&config)?;
            for f in &report.summary.failures {
                eprintln!("path {} failed: {}", f.path_index, f.reason);
            }
            eprintln!(
                "{}: level {}, {} of {} paths solved, wrote {}",
                config.problem,
                config.level,
                report.summary.r_effective,
                report.summary.paths,
                config.output.display()
            );
            Ok(())
        }
        Command::Table1 {
            paths,
            seed,
            confidence,
            max_level,
            output,
        } => {
            if paths < 1 {
                return Err(Error::Config("--paths must be at least 1".into()));
            }
            let rows = cli::reproduce_table1(paths, seed, confidence, max_level)?;
            let mut out = sink(output.as_ref())?;
            cli::write_reference_csv(&mut out, &rows)?;
            out.flush()?;
            Ok(())
        }
        Command::DumpPath {
            seed,
            index,
            level,
            output,
        } => {
            let config = PathEnsembleConfig::new(index + 1, seed, grid_count_for(level, level, 1))?;
            let path = simulate_path(&config, index)?;
            let mut out = sink(output.as_ref())?;
            path.write_csv(&mut out)?;
            out.flush()?;
            Ok(())
        }
        Command::List => {
            for name in REGISTRY {
                println!("{name}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(threads) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(args.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
