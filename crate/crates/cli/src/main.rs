use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dbf_cli::chart::render_svg;
use dbf_cli::config::{DeliveryArg, NeighborsArg, Overrides, SeedModeArg};
use dbf_cli::experiment::{parse_seed_range, run_preset_observed, sweep, sweep_rows};
use dbf_cli::results::{csv_bytes, read_csv, write_csv};
use dbf_cli::{CliError, Preset, Result, Summary};
use dbf_core::bloom::{derive_params, fpr_exact, network_miss_probability};
use dbf_core::wire::write_frame;

#[derive(Parser)]
#[command(
    name = "dbf",
    version,
    about = "Distributed bloom filter reconciliation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one preset and write per-round results as CSV.
    Run(RunArgs),
    /// Run a preset over a range of seeds.
    Sweep(SweepArgs),
    /// False positive rate of a filter, and the miss rate across peers.
    Fpr {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        k: u16,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        peers: Option<u32>,
    },
    /// Filter size and probe count for n elements at rate p.
    Params {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        p: f64,
    },
    /// Render a convergence chart from a results CSV.
    Chart {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// exp1-sbf, exp1-dbf, exp2-sbf or exp2-dbf.
    #[arg(long)]
    preset: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    chart: Option<PathBuf>,
    /// Writes every protocol message as a length-prefixed frame.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    overrides: OverrideArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    preset: String,
    /// Inclusive range such as 1..10.
    #[arg(long)]
    seeds: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    chart: Option<PathBuf>,
    #[command(flatten)]
    overrides: OverrideArgs,
}

#[derive(Args)]
struct OverrideArgs {
    /// JSON file with SimConfig fields; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    universe: Option<usize>,
    #[arg(long)]
    subset: Option<usize>,
    #[arg(long)]
    fpr: Option<f64>,
    #[arg(long)]
    rounds: Option<u32>,
    #[arg(long, value_enum)]
    seed_mode: Option<SeedModeArg>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    push_surplus: Option<bool>,
    #[arg(long, value_enum)]
    neighbors: Option<NeighborsArg>,
    #[arg(long, value_enum)]
    delivery: Option<DeliveryArg>,
}

impl OverrideArgs {
    fn resolve(&self) -> Result<Overrides> {
        let file = match &self.config {
            Some(path) => Overrides::from_file(path)?,
            None => Overrides::default(),
        };
        let flags = Overrides {
            num_nodes: self.nodes,
            out_degree: self.degree,
            universe_size: self.universe,
            initial_subset_size: self.subset,
            p_target: self.fpr,
            max_rounds: self.rounds,
            seed_mode: self.seed_mode,
            push_surplus: self.push_surplus,
            neighbors: self.neighbors,
            delivery: self.delivery,
            ..Overrides::default()
        };
        Ok(file.merged_with(flags))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run(args) => run(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Fpr { m, k, n, peers } => {
            println!("fpr_exact {}", fpr_exact(m, k, n)?);
            if let Some(peers) = peers {
                println!("network_miss {}", network_miss_probability(m, k, n, peers)?);
            }
            Ok(())
        }
        Command::Params { n, p } => {
            let params = derive_params(n, p)?;
            println!("m {}", params.m());
            println!("k {}", params.k());
            println!("fpr_exact {}", fpr_exact(params.m(), params.k(), n)?);
            Ok(())
        }
        Command::Chart { input, out } => {
            let rows = read_csv(&input)?;
            write_file(&out, render_svg(&rows)?.as_bytes())
        }
    }
}

fn run(args: RunArgs) -> Result<()> {
    let preset: Preset = args.preset.parse()?;
    let overrides = args.overrides.resolve()?;
    // Fail on bad configuration before any file is created.
    dbf_cli::experiment::preset_config(preset, args.seed, &overrides)?;

    let run = match &args.trace {
        Some(path) => {
            let file = File::create(path).map_err(|e| CliError::io(path, e))?;
            let mut w = BufWriter::new(file);
            let mut failure = None;
            let run = run_preset_observed(preset, args.seed, &overrides, &mut |_, bytes| {
                if failure.is_none() {
                    if let Err(e) = write_frame(&mut w, bytes) {
                        failure = Some(e);
                    }
                }
            })?;
            if let Some(e) = failure {
                return Err(CliError::io(path, e));
            }
            w.flush().map_err(|e| CliError::io(path, e))?;
            run
        }
        None => run_preset_observed(preset, args.seed, &overrides, &mut |_, _| {})?,
    };

    let summary = Summary::from_rows(&run.rows).expect("a run yields at least one row");
    match &args.out {
        Some(path) => {
            write_csv(&run.rows, path)?;
            println!("{summary}");
        }
        None => {
            write_stdout(&csv_bytes(&run.rows)?)?;
            eprintln!("{summary}");
        }
    }
    if let Some(path) = &args.chart {
        write_file(path, render_svg(&run.rows)?.as_bytes())?;
    }
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<()> {
    let preset: Preset = args.preset.parse()?;
    let seeds = parse_seed_range(&args.seeds)?;
    let overrides = args.overrides.resolve()?;
    dbf_cli::experiment::preset_config(preset, *seeds.start(), &overrides)?;

    let runs = sweep(preset, seeds, &overrides)?;
    let rows = sweep_rows(&runs);
    let mut report = String::new();
    for run in &runs {
        let s = Summary::from_rows(&run.rows).expect("a run yields at least one row");
        report.push_str(&format!(
            "seed {} rounds {} converged {} median {} bits {} hashes {}\n",
            run.config.rng_seed,
            s.rounds,
            s.converged_nodes,
            s.median_set_size,
            s.total_bits_sent,
            s.hash_invocations
        ));
    }
    match &args.out {
        Some(path) => {
            write_csv(&rows, path)?;
            print!("{report}");
        }
        None => {
            write_stdout(&csv_bytes(&rows)?)?;
            eprint!("{report}");
        }
    }
    if let Some(path) = &args.chart {
        write_file(path, render_svg(&rows)?.as_bytes())?;
    }
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn write_stdout(bytes: &[u8]) -> Result<()> {
    io::stdout()
        .write_all(bytes)
        .map_err(|e| CliError::io("<stdout>", e))
}
