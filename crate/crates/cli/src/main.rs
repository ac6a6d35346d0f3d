use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use flate2::read::GzDecoder;

use privpc::graph::{load_edge_list, Graph, LoadOptions};
use privpc::harness::{
    cmd_bench, cmd_mc_success, cmd_run, cmd_stats, parse_k_grid, write_record_csv, Choice, ExperimentSpec,
    HarnessError, Mechanism, PrivacyParams,
};
use privpc::noise::RngStream;
use privpc::ppm::Iterations;
use privpc::ptr::{run_ptr, DEFAULT_MU};
use privpc::spectral::{top_two_eigenpairs, SolverOptions, SpectralSummary};
use privpc::synthetic::SyntheticSpec;

const EXIT_CONFIG: u8 = 2;
const EXIT_LOAD: u8 = 3;

/// Private principal-component experiments on graphs.
#[derive(Parser)]
#[command(name = "privpc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral statistics and sensitivity bounds.
    Stats(StatsArgs),
    /// Monte-Carlo sweep over trials and subset sizes.
    Run(RunArgs),
    /// Time the privatization step of PTR against PPM.
    Bench(CommonArgs),
    /// Empirical PTR release rate against its lower bound.
    McSuccess(CommonArgs),
    /// A single PTR release.
    Release(ReleaseArgs),
}

#[derive(Args)]
struct GraphArgs {
    /// Edge-list file, optionally gzip-compressed.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    graph: Option<PathBuf>,

    /// Synthetic graph, e.g. `er:1000,0.01`, `regular:5000,40`, `planted:220,0.01,20`.
    #[arg(long)]
    synthetic: Option<String>,

    /// Reject vertex id 0 in the input.
    #[arg(long)]
    one_indexed: bool,

    /// Drop self-loops instead of rejecting the file.
    #[arg(long)]
    drop_self_loops: bool,

    /// Eigensolver tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,

    /// Eigensolver iteration cap.
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct PrivacyArgs {
    #[arg(long, default_value_t = 1.0)]
    eps0: f64,
    #[arg(long, default_value_t = 3.0)]
    eps1: f64,
    #[arg(long, default_value_t = 3.0)]
    eps2: f64,
    /// Budget for the ppm and gauss_global mechanisms.
    #[arg(long, default_value_t = 3.0)]
    eps: f64,
    /// A number, or `auto` for ln(m)/m.
    #[arg(long, default_value = "auto")]
    delta: String,
    /// A number in (0, 1], or `auto` for a 0.95 success bound.
    #[arg(long, default_value = "auto")]
    p: String,
    #[arg(long, default_value_t = DEFAULT_MU)]
    mu: f64,
    /// PPM iterations, or `auto` for round(λ₁ ln n / GAP).
    #[arg(long, default_value = "auto")]
    iters: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct OutputArgs {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    privacy: PrivacyArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CommonArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    privacy: PrivacyArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value = "ptr")]
    mechanism: String,
    /// `a,b,c` or `start:stop:step`.
    #[arg(long)]
    k_grid: String,
    /// Leave `time_ms` empty so repeated runs give identical output.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct ReleaseArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    privacy: PrivacyArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Include the data-dependent internals of the mechanism in the output.
    #[arg(long)]
    debug_unsafe: bool,
}

enum Failure {
    Config(String),
    Load(String),
    Runtime(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::InvalidSpec(_) | HarnessError::Ptr(_) | HarnessError::Ppm(_) => Self::Config(e.to_string()),
            _ => Self::Runtime(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

fn open_edge_list(path: &Path) -> io::Result<Box<dyn BufRead>> {
    let mut file = BufReader::new(File::open(path)?);
    let gz = file.fill_buf()?.starts_with(&[0x1f, 0x8b]);
    Ok(if gz {
        Box::new(BufReader::new(GzDecoder::new(file)))
    } else {
        Box::new(file)
    })
}

/// Loads the graph. Synthetic families without an explicit seed use seed 0,
/// so the graph does not change with `--seed`.
fn load_graph(args: &GraphArgs) -> Result<(Graph, String), Failure> {
    if let Some(spec) = &args.synthetic {
        let spec: SyntheticSpec = spec
            .parse()
            .map_err(|e: privpc::synthetic::SyntheticError| Failure::Config(e.to_string()))?;
        let g = spec.build(0).map_err(|e| Failure::Config(e.to_string()))?;
        return Ok((g, spec.to_string()));
    }
    let path = args.graph.as_ref().expect("clap enforces a graph source");
    let reader = open_edge_list(path).map_err(|e| Failure::Load(format!("{}: {e}", path.display())))?;
    let opts = LoadOptions {
        one_indexed: args.one_indexed,
        drop_self_loops: args.drop_self_loops,
    };
    let g = load_edge_list(reader, &opts).map_err(|e| Failure::Load(format!("{}: {e}", path.display())))?;
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok((g, name))
}

fn summarize(g: &Graph, args: &GraphArgs, seed: u64) -> Result<SpectralSummary, Failure> {
    let opts = SolverOptions {
        tol: args.tol,
        max_iter: args.max_iter,
        seed,
    };
    top_two_eigenpairs(g, &opts).map_err(|e| Failure::Runtime(e.to_string()))
}

fn privacy_params(a: &PrivacyArgs) -> Result<PrivacyParams, Failure> {
    let iterations = if a.iters == "auto" {
        Iterations::Auto
    } else {
        Iterations::Fixed(
            a.iters
                .parse()
                .map_err(|_| Failure::Config(format!("--iters expects an integer or 'auto', got {:?}", a.iters)))?,
        )
    };
    Ok(PrivacyParams {
        eps0: a.eps0,
        eps1: a.eps1,
        eps2: a.eps2,
        eps: a.eps,
        delta: a.delta.parse::<Choice>()?,
        p: a.p.parse::<Choice>()?,
        mu: a.mu,
        iterations,
    })
}

fn sink(out: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<T: serde::Serialize>(record: &T, output: &OutputArgs) -> Result<(), Failure> {
    let mut w = sink(&output.out)?;
    match output.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, record).map_err(|e| Failure::Runtime(e.to_string()))?;
            writeln!(w)?;
        }
        Format::Csv => write_record_csv(record, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

fn spec_from(common: &CommonArgs, name: String, mechanism: Mechanism, k_grid: Vec<usize>) -> Result<ExperimentSpec, Failure> {
    Ok(ExperimentSpec {
        graph_name: name,
        mechanism,
        k_grid,
        trials: common.trials,
        seed: common.seed,
        params: privacy_params(&common.privacy)?,
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Stats(a) => {
            let params = privacy_params(&a.privacy)?;
            let (g, _) = load_graph(&a.graph)?;
            let resolved = params.resolve(g.m())?;
            let s = summarize(&g, &a.graph, 0)?;
            emit(&cmd_stats(&g, &s, resolved.ptr.eps_total(), resolved.delta), &a.output)
        }
        Command::Run(a) => {
            let mechanism: Mechanism = a.mechanism.parse()?;
            let k_grid = parse_k_grid(&a.k_grid)?;
            let c = &a.common;
            let (g, name) = load_graph(&c.graph)?;
            let spec = spec_from(c, name, mechanism, k_grid)?;
            spec.validate(g.n())?;
            spec.params.resolve(g.m())?;
            let s = summarize(&g, &c.graph, c.seed)?;
            let report = cmd_run(&g, &s, &spec)?;
            let mut w = sink(&c.output.out)?;
            match c.output.format {
                Format::Csv => report.write_csv(&mut w, !a.no_timing)?,
                Format::Json => {
                    report.write_json(&mut w, !a.no_timing)?;
                    writeln!(w)?;
                }
            }
            w.flush()?;
            Ok(())
        }
        Command::Bench(c) => {
            let (g, name) = load_graph(&c.graph)?;
            let spec = spec_from(&c, name, Mechanism::Ptr, vec![])?;
            spec.params.resolve(g.m())?;
            let s = summarize(&g, &c.graph, c.seed)?;
            emit(&cmd_bench(&g, &s, &spec)?, &c.output)
        }
        Command::McSuccess(c) => {
            let (g, name) = load_graph(&c.graph)?;
            let spec = spec_from(&c, name, Mechanism::Ptr, vec![])?;
            spec.params.resolve(g.m())?;
            let s = summarize(&g, &c.graph, c.seed)?;
            emit(&cmd_mc_success(&g, &s, &spec)?, &c.output)
        }
        Command::Release(a) => {
            let params = privacy_params(&a.privacy)?;
            let (g, _) = load_graph(&a.graph)?;
            let cfg = params.resolve(g.m())?.ptr;
            let s = summarize(&g, &a.graph, a.seed)?;
            let outcome = run_ptr(&g, &s, &cfg, &mut RngStream::new(a.seed, 0)).map_err(HarnessError::from)?;
            let mut json = outcome.to_json(&cfg, a.debug_unsafe);
            if outcome.released().is_some() {
                json["labels"] = serde_json::json!(g.labels());
            }
            let mut w = sink(&a.out)?;
            serde_json::to_writer_pretty(&mut w, &json).map_err(|e| Failure::Runtime(e.to_string()))?;
            writeln!(w)?;
            w.flush()?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Load(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_LOAD)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

