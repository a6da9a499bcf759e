//! Command-line front end: parse flags into an experiment, run it, write
//! the JSON report and the CSV sample dump.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::coloring::ColorMeasure;
use crate::error::Result;
use crate::harness::{
    run_annealed_clt, run_annealed_lln, run_cluster_clt, run_estimate, run_gamma_sample,
    run_identity_check, run_quenched_clt, run_quenched_lln, run_weighted_lln_check,
    ExperimentConfig, GammaSampleConfig, Mode, RunResult, Tolerances,
};
use crate::percolation::ProxyRule;
use crate::stats::DEFAULT_LEVEL;
use crate::theory::Regime;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_TEST_FAILED: i32 = 2;

const NU_HELP: &str = "\
Color measures (--nu):
  two-point:a,b,alpha     (1 - alpha) δ_a + alpha δ_b, e.g. two-point:-1,1,0.5
  gaussian:mean,var       normal law, e.g. gaussian:0,1
  discrete:v1:w1,v2:w2    finite law, weights summing to 1, e.g. discrete:-1:0.25,0:0.5,2:0.25

Exit status: 0 when every test passes, 2 when a test fails, 1 on error.";

#[derive(Debug, Parser)]
#[command(
    name = "divcolor",
    version,
    about = "Divide-and-color model: percolation, cluster coloring and limit-law checks",
    after_help = NU_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate θ, χ^f, κ, σ_p² and the square-sum density.
    Estimate(ExperimentArgs),
    /// Law of large numbers for the magnetization (--mode quenched|annealed).
    Lln(ExperimentArgs),
    /// Central limit theorem for the magnetization (--mode quenched|annealed).
    Clt(ExperimentArgs),
    /// Central limit theorem for the infinite-cluster volume.
    ClusterClt(ExperimentArgs),
    /// Weighted law of large numbers over the finite clusters.
    WeightedLln(ExperimentArgs),
    /// Draw from the annealed fluctuation law.
    GammaSample(GammaArgs),
    /// Check the square-sum identity on random configurations.
    CheckIdentity(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output directory for report.json (and samples.csv with --format csv).
    /// Without it the report, or the CSV dump, goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
}

fn parse_probability(s: &str) -> std::result::Result<f64, String> {
    let p: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(format!("{p} is outside the range [0, 1]"))
    }
}

fn parse_level(s: &str) -> std::result::Result<f64, String> {
    let a = parse_probability(s)?;
    if a > 0.0 && a < 1.0 {
        Ok(a)
    } else {
        Err(format!("level {a} must lie strictly between 0 and 1"))
    }
}

fn parse_nonnegative(s: &str) -> std::result::Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if x.is_finite() && x >= 0.0 {
        Ok(x)
    } else {
        Err(format!("{x} must be finite and nonnegative"))
    }
}

fn parse_nu(s: &str) -> std::result::Result<ColorMeasure, String> {
    s.parse::<ColorMeasure>().map_err(|e| e.to_string())
}

fn parse_from_str<T: std::str::FromStr<Err = crate::Error>>(
    s: &str,
) -> std::result::Result<T, String> {
    s.parse::<T>().map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    dim: usize,

    /// Box radius n; repeat for window lists or several box sizes.
    #[arg(long = "radius", required = true)]
    radii: Vec<usize>,

    #[arg(long, value_parser = parse_probability)]
    p: f64,

    #[arg(long, value_parser = parse_nu, default_value = "two-point:-1,1,0.5")]
    nu: ColorMeasure,

    #[arg(long, value_parser = parse_from_str::<Mode>, default_value = "annealed")]
    mode: Mode,

    #[arg(
        long = "graph-replicates",
        visible_aliases = ["replicates", "configs"],
        default_value_t = 100
    )]
    graph_replicates: usize,

    #[arg(long = "color-replicates", default_value_t = 1000)]
    color_replicates: usize,

    #[arg(long, env = "DCL_SEED", default_value_t = 0)]
    seed: u64,

    /// Inner-window margin; defaults to ceil(4 ln(2n + 1)), at most n/2.
    #[arg(long)]
    margin: Option<usize>,

    #[arg(long, value_parser = parse_from_str::<ProxyRule>, default_value = "boundary-largest")]
    proxy: ProxyRule,

    /// Inferred from p for d = 1 and d = 2 when omitted.
    #[arg(long, value_parser = parse_from_str::<Regime>)]
    regime: Option<Regime>,

    /// Use this σ_p² instead of the estimate in cluster-clt.
    #[arg(long = "reference-sigma-p2", value_parser = parse_nonnegative)]
    reference_sigma_p2: Option<f64>,

    #[arg(long, value_parser = parse_level, default_value_t = DEFAULT_LEVEL)]
    level: f64,

    /// Worker threads. Results do not depend on it.
    #[arg(long, default_value_t = 1)]
    workers: usize,

    #[command(flatten)]
    output: OutputArgs,
}

impl ExperimentArgs {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            dim: self.dim,
            radii: self.radii.clone(),
            p: self.p,
            nu: self.nu.clone(),
            mode: self.mode,
            graph_replicates: self.graph_replicates,
            color_replicates: self.color_replicates,
            master_seed: self.seed,
            margin: self.margin,
            proxy_rule: self.proxy,
            regime: self.regime,
            reference_sigma_p2: self.reference_sigma_p2,
            tolerances: Tolerances {
                level: self.level,
                ..Tolerances::default()
            },
            workers: self.workers.max(1),
        }
    }
}

#[derive(Debug, Args)]
struct GammaArgs {
    #[arg(long, value_parser = parse_nu, default_value = "two-point:-1,1,0.5")]
    nu: ColorMeasure,

    #[arg(long, value_parser = parse_from_str::<Regime>, default_value = "supercritical")]
    regime: Regime,

    #[arg(long = "chi-f", value_parser = parse_nonnegative)]
    chi_f: f64,

    #[arg(long = "sigma-p2", value_parser = parse_nonnegative, default_value_t = 0.0)]
    sigma_p2: f64,

    #[arg(long, default_value_t = 100_000)]
    draws: usize,

    #[arg(long, env = "DCL_SEED", default_value_t = 0)]
    seed: u64,

    #[arg(long, value_parser = parse_level, default_value_t = DEFAULT_LEVEL)]
    level: f64,

    #[command(flatten)]
    output: OutputArgs,
}

/// What to run.
#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Estimate(ExperimentConfig),
    Lln(ExperimentConfig),
    Clt(ExperimentConfig),
    ClusterClt(ExperimentConfig),
    WeightedLln(ExperimentConfig),
    GammaSample(GammaSampleConfig),
    CheckIdentity(ExperimentConfig),
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Estimate(_) => "estimate",
            Task::Lln(_) => "lln",
            Task::Clt(_) => "clt",
            Task::ClusterClt(_) => "cluster-clt",
            Task::WeightedLln(_) => "weighted-lln",
            Task::GammaSample(_) => "gamma-sample",
            Task::CheckIdentity(_) => "check-identity",
        }
    }

    pub fn experiment(&self) -> Option<&ExperimentConfig> {
        match self {
            Task::GammaSample(_) => None,
            Task::Estimate(c)
            | Task::Lln(c)
            | Task::Clt(c)
            | Task::ClusterClt(c)
            | Task::WeightedLln(c)
            | Task::CheckIdentity(c) => Some(c),
        }
    }

    pub fn run(&self) -> Result<RunResult> {
        match self {
            Task::Estimate(c) => run_estimate(c),
            Task::Lln(c) => match c.mode {
                Mode::Quenched => run_quenched_lln(c),
                Mode::Annealed => run_annealed_lln(c),
            },
            Task::Clt(c) => match c.mode {
                Mode::Quenched => run_quenched_clt(c),
                Mode::Annealed => run_annealed_clt(c),
            },
            Task::ClusterClt(c) => run_cluster_clt(c),
            Task::WeightedLln(c) => run_weighted_lln_check(c),
            Task::GammaSample(g) => run_gamma_sample(g),
            Task::CheckIdentity(c) => run_identity_check(c),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliInvocation {
    pub task: Task,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

/// Parses a full argument vector, program name first.
pub fn parse_invocation<I, T>(argv: I) -> std::result::Result<CliInvocation, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let (task, output) = match cli.command {
        Command::Estimate(a) => (Task::Estimate(a.config()), a.output),
        Command::Lln(a) => (Task::Lln(a.config()), a.output),
        Command::Clt(a) => (Task::Clt(a.config()), a.output),
        Command::ClusterClt(a) => (Task::ClusterClt(a.config()), a.output),
        Command::WeightedLln(a) => (Task::WeightedLln(a.config()), a.output),
        Command::CheckIdentity(a) => (Task::CheckIdentity(a.config()), a.output),
        Command::GammaSample(g) => (
            Task::GammaSample(GammaSampleConfig {
                sigma2: g.nu.variance(),
                nu: g.nu,
                regime: g.regime,
                chi_f: g.chi_f,
                sigma_p2: g.sigma_p2,
                draws: g.draws,
                master_seed: g.seed,
                level: g.level,
            }),
            g.output,
        ),
    };
    Ok(CliInvocation {
        task,
        out: output.out,
        format: output.format,
    })
}

pub fn report_json(result: &RunResult) -> Result<String> {
    let mut text = serde_json::to_string_pretty(result)?;
    text.push('\n');
    Ok(text)
}

/// One row per record: index, radius, then the statistic with its unit in
/// the header.
pub fn write_samples_csv<W: Write>(result: &RunResult, writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    let header = format!("{} [{}]", result.samples.statistic, result.samples.unit);
    csv.write_record(["index", "radius", header.as_str()])?;
    for rec in &result.records {
        csv.write_record([
            rec.replicate.to_string(),
            rec.radius.to_string(),
            rec.statistic.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

/// Reads back the statistic column of a sample dump.
pub fn read_samples_csv(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut values = Vec::new();
    for row in reader.records() {
        let row = row?;
        let cell = row.get(2).unwrap_or_default();
        values.push(cell.parse::<f64>().map_err(|_| {
            crate::error::invalid(format!("bad statistic `{cell}` in {}", path.display()))
        })?);
    }
    Ok(values)
}

fn emit(inv: &CliInvocation, result: &RunResult) -> Result<()> {
    match &inv.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("report.json"), report_json(result)?)?;
            if inv.format == OutputFormat::Csv {
                let file = fs::File::create(dir.join("samples.csv"))?;
                write_samples_csv(result, io::BufWriter::new(file))?;
            }
        }
        None => match inv.format {
            OutputFormat::Json => io::stdout()
                .lock()
                .write_all(report_json(result)?.as_bytes())?,
            OutputFormat::Csv => write_samples_csv(result, io::stdout().lock())?,
        },
    }
    Ok(())
}

/// Runs the invocation and returns the process exit code.
pub fn execute(inv: &CliInvocation) -> i32 {
    let result = match inv.task.run() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    for d in &result.diagnostics {
        eprintln!("warning: {d}");
    }
    if let Err(e) = emit(inv, &result) {
        eprintln!("error: {e}");
        return EXIT_ERROR;
    }
    for t in result.tests.iter().filter(|t| !t.passed()) {
        eprintln!("test failed: {} (statistic {})", t.name, t.statistic);
    }
    if result.passed() {
        EXIT_PASS
    } else {
        EXIT_TEST_FAILED
    }
}
