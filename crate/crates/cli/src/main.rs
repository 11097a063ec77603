use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use superfluor_core::analysis::{
    boundary_curves, emission_field, sweep_phase_diagram, table1_report_at, trajectory_jm, write_boundary_csv,
    write_field_csv, write_sweep_csv, DephasingGrid, LossDephasingRatio, SweepSpec, TABLE1_N,
};
use superfluor_core::dicke::delay_time_pure;
use superfluor_core::validation::{run_criterion, CriterionOutcome, CRITERIA};
use superfluor_core::{DickeIndex, Error, HalfInt, InitialState, RateSet, RunConfig, SolverKind};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("validation failed for criteria {0:?}")]
    Validation(Vec<u32>),
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(Error::Json(e))
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Validation(_) => 4,
            CliError::Core(e) => match e {
                Error::Domain(_) | Error::ResourceLimit { .. } | Error::Unsupported(_) | Error::DimensionMismatch { .. } => 2,
                _ => 3,
            },
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "superfluor", version, about = "Superfluorescence of N two-level emitters with dephasing and loss")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve one configuration and write its time series.
    Run(RunArgs),
    /// Effective delay times over a grid of sizes and dephasing rates.
    Sweep(SweepArgs),
    /// The mean (j, m) path of one configuration.
    Trajectory(RunArgs),
    /// Loci where dj/dt changes sign, for several loss/dephasing ratios.
    Boundary(BoundaryArgs),
    /// Collective emission rate over the Dicke triangle.
    Field(FieldArgs),
    /// Derivatives at the characteristic points against their leading forms.
    Table1(Table1Args),
    /// Run the cross-solver acceptance checks.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct RateArgs {
    #[arg(long = "gamma-s", default_value_t = 1.0)]
    gamma_s: f64,
    #[arg(long = "gamma-l", default_value_t = 0.0)]
    gamma_l: f64,
    #[arg(long = "gamma-d", default_value_t = 0.0)]
    gamma_d: f64,
    #[arg(long, default_value_t = 0.0)]
    omega0: f64,
}

impl RateArgs {
    fn rates(&self) -> RateSet {
        RateSet::new(self.gamma_s, self.gamma_l, self.gamma_d).with_omega0(self.omega0)
    }
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output file; standard output when absent. CSV files get a `.meta.json` sidecar.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// oracle, piqs, cumulant1, cumulant2 or bosonic.
    #[arg(long, default_value = "piqs")]
    solver: SolverKind,
    #[arg(long)]
    n: u32,
    #[command(flatten)]
    rates: RateArgs,
    /// Initial cooperation number, e.g. `5` or `9/2`; defaults to N/2.
    #[arg(long)]
    j0: Option<HalfInt>,
    /// Initial `Jz` eigenvalue; defaults to j0.
    #[arg(long, allow_hyphen_values = true)]
    m0: Option<HalfInt>,
    /// Defaults to four times the slower of the incoherent and burst time scales.
    #[arg(long = "t-max")]
    t_max: Option<f64>,
    #[arg(long, default_value_t = 401)]
    samples: usize,
    #[arg(long, default_value_t = 1e-9)]
    rtol: f64,
    /// Emit expectation values divided by their extremal magnitudes.
    #[arg(long)]
    scaled: bool,
    #[command(flatten)]
    output: OutputArgs,
}

impl RunArgs {
    fn config(&self) -> CliResult<RunConfig> {
        let rates = self.rates.rates();
        let t_max = match self.t_max {
            Some(t) => t,
            None => {
                let mut slowest = rates.t0();
                if rates.gamma_s > 0.0 && self.n > 1 {
                    slowest = slowest.max(delay_time_pure(self.n as u64, rates.gamma_s));
                }
                if !slowest.is_finite() {
                    return Err(CliError::Usage("nothing decays with these rates; pass --t-max".into()));
                }
                4.0 * slowest
            }
        };
        let j = self.j0.unwrap_or(HalfInt::half_of(self.n));
        let m = self.m0.unwrap_or(j);
        let mut config = RunConfig::new(self.solver, self.n, rates, t_max);
        config.initial = InitialState::Dicke(DickeIndex::new(self.n, j, m)?);
        config.samples = self.samples;
        config.rtol = self.rtol;
        config.normalize = self.scaled;
        Ok(config)
    }
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, default_value = "cumulant2")]
    solver: SolverKind,
    /// Comma-separated ensemble sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<u32>,
    #[arg(long = "gamma-s", default_value_t = 1.0)]
    gamma_s: f64,
    #[arg(long = "gamma-l", default_value_t = 0.0)]
    gamma_l: f64,
    /// Comma-separated dephasing rates.
    #[arg(long = "gamma-d", value_delimiter = ',', required = true, allow_hyphen_values = true)]
    gamma_d: Vec<f64>,
    /// Read --gamma-d in units of gamma_S N / sqrt(ln N).
    #[arg(long)]
    relative: bool,
    #[arg(long, default_value_t = 401)]
    samples: usize,
    #[arg(long, default_value_t = 1e-8)]
    rtol: f64,
    /// Skip the dense re-solve around each crossing.
    #[arg(long)]
    no_refine: bool,
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct BoundaryArgs {
    #[arg(long)]
    n: u32,
    /// Comma-separated gamma_L / gamma_D values; `0` is pure dephasing, `inf` pure loss.
    #[arg(long, value_delimiter = ',', default_value = "0.1,1,10")]
    ratios: Vec<String>,
    #[arg(long, default_value_t = 201)]
    samples: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct FieldArgs {
    #[arg(long)]
    n: u32,
    #[arg(long = "gamma-s", default_value_t = 1.0)]
    gamma_s: f64,
    #[arg(long, default_value_t = 101)]
    resolution: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct Table1Args {
    #[arg(long, default_value_t = TABLE1_N)]
    n: u32,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Plain text when absent.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Comma-separated criterion numbers; all when absent.
    #[arg(long, value_delimiter = ',')]
    criteria: Vec<u32>,
    /// Also write the outcomes as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
}

fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json_value<T: serde::Serialize>(value: &T, path: Option<&Path>) -> CliResult<()> {
    let mut w = open_output(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn cmd_run(args: &RunArgs) -> CliResult<()> {
    let series = superfluor_core::run(&args.config()?)?;
    match (args.output.format, &args.output.out) {
        (Format::Csv, Some(path)) => {
            series.save_csv(path)?;
        }
        (Format::Csv, None) => series.write_csv(open_output(None)?)?,
        (Format::Json, path) => {
            let mut w = open_output(path.as_deref())?;
            series.write_json(&mut w)?;
            writeln!(w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn cmd_trajectory(args: &RunArgs) -> CliResult<()> {
    let series = superfluor_core::run(&args.config()?)?;
    let tr = trajectory_jm(&series)?;
    match args.output.format {
        Format::Csv => tr.write_csv(open_output(args.output.out.as_deref())?)?,
        Format::Json => write_json_value(&tr, args.output.out.as_deref())?,
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> CliResult<()> {
    let grid = if args.relative {
        DephasingGrid::RelativeToThreshold(args.gamma_d.clone())
    } else {
        DephasingGrid::Absolute(args.gamma_d.clone())
    };
    let mut spec = SweepSpec::new(args.n.clone(), grid, args.gamma_s, args.gamma_l, args.solver);
    spec.samples = args.samples;
    spec.rtol = args.rtol;
    spec.refine = !args.no_refine;
    spec.jobs = args.jobs;
    let rows = sweep_phase_diagram(&spec)?;
    for r in rows.iter().filter(|r| r.error.is_some()) {
        log::warn!("N = {}, gamma_D = {}: {}", r.n, r.gamma_d, r.error.as_deref().unwrap_or_default());
    }
    match args.output.format {
        Format::Csv => write_sweep_csv(&rows, open_output(args.output.out.as_deref())?)?,
        Format::Json => write_json_value(&rows, args.output.out.as_deref())?,
    }
    Ok(())
}

fn parse_ratio(s: &str) -> CliResult<LossDephasingRatio> {
    match s.trim() {
        "0" | "0.0" => Ok(LossDephasingRatio::PureDephasing),
        "inf" | "infinity" => Ok(LossDephasingRatio::PureLoss),
        other => other
            .parse::<f64>()
            .map(LossDephasingRatio::Ratio)
            .map_err(|_| CliError::Usage(format!("`{other}` is not a ratio"))),
    }
}

fn cmd_boundary(args: &BoundaryArgs) -> CliResult<()> {
    let ratios = args.ratios.iter().map(|s| parse_ratio(s)).collect::<CliResult<Vec<_>>>()?;
    let curves = boundary_curves(args.n, &ratios, args.samples)?;
    match args.output.format {
        Format::Csv => write_boundary_csv(&curves, open_output(args.output.out.as_deref())?)?,
        Format::Json => write_json_value(&curves, args.output.out.as_deref())?,
    }
    Ok(())
}

fn cmd_field(args: &FieldArgs) -> CliResult<()> {
    let points = emission_field(args.n, args.gamma_s, args.resolution)?;
    match args.output.format {
        Format::Csv => write_field_csv(&points, open_output(args.output.out.as_deref())?)?,
        Format::Json => write_json_value(&points, args.output.out.as_deref())?,
    }
    Ok(())
}

fn cmd_table1(args: &Table1Args) -> CliResult<()> {
    if args.n < 4 || !args.n.is_multiple_of(4) {
        return Err(CliError::Usage("--n must be a positive multiple of 4".into()));
    }
    let report = table1_report_at(args.n);
    match args.format {
        None => {
            let mut w = open_output(args.out.as_deref())?;
            w.write_all(report.to_text().as_bytes())?;
            w.flush()?;
        }
        Some(Format::Json) => write_json_value(&report, args.out.as_deref())?,
        Some(Format::Csv) => {
            let mut w = open_output(args.out.as_deref())?;
            writeln!(w, "symbol,state,derivative,channel,leading,exact,exact_at_n,leading_at_n,relative_error,passed")?;
            for cell in &report.cells {
                for e in &cell.entries {
                    writeln!(
                        w,
                        "{},{},{},{:?},\"{}\",\"{}\",{:e},{:e},{:e},{}",
                        cell.symbol,
                        cell.state.replace(',', ";"),
                        cell.derivative.label(),
                        e.channel,
                        e.leading,
                        e.exact,
                        e.exact_at_n,
                        e.leading_at_n,
                        e.relative_error,
                        cell.passed()
                    )?;
                }
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> CliResult<()> {
    let ids: Vec<u32> = if args.criteria.is_empty() {
        CRITERIA.iter().map(|(id, _)| *id).collect()
    } else {
        args.criteria.clone()
    };
    let go = || -> CliResult<Vec<CriterionOutcome>> {
        let mut outcomes = Vec::new();
        for id in &ids {
            let outcome = run_criterion(*id).ok_or_else(|| CliError::Usage(format!("no criterion {id}")))?;
            println!("{outcome}");
            outcomes.push(outcome);
        }
        Ok(outcomes)
    };
    let outcomes = match args.jobs {
        Some(k) => rayon_pool(k)?.install(go)?,
        None => go()?,
    };
    if let Some(path) = &args.out {
        write_json_value(&outcomes, Some(path))?;
    }
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(failed))
    }
}

fn rayon_pool(k: usize) -> CliResult<superfluor_core::validation::ThreadPool> {
    superfluor_core::validation::thread_pool(k).map_err(CliError::Core)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Trajectory(a) => cmd_trajectory(a),
        Command::Boundary(a) => cmd_boundary(a),
        Command::Field(a) => cmd_field(a),
        Command::Table1(a) => cmd_table1(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
