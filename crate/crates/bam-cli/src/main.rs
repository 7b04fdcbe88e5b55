//! `bam`: check, evaluate, verify and audit plain-language business models,
//! and generate spreadsheets from them.
//!
//! Exit codes: 0 success, 1 model error, 2 data or style error (including
//! strict-mode undefined values), 3 verification mismatches, 4 I/O error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bam::eval::{self, EvalOptions, RollupMode, ValueCube};
use bam::grid::expand;
use bam::model::{analyze, SemanticModel};
use bam::parser::parse_model;
use bam::sheet::{self, StyleConfig};

#[derive(Parser)]
#[command(name = "bam", version, about = "Plain-language business model toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and analyze a model, printing a summary.
    Check {
        /// Model file.
        model: PathBuf,
    },
    /// Generate a spreadsheet from a model.
    Generate {
        /// Model file.
        model: PathBuf,
        /// Output file; `.xlsx` selects the xlsx backend unless --backend says otherwise.
        #[arg(short, long)]
        output: PathBuf,
        /// Style configuration file (falls back to the BAM_STYLE environment variable).
        #[arg(long)]
        style: Option<PathBuf>,
        /// Input data to seed into the workbook, as CSV.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Output format.
        #[arg(long, value_enum, default_value_t = Backend::Auto)]
        backend: Backend,
        /// How category roll-up cells are computed.
        #[arg(long, value_enum, default_value_t = RollupArg::Recompute)]
        rollup: RollupArg,
    },
    /// Evaluate a model against input data and print every value.
    Eval {
        /// Model file.
        model: PathBuf,
        /// Input data CSV.
        #[arg(long)]
        data: PathBuf,
        /// Output format.
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
        /// How category roll-ups are computed.
        #[arg(long, value_enum, default_value_t = RollupArg::Recompute)]
        rollup: RollupArg,
        /// Fail on the first undefined value instead of propagating it.
        #[arg(long)]
        strict: bool,
    },
    /// Evaluate a model and compare the results with observed values.
    Verify {
        /// Model file.
        model: PathBuf,
        /// Input data CSV.
        #[arg(long)]
        data: PathBuf,
        /// Observed values CSV to compare against.
        #[arg(long)]
        observed: PathBuf,
        /// Largest absolute difference that still counts as a match.
        #[arg(long, default_value_t = 0.0)]
        tolerance: f64,
        /// How category roll-ups are computed.
        #[arg(long, value_enum, default_value_t = RollupArg::Recompute)]
        rollup: RollupArg,
    },
    /// Inspect a model: dependencies, formulas, sensitivities, documentation.
    #[command(subcommand)]
    Audit(AuditCommand),
}

#[derive(Subcommand)]
enum AuditCommand {
    /// Print the dependency tree of a variable.
    Deps {
        /// Model file.
        model: PathBuf,
        /// Variable to expand.
        variable: String,
    },
    /// List every calculated variable with its formula and reports.
    Census {
        /// Model file.
        model: PathBuf,
    },
    /// Rank the inputs of a target by how strongly they move it.
    Sensitivity {
        /// Model file.
        model: PathBuf,
        /// Input data CSV.
        #[arg(long)]
        data: PathBuf,
        /// Calculated variable to analyze.
        #[arg(long)]
        target: String,
        /// Period index (0-based).
        #[arg(long)]
        period: usize,
        /// Category slice; defaults to the most aggregated one.
        #[arg(long)]
        category: Option<String>,
        /// How category roll-ups are computed.
        #[arg(long, value_enum, default_value_t = RollupArg::Recompute)]
        rollup: RollupArg,
    },
    /// Export the model with commented classification and dependency tables.
    Docs {
        /// Model file.
        model: PathBuf,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Backend {
    /// Pick by file extension: `.xlsx` or the portable text form.
    Auto,
    Portable,
    Xlsx,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum RollupArg {
    /// Apply the formula at the roll-up coordinate.
    Recompute,
    /// Sum the child slices.
    Sum,
}

impl From<RollupArg> for RollupMode {
    fn from(arg: RollupArg) -> RollupMode {
        match arg {
            RollupArg::Recompute => RollupMode::Recompute,
            RollupArg::Sum => RollupMode::Sum,
        }
    }
}

const EXIT_MODEL: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_MISMATCH: u8 = 3;
const EXIT_IO: u8 = 4;

struct Failure {
    code: u8,
    message: String,
}

fn fail<E: std::fmt::Display>(code: u8) -> impl Fn(E) -> Failure {
    move |err| Failure { code, message: err.to_string() }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

/// Write to stdout. A closed pipe (e.g. `bam eval ... | head`) ends the
/// command quietly instead of failing.
fn emit(text: &str) -> Result<(), Failure> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        result => result
            .map_err(|e| Failure { code: EXIT_IO, message: format!("cannot write to stdout: {e}") }),
    }
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    match cli.command {
        Command::Check { model } => {
            let model = load_model(&model)?;
            emit(&format!("{}\n", model.summary()))?;
        }
        Command::Generate { model, output, style, data, backend, rollup } => {
            let model = load_model(&model)?;
            let grid = expand(&model);
            let style = load_style(style.as_deref())?;
            let mut workbook = sheet::build_workbook(&model, &grid, &style, rollup.into())
                .map_err(fail(EXIT_MODEL))?;
            if let Some(data) = data {
                let inputs = load_data(&data, &model, &grid.space)?;
                let result = eval::evaluate(
                    &model,
                    &grid.space,
                    &inputs,
                    EvalOptions { rollup: rollup.into(), strict: false },
                )
                .map_err(fail(EXIT_DATA))?;
                for warning in &result.warnings {
                    eprintln!("warning: {warning}");
                }
                sheet::seed_inputs(&mut workbook, &model, &grid.space, &inputs)
                    .map_err(fail(EXIT_MODEL))?;
                sheet::attach_computed(&mut workbook, &model, &grid.space, &result.cube)
                    .map_err(fail(EXIT_MODEL))?;
            }
            let use_xlsx = match backend {
                Backend::Xlsx => true,
                Backend::Portable => false,
                Backend::Auto => {
                    output.extension().is_some_and(|e| e.eq_ignore_ascii_case("xlsx"))
                }
            };
            if use_xlsx {
                let bytes = sheet::xlsx::render_xlsx(&workbook).map_err(fail(EXIT_MODEL))?;
                fs::write(&output, bytes).map_err(fail(EXIT_IO))?;
            } else {
                let text = sheet::portable::render_portable(&workbook).map_err(fail(EXIT_MODEL))?;
                fs::write(&output, text).map_err(fail(EXIT_IO))?;
            }
            emit(&format!("wrote {}\n", output.display()))?;
        }
        Command::Eval { model, data, format: OutputFormat::Csv, rollup, strict } => {
            let model = load_model(&model)?;
            let grid = expand(&model);
            let inputs = load_data(&data, &model, &grid.space)?;
            let options = EvalOptions { rollup: rollup.into(), strict };
            let result =
                eval::evaluate(&model, &grid.space, &inputs, options).map_err(fail(EXIT_DATA))?;
            for warning in &result.warnings {
                eprintln!("warning: {warning}");
            }
            emit(&eval::cube_to_csv(&model, &grid.space, &result.cube))?;
        }
        Command::Verify { model, data, observed, tolerance, rollup } => {
            let model = load_model(&model)?;
            let grid = expand(&model);
            let inputs = load_data(&data, &model, &grid.space)?;
            let observed = fs::File::open(&observed)
                .map_err(|e| open_failure(&observed, e))?;
            let report =
                eval::verify_against(&model, &grid.space, &inputs, observed, tolerance, rollup.into())
                    .map_err(fail(EXIT_DATA))?;
            emit(&report.to_string())?;
            if !report.is_clean() {
                return Ok(ExitCode::from(EXIT_MISMATCH));
            }
        }
        Command::Audit(audit) => return run_audit(audit),
    }
    Ok(ExitCode::SUCCESS)
}

fn run_audit(command: AuditCommand) -> Result<ExitCode, Failure> {
    match command {
        AuditCommand::Deps { model, variable } => {
            let model = load_model(&model)?;
            let tree = bam::audit::dependency_tree(&model, &variable).map_err(fail(EXIT_MODEL))?;
            emit(&bam::audit::render_tree(&tree))?;
        }
        AuditCommand::Census { model } => {
            let model = load_model(&model)?;
            emit(&bam::audit::render_census(&bam::audit::formula_census(&model)))?;
        }
        AuditCommand::Sensitivity { model, data, target, period, category, rollup } => {
            let model = load_model(&model)?;
            let grid = expand(&model);
            let inputs = load_data(&data, &model, &grid.space)?;
            let report = bam::audit::sensitivity_rank(
                &model,
                &grid.space,
                &inputs,
                &target,
                category.as_deref(),
                period,
                rollup.into(),
            )
            .map_err(|e| match e {
                bam::audit::AuditError::UnknownVariable { .. }
                | bam::audit::AuditError::TargetNotCalculated { .. } => fail(EXIT_MODEL)(e),
                _ => fail(EXIT_DATA)(e),
            })?;
            emit(&report.to_string())?;
        }
        AuditCommand::Docs { model } => {
            let model = load_model(&model)?;
            emit(&bam::audit::export_docs(&model))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn load_model(path: &Path) -> Result<SemanticModel, Failure> {
    let text = read_file(path)?;
    let document = parse_model(&text).map_err(fail(EXIT_MODEL))?;
    analyze(document).map_err(fail(EXIT_MODEL))
}

fn load_style(flag: Option<&Path>) -> Result<StyleConfig, Failure> {
    let env = std::env::var("BAM_STYLE").ok().filter(|v| !v.is_empty());
    let path = match (flag, &env) {
        (Some(path), _) => path.to_path_buf(),
        (None, Some(env)) => PathBuf::from(env),
        (None, None) => return Ok(StyleConfig::default()),
    };
    let text = read_file(&path)?;
    StyleConfig::parse(&text).map_err(fail(EXIT_DATA))
}

fn load_data(path: &Path, model: &SemanticModel, space: &bam::grid::InstanceSpace) -> Result<ValueCube, Failure> {
    let file = fs::File::open(path).map_err(|e| open_failure(path, e))?;
    eval::load_inputs(file, model, space).map_err(fail(EXIT_DATA))
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| open_failure(path, e))
}

fn open_failure(path: &Path, err: std::io::Error) -> Failure {
    Failure { code: EXIT_IO, message: format!("cannot open {}: {err}", path.display()) }
}
