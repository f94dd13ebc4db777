//! Thin CLI over the library: profile, inject, impute, bench.
//!
//! Exit codes: 0 success, 2 input or spec error, 3 when every benchmark
//! cell failed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gapforge::benchmark::{self, BenchmarkPlan, SyntheticSpec};
use gapforge::imputers::{self, ImputerSpec};
use gapforge::learners::Task;
use gapforge::missingness::{inject, MissingnessSpec};
use gapforge::tabular::{load_csv_path, write_csv_path, CsvOptions, Table};

#[derive(Parser)]
#[command(
    name = "gapforge",
    about = "Missing-data toolkit: profile gaps, inject missingness, impute, and benchmark",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
    Md,
}

#[derive(Args)]
struct InputOptions {
    /// Cell texts treated as missing on input (repeatable); replaces the
    /// default set {"NaN", "", "null", "undefined", "NA", "na"}.
    #[arg(long = "missing-token")]
    missing_tokens: Vec<String>,
}

impl InputOptions {
    fn csv_options(&self) -> CsvOptions {
        if self.missing_tokens.is_empty() {
            CsvOptions::default()
        } else {
            CsvOptions::with_tokens(self.missing_tokens.iter().cloned())
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Summarize missing cells per column, most affected first.
    Profile {
        /// Input CSV path.
        input: PathBuf,
        #[command(flatten)]
        tokens: InputOptions,
        /// Output path (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Output format: text or json.
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Inject MCAR/MAR/MNAR missingness described by a JSON spec.
    Inject {
        /// Input CSV path.
        input: PathBuf,
        /// MissingnessSpec JSON path.
        spec: PathBuf,
        #[command(flatten)]
        tokens: InputOptions,
        /// Output CSV path (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Seed override; falls back to GAPFORGE_SEED, then the spec seed.
        #[arg(long, env = "GAPFORGE_SEED")]
        seed: Option<u64>,
        /// Token written at missing cells.
        #[arg(long, default_value = "NaN")]
        output_missing_token: String,
    },
    /// Fill missing cells with a strategy described by a JSON spec.
    Impute {
        /// Input CSV path.
        input: PathBuf,
        /// ImputerSpec JSON path.
        spec: PathBuf,
        #[command(flatten)]
        tokens: InputOptions,
        /// Output CSV path (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Fit the imputer on this CSV instead of the input.
        #[arg(long)]
        fit_on: Option<PathBuf>,
        /// Token written at missing cells.
        #[arg(long, default_value = "NaN")]
        output_missing_token: String,
    },
    /// Run a benchmark plan over a CSV or a synthetic dataset.
    Bench {
        /// Input CSV path (omit when using --synth).
        input: Option<PathBuf>,
        /// BenchmarkPlan JSON path.
        #[arg(long)]
        plan: PathBuf,
        /// SyntheticSpec JSON path generating the dataset.
        #[arg(long, conflicts_with = "input")]
        synth: Option<PathBuf>,
        #[command(flatten)]
        tokens: InputOptions,
        /// Report path(s); the extension picks the format (repeatable).
        #[arg(short, long)]
        output: Vec<PathBuf>,
        /// Report format for stdout or extension-less outputs.
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Base-seed override; falls back to GAPFORGE_SEED, then the plan.
        #[arg(long, env = "GAPFORGE_SEED")]
        seed: Option<u64>,
        /// Also write a long-format (fraction,series,value) CSV here.
        #[arg(long)]
        plot_csv: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> gapforge::Result<ExitCode> {
    match command {
        Command::Profile {
            input,
            tokens,
            output,
            format,
        } => cmd_profile(&input, &tokens, output.as_deref(), format),
        Command::Inject {
            input,
            spec,
            tokens,
            output,
            seed,
            output_missing_token,
        } => cmd_inject(
            &input,
            &spec,
            &tokens,
            output.as_deref(),
            seed,
            &output_missing_token,
        ),
        Command::Impute {
            input,
            spec,
            tokens,
            output,
            fit_on,
            output_missing_token,
        } => cmd_impute(
            &input,
            &spec,
            &tokens,
            output.as_deref(),
            fit_on.as_deref(),
            &output_missing_token,
        ),
        Command::Bench {
            input,
            plan,
            synth,
            tokens,
            output,
            format,
            seed,
            plot_csv,
        } => cmd_bench(
            input.as_deref(),
            &plan,
            synth.as_deref(),
            &tokens,
            &output,
            format,
            seed,
            plot_csv.as_deref(),
        ),
    }
}

fn emit(output: Option<&Path>, text: &str) -> gapforge::Result<()> {
    match output {
        Some(path) => fs::write(path, text).map_err(Into::into),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_profile(
    input: &Path,
    tokens: &InputOptions,
    output: Option<&Path>,
    format: Format,
) -> gapforge::Result<ExitCode> {
    let table = load_csv_path(input, &tokens.csv_options())?;
    let profile = table.profile();
    let text = match format {
        Format::Json => {
            let mut sorted = profile.clone();
            sorted.columns = profile
                .sorted_by_missing_desc()
                .into_iter()
                .cloned()
                .collect();
            serde_json::to_string_pretty(&sorted)? + "\n"
        }
        _ => {
            let mut text = String::new();
            if profile.total_missing_cells == 0 {
                text.push_str(&format!(
                    "0 missing cells in {} rows x {} columns\n",
                    profile.n_rows,
                    profile.columns.len()
                ));
            } else {
                let width = profile
                    .columns
                    .iter()
                    .map(|c| c.name.len())
                    .max()
                    .unwrap_or(6)
                    .max("column".len());
                text.push_str(&format!("{:<width$}  missing  fraction\n", "column"));
                for column in profile.sorted_by_missing_desc() {
                    text.push_str(&format!(
                        "{:<width$}  {:>7}  {:>7.1}%\n",
                        column.name,
                        column.missing_count,
                        column.missing_fraction * 100.0
                    ));
                }
                text.push_str(&format!(
                    "total: {} missing cells in {} rows\n",
                    profile.total_missing_cells, profile.n_rows
                ));
            }
            text
        }
    };
    emit(output, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_inject(
    input: &Path,
    spec_path: &Path,
    tokens: &InputOptions,
    output: Option<&Path>,
    seed: Option<u64>,
    output_missing_token: &str,
) -> gapforge::Result<ExitCode> {
    let table = load_csv_path(input, &tokens.csv_options())?;
    let mut spec: MissingnessSpec = serde_json::from_str(&fs::read_to_string(spec_path)?)?;
    if let Some(seed) = seed {
        spec = spec.with_seed(seed);
    }
    let injected = inject(&table, &spec)?;

    let targets = spec.target_columns();
    let (mut missing, mut cells) = (0usize, 0usize);
    for name in &targets {
        let column = injected.table().require_column(name)?;
        missing += column.missing_count();
        cells += column.len();
    }
    let fraction = if cells == 0 {
        0.0
    } else {
        missing as f64 / cells as f64
    };

    match output {
        Some(path) => write_csv_path(injected.table(), path, output_missing_token)?,
        None => {
            let mut buffer = Vec::new();
            gapforge::tabular::write_csv(injected.table(), &mut buffer, output_missing_token)?;
            std::io::stdout().lock().write_all(&buffer)?;
        }
    }
    eprintln!(
        "achieved missing fraction {:.4} over columns [{}] ({} newly masked cells)",
        fraction,
        targets.join(", "),
        injected.newly_missing_count()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_impute(
    input: &Path,
    spec_path: &Path,
    tokens: &InputOptions,
    output: Option<&Path>,
    fit_on: Option<&Path>,
    output_missing_token: &str,
) -> gapforge::Result<ExitCode> {
    let options = tokens.csv_options();
    let table = load_csv_path(input, &options)?;
    let spec: ImputerSpec = serde_json::from_str(&fs::read_to_string(spec_path)?)?;
    let completed = match fit_on {
        Some(train_path) => {
            let train = load_csv_path(train_path, &options)?;
            let model = imputers::fit(&spec, &train)?;
            imputers::transform(&model, &table)?
        }
        None => imputers::fit_transform(&spec, &table)?,
    };
    match output {
        Some(path) => write_csv_path(&completed, path, output_missing_token)?,
        None => {
            let mut buffer = Vec::new();
            gapforge::tabular::write_csv(&completed, &mut buffer, output_missing_token)?;
            std::io::stdout().lock().write_all(&buffer)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn format_for(path: &Path, fallback: Option<Format>) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Format::Json,
        Some("csv") => Format::Csv,
        Some("md") => Format::Md,
        _ => fallback.unwrap_or(Format::Json),
    }
}

fn render_report(
    report: &benchmark::BenchmarkReport,
    format: Format,
) -> gapforge::Result<String> {
    Ok(match format {
        Format::Csv => report.to_csv()?,
        Format::Md | Format::Text => report.to_markdown(),
        Format::Json => report.to_json()? + "\n",
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    input: Option<&Path>,
    plan_path: &Path,
    synth: Option<&Path>,
    tokens: &InputOptions,
    outputs: &[PathBuf],
    format: Option<Format>,
    seed: Option<u64>,
    plot_csv: Option<&Path>,
) -> gapforge::Result<ExitCode> {
    let mut plan: BenchmarkPlan = serde_json::from_str(&fs::read_to_string(plan_path)?)?;
    if let Some(seed) = seed {
        plan.base_seed = seed;
    }
    let table: Table = match (input, synth) {
        (Some(path), None) => load_csv_path(path, &tokens.csv_options())?,
        (None, Some(path)) => {
            let spec: SyntheticSpec = serde_json::from_str(&fs::read_to_string(path)?)?;
            match spec.task {
                Task::Regression => benchmark::synth_regression(&spec)?,
                Task::Classification => benchmark::synth_classification(&spec)?,
            }
        }
        _ => {
            return Err(gapforge::Error::Plan(
                "bench needs either an input CSV or --synth".into(),
            ))
        }
    };

    let report = benchmark::run(&plan, &table)?;
    if outputs.is_empty() {
        let text = render_report(&report, format.unwrap_or(Format::Json))?;
        std::io::stdout().lock().write_all(text.as_bytes())?;
    } else {
        for path in outputs {
            let text = render_report(&report, format_for(path, format))?;
            fs::write(path, text)?;
        }
    }
    if let Some(path) = plot_csv {
        fs::write(path, report.to_plot_csv()?)?;
    }

    let failed = report.cells.iter().filter(|c| c.failed()).count();
    if failed > 0 {
        eprintln!("{failed} of {} cells failed", report.cells.len());
    }
    if report.all_failed() {
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}
