use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use tempotree::backend::{EndpointConfig, RetryPolicy};
use tempotree::experiment::{
    read_record, read_records, replay, run_experiment, write_report, BackendSpec, ExperimentConfig, Method,
    ReplayOutcome, TaskKind,
};
use tempotree::game24::{format_dataset, generate_dataset, oracle_solve, parse_dataset, parse_expression, verify_expression, DatasetOptions};
use tempotree::report::build_report;
use tempotree::writing::{format_instances, generate_instances};

#[derive(Parser)]
#[command(name = "tempotree", version, about = "Tree-of-thought search with adaptive sampling temperature")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch of (instance, repeat) searches and write records and reports.
    Run(RunArgs),
    /// Rebuild reports from stored run records.
    Report(ReportArgs),
    /// List the solution types of puzzle instances.
    Oracle(OracleArgs),
    /// Check an expression against four numbers; exits 1 unless it makes 24.
    Verify {
        expression: String,
        #[arg(num_args = 4, required = true, allow_negative_numbers = true)]
        numbers: Vec<i64>,
    },
    /// Re-execute a record on the simulated backend and diff.
    Replay { record: PathBuf },
    /// Emit a generated dataset.
    GenDataset(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    Simulated,
    Http,
}

#[derive(Args)]
struct RunArgs {
    /// Built-in preset: game24-t2ot or cw-t2ot.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// TOML or JSON config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    task: Option<TaskKind>,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Number of generated instances when no dataset is given.
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long, value_enum)]
    backend: Option<BackendKind>,
    #[arg(long, default_value = "https://api.openai.com/v1")]
    base_url: String,
    #[arg(long, default_value = "gpt-4-0613")]
    model: String,
    /// Environment variable holding the API key.
    #[arg(long, default_value = "OPENAI_API_KEY")]
    api_key_env: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    parallel: Option<usize>,
    /// Print the report as JSON instead of tables.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Args)]
struct ReportArgs {
    /// Output directory of a run, or a directory of record files.
    dir: PathBuf,
    /// Config whose price table is used; defaults apply otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Where to write report.{json,txt,csv}; defaults to `dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct OracleArgs {
    /// Four numbers; omit when using --dataset.
    #[arg(num_args = 4, required_unless_present = "dataset")]
    numbers: Vec<i64>,
    #[arg(long, conflicts_with = "numbers")]
    dataset: Option<PathBuf>,
    /// One JSON object per line instead of tab-separated fields.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value = "game24")]
    task: TaskKind,
    #[arg(long, default_value_t = 50)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    min: i64,
    #[arg(long, default_value_t = 13)]
    max: i64,
    /// Keep unsolvable quadruples too.
    #[arg(long)]
    include_unsolvable: bool,
    /// Write to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_config(a: &RunArgs) -> Result<ExperimentConfig> {
    let mut config = match (&a.preset, &a.config) {
        (Some(name), _) => ExperimentConfig::preset(name).ok_or_else(|| anyhow!("unknown preset {name:?}"))?,
        (None, Some(path)) => ExperimentConfig::from_file(path)?,
        (None, None) => match a.task {
            Some(TaskKind::CreativeWriting) => ExperimentConfig::cw_t2ot(),
            _ => ExperimentConfig::game24_t2ot(),
        },
    };
    if let Some(task) = a.task {
        if task != config.task {
            // switch to that task's preset parameters, keeping nothing task-specific
            config = ExperimentConfig {
                method: config.method,
                ..match task {
                    TaskKind::Game24 => ExperimentConfig::game24_t2ot(),
                    TaskKind::CreativeWriting => ExperimentConfig::cw_t2ot(),
                }
            };
        }
    }
    if let Some(m) = a.method {
        config.method = m;
    }
    if let Some(d) = &a.dataset {
        config.dataset = Some(d.clone());
    }
    if let Some(n) = a.instances {
        config.instances = n;
    }
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if let Some(r) = a.repeats {
        config.repeats = r;
    }
    if let Some(p) = a.parallel {
        config.parallel = p;
    }
    if let Some(o) = &a.out {
        config.out = Some(o.clone());
    }
    match a.backend {
        Some(BackendKind::Simulated) if !config.backend.is_simulated() => config.backend = BackendSpec::default(),
        Some(BackendKind::Http) if config.backend.is_simulated() => {
            config.backend = BackendSpec::Http {
                endpoint: EndpointConfig {
                    base_url: a.base_url.clone(),
                    model: a.model.clone(),
                    api_key_env: a.api_key_env.clone(),
                    timeout_secs: 120,
                },
                retry: RetryPolicy::default(),
            }
        }
        _ => {}
    }
    config.validate()?;
    Ok(config)
}

fn cmd_run(a: RunArgs) -> Result<ExitCode> {
    let config = build_config(&a)?;
    log::info!(
        "{} {} on {} instance(s) x {} repeat(s)",
        config.task,
        config.method,
        config.dataset.as_ref().map_or(config.instances.to_string(), |p| p.display().to_string()),
        config.repeats
    );
    let batch = run_experiment(&config)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&batch.report)?);
    } else {
        print!("{}", batch.report.render_text());
    }
    if batch.report.incomplete > 0 {
        log::warn!("{} of {} runs did not complete", batch.report.incomplete, batch.report.runs);
    }
    if let Some(out) = &config.out {
        eprintln!("wrote {} records to {}", batch.records.len(), out.join("records").display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(a: ReportArgs) -> Result<ExitCode> {
    let nested = a.dir.join("records");
    let records_dir = if nested.is_dir() { nested } else { a.dir.clone() };
    let records = read_records(&records_dir)?;
    if records.is_empty() {
        bail!("no records in {}", records_dir.display());
    }
    let prices = match &a.config {
        Some(p) => ExperimentConfig::from_file(p)?.prices,
        None => ExperimentConfig::default().prices,
    };
    let report = build_report(&records, &prices);
    write_report(a.out.as_deref().unwrap_or(&a.dir), &report)?;
    match a.format {
        Format::Text => print!("{}", report.render_text()),
        Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
        Format::Csv => print!("{}", report.render_csv()),
    }
    Ok(ExitCode::SUCCESS)
}

fn oracle_line(q: [i64; 4], json: bool) -> Result<String> {
    let r = oracle_solve(q);
    let instance = q.map(|n| n.to_string()).join(" ");
    let forms: Vec<&str> = r.forms.keys().map(|f| f.as_str()).collect();
    if json {
        let examples: Vec<String> = r.forms.values().map(|e| e.to_string()).collect();
        return Ok(serde_json::to_string(&serde_json::json!({
            "instance": q,
            "solvable": r.solvable(),
            "types": r.type_count(),
            "forms": forms,
            "examples": examples,
        }))?);
    }
    let status = if r.solvable() { "solvable" } else { "unsolvable" };
    let list = if forms.is_empty() { "-".to_string() } else { forms.join("; ") };
    Ok(format!("{instance}\t{status}\t{}\t{list}", r.type_count()))
}

fn cmd_oracle(a: OracleArgs) -> Result<ExitCode> {
    let instances = match &a.dataset {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| path.display().to_string())?;
            parse_dataset(&text)?
        }
        None => vec![[a.numbers[0], a.numbers[1], a.numbers[2], a.numbers[3]]],
    };
    for q in instances {
        println!("{}", oracle_line(q, a.json)?);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(expression: &str, numbers: &[i64]) -> Result<ExitCode> {
    let expr = match parse_expression(expression) {
        Ok(e) => e,
        Err(e) => {
            println!("invalid: {e}");
            return Ok(ExitCode::FAILURE);
        }
    };
    if verify_expression(&expr, numbers) {
        println!("valid: {expr} = 24");
        return Ok(ExitCode::SUCCESS);
    }
    let mut used = expr.leaves();
    let mut given = numbers.to_vec();
    used.sort_unstable();
    given.sort_unstable();
    if used != given {
        println!("invalid: uses {used:?}, expected {given:?}");
    } else {
        let value = expr.eval().map_or("undefined".to_string(), |v| tempotree::game24::format_number(&v));
        println!("invalid: {expr} = {value}");
    }
    Ok(ExitCode::FAILURE)
}

fn cmd_replay(path: &Path) -> Result<ExitCode> {
    let record = read_record(path)?;
    match replay(&record)? {
        ReplayOutcome::Identical => {
            println!("identical");
            Ok(ExitCode::SUCCESS)
        }
        ReplayOutcome::Differs { line, stored, replayed } => {
            println!("differs at line {line}");
            println!("- {stored}");
            println!("+ {replayed}");
            Ok(ExitCode::FAILURE)
        }
    }
}

fn cmd_gen(a: GenArgs) -> Result<ExitCode> {
    let text = match a.task {
        TaskKind::Game24 => {
            if a.min < 1 || a.min > a.max {
                bail!("need 1 <= min <= max");
            }
            format_dataset(&generate_dataset(&DatasetOptions {
                count: a.count,
                min: a.min,
                max: a.max,
                seed: a.seed,
                solvable_only: !a.include_unsolvable,
            }))
        }
        TaskKind::CreativeWriting => format_instances(&generate_instances(a.count, a.seed)),
    };
    match &a.out {
        Some(path) => std::fs::write(path, text).with_context(|| path.display().to_string())?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Report(a) => cmd_report(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Verify { expression, numbers } => cmd_verify(&expression, &numbers),
        Command::Replay { record } => cmd_replay(&record),
        Command::GenDataset(a) => cmd_gen(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(2)
    })
}
