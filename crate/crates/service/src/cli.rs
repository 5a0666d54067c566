//! Operator commands behind the `interview` binary.

use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use interview_core::backend::{configure_mock, MockTables};
use interview_core::metrics::{cohort_metrics, parse_cohort, write_cohort};
use interview_core::persona::{load_dir, run_batch, run_persona};
use interview_core::rules::builtin_rule;
use interview_core::{
    Engine, EngineAction, EngineConfig, LanguageBackend, LiveBackend, MockBackend, Mode, PersonaProfile,
};

use crate::api::{load_tree_file, BUNDLED_TREE_NAME};
use crate::config::ServiceConfig;
use crate::error::{ApiError, ErrorCode};

#[derive(Debug, Parser)]
#[command(name = "interview", version, about = "Structured diagnostic interview toolkit")]
pub struct Cli {
    /// Service config file (TOML); INTERVIEW_* environment variables override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tree documents.
    #[command(subcommand)]
    Tree(TreeCommand),
    /// Conduct one interview in the terminal.
    #[command(subcommand)]
    Interview(InterviewCommand),
    /// Persona cohorts.
    #[command(subcommand)]
    Evaluate(EvaluateCommand),
    /// Agreement metrics for a cohort file (one JSON pair per line).
    Metrics { cohort: PathBuf },
    /// Diagnosis rules.
    #[command(subcommand)]
    Rules(RulesCommand),
    /// Run the HTTP service.
    Serve,
}

#[derive(Debug, Subcommand)]
pub enum TreeCommand {
    /// Print every structural violation; exit 0 only when there are none.
    Validate { file: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum InterviewCommand {
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Tree file, or `mini` for the bundled tree.
    pub tree: String,
    #[arg(long, conflicts_with = "interactive")]
    pub persona: Option<PathBuf>,
    #[arg(long)]
    pub interactive: bool,
    /// Deterministic mock backend instead of the configured live endpoint.
    #[arg(long)]
    pub mock: bool,
    #[arg(long, default_value = "psycot")]
    pub mode: Mode,
    /// Also write transcript.json, trace.json and report.txt here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum EvaluateCommand {
    Batch(BatchArgs),
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    pub tree: String,
    pub personas: PathBuf,
    #[arg(long)]
    pub mock: bool,
    #[arg(long, default_value = "psycot")]
    pub mode: Mode,
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
    /// Directory for cohort.jsonl, per-module cohort files and metrics.txt.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Mock only: flip the judge phrases of these nodes.
    #[arg(long = "mislabel")]
    pub mislabel: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum RulesCommand {
    /// Print a disorder's rule as JSON.
    Export { disorder: String },
}

pub struct Io<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
    pub input: &'a mut dyn BufRead,
}

fn fail(code: ErrorCode, message: impl std::fmt::Display) -> ApiError {
    ApiError::new(code, message.to_string())
}

fn io_fail(e: std::io::Error) -> ApiError {
    fail(ErrorCode::Validation, e)
}

/// Runs one command; returns the process exit code.
pub fn run(cli: Cli, io: &mut Io<'_>) -> i32 {
    let result = match ServiceConfig::load(cli.config.as_deref()) {
        Ok(config) => dispatch(cli.command, &config, io),
        Err(e) => Err(fail(ErrorCode::Validation, e)),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(io.err, "error: {e}");
            2
        }
    }
}

fn dispatch(command: Command, config: &ServiceConfig, io: &mut Io<'_>) -> Result<i32, ApiError> {
    match command {
        Command::Tree(TreeCommand::Validate { file }) => validate(&file, io),
        Command::Interview(InterviewCommand::Run(args)) => interview(&args, config, io),
        Command::Evaluate(EvaluateCommand::Batch(args)) => batch(&args, config, io),
        Command::Metrics { cohort } => {
            let text = fs::read_to_string(&cohort).map_err(io_fail)?;
            let pairs = parse_cohort(&text).map_err(|e| fail(ErrorCode::Validation, e))?;
            let m = cohort_metrics(&pairs).map_err(|e| fail(ErrorCode::Validation, e))?;
            write!(io.out, "{}", m.table()).map_err(io_fail)?;
            Ok(0)
        }
        Command::Rules(RulesCommand::Export { disorder }) => {
            let rule = builtin_rule(&disorder).map_err(|e| fail(ErrorCode::Validation, e))?;
            writeln!(io.out, "{}", rule.to_json()).map_err(io_fail)?;
            Ok(0)
        }
        Command::Serve => {
            let rt = tokio::runtime::Runtime::new().map_err(io_fail)?;
            rt.block_on(crate::api::serve(config))?;
            Ok(0)
        }
    }
}

fn validate(file: &Path, io: &mut Io<'_>) -> Result<i32, ApiError> {
    let text = fs::read_to_string(file).map_err(io_fail)?;
    let tree = interview_core::parse_tree(&text).map_err(|e| fail(ErrorCode::Validation, e))?;
    let report = interview_core::validate_tree(&tree);
    for v in &report.violations {
        writeln!(io.out, "{v}").map_err(io_fail)?;
    }
    if report.is_valid() {
        writeln!(io.out, "ok: {} nodes", tree.len()).map_err(io_fail)?;
        Ok(0)
    } else {
        Ok(1)
    }
}

pub fn load_engine(tree: &str) -> Result<Engine, ApiError> {
    if tree == BUNDLED_TREE_NAME {
        return Ok(Engine::bundled());
    }
    load_tree_file(Path::new(tree)).map(|(_, e)| e)
}

fn backend(mock: bool, config: &ServiceConfig) -> Box<dyn LanguageBackend> {
    if mock {
        Box::new(MockBackend::bundled())
    } else {
        Box::new(LiveBackend::new(config.backend.live.clone()))
    }
}

fn show(action: &EngineAction) -> String {
    match action {
        EngineAction::PresentForcedChoice { question } => {
            format!("{}\n  A) {}\n  B) {}", question.text, question.option_a, question.option_b)
        }
        other => other.utterance().unwrap_or_default().to_string(),
    }
}

fn interview(args: &RunArgs, config: &ServiceConfig, io: &mut Io<'_>) -> Result<i32, ApiError> {
    let engine = load_engine(&args.tree)?;
    let backend = backend(args.mock, config);
    let engine_config = config.engine.clone();
    let (state, _trace, report) = match (&args.persona, args.interactive) {
        (Some(path), _) => {
            let profile = PersonaProfile::load(path).map_err(|e| fail(ErrorCode::Validation, e))?;
            let run = run_persona(&engine, &profile, backend.as_ref(), &engine_config, args.mode).map_err(|e| {
                match e {
                    interview_core::persona::RunError::Session(s) => ApiError::from(s),
                    other => fail(ErrorCode::Validation, other),
                }
            })?;
            (run.state, run.trace, run.report)
        }
        (None, true) => interactive(&engine, backend.as_ref(), &engine_config, args.mode, io)?,
        (None, false) => return Err(fail(ErrorCode::Validation, "pass --persona <file> or --interactive")),
    };
    if args.persona.is_some() {
        for turn in &state.transcript {
            let who = match turn.strategy {
                Some(s) => format!("interviewer/{}", s.as_str()),
                None => "participant".to_string(),
            };
            writeln!(io.out, "[{}] {who}: {}", turn.node, turn.text).map_err(io_fail)?;
        }
    }
    writeln!(io.out, "\n{}", report.human).map_err(io_fail)?;
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(io_fail)?;
        let transcript = serde_json::to_string_pretty(&state.transcript).expect("transcript serializes");
        fs::write(dir.join("transcript.json"), transcript).map_err(io_fail)?;
        fs::write(dir.join("trace.json"), &report.machine).map_err(io_fail)?;
        fs::write(dir.join("report.txt"), &report.human).map_err(io_fail)?;
    }
    Ok(0)
}

type Finished = (interview_core::SessionState, interview_core::PsyCoTTrace, interview_core::DiagnosisReport);

fn interactive(
    engine: &Engine,
    backend: &dyn LanguageBackend,
    config: &EngineConfig,
    mode: Mode,
    io: &mut Io<'_>,
) -> Result<Finished, ApiError> {
    let (mut state, mut action) = engine.start_session("interactive", config.clone(), backend)?;
    while action != EngineAction::DiagnosisReady {
        writeln!(io.out, "{}", show(&action)).map_err(io_fail)?;
        write!(io.out, "> ").map_err(io_fail)?;
        io.out.flush().map_err(io_fail)?;
        let mut line = String::new();
        if io.input.read_line(&mut line).map_err(io_fail)? == 0 {
            return Err(fail(ErrorCode::Incomplete, "input ended before the interview finished"));
        }
        let mut reply = line.trim().to_string();
        if let EngineAction::PresentForcedChoice { question } = &action {
            match reply.to_ascii_lowercase().as_str() {
                "a" => reply = question.option_a.clone(),
                "b" => reply = question.option_b.clone(),
                _ => {}
            }
        }
        if reply.is_empty() {
            continue;
        }
        match engine.step(&state, &reply, backend) {
            Ok((s, a)) => (state, action) = (s, a),
            Err(interview_core::SessionError::Backend(e)) => {
                writeln!(io.err, "backend unavailable, please answer again: {e}").map_err(io_fail)?;
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(engine.finalize(&state, backend, mode)?)
}

fn batch(args: &BatchArgs, config: &ServiceConfig, io: &mut Io<'_>) -> Result<i32, ApiError> {
    let engine = load_engine(&args.tree)?;
    let profiles = load_dir(&args.personas).map_err(|e| fail(ErrorCode::Validation, e))?;
    if !args.mislabel.is_empty() && !args.mock {
        return Err(fail(ErrorCode::Validation, "--mislabel needs --mock"));
    }
    let backend: Box<dyn LanguageBackend> = if args.mock {
        let mut tables = MockTables::bundled();
        for node in &args.mislabel {
            tables.mislabel(node);
        }
        Box::new(configure_mock(tables))
    } else {
        backend(false, config)
    };
    let output = run_batch(&engine, &profiles, backend.as_ref(), &config.engine, args.mode, args.workers);
    for (name, e) in &output.failures {
        writeln!(io.err, "persona {name} failed: {e}").map_err(io_fail)?;
    }
    fs::create_dir_all(&args.out).map_err(io_fail)?;
    let pooled = output.pooled();
    fs::write(args.out.join("cohort.jsonl"), write_cohort(&pooled)).map_err(io_fail)?;
    for (module, pairs) in &output.pairs {
        fs::write(args.out.join(format!("cohort-{module}.jsonl")), write_cohort(pairs)).map_err(io_fail)?;
    }
    let metrics = cohort_metrics(&pooled).map_err(|e| fail(ErrorCode::Validation, e))?;
    let mut table = String::new();
    for (module, pairs) in &output.pairs {
        if let Ok(m) = cohort_metrics(pairs) {
            table.push_str(&format!(
                "{module}: n {} kappa {:.3} macro_f1 {:.3}\n",
                pairs.len(),
                m.kappa,
                m.macro_f1
            ));
        }
    }
    table.push_str(&format!("pooled over {} pairs\n", pooled.len()));
    table.push_str(&metrics.table());
    fs::write(args.out.join("metrics.txt"), &table).map_err(io_fail)?;
    write!(io.out, "{table}").map_err(io_fail)?;
    Ok(if output.failures.is_empty() { 0 } else { 1 })
}
