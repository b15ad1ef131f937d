//! Command-line front end.
//!
//! Every command reads one JSON config document, writes one JSON report
//! (and, for `solve`, a CSV curve), and exits with a stable code:
//! 0 success, 1 verification failure, 2 usage or config error,
//! 3 model validation error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::classifier::{evaluate, Classifier, Evaluation, ObjectiveWeights};
use crate::dist::{ContinuousDist, NumericsConfig};
use crate::error::Error;
use crate::model::{Environment, SignalModel};
use crate::oracle::{run_suite, simulate_population, EmpiricalEvaluation, TrialConfig, TrialReport, ZScores};
use crate::solver::{check_conditions, solve_optimal, ConditionReport, SolveReport, ZERO_GAP_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_MODEL: i32 = 3;

pub const CSV_HEADER: &str = "tau,gap_pos,gap_neg,prevalence_pos,prevalence_neg,value_pos,value_neg";

#[derive(Debug, Parser)]
#[command(
    name = "perfclass",
    version,
    about = "Optimal threshold and negative-threshold classifiers under outcome performativity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Report output path (defaults to stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// CSV curve output path (solve and paper-example).
    #[arg(long, global = true)]
    csv: Option<PathBuf>,

    /// Overrides the seed of the verify or simulate block.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
enum Command {
    /// Find the best positive, negative and constant rules.
    Solve,
    /// Evaluate one classifier and its dominance conditions.
    Evaluate,
    /// Run the randomized dominance suite.
    Verify,
    /// Monte Carlo population simulation against the analytic values.
    Simulate,
    /// Solve the built-in example where a negative threshold wins.
    PaperExample,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Evaluate => "evaluate",
            Command::Verify => "verify",
            Command::Simulate => "simulate",
            Command::PaperExample => "paper-example",
        }
    }
}

/// Signal block of the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalBlock {
    pub f0: ContinuousDist,
    pub f1: ContinuousDist,
}

/// Environment block; validated into an [`Environment`] after parsing so that
/// model errors are reported separately from syntax errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentBlock {
    pub cost: ContinuousDist,
    pub r1: f64,
    pub r0: f64,
    pub signal: SignalBlock,
}

impl EnvironmentBlock {
    pub fn build(&self) -> Result<Environment, Error> {
        let signal = SignalModel::new(self.signal.f0, self.signal.f1)?;
        Environment::new(self.cost, self.r1, self.r0, signal)
    }

    pub fn paper_example() -> Self {
        EnvironmentBlock {
            cost: ContinuousDist::Gaussian { mu: 0.75, sigma: 1.0 },
            r1: 5.0,
            r0: 0.0,
            signal: SignalBlock {
                f0: ContinuousDist::Gaussian { mu: 0.0, sigma: 1.0 },
                f1: ContinuousDist::Gaussian { mu: 1.0, sigma: 1.0 },
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    #[default]
    Accuracy,
    Compliance,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveBlock {
    #[serde(default)]
    pub preset: Preset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b0: Option<f64>,
}

impl ObjectiveBlock {
    pub fn weights(&self) -> Result<ObjectiveWeights, String> {
        let given = [self.a1, self.a0, self.b1, self.b0];
        match self.preset {
            Preset::Accuracy | Preset::Compliance if given.iter().any(Option::is_some) => Err(
                "objective weights may only be given with preset \"custom\"".to_string(),
            ),
            Preset::Accuracy => Ok(ObjectiveWeights::accuracy()),
            Preset::Compliance => Ok(ObjectiveWeights::compliance()),
            Preset::Custom => match given {
                [Some(a1), Some(a0), Some(b1), Some(b0)] => Ok(ObjectiveWeights::new(a1, a0, b1, b0)),
                _ => Err("custom objective needs a1, a0, b1 and b0".to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateBlock {
    pub classifier: Classifier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateBlock {
    pub n: u64,
    #[serde(default)]
    pub seed: u64,
    pub classifier: Classifier,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

/// One JSON document per run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub environment: Option<EnvironmentBlock>,
    #[serde(default)]
    pub objective: ObjectiveBlock,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluate: Option<EvaluateBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<TrialConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateBlock>,
    #[serde(default)]
    pub output: OutputBlock,
}

impl RunConfig {
    pub fn paper_example() -> Self {
        RunConfig {
            environment: Some(EnvironmentBlock::paper_example()),
            ..RunConfig::default()
        }
    }
}

/// Config plus the weights its objective block resolves to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub command: String,
    pub config: RunConfig,
    pub weights: ObjectiveWeights,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutput {
    pub resolved: ResolvedConfig,
    pub warning: Option<String>,
    pub report: SolveReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateOutput {
    pub resolved: ResolvedConfig,
    pub classifier: Classifier,
    pub evaluation: Evaluation,
    pub objective_value: f64,
    pub conditions: Option<ConditionReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutput {
    pub resolved: ResolvedConfig,
    pub passed: bool,
    pub report: TrialReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateOutput {
    pub resolved: ResolvedConfig,
    pub classifier: Classifier,
    pub analytic: Evaluation,
    pub empirical: EmpiricalEvaluation,
    pub z_scores: ZScores,
}

/// A failed run: exit code plus message.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn model(err: Error) -> Self {
        Failure {
            code: if err.is_model_error() || matches!(err, Error::Parameter(_)) {
                EXIT_MODEL
            } else {
                EXIT_USAGE
            },
            message: err.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = if err.is_model_error() { EXIT_MODEL } else { EXIT_USAGE };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    match dispatch(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    let mut config = match (&cli.config, cli.command) {
        (_, Command::PaperExample) => {
            if cli.config.is_some() {
                return Err(Failure::usage("paper-example takes no --config"));
            }
            RunConfig::paper_example()
        }
        (Some(path), _) => load_config(path)?,
        (None, _) => return Err(Failure::usage("--config <path> is required")),
    };
    apply_overrides(cli, &mut config);
    check_blocks(cli.command, &config)?;
    config.numerics.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let weights = config.objective.weights().map_err(Failure::usage)?;
    if !weights.is_finite() {
        return Err(Failure::usage("objective weights must be finite"));
    }
    let resolved = ResolvedConfig {
        command: cli.command.name().to_string(),
        config: config.clone(),
        weights,
    };

    match cli.command {
        Command::Solve => cmd_solve(&config, resolved, stdout, stderr),
        Command::Evaluate => cmd_evaluate(&config, resolved, stdout),
        Command::Verify => cmd_verify(&config, resolved, stdout),
        Command::Simulate => cmd_simulate(&config, resolved, stdout),
        Command::PaperExample => cmd_paper_example(&config, resolved, stdout),
    }
}

fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("invalid config {}: {e}", path.display())))
}

fn apply_overrides(cli: &Cli, config: &mut RunConfig) {
    if let Some(out) = &cli.out {
        config.output.report = Some(out.clone());
    }
    if let Some(csv) = &cli.csv {
        config.output.csv = Some(csv.clone());
    }
    if let Some(seed) = cli.seed {
        if let Some(sim) = config.simulate.as_mut() {
            sim.seed = seed;
        }
        if cli.command == Command::Verify {
            config.verify.get_or_insert_with(TrialConfig::default).seed = seed;
        }
    }
}

/// At most one command block, and it must belong to the invoked command.
fn check_blocks(command: Command, config: &RunConfig) -> Result<(), Failure> {
    let present: Vec<&str> = [
        ("evaluate", config.evaluate.is_some()),
        ("verify", config.verify.is_some()),
        ("simulate", config.simulate.is_some()),
    ]
    .into_iter()
    .filter_map(|(name, on)| on.then_some(name))
    .collect();
    if present.len() > 1 {
        return Err(Failure::usage(format!(
            "config has more than one command block: {}",
            present.join(", ")
        )));
    }
    let expected = match command {
        Command::Evaluate => Some("evaluate"),
        Command::Simulate => Some("simulate"),
        Command::Verify => Some("verify"),
        Command::Solve | Command::PaperExample => None,
    };
    if let Some(&block) = present.first() {
        if Some(block) != expected {
            return Err(Failure::usage(format!(
                "\"{block}\" block does not belong to the {} command",
                command.name()
            )));
        }
    }
    match command {
        Command::Evaluate if config.evaluate.is_none() => {
            Err(Failure::usage("evaluate needs an \"evaluate\" block with a classifier"))
        }
        Command::Simulate if config.simulate.is_none() => {
            Err(Failure::usage("simulate needs a \"simulate\" block"))
        }
        Command::Solve | Command::Evaluate | Command::Simulate if config.environment.is_none() => {
            Err(Failure::usage("config needs an \"environment\" block"))
        }
        _ => Ok(()),
    }
}

fn environment(config: &RunConfig) -> Result<Environment, Failure> {
    config
        .environment
        .as_ref()
        .ok_or_else(|| Failure::usage("config needs an \"environment\" block"))?
        .build()
        .map_err(Failure::model)
}

fn cmd_solve(
    config: &RunConfig,
    resolved: ResolvedConfig,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, Failure> {
    let (output, _) = solve_output(config, resolved)?;
    if let Some(w) = &output.warning {
        let _ = writeln!(stderr, "warning: {w}");
    }
    emit_solve(config, &output, stdout)?;
    Ok(EXIT_OK)
}

fn solve_output(config: &RunConfig, resolved: ResolvedConfig) -> Result<(SolveOutput, Environment), Failure> {
    let env = environment(config)?;
    let report = solve_optimal(&env, &resolved.weights, &config.numerics)?;
    let warning = report.guarantee_void.then(|| report.warnings[0].clone());
    Ok((
        SolveOutput {
            resolved,
            warning,
            report,
        },
        env,
    ))
}

fn emit_solve(config: &RunConfig, output: &SolveOutput, stdout: &mut dyn Write) -> Result<(), Failure> {
    if let Some(csv) = &config.output.csv {
        write_atomic(csv, curve_csv(&output.report).as_bytes())?;
    }
    emit_json(config, output, stdout)
}

fn cmd_evaluate(
    config: &RunConfig,
    resolved: ResolvedConfig,
    stdout: &mut dyn Write,
) -> Result<i32, Failure> {
    let env = environment(config)?;
    let classifier = config
        .evaluate
        .as_ref()
        .map(|b| b.classifier.clone())
        .ok_or_else(|| Failure::usage("missing evaluate block"))?;
    let evaluation = evaluate(&env, &classifier);
    let objective_value = resolved
        .weights
        .payoff(evaluation.prevalence, evaluation.delta1, evaluation.delta0);
    let conditions = if evaluation.gap.abs() > ZERO_GAP_TOL {
        Some(check_conditions(&env, &classifier, &resolved.weights)?)
    } else {
        None
    };
    let output = EvaluateOutput {
        resolved,
        classifier,
        evaluation,
        objective_value,
        conditions,
    };
    emit_json(config, &output, stdout)?;
    Ok(EXIT_OK)
}

fn cmd_verify(
    config: &RunConfig,
    resolved: ResolvedConfig,
    stdout: &mut dyn Write,
) -> Result<i32, Failure> {
    let trials = config.verify.clone().unwrap_or_default();
    trials.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let report = run_suite(&trials)?;
    let passed = report.passed();
    let output = VerifyOutput {
        resolved,
        passed,
        report,
    };
    emit_json(config, &output, stdout)?;
    Ok(if passed { EXIT_OK } else { EXIT_VERIFICATION_FAILED })
}

fn cmd_simulate(
    config: &RunConfig,
    resolved: ResolvedConfig,
    stdout: &mut dyn Write,
) -> Result<i32, Failure> {
    let block = config
        .simulate
        .as_ref()
        .ok_or_else(|| Failure::usage("missing simulate block"))?;
    if block.n < 1 {
        return Err(Failure::usage("simulate.n must be at least 1"));
    }
    let env = environment(config)?;
    let analytic = evaluate(&env, &block.classifier);
    let empirical = simulate_population(&env, &block.classifier, block.n, block.seed)?;
    let output = SimulateOutput {
        resolved,
        classifier: block.classifier.clone(),
        z_scores: empirical.z_scores(&analytic),
        analytic,
        empirical,
    };
    emit_json(config, &output, stdout)?;
    Ok(EXIT_OK)
}

fn cmd_paper_example(
    config: &RunConfig,
    resolved: ResolvedConfig,
    stdout: &mut dyn Write,
) -> Result<i32, Failure> {
    let (output, env) = solve_output(config, resolved)?;
    let _ = stdout.write_all(paper_example_table(&env, &output.report).as_bytes());
    if let Some(csv) = &config.output.csv {
        write_atomic(csv, curve_csv(&output.report).as_bytes())?;
    }
    if let Some(path) = &config.output.report {
        let text = render_json(&output).map_err(|e| Failure::usage(e.to_string()))?;
        write_atomic(path, text.as_bytes())?;
    }
    Ok(EXIT_OK)
}

/// Side-by-side summary of the best positive and negative rules.
pub fn paper_example_table(env: &Environment, report: &SolveReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<10} {:>10} {:>10} {:>12} {:>10}\n",
        "family", "tau", "r*gap", "prevalence", "accuracy"
    ));
    for (name, rule) in [("positive", &report.best_positive), ("negative", &report.best_negative)] {
        let tau = match rule.classifier {
            Classifier::PositiveThreshold { tau } | Classifier::NegativeThreshold { tau } => tau,
            _ => f64::NAN,
        };
        let e = &rule.evaluation;
        out.push_str(&format!(
            "{:<10} {:>10.4} {:>10.4} {:>12.4} {:>10.4}\n",
            name,
            tau,
            env.r() * e.gap,
            e.prevalence,
            e.accuracy
        ));
    }
    out.push_str(&format!(
        "winner: {:?} (value {:.4}), score_monotonicity_violated = {}\n",
        report.winner, report.winning_rule.value, report.score_monotonicity_violated
    ));
    out
}

/// The report curve as CSV, one row per grid point.
pub fn curve_csv(report: &SolveReport) -> String {
    let mut out = String::with_capacity(report.curve.len() * 128);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for p in &report.curve {
        let row = [
            p.tau,
            p.gap_pos,
            p.gap_neg,
            p.prevalence_pos,
            p.prevalence_neg,
            p.value_pos,
            p.value_neg,
        ]
        .map(|v| round_sig(v).to_string());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round_sig).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to 12 significant digits.
pub fn render_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    let mut text = serde_json::to_string_pretty(&v)?;
    text.push('\n');
    Ok(text)
}

fn emit_json<T: Serialize>(config: &RunConfig, value: &T, stdout: &mut dyn Write) -> Result<(), Failure> {
    let text = render_json(value).map_err(|e| Failure::usage(e.to_string()))?;
    match &config.output.report {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Failure::usage(format!("cannot write report: {e}"))),
    }
}

/// Writes through a temp file in the target directory, then renames.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| Failure::usage(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}
