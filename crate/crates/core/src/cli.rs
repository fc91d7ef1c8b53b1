//! Command-line front end.
//!
//! Settings resolve as defaults, then the `--config` TOML file, then flags.
//! Every file written is accompanied by a `<file>.manifest.json` recording
//! the arguments, resolved settings and input hashes.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::assign::InfeasibleReport;
use crate::baselines::{greedy_assign, iterative_worst_off, BaselineError, BaselineKind};
use crate::datagen::{generate, DatagenError, GenConfig};
use crate::divers::{run, DiversError, MainConfig, RoutineOutput};
use crate::flow::min_cost_feasible_flow;
use crate::metrics::{self, AssignmentReport};
use crate::model::{
    assignment_from_json, instance_from_json, instance_to_json, is_feasible, save_assignment,
    Assignment, ConferenceInstance, ModelError, RunMeta,
};
use crate::network::{build_network, PairSet};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_SCHEMA: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "REVCOVER_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "revcover",
    version,
    about = "Diverse reviewer assignment with committee extension"
)]
pub struct Cli {
    /// Report format on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// TOML file with default settings; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Table,
    Markdown,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic conference instance.
    Generate(GenerateArgs),
    /// Assign reviewers with the main routine or a baseline.
    Assign(AssignArgs),
    /// Rank candidate reviewers worth adding to the committee.
    Suggest(SuggestArgs),
    /// Check and score an existing assignment.
    Evaluate(EvaluateArgs),
    /// Run every method on one instance and tabulate the metrics.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Bundled preset: ictir19-like, ictir20-like or tiny-oracle.
    #[arg(long, conflicts_with = "gen_config")]
    pub preset: Option<String>,
    /// Generator settings as TOML.
    #[arg(long)]
    pub gen_config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub papers: Option<usize>,
    #[arg(long)]
    pub pc: Option<usize>,
    #[arg(long)]
    pub erc: Option<usize>,
    /// Papers drawn from a topic the committee does not cover.
    #[arg(long)]
    pub planted: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct RoutineFlags {
    /// Reviewers per submission; overrides the instance.
    #[arg(long)]
    pub lambda: Option<usize>,
    /// Minimum admissible similarity.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Committee insertions per round.
    #[arg(long)]
    pub kappa: Option<usize>,
    /// Randomized solves over reduced pair sets.
    #[arg(long)]
    pub tries: Option<usize>,
    /// Fraction of pairs dropped per try.
    #[arg(long)]
    pub drop_pct: Option<f64>,
    /// Require every eligible committee member to review.
    #[arg(long)]
    pub restrictive: bool,
    /// Upper bound applied to every reviewer; overrides the instance.
    #[arg(long)]
    pub mu_upper: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sampled solves per problem-paper search.
    #[arg(long)]
    pub sample_runs: Option<usize>,
    /// Branch-and-bound nodes per solve.
    #[arg(long)]
    pub node_limit: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Divers,
    Greedy,
    IterativeWorstOff,
}

#[derive(Debug, Args)]
pub struct AssignArgs {
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Divers)]
    pub method: Method,
    #[command(flatten)]
    pub flags: RoutineFlags,
    /// Where to write the assignment file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the flow network of the returned assignment in DOT format.
    #[arg(long)]
    pub dump_dot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SuggestArgs {
    pub instance: PathBuf,
    #[command(flatten)]
    pub flags: RoutineFlags,
    /// Where to write the suggestion report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub instance: PathBuf,
    pub assignment: PathBuf,
    /// Threshold to check; defaults to the one recorded in the file.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Also check reviewer lower bounds.
    #[arg(long)]
    pub enforce_lower: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub instance: PathBuf,
    #[command(flatten)]
    pub flags: RoutineFlags,
    /// Threshold of the thresholded variants.
    #[arg(long)]
    pub theta_positive: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub lambda: Option<usize>,
    pub mu_upper: Option<u32>,
    pub theta_positive: Option<f64>,
    /// Candidate completions per round of the worst-off baseline.
    pub merges: Option<usize>,
    pub divers: Option<MainConfig>,
}

/// Settings after defaults, file and flags are merged.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub lambda: Option<usize>,
    pub mu_upper: Option<u32>,
    pub theta_positive: f64,
    pub merges: usize,
    pub divers: MainConfig,
}

impl Settings {
    fn resolve(file: &FileConfig, flags: &RoutineFlags) -> Result<Self, CliError> {
        let mut main = file.divers.clone().unwrap_or_default();
        if let Some(v) = flags.theta {
            main.theta = v;
        }
        if let Some(v) = flags.kappa {
            main.kappa = v;
        }
        if let Some(v) = flags.tries {
            main.tries = v;
        }
        if let Some(v) = flags.drop_pct {
            main.drop_pct = v;
        }
        if let Some(v) = flags.seed {
            main.seed = v;
        }
        if let Some(v) = flags.sample_runs {
            main.sample_runs = v;
        }
        if let Some(v) = flags.node_limit {
            main.sub.node_limit = v;
        }
        main.restrictive |= flags.restrictive;
        main.validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        let settings = Settings {
            lambda: flags.lambda.or(file.lambda),
            mu_upper: flags.mu_upper.or(file.mu_upper),
            theta_positive: file.theta_positive.unwrap_or(0.15),
            merges: file.merges.unwrap_or(5),
            divers: main,
        };
        if settings.lambda == Some(0) || settings.mu_upper == Some(0) || settings.merges == 0 {
            return Err(CliError::config(
                "lambda, mu_upper and merges must be positive",
            ));
        }
        if !(0.0..1.0).contains(&settings.theta_positive) {
            return Err(CliError::config("theta_positive must lie in [0, 1)"));
        }
        Ok(settings)
    }

    fn apply(&self, instance: &mut ConferenceInstance) {
        if let Some(l) = self.lambda {
            instance.lambda = l;
        }
        if let Some(u) = self.mu_upper {
            for r in instance.pc.iter_mut().chain(instance.erc.iter_mut()) {
                r.mu_upper = u;
                r.mu_lower = r.mu_lower.min(u);
            }
        }
    }
}

/// Everything needed to rerun a command.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config: serde_json::Value,
    pub seed: u64,
    /// SHA-256 of each input file, in argument order.
    pub inputs: Vec<InputHash>,
    pub outputs: Vec<String>,
    pub wall_time_ms: u128,
    pub version: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
    pub details: Option<serde_json::Value>,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CONFIG,
            kind: "config",
            message: message.into(),
            details: None,
        }
    }

    fn infeasible(message: impl Into<String>, details: Option<serde_json::Value>) -> Self {
        CliError {
            code: EXIT_INFEASIBLE,
            kind: "infeasible",
            message: message.into(),
            details,
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INTERNAL,
            kind: "internal",
            message: message.into(),
            details: None,
        }
    }

    fn to_json(&self) -> String {
        let mut v = json!({ "error": self.kind, "exit_code": self.code, "message": self.message });
        if let Some(d) = &self.details {
            v["details"] = d.clone();
        }
        v.to_string()
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError {
            code: EXIT_SCHEMA,
            kind: "schema",
            message: e.to_string(),
            details: None,
        }
    }
}

impl From<DiversError> for CliError {
    fn from(e: DiversError) -> Self {
        match e {
            DiversError::Config(m) => CliError::config(m),
            DiversError::Model(m) => m.into(),
            e if e.is_infeasible() => {
                let details = e.report().map(report_json);
                CliError::infeasible(e.to_string(), details)
            }
            e => CliError::internal(e.to_string()),
        }
    }
}

impl From<BaselineError> for CliError {
    fn from(e: BaselineError) -> Self {
        match e {
            BaselineError::CapacityExhausted { .. } => CliError::infeasible(e.to_string(), None),
            other => CliError::internal(other.to_string()),
        }
    }
}

impl From<DatagenError> for CliError {
    fn from(e: DatagenError) -> Self {
        CliError::config(e.to_string())
    }
}

fn report_json(r: &InfeasibleReport) -> serde_json::Value {
    serde_json::to_value(r).unwrap_or(serde_json::Value::Null)
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError {
        code: EXIT_SCHEMA,
        kind: "io",
        message: format!("{}: {e}", path.display()),
        details: None,
    }
}

pub struct Context {
    args: Vec<String>,
    inputs: Vec<InputHash>,
    started: Instant,
}

impl Context {
    fn read(&mut self, path: &Path) -> Result<String, CliError> {
        let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
        self.inputs.push(InputHash {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        String::from_utf8(bytes).map_err(|e| CliError {
            code: EXIT_SCHEMA,
            kind: "schema",
            message: format!("{}: {e}", path.display()),
            details: None,
        })
    }

    fn load_instance(&mut self, path: &Path) -> Result<ConferenceInstance, CliError> {
        let text = self.read(path)?;
        Ok(instance_from_json(&text)?)
    }

    fn load_file_config(&mut self, path: Option<&Path>) -> Result<FileConfig, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = self.read(path)?;
        toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    fn manifest(
        &self,
        command: &str,
        config: serde_json::Value,
        seed: u64,
        outputs: &[&Path],
    ) -> RunManifest {
        RunManifest {
            command: command.to_owned(),
            args: self.args.clone(),
            config,
            seed,
            inputs: self.inputs.clone(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            wall_time_ms: self.started.elapsed().as_millis(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    crate::model::write_atomic(path, bytes).map_err(|e| io_error(path, e))
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write_manifest(out: &Path, manifest: &RunManifest) -> Result<(), CliError> {
    let text =
        serde_json::to_string_pretty(manifest).map_err(|e| CliError::internal(e.to_string()))?;
    write_file(&manifest_path(out), text.as_bytes())
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("plain data serializes")
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        // A second call in one process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code. Errors are written to `stderr` as one JSON line.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return EXIT_OK;
            }
            let err = CliError::config(e.to_string().trim().to_owned());
            let _ = writeln!(stderr, "{}", err.to_json());
            return err.code;
        }
    };
    configure_threads();
    let mut ctx = Context {
        args: args
            .iter()
            .skip(1)
            .map(|a| a.to_string_lossy().into_owned())
            .collect(),
        inputs: Vec::new(),
        started: Instant::now(),
    };
    match dispatch(&cli, &mut ctx, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.to_json());
            e.code
        }
    }
}

fn dispatch(cli: &Cli, ctx: &mut Context, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let out = |s: String, stdout: &mut dyn Write| -> Result<(), CliError> {
        stdout
            .write_all(s.as_bytes())
            .map_err(|e| CliError::internal(format!("stdout: {e}")))
    };
    let file = ctx.load_file_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Generate(a) => {
            let text = cmd_generate(a, ctx)?;
            out(text, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Assign(a) => {
            let text = cmd_assign(a, &file, cli.format, ctx)?;
            out(text, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Suggest(a) => {
            let text = cmd_suggest(a, &file, cli.format, ctx)?;
            out(text, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Evaluate(a) => {
            let (text, feasible) = cmd_evaluate(a, cli.format, ctx)?;
            out(text, stdout)?;
            Ok(if feasible { EXIT_OK } else { EXIT_INFEASIBLE })
        }
        Command::Compare(a) => {
            let text = cmd_compare(a, &file, cli.format, ctx)?;
            out(text, stdout)?;
            Ok(EXIT_OK)
        }
    }
}

pub fn cmd_generate(a: &GenerateArgs, ctx: &mut Context) -> Result<String, CliError> {
    let mut cfg = match (&a.preset, &a.gen_config) {
        (Some(name), _) => GenConfig::preset(name)?,
        (None, Some(path)) => {
            let text = ctx.read(path)?;
            toml::from_str(&text)
                .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
        }
        (None, None) => GenConfig::default(),
    };
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.papers {
        cfg.n_papers = v;
    }
    if let Some(v) = a.pc {
        cfg.n_pc = v;
    }
    if let Some(v) = a.erc {
        cfg.n_erc = v;
    }
    if let Some(v) = a.planted {
        cfg.planted_problem_papers = v;
    }
    let instance = generate(&cfg)?;
    write_file(&a.out, instance_to_json(&instance).as_bytes())?;
    let config = serde_json::to_value(&cfg).unwrap_or_default();
    write_manifest(
        &a.out,
        &ctx.manifest("generate", config, cfg.seed, &[&a.out]),
    )?;
    Ok(format!(
        "wrote {} ({} submissions, {} committee, {} candidates)\n",
        a.out.display(),
        instance.submissions.len(),
        instance.pc.len(),
        instance.erc.len()
    ))
}

/// An assignment together with the instance its metrics refer to.
struct Outcome {
    assignment: Assignment,
    instance: ConferenceInstance,
    routine: Option<RoutineOutput>,
}

fn solve(
    method: Method,
    input: &ConferenceInstance,
    s: &Settings,
    main: &MainConfig,
) -> Result<Outcome, CliError> {
    let upper: Vec<u32> = input.pc.iter().map(|r| r.mu_upper).collect();
    Ok(match method {
        Method::Divers => {
            let r = run(input, main)?;
            Outcome {
                assignment: r.assignment.clone(),
                instance: r.effective_instance.clone(),
                routine: Some(r),
            }
        }
        Method::Greedy => Outcome {
            assignment: greedy_assign(input, &upper)?,
            instance: input.clone(),
            routine: None,
        },
        Method::IterativeWorstOff => Outcome {
            assignment: iterative_worst_off(input, &upper, s.merges, main.seed)?.assignment,
            instance: input.clone(),
            routine: None,
        },
    })
}

fn method_label(method: Method, main: &MainConfig) -> String {
    match method {
        Method::Divers => {
            let star = if main.restrictive { "*" } else { "" };
            format!("D θ={}{star}", main.theta)
        }
        Method::Greedy => BaselineKind::Greedy.to_string(),
        Method::IterativeWorstOff => BaselineKind::IterativeWorstOff.to_string(),
    }
}

fn render_reports(reports: &[AssignmentReport], format: Format) -> String {
    match format {
        Format::Json => to_json(&reports) + "\n",
        Format::Table => metrics::render_table(reports),
        Format::Markdown => metrics::render_markdown(reports),
    }
}

fn dot_of(outcome: &Outcome) -> Result<String, CliError> {
    let inst = &outcome.instance;
    let index: std::collections::HashMap<&str, usize> = inst
        .pc
        .iter()
        .enumerate()
        .map(|(i, r)| (r.id.as_str(), i))
        .collect();
    let mut pairs = PairSet::new();
    for (j, s) in inst.submissions.iter().enumerate() {
        for r in outcome.assignment.reviewers(&s.id).unwrap_or(&[]) {
            if let Some(&i) = index.get(r.as_str()) {
                pairs.insert(i, j);
            }
        }
    }
    let lower: Vec<u32> = inst.pc.iter().map(|r| r.mu_lower).collect();
    let upper: Vec<u32> = inst.pc.iter().map(|r| r.mu_upper).collect();
    let (net, layout) = build_network(inst, &pairs, &lower, &upper, true)
        .map_err(|e| CliError::internal(e.to_string()))?;
    let result = min_cost_feasible_flow(&net).map_err(|e| CliError::internal(e.to_string()))?;
    Ok(layout.to_dot(&net, Some(&result)))
}

pub fn cmd_assign(
    a: &AssignArgs,
    file: &FileConfig,
    format: Format,
    ctx: &mut Context,
) -> Result<String, CliError> {
    let s = Settings::resolve(file, &a.flags)?;
    let mut input = ctx.load_instance(&a.instance)?;
    s.apply(&mut input);
    input.validate()?;
    let outcome = solve(a.method, &input, &s, &s.divers)?;
    let label = method_label(a.method, &s.divers);
    let report = metrics::report(&label, &outcome.assignment, &outcome.instance, &input.pc)
        .map_err(|e| CliError::internal(e.to_string()))?;

    let mut outputs: Vec<&Path> = Vec::new();
    if let Some(path) = &a.out {
        let meta = RunMeta {
            method: label.clone(),
            mode: if s.divers.restrictive {
                "restrictive"
            } else {
                "default"
            }
            .to_owned(),
            lambda: outcome.assignment.lambda,
            seed: s.divers.seed,
            theta: if a.method == Method::Divers {
                s.divers.theta
            } else {
                0.0
            },
            kappa: s.divers.kappa,
            tries: s.divers.tries,
            provenance: None,
        };
        save_assignment(&outcome.assignment, &meta, path)?;
        outputs.push(path);
    }
    if let Some(path) = &a.dump_dot {
        write_file(path, dot_of(&outcome)?.as_bytes())?;
        outputs.push(path);
    }
    if let Some(first) = outputs.first() {
        let config = json!({ "method": a.method, "settings": s });
        let manifest = ctx.manifest("assign", config, s.divers.seed, &outputs);
        write_manifest(first, &manifest)?;
        for extra in &outputs[1..] {
            write_manifest(extra, &manifest)?;
        }
    }

    Ok(match format {
        Format::Json => {
            let mut v = json!({ "report": report, "assignment": outcome.assignment.sets });
            if let Some(r) = &outcome.routine {
                v["out_of_scope_papers"] = json!(r.out_of_scope_papers);
                v["unused_pc"] = json!(r.unused_pc);
                v["suggestions"] = json!(r.suggestions);
                v["iterations"] = json!(r.iterations);
            }
            to_json(&v) + "\n"
        }
        _ => {
            let mut text = render_reports(&[report], format);
            if let Some(r) = &outcome.routine {
                text.push_str(&format!(
                    "\nrounds: {}, inserted reviewers used: {}, out of scope: {}\n",
                    r.iterations,
                    r.suggestions.len(),
                    if r.out_of_scope_papers.is_empty() {
                        "none".to_owned()
                    } else {
                        r.out_of_scope_papers.join(", ")
                    }
                ));
            }
            text
        }
    })
}

pub fn cmd_suggest(
    a: &SuggestArgs,
    file: &FileConfig,
    format: Format,
    ctx: &mut Context,
) -> Result<String, CliError> {
    let s = Settings::resolve(file, &a.flags)?;
    let mut input = ctx.load_instance(&a.instance)?;
    s.apply(&mut input);
    input.validate()?;
    let r = run(&input, &s.divers)?;
    let text = match format {
        Format::Json => r.suggestions.to_json() + "\n",
        _ => r.suggestions.to_markdown(),
    };
    if let Some(path) = &a.out {
        write_file(path, text.as_bytes())?;
        let config = json!({ "settings": s, "format": format });
        write_manifest(
            path,
            &ctx.manifest("suggest", config, s.divers.seed, &[path]),
        )?;
    }
    Ok(text)
}

pub fn cmd_evaluate(
    a: &EvaluateArgs,
    format: Format,
    ctx: &mut Context,
) -> Result<(String, bool), CliError> {
    let instance = ctx.load_instance(&a.instance)?;
    let text = ctx.read(&a.assignment)?;
    let (assignment, meta) = assignment_from_json(&text)?;
    let theta = a.theta.unwrap_or(meta.theta);
    let feasibility = is_feasible(&assignment, &instance, a.enforce_lower, theta)?;
    let label = if meta.method.is_empty() {
        "assignment".to_owned()
    } else {
        meta.method.clone()
    };
    let report = metrics::report(&label, &assignment, &instance, &instance.pc).ok();
    let violations: Vec<String> = feasibility
        .violations
        .iter()
        .map(ToString::to_string)
        .collect();
    let body = json!({
        "feasible": feasibility.is_feasible(),
        "theta": theta,
        "violations": violations,
        "report": report,
    });
    let rendered = match format {
        Format::Json => to_json(&body) + "\n",
        _ => {
            let mut t = report
                .as_ref()
                .map(|r| render_reports(std::slice::from_ref(r), format))
                .unwrap_or_default();
            if violations.is_empty() {
                t.push_str("\nfeasible: yes\n");
            } else {
                t.push_str(&format!(
                    "\nfeasible: no ({} violations)\n",
                    violations.len()
                ));
                for v in &violations {
                    t.push_str(&format!("- {v}\n"));
                }
            }
            t
        }
    };
    if let Some(path) = &a.out {
        write_file(path, (to_json(&body) + "\n").as_bytes())?;
        let config = json!({ "theta": theta, "enforce_lower": a.enforce_lower });
        write_manifest(path, &ctx.manifest("evaluate", config, meta.seed, &[path]))?;
    }
    Ok((rendered, feasibility.is_feasible()))
}

/// One row of a comparison; `report` is absent when the method failed.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub method: String,
    pub report: Option<AssignmentReport>,
    pub error: Option<String>,
}

pub fn cmd_compare(
    a: &CompareArgs,
    file: &FileConfig,
    format: Format,
    ctx: &mut Context,
) -> Result<String, CliError> {
    let mut s = Settings::resolve(file, &a.flags)?;
    if let Some(t) = a.theta_positive {
        s.theta_positive = t;
    }
    if !(0.0..1.0).contains(&s.theta_positive) {
        return Err(CliError::config("theta_positive must lie in [0, 1)"));
    }
    let mut input = ctx.load_instance(&a.instance)?;
    s.apply(&mut input);
    input.validate()?;
    let variants = [
        (Method::Greedy, 0.0, false),
        (Method::IterativeWorstOff, 0.0, false),
        (Method::Divers, 0.0, false),
        (Method::Divers, s.theta_positive, false),
        (Method::Divers, 0.0, true),
        (Method::Divers, s.theta_positive, true),
    ];
    let mut rows = Vec::new();
    for (method, theta, restrictive) in variants {
        let main = MainConfig {
            theta,
            restrictive,
            ..s.divers.clone()
        };
        let label = method_label(method, &main);
        let row = match solve(method, &input, &s, &main) {
            Ok(o) => match metrics::report(&label, &o.assignment, &o.instance, &input.pc) {
                Ok(r) => ComparisonRow {
                    method: label,
                    report: Some(r),
                    error: None,
                },
                Err(e) => ComparisonRow {
                    method: label,
                    report: None,
                    error: Some(e.to_string()),
                },
            },
            Err(e) => ComparisonRow {
                method: label,
                report: None,
                error: Some(e.message),
            },
        };
        rows.push(row);
    }
    let text = match format {
        Format::Json => to_json(&rows) + "\n",
        _ => {
            let ok: Vec<AssignmentReport> = rows.iter().filter_map(|r| r.report.clone()).collect();
            let mut t = render_reports(&ok, format);
            for r in rows.iter().filter(|r| r.error.is_some()) {
                t.push_str(&format!(
                    "{}: {}\n",
                    r.method,
                    r.error.as_deref().unwrap_or_default()
                ));
            }
            t
        }
    };
    if let Some(path) = &a.out {
        write_file(path, text.as_bytes())?;
        let config = json!({ "settings": s, "format": format });
        write_manifest(
            path,
            &ctx.manifest("compare", config, s.divers.seed, &[path]),
        )?;
    }
    Ok(text)
}
