//! Command implementations behind the `qbench` binary. Each command
//! returns the text it prints so it can be tested without a process.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use qbench_core::bench::{
    propagate_exact, propagate_sampled, InputAssignment, Outcome, SampleOptions,
};
use qbench_core::experiments::{cnot_truth_table, run_tomography, truth_table_csv};
use qbench_core::optics::qhq_decompose;
use qbench_core::rng::random_seed;
use qbench_core::scene::{builtin_scene, load_scene, Scene, BUILTIN_SCENES};
use qbench_core::state::{Jones, PolarizationState, C64};
use qbench_core::{Error, ErrorKind};
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Parser)]
#[command(
    name = "qbench",
    version,
    about = "Linear-optical quantum computing bench"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// List the builtin scenes.
    Scenes {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Fire a scene and print detector counts.
    Run(RunArgs),
    /// Exact outcome probabilities of a scene.
    Amplitudes(SceneArgs),
    /// Reconstruct a prepared polarization state from three analyzer settings.
    Tomography(TomographyArgs),
    /// Quarter–half–quarter plate angles for a 2×2 unitary read from a JSON file.
    Decompose { file: PathBuf },
    /// Truth table of the heralded C-NOT.
    CnotTable {
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Serve the session API.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Args)]
pub struct SceneArgs {
    /// Builtin scene name or path to a scene document.
    pub scene: String,
    /// Parameter override `component.param=value`; angles in degrees.
    #[arg(long = "set", value_name = "COMPONENT.PARAM=VALUE")]
    pub overrides: Vec<String>,
    /// Photon source state `component=STATE` with STATE one of
    /// H, V, D, A, +i, -i or a JSON object `{"h": [re, im], "v": [re, im]}`.
    #[arg(long = "input", value_name = "COMPONENT=STATE")]
    pub inputs: Vec<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    #[arg(long, default_value_t = 1000)]
    pub shots: u64,
    /// Defaults to QBENCH_SEED, else a fresh random seed recorded in the output.
    #[arg(long, env = "QBENCH_SEED")]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Exact outcome distribution instead of sampled counts.
    #[arg(long)]
    pub exact: bool,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TomographyArgs {
    /// Prepared state: H, V, D, A, +i, -i or a JSON object.
    #[arg(long, default_value = "H")]
    pub prep: String,
    /// Shots per analyzer setting.
    #[arg(long, default_value_t = 100_000)]
    pub shots: u64,
    #[arg(long, env = "QBENCH_SEED")]
    pub seed: Option<u64>,
    /// Use exact port probabilities.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: std::net::IpAddr,
    /// Idle session lifetime in seconds.
    #[arg(long, default_value_t = 1800)]
    pub idle_timeout: u64,
    /// Shots per fire streamed as individual events.
    #[arg(long, default_value_t = 50)]
    pub detailed_shots: u64,
}

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => e.kind().exit_code(),
            CliError::Io { .. } => ErrorKind::Reference.exit_code(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output serializes");
    s.push('\n');
    s
}

/// Builtin name first, then a document path.
pub fn resolve_scene(name: &str) -> CliResult<Scene> {
    if BUILTIN_SCENES.iter().any(|(n, _)| *n == name) {
        return Ok(builtin_scene(name)?);
    }
    let path = Path::new(name);
    if !path.exists() {
        return Err(Error::UnknownScene(name.into()).into());
    }
    Ok(load_scene(&read(path)?)?)
}

fn invalid(param: &str, message: impl Into<String>) -> Error {
    Error::InvalidValue {
        param: param.into(),
        message: message.into(),
    }
}

pub fn parse_state(text: &str) -> CliResult<PolarizationState> {
    Ok(match text {
        "H" | "h" => PolarizationState::H,
        "V" | "v" => PolarizationState::V,
        "D" | "d" => PolarizationState::diagonal(),
        "A" | "a" => PolarizationState::antidiagonal(),
        "+i" => PolarizationState::plus_i(),
        "-i" => PolarizationState::minus_i(),
        _ => {
            let s: PolarizationState = serde_json::from_str(text)
                .map_err(|e| invalid("state", format!("{text:?}: {e}")))?;
            s.check_normalized()?;
            s
        }
    })
}

fn split_pair<'a>(text: &'a str, what: &str) -> CliResult<(&'a str, &'a str)> {
    text.split_once('=')
        .ok_or_else(|| invalid(what, format!("expected KEY=VALUE, got {text:?}")).into())
}

/// Applies overrides and collects source inputs.
pub fn prepare(args: &SceneArgs) -> CliResult<(Scene, InputAssignment)> {
    let mut scene = resolve_scene(&args.scene)?;
    for o in &args.overrides {
        let (target, raw) = split_pair(o, "set")?;
        let (component, param) = target
            .split_once('.')
            .ok_or_else(|| invalid("set", format!("expected COMPONENT.PARAM, got {target:?}")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::from(raw));
        scene.set_param(component, param, value)?;
    }
    let mut inputs = InputAssignment::new();
    for i in &args.inputs {
        let (component, state) = split_pair(i, "input")?;
        scene.component(component)?;
        inputs.insert(component.into(), parse_state(state)?);
    }
    Ok((scene, inputs))
}

#[derive(Debug, Serialize)]
pub struct ExactReport {
    pub schema_version: &'static str,
    pub scene_hash: String,
    pub outcomes: Vec<Outcome>,
    pub total_probability: f64,
    /// Probability that the herald rule passes, for scenes with herald groups.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success_probability: Option<f64>,
}

pub fn exact_report(scene: &Scene, inputs: &InputAssignment) -> CliResult<ExactReport> {
    let run = propagate_exact(scene, inputs)?;
    let outcomes = run.outcomes();
    Ok(ExactReport {
        schema_version: SCHEMA_VERSION,
        scene_hash: scene.hash(),
        total_probability: outcomes.iter().map(|o| o.probability).sum(),
        success_probability: run.herald_probability(),
        outcomes,
    })
}

pub fn cmd_list_scenes(format: Format) -> String {
    match format {
        Format::Json => json(
            &BUILTIN_SCENES
                .iter()
                .map(|(n, d)| serde_json::json!({ "name": n, "description": d }))
                .collect::<Vec<_>>(),
        ),
        _ => BUILTIN_SCENES
            .iter()
            .map(|(n, d)| format!("{n}\t{d}\n"))
            .collect(),
    }
}

pub fn cmd_run(args: &RunArgs) -> CliResult<String> {
    let (scene, inputs) = prepare(&args.scene)?;
    if args.exact {
        return Ok(json(&exact_report(&scene, &inputs)?));
    }
    let seed = args.seed.unwrap_or_else(random_seed);
    let run = propagate_sampled(&scene, &inputs, &SampleOptions::new(args.shots, seed))?;
    Ok(match args.format {
        Format::Csv => run.counts.to_csv(),
        _ => run.counts.to_json(),
    })
}

pub fn cmd_amplitudes(args: &SceneArgs) -> CliResult<String> {
    let (scene, inputs) = prepare(args)?;
    Ok(json(&exact_report(&scene, &inputs)?))
}

pub fn cmd_tomography(args: &TomographyArgs) -> CliResult<String> {
    let prep = parse_state(&args.prep)?;
    let report = if args.exact {
        run_tomography(&prep, None, 0)?
    } else {
        run_tomography(
            &prep,
            Some(args.shots),
            args.seed.unwrap_or_else(random_seed),
        )?
    };
    Ok(json(&report))
}

fn parse_entry(v: &Value) -> Option<C64> {
    match v {
        Value::Number(n) => Some(C64::new(n.as_f64()?, 0.0)),
        Value::Array(a) if a.len() == 2 => Some(C64::new(a[0].as_f64()?, a[1].as_f64()?)),
        _ => None,
    }
}

/// `[[u00, u01], [u10, u11]]`, entries real numbers or `[re, im]`.
pub fn parse_unitary(text: &str) -> CliResult<Jones> {
    let bad = || {
        invalid(
            "unitary",
            "expected [[u00, u01], [u10, u11]] with entries x or [re, im]",
        )
    };
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let rows = v.as_array().filter(|r| r.len() == 2).ok_or_else(bad)?;
    let mut m = Jones::zeros();
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().filter(|r| r.len() == 2).ok_or_else(bad)?;
        for (j, e) in row.iter().enumerate() {
            m[(i, j)] = parse_entry(e).ok_or_else(bad)?;
        }
    }
    Ok(m)
}

#[derive(Debug, Serialize)]
pub struct DecomposeReport {
    pub schema_version: &'static str,
    /// Plate angles in degrees; the photon crosses γ, then β, then α.
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub residual: f64,
}

pub fn cmd_decompose(file: &Path) -> CliResult<String> {
    let u = parse_unitary(&read(file)?)?;
    let d = qhq_decompose(&u)?;
    let [alpha, beta, gamma] = d.angles.to_degrees();
    Ok(json(&DecomposeReport {
        schema_version: SCHEMA_VERSION,
        alpha,
        beta,
        gamma,
        residual: d.residual,
    }))
}

pub fn cmd_cnot_table(format: Format) -> CliResult<String> {
    let rows = cnot_truth_table()?;
    Ok(match format {
        Format::Json => json(&rows),
        _ => truth_table_csv(&rows),
    })
}

pub fn cmd_serve(args: &ServeArgs) -> CliResult<String> {
    let config = qbench_service::ServiceConfig {
        idle_timeout: std::time::Duration::from_secs(args.idle_timeout),
        detailed_shots: args.detailed_shots,
        ..Default::default()
    };
    let addr = std::net::SocketAddr::new(args.bind, args.port);
    let rt = tokio::runtime::Runtime::new().map_err(|source| CliError::Io {
        path: PathBuf::from("<runtime>"),
        source,
    })?;
    rt.block_on(qbench_service::serve(addr, config))
        .map_err(|source| CliError::Io {
            path: PathBuf::from(addr.to_string()),
            source,
        })?;
    Ok(String::new())
}

/// Runs one command; the returned text goes to the output.
pub fn execute(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Cmd::Scenes { format } => Ok(cmd_list_scenes(*format)),
        Cmd::Run(a) => cmd_run(a),
        Cmd::Amplitudes(a) => cmd_amplitudes(a),
        Cmd::Tomography(a) => cmd_tomography(a),
        Cmd::Decompose { file } => cmd_decompose(file),
        Cmd::CnotTable { format } => cmd_cnot_table(*format),
        Cmd::Serve(a) => cmd_serve(a),
    }
}
