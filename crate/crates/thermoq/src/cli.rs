//! Command-line front end: schema-checked JSON input, one report per input.

use crate::error::Error;
use crate::fixedpoints::{
    fixed_algebra_decomposition, fixed_point_basis, kraus_block_decomposition, minimal_support_projection,
    strictly_positive_fixed_state,
};
use crate::generators::{self, GenParams, Generated};
use crate::hierarchy::{channel_hierarchy, operation_hierarchy};
use crate::measurements::{
    classify_observable, compatible_observable, disturbance_report, nogo_audit, Instrument, InstrumentTiers,
};
use crate::opalg::{Tolerances, GENERIC_SEED};
use crate::processes::{dilate_strong_third, dilate_weak_third, validate_process_class};
use crate::qmaps::{classify_map, CPMap};
use crate::scaling::Config;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

pub const SCHEMA: &str = include_str!("../schema/thermoq.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    ClassifyMap,
    ClassifyInstrument,
    Dilate,
    Audit,
    Decompose,
    Demo,
}

#[derive(Debug, Parser)]
#[command(name = "thermoq", version, about = "Classify quantum operations and instruments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Tier verdicts for a channel or operation.
    ClassifyMap,
    /// Observable class, per-operation verdicts and disturbance properties.
    ClassifyInstrument,
    /// Build a dilation process for an instrument.
    Dilate {
        /// Require and certify the rank non-decreasing construction.
        #[arg(long)]
        strong: bool,
    },
    /// Disturbance properties cross-checked against the no-go implications.
    Audit,
    /// Fixed-point structure of a channel.
    Decompose,
    /// Write a bundled example.
    Demo {
        generator: String,
        /// JSON file with builder parameters (`matrix`, `state`, `effects`, ...).
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        outcomes: Option<usize>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long, global = true)]
    pub input: Vec<PathBuf>,
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long = "tol-herm", global = true)]
    pub tol_herm: Option<f64>,
    #[arg(long = "tol-psd", global = true)]
    pub tol_psd: Option<f64>,
    #[arg(long = "tol-trace", global = true)]
    pub tol_trace: Option<f64>,
    #[arg(long = "tol-proj", global = true)]
    pub tol_proj: Option<f64>,
    #[arg(long = "tol-span", global = true)]
    pub tol_span: Option<f64>,
    #[arg(long = "tol-rank", global = true)]
    pub tol_rank: Option<f64>,
    #[arg(long = "tol-fixed", global = true)]
    pub tol_fixed: Option<f64>,
    #[arg(long = "tol-eff", global = true)]
    pub tol_eff: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "max-iter", global = true, default_value_t = 10_000)]
    pub max_iter: usize,
    #[arg(long = "ds-eps", global = true)]
    pub ds_eps: Option<f64>,
    #[arg(long, global = true)]
    pub parallel: Option<usize>,
}

impl Common {
    pub fn tolerances(&self) -> Tolerances {
        let mut t = Tolerances::default();
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut t.herm_tol, self.tol_herm);
        set(&mut t.psd_tol, self.tol_psd);
        set(&mut t.trace_tol, self.tol_trace);
        set(&mut t.proj_tol, self.tol_proj);
        set(&mut t.span_tol, self.tol_span);
        set(&mut t.rank_tol, self.tol_rank);
        set(&mut t.fixed_tol, self.tol_fixed);
        set(&mut t.eff_tol, self.tol_eff);
        set(&mut t.ds_eps, self.ds_eps);
        t
    }
}

/// One resolved job.
#[derive(Debug, Clone)]
pub struct JobSpec {
    pub command: Command,
    pub strong: bool,
    pub generator: Option<String>,
    pub params: GenParams,
    /// Parameter file for `demo`; `--dim`, `--lambda` and `--outcomes` override it,
    /// and its `seed` overrides `--seed`.
    pub params_path: Option<PathBuf>,
    pub input_paths: Vec<PathBuf>,
    pub output_path: Option<PathBuf>,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub max_iter: usize,
    pub parallel: Option<usize>,
}

impl JobSpec {
    pub fn from_cli(cli: Cli) -> Self {
        let c = &cli.common;
        let params_path = match &cli.command {
            Sub::Demo { params, .. } => params.clone(),
            _ => None,
        };
        let (command, strong, generator, params) = match cli.command {
            Sub::ClassifyMap => (Command::ClassifyMap, false, None, GenParams::default()),
            Sub::ClassifyInstrument => (Command::ClassifyInstrument, false, None, GenParams::default()),
            Sub::Dilate { strong } => (Command::Dilate, strong, None, GenParams::default()),
            Sub::Audit => (Command::Audit, false, None, GenParams::default()),
            Sub::Decompose => (Command::Decompose, false, None, GenParams::default()),
            Sub::Demo { generator, params: _, dim, lambda, outcomes } => (
                Command::Demo,
                false,
                Some(generator),
                GenParams { dim, lambda, outcomes, seed: Some(c.seed), ..GenParams::default() },
            ),
        };
        JobSpec {
            command,
            strong,
            generator,
            params,
            params_path,
            input_paths: c.input.clone(),
            output_path: c.output.clone(),
            tolerances: c.tolerances(),
            seed: c.seed,
            max_iter: c.max_iter,
            parallel: c.parallel,
        }
    }

    fn config(&self) -> Config {
        Config { tol: self.tolerances, max_iter: self.max_iter, samples_per_rank: 64, seed: self.seed }
    }
}

/// Failure of one job, with its exit code.
#[derive(Debug)]
pub enum JobError {
    /// Unreadable file or unwritable output: exit 2.
    Io(String),
    /// Malformed JSON or schema violation: exit 2.
    Schema { message: String, path: Option<String>, line: Option<usize>, column: Option<usize> },
    /// Well-formed input rejected by a domain check while loading: exit 1.
    Rejected { kind: String, message: String, path: String },
    /// Error raised by the analysis itself: exit 1.
    Domain(Error),
}

impl JobError {
    fn io(msg: impl Into<String>) -> Self {
        JobError::Io(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            JobError::Io(_) | JobError::Schema { .. } => 2,
            JobError::Rejected { .. } | JobError::Domain(_) => 1,
        }
    }

    pub fn message(&self) -> String {
        match self {
            JobError::Io(m) | JobError::Schema { message: m, .. } | JobError::Rejected { message: m, .. } => m.clone(),
            JobError::Domain(e) => e.to_string(),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            JobError::Io(message) => json!({"error": {"kind": "IoError", "message": message}}),
            JobError::Schema { message, path, line, column } => json!({
                "error": {"kind": "SchemaError", "message": message, "path": path, "line": line, "column": column}
            }),
            JobError::Rejected { kind, message, path } => {
                json!({"error": {"kind": kind, "message": message, "path": path}})
            }
            JobError::Domain(e) => json!({"error": {"kind": e.kind(), "message": e.to_string()}}),
        }
    }
}

impl From<Error> for JobError {
    fn from(e: Error) -> Self {
        JobError::Domain(e)
    }
}

type JobResult = std::result::Result<Value, JobError>;

fn schema_for(def: &str) -> Value {
    let mut root: Value = serde_json::from_str(SCHEMA).expect("bundled schema is valid JSON");
    root["$ref"] = Value::String(format!("#/definitions/{def}"));
    root
}

/// Check `text` against a schema definition, then deserialize with field paths.
pub fn parse_checked<T: DeserializeOwned>(text: &str, def: &str) -> std::result::Result<T, JobError> {
    let value: Value = serde_json::from_str(text).map_err(|e| JobError::Schema {
        message: e.to_string(),
        path: None,
        line: Some(e.line()),
        column: Some(e.column()),
    })?;
    let schema = schema_for(def);
    let compiled = jsonschema::JSONSchema::compile(&schema).expect("bundled schema compiles");
    if let Err(mut errs) = compiled.validate(&value) {
        let first = errs.next().expect("at least one schema error");
        return Err(JobError::Schema {
            message: first.to_string(),
            path: Some(first.instance_path.to_string()),
            line: None,
            column: None,
        });
    }
    drop(compiled);
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let text = inner.to_string();
        match crate::error::untag(&text) {
            Some((kind, message)) => JobError::Rejected { kind: kind.into(), message: message.into(), path },
            None => JobError::Schema {
                message: text,
                path: Some(path),
                line: Some(inner.line()),
                column: Some(inner.column()),
            },
        }
    })
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

pub fn classify_map_job(map: &CPMap, cfg: &Config) -> crate::Result<Value> {
    let cls = classify_map(map, &cfg.tol)?;
    if !map.is_square() {
        return Ok(json!({"classification": to_value(&cls)}));
    }
    let verdict = if cls.trace_preserving {
        channel_hierarchy(map, cfg)?
    } else {
        operation_hierarchy(map, cfg, None)?
    };
    Ok(json!({
        "kind": if cls.trace_preserving { "channel" } else { "operation" },
        "tiers": [verdict.class_i, verdict.class_ii, verdict.class_iii],
        "classification": to_value(&cls),
        "verdict": to_value(&verdict),
    }))
}

fn instrument_verdicts(inst: &Instrument, cfg: &Config) -> std::result::Result<Vec<crate::hierarchy::HierarchyVerdict>, Error> {
    inst.operations.iter().map(|op| operation_hierarchy(op, cfg, None)).collect()
}

pub fn classify_instrument_job(inst: &Instrument, cfg: &Config) -> crate::Result<Value> {
    let obs = compatible_observable(inst, &cfg.tol)?;
    let verdicts = instrument_verdicts(inst, cfg)?;
    let report = disturbance_report(inst, &cfg.tol)?;
    let ops: Vec<Value> = inst
        .labels
        .iter()
        .zip(&verdicts)
        .map(|(l, v)| json!({"label": l, "tiers": [v.class_i, v.class_ii, v.class_iii], "verdict": to_value(v)}))
        .collect();
    Ok(json!({
        "observable": to_value(&obs),
        "observable_class": to_value(&classify_observable(&obs, &cfg.tol)),
        "instrument_tiers": to_value(&InstrumentTiers::from_verdicts(&verdicts)),
        "operations": ops,
        "disturbance": to_value(&report),
    }))
}

pub fn audit_job(inst: &Instrument, cfg: &Config) -> crate::Result<Value> {
    let verdicts = instrument_verdicts(inst, cfg)?;
    let mut report = disturbance_report(inst, &cfg.tol)?;
    report.nogo_conflicts = nogo_audit(inst, &verdicts, &report, &cfg.tol)?;
    Ok(json!({
        "instrument_tiers": to_value(&InstrumentTiers::from_verdicts(&verdicts)),
        "repeatable": report.repeatable.holds,
        "first_kind": report.first_kind.holds,
        "value_reproducible": report.value_reproducible.holds,
        "ideal": report.ideal.holds,
        "conflicts": to_value(&report.nogo_conflicts),
        "report": to_value(&report),
    }))
}

pub fn dilate_job(inst: &Instrument, strong: bool, cfg: &Config) -> crate::Result<Value> {
    let p = if strong { dilate_strong_third(inst, cfg)? } else { dilate_weak_third(inst, &cfg.tol)? };
    let rep = validate_process_class(&p, cfg)?;
    Ok(json!({"process": to_value(&p), "class_report": to_value(&rep)}))
}

pub fn decompose_job(map: &CPMap, cfg: &Config) -> crate::Result<Value> {
    let tol = &cfg.tol;
    let fb = fixed_point_basis(map, tol)?;
    let ms = minimal_support_projection(map, tol)?;
    let blocks = match kraus_block_decomposition(map, tol, GENERIC_SEED) {
        Ok(b) => to_value(&b),
        Err(e @ Error::RefinementStall { .. }) => json!({"error": {"kind": e.kind(), "message": e.to_string()}}),
        Err(e) => return Err(e),
    };
    let state = strictly_positive_fixed_state(map, None, tol)?;
    let structure = match fixed_algebra_decomposition(map, tol) {
        Ok(s) => to_value(&s),
        Err(e @ Error::FactorizationFailed(_)) => json!({"error": {"kind": e.kind(), "message": e.to_string()}}),
        Err(e) => return Err(e),
    };
    Ok(json!({
        "fixed_point_dimension": fb.len(),
        "fixed_point_basis": to_value(&fb),
        "minimal_support": to_value(&ms),
        "block_decomposition": blocks,
        "strictly_positive_fixed_state": to_value(&state),
        "fixed_point_structure": structure,
    }))
}

fn read_input(path: &Path) -> std::result::Result<String, JobError> {
    std::fs::read_to_string(path).map_err(|e| JobError::io(format!("{}: {e}", path.display())))
}

fn merge_params(mut file: GenParams, flags: &GenParams) -> GenParams {
    file.dim = flags.dim.or(file.dim);
    file.lambda = flags.lambda.or(file.lambda);
    file.outcomes = flags.outcomes.or(file.outcomes);
    file.seed = file.seed.or(flags.seed);
    file
}

fn run_one(job: &JobSpec, input: Option<&Path>) -> JobResult {
    let cfg = job.config();
    let body = match job.command {
        Command::Demo => {
            let name = job.generator.as_deref().unwrap_or_default();
            let params = match &job.params_path {
                Some(p) => {
                    let file: GenParams = parse_checked(&read_input(p)?, "genparams")?;
                    merge_params(file, &job.params)
                }
                None => job.params.clone(),
            };
            return Ok(match generators::build(name, &params)? {
                Generated::Map(m) => to_value(&m),
                Generated::Instrument(i) => to_value(&i),
                Generated::Process(p) => to_value(&p),
            });
        }
        Command::ClassifyMap | Command::Decompose => {
            let text = read_input(input.expect("input required"))?;
            let map: CPMap = parse_checked(&text, "cpmap")?;
            if job.command == Command::ClassifyMap {
                classify_map_job(&map, &cfg)?
            } else {
                decompose_job(&map, &cfg)?
            }
        }
        Command::ClassifyInstrument | Command::Audit | Command::Dilate => {
            let text = read_input(input.expect("input required"))?;
            let inst: Instrument = parse_checked(&text, "instrument")?;
            match job.command {
                Command::ClassifyInstrument => classify_instrument_job(&inst, &cfg)?,
                Command::Audit => audit_job(&inst, &cfg)?,
                _ => dilate_job(&inst, job.strong, &cfg)?,
            }
        }
    };
    Ok(json!({
        "command": job.command,
        "input": input.map(|p| p.display().to_string()),
        "tolerances": to_value(&job.tolerances),
        "seed": job.seed,
        "max_iter": job.max_iter,
        "result": body,
    }))
}

/// Run a job and write its report; returns the process exit code.
pub fn run(job: &JobSpec) -> i32 {
    if let Err(e) = job.tolerances.validate() {
        return emit(job, vec![Err(JobError::io(e.to_string()))]);
    }
    if job.command == Command::Demo {
        if job.generator.is_none() {
            return emit(job, vec![Err(JobError::io("demo requires a generator name"))]);
        }
        return emit(job, vec![run_one(job, None)]);
    }
    if job.input_paths.is_empty() {
        return emit(job, vec![Err(JobError::io("--input is required"))]);
    }
    let work = || {
        job.input_paths
            .par_iter()
            .map(|p| run_one(job, Some(p)))
            .collect::<Vec<_>>()
    };
    let results = match job.parallel {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(work),
            Err(e) => vec![Err(JobError::io(e.to_string()))],
        },
        None => work(),
    };
    emit(job, results)
}

fn emit(job: &JobSpec, results: Vec<JobResult>) -> i32 {
    let code = results
        .iter()
        .map(|r| r.as_ref().err().map_or(0, JobError::exit_code))
        .max()
        .unwrap_or(0);
    let mut values: Vec<Value> = results
        .into_iter()
        .map(|r| match r {
            Ok(v) => v,
            Err(e) => {
                eprintln!("thermoq: {}", e.message());
                e.to_json()
            }
        })
        .collect();
    let out = if values.len() == 1 { values.pop().unwrap() } else { Value::Array(values) };
    let mut text = serde_json::to_string_pretty(&out).expect("serializable report");
    text.push('\n');
    match &job.output_path {
        Some(p) => {
            if let Err(e) = std::fs::write(p, text) {
                eprintln!("thermoq: cannot write {}: {e}", p.display());
                return 2;
            }
        }
        None => print!("{text}"),
    }
    code
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&JobSpec::from_cli(cli)),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                2
            } else {
                0
            }
        }
    }
}
