//! Batch runner: configuration, one record per (instance, repeat), replay.

use crate::backend::{
    derive_seed, Backend, EndpointConfig, HttpBackend, PriceTable, RetryPolicy, ScriptedPolicy, SimulatedBackend,
};
use crate::controller::{Controller, ControllerError, PsoParams};
use crate::game24::{self, verify_answer, Game24Task, OraclePolicy, ValueMapping};
use crate::record::SearchResult;
use crate::report::{build_report, ReportBundle};
use crate::search::{run_baseline, run_swarm, Baseline, SearchConfig, SearchError};
use crate::writing::{
    self, run_writing, run_writing_baseline, ParagraphFlag, WritingConfig, WritingInstance, WritingPolicy,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;
/// Mixed into the seed of random-temperature controllers.
const CONTROLLER_SEED_TAG: u64 = 0x7465_6d70;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    #[default]
    Game24,
    CreativeWriting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Io,
    Cot,
    Tot,
    TotRandom,
    #[default]
    T2ot,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Io, Method::Cot, Method::Tot, Method::TotRandom, Method::T2ot];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Io => "io",
            Method::Cot => "cot",
            Method::Tot => "tot",
            Method::TotRandom => "tot-random",
            Method::T2ot => "t2ot",
        }
    }
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Game24 => "game24",
            TaskKind::CreativeWriting => "creative-writing",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method {s:?} (io, cot, tot, tot-random, t2ot)"))
    }
}

impl FromStr for TaskKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "game24" => Ok(TaskKind::Game24),
            "creative-writing" | "cw" => Ok(TaskKind::CreativeWriting),
            _ => Err(format!("unknown task {s:?} (game24, creative-writing)")),
        }
    }
}

/// Simulated model setup. Without an explicit `script`, a policy is
/// generated per instance.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulatedSpec {
    pub oracle: OraclePolicy,
    pub writing: WritingPolicy,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub script: Option<ScriptedPolicy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BackendSpec {
    Simulated(SimulatedSpec),
    Http {
        endpoint: EndpointConfig,
        #[serde(default)]
        retry: RetryPolicy,
    },
}

impl Default for BackendSpec {
    fn default() -> Self {
        BackendSpec::Simulated(SimulatedSpec::default())
    }
}

impl BackendSpec {
    pub fn is_simulated(&self) -> bool {
        matches!(self, BackendSpec::Simulated(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    pub method: Method,
    pub pso: PsoParams,
    /// `search.seed` is overwritten per run.
    pub search: SearchConfig,
    pub writing: WritingConfig,
    pub value_mapping: ValueMapping,
    /// Open interval for `tot-random` draws.
    pub random_range: (f64, f64),
    pub backend: BackendSpec,
    /// Instance file; generated instances are used when absent.
    pub dataset: Option<PathBuf>,
    /// Number of generated instances.
    pub instances: usize,
    pub repeats: usize,
    pub seed: u64,
    pub prices: PriceTable,
    pub out: Option<PathBuf>,
    pub parallel: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::game24_t2ot()
    }
}

impl ExperimentConfig {
    /// Puzzle preset: unit inertia, 0.1 gains, depth 3, beam 5, 3 value samples.
    pub fn game24_t2ot() -> Self {
        Self {
            task: TaskKind::Game24,
            method: Method::T2ot,
            pso: PsoParams::game24(),
            search: SearchConfig::default(),
            writing: WritingConfig::default(),
            value_mapping: ValueMapping::default(),
            random_range: (0.0, 1.0),
            backend: BackendSpec::default(),
            dataset: None,
            instances: 50,
            repeats: 1,
            seed: 0,
            prices: PriceTable::default(),
            out: None,
            parallel: 1,
        }
    }

    /// Writing preset: -0.005 gains, two steps of 5 candidates and 5 votes.
    pub fn cw_t2ot() -> Self {
        Self {
            task: TaskKind::CreativeWriting,
            pso: PsoParams::creative_writing(),
            search: SearchConfig {
                depth_limit: 2,
                ..SearchConfig::default()
            },
            ..Self::game24_t2ot()
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "game24-t2ot" => Some(Self::game24_t2ot()),
            "cw-t2ot" => Some(Self::cw_t2ot()),
            _ => None,
        }
    }

    /// TOML, or JSON when the path ends in `.json`.
    pub fn from_file(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::Io(path.to_path_buf(), e.to_string()))?;
        if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| ExperimentError::Config(e.to_string()))
        } else {
            toml::from_str(&text).map_err(|e| ExperimentError::Config(e.to_string()))
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.pso.validate()?;
        self.search.validate()?;
        self.writing.validate().map_err(ExperimentError::Config)?;
        let (lo, hi) = self.random_range;
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi) {
            return Err(ExperimentError::Config(format!("random_range ({lo}, {hi}) is not a valid interval")));
        }
        if self.repeats == 0 || self.parallel == 0 {
            return Err(ExperimentError::Config("repeats and parallel must be >= 1".into()));
        }
        if self.task == TaskKind::CreativeWriting && self.search.tree_count != 1 {
            return Err(ExperimentError::Config("creative-writing runs use a single tree".into()));
        }
        if let BackendSpec::Simulated(SimulatedSpec { script: Some(p), .. }) = &self.backend {
            if p.is_empty() {
                return Err(ExperimentError::Config("inline script has no rules".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}: {1}")]
    Io(PathBuf, String),
    #[error("dataset: {0}")]
    Dataset(String),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error("record: {0}")]
    Record(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "kebab-case")]
pub enum Instance {
    Game24 { numbers: [i64; 4] },
    CreativeWriting(WritingInstance),
}

impl Instance {
    pub fn label(&self) -> String {
        match self {
            Instance::Game24 { numbers } => game24::format_dataset(&[*numbers]).trim().to_string(),
            Instance::CreativeWriting(w) => w.id.clone(),
        }
    }
}

/// Instances from the configured file, or generated from the seed.
pub fn load_instances(config: &ExperimentConfig) -> Result<Vec<Instance>, ExperimentError> {
    let text = match &config.dataset {
        Some(path) => {
            Some(std::fs::read_to_string(path).map_err(|e| ExperimentError::Io(path.clone(), e.to_string()))?)
        }
        None => None,
    };
    let instances: Vec<Instance> = match (config.task, text) {
        (TaskKind::Game24, Some(t)) => game24::parse_dataset(&t)
            .map_err(|e| ExperimentError::Dataset(e.to_string()))?
            .into_iter()
            .map(|numbers| Instance::Game24 { numbers })
            .collect(),
        (TaskKind::Game24, None) => game24::generate_dataset(&game24::DatasetOptions {
            count: config.instances,
            seed: config.seed,
            ..Default::default()
        })
        .into_iter()
        .map(|numbers| Instance::Game24 { numbers })
        .collect(),
        (TaskKind::CreativeWriting, Some(t)) => writing::parse_instances(&t)
            .map_err(|e| ExperimentError::Dataset(e.to_string()))?
            .into_iter()
            .map(Instance::CreativeWriting)
            .collect(),
        (TaskKind::CreativeWriting, None) => writing::generate_instances(config.instances, config.seed)
            .into_iter()
            .map(Instance::CreativeWriting)
            .collect(),
    };
    if instances.is_empty() {
        return Err(ExperimentError::Dataset("no instances".into()));
    }
    Ok(instances)
}

/// Everything needed to execute, and re-execute, one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub method: Method,
    pub instance: Instance,
    pub instance_index: usize,
    pub repeat: usize,
    /// Run seed, derived from the batch seed, instance index and repeat.
    pub seed: u64,
    pub pso: PsoParams,
    pub search: SearchConfig,
    pub writing: WritingConfig,
    pub value_mapping: ValueMapping,
    pub random_range: (f64, f64),
    pub backend: BackendSpec,
}

impl RunSpec {
    pub fn task(&self) -> TaskKind {
        match self.instance {
            Instance::Game24 { .. } => TaskKind::Game24,
            Instance::CreativeWriting(_) => TaskKind::CreativeWriting,
        }
    }

    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spec serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn file_stem(&self) -> String {
        format!("{}-{}-i{:03}-r{:02}", self.task(), self.method, self.instance_index, self.repeat)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "kebab-case")]
pub enum Verdict {
    Game24 {
        answer: Option<String>,
        verified: bool,
    },
    CreativeWriting {
        score: Option<i64>,
        judge_fallback: bool,
        constraints_met: Option<bool>,
        #[serde(skip_serializing_if = "Option::is_none")]
        flags: Option<[ParagraphFlag; writing::SENTENCES]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub format_version: u32,
    pub spec: RunSpec,
    pub config_hash: String,
    pub result: SearchResult,
    pub verdict: Verdict,
    /// Wall-clock data; not part of the canonical bytes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl RunRecord {
    /// Serialized form without timing, the unit of replay comparison.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut copy = self.clone();
        copy.timing = None;
        serde_json::to_vec_pretty(&copy).expect("record serializes")
    }

    pub fn hash_matches(&self) -> bool {
        self.spec.hash() == self.config_hash
    }
}

fn simulated_policy(spec: &SimulatedSpec, instance: &Instance, writing: &WritingConfig) -> ScriptedPolicy {
    if let Some(script) = &spec.script {
        return script.clone();
    }
    match instance {
        Instance::Game24 { numbers } => spec.oracle.build(*numbers),
        Instance::CreativeWriting(w) => spec.writing.build(w, writing.plans.max(writing.passages)),
    }
}

pub fn make_backend(spec: &RunSpec) -> Box<dyn Backend> {
    match &spec.backend {
        BackendSpec::Simulated(sim) => Box::new(SimulatedBackend::new(simulated_policy(sim, &spec.instance, &spec.writing))),
        BackendSpec::Http { endpoint, retry } => {
            let retry = RetryPolicy {
                jitter_seed: retry.jitter_seed ^ spec.seed,
                ..*retry
            };
            Box::new(HttpBackend::from_env(endpoint.clone(), retry))
        }
    }
}

fn controllers(spec: &RunSpec) -> impl FnMut(usize) -> Result<Controller, ControllerError> + '_ {
    move |tree| match spec.method {
        Method::T2ot => Controller::pso(spec.pso),
        Method::TotRandom => Controller::random(
            spec.random_range.0,
            spec.random_range.1,
            derive_seed(&[spec.seed, tree as u64, CONTROLLER_SEED_TAG]),
        ),
        _ => Controller::fixed(spec.pso.temp_init),
    }
}

fn baseline(method: Method) -> Option<Baseline> {
    match method {
        Method::Io => Some(Baseline::Io),
        Method::Cot => Some(Baseline::Cot),
        _ => None,
    }
}

/// Executes one run on the given backend.
pub fn execute(spec: &RunSpec, backend: &dyn Backend) -> Result<RunRecord, ExperimentError> {
    let start = Instant::now();
    let search = SearchConfig {
        seed: spec.seed,
        ..spec.search.clone()
    };
    let (result, verdict) = match &spec.instance {
        Instance::Game24 { numbers } => {
            let task = Game24Task {
                origin: *numbers,
                mapping: spec.value_mapping,
            };
            let result = match baseline(spec.method) {
                Some(kind) => run_baseline(&task, backend, kind, spec.pso.temp_init, &search),
                None => run_swarm(&task, backend, controllers(spec), &search)?,
            };
            let answer = result.answer.as_ref().map(|a| a.text.clone());
            let verified = answer.as_deref().is_some_and(|a| verify_answer(a, *numbers));
            (result, Verdict::Game24 { answer, verified })
        }
        Instance::CreativeWriting(inst) => {
            let out = match baseline(spec.method) {
                Some(kind) => run_writing_baseline(inst, backend, kind, spec.pso.temp_init, &spec.writing, spec.seed),
                None => run_writing(inst, backend, controllers(spec)(0)?, &spec.writing, spec.seed),
            };
            let verdict = Verdict::CreativeWriting {
                score: out.score.map(|s| s.value),
                judge_fallback: out.score.is_some_and(|s| s.fallback),
                constraints_met: out.check.as_ref().map(|c| c.valid),
                flags: out.check.as_ref().map(|c| c.flags),
            };
            (out.result, verdict)
        }
    };
    Ok(RunRecord {
        format_version: FORMAT_VERSION,
        config_hash: spec.hash(),
        spec: spec.clone(),
        result,
        verdict,
        timing: Some(Timing {
            elapsed_ms: start.elapsed().as_millis() as u64,
        }),
    })
}

pub fn run_spec(spec: &RunSpec) -> Result<RunRecord, ExperimentError> {
    let backend = make_backend(spec);
    execute(spec, backend.as_ref())
}

/// One spec per (instance, repeat), in that order.
pub fn plan_runs(config: &ExperimentConfig, instances: &[Instance]) -> Vec<RunSpec> {
    let mut specs = Vec::with_capacity(instances.len() * config.repeats);
    for (index, instance) in instances.iter().enumerate() {
        for repeat in 0..config.repeats {
            specs.push(RunSpec {
                method: config.method,
                instance: instance.clone(),
                instance_index: index,
                repeat,
                seed: derive_seed(&[config.seed, index as u64, repeat as u64]),
                pso: config.pso,
                search: config.search.clone(),
                writing: config.writing.clone(),
                value_mapping: config.value_mapping,
                random_range: config.random_range,
                backend: config.backend.clone(),
            });
        }
    }
    specs
}

#[derive(Debug, Clone)]
pub struct Batch {
    pub records: Vec<RunRecord>,
    pub report: ReportBundle,
}

/// Validates, loads instances, runs every (instance, repeat) with up to
/// `parallel` runs in flight, and writes records and reports when `out` is
/// set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Batch, ExperimentError> {
    config.validate()?;
    let instances = load_instances(config)?;
    let specs = plan_runs(config, &instances);
    let records = run_all(&specs, config.parallel)?;
    let report = build_report(&records, &config.prices);
    if let Some(out) = &config.out {
        write_outputs(out, &records, &report)?;
    }
    Ok(Batch { records, report })
}

pub fn run_all(specs: &[RunSpec], parallel: usize) -> Result<Vec<RunRecord>, ExperimentError> {
    use rayon::prelude::*;
    if parallel <= 1 {
        return specs.iter().map(run_spec).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel)
        .build()
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    pool.install(|| specs.par_iter().map(run_spec).collect())
}

fn io_err(path: &Path, e: impl fmt::Display) -> ExperimentError {
    ExperimentError::Io(path.to_path_buf(), e.to_string())
}

pub fn write_record(dir: &Path, record: &RunRecord) -> Result<PathBuf, ExperimentError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(format!("{}.json", record.spec.file_stem()));
    let text = serde_json::to_string_pretty(record).map_err(|e| ExperimentError::Record(e.to_string()))?;
    std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

pub fn read_record(path: &Path) -> Result<RunRecord, ExperimentError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| ExperimentError::Record(format!("{}: {e}", path.display())))
}

/// Every `*.json` record under `dir`, sorted by file name.
pub fn read_records(dir: &Path) -> Result<Vec<RunRecord>, ExperimentError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| read_record(p)).collect()
}

pub fn write_report(out: &Path, report: &ReportBundle) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let files = [
        ("report.json", serde_json::to_string_pretty(report).map_err(|e| ExperimentError::Record(e.to_string()))?),
        ("report.txt", report.render_text()),
        ("report.csv", report.render_csv()),
    ];
    for (name, body) in files {
        let path = out.join(name);
        std::fs::write(&path, body).map_err(|e| io_err(&path, e))?;
    }
    Ok(())
}

pub fn write_outputs(out: &Path, records: &[RunRecord], report: &ReportBundle) -> Result<(), ExperimentError> {
    let dir = out.join("records");
    for r in records {
        write_record(&dir, r)?;
    }
    write_report(out, report)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReplayOutcome {
    Identical,
    /// First differing line of the canonical JSON, 1-based.
    Differs { line: usize, stored: String, replayed: String },
}

/// Re-executes a record's spec on the simulated backend and compares the
/// canonical bytes.
pub fn replay(record: &RunRecord) -> Result<ReplayOutcome, ExperimentError> {
    if !record.spec.backend.is_simulated() {
        return Err(ExperimentError::Record("only simulated records can be replayed".into()));
    }
    if !record.hash_matches() {
        return Err(ExperimentError::Record("config hash does not match the stored spec".into()));
    }
    let fresh = run_spec(&record.spec)?;
    let (a, b) = (record.canonical_bytes(), fresh.canonical_bytes());
    if a == b {
        return Ok(ReplayOutcome::Identical);
    }
    let (a, b) = (String::from_utf8_lossy(&a), String::from_utf8_lossy(&b));
    let mut la = a.lines();
    let mut lb = b.lines();
    let mut line = 1;
    loop {
        match (la.next(), lb.next()) {
            (Some(x), Some(y)) if x == y => line += 1,
            (x, y) => {
                return Ok(ReplayOutcome::Differs {
                    line,
                    stored: x.unwrap_or("<end>").to_string(),
                    replayed: y.unwrap_or("<end>").to_string(),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(method: Method) -> ExperimentConfig {
        ExperimentConfig {
            method,
            instances: 3,
            ..ExperimentConfig::game24_t2ot()
        }
    }

    #[test]
    fn presets_validate() {
        ExperimentConfig::game24_t2ot().validate().unwrap();
        ExperimentConfig::cw_t2ot().validate().unwrap();
        let cw = ExperimentConfig::cw_t2ot();
        assert_eq!(cw.search.depth_limit, 2);
        assert_eq!(cw.pso.accel_personal, -0.005);
        assert!(ExperimentConfig::preset("nope").is_none());
    }

    #[test]
    fn invalid_configs_fail_before_running() {
        let mut c = small(Method::TotRandom);
        c.random_range = (0.5, 0.5);
        assert!(matches!(run_experiment(&c), Err(ExperimentError::Config(_))));
        let mut c = small(Method::T2ot);
        c.pso.temp_init = 5.0;
        assert!(run_experiment(&c).is_err());
        let mut c = small(Method::T2ot);
        c.dataset = Some(PathBuf::from("/nonexistent/dataset.txt"));
        assert!(matches!(run_experiment(&c), Err(ExperimentError::Io(..))));
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{m}\""));
        }
        assert_eq!("cw".parse::<TaskKind>().unwrap(), TaskKind::CreativeWriting);
    }

    #[test]
    fn every_method_runs_and_replays() {
        for method in Method::ALL {
            let batch = run_experiment(&small(method)).unwrap();
            assert_eq!(batch.records.len(), 3);
            for r in &batch.records {
                assert!(r.result.complete);
                assert!(r.hash_matches());
                assert_eq!(replay(r).unwrap(), ReplayOutcome::Identical, "{method}");
            }
        }
        let mut cw = ExperimentConfig::cw_t2ot();
        cw.instances = 2;
        for method in Method::ALL {
            cw.method = method;
            for r in run_experiment(&cw).unwrap().records {
                assert_eq!(replay(&r).unwrap(), ReplayOutcome::Identical, "cw {method}");
            }
        }
    }

    #[test]
    fn replay_detects_tampering() {
        let mut r = run_experiment(&small(Method::Tot)).unwrap().records.remove(0);
        r.result.trees[0].steps[0].temperature = 0.25;
        assert!(matches!(replay(&r).unwrap(), ReplayOutcome::Differs { .. }));
        r.spec.seed ^= 1;
        assert!(replay(&r).is_err());
    }

    #[test]
    fn toml_config_parses() {
        let text = r#"
task = "creative-writing"
method = "tot-random"
random_range = [0.0, 1.0]
repeats = 2

[search]
depth_limit = 2

[backend]
kind = "simulated"
"#;
        let c: ExperimentConfig = toml::from_str(text).unwrap();
        assert_eq!(c.task, TaskKind::CreativeWriting);
        assert_eq!(c.method, Method::TotRandom);
        assert_eq!(c.search.depth_limit, 2);
        assert!(toml::from_str::<ExperimentConfig>("bogus = 1").is_err());
    }
}
