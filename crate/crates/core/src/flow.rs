//! Configuration-driven pipelines: train, eval, prune, sweep, netlist,
//! forecast and the place-cell task.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::data::{gaussian_bumps, load_mnist, load_ucr, BumpConfig, Dataset};
use crate::error::{Error, Result};
use crate::hwgen::netlist::emit_netlist;
use crate::hwgen::ppa::{forecasts_csv, reference_model, Pdk};
use crate::learning::{accuracy, clustering_rand_index, metrics_csv, train_from, StdpParams, TrainConfig, TrainOptions};
use crate::model_doc::ModelDocument;
use crate::network::{count_synapses, LearningMode, ModelSpec, VoteRule};
use crate::placecell::{default_suite, recall_csv, run_orientation_task};
use crate::pruning::{prune, prune_sweep, sweep_csv, PruneConfig, PruneMode};
use crate::temporal::encode_timeseries;
use crate::weights::WeightMatrix;

/// Environment variable that overrides `out_dir`.
pub const OUT_DIR_ENV: &str = "NEUTNN_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Train,
    Eval,
    Prune,
    Sweep,
    Netlist,
    Forecast,
    Placecell,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Train,
        Stage::Eval,
        Stage::Prune,
        Stage::Sweep,
        Stage::Netlist,
        Stage::Forecast,
        Stage::Placecell,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Train => "train",
            Stage::Eval => "eval",
            Stage::Prune => "prune",
            Stage::Sweep => "sweep",
            Stage::Netlist => "netlist",
            Stage::Forecast => "forecast",
            Stage::Placecell => "placecell",
        }
    }

    fn needs_model(self) -> bool {
        !matches!(self, Stage::Placecell)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Auto,
    Mnist,
    Ucr,
    Bumps,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    /// Stages in canonical order, deduplicated.
    pub flow: Vec<Stage>,
    pub node: Option<Pdk>,
    pub model: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub dataset_kind: DatasetKind,
    pub eval_dataset: Option<PathBuf>,
    pub train_limit: Option<usize>,
    pub eval_limit: Option<usize>,
    pub absent_threshold: u8,
    pub seed: u64,
    pub epochs: usize,
    pub stdp: StdpParams,
    pub vote: VoteRule,
    pub prune_threshold: Option<u16>,
    pub binarize: bool,
    pub prune_mode: PruneMode,
    pub sweep: Vec<u16>,
    pub forecast_synapses: Option<u64>,
    pub placecell_grid: (usize, usize),
    pub placecell_alphabet: usize,
    pub trials: usize,
    pub out_dir: PathBuf,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            flow: Vec::new(),
            node: None,
            model: None,
            dataset: None,
            dataset_kind: DatasetKind::Auto,
            eval_dataset: None,
            train_limit: None,
            eval_limit: None,
            absent_threshold: 64,
            seed: 0,
            epochs: 1,
            stdp: StdpParams::default(),
            vote: VoteRule::Latency,
            prune_threshold: None,
            binarize: false,
            prune_mode: PruneMode::RemoveZero,
            sweep: (0..=8).collect(),
            forecast_synapses: None,
            placecell_grid: (5, 5),
            placecell_alphabet: 4,
            trials: 200,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn choice<T: Copy>(key: &str, value: &str, line: usize, options: &[(&str, T)]) -> Result<T> {
    options
        .iter()
        .find(|(n, _)| *n == value)
        .map(|(_, v)| *v)
        .ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            Error::Parse(format!(
                "line {line}: invalid {key} {value:?}; valid options: {{{}}}",
                names.join(", ")
            ))
        })
}

fn number<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: {key} expects a number, got {value:?}")))
}

fn list<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|v| number(key, v.trim(), line))
        .collect()
}

fn boolean(key: &str, value: &str, line: usize) -> Result<bool> {
    choice(key, value, line, &[("true", true), ("false", false), ("1", true), ("0", false)])
}

const NODES: [(&str, Pdk); 3] = [
    ("nangate45", Pdk::FreePdk45),
    ("asap7", Pdk::Asap7),
    ("asap7_tnn7", Pdk::Tnn7),
];

/// Parses `key=value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<FlowConfig> {
    let mut cfg = FlowConfig::default();
    let mut seen_flow = false;
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {ln}: expected key=value, got {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "flow" => {
                let stages: Vec<(&str, Stage)> = Stage::ALL.iter().map(|s| (s.name(), *s)).collect();
                let mut flow = Vec::new();
                for name in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    flow.push(choice("flow stage", name, ln, &stages)?);
                }
                flow.sort();
                flow.dedup();
                cfg.flow = flow;
                seen_flow = true;
            }
            "node" => cfg.node = Some(choice("node", value, ln, &NODES)?),
            "model" => cfg.model = Some(PathBuf::from(value)),
            "dataset" => cfg.dataset = Some(PathBuf::from(value)),
            "dataset_kind" => {
                cfg.dataset_kind = choice(
                    key,
                    value,
                    ln,
                    &[
                        ("auto", DatasetKind::Auto),
                        ("mnist", DatasetKind::Mnist),
                        ("ucr", DatasetKind::Ucr),
                        ("bumps", DatasetKind::Bumps),
                    ],
                )?
            }
            "eval_dataset" => cfg.eval_dataset = Some(PathBuf::from(value)),
            "train_limit" => cfg.train_limit = Some(number(key, value, ln)?),
            "eval_limit" => cfg.eval_limit = Some(number(key, value, ln)?),
            "absent_threshold" => cfg.absent_threshold = number(key, value, ln)?,
            "seed" => cfg.seed = number(key, value, ln)?,
            "epochs" => cfg.epochs = number(key, value, ln)?,
            "stdp" => {
                let v: Vec<u8> = list(key, value, ln)?;
                if v.len() != 3 {
                    return Err(Error::Parse(format!("line {ln}: stdp expects capture,backoff,search")));
                }
                cfg.stdp = StdpParams::new(v[0], v[1], v[2]);
            }
            "vote" => {
                cfg.vote = choice(
                    key,
                    value,
                    ln,
                    &[("latency", VoteRule::Latency), ("plurality", VoteRule::Plurality)],
                )?
            }
            "prune_threshold" => cfg.prune_threshold = Some(number(key, value, ln)?),
            "binarize" => cfg.binarize = boolean(key, value, ln)?,
            "prune_mode" => {
                cfg.prune_mode = choice(
                    key,
                    value,
                    ln,
                    &[("remove_zero", PruneMode::RemoveZero), ("keep_zero", PruneMode::KeepZero)],
                )?
            }
            "sweep" => cfg.sweep = list(key, value, ln)?,
            "forecast_synapses" => cfg.forecast_synapses = Some(number(key, value, ln)?),
            "placecell_grid" => {
                let (r, c) = value
                    .split_once('x')
                    .ok_or_else(|| Error::Parse(format!("line {ln}: placecell_grid expects <rows>x<cols>")))?;
                cfg.placecell_grid = (number(key, r, ln)?, number(key, c, ln)?);
            }
            "placecell_alphabet" => cfg.placecell_alphabet = number(key, value, ln)?,
            "trials" => cfg.trials = number(key, value, ln)?,
            "out_dir" => cfg.out_dir = PathBuf::from(value),
            other => return Err(Error::Parse(format!("line {ln}: unknown key {other:?}"))),
        }
    }
    if !seen_flow {
        return Err(Error::Parse("missing required field `flow`".into()));
    }
    if cfg.flow.is_empty() {
        return Err(Error::Parse("`flow` lists no stages".into()));
    }
    if cfg.flow.contains(&Stage::Forecast) && cfg.node.is_none() {
        return Err(Error::Parse(
            "`node` is required with the forecast stage; valid options: {nangate45, asap7, asap7_tnn7}".into(),
        ));
    }
    Ok(cfg)
}

impl FlowConfig {
    /// Fully resolved configuration, defaults included. Unset optional keys
    /// appear as comments, so the text parses back to the same config.
    pub fn echo(&self) -> String {
        fn line(s: &mut String, key: &str, value: Option<String>) {
            match value {
                Some(v) => s.push_str(&format!("{key}={v}\n")),
                None => s.push_str(&format!("# {key}=\n")),
            }
        }
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let num = |v: Option<usize>| v.map(|v| v.to_string());
        let flow: Vec<&str> = self.flow.iter().map(|s| s.name()).collect();
        let sweep: Vec<String> = self.sweep.iter().map(u16::to_string).collect();
        let kind = match self.dataset_kind {
            DatasetKind::Auto => "auto",
            DatasetKind::Mnist => "mnist",
            DatasetKind::Ucr => "ucr",
            DatasetKind::Bumps => "bumps",
        };
        let vote = match self.vote {
            VoteRule::Latency => "latency",
            VoteRule::Plurality => "plurality",
        };
        let mut s = String::new();
        line(&mut s, "flow", Some(flow.join(",")));
        line(&mut s, "node", self.node.map(|p| p.node().to_string()));
        line(&mut s, "model", path(&self.model));
        line(&mut s, "dataset", path(&self.dataset));
        line(&mut s, "dataset_kind", Some(kind.into()));
        line(&mut s, "eval_dataset", path(&self.eval_dataset));
        line(&mut s, "train_limit", num(self.train_limit));
        line(&mut s, "eval_limit", num(self.eval_limit));
        line(&mut s, "absent_threshold", Some(self.absent_threshold.to_string()));
        line(&mut s, "seed", Some(self.seed.to_string()));
        line(&mut s, "epochs", Some(self.epochs.to_string()));
        let p = &self.stdp;
        line(&mut s, "stdp", Some(format!("{},{},{}", p.mu_capture, p.mu_backoff, p.mu_search)));
        line(&mut s, "vote", Some(vote.into()));
        line(&mut s, "prune_threshold", self.prune_threshold.map(|v| v.to_string()));
        line(&mut s, "binarize", Some(self.binarize.to_string()));
        line(&mut s, "prune_mode", Some(self.prune_mode.as_str().into()));
        line(&mut s, "sweep", Some(sweep.join(",")));
        line(&mut s, "forecast_synapses", self.forecast_synapses.map(|v| v.to_string()));
        line(&mut s, "placecell_grid", Some(format!("{}x{}", self.placecell_grid.0, self.placecell_grid.1)));
        line(&mut s, "placecell_alphabet", Some(self.placecell_alphabet.to_string()));
        line(&mut s, "trials", Some(self.trials.to_string()));
        line(&mut s, "out_dir", Some(self.out_dir.display().to_string()));
        s
    }
}

/// Writes through a temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn stage_err(stage: Stage) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Stage { .. } => e,
        other => Error::Stage {
            stage: stage.name().into(),
            message: other.to_string(),
        },
    }
}

fn fail(stage: Stage, message: impl Into<String>) -> Error {
    Error::Stage {
        stage: stage.name().into(),
        message: message.into(),
    }
}

/// Encodes raw data the way `model` expects it.
fn load_dataset(cfg: &FlowConfig, model: &ModelSpec, path: &Path, mnist_prefix: &str, limit: Option<usize>) -> Result<Dataset> {
    let kind = match cfg.dataset_kind {
        DatasetKind::Auto if path.is_dir() => DatasetKind::Mnist,
        DatasetKind::Auto => DatasetKind::Ucr,
        k => k,
    };
    let width = model.input_width();
    let encode_series = |series: &[Vec<f64>], labels: Vec<usize>| -> Result<Dataset> {
        let len = series.first().map_or(0, Vec::len);
        let dual = width == 2 * len;
        if !dual && width != len {
            return Err(Error::LengthMismatch {
                expected: width,
                actual: len,
                context: "series length vs model input (single or dual rail)",
            });
        }
        let inputs = series
            .iter()
            .map(|s| encode_timeseries(s, &model.gamma, dual))
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset::new(inputs, labels)?.take(limit.unwrap_or(usize::MAX)))
    };
    match kind {
        DatasetKind::Mnist => {
            let set = load_mnist(path, mnist_prefix, limit)?;
            let rails = model.layers.first().map_or(2, |l| l.input.rails);
            if !rails.is_multiple_of(2) || set.rows * set.cols * rails != width {
                return Err(Error::Shape(format!(
                    "{}x{} images with {rails} rails do not fill a model input of {width}",
                    set.rows, set.cols
                )));
            }
            set.encode(&model.gamma, cfg.absent_threshold, rails / 2)
        }
        DatasetKind::Ucr => {
            let set = load_ucr(path)?;
            encode_series(&set.series, set.labels)
        }
        DatasetKind::Bumps | DatasetKind::Auto => {
            let (series, labels) = gaussian_bumps(&BumpConfig {
                seed: cfg.seed,
                ..Default::default()
            })?;
            encode_series(&series, labels)
        }
    }
}

fn eval_set(cfg: &FlowConfig, model: &ModelSpec, stage: Stage) -> Result<Dataset> {
    let kind_is_mnist = |p: &Path| cfg.dataset_kind == DatasetKind::Mnist || (cfg.dataset_kind == DatasetKind::Auto && p.is_dir());
    match (&cfg.eval_dataset, &cfg.dataset) {
        (Some(p), _) => load_dataset(cfg, model, p, "t10k", cfg.eval_limit),
        (None, Some(p)) if kind_is_mnist(p) => load_dataset(cfg, model, p, "t10k", cfg.eval_limit),
        (None, Some(p)) => load_dataset(cfg, model, p, "train", cfg.eval_limit),
        (None, None) if cfg.dataset_kind == DatasetKind::Bumps => {
            load_dataset(cfg, model, Path::new(""), "", cfg.eval_limit)
        }
        (None, None) => Err(fail(stage, "no dataset configured")),
    }
}

fn metric(model: &ModelSpec, weights: &WeightMatrix, data: &Dataset, vote: VoteRule) -> Result<(&'static str, f64)> {
    if model.layers.iter().any(|l| l.learning == LearningMode::Supervised) {
        Ok(("accuracy", accuracy(model, weights, data, vote)?))
    } else {
        Ok(("rand_index", clustering_rand_index(model, weights, data)?))
    }
}

/// Report of a completed flow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowReport {
    pub stages: Vec<Stage>,
    pub artifacts: Vec<PathBuf>,
    /// Human-readable summary lines, prefixed with their stage.
    pub notes: Vec<String>,
}

/// Runs the configured stages in canonical order. `out_dir` comes from
/// [`OUT_DIR_ENV`] when set.
pub fn run_flow(cfg: &FlowConfig) -> Result<FlowReport> {
    let out_dir = std::env::var_os(OUT_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| cfg.out_dir.clone());
    run_flow_in(cfg, &out_dir)
}

/// Runs the configured stages, writing artifacts under `out_dir`.
pub fn run_flow_in(cfg: &FlowConfig, out_dir: &Path) -> Result<FlowReport> {
    fs::create_dir_all(out_dir)?;
    let mut artifacts = Vec::new();
    let put = |artifacts: &mut Vec<PathBuf>, name: &str, bytes: &[u8]| -> Result<()> {
        let p = out_dir.join(name);
        write_atomic(&p, bytes)?;
        if !artifacts.contains(&p) {
            artifacts.push(p);
        }
        Ok(())
    };
    put(&mut artifacts, "config.resolved", cfg.echo().as_bytes())?;

    let mut doc: Option<ModelDocument> = match &cfg.model {
        Some(p) => Some(ModelDocument::load(p).map_err(|e| Error::Stage {
            stage: "load".into(),
            message: format!("{}: {e}", p.display()),
        })?),
        None => None,
    };

    let mut unpruned: Option<WeightMatrix> = None;
    let mut notes = Vec::new();
    for &stage in &cfg.flow {
        let err = stage_err(stage);
        let forecast_only = stage == Stage::Forecast && cfg.forecast_synapses.is_some();
        if stage.needs_model() && doc.is_none() && !forecast_only {
            return Err(fail(stage, "no model configured"));
        }
        match stage {
            Stage::Train => {
                let d = doc.as_mut().unwrap();
                let path = cfg.dataset.clone();
                let data = match (&path, cfg.dataset_kind) {
                    (Some(p), _) => load_dataset(cfg, &d.model, p, "train", cfg.train_limit),
                    (None, DatasetKind::Bumps) => load_dataset(cfg, &d.model, Path::new(""), "", cfg.train_limit),
                    (None, _) => Err(fail(stage, "no dataset configured")),
                }
                .map_err(&err)?;
                let init = d.weights.clone().unwrap_or_else(|| {
                    WeightMatrix::random(d.model.synapse_count(), d.model.gamma.w_max(), cfg.seed)
                });
                let tc = TrainConfig {
                    epochs: cfg.epochs,
                    seed: cfg.seed,
                    options: TrainOptions {
                        params: cfg.stdp,
                        freeze_pruned: d.prune_mode == Some(PruneMode::RemoveZero),
                        ..Default::default()
                    },
                    vote: cfg.vote,
                    eval: None,
                    final_metric_only: false,
                };
                let result = train_from(&d.model, init, &data, &tc).map_err(&err)?;
                d.weights = Some(result.weights);
                put(&mut artifacts, "train_metrics.csv", metrics_csv(&result.metrics).as_bytes())?;
                put(&mut artifacts, "model.json", d.to_text().as_bytes())?;
            }
            Stage::Eval => {
                let d = doc.as_ref().unwrap();
                let w = d.weights.as_ref().ok_or_else(|| fail(stage, "model has no trained weights"))?;
                let data = eval_set(cfg, &d.model, stage).map_err(&err)?;
                let (name, value) = metric(&d.model, w, &data, cfg.vote).map_err(&err)?;
                let csv = format!(
                    "metric,value,samples,synapse_count\n{name},{value:.6},{},{}\n",
                    data.len(),
                    count_synapses(&d.model, Some(w), d.prune_mode.unwrap_or(PruneMode::KeepZero))
                );
                put(&mut artifacts, "eval.csv", csv.as_bytes())?;
            }
            Stage::Prune => {
                let d = doc.as_mut().unwrap();
                let w = d.weights.as_ref().ok_or_else(|| fail(stage, "model has no trained weights"))?;
                unpruned = Some(w.clone());
                let mut pc = PruneConfig::new(w.w_max()).with_binarize(cfg.binarize).with_mode(cfg.prune_mode);
                if let Some(t) = cfg.prune_threshold {
                    pc = pc.with_threshold(t);
                }
                let (pruned, report) = prune(&d.model, w, &pc).map_err(&err)?;
                d.weights = Some(pruned);
                d.prune_mode = Some(cfg.prune_mode);
                for r in &report.reductions {
                    notes.push(format!(
                        "prune: {} {:.1}% reduction ({} of {} synapses kept)",
                        r.scope,
                        100.0 * r.reduction,
                        r.surviving,
                        r.original
                    ));
                }
                put(&mut artifacts, "prune_report.json", report.to_json().as_bytes())?;
                put(&mut artifacts, "model.json", d.to_text().as_bytes())?;
            }
            Stage::Sweep => {
                // thresholds apply to the weights as they were before this run pruned them
                let d = doc.as_ref().unwrap();
                let w = unpruned
                    .as_ref()
                    .or(d.weights.as_ref())
                    .ok_or_else(|| fail(stage, "model has no trained weights"))?;
                let data = eval_set(cfg, &d.model, stage).map_err(&err)?;
                let rows = prune_sweep(&d.model, w, &cfg.sweep, &data, cfg.binarize, cfg.vote).map_err(&err)?;
                put(&mut artifacts, "sweep.csv", sweep_csv(&rows).as_bytes())?;
            }
            Stage::Netlist => {
                let d = doc.as_ref().unwrap();
                let mode = d.prune_mode.unwrap_or(cfg.prune_mode);
                let path = out_dir.join("netlist.txt");
                let tmp = path.with_extension("tmp");
                let file = fs::File::create(&tmp)?;
                let mut w = BufWriter::new(file);
                emit_netlist(&d.model, d.weights.as_ref(), mode, &mut w).map_err(&err)?;
                w.flush()?;
                drop(w);
                fs::rename(&tmp, &path)?;
                artifacts.push(path);
            }
            Stage::Forecast => {
                let pdk = cfg.node.expect("checked when parsing");
                let synapses = match (cfg.forecast_synapses, &doc) {
                    (Some(s), _) => s,
                    (None, Some(d)) => {
                        count_synapses(&d.model, d.weights.as_ref(), d.prune_mode.unwrap_or(PruneMode::KeepZero)) as u64
                    }
                    (None, None) => return Err(fail(stage, "no model or forecast_synapses configured")),
                };
                let f = reference_model(pdk).forecast(synapses);
                notes.extend(f.warnings.iter().map(|w| format!("forecast: {w}")));
                put(&mut artifacts, "forecast.csv", forecasts_csv(&[f]).as_bytes())?;
            }
            Stage::Placecell => {
                let (rows, cols) = cfg.placecell_grid;
                let envs = default_suite(rows, cols, cfg.placecell_alphabet, cfg.seed).map_err(&err)?;
                let results = run_orientation_task(&envs, cfg.trials, cfg.seed).map_err(&err)?;
                put(&mut artifacts, "placecell.csv", recall_csv(&results).as_bytes())?;
            }
        }
    }
    Ok(FlowReport {
        stages: cfg.flow.clone(),
        artifacts,
        notes,
    })
}
