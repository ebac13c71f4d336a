//! Weight profiling and threshold pruning.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::Result;
use crate::learning::accuracy;
use crate::network::{ModelSpec, SegmentSite, VoteRule};
use crate::weights::WeightMatrix;

/// Whether pruned synapses are still instantiated in hardware.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneMode {
    /// Zero weights are dropped from the design; on-chip learning cannot regrow them.
    #[default]
    RemoveZero,
    /// Zero weights stay as zero-initialized learnable sites.
    KeepZero,
}

impl PruneMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PruneMode::RemoveZero => "remove_zero",
            PruneMode::KeepZero => "keep_zero",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Segment,
    Dendrite,
    Neuron,
    Layer,
    Model,
}

/// What the threshold is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdBasis {
    /// `tau` applies to raw weights.
    #[default]
    Global,
    /// `tau` is rescaled by each segment's largest weight: a segment whose
    /// maximum is `m` prunes below `ceil(tau * m / w_max)`.
    PerSegment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneConfig {
    pub threshold: u16,
    pub binarize: bool,
    pub mode: PruneMode,
    pub basis: ThresholdBasis,
}

impl PruneConfig {
    /// Prunes weights below half the maximum weight.
    pub fn new(w_max: u8) -> Self {
        PruneConfig {
            threshold: (w_max as u16).div_ceil(2),
            binarize: false,
            mode: PruneMode::RemoveZero,
            basis: ThresholdBasis::Global,
        }
    }

    pub fn with_threshold(mut self, tau: u16) -> Self {
        self.threshold = tau;
        self
    }

    pub fn with_binarize(mut self, binarize: bool) -> Self {
        self.binarize = binarize;
        self
    }

    pub fn with_mode(mut self, mode: PruneMode) -> Self {
        self.mode = mode;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScopeReduction {
    pub scope: String,
    pub original: usize,
    pub surviving: usize,
    pub reduction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    pub original: usize,
    pub pruned: usize,
    pub surviving: usize,
    pub threshold: u16,
    pub binarize: bool,
    pub mode: PruneMode,
    /// Model first, then one entry per layer.
    pub reductions: Vec<ScopeReduction>,
}

impl PruneReport {
    pub fn reduction(&self) -> f64 {
        if self.original == 0 {
            0.0
        } else {
            self.pruned as f64 / self.original as f64
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Weight histogram of one scope instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeHistogram {
    pub scope: String,
    pub buckets: Vec<usize>,
}

fn scope_label(site: &SegmentSite, scope: Scope, layer_ids: &[String]) -> String {
    let l = &layer_ids[site.layer];
    match scope {
        Scope::Model => "model".into(),
        Scope::Layer => l.clone(),
        Scope::Neuron => format!("{l}.P{}.N{}", site.position, site.neuron),
        Scope::Dendrite => format!("{l}.P{}.N{}.D{}", site.position, site.neuron, site.dendrite),
        Scope::Segment => format!(
            "{l}.P{}.N{}.D{}.S{}",
            site.position, site.neuron, site.dendrite, site.segment
        ),
    }
}

/// `w_max + 1` buckets per scope instance, in canonical order.
pub fn weight_histogram(model: &ModelSpec, weights: &WeightMatrix, scope: Scope) -> Vec<ScopeHistogram> {
    let ids: Vec<String> = model.layers.iter().map(|l| l.id.clone()).collect();
    let buckets = weights.w_max() as usize + 1;
    let mut out: Vec<ScopeHistogram> = Vec::new();
    for site in model.segment_sites() {
        let label = scope_label(&site, scope, &ids);
        if out.last().is_none_or(|h| h.scope != label) {
            out.push(ScopeHistogram {
                scope: label,
                buckets: vec![0; buckets],
            });
        }
        let h = out.last_mut().unwrap();
        for &w in &weights.values()[site.weights] {
            h.buckets[w as usize] += 1;
        }
    }
    out
}

/// Histogram of a bare weight slice.
pub fn histogram(values: &[u8], w_max: u8) -> Vec<usize> {
    let mut b = vec![0; w_max as usize + 1];
    for &w in values {
        b[w as usize] += 1;
    }
    b
}

fn prune_slice(weights: &mut WeightMatrix, range: std::ops::Range<usize>, tau: u16, binarize: bool) {
    let w_max = weights.w_max();
    for i in range {
        if (weights.get(i) as u16) < tau {
            weights.prune_at(i);
        } else if binarize && !weights.is_pruned(i) {
            weights.set(i, w_max);
        }
    }
}

/// Zeroes weights below the threshold, marking them pruned; optionally
/// lifts every survivor to `w_max`.
pub fn prune(model: &ModelSpec, weights: &WeightMatrix, cfg: &PruneConfig) -> Result<(WeightMatrix, PruneReport)> {
    let mut out = weights.clone();
    let sites = model.segment_sites();
    let w_max = weights.w_max() as u16;
    match cfg.basis {
        ThresholdBasis::Global => prune_slice(&mut out, 0..weights.len(), cfg.threshold, cfg.binarize),
        ThresholdBasis::PerSegment => {
            for site in &sites {
                let m = weights.values()[site.weights.clone()].iter().copied().max().unwrap_or(0) as u16;
                let tau = (cfg.threshold * m).div_ceil(w_max.max(1));
                prune_slice(&mut out, site.weights.clone(), tau, cfg.binarize);
            }
        }
    }

    let mut reductions = Vec::with_capacity(model.layers.len() + 1);
    let mut push = |scope: String, range: std::ops::Range<usize>| {
        let original = range.len();
        let surviving = range.filter(|&i| !out.is_pruned(i)).count();
        reductions.push(ScopeReduction {
            scope,
            original,
            surviving,
            reduction: if original == 0 {
                0.0
            } else {
                1.0 - surviving as f64 / original as f64
            },
        });
    };
    push("model".into(), 0..weights.len());
    let mut start = 0;
    for layer in &model.layers {
        let n = layer.synapse_count();
        push(layer.id.clone(), start..start + n);
        start += n;
    }

    let pruned = out.pruned_count();
    let report = PruneReport {
        original: weights.len(),
        pruned,
        surviving: weights.len() - pruned,
        threshold: cfg.threshold,
        binarize: cfg.binarize,
        mode: cfg.mode,
        reductions,
    };
    Ok((out, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub threshold: u16,
    pub surviving: usize,
    pub metric: f64,
}

/// Evaluates the model on `eval` after pruning at each threshold.
pub fn prune_sweep(
    model: &ModelSpec,
    weights: &WeightMatrix,
    thresholds: &[u16],
    eval: &Dataset,
    binarize: bool,
    vote: VoteRule,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(thresholds.len());
    for &tau in thresholds {
        let cfg = PruneConfig::new(weights.w_max()).with_threshold(tau).with_binarize(binarize);
        let (pruned, report) = prune(model, weights, &cfg)?;
        rows.push(SweepRow {
            threshold: tau,
            surviving: report.surviving,
            metric: accuracy(model, &pruned, eval, vote)?,
        });
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("threshold,surviving,metric\n");
    for r in rows {
        s.push_str(&format!("{},{},{:.6}\n", r.threshold, r.surviving, r.metric));
    }
    s
}
