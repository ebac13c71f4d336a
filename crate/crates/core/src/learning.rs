//! Integer STDP and the training loop.
//!
//! Each dendrite learns through its selected segments: the earliest-firing
//! proximal and the earliest-firing distal segment (the first of each kind
//! when none fired). A selected segment is trained against its own spike
//! time if its neuron survived inhibition, or against ABSENT otherwise.
//! Unselected segments are left alone, which lets the segments of one
//! dendrite specialize on different input patterns. In supervised layers
//! only the neuron enabled by the label learns.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::network::{cv_group_classify, LayerPlan, LearningMode, ModelSpec, VoteRule};
use crate::neuron::SegmentKind;
use crate::temporal::{rand_index, SpikeTime, SpikeVolley};
use crate::weights::WeightMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StepSizes {
    pub capture: u8,
    pub backoff: u8,
    pub search: u8,
}

impl StepSizes {
    pub fn new(capture: u8, backoff: u8, search: u8) -> Self {
        StepSizes { capture, backoff, search }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StdpParams {
    pub mu_capture: u8,
    pub mu_backoff: u8,
    pub mu_search: u8,
    pub supervised: bool,
    /// Step sizes for distal segments; `None` reuses the proximal ones.
    pub distal: Option<StepSizes>,
}

impl Default for StdpParams {
    fn default() -> Self {
        StdpParams {
            mu_capture: 1,
            mu_backoff: 1,
            mu_search: 1,
            supervised: false,
            distal: None,
        }
    }
}

impl StdpParams {
    pub fn new(capture: u8, backoff: u8, search: u8) -> Self {
        StdpParams {
            mu_capture: capture,
            mu_backoff: backoff,
            mu_search: search,
            ..Default::default()
        }
    }

    pub fn validate(&self, w_max: u8) -> Result<()> {
        let mut all = vec![self.mu_capture, self.mu_backoff, self.mu_search];
        if let Some(d) = self.distal {
            all.extend([d.capture, d.backoff, d.search]);
        }
        if all.iter().any(|&m| m > w_max) {
            return Err(Error::InvalidSpec(format!("STDP step sizes must not exceed w_max {w_max}")));
        }
        Ok(())
    }

    pub fn steps(&self, kind: SegmentKind) -> StepSizes {
        match (kind, self.distal) {
            (SegmentKind::Distal, Some(d)) => d,
            _ => StepSizes::new(self.mu_capture, self.mu_backoff, self.mu_search),
        }
    }
}

/// One synapse update from the capture/backoff/search case table.
pub fn stdp_update(w: u8, t_in: SpikeTime, t_out: SpikeTime, steps: StepSizes, w_max: u8) -> u8 {
    let w = w as i16;
    let next = match (t_in.is_finite(), t_out.is_finite()) {
        (true, true) if t_in <= t_out => w + steps.capture as i16,
        (true, true) => w - steps.backoff as i16,
        (true, false) => w + steps.search as i16,
        (false, true) => w - steps.backoff as i16,
        (false, false) => w,
    };
    next.clamp(0, w_max as i16) as u8
}

/// Options shared by every training cycle.
#[derive(Debug, Clone, PartialEq)]
#[derive(Default)]
pub struct TrainOptions {
    pub params: StdpParams,
    /// Per-layer overrides, indexed like `model.layers`.
    pub layer_params: Vec<Option<StdpParams>>,
    /// Skip synapses marked pruned (a model pruned with `RemoveZero`).
    pub freeze_pruned: bool,
}


impl TrainOptions {
    pub fn with_params(params: StdpParams) -> Self {
        TrainOptions {
            params,
            ..Default::default()
        }
    }

    fn for_layer(&self, i: usize) -> StdpParams {
        self.layer_params.get(i).copied().flatten().unwrap_or(self.params)
    }
}

fn needs_label(model: &ModelSpec, opts: &TrainOptions) -> bool {
    model
        .layers
        .iter()
        .enumerate()
        .any(|(i, l)| l.learning == LearningMode::Supervised || opts.for_layer(i).supervised)
}

/// One gamma cycle: forward pass, then every update computed from the
/// pre-cycle weights and committed together. Returns the layer outputs.
pub fn train_cycle(
    model: &ModelSpec,
    plans: &[LayerPlan],
    weights: &mut WeightMatrix,
    input: &SpikeVolley,
    label: Option<usize>,
    opts: &TrainOptions,
) -> Result<Vec<SpikeVolley>> {
    if needs_label(model, opts) && label.is_none() {
        return Err(Error::Task("supervised training needs a label for every sample".into()));
    }
    let w_max = weights.w_max();

    let mut outputs: Vec<SpikeVolley> = Vec::with_capacity(model.layers.len());
    let mut evals = Vec::with_capacity(model.layers.len());
    for (i, layer) in model.layers.iter().enumerate() {
        let supervised = layer.learning == LearningMode::Supervised || opts.for_layer(i).supervised;
        let enables = if supervised {
            let width = layer.columns[0].output_width();
            let c = label.unwrap();
            if c >= width {
                return Err(Error::Task(format!(
                    "label {c} has no unit in layer {} ({width} units)",
                    layer.id
                )));
            }
            let mut e = vec![false; width];
            e[c] = true;
            Some(e)
        } else {
            None
        };
        let x = if i == 0 { input } else { &outputs[i - 1] };
        let eval = model.evaluate_layer(i, &plans[i], weights.values(), x, enables.as_deref(), true)?;
        outputs.push(eval.volley.clone());
        evals.push((eval, enables));
    }

    let mut updates: Vec<(usize, u8)> = Vec::new();
    for (i, layer) in model.layers.iter().enumerate() {
        let params = opts.for_layer(i);
        let (eval, enables) = &evals[i];
        let x = if i == 0 { input } else { &outputs[i - 1] };
        let plan = &plans[i];
        let mut t = 0;
        for (inst, lines) in plan.gather.iter().enumerate() {
            let column = layer.column_of(inst);
            let mut w_off = plan.weight_offsets[inst];
            for (n, neuron) in column.neurons.iter().enumerate() {
                let trace = &eval.traces[t];
                let won = eval.volley.0[t].is_finite();
                t += 1;
                let learns = enables.as_ref().is_none_or(|e| e[n]);
                if !learns {
                    w_off += neuron.synapse_count();
                    continue;
                }
                let mut seg_index = 0;
                for dendrite in &neuron.dendrites {
                    let selected = |kind: SegmentKind| {
                        dendrite
                            .segments
                            .iter()
                            .enumerate()
                            .filter(|(_, s)| s.kind == kind)
                            .min_by_key(|&(s, _)| (trace.segments[seg_index + s], s))
                            .map(|(s, _)| s)
                    };
                    let chosen = [selected(SegmentKind::Proximal), selected(SegmentKind::Distal)];
                    let mut in_off = 0;
                    for (s, seg) in dendrite.segments.iter().enumerate() {
                        if chosen.contains(&Some(s)) {
                            let fired = trace.segments[seg_index + s];
                            let t_out = if won { fired } else { SpikeTime::ABSENT };
                            let steps = params.steps(seg.kind);
                            for k in 0..seg.synapses {
                                let idx = w_off + k;
                                if opts.freeze_pruned && weights.is_pruned(idx) {
                                    continue;
                                }
                                let t_in = x.0[lines[in_off + k] as usize];
                                let w = weights.get(idx);
                                let next = stdp_update(w, t_in, t_out, steps, w_max);
                                if next != w {
                                    updates.push((idx, next));
                                }
                            }
                        }
                        in_off += seg.synapses;
                        w_off += seg.synapses;
                    }
                    seg_index += dendrite.segments.len();
                }
            }
        }
    }
    for (idx, w) in updates {
        weights.set(idx, w);
    }
    Ok(outputs)
}

/// Training schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub seed: u64,
    pub options: TrainOptions,
    pub vote: VoteRule,
    /// Evaluate the epoch metric on this set instead of the training set.
    pub eval: Option<Dataset>,
    /// Evaluate the metric only after the final epoch.
    pub final_metric_only: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 1,
            seed: 0,
            options: TrainOptions::default(),
            vote: VoteRule::Latency,
            eval: None,
            final_metric_only: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetric {
    pub epoch: usize,
    pub metric: String,
    pub value: f64,
    pub synapse_count: usize,
}

pub fn metrics_csv(rows: &[EpochMetric]) -> String {
    let mut s = String::from("epoch,metric,value,synapse_count\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{:.6},{}", r.epoch, r.metric, r.value, r.synapse_count);
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub weights: WeightMatrix,
    pub metrics: Vec<EpochMetric>,
}

/// Cluster or class assigned to each sample by the last layer.
pub fn predict(model: &ModelSpec, weights: &WeightMatrix, data: &Dataset, vote: VoteRule) -> Result<Vec<Option<usize>>> {
    let plans = model.plan()?;
    let supervised = model.layers.last().is_some_and(|l| l.learning == LearningMode::Supervised);
    data.inputs
        .iter()
        .map(|x| {
            let out = model.forward_planned(&plans, weights.values(), x)?;
            let last = out.last().unwrap();
            Ok(if supervised {
                model.classify(last, vote)
            } else {
                cv_group_classify(&last.0)
            })
        })
        .collect()
}

/// Fraction of samples whose prediction equals the label.
pub fn accuracy(model: &ModelSpec, weights: &WeightMatrix, data: &Dataset, vote: VoteRule) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyInput("evaluation set"));
    }
    let pred = predict(model, weights, data, vote)?;
    let hits = pred.iter().zip(&data.labels).filter(|(p, &l)| **p == Some(l)).count();
    Ok(hits as f64 / data.len() as f64)
}

/// Rand index between the earliest-winner clustering and the labels.
pub fn clustering_rand_index(model: &ModelSpec, weights: &WeightMatrix, data: &Dataset) -> Result<f64> {
    let pred = predict(model, weights, data, VoteRule::Latency)?;
    rand_index(&pred, &data.labels)
}

fn epoch_metric(model: &ModelSpec, weights: &WeightMatrix, data: &Dataset, cfg: &TrainConfig, epoch: usize) -> Result<EpochMetric> {
    let data = cfg.eval.as_ref().unwrap_or(data);
    let (metric, value) = if needs_label(model, &cfg.options) {
        ("accuracy", accuracy(model, weights, data, cfg.vote)?)
    } else {
        ("rand_index", clustering_rand_index(model, weights, data)?)
    };
    Ok(EpochMetric {
        epoch,
        metric: metric.into(),
        value,
        synapse_count: weights.len() - weights.pruned_count(),
    })
}

/// Trains from seeded random weights.
pub fn train_dataset(model: &ModelSpec, data: &Dataset, cfg: &TrainConfig) -> Result<TrainResult> {
    let init = WeightMatrix::random(model.synapse_count(), model.gamma.w_max(), cfg.seed);
    train_from(model, init, data, cfg)
}

/// Trains starting from `weights`; the seed drives sample order.
pub fn train_from(model: &ModelSpec, mut weights: WeightMatrix, data: &Dataset, cfg: &TrainConfig) -> Result<TrainResult> {
    if data.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    if data.width() != Some(model.input_width()) {
        return Err(Error::LengthMismatch {
            expected: model.input_width(),
            actual: data.width().unwrap_or(0),
            context: "dataset width vs model input",
        });
    }
    if weights.len() != model.synapse_count() {
        return Err(Error::LengthMismatch {
            expected: model.synapse_count(),
            actual: weights.len(),
            context: "initial weights",
        });
    }
    cfg.options.params.validate(weights.w_max())?;
    let plans = model.plan()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x005e_ed0f_0de5);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut metrics = Vec::new();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            train_cycle(model, &plans, &mut weights, &data.inputs[i], Some(data.labels[i]), &cfg.options)?;
        }
        if !cfg.final_metric_only || epoch + 1 == cfg.epochs {
            metrics.push(epoch_metric(model, &weights, data, cfg, epoch)?);
        }
    }
    Ok(TrainResult { weights, metrics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{CvGroupSpec, InputShape, Kernel, LayerKind, LayerSpec, MinicolumnSpec};
    use crate::neuron::{DendriteSpec, NeuronSpec, ResponseKind, SegmentSpec};
    use crate::temporal::GammaCycle;

    fn t(v: u32) -> SpikeTime {
        SpikeTime::at(v)
    }
    const A: SpikeTime = SpikeTime::ABSENT;
    const ONE: StepSizes = StepSizes {
        capture: 1,
        backoff: 1,
        search: 1,
    };

    #[test]
    fn case_table() {
        assert_eq!(stdp_update(3, t(2), t(5), ONE, 7), 4);
        assert_eq!(stdp_update(0, t(5), t(2), ONE, 7), 0);
        assert_eq!(stdp_update(7, t(0), t(0), ONE, 7), 7);
        assert_eq!(stdp_update(3, t(6), t(2), ONE, 7), 2);
        assert_eq!(stdp_update(3, t(1), A, ONE, 7), 4);
        assert_eq!(stdp_update(3, A, t(1), ONE, 7), 2);
        assert_eq!(stdp_update(3, A, A, ONE, 7), 3);
        let big = StepSizes::new(5, 5, 5);
        assert_eq!(stdp_update(6, t(0), t(0), big, 7), 7);
        assert_eq!(stdp_update(2, A, t(0), big, 7), 0);
    }

    fn single_segment(width: usize, threshold: u32, resp: ResponseKind) -> ModelSpec {
        let g = GammaCycle::default();
        let seg = SegmentSpec::new(SegmentKind::Proximal, width, resp, &g).with_threshold(threshold);
        let mut m = ModelSpec::new(g);
        m.add_layer(LayerSpec::minicolumns(vec![MinicolumnSpec::uniform(
            1,
            NeuronSpec::new(vec![DendriteSpec::new(vec![seg])]),
            1,
        )]))
        .unwrap();
        m
    }

    #[test]
    fn zero_steps_leave_weights() {
        let m = single_segment(4, 3, ResponseKind::Rnl);
        let plans = m.plan().unwrap();
        let mut w = WeightMatrix::random(4, 7, 1);
        let before = w.clone();
        let x = SpikeVolley(vec![t(0), t(3), A, t(1)]);
        let opts = TrainOptions::with_params(StdpParams::new(0, 0, 0));
        let out = train_cycle(&m, &plans, &mut w, &x, None, &opts).unwrap();
        assert_eq!(w, before);
        assert_eq!(out, m.forward(&before, &x).unwrap());
    }

    #[test]
    fn silent_input_leaves_weights() {
        let m = single_segment(4, 3, ResponseKind::Rnl);
        let plans = m.plan().unwrap();
        let mut w = WeightMatrix::random(4, 7, 2);
        let before = w.clone();
        train_cycle(&m, &plans, &mut w, &SpikeVolley::silent(4), None, &TrainOptions::default()).unwrap();
        assert_eq!(w, before);
    }

    #[test]
    fn repeated_input_saturates() {
        let m = single_segment(5, 1, ResponseKind::Snl);
        let plans = m.plan().unwrap();
        let mut w = WeightMatrix::zeros(5, 7);
        let x = SpikeVolley(vec![t(2), A, t(2), t(2), A]);
        for _ in 0..10 {
            train_cycle(&m, &plans, &mut w, &x, None, &TrainOptions::default()).unwrap();
        }
        assert_eq!(w.values(), &[7, 0, 7, 7, 0]);
    }

    #[test]
    fn supervised_gating_touches_only_label_unit() {
        let g = GammaCycle::default();
        let unit = NeuronSpec::new(vec![DendriteSpec::new(vec![
            SegmentSpec::new(SegmentKind::Proximal, 3, ResponseKind::Snl, &g).with_threshold(4),
        ])]);
        let mut m = ModelSpec::new(g);
        m.add_layer(LayerSpec::convolutional(
            LayerKind::CvGroup,
            InputShape::flat(6),
            Kernel::new(vec![3], vec![3]),
            CvGroupSpec::new(4, unit).into_column().unwrap(),
        ))
        .unwrap();
        let plans = m.plan().unwrap();
        let mut w = WeightMatrix::random(m.synapse_count(), 7, 3);
        let before = w.clone();
        let x = SpikeVolley(vec![t(0), t(1), A, t(4), A, t(2)]);
        assert!(train_cycle(&m, &plans, &mut w, &x, None, &TrainOptions::default()).is_err());
        train_cycle(&m, &plans, &mut w, &x, Some(2), &TrainOptions::default()).unwrap();
        let per_unit = 3;
        for g in 0..2 {
            for u in 0..4 {
                let r = (g * 4 + u) * per_unit..(g * 4 + u + 1) * per_unit;
                if u != 2 {
                    assert_eq!(w.values()[r.clone()], before.values()[r]);
                }
            }
        }
        assert_ne!(w, before);
    }

    #[test]
    fn only_selected_segment_learns() {
        let g = GammaCycle::default();
        let seg = SegmentSpec::new(SegmentKind::Proximal, 2, ResponseKind::Snl, &g).with_threshold(7);
        let mut m = ModelSpec::new(g);
        m.add_layer(LayerSpec::minicolumns(vec![MinicolumnSpec::uniform(
            1,
            NeuronSpec::new(vec![DendriteSpec::new(vec![seg.clone(), seg])]),
            1,
        )]))
        .unwrap();
        let plans = m.plan().unwrap();
        // second segment fires at 1, first never fires
        let mut w = WeightMatrix::from_values(vec![1, 1, 7, 0], 7).unwrap();
        let x = SpikeVolley(vec![t(0), t(0), t(1), t(3)]);
        train_cycle(&m, &plans, &mut w, &x, None, &TrainOptions::default()).unwrap();
        assert_eq!(w.values(), &[1, 1, 7, 0]);
        let x = SpikeVolley(vec![t(0), t(0), t(1), t(0)]);
        train_cycle(&m, &plans, &mut w, &x, None, &TrainOptions::default()).unwrap();
        // fires at 1: line 2 captured (already max), line 3 at 0 captured
        assert_eq!(w.values(), &[1, 1, 7, 1]);
    }

    #[test]
    fn locality_and_order_independence() {
        let m = single_segment(6, 10, ResponseKind::Rnl);
        let plans = m.plan().unwrap();
        let x = SpikeVolley(vec![t(0), t(1), t(2), A, t(5), t(7)]);
        let base = WeightMatrix::from_values(vec![4, 4, 4, 4, 4, 4], 7).unwrap();
        let mut a = base.clone();
        train_cycle(&m, &plans, &mut a, &x, None, &TrainOptions::default()).unwrap();
        // perturbing a synapse whose input is absent keeps t_out, so the others update identically
        let mut b = WeightMatrix::from_values(vec![4, 4, 4, 0, 4, 4], 7).unwrap();
        train_cycle(&m, &plans, &mut b, &x, None, &TrainOptions::default()).unwrap();
        for i in [0, 1, 2, 4, 5] {
            assert_eq!(a.get(i), b.get(i));
        }
    }

    #[test]
    fn training_is_deterministic() {
        let g = GammaCycle::default();
        let seg = SegmentSpec::new(SegmentKind::Proximal, 8, ResponseKind::Rnl, &g).with_threshold(10);
        let mut m = ModelSpec::new(g);
        m.add_layer(LayerSpec::minicolumns(vec![MinicolumnSpec::uniform(
            2,
            NeuronSpec::new(vec![DendriteSpec::new(vec![seg])]),
            1,
        )]))
        .unwrap();
        let data = Dataset::new(
            (0..6)
                .map(|i| SpikeVolley((0..8).map(|j| t(((i + j) % 8) as u32)).collect()))
                .collect(),
            vec![0, 0, 0, 1, 1, 1],
        )
        .unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            seed: 4,
            ..Default::default()
        };
        let a = train_dataset(&m, &data, &cfg).unwrap();
        let b = train_dataset(&m, &data, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.metrics.len(), 3);
        assert_eq!(a.metrics[0].metric, "rand_index");

        let none = train_dataset(&m, &data, &TrainConfig { epochs: 0, seed: 4, ..Default::default() }).unwrap();
        assert_eq!(none.weights, WeightMatrix::random(16, 7, 4));
        assert!(none.metrics.is_empty());
        assert!(metrics_csv(&a.metrics).starts_with("epoch,metric,value,synapse_count\n0,rand_index,"));
    }
}
