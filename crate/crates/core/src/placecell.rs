//! Place-cell minicolumns and a reduced feature-to-location recall task.
//!
//! The task places features on a toroidal grid. An observation at a
//! location is the feature there, routed to proximal segments, plus the
//! features of its four neighbours, routed to distal segments. One neuron
//! per location learns under a one-hot label enable; recall asks which
//! neuron fires first for an observation.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::learning::{train_cycle, TrainOptions};
use crate::network::{cv_group_classify, LayerSpec, LearningMode, MinicolumnSpec, ModelSpec};
use crate::neuron::{DendriteSpec, NeuronSpec, ResponseKind, SegmentKind, SegmentSpec};
use crate::temporal::{GammaCycle, SpikeTime, SpikeVolley};
use crate::weights::WeightMatrix;

/// Neurons x dendrites x segments x synapses-per-segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnShape {
    pub neurons: usize,
    pub dendrites: usize,
    pub segments: usize,
    pub synapses: usize,
}

impl ColumnShape {
    pub const fn new(neurons: usize, dendrites: usize, segments: usize, synapses: usize) -> Self {
        ColumnShape {
            neurons,
            dendrites,
            segments,
            synapses,
        }
    }

    pub fn synapse_count(&self) -> usize {
        self.neurons * self.dendrites * self.segments * self.synapses
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaceCellConfig {
    pub first: ColumnShape,
    pub second: ColumnShape,
    /// Instances of the second column shape.
    pub second_copies: usize,
    pub response: ResponseKind,
    pub grid: (usize, usize),
    pub alphabet: usize,
}

impl Default for PlaceCellConfig {
    fn default() -> Self {
        PlaceCellConfig {
            first: ColumnShape::new(40, 10, 16, 71),
            second: ColumnShape::new(30, 10, 16, 81),
            second_copies: 2,
            response: ResponseKind::Rnl,
            grid: (30, 30),
            alphabet: 16,
        }
    }
}

impl PlaceCellConfig {
    /// Small enough to simulate interactively.
    pub fn desk() -> Self {
        PlaceCellConfig {
            first: ColumnShape::new(4, 2, 2, 5),
            second: ColumnShape::new(3, 2, 2, 5),
            grid: (5, 5),
            alphabet: 4,
            ..Default::default()
        }
    }
}

fn column(shape: ColumnShape, response: ResponseKind, cycle: &GammaCycle) -> MinicolumnSpec {
    // The first half of each dendrite's segments (rounded up) is proximal.
    let proximal = shape.segments.div_ceil(2);
    let segments = (0..shape.segments)
        .map(|s| {
            let kind = if s < proximal {
                SegmentKind::Proximal
            } else {
                SegmentKind::Distal
            };
            SegmentSpec::new(kind, shape.synapses, response, cycle)
        })
        .collect();
    let neuron = NeuronSpec::uniform(shape.dendrites, DendriteSpec::new(segments));
    MinicolumnSpec::uniform(shape.neurons, neuron, 1)
}

/// One layer holding the first column and `second_copies` of the second.
pub fn build_place_cells(cfg: &PlaceCellConfig) -> Result<ModelSpec> {
    let g = GammaCycle::default();
    let mut columns = vec![column(cfg.first, cfg.response, &g)];
    for _ in 0..cfg.second_copies {
        columns.push(column(cfg.second, cfg.response, &g));
    }
    let mut m = ModelSpec::new(g);
    m.add_layer(LayerSpec::minicolumns(columns).with_id("place_cells"))?;
    Ok(m)
}

/// Features on a rows x cols torus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Environment {
    pub id: String,
    pub rows: usize,
    pub cols: usize,
    pub alphabet: usize,
    pub features: Vec<usize>,
}

impl Environment {
    pub fn new(id: impl Into<String>, rows: usize, cols: usize, alphabet: usize, features: Vec<usize>) -> Result<Self> {
        let env = Environment {
            id: id.into(),
            rows,
            cols,
            alphabet,
            features,
        };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 || self.features.len() != self.rows * self.cols {
            return Err(Error::Shape(format!(
                "environment {} holds {} features for a {}x{} grid",
                self.id,
                self.features.len(),
                self.rows,
                self.cols
            )));
        }
        if let Some(f) = self.features.iter().find(|&&f| f >= self.alphabet) {
            return Err(Error::InvalidSpec(format!(
                "environment {}: feature {f} outside alphabet of {}",
                self.id, self.alphabet
            )));
        }
        Ok(())
    }

    /// Every location carries its own feature.
    pub fn distinct(id: impl Into<String>, rows: usize, cols: usize) -> Self {
        let n = rows * cols;
        Environment {
            id: id.into(),
            rows,
            cols,
            alphabet: n,
            features: (0..n).collect(),
        }
    }

    /// Every location carries the same feature.
    pub fn uniform(id: impl Into<String>, rows: usize, cols: usize, alphabet: usize, feature: usize) -> Self {
        Environment {
            id: id.into(),
            rows,
            cols,
            alphabet,
            features: vec![feature; rows * cols],
        }
    }

    pub fn random(id: impl Into<String>, rows: usize, cols: usize, alphabet: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Environment {
            id: id.into(),
            rows,
            cols,
            alphabet,
            features: (0..rows * cols).map(|_| rng.gen_range(0..alphabet)).collect(),
        }
    }

    /// A random environment in which no two locations share both feature
    /// and neighbourhood, so context always disambiguates.
    pub fn random_unambiguous(
        id: impl Into<String>,
        rows: usize,
        cols: usize,
        alphabet: usize,
        seed: u64,
    ) -> Result<Self> {
        let id = id.into();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10_000 {
            let env = Environment::random(id.clone(), rows, cols, alphabet, rng.gen());
            let mut sigs: Vec<_> = (0..rows * cols).map(|l| env.signature(l)).collect();
            sigs.sort_unstable();
            sigs.dedup();
            if sigs.len() == rows * cols {
                return Ok(env);
            }
        }
        Err(Error::Task(format!(
            "no unambiguous {rows}x{cols} environment over {alphabet} features found"
        )))
    }

    pub fn locations(&self) -> usize {
        self.rows * self.cols
    }

    /// North, east, south and west neighbours, wrapping at the edges.
    pub fn neighbours(&self, loc: usize) -> [usize; 4] {
        let (r, c) = (loc / self.cols, loc % self.cols);
        let at = |r: usize, c: usize| r * self.cols + c;
        [
            at((r + self.rows - 1) % self.rows, c),
            at(r, (c + 1) % self.cols),
            at((r + 1) % self.rows, c),
            at(r, (c + self.cols - 1) % self.cols),
        ]
    }

    fn signature(&self, loc: usize) -> [usize; 5] {
        let n = self.neighbours(loc);
        [
            self.features[loc],
            self.features[n[0]],
            self.features[n[1]],
            self.features[n[2]],
            self.features[n[3]],
        ]
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("environment {} {} {} {}\n", self.id, self.rows, self.cols, self.alphabet);
        for r in 0..self.rows {
            let row: Vec<String> = self.features[r * self.cols..(r + 1) * self.cols]
                .iter()
                .map(usize::to_string)
                .collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }
}

/// Parses environments written by [`Environment::to_text`]; `#` starts a comment.
pub fn parse_environments(text: &str) -> Result<Vec<Environment>> {
    let mut envs = Vec::new();
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap().trim()))
        .filter(|(_, l)| !l.is_empty());
    while let Some((ln, header)) = lines.next() {
        let f: Vec<&str> = header.split_whitespace().collect();
        if f.len() != 5 || f[0] != "environment" {
            return Err(Error::Parse(format!(
                "line {ln}: expected `environment <id> <rows> <cols> <alphabet>`"
            )));
        }
        let n = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Parse(format!("line {ln}: bad number {s:?}")))
        };
        let (rows, cols, alphabet) = (n(f[2])?, n(f[3])?, n(f[4])?);
        let mut features = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (ln, row) = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("environment {}: missing grid rows", f[1])))?;
            let vals = row
                .split_whitespace()
                .map(|v| {
                    v.parse::<usize>()
                        .map_err(|_| Error::Parse(format!("line {ln}: bad feature {v:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != cols {
                return Err(Error::Parse(format!("line {ln}: expected {cols} features, got {}", vals.len())));
            }
            features.extend(vals);
        }
        envs.push(Environment::new(f[1], rows, cols, alphabet, features)?);
    }
    Ok(envs)
}

/// Tick at which the observed feature spikes; context spikes at 0, early
/// enough to advance the response.
fn feature_tick(cycle: &GammaCycle) -> u32 {
    3.min(cycle.last_tick())
}

/// Proximal lines (one per feature) followed by four distal line groups.
pub fn encode_observation(env: &Environment, loc: usize, cycle: &GammaCycle) -> SpikeVolley {
    let f = env.alphabet;
    let mut v = vec![SpikeTime::ABSENT; 5 * f];
    v[env.features[loc]] = SpikeTime::at(feature_tick(cycle));
    for (k, &n) in env.neighbours(loc).iter().enumerate() {
        v[f * (k + 1) + env.features[n]] = SpikeTime::at(0);
    }
    SpikeVolley(v)
}

/// One neuron per location: a proximal segment on the feature lines and a
/// distal segment that needs all four neighbours to match.
pub fn task_model(env: &Environment, cycle: &GammaCycle) -> Result<ModelSpec> {
    let w_max = cycle.w_max() as u32;
    let f = env.alphabet;
    let neuron = NeuronSpec::new(vec![DendriteSpec::new(vec![
        SegmentSpec::new(SegmentKind::Proximal, f, ResponseKind::Snl, cycle).with_threshold(w_max),
        SegmentSpec::new(SegmentKind::Distal, 4 * f, ResponseKind::Snl, cycle).with_threshold(4 * w_max),
    ])]);
    let mut m = ModelSpec::new(*cycle);
    m.add_layer(
        LayerSpec::minicolumns(vec![MinicolumnSpec::uniform(env.locations(), neuron, 1)])
            .with_id(format!("env_{}", env.id))
            .with_learning(LearningMode::Supervised),
    )?;
    Ok(m)
}

/// A model trained on one environment.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedEnvironment {
    pub env: Environment,
    pub model: ModelSpec,
    pub weights: WeightMatrix,
}

/// Supervised passes over every location in seeded order.
pub fn train_environment(env: &Environment, epochs: usize, seed: u64) -> Result<TrainedEnvironment> {
    env.validate()?;
    let cycle = GammaCycle::default();
    let model = task_model(env, &cycle)?;
    let plans = model.plan()?;
    let mut weights = WeightMatrix::random(model.synapse_count(), cycle.w_max(), seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..env.locations()).collect();
    let opts = TrainOptions::default();
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &loc in &order {
            let x = encode_observation(env, loc, &cycle);
            train_cycle(&model, &plans, &mut weights, &x, Some(loc), &opts)?;
        }
    }
    Ok(TrainedEnvironment {
        env: env.clone(),
        model,
        weights,
    })
}

impl TrainedEnvironment {
    /// Location identified from the observation at `loc`.
    pub fn locate(&self, loc: usize, distal: bool) -> Result<Option<usize>> {
        let mut model = self.model.clone();
        if !distal {
            for n in &mut model.layers[0].columns[0].neurons {
                n.distal_advance = 0;
            }
        }
        let x = encode_observation(&self.env, loc, &model.gamma);
        let out = model.forward(&self.weights, &x)?;
        Ok(cv_group_classify(&out[0].0))
    }

    /// Fraction of `trials` random queries answered with the true location.
    pub fn recall(&self, trials: usize, seed: u64, distal: bool) -> Result<f64> {
        if trials == 0 {
            return Err(Error::Task("recall is undefined for zero trials".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hits = 0;
        for _ in 0..trials {
            let loc = rng.gen_range(0..self.env.locations());
            if self.locate(loc, distal)? == Some(loc) {
                hits += 1;
            }
        }
        Ok(hits as f64 / trials as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecallRow {
    pub environment: String,
    pub trials: usize,
    pub recall: f64,
    pub recall_without_distal: f64,
}

/// Trains one model per environment and measures recall with and without
/// distal context.
pub fn run_orientation_task(envs: &[Environment], trials: usize, seed: u64) -> Result<Vec<RecallRow>> {
    if trials == 0 {
        return Err(Error::Task("recall is undefined for zero trials".into()));
    }
    envs.iter()
        .enumerate()
        .map(|(i, env)| {
            let s = seed.wrapping_add(i as u64 * 7919);
            let trained = train_environment(env, 2 * (env.alphabet.max(8) + 8), s)?;
            Ok(RecallRow {
                environment: env.id.clone(),
                trials,
                recall: trained.recall(trials, s, true)?,
                recall_without_distal: trained.recall(trials, s, false)?,
            })
        })
        .collect()
}

pub fn recall_csv(rows: &[RecallRow]) -> String {
    let mut s = String::from("environment,trials,recall,recall_without_distal\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{:.6},{:.6}", r.environment, r.trials, r.recall, r.recall_without_distal);
    }
    s
}

/// Environments where features repeat, plus one fully ambiguous and one
/// fully distinct grid.
pub fn default_suite(rows: usize, cols: usize, alphabet: usize, seed: u64) -> Result<Vec<Environment>> {
    let mut envs = vec![
        Environment::distinct("distinct", rows, cols),
        Environment::uniform("uniform", rows, cols, alphabet, 0),
        Environment::random_unambiguous("unambiguous", rows, cols, alphabet, seed)?,
    ];
    for k in 0..3 {
        envs.push(Environment::random(format!("random{k}"), rows, cols, alphabet, seed + 1 + k as u64));
    }
    Ok(envs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::count_synapses;
    use crate::pruning::PruneMode;

    #[test]
    fn structural_totals() {
        let cfg = PlaceCellConfig::default();
        assert_eq!(cfg.first.synapse_count(), 454_400);
        assert_eq!(cfg.second.synapse_count(), 388_800);
        let m = build_place_cells(&cfg).unwrap();
        assert_eq!(count_synapses(&m, None, PruneMode::KeepZero), 1_232_000);
        assert_eq!(m.layers[0].columns.len(), 3);
        assert_eq!(m.output_width().unwrap(), 100);

        let desk = build_place_cells(&PlaceCellConfig::desk()).unwrap();
        assert_eq!(desk.synapse_count(), 200);
    }

    #[test]
    fn torus_neighbours() {
        let e = Environment::distinct("d", 3, 4);
        assert_eq!(e.neighbours(0), [8, 1, 4, 3]);
        assert_eq!(e.neighbours(6), [2, 7, 10, 5]);
    }

    #[test]
    fn environment_text_roundtrip() {
        let envs = vec![Environment::random("a", 3, 4, 5, 1), Environment::distinct("b", 2, 2)];
        let text: String = envs.iter().map(Environment::to_text).collect();
        assert_eq!(parse_environments(&text).unwrap(), envs);
        assert!(parse_environments("environment x 2 2 3\n0 1\n").is_err());
        assert!(parse_environments("environment x 1 2 3\n0 7\n").is_err());
    }

    #[test]
    fn distinct_features_are_memorized() {
        let t = train_environment(&Environment::distinct("d", 5, 5), 16, 3).unwrap();
        assert_eq!(t.recall(100, 1, true).unwrap(), 1.0);
        assert_eq!(t.recall(100, 1, false).unwrap(), 1.0);
    }

    #[test]
    fn unambiguous_four_feature_grid_is_memorized() {
        let env = Environment::random_unambiguous("u", 5, 5, 4, 2).unwrap();
        let t = train_environment(&env, 16, 5).unwrap();
        for loc in 0..25 {
            assert_eq!(t.locate(loc, true).unwrap(), Some(loc), "location {loc}");
        }
    }

    #[test]
    fn uniform_grid_is_chance() {
        let t = train_environment(&Environment::uniform("u", 5, 5, 4, 2), 16, 3).unwrap();
        let r = t.recall(1000, 9, true).unwrap();
        assert!((r - 1.0 / 25.0).abs() < 0.03, "{r}");
    }

    #[test]
    fn zero_trials_is_an_error() {
        let t = train_environment(&Environment::distinct("d", 2, 2), 4, 3).unwrap();
        assert!(t.recall(0, 1, true).is_err());
        assert!(run_orientation_task(&[], 0, 1).is_err());
    }
}
