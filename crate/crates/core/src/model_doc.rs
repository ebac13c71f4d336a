//! Canonical JSON model documents.
//!
//! Repeated columns, neurons, dendrites and segments are run-length encoded
//! with a `count` field, merging maximal runs of equal entries, so equal
//! models always produce identical bytes. Each top-level field sits on its
//! own line in compact form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{InputShape, Kernel, LayerKind, LayerSpec, LearningMode, MinicolumnSpec, ModelSpec};
use crate::neuron::{DendriteSpec, NeuronSpec, ResponseKind, SegmentKind, SegmentSpec};
use crate::pruning::PruneMode;
use crate::temporal::GammaCycle;
use crate::weights::WeightMatrix;

pub const FORMAT: &str = "neutnn-model/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Run<T> {
    count: usize,
    #[serde(flatten)]
    item: T,
}

fn encode_runs<T: PartialEq + Clone, U>(items: &[T], f: impl Fn(&T) -> U) -> Vec<Run<U>> {
    let mut out: Vec<Run<U>> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let mut j = i + 1;
        while j < items.len() && items[j] == items[i] {
            j += 1;
        }
        out.push(Run {
            count: j - i,
            item: f(&items[i]),
        });
        i = j;
    }
    out
}

fn decode_runs<U, T: Clone>(runs: &[Run<U>], f: impl Fn(&U) -> Result<T>) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for r in runs {
        if r.count == 0 {
            return Err(Error::Parse("run with count 0".into()));
        }
        let item = f(&r.item)?;
        out.extend(std::iter::repeat_n(item, r.count));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocSegment {
    kind: SegmentKind,
    response: ResponseKind,
    synapses: usize,
    threshold: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct DocDendrite {
    segments: Vec<Run<DocSegment>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct DocNeuron {
    distal_advance: u32,
    dendrites: Vec<Run<DocDendrite>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct DocColumn {
    wta_k: usize,
    neurons: Vec<Run<DocNeuron>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocLayer {
    id: String,
    kind: LayerKind,
    learning: LearningMode,
    input: InputShape,
    kernel: Option<Kernel>,
    columns: Vec<Run<DocColumn>>,
}

fn doc_layer(l: &LayerSpec) -> DocLayer {
    DocLayer {
        id: l.id.clone(),
        kind: l.kind,
        learning: l.learning,
        input: l.input.clone(),
        kernel: l.kernel.clone(),
        columns: encode_runs(&l.columns, |c| DocColumn {
            wta_k: c.wta_k,
            neurons: encode_runs(&c.neurons, |n| DocNeuron {
                distal_advance: n.distal_advance,
                dendrites: encode_runs(&n.dendrites, |d| DocDendrite {
                    segments: encode_runs(&d.segments, |s| DocSegment {
                        kind: s.kind,
                        response: s.response,
                        synapses: s.synapses,
                        threshold: s.threshold,
                    }),
                }),
            }),
        }),
    }
}

fn layer_spec(d: &DocLayer) -> Result<LayerSpec> {
    let columns = decode_runs(&d.columns, |c| {
        Ok(MinicolumnSpec {
            wta_k: c.wta_k,
            neurons: decode_runs(&c.neurons, |n| {
                Ok(NeuronSpec {
                    distal_advance: n.distal_advance,
                    dendrites: decode_runs(&n.dendrites, |dd| {
                        Ok(DendriteSpec {
                            segments: decode_runs(&dd.segments, |s| {
                                Ok(SegmentSpec {
                                    kind: s.kind,
                                    synapses: s.synapses,
                                    threshold: s.threshold,
                                    response: s.response,
                                })
                            })?,
                        })
                    })?,
                })
            })?,
        })
    })?;
    Ok(LayerSpec {
        id: d.id.clone(),
        kind: d.kind,
        input: d.input.clone(),
        kernel: d.kernel.clone(),
        columns,
        learning: d.learning,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDoc {
    format: String,
    gamma: GammaCycle,
    layers: Vec<DocLayer>,
    prune_mode: Option<PruneMode>,
    weights: Option<Vec<u8>>,
    pruned: Vec<usize>,
}

/// A model with its (optional) trained weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelDocument {
    pub model: ModelSpec,
    pub weights: Option<WeightMatrix>,
    /// Set once the weights have been pruned.
    pub prune_mode: Option<PruneMode>,
}

impl ModelDocument {
    pub fn new(model: ModelSpec) -> Self {
        ModelDocument {
            model,
            weights: None,
            prune_mode: None,
        }
    }

    pub fn with_weights(mut self, weights: WeightMatrix) -> Self {
        self.weights = Some(weights);
        self
    }

    pub fn to_text(&self) -> String {
        let layers: Vec<DocLayer> = self.model.layers.iter().map(doc_layer).collect();
        let mut s = String::from("{\n");
        s.push_str(&format!("\"format\":{},\n", json(&FORMAT)));
        s.push_str(&format!("\"gamma\":{},\n", json(&self.model.gamma)));
        s.push_str("\"layers\":[");
        for (i, l) in layers.iter().enumerate() {
            s.push_str(if i == 0 { "\n" } else { ",\n" });
            s.push_str(&json(l));
        }
        s.push_str(if layers.is_empty() { "],\n" } else { "\n],\n" });
        s.push_str(&format!("\"prune_mode\":{},\n", json(&self.prune_mode)));
        match &self.weights {
            Some(w) => {
                s.push_str(&format!("\"weights\":{},\n", json(w.values())));
                let pruned: Vec<usize> = (0..w.len()).filter(|&i| w.is_pruned(i)).collect();
                s.push_str(&format!("\"pruned\":{}\n", json(&pruned)));
            }
            None => s.push_str("\"weights\":null,\n\"pruned\":[]\n"),
        }
        s.push_str("}\n");
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawDoc = serde_json::from_str(text).map_err(|e| Error::Parse(format!("model document: {e}")))?;
        if raw.format != FORMAT {
            return Err(Error::Parse(format!(
                "unsupported model format {:?}; expected {FORMAT:?}",
                raw.format
            )));
        }
        raw.gamma.validate()?;
        let mut model = ModelSpec::new(raw.gamma);
        for l in &raw.layers {
            model.add_layer(layer_spec(l)?)?;
        }
        let weights = match raw.weights {
            Some(values) => {
                if values.len() != model.synapse_count() {
                    return Err(Error::LengthMismatch {
                        expected: model.synapse_count(),
                        actual: values.len(),
                        context: "model document weights",
                    });
                }
                let mut flags = vec![false; values.len()];
                for &i in &raw.pruned {
                    *flags
                        .get_mut(i)
                        .ok_or_else(|| Error::Parse(format!("pruned index {i} out of range")))? = true;
                }
                Some(WeightMatrix::from_parts(values, flags, raw.gamma.w_max())?)
            }
            None if raw.pruned.is_empty() => None,
            None => return Err(Error::Parse("pruned indices without weights".into())),
        };
        Ok(ModelDocument {
            model,
            weights,
            prune_mode: raw.prune_mode,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

fn json<T: Serialize + ?Sized>(v: &T) -> String {
    serde_json::to_string(v).expect("document values serialize")
}
