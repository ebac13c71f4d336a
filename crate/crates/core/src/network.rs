//! Minicolumns, CV groups, layers and the validated multi-layer model.
//!
//! Input volleys are laid out pixel-major with rails interleaved: line
//! `pixel * rails + rail`. A kernel layer replicates its single column at
//! every kernel position; the column sees its receptive field rail-major
//! (all pixels of rail 0, then rail 1, ...), so a segment sized to one
//! rail group covers the whole field. A layer without a kernel places its
//! columns side by side on consecutive slices of the input.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, WidthDiagnostic};
use crate::neuron::{NeuronSpec, NeuronTrace};
use crate::pruning::PruneMode;
use crate::temporal::{GammaCycle, SpikeTime, SpikeVolley};
use crate::weights::WeightMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InputShape {
    pub dims: Vec<usize>,
    pub rails: usize,
}

impl InputShape {
    pub fn new(dims: Vec<usize>, rails: usize) -> Self {
        InputShape { dims, rails }
    }

    pub fn flat(width: usize) -> Self {
        InputShape { dims: vec![width], rails: 1 }
    }

    pub fn width(&self) -> usize {
        self.dims.iter().product::<usize>() * self.rails
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Kernel {
    pub size: Vec<usize>,
    pub stride: Vec<usize>,
}

impl Kernel {
    pub fn new(size: Vec<usize>, stride: Vec<usize>) -> Self {
        Kernel { size, stride }
    }

    /// Square kernel over `dims` dimensions.
    pub fn square(size: usize, stride: usize, dims: usize) -> Self {
        Kernel {
            size: vec![size; dims],
            stride: vec![stride; dims],
        }
    }

    pub fn field_size(&self) -> usize {
        self.size.iter().product()
    }
}

/// Kernel positions along every dimension: `floor((W - k) / s) + 1`.
pub fn kernel_positions(input: &InputShape, kernel: &Kernel) -> Result<Vec<usize>> {
    if kernel.size.len() != input.dims.len() || kernel.stride.len() != input.dims.len() {
        return Err(Error::InvalidSpec(format!(
            "kernel has {} size / {} stride entries for a {}-dimensional input",
            kernel.size.len(),
            kernel.stride.len(),
            input.dims.len()
        )));
    }
    input
        .dims
        .iter()
        .zip(kernel.size.iter().zip(&kernel.stride))
        .map(|(&w, (&k, &s))| {
            if k == 0 || s == 0 {
                Err(Error::InvalidSpec("kernel size and stride must be >= 1".into()))
            } else if k > w {
                Err(Error::InvalidSpec(format!("kernel size {k} is larger than input dimension {w}")))
            } else {
                Ok((w - k) / s + 1)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Minicolumn,
    CvGroup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearningMode {
    Unsupervised,
    Supervised,
}

/// Neurons sharing one input and competing through k-WTA inhibition. In a
/// CV-group layer the neurons are CV units, one per class.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MinicolumnSpec {
    pub neurons: Vec<NeuronSpec>,
    pub wta_k: usize,
}

impl MinicolumnSpec {
    pub fn new(neurons: Vec<NeuronSpec>, wta_k: usize) -> Self {
        MinicolumnSpec { neurons, wta_k }
    }

    pub fn uniform(count: usize, neuron: NeuronSpec, wta_k: usize) -> Self {
        MinicolumnSpec::new(vec![neuron; count], wta_k)
    }

    pub fn input_width(&self) -> usize {
        self.neurons.first().map_or(0, NeuronSpec::input_width)
    }

    pub fn output_width(&self) -> usize {
        self.neurons.len()
    }

    pub fn synapse_count(&self) -> usize {
        self.neurons.iter().map(NeuronSpec::synapse_count).sum()
    }

    fn validate(&self, kind: LayerKind, cycle: &GammaCycle) -> Result<()> {
        if self.neurons.is_empty() {
            return Err(Error::InvalidSpec("column has no neurons".into()));
        }
        let width = self.input_width();
        for (n, neuron) in self.neurons.iter().enumerate() {
            neuron.validate(cycle)?;
            if neuron.input_width() != width {
                return Err(Error::InvalidSpec(format!(
                    "neuron {n} consumes {} lines but neuron 0 consumes {width}",
                    neuron.input_width()
                )));
            }
            if kind == LayerKind::CvGroup && neuron.dendrites.len() != 1 {
                return Err(Error::InvalidSpec(format!(
                    "CV unit {n} has {} dendrites; CV units have exactly one",
                    neuron.dendrites.len()
                )));
            }
        }
        if kind == LayerKind::Minicolumn && (self.wta_k == 0 || self.wta_k > self.neurons.len()) {
            return Err(Error::InvalidSpec(format!(
                "wta_k {} must be in 1..={}",
                self.wta_k,
                self.neurons.len()
            )));
        }
        Ok(())
    }
}

/// CV units voting by earliest spike, one unit per class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CvGroupSpec {
    pub units: Vec<NeuronSpec>,
    pub class_count: usize,
}

impl CvGroupSpec {
    pub fn new(class_count: usize, unit: NeuronSpec) -> Self {
        CvGroupSpec {
            units: vec![unit; class_count],
            class_count,
        }
    }

    pub fn into_column(self) -> Result<MinicolumnSpec> {
        if self.units.len() != self.class_count {
            return Err(Error::InvalidSpec(format!(
                "CV group has {} units for {} classes",
                self.units.len(),
                self.class_count
            )));
        }
        Ok(MinicolumnSpec::new(self.units, 1))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LayerSpec {
    pub id: String,
    pub kind: LayerKind,
    pub input: InputShape,
    pub kernel: Option<Kernel>,
    pub columns: Vec<MinicolumnSpec>,
    pub learning: LearningMode,
}

impl LayerSpec {
    /// Columns placed side by side over a flat input.
    pub fn minicolumns(columns: Vec<MinicolumnSpec>) -> Self {
        let width = columns.iter().map(MinicolumnSpec::input_width).sum();
        LayerSpec {
            id: String::new(),
            kind: LayerKind::Minicolumn,
            input: InputShape::flat(width),
            kernel: None,
            columns,
            learning: LearningMode::Unsupervised,
        }
    }

    /// One column replicated at every kernel position.
    pub fn convolutional(kind: LayerKind, input: InputShape, kernel: Kernel, column: MinicolumnSpec) -> Self {
        LayerSpec {
            id: String::new(),
            kind,
            input,
            kernel: Some(kernel),
            columns: vec![column],
            learning: match kind {
                LayerKind::Minicolumn => LearningMode::Unsupervised,
                LayerKind::CvGroup => LearningMode::Supervised,
            },
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn with_input(mut self, input: InputShape) -> Self {
        self.input = input;
        self
    }

    pub fn with_learning(mut self, learning: LearningMode) -> Self {
        self.learning = learning;
        self
    }

    pub fn input_width(&self) -> usize {
        self.input.width()
    }

    /// Positions per dimension, or `None` without a kernel.
    pub fn positions_per_dim(&self) -> Result<Option<Vec<usize>>> {
        self.kernel
            .as_ref()
            .map(|k| kernel_positions(&self.input, k))
            .transpose()
    }

    /// Number of column instances: kernel positions, or the column count.
    pub fn instance_count(&self) -> usize {
        match self.positions_per_dim() {
            Ok(Some(p)) => p.iter().product(),
            Ok(None) => self.columns.len(),
            Err(_) => 0,
        }
    }

    pub fn column_of(&self, instance: usize) -> &MinicolumnSpec {
        if self.kernel.is_some() {
            &self.columns[0]
        } else {
            &self.columns[instance]
        }
    }

    pub fn output_width(&self) -> Result<usize> {
        output_width(self)
    }

    /// Shape seen by a following kernel layer: positions with one rail per
    /// column output.
    pub fn output_shape(&self) -> Result<InputShape> {
        match self.positions_per_dim()? {
            Some(p) => Ok(InputShape::new(p, self.columns[0].output_width())),
            None => Ok(InputShape::flat(self.output_width()?)),
        }
    }

    pub fn synapse_count(&self) -> usize {
        (0..self.instance_count())
            .map(|i| self.column_of(i).synapse_count())
            .sum()
    }

    pub fn validate(&self, cycle: &GammaCycle) -> Result<()> {
        if self.columns.is_empty() {
            return Err(Error::InvalidSpec(format!("layer {} has no columns", self.id)));
        }
        if self.input.rails == 0 || self.input.dims.is_empty() || self.input.dims.contains(&0) {
            return Err(Error::InvalidSpec(format!("layer {} has an empty input shape", self.id)));
        }
        for c in &self.columns {
            c.validate(self.kind, cycle)?;
        }
        match &self.kernel {
            Some(kernel) => {
                if self.columns.len() != 1 {
                    return Err(Error::InvalidSpec(format!(
                        "kernel layer {} must hold exactly one column, found {}",
                        self.id,
                        self.columns.len()
                    )));
                }
                kernel_positions(&self.input, kernel)?;
                let field = kernel.field_size() * self.input.rails;
                if self.columns[0].input_width() != field {
                    return Err(Error::InvalidSpec(format!(
                        "layer {}: column consumes {} lines but the receptive field has {} ({} x {} rails)",
                        self.id,
                        self.columns[0].input_width(),
                        field,
                        kernel.field_size(),
                        self.input.rails
                    )));
                }
            }
            None => {
                let total: usize = self.columns.iter().map(MinicolumnSpec::input_width).sum();
                if total != self.input_width() {
                    return Err(Error::InvalidSpec(format!(
                        "layer {}: columns consume {total} lines but the input has {}",
                        self.id,
                        self.input_width()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Input line feeding each column input, per instance.
    pub fn gather_plan(&self) -> Result<Vec<Vec<u32>>> {
        match &self.kernel {
            None => {
                let mut offset = 0u32;
                Ok(self
                    .columns
                    .iter()
                    .map(|c| {
                        let w = c.input_width() as u32;
                        let lines = (offset..offset + w).collect();
                        offset += w;
                        lines
                    })
                    .collect())
            }
            Some(kernel) => {
                let positions = kernel_positions(&self.input, kernel)?;
                let dims = &self.input.dims;
                let rails = self.input.rails;
                let instances: usize = positions.iter().product();
                let offsets = row_major_indices(&kernel.size);
                let mut plan = Vec::with_capacity(instances);
                for pos in row_major_indices(&positions) {
                    let mut lines = Vec::with_capacity(offsets.len() * rails);
                    for rail in 0..rails {
                        for off in &offsets {
                            let mut flat = 0usize;
                            for d in 0..dims.len() {
                                flat = flat * dims[d] + pos[d] * kernel.stride[d] + off[d];
                            }
                            lines.push((flat * rails + rail) as u32);
                        }
                    }
                    plan.push(lines);
                }
                Ok(plan)
            }
        }
    }
}

fn row_major_indices(extent: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = extent.iter().product();
    let mut out = Vec::with_capacity(total);
    for mut i in 0..total {
        let mut idx = vec![0; extent.len()];
        for d in (0..extent.len()).rev() {
            idx[d] = i % extent[d];
            i /= extent[d];
        }
        out.push(idx);
    }
    out
}

/// Output lines of a layer: instances times neurons per column.
pub fn output_width(layer: &LayerSpec) -> Result<usize> {
    match layer.positions_per_dim()? {
        Some(p) => Ok(p.iter().product::<usize>() * layer.columns[0].output_width()),
        None => Ok(layer.columns.iter().map(MinicolumnSpec::output_width).sum()),
    }
}

/// k-WTA lateral inhibition: the `k` earliest finite spikes survive, ties
/// going to the lower index.
pub fn k_wta(times: &[SpikeTime], k: usize) -> Vec<SpikeTime> {
    let mut order: Vec<usize> = (0..times.len()).filter(|&i| times[i].is_finite()).collect();
    order.sort_by_key(|&i| (times[i], i));
    let mut out = vec![SpikeTime::ABSENT; times.len()];
    for &i in order.iter().take(k) {
        out[i] = times[i];
    }
    out
}

/// Earliest-spiking unit, ties to the lowest class; `None` when all are silent.
pub fn cv_group_classify(unit_times: &[SpikeTime]) -> Option<usize> {
    unit_times
        .iter()
        .enumerate()
        .filter(|(_, t)| t.is_finite())
        .min_by_key(|&(i, &t)| (t, i))
        .map(|(i, _)| i)
}

/// How the CV groups of a layer combine into one prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoteRule {
    /// Lowest summed unit latency across groups (silent units count as `t_max`).
    #[default]
    Latency,
    /// Most group wins, each group voting with [`cv_group_classify`].
    Plurality,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModelSpec {
    pub gamma: GammaCycle,
    pub layers: Vec<LayerSpec>,
}

/// Cached routing for forward evaluation.
#[derive(Debug, Clone)]
pub struct LayerPlan {
    pub gather: Vec<Vec<u32>>,
    /// Start of each instance's weights in the model weight vector.
    pub weight_offsets: Vec<usize>,
    pub weight_range: std::ops::Range<usize>,
}

/// Result of evaluating one layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerEval {
    /// Post-inhibition outputs (CV groups: gated unit times).
    pub volley: SpikeVolley,
    /// Per (instance, neuron) traces; empty unless requested.
    pub traces: Vec<NeuronTrace>,
}

impl ModelSpec {
    pub fn new(gamma: GammaCycle) -> Self {
        ModelSpec { gamma, layers: Vec::new() }
    }

    pub fn input_width(&self) -> usize {
        self.layers.first().map_or(0, LayerSpec::input_width)
    }

    pub fn output_width(&self) -> Result<usize> {
        self.layers.last().map_or(Ok(0), output_width)
    }

    /// Appends `layer` when its input width matches the current output
    /// width; otherwise explains the mismatch and suggests fixes.
    pub fn add_layer(&mut self, mut layer: LayerSpec) -> Result<&LayerSpec> {
        if layer.id.is_empty() {
            let mut n = self.layers.len();
            while self.layers.iter().any(|l| l.id == format!("L{n}")) {
                n += 1;
            }
            layer.id = format!("L{n}");
        }
        if self.layers.iter().any(|l| l.id == layer.id) {
            return Err(Error::InvalidSpec(format!("duplicate layer id {}", layer.id)));
        }
        layer.validate(&self.gamma)?;
        if let Some(last) = self.layers.last() {
            let produced = output_width(last)?;
            let expected = layer.input_width();
            if produced != expected {
                return Err(Error::WidthMismatch(WidthDiagnostic {
                    layer_id: layer.id.clone(),
                    expected: produced,
                    actual: expected,
                    suggestions: suggest_fixes(last, &layer, produced)?,
                }));
            }
        }
        self.layers.push(layer);
        Ok(self.layers.last().unwrap())
    }

    /// Full structural validation, including inter-layer widths.
    pub fn validate(&self) -> Result<()> {
        self.gamma.validate()?;
        let mut check = ModelSpec::new(self.gamma);
        for layer in &self.layers {
            check.add_layer(layer.clone())?;
        }
        Ok(())
    }

    pub fn synapse_count(&self) -> usize {
        self.layers.iter().map(LayerSpec::synapse_count).sum()
    }

    pub fn plan(&self) -> Result<Vec<LayerPlan>> {
        let mut offset = 0;
        let mut plans = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let gather = layer.gather_plan()?;
            let start = offset;
            let mut weight_offsets = Vec::with_capacity(gather.len());
            for i in 0..gather.len() {
                weight_offsets.push(offset);
                offset += layer.column_of(i).synapse_count();
            }
            plans.push(LayerPlan {
                gather,
                weight_offsets,
                weight_range: start..offset,
            });
        }
        Ok(plans)
    }

    /// Evaluates one layer. `enables` gates neurons by their index within a
    /// column (CV units through their enable bit).
    pub fn evaluate_layer(
        &self,
        layer_index: usize,
        plan: &LayerPlan,
        weights: &[u8],
        input: &SpikeVolley,
        enables: Option<&[bool]>,
        keep_traces: bool,
    ) -> Result<LayerEval> {
        let layer = &self.layers[layer_index];
        if input.width() != layer.input_width() {
            return Err(Error::LengthMismatch {
                expected: layer.input_width(),
                actual: input.width(),
                context: "layer input",
            });
        }
        let mut volley = Vec::with_capacity(output_width(layer)?);
        let mut traces = Vec::new();
        let mut field = Vec::new();
        for (inst, lines) in plan.gather.iter().enumerate() {
            let column = layer.column_of(inst);
            field.clear();
            field.extend(lines.iter().map(|&l| input.0[l as usize]));
            let mut w_off = plan.weight_offsets[inst];
            let mut fires = Vec::with_capacity(column.neurons.len());
            for (n, neuron) in column.neurons.iter().enumerate() {
                let w = &weights[w_off..w_off + neuron.synapse_count()];
                w_off += neuron.synapse_count();
                let enable = enables.is_none_or(|e| e.get(n).copied().unwrap_or(false));
                let trace = match layer.kind {
                    // A gated-off neuron is silent whatever its segments do.
                    _ if !enable => NeuronTrace::default(),
                    LayerKind::CvGroup => neuron.evaluate_cv(w, &field, enable, &self.gamma),
                    LayerKind::Minicolumn => neuron.evaluate(w, &field, &self.gamma),
                };
                fires.push(trace.fire);
                if keep_traces {
                    traces.push(trace);
                }
            }
            match layer.kind {
                LayerKind::CvGroup => volley.extend(fires),
                LayerKind::Minicolumn => volley.extend(k_wta(&fires, column.wta_k)),
            }
        }
        Ok(LayerEval {
            volley: SpikeVolley(volley),
            traces,
        })
    }

    /// Threads a volley through every layer; returns each layer's output.
    pub fn forward(&self, weights: &WeightMatrix, input: &SpikeVolley) -> Result<Vec<SpikeVolley>> {
        let plans = self.plan()?;
        self.forward_planned(&plans, weights.values(), input)
    }

    pub fn forward_planned(&self, plans: &[LayerPlan], weights: &[u8], input: &SpikeVolley) -> Result<Vec<SpikeVolley>> {
        if weights.len() != self.synapse_count() {
            return Err(Error::LengthMismatch {
                expected: self.synapse_count(),
                actual: weights.len(),
                context: "model weights",
            });
        }
        let mut outputs: Vec<SpikeVolley> = Vec::with_capacity(self.layers.len());
        for (i, plan) in plans.iter().enumerate() {
            let x = if i == 0 { input } else { &outputs[i - 1] };
            let eval = self.evaluate_layer(i, plan, weights, x, None, false)?;
            outputs.push(eval.volley);
        }
        Ok(outputs)
    }

    /// Class predicted by the last layer, read as CV groups (or minicolumns
    /// whose neuron index is the class).
    pub fn classify(&self, last_output: &SpikeVolley, rule: VoteRule) -> Option<usize> {
        let layer = self.layers.last()?;
        let per = layer.columns[0].output_width();
        let t_max = self.gamma.t_max;
        match rule {
            VoteRule::Latency => {
                let mut totals = vec![0u64; per];
                let mut any = false;
                for group in last_output.0.chunks(per) {
                    for (c, t) in group.iter().enumerate() {
                        any |= t.is_finite();
                        totals[c] += t.time_or(t_max) as u64;
                    }
                }
                if !any {
                    return None;
                }
                totals.iter().enumerate().min_by_key(|&(c, &s)| (s, c)).map(|(c, _)| c)
            }
            VoteRule::Plurality => {
                let mut votes = vec![0usize; per];
                for group in last_output.0.chunks(per) {
                    if let Some(c) = cv_group_classify(group) {
                        votes[c] += 1;
                    }
                }
                if votes.iter().all(|&v| v == 0) {
                    return None;
                }
                votes.iter().enumerate().max_by_key(|&(c, &v)| (v, std::cmp::Reverse(c))).map(|(c, _)| c)
            }
        }
    }
}

/// Instantiated synapse sites. `RemoveZero` drops pruned synapses.
pub fn count_synapses(model: &ModelSpec, weights: Option<&WeightMatrix>, mode: PruneMode) -> usize {
    let sites = model.synapse_count();
    match (mode, weights) {
        (PruneMode::RemoveZero, Some(w)) => sites - w.pruned_count(),
        _ => sites,
    }
}

/// One segment's place in the model and its slice of the weight vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentSite {
    pub layer: usize,
    pub position: usize,
    pub neuron: usize,
    pub dendrite: usize,
    pub segment: usize,
    pub weights: std::ops::Range<usize>,
}

impl ModelSpec {
    /// Every segment in canonical (layer, position, neuron, dendrite,
    /// segment) order.
    pub fn segment_sites(&self) -> Vec<SegmentSite> {
        let mut out = Vec::new();
        let mut offset = 0;
        for (l, layer) in self.layers.iter().enumerate() {
            for p in 0..layer.instance_count() {
                for (n, neuron) in layer.column_of(p).neurons.iter().enumerate() {
                    for (d, dendrite) in neuron.dendrites.iter().enumerate() {
                        for (s, seg) in dendrite.segments.iter().enumerate() {
                            out.push(SegmentSite {
                                layer: l,
                                position: p,
                                neuron: n,
                                dendrite: d,
                                segment: s,
                                weights: offset..offset + seg.synapses,
                            });
                            offset += seg.synapses;
                        }
                    }
                }
            }
        }
        out
    }
}

fn divisors_near(n: usize) -> Vec<usize> {
    (1..=n).filter(|d| n.is_multiple_of(*d)).collect()
}

fn suggest_fixes(last: &LayerSpec, layer: &LayerSpec, produced: usize) -> Result<Vec<String>> {
    let expected = layer.input_width();
    let mut out = Vec::new();
    let shape = last.output_shape()?;
    out.push(format!(
        "declare the new layer input as dims {:?} with {} rails (width {produced})",
        shape.dims, shape.rails
    ));

    let prev_instances = last.instance_count();
    if prev_instances > 0 && expected.is_multiple_of(prev_instances) && last.kernel.is_some() {
        out.push(format!(
            "give layer {} {} neurons per column ({} positions x {} = {expected})",
            last.id,
            expected / prev_instances,
            prev_instances,
            expected / prev_instances
        ));
    }
    if last.kernel.is_none() && last.columns.len() == 1 {
        out.push(format!(
            "give layer {} {expected} neurons so it produces {expected} outputs",
            last.id
        ));
    }

    if layer.kernel.is_none() {
        let col_width = layer.columns.first().map_or(0, MinicolumnSpec::input_width);
        if col_width > 0 && produced.is_multiple_of(col_width) {
            out.push(format!(
                "use {} columns of input width {col_width} in layer {}",
                produced / col_width,
                layer.id
            ));
        }
        if layer.columns.len() == 1 {
            out.push(format!(
                "resize layer {} segments so each dendrite consumes {produced} lines",
                layer.id
            ));
        }
    } else if let Some(k) = &layer.kernel {
        let rails = layer.input.rails;
        if rails > 0 && produced.is_multiple_of(rails) {
            let pixels = produced / rails;
            let side = (pixels as f64).sqrt().round() as usize;
            if layer.input.dims.len() == 2 && side * side == pixels {
                out.push(format!(
                    "reshape layer {} input to dims [{side}, {side}] with {rails} rails",
                    layer.id
                ));
            } else if layer.input.dims.len() == 1 {
                out.push(format!("reshape layer {} input to dims [{pixels}] with {rails} rails", layer.id));
            }
        }
        let field = k.field_size();
        if field > 0 {
            let rails_options: Vec<usize> = divisors_near(produced)
                .into_iter()
                .filter(|r| (produced / r) >= field)
                .take(4)
                .collect();
            if !rails_options.is_empty() {
                out.push(format!(
                    "or choose a rail count dividing {produced}, e.g. {:?}",
                    rails_options
                ));
            }
        }
    }
    Ok(out)
}
