//! Synapse, segment, active-dendrite and neuron-body models.
//!
//! A segment is a point neuron: it sums non-leaking synaptic responses and
//! spikes at the first tick its body potential reaches the threshold. A
//! dendrite forwards its earliest proximal and earliest distal segment
//! spikes. The neuron body fires at the earliest proximal spike, advanced by
//! `distal_advance` ticks for every dendrite whose distal context arrived no
//! later than that spike.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::temporal::{GammaCycle, SpikeTime};

/// Synaptic response function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseKind {
    /// Ramp-no-leak: rises by one per tick from the input spike, saturating at the weight.
    Rnl,
    /// Step-no-leak: jumps to the weight at the input spike.
    Snl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Distal,
    Proximal,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub kind: SegmentKind,
    pub synapses: usize,
    pub threshold: u32,
    pub response: ResponseKind,
}

impl SegmentSpec {
    /// Segment with the default threshold `ceil(synapses * w_max / 2)`.
    pub fn new(kind: SegmentKind, synapses: usize, response: ResponseKind, cycle: &GammaCycle) -> Self {
        SegmentSpec {
            kind,
            synapses,
            threshold: default_threshold(synapses, cycle),
            response,
        }
    }

    pub fn with_threshold(mut self, threshold: u32) -> Self {
        self.threshold = threshold;
        self
    }

    /// Largest body potential the segment can ever reach.
    pub fn max_potential(&self, cycle: &GammaCycle) -> u64 {
        let per_synapse = match self.response {
            ResponseKind::Rnl => (cycle.w_max() as u32).min(cycle.t_max),
            ResponseKind::Snl => cycle.w_max() as u32,
        };
        self.synapses as u64 * per_synapse as u64
    }

    pub fn validate(&self, cycle: &GammaCycle) -> Result<()> {
        if self.synapses == 0 {
            return Err(Error::InvalidSpec("segment needs at least one synapse".into()));
        }
        if self.threshold == 0 {
            return Err(Error::InvalidSpec("segment threshold must be >= 1".into()));
        }
        if self.threshold as u64 > self.max_potential(cycle) {
            return Err(Error::InvalidSpec(format!(
                "segment threshold {} exceeds the reachable potential {}",
                self.threshold,
                self.max_potential(cycle)
            )));
        }
        Ok(())
    }
}

pub fn default_threshold(synapses: usize, cycle: &GammaCycle) -> u32 {
    (synapses as u64 * cycle.w_max() as u64).div_ceil(2) as u32
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DendriteSpec {
    pub segments: Vec<SegmentSpec>,
}

impl DendriteSpec {
    pub fn new(segments: Vec<SegmentSpec>) -> Self {
        DendriteSpec { segments }
    }

    /// Input lines consumed; segments partition them in order.
    pub fn input_width(&self) -> usize {
        self.segments.iter().map(|s| s.synapses).sum()
    }

    pub fn synapse_count(&self) -> usize {
        self.input_width()
    }

    pub fn has_proximal(&self) -> bool {
        self.segments.iter().any(|s| s.kind == SegmentKind::Proximal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NeuronSpec {
    pub dendrites: Vec<DendriteSpec>,
    pub distal_advance: u32,
}

impl NeuronSpec {
    pub fn new(dendrites: Vec<DendriteSpec>) -> Self {
        NeuronSpec {
            dendrites,
            distal_advance: 1,
        }
    }

    pub fn with_distal_advance(mut self, alpha: u32) -> Self {
        self.distal_advance = alpha;
        self
    }

    /// `count` identical dendrites.
    pub fn uniform(count: usize, dendrite: DendriteSpec) -> Self {
        NeuronSpec::new(vec![dendrite; count])
    }

    /// Every dendrite sees the whole neuron input.
    pub fn input_width(&self) -> usize {
        self.dendrites.first().map_or(0, DendriteSpec::input_width)
    }

    pub fn synapse_count(&self) -> usize {
        self.dendrites.iter().map(DendriteSpec::synapse_count).sum()
    }

    pub fn segment_count(&self) -> usize {
        self.dendrites.iter().map(|d| d.segments.len()).sum()
    }

    pub fn has_proximal(&self) -> bool {
        self.dendrites.iter().any(DendriteSpec::has_proximal)
    }

    pub fn validate(&self, cycle: &GammaCycle) -> Result<()> {
        if self.dendrites.is_empty() {
            return Err(Error::InvalidSpec("neuron needs at least one dendrite".into()));
        }
        let width = self.input_width();
        for (d, dendrite) in self.dendrites.iter().enumerate() {
            if dendrite.segments.is_empty() {
                return Err(Error::InvalidSpec(format!("dendrite {d} has no segments")));
            }
            if dendrite.input_width() != width {
                return Err(Error::InvalidSpec(format!(
                    "dendrite {d} consumes {} lines but dendrite 0 consumes {width}",
                    dendrite.input_width()
                )));
            }
            for s in &dendrite.segments {
                s.validate(cycle)?;
            }
        }
        Ok(())
    }
}

/// Contribution of one synapse to its segment body at tick `t`.
pub fn synapse_response(w: u8, t_in: SpikeTime, kind: ResponseKind, t: u32) -> u32 {
    let Some(arrival) = t_in.time() else {
        return 0;
    };
    if t < arrival {
        return 0;
    }
    match kind {
        ResponseKind::Rnl => (t - arrival + 1).min(w as u32),
        ResponseKind::Snl => w as u32,
    }
}

/// Earliest tick at which the summed responses reach `threshold`.
///
/// Event-driven: each ramp adds one unit of slope from its arrival until it
/// saturates, each step adds its weight once, so the potential is swept in
/// `O(synapses + t_max)`.
pub fn fire_time(weights: &[u8], inputs: &[SpikeTime], threshold: u32, response: ResponseKind, t_max: u32) -> SpikeTime {
    debug_assert_eq!(weights.len(), inputs.len());
    let horizon = t_max as usize;
    let mut stack = [0i64; 66];
    let mut heap;
    let events: &mut [i64] = if horizon < stack.len() {
        &mut stack[..horizon + 1]
    } else {
        heap = vec![0i64; horizon + 1];
        &mut heap
    };

    for (&w, &t_in) in weights.iter().zip(inputs) {
        if w == 0 {
            continue;
        }
        let Some(arrival) = t_in.time() else { continue };
        let arrival = arrival as usize;
        if arrival >= horizon {
            continue;
        }
        match response {
            ResponseKind::Rnl => {
                events[arrival] += 1;
                let end = (arrival + w as usize).min(horizon);
                events[end] -= 1;
            }
            ResponseKind::Snl => events[arrival] += w as i64,
        }
    }

    let threshold = threshold as i64;
    let mut potential = 0i64;
    let mut slope = 0i64;
    for (t, &delta) in events[..horizon].iter().enumerate() {
        match response {
            ResponseKind::Rnl => {
                slope += delta;
                potential += slope;
            }
            ResponseKind::Snl => potential += delta,
        }
        if potential >= threshold {
            return SpikeTime::at(t as u32);
        }
    }
    SpikeTime::ABSENT
}

/// Fire time of one segment for its slice of the input volley.
pub fn segment_fire_time(weights: &[u8], inputs: &[SpikeTime], spec: &SegmentSpec, cycle: &GammaCycle) -> Result<SpikeTime> {
    if weights.len() != spec.synapses {
        return Err(Error::LengthMismatch {
            expected: spec.synapses,
            actual: weights.len(),
            context: "segment weights",
        });
    }
    if inputs.len() != spec.synapses {
        return Err(Error::LengthMismatch {
            expected: spec.synapses,
            actual: inputs.len(),
            context: "segment inputs",
        });
    }
    Ok(fire_time(weights, inputs, spec.threshold, spec.response, cycle.t_max))
}

/// Earliest proximal and earliest distal spike of one dendrite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DendriteOutput {
    pub proximal: SpikeTime,
    pub distal: SpikeTime,
}

impl DendriteOutput {
    pub const SILENT: DendriteOutput = DendriteOutput {
        proximal: SpikeTime::ABSENT,
        distal: SpikeTime::ABSENT,
    };

    /// Earliest spike of either kind.
    pub fn earliest(&self) -> SpikeTime {
        self.proximal.min(self.distal)
    }
}

pub fn dendrite_output(segment_times: &[(SegmentKind, SpikeTime)]) -> DendriteOutput {
    let mut out = DendriteOutput::SILENT;
    for &(kind, t) in segment_times {
        match kind {
            SegmentKind::Proximal => out.proximal = out.proximal.min(t),
            SegmentKind::Distal => out.distal = out.distal.min(t),
        }
    }
    out
}

/// Neuron body: proximal drive is required, each dendrite with timely
/// distal context pulls the spike `alpha` ticks earlier.
pub fn neuron_fire_time(dendrite_outputs: &[DendriteOutput], alpha: u32) -> SpikeTime {
    let proximal = dendrite_outputs
        .iter()
        .map(|d| d.proximal)
        .min()
        .unwrap_or(SpikeTime::ABSENT);
    let Some(p) = proximal.time() else {
        return SpikeTime::ABSENT;
    };
    let context = dendrite_outputs
        .iter()
        .filter(|d| d.distal.time().is_some_and(|t| t <= p))
        .count() as u32;
    SpikeTime::at(p.saturating_sub(alpha.saturating_mul(context)))
}

/// Clustering-voter unit: the proximal segment reduced to a 1-bit enable.
pub fn cv_unit_fire(enable: bool, segment_time: SpikeTime) -> SpikeTime {
    if enable {
        segment_time
    } else {
        SpikeTime::ABSENT
    }
}

/// Per-segment and per-dendrite intermediate results of a neuron evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NeuronTrace {
    /// Segment fire times in canonical (dendrite, segment) order.
    pub segments: Vec<SpikeTime>,
    pub dendrites: Vec<DendriteOutput>,
    pub fire: SpikeTime,
}

impl Default for SpikeTime {
    fn default() -> Self {
        SpikeTime::ABSENT
    }
}

impl NeuronSpec {
    /// Evaluates the neuron. `weights` holds `synapse_count()` entries in
    /// (dendrite, segment, synapse) order; `input` has `input_width()` lines.
    pub fn evaluate(&self, weights: &[u8], input: &[SpikeTime], cycle: &GammaCycle) -> NeuronTrace {
        let mut trace = NeuronTrace {
            segments: Vec::with_capacity(self.segment_count()),
            dendrites: Vec::with_capacity(self.dendrites.len()),
            fire: SpikeTime::ABSENT,
        };
        self.evaluate_into(weights, input, cycle, &mut trace);
        trace.fire = neuron_fire_time(&trace.dendrites, self.distal_advance);
        trace
    }

    /// Evaluates as a CV unit: the single dendrite's earliest segment spike,
    /// gated by `enable`.
    pub fn evaluate_cv(&self, weights: &[u8], input: &[SpikeTime], enable: bool, cycle: &GammaCycle) -> NeuronTrace {
        let mut trace = NeuronTrace::default();
        self.evaluate_into(weights, input, cycle, &mut trace);
        let earliest = trace
            .dendrites
            .iter()
            .map(DendriteOutput::earliest)
            .min()
            .unwrap_or(SpikeTime::ABSENT);
        trace.fire = cv_unit_fire(enable, earliest);
        trace
    }

    fn evaluate_into(&self, weights: &[u8], input: &[SpikeTime], cycle: &GammaCycle, trace: &mut NeuronTrace) {
        debug_assert_eq!(weights.len(), self.synapse_count());
        debug_assert_eq!(input.len(), self.input_width());
        let mut w_off = 0;
        for dendrite in &self.dendrites {
            let mut out = DendriteOutput::SILENT;
            let mut in_off = 0;
            for seg in &dendrite.segments {
                let n = seg.synapses;
                let t = fire_time(
                    &weights[w_off..w_off + n],
                    &input[in_off..in_off + n],
                    seg.threshold,
                    seg.response,
                    cycle.t_max,
                );
                match seg.kind {
                    SegmentKind::Proximal => out.proximal = out.proximal.min(t),
                    SegmentKind::Distal => out.distal = out.distal.min(t),
                }
                trace.segments.push(t);
                w_off += n;
                in_off += n;
            }
            trace.dendrites.push(out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: u32) -> SpikeTime {
        SpikeTime::at(v)
    }

    const A: SpikeTime = SpikeTime::ABSENT;

    #[test]
    fn zero_weight_is_silent() {
        for tick in 0..8 {
            assert_eq!(synapse_response(0, t(0), ResponseKind::Rnl, tick), 0);
            assert_eq!(synapse_response(0, t(3), ResponseKind::Snl, tick), 0);
        }
    }

    #[test]
    fn step_response() {
        assert_eq!(synapse_response(5, t(2), ResponseKind::Snl, 1), 0);
        assert_eq!(synapse_response(5, t(2), ResponseKind::Snl, 2), 5);
        assert_eq!(synapse_response(5, t(2), ResponseKind::Snl, 7), 5);
        assert_eq!(synapse_response(5, A, ResponseKind::Snl, 7), 0);
    }

    #[test]
    fn ramp_response() {
        let trace: Vec<u32> = (0..8).map(|k| synapse_response(3, t(2), ResponseKind::Rnl, k)).collect();
        assert_eq!(trace, vec![0, 0, 1, 2, 3, 3, 3, 3]);
    }

    #[test]
    fn segment_examples() {
        let g = GammaCycle::default();
        let snl = SegmentSpec::new(SegmentKind::Proximal, 2, ResponseKind::Snl, &g).with_threshold(14);
        assert_eq!(segment_fire_time(&[7, 7], &[A, A], &snl, &g).unwrap(), A);
        assert_eq!(segment_fire_time(&[7, 7], &[t(0), t(0)], &snl, &g).unwrap(), t(0));

        let rnl = SegmentSpec::new(SegmentKind::Proximal, 2, ResponseKind::Rnl, &g).with_threshold(5);
        // potentials 1, 2, 4, 6 over ticks 0..=3
        assert_eq!(segment_fire_time(&[3, 3], &[t(0), t(2)], &rnl, &g).unwrap(), t(3));

        assert!(segment_fire_time(&[3], &[t(0), t(2)], &rnl, &g).is_err());
        assert!(segment_fire_time(&[3, 3], &[t(0)], &rnl, &g).is_err());
    }

    #[test]
    fn default_threshold_is_half_capacity() {
        let g = GammaCycle::default();
        assert_eq!(default_threshold(2, &g), 7);
        assert_eq!(default_threshold(3, &g), 11);
        assert_eq!(default_threshold(432, &g), 1512);
    }

    #[test]
    fn dendrite_examples() {
        use SegmentKind::*;
        assert_eq!(
            dendrite_output(&[(Proximal, t(3))]),
            DendriteOutput { proximal: t(3), distal: A }
        );
        assert_eq!(
            dendrite_output(&[(Proximal, t(5)), (Distal, t(4)), (Proximal, t(2))]),
            DendriteOutput { proximal: t(2), distal: t(4) }
        );
        assert_eq!(dendrite_output(&[(Proximal, A), (Distal, A)]), DendriteOutput::SILENT);
    }

    #[test]
    fn neuron_examples() {
        let only_distal = [
            DendriteOutput { proximal: A, distal: t(0) },
            DendriteOutput { proximal: A, distal: t(1) },
        ];
        assert_eq!(neuron_fire_time(&only_distal, 1), A);

        let plain = [DendriteOutput { proximal: t(5), distal: A }];
        assert_eq!(neuron_fire_time(&plain, 1), t(5));

        let context = [
            DendriteOutput { proximal: t(5), distal: t(1) },
            DendriteOutput { proximal: A, distal: t(3) },
        ];
        assert_eq!(neuron_fire_time(&context, 1), t(3));
    }

    #[test]
    fn late_distal_context_does_not_count() {
        let d = [DendriteOutput { proximal: t(2), distal: t(3) }];
        assert_eq!(neuron_fire_time(&d, 1), t(2));
    }

    #[test]
    fn advance_saturates_at_zero() {
        let d = [DendriteOutput { proximal: t(1), distal: t(0) }; 4];
        assert_eq!(neuron_fire_time(&d, 2), t(0));
    }

    #[test]
    fn cv_unit() {
        assert_eq!(cv_unit_fire(false, t(2)), A);
        assert_eq!(cv_unit_fire(true, t(2)), t(2));
        assert_eq!(cv_unit_fire(true, A), A);
    }

    #[test]
    fn neuron_evaluate_routes_segments() {
        let g = GammaCycle::default();
        let prox = SegmentSpec::new(SegmentKind::Proximal, 2, ResponseKind::Snl, &g).with_threshold(7);
        let dist = SegmentSpec::new(SegmentKind::Distal, 1, ResponseKind::Snl, &g).with_threshold(7);
        let neuron = NeuronSpec::uniform(2, DendriteSpec::new(vec![prox, dist]));
        assert_eq!(neuron.input_width(), 3);
        assert_eq!(neuron.synapse_count(), 6);
        let weights = [7, 0, 7, 0, 0, 0];
        let trace = neuron.evaluate(&weights, &[t(4), t(0), t(1)], &g);
        assert_eq!(trace.segments, vec![t(4), t(1), A, A]);
        // proximal 4, one dendrite with distal context at 1 -> 3
        assert_eq!(trace.fire, t(3));
    }

    #[test]
    fn segment_validation() {
        let g = GammaCycle::default();
        let s = SegmentSpec::new(SegmentKind::Distal, 2, ResponseKind::Snl, &g);
        assert!(s.clone().validate(&g).is_ok());
        assert!(s.clone().with_threshold(0).validate(&g).is_err());
        assert!(s.clone().with_threshold(15).validate(&g).is_err());
        let mut empty = s;
        empty.synapses = 0;
        assert!(empty.validate(&g).is_err());
    }
}
