//! Hierarchical structural netlist: emission and parsing.
//!
//! One record per line, in a fixed order:
//!
//! ```text
//! netlist neutnn-netlist/1
//! meta <key>=<value> ...
//! def <module> ports=<port>:<width>,...
//! inst <name> module=<module> parent=<name> <attr>=<value> ...
//! net <name> driver=<port>
//! stat <key> <value>
//! ```
//!
//! Instances are named `L<i>.P<pos>.N<n>.D<d>.S<s>.Y<syn>` and listed
//! depth-first. Synapse indices are kept when pruned synapses are dropped,
//! and every segment records its full synapse count, so the model can be
//! rebuilt from the netlist alone.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::network::{InputShape, Kernel, LayerKind, LayerSpec, LearningMode, MinicolumnSpec, ModelSpec};
use crate::neuron::{DendriteSpec, NeuronSpec, ResponseKind, SegmentKind, SegmentSpec};
use crate::pruning::PruneMode;
use crate::temporal::GammaCycle;
use crate::weights::WeightMatrix;

pub const FORMAT: &str = "neutnn-netlist/1";
pub const FLOORPLAN_DENSITY: &str = "0.60";
pub const CLOCK_KHZ: u32 = 100;

/// Instance counts per hierarchy level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NetlistStats {
    pub layers: usize,
    pub minicolumns: usize,
    pub neurons: usize,
    pub dendrites: usize,
    pub segments: usize,
    pub total_synapses: usize,
    pub nets: usize,
}

fn dims_text(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join("x")
}

fn kind_text(k: LayerKind) -> &'static str {
    match k {
        LayerKind::Minicolumn => "minicolumn",
        LayerKind::CvGroup => "cv_group",
    }
}

fn learning_text(l: LearningMode) -> &'static str {
    match l {
        LearningMode::Unsupervised => "unsupervised",
        LearningMode::Supervised => "supervised",
    }
}

/// Writes the netlist for `model`. Without weights every synapse starts at
/// zero and nothing is pruned.
pub fn emit_netlist<W: Write>(
    model: &ModelSpec,
    weights: Option<&WeightMatrix>,
    mode: PruneMode,
    out: &mut W,
) -> Result<NetlistStats> {
    model.validate()?;
    if let Some(w) = weights {
        if w.len() != model.synapse_count() {
            return Err(Error::LengthMismatch {
                expected: model.synapse_count(),
                actual: w.len(),
                context: "netlist weights",
            });
        }
    }
    let io = |e: io::Error| Error::Io(e.to_string());
    let plans = model.plan()?;
    let in_w = model.input_width();
    let out_w = model.output_width()?;

    writeln!(out, "netlist {FORMAT}").map_err(io)?;
    writeln!(
        out,
        "meta floorplan_density={FLOORPLAN_DENSITY} clock_khz={CLOCK_KHZ} t_max={} weight_bits={} prune_mode={}",
        model.gamma.t_max,
        model.gamma.weight_bits,
        mode.as_str()
    )
    .map_err(io)?;
    for def in [
        "def synapse ports=in:1,out:1",
        "def segment ports=in:N,out:1",
        "def dendrite ports=in:N,proximal:1,distal:1",
        "def neuron ports=in:N,out:1",
        "def minicolumn ports=in:N,out:M",
        "def layer ports=in:N,out:M",
        "def top ports=in:N,out:M",
    ] {
        writeln!(out, "{def}").map_err(io)?;
    }
    writeln!(out, "inst top module=top parent=- inputs={in_w} outputs={out_w}").map_err(io)?;

    let mut stats = NetlistStats::default();
    let mut line = String::with_capacity(128);
    let mut offset = 0usize;
    for (li, (layer, plan)) in model.layers.iter().zip(&plans).enumerate() {
        stats.layers += 1;
        let lname = format!("L{li}");
        let kernel = match &layer.kernel {
            Some(k) => format!("kernel={} stride={}", dims_text(&k.size), dims_text(&k.stride)),
            None => "kernel=none".into(),
        };
        writeln!(
            out,
            "inst {lname} module=layer parent=top id={} kind={} learning={} input={} rails={} {kernel}",
            layer.id,
            kind_text(layer.kind),
            learning_text(layer.learning),
            dims_text(&layer.input.dims),
            layer.input.rails
        )
        .map_err(io)?;
        for (p, lines) in plan.gather.iter().enumerate() {
            stats.minicolumns += 1;
            let column = layer.column_of(p);
            let pname = format!("{lname}.P{p}");
            writeln!(out, "inst {pname} module=minicolumn parent={lname} wta_k={}", column.wta_k).map_err(io)?;
            for (n, neuron) in column.neurons.iter().enumerate() {
                stats.neurons += 1;
                let nname = format!("{pname}.N{n}");
                writeln!(
                    out,
                    "inst {nname} module=neuron parent={pname} distal_advance={}",
                    neuron.distal_advance
                )
                .map_err(io)?;
                for (d, dendrite) in neuron.dendrites.iter().enumerate() {
                    stats.dendrites += 1;
                    let dname = format!("{nname}.D{d}");
                    writeln!(out, "inst {dname} module=dendrite parent={nname}").map_err(io)?;
                    let mut in_off = 0;
                    for (s, seg) in dendrite.segments.iter().enumerate() {
                        stats.segments += 1;
                        let sname = format!("{dname}.S{s}");
                        writeln!(
                            out,
                            "inst {sname} module=segment parent={dname} kind={} response={} threshold={} synapses={}",
                            match seg.kind {
                                SegmentKind::Proximal => "proximal",
                                SegmentKind::Distal => "distal",
                            },
                            match seg.response {
                                ResponseKind::Rnl => "rnl",
                                ResponseKind::Snl => "snl",
                            },
                            seg.threshold,
                            seg.synapses
                        )
                        .map_err(io)?;
                        for y in 0..seg.synapses {
                            let idx = offset + y;
                            let (w, pruned) = weights.map_or((0, false), |m| (m.get(idx), m.is_pruned(idx)));
                            if pruned && mode == PruneMode::RemoveZero {
                                continue;
                            }
                            stats.total_synapses += 1;
                            line.clear();
                            let attr = match mode {
                                PruneMode::KeepZero => "w0",
                                PruneMode::RemoveZero => "weight",
                            };
                            let _ = writeln!(
                                line,
                                "inst {sname}.Y{y} module=synapse parent={sname} in={lname}.in[{}] {attr}={w}",
                                lines[in_off + y]
                            );
                            out.write_all(line.as_bytes()).map_err(io)?;
                        }
                        in_off += seg.synapses;
                        offset += seg.synapses;
                    }
                }
            }
        }
    }

    // Nets: every layer input line and every model output, one driver each.
    let mut sources: Vec<String> = (0..in_w).map(|j| format!("top.in[{j}]")).collect();
    for (li, layer) in model.layers.iter().enumerate() {
        for (j, src) in sources.iter().enumerate() {
            writeln!(out, "net L{li}.in[{j}] driver={src}").map_err(io)?;
            stats.nets += 1;
        }
        sources.clear();
        for p in 0..layer.instance_count() {
            for n in 0..layer.column_of(p).neurons.len() {
                sources.push(format!("L{li}.P{p}.N{n}.out"));
            }
        }
    }
    for (j, src) in sources.iter().enumerate() {
        writeln!(out, "net top.out[{j}] driver={src}").map_err(io)?;
        stats.nets += 1;
    }

    for (k, v) in [
        ("layers", stats.layers),
        ("minicolumns", stats.minicolumns),
        ("neurons", stats.neurons),
        ("dendrites", stats.dendrites),
        ("segments", stats.segments),
        ("nets", stats.nets),
        ("total_synapses", stats.total_synapses),
    ] {
        writeln!(out, "stat {k} {v}").map_err(io)?;
    }
    Ok(stats)
}

pub fn emit_netlist_string(model: &ModelSpec, weights: Option<&WeightMatrix>, mode: PruneMode) -> Result<String> {
    let mut buf = Vec::new();
    emit_netlist(model, weights, mode, &mut buf)?;
    Ok(String::from_utf8(buf).expect("netlist is UTF-8"))
}

/// Everything recoverable from a netlist document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedNetlist {
    pub model: ModelSpec,
    pub mode: PruneMode,
    /// Synapse weights; synapses absent from the netlist are pruned zeros.
    pub weights: WeightMatrix,
    pub stats: NetlistStats,
}

fn attrs<'a>(fields: impl Iterator<Item = &'a str>, line: usize) -> Result<BTreeMap<&'a str, &'a str>> {
    fields
        .map(|f| {
            f.split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {line}: expected key=value, got {f:?}")))
        })
        .collect()
}

fn get<'a>(a: &BTreeMap<&str, &'a str>, key: &str, line: usize) -> Result<&'a str> {
    a.get(key)
        .copied()
        .ok_or_else(|| Error::Parse(format!("line {line}: missing attribute {key}")))
}

fn num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse(format!("line {line}: bad number {s:?}")))
}

fn dims(s: &str, line: usize) -> Result<Vec<usize>> {
    s.split('x').map(|d| num(d, line)).collect()
}

struct PendingLayer {
    spec: LayerSpec,
    instances: Vec<MinicolumnSpec>,
}

/// Rebuilds the model, weights and stats from netlist text.
pub fn parse_netlist(text: &str) -> Result<ParsedNetlist> {
    let mut gamma = None;
    let mut mode = None;
    let mut layers: Vec<PendingLayer> = Vec::new();
    let mut synapses: Vec<(u8, bool)> = Vec::new();
    let mut seg_start = 0usize;
    let mut seg_seen = 0usize;
    let mut stats = NetlistStats::default();
    let mut parents: [String; 5] = Default::default();
    let mut header = false;

    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let mut fields = raw.split(' ');
        let tag = fields.next().unwrap_or("");
        match tag {
            "netlist" => {
                if fields.next() != Some(FORMAT) {
                    return Err(Error::Parse(format!("line {ln}: expected {FORMAT}")));
                }
                header = true;
            }
            "meta" => {
                let a = attrs(fields, ln)?;
                gamma = Some(GammaCycle::new(num(get(&a, "t_max", ln)?, ln)?, num(get(&a, "weight_bits", ln)?, ln)?)?);
                mode = Some(match get(&a, "prune_mode", ln)? {
                    "remove_zero" => PruneMode::RemoveZero,
                    "keep_zero" => PruneMode::KeepZero,
                    other => return Err(Error::Parse(format!("line {ln}: unknown prune mode {other}"))),
                });
            }
            "def" | "net" => {}
            "stat" => {
                let key = fields.next().unwrap_or("");
                let v: usize = num(fields.next().unwrap_or(""), ln)?;
                match key {
                    "layers" => stats.layers = v,
                    "minicolumns" => stats.minicolumns = v,
                    "neurons" => stats.neurons = v,
                    "dendrites" => stats.dendrites = v,
                    "segments" => stats.segments = v,
                    "nets" => stats.nets = v,
                    "total_synapses" => stats.total_synapses = v,
                    _ => return Err(Error::Parse(format!("line {ln}: unknown stat {key}"))),
                }
            }
            "inst" => {
                let name = fields.next().unwrap_or("");
                let a = attrs(fields, ln)?;
                let module = get(&a, "module", ln)?;
                let parent = get(&a, "parent", ln)?;
                let level = match module {
                    "top" => continue,
                    "layer" => 0,
                    "minicolumn" => 1,
                    "neuron" => 2,
                    "dendrite" => 3,
                    "segment" => 4,
                    "synapse" => 5,
                    other => return Err(Error::Parse(format!("line {ln}: unknown module {other}"))),
                };
                let expected_parent = if level == 0 { "top" } else { parents[level - 1].as_str() };
                if parent != expected_parent {
                    return Err(Error::Parse(format!(
                        "line {ln}: {name} has parent {parent}, expected {expected_parent}"
                    )));
                }
                if level < 5 {
                    parents[level] = name.to_string();
                }
                let orphan = || Error::Parse(format!("line {ln}: {module} {name} outside its hierarchy"));
                match level {
                    0 => {
                        let kind = match get(&a, "kind", ln)? {
                            "minicolumn" => LayerKind::Minicolumn,
                            "cv_group" => LayerKind::CvGroup,
                            k => return Err(Error::Parse(format!("line {ln}: unknown layer kind {k}"))),
                        };
                        let learning = match get(&a, "learning", ln)? {
                            "unsupervised" => LearningMode::Unsupervised,
                            "supervised" => LearningMode::Supervised,
                            k => return Err(Error::Parse(format!("line {ln}: unknown learning mode {k}"))),
                        };
                        let kernel = match get(&a, "kernel", ln)? {
                            "none" => None,
                            k => Some(Kernel::new(dims(k, ln)?, dims(get(&a, "stride", ln)?, ln)?)),
                        };
                        layers.push(PendingLayer {
                            spec: LayerSpec {
                                id: get(&a, "id", ln)?.to_string(),
                                kind,
                                input: InputShape::new(dims(get(&a, "input", ln)?, ln)?, num(get(&a, "rails", ln)?, ln)?),
                                kernel,
                                columns: Vec::new(),
                                learning,
                            },
                            instances: Vec::new(),
                        });
                    }
                    1 => layers
                        .last_mut()
                        .ok_or_else(orphan)?
                        .instances
                        .push(MinicolumnSpec::new(Vec::new(), num(get(&a, "wta_k", ln)?, ln)?)),
                    2 => layers
                        .last_mut()
                        .and_then(|l| l.instances.last_mut())
                        .ok_or_else(orphan)?
                        .neurons
                        .push(NeuronSpec::new(Vec::new()).with_distal_advance(num(get(&a, "distal_advance", ln)?, ln)?)),
                    3 => layers
                        .last_mut()
                        .and_then(|l| l.instances.last_mut())
                        .and_then(|c| c.neurons.last_mut())
                        .ok_or_else(orphan)?
                        .dendrites
                        .push(DendriteSpec::new(Vec::new())),
                    4 => {
                        let kind = match get(&a, "kind", ln)? {
                            "proximal" => SegmentKind::Proximal,
                            "distal" => SegmentKind::Distal,
                            k => return Err(Error::Parse(format!("line {ln}: unknown segment kind {k}"))),
                        };
                        let response = match get(&a, "response", ln)? {
                            "rnl" => ResponseKind::Rnl,
                            "snl" => ResponseKind::Snl,
                            k => return Err(Error::Parse(format!("line {ln}: unknown response {k}"))),
                        };
                        let n: usize = num(get(&a, "synapses", ln)?, ln)?;
                        layers
                            .last_mut()
                            .and_then(|l| l.instances.last_mut())
                            .and_then(|c| c.neurons.last_mut())
                            .and_then(|nn| nn.dendrites.last_mut())
                            .ok_or_else(orphan)?
                            .segments
                            .push(SegmentSpec {
                                kind,
                                synapses: n,
                                threshold: num(get(&a, "threshold", ln)?, ln)?,
                                response,
                            });
                        seg_start = synapses.len();
                        seg_seen = 0;
                        // every site starts out pruned until its record appears
                        synapses.extend(std::iter::repeat_n((0, true), n));
                    }
                    _ => {
                        let y: usize = num(
                            name.rsplit_once(".Y")
                                .ok_or_else(|| Error::Parse(format!("line {ln}: bad synapse name {name}")))?
                                .1,
                            ln,
                        )?;
                        let w: u8 = num(a.get("w0").or(a.get("weight")).copied().unwrap_or(""), ln)?;
                        let n = synapses.len() - seg_start;
                        if y >= n || y < seg_seen {
                            return Err(Error::Parse(format!("line {ln}: synapse index {y} out of order")));
                        }
                        seg_seen = y + 1;
                        synapses[seg_start + y] = (w, false);
                    }
                }
            }
            "" if raw.is_empty() => {}
            other => return Err(Error::Parse(format!("line {ln}: unknown record {other:?}"))),
        }
    }
    if !header {
        return Err(Error::Parse("missing netlist header".into()));
    }
    let gamma = gamma.ok_or_else(|| Error::Parse("missing meta record".into()))?;
    let mode = mode.unwrap();

    let mut model = ModelSpec::new(gamma);
    for pending in layers {
        let mut spec = pending.spec;
        if spec.kernel.is_some() {
            let first = pending
                .instances
                .first()
                .cloned()
                .ok_or_else(|| Error::Parse(format!("layer {} has no positions", spec.id)))?;
            if pending.instances.iter().any(|c| *c != first) {
                return Err(Error::Parse(format!("layer {} positions differ in structure", spec.id)));
            }
            spec.columns = vec![first];
            let positions = spec.instance_count();
            if positions != pending.instances.len() {
                return Err(Error::Parse(format!(
                    "layer {} lists {} positions, its kernel gives {positions}",
                    spec.id,
                    pending.instances.len()
                )));
            }
        } else {
            spec.columns = pending.instances;
        }
        model.add_layer(spec)?;
    }
    let (values, pruned): (Vec<u8>, Vec<bool>) = synapses.into_iter().unzip();
    let weights = WeightMatrix::from_parts(values, pruned, gamma.w_max())?;
    Ok(ParsedNetlist {
        model,
        mode,
        weights,
        stats,
    })
}
