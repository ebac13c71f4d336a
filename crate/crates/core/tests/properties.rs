use proptest::prelude::*;

use neutnn::learning::{stdp_update, train_cycle, StdpParams, StepSizes, TrainOptions};
use neutnn::network::{
    count_synapses, cv_group_classify, k_wta, CvGroupSpec, InputShape, Kernel, LayerKind, LayerSpec, MinicolumnSpec,
    ModelSpec,
};
use neutnn::neuron::{
    dendrite_output, neuron_fire_time, segment_fire_time, synapse_response, DendriteOutput, DendriteSpec, NeuronSpec,
    ResponseKind, SegmentKind, SegmentSpec,
};
use neutnn::hwgen::netlist::{emit_netlist_string, parse_netlist};
use neutnn::hwgen::ppa::{reference_model, Pdk};
use neutnn::model_doc::ModelDocument;
use neutnn::pruning::{prune, PruneConfig, PruneMode};
use neutnn::temporal::{encode_timeseries, rand_index, GammaCycle, SpikeTime, SpikeVolley};
use neutnn::weights::WeightMatrix;

fn g() -> GammaCycle {
    GammaCycle::default()
}

fn spike() -> impl Strategy<Value = SpikeTime> {
    prop_oneof![1 => Just(SpikeTime::ABSENT), 4 => (0u32..8).prop_map(SpikeTime::at)]
}

fn response() -> impl Strategy<Value = ResponseKind> {
    prop_oneof![Just(ResponseKind::Rnl), Just(ResponseKind::Snl)]
}

/// Weights, inputs, response and threshold for one segment.
fn segment_case() -> impl Strategy<Value = (Vec<u8>, Vec<SpikeTime>, ResponseKind, u32)> {
    (1usize..=8).prop_flat_map(|n| {
        (
            prop::collection::vec(0u8..=7, n),
            prop::collection::vec(spike(), n),
            response(),
            1u32..=(n as u32 * 7),
        )
    })
}

fn seg(n: usize, r: ResponseKind, theta: u32) -> SegmentSpec {
    SegmentSpec::new(SegmentKind::Proximal, n, r, &g()).with_threshold(theta)
}

fn oracle(w: &[u8], x: &[SpikeTime], r: ResponseKind, theta: u32) -> SpikeTime {
    (0..8)
        .find(|&t| w.iter().zip(x).map(|(&w, &x)| synapse_response(w, x, r, t)).sum::<u32>() >= theta)
        .map_or(SpikeTime::ABSENT, SpikeTime::at)
}

fn dout() -> impl Strategy<Value = DendriteOutput> {
    (spike(), spike()).prop_map(|(proximal, distal)| DendriteOutput { proximal, distal })
}

fn clustering_model(n: usize, neurons: usize, k: usize) -> ModelSpec {
    let neuron = NeuronSpec::new(vec![DendriteSpec::new(vec![seg(n, ResponseKind::Rnl, 6)])]);
    let mut m = ModelSpec::new(g());
    m.add_layer(LayerSpec::minicolumns(vec![MinicolumnSpec::uniform(neurons, neuron, k)]))
        .unwrap();
    m
}

fn cv_model() -> ModelSpec {
    let unit = NeuronSpec::new(vec![DendriteSpec::new(vec![
        SegmentSpec::new(SegmentKind::Distal, 4, ResponseKind::Snl, &g()).with_threshold(10),
    ])]);
    let mut m = ModelSpec::new(g());
    m.add_layer(LayerSpec::convolutional(
        LayerKind::CvGroup,
        InputShape::flat(8),
        Kernel::new(vec![4], vec![4]),
        CvGroupSpec::new(3, unit).into_column().unwrap(),
    ))
    .unwrap();
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn encoding_is_monotone_and_in_range(samples in prop::collection::vec(-50.0f64..50.0, 2..24)) {
        let single = encode_timeseries(&samples, &g(), false).unwrap();
        for i in 0..samples.len() {
            for j in 0..samples.len() {
                if samples[i] >= samples[j] {
                    prop_assert!(single.times()[i] <= single.times()[j]);
                }
            }
        }
        let dual = encode_timeseries(&samples, &g(), true).unwrap();
        for pair in dual.times().chunks(2) {
            let s = pair[0].time().unwrap() + pair[1].time().unwrap();
            prop_assert!((6..=8).contains(&s));
            prop_assert!(pair[0].time().unwrap() < 8);
        }
    }

    #[test]
    fn rand_index_symmetry_and_relabeling(
        a in prop::collection::vec(0usize..4, 2..30),
        perm in Just([2usize, 0, 3, 1]),
        seed in 0u64..1000,
    ) {
        let b: Vec<usize> = a.iter().enumerate().map(|(i, &x)| (x + i * seed as usize) % 3).collect();
        prop_assert_eq!(rand_index(&a, &b).unwrap(), rand_index(&b, &a).unwrap());
        let relabeled: Vec<usize> = a.iter().map(|&x| perm[x]).collect();
        prop_assert_eq!(rand_index(&a, &b).unwrap(), rand_index(&relabeled, &b).unwrap());
    }

    #[test]
    fn event_driven_matches_oracle((w, x, r, theta) in segment_case()) {
        let got = segment_fire_time(&w, &x, &seg(w.len(), r, theta), &g()).unwrap();
        prop_assert_eq!(got, oracle(&w, &x, r, theta));
    }

    #[test]
    fn heavier_weight_never_delays((w, x, r, theta) in segment_case(), idx in any::<prop::sample::Index>()) {
        let s = seg(w.len(), r, theta);
        let before = segment_fire_time(&w, &x, &s, &g()).unwrap();
        let mut heavier = w.clone();
        let i = idx.index(w.len());
        heavier[i] = (heavier[i] + 1).min(7);
        prop_assert!(segment_fire_time(&heavier, &x, &s, &g()).unwrap() <= before);
    }

    #[test]
    fn earlier_input_never_delays((w, x, r, theta) in segment_case(), idx in any::<prop::sample::Index>()) {
        let s = seg(w.len(), r, theta);
        let before = segment_fire_time(&w, &x, &s, &g()).unwrap();
        let mut earlier = x.clone();
        let i = idx.index(x.len());
        earlier[i] = match earlier[i].time() {
            Some(t) => SpikeTime::at(t.saturating_sub(1)),
            None => SpikeTime::at(7),
        };
        prop_assert!(segment_fire_time(&w, &earlier, &s, &g()).unwrap() <= before);
    }

    #[test]
    fn distal_advance_is_bounded(d in prop::collection::vec(dout(), 1..6), alpha in 0u32..3) {
        let fire = neuron_fire_time(&d, alpha);
        let p = d.iter().map(|x| x.proximal).min().unwrap();
        match p.time() {
            None => prop_assert!(fire.is_absent()),
            Some(pt) => {
                let floor = pt.saturating_sub(alpha * d.len() as u32);
                prop_assert!(fire.time().unwrap() >= floor && fire <= p);
                let no_distal: Vec<DendriteOutput> =
                    d.iter().map(|x| DendriteOutput { distal: SpikeTime::ABSENT, ..*x }).collect();
                prop_assert_eq!(neuron_fire_time(&no_distal, alpha), p);
            }
        }
    }

    #[test]
    fn selection_is_permutation_invariant(
        d in prop::collection::vec(dout(), 1..6),
        segs in prop::collection::vec((any::<bool>(), spike()), 1..6),
        rot in 0usize..6,
    ) {
        let mut rd = d.clone();
        rd.rotate_left(rot % d.len());
        prop_assert_eq!(neuron_fire_time(&d, 1), neuron_fire_time(&rd, 1));
        let kinds: Vec<(SegmentKind, SpikeTime)> = segs
            .iter()
            .map(|&(p, t)| (if p { SegmentKind::Proximal } else { SegmentKind::Distal }, t))
            .collect();
        let mut rk = kinds.clone();
        rk.rotate_left(rot % kinds.len());
        prop_assert_eq!(dendrite_output(&kinds), dendrite_output(&rk));
    }

    #[test]
    fn wta_keeps_at_most_k(times in prop::collection::vec(spike(), 1..12), k in 0usize..5) {
        let out = k_wta(&times, k);
        prop_assert!(out.iter().filter(|t| t.is_finite()).count() <= k);
        for (o, t) in out.iter().zip(&times) {
            prop_assert!(o.is_absent() || o == t);
        }
    }

    #[test]
    fn forward_is_deterministic(seed in 0u64..500, input in prop::collection::vec(spike(), 6)) {
        let m = clustering_model(6, 4, 2);
        let w = WeightMatrix::random(m.synapse_count(), 7, seed);
        let x = SpikeVolley(input);
        let a = m.forward(&w, &x).unwrap();
        prop_assert_eq!(&a, &m.forward(&w, &x).unwrap());
        prop_assert!(a[0].finite_count() <= 2);
    }

    #[test]
    fn weights_stay_in_range(
        w in 0u8..=7, t_in in spike(), t_out in spike(),
        c in 0u8..=7, b in 0u8..=7, s in 0u8..=7,
    ) {
        prop_assert!(stdp_update(w, t_in, t_out, StepSizes::new(c, b, s), 7) <= 7);
    }

    #[test]
    fn updates_are_local(
        seed in 0u64..500,
        input in prop::collection::vec(spike(), 6),
        other in 0u8..=7,
    ) {
        // Perturbing a neuron that stays silent leaves every other update unchanged.
        let m = clustering_model(6, 2, 2);
        let plans = m.plan().unwrap();
        let mut w = WeightMatrix::random(12, 7, seed);
        for i in 6..12 { w.set(i, 0); }
        let mut perturbed = w.clone();
        perturbed.set(6, other.min(5));
        let x = SpikeVolley(input);
        let opts = TrainOptions::default();
        train_cycle(&m, &plans, &mut w, &x, None, &opts).unwrap();
        train_cycle(&m, &plans, &mut perturbed, &x, None, &opts).unwrap();
        prop_assert_eq!(&w.values()[..6], &perturbed.values()[..6]);
    }

    #[test]
    fn supervised_gating(seed in 0u64..500, input in prop::collection::vec(spike(), 8), label in 0usize..3) {
        let m = cv_model();
        let plans = m.plan().unwrap();
        let mut w = WeightMatrix::random(m.synapse_count(), 7, seed);
        let before = w.clone();
        train_cycle(&m, &plans, &mut w, &SpikeVolley(input), Some(label), &TrainOptions::default()).unwrap();
        for pos in 0..2 {
            for unit in 0..3 {
                if unit == label { continue; }
                let r = (pos * 3 + unit) * 4..(pos * 3 + unit + 1) * 4;
                prop_assert_eq!(&w.values()[r.clone()], &before.values()[r]);
            }
        }
    }

    #[test]
    fn prune_properties(seed in 0u64..1000, tau in 0u16..=8, binarize in any::<bool>()) {
        let m = clustering_model(6, 3, 1);
        let w = WeightMatrix::random(m.synapse_count(), 7, seed);
        let cfg = PruneConfig::new(7).with_threshold(tau).with_binarize(binarize);
        let (once, rep) = prune(&m, &w, &cfg).unwrap();
        let (twice, _) = prune(&m, &once, &cfg).unwrap();
        prop_assert_eq!(&once, &twice);
        if binarize {
            prop_assert!(once.values().iter().all(|&v| v == 0 || v == 7));
        }
        let keep = count_synapses(&m, Some(&once), PruneMode::KeepZero);
        prop_assert_eq!(keep, m.synapse_count());
        prop_assert_eq!(count_synapses(&m, Some(&once), PruneMode::RemoveZero), keep - rep.pruned);

        let k = parse_netlist(&emit_netlist_string(&m, Some(&once), PruneMode::KeepZero).unwrap()).unwrap();
        let r = parse_netlist(&emit_netlist_string(&m, Some(&once), PruneMode::RemoveZero).unwrap()).unwrap();
        prop_assert_eq!(&k.model, &m);
        prop_assert_eq!(r.stats.total_synapses + rep.pruned, k.stats.total_synapses);
        prop_assert_eq!(k.weights.values(), once.values());
        prop_assert_eq!(&r.weights, &once);
    }

    #[test]
    fn order_preserving_binarization_keeps_class(seed in 0u64..1000, input in prop::collection::vec(spike(), 8)) {
        let m = cv_model();
        let w = WeightMatrix::random(m.synapse_count(), 7, seed);
        let (b, _) = prune(&m, &w, &PruneConfig::new(7).with_binarize(true)).unwrap();
        let x = SpikeVolley(input);
        let before = m.forward(&w, &x).unwrap().pop().unwrap();
        let after = m.forward(&b, &x).unwrap().pop().unwrap();
        for (g0, g1) in before.times().chunks(3).zip(after.times().chunks(3)) {
            // pairwise order, with silence as its own latest value
            let order = |v: &[SpikeTime]| {
                let mut rel = Vec::new();
                for i in 0..v.len() {
                    rel.push(v[i].is_finite());
                    for j in 0..v.len() {
                        rel.push(v[i] < v[j]);
                    }
                }
                rel
            };
            if order(g0) == order(g1) {
                prop_assert_eq!(cv_group_classify(g0), cv_group_classify(g1));
            }
        }
    }

    #[test]
    fn forecast_is_linear(s in 1u64..100_000) {
        for pdk in Pdk::ALL {
            let m = reference_model(pdk);
            let f = |n: u64| m.forecast(n);
            let (a, b, c) = (f(s), f(2 * s), f(3 * s));
            if a.warnings.iter().all(|w| !w.contains("clamped")) {
                prop_assert!(((b.leakage - a.leakage) - (c.leakage - b.leakage)).abs() < 1e-9 * c.leakage.max(1.0));
                prop_assert!(((b.area - a.area) - (c.area - b.area)).abs() < 1e-9 * c.area.max(1.0));
            }
        }
    }

    #[test]
    fn model_document_round_trips(seed in 0u64..1000, tau in 0u16..5) {
        let m = cv_model();
        let w = WeightMatrix::random(m.synapse_count(), 7, seed);
        let (p, _) = prune(&m, &w, &PruneConfig::new(7).with_threshold(tau)).unwrap();
        let mut doc = ModelDocument::new(m).with_weights(p);
        doc.prune_mode = Some(PruneMode::RemoveZero);
        let text = doc.to_text();
        let back = ModelDocument::parse(&text).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(back.to_text(), text);
    }
}

#[test]
fn silent_neuron_without_proximal_never_fires() {
    let d = [DendriteOutput { proximal: SpikeTime::ABSENT, distal: SpikeTime::at(0) }; 4];
    for alpha in 0..4 {
        assert!(neuron_fire_time(&d, alpha).is_absent());
    }
}

#[test]
fn zero_steps_leave_weights_alone() {
    let m = clustering_model(6, 3, 1);
    let plans = m.plan().unwrap();
    let mut w = WeightMatrix::random(18, 7, 9);
    let before = w.clone();
    let opts = TrainOptions::with_params(StdpParams::new(0, 0, 0));
    let x = SpikeVolley((0..6).map(SpikeTime::at).collect());
    train_cycle(&m, &plans, &mut w, &x, None, &opts).unwrap();
    assert_eq!(w, before);
}
