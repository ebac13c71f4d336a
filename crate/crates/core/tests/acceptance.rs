//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! run with `cargo test --test acceptance -- --nocapture` to see them.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use neutnn::data::{gaussian_bumps, load_mnist, BumpConfig, Dataset};
use neutnn::flow::{parse_config, run_flow_in};
use neutnn::hwgen::netlist::{emit_netlist_string, parse_netlist};
use neutnn::hwgen::ppa::{fit_ppa, FitMethod, Pdk, PpaTable};
use neutnn::learning::{accuracy, clustering_rand_index, train_dataset, StdpParams, TrainConfig, TrainOptions};
use neutnn::model_doc::ModelDocument;
use neutnn::network::{count_synapses, VoteRule};
use neutnn::neuron::{segment_fire_time, synapse_response, ResponseKind, SegmentKind, SegmentSpec};
use neutnn::placecell::{build_place_cells, default_suite, run_orientation_task, PlaceCellConfig};
use neutnn::presets;
use neutnn::pruning::{prune, prune_sweep, PruneConfig, PruneMode};
use neutnn::temporal::{encode_timeseries, GammaCycle, SpikeTime};
use neutnn::weights::WeightMatrix;

fn report(id: u32, name: &str, pass: bool, detail: String) -> bool {
    println!("[{}] criterion {id:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist")
}

fn synapse_accounting() -> bool {
    let start = Instant::now();
    let mnist = presets::mnist_reference().synapse_count();
    let cfg = PlaceCellConfig::default();
    let pc = build_place_cells(&cfg).unwrap();
    let counts = (cfg.first.synapse_count(), cfg.second.synapse_count(), pc.synapse_count());
    let secs = start.elapsed().as_secs_f64();
    let pass = mnist == 2_488_320 && counts == (454_400, 388_800, 1_232_000) && secs < 1.0;
    report(
        1,
        "synapse accounting",
        pass,
        format!("mnist {mnist}, place cells {}/{}/{} in {secs:.3}s", counts.0, counts.1, counts.2),
    )
}

fn ppa_fit() -> bool {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut ols_worst: f64 = 0.0;
    for pdk in Pdk::ALL {
        let table = PpaTable::reference(pdk);
        let fit = fit_ppa(&table, FitMethod::default()).unwrap();
        let ols = fit_ppa(&table, FitMethod::Ols).unwrap();
        for r in &table.rows {
            let rel = |p: f64, y: f64| (p - y).abs() / y.abs();
            worst = worst
                .max(rel(fit.leakage.predict(r.synapses as f64), r.leakage))
                .max(rel(fit.area.predict(r.synapses as f64), r.area));
            ols_worst = ols_worst
                .max(rel(ols.leakage.predict(r.synapses as f64), r.leakage))
                .max(rel(ols.area.predict(r.synapses as f64), r.area));
        }
    }
    let tnn7 = PpaTable::reference(Pdk::Tnn7);
    let spots = tnn7.lookup(130).map(|r| r.leakage) == Some(0.74) && tnn7.lookup(6750).map(|r| r.leakage) == Some(40.27);
    let secs = start.elapsed().as_secs_f64();
    report(
        2,
        "PPA fit fidelity",
        worst <= 0.15 && spots && secs < 1.0,
        format!(
            "minimax linear fit max relative error {:.1}% (plain OLS {:.1}%), TNN7 spot values {}",
            worst * 100.0,
            ols_worst * 100.0,
            if spots { "exact" } else { "wrong" }
        ),
    )
}

fn pdk_ordering() -> bool {
    let tnn7 = fit_ppa(&PpaTable::reference(Pdk::Tnn7), FitMethod::default()).unwrap();
    let asap7 = fit_ppa(&PpaTable::reference(Pdk::Asap7), FitMethod::default()).unwrap();
    let xs: Vec<u64> = PpaTable::reference(Pdk::Tnn7).rows.iter().map(|r| r.synapses).collect();
    let violations = xs
        .iter()
        .filter(|&&x| {
            let t = tnn7.forecast(x).leakage_mw();
            let a = asap7.forecast(x).leakage_mw();
            t >= a
        })
        .count();
    report(
        3,
        "PDK ordering",
        violations == 0,
        format!("TNN7 below ASAP7 leakage at {}/{} table sizes", xs.len() - violations, xs.len()),
    )
}

fn oracle_fire(weights: &[u8], inputs: &[SpikeTime], spec: &SegmentSpec, g: &GammaCycle) -> SpikeTime {
    for t in 0..g.t_max {
        let p: u32 = weights
            .iter()
            .zip(inputs)
            .map(|(&w, &ti)| synapse_response(w, ti, spec.response, t))
            .sum();
        if p >= spec.threshold {
            return SpikeTime::at(t);
        }
    }
    SpikeTime::ABSENT
}

fn oracle_equivalence() -> bool {
    let start = Instant::now();
    let g = GammaCycle::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let trials = 20_000;
    let mut mismatches = 0;
    for _ in 0..trials {
        let n = rng.gen_range(1..=8);
        let response = if rng.gen_bool(0.5) { ResponseKind::Rnl } else { ResponseKind::Snl };
        let max = SegmentSpec::new(SegmentKind::Proximal, n, response, &g).max_potential(&g) as u32;
        let spec = SegmentSpec::new(SegmentKind::Proximal, n, response, &g).with_threshold(rng.gen_range(1..=max));
        let weights: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=g.w_max())).collect();
        let inputs: Vec<SpikeTime> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.2) {
                    SpikeTime::ABSENT
                } else {
                    SpikeTime::at(rng.gen_range(0..g.t_max))
                }
            })
            .collect();
        if segment_fire_time(&weights, &inputs, &spec, &g).unwrap() != oracle_fire(&weights, &inputs, &spec, &g) {
            mismatches += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        4,
        "oracle equivalence",
        mismatches == 0 && secs < 30.0,
        format!("{mismatches} mismatches over {trials} random segments in {secs:.2}s"),
    )
}

fn bumps_dataset(g: &GammaCycle, seed: u64) -> Dataset {
    let (series, labels) = gaussian_bumps(&BumpConfig { seed, ..Default::default() }).unwrap();
    let inputs = series.iter().map(|s| encode_timeseries(s, g, true).unwrap()).collect();
    Dataset::new(inputs, labels).unwrap()
}

fn clustering() -> bool {
    let model = presets::clustering(32, 3, 0.15);
    let data = bumps_dataset(&model.gamma, 0);
    let cfg = TrainConfig {
        epochs: 20,
        seed: 1,
        options: TrainOptions::with_params(StdpParams::new(1, 1, 0)),
        final_metric_only: true,
        ..Default::default()
    };
    let trained = train_dataset(&model, &data, &cfg).unwrap();
    let ri = clustering_rand_index(&model, &trained.weights, &data).unwrap();
    report(
        5,
        "unsupervised clustering",
        ri >= 0.8,
        format!("rand index {ri:.3} after 20 epochs on 3 bump prototypes"),
    )
}

struct MnistRun {
    model: neutnn::network::ModelSpec,
    weights: WeightMatrix,
    test: Dataset,
    accuracy: f64,
}

fn train_mnist() -> MnistRun {
    let model = presets::mnist_desk();
    let copies = presets::MNIST_DESK_SEGMENTS;
    let train = load_mnist(data_dir(), "train", Some(5000))
        .unwrap()
        .encode(&model.gamma, 64, copies)
        .unwrap();
    let test = load_mnist(data_dir(), "t10k", Some(1000))
        .unwrap()
        .encode(&model.gamma, 64, copies)
        .unwrap();
    let cfg = TrainConfig {
        epochs: 2,
        seed: 0,
        final_metric_only: true,
        ..Default::default()
    };
    let trained = train_dataset(&model, &train, &cfg).unwrap();
    let acc = accuracy(&model, &trained.weights, &test, VoteRule::Latency).unwrap();
    MnistRun {
        model,
        weights: trained.weights,
        test,
        accuracy: acc,
    }
}

fn supervised(run: &MnistRun) -> bool {
    report(
        6,
        "supervised classification",
        run.accuracy >= 0.75,
        format!(
            "accuracy {:.3} on {} test digits after 2 epochs over 5000",
            run.accuracy,
            run.test.len()
        ),
    )
}

fn pruning(run: &MnistRun) -> bool {
    let taus: Vec<u16> = (0..=7).collect();
    let rows = prune_sweep(&run.model, &run.weights, &taus, &run.test, false, VoteRule::Latency).unwrap();
    let original = run.model.synapse_count();
    let best = rows
        .iter()
        .filter(|r| (r.surviving as f64) <= 0.7 * original as f64 && r.metric >= run.accuracy - 0.02)
        .min_by_key(|r| r.surviving);

    let cfg = PruneConfig::new(run.weights.w_max());
    let (once, rep) = prune(&run.model, &run.weights, &cfg).unwrap();
    let (twice, rep2) = prune(&run.model, &once, &cfg).unwrap();
    let idempotent = once == twice && rep2.surviving == rep.surviving;
    let arithmetic = rep.original == rep.pruned + rep.surviving
        && count_synapses(&run.model, Some(&once), PruneMode::RemoveZero) == rep.surviving
        && count_synapses(&run.model, Some(&once), PruneMode::KeepZero) == rep.original;

    let detail = match best {
        Some(r) => format!(
            "tau {} keeps {:.1}% of synapses at accuracy {:.3} (unpruned {:.3}); idempotent {idempotent}, counts {arithmetic}",
            r.threshold,
            100.0 * r.surviving as f64 / original as f64,
            r.metric,
            run.accuracy
        ),
        None => format!("no threshold reaches 70% surviving within 0.02 accuracy; idempotent {idempotent}, counts {arithmetic}"),
    };
    report(7, "pruning behaviour", best.is_some() && idempotent && arithmetic, detail)
}

fn run_full_flow(root: &Path) -> Vec<(String, Vec<u8>)> {
    let model_path = root.join("model.json");
    std::fs::write(&model_path, ModelDocument::new(presets::clustering(32, 3, 0.15)).to_text()).unwrap();
    let out = root.join("out");
    let cfg = parse_config(&format!(
        "flow=train,eval,prune,sweep,netlist,forecast,placecell\n\
         node=asap7_tnn7\nmodel={}\ndataset_kind=bumps\nepochs=3\nseed=7\nstdp=1,1,0\n\
         placecell_grid=4x4\nplacecell_alphabet=3\ntrials=50\n",
        model_path.display()
    ))
    .unwrap();
    let report = run_flow_in(&cfg, &out).unwrap();
    let mut files: Vec<(String, Vec<u8>)> = report
        .artifacts
        .iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(p).unwrap()))
        .collect();
    files.sort();
    files.dedup_by(|a, b| a.0 == b.0);
    files
}

fn determinism() -> bool {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let fa = run_full_flow(a.path());
    let fb = run_full_flow(b.path());
    // The resolved config embeds the model path, which differs per directory.
    let differing: Vec<&str> = fa
        .iter()
        .zip(&fb)
        .filter(|(x, y)| x.0 != "config.resolved" && x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    let same_set = fa.iter().map(|f| &f.0).eq(fb.iter().map(|f| &f.0));
    report(
        8,
        "determinism",
        same_set && differing.is_empty(),
        format!("{} artifacts compared, {} differ {differing:?}", fa.len(), differing.len()),
    )
}

fn netlist_integrity() -> bool {
    let model = presets::clustering(16, 4, 0.2);
    let w = WeightMatrix::random(model.synapse_count(), model.gamma.w_max(), 11);
    let (pruned, rep) = prune(&model, &w, &PruneConfig::new(w.w_max())).unwrap();
    let keep = parse_netlist(&emit_netlist_string(&model, Some(&pruned), PruneMode::KeepZero).unwrap()).unwrap();
    let remove = parse_netlist(&emit_netlist_string(&model, Some(&pruned), PruneMode::RemoveZero).unwrap()).unwrap();
    let plain = parse_netlist(&emit_netlist_string(&model, None, PruneMode::KeepZero).unwrap()).unwrap();
    let identity = keep.model == model && remove.model == model && plain.model == model;
    let delta = keep.stats.total_synapses - remove.stats.total_synapses;
    report(
        9,
        "netlist integrity",
        identity && delta == rep.pruned,
        format!("round trip identity {identity}; KeepZero - RemoveZero = {delta}, pruned = {}", rep.pruned),
    )
}

fn place_cells() -> bool {
    let envs = default_suite(5, 5, 4, 3).unwrap();
    let rows = run_orientation_task(&envs, 400, 3).unwrap();
    let context_helps = rows.iter().all(|r| r.recall >= r.recall_without_distal);
    let distinct = rows.iter().find(|r| r.environment == "distinct").unwrap();
    let summary: Vec<String> = rows
        .iter()
        .map(|r| format!("{} {:.2}/{:.2}", r.environment, r.recall, r.recall_without_distal))
        .collect();
    report(
        10,
        "place cells",
        context_helps && distinct.recall == 1.0,
        format!("recall with/without distal: {}", summary.join(", ")),
    )
}

#[test]
fn acceptance() {
    let mnist = train_mnist();
    let results = [
        synapse_accounting(),
        ppa_fit(),
        pdk_ordering(),
        oracle_equivalence(),
        clustering(),
        supervised(&mnist),
        pruning(&mnist),
        determinism(),
        netlist_integrity(),
        place_cells(),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("{passed}/{} criteria passed", results.len());
    assert_eq!(passed, results.len());
}
