//! Browser bindings: synapse response curves, PPA forecasts and a pruning
//! sweep on a small clustering model. Every entry point returns JSON.

use neutnn::data::{gaussian_bumps, BumpConfig, Dataset};
use neutnn::hwgen::ppa::compare_pdks;
use neutnn::learning::{clustering_rand_index, train_dataset, StdpParams, TrainConfig, TrainOptions};
use neutnn::neuron::{synapse_response, ResponseKind};
use neutnn::presets;
use neutnn::pruning::{prune, PruneConfig};
use neutnn::temporal::{encode_timeseries, GammaCycle, SpikeTime};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Body potential contributed by one synapse over a gamma cycle, for both
/// response functions.
#[wasm_bindgen]
pub fn response_curves(weight: u8, t_in: u32, t_max: u32) -> Result<String, JsValue> {
    let g = GammaCycle::new(t_max, 3).map_err(js_err)?;
    let w = weight.min(g.w_max());
    let t_in = SpikeTime::at(t_in.min(g.last_tick()));
    let curve = |kind| (0..=g.last_tick()).map(|t| synapse_response(w, t_in, kind, t)).collect::<Vec<_>>();
    Ok(json!({
        "t": (0..=g.last_tick()).collect::<Vec<_>>(),
        "rnl": curve(ResponseKind::Rnl),
        "snl": curve(ResponseKind::Snl),
    })
    .to_string())
}

/// Leakage and area of a design with `synapses` synapses on every node,
/// cheapest first.
#[wasm_bindgen]
pub fn ppa_forecasts(synapses: f64) -> String {
    let rows: Vec<_> = compare_pdks(synapses.max(0.0) as u64)
        .into_iter()
        .map(|f| {
            json!({
                "node": f.pdk.node(),
                "leakage_mw": f.leakage_mw(),
                "area_mm2": f.area_mm2(),
                "warnings": f.warnings,
            })
        })
        .collect();
    serde_json::Value::Array(rows).to_string()
}

fn bumps(seed: u64, g: &GammaCycle) -> Result<Dataset, JsValue> {
    let (series, labels) = gaussian_bumps(&BumpConfig { seed, ..Default::default() }).map_err(js_err)?;
    let inputs = series
        .iter()
        .map(|s| encode_timeseries(s, g, true))
        .collect::<Result<Vec<_>, _>>()
        .map_err(js_err)?;
    Dataset::new(inputs, labels).map_err(js_err)
}

/// Trains the clustering preset on synthetic bumps, then prunes it at each
/// threshold from 0 to `max_threshold` and reports the surviving synapses
/// and rand index.
#[wasm_bindgen]
pub fn pruning_sweep(max_threshold: u16, epochs: usize, seed: u64) -> Result<String, JsValue> {
    let model = presets::clustering(32, 3, 0.15);
    let data = bumps(seed, &model.gamma)?;
    let cfg = TrainConfig {
        epochs: epochs.clamp(1, 50),
        seed,
        options: TrainOptions::with_params(StdpParams::new(1, 1, 0)),
        final_metric_only: true,
        ..Default::default()
    };
    let trained = train_dataset(&model, &data, &cfg).map_err(js_err)?;
    let mut rows = Vec::new();
    for tau in 0..=max_threshold.min(model.gamma.w_max() as u16 + 1) {
        let pc = PruneConfig::new(model.gamma.w_max()).with_threshold(tau);
        let (w, report) = prune(&model, &trained.weights, &pc).map_err(js_err)?;
        let ri = clustering_rand_index(&model, &w, &data).map_err(js_err)?;
        rows.push(json!({ "threshold": tau, "surviving": report.surviving, "original": report.original, "rand_index": ri }));
    }
    Ok(serde_json::Value::Array(rows).to_string())
}
