//! Ready-made model configurations.

use crate::error::{Error, Result};
use crate::network::{CvGroupSpec, InputShape, Kernel, LayerKind, LayerSpec, MinicolumnSpec, ModelSpec};
use crate::neuron::{DendriteSpec, NeuronSpec, ResponseKind, SegmentKind, SegmentSpec};
use crate::placecell::{build_place_cells, PlaceCellConfig};
use crate::temporal::GammaCycle;

pub const NAMES: [&str; 5] = ["mnist-desk", "mnist-reference", "clustering", "place-cells", "place-cells-desk"];

/// Copies of the dual-rail pixel code fed to the desk MNIST model, one per
/// CV-unit segment.
pub const MNIST_DESK_SEGMENTS: usize = 4;

fn threshold_fraction(synapses: usize, fraction: f64, cycle: &GammaCycle) -> u32 {
    (fraction * (synapses as f64) * cycle.w_max() as f64).ceil() as u32
}

/// 5x5 kernel, stride 2, over 28x28 pixels; each of the 144 groups holds
/// ten CV units whose four segments each see a full dual-rail patch.
pub fn mnist_desk() -> ModelSpec {
    let g = GammaCycle::default();
    let field = 25 * 2;
    let seg = SegmentSpec::new(SegmentKind::Distal, field, ResponseKind::Snl, &g)
        .with_threshold(threshold_fraction(field, 0.3, &g));
    let unit = NeuronSpec::new(vec![DendriteSpec::new(vec![seg; MNIST_DESK_SEGMENTS])]);
    let mut m = ModelSpec::new(g);
    m.add_layer(LayerSpec::convolutional(
        LayerKind::CvGroup,
        InputShape::new(vec![28, 28], 2 * MNIST_DESK_SEGMENTS),
        Kernel::square(5, 2, 2),
        CvGroupSpec::new(10, unit).into_column().expect("ten units"),
    ))
    .expect("desk MNIST model is consistent");
    m
}

/// 576 CV groups of ten units, 432 synapses per unit. The input is the
/// concatenation of 576 pre-extracted receptive fields of 432 lines.
pub fn mnist_reference() -> ModelSpec {
    let g = GammaCycle::default();
    let seg = SegmentSpec::new(SegmentKind::Distal, 54, ResponseKind::Rnl, &g);
    let unit = NeuronSpec::new(vec![DendriteSpec::new(vec![seg; 8])]);
    let mut m = ModelSpec::new(g);
    m.add_layer(LayerSpec::convolutional(
        LayerKind::CvGroup,
        InputShape::flat(576 * 432),
        Kernel::new(vec![432], vec![432]),
        CvGroupSpec::new(10, unit).into_column().expect("ten units"),
    ))
    .expect("reference MNIST model is consistent");
    m
}

/// One minicolumn of `neurons` point neurons over a dual-rail series of
/// `length` samples.
pub fn clustering(length: usize, neurons: usize, threshold_frac: f64) -> ModelSpec {
    let g = GammaCycle::default();
    let width = 2 * length;
    let seg = SegmentSpec::new(SegmentKind::Proximal, width, ResponseKind::Rnl, &g)
        .with_threshold(threshold_fraction(width, threshold_frac, &g).max(1));
    let neuron = NeuronSpec::new(vec![DendriteSpec::new(vec![seg])]);
    let mut m = ModelSpec::new(g);
    m.add_layer(LayerSpec::minicolumns(vec![MinicolumnSpec::uniform(neurons, neuron, 1)]))
        .expect("clustering model is consistent");
    m
}

pub fn by_name(name: &str) -> Result<ModelSpec> {
    match name {
        "mnist-desk" => Ok(mnist_desk()),
        "mnist-reference" => Ok(mnist_reference()),
        "clustering" => Ok(clustering(32, 3, 0.15)),
        "place-cells" => build_place_cells(&PlaceCellConfig::default()),
        "place-cells-desk" => build_place_cells(&PlaceCellConfig::desk()),
        other => Err(Error::InvalidSpec(format!(
            "unknown preset {other:?}; choose one of {}",
            NAMES.join(", ")
        ))),
    }
}
