//! Dataset loading (UCR text archives, IDX files) and synthetic generators.

use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::temporal::{encode_image_dual_rail, encode_timeseries, GammaCycle, SpikeVolley};

/// Encoded samples with ground-truth labels.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dataset {
    pub inputs: Vec<SpikeVolley>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn new(inputs: Vec<SpikeVolley>, labels: Vec<usize>) -> Result<Self> {
        if inputs.len() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: inputs.len(),
                actual: labels.len(),
                context: "dataset labels",
            });
        }
        Ok(Dataset { inputs, labels })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn width(&self) -> Option<usize> {
        self.inputs.first().map(SpikeVolley::width)
    }

    pub fn class_count(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn take(&self, n: usize) -> Dataset {
        Dataset {
            inputs: self.inputs.iter().take(n).cloned().collect(),
            labels: self.labels.iter().take(n).copied().collect(),
        }
    }
}

/// A UCR-archive split: one series per line, class label first.
#[derive(Debug, Clone, PartialEq)]
pub struct UcrSet {
    pub series: Vec<Vec<f64>>,
    /// Dense label indices into `classes`.
    pub labels: Vec<usize>,
    /// Raw class labels, sorted numerically.
    pub classes: Vec<String>,
}

impl UcrSet {
    pub fn encode(&self, cycle: &GammaCycle, dual_rail: bool) -> Result<Dataset> {
        let inputs = self
            .series
            .iter()
            .map(|s| encode_timeseries(s, cycle, dual_rail))
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(inputs, self.labels.clone())
    }
}

/// Parses comma-, tab- or space-separated UCR text. Trailing `NaN`
/// padding of variable-length series is dropped.
pub fn parse_ucr(text: &str) -> Result<UcrSet> {
    let mut raw = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty());
        let label = fields.next().unwrap();
        let label_value: f64 = label
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad class label {label:?}", n + 1)))?;
        let mut values = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {}: bad value {f:?}", n + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        while values.last().is_some_and(|v| v.is_nan()) {
            values.pop();
        }
        if values.is_empty() {
            return Err(Error::Parse(format!("line {}: series has no values", n + 1)));
        }
        raw.push((label_value, values));
    }
    if raw.is_empty() {
        return Err(Error::EmptyInput("UCR file"));
    }
    let mut classes: Vec<f64> = raw.iter().map(|(l, _)| *l).collect();
    classes.sort_by(f64::total_cmp);
    classes.dedup();
    let labels = raw
        .iter()
        .map(|(l, _)| classes.iter().position(|c| c == l).unwrap())
        .collect();
    Ok(UcrSet {
        series: raw.into_iter().map(|(_, v)| v).collect(),
        labels,
        classes: classes.iter().map(|c| format!("{c}")).collect(),
    })
}

pub fn load_ucr(path: impl AsRef<Path>) -> Result<UcrSet> {
    parse_ucr(&std::fs::read_to_string(path)?)
}

/// An IDX tensor of unsigned bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxArray {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

impl IdxArray {
    /// Item `i` along the first dimension.
    pub fn item(&self, i: usize) -> &[u8] {
        let stride: usize = self.dims[1..].iter().product();
        &self.data[i * stride..(i + 1) * stride]
    }

    pub fn len(&self) -> usize {
        self.dims.first().copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Parses an IDX byte stream, gunzipping it first when it is gzip data.
pub fn parse_idx(bytes: &[u8]) -> Result<IdxArray> {
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut raw = Vec::new();
        GzDecoder::new(bytes).read_to_end(&mut raw)?;
        return parse_idx(&raw);
    }
    if bytes.len() < 4 || bytes[0] != 0 || bytes[1] != 0 {
        return Err(Error::Parse("not an IDX file".into()));
    }
    if bytes[2] != 0x08 {
        return Err(Error::Parse(format!("unsupported IDX element type 0x{:02x}", bytes[2])));
    }
    let ndim = bytes[3] as usize;
    let header = 4 + 4 * ndim;
    if bytes.len() < header {
        return Err(Error::Parse("truncated IDX header".into()));
    }
    let dims: Vec<usize> = (0..ndim)
        .map(|d| u32::from_be_bytes(bytes[4 + 4 * d..8 + 4 * d].try_into().unwrap()) as usize)
        .collect();
    let n: usize = dims.iter().product();
    if bytes.len() - header != n {
        return Err(Error::Parse(format!(
            "IDX payload has {} bytes, header promises {n}",
            bytes.len() - header
        )));
    }
    Ok(IdxArray {
        dims,
        data: bytes[header..].to_vec(),
    })
}

pub fn load_idx(path: impl AsRef<Path>) -> Result<IdxArray> {
    parse_idx(&std::fs::read(path)?)
}

/// Raw MNIST-style images and labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageSet {
    pub rows: usize,
    pub cols: usize,
    pub images: Vec<Vec<u8>>,
    pub labels: Vec<usize>,
}

/// Loads `<prefix>-images-idx3-ubyte[.gz]` and `<prefix>-labels-idx1-ubyte[.gz]`
/// from `dir`, keeping at most `limit` samples.
pub fn load_mnist(dir: impl AsRef<Path>, prefix: &str, limit: Option<usize>) -> Result<ImageSet> {
    let dir = dir.as_ref();
    let find = |stem: String| -> Result<std::path::PathBuf> {
        for name in [format!("{stem}.gz"), stem.clone()] {
            let p = dir.join(&name);
            if p.exists() {
                return Ok(p);
            }
        }
        Err(Error::Io(format!("{} not found in {}", stem, dir.display())))
    };
    let images = load_idx(find(format!("{prefix}-images-idx3-ubyte"))?)?;
    let labels = load_idx(find(format!("{prefix}-labels-idx1-ubyte"))?)?;
    if images.dims.len() != 3 || labels.dims.len() != 1 || images.len() != labels.len() {
        return Err(Error::Shape(format!(
            "image dims {:?} do not match label dims {:?}",
            images.dims, labels.dims
        )));
    }
    let n = limit.map_or(images.len(), |l| l.min(images.len()));
    Ok(ImageSet {
        rows: images.dims[1],
        cols: images.dims[2],
        images: (0..n).map(|i| images.item(i).to_vec()).collect(),
        labels: labels.data[..n].iter().map(|&l| l as usize).collect(),
    })
}

/// Repeats each pixel's rail group `copies` times, so a pixel with rails
/// `[a, b]` becomes `[a, b, a, b, ...]`.
pub fn replicate_rails(volley: &SpikeVolley, rails: usize, copies: usize) -> SpikeVolley {
    let mut out = Vec::with_capacity(volley.width() * copies);
    for group in volley.0.chunks(rails) {
        for _ in 0..copies {
            out.extend_from_slice(group);
        }
    }
    SpikeVolley(out)
}

impl ImageSet {
    /// Dual-rail latency code, rail pair replicated `copies` times per pixel.
    pub fn encode(&self, cycle: &GammaCycle, absent_threshold: u8, copies: usize) -> Result<Dataset> {
        let inputs = self
            .images
            .iter()
            .map(|img| {
                let v = encode_image_dual_rail(img, self.rows, self.cols, cycle, absent_threshold)?;
                Ok(replicate_rails(&v, 2, copies))
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(inputs, self.labels.clone())
    }
}

/// Noisy Gaussian-bump prototypes, one class per center.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpConfig {
    pub length: usize,
    pub centers: Vec<f64>,
    pub sigma: f64,
    pub per_class: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Default for BumpConfig {
    fn default() -> Self {
        BumpConfig {
            length: 32,
            centers: vec![6.0, 16.0, 26.0],
            sigma: 3.0,
            per_class: 30,
            noise: 0.1,
            seed: 0,
        }
    }
}

/// Series in class-major order with their class labels.
pub fn gaussian_bumps(cfg: &BumpConfig) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let noise = Normal::new(0.0, cfg.noise).map_err(|e| Error::InvalidSpec(format!("noise: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut series = Vec::new();
    let mut labels = Vec::new();
    for (c, &center) in cfg.centers.iter().enumerate() {
        for _ in 0..cfg.per_class {
            series.push(
                (0..cfg.length)
                    .map(|x| {
                        let d = x as f64 - center;
                        (-d * d / (2.0 * cfg.sigma * cfg.sigma)).exp() + noise.sample(&mut rng)
                    })
                    .collect(),
            );
            labels.push(c);
        }
    }
    Ok((series, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::temporal::SpikeTime;

    #[test]
    fn ucr_parsing() {
        let text = "1,0.5,1.0,2.0\n-1,3.0,2.0,1.0,NaN\n1.0000000e+00 4 5 6\n";
        let set = parse_ucr(text).unwrap();
        assert_eq!(set.labels, vec![1, 0, 1]);
        assert_eq!(set.classes, vec!["-1", "1"]);
        assert_eq!(set.series[1], vec![3.0, 2.0, 1.0]);
        assert!(parse_ucr("").is_err());
        assert!(parse_ucr("a,1,2").is_err());
    }

    #[test]
    fn idx_roundtrip_plain_and_gz() {
        let mut bytes = vec![0, 0, 8, 2, 0, 0, 0, 2, 0, 0, 0, 3];
        bytes.extend([1, 2, 3, 4, 5, 6]);
        let a = parse_idx(&bytes).unwrap();
        assert_eq!(a.dims, vec![2, 3]);
        assert_eq!(a.item(1), &[4, 5, 6]);

        let mut gz = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
        std::io::Write::write_all(&mut gz, &bytes).unwrap();
        assert_eq!(parse_idx(&gz.finish().unwrap()).unwrap(), a);

        assert!(parse_idx(&bytes[..bytes.len() - 1]).is_err());
        assert!(parse_idx(&[0, 0, 9, 1]).is_err());
    }

    #[test]
    fn replicated_rails() {
        let v = SpikeVolley(vec![SpikeTime::at(1), SpikeTime::at(2), SpikeTime::at(3), SpikeTime::ABSENT]);
        let r = replicate_rails(&v, 2, 2);
        let t: Vec<_> = r.0.iter().map(|t| t.time()).collect();
        assert_eq!(
            t,
            vec![Some(1), Some(2), Some(1), Some(2), Some(3), None, Some(3), None]
        );
    }

    #[test]
    fn bumps_are_seeded() {
        let cfg = BumpConfig::default();
        let (a, la) = gaussian_bumps(&cfg).unwrap();
        let (b, _) = gaussian_bumps(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 90);
        assert_eq!(la[30], 1);
        // peak sits near the class center
        let peak = a[0]
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.total_cmp(y.1))
            .unwrap()
            .0;
        assert!((3..=9).contains(&peak));
    }
}
