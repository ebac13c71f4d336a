//! Spike-time arithmetic, gamma-cycle configuration, input encoders and
//! clustering metrics.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Temporal and weight resolution of one computational wave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GammaCycle {
    pub t_max: u32,
    pub weight_bits: u32,
}

impl Default for GammaCycle {
    fn default() -> Self {
        GammaCycle {
            t_max: 8,
            weight_bits: 3,
        }
    }
}

impl GammaCycle {
    pub fn new(t_max: u32, weight_bits: u32) -> Result<Self> {
        let cycle = GammaCycle { t_max, weight_bits };
        cycle.validate()?;
        Ok(cycle)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_max < 2 {
            return Err(Error::InvalidGamma(format!("t_max must be >= 2, got {}", self.t_max)));
        }
        if self.t_max >= SpikeTime::ABSENT.0 as u32 {
            return Err(Error::InvalidGamma(format!("t_max {} is too large", self.t_max)));
        }
        if !(1..=8).contains(&self.weight_bits) {
            return Err(Error::InvalidGamma(format!(
                "weight_bits must be in 1..=8, got {}",
                self.weight_bits
            )));
        }
        Ok(())
    }

    /// Largest representable weight, `2^weight_bits - 1`.
    pub fn w_max(&self) -> u8 {
        ((1u32 << self.weight_bits) - 1) as u8
    }

    /// Last tick of the cycle.
    pub fn last_tick(&self) -> u32 {
        self.t_max - 1
    }
}

/// Spike latency within a gamma cycle. `ABSENT` orders after every finite time.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpikeTime(u16);

impl SpikeTime {
    pub const ABSENT: SpikeTime = SpikeTime(u16::MAX);

    pub fn at(t: u32) -> SpikeTime {
        assert!(t < u16::MAX as u32, "spike time {t} out of range");
        SpikeTime(t as u16)
    }

    pub fn is_absent(self) -> bool {
        self == Self::ABSENT
    }

    pub fn is_finite(self) -> bool {
        !self.is_absent()
    }

    pub fn time(self) -> Option<u32> {
        if self.is_absent() {
            None
        } else {
            Some(self.0 as u32)
        }
    }

    /// Finite time, or `absent_as` when the spike is missing.
    pub fn time_or(self, absent_as: u32) -> u32 {
        self.time().unwrap_or(absent_as)
    }
}

impl From<Option<u32>> for SpikeTime {
    fn from(t: Option<u32>) -> Self {
        t.map_or(SpikeTime::ABSENT, SpikeTime::at)
    }
}

impl fmt::Debug for SpikeTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for SpikeTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.time() {
            Some(t) => write!(f, "{t}"),
            None => f.write_str("-"),
        }
    }
}

/// One spike time per input line.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SpikeVolley(pub Vec<SpikeTime>);

impl SpikeVolley {
    pub fn silent(width: usize) -> Self {
        SpikeVolley(vec![SpikeTime::ABSENT; width])
    }

    pub fn from_times(times: &[Option<u32>]) -> Self {
        SpikeVolley(times.iter().map(|&t| SpikeTime::from(t)).collect())
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }

    pub fn times(&self) -> &[SpikeTime] {
        &self.0
    }

    pub fn finite_count(&self) -> usize {
        self.0.iter().filter(|t| t.is_finite()).count()
    }

    /// Checks every finite entry lies inside the cycle.
    pub fn check_range(&self, cycle: &GammaCycle) -> Result<()> {
        for (i, t) in self.0.iter().enumerate() {
            if let Some(v) = t.time() {
                if v >= cycle.t_max {
                    return Err(Error::Shape(format!(
                        "spike at line {i} has time {v} >= t_max {}",
                        cycle.t_max
                    )));
                }
            }
        }
        Ok(())
    }
}

impl std::ops::Index<usize> for SpikeVolley {
    type Output = SpikeTime;
    fn index(&self, i: usize) -> &SpikeTime {
        &self.0[i]
    }
}

/// Round-half-up of a non-negative real.
pub fn round_half_up(x: f64) -> u32 {
    (x + 0.5).floor().max(0.0) as u32
}

/// Round-half-up of `num / den` in exact integer arithmetic.
pub fn div_round_half_up(num: u64, den: u64) -> u64 {
    (2 * num + den) / (2 * den)
}

/// Latency-encodes a real sequence after per-sequence min-max normalization.
///
/// Larger values spike earlier on the positive rail. With `dual_rail`, a
/// complementary rail follows each positive rail, so sample `i` occupies
/// lines `2i` and `2i + 1`.
pub fn encode_timeseries(samples: &[f64], cycle: &GammaCycle, dual_rail: bool) -> Result<SpikeVolley> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("time series"));
    }
    if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let last = cycle.last_tick() as f64;

    let mut times = Vec::with_capacity(samples.len() * if dual_rail { 2 } else { 1 });
    for &s in samples {
        if span <= 0.0 {
            // Degenerate normalization: every rail fires immediately.
            times.push(SpikeTime::at(0));
            if dual_rail {
                times.push(SpikeTime::at(0));
            }
            continue;
        }
        let v = (s - lo) / span;
        times.push(SpikeTime::at(round_half_up((1.0 - v) * last)));
        if dual_rail {
            times.push(SpikeTime::at(round_half_up(v * last)));
        }
    }
    Ok(SpikeVolley(times))
}

fn check_grid(pixels: &[u8], rows: usize, cols: usize) -> Result<()> {
    if rows * cols != pixels.len() {
        return Err(Error::Shape(format!(
            "image of {} bytes is not {rows}x{cols}",
            pixels.len()
        )));
    }
    Ok(())
}

fn pixel_on_time(p: u8, cycle: &GammaCycle) -> SpikeTime {
    let last = cycle.last_tick() as u64;
    SpikeTime::at(div_round_half_up((255 - p as u64) * last, 255) as u32)
}

fn pixel_off_time(p: u8, cycle: &GammaCycle) -> SpikeTime {
    let last = cycle.last_tick() as u64;
    SpikeTime::at(div_round_half_up(p as u64 * last, 255) as u32)
}

/// Latency-encodes a row-major byte grid. Pixels below `absent_threshold`
/// stay silent; brighter pixels spike earlier.
pub fn encode_image(
    pixels: &[u8],
    rows: usize,
    cols: usize,
    cycle: &GammaCycle,
    absent_threshold: u8,
) -> Result<SpikeVolley> {
    check_grid(pixels, rows, cols)?;
    Ok(SpikeVolley(
        pixels
            .iter()
            .map(|&p| {
                if p < absent_threshold {
                    SpikeTime::ABSENT
                } else {
                    pixel_on_time(p, cycle)
                }
            })
            .collect(),
    ))
}

/// Two rails per pixel: the `encode_image` rail followed by an "off" rail
/// that spikes early for dark pixels, `round(p/255 * (t_max - 1))`.
pub fn encode_image_dual_rail(
    pixels: &[u8],
    rows: usize,
    cols: usize,
    cycle: &GammaCycle,
    absent_threshold: u8,
) -> Result<SpikeVolley> {
    check_grid(pixels, rows, cols)?;
    let mut times = Vec::with_capacity(pixels.len() * 2);
    for &p in pixels {
        times.push(if p < absent_threshold {
            SpikeTime::ABSENT
        } else {
            pixel_on_time(p, cycle)
        });
        times.push(pixel_off_time(p, cycle));
    }
    Ok(SpikeVolley(times))
}

fn pairs(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Fraction of unordered element pairs on which two partitions agree
/// (both together or both apart).
pub fn rand_index<A, B>(labels_a: &[A], labels_b: &[B]) -> Result<f64>
where
    A: Eq + Hash + Clone,
    B: Eq + Hash + Clone,
{
    if labels_a.len() != labels_b.len() {
        return Err(Error::LengthMismatch {
            expected: labels_a.len(),
            actual: labels_b.len(),
            context: "rand_index partitions",
        });
    }
    let n = labels_a.len();
    if n < 2 {
        return Err(Error::EmptyInput("rand_index needs at least two elements"));
    }
    let mut joint: HashMap<(A, B), u64> = HashMap::new();
    let mut rows: HashMap<A, u64> = HashMap::new();
    let mut cols: HashMap<B, u64> = HashMap::new();
    for (a, b) in labels_a.iter().zip(labels_b) {
        *joint.entry((a.clone(), b.clone())).or_default() += 1;
        *rows.entry(a.clone()).or_default() += 1;
        *cols.entry(b.clone()).or_default() += 1;
    }
    let together_both: u64 = joint.values().map(|&c| pairs(c)).sum();
    let together_a: u64 = rows.values().map(|&c| pairs(c)).sum();
    let together_b: u64 = cols.values().map(|&c| pairs(c)).sum();
    let total = pairs(n as u64);
    let agree = total + 2 * together_both - together_a - together_b;
    Ok(agree as f64 / total as f64)
}
