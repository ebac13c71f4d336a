use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Per-synapse weights and pruning flags in canonical
/// (layer, position, neuron, dendrite, segment, synapse) order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeightMatrix {
    w_max: u8,
    values: Vec<u8>,
    pruned: Vec<bool>,
}

impl WeightMatrix {
    pub fn zeros(len: usize, w_max: u8) -> Self {
        WeightMatrix {
            w_max,
            values: vec![0; len],
            pruned: vec![false; len],
        }
    }

    pub fn filled(len: usize, w_max: u8, value: u8) -> Self {
        assert!(value <= w_max);
        WeightMatrix {
            w_max,
            values: vec![value; len],
            pruned: vec![false; len],
        }
    }

    /// Uniform integers in `[0, w_max]` drawn from `seed`.
    pub fn random(len: usize, w_max: u8, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..len).map(|_| rng.gen_range(0..=w_max)).collect();
        WeightMatrix {
            w_max,
            values,
            pruned: vec![false; len],
        }
    }

    pub fn from_parts(values: Vec<u8>, pruned: Vec<bool>, w_max: u8) -> Result<Self> {
        if values.len() != pruned.len() {
            return Err(Error::LengthMismatch {
                expected: values.len(),
                actual: pruned.len(),
                context: "pruned flags",
            });
        }
        let m = WeightMatrix { w_max, values, pruned };
        m.validate()?;
        Ok(m)
    }

    pub fn from_values(values: Vec<u8>, w_max: u8) -> Result<Self> {
        let n = values.len();
        Self::from_parts(values, vec![false; n], w_max)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, (&w, &p)) in self.values.iter().zip(&self.pruned).enumerate() {
            if w > self.w_max {
                return Err(Error::InvalidSpec(format!(
                    "weight {w} at synapse {i} exceeds w_max {}",
                    self.w_max
                )));
            }
            if p && w != 0 {
                return Err(Error::InvalidSpec(format!("pruned synapse {i} has weight {w}")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn w_max(&self) -> u8 {
        self.w_max
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn pruned(&self) -> &[bool] {
        &self.pruned
    }

    pub fn get(&self, i: usize) -> u8 {
        self.values[i]
    }

    pub fn is_pruned(&self, i: usize) -> bool {
        self.pruned[i]
    }

    pub fn pruned_count(&self) -> usize {
        self.pruned.iter().filter(|&&p| p).count()
    }

    /// Sets a weight, clamped to `[0, w_max]`. Writing to a pruned synapse
    /// revives it when the new weight is non-zero.
    pub fn set(&mut self, i: usize, w: u8) {
        let w = w.min(self.w_max);
        self.values[i] = w;
        if w != 0 {
            self.pruned[i] = false;
        }
    }

    pub fn prune_at(&mut self, i: usize) {
        self.values[i] = 0;
        self.pruned[i] = true;
    }

    pub fn values_mut(&mut self) -> &mut [u8] {
        &mut self.values
    }

    /// Re-establishes the `pruned => 0` invariant after bulk edits through
    /// [`values_mut`](Self::values_mut).
    pub fn sync_pruned(&mut self) {
        for (w, p) in self.values.iter().zip(self.pruned.iter_mut()) {
            if *w != 0 {
                *p = false;
            }
        }
    }
}
