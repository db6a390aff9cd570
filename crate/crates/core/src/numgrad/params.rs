//! Named parameter collections with deterministic iteration order.

use crate::tensor::Tensor;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::NumgradError;

/// Map of parameter name -> tensor. BTreeMap keeps iteration lexicographic,
/// which fixes the order of gradient clipping and serialization.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    entries: BTreeMap<String, Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, t: Tensor) {
        self.entries.insert(name.into(), t);
    }

    pub fn get(&self, name: &str) -> Result<&Tensor, NumgradError> {
        self.entries
            .get(name)
            .ok_or_else(|| NumgradError::MissingParam(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.entries.get_mut(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.entries.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Tensor)> {
        self.entries.iter_mut()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn numel(&self) -> usize {
        self.entries.values().map(|t| t.numel()).sum()
    }

    /// Same names, all tensors zeroed.
    pub fn zeros_like(&self) -> ParamSet {
        ParamSet {
            entries: self
                .entries
                .iter()
                .map(|(k, v)| (k.clone(), Tensor::zeros(v.shape())))
                .collect(),
        }
    }

    /// Verifies `other` has identical names and shapes.
    pub fn check_aligned(&self, other: &ParamSet) -> Result<(), NumgradError> {
        if self.entries.len() != other.entries.len() {
            return Err(NumgradError::Shape(format!(
                "param sets differ in entry count: {} vs {}",
                self.entries.len(),
                other.entries.len()
            )));
        }
        for ((na, ta), (nb, tb)) in self.entries.iter().zip(other.entries.iter()) {
            if na != nb || ta.shape() != tb.shape() {
                return Err(NumgradError::Shape(format!(
                    "param mismatch: `{na}` {:?} vs `{nb}` {:?}",
                    ta.shape(),
                    tb.shape()
                )));
            }
        }
        Ok(())
    }

    /// Truncate every entry through f32, mirroring checkpoint storage precision.
    pub fn round_to_f32(&mut self) {
        for t in self.entries.values_mut() {
            for v in t.data_mut() {
                *v = *v as f32 as f64;
            }
        }
    }
}

/// Gaussian init scaled by 1/sqrt(fan_in) for a [out, in] weight matrix.
pub fn init_dense(rng: &mut impl Rng, out_dim: usize, in_dim: usize) -> Tensor {
    let std = 1.0 / (in_dim as f64).sqrt();
    let dist = Normal::new(0.0, std).unwrap();
    let data = (0..out_dim * in_dim).map(|_| dist.sample(rng)).collect();
    Tensor::new(vec![out_dim, in_dim], data).unwrap()
}
