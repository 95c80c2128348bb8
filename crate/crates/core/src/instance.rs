//! Problem instances and the training sets drawn from the instance distribution.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{DacError, Result};

/// One target problem instance. `payload` is owned by the benchmark that validates it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance<P> {
    pub id: String,
    pub payload: P,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<f64>>,
}

impl<P> Instance<P> {
    pub fn new(id: impl Into<String>, payload: P, seed: u64) -> Self {
        Self {
            id: id.into(),
            payload,
            seed,
            features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Sampling {
    #[default]
    Uniform,
    RoundRobin,
    Weights {
        weights: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSet<P> {
    instances: Vec<Instance<P>>,
    #[serde(default)]
    sampling: Sampling,
}

impl<P> InstanceSet<P> {
    pub fn new(instances: Vec<Instance<P>>, sampling: Sampling) -> Result<Self> {
        if instances.is_empty() {
            return Err(DacError::Argument("instance set must not be empty".into()));
        }
        let mut ids = HashSet::new();
        for inst in &instances {
            if !ids.insert(inst.id.as_str()) {
                return Err(DacError::Argument(format!("duplicate instance id `{}`", inst.id)));
            }
        }
        if let Sampling::Weights { weights } = &sampling {
            if weights.len() != instances.len() {
                return Err(DacError::Argument(format!(
                    "{} weights for {} instances",
                    weights.len(),
                    instances.len()
                )));
            }
            if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(DacError::Argument("instance weights must be finite and non-negative".into()));
            }
            if weights.iter().sum::<f64>() <= 0.0 {
                return Err(DacError::Argument("instance weights must sum to a positive value".into()));
            }
        }
        Ok(Self { instances, sampling })
    }

    pub fn uniform(instances: Vec<Instance<P>>) -> Result<Self> {
        Self::new(instances, Sampling::Uniform)
    }

    pub fn instances(&self) -> &[Instance<P>] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&Instance<P>> {
        self.instances.get(index)
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.instances.iter().position(|i| i.id == id)
    }

    pub fn sampling(&self) -> &Sampling {
        &self.sampling
    }

    /// Picks the instance index for the `draw_index`-th sample. `random` is a
    /// uniformly distributed 64-bit word supplied by the caller's stream.
    pub fn sample_index(&self, draw_index: u64, random: u64) -> usize {
        let n = self.instances.len();
        match &self.sampling {
            Sampling::Uniform => (random % n as u64) as usize,
            Sampling::RoundRobin => (draw_index % n as u64) as usize,
            Sampling::Weights { weights } => {
                let total: f64 = weights.iter().sum();
                let u = (random >> 11) as f64 * (1.0 / (1u64 << 53) as f64) * total;
                let mut acc = 0.0;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        return i;
                    }
                }
                weights.iter().rposition(|w| *w > 0.0).unwrap_or(n - 1)
            }
        }
    }
}
