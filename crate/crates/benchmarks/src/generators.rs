//! Seeded instance generators and the JSON instance-file format.
//!
//! Every generator draws from a ChaCha8 stream keyed by its seed; instance
//! seeds are `derive_seed(seed, [k])`, so a file is a reproducible artifact.

use std::fs;
use std::path::Path;

use dac_core::{derive_seed, DacError, Instance, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::cma::{CmaFunction, CmaInstance};
use crate::leading_ones::LeadingOnesInstance;
use crate::luby::{luby, LubyInstance};
use crate::sigmoid::SigmoidInstance;
use crate::toygd::ToyGdInstance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile<P> {
    pub benchmark: String,
    pub generator_seed: u64,
    pub instances: Vec<Instance<P>>,
}

impl<P: Serialize + DeserializeOwned> InstanceFile<P> {
    pub fn new(benchmark: impl Into<String>, generator_seed: u64, instances: Vec<Instance<P>>) -> Self {
        Self {
            benchmark: benchmark.into(),
            generator_seed,
            instances,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance files serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| DacError::Config(format!("instance file: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json())
            .map_err(|e| DacError::Config(format!("writing {}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| DacError::Config(format!("reading {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

fn wrap<P>(prefix: &str, seed: u64, payloads: Vec<P>) -> Vec<Instance<P>> {
    payloads
        .into_iter()
        .enumerate()
        .map(|(k, p)| Instance::new(format!("{prefix}-{k}"), p, derive_seed(seed, &[k as u64])))
        .collect()
}

/// Shifts uniform in `0..=max_shift`; one shared `max_exponent` large enough for all.
pub fn luby_instances(seed: u64, count: usize, horizon: usize, max_shift: u64) -> Vec<Instance<LubyInstance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shifts: Vec<u64> = (0..count).map(|_| rng.gen_range(0..=max_shift)).collect();
    let largest = shifts
        .iter()
        .flat_map(|&s| (1..=horizon as u64).map(move |t| luby(s + t)))
        .max()
        .unwrap_or(1);
    let max_exponent = largest.trailing_zeros();
    let payloads = shifts
        .into_iter()
        .map(|shift| LubyInstance {
            shift,
            horizon,
            max_exponent,
        })
        .collect();
    wrap("luby", seed, payloads)
}

/// Shifts uniform in `[0, T]`, slopes uniform in `[-2, 2]`.
pub fn sigmoid_instances(seed: u64, count: usize, action_counts: &[usize], horizon: usize) -> Vec<Instance<SigmoidInstance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = action_counts.len();
    let payloads = (0..count)
        .map(|_| SigmoidInstance {
            shifts: (0..k).map(|_| rng.gen_range(0.0..=horizon as f64)).collect(),
            slopes: (0..k).map(|_| rng.gen_range(-2.0..=2.0)).collect(),
            action_counts: action_counts.to_vec(),
            horizon,
        })
        .collect();
    wrap("sigmoid", seed, payloads)
}

/// Instances differ only in their seed (the initial bitstring).
pub fn leading_ones_instances(seed: u64, count: usize, n: usize, k_choices: Option<Vec<usize>>) -> Vec<Instance<LeadingOnesInstance>> {
    let payloads = (0..count)
        .map(|_| LeadingOnesInstance {
            n,
            k_choices: k_choices.clone(),
        })
        .collect();
    wrap("leading-ones", seed, payloads)
}

/// `a (x − b)²` with `a ∈ [0.5, 2]`, `b ∈ [−2, 2]`, `x₀ ∈ [−3, 3]`.
pub fn toygd_quadratics(seed: u64, count: usize, horizon: usize) -> Vec<Instance<ToyGdInstance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let payloads = (0..count)
        .map(|_| {
            let a = rng.gen_range(0.5..=2.0);
            let b = rng.gen_range(-2.0..=2.0);
            let x0 = rng.gen_range(-3.0..=3.0);
            ToyGdInstance::quadratic(a, b, x0, horizon).expect("positive curvature")
        })
        .collect();
    wrap("toygd", seed, payloads)
}

/// Random polynomials of the given even degree: leading coefficient in
/// `[0.1, 1]`, the others in `[−1, 1]`, `x₀ ∈ [−2, 2]`.
pub fn toygd_polynomials(seed: u64, count: usize, degree: usize, horizon: usize) -> Result<Vec<Instance<ToyGdInstance>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let payloads = (0..count)
        .map(|_| {
            let mut c: Vec<f64> = (0..degree).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            c.push(rng.gen_range(0.1..=1.0));
            let x0 = rng.gen_range(-2.0..=2.0);
            ToyGdInstance::new(c, x0, horizon)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(wrap("toygd", seed, payloads))
}

/// Initial means uniform in `[−5, 5]^dim`, σ₀ = 1, default generations/population/batch.
pub fn cma_instances(seed: u64, count: usize, function: CmaFunction, dim: usize) -> Vec<Instance<CmaInstance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let payloads = (0..count)
        .map(|_| {
            let mean0 = (0..dim).map(|_| rng.gen_range(-5.0..=5.0)).collect();
            CmaInstance::new(function, mean0, 1.0)
        })
        .collect();
    wrap("cma", seed, payloads)
}
