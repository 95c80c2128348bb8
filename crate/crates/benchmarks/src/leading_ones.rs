//! Controlling the number of flipped bits of randomized local search on LeadingOnes.
//!
//! Each step flips `k` distinct uniformly chosen bits and keeps the offspring iff its
//! LeadingOnes value is not worse. Every step costs 1 and the run ends at the optimum.

use std::sync::Arc;

use dac_core::{
    Binning, Configuration, ConfigurationSpace, DacError, Enumerable, Instance, Observation,
    ObservationSchema, ParameterSpec, PolicySpaceSpec, Result, TabularMdp, TargetAlgorithm, Value,
};
use rand::{seq::index, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Largest bitstring length the environment can represent.
pub const MAX_N: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadingOnesInstance {
    pub n: usize,
    /// Restricts the choice of `k` to this portfolio when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_choices: Option<Vec<usize>>,
}

/// Number of leading one-bits of the lowest `n` bits (bit 0 is the first position).
pub fn leading_ones(bits: u64, n: usize) -> usize {
    ((!bits).trailing_zeros() as usize).min(n)
}

/// `C(n, k)` as f64; exact for every argument this crate uses (n <= 64).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as f64
}

/// Probability that flipping `k` uniformly chosen bits at fitness level `level`
/// strictly improves: the first zero must flip and no leading one may flip.
pub fn improvement_probability(n: usize, level: usize, k: usize) -> f64 {
    if level >= n || k == 0 || k > n {
        return 0.0;
    }
    let free = n - level - 1;
    binomial(free, k - 1) / binomial(n, k)
}

/// Distribution of the level reached after an improvement from `level`:
/// the suffix behind the flipped zero is uniformly random, so `j` extra leading
/// ones appear with probability `2^-(j+1)` (and `2^-m` for the whole suffix).
pub fn jump_distribution(n: usize, level: usize) -> Vec<(usize, f64)> {
    let m = n - level - 1;
    (0..=m)
        .map(|j| {
            let p = if j < m { 0.5f64.powi(j as i32 + 1) } else { 0.5f64.powi(m as i32) };
            (level + 1 + j, p)
        })
        .collect()
}

/// Distribution of the LeadingOnes value of a uniformly random bitstring.
pub fn initial_level_distribution(n: usize) -> Vec<(usize, f64)> {
    (0..=n)
        .map(|j| {
            let p = if j < n { 0.5f64.powi(j as i32 + 1) } else { 0.5f64.powi(n as i32) };
            (j, p)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct LeadingOnesState {
    pub bits: u64,
    pub t: usize,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone)]
pub struct LeadingOnesEnv {
    n: usize,
    k_choices: Option<Vec<usize>>,
    space: ConfigurationSpace,
    schema: Arc<ObservationSchema>,
}

impl LeadingOnesEnv {
    pub fn new(n: usize, k_choices: Option<Vec<usize>>) -> Result<Self> {
        if n == 0 || n > MAX_N {
            return Err(DacError::Argument(format!("LeadingOnes length must be in 1..={MAX_N}")));
        }
        let space = match &k_choices {
            None => ConfigurationSpace::new(vec![ParameterSpec::integer("k", 1, n as i64)])?,
            Some(ks) => {
                if ks.iter().any(|&k| k == 0 || k > n) {
                    return Err(DacError::Argument(format!("k choices must lie in 1..={n}")));
                }
                ConfigurationSpace::new(vec![ParameterSpec::categorical(
                    "k",
                    ks.iter().map(|k| k.to_string()),
                )])?
            }
        };
        Ok(Self {
            n,
            k_choices,
            space,
            schema: ObservationSchema::new(["lo", "n", "t"]),
        })
    }

    pub fn for_instance(instance: &LeadingOnesInstance) -> Result<Self> {
        Self::new(instance.n, instance.k_choices.clone())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of flipped bits encoded by `config`.
    pub fn flips(&self, config: &Configuration) -> usize {
        match (&self.k_choices, config.values[0]) {
            (None, Value::Integer(k)) => k as usize,
            (Some(ks), Value::Categorical(i)) => ks[i],
            _ => panic!("configuration does not belong to this LeadingOnes space"),
        }
    }

    /// Configuration flipping `k` bits.
    pub fn config_for(&self, k: usize) -> Option<Configuration> {
        match &self.k_choices {
            None => (1..=self.n).contains(&k).then(|| Configuration::single(Value::Integer(k as i64))),
            Some(ks) => ks
                .iter()
                .position(|&c| c == k)
                .map(|i| Configuration::single(Value::Categorical(i))),
        }
    }

    fn mask(&self) -> u64 {
        if self.n == 64 {
            u64::MAX
        } else {
            (1u64 << self.n) - 1
        }
    }
}

impl TargetAlgorithm for LeadingOnesEnv {
    type Payload = LeadingOnesInstance;
    type State = LeadingOnesState;

    fn name(&self) -> &str {
        "leading_ones"
    }

    fn config_space(&self) -> &ConfigurationSpace {
        &self.space
    }

    fn observation_schema(&self) -> &Arc<ObservationSchema> {
        &self.schema
    }

    fn validate(&self, instance: &Instance<LeadingOnesInstance>) -> Result<()> {
        if instance.payload.n != self.n || instance.payload.k_choices != self.k_choices {
            return Err(DacError::Instance {
                id: instance.id.clone(),
                message: "instance size or k portfolio differs from the environment".into(),
            });
        }
        Ok(())
    }

    fn init(&self, _instance: &Instance<LeadingOnesInstance>, seed: u64) -> LeadingOnesState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits = rng.gen::<u64>() & self.mask();
        LeadingOnesState { bits, t: 0, rng }
    }

    fn step(
        &self,
        state: &LeadingOnesState,
        _instance: &Instance<LeadingOnesInstance>,
        config: &Configuration,
    ) -> (LeadingOnesState, f64) {
        let k = self.flips(config);
        let mut next = state.clone();
        let mut offspring = state.bits;
        for pos in index::sample(&mut next.rng, self.n, k) {
            offspring ^= 1u64 << pos;
        }
        if leading_ones(offspring, self.n) >= leading_ones(state.bits, self.n) {
            next.bits = offspring;
        }
        next.t += 1;
        (next, 1.0)
    }

    fn is_final(&self, state: &LeadingOnesState, _instance: &Instance<LeadingOnesInstance>) -> bool {
        leading_ones(state.bits, self.n) == self.n
    }

    fn observe(&self, state: &LeadingOnesState, _instance: &Instance<LeadingOnesInstance>) -> Result<Observation> {
        Observation::new(
            vec![leading_ones(state.bits, self.n) as f64, self.n as f64, state.t as f64],
            &self.schema,
        )
    }
}

impl Enumerable for LeadingOnesEnv {
    /// Fitness-level chain: states are LeadingOnes values `0..=n`.
    fn tabulate(&self, _instance: &Instance<LeadingOnesInstance>) -> Result<TabularMdp> {
        let n = self.n;
        let actions = self.space.enumerate().expect("finite");
        let mut transitions = Vec::with_capacity(n + 1);
        for level in 0..=n {
            let row = actions
                .iter()
                .map(|a| {
                    if level == n {
                        return vec![(n, 1.0)];
                    }
                    let p = improvement_probability(n, level, self.flips(a));
                    let mut out = Vec::new();
                    if p < 1.0 {
                        out.push((level, 1.0 - p));
                    }
                    if p > 0.0 {
                        out.extend(jump_distribution(n, level).into_iter().map(|(s, q)| (s, p * q)));
                    }
                    out
                })
                .collect();
            transitions.push(row);
        }
        let mut costs = vec![vec![1.0; actions.len()]; n + 1];
        costs[n] = vec![0.0; actions.len()];
        let mut terminal = vec![false; n + 1];
        terminal[n] = true;
        Ok(TabularMdp {
            actions,
            transitions,
            costs,
            terminal,
            initial: initial_level_distribution(n),
            init_cost: 0.0,
        })
    }

    fn tabular_spec(&self, _instances: &[Instance<LeadingOnesInstance>]) -> Result<PolicySpaceSpec> {
        PolicySpaceSpec::tabular(
            self.space.clone(),
            self.schema.names().to_vec(),
            vec![Binning::integers(0, self.n + 1)],
        )
    }

    fn cell_of_state(&self, _spec: &PolicySpaceSpec, _instance: &Instance<LeadingOnesInstance>, state: usize) -> usize {
        state
    }
}
