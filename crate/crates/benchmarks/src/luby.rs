//! Guessing the next term of a shifted Luby sequence.

use std::sync::Arc;

use dac_core::{
    Binning, Configuration, ConfigurationSpace, DacError, Enumerable, Instance, Observation,
    ObservationSchema, ParameterSpec, PolicySpaceSpec, Result, TabularMdp, TargetAlgorithm, Value,
};
use serde::{Deserialize, Serialize};

/// Number of past actions exposed in the observation.
pub const HISTORY: usize = 5;

/// L(t) for t >= 1: 1, 1, 2, 1, 1, 2, 4, 1, 1, 2, ...
pub fn luby(t: u64) -> u64 {
    assert!(t >= 1, "the Luby sequence starts at t = 1");
    let mut t = t;
    loop {
        // smallest k with t <= 2^k - 1
        let k = 64 - t.leading_zeros();
        if t == (1u64 << k) - 1 {
            return 1 << (k - 1);
        }
        t = t - (1u64 << (k - 1)) + 1;
    }
}

/// Exponent a with 2^a = L(t).
pub fn luby_exponent(t: u64) -> u32 {
    luby(t).trailing_zeros()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LubyInstance {
    pub shift: u64,
    pub horizon: usize,
    pub max_exponent: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LubyState {
    pub t: usize,
    /// Most recent action first.
    pub history: [i32; HISTORY],
}

#[derive(Debug, Clone)]
pub struct LubyEnv {
    max_exponent: u32,
    space: ConfigurationSpace,
    schema: Arc<ObservationSchema>,
}

impl LubyEnv {
    pub fn new(max_exponent: u32) -> Self {
        let space = ConfigurationSpace::new(vec![ParameterSpec::categorical(
            "exponent",
            (0..=max_exponent).map(|a| a.to_string()),
        )])
        .expect("exponent list is non-empty and unique");
        let mut names = vec!["t".to_string()];
        names.extend((1..=HISTORY).map(|k| format!("action_{k}")));
        names.push("shift".into());
        Self {
            max_exponent,
            space,
            schema: ObservationSchema::new(names),
        }
    }

    /// The environment matching an instance's declared action range.
    pub fn for_instance(instance: &LubyInstance) -> Self {
        Self::new(instance.max_exponent)
    }

    pub fn max_exponent(&self) -> u32 {
        self.max_exponent
    }

    fn step_cost(instance: &LubyInstance, t: usize, action: usize) -> f64 {
        let target = luby(instance.shift + t as u64 + 1);
        if (1u64 << action) == target {
            0.0
        } else {
            1.0
        }
    }

    fn observation_values(&self, state: &LubyState, instance: &LubyInstance) -> Vec<f64> {
        let mut v = Vec::with_capacity(HISTORY + 2);
        v.push(state.t as f64);
        v.extend(state.history.iter().map(|&a| a as f64));
        v.push(instance.shift as f64);
        v
    }
}

impl TargetAlgorithm for LubyEnv {
    type Payload = LubyInstance;
    type State = LubyState;

    fn name(&self) -> &str {
        "luby"
    }

    fn config_space(&self) -> &ConfigurationSpace {
        &self.space
    }

    fn observation_schema(&self) -> &Arc<ObservationSchema> {
        &self.schema
    }

    fn validate(&self, instance: &Instance<LubyInstance>) -> Result<()> {
        let p = &instance.payload;
        let bad = |message: String| DacError::Instance {
            id: instance.id.clone(),
            message,
        };
        if p.horizon == 0 {
            return Err(bad("horizon must be at least 1".into()));
        }
        if p.max_exponent != self.max_exponent {
            return Err(bad(format!(
                "max_exponent {} differs from environment's {}",
                p.max_exponent, self.max_exponent
            )));
        }
        let largest = (1..=p.horizon as u64).map(|t| luby(p.shift + t)).max().unwrap_or(1);
        if p.max_exponent >= 63 || (1u64 << p.max_exponent) < largest {
            return Err(bad(format!(
                "2^{} cannot represent Luby value {largest} reached within the horizon",
                p.max_exponent
            )));
        }
        Ok(())
    }

    fn init(&self, _instance: &Instance<LubyInstance>, _seed: u64) -> LubyState {
        LubyState {
            t: 0,
            history: [-1; HISTORY],
        }
    }

    fn step(
        &self,
        state: &LubyState,
        instance: &Instance<LubyInstance>,
        config: &Configuration,
    ) -> (LubyState, f64) {
        let action = config.values[0].as_index().expect("categorical exponent");
        let cost = Self::step_cost(&instance.payload, state.t, action);
        let mut history = [-1; HISTORY];
        history[0] = action as i32;
        history[1..].copy_from_slice(&state.history[..HISTORY - 1]);
        (
            LubyState {
                t: state.t + 1,
                history,
            },
            cost,
        )
    }

    fn is_final(&self, state: &LubyState, instance: &Instance<LubyInstance>) -> bool {
        state.t >= instance.payload.horizon
    }

    fn observe(&self, state: &LubyState, instance: &Instance<LubyInstance>) -> Result<Observation> {
        Observation::new(self.observation_values(state, &instance.payload), &self.schema)
    }
}

impl Enumerable for LubyEnv {
    /// States are time steps `0..=horizon`; the action history never affects cost.
    fn tabulate(&self, instance: &Instance<LubyInstance>) -> Result<TabularMdp> {
        let p = &instance.payload;
        let actions = self.space.enumerate().expect("finite");
        let n = p.horizon + 1;
        let mut transitions = Vec::with_capacity(n);
        let mut costs = Vec::with_capacity(n);
        for t in 0..n {
            if t == p.horizon {
                transitions.push(vec![vec![(t, 1.0)]; actions.len()]);
                costs.push(vec![0.0; actions.len()]);
            } else {
                transitions.push(vec![vec![(t + 1, 1.0)]; actions.len()]);
                costs.push((0..actions.len()).map(|a| Self::step_cost(p, t, a)).collect());
            }
        }
        let mut terminal = vec![false; n];
        terminal[p.horizon] = true;
        Ok(TabularMdp {
            actions,
            transitions,
            costs,
            terminal,
            initial: vec![(0, 1.0)],
            init_cost: 0.0,
        })
    }

    fn tabular_spec(&self, instances: &[Instance<LubyInstance>]) -> Result<PolicySpaceSpec> {
        let horizon = instances.iter().map(|i| i.payload.horizon).max().unwrap_or(1);
        let mut shifts: Vec<u64> = instances.iter().map(|i| i.payload.shift).collect();
        shifts.sort_unstable();
        shifts.dedup();
        let shift_edges = shifts
            .windows(2)
            .map(|w| (w[0] as f64 + w[1] as f64) / 2.0)
            .collect();
        PolicySpaceSpec::tabular(
            self.space.clone(),
            self.schema.names().to_vec(),
            vec![
                Binning::integers(0, horizon),
                Binning {
                    feature: HISTORY + 1,
                    edges: shift_edges,
                },
            ],
        )
    }

    fn cell_of_state(
        &self,
        spec: &PolicySpaceSpec,
        instance: &Instance<LubyInstance>,
        state: usize,
    ) -> usize {
        let probe = LubyState {
            t: state,
            history: [-1; HISTORY],
        };
        spec.cell_of(&self.observation_values(&probe, &instance.payload))
    }
}

/// Configuration choosing exponent `a`.
pub fn exponent_config(a: u32) -> Configuration {
    Configuration::single(Value::Categorical(a as usize))
}
