//! Tracing k sigmoid curves with discrete actions.
//!
//! At step `t` (0-indexed) the cost is
//! `1 - Π_d (1 - |σ(t; s_d, p_d) - a_d / (A_d - 1)|)` with
//! `σ(x; s, p) = 1 / (1 + exp(-s (x - p)))`, so each dimension contributes its
//! proximity to the curve and a perfect guess in every dimension costs 0.

use std::sync::Arc;

use dac_core::{
    Binning, Configuration, ConfigurationSpace, DacError, Enumerable, Instance, Observation,
    ObservationSchema, ParameterSpec, PolicySpaceSpec, Result, TabularMdp, TargetAlgorithm,
};
use serde::{Deserialize, Serialize};

pub fn sigmoid(x: f64, slope: f64, shift: f64) -> f64 {
    1.0 / (1.0 + (-slope * (x - shift)).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmoidInstance {
    pub shifts: Vec<f64>,
    pub slopes: Vec<f64>,
    pub action_counts: Vec<usize>,
    pub horizon: usize,
}

impl SigmoidInstance {
    pub fn dims(&self) -> usize {
        self.shifts.len()
    }

    /// Cost of choosing action indices `actions` at step `t`.
    pub fn step_cost(&self, t: usize, actions: &[usize]) -> f64 {
        let proximity: f64 = (0..self.dims())
            .map(|d| {
                let target = sigmoid(t as f64, self.slopes[d], self.shifts[d]);
                let level = actions[d] as f64 / (self.action_counts[d] - 1) as f64;
                1.0 - (target - level).abs()
            })
            .product();
        1.0 - proximity
    }
}

#[derive(Debug, Clone)]
pub struct SigmoidEnv {
    action_counts: Vec<usize>,
    space: ConfigurationSpace,
    schema: Arc<ObservationSchema>,
}

impl SigmoidEnv {
    pub fn new(action_counts: Vec<usize>) -> Result<Self> {
        if action_counts.is_empty() || action_counts.iter().any(|&a| a < 2) {
            return Err(DacError::Argument("sigmoid needs k >= 1 dimensions with >= 2 actions each".into()));
        }
        let space = ConfigurationSpace::new(
            action_counts
                .iter()
                .enumerate()
                .map(|(d, &a)| ParameterSpec::categorical(&format!("a{d}"), (0..a).map(|v| v.to_string())))
                .collect(),
        )?;
        let k = action_counts.len();
        let mut names = vec!["remaining".to_string()];
        names.extend((0..k).map(|d| format!("shift_{d}")));
        names.extend((0..k).map(|d| format!("slope_{d}")));
        Ok(Self {
            action_counts,
            space,
            schema: ObservationSchema::new(names),
        })
    }

    pub fn for_instance(instance: &SigmoidInstance) -> Result<Self> {
        Self::new(instance.action_counts.clone())
    }

    fn observation_values(t: usize, p: &SigmoidInstance) -> Vec<f64> {
        let mut v = Vec::with_capacity(1 + 2 * p.dims());
        v.push(p.horizon.saturating_sub(t) as f64);
        v.extend(&p.shifts);
        v.extend(&p.slopes);
        v
    }

    fn actions(config: &Configuration) -> Vec<usize> {
        config
            .values
            .iter()
            .map(|v| v.as_index().expect("categorical action"))
            .collect()
    }
}

impl TargetAlgorithm for SigmoidEnv {
    type Payload = SigmoidInstance;
    type State = usize;

    fn name(&self) -> &str {
        "sigmoid"
    }

    fn config_space(&self) -> &ConfigurationSpace {
        &self.space
    }

    fn observation_schema(&self) -> &Arc<ObservationSchema> {
        &self.schema
    }

    fn validate(&self, instance: &Instance<SigmoidInstance>) -> Result<()> {
        let p = &instance.payload;
        let bad = |message: &str| DacError::Instance {
            id: instance.id.clone(),
            message: message.to_string(),
        };
        if p.dims() == 0 || p.slopes.len() != p.dims() || p.action_counts.len() != p.dims() {
            return Err(bad("shifts, slopes and action counts must have the same length k >= 1"));
        }
        if p.action_counts != self.action_counts {
            return Err(bad("action counts differ from the environment"));
        }
        if p.horizon == 0 {
            return Err(bad("horizon must be at least 1"));
        }
        if p.shifts.iter().chain(&p.slopes).any(|v| !v.is_finite()) {
            return Err(bad("shifts and slopes must be finite"));
        }
        Ok(())
    }

    fn init(&self, _instance: &Instance<SigmoidInstance>, _seed: u64) -> usize {
        0
    }

    fn step(&self, t: &usize, instance: &Instance<SigmoidInstance>, config: &Configuration) -> (usize, f64) {
        (t + 1, instance.payload.step_cost(*t, &Self::actions(config)))
    }

    fn is_final(&self, t: &usize, instance: &Instance<SigmoidInstance>) -> bool {
        *t >= instance.payload.horizon
    }

    fn observe(&self, t: &usize, instance: &Instance<SigmoidInstance>) -> Result<Observation> {
        Observation::new(Self::observation_values(*t, &instance.payload), &self.schema)
    }
}

fn midpoints(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    values.dedup();
    values.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect()
}

impl Enumerable for SigmoidEnv {
    fn tabulate(&self, instance: &Instance<SigmoidInstance>) -> Result<TabularMdp> {
        let p = &instance.payload;
        let actions = self.space.enumerate().expect("finite");
        let n = p.horizon + 1;
        let mut transitions = Vec::with_capacity(n);
        let mut costs = Vec::with_capacity(n);
        for t in 0..n {
            let next = if t == p.horizon { t } else { t + 1 };
            transitions.push(vec![vec![(next, 1.0)]; actions.len()]);
            costs.push(
                actions
                    .iter()
                    .map(|a| if t == p.horizon { 0.0 } else { p.step_cost(t, &Self::actions(a)) })
                    .collect(),
            );
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

    /// Bins on remaining steps plus every shift and slope feature, so distinct
    /// instances land in distinct cells.
    fn tabular_spec(&self, instances: &[Instance<SigmoidInstance>]) -> Result<PolicySpaceSpec> {
        let k = self.action_counts.len();
        let horizon = instances.iter().map(|i| i.payload.horizon).max().unwrap_or(1);
        let mut bins = vec![Binning::integers(0, horizon + 1)];
        for d in 0..k {
            bins.push(Binning {
                feature: 1 + d,
                edges: midpoints(instances.iter().map(|i| i.payload.shifts[d]).collect()),
            });
            bins.push(Binning {
                feature: 1 + k + d,
                edges: midpoints(instances.iter().map(|i| i.payload.slopes[d]).collect()),
            });
        }
        PolicySpaceSpec::tabular(self.space.clone(), self.schema.names().to_vec(), bins)
    }

    fn cell_of_state(&self, spec: &PolicySpaceSpec, instance: &Instance<SigmoidInstance>, state: usize) -> usize {
        spec.cell_of(&Self::observation_values(state, &instance.payload))
    }
}
