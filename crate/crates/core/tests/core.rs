use std::collections::HashSet;
use std::sync::Arc;

use dac_core::{
    derive_seed, episode_seed, evaluate_policy, execute, execute_static, execute_with, mix64, BatchCost, BatchOutcome,
    Binning, Configuration, ConfigurationSpace, CostMode, DacError, DacScenario, DynamicPolicy, Instance, InstanceSet,
    Observation, ObservationSchema, ParameterSpec, PolicySpaceSpec, Result, Sampling, Scenario, TargetAlgorithm,
    Termination, Trajectory, Value,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Noisy walk towards a goal: each step moves by the chosen stride plus a
/// coin flip drawn from a counter-based stream, and costs the remaining gap / 3.
struct Walk {
    space: ConfigurationSpace,
    schema: Arc<ObservationSchema>,
}

#[derive(Clone, Debug)]
struct Goal(i64);

#[derive(Clone, Debug)]
struct WalkState {
    pos: i64,
    stream: u64,
    counter: u64,
}

impl Walk {
    fn new() -> Self {
        Self {
            space: ConfigurationSpace::new(vec![ParameterSpec::integer("stride", 0, 3)]).unwrap(),
            schema: ObservationSchema::new(["pos", "goal"]),
        }
    }
}

fn stride(a: i64) -> Configuration {
    Configuration::single(Value::Integer(a))
}

impl TargetAlgorithm for Walk {
    type Payload = Goal;
    type State = WalkState;

    fn name(&self) -> &str {
        "walk"
    }

    fn config_space(&self) -> &ConfigurationSpace {
        &self.space
    }

    fn observation_schema(&self) -> &Arc<ObservationSchema> {
        &self.schema
    }

    fn init(&self, _instance: &Instance<Goal>, seed: u64) -> WalkState {
        WalkState {
            pos: 0,
            stream: seed,
            counter: 0,
        }
    }

    fn init_cost(&self, instance: &Instance<Goal>) -> f64 {
        instance.payload.0 as f64 / 7.0
    }

    fn step(&self, state: &WalkState, instance: &Instance<Goal>, config: &Configuration) -> (WalkState, f64) {
        let a = config.get(0).and_then(Value::as_integer).unwrap();
        let coin = (derive_seed(state.stream, &[state.counter]) & 1) as i64;
        let pos = state.pos + a + coin;
        let next = WalkState {
            pos,
            stream: state.stream,
            counter: state.counter + 1,
        };
        (next, (instance.payload.0 - pos).abs() as f64 / 3.0)
    }

    fn is_final(&self, state: &WalkState, instance: &Instance<Goal>) -> bool {
        state.pos >= instance.payload.0
    }

    fn observe(&self, state: &WalkState, instance: &Instance<Goal>) -> Result<Observation> {
        Observation::new(vec![state.pos as f64, instance.payload.0 as f64], &self.schema)
    }
}

fn instances(count: usize) -> Vec<Instance<Goal>> {
    (0..count).map(|k| Instance::new(format!("g{k}"), Goal(5 + 3 * k as i64), 100 + k as u64)).collect()
}

fn tabular_spec(walk: &Walk) -> PolicySpaceSpec {
    PolicySpaceSpec::tabular(walk.space.clone(), walk.schema.names().to_vec(), vec![Binning::integers(0, 40)]).unwrap()
}

fn random_tabular(spec: &Arc<PolicySpaceSpec>, rng: &mut ChaCha8Rng) -> DynamicPolicy {
    let mut policy = DynamicPolicy::zeros(Arc::clone(spec));
    for cell in 0..spec.cell_count() {
        policy.set_cell(cell, &stride(rng.gen_range(0..=3))).unwrap();
    }
    policy
}

fn step_sum(t: &Trajectory) -> f64 {
    t.steps.iter().fold(t.init_cost, |acc, s| acc + s.cost)
}

#[test]
fn derived_seeds_do_not_collide() {
    let mut seen = HashSet::with_capacity(1_000_000);
    for k in 0..1_000_000u64 {
        assert!(seen.insert(derive_seed(42, &[k])), "collision at {k}");
    }
}

#[test]
fn empty_path_still_mixes() {
    for x in [0u64, 1, 42, u64::MAX, 0x9E37_79B9_7F4A_7C15] {
        assert_ne!(derive_seed(x, &[]), x);
        assert_eq!(derive_seed(x, &[]), mix64(x));
    }
    assert_ne!(derive_seed(7, &[0]), derive_seed(7, &[]));
    assert_ne!(derive_seed(7, &[1, 2]), derive_seed(7, &[2, 1]));
    assert_eq!(episode_seed(3, 9), derive_seed(3, &[9]));
}

#[test]
fn decomposed_cost_identity_and_replay_on_fuzzed_episodes() {
    let walk = Walk::new();
    let spec = Arc::new(tabular_spec(&walk));
    let insts = instances(4);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..2000 {
        let policy = random_tabular(&spec, &mut rng);
        let inst = &insts[rng.gen_range(0..insts.len())];
        let seed: u64 = rng.gen();
        let cutoff = rng.gen_range(1..30);
        let a = execute(&walk, &policy, inst, seed, cutoff).unwrap();
        assert_eq!(a.total_cost, step_sum(&a));
        assert!(a.steps.len() <= cutoff);
        let b = execute(&walk, &policy, inst, seed, cutoff).unwrap();
        assert_eq!(a, b);
        for (s, t) in a.steps.iter().zip(&b.steps) {
            assert_eq!(s.cost.to_bits(), t.cost.to_bits());
        }
    }
}

#[test]
fn cutoff_semantics() {
    let walk = Walk::new();
    let inst = &instances(1)[0];
    let zero = execute_static(&walk, &stride(1), inst, 0, 0);
    assert!(matches!(zero, Err(DacError::Argument(_))));

    let one = execute_static(&walk, &stride(1), inst, 0, 1).unwrap();
    assert_eq!(one.steps.len(), 1);
    assert_eq!(one.terminated_by, Termination::Cutoff);

    let done = execute_static(&walk, &stride(3), inst, 0, 100).unwrap();
    assert_eq!(done.terminated_by, Termination::IsFinal);
    assert!(done.steps.len() <= 5);

    let already = Instance::new("there", Goal(0), 0);
    let t = execute_static(&walk, &stride(3), &already, 0, 1).unwrap();
    assert!(t.steps.is_empty());
    assert_eq!(t.total_cost, 0.0);
}

#[test]
fn constant_policy_equals_static_execution() {
    let walk = Walk::new();
    let names = walk.schema.names().to_vec();
    for inst in instances(3) {
        for a in 0..=3 {
            let policy = DynamicPolicy::constant(&walk.space, names.clone(), &stride(a)).unwrap();
            for seed in 0..5 {
                let dynamic = execute(&walk, &policy, &inst, seed, 12).unwrap();
                let fixed = execute_static(&walk, &stride(a), &inst, seed, 12).unwrap();
                assert_eq!(dynamic, fixed);
            }
        }
    }
}

#[test]
fn controller_sees_every_transition() {
    struct Counting {
        acts: usize,
        feedback: usize,
        terminal: usize,
    }
    impl dac_core::Controller for Counting {
        fn act(&mut self, _obs: &Observation) -> Result<Configuration> {
            self.acts += 1;
            Ok(stride(1))
        }
        fn feedback(&mut self, _cost: f64, next: Option<&Observation>) {
            self.feedback += 1;
            self.terminal += usize::from(next.is_none());
        }
    }
    let walk = Walk::new();
    let mut c = Counting {
        acts: 0,
        feedback: 0,
        terminal: 0,
    };
    let t = execute_with(&walk, &mut c, &instances(1)[0], 3, 50).unwrap();
    assert_eq!(c.acts, t.steps.len());
    assert_eq!(c.feedback, t.steps.len());
    assert_eq!(c.terminal, 1);
}

#[test]
fn scenario_evaluates_every_pair() {
    let walk = Walk::new();
    let names = walk.schema.names().to_vec();
    let space = walk.space.clone();
    let scenario = DacScenario::new(
        "walk",
        walk,
        InstanceSet::uniform(instances(3)).unwrap(),
        PolicySpaceSpec::constant(space.clone(), names.clone()),
        20,
        CostMode::DecomposedSum,
    )
    .unwrap();
    let policy = DynamicPolicy::constant(&space, names, &stride(2)).unwrap();
    let evals = evaluate_policy(&scenario, &policy, &[0, 1, 2], &[5, 6]).unwrap();
    assert_eq!(evals.len(), 6);
    let order: Vec<(usize, u64)> = evals.iter().map(|e| (e.instance, e.seed)).collect();
    assert_eq!(order, vec![(0, 5), (0, 6), (1, 5), (1, 6), (2, 5), (2, 6)]);
    let again = evaluate_policy(&scenario, &policy, &[0, 1, 2], &[5, 6]).unwrap();
    assert_eq!(evals, again);
    assert!(evaluate_policy(&scenario, &policy, &[3], &[0]).is_err());
    assert!(evaluate_policy(&scenario, &policy, &[0], &[]).is_err());
}

/// Fraction of batch runs that end with cost above a threshold, plus one
/// reference episode per evaluation.
struct SlowShare;

impl BatchCost<Walk> for SlowShare {
    fn batch_size(&self) -> usize {
        4
    }

    fn extra_episodes(&self) -> u64 {
        1
    }

    fn evaluate(
        &self,
        algorithm: &Walk,
        instance: &Instance<Goal>,
        cutoff: usize,
        batch_seed: u64,
        runs: &[Trajectory],
    ) -> Result<BatchOutcome> {
        let reference = execute_static(algorithm, &stride(1), instance, batch_seed, cutoff)?;
        let slow = runs.iter().filter(|t| t.steps.len() > reference.steps.len()).count();
        Ok(BatchOutcome {
            cost: slow as f64 / runs.len() as f64,
            extra_episodes: 1,
        })
    }
}

#[test]
fn functional_cost_counts_batch_and_extra_episodes() {
    let walk = Walk::new();
    let names = walk.schema.names().to_vec();
    let space = walk.space.clone();
    let scenario = DacScenario::new(
        "walk",
        walk,
        InstanceSet::uniform(instances(2)).unwrap(),
        PolicySpaceSpec::constant(space.clone(), names.clone()),
        30,
        CostMode::TrajectoryFunctional(Arc::new(SlowShare)),
    )
    .unwrap();
    assert!(!scenario.is_decomposed());
    assert_eq!(scenario.episodes_per_evaluation(), 5);
    let fast = DynamicPolicy::constant(&space, names.clone(), &stride(3)).unwrap();
    let idle = DynamicPolicy::constant(&space, names, &stride(0)).unwrap();
    let e = scenario.evaluate(&fast, 1, 9).unwrap();
    assert_eq!(e.episodes, 5);
    assert_eq!(e.cost, 0.0);
    assert!(scenario.evaluate(&idle, 1, 9).unwrap().cost > 0.0);
}

#[test]
fn policy_json_round_trips_bit_exactly() {
    let walk = Walk::new();
    let spec = Arc::new(tabular_spec(&walk));
    let mut policy = random_tabular(&spec, &mut ChaCha8Rng::seed_from_u64(3));
    policy.lambda[0] = 0.1 + 0.2;
    policy.lambda[1] = -0.0;
    let back = DynamicPolicy::from_json(&policy.to_json()).unwrap();
    let bits = |p: &DynamicPolicy| p.lambda.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&back), bits(&policy));
}

#[test]
fn space_and_instance_invariants() {
    assert!(ConfigurationSpace::new(vec![ParameterSpec::real("a", 1.0, 0.5, false)]).is_err());
    assert!(ConfigurationSpace::new(vec![ParameterSpec::real("a", 0.0, 1.0, true)]).is_err());
    assert!(ConfigurationSpace::new(vec![ParameterSpec::categorical::<&str>("c", [])]).is_err());
    assert!(ConfigurationSpace::new(vec![ParameterSpec::categorical("c", ["x", "x"])]).is_err());
    assert!(ConfigurationSpace::new(vec![ParameterSpec::integer("a", 0, 1), ParameterSpec::integer("a", 0, 1)]).is_err());

    let space = ConfigurationSpace::new(vec![ParameterSpec::integer("k", 1, 3), ParameterSpec::categorical("c", ["x", "y"])])
        .unwrap();
    assert_eq!(space.cardinality(), Some(6));
    let all = space.enumerate().unwrap();
    assert_eq!(all.len(), 6);
    for (i, c) in all.iter().enumerate() {
        assert_eq!(space.index_of(c), Some(i as u64));
    }
    assert!(space.check(&Configuration::new(vec![Value::Integer(4), Value::Categorical(0)])).is_err());

    assert!(InstanceSet::<Goal>::uniform(Vec::new()).is_err());
    let dup = vec![Instance::new("a", Goal(1), 0), Instance::new("a", Goal(2), 0)];
    assert!(InstanceSet::uniform(dup).is_err());
    let weights = |w: Vec<f64>| InstanceSet::new(instances(2), Sampling::Weights { weights: w });
    assert!(weights(vec![1.0, -1.0]).is_err());
    assert!(weights(vec![0.0, 0.0]).is_err());
    assert!(weights(vec![1.0]).is_err());
    let set = weights(vec![0.0, 1.0]).unwrap();
    assert!((0..1000).all(|d| set.sample_index(d, mix64(d)) == 1));
}
