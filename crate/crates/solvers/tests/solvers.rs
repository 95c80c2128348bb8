use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use dac_benchmarks::generators::toygd_quadratics;
use dac_benchmarks::luby::{LubyEnv, LubyInstance};
use dac_benchmarks::toygd::{ToyGdEnv, ToyGdInstance};
use dac_core::{
    Binning, Configuration, ConfigurationSpace, Controller, CostMode, DacError, DacScenario,
    DynamicPolicy, Enumerable, Evaluation, InputFeature, Instance, InstanceSet, Observation,
    ObservationSchema, ParameterSpec, PolicySpaceSpec, Result, Scenario, TabularMdp,
    TargetAlgorithm, Trajectory, Transform, Value,
};
use dac_oracles::{solve_mdp, static_grid_bounds};
use dac_solvers::racing::{constant_candidates, rung_schedule, schedule_cost};
use dac_solvers::spec::configuration_grid;
use dac_solvers::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One-step problem with cost `(θ − target)² + noise·U(0, 1)`.
struct Parabola {
    target: f64,
    noise: f64,
    space: ConfigurationSpace,
    schema: Arc<ObservationSchema>,
}

impl Parabola {
    fn new(target: f64, noise: f64) -> Self {
        Self {
            target,
            noise,
            space: ConfigurationSpace::new(vec![ParameterSpec::real("theta", -20.0, 20.0, false)]).unwrap(),
            schema: ObservationSchema::new(["bias"]),
        }
    }
}

impl TargetAlgorithm for Parabola {
    type Payload = ();
    type State = (bool, u64);

    fn name(&self) -> &str {
        "parabola"
    }

    fn config_space(&self) -> &ConfigurationSpace {
        &self.space
    }

    fn observation_schema(&self) -> &Arc<ObservationSchema> {
        &self.schema
    }

    fn init(&self, _instance: &Instance<()>, seed: u64) -> (bool, u64) {
        (false, seed)
    }

    fn step(&self, state: &(bool, u64), _instance: &Instance<()>, config: &Configuration) -> ((bool, u64), f64) {
        let theta = config.values[0].as_real().unwrap();
        let u: f64 = ChaCha8Rng::seed_from_u64(state.1).gen();
        ((true, state.1), (theta - self.target).powi(2) + self.noise * u)
    }

    fn is_final(&self, state: &(bool, u64), _instance: &Instance<()>) -> bool {
        state.0
    }

    fn observe(&self, _state: &(bool, u64), _instance: &Instance<()>) -> Result<Observation> {
        Observation::new(vec![1.0], &self.schema)
    }
}

fn parabola_scenario(target: f64, noise: f64, instances: usize) -> DacScenario<Parabola> {
    let env = Parabola::new(target, noise);
    let space = PolicySpaceSpec::constant(env.space.clone(), vec!["bias".into()]);
    let set = InstanceSet::uniform((0..instances).map(|k| Instance::new(format!("p{k}"), (), k as u64)).collect()).unwrap();
    DacScenario::new("parabola", env, set, space, 1, CostMode::DecomposedSum).unwrap()
}

/// Deterministic chain over states {0, 1} with terminal state 2.
struct Chain {
    next: [[usize; 2]; 2],
    cost: [[f64; 2]; 2],
    space: ConfigurationSpace,
    schema: Arc<ObservationSchema>,
}

impl Chain {
    fn new(next: [[usize; 2]; 2], cost: [[f64; 2]; 2]) -> Self {
        Self {
            next,
            cost,
            space: ConfigurationSpace::new(vec![ParameterSpec::categorical("a", ["0", "1"])]).unwrap(),
            schema: ObservationSchema::new(["s"]),
        }
    }
}

impl TargetAlgorithm for Chain {
    type Payload = ();
    type State = usize;

    fn name(&self) -> &str {
        "chain"
    }

    fn config_space(&self) -> &ConfigurationSpace {
        &self.space
    }

    fn observation_schema(&self) -> &Arc<ObservationSchema> {
        &self.schema
    }

    fn init(&self, _instance: &Instance<()>, _seed: u64) -> usize {
        0
    }

    fn step(&self, s: &usize, _instance: &Instance<()>, config: &Configuration) -> (usize, f64) {
        let a = config.values[0].as_index().unwrap();
        (self.next[*s][a], self.cost[*s][a])
    }

    fn is_final(&self, s: &usize, _instance: &Instance<()>) -> bool {
        *s == 2
    }

    fn observe(&self, s: &usize, _instance: &Instance<()>) -> Result<Observation> {
        Observation::new(vec![*s as f64], &self.schema)
    }
}

impl Enumerable for Chain {
    fn tabulate(&self, _instance: &Instance<()>) -> Result<TabularMdp> {
        let mut transitions = Vec::new();
        let mut costs = Vec::new();
        for s in 0..2 {
            transitions.push((0..2).map(|a| vec![(self.next[s][a], 1.0)]).collect());
            costs.push(self.cost[s].to_vec());
        }
        transitions.push(vec![vec![(2, 1.0)]; 2]);
        costs.push(vec![0.0; 2]);
        Ok(TabularMdp {
            actions: self.space.enumerate().unwrap(),
            transitions,
            costs,
            terminal: vec![false, false, true],
            initial: vec![(0, 1.0)],
            init_cost: 0.0,
        })
    }

    fn tabular_spec(&self, _instances: &[Instance<()>]) -> Result<PolicySpaceSpec> {
        PolicySpaceSpec::tabular(self.space.clone(), vec!["s".into()], vec![Binning::integers(0, 3)])
    }

    fn cell_of_state(&self, spec: &PolicySpaceSpec, _instance: &Instance<()>, state: usize) -> usize {
        spec.cell_of(&[state as f64])
    }
}

fn chain_scenario(chain: Chain) -> DacScenario<Chain> {
    let spec = chain.tabular_spec(&[]).unwrap();
    let set = InstanceSet::uniform(vec![Instance::new("chain", (), 0)]).unwrap();
    DacScenario::new("chain", chain, set, spec, 10, CostMode::DecomposedSum).unwrap()
}

fn ctx<'a>(seed: u64, max: u64, every: u64) -> SolverContext<'a> {
    SolverContext::new(seed, SolverBudget::new(max, every).unwrap())
}

fn assert_incumbent_trace(trace: &IncumbentTrace) {
    assert!(!trace.points.is_empty());
    for w in trace.points.windows(2) {
        assert!(w[1].evaluations_used > w[0].evaluations_used, "{trace:?}");
        assert!(w[1].mean_cost <= w[0].mean_cost, "{trace:?}");
    }
}

#[test]
fn q_learning_solves_luby_prefix() {
    let env = LubyEnv::new(3);
    let inst = Instance::new("luby-0", LubyInstance { shift: 0, horizon: 8, max_exponent: 3 }, 0);
    let spec = env.tabular_spec(std::slice::from_ref(&inst)).unwrap();
    let set = InstanceSet::uniform(vec![inst]).unwrap();
    let scenario = DacScenario::new("luby", env, set, spec, 8, CostMode::DecomposedSum).unwrap();
    let (_, trace, _) =
        tabular_q_learning(&scenario, &Arc::clone(&scenario.policy_space), &QLearningParams::default(), ctx(7, 20_000, 1_000))
            .unwrap();
    assert_eq!(trace.final_cost(), Some(0.0));
    assert_eq!(trace.evaluations_used(), 20_000);
    assert_incumbent_trace(&trace);
}

#[test]
fn q_learning_matches_value_iteration_on_chain() {
    // 0 --a0 (1)--> 1 --a0 (1)--> end ; 0 --a1 (3)--> end ; 1 --a1 (2.5)--> 0
    let chain = Chain::new([[1, 2], [2, 0]], [[1.0, 3.0], [1.0, 2.5]]);
    let mdp = chain.tabulate(&Instance::new("c", (), 0)).unwrap();
    let vi = solve_mdp(&mdp).unwrap();
    let scenario = chain_scenario(chain);
    let (policy, _, q) =
        tabular_q_learning(&scenario, &Arc::clone(&scenario.policy_space), &QLearningParams::default(), ctx(3, 5_000, 500))
            .unwrap();
    for s in 0..2 {
        for a in 0..2 {
            let successor = mdp.transitions[s][a][0].0;
            let q_star = -(mdp.costs[s][a] + vi.values[successor]);
            assert!((q.values[s][a] - q_star).abs() < 1e-3, "Q({s},{a}) = {} vs {q_star}", q.values[s][a]);
        }
        assert_eq!(q.greedy(s), vi.actions[s]);
    }
    assert_eq!(scenario.evaluate(&policy, 0, 0).unwrap().cost, vi.expected_cost);
}

#[test]
fn zero_costs_keep_q_at_zero() {
    let scenario = chain_scenario(Chain::new([[1, 2], [2, 0]], [[0.0; 2]; 2]));
    let (_, _, q) =
        tabular_q_learning(&scenario, &Arc::clone(&scenario.policy_space), &QLearningParams::default(), ctx(1, 500, 100))
            .unwrap();
    assert!(q.values.iter().flatten().all(|&v| v == 0.0));
}

#[test]
fn visit_count_step_sizes_average_the_targets() {
    let scenario = chain_scenario(Chain::new([[1, 2], [2, 0]], [[1.0, 3.0], [1.0, 2.5]]));
    let params = QLearningParams {
        alpha: 1e-6,
        visit_exponent: Some(1.0),
        ..QLearningParams::default()
    };
    let (_, _, q) = tabular_q_learning(&scenario, &Arc::clone(&scenario.policy_space), &params, ctx(4, 2_000, 500)).unwrap();
    // actions into the terminal have a constant target, so a step size of 1/n reproduces it exactly
    assert!(q.visits[0][1] > 0 && q.visits[1][0] > 0);
    assert_eq!(q.values[0][1], -3.0);
    assert_eq!(q.values[1][0], -1.0);
    assert_eq!(q.visits[2], vec![0, 0]);

    for w in [0.5, 1.5] {
        let bad = QLearningParams {
            visit_exponent: Some(w),
            ..QLearningParams::default()
        };
        let err = tabular_q_learning(&scenario, &Arc::clone(&scenario.policy_space), &bad, ctx(1, 10, 10)).unwrap_err();
        assert!(matches!(err, DacError::Argument(_)));
    }
}

#[test]
fn q_learning_refuses_oversized_tables() {
    let scenario = parabola_scenario(0.0, 0.0, 1);
    let space = ConfigurationSpace::new(vec![ParameterSpec::categorical("a", ["x", "y"])]).unwrap();
    let huge = PolicySpaceSpec::tabular(space, vec!["bias".into()], vec![Binning::integers(0, 2_000_000)]).unwrap();
    let err = tabular_q_learning(&scenario, &Arc::new(huge), &QLearningParams::default(), ctx(1, 10, 10)).unwrap_err();
    assert!(matches!(err, DacError::Unsupported(m) if m.contains("2000000")));
}

#[test]
fn cem_finds_parabola_minimum() {
    let scenario = parabola_scenario(3.0, 0.0, 1);
    // the unsmoothed refit shrinks σ faster than the mean travels from 0 to 3
    let params = CemParams {
        sigma_init: 5.0,
        smoothing: 0.7,
        ..CemParams::default()
    };
    let budget = 50 * params.population as u64;
    let spec = Arc::clone(&scenario.policy_space);
    let (policy, trace) = cem_policy_search(&scenario, &spec, &params, ctx(11, budget, 16)).unwrap();
    assert!((policy.lambda[0] - 3.0).abs() < 0.01, "{:?}", policy.lambda);
    assert_incumbent_trace(&trace);
}

#[test]
fn cem_reports_collapse() {
    let scenario = parabola_scenario(0.0, 0.0, 1);
    let params = CemParams {
        sigma_init: 1e-13,
        ..CemParams::default()
    };
    let spec = Arc::clone(&scenario.policy_space);
    let (_, trace) = cem_policy_search(&scenario, &spec, &params, ctx(1, 10_000, 16)).unwrap();
    assert!(trace.early_stop.as_deref().unwrap().contains("collapsed"));
    assert!(trace.evaluations_used() < 10_000);
}

fn toygd_scenario(spec: PolicySpaceSpec, count: usize, horizon: usize) -> DacScenario<ToyGdEnv> {
    let set = InstanceSet::uniform(toygd_quadratics(5, count, horizon)).unwrap();
    DacScenario::new("toygd", ToyGdEnv::new(), set, spec, horizon, CostMode::DecomposedSum).unwrap()
}

fn toygd_names() -> Vec<String> {
    ToyGdEnv::new().observation_schema().names().to_vec()
}

fn log_grid(points: usize) -> Vec<Configuration> {
    configuration_grid(ToyGdEnv::new().config_space(), points).unwrap()
}

#[test]
fn cem_log_linear_reaches_grid_best_constant() {
    let space = ToyGdEnv::new().config_space().clone();
    let spec = PolicySpaceSpec::log_linear(space, toygd_names(), vec![InputFeature::new(4, Transform::Identity)]).unwrap();
    let scenario = toygd_scenario(spec, 10, 10);
    let (_, report) = static_grid_bounds(&scenario, &log_grid(64), &[0]).unwrap();
    let params = CemParams {
        population: 20,
        subsample: 10,
        initial_mean: Some(vec![-2.0, 0.0]),
        sigma_init: 1.0,
        ..CemParams::default()
    };
    let spec = Arc::clone(&scenario.policy_space);
    let (_, trace) = cem_policy_search(&scenario, &spec, &params, ctx(2, 20 * 10 * 60, 200)).unwrap();
    assert!(
        trace.final_cost().unwrap() <= report.sbs_cost,
        "cem {} vs sbs {}",
        trace.final_cost().unwrap(),
        report.sbs_cost
    );
}

#[test]
fn racing_keeps_dominant_candidate() {
    // noise in [0, 1): every cost of θ = 0 is below every cost of θ = 2
    let scenario = parabola_scenario(0.0, 1.0, 3);
    let grid = [Configuration::single(Value::Real(2.0)), Configuration::single(Value::Real(0.0))];
    let candidates = constant_candidates(&scenario, &grid).unwrap();
    for eta in [2, 3, 5] {
        for initial_pairs in [1, 2, 4] {
            let params = RacingParams { eta, initial_pairs };
            let (winner, _) = racing_configurator(&scenario, &candidates, &params, ctx(eta as u64, 1_000, 10)).unwrap();
            assert_eq!(winner.lambda, vec![0.0]);
        }
    }
}

#[test]
fn racing_schedule_accounting() {
    let scenario = parabola_scenario(1.0, 0.5, 4);
    let grid: Vec<Configuration> = (0..27).map(|k| Configuration::single(Value::Real(k as f64 / 9.0))).collect();
    let candidates = constant_candidates(&scenario, &grid).unwrap();
    let params = RacingParams::default();
    let schedule = rung_schedule(27, &params);
    assert_eq!(schedule.iter().map(|r| r.0).collect::<Vec<_>>(), vec![27, 9, 3, 1]);
    assert_eq!(schedule_cost(&schedule, 1), 108);
    let (_, trace) = racing_configurator(&scenario, &candidates, &params, ctx(4, 108, 108)).unwrap();
    assert_eq!(trace.evaluations_used(), 108);
    assert!(trace.early_stop.is_none());
    let err = racing_configurator(&scenario, &candidates, &params, ctx(4, 20, 10)).unwrap_err();
    assert!(err.to_string().contains("at least 27"), "{err}");
}

#[test]
fn racing_static_grid_finds_sbs_cell() {
    let space = ToyGdEnv::new().config_space().clone();
    let scenario = toygd_scenario(PolicySpaceSpec::constant(space, toygd_names()), 10, 10);
    let grid = log_grid(64);
    let (_, report) = static_grid_bounds(&scenario, &grid, &[0]).unwrap();
    let candidates = constant_candidates(&scenario, &grid).unwrap();
    let params = RacingParams {
        eta: 3,
        initial_pairs: 10,
    };
    let budget = schedule_cost(&rung_schedule(64, &params), 1);
    let (winner, _) = racing_configurator(&scenario, &candidates, &params, ctx(9, budget, budget)).unwrap();
    let index = candidates.iter().position(|c| c.lambda == winner.lambda).unwrap();
    assert!(index.abs_diff(report.sbs_index) <= 1, "{index} vs {}", report.sbs_index);
}

#[test]
fn single_step_gradient_matches_closed_form() {
    let space = ToyGdEnv::new().config_space().clone();
    let spec = Arc::new(PolicySpaceSpec::constant(space, toygd_names()));
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..50 {
        let (a, b, x0) = (rng.gen_range(0.5..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-3.0..3.0));
        let eta: f64 = rng.gen_range(0.01..0.9);
        let inst = ToyGdInstance::quadratic(a, b, x0, 1).unwrap();
        let set = InstanceSet::uniform(vec![Instance::new("q", inst.clone(), 0)]).unwrap();
        let scenario =
            DacScenario::new("q", ToyGdEnv::new(), set, (*spec).clone(), 1, CostMode::DecomposedSum).unwrap();
        let policy = DynamicPolicy::new(Arc::clone(&spec), vec![eta]).unwrap();
        let (cost, grad) = scenario.cost_gradient(&policy, 0, 0, &[0]).unwrap();
        let d = x0 - b;
        let expected_cost = a * (1.0 - 2.0 * a * eta).powi(2) * d * d - inst.f_min();
        let expected_grad = -4.0 * a * a * (1.0 - 2.0 * a * eta) * d * d;
        assert!((cost - expected_cost).abs() <= 1e-12 * (1.0 + expected_cost.abs()));
        assert!((grad[0] - expected_grad).abs() <= 1e-12 * (1.0 + expected_grad.abs()));
    }
}

#[test]
fn mlp_gradient_matches_finite_differences() {
    let space = ToyGdEnv::new().config_space().clone();
    let spec = PolicySpaceSpec::mlp(
        space,
        toygd_names(),
        vec![InputFeature::new(0, Transform::Symlog), InputFeature::new(2, Transform::Symlog)],
        vec![4],
    )
    .unwrap();
    let scenario = toygd_scenario(spec, 4, 20);
    let spec = Arc::clone(&scenario.policy_space);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for case in 0..5 {
        let mut lambda: Vec<f64> = (0..spec.num_params()).map(|_| rng.gen_range(-0.3..0.3)).collect();
        *lambda.last_mut().unwrap() += -2.0;
        let policy = DynamicPolicy::new(Arc::clone(&spec), lambda.clone()).unwrap();
        let coords: Vec<usize> = (0..lambda.len()).collect();
        let instance = case % scenario.num_instances();
        let (_, grad) = scenario.cost_gradient(&policy, instance, 0, &coords).unwrap();
        let h = 1e-6;
        for j in coords {
            let at = |delta: f64| {
                let mut l = lambda.clone();
                l[j] += delta;
                scenario.evaluate(&DynamicPolicy::new(Arc::clone(&spec), l).unwrap(), instance, 0).unwrap().cost
            };
            let fd = (at(h) - at(-h)) / (2.0 * h);
            let rel = (grad[j] - fd).abs() / fd.abs().max(1e-3);
            assert!(rel < 1e-5, "case {case} coord {j}: {} vs {fd}", grad[j]);
        }
    }
}

#[test]
fn frozen_coordinates_do_not_move() {
    let space = ToyGdEnv::new().config_space().clone();
    let scenario = toygd_scenario(PolicySpaceSpec::constant(space, toygd_names()), 3, 5);
    let initial = DynamicPolicy::new(Arc::clone(&scenario.policy_space), vec![0.2]).unwrap();
    let params = GradientParams {
        coordinates: Some(vec![]),
        ..GradientParams::default()
    };
    let (policy, trace) = gradient_policy_search(&scenario, &initial, &params, ctx(1, 30, 10)).unwrap();
    assert_eq!(policy.lambda, initial.lambda);
    assert_eq!(trace.evaluations_used(), 30);
}

#[test]
fn gradient_descent_improves_constant_rate() {
    let space = ToyGdEnv::new().config_space().clone();
    let scenario = toygd_scenario(PolicySpaceSpec::constant(space, toygd_names()), 5, 5);
    let initial = DynamicPolicy::new(Arc::clone(&scenario.policy_space), vec![0.01]).unwrap();
    let params = GradientParams {
        step_size: 1e-5,
        ..GradientParams::default()
    };
    let (policy, trace) = gradient_policy_search(&scenario, &initial, &params, ctx(1, 500, 50)).unwrap();
    assert!(policy.lambda[0] > 0.01);
    assert!(trace.final_cost().unwrap() < trace.points[0].mean_cost);
    assert_incumbent_trace(&trace);
}

#[test]
fn gradient_rejects_non_differentiable_scenarios() {
    let scenario = parabola_scenario(0.0, 0.0, 1);
    let initial = DynamicPolicy::zeros(Arc::clone(&scenario.policy_space));
    let err = gradient_policy_search(&scenario, &initial, &GradientParams::default(), ctx(1, 10, 10)).unwrap_err();
    assert!(matches!(err, DacError::Unsupported(_)));
}

/// Counts target-algorithm episodes, except evaluations on the checkpoint seeds.
struct Counting<'a> {
    inner: &'a dyn Scenario,
    uncharged: Vec<u64>,
    episodes: AtomicU64,
}

impl Scenario for Counting<'_> {
    fn name(&self) -> &str {
        self.inner.name()
    }
    fn config_space(&self) -> &ConfigurationSpace {
        self.inner.config_space()
    }
    fn observation_schema(&self) -> &Arc<ObservationSchema> {
        self.inner.observation_schema()
    }
    fn policy_space(&self) -> &Arc<PolicySpaceSpec> {
        self.inner.policy_space()
    }
    fn cutoff(&self) -> usize {
        self.inner.cutoff()
    }
    fn instance_ids(&self) -> Vec<String> {
        self.inner.instance_ids()
    }
    fn num_instances(&self) -> usize {
        self.inner.num_instances()
    }
    fn is_decomposed(&self) -> bool {
        self.inner.is_decomposed()
    }
    fn episodes_per_evaluation(&self) -> u64 {
        self.inner.episodes_per_evaluation()
    }
    fn sample_instance(&self, draw: u64, random: u64) -> usize {
        self.inner.sample_instance(draw, random)
    }
    fn evaluate(&self, policy: &DynamicPolicy, instance: usize, seed: u64) -> Result<Evaluation> {
        let e = self.inner.evaluate(policy, instance, seed)?;
        if !self.uncharged.contains(&seed) {
            self.episodes.fetch_add(e.episodes, Ordering::Relaxed);
        }
        Ok(e)
    }
    fn run_episode(&self, instance: usize, seed: u64, controller: &mut dyn Controller) -> Result<Trajectory> {
        self.episodes.fetch_add(1, Ordering::Relaxed);
        self.inner.run_episode(instance, seed, controller)
    }
    fn is_differentiable(&self) -> bool {
        self.inner.is_differentiable()
    }
    fn cost_gradient(&self, policy: &DynamicPolicy, instance: usize, seed: u64, coords: &[usize]) -> Result<(f64, Vec<f64>)> {
        self.episodes.fetch_add(coords.len().max(1) as u64, Ordering::Relaxed);
        self.inner.cost_gradient(policy, instance, seed, coords)
    }
}

#[test]
fn reported_budget_equals_episodes_run() {
    let eval_seeds = default_eval_seeds(99, 2);
    let run = |scenario: &dyn Scenario, spec: &SolverSpec, budget: u64| {
        let counting = Counting {
            inner: scenario,
            uncharged: eval_seeds.clone(),
            episodes: AtomicU64::new(0),
        };
        let context = ctx(99, budget, 37).with_eval_seeds(eval_seeds.clone());
        let (_, trace) = spec.run(&counting, context).unwrap();
        assert_incumbent_trace(&trace);
        (trace.evaluations_used(), counting.episodes.load(Ordering::Relaxed))
    };

    let env = LubyEnv::new(3);
    let inst = Instance::new("luby-0", LubyInstance { shift: 0, horizon: 8, max_exponent: 3 }, 0);
    let spec = env.tabular_spec(std::slice::from_ref(&inst)).unwrap();
    let luby = DacScenario::new("luby", env, InstanceSet::uniform(vec![inst]).unwrap(), spec, 8, CostMode::DecomposedSum).unwrap();
    let (reported, counted) = run(&luby, &SolverSpec::Qlearning { params: QLearningParams::default() }, 400);
    assert_eq!((reported, counted), (400, 400));

    let space = ToyGdEnv::new().config_space().clone();
    let toygd = toygd_scenario(
        PolicySpaceSpec::log_linear(space, toygd_names(), vec![InputFeature::new(4, Transform::Identity)]).unwrap(),
        3,
        5,
    );
    let specs = [
        SolverSpec::Cem {
            params: CemParams {
                population: 6,
                subsample: 2,
                ..CemParams::default()
            },
        },
        SolverSpec::Racing {
            params: RacingParams::default(),
            sampler: Sampler::Uniform {
                count: 9,
                low: -3.0,
                high: 0.0,
            },
        },
        SolverSpec::Gradient {
            params: GradientParams::default(),
            initial_lambda: Some(vec![-3.0, 0.0]),
        },
    ];
    for spec in &specs {
        let (reported, counted) = run(&toygd, spec, 200);
        assert_eq!(reported, counted, "{}", spec.id());
        assert!(reported <= 200);
    }
}

#[test]
fn runs_are_reproducible_across_thread_counts() {
    let space = ToyGdEnv::new().config_space().clone();
    let scenario = toygd_scenario(
        PolicySpaceSpec::log_linear(space, toygd_names(), vec![InputFeature::new(4, Transform::Identity)]).unwrap(),
        4,
        5,
    );
    let spec = SolverSpec::Cem {
        params: CemParams {
            population: 8,
            subsample: 4,
            ..CemParams::default()
        },
    };
    let once = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| spec.run(&scenario, ctx(5, 640, 64)).unwrap())
    };
    let (p1, t1) = once(1);
    let (p4, t4) = once(4);
    assert_eq!(p1.to_json(), p4.to_json());
    assert_eq!(t1.to_jsonl(), t4.to_jsonl());
}

#[test]
fn checkpoint_dir_records_incumbents() {
    let dir = tempfile::tempdir().unwrap();
    let mut sink = CheckpointDir::create(dir.path()).unwrap();
    let scenario = parabola_scenario(1.0, 0.0, 2);
    let spec = Arc::clone(&scenario.policy_space);
    let context = ctx(3, 160, 32).with_observer(&mut sink);
    let (_, trace) = cem_policy_search(&scenario, &spec, &CemParams::default(), context).unwrap();
    let lines = std::fs::read_to_string(dir.path().join("trace.jsonl")).unwrap();
    assert_eq!(lines, trace.to_jsonl());
    for p in &trace.points {
        let text = std::fs::read_to_string(dir.path().join("policies").join(format!("{}.json", p.policy_id))).unwrap();
        DynamicPolicy::from_json(&text).unwrap();
    }
}

