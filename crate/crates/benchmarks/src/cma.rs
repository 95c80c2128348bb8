//! (μ/μ_w, λ) CMA-ES whose step size σ is chosen by the policy every generation.
//!
//! Sampling uses the symmetric square root `C^{1/2}`, so samples are
//! independent of how the eigendecomposition orders or signs its vectors.
//! Constants follow the standard defaults:
//!
//! * `w_i ∝ ln(μ + 1/2) − ln i`, `μ = ⌊λ/2⌋`, `μ_eff = 1 / Σ w_i²`
//! * `c_σ = (μ_eff + 2) / (n + μ_eff + 5)`
//! * `d_σ = 1 + 2·max(0, √((μ_eff − 1)/(n + 1)) − 1) + c_σ`
//! * `c_c = (4 + μ_eff/n) / (n + 4 + 2μ_eff/n)`
//! * `c_1 = 2 / ((n + 1.3)² + μ_eff)`
//! * `c_μ = min(1 − c_1, 2(μ_eff − 2 + 1/μ_eff) / ((n + 2)² + μ_eff))`
//! * `E‖N(0, I)‖ ≈ √n (1 − 1/(4n) + 1/(21n²))`

use std::collections::VecDeque;
use std::sync::Arc;

use dac_core::{
    batch_run_seed, derive_seed, execute_with, BatchCost, BatchOutcome, Configuration,
    ConfigurationSpace, DacError, DynamicPolicy, InputFeature, Instance, Observation,
    ObservationSchema, ParameterSpec, PolicySpaceSpec, Result, TargetAlgorithm, Trajectory,
    Transform, Value,
};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub const SIGMA_MIN: f64 = 1e-8;
pub const SIGMA_MAX: f64 = 1e3;
/// Length of the objective-change and step-size histories.
pub const HISTORY: usize = 40;
/// Eigenvalues below this fraction of the largest are lifted to it.
pub const EIGEN_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CmaFunction {
    Sphere,
    Ellipsoid,
    Rastrigin,
    Rosenbrock,
}

impl CmaFunction {
    pub const ALL: [CmaFunction; 4] = [
        CmaFunction::Sphere,
        CmaFunction::Ellipsoid,
        CmaFunction::Rastrigin,
        CmaFunction::Rosenbrock,
    ];

    pub fn eval(self, x: &[f64]) -> f64 {
        let n = x.len();
        match self {
            CmaFunction::Sphere => x.iter().map(|v| v * v).sum(),
            CmaFunction::Ellipsoid => x
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let e = if n > 1 { 6.0 * i as f64 / (n - 1) as f64 } else { 0.0 };
                    10f64.powf(e) * v * v
                })
                .sum(),
            CmaFunction::Rastrigin => {
                10.0 * n as f64
                    + x.iter()
                        .map(|v| v * v - 10.0 * (2.0 * std::f64::consts::PI * v).cos())
                        .sum::<f64>()
            }
            CmaFunction::Rosenbrock => x
                .windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
                .sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmaInstance {
    pub function: CmaFunction,
    pub dim: usize,
    pub mean0: Vec<f64>,
    pub sigma0: f64,
    #[serde(default = "default_generations")]
    pub generations: usize,
    #[serde(default = "default_population")]
    pub population: usize,
    #[serde(default = "default_batch")]
    pub batch: usize,
}

fn default_generations() -> usize {
    50
}

fn default_population() -> usize {
    10
}

fn default_batch() -> usize {
    25
}

impl CmaInstance {
    pub fn new(function: CmaFunction, mean0: Vec<f64>, sigma0: f64) -> Self {
        Self {
            function,
            dim: mean0.len(),
            mean0,
            sigma0,
            generations: default_generations(),
            population: default_population(),
            batch: default_batch(),
        }
    }
}

/// Strategy constants for one (dimension, population) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CmaParams {
    pub dim: usize,
    pub population: usize,
    pub mu: usize,
    pub weights: Vec<f64>,
    pub mu_eff: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    pub c_1: f64,
    pub c_mu: f64,
    pub chi_n: f64,
}

impl CmaParams {
    pub fn new(dim: usize, population: usize) -> Self {
        let n = dim as f64;
        let mu = population / 2;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
        let c_1 = 2.0 / ((n + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0).powi(2) + mu_eff));
        let chi_n = n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
        Self {
            dim,
            population,
            mu,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CmaState {
    pub mean: DVector<f64>,
    /// Step size used in the most recent generation (σ₀ before the first).
    pub sigma: f64,
    pub cov: DMatrix<f64>,
    pub p_sigma: DVector<f64>,
    pub p_c: DVector<f64>,
    /// Most recent first.
    pub f_changes: VecDeque<f64>,
    /// Most recent first.
    pub sigmas: VecDeque<f64>,
    pub best_f: f64,
    pub generation: usize,
    prev_gen_best: f64,
    sqrt_cov: DMatrix<f64>,
    rng: ChaCha8Rng,
}

impl CmaState {
    /// The step size standard CSA would use next.
    pub fn csa_sigma(&self, params: &CmaParams) -> f64 {
        self.sigma * ((params.c_sigma / params.d_sigma) * (self.p_sigma.norm() / params.chi_n - 1.0)).exp()
    }
}

/// Symmetric square root of a symmetric matrix after flooring its spectrum.
/// Returns `(repaired C, C^{1/2})`.
fn repair_and_sqrt(cov: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(cov.clone());
    let top = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    let floor = EIGEN_FLOOR * top.max(f64::MIN_POSITIVE);
    let values = eig.eigenvalues.map(|v| if v.is_nan() || v < floor { floor } else { v });
    let b = &eig.eigenvectors;
    let repaired = b * DMatrix::from_diagonal(&values) * b.transpose();
    let root = b * DMatrix::from_diagonal(&values.map(f64::sqrt)) * b.transpose();
    (symmetrize(repaired), symmetrize(root))
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn push_front(history: &mut VecDeque<f64>, value: f64) {
    history.push_front(value);
    history.truncate(HISTORY);
}

#[derive(Debug, Clone)]
pub struct CmaEnv {
    params: CmaParams,
    space: ConfigurationSpace,
    schema: Arc<ObservationSchema>,
}

impl CmaEnv {
    pub fn new(dim: usize, population: usize) -> Result<Self> {
        if dim < 2 || population < 2 {
            return Err(DacError::Argument("CMA-ES needs dim >= 2 and population >= 2".into()));
        }
        let mut names = vec!["sigma".to_string(), "ps_norm".to_string()];
        names.extend((0..HISTORY).map(|k| format!("df_{k}")));
        names.extend((0..HISTORY).map(|k| format!("sigma_{k}")));
        Ok(Self {
            params: CmaParams::new(dim, population),
            space: ConfigurationSpace::new(vec![ParameterSpec::real("sigma", SIGMA_MIN, SIGMA_MAX, true)])?,
            schema: ObservationSchema::new(names),
        })
    }

    pub fn for_instance(instance: &CmaInstance) -> Result<Self> {
        Self::new(instance.dim, instance.population)
    }

    pub fn params(&self) -> &CmaParams {
        &self.params
    }

    pub fn sigma_config(sigma: f64) -> Configuration {
        Configuration::single(Value::Real(sigma))
    }
}

impl TargetAlgorithm for CmaEnv {
    type Payload = CmaInstance;
    type State = CmaState;

    fn name(&self) -> &str {
        "cma_step_size"
    }

    fn config_space(&self) -> &ConfigurationSpace {
        &self.space
    }

    fn observation_schema(&self) -> &Arc<ObservationSchema> {
        &self.schema
    }

    fn validate(&self, instance: &Instance<CmaInstance>) -> Result<()> {
        let p = &instance.payload;
        let bad = |message: &str| DacError::Instance {
            id: instance.id.clone(),
            message: message.into(),
        };
        if p.dim != self.params.dim || p.population != self.params.population {
            return Err(bad("dimension or population differs from the environment"));
        }
        if p.mean0.len() != p.dim || p.mean0.iter().any(|v| !v.is_finite()) {
            return Err(bad("mean0 must be a finite vector of length dim"));
        }
        if !(p.sigma0 > 0.0 && p.sigma0.is_finite()) {
            return Err(bad("sigma0 must be positive"));
        }
        if p.generations == 0 || p.batch == 0 {
            return Err(bad("generations and batch must be at least 1"));
        }
        Ok(())
    }

    fn init(&self, instance: &Instance<CmaInstance>, seed: u64) -> CmaState {
        let p = &instance.payload;
        let n = p.dim;
        let f0 = p.function.eval(&p.mean0);
        CmaState {
            mean: DVector::from_vec(p.mean0.clone()),
            sigma: p.sigma0,
            cov: DMatrix::identity(n, n),
            p_sigma: DVector::zeros(n),
            p_c: DVector::zeros(n),
            f_changes: VecDeque::with_capacity(HISTORY),
            sigmas: VecDeque::with_capacity(HISTORY),
            best_f: f0,
            generation: 0,
            prev_gen_best: f0,
            sqrt_cov: DMatrix::identity(n, n),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn step(&self, state: &CmaState, instance: &Instance<CmaInstance>, config: &Configuration) -> (CmaState, f64) {
        let par = &self.params;
        let func = instance.payload.function;
        let n = par.dim;
        let sigma = config.values[0]
            .as_real()
            .expect("sigma is real")
            .clamp(SIGMA_MIN, SIGMA_MAX);
        let mut s = state.clone();

        let mut samples: Vec<(f64, DVector<f64>, DVector<f64>)> = (0..par.population)
            .map(|_| {
                let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut s.rng));
                let y = &s.sqrt_cov * &z;
                let x = &s.mean + &y * sigma;
                (func.eval(x.as_slice()), z, y)
            })
            .collect();
        // stable: ties keep sampling order
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut z_w = DVector::zeros(n);
        let mut y_w = DVector::zeros(n);
        for (w, (_, z, y)) in par.weights.iter().zip(&samples) {
            z_w += z * *w;
            y_w += y * *w;
        }
        s.mean += &y_w * sigma;

        let cs = par.c_sigma;
        s.p_sigma = &s.p_sigma * (1.0 - cs) + &z_w * (cs * (2.0 - cs) * par.mu_eff).sqrt();
        let gens = (s.generation + 1) as f64;
        let norm_ps = s.p_sigma.norm() / (1.0 - (1.0 - cs).powf(2.0 * gens)).sqrt();
        let h_sigma = if norm_ps < (1.4 + 2.0 / (n as f64 + 1.0)) * par.chi_n { 1.0 } else { 0.0 };
        let cc = par.c_c;
        s.p_c = &s.p_c * (1.0 - cc) + &y_w * (h_sigma * (cc * (2.0 - cc) * par.mu_eff).sqrt());

        let mut rank_mu = DMatrix::zeros(n, n);
        for (w, (_, _, y)) in par.weights.iter().zip(&samples) {
            rank_mu += y * y.transpose() * *w;
        }
        let rank_one = &s.p_c * s.p_c.transpose() + &s.cov * ((1.0 - h_sigma) * cc * (2.0 - cc));
        let cov = &s.cov * (1.0 - par.c_1 - par.c_mu) + rank_one * par.c_1 + rank_mu * par.c_mu;
        let (cov, root) = repair_and_sqrt(&symmetrize(cov));
        s.cov = cov;
        s.sqrt_cov = root;

        let gen_best = samples[0].0;
        let change = (s.prev_gen_best - gen_best) / s.prev_gen_best.abs().max(1e-12);
        push_front(&mut s.f_changes, if change.is_finite() { change } else { 0.0 });
        push_front(&mut s.sigmas, sigma);
        s.prev_gen_best = gen_best;
        s.best_f = s.best_f.min(gen_best);
        s.sigma = sigma;
        s.generation += 1;
        let cost = s.best_f;
        (s, cost)
    }

    fn is_final(&self, state: &CmaState, instance: &Instance<CmaInstance>) -> bool {
        state.generation >= instance.payload.generations
    }

    fn observe(&self, state: &CmaState, _instance: &Instance<CmaInstance>) -> Result<Observation> {
        let mut v = Vec::with_capacity(2 + 2 * HISTORY);
        v.push(state.sigma);
        v.push(state.p_sigma.norm());
        for hist in [&state.f_changes, &state.sigmas] {
            v.extend(hist.iter().copied());
            v.extend(std::iter::repeat(0.0).take(HISTORY - hist.len()));
        }
        Observation::new(v, &self.schema)
    }
}

/// Log-linear policy that reproduces the CSA rule
/// `σ · exp((c_σ/d_σ)(‖p_σ‖/E‖N(0,I)‖ − 1))` from the observation.
pub fn csa_policy(env: &CmaEnv) -> DynamicPolicy {
    let par = env.params();
    let spec = PolicySpaceSpec::log_linear(
        env.config_space().clone(),
        env.observation_schema().names().to_vec(),
        vec![InputFeature::new(0, Transform::Log), InputFeature::new(1, Transform::Identity)],
    )
    .expect("valid CSA spec");
    let ratio = par.c_sigma / par.d_sigma;
    DynamicPolicy::new(Arc::new(spec), vec![-ratio, 1.0, ratio / par.chi_n]).expect("three parameters")
}

/// Negated win rate `−Σ_j Σ_k 1[f_π,j < f_CSA,k] / n²`: −1 when the policy wins
/// every pairing, 0 when it wins none.
pub fn cma_winrate_cost(policy_finals: &[f64], csa_finals: &[f64]) -> Result<f64> {
    let n = policy_finals.len();
    if n == 0 || csa_finals.len() != n {
        return Err(DacError::Argument("win rate needs two non-empty batches of equal size".into()));
    }
    let wins = policy_finals
        .iter()
        .map(|p| csa_finals.iter().filter(|c| p < c).count())
        .sum::<usize>();
    Ok(-(wins as f64) / (n * n) as f64)
}

/// Win rate below this (i.e. `−c ≥ 0.64`) is significant at n = 25.
pub const SIGNIFICANT_WIN_RATE: f64 = 0.64;

/// Trajectory-functional cost: a batch of policy runs against a batch of CSA runs.
/// CSA run `k` uses seed `derive_seed(batch_seed, [1, k])`.
#[derive(Debug, Clone)]
pub struct WinRateVsCsa {
    pub batch: usize,
    csa: DynamicPolicy,
}

impl WinRateVsCsa {
    pub fn new(env: &CmaEnv, batch: usize) -> Self {
        Self { batch, csa: csa_policy(env) }
    }

    pub fn csa_seed(batch_seed: u64, k: usize) -> u64 {
        derive_seed(batch_seed, &[1, k as u64])
    }

    /// Final best-so-far values of `batch` CSA runs.
    pub fn csa_finals(&self, env: &CmaEnv, instance: &Instance<CmaInstance>, cutoff: usize, batch_seed: u64) -> Result<Vec<f64>> {
        (0..self.batch)
            .map(|k| {
                let traj = execute_with(env, &mut &self.csa, instance, Self::csa_seed(batch_seed, k), cutoff)?;
                final_value(&traj)
            })
            .collect()
    }
}

fn final_value(traj: &Trajectory) -> Result<f64> {
    traj.last_cost()
        .ok_or_else(|| DacError::Argument("CMA-ES run ended before its first generation".into()))
}

impl BatchCost<CmaEnv> for WinRateVsCsa {
    fn batch_size(&self) -> usize {
        self.batch
    }

    fn extra_episodes(&self) -> u64 {
        self.batch as u64
    }

    fn evaluate(
        &self,
        algorithm: &CmaEnv,
        instance: &Instance<CmaInstance>,
        cutoff: usize,
        batch_seed: u64,
        runs: &[Trajectory],
    ) -> Result<BatchOutcome> {
        let policy_finals = runs.iter().map(final_value).collect::<Result<Vec<_>>>()?;
        let csa_finals = self.csa_finals(algorithm, instance, cutoff, batch_seed)?;
        Ok(BatchOutcome {
            cost: cma_winrate_cost(&policy_finals, &csa_finals)?,
            extra_episodes: self.batch as u64,
        })
    }
}

/// Policy seeds of the batch keyed by `batch_seed`, mirroring the scenario's layout.
pub fn policy_run_seed(batch_seed: u64, j: usize) -> u64 {
    batch_run_seed(batch_seed, j)
}
