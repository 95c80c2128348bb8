//! Controlling the learning rate of gradient descent on univariate polynomials.
//!
//! The rollout is written once over [`Scalar`], so the same code yields plain
//! costs (`f64`) and forward-mode derivatives of the cost ([`Dual`]).

use std::sync::Arc;

use dac_core::{
    Configuration, ConfigurationSpace, DacError, Dual, DynamicPolicy, Instance, Observation,
    ObservationSchema, ParameterSpec, Result, Scalar, TargetAlgorithm, Value,
};
use serde::{Deserialize, Serialize};

pub const ETA_MIN: f64 = 1e-6;
pub const ETA_MAX: f64 = 10.0;
pub const MAX_DEGREE: usize = 6;
/// Iterates beyond this magnitude count as divergence.
pub const DIVERGENCE_BOUND: f64 = 1e12;

const GRID_POINTS: usize = 20_001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ToyGdRecord {
    coefficients: Vec<f64>,
    x0: f64,
    horizon: usize,
}

/// `f(x) = Σ_j c_j x^j` with an even-degree, positive leading term.
///
/// The cost offset `f_min` is computed on construction and is never read from files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ToyGdRecord", into = "ToyGdRecord")]
pub struct ToyGdInstance {
    coefficients: Vec<f64>,
    x0: f64,
    horizon: usize,
    f_min: f64,
}

impl TryFrom<ToyGdRecord> for ToyGdInstance {
    type Error = DacError;

    fn try_from(r: ToyGdRecord) -> Result<Self> {
        ToyGdInstance::new(r.coefficients, r.x0, r.horizon)
    }
}

impl From<ToyGdInstance> for ToyGdRecord {
    fn from(i: ToyGdInstance) -> Self {
        ToyGdRecord {
            coefficients: i.coefficients,
            x0: i.x0,
            horizon: i.horizon,
        }
    }
}

impl ToyGdInstance {
    pub fn new(coefficients: Vec<f64>, x0: f64, horizon: usize) -> Result<Self> {
        let mut coefficients = coefficients;
        while coefficients.len() > 1 && coefficients.last() == Some(&0.0) {
            coefficients.pop();
        }
        let degree = coefficients.len().saturating_sub(1);
        if coefficients.iter().any(|c| !c.is_finite()) || !x0.is_finite() {
            return Err(DacError::Argument("polynomial coefficients and x0 must be finite".into()));
        }
        if degree < 2 || degree > MAX_DEGREE || degree % 2 == 1 || coefficients[degree] <= 0.0 {
            return Err(DacError::Argument(format!(
                "polynomial must have even degree in 2..={MAX_DEGREE} and a positive leading coefficient"
            )));
        }
        if horizon == 0 {
            return Err(DacError::Argument("horizon must be at least 1".into()));
        }
        let lowest = global_minimum(&coefficients);
        Ok(Self {
            coefficients,
            x0,
            horizon,
            f_min: lowest - 1e-9 * (1.0 + lowest.abs()),
        })
    }

    /// `a (x - b)^2`.
    pub fn quadratic(a: f64, b: f64, x0: f64, horizon: usize) -> Result<Self> {
        Self::new(vec![a * b * b, -2.0 * a * b, a], x0, horizon)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Lower bound subtracted from `f` so that step costs are non-negative.
    pub fn f_min(&self) -> f64 {
        self.f_min
    }

    pub fn f<S: Scalar>(&self, x: S) -> S {
        horner(&self.coefficients, x)
    }

    pub fn df<S: Scalar>(&self, x: S) -> S {
        let n = self.coefficients.len();
        let mut acc = S::zero();
        for j in (1..n).rev() {
            acc = acc * x + S::constant(self.coefficients[j] * j as f64);
        }
        acc
    }
}

fn horner<S: Scalar>(coefficients: &[f64], x: S) -> S {
    coefficients
        .iter()
        .rev()
        .fold(S::zero(), |acc, &c| acc * x + S::constant(c))
}

/// Minimum of the polynomial: dense grid over a Cauchy bound on the critical
/// points, then Newton refinement of `f'` around the best grid cell.
fn global_minimum(c: &[f64]) -> f64 {
    let degree = c.len() - 1;
    let lead = c[degree] * degree as f64;
    let radius = 1.0
        + (1..degree)
            .map(|j| (c[j] * j as f64 / lead).abs())
            .fold(0.0, f64::max);
    let h = 2.0 * radius / (GRID_POINTS - 1) as f64;
    let f = |x: f64| horner(c, x);
    let (mut best_x, mut best_f) = (-radius, f(-radius));
    for k in 1..GRID_POINTS {
        let x = -radius + k as f64 * h;
        let v = f(x);
        if v < best_f {
            best_x = x;
            best_f = v;
        }
    }
    let deriv: Vec<f64> = (1..=degree).map(|j| c[j] * j as f64).collect();
    let second: Vec<f64> = (1..degree).map(|j| deriv[j] * j as f64).collect();
    let mut x = best_x;
    for _ in 0..60 {
        let g = horner(&deriv, x);
        let hess = horner(&second, x);
        if hess <= 0.0 {
            break;
        }
        let next = x - g / hess;
        if !next.is_finite() || (next - best_x).abs() > h {
            break;
        }
        x = next;
        best_f = best_f.min(f(x));
    }
    best_f
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyGdState<S = f64> {
    pub x: S,
    pub prev_eta: S,
    pub t: usize,
    /// Cost charged on every remaining step once the iterate diverged.
    pub truncated: Option<S>,
    pub last_cost: S,
}

/// One gradient step under learning rate `eta`; returns the successor and its cost.
pub fn gd_step<S: Scalar>(instance: &ToyGdInstance, state: &ToyGdState<S>, eta: S) -> (ToyGdState<S>, S) {
    if let Some(frozen) = state.truncated {
        let next = ToyGdState {
            prev_eta: eta,
            t: state.t + 1,
            ..state.clone()
        };
        return (next, frozen);
    }
    let x = state.x - eta * instance.df(state.x);
    let fx = instance.f(x);
    let diverged = !x.value().is_finite()
        || x.value().abs() > DIVERGENCE_BOUND
        || !fx.value().is_finite();
    if diverged {
        let frozen = state.last_cost;
        let next = ToyGdState {
            x: state.x,
            prev_eta: eta,
            t: state.t + 1,
            truncated: Some(frozen),
            last_cost: frozen,
        };
        return (next, frozen);
    }
    let cost = fx - S::constant(instance.f_min);
    let next = ToyGdState {
        x,
        prev_eta: eta,
        t: state.t + 1,
        truncated: None,
        last_cost: cost,
    };
    (next, cost)
}

pub fn initial_state<S: Scalar>(instance: &ToyGdInstance) -> ToyGdState<S> {
    let x = S::constant(instance.x0);
    ToyGdState {
        x,
        prev_eta: S::zero(),
        t: 0,
        truncated: None,
        last_cost: instance.f(x) - S::constant(instance.f_min),
    }
}

pub fn observation_values<S: Scalar>(instance: &ToyGdInstance, state: &ToyGdState<S>) -> [S; 5] {
    [
        state.x,
        instance.f(state.x),
        instance.df(state.x),
        state.prev_eta,
        S::constant(state.t as f64),
    ]
}

#[derive(Debug, Clone)]
pub struct ToyGdEnv {
    space: ConfigurationSpace,
    schema: Arc<ObservationSchema>,
}

impl Default for ToyGdEnv {
    fn default() -> Self {
        Self::new()
    }
}

impl ToyGdEnv {
    pub fn new() -> Self {
        Self {
            space: ConfigurationSpace::new(vec![ParameterSpec::real("eta", ETA_MIN, ETA_MAX, true)])
                .expect("valid learning-rate domain"),
            schema: ObservationSchema::new(["x", "f", "df", "prev_eta", "t"]),
        }
    }

    pub fn eta_config(eta: f64) -> Configuration {
        Configuration::single(Value::Real(eta))
    }
}

impl TargetAlgorithm for ToyGdEnv {
    type Payload = ToyGdInstance;
    type State = ToyGdState;

    fn name(&self) -> &str {
        "toygd"
    }

    fn config_space(&self) -> &ConfigurationSpace {
        &self.space
    }

    fn observation_schema(&self) -> &Arc<ObservationSchema> {
        &self.schema
    }

    fn init(&self, instance: &Instance<ToyGdInstance>, _seed: u64) -> ToyGdState {
        initial_state(&instance.payload)
    }

    fn step(&self, state: &ToyGdState, instance: &Instance<ToyGdInstance>, config: &Configuration) -> (ToyGdState, f64) {
        let eta = config.values[0].as_real().expect("eta is real");
        gd_step(&instance.payload, state, eta)
    }

    fn is_final(&self, _state: &ToyGdState, _instance: &Instance<ToyGdInstance>) -> bool {
        false
    }

    fn observe(&self, state: &ToyGdState, instance: &Instance<ToyGdInstance>) -> Result<Observation> {
        Observation::new(observation_values(&instance.payload, state).to_vec(), &self.schema)
    }

    fn is_differentiable(&self) -> bool {
        true
    }

    fn differentiable_cost(
        &self,
        instance: &Instance<ToyGdInstance>,
        policy: &DynamicPolicy,
        lambda: &[Dual],
        _run_seed: u64,
        cutoff: usize,
    ) -> Result<Dual> {
        let p = &instance.payload;
        let mut state = initial_state::<Dual>(p);
        let mut total = Dual::constant(self.init_cost(instance));
        for _ in 0..cutoff {
            let obs = observation_values(p, &state);
            let eta = policy.act_real(&obs, lambda)?[0];
            let (next, cost) = gd_step(p, &state, eta);
            total += cost;
            state = next;
        }
        Ok(total)
    }
}
