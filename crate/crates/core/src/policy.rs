//! Dynamic configuration policies.
//!
//! Every representation exposes a flat real parameter vector `lambda`, so the
//! same optimizers (static configurators over `lambda`, black-box search,
//! gradient descent) apply to all of them. Raw outputs are mapped into the
//! configuration space by an output adapter that is total: any raw vector,
//! including NaN and infinities, yields a valid configuration.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dual::{Dual, Scalar};
use crate::error::{config_err, DacError, Result};
use crate::observation::Observation;
use crate::space::{Configuration, ConfigurationSpace, Domain, Value};

/// Floor used when taking the logarithm of a non-positive input.
const LOG_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PolicyKind {
    /// Raw outputs are stored directly in `lambda`.
    Constant,
    /// One constant block per discretization cell.
    Tabular { bins: Vec<Binning> },
    /// `exp(bias + w·φ(obs))` for numeric outputs, linear logits for categoricals.
    LogLinear,
    /// Feed-forward network with tanh hidden layers.
    Mlp { hidden: Vec<usize> },
}

/// Discretization of one observation feature: `edges.len() + 1` bins, a value
/// falls into the bin counting how many edges are `<=` it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub feature: usize,
    pub edges: Vec<f64>,
}

impl Binning {
    /// Unit-width bins centred on the integers `0..count`.
    pub fn integers(feature: usize, count: usize) -> Self {
        Self {
            feature,
            edges: (1..count).map(|k| k as f64 - 0.5).collect(),
        }
    }

    pub fn bin(&self, value: f64) -> usize {
        self.edges.partition_point(|e| *e <= value)
    }

    pub fn bins(&self) -> usize {
        self.edges.len() + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    #[default]
    Identity,
    /// `sign(v)·ln(1 + |v|)`
    Symlog,
    /// `ln(v)`, with non-positive inputs floored.
    Log,
}

impl Transform {
    fn apply<S: Scalar>(self, v: S) -> S {
        match self {
            Transform::Identity => v,
            Transform::Symlog => {
                if v.value() >= 0.0 {
                    (S::one() + v).ln()
                } else {
                    -(S::one() - v).ln()
                }
            }
            Transform::Log => {
                if v.value() > LOG_FLOOR {
                    v.ln()
                } else {
                    S::constant(LOG_FLOOR.ln())
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputFeature {
    pub index: usize,
    #[serde(default)]
    pub transform: Transform,
}

impl InputFeature {
    pub fn new(index: usize, transform: Transform) -> Self {
        Self { index, transform }
    }
}

/// How raw outputs map into numeric parameter values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum OutputMode {
    Direct,
    Exponential,
    /// `exp` for log-scale reals, identity otherwise.
    Natural,
}

/// Policy space Π: representation, observation contract and output adapter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySpaceSpec {
    pub kind: PolicyKind,
    /// Observation feature names the policy expects, in order.
    pub input_names: Vec<String>,
    /// Features fed to log-linear and mlp policies.
    #[serde(default)]
    pub inputs: Vec<InputFeature>,
    pub space: ConfigurationSpace,
}

impl PolicySpaceSpec {
    pub fn new(
        kind: PolicyKind,
        input_names: Vec<String>,
        inputs: Vec<InputFeature>,
        space: ConfigurationSpace,
    ) -> Result<Self> {
        let spec = Self {
            kind,
            input_names,
            inputs,
            space,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn constant(space: ConfigurationSpace, input_names: Vec<String>) -> Self {
        Self {
            kind: PolicyKind::Constant,
            input_names,
            inputs: Vec::new(),
            space,
        }
    }

    pub fn tabular(
        space: ConfigurationSpace,
        input_names: Vec<String>,
        bins: Vec<Binning>,
    ) -> Result<Self> {
        Self::new(PolicyKind::Tabular { bins }, input_names, Vec::new(), space)
    }

    pub fn log_linear(
        space: ConfigurationSpace,
        input_names: Vec<String>,
        inputs: Vec<InputFeature>,
    ) -> Result<Self> {
        Self::new(PolicyKind::LogLinear, input_names, inputs, space)
    }

    pub fn mlp(
        space: ConfigurationSpace,
        input_names: Vec<String>,
        inputs: Vec<InputFeature>,
        hidden: Vec<usize>,
    ) -> Result<Self> {
        Self::new(PolicyKind::Mlp { hidden }, input_names, inputs, space)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.input_names.len();
        for f in &self.inputs {
            if f.index >= n {
                return Err(config_err(format!(
                    "input feature {} out of range for {n} observation features",
                    f.index
                )));
            }
        }
        match &self.kind {
            PolicyKind::Tabular { bins } => {
                for b in bins {
                    if b.feature >= n {
                        return Err(config_err(format!("binning feature {} out of range", b.feature)));
                    }
                    if b.edges.iter().any(|e| !e.is_finite())
                        || b.edges.windows(2).any(|w| w[0] >= w[1])
                    {
                        return Err(config_err("bin edges must be finite and strictly increasing"));
                    }
                }
                if self.cell_count_u128() > u32::MAX as u128 {
                    return Err(config_err("tabular policy has too many cells"));
                }
            }
            PolicyKind::Mlp { hidden } => {
                if hidden.iter().any(|&h| h == 0) {
                    return Err(config_err("mlp hidden widths must be positive"));
                }
            }
            PolicyKind::Constant | PolicyKind::LogLinear => {}
        }
        if self.space.is_empty() {
            return Err(config_err("policy output space has no parameters"));
        }
        Ok(())
    }

    fn cell_count_u128(&self) -> u128 {
        match &self.kind {
            PolicyKind::Tabular { bins } => bins.iter().map(|b| b.bins() as u128).product(),
            _ => 1,
        }
    }

    /// Number of tabular cells (1 for non-tabular kinds).
    pub fn cell_count(&self) -> usize {
        self.cell_count_u128() as usize
    }

    /// Raw outputs per decision: one logit per category, one value per numeric parameter.
    pub fn output_width(&self) -> usize {
        self.space
            .params()
            .iter()
            .map(|p| match &p.domain {
                Domain::Categorical { values } => values.len(),
                _ => 1,
            })
            .sum()
    }

    fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.inputs.len()];
        if let PolicyKind::Mlp { hidden } = &self.kind {
            sizes.extend(hidden);
        }
        sizes.push(self.output_width());
        sizes
    }

    /// Length of the flat parameter vector.
    pub fn num_params(&self) -> usize {
        let w = self.output_width();
        match &self.kind {
            PolicyKind::Constant => w,
            PolicyKind::Tabular { .. } => self.cell_count() * w,
            PolicyKind::LogLinear => w * (1 + self.inputs.len()),
            PolicyKind::Mlp { .. } => self
                .layer_sizes()
                .windows(2)
                .map(|l| (l[0] + 1) * l[1])
                .sum(),
        }
    }

    fn output_mode(&self) -> OutputMode {
        match self.kind {
            PolicyKind::Constant | PolicyKind::Tabular { .. } => OutputMode::Direct,
            PolicyKind::LogLinear => OutputMode::Exponential,
            PolicyKind::Mlp { .. } => OutputMode::Natural,
        }
    }

    pub fn is_differentiable(&self) -> bool {
        !matches!(self.kind, PolicyKind::Tabular { .. })
            && self
                .space
                .params()
                .iter()
                .all(|p| matches!(p.domain, Domain::Real { .. }))
    }

    /// Checks that observations described by `names` can feed this policy.
    pub fn check_schema(&self, names: &[String]) -> Result<()> {
        if names != self.input_names.as_slice() {
            return Err(config_err(format!(
                "policy expects observation features {:?}, got {:?}",
                self.input_names, names
            )));
        }
        Ok(())
    }

    fn check_observation(&self, obs: &Observation) -> Result<()> {
        match &obs.schema {
            Some(schema) => self.check_schema(schema.names()),
            None if obs.len() == self.input_names.len() => Ok(()),
            None => Err(config_err(format!(
                "observation has {} features, policy expects {}",
                obs.len(),
                self.input_names.len()
            ))),
        }
    }

    /// Cell index of an observation under a tabular discretization.
    pub fn cell_of(&self, obs: &[f64]) -> usize {
        match &self.kind {
            PolicyKind::Tabular { bins } => bins
                .iter()
                .fold(0usize, |cell, b| cell * b.bins() + b.bin(obs[b.feature])),
            _ => 0,
        }
    }

    /// Raw output block that makes the direct adapter emit exactly `config`.
    pub fn encode_direct(&self, config: &Configuration) -> Result<Vec<f64>> {
        self.space.check(config)?;
        let mut raw = Vec::with_capacity(self.output_width());
        for (p, v) in self.space.params().iter().zip(&config.values) {
            match (&p.domain, v) {
                (Domain::Categorical { values }, Value::Categorical(i)) => {
                    raw.extend((0..values.len()).map(|j| if j == *i { 1.0 } else { 0.0 }));
                }
                (Domain::Real { .. }, Value::Real(x)) => raw.push(*x),
                (Domain::Integer { .. }, Value::Integer(k)) => raw.push(*k as f64),
                _ => unreachable!("checked above"),
            }
        }
        Ok(raw)
    }

    fn features<S: Scalar>(&self, obs: &[S]) -> Vec<S> {
        self.inputs
            .iter()
            .map(|f| f.transform.apply(obs[f.index]))
            .collect()
    }

    /// Raw outputs of smooth representations, generic over the scalar type.
    fn raw_outputs<S: Scalar>(&self, obs: &[S], lambda: &[S]) -> Vec<S> {
        let w = self.output_width();
        match &self.kind {
            PolicyKind::Constant => lambda.to_vec(),
            PolicyKind::Tabular { .. } => {
                let values: Vec<f64> = obs.iter().map(|v| v.value()).collect();
                let cell = self.cell_of(&values);
                lambda[cell * w..(cell + 1) * w].to_vec()
            }
            PolicyKind::LogLinear => {
                let phi = self.features(obs);
                let stride = 1 + phi.len();
                (0..w)
                    .map(|o| {
                        let row = &lambda[o * stride..(o + 1) * stride];
                        phi.iter()
                            .zip(&row[1..])
                            .fold(row[0], |acc, (x, wt)| acc + *x * *wt)
                    })
                    .collect()
            }
            PolicyKind::Mlp { .. } => {
                let sizes = self.layer_sizes();
                let mut act = self.features(obs);
                let mut offset = 0;
                let last = sizes.len() - 2;
                for (layer, dims) in sizes.windows(2).enumerate() {
                    let (n_in, n_out) = (dims[0], dims[1]);
                    let mut next = Vec::with_capacity(n_out);
                    for o in 0..n_out {
                        let row = &lambda[offset + o * (n_in + 1)..offset + (o + 1) * (n_in + 1)];
                        let z = act
                            .iter()
                            .zip(&row[1..])
                            .fold(row[0], |acc, (x, wt)| acc + *x * *wt);
                        next.push(if layer < last { z.tanh() } else { z });
                    }
                    offset += n_out * (n_in + 1);
                    act = next;
                }
                act
            }
        }
    }

    fn numeric<S: Scalar>(&self, raw: S, domain: &Domain) -> S {
        match (self.output_mode(), domain) {
            (OutputMode::Exponential, _) | (OutputMode::Natural, Domain::Real { log: true, .. }) => {
                // exp overflows to +inf, which the clamp maps onto the upper bound
                raw.clamp_to(-745.0, 710.0).exp()
            }
            _ => raw,
        }
    }

    fn adapt(&self, raw: &[f64]) -> Configuration {
        let mut values = Vec::with_capacity(self.space.len());
        let mut pos = 0;
        for p in self.space.params() {
            match &p.domain {
                Domain::Categorical { values: cats } => {
                    let logits = &raw[pos..pos + cats.len()];
                    pos += cats.len();
                    values.push(Value::Categorical(argmax(logits)));
                }
                Domain::Real { lower, upper, .. } => {
                    let v = self.numeric(raw[pos], &p.domain).clamp_to(*lower, *upper);
                    pos += 1;
                    values.push(Value::Real(v));
                }
                Domain::Integer { lower, upper } => {
                    let v = self.numeric(raw[pos], &p.domain);
                    pos += 1;
                    let k = if v.is_nan() {
                        *lower
                    } else {
                        v.round().clamp(*lower as f64, *upper as f64) as i64
                    };
                    values.push(Value::Integer(k));
                }
            }
        }
        Configuration::new(values)
    }
}

/// Index of the largest logit; NaN counts as -inf, ties go to the lowest index.
fn argmax(logits: &[f64]) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, &l) in logits.iter().enumerate() {
        if !l.is_nan() && l > best_val {
            best = i;
            best_val = l;
        }
    }
    best
}

/// A policy π_λ: a spec plus its parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicPolicy {
    pub spec: Arc<PolicySpaceSpec>,
    #[serde(with = "hex_floats")]
    pub lambda: Vec<f64>,
}

impl DynamicPolicy {
    pub fn new(spec: Arc<PolicySpaceSpec>, lambda: Vec<f64>) -> Result<Self> {
        if lambda.len() != spec.num_params() {
            return Err(config_err(format!(
                "policy needs {} parameters, got {}",
                spec.num_params(),
                lambda.len()
            )));
        }
        Ok(Self { spec, lambda })
    }

    pub fn zeros(spec: Arc<PolicySpaceSpec>) -> Self {
        let n = spec.num_params();
        Self {
            spec,
            lambda: vec![0.0; n],
        }
    }

    /// The constant policy π_θ.
    pub fn constant(
        space: &ConfigurationSpace,
        input_names: Vec<String>,
        config: &Configuration,
    ) -> Result<Self> {
        let spec = PolicySpaceSpec::constant(space.clone(), input_names);
        let lambda = spec.encode_direct(config)?;
        Ok(Self {
            spec: Arc::new(spec),
            lambda,
        })
    }

    /// Overwrites one tabular cell so that it emits `config`.
    pub fn set_cell(&mut self, cell: usize, config: &Configuration) -> Result<()> {
        if !matches!(self.spec.kind, PolicyKind::Tabular { .. }) {
            return Err(DacError::Unsupported("set_cell on a non-tabular policy".into()));
        }
        if cell >= self.spec.cell_count() {
            return Err(DacError::Argument(format!("cell {cell} out of range")));
        }
        let raw = self.spec.encode_direct(config)?;
        let w = raw.len();
        self.lambda[cell * w..(cell + 1) * w].copy_from_slice(&raw);
        Ok(())
    }

    /// θ ← π(s, i), evaluated on the observation only.
    pub fn act(&self, obs: &Observation) -> Result<Configuration> {
        self.spec.check_observation(obs)?;
        Ok(self.act_values(&obs.values))
    }

    /// [`Self::act`] without the schema check.
    pub fn act_values(&self, obs: &[f64]) -> Configuration {
        let raw = self.spec.raw_outputs(obs, &self.lambda);
        self.spec.adapt(&raw)
    }

    /// Real-valued outputs for generic scalars (e.g. [`Dual`]); `lambda` overrides
    /// the stored parameters so derivatives with respect to it can be seeded.
    pub fn act_real<S: Scalar>(&self, obs: &[S], lambda: &[S]) -> Result<Vec<S>> {
        if !self.spec.is_differentiable() {
            return Err(DacError::Unsupported(
                "differentiable evaluation needs a constant, log-linear or mlp policy over real parameters".into(),
            ));
        }
        if obs.len() != self.spec.input_names.len() || lambda.len() != self.lambda.len() {
            return Err(config_err("observation or parameter length mismatch"));
        }
        let raw = self.spec.raw_outputs(obs, lambda);
        Ok(self
            .spec
            .space
            .params()
            .iter()
            .zip(raw)
            .map(|(p, r)| match &p.domain {
                Domain::Real { lower, upper, .. } => {
                    self.spec.numeric(r, &p.domain).clamp_to(*lower, *upper)
                }
                _ => unreachable!("differentiable specs only have real parameters"),
            })
            .collect())
    }

    /// Output values with their directional derivative along `lambda_tangent`.
    pub fn act_dual(&self, obs: &[Dual], lambda_tangent: &[f64]) -> Result<Vec<Dual>> {
        if lambda_tangent.len() != self.lambda.len() {
            return Err(config_err("tangent length differs from parameter count"));
        }
        let lambda: Vec<Dual> = self
            .lambda
            .iter()
            .zip(lambda_tangent)
            .map(|(&l, &t)| Dual::new(l, t))
            .collect();
        self.act_real(obs, &lambda)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: DynamicPolicy =
            serde_json::from_str(text).map_err(|e| config_err(format!("policy json: {e}")))?;
        p.spec.validate()?;
        Self::new(p.spec, p.lambda)
    }
}

/// `f64` values stored as 16-digit hex bit patterns so they round-trip exactly.
mod hex_floats {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(values.iter().map(|v| format!("{:016x}", v.to_bits())))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let words = Vec::<String>::deserialize(d)?;
        words
            .iter()
            .map(|w| {
                u64::from_str_radix(w, 16)
                    .map(f64::from_bits)
                    .map_err(|e| D::Error::custom(format!("bad hex float `{w}`: {e}")))
            })
            .collect()
    }
}
