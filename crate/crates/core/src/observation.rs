use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};

/// Ordered feature names describing an observation vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObservationSchema {
    names: Vec<String>,
}

impl ObservationSchema {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Arc<Self> {
        Arc::new(Self {
            names: names.into_iter().map(Into::into).collect(),
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// What a policy is allowed to see of the algorithm state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub values: Vec<f64>,
    #[serde(skip)]
    pub schema: Option<Arc<ObservationSchema>>,
}

impl Observation {
    /// Builds an observation, checking length and finiteness against `schema`.
    pub fn new(values: Vec<f64>, schema: &Arc<ObservationSchema>) -> Result<Self> {
        if values.len() != schema.len() {
            return Err(config_err(format!(
                "observation has {} values, schema declares {}",
                values.len(),
                schema.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(config_err(format!(
                "observation feature `{}` is not finite ({})",
                schema.names()[i],
                values[i]
            )));
        }
        Ok(Self {
            values,
            schema: Some(Arc::clone(schema)),
        })
    }

    /// Observation without a schema attached; used by tests and synthetic scenarios.
    pub fn raw(values: Vec<f64>) -> Self {
        Self { values, schema: None }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
