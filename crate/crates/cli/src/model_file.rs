//! The JSON model file: schema version 1.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "m": 2,
//!   "beta": [1.0, 2.0],
//!   "gamma": [0.5, 0.5],
//!   "Q": [[-1.0, 1.0], [2.0, -2.0]],
//!   "R": [[-0.5, 0.5], [1.0, -1.0]],
//!   "pi": [0.6666666666666666, 0.3333333333333333]
//! }
//! ```
//!
//! `Q`, `R`, and `pi` are optional; at most one of `pi` and `R` may define
//! the susceptible distribution.

use epimm_core::model::{self, GeneratorMatrix, ModelParams, SimplexPoint};
use ndarray::Array2;
use serde::Deserialize;

use crate::CliError;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModelFile {
    schema_version: u32,
    m: usize,
    beta: Vec<f64>,
    gamma: Vec<f64>,
    #[serde(rename = "Q")]
    q: Option<Vec<Vec<f64>>>,
    #[serde(rename = "R")]
    r: Option<Vec<Vec<f64>>>,
    pi: Option<Vec<f64>>,
}

/// Validated model inputs.
pub struct ModelFile {
    pub params: ModelParams<f64>,
    pub q: Option<GeneratorMatrix<f64>>,
    pub r: Option<GeneratorMatrix<f64>>,
    pub pi: Option<SimplexPoint<f64>>,
}

fn validation(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn parse_matrix(rows: &[Vec<f64>], m: usize, name: &str) -> Result<GeneratorMatrix<f64>, CliError> {
    if rows.len() != m || rows.iter().any(|row| row.len() != m) {
        return Err(CliError::Validation(format!(
            "{name} must be an {m}x{m} matrix"
        )));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    let rates = Array2::from_shape_vec((m, m), flat).expect("shape checked above");
    GeneratorMatrix::new(rates)
        .map_err(|e| CliError::Validation(format!("{name} is not a valid generator: {e}")))
}

impl ModelFile {
    pub fn load(path: &str) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {path}: {e}")))?;
        let raw: RawModelFile = serde_json::from_str(&text).map_err(validation)?;
        if raw.schema_version != 1 {
            return Err(CliError::Validation(format!(
                "unsupported schema_version {}",
                raw.schema_version
            )));
        }
        if raw.beta.len() != raw.m || raw.gamma.len() != raw.m {
            return Err(CliError::Validation(format!(
                "beta and gamma must each have m = {} entries",
                raw.m
            )));
        }
        if raw.pi.is_some() && raw.r.is_some() {
            return Err(CliError::Validation(
                "pi and R both present: exactly one may determine the susceptible distribution"
                    .into(),
            ));
        }
        let params = ModelParams::new(raw.beta, raw.gamma).map_err(validation)?;
        let q = raw
            .q
            .as_deref()
            .map(|rows| parse_matrix(rows, raw.m, "Q"))
            .transpose()?;
        let r = raw
            .r
            .as_deref()
            .map(|rows| parse_matrix(rows, raw.m, "R"))
            .transpose()?;
        let pi = raw
            .pi
            .map(|probs| {
                if probs.len() != raw.m {
                    return Err(CliError::Validation(format!(
                        "pi must have m = {} entries",
                        raw.m
                    )));
                }
                SimplexPoint::new(probs).map_err(validation)
            })
            .transpose()?;
        Ok(Self { params, q, r, pi })
    }

    /// The susceptible equilibrium distribution: `pi` as given, or the
    /// stationary law of `R`.
    pub fn susceptible_distribution(&self) -> Result<SimplexPoint<f64>, CliError> {
        if let Some(pi) = &self.pi {
            return Ok(pi.clone());
        }
        if let Some(r) = &self.r {
            return model::stationary_distribution(r).map_err(validation);
        }
        Err(CliError::MissingInput(
            "the model file provides neither pi nor R".into(),
        ))
    }

    pub fn infective_migration(&self) -> Result<&GeneratorMatrix<f64>, CliError> {
        self.q
            .as_ref()
            .ok_or_else(|| CliError::MissingInput("the model file does not provide Q".into()))
    }
}
