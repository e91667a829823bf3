use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureKind {
    Trapezoidal,
    Custom,
}

/// Weights `u_0..=u_Nt` such that `(T/Nt) sum_i u_i f(t_i)` approximates `int_0^T f`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    kind: QuadratureKind,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// `u_0 = u_Nt = 1/2`, interior weights 1.
    pub fn trapezoidal(steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidArgument("quadrature needs at least one step".into()));
        }
        let mut weights = vec![1.0; steps + 1];
        weights[0] = 0.5;
        weights[steps] = 0.5;
        Ok(Self {
            kind: QuadratureKind::Trapezoidal,
            weights,
        })
    }

    pub fn custom(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::InvalidArgument("quadrature needs at least two nodes".into()));
        }
        if weights.iter().any(|u| !(u.is_finite() && *u >= 0.0)) {
            return Err(Error::InvalidArgument("quadrature weights must be finite and >= 0".into()));
        }
        let steps = (weights.len() - 1) as f64;
        let sum: f64 = weights.iter().sum();
        if (sum - steps).abs() > 1e-9 * steps {
            return Err(Error::InvalidArgument(format!(
                "quadrature weights must sum to Nt = {steps}, got {sum}"
            )));
        }
        Ok(Self {
            kind: QuadratureKind::Custom,
            weights,
        })
    }

    pub fn kind(&self) -> QuadratureKind {
        self.kind
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn steps(&self) -> usize {
        self.weights.len() - 1
    }
}
