use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid on `[-L/2, L/2)` with `N` points (oscillator natural units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    length: f64,
    points: usize,
}

impl GridSpec {
    pub fn new(length: f64, points: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        if points < 4 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "point count must be a power of two >= 4, got {points}"
            )));
        }
        Ok(Self { length, points })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.points as f64
    }

    pub fn position(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.spacing()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.position(j)).collect()
    }

    /// Momentum of DFT bin `k` in standard ordering; bin `N/2` is the Nyquist point `-pi/dx`.
    pub fn momentum(&self, k: usize) -> f64 {
        let n = self.points as i64;
        let k = k as i64;
        let signed = if k < n / 2 { k } else { k - n };
        2.0 * PI * signed as f64 / self.length
    }

    pub fn momenta(&self) -> Vec<f64> {
        (0..self.points).map(|k| self.momentum(k)).collect()
    }

    pub fn max_momentum(&self) -> f64 {
        PI / self.spacing()
    }
}
