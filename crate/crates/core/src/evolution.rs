//! Second-order split-operator pseudospectral propagation of
//! `i d/dt psi = [p^2/2 + V(x)] psi`.
//!
//! One step is `e^{-i dt V/2} F^-1 e^{-i dt p^2/2} F e^{-i dt V/2}`, accurate
//! to `O(dt^3)` locally and `O(dt^2)` over a fixed time span.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Fourier, GridSpec, StateVector};
use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    Harmonic,
    CustomTable,
}

/// Real potential sampled on the grid, in units of `hbar omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    kind: PotentialKind,
    grid: GridSpec,
    values: Vec<f64>,
}

impl PotentialSpec {
    /// `V(x) = x^2 / 2`
    pub fn harmonic(grid: &GridSpec) -> Self {
        Self {
            kind: PotentialKind::Harmonic,
            grid: *grid,
            values: grid.positions().iter().map(|x| 0.5 * x * x).collect(),
        }
    }

    pub fn zero(grid: &GridSpec) -> Self {
        Self {
            kind: PotentialKind::CustomTable,
            grid: *grid,
            values: vec![0.0; grid.points()],
        }
    }

    pub fn from_values(grid: &GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.points() {
            return Err(Error::InvalidArgument(format!(
                "potential has {} samples, grid has {} points",
                values.len(),
                grid.points()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("potential values must be finite".into()));
        }
        Ok(Self {
            kind: PotentialKind::CustomTable,
            grid: *grid,
            values,
        })
    }

    /// Interpolates an `(x, V)` table onto the grid; points outside the table
    /// take the nearest tabulated value.
    pub fn from_table(grid: &GridSpec, table: &Table) -> Result<Self> {
        let rows = table.rows();
        let (lo, hi) = (rows[0][1], rows[rows.len() - 1][1]);
        let values = grid
            .positions()
            .iter()
            .map(|&x| {
                if x < table.first() {
                    lo
                } else if x > table.last() {
                    hi
                } else {
                    table.interpolate(1, x, 0.0)
                }
            })
            .collect();
        Self::from_values(grid, values)
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Split-operator stepper with precomputed phase tables.
#[derive(Debug, Clone)]
pub struct Propagator {
    grid: GridSpec,
    potential: PotentialSpec,
    dt: f64,
    half_kick: Vec<Complex64>,
    kinetic: Vec<Complex64>,
    fourier: Fourier,
}

impl Propagator {
    pub fn new(potential: &PotentialSpec, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        let grid = *potential.grid();
        let half_kick = potential
            .values()
            .iter()
            .map(|v| Complex64::from_polar(1.0, -0.5 * dt * v))
            .collect();
        let kinetic = grid
            .momenta()
            .iter()
            .map(|p| Complex64::from_polar(1.0, -0.5 * dt * p * p))
            .collect();
        Ok(Self {
            grid,
            potential: potential.clone(),
            dt,
            half_kick,
            kinetic,
            fourier: Fourier::for_grid(&grid),
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn half_kick(&self) -> &[Complex64] {
        &self.half_kick
    }

    pub fn kinetic_phases(&self) -> &[Complex64] {
        &self.kinetic
    }

    pub fn scratch(&self) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); self.fourier.scratch_len()]
    }

    pub fn step(&self, s: &StateVector) -> Result<StateVector> {
        let mut out = s.clone();
        let mut scratch = self.scratch();
        self.step_in_place(&mut out, &mut scratch)?;
        Ok(out)
    }

    /// Advances `s` by one `dt`. `scratch` must come from [`Propagator::scratch`].
    pub fn step_in_place(&self, s: &mut StateVector, scratch: &mut [Complex64]) -> Result<()> {
        if s.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let inv_n = 1.0 / self.grid.points() as f64;
        let buf = s.amplitudes_mut();
        for (a, k) in buf.iter_mut().zip(&self.half_kick) {
            *a *= k;
        }
        self.fourier.forward_raw(buf, scratch);
        for (a, k) in buf.iter_mut().zip(&self.kinetic) {
            *a *= k * inv_n;
        }
        self.fourier.inverse_raw(buf, scratch);
        for (a, k) in buf.iter_mut().zip(&self.half_kick) {
            *a *= k;
        }
        Ok(())
    }

    /// `<s|H|s> / <s|s>` with the spectral kinetic operator.
    pub fn energy(&self, s: &StateVector) -> Result<f64> {
        if s.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let norm = s.norm_sqr();
        let potential: f64 = s
            .amplitudes()
            .iter()
            .zip(self.potential.values())
            .map(|(a, v)| a.norm_sqr() * v)
            .sum::<f64>()
            * self.grid.spacing();
        let f = self.fourier.forward(s);
        let kinetic: f64 = f
            .amplitudes()
            .iter()
            .zip(self.grid.momenta())
            .map(|(a, p)| 0.5 * p * p * a.norm_sqr())
            .sum::<f64>()
            * self.grid.spacing();
        Ok((potential + kinetic) / norm)
    }
}

/// Propagates `s0` for `steps` steps, calling `on_step(i, state(t_i))` for
/// `i = 0..=steps` (the initial state included).
pub fn evolve_trajectory(
    prop: &Propagator,
    s0: &StateVector,
    steps: usize,
    mut on_step: impl FnMut(usize, &StateVector),
) -> Result<StateVector> {
    if s0.grid() != prop.grid() {
        return Err(Error::GridMismatch);
    }
    let mut s = s0.clone();
    let mut scratch = prop.scratch();
    on_step(0, &s);
    for i in 1..=steps {
        prop.step_in_place(&mut s, &mut scratch)?;
        on_step(i, &s);
    }
    Ok(s)
}
