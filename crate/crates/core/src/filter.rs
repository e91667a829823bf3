//! Classical reference implementation of the spectral filter
//! `Psi_rho = sum_i B_i Psi_trial(t_i)`, `B_i = u_i w(t_i) e^{i E_rho t_i} / Nt`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{evolve_trajectory, PotentialSpec, Propagator};
use crate::numerics::{EigenSolution, GridSpec, StateVector};
use crate::table::Table;
use crate::windows::Window;

pub use crate::quadrature::{QuadratureKind, QuadratureRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialKind {
    Cos2,
    CustomTable,
}

/// Recipe for the initial trial state.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    kind: TrialKind,
    width: f64,
    table: Option<Table>,
}

impl TrialSpec {
    /// `cos^2(pi x / 2l)` on `[-l, l]`, zero elsewhere.
    pub fn cos2(width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidArgument(format!("trial width must be positive, got {width}")));
        }
        Ok(Self {
            kind: TrialKind::Cos2,
            width,
            table: None,
        })
    }

    /// Columns `x, re[, im]`, interpolated linearly and zero outside the table.
    pub fn from_table(table: Table) -> Result<Self> {
        let width = table.first().abs().max(table.last().abs());
        Ok(Self {
            kind: TrialKind::CustomTable,
            width,
            table: Some(table),
        })
    }

    pub fn kind(&self) -> TrialKind {
        self.kind
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Samples the trial on `grid` and normalizes it numerically.
    pub fn build(&self, grid: &GridSpec) -> Result<StateVector> {
        let raw = match (&self.kind, &self.table) {
            (TrialKind::Cos2, _) => {
                let l = self.width;
                StateVector::from_fn(*grid, |x| {
                    if x.abs() <= l {
                        Complex64::new((PI * x / (2.0 * l)).cos().powi(2), 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
            }
            (TrialKind::CustomTable, Some(t)) => StateVector::from_fn(*grid, |x| {
                let re = t.interpolate(1, x, 0.0);
                let im = if t.columns() > 2 { t.interpolate(2, x, 0.0) } else { 0.0 };
                Complex64::new(re, im)
            }),
            (TrialKind::CustomTable, None) => {
                return Err(Error::InvalidArgument("custom trial without a table".into()))
            }
        };
        raw.normalized()
    }
}

/// Every parameter of one filtering run.
#[derive(Debug, Clone)]
pub struct FilterPlan {
    grid: GridSpec,
    potential: PotentialSpec,
    trial: TrialSpec,
    target_energy: f64,
    final_time: f64,
    window: Window,
    quadrature: QuadratureRule,
}

impl FilterPlan {
    pub fn new(
        potential: PotentialSpec,
        trial: TrialSpec,
        target_energy: f64,
        final_time: f64,
        window: Window,
        quadrature: QuadratureRule,
    ) -> Result<Self> {
        if !(final_time.is_finite() && final_time > 0.0) {
            return Err(Error::InvalidArgument(format!("final time must be positive, got {final_time}")));
        }
        if !target_energy.is_finite() {
            return Err(Error::InvalidArgument("target energy must be finite".into()));
        }
        if window.steps() != quadrature.steps() {
            return Err(Error::InvalidArgument(format!(
                "window has {} steps, quadrature has {}",
                window.steps(),
                quadrature.steps()
            )));
        }
        let plan = Self {
            grid: *potential.grid(),
            potential,
            trial,
            target_energy,
            final_time,
            window,
            quadrature,
        };
        let limit = 1.0 / plan.steps() as f64;
        for i in 0..=plan.steps() {
            let b = plan.coefficient(i)?.norm();
            if b > limit * (1.0 + 1e-12) {
                return Err(Error::InvalidArgument(format!(
                    "|B_{i}| = {b} exceeds 1/Nt; quadrature weight times window must stay <= 1"
                )));
            }
        }
        Ok(plan)
    }

    /// Trapezoidal plan with a freshly built window of the same kind.
    pub fn with_steps(&self, steps: usize) -> Result<Self> {
        let quadrature = match self.quadrature.kind() {
            QuadratureKind::Trapezoidal => QuadratureRule::trapezoidal(steps)?,
            QuadratureKind::Custom => {
                return Err(Error::InvalidArgument(
                    "cannot resample a custom quadrature rule".into(),
                ))
            }
        };
        Self::new(
            self.potential.clone(),
            self.trial.clone(),
            self.target_energy,
            self.final_time,
            self.window.resampled(steps)?,
            quadrature,
        )
    }

    pub fn with_window(&self, window: Window) -> Result<Self> {
        Self::new(
            self.potential.clone(),
            self.trial.clone(),
            self.target_energy,
            self.final_time,
            window,
            self.quadrature.clone(),
        )
    }

    pub fn with_target_energy(&self, target_energy: f64) -> Result<Self> {
        Self::new(
            self.potential.clone(),
            self.trial.clone(),
            target_energy,
            self.final_time,
            self.window.clone(),
            self.quadrature.clone(),
        )
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    pub fn trial(&self) -> &TrialSpec {
        &self.trial
    }

    pub fn target_energy(&self) -> f64 {
        self.target_energy
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn steps(&self) -> usize {
        self.window.steps()
    }

    pub fn dt(&self) -> f64 {
        self.final_time / self.steps() as f64
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quadrature
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt()
    }

    /// `B_i = u_i w(t_i) e^{i E_rho t_i} / Nt`
    pub fn coefficient(&self, i: usize) -> Result<Complex64> {
        let w = self.window.value(i)?;
        let u = self.quadrature.weight(i);
        let t = self.time(i);
        Ok(Complex64::from_polar(u * w / self.steps() as f64, self.target_energy * t))
    }

    pub fn coefficients(&self) -> Vec<Complex64> {
        (0..=self.steps())
            .map(|i| self.coefficient(i).expect("index within range"))
            .collect()
    }

    pub fn propagator(&self) -> Result<Propagator> {
        Propagator::new(&self.potential, self.dt())
    }

    pub fn trial_state(&self) -> Result<StateVector> {
        self.trial.build(&self.grid)
    }
}

#[derive(Debug, Clone)]
pub struct FilterOutput {
    /// The accumulated sum `Psi_rho` before normalization.
    pub unnormalized: StateVector,
    pub normalized: StateVector,
    /// `<Psi_rho|Psi_rho>`
    pub norm_sqr: f64,
}

/// Filters the plan's trial state along a single propagated trajectory.
pub fn classical_filter(plan: &FilterPlan) -> Result<FilterOutput> {
    let trial = plan.trial_state()?;
    filter_state(plan, &plan.propagator()?, &trial)
}

/// Filters an arbitrary initial state (not necessarily normalized) with the plan's coefficients.
pub fn filter_state(plan: &FilterPlan, prop: &Propagator, initial: &StateVector) -> Result<FilterOutput> {
    let coeffs = plan.coefficients();
    let mut acc = StateVector::zeros(*initial.grid());
    let mut failure = None;
    evolve_trajectory(prop, initial, plan.steps(), |i, s| {
        if let Err(e) = acc.add_scaled(coeffs[i], s) {
            failure.get_or_insert(e);
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let norm_sqr = acc.norm_sqr();
    let normalized = acc.normalized()?;
    Ok(FilterOutput {
        unnormalized: acc,
        normalized,
        norm_sqr,
    })
}

/// `a_m = <phi_m|Psi_trial(0)>` for each stored eigenstate.
pub fn mode_amplitudes(trial: &StateVector, eig: &EigenSolution) -> Result<Vec<Complex64>> {
    eig.states().iter().map(|phi| phi.inner(trial)).collect()
}

/// The oracle eigenstate with its global phase chosen so that its overlap
/// with `trial` is real and positive.
pub fn reference_state(eig: &EigenSolution, index: usize, trial: &StateVector) -> Result<StateVector> {
    let phi = eig.state(index);
    let a = phi.inner(trial)?;
    if a.norm() == 0.0 {
        return Err(Error::UndefinedOverlap);
    }
    Ok(phi.scaled(a / a.norm()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterError {
    /// `||psi_filtered - phi||^2`, both normalized, `phi` phased against the trial.
    pub squared: f64,
    /// `min_theta ||e^{i theta} psi_filtered - phi||`
    pub phase_aligned: f64,
}

pub fn filter_error(filtered: &StateVector, reference: &StateVector) -> Result<FilterError> {
    let f = filtered.normalized()?;
    let r = reference.normalized()?;
    let squared = f.sub(&r)?.norm_sqr();
    let phase_aligned = f.phase_aligned_to(&r)?.distance(&r)?;
    Ok(FilterError {
        squared,
        phase_aligned,
    })
}
