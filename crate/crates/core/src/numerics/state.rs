use num_complex::Complex64;

use super::GridSpec;
use crate::error::{Error, Result};

/// Complex amplitudes sampled on a [`GridSpec`]. Norms carry the `dx` measure.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    grid: GridSpec,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn new(grid: GridSpec, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != grid.points() {
            return Err(Error::InvalidArgument(format!(
                "state has {} amplitudes, grid has {} points",
                amps.len(),
                grid.points()
            )));
        }
        if amps.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::NumericalFailure("non-finite amplitude".into()));
        }
        Ok(Self { grid, amps })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            amps: vec![Complex64::new(0.0, 0.0); grid.points()],
        }
    }

    /// Samples `f(x_j)` at every grid point.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> Complex64) -> Self {
        let amps = (0..grid.points()).map(|j| f(grid.position(j))).collect();
        Self { grid, amps }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::NumericalFailure(format!("cannot normalize state with norm {n}")));
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            grid: self.grid,
            amps: self.amps.iter().map(|a| a * factor).collect(),
        }
    }

    pub fn scale_in_place(&mut self, factor: Complex64) {
        self.amps.iter_mut().for_each(|a| *a *= factor);
    }

    /// `self += factor * other`
    pub fn add_scaled(&mut self, factor: Complex64, other: &StateVector) -> Result<()> {
        self.check_grid(other)?;
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += factor * b;
        }
        Ok(())
    }

    pub fn sub(&self, other: &StateVector) -> Result<Self> {
        let mut out = self.clone();
        out.add_scaled(Complex64::new(-1.0, 0.0), other)?;
        Ok(out)
    }

    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        inner_product(self, other)
    }

    pub fn distance(&self, other: &StateVector) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> Result<f64> {
        self.check_grid(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Rotates the global phase of `self` to maximize overlap with `reference`.
    pub fn phase_aligned_to(&self, reference: &StateVector) -> Result<Self> {
        let ov = inner_product(self, reference)?;
        if ov.norm() == 0.0 {
            return Ok(self.clone());
        }
        Ok(self.scaled(ov / ov.norm()))
    }

    pub(crate) fn check_grid(&self, other: &StateVector) -> Result<()> {
        if self.grid != other.grid || self.amps.len() != other.amps.len() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

/// Grid quadrature `<a|b> = sum conj(a_j) b_j dx`.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    a.check_grid(b)?;
    let s: Complex64 = a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum();
    Ok(s * a.grid.spacing())
}
