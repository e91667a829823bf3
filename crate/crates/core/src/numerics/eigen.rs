use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::{GridSpec, StateVector};
use crate::error::{Error, Result};
use crate::evolution::PotentialSpec;

/// Lowest eigenpairs of the grid Hamiltonian, ascending in energy.
///
/// States are normalized with the `dx` measure and their global sign is fixed
/// so that the largest-magnitude amplitude is real and positive.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    energies: Vec<f64>,
    states: Vec<StateVector>,
}

impl EigenSolution {
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn energy(&self, m: usize) -> f64 {
        self.energies[m]
    }

    pub fn state(&self, m: usize) -> &StateVector {
        &self.states[m]
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Evolves `s` by `exp(-iHt)` through the stored eigenbasis. Exact only when
    /// the solution holds every eigenpair of the grid (`count == N`).
    pub fn evolve(&self, s: &StateVector, t: f64) -> Result<StateVector> {
        let mut out = StateVector::zeros(*s.grid());
        for (e, phi) in self.energies.iter().zip(&self.states) {
            let a = phi.inner(s)?;
            out.add_scaled(a * Complex64::from_polar(1.0, -e * t), phi)?;
        }
        Ok(out)
    }

    /// Index of the eigenvalue closest to `energy`.
    pub fn nearest(&self, energy: f64) -> Option<usize> {
        self.energies
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - energy).abs().total_cmp(&(b.1 - energy).abs()))
            .map(|(i, _)| i)
    }
}

/// Spectral (DFT-based) kinetic matrix `T_jl = (1/N) sum_k (p_k^2/2) e^{i p_k (x_j - x_l)}`.
///
/// The sine terms cancel pairwise (and vanish at the Nyquist bin), so the
/// matrix is real, symmetric and circulant.
pub fn kinetic_matrix(grid: &GridSpec) -> DMatrix<f64> {
    let n = grid.points();
    let p = grid.momenta();
    let row: Vec<f64> = (0..n)
        .map(|d| {
            p.iter()
                .enumerate()
                .map(|(k, pk)| {
                    let angle = 2.0 * std::f64::consts::PI * ((k * d) % n) as f64 / n as f64;
                    0.5 * pk * pk * angle.cos()
                })
                .sum::<f64>()
                / n as f64
        })
        .collect();
    DMatrix::from_fn(n, n, |j, l| row[(j + n - l) % n])
}

pub fn dense_hamiltonian(grid: &GridSpec, potential: &PotentialSpec) -> Result<DMatrix<f64>> {
    if potential.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let mut h = kinetic_matrix(grid);
    for (j, v) in potential.values().iter().enumerate() {
        h[(j, j)] += v;
    }
    Ok(h)
}

/// Dense diagonalization of `p^2/2 + V(x)` on the grid, returning the lowest `count` eigenpairs.
pub fn diagonalize_hamiltonian(
    grid: &GridSpec,
    potential: &PotentialSpec,
    count: usize,
) -> Result<EigenSolution> {
    let n = grid.points();
    if count == 0 || count > n {
        return Err(Error::InvalidArgument(format!(
            "eigenpair count must be in 1..={n}, got {count}"
        )));
    }
    let h = dense_hamiltonian(grid, potential)?;
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, 100 * n)
        .ok_or_else(|| Error::NumericalFailure("symmetric eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let scale = 1.0 / grid.spacing().sqrt();
    let mut energies = Vec::with_capacity(count);
    let mut states = Vec::with_capacity(count);
    for &idx in order.iter().take(count) {
        let col = eig.eigenvectors.column(idx);
        let peak = col
            .iter()
            .copied()
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(1.0);
        let sign = if peak < 0.0 { -scale } else { scale };
        let amps = col.iter().map(|v| Complex64::new(v * sign, 0.0)).collect();
        energies.push(eig.eigenvalues[idx]);
        states.push(StateVector::new(*grid, amps)?);
    }
    Ok(EigenSolution { energies, states })
}
