//! Grid, state-vector algebra, the unitary DFT and the dense eigensolver oracle.

mod eigen;
mod fourier;
mod grid;
mod state;

pub use eigen::{dense_hamiltonian, diagonalize_hamiltonian, kinetic_matrix, EigenSolution};
pub use fourier::{dft_forward, dft_inverse, Fourier};
pub use grid::GridSpec;
pub use state::{inner_product, StateVector};
