use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{GridSpec, StateVector};

/// Cached forward/inverse FFT plans for one grid size.
///
/// The public transforms use the unitary convention (both directions scaled by
/// `1/sqrt(N)`), so `dft_forward` preserves the grid norm.
#[derive(Clone)]
pub struct Fourier {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fourier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fourier").field("n", &self.n).finish()
    }
}

impl Fourier {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn for_grid(grid: &GridSpec) -> Self {
        Self::new(grid.points())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn scratch_len(&self) -> usize {
        self.forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len())
    }

    /// Unnormalized forward transform `X_k = sum_j x_j e^{-2 pi i jk/N}`.
    pub fn forward_raw(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, scratch);
    }

    /// Unnormalized inverse transform `x_j = sum_k X_k e^{+2 pi i jk/N}`.
    pub fn inverse_raw(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inverse.process_with_scratch(buf, scratch);
    }

    pub fn forward(&self, s: &StateVector) -> StateVector {
        self.transform(s, true)
    }

    pub fn inverse(&self, s: &StateVector) -> StateVector {
        self.transform(s, false)
    }

    fn transform(&self, s: &StateVector, forward: bool) -> StateVector {
        assert_eq!(s.len(), self.n, "transform length mismatch");
        let mut out = s.clone();
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.scratch_len()];
        let buf = out.amplitudes_mut();
        if forward {
            self.forward_raw(buf, &mut scratch);
        } else {
            self.inverse_raw(buf, &mut scratch);
        }
        let scale = 1.0 / (self.n as f64).sqrt();
        buf.iter_mut().for_each(|a| *a *= scale);
        out
    }
}

/// Unitary DFT of the amplitudes; bin `k` corresponds to `GridSpec::momentum(k)`.
pub fn dft_forward(s: &StateVector) -> StateVector {
    Fourier::for_grid(s.grid()).forward(s)
}

pub fn dft_inverse(s: &StateVector) -> StateVector {
    Fourier::for_grid(s.grid()).inverse(s)
}
