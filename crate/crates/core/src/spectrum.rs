//! Power spectra from the autocorrelation `c(t) = <Psi(0)|Psi(t)>`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{evolve_trajectory, Propagator};
use crate::numerics::StateVector;
use crate::quadrature::QuadratureRule;
use crate::windows::Window;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AutocorrMode {
    /// Grid overlap `<Psi(0)|Psi(t)>`.
    Direct,
    /// Expectation values of `sigma_x`, `sigma_y` on the ancilla of
    /// `(|0> Psi(0) + |1> Psi(t)) / sqrt(2)`.
    Circuit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrSeries {
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
    pub provenance: AutocorrMode,
}

impl AutocorrSeries {
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn dt(&self) -> f64 {
        self.final_time() / self.steps() as f64
    }
}

/// Ancilla expectation values `(<sigma_x>, <sigma_y>)` for the register
/// `(|0> a + |1> b) / sqrt(2)`.
///
/// With this normalization `<sigma_x> = Re<a|b>` and `<sigma_y> = Im<a|b>`.
pub fn ancilla_expectations(a: &StateVector, b: &StateVector) -> Result<(f64, f64)> {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let (a, b) = (a.scaled(h), b.scaled(h));
    // sigma_x swaps the branches; sigma_y swaps them with phases (-i, +i)
    let sx = a.inner(&b)? + b.inner(&a)?;
    let sy = a.inner(&b.scaled(-Complex64::i()))? + b.inner(&a.scaled(Complex64::i()))?;
    Ok((sx.re, sy.re))
}

pub fn autocorrelation(
    prop: &Propagator,
    s0: &StateVector,
    steps: usize,
    mode: AutocorrMode,
) -> Result<AutocorrSeries> {
    if steps == 0 {
        return Err(Error::InvalidArgument("autocorrelation needs at least one step".into()));
    }
    let mut values = Vec::with_capacity(steps + 1);
    let mut failure = None;
    evolve_trajectory(prop, s0, steps, |_, s| {
        let v = match mode {
            AutocorrMode::Direct => s0.inner(s),
            AutocorrMode::Circuit => ancilla_expectations(s0, s).map(|(x, y)| Complex64::new(x, y)),
        };
        match v {
            Ok(v) => values.push(v),
            Err(e) => {
                failure.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(AutocorrSeries {
        times: (0..=steps).map(|i| i as f64 * prop.dt()).collect(),
        values,
        provenance: mode,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub energy: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSeries {
    /// Ascending energies spanning `[-pi/dt, pi/dt)`.
    pub energies: Vec<f64>,
    pub values: Vec<Complex64>,
    pub peaks: Vec<Peak>,
}

impl SpectrumSeries {
    pub fn bandwidth(&self) -> f64 {
        if self.energies.len() < 2 {
            return 0.0;
        }
        let step = self.energies[1] - self.energies[0];
        step * self.energies.len() as f64
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// Linear interpolation of `|C|` at `energy`.
    pub fn magnitude_at(&self, energy: f64) -> f64 {
        let idx = self.energies.partition_point(|&e| e <= energy);
        if idx == 0 || idx >= self.energies.len() {
            return 0.0;
        }
        let (e0, e1) = (self.energies[idx - 1], self.energies[idx]);
        let f = (energy - e0) / (e1 - e0);
        (1.0 - f) * self.values[idx - 1].norm() + f * self.values[idx].norm()
    }
}

fn check_nodes(ac: &AutocorrSeries, window: &Window, rule: &QuadratureRule) -> Result<()> {
    if window.steps() != ac.steps() || rule.steps() != ac.steps() {
        return Err(Error::InvalidArgument(format!(
            "spectrum window/quadrature ({}/{} steps) must match the autocorrelation ({} steps)",
            window.steps(),
            rule.steps(),
            ac.steps()
        )));
    }
    Ok(())
}

/// `C(E) = (1/Nt) sum_i u_i w(t_i) e^{i E t_i} c(t_i)` at a single energy.
pub fn spectrum_at(ac: &AutocorrSeries, window: &Window, rule: &QuadratureRule, energy: f64) -> Result<Complex64> {
    check_nodes(ac, window, rule)?;
    let n = ac.steps() as f64;
    Ok(ac
        .values
        .iter()
        .zip(window.values())
        .zip(rule.weights())
        .zip(&ac.times)
        .map(|(((c, w), u), t)| c * Complex64::from_polar(u * w, energy * t))
        .sum::<Complex64>()
        / n)
}

/// `C(E)` on the zero-padded DFT energy grid (`padding` x the node count,
/// rounded up to a power of two).
pub fn power_spectrum(
    ac: &AutocorrSeries,
    window: &Window,
    rule: &QuadratureRule,
    padding: usize,
) -> Result<SpectrumSeries> {
    check_nodes(ac, window, rule)?;
    let steps = ac.steps();
    let dt = ac.dt();
    let m = ((steps + 1) * padding.max(1)).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (i, ((c, w), u)) in ac.values.iter().zip(window.values()).zip(rule.weights()).enumerate() {
        buf[i] = c * (u * w / steps as f64);
    }
    FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
    let half = m / 2;
    let mut energies = Vec::with_capacity(m);
    let mut values = Vec::with_capacity(m);
    for j in 0..m {
        let k = (j + half) % m;
        let signed = k as f64 - if k >= half { m as f64 } else { 0.0 };
        energies.push(2.0 * PI * signed / (m as f64 * dt));
        values.push(buf[k]);
    }
    Ok(SpectrumSeries {
        energies,
        values,
        peaks: Vec::new(),
    })
}

/// Local maxima of `|C|` at or above `threshold * max|C|`, refined by a
/// three-point parabola through the neighbouring samples.
pub fn detect_peaks(sp: &SpectrumSeries, threshold: f64) -> Result<Vec<Peak>> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidArgument(format!("peak threshold must be in (0, 1], got {threshold}")));
    }
    let mags = sp.magnitudes();
    if mags.len() < 3 {
        return Ok(Vec::new());
    }
    let max = mags.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(Vec::new());
    }
    let cut = threshold * max;
    let step = sp.energies[1] - sp.energies[0];
    let mut peaks = Vec::new();
    for j in 1..mags.len() - 1 {
        let (l, m, r) = (mags[j - 1], mags[j], mags[j + 1]);
        if m < cut || m < l || m <= r {
            continue;
        }
        let denom = l - 2.0 * m + r;
        let (shift, height) = if denom < 0.0 {
            let d = 0.5 * (l - r) / denom;
            (d, m - 0.25 * (l - r) * d)
        } else {
            (0.0, m)
        };
        peaks.push(Peak {
            energy: sp.energies[j] + shift * step,
            height,
        });
    }
    Ok(peaks)
}

/// `E,re_C,im_C,abs_C` rows at 17 significant digits.
pub fn to_csv(sp: &SpectrumSeries) -> String {
    let mut out = String::from("E,re_C,im_C,abs_C\n");
    for (e, c) in sp.energies.iter().zip(&sp.values) {
        out.push_str(&format!("{e:.16e},{:.16e},{:.16e},{:.16e}\n", c.re, c.im, c.norm()));
    }
    out
}

/// Inverse of [`to_csv`]; peaks are not stored and come back empty.
pub fn parse_csv(text: &str) -> Result<SpectrumSeries> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("E,re_C,im_C,abs_C") {
        return Err(Error::InvalidArgument("spectrum CSV must start with `E,re_C,im_C,abs_C`".into()));
    }
    let mut energies = Vec::new();
    let mut values = Vec::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidArgument(format!("spectrum CSV line {}: bad number", i + 2)))?;
        if f.len() != 4 {
            return Err(Error::InvalidArgument(format!("spectrum CSV line {}: expected 4 columns", i + 2)));
        }
        energies.push(f[0]);
        values.push(Complex64::new(f[1], f[2]));
    }
    Ok(SpectrumSeries {
        energies,
        values,
        peaks: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::PotentialSpec;
    use crate::numerics::{diagonalize_hamiltonian, GridSpec};

    fn setup() -> (Propagator, StateVector, f64) {
        let g = GridSpec::new(16.0, 64).unwrap();
        let v = PotentialSpec::harmonic(&g);
        let eig = diagonalize_hamiltonian(&g, &v, 1).unwrap();
        (Propagator::new(&v, 0.02).unwrap(), eig.state(0).clone(), eig.energy(0))
    }

    #[test]
    fn circuit_emulation_matches_direct() {
        let (prop, _, _) = setup();
        let g = *prop.grid();
        let s0 = StateVector::from_fn(g, |x| Complex64::new((-(x - 1.0).powi(2)).exp(), 0.2 * x))
            .normalized()
            .unwrap();
        let d = autocorrelation(&prop, &s0, 200, AutocorrMode::Direct).unwrap();
        let c = autocorrelation(&prop, &s0, 200, AutocorrMode::Circuit).unwrap();
        assert!((d.values[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        for (a, b) in d.values.iter().zip(&c.values) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn stationary_state_has_pure_phase() {
        let (prop, phi, e0) = setup();
        let ac = autocorrelation(&prop, &phi, 500, AutocorrMode::Direct).unwrap();
        for (t, c) in ac.times.iter().zip(&ac.values) {
            assert!((c.norm() - 1.0).abs() < 1e-8);
            // the split-step eigenphase differs from E0 by O(dt^2)
            assert!((c - Complex64::from_polar(1.0, -e0 * t)).norm() < 1e-3);
        }
    }

    #[test]
    fn stationary_spectrum_is_the_line_shape() {
        let (prop, phi, e0) = setup();
        let n = 2000;
        let ac = autocorrelation(&prop, &phi, n, AutocorrMode::Direct).unwrap();
        let w = Window::hann(n).unwrap();
        let rule = QuadratureRule::trapezoidal(n).unwrap();
        let mut sp = power_spectrum(&ac, &w, &rule, 4).unwrap();
        sp.peaks = detect_peaks(&sp, 1e-3).unwrap();
        let top = detect_peaks(&sp, 1.0).unwrap();
        assert_eq!(top.len(), 1);
        let resolution = 2.0 * PI / ac.final_time();
        assert!((top[0].energy - e0).abs() < 0.05 * resolution, "{top:?}");
        assert!((top[0].height - 0.5).abs() < 1e-3);
        let direct = spectrum_at(&ac, &w, &rule, e0).unwrap();
        assert!((direct.norm() - 0.5).abs() < 1e-4);
    }

    #[test]
    fn peak_threshold_validated() {
        let sp = SpectrumSeries {
            energies: vec![0.0, 1.0, 2.0],
            values: vec![Complex64::new(0.0, 0.0); 3],
            peaks: vec![],
        };
        assert!(detect_peaks(&sp, 0.0).is_err());
        assert!(detect_peaks(&sp, 0.5).unwrap().is_empty());
        let empty = SpectrumSeries {
            energies: vec![],
            values: vec![],
            peaks: vec![],
        };
        assert!(detect_peaks(&empty, 0.5).unwrap().is_empty());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let sp = SpectrumSeries {
            energies: vec![-1.0 / 3.0, 0.0, 2.0f64.sqrt()],
            values: vec![Complex64::new(1e-300, -0.1), Complex64::new(PI, 0.0), Complex64::new(-7.25e5, 1.0 / 7.0)],
            peaks: vec![],
        };
        let text = to_csv(&sp);
        assert!(text.starts_with("E,re_C,im_C,abs_C\n"));
        assert_eq!(parse_csv(&text).unwrap(), sp);
        assert!(parse_csv("E,x\n").is_err());
    }

    #[test]
    fn energy_grid_spans_bandwidth() {
        let (prop, phi, _) = setup();
        let ac = autocorrelation(&prop, &phi, 100, AutocorrMode::Direct).unwrap();
        let sp = power_spectrum(&ac, &Window::rectangular(100).unwrap(), &QuadratureRule::trapezoidal(100).unwrap(), 4).unwrap();
        assert!((sp.bandwidth() - 2.0 * PI / prop.dt()).abs() < 1e-9);
        assert!((sp.energies[0] + PI / prop.dt()).abs() < 1e-9);
    }
}
