//! Apodization windows and their line shapes.
//!
//! A [`Window`] is sampled on the `Nt + 1` propagation nodes `t_i = i T / Nt`.
//! Its line shape `L(dE) = (1/Nt) sum_i u_i w_i e^{i dE t_i}` uses the same
//! quadrature weights as the filter, so `|L(E_rho - E_m)|` is exactly the
//! factor by which the filter scales mode `m`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;
use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum WindowKind {
    Rectangular,
    Hann,
    /// Truncated Gaussian centred on `T/2` with standard deviation `sigma_fraction * T`.
    Gaussian { sigma_fraction: f64 },
    CustomTable,
}

impl WindowKind {
    pub fn name(&self) -> &'static str {
        match self {
            WindowKind::Rectangular => "rectangular",
            WindowKind::Hann => "hann",
            WindowKind::Gaussian { .. } => "gaussian",
            WindowKind::CustomTable => "custom-table",
        }
    }
}

/// Window samples `w(t_i) in [0, 1]` with maximum exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    kind: WindowKind,
    values: Vec<f64>,
}

impl Window {
    pub fn rectangular(steps: usize) -> Result<Self> {
        check_steps(steps)?;
        Ok(Self {
            kind: WindowKind::Rectangular,
            values: vec![1.0; steps + 1],
        })
    }

    /// `w(t) = [1 - cos(2 pi t / T)] / 2`
    pub fn hann(steps: usize) -> Result<Self> {
        check_steps(steps)?;
        let values = (0..=steps)
            .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / steps as f64).cos()))
            .collect();
        Self::normalized(WindowKind::Hann, values)
    }

    pub fn gaussian(steps: usize, sigma_fraction: f64) -> Result<Self> {
        check_steps(steps)?;
        if !(sigma_fraction.is_finite() && sigma_fraction > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gaussian width must be positive, got {sigma_fraction}"
            )));
        }
        let values = (0..=steps)
            .map(|i| {
                let z = (i as f64 / steps as f64 - 0.5) / sigma_fraction;
                (-0.5 * z * z).exp()
            })
            .collect();
        Self::normalized(WindowKind::Gaussian { sigma_fraction }, values)
    }

    /// Linear interpolation of a `(t_fraction, w)` table onto the nodes;
    /// nodes outside the table get 0. The result is rescaled to peak at 1.
    pub fn from_table(steps: usize, table: &Table) -> Result<Self> {
        check_steps(steps)?;
        if table.first() < 0.0 || table.last() > 1.0 {
            return Err(Error::InvalidArgument(
                "window table abscissae must lie in [0, 1]".into(),
            ));
        }
        if table.rows().iter().any(|r| !(0.0..=1.0).contains(&r[1])) {
            return Err(Error::InvalidArgument("window table values must lie in [0, 1]".into()));
        }
        let values = (0..=steps)
            .map(|i| table.interpolate(1, i as f64 / steps as f64, 0.0))
            .collect();
        Self::normalized(WindowKind::CustomTable, values)
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidArgument("window needs at least two nodes".into()));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument("window values must lie in [0, 1]".into()));
        }
        Self::normalized(WindowKind::CustomTable, values)
    }

    /// Builds a window of `kind` with `steps` intervals. Custom tables must use
    /// [`Window::from_table`].
    pub fn of_kind(kind: WindowKind, steps: usize) -> Result<Self> {
        match kind {
            WindowKind::Rectangular => Self::rectangular(steps),
            WindowKind::Hann => Self::hann(steps),
            WindowKind::Gaussian { sigma_fraction } => Self::gaussian(steps, sigma_fraction),
            WindowKind::CustomTable => Err(Error::InvalidArgument(
                "custom-table windows need a table".into(),
            )),
        }
    }

    fn normalized(kind: WindowKind, mut values: Vec<f64>) -> Result<Self> {
        let max = values.iter().copied().fold(0.0, f64::max);
        if max <= 0.0 {
            return Err(Error::InvalidArgument("window is identically zero".into()));
        }
        values.iter_mut().for_each(|v| *v = (*v / max).clamp(0.0, 1.0));
        Ok(Self { kind, values })
    }

    pub fn kind(&self) -> WindowKind {
        self.kind
    }

    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> Result<f64> {
        self.values.get(i).copied().ok_or(Error::IndexOutOfRange {
            index: i,
            max: self.steps(),
        })
    }

    /// Same shape resampled on a different number of steps (custom tables are
    /// resampled by linear interpolation of the current nodes).
    pub fn resampled(&self, steps: usize) -> Result<Self> {
        match self.kind {
            WindowKind::CustomTable => {
                let n = self.steps() as f64;
                let rows = self
                    .values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| vec![i as f64 / n, *v])
                    .collect();
                Self::from_table(steps, &Table::from_rows(rows)?)
            }
            kind => Self::of_kind(kind, steps),
        }
    }
}

fn check_steps(steps: usize) -> Result<()> {
    if steps == 0 {
        return Err(Error::InvalidArgument("window needs at least one step".into()));
    }
    Ok(())
}

fn check_rule(w: &Window, rule: &QuadratureRule) -> Result<()> {
    if rule.steps() != w.steps() {
        return Err(Error::InvalidArgument(format!(
            "window has {} steps, quadrature has {}",
            w.steps(),
            rule.steps()
        )));
    }
    Ok(())
}

/// Direct quadrature of the line shape at one offset.
pub fn line_shape(w: &Window, rule: &QuadratureRule, t_final: f64, offset: f64) -> Result<Complex64> {
    check_rule(w, rule)?;
    let steps = w.steps();
    let dt = t_final / steps as f64;
    let sum: Complex64 = w
        .values()
        .iter()
        .zip(rule.weights())
        .enumerate()
        .map(|(i, (wi, ui))| Complex64::from_polar(ui * wi, offset * dt * i as f64))
        .sum();
    Ok(sum / steps as f64)
}

/// Line shape sampled on the zero-padded DFT grid `dE_k = 2 pi k / (M dt)`,
/// `k` in `[-M/2, M/2)`, returned in ascending offset order.
pub fn line_shape_dft(
    w: &Window,
    rule: &QuadratureRule,
    t_final: f64,
    padding: usize,
) -> Result<(Vec<f64>, Vec<Complex64>)> {
    check_rule(w, rule)?;
    let steps = w.steps();
    let dt = t_final / steps as f64;
    let m = ((steps + 1) * padding.max(1)).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (i, (wi, ui)) in w.values().iter().zip(rule.weights()).enumerate() {
        buf[i] = Complex64::new(wi * ui / steps as f64, 0.0);
    }
    // inverse transform carries the e^{+i dE t} sign of the line shape
    FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
    let half = m / 2;
    let mut offsets = Vec::with_capacity(m);
    let mut values = Vec::with_capacity(m);
    for j in 0..m {
        let k = (j + half) % m;
        let signed = k as f64 - if k >= half { m as f64 } else { 0.0 };
        offsets.push(2.0 * PI * signed / (m as f64 * dt));
        values.push(buf[k]);
    }
    Ok((offsets, values))
}

/// Suppression, gain and width of a window's line shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineShapeReport {
    pub coherent_gain: f64,
    pub offsets: Vec<f64>,
    pub magnitudes: Vec<f64>,
    pub exclusion: f64,
    pub suppression: f64,
    pub suppression_db: f64,
    /// Offset of the first minimum of `|L|` above zero.
    pub first_null: f64,
    /// Main-lobe width in units of `2 pi / T` (1 for the rectangular window).
    pub width: f64,
}

const SCAN_PADDING: usize = 16;

fn golden_search(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64, maximize: bool) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let sign = if maximize { -1.0 } else { 1.0 };
    let obj = |x: f64| sign * f(x);
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (obj(c), obj(d));
    for _ in 0..80 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = obj(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = obj(d);
        }
        if (hi - lo).abs() < 1e-13 * (1.0 + hi.abs()) {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Offset of the first local minimum of `|L(dE)|` for `dE > 0`.
pub fn first_null(w: &Window, rule: &QuadratureRule, t_final: f64) -> Result<f64> {
    let (offsets, values) = line_shape_dft(w, rule, t_final, SCAN_PADDING)?;
    let zero = offsets.iter().position(|&e| e == 0.0).unwrap_or(0);
    let mags: Vec<f64> = values.iter().map(|v| v.norm()).collect();
    let step = offsets[zero + 1] - offsets[zero];
    for j in zero + 1..mags.len() - 1 {
        if mags[j] <= mags[j - 1] && mags[j] < mags[j + 1] {
            let (x, _) = golden_search(
                offsets[j] - step,
                offsets[j] + step,
                |e| line_shape(w, rule, t_final, e).map(|z| z.norm()).unwrap_or(f64::INFINITY),
                false,
            );
            return Ok(x);
        }
    }
    Err(Error::NumericalFailure(
        "line shape has no minimum inside the sampled band".into(),
    ))
}

/// `S = max_{|dE| >= exclusion} |L(dE)|`, scanned over the whole band `|dE| <= pi/dt`.
pub fn suppression_factor(w: &Window, rule: &QuadratureRule, t_final: f64, exclusion: f64) -> Result<f64> {
    let null = first_null(w, rule, t_final)?;
    if !(exclusion >= null * (1.0 - 1e-9)) {
        return Err(Error::InvalidBand {
            exclusion,
            first_null: null,
        });
    }
    let (offsets, values) = line_shape_dft(w, rule, t_final, SCAN_PADDING)?;
    let mags: Vec<f64> = values.iter().map(|v| v.norm()).collect();
    let step = offsets[1] - offsets[0];
    let direct = |e: f64| line_shape(w, rule, t_final, e).map(|z| z.norm()).unwrap_or(0.0);

    let mut best = direct(exclusion).max(direct(-exclusion));
    let peaks: Vec<usize> = (1..mags.len() - 1)
        .filter(|&j| offsets[j].abs() >= exclusion && mags[j] >= mags[j - 1] && mags[j] >= mags[j + 1])
        .collect();
    let sampled = peaks.iter().map(|&j| mags[j]).fold(best, f64::max);
    // a 16x padded grid samples every lobe within a few percent of its top
    for j in peaks.into_iter().filter(|&j| mags[j] >= 0.9 * sampled) {
        let e = offsets[j];
        let (lo, hi) = if e > 0.0 {
            ((e - step).max(exclusion), e + step)
        } else {
            (e - step, (e + step).min(-exclusion))
        };
        let (_, peak) = golden_search(lo, hi, direct, true);
        best = best.max(peak).max(mags[j]);
    }
    Ok(best)
}

pub fn to_db(ratio: f64) -> f64 {
    20.0 * ratio.log10()
}

/// Gain, first null, width and suppression with exclusion band `exclusion`
/// (defaults to the first null when `None`).
pub fn analyze(
    w: &Window,
    rule: &QuadratureRule,
    t_final: f64,
    exclusion: Option<f64>,
) -> Result<LineShapeReport> {
    let gain = line_shape(w, rule, t_final, 0.0)?.norm();
    let null = first_null(w, rule, t_final)?;
    let exclusion = exclusion.unwrap_or(null);
    let suppression = suppression_factor(w, rule, t_final, exclusion)?;
    let (offsets, values) = line_shape_dft(w, rule, t_final, 4)?;
    Ok(LineShapeReport {
        coherent_gain: gain,
        magnitudes: values.iter().map(|v| v.norm()).collect(),
        offsets,
        exclusion,
        suppression,
        suppression_db: to_db(suppression / gain),
        first_null: null,
        width: null / (2.0 * PI / t_final),
    })
}
