//! Closed-form error and cost estimates for the filter and the comparison
//! against phase-estimation projection.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisInputs {
    /// Suppression `S` (absolute `|L|`, not relative to the gain).
    pub suppression: f64,
    /// Overlap `A = |<phi_rho|Psi_trial>|^2`.
    pub overlap: f64,
    /// Coherent gain `|L(0)|`.
    pub gain: f64,
    /// Main-lobe width `W`.
    pub width: f64,
    /// `2 pi / dt`
    pub bandwidth: f64,
    /// Nearest-neighbour gap `dE_rho`.
    pub gap: f64,
    /// Propagation error constant.
    pub error_constant: f64,
    pub order: f64,
    pub target_accuracy: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub filtering_error: f64,
    pub p_rho: f64,
    /// Upper bound on the ratio of average operation counts.
    pub cost_ratio_bound: f64,
    pub accuracy_ratio: f64,
}

fn check_overlap(a: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::InvalidArgument(format!("overlap must lie in [0, 1], got {a}")));
    }
    Ok(())
}

/// `eps_f = S^2 (1 - A) / (A |L(0)|^2)`
pub fn filtering_error_bound(suppression: f64, overlap: f64, gain: f64) -> Result<f64> {
    check_overlap(overlap)?;
    if overlap == 0.0 {
        return Err(Error::UndefinedOverlap);
    }
    if !(gain > 0.0) {
        return Err(Error::InvalidArgument(format!("coherent gain must be positive, got {gain}")));
    }
    Ok(suppression * suppression * (1.0 - overlap) / (overlap * gain * gain))
}

/// `max[C Nt^-q, eps_f]`
pub fn total_error_bound(error_constant: f64, order: f64, steps: usize, filtering_error: f64) -> f64 {
    (error_constant * (steps as f64).powf(-order)).max(filtering_error)
}

/// `P_rho ~ A |L(0)|^2 / (1 + A |L(0)|^2)`, at most 1/2.
pub fn eigenstate_probability(overlap: f64, gain: f64) -> Result<f64> {
    check_overlap(overlap)?;
    if !(0.0..=1.0).contains(&gain) {
        return Err(Error::InvalidArgument(format!("coherent gain must lie in [0, 1], got {gain}")));
    }
    let x = overlap * gain * gain;
    Ok(x / (1.0 + x))
}

/// The two terms of the step-count condition: `(W B / (2 dE), (C/eps)^{1/q})`.
pub fn step_terms(width: f64, bandwidth: f64, gap: f64, error_constant: f64, accuracy: f64, order: f64) -> Result<(f64, f64)> {
    if gap == 0.0 {
        return Err(Error::DegenerateSpectrum("zero gap to the nearest level".into()));
    }
    for (name, v) in [
        ("width", width),
        ("bandwidth", bandwidth),
        ("gap", gap),
        ("error constant", error_constant),
        ("accuracy", accuracy),
        ("order", order),
    ] {
        if !(v > 0.0) {
            return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
        }
    }
    let resolution = width * bandwidth / (2.0 * gap);
    let accuracy_term = (error_constant / accuracy).powf(1.0 / order);
    Ok((resolution, accuracy_term))
}

/// Smallest integer strictly above `max[W B / (2 dE), (C/eps)^{1/q}]`.
pub fn minimum_time_steps(
    width: f64,
    bandwidth: f64,
    gap: f64,
    error_constant: f64,
    accuracy: f64,
    order: f64,
) -> Result<usize> {
    let (a, b) = step_terms(width, bandwidth, gap, error_constant, accuracy, order)?;
    let bound = a.max(b);
    if !bound.is_finite() {
        return Err(Error::NumericalFailure("step bound is not finite".into()));
    }
    Ok(bound.floor() as usize + 1)
}

/// Cost and accuracy ratios against phase-estimation projection:
/// `Nbar/Nbar_alt < (2e / |L(0)|^2) (Nt / Nt_alt)` and
/// `eps/eps_alt = S^2 / (S_rect^2 |L(0)|^2)`.
pub fn alt_comparison(
    inputs: &AnalysisInputs,
    rectangular_suppression: f64,
    steps: usize,
    alt_steps: usize,
) -> Result<ComparisonReport> {
    if !(inputs.gain > 0.0 && rectangular_suppression > 0.0 && inputs.suppression > 0.0) {
        return Err(Error::InvalidArgument("gains and suppressions must be positive".into()));
    }
    if steps == 0 || alt_steps == 0 {
        return Err(Error::InvalidArgument("step counts must be positive".into()));
    }
    let g2 = inputs.gain * inputs.gain;
    Ok(ComparisonReport {
        filtering_error: filtering_error_bound(inputs.suppression, inputs.overlap, inputs.gain)?,
        p_rho: eigenstate_probability(inputs.overlap, inputs.gain)?,
        cost_ratio_bound: 2.0 * E / g2 * steps as f64 / alt_steps as f64,
        accuracy_ratio: inputs.suppression.powi(2) / (rectangular_suppression.powi(2) * g2),
    })
}

/// Ratio of expected operation counts `(Nt / P_total) / (Nt_alt / P_alt)`.
pub fn measured_cost_ratio(steps: usize, p_total: f64, alt_steps: usize, alt_probability: f64) -> f64 {
    (steps as f64 / p_total) / (alt_steps as f64 / alt_probability)
}

/// Least-squares fit of `err = C N^-q` in log-log space; returns `(C, q)`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, e)| *n > 0.0 && *e > 0.0)
        .map(|(n, e)| (n.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InvalidArgument("power-law fit needs two positive points".into()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("power-law fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    Ok(((my - slope * mx).exp(), -slope))
}

/// `min |E_rho - E_m|` over the other populated levels.
pub fn spectral_gap(energies: &[f64], target: usize) -> Result<f64> {
    let e = *energies
        .get(target)
        .ok_or(Error::IndexOutOfRange { index: target, max: energies.len().saturating_sub(1) })?;
    let gap = energies
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != target)
        .map(|(_, x)| (x - e).abs())
        .fold(f64::INFINITY, f64::min);
    if !gap.is_finite() {
        return Err(Error::DegenerateSpectrum("no neighbouring level".into()));
    }
    if gap <= 1e-12 * (1.0 + e.abs()) {
        return Err(Error::DegenerateSpectrum(format!("level {target} is degenerate")));
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn error_bound_endpoints() {
        assert_eq!(filtering_error_bound(0.3, 1.0, 0.5).unwrap(), 0.0);
        assert_eq!(filtering_error_bound(0.0, 0.4, 0.5).unwrap(), 0.0);
        assert!(matches!(filtering_error_bound(0.1, 0.0, 0.5), Err(Error::UndefinedOverlap)));
        assert!(filtering_error_bound(0.1, 0.5, 0.0).is_err());
    }

    #[test]
    fn probability_endpoints() {
        assert_eq!(eigenstate_probability(0.0, 0.5).unwrap(), 0.0);
        assert_eq!(eigenstate_probability(1.0, 1.0).unwrap(), 0.5);
        let p = eigenstate_probability(0.45, 0.5).unwrap();
        assert!((p - 0.1125 / 1.1125).abs() < 1e-15);
    }

    #[test]
    fn step_count_terms() {
        let dt = 100.0 / 8192.0;
        let b = 2.0 * std::f64::consts::PI / dt;
        let (res, _) = step_terms(1.0, b, 2.0, 1.0, 1e300, 2.0).unwrap();
        assert!((res - b / 4.0).abs() < 1e-9);
        let n = minimum_time_steps(1.0, b, 2.0, 1.0, 1e300, 2.0).unwrap();
        assert_eq!(n, res.floor() as usize + 1);
        let (res2, _) = step_terms(2.0, b, 2.0, 1.0, 1e300, 2.0).unwrap();
        assert_eq!(res2, 2.0 * res);
        assert!(matches!(
            minimum_time_steps(1.0, b, 0.0, 1.0, 1.0, 2.0),
            Err(Error::DegenerateSpectrum(_))
        ));
    }

    #[test]
    fn inactive_term_does_not_matter() {
        let a = minimum_time_steps(2.0, 500.0, 2.0, 1e-3, 1e-6, 2.0).unwrap();
        let b = minimum_time_steps(2.0, 500.0, 2.0, 1e-4, 1e-6, 2.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, 251);
    }

    #[test]
    fn comparison_endpoints() {
        let inputs = AnalysisInputs {
            suppression: 0.2,
            overlap: 0.5,
            gain: 1.0,
            width: 1.0,
            bandwidth: 1.0,
            gap: 1.0,
            error_constant: 1.0,
            order: 2.0,
            target_accuracy: 1.0,
            steps: 10,
        };
        let r = alt_comparison(&inputs, 0.2, 10, 10).unwrap();
        assert!((r.cost_ratio_bound - 2.0 * E).abs() < 1e-15);
        assert!((r.accuracy_ratio - 1.0).abs() < 1e-15);
    }

    #[test]
    fn power_law_fit_recovers_exponent() {
        let pts: Vec<(f64, f64)> = [100.0f64, 200.0, 400.0, 800.0].iter().map(|&n| (n, 3.0 * n.powf(-2.0))).collect();
        let (c, q) = fit_power_law(&pts).unwrap();
        assert!((c - 3.0).abs() < 1e-9 && (q - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gap_of_parity_selected_levels() {
        assert_eq!(spectral_gap(&[0.5, 2.5, 4.5], 0).unwrap(), 2.0);
        assert!(spectral_gap(&[0.5, 0.5], 0).is_err());
        assert!(spectral_gap(&[0.5], 0).is_err());
    }

    proptest! {
        #[test]
        fn bound_monotone(s in 0.0f64..1.0, a in 0.01f64..0.99, g in 0.05f64..1.0, ds in 0.0f64..0.1, da in 0.0f64..0.01) {
            let base = filtering_error_bound(s, a, g).unwrap();
            prop_assert!(filtering_error_bound((s + ds).min(1.0), a, g).unwrap() >= base);
            prop_assert!(filtering_error_bound(s, (a + da).min(1.0), g).unwrap() <= base);
        }

        #[test]
        fn probability_monotone_and_bounded(a in 0.0f64..1.0, g in 0.0f64..1.0, d in 1e-6f64..0.1) {
            let p = eigenstate_probability(a, g).unwrap();
            prop_assert!((0.0..=0.5).contains(&p));
            let a2 = (a + d).min(1.0);
            if a2 * g * g > a * g * g {
                prop_assert!(eigenstate_probability(a2, g).unwrap() > p);
            }
        }
    }
}
