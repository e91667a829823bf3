//! Command implementations behind the `specfilter` binary.

use std::f64::consts::{E, PI};
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    alt_comparison, eigenstate_probability, filtering_error_bound, fit_power_law, minimum_time_steps,
    spectral_gap, step_terms, AnalysisInputs, ComparisonReport,
};
use crate::circuit::{monte_carlo, run_circuit, success_probability_bound, Mode, MonteCarloSummary};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::evolution::evolve_trajectory;
use crate::filter::{classical_filter, filter_error, mode_amplitudes, reference_state, FilterPlan};
use crate::numerics::{diagonalize_hamiltonian, EigenSolution, GridSpec, StateVector};
use crate::spectrum::{self, autocorrelation, detect_peaks, power_spectrum, Peak, SpectrumSeries};
use crate::windows::{analyze, suppression_factor};

/// Largest tolerated distance between the circuit and classical filter states.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-10;

/// Squared amplitudes below this count as unpopulated levels.
const POPULATION_FLOOR: f64 = 1e-12;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. }
        | Error::Table { .. }
        | Error::InvalidGrid(_)
        | Error::InvalidArgument(_)
        | Error::InvalidBand { .. }
        | Error::Io(_) => 2,
        Error::NumericalFailure(_) | Error::UndefinedOverlap | Error::RestartBudgetExceeded { .. } => 3,
        Error::Consistency(_) | Error::GridMismatch | Error::IndexOutOfRange { .. } | Error::Json(_) => 4,
        Error::DegenerateSpectrum(_) => 5,
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write(path: &Path, contents: &str) -> Result<String> {
    fs::write(path, contents)?;
    Ok(path.display().to_string())
}

fn ensure_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    Ok(())
}

/// `x,re_psi,im_psi`
pub fn state_csv(s: &StateVector) -> String {
    let mut out = String::from("x,re_psi,im_psi\n");
    for (j, a) in s.amplitudes().iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", num(s.grid().position(j)), num(a.re), num(a.im)));
    }
    out
}

pub fn parse_state_csv(text: &str, grid: GridSpec) -> Result<StateVector> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("x,re_psi,im_psi") {
        return Err(Error::InvalidArgument("state CSV must start with `x,re_psi,im_psi`".into()));
    }
    let amps = lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<f64> = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::InvalidArgument(format!("state CSV line {}: bad number", i + 2)))?;
            match f.as_slice() {
                [_, re, im] => Ok(Complex64::new(*re, *im)),
                _ => Err(Error::InvalidArgument(format!("state CSV line {}: expected 3 columns", i + 2))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    StateVector::new(grid, amps)
}

/// `series,E,height`
pub fn peaks_csv(trial: &[Peak], filtered: &[Peak]) -> String {
    let mut out = String::from("series,E,height\n");
    for (name, peaks) in [("trial", trial), ("filtered", filtered)] {
        for p in peaks {
            out.push_str(&format!("{name},{},{}\n", num(p.energy), num(p.height)));
        }
    }
    out
}

/// Dense eigenpairs, the populated levels among them and the index of the
/// level nearest the target energy.
pub struct Oracle {
    pub eig: EigenSolution,
    pub amplitudes: Vec<Complex64>,
    pub target: usize,
}

impl Oracle {
    pub fn new(plan: &FilterPlan, levels: usize) -> Result<Self> {
        let levels = levels.min(plan.grid().points());
        let eig = diagonalize_hamiltonian(plan.grid(), plan.potential(), levels)?;
        let amplitudes = mode_amplitudes(&plan.trial_state()?, &eig)?;
        let target = eig
            .nearest(plan.target_energy())
            .ok_or_else(|| Error::NumericalFailure("oracle returned no levels".into()))?;
        Ok(Self {
            eig,
            amplitudes,
            target,
        })
    }

    pub fn overlap(&self) -> f64 {
        self.amplitudes[self.target].norm_sqr()
    }

    /// Energies of the levels the trial populates, and the target's position among them.
    pub fn populated(&self) -> (Vec<f64>, Option<usize>) {
        let mut energies = Vec::new();
        let mut target = None;
        for (m, a) in self.amplitudes.iter().enumerate() {
            if a.norm_sqr() > POPULATION_FLOOR {
                if m == self.target {
                    target = Some(energies.len());
                }
                energies.push(self.eig.energy(m));
            }
        }
        (energies, target)
    }

    pub fn gap(&self) -> Result<f64> {
        match self.populated() {
            (energies, Some(t)) => spectral_gap(&energies, t),
            _ => Err(Error::UndefinedOverlap),
        }
    }
}

/// Fits `err(Nt) = C Nt^-q` for propagating the target eigenstate over the
/// plan's final time with `Nt/8 .. Nt` steps.
pub fn estimate_error_model(plan: &FilterPlan, oracle: &Oracle) -> Result<(f64, f64)> {
    let phi = oracle.eig.state(oracle.target);
    let e = oracle.eig.energy(oracle.target);
    let t = plan.final_time();
    let mut points = Vec::new();
    for div in [8, 4, 2, 1] {
        let n = (plan.steps() / div).max(1);
        let p = plan.with_steps(n)?;
        let end = evolve_trajectory(&p.propagator()?, phi, n, |_, _| {})?;
        let exact = phi.scaled(Complex64::from_polar(1.0, -e * t));
        points.push((n as f64, end.sub(&exact)?.norm_sqr()));
    }
    fit_power_law(&points)
}

pub struct SpectrumRun {
    pub trial: SpectrumSeries,
    pub filtered: SpectrumSeries,
    pub files: Vec<String>,
}

/// Spectra of the trial state and of the filtered state under the
/// configured spectrum window.
pub fn compute_spectra(cfg: &RunConfig, plan: &FilterPlan) -> Result<(SpectrumSeries, SpectrumSeries)> {
    let prop = plan.propagator()?;
    let window = cfg.spectrum_window.build(plan.steps())?;
    let rule = plan.quadrature();
    let one = |s: &StateVector| -> Result<SpectrumSeries> {
        let ac = autocorrelation(&prop, s, plan.steps(), cfg.autocorrelation)?;
        let mut sp = power_spectrum(&ac, &window, rule, cfg.spectrum_padding)?;
        sp.peaks = detect_peaks(&sp, cfg.peak_threshold)?;
        Ok(sp)
    };
    let trial = one(&plan.trial_state()?)?;
    let filtered = one(&classical_filter(plan)?.normalized)?;
    Ok((trial, filtered))
}

pub fn cmd_spectrum(cfg: &RunConfig, out: &Path) -> Result<SpectrumRun> {
    let plan = cfg.plan()?;
    let (trial, filtered) = compute_spectra(cfg, &plan)?;
    ensure_dir(out)?;
    let files = vec![
        write(&out.join("spectrum_trial.csv"), &spectrum::to_csv(&trial))?,
        write(&out.join("spectrum_filtered.csv"), &spectrum::to_csv(&filtered))?,
        write(&out.join("peaks.csv"), &peaks_csv(&trial.peaks, &filtered.peaks))?,
    ];
    Ok(SpectrumRun { trial, filtered, files })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub length: f64,
    pub points: usize,
    pub final_time: f64,
    pub steps: usize,
    pub dt: f64,
    pub target_energy: f64,
    pub window: String,
    pub mode: Mode,
    pub oracle_energy: f64,
    pub overlap: f64,
    /// `||psi - phi||^2` with `phi` phased against the trial state.
    pub epsilon: f64,
    /// `min_theta ||e^{i theta} psi - phi||`
    pub epsilon_phase_aligned: f64,
    pub p_rho: f64,
    pub p_success: f64,
    pub p_total: f64,
    pub equivalence_residual: f64,
    pub success_bound: f64,
    pub success_floor: f64,
    pub coherent_gain: f64,
    pub suppression: Option<f64>,
    pub filtering_error_bound: Option<f64>,
    pub p_rho_estimate: f64,
    pub restarts: Option<usize>,
    pub files: Vec<String>,
}

/// Runs the classical filter and the circuit, checks they agree and scores
/// the result against the oracle eigenstate.
pub fn filter_report(cfg: &RunConfig, plan: &FilterPlan, seed: u64) -> Result<(RunReport, StateVector)> {
    let classical = classical_filter(plan)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let circuit = run_circuit(plan, cfg.mode, Some(&mut rng), cfg.max_restarts)?;
    let residual = circuit
        .state
        .phase_aligned_to(&classical.normalized)?
        .distance(&classical.normalized)?;
    if !(residual <= EQUIVALENCE_TOLERANCE) {
        return Err(Error::Consistency(format!(
            "circuit and classical filter states differ by {residual:e}"
        )));
    }

    let oracle = Oracle::new(plan, cfg.levels)?;
    let trial = plan.trial_state()?;
    let reference = reference_state(&oracle.eig, oracle.target, &trial)?;
    let err = filter_error(&classical.normalized, &reference)?;

    let lsr = analyze(plan.window(), plan.quadrature(), plan.final_time(), None)?;
    let suppression = oracle
        .gap()
        .ok()
        .and_then(|gap| suppression_factor(plan.window(), plan.quadrature(), plan.final_time(), gap).ok());
    let bound = suppression.and_then(|s| filtering_error_bound(s, oracle.overlap(), lsr.coherent_gain).ok());
    let n = plan.steps() as f64;
    let report = RunReport {
        length: plan.grid().length(),
        points: plan.grid().points(),
        final_time: plan.final_time(),
        steps: plan.steps(),
        dt: plan.dt(),
        target_energy: plan.target_energy(),
        window: plan.window().kind().name().to_string(),
        mode: cfg.mode,
        oracle_energy: oracle.eig.energy(oracle.target),
        overlap: oracle.overlap(),
        epsilon: err.squared,
        epsilon_phase_aligned: err.phase_aligned,
        p_rho: circuit.p_rho,
        p_success: circuit.p_success,
        p_total: circuit.p_total,
        equivalence_residual: residual,
        success_bound: success_probability_bound(plan.steps()),
        success_floor: (1.0 - 1.0 / n) / E,
        coherent_gain: lsr.coherent_gain,
        suppression,
        filtering_error_bound: bound,
        p_rho_estimate: eigenstate_probability(oracle.overlap(), lsr.coherent_gain.min(1.0))?,
        restarts: circuit.stats.map(|s| s.restarts()),
        files: Vec::new(),
    };
    Ok((report, circuit.state))
}

pub fn cmd_filter(cfg: &RunConfig, out: &Path, seed: u64) -> Result<RunReport> {
    let plan = cfg.plan()?;
    let (mut report, state) = filter_report(cfg, &plan, seed)?;
    ensure_dir(out)?;
    report.files.push(write(&out.join("state.csv"), &state_csv(&state))?);
    let report_path = out.join("report.json");
    report.files.push(report_path.display().to_string());
    write(&report_path, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub steps: usize,
    pub dt: f64,
    pub bandwidth: f64,
    pub width: f64,
    /// Offset of the first null of the line shape, `W 2 pi / T`.
    pub resolution: f64,
    pub populated_levels: Vec<f64>,
    pub gap: f64,
    pub error_constant: f64,
    pub error_order: f64,
    pub target_accuracy: f64,
    pub resolution_term: f64,
    pub accuracy_term: f64,
    pub recommended_steps: usize,
    pub success_bound: f64,
    pub success_floor: f64,
    pub comparison: Option<ComparisonReport>,
}

pub fn plan_report(cfg: &RunConfig, plan: &FilterPlan) -> Result<PlanReport> {
    let oracle = Oracle::new(plan, cfg.levels)?;
    let gap = oracle.gap()?;
    let lsr = analyze(plan.window(), plan.quadrature(), plan.final_time(), None)?;
    let (c, q) = match (cfg.error_constant, cfg.error_order) {
        (Some(c), Some(q)) => (c, q),
        (c, q) => {
            let (fc, fq) = estimate_error_model(plan, &oracle)?;
            (c.unwrap_or(fc), q.unwrap_or(fq))
        }
    };
    let bandwidth = 2.0 * PI / plan.dt();
    let (resolution_term, accuracy_term) = step_terms(lsr.width, bandwidth, gap, c, cfg.target_accuracy, q)?;
    let recommended = minimum_time_steps(lsr.width, bandwidth, gap, c, cfg.target_accuracy, q)?;
    let comparison = match cfg.alt_steps {
        Some(alt) => {
            let s = suppression_factor(plan.window(), plan.quadrature(), plan.final_time(), gap)?;
            let rect = crate::windows::Window::rectangular(plan.steps())?;
            let s_rect = suppression_factor(&rect, plan.quadrature(), plan.final_time(), gap)?;
            let inputs = AnalysisInputs {
                suppression: s,
                overlap: oracle.overlap(),
                gain: lsr.coherent_gain,
                width: lsr.width,
                bandwidth,
                gap,
                error_constant: c,
                order: q,
                target_accuracy: cfg.target_accuracy,
                steps: plan.steps(),
            };
            Some(alt_comparison(&inputs, s_rect, plan.steps(), alt)?)
        }
        None => None,
    };
    Ok(PlanReport {
        steps: plan.steps(),
        dt: plan.dt(),
        bandwidth,
        width: lsr.width,
        resolution: lsr.first_null,
        populated_levels: oracle.populated().0,
        gap,
        error_constant: c,
        error_order: q,
        target_accuracy: cfg.target_accuracy,
        resolution_term,
        accuracy_term,
        recommended_steps: recommended,
        success_bound: success_probability_bound(plan.steps()),
        success_floor: (1.0 - 1.0 / plan.steps() as f64) / E,
        comparison,
    })
}

pub fn cmd_plan(cfg: &RunConfig, out: &Path) -> Result<PlanReport> {
    let plan = cfg.plan()?;
    let report = plan_report(cfg, &plan)?;
    ensure_dir(out)?;
    write(&out.join("plan.json"), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    Ok(report)
}

/// `trial,attempts,filter_successes,total_successes,completed`
pub fn trials_csv(summary: &MonteCarloSummary) -> String {
    let mut out = String::from("trial,attempts,filter_successes,total_successes,completed\n");
    for r in &summary.records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.trial, r.stats.attempts, r.stats.filter_successes, r.stats.total_successes, r.completed
        ));
    }
    out
}

pub fn cmd_montecarlo(cfg: &RunConfig, out: &Path, seed: u64, jobs: usize) -> Result<MonteCarloSummary> {
    let plan = cfg.plan()?;
    let summary = monte_carlo(&plan, cfg.trials, seed, cfg.max_restarts, jobs)?;
    ensure_dir(out)?;
    write(&out.join("montecarlo_trials.csv"), &trials_csv(&summary))?;
    write(&out.join("montecarlo.json"), &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    Ok(summary)
}

/// Output directory: the flag, then the config's `out`, then `specfilter-out`.
pub fn output_dir(cfg: &RunConfig, flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("specfilter-out"))
}
