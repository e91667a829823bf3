//! Two-ancilla circuit simulation of the filter.
//!
//! The register `|c> (x) |psi>` is held as two grid vectors: `branch0` is the
//! `|0>` component (the evolving trial state, norm 1) and `branch1` the `|1>`
//! component (the partial filter sum). Together they represent the normalized
//! state `(|0> branch0 + |1> branch1) / N_i` with `N_i^2 = 1 + ||branch1||^2`.
//!
//! Each non-unitary gate `B_i = c [[1, 0], [B_i, 1]]` is realized as
//! `U_i diag(1, s_i) V_i^dagger`: `V_i^dagger` on `|c>`, a controlled rotation
//! with `cos theta_i = s_i` onto the second ancilla, a projective `|0><0|`
//! measurement of that ancilla, then `U_i` on `|c>`. The second ancilla is
//! measured inside the gate, so only its outcome probabilities are tracked.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::Propagator;
use crate::filter::FilterPlan;
use crate::numerics::StateVector;

pub type Mat2 = [[Complex64; 2]; 2];

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[c(0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// SVD factors of one filter gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateFactors {
    pub coefficient: Complex64,
    pub phase: f64,
    pub prefactor: f64,
    pub singular_value: f64,
    pub f_plus: f64,
    pub f_minus: f64,
    pub g_plus: f64,
    pub g_minus: f64,
    pub u: Mat2,
    pub v_dagger: Mat2,
    /// Rotation angle of the controlled ancilla rotation, `cos(theta) = s`.
    pub theta: f64,
}

/// Factors `B = c [[1, 0], [B, 1]]` as `U diag(1, s) V^dagger`.
///
/// The closed forms are evaluated at `b = |B|`; the phase of `B` enters as
/// `diag(1, e^{i phi}) (.) diag(1, e^{-i phi})`, absorbed into `U` and `V^dagger`.
pub fn gate_factors(coefficient: Complex64) -> GateFactors {
    let b = coefficient.norm();
    let phase = if b > 0.0 { coefficient.arg() } else { 0.0 };
    let root = (1.0 + 0.25 * b * b).sqrt();
    let base = 1.0 + 0.5 * b * b;
    let prefactor = 1.0 / (base + b * root).sqrt();
    // base - b*root loses digits for large b; use (base - b root)(base + b root) = 1
    let singular_value = 1.0 / (base + b * root);
    let f_plus = 0.5 * b + root;
    let f_minus = 0.5 * b - root;
    let g_plus = base + b * root;
    let g_minus = 1.0 / g_plus;

    let up = f_plus.hypot(g_plus);
    let um = f_minus.hypot(g_minus);
    let vp = f_plus.hypot(1.0);
    let vm = f_minus.hypot(1.0);
    let e = Complex64::from_polar(1.0, phase);
    let u = [
        [c(f_plus / up), c(f_minus / um)],
        [e * (g_plus / up), e * (g_minus / um)],
    ];
    let v_dagger = [
        [c(f_plus / vp), e.conj() * (1.0 / vp)],
        [c(f_minus / vm), e.conj() * (1.0 / vm)],
    ];
    GateFactors {
        coefficient,
        phase,
        prefactor,
        singular_value,
        f_plus,
        f_minus,
        g_plus,
        g_minus,
        u,
        v_dagger,
        theta: singular_value.clamp(-1.0, 1.0).acos(),
    }
}

impl GateFactors {
    /// `U diag(1, s) V^dagger`
    pub fn reconstruct(&self) -> Mat2 {
        let sigma = [[c(1.0), c(0.0)], [c(0.0), c(self.singular_value)]];
        matmul(&matmul(&self.u, &sigma), &self.v_dagger)
    }

    /// `prefactor * [[1, 0], [B, 1]]`
    pub fn target(&self) -> Mat2 {
        let p = c(self.prefactor);
        [[p, c(0.0)], [p * self.coefficient, p]]
    }
}

/// Upper bound of the per-gate `p_1` over the norm of the partial sum: `1 / (1 + (F^-)^2)`.
pub fn p1_bound(coefficient: Complex64) -> f64 {
    let f = gate_factors(coefficient);
    1.0 / (1.0 + f.f_minus * f.f_minus)
}

/// `p_1 = (|V21|^2 + |V22|^2 n) / (1 + n)` with `n = ||Psi_rho^{(i-1)}||^2`.
pub fn p1_value(coefficient: Complex64, partial_norm_sqr: f64) -> f64 {
    let f = gate_factors(coefficient);
    let v21 = f.v_dagger[1][0].norm_sqr();
    let v22 = f.v_dagger[1][1].norm_sqr();
    (v21 + v22 * partial_norm_sqr) / (1.0 + partial_norm_sqr)
}

/// Lower bound on the full-sequence success probability for `steps` steps:
/// every one of the `steps + 1` gates at the worst case `|B| = 1/Nt`.
pub fn success_probability_bound(steps: usize) -> f64 {
    let n = steps as f64;
    let a = 1.0 + 1.0 / (4.0 * n * n);
    let r = (1.0 / (2.0 * n)) * a.sqrt();
    ((a - r) / (a + r)).powf(n + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Post-select every ancilla measurement on success and track probabilities.
    Deterministic,
    /// Draw every measurement outcome and restart from `t = 0` on failure.
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Success,
    Failure,
}

#[derive(Debug, Clone)]
pub struct DualRegisterState {
    pub branch0: StateVector,
    pub branch1: StateVector,
    /// Product of per-gate success probabilities so far.
    pub success_probability: f64,
    /// `p_failure` of every gate applied so far.
    pub failure_ledger: Vec<f64>,
    /// `N_i^2` after every gate.
    pub normalization_ledger: Vec<f64>,
    /// Set once a sampled measurement fails; the run must restart.
    pub failed: bool,
}

impl DualRegisterState {
    /// `|0> (x) trial`
    pub fn new(trial: StateVector) -> Self {
        let branch1 = StateVector::zeros(*trial.grid());
        Self {
            branch0: trial,
            branch1,
            success_probability: 1.0,
            failure_ledger: Vec::new(),
            normalization_ledger: Vec::new(),
            failed: false,
        }
    }

    /// `N^2 = ||branch0||^2 + ||branch1||^2`
    pub fn normalization_sqr(&self) -> f64 {
        self.branch0.norm_sqr() + self.branch1.norm_sqr()
    }

    /// Probability that the final `|1><1|` measurement on `|c>` succeeds.
    pub fn eigenstate_probability(&self) -> f64 {
        self.branch1.norm_sqr() / self.normalization_sqr()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateResult {
    pub p_failure: f64,
    pub outcome: Outcome,
}

fn combine(a: Complex64, x: &StateVector, b: Complex64, y: &StateVector) -> Result<StateVector> {
    let mut out = x.scaled(a);
    out.add_scaled(b, y)?;
    Ok(out)
}

/// Applies one filter gate. In sampled mode `rng` decides the ancilla outcome;
/// a failure leaves the register untouched and sets `state.failed`.
pub fn apply_filter_gate<R: Rng + ?Sized>(
    state: &mut DualRegisterState,
    factors: &GateFactors,
    mode: Mode,
    rng: Option<&mut R>,
) -> Result<GateResult> {
    let prev = state.normalization_sqr();
    let v = &factors.v_dagger;
    let psi0 = combine(v[0][0], &state.branch0, v[0][1], &state.branch1)?;
    let psi1 = combine(v[1][0], &state.branch0, v[1][1], &state.branch1)?;
    let s = factors.singular_value;
    let p_failure = psi1.norm_sqr() * (1.0 - s * s) / prev;
    if !(-1e-10..=1.0 + 1e-10).contains(&p_failure) || !p_failure.is_finite() {
        return Err(Error::Consistency(format!("failure probability {p_failure} outside [0, 1]")));
    }
    let p_failure = p_failure.clamp(0.0, 1.0);

    let outcome = match (mode, rng) {
        (Mode::Sampled, Some(rng)) => {
            if rng.random::<f64>() < p_failure {
                Outcome::Failure
            } else {
                Outcome::Success
            }
        }
        (Mode::Sampled, None) => {
            return Err(Error::InvalidArgument("sampled mode needs a random source".into()))
        }
        (Mode::Deterministic, _) => Outcome::Success,
    };
    state.failure_ledger.push(p_failure);
    if outcome == Outcome::Failure {
        state.failed = true;
        return Ok(GateResult { p_failure, outcome });
    }

    // ancilla |0> branch: (psi0, s psi1), then U on |c>
    let u = &factors.u;
    let r0 = combine(u[0][0], &psi0, u[0][1] * s, &psi1)?;
    let r1 = combine(u[1][0], &psi0, u[1][1] * s, &psi1)?;
    // rescale so that branch0 keeps unit norm: r = c * (branch0, branch1 + B branch0)
    let scale = 1.0 / r0.norm() * state.branch0.norm();
    state.branch0 = r0.scaled(c(scale));
    state.branch1 = r1.scaled(c(scale));
    state.success_probability *= 1.0 - p_failure;
    state.normalization_ledger.push(state.normalization_sqr());
    Ok(GateResult { p_failure, outcome })
}

/// The trial branch (`|c> = |0>`) advances one step; the filter branch is untouched.
pub fn controlled_evolution(
    state: &mut DualRegisterState,
    prop: &Propagator,
    scratch: &mut [Complex64],
) -> Result<()> {
    prop.step_in_place(&mut state.branch0, scratch)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonteCarloStats {
    /// Full passes started (1 + restarts).
    pub attempts: usize,
    /// Passes in which every filter gate succeeded.
    pub filter_successes: usize,
    /// Passes that also passed the final `|1><1|` measurement.
    pub total_successes: usize,
    /// Gate index of each failed filter pass.
    pub failed_steps: Vec<usize>,
}

impl MonteCarloStats {
    pub fn restarts(&self) -> usize {
        self.attempts.saturating_sub(1)
    }
}

#[derive(Debug, Clone)]
pub struct CircuitReport {
    /// Normalized post-selected register content `Psi_rho / ||Psi_rho||`.
    pub state: StateVector,
    /// The unnormalized partial sum `Psi_rho` after the last gate.
    pub filtered: StateVector,
    pub p_rho: f64,
    pub p_success: f64,
    pub p_total: f64,
    pub failure_probabilities: Vec<f64>,
    pub normalizations: Vec<f64>,
    pub stats: Option<MonteCarloStats>,
}

/// One pass of gates interleaved with controlled evolution:
/// `B_0`, then `c-U`, `B_i` for `i = 1..=Nt`.
fn run_pass<R: Rng + ?Sized>(
    plan: &FilterPlan,
    prop: &Propagator,
    trial: &StateVector,
    factors: &[GateFactors],
    mode: Mode,
    mut rng: Option<&mut R>,
) -> Result<(DualRegisterState, Option<usize>)> {
    let mut state = DualRegisterState::new(trial.clone());
    let mut scratch = prop.scratch();
    for (i, f) in factors.iter().enumerate() {
        if i > 0 {
            controlled_evolution(&mut state, prop, &mut scratch)?;
        }
        let res = apply_filter_gate(&mut state, f, mode, rng.as_deref_mut())?;
        if res.outcome == Outcome::Failure {
            return Ok((state, Some(i)));
        }
    }
    debug_assert_eq!(factors.len(), plan.steps() + 1);
    Ok((state, None))
}

fn report_from(state: DualRegisterState, stats: Option<MonteCarloStats>) -> Result<CircuitReport> {
    let p_rho = state.eigenstate_probability();
    let p_success = state.success_probability;
    Ok(CircuitReport {
        state: state.branch1.normalized()?,
        filtered: state.branch1,
        p_rho,
        p_success,
        p_total: p_rho * p_success,
        failure_probabilities: state.failure_ledger,
        normalizations: state.normalization_ledger,
        stats,
    })
}

/// Runs the full circuit. Deterministic mode post-selects and reports exact
/// probabilities; sampled mode restarts on every failed measurement (filter
/// gates or the final `|1><1|`) until success or `max_restarts` is exhausted.
pub fn run_circuit<R: Rng + ?Sized>(
    plan: &FilterPlan,
    mode: Mode,
    rng: Option<&mut R>,
    max_restarts: usize,
) -> Result<CircuitReport> {
    let prop = plan.propagator()?;
    let trial = plan.trial_state()?;
    let factors: Vec<GateFactors> = plan.coefficients().into_iter().map(gate_factors).collect();
    match mode {
        Mode::Deterministic => {
            let (state, _) = run_pass::<R>(plan, &prop, &trial, &factors, mode, None)?;
            report_from(state, None)
        }
        Mode::Sampled => {
            let rng = rng.ok_or_else(|| Error::InvalidArgument("sampled mode needs a random source".into()))?;
            let mut stats = MonteCarloStats::default();
            while stats.attempts <= max_restarts {
                stats.attempts += 1;
                let (state, failed_at) = run_pass(plan, &prop, &trial, &factors, mode, Some(&mut *rng))?;
                if let Some(i) = failed_at {
                    stats.failed_steps.push(i);
                    continue;
                }
                stats.filter_successes += 1;
                if rng.random::<f64>() < state.eigenstate_probability() {
                    stats.total_successes += 1;
                    // the sampled run reports the probabilities of the successful branch
                    return report_from(state, Some(stats));
                }
            }
            Err(Error::RestartBudgetExceeded {
                max_restarts,
                partial: stats,
            })
        }
    }
}

/// One Monte-Carlo trial as recorded per trial index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub stats: MonteCarloStats,
    pub completed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub trials: usize,
    pub seed: u64,
    pub deterministic_p_success: f64,
    pub deterministic_p_rho: f64,
    pub attempts: usize,
    pub filter_successes: usize,
    pub total_successes: usize,
    /// `filter_successes / attempts`
    pub empirical_p_success: f64,
    /// Binomial standard error of `empirical_p_success`.
    pub p_success_std_error: f64,
    /// Filtering passes per successful filtering pass, `attempts / filter_successes`.
    pub mean_filter_attempts: f64,
    pub mean_filter_attempts_std_error: f64,
    pub mean_restarts: f64,
    pub incomplete_trials: usize,
    pub records: Vec<TrialRecord>,
}

/// Independent sampled-mode trials, each seeded from `(seed, trial index)`.
/// Results are merged in trial order, so output does not depend on `jobs`.
pub fn monte_carlo(
    plan: &FilterPlan,
    trials: usize,
    seed: u64,
    max_restarts: usize,
    jobs: usize,
) -> Result<MonteCarloSummary> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let deterministic = run_circuit::<ChaCha8Rng>(plan, Mode::Deterministic, None, 0)?;
    let one = |t: usize| -> Result<TrialRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        match run_circuit(plan, Mode::Sampled, Some(&mut rng), max_restarts) {
            Ok(r) => Ok(TrialRecord {
                trial: t,
                stats: r.stats.unwrap_or_default(),
                completed: true,
            }),
            Err(Error::RestartBudgetExceeded { partial, .. }) => Ok(TrialRecord {
                trial: t,
                stats: partial,
                completed: false,
            }),
            Err(e) => Err(e),
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let records: Vec<TrialRecord> = pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(one)
            .collect::<Result<Vec<_>>>()
    })?;

    let attempts: usize = records.iter().map(|r| r.stats.attempts).sum();
    let filter_successes: usize = records.iter().map(|r| r.stats.filter_successes).sum();
    let total_successes: usize = records.iter().map(|r| r.stats.total_successes).sum();
    let p = filter_successes as f64 / attempts as f64;
    let p_se = (p * (1.0 - p) / attempts as f64).sqrt();
    // attempts per filter success is geometric with mean 1/p and variance (1-p)/p^2
    let mean_attempts = attempts as f64 / filter_successes.max(1) as f64;
    let mean_se = ((1.0 - p) / (p * p) / filter_successes.max(1) as f64).sqrt();
    Ok(MonteCarloSummary {
        trials,
        seed,
        deterministic_p_success: deterministic.p_success,
        deterministic_p_rho: deterministic.p_rho,
        attempts,
        filter_successes,
        total_successes,
        empirical_p_success: p,
        p_success_std_error: p_se,
        mean_filter_attempts: mean_attempts,
        mean_filter_attempts_std_error: mean_se,
        mean_restarts: records.iter().map(|r| r.stats.restarts() as f64).sum::<f64>() / trials as f64,
        incomplete_trials: records.iter().filter(|r| !r.completed).count(),
        records,
    })
}
