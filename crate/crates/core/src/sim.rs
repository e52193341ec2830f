//! Fixed-step integration of the full nonlinear network and empirical
//! measurement of oscillation, period and synchrony.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{phase_crossing_frequency, solve_equilibrium};
use crate::error::{Error, Result};
use crate::fmt::format_sig;
use crate::model::{hill, NetworkModel};

/// RK4 is stable for real eigenvalues down to about `-2.785 / h`; keep a margin.
const RK4_STABLE_STEP_SCALE: f64 = 2.0;
/// Relative end-state deviation tolerated between the run and its half-step audit.
pub const AUDIT_TOL: f64 = 1e-5;
/// Substeps per recording step beyond which the run is refused.
pub const MAX_SUBSTEPS: f64 = 1e5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// Every entry i.i.d. uniform on `[low, high]`.
    Uniform { low: f64, high: f64, seed: u64 },
    Constant { value: f64 },
    /// The unique equilibrium, identical across oscillators.
    Equilibrium,
    /// `values[m][i]` is species `m + 1` of oscillator `i + 1`.
    Explicit { values: Vec<Vec<f64>> },
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Uniform { low: 0.0, high: 1e3, seed: 1 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordMode {
    /// Only the output species `x_M` of each oscillator.
    #[default]
    Output,
    /// The whole `M x N` state.
    Full,
}

/// When a late-window signal counts as oscillating.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OscillationCriteria {
    /// Peak-to-peak must exceed `rel_threshold * max(mean, 1e-6)`.
    pub rel_threshold: f64,
    /// Peak-to-peak over the second half of the late window must be at least
    /// this fraction of the first half's; rejects slowly decaying transients.
    pub sustain_ratio: f64,
}

impl Default for OscillationCriteria {
    fn default() -> Self {
        OscillationCriteria { rel_threshold: 1e-3, sustain_ratio: 0.8 }
    }
}

fn default_dt() -> f64 {
    0.01
}
fn default_transient() -> f64 {
    0.5
}
fn default_stride() -> usize {
    1
}
fn default_true() -> bool {
    true
}
fn default_sync_tol() -> f64 {
    1e-2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Dimensionless end time; `None` picks `max(2000, 50 * 2 pi / mu)`.
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub initial_state: InitialState,
    #[serde(default = "default_transient")]
    pub transient_fraction: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default)]
    pub record: RecordMode,
    #[serde(default)]
    pub oscillation: OscillationCriteria,
    #[serde(default = "default_sync_tol")]
    pub sync_tolerance: f64,
    /// Re-run at half the step and compare end states.
    #[serde(default = "default_true")]
    pub audit: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            t_end: None,
            dt: default_dt(),
            initial_state: InitialState::default(),
            transient_fraction: default_transient(),
            record_stride: default_stride(),
            record: RecordMode::default(),
            oscillation: OscillationCriteria::default(),
            sync_tolerance: default_sync_tol(),
            audit: true,
        }
    }
}

impl SimConfig {
    /// End time, resolving the default from the predicted period.
    pub fn resolved_t_end(&self, net: &NetworkModel) -> f64 {
        self.t_end.unwrap_or_else(|| match phase_crossing_frequency(net.oscillator().b(), None) {
            Some(mu) => 2000f64.max(50.0 * 2.0 * PI / mu),
            None => 2000.0,
        })
    }

    pub fn validate(&self, net: &NetworkModel) -> Result<()> {
        let t_end = self.resolved_t_end(net);
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::validation(format!("sim.dt must be positive, got {}", self.dt)));
        }
        if !(t_end.is_finite() && self.dt < t_end) {
            return Err(Error::validation(format!("sim.t_end = {t_end} must exceed dt = {}", self.dt)));
        }
        if !(0.0..1.0).contains(&self.transient_fraction) {
            return Err(Error::validation("sim.transient_fraction must lie in [0, 1)"));
        }
        if self.record_stride == 0 {
            return Err(Error::validation("sim.record_stride must be at least 1"));
        }
        if let Some(mu) = phase_crossing_frequency(net.oscillator().b(), None) {
            let window = (1.0 - self.transient_fraction) * t_end;
            if window < 5.0 * 2.0 * PI / mu {
                return Err(Error::validation(format!(
                    "post-transient window {window:.3} holds fewer than 5 predicted cycles of {:.3}",
                    2.0 * PI / mu
                )));
            }
        }
        Ok(())
    }
}

/// Right-hand side of the network ODE with the data it needs laid out flat.
struct VectorField {
    m: usize,
    n: usize,
    k: usize,
    b: Vec<f64>,
    p: f64,
    /// Row-major Laplacian, empty when uncoupled.
    laplacian: Vec<f64>,
}

impl VectorField {
    fn new(net: &NetworkModel) -> Self {
        let l = net.coupling().laplacian();
        let n = l.dim();
        let coupled = (0..n).any(|i| l.get(i, i) != 0.0);
        VectorField {
            m: net.oscillator().loop_length(),
            n,
            k: net.coupled_species(),
            b: net.oscillator().b().to_vec(),
            p: net.oscillator().hill_p(),
            laplacian: if coupled { l.to_rows().concat() } else { Vec::new() },
        }
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let (m, n) = (self.m, self.n);
        let last = (m - 1) * n;
        for i in 0..n {
            out[i] = hill(x[last + i], self.p) - self.b[0] * x[i];
        }
        for s in 1..m {
            let bs = self.b[s];
            for i in 0..n {
                out[s * n + i] = x[(s - 1) * n + i] - bs * x[s * n + i];
            }
        }
        if !self.laplacian.is_empty() {
            let row = (self.k - 1) * n;
            let xk = &x[row..row + n];
            for i in 0..n {
                let lrow = &self.laplacian[i * n..(i + 1) * n];
                out[row + i] -= lrow.iter().zip(xk).map(|(a, v)| a * v).sum::<f64>();
            }
        }
    }
}

/// Evaluates the vector field; `state` is `M x N`, species-major
/// (`state[m * N + i]` is species `m + 1` of oscillator `i + 1`).
pub fn rhs(net: &NetworkModel, state: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; state.len()];
    VectorField::new(net).eval(state, &mut out);
    out
}

/// The synchronized equilibrium in the flat layout used by [`rhs`].
pub fn equilibrium_state(net: &NetworkModel) -> Result<Vec<f64>> {
    let osc = net.oscillator();
    let (m, n) = (osc.loop_length(), net.size());
    let x0 = solve_equilibrium(osc.hill_p(), osc.b_product())?.x0;
    let mut species = vec![0.0; m];
    species[m - 1] = x0;
    for s in (0..m - 1).rev() {
        species[s] = osc.b()[s + 1] * species[s + 1];
    }
    Ok(species.iter().flat_map(|&v| std::iter::repeat_n(v, n)).collect())
}

pub fn initial_state(net: &NetworkModel, init: &InitialState) -> Result<Vec<f64>> {
    let (m, n) = (net.oscillator().loop_length(), net.size());
    match init {
        InitialState::Uniform { low, high, seed } => {
            if !(low.is_finite() && high.is_finite() && *low >= 0.0 && low <= high) {
                return Err(Error::validation(format!("initial range [{low}, {high}] must be nonnegative and ordered")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            Ok((0..m * n).map(|_| if high > low { rng.random_range(*low..=*high) } else { *low }).collect())
        }
        InitialState::Constant { value } => {
            if !(value.is_finite() && *value >= 0.0) {
                return Err(Error::validation("initial constant must be nonnegative"));
            }
            Ok(vec![*value; m * n])
        }
        InitialState::Equilibrium => equilibrium_state(net),
        InitialState::Explicit { values } => {
            if values.len() != m || values.iter().any(|r| r.len() != n) {
                return Err(Error::validation(format!("explicit initial state must be {m} rows of {n} values")));
            }
            if values.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::validation("explicit initial state must be finite and nonnegative"));
            }
            Ok(values.concat())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepAudit {
    pub max_relative_deviation: f64,
    /// `false` means "step too coarse".
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// One entry per recorded time: `N` outputs, or the whole flat state.
    pub states: Vec<Vec<f64>>,
    pub record: RecordMode,
    pub n_species: usize,
    pub n_oscillators: usize,
    /// Internal RK4 step actually used.
    pub effective_dt: f64,
    pub audit: Option<StepAudit>,
}

impl Trajectory {
    /// Output species `x_M` of oscillator `i` (0-based) over time.
    pub fn output(&self, i: usize) -> Vec<f64> {
        let offset = match self.record {
            RecordMode::Output => 0,
            RecordMode::Full => (self.n_species - 1) * self.n_oscillators,
        };
        self.states.iter().map(|s| s[offset + i]).collect()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Writes `t, x<M>_1, ..., x<M>_N` (or every species in full mode).
    pub fn write_csv<W: Write>(&self, mut w: W, precision: usize) -> std::io::Result<()> {
        let (m, n) = (self.n_species, self.n_oscillators);
        let mut header = vec!["t".to_string()];
        match self.record {
            RecordMode::Output => header.extend((1..=n).map(|i| format!("x{m}_{i}"))),
            RecordMode::Full => {
                for s in 1..=m {
                    header.extend((1..=n).map(|i| format!("x{s}_{i}")));
                }
            }
        }
        writeln!(w, "{}", header.join(","))?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let mut line = format_sig(*t, precision);
            for v in s {
                line.push(',');
                line.push_str(&format_sig(*v, precision));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

struct RunPlan {
    n_outer: usize,
    substeps: usize,
    h: f64,
    stride: usize,
    record: RecordMode,
}

fn run(field: &VectorField, start: &[f64], dt: f64, plan: &RunPlan) -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<f64>)> {
    let len = start.len();
    let mut x = start.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len]);
    let out_offset = (field.m - 1) * field.n;
    let snapshot = |x: &[f64]| match plan.record {
        RecordMode::Output => x[out_offset..].to_vec(),
        RecordMode::Full => x.to_vec(),
    };
    let mut times = vec![0.0];
    let mut states = vec![snapshot(&x)];
    let h = plan.h;

    for step in 1..=plan.n_outer {
        for _ in 0..plan.substeps {
            field.eval(&x, &mut k1);
            for j in 0..len {
                tmp[j] = x[j] + 0.5 * h * k1[j];
            }
            field.eval(&tmp, &mut k2);
            for j in 0..len {
                tmp[j] = x[j] + 0.5 * h * k2[j];
            }
            field.eval(&tmp, &mut k3);
            for j in 0..len {
                tmp[j] = x[j] + h * k3[j];
            }
            field.eval(&tmp, &mut k4);
            for j in 0..len {
                x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration { time: step as f64 * dt, reason: "state became non-finite".into() });
        }
        if step % plan.stride == 0 || step == plan.n_outer {
            times.push(step as f64 * dt);
            states.push(snapshot(&x));
        }
    }
    Ok((times, states, x))
}

/// Classical RK4 with fixed step.
///
/// The requested `dt` is the recording grid; when the coupling is strong it
/// is split into equal substeps so that `h * (max b + upsilon_N + max|f'|)`
/// stays inside the RK4 stability interval.
pub fn integrate(net: &NetworkModel, cfg: &SimConfig) -> Result<Trajectory> {
    cfg.validate(net)?;
    let t_end = cfg.resolved_t_end(net);
    let start = initial_state(net, &cfg.initial_state)?;
    let field = VectorField::new(net);

    let osc = net.oscillator();
    let stiffness = osc.b().iter().copied().fold(0.0, f64::max) + net.coupling().spectral_radius() + osc.hill_p();
    let substeps = (cfg.dt * stiffness / RK4_STABLE_STEP_SCALE).ceil();
    if !(substeps <= MAX_SUBSTEPS) {
        return Err(Error::Integration {
            time: 0.0,
            reason: format!("stiffness {stiffness:.3e} needs {substeps:.3e} substeps per step of {}", cfg.dt),
        });
    }
    let substeps = (substeps as usize).max(1);
    let n_outer = (t_end / cfg.dt).round() as usize;
    let plan = RunPlan { n_outer, substeps, h: cfg.dt / substeps as f64, stride: cfg.record_stride, record: cfg.record };

    let (times, states, end) = run(&field, &start, cfg.dt, &plan)?;

    let audit = if cfg.audit {
        let fine = RunPlan { substeps: 2 * substeps, h: plan.h / 2.0, stride: usize::MAX, ..plan };
        let (_, _, fine_end) = run(&field, &start, cfg.dt, &fine)?;
        let scale = fine_end.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-12);
        let dev = end.iter().zip(&fine_end).fold(0.0f64, |a, (x, y)| a.max((x - y).abs())) / scale;
        Some(StepAudit { max_relative_deviation: dev, passed: dev < AUDIT_TOL })
    } else {
        None
    };

    Ok(Trajectory {
        times,
        states,
        record: cfg.record,
        n_species: osc.loop_length(),
        n_oscillators: net.size(),
        effective_dt: plan.h,
        audit,
    })
}

fn late_start(times: &[f64], transient_fraction: f64) -> usize {
    let (Some(&t0), Some(&t1)) = (times.first(), times.last()) else { return 0 };
    let cut = t0 + transient_fraction * (t1 - t0);
    times.partition_point(|&t| t < cut)
}

fn mean_and_ptp(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    (mean, hi - lo)
}

/// Whether a (late-window) signal shows a sustained oscillation.
pub fn is_oscillating(values: &[f64], criteria: &OscillationCriteria) -> bool {
    if values.len() < 4 {
        return false;
    }
    let (mean, ptp) = mean_and_ptp(values);
    if !(ptp > criteria.rel_threshold * mean.max(1e-6)) {
        return false;
    }
    let half = values.len() / 2;
    let (_, first) = mean_and_ptp(&values[..half]);
    let (_, second) = mean_and_ptp(&values[half..]);
    second >= criteria.sustain_ratio * first
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodMeasurement {
    pub period: f64,
    /// Standard error of the mean crossing gap.
    pub stderr: f64,
    /// Number of full cycles (crossing gaps) averaged.
    pub cycles: usize,
}

/// Minimum number of complete cycles for a period to be reported.
pub const MIN_CYCLES: usize = 5;

/// Period from upward mean crossings of a sampled signal after the transient.
pub fn measure_period_signal(
    times: &[f64],
    values: &[f64],
    transient_fraction: f64,
    criteria: &OscillationCriteria,
) -> Option<PeriodMeasurement> {
    let start = late_start(times, transient_fraction);
    let (t, v) = (&times[start..], &values[start..]);
    if !is_oscillating(v, criteria) {
        return None;
    }
    let (mean, _) = mean_and_ptp(v);
    let mut crossings = Vec::new();
    for i in 0..v.len().saturating_sub(1) {
        let (y0, y1) = (v[i] - mean, v[i + 1] - mean);
        if y0 < 0.0 && y1 >= 0.0 {
            crossings.push(t[i] - y0 * (t[i + 1] - t[i]) / (y1 - y0));
        }
    }
    let gaps: Vec<f64> = crossings.windows(2).map(|w| w[1] - w[0]).collect();
    if gaps.len() < MIN_CYCLES {
        return None;
    }
    let n = gaps.len() as f64;
    let period = gaps.iter().sum::<f64>() / n;
    let var = gaps.iter().map(|g| (g - period).powi(2)).sum::<f64>() / (n - 1.0);
    Some(PeriodMeasurement { period, stderr: (var / n).sqrt(), cycles: gaps.len() })
}

/// Period of oscillator 1's output species.
pub fn measure_period(traj: &Trajectory, transient_fraction: f64, criteria: &OscillationCriteria) -> Option<PeriodMeasurement> {
    measure_period_signal(&traj.times, &traj.output(0), transient_fraction, criteria)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncMeasurement {
    pub sync_error: f64,
    pub synchronized: bool,
}

/// Late-window largest output spread across oscillators, normalized by
/// oscillator 1's peak-to-peak (or by its mean when it is not oscillating).
/// A single oscillator is trivially synchronized.
pub fn measure_sync(traj: &Trajectory, transient_fraction: f64, criteria: &OscillationCriteria, tolerance: f64) -> SyncMeasurement {
    let n = traj.n_oscillators;
    if n < 2 {
        return SyncMeasurement { sync_error: 0.0, synchronized: true };
    }
    let start = late_start(&traj.times, transient_fraction);
    let outputs: Vec<Vec<f64>> = (0..n).map(|i| traj.output(i)[start..].to_vec()).collect();
    let reference = &outputs[0];
    let (mean, ptp) = mean_and_ptp(reference);
    let norm = if is_oscillating(reference, criteria) { ptp } else { mean.abs() }.max(1e-12);
    let mut spread = 0.0f64;
    for t in 0..reference.len() {
        let (lo, hi) = outputs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), o| (lo.min(o[t]), hi.max(o[t])));
        spread = spread.max(hi - lo);
    }
    let sync_error = spread / norm;
    SyncMeasurement { sync_error, synchronized: sync_error < tolerance }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Amplitude {
    pub mean: f64,
    pub peak_to_peak: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub oscillatory: bool,
    pub measured_period: Option<f64>,
    pub period_stderr: Option<f64>,
    pub cycles: usize,
    pub sync_error: f64,
    pub synchronized: bool,
    /// Late-window statistics of each oscillator's output species.
    pub amplitudes: Vec<Amplitude>,
    pub t_end: f64,
    pub effective_dt: f64,
    pub step_audit: Option<StepAudit>,
}

/// Summarizes a trajectory.
pub fn summarize(traj: &Trajectory, cfg: &SimConfig) -> SimulationResult {
    let start = late_start(&traj.times, cfg.transient_fraction);
    let reference = traj.output(0);
    let oscillatory = is_oscillating(&reference[start..], &cfg.oscillation);
    let period = measure_period(traj, cfg.transient_fraction, &cfg.oscillation);
    let sync = measure_sync(traj, cfg.transient_fraction, &cfg.oscillation, cfg.sync_tolerance);
    let amplitudes = (0..traj.n_oscillators)
        .map(|i| {
            let (mean, peak_to_peak) = mean_and_ptp(&traj.output(i)[start..]);
            Amplitude { mean, peak_to_peak }
        })
        .collect();
    SimulationResult {
        oscillatory,
        measured_period: period.map(|p| p.period),
        period_stderr: period.map(|p| p.stderr),
        cycles: period.map_or(0, |p| p.cycles),
        sync_error: sync.sync_error,
        synchronized: sync.synchronized,
        amplitudes,
        t_end: traj.times.last().copied().unwrap_or(0.0),
        effective_dt: traj.effective_dt,
        step_audit: traj.audit,
    }
}

/// Integrates and summarizes in one go.
pub fn simulate(net: &NetworkModel, cfg: &SimConfig) -> Result<(Trajectory, SimulationResult)> {
    let traj = integrate(net, cfg)?;
    let result = summarize(&traj, cfg);
    Ok((traj, result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::model::{build_laplacian, OscillatorParams};

    fn single(b: f64) -> NetworkModel {
        let osc = OscillatorParams::uniform(9, b, 3.0).unwrap();
        NetworkModel::new(osc, build_laplacian(&Matrix::zeros(1)).unwrap(), 2).unwrap()
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let net = single(0.7);
        let x = equilibrium_state(&net).unwrap();
        assert!(rhs(&net, &x).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn synthetic_sine_period() {
        let times: Vec<f64> = (0..=20000).map(|i| i as f64 * 0.01).collect();
        let values: Vec<f64> = times.iter().map(|t| 2.0 + (2.0 * PI * t / 7.0).sin()).collect();
        let m = measure_period_signal(&times, &values, 0.5, &OscillationCriteria::default()).unwrap();
        assert!((m.period - 7.0).abs() < 0.01);
        assert!(m.cycles >= MIN_CYCLES);
    }

    #[test]
    fn decaying_signal_is_not_sustained() {
        let times: Vec<f64> = (0..=20000).map(|i| i as f64 * 0.01).collect();
        let values: Vec<f64> = times.iter().map(|t| 2.0 + (-t / 30.0).exp() * (2.0 * PI * t / 7.0).sin()).collect();
        assert!(measure_period_signal(&times, &values, 0.5, &OscillationCriteria::default()).is_none());
    }

    #[test]
    fn flat_signal_has_no_period() {
        let times: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let values = vec![3.0; 1000];
        assert!(measure_period_signal(&times, &values, 0.5, &OscillationCriteria::default()).is_none());
    }

    #[test]
    fn config_validation() {
        let net = single(0.5);
        let bad = SimConfig { dt: 0.0, ..SimConfig::default() };
        assert!(bad.validate(&net).is_err());
        let short = SimConfig { t_end: Some(100.0), ..SimConfig::default() };
        assert!(short.validate(&net).is_err());
        let frac = SimConfig { transient_fraction: 1.0, ..SimConfig::default() };
        assert!(frac.validate(&net).is_err());
        assert_eq!(SimConfig::default().resolved_t_end(&net), 2000.0);
    }

    #[test]
    fn explicit_initial_state_shape_checked() {
        let net = single(0.5);
        let init = InitialState::Explicit { values: vec![vec![1.0]; 8] };
        assert!(initial_state(&net, &init).is_err());
    }
}
