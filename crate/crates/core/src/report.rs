//! Full analysis pipeline assembled into one serializable report.

use serde::{Deserialize, Serialize};

use crate::analysis::{
    mode_crossing, oscillation_verdict, solve_equilibrium, sync_condition, EquilibriumInfo, ModeCrossing,
    OscillationVerdict, SyncVerdict,
};
use crate::error::{Error, Result};
use crate::harmonic::{estimate_period, mode_offsets, mode_polynomial, solve_amplitudes, AmplitudeSolution, PeriodEstimate};
use crate::model::NetworkModel;
use crate::sim::{simulate, SimConfig, SimulationResult};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// A report section that is either present or absent with a stated reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum Section<T> {
    Present(T),
    Absent { reason: String },
}

impl<T> Section<T> {
    pub fn absent(reason: impl Into<String>) -> Self {
        Section::Absent { reason: reason.into() }
    }

    pub fn present(&self) -> Option<&T> {
        match self {
            Section::Present(v) => Some(v),
            Section::Absent { .. } => None,
        }
    }

    pub fn reason(&self) -> Option<&str> {
        match self {
            Section::Present(_) => None,
            Section::Absent { reason } => Some(reason),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParameters {
    pub loop_length: usize,
    pub oscillators: usize,
    pub coupled_species: usize,
    pub b: Vec<f64>,
    pub hill_p: f64,
    pub time_scale: Option<f64>,
    pub laplacian_eigenvalues: Vec<f64>,
}

/// Linearized subsystem of one coupling mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeTransfer {
    /// 1-based.
    pub mode: usize,
    pub upsilon: f64,
    /// Ascending coefficients of `(s + b_k + upsilon) prod_{m != k} (s + b_m)`,
    /// the denominator of the open-loop mode transfer function.
    pub open_loop_denominator: Vec<f64>,
    /// Open-loop denominator plus `sigma`: the closed-loop mode denominator.
    pub closed_loop_denominator: Vec<f64>,
    pub crossing: Option<ModeCrossing>,
    /// `sigma > kappa_j`
    pub unstable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub parameters: ReportParameters,
    pub equilibrium: EquilibriumInfo,
    pub oscillation: OscillationVerdict,
    pub sync: Section<SyncVerdict>,
    pub period: Section<PeriodEstimate>,
    /// Amplitude (harmonic-balance ansatz).
    pub amplitudes: Section<AmplitudeSolution>,
    pub mode_transfer_data: Vec<ModeTransfer>,
    pub sim_crosscheck: Section<SimulationResult>,
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One-line summary such as `R=1.6980 OSCILLATORY`.
    pub fn summary_line(&self) -> String {
        let verdict = if self.oscillation.oscillatory { "OSCILLATORY" } else { "NOT OSCILLATORY" };
        format!("R={:.4} {verdict}", self.oscillation.r)
    }
}

/// Mode `j` is unstable when the linear gain `sigma` exceeds that mode's
/// crossing magnitude. Modes without a crossing are stable.
pub fn mode_is_unstable(crossing: Option<ModeCrossing>, sigma: f64) -> bool {
    crossing.is_some_and(|c| sigma > c.kappa)
}

/// Per-mode instability verdicts, mode 1 first.
pub fn mode_instability_map(report: &AnalysisReport) -> Vec<bool> {
    report.mode_transfer_data.iter().map(|m| m.unstable).collect()
}

fn mode_transfer_data(net: &NetworkModel, sigma: f64) -> Vec<ModeTransfer> {
    let osc = net.oscillator();
    let k = net.coupled_species();
    mode_offsets(net.coupling())
        .into_iter()
        .enumerate()
        .map(|(j, upsilon)| {
            let open = mode_polynomial(osc.b(), k, upsilon);
            let mut closed = open.clone();
            closed[0] += sigma;
            let crossing = mode_crossing(osc.b(), k, upsilon);
            ModeTransfer {
                mode: j + 1,
                upsilon,
                open_loop_denominator: open,
                closed_loop_denominator: closed,
                crossing,
                unstable: mode_is_unstable(crossing, sigma),
            }
        })
        .collect()
}

/// Runs every analysis step and, when `with_sim` is given, a simulation
/// cross-check. Steps that do not apply are recorded as absent with a reason.
pub fn analyze(net: &NetworkModel, with_sim: Option<&SimConfig>) -> Result<AnalysisReport> {
    let osc = net.oscillator();
    let equilibrium = solve_equilibrium(osc.hill_p(), osc.b_product())?;
    let oscillation = oscillation_verdict(osc, &equilibrium);

    let sync = match sync_condition(net) {
        Ok(v) => Section::Present(v),
        Err(Error::SingleOscillator) => Section::absent("single oscillator"),
        Err(Error::Disconnected) => Section::absent("upsilon_2 = 0: coupling is disconnected"),
        Err(e) => return Err(e),
    };

    let period = match estimate_period(net) {
        Ok(p) => Section::Present(p),
        Err(Error::NoPhaseCrossing) => Section::absent("no phase crossing (loop length M <= 2)"),
        Err(e) => return Err(e),
    };

    let amplitudes = if oscillation.oscillatory {
        Section::Present(solve_amplitudes(osc)?)
    } else {
        Section::absent(format!("no oscillation predicted (R = {:.4} <= 1)", oscillation.r))
    };

    let sim_crosscheck = match with_sim {
        None => Section::absent("simulation not requested"),
        Some(cfg) => match simulate(net, cfg) {
            Ok((_, result)) => Section::Present(result),
            Err(e) => Section::absent(e.to_string()),
        },
    };

    Ok(AnalysisReport {
        schema_version: REPORT_SCHEMA_VERSION,
        parameters: ReportParameters {
            loop_length: osc.loop_length(),
            oscillators: net.size(),
            coupled_species: net.coupled_species(),
            b: osc.b().to_vec(),
            hill_p: osc.hill_p(),
            time_scale: osc.time_scale(),
            laplacian_eigenvalues: net.coupling().eigenvalues().to_vec(),
        },
        equilibrium,
        oscillation,
        sync,
        period,
        amplitudes,
        mode_transfer_data: mode_transfer_data(net, equilibrium.sigma),
        sim_crosscheck,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::model::{build_laplacian, OscillatorParams};

    fn net(n_weights: Matrix, b: f64) -> NetworkModel {
        let osc = OscillatorParams::uniform(9, b, 3.0).unwrap();
        NetworkModel::new(osc, build_laplacian(&n_weights).unwrap(), 2).unwrap()
    }

    #[test]
    fn single_oscillator_has_no_sync_section() {
        let r = analyze(&net(Matrix::zeros(1), 0.5), None).unwrap();
        assert_eq!(r.sync.reason(), Some("single oscillator"));
        assert_eq!(r.mode_transfer_data.len(), 1);
        assert_eq!(r.mode_transfer_data[0].upsilon, 0.0);
    }

    #[test]
    fn disconnected_coupling_is_reported() {
        let r = analyze(&net(Matrix::zeros(2), 0.5), None).unwrap();
        assert!(r.sync.reason().unwrap().contains("upsilon_2 = 0"));
    }

    #[test]
    fn closed_loop_constant_term() {
        let w = Matrix::from_rows(&[vec![0.0, 4.0], vec![4.0, 0.0]]).unwrap();
        let r = analyze(&net(w, 0.6), None).unwrap();
        let others: f64 = 0.6f64.powi(8);
        for m in &r.mode_transfer_data {
            let expect = (0.6 + m.upsilon) * others + r.equilibrium.sigma;
            assert!((m.closed_loop_denominator[0] - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn absent_sections_keep_their_keys() {
        let r = analyze(&net(Matrix::zeros(1), 1.0), None).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["sync"]["status"], "absent");
        assert_eq!(v["sim_crosscheck"]["value"]["reason"], "simulation not requested");
        assert_eq!(v["amplitudes"]["status"], "absent");
        let back: AnalysisReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back.summary_line(), r.summary_line());
    }
}
