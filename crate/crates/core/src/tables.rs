//! Regeneration of the reference numerical study: nine Goodwin oscillators
//! (`p = 3`, `M = 9`) coupled through species 2 by random weights on `[0, 20]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{oscillation_condition, required_connectivity};
use crate::error::{Error, Result};
use crate::fmt::format_sig;
use crate::harmonic::solve_balance_gains;
use crate::model::{build_laplacian, NetworkModel, OscillatorParams};
use crate::sim::{simulate, InitialState, SimConfig};
use crate::topology::{generate_topology, Topology};

pub const HILL_P: f64 = 3.0;
pub const LOOP_LENGTH: usize = 9;
pub const OSCILLATORS: usize = 9;
pub const COUPLED_SPECIES: usize = 2;
pub const DEFAULT_SEED: u64 = 42;

/// Published `(b_1..b_9, R, oscillation observed)` rows.
pub const TABLE1_REFERENCE: [([f64; 9], f64, bool); 7] = [
    ([0.5; 9], 1.6898, true),
    ([0.5, 0.6, 0.7, 0.8, 0.9, 0.8, 0.7, 0.6, 0.5], 1.5733, true),
    ([0.7; 9], 1.5571, true),
    ([0.8; 9], 1.3549, true),
    ([0.88; 9], 1.0707, true),
    ([0.9; 9], 0.9819, false),
    ([1.0; 9], 0.4721, false),
];

/// Uniform `b` values of the connectivity and period comparisons.
pub const SWEEP_B: [f64; 8] = [0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85];

/// Published required connectivity for the necessary condition.
pub const TABLE2_REFERENCE: [f64; 8] = [127.98, 59.45, 29.36, 15.19, 8.11, 4.37, 2.30, 1.09];

/// Required connectivity under an earlier sufficient condition.
/// Reference constants, not computed here.
pub const TABLE2_SUFFICIENT_REFERENCE: [f64; 8] = [178.13, 82.78, 40.94, 21.24, 11.40, 6.22, 3.35, 1.71];

/// Published simulated ("actual") collective periods.
pub const TABLE3_ACTUAL_REFERENCE: [f64; 8] = [40.9, 36.2, 32.3, 29.0, 26.2, 23.9, 22.03, 20.4];
/// Published period estimates.
pub const TABLE3_ESTIMATE_REFERENCE: [f64; 8] = [36.0, 32.7, 30.0, 27.7, 25.7, 24.0, 22.5, 21.1];

/// Shared setup of the table runs.
#[derive(Debug, Clone)]
pub struct TableSetup {
    /// Seeds the coupling weights; initial conditions use `seed + 1`.
    pub seed: u64,
    pub sim: SimConfig,
}

impl TableSetup {
    pub fn new(seed: u64) -> Self {
        let sim = SimConfig {
            initial_state: InitialState::Uniform { low: 0.0, high: 1e3, seed: seed.wrapping_add(1) },
            ..SimConfig::default()
        };
        TableSetup { seed, sim }
    }

    pub fn network(&self, b: &[f64]) -> Result<NetworkModel> {
        let w = generate_topology(&Topology::Random { low: 0.0, high: 20.0 }, OSCILLATORS, self.seed)?;
        let coupling = build_laplacian(&w)?;
        if !coupling.is_connected() {
            return Err(Error::validation(format!("seed {} produced a disconnected coupling", self.seed)));
        }
        NetworkModel::new(OscillatorParams::new(b.to_vec(), HILL_P)?, coupling, COUPLED_SPECIES)
    }
}

impl Default for TableSetup {
    fn default() -> Self {
        TableSetup::new(DEFAULT_SEED)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub b: Vec<f64>,
    pub r: f64,
    pub simulated_oscillation: bool,
    pub r_reference: f64,
    pub oscillation_reference: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub b: f64,
    pub required_v2: f64,
    pub required_v2_reference: f64,
    pub sufficient_condition_reference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table3Row {
    pub b: f64,
    pub simulated_period: Option<f64>,
    pub simulated_stderr: Option<f64>,
    /// `2 pi / mu` with the exact phase crossing.
    pub estimated_period: f64,
    /// `(estimate - simulated) / simulated` in percent.
    pub error_percent: Option<f64>,
    pub simulated_reference: f64,
    pub estimated_reference: f64,
}

pub fn table1(setup: &TableSetup) -> Result<Vec<Table1Row>> {
    TABLE1_REFERENCE
        .par_iter()
        .map(|(b, r_ref, osc_ref)| {
            let net = setup.network(b)?;
            let r = oscillation_condition(net.oscillator())?.r;
            let (_, sim) = simulate(&net, &setup.sim)?;
            Ok(Table1Row {
                b: b.to_vec(),
                r,
                simulated_oscillation: sim.oscillatory,
                r_reference: *r_ref,
                oscillation_reference: *osc_ref,
            })
        })
        .collect()
}

pub fn table2() -> Result<Vec<Table2Row>> {
    SWEEP_B
        .iter()
        .zip(TABLE2_REFERENCE.iter().zip(TABLE2_SUFFICIENT_REFERENCE))
        .map(|(&b, (&reference, sufficient))| {
            let osc = OscillatorParams::uniform(LOOP_LENGTH, b, HILL_P)?;
            Ok(Table2Row {
                b,
                required_v2: required_connectivity(&osc, OSCILLATORS, COUPLED_SPECIES)?,
                required_v2_reference: reference,
                sufficient_condition_reference: sufficient,
            })
        })
        .collect()
}

pub fn table3(setup: &TableSetup) -> Result<Vec<Table3Row>> {
    SWEEP_B
        .par_iter()
        .zip(TABLE3_ACTUAL_REFERENCE.par_iter().zip(TABLE3_ESTIMATE_REFERENCE.par_iter()))
        .map(|(&b, (&actual_ref, &estimate_ref))| {
            let net = setup.network(&[b; LOOP_LENGTH])?;
            let mu = solve_balance_gains(net.oscillator())?.mu;
            let estimated = 2.0 * std::f64::consts::PI / mu;
            let (_, sim) = simulate(&net, &setup.sim)?;
            Ok(Table3Row {
                b,
                simulated_period: sim.measured_period,
                simulated_stderr: sim.period_stderr,
                estimated_period: estimated,
                error_percent: sim.measured_period.map(|t| 100.0 * (estimated - t) / t),
                simulated_reference: actual_ref,
                estimated_reference: estimate_ref,
            })
        })
        .collect()
}

fn opt(v: Option<f64>, precision: usize) -> String {
    v.map(|x| format_sig(x, precision)).unwrap_or_default()
}

fn verdict(osc: bool) -> &'static str {
    if osc {
        "Oscillation"
    } else {
        "No oscillation"
    }
}

pub fn table1_csv(rows: &[Table1Row], precision: usize) -> String {
    let mut out = String::from("p,b1,b2,b3,b4,b5,b6,b7,b8,b9,R,simulation,R_reference,simulation_reference\n");
    for row in rows {
        let mut fields = vec![format_sig(HILL_P, precision)];
        fields.extend(row.b.iter().map(|&b| format_sig(b, precision)));
        fields.push(format_sig(row.r, precision));
        fields.push(verdict(row.simulated_oscillation).into());
        fields.push(format_sig(row.r_reference, precision));
        fields.push(verdict(row.oscillation_reference).into());
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn table2_csv(rows: &[Table2Row], precision: usize) -> String {
    let mut out = String::from("b,required_v2,required_v2_reference,sufficient_condition_reference_not_computed\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            format_sig(row.b, precision),
            format_sig(row.required_v2, precision),
            format_sig(row.required_v2_reference, precision),
            format_sig(row.sufficient_condition_reference, precision),
        ));
    }
    out
}

pub fn table3_csv(rows: &[Table3Row], precision: usize) -> String {
    let mut out = String::from(
        "b,simulated_period,simulated_stderr,estimated_period,error_percent,simulated_reference,estimated_reference\n",
    );
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            format_sig(row.b, precision),
            opt(row.simulated_period, precision),
            opt(row.simulated_stderr, precision),
            format_sig(row.estimated_period, precision),
            opt(row.error_percent, precision),
            format_sig(row.simulated_reference, precision),
            format_sig(row.estimated_reference, precision),
        ));
    }
    out
}
