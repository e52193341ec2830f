//! Cartesian parameter sweeps over a base configuration.

use rayon::prelude::*;

use crate::analysis::{oscillation_condition, required_connectivity, sync_condition};
use crate::config::{ModelSection, PerSpecies, RunConfig, SweepParameter};
use crate::error::{Error, Result};
use crate::fmt::format_sig;
use crate::harmonic::solve_balance_gains;
use crate::sim::simulate;

/// One evaluated grid point. Optional values are blank in the CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub point: Vec<f64>,
    pub r: f64,
    pub oscillatory: bool,
    pub mu: Option<f64>,
    pub period_estimate: Option<f64>,
    pub upsilon2: Option<f64>,
    pub required_v2: Option<f64>,
    pub sync_necessary: Option<bool>,
    pub sim: Option<SweepSim>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSim {
    pub oscillatory: bool,
    pub period: Option<f64>,
    pub period_stderr: Option<f64>,
    pub sync_error: f64,
    pub synchronized: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub parameters: Vec<SweepParameter>,
    pub simulate: bool,
    pub rows: Vec<SweepRow>,
}

/// Grid points in row order: the first axis varies slowest.
pub fn grid(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect()
    })
}

fn apply(base: &RunConfig, names: &[SweepParameter], point: &[f64]) -> Result<RunConfig> {
    let mut cfg = base.clone();
    for (name, &v) in names.iter().zip(point) {
        match name {
            SweepParameter::B => match &mut cfg.model {
                ModelSection::Dimensionless { m, b, .. } => {
                    let len = match (&*b, *m) {
                        (PerSpecies::Each(v), _) => v.len(),
                        (PerSpecies::Uniform(_), Some(m)) => m,
                        (PerSpecies::Uniform(_), None) => {
                            return Err(Error::validation("model.dimensionless.m: required when b is a single number"))
                        }
                    };
                    *m = Some(len);
                    *b = PerSpecies::Uniform(v);
                }
                ModelSection::Dimensional(_) => {
                    return Err(Error::validation("sweep: parameter `b` needs a dimensionless model"));
                }
            },
            SweepParameter::P => match &mut cfg.model {
                ModelSection::Dimensionless { p, .. } => *p = v,
                ModelSection::Dimensional(d) => d.hill_p = v,
            },
            SweepParameter::CouplingScale => cfg.network.weight_scale *= v,
        }
    }
    Ok(cfg)
}

fn evaluate(index: usize, point: Vec<f64>, cfg: &RunConfig, with_sim: bool) -> Result<SweepRow> {
    let net = cfg.network_model()?;
    let osc = net.oscillator();
    let verdict = oscillation_condition(osc)?;
    let mu = solve_balance_gains(osc).ok().map(|g| g.mu);
    let sync = sync_condition(&net).ok();
    let required_v2 = if net.size() >= 2 {
        Some(required_connectivity(osc, net.size(), net.coupled_species())?)
    } else {
        None
    };
    let sim = if with_sim {
        let (_, s) = simulate(&net, &cfg.sim)?;
        Some(SweepSim {
            oscillatory: s.oscillatory,
            period: s.measured_period,
            period_stderr: s.period_stderr,
            sync_error: s.sync_error,
            synchronized: s.synchronized,
        })
    } else {
        None
    };
    Ok(SweepRow {
        index,
        point,
        r: verdict.r,
        oscillatory: verdict.oscillatory,
        mu,
        period_estimate: mu.map(|m| 2.0 * std::f64::consts::PI / m),
        upsilon2: net.coupling().algebraic_connectivity(),
        required_v2,
        sync_necessary: sync.map(|s| s.necessary_condition_satisfied),
        sim,
    })
}

/// Evaluates every grid point of `cfg.sweep`, concurrently on at most
/// `threads` workers (all available when `None`). Row order is the grid order.
pub fn run_sweep(cfg: &RunConfig, threads: Option<usize>) -> Result<SweepOutput> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| Error::validation("sweep: block missing from config"))?;
    if sweep.parameters.is_empty() {
        return Err(Error::validation("sweep.parameters: empty grid"));
    }
    let names: Vec<SweepParameter> = sweep.parameters.iter().map(|a| a.name).collect();
    let axes = sweep.parameters.iter().map(|a| a.points()).collect::<Result<Vec<_>>>()?;
    let points = grid(&axes);
    if points.is_empty() || points[0].is_empty() {
        return Err(Error::validation("sweep.parameters: empty grid"));
    }

    let work = || -> Result<Vec<SweepRow>> {
        points
            .into_par_iter()
            .enumerate()
            .map(|(i, point)| {
                let c = apply(cfg, &names, &point)?;
                evaluate(i, point, &c, sweep.simulate)
            })
            .collect()
    };
    let rows = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    Ok(SweepOutput { parameters: names, simulate: sweep.simulate, rows })
}

fn name(p: SweepParameter) -> &'static str {
    match p {
        SweepParameter::B => "b",
        SweepParameter::P => "p",
        SweepParameter::CouplingScale => "coupling_scale",
    }
}

impl SweepOutput {
    /// Long-form CSV, one row per grid point.
    pub fn to_csv(&self, precision: usize) -> String {
        let f = |v: f64| format_sig(v, precision);
        let o = |v: Option<f64>| v.map(f).unwrap_or_default();
        let mut header = vec!["index".to_string()];
        header.extend(self.parameters.iter().map(|&p| name(p).to_string()));
        header.extend(
            ["R", "oscillatory", "mu", "period_estimate", "upsilon2", "required_v2", "sync_necessary"].map(String::from),
        );
        if self.simulate {
            header.extend(
                ["sim_oscillatory", "sim_period", "sim_period_stderr", "sync_error", "synchronized"].map(String::from),
            );
        }
        let mut out = header.join(",");
        out.push('\n');
        for row in &self.rows {
            let mut fields = vec![row.index.to_string()];
            fields.extend(row.point.iter().map(|&v| f(v)));
            fields.push(f(row.r));
            fields.push(row.oscillatory.to_string());
            fields.push(o(row.mu));
            fields.push(o(row.period_estimate));
            fields.push(o(row.upsilon2));
            fields.push(o(row.required_v2));
            fields.push(row.sync_necessary.map(|b| b.to_string()).unwrap_or_default());
            if let Some(s) = &row.sim {
                fields.push(s.oscillatory.to_string());
                fields.push(o(s.period));
                fields.push(o(s.period_stderr));
                fields.push(f(s.sync_error));
                fields.push(s.synchronized.to_string());
            }
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}
