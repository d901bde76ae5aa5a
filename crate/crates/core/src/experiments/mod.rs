//! Figure sweeps: configuration, scenario construction, parallel trials and
//! CSV output.
//!
//! Every trial seed is derived from `(master seed, grid index, trial index)`,
//! so the rows are the same whatever the thread count.

mod closed_form;
mod spec;

pub use closed_form::{closed_form_baseline, mac_ber, outage_probability};
pub use spec::{ExperimentId, GridPoint, SweepSpec};

use std::io;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::battery::{Power, RegimeLimits};
use crate::error::{ConfigError, LambdaError, PowerError, QuadratureError};
use crate::policies::{
    solve_lambda, AmplifierModel, LambdaFamily, LambdaThreshold, MultihopSchedule, PolicySpec,
};
use crate::simulator::{
    mean_and_std_err, run_eh, run_non_eh, NetworkTopology, NodeConfig, SimulationConfig,
};
use crate::stochastic::{derive_seed, FadingProcess, HarvestProcess};
use crate::utilities::{OutageConfig, UtilitySpec};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Lambda(#[from] LambdaError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl From<PowerError> for ExperimentError {
    fn from(e: PowerError) -> Self {
        ExperimentError::Config(e.into())
    }
}

impl ExperimentError {
    /// Failure of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            ExperimentError::Lambda(_) | ExperimentError::Quadrature(_)
        )
    }
}

/// `10^(x/10)`.
pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowMode {
    Eh,
    NonEh,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub experiment_id: &'static str,
    pub p_in_db: f64,
    pub n: u64,
    pub b_max_ratio: f64,
    pub m: usize,
    pub mode: RowMode,
    pub u_mean: f64,
    pub u_std_err: f64,
    pub mismatch_fraction_mean: f64,
}

impl SweepSpec {
    pub fn amplifier(&self) -> Result<AmplifierModel<f64>, ConfigError> {
        AmplifierModel::new(self.epsilon, self.p_circuit_db.map_or(0.0, db_to_linear))
    }
}

/// Water level for a budget of `p`, or `None` when the budget cannot even
/// cover the circuit power and the transmitter has to stay silent.
pub(crate) fn waterfill_lambda(
    p: f64,
    amp: &AmplifierModel<f64>,
) -> Result<Option<LambdaThreshold<f64>>, LambdaError> {
    match solve_lambda(p, &LambdaFamily::Waterfill(*amp), 1.0) {
        Ok(l) => Ok(Some(l)),
        Err(LambdaError::BelowCircuitFloor { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Simulation configuration of one grid point, seed left at 0.
pub fn scenario(
    spec: &SweepSpec,
    point: &GridPoint,
) -> Result<SimulationConfig<f64>, ExperimentError> {
    let p = db_to_linear(point.p_in_db);
    let capacity = Some(Power::new(point.b_max_ratio * p)?);
    let harvest = HarvestProcess::exponential(p)?;
    let unit = FadingProcess::rayleigh(1.0)?;
    let node = |policy| NodeConfig {
        harvest,
        capacity,
        policy,
    };
    let m = point.m;
    let (topology, nodes, utility) = match spec.experiment {
        ExperimentId::Fig1 => (
            NetworkTopology::point_to_point(unit),
            vec![node(PolicySpec::Constant(Power::new(p)?))],
            UtilitySpec::Outage(OutageConfig::new(spec.r0)?),
        ),
        ExperimentId::Fig2 | ExperimentId::Fig3 => {
            let amp = spec.amplifier()?;
            let policy = match waterfill_lambda(p, &amp)? {
                Some(lambda) => PolicySpec::Waterfill { amp, lambda },
                None => PolicySpec::Constant(Power::zero()),
            };
            (
                NetworkTopology::point_to_point(unit),
                vec![node(policy)],
                UtilitySpec::AmplifierRate(amp),
            )
        }
        ExperimentId::Fig4 => {
            let lambda = solve_lambda(p, &LambdaFamily::Broadcast { receivers: m }, 1.0)?;
            (
                NetworkTopology::broadcast(m, unit),
                vec![node(PolicySpec::Broadcast { lambda })],
                UtilitySpec::BroadcastSumRate,
            )
        }
        ExperimentId::Fig5 => (
            NetworkTopology::multiple_access(m, unit),
            vec![node(PolicySpec::Constant(Power::new(p)?)); m],
            UtilitySpec::MacBpskBer,
        ),
        ExperimentId::Fig6 => {
            // Hop gain grows with the square of the hop count for a fixed
            // end-to-end distance. The first half of the chain is
            // non-absorbing, the rest is capped at `p_lim_ratio · P̄_in`.
            let hop = FadingProcess::rayleigh((m * m) as f64)?;
            let nodes = (1..=m)
                .map(|k| {
                    let lim = if k <= m / 2 { p } else { spec.p_lim_ratio * p };
                    let limits = RegimeLimits::new(Power::new(p)?, Power::new(lim)?)?;
                    Ok(node(PolicySpec::Multihop(MultihopSchedule::for_limits(
                        k, &limits,
                    )?)))
                })
                .collect::<Result<Vec<_>, ExperimentError>>()?;
            (
                NetworkTopology::multihop(m, hop),
                nodes,
                UtilitySpec::MultihopAf { hops: m },
            )
        }
    };
    let cfg = SimulationConfig {
        topology,
        slots: point.n,
        nodes,
        utility,
        seed: 0,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn trial_seed(master: u64, point_index: usize, trial: usize) -> u64 {
    derive_seed(master, &[point_index as u64, trial as u64])
}

struct TrialResult {
    eh: f64,
    non_eh: f64,
    mismatch: f64,
}

/// Runs every grid point of `spec` and returns its rows: EH, non-EH and the
/// reference value, in grid order. Uses the current rayon pool.
pub fn run_experiment(spec: &SweepSpec) -> Result<Vec<CsvRow>, ExperimentError> {
    spec.validate()?;
    let points = spec.grid();
    let configs = points
        .par_iter()
        .map(|pt| scenario(spec, pt))
        .collect::<Result<Vec<_>, _>>()?;
    let baselines = points
        .par_iter()
        .map(|pt| closed_form_baseline(spec, pt))
        .collect::<Result<Vec<_>, _>>()?;

    let trials = spec.trials;
    let results = (0..points.len() * trials)
        .into_par_iter()
        .map(|job| {
            let (pi, t) = (job / trials, job % trials);
            let cfg = configs[pi].with_seed(trial_seed(spec.seed, pi, t));
            let eh = run_eh(&cfg)?;
            let non_eh = run_non_eh(&cfg)?;
            Ok(TrialResult {
                eh: eh.avg_utility,
                non_eh: non_eh.avg_utility,
                mismatch: eh.network_mismatch_fraction,
            })
        })
        .collect::<Result<Vec<_>, ConfigError>>()?;

    let mut rows = Vec::with_capacity(points.len() * 3);
    for ((pt, chunk), baseline) in points.iter().zip(results.chunks(trials)).zip(baselines) {
        let row = |mode, (u_mean, u_std_err), mismatch_fraction_mean| CsvRow {
            experiment_id: spec.experiment.as_str(),
            p_in_db: pt.p_in_db,
            n: pt.n,
            b_max_ratio: pt.b_max_ratio,
            m: pt.m,
            mode,
            u_mean,
            u_std_err,
            mismatch_fraction_mean,
        };
        let eh: Vec<f64> = chunk.iter().map(|r| r.eh).collect();
        let non_eh: Vec<f64> = chunk.iter().map(|r| r.non_eh).collect();
        let mismatch: Vec<f64> = chunk.iter().map(|r| r.mismatch).collect();
        rows.push(row(
            RowMode::Eh,
            mean_and_std_err(&eh),
            mean_and_std_err(&mismatch).0,
        ));
        rows.push(row(RowMode::NonEh, mean_and_std_err(&non_eh), 0.0));
        rows.push(row(RowMode::ClosedForm, (baseline, 0.0), 0.0));
    }
    Ok(rows)
}

/// Writes `rows` with a header line.
pub fn write_csv<W: io::Write>(rows: &[CsvRow], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record([
        "experiment_id",
        "p_in_db",
        "n",
        "b_max_ratio",
        "m",
        "mode",
        "u_mean",
        "u_std_err",
        "mismatch_fraction_mean",
    ])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
