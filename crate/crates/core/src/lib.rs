//! Simulation of energy-harvesting wireless networks.
//!
//! Each transmitter runs an online power-allocation policy that only sees the
//! current channel gains. The battery grants what it holds, and the network
//! utility is averaged over a finite number of slots. Running the same
//! random streams without a battery gives the baseline the EH network is
//! compared against.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to one of them.

pub mod battery;
pub mod error;
pub mod experiments;
pub mod policies;
pub mod scalar;
pub mod simulator;
pub mod stochastic;
pub mod utilities;

pub use battery::{classify_regime, BatteryState, Power, Regime, RegimeLimits};
pub use error::{ConfigError, LambdaError, LengthMismatch, PowerError, QuadratureError};
pub use policies::{
    solve_lambda, AmplifierModel, LambdaFamily, LambdaThreshold, MultihopSchedule, PolicySpec,
};
pub use scalar::{CompensatedSum, Scalar};
pub use simulator::{
    paired_gap, run_eh, run_non_eh, simulate, GapStats, LinkSpec, Mode, NetworkTopology,
    NodeConfig, RunSummary, SimulationConfig, SlotRecord,
};
pub use stochastic::{derive_seed, FadingProcess, HarvestProcess, SeededStream};
pub use utilities::{Direction, UtilitySpec};

pub type Power64 = Power<f64>;
pub type Power32 = Power<f32>;
pub type BatteryState64 = BatteryState<f64>;
pub type BatteryState32 = BatteryState<f32>;
pub type SimulationConfig64 = SimulationConfig<f64>;
pub type SimulationConfig32 = SimulationConfig<f32>;
pub type RunSummary64 = RunSummary<f64>;
pub type RunSummary32 = RunSummary<f32>;
