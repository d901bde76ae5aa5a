use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use super::ExperimentError;
use crate::error::ConfigError;

/// Figure setups the runner knows how to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentId {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 6] = [
        ExperimentId::Fig1,
        ExperimentId::Fig2,
        ExperimentId::Fig3,
        ExperimentId::Fig4,
        ExperimentId::Fig5,
        ExperimentId::Fig6,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::Fig1 => "fig1",
            ExperimentId::Fig2 => "fig2",
            ExperimentId::Fig3 => "fig3",
            ExperimentId::Fig4 => "fig4",
            ExperimentId::Fig5 => "fig5",
            ExperimentId::Fig6 => "fig6",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ExperimentId::Fig1 => "point-to-point outage, constant power",
            ExperimentId::Fig2 => "point-to-point rate, water-filling with an ideal amplifier",
            ExperimentId::Fig3 => {
                "point-to-point rate, water-filling with amplifier loss and circuit power"
            }
            ExperimentId::Fig4 => "broadcast sum rate, serve the strongest of M receivers",
            ExperimentId::Fig5 => "multiple-access BPSK error rate, M constant-power transmitters",
            ExperimentId::Fig6 => "half-duplex amplify-and-forward relay chain with M hops",
        }
    }

    /// Whether the `m` axis means anything for this setup.
    pub fn uses_m(self) -> bool {
        matches!(
            self,
            ExperimentId::Fig4 | ExperimentId::Fig5 | ExperimentId::Fig6
        )
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| {
                ConfigError::invalid("experiment", format!("unknown experiment id `{s}`"))
            })
    }
}

fn default_b_max_ratio() -> Vec<f64> {
    vec![200.0]
}
fn default_m() -> Vec<usize> {
    vec![1]
}
fn default_trials() -> usize {
    100
}
fn default_r0() -> f64 {
    1.0
}
fn default_epsilon() -> f64 {
    1.0
}
fn default_p_lim_ratio() -> f64 {
    0.5
}
fn default_closed_form_slots() -> u64 {
    1_000_000
}

/// One sweep: the cartesian product of `m × b_max_ratio × n × p_in_db`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub experiment: ExperimentId,
    /// Average harvested power grid in dB, ascending.
    pub p_in_db: Vec<f64>,
    /// Slot counts.
    pub n: Vec<u64>,
    /// Battery capacity in multiples of the average harvest.
    #[serde(default = "default_b_max_ratio")]
    pub b_max_ratio: Vec<f64>,
    /// Receivers (fig4), transmitters (fig5) or hops (fig6).
    #[serde(default = "default_m")]
    pub m: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Outage rate threshold in bits per slot.
    #[serde(default = "default_r0")]
    pub r0: f64,
    /// Amplifier inefficiency.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Circuit power in dB; absent means none.
    #[serde(default)]
    pub p_circuit_db: Option<f64>,
    /// Transmit limit of the absorbing relays relative to the average harvest.
    #[serde(default = "default_p_lim_ratio")]
    pub p_lim_ratio: f64,
    /// Length of the long non-EH run standing in for a closed form.
    #[serde(default = "default_closed_form_slots")]
    pub closed_form_slots: u64,
}

impl SweepSpec {
    pub fn from_toml_str(s: &str) -> Result<Self, ExperimentError> {
        let spec: SweepSpec = toml::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// Repository default setup of each figure.
    pub fn builtin(id: ExperimentId) -> Self {
        let grid = |lo: i32, hi: i32| (lo..=hi).step_by(5).map(f64::from).collect::<Vec<_>>();
        let base = SweepSpec {
            experiment: id,
            p_in_db: grid(0, 30),
            n: vec![100, 10_000],
            b_max_ratio: default_b_max_ratio(),
            m: default_m(),
            trials: default_trials(),
            seed: 0,
            r0: default_r0(),
            epsilon: default_epsilon(),
            p_circuit_db: None,
            p_lim_ratio: default_p_lim_ratio(),
            closed_form_slots: default_closed_form_slots(),
        };
        match id {
            ExperimentId::Fig1 | ExperimentId::Fig2 => base,
            ExperimentId::Fig3 => SweepSpec {
                p_in_db: grid(-30, 30),
                n: vec![10_000],
                b_max_ratio: vec![20.0, 200.0],
                epsilon: 5.0,
                p_circuit_db: Some(-25.0),
                ..base
            },
            ExperimentId::Fig4 => SweepSpec {
                m: vec![2, 25],
                ..base
            },
            ExperimentId::Fig5 => SweepSpec {
                p_in_db: grid(0, 20),
                m: vec![1, 2, 5],
                ..base
            },
            ExperimentId::Fig6 => SweepSpec {
                m: vec![3, 16],
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.p_in_db.iter().any(|x| !x.is_finite()) {
            return Err(ConfigError::invalid(
                "p_in_db",
                "grid values must be finite",
            ));
        }
        if self.p_in_db.windows(2).any(|w| w[0] > w[1]) {
            return Err(ConfigError::invalid(
                "p_in_db",
                "grid must be sorted ascending",
            ));
        }
        if self.n.contains(&0) {
            return Err(ConfigError::invalid("n", "slot counts must be positive"));
        }
        if self
            .b_max_ratio
            .iter()
            .any(|b| !(b.is_finite() && *b > 0.0))
        {
            return Err(ConfigError::invalid(
                "b_max_ratio",
                "ratios must be positive and finite",
            ));
        }
        if self.m.contains(&0) {
            return Err(ConfigError::invalid("m", "must be at least 1"));
        }
        if !self.experiment.uses_m() && self.m.iter().any(|&m| m != 1) {
            return Err(ConfigError::invalid(
                "m",
                format!("{} is point-to-point, m must be 1", self.experiment),
            ));
        }
        if self.trials == 0 {
            return Err(ConfigError::invalid("trials", "need at least one trial"));
        }
        if !(self.r0.is_finite() && self.r0 > 0.0) {
            return Err(ConfigError::invalid("r0", "must be positive and finite"));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 1.0) {
            return Err(ConfigError::invalid(
                "epsilon",
                "must be a finite value >= 1",
            ));
        }
        if self.p_circuit_db.is_some_and(|x| !x.is_finite()) {
            return Err(ConfigError::invalid("p_circuit_db", "must be finite"));
        }
        if !(self.p_lim_ratio.is_finite() && self.p_lim_ratio > 0.0) {
            return Err(ConfigError::invalid(
                "p_lim_ratio",
                "must be positive and finite",
            ));
        }
        if self.closed_form_slots == 0 {
            return Err(ConfigError::invalid(
                "closed_form_slots",
                "must be positive",
            ));
        }
        Ok(())
    }

    /// Grid points in output order.
    pub fn grid(&self) -> Vec<GridPoint> {
        let mut points = Vec::new();
        for &m in &self.m {
            for &b_max_ratio in &self.b_max_ratio {
                for &n in &self.n {
                    for &p_in_db in &self.p_in_db {
                        points.push(GridPoint {
                            index: points.len(),
                            p_in_db,
                            n,
                            b_max_ratio,
                            m,
                        });
                    }
                }
            }
        }
        points
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    /// Position in [`SweepSpec::grid`]; feeds seed derivation.
    pub index: usize,
    pub p_in_db: f64,
    pub n: u64,
    pub b_max_ratio: f64,
    pub m: usize,
}
