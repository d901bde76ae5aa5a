//! Slot-driven network simulator.
//!
//! Each slot runs, for every transmitter in index order: sense link gains,
//! compute desired powers, extract them from the battery left by the previous
//! slot, record the granted powers into per-link delay lines, then deposit
//! the slot's harvest. The utility is evaluated last, from the link powers
//! delayed by each link's `Δ`.
//!
//! EH and non-EH runs of one configuration draw the same random streams, so
//! their difference is a paired comparison.

use crate::battery::{BatteryState, Power};
use crate::error::ConfigError;
use crate::policies::PolicySpec;
use crate::scalar::{CompensatedSum, Scalar};
use crate::stochastic::{FadingProcess, HarvestProcess, Purpose, SeededStream, StreamId};
use crate::utilities::{DelayedPowerVector, Direction, UtilitySpec};

/// Outgoing link of a transmitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSpec<T> {
    /// Receiving node index.
    pub to: usize,
    /// Slots between transmission and its use in the utility.
    pub delay: usize,
    pub fading: FadingProcess<T>,
}

/// Nodes `0..node_count`; transmitter `k` owns `links[k]` (its receiver set),
/// so transmitters are the nodes `0..links.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology<T> {
    node_count: usize,
    links: Vec<Vec<LinkSpec<T>>>,
}

impl<T: Scalar> NetworkTopology<T> {
    pub fn new(node_count: usize, links: Vec<Vec<LinkSpec<T>>>) -> Result<Self, ConfigError> {
        if links.len() > node_count {
            return Err(ConfigError::Topology(format!(
                "{} transmitters but only {node_count} nodes",
                links.len()
            )));
        }
        for (k, out) in links.iter().enumerate() {
            for l in out {
                if l.to >= node_count || l.to == k {
                    return Err(ConfigError::Topology(format!(
                        "link {k} -> {} is invalid",
                        l.to
                    )));
                }
            }
        }
        Ok(Self { node_count, links })
    }

    /// One transmitter, one receiver.
    pub fn point_to_point(fading: FadingProcess<T>) -> Self {
        Self {
            node_count: 2,
            links: vec![vec![LinkSpec {
                to: 1,
                delay: 0,
                fading,
            }]],
        }
    }

    /// Node 0 transmits to receivers `1..=receivers`.
    pub fn broadcast(receivers: usize, fading: FadingProcess<T>) -> Self {
        let out = (1..=receivers)
            .map(|to| LinkSpec {
                to,
                delay: 0,
                fading,
            })
            .collect();
        Self {
            node_count: receivers + 1,
            links: vec![out],
        }
    }

    /// Transmitters `0..transmitters` all reach node `transmitters`.
    pub fn multiple_access(transmitters: usize, fading: FadingProcess<T>) -> Self {
        let links = (0..transmitters)
            .map(|_| {
                vec![LinkSpec {
                    to: transmitters,
                    delay: 0,
                    fading,
                }]
            })
            .collect();
        Self {
            node_count: transmitters + 1,
            links,
        }
    }

    /// Relay chain `0 → 1 → … → hops`. Hop `m` (0-based) is delayed by
    /// `hops − 1 − m` slots so the whole codeword path lines up at the
    /// destination.
    pub fn multihop(hops: usize, fading: FadingProcess<T>) -> Self {
        let links = (0..hops)
            .map(|m| {
                vec![LinkSpec {
                    to: m + 1,
                    delay: hops - 1 - m,
                    fading,
                }]
            })
            .collect();
        Self {
            node_count: hops + 1,
            links,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn transmitters(&self) -> usize {
        self.links.len()
    }

    pub fn links_of(&self, k: usize) -> &[LinkSpec<T>] {
        &self.links[k]
    }

    /// Receiver set of transmitter `k`.
    pub fn receivers(&self, k: usize) -> Vec<usize> {
        self.links[k].iter().map(|l| l.to).collect()
    }

    pub fn link_count(&self) -> usize {
        self.links.iter().map(Vec::len).sum()
    }

    pub fn max_delay(&self) -> usize {
        self.links
            .iter()
            .flatten()
            .map(|l| l.delay)
            .max()
            .unwrap_or(0)
    }
}

/// Per-transmitter parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeConfig<T> {
    pub harvest: HarvestProcess<T>,
    /// `None` for an unbounded battery.
    pub capacity: Option<Power<T>>,
    pub policy: PolicySpec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig<T> {
    pub topology: NetworkTopology<T>,
    pub slots: u64,
    pub nodes: Vec<NodeConfig<T>>,
    pub utility: UtilitySpec<T>,
    pub seed: u64,
}

impl<T: Scalar> SimulationConfig<T> {
    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn with_slots(&self, slots: u64) -> Self {
        Self {
            slots,
            ..self.clone()
        }
    }

    /// Checks policy and utility arity against the topology.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let topo = &self.topology;
        if self.slots == 0 {
            return Err(ConfigError::invalid("slots", "need at least one slot"));
        }
        if self.nodes.len() != topo.transmitters() {
            return Err(ConfigError::Topology(format!(
                "{} node configs for {} transmitters",
                self.nodes.len(),
                topo.transmitters()
            )));
        }
        if topo.max_delay() as u64 > self.slots {
            return Err(ConfigError::Topology(format!(
                "link delay {} exceeds slot count {}",
                topo.max_delay(),
                self.slots
            )));
        }
        for (k, node) in self.nodes.iter().enumerate() {
            let links = topo.links_of(k).len();
            if !node.policy.accepts_links(links) {
                return Err(ConfigError::Topology(format!(
                    "policy of transmitter {k} cannot drive {links} links"
                )));
            }
        }
        let single_links = (0..topo.transmitters()).all(|k| topo.links_of(k).len() == 1);
        match self.utility {
            UtilitySpec::Outage(_) | UtilitySpec::AmplifierRate(_) => {
                if topo.link_count() != 1 {
                    return Err(ConfigError::Topology(
                        "point-to-point utility needs exactly one link".into(),
                    ));
                }
            }
            UtilitySpec::BroadcastSumRate => {
                if topo.transmitters() != 1 || topo.link_count() == 0 {
                    return Err(ConfigError::Topology(
                        "broadcast utility needs one transmitter".into(),
                    ));
                }
            }
            UtilitySpec::MacBpskBer => {
                let dest = topo.links.first().and_then(|l| l.first()).map(|l| l.to);
                let same_dest = topo.links.iter().flatten().all(|l| Some(l.to) == dest);
                if topo.transmitters() == 0 || !single_links || !same_dest {
                    return Err(ConfigError::Topology(
                        "multiple-access utility needs single-link transmitters sharing one receiver".into(),
                    ));
                }
            }
            UtilitySpec::MultihopAf { hops } => {
                let chain = topo.transmitters() == hops
                    && hops > 0
                    && single_links
                    && topo
                        .links
                        .iter()
                        .enumerate()
                        .all(|(k, l)| l[0].to == k + 1 && l[0].delay == hops - 1 - k);
                if !chain {
                    return Err(ConfigError::Topology(format!(
                        "relay utility needs a {hops}-hop chain with aligning delays"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// How extraction is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Powers limited by battery contents.
    EnergyHarvesting,
    /// Every desire is granted.
    NonEh,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSummary<T> {
    pub avg_out: T,
    pub avg_desired: T,
    pub avg_in: T,
    /// Fraction of slots in which any link of the node got less than desired.
    pub mismatch_fraction: T,
    pub final_level: Power<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary<T> {
    pub slots: u64,
    pub direction: Direction,
    pub avg_utility: T,
    pub nodes: Vec<NodeSummary<T>>,
    /// Fraction of slots in which any link of any node was short.
    pub network_mismatch_fraction: T,
}

/// Everything that happened in one slot, handed to observers.
#[derive(Debug)]
pub struct SlotRecord<'a, T> {
    pub slot: u64,
    /// Per transmitter.
    pub harvest: &'a [Power<T>],
    /// Per link, transmitters in order.
    pub gains: &'a [T],
    pub desired: &'a [Power<T>],
    pub actual: &'a [Power<T>],
    /// Per transmitter, after the deposit.
    pub levels: &'a [Power<T>],
    pub utility: T,
}

/// Fixed-length delay line; slot `i` lives at `i % len`.
struct DelayLine<T> {
    power: Vec<Power<T>>,
    gain: Vec<T>,
}

impl<T: Scalar> DelayLine<T> {
    fn new(delay: usize) -> Self {
        Self {
            power: vec![Power::zero(); delay + 1],
            gain: vec![T::zero(); delay + 1],
        }
    }

    fn push(&mut self, slot: u64, power: Power<T>, gain: T) {
        let i = (slot % self.power.len() as u64) as usize;
        self.power[i] = power;
        self.gain[i] = gain;
    }

    fn read(&self, slot: u64, delay: usize) -> (Power<T>, T) {
        if slot <= delay as u64 {
            return (Power::zero(), T::zero());
        }
        let i = ((slot - delay as u64) % self.power.len() as u64) as usize;
        (self.power[i], self.gain[i])
    }
}

pub fn run_eh<T: Scalar>(cfg: &SimulationConfig<T>) -> Result<RunSummary<T>, ConfigError> {
    simulate(cfg, Mode::EnergyHarvesting, |_| {})
}

pub fn run_non_eh<T: Scalar>(cfg: &SimulationConfig<T>) -> Result<RunSummary<T>, ConfigError> {
    simulate(cfg, Mode::NonEh, |_| {})
}

/// Runs `cfg` in `mode`, calling `observe` after every slot.
pub fn simulate<T: Scalar, F>(
    cfg: &SimulationConfig<T>,
    mode: Mode,
    mut observe: F,
) -> Result<RunSummary<T>, ConfigError>
where
    F: FnMut(&SlotRecord<'_, T>),
{
    cfg.validate()?;
    let topo = &cfg.topology;
    let nodes = topo.transmitters();
    let links: Vec<LinkSpec<T>> = topo.links.iter().flatten().copied().collect();
    let mut offsets = Vec::with_capacity(nodes + 1);
    offsets.push(0);
    for k in 0..nodes {
        offsets.push(offsets[k] + topo.links_of(k).len());
    }

    let mut harvest_streams: Vec<SeededStream> = (0..nodes)
        .map(|k| SeededStream::new(cfg.seed, StreamId::new(Purpose::Harvest, k as u32)))
        .collect();
    let mut fading_streams: Vec<SeededStream> = (0..links.len())
        .map(|l| SeededStream::new(cfg.seed, StreamId::new(Purpose::Fading, l as u32)))
        .collect();

    let mut batteries: Vec<BatteryState<T>> = cfg
        .nodes
        .iter()
        .map(|n| BatteryState::empty(n.capacity))
        .collect();
    let mut delay_lines: Vec<DelayLine<T>> =
        links.iter().map(|l| DelayLine::new(l.delay)).collect();

    let mut gains = vec![T::zero(); links.len()];
    let mut desired = vec![Power::zero(); links.len()];
    let mut actual = vec![Power::zero(); links.len()];
    let mut harvest = vec![Power::zero(); nodes];
    let mut levels = vec![Power::zero(); nodes];
    let mut dpv = DelayedPowerVector::zeros(links.len());

    let mut sum_utility = CompensatedSum::new();
    let mut sum_out = vec![CompensatedSum::new(); nodes];
    let mut sum_desired = vec![CompensatedSum::new(); nodes];
    let mut sum_in = vec![CompensatedSum::new(); nodes];
    let mut short_slots = vec![0u64; nodes];
    let mut network_short_slots = 0u64;

    for slot in 1..=cfg.slots {
        for ((g, link), stream) in gains.iter_mut().zip(&links).zip(fading_streams.iter_mut()) {
            *g = link.fading.sample(stream);
        }
        for ((h, node), stream) in harvest
            .iter_mut()
            .zip(&cfg.nodes)
            .zip(harvest_streams.iter_mut())
        {
            *h = node.harvest.sample(stream);
        }

        let mut any_short = false;
        for k in 0..nodes {
            let range = offsets[k]..offsets[k + 1];
            cfg.nodes[k].policy.desired_into(
                slot,
                &gains[range.clone()],
                &mut desired[range.clone()],
            );
            match mode {
                Mode::EnergyHarvesting => {
                    batteries[k] = batteries[k].extract_sequential_into(
                        &desired[range.clone()],
                        &mut actual[range.clone()],
                    );
                }
                Mode::NonEh => actual[range.clone()].copy_from_slice(&desired[range.clone()]),
            }
            let short = desired[range.clone()]
                .iter()
                .zip(&actual[range.clone()])
                .any(|(d, a)| a != d);
            if short {
                short_slots[k] += 1;
                any_short = true;
            }
            for l in range.clone() {
                delay_lines[l].push(slot, actual[l], gains[l]);
                sum_out[k].add(actual[l].value());
                sum_desired[k].add(desired[l].value());
            }
            if mode == Mode::EnergyHarvesting {
                batteries[k] = batteries[k].deposit(harvest[k]);
            }
            sum_in[k].add(harvest[k].value());
            levels[k] = batteries[k].level();
        }
        if any_short {
            network_short_slots += 1;
        }

        for (l, link) in links.iter().enumerate() {
            let (p, g) = delay_lines[l].read(slot, link.delay);
            dpv.powers[l] = p;
            dpv.gains[l] = g;
        }
        let u = cfg.utility.evaluate(&dpv, slot).value;
        sum_utility.add(u);

        observe(&SlotRecord {
            slot,
            harvest: &harvest,
            gains: &gains,
            desired: &desired,
            actual: &actual,
            levels: &levels,
            utility: u,
        });
    }

    let n = T::of(cfg.slots as f64);
    let frac = |count: u64| T::of(count as f64 / cfg.slots as f64);
    let node_summaries = (0..nodes)
        .map(|k| NodeSummary {
            avg_out: sum_out[k].value() / n,
            avg_desired: sum_desired[k].value() / n,
            avg_in: sum_in[k].value() / n,
            mismatch_fraction: frac(short_slots[k]),
            final_level: batteries[k].level(),
        })
        .collect();
    Ok(RunSummary {
        slots: cfg.slots,
        direction: cfg.utility.direction(),
        avg_utility: sum_utility.value() / n,
        nodes: node_summaries,
        network_mismatch_fraction: frac(network_short_slots),
    })
}

/// Mean and standard error of `Ū_EH − Ū_nonEH` over paired runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapStats {
    pub mean: f64,
    pub std_err: f64,
    pub runs: usize,
}

/// Sample mean and standard error of the mean.
pub fn mean_and_std_err(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().copied().collect::<CompensatedSum<f64>>().value() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = xs
        .iter()
        .map(|x| (x - mean) * (x - mean))
        .collect::<CompensatedSum<f64>>()
        .value();
    (mean, (ss / (n - 1) as f64 / n as f64).sqrt())
}

/// Runs EH and non-EH on each seed (sharing streams) and summarizes the gap.
pub fn paired_gap<T: Scalar>(
    cfg: &SimulationConfig<T>,
    seeds: &[u64],
) -> Result<GapStats, ConfigError> {
    if seeds.len() < 2 {
        return Err(ConfigError::invalid(
            "seeds",
            "paired gap needs at least two seeds",
        ));
    }
    let gaps = seeds
        .iter()
        .map(|&s| {
            let c = cfg.with_seed(s);
            let eh = run_eh(&c)?.avg_utility.to_f64_lossy();
            let ne = run_non_eh(&c)?.avg_utility.to_f64_lossy();
            Ok(eh - ne)
        })
        .collect::<Result<Vec<f64>, ConfigError>>()?;
    let (mean, std_err) = mean_and_std_err(&gaps);
    Ok(GapStats {
        mean,
        std_err,
        runs: gaps.len(),
    })
}
