use ehsim::experiments::outage_probability;
use ehsim::policies::MultihopSchedule;
use ehsim::utilities::OutageConfig;
use ehsim::{
    paired_gap, run_eh, run_non_eh, simulate, FadingProcess, HarvestProcess, LambdaThreshold, Mode,
    NetworkTopology, NodeConfig, PolicySpec, Power, RegimeLimits, SimulationConfig, UtilitySpec,
};

fn p(x: f64) -> Power<f64> {
    Power::new(x).unwrap()
}

fn unit() -> FadingProcess<f64> {
    FadingProcess::rayleigh(1.0).unwrap()
}

fn outage_link(p_in: f64, slots: u64, capacity: Option<f64>) -> SimulationConfig<f64> {
    SimulationConfig {
        topology: NetworkTopology::point_to_point(unit()),
        slots,
        nodes: vec![NodeConfig {
            harvest: HarvestProcess::exponential(p_in).unwrap(),
            capacity: capacity.map(p),
            policy: PolicySpec::Constant(p(p_in)),
        }],
        utility: UtilitySpec::Outage(OutageConfig::new(1.0).unwrap()),
        seed: 1,
    }
}

fn relay_chain(hops: usize, p_in: f64, slots: u64) -> SimulationConfig<f64> {
    let nodes = (1..=hops)
        .map(|k| {
            let lim = if k <= hops / 2 { p_in } else { p_in / 2.0 };
            let limits = RegimeLimits::new(p(p_in), p(lim)).unwrap();
            NodeConfig {
                harvest: HarvestProcess::exponential(p_in).unwrap(),
                capacity: Some(p(200.0 * p_in)),
                policy: PolicySpec::Multihop(MultihopSchedule::for_limits(k, &limits).unwrap()),
            }
        })
        .collect();
    SimulationConfig {
        topology: NetworkTopology::multihop(
            hops,
            FadingProcess::rayleigh((hops * hops) as f64).unwrap(),
        ),
        slots,
        nodes,
        utility: UtilitySpec::MultihopAf { hops },
        seed: 2,
    }
}

fn mac(m: usize, p_in: f64, slots: u64) -> SimulationConfig<f64> {
    SimulationConfig {
        topology: NetworkTopology::multiple_access(m, unit()),
        slots,
        nodes: vec![
            NodeConfig {
                harvest: HarvestProcess::exponential(p_in).unwrap(),
                capacity: Some(p(200.0 * p_in)),
                policy: PolicySpec::Constant(p(p_in)),
            };
            m
        ],
        utility: UtilitySpec::MacBpskBer,
        seed: 3,
    }
}

#[derive(Debug, PartialEq)]
struct Snapshot {
    desired: Vec<f64>,
    actual: Vec<f64>,
    levels: Vec<f64>,
    utility: f64,
}

fn trace(cfg: &SimulationConfig<f64>) -> Vec<Snapshot> {
    let mut out = Vec::new();
    simulate(cfg, Mode::EnergyHarvesting, |r| {
        out.push(Snapshot {
            desired: r.desired.iter().map(|x| x.value()).collect(),
            actual: r.actual.iter().map(|x| x.value()).collect(),
            levels: r.levels.iter().map(|x| x.value()).collect(),
            utility: r.utility,
        })
    })
    .unwrap();
    out
}

#[test]
fn truncated_runs_reproduce_their_prefix() {
    let broadcast = SimulationConfig {
        topology: NetworkTopology::broadcast(4, unit()),
        slots: 600,
        nodes: vec![NodeConfig {
            harvest: HarvestProcess::exponential(2.0).unwrap(),
            capacity: Some(p(400.0)),
            policy: PolicySpec::Broadcast {
                lambda: LambdaThreshold::new(0.8).unwrap(),
            },
        }],
        utility: UtilitySpec::BroadcastSumRate,
        seed: 9,
    };
    for cfg in [relay_chain(3, 10.0, 600), mac(3, 5.0, 600), broadcast] {
        let full = trace(&cfg);
        for cut in [3u64, 37, 250] {
            let part = trace(&cfg.with_slots(cut));
            assert_eq!(part[..], full[..cut as usize]);
        }
    }
}

#[test]
fn non_absorbing_node_spends_its_harvest() {
    for seed in 1..=5 {
        let s = run_eh(&outage_link(10.0, 10_000, Some(2000.0)).with_seed(seed)).unwrap();
        let n = &s.nodes[0];
        assert!(
            (n.avg_out / n.avg_in - 1.0).abs() < 0.02,
            "seed {seed}: out {} in {}",
            n.avg_out,
            n.avg_in
        );
        assert!(n.avg_out <= n.avg_desired + 1e-12);
    }
}

#[test]
fn absorbing_battery_grows_linearly() {
    let mut cfg = outage_link(1.0, 10_000, None);
    cfg.nodes[0].policy = PolicySpec::Constant(p(0.5));
    for seed in 1..=5 {
        let s = run_eh(&cfg.with_seed(seed)).unwrap();
        let slope = s.nodes[0].final_level.value() / 10_000.0;
        assert!(
            (slope / 0.5 - 1.0).abs() < 0.1,
            "seed {seed}: slope {slope}"
        );
    }
}

#[test]
fn conservation_holds_per_node() {
    let mut cfg = mac(3, 4.0, 5000);
    for n in &mut cfg.nodes {
        n.capacity = None;
    }
    let s = run_eh(&cfg).unwrap();
    for n in &s.nodes {
        let stored = (n.avg_in - n.avg_out) * 5000.0;
        assert!((n.final_level.value() - stored).abs() <= 1e-9 * n.avg_in * 5000.0);
        assert!(n.avg_out <= n.avg_in + 1e-12);
    }
}

fn mean_mismatch(cfg: &SimulationConfig<f64>, slots: u64) -> f64 {
    let runs = 20;
    (0..runs)
        .map(|seed| {
            run_eh(&cfg.with_slots(slots).with_seed(seed))
                .unwrap()
                .network_mismatch_fraction
        })
        .sum::<f64>()
        / runs as f64
}

#[test]
fn network_mismatch_decays() {
    for cfg in [
        outage_link(10.0, 1, Some(2000.0)),
        mac(2, 10.0, 1),
        relay_chain(3, 10.0, 1),
    ] {
        let short = mean_mismatch(&cfg, 100);
        let long = mean_mismatch(&cfg, 10_000);
        assert!(
            long < short && long < 0.05,
            "{:?}: {short} -> {long}",
            cfg.utility
        );
    }
}

#[test]
fn non_eh_never_mismatches() {
    for cfg in [
        outage_link(1.0, 2000, Some(200.0)),
        mac(4, 1.0, 2000),
        relay_chain(4, 1.0, 2000),
    ] {
        let s = run_non_eh(&cfg).unwrap();
        assert_eq!(s.network_mismatch_fraction, 0.0);
        assert!(s.nodes.iter().all(|n| n.mismatch_fraction == 0.0));
    }
}

#[test]
fn eh_outage_at_10_db_is_near_closed_form() {
    let exact = outage_probability(10.0, 1.0);
    let runs = 20;
    let mean = (0..runs)
        .map(|seed| {
            run_eh(&outage_link(10.0, 10_000, Some(2000.0)).with_seed(seed))
                .unwrap()
                .avg_utility
        })
        .sum::<f64>()
        / runs as f64;
    assert!(((mean - exact) / exact).abs() < 0.05, "{mean} vs {exact}");
}

#[test]
fn non_eh_outage_matches_closed_form() {
    let cfg = outage_link(10.0, 1_000_000, None).with_seed(17);
    let s = run_non_eh(&cfg).unwrap();
    let exact = outage_probability(10.0, 1.0);
    // Bernoulli outcomes: the standard error follows from the mean.
    let se = (exact * (1.0 - exact) / 1e6).sqrt();
    assert!(
        (s.avg_utility - exact).abs() < 3.0 * se,
        "{} vs {exact}",
        s.avg_utility
    );
}

#[test]
fn paired_gap_shrinks_with_n() {
    let seeds: Vec<u64> = (0..20).collect();
    let short = paired_gap(&outage_link(10.0, 100, Some(2000.0)), &seeds).unwrap();
    let long = paired_gap(&outage_link(10.0, 10_000, Some(2000.0)), &seeds).unwrap();
    assert!(long.mean.abs() < short.mean.abs(), "{short:?} {long:?}");
    assert_eq!(long.runs, 20);
    let again = paired_gap(&outage_link(10.0, 10_000, Some(2000.0)), &seeds).unwrap();
    assert_eq!(long, again);
}

#[test]
fn relay_nodes_never_transmit_in_adjacent_slots() {
    let cfg = relay_chain(5, 3.0, 4000);
    for mode in [Mode::EnergyHarvesting, Mode::NonEh] {
        let mut prev = [0.0; 5];
        simulate(&cfg, mode, |r| {
            for (k, x) in r.desired.iter().enumerate() {
                assert_eq!(x.value() * prev[k], 0.0, "node {k} slot {}", r.slot);
                prev[k] = x.value();
            }
        })
        .unwrap();
    }
}

#[test]
fn relay_utility_is_zero_off_parity() {
    let cfg = relay_chain(3, 10.0, 500);
    simulate(&cfg, Mode::NonEh, |r| {
        if r.slot < 3 || r.slot % 2 == 0 {
            assert_eq!(r.utility, 0.0, "slot {}", r.slot);
        }
    })
    .unwrap();
}
