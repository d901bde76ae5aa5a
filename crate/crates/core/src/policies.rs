//! Desired-power rules and the threshold solver that calibrates them to an
//! average-power budget.
//!
//! Every rule only sees the current slot index and the current gains of the
//! transmitter's own links, never battery contents or future samples.

use crate::battery::{Power, RegimeLimits};
use crate::error::{ConfigError, LambdaError, PowerError, QuadratureError};
use crate::scalar::Scalar;
use crate::stochastic::{expectation_max_of_exponentials, expectation_quadrature};

/// Battery draw model `P_out = ε·P_tx + P_C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplifierModel<T> {
    epsilon: T,
    p_circuit: Power<T>,
}

impl<T: Scalar> AmplifierModel<T> {
    pub fn new(epsilon: T, p_circuit: T) -> Result<Self, ConfigError> {
        if !epsilon.is_finite() || epsilon < T::one() {
            return Err(ConfigError::invalid(
                "epsilon",
                format!("must be a finite value >= 1, got {epsilon}"),
            ));
        }
        Ok(Self {
            epsilon,
            p_circuit: Power::new(p_circuit)?,
        })
    }

    /// Lossless amplifier without circuit power.
    pub fn ideal() -> Self {
        Self {
            epsilon: T::one(),
            p_circuit: Power::zero(),
        }
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn p_circuit(&self) -> Power<T> {
        self.p_circuit
    }

    pub fn to_f64(&self) -> AmplifierModel<f64> {
        AmplifierModel {
            epsilon: self.epsilon.to_f64_lossy(),
            p_circuit: Power::new_unchecked(self.p_circuit.value().to_f64_lossy()),
        }
    }
}

/// Water level threshold `λ > 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LambdaThreshold<T>(T);

impl<T: Scalar> LambdaThreshold<T> {
    pub fn new(lambda: T) -> Result<Self, PowerError> {
        if !lambda.is_finite() {
            return Err(PowerError::NotFinite(lambda.to_f64_lossy()));
        }
        if lambda <= T::zero() {
            return Err(PowerError::NotPositive(lambda.to_f64_lossy()));
        }
        Ok(Self(lambda))
    }

    pub fn value(self) -> T {
        self.0
    }

    pub fn cast<U: Scalar>(self) -> LambdaThreshold<U> {
        LambdaThreshold(U::of(self.0.to_f64_lossy()))
    }
}

/// Half-duplex relay schedule: node `k` (1-based) transmits `p_active` in
/// slots whose parity equals the parity of `k`, and stays silent otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultihopSchedule<T> {
    node: usize,
    p_active: Power<T>,
}

impl<T: Scalar> MultihopSchedule<T> {
    pub fn new(node: usize, p_active: Power<T>) -> Result<Self, ConfigError> {
        if node == 0 {
            return Err(ConfigError::invalid(
                "node",
                "multihop nodes are numbered from 1",
            ));
        }
        Ok(Self { node, p_active })
    }

    /// Schedule whose long-run average equals the equivalent non-EH cap of the
    /// node: twice the cap in its active half of the slots.
    pub fn for_limits(node: usize, limits: &RegimeLimits<T>) -> Result<Self, ConfigError> {
        let cap = limits.equivalent_cap().value();
        Self::new(node, Power::new(cap + cap)?)
    }

    pub fn node(&self) -> usize {
        self.node
    }

    pub fn p_active(&self) -> Power<T> {
        self.p_active
    }

    pub fn is_active(&self, slot: u64) -> bool {
        slot % 2 == self.node as u64 % 2
    }
}

pub fn constant_policy<T: Scalar>(p: Power<T>) -> impl Fn(u64) -> Power<T> {
    move |_slot| p
}

/// `P_C + (1/λ − 1/γ)/ε` above the threshold, nothing below it.
pub fn waterfill_power<T: Scalar>(
    amp: &AmplifierModel<T>,
    lambda: LambdaThreshold<T>,
    gain: T,
) -> Power<T> {
    let l = lambda.value();
    if gain > l {
        let radiated = (l.recip() - gain.recip()) / amp.epsilon;
        Power::from_difference(amp.p_circuit.value() + radiated)
    } else {
        Power::zero()
    }
}

pub fn waterfill_policy<T: Scalar>(
    amp: AmplifierModel<T>,
    lambda: LambdaThreshold<T>,
) -> impl Fn(T) -> Power<T> {
    move |gain| waterfill_power(&amp, lambda, gain)
}

/// Opportunistic broadcast: only the strongest receiver (lowest index on
/// ties) is served, and only if its gain reaches `λ`.
pub fn broadcast_powers_into<T: Scalar>(
    lambda: LambdaThreshold<T>,
    gains: &[T],
    out: &mut [Power<T>],
) {
    assert_eq!(gains.len(), out.len(), "gain/power length mismatch");
    out.fill(Power::zero());
    let best = gains
        .iter()
        .enumerate()
        .fold(None::<(usize, T)>, |best, (k, &g)| match best {
            Some((_, bg)) if bg >= g => best,
            _ => Some((k, g)),
        });
    if let Some((k, g)) = best {
        let l = lambda.value();
        if g >= l {
            out[k] = Power::from_difference(l.recip() - g.recip());
        }
    }
}

pub fn broadcast_policy<T: Scalar>(lambda: LambdaThreshold<T>) -> impl Fn(&[T]) -> Vec<Power<T>> {
    move |gains| {
        let mut out = vec![Power::zero(); gains.len()];
        broadcast_powers_into(lambda, gains, &mut out);
        out
    }
}

pub fn multihop_power<T: Scalar>(sched: &MultihopSchedule<T>, slot: u64) -> Power<T> {
    if sched.is_active(slot) {
        sched.p_active
    } else {
        Power::zero()
    }
}

pub fn multihop_policy<T: Scalar>(sched: MultihopSchedule<T>) -> impl Fn(u64) -> Power<T> {
    move |slot| multihop_power(&sched, slot)
}

/// Declarative desired-power rule of one transmitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicySpec<T> {
    /// Same power every slot, on a single link.
    Constant(Power<T>),
    /// Threshold water-filling on a single link.
    Waterfill {
        amp: AmplifierModel<T>,
        lambda: LambdaThreshold<T>,
    },
    /// Serve the strongest of the transmitter's links.
    Broadcast { lambda: LambdaThreshold<T> },
    /// Alternating-parity relay schedule on a single link.
    Multihop(MultihopSchedule<T>),
}

impl<T: Scalar> PolicySpec<T> {
    /// Whether the rule can drive a transmitter with `links` outgoing links.
    pub fn accepts_links(&self, links: usize) -> bool {
        match self {
            PolicySpec::Broadcast { .. } => links >= 1,
            _ => links == 1,
        }
    }

    /// Desired powers for `slot` (1-based) given the current link gains.
    pub fn desired_into(&self, slot: u64, gains: &[T], out: &mut [Power<T>]) {
        match self {
            PolicySpec::Constant(p) => out[0] = *p,
            PolicySpec::Waterfill { amp, lambda } => {
                out[0] = waterfill_power(amp, *lambda, gains[0])
            }
            PolicySpec::Broadcast { lambda } => broadcast_powers_into(*lambda, gains, out),
            PolicySpec::Multihop(s) => out[0] = multihop_power(s, slot),
        }
    }
}

/// Threshold policies whose `λ` is fixed by an average-power budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaFamily {
    Waterfill(AmplifierModel<f64>),
    /// Broadcast to `receivers` links with i.i.d. fading.
    Broadcast {
        receivers: usize,
    },
}

/// Lower end of the `λ` search bracket.
pub const LAMBDA_MIN: f64 = 1e-9;
/// Upper end of the `λ` search bracket.
pub const LAMBDA_MAX: f64 = 1e9;
pub const LAMBDA_MAX_ITERATIONS: usize = 200;
/// Relative accuracy of `E[P_d(λ*)]` against the target.
pub const LAMBDA_REL_TOL: f64 = 1e-10;

/// `E[P_d(λ)]` under exponential fading with `mean_gain`, by quadrature.
pub fn expected_desired_power(
    lambda: f64,
    family: &LambdaFamily,
    mean_gain: f64,
) -> Result<f64, QuadratureError> {
    match family {
        LambdaFamily::Waterfill(amp) => {
            let (eps, pc) = (amp.epsilon(), amp.p_circuit().value());
            expectation_quadrature(|g| pc + (1.0 / lambda - 1.0 / g) / eps, mean_gain, lambda)
        }
        LambdaFamily::Broadcast { receivers } => expectation_max_of_exponentials(
            |g| 1.0 / lambda - 1.0 / g,
            mean_gain,
            *receivers,
            lambda,
        ),
    }
}

/// Finds `λ*` with `E[P_d(λ*)] = target` by geometric bisection over
/// `[LAMBDA_MIN, LAMBDA_MAX]`. `E[P_d]` is strictly decreasing in `λ`.
///
/// A transmitter with circuit power needs a budget strictly above it;
/// otherwise [`LambdaError::BelowCircuitFloor`] is returned.
pub fn solve_lambda(
    target: f64,
    family: &LambdaFamily,
    mean_gain: f64,
) -> Result<LambdaThreshold<f64>, LambdaError> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(LambdaError::InvalidTarget(target));
    }
    if let LambdaFamily::Waterfill(amp) = family {
        let pc = amp.p_circuit().value();
        if pc > 0.0 && target <= pc {
            return Err(LambdaError::BelowCircuitFloor {
                target,
                p_circuit: pc,
            });
        }
    }
    if let LambdaFamily::Broadcast { receivers: 0 } = family {
        return Err(QuadratureError::Domain("broadcast to zero receivers".into()).into());
    }
    let eval = |l: f64| expected_desired_power(l, family, mean_gain);
    let (mut lo, mut hi) = (LAMBDA_MIN, LAMBDA_MAX);
    let (e_lo, e_hi) = (eval(lo)?, eval(hi)?);
    if !(e_lo >= target && target >= e_hi) {
        return Err(LambdaError::Bracket {
            target,
            lo,
            hi,
            e_lo,
            e_hi,
        });
    }
    let mut best = (lo, (e_lo - target).abs());
    for _ in 0..LAMBDA_MAX_ITERATIONS {
        let mid = (lo * hi).sqrt();
        let e = eval(mid)?;
        let miss = (e - target).abs();
        if miss < best.1 {
            best = (mid, miss);
        }
        if miss <= LAMBDA_REL_TOL * target {
            break;
        }
        if e > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 <= f64::EPSILON {
            break;
        }
    }
    Ok(LambdaThreshold::new(best.0).expect("bisection stays inside a positive bracket"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::{FadingProcess, Purpose, SeededStream, StreamId};

    fn p(x: f64) -> Power<f64> {
        Power::new(x).unwrap()
    }

    fn lam(x: f64) -> LambdaThreshold<f64> {
        LambdaThreshold::new(x).unwrap()
    }

    #[test]
    fn constant_policy_examples() {
        let pol = constant_policy(p(2.0));
        assert!((1..50).all(|i| pol(i).value() == 2.0));
        assert_eq!(constant_policy(p(0.0))(7).value(), 0.0);
    }

    #[test]
    fn waterfill_examples() {
        let ideal = AmplifierModel::ideal();
        assert_eq!(waterfill_power(&ideal, lam(0.5), 2.0).value(), 1.5);
        assert_eq!(waterfill_power(&ideal, lam(0.5), 0.3).value(), 0.0);
        let amp = AmplifierModel::new(5.0, 0.1).unwrap();
        assert!((waterfill_power(&amp, lam(1.0), 4.0).value() - 0.25).abs() < 1e-15);
        assert_eq!(waterfill_power(&ideal, lam(0.5), 0.5).value(), 0.0);
    }

    #[test]
    fn waterfill_is_continuous_above_threshold_for_ideal_amp() {
        let v = waterfill_policy(AmplifierModel::ideal(), lam(0.5))(0.5 + 1e-12);
        assert!(v.value() < 1e-10);
    }

    #[test]
    fn amplifier_validation() {
        assert!(AmplifierModel::new(0.9, 0.0).is_err());
        assert!(AmplifierModel::new(1.0, -0.1).is_err());
        assert!(AmplifierModel::new(f64::NAN, 0.0).is_err());
        assert!(LambdaThreshold::new(0.0).is_err());
    }

    #[test]
    fn broadcast_examples() {
        let pol = broadcast_policy(lam(0.5));
        let v: Vec<f64> = pol(&[0.4, 2.0]).iter().map(|x| x.value()).collect();
        assert_eq!(v, vec![0.0, 1.5]);
        let v: Vec<f64> = pol(&[0.4, 0.3]).iter().map(|x| x.value()).collect();
        assert_eq!(v, vec![0.0, 0.0]);
        let v: Vec<f64> = broadcast_policy(lam(1.0))(&[3.0, 3.0])
            .iter()
            .map(|x| x.value())
            .collect();
        assert!((v[0] - 2.0 / 3.0).abs() < 1e-15 && v[1] == 0.0);
    }

    #[test]
    fn broadcast_tie_choice_leaves_sum_rate_unchanged() {
        let gains = [3.0f64, 3.0];
        let d = 1.0f64 - 1.0 / 3.0;
        let first = (1.0 + d * gains[0] + 0.0 * gains[1]).log2();
        let second = (1.0 + 0.0 * gains[0] + d * gains[1]).log2();
        assert_eq!(first, second);
    }

    #[test]
    fn multihop_examples() {
        let lim = RegimeLimits::new(p(1.0), p(5.0)).unwrap();
        let s = MultihopSchedule::for_limits(1, &lim).unwrap();
        assert_eq!(multihop_power(&s, 3).value(), 2.0);
        assert_eq!(multihop_power(&s, 4).value(), 0.0);
        let absorbing = RegimeLimits::new(p(1.0), p(0.5)).unwrap();
        let s4 = MultihopSchedule::for_limits(4, &absorbing).unwrap();
        assert_eq!(multihop_policy(s4)(6).value(), 1.0);
        assert_eq!(multihop_policy(s4)(7).value(), 0.0);
        assert!(MultihopSchedule::new(0, p(1.0)).is_err());
    }

    #[test]
    fn multihop_is_half_duplex() {
        for k in 1..8 {
            let s = MultihopSchedule::new(k, p(3.0)).unwrap();
            for i in 1..100 {
                assert_eq!(
                    multihop_power(&s, i).value() * multihop_power(&s, i + 1).value(),
                    0.0
                );
            }
        }
    }

    #[test]
    fn policy_spec_arity() {
        assert!(PolicySpec::Constant(p(1.0)).accepts_links(1));
        assert!(!PolicySpec::Constant(p(1.0)).accepts_links(2));
        assert!(PolicySpec::Broadcast { lambda: lam(1.0) }.accepts_links(25));
        assert!(!PolicySpec::Broadcast { lambda: lam(1.0) }.accepts_links(0));
    }

    /// Closed form for the ideal-amplifier waterfill budget with unit-mean
    /// fading: E[P_d] = e^{-λ}/λ − E1(λ), with E1 from its power series.
    fn waterfill_budget_oracle(l: f64) -> f64 {
        const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
        let mut term = 1.0;
        let mut series = 0.0;
        for k in 1..200 {
            term *= -l / k as f64;
            series += term / k as f64;
            if term.abs() < 1e-18 {
                break;
            }
        }
        let e1 = -EULER_GAMMA - l.ln() - series;
        (-l).exp() / l - e1
    }

    #[test]
    fn waterfill_expectation_matches_series_oracle() {
        let fam = LambdaFamily::Waterfill(AmplifierModel::ideal());
        for l in [0.05, 0.3, 0.393_773_845, 1.0, 2.5] {
            let q = expected_desired_power(l, &fam, 1.0).unwrap();
            let o = waterfill_budget_oracle(l);
            assert!((q - o).abs() < 1e-10 * o.max(1.0), "λ={l}: {q} vs {o}");
        }
    }

    // λ* for unit budget, unit-mean fading, ideal amplifier; bisection on the
    // series oracle gives 0.3937738450451184
    const LAMBDA_UNIT_BUDGET: f64 = 0.393_773_845_045_118_4;

    #[test]
    fn solve_lambda_unit_budget_regression() {
        let fam = LambdaFamily::Waterfill(AmplifierModel::ideal());
        let l = solve_lambda(1.0, &fam, 1.0).unwrap().value();
        assert!((l - LAMBDA_UNIT_BUDGET).abs() < 1e-9, "λ* = {l}");
        // Independent bisection on the series oracle.
        let (mut lo, mut hi) = (0.01f64, 10.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if waterfill_budget_oracle(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((l - lo).abs() < 1e-9);
        let e = expected_desired_power(l, &fam, 1.0).unwrap();
        assert!((e - 1.0).abs() < 1e-8);
    }

    #[test]
    fn solve_lambda_is_monotone_in_target() {
        let fam = LambdaFamily::Waterfill(AmplifierModel::ideal());
        let targets = [0.01, 0.1, 1.0, 10.0, 1000.0];
        let ls: Vec<f64> = targets
            .iter()
            .map(|&t| solve_lambda(t, &fam, 1.0).unwrap().value())
            .collect();
        assert!(ls.windows(2).all(|w| w[0] > w[1]), "{ls:?}");
    }

    #[test]
    fn broadcast_single_receiver_reduces_to_waterfill() {
        for target in [0.1, 1.0, 31.6] {
            let a = solve_lambda(
                target,
                &LambdaFamily::Waterfill(AmplifierModel::ideal()),
                1.0,
            )
            .unwrap();
            let b = solve_lambda(target, &LambdaFamily::Broadcast { receivers: 1 }, 1.0).unwrap();
            assert!((a.value() / b.value() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn solve_lambda_hits_budget_for_all_families() {
        let fams = [
            (LambdaFamily::Waterfill(AmplifierModel::ideal()), 1.0),
            (
                LambdaFamily::Waterfill(AmplifierModel::new(5.0, 10f64.powf(-2.5)).unwrap()),
                1.0,
            ),
            (LambdaFamily::Broadcast { receivers: 2 }, 1.0),
            (LambdaFamily::Broadcast { receivers: 25 }, 1.0),
            (LambdaFamily::Waterfill(AmplifierModel::ideal()), 9.0),
        ];
        for (fam, mean) in fams {
            for db in [-20.0, -10.0, 0.0, 10.0, 30.0] {
                let target = 10f64.powf(db / 10.0);
                let l = solve_lambda(target, &fam, mean).unwrap().value();
                let e = expected_desired_power(l, &fam, mean).unwrap();
                assert!(
                    (e - target).abs() / target < 1e-8,
                    "{fam:?} {db} dB: {e} vs {target}"
                );
            }
        }
    }

    #[test]
    fn solve_lambda_errors() {
        let fam = LambdaFamily::Waterfill(AmplifierModel::ideal());
        assert!(matches!(
            solve_lambda(0.0, &fam, 1.0),
            Err(LambdaError::InvalidTarget(_))
        ));
        assert!(matches!(
            solve_lambda(1e12, &fam, 1.0),
            Err(LambdaError::Bracket { .. })
        ));
        let amp = AmplifierModel::new(5.0, 0.01).unwrap();
        assert!(matches!(
            solve_lambda(0.01, &LambdaFamily::Waterfill(amp), 1.0),
            Err(LambdaError::BelowCircuitFloor { .. })
        ));
        assert!(solve_lambda(0.0101, &LambdaFamily::Waterfill(amp), 1.0).is_ok());
    }

    #[test]
    fn realized_waterfill_average_matches_budget() {
        let fam = LambdaFamily::Waterfill(AmplifierModel::ideal());
        for target in [0.1, 1.0, 10.0] {
            let l = solve_lambda(target, &fam, 1.0).unwrap();
            let fading = FadingProcess::<f64>::rayleigh(1.0).unwrap();
            let mut s = SeededStream::new(21, StreamId::new(Purpose::Fading, 0));
            let n = 1_000_000;
            let pol = waterfill_policy(AmplifierModel::ideal(), l);
            let avg = (0..n)
                .map(|_| pol(fading.sample(&mut s)).value())
                .sum::<f64>()
                / n as f64;
            assert!((avg / target - 1.0).abs() < 0.01, "target {target}: {avg}");
        }
    }

    #[test]
    fn realized_broadcast_average_matches_budget() {
        let m = 4;
        let l = solve_lambda(2.0, &LambdaFamily::Broadcast { receivers: m }, 1.0).unwrap();
        let fading = FadingProcess::<f64>::rayleigh(1.0).unwrap();
        let mut streams: Vec<_> = (0..m as u32)
            .map(|k| SeededStream::new(5, StreamId::new(Purpose::Fading, k)))
            .collect();
        let n = 1_000_000;
        let mut gains = vec![0.0; m];
        let mut out = vec![Power::zero(); m];
        let mut total = 0.0;
        for _ in 0..n {
            for (g, s) in gains.iter_mut().zip(streams.iter_mut()) {
                *g = fading.sample(s);
            }
            broadcast_powers_into(l, &gains, &mut out);
            assert!(out.iter().filter(|x| x.value() > 0.0).count() <= 1);
            total += out.iter().map(|x| x.value()).sum::<f64>();
        }
        assert!((total / n as f64 / 2.0 - 1.0).abs() < 0.01);
    }

    #[test]
    fn policies_are_generic_over_f32() {
        let l = LambdaThreshold::new(0.5f32).unwrap();
        assert_eq!(
            waterfill_power(&AmplifierModel::<f32>::ideal(), l, 2.0).value(),
            1.5f32
        );
        let l32 = solve_lambda(1.0, &LambdaFamily::Broadcast { receivers: 1 }, 1.0)
            .unwrap()
            .cast::<f32>();
        assert!((l32.value() - LAMBDA_UNIT_BUDGET as f32).abs() < 1e-6);
    }
}
