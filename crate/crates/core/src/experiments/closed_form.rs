//! Long-run non-EH reference values for each setup.

use super::spec::{ExperimentId, GridPoint, SweepSpec};
use super::{db_to_linear, scenario, waterfill_lambda, ExperimentError};
use crate::policies::{solve_lambda, waterfill_power, LambdaFamily};
use crate::simulator::run_non_eh;
use crate::stochastic::{derive_seed, expectation_max_of_exponentials, expectation_quadrature};
use crate::utilities::amplifier_rate;

/// `P(log₂(1 + pγ) < R₀)` for a unit-mean exponential `γ`.
pub fn outage_probability(p: f64, r0: f64) -> f64 {
    -(-(r0.exp2() - 1.0) / p).exp_m1()
}

/// Average BPSK error probability when `m` equal-power transmitters with
/// i.i.d. unit-mean Rayleigh links add coherently at the receiver:
/// `((1−μ)/2)^m Σ_{k<m} C(m−1+k, k) ((1+μ)/2)^k` with `μ = √(p/(1+p))`.
pub fn mac_ber(p: f64, m: usize) -> f64 {
    let mu = (p / (1.0 + p)).sqrt();
    let lo = 0.5 * (1.0 - mu);
    let hi = 0.5 * (1.0 + mu);
    let mut binom = 1.0;
    let mut hi_pow = 1.0;
    let mut sum = 0.0;
    for k in 0..m {
        if k > 0 {
            binom *= (m - 1 + k) as f64 / k as f64;
            hi_pow *= hi;
        }
        sum += binom * hi_pow;
    }
    lo.powi(m as i32) * sum
}

/// Non-EH average utility of the setup at `point`, computed without
/// simulation where a closed form or a one-dimensional integral exists.
pub fn closed_form_baseline(spec: &SweepSpec, point: &GridPoint) -> Result<f64, ExperimentError> {
    let p = db_to_linear(point.p_in_db);
    match spec.experiment {
        ExperimentId::Fig1 => Ok(outage_probability(p, spec.r0)),
        ExperimentId::Fig2 | ExperimentId::Fig3 => {
            let amp = spec.amplifier()?;
            match waterfill_lambda(p, &amp)? {
                None => Ok(0.0),
                Some(lambda) => Ok(expectation_quadrature(
                    |g| amplifier_rate(&amp, waterfill_power(&amp, lambda, g), g).value,
                    1.0,
                    lambda.value(),
                )?),
            }
        }
        ExperimentId::Fig4 => {
            let lambda =
                solve_lambda(p, &LambdaFamily::Broadcast { receivers: point.m }, 1.0)?.value();
            Ok(expectation_max_of_exponentials(
                |g| (g / lambda).log2(),
                1.0,
                point.m,
                lambda,
            )?)
        }
        ExperimentId::Fig5 => Ok(mac_ber(p, point.m)),
        ExperimentId::Fig6 => {
            // No closed form: a long non-EH run, seeded independently of N and
            // B_max so every row of one (P̄_in, M) pair agrees.
            let seed = derive_seed(
                spec.seed,
                &[u64::MAX, point.p_in_db.to_bits(), point.m as u64],
            );
            let cfg = scenario(spec, point)?
                .with_slots(spec.closed_form_slots)
                .with_seed(seed);
            Ok(run_non_eh(&cfg)?.avg_utility)
        }
    }
}
