//! Per-slot utility functions. Each one is monotone in every transmit power
//! and finite for finite powers.

use crate::battery::Power;
use crate::error::{ConfigError, LengthMismatch};
use crate::policies::AmplifierModel;
use crate::scalar::Scalar;

/// Whether larger transmit powers raise or lower the utility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Rates: maximized.
    Increasing,
    /// Outage and error probabilities: minimized.
    Decreasing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityValue<T> {
    pub value: T,
    pub direction: Direction,
}

impl<T: Scalar> UtilityValue<T> {
    fn increasing(value: T) -> Self {
        Self {
            value,
            direction: Direction::Increasing,
        }
    }

    fn decreasing(value: T) -> Self {
        Self {
            value,
            direction: Direction::Decreasing,
        }
    }
}

/// Fixed-rate transmission with threshold `R₀` in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageConfig<T> {
    rate_threshold: T,
}

impl<T: Scalar> OutageConfig<T> {
    pub fn new(rate_threshold: T) -> Result<Self, ConfigError> {
        if !(rate_threshold > T::zero() && rate_threshold.is_finite()) {
            return Err(ConfigError::invalid(
                "r0",
                format!("must be positive, got {rate_threshold}"),
            ));
        }
        Ok(Self { rate_threshold })
    }

    pub fn rate_threshold(&self) -> T {
        self.rate_threshold
    }
}

/// Powers and gains of every link as seen at the receiver in the current
/// slot, i.e. each link read `Δ` slots back. Missing history reads as zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DelayedPowerVector<T> {
    pub powers: Vec<Power<T>>,
    pub gains: Vec<T>,
}

impl<T: Scalar> DelayedPowerVector<T> {
    pub fn new(powers: Vec<Power<T>>, gains: Vec<T>) -> Result<Self, LengthMismatch> {
        if powers.len() != gains.len() {
            return Err(LengthMismatch {
                expected: powers.len(),
                got: gains.len(),
            });
        }
        Ok(Self { powers, gains })
    }

    pub fn zeros(links: usize) -> Self {
        Self {
            powers: vec![Power::zero(); links],
            gains: vec![T::zero(); links],
        }
    }

    pub fn len(&self) -> usize {
        self.powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.powers.is_empty()
    }
}

/// Gaussian tail probability `Q(x) = erfc(x/√2)/2`.
pub fn q_function<T: Scalar>(x: T) -> T {
    T::of(0.5) * (x * T::FRAC_1_SQRT_2()).erfc()
}

fn check_lengths<T>(powers: &[Power<T>], gains: &[T]) -> Result<(), LengthMismatch> {
    if powers.len() == gains.len() {
        Ok(())
    } else {
        Err(LengthMismatch {
            expected: powers.len(),
            got: gains.len(),
        })
    }
}

fn log2_1p<T: Scalar>(x: T) -> T {
    (T::one() + x).log2()
}

fn received_snr<T: Scalar>(powers: &[Power<T>], gains: &[T]) -> T {
    powers.iter().zip(gains).map(|(p, &g)| p.value() * g).sum()
}

/// 1 when `log₂(1 + p·γ) < R₀`, else 0.
pub fn outage_indicator<T: Scalar>(cfg: &OutageConfig<T>, p: Power<T>, gain: T) -> UtilityValue<T> {
    // log₂(1 + pγ) < R₀  ⇔  pγ < 2^R₀ − 1
    let out = if p.value() * gain < cfg.rate_threshold.exp2() - T::one() {
        T::one()
    } else {
        T::zero()
    };
    UtilityValue::decreasing(out)
}

/// `log₂(1 + (p − P_C)⁺·γ/ε)`.
pub fn amplifier_rate<T: Scalar>(amp: &AmplifierModel<T>, p: Power<T>, gain: T) -> UtilityValue<T> {
    let radiated = (p.value() - amp.p_circuit().value()).max(T::zero()) / amp.epsilon();
    UtilityValue::increasing(log2_1p(radiated * gain))
}

/// `log₂(1 + Σ p_k·γ_k)`.
pub fn broadcast_sum_rate<T: Scalar>(
    powers: &[Power<T>],
    gains: &[T],
) -> Result<UtilityValue<T>, LengthMismatch> {
    check_lengths(powers, gains)?;
    Ok(UtilityValue::increasing(log2_1p(received_snr(
        powers, gains,
    ))))
}

/// BPSK error probability with coherent beamforming, `Q(√(2·Σ γ_k·p_k))`.
pub fn mac_bpsk_ber<T: Scalar>(
    powers: &[Power<T>],
    gains: &[T],
) -> Result<UtilityValue<T>, LengthMismatch> {
    check_lengths(powers, gains)?;
    let snr = received_snr(powers, gains);
    Ok(UtilityValue::decreasing(q_function((snr + snr).sqrt())))
}

/// Equivalent end-to-end SNR of an amplify-and-forward chain,
/// `(∏(1 + 1/snr_m) − 1)⁻¹`; zero if any hop is dead.
pub fn af_chain_snr<T: Scalar>(hop_snrs: impl IntoIterator<Item = T>) -> T {
    let mut log_prod = T::zero();
    for s in hop_snrs {
        if s.is_nan() || s <= T::zero() {
            return T::zero();
        }
        log_prod = log_prod + s.recip().ln_1p();
    }
    let excess = log_prod.exp_m1();
    if excess > T::zero() {
        excess.recip()
    } else {
        T::zero()
    }
}

/// Rate delivered to the destination of a `hops`-hop half-duplex AF chain in
/// `slot` (1-based). Link `m` of `dpv` must carry the power and gain hop `m`
/// used `hops − 1 − m` slots earlier (0-based `m`). The destination hears a
/// complete codeword only in slots `≥ hops` whose parity matches `hops`.
pub fn multihop_af_rate<T: Scalar>(
    dpv: &DelayedPowerVector<T>,
    slot: u64,
    hops: usize,
) -> UtilityValue<T> {
    let h = hops as u64;
    if hops == 0 || slot < h || slot % 2 != h % 2 {
        return UtilityValue::increasing(T::zero());
    }
    let snr = af_chain_snr(
        dpv.powers
            .iter()
            .zip(&dpv.gains)
            .take(hops)
            .map(|(p, &g)| p.value() * g),
    );
    UtilityValue::increasing(log2_1p(snr))
}

/// Network-level utility selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UtilitySpec<T> {
    /// Outage indicator on the single link.
    Outage(OutageConfig<T>),
    /// Rate through a lossy amplifier on the single link.
    AmplifierRate(AmplifierModel<T>),
    /// Sum rate over all links of the single transmitter.
    BroadcastSumRate,
    /// Beamformed BPSK error probability over all transmitters.
    MacBpskBer,
    /// End-to-end rate of a relay chain, links ordered source first.
    MultihopAf { hops: usize },
}

impl<T: Scalar> UtilitySpec<T> {
    pub fn direction(&self) -> Direction {
        match self {
            UtilitySpec::Outage(_) | UtilitySpec::MacBpskBer => Direction::Decreasing,
            _ => Direction::Increasing,
        }
    }

    /// Evaluates the utility for `slot` from the delayed link vector.
    pub fn evaluate(&self, dpv: &DelayedPowerVector<T>, slot: u64) -> UtilityValue<T> {
        match self {
            UtilitySpec::Outage(cfg) => outage_indicator(cfg, dpv.powers[0], dpv.gains[0]),
            UtilitySpec::AmplifierRate(amp) => amplifier_rate(amp, dpv.powers[0], dpv.gains[0]),
            UtilitySpec::BroadcastSumRate => broadcast_sum_rate(&dpv.powers, &dpv.gains)
                .expect("vector lengths agree by construction"),
            UtilitySpec::MacBpskBer => {
                mac_bpsk_ber(&dpv.powers, &dpv.gains).expect("vector lengths agree by construction")
            }
            UtilitySpec::MultihopAf { hops } => multihop_af_rate(dpv, slot, *hops),
        }
    }
}
