//! Battery queue: deposit, extraction and regime classification.
//!
//! A slot always extracts against the level left at the end of the previous
//! slot and deposits the harvest afterwards, so energy harvested in slot `i`
//! can first be spent in slot `i + 1`.

use std::fmt;

use crate::error::PowerError;
use crate::scalar::Scalar;

/// Largest negative round-off tolerated before clamping to zero.
const NEGATIVE_SLACK: f64 = 1e-12;

/// Nonnegative, finite power in linear watts.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Power<T>(T);

impl<T: Scalar> Power<T> {
    pub fn new(value: T) -> Result<Self, PowerError> {
        if !value.is_finite() {
            return Err(PowerError::NotFinite(value.to_f64_lossy()));
        }
        if value < T::zero() {
            return Err(PowerError::Negative(value.to_f64_lossy()));
        }
        Ok(Self(value))
    }

    pub fn zero() -> Self {
        Self(T::zero())
    }

    /// Wraps a value already known to be valid; debug builds check it.
    pub(crate) fn new_unchecked(value: T) -> Self {
        debug_assert!(
            value.is_finite() && value >= T::zero(),
            "invalid power {value}"
        );
        Self(value)
    }

    /// Clamps a result of floating subtraction to zero.
    pub(crate) fn from_difference(value: T) -> Self {
        debug_assert!(
            value.to_f64_lossy() > -NEGATIVE_SLACK,
            "negative power {value} beyond round-off"
        );
        Self::new_unchecked(value.max(T::zero()))
    }

    pub fn value(self) -> T {
        self.0
    }

    pub fn min(self, other: Self) -> Self {
        if other.0 < self.0 {
            other
        } else {
            self
        }
    }
}

impl<T: Scalar> fmt::Display for Power<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} W", self.0)
    }
}

/// Stored energy together with the capacity bound. `capacity == None` is an
/// unbounded battery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryState<T> {
    level: Power<T>,
    capacity: Option<Power<T>>,
}

impl<T: Scalar> BatteryState<T> {
    /// Empty battery.
    pub fn empty(capacity: Option<Power<T>>) -> Self {
        Self {
            level: Power::zero(),
            capacity,
        }
    }

    pub fn new(level: Power<T>, capacity: Option<Power<T>>) -> Result<Self, PowerError> {
        if let Some(cap) = capacity {
            if level > cap {
                return Err(PowerError::AboveCapacity {
                    level: level.value().to_f64_lossy(),
                    capacity: cap.value().to_f64_lossy(),
                });
            }
        }
        Ok(Self { level, capacity })
    }

    pub fn level(&self) -> Power<T> {
        self.level
    }

    pub fn capacity(&self) -> Option<Power<T>> {
        self.capacity
    }

    /// Extracts `min(level, desired)`.
    pub fn extract_single(self, desired: Power<T>) -> (Power<T>, Self) {
        let actual = self.level.min(desired);
        let level = Power::from_difference(self.level.value() - actual.value());
        (actual, Self { level, ..self })
    }

    /// Serves receivers in list order from the shared level: each receiver is
    /// granted its full desire while the remaining level covers it, otherwise
    /// whatever is left. Writes the granted powers into `actual`.
    pub fn extract_sequential_into(self, desired: &[Power<T>], actual: &mut [Power<T>]) -> Self {
        assert_eq!(
            desired.len(),
            actual.len(),
            "desired/actual length mismatch"
        );
        let mut state = self;
        for (d, a) in desired.iter().zip(actual.iter_mut()) {
            let (granted, next) = state.extract_single(*d);
            *a = granted;
            state = next;
        }
        state
    }

    pub fn extract_sequential(self, desired: &[Power<T>]) -> (Vec<Power<T>>, Self) {
        let mut actual = vec![Power::zero(); desired.len()];
        let state = self.extract_sequential_into(desired, &mut actual);
        (actual, state)
    }

    /// Adds harvested energy; anything above capacity is discarded.
    pub fn deposit(self, harvested: Power<T>) -> Self {
        let filled = self.level.value() + harvested.value();
        let level = match self.capacity {
            Some(cap) if filled > cap.value() => cap,
            _ => Power::new_unchecked(filled),
        };
        Self { level, ..self }
    }
}

/// Long-run averages deciding whether a battery is absorbing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeLimits<T> {
    pub p_in_avg: Power<T>,
    pub p_lim_avg: Power<T>,
}

impl<T: Scalar> RegimeLimits<T> {
    pub fn new(p_in_avg: Power<T>, p_lim_avg: Power<T>) -> Result<Self, PowerError> {
        for p in [p_in_avg, p_lim_avg] {
            if p.value() <= T::zero() {
                return Err(PowerError::NotPositive(p.value().to_f64_lossy()));
            }
        }
        Ok(Self {
            p_in_avg,
            p_lim_avg,
        })
    }

    pub fn regime(&self) -> Regime {
        classify_regime(self)
    }

    /// Average-power cap of the equivalent non-EH system: the harvest rate for
    /// a non-absorbing battery, the transmit limit for an absorbing one.
    pub fn equivalent_cap(&self) -> Power<T> {
        match self.regime() {
            Regime::NonAbsorbing => self.p_in_avg,
            Regime::Absorbing => self.p_lim_avg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// Stored energy grows without bound on average.
    Absorbing,
    NonAbsorbing,
}

pub fn classify_regime<T: Scalar>(limits: &RegimeLimits<T>) -> Regime {
    if limits.p_lim_avg < limits.p_in_avg {
        Regime::Absorbing
    } else {
        Regime::NonAbsorbing
    }
}
