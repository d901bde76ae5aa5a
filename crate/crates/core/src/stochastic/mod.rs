//! Seeded harvest and fading processes plus the quadrature used to evaluate
//! expectations over them.

mod quadrature;
mod rng;

pub use quadrature::{
    expectation_max_of_exponentials, expectation_quadrature, integrate, EXPECTATION_ABS_TOL,
    EXPECTATION_REL_TOL,
};
pub use rng::{derive_seed, Purpose, SeededStream, StreamId};

use std::marker::PhantomData;

use crate::battery::Power;
use crate::error::PowerError;
use crate::scalar::Scalar;

/// Per-slot distribution of a process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Law {
    /// i.i.d. exponential draws with the process mean.
    Exponential,
    /// Every slot equals the mean. Used for degenerate test scenarios.
    Deterministic,
}

/// Nonnegative i.i.d. process described by its mean and law.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Process<T> {
    mean: f64,
    law: Law,
    _scalar: PhantomData<T>,
}

impl<T: Scalar> Process<T> {
    fn exponential(mean: f64) -> Result<Self, PowerError> {
        if !mean.is_finite() {
            return Err(PowerError::NotFinite(mean));
        }
        if mean <= 0.0 {
            return Err(PowerError::NotPositive(mean));
        }
        Ok(Self {
            mean,
            law: Law::Exponential,
            _scalar: PhantomData,
        })
    }

    fn deterministic(value: f64) -> Result<Self, PowerError> {
        Power::new(value)?;
        Ok(Self {
            mean: value,
            law: Law::Deterministic,
            _scalar: PhantomData,
        })
    }

    fn map_uniform(&self, u: f64) -> T {
        match self.law {
            Law::Exponential => T::of(rng::exponential_from_uniform(u, self.mean)),
            Law::Deterministic => T::of(self.mean),
        }
    }

    fn sample(&self, stream: &mut SeededStream) -> T {
        match self.law {
            Law::Exponential => self.map_uniform(stream.next_uniform()),
            Law::Deterministic => T::of(self.mean),
        }
    }

    fn sample_at(&self, stream: &SeededStream, slot: u64) -> T {
        match self.law {
            Law::Exponential => self.map_uniform(stream.uniform_at(slot)),
            Law::Deterministic => T::of(self.mean),
        }
    }
}

/// Harvested power per slot. Exponential with mean `P̄_in` by default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarvestProcess<T>(Process<T>);

impl<T: Scalar> HarvestProcess<T> {
    /// Exponential harvest; the mean must be strictly positive.
    pub fn exponential(mean: f64) -> Result<Self, PowerError> {
        Process::exponential(mean).map(Self)
    }

    /// Constant harvest (zero allowed).
    pub fn deterministic(value: f64) -> Result<Self, PowerError> {
        Process::deterministic(value).map(Self)
    }

    pub fn mean(&self) -> f64 {
        self.0.mean
    }

    pub fn law(&self) -> Law {
        self.0.law
    }

    /// Next slot's harvest from the stream.
    pub fn sample(&self, stream: &mut SeededStream) -> Power<T> {
        Power::new_unchecked(self.0.sample(stream))
    }

    /// Harvest of slot `slot` (1-based), matching the `slot`-th sequential draw.
    pub fn sample_at(&self, stream: &SeededStream, slot: u64) -> Power<T> {
        assert!(slot >= 1, "slots are numbered from 1");
        Power::new_unchecked(self.0.sample_at(stream, slot - 1))
    }
}

/// Squared channel gain per slot. Exponential (Rayleigh amplitude) with the
/// given average gain by default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingProcess<T>(Process<T>);

impl<T: Scalar> FadingProcess<T> {
    pub fn rayleigh(mean_gain: f64) -> Result<Self, PowerError> {
        Process::exponential(mean_gain).map(Self)
    }

    /// Fixed gain in every slot.
    pub fn deterministic(gain: f64) -> Result<Self, PowerError> {
        Process::deterministic(gain).map(Self)
    }

    pub fn mean_gain(&self) -> f64 {
        self.0.mean
    }

    pub fn law(&self) -> Law {
        self.0.law
    }

    pub fn sample(&self, stream: &mut SeededStream) -> T {
        self.0.sample(stream)
    }

    /// Gain of slot `slot` (1-based), matching the `slot`-th sequential draw.
    pub fn sample_at(&self, stream: &SeededStream, slot: u64) -> T {
        assert!(slot >= 1, "slots are numbered from 1");
        self.0.sample_at(stream, slot - 1)
    }
}
