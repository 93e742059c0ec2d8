//! Line-control diagnostics.
//!
//! Transmittometry estimates the tap fraction `r_E` from bright test pulses whose
//! slots are hidden from Eve; the Poisson noise of the received count sets the
//! smallest detectable leak, `r_min ~ 1/√(T·n_test)`. Reflectometry lives in
//! [`reflectometry`], and the on-disk trace format in [`trace_io`].

pub mod reflectometry;
pub mod trace_io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::channel::{transmittance_of, ChannelParams};
use crate::error::{check, Error, Result};

pub use reflectometry::{
    average_traces, detect_new_events, fit_baseline, inject_events, synthesize_reflectogram,
    BaselineFit, Detection, EventKind, FiberEvent, Reflectogram, SynthParams,
};

/// Test pulses whose expected count at Bob falls below this many photons are
/// rejected as unusable.
pub const MIN_EXPECTED_COUNT: f64 = 10.0;

/// Mean photons per test pulse needed to resolve a leak of `min_leak`:
/// `n_test = 10^(μD) / r_min²`.
pub fn required_test_intensity(min_leak: f64, distance_km: f64, mu: f64) -> Result<f64> {
    check(
        min_leak > 0.0 && min_leak <= 1.0,
        "min_leak",
        min_leak,
        "in (0, 1]",
    )?;
    line_transmittance(distance_km, mu)?;
    Ok(10f64.powf(mu * distance_km) / (min_leak * min_leak))
}

/// Smallest leak resolvable with test pulses of `intensity` photons:
/// `r_min = 1/√(T·n_test)`.
pub fn min_detectable_leakage(intensity: f64, distance_km: f64, mu: f64) -> Result<f64> {
    check(
        intensity > 0.0 && intensity.is_finite(),
        "intensity",
        intensity,
        "> 0",
    )?;
    let t = line_transmittance(distance_km, mu)?;
    Ok(1.0 / (t * intensity).sqrt())
}

fn line_transmittance(distance_km: f64, mu: f64) -> Result<f64> {
    check(mu > 0.0 && mu.is_finite(), "mu", mu, "> 0")?;
    check(
        distance_km >= 0.0 && distance_km.is_finite(),
        "distance_km",
        distance_km,
        ">= 0",
    )?;
    Ok(transmittance_of(mu, distance_km))
}

/// Bright test pulses interleaved with the signal stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestPulsePlan {
    /// Mean photons per test pulse, `n_test` at Alice.
    pub intensity: f64,
    /// Length of the pulse stream the schedule indexes into.
    pub n_pulses: u64,
    /// Slots carrying test pulses.
    pub slot_schedule: Vec<u64>,
}

impl TestPulsePlan {
    /// Every slot of a stream of `n_pulses` is a test pulse.
    pub fn every_slot(intensity: f64, n_pulses: u64) -> Self {
        TestPulsePlan {
            intensity,
            n_pulses,
            slot_schedule: (0..n_pulses).collect(),
        }
    }

    /// `n_tests` distinct slots drawn from a pre-shared key.
    pub fn from_shared_key(
        intensity: f64,
        n_pulses: u64,
        n_tests: usize,
        key: u64,
    ) -> Result<Self> {
        if n_tests as u64 > n_pulses {
            return Err(Error::Invalid(format!(
                "cannot schedule {n_tests} tests in {n_pulses} slots"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        let mut slots = std::collections::BTreeSet::new();
        while slots.len() < n_tests {
            slots.insert(rng.random_range(0..n_pulses));
        }
        Ok(TestPulsePlan {
            intensity,
            n_pulses,
            slot_schedule: slots.into_iter().collect(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        check(
            self.intensity > 0.0 && self.intensity.is_finite(),
            "intensity",
            self.intensity,
            "> 0",
        )?;
        if self.slot_schedule.is_empty() {
            return Err(Error::Invalid("test schedule is empty".into()));
        }
        let mut sorted = self.slot_schedule.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Invalid("test schedule has duplicate slots".into()));
        }
        if sorted[sorted.len() - 1] >= self.n_pulses {
            return Err(Error::Invalid("test slot beyond the pulse stream".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakEstimate {
    pub r_hat: f64,
    pub std_err: f64,
    pub n_used: usize,
    /// `r_hat < −3·std_err`: more light arrived than the documented line allows.
    pub implausible: bool,
}

/// Estimates `r_E` by comparing Bob's test-pulse counts with the premeasured
/// line transmittance.
///
/// Counts are `Poisson(T(1 − r_E)·n_test)`; the estimator is
/// `r̂ = 1 − mean/(T·n_test)` with standard error `√(mean/n)/(T·n_test)`. Slot
/// `i` draws from ChaCha stream `i` under `seed`, so the estimate depends only
/// on which slots are tested.
pub fn estimate_leakage(
    plan: &TestPulsePlan,
    channel: &ChannelParams,
    seed: u64,
) -> Result<LeakEstimate> {
    plan.validate()?;
    let t = channel.transmittance()?;
    let expected_clean = t * plan.intensity;
    if expected_clean < MIN_EXPECTED_COUNT {
        return Err(Error::UnusableEstimate {
            expected: expected_clean,
            floor: MIN_EXPECTED_COUNT,
        });
    }
    let received = expected_clean * (1.0 - channel.leak_fraction);

    let mut sum = 0.0;
    for &slot in &plan.slot_schedule {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(slot);
        let count = if received > 0.0 {
            Poisson::new(received)
                .map_err(|e| Error::Invalid(format!("poisson count: {e}")))?
                .sample(&mut rng)
        } else {
            0.0
        };
        sum += count;
    }
    let n = plan.slot_schedule.len();
    let mean = sum / n as f64;
    let r_hat = 1.0 - mean / expected_clean;
    // a zero count would give a zero error; floor it at one photon
    let std_err = (mean.max(1.0) / n as f64).sqrt() / expected_clean;
    Ok(LeakEstimate {
        r_hat,
        std_err,
        n_used: n,
        implausible: r_hat < -3.0 * std_err,
    })
}
