//! Channel arithmetic: line transmittance, the eavesdropper's tap, coherent-state
//! overlaps and Poisson photon statistics.
//!
//! Intensities are mean photon numbers per pulse. The eavesdropper's tap sits at
//! the channel input, so her share `r_E` is taken before any attenuation and the
//! remainder travels the full line to Bob.

use serde::{Deserialize, Serialize};

use crate::error::{check, Result};
use crate::scalar::Real;

/// Fiber attenuation used throughout unless overridden, in km⁻¹ (base-10 exponent).
pub const DEFAULT_MU: f64 = 1.0 / 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams<S = f64> {
    /// Attenuation coefficient μ in km⁻¹; `T = 10^(−μ·D)`.
    pub mu: S,
    pub distance_km: S,
    /// Intensity fraction `r_E` diverted by a local tap.
    pub leak_fraction: S,
}

impl<S: Real> ChannelParams<S> {
    pub fn new(mu: S, distance_km: S, leak_fraction: S) -> Result<Self> {
        let params = Self {
            mu,
            distance_km,
            leak_fraction,
        };
        params.validate()?;
        Ok(params)
    }

    /// A line of the given length with the default attenuation and no tap.
    pub fn lossless_tap(distance_km: S) -> Result<Self> {
        Self::new(S::lit(DEFAULT_MU), distance_km, S::zero())
    }

    pub fn with_leak(self, leak_fraction: S) -> Result<Self> {
        Self::new(self.mu, self.distance_km, leak_fraction)
    }

    pub fn validate(&self) -> Result<()> {
        check(
            self.mu > S::zero() && self.mu.is_finite(),
            "mu",
            self.mu.as_f64(),
            "> 0",
        )?;
        check(
            self.distance_km >= S::zero() && self.distance_km.is_finite(),
            "distance_km",
            self.distance_km.as_f64(),
            ">= 0",
        )?;
        check(
            self.leak_fraction >= S::zero() && self.leak_fraction <= S::one(),
            "leak_fraction",
            self.leak_fraction.as_f64(),
            "in [0, 1]",
        )
    }

    pub fn transmittance(&self) -> Result<S> {
        transmittance(self)
    }
}

/// `T = 10^(−μ·D)`.
pub fn transmittance<S: Real>(params: &ChannelParams<S>) -> Result<S> {
    params.validate()?;
    Ok(transmittance_of(params.mu, params.distance_km))
}

/// Unchecked `10^(−μ·D)`.
pub(crate) fn transmittance_of<S: Real>(mu: S, distance_km: S) -> S {
    S::lit(10.0).powf(-(mu * distance_km))
}

/// Mean photon numbers after the tap and the line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonSplit<S = f64> {
    pub eve_mean: S,
    pub bob_mean: S,
    /// Photons scattered out of the line between the tap and Bob.
    pub dissipated_mean: S,
}

/// Splits a pulse of mean `intensity` into Eve's share `r_E·x` and Bob's
/// `T·(1 − r_E)·x`.
pub fn leak_split<S: Real>(params: &ChannelParams<S>, intensity: S) -> Result<PhotonSplit<S>> {
    let t = transmittance(params)?;
    check(
        intensity >= S::zero(),
        "intensity",
        intensity.as_f64(),
        ">= 0",
    )?;
    let r = params.leak_fraction;
    let forwarded = (S::one() - r) * intensity;
    Ok(PhotonSplit {
        eve_mean: r * intensity,
        bob_mean: t * forwarded,
        dissipated_mean: (S::one() - t) * forwarded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Zero,
    Pi,
}

impl Phase {
    fn sign<S: Real>(self) -> S {
        match self {
            Phase::Zero => S::one(),
            Phase::Pi => -S::one(),
        }
    }
}

/// Coherent state `|±√n⟩` with a real amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentAmplitude<S = f64> {
    pub mean_photons: S,
    pub phase: Phase,
}

impl<S: Real> CoherentAmplitude<S> {
    pub fn new(mean_photons: S, phase: Phase) -> Result<Self> {
        check(
            mean_photons >= S::zero() && mean_photons.is_finite(),
            "mean_photons",
            mean_photons.as_f64(),
            ">= 0",
        )?;
        Ok(Self {
            mean_photons,
            phase,
        })
    }

    pub fn vacuum() -> Self {
        Self {
            mean_photons: S::zero(),
            phase: Phase::Zero,
        }
    }

    pub fn amplitude(&self) -> S {
        self.phase.sign::<S>() * self.mean_photons.sqrt()
    }
}

/// `|⟨α|β⟩| = exp(−|α − β|²/2)`.
pub fn coherent_overlap<S: Real>(a: &CoherentAmplitude<S>, b: &CoherentAmplitude<S>) -> S {
    let d = a.amplitude() - b.amplitude();
    (-(d * d) / S::lit(2.0)).exp()
}

/// Poisson probability of an empty pulse, `exp(−mean)`.
pub fn vacuum_probability<S: Real>(mean: S) -> S {
    debug_assert!(mean >= S::zero());
    (-mean).exp()
}

/// Probability of at least one photon, `1 − exp(−mean)`, without cancellation
/// for small means.
pub(crate) fn nonvacuum_probability<S: Real>(mean: S) -> S {
    -(-mean).exp_m1()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ch(d: f64, r: f64) -> ChannelParams {
        ChannelParams::new(DEFAULT_MU, d, r).unwrap()
    }

    #[test]
    fn transmittance_examples() {
        assert_eq!(ch(0.0, 0.0).transmittance().unwrap(), 1.0);
        assert!((ch(50.0, 0.0).transmittance().unwrap() - 0.1).abs() < 1e-15);
        assert!((ch(100.0, 0.0).transmittance().unwrap() - 0.01).abs() < 1e-16);
    }

    #[test]
    fn transmittance_rejects_bad_params() {
        let bad = ChannelParams {
            mu: DEFAULT_MU,
            distance_km: -1.0,
            leak_fraction: 0.0,
        };
        assert!(transmittance(&bad).is_err());
        let bad = ChannelParams {
            mu: 0.0,
            distance_km: 1.0,
            leak_fraction: 0.0,
        };
        assert!(transmittance(&bad).is_err());
        assert!(ChannelParams::new(DEFAULT_MU, 1.0, 1.5).is_err());
    }

    #[test]
    fn leak_split_examples() {
        let s = leak_split(&ch(100.0, 0.0), 8.0).unwrap();
        assert_eq!(s.eve_mean, 0.0);
        assert!((s.bob_mean - 0.08).abs() < 1e-15);

        let s = leak_split(&ch(100.0, 0.01), 8.0).unwrap();
        assert!((s.eve_mean - 0.08).abs() < 1e-15);
        assert!((s.bob_mean - 0.0792).abs() < 1e-15);

        let s = leak_split(&ch(37.0, 1.0), 5.0).unwrap();
        assert_eq!(s.eve_mean, 5.0);
        assert_eq!(s.bob_mean, 0.0);

        assert!(leak_split(&ch(1.0, 0.1), -1.0).is_err());
    }

    #[test]
    fn overlap_examples() {
        let x: f64 = 0.7;
        let a = CoherentAmplitude::new(x, Phase::Zero).unwrap();
        let b = CoherentAmplitude::new(x, Phase::Pi).unwrap();
        assert_eq!(coherent_overlap(&a, &a), 1.0);
        assert!(
            (coherent_overlap(&a, &CoherentAmplitude::vacuum()) - (-x / 2.0).exp()).abs() < 1e-15
        );
        assert!((coherent_overlap(&a, &b) - (-2.0 * x).exp()).abs() < 1e-15);
        assert!(CoherentAmplitude::new(-0.1, Phase::Zero).is_err());
    }

    #[test]
    fn vacuum_examples() {
        assert_eq!(vacuum_probability(0.0f64), 1.0);
        assert!((vacuum_probability(0.08f64) - 0.923_116_346_386_635_8).abs() < 1e-15);
        assert_eq!(vacuum_probability(1e4f64), 0.0);
    }

    #[test]
    fn single_precision_agrees() {
        let p32 = ChannelParams::<f32>::new(DEFAULT_MU as f32, 50.0, 0.0).unwrap();
        assert!((p32.transmittance().unwrap() - 0.1).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn transmittance_composes(d1 in 0.0..200.0f64, d2 in 0.0..200.0f64) {
            let t12 = ch(d1 + d2, 0.0).transmittance().unwrap();
            let t1 = ch(d1, 0.0).transmittance().unwrap();
            let t2 = ch(d2, 0.0).transmittance().unwrap();
            prop_assert!((t12 - t1 * t2).abs() <= 1e-12 * t12);
            prop_assert!(t12 <= t1);
        }

        #[test]
        fn split_conserves_photons(d in 0.0..300.0f64, r in 0.0..=1.0f64, x in 0.0..1e3f64) {
            let s = leak_split(&ch(d, r), x).unwrap();
            prop_assert!(s.dissipated_mean >= 0.0);
            let total = s.eve_mean + s.bob_mean + s.dissipated_mean;
            prop_assert!((total - x).abs() <= 1e-12 * x.max(1.0));
        }

        #[test]
        fn overlap_symmetric_and_bounded(
            x in 0.0..50.0f64, y in 0.0..50.0f64, pa in any::<bool>(), pb in any::<bool>()
        ) {
            let ph = |p: bool| if p { Phase::Zero } else { Phase::Pi };
            let a = CoherentAmplitude::new(x, ph(pa)).unwrap();
            let b = CoherentAmplitude::new(y, ph(pb)).unwrap();
            let ab = coherent_overlap(&a, &b);
            prop_assert_eq!(ab, coherent_overlap(&b, &a));
            prop_assert!((0.0..=1.0).contains(&ab));
            if a.amplitude() != b.amplitude() {
                prop_assert!(ab < 1.0);
            }
        }

        #[test]
        fn vacuum_strictly_decreasing(m in 0.0..30.0f64, dm in 1e-6..5.0f64) {
            prop_assert!(vacuum_probability(m + dm) < vacuum_probability(m));
        }
    }
}
