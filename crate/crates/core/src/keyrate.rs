//! Closed-form secret-key rates.
//!
//! Six variants are covered: the decoy-state BB84 upper bound, BB84 with line
//! control, and COW and DPS each in their original form (Eve collects every
//! photon the line loses) and with line control (Eve only holds what her local
//! tap `r_E` diverts). Rates are secret bits per emitted signal pulse.
//!
//! For COW and DPS, Eve's information is the Holevo quantity of two equiprobable
//! pure states, `h₂((1 − s)/2)`, where `s` is the overlap of the two-mode states
//! she holds. The overlap exponents are kept exactly as the protocol analysis
//! states them: `exp(−(1−T)x)` for COW and `exp(−4(1−T)x)` for DPS, and the
//! same with `r_E` in place of `1 − T` under line control.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{coherent_overlap, nonvacuum_probability, CoherentAmplitude, Phase};
use crate::error::{check, Error, Result};
use crate::scalar::Real;

/// `h₂(p) = −p·log₂p − (1−p)·log₂(1−p)`, with `h₂(0) = h₂(1) = 0`.
pub fn binary_entropy<S: Real>(p: S) -> Result<S> {
    check(
        p >= S::zero() && p <= S::one(),
        "p",
        p.as_f64(),
        "in [0, 1]",
    )?;
    Ok(h2(p))
}

fn h2<S: Real>(p: S) -> S {
    if p <= S::zero() || p >= S::one() {
        return S::zero();
    }
    let h = -(p * p.ln() + (S::one() - p) * (-p).ln_1p()) / S::LN_2();
    h.min(S::one())
}

/// Holevo quantity of two equiprobable pure states whose overlap magnitude is
/// `overlap`: `χ = h₂((1 − overlap)/2)`.
pub fn holevo_two_pure<S: Real>(overlap: S) -> Result<S> {
    check_overlap(overlap)?;
    Ok(h2((S::one() - overlap) / S::lit(2.0)))
}

/// `1 − χ` for the same ensemble, i.e. the fraction of a sifted bit that
/// survives privacy amplification.
///
/// Evaluated without the cancellation of `1 − h₂(…)` near `overlap → 0`, where
/// the result behaves as `overlap² / (2 ln 2)`.
pub fn secrecy_fraction<S: Real>(overlap: S) -> Result<S> {
    check_overlap(overlap)?;
    Ok(one_minus_holevo(overlap))
}

fn check_overlap<S: Real>(overlap: S) -> Result<()> {
    check(
        overlap >= S::zero() && overlap <= S::one(),
        "overlap",
        overlap.as_f64(),
        "in [0, 1]",
    )
}

// (1+s)ln(1+s) + (1−s)ln(1−s) = Σ_{k≥1} s^{2k} / (k(2k−1))
fn one_minus_holevo<S: Real>(s: S) -> S {
    let two = S::lit(2.0);
    if s >= S::one() {
        return S::one();
    }
    let sum = if s < S::lit(0.25) {
        let s2 = s * s;
        let mut pow = s2;
        let mut acc = S::zero();
        for k in 1..200 {
            let kf = S::lit(k as f64);
            let term = pow / (kf * (two * kf - S::one()));
            acc = acc + term;
            if term <= acc * S::epsilon() {
                break;
            }
            pow = pow * s2;
        }
        acc
    } else {
        (S::one() + s) * s.ln_1p() + (S::one() - s) * (-s).ln_1p()
    };
    sum / (two * S::LN_2())
}

/// Observables consumed by the decoy-state key length formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoyObservables<S = f64> {
    /// Signal gain `Q`.
    pub gain_signal: S,
    /// QBER `E`.
    pub qber: S,
    /// Single-photon gain `Q₁`.
    pub gain_single: S,
    /// Single-photon error rate `e₁`.
    pub error_single: S,
    /// Error-correction efficiency factor `f(E)`.
    pub ec_efficiency: S,
}

impl<S: Real> DecoyObservables<S> {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: S, name| {
            check(
                v >= S::zero() && v <= S::one(),
                name,
                v.as_f64(),
                "in [0, 1]",
            )
        };
        unit(self.gain_signal, "gain_signal")?;
        unit(self.qber, "qber")?;
        unit(self.gain_single, "gain_single")?;
        unit(self.error_single, "error_single")?;
        unit(self.ec_efficiency, "ec_efficiency")?;
        check(
            self.gain_single <= self.gain_signal,
            "gain_single",
            self.gain_single.as_f64(),
            "<= gain_signal",
        )
    }
}

/// `L_f = L·½[Q₁(1 − h₂(e₁)) − Q·f(E)·h₂(E)]`, floored at zero.
pub fn decoy_key_length<S: Real>(obs: &DecoyObservables<S>, sifted_len: S) -> Result<S> {
    obs.validate()?;
    check(
        sifted_len >= S::zero(),
        "sifted_len",
        sifted_len.as_f64(),
        ">= 0",
    )?;
    let secure = obs.gain_single * (S::one() - h2(obs.error_single));
    let leaked = obs.gain_signal * obs.ec_efficiency * h2(obs.qber);
    let len = sifted_len * S::lit(0.5) * (secure - leaked);
    Ok(len.max(S::zero()))
}

/// One evaluated operating point of a protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint<S = f64> {
    /// Secret bits per emitted pulse.
    pub rate: S,
    /// Probability that a pulse yields a sifted bit, `p(✓)`.
    pub conclusive_prob: S,
    /// Upper bound on Eve's information per sifted bit.
    pub eve_info: S,
}

fn check_t<S: Real>(t: S) -> Result<()> {
    check(
        t > S::zero() && t <= S::one(),
        "transmittance",
        t.as_f64(),
        "in (0, 1]",
    )
}

fn check_leak<S: Real>(r: S) -> Result<()> {
    check(
        r >= S::zero() && r <= S::one(),
        "leak_fraction",
        r.as_f64(),
        "in [0, 1]",
    )
}

fn check_intensity<S: Real>(x: S) -> Result<()> {
    check(
        x >= S::zero() && x.is_finite(),
        "intensity",
        x.as_f64(),
        ">= 0 and finite",
    )
}

/// Decoy-state BB84 upper bound `½·T·x·e^(−x)`; maximal at `x = 1`.
pub fn bb84_decoy_upper<S: Real>(t: S, intensity: S) -> Result<S> {
    check_t(t)?;
    check_intensity(intensity)?;
    Ok(S::lit(0.5) * t * intensity * (-intensity).exp())
}

fn bb84_decoy_upper_point<S: Real>(t: S, intensity: S) -> Result<RatePoint<S>> {
    let rate = bb84_decoy_upper(t, intensity)?;
    let conclusive = S::lit(0.5) * nonvacuum_probability(t * intensity);
    // Everything beyond the single-photon share of the sifted key is Eve's.
    let eve_info = if conclusive > S::zero() {
        (S::one() - rate / conclusive).max(S::zero())
    } else {
        S::zero()
    };
    Ok(RatePoint {
        rate,
        conclusive_prob: conclusive,
        eve_info,
    })
}

/// `p′(✓) = ½[1 − exp(−T(1−r_E)x)]`.
pub fn bb84_lc_conclusive<S: Real>(t: S, leak: S, intensity: S) -> Result<S> {
    check_t(t)?;
    check_leak(leak)?;
    check_intensity(intensity)?;
    Ok(S::lit(0.5) * nonvacuum_probability(t * (S::one() - leak) * intensity))
}

/// BB84 under line control: Eve learns the bit whenever her tap holds at
/// least one photon, so `rate = p′(✓)·exp(−r_E·x)`.
pub fn bb84_lc_rate<S: Real>(t: S, leak: S, intensity: S) -> Result<RatePoint<S>> {
    let conclusive = bb84_lc_conclusive(t, leak, intensity)?;
    let eve_empty = (-leak * intensity).exp();
    Ok(RatePoint {
        rate: conclusive * eve_empty,
        conclusive_prob: conclusive,
        eve_info: nonvacuum_probability(leak * intensity),
    })
}

/// `p(✓) = 1 − exp(−T·x)`; no sifting factor.
pub fn cow_conclusive<S: Real>(t: S, intensity: S) -> Result<S> {
    check_t(t)?;
    check_intensity(intensity)?;
    Ok(nonvacuum_probability(t * intensity))
}

fn lc_conclusive<S: Real>(t: S, leak: S, intensity: S) -> Result<S> {
    check_t(t)?;
    check_leak(leak)?;
    check_intensity(intensity)?;
    Ok(nonvacuum_probability(t * (S::one() - leak) * intensity))
}

/// Two-mode overlap `|⟨a, 0|0, a⟩| = |⟨a|0⟩|²` of the COW bit states as seen by
/// Eve holding mean `eve_mean` photons of the non-empty pulse, returned with
/// `−ln` of its value.
fn cow_eve_overlap<S: Real>(eve_mean: S) -> (S, S) {
    let a = CoherentAmplitude {
        mean_photons: eve_mean,
        phase: Phase::Zero,
    };
    (
        coherent_overlap(&a, &CoherentAmplitude::vacuum()).powi(2),
        eve_mean,
    )
}

/// `|⟨a|−a⟩|²` for the DPS bit states held by Eve, with `−ln` of its value.
fn dps_eve_overlap<S: Real>(eve_mean: S) -> (S, S) {
    let plus = CoherentAmplitude {
        mean_photons: eve_mean,
        phase: Phase::Zero,
    };
    let minus = CoherentAmplitude {
        mean_photons: eve_mean,
        phase: Phase::Pi,
    };
    (
        coherent_overlap(&plus, &minus).powi(2),
        S::lit(4.0) * eve_mean,
    )
}

fn holevo_point<S: Real>(conclusive: S, (overlap, neg_ln_overlap): (S, S)) -> RatePoint<S> {
    RatePoint {
        rate: (conclusive * one_minus_holevo(overlap)).max(S::zero()),
        conclusive_prob: conclusive,
        eve_info: h2(nonvacuum_probability(neg_ln_overlap) / S::lit(2.0)),
    }
}

/// Original COW against the beam-splitter attack collecting all `1 − T` losses.
pub fn cow_rate<S: Real>(t: S, intensity: S) -> Result<RatePoint<S>> {
    let conclusive = cow_conclusive(t, intensity)?;
    Ok(holevo_point(
        conclusive,
        cow_eve_overlap((S::one() - t) * intensity),
    ))
}

/// COW with line control; Eve holds only the `r_E` tap.
pub fn cow_lc_rate<S: Real>(t: S, leak: S, intensity: S) -> Result<RatePoint<S>> {
    let conclusive = lc_conclusive(t, leak, intensity)?;
    Ok(holevo_point(conclusive, cow_eve_overlap(leak * intensity)))
}

/// Original DPS against the beam-splitter attack.
pub fn dps_rate<S: Real>(t: S, intensity: S) -> Result<RatePoint<S>> {
    let conclusive = cow_conclusive(t, intensity)?;
    Ok(holevo_point(
        conclusive,
        dps_eve_overlap((S::one() - t) * intensity),
    ))
}

/// DPS with line control.
pub fn dps_lc_rate<S: Real>(t: S, leak: S, intensity: S) -> Result<RatePoint<S>> {
    let conclusive = lc_conclusive(t, leak, intensity)?;
    Ok(holevo_point(conclusive, dps_eve_overlap(leak * intensity)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Bb84DecoyUpper,
    Bb84Lc,
    Cow,
    CowLc,
    Dps,
    DpsLc,
}

impl Protocol {
    pub const ALL: [Protocol; 6] = [
        Protocol::Bb84DecoyUpper,
        Protocol::Bb84Lc,
        Protocol::Cow,
        Protocol::CowLc,
        Protocol::Dps,
        Protocol::DpsLc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Bb84DecoyUpper => "bb84-decoy-upper",
            Protocol::Bb84Lc => "bb84-lc",
            Protocol::Cow => "cow",
            Protocol::CowLc => "cow-lc",
            Protocol::Dps => "dps",
            Protocol::DpsLc => "dps-lc",
        }
    }

    pub fn is_line_controlled(self) -> bool {
        matches!(self, Protocol::Bb84Lc | Protocol::CowLc | Protocol::DpsLc)
    }

    /// BB84 variants sift on basis agreement, halving the conclusive rate.
    pub fn is_bb84(self) -> bool {
        matches!(self, Protocol::Bb84DecoyUpper | Protocol::Bb84Lc)
    }

    /// Evaluates the protocol. Baseline variants ignore `leak`, since they
    /// already attribute all channel loss to Eve.
    pub fn rate<S: Real>(self, t: S, leak: S, intensity: S) -> Result<RatePoint<S>> {
        match self {
            Protocol::Bb84DecoyUpper => bb84_decoy_upper_point(t, intensity),
            Protocol::Bb84Lc => bb84_lc_rate(t, leak, intensity),
            Protocol::Cow => cow_rate(t, intensity),
            Protocol::CowLc => cow_lc_rate(t, leak, intensity),
            Protocol::Dps => dps_rate(t, intensity),
            Protocol::DpsLc => dps_lc_rate(t, leak, intensity),
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Protocol::ALL
            .into_iter()
            .find(|p| p.name() == norm)
            .ok_or_else(|| Error::Invalid(format!("unknown protocol `{s}`")))
    }
}

/// A protocol variant at a chosen signal intensity `|γ|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec<S = f64> {
    pub protocol: Protocol,
    pub intensity: S,
}

impl<S: Real> ProtocolSpec<S> {
    pub fn new(protocol: Protocol, intensity: S) -> Result<Self> {
        check_intensity(intensity)?;
        Ok(Self {
            protocol,
            intensity,
        })
    }

    pub fn evaluate(&self, channel: &crate::channel::ChannelParams<S>) -> Result<RatePoint<S>> {
        let t = channel.transmittance()?;
        self.protocol.rate(t, channel.leak_fraction, self.intensity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(binary_entropy::<f64>(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy::<f64>(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy::<f64>(1.0).unwrap(), 0.0);
        assert!((binary_entropy::<f64>(0.25).unwrap() - 0.811_278_124_459_132_8).abs() < 1e-15);
        assert!(binary_entropy::<f64>(-0.1).is_err());
        assert!(binary_entropy::<f64>(1.1).is_err());
    }

    #[test]
    fn holevo_examples() {
        assert_eq!(holevo_two_pure::<f64>(1.0).unwrap(), 0.0);
        assert_eq!(holevo_two_pure::<f64>(0.0).unwrap(), 1.0);
        let chi = holevo_two_pure::<f64>((-0.5f64).exp()).unwrap();
        assert!((chi - 0.715_349_2).abs() < 1e-6, "{chi}");
        assert!(holevo_two_pure::<f64>(1.5).is_err());
    }

    #[test]
    fn secrecy_fraction_matches_naive_where_naive_is_fine() {
        for s in [0.3, 0.5, 0.77, 0.9, 0.999] {
            let naive = 1.0 - holevo_two_pure::<f64>(s).unwrap();
            assert!(close(secrecy_fraction::<f64>(s).unwrap(), naive, 1e-12));
        }
        // small-overlap branch against the leading terms of the series
        let s: f64 = 1e-3;
        let lead = (s * s + s.powi(4) / 6.0) / (2.0 * std::f64::consts::LN_2);
        assert!(close(secrecy_fraction::<f64>(s).unwrap(), lead, 1e-12));
        // both branches agree across the switch point
        let below = secrecy_fraction::<f64>(0.25 - 1e-12).unwrap();
        let above = secrecy_fraction::<f64>(0.25).unwrap();
        assert!(close(below, above, 1e-10));
    }

    #[test]
    fn decoy_key_length_examples() {
        let obs = |q: f64, e: f64, q1: f64, e1: f64, f: f64| DecoyObservables {
            gain_signal: q,
            qber: e,
            gain_single: q1,
            error_single: e1,
            ec_efficiency: f,
        };
        let l = decoy_key_length(&obs(0.1, 0.0, 0.1, 0.0, 0.7), 1e6).unwrap();
        assert!(close(l, 0.5e6 * 0.1, 1e-15));
        assert_eq!(
            decoy_key_length(&obs(0.1, 0.05, 0.0, 0.0, 1.0), 1e6).unwrap(),
            0.0
        );
        // ½·10⁶·(0.08·(1 − h₂(0.02)) − 0.1·h₂(0.03)), evaluated independently
        let l = decoy_key_length(&obs(0.1, 0.03, 0.08, 0.02, 1.0), 1e6).unwrap();
        assert!((l - 24_622.785_406_748).abs() < 1e-6, "{l}");
        assert!(decoy_key_length(&obs(0.1, 0.0, 0.2, 0.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn bb84_examples() {
        assert!(close(
            bb84_decoy_upper::<f64>(1.0, 1.0).unwrap(),
            0.183_939_720_585_721_2,
            1e-14
        ));
        assert!(close(
            bb84_decoy_upper::<f64>(0.01, 1.0).unwrap(),
            0.001_839_397_205_857_212,
            1e-14
        ));
        assert_eq!(bb84_decoy_upper::<f64>(0.3, 0.0).unwrap(), 0.0);
        assert!(bb84_decoy_upper::<f64>(0.0, 1.0).is_err());
        assert!(bb84_decoy_upper::<f64>(1.2, 1.0).is_err());

        assert_eq!(bb84_lc_conclusive::<f64>(0.01, 0.01, 0.0).unwrap(), 0.0);
        // ½(1 − e^(−0.0792))
        assert!(
            (bb84_lc_conclusive::<f64>(0.01, 0.01, 8.0).unwrap() - 0.038_072_432_530_118).abs()
                < 1e-14
        );
        assert!(close(
            bb84_lc_conclusive::<f64>(0.5, 0.2, 1e4).unwrap(),
            0.5,
            1e-15
        ));

        assert!(close(
            bb84_lc_rate::<f64>(0.01, 0.0, 1e4).unwrap().rate,
            0.5,
            1e-12
        ));
        let p = bb84_lc_rate::<f64>(0.01, 0.01, 8.0).unwrap();
        assert!((p.rate - 0.035_145_284_815_254).abs() < 1e-14, "{}", p.rate);
        assert!((p.eve_info - 0.076_883_653_613_364).abs() < 1e-14);
        assert_eq!(bb84_lc_rate::<f64>(0.01, 1.0, 5.0).unwrap().rate, 0.0);
    }

    #[test]
    fn cow_examples() {
        assert_eq!(cow_conclusive::<f64>(0.01, 0.0).unwrap(), 0.0);
        assert!((cow_conclusive::<f64>(0.01, 0.45).unwrap() - 0.004_489_9).abs() < 1e-7);
        assert_eq!(cow_conclusive::<f64>(1.0, 1e3).unwrap(), 1.0);

        let p = cow_rate::<f64>(1.0, 1.0).unwrap();
        assert!(close(p.rate, 0.632_120_558_828_557_7, 1e-14));
        assert_eq!(p.eve_info, 0.0);
        let p = cow_rate::<f64>(0.01, 0.45).unwrap();
        assert!((p.rate - 1.44e-3).abs() < 5e-6, "{}", p.rate);
        assert!(cow_rate::<f64>(0.01, 1e3).unwrap().rate < 1e-300);

        let p = cow_lc_rate::<f64>(0.01, 0.0, 37.0).unwrap();
        assert!((p.rate - 0.309_265_669_362_645).abs() < 1e-14);
        assert_eq!(p.rate, p.conclusive_prob);
        let p = cow_lc_rate::<f64>(0.01, 0.01, 37.0).unwrap();
        assert!((p.rate - 0.116).abs() < 5e-4, "{}", p.rate);
        assert!(cow_lc_rate::<f64>(0.01, 0.5, 1e3).unwrap().rate < 1e-100);
    }

    #[test]
    fn dps_examples() {
        assert!(close(
            dps_rate::<f64>(1.0, 1.0).unwrap().rate,
            0.632_120_558_828_557_7,
            1e-14
        ));
        // (1 − e^(−0.002))·[1 − h₂((1 − e^(−0.792))/2)], evaluated independently
        let p = dps_rate::<f64>(0.01, 0.2).unwrap();
        assert!((p.rate - 3.067_214e-4).abs() < 1e-9, "{}", p.rate);
        let p = dps_lc_rate::<f64>(0.01, 0.0, 37.0).unwrap();
        assert!((p.rate - 0.309_265_669_362_645).abs() < 1e-14);
        let p = dps_lc_rate::<f64>(0.01, 0.01, 10.0).unwrap();
        assert!((p.rate - 0.033_389_36).abs() < 1e-8, "{}", p.rate);
        assert!(dps_lc_rate::<f64>(0.01, 0.5, 1e3).unwrap().rate < 1e-100);
    }

    #[test]
    fn dps_holevo_is_cow_at_four_times_intensity() {
        for x in [0.01, 0.3, 1.0, 4.2] {
            let dps = dps_rate::<f64>(0.5, x).unwrap();
            let cow = cow_rate::<f64>(0.5, 4.0 * x).unwrap();
            assert!(close(dps.eve_info, cow.eve_info, 1e-13));
        }
    }

    #[test]
    fn protocol_names_round_trip() {
        for p in Protocol::ALL {
            assert_eq!(p.name().parse::<Protocol>().unwrap(), p);
        }
        assert_eq!("COW_LC".parse::<Protocol>().unwrap(), Protocol::CowLc);
        assert!("sarg04".parse::<Protocol>().is_err());
    }

    #[test]
    fn f32_tracks_f64() {
        for p in Protocol::ALL {
            let a = p.rate(0.1f64, 0.05, 2.0).unwrap().rate;
            let b = p.rate(0.1f32, 0.05, 2.0).unwrap().rate as f64;
            assert!(close(b, a, 1e-5), "{p}: {a} vs {b}");
        }
    }

    proptest! {
        #[test]
        fn rates_bounded(d in 0.0..250.0f64, r in 0.0..=1.0f64, lx in -3.0..3.0f64) {
            let t = 10f64.powf(-d / 50.0);
            let x = 10f64.powf(lx);
            for p in Protocol::ALL {
                let pt = p.rate(t, r, x).unwrap();
                prop_assert!((0.0..=1.0).contains(&pt.rate));
                prop_assert!(pt.rate <= pt.conclusive_prob);
                prop_assert!((0.0..=1.0).contains(&pt.eve_info));
            }
        }

        #[test]
        fn decoy_upper_separable(t in 1e-6..=1.0f64, x in 0.0..50.0f64) {
            let base = bb84_decoy_upper::<f64>(1.0, x).unwrap();
            prop_assert!(close(bb84_decoy_upper::<f64>(t, x).unwrap() / t, base, 1e-13) || base == 0.0);
        }

        /// Line control beats the loss-attributing baseline evaluated on the same
        /// physical line, where Bob's end-to-end transmittance is `T(1 − r_E)`.
        #[test]
        fn line_control_dominates_same_line(d in 0.0..250.0f64, r in 0.0..=1.0f64, lx in -3.0..3.0f64) {
            let t = 10f64.powf(-d / 50.0);
            let x = 10f64.powf(lx);
            let t_eff = t * (1.0 - r);
            prop_assume!(t_eff > 0.0);
            let pairs = [
                (Protocol::Bb84Lc, Protocol::Bb84DecoyUpper),
                (Protocol::CowLc, Protocol::Cow),
                (Protocol::DpsLc, Protocol::Dps),
            ];
            for (lc, base) in pairs {
                let a = lc.rate(t, r, x).unwrap().rate;
                let b = base.rate(t_eff, 0.0, x).unwrap().rate;
                prop_assert!(a >= b * (1.0 - 1e-12), "{lc}: {a} < {b}");
            }
        }
    }
}
