//! Pulse-level Monte Carlo of source, eavesdropper and detection.
//!
//! Each pulse carries a Poisson photon number. Photons are split independently
//! (binomial thinning) between Eve, the line losses and Bob according to the
//! attack. Only photon-number statistics are simulated; no quantum states.
//!
//! Randomness is counter based: pulses are grouped in fixed blocks of
//! [`BLOCK_PULSES`] and block `b` draws from ChaCha stream `b` under the master
//! seed, so the outcome does not depend on how blocks are spread over workers.

use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::channel::{nonvacuum_probability, ChannelParams};
use crate::error::{check, Error, Result};
use crate::keyrate::{bb84_lc_conclusive, cow_conclusive, cow_lc_rate, ProtocolSpec};

pub const BLOCK_PULSES: u64 = 1 << 14;

/// Z-score bound used by [`validate_against_analytic`].
pub const Z_LIMIT: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Attack {
    None,
    /// Local tap diverting the channel's `leak_fraction` before the line.
    LeakTap,
    /// Eve collects exactly the photons the line loses.
    AllLossesBeamSplitter,
    /// Photon-number splitting on a lossless line: Eve keeps all but one photon
    /// of every multi-photon pulse. Counting level only.
    PhotonNumberSplitting,
}

impl std::str::FromStr for Attack {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "none" => Ok(Attack::None),
            "leak-tap" | "tap" => Ok(Attack::LeakTap),
            "all-losses" | "all-losses-bs" | "beam-splitter" => Ok(Attack::AllLossesBeamSplitter),
            "pns" => Ok(Attack::PhotonNumberSplitting),
            other => Err(Error::Invalid(format!("unknown attack `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub protocol: ProtocolSpec,
    pub channel: ChannelParams,
    pub attack: Attack,
    pub n_pulses: u64,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        let x = self.protocol.intensity;
        check(x >= 0.0 && x.is_finite(), "intensity", x, ">= 0")?;
        if self.n_pulses == 0 {
            return Err(Error::Invalid("n_pulses must be at least 1".into()));
        }
        Ok(())
    }
}

/// Raw counts. Merging is associative and commutative.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub pulses: u64,
    pub conclusive: u64,
    pub eve_nonvacuum: u64,
    pub photons_emitted: u64,
    pub photons_eve: u64,
    pub photons_bob: u64,
    pub photons_dissipated: u64,
    pub photons_eve_sq: u64,
}

impl Tally {
    pub fn merge(self, o: Tally) -> Tally {
        Tally {
            pulses: self.pulses + o.pulses,
            conclusive: self.conclusive + o.conclusive,
            eve_nonvacuum: self.eve_nonvacuum + o.eve_nonvacuum,
            photons_emitted: self.photons_emitted + o.photons_emitted,
            photons_eve: self.photons_eve + o.photons_eve,
            photons_bob: self.photons_bob + o.photons_bob,
            photons_dissipated: self.photons_dissipated + o.photons_dissipated,
            photons_eve_sq: self.photons_eve_sq + o.photons_eve_sq,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

impl Estimate {
    fn binomial(successes: u64, trials: u64) -> Self {
        let n = trials as f64;
        let p = successes as f64 / n;
        Estimate {
            value: p,
            std_err: (p * (1.0 - p) / n).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub n_emitted: u64,
    pub n_conclusive: u64,
    pub n_eve_nonvacuum: u64,
    pub est_conclusive_prob: Estimate,
    /// Fraction of pulses in which Eve holds at least one photon.
    pub est_eve_bit_fraction: Estimate,
    pub est_eve_mean_photons: Estimate,
    pub tally: Tally,
}

impl SimOutcome {
    fn from_tally(t: Tally) -> Self {
        let n = t.pulses as f64;
        let mean = t.photons_eve as f64 / n;
        let var = (t.photons_eve_sq as f64 / n - mean * mean).max(0.0);
        SimOutcome {
            n_emitted: t.pulses,
            n_conclusive: t.conclusive,
            n_eve_nonvacuum: t.eve_nonvacuum,
            est_conclusive_prob: Estimate::binomial(t.conclusive, t.pulses),
            est_eve_bit_fraction: Estimate::binomial(t.eve_nonvacuum, t.pulses),
            est_eve_mean_photons: Estimate {
                value: mean,
                std_err: (var / n).sqrt(),
            },
            tally: t,
        }
    }
}

fn thin<R: Rng>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n, p).expect("valid binomial").sample(rng)
    }
}

struct PulseModel {
    source: Option<Poisson<f64>>,
    t: f64,
    leak: f64,
    attack: Attack,
    sifted: bool,
}

impl PulseModel {
    fn new(cfg: &SimConfig) -> Result<Self> {
        let x = cfg.protocol.intensity;
        let source = if x > 0.0 {
            Some(Poisson::new(x).map_err(|e| Error::Invalid(format!("poisson source: {e}")))?)
        } else {
            None
        };
        Ok(PulseModel {
            source,
            t: cfg.channel.transmittance()?,
            leak: cfg.channel.leak_fraction,
            attack: cfg.attack,
            sifted: cfg.protocol.protocol.is_bb84(),
        })
    }

    fn pulse<R: Rng>(&self, rng: &mut R, tally: &mut Tally) {
        let n = self.source.map_or(0, |p| p.sample(rng) as u64);
        let (eve, bob, dissipated) = match self.attack {
            Attack::None => {
                let bob = thin(rng, n, self.t);
                (0, bob, n - bob)
            }
            Attack::LeakTap => {
                let eve = thin(rng, n, self.leak);
                let rest = n - eve;
                let bob = thin(rng, rest, self.t);
                (eve, bob, rest - bob)
            }
            Attack::AllLossesBeamSplitter => {
                let eve = thin(rng, n, 1.0 - self.t);
                (eve, n - eve, 0)
            }
            Attack::PhotonNumberSplitting => {
                let (eve, forwarded) = if n >= 2 { (n - 1, 1) } else { (0, n) };
                let bob = thin(rng, forwarded, self.t);
                (eve, bob, forwarded - bob)
            }
        };
        let mut conclusive = bob > 0;
        if conclusive && self.sifted {
            conclusive = rng.random_bool(0.5);
        }

        tally.pulses += 1;
        tally.conclusive += conclusive as u64;
        tally.eve_nonvacuum += (eve > 0) as u64;
        tally.photons_emitted += n;
        tally.photons_eve += eve;
        tally.photons_bob += bob;
        tally.photons_dissipated += dissipated;
        tally.photons_eve_sq += eve * eve;
    }
}

fn run_block(model: &PulseModel, seed: u64, block: u64, n_pulses: u64) -> Tally {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    let start = block * BLOCK_PULSES;
    let end = (start + BLOCK_PULSES).min(n_pulses);
    let mut tally = Tally::default();
    for _ in start..end {
        model.pulse(&mut rng, &mut tally);
    }
    tally
}

/// Simulates `config.n_pulses` pulses on up to `workers` threads.
pub fn run(config: &SimConfig, workers: usize) -> Result<SimOutcome> {
    config.validate()?;
    let model = PulseModel::new(config)?;
    let n_blocks = config.n_pulses.div_ceil(BLOCK_PULSES);
    let workers = (workers.max(1) as u64).min(n_blocks);

    let tally = if workers == 1 {
        (0..n_blocks)
            .map(|b| run_block(&model, config.seed, b, config.n_pulses))
            .fold(Tally::default(), Tally::merge)
    } else {
        thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let model = &model;
                    s.spawn(move || {
                        (w..n_blocks)
                            .step_by(workers as usize)
                            .map(|b| run_block(model, config.seed, b, config.n_pulses))
                            .fold(Tally::default(), Tally::merge)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("simulation worker panicked"))
                .fold(Tally::default(), Tally::merge)
        })
    };
    Ok(SimOutcome::from_tally(tally))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub quantity: String,
    pub analytic: f64,
    pub empirical: f64,
    pub std_err: f64,
    pub z: f64,
}

impl Comparison {
    fn new(quantity: &str, analytic: f64, empirical: f64, n: u64) -> Self {
        let std_err = (analytic * (1.0 - analytic) / n as f64).sqrt();
        let z = if std_err > 0.0 {
            (empirical - analytic) / std_err
        } else if empirical == analytic {
            0.0
        } else {
            f64::INFINITY
        };
        Comparison {
            quantity: quantity.to_string(),
            analytic,
            empirical,
            std_err,
            z,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Comparison>,
    pub passed: bool,
    pub outcome: SimOutcome,
}

/// Analytic `(p(✓), P_E(≥1))` for a configuration, from the closed-form rates.
pub fn analytic_probabilities(config: &SimConfig) -> Result<(f64, f64)> {
    config.validate()?;
    let t = config.channel.transmittance()?;
    let r = config.channel.leak_fraction;
    let x = config.protocol.intensity;
    let bb84 = config.protocol.protocol.is_bb84();
    let conclusive_on = |leak: f64| -> Result<f64> {
        if bb84 {
            bb84_lc_conclusive(t, leak, x)
        } else if leak > 0.0 {
            Ok(cow_lc_rate(t, leak, x)?.conclusive_prob)
        } else {
            cow_conclusive(t, x)
        }
    };
    Ok(match config.attack {
        Attack::None => (conclusive_on(0.0)?, 0.0),
        Attack::LeakTap => (conclusive_on(r)?, nonvacuum_probability(r * x)),
        Attack::AllLossesBeamSplitter => {
            (conclusive_on(0.0)?, nonvacuum_probability((1.0 - t) * x))
        }
        Attack::PhotonNumberSplitting => {
            let sift = if bb84 { 0.5 } else { 1.0 };
            let multi = 1.0 - (-x).exp() * (1.0 + x);
            (sift * t * nonvacuum_probability(x), multi.max(0.0))
        }
    })
}

/// Runs the simulation and compares its frequencies with the analytic values.
pub fn validate_against_analytic(config: &SimConfig, workers: usize) -> Result<ValidationReport> {
    let (p_conclusive, p_eve) = analytic_probabilities(config)?;
    let outcome = run(config, workers)?;
    let n = outcome.n_emitted;
    let checks = vec![
        Comparison::new(
            "conclusive_prob",
            p_conclusive,
            outcome.est_conclusive_prob.value,
            n,
        ),
        Comparison::new(
            "eve_nonvacuum_prob",
            p_eve,
            outcome.est_eve_bit_fraction.value,
            n,
        ),
    ];
    let passed = checks.iter().all(|c| c.z.abs() <= Z_LIMIT);
    Ok(ValidationReport {
        checks,
        passed,
        outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{leak_split, DEFAULT_MU};
    use crate::keyrate::Protocol;

    fn cfg(protocol: Protocol, d: f64, r: f64, x: f64, attack: Attack, n: u64) -> SimConfig {
        SimConfig {
            protocol: ProtocolSpec::new(protocol, x).unwrap(),
            channel: ChannelParams::new(DEFAULT_MU, d, r).unwrap(),
            attack,
            n_pulses: n,
            seed: 0x5eed,
        }
    }

    #[test]
    fn bb84_lc_matches_conclusive_and_eve_formulas() {
        let c = cfg(
            Protocol::Bb84Lc,
            100.0,
            0.01,
            8.0,
            Attack::LeakTap,
            1_000_000,
        );
        let rep = validate_against_analytic(&c, 4).unwrap();
        assert!((rep.checks[0].analytic - 0.038_072_432_530_118).abs() < 1e-12);
        assert!((rep.checks[1].analytic - 0.076_883_653_613_364).abs() < 1e-12);
        assert!(rep.passed, "{:?}", rep.checks);
    }

    #[test]
    fn vacuum_pulses_never_click() {
        for p in Protocol::ALL {
            let c = cfg(p, 50.0, 0.0, 0.0, Attack::None, 10_000);
            let rep = validate_against_analytic(&c, 1).unwrap();
            assert_eq!(rep.outcome.n_conclusive, 0);
            assert_eq!(rep.outcome.n_eve_nonvacuum, 0);
            assert!(rep.checks.iter().all(|c| c.z == 0.0));
            assert!(rep.passed);
        }
    }

    #[test]
    fn deterministic_across_workers() {
        let c = cfg(Protocol::CowLc, 100.0, 0.01, 37.0, Attack::LeakTap, 100_003);
        let a = run(&c, 1).unwrap();
        assert_eq!(a, run(&c, 3).unwrap());
        assert_eq!(a, run(&c, 16).unwrap());
        let mut other = c;
        other.seed += 1;
        assert_ne!(a.tally, run(&other, 1).unwrap().tally);
    }

    #[test]
    fn photons_are_conserved() {
        for attack in [
            Attack::None,
            Attack::LeakTap,
            Attack::AllLossesBeamSplitter,
            Attack::PhotonNumberSplitting,
        ] {
            let t = run(&cfg(Protocol::Cow, 20.0, 0.2, 3.0, attack, 50_000), 2)
                .unwrap()
                .tally;
            assert_eq!(
                t.photons_emitted,
                t.photons_eve + t.photons_bob + t.photons_dissipated,
                "{attack:?}"
            );
        }
    }

    #[test]
    fn thinning_reproduces_eve_mean() {
        let c = cfg(Protocol::CowLc, 30.0, 0.07, 5.0, Attack::LeakTap, 200_000);
        let out = run(&c, 2).unwrap();
        let expect = leak_split(&c.channel, 5.0).unwrap().eve_mean;
        let z = (out.est_eve_mean_photons.value - expect) / out.est_eve_mean_photons.std_err;
        assert!(z.abs() <= 3.0, "z = {z}");
    }

    #[test]
    fn std_err_shrinks_as_inverse_sqrt_n() {
        let small = run(
            &cfg(Protocol::CowLc, 50.0, 0.05, 2.0, Attack::LeakTap, 10_000),
            1,
        )
        .unwrap();
        let large = run(
            &cfg(Protocol::CowLc, 50.0, 0.05, 2.0, Attack::LeakTap, 1_000_000),
            4,
        )
        .unwrap();
        let ratio = small.est_conclusive_prob.std_err / large.est_conclusive_prob.std_err;
        assert!((ratio / 10.0 - 1.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn beam_splitter_and_pns_frequencies() {
        let c = cfg(
            Protocol::Cow,
            100.0,
            0.0,
            0.45,
            Attack::AllLossesBeamSplitter,
            300_000,
        );
        let rep = validate_against_analytic(&c, 2).unwrap();
        // 1 − e^(−0.99·0.45)
        assert!((rep.checks[1].analytic - 0.359_496_056_016_012).abs() < 1e-12);
        assert!(rep.passed, "{:?}", rep.checks);

        let c = cfg(
            Protocol::Bb84DecoyUpper,
            0.0,
            0.0,
            1.0,
            Attack::PhotonNumberSplitting,
            300_000,
        );
        let rep = validate_against_analytic(&c, 2).unwrap();
        assert!(rep.passed, "{:?}", rep.checks);
    }

    #[test]
    fn rejects_invalid_configs() {
        let mut c = cfg(Protocol::Cow, 10.0, 0.0, 1.0, Attack::None, 10);
        c.n_pulses = 0;
        assert!(run(&c, 1).is_err());
        let mut c = cfg(Protocol::Cow, 10.0, 0.0, 1.0, Attack::None, 10);
        c.protocol.intensity = -1.0;
        assert!(run(&c, 1).is_err());
        c.protocol.intensity = 1.0;
        c.channel.leak_fraction = 2.0;
        assert!(run(&c, 1).is_err());
    }
}
