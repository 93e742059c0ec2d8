//! Intensity optimization and distance × leakage sweeps.
//!
//! The optimizer scans [`SCAN_POINTS`] log-spaced intensities over
//! `[SCAN_MIN, SCAN_MAX]` photons, then refines the best bracket by golden-section
//! search. The rate curves are products of a rising detection term and a falling
//! privacy term; they are unimodal in practice, and the scan keeps a wrong
//! bracket from being trusted blindly.

use std::fmt;
use std::str::FromStr;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::channel::transmittance_of;
use crate::error::{check, Error, Result};
use crate::keyrate::{Protocol, RatePoint};
use crate::scalar::Real;

pub const SCAN_POINTS: usize = 128;
pub const SCAN_MIN: f64 = 1e-3;
pub const SCAN_MAX: f64 = 1e3;
/// Golden-section stops once the bracket is this narrow relative to its center.
pub const REL_WIDTH: f64 = 1e-6;

const MAX_GOLDEN_ITERS: usize = 200;

/// Maximizer of a rate over intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimum<S = f64> {
    pub intensity: S,
    pub point: RatePoint<S>,
}

/// The log-spaced scan grid used by [`maximize`].
pub fn scan_grid<S: Real>() -> Vec<S> {
    let (lo, hi) = (SCAN_MIN.log10(), SCAN_MAX.log10());
    (0..SCAN_POINTS)
        .map(|i| {
            let e = lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64;
            S::lit(10f64.powf(e))
        })
        .collect()
}

/// Maximizes `f` over `[SCAN_MIN, SCAN_MAX]`, returning `(argmax, max)`.
///
/// Fails with [`Error::DegenerateOptimum`] when `f` is zero on the whole scan.
pub fn maximize<S, F>(f: F) -> Result<(S, S)>
where
    S: Real,
    F: Fn(S) -> Result<S>,
{
    let grid = scan_grid::<S>();
    let mut values = Vec::with_capacity(grid.len());
    for &x in &grid {
        values.push(f(x)?);
    }
    let (best, &best_val) =
        values.iter().enumerate().fold(
            (0, &values[0]),
            |acc, (i, v)| if *v > *acc.1 { (i, v) } else { acc },
        );
    if best_val.is_nan() || best_val <= S::zero() {
        return Err(Error::DegenerateOptimum);
    }

    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let (x, v) = golden_section(&f, lo, hi)?;
    if v >= best_val {
        Ok((x, v))
    } else {
        Ok((grid[best], best_val))
    }
}

fn golden_section<S, F>(f: &F, mut a: S, mut b: S) -> Result<(S, S)>
where
    S: Real,
    F: Fn(S) -> Result<S>,
{
    // 1/φ
    let inv_phi = (S::lit(5.0).sqrt() - S::one()) / S::lit(2.0);
    let half = S::lit(0.5);
    let rel = S::lit(REL_WIDTH);

    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..MAX_GOLDEN_ITERS {
        if b - a <= rel * (a + b) * half {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let mid = (a + b) * half;
    let fm = f(mid)?;
    // keep whichever interior probe is best
    let mut best = (mid, fm);
    for cand in [(c, fc), (d, fd)] {
        if cand.1 > best.1 {
            best = cand;
        }
    }
    Ok(best)
}

/// Intensity maximizing `protocol`'s rate at transmittance `t` and leak `leak`.
pub fn optimal_intensity<S: Real>(protocol: Protocol, t: S, leak: S) -> Result<Optimum<S>> {
    // validate once so that parameter errors are not reported as scan failures
    protocol.rate(t, leak, S::one())?;
    let (intensity, _) = maximize(|x| protocol.rate(t, leak, x).map(|p| p.rate))?;
    Ok(Optimum {
        intensity,
        point: protocol.rate(t, leak, intensity)?,
    })
}

/// A line-controlled variant and the original protocol it is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolPair {
    Bb84,
    Cow,
    Dps,
}

impl ProtocolPair {
    pub const ALL: [ProtocolPair; 3] = [ProtocolPair::Bb84, ProtocolPair::Cow, ProtocolPair::Dps];

    pub fn line_controlled(self) -> Protocol {
        match self {
            ProtocolPair::Bb84 => Protocol::Bb84Lc,
            ProtocolPair::Cow => Protocol::CowLc,
            ProtocolPair::Dps => Protocol::DpsLc,
        }
    }

    pub fn baseline(self) -> Protocol {
        match self {
            ProtocolPair::Bb84 => Protocol::Bb84DecoyUpper,
            ProtocolPair::Cow => Protocol::Cow,
            ProtocolPair::Dps => Protocol::Dps,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProtocolPair::Bb84 => "bb84",
            ProtocolPair::Cow => "cow",
            ProtocolPair::Dps => "dps",
        }
    }
}

impl fmt::Display for ProtocolPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase();
        ProtocolPair::ALL
            .into_iter()
            .find(|p| p.name() == norm)
            .ok_or_else(|| Error::Invalid(format!("unknown protocol pair `{s}`")))
    }
}

/// How signal intensities are chosen for a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntensityMode<S = f64> {
    /// Each variant at its own optimum.
    Optimized,
    /// Both variants at the same fixed intensity (line control applied in
    /// post-processing only).
    Fixed(S),
}

/// One `(D, r_E)` cell of a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord<S = f64> {
    pub distance_km: S,
    pub leak_fraction: S,
    #[serde(rename = "intensity_lc")]
    pub optimal_intensity_lc: S,
    #[serde(rename = "intensity_base")]
    pub optimal_intensity_baseline: S,
    pub rate_lc: S,
    #[serde(rename = "rate_base")]
    pub rate_baseline: S,
    /// `rate_lc / rate_base`; `+∞` when only the baseline vanishes, NaN when both do.
    pub ratio: S,
}

fn rate_at<S: Real>(protocol: Protocol, t: S, leak: S, mode: IntensityMode<S>) -> Result<(S, S)> {
    match mode {
        IntensityMode::Fixed(x) => Ok((x, protocol.rate(t, leak, x)?.rate)),
        IntensityMode::Optimized => match optimal_intensity(protocol, t, leak) {
            Ok(opt) => Ok((opt.intensity, opt.point.rate)),
            Err(Error::DegenerateOptimum) => Ok((S::zero(), S::zero())),
            Err(e) => Err(e),
        },
    }
}

/// Compares the two variants of `pair` on one line.
pub fn rate_ratio<S: Real>(
    distance_km: S,
    leak: S,
    mu: S,
    pair: ProtocolPair,
    mode: IntensityMode<S>,
) -> Result<SweepRecord<S>> {
    check(mu > S::zero() && mu.is_finite(), "mu", mu.as_f64(), "> 0")?;
    check(
        distance_km >= S::zero() && distance_km.is_finite(),
        "distance_km",
        distance_km.as_f64(),
        ">= 0",
    )?;
    let t = transmittance_of(mu, distance_km);
    let (x_lc, r_lc) = rate_at(pair.line_controlled(), t, leak, mode)?;
    let (x_base, r_base) = rate_at(pair.baseline(), t, leak, mode)?;
    let ratio = if r_base > S::zero() {
        r_lc / r_base
    } else if r_lc > S::zero() {
        S::infinity()
    } else {
        S::nan()
    };
    Ok(SweepRecord {
        distance_km,
        leak_fraction: leak,
        optimal_intensity_lc: x_lc,
        optimal_intensity_baseline: x_base,
        rate_lc: r_lc,
        rate_baseline: r_base,
        ratio,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid<S = f64> {
    pub distances: Vec<S>,
    pub leaks: Vec<S>,
    pub mu: S,
    pub pair: ProtocolPair,
    pub mode: IntensityMode<S>,
}

impl<S: Real> SweepGrid<S> {
    pub fn validate(&self) -> Result<()> {
        strictly_increasing(&self.distances, "distances")?;
        strictly_increasing(&self.leaks, "leaks")?;
        check(
            self.mu > S::zero() && self.mu.is_finite(),
            "mu",
            self.mu.as_f64(),
            "> 0",
        )?;
        check(
            self.distances[0] >= S::zero(),
            "distances[0]",
            self.distances[0].as_f64(),
            ">= 0",
        )?;
        let first = self.leaks[0];
        let last = self.leaks[self.leaks.len() - 1];
        check(first >= S::zero(), "leaks[0]", first.as_f64(), ">= 0")?;
        check(last <= S::one(), "leaks[last]", last.as_f64(), "<= 1")?;
        if let IntensityMode::Fixed(x) = self.mode {
            check(
                x >= S::zero() && x.is_finite(),
                "intensity",
                x.as_f64(),
                ">= 0",
            )?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.distances.len() * self.leaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(distance, leak)` of cell `index` in row-major order (distance outer).
    pub fn cell(&self, index: usize) -> (S, S) {
        let n = self.leaks.len();
        (self.distances[index / n], self.leaks[index % n])
    }
}

fn strictly_increasing<S: Real>(v: &[S], name: &'static str) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Invalid(format!("{name} must not be empty")));
    }
    if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invalid(format!(
            "{name} must be finite and strictly increasing"
        )));
    }
    Ok(())
}

/// Evaluates every cell of `grid` on up to `workers` threads.
///
/// Output order is row-major and independent of `workers`. The first failing
/// cell (by index) aborts the sweep.
pub fn sweep<S: Real>(grid: &SweepGrid<S>, workers: usize) -> Result<Vec<SweepRecord<S>>> {
    grid.validate()?;
    let n = grid.len();
    let workers = workers.clamp(1, n);
    let eval = |i: usize| {
        let (d, r) = grid.cell(i);
        rate_ratio(d, r, grid.mu, grid.pair, grid.mode)
    };

    let mut slots: Vec<Option<Result<SweepRecord<S>>>> = (0..n).map(|_| None).collect();
    if workers == 1 {
        for (i, slot) in slots.iter_mut().enumerate() {
            *slot = Some(eval(i));
        }
    } else {
        let parts: Vec<Vec<(usize, Result<SweepRecord<S>>)>> = thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let eval = &eval;
                    s.spawn(move || (w..n).step_by(workers).map(|i| (i, eval(i))).collect())
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sweep worker panicked"))
                .collect()
        });
        for (i, r) in parts.into_iter().flatten() {
            slots[i] = Some(r);
        }
    }

    slots
        .into_iter()
        .enumerate()
        .map(|(i, slot)| {
            slot.expect("every cell evaluated").map_err(|e| {
                let (d, r) = grid.cell(i);
                Error::SweepCell {
                    index: i,
                    distance_km: d.as_f64(),
                    leak_fraction: r.as_f64(),
                    source: Box::new(e),
                }
            })
        })
        .collect()
}
