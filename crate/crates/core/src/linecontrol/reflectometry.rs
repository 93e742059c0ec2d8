//! Synthetic OTDR traces and new-event detection.
//!
//! Traces are backscatter power in dB sampled every `sample_spacing_km`. The
//! displayed slope equals the fiber loss in dB/km, `10·μ` (0.2 dB/km at the
//! default μ). A loss step lowers every sample from its position onward; a
//! reflective spike raises a single sample.
//!
//! Detection compares a fresh trace against a documented reference. The
//! difference trace is smoothed with a [`SMOOTHING_WINDOW`]-sample moving
//! average, and a step is declared where the mean of the smoothed difference
//! over the next [`STEP_HALF_WINDOW`] samples drops by at least the threshold
//! against the previous [`STEP_HALF_WINDOW`]. Each step is then localized by a
//! least-squares two-level fit on the raw difference. Steps closer than
//! `STEP_HALF_WINDOW` samples to either end of the trace are not resolvable.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check, Error, Result};

pub const SMOOTHING_WINDOW: usize = 5;
pub const STEP_HALF_WINDOW: usize = 20;
/// Spike excursions must clear `threshold + SPIKE_SIGMAS·σ`.
pub const SPIKE_SIGMAS: f64 = 3.0;

const MIN_FIT_SAMPLES: usize = 10;
const GRID_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reflectogram {
    pub sample_spacing_km: f64,
    /// Return power in dB, sample `i` at `i·sample_spacing_km`.
    pub samples: Vec<f64>,
    pub noise_sigma_db: f64,
}

impl Reflectogram {
    pub fn new(sample_spacing_km: f64, samples: Vec<f64>, noise_sigma_db: f64) -> Result<Self> {
        let trace = Reflectogram {
            sample_spacing_km,
            samples,
            noise_sigma_db,
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn validate(&self) -> Result<()> {
        check(
            self.sample_spacing_km > 0.0 && self.sample_spacing_km.is_finite(),
            "sample_spacing_km",
            self.sample_spacing_km,
            "> 0",
        )?;
        check(
            self.noise_sigma_db >= 0.0 && self.noise_sigma_db.is_finite(),
            "noise_sigma_db",
            self.noise_sigma_db,
            ">= 0",
        )?;
        if self.samples.is_empty() {
            return Err(Error::Invalid("reflectogram has no samples".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn length_km(&self) -> f64 {
        (self.samples.len().saturating_sub(1)) as f64 * self.sample_spacing_km
    }

    pub fn position_km(&self, index: usize) -> f64 {
        index as f64 * self.sample_spacing_km
    }

    /// Index of the first sample at or after `position_km`.
    fn step_index(&self, position_km: f64) -> usize {
        let f = position_km / self.sample_spacing_km;
        let k = if (f - f.round()).abs() < GRID_EPS {
            f.round()
        } else {
            f.ceil()
        };
        k as usize
    }

    fn nearest_index(&self, position_km: f64) -> usize {
        (position_km / self.sample_spacing_km).round() as usize
    }

    fn same_geometry(&self, other: &Reflectogram) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::GeometryMismatch(format!(
                "{} vs {} samples",
                self.len(),
                other.len()
            )));
        }
        let (a, b) = (self.sample_spacing_km, other.sample_spacing_km);
        if (a - b).abs() > GRID_EPS * a.max(b) {
            return Err(Error::GeometryMismatch(format!("spacing {a} km vs {b} km")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    ReflectiveSpike,
    LossStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberEvent {
    pub position_km: f64,
    pub kind: EventKind,
    pub magnitude_db: f64,
}

impl FiberEvent {
    pub fn step(position_km: f64, magnitude_db: f64) -> Self {
        FiberEvent {
            position_km,
            kind: EventKind::LossStep,
            magnitude_db,
        }
    }

    pub fn spike(position_km: f64, magnitude_db: f64) -> Self {
        FiberEvent {
            position_km,
            kind: EventKind::ReflectiveSpike,
            magnitude_db,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub length_km: f64,
    /// Attenuation in km⁻¹ (base-10); the trace slope is `−10·μ` dB/km.
    pub mu: f64,
    pub spacing_km: f64,
    pub noise_sigma_db: f64,
    pub seed: u64,
}

/// Builds a trace: straight fiber line, Gaussian noise, then `events` in order.
pub fn synthesize_reflectogram(
    params: &SynthParams,
    events: &[FiberEvent],
) -> Result<Reflectogram> {
    let SynthParams {
        length_km,
        mu,
        spacing_km,
        noise_sigma_db,
        seed,
    } = *params;
    check(
        length_km >= 0.0 && length_km.is_finite(),
        "length_km",
        length_km,
        ">= 0",
    )?;
    check(mu > 0.0 && mu.is_finite(), "mu", mu, "> 0")?;
    check(
        spacing_km > 0.0 && spacing_km.is_finite(),
        "spacing_km",
        spacing_km,
        "> 0",
    )?;
    check(
        noise_sigma_db >= 0.0 && noise_sigma_db.is_finite(),
        "noise_sigma_db",
        noise_sigma_db,
        ">= 0",
    )?;

    let n = (length_km / spacing_km + GRID_EPS).floor() as usize + 1;
    let slope = -10.0 * mu;
    let mut samples: Vec<f64> = (0..n).map(|i| slope * i as f64 * spacing_km).collect();
    if noise_sigma_db > 0.0 {
        let normal = Normal::new(0.0, noise_sigma_db)
            .map_err(|e| Error::Invalid(format!("noise model: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in samples.iter_mut() {
            *s += normal.sample(&mut rng);
        }
    }
    let mut trace = Reflectogram::new(spacing_km, samples, noise_sigma_db)?;
    inject_events(&mut trace, events)?;
    Ok(trace)
}

/// Adds `events` to an existing trace.
pub fn inject_events(trace: &mut Reflectogram, events: &[FiberEvent]) -> Result<()> {
    let length = trace.length_km();
    for ev in events {
        check(
            ev.position_km >= 0.0 && ev.position_km <= length + GRID_EPS * length.max(1.0),
            "position_km",
            ev.position_km,
            "within the fiber",
        )?;
        check(
            ev.magnitude_db > 0.0 && ev.magnitude_db.is_finite(),
            "magnitude_db",
            ev.magnitude_db,
            "> 0",
        )?;
    }
    for ev in events {
        match ev.kind {
            EventKind::LossStep => {
                let k = trace.step_index(ev.position_km).min(trace.len());
                for s in &mut trace.samples[k..] {
                    *s -= ev.magnitude_db;
                }
            }
            EventKind::ReflectiveSpike => {
                let k = trace.nearest_index(ev.position_km).min(trace.len() - 1);
                trace.samples[k] += ev.magnitude_db;
            }
        }
    }
    Ok(())
}

/// Sample-wise mean of repeated acquisitions; noise drops by `√K`.
pub fn average_traces(traces: &[Reflectogram]) -> Result<Reflectogram> {
    let first = traces
        .first()
        .ok_or_else(|| Error::Invalid("no traces to average".into()))?;
    for t in &traces[1..] {
        first.same_geometry(t)?;
    }
    let k = traces.len() as f64;
    let samples = (0..first.len())
        .map(|i| traces.iter().map(|t| t.samples[i]).sum::<f64>() / k)
        .collect();
    let var = traces.iter().map(|t| t.noise_sigma_db.powi(2)).sum::<f64>() / (k * k);
    Reflectogram::new(first.sample_spacing_km, samples, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineFit {
    pub slope_db_per_km: f64,
    /// Level at position 0 of the first fitted segment.
    pub intercept_db: f64,
    pub residual_sigma_db: f64,
    pub n_used: usize,
}

/// Least-squares fiber slope over samples outside `±half_width_km` of each
/// position in `exclusions`.
///
/// Runs of samples separated by an exclusion window share the slope but get
/// their own intercept, so known loss steps do not bias the slope.
pub fn fit_baseline(
    trace: &Reflectogram,
    exclusions: &[f64],
    half_width_km: f64,
) -> Result<BaselineFit> {
    trace.validate()?;
    check(half_width_km >= 0.0, "half_width_km", half_width_km, ">= 0")?;

    let excluded = |x: f64| exclusions.iter().any(|&e| (x - e).abs() <= half_width_km);
    let mut segments: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut open = false;
    for (i, &y) in trace.samples.iter().enumerate() {
        let x = trace.position_km(i);
        if excluded(x) {
            open = false;
            continue;
        }
        if !open {
            segments.push(Vec::new());
            open = true;
        }
        segments.last_mut().expect("segment opened").push((x, y));
    }
    let n_used: usize = segments.iter().map(Vec::len).sum();
    if n_used < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_SAMPLES,
            available: n_used,
        });
    }

    let means: Vec<(f64, f64)> = segments
        .iter()
        .map(|seg| {
            let n = seg.len() as f64;
            let mx = seg.iter().map(|p| p.0).sum::<f64>() / n;
            let my = seg.iter().map(|p| p.1).sum::<f64>() / n;
            (mx, my)
        })
        .collect();
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (seg, &(mx, my)) in segments.iter().zip(&means) {
        for &(x, y) in seg {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx) * (x - mx);
        }
    }
    if sxx <= 0.0 {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_SAMPLES,
            available: n_used,
        });
    }
    let slope = sxy / sxx;
    let mut sse = 0.0;
    for (seg, &(mx, my)) in segments.iter().zip(&means) {
        for &(x, y) in seg {
            let r = y - (my + slope * (x - mx));
            sse += r * r;
        }
    }
    let dof = n_used.saturating_sub(segments.len() + 1).max(1);
    let (mx0, my0) = means[0];
    Ok(BaselineFit {
        slope_db_per_km: slope,
        intercept_db: my0 - slope * mx0,
        residual_sigma_db: (sse / dof as f64).sqrt(),
        n_used,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub events: Vec<FiberEvent>,
    /// Any new event means the line can no longer be trusted.
    pub alarm: bool,
}

fn moving_average(d: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let n = d.len();
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + d[i];
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Split point in `lo+1..hi` maximizing the two-level fit of a downward step.
fn localize_step(d: &[f64], lo: usize, hi: usize) -> usize {
    let seg = &d[lo..hi];
    let total: f64 = seg.iter().sum();
    let n = seg.len();
    let mut left = 0.0;
    let mut best = (lo + 1, f64::MIN);
    for j in 1..n {
        left += seg[j - 1];
        let (nl, nr) = (j as f64, (n - j) as f64);
        let diff = left / nl - (total - left) / nr;
        if diff <= 0.0 {
            continue;
        }
        let score = nl * nr / (nl + nr) * diff * diff;
        if score > best.1 {
            best = (lo + j, score);
        }
    }
    best.0
}

/// Reports loss steps and reflective spikes present in `current` but not in
/// `baseline`.
pub fn detect_new_events(
    current: &Reflectogram,
    baseline: &Reflectogram,
    threshold_db: f64,
) -> Result<Detection> {
    current.validate()?;
    baseline.validate()?;
    current.same_geometry(baseline)?;
    check(
        threshold_db > 0.0 && threshold_db.is_finite(),
        "threshold_db",
        threshold_db,
        "> 0",
    )?;

    let n = current.len();
    let m = STEP_HALF_WINDOW;
    if n < 2 * m + 1 {
        return Err(Error::InsufficientData {
            needed: 2 * m + 1,
            available: n,
        });
    }
    let d: Vec<f64> = current
        .samples
        .iter()
        .zip(&baseline.samples)
        .map(|(c, b)| c - b)
        .collect();
    let sigma = current.noise_sigma_db.hypot(baseline.noise_sigma_db);
    let mut events = Vec::new();

    // loss steps
    let s = moving_average(&d, SMOOTHING_WINDOW);
    let drop: Vec<(usize, f64)> = (m..=n - m)
        .map(|k| (k, mean(&s[k - m..k]) - mean(&s[k..k + m])))
        .collect();
    let mut peaks: Vec<(usize, f64)> = Vec::new();
    let mut run: Option<(usize, f64)> = None;
    for &(k, v) in &drop {
        if v >= threshold_db {
            if run.is_none_or(|(_, best)| v > best) {
                run = Some((k, v));
            }
        } else if let Some(p) = run.take() {
            peaks.push(p);
        }
    }
    peaks.extend(run);
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut accepted: Vec<usize> = Vec::new();
    for (k, _) in peaks {
        if accepted.iter().all(|&a| a.abs_diff(k) > m) {
            accepted.push(k);
        }
    }
    accepted.sort_unstable();
    for k in accepted {
        let j = localize_step(&d, k.saturating_sub(m), (k + m).min(n));
        let left = &d[j.saturating_sub(m)..j];
        let right = &d[j..(j + m).min(n)];
        events.push(FiberEvent::step(
            current.position_km(j),
            mean(left) - mean(right),
        ));
    }

    // reflective spikes
    let spike_floor = threshold_db + SPIKE_SIGMAS * sigma;
    for i in 0..n {
        let neighbors: Vec<f64> = [i.checked_sub(1), (i + 1 < n).then_some(i + 1)]
            .into_iter()
            .flatten()
            .map(|j| d[j])
            .collect();
        let excursion = neighbors
            .iter()
            .map(|&v| d[i] - v)
            .fold(f64::INFINITY, f64::min);
        if excursion > spike_floor {
            events.push(FiberEvent::spike(
                current.position_km(i),
                d[i] - mean(&neighbors),
            ));
        }
    }

    events.sort_by(|a, b| a.position_km.total_cmp(&b.position_km));
    Ok(Detection {
        alarm: !events.is_empty(),
        events,
    })
}
