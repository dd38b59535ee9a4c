//! Synthetic observables: fluorescence traces with Poisson counting noise,
//! loading-step detection, and the vacuum-pressure response.

use crate::config::{DetectionSettings, IonLaserSpec, VacuumParams};
use crate::error::PhysicsError;
use crate::photoionization::saturation_intensity;
use crate::trap::IonCrystal;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use std::f64::consts::TAU;

/// Photon counts accumulated in fixed-width bins starting at t0.
#[derive(Debug, Clone, PartialEq)]
pub struct FluorescenceTrace {
    pub t0: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
}

impl FluorescenceTrace {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn bin_center(&self, index: usize) -> f64 {
        self.t0 + (index as f64 + 0.5) * self.bin_width
    }

    pub fn duration(&self) -> f64 {
        self.counts.len() as f64 * self.bin_width
    }
}

/// One detected loading step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadingEvent {
    pub time: f64,
    /// Running ion count after this event, starting at 1.
    pub ion_index: u64,
}

/// Piecewise-constant signal rate in counts/s.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTimeline {
    initial_rate: f64,
    /// (time, rate from that time on), times non-decreasing.
    changes: Vec<(f64, f64)>,
}

impl RateTimeline {
    pub fn new(initial_rate: f64) -> Self {
        RateTimeline { initial_rate, changes: Vec::new() }
    }

    /// Sets the rate from `time` on. Times must arrive in order.
    pub fn set_rate(&mut self, time: f64, rate: f64) {
        if let Some(&(last, _)) = self.changes.last() {
            assert!(time >= last, "timeline must be appended in time order");
        }
        self.changes.push((time, rate));
    }

    pub fn rate_at(&self, time: f64) -> f64 {
        let idx = self.changes.partition_point(|&(t, _)| t <= time);
        if idx == 0 {
            self.initial_rate
        } else {
            self.changes[idx - 1].1
        }
    }
}

/// Photon-scattering model for one laser-cooled ion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterModel {
    /// Natural linewidth of the cooling transition, Hz.
    pub linewidth: f64,
    /// Peak saturation parameter of the cooling beam.
    pub saturation: f64,
    /// Cooling-laser detuning, Hz.
    pub detuning: f64,
    /// Photon detection efficiency.
    pub efficiency: f64,
    /// Fluorescence fraction retained by hot or dark ions.
    pub suppressed_fraction: f64,
}

impl ScatterModel {
    pub fn new(cooling: &IonLaserSpec, linewidth: f64, detection: &DetectionSettings) -> Self {
        ScatterModel {
            linewidth,
            saturation: cooling.peak_intensity()
                / saturation_intensity(cooling.wavelength, linewidth),
            detuning: cooling.detuning,
            efficiency: detection.efficiency,
            suppressed_fraction: detection.hot_suppressed_fraction,
        }
    }

    /// Detected rate from one bright, cold ion:
    /// (Gamma/2) s / (1 + s + (2 delta/Gamma)^2) * efficiency.
    pub fn per_ion_rate(&self) -> f64 {
        let gamma = TAU * self.linewidth;
        let s = self.saturation;
        let lorentz = 1.0 + s + (2.0 * self.detuning / self.linewidth).powi(2);
        (gamma / 2.0) * s / lorentz * self.efficiency
    }
}

/// Total detected fluorescence rate of a crystal at `now`: bright cold
/// ions count fully, hot or dark ions at the suppressed fraction.
pub fn fluorescence_rate(crystal: &IonCrystal, model: &ScatterModel, now: f64) -> f64 {
    let full = crystal.bright_cold_count(now);
    let suppressed = crystal.count() - full;
    model.per_ion_rate() * (full as f64 + model.suppressed_fraction * suppressed as f64)
}

/// Poisson-samples a trace from a rate timeline, one draw per bin at the
/// rate in force at the bin center.
pub fn synthesize_trace(
    timeline: &RateTimeline,
    t0: f64,
    duration: f64,
    bin_width: f64,
    rng: &mut impl Rng,
) -> FluorescenceTrace {
    let n_bins = (duration / bin_width).ceil() as usize;
    let mut counts = Vec::with_capacity(n_bins);
    for i in 0..n_bins {
        let center = t0 + (i as f64 + 0.5) * bin_width;
        let mean = timeline.rate_at(center) * bin_width;
        if mean > 0.0 {
            counts.push(Poisson::new(mean).expect("positive mean").sample(rng) as u64);
        } else {
            counts.push(0);
        }
    }
    FluorescenceTrace { t0, bin_width, counts }
}

/// Step-detector tuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDetectorParams {
    /// Comparison window length, bins.
    pub window: usize,
    /// Detection threshold in units of the baseline window-mean sigma.
    pub threshold_sigma: f64,
    /// Minimum time between reported events, s.
    pub min_separation: f64,
}

impl StepDetectorParams {
    pub fn from_detection(detection: &DetectionSettings) -> Self {
        StepDetectorParams {
            window: detection.step_window,
            threshold_sigma: detection.step_threshold_sigma,
            min_separation: detection.step_min_separation,
        }
    }
}

/// Trailing windows inspected for the step baseline. Three windows cover a
/// fluorescence dip up to two windows long followed by the step itself, so
/// dip recoveries compare against the pre-dip level rather than the dip.
const BASELINE_LOOKBACK_WINDOWS: usize = 3;

/// Scans a trace for upward steps with a sliding two-window comparison.
///
/// A boundary is a candidate when the mean of the next window exceeds the
/// baseline by threshold_sigma times the Poisson sigma of a window mean,
/// where the baseline is the largest of the trailing window means (floored
/// at one count per window). Runs of nearby candidates collapse to their
/// best boundary, and events closer than min_separation to the previous
/// one are dropped.
pub fn detect_steps(
    trace: &FluorescenceTrace,
    params: &StepDetectorParams,
) -> Result<Vec<LoadingEvent>, PhysicsError> {
    let w = params.window;
    let n = trace.counts.len();
    if w < 2 || n < 2 * w {
        return Err(PhysicsError::DegenerateTrace { needed: 2 * w.max(2), got: n });
    }
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0f64);
    for &c in &trace.counts {
        prefix.push(prefix.last().unwrap() + c as f64);
    }
    let window_mean = |a: usize, b: usize| (prefix[b] - prefix[a]) / (b - a) as f64;

    let mut candidates: Vec<(usize, f64)> = Vec::new();
    for i in w..=n - w {
        let mut baseline = 1.0 / w as f64;
        for k in 1..=BASELINE_LOOKBACK_WINDOWS {
            if i >= k * w {
                baseline = baseline.max(window_mean(i - k * w, i - (k - 1) * w));
            }
        }
        let after = window_mean(i, i + w);
        let score = after - baseline;
        if score > params.threshold_sigma * (baseline / w as f64).sqrt() {
            candidates.push((i, score));
        }
    }

    let mut events: Vec<LoadingEvent> = Vec::new();
    let mut k = 0;
    while k < candidates.len() {
        let mut best = candidates[k];
        let mut j = k + 1;
        while j < candidates.len() && candidates[j].0 - candidates[j - 1].0 <= w {
            if candidates[j].1 > best.1 {
                best = candidates[j];
            }
            j += 1;
        }
        let time = trace.t0 + best.0 as f64 * trace.bin_width;
        let separated = events
            .last()
            .map_or(true, |prev| time - prev.time >= params.min_separation);
        if separated {
            events.push(LoadingEvent { time, ion_index: events.len() as u64 + 1 });
        }
        k = j;
    }
    Ok(events)
}

/// Advances the chamber pressure by one explicit step of
/// V dP/dt = Q + S (base - P). Returns the new pressure.
pub fn pressure_step(
    pressure: f64,
    gas_load: f64,
    vacuum: &VacuumParams,
    dt: f64,
) -> Result<f64, PhysicsError> {
    let bound = 2.0 * vacuum.chamber_volume / vacuum.pump_speed;
    if dt >= bound {
        return Err(PhysicsError::UnstableTimestep { dt, bound });
    }
    let dp = (gas_load + vacuum.pump_speed * (vacuum.base_pressure - pressure))
        / vacuum.chamber_volume;
    Ok(pressure + dp * dt)
}
