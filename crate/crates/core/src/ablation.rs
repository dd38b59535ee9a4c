//! Ablation source: pulse energetics, transient surface heating, and the
//! emitted atom burst per pulse.
//!
//! A nanosecond pulse heats the target surface faster than conduction can
//! spread the energy; the transient peak temperature sets a Hertz-Knudsen
//! evaporation burst. Above a threshold fluence the interaction enters a
//! plasma regime that also ejects a configured fraction of atoms in high
//! Rydberg states. The temperature model is a deliberately simple 1-D
//! conduction estimate; the single `yield_scale` calibration constant
//! absorbs its bias (see the harness yield calibration).

use crate::config::{AblationLaserSpec, AblationSettings, Sampling, SpeciesData};
use crate::constants::{BOLTZMANN, PASCAL_PER_MBAR};
use crate::error::PhysicsError;
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use std::f64::consts::PI;

/// Interaction regime of a single pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Thermal,
    Plasma,
}

/// One ablation pulse as delivered to the target.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSpec {
    /// Pulse energy, J.
    pub energy: f64,
    /// Pulse duration, s.
    pub duration: f64,
    /// Illuminated spot area, m2 (elliptical, stretched by the incidence
    /// angle).
    pub spot_area: f64,
    /// Peak fluence, J/m2.
    pub fluence: f64,
    /// Emission time of the pulse, s.
    pub time: f64,
}

impl PulseSpec {
    /// Builds the pulse the configured source fires at `time`.
    pub fn at_time(
        laser: &AblationLaserSpec,
        settings: &AblationSettings,
        time: f64,
    ) -> Result<PulseSpec, PhysicsError> {
        let energy = match settings.fluence {
            Some(f) => laser.energy_for_fluence(f),
            None => laser.pulse_energy_at_rate(settings.rep_rate)?,
        };
        Ok(PulseSpec {
            energy,
            duration: laser.pulse_duration,
            spot_area: laser.spot_area(),
            fluence: laser.peak_fluence(energy),
            time,
        })
    }
}

/// Atoms emitted by one pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomBurst {
    pub n_atoms: u64,
    /// Expected atom number before shot-noise sampling.
    pub mean_atoms: f64,
    pub emission_time: f64,
    /// Effusive temperature of the burst, K.
    pub surface_temperature: f64,
    pub ground_fraction: f64,
    pub rydberg_fraction: f64,
    pub regime: Regime,
}

/// Cumulative state of the ablation target.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TargetState {
    /// Material removed so far expressed as a mean depth over the spot, m.
    /// Bookkeeping identity: removed_depth * spot_area * density / mean
    /// atomic mass equals the summed n_atoms of all bursts.
    pub removed_depth: f64,
    /// Fraction of the dithered area still covered by contaminants.
    pub contaminant_coverage: f64,
    pub pulses_fired: u64,
}

impl TargetState {
    pub fn fresh(settings: &AblationSettings) -> TargetState {
        TargetState {
            removed_depth: 0.0,
            contaminant_coverage: settings.contaminant_coverage,
            pulses_fired: 0,
        }
    }
}

/// Empirical crater-depth hinge parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthModel {
    /// Depth gained per pulse per unit fluence above threshold, m/(J/m2).
    pub slope: f64,
    /// Threshold fluence, J/m2.
    pub threshold_fluence: f64,
    /// Bounded sub-threshold churn depth, m.
    pub epsilon_melt: f64,
}

impl DepthModel {
    pub fn from_settings(settings: &AblationSettings) -> DepthModel {
        DepthModel {
            slope: settings.depth_slope,
            threshold_fluence: settings.threshold_fluence,
            epsilon_melt: settings.epsilon_melt,
        }
    }
}

/// Plasma iff fluence strictly exceeds the threshold.
pub fn classify_regime(fluence: f64, threshold: f64) -> Regime {
    if fluence > threshold {
        Regime::Plasma
    } else {
        Regime::Thermal
    }
}

/// Peak surface temperature after one pulse: the 1-D semi-infinite
/// constant-flux conduction result
/// T = ambient + 2 (1 - R) F / sqrt(pi rho c k tau).
pub fn surface_temperature(pulse: &PulseSpec, species: &SpeciesData, ambient: f64) -> f64 {
    let absorbed = (1.0 - species.reflectivity_1064) * pulse.fluence;
    let denom = (PI
        * species.density
        * species.specific_heat
        * species.thermal_conductivity
        * pulse.duration)
        .sqrt();
    ambient + 2.0 * absorbed / denom
}

/// Antoine vapor pressure log10(P[mbar]) = A - B/T, returned in mbar.
pub fn vapor_pressure_mbar(species: &SpeciesData, temperature: f64) -> f64 {
    10f64.powf(species.vapor_pressure_a - species.vapor_pressure_b / temperature)
}

/// Expected atoms emitted per pulse: Hertz-Knudsen flux at the transient
/// temperature over the emitting spot for the effective emission time,
/// N = yield_scale * spot_area * t_eff * P_vap(T) / sqrt(2 pi m kB T).
pub fn atoms_per_pulse(
    temperature: f64,
    spot_area: f64,
    effective_time: f64,
    species: &SpeciesData,
    yield_scale: f64,
) -> f64 {
    let p_vap = vapor_pressure_mbar(species, temperature) * PASCAL_PER_MBAR;
    let m = species.mean_mass();
    let flux = p_vap / (2.0 * PI * m * BOLTZMANN * temperature).sqrt();
    yield_scale * spot_area * effective_time * flux
}

/// Crater depth after `n_pulses` at fixed fluence: the piecewise-linear
/// hinge depth = n * max(0, s (F - F_th)), plus the bounded churn term
/// once any pulse has fired.
pub fn accumulate_depth(fluence: f64, n_pulses: u64, model: &DepthModel) -> f64 {
    if n_pulses == 0 {
        return 0.0;
    }
    let per_pulse = model.slope * (fluence - model.threshold_fluence).max(0.0);
    n_pulses as f64 * per_pulse + model.epsilon_melt
}

/// Fires one pulse: checks the gate, evaluates the burst, advances the
/// target state. An empty gate table means the source is always on.
pub fn emit_burst(
    pulse: &PulseSpec,
    state: &mut TargetState,
    species: &SpeciesData,
    settings: &AblationSettings,
    sampling: Sampling,
    gates: &[(f64, f64)],
    rng: &mut impl Rng,
) -> Result<AtomBurst, PhysicsError> {
    if !gates.is_empty() && !gates.iter().any(|&(s, e)| pulse.time >= s && pulse.time < e) {
        return Err(PhysicsError::PulseOutsideGate { time_s: pulse.time });
    }

    let temperature = surface_temperature(pulse, species, settings.ambient_temperature);
    let mean = atoms_per_pulse(
        temperature,
        pulse.spot_area,
        pulse.duration,
        species,
        settings.yield_scale,
    );
    let n_atoms = sample_burst_size(mean, sampling, rng);

    let regime = classify_regime(pulse.fluence, settings.threshold_fluence);
    let rydberg_fraction = match regime {
        Regime::Plasma => settings.rydberg_fraction,
        Regime::Thermal => 0.0,
    };

    state.pulses_fired += 1;
    state.removed_depth += n_atoms as f64 * species.mean_mass() / (species.density * pulse.spot_area);
    state.contaminant_coverage *= 1.0 - settings.contaminant_burnoff_per_pulse;

    Ok(AtomBurst {
        n_atoms,
        mean_atoms: mean,
        emission_time: pulse.time,
        surface_temperature: temperature,
        ground_fraction: 1.0 - rydberg_fraction,
        rydberg_fraction,
        regime,
    })
}

/// Shot-noise sampling of the burst size. Mean-field mode rounds the mean;
/// very large means switch to the Gaussian limit where the Poisson sampler
/// loses integer resolution anyway.
fn sample_burst_size(mean: f64, sampling: Sampling, rng: &mut impl Rng) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    match sampling {
        Sampling::MeanField => mean.round() as u64,
        Sampling::Poisson => {
            if mean > 1e12 {
                let draw = Normal::new(mean, mean.sqrt()).unwrap().sample(rng);
                draw.max(0.0).round() as u64
            } else {
                Poisson::new(mean).unwrap().sample(rng).round() as u64
            }
        }
    }
}
