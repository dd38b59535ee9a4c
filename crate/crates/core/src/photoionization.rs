//! Per-atom ionization probabilities for the two loading channels.
//!
//! The resonant channel is a two-step process on the 272 nm line: a
//! Lorentzian excitation step followed by a non-resonant ionizing step out
//! of the upper state, integrated along the atom's transit through the
//! Gaussian laser beam. It is isotope-selective through the total detuning
//! (laser detuning + isotope shift + Doppler shift).
//!
//! The second channel ionizes Rydberg atoms from the plume: a 397 nm
//! photon drives the ionic-core transition of the doubly excited system
//! into an auto-ionizing state. Core transitions are modeled in the
//! spectator approximation, so the required photon energy equals the bare
//! ion transition energy.

use crate::config::{BeamGeometry, IonLaserSpec, PhotoionizationSettings, SpeciesData};
use crate::constants::{photon_energy_ev, photon_energy_joules, PLANCK, SPEED_OF_LIGHT};
use crate::error::PhysicsError;
use std::f64::consts::{PI, TAU};

/// Which physical ionization pathway a channel models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    /// Resonant two-step ionization of ground-state atoms at 272 nm.
    TwoPhoton272,
    /// Auto-ionization of plume Rydberg atoms by the 397 nm beam.
    Rydberg397,
}

/// One ionization pathway with its spectroscopic constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonizationChannel {
    pub kind: ChannelKind,
    /// Effective resonance width, Hz. For the two-step channel this is the
    /// atomic linewidth convolved (as a plain sum) with the laser linewidth.
    pub resonant_linewidth: f64,
    /// Cross-section of the final ionizing step, m^2.
    pub ionization_cross_section: f64,
    /// Half-saturation optical power, W. Rydberg channel only.
    pub saturation_power: Option<f64>,
}

impl IonizationChannel {
    /// The resonant 272 nm channel for the given ionization beam.
    pub fn two_photon_272(photo: &PhotoionizationSettings, laser: &IonLaserSpec) -> Self {
        IonizationChannel {
            kind: ChannelKind::TwoPhoton272,
            resonant_linewidth: photo.linewidth_272 + laser.linewidth,
            ionization_cross_section: photo.cross_section_272,
            saturation_power: None,
        }
    }

    /// The 397 nm auto-ionization channel. The broad resonance makes this
    /// channel power-limited rather than detuning-limited.
    pub fn rydberg_397(photo: &PhotoionizationSettings) -> Self {
        IonizationChannel {
            kind: ChannelKind::Rydberg397,
            resonant_linewidth: photo.rydberg_linewidth,
            ionization_cross_section: photo.cross_section_272,
            saturation_power: Some(photo.rydberg_saturation_power),
        }
    }
}

/// Ionic-core transition energies seen by a spectator Rydberg electron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RydbergLevelModel {
    /// Binding energy of the spectator electron below the ionic ground
    /// continuum, eV.
    pub rydberg_binding: f64,
    /// Core S1/2 -> P1/2 transition energy, eV.
    pub s12_p12: f64,
    /// Core D3/2 -> P1/2 transition energy, eV.
    pub d32_p12: f64,
}

impl RydbergLevelModel {
    pub fn from_species(species: &SpeciesData, rydberg_binding: f64) -> Self {
        let levels = &species.levels;
        RydbergLevelModel {
            rydberg_binding,
            s12_p12: levels.ion_p12 - levels.ion_s12,
            d32_p12: levels.ion_p12 - levels.ion_d32,
        }
    }

    /// Photon energy (eV) needed to drive the named core transition. The
    /// spectator electron shifts both levels equally, so this equals the
    /// bare ionic transition energy for any binding, including zero.
    pub fn autoionizing_photon_energy(&self, core_transition: &str) -> Result<f64, PhysicsError> {
        match normalize_transition(core_transition).as_str() {
            "s12p12" | "397" => Ok(self.s12_p12),
            "d32p12" | "866" => Ok(self.d32_p12),
            _ => Err(PhysicsError::UnknownTransition(core_transition.to_string())),
        }
    }

    /// Whether driving the named core transition lifts the doubly excited
    /// system above the ionic ground continuum. The final state sits one
    /// core-transition energy above -rydberg_binding, so the channel opens
    /// iff that energy exceeds the binding.
    pub fn drives_autoionization(&self, core_transition: &str) -> Result<bool, PhysicsError> {
        Ok(self.autoionizing_photon_energy(core_transition)? > self.rydberg_binding)
    }
}

fn normalize_transition(name: &str) -> String {
    name.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

/// One atom crossing the ionization beam at the trap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamAtom {
    /// Longitudinal speed along the atomic beam, m/s.
    pub velocity: f64,
    /// Isotope mass number.
    pub isotope: u32,
    /// Perpendicular distance from the laser beam axis, m.
    pub transverse_offset: f64,
}

/// First-order Doppler shift of a laser at `deviation` from perpendicular
/// to the atom path: v sin(deviation) / lambda, signed.
pub fn doppler_shift(velocity: f64, deviation_from_perpendicular: f64, wavelength: f64) -> f64 {
    velocity * deviation_from_perpendicular.sin() / wavelength
}

/// Two-level saturation intensity pi h c Gamma / (3 lambda^3) for a
/// resonance of the given width (ordinary frequency).
pub fn saturation_intensity(wavelength: f64, linewidth: f64) -> f64 {
    PI * PLANCK * SPEED_OF_LIGHT * (TAU * linewidth)
        / (3.0 * wavelength * wavelength * wavelength)
}

/// Whether a photon of the given wavelength can ionize out of a bound
/// level at `initial_level_energy` against ionization potential `ip`
/// (both eV). Strict inequality: an exactly resonant photon does not count.
pub fn can_photoionize(initial_level_energy: f64, ip: f64, wavelength: f64) -> bool {
    photon_energy_ev(wavelength) > ip - initial_level_energy
}

/// Rydberg-channel loading rate under the saturable one-photon drive:
/// R = R_max P / (P + P_sat). Linear slope R_max/P_sat at low power.
pub fn rydberg_loading_rate(p_397: f64, r_max: f64, p_sat: f64) -> f64 {
    if p_397 <= 0.0 {
        return 0.0;
    }
    r_max * p_397 / (p_397 + p_sat)
}

/// Probability that one ground-state atom is ionized while crossing the
/// Gaussian ionization beam.
///
/// The excitation rate is the unsaturated Lorentzian (Gamma/2) s(r) L(delta)
/// and each excitation ionizes with probability sigma Phi(r) / Gamma, so the
/// local rate scales with intensity squared. Integrated along the chord at
/// transverse offset b this gives
///
///   p = 1 - exp(-(Gamma/2) s0 p2 L(delta) exp(-4 b^2/w^2) (w sqrt(pi)/2) / v)
///
/// with s0 the peak saturation parameter and p2 the peak second-step
/// probability. When the second step would saturate (p2 > 0.1) the chord
/// integral is evaluated numerically with the per-point probability clamped
/// at 1.
pub fn two_photon_ionization_prob(
    atom: &BeamAtom,
    species: &SpeciesData,
    laser: &IonLaserSpec,
    channel: &IonizationChannel,
    geometry: &BeamGeometry,
) -> Result<f64, PhysicsError> {
    let iso = species.isotope(atom.isotope)?;
    if laser.power <= 0.0 {
        return Ok(0.0);
    }
    let delta = laser.detuning
        + iso.shift_272
        + doppler_shift(atom.velocity, geometry.pi_laser_angle, laser.wavelength);
    Ok(transit_probability(
        atom.velocity,
        atom.transverse_offset,
        delta,
        laser,
        channel,
    ))
}

/// Second-step threshold above which the closed-form chord integral is
/// replaced by clamped quadrature.
const SECOND_STEP_LINEAR_LIMIT: f64 = 0.1;

fn transit_probability(
    velocity: f64,
    offset: f64,
    delta: f64,
    laser: &IonLaserSpec,
    channel: &IonizationChannel,
) -> f64 {
    let w = laser.waist_at_trap;
    let gamma = TAU * channel.resonant_linewidth;
    let s0 = laser.peak_intensity() / saturation_intensity(laser.wavelength, channel.resonant_linewidth);
    let flux0 = laser.peak_intensity() / photon_energy_joules(laser.wavelength);
    let p2 = channel.ionization_cross_section * flux0 / gamma;
    let lorentz = 1.0 / (1.0 + (2.0 * delta / channel.resonant_linewidth).powi(2));
    let b2 = offset * offset;

    let chord_integral = if p2 <= SECOND_STEP_LINEAR_LIMIT {
        // rate(x) = (Gamma/2) s0 p2 L exp(-4(x^2+b^2)/w^2); the chord
        // integral of exp(-4x^2/w^2) is w sqrt(pi)/2.
        (gamma / 2.0) * s0 * p2 * lorentz * (-4.0 * b2 / (w * w)).exp() * w * PI.sqrt() / 2.0
    } else {
        // Simpson over x in [-4w, 4w], second step clamped at certainty.
        let n = 400;
        let x_max = 4.0 * w;
        let h = 2.0 * x_max / n as f64;
        let rate = |x: f64| {
            let g = (-2.0 * (x * x + b2) / (w * w)).exp();
            (gamma / 2.0) * s0 * g * lorentz * (p2 * g).min(1.0)
        };
        let mut sum = rate(-x_max) + rate(x_max);
        for i in 1..n {
            let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += weight * rate(-x_max + i as f64 * h);
        }
        sum * h / 3.0
    };
    1.0 - (-chord_integral / velocity).exp()
}
