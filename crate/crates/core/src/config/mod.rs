//! Run configuration: typed parameters, defaults, parsing, validation.
//!
//! Configs are sectioned `key = value` text with optional unit suffixes
//! (see [`units::Quantity`]). A default-constructed [`RunConfig`] describes
//! the reference machine: a 1064 nm nanosecond ablation laser on a Ca
//! target 13 cm below a linear RF trap, with a 272 nm two-photon
//! photoionization beam crossing the atom path 12 degrees off
//! perpendicular.

mod parse;
pub mod units;

pub use parse::{apply_override, parse_config};

use crate::constants::{photon_energy_ev, ATOMIC_MASS};
use crate::error::{ConfigError, PhysicsError};
use std::f64::consts::PI;

/// One isotope of the loaded species.
#[derive(Debug, Clone, PartialEq)]
pub struct Isotope {
    /// Mass number used as the identifier (e.g. 40 for 40Ca).
    pub mass_number: u32,
    /// Atomic mass, kg.
    pub mass: f64,
    /// Natural abundance fraction.
    pub abundance: f64,
    /// Isotope shift of the two-photon resonance relative to the reference
    /// isotope, Hz.
    pub shift_272: f64,
}

/// Named electronic levels, energies in eV above the neutral ground state.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelTable {
    pub ground: f64,
    pub resonant_272_upper: f64,
    pub metastable_1d2: f64,
    pub ion_s12: f64,
    pub ion_p12: f64,
    pub ion_d32: f64,
}

/// Level identifiers for [`LevelTable::energy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Ground,
    Resonant272Upper,
    Metastable1D2,
    IonS12,
    IonP12,
    IonD32,
}

impl LevelTable {
    pub fn energy(&self, level: Level) -> f64 {
        match level {
            Level::Ground => self.ground,
            Level::Resonant272Upper => self.resonant_272_upper,
            Level::Metastable1D2 => self.metastable_1d2,
            Level::IonS12 => self.ion_s12,
            Level::IonP12 => self.ion_p12,
            Level::IonD32 => self.ion_d32,
        }
    }
}

/// Target species data: isotope table, level structure, vapor pressure and
/// thermal constants of the bulk target.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesData {
    pub name: String,
    /// Ionization potential, eV.
    pub ionization_potential: f64,
    pub isotopes: Vec<Isotope>,
    pub levels: LevelTable,
    /// Antoine coefficient A in log10(P_vap[mbar]) = A - B/T.
    pub vapor_pressure_a: f64,
    /// Antoine coefficient B, K.
    pub vapor_pressure_b: f64,
    /// Bulk density, kg/m3.
    pub density: f64,
    /// Specific heat capacity, J/(kg K).
    pub specific_heat: f64,
    /// Thermal conductivity, W/(m K).
    pub thermal_conductivity: f64,
    /// Target reflectivity at the 1064 nm ablation wavelength.
    pub reflectivity_1064: f64,
    /// Natural linewidth of the ion cooling transition, Hz.
    pub ion_cooling_linewidth: f64,
}

impl SpeciesData {
    /// Abundance-weighted mean atomic mass, kg.
    pub fn mean_mass(&self) -> f64 {
        let total: f64 = self.isotopes.iter().map(|i| i.abundance).sum();
        self.isotopes
            .iter()
            .map(|i| i.abundance * i.mass)
            .sum::<f64>()
            / total
    }

    pub fn isotope(&self, mass_number: u32) -> Result<&Isotope, PhysicsError> {
        self.isotopes
            .iter()
            .find(|i| i.mass_number == mass_number)
            .ok_or(PhysicsError::UnknownIsotope(mass_number))
    }
}

/// Pulsed ablation laser hardware.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationLaserSpec {
    /// Wavelength, m.
    pub wavelength: f64,
    /// Pulse energy on the flat part of the rate curve, J.
    pub max_pulse_energy: f64,
    /// Rate up to which pulse energy stays at max, Hz.
    pub knee_rate: f64,
    /// Rate beyond which energy falls as 1/rate (constant average power), Hz.
    pub inverse_rate: f64,
    /// Hardware maximum repetition rate, Hz.
    pub max_rep_rate: f64,
    /// Pulse duration, s.
    pub pulse_duration: f64,
    /// Gaussian beam waist radius on target, m.
    pub waist: f64,
    /// Angle of incidence on the target, rad.
    pub incidence_angle: f64,
    /// Area covered by spot dithering, m2 (fresh-surface bookkeeping).
    pub dither_area: f64,
}

impl AblationLaserSpec {
    /// Pulse energy available at `rate_hz`. Constant below the knee, 1/rate
    /// above the inverse point, and a smooth log-interpolated bridge in
    /// between; continuous and non-increasing over the whole range.
    pub fn pulse_energy_at_rate(&self, rate_hz: f64) -> Result<f64, PhysicsError> {
        if !(rate_hz > 0.0) || rate_hz > self.max_rep_rate {
            return Err(PhysicsError::RateOutOfRange {
                rate_hz,
                max_hz: self.max_rep_rate,
            });
        }
        if rate_hz <= self.knee_rate {
            return Ok(self.max_pulse_energy);
        }
        if rate_hz >= self.inverse_rate {
            return Ok(self.max_pulse_energy * self.knee_rate / rate_hz);
        }
        let beta = ((rate_hz / self.knee_rate).ln() / (self.inverse_rate / self.knee_rate).ln())
            .clamp(0.0, 1.0);
        Ok(self.max_pulse_energy * (self.knee_rate / rate_hz).powf(beta))
    }

    /// Illuminated spot area on the target, m2. Oblique incidence
    /// stretches the spot by 1/cos(angle).
    pub fn spot_area(&self) -> f64 {
        PI * self.waist * self.waist / self.incidence_angle.cos()
    }

    /// Peak fluence of a Gaussian pulse of energy `pulse_energy` on the
    /// tilted target, J/m2: F = 2 E cos(theta) / (pi w^2).
    pub fn peak_fluence(&self, pulse_energy: f64) -> f64 {
        2.0 * pulse_energy * self.incidence_angle.cos() / (PI * self.waist * self.waist)
    }

    /// Pulse energy that produces peak fluence `fluence` (J/m2) on target.
    pub fn energy_for_fluence(&self, fluence: f64) -> f64 {
        fluence * PI * self.waist * self.waist / (2.0 * self.incidence_angle.cos())
    }
}

/// One CW laser: wavelength, power, focus size, detuning from its
/// reference transition.
#[derive(Debug, Clone, PartialEq)]
pub struct IonLaserSpec {
    /// Wavelength, m.
    pub wavelength: f64,
    /// Power delivered to the interaction region, W.
    pub power: f64,
    /// Gaussian waist radius at the trap center, m.
    pub waist_at_trap: f64,
    /// Detuning from the reference-isotope resonance, Hz (signed).
    pub detuning: f64,
    /// Laser linewidth, Hz.
    pub linewidth: f64,
}

impl IonLaserSpec {
    /// Photon energy, eV.
    pub fn photon_energy_ev(&self) -> f64 {
        photon_energy_ev(self.wavelength)
    }

    /// Peak intensity of the Gaussian focus, W/m2.
    pub fn peak_intensity(&self) -> f64 {
        2.0 * self.power / (PI * self.waist_at_trap * self.waist_at_trap)
    }
}

/// How the ablation source is driven in a run.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationSettings {
    /// Pulse repetition rate, Hz.
    pub rep_rate: f64,
    /// Operating peak fluence, J/m2. `None` derives the pulse energy from
    /// the laser's rate curve instead.
    pub fluence: Option<f64>,
    /// Target temperature between pulses, K.
    pub ambient_temperature: f64,
    /// Plasma regime threshold fluence, J/m2.
    pub threshold_fluence: f64,
    /// Dimensionless emission yield calibration multiplying the
    /// vapor-pressure flux estimate.
    pub yield_scale: f64,
    /// Fraction of the ablated flux emitted in high Rydberg states when in
    /// the plasma regime.
    pub rydberg_fraction: f64,
    /// Crater depth gained per pulse per unit fluence above threshold,
    /// m/(J/m2).
    pub depth_slope: f64,
    /// Sub-threshold melt churn depth per pulse, m.
    pub epsilon_melt: f64,
    /// Initial contaminant surface coverage fraction on the target.
    pub contaminant_coverage: f64,
    /// Fraction of remaining contaminant removed by each pulse.
    pub contaminant_burnoff_per_pulse: f64,
}

/// Geometry between the ablation target and the trap center.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamGeometry {
    /// Target-to-trap distance, m.
    pub target_trap_distance: f64,
    /// Trap acceptance aperture width (along the 272 nm beam), m.
    pub aperture_width: f64,
    /// Trap acceptance aperture height (transverse), m.
    pub aperture_height: f64,
    /// Deviation of the 272 nm beam from perpendicular to the atom path,
    /// rad. Sets the residual first-order Doppler shift.
    pub pi_laser_angle: f64,
    /// Tilt of the mean emission axis away from the target normal, rad.
    pub emission_axis_tilt: f64,
}

/// Photoionization channel parameters beyond the laser itself.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotoionizationSettings {
    /// Natural linewidth of the resonant intermediate state, Hz.
    pub linewidth_272: f64,
    /// Photoionization cross section out of the intermediate state, m2.
    pub cross_section_272: f64,
    /// Saturated autoionization probability for a Rydberg atom crossing
    /// the cooling beam.
    pub rydberg_p_max: f64,
    /// Cooling beam power at which Rydberg autoionization reaches half its
    /// saturated value, W.
    pub rydberg_saturation_power: f64,
    /// Binding energy of the populated Rydberg manifold below the
    /// continuum, eV.
    pub rydberg_binding: f64,
    /// Width of the autoionizing core resonance, Hz.
    pub rydberg_linewidth: f64,
    /// Amplitude of a slow sinusoidal drift of the 272 nm detuning, Hz.
    pub drift_amplitude: f64,
    /// Period of the detuning drift, s.
    pub drift_period: f64,
}

/// Linear RF trap electrical parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapParams {
    /// Field radius r0, m.
    pub r0: f64,
    /// RF drive frequency Omega/2pi, Hz.
    pub drive_frequency: f64,
    /// RF amplitude, V.
    pub rf_amplitude: f64,
    /// Endcap DC voltage, V.
    pub endcap_voltage: f64,
    /// Geometric efficiency factor of the electrodes.
    pub geometric_efficiency: f64,
    /// Dimensionless depth factor kappa in D = kappa q V geom / 8.
    pub depth_kappa: f64,
}

/// Vacuum system parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct VacuumParams {
    /// Steady-state base pressure, mbar.
    pub base_pressure: f64,
    /// Effective pump speed, L/s.
    pub pump_speed: f64,
    /// Chamber volume, L.
    pub chamber_volume: f64,
    /// Prompt gas load per watt of average ablation power, mbar L/(s W).
    pub gas_load_per_watt: f64,
    /// Extra gas load per watt from full contaminant coverage, mbar L/(s W).
    pub contaminant_load_per_watt: f64,
}

/// Fluorescence detection and step-finding parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionSettings {
    /// Photon collection and detection efficiency.
    pub efficiency: f64,
    /// Background count rate, 1/s.
    pub background_rate: f64,
    /// Fluorescence histogram bin width, s.
    pub bin_width: f64,
    /// Step detector window length, bins.
    pub step_window: usize,
    /// Step detector threshold in units of the expected window-mean sigma.
    pub step_threshold_sigma: f64,
    /// Minimum separation between detected steps, s.
    pub step_min_separation: f64,
    /// Time a freshly loaded ion keeps the crystal too hot to fluoresce, s.
    pub tau_heat: f64,
    /// Collisional dark-state rate per ion per mbar, 1/(s mbar).
    pub dark_rate_per_mbar: f64,
    /// Dwell time of a collisional dark period, s.
    pub dark_dwell: f64,
    /// Fraction of normal fluorescence emitted while the crystal is hot.
    pub hot_suppressed_fraction: f64,
}

/// Time base and sampling mode of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    /// Master RNG seed.
    pub seed: u64,
    /// Diagnostic sampling step, s.
    pub time_step: f64,
    /// Total simulated time, s.
    pub duration: f64,
    /// Burst-size sampling mode.
    pub sampling: Sampling,
}

/// Whether per-pulse burst sizes carry shot noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Poisson-distributed atom numbers (default).
    Poisson,
    /// Deterministic mean-field burst sizes, for smooth scans.
    MeanField,
}

/// Loading controller configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerParams {
    pub mode: ControllerMode,
    /// Ion count at which the auto shutter closes the ablation gate.
    pub target_ion_count: u32,
    /// Delay between step detection and the gate actually closing, s.
    pub shutter_latency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerMode {
    /// Ablation runs for the whole duration.
    Continuous,
    /// Ablation follows the `[gating]` interval list.
    Gated,
    /// Ablation runs until the detected ion count reaches the target.
    AutoShutter,
}

/// Complete description of one simulated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub run: RunSettings,
    pub species: SpeciesData,
    pub ablation_laser: AblationLaserSpec,
    pub ablation: AblationSettings,
    pub beam: BeamGeometry,
    pub pi_laser: IonLaserSpec,
    pub cooling_laser: IonLaserSpec,
    pub repumper: IonLaserSpec,
    pub photoionization: PhotoionizationSettings,
    pub trap: TrapParams,
    pub vacuum: VacuumParams,
    pub detection: DetectionSettings,
    /// Ablation on-intervals (start, end) in seconds; empty means always on.
    pub gating: Vec<(f64, f64)>,
    pub controller: Option<ControllerParams>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let beam_angle = 12.0_f64.to_radians();
        RunConfig {
            run: RunSettings {
                seed: 1,
                time_step: 0.01,
                duration: 20.0,
                sampling: Sampling::Poisson,
            },
            species: SpeciesData {
                name: "Ca".into(),
                ionization_potential: 6.1132,
                isotopes: default_ca_isotopes(),
                levels: LevelTable {
                    ground: 0.0,
                    resonant_272_upper: 4.554140,
                    metastable_1d2: 2.709009,
                    ion_s12: 6.1132,
                    ion_p12: 9.236549,
                    ion_d32: 7.805608,
                },
                vapor_pressure_a: 8.3,
                vapor_pressure_b: 9517.0,
                density: 1550.0,
                specific_heat: 647.0,
                thermal_conductivity: 200.0,
                reflectivity_1064: 0.9,
                ion_cooling_linewidth: 20.7e6,
            },
            ablation_laser: AblationLaserSpec {
                wavelength: 1064e-9,
                max_pulse_energy: 80e-6,
                knee_rate: 3e3,
                inverse_rate: 15e3,
                max_rep_rate: 200e3,
                pulse_duration: 40e-9,
                waist: 75e-6,
                incidence_angle: 30.0_f64.to_radians(),
                dither_area: 1e-6,
            },
            ablation: AblationSettings {
                rep_rate: 25e3,
                fluence: Some(2400.0),
                ambient_temperature: 300.0,
                threshold_fluence: 6000.0,
                yield_scale: DEFAULT_YIELD_SCALE,
                rydberg_fraction: 1e-4,
                depth_slope: 1.63e-15,
                epsilon_melt: 0.0,
                contaminant_coverage: 0.0,
                contaminant_burnoff_per_pulse: 2e-6,
            },
            beam: BeamGeometry {
                target_trap_distance: 0.13,
                aperture_width: 1.0e-3,
                aperture_height: 1.5e-3,
                pi_laser_angle: beam_angle,
                emission_axis_tilt: 0.0,
            },
            pi_laser: IonLaserSpec {
                wavelength: 272e-9,
                power: 15e-3,
                waist_at_trap: 160e-6,
                // Centered on the dominant velocity class (700 m/s) at the
                // default beam angle, so the resonance sits on the bulk of
                // the flux distribution rather than on near-stationary
                // atoms.
                detuning: -700.0 * beam_angle.sin() / 272e-9,
                linewidth: 2e6,
            },
            cooling_laser: IonLaserSpec {
                wavelength: 397e-9,
                power: 1e-3,
                waist_at_trap: 1e-3,
                detuning: -10.35e6,
                linewidth: 1e6,
            },
            repumper: IonLaserSpec {
                wavelength: 866e-9,
                power: 1e-3,
                waist_at_trap: 1e-3,
                detuning: 0.0,
                linewidth: 1e6,
            },
            photoionization: PhotoionizationSettings {
                linewidth_272: 23e6,
                cross_section_272: 1e-21,
                rydberg_p_max: 0.25,
                rydberg_saturation_power: 5e-3,
                rydberg_binding: 2.0,
                rydberg_linewidth: 500e9,
                drift_amplitude: 0.0,
                drift_period: 120.0,
            },
            trap: TrapParams {
                r0: 2.35e-3,
                drive_frequency: 4e6,
                rf_amplitude: 200.0,
                endcap_voltage: 2.0,
                geometric_efficiency: 1.0,
                depth_kappa: 1.0,
            },
            vacuum: VacuumParams {
                base_pressure: 4e-10,
                pump_speed: 100.0,
                chamber_volume: 50.0,
                gas_load_per_watt: 2.3674885471681895e-8,
                contaminant_load_per_watt: 1.6e-6,
            },
            detection: DetectionSettings {
                efficiency: 1e-3,
                background_rate: 200.0,
                bin_width: 0.05,
                step_window: 6,
                step_threshold_sigma: 6.0,
                step_min_separation: 0.4,
                tau_heat: 0.2,
                dark_rate_per_mbar: 2.5e5,
                dark_dwell: 0.4,
                hot_suppressed_fraction: 0.0,
            },
            gating: Vec::new(),
            controller: None,
        }
    }
}

/// Emission yield calibration shipped as the default; reproduces 125
/// captured ions/s at 240 mJ/cm2, 25 kHz with otherwise default settings.
pub const DEFAULT_YIELD_SCALE: f64 = 8.2213e12;

fn default_ca_isotopes() -> Vec<Isotope> {
    [
        (40, 39.962590863, 0.96941, 0.0),
        (42, 41.95861783, 0.00647, 1.28e9),
        (43, 42.95876644, 0.00135, 1.94e9),
        (44, 43.95548156, 0.02086, 2.46e9),
        (46, 45.9536890, 0.00004, 3.52e9),
        (48, 47.95252276, 0.00187, 4.50e9),
    ]
    .into_iter()
    .map(|(mass_number, mass_u, abundance, shift_272)| Isotope {
        mass_number,
        mass: mass_u * ATOMIC_MASS,
        abundance,
        shift_272,
    })
    .collect()
}

impl RunConfig {
    /// Reads a config file, applies the `ABLATRON_SEED` environment
    /// override if set, and validates.
    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        parse_config(&text)
    }

    /// The controller mode in effect: an explicit controller wins,
    /// otherwise a non-empty gating table means gated, else continuous.
    pub fn effective_mode(&self) -> ControllerMode {
        match &self.controller {
            Some(c) => c.mode,
            None if !self.gating.is_empty() => ControllerMode::Gated,
            None => ControllerMode::Continuous,
        }
    }

    /// Gating intervals actually applied, clipped to the run duration.
    /// Continuous and auto-shutter modes start from a single full-length
    /// interval.
    pub fn effective_gating(&self) -> Vec<(f64, f64)> {
        let mode = self.effective_mode();
        if mode == ControllerMode::Gated && !self.gating.is_empty() {
            self.gating
                .iter()
                .filter(|(s, _)| *s < self.run.duration)
                .map(|&(s, e)| (s, e.min(self.run.duration)))
                .collect()
        } else {
            vec![(0.0, self.run.duration)]
        }
    }

    /// Per-pulse energy for this run: the configured fluence wins,
    /// otherwise the laser rate curve at the configured repetition rate.
    pub fn pulse_energy(&self) -> Result<f64, PhysicsError> {
        match self.ablation.fluence {
            Some(f) => Ok(self.ablation_laser.energy_for_fluence(f)),
            None => self.ablation_laser.pulse_energy_at_rate(self.ablation.rep_rate),
        }
    }

    /// Peak fluence on target for this run, J/m2.
    pub fn pulse_fluence(&self) -> Result<f64, PhysicsError> {
        match self.ablation.fluence {
            Some(f) => Ok(f),
            None => Ok(self
                .ablation_laser
                .peak_fluence(self.ablation_laser.pulse_energy_at_rate(self.ablation.rep_rate)?)),
        }
    }

    /// Checks every cross-field constraint; errors name the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        validate(self)
    }

    /// Canonical text form. Parsing it back yields an identical config;
    /// all values are written in their internal units, so the round trip
    /// is bit-exact.
    pub fn to_canonical_string(&self) -> String {
        serialize(self)
    }
}

fn require(
    ok: bool,
    section: &'static str,
    key: &'static str,
    constraint: &str,
) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::invalid(section, key, constraint))
    }
}

fn validate(c: &RunConfig) -> Result<(), ConfigError> {
    let r = &c.run;
    require(r.time_step > 0.0, "run", "time_step", "must be > 0")?;
    require(r.duration > 0.0, "run", "duration", "must be > 0")?;
    require(
        r.duration >= r.time_step,
        "run",
        "duration",
        "must be at least one time_step",
    )?;

    let s = &c.species;
    require(!s.isotopes.is_empty(), "species", "isotope", "need at least one isotope")?;
    let mut seen = Vec::new();
    let mut total = 0.0;
    for iso in &s.isotopes {
        require(
            iso.mass > 0.0,
            "species",
            "isotope",
            "isotope mass must be > 0",
        )?;
        require(
            (0.0..=1.0).contains(&iso.abundance),
            "species",
            "isotope",
            "abundance must be in [0, 1]",
        )?;
        require(
            !seen.contains(&iso.mass_number),
            "species",
            "isotope",
            "duplicate isotope mass number",
        )?;
        seen.push(iso.mass_number);
        total += iso.abundance;
    }
    require(
        (total - 1.0).abs() < 1e-6,
        "species",
        "isotope",
        "abundances must sum to 1",
    )?;
    require(
        s.ionization_potential > 0.0,
        "species",
        "ionization_potential",
        "must be > 0",
    )?;
    for e in [
        s.levels.ground,
        s.levels.resonant_272_upper,
        s.levels.metastable_1d2,
    ] {
        require(
            e < s.ionization_potential,
            "species",
            "level",
            "bound levels must lie below the ionization potential",
        )?;
        require(e >= 0.0, "species", "level", "level energies must be >= 0")?;
    }
    for e in [s.levels.ion_s12, s.levels.ion_p12, s.levels.ion_d32] {
        require(
            e >= s.ionization_potential - 1e-9,
            "species",
            "level",
            "ion core levels must lie at or above the ionization potential",
        )?;
    }
    require(
        s.levels.ion_p12 > s.levels.ion_s12 && s.levels.ion_p12 > s.levels.ion_d32,
        "species",
        "level",
        "ion P1/2 must lie above both S1/2 and D3/2",
    )?;
    require(s.vapor_pressure_b > 0.0, "species", "vapor_pressure_b", "must be > 0")?;
    require(s.density > 0.0, "species", "density", "must be > 0")?;
    require(s.specific_heat > 0.0, "species", "specific_heat", "must be > 0")?;
    require(
        s.thermal_conductivity > 0.0,
        "species",
        "thermal_conductivity",
        "must be > 0",
    )?;
    require(
        (0.0..1.0).contains(&s.reflectivity_1064),
        "species",
        "reflectivity_1064",
        "must be in [0, 1)",
    )?;
    require(
        s.ion_cooling_linewidth > 0.0,
        "species",
        "ion_cooling_linewidth",
        "must be > 0",
    )?;

    let l = &c.ablation_laser;
    require(l.wavelength > 0.0, "ablation_laser", "wavelength", "must be > 0")?;
    require(
        l.max_pulse_energy > 0.0,
        "ablation_laser",
        "max_pulse_energy",
        "must be > 0",
    )?;
    require(l.knee_rate > 0.0, "ablation_laser", "knee_rate", "must be > 0")?;
    require(
        l.knee_rate < l.inverse_rate,
        "ablation_laser",
        "inverse_rate",
        "must be above knee_rate",
    )?;
    require(
        l.inverse_rate <= l.max_rep_rate,
        "ablation_laser",
        "max_rep_rate",
        "must be at or above inverse_rate",
    )?;
    require(
        l.pulse_duration > 0.0,
        "ablation_laser",
        "pulse_duration",
        "must be > 0",
    )?;
    require(l.waist > 0.0, "ablation_laser", "waist", "must be > 0")?;
    require(
        (0.0..90.0_f64.to_radians()).contains(&l.incidence_angle),
        "ablation_laser",
        "incidence_angle",
        "must be in [0, 90) degrees",
    )?;
    require(l.dither_area > 0.0, "ablation_laser", "dither_area", "must be > 0")?;

    let a = &c.ablation;
    require(
        a.rep_rate > 0.0 && a.rep_rate <= l.max_rep_rate,
        "ablation",
        "rep_rate",
        "must be in (0, ablation_laser.max_rep_rate]",
    )?;
    if let Some(f) = a.fluence {
        require(f > 0.0, "ablation", "fluence", "must be > 0 (or 'auto')")?;
    }
    require(
        a.ambient_temperature > 0.0,
        "ablation",
        "ambient_temperature",
        "must be > 0",
    )?;
    require(
        a.threshold_fluence >= 0.0,
        "ablation",
        "threshold_fluence",
        "must be >= 0",
    )?;
    require(a.yield_scale > 0.0, "ablation", "yield_scale", "must be > 0")?;
    require(
        (0.0..=1.0).contains(&a.rydberg_fraction),
        "ablation",
        "rydberg_fraction",
        "must be in [0, 1]",
    )?;
    require(a.depth_slope >= 0.0, "ablation", "depth_slope", "must be >= 0")?;
    require(a.epsilon_melt >= 0.0, "ablation", "epsilon_melt", "must be >= 0")?;
    require(
        (0.0..=1.0).contains(&a.contaminant_coverage),
        "ablation",
        "contaminant_coverage",
        "must be in [0, 1]",
    )?;
    require(
        (0.0..=1.0).contains(&a.contaminant_burnoff_per_pulse),
        "ablation",
        "contaminant_burnoff_per_pulse",
        "must be in [0, 1]",
    )?;

    let b = &c.beam;
    require(
        b.target_trap_distance > 0.0,
        "beam",
        "target_trap_distance",
        "must be > 0",
    )?;
    require(b.aperture_width > 0.0, "beam", "aperture_width", "must be > 0")?;
    require(b.aperture_height > 0.0, "beam", "aperture_height", "must be > 0")?;
    require(
        (0.0..90.0_f64.to_radians()).contains(&b.pi_laser_angle),
        "beam",
        "pi_laser_angle",
        "must be in [0, 90) degrees",
    )?;
    require(
        (0.0..90.0_f64.to_radians()).contains(&b.emission_axis_tilt),
        "beam",
        "emission_axis_tilt",
        "must be in [0, 90) degrees",
    )?;

    let lasers: [(&'static str, &IonLaserSpec); 3] = [
        ("pi_laser", &c.pi_laser),
        ("cooling_laser", &c.cooling_laser),
        ("repumper", &c.repumper),
    ];
    for (section, laser) in lasers {
        require(laser.wavelength > 0.0, section, "wavelength", "must be > 0")?;
        require(laser.power >= 0.0, section, "power", "must be >= 0")?;
        require(laser.waist_at_trap > 0.0, section, "waist_at_trap", "must be > 0")?;
        require(laser.linewidth >= 0.0, section, "linewidth", "must be >= 0")?;
    }

    let p = &c.photoionization;
    require(p.linewidth_272 > 0.0, "photoionization", "linewidth_272", "must be > 0")?;
    require(
        p.cross_section_272 >= 0.0,
        "photoionization",
        "cross_section_272",
        "must be >= 0",
    )?;
    require(
        (0.0..=1.0).contains(&p.rydberg_p_max),
        "photoionization",
        "rydberg_p_max",
        "must be in [0, 1]",
    )?;
    require(
        p.rydberg_saturation_power > 0.0,
        "photoionization",
        "rydberg_saturation_power",
        "must be > 0",
    )?;
    require(p.rydberg_binding > 0.0, "photoionization", "rydberg_binding", "must be > 0")?;
    require(
        p.rydberg_linewidth > 0.0,
        "photoionization",
        "rydberg_linewidth",
        "must be > 0",
    )?;
    require(
        p.drift_amplitude >= 0.0,
        "photoionization",
        "drift_amplitude",
        "must be >= 0",
    )?;
    require(p.drift_period > 0.0, "photoionization", "drift_period", "must be > 0")?;

    let t = &c.trap;
    require(t.r0 > 0.0, "trap", "r0", "must be > 0")?;
    require(t.drive_frequency > 0.0, "trap", "drive_frequency", "must be > 0")?;
    require(t.rf_amplitude > 0.0, "trap", "rf_amplitude", "must be > 0")?;
    require(t.endcap_voltage >= 0.0, "trap", "endcap_voltage", "must be >= 0")?;
    require(
        t.geometric_efficiency > 0.0 && t.geometric_efficiency <= 1.0,
        "trap",
        "geometric_efficiency",
        "must be in (0, 1]",
    )?;
    require(
        t.depth_kappa > 0.0 && t.depth_kappa <= 2.0,
        "trap",
        "depth_kappa",
        "must be in (0, 2]",
    )?;

    let v = &c.vacuum;
    require(v.base_pressure >= 0.0, "vacuum", "base_pressure", "must be >= 0")?;
    require(v.pump_speed > 0.0, "vacuum", "pump_speed", "must be > 0")?;
    require(v.chamber_volume > 0.0, "vacuum", "chamber_volume", "must be > 0")?;
    require(
        v.gas_load_per_watt >= 0.0,
        "vacuum",
        "gas_load_per_watt",
        "must be >= 0",
    )?;
    require(
        v.contaminant_load_per_watt >= 0.0,
        "vacuum",
        "contaminant_load_per_watt",
        "must be >= 0",
    )?;

    let d = &c.detection;
    require(
        d.efficiency > 0.0 && d.efficiency <= 1.0,
        "detection",
        "efficiency",
        "must be in (0, 1]",
    )?;
    require(d.background_rate >= 0.0, "detection", "background_rate", "must be >= 0")?;
    require(d.bin_width > 0.0, "detection", "bin_width", "must be > 0")?;
    require(d.step_window >= 2, "detection", "step_window", "must be >= 2 bins")?;
    require(
        d.step_threshold_sigma > 0.0,
        "detection",
        "step_threshold_sigma",
        "must be > 0",
    )?;
    require(
        d.step_min_separation >= 0.0,
        "detection",
        "step_min_separation",
        "must be >= 0",
    )?;
    require(d.tau_heat >= 0.0, "detection", "tau_heat", "must be >= 0")?;
    require(
        d.dark_rate_per_mbar >= 0.0,
        "detection",
        "dark_rate_per_mbar",
        "must be >= 0",
    )?;
    require(d.dark_dwell > 0.0, "detection", "dark_dwell", "must be > 0")?;
    require(
        (0.0..1.0).contains(&d.hot_suppressed_fraction),
        "detection",
        "hot_suppressed_fraction",
        "must be in [0, 1)",
    )?;

    let mut prev_end = f64::NEG_INFINITY;
    for &(start, end) in &c.gating {
        require(start >= 0.0, "gating", "intervals", "interval starts must be >= 0")?;
        require(start < end, "gating", "intervals", "each interval needs start < end")?;
        require(
            start >= prev_end,
            "gating",
            "intervals",
            "intervals must be sorted and non-overlapping",
        )?;
        prev_end = end;
    }

    if let Some(ctrl) = &c.controller {
        require(
            ctrl.target_ion_count >= 1,
            "controller",
            "target_ion_count",
            "must be >= 1",
        )?;
        require(
            ctrl.shutter_latency >= 0.0,
            "controller",
            "shutter_latency",
            "must be >= 0",
        )?;
    }

    Ok(())
}

fn serialize(c: &RunConfig) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let w = &mut out;

    writeln!(w, "[run]").unwrap();
    writeln!(w, "seed = {}", c.run.seed).unwrap();
    writeln!(w, "time_step = {} s", c.run.time_step).unwrap();
    writeln!(w, "duration = {} s", c.run.duration).unwrap();
    let sampling = match c.run.sampling {
        Sampling::Poisson => "poisson",
        Sampling::MeanField => "mean_field",
    };
    writeln!(w, "sampling = {sampling}").unwrap();

    writeln!(w, "\n[species]").unwrap();
    writeln!(w, "name = {}", c.species.name).unwrap();
    writeln!(w, "ionization_potential = {} eV", c.species.ionization_potential).unwrap();
    for iso in &c.species.isotopes {
        writeln!(
            w,
            "isotope = {} {} kg {} {} Hz",
            iso.mass_number, iso.mass, iso.abundance, iso.shift_272
        )
        .unwrap();
    }
    writeln!(w, "level_ground = {} eV", c.species.levels.ground).unwrap();
    writeln!(
        w,
        "level_resonant_272_upper = {} eV",
        c.species.levels.resonant_272_upper
    )
    .unwrap();
    writeln!(w, "level_metastable_1d2 = {} eV", c.species.levels.metastable_1d2).unwrap();
    writeln!(w, "level_ion_s12 = {} eV", c.species.levels.ion_s12).unwrap();
    writeln!(w, "level_ion_p12 = {} eV", c.species.levels.ion_p12).unwrap();
    writeln!(w, "level_ion_d32 = {} eV", c.species.levels.ion_d32).unwrap();
    writeln!(w, "vapor_pressure_a = {}", c.species.vapor_pressure_a).unwrap();
    writeln!(w, "vapor_pressure_b = {} K", c.species.vapor_pressure_b).unwrap();
    writeln!(w, "density = {} kg/m3", c.species.density).unwrap();
    writeln!(w, "specific_heat = {} J/kg/K", c.species.specific_heat).unwrap();
    writeln!(
        w,
        "thermal_conductivity = {} W/m/K",
        c.species.thermal_conductivity
    )
    .unwrap();
    writeln!(w, "reflectivity_1064 = {}", c.species.reflectivity_1064).unwrap();
    writeln!(
        w,
        "ion_cooling_linewidth = {} Hz",
        c.species.ion_cooling_linewidth
    )
    .unwrap();

    writeln!(w, "\n[ablation_laser]").unwrap();
    writeln!(w, "wavelength = {} m", c.ablation_laser.wavelength).unwrap();
    writeln!(w, "max_pulse_energy = {} J", c.ablation_laser.max_pulse_energy).unwrap();
    writeln!(w, "knee_rate = {} Hz", c.ablation_laser.knee_rate).unwrap();
    writeln!(w, "inverse_rate = {} Hz", c.ablation_laser.inverse_rate).unwrap();
    writeln!(w, "max_rep_rate = {} Hz", c.ablation_laser.max_rep_rate).unwrap();
    writeln!(w, "pulse_duration = {} s", c.ablation_laser.pulse_duration).unwrap();
    writeln!(w, "waist = {} m", c.ablation_laser.waist).unwrap();
    writeln!(w, "incidence_angle = {} rad", c.ablation_laser.incidence_angle).unwrap();
    writeln!(w, "dither_area = {} m2", c.ablation_laser.dither_area).unwrap();

    writeln!(w, "\n[ablation]").unwrap();
    writeln!(w, "rep_rate = {} Hz", c.ablation.rep_rate).unwrap();
    match c.ablation.fluence {
        Some(f) => writeln!(w, "fluence = {} J/m2", f).unwrap(),
        None => writeln!(w, "fluence = auto").unwrap(),
    }
    writeln!(w, "ambient_temperature = {} K", c.ablation.ambient_temperature).unwrap();
    writeln!(w, "threshold_fluence = {} J/m2", c.ablation.threshold_fluence).unwrap();
    writeln!(w, "yield_scale = {}", c.ablation.yield_scale).unwrap();
    writeln!(w, "rydberg_fraction = {}", c.ablation.rydberg_fraction).unwrap();
    writeln!(w, "depth_slope = {}", c.ablation.depth_slope).unwrap();
    writeln!(w, "epsilon_melt = {} m", c.ablation.epsilon_melt).unwrap();
    writeln!(w, "contaminant_coverage = {}", c.ablation.contaminant_coverage).unwrap();
    writeln!(
        w,
        "contaminant_burnoff_per_pulse = {}",
        c.ablation.contaminant_burnoff_per_pulse
    )
    .unwrap();

    writeln!(w, "\n[beam]").unwrap();
    writeln!(w, "target_trap_distance = {} m", c.beam.target_trap_distance).unwrap();
    writeln!(w, "aperture_width = {} m", c.beam.aperture_width).unwrap();
    writeln!(w, "aperture_height = {} m", c.beam.aperture_height).unwrap();
    writeln!(w, "pi_laser_angle = {} rad", c.beam.pi_laser_angle).unwrap();
    writeln!(w, "emission_axis_tilt = {} rad", c.beam.emission_axis_tilt).unwrap();

    for (name, laser) in [
        ("pi_laser", &c.pi_laser),
        ("cooling_laser", &c.cooling_laser),
        ("repumper", &c.repumper),
    ] {
        writeln!(w, "\n[{name}]").unwrap();
        writeln!(w, "wavelength = {} m", laser.wavelength).unwrap();
        writeln!(w, "power = {} W", laser.power).unwrap();
        writeln!(w, "waist_at_trap = {} m", laser.waist_at_trap).unwrap();
        writeln!(w, "detuning = {} Hz", laser.detuning).unwrap();
        writeln!(w, "linewidth = {} Hz", laser.linewidth).unwrap();
    }

    writeln!(w, "\n[photoionization]").unwrap();
    writeln!(w, "linewidth_272 = {} Hz", c.photoionization.linewidth_272).unwrap();
    writeln!(
        w,
        "cross_section_272 = {} m2",
        c.photoionization.cross_section_272
    )
    .unwrap();
    writeln!(w, "rydberg_p_max = {}", c.photoionization.rydberg_p_max).unwrap();
    writeln!(
        w,
        "rydberg_saturation_power = {} W",
        c.photoionization.rydberg_saturation_power
    )
    .unwrap();
    writeln!(w, "rydberg_binding = {} eV", c.photoionization.rydberg_binding).unwrap();
    writeln!(w, "rydberg_linewidth = {} Hz", c.photoionization.rydberg_linewidth).unwrap();
    writeln!(w, "drift_amplitude = {} Hz", c.photoionization.drift_amplitude).unwrap();
    writeln!(w, "drift_period = {} s", c.photoionization.drift_period).unwrap();

    writeln!(w, "\n[trap]").unwrap();
    writeln!(w, "r0 = {} m", c.trap.r0).unwrap();
    writeln!(w, "drive_frequency = {} Hz", c.trap.drive_frequency).unwrap();
    writeln!(w, "rf_amplitude = {} V", c.trap.rf_amplitude).unwrap();
    writeln!(w, "endcap_voltage = {} V", c.trap.endcap_voltage).unwrap();
    writeln!(w, "geometric_efficiency = {}", c.trap.geometric_efficiency).unwrap();
    writeln!(w, "depth_kappa = {}", c.trap.depth_kappa).unwrap();

    writeln!(w, "\n[vacuum]").unwrap();
    writeln!(w, "base_pressure = {} mbar", c.vacuum.base_pressure).unwrap();
    writeln!(w, "pump_speed = {} L/s", c.vacuum.pump_speed).unwrap();
    writeln!(w, "chamber_volume = {} L", c.vacuum.chamber_volume).unwrap();
    writeln!(w, "gas_load_per_watt = {}", c.vacuum.gas_load_per_watt).unwrap();
    writeln!(
        w,
        "contaminant_load_per_watt = {}",
        c.vacuum.contaminant_load_per_watt
    )
    .unwrap();

    writeln!(w, "\n[detection]").unwrap();
    writeln!(w, "efficiency = {}", c.detection.efficiency).unwrap();
    writeln!(w, "background_rate = {} Hz", c.detection.background_rate).unwrap();
    writeln!(w, "bin_width = {} s", c.detection.bin_width).unwrap();
    writeln!(w, "step_window = {}", c.detection.step_window).unwrap();
    writeln!(w, "step_threshold_sigma = {}", c.detection.step_threshold_sigma).unwrap();
    writeln!(
        w,
        "step_min_separation = {} s",
        c.detection.step_min_separation
    )
    .unwrap();
    writeln!(w, "tau_heat = {} s", c.detection.tau_heat).unwrap();
    writeln!(w, "dark_rate_per_mbar = {}", c.detection.dark_rate_per_mbar).unwrap();
    writeln!(w, "dark_dwell = {} s", c.detection.dark_dwell).unwrap();
    writeln!(
        w,
        "hot_suppressed_fraction = {}",
        c.detection.hot_suppressed_fraction
    )
    .unwrap();

    if !c.gating.is_empty() {
        writeln!(w, "\n[gating]").unwrap();
        let intervals: Vec<String> = c
            .gating
            .iter()
            .map(|(s, e)| format!("{s}:{e}"))
            .collect();
        writeln!(w, "intervals = {}", intervals.join(" ")).unwrap();
    }

    if let Some(ctrl) = &c.controller {
        writeln!(w, "\n[controller]").unwrap();
        let mode = match ctrl.mode {
            ControllerMode::Continuous => "continuous",
            ControllerMode::Gated => "gated",
            ControllerMode::AutoShutter => "auto_shutter",
        };
        writeln!(w, "mode = {mode}").unwrap();
        writeln!(w, "target_ion_count = {}", ctrl.target_ion_count).unwrap();
        writeln!(w, "shutter_latency = {} s", ctrl.shutter_latency).unwrap();
    }

    out
}
