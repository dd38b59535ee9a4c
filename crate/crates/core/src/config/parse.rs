//! Sectioned `key = value` config text parser.
//!
//! Unknown sections, unknown keys, malformed numbers and unknown unit
//! suffixes are all hard errors that name the offending line and key.
//! Keys not present keep their defaults, so an empty string parses to the
//! default [`RunConfig`].

use super::units::Quantity;
use super::{
    ControllerMode, ControllerParams, Isotope, RunConfig, Sampling,
};
use crate::error::ConfigError;

/// Parses config text, applies the `ABLATRON_SEED` environment override if
/// present, and validates the result.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = parse_unvalidated(text)?;
    if let Ok(raw) = std::env::var("ABLATRON_SEED") {
        cfg.run.seed = raw
            .trim()
            .parse::<u64>()
            .map_err(|e| ConfigError::BadSeedOverride(format!("'{raw}': {e}")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Applies one `section.key = value` assignment on top of an existing
/// config, with the same key table and unit handling as [`parse_config`].
/// Used by sweeps to vary a single quantity between runs. Re-validates.
pub fn apply_override(
    cfg: &mut RunConfig,
    section: &str,
    key: &str,
    value: &str,
) -> Result<(), ConfigError> {
    if !KNOWN_SECTIONS.contains(&section) {
        return Err(ConfigError::UnknownSection {
            line: 0,
            section: section.to_string(),
        });
    }
    let mut cur = Cursor {
        line: 0,
        tokens: value.split_whitespace().collect(),
        pos: 0,
    };
    // Overrides never reset the isotope table the way a file's first
    // isotope line does; they append or adjust in place.
    let mut isotopes_replaced = true;
    let mut controller_touched = cfg.controller.is_some();
    apply_key(
        cfg,
        section,
        key,
        &mut cur,
        &mut isotopes_replaced,
        &mut controller_touched,
    )?;
    cur.finish()?;
    cfg.validate()
}

fn parse_unvalidated(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut section = String::new();
    let mut isotopes_replaced = false;
    let mut controller_touched = false;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }

        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| ConfigError::Malformed {
                line: line_no,
                message: "section header missing closing ']'".into(),
            })?;
            section = name.trim().to_string();
            if !KNOWN_SECTIONS.contains(&section.as_str()) {
                return Err(ConfigError::UnknownSection {
                    line: line_no,
                    section: section.clone(),
                });
            }
            continue;
        }

        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Malformed {
            line: line_no,
            message: format!("expected 'key = value', got '{line}'"),
        })?;
        let key = key.trim();
        let mut cur = Cursor {
            line: line_no,
            tokens: value.split_whitespace().collect(),
            pos: 0,
        };

        apply_key(
            &mut cfg,
            &section,
            key,
            &mut cur,
            &mut isotopes_replaced,
            &mut controller_touched,
        )?;
        cur.finish()?;
    }

    Ok(cfg)
}

const KNOWN_SECTIONS: &[&str] = &[
    "run",
    "species",
    "ablation_laser",
    "ablation",
    "beam",
    "pi_laser",
    "cooling_laser",
    "repumper",
    "photoionization",
    "trap",
    "vacuum",
    "detection",
    "gating",
    "controller",
];

struct Cursor<'a> {
    line: usize,
    tokens: Vec<&'a str>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn bad(&self, message: impl Into<String>) -> ConfigError {
        ConfigError::Malformed {
            line: self.line,
            message: message.into(),
        }
    }

    fn next_token(&mut self) -> Result<&'a str, ConfigError> {
        let tok = self
            .tokens
            .get(self.pos)
            .ok_or_else(|| self.bad("missing value"))?;
        self.pos += 1;
        Ok(tok)
    }

    fn peek(&self) -> Option<&'a str> {
        self.tokens.get(self.pos).copied()
    }

    /// Number with an optional unit suffix, converted to the internal unit
    /// of `quantity`.
    fn quantity(&mut self, quantity: Quantity) -> Result<f64, ConfigError> {
        let tok = self.next_token()?;
        let value: f64 = tok
            .parse()
            .map_err(|_| self.bad(format!("'{tok}' is not a number")))?;
        if let Some(unit) = self.peek() {
            if unit.parse::<f64>().is_err() {
                // A non-numeric trailing token must be a valid unit.
                let factor = quantity
                    .factor(Some(unit))
                    .map_err(|msg| self.bad(msg))?;
                self.pos += 1;
                return Ok(value * factor);
            }
        }
        Ok(value * quantity.factor(None).map_err(|msg| self.bad(msg))?)
    }

    fn number(&mut self) -> Result<f64, ConfigError> {
        self.quantity(Quantity::Dimensionless)
    }

    fn integer<T: std::str::FromStr>(&mut self) -> Result<T, ConfigError> {
        let tok = self.next_token()?;
        tok.parse()
            .map_err(|_| self.bad(format!("'{tok}' is not a valid integer")))
    }

    fn word(&mut self) -> Result<&'a str, ConfigError> {
        self.next_token()
    }

    fn finish(&self) -> Result<(), ConfigError> {
        if self.pos < self.tokens.len() {
            return Err(self.bad(format!(
                "unexpected trailing value '{}'",
                self.tokens[self.pos..].join(" ")
            )));
        }
        Ok(())
    }
}

fn apply_key(
    cfg: &mut RunConfig,
    section: &str,
    key: &str,
    cur: &mut Cursor,
    isotopes_replaced: &mut bool,
    controller_touched: &mut bool,
) -> Result<(), ConfigError> {
    use Quantity as Q;

    if section == "controller" && !*controller_touched {
        cfg.controller = Some(ControllerParams {
            mode: ControllerMode::AutoShutter,
            target_ion_count: 1,
            shutter_latency: 0.05,
        });
        *controller_touched = true;
    }

    match (section, key) {
        ("run", "seed") => cfg.run.seed = cur.integer()?,
        ("run", "time_step") => cfg.run.time_step = cur.quantity(Q::Time)?,
        ("run", "duration") => cfg.run.duration = cur.quantity(Q::Time)?,
        ("run", "sampling") => {
            cfg.run.sampling = match cur.word()? {
                "poisson" => Sampling::Poisson,
                "mean_field" => Sampling::MeanField,
                other => {
                    return Err(cur.bad(format!(
                        "'{other}': sampling must be 'poisson' or 'mean_field'"
                    )))
                }
            }
        }

        ("species", "name") => cfg.species.name = cur.word()?.to_string(),
        ("species", "ionization_potential") => {
            cfg.species.ionization_potential = cur.quantity(Q::EnergyEv)?
        }
        ("species", "isotope") => {
            if !*isotopes_replaced {
                cfg.species.isotopes.clear();
                *isotopes_replaced = true;
            }
            let mass_number: u32 = cur.integer()?;
            let mass = cur.quantity(Q::Mass)?;
            let abundance = cur.number()?;
            let shift_272 = cur.quantity(Q::Frequency)?;
            cfg.species.isotopes.push(Isotope {
                mass_number,
                mass,
                abundance,
                shift_272,
            });
        }
        ("species", "level_ground") => cfg.species.levels.ground = cur.quantity(Q::EnergyEv)?,
        ("species", "level_resonant_272_upper") => {
            cfg.species.levels.resonant_272_upper = cur.quantity(Q::EnergyEv)?
        }
        ("species", "level_metastable_1d2") => {
            cfg.species.levels.metastable_1d2 = cur.quantity(Q::EnergyEv)?
        }
        ("species", "level_ion_s12") => cfg.species.levels.ion_s12 = cur.quantity(Q::EnergyEv)?,
        ("species", "level_ion_p12") => cfg.species.levels.ion_p12 = cur.quantity(Q::EnergyEv)?,
        ("species", "level_ion_d32") => cfg.species.levels.ion_d32 = cur.quantity(Q::EnergyEv)?,
        ("species", "vapor_pressure_a") => cfg.species.vapor_pressure_a = cur.number()?,
        ("species", "vapor_pressure_b") => {
            cfg.species.vapor_pressure_b = cur.quantity(Q::Temperature)?
        }
        ("species", "density") => {
            cfg.species.density = cur.quantity(Q::Labeled("kg/m3"))?
        }
        ("species", "specific_heat") => {
            cfg.species.specific_heat = cur.quantity(Q::Labeled("J/kg/K"))?
        }
        ("species", "thermal_conductivity") => {
            cfg.species.thermal_conductivity = cur.quantity(Q::Labeled("W/m/K"))?
        }
        ("species", "reflectivity_1064") => cfg.species.reflectivity_1064 = cur.number()?,
        ("species", "ion_cooling_linewidth") => {
            cfg.species.ion_cooling_linewidth = cur.quantity(Q::Frequency)?
        }

        ("ablation_laser", "wavelength") => {
            cfg.ablation_laser.wavelength = cur.quantity(Q::Length)?
        }
        ("ablation_laser", "max_pulse_energy") => {
            cfg.ablation_laser.max_pulse_energy = cur.quantity(Q::EnergyJoules)?
        }
        ("ablation_laser", "knee_rate") => {
            cfg.ablation_laser.knee_rate = cur.quantity(Q::Frequency)?
        }
        ("ablation_laser", "inverse_rate") => {
            cfg.ablation_laser.inverse_rate = cur.quantity(Q::Frequency)?
        }
        ("ablation_laser", "max_rep_rate") => {
            cfg.ablation_laser.max_rep_rate = cur.quantity(Q::Frequency)?
        }
        ("ablation_laser", "pulse_duration") => {
            cfg.ablation_laser.pulse_duration = cur.quantity(Q::Time)?
        }
        ("ablation_laser", "waist") => cfg.ablation_laser.waist = cur.quantity(Q::Length)?,
        ("ablation_laser", "incidence_angle") => {
            cfg.ablation_laser.incidence_angle = cur.quantity(Q::Angle)?
        }
        ("ablation_laser", "dither_area") => {
            cfg.ablation_laser.dither_area = cur.quantity(Q::Area)?
        }

        ("ablation", "rep_rate") => cfg.ablation.rep_rate = cur.quantity(Q::Frequency)?,
        ("ablation", "fluence") => {
            cfg.ablation.fluence = match cur.peek() {
                Some("auto") => {
                    cur.pos += 1;
                    None
                }
                _ => Some(cur.quantity(Q::Fluence)?),
            }
        }
        ("ablation", "ambient_temperature") => {
            cfg.ablation.ambient_temperature = cur.quantity(Q::Temperature)?
        }
        ("ablation", "threshold_fluence") => {
            cfg.ablation.threshold_fluence = cur.quantity(Q::Fluence)?
        }
        ("ablation", "yield_scale") => cfg.ablation.yield_scale = cur.number()?,
        ("ablation", "rydberg_fraction") => cfg.ablation.rydberg_fraction = cur.number()?,
        ("ablation", "depth_slope") => {
            cfg.ablation.depth_slope = cur.quantity(Q::Labeled("m/(J/m2)"))?
        }
        ("ablation", "epsilon_melt") => cfg.ablation.epsilon_melt = cur.quantity(Q::Length)?,
        ("ablation", "contaminant_coverage") => {
            cfg.ablation.contaminant_coverage = cur.number()?
        }
        ("ablation", "contaminant_burnoff_per_pulse") => {
            cfg.ablation.contaminant_burnoff_per_pulse = cur.number()?
        }

        ("beam", "target_trap_distance") => {
            cfg.beam.target_trap_distance = cur.quantity(Q::Length)?
        }
        ("beam", "aperture_width") => cfg.beam.aperture_width = cur.quantity(Q::Length)?,
        ("beam", "aperture_height") => cfg.beam.aperture_height = cur.quantity(Q::Length)?,
        ("beam", "pi_laser_angle") => cfg.beam.pi_laser_angle = cur.quantity(Q::Angle)?,
        ("beam", "emission_axis_tilt") => {
            cfg.beam.emission_axis_tilt = cur.quantity(Q::Angle)?
        }

        ("pi_laser" | "cooling_laser" | "repumper", _) => {
            let laser = match section {
                "pi_laser" => &mut cfg.pi_laser,
                "cooling_laser" => &mut cfg.cooling_laser,
                _ => &mut cfg.repumper,
            };
            match key {
                "wavelength" => laser.wavelength = cur.quantity(Q::Length)?,
                "power" => laser.power = cur.quantity(Q::Power)?,
                "waist_at_trap" => laser.waist_at_trap = cur.quantity(Q::Length)?,
                "detuning" => laser.detuning = cur.quantity(Q::Frequency)?,
                "linewidth" => laser.linewidth = cur.quantity(Q::Frequency)?,
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line: cur.line,
                        section: section.to_string(),
                        key: key.to_string(),
                    })
                }
            }
        }

        ("photoionization", "linewidth_272") => {
            cfg.photoionization.linewidth_272 = cur.quantity(Q::Frequency)?
        }
        ("photoionization", "cross_section_272") => {
            cfg.photoionization.cross_section_272 = cur.quantity(Q::Area)?
        }
        ("photoionization", "rydberg_p_max") => {
            cfg.photoionization.rydberg_p_max = cur.number()?
        }
        ("photoionization", "rydberg_saturation_power") => {
            cfg.photoionization.rydberg_saturation_power = cur.quantity(Q::Power)?
        }
        ("photoionization", "rydberg_binding") => {
            cfg.photoionization.rydberg_binding = cur.quantity(Q::EnergyEv)?
        }
        ("photoionization", "rydberg_linewidth") => {
            cfg.photoionization.rydberg_linewidth = cur.quantity(Q::Frequency)?
        }
        ("photoionization", "drift_amplitude") => {
            cfg.photoionization.drift_amplitude = cur.quantity(Q::Frequency)?
        }
        ("photoionization", "drift_period") => {
            cfg.photoionization.drift_period = cur.quantity(Q::Time)?
        }

        ("trap", "r0") => cfg.trap.r0 = cur.quantity(Q::Length)?,
        ("trap", "drive_frequency") => cfg.trap.drive_frequency = cur.quantity(Q::Frequency)?,
        ("trap", "rf_amplitude") => cfg.trap.rf_amplitude = cur.quantity(Q::Voltage)?,
        ("trap", "endcap_voltage") => cfg.trap.endcap_voltage = cur.quantity(Q::Voltage)?,
        ("trap", "geometric_efficiency") => cfg.trap.geometric_efficiency = cur.number()?,
        ("trap", "depth_kappa") => cfg.trap.depth_kappa = cur.number()?,

        ("vacuum", "base_pressure") => cfg.vacuum.base_pressure = cur.quantity(Q::Pressure)?,
        ("vacuum", "pump_speed") => {
            cfg.vacuum.pump_speed = cur.quantity(Q::Labeled("L/s"))?
        }
        ("vacuum", "chamber_volume") => {
            cfg.vacuum.chamber_volume = cur.quantity(Q::Labeled("L"))?
        }
        ("vacuum", "gas_load_per_watt") => cfg.vacuum.gas_load_per_watt = cur.number()?,
        ("vacuum", "contaminant_load_per_watt") => {
            cfg.vacuum.contaminant_load_per_watt = cur.number()?
        }

        ("detection", "efficiency") => cfg.detection.efficiency = cur.number()?,
        ("detection", "background_rate") => {
            cfg.detection.background_rate = cur.quantity(Q::Frequency)?
        }
        ("detection", "bin_width") => cfg.detection.bin_width = cur.quantity(Q::Time)?,
        ("detection", "step_window") => cfg.detection.step_window = cur.integer()?,
        ("detection", "step_threshold_sigma") => {
            cfg.detection.step_threshold_sigma = cur.number()?
        }
        ("detection", "step_min_separation") => {
            cfg.detection.step_min_separation = cur.quantity(Q::Time)?
        }
        ("detection", "tau_heat") => cfg.detection.tau_heat = cur.quantity(Q::Time)?,
        ("detection", "dark_rate_per_mbar") => {
            cfg.detection.dark_rate_per_mbar = cur.number()?
        }
        ("detection", "dark_dwell") => cfg.detection.dark_dwell = cur.quantity(Q::Time)?,
        ("detection", "hot_suppressed_fraction") => {
            cfg.detection.hot_suppressed_fraction = cur.number()?
        }

        ("gating", "intervals") => {
            while let Some(tok) = cur.peek() {
                cur.pos += 1;
                let (a, b) = tok.split_once(':').ok_or_else(|| {
                    cur.bad(format!("'{tok}': intervals are start:end in seconds"))
                })?;
                let start: f64 = a
                    .parse()
                    .map_err(|_| cur.bad(format!("'{a}' is not a number")))?;
                let end: f64 = b
                    .parse()
                    .map_err(|_| cur.bad(format!("'{b}' is not a number")))?;
                cfg.gating.push((start, end));
            }
        }

        ("controller", "mode") => {
            let ctrl = cfg.controller.as_mut().expect("materialized above");
            ctrl.mode = match cur.word()? {
                "continuous" => ControllerMode::Continuous,
                "gated" => ControllerMode::Gated,
                "auto_shutter" => ControllerMode::AutoShutter,
                other => {
                    return Err(cur.bad(format!(
                        "'{other}': mode must be continuous, gated or auto_shutter"
                    )))
                }
            }
        }
        ("controller", "target_ion_count") => {
            cfg.controller.as_mut().expect("materialized above").target_ion_count =
                cur.integer()?
        }
        ("controller", "shutter_latency") => {
            cfg.controller.as_mut().expect("materialized above").shutter_latency =
                cur.quantity(Q::Time)?
        }

        _ => {
            return Err(ConfigError::UnknownKey {
                line: cur.line,
                section: section.to_string(),
                key: key.to_string(),
            })
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_relative_eq!(cfg.ablation_laser.max_pulse_energy, 80e-6);
        assert_relative_eq!(cfg.ablation_laser.waist, 75e-6);
        assert_relative_eq!(cfg.trap.r0, 2.35e-3);
        assert_relative_eq!(cfg.vacuum.base_pressure, 4e-10);
        assert_relative_eq!(cfg.beam.pi_laser_angle, 12.0_f64.to_radians());
        assert_eq!(cfg.species.isotopes.len(), 6);
    }

    #[test]
    fn unit_suffixes_convert_to_internal_units() {
        let cfg = parse_config(
            "[ablation]\n\
             fluence = 240 mJ/cm2\n\
             rep_rate = 25 kHz\n\
             [ablation_laser]\n\
             waist = 75 um\n\
             incidence_angle = 30 deg\n\
             [vacuum]\n\
             base_pressure = 4e-10 mbar\n",
        )
        .unwrap();
        assert_relative_eq!(cfg.ablation.fluence.unwrap(), 2400.0);
        assert_relative_eq!(cfg.ablation.rep_rate, 25e3);
        assert_relative_eq!(cfg.ablation_laser.waist, 75e-6);
        assert_relative_eq!(
            cfg.ablation_laser.incidence_angle,
            std::f64::consts::PI / 6.0
        );
        assert_relative_eq!(cfg.vacuum.base_pressure, 4e-10);
    }

    #[test]
    fn bare_fluence_reads_as_mj_per_cm2() {
        let cfg = parse_config("[ablation]\nfluence = 240\n").unwrap();
        assert_relative_eq!(cfg.ablation.fluence.unwrap(), 2400.0);
    }

    #[test]
    fn fluence_auto_defers_to_the_rate_curve() {
        let cfg = parse_config("[ablation]\nfluence = auto\n").unwrap();
        assert_eq!(cfg.ablation.fluence, None);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config("[trap]\nbananas = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bananas"), "{msg}");
        assert!(msg.contains("trap"), "{msg}");
    }

    #[test]
    fn unknown_unit_is_named() {
        let err = parse_config("[ablation_laser]\nwaist = 75 parsec\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("parsec"), "{msg}");
    }

    #[test]
    fn violated_constraint_names_key_and_bound() {
        let err = parse_config("[trap]\nr0 = -1 mm\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("r0"), "{msg}");
        assert!(msg.contains("> 0"), "{msg}");
    }

    #[test]
    fn isotope_lines_replace_the_default_table() {
        let cfg = parse_config(
            "[species]\n\
             isotope = 40 39.962590863 u 0.7 0 Hz\n\
             isotope = 44 43.95548156 u 0.3 2.46 GHz\n",
        )
        .unwrap();
        assert_eq!(cfg.species.isotopes.len(), 2);
        assert_relative_eq!(cfg.species.isotopes[1].shift_272, 2.46e9);
        assert_relative_eq!(
            cfg.species.isotopes[0].mass,
            39.962590863 * crate::constants::ATOMIC_MASS
        );
    }

    #[test]
    fn gating_intervals_parse_in_order() {
        let cfg = parse_config("[gating]\nintervals = 0:9 18:27 36:45\n").unwrap();
        assert_eq!(cfg.gating, vec![(0.0, 9.0), (18.0, 27.0), (36.0, 45.0)]);
    }

    #[test]
    fn overlapping_gates_are_rejected() {
        let err = parse_config("[gating]\nintervals = 0:10 5:15\n").unwrap_err();
        assert!(err.to_string().contains("non-overlapping"));
    }

    #[test]
    fn controller_section_materializes_auto_shutter_defaults() {
        let cfg = parse_config("[controller]\ntarget_ion_count = 2\n").unwrap();
        let ctrl = cfg.controller.unwrap();
        assert_eq!(ctrl.mode, ControllerMode::AutoShutter);
        assert_eq!(ctrl.target_ion_count, 2);
        assert_relative_eq!(ctrl.shutter_latency, 0.05);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored()  {
        let cfg = parse_config(
            "# machine A\n\
             \n\
             [run]\n\
             seed = 7   # lucky\n",
        )
        .unwrap();
        assert_eq!(cfg.run.seed, 7);
    }

    #[test]
    fn trailing_garbage_is_rejected() {
        let err = parse_config("[run]\nduration = 20 s extra\n").unwrap_err();
        assert!(err.to_string().contains("extra"));
    }
}
