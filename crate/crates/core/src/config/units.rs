//! Unit suffix handling for config values.
//!
//! Internally everything is SI except pressure (mbar) and atomic level
//! energies (eV); each key declares its quantity kind and a bare number is
//! read in that key's canonical unit. Fluence is the one quantity whose
//! bare unit is non-SI (mJ/cm2), matching how operating points are quoted.

/// Quantity kind expected by a config key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// Canonical m. Accepts m, cm, mm, um, nm.
    Length,
    /// Canonical m2. Accepts m2, cm2, mm2, um2.
    Area,
    /// Canonical s. Accepts s, ms, us, ns, min.
    Time,
    /// Canonical Hz. Accepts Hz, kHz, MHz, GHz, THz.
    Frequency,
    /// Canonical J. Accepts J, mJ, uJ, nJ.
    EnergyJoules,
    /// Canonical eV. Accepts eV, meV.
    EnergyEv,
    /// Canonical W. Accepts W, mW, uW, nW.
    Power,
    /// Canonical rad. Accepts rad, mrad, deg.
    Angle,
    /// Canonical mJ/cm2 on input, stored as J/m2. Accepts mJ/cm2, J/cm2,
    /// J/m2.
    Fluence,
    /// Canonical mbar, stored as mbar. Accepts mbar, Pa, bar.
    Pressure,
    /// Canonical K.
    Temperature,
    /// Canonical V. Accepts V, kV.
    Voltage,
    /// Canonical kg. Accepts kg, u, amu.
    Mass,
    /// Bare number; no unit suffix permitted.
    Dimensionless,
    /// Bare number, or exactly the given label (conversion factor 1).
    Labeled(&'static str),
}

impl Quantity {
    /// Multiplier that takes a value in `unit` to this quantity's internal
    /// unit, or an error message naming the accepted suffixes.
    pub fn factor(self, unit: Option<&str>) -> Result<f64, String> {
        use Quantity::*;
        let unit = match unit {
            None => return Ok(self.bare_factor()),
            Some(u) => u,
        };
        let table: &[(&str, f64)] = match self {
            Length => &[
                ("m", 1.0),
                ("cm", 1e-2),
                ("mm", 1e-3),
                ("um", 1e-6),
                ("nm", 1e-9),
            ],
            Area => &[("m2", 1.0), ("cm2", 1e-4), ("mm2", 1e-6), ("um2", 1e-12)],
            Time => &[
                ("s", 1.0),
                ("ms", 1e-3),
                ("us", 1e-6),
                ("ns", 1e-9),
                ("min", 60.0),
            ],
            Frequency => &[
                ("Hz", 1.0),
                ("kHz", 1e3),
                ("MHz", 1e6),
                ("GHz", 1e9),
                ("THz", 1e12),
            ],
            EnergyJoules => &[("J", 1.0), ("mJ", 1e-3), ("uJ", 1e-6), ("nJ", 1e-9)],
            EnergyEv => &[("eV", 1.0), ("meV", 1e-3)],
            Power => &[("W", 1.0), ("mW", 1e-3), ("uW", 1e-6), ("nW", 1e-9)],
            Angle => &[
                ("rad", 1.0),
                ("mrad", 1e-3),
                ("deg", std::f64::consts::PI / 180.0),
            ],
            // Internal unit is J/m2; the quoted unit is usually mJ/cm2.
            Fluence => &[("mJ/cm2", 10.0), ("J/cm2", 1e4), ("J/m2", 1.0)],
            Pressure => &[("mbar", 1.0), ("Pa", 1e-2), ("bar", 1e3)],
            Temperature => &[("K", 1.0)],
            Voltage => &[("V", 1.0), ("kV", 1e3)],
            Mass => &[
                ("kg", 1.0),
                ("u", crate::constants::ATOMIC_MASS),
                ("amu", crate::constants::ATOMIC_MASS),
            ],
            Dimensionless => {
                return Err(format!("'{unit}': this key takes a bare number"));
            }
            Labeled(label) => {
                if unit == label {
                    return Ok(1.0);
                }
                return Err(format!("unknown unit '{unit}' (expected {label})"));
            }
        };
        table
            .iter()
            .find(|(name, _)| *name == unit)
            .map(|(_, f)| *f)
            .ok_or_else(|| {
                let accepted: Vec<&str> = table.iter().map(|(name, _)| *name).collect();
                format!("unknown unit '{unit}' (accepted: {})", accepted.join(", "))
            })
    }

    fn bare_factor(self) -> f64 {
        match self {
            // Bare fluences are read in the conventional mJ/cm2.
            Quantity::Fluence => 10.0,
            _ => 1.0,
        }
    }

    /// True if `token` is a unit suffix this quantity accepts.
    pub fn accepts(self, token: &str) -> bool {
        self.factor(Some(token)).is_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fluence_units() {
        assert_relative_eq!(Quantity::Fluence.factor(Some("mJ/cm2")).unwrap(), 10.0);
        assert_relative_eq!(Quantity::Fluence.factor(None).unwrap(), 10.0);
        assert_relative_eq!(Quantity::Fluence.factor(Some("J/m2")).unwrap(), 1.0);
    }

    #[test]
    fn angle_and_mass_units() {
        assert_relative_eq!(
            Quantity::Angle.factor(Some("deg")).unwrap() * 30.0,
            std::f64::consts::PI / 6.0
        );
        assert_relative_eq!(
            Quantity::Mass.factor(Some("u")).unwrap(),
            1.66053906660e-27
        );
    }

    #[test]
    fn unknown_unit_is_named_in_the_error() {
        let err = Quantity::Length.factor(Some("furlong")).unwrap_err();
        assert!(err.contains("furlong"));
        assert!(err.contains("accepted"));
    }

    #[test]
    fn dimensionless_rejects_any_suffix() {
        assert!(Quantity::Dimensionless.factor(Some("m")).is_err());
        assert_relative_eq!(Quantity::Dimensionless.factor(None).unwrap(), 1.0);
    }
}
