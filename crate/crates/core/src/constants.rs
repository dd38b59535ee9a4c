//! Physical constants (SI, 2018 CODATA exact values where defined).

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Planck constant, J s.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_8128e-12;

/// Unified atomic mass unit, kg.
pub const ATOMIC_MASS: f64 = 1.660_539_066_60e-27;

/// Pascals per millibar. Pressures are carried in mbar throughout; this
/// converts where a formula needs SI.
pub const PASCAL_PER_MBAR: f64 = 100.0;

/// Photon energy h*c/lambda in joules.
pub fn photon_energy_joules(wavelength: f64) -> f64 {
    PLANCK * SPEED_OF_LIGHT / wavelength
}

/// Photon energy h*c/lambda in electron volts.
pub fn photon_energy_ev(wavelength: f64) -> f64 {
    photon_energy_joules(wavelength) / ELEMENTARY_CHARGE
}
