//! Trap stability, capture of freshly created ions, and the bookkeeping of
//! the trapped ensemble (bright/dark states, loading-induced heating).
//!
//! The trap is reduced to its lowest-order pseudopotential: a Mathieu q
//! parameter for stability, a quadratic radial well of depth
//! kappa q V_rf geometric_efficiency / 8 for capture, and a constant
//! zero-temperature charge density for converting crystal volume to ion
//! number.

use crate::config::{DetectionSettings, TrapParams};
use crate::constants::{ELEMENTARY_CHARGE, VACUUM_PERMITTIVITY};
use crate::error::PhysicsError;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use std::f64::consts::TAU;

/// Upper edge of the lowest stability region with no DC contribution.
pub const Q_STABILITY_LIMIT: f64 = 0.908;

/// Mathieu q = 2 e geometric_efficiency V_rf / (m Omega^2 r0^2).
pub fn mathieu_q(trap: &TrapParams, mass: f64) -> f64 {
    let omega = TAU * trap.drive_frequency;
    2.0 * ELEMENTARY_CHARGE * trap.geometric_efficiency * trap.rf_amplitude
        / (mass * omega * omega * trap.r0 * trap.r0)
}

/// Lowest-region stability predicate, 0 < q < 0.908. Zero drive is
/// unstable by convention.
pub fn is_stable(q: f64) -> bool {
    q > 0.0 && q < Q_STABILITY_LIMIT
}

/// Pseudopotential well depth at the trap edge, eV.
pub fn trap_depth_ev(trap: &TrapParams, mass: f64) -> f64 {
    trap.depth_kappa * mathieu_q(trap, mass) * trap.rf_amplitude * trap.geometric_efficiency / 8.0
}

/// Zero-temperature charged-liquid density of a crystal in this trap,
/// ions/m^3. Independent of ion number.
pub fn crystal_density(trap: &TrapParams, mass: f64) -> Result<f64, PhysicsError> {
    let q = mathieu_q(trap, mass);
    if !is_stable(q) {
        return Err(PhysicsError::UnstableTrap { q });
    }
    let omega = TAU * trap.drive_frequency;
    let v_eff = trap.geometric_efficiency * trap.rf_amplitude;
    Ok(VACUUM_PERMITTIVITY * v_eff * v_eff
        / (mass * omega * omega * trap.r0.powi(4)))
}

/// Ion count inferred from a measured crystal volume.
pub fn count_from_volume(volume: f64, trap: &TrapParams, mass: f64) -> Result<u64, PhysicsError> {
    Ok((crystal_density(trap, mass)? * volume).round() as u64)
}

/// Crystal volume occupied by a given ion count.
pub fn volume_from_count(count: u64, trap: &TrapParams, mass: f64) -> Result<f64, PhysicsError> {
    Ok(count as f64 / crystal_density(trap, mass)?)
}

/// Birth condition of a photo-ion at the trap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonBirth {
    /// Radial distance from the trap center, m.
    pub radial_offset: f64,
    /// Kinetic energy inherited from the parent atom, eV.
    pub kinetic_energy_ev: f64,
}

/// Whether a freshly created ion stays in the trap: it must be born inside
/// the field radius and carry less energy than the local well depth
/// D (1 - (rho/r0)^2).
pub fn attempt_capture(
    birth: &IonBirth,
    trap: &TrapParams,
    mass: f64,
) -> Result<bool, PhysicsError> {
    let q = mathieu_q(trap, mass);
    if !is_stable(q) {
        return Err(PhysicsError::UnstableTrap { q });
    }
    let rho = birth.radial_offset.abs();
    if rho >= trap.r0 {
        return Ok(false);
    }
    let scale = 1.0 - (rho / trap.r0) * (rho / trap.r0);
    Ok(birth.kinetic_energy_ev < trap_depth_ev(trap, mass) * scale)
}

/// One trapped ion and its diagnostic state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ion {
    /// Isotope mass number.
    pub isotope: u32,
    /// Participating in the cooling cycle (not shelved by a collision).
    pub bright: bool,
    /// Fluorescence suppressed until this time after a loading event, s.
    pub hot_until: f64,
    /// A dark ion rejoins the cooling cycle at this time, s.
    pub dark_until: f64,
}

/// The trapped ensemble plus its volume bookkeeping at constant density.
#[derive(Debug, Clone, PartialEq)]
pub struct IonCrystal {
    pub ions: Vec<Ion>,
    /// Crystal volume, m^3. Zero for an empty trap.
    pub volume: f64,
    /// Charged-liquid density, ions/m^3.
    pub density: f64,
}

impl IonCrystal {
    pub fn new(trap: &TrapParams, mass: f64) -> Result<Self, PhysicsError> {
        Ok(IonCrystal {
            ions: Vec::new(),
            volume: 0.0,
            density: crystal_density(trap, mass)?,
        })
    }

    pub fn count(&self) -> usize {
        self.ions.len()
    }

    fn refresh_volume(&mut self) {
        self.volume = self.ions.len() as f64 / self.density;
    }

    /// Ions currently contributing full fluorescence.
    pub fn bright_cold_count(&self, now: f64) -> usize {
        self.ions
            .iter()
            .filter(|ion| ion.bright && now >= ion.hot_until)
            .count()
    }

    /// Ions currently in the heating transient that follows a loading event.
    pub fn hot_count(&self, now: f64) -> usize {
        self.ions.iter().filter(|ion| now < ion.hot_until).count()
    }

    /// Advances the ensemble over one step ending at `now`: dark ions whose
    /// dwell has elapsed rejoin the cooling cycle, bright ions go dark via
    /// pressure-proportional collisions, and an arriving ion marks the
    /// whole crystal hot for the heating dwell.
    pub fn apply_collision_and_heating_events(
        &mut self,
        settings: &DetectionSettings,
        background_pressure: f64,
        now: f64,
        dt: f64,
        new_ion: Option<u32>,
        rng: &mut impl Rng,
    ) {
        for ion in &mut self.ions {
            if !ion.bright && now >= ion.dark_until {
                ion.bright = true;
            }
        }

        // First-order collision probability per bright ion over this step.
        let p_dark = (settings.dark_rate_per_mbar * background_pressure * dt).clamp(0.0, 1.0);
        if p_dark > 0.0 {
            let n_bright = self.ions.iter().filter(|ion| ion.bright).count();
            if n_bright > 0 {
                let n_dark = Binomial::new(n_bright as u64, p_dark)
                    .expect("probability in [0,1]")
                    .sample(rng) as usize;
                // Index collection deferred to the rare step that draws a hit.
                if n_dark > 0 {
                    let mut pool: Vec<usize> = self
                        .ions
                        .iter()
                        .enumerate()
                        .filter(|(_, ion)| ion.bright)
                        .map(|(i, _)| i)
                        .collect();
                    for k in 0..n_dark {
                        let pick = rng.gen_range(k..pool.len());
                        pool.swap(k, pick);
                        let ion = &mut self.ions[pool[k]];
                        ion.bright = false;
                        ion.dark_until = now + settings.dark_dwell;
                    }
                }
            }
        }

        if let Some(isotope) = new_ion {
            self.ions.push(Ion {
                isotope,
                bright: true,
                hot_until: 0.0,
                dark_until: 0.0,
            });
            for ion in &mut self.ions {
                ion.hot_until = now + settings.tau_heat;
            }
            self.refresh_volume();
        }
    }
}
