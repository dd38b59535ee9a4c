//! Beam transport: geometric skimming of the ablated plume and effusive
//! kinematics of the atoms that reach the trap.
//!
//! The skimmer stack collapses to one far-field rectangular aperture; a
//! Lambertian emitter then gives a purely geometric acceptance. Velocities
//! of accepted atoms follow the flux-weighted effusive distribution
//! f(v) proportional to v^3 exp(-m v^2 / 2 kB T).

use crate::ablation::AtomBurst;
use crate::config::BeamGeometry;
use crate::constants::BOLTZMANN;
use crate::error::PhysicsError;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use std::f64::consts::PI;

/// Fraction of a Lambertian burst that passes the acceptance aperture:
/// f = w h cos(tilt) / (pi d^2).
pub fn acceptance_fraction(geometry: &BeamGeometry) -> f64 {
    geometry.aperture_width * geometry.aperture_height * geometry.emission_axis_tilt.cos()
        / (PI * geometry.target_trap_distance * geometry.target_trap_distance)
}

/// Most probable speed of the underlying Maxwell-Boltzmann density,
/// sqrt(2 kB T / m); the flux-weighted sampler below is scaled by it.
pub fn thermal_speed(mass: f64, temperature: f64) -> f64 {
    (2.0 * BOLTZMANN * temperature / mass).sqrt()
}

/// Draws a speed from the flux-weighted effusive distribution. With
/// z = (v / v_th)^2 distributed as Gamma(2, 1), v = v_th sqrt(z) has
/// density proportional to v^3 exp(-(v/v_th)^2).
pub fn sample_velocity(temperature: f64, mass: f64, rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen();
    let u2: f64 = rng.gen();
    let z = -(1.0 - u1).ln() - (1.0 - u2).ln();
    thermal_speed(mass, temperature) * z.sqrt()
}

/// One accepted atom at the trap: arrival time and longitudinal speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalRecord {
    /// Time of arrival at the trap center, s.
    pub time: f64,
    /// Longitudinal speed, m/s.
    pub velocity: f64,
}

/// Arrival records for the accepted part of one burst.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArrivalProfile {
    pub records: Vec<ArrivalRecord>,
    /// Atoms that missed the aperture.
    pub rejected: u64,
}

impl ArrivalProfile {
    /// Arrival flux histogram (t, atoms/s) with the given bin width,
    /// starting at the earliest arrival.
    pub fn binned(&self, bin_width: f64) -> Vec<(f64, f64)> {
        if self.records.is_empty() {
            return Vec::new();
        }
        let t0 = self.records.iter().map(|r| r.time).fold(f64::INFINITY, f64::min);
        let t1 = self.records.iter().map(|r| r.time).fold(0.0, f64::max);
        let n_bins = ((t1 - t0) / bin_width).floor() as usize + 1;
        let mut bins = vec![0.0; n_bins];
        for r in &self.records {
            let idx = (((r.time - t0) / bin_width) as usize).min(n_bins - 1);
            bins[idx] += 1.0 / bin_width;
        }
        bins.into_iter()
            .enumerate()
            .map(|(i, flux)| (t0 + (i as f64 + 0.5) * bin_width, flux))
            .collect()
    }
}

/// Transports one burst to the trap: binomial aperture acceptance, then an
/// effusive speed and time-of-flight per accepted atom. Atom bookkeeping
/// is exact: records.len() + rejected = burst.n_atoms.
pub fn arrival_profile(
    burst: &AtomBurst,
    geometry: &BeamGeometry,
    mass: f64,
    rng: &mut impl Rng,
) -> Result<ArrivalProfile, PhysicsError> {
    let f = acceptance_fraction(geometry);
    let accepted = if burst.n_atoms == 0 {
        0
    } else {
        Binomial::new(burst.n_atoms, f.clamp(0.0, 1.0))
            .expect("acceptance in [0,1]")
            .sample(rng)
    };
    let mut records = Vec::with_capacity(accepted as usize);
    for _ in 0..accepted {
        let v = sample_velocity(burst.surface_temperature, mass, rng);
        records.push(ArrivalRecord {
            time: burst.emission_time + geometry.target_trap_distance / v,
            velocity: v,
        });
    }
    Ok(ArrivalProfile {
        records,
        rejected: burst.n_atoms - accepted,
    })
}
