//! Burst-averaged photoionization probabilities and the matching
//! conditional samplers.
//!
//! The engine never evaluates the transit probability per emitted atom.
//! At setup it integrates p(v, b) over the flux-weighted velocity
//! distribution and the aperture cross section once per isotope, which
//! turns the per-pulse work into two binomial draws. Kinematics are then
//! sampled only for the handful of atoms that actually ionize, from the
//! same conditional distribution the average was computed under.

use ablatron_core::beam::thermal_speed;
use ablatron_core::config::{IonLaserSpec, PhotoionizationSettings, RunConfig};
use ablatron_core::error::PhysicsError;
use ablatron_core::photoionization::{two_photon_ionization_prob, BeamAtom, IonizationChannel};
use rand::Rng;
use std::f64::consts::TAU;

/// Slow sinusoidal drift of the 272 nm detuning, Hz at time `t`.
pub fn drifted_detuning(photo: &PhotoionizationSettings, laser: &IonLaserSpec, t: f64) -> f64 {
    if photo.drift_amplitude > 0.0 && photo.drift_period > 0.0 {
        laser.detuning + photo.drift_amplitude * (TAU * t / photo.drift_period).sin()
    } else {
        laser.detuning
    }
}

/// Velocities below this never carry meaningful flux; they are excluded
/// from the quadrature and the sampler to keep 1/v finite.
const V_FLOOR: f64 = 1.0;
/// Upper velocity cutoff in units of the thermal speed. The flux-weighted
/// density there is down by e^-25.
const V_CEIL_THERMAL: f64 = 5.0;
const COARSE_NODES: usize = 257;
const FINE_NODES: usize = 301;
/// Half-width of the finely resolved velocity window around the Doppler
/// resonance, in units of the velocity-space linewidth.
const FINE_HALF_WIDTHS: f64 = 8.0;
/// Number of detuning grid points spanning a drift cycle's range.
const DRIFT_GRID: usize = 65;

/// Flux-weighted effusive speed density at temperature behind `v_th`,
/// normalized over v in [0, inf): f(v) = 2 v^3 exp(-(v/v_th)^2) / v_th^4.
fn flux_density(v: f64, v_th: f64) -> f64 {
    let z = v / v_th;
    2.0 * z * z * z * (-z * z).exp() / v_th
}

struct VelocityDist {
    /// Burst-averaged ionization probability for this isotope.
    pbar: f64,
    nodes: Vec<f64>,
    /// Normalized cumulative distribution of f(v) Eb[p](v) on `nodes`.
    cdf: Vec<f64>,
}

struct DetuningEntry {
    delta0: f64,
    laser: IonLaserSpec,
    /// Abundance-weighted mean probability over all isotopes.
    pbar_total: f64,
    /// Cumulative abundance * pbar weights for channel-conditional
    /// isotope choice, normalized.
    iso_cum: Vec<f64>,
    dists: Vec<VelocityDist>,
}

/// Sampled kinematics of one photo-ionized atom.
pub struct IonizedAtom {
    pub isotope: u32,
    pub mass: f64,
    pub velocity: f64,
    pub transverse_offset: f64,
}

pub struct TwoPhotonTable {
    channel: IonizationChannel,
    entries: Vec<DetuningEntry>,
    iso_numbers: Vec<u32>,
    iso_masses: Vec<f64>,
}

impl TwoPhotonTable {
    /// Integrates the transit probability over the burst's velocity
    /// distribution at `surface_temperature` and over the aperture cross
    /// section, for every isotope and (under drift) a grid of detunings.
    pub fn build(cfg: &RunConfig, surface_temperature: f64) -> Result<Self, PhysicsError> {
        let channel = IonizationChannel::two_photon_272(&cfg.photoionization, &cfg.pi_laser);
        let iso_numbers: Vec<u32> = cfg.species.isotopes.iter().map(|i| i.mass_number).collect();
        let iso_masses: Vec<f64> = cfg.species.isotopes.iter().map(|i| i.mass).collect();

        let drift = cfg.photoionization.drift_amplitude > 0.0
            && cfg.photoionization.drift_period > 0.0
            && cfg.pi_laser.power > 0.0;
        let delta0_grid: Vec<f64> = if drift {
            let a = cfg.photoionization.drift_amplitude;
            (0..DRIFT_GRID)
                .map(|i| {
                    cfg.pi_laser.detuning - a
                        + 2.0 * a * i as f64 / (DRIFT_GRID - 1) as f64
                })
                .collect()
        } else {
            vec![cfg.pi_laser.detuning]
        };

        let mut entries = Vec::with_capacity(delta0_grid.len());
        for &delta0 in &delta0_grid {
            let mut laser = cfg.pi_laser.clone();
            laser.detuning = delta0;
            let mut dists = Vec::with_capacity(iso_numbers.len());
            for iso in &cfg.species.isotopes {
                dists.push(build_dist(
                    cfg,
                    &laser,
                    &channel,
                    iso.mass_number,
                    iso.mass,
                    iso.shift_272,
                    surface_temperature,
                )?);
            }
            let weights: Vec<f64> = cfg
                .species
                .isotopes
                .iter()
                .zip(&dists)
                .map(|(iso, d)| iso.abundance * d.pbar)
                .collect();
            let pbar_total: f64 = weights.iter().sum();
            let mut iso_cum = Vec::with_capacity(weights.len());
            let mut acc = 0.0;
            for w in &weights {
                acc += w;
                iso_cum.push(if pbar_total > 0.0 { acc / pbar_total } else { 0.0 });
            }
            entries.push(DetuningEntry {
                delta0,
                laser,
                pbar_total,
                iso_cum,
                dists,
            });
        }

        Ok(TwoPhotonTable {
            channel,
            entries,
            iso_numbers,
            iso_masses,
        })
    }

    /// Burst-averaged two-photon ionization probability at the given
    /// instantaneous detuning, interpolated on the drift grid.
    pub fn pbar_total(&self, delta0: f64) -> f64 {
        match self.entries.len() {
            1 => self.entries[0].pbar_total,
            _ => {
                let grid = &self.entries;
                if delta0 <= grid[0].delta0 {
                    return grid[0].pbar_total;
                }
                if delta0 >= grid[grid.len() - 1].delta0 {
                    return grid[grid.len() - 1].pbar_total;
                }
                let hi = grid.partition_point(|e| e.delta0 < delta0).max(1);
                let (a, b) = (&grid[hi - 1], &grid[hi]);
                let f = (delta0 - a.delta0) / (b.delta0 - a.delta0);
                a.pbar_total + f * (b.pbar_total - a.pbar_total)
            }
        }
    }

    /// Draws (isotope, velocity, offset) for one atom conditioned on it
    /// having two-photon ionized, at the nearest grid detuning.
    pub fn sample_atom(
        &self,
        delta0: f64,
        cfg: &RunConfig,
        rng: &mut impl Rng,
    ) -> IonizedAtom {
        let entry = self.nearest_entry(delta0);
        let u: f64 = rng.gen();
        let idx = entry.iso_cum.partition_point(|&c| c < u).min(entry.iso_cum.len() - 1);
        let velocity = sample_from_cdf(&entry.dists[idx], rng);
        let isotope = self.iso_numbers[idx];
        let transverse_offset =
            self.sample_offset(entry, isotope, velocity, cfg, rng);
        IonizedAtom {
            isotope,
            mass: self.iso_masses[idx],
            velocity,
            transverse_offset,
        }
    }

    fn nearest_entry(&self, delta0: f64) -> &DetuningEntry {
        self.entries
            .iter()
            .min_by(|a, b| {
                (a.delta0 - delta0)
                    .abs()
                    .total_cmp(&(b.delta0 - delta0).abs())
            })
            .expect("table has at least one entry")
    }

    /// Transverse offset conditioned on ionizing at velocity `v`:
    /// rejection against the on-axis probability, which bounds p over the
    /// whole chord for any saturation regime.
    fn sample_offset(
        &self,
        entry: &DetuningEntry,
        isotope: u32,
        v: f64,
        cfg: &RunConfig,
        rng: &mut impl Rng,
    ) -> f64 {
        let half = cfg.beam.aperture_height / 2.0;
        let p_axis = self.prob(entry, isotope, v, 0.0, cfg);
        if p_axis <= 0.0 {
            return 0.0;
        }
        for _ in 0..1_000_000 {
            let b = rng.gen_range(-half..half);
            let p = self.prob(entry, isotope, v, b, cfg);
            if rng.gen::<f64>() * p_axis <= p {
                return b;
            }
        }
        0.0
    }

    fn prob(&self, entry: &DetuningEntry, isotope: u32, v: f64, b: f64, cfg: &RunConfig) -> f64 {
        two_photon_ionization_prob(
            &BeamAtom {
                velocity: v,
                isotope,
                transverse_offset: b,
            },
            &cfg.species,
            &entry.laser,
            &self.channel,
            &cfg.beam,
        )
        .expect("isotopes come from the configured table")
    }
}

/// Inverse-CDF draw with linear interpolation inside grid cells.
fn sample_from_cdf(dist: &VelocityDist, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.gen();
    let cdf = &dist.cdf;
    let i = cdf.partition_point(|&c| c < u);
    if i == 0 {
        return dist.nodes[0];
    }
    if i >= cdf.len() {
        return *dist.nodes.last().unwrap();
    }
    let (c0, c1) = (cdf[i - 1], cdf[i]);
    let (v0, v1) = (dist.nodes[i - 1], dist.nodes[i]);
    if c1 > c0 {
        v0 + (u - c0) / (c1 - c0) * (v1 - v0)
    } else {
        v0
    }
}

/// Mean over the aperture cross section of p(v, b): Simpson on [0, h/2]
/// doubled, with node spacing no coarser than an eighth of the waist.
fn aperture_mean_prob(
    cfg: &RunConfig,
    laser: &IonLaserSpec,
    channel: &IonizationChannel,
    isotope: u32,
    v: f64,
) -> Result<f64, PhysicsError> {
    let half = cfg.beam.aperture_height / 2.0;
    let target = (laser.waist_at_trap / 8.0).min(half / 8.0);
    let mut n = (half / target).ceil() as usize;
    n = n.clamp(8, 512);
    if n % 2 == 1 {
        n += 1;
    }
    let h = half / n as f64;
    let mut sum = 0.0;
    for k in 0..=n {
        let b = k as f64 * h;
        let p = two_photon_ionization_prob(
            &BeamAtom {
                velocity: v,
                isotope,
                transverse_offset: b,
            },
            &cfg.species,
            laser,
            channel,
            &cfg.beam,
        )?;
        let w = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        sum += w * p;
    }
    Ok((sum * h / 3.0) / half)
}

fn build_dist(
    cfg: &RunConfig,
    laser: &IonLaserSpec,
    channel: &IonizationChannel,
    iso_number: u32,
    iso_mass: f64,
    iso_shift: f64,
    temperature: f64,
) -> Result<VelocityDist, PhysicsError> {
    let v_th = thermal_speed(iso_mass, temperature);
    let v_max = V_CEIL_THERMAL * v_th;

    let mut nodes: Vec<f64> = (0..COARSE_NODES)
        .map(|i| V_FLOOR + (v_max - V_FLOOR) * i as f64 / (COARSE_NODES - 1) as f64)
        .collect();

    // Doppler resonance window in velocity space. Perpendicular geometry
    // has no velocity selectivity and needs no refinement.
    let sin_dev = cfg.beam.pi_laser_angle.sin();
    if sin_dev.abs() > 1e-12 {
        let v_res = -(laser.detuning + iso_shift) * laser.wavelength / sin_dev;
        let gamma_v = channel.resonant_linewidth * laser.wavelength / sin_dev.abs();
        let lo = (v_res - FINE_HALF_WIDTHS * gamma_v).max(V_FLOOR);
        let hi = (v_res + FINE_HALF_WIDTHS * gamma_v).min(v_max);
        if hi > lo {
            nodes.extend(
                (0..FINE_NODES).map(|i| lo + (hi - lo) * i as f64 / (FINE_NODES - 1) as f64),
            );
        }
    }
    nodes.sort_by(f64::total_cmp);
    nodes.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

    // Integrand on the merged grid, then trapezoid for mean and CDF.
    let mut g = Vec::with_capacity(nodes.len());
    for &v in &nodes {
        let eb = aperture_mean_prob(cfg, laser, channel, iso_number, v)?;
        g.push(flux_density(v, v_th) * eb);
    }
    let mut cdf = vec![0.0; nodes.len()];
    for i in 1..nodes.len() {
        cdf[i] = cdf[i - 1] + 0.5 * (g[i] + g[i - 1]) * (nodes[i] - nodes[i - 1]);
    }
    let pbar = *cdf.last().unwrap();
    if pbar > 0.0 {
        for c in cdf.iter_mut() {
            *c /= pbar;
        }
    }
    Ok(VelocityDist { pbar, nodes, cdf })
}
