//! Pulse-synchronous scenario engine.
//!
//! Each ablation pulse is processed in full at its firing time: burst
//! emission, geometric acceptance, photoionization, and capture reduce to
//! one Poisson and two binomial draws per pulse, with kinematics sampled
//! only for the atoms that ionize. Time of flight from target to trap
//! appears as a timestamp offset on loading events; crystal state and the
//! fluorescence timeline advance at pulse and diagnostic-step times, which
//! is indistinguishable at the histogram bin width since the flight time
//! is two hundred microseconds against fifty-millisecond bins.

use crate::error::Error;
use crate::tables::{drifted_detuning, TwoPhotonTable};
use ablatron_core::ablation::{emit_burst, surface_temperature, PulseSpec, TargetState};
use ablatron_core::beam::{acceptance_fraction, sample_velocity};
use ablatron_core::config::{ControllerMode, RunConfig, SpeciesData};
use ablatron_core::constants::ELEMENTARY_CHARGE;
use ablatron_core::diagnostics::{
    detect_steps, fluorescence_rate, pressure_step, FluorescenceTrace, RateTimeline, ScatterModel,
    StepDetectorParams,
};
use ablatron_core::photoionization::{rydberg_loading_rate, ChannelKind, RydbergLevelModel};
use ablatron_core::rng::{derive_stream, Stream};
use ablatron_core::trap::{attempt_capture, IonBirth, IonCrystal};
use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};

/// Arrival timestamps saturate at this flight time so the slowest tail of
/// the distribution cannot push an event arbitrarily far past its pulse.
pub const TOF_HORIZON: f64 = 0.05;

/// A named run: the unit the CLI simulates and sweeps.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub config: RunConfig,
}

impl Scenario {
    pub fn new(name: impl Into<String>, config: RunConfig) -> Self {
        Scenario {
            name: name.into(),
            config,
        }
    }

    /// Loads a config file; the scenario takes the file stem as its name.
    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self, Error> {
        let path = path.as_ref();
        let config = RunConfig::from_file(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into());
        Ok(Scenario { name, config })
    }
}

/// Exact integer bookkeeping of every atom the source emitted.
///
/// Two identities hold on every run, whatever the seed or gating:
/// emitted = rejected + transited_unionized + created, and
/// created = captured + lost_at_birth.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Ledger {
    pub pulses_fired: u64,
    pub atoms_emitted: u128,
    pub atoms_rejected: u128,
    pub atoms_transited_unionized: u128,
    pub ions_created: u64,
    pub ions_captured: u64,
    pub ions_lost_at_birth: u64,
}

impl Ledger {
    pub fn conserves(&self) -> bool {
        self.atoms_emitted
            == self.atoms_rejected + self.atoms_transited_unionized + self.ions_created as u128
            && self.ions_created == self.ions_captured + self.ions_lost_at_birth
    }
}

/// One captured ion, timestamped at its arrival in the trap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadingRecord {
    pub time: f64,
    /// 1-based, consecutive in arrival order.
    pub ion_index: u64,
    pub isotope: u32,
    pub channel: ChannelKind,
    /// Longitudinal speed of the parent atom, m/s.
    pub velocity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub duration: f64,
    /// Total time the ablation gate was open, s.
    pub on_time: f64,
    pub final_ion_count: u64,
    /// Captured ions per second of gate-open time.
    pub mean_rate: f64,
    pub final_pressure: f64,
    pub peak_pressure: f64,
    /// Time the auto shutter actually closed the gate, if it fired.
    pub shuttered_at: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub name: String,
    pub events: Vec<LoadingRecord>,
    pub trace: FluorescenceTrace,
    /// (time, pressure in mbar) at every diagnostic step.
    pub pressure: Vec<(f64, f64)>,
    /// (time, trapped ion count) at every diagnostic step.
    pub ion_count: Vec<(f64, u64)>,
    pub ledger: Ledger,
    pub summary: Summary,
}

/// Natural-abundance isotope chooser for channel draws that carry no
/// isotope selectivity.
struct AbundanceTable {
    numbers: Vec<u32>,
    masses: Vec<f64>,
    cum: Vec<f64>,
}

impl AbundanceTable {
    fn new(species: &SpeciesData) -> Self {
        let total: f64 = species.isotopes.iter().map(|i| i.abundance).sum();
        let mut cum = Vec::with_capacity(species.isotopes.len());
        let mut acc = 0.0;
        for iso in &species.isotopes {
            acc += iso.abundance / total;
            cum.push(acc);
        }
        AbundanceTable {
            numbers: species.isotopes.iter().map(|i| i.mass_number).collect(),
            masses: species.isotopes.iter().map(|i| i.mass).collect(),
            cum,
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> (u32, f64) {
        let u: f64 = rng.gen();
        let i = self.cum.partition_point(|&c| c < u).min(self.cum.len() - 1);
        (self.numbers[i], self.masses[i])
    }
}

fn in_gate(gates: &[(f64, f64)], cursor: &mut usize, t: f64) -> bool {
    while *cursor < gates.len() && t >= gates[*cursor].1 {
        *cursor += 1;
    }
    *cursor < gates.len() && t >= gates[*cursor].0
}

pub fn run_scenario(scenario: &Scenario) -> Result<RunOutput, Error> {
    let cfg = &scenario.config;
    cfg.validate()?;

    let duration = cfg.run.duration;
    let dt = cfg.run.time_step;
    let seed = cfg.run.seed;

    let mut ablation_rng = derive_stream(seed, Stream::Ablation);
    let mut transport_rng = derive_stream(seed, Stream::Transport);
    let mut kinematics_rng = derive_stream(seed, Stream::Kinematics);
    let mut ionization_rng = derive_stream(seed, Stream::Ionization);
    let mut trap_rng = derive_stream(seed, Stream::Trap);
    let mut trace_rng = derive_stream(seed, Stream::Trace);

    let gates = cfg.effective_gating();
    let mode = cfg.effective_mode();
    let period = 1.0 / cfg.ablation.rep_rate;

    // Fluence is fixed within a run, so the burst temperature and the
    // ionization averages are computed once.
    let pulse0 = PulseSpec::at_time(&cfg.ablation_laser, &cfg.ablation, 0.0)?;
    let surface_t = surface_temperature(&pulse0, &cfg.species, cfg.ablation.ambient_temperature);
    let table = TwoPhotonTable::build(cfg, surface_t)?;
    let acceptance = acceptance_fraction(&cfg.beam).clamp(0.0, 1.0);
    let scatter = ScatterModel::new(
        &cfg.cooling_laser,
        cfg.species.ion_cooling_linewidth,
        &cfg.detection,
    );
    // The cooling beam is the only autoionizing drive in the model; the
    // repumper photon sits below the core transition it would need.
    let ryd_levels = RydbergLevelModel::from_species(&cfg.species, cfg.photoionization.rydberg_binding);
    let p_ryd_atom = if ryd_levels.drives_autoionization("s12-p12")? {
        rydberg_loading_rate(
            cfg.cooling_laser.power,
            cfg.photoionization.rydberg_p_max,
            cfg.photoionization.rydberg_saturation_power,
        )
    } else {
        0.0
    };

    let abundance = AbundanceTable::new(&cfg.species);
    let mut crystal = IonCrystal::new(&cfg.trap, cfg.species.mean_mass())?;
    let mut target = TargetState::fresh(&cfg.ablation);
    let mut ledger = Ledger::default();

    let background = cfg.detection.background_rate;
    let bin_width = cfg.detection.bin_width;
    let n_bins = (duration / bin_width).ceil() as usize;
    let mut timeline = RateTimeline::new(background);
    let mut counts: Vec<u64> = Vec::with_capacity(n_bins);
    let detector = StepDetectorParams::from_detection(&cfg.detection);

    let auto_shutter = mode == ControllerMode::AutoShutter;
    let (target_events, latency) = cfg
        .controller
        .as_ref()
        .map(|c| (c.target_ion_count as u64, c.shutter_latency))
        .unwrap_or((0, 0.0));

    let half_aperture = cfg.beam.aperture_height / 2.0;
    let half_waist = cfg.pi_laser.waist_at_trap / 2.0;
    let distance = cfg.beam.target_trap_distance;

    let mut pressure = cfg.vacuum.base_pressure;
    let mut peak_pressure = pressure;
    let mut pressure_series = vec![(0.0, pressure)];
    let mut ion_series = vec![(0.0, 0u64)];
    let mut raw_events: Vec<(f64, u32, ChannelKind, f64)> = Vec::new();

    let mut cutoff = f64::INFINITY;
    let mut gate_cursor = 0usize;
    let mut next_pulse: u64 = 0;
    let mut checked_bins = 0usize;
    let n_steps = (duration / dt).ceil() as usize;
    let mut t_prev = 0.0;

    for step in 0..n_steps {
        let t_end = ((step + 1) as f64 * dt).min(duration);
        let mut energy_step = 0.0;

        loop {
            let t_pulse = next_pulse as f64 * period;
            if t_pulse >= t_end || t_pulse >= duration {
                break;
            }
            next_pulse += 1;
            if t_pulse >= cutoff || !in_gate(&gates, &mut gate_cursor, t_pulse) {
                continue;
            }

            let pulse = PulseSpec::at_time(&cfg.ablation_laser, &cfg.ablation, t_pulse)?;
            let burst = emit_burst(
                &pulse,
                &mut target,
                &cfg.species,
                &cfg.ablation,
                cfg.run.sampling,
                &gates,
                &mut ablation_rng,
            )?;
            ledger.pulses_fired += 1;
            energy_step += pulse.energy;
            ledger.atoms_emitted += burst.n_atoms as u128;
            if burst.n_atoms == 0 {
                continue;
            }

            let accepted = Binomial::new(burst.n_atoms, acceptance)
                .expect("acceptance is a probability")
                .sample(&mut transport_rng);
            ledger.atoms_rejected += (burst.n_atoms - accepted) as u128;
            if accepted == 0 {
                continue;
            }

            let delta0 = drifted_detuning(&cfg.photoionization, &cfg.pi_laser, t_pulse);
            let p_two = burst.ground_fraction * table.pbar_total(delta0);
            let p_ryd = burst.rydberg_fraction * p_ryd_atom;
            let p_atom = (p_two + p_ryd).clamp(0.0, 1.0);
            if p_atom <= 0.0 {
                ledger.atoms_transited_unionized += accepted as u128;
                continue;
            }
            let created = Binomial::new(accepted, p_atom)
                .expect("probability in [0,1]")
                .sample(&mut ionization_rng);
            ledger.atoms_transited_unionized += (accepted - created) as u128;
            ledger.ions_created += created;

            for _ in 0..created {
                let ryd_branch = ionization_rng.gen_bool((p_ryd / p_atom).clamp(0.0, 1.0));
                let (isotope, mass, velocity, offset, channel) = if ryd_branch {
                    let (num, mass) = abundance.sample(&mut kinematics_rng);
                    let v = sample_velocity(burst.surface_temperature, mass, &mut kinematics_rng);
                    let b = kinematics_rng.gen_range(-half_aperture..half_aperture);
                    (num, mass, v, b, ChannelKind::Rydberg397)
                } else {
                    let atom = table.sample_atom(delta0, cfg, &mut kinematics_rng);
                    (
                        atom.isotope,
                        atom.mass,
                        atom.velocity,
                        atom.transverse_offset,
                        ChannelKind::TwoPhoton272,
                    )
                };
                let along = kinematics_rng.gen_range(-half_waist..half_waist);
                let birth = IonBirth {
                    radial_offset: along.hypot(offset),
                    kinetic_energy_ev: 0.5 * mass * velocity * velocity / ELEMENTARY_CHARGE,
                };
                if attempt_capture(&birth, &cfg.trap, mass)? {
                    ledger.ions_captured += 1;
                    crystal.apply_collision_and_heating_events(
                        &cfg.detection,
                        pressure,
                        t_pulse,
                        0.0,
                        Some(isotope),
                        &mut trap_rng,
                    );
                    timeline.set_rate(
                        t_pulse,
                        fluorescence_rate(&crystal, &scatter, t_pulse) + background,
                    );
                    let arrival = t_pulse + (distance / velocity).min(TOF_HORIZON);
                    raw_events.push((arrival, isotope, channel, velocity));
                } else {
                    ledger.ions_lost_at_birth += 1;
                }
            }
        }

        // Diagnostics at the step boundary.
        let dt_act = t_end - t_prev;
        if dt_act > 0.0 {
            let power = energy_step / dt_act;
            let gas_load = cfg.vacuum.gas_load_per_watt * power
                + cfg.vacuum.contaminant_load_per_watt * power * target.contaminant_coverage;
            pressure = pressure_step(pressure, gas_load, &cfg.vacuum, dt_act)?;
            peak_pressure = peak_pressure.max(pressure);
            crystal.apply_collision_and_heating_events(
                &cfg.detection,
                pressure,
                t_end,
                dt_act,
                None,
                &mut trap_rng,
            );
        }
        pressure_series.push((t_end, pressure));
        timeline.set_rate(t_end, fluorescence_rate(&crystal, &scatter, t_end) + background);
        ion_series.push((t_end, crystal.count() as u64));
        t_prev = t_end;

        // Histogram bins whose center has passed are final and can be
        // drawn; this is draw-for-draw the batch synthesis order.
        while counts.len() < n_bins {
            let center = (counts.len() as f64 + 0.5) * bin_width;
            if center >= t_end {
                break;
            }
            push_bin(&mut counts, &timeline, center, bin_width, &mut trace_rng);
        }

        if auto_shutter
            && cutoff.is_infinite()
            && counts.len() > checked_bins
            && counts.len() >= 2 * detector.window
        {
            checked_bins = counts.len();
            let probe = FluorescenceTrace {
                t0: 0.0,
                bin_width,
                counts: counts.clone(),
            };
            let found = detect_steps(&probe, &detector).expect("prefix length checked");
            if found.len() as u64 >= target_events {
                cutoff = t_end + latency;
            }
        }
    }

    while counts.len() < n_bins {
        let center = (counts.len() as f64 + 0.5) * bin_width;
        push_bin(&mut counts, &timeline, center, bin_width, &mut trace_rng);
    }

    // Arrival order differs slightly from pulse order because flight times
    // vary; indices follow arrival. Exact ties get a nanosecond nudge so
    // event times are strictly increasing.
    raw_events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut events = Vec::with_capacity(raw_events.len());
    let mut last_time = f64::NEG_INFINITY;
    for (i, (time, isotope, channel, velocity)) in raw_events.into_iter().enumerate() {
        let time = if time <= last_time {
            last_time + 1e-9
        } else {
            time
        };
        last_time = time;
        events.push(LoadingRecord {
            time,
            ion_index: (i + 1) as u64,
            isotope,
            channel,
            velocity,
        });
    }

    let horizon = cutoff.min(duration);
    let on_time: f64 = gates
        .iter()
        .map(|&(s, e)| (e.min(horizon) - s).max(0.0))
        .sum();
    let shuttered_at = if cutoff.is_finite() { Some(cutoff) } else { None };

    let summary = Summary {
        duration,
        on_time,
        final_ion_count: crystal.count() as u64,
        mean_rate: if on_time > 0.0 {
            ledger.ions_captured as f64 / on_time
        } else {
            0.0
        },
        final_pressure: pressure,
        peak_pressure,
        shuttered_at,
    };

    debug_assert!(ledger.conserves());
    Ok(RunOutput {
        name: scenario.name.clone(),
        events,
        trace: FluorescenceTrace {
            t0: 0.0,
            bin_width,
            counts,
        },
        pressure: pressure_series,
        ion_count: ion_series,
        ledger,
        summary,
    })
}

fn push_bin(
    counts: &mut Vec<u64>,
    timeline: &RateTimeline,
    center: f64,
    bin_width: f64,
    rng: &mut impl Rng,
) {
    let mean = timeline.rate_at(center) * bin_width;
    if mean > 0.0 {
        counts.push(Poisson::new(mean).expect("positive mean").sample(rng) as u64);
    } else {
        counts.push(0);
    }
}
