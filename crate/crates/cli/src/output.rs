//! Run-directory persistence: a manifest, the canonical config echo,
//! CSV series, and gnuplot-ready .dat files with a rendering script.
//!
//! Every file is written deterministically; floats use the shortest
//! round-trip decimal form, so identical (config, seed) pairs produce
//! byte-identical directories.

use crate::engine::{Ledger, RunOutput};
use crate::error::Error;
use ablatron_core::config::RunConfig;
use ablatron_core::photoionization::ChannelKind;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub fn channel_label(kind: ChannelKind) -> &'static str {
    match kind {
        ChannelKind::TwoPhoton272 => "two_photon",
        ChannelKind::Rydberg397 => "rydberg",
    }
}

pub fn sha256_hex(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    let mut hex = String::with_capacity(64);
    for byte in digest {
        write!(hex, "{byte:02x}").expect("writing to string");
    }
    hex
}

/// Writes a complete run directory. Existing files are overwritten.
pub fn write_run(dir: &Path, cfg: &RunConfig, out: &RunOutput) -> Result<(), Error> {
    fs::create_dir_all(dir.join("plots"))?;

    let canonical = cfg.to_canonical_string();
    fs::write(dir.join("config.cfg"), &canonical)?;
    fs::write(dir.join("manifest.txt"), manifest_text(cfg, &canonical, out))?;
    fs::write(dir.join("events.csv"), events_csv(out))?;
    fs::write(dir.join("fluorescence.csv"), fluorescence_csv(out))?;
    fs::write(dir.join("pressure.csv"), series_csv("pressure_mbar", &out.pressure))?;
    fs::write(dir.join("ion_count.csv"), ion_count_csv(out))?;

    let plots = dir.join("plots");
    fs::write(plots.join("fluorescence.dat"), fluorescence_dat(out))?;
    fs::write(plots.join("ion_count.dat"), ion_count_dat(out))?;
    fs::write(plots.join("pressure.dat"), series_dat(&out.pressure))?;
    fs::write(plots.join("events.dat"), events_dat(out))?;
    fs::write(plots.join("render.gp"), RENDER_SCRIPT)?;
    Ok(())
}

fn manifest_text(cfg: &RunConfig, canonical: &str, out: &RunOutput) -> String {
    let s = &out.summary;
    let l = &out.ledger;
    let mut text = String::new();
    let _ = writeln!(text, "name={}", out.name);
    let _ = writeln!(text, "version={}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(text, "config_sha256={}", sha256_hex(canonical));
    let _ = writeln!(text, "seed={}", cfg.run.seed);
    let _ = writeln!(text, "duration_s={}", s.duration);
    let _ = writeln!(text, "on_time_s={}", s.on_time);
    let _ = writeln!(text, "final_ion_count={}", s.final_ion_count);
    let _ = writeln!(text, "mean_rate_per_s={}", s.mean_rate);
    let _ = writeln!(text, "final_pressure_mbar={}", s.final_pressure);
    let _ = writeln!(text, "peak_pressure_mbar={}", s.peak_pressure);
    match s.shuttered_at {
        Some(t) => {
            let _ = writeln!(text, "shuttered_at_s={t}");
        }
        None => {
            let _ = writeln!(text, "shuttered_at_s=never");
        }
    }
    let _ = writeln!(text, "pulses_fired={}", l.pulses_fired);
    let _ = writeln!(text, "atoms_emitted={}", l.atoms_emitted);
    let _ = writeln!(text, "atoms_rejected={}", l.atoms_rejected);
    let _ = writeln!(text, "atoms_transited_unionized={}", l.atoms_transited_unionized);
    let _ = writeln!(text, "ions_created={}", l.ions_created);
    let _ = writeln!(text, "ions_captured={}", l.ions_captured);
    let _ = writeln!(text, "ions_lost_at_birth={}", l.ions_lost_at_birth);
    let _ = writeln!(text, "ledger_balanced={}", l.conserves());
    text
}

fn events_csv(out: &RunOutput) -> String {
    let mut text = String::from("time_s,ion_index,isotope,channel,velocity_m_s\n");
    for e in &out.events {
        let _ = writeln!(
            text,
            "{},{},{},{},{}",
            e.time,
            e.ion_index,
            e.isotope,
            channel_label(e.channel),
            e.velocity
        );
    }
    text
}

fn fluorescence_csv(out: &RunOutput) -> String {
    let mut text = String::from("time_s,counts\n");
    for (i, &c) in out.trace.counts.iter().enumerate() {
        let _ = writeln!(text, "{},{}", out.trace.bin_center(i), c);
    }
    text
}

fn series_csv(value_header: &str, series: &[(f64, f64)]) -> String {
    let mut text = format!("time_s,{value_header}\n");
    for &(t, v) in series {
        let _ = writeln!(text, "{t},{v}");
    }
    text
}

fn ion_count_csv(out: &RunOutput) -> String {
    let mut text = String::from("time_s,ion_count\n");
    for &(t, n) in &out.ion_count {
        let _ = writeln!(text, "{t},{n}");
    }
    text
}

fn fluorescence_dat(out: &RunOutput) -> String {
    let mut text = String::from("# time_s counts\n");
    for (i, &c) in out.trace.counts.iter().enumerate() {
        let _ = writeln!(text, "{} {}", out.trace.bin_center(i), c);
    }
    text
}

fn ion_count_dat(out: &RunOutput) -> String {
    let mut text = String::from("# time_s ion_count\n");
    for &(t, n) in &out.ion_count {
        let _ = writeln!(text, "{t} {n}");
    }
    text
}

fn series_dat(series: &[(f64, f64)]) -> String {
    let mut text = String::from("# time_s value\n");
    for &(t, v) in series {
        let _ = writeln!(text, "{t} {v}");
    }
    text
}

fn events_dat(out: &RunOutput) -> String {
    let mut text = String::from("# time_s ion_index\n");
    for e in &out.events {
        let _ = writeln!(text, "{} {}", e.time, e.ion_index);
    }
    text
}

const RENDER_SCRIPT: &str = "\
set terminal pngcairo size 900,600
set grid

set output 'fluorescence.png'
set xlabel 'time (s)'
set ylabel 'counts per bin'
plot 'fluorescence.dat' using 1:2 with steps title 'fluorescence'

set output 'ion_count.png'
set ylabel 'trapped ions'
plot 'ion_count.dat' using 1:2 with steps title 'ion count', \\
     'events.dat' using 1:2 with points pt 7 title 'loading events'

set output 'pressure.png'
set ylabel 'pressure (mbar)'
set format y '%.2e'
plot 'pressure.dat' using 1:2 with lines title 'chamber pressure'
";

/// One row of a parameter sweep after its run finished.
pub struct SweepRow {
    pub index: usize,
    /// Varied value in the unit the config file uses for that key.
    pub value: f64,
    pub seed: u64,
    pub ledger: Ledger,
    pub mean_rate: f64,
    pub on_time: f64,
    pub final_pressure: f64,
    pub peak_pressure: f64,
    pub depth: f64,
}

pub fn write_sweep(
    dir: &Path,
    base_cfg: &RunConfig,
    key: &str,
    rows: &[SweepRow],
) -> Result<(), Error> {
    fs::create_dir_all(dir)?;

    let canonical = base_cfg.to_canonical_string();
    let mut manifest = String::new();
    let _ = writeln!(manifest, "version={}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(manifest, "base_config_sha256={}", sha256_hex(&canonical));
    let _ = writeln!(manifest, "base_seed={}", base_cfg.run.seed);
    let _ = writeln!(manifest, "varied_key={key}");
    let _ = writeln!(manifest, "points={}", rows.len());
    fs::write(dir.join("manifest.txt"), manifest)?;
    fs::write(dir.join("config.cfg"), &canonical)?;

    let mut csv = format!(
        "index,{key},seed,pulses_fired,ions_created,ions_captured,mean_rate_per_s,on_time_s,\
         final_pressure_mbar,peak_pressure_mbar,depth_m\n"
    );
    for row in rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{}",
            row.index,
            row.value,
            row.seed,
            row.ledger.pulses_fired,
            row.ledger.ions_created,
            row.ledger.ions_captured,
            row.mean_rate,
            row.on_time,
            row.final_pressure,
            row.peak_pressure,
            row.depth
        );
    }
    fs::write(dir.join("sweep.csv"), csv)?;

    if key == "ablation.fluence" {
        let mut csv = String::from("fluence_mJ_cm2,depth_m\n");
        for row in rows {
            let _ = writeln!(csv, "{},{}", row.value, row.depth);
        }
        fs::write(dir.join("depth_scan.csv"), csv)?;
    }
    Ok(())
}

/// Reads the first two numeric comma-separated columns of a CSV file,
/// skipping header or comment lines.
pub fn read_two_column_csv(path: &Path) -> Result<Vec<(f64, f64)>, Error> {
    let text = fs::read_to_string(path)?;
    let mut points = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(',');
        let (Some(a), Some(b)) = (cols.next(), cols.next()) else {
            continue;
        };
        if let (Ok(x), Ok(y)) = (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
            points.push((x, y));
        }
    }
    if points.is_empty() {
        return Err(Error::DegenerateData(format!(
            "no numeric (x, y) rows in {}",
            path.display()
        )));
    }
    Ok(points)
}
