//! Digest of a stored run directory: replays the manifest and CSV series
//! into a short human-readable block, re-running step detection on the
//! stored fluorescence trace with the run's own detection settings.

use crate::error::Error;
use crate::output::read_two_column_csv;
use ablatron_core::config::RunConfig;
use ablatron_core::diagnostics::{detect_steps, FluorescenceTrace, StepDetectorParams};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub fn report(run_dir: &Path) -> Result<String, Error> {
    let manifest_path = run_dir.join("manifest.txt");
    if !manifest_path.is_file() {
        return Err(Error::Usage(format!(
            "{} is not a run directory (no manifest.txt)",
            run_dir.display()
        )));
    }
    let manifest = fs::read_to_string(&manifest_path)?;
    let field = |key: &str| -> Option<&str> {
        manifest
            .lines()
            .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
    };

    let cfg = RunConfig::from_file(run_dir.join("config.cfg"))?;

    let trace_points = read_two_column_csv(&run_dir.join("fluorescence.csv"))?;
    let trace = FluorescenceTrace {
        t0: 0.0,
        bin_width: cfg.detection.bin_width,
        counts: trace_points.iter().map(|&(_, c)| c.max(0.0) as u64).collect(),
    };
    let params = StepDetectorParams::from_detection(&cfg.detection);
    let detected = detect_steps(&trace, &params).map(|v| v.len()).unwrap_or(0);

    let events = fs::read_to_string(run_dir.join("events.csv"))?;
    let mut two_photon = 0u64;
    let mut rydberg = 0u64;
    for line in events.lines().skip(1) {
        match line.split(',').nth(3) {
            Some("two_photon") => two_photon += 1,
            Some("rydberg") => rydberg += 1,
            _ => {}
        }
    }

    let pressure = read_two_column_csv(&run_dir.join("pressure.csv"))?;
    let peak = pressure.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);

    let mut text = String::new();
    let _ = writeln!(text, "run       {}", field("name").unwrap_or("?"));
    let _ = writeln!(
        text,
        "recorded  version {} seed {}",
        field("version").unwrap_or("?"),
        field("seed").unwrap_or("?")
    );
    let _ = writeln!(
        text,
        "time      {} s simulated, {} s ablation on",
        field("duration_s").unwrap_or("?"),
        field("on_time_s").unwrap_or("?")
    );
    let _ = writeln!(
        text,
        "loading   {} ions captured ({} two-photon, {} rydberg), mean rate {} ions/s",
        field("ions_captured").unwrap_or("?"),
        two_photon,
        rydberg,
        field("mean_rate_per_s").unwrap_or("?")
    );
    let _ = writeln!(
        text,
        "detector  {} steps found in the stored trace",
        detected
    );
    let _ = writeln!(
        text,
        "pressure  peak {:.3e} mbar, final {} mbar",
        peak,
        field("final_pressure_mbar").unwrap_or("?")
    );
    let shutter = field("shuttered_at_s").unwrap_or("never");
    if shutter != "never" {
        let _ = writeln!(text, "shutter   closed at {shutter} s");
    }
    let _ = writeln!(
        text,
        "ledger    balanced={} ({} pulses, {} atoms emitted)",
        field("ledger_balanced").unwrap_or("?"),
        field("pulses_fired").unwrap_or("?"),
        field("atoms_emitted").unwrap_or("?")
    );
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_scenario, Scenario};
    use crate::output::write_run;

    #[test]
    fn report_digests_a_written_run() {
        let mut cfg = RunConfig::default();
        cfg.run.duration = 2.0;
        let scenario = Scenario::new("digest", cfg.clone());
        let out = run_scenario(&scenario).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_run(dir.path(), &cfg, &out).unwrap();

        let text = report(dir.path()).unwrap();
        assert!(text.contains("run       digest"));
        assert!(text.contains(&format!("{} ions captured", out.ledger.ions_captured)));
        assert!(text.contains("balanced=true"));
    }

    #[test]
    fn report_rejects_a_directory_without_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let err = report(dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
