use ablatron::calibrate::calibrate_yield;
use ablatron::engine::{run_scenario, Scenario};
use ablatron::error::Error;
use ablatron::fit::{fit_saturation, fit_threshold, FitResult};
use ablatron::output::{read_two_column_csv, write_run, write_sweep, SweepRow};
use ablatron_core::ablation::{accumulate_depth, DepthModel};
use ablatron_core::config::{apply_override, RunConfig};
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use std::path::{Path, PathBuf};

/// Ion trap loading simulator for pulsed laser ablation sources.
#[derive(Parser)]
#[command(name = "ablatron", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configured scenario and write its run directory.
    Simulate {
        /// Scenario config file.
        config: PathBuf,
        /// Output directory (default `runs/<config stem>`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the same scenario across a parameter range, in parallel.
    Sweep {
        /// Base config file.
        config: PathBuf,
        /// Range spec `section.key=lo:hi:n`, values in config-file units.
        #[arg(long)]
        vary: String,
        /// Output directory (default `runs/<config stem>_sweep`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Calibrate the emission yield scale to a target loading rate.
    Calibrate {
        /// Loading rate to reproduce, ions per second.
        #[arg(long)]
        target_rate: f64,
        /// Operating peak fluence, mJ/cm2.
        #[arg(long)]
        fluence: f64,
        /// Pulse repetition rate, Hz.
        #[arg(long)]
        rep_rate: f64,
        /// Base config (defaults to the built-in configuration).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Fit an empirical curve to two-column CSV data.
    Fit {
        #[command(subcommand)]
        curve: FitCurve,
    },
    /// Summarize a stored run directory.
    Report {
        run_dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum FitCurve {
    /// depth = slope * max(0, fluence - threshold), from (fluence, depth).
    Threshold { csv: PathBuf },
    /// rate = r_max * p / (p + p_sat), from (power, rate).
    Saturation { csv: PathBuf },
}

/// Prints one line, swallowing a closed pipe instead of panicking.
fn say(line: std::fmt::Arguments) {
    use std::io::Write;
    let mut out = std::io::stdout();
    let _ = out.write_fmt(line);
    let _ = out.write_all(b"\n");
}

macro_rules! say {
    ($($arg:tt)*) => { say(format_args!($($arg)*)) };
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = dispatch(cli.command) {
        use std::io::Write;
        let _ = writeln!(std::io::stderr(), "error: {err}");
        std::process::exit(err.exit_code());
    }
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::Simulate { config, out, seed } => simulate(&config, out, seed),
        Command::Sweep { config, vary, out } => sweep(&config, &vary, out),
        Command::Calibrate {
            target_rate,
            fluence,
            rep_rate,
            config,
        } => calibrate(target_rate, fluence, rep_rate, config),
        Command::Fit { curve } => fit(curve),
        Command::Report { run_dir } => {
            say!("{}", ablatron::report::report(&run_dir)?.trim_end());
            Ok(())
        }
    }
}

fn simulate(config: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<(), Error> {
    let mut scenario = Scenario::from_file(config)?;
    if let Some(seed) = seed {
        scenario.config.run.seed = seed;
    }
    let out_dir = out.unwrap_or_else(|| PathBuf::from("runs").join(&scenario.name));

    let result = run_scenario(&scenario)?;
    write_run(&out_dir, &scenario.config, &result)?;

    let s = &result.summary;
    say!(
        "run {}: {} ions in {} s on-time ({:.3} ions/s)",
        result.name, s.final_ion_count, s.on_time, s.mean_rate
    );
    if let Some(t) = s.shuttered_at {
        say!("auto shutter closed the ablation gate at {t:.3} s");
    }
    say!(
        "pressure {:.3e} mbar final, {:.3e} mbar peak",
        s.final_pressure, s.peak_pressure
    );
    say!("wrote {}", out_dir.display());
    Ok(())
}

fn sweep(config: &Path, vary: &str, out: Option<PathBuf>) -> Result<(), Error> {
    let base = Scenario::from_file(config)?;
    let (section, key, lo, hi, n) = parse_vary(vary)?;
    let full_key = format!("{section}.{key}");
    let out_dir =
        out.unwrap_or_else(|| PathBuf::from("runs").join(format!("{}_sweep", base.name)));

    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let value = if n == 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        };
        let mut cfg = base.config.clone();
        apply_override(&mut cfg, &section, &key, &value.to_string())?;
        cfg.run.seed = base.config.run.seed + i as u64;
        points.push((i, value, cfg));
    }

    let mut rows = points
        .into_par_iter()
        .map(|(index, value, cfg)| -> Result<SweepRow, Error> {
            let name = format!("{}[{index}]", base.name);
            let result = run_scenario(&Scenario::new(name, cfg.clone()))?;
            let fluence = cfg.pulse_fluence()?;
            let model = DepthModel::from_settings(&cfg.ablation);
            Ok(SweepRow {
                index,
                value,
                seed: cfg.run.seed,
                ledger: result.ledger,
                mean_rate: result.summary.mean_rate,
                on_time: result.summary.on_time,
                final_pressure: result.summary.final_pressure,
                peak_pressure: result.summary.peak_pressure,
                depth: accumulate_depth(fluence, result.ledger.pulses_fired, &model),
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    rows.sort_by_key(|r| r.index);

    write_sweep(&out_dir, &base.config, &full_key, &rows)?;
    say!(
        "swept {full_key} over [{lo}, {hi}] in {n} points; wrote {}",
        out_dir.display()
    );
    Ok(())
}

fn parse_vary(spec: &str) -> Result<(String, String, f64, f64, usize), Error> {
    let usage = || {
        Error::Usage(format!(
            "--vary expects section.key=lo:hi:n, got `{spec}`"
        ))
    };
    let (key_part, range) = spec.split_once('=').ok_or_else(usage)?;
    let (section, key) = key_part.split_once('.').ok_or_else(usage)?;
    let mut parts = range.split(':');
    let (Some(lo), Some(hi), Some(n), None) =
        (parts.next(), parts.next(), parts.next(), parts.next())
    else {
        return Err(usage());
    };
    let lo: f64 = lo.parse().map_err(|_| usage())?;
    let hi: f64 = hi.parse().map_err(|_| usage())?;
    let n: usize = n.parse().map_err(|_| usage())?;
    if n == 0 || !lo.is_finite() || !hi.is_finite() {
        return Err(usage());
    }
    Ok((section.to_string(), key.to_string(), lo, hi, n))
}

fn calibrate(
    target_rate: f64,
    fluence_mj_cm2: f64,
    rep_rate: f64,
    config: Option<PathBuf>,
) -> Result<(), Error> {
    let base = match config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    // Config files quote fluence in mJ/cm2; internally it is J/m2.
    let result = calibrate_yield(&base, target_rate, fluence_mj_cm2 * 10.0, rep_rate)?;
    say!("yield_scale={}", result.yield_scale);
    say!("achieved_rate={}", result.achieved_rate);
    say!("target_rate={}", result.target_rate);
    say!("evaluations={}", result.evaluations);
    Ok(())
}

fn fit(curve: FitCurve) -> Result<(), Error> {
    match curve {
        FitCurve::Threshold { csv } => {
            let points = read_two_column_csv(&csv)?;
            print_fit(&fit_threshold(&points)?);
        }
        FitCurve::Saturation { csv } => {
            let points = read_two_column_csv(&csv)?;
            let result = fit_saturation(&points)?;
            print_fit(&result);
            if result.relative_sigma(1) > 1e3 {
                say!("note=p_sat is unidentifiable on this data (covariance blow-up)");
            }
        }
    }
    Ok(())
}

fn print_fit(result: &FitResult) {
    for (name, value) in &result.parameters {
        say!("{name}={value}");
    }
    say!("residual_norm={}", result.residual_norm);
    for (i, (name, _)) in result
        .parameters
        .iter()
        .enumerate()
        .take(result.covariance_diagonal.len())
    {
        say!("relative_sigma_{name}={}", result.relative_sigma(i));
    }
}
