//! Command-line front end: `simulate`, `sweep`, `oracle-check`, `validate`.
//!
//! Exit codes: 0 on success, 2 for config/usage problems (with field-level
//! messages), 1 for runtime failures. Worker count comes from `--workers`,
//! falling back to the `DMIMO_SIM_WORKERS` environment variable, then to
//! all cores.
//!
//! File outputs per campaign:
//! - `manifest.json` — resolved config, seed, drop count, version, timestamp
//! - `samples.csv` — `drop_id,ac_id,sinr_db` (6 decimals)
//! - `cdf.csv` — `sinr_db,empirical_cdf`, at most 10^4 evenly spaced points
//! - `summary.json` — sample count, availability/median/mean in dB, config
//!   echo, run metadata (deterministic: reruns are byte-identical)

use crate::engine::{run_campaign, run_sweep, CampaignResult, SweepParam};
use crate::error::{Error, Result};
use crate::metrics::availability;
use crate::power::{mpa_oracle, mpa_solve, MpaInstance};
use crate::scenario::ConfigFile;
use crate::units::linear_to_db;
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "DMIMO_SIM_WORKERS";

const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "dmimo-sim",
    version,
    about = "Monte Carlo SINR-availability simulator for distributed MIMO in indoor factories"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one Monte Carlo campaign and write result files.
    Simulate {
        /// JSON config file.
        config: PathBuf,
        /// Number of Monte Carlo drops.
        #[arg(long, default_value_t = 100_000)]
        drops: u64,
        /// Master seed; fully determines the run together with the config.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run one campaign per value of a swept parameter.
    Sweep {
        /// JSON config file (the base every value is applied to).
        config: PathBuf,
        /// Swept parameter: K, epsilon, J, scheme, mode, power_rule, csi.
        #[arg(long)]
        param: String,
        /// Comma-separated list of values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long, default_value_t = 100_000)]
        drops: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Cross-check the max-min eigenvector solver against the bisection
    /// oracle on random instances.
    OracleCheck {
        /// Number of random instances.
        #[arg(long, default_value_t = 100)]
        instances: u64,
        /// Largest AC count; instances cycle K = 2..=kmax.
        #[arg(long, default_value_t = 4)]
        kmax: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Largest accepted relative min-SINR discrepancy.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Where to dump the worst instance on failure.
        #[arg(long, default_value = "mpa_failed_instance.json")]
        dump: PathBuf,
        /// Check a single instance file instead of generating random ones.
        #[arg(long)]
        load: Option<PathBuf>,
    },
    /// Validate a config file and exit.
    Validate {
        /// JSON config file.
        config: PathBuf,
    },
}

/// Parses `std::env::args` and runs; returns the process exit code.
pub fn run() -> i32 {
    run_with(Cli::parse())
}

/// Entry point with pre-parsed arguments (used by tests).
pub fn run_with(cli: Cli) -> i32 {
    match cli.command {
        Command::Simulate {
            config,
            drops,
            seed,
            out,
            workers,
        } => cmd_simulate(&config, drops, seed, &out, resolve_workers(workers)),
        Command::Sweep {
            config,
            param,
            values,
            drops,
            seed,
            out,
            workers,
        } => cmd_sweep(
            &config,
            &param,
            &values,
            drops,
            seed,
            &out,
            resolve_workers(workers),
        ),
        Command::OracleCheck {
            instances,
            kmax,
            seed,
            tol,
            dump,
            load,
        } => cmd_oracle_check(instances, kmax, seed, tol, &dump, load.as_deref()),
        Command::Validate { config } => cmd_validate(&config),
    }
}

fn resolve_workers(flag: Option<usize>) -> usize {
    flag.or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok()))
        .unwrap_or(0)
}

fn report_error(err: &Error) {
    if let Error::InvalidConfig(fields) = err {
        eprintln!("error: invalid configuration");
        for f in fields {
            eprintln!("  {f}");
        }
    } else {
        eprintln!("error: {err}");
    }
}

fn load_config(path: &Path) -> Result<ConfigFile> {
    ConfigFile::load(path).map_err(|e| match e {
        Error::Io(io) => Error::config("config", format!("cannot read {}: {io}", path.display())),
        other => other,
    })
}

fn cmd_simulate(config: &Path, drops: u64, seed: u64, out: &Path, workers: usize) -> i32 {
    // Config-level failures exit 2.
    let prepared = load_config(config).and_then(|file| {
        let scenario = file.to_scenario()?;
        if drops == 0 {
            return Err(Error::config("drops", "drops must be >= 1"));
        }
        Ok((file, scenario))
    });
    let (file, scenario) = match prepared {
        Ok(v) => v,
        Err(e) => {
            report_error(&e);
            return 2;
        }
    };

    let tail_samples = drops as f64 * scenario.num_acs as f64 * 1e-5;
    if tail_samples < 10.0 {
        eprintln!(
            "warning: {drops} drops x {} ACs leave only {tail_samples:.1} samples beyond the \
             1e-5 level; availability@1e-5 will be unstable (use --drops >= {})",
            scenario.num_acs,
            (1e6 / scenario.num_acs as f64).ceil() as u64
        );
    }

    let outcome = run_campaign(&scenario, drops, seed, workers)
        .and_then(|result| write_campaign_outputs(out, &file, &result).map(|()| result));
    match outcome {
        Ok(result) => {
            print_campaign_report(&result, out);
            0
        }
        Err(e) => {
            report_error(&e);
            1
        }
    }
}

fn cmd_sweep(
    config: &Path,
    param: &str,
    values: &[String],
    drops: u64,
    seed: u64,
    out: &Path,
    workers: usize,
) -> i32 {
    let prepared = load_config(config).and_then(|file| {
        let param: SweepParam = param.parse()?;
        file.to_scenario()?;
        if drops == 0 {
            return Err(Error::config("drops", "drops must be >= 1"));
        }
        Ok((file, param))
    });
    let (file, param) = match prepared {
        Ok(v) => v,
        Err(e) => {
            report_error(&e);
            return 2;
        }
    };

    let entries = run_sweep(&file, param, values, drops, seed, workers);

    let mut rows = Vec::new();
    let mut failures = 0usize;
    for entry in &entries {
        match &entry.outcome {
            Ok((value_file, result)) => {
                let subdir = out.join(format!("{param}={}", entry.value));
                if let Err(e) = write_campaign_outputs(&subdir, value_file, result) {
                    report_error(&e);
                    return 1;
                }
                let sorted = result.distribution.sorted_linear();
                rows.push(format!(
                    "{},{},{},{}",
                    entry.value,
                    fmt_db(availability(&sorted, 1e-5).ok()),
                    fmt_db(availability(&sorted, 1e-4).ok()),
                    fmt_db(availability(&sorted, 0.5).ok()),
                ));
                println!(
                    "{param}={}: done ({} samples)",
                    entry.value,
                    result.distribution.n()
                );
            }
            Err(e) => {
                failures += 1;
                eprintln!("{param}={}: skipped", entry.value);
                report_error(e);
            }
        }
    }

    if rows.is_empty() {
        eprintln!("error: every sweep value failed");
        return 1;
    }
    let table = format!(
        "value,availability_db@1e-5,availability_db@1e-4,median_db\n{}\n",
        rows.join("\n")
    );
    if let Err(e) =
        std::fs::create_dir_all(out).and_then(|()| std::fs::write(out.join("sweep.csv"), table))
    {
        report_error(&e.into());
        return 1;
    }
    println!(
        "sweep complete: {} of {} values ok, table in {}",
        entries.len() - failures,
        entries.len(),
        out.join("sweep.csv").display()
    );
    0
}

fn cmd_oracle_check(
    instances: u64,
    kmax: usize,
    seed: u64,
    tol: f64,
    dump: &Path,
    load: Option<&Path>,
) -> i32 {
    if instances == 0 || kmax == 0 {
        report_error(&Error::config(
            "instances",
            "need instances >= 1 and kmax >= 1",
        ));
        return 2;
    }
    let bisect_tol = (tol / 8.0).max(1e-13);

    let checked: Result<Vec<(MpaInstance, f64)>> = if let Some(path) = load {
        let text = std::fs::read_to_string(path).map_err(Error::Io);
        text.and_then(|t| {
            let inst: MpaInstance = serde_json::from_str(&t)?;
            inst.validate()?;
            let d = discrepancy(&inst, bisect_tol)?;
            Ok(vec![(inst, d)])
        })
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(instances as usize);
        let k_lo = 2.min(kmax);
        let span = (kmax - k_lo) + 1;
        (0..instances)
            .try_for_each(|i| -> Result<()> {
                let k = k_lo + (i as usize % span);
                let inst = MpaInstance::random(k, &mut rng);
                let d = discrepancy(&inst, bisect_tol)?;
                out.push((inst, d));
                Ok(())
            })
            .map(|()| out)
    };

    let checked = match checked {
        Ok(v) => v,
        Err(e) => {
            report_error(&e);
            return 1;
        }
    };

    let (worst_inst, worst) = checked
        .iter()
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .expect("at least one instance");
    println!(
        "checked {} instance(s), max relative min-SINR discrepancy {:.3e} (tol {:.3e})",
        checked.len(),
        worst,
        tol
    );
    if *worst <= tol {
        0
    } else {
        match serde_json::to_string_pretty(worst_inst) {
            Ok(text) => {
                if std::fs::write(dump, text + "\n").is_ok() {
                    eprintln!("worst instance written to {}", dump.display());
                }
            }
            Err(e) => eprintln!("could not serialize worst instance: {e}"),
        }
        1
    }
}

fn discrepancy(inst: &MpaInstance, bisect_tol: f64) -> Result<f64> {
    let eigen = mpa_solve(inst)?;
    let oracle = mpa_oracle(inst, bisect_tol)?;
    let a = inst.min_sinr(&eigen.p);
    let b = inst.min_sinr(&oracle.p);
    Ok((a - b).abs() / a.max(b))
}

fn cmd_validate(config: &Path) -> i32 {
    match load_config(config).and_then(|file| file.to_scenario().map(|_| file)) {
        Ok(file) => {
            println!(
                "ok: K={}, J={}, M_TOT={}, {:?}/{:?}/{:?}/{:?}",
                file.num_acs,
                file.deployment.num_aps,
                file.deployment.total_antennas,
                file.mode,
                file.scheme,
                file.power_rule,
                file.csi
            );
            0
        }
        Err(e) => {
            report_error(&e);
            2
        }
    }
}

// ---------------------------------------------------------------------------
// Result files
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a ConfigFile,
    master_seed: u64,
    n_drops: u64,
    tool_version: &'a str,
    timestamp: String,
}

#[derive(Serialize)]
struct AvailabilityLevels {
    #[serde(rename = "1e-3")]
    at_1e3: Option<f64>,
    #[serde(rename = "1e-4")]
    at_1e4: Option<f64>,
    #[serde(rename = "1e-5")]
    at_1e5: Option<f64>,
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    master_seed: u64,
    n_drops: u64,
    tool_version: &'a str,
    /// The total-power constraint spans all APs in both SAT and JT.
    power_budget: &'a str,
    /// Quantiles are the lower order statistic at ceil(p*n), uninterpolated.
    quantile_estimator: &'a str,
    /// The distribution pools every (drop, AC) sample.
    sample_pooling: &'a str,
    diagnostics: &'a crate::engine::CampaignDiagnostics,
}

#[derive(Serialize)]
struct Summary<'a> {
    n_samples: u64,
    availability_db: AvailabilityLevels,
    median_db: f64,
    mean_db: f64,
    config: &'a ConfigFile,
    run: RunMetadata<'a>,
}

/// Writes manifest.json, samples.csv, cdf.csv, and summary.json.
pub fn write_campaign_outputs(
    dir: &Path,
    file_config: &ConfigFile,
    result: &CampaignResult,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;

    let manifest = Manifest {
        config: file_config,
        master_seed: result.master_seed,
        n_drops: result.n_drops,
        tool_version: TOOL_VERSION,
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    };
    std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;

    write_samples_csv(&dir.join("samples.csv"), result)?;
    write_cdf_csv(&dir.join("cdf.csv"), result)?;

    let sorted = result.distribution.sorted_linear();
    let n = sorted.len() as u64;
    let mean_linear = sorted.iter().sum::<f64>() / n as f64;
    let summary = Summary {
        n_samples: n,
        availability_db: AvailabilityLevels {
            at_1e3: availability(&sorted, 1e-3).ok(),
            at_1e4: availability(&sorted, 1e-4).ok(),
            at_1e5: availability(&sorted, 1e-5).ok(),
        },
        median_db: availability(&sorted, 0.5).expect("median always has enough samples"),
        mean_db: linear_to_db(mean_linear),
        config: file_config,
        run: RunMetadata {
            master_seed: result.master_seed,
            n_drops: result.n_drops,
            tool_version: TOOL_VERSION,
            power_budget: "global-sum",
            quantile_estimator: "lower-order-statistic",
            sample_pooling: "per-drop-per-ac",
            diagnostics: &result.diagnostics,
        },
    };
    std::fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    Ok(())
}

fn write_samples_csv(path: &Path, result: &CampaignResult) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "drop_id,ac_id,sinr_db")?;
    for s in &result.distribution.samples {
        writeln!(w, "{},{},{:.6}", s.drop_id, s.ac_id, s.sinr_db)?;
    }
    w.flush()?;
    Ok(())
}

/// At most 10^4 evenly spaced points of the empirical CDF.
fn write_cdf_csv(path: &Path, result: &CampaignResult) -> Result<()> {
    let sorted = result.distribution.sorted_linear();
    let n = sorted.len() as u64;
    let points = n.min(10_000);
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "sinr_db,empirical_cdf")?;
    for j in 1..=points {
        let index = (j * n).div_ceil(points); // 1-based
        let value_db = linear_to_db(sorted[index as usize - 1]);
        writeln!(w, "{:.6},{}", value_db, index as f64 / n as f64)?;
    }
    w.flush()?;
    Ok(())
}

fn fmt_db(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn print_campaign_report(result: &CampaignResult, out: &Path) {
    let sorted = result.distribution.sorted_linear();
    println!(
        "{} samples from {} drops in {:.2} s",
        result.distribution.n(),
        result.n_drops,
        result.wall_time.as_secs_f64()
    );
    for (label, level) in [("1e-3", 1e-3), ("1e-4", 1e-4), ("1e-5", 1e-5)] {
        match availability(&sorted, level) {
            Ok(db) => println!("availability@{label}: {db:.3} dB"),
            Err(_) => println!("availability@{label}: insufficient samples"),
        }
    }
    println!(
        "median: {:.3} dB",
        availability(&sorted, 0.5).expect("median")
    );
    if result.diagnostics.n_drops_condition_above_1e12 > 0 {
        println!(
            "note: {} drop(s) had Gram condition number above 1e12 (worst {:.3e})",
            result.diagnostics.n_drops_condition_above_1e12,
            result
                .diagnostics
                .max_zf_condition_number
                .unwrap_or(f64::NAN)
        );
    }
    println!("results in {}", out.display());
}
