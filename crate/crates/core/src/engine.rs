//! Monte Carlo campaign runner.
//!
//! Every random quantity is redrawn each drop: AC positions, LOS states,
//! shadowing, fading, estimation noise, impulsive events. A drop is fully
//! determined by the config, the master seed, and its index (see [`crate::rng`]),
//! so campaigns produce identical output for any worker count, and drop
//! failures abort the campaign rather than silently biasing the tail.

use crate::beamforming::{associate, build_precoder};
use crate::channel::build_channel;
use crate::csi::estimate_all;
use crate::error::{Error, Result};
use crate::metrics::{effective_gains, sinr_from_gains, SinrDistribution};
use crate::noise::{sample_impulsive, thermal_noise_power};
use crate::power::{build_mpa_instance, epa, mpa_solve};
use crate::rng::{DropStreams, Stage};
use crate::scenario::{drop_acs, ConfigFile, PowerRule, ScenarioConfig};
use rayon::prelude::*;
use serde::Serialize;
use std::time::{Duration, Instant};

/// Gram condition numbers above this are counted as ill-conditioned in the
/// campaign diagnostics. Reporting only; results are never clipped.
pub const CONDITION_REPORT_THRESHOLD: f64 = 1e12;

/// Per-drop diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DropDiagnostics {
    /// Condition number of the worst Gram matrix inverted for ZF/CZF.
    pub zf_condition_number: Option<f64>,
    pub n_impulsive_events: usize,
    pub n_los_links: usize,
    pub min_power: f64,
    pub max_power: f64,
    /// Worst ratio of the interference term to the signal term across ACs.
    pub max_cross_to_signal: f64,
}

/// Outcome of a single drop.
#[derive(Debug, Clone, PartialEq)]
pub struct DropResult {
    /// Linear SINR of every AC.
    pub sinr: Vec<f64>,
    pub diagnostics: DropDiagnostics,
}

/// Aggregated campaign diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CampaignDiagnostics {
    pub max_zf_condition_number: Option<f64>,
    pub n_drops_condition_above_1e12: u64,
    pub total_impulsive_events: u64,
    pub total_los_links: u64,
}

impl CampaignDiagnostics {
    fn absorb(&mut self, drop: &DropDiagnostics) {
        if let Some(c) = drop.zf_condition_number {
            self.max_zf_condition_number =
                Some(self.max_zf_condition_number.map_or(c, |m| m.max(c)));
            if c > CONDITION_REPORT_THRESHOLD {
                self.n_drops_condition_above_1e12 += 1;
            }
        }
        self.total_impulsive_events += drop.n_impulsive_events as u64;
        self.total_los_links += drop.n_los_links as u64;
    }

    fn merge(&mut self, other: CampaignDiagnostics) {
        self.max_zf_condition_number =
            match (self.max_zf_condition_number, other.max_zf_condition_number) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            };
        self.n_drops_condition_above_1e12 += other.n_drops_condition_above_1e12;
        self.total_impulsive_events += other.total_impulsive_events;
        self.total_los_links += other.total_los_links;
    }
}

/// Result of a full campaign.
#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub distribution: SinrDistribution,
    pub config: ScenarioConfig,
    pub master_seed: u64,
    pub n_drops: u64,
    pub wall_time: Duration,
    pub diagnostics: CampaignDiagnostics,
}

/// Runs one drop: positions, channel, noise, estimates, association,
/// precoder, power, true SINR. Deterministic given `(cfg, streams)`.
pub fn run_drop(cfg: &ScenarioConfig, streams: &DropStreams) -> Result<DropResult> {
    let mut pos_rng = streams.stage(Stage::AcPositions);
    let ac_positions = drop_acs(cfg.num_acs, &cfg.hall, &mut pos_rng)?;

    let mut ls_rng = streams.stage(Stage::LargeScale);
    let mut fading_rng = streams.stage(Stage::Fading);
    let real = build_channel(cfg, &ac_positions, &mut ls_rng, &mut fading_rng)?;

    let sigma_w2 = thermal_noise_power(cfg.budget.bandwidth_hz, cfg.budget.noise_figure_db);
    let mut imp_rng = streams.stage(Stage::Impulsive);
    let noise = sample_impulsive(&cfg.impulsive, sigma_w2, cfg.num_acs, &mut imp_rng);

    let mut est_rng = streams.stage(Stage::Estimation);
    let real = estimate_all(real, cfg, &mut est_rng)?;
    let h_hat = real.h_hat.as_ref().expect("estimate_all fills h_hat");

    let assoc = associate(&real.beta);
    let precoder = build_precoder(
        cfg.mode,
        cfg.scheme,
        h_hat,
        &assoc,
        cfg.deployment.antennas_per_ap,
    )?;

    let power = match cfg.power_rule {
        PowerRule::Epa => epa(cfg.num_acs, cfg.budget.total_power_w),
        PowerRule::Mpa => {
            let inst = build_mpa_instance(h_hat, &precoder, &noise, cfg.budget.total_power_w)?;
            mpa_solve(&inst)?
        }
    };

    let gains = effective_gains(&real.h, &precoder);
    let sinr = sinr_from_gains(&gains, &power, &noise);
    for (k, &s) in sinr.iter().enumerate() {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Numerical(format!(
                "SINR of AC {k} is not positive and finite: {s}"
            )));
        }
    }

    let mut max_cross_to_signal: f64 = 0.0;
    for i in 0..cfg.num_acs {
        let signal = gains[(i, i)].norm_sqr() * power.p[i];
        let cross: f64 = (0..cfg.num_acs)
            .filter(|&m| m != i)
            .map(|m| gains[(i, m)].norm_sqr() * power.p[m])
            .sum();
        if signal > 0.0 {
            max_cross_to_signal = max_cross_to_signal.max(cross / signal);
        }
    }

    Ok(DropResult {
        sinr,
        diagnostics: DropDiagnostics {
            zf_condition_number: precoder.zf_condition,
            n_impulsive_events: noise.n_events(),
            n_los_links: real.beta.n_los(),
            min_power: power.min(),
            max_power: power.max(),
            max_cross_to_signal,
        },
    })
}

#[derive(Default)]
struct Accumulator {
    distribution: SinrDistribution,
    diagnostics: CampaignDiagnostics,
    /// Error with the smallest drop index, for deterministic fail-fast.
    error: Option<(u64, Error)>,
}

impl Accumulator {
    fn absorb(&mut self, drop_index: u64, outcome: Result<DropResult>) {
        if self.error.is_some() {
            return;
        }
        match outcome {
            Ok(drop) => {
                for (ac, &s) in drop.sinr.iter().enumerate() {
                    self.distribution.push(drop_index as u32, ac as u32, s);
                }
                self.diagnostics.absorb(&drop.diagnostics);
            }
            Err(e) => self.error = Some((drop_index, e)),
        }
    }

    fn merge(mut self, other: Accumulator) -> Accumulator {
        self.error = match (self.error.take(), other.error) {
            (Some(a), Some(b)) => Some(if a.0 <= b.0 { a } else { b }),
            (a, b) => a.or(b),
        };
        if self.error.is_none() {
            self.distribution.merge(other.distribution);
            self.diagnostics.merge(other.diagnostics);
        }
        self
    }
}

/// Runs `n_drops` drops with seeds derived from `master_seed` and pools the
/// samples. `workers = 0` uses all cores; the result is identical for any
/// worker count.
pub fn run_campaign(
    cfg: &ScenarioConfig,
    n_drops: u64,
    master_seed: u64,
    workers: usize,
) -> Result<CampaignResult> {
    if n_drops == 0 {
        return Err(Error::config("drops", "drops must be >= 1"));
    }
    let start = Instant::now();

    let body = || {
        (0..n_drops)
            .into_par_iter()
            .fold(Accumulator::default, |mut acc, i| {
                if acc.error.is_none() {
                    let streams = DropStreams::new(master_seed, i);
                    acc.absorb(i, run_drop(cfg, &streams).map_err(|e| e.in_drop(i)));
                }
                acc
            })
            .reduce(Accumulator::default, Accumulator::merge)
    };

    let mut acc = if workers == 0 {
        body()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Internal(format!("worker pool: {e}")))?
            .install(body)
    };

    if let Some((_, err)) = acc.error.take() {
        return Err(err);
    }
    // Canonical order regardless of scheduling.
    acc.distribution
        .samples
        .sort_by_key(|s| (s.drop_id, s.ac_id));

    Ok(CampaignResult {
        distribution: acc.distribution,
        config: cfg.clone(),
        master_seed,
        n_drops,
        wall_time: start.elapsed(),
        diagnostics: acc.diagnostics,
    })
}

/// Sweepable config axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    NumAcs,
    Epsilon,
    NumAps,
    Scheme,
    Mode,
    PowerRule,
    Csi,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "K" | "k" => Ok(SweepParam::NumAcs),
            "epsilon" => Ok(SweepParam::Epsilon),
            "J" | "j" => Ok(SweepParam::NumAps),
            "scheme" => Ok(SweepParam::Scheme),
            "mode" => Ok(SweepParam::Mode),
            "power_rule" => Ok(SweepParam::PowerRule),
            "csi" => Ok(SweepParam::Csi),
            other => Err(Error::config(
                "param",
                format!("unsupported sweep parameter `{other}` (expected K, epsilon, J, scheme, mode, power_rule, or csi)"),
            )),
        }
    }
}

impl std::fmt::Display for SweepParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            SweepParam::NumAcs => "K",
            SweepParam::Epsilon => "epsilon",
            SweepParam::NumAps => "J",
            SweepParam::Scheme => "scheme",
            SweepParam::Mode => "mode",
            SweepParam::PowerRule => "power_rule",
            SweepParam::Csi => "csi",
        };
        f.write_str(name)
    }
}

/// Applies one sweep value to a copy of the base config file.
pub fn apply_sweep_value(base: &ConfigFile, param: SweepParam, value: &str) -> Result<ConfigFile> {
    let mut file = base.clone();
    let bad = |what: &str| Error::config("values", format!("cannot parse `{value}` as {what}"));
    match param {
        SweepParam::NumAcs => {
            file.num_acs = value.parse().map_err(|_| bad("a count"))?;
        }
        SweepParam::Epsilon => {
            file.impulsive.epsilon = value.parse().map_err(|_| bad("a probability"))?;
        }
        SweepParam::NumAps => {
            file.deployment.num_aps = value.parse().map_err(|_| bad("a count"))?;
        }
        SweepParam::Scheme => file.scheme = value.parse()?,
        SweepParam::Mode => file.mode = value.parse()?,
        SweepParam::PowerRule => file.power_rule = value.parse()?,
        SweepParam::Csi => file.csi = value.parse()?,
    }
    Ok(file)
}

/// One row of a sweep.
#[derive(Debug)]
pub struct SweepEntry {
    pub value: String,
    pub outcome: Result<(ConfigFile, CampaignResult)>,
}

/// Runs one campaign per sweep value, re-validating each config. All
/// campaigns share the master seed, so drops are matched across values.
/// Invalid values are reported in their entry and the sweep continues.
pub fn run_sweep(
    base: &ConfigFile,
    param: SweepParam,
    values: &[String],
    n_drops: u64,
    master_seed: u64,
    workers: usize,
) -> Vec<SweepEntry> {
    values
        .iter()
        .map(|value| {
            let outcome = apply_sweep_value(base, param, value)
                .and_then(|file| file.to_scenario().map(|cfg| (file, cfg)))
                .and_then(|(file, cfg)| {
                    run_campaign(&cfg, n_drops, master_seed, workers).map(|r| (file, r))
                });
            SweepEntry {
                value: value.clone(),
                outcome,
            }
        })
        .collect()
}
