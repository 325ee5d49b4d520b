//! MMSE channel estimation from orthogonal uplink pilots.
//!
//! With pilot SNR `gamma = P_AC * beta / sigma_AP^2` and pilot length `T`,
//! the per-block estimate is `h_hat = c * (h + z)` with shrinkage
//! `c = gamma*T / (1 + gamma*T)` and `z` complex normal with per-entry
//! variance `sigma_AP^2 / (P_AC * T)`. The resulting per-entry error
//! variance is `beta / (1 + gamma*T)`.
//!
//! Pilot symbols themselves are never simulated; the pilot length enters
//! only through the effective SNR `gamma*T`. AP-side noise is thermal only
//! (impulsive noise is an AC-receiver effect).

use crate::channel::ChannelRealization;
use crate::error::Result;
use crate::noise::thermal_noise_power;
use crate::scenario::{CsiMode, ScenarioConfig};
use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_distr::StandardNormal;

/// Inputs the estimator needs beyond the channel itself.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationContext {
    /// AC transmit power during training, watts.
    pub pilot_power_w: f64,
    /// Pilot length in symbols.
    pub pilot_len: usize,
    /// Noise power at each AP, watts.
    pub sigma_ap2: Vec<f64>,
}

impl EstimationContext {
    /// Context for a validated scenario: thermal noise at every AP.
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        let sigma = thermal_noise_power(cfg.budget.bandwidth_hz, cfg.budget.noise_figure_db);
        EstimationContext {
            pilot_power_w: cfg.budget.pilot_power_w,
            pilot_len: cfg.budget.pilot_len,
            sigma_ap2: vec![sigma; cfg.deployment.num_aps],
        }
    }

    /// Effective pilot SNR `gamma*T` for a link with large-scale gain `beta`
    /// observed at AP `ap`.
    pub fn pilot_snr_times_t(&self, beta: f64, ap: usize) -> f64 {
        self.pilot_power_w * beta / self.sigma_ap2[ap] * self.pilot_len as f64
    }
}

/// MMSE shrinkage coefficient `gamma*T / (1 + gamma*T)`.
pub fn shrinkage(gamma_t: f64) -> f64 {
    gamma_t / (1.0 + gamma_t)
}

/// Applies the MMSE shrinkage to an observed (noisy) channel block.
pub fn mmse_estimate(
    h: &[Complex<f64>],
    pilot_noise: &[Complex<f64>],
    coeff: f64,
) -> Vec<Complex<f64>> {
    h.iter()
        .zip(pilot_noise)
        .map(|(hv, zv)| (hv + zv) * coeff)
        .collect()
}

/// Estimates one (AC, AP) block: draws the pilot observation noise and
/// shrinks. Consumes `2 * h.len()` normal draws.
pub fn estimate_channel<R: Rng + ?Sized>(
    h_block: &[Complex<f64>],
    beta: f64,
    ctx: &EstimationContext,
    ap: usize,
    rng: &mut R,
) -> Vec<Complex<f64>> {
    let noise_var = ctx.sigma_ap2[ap] / (ctx.pilot_power_w * ctx.pilot_len as f64);
    let scale = (noise_var / 2.0).sqrt();
    let z: Vec<Complex<f64>> = (0..h_block.len())
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex::new(scale * re, scale * im)
        })
        .collect();
    let coeff = shrinkage(ctx.pilot_snr_times_t(beta, ap));
    mmse_estimate(h_block, &z, coeff)
}

/// Fills `h_hat` for a whole realization: pass-through under perfect CSI,
/// per-block independent MMSE estimates otherwise. Blocks are visited
/// AC-major, AP-minor.
pub fn estimate_all<R: Rng + ?Sized>(
    mut real: ChannelRealization,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<ChannelRealization> {
    match cfg.csi {
        CsiMode::Perfect => {
            real.h_hat = Some(real.h.clone());
        }
        CsiMode::Estimated => {
            let ctx = EstimationContext::from_config(cfg);
            let k = real.h.nrows();
            let j = cfg.deployment.num_aps;
            let m = cfg.deployment.antennas_per_ap;
            let mut h_hat = DMatrix::zeros(k, real.h.ncols());
            for ac in 0..k {
                for ap in 0..j {
                    let block: Vec<Complex<f64>> =
                        (0..m).map(|c| real.h[(ac, ap * m + c)]).collect();
                    let est = estimate_channel(&block, real.beta.beta(ac, ap), &ctx, ap, rng);
                    for (c, v) in est.into_iter().enumerate() {
                        h_hat[(ac, ap * m + c)] = v;
                    }
                }
            }
            real.h_hat = Some(h_hat);
        }
    }
    Ok(real)
}
