//! Receiver noise: thermal floor plus Bernoulli-gated impulsive noise.
//!
//! Each AC sees `sigma_k^2 = sigma_w^2 + sigma_{k,i}^2`, where the impulsive
//! part is `Gamma * sigma_w^2` with probability `epsilon` and zero otherwise,
//! drawn independently per AC per drop.

use crate::units::db_to_linear;
use rand::Rng;

/// Impulsive-noise model parameters (linear power ratio).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpulsiveNoiseParams {
    /// Ratio Gamma between impulsive and thermal noise power.
    pub gamma_linear: f64,
    /// Probability that an impulsive event hits a given AC.
    pub epsilon: f64,
}

impl ImpulsiveNoiseParams {
    pub fn from_db(gamma_db: f64, epsilon: f64) -> Self {
        ImpulsiveNoiseParams {
            gamma_linear: db_to_linear(gamma_db),
            epsilon,
        }
    }
}

/// Per-drop noise powers, watts.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseVector {
    /// Thermal noise power (including the receiver noise figure).
    pub sigma_w2: f64,
    /// Impulsive power per AC; each entry is 0 or `gamma * sigma_w2`.
    pub sigma_ki2: Vec<f64>,
    /// Total noise power per AC.
    pub sigma_k2: Vec<f64>,
}

impl NoiseVector {
    /// Number of ACs with an active impulsive event.
    pub fn n_events(&self) -> usize {
        self.sigma_ki2.iter().filter(|&&v| v > 0.0).count()
    }
}

/// Thermal noise power over `bandwidth_hz` with the given receiver noise
/// figure: -174 dBm/Hz + 10*log10(B) + NF, converted to watts.
pub fn thermal_noise_power(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    let dbm = -174.0 + 10.0 * bandwidth_hz.log10() + noise_figure_db;
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Draws the impulsive state of each AC and assembles total noise powers.
///
/// Consumes exactly one uniform draw per AC.
pub fn sample_impulsive<R: Rng + ?Sized>(
    params: &ImpulsiveNoiseParams,
    sigma_w2: f64,
    num_acs: usize,
    rng: &mut R,
) -> NoiseVector {
    let sigma_ki2: Vec<f64> = (0..num_acs)
        .map(|_| {
            let event = rng.gen::<f64>() < params.epsilon;
            if event {
                params.gamma_linear * sigma_w2
            } else {
                0.0
            }
        })
        .collect();
    let sigma_k2 = sigma_ki2.iter().map(|&i| sigma_w2 + i).collect();
    NoiseVector {
        sigma_w2,
        sigma_ki2,
        sigma_k2,
    }
}
