//! True-SINR evaluation and distribution statistics.
//!
//! Quantiles use the lower order statistic at 1-based index `ceil(p*n)` of
//! the ascending-sorted samples — conservative for tail availability and
//! deterministic. Statistics are computed on linear SINRs and reported
//! in dB.

use crate::beamforming::PrecodingMatrix;
use crate::error::{Error, Result};
use crate::noise::NoiseVector;
use crate::power::PowerVector;
use crate::units::linear_to_db;
use nalgebra::{Complex, DMatrix};

/// One pooled SINR observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrSample {
    pub drop_id: u32,
    pub ac_id: u32,
    pub sinr_linear: f64,
    pub sinr_db: f64,
}

/// Flat pool of per-(drop, AC) SINR samples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SinrDistribution {
    pub samples: Vec<SinrSample>,
}

impl SinrDistribution {
    pub fn with_capacity(n: usize) -> Self {
        SinrDistribution {
            samples: Vec::with_capacity(n),
        }
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn push(&mut self, drop_id: u32, ac_id: u32, sinr_linear: f64) {
        self.samples.push(SinrSample {
            drop_id,
            ac_id,
            sinr_linear,
            sinr_db: linear_to_db(sinr_linear),
        });
    }

    /// Appends another pool; merging is order-independent for every
    /// reported statistic because sorting happens at query time.
    pub fn merge(&mut self, other: SinrDistribution) {
        self.samples.extend(other.samples);
    }

    /// Ascending linear SINR values.
    pub fn sorted_linear(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.samples.iter().map(|s| s.sinr_linear).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    /// SINR availability (dB) at the given outage level, e.g. 1e-5 for the
    /// 99.999% availability.
    pub fn availability_db(&self, level: f64) -> Result<f64> {
        availability(&self.sorted_linear(), level)
    }
}

/// Effective complex gains `h * G`: entry (k, m) is the reach of beam m
/// into receiver k.
pub fn effective_gains(
    h: &DMatrix<Complex<f64>>,
    precoder: &PrecodingMatrix,
) -> DMatrix<Complex<f64>> {
    h * &precoder.g
}

/// SINR of every AC from precomputed effective gains.
pub fn sinr_from_gains(
    gains: &DMatrix<Complex<f64>>,
    power: &PowerVector,
    noise: &NoiseVector,
) -> Vec<f64> {
    let k = gains.nrows();
    (0..k)
        .map(|i| {
            let signal = gains[(i, i)].norm_sqr() * power.p[i];
            let interference: f64 = (0..k)
                .filter(|&m| m != i)
                .map(|m| gains[(i, m)].norm_sqr() * power.p[m])
                .sum();
            signal / (noise.sigma_k2[i] + interference)
        })
        .collect()
}

/// True SINR per AC. SAT columns are zero outside the serving AP's block,
/// so the one formula covers both transmission modes.
pub fn sinr(
    h: &DMatrix<Complex<f64>>,
    precoder: &PrecodingMatrix,
    power: &PowerVector,
    noise: &NoiseVector,
) -> Vec<f64> {
    sinr_from_gains(&effective_gains(h, precoder), power, noise)
}

/// Order-statistic quantile of ascending-sorted `samples` at probability
/// `p`: the value at 1-based index `ceil(p*n)`.
///
/// Requires `p*n >= 1`; warns on stderr when `p*n < 10`, where the
/// estimator is unstable.
pub fn empirical_quantile(sorted: &[f64], p: f64) -> Result<f64> {
    let n = sorted.len() as u64;
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain(format!(
            "quantile level must lie in (0, 1], got {p}"
        )));
    }
    let pn = p * n as f64;
    if pn < 1.0 {
        return Err(Error::InsufficientSamples {
            level: p,
            needed: (1.0 / p).ceil() as u64,
            available: n,
        });
    }
    if pn < 10.0 {
        eprintln!(
            "warning: quantile at p={p} rests on only {} tail samples (p*n = {pn:.2} < 10); \
             the estimate is unstable",
            pn.ceil() as u64
        );
    }
    // Guard the ceil against one-ulp overshoot in p*n (e.g. 0.2 * 10).
    let index = (pn * (1.0 - 1e-12)).ceil() as usize;
    Ok(sorted[index.clamp(1, n as usize) - 1])
}

/// Availability in dB: the `level`-quantile of the linear samples.
pub fn availability(sorted_linear: &[f64], level: f64) -> Result<f64> {
    empirical_quantile(sorted_linear, level).map(linear_to_db)
}
