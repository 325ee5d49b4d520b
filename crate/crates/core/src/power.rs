//! Downlink power allocation: equal split (EPA) and max-min SINR (MPA).
//!
//! MPA maximizes the minimum estimated SINR under a total power budget.
//! With `R` the normalized cross-gain matrix, `f` the normalized noise
//! vector and `q` the beamformer energies, the optimum is read off the
//! dominant eigenvector `w` of the augmented nonnegative matrix
//!
//! ```text
//! D = | R            f          |
//!     | q^T R / P    q^T f / P  |
//! ```
//!
//! as `P_k = w_k / w_{K+1}`: at the optimum every AC attains the same
//! estimated SINR `1/lambda_max` and the budget holds with equality. A
//! bisection-on-target-SINR oracle ([`mpa_oracle`]) provides an independent
//! check of the eigenvector route.

use crate::beamforming::PrecodingMatrix;
use crate::error::{Error, Result};
use crate::noise::NoiseVector;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Per-AC transmit powers, watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerVector {
    pub p: Vec<f64>,
}

impl PowerVector {
    pub fn min(&self) -> f64 {
        self.p.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.p.iter().copied().fold(0.0, f64::max)
    }
}

/// Normalized max-min instance: `R` is the K x K cross-gain matrix with a
/// zero diagonal, `f` the noise-over-direct-gain vector, `q` the beamformer
/// energies, `p_ap` the total budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpaInstance {
    #[serde(rename = "R")]
    pub r: Vec<Vec<f64>>,
    pub f: Vec<f64>,
    pub q: Vec<f64>,
    pub p_ap: f64,
}

/// Iteration cap for the dominant-eigenvector power iteration.
const POWER_ITERATION_CAP: usize = 10_000;
/// Max-norm convergence threshold on successive normalized iterates.
const POWER_ITERATION_TOL: f64 = 1e-12;

impl MpaInstance {
    pub fn num_acs(&self) -> usize {
        self.f.len()
    }

    /// Structural validation of a (possibly externally loaded) instance.
    pub fn validate(&self) -> Result<()> {
        let k = self.f.len();
        if k == 0 {
            return Err(Error::Domain("MPA instance needs at least one AC".into()));
        }
        if self.r.len() != k || self.r.iter().any(|row| row.len() != k) {
            return Err(Error::Dimension(format!("R must be {k}x{k} to match f")));
        }
        if self.q.len() != k {
            return Err(Error::Dimension(format!("q must have length {k}")));
        }
        for (i, row) in self.r.iter().enumerate() {
            if row[i] != 0.0 {
                return Err(Error::Domain(format!(
                    "R must have a zero diagonal, R[{i}][{i}] = {}",
                    row[i]
                )));
            }
            if row.iter().any(|&v| v < 0.0 || !v.is_finite()) {
                return Err(Error::Domain(format!(
                    "R row {i} has a negative or non-finite entry"
                )));
            }
        }
        if self.f.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
            return Err(Error::Domain("f must be strictly positive".into()));
        }
        if self.q.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
            return Err(Error::Domain("q must be strictly positive".into()));
        }
        if !(self.p_ap > 0.0) {
            return Err(Error::Domain("p_ap must be positive".into()));
        }
        Ok(())
    }

    /// Estimated SINR of every AC under allocation `p`.
    pub fn sinr(&self, p: &[f64]) -> Vec<f64> {
        let k = self.num_acs();
        (0..k)
            .map(|i| {
                let interference: f64 = (0..k).map(|m| self.r[i][m] * p[m]).sum();
                p[i] / (self.f[i] + interference)
            })
            .collect()
    }

    /// Minimum estimated SINR under allocation `p`.
    pub fn min_sinr(&self, p: &[f64]) -> f64 {
        self.sinr(p).into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Total weighted power `q^T p` of an allocation.
    pub fn spent(&self, p: &[f64]) -> f64 {
        self.q.iter().zip(p).map(|(&q, &p)| q * p).sum()
    }

    /// Random instance for solver cross-checks. Cross gains are log-uniform
    /// in [1e-4, 1], noise terms log-uniform in [1e-3, 10], beamformer
    /// energies log-uniform in [0.5, 2], and the budget log-uniform in
    /// [0.1, 10].
    pub fn random<R: Rng + ?Sized>(k: usize, rng: &mut R) -> MpaInstance {
        let log_uniform = |rng: &mut R, lo: f64, hi: f64| -> f64 {
            10f64.powf(lo + (hi - lo) * rng.gen::<f64>())
        };
        let mut r = vec![vec![0.0; k]; k];
        for (i, row) in r.iter_mut().enumerate() {
            for (m, v) in row.iter_mut().enumerate() {
                if m != i {
                    *v = log_uniform(rng, -4.0, 0.0);
                }
            }
        }
        MpaInstance {
            r,
            f: (0..k).map(|_| log_uniform(rng, -3.0, 1.0)).collect(),
            q: (0..k)
                .map(|_| log_uniform(rng, -0.30103, 0.30103))
                .collect(),
            p_ap: log_uniform(rng, -1.0, 1.0),
        }
    }
}

/// Equal power allocation: the budget split evenly across ACs.
pub fn epa(num_acs: usize, p_ap: f64) -> PowerVector {
    PowerVector {
        p: vec![p_ap / num_acs as f64; num_acs],
    }
}

/// Builds the max-min instance from estimated channels, the precoder, and
/// the realized noise powers.
pub fn build_mpa_instance(
    h_hat: &DMatrix<nalgebra::Complex<f64>>,
    precoder: &PrecodingMatrix,
    noise: &NoiseVector,
    p_ap: f64,
) -> Result<MpaInstance> {
    let k = h_hat.nrows();
    let eff = h_hat * &precoder.g;
    let mut direct = Vec::with_capacity(k);
    for i in 0..k {
        let d = eff[(i, i)].norm_sqr();
        if d == 0.0 {
            return Err(Error::DegenerateChannel(format!(
                "AC {i} has zero estimated beamforming gain"
            )));
        }
        direct.push(d);
    }
    let mut r = vec![vec![0.0; k]; k];
    for (i, row) in r.iter_mut().enumerate() {
        for (m, v) in row.iter_mut().enumerate() {
            if m != i {
                *v = eff[(i, m)].norm_sqr() / direct[i];
            }
        }
    }
    let f = (0..k).map(|i| noise.sigma_k2[i] / direct[i]).collect();
    let q = (0..k)
        .map(|m| precoder.g.column(m).norm_squared())
        .collect();
    Ok(MpaInstance { r, f, q, p_ap })
}

/// Solves the max-min allocation through the dominant eigenvector of the
/// augmented matrix; falls back to the interference-free closed form when
/// `R` is exactly zero.
pub fn mpa_solve(inst: &MpaInstance) -> Result<PowerVector> {
    inst.validate()?;
    let k = inst.num_acs();

    if inst.r.iter().all(|row| row.iter().all(|&v| v == 0.0)) {
        // Fully decoupled: each AC gets power proportional to its noise
        // floor, exhausting the budget.
        let denom: f64 = inst.q.iter().zip(&inst.f).map(|(&q, &f)| q * f).sum();
        return Ok(PowerVector {
            p: inst.f.iter().map(|&f| f * inst.p_ap / denom).collect(),
        });
    }

    let mut d = DMatrix::<f64>::zeros(k + 1, k + 1);
    for i in 0..k {
        for m in 0..k {
            d[(i, m)] = inst.r[i][m];
        }
        d[(i, k)] = inst.f[i];
    }
    for m in 0..k {
        d[(k, m)] = (0..k).map(|i| inst.q[i] * inst.r[i][m]).sum::<f64>() / inst.p_ap;
    }
    d[(k, k)] = inst
        .q
        .iter()
        .zip(&inst.f)
        .map(|(&q, &f)| q * f)
        .sum::<f64>()
        / inst.p_ap;

    let mut w = DVector::<f64>::repeat(k + 1, 1.0);
    let mut converged = false;
    for _ in 0..POWER_ITERATION_CAP {
        let mut next = &d * &w;
        let scale = next.amax();
        if scale == 0.0 || !scale.is_finite() {
            return Err(Error::Numerical(
                "power iteration collapsed to a non-finite iterate".into(),
            ));
        }
        next /= scale;
        let diff = (&next - &w).amax();
        w = next;
        if diff < POWER_ITERATION_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "power iteration did not converge within {POWER_ITERATION_CAP} iterations"
        )));
    }
    // Eigenvectors are defined up to sign; make the budget entry positive.
    if w[k] < 0.0 {
        w.neg_mut();
    }
    if w[k] <= 0.0 {
        return Err(Error::Numerical(
            "dominant eigenvector has a vanishing budget component".into(),
        ));
    }

    let mut p: Vec<f64> = (0..k).map(|i| w[i] / w[k]).collect();
    for (i, v) in p.iter_mut().enumerate() {
        if *v < 0.0 {
            if *v < -1e-9 * inst.p_ap {
                return Err(Error::Numerical(format!(
                    "max-min allocation produced a negative power for AC {i}: {v}"
                )));
            }
            *v = 0.0;
        }
    }
    Ok(PowerVector { p })
}

/// Independent max-min oracle: bisection on the target SINR `t`, testing
/// feasibility of each candidate through the monotone fixed point
/// `p = t (R p + f)` and the budget `q^T p <= p_ap`. Returns the allocation
/// at the largest feasible target once the bracket is relatively narrower
/// than `tol`.
pub fn mpa_oracle(inst: &MpaInstance, tol: f64) -> Result<PowerVector> {
    inst.validate()?;
    if !(tol > 0.0) {
        return Err(Error::Domain("oracle tolerance must be positive".into()));
    }
    let k = inst.num_acs();

    // The fixed-point iteration from zero is monotone nondecreasing, so the
    // budget can be checked on the fly: once q^T p exceeds the budget the
    // limit does too and t is infeasible.
    let feasible = |t: f64| -> Option<Vec<f64>> {
        if t == 0.0 {
            return Some(vec![0.0; k]);
        }
        let mut p = vec![0.0; k];
        for _ in 0..200_000 {
            let mut next = vec![0.0; k];
            let mut max_diff = 0.0f64;
            let mut scale = 0.0f64;
            for i in 0..k {
                let coupling: f64 = (0..k).map(|m| inst.r[i][m] * p[m]).sum();
                next[i] = t * (coupling + inst.f[i]);
                max_diff = max_diff.max((next[i] - p[i]).abs());
                scale = scale.max(next[i]);
            }
            if inst.spent(&next) > inst.p_ap * (1.0 + 1e-12) {
                return None;
            }
            p = next;
            if max_diff <= 1e-15 * scale {
                return Some(p);
            }
        }
        // No convergence within the cap: treat the target as infeasible.
        None
    };

    let mut lo = 0.0f64;
    let mut p_lo = vec![0.0; k];
    let mut hi = 1.0f64;
    let mut doublings = 0;
    while let Some(p) = feasible(hi) {
        lo = hi;
        p_lo = p;
        hi *= 2.0;
        doublings += 1;
        if doublings > 2_000 {
            return Err(Error::Numerical(
                "max-min oracle failed to bracket the optimum".into(),
            ));
        }
    }

    let mut steps = 0;
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        match feasible(mid) {
            Some(p) => {
                lo = mid;
                p_lo = p;
            }
            None => hi = mid,
        }
        steps += 1;
        if steps > 10_000 {
            break;
        }
    }
    Ok(PowerVector { p: p_lo })
}
