//! AC-AP association and beamformer construction.
//!
//! Beamformers are unit-norm columns of an `M_TOT x K` matrix. Under SAT a
//! column is supported only on the antenna block of the serving AP; under
//! JT it spans all antennas. ZF columns come from the channel pseudo-inverse
//! `H^H (H H^H)^{-1}` with no regularization: ill-conditioned draws are part
//! of the tail statistics, so the solver only records the Gram condition
//! number and never clips.

use crate::channel::LargeScaleTable;
use crate::error::{Error, Result};
use crate::scenario::{BeamformingScheme, TransmissionMode};
use nalgebra::{Complex, DMatrix};

/// Anchor AP of every AC and the inverse served-set map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Association {
    /// `anchor[k]` is the AP with the strongest large-scale gain to AC k.
    pub anchor: Vec<usize>,
    /// `served[j]` lists the ACs anchored at AP j; the sets partition the ACs.
    pub served: Vec<Vec<usize>>,
}

/// Unit-norm beamforming columns, one per AC.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecodingMatrix {
    /// `M_TOT x K`; column k serves AC k.
    pub g: DMatrix<Complex<f64>>,
    /// Largest condition number of any Gram matrix inverted while building
    /// (ZF/CZF only).
    pub zf_condition: Option<f64>,
}

/// Anchors every AC at its strongest AP; ties break toward the lowest AP
/// index.
pub fn associate(beta: &LargeScaleTable) -> Association {
    let mut anchor = Vec::with_capacity(beta.num_acs);
    let mut served = vec![Vec::new(); beta.num_aps];
    for ac in 0..beta.num_acs {
        let mut best = 0usize;
        for ap in 1..beta.num_aps {
            if beta.beta(ac, ap) > beta.beta(ac, best) {
                best = ap;
            }
        }
        anchor.push(best);
        served[best].push(ac);
    }
    Association { anchor, served }
}

/// Maximum ratio transmission: the conjugate of the channel row, scaled to
/// unit norm.
pub fn mrt(h: &[Complex<f64>]) -> Result<Vec<Complex<f64>>> {
    let norm = h.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::DegenerateChannel(
            "MRT needs a nonzero channel vector".into(),
        ));
    }
    Ok(h.iter().map(|v| v.conj() / norm).collect())
}

/// Zero forcing over a `K x N` channel matrix: unit-norm columns of
/// `H^H (H H^H)^{-1}`, plus the condition number of the Gram matrix.
pub fn zf(h: &DMatrix<Complex<f64>>) -> Result<(DMatrix<Complex<f64>>, f64)> {
    let (k, n) = h.shape();
    if k > n {
        return Err(Error::Dimension(format!(
            "ZF needs at least as many antennas as ACs ({n} < {k})"
        )));
    }
    let gram = h * h.adjoint();
    let eigen = gram.clone().symmetric_eigen();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for ev in eigen.eigenvalues.iter() {
        lo = lo.min(ev.abs());
        hi = hi.max(ev.abs());
    }
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };

    let inv = gram.lu().try_inverse().ok_or_else(|| {
        Error::Numerical(format!(
            "Gram matrix exactly singular in ZF (condition {condition:e})"
        ))
    })?;
    let mut g = h.adjoint() * inv;
    for mut col in g.column_iter_mut() {
        let norm = col.norm();
        if norm == 0.0 {
            return Err(Error::DegenerateChannel(
                "ZF produced a zero beamforming column".into(),
            ));
        }
        col /= Complex::new(norm, 0.0);
    }
    Ok((g, condition))
}

/// Builds the full precoding matrix for one drop.
///
/// `h_hat` is the `K x M_TOT` channel the APs act on (true under perfect
/// CSI), `antennas_per_ap` fixes the per-AP block width.
pub fn build_precoder(
    mode: TransmissionMode,
    scheme: BeamformingScheme,
    h_hat: &DMatrix<Complex<f64>>,
    assoc: &Association,
    antennas_per_ap: usize,
) -> Result<PrecodingMatrix> {
    let k = h_hat.nrows();
    let m_tot = h_hat.ncols();
    let m = antennas_per_ap;
    debug_assert_eq!(m_tot % m, 0);
    let num_aps = m_tot / m;

    let mut g = DMatrix::zeros(m_tot, k);
    let mut worst_condition: Option<f64> = None;
    let mut track = |c: f64| {
        worst_condition = Some(worst_condition.map_or(c, |w: f64| w.max(c)));
    };

    match (mode, scheme) {
        (TransmissionMode::Jt, BeamformingScheme::Mrt) => {
            for ac in 0..k {
                let row: Vec<Complex<f64>> = h_hat.row(ac).iter().copied().collect();
                let col = mrt(&row)?;
                for (r, v) in col.into_iter().enumerate() {
                    g[(r, ac)] = v;
                }
            }
        }
        // Under JT every AC is served by all APs, so CZF degenerates to ZF.
        (TransmissionMode::Jt, BeamformingScheme::Zf | BeamformingScheme::Czf) => {
            if k > m_tot {
                return Err(Error::Dimension(format!(
                    "ZF under JT needs M_TOT >= K ({m_tot} < {k})"
                )));
            }
            let (cols, cond) = zf(h_hat)?;
            track(cond);
            g.copy_from(&cols);
        }
        (TransmissionMode::Sat, BeamformingScheme::Mrt) => {
            for ac in 0..k {
                let ap = assoc.anchor[ac];
                let block: Vec<Complex<f64>> = (0..m).map(|c| h_hat[(ac, ap * m + c)]).collect();
                let col = mrt(&block)?;
                for (r, v) in col.into_iter().enumerate() {
                    g[(ap * m + r, ac)] = v;
                }
            }
        }
        (TransmissionMode::Sat, BeamformingScheme::Zf) => {
            for ap in 0..num_aps {
                let served = &assoc.served[ap];
                if served.is_empty() {
                    continue;
                }
                if served.len() > m {
                    return Err(Error::Dimension(format!(
                        "SAT ZF at AP {ap}: {} served ACs exceed {m} antennas",
                        served.len()
                    )));
                }
                let sub = DMatrix::from_fn(served.len(), m, |r, c| h_hat[(served[r], ap * m + c)]);
                let (cols, cond) = zf(&sub)?;
                track(cond);
                for (i, &ac) in served.iter().enumerate() {
                    for r in 0..m {
                        g[(ap * m + r, ac)] = cols[(r, i)];
                    }
                }
            }
        }
        (TransmissionMode::Sat, BeamformingScheme::Czf) => {
            for ap in 0..num_aps {
                let served = &assoc.served[ap];
                if served.is_empty() {
                    continue;
                }
                if k > m {
                    return Err(Error::Dimension(format!(
                        "SAT CZF at AP {ap}: nulling toward all {k} ACs needs M >= K, have M = {m}"
                    )));
                }
                let sub = DMatrix::from_fn(k, m, |r, c| h_hat[(r, ap * m + c)]);
                let (cols, cond) = zf(&sub)?;
                track(cond);
                for &ac in served {
                    for r in 0..m {
                        g[(ap * m + r, ac)] = cols[(r, ac)];
                    }
                }
            }
        }
    }

    Ok(PrecodingMatrix {
        g,
        zf_condition: worst_condition,
    })
}
