//! Industrial channel model: log-distance path loss with a
//! distance-dependent LOS probability, log-normal shadowing, and i.i.d.
//! Rayleigh small-scale fading.
//!
//! Path loss follows `PL = A + B*log10(d_3D) + C*log10(f_GHz)` with separate
//! LOS/NLOS triples. The default constants are the dense-clutter,
//! clutter-embedded indoor-factory parameterization (LOS 31.84/21.50/19.00
//! with 4.3 dB shadowing, NLOS 18.6/35.7/20.0 with 7.2 dB shadowing) with
//! `P_LOS(d_2D) = exp(-d_2D/d_c)` and `d_c = 8.7 m`, i.e. P_LOS(20 m) ~ 0.1.
//! Every constant is config-overridable.

use crate::error::{Error, Result};
use crate::scenario::{Point3, ScenarioConfig};
use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// One `A + B*log10(d) + C*log10(f)` path-loss line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLossTriple {
    /// Intercept A in dB.
    #[serde(rename = "a")]
    pub intercept_db: f64,
    /// Distance coefficient B (multiplies log10 of the 3D distance in m).
    #[serde(rename = "b")]
    pub dist_coeff: f64,
    /// Frequency coefficient C (multiplies log10 of the carrier in GHz).
    #[serde(rename = "c")]
    pub freq_coeff: f64,
}

/// Large-scale channel model parameters (`channel` config section).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelModelParams {
    pub pl_los: PathLossTriple,
    pub pl_nlos: PathLossTriple,
    pub shadow_sigma_los_db: f64,
    pub shadow_sigma_nlos_db: f64,
    /// Decay constant d_c of the exponential LOS probability, meters.
    pub los_decay_m: f64,
    /// Minimum 3D distance; shorter links are clamped before the log.
    pub d_min_m: f64,
}

impl Default for ChannelModelParams {
    fn default() -> Self {
        ChannelModelParams {
            pl_los: PathLossTriple {
                intercept_db: 31.84,
                dist_coeff: 21.50,
                freq_coeff: 19.00,
            },
            pl_nlos: PathLossTriple {
                intercept_db: 18.60,
                dist_coeff: 35.70,
                freq_coeff: 20.00,
            },
            shadow_sigma_los_db: 4.3,
            shadow_sigma_nlos_db: 7.2,
            los_decay_m: 8.7,
            d_min_m: 1.0,
        }
    }
}

/// Per-link large-scale gains and LOS states for one drop, K ACs x J APs.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScaleTable {
    pub num_acs: usize,
    pub num_aps: usize,
    beta: Vec<f64>,
    los: Vec<bool>,
}

impl LargeScaleTable {
    pub fn new(num_acs: usize, num_aps: usize) -> Self {
        LargeScaleTable {
            num_acs,
            num_aps,
            beta: vec![0.0; num_acs * num_aps],
            los: vec![false; num_acs * num_aps],
        }
    }

    /// Linear power gain of the (AC k, AP j) link.
    pub fn beta(&self, ac: usize, ap: usize) -> f64 {
        self.beta[ac * self.num_aps + ap]
    }

    /// LOS state of the (AC k, AP j) link.
    pub fn is_los(&self, ac: usize, ap: usize) -> bool {
        self.los[ac * self.num_aps + ap]
    }

    pub fn set(&mut self, ac: usize, ap: usize, beta: f64, los: bool) {
        self.beta[ac * self.num_aps + ap] = beta;
        self.los[ac * self.num_aps + ap] = los;
    }

    /// Number of LOS links in the table.
    pub fn n_los(&self) -> usize {
        self.los.iter().filter(|&&v| v).count()
    }
}

/// True and estimated channels for one drop.
///
/// Row k of `h` concatenates the per-AP blocks of AC k: antenna m of AP j
/// sits at global column `j*M + m`. `h_hat` stays `None` until the CSI
/// stage fills it.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: DMatrix<Complex<f64>>,
    pub beta: LargeScaleTable,
    pub h_hat: Option<DMatrix<Complex<f64>>>,
}

/// LOS probability at horizontal distance `d_2d`: `exp(-d_2d/d_c)`.
pub fn los_probability(d_2d: f64, params: &ChannelModelParams) -> Result<f64> {
    if d_2d < 0.0 {
        return Err(Error::Domain(format!(
            "LOS probability needs a nonnegative distance, got {d_2d}"
        )));
    }
    Ok((-d_2d / params.los_decay_m).exp())
}

/// Path loss in dB at 3D distance `d_3d` (clamped to `d_min_m`) and carrier
/// `f_ghz`. In the NLOS state the loss is floored at the LOS value so the
/// two lines never cross.
pub fn path_loss_db(d_3d: f64, f_ghz: f64, los: bool, params: &ChannelModelParams) -> f64 {
    let d = d_3d.max(params.d_min_m);
    let line = |t: &PathLossTriple| {
        t.intercept_db + t.dist_coeff * d.log10() + t.freq_coeff * f_ghz.log10()
    };
    let pl_los = line(&params.pl_los);
    if los {
        pl_los
    } else {
        line(&params.pl_nlos).max(pl_los)
    }
}

/// Draws the LOS state and shadowing for one AP-AC link and returns the
/// linear large-scale gain together with the LOS state.
///
/// Consumes exactly one uniform draw (LOS) and one normal draw (shadowing).
pub fn large_scale_gain<R: Rng + ?Sized>(
    ap: &Point3,
    ac: &Point3,
    f_ghz: f64,
    params: &ChannelModelParams,
    rng: &mut R,
) -> Result<(f64, bool)> {
    let d_2d = ap.dist_2d(ac);
    let d_3d = ap.dist_3d(ac);
    let p_los = los_probability(d_2d, params)?;
    let los = rng.gen::<f64>() < p_los;
    let sigma = if los {
        params.shadow_sigma_los_db
    } else {
        params.shadow_sigma_nlos_db
    };
    let shadow_db: f64 = sigma * rng.sample::<f64, _>(StandardNormal);
    let pl_db = path_loss_db(d_3d, f_ghz, los, params);
    Ok((10f64.powf(-(pl_db + shadow_db) / 10.0), los))
}

/// One Rayleigh block: `sqrt(beta)` times a length-`m` vector of unit
/// variance complex normals (real/imag parts of variance 1/2 each).
pub(crate) fn rayleigh_row<R: Rng + ?Sized>(beta: f64, m: usize, rng: &mut R) -> Vec<Complex<f64>> {
    let scale = (beta / 2.0).sqrt();
    (0..m)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex::new(scale * re, scale * im)
        })
        .collect()
}

/// Generates the large-scale table and the true fading matrix for one drop.
///
/// `ls_rng` drives LOS/shadowing, `fading_rng` the small-scale fading; the
/// split keeps fading draws aligned across deployments with different J.
/// Links are visited AC-major, AP-minor.
pub fn build_channel<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    ac_positions: &[Point3],
    ls_rng: &mut R,
    fading_rng: &mut R,
) -> Result<ChannelRealization> {
    let k = ac_positions.len();
    let j = cfg.deployment.num_aps;
    let m = cfg.deployment.antennas_per_ap;
    let m_tot = cfg.deployment.total_antennas;
    let f_ghz = cfg.budget.carrier_hz / 1e9;

    let mut beta = LargeScaleTable::new(k, j);
    for (ac_idx, ac) in ac_positions.iter().enumerate() {
        for (ap_idx, ap) in cfg.deployment.ap_positions.iter().enumerate() {
            let (gain, los) = large_scale_gain(ap, ac, f_ghz, &cfg.channel, ls_rng)?;
            beta.set(ac_idx, ap_idx, gain, los);
        }
    }

    let mut entries = Vec::with_capacity(k * m_tot);
    for ac_idx in 0..k {
        for ap_idx in 0..j {
            entries.extend(rayleigh_row(beta.beta(ac_idx, ap_idx), m, fading_rng));
        }
    }
    let h = DMatrix::from_row_iterator(k, m_tot, entries);

    Ok(ChannelRealization {
        h,
        beta,
        h_hat: None,
    })
}
