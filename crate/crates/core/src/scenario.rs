//! Factory scenario: hall geometry, AP deployments, AC drops, radio budgets,
//! and config-file loading/validation.
//!
//! Powers are converted to watts at load time; dBm appears only in the
//! config file and in reports.

use crate::channel::ChannelModelParams;
use crate::error::{Error, FieldError, Result};
use crate::noise::ImpulsiveNoiseParams;
use crate::units::dbm_to_watts;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// A point in hall coordinates, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    /// Horizontal (floor-plane) distance to another point.
    pub fn dist_2d(&self, other: &Point3) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    /// Full 3D distance to another point.
    pub fn dist_3d(&self, other: &Point3) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2))
            .sqrt()
    }
}

/// Rectangular factory hall with AP and AC mounting heights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HallGeometry {
    pub length_m: f64,
    pub width_m: f64,
    pub height_m: f64,
    pub ap_height_m: f64,
    pub ac_height_m: f64,
}

impl Default for HallGeometry {
    fn default() -> Self {
        HallGeometry {
            length_m: 100.0,
            width_m: 50.0,
            height_m: 6.0,
            ap_height_m: 6.0,
            ac_height_m: 2.0,
        }
    }
}

/// AP deployment: `num_aps` APs on a rectangular grid, each with
/// `antennas_per_ap` antennas, `total_antennas` in the whole hall.
#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub num_aps: usize,
    pub antennas_per_ap: usize,
    pub total_antennas: usize,
    pub ap_positions: Vec<Point3>,
}

/// Radio budgets for one simulated sub-band, all powers in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioBudget {
    pub bandwidth_hz: f64,
    pub carrier_hz: f64,
    /// Total downlink budget shared by all APs on the sub-band.
    pub total_power_w: f64,
    /// AC transmit power during uplink training.
    pub pilot_power_w: f64,
    pub noise_figure_db: f64,
    /// Pilot sequence length in symbols.
    pub pilot_len: usize,
}

/// How ACs are associated with APs for data transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransmissionMode {
    /// Single AP transmission: each AC is served only by its anchor AP.
    #[serde(alias = "SAT")]
    Sat,
    /// Joint transmission: all APs serve every AC as one distributed array.
    #[serde(alias = "JT")]
    Jt,
}

/// Beamformer family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BeamformingScheme {
    #[serde(alias = "MRT")]
    Mrt,
    #[serde(alias = "ZF")]
    Zf,
    /// Coordinated zero forcing: under SAT each AP also nulls toward the
    /// ACs it does not serve.
    #[serde(alias = "CZF")]
    Czf,
}

/// Downlink power allocation rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerRule {
    #[serde(alias = "EPA")]
    Epa,
    #[serde(alias = "MPA")]
    Mpa,
}

/// Channel knowledge available to the APs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsiMode {
    Perfect,
    Estimated,
}

/// Fully resolved experiment description, internal (linear) units.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub hall: HallGeometry,
    pub deployment: Deployment,
    pub budget: RadioBudget,
    /// Number of single-antenna ACs dropped per realization.
    pub num_acs: usize,
    pub mode: TransmissionMode,
    pub scheme: BeamformingScheme,
    pub power_rule: PowerRule,
    pub csi: CsiMode,
    pub impulsive: ImpulsiveNoiseParams,
    pub channel: ChannelModelParams,
}

/// Places `num_aps` APs at the centers of a rectangular grid of congruent
/// cells tiling the hall floor, at the AP mounting height.
///
/// The grid factorization a×b (a cells along the hall length) is chosen so
/// that a/b matches the hall aspect ratio as closely as possible, with ties
/// broken toward the squarer grid. A single AP goes to the hall center.
pub fn place_aps(num_aps: usize, hall: &HallGeometry, total_antennas: usize) -> Result<Deployment> {
    if num_aps == 0 {
        return Err(Error::config("deployment.J", "J must be >= 1"));
    }
    if total_antennas == 0 {
        return Err(Error::config("deployment.M_TOT", "M_TOT must be >= 1"));
    }
    if total_antennas % num_aps != 0 {
        return Err(Error::config(
            "deployment.J",
            format!("J must divide M_TOT (J={num_aps}, M_TOT={total_antennas})"),
        ));
    }
    let (along_length, along_width) = grid_factorization(num_aps, hall.length_m / hall.width_m)
        .ok_or_else(|| Error::config("deployment.J", "no admissible grid factorization"))?;

    let cell_len = hall.length_m / along_length as f64;
    let cell_wid = hall.width_m / along_width as f64;
    let mut ap_positions = Vec::with_capacity(num_aps);
    for row in 0..along_width {
        for col in 0..along_length {
            ap_positions.push(Point3::new(
                (col as f64 + 0.5) * cell_len,
                (row as f64 + 0.5) * cell_wid,
                hall.ap_height_m,
            ));
        }
    }
    Ok(Deployment {
        num_aps,
        antennas_per_ap: total_antennas / num_aps,
        total_antennas,
        ap_positions,
    })
}

/// Picks the a×b factorization of `n` whose aspect a/b best matches
/// `target_ratio`; ties go to the squarer grid, then to more cells along
/// the length.
fn grid_factorization(n: usize, target_ratio: f64) -> Option<(usize, usize)> {
    let mut best: Option<((f64, usize, isize), (usize, usize))> = None;
    for a in 1..=n {
        if n % a != 0 {
            continue;
        }
        let b = n / a;
        let r = a as f64 / b as f64;
        let score = (r / target_ratio).max(target_ratio / r);
        let key = (score, a.abs_diff(b), -(a as isize));
        if best.as_ref().is_none_or(|(k, _)| key < *k) {
            best = Some((key, (a, b)));
        }
    }
    best.map(|(_, pair)| pair)
}

/// Drops `num_acs` ACs uniformly on the hall floor at the AC height.
pub fn drop_acs<R: Rng + ?Sized>(
    num_acs: usize,
    hall: &HallGeometry,
    rng: &mut R,
) -> Result<Vec<Point3>> {
    if num_acs == 0 {
        return Err(Error::config("K", "K must be >= 1"));
    }
    Ok((0..num_acs)
        .map(|_| {
            Point3::new(
                rng.gen::<f64>() * hall.length_m,
                rng.gen::<f64>() * hall.width_m,
                hall.ac_height_m,
            )
        })
        .collect())
}

/// Checks every type invariant and cross-field compatibility rule; returns
/// the config unchanged when all hold, otherwise lists each violation with
/// the offending field.
pub fn validate_config(cfg: ScenarioConfig) -> Result<ScenarioConfig> {
    let mut errors = Vec::new();
    let mut fail = |field: &str, message: String| {
        errors.push(FieldError {
            field: field.to_string(),
            message,
        })
    };

    let hall = &cfg.hall;
    for (field, v) in [
        ("hall.length_m", hall.length_m),
        ("hall.width_m", hall.width_m),
        ("hall.height_m", hall.height_m),
        ("hall.ap_height_m", hall.ap_height_m),
        ("hall.ac_height_m", hall.ac_height_m),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            fail(field, format!("must be strictly positive, got {v}"));
        }
    }
    if hall.ap_height_m > hall.height_m {
        fail(
            "hall.ap_height_m",
            format!(
                "AP height {} exceeds hall height {}",
                hall.ap_height_m, hall.height_m
            ),
        );
    }
    if hall.ac_height_m >= hall.ap_height_m {
        fail(
            "hall.ac_height_m",
            format!(
                "AC height {} must be below AP height {}",
                hall.ac_height_m, hall.ap_height_m
            ),
        );
    }

    let dep = &cfg.deployment;
    if dep.num_aps == 0 {
        fail("deployment.J", "J must be >= 1".into());
    } else if dep.total_antennas % dep.num_aps != 0 {
        fail(
            "deployment.J",
            format!(
                "J must divide M_TOT (J={}, M_TOT={})",
                dep.num_aps, dep.total_antennas
            ),
        );
    }
    if dep.antennas_per_ap * dep.num_aps != dep.total_antennas {
        fail(
            "deployment.M_TOT",
            format!(
                "M*J must equal M_TOT exactly ({}*{} != {})",
                dep.antennas_per_ap, dep.num_aps, dep.total_antennas
            ),
        );
    }
    if dep.ap_positions.len() != dep.num_aps {
        fail(
            "deployment.J",
            format!(
                "expected {} AP positions, have {}",
                dep.num_aps,
                dep.ap_positions.len()
            ),
        );
    }
    for (i, p) in dep.ap_positions.iter().enumerate() {
        let inside = p.x >= 0.0
            && p.x <= hall.length_m
            && p.y >= 0.0
            && p.y <= hall.width_m
            && p.z == hall.ap_height_m;
        if !inside {
            fail(
                "deployment.ap_positions",
                format!("AP {i} at ({}, {}, {}) is outside the hall", p.x, p.y, p.z),
            );
        }
    }

    let budget = &cfg.budget;
    if !(budget.total_power_w > 0.0) {
        fail("budget.p_ap_dbm", "total power must be positive".into());
    }
    if !(budget.pilot_power_w > 0.0) {
        fail("budget.p_ac_dbm", "pilot power must be positive".into());
    }
    if !(budget.bandwidth_hz > 0.0) {
        fail("budget.bandwidth_hz", "bandwidth must be positive".into());
    }
    if !(budget.carrier_hz > 0.0) {
        fail("budget.carrier_hz", "carrier must be positive".into());
    }
    if budget.pilot_len < 1 {
        fail("budget.T", "pilot length T must be >= 1".into());
    }

    if cfg.num_acs == 0 {
        fail("K", "K must be >= 1".into());
    }
    if cfg.csi == CsiMode::Estimated && budget.pilot_len < cfg.num_acs {
        fail(
            "budget.T",
            format!(
                "T >= K required for orthogonal pilots (T={}, K={})",
                budget.pilot_len, cfg.num_acs
            ),
        );
    }
    if cfg.scheme == BeamformingScheme::Czf && cfg.mode == TransmissionMode::Jt {
        fail(
            "scheme",
            "CZF requires SAT mode (under JT, CZF coincides with ZF; use scheme=zf)".into(),
        );
    }
    if cfg.scheme == BeamformingScheme::Zf
        && cfg.mode == TransmissionMode::Jt
        && dep.total_antennas < cfg.num_acs
    {
        fail(
            "scheme",
            format!(
                "ZF under JT requires M_TOT >= K ({} < {})",
                dep.total_antennas, cfg.num_acs
            ),
        );
    }

    let imp = &cfg.impulsive;
    if !(imp.gamma_linear >= 0.0) || !imp.gamma_linear.is_finite() {
        fail(
            "impulsive.gamma_db",
            format!(
                "power ratio must be finite and >= 0, got {}",
                imp.gamma_linear
            ),
        );
    }
    if !(0.0..=1.0).contains(&imp.epsilon) {
        fail(
            "impulsive.epsilon",
            format!("event probability must lie in [0, 1], got {}", imp.epsilon),
        );
    }

    let ch = &cfg.channel;
    for (field, v) in [
        ("channel.pl_los.a", ch.pl_los.intercept_db),
        ("channel.pl_los.b", ch.pl_los.dist_coeff),
        ("channel.pl_los.c", ch.pl_los.freq_coeff),
        ("channel.pl_nlos.a", ch.pl_nlos.intercept_db),
        ("channel.pl_nlos.b", ch.pl_nlos.dist_coeff),
        ("channel.pl_nlos.c", ch.pl_nlos.freq_coeff),
    ] {
        if !v.is_finite() {
            fail(field, format!("must be finite, got {v}"));
        }
    }
    if !(ch.shadow_sigma_los_db >= 0.0) {
        fail("channel.shadow_sigma_los_db", "must be >= 0".into());
    }
    if !(ch.shadow_sigma_nlos_db >= 0.0) {
        fail("channel.shadow_sigma_nlos_db", "must be >= 0".into());
    }
    if !(ch.los_decay_m > 0.0) {
        fail("channel.los_decay_m", "must be > 0".into());
    }
    if !(ch.d_min_m > 0.0) {
        fail("channel.d_min_m", "must be > 0".into());
    }

    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::InvalidConfig(errors))
    }
}

// ---------------------------------------------------------------------------
// Config file (JSON) layer
// ---------------------------------------------------------------------------

/// `deployment` section of the config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeploymentSection {
    #[serde(rename = "J")]
    pub num_aps: usize,
    #[serde(rename = "M_TOT")]
    pub total_antennas: usize,
}

impl Default for DeploymentSection {
    fn default() -> Self {
        DeploymentSection {
            num_aps: 4,
            total_antennas: 64,
        }
    }
}

/// `budget` section of the config file; powers in dBm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetSection {
    pub p_ap_dbm: f64,
    pub p_ac_dbm: f64,
    pub bandwidth_hz: f64,
    pub carrier_hz: f64,
    pub noise_figure_db: f64,
    #[serde(rename = "T")]
    pub pilot_len: usize,
}

impl Default for BudgetSection {
    fn default() -> Self {
        BudgetSection {
            p_ap_dbm: 21.0,
            p_ac_dbm: 20.0,
            bandwidth_hz: 10e6,
            carrier_hz: 3.5e9,
            noise_figure_db: 7.0,
            pilot_len: 4,
        }
    }
}

/// `impulsive` section of the config file; the power ratio is in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImpulsiveSection {
    pub gamma_db: f64,
    pub epsilon: f64,
}

impl Default for ImpulsiveSection {
    fn default() -> Self {
        ImpulsiveSection {
            gamma_db: 30.0,
            epsilon: 0.0,
        }
    }
}

/// On-disk experiment description. Every key is optional; missing sections
/// take the defaults above. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub hall: HallGeometry,
    pub deployment: DeploymentSection,
    pub budget: BudgetSection,
    #[serde(rename = "K")]
    pub num_acs: usize,
    pub mode: TransmissionMode,
    pub scheme: BeamformingScheme,
    pub power_rule: PowerRule,
    pub csi: CsiMode,
    pub impulsive: ImpulsiveSection,
    pub channel: ChannelModelParams,
}

impl Default for ConfigFile {
    fn default() -> Self {
        ConfigFile {
            hall: HallGeometry::default(),
            deployment: DeploymentSection::default(),
            budget: BudgetSection::default(),
            num_acs: 4,
            mode: TransmissionMode::default(),
            scheme: BeamformingScheme::default(),
            power_rule: PowerRule::default(),
            csi: CsiMode::default(),
            impulsive: ImpulsiveSection::default(),
            channel: ChannelModelParams::default(),
        }
    }
}

impl Default for TransmissionMode {
    fn default() -> Self {
        TransmissionMode::Jt
    }
}

impl Default for BeamformingScheme {
    fn default() -> Self {
        BeamformingScheme::Zf
    }
}

impl Default for PowerRule {
    fn default() -> Self {
        PowerRule::Epa
    }
}

impl Default for CsiMode {
    fn default() -> Self {
        CsiMode::Perfect
    }
}

macro_rules! enum_from_str {
    ($ty:ty, $field:literal, { $($text:literal => $variant:expr),+ $(,)? }) => {
        impl std::str::FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s.to_ascii_lowercase().as_str() {
                    $($text => Ok($variant),)+
                    other => Err(Error::config(
                        $field,
                        format!("unknown value `{other}`"),
                    )),
                }
            }
        }
    };
}

enum_from_str!(TransmissionMode, "mode", {
    "sat" => TransmissionMode::Sat,
    "jt" => TransmissionMode::Jt,
});
enum_from_str!(BeamformingScheme, "scheme", {
    "mrt" => BeamformingScheme::Mrt,
    "zf" => BeamformingScheme::Zf,
    "czf" => BeamformingScheme::Czf,
});
enum_from_str!(PowerRule, "power_rule", {
    "epa" => PowerRule::Epa,
    "mpa" => PowerRule::Mpa,
});
enum_from_str!(CsiMode, "csi", {
    "perfect" => CsiMode::Perfect,
    "estimated" => CsiMode::Estimated,
});

impl ConfigFile {
    /// Parses a config file from JSON text.
    pub fn from_json(text: &str) -> Result<ConfigFile> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads and parses a config file from disk.
    pub fn load(path: &std::path::Path) -> Result<ConfigFile> {
        let text = std::fs::read_to_string(path)?;
        ConfigFile::from_json(&text)
    }

    /// Materializes the internal scenario (watts, AP positions) and runs
    /// full validation.
    pub fn to_scenario(&self) -> Result<ScenarioConfig> {
        let deployment = place_aps(
            self.deployment.num_aps,
            &self.hall,
            self.deployment.total_antennas,
        )?;
        let budget = RadioBudget {
            bandwidth_hz: self.budget.bandwidth_hz,
            carrier_hz: self.budget.carrier_hz,
            total_power_w: dbm_to_watts(self.budget.p_ap_dbm),
            pilot_power_w: dbm_to_watts(self.budget.p_ac_dbm),
            noise_figure_db: self.budget.noise_figure_db,
            pilot_len: self.budget.pilot_len,
        };
        let cfg = ScenarioConfig {
            hall: self.hall,
            deployment,
            budget,
            num_acs: self.num_acs,
            mode: self.mode,
            scheme: self.scheme,
            power_rule: self.power_rule,
            csi: self.csi,
            impulsive: ImpulsiveNoiseParams {
                gamma_linear: crate::units::db_to_linear(self.impulsive.gamma_db),
                epsilon: self.impulsive.epsilon,
            },
            channel: self.channel.clone(),
        };
        validate_config(cfg)
    }
}

impl ScenarioConfig {
    /// Default scenario used throughout the tests: 100x50x6 m hall, J=4,
    /// M_TOT=64, K=4, JT, ZF, EPA, perfect CSI, no impulsive noise.
    pub fn paper_default() -> ScenarioConfig {
        let mut file = ConfigFile::default();
        file.num_acs = 4;
        file.to_scenario().expect("default config is valid")
    }
}
