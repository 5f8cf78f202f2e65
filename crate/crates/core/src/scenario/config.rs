use serde::Deserialize;

use super::units::{Dimension, Quantity};
use super::{SystemParams, Tolerances};
use crate::error::{Result, TcrError};

/// How small-scale fading is drawn across seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FadingMode {
    /// Fading comes from the scenario seed, so it changes with every seed.
    Resample,
    /// Fading comes from a fixed seed and is shared by all scenarios.
    Frozen(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserDefaults {
    pub cycles_per_bit: f64,
    pub f_max: f64,
    pub p_max: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServerDefaults {
    pub f_max: f64,
    pub p_max: f64,
    pub b_max: f64,
    pub kappa: f64,
    pub f_data: f64,
    pub f_block: f64,
}

/// Everything needed to draw a [`Scenario`](super::Scenario) from a seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n_users: usize,
    pub n_servers: usize,
    /// Side of the square area in meters.
    pub area_side: f64,
    /// Task size range in bits.
    pub d_lo: f64,
    pub d_hi: f64,
    pub fading: FadingMode,
    pub user: UserDefaults,
    pub server: ServerDefaults,
    pub params: SystemParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_users: 20,
            n_servers: 3,
            area_side: 1000.0,
            d_lo: 500.0 * 8e3,
            d_hi: 2000.0 * 8e3,
            fading: FadingMode::Resample,
            user: UserDefaults { cycles_per_bit: 279.62, f_max: 1e9, p_max: 0.2, kappa: 1e-27 },
            server: ServerDefaults {
                f_max: 20e9,
                p_max: 10.0,
                b_max: 10e6,
                kappa: 1e-27,
                f_data: 279.62,
                f_block: 737.5,
            },
            params: SystemParams::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn with_size(n_users: usize, n_servers: usize) -> Self {
        Self { n_users, n_servers, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.n_servers == 0 {
            return Err(TcrError::InvalidConfig("N and M must be at least 1".into()));
        }
        if !(self.area_side > 0.0) {
            return Err(TcrError::InvalidConfig("area side must be positive".into()));
        }
        if !(self.d_lo > 0.0 && self.d_hi >= self.d_lo) {
            return Err(TcrError::InvalidConfig("task size range must satisfy 0 < d_lo <= d_hi".into()));
        }
        self.params.validate()
    }

    /// Parses the scenario sections of a TOML document. Missing keys keep
    /// their defaults; sections other than `topology`, `user`, `server`,
    /// `system` and `tolerances` are ignored.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawFile = toml::from_str(text).map_err(|e| TcrError::InvalidConfig(e.to_string()))?;
        let mut cfg = Self::default();
        raw.apply(&mut cfg)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Default, Deserialize)]
struct RawFile {
    #[serde(default)]
    topology: RawTopology,
    #[serde(default)]
    user: RawUser,
    #[serde(default)]
    server: RawServer,
    #[serde(default)]
    system: RawSystem,
    #[serde(default)]
    tolerances: RawTolerances,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTopology {
    users: Option<usize>,
    servers: Option<usize>,
    area: Option<Quantity>,
    task_size: Option<[Quantity; 2]>,
    fading: Option<String>,
    fading_seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawUser {
    cpu_max: Option<Quantity>,
    power_max: Option<Quantity>,
    kappa: Option<f64>,
    cycles_per_bit: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawServer {
    cpu_max: Option<Quantity>,
    power_max: Option<Quantity>,
    bandwidth: Option<Quantity>,
    kappa: Option<f64>,
    cycles_per_bit_data: Option<f64>,
    cycles_per_bit_block: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    omega_t: Option<f64>,
    omega_e: Option<f64>,
    omega_b: Option<f64>,
    omega_p: Option<f64>,
    block_size: Option<Quantity>,
    wired_rate: Option<Quantity>,
    verify_cycles: Option<Quantity>,
    noise_density: Option<Quantity>,
    varpi_1: Option<f64>,
    varpi_2: Option<f64>,
    tau: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    eps: Option<f64>,
    eps1: Option<f64>,
    eps2: Option<f64>,
    eps3: Option<f64>,
    max_outer: Option<usize>,
    max_part1: Option<usize>,
    max_part2: Option<usize>,
    sdp_tol: Option<f64>,
    sdp_max_iter: Option<usize>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_q(slot: &mut f64, value: &Option<Quantity>, dim: Dimension) -> Result<()> {
    if let Some(q) = value {
        *slot = q.to_si(dim)?;
    }
    Ok(())
}

impl RawFile {
    fn apply(self, cfg: &mut ScenarioConfig) -> Result<()> {
        let t = self.topology;
        set(&mut cfg.n_users, t.users);
        set(&mut cfg.n_servers, t.servers);
        set_q(&mut cfg.area_side, &t.area, Dimension::Length)?;
        if let Some([lo, hi]) = &t.task_size {
            cfg.d_lo = lo.to_si(Dimension::Data)?;
            cfg.d_hi = hi.to_si(Dimension::Data)?;
        }
        match t.fading.as_deref() {
            None => {}
            Some("resample") => cfg.fading = FadingMode::Resample,
            Some("frozen") => cfg.fading = FadingMode::Frozen(t.fading_seed.unwrap_or(0)),
            Some(other) => {
                return Err(TcrError::InvalidConfig(format!(
                    "fading must be \"resample\" or \"frozen\", got {other:?}"
                )))
            }
        }

        let u = self.user;
        set_q(&mut cfg.user.f_max, &u.cpu_max, Dimension::Frequency)?;
        set_q(&mut cfg.user.p_max, &u.power_max, Dimension::Power)?;
        set(&mut cfg.user.kappa, u.kappa);
        set(&mut cfg.user.cycles_per_bit, u.cycles_per_bit);

        let s = self.server;
        set_q(&mut cfg.server.f_max, &s.cpu_max, Dimension::Frequency)?;
        set_q(&mut cfg.server.p_max, &s.power_max, Dimension::Power)?;
        set_q(&mut cfg.server.b_max, &s.bandwidth, Dimension::Frequency)?;
        set(&mut cfg.server.kappa, s.kappa);
        set(&mut cfg.server.f_data, s.cycles_per_bit_data);
        set(&mut cfg.server.f_block, s.cycles_per_bit_block);

        let y = self.system;
        let p = &mut cfg.params;
        match (y.omega_t, y.omega_e) {
            (Some(t), Some(e)) => {
                p.omega_t = t;
                p.omega_e = e;
            }
            (Some(t), None) => {
                p.omega_t = t;
                p.omega_e = 1.0 - t;
            }
            (None, Some(e)) => {
                p.omega_e = e;
                p.omega_t = 1.0 - e;
            }
            (None, None) => {}
        }
        set(&mut p.omega_b, y.omega_b);
        set(&mut p.omega_p, y.omega_p);
        set_q(&mut p.block_size, &y.block_size, Dimension::Data)?;
        set_q(&mut p.wired_rate, &y.wired_rate, Dimension::Rate)?;
        set_q(&mut p.verify_cycles, &y.verify_cycles, Dimension::Cycles)?;
        set_q(&mut p.noise_density, &y.noise_density, Dimension::PowerDensity)?;
        set(&mut p.varpi_1, y.varpi_1);
        set(&mut p.varpi_2, y.varpi_2);
        set(&mut p.tau, y.tau);

        let tl = self.tolerances;
        let tol: &mut Tolerances = &mut p.tolerances;
        set(&mut tol.eps, tl.eps);
        set(&mut tol.eps1, tl.eps1);
        set(&mut tol.eps2, tl.eps2);
        set(&mut tol.eps3, tl.eps3);
        set(&mut tol.max_outer, tl.max_outer);
        set(&mut tol.max_part1, tl.max_part1);
        set(&mut tol.max_part2, tl.max_part2);
        set(&mut tol.sdp_tol, tl.sdp_tol);
        set(&mut tol.sdp_max_iter, tl.sdp_max_iter);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(ScenarioConfig::from_toml_str("").unwrap(), ScenarioConfig::default());
    }

    #[test]
    fn human_units_are_converted() {
        let cfg = ScenarioConfig::from_toml_str(
            r#"
            [topology]
            users = 10
            servers = 2
            task_size = ["1000 KB", "1000 KB"]
            fading = "frozen"
            fading_seed = 9

            [server]
            bandwidth = "40 MHz"
            cpu_max = "100 GHz"

            [system]
            omega_t = 0.1
            noise_density = "-134 dBm/Hz"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.n_users, 10);
        assert_eq!(cfg.d_lo, 8e6);
        assert_eq!(cfg.server.b_max, 40e6);
        assert_eq!(cfg.server.f_max, 100e9);
        assert_eq!(cfg.fading, FadingMode::Frozen(9));
        assert!((cfg.params.omega_e - 0.9).abs() < 1e-15);
    }

    #[test]
    fn typos_and_bad_values_are_rejected() {
        assert!(ScenarioConfig::from_toml_str("[server]\nbandwith = \"1 MHz\"").is_err());
        assert!(ScenarioConfig::from_toml_str("[topology]\nusers = 0").is_err());
        assert!(ScenarioConfig::from_toml_str("[server]\nbandwidth = \"1 W\"").is_err());
        assert!(ScenarioConfig::from_toml_str("[system]\nomega_t = 0.3\nomega_e = 0.3").is_err());
    }
}
