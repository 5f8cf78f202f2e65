//! Problem instances and the physical/cost model.
//!
//! A [`Scenario`] is immutable once generated. Every quantity the optimizers
//! need (rates, delays, energies, trust, TCR) is a pure function of a
//! scenario and an [`Allocation`], implemented in [`model`].

mod config;
mod generate;
pub mod model;
pub mod units;

pub use config::{FadingMode, ScenarioConfig, ServerDefaults, UserDefaults};
pub use generate::{channel_gain, generate_scenario, path_loss_db, server_grid};
pub use model::{
    check_feasibility, downlink_rate, evaluate, server_side_delay, tcr, total_delay, total_energy, total_trust,
    trust_score, uplink_rate, user_side_delay, Constraint, Metrics, Violation,
};

use nalgebra::DMatrix;

use crate::error::{Result, TcrError};

/// Relative convergence tolerances and iteration caps for every loop.
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    /// Dinkelbach outer loop and the Part2 FP loop.
    pub eps: f64,
    /// Part1 SDR loop.
    pub eps1: f64,
    /// Part1 phi-refinement loop.
    pub eps2: f64,
    /// Part1 outer loop.
    pub eps3: f64,
    pub max_outer: usize,
    pub max_part1: usize,
    pub max_part2: usize,
    /// Residual tolerance handed to the SDP solver inside the pipeline.
    pub sdp_tol: f64,
    pub sdp_max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            eps1: 1e-3,
            eps2: 1e-3,
            eps3: 1e-3,
            max_outer: 50,
            max_part1: 20,
            max_part2: 50,
            sdp_tol: 1e-8,
            sdp_max_iter: 200,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eps", self.eps),
            ("eps1", self.eps1),
            ("eps2", self.eps2),
            ("eps3", self.eps3),
            ("sdp_tol", self.sdp_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(TcrError::InvalidConfig(format!("tolerance {name} must be positive")));
            }
        }
        if self.max_outer == 0 || self.max_part1 == 0 || self.max_part2 == 0 || self.sdp_max_iter == 0 {
            return Err(TcrError::InvalidConfig("iteration caps must be positive".into()));
        }
        Ok(())
    }
}

/// System-wide constants.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub omega_t: f64,
    pub omega_e: f64,
    /// Ratio of block data to offloaded data.
    pub omega_b: f64,
    /// Ratio of processed (returned) data to offloaded data.
    pub omega_p: f64,
    /// Block size in bits.
    pub block_size: f64,
    /// Minimum inter-server wired rate in bits/s.
    pub wired_rate: f64,
    /// CPU cycles needed to validate a block.
    pub verify_cycles: f64,
    /// Noise power spectral density in W/Hz.
    pub noise_density: f64,
    pub varpi_1: f64,
    pub varpi_2: f64,
    /// Server history score.
    pub tau: f64,
    pub tolerances: Tolerances,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            omega_t: 0.5,
            omega_e: 0.5,
            omega_b: 1.0,
            omega_p: 0.9,
            block_size: 8.0e6 * 8.0,
            wired_rate: 15.0e6,
            verify_cycles: 1.0e8,
            noise_density: units::dbm_to_watts(-134.0),
            varpi_1: 100.0 / std::f64::consts::LN_2,
            varpi_2: 0.25,
            tau: 0.5,
            tolerances: Tolerances::default(),
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(TcrError::InvalidConfig(msg.to_string()));
        if !(self.omega_t >= 0.0 && self.omega_e >= 0.0) {
            return bad("omega_t and omega_e must be nonnegative");
        }
        if ((self.omega_t + self.omega_e) - 1.0).abs() > 1e-9 {
            return bad("omega_t + omega_e must equal 1");
        }
        if !(self.omega_b > 0.0) {
            return bad("omega_b must be positive");
        }
        if !(self.omega_p > 0.0 && self.omega_p <= 1.0) {
            return bad("omega_p must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return bad("tau must lie in [0, 1]");
        }
        for (name, v) in [
            ("block_size", self.block_size),
            ("wired_rate", self.wired_rate),
            ("noise_density", self.noise_density),
            ("varpi_1", self.varpi_1),
            ("varpi_2", self.varpi_2),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(TcrError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if !(self.verify_cycles >= 0.0) {
            return bad("verify_cycles must be nonnegative");
        }
        self.tolerances.validate()
    }

    /// Block propagation delay `S_b / R`.
    pub fn block_propagation_delay(&self) -> f64 {
        self.block_size / self.wired_rate
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserNode {
    pub position: [f64; 2],
    /// Task size in bits.
    pub d: f64,
    /// Local CPU cycles per bit.
    pub f: f64,
    pub f_max: f64,
    pub p_max: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServerNode {
    pub position: [f64; 2],
    pub f_max: f64,
    pub p_max: f64,
    pub b_max: f64,
    pub kappa: f64,
    /// Cycles per bit for processing offloaded data.
    pub f_data: f64,
    /// Cycles per bit for generating blocks.
    pub f_block: f64,
}

/// Linear power gains `g = h * l`, with `h` the path-loss part and `l` the
/// small-scale fading draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelGains {
    pub h: DMatrix<f64>,
    pub l: DMatrix<f64>,
    pub g: DMatrix<f64>,
}

impl ChannelGains {
    pub fn new(h: DMatrix<f64>, l: DMatrix<f64>) -> Result<Self> {
        if h.shape() != l.shape() {
            return Err(TcrError::Dimension("path loss and fading shapes differ".into()));
        }
        let g = h.component_mul(&l);
        if g.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(TcrError::InvalidConfig("channel gains must be positive".into()));
        }
        Ok(Self { h, l, g })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: SystemParams,
    pub users: Vec<UserNode>,
    pub servers: Vec<ServerNode>,
    pub gains: ChannelGains,
    pub seed: u64,
}

impl Scenario {
    /// Assembles a scenario from explicit parts, checking every invariant.
    pub fn new(
        params: SystemParams,
        users: Vec<UserNode>,
        servers: Vec<ServerNode>,
        gains: ChannelGains,
        seed: u64,
    ) -> Result<Self> {
        if users.is_empty() || servers.is_empty() {
            return Err(TcrError::InvalidConfig("need at least one user and one server".into()));
        }
        if gains.g.shape() != (users.len(), servers.len()) {
            return Err(TcrError::Dimension(format!(
                "gains are {:?}, expected ({}, {})",
                gains.g.shape(),
                users.len(),
                servers.len()
            )));
        }
        params.validate()?;
        for (i, u) in users.iter().enumerate() {
            if ![u.d, u.f, u.f_max, u.p_max, u.kappa].iter().all(|v| *v > 0.0 && v.is_finite()) {
                return Err(TcrError::InvalidConfig(format!("user {i} has a nonpositive parameter")));
            }
        }
        for (i, s) in servers.iter().enumerate() {
            if ![s.f_max, s.p_max, s.b_max, s.kappa, s.f_data, s.f_block].iter().all(|v| *v > 0.0 && v.is_finite()) {
                return Err(TcrError::InvalidConfig(format!("server {i} has a nonpositive parameter")));
            }
        }
        Ok(Self { params, users, servers, gains, seed })
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_servers(&self) -> usize {
        self.servers.len()
    }

    pub fn gain(&self, n: usize, m: usize) -> f64 {
        self.gains.g[(n, m)]
    }

    /// Slots per server used when rounding associations: `ceil(N / M)`.
    pub fn slots_per_server(&self) -> usize {
        self.n_users().div_ceil(self.n_servers())
    }

    /// Local-only energy `sum_n kappa_n d_n f_n F_n^2` at full user frequency.
    pub fn local_energy_at_max(&self) -> f64 {
        self.users.iter().map(|u| u.kappa * u.d * u.f * u.f_max * u.f_max).sum()
    }
}

/// One decision point.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub x: DMatrix<f64>,
    pub phi: Vec<f64>,
    pub gamma: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub p_u: Vec<f64>,
    pub p_s: DMatrix<f64>,
    pub f_u: Vec<f64>,
    pub f_s: DMatrix<f64>,
    pub t_aux: f64,
}

impl Allocation {
    /// Splits every server's bandwidth, power and CPU equally among the users
    /// connected to it (`x > 0`); users transmit and compute at their maxima.
    /// `t_aux` is set to the resulting total delay.
    pub fn equal_split(scenario: &Scenario, x: &DMatrix<f64>, phi: &[f64]) -> Result<Self> {
        let (n_users, n_servers) = (scenario.n_users(), scenario.n_servers());
        if x.shape() != (n_users, n_servers) || phi.len() != n_users {
            return Err(TcrError::Dimension("association or phi has the wrong size".into()));
        }
        let gamma_value = crate::qcqp::gamma_star(scenario.params.omega_b);
        let mut b = DMatrix::zeros(n_users, n_servers);
        let mut p_s = DMatrix::zeros(n_users, n_servers);
        let mut f_s = DMatrix::zeros(n_users, n_servers);
        for (m, server) in scenario.servers.iter().enumerate() {
            let load = (0..n_users).filter(|&n| x[(n, m)] > 0.0).count();
            if load == 0 {
                continue;
            }
            let k = load as f64;
            for n in 0..n_users {
                if x[(n, m)] > 0.0 {
                    b[(n, m)] = server.b_max / k;
                    p_s[(n, m)] = server.p_max / k;
                    f_s[(n, m)] = server.f_max / k;
                }
            }
        }
        let mut alloc = Self {
            x: x.clone(),
            phi: phi.to_vec(),
            gamma: DMatrix::from_element(n_users, n_servers, gamma_value),
            b,
            p_u: scenario.users.iter().map(|u| u.p_max).collect(),
            p_s,
            f_u: scenario.users.iter().map(|u| u.f_max).collect(),
            f_s,
            t_aux: 0.0,
        };
        alloc.t_aux = total_delay(scenario, &alloc)?;
        Ok(alloc)
    }

    /// Server index of user `n` under a binary association (largest entry,
    /// lowest index on ties).
    pub fn server_of(&self, n: usize) -> usize {
        let row = self.x.row(n);
        let mut best = 0;
        for m in 1..row.len() {
            if row[m] > row[best] {
                best = m;
            }
        }
        best
    }

    /// Recomputes `t_aux` as the total delay of this allocation.
    pub fn refresh_t_aux(&mut self, scenario: &Scenario) -> Result<()> {
        self.t_aux = total_delay(scenario, self)?;
        Ok(())
    }
}
