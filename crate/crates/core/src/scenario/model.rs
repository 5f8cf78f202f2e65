//! Rates, delays, energies, trust and TCR of an allocation.

use nalgebra::DMatrix;

use super::{Allocation, Scenario};
use crate::error::{Result, TcrError};

/// Shannon rate `b log2(1 + g p / (sigma2 b))`; zero bandwidth gives 0.
pub fn uplink_rate(bandwidth: f64, power: f64, gain: f64, noise_density: f64) -> f64 {
    if bandwidth <= 0.0 {
        return 0.0;
    }
    bandwidth * (gain * power / (noise_density * bandwidth)).ln_1p() / std::f64::consts::LN_2
}

/// Downlink rate; same channel and bandwidth as the uplink, server power.
pub fn downlink_rate(bandwidth: f64, power: f64, gain: f64, noise_density: f64) -> f64 {
    uplink_rate(bandwidth, power, gain, noise_density)
}

fn rates(sc: &Scenario, a: &Allocation, n: usize, m: usize) -> (f64, f64) {
    let g = sc.gain(n, m);
    let s2 = sc.params.noise_density;
    let b = a.b[(n, m)];
    (uplink_rate(b, a.p_u[n], g, s2), downlink_rate(b, a.p_s[(n, m)], g, s2))
}

fn check_dims(sc: &Scenario, a: &Allocation) -> Result<()> {
    let shape = (sc.n_users(), sc.n_servers());
    let ok = a.x.shape() == shape
        && a.gamma.shape() == shape
        && a.b.shape() == shape
        && a.p_s.shape() == shape
        && a.f_s.shape() == shape
        && a.phi.len() == shape.0
        && a.p_u.len() == shape.0
        && a.f_u.len() == shape.0;
    if ok {
        Ok(())
    } else {
        Err(TcrError::Dimension(format!("allocation does not match a {}x{} scenario", shape.0, shape.1)))
    }
}

/// Verification delay seen by pair `(n, m)`: the slowest other server that
/// holds a nonzero CPU share for user `n`; 0 when there is none.
pub fn verification_delay(sc: &Scenario, a: &Allocation, n: usize, m: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..sc.n_servers() {
        if k == m || a.f_s[(n, k)] <= 0.0 {
            continue;
        }
        let g = a.gamma[(n, k)];
        if !(g > 0.0 && g < 1.0) {
            return Err(TcrError::DivisionGuard { n, m: k, what: "gamma outside (0, 1)" });
        }
        worst = worst.max(sc.params.verify_cycles / ((1.0 - g) * a.f_s[(n, k)]));
    }
    Ok(worst)
}

/// Server-side delay of pair `(n, m)`: upload, processing, block generation,
/// block propagation and verification.
pub fn server_side_delay(sc: &Scenario, a: &Allocation, n: usize, m: usize) -> Result<f64> {
    let p = &sc.params;
    let s = &sc.servers[m];
    let gamma = a.gamma[(n, m)];
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(TcrError::DivisionGuard { n, m, what: "gamma outside (0, 1)" });
    }
    let load = a.x[(n, m)] * a.phi[n] * sc.users[n].d;
    let mut t = p.block_propagation_delay() + verification_delay(sc, a, n, m)?;
    if load > 0.0 {
        let f = a.f_s[(n, m)];
        if f <= 0.0 {
            return Err(TcrError::DivisionGuard { n, m, what: "zero server frequency" });
        }
        let (up, _) = rates(sc, a, n, m);
        t += if up > 0.0 { load / up } else { f64::INFINITY };
        t += load * s.f_data / (gamma * f);
        t += load * p.omega_b * s.f_block / ((1.0 - gamma) * f);
    }
    Ok(t)
}

/// User-side delay of pair `(n, m)`: local processing, result download and
/// post-processing.
pub fn user_side_delay(sc: &Scenario, a: &Allocation, n: usize, m: usize) -> Result<f64> {
    let u = &sc.users[n];
    let fu = a.f_u[n];
    if fu <= 0.0 {
        return Err(TcrError::DivisionGuard { n, m, what: "zero user frequency" });
    }
    let phi = a.phi[n];
    let wp = sc.params.omega_p;
    let mut t = (1.0 - phi) * u.d * u.f / fu + wp * phi * u.d * u.f / fu;
    let down = a.x[(n, m)] * wp * phi * u.d;
    if down > 0.0 {
        let (_, dn) = rates(sc, a, n, m);
        t += if dn > 0.0 { down / dn } else { f64::INFINITY };
    }
    Ok(t)
}

/// Largest server- or user-side delay over connected pairs (`x > 0`).
pub fn total_delay(sc: &Scenario, a: &Allocation) -> Result<f64> {
    check_dims(sc, a)?;
    let mut t: f64 = 0.0;
    for n in 0..sc.n_users() {
        for m in 0..sc.n_servers() {
            if a.x[(n, m)] > 0.0 {
                t = t.max(server_side_delay(sc, a, n, m)?).max(user_side_delay(sc, a, n, m)?);
            }
        }
    }
    Ok(t)
}

struct EnergySplit {
    user: f64,
    server: f64,
}

fn energy_split(sc: &Scenario, a: &Allocation) -> Result<EnergySplit> {
    check_dims(sc, a)?;
    let p = &sc.params;
    let mut user = 0.0;
    let mut server = 0.0;
    for (n, u) in sc.users.iter().enumerate() {
        let phi = a.phi[n];
        let f2 = a.f_u[n] * a.f_u[n];
        user += u.kappa * (1.0 - phi) * u.d * u.f * f2;
        user += u.kappa * phi * u.d * p.omega_p * u.f * f2;
        for (m, s) in sc.servers.iter().enumerate() {
            let load = a.x[(n, m)] * phi * u.d;
            if load <= 0.0 {
                continue;
            }
            let (up, dn) = rates(sc, a, n, m);
            let g = a.gamma[(n, m)];
            let f = a.f_s[(n, m)];
            user += if up > 0.0 { a.p_u[n] * load / up } else { f64::INFINITY };
            server += s.kappa * load * s.f_data * (g * f).powi(2);
            server += s.kappa * load * p.omega_b * s.f_block * ((1.0 - g) * f).powi(2);
            server += if dn > 0.0 { a.p_s[(n, m)] * load * p.omega_p / dn } else { f64::INFINITY };
        }
    }
    Ok(EnergySplit { user, server })
}

/// Total energy of users and servers. Block propagation and validation
/// energies are not modeled.
pub fn total_energy(sc: &Scenario, a: &Allocation) -> Result<f64> {
    let e = energy_split(sc, a)?;
    Ok(e.user + e.server)
}

/// Trust score of pair `(n, m)`.
pub fn trust_score(sc: &Scenario, a: &Allocation, n: usize, m: usize) -> Result<f64> {
    let s = &sc.servers[m];
    let (ps, fs, b) = (a.p_s[(n, m)], a.f_s[(n, m)], a.b[(n, m)]);
    if ps < 0.0 || fs < 0.0 || b < 0.0 {
        return Err(TcrError::InvalidAllocation(format!("negative resource at pair ({n}, {m})")));
    }
    Ok(trust_from_ratios(sc, ps / s.p_max, fs / s.f_max, b / s.b_max))
}

/// `varpi_1 ln(1 + varpi_2 (rp + rf + rb + tau))`.
pub fn trust_from_ratios(sc: &Scenario, rp: f64, rf: f64, rb: f64) -> f64 {
    let p = &sc.params;
    p.varpi_1 * (p.varpi_2 * (rp + rf + rb + p.tau)).ln_1p()
}

/// `sum x_{n,m} v_{n,m}`.
pub fn total_trust(sc: &Scenario, a: &Allocation) -> Result<f64> {
    check_dims(sc, a)?;
    let mut v = 0.0;
    for n in 0..sc.n_users() {
        for m in 0..sc.n_servers() {
            if a.x[(n, m)] != 0.0 {
                v += a.x[(n, m)] * trust_score(sc, a, n, m)?;
            }
        }
    }
    Ok(v)
}

/// Trust-cost ratio computed directly from its definition.
pub fn tcr(sc: &Scenario, a: &Allocation) -> Result<f64> {
    let v = total_trust(sc, a)?;
    let cost = sc.params.omega_t * total_delay(sc, a)? + sc.params.omega_e * total_energy(sc, a)?;
    if !(cost > 0.0) {
        return Err(TcrError::Degenerate("cost is zero".into()));
    }
    Ok(v / cost)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub t_server: DMatrix<f64>,
    pub t_user: DMatrix<f64>,
    pub t_total: f64,
    pub e_user: f64,
    pub e_server: f64,
    pub e_total: f64,
    pub v_trust: f64,
    pub cost: f64,
    pub tcr: f64,
    /// Connected pairs whose uplink or downlink rate is zero.
    pub zero_rate_pairs: Vec<(usize, usize)>,
}

/// Every metric of an allocation. Unconnected pairs are evaluated too (for
/// diagnostics) but only connected pairs enter `t_total`.
pub fn evaluate(sc: &Scenario, a: &Allocation) -> Result<Metrics> {
    check_dims(sc, a)?;
    let (nu, ns) = (sc.n_users(), sc.n_servers());
    let mut t_server = DMatrix::zeros(nu, ns);
    let mut t_user = DMatrix::zeros(nu, ns);
    let mut t_total: f64 = 0.0;
    let mut zero_rate_pairs = Vec::new();
    for n in 0..nu {
        for m in 0..ns {
            let connected = a.x[(n, m)] > 0.0;
            t_server[(n, m)] = server_side_delay(sc, a, n, m)?;
            t_user[(n, m)] = user_side_delay(sc, a, n, m)?;
            if connected {
                t_total = t_total.max(t_server[(n, m)]).max(t_user[(n, m)]);
                let (up, dn) = rates(sc, a, n, m);
                if up <= 0.0 || dn <= 0.0 {
                    zero_rate_pairs.push((n, m));
                }
            }
        }
    }
    let e = energy_split(sc, a)?;
    let e_total = e.user + e.server;
    let v_trust = total_trust(sc, a)?;
    let cost = sc.params.omega_t * t_total + sc.params.omega_e * e_total;
    if !(cost > 0.0) {
        return Err(TcrError::Degenerate("cost is zero".into()));
    }
    Ok(Metrics {
        t_server,
        t_user,
        t_total,
        e_user: e.user,
        e_server: e.server,
        e_total,
        v_trust,
        cost,
        tcr: v_trust / cost,
        zero_rate_pairs,
    })
}

/// Constraints of the joint problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// Association entries must be 0 or 1.
    BinaryAssociation,
    /// Each user is connected to exactly one server.
    SingleAssociation,
    OffloadRatio,
    FrequencySplit,
    Bandwidth,
    UserPower,
    ServerPower,
    UserCpu,
    ServerCpu,
    ServerDelayBound,
    UserDelayBound,
    NegativeResource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub constraint: Constraint,
    /// User index for per-user constraints, server index for per-server ones.
    pub index: usize,
    /// Absolute amount by which the constraint is exceeded.
    pub magnitude: f64,
}

/// Lists every violated constraint. Capacities are checked with relative
/// tolerance `tol`; the delay bound uses `t_aux`.
pub fn check_feasibility(sc: &Scenario, a: &Allocation, tol: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    if check_dims(sc, a).is_err() {
        return vec![Violation { constraint: Constraint::SingleAssociation, index: 0, magnitude: f64::INFINITY }];
    }
    let mut push = |constraint, index, magnitude: f64| {
        out.push(Violation { constraint, index, magnitude });
    };
    let (nu, ns) = (sc.n_users(), sc.n_servers());
    for n in 0..nu {
        let mut row = 0.0;
        for m in 0..ns {
            let x = a.x[(n, m)];
            row += x;
            let dist = x.abs().min((x - 1.0).abs());
            if dist > tol {
                push(Constraint::BinaryAssociation, n, dist);
            }
            let g = a.gamma[(n, m)];
            if !(g > 0.0 && g < 1.0) {
                push(Constraint::FrequencySplit, n, if g <= 0.0 { -g } else { g - 1.0 });
            }
            for v in [a.b[(n, m)], a.p_s[(n, m)], a.f_s[(n, m)]] {
                if v < 0.0 {
                    push(Constraint::NegativeResource, n, -v);
                }
            }
        }
        if (row - 1.0).abs() > tol {
            push(Constraint::SingleAssociation, n, (row - 1.0).abs());
        }
        let phi = a.phi[n];
        if phi < -tol || phi > 1.0 + tol {
            push(Constraint::OffloadRatio, n, if phi < 0.0 { -phi } else { phi - 1.0 });
        }
        let u = &sc.users[n];
        if a.p_u[n] > u.p_max * (1.0 + tol) {
            push(Constraint::UserPower, n, a.p_u[n] - u.p_max);
        }
        if a.f_u[n] > u.f_max * (1.0 + tol) {
            push(Constraint::UserCpu, n, a.f_u[n] - u.f_max);
        }
        if a.p_u[n] < 0.0 || a.f_u[n] < 0.0 {
            push(Constraint::NegativeResource, n, -a.p_u[n].min(a.f_u[n]));
        }
        for m in 0..ns {
            if a.x[(n, m)] <= 0.0 {
                continue;
            }
            let bound = a.t_aux * (1.0 + tol) + tol;
            match server_side_delay(sc, a, n, m) {
                Ok(t) if t <= bound => {}
                Ok(t) => push(Constraint::ServerDelayBound, n, t - a.t_aux),
                Err(_) => push(Constraint::ServerDelayBound, n, f64::INFINITY),
            }
            match user_side_delay(sc, a, n, m) {
                Ok(t) if t <= bound => {}
                Ok(t) => push(Constraint::UserDelayBound, n, t - a.t_aux),
                Err(_) => push(Constraint::UserDelayBound, n, f64::INFINITY),
            }
        }
    }
    for (m, s) in sc.servers.iter().enumerate() {
        let mut sums = [0.0; 3];
        for n in 0..nu {
            let x = a.x[(n, m)];
            sums[0] += x * a.b[(n, m)];
            sums[1] += x * a.p_s[(n, m)];
            sums[2] += x * a.f_s[(n, m)];
        }
        for (sum, cap, c) in [
            (sums[0], s.b_max, Constraint::Bandwidth),
            (sums[1], s.p_max, Constraint::ServerPower),
            (sums[2], s.f_max, Constraint::ServerCpu),
        ] {
            if sum > cap * (1.0 + tol) {
                push(c, m, sum - cap);
            }
        }
    }
    out
}
