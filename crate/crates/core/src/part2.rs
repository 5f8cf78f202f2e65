//! Resource step: bandwidth, powers and CPU frequencies at fixed association,
//! offloading ratios and frequency split.
//!
//! The transmit-energy ratios `p phi d / r` are handled with the quadratic
//! transform `M / N = min_z M^2 z + 1 / (4 z N^2)`, which makes the objective
//! concave at fixed `z`. Each outer pass fixes `z` at the current point,
//! maximizes the surrogate with a log-barrier Newton method, then refreshes
//! `z` and the Dinkelbach scalar `y`.

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, DVector};

use crate::dashf::dinkelbach_objective;
use crate::error::{Result, TcrError};
use crate::part1::relative_converged;
use crate::scenario::model::{tcr, uplink_rate, verification_delay};
use crate::scenario::{total_delay, Allocation, Scenario, Tolerances};

/// Quadratic-transform auxiliaries. An entry of 0 means the pair is skipped
/// (not connected, or nothing offloaded).
#[derive(Debug, Clone, PartialEq)]
pub struct FpAuxiliaries {
    pub z1: DMatrix<f64>,
    pub z2: DMatrix<f64>,
}

impl FpAuxiliaries {
    pub fn is_set(&self, n: usize, m: usize) -> bool {
        self.z1[(n, m)] > 0.0
    }
}

/// `z1 = 1 / (2 M1 N1)` and `z2 = 1 / (2 M2 N2)` with `M1 = p_u phi d`,
/// `N1` the uplink rate, `M2 = p_s phi d w_p` and `N2` the downlink rate.
pub fn fp_auxiliaries(sc: &Scenario, a: &Allocation) -> Result<FpAuxiliaries> {
    let (nu, ns) = (sc.n_users(), sc.n_servers());
    let mut z1 = DMatrix::zeros(nu, ns);
    let mut z2 = DMatrix::zeros(nu, ns);
    let p = &sc.params;
    for n in 0..nu {
        for m in 0..ns {
            let x = a.x[(n, m)];
            let load = x * a.phi[n] * sc.users[n].d;
            if load <= 0.0 {
                continue;
            }
            let g = sc.gain(n, m);
            let up = uplink_rate(a.b[(n, m)], a.p_u[n], g, p.noise_density);
            let dn = uplink_rate(a.b[(n, m)], a.p_s[(n, m)], g, p.noise_density);
            let m1 = a.p_u[n] * load;
            let m2 = a.p_s[(n, m)] * load * p.omega_p;
            if !(up > 0.0 && dn > 0.0 && m1 > 0.0 && m2 > 0.0) {
                return Err(TcrError::DivisionGuard { n, m, what: "zero rate or power on an offloading pair" });
            }
            z1[(n, m)] = 1.0 / (2.0 * m1 * up);
            z2[(n, m)] = 1.0 / (2.0 * m2 * dn);
        }
    }
    Ok(FpAuxiliaries { z1, z2 })
}

/// Rate in units of the full bandwidth, `beta log2(1 + snr * pi / beta)`,
/// with its gradient and Hessian in `(beta, pi)`.
fn rate_derivs(snr: f64, beta: f64, pi: f64) -> (f64, [f64; 2], [[f64; 2]; 2]) {
    let u = snr * pi / beta;
    let rho = beta * u.ln_1p() / LN_2;
    let g = [(u.ln_1p() - u / (1.0 + u)) / LN_2, snr / (LN_2 * (1.0 + u))];
    let s = 1.0 / (LN_2 * beta * (1.0 + u) * (1.0 + u));
    let h = [[-u * u * s, snr * u * s], [snr * u * s, -snr * snr * s]];
    (rho, g, h)
}

// Local variable order inside a user block.
const B: usize = 0;
const PU: usize = 1;
const PS: usize = 2;
const FU: usize = 3;
const FS: usize = 4;
const NV: usize = 5;

/// Everything about one connected user that the resource problem needs,
/// with resources measured as fractions of their caps.
#[derive(Debug, Clone)]
struct UserTerm {
    n: usize,
    m: usize,
    caps: [f64; NV],
    snr_up: f64,
    snr_dn: f64,
    /// `f_u^2` and `f_s^2` energy weights (already times `y w_e`).
    e_u: f64,
    e_s: f64,
    /// Surrogate transmit terms `q1 pu^2 + h1 / rho_up^2 + q2 ps^2 + h2 / rho_dn^2`.
    q1: f64,
    h1: f64,
    q2: f64,
    h2: f64,
    /// Original transmit terms `o1 pu / rho_up + o2 ps / rho_dn`.
    o1: f64,
    o2: f64,
    /// Server delay `k_up / rho_up + k_fs / fs + ts0`.
    k_up: f64,
    k_fs: f64,
    ts0: f64,
    /// User delay `k_fu / fu + k_dn / rho_dn`.
    k_fu: f64,
    k_dn: f64,
}

/// Fixed data of one resource problem.
#[derive(Debug, Clone)]
struct Problem {
    users: Vec<UserTerm>,
    /// Positions in `users` of the users on each server.
    by_server: Vec<Vec<usize>>,
    varpi_1: f64,
    varpi_2: f64,
    tau: f64,
    /// `y w_t`; when zero the delay bound drops out.
    yt: f64,
}

impl Problem {
    fn build(sc: &Scenario, a: &Allocation, y: f64, aux: Option<&FpAuxiliaries>) -> Result<Self> {
        let p = &sc.params;
        let ye = y * p.omega_e;
        let mut users = Vec::new();
        let mut by_server = vec![Vec::new(); sc.n_servers()];
        for n in 0..sc.n_users() {
            for m in 0..sc.n_servers() {
                if a.x[(n, m)] <= 0.0 {
                    continue;
                }
                if a.x[(n, m)] != 1.0 {
                    return Err(TcrError::InvalidAllocation(format!("association of pair ({n}, {m}) is not binary")));
                }
                let (u, s) = (&sc.users[n], &sc.servers[m]);
                let g = a.gamma[(n, m)];
                if !(g > 0.0 && g < 1.0) {
                    return Err(TcrError::DivisionGuard { n, m, what: "gamma outside (0, 1)" });
                }
                let phi = a.phi[n];
                let load = phi * u.d;
                let caps = [s.b_max, u.p_max, s.p_max, u.f_max, s.f_max];
                let a_gain = sc.gain(n, m) / p.noise_density;
                let (mut q1, mut h1, mut q2, mut h2) = (0.0, 0.0, 0.0, 0.0);
                if let Some(z) = aux {
                    if load > 0.0 {
                        let (z1, z2) = (z.z1[(n, m)], z.z2[(n, m)]);
                        if !(z1 > 0.0 && z2 > 0.0) {
                            return Err(TcrError::InvalidAllocation(format!("auxiliaries unset for pair ({n}, {m})")));
                        }
                        q1 = ye * z1 * (load * u.p_max).powi(2);
                        h1 = ye / (4.0 * z1 * s.b_max * s.b_max);
                        q2 = ye * z2 * (load * p.omega_p * s.p_max).powi(2);
                        h2 = ye / (4.0 * z2 * s.b_max * s.b_max);
                    }
                }
                let mut ts0 = p.block_propagation_delay() + verification_delay(sc, a, n, m)?;
                if !ts0.is_finite() {
                    ts0 = p.block_propagation_delay();
                }
                by_server[m].push(users.len());
                users.push(UserTerm {
                    n,
                    m,
                    caps,
                    snr_up: a_gain * u.p_max / s.b_max,
                    snr_dn: a_gain * s.p_max / s.b_max,
                    e_u: ye * u.kappa * u.d * u.f * (1.0 - phi + phi * p.omega_p) * u.f_max * u.f_max,
                    e_s: ye
                        * s.kappa
                        * load
                        * (s.f_data * g * g + p.omega_b * s.f_block * (1.0 - g) * (1.0 - g))
                        * s.f_max
                        * s.f_max,
                    q1,
                    h1,
                    q2,
                    h2,
                    o1: ye * u.p_max * load / s.b_max,
                    o2: ye * s.p_max * load * p.omega_p / s.b_max,
                    k_up: load / s.b_max,
                    k_fs: load * (s.f_data / g + p.omega_b * s.f_block / (1.0 - g)) / s.f_max,
                    ts0,
                    k_fu: (1.0 - phi + phi * p.omega_p) * u.d * u.f / u.f_max,
                    k_dn: p.omega_p * load / s.b_max,
                });
            }
        }
        Ok(Self { users, by_server, varpi_1: p.varpi_1, varpi_2: p.varpi_2, tau: p.tau, yt: y * p.omega_t })
    }

    fn has_t(&self) -> bool {
        self.yt > 0.0
    }

    fn n_vars(&self) -> usize {
        NV * self.users.len() + usize::from(self.has_t())
    }

    fn t_index(&self) -> usize {
        NV * self.users.len()
    }

    fn pack(&self, a: &Allocation) -> DVector<f64> {
        let mut v = DVector::zeros(self.n_vars());
        for (k, u) in self.users.iter().enumerate() {
            let vals = [a.b[(u.n, u.m)], a.p_u[u.n], a.p_s[(u.n, u.m)], a.f_u[u.n], a.f_s[(u.n, u.m)]];
            for j in 0..NV {
                v[NV * k + j] = vals[j] / u.caps[j];
            }
        }
        if self.has_t() {
            v[self.t_index()] = a.t_aux;
        }
        v
    }

    fn unpack_into(&self, v: &DVector<f64>, a: &mut Allocation) {
        for (k, u) in self.users.iter().enumerate() {
            let r = |j: usize| v[NV * k + j] * u.caps[j];
            a.b[(u.n, u.m)] = r(B);
            a.p_u[u.n] = r(PU);
            a.p_s[(u.n, u.m)] = r(PS);
            a.f_u[u.n] = r(FU);
            a.f_s[(u.n, u.m)] = r(FS);
        }
    }

    fn local(&self, v: &DVector<f64>, k: usize) -> [f64; NV] {
        let mut out = [0.0; NV];
        for j in 0..NV {
            out[j] = v[NV * k + j];
        }
        out
    }

    /// Server and user delays of user block `k`.
    fn delays(&self, k: usize, w: &[f64; NV]) -> (f64, f64) {
        let u = &self.users[k];
        let mut ts = u.ts0;
        if u.k_up > 0.0 {
            let (ru, _, _) = rate_derivs(u.snr_up, w[B], w[PU]);
            ts += u.k_up / ru + u.k_fs / w[FS];
        }
        let mut tu = u.k_fu / w[FU];
        if u.k_dn > 0.0 {
            let (rd, _, _) = rate_derivs(u.snr_dn, w[B], w[PS]);
            tu += u.k_dn / rd;
        }
        (ts, tu)
    }

    fn in_domain(&self, v: &DVector<f64>) -> bool {
        v.iter().all(|x| x.is_finite()) && (0..self.users.len()).all(|k| self.local(v, k).iter().all(|x| *x > 0.0))
    }

    /// Surrogate (`transformed = true`) or original objective, without the
    /// `-y w_t T` term.
    fn value(&self, v: &DVector<f64>, transformed: bool) -> f64 {
        let mut f = 0.0;
        for (k, u) in self.users.iter().enumerate() {
            let w = self.local(v, k);
            f += self.varpi_1 * (self.varpi_2 * (w[B] + w[PS] + w[FS] + self.tau)).ln_1p();
            f -= u.e_u * w[FU] * w[FU] + u.e_s * w[FS] * w[FS];
            let (ru, _, _) = rate_derivs(u.snr_up, w[B], w[PU]);
            let (rd, _, _) = rate_derivs(u.snr_dn, w[B], w[PS]);
            if transformed {
                if u.q1 > 0.0 {
                    f -= u.q1 * w[PU] * w[PU] + u.h1 / (ru * ru) + u.q2 * w[PS] * w[PS] + u.h2 / (rd * rd);
                }
            } else if u.o1 > 0.0 {
                f -= u.o1 * w[PU] / ru + u.o2 * w[PS] / rd;
            }
        }
        f
    }

    /// Gradient and Hessian of the negated surrogate objective.
    fn neg_surrogate_derivs(&self, v: &DVector<f64>, grad: &mut DVector<f64>, hess: &mut DMatrix<f64>) {
        for (k, u) in self.users.iter().enumerate() {
            let w = self.local(v, k);
            let o = NV * k;
            let l = 1.0 + self.varpi_2 * (w[B] + w[PS] + w[FS] + self.tau);
            let g1 = self.varpi_1 * self.varpi_2 / l;
            let h1 = -self.varpi_1 * self.varpi_2 * self.varpi_2 / (l * l);
            for &i in &[B, PS, FS] {
                grad[o + i] -= g1;
                for &j in &[B, PS, FS] {
                    hess[(o + i, o + j)] -= h1;
                }
            }
            grad[o + FU] += 2.0 * u.e_u * w[FU];
            hess[(o + FU, o + FU)] += 2.0 * u.e_u;
            grad[o + FS] += 2.0 * u.e_s * w[FS];
            hess[(o + FS, o + FS)] += 2.0 * u.e_s;
            if u.q1 > 0.0 {
                grad[o + PU] += 2.0 * u.q1 * w[PU];
                hess[(o + PU, o + PU)] += 2.0 * u.q1;
                grad[o + PS] += 2.0 * u.q2 * w[PS];
                hess[(o + PS, o + PS)] += 2.0 * u.q2;
                for (h, snr, pj) in [(u.h1, u.snr_up, PU), (u.h2, u.snr_dn, PS)] {
                    // h / rho^2
                    let (r, dr, d2r) = rate_derivs(snr, w[B], w[pj]);
                    let idx = [o + B, o + pj];
                    let c1 = -2.0 * h / r.powi(3);
                    let c2 = 6.0 * h / r.powi(4);
                    for a in 0..2 {
                        grad[idx[a]] += c1 * dr[a];
                        for b in 0..2 {
                            hess[(idx[a], idx[b])] += c2 * dr[a] * dr[b] + c1 * d2r[a][b];
                        }
                    }
                }
            }
        }
    }

    /// Delay rows of block `k` with their gradients and Hessians in the
    /// local variables: `(value, grad, hess)` for server then user side.
    fn delay_derivs(&self, k: usize, w: &[f64; NV]) -> [(f64, [f64; NV], [[f64; NV]; NV]); 2] {
        let u = &self.users[k];
        let mut out = [(0.0, [0.0; NV], [[0.0; NV]; NV]); 2];
        let inv = |c: f64, snr: f64, pj: usize, slot: &mut (f64, [f64; NV], [[f64; NV]; NV])| {
            // c / rho
            let (r, dr, d2r) = rate_derivs(snr, w[B], w[pj]);
            let idx = [B, pj];
            slot.0 += c / r;
            for a in 0..2 {
                slot.1[idx[a]] -= c * dr[a] / (r * r);
                for b in 0..2 {
                    slot.2[idx[a]][idx[b]] += c * (2.0 * dr[a] * dr[b] / r.powi(3) - d2r[a][b] / (r * r));
                }
            }
        };
        out[0].0 = u.ts0;
        if u.k_up > 0.0 {
            inv(u.k_up, u.snr_up, PU, &mut out[0]);
            out[0].0 += u.k_fs / w[FS];
            out[0].1[FS] -= u.k_fs / (w[FS] * w[FS]);
            out[0].2[FS][FS] += 2.0 * u.k_fs / w[FS].powi(3);
        }
        out[1].0 = u.k_fu / w[FU];
        out[1].1[FU] = -u.k_fu / (w[FU] * w[FU]);
        out[1].2[FU][FU] = 2.0 * u.k_fu / w[FU].powi(3);
        if u.k_dn > 0.0 {
            inv(u.k_dn, u.snr_dn, PS, &mut out[1]);
        }
        out
    }

    /// Slacks of every barrier term, or `None` outside the domain.
    fn slacks(&self, v: &DVector<f64>) -> Option<Vec<f64>> {
        if !self.in_domain(v) {
            return None;
        }
        let mut s = Vec::new();
        for k in 0..self.users.len() {
            let w = self.local(v, k);
            s.extend_from_slice(&w);
            s.push(1.0 - w[PU]);
            s.push(1.0 - w[FU]);
            if self.has_t() {
                let (ts, tu) = self.delays(k, &w);
                let t = v[self.t_index()];
                s.push(t - ts);
                s.push(t - tu);
            }
        }
        for members in &self.by_server {
            if members.is_empty() {
                continue;
            }
            for j in [B, PS, FS] {
                s.push(1.0 - members.iter().map(|&k| v[NV * k + j]).sum::<f64>());
            }
        }
        if s.iter().all(|x| *x > 0.0) {
            Some(s)
        } else {
            None
        }
    }

    /// Moves `T` to its exact barrier minimizer with everything else fixed:
    /// the root of `y w_t = mu sum 1 / (T - D_i)` above the largest delay.
    /// Every delay slack then stays at least `mu / (y w_t)`.
    fn recenter_t(&self, v: &mut DVector<f64>, mu: f64) {
        if !self.has_t() {
            return;
        }
        let d: Vec<f64> = (0..self.users.len())
            .flat_map(|k| {
                let (a, b) = self.delays(k, &self.local(v, k));
                [a, b]
            })
            .collect();
        let top = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let excess = |t: f64| self.yt - mu * d.iter().map(|di| 1.0 / (t - di)).sum::<f64>();
        let (mut lo, mut hi) = (top, top + d.len() as f64 * mu / self.yt);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if excess(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        v[self.t_index()] = hi;
    }

    /// Barrier objective `-F + y w_t T - mu sum log s`.
    fn barrier(&self, v: &DVector<f64>, mu: f64) -> Option<f64> {
        let s = self.slacks(v)?;
        let t_cost = if self.has_t() { self.yt * v[self.t_index()] } else { 0.0 };
        Some(-self.value(v, true) + t_cost - mu * s.iter().map(|x| x.ln()).sum::<f64>())
    }

    fn barrier_derivs(&self, v: &DVector<f64>, mu: f64) -> (DVector<f64>, DMatrix<f64>) {
        let nv = self.n_vars();
        let mut g = DVector::zeros(nv);
        let mut h = DMatrix::zeros(nv, nv);
        self.neg_surrogate_derivs(v, &mut g, &mut h);
        let ti = self.t_index();
        if self.has_t() {
            g[ti] += self.yt;
        }
        for k in 0..self.users.len() {
            let o = NV * k;
            let w = self.local(v, k);
            for j in 0..NV {
                g[o + j] -= mu / w[j];
                h[(o + j, o + j)] += mu / (w[j] * w[j]);
            }
            for j in [PU, FU] {
                let s = 1.0 - w[j];
                g[o + j] += mu / s;
                h[(o + j, o + j)] += mu / (s * s);
            }
            if self.has_t() {
                let t = v[ti];
                // Slack values come from `delays` so they agree bit for bit
                // with the domain test in `slacks`.
                let (ts, tu) = self.delays(k, &w);
                for ((_, dg, dh), d) in self.delay_derivs(k, &w).into_iter().zip([ts, tu]) {
                    // s = T - D
                    let s = t - d;
                    let mut full = vec![(ti, -1.0)];
                    for j in 0..NV {
                        if dg[j] != 0.0 {
                            full.push((o + j, dg[j]));
                        }
                    }
                    for &(i, gi) in &full {
                        g[i] += mu * gi / s;
                        for &(j, gj) in &full {
                            h[(i, j)] += mu * gi * gj / (s * s);
                        }
                    }
                    for a in 0..NV {
                        for b in 0..NV {
                            if dh[a][b] != 0.0 {
                                h[(o + a, o + b)] += mu * dh[a][b] / s;
                            }
                        }
                    }
                }
            }
        }
        for members in &self.by_server {
            if members.is_empty() {
                continue;
            }
            for j in [B, PS, FS] {
                let s = 1.0 - members.iter().map(|&k| v[NV * k + j]).sum::<f64>();
                for &a in members {
                    g[NV * a + j] += mu / s;
                    for &b in members {
                        h[(NV * a + j, NV * b + j)] += mu / (s * s);
                    }
                }
            }
        }
        (g, h)
    }

    fn n_barrier_terms(&self) -> usize {
        let per_user = NV + 2 + if self.has_t() { 2 } else { 0 };
        per_user * self.users.len() + 3 * self.by_server.iter().filter(|s| !s.is_empty()).count()
    }
}

/// Objective at fixed `y` before the transform: trust minus `y` times the
/// weighted delay bound `t_aux` and energy.
pub fn objective_original(sc: &Scenario, a: &Allocation, y: f64) -> Result<f64> {
    let pr = Problem::build(sc, a, y, None)?;
    Ok(pr.value(&pr.pack(a), false) - y * sc.params.omega_t * a.t_aux)
}

/// Transformed objective at fixed auxiliaries.
pub fn objective_transformed(sc: &Scenario, a: &Allocation, y: f64, aux: &FpAuxiliaries) -> Result<f64> {
    let pr = Problem::build(sc, a, y, Some(aux))?;
    Ok(pr.value(&pr.pack(a), true) - y * sc.params.omega_t * a.t_aux)
}

/// Gradient of the transformed objective with respect to the physical
/// resources `(b, p_u, p_s, f_u, f_s)` of every connected user, listed as
/// `(user, server, gradient)`.
pub fn transformed_gradient(
    sc: &Scenario,
    a: &Allocation,
    y: f64,
    aux: &FpAuxiliaries,
) -> Result<Vec<(usize, usize, [f64; 5])>> {
    let mut pr = Problem::build(sc, a, y, Some(aux))?;
    pr.yt = 0.0;
    let v = pr.pack(a);
    let nv = pr.n_vars();
    let mut g = DVector::zeros(nv);
    let mut h = DMatrix::zeros(nv, nv);
    pr.neg_surrogate_derivs(&v, &mut g, &mut h);
    Ok(pr
        .users
        .iter()
        .enumerate()
        .map(|(k, u)| {
            let mut out = [0.0; 5];
            for j in 0..NV {
                out[j] = -g[NV * k + j] / u.caps[j];
            }
            (u.n, u.m, out)
        })
        .collect())
}

/// Output of one concave resource solve.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolution {
    pub alloc: Allocation,
    /// Transformed objective at the solution (with `T` at the barrier value).
    pub value: f64,
    /// Duality-gap bound `(#barrier terms) * mu` at the last stage.
    pub gap_bound: f64,
    /// Newton decrement at exit.
    pub kkt_residual: f64,
    pub newton_steps: usize,
    pub stages: usize,
}

/// Maximizes the transformed objective at fixed `(x, phi, gamma)`, `y` and
/// auxiliaries, starting from the resources in `start`.
///
/// Damped Newton on the log-barrier problem; the barrier weight shrinks by
/// 10 per stage until the gap bound falls below `tol * (1 + |F|)`, with at
/// least five stages.
pub fn solve_part2_inner(
    sc: &Scenario,
    start: &Allocation,
    y: f64,
    aux: &FpAuxiliaries,
    tol: f64,
) -> Result<InnerSolution> {
    let pr = Problem::build(sc, start, y, Some(aux))?;
    if pr.users.is_empty() {
        return Err(TcrError::InvalidAllocation("no connected users".into()));
    }
    let mut v = pr.pack(start);
    // Pull the start strictly inside the caps.
    let shrink = 1.0 - 1e-4;
    for k in 0..pr.users.len() {
        for j in 0..NV {
            let x = &mut v[NV * k + j];
            *x = (*x * shrink).max(1e-9);
        }
    }
    if pr.has_t() {
        let ti = pr.t_index();
        let worst = (0..pr.users.len())
            .map(|k| {
                let (a, b) = pr.delays(k, &pr.local(&v, k));
                a.max(b)
            })
            .fold(0.0f64, f64::max);
        v[ti] = worst * (1.0 + 1e-3) + 1e-6;
    }
    if pr.slacks(&v).is_none() {
        return Err(TcrError::Solver("no strictly feasible starting point for the resource step".into()));
    }

    let m_terms = pr.n_barrier_terms() as f64;
    let f0 = pr.value(&v, true).abs();
    let mut mu = 0.1 * (1.0 + f0) / m_terms;
    let mut steps = 0;
    let mut stages = 0;
    let mut decrement = f64::INFINITY;
    loop {
        stages += 1;
        pr.recenter_t(&mut v, mu);
        for _ in 0..200 {
            let (g, h) = pr.barrier_derivs(&v, mu);
            if !(g.iter().all(|x| x.is_finite()) && h.iter().all(|x| x.is_finite())) {
                return Err(TcrError::Solver("non-finite barrier derivatives in the resource step".into()));
            }
            // Shift the diagonal geometrically until the factorization succeeds.
            let mut shift = 0.0;
            let base = 1e-12 * (1.0 + h.diagonal().amax());
            let dx = loop {
                let mut hr = h.clone();
                for i in 0..hr.nrows() {
                    hr[(i, i)] += shift;
                }
                if let Some(ch) = hr.cholesky() {
                    break ch.solve(&(-&g));
                }
                shift = if shift == 0.0 { base } else { shift * 10.0 };
            };
            let slope = g.dot(&dx);
            decrement = -slope;
            if decrement / 2.0 <= 1e-12 * (1.0 + f0) {
                break;
            }
            let phi0 = pr.barrier(&v, mu).expect("iterate stays interior");
            let mut step = 1.0;
            let mut moved = false;
            while step > 1e-14 {
                let trial = &v + step * &dx;
                if let Some(val) = pr.barrier(&trial, mu) {
                    if val <= phi0 + 0.25 * step * slope {
                        v = trial;
                        pr.recenter_t(&mut v, mu);
                        moved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            steps += 1;
            if !moved {
                break;
            }
        }
        let gap = m_terms * mu;
        let f = pr.value(&v, true);
        if stages >= 5 && gap <= tol * (1.0 + f.abs()) {
            break;
        }
        if stages >= 40 {
            break;
        }
        mu *= 0.1;
    }

    let mut alloc = start.clone();
    pr.unpack_into(&v, &mut alloc);
    let t = if pr.has_t() { v[pr.t_index()] } else { total_delay(sc, &alloc)? };
    alloc.t_aux = t;
    let value = pr.value(&v, true) - pr.yt * t;
    alloc.refresh_t_aux(sc)?;
    Ok(InnerSolution {
        alloc,
        value,
        gap_bound: m_terms * mu,
        kkt_residual: decrement.max(0.0),
        newton_steps: steps,
        stages,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Part2Result {
    pub b: DMatrix<f64>,
    pub p_u: Vec<f64>,
    pub p_s: DMatrix<f64>,
    pub f_u: Vec<f64>,
    pub f_s: DMatrix<f64>,
    pub t: f64,
    pub alloc: Allocation,
    /// TCR after each outer pass; the first entry is the start point.
    pub trace: Vec<f64>,
    /// Transformed objective returned by each inner solve.
    pub surrogate_trace: Vec<f64>,
    /// Newton decrement of each inner solve.
    pub kkt_trace: Vec<f64>,
    pub iterations: usize,
}

/// Alternates inner solves and auxiliary/`y` refreshes from `start` until
/// the TCR changes by at most `eps` (relative).
///
/// The Dinkelbach scalar starts at the ratio of `start` and is refreshed
/// after every pass. A pass whose point does not improve `trust - y cost`
/// over the current one is discarded, so the TCR trace never decreases.
pub fn solve_part2(sc: &Scenario, start: &Allocation, tols: &Tolerances) -> Result<Part2Result> {
    let mut cur = start.clone();
    cur.refresh_t_aux(sc)?;
    let mut y = tcr(sc, &cur)?;
    let mut trace = vec![y];
    let mut surrogate_trace = Vec::new();
    let mut kkt_trace = Vec::new();
    let mut iterations = 0;
    for _ in 0..tols.max_part2 {
        iterations += 1;
        let aux = fp_auxiliaries(sc, &cur)?;
        let inner = solve_part2_inner(sc, &cur, y, &aux, 1e-9)?;
        surrogate_trace.push(inner.value);
        kkt_trace.push(inner.kkt_residual);
        let old = -dinkelbach_objective(sc, &cur, y)?;
        let new = -dinkelbach_objective(sc, &inner.alloc, y)?;
        if new > old {
            cur = inner.alloc;
        }
        let ratio = tcr(sc, &cur)?;
        trace.push(ratio);
        let done = relative_converged(ratio, y, tols.eps);
        y = ratio;
        if done {
            break;
        }
    }
    Ok(Part2Result {
        b: cur.b.clone(),
        p_u: cur.p_u.clone(),
        p_s: cur.p_s.clone(),
        f_u: cur.f_u.clone(),
        f_s: cur.f_s.clone(),
        t: cur.t_aux,
        alloc: cur,
        trace,
        surrogate_trace,
        kkt_trace,
        iterations,
    })
}
