//! Association/offloading subproblem: coefficients, the quadratic program in
//! `Q = (phi, x_1, ..., x_M)` and its semidefinite relaxation.
//!
//! With the resources held fixed and the frequency split pinned at
//! [`gamma_star`], the Dinkelbach objective `y * cost - trust` becomes
//!
//! ```text
//! y w_t T + sum_n A_n phi_n + sum_{n,m} x_{n,m} (G_{n,m} phi_n - v_{n,m}) + E0
//! ```
//!
//! where `E0` is the local energy at `phi = 0`. The relaxation lifts `Q` to
//! `S = (Q, 1)(Q, 1)^T`, keeps the auxiliary delay bound `T` as a separate
//! scalar and drops the rank constraint.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Result, TcrError};
use crate::scenario::model::{trust_score, uplink_rate, verification_delay};
use crate::scenario::{Allocation, Scenario};
use crate::sdp::{LinearConstraint, SdpProblem, SdpSolution, SdpStatus, SymSparse};

/// Frequency split `w_b / (1 + w_b)` used for every pair.
pub fn gamma_star(omega_b: f64) -> f64 {
    omega_b / (1.0 + omega_b)
}

/// [`gamma_star`] with the domain check.
pub fn checked_gamma_star(omega_b: f64) -> Result<f64> {
    if !(omega_b > 0.0 && omega_b.is_finite()) {
        return Err(TcrError::InvalidConfig(format!("omega_b must be positive, got {omega_b}")));
    }
    Ok(gamma_star(omega_b))
}

/// Split minimizing processing plus block-generation time,
/// `sqrt(f_d) / (sqrt(f_d) + sqrt(w_b f_b))`.
pub fn delay_optimal_gamma(omega_b: f64, f_data: f64, f_block: f64) -> f64 {
    let a = f_data.sqrt();
    a / (a + (omega_b * f_block).sqrt())
}

/// Split minimizing server computing energy, `-C / (2D)`.
pub fn energy_optimal_gamma(omega_b: f64, f_data: f64, f_block: f64) -> f64 {
    omega_b * f_block / (f_data + omega_b * f_block)
}

/// Index bookkeeping for `Q` and its lift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QLayout {
    pub n: usize,
    pub m: usize,
}

impl QLayout {
    pub fn new(n: usize, m: usize) -> Self {
        Self { n, m }
    }

    pub fn phi(&self, n: usize) -> usize {
        n
    }

    pub fn x(&self, n: usize, m: usize) -> usize {
        self.n + m * self.n + n
    }

    /// Length of `Q`.
    pub fn q_dim(&self) -> usize {
        self.n * self.m + self.n
    }

    /// Size of the lifted matrix.
    pub fn lift_dim(&self) -> usize {
        self.q_dim() + 1
    }

    /// Index of the constant 1 in the lift.
    pub fn corner(&self) -> usize {
        self.q_dim()
    }

    /// Stacks `(phi, x)` into `Q`.
    pub fn pack(&self, x: &DMatrix<f64>, phi: &[f64]) -> DVector<f64> {
        let mut q = DVector::zeros(self.q_dim());
        for n in 0..self.n {
            q[self.phi(n)] = phi[n];
            for m in 0..self.m {
                q[self.x(n, m)] = x[(n, m)];
            }
        }
        q
    }

    pub fn unpack(&self, q: &DVector<f64>) -> (DMatrix<f64>, Vec<f64>) {
        let x = DMatrix::from_fn(self.n, self.m, |n, m| q[self.x(n, m)]);
        let phi = (0..self.n).map(|n| q[self.phi(n)]).collect();
        (x, phi)
    }
}

/// Objective coefficients at fixed resources and Dinkelbach scalar `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub a: DVector<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    /// `B + C gamma + D gamma^2` at [`gamma_star`].
    pub g: DMatrix<f64>,
    pub y: f64,
    pub gamma: f64,
    /// `y w_e sum_n kappa_n d_n f_n F_n^2`, the part of the cost that does
    /// not depend on `(x, phi)`.
    pub energy_const: f64,
}

/// Coefficients for every pair. A zero rate on any pair is an error.
pub fn compute_coefficients(sc: &Scenario, res: &Allocation, y: f64) -> Result<Coefficients> {
    coefficients_where(sc, res, y, |_, _| true)
}

/// Coefficients for the pairs with `x > 0` only; the rest are zero.
pub fn compute_coefficients_connected(sc: &Scenario, res: &Allocation, y: f64) -> Result<Coefficients> {
    coefficients_where(sc, res, y, |n, m| res.x[(n, m)] > 0.0)
}

fn check_shapes(sc: &Scenario, res: &Allocation) -> Result<()> {
    let shape = (sc.n_users(), sc.n_servers());
    if res.b.shape() != shape
        || res.p_s.shape() != shape
        || res.f_s.shape() != shape
        || res.p_u.len() != shape.0
        || res.f_u.len() != shape.0
    {
        return Err(TcrError::Dimension("resource table does not match the scenario".into()));
    }
    Ok(())
}

fn coefficients_where(
    sc: &Scenario,
    res: &Allocation,
    y: f64,
    include: impl Fn(usize, usize) -> bool,
) -> Result<Coefficients> {
    check_shapes(sc, res)?;
    if !(y >= 0.0 && y.is_finite()) {
        return Err(TcrError::InvalidAllocation(format!("Dinkelbach scalar must be nonnegative, got {y}")));
    }
    let p = &sc.params;
    let (nu, ns) = (sc.n_users(), sc.n_servers());
    let gamma = checked_gamma_star(p.omega_b)?;
    let ye = y * p.omega_e;
    let mut out = Coefficients {
        a: DVector::zeros(nu),
        b: DMatrix::zeros(nu, ns),
        c: DMatrix::zeros(nu, ns),
        d: DMatrix::zeros(nu, ns),
        g: DMatrix::zeros(nu, ns),
        y,
        gamma,
        energy_const: 0.0,
    };
    for (n, u) in sc.users.iter().enumerate() {
        let local = u.kappa * u.d * u.f * res.f_u[n] * res.f_u[n];
        out.a[n] = ye * (p.omega_p - 1.0) * local;
        out.energy_const += ye * local;
        for (m, s) in sc.servers.iter().enumerate() {
            if !include(n, m) {
                continue;
            }
            let g = sc.gain(n, m);
            let up = uplink_rate(res.b[(n, m)], res.p_u[n], g, p.noise_density);
            let dn = uplink_rate(res.b[(n, m)], res.p_s[(n, m)], g, p.noise_density);
            if !(up > 0.0 && dn > 0.0) {
                return Err(TcrError::DivisionGuard { n, m, what: "zero link rate in coefficients" });
            }
            let k = ye * s.kappa * u.d * res.f_s[(n, m)].powi(2);
            let tx = ye * u.d * (res.p_u[n] / up + res.p_s[(n, m)] * p.omega_p / dn);
            let b = tx + p.omega_b * s.f_block * k;
            let c = -2.0 * p.omega_b * s.f_block * k;
            let d = (s.f_data + p.omega_b * s.f_block) * k;
            out.b[(n, m)] = b;
            out.c[(n, m)] = c;
            out.d[(n, m)] = d;
            out.g[(n, m)] = b + c * gamma + d * gamma * gamma;
        }
    }
    Ok(out)
}

/// Constants of the delay constraints at fixed resources and `gamma`.
///
/// Server side: `x phi ts_quad + ts_const <= T`.
/// User side: `x phi tu_quad + tu_lin phi + tu_const <= T`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayConstants {
    pub ts_quad: DMatrix<f64>,
    pub ts_const: DMatrix<f64>,
    pub tu_quad: DMatrix<f64>,
    pub tu_lin: DVector<f64>,
    pub tu_const: DVector<f64>,
}

/// Delay constants for every pair; zero rates or frequencies are errors.
pub fn delay_constants(sc: &Scenario, res: &Allocation, gamma: f64) -> Result<DelayConstants> {
    delay_constants_where(sc, res, gamma, |_, _| true)
}

/// Delay constants for pairs with `x > 0`; other pair entries are zero.
pub fn delay_constants_connected(sc: &Scenario, res: &Allocation, gamma: f64) -> Result<DelayConstants> {
    delay_constants_where(sc, res, gamma, |n, m| res.x[(n, m)] > 0.0)
}

fn delay_constants_where(
    sc: &Scenario,
    res: &Allocation,
    gamma: f64,
    include: impl Fn(usize, usize) -> bool,
) -> Result<DelayConstants> {
    check_shapes(sc, res)?;
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(TcrError::InvalidAllocation(format!("gamma {gamma} outside (0, 1)")));
    }
    let p = &sc.params;
    let (nu, ns) = (sc.n_users(), sc.n_servers());
    let mut out = DelayConstants {
        ts_quad: DMatrix::zeros(nu, ns),
        ts_const: DMatrix::zeros(nu, ns),
        tu_quad: DMatrix::zeros(nu, ns),
        tu_lin: DVector::zeros(nu),
        tu_const: DVector::zeros(nu),
    };
    for (n, u) in sc.users.iter().enumerate() {
        let fu = res.f_u[n];
        if !(fu > 0.0) {
            return Err(TcrError::DivisionGuard { n, m: 0, what: "zero user frequency" });
        }
        out.tu_lin[n] = (p.omega_p - 1.0) * u.d * u.f / fu;
        out.tu_const[n] = u.d * u.f / fu;
        for (m, s) in sc.servers.iter().enumerate() {
            if !include(n, m) {
                continue;
            }
            let g = sc.gain(n, m);
            let up = uplink_rate(res.b[(n, m)], res.p_u[n], g, p.noise_density);
            let dn = uplink_rate(res.b[(n, m)], res.p_s[(n, m)], g, p.noise_density);
            let f = res.f_s[(n, m)];
            if !(up > 0.0 && dn > 0.0) {
                return Err(TcrError::DivisionGuard { n, m, what: "zero link rate in delay constants" });
            }
            if !(f > 0.0) {
                return Err(TcrError::DivisionGuard { n, m, what: "zero server frequency" });
            }
            out.ts_quad[(n, m)] =
                u.d / up + u.d * s.f_data / (gamma * f) + u.d * p.omega_b * s.f_block / ((1.0 - gamma) * f);
            out.ts_const[(n, m)] = p.block_propagation_delay() + verification_delay(sc, res, n, m)?;
            out.tu_quad[(n, m)] = u.d * p.omega_p / dn;
        }
    }
    Ok(out)
}

/// Trust score of every pair under a resource table.
pub fn trust_table(sc: &Scenario, res: &Allocation) -> Result<DMatrix<f64>> {
    check_shapes(sc, res)?;
    let mut v = DMatrix::zeros(sc.n_users(), sc.n_servers());
    for n in 0..sc.n_users() {
        for m in 0..sc.n_servers() {
            v[(n, m)] = trust_score(sc, res, n, m)?;
        }
    }
    Ok(v)
}

/// The quadratic program in `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct QcqpForm {
    pub layout: QLayout,
    pub y: f64,
    pub omega_t: f64,
    /// Symmetric, so that `Q^T P0 Q = sum G x phi`.
    pub p0: DMatrix<f64>,
    /// Trust part of the linear objective, `-v` on the `x` entries.
    pub w0: DVector<f64>,
    /// `A` on the `phi` entries.
    pub w1: DVector<f64>,
    pub coeffs: Coefficients,
    pub trust: DMatrix<f64>,
    pub delays: DelayConstants,
    /// Per-pair resource use divided by the server cap, one row per
    /// resource (bandwidth, power, CPU).
    pub resource_share: [DMatrix<f64>; 3],
}

/// Assembles the quadratic program from its data.
pub fn build_qcqp(
    sc: &Scenario,
    coeffs: &Coefficients,
    trust: &DMatrix<f64>,
    delays: &DelayConstants,
    resources: &Allocation,
) -> Result<QcqpForm> {
    let (nu, ns) = (sc.n_users(), sc.n_servers());
    let lay = QLayout::new(nu, ns);
    let shape = (nu, ns);
    for (name, sh) in [
        ("G", coeffs.g.shape()),
        ("trust", trust.shape()),
        ("server delay", delays.ts_quad.shape()),
        ("server delay constant", delays.ts_const.shape()),
        ("user delay", delays.tu_quad.shape()),
    ] {
        if sh != shape {
            return Err(TcrError::Dimension(format!("{name} block is {sh:?}, expected {shape:?}")));
        }
    }
    if coeffs.a.len() != nu || delays.tu_lin.len() != nu || delays.tu_const.len() != nu {
        return Err(TcrError::Dimension("per-user block has the wrong length".into()));
    }
    check_shapes(sc, resources)?;

    let q = lay.q_dim();
    let mut p0 = DMatrix::zeros(q, q);
    let mut w0 = DVector::zeros(q);
    let mut w1 = DVector::zeros(q);
    for n in 0..nu {
        w1[lay.phi(n)] = coeffs.a[n];
        for m in 0..ns {
            let (i, j) = (lay.phi(n), lay.x(n, m));
            p0[(i, j)] = 0.5 * coeffs.g[(n, m)];
            p0[(j, i)] = 0.5 * coeffs.g[(n, m)];
            w0[j] = -trust[(n, m)];
        }
    }
    let share = |mat: &DMatrix<f64>, cap: &dyn Fn(usize) -> f64| DMatrix::from_fn(nu, ns, |n, m| mat[(n, m)] / cap(m));
    let resource_share = [
        share(&resources.b, &|m| sc.servers[m].b_max),
        share(&resources.p_s, &|m| sc.servers[m].p_max),
        share(&resources.f_s, &|m| sc.servers[m].f_max),
    ];
    Ok(QcqpForm {
        layout: lay,
        y: coeffs.y,
        omega_t: sc.params.omega_t,
        p0,
        w0,
        w1,
        coeffs: coeffs.clone(),
        trust: trust.clone(),
        delays: delays.clone(),
        resource_share,
    })
}

impl QcqpForm {
    /// `Q^T P0 Q + (W0 + W1)^T Q + y w_t T`.
    pub fn objective(&self, q: &DVector<f64>, t: f64) -> f64 {
        q.dot(&(&self.p0 * q)) + (&self.w0 + &self.w1).dot(q) + self.y * self.omega_t * t
    }

    /// The same objective written term by term in `(x, phi)`.
    pub fn objective_xphi(&self, x: &DMatrix<f64>, phi: &[f64], t: f64) -> f64 {
        let c = &self.coeffs;
        let mut v = self.y * self.omega_t * t;
        for n in 0..self.layout.n {
            v += c.a[n] * phi[n];
            for m in 0..self.layout.m {
                v += x[(n, m)] * (c.g[(n, m)] * phi[n] - self.trust[(n, m)]);
            }
        }
        v
    }

    /// Quadratic form of the server-side delay of pair `(n, m)` and its
    /// constant.
    pub fn server_delay_form(&self, n: usize, m: usize) -> (SymSparse, f64) {
        let lay = &self.layout;
        let mut a = SymSparse::new(lay.q_dim());
        a.add(lay.phi(n), lay.x(n, m), 0.5 * self.delays.ts_quad[(n, m)]);
        (a, self.delays.ts_const[(n, m)])
    }

    /// Quadratic part, linear part and constant of the user-side delay.
    pub fn user_delay_form(&self, n: usize, m: usize) -> (SymSparse, DVector<f64>, f64) {
        let lay = &self.layout;
        let mut a = SymSparse::new(lay.q_dim());
        a.add(lay.phi(n), lay.x(n, m), 0.5 * self.delays.tu_quad[(n, m)]);
        let mut lin = DVector::zeros(lay.q_dim());
        lin[lay.phi(n)] = self.delays.tu_lin[n];
        (a, lin, self.delays.tu_const[n])
    }

    /// Server-side delay bound of `(n, m)` evaluated at `Q`.
    pub fn server_delay_at(&self, q: &DVector<f64>, n: usize, m: usize) -> f64 {
        let (a, c) = self.server_delay_form(n, m);
        quad(&a, q) + c
    }

    pub fn user_delay_at(&self, q: &DVector<f64>, n: usize, m: usize) -> f64 {
        let (a, lin, c) = self.user_delay_form(n, m);
        quad(&a, q) + lin.dot(q) + c
    }

    /// Smallest `T` meeting every delay row at `Q`.
    pub fn min_t(&self, q: &DVector<f64>) -> f64 {
        let mut t: f64 = 0.0;
        for n in 0..self.layout.n {
            for m in 0..self.layout.m {
                t = t.max(self.server_delay_at(q, n, m)).max(self.user_delay_at(q, n, m));
            }
        }
        t
    }

    /// Dumps the lifted problem in the SDP interchange format.
    pub fn write_debug_dump<W: Write>(&self, out: &mut W) -> Result<()> {
        lift_to_sdp(self)?.problem.write_sdpa(out)
    }
}

fn quad(a: &SymSparse, q: &DVector<f64>) -> f64 {
    a.entries().iter().map(|&(i, j, v)| if i == j { v * q[i] * q[i] } else { 2.0 * v * q[i] * q[j] }).sum()
}

/// Row counts of each constraint family in a lifted problem, in the order
/// they appear.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowCounts {
    /// Equalities: corner, binary `x^2 = x`, one association per user,
    /// `phi sum_m x = phi`.
    pub corner: usize,
    pub binary: usize,
    pub single_association: usize,
    pub phi_times_association: usize,
    /// Inequalities.
    pub phi_box: usize,
    pub resources: usize,
    pub server_delay: usize,
    pub user_delay: usize,
    pub phi_square: usize,
    pub mccormick: usize,
}

/// The relaxation plus the bookkeeping needed to read it back.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedSdp {
    pub problem: SdpProblem,
    pub layout: QLayout,
    pub counts: RowCounts,
}

/// Lifts a quadratic program to its semidefinite relaxation.
///
/// Besides the rows implied by the quadratic program, the lift carries
/// valid cuts that keep it bounded: `phi^2 <= phi`, the four McCormick
/// bounds on every `phi x` product, and `phi sum_m x = phi`.
pub fn lift_to_sdp(form: &QcqpForm) -> Result<LiftedSdp> {
    let lay = form.layout;
    let (nu, ns) = (lay.n, lay.m);
    let k = lay.lift_dim();
    let l = lay.corner();

    let mut c = DMatrix::zeros(k, k);
    c.view_mut((0, 0), (lay.q_dim(), lay.q_dim())).copy_from(&form.p0);
    let w = &form.w0 + &form.w1;
    for i in 0..lay.q_dim() {
        c[(i, l)] = 0.5 * w[i];
        c[(l, i)] = 0.5 * w[i];
    }
    let mut problem = SdpProblem::new(c);
    problem.aux_cost = Some(form.y * form.omega_t);

    let single = |i: usize, j: usize, v: f64| {
        let mut a = SymSparse::new(k);
        a.add(i, j, if i == j { v } else { 0.5 * v });
        a
    };

    // Equalities.
    problem.eq.push(LinearConstraint::new(single(l, l, 1.0), 1.0));
    for m in 0..ns {
        for n in 0..nu {
            let x = lay.x(n, m);
            let mut a = SymSparse::new(k);
            a.add(x, x, 1.0);
            a.add(x, l, -0.5);
            problem.eq.push(LinearConstraint::new(a, 0.0));
        }
    }
    for n in 0..nu {
        let mut a = SymSparse::new(k);
        for m in 0..ns {
            a.add(lay.x(n, m), l, 0.5);
        }
        a.add(l, l, -1.0);
        problem.eq.push(LinearConstraint::new(a, 0.0));
    }
    for n in 0..nu {
        let mut a = SymSparse::new(k);
        for m in 0..ns {
            a.add(lay.phi(n), lay.x(n, m), 0.5);
        }
        a.add(lay.phi(n), l, -0.5);
        problem.eq.push(LinearConstraint::new(a, 0.0));
    }

    // Inequalities.
    for n in 0..nu {
        let mut upper = single(lay.phi(n), l, 1.0);
        upper.add(l, l, -1.0);
        problem.ineq.push(LinearConstraint::new(upper, 0.0));
        problem.ineq.push(LinearConstraint::new(single(lay.phi(n), l, -1.0), 0.0));
    }
    for share in &form.resource_share {
        for m in 0..ns {
            let mut a = SymSparse::new(k);
            for n in 0..nu {
                a.add(lay.x(n, m), l, 0.5 * share[(n, m)]);
            }
            a.add(l, l, -1.0);
            problem.ineq.push(LinearConstraint::new(a, 0.0));
        }
    }
    for n in 0..nu {
        for m in 0..ns {
            let mut a = single(lay.phi(n), lay.x(n, m), form.delays.ts_quad[(n, m)]);
            a.add(l, l, form.delays.ts_const[(n, m)]);
            problem.ineq.push(LinearConstraint::with_aux(a, -1.0, 0.0));
        }
    }
    for n in 0..nu {
        for m in 0..ns {
            let mut a = single(lay.phi(n), lay.x(n, m), form.delays.tu_quad[(n, m)]);
            a.add(lay.phi(n), l, 0.5 * form.delays.tu_lin[n]);
            a.add(l, l, form.delays.tu_const[n]);
            problem.ineq.push(LinearConstraint::with_aux(a, -1.0, 0.0));
        }
    }
    for n in 0..nu {
        let mut a = single(lay.phi(n), lay.phi(n), 1.0);
        a.add(lay.phi(n), l, -0.5);
        problem.ineq.push(LinearConstraint::new(a, 0.0));
    }
    for n in 0..nu {
        for m in 0..ns {
            let (p, x) = (lay.phi(n), lay.x(n, m));
            // phi x >= 0
            problem.ineq.push(LinearConstraint::new(single(p, x, -1.0), 0.0));
            // phi x <= x
            let mut a = single(p, x, 1.0);
            a.add(x, l, -0.5);
            problem.ineq.push(LinearConstraint::new(a, 0.0));
            // phi x <= phi
            let mut a = single(p, x, 1.0);
            a.add(p, l, -0.5);
            problem.ineq.push(LinearConstraint::new(a, 0.0));
            // phi x >= phi + x - 1
            let mut a = single(p, x, -1.0);
            a.add(p, l, 0.5);
            a.add(x, l, 0.5);
            a.add(l, l, -1.0);
            problem.ineq.push(LinearConstraint::new(a, 0.0));
        }
    }

    let counts = RowCounts {
        corner: 1,
        binary: nu * ns,
        single_association: nu,
        phi_times_association: nu,
        phi_box: 2 * nu,
        resources: 3 * ns,
        server_delay: nu * ns,
        user_delay: nu * ns,
        phi_square: nu,
        mccormick: 4 * nu * ns,
    };
    debug_assert_eq!(
        problem.eq.len(),
        counts.corner + counts.binary + counts.single_association + counts.phi_times_association
    );
    Ok(LiftedSdp { problem, layout: lay, counts })
}

/// Lifts `(Q, 1)` to the rank-one matrix `S`.
pub fn rank_one_lift(q: &DVector<f64>) -> DMatrix<f64> {
    let mut v = DVector::zeros(q.len() + 1);
    v.rows_mut(0, q.len()).copy_from(q);
    v[q.len()] = 1.0;
    &v * v.transpose()
}

/// Continuous point read from a solved relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct Extracted {
    pub x_frac: DMatrix<f64>,
    pub phi: Vec<f64>,
    pub t: f64,
    /// Set when the corner entry vanished (eigenvector fallback used) or the
    /// recovered association is all zero.
    pub degenerate: bool,
}

/// Reads `Q` from the last column of `S` divided by the corner entry and
/// clips it to the unit box. When the corner is below `1e-9` the leading
/// eigenvector, scaled to end in 1, is used instead.
pub fn extract_solution(sol: &SdpSolution, layout: &QLayout) -> Result<Extracted> {
    if sol.status == SdpStatus::Infeasible {
        return Err(TcrError::Solver(format!("relaxation reported infeasible (residual {:.3e})", sol.primal_residual)));
    }
    let k = layout.lift_dim();
    if sol.x.shape() != (k, k) {
        return Err(TcrError::Dimension(format!("lifted matrix is {:?}, expected {k}x{k}", sol.x.shape())));
    }
    let l = layout.corner();
    let corner = sol.x[(l, l)];
    let mut degenerate = false;
    let q: DVector<f64> = if corner > 1e-9 {
        DVector::from_fn(layout.q_dim(), |i, _| sol.x[(i, l)] / corner)
    } else {
        degenerate = true;
        let eig = SymmetricEigen::new(sol.x.clone());
        let top = eig.eigenvalues.imax();
        let v = eig.eigenvectors.column(top);
        if v[l].abs() <= 1e-12 {
            return Err(TcrError::Degenerate("lifted matrix carries no information on the constant".into()));
        }
        DVector::from_fn(layout.q_dim(), |i, _| v[i] / v[l])
    };
    let q = q.map(|v| v.clamp(0.0, 1.0));
    let (x_frac, phi) = layout.unpack(&q);
    if x_frac.iter().all(|v| *v == 0.0) {
        degenerate = true;
    }
    Ok(Extracted { x_frac, phi, t: sol.aux_t, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_star_values() {
        assert_eq!(gamma_star(1.0), 0.5);
        assert_eq!(gamma_star(3.0), 0.75);
        assert!(gamma_star(1e-12) > 0.0 && gamma_star(1e-12) < 1e-11);
        assert!(checked_gamma_star(0.0).is_err());
        assert!(checked_gamma_star(-1.0).is_err());
    }

    #[test]
    fn split_minimizers_agree_only_in_the_symmetric_case() {
        assert!((delay_optimal_gamma(1.0, 2.0, 2.0) - 0.5).abs() < 1e-15);
        assert!((energy_optimal_gamma(1.0, 2.0, 2.0) - 0.5).abs() < 1e-15);
        assert!((delay_optimal_gamma(1.0, 279.62, 737.5) - 0.5).abs() > 0.1);
    }

    #[test]
    fn layout_indices() {
        let lay = QLayout::new(2, 2);
        assert_eq!(lay.q_dim(), 6);
        assert_eq!(lay.lift_dim(), 7);
        assert_eq!((lay.x(0, 0), lay.x(1, 0), lay.x(0, 1), lay.x(1, 1)), (2, 3, 4, 5));
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let q = lay.pack(&x, &[0.25, 0.75]);
        assert_eq!(lay.unpack(&q), (x, vec![0.25, 0.75]));
    }

    #[test]
    fn degenerate_corner_column_is_flagged() {
        let lay = QLayout::new(1, 1);
        let mut s = DMatrix::zeros(3, 3);
        s[(2, 2)] = 1.0;
        let sol = SdpSolution {
            x: s,
            aux_t: 2.0,
            objective: 0.0,
            status: SdpStatus::Optimal,
            primal_residual: 0.0,
            gap: 0.0,
            psd_violation: 0.0,
            iterations: 1,
            best_residual_trace: vec![0.0],
        };
        let e = extract_solution(&sol, &lay).unwrap();
        assert!(e.degenerate);
        assert_eq!(e.phi, vec![0.0]);
        assert_eq!(e.t, 2.0);
    }
}
