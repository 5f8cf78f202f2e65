//! Association and offloading step: relaxation, Hungarian rounding and an
//! exact offloading-ratio refinement, all at fixed resources and fixed `y`.

use nalgebra::DMatrix;

use crate::assignment::round_connection_with_slots;
use crate::dashf::dinkelbach_objective;
use crate::error::{Result, TcrError};
use crate::qcqp::{
    build_qcqp, compute_coefficients, compute_coefficients_connected, delay_constants, delay_constants_connected,
    extract_solution, gamma_star, lift_to_sdp, trust_table, Coefficients, DelayConstants,
};
use crate::scenario::{total_delay, Allocation, Scenario, Tolerances};
use crate::sdp::{solve_sdp_ipm, SdpProblem, SdpSolution, SdpStatus};

/// `|new - old| <= eps * max(|old|, |new|)`, with exact equality always
/// counting as converged.
pub fn relative_converged(new: f64, old: f64, eps: f64) -> bool {
    new == old || (new - old).abs() <= eps * old.abs().max(new.abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Part1Result {
    pub x: DMatrix<f64>,
    pub phi: Vec<f64>,
    pub gamma: DMatrix<f64>,
    pub t: f64,
    /// The chosen point with its resources filled in.
    pub alloc: Allocation,
    /// `y * cost - trust` of the best point after each outer pass; the first
    /// entry is the incoming point.
    pub outer_trace: Vec<f64>,
    /// Relaxation objective per inner pass, concatenated over outer passes.
    pub sdr_trace: Vec<f64>,
    /// Refinement objective per pass, concatenated over outer passes.
    pub refine_trace: Vec<f64>,
    /// Inner relaxation passes of the last outer pass.
    pub sdr_passes: usize,
    pub outer_passes: usize,
    /// Number of SDP solves actually run (identical data is not re-solved).
    pub sdp_solves: usize,
    pub sdp_iterations: usize,
    pub degenerate_extractions: usize,
    /// Last relaxation status and residual.
    pub sdp_status: SdpStatus,
    pub sdp_residual: f64,
}

/// Resource table used to price the relaxation: every pair gets its
/// server's caps divided by the slot count `ceil(N / M)`, the share it
/// would hold on a fully loaded server. User power and CPU come from `base`.
pub fn slot_share_resources(sc: &Scenario, base: &Allocation) -> Allocation {
    let k = sc.slots_per_server() as f64;
    let (nu, ns) = (sc.n_users(), sc.n_servers());
    let per = |f: &dyn Fn(usize) -> f64| DMatrix::from_fn(nu, ns, |_, m| f(m) / k);
    Allocation {
        x: base.x.clone(),
        phi: base.phi.clone(),
        gamma: DMatrix::from_element(nu, ns, gamma_star(sc.params.omega_b)),
        b: per(&|m| sc.servers[m].b_max),
        p_u: base.p_u.clone(),
        p_s: per(&|m| sc.servers[m].p_max),
        f_u: base.f_u.clone(),
        f_s: per(&|m| sc.servers[m].f_max),
        t_aux: base.t_aux,
    }
}

/// Server resources split equally under `x`, user resources taken from
/// `base`, `gamma` at its fixed value.
pub fn with_association(sc: &Scenario, base: &Allocation, x: &DMatrix<f64>, phi: &[f64]) -> Result<Allocation> {
    let mut a = Allocation::equal_split(sc, x, phi)?;
    a.p_u = base.p_u.clone();
    a.f_u = base.f_u.clone();
    a.refresh_t_aux(sc)?;
    Ok(a)
}

/// Result of the offloading-ratio refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiRefinement {
    pub phi: Vec<f64>,
    pub t: f64,
    /// `y w_t T + sum_n (A_n + G_{n,m(n)}) phi_n`.
    pub objective: f64,
}

/// Optimal `phi` for a fixed binary association.
///
/// With `x` fixed the problem is a linear program in `(phi, T)`: each user
/// has two delay rows `a phi_n + c <= T` and objective weight
/// `w_n = A_n + G_{n,m(n)}`. For a given `T` every `phi_n` ranges over an
/// interval and takes the endpoint favored by the sign of `w_n`, so the
/// optimal value is a convex piecewise-linear function of `T` whose kinks sit
/// where some interval endpoint crosses 0 or 1. All such breakpoints, plus
/// the smallest feasible `T`, are evaluated and the best kept.
pub fn refine_phi(
    sc: &Scenario,
    x: &DMatrix<f64>,
    coeffs: &Coefficients,
    delays: &DelayConstants,
) -> Result<PhiRefinement> {
    let (nu, ns) = (sc.n_users(), sc.n_servers());
    if x.shape() != (nu, ns) {
        return Err(TcrError::Dimension("association has the wrong size".into()));
    }
    let yt = coeffs.y * sc.params.omega_t;

    // Per user: weight and the two delay rows (slope, intercept).
    let mut users = Vec::with_capacity(nu);
    for n in 0..nu {
        let row = x.row(n);
        let m = match (0..ns).filter(|&m| row[m] > 0.0).collect::<Vec<_>>().as_slice() {
            [m] if row[*m] == 1.0 => *m,
            _ => return Err(TcrError::InvalidAllocation(format!("user {n} is not associated to exactly one server"))),
        };
        let w = coeffs.a[n] + coeffs.g[(n, m)];
        let server = (delays.ts_quad[(n, m)], delays.ts_const[(n, m)]);
        let user = (delays.tu_quad[(n, m)] + delays.tu_lin[n], delays.tu_const[n]);
        users.push((w, [server, user]));
    }

    // Smallest T at which every user has some phi in [0, 1].
    let mut t_lo: f64 = 0.0;
    for (_, rows) in &users {
        let at = |p: f64| rows.iter().map(|(a, c)| a * p + c).fold(f64::NEG_INFINITY, f64::max);
        let mut best = at(0.0).min(at(1.0));
        let (a1, c1) = rows[0];
        let (a2, c2) = rows[1];
        if a1 != a2 {
            let p = (c2 - c1) / (a1 - a2);
            if (0.0..=1.0).contains(&p) {
                best = best.min(at(p));
            }
        }
        t_lo = t_lo.max(best);
    }

    let mut candidates = vec![t_lo];
    for (_, rows) in &users {
        for &(a, c) in rows {
            candidates.push(c);
            candidates.push(c + a);
        }
    }
    candidates.retain(|t| *t >= t_lo);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let choose = |t: f64| -> Option<Vec<f64>> {
        let mut phi = Vec::with_capacity(nu);
        for (w, rows) in &users {
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for &(a, c) in rows {
                if a > 0.0 {
                    hi = hi.min((t - c) / a);
                } else if a < 0.0 {
                    lo = lo.max((t - c) / a);
                } else if c > t * (1.0 + 1e-12) + 1e-12 {
                    return None;
                }
            }
            if lo > hi + 1e-12 {
                return None;
            }
            let hi = hi.max(lo);
            phi.push(if *w < 0.0 { hi } else { lo });
        }
        Some(phi)
    };

    let value = |phi: &[f64], t: f64| yt * t + users.iter().zip(phi).map(|((w, _), p)| w * p).sum::<f64>();
    let actual_t = |phi: &[f64]| {
        users.iter().zip(phi).flat_map(|((_, rows), p)| rows.iter().map(move |(a, c)| a * p + c)).fold(0.0f64, f64::max)
    };

    let mut best: Option<PhiRefinement> = None;
    for &t in &candidates {
        let Some(phi) = choose(t) else { continue };
        let t_used = actual_t(&phi);
        let obj = value(&phi, t_used);
        if best.as_ref().map_or(true, |b| obj < b.objective - 1e-15 * obj.abs()) {
            best = Some(PhiRefinement { phi, t: t_used, objective: obj });
        }
    }
    best.ok_or_else(|| TcrError::Solver("no feasible offloading ratio at any candidate delay bound".into()))
}

/// Runs the association/offloading step from `current` at fixed `y`.
///
/// The returned point never has a larger `y * cost - trust` than `current`.
pub fn solve_part1(sc: &Scenario, current: &Allocation, y: f64, tols: &Tolerances) -> Result<Part1Result> {
    let gamma = gamma_star(sc.params.omega_b);
    let slots = sc.slots_per_server();

    let mut best = current.clone();
    best.refresh_t_aux(sc)?;
    let mut best_v = dinkelbach_objective(sc, &best, y)?;
    let mut outer_trace = vec![best_v];
    let mut sdr_trace = Vec::new();
    let mut refine_trace = Vec::new();
    let mut last_solved: Option<(SdpProblem, SdpSolution)> = None;
    let mut sdp_solves = 0;
    let mut sdp_iterations = 0;
    let mut degenerate = 0;
    let mut sdr_passes = 0;
    let mut outer_passes = 0;
    let mut point = best.clone();

    for _ in 0..tols.max_part1 {
        outer_passes += 1;
        let mut lifted = None;
        let mut sol = None;
        let mut prev_v: Option<f64> = None;
        sdr_passes = 0;
        for _ in 0..tols.max_part1 {
            sdr_passes += 1;
            let pricing = slot_share_resources(sc, &point);
            let coeffs = compute_coefficients(sc, &pricing, y)?;
            let delays = delay_constants(sc, &pricing, gamma)?;
            let trust = trust_table(sc, &pricing)?;
            let form = build_qcqp(sc, &coeffs, &trust, &delays, &pricing)?;
            let lift = lift_to_sdp(&form)?;
            let s = match &last_solved {
                // The solver is deterministic, so identical data gives an
                // identical answer.
                Some((p, s)) if *p == lift.problem => s.clone(),
                _ => {
                    let s = solve_sdp_ipm(&lift.problem, tols.sdp_tol, tols.sdp_max_iter)?;
                    sdp_solves += 1;
                    sdp_iterations += s.iterations;
                    last_solved = Some((lift.problem.clone(), s.clone()));
                    s
                }
            };
            if s.status == SdpStatus::Infeasible {
                return Err(TcrError::Solver(format!(
                    "relaxation infeasible: residual {:.3e}, gap {:.3e}",
                    s.primal_residual, s.gap
                )));
            }
            sdr_trace.push(s.objective);
            let done = prev_v.map_or(false, |p| relative_converged(s.objective, p, tols.eps1));
            prev_v = Some(s.objective);
            lifted = Some(lift);
            sol = Some(s);
            if done {
                break;
            }
        }
        let lift = lifted.expect("at least one relaxation pass");
        let sol = sol.expect("at least one relaxation pass");
        let ext = extract_solution(&sol, &lift.layout)?;
        if ext.degenerate {
            degenerate += 1;
        }
        let x = round_connection_with_slots(&ext.x_frac, slots)?;
        let mut cand = if x == current.x {
            let mut a = current.clone();
            a.phi = ext.phi.clone();
            a
        } else {
            with_association(sc, &point, &x, &ext.phi)?
        };

        let coeffs = compute_coefficients_connected(sc, &cand, y)?;
        let delays = delay_constants_connected(sc, &cand, gamma)?;
        let mut prev_r: Option<f64> = None;
        for _ in 0..tols.max_part1 {
            let r = refine_phi(sc, &x, &coeffs, &delays)?;
            refine_trace.push(r.objective);
            cand.phi = r.phi;
            let done = prev_r.map_or(false, |p| relative_converged(r.objective, p, tols.eps2));
            prev_r = Some(r.objective);
            if done {
                break;
            }
        }
        cand.t_aux = total_delay(sc, &cand)?;
        let v = dinkelbach_objective(sc, &cand, y)?;
        if v < best_v {
            best = cand.clone();
            best_v = v;
        }
        point = cand;
        let prev = *outer_trace.last().expect("trace starts non-empty");
        outer_trace.push(best_v);
        if outer_trace.len() > 2 && relative_converged(best_v, prev, tols.eps3) {
            break;
        }
    }

    let (status, residual) =
        last_solved.as_ref().map_or((SdpStatus::Optimal, 0.0), |(_, s)| (s.status, s.primal_residual));
    Ok(Part1Result {
        x: best.x.clone(),
        phi: best.phi.clone(),
        gamma: best.gamma.clone(),
        t: best.t_aux,
        alloc: best,
        outer_trace,
        sdr_trace,
        refine_trace,
        sdr_passes,
        outer_passes,
        sdp_solves,
        sdp_iterations,
        degenerate_extractions: degenerate,
        sdp_status: status,
        sdp_residual: residual,
    })
}
