//! Primal-dual interior-point method for the same problem class, used where
//! the objective data is too badly scaled for the splitting method to reach
//! useful accuracy.
//!
//! HKM search direction with Mehrotra predictor-corrector steps. Constraint
//! rows are sparse, so the Schur complement is assembled entry by entry from
//! the row triplets instead of from dense matrix products.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{row_norm, SdpProblem, SdpSolution, SdpStatus};
use crate::error::{Result, TcrError};

/// Sparse row in full (both triangles) coordinate form plus its linear part.
struct Row {
    ent: Vec<(usize, usize, f64)>,
    /// `(linear variable, coefficient)`.
    lin: Vec<(usize, f64)>,
    rhs: f64,
}

impl Row {
    /// `<A, W>` for an arbitrary square `W`.
    fn apply(&self, w: &DMatrix<f64>) -> f64 {
        self.ent.iter().map(|&(p, q, a)| a * w[(p, q)]).sum()
    }
}

fn chol(m: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let sym = 0.5 * (m + m.transpose());
    sym.cholesky()
}

/// Largest step in `(0, 1]` keeping `x + a dx` PSD (with factor `lx` of x).
fn psd_step(lx: &Cholesky<f64, Dyn>, dx: &DMatrix<f64>) -> f64 {
    let l = lx.l();
    let Some(linv) = l.clone().try_inverse() else { return 0.0 };
    let w = &linv * dx * linv.transpose();
    let w = 0.5 * (&w + w.transpose());
    let min = w.symmetric_eigenvalues().min();
    if min >= 0.0 {
        1.0
    } else {
        (-1.0 / min).min(1.0)
    }
}

fn lp_step(s: &DVector<f64>, ds: &DVector<f64>) -> f64 {
    s.iter().zip(ds.iter()).fold(1.0f64, |a, (v, d)| if *d < 0.0 { a.min(-v / d) } else { a })
}

/// Solves the problem with an interior-point method. The auxiliary scalar,
/// when present, is treated as nonnegative; every use in this crate has it
/// bounded below by nonnegative delays.
pub fn solve_sdp_ipm(problem: &SdpProblem, tol: f64, max_iter: usize) -> Result<SdpSolution> {
    problem.validate()?;
    if !(tol > 0.0) || max_iter == 0 {
        return Err(TcrError::Solver("tolerance and iteration budget must be positive".into()));
    }
    let k = problem.dim;
    let has_t = problem.aux_cost.is_some();
    let t_off = usize::from(has_t);
    let p = problem.ineq.len();
    let q = t_off + p;
    let n_eq = problem.eq.len();

    // Unit-norm rows.
    let mut rows = Vec::with_capacity(n_eq + p);
    for (r, con) in problem.eq.iter().chain(&problem.ineq).enumerate() {
        let mut lin = Vec::new();
        if has_t && con.aux != 0.0 {
            lin.push((0, con.aux));
        }
        if r >= n_eq {
            lin.push((t_off + r - n_eq, 1.0));
        }
        let norm = (row_norm(con).powi(2) + if r >= n_eq { 1.0 } else { 0.0 }).sqrt();
        let mut ent = Vec::new();
        for &(i, j, v) in con.a.entries() {
            ent.push((i, j, v / norm));
            if i != j {
                ent.push((j, i, v / norm));
            }
        }
        for l in lin.iter_mut() {
            l.1 /= norm;
        }
        rows.push(Row { ent, lin, rhs: con.rhs / norm });
    }
    let m = rows.len();
    let c_max = problem.c.amax().max(problem.aux_cost.unwrap_or(0.0).abs());
    let c_scale = if c_max > 0.0 { 1.0 / c_max } else { 1.0 };
    let c = &problem.c * c_scale;
    let mut c_s = DVector::zeros(q);
    if has_t {
        c_s[0] = problem.aux_cost.unwrap_or(0.0) * c_scale;
    }
    let b = DVector::from_iterator(m, rows.iter().map(|r| r.rhs));
    let b_norm = b.amax();
    let c_norm = c.amax().max(c_s.amax());

    let start = 1.0 + b_norm.max(1.0) * (k as f64).sqrt();
    let mut x = DMatrix::<f64>::identity(k, k) * start;
    let mut z = DMatrix::<f64>::identity(k, k) * (1.0 + c_norm);
    let mut s = DVector::from_element(q, start);
    let mut zs = DVector::from_element(q, 1.0 + c_norm);
    let mut y = DVector::<f64>::zeros(m);
    let dim = (k + q) as f64;

    let apply_all = |w: &DMatrix<f64>, v: &DVector<f64>| -> DVector<f64> {
        DVector::from_iterator(m, rows.iter().map(|r| r.apply(w) + r.lin.iter().map(|&(l, a)| a * v[l]).sum::<f64>()))
    };
    let adjoint = |yv: &DVector<f64>| -> (DMatrix<f64>, DVector<f64>) {
        let mut mat = DMatrix::zeros(k, k);
        let mut vec = DVector::zeros(q);
        for (r, row) in rows.iter().enumerate() {
            for &(p_, q_, a) in &row.ent {
                mat[(p_, q_)] += yv[r] * a;
            }
            for &(l, a) in &row.lin {
                vec[l] += yv[r] * a;
            }
        }
        (mat, vec)
    };

    let mut status = SdpStatus::MaxIters;
    let mut iters = 0;
    let mut trace = Vec::new();
    let mut best_merit = f64::INFINITY;
    let mut best = (x.clone(), s.clone(), f64::INFINITY, f64::INFINITY);
    let mut stall = 0;
    for it in 0..max_iter {
        iters = it + 1;
        let (ay_m, ay_v) = adjoint(&y);
        let rp = &b - apply_all(&x, &s);
        let rd = &c - &z - &ay_m;
        let rds = &c_s - &zs - &ay_v;
        let pobj = c.component_mul(&x).sum() + c_s.dot(&s);
        let dobj = b.dot(&y);
        let p_res = rp.amax() / (1.0 + b_norm);
        let d_res = rd.amax().max(rds.amax()) / (1.0 + c_norm);
        let gap = (pobj - dobj).abs() / (pobj.abs() + dobj.abs()).max(1e-8);
        let merit = p_res.max(d_res).max(gap);
        if merit < best_merit {
            best_merit = merit;
            best = (x.clone(), s.clone(), p_res, gap);
            stall = 0;
        } else {
            stall += 1;
        }
        trace.push(best_merit);
        if merit <= tol {
            status = SdpStatus::Optimal;
            break;
        }
        if stall >= 30 {
            break;
        }

        let Some(zc) = chol(&z) else { break };
        let zinv = zc.inverse();
        let Some(xc) = chol(&x) else { break };
        let mu = (x.component_mul(&z).sum() + s.dot(&zs)) / dim;

        // Schur complement.
        let sz = s.component_div(&zs);
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let mut v = 0.0;
                for &(p1, q1, a1) in &rows[i].ent {
                    for &(p2, q2, a2) in &rows[j].ent {
                        v += a1 * a2 * x[(q1, p2)] * zinv[(q2, p1)];
                    }
                }
                for &(l1, a1) in &rows[i].lin {
                    for &(l2, a2) in &rows[j].lin {
                        if l1 == l2 {
                            v += a1 * a2 * sz[l1];
                        }
                    }
                }
                schur[(i, j)] = v;
                schur[(j, i)] = v;
            }
        }
        // Rows turn dependent on degenerate faces (a single server forces
        // every association entry), so grow a diagonal shift until the
        // factorization succeeds.
        let diag_max = schur.diagonal().amax();
        let mut shift = 0.0;
        let sc = loop {
            let mut reg = schur.clone();
            for i in 0..m {
                reg[(i, i)] *= 1.0 + 1e-13;
                reg[(i, i)] += f64::MIN_POSITIVE + shift;
            }
            if let Some(f) = reg.cholesky() {
                break Some(f);
            }
            shift = if shift == 0.0 { 1e-14 * diag_max } else { shift * 100.0 };
            if !(shift <= 1e-2 * diag_max) {
                break None;
            }
        };
        let Some(sc) = sc else { break };
        // Refinement against the exact Schur matrix keeps primal
        // feasibility from drifting late in the run.
        let schur_solve = |rhs: &DVector<f64>| {
            let mut dy = sc.solve(rhs);
            for _ in 0..2 {
                let res = rhs - &schur * &dy;
                dy += sc.solve(&res);
            }
            dy
        };

        let x_rd_zinv = &x * &rd * &zinv;
        let rhs_fixed = &rp + apply_all(&x_rd_zinv, &sz.component_mul(&rds));
        let direction = |rx: &DMatrix<f64>, rs: &DVector<f64>| {
            let rhs = &rhs_fixed - apply_all(rx, rs);
            let dy = schur_solve(&rhs);
            let (a_dy, a_dy_v) = adjoint(&dy);
            let dz = &rd - &a_dy;
            let dzs = &rds - &a_dy_v;
            let dx = rx - &x * &dz * &zinv;
            let dx = 0.5 * (&dx + dx.transpose());
            let ds = rs - sz.component_mul(&dzs);
            (dx, ds, dy, dz, dzs)
        };

        // Predictor.
        let (dxa, dsa, _, dza, dzsa) = direction(&(-&x), &(-&s));
        let ap = psd_step(&xc, &dxa).min(lp_step(&s, &dsa));
        let ad = psd_step(&zc, &dza).min(lp_step(&zs, &dzsa));
        let mu_aff =
            ((&x + ap * &dxa).component_mul(&(&z + ad * &dza)).sum() + (&s + ap * &dsa).dot(&(&zs + ad * &dzsa))) / dim;
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);

        // Corrector.
        let rx = -&x + sigma * mu * &zinv - &dxa * &dza * &zinv;
        let rs = DVector::from_fn(q, |l, _| -s[l] + (sigma * mu - dsa[l] * dzsa[l]) / zs[l]);
        let (dx, ds, dy, dz, dzs) = direction(&rx, &rs);
        let ap = (0.95 * psd_step(&xc, &dx).min(lp_step(&s, &ds))).min(1.0);
        let ad = (0.95 * psd_step(&zc, &dz).min(lp_step(&zs, &dzs))).min(1.0);
        x += ap * &dx;
        x = 0.5 * (&x + x.transpose());
        s += ap * &ds;
        z += ad * &dz;
        z = 0.5 * (&z + z.transpose());
        zs += ad * &dzs;
        y += ad * &dy;
    }

    let (xb, sb, p_res, gap) = best;
    if status != SdpStatus::Optimal && p_res > 1e3 * tol.max(1e-9) && gap.is_finite() {
        status = SdpStatus::Infeasible;
    }
    let aux_t = if has_t { sb[0] } else { 0.0 };
    let objective = problem.objective_at(&xb, aux_t);
    let primal_residual = problem.max_row_violation(&xb, aux_t);
    let psd_violation = (-xb.clone().symmetric_eigenvalues().min()).max(0.0);
    Ok(SdpSolution {
        x: xb,
        aux_t,
        objective,
        status,
        primal_residual,
        gap,
        psd_violation,
        iterations: iters,
        best_residual_trace: trace,
    })
}
