//! Small dense semidefinite programs solved by operator splitting, with an
//! interior-point alternative for badly scaled data.
//!
//! The problem is
//!
//! ```text
//! minimize    <C, X> + c_T T
//! subject to  <A_i, X> + a_i T  = b_i
//!             <B_j, X> + a_j T <= c_j
//!             X PSD,  T free (only present when `aux_cost` is set)
//! ```
//!
//! Internally the matrix is vectorized (`svec`, off-diagonals scaled by
//! sqrt 2), inequalities get nonnegative slacks, and ADMM alternates between
//! the affine set and the cone `PSD x R x R_+^p`. Rows and columns are
//! equilibrated first because the model data spans many orders of magnitude.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Result, TcrError};

mod ipm;
pub use ipm::solve_sdp_ipm;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Symmetric matrix stored as upper-triangle triplets `(i, j, v)` with
/// `i <= j`, meaning `M[i][j] = M[j][i] = v`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SymSparse {
    pub dim: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SymSparse {
    pub fn new(dim: usize) -> Self {
        Self { dim, entries: Vec::new() }
    }

    /// Adds `v` to `M[i][j]` and `M[j][i]` (once when `i == j`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.dim && j < self.dim, "index out of range");
        if v == 0.0 {
            return;
        }
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        if let Some(e) = self.entries.iter_mut().find(|e| e.0 == a && e.1 == b) {
            e.2 += v;
        } else {
            self.entries.push((a, b, v));
        }
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut s = Self::new(m.nrows());
        for j in 0..m.ncols() {
            for i in 0..=j {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                if v != 0.0 {
                    s.entries.push((i, j, v));
                }
            }
        }
        s
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(i, j, v) in &self.entries {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }

    /// `Tr(M X)` for symmetric `X`.
    pub fn inner(&self, x: &DMatrix<f64>) -> f64 {
        self.entries.iter().map(|&(i, j, v)| if i == j { v * x[(i, i)] } else { 2.0 * v * x[(i, j)] }).sum()
    }
}

/// One trace constraint `<A, X> + aux T (= or <=) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub a: SymSparse,
    pub aux: f64,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn new(a: SymSparse, rhs: f64) -> Self {
        Self { a, aux: 0.0, rhs }
    }

    pub fn with_aux(a: SymSparse, aux: f64, rhs: f64) -> Self {
        Self { a, aux, rhs }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub dim: usize,
    /// Symmetric objective matrix.
    pub c: DMatrix<f64>,
    /// Objective coefficient of the auxiliary scalar; `None` removes it.
    pub aux_cost: Option<f64>,
    pub eq: Vec<LinearConstraint>,
    pub ineq: Vec<LinearConstraint>,
}

impl SdpProblem {
    pub fn new(c: DMatrix<f64>) -> Self {
        Self { dim: c.nrows(), c, aux_cost: None, eq: Vec::new(), ineq: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c.shape() != (self.dim, self.dim) {
            return Err(TcrError::Dimension("objective is not dim x dim".into()));
        }
        let asym = (&self.c - self.c.transpose()).abs().max();
        if asym > 1e-12 * (1.0 + self.c.abs().max()) {
            return Err(TcrError::InvalidAllocation("objective matrix is not symmetric".into()));
        }
        for con in self.eq.iter().chain(&self.ineq) {
            if con.a.dim != self.dim {
                return Err(TcrError::Dimension("constraint matrix has the wrong size".into()));
            }
            if con.aux != 0.0 && self.aux_cost.is_none() {
                return Err(TcrError::Dimension(
                    "constraint uses the auxiliary scalar but the problem has none".into(),
                ));
            }
            if !con.rhs.is_finite() || con.a.entries().iter().any(|e| !e.2.is_finite()) || !con.aux.is_finite() {
                return Err(TcrError::InvalidAllocation("non-finite constraint data".into()));
            }
        }
        if self.c.iter().any(|v| !v.is_finite()) {
            return Err(TcrError::InvalidAllocation("non-finite objective".into()));
        }
        Ok(())
    }

    /// Objective value at `(X, T)`.
    pub fn objective_at(&self, x: &DMatrix<f64>, t: f64) -> f64 {
        self.c.component_mul(x).sum() + self.aux_cost.map_or(0.0, |c| c * t)
    }

    /// Largest violation of the equality and inequality rows at `(X, T)`,
    /// each row measured after scaling to unit norm.
    pub fn max_row_violation(&self, x: &DMatrix<f64>, t: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for (con, is_eq) in self.eq.iter().map(|c| (c, true)).chain(self.ineq.iter().map(|c| (c, false))) {
            let norm = row_norm(con);
            let r = con.a.inner(x) + con.aux * t - con.rhs;
            let v = if is_eq { r.abs() } else { r.max(0.0) };
            worst = worst.max(v / norm);
        }
        worst
    }

    /// Writes the problem in SDPA sparse format (the convention used by
    /// CSDP: maximize `tr(F0 Y)` subject to `tr(Fi Y) = ci`). Block 1 is
    /// `X`; block 2 is diagonal and holds one slack per inequality followed
    /// by the positive and negative parts of `T`.
    pub fn write_sdpa<W: Write>(&self, out: &mut W) -> Result<()> {
        let p = self.ineq.len();
        let n_lp = p + if self.aux_cost.is_some() { 2 } else { 0 };
        let rows: Vec<(&LinearConstraint, Option<usize>)> =
            self.eq.iter().map(|c| (c, None)).chain(self.ineq.iter().enumerate().map(|(j, c)| (c, Some(j)))).collect();
        writeln!(out, "\"tcr sdp dump: {} x {}, {} eq, {} ineq\"", self.dim, self.dim, self.eq.len(), p)?;
        writeln!(out, "{}", rows.len())?;
        writeln!(out, "{}", if n_lp > 0 { 2 } else { 1 })?;
        if n_lp > 0 {
            writeln!(out, "{} -{}", self.dim, n_lp)?;
        } else {
            writeln!(out, "{}", self.dim)?;
        }
        let rhs: Vec<String> = rows.iter().map(|(c, _)| format!("{:e}", c.rhs)).collect();
        writeln!(out, "{}", rhs.join(" "))?;
        for j in 0..self.dim {
            for i in 0..=j {
                let v = self.c[(i, j)];
                if v != 0.0 {
                    writeln!(out, "0 1 {} {} {:e}", i + 1, j + 1, -v)?;
                }
            }
        }
        if let Some(ct) = self.aux_cost {
            writeln!(out, "0 2 {} {} {:e}", p + 1, p + 1, -ct)?;
            writeln!(out, "0 2 {} {} {:e}", p + 2, p + 2, ct)?;
        }
        for (k, (con, slack)) in rows.iter().enumerate() {
            let mut sorted = con.a.entries().to_vec();
            sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
            for (i, j, v) in sorted {
                writeln!(out, "{} 1 {} {} {:e}", k + 1, i + 1, j + 1, v)?;
            }
            if let Some(s) = slack {
                writeln!(out, "{} 2 {} {} 1", k + 1, s + 1, s + 1)?;
            }
            if con.aux != 0.0 {
                writeln!(out, "{} 2 {} {} {:e}", k + 1, p + 1, p + 1, con.aux)?;
                writeln!(out, "{} 2 {} {} {:e}", k + 1, p + 2, p + 2, -con.aux)?;
            }
        }
        Ok(())
    }
}

fn row_norm(con: &LinearConstraint) -> f64 {
    let s: f64 = con.a.entries().iter().map(|&(i, j, v)| if i == j { v * v } else { 2.0 * v * v }).sum::<f64>()
        + con.aux * con.aux;
    s.sqrt().max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    MaxIters,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct SdpSettings {
    pub tol: f64,
    pub max_iter: usize,
    /// Over-relaxation factor in (0, 2).
    pub alpha: f64,
    pub rho: f64,
    /// Iterations between step-size updates.
    pub adapt_every: usize,
    pub scaling_passes: usize,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 50_000, alpha: 1.6, rho: 0.1, adapt_every: 25, scaling_passes: 20 }
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: DMatrix<f64>,
    pub aux_t: f64,
    pub objective: f64,
    pub status: SdpStatus,
    /// Largest unit-row constraint violation.
    pub primal_residual: f64,
    /// Relative primal-dual objective gap.
    pub gap: f64,
    /// Most negative eigenvalue of `x`, clamped at 0.
    pub psd_violation: f64,
    pub iterations: usize,
    /// Best merit seen so far, one entry per iteration.
    pub best_residual_trace: Vec<f64>,
}

/// Solves with default settings apart from `tol` and `max_iter`.
pub fn solve_sdp(problem: &SdpProblem, tol: f64, max_iter: usize) -> Result<SdpSolution> {
    let settings = SdpSettings { tol, max_iter, ..SdpSettings::default() };
    solve_sdp_with(problem, &settings, None)
}

// Compressed sparse rows of the constraint matrix in svec coordinates.
struct Rows {
    idx: Vec<Vec<usize>>,
    val: Vec<Vec<f64>>,
}

impl Rows {
    fn dot(&self, r: usize, v: &[f64]) -> f64 {
        self.idx[r].iter().zip(&self.val[r]).map(|(&j, &a)| a * v[j]).sum()
    }

    fn mul(&self, v: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.dot(r, v);
        }
    }

    fn mul_t_sub(&self, y: &[f64], out: &mut [f64]) {
        for r in 0..self.idx.len() {
            let yr = y[r];
            if yr == 0.0 {
                continue;
            }
            for (&j, &a) in self.idx[r].iter().zip(&self.val[r]) {
                out[j] -= a * yr;
            }
        }
    }
}

struct Layout {
    t_col: Option<usize>,
    slack0: usize,
    n: usize,
}

impl Layout {
    fn svec_index(&self, i: usize, j: usize) -> usize {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        b * (b + 1) / 2 + a
    }
}

fn svec(m: &DMatrix<f64>, out: &mut [f64]) {
    let k = m.nrows();
    let mut p = 0;
    for j in 0..k {
        for i in 0..=j {
            out[p] = if i == j { m[(i, i)] } else { SQRT2 * 0.5 * (m[(i, j)] + m[(j, i)]) };
            p += 1;
        }
    }
}

fn smat(v: &[f64], k: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(k, k);
    let mut p = 0;
    for j in 0..k {
        for i in 0..=j {
            if i == j {
                m[(i, i)] = v[p];
            } else {
                let s = v[p] / SQRT2;
                m[(i, j)] = s;
                m[(j, i)] = s;
            }
            p += 1;
        }
    }
    m
}

/// Projects a symmetric matrix onto the PSD cone.
pub fn project_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let k = m.nrows();
    let sym = 0.5 * (m + m.transpose());
    let eig = SymmetricEigen::new(sym.clone());
    let neg = eig.eigenvalues.iter().filter(|&&l| l < 0.0).count();
    if neg == 0 {
        return sym;
    }
    let mut out;
    if neg <= k / 2 {
        // Subtract the negative part.
        out = sym;
        for (c, &l) in eig.eigenvalues.iter().enumerate() {
            if l < 0.0 {
                let v = eig.eigenvectors.column(c);
                out.ger(-l, &v, &v, 1.0);
            }
        }
    } else {
        out = DMatrix::zeros(k, k);
        for (c, &l) in eig.eigenvalues.iter().enumerate() {
            if l > 0.0 {
                let v = eig.eigenvectors.column(c);
                out.ger(l, &v, &v, 1.0);
            }
        }
    }
    0.5 * (&out + out.transpose())
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(0.5 * (m + m.transpose())).eigenvalues.min()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
}

/// Full solver entry point. `warm` is an optional starting `X`.
pub fn solve_sdp_with(
    problem: &SdpProblem,
    settings: &SdpSettings,
    warm: Option<&DMatrix<f64>>,
) -> Result<SdpSolution> {
    problem.validate()?;
    if !(settings.tol > 0.0) || settings.max_iter == 0 {
        return Err(TcrError::Solver("tolerance and iteration budget must be positive".into()));
    }
    let k = problem.dim;
    let nsv = k * (k + 1) / 2;
    let has_t = problem.aux_cost.is_some();
    let t_col = has_t.then_some(nsv);
    let slack0 = nsv + usize::from(has_t);
    let p = problem.ineq.len();
    let n = slack0 + p;
    let lay = Layout { t_col, slack0, n };
    let m_rows = problem.eq.len() + p;

    // Assemble rows in original units.
    let mut rows = Rows { idx: Vec::with_capacity(m_rows), val: Vec::with_capacity(m_rows) };
    let mut b = Vec::with_capacity(m_rows);
    for (r, con) in problem.eq.iter().chain(&problem.ineq).enumerate() {
        let mut idx = Vec::new();
        let mut val = Vec::new();
        for &(i, j, v) in con.a.entries() {
            idx.push(lay.svec_index(i, j));
            val.push(if i == j { v } else { SQRT2 * v });
        }
        if let Some(tc) = lay.t_col {
            if con.aux != 0.0 {
                idx.push(tc);
                val.push(con.aux);
            }
        }
        if r >= problem.eq.len() {
            idx.push(lay.slack0 + r - problem.eq.len());
            val.push(1.0);
        }
        rows.idx.push(idx);
        rows.val.push(val);
        b.push(con.rhs);
    }
    let mut c = vec![0.0; n];
    svec(&problem.c, &mut c[..nsv]);
    if let Some(tc) = lay.t_col {
        c[tc] = problem.aux_cost.unwrap_or(0.0);
    }

    // Ruiz equilibration. Column factors are shared across the PSD block so
    // that scaling preserves the cone.
    let mut e = vec![1.0; m_rows];
    let mut d = vec![1.0; n];
    let base_vals = rows.val.clone();
    for _ in 0..settings.scaling_passes {
        let mut col_max = vec![0.0f64; n];
        for r in 0..m_rows {
            let mut rmax = 0.0f64;
            for (&j, &a) in rows.idx[r].iter().zip(&base_vals[r]) {
                rmax = rmax.max((e[r] * a * d[j]).abs());
            }
            if rmax > 0.0 {
                e[r] /= rmax.sqrt();
            }
        }
        for r in 0..m_rows {
            for (&j, &a) in rows.idx[r].iter().zip(&base_vals[r]) {
                col_max[j] = col_max[j].max((e[r] * a * d[j]).abs());
            }
        }
        let psd_max = col_max[..nsv].iter().fold(0.0f64, |a, &v| a.max(v));
        if psd_max > 0.0 {
            let s = psd_max.sqrt();
            for dj in d[..nsv].iter_mut() {
                *dj /= s;
            }
        }
        for j in nsv..n {
            if col_max[j] > 0.0 {
                d[j] /= col_max[j].sqrt();
            }
        }
    }
    for r in 0..m_rows {
        for (q, &j) in rows.idx[r].iter().enumerate() {
            rows.val[r][q] = e[r] * base_vals[r][q] * d[j];
        }
    }
    let bs: Vec<f64> = b.iter().zip(&e).map(|(bi, ei)| bi * ei).collect();
    let mut cs: Vec<f64> = c.iter().zip(&d).map(|(ci, di)| ci * di).collect();
    let c_scale = {
        let mx = inf_norm(&cs);
        if mx > 0.0 {
            1.0 / mx
        } else {
            1.0
        }
    };
    for v in cs.iter_mut() {
        *v *= c_scale;
    }

    // Gram matrix of the scaled rows, factored once.
    let mut col_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for r in 0..m_rows {
        for (&j, &a) in rows.idx[r].iter().zip(&rows.val[r]) {
            col_rows[j].push((r, a));
        }
    }
    let mut gram = DMatrix::<f64>::zeros(m_rows, m_rows);
    for entries in &col_rows {
        for &(r1, a1) in entries {
            for &(r2, a2) in entries {
                gram[(r1, r2)] += a1 * a2;
            }
        }
    }
    let reg = 1e-12 * (0..m_rows).map(|i| gram[(i, i)]).fold(0.0f64, f64::max).max(1e-300);
    for i in 0..m_rows {
        gram[(i, i)] += reg;
    }
    let chol = if m_rows > 0 {
        Some(
            gram.clone()
                .cholesky()
                .ok_or_else(|| TcrError::Solver("constraint rows are numerically dependent".into()))?,
        )
    } else {
        None
    };
    let solve_gram = |rhs: &[f64]| -> Vec<f64> {
        match &chol {
            None => Vec::new(),
            Some(ch) => {
                let r = DVector::from_column_slice(rhs);
                let mut y = ch.solve(&r);
                // One refinement step against the unregularized system.
                let res = &r - (&gram * &y - reg * &y);
                y += ch.solve(&res);
                y.as_slice().to_vec()
            }
        }
    };

    let project_cone = |v: &mut [f64]| {
        let xm = smat(&v[..nsv], k);
        let xp = project_psd(&xm);
        svec(&xp, &mut v[..nsv]);
        for s in v[slack0..].iter_mut() {
            if *s < 0.0 {
                *s = 0.0;
            }
        }
    };

    // Starting point.
    let mut z = vec![0.0; n];
    if let Some(x0) = warm {
        if x0.shape() != (k, k) {
            return Err(TcrError::Dimension("warm start has the wrong size".into()));
        }
        svec(x0, &mut z[..nsv]);
        for v in z[..nsv].iter_mut() {
            *v /= d[0].max(f64::MIN_POSITIVE);
        }
        let mut ax = vec![0.0; m_rows];
        rows.mul(&z, &mut ax);
        for j in 0..p {
            let r = problem.eq.len() + j;
            z[slack0 + j] = (bs[r] - ax[r]).max(0.0) / (e[r] * d[slack0 + j]);
        }
        project_cone(&mut z);
    }
    let mut lam = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut xh = vec![0.0; n];
    let mut aw = vec![0.0; m_rows];
    let mut nu = vec![0.0; m_rows];
    let mut rho = settings.rho;
    let alpha = settings.alpha;

    let unit_rows: Vec<f64> = {
        // Norms of the scaled rows, used to report unit-row residuals.
        (0..m_rows).map(|r| rows.val[r].iter().map(|a| a * a).sum::<f64>().sqrt().max(f64::MIN_POSITIVE)).collect()
    };

    let mut best: Option<(f64, Vec<f64>, f64, f64, f64)> = None;
    let mut trace = Vec::with_capacity(settings.max_iter.min(100_000));
    let mut status = SdpStatus::MaxIters;
    let mut iters = 0;
    let mut z_prev = z.clone();
    let mut prim_hist: Vec<f64> = Vec::new();

    for it in 0..settings.max_iter {
        iters = it + 1;
        for j in 0..n {
            w[j] = z[j] - lam[j] - cs[j] / rho;
        }
        rows.mul(&w, &mut aw);
        for r in 0..m_rows {
            aw[r] -= bs[r];
        }
        nu.copy_from_slice(&solve_gram(&aw));
        x.copy_from_slice(&w);
        rows.mul_t_sub(&nu, &mut x);
        z_prev.copy_from_slice(&z);
        for j in 0..n {
            xh[j] = alpha * x[j] + (1.0 - alpha) * z[j] + lam[j];
        }
        z.copy_from_slice(&xh);
        project_cone(&mut z);
        for j in 0..n {
            lam[j] = xh[j] - z[j];
        }

        // Diagnostics on the cone iterate z.
        let mut az = vec![0.0; m_rows];
        rows.mul(&z, &mut az);
        let mut prim: f64 = 0.0;
        for r in 0..m_rows {
            let res = (az[r] - bs[r]) / unit_rows[r];
            prim = prim.max(res.abs());
        }
        let pobj: f64 = cs.iter().zip(&z).map(|(a, b)| a * b).sum();
        let dobj: f64 = -rho * bs.iter().zip(&nu).map(|(a, b)| a * b).sum::<f64>();
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let xz: f64 = x.iter().zip(&z).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
        let xz_rel = xz / (1.0 + inf_norm(&z));
        let merit = prim.max(gap).max(xz_rel);
        if best.as_ref().map_or(true, |b| merit < b.0) {
            best = Some((merit, z.clone(), prim, gap, pobj));
        }
        trace.push(best.as_ref().map_or(merit, |b| b.0));
        prim_hist.push(prim);
        if merit <= settings.tol {
            status = SdpStatus::Optimal;
            break;
        }

        if settings.adapt_every > 0 && (it + 1) % settings.adapt_every == 0 {
            let dz: f64 = z.iter().zip(&z_prev).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
            let r_p = xz / (1e-12 + inf_norm(&x).max(inf_norm(&z)));
            let r_d = rho * dz / (1e-12 + rho * inf_norm(&lam)).max(inf_norm(&cs));
            if r_p > 0.0 && r_d > 0.0 {
                let ratio = (r_p / r_d).sqrt();
                if !(0.2..=5.0).contains(&ratio) {
                    let new_rho = (rho * ratio).clamp(1e-6, 1e6);
                    for l in lam.iter_mut() {
                        *l *= rho / new_rho;
                    }
                    rho = new_rho;
                }
            }
        }
    }

    let (_, zb, prim, gap, _) = best.expect("at least one iteration runs");
    if status != SdpStatus::Optimal {
        // A residual floor far above tolerance that no longer improves
        // means the constraints cannot be met.
        let half = prim_hist.len() / 2;
        let early = prim_hist[..half.max(1)].iter().cloned().fold(f64::INFINITY, f64::min);
        let late = prim_hist[half..].iter().cloned().fold(f64::INFINITY, f64::min);
        if prim > 1e3 * settings.tol && prim.sqrt() > settings.tol.sqrt() * 10.0 && late > 0.99 * early {
            status = SdpStatus::Infeasible;
        }
    }

    // Unscale.
    let mut u = zb.clone();
    for j in 0..n {
        u[j] *= d[j];
    }
    let xmat = smat(&u[..nsv], k);
    let aux_t = lay.t_col.map_or(0.0, |tc| u[tc]);
    let objective = problem.objective_at(&xmat, aux_t);
    let primal_residual = problem.max_row_violation(&xmat, aux_t);
    let psd_violation = (-min_eigenvalue(&xmat)).max(0.0);
    debug_assert_eq!(lay.n, n);
    Ok(SdpSolution {
        x: xmat,
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
