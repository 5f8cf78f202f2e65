//! Dense primal-dual interior-point solver (HKM direction, Mehrotra
//! predictor-corrector) for
//!
//! ```text
//! min <C, X> + c_s . s   s.t.  <A_i, X> + a_i . s = b_i,  X PSD,  s >= 0
//! ```
//!
//! Test oracle only.

use nalgebra::{DMatrix, DVector};

pub struct IpmResult {
    pub x: DMatrix<f64>,
    pub s: DVector<f64>,
    pub primal_obj: f64,
    pub dual_obj: f64,
    /// Largest objective of a dual iterate feasible to machine precision:
    /// a certified lower bound on the optimum.
    pub best_lower_bound: f64,
    pub iterations: usize,
}

pub struct Problem {
    pub c: DMatrix<f64>,
    pub c_s: DVector<f64>,
    pub a: Vec<DMatrix<f64>>,
    pub a_s: Vec<DVector<f64>>,
    pub b: Vec<f64>,
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(b).sum()
}

fn sym(a: &DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (a + a.transpose())
}

fn max_step_psd(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let Some(ch) = x.clone().cholesky() else { return 0.0 };
    let linv = ch.l().try_inverse().unwrap();
    let min_eig = sym(&(&linv * dx * linv.transpose())).symmetric_eigenvalues().min();
    if min_eig >= 0.0 {
        1.0
    } else {
        (-1.0 / min_eig).min(1.0)
    }
}

fn max_step_lp(s: &DVector<f64>, ds: &DVector<f64>) -> f64 {
    let mut a: f64 = 1.0;
    for (v, d) in s.iter().zip(ds.iter()) {
        if *d < 0.0 {
            a = a.min(-v / d);
        }
    }
    a
}

pub fn solve(p: &Problem) -> IpmResult {
    let n = p.c.nrows();
    let q = p.c_s.len();
    let m = p.a.len();
    let scale = 1.0 + p.c.abs().max() + p.b.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let mut x = DMatrix::<f64>::identity(n, n) * scale;
    let mut z = DMatrix::<f64>::identity(n, n) * scale;
    let mut s = DVector::<f64>::from_element(q, scale);
    let mut zs = DVector::<f64>::from_element(q, scale);
    let mut y = DVector::<f64>::zeros(m);
    let dim = (n + q) as f64;
    let mut it = 0;
    let mut best = None;
    let mut best_lower = f64::NEG_INFINITY;
    while it < 300 {
        it += 1;
        let mu = (inner(&x, &z) + s.dot(&zs)) / dim;
        let rp = DVector::from_fn(m, |i, _| p.b[i] - inner(&p.a[i], &x) - p.a_s[i].dot(&s));
        let mut rd = &p.c - &z;
        let mut rds = &p.c_s - &zs;
        for i in 0..m {
            rd -= y[i] * &p.a[i];
            rds -= y[i] * &p.a_s[i];
        }
        let pobj = inner(&p.c, &x) + p.c_s.dot(&s);
        let dobj: f64 = (0..m).map(|i| p.b[i] * y[i]).sum();
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        if rd.amax().max(rds.amax()) <= 1e-12 * scale {
            best_lower = best_lower.max(dobj);
        }
        let merit = gap.max(rp.amax() / scale).max(rd.amax().max(rds.amax()) / scale);
        if best.as_ref().map_or(true, |b: &(f64, DMatrix<f64>, DVector<f64>, f64, f64)| merit < b.0) {
            best = Some((merit, x.clone(), s.clone(), pobj, dobj));
        }
        if merit < 1e-12 || mu < 1e-14 * scale {
            break;
        }
        let zinv = z.clone().try_inverse().expect("dual slack invertible");
        let xa: Vec<DMatrix<f64>> = p.a.iter().map(|ai| &x * ai * &zinv).collect();
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let mut v = inner(&p.a[i], &xa[j].transpose());
                for l in 0..q {
                    v += p.a_s[i][l] * p.a_s[j][l] * s[l] / zs[l];
                }
                schur[(i, j)] = v;
                schur[(j, i)] = v;
            }
        }
        let lu = schur.lu();

        let direction = |sigma: f64, corr: Option<(&DMatrix<f64>, &DVector<f64>)>| {
            let mut base = sigma * mu * &zinv - &x;
            let mut base_s = DVector::from_fn(q, |l, _| sigma * mu / zs[l] - s[l]);
            if let Some((cm, cs)) = corr {
                base -= cm * &zinv;
                for l in 0..q {
                    base_s[l] -= cs[l] / zs[l];
                }
            }
            // Part of the step that does not depend on dy.
            let fixed = &base - &x * &rd * &zinv;
            let fixed_s = DVector::from_fn(q, |l, _| base_s[l] - s[l] * rds[l] / zs[l]);
            let rhs = DVector::from_fn(m, |i, _| rp[i] - inner(&p.a[i], &fixed) - p.a_s[i].dot(&fixed_s));
            let dy = lu.solve(&rhs).unwrap_or_else(|| DVector::zeros(m));
            let mut dz = rd.clone();
            let mut dzs = rds.clone();
            for i in 0..m {
                dz -= dy[i] * &p.a[i];
                dzs -= dy[i] * &p.a_s[i];
            }
            let dx = sym(&(&base - &x * &dz * &zinv));
            let ds = DVector::from_fn(q, |l, _| base_s[l] - s[l] * dzs[l] / zs[l]);
            (dx, ds, dy, dz, dzs)
        };
        let (dxa, dsa, _, dza, dzsa) = direction(0.0, None);
        let ap = max_step_psd(&x, &dxa).min(max_step_lp(&s, &dsa));
        let ad = max_step_psd(&z, &dza).min(max_step_lp(&zs, &dzsa));
        let mu_aff = (inner(&(&x + ap * &dxa), &(&z + ad * &dza)) + (&s + ap * &dsa).dot(&(&zs + ad * &dzsa))) / dim;
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);
        let corr = &dxa * &dza;
        let corr_s = dsa.component_mul(&dzsa);
        let (dx, ds, dy, dz, dzs) = direction(sigma, Some((&corr, &corr_s)));
        let ap = (0.98 * max_step_psd(&x, &dx).min(max_step_lp(&s, &ds))).min(1.0);
        let ad = (0.98 * max_step_psd(&z, &dz).min(max_step_lp(&zs, &dzs))).min(1.0);
        x = sym(&(&x + ap * &dx));
        s += ap * &ds;
        y += ad * &dy;
        z = sym(&(&z + ad * &dz));
        zs += ad * &dzs;
    }
    let (_, x, s, primal_obj, dual_obj) = best.expect("one iteration runs");
    IpmResult { x, s, primal_obj, dual_obj, best_lower_bound: best_lower, iterations: it }
}
