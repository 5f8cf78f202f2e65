//! Random strictly feasible SDPs with a known-good oracle value.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tcr_core::sdp::{LinearConstraint, SdpProblem, SymSparse};

use super::ipm;

fn random_sym(rng: &mut ChaCha8Rng, k: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(k, k, |_, _| rng.gen_range(-1.0..1.0));
    0.5 * (&m + m.transpose())
}

fn random_pd(rng: &mut ChaCha8Rng, k: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(k, k, |_, _| rng.gen_range(-1.0..1.0));
    &g * g.transpose() / k as f64 + DMatrix::identity(k, k) * 0.5
}

pub struct Case {
    pub problem: SdpProblem,
    pub oracle: f64,
}

/// Random problem of size `k` with a trace constraint (bounded feasible set),
/// a few random equalities and inequalities, strictly feasible primal and
/// dual. The oracle value comes from the interior-point solver applied to
/// the slack-embedded equality form.
pub fn random_case(seed: u64, k: usize) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = random_pd(&mut rng, k);
    let n_eq = rng.gen_range(1..=3);
    let n_ineq = rng.gen_range(1..=3);

    let mut eq_mats = vec![DMatrix::identity(k, k)];
    for _ in 0..n_eq {
        eq_mats.push(random_sym(&mut rng, k));
    }
    let ineq_mats: Vec<DMatrix<f64>> = (0..n_ineq).map(|_| random_sym(&mut rng, k)).collect();
    let eq_rhs: Vec<f64> = eq_mats.iter().map(|a| a.component_mul(&x0).sum()).collect();
    let ineq_rhs: Vec<f64> = ineq_mats.iter().map(|a| a.component_mul(&x0).sum() + rng.gen_range(0.1..1.0)).collect();

    // Dual-feasible objective: C = sum y_i A_i + sum w_j B_j + Z0, w_j < 0.
    let mut c = random_pd(&mut rng, k);
    for a in &eq_mats {
        c += rng.gen_range(-1.0..1.0) * a;
    }
    for bm in &ineq_mats {
        c -= rng.gen_range(0.1..1.0) * bm;
    }
    let c = 0.5 * (&c + c.transpose());

    let mut problem = SdpProblem::new(c.clone());
    for (a, r) in eq_mats.iter().zip(&eq_rhs) {
        problem.eq.push(LinearConstraint::new(SymSparse::from_dense(a), *r));
    }
    for (a, r) in ineq_mats.iter().zip(&ineq_rhs) {
        problem.ineq.push(LinearConstraint::new(SymSparse::from_dense(a), *r));
    }

    // Inequalities become equalities with one LP slack each.
    let slack_vec = |j: Option<usize>| DVector::from_fn(n_ineq, |l, _| if Some(l) == j { 1.0 } else { 0.0 });
    let mut a = Vec::new();
    let mut a_s = Vec::new();
    let mut b = Vec::new();
    for (m, r) in eq_mats.iter().zip(&eq_rhs) {
        a.push(m.clone());
        a_s.push(slack_vec(None));
        b.push(*r);
    }
    for (j, (m, r)) in ineq_mats.iter().zip(&ineq_rhs).enumerate() {
        a.push(m.clone());
        a_s.push(slack_vec(Some(j)));
        b.push(*r);
    }
    let oracle_problem = ipm::Problem { c: c.clone(), c_s: DVector::zeros(n_ineq), a, a_s, b };
    let res = ipm::solve(&oracle_problem);
    if std::env::var("IPM_DEBUG").is_ok() {
        eprintln!(
            "seed {seed} k {k}: gap {:.3e} lb {:.12} primal {:.12} iters {}",
            (res.primal_obj - res.dual_obj).abs(),
            res.best_lower_bound,
            res.primal_obj,
            res.iterations
        );
        return Case { problem, oracle: res.dual_obj };
    }
    assert!(
        (res.primal_obj - res.best_lower_bound).abs() < 1e-6 * (1.0 + res.primal_obj.abs()),
        "oracle did not converge: {} vs {} after {}",
        res.primal_obj,
        res.dual_obj,
        res.iterations
    );
    // Dual iterates are feasible to machine precision, so the best dual
    // objective is a certified bound and sharper than the drifting primal.
    Case { problem, oracle: res.best_lower_bound }
}

pub fn unit_trace(c: DMatrix<f64>) -> SdpProblem {
    let k = c.nrows();
    let mut p = SdpProblem::new(c);
    let mut tr = SymSparse::new(k);
    for i in 0..k {
        tr.add(i, i, 1.0);
    }
    p.eq.push(LinearConstraint::new(tr, 1.0));
    p
}

/// Analytic cases: (problem, optimal value).
pub fn trivial_library() -> Vec<(&'static str, SdpProblem, f64)> {
    let mut lib = vec![
        ("diag(1,2) unit trace", unit_trace(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]))), 1.0),
        ("identity unit trace", unit_trace(DMatrix::identity(3, 3)), 1.0),
    ];
    // Smallest eigenvalue of [[2,1],[1,2]] is 1.
    lib.push(("offdiagonal unit trace", unit_trace(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])), 1.0));
    // Trace(X) <= 1 with negative C: optimum at full trace on the smallest entry.
    let mut p = SdpProblem::new(DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -3.0, 0.5])));
    let mut tr = SymSparse::new(3);
    for i in 0..3 {
        tr.add(i, i, 1.0);
    }
    p.ineq.push(LinearConstraint::new(tr, 1.0));
    lib.push(("trace bound", p, -3.0));
    lib
}
