//! Independent reference computations: brute-force enumeration, grid
//! searches and a from-scratch evaluation of one user-server pair.

use nalgebra::{DMatrix, DVector};
use tcr_core::qcqp::{rank_one_lift, Coefficients, DelayConstants, LiftedSdp, QLayout, QcqpForm};
use tcr_core::Scenario;

use super::fixtures::{all_associations, column_loads};

/// All permutations of `0..n` (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        heap(k - 1, a, out);
        for i in 0..k - 1 {
            if k % 2 == 0 {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
            heap(k - 1, a, out);
        }
    }
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    heap(n, &mut a, &mut out);
    out
}

/// Best total weight of a matching, by trying every permutation of the
/// zero-padded square table.
pub fn brute_force_matching(w: &DMatrix<f64>) -> f64 {
    let (r, c) = w.shape();
    let n = r.max(c);
    let entry = |i: usize, j: usize| if i < r && j < c { w[(i, j)] } else { 0.0 };
    permutations(n).iter().map(|p| (0..n).map(|i| entry(i, p[i])).sum::<f64>()).fold(f64::NEG_INFINITY, f64::max)
}

/// Rows with sum above one scaled down to sum one.
pub fn normalized_affinity(x_frac: &DMatrix<f64>) -> DMatrix<f64> {
    let mut a = x_frac.clone();
    for i in 0..a.nrows() {
        let s: f64 = a.row(i).sum();
        if s > 1.0 {
            a.row_mut(i).scale_mut(1.0 / s);
        }
    }
    a
}

/// Largest `sum x_bin * affinity` over one-server-per-user associations
/// with at most `slots` users per server.
pub fn brute_force_rounding(x_frac: &DMatrix<f64>, slots: usize) -> f64 {
    let aff = normalized_affinity(x_frac);
    all_associations(x_frac.nrows(), x_frac.ncols())
        .into_iter()
        .filter(|x| column_loads(x).iter().all(|&l| l <= slots))
        .map(|x| x.component_mul(&aff).sum())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Resources of one connected pair, physical units.
#[derive(Debug, Clone, Copy)]
pub struct PairPoint {
    pub phi: f64,
    pub b: f64,
    pub p_u: f64,
    pub p_s: f64,
    pub f_u: f64,
    pub f_s: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct PairMetrics {
    pub t_server: f64,
    pub t_user: f64,
    pub energy: f64,
    /// Transmit energies `p phi d / r`, uplink and downlink.
    pub tx_up: f64,
    pub tx_down: f64,
    pub trust: f64,
    pub rate_up: f64,
    pub rate_down: f64,
}

/// Delays, energy and trust of user `n` served by `m` alone, written out
/// term by term with no other server holding resources for `n`.
pub fn pair_metrics(sc: &Scenario, n: usize, m: usize, pt: PairPoint, gamma: f64) -> PairMetrics {
    let p = &sc.params;
    let u = &sc.users[n];
    let s = &sc.servers[m];
    let g = sc.gains.g[(n, m)];
    let shannon = |b: f64, pw: f64| b * (1.0 + g * pw / (p.noise_density * b)).log2();
    let up = shannon(pt.b, pt.p_u);
    let dn = shannon(pt.b, pt.p_s);
    let load = pt.phi * u.d;

    let t_upload = if load > 0.0 { load / up } else { 0.0 };
    let t_process = load * s.f_data / (gamma * pt.f_s);
    let t_block = load * p.omega_b * s.f_block / ((1.0 - gamma) * pt.f_s);
    let t_prop = p.block_size / p.wired_rate;
    let t_server = t_upload + t_process + t_block + t_prop;

    let t_local = (1.0 - pt.phi) * u.d * u.f / pt.f_u;
    let t_download = if load > 0.0 { p.omega_p * load / dn } else { 0.0 };
    let t_post = p.omega_p * load * u.f / pt.f_u;
    let t_user = t_local + t_download + t_post;

    let e_local = u.kappa * (1.0 - pt.phi) * u.d * u.f * pt.f_u.powi(2);
    let e_post = u.kappa * load * p.omega_p * u.f * pt.f_u.powi(2);
    let tx_up = if load > 0.0 { pt.p_u * load / up } else { 0.0 };
    let e_proc = s.kappa * load * s.f_data * (gamma * pt.f_s).powi(2);
    let e_block = s.kappa * load * p.omega_b * s.f_block * ((1.0 - gamma) * pt.f_s).powi(2);
    let tx_down = if load > 0.0 { pt.p_s * load * p.omega_p / dn } else { 0.0 };
    let energy = e_local + e_post + tx_up + e_proc + e_block + tx_down;

    let ratios = pt.p_s / s.p_max + pt.f_s / s.f_max + pt.b / s.b_max;
    let trust = p.varpi_1 * (1.0 + p.varpi_2 * (ratios + p.tau)).ln();
    PairMetrics { t_server, t_user, energy, tx_up, tx_down, trust, rate_up: up, rate_down: dn }
}

/// One candidate of a single user: trust, energy and delay.
#[derive(Debug, Clone, Copy)]
pub struct Candidate {
    pub v: f64,
    pub e: f64,
    pub d: f64,
}

/// Exact maximum of `sum v / (w_t max d + w_e sum e)` over one candidate
/// per user, by Dinkelbach iterations whose inner problem is solved
/// exactly: for every delay threshold each user takes its best candidate
/// below the threshold.
pub fn best_ratio_independent(cands: &[Vec<Candidate>], wt: f64, we: f64) -> f64 {
    let sorted: Vec<Vec<Candidate>> = cands
        .iter()
        .map(|c| {
            let mut c = c.clone();
            c.sort_by(|a, b| a.d.total_cmp(&b.d));
            c
        })
        .collect();
    let mut thresholds: Vec<f64> = sorted.iter().flat_map(|c| c.iter().map(|k| k.d)).collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let ratio_of = |pick: &[Candidate]| {
        let v: f64 = pick.iter().map(|k| k.v).sum();
        let e: f64 = pick.iter().map(|k| k.e).sum();
        let d = pick.iter().map(|k| k.d).fold(0.0, f64::max);
        v / (wt * d + we * e)
    };
    let mut lambda = ratio_of(&sorted.iter().map(|c| c[0]).collect::<Vec<_>>());
    for _ in 0..100 {
        // Best choice per user and threshold at this lambda.
        let mut best_val = f64::NEG_INFINITY;
        let mut best_pick: Vec<Candidate> = Vec::new();
        let mut cursor = vec![0usize; sorted.len()];
        let mut running: Vec<Option<(f64, Candidate)>> = vec![None; sorted.len()];
        for &t in &thresholds {
            for (u, c) in sorted.iter().enumerate() {
                while cursor[u] < c.len() && c[cursor[u]].d <= t {
                    let k = c[cursor[u]];
                    let w = k.v - lambda * we * k.e;
                    if running[u].map_or(true, |(bw, _)| w > bw) {
                        running[u] = Some((w, k));
                    }
                    cursor[u] += 1;
                }
            }
            if running.iter().any(Option::is_none) {
                continue;
            }
            let val: f64 = running.iter().map(|r| r.unwrap().0).sum::<f64>() - lambda * wt * t;
            if val > best_val {
                best_val = val;
                best_pick = running.iter().map(|r| r.unwrap().1).collect();
            }
        }
        let next = ratio_of(&best_pick);
        if next <= lambda * (1.0 + 1e-14) {
            return lambda.max(next);
        }
        lambda = next;
    }
    lambda
}

fn levels(k: usize) -> Vec<f64> {
    (1..=k).map(|i| i as f64 / k as f64).collect()
}

fn phi_grid(step: f64) -> Vec<f64> {
    let k = (1.0 / step).round() as usize;
    (0..=k).map(|i| i as f64 / k as f64).collect()
}

/// Candidates of user `n` on server `m` with the given server-resource
/// shares fixed, over a grid of `phi`, user power and user CPU.
fn user_candidates(
    sc: &Scenario,
    n: usize,
    m: usize,
    shares: [f64; 3],
    user_levels: usize,
    phi_step: f64,
    gamma: f64,
) -> Vec<Candidate> {
    let (u, s) = (&sc.users[n], &sc.servers[m]);
    let mut out = Vec::new();
    for &phi in &phi_grid(phi_step) {
        for &lp in &levels(user_levels) {
            for &lf in &levels(user_levels) {
                let pt = PairPoint {
                    phi,
                    b: shares[0] * s.b_max,
                    p_u: lp * u.p_max,
                    p_s: shares[1] * s.p_max,
                    f_u: lf * u.f_max,
                    f_s: shares[2] * s.f_max,
                };
                let k = pair_metrics(sc, n, m, pt, gamma);
                out.push(Candidate { v: k.trust, e: k.energy, d: k.t_server.max(k.t_user) });
            }
        }
    }
    out
}

/// Best TCR of a single-user single-server instance over a grid: `phi` in
/// steps of `phi_step`, every resource at `levels` evenly spaced fractions
/// of its cap.
pub fn grid_optimum_single(sc: &Scenario, levels_per_axis: usize, phi_step: f64, gamma: f64) -> f64 {
    let p = &sc.params;
    let mut best: f64 = 0.0;
    let lv = levels(levels_per_axis);
    for &sb in &lv {
        for &sp in &lv {
            for &sf in &lv {
                let c = user_candidates(sc, 0, 0, [sb, sp, sf], levels_per_axis, phi_step, gamma);
                for k in c {
                    best = best.max(k.v / (p.omega_t * k.d + p.omega_e * k.e));
                }
            }
        }
    }
    best
}

/// Best TCR of a two-user instance over every association and a grid.
///
/// Users on different servers choose independently (exact discrete ratio
/// maximization over `levels_apart` share levels). Users sharing a server
/// split each resource on a `levels_shared` grid.
pub fn grid_optimum_pair(sc: &Scenario, levels_apart: usize, levels_shared: usize, phi_step: f64, gamma: f64) -> f64 {
    assert_eq!(sc.n_users(), 2);
    let p = &sc.params;
    let mut best: f64 = 0.0;
    for x in all_associations(2, sc.n_servers()) {
        let m0 = (0..sc.n_servers()).find(|&m| x[(0, m)] > 0.0).unwrap();
        let m1 = (0..sc.n_servers()).find(|&m| x[(1, m)] > 0.0).unwrap();
        if m0 != m1 {
            let lv = levels(levels_apart);
            let mut per_user = Vec::new();
            for (n, m) in [(0, m0), (1, m1)] {
                let mut c = Vec::new();
                for &sb in &lv {
                    for &sp in &lv {
                        for &sf in &lv {
                            c.extend(user_candidates(sc, n, m, [sb, sp, sf], levels_apart, phi_step, gamma));
                        }
                    }
                }
                per_user.push(c);
            }
            best = best.max(best_ratio_independent(&per_user, p.omega_t, p.omega_e));
        } else {
            let k = levels_shared;
            let splits: Vec<(f64, f64)> =
                (1..k).flat_map(|a| (1..=k - a).map(move |b| (a as f64 / k as f64, b as f64 / k as f64))).collect();
            for &(b0, b1) in &splits {
                for &(p0, p1) in &splits {
                    for &(f0, f1) in &splits {
                        let c0 = user_candidates(sc, 0, m0, [b0, p0, f0], levels_apart, phi_step, gamma);
                        let c1 = user_candidates(sc, 1, m0, [b1, p1, f1], levels_apart, phi_step, gamma);
                        best = best.max(best_ratio_independent(&[c0, c1], p.omega_t, p.omega_e));
                    }
                }
            }
        }
    }
    best
}

/// `y w_t T + sum (A_n + G_{n,m(n)}) phi_n` with `T` the smallest value
/// meeting every delay row of the connected pairs.
pub fn refine_objective(
    sc: &Scenario,
    x: &DMatrix<f64>,
    coeffs: &Coefficients,
    delays: &DelayConstants,
    phi: &[f64],
) -> f64 {
    let mut t: f64 = 0.0;
    let mut lin = 0.0;
    for n in 0..sc.n_users() {
        let m = (0..sc.n_servers()).find(|&m| x[(n, m)] > 0.5).unwrap();
        let ts = delays.ts_quad[(n, m)] * phi[n] + delays.ts_const[(n, m)];
        let tu = (delays.tu_quad[(n, m)] + delays.tu_lin[n]) * phi[n] + delays.tu_const[n];
        t = t.max(ts).max(tu);
        lin += (coeffs.a[n] + coeffs.g[(n, m)]) * phi[n];
    }
    coeffs.y * sc.params.omega_t * t + lin
}

/// Smallest [`refine_objective`] over a `phi` grid with the given step.
pub fn refine_grid_minimum(
    sc: &Scenario,
    x: &DMatrix<f64>,
    coeffs: &Coefficients,
    delays: &DelayConstants,
    step: f64,
) -> (f64, Vec<f64>) {
    let grid = phi_grid(step);
    let n = sc.n_users();
    let mut idx = vec![0usize; n];
    let mut best = (f64::INFINITY, vec![0.0; n]);
    loop {
        let phi: Vec<f64> = idx.iter().map(|&i| grid[i]).collect();
        let v = refine_objective(sc, x, coeffs, delays, &phi);
        if v < best.0 {
            best = (v, phi);
        }
        let mut k = 0;
        loop {
            if k == n {
                return best;
            }
            idx[k] += 1;
            if idx[k] < grid.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Smallest quadratic-program objective over binary associations that meet
/// every relaxation row when lifted, and a `phi` grid.
pub fn qcqp_brute_force(form: &QcqpForm, lift: &LiftedSdp, phi_step: f64) -> f64 {
    let lay: QLayout = form.layout;
    let grid = phi_grid(phi_step);
    let mut best = f64::INFINITY;
    for x in all_associations(lay.n, lay.m) {
        let mut idx = vec![0usize; lay.n];
        'phis: loop {
            let phi: Vec<f64> = idx.iter().map(|&i| grid[i]).collect();
            let q: DVector<f64> = lay.pack(&x, &phi);
            let t = form.min_t(&q);
            if lift.problem.max_row_violation(&rank_one_lift(&q), t) <= 1e-9 {
                best = best.min(form.objective(&q, t));
            }
            let mut k = 0;
            loop {
                if k == lay.n {
                    break 'phis;
                }
                idx[k] += 1;
                if idx[k] < grid.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
    best
}

/// Grid point minimizing `f` over `(0, 1)` with the given step.
pub fn grid_argmin(f: impl Fn(f64) -> f64, step: f64) -> f64 {
    let k = (1.0 / step).round() as usize;
    (1..k)
        .map(|i| i as f64 / k as f64)
        .map(|g| (f(g), g))
        .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a })
        .1
}
