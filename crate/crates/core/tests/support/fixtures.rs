//! Scenarios and allocations shared by the integration tests.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tcr_core::qcqp::gamma_star;
use tcr_core::{generate_scenario, Allocation, Scenario, ScenarioConfig};

pub fn scenario(n: usize, m: usize, seed: u64) -> Scenario {
    generate_scenario(&ScenarioConfig::with_size(n, m), seed).unwrap()
}

/// Users and servers packed into a 50 m square: links are fast enough that
/// offloading competes with local processing.
pub fn near_config(n: usize, m: usize) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::with_size(n, m);
    cfg.area_side = 50.0;
    cfg
}

pub fn near_scenario(n: usize, m: usize, seed: u64) -> Scenario {
    generate_scenario(&near_config(n, m), seed).unwrap()
}

/// Every association with exactly one server per user.
pub fn all_associations(n: usize, m: usize) -> Vec<DMatrix<f64>> {
    let total = m.pow(n as u32);
    (0..total)
        .map(|mut code| {
            let mut x = DMatrix::zeros(n, m);
            for i in 0..n {
                x[(i, code % m)] = 1.0;
                code /= m;
            }
            x
        })
        .collect()
}

pub fn column_loads(x: &DMatrix<f64>) -> Vec<usize> {
    (0..x.ncols()).map(|j| x.column(j).iter().filter(|v| **v > 0.5).count()).collect()
}

/// Random point strictly inside every cap: offloading ratios in
/// `[0.1, 0.9]`, user resources in `[0.2, 0.95]` of their maxima, and each
/// server's resources split at random among its users using at most 95%.
pub fn random_interior(sc: &Scenario, x: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> Allocation {
    let (nu, ns) = (sc.n_users(), sc.n_servers());
    let mut b = DMatrix::zeros(nu, ns);
    let mut p_s = DMatrix::zeros(nu, ns);
    let mut f_s = DMatrix::zeros(nu, ns);
    for (m, s) in sc.servers.iter().enumerate() {
        let users: Vec<usize> = (0..nu).filter(|&n| x[(n, m)] > 0.0).collect();
        for (table, cap) in [(&mut b, s.b_max), (&mut p_s, s.p_max), (&mut f_s, s.f_max)] {
            let w: Vec<f64> = users.iter().map(|_| rng.gen_range(0.2..1.0)).collect();
            let total: f64 = w.iter().sum();
            let used = rng.gen_range(0.3..0.95);
            for (k, &n) in users.iter().enumerate() {
                table[(n, m)] = cap * used * w[k] / total;
            }
        }
    }
    let mut a = Allocation {
        x: x.clone(),
        phi: (0..nu).map(|_| rng.gen_range(0.1..0.9)).collect(),
        gamma: DMatrix::from_element(nu, ns, gamma_star(sc.params.omega_b)),
        b,
        p_u: sc.users.iter().map(|u| u.p_max * rng.gen_range(0.2..0.95)).collect(),
        p_s,
        f_u: sc.users.iter().map(|u| u.f_max * rng.gen_range(0.2..0.95)).collect(),
        f_s,
        t_aux: 0.0,
    };
    a.refresh_t_aux(sc).unwrap();
    a
}
