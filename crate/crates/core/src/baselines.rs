//! Comparison schemes: random and greedy association with equal resource
//! split, association-only optimization, and resource-only optimization.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dashf::{run_alternating, RunOutcome, Steps};
use crate::error::Result;
use crate::scenario::{Allocation, Scenario, Tolerances};

/// Offloading ratio used by schemes that do not optimize it.
pub const FIXED_PHI: f64 = 0.5;

/// Stream offset so the association draw never reuses the scenario stream.
const RUCAA_STREAM: u64 = 0x5255_4341_4141;

fn one_hot(n_users: usize, n_servers: usize, server_of: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(n_users, n_servers, |n, m| if server_of[n] == m { 1.0 } else { 0.0 })
}

/// Uniformly random server per user, equal split, `phi = 0.5`.
pub fn rucaa(sc: &Scenario, seed: u64) -> Result<Allocation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(RUCAA_STREAM);
    let servers: Vec<usize> = (0..sc.n_users()).map(|_| rng.gen_range(0..sc.n_servers())).collect();
    let x = one_hot(sc.n_users(), sc.n_servers(), &servers);
    Allocation::equal_split(sc, &x, &vec![FIXED_PHI; sc.n_users()])
}

/// Greedy association: users in index order each join the server currently
/// serving the fewest users (lowest index on ties).
pub fn greedy_association(n_users: usize, n_servers: usize) -> DMatrix<f64> {
    let mut load = vec![0usize; n_servers];
    let mut servers = Vec::with_capacity(n_users);
    for _ in 0..n_users {
        let m = (0..n_servers).min_by_key(|&m| (load[m], m)).expect("at least one server");
        load[m] += 1;
        servers.push(m);
    }
    one_hot(n_users, n_servers, &servers)
}

/// Greedy least-loaded association, equal split, `phi = 0.5`.
pub fn gucaa(sc: &Scenario) -> Result<Allocation> {
    let x = greedy_association(sc.n_users(), sc.n_servers());
    Allocation::equal_split(sc, &x, &vec![FIXED_PHI; sc.n_users()])
}

/// Association and offloading optimized by the association step under equal
/// resource split, wrapped in the Dinkelbach loop. Starts from the greedy
/// association.
pub fn aauco(sc: &Scenario, tols: &Tolerances) -> Result<RunOutcome> {
    let init = gucaa(sc)?;
    run_alternating(sc, &init, tols, Steps { association: true, resources: false })
}

/// Greedy association and `phi = 0.5` frozen; resources optimized by the
/// resource step.
pub fn gucro(sc: &Scenario, tols: &Tolerances) -> Result<RunOutcome> {
    let init = gucaa(sc)?;
    run_alternating(sc, &init, tols, Steps { association: false, resources: true })
}
