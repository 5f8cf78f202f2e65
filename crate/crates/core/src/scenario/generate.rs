use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::config::FadingMode;
use super::{ChannelGains, Scenario, ScenarioConfig, ServerNode, UserNode};
use crate::error::Result;

/// Path loss in dB for a distance in meters, clamped to at least 1 m.
pub fn path_loss_db(distance_m: f64) -> f64 {
    let d_km = distance_m.max(1.0) / 1000.0;
    128.1 + 37.6 * d_km.log10()
}

/// Linear channel gain between a user and a server for a given fading draw.
pub fn channel_gain(user: &UserNode, server: &ServerNode, rayleigh_draw: f64) -> f64 {
    let dx = user.position[0] - server.position[0];
    let dy = user.position[1] - server.position[1];
    let h = 10f64.powf(-path_loss_db(dx.hypot(dy)) / 10.0);
    h * rayleigh_draw
}

/// Server positions on a centered grid: `ceil(sqrt(M))` columns, each row
/// centered, rows spread evenly over the square.
pub fn server_grid(n_servers: usize, side: f64) -> Vec<[f64; 2]> {
    let cols = (n_servers as f64).sqrt().ceil() as usize;
    let rows = n_servers.div_ceil(cols);
    let mut out = Vec::with_capacity(n_servers);
    for r in 0..rows {
        let in_row = (n_servers - r * cols).min(cols);
        let y = side * (r as f64 + 0.5) / rows as f64;
        for c in 0..in_row {
            out.push([side * (c as f64 + 0.5) / in_row as f64, y]);
        }
    }
    out
}

/// Draws a scenario. The RNG stream is consumed in a fixed order: user
/// positions, task sizes, then fading row by row (unless fading is frozen,
/// in which case it comes from its own stream).
pub fn generate_scenario(config: &ScenarioConfig, seed: u64) -> Result<Scenario> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = config.area_side;

    let positions: Vec<[f64; 2]> =
        (0..config.n_users).map(|_| [rng.gen::<f64>() * side, rng.gen::<f64>() * side]).collect();
    let sizes: Vec<f64> = (0..config.n_users)
        .map(|_| if config.d_hi > config.d_lo { rng.gen_range(config.d_lo..=config.d_hi) } else { config.d_lo })
        .collect();

    let users: Vec<UserNode> = positions
        .into_iter()
        .zip(sizes)
        .map(|(position, d)| UserNode {
            position,
            d,
            f: config.user.cycles_per_bit,
            f_max: config.user.f_max,
            p_max: config.user.p_max,
            kappa: config.user.kappa,
        })
        .collect();
    let servers: Vec<ServerNode> = server_grid(config.n_servers, side)
        .into_iter()
        .map(|position| ServerNode {
            position,
            f_max: config.server.f_max,
            p_max: config.server.p_max,
            b_max: config.server.b_max,
            kappa: config.server.kappa,
            f_data: config.server.f_data,
            f_block: config.server.f_block,
        })
        .collect();

    let (n, m) = (config.n_users, config.n_servers);
    let mut fading_rng = match config.fading {
        FadingMode::Resample => None,
        FadingMode::Frozen(s) => Some(ChaCha8Rng::seed_from_u64(s)),
    };
    let mut l = DMatrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            let draw: f64 = match fading_rng.as_mut() {
                Some(r) => Exp1.sample(r),
                None => Exp1.sample(&mut rng),
            };
            // Exp(1) can return exactly 0 with vanishing probability.
            l[(i, j)] = draw.max(f64::MIN_POSITIVE);
        }
    }
    let h = DMatrix::from_fn(n, m, |i, j| channel_gain(&users[i], &servers[j], 1.0));
    let gains = ChannelGains::new(h, l)?;
    Scenario::new(config.params.clone(), users, servers, gains, seed)
}
