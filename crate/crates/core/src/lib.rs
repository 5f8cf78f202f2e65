//! Trust-cost ratio (TCR) optimization for blockchain-enabled edge computing.
//!
//! The crate models users offloading work to edge servers that also run a
//! blockchain, and maximizes total trust divided by the weighted delay and
//! energy cost. The main pipeline ([`dashf::run_dashf`]) alternates between
//! an association/offloading step solved through a semidefinite relaxation
//! ([`part1`]) and a resource step solved by fractional-programming
//! transforms ([`part2`]), wrapped in a Dinkelbach loop. Four reference
//! baselines live in [`baselines`], and [`harness`] runs seeded sweeps.

pub mod assignment;
pub mod baselines;
pub mod dashf;
pub mod error;
pub mod harness;
pub mod part1;
pub mod part2;
pub mod qcqp;
pub mod scenario;
pub mod sdp;

pub use error::{Result, TcrError};
pub use scenario::{
    generate_scenario, Allocation, ChannelGains, Metrics, Scenario, ScenarioConfig, ServerNode, SystemParams,
    Tolerances, UserNode,
};
