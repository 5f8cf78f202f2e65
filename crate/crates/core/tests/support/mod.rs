#![allow(dead_code)]

pub mod fixtures;
pub mod ipm;
pub mod oracles;
pub mod sdp_cases;
