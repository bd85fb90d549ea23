//! UAV path planning for IoT data collection.
//!
//! A planar airspace simulator (mission UAVs, ORCA-driven background UAVs and
//! an optional mobile jammer) together with a from-scratch dueling double deep
//! Q-learning stack, training pipelines, evaluation metrics and SVG plotting.

pub mod channel;
pub mod clustering;
pub mod config;
pub mod d3qn;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod mdp;
pub mod orca;
pub mod plot;
pub mod selfcheck;
pub mod trainer;
pub mod world;

pub use config::{Preset, ScenarioConfig};
pub use d3qn::{NetworkParams, TrainConfig};
pub use error::{Error, Result};
pub use eval::MetricsReport;
pub use geometry::Vec2;
pub use world::{MissionStatus, Role, WorldState};

/// Derives an independent 64-bit seed for stream `index` of a run (splitmix64 finalizer).
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(0x632b_e59b_d9b4_e019);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
