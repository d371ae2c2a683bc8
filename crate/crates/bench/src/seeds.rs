//! Per-trial random streams.
//!
//! Every random stream of a trial is seeded with
//! `SHA-256("rsbg-bench/v1" ‖ master_seed as u64 LE ‖ trial as u64 LE ‖ label)`,
//! the 32-byte digest being the ChaCha8 seed. Streams with different labels
//! are independent, and a stream never depends on the planner, so every
//! planner of an experiment faces the same scenario, the same hidden
//! behavior boxes and the same per-step behavior draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const SCHEME: &str = "ChaCha8 seeded with SHA-256(\"rsbg-bench/v1\" || master_seed u64 LE || trial u64 LE || stream label)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stream {
    /// Initial world configuration.
    Scenario,
    /// Hidden per-agent behavior boxes.
    Behavior,
    /// Per-step behavior draws of the simulated agents.
    Others,
    /// Monte-Carlo likelihood estimates of the belief tracker.
    Belief,
    /// Search randomness.
    Planner,
}

impl Stream {
    pub const ALL: [Stream; 5] = [
        Stream::Scenario,
        Stream::Behavior,
        Stream::Others,
        Stream::Belief,
        Stream::Planner,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Stream::Scenario => "scenario",
            Stream::Behavior => "behavior",
            Stream::Others => "others",
            Stream::Belief => "belief",
            Stream::Planner => "planner",
        }
    }
}

pub fn stream_seed(master_seed: u64, trial: u64, stream: Stream) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"rsbg-bench/v1");
    h.update(master_seed.to_le_bytes());
    h.update(trial.to_le_bytes());
    h.update(stream.label().as_bytes());
    h.finalize().into()
}

pub fn stream_rng(master_seed: u64, trial: u64, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(stream_seed(master_seed, trial, stream))
}

/// Short printable id of a trial's seed material: the first 8 bytes of the
/// scenario stream seed, hex encoded.
pub fn trial_seed_id(master_seed: u64, trial: u64) -> String {
    hex::encode(&stream_seed(master_seed, trial, Stream::Scenario)[..8])
}
