//! Simulation and learning core for proactive regulation of UAV
//! communication networks.
//!
//! The crate is `no_std` (it needs `alloc`) and holds everything that is pure
//! computation: the scenario world, the radio and energy models, the episodic
//! environment, a small MLP library with exact backpropagation, the DDPG
//! agent and the evaluation tooling (passive baseline, transition gain,
//! brute-force placement oracle). Threads, files and the command line live in
//! the companion `uavnet-lab` crate.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod ddpg;
pub mod energy;
pub mod env;
pub mod eval;
pub mod neural;
pub mod radio;
pub mod scenario;

pub use ddpg::{Agent, DdpgConfig, NoiseState, Policy, ReplayBuffer, Transition};
pub use env::{FleetState, StateLayout, StateMode, StepOutcome, UavAction, UavEnv, UavStatus};
pub use neural::{Activation, ActorNet, CriticNet, Mlp, Normalizer};
pub use radio::{AssociationMap, RadioModel};
pub use scenario::{AreaSpec, PhysicalConstants, Point, Scenario};

/// Seeded generator used everywhere randomness is needed.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Builds the crate's generator from a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}

/// Mixes a base seed with a stream index (worker id, snapshot id, ...).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
