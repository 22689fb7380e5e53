//! Multiplexed coherent-state fingerprints for estimating the Euclidean
//! distance between two real unit vectors.
//!
//! Alice and Bob never talk to each other. Each sends a train of weak
//! coherent pulses with amplitudes proportional to their vector's entries;
//! a Referee interferes the trains on a 50/50 beam splitter and counts clicks
//! on the two output detectors. The difference of the counts estimates
//! `||x - y||^2`.
//!
//! * [`vectors`]: unit vectors, exact distances, and the linear code used to
//!   reduce Equality to distance estimation.
//! * [`optics`]: fingerprints, beam splitter, click model and samplers.
//! * [`estimator`]: the distance estimator and the repetition planner.
//! * [`multiplex`]: the k-channel schedule, photon budget and OFDM transform.
//! * [`resources`]: closed-form time/information curves and crossovers.
//! * [`cli`]: the `cohfp` experiment harness.
//!
//! The `examples/` directory has one runnable program per capability.

// Parameter guards are written `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimator;
pub mod multiplex;
pub mod optics;
pub mod resources;
pub mod rng;
pub mod vectors;

pub use error::{Error, ErrorKind, Result};
pub use estimator::{analytic_expectation, estimate_distance, required_repetitions, EstimateResult};
pub use multiplex::{
    ofdm_decode, ofdm_encode, photon_budget, run_multiplexed_protocol, run_multiplexed_protocol_with,
    schedule, Backend, ChannelSchedule, MultiplexedRun, OfdmSymbol, ProtocolOptions,
};
pub use optics::{
    beamsplitter_amplitudes, click_probabilities, make_fingerprint, sample_clicks, sample_clicks_with,
    ClickModel, ClickProbabilities, ClickTally, DarkCounts, ProtocolParams, PulseTrain, Sampler,
};
pub use resources::{CurveParams, KRule, ResourceReport};
pub use vectors::{
    ecc_encode, euclidean_distance_sq, inner_product_from_distance, normalize, random_unit_vector,
    BinaryString, LinearCode, UnitVector,
};

/// Crate version, embedded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
