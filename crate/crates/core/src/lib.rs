//! Deterministic error mitigation for the k-independent-set decision problem.
//!
//! Noisy measurement bitstrings are repaired by searching Hamming shells of
//! increasing radius around each shot. The crate provides the instance
//! builders ([`graph`]), exact MIS solvers ([`mis`]), bit-flip channel
//! emulation and calibration ([`noise`]), the two search procedures
//! ([`dem`]), the entropy-controlled cost model ([`analytics`]) and a seeded
//! campaign runner ([`harness`]).

pub mod bitstring;
pub mod error;
pub mod graph;
pub mod harness;
pub mod analytics;
pub mod dem;
pub mod mis;
pub mod noise;

pub use bitstring::Bitstring;
pub use error::{Error, Result};
pub use dem::{bf_dem, decide_k_is, tarjan_dem, Decision, DemResult, TarjanDemResult};
pub use graph::{Graph, LatticeFamily, LatticeSpec, Register};
pub use mis::{brute_force_mis, tarjan_mis, MisResult, Reductions};
pub use noise::NoiseModel;
