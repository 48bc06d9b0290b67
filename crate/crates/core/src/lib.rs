//! Toolkit for hardware-structured higher-order binary optimization.
//!
//! * [`hubo`]: instances in spin and binary form, energies, exhaustive search.
//! * [`topology`]: heavy-hex coupling maps and the SWAP-layer layout generator.
//! * [`sampler`]: heavy-tailed coefficient distributions.
//! * [`anneal`]: Metropolis simulated annealing and sweep-time calibration.
//! * [`mip`]: linearization to a binary MIP, LP/warm-start export, incumbent traces.
//! * [`cdsim`]: bias-field counterdiabatic optimization on a statevector simulator.
//! * [`harness`]: approximation ratios, time-to-target and benchmark suites.

pub mod anneal;
pub mod cdsim;
pub mod error;
pub mod harness;
pub mod hubo;
pub mod mip;
pub mod rng;
pub mod sampler;
pub mod topology;

#[doc(hidden)]
pub mod testing;

pub use error::{Error, Result};
pub use hubo::{brute_force_ground_state, BinaryHubo, HuboInstance, SpinConfig};
pub use sampler::{CoefficientSampler, SamplerConfig, SamplerKind};
pub use topology::{CouplingMap, LayoutParams, LayoutPlan, ParallelSets};
