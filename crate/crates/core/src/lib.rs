//! Reconstruction of network topologies from continuous-time quantum walk
//! site distributions.
//!
//! A network with unit couplings is encoded as a binary [`CouplingString`].
//! Its walk distributions, measured at a few times, form a target; a genetic
//! search ([`ga`]) looks for the coupling string whose simulated distributions
//! ([`ctqw`]) minimise a divergence ([`fitness`]) to that target.
//! [`measurement`] adds shot noise and the threshold study, [`harness`] runs
//! the benchmark protocols and writes reports.

pub mod cli;
pub mod ctqw;
pub mod error;
pub mod fitness;
pub mod ga;
pub mod graph;
pub mod harness;
pub mod measurement;
pub mod seed;

pub use ctqw::{concatenated_distribution, site_distribution, ConcatenatedDistribution, ProbeState, TimeGrid};
pub use error::{Error, Result};
pub use fitness::{fitness, FitnessScore, Metric, Objective};
pub use ga::{run_ga, GaConfig, HaltReason, RunResult};
pub use graph::{coupling_index, num_couplings, CouplingString, Topology};
pub use measurement::{classify_outcome, monte_carlo_sweep, sample_noisy_distribution, NoiseConfig, OutcomeTally};
