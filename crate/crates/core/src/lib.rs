//! Associative-memory recurrent network with self-organizing lateral weights.
//!
//! Lateral weights evolve under the Haeussler competitive plasticity law,
//! driven by equilibrium signal correlations computed from a third-order
//! truncated resolvent. Optionally, a firefly swarm settles over the input
//! grid and synthesizes a signed excitatory/inhibitory topology that masks
//! and seeds the plastic weights.
//!
//! Module map:
//! - [`patterns`]: input generation, noise, fusion, masking, image/CSV files
//! - [`dynamics`]: weight matrices, truncated resolvent, correlation tensor
//! - [`plasticity`]: the weight-update law and its Euler integrator
//! - [`firefly`]: swarm movement, minimum-distance settling, weight synthesis
//! - [`trainer`]: model lifecycle, recall, completion
//! - [`experiments`]: scripted scenarios that emit figures and metric tables

pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod firefly;
pub mod metrics;
pub mod patterns;
pub mod plasticity;
pub mod seed;
pub mod trainer;

pub use dynamics::{
    correlation_tensor, equilibrium_response, truncated_resolvent, CorrelationTensor, Resolvent,
    Response, WeightMatrix,
};
pub use error::{Error, Result};
pub use firefly::{FireflyPopulation, Polarity, SwarmParams, SynthesisParams};
pub use patterns::{ActiveSet, Boundary, Pattern, Shape};
pub use plasticity::{evolve_weights, haeussler_rhs, saturation_gate, EvolveReport, PlasticityParams};
pub use trainer::{Model, RecallMetrics, TrainerConfig};
