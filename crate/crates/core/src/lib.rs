//! Continuous-time quantum walks on a one-dimensional lattice with static,
//! white-noise and sinusoidal on-site disorder.

pub mod config;
pub mod disorder;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod integrator;
pub mod lattice;
pub mod observables;
pub mod qubit;
pub mod spectral;

pub use disorder::{DisorderField, DisorderKind, DisorderSpec};
pub use error::{ConfigError, QwalkError, Result, RunError};
pub use integrator::{run_trajectory, IntegrationConfig, SampleGrid, TrajectoryOptions, TrajectoryOutput};
pub use lattice::{ExpansionPolicy, WavePacket};
pub use observables::{Carpet, CrossoverEstimate, ObservableSeries};
