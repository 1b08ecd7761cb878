//! Multi-absorber cavity quantum memory: transfer-function model, spectral
//! matching of the absorber comb, resonance-line topology and a
//! time-domain simulator used as an independent check.

pub mod config;
pub mod echo;
pub mod matching;
pub mod model;
pub mod optimize;
pub mod poly;
pub mod pulse;
pub mod quadrature;
pub mod special;
pub mod timedomain;
pub mod topology;

pub use config::{Absorber, ConfigError, MemoryConfig};
pub use matching::{MatchError, MatchingForm};
pub use model::{transfer_fn, ModelError, SpectrumSample};
pub use optimize::{optimize, Objective, OptimizationReport, OptimizeOptions};
pub use pulse::InputPulse;
pub use timedomain::{output_via_tf, simulate, SimulationOptions, TimeTrace};
pub use topology::{line_trajectories, resonance_lines, transition_point, TopologyOptions};

pub use num_complex::Complex64;
