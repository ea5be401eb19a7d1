//! Experiment drivers: sandwich tables, rate fits, certificate sweeps and
//! the infinite-trace composition, all emitting CSV.

pub mod config;
pub mod experiments;
pub mod rates;

pub use config::{parse_grid, ExperimentConfig, Family};
pub use experiments::{run_certify, run_sandwich, run_trace_infty, CertifyRun, SandwichRun, TraceRun};
pub use rates::{fit_rate, run_rate_fit, RateFit, Target};
