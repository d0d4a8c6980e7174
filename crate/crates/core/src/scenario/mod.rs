//! Configuration-driven multiuser uplink runs: case definitions, signal composition
//! and reproducible run artifacts.

mod compose;
mod config;
mod run;
mod validate;

pub use compose::{compose_mixed_numerology, compose_multiuser, UserStream};
pub use config::{Case, ChannelSpec, Framing, MetricSettings, ScenarioConfig, ShapingSource, UserConfig, WaveformSpec};
pub use validate::{invariant_suite, Check};
pub use run::{
    closed_form_report, noise_variance, papr_report, optimize_target, resolve_users, run_case, run_resolved, transmit, PointReport, ResolvedUser, RunArtifact,
    Transmission, UserArtifact,
};
