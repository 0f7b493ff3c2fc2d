//! Built-in scenario library: configuration, catalog of field expressions,
//! scenario builders, report assembly and the batch runner.

pub mod build;
pub mod catalog;
pub mod config;
pub mod report;
pub mod run;

pub use build::{
    build_field_eq_scenario, build_orbit_scenario, build_pfaff_scenario,
    build_pseudolinear_scenario, FieldEqScenario, OrbitScenario, PfaffScenario,
    PseudolinearScenario,
};
pub use config::{ConfigError, DomainConfig, Params, ScenarioConfig, ScenarioKind, Tolerances};
pub use report::{Report, Verdict};
pub use run::{run_config, RunError};
