//! Reconfiguration management for modular production systems.
//!
//! The library covers the full decision pipeline: demand identification,
//! backward-chaining generation of alternative production sequences, brute-force
//! layout enumeration, adaptive NARX process models with disturbance estimation,
//! discrete-event simulation of per-criterion efforts, simulation-based
//! multi-criteria parameter optimization, and cost-utility selection of the best
//! system configuration.

pub mod capability;
pub mod des;
pub mod evaluator;
pub mod layout;
pub mod model;
pub mod narx;
pub mod optimizer;
pub mod pipeline;
pub mod plant;
pub mod store;

pub use model::{
    Cppm, CriteriaWeights, Criterion, EffortVector, LayoutGraph, ModuleConfiguration,
    PerCriterion, ProcessOperator, ProductionOrder, Scenario, StateDescription,
    SystemConfiguration,
};
