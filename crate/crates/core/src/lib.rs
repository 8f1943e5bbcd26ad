//! Deterministic discrete-time microgrid energy-market simulator.
//!
//! A monopolist power broker sells service-level agreements (SLAs) — firm
//! power reservations over a catalog of durations — to competing appliance
//! loads inside a small grid fed by a photovoltaic plant and a capped main
//! grid connection. Each second the broker posts a price vector, loads reply
//! with quantity vectors, contracts are allocated against available supply,
//! broken contracts are reimbursed, and a step ledger records all money and
//! energy flows.
//!
//! Broker policies are either rule-based (`optimistic`, `pessimistic`) or a
//! fixed-topology neural network whose weights are trained by an evolutionary
//! algorithm against full simulated days ([`evolve`]).
//!
//! Everything is deterministic: one seeded RNG stream drives a simulation, so
//! identical `(scenario, seed, policy)` inputs produce byte-identical logs.

pub mod broker;
pub mod engine;
pub mod evolve;
pub mod loads;
pub mod metrics;
pub mod neuro;
pub mod scenario;
pub mod supply;

mod error;

pub use broker::{BrokerPolicy, PriceVector, QuantityVector, SlaBook, SlaContract, SupplyContext};
pub use engine::{run_simulation, run_simulation_opts, RunLogs, SimOptions, SimState};
pub use error::Error;
pub use evolve::{evolve, EvolutionParams, FitnessRecord, Trainer, TrainingResult};
pub use loads::{ApplianceSpec, LoadAgent, OperationState, UsageModel};
pub use metrics::MetricsReport;
pub use neuro::{Genome, NetInput, Topology};
pub use scenario::{load_scenario, GridPlan, ScenarioConfig, SlaCatalog, TariffSchedule, TimeSeries};
pub use supply::{PvParams, WeatherSource};

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Seconds in one civil day.
pub const SECONDS_PER_DAY: u64 = 86_400;
