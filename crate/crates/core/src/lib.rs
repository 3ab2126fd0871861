//! Scenario generation and capacity-investment equilibria for a privately built
//! transmission line shared with local wind generators.
//!
//! The pipeline runs
//! [`ingest`] (load and align hourly data) →
//! [`dist`] (binned empirical tables) →
//! [`gibbs`] (Markov-chain realisations) →
//! [`sim`] (generation and curtailment over the capacity grid) →
//! [`game`] (profits and the leader-follower equilibrium).

pub mod dist;
pub mod error;
pub mod game;
pub mod gibbs;
pub mod ingest;
pub mod sim;
pub mod stats;
pub mod synth;

pub use dist::{
    build_demand_conditional, build_joint_wind_table, Axis, BinSpec, DemandConditional,
    DiscreteDistribution, JointTable,
};
pub use error::{Error, Result};
pub use game::{
    follower_best_response, profit_surfaces, stackelberg, BestResponse, CostParams, Equilibrium,
    ProfitSurfaces,
};
pub use gibbs::{
    convergence_stats, gibbs_step, init_chain, run_chain, run_ensemble, ChainConfig, ChainState,
    Realisation, SamplerTables, StatsReport, VariableStats,
};
pub use ingest::{
    align_series, load_series_csv, normalize_demand, ColumnMap, GapReport, JointRecord,
    JointSeries, TimeSeries,
};
pub use sim::{
    build_energy_tables, curtailment_timestep, fit_sigmoid, per_unit_output, read_curve_points,
    EnergyTables,
    PerUnitSeries, PowerCurve, SigmoidFit, StrategyGrid,
};

/// Default target mean for normalised local demand (MW).
pub const DEFAULT_DEMAND_MEAN: f64 = 108.1830;
