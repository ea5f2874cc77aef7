//! Joint design of self-tuning UHF RFID sensor antennas and microfluidic
//! channels for liquid quantification.
//!
//! A capillary channel routed over the antenna's impedance-matching region
//! detunes the antenna as liquid advances; a self-tuning chip cancels the
//! detuning step by step and reports the step index as a digital sensor
//! code. Antenna and channel geometry both shape the response, so this
//! library searches their joint parameter space instead of designing the
//! two subsystems separately:
//!
//! - [`geometry`]: free parameters, derived channel dimensions, capacity,
//!   bounds, and grid generation;
//! - [`ic`]: the self-tuning chip model (capacitance grid, code
//!   quantization, residual, differential code);
//! - [`em`]: pluggable electromagnetic response providers plus the power
//!   transfer and realized-gain chain;
//! - [`fluid`]: sharp-front mapping between liquid mass and channel fill;
//! - [`fitness`]: the gated, weighted three-term fitness of a candidate;
//! - [`optimizer`]: deterministic two-step hierarchical grid search with a
//!   full audit trail;
//! - [`analysis`]: fill sweeps, cubic trend fits, reading-range estimates,
//!   and simulation-vs-measurement tables;
//! - [`report`]: byte-stable CSV/JSON emission.

pub mod analysis;
pub mod em;
pub mod error;
pub mod fitness;
pub mod fluid;
pub mod geometry;
pub mod ic;
pub mod optimizer;
pub mod report;

pub use analysis::{
    compare, fit_cubic, reading_range, sweep, ComparisonRow, CubicFit, MetricValue, SweepCurve,
};
pub use em::{
    power_transfer, realized_gain, DatasetProvider, EMQuery, EMSample, EmProvider, Materials,
    SurrogateCalibration, SurrogateProvider, DEFAULT_FREQUENCY_HZ,
};
pub use error::{Error, Result};
pub use fitness::{check_monotonic, evaluate, FitnessBreakdown, Gates, Normalization, Weights};
pub use fluid::{fill_from_mass, mass_from_fill, FillState};
pub use geometry::{
    derive_geometry, in_bounds, liquid_capacity, make_grid, DerivedGeometry, FixedGeometry,
    FluidProperties, ParameterSpace, ParameterVector,
};
pub use ic::{
    capacitance_of_code, code_of_susceptance, differential_code, tuning_residual, ICProfile,
    SensorReading,
};
pub use optimizer::{optimize, run_round, EvalContext, GridSpec, NormPolicy, SearchResult};
