//! Electromagnetic response providers.
//!
//! The optimizer never solves fields itself; it asks a provider for the
//! antenna admittance and radiation gain at a `(geometry, fill, frequency)`
//! point. Two providers ship with the library:
//!
//! - [`DatasetProvider`]: tabulated samples loaded from CSV, typically
//!   exported from an external field solver, answered by exact geometry
//!   match and piecewise-linear interpolation in fill fraction;
//! - [`SurrogateProvider`]: an analytic stand-in anchored at the empty and
//!   full channel states, with a configurable power-law shape in between.
//!
//! Any type implementing [`EmProvider`] (including plain closures) can be
//! plugged into the fitness, optimizer, and analysis machinery.

mod dataset;
mod surrogate;

pub use dataset::DatasetProvider;
pub use surrogate::{SurrogateCalibration, SurrogateProvider};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ParameterVector;
use crate::ic::{capacitance_of_code, ICProfile, SensorReading};

/// Default working frequency: 925 MHz, an unlicensed UHF RFID channel.
pub const DEFAULT_FREQUENCY_HZ: f64 = 925.0e6;

/// One point of the electromagnetic state space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EMQuery {
    /// Candidate geometry.
    pub geometry: ParameterVector,
    /// Channel fill fraction in [0, 1].
    pub fill_fraction: f64,
    /// Working frequency (Hz).
    pub frequency_hz: f64,
}

impl EMQuery {
    /// Validated constructor.
    pub fn new(geometry: ParameterVector, fill_fraction: f64, frequency_hz: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&fill_fraction) {
            return Err(Error::range(
                "fill fraction",
                format!("must lie in [0, 1], got {fill_fraction}"),
            ));
        }
        if !frequency_hz.is_finite() || frequency_hz <= 0.0 {
            return Err(Error::invalid(
                "frequency",
                format!("must be finite and > 0, got {frequency_hz}"),
            ));
        }
        if !geometry.is_finite() {
            return Err(Error::invalid(
                "parameter vector",
                "coordinates must be finite",
            ));
        }
        Ok(Self {
            geometry,
            fill_fraction,
            frequency_hz,
        })
    }
}

/// Antenna response at one query point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EMSample {
    /// Antenna conductance G_A (S).
    pub conductance_s: f64,
    /// Antenna susceptance B_A (S).
    pub susceptance_s: f64,
    /// Radiation gain (dBi).
    pub gain_dbi: f64,
}

/// Material properties carried as dataset/report metadata.
///
/// These describe what an external solver simulated; nothing in the library
/// computes with them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Materials {
    /// Substrate relative permittivity.
    pub substrate_permittivity: f64,
    /// Substrate loss tangent.
    pub substrate_loss_tangent: f64,
    /// Liquid relative permittivity.
    pub liquid_permittivity: f64,
    /// Liquid conductivity (S/m).
    pub liquid_conductivity_s_per_m: f64,
}

impl Default for Materials {
    /// Kapton substrate with water as the sensed liquid.
    fn default() -> Self {
        Self {
            substrate_permittivity: 3.5,
            substrate_loss_tangent: 0.0026,
            liquid_permittivity: 78.0,
            liquid_conductivity_s_per_m: 1.78,
        }
    }
}

impl Materials {
    /// Check physical plausibility of the metadata.
    pub fn validate(&self) -> Result<()> {
        if self.substrate_permittivity < 1.0 || self.liquid_permittivity < 1.0 {
            return Err(Error::invalid(
                "materials",
                "relative permittivity must be >= 1",
            ));
        }
        if self.substrate_loss_tangent < 0.0 || self.liquid_conductivity_s_per_m < 0.0 {
            return Err(Error::invalid(
                "materials",
                "loss tangent and conductivity must be >= 0",
            ));
        }
        Ok(())
    }
}

/// Source of electromagnetic responses.
///
/// Implementations must be deterministic: the same query always returns the
/// same sample. They are queried concurrently during grid search.
pub trait EmProvider: Sync {
    /// Antenna admittance and gain at the query point.
    fn query(&self, q: &EMQuery) -> Result<EMSample>;
}

impl<F> EmProvider for F
where
    F: Fn(&EMQuery) -> Result<EMSample> + Sync,
{
    fn query(&self, q: &EMQuery) -> Result<EMSample> {
        self(q)
    }
}

/// Fraction of available power delivered across the antenna-chip interface.
///
/// With the chip tuned to code `s`, the interface leaves a residual
/// susceptance `omega * C_IC(s) + B_A` and
/// `tau = 4 G_A G_IC / ((G_A + G_IC)^2 + (omega C_IC(s) + B_A)^2)`.
/// `tau = 1` only at perfect conjugate match.
pub fn power_transfer(
    sample: &EMSample,
    profile: &ICProfile,
    reading: &SensorReading,
    frequency_hz: f64,
) -> Result<f64> {
    let omega = std::f64::consts::TAU * frequency_hz;
    let c_ic = capacitance_of_code(profile, reading.code)? * 1e-12;
    let residual = omega * c_ic + sample.susceptance_s;
    let g_a = sample.conductance_s;
    let g_ic = profile.conductance;
    let denom = (g_a + g_ic).powi(2) + residual.powi(2);
    Ok(4.0 * g_a * g_ic / denom)
}

/// Realized gain: radiation gain degraded by the mismatch loss (dBi).
///
/// `tau = 0` yields negative infinity, the "unreadable" sentinel.
pub fn realized_gain(sample: &EMSample, tau: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::range(
            "power transfer coefficient",
            format!("must lie in [0, 1], got {tau}"),
        ));
    }
    Ok(sample.gain_dbi + 10.0 * tau.log10())
}

/// dBi (or dB) to linear power ratio.
pub fn dbi_to_linear(dbi: f64) -> f64 {
    10.0_f64.powf(dbi / 10.0)
}

/// Linear power ratio to dBi (or dB).
pub fn linear_to_dbi(linear: f64) -> f64 {
    10.0 * linear.log10()
}
