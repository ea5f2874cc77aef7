//! Sharp-front liquid fill model.
//!
//! The channel is treated as perfectly filled behind a planar front and
//! empty ahead of it, with no transient flow effects: a liquid mass maps
//! directly to a fill fraction of the channel capacity and a front position
//! along the serpentine path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DerivedGeometry, FluidProperties};

/// Quasi-static liquid state of the sensitive channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FillState {
    /// Liquid mass in the channel (mg).
    pub mass_mg: f64,
    /// Filled fraction of the channel capacity, in [0, 1].
    pub fill_fraction: f64,
    /// Front position along the liquid path (mm).
    pub front_position_mm: f64,
    /// True when the supplied mass exceeds the channel capacity.
    pub overflow: bool,
}

/// Map a liquid mass to a fill state of the given channel.
pub fn fill_from_mass(
    mass_mg: f64,
    geom: &DerivedGeometry,
    fluid: &FluidProperties,
) -> Result<FillState> {
    if !mass_mg.is_finite() || mass_mg < 0.0 {
        return Err(Error::invalid(
            "liquid mass",
            format!("must be finite and >= 0, got {mass_mg}"),
        ));
    }
    let capacity = channel_capacity(geom, fluid)?;
    let fill_fraction = (mass_mg / capacity).clamp(0.0, 1.0);
    Ok(FillState {
        mass_mg,
        fill_fraction,
        front_position_mm: fill_fraction * geom.path_length,
        overflow: mass_mg > capacity,
    })
}

/// Liquid mass corresponding to a fill fraction; exact inverse of
/// [`fill_from_mass`] on `[0, capacity]`.
pub fn mass_from_fill(
    fill_fraction: f64,
    geom: &DerivedGeometry,
    fluid: &FluidProperties,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&fill_fraction) {
        return Err(Error::range(
            "fill fraction",
            format!("must lie in [0, 1], got {fill_fraction}"),
        ));
    }
    Ok(fill_fraction * channel_capacity(geom, fluid)?)
}

fn channel_capacity(geom: &DerivedGeometry, fluid: &FluidProperties) -> Result<f64> {
    fluid.validate()?;
    let capacity = fluid.density * geom.capacity_mg;
    if !capacity.is_finite() || capacity <= 0.0 {
        return Err(Error::invalid(
            "channel capacity",
            format!("must be > 0, got {capacity} mg"),
        ));
    }
    Ok(capacity)
}
