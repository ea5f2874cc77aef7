//! Parametric model of the antenna and microfluidic layout.
//!
//! The tag couples a partially folded gamma-match dipole with a serpentine
//! capillary channel laid over the impedance-matching region of the antenna.
//! Three lengths are free during optimization: the two form factors of the
//! gamma-match loop (`a1`, `a2`) and the channel trace width (`c2`).
//! Everything else is either held fixed during a search ([`FixedGeometry`])
//! or follows deterministically from the free parameters
//! ([`DerivedGeometry`]).
//!
//! All lengths are in millimetres and all masses in milligrams, so the
//! channel formulas evaluate without unit conversions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Margin between the channel edge and the antenna edge (mm), set by the
/// narrowest manufacturable paper trace.
pub const EDGE_MARGIN_MM: f64 = 0.5;

/// The free geometric unknowns `{a1, a2, c2}` searched by the optimizer.
///
/// `a1` is the loop side parallel to the IC, `a2` the side perpendicular to
/// it, and `c2` the microfluidic channel width. All in millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    /// Gamma-match side parallel to the IC (mm).
    #[serde(rename = "a1_mm")]
    pub a1: f64,
    /// Gamma-match side perpendicular to the IC (mm).
    #[serde(rename = "a2_mm")]
    pub a2: f64,
    /// Microfluidic channel width (mm).
    #[serde(rename = "c2_mm")]
    pub c2: f64,
}

impl ParameterVector {
    /// Bundle three lengths into a parameter vector.
    pub fn new(a1: f64, a2: f64, c2: f64) -> Self {
        Self { a1, a2, c2 }
    }

    /// True when every coordinate is finite.
    pub fn is_finite(&self) -> bool {
        self.a1.is_finite() && self.a2.is_finite() && self.c2.is_finite()
    }

    /// Total order on `(a1, a2, c2)` used for deterministic tie-breaking.
    pub fn lex_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.a1
            .total_cmp(&other.a1)
            .then(self.a2.total_cmp(&other.a2))
            .then(self.c2.total_cmp(&other.c2))
    }
}

/// Geometry held constant during a search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedGeometry {
    /// Conductor trace width a3 (mm).
    #[serde(rename = "a3_mm", default = "default_mm")]
    pub a3: f64,
    /// Microfluidic layer thickness c1 (mm).
    #[serde(rename = "c1_mm", default = "default_mm")]
    pub c1: f64,
    /// Gap in the conductor hosting the IC (mm).
    #[serde(rename = "ic_gap_mm", default = "default_mm")]
    pub ic_gap: f64,
}

fn default_mm() -> f64 {
    1.0
}

impl Default for FixedGeometry {
    fn default() -> Self {
        Self {
            a3: 1.0,
            c1: 1.0,
            ic_gap: 1.0,
        }
    }
}

impl FixedGeometry {
    /// Check the struct invariants (all lengths finite and positive).
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("a3", self.a3), ("c1", self.c1), ("ic_gap", self.ic_gap)] {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::invalid(
                    "fixed geometry",
                    format!("{name} must be finite and > 0, got {value}"),
                ));
            }
        }
        Ok(())
    }
}

/// Inclusive interval for one search axis (mm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisBounds {
    /// Lower inclusive bound.
    pub min: f64,
    /// Upper inclusive bound.
    pub max: f64,
}

impl AxisBounds {
    /// New bounds; `min` may equal `max` (degenerate axis).
    pub fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        if !self.min.is_finite() || !self.max.is_finite() || self.min > self.max {
            return Err(Error::invalid(
                "parameter space",
                format!(
                    "{name} bounds must be finite with min <= max, got [{}, {}]",
                    self.min, self.max
                ),
            ));
        }
        Ok(())
    }

    /// Inclusive membership test.
    pub fn contains(&self, x: f64) -> bool {
        x >= self.min && x <= self.max
    }

    /// Width of the interval.
    pub fn span(&self) -> f64 {
        self.max - self.min
    }
}

/// Inclusive box of admissible `{a1, a2, c2}` values.
///
/// The defaults bound a compact tag footprint while keeping the channel
/// capacity above the smallest volume of interest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpace {
    /// Bounds on a1 (mm).
    #[serde(rename = "a1_mm")]
    pub a1: AxisBounds,
    /// Bounds on a2 (mm).
    #[serde(rename = "a2_mm")]
    pub a2: AxisBounds,
    /// Bounds on c2 (mm).
    #[serde(rename = "c2_mm")]
    pub c2: AxisBounds,
}

impl Default for ParameterSpace {
    fn default() -> Self {
        Self {
            a1: AxisBounds::new(0.0, 8.0),
            a2: AxisBounds::new(5.0, 15.0),
            c2: AxisBounds::new(1.0, 2.5),
        }
    }
}

impl ParameterSpace {
    /// Check that every axis has finite, ordered bounds.
    pub fn validate(&self) -> Result<()> {
        self.a1.validate("a1")?;
        self.a2.validate("a2")?;
        self.c2.validate("c2")
    }
}

/// Channel dimensions that follow from the free parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedGeometry {
    /// Serpentine crossing length, parallel to the IC (mm).
    #[serde(rename = "c3_mm")]
    pub c3: f64,
    /// Serpentine step between crossings (mm); 0 for a straight channel.
    #[serde(rename = "c4_mm")]
    pub c4: f64,
    /// Liquid path length along the channel: four crossings plus three
    /// steps (mm).
    #[serde(rename = "path_length_mm")]
    pub path_length: f64,
    /// Channel cross-section c1 * c2 (mm^2).
    #[serde(rename = "cross_section_mm2")]
    pub cross_section: f64,
    /// Channel capacity for water (mg). Water density is 1 mg/mm^3, so this
    /// equals the fillable volume in mm^3; scale by [`FluidProperties`]
    /// density for other liquids.
    #[serde(rename = "capacity_mg")]
    pub capacity_mg: f64,
    /// True when the serpentine degenerates into a straight channel.
    pub is_straight: bool,
}

/// Bulk properties of the liquid being quantified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidProperties {
    /// Density (mg/mm^3). Water is 1.0.
    #[serde(rename = "density_mg_per_mm3", default = "default_mm")]
    pub density: f64,
}

impl Default for FluidProperties {
    fn default() -> Self {
        Self { density: 1.0 }
    }
}

impl FluidProperties {
    /// Check that the density is finite and positive.
    pub fn validate(&self) -> Result<()> {
        if !self.density.is_finite() || self.density <= 0.0 {
            return Err(Error::invalid(
                "fluid properties",
                format!("density must be finite and > 0, got {}", self.density),
            ));
        }
        Ok(())
    }
}

/// Compute the dependent channel dimensions for one candidate geometry.
///
/// The crossing length grows with the loop side it covers,
/// `c3 = a1 + 2*a3 + ic_gap`, while the serpentine step redistributes the
/// remaining perpendicular extent over the three gaps between crossings,
/// `c4 = max(0, (a2 - a3 - 0.5 - 4*c2) / 3)`. When the free parameters leave
/// no room for steps the channel is straight (`c4 = 0`).
///
/// The reported capacity is the smaller of the bounding-region volume and
/// the serpentine path volume, at water density.
pub fn derive_geometry(v: &ParameterVector, fixed: &FixedGeometry) -> Result<DerivedGeometry> {
    if !v.is_finite() {
        return Err(Error::invalid(
            "parameter vector",
            format!(
                "all coordinates must be finite, got ({}, {}, {})",
                v.a1, v.a2, v.c2
            ),
        ));
    }
    fixed.validate()?;

    let c3 = v.a1 + 2.0 * fixed.a3 + fixed.ic_gap;
    let c4 = ((v.a2 - fixed.a3 - EDGE_MARGIN_MM - 4.0 * v.c2) / 3.0).max(0.0);
    let path_length = 4.0 * c3 + 3.0 * c4;
    let cross_section = fixed.c1 * v.c2;

    // Water density is 1 mg/mm^3; see DerivedGeometry::capacity_mg.
    let region = fixed.c1 * c3 * (v.a2 - fixed.a3 - EDGE_MARGIN_MM);
    let serpentine = cross_section * path_length;
    let capacity_mg = region.min(serpentine);

    Ok(DerivedGeometry {
        c3,
        c4,
        path_length,
        cross_section,
        capacity_mg,
        is_straight: c4 == 0.0,
    })
}

/// Channel capacity in milligrams of the given fluid.
///
/// This is the denominator of the sensitivity figure: the liquid mass held
/// by a completely filled sensitive channel.
pub fn liquid_capacity(
    v: &ParameterVector,
    fixed: &FixedGeometry,
    fluid: &FluidProperties,
) -> Result<f64> {
    fluid.validate()?;
    let geom = derive_geometry(v, fixed)?;
    Ok(fluid.density * geom.capacity_mg)
}

/// True iff every coordinate of `v` lies within its inclusive interval.
pub fn in_bounds(v: &ParameterVector, space: &ParameterSpace) -> bool {
    space.a1.contains(v.a1) && space.a2.contains(v.a2) && space.c2.contains(v.c2)
}

/// Evenly spaced inclusive samples over one axis.
///
/// A count of 1 yields the axis midpoint. Exact duplicates (possible when
/// the axis is degenerate) are collapsed so grids never repeat a point.
pub fn axis_samples(bounds: &AxisBounds, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::invalid(
            "grid count",
            "axis sample count must be >= 1",
        ));
    }
    if count == 1 {
        return Ok(vec![0.5 * (bounds.min + bounds.max)]);
    }
    let span = bounds.span();
    let mut out: Vec<f64> = Vec::with_capacity(count);
    for i in 0..count {
        let x = if i == 0 {
            bounds.min
        } else if i == count - 1 {
            bounds.max
        } else {
            (bounds.min + span * (i as f64) / ((count - 1) as f64)).clamp(bounds.min, bounds.max)
        };
        if out.last().is_none_or(|&prev| x > prev) {
            out.push(x);
        }
    }
    Ok(out)
}

/// Cartesian grid over the parameter space, in lexicographic `(a1, a2, c2)`
/// order. `counts` gives the number of samples per axis.
pub fn make_grid(space: &ParameterSpace, counts: [usize; 3]) -> Result<Vec<ParameterVector>> {
    space.validate()?;
    let a1s = axis_samples(&space.a1, counts[0])?;
    let a2s = axis_samples(&space.a2, counts[1])?;
    let c2s = axis_samples(&space.c2, counts[2])?;

    let mut grid = Vec::with_capacity(a1s.len() * a2s.len() * c2s.len());
    for &a1 in &a1s {
        for &a2 in &a2s {
            for &c2 in &c2s {
                grid.push(ParameterVector::new(a1, a2, c2));
            }
        }
    }
    Ok(grid)
}
