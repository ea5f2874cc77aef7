//! Shared fixtures for the benchmark suite.

use fluidtag_core::em::{EMQuery, EMSample, DEFAULT_FREQUENCY_HZ};
use fluidtag_core::error::Result;
use fluidtag_core::geometry::{FixedGeometry, FluidProperties, ParameterVector};
use fluidtag_core::ic::{susceptance_of_code, ICProfile};
use fluidtag_core::optimizer::EvalContext;

/// Working frequency used by every benchmark.
pub const FREQ: f64 = DEFAULT_FREQUENCY_HZ;

/// Analytic landscape with a gain peak, cheap enough that benchmarks measure
/// the library instead of the provider.
pub struct PeakedLandscape {
    profile: ICProfile,
    target: ParameterVector,
    b_empty: f64,
    b_full: f64,
}

impl PeakedLandscape {
    /// Landscape peaking at the given geometry.
    pub fn new(target: ParameterVector) -> Self {
        let profile = ICProfile::default();
        Self {
            b_empty: susceptance_of_code(&profile, 400, FREQ).unwrap(),
            b_full: susceptance_of_code(&profile, 100, FREQ).unwrap(),
            profile,
            target,
        }
    }

    /// Evaluation context borrowing this landscape as the provider.
    pub fn context(&self) -> EvalContext<'_> {
        EvalContext {
            provider: self,
            fixed: FixedGeometry::default(),
            fluid: FluidProperties::default(),
            profile: self.profile,
            frequency_hz: FREQ,
        }
    }
}

impl fluidtag_core::em::EmProvider for PeakedLandscape {
    fn query(&self, q: &EMQuery) -> Result<EMSample> {
        let d2 = ((q.geometry.a1 - self.target.a1) / 8.0).powi(2)
            + ((q.geometry.a2 - self.target.a2) / 10.0).powi(2)
            + ((q.geometry.c2 - self.target.c2) / 1.5).powi(2);
        Ok(EMSample {
            conductance_s: self.profile.conductance,
            susceptance_s: self.b_empty + (self.b_full - self.b_empty) * q.fill_fraction,
            gain_dbi: 2.0 - 40.0 * d2,
        })
    }
}
