//! Endpoint-calibrated analytic surrogate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ic::{susceptance_of_code, ICProfile};

use super::{EMQuery, EMSample, EmProvider};

/// Calibration anchoring a surrogate at the empty (`fill = 0`) and full
/// (`fill = 1`) channel states.
///
/// Between the anchors every quantity follows the shaped fill coordinate
/// `u = fill^gamma`: admittance terms interpolate linearly in siemens,
/// gain linearly in dB. `gamma = 1` gives straight-line interpolation;
/// larger values delay the response toward the full state, which mimics
/// channels whose sensitive region fills late.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateCalibration {
    /// Antenna susceptance with the channel empty (S).
    pub ba_empty_s: f64,
    /// Antenna susceptance with the channel full (S).
    pub ba_full_s: f64,
    /// Antenna conductance with the channel empty (S).
    pub ga_empty_s: f64,
    /// Antenna conductance with the channel full (S).
    pub ga_full_s: f64,
    /// Radiation gain with the channel empty (dBi).
    pub gain_empty_dbi: f64,
    /// Radiation gain with the channel full (dBi).
    pub gain_full_dbi: f64,
    /// Shape exponent gamma for the fill interpolation (> 0, default 1).
    #[serde(default = "default_shape")]
    pub shape_exponent: f64,
}

fn default_shape() -> f64 {
    1.0
}

impl SurrogateCalibration {
    /// Check the calibration invariants.
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.ba_empty_s,
            self.ba_full_s,
            self.ga_empty_s,
            self.ga_full_s,
            self.gain_empty_dbi,
            self.gain_full_dbi,
            self.shape_exponent,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err(Error::invalid(
                "surrogate calibration",
                "all fields must be finite",
            ));
        }
        if self.ba_empty_s == self.ba_full_s {
            return Err(Error::invalid(
                "surrogate calibration",
                "susceptance endpoints must be distinct for a monotone response",
            ));
        }
        if self.ga_empty_s <= 0.0 || self.ga_full_s <= 0.0 {
            return Err(Error::invalid(
                "surrogate calibration",
                "conductance endpoints must be > 0",
            ));
        }
        if self.shape_exponent <= 0.0 {
            return Err(Error::invalid(
                "surrogate calibration",
                format!("shape exponent must be > 0, got {}", self.shape_exponent),
            ));
        }
        Ok(())
    }

    /// Calibrate from observed sensor codes and realized gains.
    ///
    /// Useful when only the digital response of a fabricated or simulated
    /// tag is known: the susceptance endpoints are recovered by inverting
    /// the self-tuning quantizer at the observed codes, the antenna
    /// conductance is assumed matched to the chip, and the realized gains
    /// then equal the radiation gains (zero residual means `tau = 1`).
    pub fn from_codes(
        profile: &ICProfile,
        frequency_hz: f64,
        code_empty: i64,
        code_full: i64,
        gain_empty_dbi: f64,
        gain_full_dbi: f64,
    ) -> Result<Self> {
        profile.validate()?;
        if code_empty == code_full {
            return Err(Error::invalid(
                "surrogate calibration",
                "endpoint codes must differ",
            ));
        }
        let cal = Self {
            ba_empty_s: susceptance_of_code(profile, code_empty, frequency_hz)?,
            ba_full_s: susceptance_of_code(profile, code_full, frequency_hz)?,
            ga_empty_s: profile.conductance,
            ga_full_s: profile.conductance,
            gain_empty_dbi,
            gain_full_dbi,
            shape_exponent: 1.0,
        };
        cal.validate()?;
        Ok(cal)
    }
}

/// Analytic provider built from a [`SurrogateCalibration`].
///
/// Covers every geometry and frequency; the calibration is taken to describe
/// whichever tag the caller is studying.
#[derive(Debug, Clone)]
pub struct SurrogateProvider {
    calibration: SurrogateCalibration,
}

impl SurrogateProvider {
    /// Build a provider after validating the calibration.
    pub fn new(calibration: SurrogateCalibration) -> Result<Self> {
        calibration.validate()?;
        Ok(Self { calibration })
    }

    /// The calibration backing this provider.
    pub fn calibration(&self) -> &SurrogateCalibration {
        &self.calibration
    }

    fn shaped(&self, fill: f64) -> f64 {
        if self.calibration.shape_exponent == 1.0 {
            fill
        } else {
            fill.powf(self.calibration.shape_exponent)
        }
    }
}

impl EmProvider for SurrogateProvider {
    fn query(&self, q: &EMQuery) -> Result<EMSample> {
        let u = self.shaped(q.fill_fraction);
        // Two-sided form so u = 0 and u = 1 reproduce the calibration
        // endpoints exactly.
        let lerp = |empty: f64, full: f64| (1.0 - u) * empty + u * full;
        let c = &self.calibration;
        Ok(EMSample {
            conductance_s: lerp(c.ga_empty_s, c.ga_full_s),
            susceptance_s: lerp(c.ba_empty_s, c.ba_full_s),
            gain_dbi: lerp(c.gain_empty_dbi, c.gain_full_dbi),
        })
    }
}
