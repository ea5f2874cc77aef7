//! Self-tuning IC model.
//!
//! A self-tuning RFID chip steps an internal capacitor bank until the total
//! susceptance seen at its port is cancelled, then reports the selected step
//! as a dimensionless digital value called the sensor code. This module
//! models the capacitance grid, the quantization of antenna susceptance into
//! codes, the residual mismatch left by quantization, and the differential
//! code used to remove chip-dependent baselines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Picofarads to farads.
const PF: f64 = 1e-12;

/// Capacitance grid and code range of a self-tuning chip.
///
/// Defaults model the Axzon Magnus S3: 0.0482 mS conductance, tuning
/// capacitance from 1.9 pF to 2.9 pF across 512 codes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ICProfile {
    /// Chip conductance G_IC (S).
    #[serde(rename = "conductance_s")]
    pub conductance: f64,
    /// Capacitance at the lowest code (pF).
    pub c_min_pf: f64,
    /// Capacitance at the highest code (pF).
    pub c_max_pf: f64,
    /// Lowest code of the linear range.
    #[serde(default)]
    pub s_min: i64,
    /// Highest code of the linear range.
    pub s_max: i64,
}

impl Default for ICProfile {
    fn default() -> Self {
        Self {
            conductance: 4.82e-5,
            c_min_pf: 1.9,
            c_max_pf: 2.9,
            s_min: 0,
            s_max: 511,
        }
    }
}

impl ICProfile {
    /// Check the profile invariants.
    pub fn validate(&self) -> Result<()> {
        if !self.conductance.is_finite() || self.conductance <= 0.0 {
            return Err(Error::invalid(
                "ic profile",
                format!(
                    "conductance must be finite and > 0, got {}",
                    self.conductance
                ),
            ));
        }
        if !(self.c_min_pf.is_finite() && self.c_max_pf.is_finite())
            || self.c_min_pf <= 0.0
            || self.c_max_pf <= self.c_min_pf
        {
            return Err(Error::invalid(
                "ic profile",
                format!(
                    "capacitance grid must satisfy 0 < c_min < c_max, got [{}, {}] pF",
                    self.c_min_pf, self.c_max_pf
                ),
            ));
        }
        if self.s_min < 0 || self.s_max <= self.s_min {
            return Err(Error::invalid(
                "ic profile",
                format!(
                    "code range must satisfy 0 <= s_min < s_max, got [{}, {}]",
                    self.s_min, self.s_max
                ),
            ));
        }
        Ok(())
    }

    /// Incremental capacitance per code step C_s (pF).
    pub fn step_pf(&self) -> f64 {
        (self.c_max_pf - self.c_min_pf) / (self.s_max - self.s_min) as f64
    }

    /// Number of codes in the linear range.
    pub fn code_count(&self) -> i64 {
        self.s_max - self.s_min + 1
    }
}

/// One quantized sensor-code observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorReading {
    /// Reported code, clamped to the chip's linear range.
    pub code: i64,
    /// True when the unclamped code fell outside `[s_min, s_max]`.
    pub saturated: bool,
}

impl SensorReading {
    /// True when the reading sits clamped at the top of the code range.
    pub fn saturated_high(&self, profile: &ICProfile) -> bool {
        self.saturated && self.code == profile.s_max
    }

    /// True when the reading sits clamped at the bottom of the code range.
    pub fn saturated_low(&self, profile: &ICProfile) -> bool {
        self.saturated && self.code == profile.s_min
    }
}

/// Tuning capacitance selected at code `s` (pF): `c_min + (s - s_min) * C_s`.
pub fn capacitance_of_code(profile: &ICProfile, s: i64) -> Result<f64> {
    if s < profile.s_min || s > profile.s_max {
        return Err(Error::range(
            "sensor code",
            format!("code {s} outside [{}, {}]", profile.s_min, profile.s_max),
        ));
    }
    Ok(profile.c_min_pf + (s - profile.s_min) as f64 * profile.step_pf())
}

/// Quantize an antenna susceptance into a sensor code.
///
/// The chip picks the code whose capacitance best cancels `b_a` at the
/// working frequency: `s = s_min + nint(-(c_min + B_A/omega) / C_s)`.
/// Half-way cases round away from zero (the physical chip's tie-breaking is
/// not documented). Codes outside the linear range clamp to the nearest
/// rail and set the `saturated` flag.
pub fn code_of_susceptance(
    profile: &ICProfile,
    b_a: f64,
    frequency_hz: f64,
) -> Result<SensorReading> {
    if !b_a.is_finite() {
        return Err(Error::invalid(
            "susceptance",
            format!("must be finite, got {b_a}"),
        ));
    }
    if !frequency_hz.is_finite() || frequency_hz <= 0.0 {
        return Err(Error::invalid(
            "frequency",
            format!("must be finite and > 0, got {frequency_hz}"),
        ));
    }
    let omega = std::f64::consts::TAU * frequency_hz;
    // Work in picofarads so the division is well scaled.
    let offset = -(profile.c_min_pf + b_a / omega / PF) / profile.step_pf();
    let raw = profile.s_min as f64 + offset.round();

    let (code, saturated) = if raw < profile.s_min as f64 {
        (profile.s_min, true)
    } else if raw > profile.s_max as f64 {
        (profile.s_max, true)
    } else {
        (raw as i64, false)
    };
    Ok(SensorReading { code, saturated })
}

/// Susceptance magnitude left unmatched after self-tuning (S):
/// `|omega * C_IC(s) + B_A|`.
///
/// For unsaturated readings this is bounded by half a capacitance step,
/// `omega * C_s / 2`; saturated readings can leave arbitrarily large
/// residuals.
pub fn tuning_residual(
    profile: &ICProfile,
    reading: &SensorReading,
    b_a: f64,
    frequency_hz: f64,
) -> Result<f64> {
    let omega = std::f64::consts::TAU * frequency_hz;
    let c = capacitance_of_code(profile, reading.code)?;
    Ok((omega * c * PF + b_a).abs())
}

/// Differential sensor code relative to a reference reading.
pub fn differential_code(s: i64, s0: i64) -> i64 {
    s - s0
}

/// Susceptance that the chip cancels exactly at code `s` (S).
///
/// This is the inverse of [`code_of_susceptance`] on the code grid:
/// `B_A = -omega * C_IC(s)`. Useful for building providers calibrated from
/// observed codes.
pub fn susceptance_of_code(profile: &ICProfile, s: i64, frequency_hz: f64) -> Result<f64> {
    let omega = std::f64::consts::TAU * frequency_hz;
    Ok(-omega * capacitance_of_code(profile, s)? * PF)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FREQ: f64 = 925.0e6;

    fn omega() -> f64 {
        std::f64::consts::TAU * FREQ
    }

    #[test]
    fn capacitance_endpoints() {
        let p = ICProfile::default();
        assert_eq!(capacitance_of_code(&p, 0).unwrap(), 1.9);
        assert_eq!(capacitance_of_code(&p, 511).unwrap(), 2.9);
        let mid = capacitance_of_code(&p, 255).unwrap();
        assert!((mid - (1.9 + 255.0 / 511.0)).abs() < 1e-12);
    }

    #[test]
    fn capacitance_rejects_out_of_range() {
        let p = ICProfile::default();
        assert!(capacitance_of_code(&p, -1).is_err());
        assert!(capacitance_of_code(&p, 512).is_err());
    }

    #[test]
    fn code_at_baseline_susceptance() {
        let p = ICProfile::default();
        let b = -omega() * p.c_min_pf * PF;
        let r = code_of_susceptance(&p, b, FREQ).unwrap();
        assert_eq!(r.code, 0);
        assert!(!r.saturated);
    }

    #[test]
    fn code_at_exact_grid_point() {
        let p = ICProfile::default();
        let b = -omega() * (p.c_min_pf + 100.0 * p.step_pf()) * PF;
        let r = code_of_susceptance(&p, b, FREQ).unwrap();
        assert_eq!(r.code, 100);
        let residual = tuning_residual(&p, &r, b, FREQ).unwrap();
        assert!(residual < 1e-15, "residual {residual}");
    }

    #[test]
    fn half_step_rounds_away_from_zero() {
        // 2.4 pF sits exactly 255.5 steps above the 1.9 pF baseline.
        let p = ICProfile::default();
        let b = -omega() * 2.4 * PF;
        let r = code_of_susceptance(&p, b, FREQ).unwrap();
        assert_eq!(r.code, 256);
        assert!(!r.saturated);
    }

    #[test]
    fn residual_of_fractional_code() {
        let p = ICProfile::default();
        let b = -omega() * (p.c_min_pf + 100.4 * p.step_pf()) * PF;
        let r = code_of_susceptance(&p, b, FREQ).unwrap();
        assert_eq!(r.code, 100);
        let residual = tuning_residual(&p, &r, b, FREQ).unwrap();
        let expected = 0.4 * omega() * p.step_pf() * PF;
        assert!((residual - expected).abs() < 1e-12 * expected.max(1.0));
    }

    #[test]
    fn saturation_at_both_rails() {
        let p = ICProfile::default();

        let below = -omega() * (p.c_max_pf + 0.5) * PF;
        let r = code_of_susceptance(&p, below, FREQ).unwrap();
        assert_eq!(r.code, 511);
        assert!(r.saturated && r.saturated_high(&p));
        // Clamped at the top rail the residual exceeds the quantization bound.
        let residual = tuning_residual(&p, &r, below, FREQ).unwrap();
        assert!((residual - (below.abs() - omega() * p.c_max_pf * PF)).abs() < 1e-12);
        assert!(residual > omega() * p.step_pf() * PF / 2.0);

        let above = -omega() * (p.c_min_pf - 0.5) * PF;
        let r = code_of_susceptance(&p, above, FREQ).unwrap();
        assert_eq!(r.code, 0);
        assert!(r.saturated && r.saturated_low(&p));
    }

    #[test]
    fn differential_removes_baseline() {
        assert_eq!(differential_code(501, 501), 0);
        assert_eq!(differential_code(0, 501), -501);
        assert_eq!(differential_code(27, 121), -94);
    }

    #[test]
    fn code_rejects_non_finite_susceptance() {
        let p = ICProfile::default();
        assert!(code_of_susceptance(&p, f64::NAN, FREQ).is_err());
        assert!(code_of_susceptance(&p, f64::INFINITY, FREQ).is_err());
    }

    #[test]
    fn susceptance_of_code_inverts_quantizer() {
        let p = ICProfile::default();
        for s in [0, 1, 27, 121, 255, 501, 511] {
            let b = susceptance_of_code(&p, s, FREQ).unwrap();
            let r = code_of_susceptance(&p, b, FREQ).unwrap();
            assert_eq!(r.code, s);
            assert!(!r.saturated);
        }
    }

    #[test]
    fn validation_catches_bad_profiles() {
        let p = ICProfile {
            c_max_pf: 1.9,
            ..ICProfile::default()
        };
        assert!(p.validate().is_err());
        let p = ICProfile {
            s_max: 0,
            ..ICProfile::default()
        };
        assert!(p.validate().is_err());
        assert!(ICProfile::default().validate().is_ok());
    }
}
