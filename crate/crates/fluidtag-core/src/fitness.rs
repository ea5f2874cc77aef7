//! Gated, weighted fitness of a candidate antenna-microfluidic design.
//!
//! A design is scored on the empty (`fill = 0`) and full (`fill = 1`)
//! channel states through three normalized terms:
//!
//! - `f1`: dynamic range, the empty-state sensor code relative to the top
//!   of the chip's linear range, so the whole fill excursion stays
//!   observable;
//! - `f2`: communication, the mean linear realized gain of the two boundary
//!   states relative to a normalizer, so the tag stays readable while
//!   filling;
//! - `f3`: sensitivity, the sensor-code swing per milligram of channel
//!   capacity relative to a normalizer.
//!
//! The combined fitness is the weighted average of the three terms, gated to
//! zero whenever any term is zero or the susceptance response is not
//! monotone in fill (a non-monotone response cannot be inverted into a
//! liquid quantity).

use serde::{Deserialize, Serialize};

use crate::em::{dbi_to_linear, power_transfer, realized_gain, EMQuery, EmProvider};
use crate::error::{Error, Result};
use crate::geometry::{liquid_capacity, FixedGeometry, FluidProperties, ParameterVector};
use crate::ic::{code_of_susceptance, ICProfile, SensorReading};

/// Number of evenly spaced fill samples used for the monotonicity check:
/// the two endpoints plus three interior points.
pub const MONOTONICITY_SAMPLES: usize = 5;

/// Relative importance of the three fitness terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    /// Dynamic-range weight.
    pub w1: f64,
    /// Gain-preservation weight.
    pub w2: f64,
    /// Sensitivity weight.
    pub w3: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            w1: 1.0,
            w2: 1.0,
            w3: 1.0,
        }
    }
}

impl Weights {
    /// Bundle three weights.
    pub fn new(w1: f64, w2: f64, w3: f64) -> Self {
        Self { w1, w2, w3 }
    }

    /// Check the invariants: non-negative, finite, positive sum.
    pub fn validate(&self) -> Result<()> {
        let ws = [self.w1, self.w2, self.w3];
        if ws.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("weights", "must be finite and >= 0"));
        }
        if ws.iter().sum::<f64>() <= 0.0 {
            return Err(Error::invalid("weights", "sum must be > 0"));
        }
        Ok(())
    }

    fn sum(&self) -> f64 {
        self.w1 + self.w2 + self.w3
    }
}

/// Minimum acceptable performance; candidates below a gate score zero.
///
/// `None` disables a gate, which is also the default: every explored
/// geometry is then acceptable and only the normalized terms rank them.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Gates {
    /// Minimum acceptable realized gain at either boundary state (dBi).
    #[serde(default)]
    pub min_gain_dbi: Option<f64>,
    /// Minimum acceptable sensitivity (sensor-code units per mg).
    #[serde(default, rename = "min_sensitivity_per_mg")]
    pub min_sensitivity: Option<f64>,
}

impl Gates {
    /// Gain floor as a plain number (`-inf` when disabled).
    pub fn gain_floor_dbi(&self) -> f64 {
        self.min_gain_dbi.unwrap_or(f64::NEG_INFINITY)
    }

    /// Sensitivity floor as a plain number (`0` when disabled).
    pub fn sensitivity_floor(&self) -> f64 {
        self.min_sensitivity.unwrap_or(0.0)
    }

    /// Check that configured floors are finite.
    pub fn validate(&self) -> Result<()> {
        for (name, g) in [
            ("min_gain_dbi", self.min_gain_dbi),
            ("min_sensitivity", self.min_sensitivity),
        ] {
            if let Some(x) = g {
                if !x.is_finite() {
                    return Err(Error::invalid(
                        "gates",
                        format!("{name} must be finite, got {x}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Normalizers that place `f2` and `f3` on a [0, 1] scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    /// Gain normalizer G_0 (linear power ratio, not dB).
    #[serde(rename = "gain_norm_linear")]
    pub gain_norm: f64,
    /// Sensitivity normalizer S_0 (sensor-code units per mg).
    #[serde(rename = "sensitivity_norm_per_mg")]
    pub sensitivity_norm: f64,
}

impl Normalization {
    /// Bundle the two normalizers.
    pub fn new(gain_norm: f64, sensitivity_norm: f64) -> Self {
        Self {
            gain_norm,
            sensitivity_norm,
        }
    }

    /// Check that both normalizers are finite and positive.
    pub fn validate(&self) -> Result<()> {
        if !self.gain_norm.is_finite() || self.gain_norm <= 0.0 {
            return Err(Error::invalid(
                "normalization",
                format!("gain normalizer must be > 0, got {}", self.gain_norm),
            ));
        }
        if !self.sensitivity_norm.is_finite() || self.sensitivity_norm <= 0.0 {
            return Err(Error::invalid(
                "normalization",
                format!(
                    "sensitivity normalizer must be > 0, got {}",
                    self.sensitivity_norm
                ),
            ));
        }
        Ok(())
    }
}

/// Everything the fitness pipeline observed about one candidate, before any
/// normalization is applied.
///
/// Splitting the provider-dependent part from the scoring lets a search pass
/// fix its normalizers from raw grid results and then score the same records
/// without re-querying.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawEvaluation {
    /// Susceptance monotone in fill over the sampled points.
    pub feasible: bool,
    /// Sensor reading with the channel empty.
    pub reading_empty: SensorReading,
    /// Sensor reading with the channel full.
    pub reading_full: SensorReading,
    /// Power transfer coefficient at the empty state.
    pub tau_empty: f64,
    /// Power transfer coefficient at the full state.
    pub tau_full: f64,
    /// Realized gain at the empty state (dBi).
    pub gain_empty_dbi: f64,
    /// Realized gain at the full state (dBi).
    pub gain_full_dbi: f64,
    /// Channel capacity (mg).
    pub capacity_mg: f64,
    /// Sensor-code swing per milligram.
    pub sensitivity: f64,
}

impl RawEvaluation {
    /// Mean of the two boundary realized gains on the linear scale; the
    /// quantity the gain normalizer is the grid maximum of.
    pub fn mean_linear_gain(&self) -> f64 {
        0.5 * (dbi_to_linear(self.gain_empty_dbi) + dbi_to_linear(self.gain_full_dbi))
    }
}

impl From<&FitnessBreakdown> for RawEvaluation {
    /// Recover the normalization-independent record from a scored
    /// breakdown, so recorded points can be re-scored under different
    /// normalizers without re-querying the provider.
    fn from(b: &FitnessBreakdown) -> Self {
        Self {
            feasible: b.feasible,
            reading_empty: SensorReading {
                code: b.code_empty,
                saturated: b.saturated_empty,
            },
            reading_full: SensorReading {
                code: b.code_full,
                saturated: b.saturated_full,
            },
            tau_empty: b.tau_empty,
            tau_full: b.tau_full,
            gain_empty_dbi: b.gain_empty_dbi,
            gain_full_dbi: b.gain_full_dbi,
            capacity_mg: b.capacity_mg,
            sensitivity: b.sensitivity,
        }
    }
}

/// Scored fitness of one candidate, with every intermediate recorded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessBreakdown {
    /// Dynamic-range term in [0, 1].
    pub f1: f64,
    /// Gain-preservation term in [0, 1].
    pub f2: f64,
    /// Sensitivity term in [0, 1].
    pub f3: f64,
    /// Combined gated fitness in [0, 1].
    pub fitness: f64,
    /// Sensor code with the channel empty.
    pub code_empty: i64,
    /// Sensor code with the channel full.
    pub code_full: i64,
    /// Empty-state reading clamped at a rail.
    pub saturated_empty: bool,
    /// Full-state reading clamped at a rail.
    pub saturated_full: bool,
    /// Sensitivity (sensor-code units per mg).
    pub sensitivity: f64,
    /// Channel capacity (mg).
    pub capacity_mg: f64,
    /// Power transfer coefficient at the empty state.
    pub tau_empty: f64,
    /// Power transfer coefficient at the full state.
    pub tau_full: f64,
    /// Realized gain at the empty state (dBi).
    pub gain_empty_dbi: f64,
    /// Realized gain at the full state (dBi).
    pub gain_full_dbi: f64,
    /// Susceptance response monotone in fill.
    pub feasible: bool,
}

impl FitnessBreakdown {
    /// Code swing between the boundary states.
    pub fn code_span(&self) -> i64 {
        self.code_empty - self.code_full
    }

    /// Realized-gain change from empty to full (dB).
    pub fn delta_gain_db(&self) -> f64 {
        self.gain_full_dbi - self.gain_empty_dbi
    }
}

/// True iff the provider's susceptance is strictly monotone in fill.
///
/// Samples `n_samples >= 3` evenly spaced fills in [0, 1]; the sequence must
/// be strictly increasing or strictly decreasing (exclusively). Plateaus and
/// reversals both fail: a flat or folded response cannot be inverted into a
/// unique liquid quantity.
pub fn check_monotonic(
    provider: &dyn EmProvider,
    v: &ParameterVector,
    frequency_hz: f64,
    n_samples: usize,
) -> Result<bool> {
    if n_samples < 3 {
        return Err(Error::invalid(
            "monotonicity samples",
            format!("need at least 3, got {n_samples}"),
        ));
    }
    let mut susceptances = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let fill = i as f64 / (n_samples - 1) as f64;
        let sample = provider.query(&EMQuery::new(*v, fill, frequency_hz)?)?;
        susceptances.push(sample.susceptance_s);
    }
    let increasing = susceptances.windows(2).all(|w| w[1] > w[0]);
    let decreasing = susceptances.windows(2).all(|w| w[1] < w[0]);
    Ok(increasing ^ decreasing)
}

/// Sensor-code swing per milligram of channel capacity.
pub fn sensitivity(code_empty: i64, code_full: i64, capacity_mg: f64) -> Result<f64> {
    if !capacity_mg.is_finite() || capacity_mg <= 0.0 {
        return Err(Error::invalid(
            "capacity",
            format!("must be finite and > 0, got {capacity_mg} mg"),
        ));
    }
    Ok((code_full - code_empty).abs() as f64 / capacity_mg)
}

/// Dynamic-range term: `s(empty) / s_max`, zero when the code exceeds the
/// linear range.
pub fn f1(code_empty: i64, s_max: i64) -> f64 {
    if code_empty <= s_max {
        code_empty as f64 / s_max as f64
    } else {
        0.0
    }
}

/// Gain-preservation term: mean linear realized gain over the normalizer,
/// zero when either boundary state falls below the gain gate. Capped at 1.
pub fn f2(gain_empty_dbi: f64, gain_full_dbi: f64, gain_norm: f64, min_gain_dbi: f64) -> f64 {
    if gain_empty_dbi.min(gain_full_dbi) < min_gain_dbi {
        return 0.0;
    }
    let mean_linear = 0.5 * (dbi_to_linear(gain_empty_dbi) + dbi_to_linear(gain_full_dbi));
    (mean_linear / gain_norm).min(1.0)
}

/// Sensitivity term: `S / S_0`, zero below the sensitivity gate. Capped at 1.
pub fn f3(sensitivity: f64, sensitivity_norm: f64, min_sensitivity: f64) -> f64 {
    if sensitivity < min_sensitivity {
        return 0.0;
    }
    (sensitivity / sensitivity_norm).min(1.0)
}

/// Weighted combination with AND-gate semantics: zero whenever any term is
/// zero, otherwise the weighted average. A zero-weight term still gates.
pub fn combine(f1: f64, f2: f64, f3: f64, weights: &Weights) -> f64 {
    if f1 == 0.0 || f2 == 0.0 || f3 == 0.0 {
        return 0.0;
    }
    (weights.w1 * f1 + weights.w2 * f2 + weights.w3 * f3) / weights.sum()
}

/// Query the provider at the boundary states and collect every
/// normalization-independent quantity for one candidate.
pub fn evaluate_raw(
    provider: &dyn EmProvider,
    v: &ParameterVector,
    fixed: &FixedGeometry,
    fluid: &FluidProperties,
    profile: &ICProfile,
    frequency_hz: f64,
) -> Result<RawEvaluation> {
    let capacity_mg = liquid_capacity(v, fixed, fluid)?;
    if capacity_mg <= 0.0 {
        return Err(Error::invalid(
            "capacity",
            format!("channel holds no liquid for ({}, {}, {})", v.a1, v.a2, v.c2),
        ));
    }

    let feasible = check_monotonic(provider, v, frequency_hz, MONOTONICITY_SAMPLES)?;

    let empty = provider.query(&EMQuery::new(*v, 0.0, frequency_hz)?)?;
    let full = provider.query(&EMQuery::new(*v, 1.0, frequency_hz)?)?;

    let reading_empty = code_of_susceptance(profile, empty.susceptance_s, frequency_hz)?;
    let reading_full = code_of_susceptance(profile, full.susceptance_s, frequency_hz)?;

    let tau_empty = power_transfer(&empty, profile, &reading_empty, frequency_hz)?;
    let tau_full = power_transfer(&full, profile, &reading_full, frequency_hz)?;

    Ok(RawEvaluation {
        feasible,
        reading_empty,
        reading_full,
        tau_empty,
        tau_full,
        gain_empty_dbi: realized_gain(&empty, tau_empty)?,
        gain_full_dbi: realized_gain(&full, tau_full)?,
        capacity_mg,
        sensitivity: sensitivity(reading_empty.code, reading_full.code, capacity_mg)?,
    })
}

/// Score a raw evaluation under the given weights, gates, and normalizers.
pub fn score(
    raw: &RawEvaluation,
    profile: &ICProfile,
    weights: &Weights,
    gates: &Gates,
    norm: &Normalization,
) -> FitnessBreakdown {
    // The dynamic-range gate applies to the unclamped code: a reading pinned
    // at the top rail means the true code overflowed the linear range.
    let t1 = if raw.reading_empty.saturated_high(profile) {
        0.0
    } else {
        f1(raw.reading_empty.code, profile.s_max)
    };
    let t2 = f2(
        raw.gain_empty_dbi,
        raw.gain_full_dbi,
        norm.gain_norm,
        gates.gain_floor_dbi(),
    );
    let t3 = f3(
        raw.sensitivity,
        norm.sensitivity_norm,
        gates.sensitivity_floor(),
    );

    let fitness = if raw.feasible {
        combine(t1, t2, t3, weights)
    } else {
        0.0
    };

    FitnessBreakdown {
        f1: t1,
        f2: t2,
        f3: t3,
        fitness,
        code_empty: raw.reading_empty.code,
        code_full: raw.reading_full.code,
        saturated_empty: raw.reading_empty.saturated,
        saturated_full: raw.reading_full.saturated,
        sensitivity: raw.sensitivity,
        capacity_mg: raw.capacity_mg,
        tau_empty: raw.tau_empty,
        tau_full: raw.tau_full,
        gain_empty_dbi: raw.gain_empty_dbi,
        gain_full_dbi: raw.gain_full_dbi,
        feasible: raw.feasible,
    }
}

/// Full fitness evaluation of one candidate geometry.
#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    provider: &dyn EmProvider,
    v: &ParameterVector,
    fixed: &FixedGeometry,
    fluid: &FluidProperties,
    profile: &ICProfile,
    weights: &Weights,
    gates: &Gates,
    norm: &Normalization,
    frequency_hz: f64,
) -> Result<FitnessBreakdown> {
    weights.validate()?;
    gates.validate()?;
    norm.validate()?;
    profile.validate()?;
    let raw = evaluate_raw(provider, v, fixed, fluid, profile, frequency_hz)?;
    Ok(score(&raw, profile, weights, gates, norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::em::{EMSample, SurrogateCalibration, SurrogateProvider, DEFAULT_FREQUENCY_HZ};

    const FREQ: f64 = DEFAULT_FREQUENCY_HZ;

    fn linear_surrogate() -> SurrogateProvider {
        let profile = ICProfile::default();
        let cal = SurrogateCalibration::from_codes(&profile, FREQ, 501, 0, -0.8, -11.8).unwrap();
        SurrogateProvider::new(cal).unwrap()
    }

    #[test]
    fn monotone_linear_surrogate() {
        let v = ParameterVector::new(0.0, 10.5, 2.0);
        assert!(check_monotonic(&linear_surrogate(), &v, FREQ, 5).unwrap());
    }

    #[test]
    fn dip_breaks_monotonicity() {
        let dip = |q: &EMQuery| {
            let x = q.fill_fraction;
            Ok(EMSample {
                conductance_s: 1e-3,
                // Rises then falls: not invertible.
                susceptance_s: -0.016 + 0.01 * x * (1.0 - x) + 0.001 * x,
                gain_dbi: 0.0,
            })
        };
        let v = ParameterVector::new(0.0, 10.5, 2.0);
        assert!(!check_monotonic(&dip, &v, FREQ, 5).unwrap());
    }

    #[test]
    fn constant_susceptance_is_not_monotone() {
        let flat = |_q: &EMQuery| {
            Ok(EMSample {
                conductance_s: 1e-3,
                susceptance_s: -0.015,
                gain_dbi: 0.0,
            })
        };
        let v = ParameterVector::new(0.0, 10.5, 2.0);
        assert!(!check_monotonic(&flat, &v, FREQ, 5).unwrap());
        assert!(check_monotonic(&flat, &v, FREQ, 2).is_err());
    }

    #[test]
    fn sensitivity_matches_reference_designs() {
        // Serpentine design: full-swing codes over a 26 mg channel.
        let s = sensitivity(501, 0, 26.0).unwrap();
        assert!((s - 19.4).abs() < 0.3, "{s}");
        // Straight-channel design: 94-code swing over 31.5 mg.
        let s = sensitivity(121, 27, 31.5).unwrap();
        assert!((s - 3.0).abs() < 0.3, "{s}");
        assert_eq!(sensitivity(100, 100, 10.0).unwrap(), 0.0);
        assert!(sensitivity(1, 0, 0.0).is_err());
    }

    #[test]
    fn f1_ratios_and_gate() {
        assert!((f1(501, 511) - 0.98).abs() < 0.005);
        assert!((f1(121, 511) - 0.24).abs() < 0.005);
        assert_eq!(f1(600, 511), 0.0);
        assert_eq!(f1(511, 511), 1.0);
    }

    #[test]
    fn f2_reproduces_both_rows_with_one_normalizer() {
        // Normalizer solved from the first reference design's term value,
        // then checked against the second design.
        let g0 = 0.5 * (dbi_to_linear(-0.8) + dbi_to_linear(-11.8)) / 0.50;
        assert!((f2(-0.8, -11.8, g0, f64::NEG_INFINITY) - 0.50).abs() < 1e-12);
        assert!((f2(-1.0, -2.3, g0, f64::NEG_INFINITY) - 0.77).abs() < 0.005);
        // Gain gate trips on the worse endpoint.
        assert_eq!(f2(-0.8, -11.8, g0, -5.0), 0.0);
    }

    #[test]
    fn f3_ratios_and_gate() {
        assert!((f3(19.4, 19.4, 0.0) - 1.00).abs() < 1e-12);
        assert!((f3(3.0, 19.4, 0.0) - 0.15).abs() < 0.005);
        assert_eq!(f3(1.0, 19.4, 2.0), 0.0);
        // Capped when a candidate beats the normalizer.
        assert_eq!(f3(25.0, 19.4, 0.0), 1.0);
    }

    #[test]
    fn combine_weighted_averages_and_gates() {
        let w = Weights::default();
        assert!((combine(0.98, 0.50, 1.00, &w) - 0.8266666666666667).abs() < 1e-12);
        let w = Weights::new(0.0, 5.0, 1.0);
        assert!((combine(0.24, 0.77, 0.15, &w) - (5.0 * 0.77 + 0.15) / 6.0).abs() < 1e-12);
        assert_eq!(combine(0.5, 0.0, 0.5, &w), 0.0);
        // Zero-weight terms still gate.
        assert_eq!(combine(0.0, 0.77, 0.15, &w), 0.0);
    }

    #[test]
    fn evaluate_records_all_intermediates() {
        let provider = linear_surrogate();
        let v = ParameterVector::new(0.0, 10.5, 2.0);
        let norm = Normalization::new(
            0.5 * (dbi_to_linear(-0.8) + dbi_to_linear(-11.8)) / 0.5,
            19.4,
        );
        let b = evaluate(
            &provider,
            &v,
            &FixedGeometry::default(),
            &FluidProperties::default(),
            &ICProfile::default(),
            &Weights::default(),
            &Gates::default(),
            &norm,
            FREQ,
        )
        .unwrap();
        assert!(b.feasible);
        assert_eq!(b.code_empty, 501);
        assert_eq!(b.code_full, 0);
        assert_eq!(b.code_span(), 501);
        assert!((b.gain_empty_dbi - (-0.8)).abs() < 1e-9);
        assert!((b.gain_full_dbi - (-11.8)).abs() < 1e-9);
        assert!((b.delta_gain_db() - (-11.0)).abs() < 1e-9);
        assert!((b.tau_empty - 1.0).abs() < 1e-9);
        assert!((b.fitness - 0.83).abs() < 0.01);
    }

    #[test]
    fn saturated_empty_reading_gates_f1() {
        let profile = ICProfile::default();
        let omega = std::f64::consts::TAU * FREQ;
        // Empty-state susceptance beyond the top of the tuning range.
        let over = move |q: &EMQuery| {
            Ok(EMSample {
                conductance_s: 4.82e-5,
                susceptance_s: -omega * (3.2e-12 - 1.0e-12 * q.fill_fraction),
                gain_dbi: 0.0,
            })
        };
        let b = evaluate(
            &over,
            &ParameterVector::new(0.0, 10.5, 2.0),
            &FixedGeometry::default(),
            &FluidProperties::default(),
            &profile,
            &Weights::default(),
            &Gates::default(),
            &Normalization::new(1.0, 19.4),
            FREQ,
        )
        .unwrap();
        assert!(b.saturated_empty);
        assert_eq!(b.code_empty, profile.s_max);
        assert_eq!(b.f1, 0.0);
        assert_eq!(b.fitness, 0.0);
    }

    #[test]
    fn infeasible_candidate_scores_zero() {
        let dip = |q: &EMQuery| {
            let x = q.fill_fraction;
            Ok(EMSample {
                conductance_s: 4.82e-5,
                susceptance_s: -0.0145 + 0.004 * x * (1.0 - x) + 0.0005 * x,
                gain_dbi: -1.0,
            })
        };
        let b = evaluate(
            &dip,
            &ParameterVector::new(0.0, 10.5, 2.0),
            &FixedGeometry::default(),
            &FluidProperties::default(),
            &ICProfile::default(),
            &Weights::default(),
            &Gates::default(),
            &Normalization::new(1.0, 19.4),
            FREQ,
        )
        .unwrap();
        assert!(!b.feasible);
        assert_eq!(b.fitness, 0.0);
        // Intermediates are still recorded for the audit trail.
        assert!(b.f3 > 0.0);
    }

    #[test]
    fn weights_validation() {
        assert!(Weights::new(0.0, 0.0, 0.0).validate().is_err());
        assert!(Weights::new(-1.0, 2.0, 0.0).validate().is_err());
        assert!(Weights::new(0.0, 5.0, 1.0).validate().is_ok());
    }
}
