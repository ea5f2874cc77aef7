//! Post-processing: fill sweeps, trend fitting, link budget, and
//! simulation-vs-measurement comparison.

use serde::{Deserialize, Serialize};

use crate::em::{dbi_to_linear, power_transfer, realized_gain, EMQuery, EmProvider};
use crate::error::{Error, Result};
use crate::fitness::FitnessBreakdown;
use crate::fluid::mass_from_fill;
use crate::geometry::{derive_geometry, FixedGeometry, FluidProperties, ParameterVector};
use crate::ic::{code_of_susceptance, differential_code, ICProfile};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT_M_PER_S: f64 = 299_792_458.0;

/// One row of a fill sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Channel fill fraction in [0, 1].
    pub fill_fraction: f64,
    /// Liquid mass at this fill (mg).
    pub mass_mg: f64,
    /// Sensor code.
    pub code: i64,
    /// Differential code relative to the empty state.
    pub delta_code: i64,
    /// Power transfer coefficient.
    pub tau: f64,
    /// Realized gain (dBi).
    pub gain_dbi: f64,
}

/// Sensor response sampled over an increasing fill grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    /// Rows in strictly increasing fill order.
    pub points: Vec<SweepPoint>,
}

/// Least-squares cubic trend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicFit {
    /// Coefficients by increasing power: `c0 + c1 x + c2 x^2 + c3 x^3`.
    pub coefficients: [f64; 4],
    /// Coefficient of determination.
    pub r_squared: f64,
}

impl CubicFit {
    /// Evaluate the fitted polynomial.
    pub fn value_at(&self, x: f64) -> f64 {
        let [c0, c1, c2, c3] = self.coefficients;
        c0 + x * (c1 + x * (c2 + x * c3))
    }
}

/// One named metric with an optional measurement spread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    /// Metric name; comparison joins on this.
    pub name: String,
    /// Metric value.
    pub value: f64,
    /// Reported spread (for measured data), if any.
    pub spread: Option<f64>,
}

impl MetricValue {
    /// Metric without a spread.
    pub fn new(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            spread: None,
        }
    }
}

/// One row of a simulated-vs-measured comparison. Absent sides stay `None`;
/// they are never silently treated as zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    /// Metric name.
    pub metric: String,
    /// Measured value, if supplied.
    pub measured: Option<f64>,
    /// Measurement spread, if supplied.
    pub spread: Option<f64>,
    /// Simulated value, if supplied.
    pub simulated: Option<f64>,
    /// `|measured - simulated|`, recomputed here, never trusted from input.
    pub difference: Option<f64>,
}

/// Sweep the sensor response over `n_points` evenly spaced fills in [0, 1].
///
/// Differential codes are referenced to the first (empty-state) reading.
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    provider: &dyn EmProvider,
    v: &ParameterVector,
    fixed: &FixedGeometry,
    fluid: &FluidProperties,
    profile: &ICProfile,
    frequency_hz: f64,
    n_points: usize,
) -> Result<SweepCurve> {
    if n_points < 2 {
        return Err(Error::invalid(
            "sweep points",
            format!("need at least 2, got {n_points}"),
        ));
    }
    profile.validate()?;
    let geom = derive_geometry(v, fixed)?;

    let mut points = Vec::with_capacity(n_points);
    let mut reference_code = 0i64;
    for i in 0..n_points {
        let fill = i as f64 / (n_points - 1) as f64;
        let sample = provider.query(&EMQuery::new(*v, fill, frequency_hz)?)?;
        let reading = code_of_susceptance(profile, sample.susceptance_s, frequency_hz)?;
        if i == 0 {
            reference_code = reading.code;
        }
        let tau = power_transfer(&sample, profile, &reading, frequency_hz)?;
        points.push(SweepPoint {
            fill_fraction: fill,
            mass_mg: mass_from_fill(fill, &geom, fluid)?,
            code: reading.code,
            delta_code: differential_code(reading.code, reference_code),
            tau,
            gain_dbi: realized_gain(&sample, tau)?,
        });
    }
    Ok(SweepCurve { points })
}

/// Least-squares cubic through `(x, y)` samples.
///
/// Solved by Householder QR on the Vandermonde matrix. Requires at least
/// five points (the fit is meant for trend extraction from sweeps, not
/// exact interpolation) and enough x spread to keep the system full rank.
pub fn fit_cubic(points: &[(f64, f64)]) -> Result<CubicFit> {
    const COLS: usize = 4;
    let n = points.len();
    if n < 5 {
        return Err(Error::invalid(
            "fit points",
            format!("cubic trend fit needs at least 5 points, got {n}"),
        ));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::invalid(
            "fit points",
            "all coordinates must be finite",
        ));
    }

    // Column-major Vandermonde [1, x, x^2, x^3] and the observation vector.
    let mut a: Vec<[f64; COLS]> = points
        .iter()
        .map(|&(x, _)| [1.0, x, x * x, x * x * x])
        .collect();
    let mut y: Vec<f64> = points.iter().map(|&(_, y)| y).collect();

    // Householder QR, applying the reflectors to y as they are formed.
    let mut r_diag = [0.0f64; COLS];
    for k in 0..COLS {
        let norm = a[k..].iter().map(|row| row[k] * row[k]).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::Degenerate(format!(
                "design matrix is rank deficient at column {k} (x values too clustered)"
            )));
        }
        let alpha = if a[k][k] >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[k..].iter().map(|row| row[k]).collect();
        v[0] -= alpha;
        let v_norm2: f64 = v.iter().map(|x| x * x).sum();
        if v_norm2 > 0.0 {
            for col in k..COLS {
                let dot: f64 = v.iter().zip(&a[k..]).map(|(vi, row)| vi * row[col]).sum();
                let scale = 2.0 * dot / v_norm2;
                for (vi, row) in v.iter().zip(a[k..].iter_mut()) {
                    row[col] -= scale * vi;
                }
            }
            let dot: f64 = v.iter().zip(&y[k..]).map(|(vi, yi)| vi * yi).sum();
            let scale = 2.0 * dot / v_norm2;
            for (vi, yi) in v.iter().zip(y[k..].iter_mut()) {
                *yi -= scale * vi;
            }
        }
        r_diag[k] = alpha;
        a[k][k] = alpha;
    }

    // Back substitution on the 4x4 upper triangle.
    let mut coefficients = [0.0f64; COLS];
    for k in (0..COLS).rev() {
        let mut sum = y[k];
        for j in (k + 1)..COLS {
            sum -= a[k][j] * coefficients[j];
        }
        coefficients[k] = sum / r_diag[k];
    }

    let fit = CubicFit {
        coefficients,
        r_squared: 0.0,
    };
    let mean_y = points.iter().map(|&(_, y)| y).sum::<f64>() / n as f64;
    let ss_tot: f64 = points.iter().map(|&(_, y)| (y - mean_y).powi(2)).sum();
    if ss_tot <= 0.0 {
        return Err(Error::Degenerate(
            "all y values are equal; the coefficient of determination is undefined".to_string(),
        ));
    }
    let ss_res: f64 = points
        .iter()
        .map(|&(x, y)| (y - fit.value_at(x)).powi(2))
        .sum();
    Ok(CubicFit {
        coefficients,
        r_squared: 1.0 - ss_res / ss_tot,
    })
}

/// Forward-link reading range of the tag (m).
///
/// Free-space budget: the tag activates where the power collected by its
/// antenna crosses the chip sensitivity, giving
/// `r = (lambda / 4 pi) * sqrt(EIRP * G_linear * pol / P_sens)`.
///
/// The chip read sensitivity has no default on purpose: it is tag-silicon
/// specific, and a silent assumption here would fabricate range claims.
pub fn reading_range(
    gain_dbi: f64,
    eirp_w: f64,
    frequency_hz: f64,
    chip_sensitivity_dbm: f64,
    polarization_loss: f64,
) -> Result<f64> {
    if !eirp_w.is_finite() || eirp_w <= 0.0 {
        return Err(Error::invalid(
            "eirp",
            format!("must be finite and > 0, got {eirp_w} W"),
        ));
    }
    if !frequency_hz.is_finite() || frequency_hz <= 0.0 {
        return Err(Error::invalid(
            "frequency",
            format!("must be finite and > 0, got {frequency_hz}"),
        ));
    }
    if !chip_sensitivity_dbm.is_finite() {
        return Err(Error::invalid(
            "chip sensitivity",
            format!("must be finite, got {chip_sensitivity_dbm} dBm"),
        ));
    }
    if !polarization_loss.is_finite() || polarization_loss <= 0.0 || polarization_loss > 1.0 {
        return Err(Error::invalid(
            "polarization loss",
            format!("must lie in (0, 1], got {polarization_loss}"),
        ));
    }
    if gain_dbi.is_nan() {
        return Err(Error::invalid("gain", "must not be NaN"));
    }

    let wavelength = SPEED_OF_LIGHT_M_PER_S / frequency_hz;
    let sensitivity_w = 10.0_f64.powf(chip_sensitivity_dbm / 10.0) * 1e-3;
    let gain_linear = dbi_to_linear(gain_dbi);
    Ok(wavelength / (4.0 * std::f64::consts::PI)
        * (eirp_w * gain_linear * polarization_loss / sensitivity_w).sqrt())
}

/// Join simulated and measured metrics by name and recompute differences.
///
/// Rows follow the measured input order, with simulation-only metrics
/// appended in their own order. A metric present on one side only yields a
/// row with the other side absent.
pub fn compare(simulated: &[MetricValue], measured: &[MetricValue]) -> Vec<ComparisonRow> {
    let find = |set: &[MetricValue], name: &str| set.iter().find(|m| m.name == name).cloned();

    let mut rows: Vec<ComparisonRow> = Vec::new();
    for m in measured {
        let sim = find(simulated, &m.name);
        rows.push(ComparisonRow {
            metric: m.name.clone(),
            measured: Some(m.value),
            spread: m.spread,
            simulated: sim.as_ref().map(|s| s.value),
            difference: sim.as_ref().map(|s| (m.value - s.value).abs()),
        });
    }
    for s in simulated {
        if measured.iter().any(|m| m.name == s.name) {
            continue;
        }
        rows.push(ComparisonRow {
            metric: s.name.clone(),
            measured: None,
            spread: None,
            simulated: Some(s.value),
            difference: None,
        });
    }
    rows
}

/// Canonical metric names shared by breakdown exports and comparison input.
pub const METRIC_NAMES: [&str; 6] = [
    "code_empty",
    "code_span",
    "sensitivity_per_mg",
    "gain_empty_dbi",
    "gain_full_dbi",
    "delta_gain_db",
];

/// Flatten a breakdown into the comparison metric set.
pub fn breakdown_metrics(b: &FitnessBreakdown) -> Vec<MetricValue> {
    vec![
        MetricValue::new("code_empty", b.code_empty as f64),
        MetricValue::new("code_span", b.code_span() as f64),
        MetricValue::new("sensitivity_per_mg", b.sensitivity),
        MetricValue::new("gain_empty_dbi", b.gain_empty_dbi),
        MetricValue::new("gain_full_dbi", b.gain_full_dbi),
        MetricValue::new("delta_gain_db", b.delta_gain_db()),
    ]
}
