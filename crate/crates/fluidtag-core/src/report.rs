//! Deterministic report emission and reading of report-shaped inputs.
//!
//! All numeric CSV output is formatted to six significant digits through
//! [`fmt_sig`], and nothing here emits timestamps or machine-specific
//! metadata, so identical inputs always produce byte-identical files.

use std::io::{BufRead, Write};

use serde::Serialize;

use crate::analysis::{ComparisonRow, MetricValue, SweepCurve};
use crate::em::Materials;
use crate::error::{Error, Result};
use crate::fitness::{FitnessBreakdown, Gates, Normalization, Weights};
use crate::geometry::ParameterVector;
use crate::optimizer::{
    FinalIncumbent, GridSpec, Incumbent, NormPolicy, PointOutcome, RoundResult, SearchResult,
};

/// Format a number with six significant digits, shortest decimal form.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = 5 - exponent;
    let rounded = if decimals >= 0 {
        let p = 10f64.powi(decimals);
        (x * p).round() / p
    } else {
        let p = 10f64.powi(-decimals);
        (x / p).round() * p
    };
    format!("{rounded}")
}

fn quote_csv(field: &str) -> String {
    format!("\"{}\"", field.replace('"', "\"\""))
}

/// Header shared by grid and single-breakdown CSV exports.
pub const BREAKDOWN_CSV_HEADER: &str = "a1_mm,a2_mm,c2_mm,feasible,f1,f2,f3,fitness,\
code_empty,code_full,code_span,saturated_empty,saturated_full,sensitivity_per_mg,\
capacity_mg,tau_empty,tau_full,gain_empty_dbi,gain_full_dbi,delta_gain_db,error";

fn breakdown_fields(point: &ParameterVector, b: &FitnessBreakdown) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        fmt_sig(point.a1),
        fmt_sig(point.a2),
        fmt_sig(point.c2),
        b.feasible,
        fmt_sig(b.f1),
        fmt_sig(b.f2),
        fmt_sig(b.f3),
        fmt_sig(b.fitness),
        b.code_empty,
        b.code_full,
        b.code_span(),
        b.saturated_empty,
        b.saturated_full,
        fmt_sig(b.sensitivity),
        fmt_sig(b.capacity_mg),
        fmt_sig(b.tau_empty),
        fmt_sig(b.tau_full),
        fmt_sig(b.gain_empty_dbi),
        fmt_sig(b.gain_full_dbi),
        fmt_sig(b.delta_gain_db()),
    )
}

/// Write one grid round, one row per evaluated point in grid order.
pub fn write_grid_csv(mut w: impl Write, outcomes: &[PointOutcome]) -> std::io::Result<()> {
    writeln!(w, "{BREAKDOWN_CSV_HEADER}")?;
    for outcome in outcomes {
        match (&outcome.breakdown, &outcome.error) {
            (Some(b), _) => writeln!(w, "{},", breakdown_fields(&outcome.point, b))?,
            (None, err) => {
                let p = &outcome.point;
                writeln!(
                    w,
                    "{},{},{},false,0,0,0,0,,,,,,,,,,,,,{}",
                    fmt_sig(p.a1),
                    fmt_sig(p.a2),
                    fmt_sig(p.c2),
                    quote_csv(err.as_deref().unwrap_or("evaluation failed")),
                )?;
            }
        }
    }
    Ok(())
}

/// Write a single evaluated candidate as a one-row CSV.
pub fn write_breakdown_csv(
    mut w: impl Write,
    point: &ParameterVector,
    breakdown: &FitnessBreakdown,
) -> std::io::Result<()> {
    writeln!(w, "{BREAKDOWN_CSV_HEADER}")?;
    writeln!(w, "{},", breakdown_fields(point, breakdown))
}

/// Write a fill sweep: `fill,mass_mg,code,delta_code,tau,gain_dbi`.
pub fn write_sweep_csv(mut w: impl Write, curve: &SweepCurve) -> std::io::Result<()> {
    writeln!(w, "fill,mass_mg,code,delta_code,tau,gain_dbi")?;
    for p in &curve.points {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_sig(p.fill_fraction),
            fmt_sig(p.mass_mg),
            p.code,
            p.delta_code,
            fmt_sig(p.tau),
            fmt_sig(p.gain_dbi),
        )?;
    }
    Ok(())
}

/// Write named metrics: `metric,value,spread` (spread may be empty).
pub fn write_metrics_csv(mut w: impl Write, metrics: &[MetricValue]) -> std::io::Result<()> {
    writeln!(w, "metric,value,spread")?;
    for m in metrics {
        writeln!(
            w,
            "{},{},{}",
            m.name,
            fmt_sig(m.value),
            m.spread.map(fmt_sig).unwrap_or_default(),
        )?;
    }
    Ok(())
}

/// Write a comparison table: `metric,measured,spread,simulated,difference`.
/// Absent sides stay empty.
pub fn write_comparison_csv(mut w: impl Write, rows: &[ComparisonRow]) -> std::io::Result<()> {
    writeln!(w, "metric,measured,spread,simulated,difference")?;
    let opt = |x: Option<f64>| x.map(fmt_sig).unwrap_or_default();
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.metric,
            opt(r.measured),
            opt(r.spread),
            opt(r.simulated),
            opt(r.difference),
        )?;
    }
    Ok(())
}

/// Read a `metric,value[,spread]` CSV (the format [`write_metrics_csv`]
/// emits). Lines starting with `#` are comments.
pub fn read_metrics_csv(reader: impl BufRead, source: &str) -> Result<Vec<MetricValue>> {
    let parse_err = |line: usize, details: String| Error::Parse {
        path: source.to_string(),
        line,
        details,
    };
    let mut metrics = Vec::new();
    let mut header_seen = false;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| parse_err(line_no, format!("read failed: {e}")))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !header_seen {
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if fields.first() != Some(&"metric") || fields.get(1) != Some(&"value") {
                return Err(parse_err(
                    line_no,
                    format!("expected header `metric,value[,spread]`, got `{trimmed}`"),
                ));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(parse_err(
                line_no,
                format!("expected 2 or 3 fields, found {}", fields.len()),
            ));
        }
        let value: f64 = fields[1]
            .parse()
            .map_err(|_| parse_err(line_no, format!("value is not a number: `{}`", fields[1])))?;
        let spread = match fields.get(2).copied().filter(|s| !s.is_empty()) {
            Some(raw) => Some(
                raw.parse::<f64>()
                    .map_err(|_| parse_err(line_no, format!("spread is not a number: `{raw}`")))?,
            ),
            None => None,
        };
        metrics.push(MetricValue {
            name: fields[0].to_string(),
            value,
            spread,
        });
    }
    if !header_seen {
        return Err(parse_err(0, "metrics file has no header row".to_string()));
    }
    Ok(metrics)
}

/// Read two named numeric columns from a headered CSV, for trend fitting.
pub fn read_xy_csv(
    reader: impl BufRead,
    source: &str,
    x_col: &str,
    y_col: &str,
) -> Result<Vec<(f64, f64)>> {
    let parse_err = |line: usize, details: String| Error::Parse {
        path: source.to_string(),
        line,
        details,
    };
    let mut points = Vec::new();
    let mut columns: Option<(usize, usize)> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| parse_err(line_no, format!("read failed: {e}")))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        match columns {
            None => {
                let x = fields.iter().position(|f| *f == x_col);
                let y = fields.iter().position(|f| *f == y_col);
                match (x, y) {
                    (Some(x), Some(y)) => columns = Some((x, y)),
                    _ => {
                        return Err(parse_err(
                            line_no,
                            format!(
                            "header must contain columns `{x_col}` and `{y_col}`, got `{trimmed}`"
                        ),
                        ))
                    }
                }
            }
            Some((xi, yi)) => {
                let get = |i: usize, name: &str| -> Result<f64> {
                    fields
                        .get(i)
                        .ok_or_else(|| parse_err(line_no, format!("missing column `{name}`")))?
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("column `{name}` is not a number")))
                };
                points.push((get(xi, x_col)?, get(yi, y_col)?));
            }
        }
    }
    if columns.is_none() {
        return Err(parse_err(0, "input has no header row".to_string()));
    }
    Ok(points)
}

/// Static provenance block of `summary.json`; carries no timestamps so
/// reports stay byte-stable.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    /// Producing tool.
    pub tool: &'static str,
    /// Crate version.
    pub version: &'static str,
}

impl Default for Meta {
    fn default() -> Self {
        Self {
            tool: "fluidtag",
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

/// Condensed per-round record for `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RoundSummary {
    /// 1-based round number.
    pub round: usize,
    /// Points evaluated.
    pub points: usize,
    /// Points that failed with a provider error.
    pub failures: usize,
    /// Normalizers used for scoring.
    pub normalization: Normalization,
    /// Round winner, if any.
    pub incumbent: Option<Incumbent>,
}

/// Search summary serialized as `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct SearchSummary {
    /// Provenance (tests comparing data may ignore this block).
    pub meta: Meta,
    /// Working frequency (Hz).
    pub frequency_hz: f64,
    /// Material metadata describing what the provider's data simulated.
    pub materials: Materials,
    /// Weights the search ranked with.
    pub weights: Weights,
    /// Gates the search filtered with.
    pub gates: Gates,
    /// Grid layout searched.
    pub grid: GridSpec,
    /// Normalization policy applied per round.
    pub norm_policy: NormPolicy,
    /// Per-round condensed records.
    pub rounds: Vec<RoundSummary>,
    /// Final incumbent under the last round's normalization.
    pub incumbent: Option<FinalIncumbent>,
}

impl SearchSummary {
    /// Condense a search result for JSON export.
    pub fn new(
        result: &SearchResult,
        frequency_hz: f64,
        materials: Materials,
        weights: Weights,
        gates: Gates,
        grid: GridSpec,
        norm_policy: NormPolicy,
    ) -> Self {
        Self {
            meta: Meta::default(),
            frequency_hz,
            materials,
            weights,
            gates,
            grid,
            norm_policy,
            rounds: result.rounds.iter().map(round_summary).collect(),
            incumbent: result.incumbent,
        }
    }
}

fn round_summary(round: &RoundResult) -> RoundSummary {
    RoundSummary {
        round: round.round,
        points: round.outcomes.len(),
        failures: round.outcomes.iter().filter(|o| o.error.is_some()).count(),
        normalization: round.normalization,
        incumbent: round.incumbent,
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize infallibly");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(19.269230769230766), "19.2692");
        assert_eq!(fmt_sig(0.9804305283757339), "0.980431");
        assert_eq!(fmt_sig(-11.8), "-11.8");
        assert_eq!(fmt_sig(4.82e-5), "0.0000482");
        assert_eq!(fmt_sig(925.0e6), "925000000");
        assert_eq!(fmt_sig(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333");
    }

    #[test]
    fn metrics_round_trip() {
        let metrics = vec![
            MetricValue {
                name: "code_empty".into(),
                value: 489.0,
                spread: Some(1.0),
            },
            MetricValue {
                name: "delta_gain_db".into(),
                value: -9.9,
                spread: None,
            },
        ];
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &metrics).unwrap();
        let parsed = read_metrics_csv(Cursor::new(buf), "mem").unwrap();
        assert_eq!(parsed, metrics);
    }

    #[test]
    fn metrics_reader_rejects_garbage() {
        let err = read_metrics_csv(Cursor::new("metric,value\nfoo,abc\n"), "mem").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = read_metrics_csv(Cursor::new("a,b\nfoo,1\n"), "mem").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn xy_reader_selects_named_columns() {
        let csv =
            "fill,mass_mg,code,delta_code,tau,gain_dbi\n0,0,501,0,1,-0.8\n1,26,0,-501,1,-11.8\n";
        let pts = read_xy_csv(Cursor::new(csv), "mem", "fill", "delta_code").unwrap();
        assert_eq!(pts, vec![(0.0, 0.0), (1.0, -501.0)]);
        assert!(read_xy_csv(Cursor::new(csv), "mem", "fill", "nope").is_err());
    }

    #[test]
    fn csv_error_field_is_quoted() {
        let outcomes = vec![PointOutcome {
            point: ParameterVector::new(1.0, 2.0, 3.0),
            breakdown: None,
            error: Some("no rows for geometry (1, 2, 3)".into()),
        }];
        let mut buf = Vec::new();
        write_grid_csv(&mut buf, &outcomes).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\"no rows for geometry (1, 2, 3)\""));
        // Header plus one row.
        assert_eq!(text.lines().count(), 2);
    }
}
