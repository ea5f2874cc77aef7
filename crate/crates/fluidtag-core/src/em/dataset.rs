//! Tabulated provider backed by CSV exports of external field simulations.
//!
//! Expected file layout, one row per simulated `(geometry, fill, frequency)`
//! point:
//!
//! ```text
//! a1_mm,a2_mm,c2_mm,fill,freq_hz,ga_s,ba_s,grad_dbi
//! 0,10.5,2,0,925e6,4.82e-5,-1.674e-2,-0.8
//! 0,10.5,2,1,925e6,4.82e-5,-1.104e-2,-11.8
//! ```
//!
//! Lines starting with `#` are comments. Within a geometry/frequency group
//! rows must appear in strictly increasing fill order. Queries match the
//! geometry and frequency exactly (keys are quantized to 1e-6 mm and 1 mHz
//! to absorb decimal round-trip noise) and interpolate linearly between the
//! bracketing fill nodes; admittance interpolates in siemens and gain in dB.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::ParameterVector;

use super::{EMQuery, EMSample, EmProvider};

const EXPECTED_HEADER: [&str; 8] = [
    "a1_mm", "a2_mm", "c2_mm", "fill", "freq_hz", "ga_s", "ba_s", "grad_dbi",
];

/// Geometry coordinates quantized to 1e-6 mm plus frequency quantized to
/// 1e-3 Hz, used as the exact-match lookup key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct GroupKey {
    a1_nm: i64,
    a2_nm: i64,
    c2_nm: i64,
    freq_mhz_thousandths: i64,
}

impl GroupKey {
    fn new(v: &ParameterVector, frequency_hz: f64) -> Self {
        let q = |x: f64| (x * 1e6).round() as i64;
        Self {
            a1_nm: q(v.a1),
            a2_nm: q(v.a2),
            c2_nm: q(v.c2),
            freq_mhz_thousandths: (frequency_hz * 1e3).round() as i64,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct FillNode {
    fill: f64,
    conductance_s: f64,
    susceptance_s: f64,
    gain_dbi: f64,
}

/// Provider answering queries from a tabulated dataset.
#[derive(Debug)]
pub struct DatasetProvider {
    groups: HashMap<GroupKey, Vec<FillNode>>,
    rows: usize,
    source: String,
}

impl DatasetProvider {
    /// Load a dataset from a CSV file.
    pub fn from_path(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: 0,
            details: format!("cannot open dataset: {e}"),
        })?;
        Self::from_reader(BufReader::new(file), &path.display().to_string())
    }

    /// Load a dataset from any buffered reader; `source` names it in errors.
    pub fn from_reader(reader: impl BufRead, source: &str) -> Result<Self> {
        let parse_err = |line: usize, details: String| Error::Parse {
            path: source.to_string(),
            line,
            details,
        };

        let mut groups: HashMap<GroupKey, Vec<FillNode>> = HashMap::new();
        let mut rows = 0usize;
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
                if fields != EXPECTED_HEADER {
                    return Err(parse_err(
                        line_no,
                        format!(
                            "unexpected header `{trimmed}`; expected `{}`",
                            EXPECTED_HEADER.join(",")
                        ),
                    ));
                }
                header_seen = true;
                continue;
            }

            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if fields.len() != EXPECTED_HEADER.len() {
                return Err(parse_err(
                    line_no,
                    format!(
                        "expected {} fields, found {}",
                        EXPECTED_HEADER.len(),
                        fields.len()
                    ),
                ));
            }
            let mut values = [0.0f64; 8];
            for (i, (name, raw)) in EXPECTED_HEADER.iter().zip(&fields).enumerate() {
                values[i] = raw.parse::<f64>().map_err(|_| {
                    parse_err(line_no, format!("field `{name}` is not a number: `{raw}`"))
                })?;
                if !values[i].is_finite() {
                    return Err(parse_err(line_no, format!("field `{name}` must be finite")));
                }
            }
            let [a1, a2, c2, fill, freq, ga, ba, gain] = values;
            if !(0.0..=1.0).contains(&fill) {
                return Err(parse_err(line_no, format!("fill {fill} outside [0, 1]")));
            }
            if freq <= 0.0 {
                return Err(parse_err(
                    line_no,
                    format!("freq_hz must be > 0, got {freq}"),
                ));
            }
            if ga <= 0.0 {
                return Err(parse_err(line_no, format!("ga_s must be > 0, got {ga}")));
            }

            let key = GroupKey::new(&ParameterVector::new(a1, a2, c2), freq);
            let nodes = groups.entry(key).or_default();
            if let Some(last) = nodes.last() {
                if fill == last.fill {
                    return Err(parse_err(
                        line_no,
                        format!("duplicate fill node {fill} for geometry ({a1}, {a2}, {c2})"),
                    ));
                }
                if fill < last.fill {
                    return Err(parse_err(
                        line_no,
                        format!(
                            "fill grid not sorted: {fill} after {} for geometry ({a1}, {a2}, {c2})",
                            last.fill
                        ),
                    ));
                }
            }
            nodes.push(FillNode {
                fill,
                conductance_s: ga,
                susceptance_s: ba,
                gain_dbi: gain,
            });
            rows += 1;
        }

        if !header_seen {
            return Err(parse_err(0, "dataset has no header row".to_string()));
        }
        if rows == 0 {
            return Err(parse_err(0, "dataset has no data rows".to_string()));
        }

        Ok(Self {
            groups,
            rows,
            source: source.to_string(),
        })
    }

    /// Number of data rows loaded.
    pub fn len(&self) -> usize {
        self.rows
    }

    /// True when no rows are loaded (never the case for a parsed dataset).
    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    /// Number of distinct geometry/frequency groups.
    pub fn group_count(&self) -> usize {
        self.groups.len()
    }
}

impl EmProvider for DatasetProvider {
    fn query(&self, q: &EMQuery) -> Result<EMSample> {
        let key = GroupKey::new(&q.geometry, q.frequency_hz);
        let nodes = self.groups.get(&key).ok_or_else(|| {
            Error::Coverage(format!(
                "{}: no rows for geometry ({}, {}, {}) at {} Hz",
                self.source, q.geometry.a1, q.geometry.a2, q.geometry.c2, q.frequency_hz
            ))
        })?;

        let fill = q.fill_fraction;
        let first = nodes.first().expect("groups are never empty");
        let last = nodes.last().expect("groups are never empty");
        if fill < first.fill || fill > last.fill {
            return Err(Error::range(
                "fill fraction",
                format!(
                    "{} outside dataset coverage [{}, {}] for this geometry",
                    fill, first.fill, last.fill
                ),
            ));
        }

        // Exact node hit, including single-node groups.
        if let Some(node) = nodes.iter().find(|n| n.fill == fill) {
            return Ok(EMSample {
                conductance_s: node.conductance_s,
                susceptance_s: node.susceptance_s,
                gain_dbi: node.gain_dbi,
            });
        }

        let hi = nodes
            .iter()
            .position(|n| n.fill > fill)
            .expect("bracketing node exists after the range check");
        let (lo, hi) = (&nodes[hi - 1], &nodes[hi]);
        let t = (fill - lo.fill) / (hi.fill - lo.fill);
        Ok(EMSample {
            conductance_s: lo.conductance_s + (hi.conductance_s - lo.conductance_s) * t,
            susceptance_s: lo.susceptance_s + (hi.susceptance_s - lo.susceptance_s) * t,
            gain_dbi: lo.gain_dbi + (hi.gain_dbi - lo.gain_dbi) * t,
        })
    }
}
