//! Integration tests for the `fluidtag` binary: exit codes, file outputs,
//! and a dataset-served search against the two-optima reference landscape.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fluidtag_core::em::{EMQuery, EMSample, DEFAULT_FREQUENCY_HZ};
use fluidtag_core::error::Result as CoreResult;
use fluidtag_core::fitness::{Gates, Weights};
use fluidtag_core::geometry::{FixedGeometry, FluidProperties, ParameterVector};
use fluidtag_core::ic::ICProfile;
use fluidtag_core::optimizer::{optimize, EvalContext, GridSpec, NormPolicy};

const FREQ: f64 = DEFAULT_FREQUENCY_HZ;
const BIN: &str = env!("CARGO_BIN_EXE_fluidtag");

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path
}

const SERPENTINE_CONFIG: &str = r#"{
    "provider": {
        "surrogate_from_codes": {
            "code_empty": 501, "code_full": 0,
            "gain_empty_dbi": -0.8, "gain_full_dbi": -11.8
        }
    }
}"#;

#[test]
fn evaluate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "run.json", SERPENTINE_CONFIG);

    // Feasible candidate: exit 0.
    let ok = run_in(
        dir.path(),
        &[
            "evaluate", "--config", "run.json", "--a1", "0", "--a2", "10.5", "--c2", "2", "--out",
            "r",
        ],
    );
    assert_eq!(exit_code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));

    // A gain gate above both endpoints zeroes the fitness: exit 2.
    write(
        dir.path(),
        "gated.json",
        r#"{
            "gates": { "min_gain_dbi": 5.0 },
            "provider": {
                "surrogate_from_codes": {
                    "code_empty": 501, "code_full": 0,
                    "gain_empty_dbi": -0.8, "gain_full_dbi": -11.8
                }
            }
        }"#,
    );
    let gated = run_in(
        dir.path(),
        &[
            "evaluate",
            "--config",
            "gated.json",
            "--a1",
            "0",
            "--a2",
            "10.5",
            "--c2",
            "2",
            "--out",
            "r",
        ],
    );
    assert_eq!(exit_code(&gated), 2);

    // Missing dataset file: exit 1 at config load.
    write(
        dir.path(),
        "missing.json",
        r#"{ "provider": { "dataset": "absent.csv" } }"#,
    );
    let missing = run_in(
        dir.path(),
        &[
            "evaluate",
            "--config",
            "missing.json",
            "--a1",
            "0",
            "--a2",
            "10.5",
            "--c2",
            "2",
        ],
    );
    assert_eq!(exit_code(&missing), 1);
}

#[test]
fn evaluate_outputs_are_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "run.json", SERPENTINE_CONFIG);
    let args = [
        "evaluate", "--config", "run.json", "--a1", "0", "--a2", "10.5", "--c2", "2",
    ];

    let first = run_in(
        dir.path(),
        &args
            .iter()
            .chain(&["--out", "a"])
            .copied()
            .collect::<Vec<_>>(),
    );
    let second = run_in(
        dir.path(),
        &args
            .iter()
            .chain(&["--out", "b"])
            .copied()
            .collect::<Vec<_>>(),
    );
    assert_eq!(exit_code(&first), 0);
    assert_eq!(exit_code(&second), 0);
    assert_eq!(first.stdout, second.stdout);
    for name in ["breakdown.csv", "metrics.csv"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(name)).unwrap(),
            fs::read(dir.path().join("b").join(name)).unwrap(),
            "{name} differs between identical runs"
        );
    }
}

#[test]
fn sweep_two_points_emits_exactly_the_boundary_states() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "run.json", SERPENTINE_CONFIG);
    let out = run_in(
        dir.path(),
        &[
            "sweep", "--config", "run.json", "--a1", "0", "--a2", "10.5", "--c2", "2", "--points",
            "2", "--out", "r",
        ],
    );
    assert_eq!(exit_code(&out), 0);

    let text = fs::read_to_string(dir.path().join("r").join("sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3, "header plus the two boundary rows");
    assert!(lines[1].starts_with("0,0,501,0,"));
    assert!(lines[2].starts_with("1,26,0,-501,"));
}

#[test]
fn fit_recovers_synthetic_cubic_trend() {
    let dir = tempfile::tempdir().unwrap();
    // Sweep-shaped synthetic data following a cubic with a small wiggle.
    let mut csv = String::from("fill,delta_code\n");
    for i in 0..41 {
        let x = i as f64 / 40.0;
        let y = -480.0 * x + 150.0 * x * x - 170.0 * x * x * x
            + 2.0 * ((i * 31 % 7) as f64 - 3.0) / 3.0;
        csv.push_str(&format!("{x},{y}\n"));
    }
    write(dir.path(), "curve.csv", &csv);

    let out = run_in(dir.path(), &["fit", "curve.csv", "--out", "r"]);
    assert_eq!(exit_code(&out), 0);
    let fit: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("r").join("fit.json")).unwrap())
            .unwrap();
    let r_squared = fit["r_squared"].as_f64().unwrap();
    assert!(r_squared >= 0.999, "r_squared = {r_squared}");
}

#[test]
fn range_requires_the_sensitivity_flag() {
    let dir = tempfile::tempdir().unwrap();
    let missing = run_in(dir.path(), &["range", "--gain-dbi", "-11.7"]);
    assert_eq!(
        exit_code(&missing),
        1,
        "missing required flag is a usage error"
    );

    let ok = run_in(
        dir.path(),
        &["range", "--gain-dbi", "-11.7", "--sens-dbm", "-21.3"],
    );
    assert_eq!(exit_code(&ok), 0);
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert!(stdout.starts_with("range_m = 1.74"), "{stdout}");
}

#[test]
fn compare_joins_metric_files() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "sim.csv",
        "metric,value,spread\ncode_empty,501,\ncode_span,501,\n",
    );
    write(
        dir.path(),
        "meas.csv",
        "metric,value,spread\ncode_empty,489,1\ncode_span,484,27\n",
    );
    let out = run_in(
        dir.path(),
        &[
            "compare", "--sim", "sim.csv", "--meas", "meas.csv", "--out", "r",
        ],
    );
    assert_eq!(exit_code(&out), 0);
    let text = fs::read_to_string(dir.path().join("r").join("comparison.csv")).unwrap();
    assert!(text.contains("code_empty,489,1,501,12"));
    assert!(text.contains("code_span,484,27,501,17"));
}

#[test]
fn optimize_with_all_points_gated_reports_empty_incumbent() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "run.json",
        r#"{
            "gates": { "min_gain_dbi": 10.0 },
            "grid": { "round1_counts": [3, 3, 2] },
            "provider": {
                "surrogate_from_codes": {
                    "code_empty": 501, "code_full": 0,
                    "gain_empty_dbi": -0.8, "gain_full_dbi": -11.8
                }
            }
        }"#,
    );
    let out = run_in(
        dir.path(),
        &["optimize", "--config", "run.json", "--out", "r"],
    );
    assert_eq!(exit_code(&out), 2);

    let summary: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("r").join("summary.json")).unwrap(),
    )
    .unwrap();
    assert!(summary["incumbent"].is_null());
    assert_eq!(summary["rounds"][0]["points"].as_u64(), Some(18));
    // Only the coarse round runs when nothing scores above zero.
    assert!(dir.path().join("r").join("grid_round1.csv").exists());
    assert!(!dir.path().join("r").join("grid_round2.csv").exists());
}

// ---------------------------------------------------------------------------
// Dataset-served search against the two-optima reference landscape
// ---------------------------------------------------------------------------

const SENSITIVITY_OPTIMUM: ParameterVector = ParameterVector {
    a1: 0.0,
    a2: 10.5,
    c2: 2.0,
};
const GAIN_OPTIMUM: ParameterVector = ParameterVector {
    a1: 6.0,
    a2: 5.0,
    c2: 1.5,
};

fn distance(v: &ParameterVector, o: &ParameterVector) -> f64 {
    (((v.a1 - o.a1) / 8.0).powi(2) + ((v.a2 - o.a2) / 10.0).powi(2) + ((v.c2 - o.c2) / 1.5).powi(2))
        .sqrt()
}

fn landscape_sample(profile: &ICProfile, q: &EMQuery) -> EMSample {
    let d_sens = distance(&q.geometry, &SENSITIVITY_OPTIMUM);
    let d_gain = distance(&q.geometry, &GAIN_OPTIMUM);
    let lambda = if d_sens + d_gain > 0.0 {
        d_sens / (d_sens + d_gain)
    } else {
        0.0
    };
    let penalty_db = 12.0 * d_sens.min(d_gain);

    let code_to_b = |code: f64| {
        -std::f64::consts::TAU * FREQ * (profile.c_min_pf + code * profile.step_pf()) * 1e-12
    };
    let b_empty = code_to_b(501.0 - 380.0 * lambda);
    let b_full = code_to_b(27.0 * lambda);
    let gain_empty = -0.8 - 0.2 * lambda - penalty_db;
    let gain_full = -11.8 + 9.5 * lambda - penalty_db;

    let fill = q.fill_fraction;
    EMSample {
        conductance_s: profile.conductance,
        susceptance_s: b_empty + (b_full - b_empty) * fill,
        gain_dbi: gain_empty + (gain_full - gain_empty) * fill,
    }
}

/// Tabulate the landscape over the coarse grid plus the refined grids both
/// weightings will visit.
fn landscape_dataset(spec: &GridSpec, weight_sets: &[Weights]) -> String {
    let profile = ICProfile::default();
    let provider = |q: &EMQuery| -> CoreResult<EMSample> { Ok(landscape_sample(&profile, q)) };
    let ctx = EvalContext {
        provider: &provider,
        fixed: FixedGeometry::default(),
        fluid: FluidProperties::default(),
        profile,
        frequency_hz: FREQ,
    };

    let mut points = spec.round1_points().unwrap();
    for weights in weight_sets {
        let result = optimize(
            &ctx,
            spec,
            weights,
            &Gates::default(),
            &NormPolicy::RoundLocal,
        )
        .unwrap();
        let seed = result.rounds[0].incumbent.unwrap().point;
        for refined in spec.round2_points(&seed).unwrap() {
            if !points.contains(&refined) {
                points.push(refined);
            }
        }
    }

    let mut csv = String::from("a1_mm,a2_mm,c2_mm,fill,freq_hz,ga_s,ba_s,grad_dbi\n");
    for v in &points {
        for fill in [0.0, 1.0] {
            let s = landscape_sample(&profile, &EMQuery::new(*v, fill, FREQ).unwrap());
            csv.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{fill},{FREQ},{:.17e},{:.17e},{:.17e}\n",
                v.a1, v.a2, v.c2, s.conductance_s, s.susceptance_s, s.gain_dbi
            ));
        }
    }
    csv
}

fn incumbent_point(summary_path: &Path) -> ParameterVector {
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(summary_path).unwrap()).unwrap();
    let p = &summary["incumbent"]["point"];
    ParameterVector::new(
        p["a1_mm"].as_f64().unwrap(),
        p["a2_mm"].as_f64().unwrap(),
        p["c2_mm"].as_f64().unwrap(),
    )
}

#[test]
fn optimize_finds_both_reference_designs_from_a_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let spec = GridSpec::default();
    let weight_sets = [Weights::new(1.0, 1.0, 1.0), Weights::new(0.0, 5.0, 1.0)];
    write(
        dir.path(),
        "grid.csv",
        &landscape_dataset(&spec, &weight_sets),
    );

    write(
        dir.path(),
        "balanced.json",
        r#"{ "weights": { "w1": 1, "w2": 1, "w3": 1 }, "provider": { "dataset": "grid.csv" } }"#,
    );
    write(
        dir.path(),
        "gain_heavy.json",
        r#"{ "weights": { "w1": 0, "w2": 5, "w3": 1 }, "provider": { "dataset": "grid.csv" } }"#,
    );

    let balanced = run_in(
        dir.path(),
        &["optimize", "--config", "balanced.json", "--out", "balanced"],
    );
    assert_eq!(
        exit_code(&balanced),
        0,
        "{}",
        String::from_utf8_lossy(&balanced.stderr)
    );
    let found = incumbent_point(&dir.path().join("balanced").join("summary.json"));
    assert!(
        (found.a1 - SENSITIVITY_OPTIMUM.a1).abs() <= 1.0 + 1e-9,
        "{found:?}"
    );
    assert!(
        (found.a2 - SENSITIVITY_OPTIMUM.a2).abs() <= 1.25 + 1e-9,
        "{found:?}"
    );
    assert!(
        (found.c2 - SENSITIVITY_OPTIMUM.c2).abs() <= 0.5 + 1e-9,
        "{found:?}"
    );

    let gain_heavy = run_in(
        dir.path(),
        &[
            "optimize",
            "--config",
            "gain_heavy.json",
            "--out",
            "gain_heavy",
        ],
    );
    assert_eq!(exit_code(&gain_heavy), 0);
    let found = incumbent_point(&dir.path().join("gain_heavy").join("summary.json"));
    assert!(
        (found.a1 - GAIN_OPTIMUM.a1).abs() <= 1.0 + 1e-9,
        "{found:?}"
    );
    assert!(
        (found.a2 - GAIN_OPTIMUM.a2).abs() <= 1.25 + 1e-9,
        "{found:?}"
    );
    assert!(
        (found.c2 - GAIN_OPTIMUM.c2).abs() <= 0.5 + 1e-9,
        "{found:?}"
    );
}
