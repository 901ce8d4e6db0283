//! End-to-end checks of the command-line interface, driven through the
//! compiled binary: the determinism contract (byte-identical reruns), the
//! documented exit codes, and the shipped example configurations.
//!
//! Run with `-- --nocapture` to see the per-criterion verdict line.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use approx::assert_abs_diff_eq;
use serde_json::Value;

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_pdm-isospec")
}

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("examples")
        .join(name)
}

fn run(subcommand: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(binary())
        .arg(subcommand)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary launches")
}

fn run_ok(subcommand: &str, config: &Path, out: &Path) -> Output {
    let output = run(subcommand, config, out, &["--quiet"]);
    assert!(
        output.status.success(),
        "{subcommand} failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

fn load_json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).expect("JSON file exists")).expect("JSON parses")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

fn verdict(label: &str, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    println!("{label}: {status} — {detail}");
    assert!(pass, "{label}: {detail}");
}

const RERUN_SPECTRUM: &str = r#"
[profile]
family = "constant"

[superpotential]
kind = "linear-x"
omega = 1.0

[domain]
x_min = -10.0
x_max = 10.0
n = 601

[ordering]
alpha = [0.5]

[transform]
lambda = [1.0, 2.0]
levels = 4
"#;

const RERUN_COHERENT: &str = r#"
[profile]
family = "inverse-quadratic"

[superpotential]
kind = "canonical"

[domain]
x_min = -6.0
x_max = 6.0
n = 401

[ordering]
alpha = [0.3, 0.5]

[coherent]
z = [[0.0, 0.0], [0.0, 0.5]]
"#;

#[test]
fn criterion_12_reruns_are_byte_identical() {
    let work = tempfile::tempdir().unwrap();
    let mut compared = 0usize;
    for (subcommand, text) in [("spectrum", RERUN_SPECTRUM), ("coherent", RERUN_COHERENT)] {
        let config = write_config(work.path(), text);
        // Both runs share one output directory: the resolved configuration
        // (out path included) is embedded in the JSON, so the comparison
        // must hold it fixed. The rerun also exercises atomic overwrite.
        let out = work.path().join(subcommand);
        let saved = work.path().join(format!("{subcommand}-saved"));
        fs::create_dir_all(&saved).unwrap();
        run_ok(subcommand, &config, &out);
        for name in [format!("{subcommand}.csv"), format!("{subcommand}.json")] {
            fs::copy(out.join(&name), saved.join(&name)).unwrap();
        }
        run_ok(subcommand, &config, &out);
        for name in [format!("{subcommand}.csv"), format!("{subcommand}.json")] {
            let a = fs::read(saved.join(&name)).expect("first run wrote the file");
            let b = fs::read(out.join(&name)).expect("second run wrote the file");
            assert_eq!(a, b, "{name} differs between identical runs");
            compared += 1;
        }
    }
    verdict(
        "criterion 12 (byte-identical rerun)",
        compared == 4,
        &format!(
            "{compared} files from repeated spectrum and coherent runs compared equal \
             byte for byte"
        ),
    );
}

#[test]
fn spectrum_example_reproduces_harmonic_levels() {
    let out = tempfile::tempdir().unwrap();
    run_ok("spectrum", &example("spectrum.toml"), out.path());

    let csv = fs::read_to_string(out.path().join("spectrum.csv")).unwrap();
    let mut sections: Vec<Vec<(usize, String, f64)>> = Vec::new();
    let mut rows = 0usize;
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let alpha = fields[0];
        let level: usize = fields[2].parse().unwrap();
        let e_base: f64 = fields[3].parse().unwrap();
        let diff: f64 = fields[5].parse().unwrap();
        assert_abs_diff_eq!(e_base, level as f64 + 0.5, epsilon = 1e-4);
        assert!(diff < 1e-4, "deformed level drifted by {diff}");
        if sections.is_empty() || sections.last().unwrap()[0].1 != alpha {
            sections.push(Vec::new());
        }
        sections
            .last_mut()
            .unwrap()
            .push((level, alpha.to_owned(), e_base));
        rows += 1;
    }
    assert_eq!(rows, 2 * 3 * 6, "two labels, three parameters, six levels");

    // Constant mass: the two ordering labels must produce bitwise equal
    // base spectra.
    assert_eq!(sections.len(), 2, "one section per ordering label");
    let flatten = |section: &[(usize, String, f64)]| -> Vec<f64> {
        section.iter().map(|r| r.2).collect()
    };
    assert_eq!(flatten(&sections[0]), flatten(&sections[1]));

    let json = load_json(&out.path().join("spectrum.json"));
    for record in json["runs"].as_array().unwrap() {
        assert!(!record["deleted_state"]["normalizable"].as_bool().unwrap());
        assert!(record["convergence"]["within_tolerance"].as_bool().unwrap());
        assert!(!record["epsilon_overridden"].as_bool().unwrap());
        assert_abs_diff_eq!(record["epsilon"].as_f64().unwrap(), 0.5, epsilon = 1e-4);
    }
}

#[test]
fn transform_example_screens_poles_and_keeps_the_limit() {
    let out = tempfile::tempdir().unwrap();
    run_ok("transform", &example("transform.toml"), out.path());
    let json = load_json(&out.path().join("transform.json"));

    let rejections = json["rejections"].as_array().unwrap();
    assert_eq!(rejections.len(), 1, "exactly one parameter sits in the gap");
    assert_abs_diff_eq!(rejections[0]["lambda"].as_f64().unwrap(), -0.5);
    let interval = rejections[0]["excluded_interval"].as_array().unwrap();
    assert_abs_diff_eq!(interval[0].as_f64().unwrap(), -1.0, epsilon = 1e-6);
    assert_abs_diff_eq!(interval[1].as_f64().unwrap(), 0.0);

    let accepted = json["accepted"].as_array().unwrap();
    assert_eq!(accepted.len(), 3);
    for record in accepted {
        let lambda = record["lambda"].as_f64().unwrap();
        let max_shift = record["max_shift"].as_f64().unwrap();
        if lambda > 1e8 {
            assert!(max_shift < 1e-8, "large-parameter shift is {max_shift}");
        }
        if (lambda - 1.0).abs() < 1e-12 {
            assert_abs_diff_eq!(
                record["phi_at_center"].as_f64().unwrap(),
                0.376126,
                epsilon = 1e-5
            );
        }
        for route in record["route_distances"].as_array().unwrap() {
            assert!(route.as_f64().unwrap() < 1e-3);
        }
    }
}

#[test]
fn coherent_example_saturates_at_the_midpoint_label() {
    let out = tempfile::tempdir().unwrap();
    run_ok("coherent", &example("coherent.toml"), out.path());
    let json = load_json(&out.path().join("coherent.json"));

    for record in json["runs"].as_array().unwrap() {
        let alpha = record["alpha"].as_f64().unwrap();
        for state in record["states"].as_array().unwrap() {
            assert!(state["eigen_residual"].as_f64().unwrap() < 1e-6);
            let z_im = state["z"][1].as_f64().unwrap();
            if z_im == 0.0 {
                // Zero displacement reproduces the (real) ground state.
                for v in state["psi_im"].as_array().unwrap() {
                    assert_eq!(v.as_f64().unwrap(), 0.0);
                }
            }
            if alpha == 0.5 {
                assert_eq!(state["uncertainty"]["classification"], "saturated");
                assert_eq!(state["uncertainty"]["r_expect"].as_f64().unwrap(), 0.0);
            }
        }
        if alpha == 0.3 {
            assert_eq!(record["sign_analysis"]["verdict"], "indeterminate");
        }
    }
}

#[test]
fn symmetry_example_holds_exactly_at_constant_mass() {
    let out = tempfile::tempdir().unwrap();
    run_ok("symmetry", &example("symmetry.toml"), out.path());
    let json = load_json(&out.path().join("symmetry.json"));

    assert_eq!(json["fixed_point"]["matrix_gap"].as_f64().unwrap(), 0.0);
    assert!(json["fixed_point"]["probe_residual"].as_f64().unwrap() < 1e-12);

    let records = json["records"].as_array().unwrap();
    assert_eq!(records.len(), 3, "five labels collapse into three classes");
    for record in records {
        assert!(record["relation_residual"]["worst"].as_f64().unwrap() < 1e-8);
        assert!(
            record["coefficient_matching"]["closed_form_discrepancy"]
                .as_f64()
                .unwrap()
                < 1e-8
        );
        assert!(!record["coefficient_matching"]["flagged"].as_bool().unwrap());
    }
    let mirrored = &records[1];
    assert_abs_diff_eq!(mirrored["alpha"].as_f64().unwrap(), 0.3);
    assert_abs_diff_eq!(mirrored["mirror"].as_f64().unwrap(), 0.7);
    assert_eq!(mirrored["covers"].as_array().unwrap().len(), 2);
}

#[test]
fn missing_profile_block_is_a_config_error() {
    let work = tempfile::tempdir().unwrap();
    let config = write_config(
        work.path(),
        r#"
        [superpotential]
        kind = "canonical"

        [domain]
        x_min = -1.0
        x_max = 1.0
        n = 11
        "#,
    );
    let output = run("spectrum", &config, &work.path().join("out"), &[]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("[profile]"), "stderr was: {stderr}");
}

#[test]
fn shift_pole_in_the_spectrum_command_is_a_numerical_error() {
    let work = tempfile::tempdir().unwrap();
    let config = write_config(
        work.path(),
        r#"
        [profile]
        family = "constant"

        [superpotential]
        kind = "linear-x"
        omega = 1.0

        [domain]
        x_min = -8.0
        x_max = 8.0
        n = 401

        [transform]
        lambda = [-0.5]
        "#,
    );
    let output = run("spectrum", &config, &work.path().join("out"), &[]);
    assert_eq!(output.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("lambda"), "stderr was: {stderr}");
}

#[test]
fn unwritable_output_directory_is_an_io_error() {
    let work = tempfile::tempdir().unwrap();
    let config = write_config(work.path(), RERUN_SPECTRUM);
    // A path through a regular file cannot be created as a directory.
    let blocker = work.path().join("blocker");
    fs::write(&blocker, b"plain file").unwrap();
    let output = run("spectrum", &config, &blocker.join("out"), &["--quiet"]);
    assert_eq!(output.status.code(), Some(4));
}

#[test]
fn quiet_runs_keep_stderr_empty_even_with_rejections() {
    let out = tempfile::tempdir().unwrap();
    let output = run(
        "transform",
        &example("transform.toml"),
        out.path(),
        &["--quiet"],
    );
    assert!(output.status.success());
    assert!(
        output.stderr.is_empty(),
        "stderr was: {}",
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn grid_override_replaces_the_configured_node_count() {
    let work = tempfile::tempdir().unwrap();
    let config = write_config(work.path(), RERUN_SPECTRUM);
    let out = work.path().join("out");
    let output = run("spectrum", &config, &out, &["--grid-n", "301", "--quiet"]);
    assert!(output.status.success());
    let json = load_json(&out.join("spectrum.json"));
    assert_eq!(json["config"]["domain"]["n"].as_u64(), Some(301));
}
