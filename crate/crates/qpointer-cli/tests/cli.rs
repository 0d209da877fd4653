//! End-to-end tests of the `qpointer` binary: exit codes, stdout contracts,
//! artifact layout, and byte-level determinism of reruns.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

const SWEEP_HEADER: &str = "theta,gamma_big,engine,shift_over_gamma0t,weak_value,\
     expectation_value,transition_factor_inferred,success_probability,std_error,\
     delta_vs_analytic,error";

fn qpointer(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpointer"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary should spawn")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout should be UTF-8")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("stderr should be UTF-8")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("process should not be killed")
}

#[test]
fn help_lists_every_subcommand() {
    let tmp = tempdir().unwrap();
    let output = qpointer(&["--help"], tmp.path());
    assert_eq!(exit_code(&output), 0);
    let text = stdout_of(&output);
    for name in [
        "point",
        "sweep",
        "transition",
        "reconstruct",
        "wigner",
        "check",
    ] {
        assert!(text.contains(name), "--help does not mention `{name}`");
    }
}

#[test]
fn point_reports_the_balanced_working_point() {
    // θ = π/4: the weak value and the expectation value coincide at −1, the
    // post-selected norm is exactly 1, and the pointer sits at −γ₀t for
    // every Γ.
    let tmp = tempdir().unwrap();
    let output = qpointer(
        &["point", "--theta", "0.7853981633974483", "--gamma", "1.0"],
        tmp.path(),
    );
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_of(&output));
    let text = stdout_of(&output);
    assert!(text.contains("weak_value = -1.000000"), "{text}");
    assert!(text.contains("shift/gamma0t = -1.000000"), "{text}");
    assert!(text.contains("success_probability = 0.500000"), "{text}");
}

#[test]
fn point_rejects_the_weak_value_pole_with_a_parameter_error() {
    let tmp = tempdir().unwrap();
    let output = qpointer(&["point", "--theta", "0", "--gamma", "1.0"], tmp.path());
    assert_eq!(exit_code(&output), 2);
    assert!(stderr_of(&output).contains("error:"));
}

#[test]
fn point_reports_the_undisplaced_ratio_as_undefined() {
    let tmp = tempdir().unwrap();
    let output = qpointer(&["point", "--theta", "0.3", "--gamma", "0"], tmp.path());
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_of(&output));
    let text = stdout_of(&output);
    assert!(
        text.contains("shift/gamma0t = undefined (gamma = 0)"),
        "{text}"
    );
    assert!(text.contains("branch_overlap = 1.000000"), "{text}");
}

#[test]
fn fock_truncation_overflow_is_a_physics_error() {
    // Γ = 5 displaces the branches to ⟨n⟩ ≈ 12.5; a 16-level ladder cannot
    // hold that and the propagator must refuse rather than silently clip.
    let tmp = tempdir().unwrap();
    let output = qpointer(
        &[
            "point",
            "--theta",
            "0.3",
            "--gamma",
            "5",
            "--fock-dim",
            "16",
        ],
        tmp.path(),
    );
    assert_eq!(exit_code(&output), 3, "stderr: {}", stderr_of(&output));
    assert!(stderr_of(&output).contains("error:"));
}

#[test]
fn transition_reruns_are_byte_identical_including_sampling() {
    let tmp = tempdir().unwrap();
    let args = |out: &str| {
        vec![
            "transition".to_string(),
            "--points".to_string(),
            "3".to_string(),
            "--shots".to_string(),
            "50".to_string(),
            "--seed".to_string(),
            "9".to_string(),
            "--fock-dim".to_string(),
            "32".to_string(),
            "--out".to_string(),
            out.to_string(),
        ]
    };
    for out in ["a", "b"] {
        let argv = args(out);
        let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
        let output = qpointer(&argv, tmp.path());
        assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_of(&output));
    }

    let csv_a = std::fs::read(tmp.path().join("a/sweep.csv")).unwrap();
    let csv_b = std::fs::read(tmp.path().join("b/sweep.csv")).unwrap();
    assert!(!csv_a.is_empty());
    assert_eq!(csv_a, csv_b, "rerun changed sweep.csv");

    // Metadata timestamps may differ between runs; the spec hash must not.
    let meta_a: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("a/metadata.json")).unwrap())
            .unwrap();
    let meta_b: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("b/metadata.json")).unwrap())
            .unwrap();
    assert_eq!(meta_a["spec_hash"], meta_b["spec_hash"]);
    assert_eq!(meta_a["spec_hash"].as_str().unwrap().len(), 8);

    // 3 Γ points × (analytic + fock + tomography), header pinned.
    let text = String::from_utf8(csv_a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), SWEEP_HEADER);
    assert_eq!(lines.count(), 9);
}

#[test]
fn sweep_runs_a_spec_file_and_writes_parseable_artifacts() {
    let tmp = tempdir().unwrap();
    let spec_path = tmp.path().join("spec.json");
    std::fs::write(
        &spec_path,
        r#"{
            "theta_values": [0.3],
            "gamma_values": [0.5, 1.0],
            "engine": "analytic"
        }"#,
    )
    .unwrap();
    // No --out: artifacts land under out/<hash> relative to the working
    // directory.
    let output = qpointer(&["sweep", "--spec", "spec.json"], tmp.path());
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_of(&output));
    let text = stdout_of(&output);
    assert!(
        text.contains("sweep: 2 rows (0 with per-point errors)"),
        "{text}"
    );

    let out_root = tmp.path().join("out");
    let hash_dirs: Vec<_> = std::fs::read_dir(&out_root).unwrap().collect();
    assert_eq!(hash_dirs.len(), 1);
    let dir = hash_dirs[0].as_ref().unwrap().path();
    assert_eq!(dir.file_name().unwrap().to_str().unwrap().len(), 8);

    let mut reader = csv::Reader::from_path(dir.join("sweep.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    assert_eq!(headers.iter().collect::<Vec<_>>().join(","), SWEEP_HEADER);
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    for row in &rows {
        assert_eq!(&row[2], "analytic");
        assert!(row[3].parse::<f64>().unwrap().is_finite());
        assert!(row[10].is_empty(), "error column should be empty: {row:?}");
    }

    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["spec"]["engine"], "analytic");
    assert_eq!(meta["spec"]["fock_dim"], 128);
}

#[test]
fn sweep_rejects_bad_specs_as_parameter_errors() {
    let tmp = tempdir().unwrap();

    let output = qpointer(&["sweep", "--spec", "missing.json"], tmp.path());
    assert_eq!(exit_code(&output), 2);

    std::fs::write(tmp.path().join("empty.json"), r#"{"theta_values": []}"#).unwrap();
    let output = qpointer(&["sweep", "--spec", "empty.json"], tmp.path());
    assert_eq!(exit_code(&output), 2);
    assert!(stderr_of(&output).contains("error:"));
}

#[test]
fn reconstruct_writes_dataset_and_both_densities() {
    let tmp = tempdir().unwrap();
    std::fs::write(
        tmp.path().join("job.json"),
        r#"{
            "theta": 0.3,
            "gamma_big": 1.0,
            "fock_dim": 48,
            "shots": 0
        }"#,
    )
    .unwrap();
    let output = qpointer(
        &["reconstruct", "--job", "job.json", "--out", "rec"],
        tmp.path(),
    );
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_of(&output));

    let dataset: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("rec/dataset.json")).unwrap())
            .unwrap();
    // Default probe ladder: 101 wavenumbers × 2 bases.
    assert_eq!(dataset["records"].as_array().unwrap().len(), 202);
    assert_eq!(dataset["shot_count"], "exact");

    let z_grid = qpointer_core::tomography::default_z_grid(1.0);
    for method in ["fourier", "least_squares"] {
        let path = tmp.path().join(format!("rec/density_{method}.csv"));
        let mut reader = csv::Reader::from_path(&path).unwrap();
        assert_eq!(
            reader.headers().unwrap().iter().collect::<Vec<_>>(),
            vec!["z", "density"]
        );
        let rows: Vec<(f64, f64)> = reader
            .deserialize::<(f64, f64)>()
            .map(|r| r.unwrap())
            .collect();
        assert_eq!(rows.len(), z_grid.len());
        let mass: f64 = rows
            .windows(2)
            .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
            .sum();
        assert!(
            (mass - 1.0).abs() < 1e-3,
            "{method} mass = {mass} from exact records"
        );
        if method == "least_squares" {
            assert!(rows.iter().all(|&(_, rho)| rho >= 0.0));
        }
    }

    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("rec/summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["estimates"].as_array().unwrap().len(), 2);
    assert_eq!(summary["records"], 202);
}

#[test]
fn reconstruct_rejects_unknown_job_fields() {
    let tmp = tempdir().unwrap();
    std::fs::write(
        tmp.path().join("job.json"),
        r#"{"theta": 0.3, "gamma_big": 1.0, "shots": 0, "shotz": 10}"#,
    )
    .unwrap();
    let output = qpointer(&["reconstruct", "--job", "job.json"], tmp.path());
    assert_eq!(exit_code(&output), 2);
    assert!(stderr_of(&output).contains("shotz"));
}

#[test]
fn wigner_table_matches_its_declared_grid() {
    let tmp = tempdir().unwrap();
    let output = qpointer(
        &["wigner", "--theta", "0.3", "--gamma", "0.5", "--out", "w"],
        tmp.path(),
    );
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_of(&output));

    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("w/panel.json")).unwrap()).unwrap();
    let n_z = meta["n_z"].as_u64().unwrap() as usize;
    let n_p = meta["n_p"].as_u64().unwrap() as usize;

    let mut reader = csv::Reader::from_path(tmp.path().join("w/wigner.csv")).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        vec!["z", "p", "w"]
    );
    let rows: Vec<(f64, f64, f64)> = reader
        .deserialize::<(f64, f64, f64)>()
        .map(|r| r.unwrap())
        .collect();
    assert_eq!(rows.len(), n_z * n_p);
    assert!(rows
        .iter()
        .all(|&(z, p, w)| { z.is_finite() && p.is_finite() && w.is_finite() }));

    // Row-major layout (z outer): the first n_p rows share the first z.
    let z0 = rows[0].0;
    assert!(rows[..n_p].iter().all(|&(z, _, _)| z == z0));
    assert_ne!(rows[n_p].0, z0);

    // The Wigner function integrates to 1 over the (deliberately generous)
    // window; a plain Riemann sum on the 0.125-step grid is plenty here.
    let dz =
        (meta["z_max"].as_f64().unwrap() - meta["z_min"].as_f64().unwrap()) / (n_z as f64 - 1.0);
    let dp =
        (meta["p_max"].as_f64().unwrap() - meta["p_min"].as_f64().unwrap()) / (n_p as f64 - 1.0);
    let mass: f64 = rows.iter().map(|&(_, _, w)| w).sum::<f64>() * dz * dp;
    assert!((mass - 1.0).abs() < 1e-3, "Wigner mass = {mass}");

    let mut density = csv::Reader::from_path(tmp.path().join("w/density.csv")).unwrap();
    assert_eq!(density.records().count(), n_z);
}

#[test]
fn check_passes_at_default_tolerance_and_flags_disagreement() {
    let tmp = tempdir().unwrap();
    let output = qpointer(
        &["check", "--grid", "quick", "--fock-dim", "64"],
        tmp.path(),
    );
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_of(&output));
    assert!(stdout_of(&output).contains("check: 9/9 points agree"));

    // No discretization is exact to 1e-18: every point must be flagged and
    // the command must exit 1 (failed check), not 2 or 3 (the run itself
    // is fine).
    let output = qpointer(
        &[
            "check",
            "--grid",
            "quick",
            "--fock-dim",
            "64",
            "--tolerance",
            "1e-18",
        ],
        tmp.path(),
    );
    assert_eq!(exit_code(&output), 1);
    assert!(stdout_of(&output).contains("9 exceed tolerance"));
}
