//! End-to-end tests of the phaselab binary: file formats, exit codes,
//! manifests, and determinism.

use std::path::Path;
use std::process::{Command, Output};

use phaselab::ScalarField2D;

fn phaselab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phaselab"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn manifest(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("manifest.json")).expect("manifest exists");
    serde_json::from_str(&text).expect("valid json")
}

#[test]
fn beam_writes_linear_phase_samples() {
    let tmp = tempfile::tempdir().unwrap();
    let out = phaselab(
        &[
            "beam",
            "--model",
            "plane-wave",
            "--xi",
            "1,1",
            "--z",
            "0",
            "--grid",
            "9",
            "--out",
            "run",
        ],
        tmp.path(),
    );
    assert_eq!(exit_code(&out), 0, "{out:?}");
    let phi = ScalarField2D::read_fld(tmp.path().join("run/phi.fld")).unwrap();
    let g = phi.grid();
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            assert!((phi.at(i, j) - (g.x(i) + g.y(j))).abs() < 1e-15);
        }
    }
    let intensity = ScalarField2D::read_fld(tmp.path().join("run/I.fld")).unwrap();
    assert!(intensity.values().iter().all(|&v| v == 1.0));
}

#[test]
fn beam_gaussian_intensity_is_unit_gaussian() {
    let tmp = tempfile::tempdir().unwrap();
    let out = phaselab(
        &[
            "beam", "--model", "gaussian", "--zr", "1", "--k", "1", "--z", "0", "--grid", "17",
            "--out", "run",
        ],
        tmp.path(),
    );
    assert_eq!(exit_code(&out), 0);
    let intensity = ScalarField2D::read_fld(tmp.path().join("run/I.fld")).unwrap();
    let g = intensity.grid();
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            let r2 = g.x(i) * g.x(i) + g.y(j) * g.y(j);
            assert!((intensity.at(i, j) - (-r2).exp()).abs() < 1e-15);
        }
    }
}

#[test]
fn beam_zero_frequency_phase_vanishes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = phaselab(
        &[
            "beam",
            "--model",
            "plane-wave",
            "--xi",
            "0,0",
            "--z",
            "0.7",
            "--grid",
            "5",
            "--out",
            "run",
        ],
        tmp.path(),
    );
    assert_eq!(exit_code(&out), 0);
    let phi = ScalarField2D::read_fld(tmp.path().join("run/phi.fld")).unwrap();
    assert!(phi.values().iter().all(|&v| v == 0.0));
}

#[test]
fn tie_zero_bc_reports_corner_deviation() {
    let tmp = tempfile::tempdir().unwrap();
    let out = phaselab(
        &[
            "tie",
            "--model",
            "plane-wave",
            "--xi",
            "1,1",
            "--bc",
            "zero",
            "--truth",
            "--grid",
            "33",
            "--out",
            "run",
        ],
        tmp.path(),
    );
    assert_eq!(exit_code(&out), 0, "{out:?}");
    let phi = ScalarField2D::read_fld(tmp.path().join("run/phi.fld")).unwrap();
    assert!(phi.values().iter().all(|&v| v.abs() < 1e-10));
    let m = manifest(&tmp.path().join("run"));
    let norms = &m["error_norms"][0];
    assert_eq!(norms["name"], "reconstruction-error");
    let linf = norms["linf_abs"].as_f64().unwrap();
    assert!((linf - 2.0).abs() < 1e-9, "linf_abs = {linf}");
}

#[test]
fn tie_ground_truth_bc_recovers_phase_with_teague() {
    let tmp = tempfile::tempdir().unwrap();
    let out = phaselab(
        &[
            "tie",
            "--model",
            "plane-wave",
            "--bc",
            "ground-truth",
            "--teague",
            "--truth",
            "--grid",
            "33",
            "--out",
            "run",
        ],
        tmp.path(),
    );
    assert_eq!(exit_code(&out), 0, "{out:?}");
    let m = manifest(&tmp.path().join("run"));
    let files = m["files"].as_array().unwrap();
    assert!(files.iter().any(|f| f == "phi_teague.fld"));
    for entry in m["error_norms"].as_array().unwrap() {
        assert!(entry["linf_abs"].as_f64().unwrap() < 1e-6);
    }
}

#[test]
fn tie_reads_field_inputs_from_disk() {
    // Round trip: beam writes fields, tie consumes them as files.
    let tmp = tempfile::tempdir().unwrap();
    let out = phaselab(
        &[
            "beam", "--model", "gaussian", "--z", "0", "--grid", "17", "--out", "data",
        ],
        tmp.path(),
    );
    assert_eq!(exit_code(&out), 0);
    // A z=0 gaussian slice has I_z = 0; reuse the intensity trick of a
    // constant zero field by generating it with xi=0,0 phase (all zero).
    let zero = phaselab(
        &[
            "beam",
            "--model",
            "plane-wave",
            "--xi",
            "0,0",
            "--grid",
            "17",
            "--out",
            "zero",
        ],
        tmp.path(),
    );
    assert_eq!(exit_code(&zero), 0);
    let out = phaselab(
        &[
            "tie",
            "--intensity",
            "data/I.fld",
            "--iz",
            "zero/phi.fld",
            "--bc",
            "const:4.71238898038469",
            "--out",
            "run",
        ],
        tmp.path(),
    );
    assert_eq!(exit_code(&out), 0, "{out:?}");
    let phi = ScalarField2D::read_fld(tmp.path().join("run/phi.fld")).unwrap();
    for &v in phi.values() {
        assert!((v - 4.71238898038469).abs() < 1e-7);
    }
}

#[test]
fn char_samples_match_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let out = phaselab(
        &[
            "tpe-char",
            "--g",
            "affine:1,1,0",
            "--seeds",
            "3",
            "--dtau",
            "0.005",
            "--zend",
            "0.5",
            "--out",
            "run",
        ],
        tmp.path(),
    );
    assert_eq!(exit_code(&out), 0, "{out:?}");
    let csv = std::fs::read_to_string(tmp.path().join("run/samples.csv")).unwrap();
    let mut checked = 0;
    for line in csv.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        let (x, y, z, phi) = (cols[0], cols[1], cols[2], cols[3]);
        assert!((phi - (x + y + z)).abs() < 1e-10, "sample off: {line}");
        checked += 1;
    }
    assert!(checked > 100);
    let m = manifest(&tmp.path().join("run"));
    assert_eq!(m["tables"]["fan"]["seeds"], 9);
    assert_eq!(m["tables"]["fan"]["succeeded"], 9);
}

#[test]
fn visc_constant_data_stays_constant() {
    let tmp = tempfile::tempdir().unwrap();
    let out = phaselab(
        &[
            "tpe-visc", "--ihat", "zero", "--g", "const:2", "--h", "const:2", "--grid", "17",
            "--dz", "0.1", "--zend", "0.3", "--out", "run",
        ],
        tmp.path(),
    );
    assert_eq!(exit_code(&out), 0, "{out:?}");
    for n in 0..4 {
        let slice =
            ScalarField2D::read_fld(tmp.path().join(format!("run/phi_z{n:04}.fld"))).unwrap();
        for &v in slice.values() {
            assert!((v - 2.0).abs() < 1e-12);
        }
    }
}

#[test]
fn hybrid_emits_error_table_with_tie_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let out = phaselab(
        &[
            "hybrid",
            "--model",
            "gaussian",
            "--bc",
            "ground-truth",
            "--grid",
            "17",
            "--dz",
            "0.02",
            "--zend",
            "0.06",
            "--truth",
            "--out",
            "run",
        ],
        tmp.path(),
    );
    assert_eq!(exit_code(&out), 0, "{out:?}");
    let m = manifest(&tmp.path().join("run"));
    assert_eq!(m["stages"][0]["name"], "tie-cg");
    let errors = std::fs::read_to_string(tmp.path().join("run/errors.csv")).unwrap();
    assert_eq!(errors.lines().count(), 5); // header + four slices
    assert!(m["tables"]["slice_errors"]["rows"].is_array());
}

#[test]
fn report_summary_and_convergence() {
    let tmp = tempfile::tempdir().unwrap();
    phaselab(
        &[
            "beam",
            "--model",
            "plane-wave",
            "--grid",
            "9",
            "--out",
            "data",
        ],
        tmp.path(),
    );
    let out = phaselab(
        &[
            "report",
            "--field",
            "data/phi.fld",
            "--reference",
            "data/phi.fld",
            "--ihat-sweep",
            "17,33",
            "--out",
            "run",
        ],
        tmp.path(),
    );
    assert_eq!(exit_code(&out), 0, "{out:?}");
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("run/summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["linf_abs"], 0.0);
    let conv = std::fs::read_to_string(tmp.path().join("run/convergence.csv")).unwrap();
    let last = conv.lines().last().unwrap();
    let ratio: f64 = last.rsplit(',').next().unwrap().parse().unwrap();
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    // Long-format CSV has one row per node plus a header.
    let field_csv = std::fs::read_to_string(tmp.path().join("run/phi.csv")).unwrap();
    assert_eq!(field_csv.lines().count(), 1 + 81);
}

#[test]
fn invalid_config_exits_2_and_writes_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = phaselab(&["tpe-char", "--seeds", "0", "--out", "run"], tmp.path());
    assert_eq!(exit_code(&out), 2);
    let m = manifest(&tmp.path().join("run"));
    assert!(m["error"].as_str().unwrap().contains("empty seed list"));
}

#[test]
fn non_finite_numeric_flags_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = phaselab(
        &[
            "beam",
            "--model",
            "plane-wave",
            "--z",
            "nan",
            "--out",
            "run",
        ],
        tmp.path(),
    );
    assert_eq!(exit_code(&out), 2);
    let out = phaselab(
        &[
            "beam",
            "--model",
            "plane-wave",
            "--xi",
            "nan,1",
            "--out",
            "run",
        ],
        tmp.path(),
    );
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn missing_input_file_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let out = phaselab(
        &["report", "--field", "does-not-exist.fld", "--out", "run"],
        tmp.path(),
    );
    assert_eq!(exit_code(&out), 4);
}

#[test]
fn truth_without_source_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = phaselab(
        &[
            "tpe-visc", "--ihat", "zero", "--truth", "--grid", "9", "--dz", "0.1", "--zend", "0.1",
            "--out", "run",
        ],
        tmp.path(),
    );
    assert_eq!(exit_code(&out), 2, "{out:?}");
}

#[test]
fn identical_configs_give_identical_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    for dir in ["a", "b"] {
        let out = phaselab(
            &[
                "tie",
                "--model",
                "gaussian",
                "--bc",
                "const:4.712",
                "--grid",
                "17",
                "--out",
                dir,
            ],
            tmp.path(),
        );
        assert_eq!(exit_code(&out), 0);
    }
    let phi_a = std::fs::read(tmp.path().join("a/phi.fld")).unwrap();
    let phi_b = std::fs::read(tmp.path().join("b/phi.fld")).unwrap();
    assert_eq!(phi_a, phi_b, "field outputs must be bit-identical");
    let mut ma = manifest(&tmp.path().join("a"));
    let mut mb = manifest(&tmp.path().join("b"));
    // Wall clock lives in its own subtree; everything else is deterministic.
    ma["timing"] = serde_json::Value::Null;
    mb["timing"] = serde_json::Value::Null;
    ma["config"]["out"] = serde_json::Value::Null;
    mb["config"]["out"] = serde_json::Value::Null;
    assert_eq!(ma, mb);
}

#[test]
fn config_file_merges_and_flags_win() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("run.cfg"),
        "# experiment defaults\nmodel = plane-wave\nxi = 2,0\ngrid = 9\nz = 0\n",
    )
    .unwrap();
    // File alone: xi = (2, 0).
    let out = phaselab(
        &["beam", "--config", "run.cfg", "--out", "from-file"],
        tmp.path(),
    );
    assert_eq!(exit_code(&out), 0, "{out:?}");
    let phi = ScalarField2D::read_fld(tmp.path().join("from-file/phi.fld")).unwrap();
    assert_eq!(phi.grid().nx(), 9);
    assert!((phi.at(1, 0) - 2.0 * 0.125).abs() < 1e-15);
    // Flag overrides the file's xi.
    let out = phaselab(
        &[
            "beam",
            "--config",
            "run.cfg",
            "--xi",
            "0,0",
            "--out",
            "flag-wins",
        ],
        tmp.path(),
    );
    assert_eq!(exit_code(&out), 0);
    let phi = ScalarField2D::read_fld(tmp.path().join("flag-wins/phi.fld")).unwrap();
    assert!(phi.values().iter().all(|&v| v == 0.0));
}

#[test]
fn visc_accepts_an_intensity_stack_from_beam() {
    // Pipeline: beam --zlist emits intensity slices, the march reduces them
    // to Î and should land near the analytic-Î run.
    let tmp = tempfile::tempdir().unwrap();
    let zlist: Vec<String> = (0..=30).map(|n| format!("{}", n as f64 * 0.01)).collect();
    let out = phaselab(
        &[
            "beam",
            "--model",
            "gaussian",
            "--zlist",
            &zlist.join(","),
            "--grid",
            "33",
            "--out",
            "data",
        ],
        tmp.path(),
    );
    assert_eq!(exit_code(&out), 0, "{out:?}");
    let run = |ihat: &str, dir: &str| {
        let out = phaselab(
            &[
                "tpe-visc", "--ihat", ihat, "--grid", "33", "--dz", "0.02", "--zend", "0.2",
                "--out", dir,
            ],
            tmp.path(),
        );
        assert_eq!(exit_code(&out), 0, "{out:?}");
        ScalarField2D::read_fld(tmp.path().join(format!("{dir}/phi_z0010.fld"))).unwrap()
    };
    let sampled = run("istack:data", "sampled");
    let analytic = run("gaussian", "analytic");
    for (a, b) in sampled.values().iter().zip(analytic.values()) {
        assert!((a - b).abs() < 1e-3, "sampled {a} vs analytic {b}");
    }
}

#[test]
fn beam_stack_writes_slice_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = phaselab(
        &[
            "beam", "--model", "gaussian", "--zlist", "0,0.5,1", "--grid", "9", "--out", "run",
        ],
        tmp.path(),
    );
    assert_eq!(exit_code(&out), 0, "{out:?}");
    for n in 0..3 {
        assert!(tmp.path().join(format!("run/I_z{n:04}.fld")).exists());
        assert!(tmp.path().join(format!("run/phi_z{n:04}.fld")).exists());
    }
    let m = manifest(&tmp.path().join("run"));
    assert_eq!(m["files"].as_array().unwrap().len(), 6);
}
