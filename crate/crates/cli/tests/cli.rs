use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_translator-lab"))
        .args(args)
        .env_remove("TRANSLATOR_LAB_LOG")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn field<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().find_map(|l| l.strip_prefix(key)?.strip_prefix('='))
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn exit_0_profile_reintersects() {
    let out = lab(&["profile", "--lambda", "1", "--start", "axis"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(field(&text, "regime"), Some("reintersects_axis_nonorthogonal"));
    let theta: f64 = field(&text, "theta_end").unwrap().parse().unwrap();
    assert!(theta > std::f64::consts::FRAC_PI_2 && theta < std::f64::consts::PI);
}

#[test]
fn exit_0_help() {
    assert_eq!(code(&lab(&["--help"])), 0);
}

#[test]
fn exit_1_corrupted_cone() {
    let out = lab(&["verify", "--family", "cone", "--lambda-shift", "0.1"]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    let value: f64 = text
        .split("value=")
        .nth(1)
        .unwrap()
        .split(' ')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((value - 0.1).abs() < 1e-8);
}

#[test]
fn exit_2_no_solution_below_minus_one() {
    let out = lab(&["profile", "--lambda", "-2", "--start", "axis"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    assert_eq!(code(&lab(&["picard", "--lambda", "-2"])), 2);
}

#[test]
fn exit_3_budget_too_short() {
    assert_eq!(code(&lab(&["profile", "--lambda", "0", "--s-max", "1"])), 3);
    assert_eq!(code(&lab(&["profile", "--lambda", "1", "--s-max", "1"])), 3);
}

#[test]
fn exit_4_usage_errors() {
    assert_eq!(code(&lab(&["profile", "--lambda", "1", "--tol", "1"])), 4);
    assert_eq!(code(&lab(&["profile"])), 4);
    assert_eq!(code(&lab(&["frobnicate"])), 4);
    assert_eq!(code(&lab(&["verify", "--family", "no_such_family"])), 4);
    assert_eq!(code(&lab(&["portrait", "--lambda", "1", "--seed", "1;2"])), 4);
    assert_eq!(code(&lab(&["gauss-bonnet", "--speed", "1,1,0"])), 4);
    assert_eq!(
        code(&lab(&["--config", "/nonexistent/run.cfg", "profile", "--lambda", "1"])),
        4
    );
}

#[test]
fn exit_5_unwritable_output() {
    let out = lab(&["mesh", "--source", "sphere", "--output", "/nonexistent/dir/sphere.obj"]);
    assert_eq!(code(&out), 5);
}

#[test]
fn verify_default_suite_passes() {
    let out = lab(&["verify"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(!text.contains("FAIL"));
    assert_eq!(field(&text, "failed"), Some("0"));
}

#[test]
fn verify_helix_claims_its_lambda() {
    let out = lab(&[
        "verify",
        "--family",
        "tangent_of_helix",
        "--param",
        "a=1",
        "--param",
        "b=1",
    ]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("PASS positive"));
}

#[test]
fn portrait_kinds() {
    for (lambda, kind) in [("1", "center"), ("-2", "saddle"), ("0", "degenerate")] {
        let out = lab(&["portrait", "--lambda", lambda]);
        assert_eq!(code(&out), 0);
        assert_eq!(field(&stdout(&out), "kind"), Some(kind), "λ = {lambda}");
    }
}

#[test]
fn portrait_files() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("pp");
    let out = lab(&[
        "portrait",
        "--lambda",
        "1",
        "--seed",
        "0.5,1.2",
        "--output",
        path_str(&prefix),
    ]);
    assert_eq!(code(&out), 0);
    let traj = std::fs::read_to_string(dir.path().join("pp_trajectories.csv")).unwrap();
    assert!(traj.starts_with("s,x,theta\n"));
    assert!(traj.contains("#seed"));
    let field_csv = std::fs::read_to_string(dir.path().join("pp_field.csv")).unwrap();
    assert!(field_csv.starts_with("x,theta,dx,dtheta\n"));
}

#[test]
fn lambda_minus_one_equator_regime() {
    let out = lab(&["profile", "--lambda", "-1", "--start", "equator"]);
    assert_eq!(code(&out), 0);
    assert_eq!(field(&stdout(&out), "regime"), Some("lambda_minus_one_graph"));
}

#[test]
fn profile_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("p.csv");
    assert_eq!(code(&lab(&["profile", "--lambda", "1", "--output", path_str(&csv)])), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s,x,z,theta,dtheta_ds,first_integral_residual"));
    assert!(text.lines().any(|l| l.starts_with("#event axis_crossing")));
    assert!(!text.contains('\r'));
    let row = lines.next().unwrap();
    assert_eq!(row.split(',').count(), 6);
    // every number carries 17 significant digits
    assert!(row.split(',').all(|v| v.split('e').next().unwrap().len() == 18));
}

#[test]
fn mesh_outputs() {
    let dir = tempfile::tempdir().unwrap();
    for (name, args) in [
        ("sphere", vec!["--source", "sphere"]),
        ("bowl", vec!["--lambda", "0", "--s-max", "10"]),
        ("graph", vec!["--lambda", "-0.5", "--s-max", "10"]),
        ("cone", vec!["--source", "family", "--family", "cone"]),
    ] {
        let obj = dir.path().join(format!("{name}.obj"));
        let mut full = vec!["mesh"];
        full.extend(args);
        full.extend(["--output", path_str(&obj)]);
        let out = lab(&full);
        assert_eq!(code(&out), 0, "{name}");
        let text = std::fs::read_to_string(&obj).unwrap();
        let nv = text.lines().filter(|l| l.starts_with("v ")).count();
        assert!(nv > 0);
        for f in text.lines().filter(|l| l.starts_with("f ")) {
            for idx in f.split_whitespace().skip(1) {
                let k: usize = idx.parse().unwrap();
                assert!(k >= 1 && k <= nv);
            }
        }
        let side = std::fs::read_to_string(obj.with_extension("csv")).unwrap();
        assert!(side.starts_with("vertex_index,value\n"));
        assert_eq!(side.lines().count(), nv + 1);
    }
}

#[test]
fn sphere_mesh_lies_on_unit_sphere() {
    let dir = tempfile::tempdir().unwrap();
    let obj = dir.path().join("s.obj");
    assert_eq!(
        code(&lab(&["mesh", "--source", "sphere", "--output", path_str(&obj)])),
        0
    );
    let text = std::fs::read_to_string(&obj).unwrap();
    for l in text.lines().filter(|l| l.starts_with("v ")) {
        let p: Vec<f64> = l.split_whitespace().skip(1).map(|v| v.parse().unwrap()).collect();
        assert!(((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn sweep_matches_single_runs_and_keeps_order() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("sweep.csv");
    let par = lab(&[
        "--jobs",
        "3",
        "profile",
        "--lambda",
        "1,0,-0.5",
        "--output",
        path_str(&base),
    ]);
    let seq = lab(&["profile", "--lambda", "1,0,-0.5"]);
    assert_eq!(code(&par), 0);
    assert_eq!(par.stdout, seq.stdout);
    let regimes: Vec<&str> = std::str::from_utf8(&par.stdout)
        .unwrap()
        .lines()
        .filter_map(|l| l.strip_prefix("regime="))
        .collect();
    assert_eq!(
        regimes,
        [
            "reintersects_axis_nonorthogonal",
            "asymptotic_to_cylinder",
            "entire_convex_graph"
        ]
    );
    let single = dir.path().join("one.csv");
    assert_eq!(
        code(&lab(&["profile", "--lambda", "0", "--output", path_str(&single)])),
        0
    );
    assert_eq!(
        std::fs::read(dir.path().join("sweep_lambda0.csv")).unwrap(),
        std::fs::read(&single).unwrap()
    );
    assert!(dir.path().join("sweep_lambda-0.5.csv").exists());
}

#[test]
fn sweep_status_is_worst_member() {
    let out = lab(&["--jobs", "2", "profile", "--lambda", "1,-2"]);
    assert_eq!(code(&out), 2);
    assert_eq!(field(&stdout(&out), "regime"), Some("reintersects_axis_nonorthogonal"));
}

#[test]
fn config_file_supplies_missing_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# λ = −2 would fail\nlambda = -2\nstart = axis\ns_max = 20\n").unwrap();
    let from_file = lab(&["--config", path_str(&cfg), "profile"]);
    assert_eq!(code(&from_file), 2);
    let overridden = lab(&["--config", path_str(&cfg), "profile", "--lambda", "1"]);
    assert_eq!(code(&overridden), 0);
    assert_eq!(
        field(&stdout(&overridden), "regime"),
        Some("reintersects_axis_nonorthogonal")
    );

    std::fs::write(&cfg, "lambda 1\n").unwrap();
    assert_eq!(code(&lab(&["--config", path_str(&cfg), "profile"])), 4);
}

#[test]
fn picard_reports_axis_curvature() {
    let out = lab(&["picard", "--lambda", "3"]);
    assert_eq!(code(&out), 0);
    let u2: f64 = field(&stdout(&out), "second_derivative_at_axis")
        .unwrap()
        .parse()
        .unwrap();
    assert!((u2 - 2.0).abs() < 1e-4);
}

#[test]
fn gauss_bonnet_torus() {
    let dir = tempfile::tempdir().unwrap();
    let cells = dir.path().join("cells.csv");
    let out = lab(&[
        "gauss-bonnet",
        "--surface",
        "torus",
        "--resolution",
        "32",
        "--cells",
        path_str(&cells),
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(field(&text, "genus"), Some("1"));
    assert_eq!(field(&text, "implied_lambda"), Some("none"));
    assert_eq!(std::fs::read_to_string(&cells).unwrap().lines().count(), 32 * 32 + 1);
}

#[test]
fn logging_goes_to_stderr() {
    let out = Command::new(env!("CARGO_BIN_EXE_translator-lab"))
        .args(["profile", "--lambda", "1"])
        .env("TRANSLATOR_LAB_LOG", "info")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("INFO"));
    assert_eq!(out.stdout, lab(&["profile", "--lambda", "1"]).stdout);
}
