use std::path::Path;
use std::process::{Command, Output};

use spherimax::cli::commands::MultiplicityReport;
use spherimax::theorems::VerificationReport;

const BIN: &str = env!("CARGO_BIN_EXE_spherimax");

const NORM_POWER: &str = r#"
n = 2
rho = 1.0
[functional]
name = "NORM_POWER"
params = { q = 1.0 }
[r_range]
lo = 1.1
hi = 3.0
count = 9
"#;

fn run(cmd: &str, config: &str, dir: &Path, extra: &[&str]) -> Output {
    let cfg = dir.join(format!("{cmd}.toml"));
    std::fs::write(&cfg, config).unwrap();
    Command::new(BIN)
        .arg(cmd)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .env("SPHERIMAX_THREADS", "2")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn eta_writes_curve_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("eta", NORM_POWER, dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("out/eta_curve.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("r,eta,psi,n_clusters,residual,singleton,dinkelbach_iters"));
    let etas: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(etas.len(), 9);
    assert!(etas.windows(2).all(|w| w[1] < w[0]));
    let svg = std::fs::read_to_string(dir.path().join("out/eta_curve.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn csv_is_byte_stable_for_a_fixed_seed() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = "n = 2\nrho = 1.0\n[functional]\nname = \"TWO_BUMP\"\n";
    assert_eq!(code(&run("eta", cfg, a.path(), &["--seed", "9"])), 0);
    assert_eq!(code(&run("eta", cfg, b.path(), &["--seed", "9"])), 0);
    let read = |d: &Path| std::fs::read(d.join("out/eta_curve.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn infeasible_condition_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = NORM_POWER.replace("NORM_POWER", "QUADRATIC").replace("q = 1.0", "c = 1.0");
    let o = run("eta", &cfg, dir.path(), &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("beta_rho/rho < delta_rho"), "{}", stderr(&o));
}

#[test]
fn unwritable_output_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let cfg_path = dir.path().join("c.toml");
    std::fs::write(&cfg_path, NORM_POWER).unwrap();
    let o = Command::new(BIN)
        .args(["eta", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(blocker.join("sub"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("I/O error"), "{}", stderr(&o));
}

#[test]
fn input_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("eta", &NORM_POWER.replace("rho = 1.0", "rho = -1.0"), dir.path(), &[]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("`rho`"), "{}", stderr(&o));

    let o = run("eta", &format!("foo = 3\n{NORM_POWER}"), dir.path(), &[]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("foo"), "{}", stderr(&o));

    let o = run("verify", &NORM_POWER.replace("name = \"NORM_POWER\"\n", ""), dir.path(), &[]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("name"), "{}", stderr(&o));

    let o = Command::new(BIN).args(["eta", "--config", "/nonexistent/x.toml"]).output().unwrap();
    assert_eq!(code(&o), 1);

    let o = Command::new(BIN).arg("bogus").output().unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn verify_reports_pass_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("verify", NORM_POWER, dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("out/report.json")).unwrap();
    let report: VerificationReport = serde_json::from_str(&text).unwrap();
    assert!(report.overall);
    let again: VerificationReport = serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
    assert_eq!(again, report);
    // delta_rho = +inf is carried through the condition clause
    let gate = report.clauses.iter().find(|c| c.id == "condition.gate").unwrap();
    assert!(gate.threshold.is_infinite());
}

#[test]
fn verify_notes_two_clusters_on_coord_power() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "n = 2\nrho = 1.0\n[functional]\nname = \"COORD_POWER\"\n[r_range]\nlo = 1.1\nhi = 4.0\ncount = 5\n";
    let o = run("verify", cfg, dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: VerificationReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    let sizes: Vec<_> = report.clauses.iter().filter(|c| c.id.ends_with("gamma.nonempty")).collect();
    assert_eq!(sizes.len(), 5);
    assert!(sizes.iter().all(|c| c.measured == 2.0 && c.note.as_deref().unwrap().starts_with("2 cluster")));
}

#[test]
fn phi_matches_lambda_squared() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("phi", NORM_POWER, dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("out/phi_map.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("lambda,phi,residual_max"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| (r[1] - r[0] * r[0]).abs() < 1e-3));
    assert!(dir.path().join("out/phi_map.svg").is_file());
}

#[test]
fn phi_on_minimal_and_uncertifiable_curves() {
    let dir = tempfile::tempdir().unwrap();
    let three = NORM_POWER.replace("count = 9", "count = 3");
    assert_eq!(code(&run("phi", &three, dir.path(), &[])), 0);

    let sloppy = format!("{NORM_POWER}[tolerances]\ntol_val = 10.0\n");
    let o = run("phi", &sloppy, dir.path(), &[]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("not certified decreasing"), "{}", stderr(&o));
}

#[test]
fn multiplicity_on_coord_power() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "n = 2\nrho = 1.0\nrho_tilde = 0.25\n[functional]\nname = \"COORD_POWER\"\n";
    let o = run("multiplicity", cfg, dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("out/multiplicity.json")).unwrap();
    let report: MultiplicityReport = serde_json::from_str(&text).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["outcome"], "certified");
    assert_eq!(v["solutions"].as_array().unwrap().len(), 2);
    assert!(v["lambda_star"].as_f64().unwrap() > 0.0);
    assert_eq!(report.rho_tilde, 0.25);
}

#[test]
fn multiplicity_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // radial: the maxima form a whole sphere, no isolated pair
    let radial = NORM_POWER.replace("n = 2", "n = 2\nrho_tilde = 0.2");
    let o = run("multiplicity", &radial, dir.path(), &[]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/multiplicity.json")).unwrap()).unwrap();
    assert_eq!(v["outcome"], "not_found");
    assert_eq!(v["radial"], true);
    assert_eq!(v["bracket"].as_array().unwrap().len(), 2);

    let outside = NORM_POWER.replace("n = 2", "n = 2\nrho_tilde = 0.9");
    let o = run("multiplicity", &outside, dir.path(), &[]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("psi range"), "{}", stderr(&o));

    let o = run("multiplicity", NORM_POWER, dir.path(), &[]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("rho_tilde"));
}

#[test]
fn two_bump_has_a_psi_jump_pair() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "n = 2\nrho = 1.0\nrho_tilde = 0.45\n[functional]\nname = \"TWO_BUMP\"\n";
    let o = run("multiplicity", cfg, dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/multiplicity.json")).unwrap()).unwrap();
    assert_eq!(v["case"], "psi_jump");
}

#[test]
fn help_exits_0() {
    let o = Command::new(BIN).arg("--help").output().unwrap();
    assert_eq!(code(&o), 0);
    let out = String::from_utf8_lossy(&o.stdout);
    for cmd in ["eta", "verify", "phi", "multiplicity"] {
        assert!(out.contains(cmd));
    }
}
