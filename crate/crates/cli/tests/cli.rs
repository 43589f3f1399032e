use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn vpmin(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vpmin"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .env_remove("VPMIN_OUT")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn minimize_writes_profile_and_result() {
    let dir = tempfile::tempdir().unwrap();
    let o = vpmin(
        &[
            "minimize", "--mu", "1.5", "--mass", "1", "--j", "1", "--k11", "1", "--grid-n", "2000", "--r-max", "20",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let res = json(&dir.path().join("result.json"));
    assert_eq!(res["schema_version"], 1);
    assert!(res["energy"]["total"].as_f64().unwrap() < 0.0);
    assert_eq!(res["k11_source"], "input");
    let csv = fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# schema_version=1"));
    assert_eq!(lines.next(), Some("r,rho,U,m_enc"));
    assert_eq!(lines.count(), 2000);
}

#[test]
fn invalid_parameters_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["minimize", "--mu", "4.0"][..],
        &["minimize", "--mass", "-1"],
        &["minimize", "--damping", "0"],
        &["minimize", "--spacing", "cubic"],
        &["verify", "nonsense"],
        &["minimize", "--no-such-flag"],
    ] {
        let o = vpmin(args, dir.path());
        assert_eq!(code(&o), 3, "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn non_convergence_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = vpmin(&["minimize", "--max-iter", "3"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("not converged"));
}

#[test]
fn k11_oracle_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let o = vpmin(
        &["minimize", "--mu", "0.5", "--k11", "oracle", "--grid-n", "500"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let res = json(&dir.path().join("result.json"));
    assert_eq!(res["k11_source"], "oracle");
    assert!((res["k11"].as_f64().unwrap() - 0.108668).abs() < 1e-5);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# test run\nmu = 2.5\nmass = 2\ngrid_n = 400\n").unwrap();
    let o = vpmin(
        &["minimize", "--config", cfg.to_str().unwrap(), "--mass", "3"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let res = json(&dir.path().join("result.json"));
    assert_eq!(res["mu"], 2.5);
    assert_eq!(res["mass"], 3.0);
    assert_eq!(res["grid_n"], 400);
}

#[test]
fn verify_scaling_and_lane_emden() {
    let dir = tempfile::tempdir().unwrap();
    let o = vpmin(&["verify", "scaling", "--mu", "2", "--seed", "7"], dir.path());
    assert_eq!(code(&o), 0);
    let rep = json(&dir.path().join("verify_scaling.json"));
    assert_eq!(rep["passed"], true);
    assert_eq!(rep["seed"], 7);
    assert_eq!(rep["properties"][0]["count"], 150);

    let o = vpmin(&["verify", "lane-emden", "--mu", "1.5"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn report_pipeline_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&vpmin(&["minimize", "--grid-n", "800"], dir.path())), 0);
    assert_eq!(code(&vpmin(&["verify", "sequences", "--seed", "3"], dir.path())), 0);
    assert_eq!(code(&vpmin(&["verify", "scaling", "--seed", "3"], dir.path())), 0);
    assert_eq!(code(&vpmin(&["report"], dir.path())), 0);
    let mut first = json(&dir.path().join("report.json"));
    assert_eq!(first["all_passed"], true);
    assert_eq!(first["suites"].as_array().unwrap().len(), 2);
    assert!(first["polytrope"]["xi1"].as_f64().unwrap() > 6.8);

    assert_eq!(code(&vpmin(&["verify", "scaling", "--seed", "3"], dir.path())), 0);
    assert_eq!(code(&vpmin(&["report"], dir.path())), 0);
    let mut second = json(&dir.path().join("report.json"));
    first.as_object_mut().unwrap().remove("generated_at");
    second.as_object_mut().unwrap().remove("generated_at");
    assert_eq!(first, second);
}

#[test]
fn report_on_empty_dir_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&vpmin(&["report"], dir.path())), 3);
    assert_eq!(code(&vpmin(&["report"], &dir.path().join("missing"))), 3);
}

#[test]
fn rearrange_demo() {
    let dir = tempfile::tempdir().unwrap();
    let o = vpmin(&["rearrange", "--cells", "8", "--seed", "5"], dir.path());
    assert_eq!(code(&o), 0);
    let rep = json(&dir.path().join("rearrange.json"));
    assert_eq!(rep["riesz_holds"], true);
    assert!(rep["coulomb_after"].as_f64().unwrap() >= rep["coulomb_before"].as_f64().unwrap());
    assert!(dir.path().join("rearrange_rho_star.csv").is_file());
    // same seed, same bytes
    let before = fs::read(dir.path().join("rearrange.json")).unwrap();
    assert_eq!(
        code(&vpmin(&["rearrange", "--cells", "8", "--seed", "5"], dir.path())),
        0
    );
    assert_eq!(before, fs::read(dir.path().join("rearrange.json")).unwrap());
}

#[test]
fn reduce_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = vpmin(&["reduce-check", "--mu", "1.5", "--k11", "oracle"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rep = json(&dir.path().join("reduce_check.json"));
    assert_eq!(rep["passed"], true);
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_vpmin"))
        .args(["rearrange", "--cells", "4"])
        .env("VPMIN_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("rearrange.json").is_file());
}
