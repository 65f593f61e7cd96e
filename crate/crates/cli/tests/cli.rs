use std::path::Path;
use std::process::{Command, Output};

fn mml(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mml"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn threshold_on_bilinear_reports_zero_thresholds_and_note() {
    let dir = tempfile::tempdir().unwrap();
    let out = mml(&["threshold", "--game", "bilinear", "--out", "t"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = json(&dir.path().join("t/summary.json"));
    assert_eq!(s["h_star_continuous"], 0.0);
    assert_eq!(s["h_star_discrete"], 0.0);
    let notes = s["notes"].as_array().unwrap();
    assert!(notes.iter().any(|n| n.as_str().unwrap().contains("bilinear")));
    let csv = std::fs::read_to_string(dir.path().join("t/threshold.csv")).unwrap();
    assert!(csv.starts_with("lambda_re,lambda_im,bound_continuous,bound_discrete\n"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn threshold_on_quadratic_config_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        "command = \"threshold\"\ngame = \"quad_test\"\nparams = { h = 0.01, beta = 0.0, rho = 0.5, eps = 1e-3 }\noutput_dir = \"o\"\n",
    )
    .unwrap();
    let out = mml(&["threshold", "--config", "run.toml"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = json(&dir.path().join("o/summary.json"));
    let disc = 2.0 * 1e-3f64.sqrt() * 0.4 / 1.16;
    let cont = 2.0 * 1e-3f64.sqrt() * 0.4 / 0.84;
    assert!((s["h_star_discrete"].as_f64().unwrap() - disc).abs() < 1e-12);
    assert!((s["h_star_continuous"].as_f64().unwrap() - cont).abs() < 1e-12);
    assert_eq!(s["assumption_rotational"], true);
}

#[test]
fn threshold_without_known_equilibrium_locates_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = mml(&["threshold", "--game", "f1", "--out", "f"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = json(&dir.path().join("f/summary.json"));
    assert!(s["notes"].as_array().unwrap().iter().any(|n| n.as_str().unwrap().contains("Newton")));
}

#[test]
fn compare_on_f1_writes_three_trajectories_and_distances() {
    let dir = tempfile::tempdir().unwrap();
    let out = mml(&["compare", "--game", "f1", "--steps", "200", "--out", "c"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["adam.csv", "ode.csv", "sign.csv"] {
        let text = std::fs::read_to_string(dir.path().join("c").join(f)).unwrap();
        assert_eq!(text.lines().count(), 202, "{f}");
    }
    let d = std::fs::read_to_string(dir.path().join("c/distances.csv")).unwrap();
    assert!(d.starts_with("step,dist_ode,dist_sign\n0,0.0,0.0\n"));
}

#[test]
fn simulate_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for out_dir in ["a", "b"] {
        let out = mml(&["simulate", "--game", "quad_cc", "--steps", "300", "--beta", "-0.3", "--out", out_dir], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(dir.path().join("a/trajectory.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/trajectory.csv")).unwrap();
    assert_eq!(a, b);
    let s = json(&dir.path().join("a/summary.json"));
    assert_eq!(s["params"]["beta"], -0.3);
}

#[test]
fn small_heatmap_with_svg() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("h.toml"),
        "game = \"quad_cc\"\n[grid]\nbeta = [-0.5, 0.0, 0.5]\nh = { start = 0.005, stop = 0.05, count = 6 }\nmax_steps = 5000\n",
    )
    .unwrap();
    let out = mml(&["heatmap", "--config", "h.toml", "--svg", "--out", "h"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("h/heatmap.csv")).unwrap();
    assert!(csv.starts_with("beta,h,rate,verdict\n"));
    assert_eq!(csv.lines().count(), 19);
    assert!(std::fs::read_to_string(dir.path().join("h/heatmap.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn igr_writes_one_file_per_cell_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("i.toml"), "game = \"f3\"\nsteps = 100\n[grid]\nbeta = [0.0, 0.5]\nrho = [0.5, 0.9]\n").unwrap();
    let out = mml(&["igr", "--config", "i.toml", "--out", "i"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(dir.path().join("i/igr_summary.csv")).unwrap();
    assert!(summary.starts_with("beta,rho,k,final_avg_s\n"));
    assert_eq!(summary.lines().count(), 5);
    let cell = std::fs::read_to_string(dir.path().join("i/igr_beta0.5_rho0.9.csv")).unwrap();
    assert!(cell.starts_with("step,avg_s\n1,"));
    assert_eq!(cell.lines().count(), 102);
}

#[test]
fn invalid_beta_gives_machine_readable_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = mml(&["simulate", "--beta", "1.5"], dir.path());
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    let record: serde_json::Value = serde_json::from_str(stderr.lines().last().unwrap()).unwrap();
    assert_eq!(record["error"]["kind"], "parameter");
    assert!(record["error"]["message"].as_str().unwrap().contains("(-1, 1)"));
}

#[test]
fn unknown_game_lists_valid_ids() {
    let dir = tempfile::tempdir().unwrap();
    let out = mml(&["threshold", "--game", "nope"], dir.path());
    assert!(!out.status.success());
    let record: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&out.stderr).lines().last().unwrap()).unwrap();
    assert_eq!(record["error"]["kind"], "unknown_game");
    assert!(record["error"]["message"].as_str().unwrap().contains("quad_cc"));
}

#[test]
fn unreadable_config_reports_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = mml(&["simulate", "--config", "missing.toml"], dir.path());
    assert!(!out.status.success());
    let record: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&out.stderr).lines().last().unwrap()).unwrap();
    assert_eq!(record["error"]["kind"], "io");
    assert!(record["error"]["message"].as_str().unwrap().contains("missing.toml"));
}

#[test]
fn selftest_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = mml(&["selftest", "--out", "s"], dir.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("selftest:"), "{stdout}");
    let s = json(&dir.path().join("s/selftest.json"));
    assert_eq!(s["checks"].as_array().unwrap().len(), 21);
    assert!(out.status.success(), "{stdout}");
}

#[test]
fn error_order_on_f1_writes_table_and_slopes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("e.toml"), "game = \"f1\"\n[error_order]\ninits = 4\n").unwrap();
    let out = mml(&["error-order", "--config", "e.toml", "--out", "e"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("e/error_order.csv")).unwrap();
    assert!(csv.starts_with("h,warmup,err_adam_ode,err_sign_ode\n0.02,"));
    assert_eq!(csv.lines().count(), 5);
    let s = json(&dir.path().join("e/summary.json"));
    assert!(s["slope_adam_ode"].as_f64().unwrap() > s["slope_sign_ode"].as_f64().unwrap());
}
