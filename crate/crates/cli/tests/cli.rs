use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn gravdec(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gravdec"))
        .args(args)
        .arg("--output-dir")
        .arg(dir)
        .env_remove("GRAVDEC_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = gravdec(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn summary(dir: &Path) -> Value {
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    v["summary"].clone()
}

fn manifest_value(dir: &Path, key: &str) -> String {
    let text = fs::read_to_string(dir.join("manifest.txt")).unwrap();
    let prefix = format!("{key} = ");
    text.lines().find_map(|l| l.strip_prefix(&prefix)).unwrap_or_else(|| panic!("{key} missing")).to_string()
}

#[test]
fn mirror_preset_headline() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["dp-rate", "--preset", "mirror"]);
    let s = summary(tmp.path());
    let tau = s["result"]["tau_d"].as_f64().unwrap();
    let delta = s["result"]["delta_hbar_c_per_cm"].as_f64().unwrap();
    assert!((tau / 1.5e9 - 1.0).abs() < 0.03, "{tau}");
    assert!((delta / 2.2e-20 - 1.0).abs() < 0.03, "{delta}");
    assert_eq!(manifest_value(tmp.path(), "dp.side"), "1e-3 cm");
    assert_eq!(manifest_value(tmp.path(), "dp.d"), "1e-11 cm");
    assert_eq!(manifest_value(tmp.path(), "dp.mass"), "5e-12 kg");

    let csv = fs::read_to_string(tmp.path().join("delta.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("d,delta,delta_hbar_c_per_cm,tau_d,stderr"));
    assert!(lines.next().unwrap().starts_with("1.00000000e-13,"));
    assert!(!csv.contains('\r'));
}

#[test]
fn zero_displacement_is_infinite() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["dp-rate", "--d", "0"]);
    let s = summary(tmp.path());
    assert_eq!(s["result"]["delta"].as_f64(), Some(0.0));
    assert_eq!(s["result"]["tau_d"].as_str(), Some("+inf"));
    let csv = fs::read_to_string(tmp.path().join("delta.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains(",+inf,"));
}

#[test]
fn identical_configurations_give_identical_csv() {
    let runs: [&[&str]; 3] = [
        &["decohere", "--trajectories", "400", "--seed", "7"],
        &["dp-rate", "--method", "mc", "--samples", "20000", "--seed", "11"],
        &["sn", "evolve", "--steps", "50"],
    ];
    for args in runs {
        let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
        ok(a.path(), args);
        ok(b.path(), args);
        for entry in fs::read_dir(a.path()).unwrap() {
            let name = entry.unwrap().file_name();
            if name.to_string_lossy().ends_with(".csv") {
                let x = fs::read(a.path().join(&name)).unwrap();
                let y = fs::read(b.path().join(&name)).unwrap();
                assert!(x == y, "{args:?}: {name:?} differs");
            }
        }
    }
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    ok(a.path(), &["decohere", "--trajectories", "400", "--seed", "7"]);
    ok(b.path(), &["decohere", "--trajectories", "400", "--seed", "8"]);
    assert_ne!(fs::read(a.path().join("coherence.csv")).unwrap(), fs::read(b.path().join("coherence.csv")).unwrap());
}

#[test]
fn precedence_of_configuration_sources() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "# comment\ncommand = dp-rate\ndp.method = surface\ndp.convention = diosi\ndp.side = 2e-3 cm\n").unwrap();
    let out = tmp.path().join("out");
    let c = cfg.to_str().unwrap();
    ok(&out, &["--config", c, "--set", "dp.convention=penrose", "--set", "dp.side=3e-3 cm", "dp-rate", "--side", "4e-3 cm"]);
    assert_eq!(manifest_value(&out, "dp.method"), "surface");
    assert_eq!(manifest_value(&out, "dp.convention"), "penrose");
    assert_eq!(manifest_value(&out, "dp.side"), "4e-3 cm");
    assert_eq!(summary(&out)["result"]["method"], "surface_expansion");

    // A preset sits below the file.
    let out = tmp.path().join("preset");
    ok(&out, &["--config", c, "dp-rate", "--preset", "mirror"]);
    assert_eq!(manifest_value(&out, "dp.side"), "2e-3 cm");

    let keys: Vec<String> = fs::read_to_string(out.join("manifest.txt"))
        .unwrap()
        .lines()
        .map(|l| l.split(" = ").next().unwrap().to_string())
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert!(keys.contains(&"constants.g".to_string()) && keys.contains(&"dp.samples".to_string()));
}

#[test]
fn output_directory_from_environment() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, format!("output_dir = {}\n", tmp.path().join("from_file").display())).unwrap();
    let env_dir = tmp.path().join("from_env");
    let status = Command::new(env!("CARGO_BIN_EXE_gravdec"))
        .args(["--config", cfg.to_str().unwrap(), "dp-rate"])
        .env("GRAVDEC_OUTPUT_DIR", &env_dir)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert!(env_dir.join("summary.json").exists());
    assert!(!tmp.path().join("from_file").exists());
}

fn expect_failure(dir: &Path, args: &[&str], code: i32, kind: &str) {
    let out = gravdec(dir, args);
    assert_eq!(out.status.code(), Some(code), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    if !kind.is_empty() {
        let rec: Value = serde_json::from_str(&fs::read_to_string(dir.join("error.json")).unwrap()).unwrap();
        assert_eq!(rec["error"], kind);
        assert_eq!(rec["exit_code"], code);
    }
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let d = |name: &str| tmp.path().join(name);
    let bad = d("bad.cfg");
    fs::write(&bad, "dp.method quadratic\n").unwrap();
    let other = d("other.cfg");
    fs::write(&other, "command = com-test\n").unwrap();

    expect_failure(&d("a"), &["dp-rate", "--set", "dp.nope=1"], 2, "");
    expect_failure(&d("a"), &["--config", bad.to_str().unwrap(), "dp-rate"], 2, "");
    expect_failure(&d("a"), &["--config", other.to_str().unwrap(), "dp-rate"], 2, "");
    expect_failure(&d("a"), &["frobnicate"], 2, "");
    expect_failure(&d("b"), &["dp-rate", "--mass", "-1"], 3, "invalid_parameter");
    expect_failure(&d("c"), &["dp-rate", "--method", "magic"], 3, "invalid_parameter");
    expect_failure(&d("e"), &["decohere", "--dt", "0.1 s"], 3, "invalid_parameter");
    expect_failure(&d("f"), &["sn", "ground-state", "--set", "sn.ground.max_iter=3"], 4, "non_convergence");
    expect_failure(&d("g"), &["--config", d("missing.cfg").to_str().unwrap(), "dp-rate"], 5, "");
    expect_failure(&d("h"), &["selftest", "--criteria", "99"], 3, "invalid_parameter");
}

#[test]
fn ground_state_methods_agree_through_cli() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("it"), tmp.path().join("shoot"));
    ok(&a, &["sn", "ground-state"]);
    ok(&b, &["sn", "ground-state", "--method", "radial-shooting"]);
    let ea = summary(&a)["energy"].as_f64().unwrap();
    let eb = summary(&b)["energy"].as_f64().unwrap();
    assert!((ea / eb - 1.0).abs() < 1e-4, "{ea} {eb}");
    assert!((ea + 0.1627692).abs() < 1e-5);
    let profile = fs::read_to_string(a.join("profile.csv")).unwrap();
    assert_eq!(profile.lines().next(), Some("r,density,phi"));
    assert_eq!(profile.lines().count(), 1024);
}

#[test]
fn free_evolution_spreads() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["sn", "evolve", "--set", "constants.g=0", "--steps", "400"]);
    let s = summary(tmp.path());
    let t = s["t_final"].as_f64().unwrap();
    let w = s["final_width"].as_f64().unwrap();
    let exact = (1.0 + (t / 2.0).powi(2)).sqrt();
    assert!((w / exact - 1.0).abs() < 5e-3, "{w} vs {exact}");
    assert!(s["max_energy_drift"].as_f64().unwrap() < 1e-10);
}

#[test]
fn com_test_verdicts() {
    let tmp = TempDir::new().unwrap();
    let (rel, ext) = (tmp.path().join("rel"), tmp.path().join("ext"));
    ok(&rel, &["com-test", "--set", "com.n=128"]);
    ok(&ext, &["com-test", "--set", "com.n=128", "--potential", "external"]);
    assert_eq!(summary(&rel)["decoupled"], true);
    assert_eq!(summary(&ext)["decoupled"], false);
    let csv = fs::read_to_string(rel.join("com_marginals.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,R,density"));
}

#[test]
fn selftest_subset() {
    let tmp = TempDir::new().unwrap();
    let out = gravdec(tmp.path(), &["selftest", "--criteria", "2,8"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("criterion 2 [PASS]") && stdout.contains("criterion 8 [PASS]"), "{stdout}");
    assert_eq!(summary(tmp.path())["passed"], true);
}
