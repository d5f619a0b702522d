use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gaborstab_cli::output::RunManifest;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gaborstab"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn run_config(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg(cmd).arg("--config").arg(config).arg("--out").arg(out).args(extra).output().expect("binary runs")
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

fn header(path: &Path) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.headers().unwrap().iter().map(str::to_string).collect()
}

fn column(rows: &[Vec<String>], k: usize) -> Vec<f64> {
    rows.iter().filter(|r| r[0] != "summary").map(|r| r[k].parse().unwrap()).collect()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn expexp_self_spectrogram_peaks_at_one_quarter() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config("spectrogram", &configs().join("expexp-spectrogram.toml"), tmp.path(), &["--svg"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = tmp.path().join("spectrogram.csv");
    assert_eq!(header(&csv), ["x", "xi", "modulus"]);
    let origin = rows(&csv)
        .into_iter()
        .find(|r| r[0].parse::<f64>().unwrap() == 0.0 && r[1].parse::<f64>().unwrap() == 0.0)
        .unwrap();
    assert!((origin[2].parse::<f64>().unwrap() - 0.25).abs() < 1e-6);

    let manifest: RunManifest = serde_json::from_slice(&fs::read(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.command, "spectrogram");
    assert_eq!(manifest.files, ["spectrogram.csv", "spectrogram.svg"]);
    assert!(manifest.files.iter().all(|f| tmp.path().join(f).exists()));
    assert_eq!(manifest.grid.unwrap().nx, 65);
}

#[test]
fn zero_signal_gives_an_all_zero_spectrogram() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("expexp-spectrogram.toml")).unwrap().replace("kind = \"window\"", "kind = \"zero\"");
    let cfg = write_config(tmp.path(), &text);
    let out = run_config("spectrogram", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(0));
    let values = column(&rows(&tmp.path().join("out/spectrogram.csv")), 2);
    assert_eq!(values.len(), 65 * 65);
    assert!(values.iter().all(|v| *v == 0.0));
}

#[test]
fn malformed_config_names_the_offending_key() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("expexp-spectrogram.toml")).unwrap().replace("nxi = 65", "n_xi = 65");
    let cfg = write_config(tmp.path(), &text);
    let out = run_config("spectrogram", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("n_xi") && err.contains("line"), "{err}");

    let missing = run_config("spectrogram", &tmp.path().join("absent.toml"), &tmp.path().join("out"), &[]);
    assert_ne!(missing.status.code(), Some(0));
    let no_config = run(&["stability"], &tmp.path().join("out"));
    assert_eq!(no_config.status.code(), Some(2));
}

#[test]
fn admissibility_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| run(args, tmp.path()).status.code();
    assert_eq!(code(&["admissible", "onesided", "3", "1"]), Some(0));
    assert_eq!(code(&["admissible", "onesided", "1.5", "1"]), Some(1));
    assert_eq!(code(&["admissible", "expexp", "19", "3"]), Some(1));
    // the frequency rate of the ExpExp control function is pi^2
    assert_eq!(code(&["admissible", "expexp", "21", "3"]), Some(1));
    assert_eq!(code(&["admissible", "expexp", "3", "21"]), Some(0));
    assert_eq!(code(&["admissible", "triangle", "3", "1"]), Some(2));
    assert_eq!(code(&["admissible", "onesided", "-1", "1"]), Some(2));

    let out = run(&["admissible", "onesided", "3", "1"], tmp.path());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["admissible"], true);
    assert!(report["integral_estimate"].as_f64().unwrap() > 0.0);
    assert!(report["tail_slope"].as_f64().unwrap() < 0.0);
    assert!(tmp.path().join("admissibility.json").exists());
}

#[test]
fn poincare_configs_reproduce_the_oracles() {
    let tmp = tempfile::tempdir().unwrap();
    let study = |name: &str| {
        let out = run_config("poincare", &configs().join(format!("{name}.toml")), &tmp.path().join(name), &[]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let csv = tmp.path().join(name).join("poincare.csv");
        assert_eq!(header(&csv), ["level", "nodes", "c_p", "cheeger_h", "cheeger_bound", "divergent"]);
        rows(&csv)
    };
    let uniform = study("uniform-1d");
    let c = column(&uniform, 2);
    let target = 1.0 / (std::f64::consts::PI * std::f64::consts::PI);
    assert!((c[2] - target).abs() < 0.01 * target);
    assert!(c.windows(2).all(|w| (w[1] - target).abs() <= (w[0] - target).abs()));
    assert_eq!(uniform.last().unwrap()[5], "false");

    let gaussian = column(&study("gaussian-1d"), 2);
    assert!((gaussian[2] - 1.0).abs() < 0.02);

    let bumps = study("two-bump");
    assert!(column(&bumps, 3).iter().all(|h| *h < 0.05));
}

#[test]
fn stability_identity_recipe_has_zero_ratios() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config("stability", &configs().join("identity.toml"), tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = tmp.path().join("stability.csv");
    assert_eq!(
        header(&csv),
        ["case_id", "name", "window", "recipe", "lhs", "d_val", "c_p", "ratio", "raw_ratio", "uniqueness_alarm"]
    );
    let r = rows(&csv);
    assert_eq!(r.len(), 5);
    assert!(column(&r, 7).iter().all(|v| *v == 0.0));
    assert_eq!(r[4][0], "summary");
    let baseline: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("baseline.json")).unwrap()).unwrap();
    assert_eq!(baseline["max_ratio"], 0.0);
}

#[test]
fn stability_sweeps_have_monotone_constants_and_bounded_ratios() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config("stability", &configs().join("onesided-standard.toml"), tmp.path(), &["--jobs", "2", "--svg"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = rows(&tmp.path().join("stability.csv"));
    assert_eq!(r.len(), 8);
    let sweep: Vec<_> = r.iter().filter(|row| row[3].starts_with("instability")).cloned().collect();
    let c_p = column(&sweep, 6);
    assert!(c_p.windows(2).all(|w| w[1] > w[0]), "{c_p:?}");
    let noise: Vec<_> = r.iter().filter(|row| row[3].starts_with("perturbation")).cloned().collect();
    let ratios = column(&noise, 7);
    assert!(ratios.iter().all(|v| v.is_finite() && *v > 0.0 && *v < 1.0), "{ratios:?}");
    assert!(tmp.path().join("stability.svg").exists());
}

#[test]
fn verify_suites_pass_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    for suite in ["sinh", "logconcave"] {
        let out = run(&["verify", suite], tmp.path());
        assert_eq!(out.status.code(), Some(0), "{suite}: {}", String::from_utf8_lossy(&out.stderr));
        let xml = fs::read_to_string(tmp.path().join(format!("junit-{suite}.xml"))).unwrap();
        assert!(xml.contains("failures=\"0\""));
        let report: serde_json::Value =
            serde_json::from_slice(&fs::read(tmp.path().join(format!("verify-{suite}.json"))).unwrap()).unwrap();
        assert_eq!(report["passed"], true);
    }
    assert_eq!(run(&["verify", "nonsense"], tmp.path()).status.code(), Some(2));
}

#[test]
fn zero_tolerance_planchshift_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["verify", "planchshift", "--tol-scale", "0"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let xml = fs::read_to_string(tmp.path().join("junit-planchshift.xml")).unwrap();
    assert!(xml.contains("tests=\"20\" failures=\"20\""), "{xml}");

    let cfg = write_config(tmp.path(), "[tol]\nplanchshift = 0.0\n");
    let out = run_config("verify", &cfg, &tmp.path().join("cfg"), &[]);
    // the suite name is positional
    assert_eq!(out.status.code(), Some(2));
    let out = bin()
        .args(["verify", "planchshift", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("cfg"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
