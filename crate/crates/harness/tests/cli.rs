use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rcmaes_core::suite::load_suite;
use rcmaes_harness::convergence::read_history;
use rcmaes_harness::score::read_finals;

fn rcmaes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rcmaes")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("cfg.toml");
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

const SMALL: &str = "[suite]\nseed = 2\ndim = 3\ncount = 2\n[campaign]\npolicies = [\"rcmaes-active\", \"ipop-active\"]\nbudget_multiplier = 500\nruns = 3\n";

#[test]
fn run_score_and_convergence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let out_s = out.display().to_string();

    let r = rcmaes(&["--config", &cfg, "--out", &out_s, "--workers", "2", "run"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let rows = read_finals(&out.join("finals.csv")).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 3);
    for row in &rows {
        assert!(row.evals_used <= 500 * 3);
        let policy = row.policy.as_str();
        let hist = read_history(&out.join("histories").join(policy).join(format!("{}_run{:02}.csv", row.problem, row.run))).unwrap();
        assert_eq!(hist.last().unwrap().1, row.final_f, "history and finals disagree");
        assert!(hist.windows(2).all(|w| w[1].1 < w[0].1 && w[1].0 > w[0].0));
    }
    assert_eq!(load_suite(out.join("problems.suite")).unwrap().len(), 2);

    let r = rcmaes(&["--config", &cfg, "--out", &out_s, "score"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(text.contains("rcmaes-active") && text.contains("W/T/L"), "{text}");

    // Recompute each policy's mean E straight from the CSV.
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let optima = [("F01", 100.0), ("F02", 200.0)];
    for (k, policy) in ["rcmaes-active", "ipop-active"].iter().enumerate() {
        let mut e_sum = 0.0;
        for (problem, fstar) in optima {
            let fs: Vec<f64> = rows
                .iter()
                .filter(|r| r.policy == *policy && r.problem == problem)
                .map(|r| r.final_f)
                .collect();
            let eps = fs.iter().map(|f| (f - fstar).max(0.0) / fstar).sum::<f64>() / fs.len() as f64;
            e_sum += eps / (1.0 + eps);
        }
        let reported = json["accuracy"]["mean"][k].as_f64().unwrap();
        assert!((reported - e_sum / 2.0).abs() < 1e-12, "{policy}: {reported} vs {}", e_sum / 2.0);
    }

    let r = rcmaes(&["--config", &cfg, "--out", &out_s, "convergence", "--problem", "F01", "--points", "11"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let curve = fs::read_to_string(out.join("convergence_F01.csv")).unwrap();
    let lines: Vec<&str> = curve.lines().collect();
    assert_eq!(lines[0], "evals_per_dim,rcmaes-active,ipop-active");
    assert_eq!(lines.len(), 12);

    let r = rcmaes(&["--config", &cfg, "--out", &out_s, "convergence", "--problem", "F99"]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let a = tmp.path().join("a").display().to_string();
    let b = tmp.path().join("b").display().to_string();
    assert!(rcmaes(&["--config", &cfg, "--out", &a, "run"]).status.success());
    assert!(rcmaes(&["--config", &cfg, "--out", &b, "--workers", "4", "run"]).status.success());
    assert_eq!(
        fs::read(Path::new(&a).join("finals.csv")).unwrap(),
        fs::read(Path::new(&b).join("finals.csv")).unwrap()
    );
    let c = tmp.path().join("c").display().to_string();
    assert!(rcmaes(&["--config", &cfg, "--out", &c, "--seed-offset", "100", "run"]).status.success());
    assert_ne!(
        fs::read(Path::new(&a).join("finals.csv")).unwrap(),
        fs::read(Path::new(&c).join("finals.csv")).unwrap()
    );
}

#[test]
fn config_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[campaign]\nrunz = 3\n");
    let r = rcmaes(&["--config", &cfg, "run"]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("config"));
    let r = rcmaes(&["--config", "/nonexistent/cfg.toml", "run"]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn unwritable_output_fails_before_running() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = blocker.join("sub").display().to_string();
    let r = rcmaes(&["--config", &cfg, "--out", &out, "run"]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn gen_suite_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("x.suite").display().to_string();
    let r = rcmaes(&["gen-suite", "--seed", "9", "--dim", "5", "--count", "12", "--path", &path]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let suite = load_suite(&path).unwrap();
    assert_eq!(suite, rcmaes_core::suite::generate_suite(9, 5, 12).unwrap());

    // A campaign can run from the saved file.
    let cfg = write_config(
        tmp.path(),
        &format!("[suite]\npath = \"{path}\"\n[campaign]\nbudget_multiplier = 100\nruns = 1\n"),
    );
    let out = tmp.path().join("o").display().to_string();
    assert!(rcmaes(&["--config", &cfg, "--out", &out, "run"]).status.success());
    assert_eq!(read_finals(&Path::new(&out).join("finals.csv")).unwrap().len(), 12);
}
