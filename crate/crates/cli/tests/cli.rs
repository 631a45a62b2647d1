use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nonmarkov")).args(args).current_dir(cwd).output().unwrap()
}

fn ok(args: &[&str], cwd: &Path) -> Output {
    let out = run(args, cwd);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn column(rows: &[Vec<String>], c: usize) -> Vec<f64> {
    rows.iter().filter(|r| !r[c].is_empty()).map(|r| r[c].parse().unwrap()).collect()
}

#[test]
fn fig3_is_deterministic_and_monotone() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        ok(&["fig3", "--j-max", "40", "--out", out], dir.path());
    }
    let a = read(dir.path().join("a/fig3.csv"));
    assert_eq!(a, read(dir.path().join("b/fig3.csv")));
    assert_eq!(read(dir.path().join("a/fig3.meta.json")), read(dir.path().join("b/fig3.meta.json")));
    assert!(a.starts_with("gamma,j,C_j_bits\n"));
    let rows = csv_rows(&a);
    assert_eq!(rows.len(), 3 * 41);
    let per_gamma: Vec<Vec<f64>> = rows.chunks(41).map(|c| column(c, 2)).collect();
    for s in &per_gamma {
        assert_eq!(s[0], 0.0);
        assert!(s.windows(2).all(|w| w[1] >= w[0]));
    }
    assert!(per_gamma[2].iter().zip(&per_gamma[0]).all(|(hi, lo)| hi >= lo));
    let meta: serde_json::Value = serde_json::from_str(&read(dir.path().join("a/fig3.meta.json"))).unwrap();
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
    assert!(meta["version"].as_str().unwrap().starts_with("nonmarkov v"));
    assert!(meta["notes"][0].as_str().unwrap().contains("implementation-chosen"));
}

#[test]
fn markovian_model_measures_vanish() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["measure", "--model", "ruqdm", "--gamma", "0.5,2", "--k", "8", "--out", "o"], dir.path());
    for g in ["0.5", "2"] {
        let rows = csv_rows(&read(dir.path().join(format!("o/measure_G{g}.csv"))));
        assert_eq!(rows.len(), 8);
        assert!(column(&rows, 1).iter().chain(&column(&rows, 2)).all(|v| v.abs() < 1e-10));
        assert_eq!(rows[7][1], "");
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "k = 6\nout = \"from_file\"\n[model]\nkind = \"xx\"\ngamma = [1.0]\n").unwrap();
    ok(&["measure", "--config", "c.toml", "--k", "4"], dir.path());
    let rows = csv_rows(&read(dir.path().join("from_file/measure_G1.csv")));
    assert_eq!(rows.len(), 4);
    let meta: serde_json::Value = serde_json::from_str(&read(dir.path().join("from_file/measure_G1.meta.json"))).unwrap();
    assert_eq!(meta["config"]["k"], 4);
}

#[test]
fn json_format_has_same_values() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["measure", "--k", "5", "--out", "c"], dir.path());
    ok(&["measure", "--k", "5", "--out", "j", "--format", "json"], dir.path());
    let rows = csv_rows(&read(dir.path().join("c/measure_G1.csv")));
    let doc: serde_json::Value = serde_json::from_str(&read(dir.path().join("j/measure_G1.json"))).unwrap();
    let ee: Vec<f64> = doc["rows"].as_array().unwrap().iter().map(|r| r[2].as_f64().unwrap()).collect();
    assert_eq!(ee, column(&rows, 2));
    assert!(doc["rows"][4][1].is_null());
    assert_eq!(doc["metadata"]["experiment"], "measure");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("bad.json"), r#"{"d": 2, "D": 1, "kraus": [[[[1, 0], [0, 0]], [[0, 0], 5]]]}"#).unwrap();
    let out = run(&["measure", "--model", "channel", "--channel", "bad.json"], p);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kraus[0][1][1]"));

    let out = run(&["measure", "--model", "channel", "--channel", "missing.json"], p);
    assert_eq!(out.status.code(), Some(3));

    std::fs::write(p.join("c.toml"), "bogus = 1\n").unwrap();
    assert_eq!(run(&["measure", "--config", "c.toml"], p).status.code(), Some(2));
    assert_eq!(run(&["fig2b", "--k", "4"], p).status.code(), Some(2));
    assert_eq!(run(&["measure", "--n", "2"], p).status.code(), Some(2));

    let out = run(&["build", "--k", "5", "--materialize", "--out", "r"], p);
    assert_eq!(out.status.code(), Some(4));
    assert!(!p.join("r").join("build_G1_pt.json").exists());
}

#[test]
fn build_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(&["build", "--gamma", "2", "--n", "0.3", "--k", "3", "--materialize", "--out", "b"], p);
    for f in ["build_G2_pt.json", "build_G2_channel.json", "build_G2_choi.json"] {
        assert!(p.join("b").join(f).exists(), "{f}");
    }
    ok(&["measure", "--gamma", "2", "--n", "0.3", "--k", "3", "--out", "direct"], p);
    ok(&["measure", "--model", "target", "--target", "b/build_G2_pt.json", "--out", "file"], p);
    let direct = csv_rows(&read(p.join("direct/measure_G2.csv")));
    let from_file = csv_rows(&read(p.join("file/measure.csv")));
    assert_eq!(direct, from_file);
}

#[test]
fn reconstruct_recovers_random_target() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("c.toml"), "[fit]\nk_schedule = [2, 3, 4]\nrestarts = 1\n").unwrap();
    ok(&["reconstruct", "--config", "c.toml", "--model", "random", "--kraus-rank", "4", "--k", "4", "--seed", "3", "--out", "r"], p);
    let doc: serde_json::Value = serde_json::from_str(&read(p.join("r/reconstruct_fit.json"))).unwrap();
    assert!(doc["report"]["final_loss"].as_f64().unwrap() < 1e-8);
    assert_eq!(doc["report"]["converged"], true);
    assert!(p.join("r/reconstruct_ansatz.json").exists());
    assert_eq!(csv_rows(&read(p.join("r/reconstruct.csv"))).len(), 4);
}

#[test]
fn fig2a_direct_and_fitted_routes_agree() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    for out in ["a", "b"] {
        ok(&["fig2a", "--gamma", "0", "--restarts", "1", "--seed", "1", "--out", out], p);
    }
    for f in ["fig2a_G0.csv", "fig2a_G0_fit.json", "fig2a_G0_ansatz.json"] {
        assert_eq!(read(p.join("a").join(f)), read(p.join("b").join(f)), "{f}");
    }
    ok(&["measure", "--gamma", "0", "--out", "m"], p);
    let fitted = csv_rows(&read(p.join("a/fig2a_G0.csv")));
    let direct = csv_rows(&read(p.join("m/measure_G0.csv")));
    for j in 8..=14 {
        let (f, d): (f64, f64) = (fitted[j - 1][2].parse().unwrap(), direct[j - 1][2].parse().unwrap());
        assert!((f - d).abs() < 0.05, "j={j}: fitted {f} vs direct {d}");
        let o: f64 = fitted[j - 1][1].parse().unwrap();
        assert!((0.9..=1.05).contains(&o));
    }
}
