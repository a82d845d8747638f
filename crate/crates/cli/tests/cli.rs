use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use collide_charge::experiments::{read_ensemble_csv, summarize_ensemble};

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_collide-charge"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env("COLLIDE_CHARGE_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Rows of a `step,level,prob` CSV for one step.
fn snapshot(path: &Path, step: usize) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .filter_map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse::<usize>().unwrap() == step).then(|| f[2].parse().unwrap())
        })
        .collect()
}

/// `(mean_energy, ergotropy)` per row of a trajectory CSV.
fn trajectory(path: &Path) -> Vec<(f64, f64)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (f[1], f[2])
        })
        .collect()
}

#[test]
fn passive_regime_settles_on_the_gibbs_profile() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["regimes", "--fuel", "0.7", "0.3", "--steps", "10,3000"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("verdict: positive-recurrent"));
    let p = snapshot(&dir.path().join("regime_strictly-passive_snapshots.csv"), 3000);
    let r: f64 = 0.3 / 0.7;
    let z: f64 = (0..p.len()).map(|k| r.powi(k as i32)).sum();
    let tv: f64 = p.iter().enumerate().map(|(k, x)| (x - r.powi(k as i32) / z).abs()).sum::<f64>() / 2.0;
    assert!(tv < 1e-6, "tv = {tv}");
}

#[test]
fn mixed_and_active_regimes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["regimes", "--steps", "10,100,1000,2000"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for verdict in ["positive-recurrent", "null-recurrent", "transient"] {
        assert!(text.contains(&format!("verdict: {verdict}")));
    }
    let mixed = trajectory(&dir.path().join("regime_maximally-mixed_trajectory.csv"));
    assert!(mixed.iter().all(|&(_, e)| e < 1e-9));
    let active = trajectory(&dir.path().join("regime_active_trajectory.csv"));
    let means: Vec<f64> = [10, 100, 1000, 2000].iter().map(|&s| active[s].0).collect();
    assert!(means.windows(2).all(|w| w[1] > w[0]), "{means:?}");
}

#[test]
fn ensemble_is_deterministic_and_summary_round_trips() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["ensemble", "--d", "3", "--runs", "4", "--steps", "300", "--seed", "17"];
    let (oa, ob) = (run(a.path(), &args), run(b.path(), &args));
    assert!(oa.status.success() && ob.status.success());
    let csv_a = fs::read(a.path().join("ensemble.csv")).unwrap();
    assert_eq!(csv_a, fs::read(b.path().join("ensemble.csv")).unwrap());
    let rows = read_ensemble_csv(&csv_a[..]).unwrap();
    assert_eq!(rows.len(), 4 * 301);
    let summary = summarize_ensemble(&rows).to_report();
    assert_eq!(summary, stdout(&oa));
    assert_eq!(summary, fs::read_to_string(a.path().join("ensemble_summary.txt")).unwrap());
}

#[test]
fn mixed_fuel_ensemble_spreads_without_ergotropy() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["ensemble", "--d", "5", "--runs", "1", "--steps", "2000", "--seed", "3", "--fuel-class", "mixed"],
    );
    assert!(o.status.success());
    let rows = read_ensemble_csv(&fs::read(dir.path().join("ensemble.csv")).unwrap()[..]).unwrap();
    // one collision from the pure ground state can leave a non-monotone
    // profile; afterwards the ergotropy stays at zero
    assert!(rows[10..].iter().all(|r| r.ergotropy < 1e-6));
    assert!(rows[100..].windows(2).all(|w| w[1].mean_energy > w[0].mean_energy));
}

#[test]
fn ensemble_requires_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["ensemble", "--d", "3", "--runs", "1", "--steps", "5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_fills_in_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"d": 3, "runs": 2, "steps": 20, "seed": 5}"#).unwrap();
    let o = run(dir.path(), &["--config", cfg.to_str().unwrap(), "ensemble", "--runs", "3"]);
    assert!(o.status.success());
    let echo: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("config.resolved.json")).unwrap())
            .unwrap();
    assert_eq!(echo["command"], "ensemble");
    assert_eq!(echo["runs"], 3);
    assert_eq!(echo["d"], 3);
    assert_eq!(echo["seed"], 5);

    fs::write(&cfg, r#"{"dee": 3}"#).unwrap();
    let o = run(dir.path(), &["--config", cfg.to_str().unwrap(), "stationary"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn stationary_states() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["stationary", "--d", "2", "--seed-a", "4", "--seed-b", "9"]);
    assert!(o.status.success());
    let tv: f64 = stdout(&o)
        .lines()
        .find_map(|l| l.strip_prefix("tv_distance: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(tv < 1e-8);

    let o = run(dir.path(), &["stationary", "--d", "5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for key in ["ergotropy_a: ", "ergotropy_b: "] {
        let e: f64 = text.lines().find_map(|l| l.strip_prefix(key)).unwrap().parse().unwrap();
        assert!(e < 1e-8);
    }
    let csv = fs::read_to_string(dir.path().join("stationary.csv")).unwrap();
    assert!(csv.starts_with("series,level,prob\nfuel,1,"));
}

#[test]
fn classify_verdicts_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["classify", "--qubit", "0.7", "0.3", "--alpha", "const:1"]);
    assert!(stdout(&o).contains("verdict: positive-recurrent"));
    let o = run(dir.path(), &["classify", "--qubit", "0.5", "0.5"]);
    assert!(stdout(&o).contains("verdict: null-recurrent"));

    let identity = dir.path().join("identity.txt");
    fs::write(&identity, "3 1\n1 1 1\n2 2 1\n3 3 1\n").unwrap();
    let o = run(dir.path(), &["classify", "--matrix", identity.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(5));

    let o = run(dir.path(), &["classify", "--qubit", "0.7", "0.3", "--alpha", "linear"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(dir.path(), &["classify", "--matrix", "/nonexistent/matrix.txt"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sample_paths_are_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["sample", "--qubit", "0.3", "0.7", "--n", "300", "--horizon", "200", "--seed", "8", "--trials", "500"];
    let (oa, ob) = (run(a.path(), &args), run(b.path(), &args));
    assert!(oa.status.success());
    assert_eq!(stdout(&oa), stdout(&ob));
    let path = fs::read_to_string(a.path().join("path.csv")).unwrap();
    assert_eq!(path, fs::read_to_string(b.path().join("path.csv")).unwrap());
    assert_eq!(path.lines().count(), 202);
    assert!(stdout(&oa).contains("return_probability: "));
}
