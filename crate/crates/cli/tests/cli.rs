use std::path::Path;
use std::process::{Command, Output};

fn geocount(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geocount"))
        .args(args)
        .arg("--out")
        .arg(dir.join("out"))
        .arg("--cache-dir")
        .arg(dir.join("cache"))
        .env_remove("GEOCOUNT_CACHE_DIR")
        .output()
        .expect("run geocount")
}

fn stdout_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

#[test]
fn spectrum_second_run_is_a_cache_hit() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["spectrum", "--surface", "bolza", "--radius", "7", "--t", "4,6"];
    let a = geocount(&args, dir.path());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = geocount(&args, dir.path());
    let (a, b) = (stdout_json(&a), stdout_json(&b));
    assert_eq!(a["cache"]["hit"], false);
    assert_eq!(b["cache"]["hit"], true);
    assert_eq!(a["cache"]["csv_sha256"], b["cache"]["csv_sha256"]);
}

#[test]
fn count_writes_the_four_column_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = geocount(&["count", "--radius", "8", "--t", "5,6,7", "--epsilon", "0.5"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("out/count.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,P_t,predicted,ratio"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert!((r[2] - r[0].exp() / r[0]).abs() < 1e-9 * r[2]);
        assert!((r[3] - r[1] / r[2]).abs() < 1e-12);
    }
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim_end(), text.trim_end());
    assert!(dir.path().join("out/count.json").exists());
}

#[test]
fn configuration_errors_exit_with_two_and_json() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["count", "--radius", "10", "--t", "8,10,12"][..],
        &["count", "--epsilon", "-1"][..],
        &["spectrum", "--tolerance-profile", "huge"][..],
        &["spectrum", "--no-such-flag"][..],
        &["spectrum", "--surface", "no-such-surface"][..],
    ] {
        let o = geocount(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let line = String::from_utf8(o.stderr).unwrap();
        let v: serde_json::Value = serde_json::from_str(line.lines().last().unwrap()).unwrap();
        assert_eq!(v["error"], "configuration");
        assert_eq!(v["exit_code"], 2);
    }
}

#[test]
fn config_file_and_flags_layer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "radius = 7\nt = 4,5\nbogus = 1\n").unwrap();
    let o = geocount(&["spectrum", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(&cfg, "radius = 7\nt = 4,5\n").unwrap();
    let o = geocount(&["spectrum", "--config", cfg.to_str().unwrap(), "--radius", "6.5"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["radius"], 6.5);
}

#[test]
fn rank_dumps_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let o = geocount(&["rank", "--tolerance-profile", "quick", "--dump-trajectory"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["trajectories"].as_array().unwrap().len(), 4);
    let csv = std::fs::read_to_string(v["trajectories"][0].as_str().unwrap()).unwrap();
    assert_eq!(csv.lines().next(), Some("s,x,y,theta,K,u_stable,u_unstable"));
}
