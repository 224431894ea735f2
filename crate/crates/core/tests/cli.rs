use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn agv_est(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_agv-est"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "0")
        .output()
        .unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn default_config(dir: &TempDir) -> PathBuf {
    let p = dir.path().join("default.conf");
    fs::write(&p, "reference.arc a12\n").unwrap();
    p
}

/// Short battery so each run stays small.
fn short_config(dir: &TempDir) -> PathBuf {
    let p = dir.path().join("short.conf");
    fs::write(
        &p,
        "battery.t_empty 3600\nsampling_interval 2\nreference.arc a12\n",
    )
    .unwrap();
    p
}

fn simulate(dir: &TempDir, config: &Path, out: &str) -> PathBuf {
    let out = dir.path().join(out);
    let graph = data("floor.graph");
    let o = agv_est(&[
        "simulate",
        "--config",
        path_str(config),
        "--graph",
        path_str(&graph),
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn estimate(series: &Path, out: &Path, method: &str) -> Output {
    agv_est(&[
        "estimate",
        "--series",
        path_str(series),
        "--out",
        path_str(out),
        "--method",
        method,
    ])
}

fn comment_value(text: &str, key: &str) -> f64 {
    let prefix = format!("{key}=");
    text.lines()
        .filter(|l| l.starts_with('#'))
        .flat_map(|l| l[1..].split(|c| c == ',' || c == ' '))
        .find_map(|f| f.trim().strip_prefix(prefix.as_str()))
        .unwrap_or_else(|| panic!("no {key} in output"))
        .parse()
        .unwrap()
}

#[test]
fn simulate_writes_one_row_per_sample_and_repeats() {
    let dir = TempDir::new().unwrap();
    let cfg = short_config(&dir);
    let a = simulate(&dir, &cfg, "a.csv");
    let b = simulate(&dir, &cfg, "b.csv");
    let text = fs::read_to_string(&a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,arc,agv,duration"));
    let rows: Vec<&str> = lines.collect();
    // t = 0, 2, ... while the default curve stays above a 5 % charge
    let expected = (0..).take_while(|&k| {
        let f = 2.0 * k as f64 / 3600.0;
        f < 0.95 || 0.30 * (1.0 - f) / 0.05 > 0.05
    });
    assert_eq!(rows.len(), expected.count());
    assert!(rows.iter().all(|r| r.contains(",a12,")));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let manifest = fs::read_to_string(format!("{}.manifest", a.display())).unwrap();
    assert!(manifest.contains("command simulate"));
    assert!(manifest.contains("seed 42"));
    assert!(manifest.contains("timestamp 0"));
}

#[test]
fn missing_graph_is_bad_input() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nowhere.graph");
    let out = dir.path().join("s.csv");
    let o = agv_est(&[
        "simulate",
        "--graph",
        path_str(&missing),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nowhere.graph"));
    assert!(!out.exists());
}

#[test]
fn lsmw_leaves_warm_up_rows_empty() {
    let dir = TempDir::new().unwrap();
    let series = simulate(&dir, &short_config(&dir), "s.csv");
    let out = dir.path().join("e.csv");
    let o = estimate(&series, &out, "lsmw");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .collect();
    let empty = rows.iter().take_while(|r| r.ends_with(",,")).count();
    assert_eq!(empty, 5);
    assert!(rows[empty..].iter().all(|r| !r.ends_with(",,")));
}

#[test]
fn constant_series_has_zero_residuals() {
    let dir = TempDir::new().unwrap();
    let series = dir.path().join("flat.csv");
    let mut s = String::from("t,arc,agv,duration\n");
    for k in 0..200 {
        s += &format!("{},a12,agv1,8\n", k as f64 * 0.5);
    }
    fs::write(&series, s).unwrap();
    for method in ["lsmw", "rls", "rls-adaptive", "kf"] {
        let out = dir.path().join(format!("{method}.csv"));
        let o = estimate(&series, &out, method);
        assert!(
            o.status.success(),
            "{method}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let rmse = comment_value(&fs::read_to_string(&out).unwrap(), "rmse");
        assert!(rmse < 1e-9, "{method}: rmse {rmse}");
    }
}

#[test]
fn kalman_beats_moving_window_on_noisy_series() {
    let dir = TempDir::new().unwrap();
    let series = simulate(&dir, &default_config(&dir), "s.csv");
    let rmse = |method: &str| {
        let out = dir.path().join(format!("{method}.csv"));
        assert!(estimate(&series, &out, method).status.success());
        comment_value(&fs::read_to_string(&out).unwrap(), "rmse")
    };
    let (kf, lsmw) = (rmse("kf"), rmse("lsmw"));
    assert!(kf < lsmw, "kf {kf} vs lsmw {lsmw}");
}

#[test]
fn unknown_method_is_bad_input() {
    let dir = TempDir::new().unwrap();
    let series = simulate(&dir, &short_config(&dir), "s.csv");
    let o = estimate(&series, &dir.path().join("e.csv"), "median");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_row_names_its_line() {
    let dir = TempDir::new().unwrap();
    let series = dir.path().join("bad.csv");
    fs::write(
        &series,
        "t,arc,agv,duration\n0,a12,agv1,8\n0.5,a12,agv1,fast\n",
    )
    .unwrap();
    let o = estimate(&series, &dir.path().join("e.csv"), "kf");
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn compare_picks_kalman_and_zero_noise_is_exact() {
    let dir = TempDir::new().unwrap();
    let graph = data("floor.graph");
    let run = |cfg: &Path, name: &str| {
        let out = dir.path().join(name);
        let o = agv_est(&[
            "compare",
            "--config",
            path_str(cfg),
            "--graph",
            path_str(&graph),
            "--out",
            path_str(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read_to_string(out).unwrap()
    };
    let noisy = run(&default_config(&dir), "noisy.csv");
    assert!(noisy.contains("# winner=kf"), "{noisy}");

    let flat = dir.path().join("flat.conf");
    fs::write(
        &flat,
        "battery.t_empty 3600\nsampling_interval 2\nreference.arc a12\nmodel.noise_frac 0\n\
         speed.run_in_depth 0\nspeed.run_in_soc 1\nspeed.min 1\n",
    )
    .unwrap();
    let exact = run(&flat, "flat.csv");
    let rows: Vec<&str> = exact
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .collect();
    assert_eq!(rows.len(), 4);
    for row in rows {
        let rmse: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert!(rmse < 1e-6, "{row}");
    }
}

#[test]
fn mission_logs_routes_and_halts_with_exit_three() {
    let dir = TempDir::new().unwrap();
    let graph = data("floor.graph");
    let conf = data("crossing.conf");
    let out = dir.path().join("m.csv");
    let base = [
        "mission",
        "--config",
        path_str(&conf),
        "--graph",
        path_str(&graph),
        "--out",
        path_str(&out),
    ];
    let o = agv_est(&base);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let log = fs::read_to_string(&out).unwrap();
    assert!(log.starts_with("leg,step,agv,arc,from,to,entry,planned,actual,replanned\n"));
    assert!(log.lines().any(|l| l.starts_with("# route leg=0")));

    let mut long = base.to_vec();
    long.extend(["--battery-age", "drained", "--legs", "200"]);
    let o = agv_est(&long);
    assert_eq!(o.status.code(), Some(3));
    assert!(fs::read_to_string(&out).unwrap().contains("# halted"));
}
