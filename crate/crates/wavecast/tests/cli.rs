mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn wavecast(args: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_wavecast"));
    cmd.args(args).env_remove("WAVECAST_SEED");
    if let Some(s) = seed {
        cmd.env("WAVECAST_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_exit_codes() {
    let dir = tempdir().unwrap();
    let good = dir.path().join("good.csv");
    common::write_rows(&good, &common::rows(4, 1), true);
    let o = wavecast(&["validate", "--data", s(&good), "--site", "perth"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("0 violation"));
    assert!(stderr(&o).contains("72000"), "row-count warning");

    let bad = dir.path().join("bad.csv");
    let mut rows = common::rows(4, 1);
    rows[2][48] += 1000.0;
    common::write_rows(&bad, &rows, true);
    let o = wavecast(&["validate", "--data", s(&bad)], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stdout(&o).lines().any(|l| l.starts_with("3,49,")),
        "{}",
        stdout(&o)
    );

    let missing = dir.path().join("nope.csv");
    let o = wavecast(&["validate", "--data", s(&missing)], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nope.csv"));

    let o = wavecast(&["validate"], None);
    assert_eq!(o.status.code(), Some(1), "usage errors exit 1");
    assert_eq!(wavecast(&["--help"], None).status.code(), Some(0));
}

fn report_lines(dir: &Path) -> Vec<String> {
    fs::read_to_string(dir.join("reports.csv"))
        .unwrap()
        .lines()
        .map(String::from)
        .collect()
}

#[test]
fn train_layouts_and_determinism() {
    let dir = tempdir().unwrap();
    let data = dir.path().join("data.csv");
    common::write_rows(&data, &common::rows(300, 2), true);

    let cfg = common::tiny_config(dir.path(), &data, "cnn-bilstm-sa", "kfold_10", 4);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = wavecast(&["train", "--config", s(&cfg), "--out", s(&a)], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lines = report_lines(&a);
    assert_eq!(lines.len(), 1 + 10 + 4);
    assert!(lines[0].starts_with("site,model,fold,mse,rmse,loss,mae,r2,msle,medae,max_error,n"));
    for (i, label) in ["mean", "min", "max", "std"].iter().enumerate() {
        assert!(lines[11 + i].starts_with(&format!("sydney,cnn-bilstm-sa,{label},")));
    }
    assert!(stdout(&o).contains("r2,"));

    let o = wavecast(
        &["--jobs", "1", "train", "--config", s(&cfg), "--out", s(&b)],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    for f in ["reports.csv", "loss_trace.csv", "fold_3/params.txt"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }

    let hold = common::tiny_config(dir.path(), &data, "lstm", "holdout_70_30", 4);
    let h = dir.path().join("h");
    let o = wavecast(&["train", "--config", s(&hold), "--out", s(&h)], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(report_lines(&h).len(), 1 + 1 + 4);

    let o = wavecast(&["evaluate", "--run", s(&h), "--data", s(&data)], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 1 + 1 + 4);

    let o = wavecast(&["compare", "--runs", s(&a), s(&h)], None);
    assert_eq!(o.status.code(), Some(0));
    let mse_rows = stdout(&o).lines().filter(|l| l.contains(",mse,")).count();
    assert_eq!(mse_rows, 11);
}

#[test]
fn train_refuses_invalid_data_unless_told_to_drop() {
    let dir = tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let mut rows = common::rows(200, 3);
    rows[5][0] = 700.0;
    common::write_rows(&data, &rows, false);
    let cfg = common::tiny_config(dir.path(), &data, "gru", "holdout_70_30", 1);
    let o = wavecast(&["train", "--config", s(&cfg)], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("row 6, column 1"), "{}", stderr(&o));

    let mut text = fs::read_to_string(&cfg).unwrap();
    text.push_str("on_violation = drop\n");
    fs::write(&cfg, text).unwrap();
    let o = wavecast(&["train", "--config", s(&cfg)], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("199 rows"));
}

#[test]
fn config_errors_and_seed_env() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "model = cnn\nlearning_rat = 0.1\n").unwrap();
    let o = wavecast(&["train", "--config", s(&cfg)], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"));

    fs::write(&cfg, "model = cnn\n").unwrap();
    let o = wavecast(
        &[
            "tune",
            "--config",
            s(&cfg),
            "--optimizer",
            "random",
            "--budget",
            "1",
            "--objective",
            "synthetic",
        ],
        Some("x"),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("WAVECAST_SEED"));
}

fn trace_rows(dir: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(dir.join("trace.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn tune_on_the_synthetic_objective() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("t.cfg");
    fs::write(&cfg, "model = cnn-bilstm-sa-h\n").unwrap();
    let tune = |extra: &[&str], out: &Path, seed: &str| {
        let mut args = vec![
            "tune",
            "--config",
            s(&cfg),
            "--objective",
            "synthetic",
            "--out",
            s(out),
        ];
        args.extend_from_slice(extra);
        wavecast(&args, Some(seed))
    };

    let out = dir.path().join("egs");
    let o = tune(&["--optimizer", "egs", "--budget", "300"], &out, "0");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = trace_rows(&out);
    assert_eq!(rows.len(), 300);
    let best: Vec<f64> = rows.iter().map(|r| r[16].parse().unwrap()).collect();
    assert!(best.windows(2).all(|w| w[1] >= w[0]));
    let top = rows
        .iter()
        .map(|r| r[15].parse::<f64>().unwrap())
        .fold(f64::MIN, f64::max);
    assert_eq!(*best.last().unwrap(), top);
    // The best config is loadable and carries the best point.
    let best_cfg = fs::read_to_string(out.join("best.cfg")).unwrap();
    assert!(best_cfg.contains("model = cnn-bilstm-sa-h"));

    // Counting the step-size clock in successes lands on the analytic optimum.
    let out = dir.path().join("egs-successes");
    let o = tune(
        &[
            "--optimizer",
            "egs",
            "--budget",
            "300",
            "--step-clock",
            "successes",
        ],
        &out,
        "0",
    );
    assert_eq!(o.status.code(), Some(0));
    let score: f64 = stdout(&o)
        .split_whitespace()
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    assert!(score >= 0.99, "{score}");

    let out = dir.path().join("random");
    let o = tune(&["--optimizer", "random", "--budget", "1"], &out, "0");
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(trace_rows(&out).len(), 1);

    let o = tune(
        &["--optimizer", "nm", "--budget", "50"],
        &dir.path().join("nm"),
        "0",
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--relax"));
    let o = tune(
        &["--optimizer", "nm", "--relax", "--budget", "50"],
        &dir.path().join("nm"),
        "0",
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let o = tune(
        &["--optimizer", "egs", "--budget", "10"],
        &dir.path().join("small"),
        "0",
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("25"));
}

#[test]
fn tune_on_a_model() {
    let dir = tempdir().unwrap();
    let data = dir.path().join("data.csv");
    common::write_rows(&data, &common::rows(60, 4), true);
    let cfg = common::tiny_config(dir.path(), &data, "cnn", "holdout_70_30", 2);
    // One epoch per candidate keeps the large sampled networks affordable.
    let text = fs::read_to_string(&cfg)
        .unwrap()
        .replace("epochs = 3", "epochs = 1");
    fs::write(&cfg, text).unwrap();
    let out = dir.path().join("tune");
    let o = wavecast(
        &[
            "tune",
            "--config",
            s(&cfg),
            "--optimizer",
            "random",
            "--budget",
            "3",
            "--out",
            s(&out),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(trace_rows(&out).len(), 3);
    let o = wavecast(
        &[
            "train",
            "--config",
            s(&out.join("best.cfg")),
            "--out",
            s(&dir.path().join("r")),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn landscape_masks_and_failures() {
    let dir = tempdir().unwrap();
    let layout = dir.path().join("layout.csv");
    fs::write(&layout, "x_m,y_m\n100,100\n300,250\n450,450\n").unwrap();
    let climate = dir.path().join("climate.csv");
    fs::write(&climate, "hs_m,tp_s,beta_rad,occurrence\n2.5,10,0,1\n").unwrap();
    let out = dir.path().join("land.csv");
    let args = [
        "landscape",
        "--layout",
        s(&layout),
        "--climate",
        s(&climate),
        "--step",
        "10",
        "--points",
        "8",
        "--out",
        s(&out),
    ];
    let o = wavecast(&args, None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x_m,y_m,power_w,feasible"));
    let fixed = [(100.0, 100.0), (300.0, 250.0), (450.0, 450.0)];
    let mut n = 0;
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        let (x, y): (f64, f64) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        let near = fixed
            .iter()
            .any(|&(a, b)| ((x - a).powi(2) + (y - b).powi(2)).sqrt() < 50.0);
        assert_eq!(f[3] == "0", near, "{l}");
        assert_eq!(f[2].is_empty(), near);
        n += 1;
    }
    assert_eq!(n, 57 * 57);
    let again = dir.path().join("again.csv");
    let mut args2 = args;
    args2[10] = s(&again);
    assert_eq!(wavecast(&args2, None).status.code(), Some(0));
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());

    let mut tiles = String::from("x_m,y_m\n");
    for i in 0..10 {
        for j in 0..10 {
            tiles.push_str(&format!("{},{}\n", 13 + 60 * i, 13 + 60 * j));
        }
    }
    fs::write(&layout, tiles).unwrap();
    let o = wavecast(
        &[
            "landscape",
            "--layout",
            s(&layout),
            "--climate",
            s(&climate),
            "--step",
            "20",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no feasible cell"));
}

#[test]
fn generated_data_validates_clean() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("synthetic.csv");
    let o = wavecast(&["generate", "--rows", "3", "--out", s(&out)], Some("5"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = wavecast(&["validate", "--data", s(&out)], None);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("3 rows (header skipped)"));
    let again = dir.path().join("again.csv");
    wavecast(
        &["generate", "--rows", "3", "--out", s(&again), "--seed", "5"],
        None,
    );
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());
}
