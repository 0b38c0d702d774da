//! End-to-end tests of the `beamscope` binary: command output, file
//! artifacts and exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use beamscope_core::learner::split_dataset;
use beamscope_core::profiler::{dataset_to_csv, read_dataset};

fn beamscope(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beamscope"))
        .args(args)
        .current_dir(dir)
        .env_remove("BEAMSCOPE_PROFILE_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn codebook_prints_one_row_per_beam() {
    let dir = tempfile::tempdir().unwrap();
    let out = beamscope(&["codebook", "--profile", "interdigital27"], dir.path());
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 64); // header + 63 beams

    let out = beamscope(&["codebook", "--profile", "ni71"], dir.path());
    assert_eq!(stdout(&out).lines().count(), 26); // header + 25 beams
}

#[test]
fn unknown_profile_exits_2_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = beamscope(&["codebook", "--profile", "bogus"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown profile"));
}

#[test]
fn generate_reports_record_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = beamscope(
        &["generate", "--profile", "interdigital27", "--seed", "1", "--out", "a.csv"],
        dir.path(),
    );
    assert!(out.status.success());
    assert!(stdout(&out).contains("405 records"));

    let out = beamscope(
        &["generate", "--profile", "ni71", "--seed", "1", "--out", "b.csv"],
        dir.path(),
    );
    assert!(stdout(&out).contains("1650 records"));
}

#[test]
fn generate_same_seed_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["x.csv", "y.csv"] {
        let out = beamscope(
            &["generate", "--profile", "ni71", "--seed", "7", "--out", name],
            dir.path(),
        );
        assert!(out.status.success());
    }
    let a = fs::read(dir.path().join("x.csv")).unwrap();
    let b = fs::read(dir.path().join("y.csv")).unwrap();
    assert_eq!(a, b);

    let out = beamscope(
        &["generate", "--profile", "ni71", "--seed", "8", "--out", "z.csv"],
        dir.path(),
    );
    assert!(out.status.success());
    assert_ne!(a, fs::read(dir.path().join("z.csv")).unwrap());
}

#[test]
fn no_fading_sweep_ignores_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    for (name, seed) in [("p.csv", "1"), ("q.csv", "999")] {
        let out = beamscope(
            &["generate", "--profile", "interdigital27", "--seed", seed, "--out", name, "--no-fading"],
            dir.path(),
        );
        assert!(out.status.success());
    }
    let p = read_dataset(&dir.path().join("p.csv")).unwrap();
    let q = read_dataset(&dir.path().join("q.csv")).unwrap();
    assert_eq!(p.records, q.records);
}

#[test]
fn train_echoes_defaults_and_eval_reproduces_report() {
    let dir = tempfile::tempdir().unwrap();
    beamscope(
        &["generate", "--profile", "interdigital27", "--seed", "3", "--out", "ds.csv"],
        dir.path(),
    );
    let out = beamscope(
        &["train", "ds.csv", "--epochs", "40", "--seed", "5", "--out", "model.txt"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("epochs=40 batch=10 split=0.8"));
    assert!(text.contains("widths=32,16,8"));
    let reported: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("test mse=") && l.contains("kind=mlp"))
        .collect();
    assert_eq!(reported.len(), 1);

    // evaluating the saved model on the same held-out split reproduces the
    // reported numbers
    let ds = read_dataset(&dir.path().join("ds.csv")).unwrap();
    let split = split_dataset(&ds, 0.8, 5).unwrap();
    fs::write(dir.path().join("test.csv"), dataset_to_csv(&split.test)).unwrap();
    let out = beamscope(&["eval", "model.txt", "test.csv"], dir.path());
    assert!(out.status.success());
    let eval_line = stdout(&out);
    let grab = |line: &str, key: &str| -> String {
        line.split(key).nth(1).unwrap().split_whitespace().next().unwrap().to_string()
    };
    assert_eq!(grab(reported[0], "mse="), grab(&eval_line, "mse="));
    assert_eq!(grab(reported[0], "r2="), grab(&eval_line, "r2=").trim_end_matches(','));
}

#[test]
fn baseline_flag_trains_the_requested_model() {
    let dir = tempfile::tempdir().unwrap();
    beamscope(
        &["generate", "--profile", "interdigital27", "--seed", "3", "--out", "ds.csv"],
        dir.path(),
    );
    for kind in ["linreg", "tree", "forest", "gbrt"] {
        let model = format!("{kind}.txt");
        let out = beamscope(
            &["train", "ds.csv", "--baseline", kind, "--out", &model],
            dir.path(),
        );
        assert!(out.status.success(), "{kind}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(stdout(&out).contains(&format!("kind={kind}")));
        let header = fs::read_to_string(dir.path().join(&model)).unwrap();
        assert!(header.starts_with("beamscope-model v1"));
    }
}

#[test]
fn predict_tracks_a_generated_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    beamscope(
        &["generate", "--profile", "interdigital27", "--seed", "3", "--out", "ds.csv"],
        dir.path(),
    );
    let out = beamscope(
        &["train", "ds.csv", "--widths", "32,16,8", "--seed", "1", "--out", "model.txt"],
        dir.path(),
    );
    assert!(out.status.success());

    let ds = read_dataset(&dir.path().join("ds.csv")).unwrap();
    let record = ds
        .records
        .iter()
        .find(|r| r.alpha_deg == 0.0 && r.beta_deg == 0.0 && r.distance_ft == 6.0)
        .unwrap();
    let out = beamscope(
        &["predict", "model.txt", "--alpha", "0", "--beta", "0", "--dist", "6"],
        dir.path(),
    );
    assert!(out.status.success());
    let predicted: f64 = stdout(&out).trim().parse().unwrap();
    // the network interpolates the generated surface; a few dB of slack
    // spans the fading aggregate and fit error
    assert!(
        (predicted - record.value).abs() < 3.0,
        "predicted {predicted} vs recorded {}",
        record.value
    );
}

#[test]
fn plot_files_are_deterministic_and_annotated() {
    let dir = tempfile::tempdir().unwrap();
    beamscope(
        &["generate", "--profile", "ni71", "--seed", "2", "--out", "ds.csv"],
        dir.path(),
    );
    for name in ["h1.svg", "h2.svg"] {
        let out = beamscope(
            &["profile-plot", "ds.csv", "--kind", "heatmap-alpha-d", "--out", name],
            dir.path(),
        );
        assert!(out.status.success());
    }
    let a = fs::read(dir.path().join("h1.svg")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("h2.svg")).unwrap());
    let svg = String::from_utf8(a).unwrap();
    assert_eq!(svg.matches("class=\"cell\"").count(), 1650);
    assert!(svg.contains("Gb/s"));

    let out = beamscope(
        &["profile-plot", "ds.csv", "--kind", "profile-beta", "--out", "b.svg"],
        dir.path(),
    );
    assert!(out.status.success());
}

#[test]
fn exit_codes_for_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();

    // missing dataset file -> I/O (3)
    let out = beamscope(&["train", "nope.csv"], dir.path());
    assert_eq!(out.status.code(), Some(3));

    // malformed dataset -> schema (4)
    fs::write(dir.path().join("bad.csv"), "alpha_deg,beta_deg\n1,2\n").unwrap();
    let out = beamscope(&["train", "bad.csv"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    let out = beamscope(
        &["profile-plot", "bad.csv", "--kind", "profile-beta", "--out", "x.svg"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4));

    // malformed model -> parse (4)
    fs::write(dir.path().join("bad.model"), "beamscope-model v9\n").unwrap();
    let out = beamscope(
        &["predict", "bad.model", "--alpha", "0", "--beta", "0", "--dist", "1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4));

    // clap usage error -> 2
    let out = beamscope(&["generate", "--profile"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    // divergent training -> numeric (5)
    beamscope(
        &["generate", "--profile", "interdigital27", "--seed", "1", "--out", "ds.csv"],
        dir.path(),
    );
    let out = beamscope(
        &["train", "ds.csv", "--optimizer", "sgd", "--lr", "1e9", "--epochs", "5"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(5));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("non-finite loss"), "{err}");
}

#[test]
fn profile_dir_env_var_overrides_builtins() {
    let dir = tempfile::tempdir().unwrap();
    // a custom profile shadowing the built-in name, with a tiny map
    let custom = r#"
name = "interdigital27"
codebook = "interdigital"
metric = "rsrp_dbm"
alpha_sweep = [32]
beta_range_deg = 5.0
beta_step_deg = 5.0
d_min_ft = 4.0
d_max_ft = 5.0
d_step_ft = 1.0
samples_per_spot = 2
top_fraction = 1.0

[channel]
carrier_freq_ghz = 27.0
tx_power_dbm = 20.0
noise_ref_dbm = 0.0
fading_std = 0.1
fading_enabled = true
"#;
    fs::write(dir.path().join("interdigital27.toml"), custom).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_beamscope"))
        .args(["generate", "--profile", "interdigital27", "--seed", "1", "--out", "tiny.csv"])
        .current_dir(dir.path())
        .env("BEAMSCOPE_PROFILE_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("6 records")); // 3 lines x 2 distances x 1 beam
}
