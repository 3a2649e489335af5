use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_resim");

fn resim(args: &[&str], cwd: &Path) -> Output {
    Command::new(BIN).args(args).current_dir(cwd).output().expect("spawn resim")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

const TINY: &str = r#"{
  "training": {
    "trajnet": {"epochs": 3, "anneal_epochs": 1, "a_hidden": [16], "embedding": 8, "b_hidden": [16]},
    "depthnet": {"epochs": 3, "anneal_epochs": 1, "h_hidden": [16]},
    "finetune": {"epochs": 2, "anneal_epochs": 1, "a_hidden": [16], "embedding": 8, "b_hidden": [16]},
    "regression": {"epochs": 2, "anneal_epochs": 1, "a_hidden": [16], "embedding": 8, "b_hidden": [16]}
  }
}"#;

#[test]
fn help_exits_zero_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&resim(&["--help"], dir.path())), 0);
    for sub in ["gen", "simulate", "train-traj", "train-depth", "train", "eval", "render", "pipeline"] {
        let out = resim(&[sub, "--help"], dir.path());
        assert_eq!(code(&out), 0, "{sub} --help");
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["frobnicate"][..], &["gen", "--bogus"], &["simulate"], &["gen", "--n", "ten"], &[]] {
        let out = resim(args, dir.path());
        assert_eq!(code(&out), 2, "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn runtime_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = resim(&["eval", "--data", "missing"], dir.path());
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    fs::write(dir.path().join("bad.json"), r#"{"dataset": {"split": [1.0, 1.0, 1.0]}}"#).unwrap();
    assert_eq!(code(&resim(&["--config", "bad.json", "gen", "--n", "2"], dir.path())), 1);
}

#[test]
fn gen_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        assert_eq!(code(&resim(&["gen", "--n", "10", "--seed", "5", "--out", out], dir.path())), 0);
    }
    let (a, b) = (tree(&dir.path().join("a")), tree(&dir.path().join("b")));
    assert_eq!(a.len(), 10 * 6 + 1);
    assert_eq!(a, b);

    resim(&["gen", "--n", "10", "--seed", "6", "--out", "c"], dir.path());
    assert_ne!(a, tree(&dir.path().join("c")));
}

#[test]
fn config_seed_and_flag_seed_agree() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), r#"{"seed": 5, "dataset": {"n": 4}}"#).unwrap();
    resim(&["--config", "c.json", "gen", "--out", "a"], dir.path());
    resim(&["gen", "--n", "4", "--seed", "5", "--out", "b"], dir.path());
    let strip = |m: BTreeMap<PathBuf, Vec<u8>>| m.into_iter().filter(|(p, _)| !p.ends_with("manifest.json")).collect::<Vec<_>>();
    assert_eq!(strip(tree(&dir.path().join("a"))), strip(tree(&dir.path().join("b"))));
}

#[test]
fn simulate_reproduces_zero_noise_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&resim(&["gen", "--n", "3", "--noise", "identity", "--out", "d"], dir.path())), 0);
    for id in ["000000", "000001", "000002"] {
        let rec = format!("d/records/{id}");
        let out = resim(&["simulate", "--depth", &format!("{rec}/noisy.pfm"), "--out", "sim.json"], dir.path());
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let produced = fs::read(dir.path().join("sim.json")).unwrap();
        assert!(produced == fs::read(dir.path().join(&rec).join("gt_traj.json")).unwrap(), "{id}");
    }
}

#[test]
fn stages_render_and_pipeline_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("tiny.json"), TINY).unwrap();
    let run = |args: &[&str]| {
        let mut full = vec!["--config", "tiny.json"];
        full.extend_from_slice(args);
        let out = resim(&full, d);
        assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        out
    };
    run(&["gen", "--n", "30", "--noise", "scale-dominant"]);
    run(&["train-traj", "--baselines"]);
    run(&["train-depth"]);
    run(&["train-traj", "--stage", "finetune"]);
    for f in ["trajnet", "depthnet", "trajnet_finetuned", "regress3d", "regress2d"] {
        assert!(d.join(format!("models/{f}.ckpt")).exists(), "{f}");
        assert!(d.join(format!("models/{f}_loss.csv")).exists(), "{f}");
    }

    let table = String::from_utf8(run(&["eval"]).stdout).unwrap();
    assert!(table.contains("Depth+fwdS") && table.contains("Ours"));
    assert!(d.join("out/report.json").exists());

    run(&["pipeline", "--record", "000029"]);
    let rec = d.join("out/000029");
    for f in ["corrected.pfm", "traj_initial.json", "traj_final.json", "composite.ppm"] {
        assert!(rec.join(f).exists(), "{f}");
    }
    let frames = fs::read_dir(rec.join("frames")).unwrap().count();
    assert_eq!(frames, 30);
    assert!(rec.join("frames/f000.ppm").exists() && rec.join("frames/f029.ppm").exists());

    // the corrected depth simulates to the re-simulated trajectory
    run(&["simulate", "--depth", "out/000029/corrected.pfm", "--meta", "data/records/000029/meta.json", "--out", "x.json"]);
    assert!(fs::read(d.join("x.json")).unwrap() == fs::read(rec.join("traj_resimulated.json")).unwrap());

    run(&["render", "--depth", "data/records/000003/gt.pfm", "--traj", "data/records/000003/gt_traj.json", "--out", "r"]);
    assert_eq!(fs::read_dir(d.join("r/frames")).unwrap().count(), 30);
}

#[test]
fn training_csvs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("tiny.json"), TINY).unwrap();
    resim(&["gen", "--n", "20"], d);
    for m in ["m1", "m2"] {
        let out = resim(&["--config", "tiny.json", "--seed", "3", "train", "--models", m], d);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(tree(&d.join("m1")), tree(&d.join("m2")));
}
