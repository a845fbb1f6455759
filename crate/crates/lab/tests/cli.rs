//! End-to-end runs of the command-line surface on tiny scenarios.

use std::path::{Path, PathBuf};
use std::process::Command as Process;

use clap::Parser;
use uavnet_lab::checkpoint::Checkpoint;
use uavnet_lab::commands::{evaluate, run, Cli};
use uavnet_lab::config::ScenarioFile;

const TINY: &str = r#"
name = "tiny"
user_seed = 3

[area]
side = 4.0

[users]
count = 12
hotspot_fraction = 1.0
uniform_remainder = false
hotspots = [{ start = { x = 1.2, y = 1.2 }, spread = 0.3 }, { start = { x = 2.8, y = 2.8 }, spread = 0.3 }]

[fleet]
count = 2
placement = { kind = "circle", center = { x = 2.0, y = 2.0 }, radius = 0.5 }

[horizon]
steps = 6
segments = 1

[rl]
actor_hidden = [8]
critic_hidden = [8]
batch_size = 16

[apc]
workers = 2
episodes = 5
ordering = "round_robin"
smoothing_window = 4
"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn cli(args: &[&str]) -> String {
    let mut out = Vec::new();
    let mut argv = vec!["uavnet"];
    argv.extend_from_slice(args);
    run(Cli::try_parse_from(argv).unwrap(), &mut out).unwrap();
    String::from_utf8(out).unwrap()
}

fn value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(" = ")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
}

#[test]
fn train_eval_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "tiny.toml", TINY);
    let out = dir.path().join("run");
    let s = scenario.to_str().unwrap();
    let text = cli(&["train", "--scenario", s, "--workers", "1", "--episodes", "7", "--seed", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(value(&text, "episodes"), "7");
    for f in ["best.ckpt", "final.ckpt", "episodes.csv", "training_log.csv", "curve.csv", "scenario.toml"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let effective = ScenarioFile::load(&out.join("scenario.toml")).unwrap();
    assert_eq!((effective.apc.workers, effective.apc.episodes, effective.apc.seed), (1, 7, 5));
    let log = std::fs::read_to_string(out.join("training_log.csv")).unwrap();
    assert_eq!(log.lines().next().unwrap(), "update,critic_loss,actor_grad_norm,noise_variance");
    assert!(log.lines().count() > 1);

    let ev = dir.path().join("eval");
    let best = out.join("best.ckpt");
    let text = cli(&["eval", "--checkpoint", best.to_str().unwrap(), "--scenario", s, "--out", ev.to_str().unwrap()]);
    let steps: usize = value(&text, "steps").parse().unwrap();
    let traj = std::fs::read_to_string(ev.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().count(), 1 + 2 * steps);
    let assoc = std::fs::read_to_string(ev.join("associations.csv")).unwrap();
    assert_eq!(assoc.lines().count(), 1 + 12 * steps);

    let curve = cli(&["curves", "--log", out.to_str().unwrap(), "--window", "3"]);
    let lines: Vec<&str> = curve.lines().collect();
    assert_eq!(lines[0], "index,reward,smoothed");
    assert_eq!(lines.len(), 8);
}

#[test]
fn checkpoint_round_trip_gives_identical_rollouts() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "tiny.toml", TINY);
    let out = dir.path().join("run");
    cli(&["train", "--scenario", scenario.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let file = ScenarioFile::load(&scenario).unwrap();
    let c = Checkpoint::load(&out.join("final.ckpt")).unwrap();
    let copy = dir.path().join("copy.ckpt");
    c.save(&copy).unwrap();
    let back = Checkpoint::load(&copy).unwrap();
    assert_eq!(std::fs::read(&copy).unwrap(), std::fs::read(out.join("final.ckpt")).unwrap());
    assert_eq!(evaluate(&file, &c, 0).unwrap().0, evaluate(&file, &back, 0).unwrap().0);
}

#[test]
fn oracle_reports_a_placement() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "tiny.toml", TINY);
    let text = cli(&["oracle", "--scenario", scenario.to_str().unwrap(), "--uavs", "2", "--grid", "0.5"]);
    assert_eq!(value(&text, "exhaustive"), "true");
    assert_eq!(value(&text, "served"), "12");
    assert!(text.contains("uav1 = "));
}

#[test]
fn compare_emits_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let quit = TINY.replace("name = \"tiny\"", "name = \"tiny_quit\"").replace(
        "[horizon]",
        "[[lineup_events]]\nkind = \"quit\"\nuav = 0\n\n[horizon]",
    );
    let quit = quit.replace("radius = 0.5 }", "radius = 0.5 }\ninitial_energy_per_uav = [165.0, 10000.0]");
    let single = TINY.replace("count = 2\nplacement = { kind = \"circle\", center = { x = 2.0, y = 2.0 }, radius = 0.5 }", "count = 1\nplacement = { kind = \"explicit\", positions = [{ x = 2.5, y = 2.0 }] }");
    let (q, one, two) = (write(dir.path(), "q.toml", &quit), write(dir.path(), "one.toml", &single), write(dir.path(), "two.toml", TINY));
    let train = |f: &Path, out: &str| {
        cli(&["train", "--scenario", f.to_str().unwrap(), "--out", dir.path().join(out).to_str().unwrap()]);
        dir.path().join(out).join("final.ckpt")
    };
    let (psr, pre, post) = (train(&q, "psr"), train(&two, "pre"), train(&one, "post"));
    let args = |out: Option<&Path>| {
        let mut a = vec![
            "compare".to_string(),
            "--psr".into(),
            psr.to_str().unwrap().into(),
            "--pre".into(),
            pre.to_str().unwrap().into(),
            "--post".into(),
            post.to_str().unwrap().into(),
            "--scenario".into(),
            q.to_str().unwrap().into(),
        ];
        if let Some(o) = out {
            a.push("--out".into());
            a.push(o.to_str().unwrap().into());
        }
        a
    };
    let a = args(None);
    let text = cli(&a.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(value(&text, "gain_percent").parse::<f64>().is_ok());
    assert!(text.contains("step,psr_served,baseline_served,psr_score,baseline_score,in_window"));
    let cmp = dir.path().join("cmp");
    let a = args(Some(&cmp));
    cli(&a.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(cmp.join("comparison.csv").exists());
}

#[test]
fn binary_fails_cleanly_on_bad_input() {
    let exe = env!("CARGO_BIN_EXE_uavnet");
    let out = Process::new(exe).args(["oracle", "--scenario", "/nonexistent.toml"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let help = Process::new(exe).arg("--help").output().unwrap();
    assert!(help.status.success());
    for sub in ["train", "eval", "compare", "oracle", "curves"] {
        assert!(String::from_utf8_lossy(&help.stdout).contains(sub));
    }
}

#[test]
fn shipped_scenarios_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let file = ScenarioFile::load(&path).unwrap_or_else(|e| panic!("{}: {e:#}", path.display()));
            uavnet_core::UavEnv::new(file.scenario).unwrap();
            n += 1;
        }
    }
    assert!(n >= 6);
}
