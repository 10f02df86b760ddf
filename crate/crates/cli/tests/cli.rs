use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use duelforge::neuralnet::{init_network, serialize};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_duelforge"));
    c.env_remove("DUELFORGE_OUT");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn duelforge")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

#[test]
fn zero_step_pretrain_writes_the_initial_network() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["pretrain", "--game", "duelpong", "--steps", "0", "--seed", "99", "--out", s(dir.path())];
    let o = run(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let ckpt = dir.path().join("pretrain_duelpong_seed99.dfck");
    let first = read(&ckpt);
    assert_eq!(first, serialize(&init_network(4, 99).unwrap()));
    assert!(run(&args).status.success());
    assert_eq!(read(&ckpt), first);
    assert!(dir.path().join("config_pretrain_duelpong.toml").exists());
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(dir.path());
    assert_eq!(run(&["pretrain", "--steps", "0", "--out", out]).status.code(), Some(2));
    assert_eq!(
        run(&["selfplay", "--game", "duelpong", "--variant", "transferred", "--out", out]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["pretrain", "--game", "pong9000", "--out", out]).status.code(), Some(2));
    assert_eq!(run(&["--workers", "0", "pretrain", "--game", "duelpong", "--out", out]).status.code(), Some(2));
    assert_eq!(run(&["analyze-ram", "--game", "duelpong", "--steps", "1", "--out", out]).status.code(), Some(2));
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[two_player]\nepisode_budgett = 3\n").unwrap();
    let o = run(&["--config", s(&cfg), "pretrain", "--game", "duelpong", "--steps", "0", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("episode_budgett"), "{}", stderr(&o));
}

#[test]
fn missing_checkpoint_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "selfplay", "--game", "duelpong", "--variant", "transferred", "--from", "/nonexistent.dfck", "--episodes", "1",
        "--out", s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn selfplay_writes_one_log_per_seed_within_budget() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "selfplay", "--game", "coopcatch", "--variant", "scratch", "--seeds", "24,42", "--episodes", "3", "--out",
        s(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut logs: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("episodes_"))
        .collect();
    logs.sort();
    assert_eq!(logs, ["episodes_coopcatch_scratch_seed24.csv", "episodes_coopcatch_scratch_seed42.csv"]);
    for log in &logs {
        let text = String::from_utf8(read(dir.path().join(log))).unwrap();
        let rows = text.lines().skip(1).filter(|l| !l.starts_with('#')).count();
        assert!((1..=3).contains(&rows), "{log}: {rows} rows");
    }
    assert!(dir.path().join("manifest_coopcatch_scratch.json").exists());
    assert!(dir.path().join("checkpoint_coopcatch_scratch_seed42.dfck").exists());
}

#[test]
fn transferred_selfplay_from_a_pretrained_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(dir.path());
    assert!(run(&["pretrain", "--game", "coopcatch", "--steps", "400", "--seed", "5", "--out", out]).status.success());
    let ckpt = dir.path().join("pretrain_coopcatch_seed5.dfck");
    let o = run(&[
        "selfplay", "--game", "coopcatch", "--variant", "transferred", "--from", s(&ckpt), "--seeds", "3", "--episodes",
        "2", "--out", out,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("episodes_coopcatch_transferred_seed3.csv").exists());
}

#[test]
fn analyze_ram_defaults_and_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let oa = run(&["analyze-ram", "--game", "duelpong", "--seed", "4", "--out", s(a.path())]);
    let ob = run(&["analyze-ram", "--game", "duelpong", "--seed", "4", "--out", s(b.path())]);
    assert!(oa.status.success(), "{}", stderr(&oa));
    assert_eq!(oa.stdout, ob.stdout);
    let trace = duelforge::envcore::RamTrace::load(&a.path().join("duelpong.trace")).unwrap();
    assert_eq!(trace.len(), 50_000);
    let line = String::from_utf8(oa.stdout).unwrap();
    let value: f64 = line.trim().strip_prefix("duelpong ").unwrap().parse().unwrap();
    assert!(value > 0.0 && value <= 3000.0);
    assert_eq!(read(a.path().join("duelpong.complexity.txt")), line.as_bytes());
    assert_eq!(read(a.path().join("duelpong.pgm")), read(b.path().join("duelpong.pgm")));
    assert!(a.path().join("duelpong.heat.csv").exists());
}

#[test]
fn report_on_an_empty_directory_warns() {
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().join("empty");
    std::fs::create_dir(&results).unwrap();
    let o = run(&["report", "--results", s(&results), "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("no episode logs"));
    assert!(dir.path().join("report/warnings.txt").exists());
}

#[test]
fn malformed_log_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().join("results");
    std::fs::create_dir(&results).unwrap();
    std::fs::write(
        results.join("episodes_duelpong_scratch_seed1.csv"),
        "seed,episode,steps,reward_p1,reward_p2,raw_score_p1,epsilon,wall_ms\n1,0,10,oops,0,0,1,0\n",
    )
    .unwrap();
    let o = run(&["report", "--results", s(&results), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("episodes_duelpong_scratch_seed1.csv"), "{}", stderr(&o));
}

#[test]
fn report_matches_golden_tables() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixtures();
    let o = run(&[
        "--config",
        s(&fx.join("report.toml")),
        "report",
        "--results",
        s(&fx.join("report_input")),
        "--out",
        s(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let expected = fx.join("report_expected");
    let mut names: Vec<_> = std::fs::read_dir(&expected)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 8);
    for name in names {
        let got = read(dir.path().join("report").join(&name));
        assert_eq!(
            String::from_utf8(got).unwrap(),
            String::from_utf8(read(expected.join(&name))).unwrap(),
            "{name:?}"
        );
    }
}

#[test]
fn rerun_from_echoed_config_reproduces_outputs() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let o = run(&["pretrain", "--game", "duelpong", "--steps", "600", "--seed", "8", "--out", s(first.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let echo = first.path().join("config_pretrain_duelpong.toml");
    let o = run(&["--config", s(&echo), "pretrain", "--game", "duelpong", "--out", s(second.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["pretrain_duelpong_seed8.dfck", "pretrain_curve_duelpong_seed8.csv", "config_pretrain_duelpong.toml"] {
        assert_eq!(read(first.path().join(name)), read(second.path().join(name)), "{name}");
    }
}

#[test]
fn output_root_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["pretrain", "--game", "coopcatch", "--steps", "0", "--seed", "1"])
        .env("DUELFORGE_OUT", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("pretrain_coopcatch_seed1.dfck").exists());
}
