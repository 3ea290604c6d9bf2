use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_winsets"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn run(sub: &str, spec: &Path, out: &Path, extra: &[&str]) -> (i32, String) {
    let o = bin()
        .arg(sub)
        .arg("--spec")
        .arg(spec)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap();
    (o.status.code().unwrap(), String::from_utf8(o.stdout).unwrap())
}

#[test]
fn golden_sweep_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout) = run("sweep", &scenario("golden-sweep.spec"), dir.path(), &[]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("144/144 outcomes in survivors"), "{stdout}");
    assert!(dir.path().join("golden-sweep.transcripts").exists());
}

#[test]
fn lift_grid_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout) = run("verify", &scenario("lift-grid.spec"), dir.path(), &[]);
    assert_eq!(code, 0);
    assert!(stdout.contains("9/9 pairs pass"));
}

#[test]
fn malformed_spec_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.spec");
    std::fs::write(&spec, "[x]\nthis is not a pair\n").unwrap();
    assert_eq!(run("play", &spec, dir.path(), &[]).0, 2);
    std::fs::write(
        &spec,
        "[x]\ngame = potential\nc = 1/2\nbeta = 1/2\nalice = nobody\nhorizon = 3\n",
    )
    .unwrap();
    assert_eq!(run("play", &spec, dir.path(), &[]).0, 2);
    assert_eq!(run("play", &dir.path().join("missing.spec"), dir.path(), &[]).0, 2);
    let o = bin().arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_invariant_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("dim.spec");
    std::fs::write(
        &spec,
        "[thirds]\nconstruction = middle-thirds\ndepth = 6\nexpect = 0.9\ntol = 0.01\n",
    )
    .unwrap();
    let (code, stdout) = run("dim", &spec, dir.path(), &[]);
    assert_eq!(code, 1);
    assert!(stdout.starts_with("[thirds] FAIL"));
}

#[test]
fn render_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run("render", &scenario("render.spec"), a.path(), &[]).0, 0);
    assert_eq!(run("render", &scenario("render.spec"), b.path(), &[]).0, 0);
    for name in ["middle-thirds.svg", "golden.svg", "empty.svg", "golden.summary"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
    let svg = std::fs::read_to_string(a.path().join("middle-thirds.svg")).unwrap();
    assert_eq!(svg.matches("class=\"survivor\" data-level=\"5\"").count(), 32);
    let svg = std::fs::read_to_string(a.path().join("golden.svg")).unwrap();
    assert_eq!(svg.matches("class=\"survivor\" data-level=\"8\"").count(), 55);
}

#[test]
fn depth_flag_overrides_and_reports_unbuilt_levels() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout) = run("render", &scenario("render.spec"), dir.path(), &["--depth", "3"]);
    // the empty construction has no level 3
    assert_eq!(code, 1, "{stdout}");
    let (code, stdout) = run("build-cantor", &scenario("build.spec"), dir.path(), &["--depth", "3"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("survivors per level: 1,2,3,5"));
}

#[test]
fn seeded_play_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        assert_eq!(run("play", &scenario("play.spec"), dir.path(), &["--seed", "11"]).0, 0);
    }
    let x = std::fs::read(a.path().join("lifted-center.transcripts")).unwrap();
    let y = std::fs::read(b.path().join("lifted-center.transcripts")).unwrap();
    assert_eq!(x, y);
}
