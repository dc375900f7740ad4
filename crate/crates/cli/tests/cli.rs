use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn latmove(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latmove")).args(args).current_dir(dir).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const STRAIGHT: &str = "lattice SQ\nmodel backbone\nsequence HPH\n1 0 0 0\n2 1 0 0\n3 2 0 0\n";
const U_SHAPE: &str = "lattice SQ\nmodel backbone\nsequence HPPH\n1 0 0 0\n2 1 0 0\n3 1 1 0\n4 0 1 0\n";

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("straight.struct"), STRAIGHT).unwrap();
    fs::write(dir.path().join("u.struct"), U_SHAPE).unwrap();
    dir
}

#[test]
fn neighbors_listing_and_count() {
    let dir = setup();
    let out = latmove(&["neighbors", "straight.struct", "--k", "1"], dir.path());
    assert!(out.status.success());
    assert_eq!(
        stdout(&out),
        "k'=1 s=1 E=0.0000 (1,-1,0)\nk'=1 s=1 E=0.0000 (1,1,0)\nk'=1 s=3 E=0.0000 (1,-1,0)\nk'=1 s=3 E=0.0000 (1,1,0)\n"
    );
    let count = latmove(&["neighbors", "straight.struct", "--k", "1", "--count-only"], dir.path());
    assert_eq!(stdout(&count), "4\n");
    let k3 = latmove(&["neighbors", "u.struct", "--count-only"], dir.path());
    let lines = latmove(&["neighbors", "u.struct"], dir.path());
    assert_eq!(stdout(&k3).trim().parse::<usize>().unwrap(), stdout(&lines).lines().count());
}

#[test]
fn invalid_inputs_exit_2() {
    let dir = setup();
    fs::write(dir.path().join("broken.struct"), STRAIGHT.replace("3 2 0 0", "3 5 0 0")).unwrap();
    assert_eq!(latmove(&["neighbors", "broken.struct"], dir.path()).status.code(), Some(2));
    assert_eq!(latmove(&["neighbors", "missing.struct"], dir.path()).status.code(), Some(2));
    assert_eq!(latmove(&["walk", "u.struct", "--k", "0"], dir.path()).status.code(), Some(2));
    assert_eq!(latmove(&["fold", "HPPH", "--potential", "nope.pot"], dir.path()).status.code(), Some(2));
    assert_eq!(latmove(&["frobnicate"], dir.path()).status.code(), Some(2));
    fs::write(dir.path().join("ph.pot"), "P H\n0 0\n0 -1\n").unwrap();
    fs::write(dir.path().join("aa.struct"), U_SHAPE.replace("HPPH", "AKKA")).unwrap();
    let unknown = latmove(&["energy", "aa.struct", "--potential", "ph.pot", "--hpmap", "nomap"], dir.path());
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn energy_values() {
    let dir = setup();
    assert_eq!(stdout(&latmove(&["energy", "u.struct"], dir.path())), "-1.0000\n");
    assert_eq!(stdout(&latmove(&["energy", "u.struct", "--exclude-adjacent"], dir.path())), "-1.0000\n");
    fs::write(dir.path().join("zero.pot"), "H P\n0 0\n0 0\n").unwrap();
    assert_eq!(stdout(&latmove(&["energy", "u.struct", "--potential", "zero.pot"], dir.path())), "0.0000\n");
    // amino-acid sequences are scored through the H/P mapping under e^HP
    fs::write(dir.path().join("aa.struct"), U_SHAPE.replace("HPPH", "LKKV")).unwrap();
    assert_eq!(stdout(&latmove(&["energy", "aa.struct"], dir.path())), "-1.0000\n");
}

#[test]
fn compare_metrics() {
    let dir = setup();
    let same = latmove(&["compare", "u.struct", "u.struct"], dir.path());
    assert_eq!(stdout(&same), "dRMSD 0.0000 A\ncRMSD 0.0000 A\n");
    let shifted = U_SHAPE.replace("1 0 0 0\n2 1 0 0\n3 1 1 0\n4 0 1 0", "1 5 5 0\n2 5 6 0\n3 4 6 0\n4 4 5 0");
    fs::write(dir.path().join("moved.struct"), shifted).unwrap();
    let moved = latmove(&["compare", "u.struct", "moved.struct"], dir.path());
    assert!(stdout(&moved).contains("cRMSD 0.0000 A"));
    assert_eq!(latmove(&["compare", "u.struct", "straight.struct"], dir.path()).status.code(), Some(2));
}

#[test]
fn walk_writes_local_minimum() {
    let dir = setup();
    let out = latmove(&["walk", "u.struct", "--out-dir", "w"], dir.path());
    assert!(out.status.success());
    assert_eq!(stdout(&out), "stage best_energy steps\nwalk -1.0000 0\n");
    fs::write(dir.path().join("line.struct"), "lattice SQ\nmodel backbone\nsequence HPPPPH\n1 0 0 0\n2 1 0 0\n3 2 0 0\n4 3 0 0\n5 4 0 0\n6 5 0 0\n").unwrap();
    let out = latmove(&["walk", "line.struct", "--out-dir", "w2"], dir.path());
    assert!(out.status.success());
    let result = dir.path().join("w2/walk.struct");
    let e: f64 = stdout(&latmove(&["energy", result.to_str().unwrap()], dir.path())).trim().parse().unwrap();
    assert!(e <= -1.0);
    let listing = stdout(&latmove(&["neighbors", result.to_str().unwrap()], dir.path()));
    for line in listing.lines() {
        let energy: f64 = line.split_whitespace().nth(2).unwrap().trim_start_matches("E=").parse().unwrap();
        assert!(energy >= e);
    }
}

#[test]
fn fold_is_deterministic_and_monotone() {
    let dir = setup();
    let args = |out: &'static str| {
        vec!["fold", "MKVLAAGIVA", "--lattice", "CUB", "--model", "sidechain", "--k", "2", "--sweeps", "4", "--seed", "5", "--out-dir", out]
    };
    let a = latmove(&args("a"), dir.path());
    let b = latmove(&args("b"), dir.path());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    for name in ["c_hp.struct", "g.struct", "r.struct", "hp.trace", "g.trace", "r_anneal.trace", "r_walk.trace", "summary.txt"] {
        assert_eq!(fs::read(dir.path().join("a").join(name)).unwrap(), fs::read(dir.path().join("b").join(name)).unwrap());
    }
    let hp_energy: f64 =
        stdout(&latmove(&["energy", dir.path().join("a/c_hp.struct").to_str().unwrap()], dir.path())).trim().parse().unwrap();
    let table = stdout(&a);
    let energy_of = |stage: &str| -> f64 {
        table.lines().find(|l| l.starts_with(stage)).unwrap().split_whitespace().nth(1).unwrap().parse().unwrap()
    };
    assert!(energy_of("g ") <= hp_energy);
    assert!(energy_of("r ") <= hp_energy);
}

#[test]
fn config_file_overrides_defaults() {
    let dir = setup();
    fs::write(dir.path().join("run.cfg"), "# test run\nlattice = SQ\nmodel = backbone\nseed = 3\n").unwrap();
    let a = latmove(&["randstruct", "HPHPPH", "--config", "run.cfg"], dir.path());
    assert!(a.status.success());
    assert!(stdout(&a).starts_with("lattice SQ\nmodel backbone\nsequence HPHPPH\n"));
    let b = latmove(&["randstruct", "HPHPPH", "--lattice", "SQ", "--model", "backbone", "--seed", "3"], dir.path());
    assert_eq!(a.stdout, b.stdout);
    let c = latmove(&["randstruct", "HPHPPH", "--config", "run.cfg", "--lattice", "CUB"], dir.path());
    assert!(stdout(&c).starts_with("lattice CUB\n"));
    fs::write(dir.path().join("bad.cfg"), "colour = red\n").unwrap();
    assert_eq!(latmove(&["randstruct", "HP", "--config", "bad.cfg"], dir.path()).status.code(), Some(2));
}
