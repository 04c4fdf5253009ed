use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn moebiuskit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moebiuskit"))
        .args(args)
        .env_remove("MOEBIUSKIT_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_owned()
}

#[test]
fn bound_sweep_writes_csv_with_optimum_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "b.csv");
    let o = moebiuskit(&["bound", "sweep", "--t-min", "0", "--t-max", "2", "--steps", "21", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,alpha,beta,lower_bound,branch");
    assert_eq!(lines.len(), 23);
    let both: Vec<&&str> = lines.iter().filter(|l| l.ends_with(",both")).collect();
    assert_eq!(both.len(), 1);
    let lb: f64 = both[0].split(',').nth(3).unwrap().parse().unwrap();
    assert!((lb - 3f64.sqrt()).abs() < 1e-12);
    let ts: Vec<f64> = lines[1..].iter().map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(ts.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn bound_sweep_rejects_bad_input() {
    assert_eq!(code(&moebiuskit(&["bound", "sweep", "--t-min", "0", "--t-max", "1", "--steps", "1"])), 2);
    assert_eq!(code(&moebiuskit(&["bound", "sweep", "--t-min", "1", "--t-max", "0", "--steps", "5"])), 2);
    assert_eq!(code(&moebiuskit(&["bound", "swep"])), 2);
}

#[test]
fn construct_then_search() {
    let dir = tempfile::tempdir().unwrap();
    let strip = path(dir.path(), "s.json");
    let mesh = path(dir.path(), "s.obj");
    let o = moebiuskit(&["construct", "smoothed", "--eps", "0.1", "--strip", &strip, "--mesh", &mesh]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let obj = fs::read_to_string(&mesh).unwrap();
    assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 1024);
    assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 1024);

    let report = path(dir.path(), "t.txt");
    let o = moebiuskit(&["--sequential", "tpattern", "--strip", &strip, "--out", &report]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&report).unwrap();
    let field = |k: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(k)).unwrap();
        line.split(" = ").nth(1).unwrap().parse().unwrap()
    };
    assert!(field("residual_g").abs() < 1e-8);
    assert!(field("residual_h").abs() < 1e-8);
    assert!(field("min_distance") > 0.0);
    let leftovers: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with('.'))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn construct_argument_rules() {
    assert_eq!(code(&moebiuskit(&["construct", "smoothed"])), 2);
    assert_eq!(code(&moebiuskit(&["construct", "smoothed", "--eps", "0.3"])), 2);
    assert_eq!(code(&moebiuskit(&["construct", "smoothed", "--eps", "0"])), 2);
    assert_eq!(code(&moebiuskit(&["construct", "triangular", "--eps", "0.1"])), 2);
    assert_eq!(code(&moebiuskit(&["construct", "smoothed", "--eps", "0.1", "--samples", "63"])), 2);
    assert_eq!(code(&moebiuskit(&["construct", "triangular"])), 0);
}

#[test]
fn tpattern_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = path(dir.path(), "missing.json");
    assert_eq!(code(&moebiuskit(&["tpattern", "--strip", &missing])), 3);

    let garbage = path(dir.path(), "garbage.json");
    fs::write(&garbage, "{not json").unwrap();
    assert_eq!(code(&moebiuskit(&["tpattern", "--strip", &garbage])), 2);

    // The fan model of the triangular band is not a valid foliation.
    let fan = path(dir.path(), "fan.json");
    assert_eq!(code(&moebiuskit(&["construct", "triangular", "--strip", &fan])), 0);
    assert_eq!(code(&moebiuskit(&["tpattern", "--strip", &fan])), 5);
}

#[test]
fn verify_suite_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "v.txt");
    let o = moebiuskit(&["verify", "--suite", "bound", "--seed", "3", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# moebiuskit "));
    assert!(text.contains("suite=bound seed=3"));
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 5);
    assert_eq!(String::from_utf8_lossy(&o.stdout), text);

    let seq = moebiuskit(&["--sequential", "verify", "--suite", "bound", "--seed", "3"]);
    assert_eq!(seq.stdout, o.stdout);

    assert_eq!(code(&moebiuskit(&["verify", "--suite", "bonud"])), 2);
}

#[test]
fn limit_study_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "l.csv");
    let o = moebiuskit(&["limit-study", "--eps", "0.2,0.1,0.05", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("eps,lambda,t,H1,H2,D1,D2,sup_dist"));
    let sup: Vec<f64> = lines.map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(sup.len(), 3);
    assert!(sup.windows(2).all(|w| w[1] < w[0]));

    assert_eq!(code(&moebiuskit(&["limit-study", "--eps", "0.1,0.2"])), 2);
    assert_eq!(code(&moebiuskit(&["limit-study", "--eps", "0.5"])), 2);
    assert_eq!(code(&moebiuskit(&["limit-study", "--eps", "0.1,0.1"])), 2);
}

#[test]
fn trace_presets_and_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "tr.csv");
    let o = moebiuskit(&["trace", "--preset", "cylinder", "--x", "0.1", "--y", "-0.2", "--max-len", "0.3", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().next(), Some("x,y,z,nx,ny,nz"));
    assert!(csv.lines().count() > 10);

    assert_eq!(code(&moebiuskit(&["trace", "--preset", "plane"])), 4);
    assert_eq!(code(&moebiuskit(&["trace", "--preset", "torus"])), 2);
    assert_eq!(code(&moebiuskit(&["trace"])), 2);

    let grid = path(dir.path(), "g.csv");
    let mut text = String::from("x,y,z\n");
    for i in 0..41 {
        for j in 0..41 {
            let (x, y) = (-1.0 + i as f64 * 0.05, -1.0 + j as f64 * 0.05);
            text.push_str(&format!("{x},{y},{}\n", 0.5 * y * y));
        }
    }
    fs::write(&grid, text).unwrap();
    let o = moebiuskit(&["trace", "--grid", &grid, "--x", "0.1", "--y", "0.1", "--max-len", "0.3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn thread_override() {
    let o = Command::new(env!("CARGO_BIN_EXE_moebiuskit"))
        .args(["verify", "--suite", "line"])
        .env("MOEBIUSKIT_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let o = Command::new(env!("CARGO_BIN_EXE_moebiuskit"))
        .args(["verify", "--suite", "line"])
        .env("MOEBIUSKIT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}
