use std::path::Path;
use std::process::{Command, Output};

use kuramoto::config::load_config;
use kuramoto::output::{emit_diagram, read_events, read_rows, OutDir};
use kuramoto_core::bifurcation::{BifurcationDiagram, EventKind};
use kuramoto_core::freqdist::FrequencyMarginal;

fn kuramoto(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kuramoto"))
        .args(args)
        .current_dir(dir)
        .env_remove("KURAMOTO_OUT")
        .output()
        .expect("spawn kuramoto")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn stability_reports_the_unstable_root() {
    let d = tempfile::tempdir().unwrap();
    let o = kuramoto(&["stability", "--coupling", "3", "--out", "o"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = read(d.path().join("o/stability.csv"));
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1], "false");
    assert_eq!(row[2], "1");
    assert_eq!(row[3].parse::<f64>().unwrap(), 0.5);
}

#[test]
fn oversized_time_step_is_a_validation_error() {
    let d = tempfile::tempdir().unwrap();
    let o = kuramoto(&["simulate", "--dt", "0.5", "--out", "o"], d.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("run.dt"), "{}", stderr(&o));
    assert!(!d.path().join("o/trajectory.csv").exists());
}

#[test]
fn marginal_stability_is_inconclusive() {
    let d = tempfile::tempdir().unwrap();
    let o = kuramoto(&["stability", "--coupling", "2", "--out", "o"], d.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("inconclusive"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_get_suggestions() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("run.toml"), "couplng = 1.0\n[grid]\nnodez = 64\n").unwrap();
    let o = kuramoto(&["stability", "--config", "run.toml", "--out", "o"], d.path());
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("did you mean `coupling`"), "{e}");
    assert!(e.contains("did you mean `nodes`"), "{e}");
}

#[test]
fn invalid_values_name_the_key() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("run.toml"), "[marginal]\nkind = \"cauchy\"\ndelta = -1\n").unwrap();
    let o = kuramoto(&["stability", "--config", "run.toml", "--out", "o"], d.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("marginal.delta"), "{}", stderr(&o));
}

#[test]
fn missing_config_is_an_io_error() {
    let d = tempfile::tempdir().unwrap();
    let o = kuramoto(&["stability", "--config", "nope.toml"], d.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn effective_config_is_echoed_and_reloads() {
    let d = tempfile::tempdir().unwrap();
    let o = kuramoto(&["pls", "--coupling", "4", "--set", "grid.nodes=512", "--out", "o"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let echoed = d.path().join("o/config.toml");
    let text = read(&echoed);
    assert!(text.contains("nodes = 512") && text.contains("modes = 32"), "{text}");
    let (cfg, _) = load_config(Some(&echoed), &[]).unwrap();
    assert_eq!(cfg.coupling, 4.0);
    assert_eq!(cfg.grid.nodes, 512);
    let pls = read(d.path().join("o/pls.csv"));
    let r: f64 = pls.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((r - 0.5f64.sqrt()).abs() < 1e-9);
}

#[test]
fn identical_runs_give_identical_files() {
    let d = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 2] = [
        &["simulate", "--coupling", "3", "--modes", "8", "--nodes", "256", "--t-end", "1"],
        &["ensemble", "--coupling", "3", "--n", "2000", "--seed", "5", "--t-end", "1"],
    ];
    for (args, file) in runs.iter().zip(["trajectory.csv", "trajectory.csv"]) {
        let mut files = Vec::new();
        for out in ["a", "b"] {
            let mut a = args.to_vec();
            a.extend(["--out", out]);
            let o = kuramoto(&a, d.path());
            assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
            files.push(std::fs::read(d.path().join(out).join(file)).unwrap());
        }
        assert_eq!(files[0], files[1], "{args:?}");
    }
}

#[test]
fn output_directory_from_environment() {
    let d = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_kuramoto"))
        .args(["stability", "--coupling", "1"])
        .current_dir(d.path())
        .env("KURAMOTO_OUT", "from_env")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(d.path().join("from_env/stability.csv").exists());
    assert!(d.path().join("from_env/config.toml").exists());
}

#[test]
fn bifurcate_writes_a_readable_diagram() {
    let d = tempfile::tempdir().unwrap();
    let o = kuramoto(&["bifurcate", "--k-min", "1.5", "--k-max", "2.5", "--k-step", "0.05", "--out", "o"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = read_rows(&d.path().join("o/rows.csv")).unwrap();
    let events = read_events(&d.path().join("o/events.csv")).unwrap();
    assert!(events.iter().any(|e| e.kind == EventKind::Pitchfork && (e.coupling - 2.0).abs() < 0.01), "{events:?}");
    for r in rows.iter().filter(|r| r.branch == 1) {
        assert!((r.r - (1.0 - 2.0 / r.coupling).sqrt()).abs() < 1e-10);
    }
    assert!(d.path().join("o/diagram.gp").exists());
}

#[test]
fn empty_diagram_gives_header_only_files() {
    let d = tempfile::tempdir().unwrap();
    let diagram = BifurcationDiagram {
        marginal: FrequencyMarginal::cauchy(1.0, 0.0).unwrap(),
        k_min: 1.0,
        k_max: 1.0,
        step: 0.1,
        rows: Vec::new(),
        events: Vec::new(),
    };
    let out = OutDir::create(d.path().join("o")).unwrap();
    emit_diagram(&diagram, &out).unwrap();
    assert_eq!(read(d.path().join("o/rows.csv")), "K,branch,r,omega,stability,root_re,root_im\n");
    assert_eq!(read(d.path().join("o/events.csv")), "kind,K,bracket\n");
    assert!(read_rows(&d.path().join("o/rows.csv")).unwrap().is_empty());
}

#[test]
fn bad_subcommand_flags_are_validation_errors() {
    let d = tempfile::tempdir().unwrap();
    let o = kuramoto(&["bifurcate", "--mode", "sideways", "--out", "o"], d.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}
