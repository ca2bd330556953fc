use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use scint_cli::exit;
use scint_cli::output::{read_csv, CSV_COLUMNS};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_scint"));
    c.env_remove("SCINT_WORKERS");
    c
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = "[beam]\nr0 = 0.01\n[turbulence]\ncn2 = 1e-13\nl0 = 6.283185307179586e-3\n[sweep]\nz = [800.0, 2000.0]\n";

fn write_cfg(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.cfg");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn bundled_fig1_config_parses_to_reference_parameters() {
    let text = std::fs::read_to_string(config("fig1.cfg")).unwrap();
    let c = scint_cli::parse_config(&text, &[]).unwrap();
    assert_eq!(c.turbulence.cn2, 1e-13);
    assert_eq!(c.beam.r0, 0.01);
    assert_eq!(c.beam.q0, 1e7);
    assert!(c.beam.is_coherent());
    assert!((c.turbulence.reduced_inner_scale() - 1e-3).abs() < 1e-15);
    let o = run(&["check", config("fig1.cfg").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(exit::SUCCESS), "{}", stderr(&o));
    for name in ["fig1_diffuser.cfg", "fig2.cfg", "fig3.cfg"] {
        let text = std::fs::read_to_string(config(name)).unwrap();
        scint_cli::parse_config(&text, &[]).unwrap();
    }
}

#[test]
fn fig1_run_writes_twenty_rows_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig1.csv");
    let o = run(&["run", config("fig1.cfg").to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(exit::SUCCESS), "{}", stderr(&o));
    let rows = read_csv(std::io::BufReader::new(std::fs::File::open(&out).unwrap())).unwrap();
    assert_eq!(rows.len(), 20);
    assert_eq!(rows[0][0], 500.0);
    assert_eq!(rows[19][0], 10000.0);
    assert!(rows.iter().all(|r| r.iter().all(|v| v.is_finite())));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fig1.csv.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 24301);
    assert_eq!(meta["integration"]["rel_tol"], 0.01);
    assert_eq!(meta["code_version"], env!("CARGO_PKG_VERSION"));
    assert!(meta["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(stderr(&o).lines().filter(|l| l.starts_with("z = ")).count(), 20);
}

#[test]
fn empty_sweep_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), &SMALL.replace("z = [800.0, 2000.0]", "z = []"));
    let out = dir.path().join("e.csv");
    let o = run(&["run", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(exit::SUCCESS), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), format!("{}\n", CSV_COLUMNS.join(",")));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (p, w) in [(&a, "1"), (&b, "4")] {
        let o = run(&["run", cfg.to_str().unwrap(), "--seed", "5", "--workers", w, "--output", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(exit::SUCCESS), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn config_errors_exit_with_config_status() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL);
    let c = cfg.to_str().unwrap();
    let o = run(&["check", c, "--set", "turbulence.cn2=-1"]);
    assert_eq!(o.status.code(), Some(exit::CONFIG));
    assert!(stderr(&o).contains("turbulence.cn2"), "{}", stderr(&o));

    let o = run(&["check", c, "--set", "turbulence.model=von_karman"]);
    assert_eq!(o.status.code(), Some(exit::CONFIG));
    assert!(stderr(&o).contains("turbulence.L0"));

    let o = run(&["check", c, "--set", "beam.radius=1"]);
    assert_eq!(o.status.code(), Some(exit::CONFIG));
    assert!(stderr(&o).contains("radius"));

    let o = run(&["check", c, "--set", "nonsense"]);
    assert_eq!(o.status.code(), Some(exit::CONFIG));

    let o = bin().args(["check", c]).env("SCINT_WORKERS", "many").output().unwrap();
    assert_eq!(o.status.code(), Some(exit::CONFIG));
    assert!(stderr(&o).contains("SCINT_WORKERS"));
}

#[test]
fn precedence_is_flag_then_file_then_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), &format!("{SMALL}[integration]\nseed = 3\n"));
    let out = dir.path().join("p.csv");
    let o = bin()
        .args(["run", cfg.to_str().unwrap(), "--mode", "correlated", "--output", out.to_str().unwrap()])
        .env("SCINT_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(exit::SUCCESS), "{}", stderr(&o));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("p.csv.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 3);
    assert_eq!(meta["workers"], 2);
    assert_eq!(meta["sweep"]["modes"], "correlated");
    let rows = read_csv(std::io::BufReader::new(std::fs::File::open(&out).unwrap())).unwrap();
    assert!(rows.iter().all(|r| r[1].is_finite() && r[2].is_nan()));

    let o = run(&["check", cfg.to_str().unwrap(), "--seed", "8", "--set", "integration.seed=9"]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("seed: 8"));
}

#[test]
fn point_failures_are_flagged_in_row_and_status() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        &format!("{SMALL}[integration]\nrel_tol = 1e-12\nmax_evals = 1000\n"),
    );
    let out = dir.path().join("f.csv");
    let o = run(&["run", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(exit::POINT_FAILURE), "{}", stderr(&o));
    let rows = read_csv(std::io::BufReader::new(std::fs::File::open(&out).unwrap())).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().any(|r| r[1].is_nan()));
    assert!(rows.iter().all(|r| r[4].is_finite()));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("f.csv.json")).unwrap()).unwrap();
    assert!(!meta["failures"].as_array().unwrap().is_empty());
}

#[test]
fn io_errors_exit_with_io_status() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL);
    let out = dir.path().join("missing/dir/x.csv");
    let o = run(&["run", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(exit::IO));
    let o = run(&["check", dir.path().join("nope.cfg").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(exit::IO));
}

#[test]
fn csv_round_trips_through_reader() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL);
    let text = std::fs::read_to_string(&cfg).unwrap();
    let mut c = scint_cli::parse_config(&text, &[]).unwrap();
    c.output.path = dir.path().join("r.csv");
    let summary = scint_cli::run::run(&c, &mut std::io::sink()).unwrap();
    let rows = read_csv(std::io::BufReader::new(std::fs::File::open(&c.output.path).unwrap())).unwrap();
    for (p, r) in summary.points.iter().zip(&rows) {
        let want = scint_cli::output::row(p);
        for (a, b) in want.iter().zip(r) {
            assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
        }
    }
    assert!(read_csv(&b"z_m,wrong\n"[..]).is_err());
}
