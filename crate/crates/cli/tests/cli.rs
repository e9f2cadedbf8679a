use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const DISK: &str = r#"
[shape]
kind = "disk"
radius = 1.0

[datum]
cos = [1.0]
"#;

fn run(args: &[&str], config: &str, dir: &Path) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_perforated"));
    cmd.args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--quiet")
        .env_remove("PERFORATED_OUT_DIR");
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Data rows of a CSV, after checking the hash line and header.
fn rows(path: &Path, header: &str) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let hash = lines
        .next()
        .unwrap()
        .strip_prefix("# config_hash = ")
        .expect("hash line");
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
    assert_eq!(lines.next().unwrap(), header);
    lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn scalar(path: &Path, key: &str) -> f64 {
    rows(path, "quantity,value")
        .into_iter()
        .find(|r| r[0] == key)
        .unwrap_or_else(|| panic!("{key} missing"))[1]
        .parse()
        .unwrap()
}

#[test]
fn green_validate_passes_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["green-validate"], DISK, dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = rows(
        &dir.path().join("out/green_report.csv"),
        "quantity,value,tolerance,passed",
    );
    assert_eq!(r.len(), 4);
    assert!(r.iter().all(|row| row[3] == "true"));
    let summary = fs::read_to_string(dir.path().join("out/run_summary.txt")).unwrap();
    assert!(summary.lines().any(|l| l == "status = pass"));
}

#[test]
fn green_validate_zero_tolerance_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        "{DISK}\n[tolerances]\ngreen_identity = 0.0\ngreen_laplacian = 0.0\ngreen_cutoff = 0.0\n"
    );
    assert_eq!(code(&run(&["green-validate"], &cfg, dir.path())), 1);
}

#[test]
fn malformed_configs_exit_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    for (cfg, field) in [
        ("[shape]\nkind = \"disk\"\nradius = \"big\"\n", "radius"),
        (
            "[shape]\nkind = \"disk\"\nradius = 1.0\ncolour = 3\n",
            "colour",
        ),
        ("[shape]\nkind = \"disk\"\n", "shape.radius"),
        ("[shape\nkind = \"disk\"\n", "line 1"),
    ] {
        let o = run(&["green-validate"], cfg, dir.path());
        assert_eq!(code(&o), 2, "{cfg}");
        assert!(stderr(&o).contains(field), "{cfg}: {}", stderr(&o));
    }
}

#[test]
fn solve_constant_datum() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[shape]\nkind = \"disk\"\nradius = 1.0\n[datum]\na0 = 3.0\ncos = []\n[solve]\neps = 0.2\nrandom_points = 5\n";
    let o = run(&["solve"], cfg, dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = dir.path().join("out");
    assert!((scalar(&out.join("solution.csv"), "xi") - 3.0).abs() < 1e-12);
    let theta = rows(&out.join("theta.csv"), "index,param,x,y,g,theta");
    assert_eq!(theta.len(), 64);
    for r in &theta {
        assert!(r[5].parse::<f64>().unwrap().abs() < 1e-12);
    }
    for r in rows(&out.join("field.csv"), "x,y,u,du_dx,du_dy") {
        assert!((r[2].parse::<f64>().unwrap() - 3.0).abs() < 1e-10);
    }
}

#[test]
fn solve_disk_cos_residual() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{DISK}\n[solve]\neps = 0.1\npoints = [[0.9, 0.6]]\n");
    let o = run(&["solve"], &cfg, dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(scalar(&dir.path().join("out/solution.csv"), "residual") < 1e-10);
}

#[test]
fn solve_rejects_eps_beyond_eps0() {
    let dir = tempfile::tempdir().unwrap();
    for eps in ["0.5", "0.7", "0.0"] {
        let o = run(
            &["solve"],
            &format!("{DISK}\n[solve]\neps = {eps}\n"),
            dir.path(),
        );
        assert_eq!(code(&o), 2);
        assert!(stderr(&o).contains("solve.eps"));
    }
    let o = run(&["solve"], DISK, dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("solve.eps"));
}

#[test]
fn solve_rejects_points_in_the_hole() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{DISK}\n[solve]\neps = 0.2\npoints = [[0.55, 0.5]]\n");
    let o = run(&["solve"], &cfg, dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("solve.points[0]"));
}

#[test]
fn sweep_degree_too_large_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["sweep"],
        &format!("{DISK}\n[sweep]\ncount = 6\ndegree = 5\n"),
        dir.path(),
    );
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("sweep.degree"));
}

#[test]
fn sweep_small_eps_battery_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{DISK}\n[sweep]\nlo = 0.01\nhi = 0.1\n");
    let o = run(&["sweep"], &cfg, dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = dir.path().join("out");
    let fits = rows(
        &out.join("fit.csv"),
        "functional,degree,scale,c0,c1,c2,c3,c4,max_residual,a0,limit,difference,tolerance,passed",
    );
    assert_eq!(fits.len(), 4);
    let energy = fits.iter().find(|r| r[0] == "energy_G").unwrap();
    assert!((energy[9].parse::<f64>().unwrap() - std::f64::consts::PI).abs() < 1e-4);
    // 8 grid points for each of 4 functionals; U and Ũ ids are quoted.
    let sweep = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 2 + 32);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = format!(
        "{DISK}\n[solve]\neps = 0.15\nrandom_points = 4\n[sweep]\nlo = 0.02\nhi = 0.1\ncount = 6\n"
    );
    for cmd in ["solve", "sweep", "report"] {
        assert_eq!(code(&run(&[cmd], &cfg, a.path())), 0);
        assert_eq!(code(&run(&[cmd], &cfg, b.path())), 0);
    }
    let mut names: Vec<_> = fs::read_dir(a.path().join("out"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 7);
    for name in names {
        let x = fs::read(a.path().join("out").join(&name)).unwrap();
        let y = fs::read(b.path().join("out").join(&name)).unwrap();
        assert_eq!(x, y, "{name:?} differs");
    }
}

#[test]
fn report_lists_limiting_quantities() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["report"], DISK, dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let path = dir.path().join("out/limits.csv");
    assert!(scalar(&path, "xi_limit").abs() < 1e-12);
    assert!((scalar(&path, "energy_limit") - std::f64::consts::PI).abs() < 1e-4);
    assert!((scalar(&path, "microscopic_limit") - 0.5).abs() < 1e-8);
    assert!((scalar(&path, "tau0_max") - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-10);
    assert!(scalar(&path, "eps0") == 0.5);
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "{DISK}\n[output]\ndir = \"{}\"\n",
            dir.path().join("cfg").display()
        ),
    )
    .unwrap();
    let env_dir = dir.path().join("env");
    let o = Command::new(env!("CARGO_BIN_EXE_perforated"))
        .args(["report", "--quiet", "--config"])
        .arg(&cfg)
        .env("PERFORATED_OUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(env_dir.join("limits.csv").exists());
    assert!(!dir.path().join("cfg").exists());
}

#[test]
fn usage_errors() {
    let bin = env!("CARGO_BIN_EXE_perforated");
    assert_eq!(
        Command::new(bin)
            .arg("--help")
            .output()
            .unwrap()
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        Command::new(bin)
            .arg("frobnicate")
            .output()
            .unwrap()
            .status
            .code(),
        Some(2)
    );
    let o = Command::new(bin).arg("report").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--config"));
    let o = Command::new(bin)
        .args(["report", "--config", "/nonexistent/run.toml"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
