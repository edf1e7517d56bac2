use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BASE: &str = "\
lambda_s_nm = 1550
lambda_c_nm = 1550
g2N_per_s_m = 8.3e10
T_ns = 1000
dt_over_T = 0.05
theta0_rad = 1.5707963267948966
delta_theta_rad = 8e-3
L_cm = 1
Lx_cm = 0.6
two_R_over_Lx = 0.16666666666666666
";

const SMALL_GRID: &str = "Nz = 65\nNt = 512\nNx = 5\nallow_underresolved = true\n";

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_anglescan"));
    c.env_remove("ANGLESCAN_OUT");
    c
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const OUTPUTS: [&str; 6] = [
    "field_in.csv",
    "field_trans.csv",
    "field_out.csv",
    "spin_snapshot.csv",
    "metrics.txt",
    "conditions.txt",
];

#[test]
fn check_reference_config_has_one_warning() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ref.conf", BASE);
    let o = run(&["check", s(&cfg)]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.matches("[warn]").count(), 1);
    assert!(text.contains("[warn] dtheta_max"));
    assert_eq!(text.matches("[fail]").count(), 0);
}

#[test]
fn shipped_reference_config_checks_clean() {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/telecom.conf");
    assert_eq!(code(&run(&["check", s(&cfg)])), 0);
}

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let shallow = BASE.replace("theta0_rad = 1.5707963267948966", "theta0_rad = 0.05");
    assert_eq!(code(&run(&["check", s(&write_config(dir.path(), "a.conf", &shallow))])), 1);
    let missing = BASE.replace("L_cm = 1\n", "");
    assert_eq!(code(&run(&["check", s(&write_config(dir.path(), "b.conf", &missing))])), 2);
    let typo = format!("{BASE}lenght_cm = 1\n");
    assert_eq!(code(&run(&["check", s(&write_config(dir.path(), "c.conf", &typo))])), 2);
    assert_eq!(code(&run(&["check", "/nonexistent/file.conf"])), 2);
}

#[test]
fn run_writes_versioned_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.conf", &format!("{BASE}{SMALL_GRID}"));
    let out = dir.path().join("out");
    let o = run(&["run", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for name in OUTPUTS {
        let text = fs::read_to_string(out.join(name)).unwrap();
        assert!(text.starts_with("# anglescan "), "{name}");
    }
    let field = fs::read_to_string(out.join("field_out.csv")).unwrap();
    let mut lines = field.lines();
    assert_eq!(lines.nth(1).unwrap(), "x_norm,tau_norm,re,im,abs");
    assert_eq!(lines.count(), 5 * 257);
    let spin = fs::read_to_string(out.join("spin_snapshot.csv")).unwrap();
    assert_eq!(spin.lines().nth(1).unwrap(), "z_norm,re,im,abs");
    assert_eq!(spin.lines().count(), 2 + 65);
    let metrics = fs::read_to_string(out.join("metrics.txt")).unwrap();
    assert!(metrics.lines().any(|l| l.starts_with("eta = ")));
    assert!(metrics.lines().any(|l| l.starts_with("F_prime = ")));
}

fn centroid_by_row(csv: &str) -> Vec<f64> {
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    for line in csv.lines().skip(2) {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        let (x, t, a) = (f[0], f[1], f[4]);
        match rows.last_mut() {
            Some(r) if r.0 == x => {
                r.1 += t * a * a;
                r.2 += a * a;
            }
            _ => rows.push((x, t * a * a, a * a)),
        }
    }
    rows.iter().map(|r| r.1 / r.2).collect()
}

#[test]
fn normal_incidence_echo_is_untilted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.conf", &format!("{BASE}Nx = 3\n"));
    let out = dir.path().join("out");
    assert_eq!(code(&run(&["run", s(&cfg), "--out", s(&out)])), 0);
    let c = centroid_by_row(&fs::read_to_string(out.join("field_out.csv")).unwrap());
    assert!(c.iter().all(|v| (v - c[0]).abs() < 1e-6));
    // mirror image of the input centred at tau = -T/2
    assert!((c[0] - 0.5).abs() < 1e-3, "{}", c[0]);
}

#[test]
fn run_is_deterministic_across_repeats_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{BASE}{SMALL_GRID}").replace("theta0_rad = 1.5707963267948966", "theta0_rad = 0.6");
    let cfg = write_config(dir.path(), "run.conf", &text);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&run(&["run", s(&cfg), "--out", s(&a), "--workers", "1"])), 0);
    assert_eq!(code(&run(&["run", s(&cfg), "--out", s(&b), "--workers", "3"])), 0);
    for name in OUTPUTS {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.conf", &format!("{BASE}{SMALL_GRID}"));
    let out = dir.path().join("env_out");
    let o = bin().args(["run", s(&cfg)]).env("ANGLESCAN_OUT", &out).output().unwrap();
    assert_eq!(code(&o), 0);
    assert!(out.join("metrics.txt").exists());
}

#[test]
fn zero_amplitude_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "zero.conf", &format!("{BASE}{SMALL_GRID}amplitude = 0\n"));
    let o = run(&["run", s(&cfg), "--out", s(&dir.path().join("out"))]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("efficiency"));
}

#[test]
fn underresolved_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "coarse.conf", &format!("{BASE}Nz = 65\n"));
    assert_eq!(code(&run(&["run", s(&cfg), "--out", s(&dir.path().join("out"))])), 2);
}

#[test]
fn single_point_sweep_matches_run_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.conf", &format!("{BASE}{SMALL_GRID}"));
    let out = dir.path().join("out");
    assert_eq!(code(&run(&["run", s(&cfg), "--out", s(&out)])), 0);
    let o = run(&[
        "sweep", s(&cfg), "--param", "theta0", "--from", "1.5707963267948966", "--to", "1.5707963267948966",
        "--steps", "1", "--mode", "const_dtheta", "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let sweep = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = sweep.lines();
    assert_eq!(lines.next().unwrap(), "# anglescan sweep v1");
    assert_eq!(lines.next().unwrap(), "theta0,eta,F_prime,t_bar,predicted_td_at_R,predicted_tbr");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let metrics = fs::read_to_string(out.join("metrics.txt")).unwrap();
    let get = |k: &str| {
        metrics.lines().find_map(|l| l.strip_prefix(&format!("{k} = ")).map(str::to_owned)).unwrap()
    };
    assert_eq!(row[1], get("eta"));
    assert_eq!(row[2], get("F_prime"));
    assert_eq!(row[3], get("t_bar_s"));
}

#[test]
fn sweep_rejects_range_below_geometry_angle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.conf", &format!("{BASE}{SMALL_GRID}"));
    let o = run(&[
        "sweep", s(&cfg), "--from", "0.05", "--to", "1.0", "--steps", "3", "--out", s(&dir.path().join("o")),
    ]);
    assert_eq!(code(&o), 2);
    let o = run(&["sweep", s(&cfg), "--from", "0.5", "--to", "1.0", "--steps", "3", "--mode", "sideways"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn oracle_default_grid_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ref.conf", BASE);
    let o = run(&["oracle", s(&cfg)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let dev: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("max_abs_field_deviation = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(dev < 1e-6);
}

#[test]
fn oracle_uncoupled_tiny_grid_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let text = BASE.replace("g2N_per_s_m = 8.3e10", "g2N_per_s_m = 0");
    let cfg = write_config(dir.path(), "free.conf", &text);
    let o = run(&["oracle", s(&cfg), "--nz", "8", "--nt", "32"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let dev: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("max_abs_field_deviation = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(dev < 1e-12);
}

#[test]
fn oracle_size_limit_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ref.conf", BASE);
    assert_eq!(code(&run(&["oracle", s(&cfg), "--nz", "200", "--nt", "400"])), 2);
}
