use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use tempfile::TempDir;

fn run(dir: &Path, config: &str, args: &[&str]) -> (i32, serde_json::Value) {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_layerclose"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .env("LAYERCLOSE_LOG", "error")
        .output()
        .unwrap();
    let code = out.status.code().unwrap_or(-1);
    let report = serde_json::from_slice(&out.stdout).unwrap_or(serde_json::Value::Null);
    if code != 0 {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    (code, report)
}

fn out(dir: &Path, name: &str) -> PathBuf {
    dir.join("out").join(name)
}

/// Data rows of a CSV written with a leading hash comment.
fn csv_rows(path: &Path) -> (String, Vec<csv::StringRecord>, csv::StringRecord) {
    let text = fs::read_to_string(path).unwrap();
    let (first, rest) = text.split_once('\n').unwrap();
    let mut r = csv::Reader::from_reader(rest.as_bytes());
    let header = r.headers().unwrap().clone();
    (first.to_string(), r.records().map(|x| x.unwrap()).collect(), header)
}

const DIRICHLET_XY: &str = r#"
[curve]
name = "kite"

[problem]
kind = "laplace-dirichlet"
N = 130
data = { kind = "xy" }
"#;

#[test]
fn solve_laplace_residual_and_determinism() {
    let dir = TempDir::new().unwrap();
    let (code, report) = run(dir.path(), DIRICHLET_XY, &["solve", "--threads", "1"]);
    assert_eq!(code, 0);
    assert!(report["residual"].as_f64().unwrap() < 1e-12);
    let first = fs::read(out(dir.path(), "density.json")).unwrap();
    let (code, _) = run(dir.path(), DIRICHLET_XY, &["solve", "--threads", "1"]);
    assert_eq!(code, 0);
    assert_eq!(first, fs::read(out(dir.path(), "density.json")).unwrap());
    let density: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(density["config_hash"], report["config_hash"]);
    assert_eq!(density["density"]["N"], 130);
}

#[test]
fn solve_helmholtz_gmres_iterations() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"
[curve]
name = "kite"

[problem]
kind = "helmholtz-exterior"
N = 340
omega = 30.0
method = "gmres"
tol = 1e-12
data = { kind = "point-source", omega = 30.0, center = [0.1, 0.2] }
"#;
    let (code, report) = run(dir.path(), cfg, &["solve"]);
    assert_eq!(code, 0);
    let it = report["iterations"].as_u64().unwrap();
    assert!(it > 0 && it < 200, "{it}");
    assert!(report["residual"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run(dir.path(), &format!("{DIRICHLET_XY}\nbogus = 1\n"), &["solve"]).0, 2);
    assert_eq!(run(dir.path(), &DIRICHLET_XY.replace("kite", "blob"), &["solve"]).0, 2);
    let stalled = DIRICHLET_XY.replace("N = 130", "N = 130\nmethod = \"gmres\"\ntol = 1e-30");
    assert_eq!(run(dir.path(), &stalled, &["solve"]).0, 3);
    let no_ref = format!("{DIRICHLET_XY}\n[grid]\nspacing = 0.1\n\n[reference]\nkind = \"none\"\nfactor = 4\nexclude_within = 0.001\n");
    assert_eq!(run(dir.path(), &no_ref, &["error-map"]).0, 4);
}

const UNIT_DENSITY: &str = r#"
[curve]
name = "kite"

[problem]
kind = "constant-density"
N = 60

[close_eval]
p = 10
beta = 4.0

[grid]
spacing = 0.02
margin = 0.0
"#;

fn grid_errors(dir: &Path) -> Vec<(String, f64, f64, f64)> {
    let (_, rows, header) = csv_rows(&out(dir, "grid.csv"));
    assert_eq!(header.iter().collect::<Vec<_>>(), ["ix", "iy", "x", "y", "re", "im", "mask", "method", "log10err"]);
    rows.iter()
        .filter(|r| !r[8].is_empty())
        .map(|r| (r[6].to_string(), r[2].parse().unwrap(), r[3].parse().unwrap(), r[8].parse().unwrap()))
        .collect()
}

#[test]
fn error_map_native_and_surrogate() {
    let dir = TempDir::new().unwrap();
    let (code, report) = run(dir.path(), UNIT_DENSITY, &["error-map", "--path", "native"]);
    assert_eq!(code, 0);
    assert!(report["max_rel_err"].as_f64().unwrap() > 0.1);
    let errs = grid_errors(dir.path());
    let worst = |mask: &str| errs.iter().filter(|e| e.0 == mask).map(|e| e.3).fold(f64::MIN, f64::max);
    assert!(worst("inside") < -11.5, "{}", worst("inside"));
    assert!(worst("on-collar") > -1.0, "{}", worst("on-collar"));
    let deep: Vec<f64> = errs.iter().filter(|e| e.1.hypot(e.2) < 0.1).map(|e| e.3).collect();
    assert!(!deep.is_empty() && deep.iter().all(|&e| e < -6.0));
    assert!(errs.iter().any(|e| e.3 < -13.0));

    let cfg = UNIT_DENSITY.replace("p = 10\nbeta = 4.0", "p = 16\nbeta = 6.0");
    let (code, report) = run(dir.path(), &cfg, &["error-map", "--path", "surrogate"]);
    assert_eq!(code, 0);
    assert!(report["max_rel_err"].as_f64().unwrap() <= 1e-11, "{report}");
    let errs = grid_errors(dir.path());
    assert!(errs.iter().all(|e| e.3 <= -11.0));
    assert!(errs.iter().any(|e| e.0 == "on-collar"));
}

#[test]
fn error_map_outside_grid_is_empty() {
    let dir = TempDir::new().unwrap();
    let cfg = UNIT_DENSITY.replace("margin = 0.0", "bounds = [3.0, 3.5, 3.0, 3.5]");
    let (code, report) = run(dir.path(), &cfg, &["error-map"]);
    assert_eq!(code, 0);
    assert!(report["max_rel_err"].is_null());
    let (_, rows, _) = csv_rows(&out(dir.path(), "grid.csv"));
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| &r[6] == "excluded" && r[4].is_empty() && r[8].is_empty()));
}

#[test]
fn error_map_fine_native_excludes_collar() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("{UNIT_DENSITY}\n[reference]\nkind = \"fine-native\"\nfactor = 16\nexclude_within = 0.001\n")
        .replace("spacing = 0.02", "spacing = 0.01");
    let (code, report) = run(dir.path(), &cfg, &["error-map"]);
    assert_eq!(code, 0, "{report}");
    assert!(report["max_rel_err"].as_f64().is_some());
    let curve = layerclose::builtin_curve(layerclose::CurveId::Kite, None).unwrap();
    let (_, rows, _) = csv_rows(&out(dir.path(), "grid.csv"));
    let mut excluded_near = 0;
    for r in &rows {
        let z = layerclose::Complex64::new(r[2].parse().unwrap(), r[3].parse().unwrap());
        let d = layerclose::grid::boundary_distance(&curve, z);
        if d < 1e-3 {
            assert_eq!(&r[6], "excluded");
            excluded_near += 1;
        } else if d > 0.2 && &r[6] == "inside" {
            assert!(r[8].parse::<f64>().unwrap() < -11.0, "{r:?}");
        }
    }
    assert!(excluded_near > 0);
}

#[test]
fn predicted_contours_csv() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("{UNIT_DENSITY}\n[contours]\nepsilons = [1e-2, 1e-4, 1e-6]\nc = 1.0\npoints = 400\n");
    let (code, report) = run(dir.path(), &cfg, &["predict-contours"]);
    assert_eq!(code, 0);
    let (hash, rows, header) = csv_rows(&out(dir.path(), "contours.csv"));
    assert_eq!(header.iter().collect::<Vec<_>>(), ["x", "y", "alpha", "epsilon"]);
    assert_eq!(hash, format!("# config_hash={}", report["config_hash"].as_str().unwrap()));
    assert_eq!(rows.len() as u64, report["points"].as_u64().unwrap());
    for eps in ["0.01", "0.0001", "0.000001"] {
        let level: Vec<f64> = rows.iter().filter(|r| &r[3] == eps).map(|r| r[2].parse::<f64>().unwrap().abs()).collect();
        assert!(!level.is_empty(), "{eps}");
        let alpha = -eps.parse::<f64>().unwrap().ln() / 60.0;
        assert!(level.iter().all(|a| (a - alpha).abs() < 1e-12));
    }
}

#[test]
fn sweep_entire_data() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"
[curve]
name = "kite"

[problem]
kind = "laplace-dirichlet"
N = 130
data = { kind = "exp-cos" }

[grid]
spacing = 0.05

[sweep]
p = [4, 8, 10, 12]
beta = [1.0, 2.0, 3.0, 4.0, 5.0]
"#;
    let (code, report) = run(dir.path(), cfg, &["sweep"]);
    assert_eq!(code, 0);
    let (_, rows, header) = csv_rows(&out(dir.path(), "sweep.csv"));
    assert_eq!(header.iter().collect::<Vec<_>>(), ["p", "beta", "max_rel_err", "l2_rel_err"]);
    assert_eq!(rows.len(), 20);
    let best = report["best"]["max_rel_err"].as_f64().unwrap();
    assert!(best <= 1e-12, "{best}");
    for p in ["8", "10", "12"] {
        let errs: Vec<f64> = rows.iter().filter(|r| &r[0] == p).map(|r| r[2].parse().unwrap()).collect();
        let mut floor = f64::MAX;
        for e in errs {
            assert!(e.log10() <= floor.log10() + 1.0, "p={p}: {e} after {floor}");
            floor = floor.min(e);
        }
    }
}

#[test]
fn sweep_helmholtz_optimum_near_18() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"
[curve]
name = "kite"

[problem]
kind = "helmholtz-exterior"
N = 340
omega = 30.0
data = { kind = "point-source", omega = 30.0, center = [0.1, 0.2] }

[grid]
spacing = 0.04

[sweep]
p = [6, 10, 14, 18, 22, 26, 30]
beta = [6.0]
"#;
    let (code, report) = run(dir.path(), cfg, &["sweep"]);
    assert_eq!(code, 0);
    let p = report["best"]["p"].as_u64().unwrap();
    assert!((14..=22).contains(&p), "best p = {p}: {report}");
}

#[test]
fn bench_rejects_descending_sizes() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("seed = 1\n{DIRICHLET_XY}\n[bench]\nsizes = [200, 100]\n");
    assert_eq!(run(dir.path(), &cfg, &["bench"]).0, 2);
}

#[test]
fn curve_info_and_hashes() {
    let dir = TempDir::new().unwrap();
    let (code, report) = run(dir.path(), DIRICHLET_XY, &["curve-info"]);
    assert_eq!(code, 0);
    assert_eq!(report["boxes"], 26);
    let info: serde_json::Value = serde_json::from_str(&fs::read_to_string(out(dir.path(), "curve.json")).unwrap()).unwrap();
    assert_eq!(info["config_hash"], report["config_hash"]);
    assert_eq!(info["boxes"].as_array().unwrap().len(), 26);
    assert!(info["boxes"][0]["gamma"].as_f64().unwrap() > 1.0);
    assert!((info["boundary"][0][0].as_f64().unwrap() - 1.3).abs() < 1e-12);
    let other = DIRICHLET_XY.replace("N = 130", "N = 131");
    let (_, r2) = run(dir.path(), &other, &["curve-info"]);
    assert_ne!(r2["config_hash"], report["config_hash"]);
}
