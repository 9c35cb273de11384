use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;

use qrlab_core::grid::qrgf;
use qrlab_core::{GridDomain, MapFamily, Region};
use serde_json::Value;

fn qrlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrlab")).args(args).output().expect("binary runs")
}

fn summary(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON summary on stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn winding_degree_rounds_to_k() {
    let out = qrlab(&["degree", "--family", "winding", "--k", "3", "--y", "0,0"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let s = summary(&out);
    assert_eq!(s["results"]["degree"]["rounded"], 3);
    assert_eq!(s["results"]["degree"]["reliable"], true);
}

#[test]
fn demo_passes_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = qrlab(&["demo", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let s = summary(&out);
    assert_eq!(s["pass"], true);
    for table in s["tables"].as_array().unwrap() {
        let text = fs::read_to_string(dir.path().join(table.as_str().unwrap())).unwrap();
        assert!(!text.contains('\r'));
        let header = text.lines().next().unwrap();
        assert!(header.contains("resolution") && header.contains(",h,") || header.ends_with(",h"), "{header}");
    }
    let on_disk: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(on_disk, s);
}

#[test]
fn runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = qrlab(&["estimates", "--resolution", "32", "--out", dir.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let out = qrlab(&["algebra", "--seed", "11", "--samples", "50", "--out", dir.path().join("alg").to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    for name in ["summary.json", "estimates.csv", "alg/summary.json", "alg/identities.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    // one row per (cube, λ): 40 cubes × 5 exponents
    let csv = fs::read_to_string(a.path().join("estimates.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 40 * 5);
}

#[test]
fn seed_changes_random_cases() {
    let one = summary(&qrlab(&["algebra", "--seed", "1", "--samples", "20"]));
    let two = summary(&qrlab(&["algebra", "--seed", "2", "--samples", "20"]));
    assert_eq!(one["pass"], true);
    assert_ne!(one["results"]["comass"]["sampled"], two["results"]["comass"]["sampled"]);
}

#[test]
fn failed_assertion_exits_one() {
    let out = qrlab(&["degree", "--family", "winding", "--k", "2", "--expect-degree", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(summary(&out)["pass"], false);
    let out = qrlab(&["distortion", "--family", "winding", "--k", "3", "--distortion-k", "2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_json_exits_two_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", "{\n  \"resolution\": 32,\n  \"y\": [0.5 0.0]\n}\n");
    let out = qrlab(&["degree", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3 column"), "{}", stderr(&out));
}

#[test]
fn invalid_specs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(dir.path(), "unknown.json", r#"{"resolution": 32, "colour": "red"}"#);
    let out = qrlab(&["degree", "--config", &unknown]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown field"));

    let wrong = write(dir.path(), "wrong.json", r#"{"command": "limits"}"#);
    assert_eq!(qrlab(&["degree", "--config", &wrong]).status.code(), Some(2));
    assert_eq!(qrlab(&["degree", "--family", "covering", "--k", "2"]).status.code(), Some(2));
    assert_eq!(qrlab(&["degree", "--family", "no_such_map"]).status.code(), Some(2));
    // U reaches outside the sampled domain
    let outside = write(dir.path(), "outside.json", r#"{"u": {"shape": "ball", "center": [0, 0], "radius": 3}, "domain": {"shape": "ball", "center": [0, 0], "radius": 1}}"#);
    assert_eq!(qrlab(&["degree", "--config", &outside]).status.code(), Some(2));
}

#[test]
fn io_errors_exit_three() {
    assert_eq!(qrlab(&["demo", "--config", "/nonexistent/spec.json"]).status.code(), Some(3));
    assert_eq!(qrlab(&["degree", "--map-file", "/nonexistent/map.qrgf"]).status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let junk = write(dir.path(), "junk.qrgf", "not a grid file");
    assert_eq!(qrlab(&["degree", "--map-file", &junk]).status.code(), Some(3));
}

#[test]
fn config_file_drives_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "spec.json",
        r#"{
            "command": "degree",
            "map": {"family": "winding", "k": 2},
            "resolution": 96,
            "y": [0.5, 0.0],
            "expect": {"degree": 2}
        }"#,
    );
    let out = qrlab(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let s = summary(&out);
    assert_eq!(s["command"], "degree");
    assert_eq!(s["results"]["resolution"], 96);
    // flags override the file
    let out = qrlab(&["degree", "--config", &cfg, "--family", "winding", "--k", "3", "--expect-degree", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(qrlab(&["run"]).status.code(), Some(2));
}

#[test]
fn sampled_map_file_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let region = Region::ball(&[0.0, 0.0], 1.2);
    let dom = Arc::new(GridDomain::new(region.clone(), &[128, 128]).unwrap());
    let f = MapFamily::Winding { k: 2 }.sample(&dom).unwrap();
    let path = dir.path().join("winding.qrgf");
    qrgf::write_map(fs::File::create(&path).unwrap(), &f).unwrap();
    let cfg = write(
        dir.path(),
        "spec.json",
        &format!(
            r#"{{"map_file": {:?}, "domain": {}, "resolution": 128, "expect": {{"degree": 2}}}}"#,
            path.to_str().unwrap(),
            serde_json::to_string(&region).unwrap()
        ),
    );
    let out = qrlab(&["degree", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(summary(&out)["results"].get("preimage_count").is_none());
    // a file sampled at another resolution is rejected as malformed input
    let out = qrlab(&["degree", "--config", &cfg, "--resolution", "64"]);
    assert_eq!(out.status.code(), Some(3));
}
