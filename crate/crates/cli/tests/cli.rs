use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ncd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncd"))
        .args(args)
        .current_dir(dir)
        .env_remove("NCD_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn rectangle_pipeline() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    let o = ncd(
        p,
        &[
            "construct",
            "--t",
            "0,1",
            "--labels",
            "0",
            "--variant",
            "mt2",
            "-o",
            "rect.json",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with('f')).count(), 4);

    let o = ncd(p, &["lift", "--in", "rect.json", "--m", "6", "-o", "rect_m6.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("4 equations, ambient dim 10"));
    assert_eq!(fs::read_to_string(p.join("rect_m6.txt")).unwrap().lines().count(), 4);

    let o = ncd(
        p,
        &[
            "verify",
            "--in",
            "rect_m6.json",
            "--seed",
            "42",
            "--samples",
            "2000",
            "-o",
            "rep.json",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(p.join("rep.json")).unwrap()).unwrap();
    let sv = rep["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["id"] == "verify.singular_values")
        .unwrap();
    assert_eq!(sv["details"]["found"], serde_json::json!(["0", "1"]));
}

#[test]
fn r_plus_and_mt3_rejection() {
    let d = tempfile::tempdir().unwrap();
    let o = ncd(
        d.path(),
        &[
            "construct",
            "--t",
            "0,1,2",
            "--labels",
            "1,0",
            "--variant",
            "mt2",
            "-o",
            "rp.json",
        ],
    );
    assert!(o.status.success());
    assert!(stdout(&o).contains("r-plus"));
    let o = ncd(
        d.path(),
        &["construct", "--t", "0,1,2", "--labels", "0,0", "--variant", "mt3"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("MT3 requires l ≠ 3"));
}

#[test]
fn strip_slice_witness() {
    let d = tempfile::tempdir().unwrap();
    ncd(
        d.path(),
        &[
            "construct",
            "--t",
            "0,1",
            "--labels",
            "1",
            "--variant",
            "mt2",
            "-o",
            "strip.json",
        ],
    );
    let o = ncd(d.path(), &["slice", "--in", "strip.json", "--t", "0.5"]);
    assert!(o.status.success());
    assert!(
        stdout(&o).starts_with("unbounded; escape witness (0.5, 96.0)"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn invalid_inputs_exit_2() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    for args in [
        &["construct", "--t", "1,0", "--labels", "0", "--variant", "mt2"][..],
        &["construct", "--t", "0,1", "--labels", "0,1", "--variant", "mt2"],
        &["construct", "--t", "0,1", "--labels", "2", "--variant", "mt2"],
        &["lift", "--in", "missing.json"],
    ] {
        assert_eq!(ncd(p, args).status.code(), Some(2), "{args:?}");
    }
    fs::write(p.join("bad.json"), "{\n  \"n\": 2,\n  \"oops\": 1\n}\n").unwrap();
    let o = ncd(p, &["verify", "--in", "bad.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("bad.json") && stderr(&o).contains("line"),
        "{}",
        stderr(&o)
    );
    ncd(
        p,
        &[
            "construct",
            "--t",
            "0,1",
            "--labels",
            "0",
            "--variant",
            "mt2",
            "-o",
            "rect.json",
        ],
    );
    assert_eq!(
        ncd(p, &["lift", "--in", "rect.json", "--m", "3"]).status.code(),
        Some(2)
    );
    assert_eq!(
        ncd(p, &["plot", "--in", "rect.json", "--plane", "1,1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        ncd(p, &["plot", "--in", "rect.json", "--plane", "1,2,3"]).status.code(),
        Some(2)
    );
}

// verifying a lift whose labels were permuted must fail with exit code 1
#[test]
fn permuted_labels_exit_1() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    ncd(
        p,
        &[
            "construct",
            "--t",
            "0,1,2,3",
            "--labels",
            "1,0,0",
            "--variant",
            "mt2",
            "-o",
            "a.json",
        ],
    );
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(p.join("a.json")).unwrap()).unwrap();
    let iv = v["expected"]["intervals"].as_array_mut().unwrap();
    for (k, b) in [(0, true), (1, false)] {
        iv[k]["bounded"] = b.into();
        iv[k]["label"] = u8::from(!b).into();
    }
    v["labels"] = serde_json::json!([0, 1, 0]);
    fs::write(p.join("perm.json"), serde_json::to_string_pretty(&v).unwrap()).unwrap();
    let o = ncd(
        p,
        &[
            "verify",
            "--in",
            "perm.json",
            "--samples",
            "500",
            "--skip-ncd",
            "-o",
            "rep.json",
        ],
    );
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(fs::read_to_string(p.join("rep.json")).unwrap().contains("but label"));
}

#[test]
fn seed_env_and_determinism() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    ncd(
        p,
        &[
            "construct",
            "--t",
            "0,1,2",
            "--labels",
            "0,1",
            "--variant",
            "mt2",
            "-o",
            "a.json",
        ],
    );
    let run = |seed: &str, out: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_ncd"))
            .args(["verify", "--in", "a.json", "--samples", "400", "-o", out])
            .env("NCD_SEED", seed)
            .current_dir(p)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(p.join(out)).unwrap()
    };
    let a = run("7", "r1.json");
    assert_eq!(a, run("7", "r2.json"));
    assert!(String::from_utf8_lossy(&a).contains("\"seed\": 7"));
    assert_ne!(a, run("8", "r3.json"));
}

#[test]
fn plots() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    ncd(
        p,
        &[
            "construct",
            "--t",
            "0,1,2,3",
            "--labels",
            "1,0,1",
            "--variant",
            "mt2",
            "-o",
            "m.json",
        ],
    );
    let o = ncd(p, &["plot", "--in", "m.json", "--plane", "1,3", "-o", "m.svg"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = fs::read_to_string(p.join("m.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("hyperbola_region") && svg.contains("<circle"));
    let again = stdout(&ncd(p, &["plot", "--in", "m.json", "--plane", "1,3"]));
    assert_eq!(svg, again);
}
