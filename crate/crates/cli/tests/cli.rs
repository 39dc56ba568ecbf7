use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn carleman(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carleman"))
        .args(args)
        .output()
        .expect("spawn carleman")
}

fn path_arg(p: &std::path::Path) -> &str {
    p.to_str().expect("utf-8 path")
}

#[test]
fn verify_zero_operator_exits_zero() {
    let op = fixture("zero.json");
    let out = carleman(&["verify", "--operator", path_arg(&op)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text
        .lines()
        .all(|l| l.starts_with("CHECK ") || l.starts_with("RESULT ")));
    assert!(text
        .lines()
        .filter(|l| l.starts_with("CHECK "))
        .all(|l| l.ends_with(" PASS")));
    assert!(text.trim_end().ends_with("failed=0"));
}

#[test]
fn verify_with_swapped_unitary_exits_three() {
    let op = fixture("zero.json");
    let cfg = fixture("corrupt_u.toml");
    let out = carleman(&["verify", "--operator", path_arg(&op), "--config", path_arg(&cfg)]);
    assert_eq!(out.status.code(), Some(3));
    let text = String::from_utf8(out.stdout).unwrap();
    let failed: Vec<&str> = text.lines().filter(|l| l.ends_with(" FAIL")).collect();
    assert_eq!(failed.len(), 1, "{failed:?}");
    assert!(failed[0].starts_with("CHECK unitarity "));
}

#[test]
fn eval_writes_one_row_per_grid_point_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let op = fixture("rank1.json");
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = carleman(&[
            "eval",
            "--operator",
            path_arg(&op),
            "--grid",
            "64",
            "--out",
            path_arg(&path),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(path).unwrap()
    };
    let a = run("a.csv");
    let b = run("b.csv");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let rows = carleman_core::io::read_grid_csv(&text).unwrap();
    assert_eq!(rows.len(), 64 * 64);
    assert_eq!(rows[0].s, -10.0);
    assert!(rows.iter().any(|r| r.value.norm() > 0.0));
}

#[test]
fn verify_output_is_byte_identical_across_runs() {
    let op = fixture("rank1.json");
    let a = carleman(&["verify", "--operator", path_arg(&op), "--imax", "1"]);
    let b = carleman(&["verify", "--operator", path_arg(&op), "--imax", "1"]);
    assert_eq!(a.status.code(), b.status.code());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn malformed_operator_exits_one_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let op = dir.path().join("bad.json");
    std::fs::write(&op, "{\n  \"dim\": 2,\n  \"matrix\": [\n    [[0, 0], [0 0]]\n  ]\n}\n").unwrap();
    let out = carleman(&["inspect", "--operator", path_arg(&op)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn unknown_config_field_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "i_max = 2\nbogus = 1\n").unwrap();
    let op = fixture("zero.json");
    let out = carleman(&["inspect", "--operator", path_arg(&op), "--config", path_arg(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn non_member_operator_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let op = dir.path().join("full.json");
    let doc =
        r#"{"dim": 2, "matrix": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]], "null_indices": [0], "complement_indices": [1]}"#;
    std::fs::write(&op, doc).unwrap();
    let out = carleman(&["inspect", "--operator", path_arg(&op)]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn inspect_reports_membership_and_normalization() {
    let op = fixture("desk.json");
    let out = carleman(&["inspect", "--operator", path_arg(&op)]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("dim 8\n"));
    assert_eq!(text.lines().filter(|l| l.starts_with("null ")).count(), 6);
    assert!(text.contains("membership member=true"));
    assert!(text.lines().last().unwrap().starts_with("normalization kept="));
}

#[test]
fn json_stages_emit_valid_documents() {
    let op = fixture("rank1.json");
    for stage in ["split", "assign", "kernel"] {
        let out = carleman(&[stage, "--operator", path_arg(&op), "--imax", "1"]);
        assert_eq!(out.status.code(), Some(0), "{stage}");
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert!(v.is_object(), "{stage}");
    }
}

#[test]
fn missing_operator_is_a_usage_error() {
    let out = carleman(&["inspect"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn fixtures_round_trip_through_the_writer() {
    for name in ["zero.json", "rank1.json", "desk.json"] {
        let text = std::fs::read_to_string(fixture(name)).unwrap();
        let env = carleman_core::io::parse_operator(&text).unwrap();
        assert_eq!(carleman_core::io::operator_to_string(&env), text, "{name}");
    }
}
