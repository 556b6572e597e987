use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn model(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/models")
        .join(format!("{}.model", name))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbitwalk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn count_matches_hand_enumeration() {
    let m = model("simple");
    let o = run(&["count", m.to_str().unwrap(), "--nmax", "2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "2");
    // tandem from the origin returns only at multiples of three
    let o = run(&[
        "count",
        model("tandem").to_str().unwrap(),
        "--nmax",
        "3",
        "--format",
        "csv",
    ]);
    assert_eq!(stdout(&o), "n,count\n3,1\n");
}

#[test]
fn analyze_reports_group_and_twists() {
    let o = run(&[
        "analyze",
        model("gouyou-beauchamps").to_str().unwrap(),
        "--format",
        "structured",
    ]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["group_order"], 8);
    assert_eq!(v["gamma"], "4");
    assert_eq!(v["certificate"]["passed"], true);
    assert_eq!(v["twists"].as_array().unwrap().len(), 2);
}

#[test]
fn saved_expansion_verifies_and_corruption_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let saved = dir.path().join("sw.json");
    let m = model("simple");
    let m = m.to_str().unwrap();
    let o = run(&[
        "expand",
        m,
        "--order",
        "3",
        "--format",
        "structured",
        "--out",
        saved.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!saved.with_extension("partial").exists());

    let verify = |path: &str| run(&["verify", m, "--expansion", path, "--end", "1,0", "--nmax", "160"]);
    let o = verify(saved.to_str().unwrap());
    assert_eq!(code(&o), 0, "{}", stdout(&o));

    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&saved).unwrap()).unwrap();
    let v2 = v["terms"][1].as_array_mut().unwrap();
    let last = v2.last_mut().unwrap();
    let text = last.as_str().unwrap().to_string();
    let (c, rest) = text.split_once(' ').unwrap();
    *last = Value::String(format!("{}0 {}", c, rest));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, serde_json::to_string(&v).unwrap()).unwrap();
    let o = verify(bad.to_str().unwrap());
    assert_eq!(code(&o), 7, "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn csv_verify_has_one_row_per_length() {
    let o = run(&[
        "verify",
        model("simple").to_str().unwrap(),
        "--nmin",
        "10",
        "--nmax",
        "40",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let mut lines = out.lines();
    assert!(lines.next().unwrap().starts_with("end,n"));
    // only even lengths return to the origin
    assert_eq!(lines.count(), 16);
}

#[test]
fn decompose_simple_walk() {
    let o = run(&[
        "decompose",
        model("simple").to_str().unwrap(),
        "--order",
        "2",
        "--window",
        "8",
        "--format",
        "structured",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["multivariate"], true);
    assert_eq!(v["polyharmonic_window"], true);
    assert_eq!(v["terms"].as_array().unwrap().len(), 5);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.model");
    assert_eq!(code(&run(&["analyze", missing.to_str().unwrap()])), 1);
    assert_eq!(
        code(&run(&["expand", model("simple").to_str().unwrap(), "--order", "0"])),
        2
    );
    assert_eq!(
        code(&run(&[
            "count",
            model("simple").to_str().unwrap(),
            "--nmax",
            "2",
            "--start",
            "1"
        ])),
        2
    );

    let garbage = dir.path().join("garbage.model");
    std::fs::write(&garbage, "dim 2\nstep 1 zero 1\n").unwrap();
    assert_eq!(code(&run(&["analyze", garbage.to_str().unwrap()])), 3);

    let drift = dir.path().join("drift.model");
    std::fs::write(
        &drift,
        "name drift\ndim 2\nstep 1 0 2\nstep 0 1 1\nstep -1 0 1\nstep 0 -1 1\n",
    )
    .unwrap();
    assert_eq!(code(&run(&["decompose", drift.to_str().unwrap()])), 4);
    // the expansion itself handles drift through the exponential prefactor
    assert_eq!(code(&run(&["expand", drift.to_str().unwrap(), "--order", "1"])), 0);

    // zero drift but an infinite group
    let infinite = dir.path().join("infinite.model");
    std::fs::write(
        &infinite,
        "name inf\ndim 2\nstep 1 1 1\nstep -1 0 1\nstep 0 -1 1\nstep 1 -1 1\nstep -1 1 1\n",
    )
    .unwrap();
    let o = run(&["expand", infinite.to_str().unwrap()]);
    assert_eq!(code(&o), 5, "{}", String::from_utf8_lossy(&o.stderr));
}
