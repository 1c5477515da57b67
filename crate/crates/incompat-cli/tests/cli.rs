use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn incompat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_incompat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn export(dir: &Path, name: &str, d: usize) -> PathBuf {
    let path = dir.join(format!("{name}-{d}.json"));
    let out = incompat(&[
        "export",
        name,
        "--dim",
        &d.to_string(),
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn robustness_value(args: &[&str]) -> Value {
    let mut full = vec!["robustness"];
    full.extend_from_slice(args);
    let out = incompat(&full);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    json_stdout(&out)
}

#[test]
fn check_exit_codes_follow_the_verdict() {
    let dir = TempDir::new().unwrap();
    let (q, p) = (export(dir.path(), "q", 2), export(dir.path(), "p", 2));
    let id = export(dir.path(), "identity", 2);
    let trivial = export(dir.path(), "trivial", 2);
    let depol = export(dir.path(), "depolarizing", 2);

    let out = incompat(&["check", "jm", s(&q), s(&p)]);
    assert_eq!(code(&out), 1);
    assert_eq!(json_stdout(&out)["verdict"], "infeasible");

    assert_eq!(code(&incompat(&["check", "chan", s(&id), s(&id)])), 1);

    let out = incompat(&["check", "obschan", s(&trivial), s(&depol)]);
    assert_eq!(code(&out), 0);
    let report = json_stdout(&out);
    assert_eq!(report["verdict"], "feasible");
    assert!(report["witness"].is_object());

    assert_eq!(code(&incompat(&["check", "jm", s(&q), s(&q)])), 0);
    assert_eq!(
        code(&incompat(&["check", "obschan", s(&trivial), s(&id)])),
        0
    );
}

/// `t·M + (1−t)·I/d`, entrywise on the exported JSON.
fn unsharp(path: &Path, t: f64, d: usize, dest: &Path) {
    let mut m: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    for e in m["effects"].as_array_mut().unwrap() {
        for (i, row) in e.as_array_mut().unwrap().iter_mut().enumerate() {
            for (j, z) in row.as_array_mut().unwrap().iter_mut().enumerate() {
                let re =
                    z[0].as_f64().unwrap() * t + if i == j { (1.0 - t) / d as f64 } else { 0.0 };
                *z = serde_json::json!([re, z[1].as_f64().unwrap() * t]);
            }
        }
    }
    std::fs::write(dest, m.to_string()).unwrap();
}

#[test]
fn tiny_iteration_budget_is_undecided() {
    let dir = TempDir::new().unwrap();
    let (q, p) = (export(dir.path(), "q", 3), export(dir.path(), "p", 3));
    let (qs, ps) = (dir.path().join("qs.json"), dir.path().join("ps.json"));
    // compatible, but close enough to the boundary that two iterations
    // cannot show it
    unsharp(&q, 0.6, 3, &qs);
    unsharp(&p, 0.6, 3, &ps);
    let out = incompat(&["check", "jm", s(&qs), s(&ps), "--max-iters", "2"]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json_stdout(&out)["verdict"], "undecided");
    assert_eq!(code(&incompat(&["check", "jm", s(&qs), s(&ps)])), 0);
}

#[test]
fn robustness_of_the_worked_examples() {
    let dir = TempDir::new().unwrap();
    let pair = export(dir.path(), "weyl-pair", 2);
    let noise = export(dir.path(), "weyl-noise", 2);
    let v = robustness_value(&[s(&pair), "--noise", s(&noise)]);
    assert!(
        (v["value"].as_f64().unwrap() - 0.853553).abs() < 1e-3,
        "{v}"
    );
    assert_eq!(v["mode"], "relative");
    assert_eq!(v["lower_bound_only"], false);
    let r = v["robustness_r"].as_f64().unwrap();
    assert!((r - (1.0 / v["value"].as_f64().unwrap() - 1.0)).abs() < 1e-12);

    let pair = export(dir.path(), "identity-pair", 2);
    let noise = export(dir.path(), "decodable-noise-pair", 2);
    let v = robustness_value(&[s(&pair), "--noise", s(&noise)]);
    assert!((v["value"].as_f64().unwrap() - 0.75).abs() < 1e-3, "{v}");

    // a compatible pair needs no noise at all
    let trivial: Value =
        serde_json::from_str(&std::fs::read_to_string(export(dir.path(), "trivial", 2)).unwrap())
            .unwrap();
    let id: Value =
        serde_json::from_str(&std::fs::read_to_string(export(dir.path(), "identity", 2)).unwrap())
            .unwrap();
    let pair = dir.path().join("compatible.json");
    std::fs::write(
        &pair,
        serde_json::json!({"kind": "obschan", "first": trivial, "second": id}).to_string(),
    )
    .unwrap();
    let noise = export(dir.path(), "vn-noise-pair", 2);
    let v = robustness_value(&[s(&pair), "--noise", s(&noise)]);
    assert_eq!(v["value"].as_f64().unwrap(), 1.0);
}

#[test]
fn noise_directory_is_read_in_name_order() {
    let dir = TempDir::new().unwrap();
    let pair = export(dir.path(), "vn-pair", 3);
    let noise_dir = dir.path().join("noise");
    std::fs::create_dir(&noise_dir).unwrap();
    let good = export(dir.path(), "vn-noise-pair", 3);
    std::fs::copy(&good, noise_dir.join("b.json")).unwrap();
    std::fs::copy(&pair, noise_dir.join("a.json")).unwrap();
    std::fs::write(noise_dir.join("notes.txt"), "ignored").unwrap();

    let v = robustness_value(&[s(&pair), "--noise-dir", s(&noise_dir)]);
    assert_eq!(v["lower_bound_only"], true);
    assert_eq!(v["candidate"], 1);
    assert!(v["noise_source"].as_str().unwrap().ends_with("b.json"));
    assert!(
        (v["value"].as_f64().unwrap() - 0.788675).abs() < 2e-3,
        "{v}"
    );
}

#[test]
fn mismatched_noise_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let pair = export(dir.path(), "weyl-pair", 2);
    let noise = export(dir.path(), "decodable-noise-pair", 2);
    assert_eq!(
        code(&incompat(&["robustness", s(&pair), "--noise", s(&noise)])),
        64
    );
    assert_eq!(code(&incompat(&["robustness", s(&pair)])), 64);
}

#[test]
fn verify_theorems_table_and_json() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let out = incompat(&["verify-theorems", "--dims", "2,3", "--out", s(&a)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(table.lines().count(), 7);
    assert_eq!(table.lines().filter(|l| l.ends_with("PASS")).count(), 6);

    assert_eq!(
        code(&incompat(&[
            "verify-theorems",
            "--dims",
            "2,3",
            "--out",
            s(&b)
        ])),
        0
    );
    let (ja, jb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ja, jb, "two runs must be byte-identical");
    let rows: Value = serde_json::from_slice(&ja).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 6);

    let out = incompat(&[
        "verify-theorems",
        "--dims",
        "2",
        "--theorem",
        "decodable_channels",
        "--json",
    ]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let json_start = text.find('[').unwrap();
    let rows: Value = serde_json::from_str(&text[json_start..]).unwrap();
    assert_eq!(rows[0]["name"], "decodable_channels");
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&incompat(&["verify-theorems", "--dims", "1"])), 64);
    assert_eq!(code(&incompat(&["verify-theorems", "--dims", "2,6"])), 64);
    assert_eq!(
        code(&incompat(&["verify-theorems", "--theorem", "nonsense"])),
        64
    );
    assert_eq!(code(&incompat(&["no-such-command"])), 64);
    assert_eq!(
        code(&incompat(&[
            "check",
            "jm",
            "missing-a.json",
            "missing-b.json"
        ])),
        64
    );
    assert_eq!(code(&incompat(&["export", "q", "--dim", "1"])), 64);
    assert_eq!(code(&incompat(&["--tol", "-1", "export", "q"])), 64);
    assert_eq!(code(&incompat(&["--help"])), 0);

    let dir = TempDir::new().unwrap();
    let q = export(dir.path(), "q", 2);
    let id = export(dir.path(), "identity", 2);
    let q3 = export(dir.path(), "q", 3);
    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{not json").unwrap();
    assert_eq!(code(&incompat(&["check", "jm", s(&q), s(&id)])), 64);
    assert_eq!(code(&incompat(&["check", "jm", s(&q), s(&q3)])), 64);
    assert_eq!(code(&incompat(&["check", "jm", s(&q), s(&garbage)])), 64);
}

#[test]
fn monotonicity_is_seeded() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    assert_eq!(
        code(&incompat(&["monotonicity", "--seed", "7", "--out", s(&a)])),
        0
    );
    assert_eq!(
        code(&incompat(&["monotonicity", "--seed", "7", "--out", s(&b)])),
        0
    );
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let report: Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!(report["seed"], 7);
}

#[test]
fn weyl_closed_form_in_dimension_four() {
    let out = incompat(&[
        "verify-theorems",
        "--dims",
        "4",
        "--theorem",
        "weyl_pair",
        "--json",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Value = serde_json::from_str(&text[text.find('[').unwrap()..]).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 1);
    assert!((rows[0]["closed_form"].as_f64().unwrap() - 0.75).abs() < 1e-12);
}
