use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use retrodict::io::{load_povm, load_report};
use retrodict::retrodiction::Category;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_retrodict"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn model(dir: &Path, name: &str, args: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut all = vec!["model"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--out", p(&path)]);
    ok(&all);
    path
}

/// Numeric column of a table, counted from the right so quoted labels with
/// commas in the first column do not shift it.
fn csv_column(text: &str, col_from_end: usize) -> Vec<f64> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.rsplit(',').nth(col_from_end).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn model_files() {
    let dir = tempfile::tempdir().unwrap();
    let apd = load_povm(model(
        dir.path(),
        "apd.json",
        &["apd", "--eta", "0.5", "--nu", "0", "--dim", "8"],
    ))
    .unwrap();
    assert_eq!(apd.labels().collect::<Vec<_>>(), ["off", "on"]);

    let lossy = load_povm(model(
        dir.path(),
        "l.json",
        &["lossy-pnr", "--eta", "1", "--dim", "6"],
    ))
    .unwrap();
    let ideal = load_povm(model(dir.path(), "i.json", &["ideal-pnr", "--dim", "6"])).unwrap();
    assert_eq!(lossy.len(), ideal.len());
    for (a, b) in lossy.elements().iter().zip(ideal.elements()) {
        assert_eq!(a.label(), b.label());
        assert_eq!(a.operator().max_diff(b.operator()), 0.0);
    }

    let sp = load_povm(model(
        dir.path(),
        "sp.json",
        &[
            "scaled-projector",
            "--target",
            "fock:1",
            "--zeta",
            "0.3",
            "--dim",
            "8",
        ],
    ))
    .unwrap();
    assert_eq!(sp.labels().collect::<Vec<_>>(), ["element", "rest"]);
    let rest = sp.element("rest").unwrap().operator().eigh().unwrap();
    assert!((rest.values[0] - 0.7).abs() < 1e-12);
    assert!(rest.values.iter().skip(1).all(|v| (v - 1.0).abs() < 1e-12));

    let out = run(&["model", "apd", "--dim", "8"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["model", "apd", "--eta", "1.5", "--dim", "8"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["model", "photodiode", "--dim", "8"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn characterize_examples() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let ideal = model(d, "ideal.json", &["ideal-pnr", "--dim", "6"]);
    let rep = d.join("ideal.report.json");
    ok(&["characterize", p(&ideal), "--out", p(&rep)]);
    let r = load_report(&rep).unwrap();
    assert_eq!(r.rows.len(), 6);
    for row in &r.rows {
        assert!((row.projectivity - 1.0).abs() < 1e-12 && (row.ideality - 1.0).abs() < 1e-12);
        assert_eq!(row.category, Category::ProjectiveIdeal);
    }

    let apd = model(
        d,
        "apd.json",
        &["apd", "--eta", "0.5", "--nu", "0", "--dim", "8"],
    );
    let stdout = ok(&["characterize", p(&apd), "--target", "fock:1"]);
    let r: retrodict::io::ReportFile = serde_json::from_str(&stdout).unwrap();
    let on = r.rows.iter().find(|x| x.outcome_label == "on").unwrap();
    let t = &on.targets[0];
    assert_eq!(t.target, "fock:1");
    assert!((t.detectivity - on.ideality * t.fidelity / on.projectivity).abs() <= 1e-9);

    let sp = model(
        d,
        "sp.json",
        &[
            "scaled-projector",
            "--target",
            "fock:1",
            "--zeta",
            "0.3",
            "--dim",
            "8",
        ],
    );
    let stdout = ok(&["characterize", p(&sp), "--target", "fock:1"]);
    let r: retrodict::io::ReportFile = serde_json::from_str(&stdout).unwrap();
    let e = &r.rows[0];
    assert_eq!(e.outcome_label, "element");
    assert!((e.targets[0].fidelity - 1.0).abs() < 1e-12);
    assert!((e.targets[0].detectivity - 0.3).abs() < 1e-12);
    assert_eq!(e.category, Category::ProjectiveNonIdeal);
}

#[test]
fn reports_embed_digest_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let apd = model(
        d,
        "apd.json",
        &["apd", "--eta", "0.4", "--nu", "0.01", "--dim", "7"],
    );
    let rep = d.join("r.json");
    ok(&[
        "characterize",
        p(&apd),
        "--target",
        "coherent:0.5,0.5",
        "--out",
        p(&rep),
    ]);
    let first = fs::read(&rep).unwrap();
    ok(&[
        "characterize",
        p(&apd),
        "--target",
        "coherent:0.5,0.5",
        "--out",
        p(&rep),
    ]);
    assert_eq!(fs::read(&rep).unwrap(), first);
    ok(&["verify-report", p(&rep), "--povm", p(&apd)]);

    let other = model(d, "other.json", &["ideal-pnr", "--dim", "7"]);
    assert_eq!(
        run(&["verify-report", p(&rep), "--povm", p(&other)])
            .status
            .code(),
        Some(2)
    );

    let mut v: Value = serde_json::from_slice(&first).unwrap();
    v["rows"][0]["ideality"] = Value::from(0.5);
    let tampered = d.join("t.json");
    fs::write(&tampered, serde_json::to_string(&v).unwrap()).unwrap();
    let out = run(&["verify-report", p(&tampered)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("off"));
}

#[test]
fn validation_failures() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ideal = model(d, "ideal.json", &["ideal-pnr", "--dim", "4"]);
    let mut v: Value = serde_json::from_str(&fs::read_to_string(&ideal).unwrap()).unwrap();
    for o in v["outcomes"].as_array_mut().unwrap() {
        for (i, row) in o["matrix"].as_array_mut().unwrap().iter_mut().enumerate() {
            let re = row[i][0].as_f64().unwrap();
            row[i][0] = Value::from(re * 1.5);
        }
    }
    let bad = d.join("bad.json");
    fs::write(&bad, serde_json::to_string(&v).unwrap()).unwrap();
    let out = run(&["validate", p(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((report["completeness_residual"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(run(&["characterize", p(&bad)]).status.code(), Some(2));

    let garbage = d.join("garbage.json");
    fs::write(&garbage, "{\"format_version\": \"1\",\n \"dim\": }").unwrap();
    let out = run(&["characterize", p(&garbage)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("garbage.json:2:"));

    assert_eq!(
        run(&["characterize", p(&d.join("missing.json"))])
            .status
            .code(),
        Some(4)
    );
    let out = ok(&["validate", p(&ideal)]);
    assert!(out.contains("\"pass\": true"));
}

#[test]
fn wigner_examples() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ideal = model(d, "ideal.json", &["ideal-pnr", "--dim", "10"]);
    let grid = [
        "--x-min", "-4", "--x-max", "4", "--p-min", "-4", "--p-max", "4", "--nx", "41", "--np",
        "41",
    ];

    let w0 = d.join("w0.csv");
    let mut args = vec!["wigner", p(&ideal), "--outcome", "0", "--out", p(&w0)];
    args.extend_from_slice(&grid);
    ok(&args);
    let values = csv_column(&fs::read_to_string(&w0).unwrap(), 0);
    assert_eq!(values.len(), 41 * 41);
    assert!(values.iter().all(|&w| w > 0.0));

    let w1 = d.join("w1.csv");
    let side = d.join("w1.json");
    let mut args = vec![
        "wigner",
        p(&ideal),
        "--outcome",
        "1",
        "--out",
        p(&w1),
        "--report",
        p(&side),
    ];
    args.extend_from_slice(&grid);
    ok(&args);
    let s: Value = serde_json::from_str(&fs::read_to_string(&side).unwrap()).unwrap();
    assert!((s["report"]["min_wigner"].as_f64().unwrap() + 1.0 / PI).abs() < 1e-6);
    assert_eq!(s["report"]["is_nonclassical"], Value::Bool(true));
    assert!(s["convention"].as_str().unwrap().starts_with("hbar=1"));

    let apd = model(
        d,
        "apd.json",
        &["apd", "--eta", "0.5", "--nu", "0", "--dim", "12"],
    );
    let w = d.join("off.csv");
    let mut args = vec!["wigner", p(&apd), "--outcome", "off", "--out", p(&w)];
    args.extend_from_slice(&grid);
    ok(&args);
    let s: Value =
        serde_json::from_str(&fs::read_to_string(d.join("off.csv.report.json")).unwrap()).unwrap();
    assert!(s["report"]["min_wigner"].as_f64().unwrap() > 0.0);
    assert_eq!(s["report"]["squeezing_witness"], Value::Bool(false));
    assert_eq!(s["report"]["is_nonclassical"], Value::Bool(false));

    let out = run(&["wigner", p(&ideal), "--outcome", "nope", "--out", p(&w)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn null_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ideal = model(d, "ideal.json", &["ideal-pnr", "--dim", "3"]);
    let mut v: Value = serde_json::from_str(&fs::read_to_string(&ideal).unwrap()).unwrap();
    let zero = serde_json::json!([
        [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
        [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
        [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]
    ]);
    v["outcomes"]
        .as_array_mut()
        .unwrap()
        .push(serde_json::json!({"label": "never", "matrix": zero}));
    let path = d.join("with_null.json");
    fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
    let r: retrodict::io::ReportFile =
        serde_json::from_str(&ok(&["characterize", p(&path)])).unwrap();
    assert_eq!(r.rows.len(), 3);
    assert_eq!(r.null_outcomes[0].label, "never");
    let out = run(&[
        "wigner",
        p(&path),
        "--outcome",
        "never",
        "--out",
        p(&d.join("w.csv")),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn herald_examples() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ideal = model(d, "ideal.json", &["ideal-pnr", "--dim", "30"]);
    let table = ok(&[
        "herald",
        p(&ideal),
        "--outcome",
        "3",
        "--lambdas",
        "0.2,0.5,0.7",
    ]);
    assert!(csv_column(&table, 1)
        .iter()
        .all(|f| (f - 1.0).abs() < 1e-12));

    let apd = model(
        d,
        "apd.json",
        &["apd", "--eta", "0.5", "--nu", "0", "--dim", "80"],
    );
    let out = d.join("scan.csv");
    ok(&[
        "herald",
        p(&apd),
        "--outcome",
        "on",
        "--lambdas",
        "0.3,0.6,0.9",
        "--dim",
        "80",
        "--out",
        p(&out),
    ]);
    let text = fs::read_to_string(&out).unwrap();
    let f = csv_column(&text, 1);
    assert!(f[0] < f[1] && f[1] < f[2]);
    assert!(text.contains("# strictly_increasing: true"));

    let apd30 = model(
        d,
        "apd30.json",
        &["apd", "--eta", "0.5", "--nu", "0", "--dim", "30"],
    );
    let refused = run(&["herald", p(&apd30), "--outcome", "on", "--lambdas", "0.999"]);
    assert_eq!(refused.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&refused.stderr).contains("tail"));

    let mismatch = run(&[
        "herald",
        p(&apd30),
        "--outcome",
        "on",
        "--lambdas",
        "0.5",
        "--dim",
        "40",
    ]);
    assert_eq!(mismatch.status.code(), Some(2));
}

#[test]
fn retrodict_examples() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ideal = model(d, "ideal.json", &["ideal-pnr", "--dim", "10"]);
    let lossy = model(
        d,
        "lossy.json",
        &["lossy-pnr", "--eta", "0.6", "--dim", "10"],
    );
    let ens = d.join("ens.json");
    ok(&["ensemble", "--dim", "10", "--fock", "10", "--out", p(&ens)]);

    let post = csv_column(
        &ok(&[
            "retrodict",
            p(&ideal),
            "--outcome",
            "2",
            "--ensemble",
            p(&ens),
        ]),
        0,
    );
    for (m, v) in post.iter().enumerate() {
        assert_eq!(*v, if m == 2 { 1.0 } else { 0.0 });
    }

    let post = csv_column(
        &ok(&[
            "retrodict",
            p(&lossy),
            "--outcome",
            "1",
            "--ensemble",
            p(&ens),
        ]),
        0,
    );
    let w: Vec<f64> = (0..10)
        .map(|m| m as f64 * 0.6 * 0.4f64.powi(m - 1))
        .collect();
    let total: f64 = w.iter().sum();
    for (v, w) in post.iter().zip(&w) {
        assert!((v - w / total).abs() < 1e-10);
    }
    assert!((post.iter().sum::<f64>() - 1.0).abs() < 1e-9);

    let single = d.join("single.json");
    ok(&[
        "ensemble",
        "--dim",
        "10",
        "--state",
        "coherent:0.7,0",
        "--out",
        p(&single),
    ]);
    let post = csv_column(
        &ok(&[
            "retrodict",
            p(&lossy),
            "--outcome",
            "1",
            "--ensemble",
            p(&single),
        ]),
        0,
    );
    assert_eq!(post, vec![1.0]);

    let vac = d.join("vac.json");
    ok(&[
        "ensemble",
        "--dim",
        "10",
        "--state",
        "fock:0",
        "--out",
        p(&vac),
    ]);
    let out = run(&[
        "retrodict",
        p(&ideal),
        "--outcome",
        "2",
        "--ensemble",
        p(&vac),
    ]);
    assert_eq!(out.status.code(), Some(3));

    let out = run(&[
        "ensemble", "--dim", "10", "--state", "fock:0", "--state", "fock:1", "--prior", "0.5",
        "--prior", "0.6",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn environment_overrides_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let apd = model(
        dir.path(),
        "apd.json",
        &["apd", "--eta", "0.5", "--nu", "0", "--dim", "8"],
    );
    let out = run_env(
        &["characterize", p(&apd)],
        &[("RETRODICT_PI_MIN", "0.1"), ("RETRODICT_ZETA_MIN", "0.1")],
    );
    assert!(out.status.success());
    let r: retrodict::io::ReportFile = serde_json::from_slice(&out.stdout).unwrap();
    assert!(r
        .rows
        .iter()
        .all(|x| x.category == Category::ProjectiveIdeal));
    assert_eq!(r.thresholds.pi_min, 0.1);

    let flag = ok(&["characterize", p(&apd), "--pi-min", "0.99"]);
    let r: retrodict::io::ReportFile = serde_json::from_str(&flag).unwrap();
    assert!(r.rows.iter().all(|x| x.category == Category::NonProjective));

    let bad = run_env(&["characterize", p(&apd)], &[("RETRODICT_PI_MIN", "high")]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn committed_corpus_regenerates_byte_for_byte() {
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let c = |name: &str| corpus.join(name);
    let dir = tempfile::tempdir().unwrap();
    let t = |name: &str| dir.path().join(name);

    let models: [(&str, &[&str]); 4] = [
        (
            "apd_eta0.5_dim8.json",
            &["apd", "--eta", "0.5", "--nu", "0", "--dim", "8"],
        ),
        ("ideal_pnr_dim6.json", &["ideal-pnr", "--dim", "6"]),
        (
            "lossy_pnr_eta0.6_dim10.json",
            &["lossy-pnr", "--eta", "0.6", "--dim", "10"],
        ),
        (
            "scaled_projector_fock1_dim8.json",
            &[
                "scaled-projector",
                "--target",
                "fock:1",
                "--zeta",
                "0.3",
                "--dim",
                "8",
            ],
        ),
    ];
    for (name, args) in models {
        model(dir.path(), name, args);
    }
    ok(&[
        "ensemble",
        "--dim",
        "10",
        "--fock",
        "10",
        "--out",
        p(&t("fock_ensemble_dim10.json")),
    ]);
    ok(&[
        "characterize",
        p(&c("apd_eta0.5_dim8.json")),
        "--target",
        "fock:1",
        "--out",
        p(&t("apd_eta0.5_dim8.report.json")),
    ]);
    ok(&[
        "retrodict",
        p(&c("lossy_pnr_eta0.6_dim10.json")),
        "--outcome",
        "1",
        "--ensemble",
        p(&c("fock_ensemble_dim10.json")),
        "--out",
        p(&t("lossy_posterior_outcome1.csv")),
    ]);
    ok(&[
        "wigner",
        p(&c("ideal_pnr_dim6.json")),
        "--outcome",
        "1",
        "--x-min",
        "-5",
        "--x-max",
        "5",
        "--p-min",
        "-5",
        "--p-max",
        "5",
        "--nx",
        "21",
        "--np",
        "21",
        "--out",
        p(&t("ideal_pnr_outcome1_wigner.csv")),
    ]);
    ok(&[
        "herald",
        p(&c("apd_eta0.5_dim8.json")),
        "--outcome",
        "on",
        "--lambdas",
        "0.1,0.2,0.3",
        "--out",
        p(&t("apd_on_herald.csv")),
    ]);

    let mut names: Vec<_> = fs::read_dir(&corpus)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 10);
    for name in names {
        assert_eq!(
            fs::read(c(&name)).unwrap(),
            fs::read(t(&name)).unwrap(),
            "{name}"
        );
    }
    ok(&[
        "verify-report",
        p(&c("apd_eta0.5_dim8.report.json")),
        "--povm",
        p(&c("apd_eta0.5_dim8.json")),
    ]);
}
