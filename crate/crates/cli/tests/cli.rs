use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hypermin"))
}

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(args: &[&str], config: Option<&str>, out: &Path) -> Output {
    let dir = out.parent().unwrap();
    let mut cmd = bin();
    if let Some(text) = config {
        let path = dir.join(format!("{}.json", out.file_name().unwrap().to_string_lossy()));
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.arg("--out").arg(out).args(args).output().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const N2: &str = r#"{
  "schemaVersion": 1,
  "expand": {
    "n": 2,
    "phi": [[{ "exp": [2], "num": 1, "den": 2 }, { "exp": [1], "num": 1, "den": 5 }]],
    "truncOrder": 8,
    "jetDegree": 6
  }
}"#;

#[test]
fn verify_flat_data() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("flat");
    let cfg = r#"{"schemaVersion": 1, "expand": {"n": 3, "phi": [[], []], "truncOrder": 8, "jetDegree": 4}}"#;
    let o = run(&["verify"], Some(cfg), &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&out.join("verify.json"));
    assert_eq!(v["pass"], true);
    assert_eq!(v["residual"]["lowestSurviving"], Value::Null);
    assert_eq!(v["residual"]["maxInside"], 0.0);
    assert_eq!(v["verticality"]["maxC1"], 0.0);
    let e = json(&out.join("expansion.json"));
    assert!(e["series"].as_array().unwrap().iter().all(|s| s["terms"].as_array().unwrap().is_empty()));
}

#[test]
fn truncation_below_resonance_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("k");
    let cfg = r#"{"schemaVersion": 1, "expand": {"n": 3, "phi": [[]], "truncOrder": 3, "jetDegree": 2}}"#;
    let o = run(&["expand"], Some(cfg), &out);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("truncOrder must be ≥ n+1") && err.contains("expand.truncOrder"), "{err}");
    let doc = json(&out.join("error.json"));
    assert_eq!(doc["path"], "expand.truncOrder");
    assert!(!out.join("expansion.json").exists());
}

#[test]
fn unknown_and_malformed_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"schemaVersion": 1, "solve": {"levels": 4, "grdi": {}}}"#, "solve.grdi"),
        (r#"{"schemaVersion": 1, "expand": {"n": 2, "phi": [[{"exp": [1], "num": "1/2"}]], "truncOrder": 4, "jetDegree": 2}}"#, "expand.phi[0][0].num"),
        (r#"{"schemaVersion": 1, "expand": {"n": 2, "phi": [[{"exp": [5], "num": 1}]], "truncOrder": 4, "jetDegree": 2}}"#, "expand.phi[0][0].exp"),
        (r#"{"schemaVersion": 1, "envelope": {"geometry": {"kind": "ellipse"}}}"#, "envelope.geometry.kind"),
        (r#"{"schemaVersion": 3}"#, "schemaVersion"),
    ];
    for (p, (cfg, path)) in cases.iter().enumerate() {
        let out = tmp.path().join(format!("case{p}"));
        let o = run(&["expand"], Some(cfg), &out);
        assert_eq!(o.status.code(), Some(2), "{cfg}");
        assert!(stderr(&o).contains(&format!("`{path}`")), "{cfg}: {}", stderr(&o));
    }
    let o = bin().args(["--config", "/nonexistent/config.json", "--out"]).arg(tmp.path().join("missing")).arg("solve").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn big_integer_coefficients() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("big");
    let cfg = r#"{"schemaVersion": 1, "expand": {"n": 2, "phi": [[{"exp": [2], "num": "123456789012345678901234567890", "den": "246913578024691357802469135780"}]], "truncOrder": 4, "jetDegree": 2}}"#;
    let o = run(&["expand"], Some(cfg), &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let e = json(&out.join("expansion.json"));
    let m = &e["series"][0]["terms"][0]["monomials"][0];
    assert_eq!((m["num"].as_str(), m["den"].as_str()), (Some("1"), Some("2")));
}

#[test]
fn float_mode_writes_dyadic_rationals() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("float");
    let o = run(&["--scalar", "float", "expand"], Some(N2), &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let e = json(&out.join("expansion.json"));
    assert_eq!(e["scalar"], "float");
    for t in e["series"][0]["terms"].as_array().unwrap() {
        for m in t["monomials"].as_array().unwrap() {
            let den: u128 = m["den"].as_str().unwrap().parse().unwrap();
            assert!(den.is_power_of_two(), "{m}");
        }
    }
    let csv = std::fs::read_to_string(out.join("coefficients.csv")).unwrap();
    assert!(csv.starts_with("i,j,component,max_abs,weighted_l1,at_origin\n"));
    let dat = std::fs::read_to_string(out.join("coefficients.dat")).unwrap();
    assert_eq!(csv.lines().count(), dat.lines().count());
}

#[test]
fn pipeline_two_dimensional() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("n2");
    let o = run(&["pipeline"], Some(N2), &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let p = json(&out.join("pipeline.json"));
    assert_eq!(p["pass"], true);
    assert_eq!(p["logDetected"], false);
    assert!(p["maxAbsErr"].as_f64().unwrap() <= 1e-3);
    let mut rdr = csv::Reader::from_path(out.join("comparison.csv")).unwrap();
    let mut checked = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        if &rec[9] == "0" {
            assert!(rec[7].parse::<f64>().unwrap() <= 1e-3, "{rec:?}");
            checked += 1;
        }
    }
    assert!(checked >= 4);
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["exitCode"], 0);
    let names: Vec<&str> = m["artifacts"].as_array().unwrap().iter().map(|a| a["name"].as_str().unwrap()).collect();
    for f in ["expansion.json", "solve_report.json", "fit.json", "comparison.csv", "convergence.dat", "pipeline.json"] {
        assert!(names.contains(&f), "{f}");
    }
}

#[test]
fn threads_do_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let one = tmp.path().join("t1");
    let four = tmp.path().join("t4");
    assert_eq!(run(&["pipeline"], Some(N2), &one).status.code(), Some(0));
    assert_eq!(run(&["--threads", "4", "pipeline"], Some(N2), &four).status.code(), Some(0));
    let a = json(&one.join("manifest.json"));
    let b = json(&four.join("manifest.json"));
    assert_eq!(a["artifacts"], b["artifacts"]);
    assert_ne!(a["threads"], b["threads"]);
}

#[test]
fn solver_failure_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fail");
    let cfg = N2.trim_end().trim_end_matches('}').to_string() + r#", "solve": {"newton": {"maxIter": 0}}}"#;
    let o = run(&["solve"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let e = json(&out.join("error.json"));
    assert_eq!(e["class"], "module");
    assert_eq!(e["module"], "solve");
    assert_eq!(e["kind"], "MaxIterations");
}

#[test]
fn rotational_solve_converges_at_second_order() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("rot");
    let o = bin().arg("--config").arg(repo().join("configs/rotational.json")).arg("--out").arg(&out).arg("solve").output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(&out.join("solve_report.json"));
    let order = r["convergence"]["order"].as_f64().unwrap();
    assert!((1.8..=2.2).contains(&order), "{order}");
    assert!(r["levels"].as_array().unwrap().iter().all(|l| l["report"]["finalResidual"].as_f64().unwrap() <= 1e-10));
    let g = json(&out.join("grid.json"));
    let nodes = g["nodes"].as_u64().unwrap() as usize;
    assert_eq!(std::fs::read_to_string(out.join("values.csv")).unwrap().lines().count(), nodes + 1);
}

#[test]
fn series_fit_recovers_coefficients() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("series");
    let cfg = N2.trim_end().trim_end_matches('}').to_string()
        + r#", "fit": {"source": {"kind": "series", "points": [[0.0], [0.1]], "radius": 1.0}, "config": {"logs": false, "maxOrder": 8}}}"#;
    let o = run(&["fit"], Some(&cfg), &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let f = json(&out.join("fit.json"));
    let rows = f["comparison"]["rows"].as_array().unwrap();
    for r in rows.iter().filter(|r| r["i"].as_u64().unwrap() <= 3) {
        assert!(r["absErr"].as_f64().unwrap() <= 1e-8 * r["formal"].as_f64().unwrap().abs().max(1.0), "{r}");
    }
}

#[test]
fn envelope_circle_and_crease() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("circle");
    let o = run(&["envelope", "--geometry", "circle"], None, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(out.join("delta.csv")).unwrap();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let (r, d): (f64, f64) = (rec[0].parse().unwrap(), rec[1].parse().unwrap());
        assert!((r - d).abs() <= 1e-10);
    }
    assert_eq!(json(&out.join("envelope.json"))["deficit"]["verdict"], "exact");

    let out = tmp.path().join("crease");
    let o = bin().arg("--config").arg(repo().join("configs/envelope_crease.json")).arg("--out").arg(&out).arg("envelope").output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let e = json(&out.join("envelope.json"));
    assert_eq!(e["deficit"]["verdict"], "pass");
    assert_eq!(e["offset"]["verdict"], "pass");
    assert_eq!(e["deltaBound"]["violations"], 0);
    let inside: Vec<bool> = e["queries"].as_array().unwrap().iter().map(|q| q["membership"]["inside"].as_bool().unwrap()).collect();
    assert_eq!(inside, [true, true, false, false]);
}

#[test]
fn envelope_cloud_file() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("circle.csv");
    let mut text = String::from("x,y,nx,ny\n");
    for j in 0..2000 {
        let th = 2.0 * std::f64::consts::PI * j as f64 / 2000.0;
        text.push_str(&format!("{},{},{},{}\n", th.cos(), th.sin(), th.cos(), th.sin()));
    }
    std::fs::write(&path, text).unwrap();
    let out = tmp.path().join("cloud");
    let cloud = path.to_str().unwrap();
    let o = run(&["envelope", "--cloud", cloud, "--alpha", "1", "--resolution", "0.01"], None, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["inputs"].as_array().unwrap().len(), 1);
    let e = json(&out.join("envelope.json"));
    assert_eq!(e["geometry"]["samples"], 2000);

    std::fs::write(&path, "x,y,nx,ny\n1,0,1,oops\n").unwrap();
    let o = run(&["envelope", "--cloud", cloud], None, &tmp.path().join("bad"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("not a number"));
}

#[test]
fn published_schema_is_current() {
    let o = bin().arg("schema").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let published = std::fs::read_to_string(repo().join("schema/experiment.schema.json")).unwrap();
    assert_eq!(String::from_utf8(o.stdout).unwrap(), published);
}
