use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn gsa(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsa"))
        .args(args)
        .current_dir(dir)
        .env_remove("GSA_OUT_DIR")
        .env_remove("GSA_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

/// Python model printing sum_j (j+1) x_j, one line per row.
fn weighted_sum_model(dir: &Path) -> PathBuf {
    let path = dir.join("model.py");
    fs::write(
        &path,
        "import sys\n\
         p, n = map(int, sys.stdin.readline().split(','))\n\
         for _ in range(n):\n    \
             x = [float(v) for v in sys.stdin.readline().split(',')]\n    \
             print(repr(sum((j + 1) * v for j, v in enumerate(x))))\n",
    )
    .unwrap();
    path
}

#[test]
fn sobol_run_reports_n_times_p_plus_two() {
    let t = tempfile::tempdir().unwrap();
    let o = gsa(t.path(), &["run", "--method", "sobol", "--model", "ishigami", "--n", "16384", "--seed", "1", "--out", "o"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(manifest(&t.path().join("o"))["eval_count"], 16384 * 5);
    let csv = fs::read_to_string(t.path().join("o/indices.csv")).unwrap();
    assert!(csv.starts_with("input,S,S_lo,S_hi,ST,ST_lo,ST_hi,"));
    assert_eq!(csv.lines().count(), 4);
    let json: Value = serde_json::from_str(&fs::read_to_string(t.path().join("o/indices.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 3);
}

#[test]
fn morris_streams_44_rows_to_external_model() {
    let t = tempfile::tempdir().unwrap();
    weighted_sum_model(t.path());
    let o = gsa(t.path(), &["run", "--method", "morris", "--p", "10", "--r", "4", "--model-cmd", "python3 model.py", "--out", "o"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(manifest(&t.path().join("o"))["eval_count"], 44);
    assert_eq!(fs::read_to_string(t.path().join("o/design.csv")).unwrap().lines().count(), 45);
    let idx = fs::read_to_string(t.path().join("o/indices.csv")).unwrap();
    for (i, line) in idx.lines().skip(1).enumerate() {
        let mean: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((mean - (i + 1) as f64).abs() < 1e-9, "{line}");
    }
}

#[test]
fn delta_on_given_data_makes_no_evaluations() {
    let t = tempfile::tempdir().unwrap();
    let mut csv = String::from("x1,x2,y\n");
    for k in 0..400 {
        let (a, b) = ((k as f64 * 0.618).fract(), (k as f64 * 0.414).fract());
        csv.push_str(&format!("{a},{b},{}\n", a + 3.0 * b));
    }
    fs::write(t.path().join("runs.csv"), csv).unwrap();
    let o = gsa(t.path(), &["run", "--method", "delta", "--data", "runs.csv", "--out", "o"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&t.path().join("o"));
    assert_eq!(m["eval_count"], 0);
    assert!(m["inputs"]["runs.csv"].is_string());
    // ALE needs fresh evaluations.
    assert_eq!(code(&gsa(t.path(), &["run", "--method", "ale", "--data", "runs.csv", "--out", "o2"])), 4);
}

#[test]
fn exit_codes() {
    let t = tempfile::tempdir().unwrap();
    let p = t.path();
    assert_eq!(code(&gsa(p, &["run", "--method", "sobol", "--model", "nope"])), 2);
    assert_eq!(code(&gsa(p, &["run", "--method", "fast", "--model", "ishigami", "--n", "10"])), 2);
    assert_eq!(code(&gsa(p, &["run", "--method", "sobol", "--model", "ishigami", "--r", "3"])), 2);
    assert_eq!(code(&gsa(p, &["run", "--method", "morris", "--model", "ishigami", "--steps", "1.5"])), 2);
    assert_eq!(code(&gsa(p, &["frobnicate"])), 2);
    fs::write(p.join("fail.py"), "import sys\nsys.stdin.read()\nprint('1.0')\nsys.exit(1)\n").unwrap();
    let o = gsa(p, &["run", "--method", "dgsm", "--p", "2", "--n", "10", "--model-cmd", "python3 fail.py"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("1 completed rows"));
    let copula = r#"{"dims":[{"kind":"uniform","a":0,"b":1},{"kind":"uniform","a":0,"b":1}],
        "dependence":{"kind":"gaussian_copula","correlation":[[1,0.8],[0.8,1]]}}"#;
    fs::write(p.join("copula.json"), copula).unwrap();
    let o = gsa(p, &["run", "--method", "sobol", "--model", "linear", "--space", "copula.json"]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn replay_is_byte_identical() {
    let t = tempfile::tempdir().unwrap();
    let p = t.path();
    weighted_sum_model(p);
    let runs: [&[&str]; 4] = [
        &["run", "--method", "sobol", "--model", "ishigami", "--n", "512", "--bins", "8", "--seed", "9", "--out", "a"],
        &["run", "--method", "shapley", "--model", "ishigami", "--n-perm", "30", "--n-var", "500", "--out", "b"],
        &["run", "--method", "dsd", "--p", "5", "--model-cmd", "python3 model.py", "--out", "c"],
        &["converge", "--methods", "sobol,fast", "--model", "ishigami", "--n-grid", "128,256", "--replicates", "3", "--out", "d"],
    ];
    for args in runs {
        let o = gsa(p, args);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let out = args.last().unwrap();
        let r = gsa(p, &["replay", &format!("{out}/manifest.json")]);
        assert_eq!(code(&r), 0, "{args:?}: {}", String::from_utf8_lossy(&r.stderr));
        for file in manifest(&p.join(out))["outputs"].as_object().unwrap().keys() {
            assert_eq!(fs::read(p.join(out).join(file)).unwrap(), fs::read(p.join(out).join("replay").join(file)).unwrap());
        }
    }
}

#[test]
fn replay_detects_changed_outputs() {
    let t = tempfile::tempdir().unwrap();
    let p = t.path();
    assert_eq!(code(&gsa(p, &["run", "--method", "dgsm", "--model", "ishigami", "--n", "20", "--out", "a"])), 0);
    let path = p.join("a/manifest.json");
    let mut m: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    m["outputs"]["indices.csv"] = Value::from("0".repeat(64));
    fs::write(&path, serde_json::to_string(&m).unwrap()).unwrap();
    assert_eq!(code(&gsa(p, &["replay", "a/manifest.json"])), 3);
}

#[test]
fn flags_override_config_file() {
    let t = tempfile::tempdir().unwrap();
    let p = t.path();
    fs::write(p.join("run.cfg"), "# budget\nmethod = dgsm\nmodel = ishigami\nn = 50\nout = cfgout\n").unwrap();
    assert_eq!(code(&gsa(p, &["run", "--config", "run.cfg", "--n", "10"])), 0);
    assert_eq!(manifest(&p.join("cfgout"))["eval_count"], 10 * 7);
    fs::write(p.join("bad.cfg"), "colour = blue\n").unwrap();
    assert_eq!(code(&gsa(p, &["run", "--config", "bad.cfg"])), 2);
}

#[test]
fn environment_sets_output_dir_and_threads() {
    let t = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_gsa"))
        .args(["run", "--method", "fast", "--model", "ishigami", "--n", "100"])
        .current_dir(t.path())
        .env("GSA_OUT_DIR", "from-env")
        .env("GSA_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let m = manifest(&t.path().join("from-env"));
    assert_eq!(m["threads"], 2);
    assert_eq!(m["eval_count"], 300);
}

#[test]
fn converge_writes_long_form_rows() {
    let t = tempfile::tempdir().unwrap();
    let p = t.path();
    let o = gsa(p, &["converge", "--model", "ishigami", "--n-grid", "64,128", "--replicates", "1", "--metric", "rmse", "--out", "c"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = fs::read_to_string(p.join("c/errors.csv")).unwrap();
    assert!(rows.starts_with("method,n,replicate,index,metric,error,eval_count\n"));
    // One row per (n, index) with a single replicate.
    assert_eq!(rows.lines().count(), 1 + 2 * 2);
    assert_eq!(code(&gsa(p, &["converge", "--methods", "morris", "--model", "ishigami", "--n-grid", "8"])), 2);
    assert_eq!(code(&gsa(p, &["converge", "--model", "ishigami", "--n-grid", "128,64"])), 2);
}

#[test]
fn dsd_budget_and_design_only_mode() {
    let t = tempfile::tempdir().unwrap();
    let p = t.path();
    assert_eq!(code(&gsa(p, &["run", "--method", "dsd", "--p", "10", "--out", "d"])), 0);
    assert_eq!(manifest(&p.join("d"))["eval_count"], 0);
    assert_eq!(fs::read_to_string(p.join("d/design.csv")).unwrap().lines().count(), 26);
    let o = gsa(p, &["run", "--method", "dsd", "--model", "linear", "--param", "beta=1,2,0,0,0,3", "--out", "e"]);
    assert_eq!(code(&o), 0);
    // 2 (p + fake + parity) + 1 with p = 6, two fakes.
    assert_eq!(manifest(&p.join("e"))["eval_count"], 17);
}
