use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn hubo(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_hubo"))
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "hubo {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json_file(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn generate(dir: &Path, n: usize, seed: u64) -> (String, String) {
    let inst = dir.join(format!("inst{n}.json"));
    let layout = dir.join(format!("layout{n}.json"));
    let (i, l) = (
        inst.to_str().unwrap().to_string(),
        layout.to_str().unwrap().to_string(),
    );
    hubo(&[
        "generate",
        "--n",
        &n.to_string(),
        "--truncation",
        "7",
        "--seed",
        &seed.to_string(),
        "--out",
        &i,
        "--layout-out",
        &l,
    ]);
    (i, l)
}

#[test]
fn sa_matches_brute_force_and_reports_modeled_time() {
    let dir = tempfile::tempdir().unwrap();
    let (inst, _) = generate(dir.path(), 10, 3);
    let out = dir.path().join("sa.json");
    hubo(&[
        "solve-sa",
        "--instance",
        &inst,
        "--sweeps",
        "2000",
        "--runs",
        "10",
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    let sa = json_file(&out);
    let bf: Value = serde_json::from_str(&hubo(&["brute-force", "--instance", &inst])).unwrap();
    let (e_sa, e_bf) = (
        sa["best_energy"].as_f64().unwrap(),
        bf["energy"].as_f64().unwrap(),
    );
    assert!((e_sa - e_bf).abs() < 1e-9);
    assert_eq!(sa["per_run"].as_array().unwrap().len(), 10);
    assert!((sa["modeled_cpu_seconds"].as_f64().unwrap() - 2000.0 * 10.0 * 0.6e-5).abs() < 1e-12);
    assert!(sa["measured_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn bfdcqo_run_and_program_dump() {
    let dir = tempfile::tempdir().unwrap();
    let (inst, layout) = generate(dir.path(), 8, 5);
    let dump = dir.path().join("prog.txt");
    let out = dir.path().join("bf.json");
    hubo(&[
        "run-bfdcqo",
        "--instance",
        &inst,
        "--layout",
        &layout,
        "--iters",
        "2",
        "--shots",
        "500",
        "--cvar",
        "20",
        "--gamma",
        "-0.1",
        "--seed",
        "4",
        "--dump-program",
        dump.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let r = json_file(&out);
    let its = r["iterations"].as_array().unwrap();
    assert_eq!(its.len(), 3);
    let best: Vec<f64> = its
        .iter()
        .map(|i| i["best_energy"].as_f64().unwrap())
        .collect();
    assert!(best.windows(2).all(|w| w[1] <= w[0]));
    assert!(
        its[0]["shot_summary"]["distinct_outcomes"]
            .as_u64()
            .unwrap()
            > 0
    );
    let text = std::fs::read_to_string(dump).unwrap();
    assert!(text.starts_with("# layer 0 single_qubit\n"));
    assert!(text.lines().filter(|l| !l.starts_with('#')).count() > 8);
}

#[test]
fn lp_export_and_warm_start() {
    let dir = tempfile::tempdir().unwrap();
    let (inst, _) = generate(dir.path(), 9, 2);
    let lp = dir.path().join("m.lp");
    let bits = dir.path().join("s.txt");
    let ws = dir.path().join("ws.txt");
    std::fs::write(&bits, "010011010\n").unwrap();
    let counts: Value = serde_json::from_str(&hubo(&[
        "export-lp",
        "--instance",
        &inst,
        "--out",
        lp.to_str().unwrap(),
        "--warm-start",
        bits.to_str().unwrap(),
        "--warm-out",
        ws.to_str().unwrap(),
    ]))
    .unwrap();
    let text = std::fs::read_to_string(lp).unwrap();
    assert!(text.lines().any(|l| l == "Minimize"));
    assert!(text.trim_end().ends_with("End"));
    let warm = std::fs::read_to_string(ws).unwrap();
    assert_eq!(
        warm.lines().count() as u64,
        counts["variables"].as_u64().unwrap()
    );
    assert!(warm.lines().next().unwrap().starts_with("x0 0"));
}

#[test]
fn trace_ingest_reports_first_crossing() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    std::fs::write(&trace, "seconds,objective\n1,-90\n2,-99\n3,-100\noptimal\n").unwrap();
    let r: Value = serde_json::from_str(&hubo(&[
        "ingest-trace",
        "--trace",
        trace.to_str().unwrap(),
        "--optimal",
        "-100",
        "--ratio",
        "0.95",
    ]))
    .unwrap();
    assert_eq!(r["tt_r"].as_f64(), Some(2.0));
    assert_eq!(r["proven_optimal"].as_bool(), Some(true));
}

#[test]
fn bench_writes_records_and_artifacts_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("suite.toml");
    std::fs::write(
        &cfg,
        r#"
name = "smoke"
seed = 11
sizes = [8, 10]
instances_per_size = 2
subject = "bfdcqo"
reference = "sa"

[generator]
s2q = 1
s3q = 2
sampler = { kind = "cauchy", truncation = 7.0 }

[[solvers]]
kind = "sa"
name = "sa"
n_sweep = 200
n_runs = 5

[[solvers]]
kind = "bfdcqo"
name = "bfdcqo"
n_iter = 1
n_shots = 300
n_cvar = 20
pre_sweeps = 10
pre_runs = 1
"#,
    )
    .unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        hubo(&[
            "bench",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        out
    };
    let (a, b) = (run("a"), run("b"));
    let csv = std::fs::read_to_string(a.join("records.csv")).unwrap();
    assert_eq!(csv, std::fs::read_to_string(b.join("records.csv")).unwrap());
    assert_eq!(csv.lines().count(), 1 + 4 * 2);
    for f in ["instance.json", "model.lp", "warm_start.txt", "traces.json"] {
        assert!(a.join("instances/n10_i1").join(f).exists(), "{f}");
    }
    let records = json_file(&a.join("records.json"));
    assert_eq!(records.as_array().unwrap().len(), 4);
}
