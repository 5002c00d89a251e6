use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_paillier-accel"));
    c.env_remove("PAILLIER_ACCEL_WORKERS").env_remove("PAILLIER_ACCEL_BATCH_SIZE").env_remove("PAILLIER_ACCEL_RING_SLOTS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn without_timing(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timing");
    v
}

fn keygen(dir: &Path, bits: u64, seed: u64) -> PathBuf {
    let base = dir.join(format!("key{bits}_{seed}"));
    let out = run(&["keygen", "--bits", &bits.to_string(), "--out", s(&base), "--seed", &seed.to_string()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    base
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn help_and_argument_errors() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["keygen", "--bits", "512", "--out", "/tmp/x", "--bogus"])), 1);
    assert_eq!(code(&run(&["no-such-command"])), 1);
    assert_eq!(code(&run(&["train-demo", "--model", "tree"])), 1);
}

#[test]
fn keygen_writes_a_key_of_the_requested_size() {
    let dir = tempfile::tempdir().unwrap();
    let base = keygen(dir.path(), 1024, 1);
    let public = read_json(&PathBuf::from(format!("{}.pub.json", s(&base))));
    assert_eq!(public["key_bits"], 1024);
    let n = public["n"].as_str().unwrap().trim_start_matches("0x");
    let top = u8::from_str_radix(&n[..1], 16).unwrap();
    assert_eq!((n.len() - 1) * 4 + (8 - top.leading_zeros() as usize), 1024);
    let private = read_json(&PathBuf::from(format!("{}.priv.json", s(&base))));
    for field in ["lambda", "mu", "p", "q"] {
        assert!(private[field].is_string(), "{field}");
    }
}

#[test]
fn keygen_rejects_bad_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("k");
    for bits in ["15", "17", "0"] {
        let out = run(&["keygen", "--bits", bits, "--out", s(&base)]);
        assert_eq!(code(&out), 1, "{bits}");
        assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    }
    assert!(!dir.path().join("k.pub.json").exists());
}

#[test]
fn keygen_is_deterministic_per_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ka = keygen(a.path(), 128, 9);
    let kb = keygen(b.path(), 128, 9);
    for suffix in [".pub.json", ".priv.json"] {
        let pa = std::fs::read(format!("{}{suffix}", s(&ka))).unwrap();
        let pb = std::fs::read(format!("{}{suffix}", s(&kb))).unwrap();
        assert_eq!(pa, pb);
    }
    let kc = keygen(a.path(), 128, 10);
    assert_ne!(
        std::fs::read(format!("{}.pub.json", s(&ka))).unwrap(),
        std::fs::read(format!("{}.pub.json", s(&kc))).unwrap()
    );
}

#[test]
fn file_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let key = keygen(dir.path(), 256, 2);
    // 256-bit n holds 31 bytes per chunk
    let mut cases: Vec<Vec<u8>> = vec![vec![], vec![0], vec![0; 31], vec![0; 62], vec![0xff; 93]];
    cases.push((0..1000u32).map(|i| (i.wrapping_mul(2654435761) >> 13) as u8).collect());
    cases.push([vec![7u8; 30], vec![0u8; 40]].concat());
    for (i, data) in cases.iter().enumerate() {
        let plain = dir.path().join(format!("p{i}"));
        let enc = dir.path().join(format!("p{i}.json"));
        let back = dir.path().join(format!("p{i}.out"));
        std::fs::write(&plain, data).unwrap();
        let e = run(&["encrypt", "--key", s(&key), "--in", s(&plain), "--out", s(&enc), "--seed", "3"]);
        assert!(e.status.success(), "{}", String::from_utf8_lossy(&e.stderr));
        let d = run(&["decrypt", "--key", s(&key), "--in", s(&enc), "--out", s(&back), "--workers", "3"]);
        assert!(d.status.success(), "{}", String::from_utf8_lossy(&d.stderr));
        assert_eq!(&std::fs::read(&back).unwrap(), data, "case {i}");
    }
}

#[test]
fn encryption_is_seeded_and_randomized() {
    let dir = tempfile::tempdir().unwrap();
    let key = keygen(dir.path(), 128, 4);
    let plain = dir.path().join("p");
    std::fs::write(&plain, b"the same bytes twice").unwrap();
    let encrypt = |name: &str, seed: &str, workers: &str| {
        let out = dir.path().join(name);
        let r = run(&["encrypt", "--key", s(&key), "--in", s(&plain), "--out", s(&out), "--seed", seed, "--workers", workers]);
        assert!(r.status.success());
        std::fs::read(out).unwrap()
    };
    let a = encrypt("a", "1", "1");
    assert_eq!(a, encrypt("b", "1", "4"));
    assert_ne!(a, encrypt("c", "2", "1"));
}

#[test]
fn decrypt_failures_are_runtime_errors() {
    let dir = tempfile::tempdir().unwrap();
    let k1 = keygen(dir.path(), 128, 5);
    let k2 = keygen(dir.path(), 128, 6);
    let plain = dir.path().join("p");
    let enc = dir.path().join("p.json");
    std::fs::write(&plain, b"secret").unwrap();
    assert!(run(&["encrypt", "--key", s(&k1), "--in", s(&plain), "--out", s(&enc)]).status.success());
    let wrong = run(&["decrypt", "--key", s(&k2), "--in", s(&enc), "--out", s(&dir.path().join("x"))]);
    assert_eq!(code(&wrong), 2);
    let missing = run(&["decrypt", "--key", s(&k1), "--in", "/no/such/file", "--out", s(&dir.path().join("x"))]);
    assert_eq!(code(&missing), 2);
    let no_key = run(&["encrypt", "--key", s(&dir.path().join("absent")), "--in", s(&plain), "--out", s(&enc)]);
    assert_eq!(code(&no_key), 2);
}

#[test]
fn bench_modmult_reports_the_cycle_model() {
    let v = ok_json(&["bench-modmult", "--bits", "1024", "--iters", "200", "--json", "--seed", "3"]);
    assert_eq!(v["ideal_cycles"], 1056);
    assert_eq!(v["inner_iterations_per_mul"], 32 * 33);
    assert_eq!(v["inner_iterations_total"], 200 * 32 * 33);
    assert!(v["overhead_ratio"].as_f64().unwrap() <= 1.10);
    assert!(v["timing"]["ops_per_second"].as_f64().unwrap() > 0.0);
    let sweep = v["sweep"].as_array().unwrap();
    assert_eq!(sweep.len(), 4);
    assert!(sweep.iter().all(|r| r["overhead_ratio"].as_f64().unwrap() <= 1.10));
    let again = ok_json(&["bench-modmult", "--bits", "1024", "--iters", "200", "--json", "--seed", "3"]);
    assert_eq!(without_timing(v), without_timing(again));
}

#[test]
fn bench_modmult_validation() {
    assert_eq!(code(&run(&["bench-modmult", "--iters", "0"])), 1);
    assert_eq!(code(&run(&["bench-modmult", "--bits", "1000", "--word-size", "32"])), 1);
    assert_eq!(code(&run(&["bench-modmult", "--word-size", "64"])), 1);
    // a schedule the pipeline cannot sustain is reported, not fatal
    let v = ok_json(&["bench-modmult", "--bits", "64", "--iters", "10", "--json"]);
    assert!(v["overhead_ratio"].is_null());
    assert!(v["schedule_error"].is_string());
}

#[test]
fn bench_paillier_verifies_and_is_seeded() {
    let args = ["bench-paillier", "--bits", "256", "--ops", "12", "--batch-size", "5", "--workers", "2", "--json", "--seed", "8"];
    let v = ok_json(&args);
    assert_eq!(v["verified"], true);
    assert_eq!(v["timing"]["encrypt_queue"]["batches"].as_array().unwrap().len(), 3);
    let m = &v["modeled"];
    assert_eq!(m["encrypt"]["mont_muls_measured"], m["encrypt"]["mont_muls_predicted"]);
    assert_eq!(m["decrypt"]["mont_muls_measured"], m["decrypt"]["mont_muls_predicted"]);
    assert_eq!(without_timing(v), without_timing(ok_json(&args)));
    assert_eq!(code(&run(&["bench-paillier", "--ops", "0"])), 1);
    assert_eq!(code(&run(&["bench-paillier", "--bits", "256", "--batch-size", "0"])), 1);
}

#[test]
fn model_report_default_matches_the_operating_point() {
    let v = ok_json(&["model-report", "--json"]);
    let per_dsp = v["operating_point_throughput"]["ops_per_second_per_dsp"].as_f64().unwrap();
    assert!((per_dsp - 12626.0).abs() / 12626.0 <= 0.02, "{per_dsp}");
    assert_eq!(v["resources"]["dsp_per_core"], 9);
    assert_eq!(v["cycle_table"].as_array().unwrap().len(), 4);
    let table = run(&["model-report"]);
    assert!(String::from_utf8_lossy(&table.stdout).contains("op/s per DSP"));
}

fn config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn model_report_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let zero = config(dir.path(), "zero.json", r#"{"resources": {"total_dsp": 0}}"#);
    assert_eq!(code(&run(&["model-report", "--config", s(&zero)])), 1);
    let unknown = config(dir.path(), "unknown.json", r#"{"clock": 1}"#);
    assert_eq!(code(&run(&["model-report", "--config", s(&unknown)])), 1);
    let broken = config(dir.path(), "broken.json", "{");
    assert_eq!(code(&run(&["model-report", "--config", s(&broken)])), 1);
    assert_eq!(code(&run(&["model-report", "--config", "/no/such/config.json"])), 2);
}

#[test]
fn doubling_the_dsp_budget_doubles_throughput() {
    let dir = tempfile::tempdir().unwrap();
    // enough slices that the DSP budget is what limits the core count
    let one = config(dir.path(), "a.json", r#"{"resources": {"total_dsp": 900, "total_slices": 10000000}}"#);
    let two = config(dir.path(), "b.json", r#"{"resources": {"total_dsp": 1800, "total_slices": 10000000}}"#);
    let a = ok_json(&["model-report", "--json", "--config", s(&one)]);
    let b = ok_json(&["model-report", "--json", "--config", s(&two)]);
    let rate = |v: &Value| v["simulated_throughput"]["ops_per_second"].as_f64().unwrap();
    assert!((rate(&b) / rate(&a) - 2.0).abs() < 1e-12);
}

fn trace_lines(stdout: &[u8]) -> Vec<Value> {
    String::from_utf8_lossy(stdout).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn train_demo_synthetic_linear_passes_its_check() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.jsonl");
    let args = [
        "train-demo", "--model", "linear", "--iters", "10", "--samples", "40", "--features", "4", "--key-bits", "256",
        "--json", "--seed", "2", "--trace", s(&trace),
    ];
    let out = run(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = trace_lines(&out.stdout);
    assert_eq!(lines.len(), 11);
    assert_eq!(std::fs::read(&trace).unwrap(), out.stdout);
    for l in &lines[1..] {
        let phases: f64 = ["encrypt_ms", "aggregate_ms", "decrypt_ms", "local_ms"].iter().map(|k| l[k].as_f64().unwrap()).sum();
        let total = l["total_ms"].as_f64().unwrap();
        assert!((phases - total).abs() <= 0.05 * total);
    }
    let losses: Vec<f64> = lines.iter().map(|l| l["loss"].as_f64().unwrap()).collect();
    assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");

    // same seed, same trace apart from the timings
    let strip = |v: &Value| (v["iteration"].clone(), v["loss"].clone(), v["weights"].clone());
    let again = trace_lines(&run(&args).stdout);
    assert_eq!(lines.iter().map(strip).collect::<Vec<_>>(), again.iter().map(strip).collect::<Vec<_>>());
}

#[test]
fn train_demo_zero_iterations() {
    let out = run(&["train-demo", "--iters", "0", "--key-bits", "128", "--json"]);
    assert!(out.status.success());
    let lines = trace_lines(&out.stdout);
    assert_eq!(lines.len(), 1);
    assert_eq!(lines[0]["iteration"], 0);
    assert!(lines[0]["weights"].as_array().unwrap().iter().all(|w| w.as_f64() == Some(0.0)));
}

#[test]
fn train_demo_dataset_errors() {
    let missing = run(&["train-demo", "--dataset", "/no/such/data.csv", "--key-bits", "128"]);
    assert_ne!(code(&missing), 0);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/no/such/data.csv"));

    let dir = tempfile::tempdir().unwrap();
    let bad = config(dir.path(), "bad.csv", "a,b,y\n1,2,x\n");
    let out = run(&["train-demo", "--dataset", s(&bad), "--key-bits", "128"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));

    let huge = config(dir.path(), "huge.csv", "a,b,y\n1,2,1e80\n3,4,0\n");
    let out = run(&["train-demo", "--dataset", s(&huge), "--key-bits", "128", "--iters", "1"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("sample 0"));
}

#[test]
fn train_demo_reads_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = String::from("x1,x2,x3,label\n");
    for i in 0..20 {
        let x = i as f64;
        body.push_str(&format!("{},{},{},{}\n", x, (x * 0.7).sin(), 20.0 - x, u8::from(i % 3 == 0)));
    }
    let data = config(dir.path(), "d.csv", &body);
    let out = run(&[
        "train-demo", "--model", "logistic", "--dataset", s(&data), "--standardize", "--iters", "3", "--key-bits", "256",
        "--parties", "3", "--json",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = trace_lines(&out.stdout);
    assert_eq!(lines.len(), 4);
    assert!(lines[3]["log_loss"].as_f64().is_some());
}
