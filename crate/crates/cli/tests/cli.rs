use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_block-smoo"));
    cmd.env_remove("BLOCKSMOO_CACHE");
    cmd
}

fn run(cmd: &mut Command) -> (i32, String, String) {
    let Output { status, stdout, stderr } = cmd.output().expect("spawn block-smoo");
    (
        status.code().expect("exit code"),
        String::from_utf8_lossy(&stdout).into_owned(),
        String::from_utf8_lossy(&stderr).into_owned(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

const SINGLE_CELL: &str = r#"
name = "single"
seed = 3
seeds = 1
algorithms = ["block-smoo"]
step_sizes = [0.05]
checkpoints = 4

[problem]
kind = "quadratic"
instance_seed = 1
n = 6
q = 2
eig_lo = 0.5
eig_hi = 2.0
center_scale = 1.0
noise_std = 0.1

[budget]
kind = "work-units"
value = 600
"#;

#[test]
fn single_cell_run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "single.toml", SINGLE_CELL);
    for out in ["a", "b"] {
        let (code, stdout, stderr) = run(bin().arg("run").arg("--config").arg(&cfg).arg("--out").arg(dir.path().join(out)));
        assert_eq!(code, 0, "{stderr}");
        assert!(stdout.contains("1 cells (0 failed)"), "{stdout}");
    }
    let cells: Vec<_> = fs::read_dir(dir.path().join("a/cells")).unwrap().collect();
    assert_eq!(cells.len(), 1);
    let name = "cells/block-smoo_step-0.05_seed-0.csv";
    let a = fs::read(dir.path().join("a").join(name)).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b").join(name)).unwrap());
    assert_eq!(fs::read(dir.path().join("a/summary.json")).unwrap(), fs::read(dir.path().join("b/summary.json")).unwrap());
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("a/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["best"][0]["step_size"], 0.05);
}

#[test]
fn worker_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &SINGLE_CELL.replace("seeds = 1", "seeds = 4"));
    for (out, workers) in [("one", "1"), ("three", "3")] {
        let (code, _, stderr) =
            run(bin().args(["run", "--workers", workers, "--config"]).arg(&cfg).arg("--out").arg(dir.path().join(out)));
        assert_eq!(code, 0, "{stderr}");
    }
    assert_eq!(fs::read(dir.path().join("one/summary.json")).unwrap(), fs::read(dir.path().join("three/summary.json")).unwrap());
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SINGLE_CELL);
    let cell = "cells/block-smoo_step-0.05_seed-0.csv";
    let mut outputs = Vec::new();
    for (out, seed) in [("base", None), ("same", Some("3")), ("other", Some("4"))] {
        let mut cmd = bin();
        cmd.arg("run").arg("--config").arg(&cfg).arg("--out").arg(dir.path().join(out));
        if let Some(s) = seed {
            cmd.args(["--seed", s]);
        }
        assert_eq!(run(&mut cmd).0, 0);
        outputs.push(fs::read(dir.path().join(out).join(cell)).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_ne!(outputs[0], outputs[2]);
}

#[test]
fn config_errors_exit_two_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", &SINGLE_CELL.replace("step_sizes = [0.05]", "step_sizes = [0.05, -1.0]"));
    let (code, _, stderr) = run(bin().arg("run").arg("--config").arg(&bad));
    assert_eq!(code, 2);
    assert!(stderr.contains("step_sizes[1]"), "{stderr}");

    let unknown = write(dir.path(), "unknown.toml", &format!("{SINGLE_CELL}\nbogus = 1\n"));
    let (code, _, stderr) = run(bin().arg("run").arg("--config").arg(&unknown));
    assert_eq!(code, 2);
    assert!(stderr.contains("bogus"), "{stderr}");

    let (code, _, _) = run(bin().args(["run", "--config"]).arg(dir.path().join("missing.toml")));
    assert_eq!(code, 2);
    let (code, _, _) = run(bin().arg("frobnicate"));
    assert_eq!(code, 2);
    let (code, _, _) = run(bin().args(["verify", "nonsense"]));
    assert_eq!(code, 2);
}

#[test]
fn toy_sweep_writes_fronts_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/toy-sweep.toml");
    let out = dir.path().join("sweep");
    let (code, stdout, stderr) = run(bin().arg("sweep").arg("--config").arg(&cfg).arg("--out").arg(&out));
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("5 frequency vectors"));
    let metrics: serde_json::Value = serde_json::from_slice(&fs::read(out.join("metrics.json")).unwrap()).unwrap();
    let methods = metrics["metrics"]["methods"].as_array().unwrap();
    assert_eq!(methods.len(), 2);
    for m in methods {
        assert_eq!(m["runs"], 5);
        let purity = m["purity"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&purity));
    }
    for file in ["block-smoo.csv", "weighted-sum.csv", "block-smoo.nondominated.csv", "weighted-sum.nondominated.csv"] {
        assert!(out.join(file).exists(), "{file}");
    }
    // header plus one row per frequency vector
    assert_eq!(fs::read_to_string(out.join("block-smoo.csv")).unwrap().lines().count(), 6);
}

#[test]
fn verify_exit_status_follows_suites() {
    let (code, stdout, _) = run(bin().args(["verify", "mapping"]));
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["passed"], true);

    let (code, stdout, _) = run(bin().args(["verify", "gradients", "--plant-fault"]));
    assert_eq!(code, 1);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["suites"][0]["passed"], false);
}

#[test]
fn rate_report_has_slope_and_interval() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let (code, _, stderr) = run(bin().args(["verify", "rate-pl", "--out"]).arg(&out));
    assert_eq!(code, 0, "{stderr}");
    let report: serde_json::Value = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
    let details = &report["suites"][0]["details"];
    assert!(details["fit"]["slope"].is_f64());
    assert!(details["fit"]["stderr"].is_f64());
    assert_eq!(details["interval"].as_array().unwrap().len(), 2);
}

const HEADER: &str = "No,year,month,day,hour,PM2.5,PM10,SO2,NO2,CO,O3,TEMP,PRES,DEWP,RAIN,wd,WSPM,station";

fn toy_source(dir: &Path) {
    let mut body = format!("{HEADER}\n");
    for h in 0..20 {
        let wd = ["N", "SE", "WNW"][h % 3];
        body.push_str(&format!(
            "{},2015,1,3,{h},{},{},{},20,500,40,{},1020,{},0.0,{wd},{},Aotizhongxin\n",
            h + 1,
            12 + h,
            40 + 3 * h,
            2 + h % 5,
            -3.0 + h as f64 * 0.4,
            -12 - (h % 4) as i64,
            1.0 + (h % 3) as f64
        ));
    }
    fs::write(dir.join("PRSA_Aotizhongxin.csv"), body).unwrap();
}

#[test]
fn ingest_writes_cache_and_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let source = dir.path().join("raw");
    fs::create_dir(&source).unwrap();
    toy_source(&source);
    let cache_root = dir.path().join("cache");

    let (code, stdout, stderr) = run(bin().arg("ingest").arg(&source).env("BLOCKSMOO_CACHE", &cache_root));
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("14 train + 6 test, d = 35, q = 6"), "{stdout}");
    let cache = cache_root.join("air-quality.cache");
    let sidecar: serde_json::Value = serde_json::from_slice(&fs::read(cache.with_extension("json")).unwrap()).unwrap();
    assert_eq!(sidecar["d"], 35);
    let before = fs::metadata(&cache).unwrap().modified().unwrap();

    let (code, stdout, _) = run(bin().arg("ingest").arg(&source).env("BLOCKSMOO_CACHE", &cache_root));
    assert_eq!(code, 0);
    assert!(stdout.contains("nothing to do"), "{stdout}");
    assert_eq!(fs::metadata(&cache).unwrap().modified().unwrap(), before);

    // the cached dataset feeds a run through the cache root
    let cfg = write(
        dir.path(),
        "aq.toml",
        r#"
name = "aq"
seeds = 1
algorithms = ["block-smoo", "weighted-sum"]
step_sizes = [0.01]
batch = 4

[problem]
kind = "cache"
path = "air-quality.cache"
rank = 2
responses = ["PM2.5", "SO2"]

[budget]
kind = "data-passes"
passes = 2.0
"#,
    );
    let (code, stdout, stderr) =
        run(bin().arg("run").arg("--config").arg(&cfg).arg("--out").arg(dir.path().join("aq")).env("BLOCKSMOO_CACHE", &cache_root));
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("2 cells (0 failed)"), "{stdout}");
}

#[test]
fn ingest_failures() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run(bin().arg("ingest").arg(dir.path().join("nope")).arg("--out").arg(dir.path().join("c.cache")));
    assert_eq!(code, 1);
    assert!(stderr.contains("ingestion error"), "{stderr}");
    let (code, _, stderr) = run(bin().arg("ingest").arg(dir.path()).arg("--fetch"));
    assert_eq!(code, 2);
    assert!(stderr.contains("--fetch"), "{stderr}");
}

#[test]
fn synth_cache_round_trips_into_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("synth.cache");
    let (code, _, stderr) = run(bin()
        .args(["synth", "--n-train", "256", "--n-test", "32", "--d", "8", "--q", "3", "--r", "2", "--out"])
        .arg(&cache));
    assert_eq!(code, 0, "{stderr}");
    let cfg = write(
        dir.path(),
        "s.toml",
        &format!(
            r#"
name = "s"
seeds = 2
algorithms = ["block-smoo", "function-alternate", "block-alternate", "weighted-sum"]
step_sizes = [0.01, 0.05]
batch = 32

[problem]
kind = "cache"
path = "{}"
rank = 2

[budget]
kind = "data-passes"
passes = 3.0
"#,
            cache.display()
        ),
    );
    let (code, stdout, stderr) = run(bin().arg("run").arg("--config").arg(&cfg).arg("--out").arg(dir.path().join("s")));
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("16 cells (0 failed)"), "{stdout}");

    let (code, _, _) = run(bin().args(["synth", "--r", "9", "--out"]).arg(dir.path().join("bad.cache")));
    assert_eq!(code, 2);
}
