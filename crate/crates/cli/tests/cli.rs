use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn dynsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynsim"))
        .args(args)
        .env_remove("DYNSIM_THREADS")
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, cmd: &str, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join(format!("{cmd}.toml"));
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let mut args = vec![
        cmd,
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ];
    args.extend_from_slice(extra);
    dynsim(&args)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const LORENZ: &str = r#"
version = 1
[generator]
kind = "lorenz"
steps = 400
"#;

fn generate_lorenz(dir: &Path) -> PathBuf {
    let o = run_in(dir, "generate", LORENZ, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    dir.join("out/trajectory.csv")
}

#[test]
fn generate_writes_lorenz_csv_and_metadata() {
    let dir = TempDir::new().unwrap();
    let csv = fs::read_to_string(generate_lorenz(dir.path())).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,ch0,ch1,ch2"));
    assert_eq!(lines.count(), 400);
    assert!(!csv.contains('\r'));

    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 0);
    assert_eq!(meta["channels"], 3);
    assert_eq!(meta["spec"]["generator"]["kind"], "lorenz");
    assert!(meta["artifact_version"].is_string());
}

#[test]
fn generate_is_deterministic() {
    let config = r#"
version = 1
projection = 6
[generator]
kind = "lorenz"
steps = 300
[noise]
kind = "isotropic"
snr = 20.0
"#;
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        let o = run_in(dir.path(), "generate", config, &["--seed", "11"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let read = |d: &TempDir| fs::read(d.path().join("out/trajectory.csv")).unwrap();
    assert_eq!(read(&a), read(&b));

    let c = TempDir::new().unwrap();
    run_in(c.path(), "generate", config, &["--seed", "12"]);
    assert_ne!(read(&a), read(&c));
}

#[test]
fn invalid_dt_is_a_config_error_naming_the_field() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        "generate",
        "version = 1\n[generator]\nkind = \"lorenz\"\ndt = 0.0\n",
        &[],
    );
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("dt"), "{}", stderr(&o));
}

#[test]
fn version_mismatch_and_unknown_fields_are_rejected() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        "generate",
        "version = 7\n[generator]\nkind = \"lorenz\"\n",
        &[],
    );
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("version"));
    let o = run_in(dir.path(), "generate", "[generator]\nkind = \"lorenz\"\n", &[]);
    assert_eq!(code(&o), 2);
    let o = run_in(
        dir.path(),
        "generate",
        "version = 1\n[generator]\nkind = \"lorenz\"\nsigmaa = 1.0\n",
        &[],
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), "generate", LORENZ, &["--threads", "0"]);
    assert_eq!(code(&o), 2);
    let o = run_in(dir.path(), "generate", LORENZ, &["--threads", "auto"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn compare_same_file_gives_zero_distance() {
    let dir = TempDir::new().unwrap();
    let csv = generate_lorenz(dir.path());
    let config = format!(
        "version = 1\nx = {csv:?}\ny = {csv:?}\n[comparison.embedding]\ndelay_tau = 1\nnum_delays_mu = 4\n",
        csv = csv.to_str().unwrap()
    );
    let o = run_in(dir.path(), "compare", &config, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let result: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/result.json")).unwrap()).unwrap();
    assert!(result["distance_euclidean"].as_f64().unwrap() < 1e-6);
    assert!(result["rank"].as_u64().unwrap() >= 1);
    assert!(result["ortho_residual"].as_f64().unwrap() < 1e-10);
    for stage in ["embedding", "rank", "dmd", "alignment", "total"] {
        assert!(result["timings"][stage].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn compare_resolves_inputs_relative_to_the_config() {
    let dir = TempDir::new().unwrap();
    generate_lorenz(dir.path());
    let config = "version = 1\nx = \"out/trajectory.csv\"\ny = \"out/trajectory.csv\"\n";
    let o = run_in(dir.path(), "compare", config, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn compare_missing_input_is_exit_2() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        "compare",
        "version = 1\nx = \"nope.csv\"\ny = \"nope.csv\"\n",
        &[],
    );
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("nope.csv"));
}

#[test]
fn compare_divergence_is_exit_4_with_trace() {
    let dir = TempDir::new().unwrap();
    fs::rename(generate_lorenz(dir.path()), dir.path().join("x.csv")).unwrap();
    let o = run_in(
        dir.path(),
        "generate",
        "version = 1\n[generator]\nkind = \"lorenz\"\nsteps = 400\nrho = 20.0\n",
        &[],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let config = r#"version = 1
x = "x.csv"
y = "out/trajectory.csv"
[comparison.embedding]
delay_tau = 1
num_delays_mu = 4
[comparison.optimizer]
method = "ro"
learning_rate = 1e9
backtracking = false
"#;
    let o = run_in(dir.path(), "compare", config, &[]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/divergence.json")).unwrap()).unwrap();
    assert!(!report["loss_trace"].as_array().unwrap().is_empty());
}

const RECORD_HEADER: &str =
    "param,method,trial,distance_euclidean,distance_angular,wall_time,stop_iter,ortho_residual,zero_flag";

#[test]
fn geometric_sweep_writes_one_row_per_point_method_trial() {
    let dir = TempDir::new().unwrap();
    let config = r#"
version = 1
[sweep]
kind = "geometric"
grid = [1.0, 2.0]
methods = ["landing", "procrustes", "kwdsa"]
[sweep.ring]
size_range = [30, 30]
trials = 2
kernel_rank = 4
[sweep.ring.network]
samples = 150
burn_in = 100
record_every = 10
"#;
    let o = run_in(dir.path(), "sweep", config, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(RECORD_HEADER));
    assert_eq!(lines.count(), 2 * 3 * 2);
    assert!(dir.path().join("out/summary.csv").exists());
}

#[test]
fn size_sweep_and_bench_share_the_record_schema() {
    let dir = TempDir::new().unwrap();
    let sweep = "version = 1\n[sweep]\nkind = \"size\"\ngrid = [2, 4]\nmethods = [\"rim\", \"landing\"]\ntrials = 2\n";
    let o = run_in(dir.path(), "sweep", sweep, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some(RECORD_HEADER));
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 2);

    let o = run_in(dir.path(), "bench", "version = 1\nsizes = [3]\ntrials = 2\n", &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/records.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some(RECORD_HEADER));
    assert_eq!(csv.lines().count(), 1 + 4 * 2);
}

#[test]
fn two_system_sweep_then_mds() {
    let dir = TempDir::new().unwrap();
    let config = r#"
version = 1
[sweep]
kind = "two_system"
methods = ["landing", "kwdsa"]
kernel_rank = 4
[sweep.batch]
conditions = 3
[sweep.batch.system]
steps = 200
[sweep.comparison.embedding]
delay_tau = 1
num_delays_mu = 5
"#;
    let o = run_in(dir.path(), "sweep", config, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let matrix = dir.path().join("out/distances_landing.csv");
    let text = fs::read_to_string(&matrix).unwrap();
    assert_eq!(text.lines().next(), Some("label,A0,A1,A2,B0,B1,B2"));
    let sep = fs::read_to_string(dir.path().join("out/separation.csv")).unwrap();
    assert_eq!(sep.lines().count(), 3);

    let mds = format!("version = 1\ninput = {:?}\n", matrix.to_str().unwrap());
    let o = run_in(dir.path(), "mds", &mds, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let coords = fs::read_to_string(dir.path().join("out/coords.csv")).unwrap();
    assert_eq!(coords.lines().next(), Some("label,dim0,dim1"));
    assert_eq!(coords.lines().count(), 7);
}

#[test]
fn mds_of_zero_matrix_is_the_origin() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("d.csv"), "label,a,b\na,0,0\nb,0,0\n").unwrap();
    let o = run_in(dir.path(), "mds", "version = 1\ninput = \"d.csv\"\n", &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let coords = fs::read_to_string(dir.path().join("out/coords.csv")).unwrap();
    for line in coords.lines().skip(1) {
        for v in line.split(',').skip(1) {
            assert_eq!(v.parse::<f64>().unwrap().abs(), 0.0);
        }
    }
}

#[test]
fn mds_malformed_csv_is_exit_2() {
    let dir = TempDir::new().unwrap();
    for body in [
        "label,a,b\na,0,1\n",
        "label,a,b\na,0,x\nb,1,0\n",
        "label,a,b\na,0,1\nb,2,0\n",
    ] {
        fs::write(dir.path().join("d.csv"), body).unwrap();
        let o = run_in(dir.path(), "mds", "version = 1\ninput = \"d.csv\"\n", &[]);
        assert_eq!(code(&o), 2, "{body:?}: {}", stderr(&o));
    }
}

#[test]
fn missing_config_flag_is_exit_2() {
    let o = dynsim(&["generate"]);
    assert_eq!(code(&o), 2);
}
