use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn zonodpp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zonodpp"))
        .args(args)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn fig1_config(dir: &Path, extra: &str) -> PathBuf {
    write(dir, "fig1.txt", "2 4\n1 2 0 -1\n0 1 2 1\n");
    let out = dir.join("out");
    write(
        dir,
        "run.toml",
        &format!(
            "model = \"matrix\"\npath = \"fig1.txt\"\nout = {:?}\n{extra}",
            out.to_str().unwrap()
        ),
    )
}

fn metric(out: &Path, statistic: &str, chain: &str) -> f64 {
    let text = fs::read_to_string(out.join("metrics.csv")).unwrap();
    let line = text
        .lines()
        .rfind(|l| {
            let f: Vec<&str> = l.split(',').collect();
            f[1] == statistic && f[2] == chain
        })
        .unwrap_or_else(|| panic!("no {statistic} row"));
    line.rsplit(',').next().unwrap().parse().unwrap()
}

fn text(o: &Output) -> String {
    format!(
        "{}{}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    )
}

#[test]
fn fig1_run_matches_oracle() {
    let dir = TempDir::new().unwrap();
    let cfg = fig1_config(
        dir.path(),
        "sampler = \"vol-zonotope\"\nsteps = 200000\nseed = 1\n",
    );
    let o = zonodpp(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o));
    let out = dir.path().join("out");
    assert!(metric(&out, "vol-zonotope/tv", "all") < 0.02);
    assert!(out.join("vol-zonotope/chain-000.csv").exists());
    assert!(out.join("vol-zonotope/chain-000.jsonl").exists());

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["complete"], true);
    assert_eq!(manifest["seeds"]["chain"], 1);
    assert!(manifest["seeds"]["tiling"].is_u64());
    assert_eq!(manifest["rank"], 2);
    for t in manifest["traces"].as_array().unwrap() {
        assert!(Path::new(t["csv"].as_str().unwrap()).exists());
        assert!(Path::new(t["jsonl"].as_str().unwrap()).exists());
    }
    assert!(Path::new(manifest["metrics"].as_str().unwrap()).exists());
    assert!(Path::new(manifest["psrf"].as_str().unwrap()).exists());
}

#[test]
fn identical_configs_give_identical_traces() {
    let dir = TempDir::new().unwrap();
    let cfg = fig1_config(
        dir.path(),
        "sampler = \"vol-zonotope\"\nsteps = 3000\nchains = 3\nseed = 5\n",
    );
    let mut copies = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("out{k}"));
        let o = zonodpp(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--parallelism",
            "2",
        ]);
        assert!(o.status.success(), "{}", text(&o));
        copies.push(out);
    }
    for c in 0..3 {
        for ext in ["csv", "jsonl"] {
            let name = format!("vol-zonotope/chain-{c:03}.{ext}");
            assert_eq!(
                fs::read(copies[0].join(&name)).unwrap(),
                fs::read(copies[1].join(&name)).unwrap()
            );
        }
    }
}

#[test]
fn validate_k10() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "k10.toml",
        "model = \"complete\"\nvertices = 10\nsteps = 10\n",
    );
    let o = zonodpp(&["validate", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o));
    let s = text(&o);
    assert!(s.starts_with("ok\n"));
    assert!(s.contains("r = 9, n = 45"));
    assert!(s.contains("warning: C(n, r) = 886163135 exceeds the enumeration guard"));
}

#[test]
fn validate_barabasi_albert() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "ba.toml",
        "model = \"barabasi-albert\"\nvertices = 20\nba_k = 2\nmodel_seed = 4\nsteps = 10\n",
    );
    let o = zonodpp(&["validate", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("r = 19, n = 37"));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("missing.toml", "steps = 10\n", "model"),
        (
            "unknown.toml",
            "model = \"complete\"\nvertices = 4\nsteps = 10\nsped = 1\n",
            "sped",
        ),
        (
            "negative.toml",
            "model = \"complete\"\nvertices = 4\nsteps = -3\n",
            "steps",
        ),
        (
            "sampler.toml",
            "model = \"complete\"\nvertices = 4\nsteps = 3\nsampler = \"gibbs\"\n",
            "sampler",
        ),
        (
            "nofile.toml",
            "model = \"matrix\"\npath = \"absent.txt\"\nsteps = 3\n",
            "path",
        ),
    ];
    for (name, body, needle) in cases {
        let cfg = write(dir.path(), name, body);
        for verb in ["validate", "run"] {
            let o = zonodpp(&[verb, "--config", cfg.to_str().unwrap()]);
            assert_eq!(o.status.code(), Some(1), "{name}: {}", text(&o));
            assert!(text(&o).contains(needle), "{name}: {}", text(&o));
        }
    }
    let cfg = write(
        dir.path(),
        "ok.toml",
        "model = \"complete\"\nvertices = 4\nsteps = 3\n",
    );
    let o = zonodpp(&[
        "validate",
        "--config",
        cfg.to_str().unwrap(),
        "--seconds",
        "-2",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(zonodpp(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn weighted_edge_list_needs_a_base_measure() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "g.txt",
        "# triangle\n3\n0 1 0.5\n1 2 2\n0 2 1\n",
    );
    let cfg = write(
        dir.path(),
        "g.toml",
        "model = \"edge-list\"\npath = \"g.txt\"\nsteps = 10\n",
    );
    assert_eq!(
        zonodpp(&["validate", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
    let cfg = write(
        dir.path(),
        "gq.toml",
        "model = \"edge-list\"\npath = \"g.txt\"\nsteps = 10\nbase_measure = \"q-scaled\"\n",
    );
    let o = zonodpp(&["validate", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("r = 2, n = 3"));
}

#[test]
fn compare_mode_on_weighted_k10() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("cmp");
    let cfg = write(
        dir.path(),
        "cmp.toml",
        &format!(
            "model = \"complete\"\nvertices = 10\nsampler = \"compare\"\nchains = 2\nseconds = 0.5\n\
             base_measure = \"q-scaled\"\nweight_seed = 3\nout = {:?}\n",
            out.to_str().unwrap()
        ),
    );
    let o = zonodpp(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o));
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("step,statistic,chain,value\n"));
    for name in ["basis-exchange", "vol-zonotope"] {
        assert!(out.join(name).join("chain-001.csv").exists());
        assert!(metrics.contains(&format!("{name}/relerr-median/")));
        assert!(metrics.contains(&format!("{name}/acceptance-rate,0,")));
        // no exact law for K_10
        assert!(!metrics.contains(&format!("{name}/tv")));
    }
    let psrf: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("psrf.json")).unwrap()).unwrap();
    assert_eq!(psrf.as_object().unwrap().len(), 2);
    let csv = fs::read_to_string(out.join("vol-zonotope/chain-000.csv")).unwrap();
    // wall-clock runs record timing
    assert!(csv.lines().skip(2).any(|l| !l.ends_with(",0")));
}

#[test]
fn enumerate_fig1() {
    let dir = TempDir::new().unwrap();
    let cfg = fig1_config(dir.path(), "");
    let o = zonodpp(&["enumerate", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o));
    let law: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((law["normalizer"].as_f64().unwrap() - 35.0).abs() < 1e-9);
    let entries = law["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 6);
    let p23 = entries
        .iter()
        .find(|e| e["basis"] == serde_json::json!([1, 2]))
        .unwrap();
    assert!((p23["probability"].as_f64().unwrap() - 16.0 / 35.0).abs() < 1e-12);
}

#[test]
fn enumerate_beyond_guard_is_a_runtime_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "k10.toml",
        "model = \"complete\"\nvertices = 10\n",
    );
    let o = zonodpp(&["enumerate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
}

#[test]
fn psrf_from_trace_directory() {
    let dir = TempDir::new().unwrap();
    let cfg = fig1_config(
        dir.path(),
        "sampler = \"basis-exchange\"\nsteps = 2000\nchains = 4\nseed = 2\n",
    );
    assert!(zonodpp(&["run", "--config", cfg.to_str().unwrap()])
        .status
        .success());
    let traces = dir.path().join("out/basis-exchange");
    let o = zonodpp(&[
        "psrf",
        "--traces",
        traces.to_str().unwrap(),
        "--subset",
        "1",
        "--subset",
        "1,2",
    ]);
    assert!(o.status.success(), "{}", text(&o));
    let rep: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let r = rep["1"]["psrf"].as_f64().unwrap();
    assert!((0.99..1.1).contains(&r), "{r}");
    assert_eq!(rep["1-2"]["chains"], 4);
    let missing = zonodpp(&[
        "psrf",
        "--traces",
        dir.path().join("nope").to_str().unwrap(),
        "--subset",
        "1",
    ]);
    assert_eq!(missing.status.code(), Some(2));
}
