//! Executes a resolved configuration and writes traces, metrics, the PSRF
//! report and the manifest.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use zonodpp::diagnostics::{
    acceptance_rate, decile_band, empirical_distribution, enumerate_law, inclusion_indicator,
    move_rate, psrf, random_subsets, relative_error_trace, running_inclusion, tv_distance,
    write_metrics_csv, ExactLaw, MetricRow, PsrfReport, ENUMERATION_GUARD,
};
use zonodpp::numerics::binomial;
use zonodpp::samplers::{run_chain_partial, SamplerKind};
use zonodpp::{ChainTrace, Model64};

use crate::config::RunConfig;

#[derive(Debug, Serialize)]
pub struct TraceFile {
    pub sampler: String,
    pub chain: usize,
    pub csv: PathBuf,
    pub jsonl: PathBuf,
    pub steps: usize,
    pub complete: bool,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Seeds {
    /// ChaCha8 key; chain `c` uses stream `c`.
    pub chain: u64,
    pub tiling: u64,
    pub base_measure: u64,
    pub model: u64,
    pub subsets: u64,
}

#[derive(Debug, Serialize)]
pub struct TrackedSubset {
    pub indices: Vec<usize>,
    /// `det K_S` of the target kernel.
    pub inclusion: f64,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub version: String,
    pub config_path: Option<PathBuf>,
    pub config: RunConfig,
    pub seeds: Seeds,
    pub rank: usize,
    pub items: usize,
    pub exact_law: bool,
    pub subsets: Vec<TrackedSubset>,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub traces: Vec<TraceFile>,
    pub metrics: PathBuf,
    pub psrf: PathBuf,
    pub complete: bool,
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

fn subset_tag(s: &[usize]) -> String {
    s.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("-")
}

/// Exact law of the target, if requested and within the enumeration guard.
pub fn oracle_law(cfg: &RunConfig, model: &Model64) -> Result<Option<ExactLaw>> {
    let a = &model.weighted().target;
    if !cfg.enumerate || binomial(a.len() as u64, a.rank() as u64) > ENUMERATION_GUARD {
        return Ok(None);
    }
    Ok(Some(enumerate_law(a, None)?))
}

fn write_trace(t: &ChainTrace, csv: &Path, jsonl: &Path) -> Result<()> {
    t.write_csv(BufWriter::new(
        File::create(csv).with_context(|| format!("creating {}", csv.display()))?,
    ))?;
    t.write_jsonl(BufWriter::new(
        File::create(jsonl).with_context(|| format!("creating {}", jsonl.display()))?,
    ))?;
    Ok(())
}

fn strided(len: usize, every: usize) -> impl Iterator<Item = usize> {
    (0..len)
        .step_by(every)
        .chain((len > 0 && !(len - 1).is_multiple_of(every)).then_some(len - 1))
}

fn sampler_metrics(
    cfg: &RunConfig,
    kind: SamplerKind,
    traces: &[ChainTrace],
    subsets: &[TrackedSubset],
    law: Option<&ExactLaw>,
    rows: &mut Vec<MetricRow>,
) -> Result<BTreeMap<String, serde_json::Value>> {
    let name = kind.name();
    let mut psrf_out = BTreeMap::new();
    for t in traces.iter().filter(|t| !t.is_empty()) {
        let last = t.steps() as u64;
        if let Ok(a) = acceptance_rate(t) {
            rows.push(MetricRow {
                step: last,
                statistic: format!("{name}/acceptance-rate"),
                chain: Some(t.chain),
                value: a,
            });
        }
        if let Ok(m) = move_rate(t) {
            rows.push(MetricRow {
                step: last,
                statistic: format!("{name}/move-rate"),
                chain: Some(t.chain),
                value: m,
            });
        }
        if let Some(law) = law {
            let skip = if kind.is_mcmc() { cfg.burn_in } else { 0.0 };
            let tv = tv_distance(&empirical_distribution([t], skip), law);
            rows.push(MetricRow {
                step: last,
                statistic: format!("{name}/tv"),
                chain: Some(t.chain),
                value: tv,
            });
        }
    }
    if let Some(law) = law {
        let skip = if kind.is_mcmc() { cfg.burn_in } else { 0.0 };
        let pooled = tv_distance(
            &empirical_distribution(traces.iter().filter(|t| !t.is_empty()), skip),
            law,
        );
        let last = traces.iter().map(ChainTrace::steps).min().unwrap_or(0) as u64;
        rows.push(MetricRow {
            step: last,
            statistic: format!("{name}/tv"),
            chain: None,
            value: pooled,
        });
    }

    for s in subsets {
        let tag = subset_tag(&s.indices);
        let mut curves = Vec::with_capacity(traces.len());
        for t in traces.iter().filter(|t| !t.is_empty()) {
            let est = running_inclusion(t, &s.indices, 0);
            for i in strided(est.len(), cfg.metrics_every) {
                rows.push(MetricRow {
                    step: i as u64,
                    statistic: format!("{name}/inclusion/{tag}"),
                    chain: Some(t.chain),
                    value: est[i],
                });
            }
            curves.push(relative_error_trace(&est, s.inclusion)?);
        }
        let band = decile_band(&curves);
        for i in strided(band.len(), cfg.metrics_every) {
            for (stat, v) in [
                ("relerr-d1", band[i].low),
                ("relerr-median", band[i].median),
                ("relerr-d9", band[i].high),
            ] {
                rows.push(MetricRow {
                    step: i as u64,
                    statistic: format!("{name}/{stat}/{tag}"),
                    chain: None,
                    value: v,
                });
            }
        }
        let chains: Vec<Vec<f64>> = traces
            .iter()
            .map(|t| inclusion_indicator(t, &s.indices))
            .collect();
        let entry = match psrf(&chains) {
            Ok(rep) => {
                rows.push(MetricRow {
                    step: rep.draws as u64,
                    statistic: format!("{name}/psrf/{tag}"),
                    chain: None,
                    value: rep.psrf,
                });
                serde_json::to_value(rep)?
            }
            Err(e) => serde_json::json!({ "undefined": e.to_string() }),
        };
        psrf_out.insert(tag, entry);
    }
    Ok(psrf_out)
}

/// Runs every configured sampler. Artifacts are written even when a chain
/// fails; the manifest then has `complete = false` and an error is returned.
pub fn run(cfg: &RunConfig, model: &Model64, config_path: Option<&Path>) -> Result<Manifest> {
    let started = now();
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let target = &model.weighted().target;
    let kernel = model.kernel()?;
    let subsets: Vec<TrackedSubset> =
        random_subsets(target.len(), cfg.subset_size, cfg.subsets, cfg.seed, |s| {
            s.len() <= target.rank() && target.squared_volume(s).is_ok_and(|v| v > 0.0)
        })
        .into_iter()
        .map(|s| {
            let inclusion = kernel.principal_minor(&s)?;
            Ok(TrackedSubset {
                indices: s,
                inclusion,
            })
        })
        .collect::<zonodpp::Result<_>>()?;
    let law = oracle_law(cfg, model)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()?;
    let mut files = Vec::new();
    let mut rows = Vec::new();
    let mut psrf_report: BTreeMap<String, BTreeMap<String, serde_json::Value>> = BTreeMap::new();
    let mut failures = Vec::new();
    for &kind in &cfg.samplers {
        let dir = cfg.out.join(kind.name());
        fs::create_dir_all(&dir)?;
        let sc = cfg.sampler_config(kind);
        let results: Vec<(ChainTrace, Option<zonodpp::Error>)> = pool.install(|| {
            (0..cfg.chains)
                .into_par_iter()
                .map(|c| run_chain_partial(&sc, model, c))
                .collect()
        });
        let mut traces = Vec::with_capacity(results.len());
        for (t, err) in results {
            let csv = dir.join(format!("chain-{:03}.csv", t.chain));
            let jsonl = dir.join(format!("chain-{:03}.jsonl", t.chain));
            write_trace(&t, &csv, &jsonl)?;
            if let Some(e) = &err {
                failures.push(format!("{} chain {}: {e}", kind.name(), t.chain));
            }
            files.push(TraceFile {
                sampler: kind.name().into(),
                chain: t.chain,
                csv,
                jsonl,
                steps: t.steps(),
                complete: t.complete,
                error: err.map(|e| e.to_string()),
            });
            traces.push(t);
        }
        psrf_report.insert(
            kind.name().into(),
            sampler_metrics(cfg, kind, &traces, &subsets, law.as_ref(), &mut rows)?,
        );
    }

    let metrics = cfg.out.join("metrics.csv");
    write_metrics_csv(&rows, BufWriter::new(File::create(&metrics)?))?;
    let psrf_path = cfg.out.join("psrf.json");
    fs::write(&psrf_path, serde_json::to_string_pretty(&psrf_report)?)?;

    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").into(),
        config_path: config_path.map(Path::to_path_buf),
        config: cfg.clone(),
        seeds: Seeds {
            chain: cfg.seed,
            tiling: cfg.tiling_seed,
            base_measure: cfg.weight_seed,
            model: cfg.model_seed,
            subsets: cfg.seed,
        },
        rank: target.rank(),
        items: target.len(),
        exact_law: law.is_some(),
        subsets,
        started_unix: started,
        finished_unix: now(),
        traces: files,
        metrics,
        psrf: psrf_path,
        complete: failures.is_empty(),
    };
    fs::write(
        cfg.out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    if !failures.is_empty() {
        anyhow::bail!(
            "{} chain(s) failed: {}",
            failures.len(),
            failures.join("; ")
        );
    }
    Ok(manifest)
}

/// PSRF of `S ⊆ B` recomputed from the trace CSVs in `dir`.
pub fn psrf_from_dir(dir: &Path, subset: &[usize], burn_in: f64) -> Result<PsrfReport> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    paths.sort();
    let mut chains = Vec::with_capacity(paths.len());
    for (i, p) in paths.iter().enumerate() {
        let reader = std::io::BufReader::new(File::open(p)?);
        let t =
            ChainTrace::read_csv(i, reader).with_context(|| format!("parsing {}", p.display()))?;
        let skip = zonodpp::diagnostics::burn_in(t.len(), burn_in);
        chains.push(inclusion_indicator(&t, subset)[skip..].to_vec());
    }
    Ok(psrf(&chains)?)
}
