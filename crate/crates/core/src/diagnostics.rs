//! Oracles and convergence metrics.

use std::collections::HashMap;
use std::io::Write;

use rand::seq::index::sample;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{Basis, FeatureMatrix};
use crate::scalar::Scalar;
use crate::trace::{ChainTrace, StepOutcome};

/// Largest `C(n, r)` [`enumerate_law`] accepts.
pub const ENUMERATION_GUARD: u128 = 1_000_000;

/// Exact distribution over bases, `p(B) ∝ det²(A_{:B}) Π_{i∈B} q_i`.
#[derive(Clone, Debug)]
pub struct ExactLaw {
    entries: Vec<(Basis, f64)>,
    index: HashMap<Basis, usize>,
    normalizer: f64,
}

impl ExactLaw {
    pub fn from_weights(entries: Vec<(Basis, f64)>) -> Result<Self> {
        let normalizer: f64 = entries.iter().map(|(_, w)| w).sum();
        if !(normalizer > 0.0) {
            return Err(Error::Argument("law has no mass".into()));
        }
        let entries: Vec<(Basis, f64)> = entries
            .into_iter()
            .map(|(b, w)| (b, w / normalizer))
            .collect();
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (b, _))| (b.clone(), i))
            .collect();
        Ok(Self {
            entries,
            index,
            normalizer,
        })
    }

    pub fn entries(&self) -> &[(Basis, f64)] {
        &self.entries
    }

    /// Sum of the unnormalized weights; `det(A Aᵀ)` when unweighted.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn probability(&self, b: &Basis) -> f64 {
        self.index.get(b).map_or(0.0, |&i| self.entries[i].1)
    }

    /// `P(S ⊆ B)`.
    pub fn inclusion(&self, s: &[usize]) -> f64 {
        self.entries
            .iter()
            .filter(|(b, _)| b.contains_all(s))
            .map(|(_, p)| p)
            .sum()
    }
}

/// Enumerates all bases of `a`; `weights` multiplies each squared volume by
/// `Π_{i∈B} q_i`.
pub fn enumerate_law<T: Scalar>(a: &FeatureMatrix<T>, weights: Option<&[f64]>) -> Result<ExactLaw> {
    enumerate_law_with_guard(a, weights, ENUMERATION_GUARD)
}

pub fn enumerate_law_with_guard<T: Scalar>(
    a: &FeatureMatrix<T>,
    weights: Option<&[f64]>,
    guard: u128,
) -> Result<ExactLaw> {
    if let Some(q) = weights {
        if q.len() != a.len() {
            return Err(Error::Dimension(format!(
                "{} weights for {} columns",
                q.len(),
                a.len()
            )));
        }
    }
    let bases = a.enumerate_bases(guard)?;
    let mut entries = Vec::with_capacity(bases.len());
    for b in bases {
        let mut w = a.squared_volume(b.indices())?.to_f64_lossy();
        if let Some(q) = weights {
            w *= b.indices().iter().map(|&i| q[i]).product::<f64>();
        }
        if w > 0.0 {
            entries.push((b, w));
        }
    }
    ExactLaw::from_weights(entries)
}

/// Number of records to drop as burn-in.
pub fn burn_in(len: usize, fraction: f64) -> usize {
    ((len as f64) * fraction.clamp(0.0, 1.0)).floor() as usize
}

/// Empirical basis frequencies over the records after `skip`, pooled
/// across traces.
pub fn empirical_distribution<'a, I>(traces: I, skip_fraction: f64) -> HashMap<Basis, f64>
where
    I: IntoIterator<Item = &'a ChainTrace>,
{
    let mut counts: HashMap<Basis, f64> = HashMap::new();
    let mut total = 0.0;
    for t in traces {
        for r in t.after(burn_in(t.len(), skip_fraction)) {
            *counts.entry(r.basis.clone()).or_default() += 1.0;
            total += 1.0;
        }
    }
    if total > 0.0 {
        for v in counts.values_mut() {
            *v /= total;
        }
    }
    counts
}

/// `½ Σ_B |f(B) − p(B)|` over the union of supports.
pub fn tv_distance(empirical: &HashMap<Basis, f64>, law: &ExactLaw) -> f64 {
    let on_law: f64 = law
        .entries()
        .iter()
        .map(|(b, p)| (empirical.get(b).copied().unwrap_or(0.0) - p).abs())
        .sum();
    let off_law: f64 = empirical
        .iter()
        .filter(|(b, _)| law.probability(b) == 0.0)
        .map(|(_, f)| f)
        .sum();
    0.5 * (on_law + off_law)
}

/// 0/1 indicator of `S ⊆ B_t` along the trace.
pub fn inclusion_indicator(trace: &ChainTrace, s: &[usize]) -> Vec<f64> {
    trace
        .bases()
        .map(|b| if b.contains_all(s) { 1.0 } else { 0.0 })
        .collect()
}

/// Running average of the inclusion indicator, starting at record `skip`.
pub fn running_inclusion(trace: &ChainTrace, s: &[usize], skip: usize) -> Vec<f64> {
    let mut acc = 0.0;
    trace
        .after(skip)
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if r.basis.contains_all(s) {
                acc += 1.0;
            }
            acc / (i + 1) as f64
        })
        .collect()
}

/// `|estimate_t − truth| / truth` per step.
pub fn relative_error_trace(estimates: &[f64], truth: f64) -> Result<Vec<f64>> {
    if !(truth > 0.0) {
        return Err(Error::Argument(
            "true inclusion probability is zero; choose a different subset".into(),
        ));
    }
    Ok(estimates
        .iter()
        .map(|e| (e - truth).abs() / truth)
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Band {
    pub low: f64,
    pub median: f64,
    pub high: f64,
}

/// Per-step first decile, median and last decile across chains. Chains are
/// truncated to the shortest.
pub fn decile_band(curves: &[Vec<f64>]) -> Vec<Band> {
    let len = curves.iter().map(Vec::len).min().unwrap_or(0);
    let mut column = Vec::with_capacity(curves.len());
    (0..len)
        .map(|t| {
            column.clear();
            column.extend(curves.iter().map(|c| c[t]));
            column.sort_by(f64::total_cmp);
            Band {
                low: quantile_sorted(&column, 0.1),
                median: quantile_sorted(&column, 0.5),
                high: quantile_sorted(&column, 0.9),
            }
        })
        .collect()
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        }
    }
}

/// Gelman–Rubin diagnostic for `M` chains of `N` draws.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PsrfReport {
    pub chains: usize,
    pub draws: usize,
    /// `B`: `N` times the sample variance of the chain means.
    pub between: f64,
    /// `W`: mean of the within-chain sample variances.
    pub within: f64,
    /// `((N − 1)/N) W + B/N`.
    pub pooled: f64,
    /// `sqrt(pooled / W)`.
    pub psrf: f64,
}

/// Classic (non-split) potential scale reduction factor. Chains are
/// truncated to the shortest one.
pub fn psrf(chains: &[Vec<f64>]) -> Result<PsrfReport> {
    let m = chains.len();
    let n = chains.iter().map(Vec::len).min().unwrap_or(0);
    if m < 2 || n < 10 {
        return Err(Error::Argument(format!(
            "PSRF needs at least 2 chains of 10 draws, got {m} x {n}"
        )));
    }
    let nf = n as f64;
    let mut means = Vec::with_capacity(m);
    let mut vars = Vec::with_capacity(m);
    for c in chains {
        let c = &c[..n];
        let mean = c.iter().sum::<f64>() / nf;
        let var = c.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nf - 1.0);
        means.push(mean);
        vars.push(var);
    }
    let grand = means.iter().sum::<f64>() / m as f64;
    let between =
        nf * means.iter().map(|x| (x - grand) * (x - grand)).sum::<f64>() / (m as f64 - 1.0);
    let within = vars.iter().sum::<f64>() / m as f64;
    if within <= 0.0 {
        return Err(Error::Undefined(
            "every chain has zero within-chain variance".into(),
        ));
    }
    let pooled = (nf - 1.0) / nf * within + between / nf;
    Ok(PsrfReport {
        chains: m,
        draws: n,
        between,
        within,
        pooled,
        psrf: (pooled / within).sqrt(),
    })
}

/// Accepted transitions over proposals made. Lazy steps are not proposals.
pub fn acceptance_rate(trace: &ChainTrace) -> Result<f64> {
    let (acc, prop) = trace
        .records
        .iter()
        .fold((0usize, 0usize), |(a, p), r| match r.outcome {
            StepOutcome::Accepted => (a + 1, p + 1),
            StepOutcome::Rejected => (a, p + 1),
            StepOutcome::Lazy | StepOutcome::Initial => (a, p),
        });
    if prop == 0 {
        return Err(Error::EmptyTrace);
    }
    Ok(acc as f64 / prop as f64)
}

/// Accepted transitions over all transitions; lazy steps count as staying.
pub fn move_rate(trace: &ChainTrace) -> Result<f64> {
    let steps = trace.steps();
    if steps == 0 {
        return Err(Error::EmptyTrace);
    }
    let acc = trace
        .records
        .iter()
        .filter(|r| r.outcome == StepOutcome::Accepted)
        .count();
    Ok(acc as f64 / steps as f64)
}

/// `count` distinct seeded `size`-subsets of `[n]` satisfying `keep`, each
/// sorted. Gives up after `100 * count` draws.
pub fn random_subsets<F: Fn(&[usize]) -> bool>(
    n: usize,
    size: usize,
    count: usize,
    seed: u64,
    keep: F,
) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Vec<usize>> = Vec::new();
    if size > n {
        return out;
    }
    for _ in 0..100 * count.max(1) {
        if out.len() == count {
            break;
        }
        let mut s = sample(&mut rng, n, size).into_vec();
        s.sort_unstable();
        if keep(&s) && !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

/// One line of the metrics CSV.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricRow {
    pub step: u64,
    pub statistic: String,
    /// Chain index, or `None` for cross-chain aggregates (written as `all`).
    pub chain: Option<usize>,
    pub value: f64,
}

pub const METRICS_HEADER: &str = "step,statistic,chain,value";

pub fn write_metrics_csv<W: Write>(rows: &[MetricRow], mut w: W) -> Result<()> {
    writeln!(w, "{METRICS_HEADER}")?;
    for r in rows {
        match r.chain {
            Some(c) => writeln!(w, "{},{},{},{}", r.step, r.statistic, c, r.value)?,
            None => writeln!(w, "{},{},all,{}", r.step, r.statistic, r.value)?,
        }
    }
    Ok(())
}
