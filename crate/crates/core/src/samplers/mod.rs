//! Samplers over bases and the chain runner.

mod basis_exchange;
mod exact;
mod hit_and_run;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use basis_exchange::{exchange_acceptance, BasisExchangeChain, VolumeOracle};
pub use exact::{aldous_broder, exact_projection_dpp};
pub use hit_and_run::{random_direction, HitAndRunChain, ZonotopeTarget};

use crate::error::{Error, Result};
use crate::models::{apply_base_measure, BaseMeasure, Graph, WeightedFeatures};
use crate::numerics::{Basis, FeatureMatrix, ProjectionKernel};
use crate::scalar::Scalar;
use crate::trace::{ChainTrace, StepOutcome, StepRecord};
use crate::zonotope::{TileExtractor, TilingObjective, Zonotope};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    Exact,
    AldousBroder,
    BasisExchange,
    UnifZonotope,
    VolZonotope,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 5] = [
        SamplerKind::Exact,
        SamplerKind::AldousBroder,
        SamplerKind::BasisExchange,
        SamplerKind::UnifZonotope,
        SamplerKind::VolZonotope,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Exact => "exact",
            SamplerKind::AldousBroder => "aldous-broder",
            SamplerKind::BasisExchange => "basis-exchange",
            SamplerKind::UnifZonotope => "unif-zonotope",
            SamplerKind::VolZonotope => "vol-zonotope",
        }
    }

    /// Whether consecutive samples are Markov-dependent.
    pub fn is_mcmc(self) -> bool {
        matches!(
            self,
            SamplerKind::BasisExchange | SamplerKind::UnifZonotope | SamplerKind::VolZonotope
        )
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SamplerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown sampler {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    /// Number of transitions after the initial state.
    pub steps: Option<u64>,
    /// Wall-clock budget in seconds.
    pub seconds: Option<f64>,
    pub seed: u64,
    pub tiling_seed: u64,
    /// Probability of a lazy self-loop in basis exchange.
    pub laziness: f64,
    /// Record elapsed nanoseconds; when off the column is all zeros.
    pub record_timing: bool,
    /// Cold re-extraction of each accepted hit-and-run point.
    pub check_coherence: bool,
}

impl SamplerConfig {
    pub fn new(kind: SamplerKind, steps: u64, seed: u64) -> Self {
        Self {
            kind,
            steps: Some(steps),
            seconds: None,
            seed,
            tiling_seed: seed ^ 0x5eed_0000_0000_7113,
            laziness: 0.5,
            record_timing: false,
            check_coherence: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.steps, self.seconds) {
            (None, None) => Err(Error::Argument(
                "either steps or seconds must be set".into(),
            )),
            (Some(0), _) => Err(Error::Argument("step budget of 0".into())),
            (_, Some(s)) if !(s > 0.0) || !s.is_finite() => Err(Error::Argument(format!(
                "wall-clock budget {s} must be positive"
            ))),
            _ if !(0.0..1.0).contains(&self.laziness) => Err(Error::Argument(format!(
                "laziness {} not in [0, 1)",
                self.laziness
            ))),
            _ => Ok(()),
        }
    }
}

/// Feature matrix plus optional base measure and originating graph.
#[derive(Clone, Debug)]
pub struct Model<T> {
    features: FeatureMatrix<T>,
    weighted: WeightedFeatures<T>,
    base_measure: Option<BaseMeasure>,
    graph: Option<Graph>,
}

impl<T: Scalar> Model<T> {
    pub fn new(features: FeatureMatrix<T>) -> Self {
        Self {
            weighted: WeightedFeatures::unweighted(&features),
            features,
            base_measure: None,
            graph: None,
        }
    }

    pub fn with_graph(mut self, graph: Graph) -> Self {
        self.graph = Some(graph);
        self
    }

    pub fn with_base_measure(mut self, q: BaseMeasure) -> Result<Self> {
        self.weighted = apply_base_measure(&self.features, &q)?;
        self.base_measure = Some(q);
        Ok(self)
    }

    pub fn features(&self) -> &FeatureMatrix<T> {
        &self.features
    }

    pub fn weighted(&self) -> &WeightedFeatures<T> {
        &self.weighted
    }

    pub fn base_measure(&self) -> Option<&BaseMeasure> {
        self.base_measure.as_ref()
    }

    pub fn graph(&self) -> Option<&Graph> {
        self.graph.as_ref()
    }

    /// Kernel of the target law (weighted when a base measure is set).
    pub fn kernel(&self) -> Result<ProjectionKernel<T>> {
        ProjectionKernel::build(&self.weighted.target)
    }
}

/// ChaCha8 generator for chain `chain` of a run seeded with `seed`: the seed
/// picks the key, the chain index picks the stream.
pub fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

/// A running sampler of any kind.
pub enum ChainSampler<T: Scalar> {
    Exact {
        kernel: ProjectionKernel<T>,
        current: Basis,
    },
    AldousBroder {
        graph: Graph,
        current: Basis,
    },
    BasisExchange(BasisExchangeChain<FeatureMatrix<T>>),
    HitAndRun(Box<HitAndRunChain<T>>),
}

impl<T: Scalar> ChainSampler<T> {
    /// Initializes the sampler, drawing the starting state from `rng`.
    ///
    /// MCMC samplers start like the zonotope sampler: `x₀ = A u` with `u`
    /// uniform on the hypercube and `B₀` its tile. Basis exchange started from
    /// the same seed therefore shares `B₀` with the zonotope chains.
    pub fn start(config: &SamplerConfig, model: &Model<T>, rng: &mut ChaCha8Rng) -> Result<Self> {
        let w = model.weighted();
        let objective = || TilingObjective::gaussian(w.zonotope.len(), config.tiling_seed);
        Ok(match config.kind {
            SamplerKind::Exact => {
                let kernel = model.kernel()?;
                let current = exact_projection_dpp(&kernel, rng)?;
                ChainSampler::Exact { kernel, current }
            }
            SamplerKind::AldousBroder => {
                let graph = model
                    .graph()
                    .ok_or_else(|| Error::Argument("aldous-broder needs a graph model".into()))?
                    .clone();
                if model.base_measure().is_some() || graph.weights().is_some() {
                    return Err(Error::Argument(
                        "aldous-broder samples uniform trees; the model is weighted".into(),
                    ));
                }
                let current = aldous_broder(&graph, rng)?;
                ChainSampler::AldousBroder { graph, current }
            }
            SamplerKind::BasisExchange => {
                let x0 = Zonotope::new(w.zonotope.clone()).hypercube_image(rng);
                let tile = TileExtractor::new(w.zonotope.clone(), objective())?.extract(&x0)?;
                ChainSampler::BasisExchange(BasisExchangeChain::new(
                    w.target.clone(),
                    tile.basis,
                    config.laziness,
                )?)
            }
            SamplerKind::UnifZonotope | SamplerKind::VolZonotope => {
                let target = if config.kind == SamplerKind::UnifZonotope {
                    ZonotopeTarget::Uniform
                } else {
                    ZonotopeTarget::Volume
                };
                let mut chain = HitAndRunChain::from_random_start(
                    w.zonotope.clone(),
                    w.acceptance.clone(),
                    objective(),
                    target,
                    rng,
                )?;
                chain.set_coherence_checks(config.check_coherence);
                ChainSampler::HitAndRun(Box::new(chain))
            }
        })
    }

    pub fn basis(&self) -> &Basis {
        match self {
            ChainSampler::Exact { current, .. } | ChainSampler::AldousBroder { current, .. } => {
                current
            }
            ChainSampler::BasisExchange(c) => c.basis(),
            ChainSampler::HitAndRun(c) => c.basis(),
        }
    }

    pub fn step(&mut self, rng: &mut ChaCha8Rng) -> Result<StepOutcome> {
        match self {
            ChainSampler::Exact { kernel, current } => {
                *current = exact_projection_dpp(kernel, rng)?;
                Ok(StepOutcome::Accepted)
            }
            ChainSampler::AldousBroder { graph, current } => {
                *current = aldous_broder(graph, rng)?;
                Ok(StepOutcome::Accepted)
            }
            ChainSampler::BasisExchange(c) => c.step(rng),
            ChainSampler::HitAndRun(c) => c.step(rng),
        }
    }
}

/// Runs one chain; on a step error returns the partial trace (flagged
/// incomplete) together with the error.
pub fn run_chain_partial<T: Scalar>(
    config: &SamplerConfig,
    model: &Model<T>,
    chain: usize,
) -> (ChainTrace, Option<Error>) {
    let mut trace = ChainTrace::new(chain);
    if let Err(e) = config.validate() {
        return (trace, Some(e));
    }
    let start = Instant::now();
    let elapsed = |on: bool| {
        if on {
            start.elapsed().as_nanos() as u64
        } else {
            0
        }
    };
    let mut rng = chain_rng(config.seed, chain);
    let mut sampler = match ChainSampler::start(config, model, &mut rng) {
        Ok(s) => s,
        Err(e) => return (trace, Some(e)),
    };
    trace.records.push(StepRecord {
        step: 0,
        basis: sampler.basis().clone(),
        outcome: StepOutcome::Initial,
        elapsed_ns: elapsed(config.record_timing),
    });
    let max_steps = config.steps.unwrap_or(u64::MAX);
    let deadline = config.seconds;
    let mut step = 0u64;
    while step < max_steps {
        if let Some(limit) = deadline {
            if start.elapsed().as_secs_f64() >= limit {
                break;
            }
        }
        step += 1;
        let outcome = match sampler.step(&mut rng) {
            Ok(o) => o,
            Err(e) => return (trace, Some(e)),
        };
        trace.records.push(StepRecord {
            step,
            basis: sampler.basis().clone(),
            outcome,
            elapsed_ns: elapsed(config.record_timing),
        });
    }
    trace.complete = true;
    (trace, None)
}

/// Runs one chain to its budget.
pub fn run_chain<T: Scalar>(
    config: &SamplerConfig,
    model: &Model<T>,
    chain: usize,
) -> Result<ChainTrace> {
    match run_chain_partial(config, model, chain) {
        (trace, None) => Ok(trace),
        (_, Some(e)) => Err(e),
    }
}
