//! Run configuration: a flat TOML table. Every key is optional except
//! `model`; unknown keys are rejected.
//!
//! ```toml
//! model = "complete"        # complete | barabasi-albert | edge-list | matrix
//! vertices = 10             # complete, barabasi-albert
//! ba_k = 2                  # barabasi-albert
//! model_seed = 0            # barabasi-albert
//! path = "graph.txt"        # edge-list, matrix; relative to the config file
//! jitter = 0.0              # matrix: Gaussian column jitter sd
//! sampler = "vol-zonotope"  # exact | aldous-broder | basis-exchange | unif-zonotope | vol-zonotope | compare
//! chains = 4
//! steps = 10000             # step budget per chain
//! seconds = 60.0            # wall-clock budget per chain
//! seed = 1
//! tiling_seed = 7           # defaults to a function of seed
//! base_measure = "none"     # none | sqrt-q | q-scaled
//! weight_seed = 0           # q ~ Unif(0,1] unless the edge list carries weights
//! laziness = 0.5
//! burn_in = 0.1             # fraction dropped before TV
//! subsets = 3               # number of tracked inclusion subsets
//! subset_size = 3
//! metrics_every = 100       # stride of the per-step metric rows
//! parallelism = 1
//! out = "out"
//! timing = false            # defaults to true under a wall-clock budget
//! enumerate = true          # exact-law metrics when C(n, r) is small enough
//! check_coherence = false
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use zonodpp::models::{
    barabasi_albert, incidence_feature_matrix, load_feature_matrix, BaseMeasure, Graph, Jitter,
    WeightMode,
};
use zonodpp::samplers::{SamplerConfig, SamplerKind};
use zonodpp::{FeatureMatrix64, Model64};

/// Invalid or inconsistent configuration; maps to exit code 1.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Complete,
    BarabasiAlbert,
    EdgeList,
    Matrix,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseMeasureKind {
    #[default]
    None,
    SqrtQ,
    QScaled,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<ModelKind>,
    pub vertices: Option<usize>,
    pub ba_k: Option<usize>,
    pub model_seed: Option<u64>,
    pub path: Option<PathBuf>,
    pub jitter: Option<f64>,
    pub sampler: Option<String>,
    pub chains: Option<usize>,
    pub steps: Option<i64>,
    pub seconds: Option<f64>,
    pub seed: Option<u64>,
    pub tiling_seed: Option<u64>,
    pub base_measure: Option<BaseMeasureKind>,
    pub weight_seed: Option<u64>,
    pub laziness: Option<f64>,
    pub burn_in: Option<f64>,
    pub subsets: Option<usize>,
    pub subset_size: Option<usize>,
    pub metrics_every: Option<usize>,
    pub parallelism: Option<usize>,
    pub out: Option<PathBuf>,
    pub timing: Option<bool>,
    pub enumerate: Option<bool>,
    pub check_coherence: Option<bool>,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub chains: Option<usize>,
    pub steps: Option<i64>,
    pub seconds: Option<f64>,
    pub sampler: Option<String>,
    pub out: Option<PathBuf>,
    pub parallelism: Option<usize>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(format!("config: {}", e.message())))
    }

    /// Reads a config file; relative `path` values are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if let (Some(p), Some(dir)) = (&cfg.path, path.parent()) {
            if p.is_relative() {
                cfg.path = Some(dir.join(p));
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! take {
            ($($f:ident),*) => {$(if o.$f.is_some() { self.$f = o.$f.clone(); })*};
        }
        take!(seed, chains, steps, seconds, sampler, out, parallelism);
    }
}

/// A validated configuration with every default filled in.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub model: ModelKind,
    pub vertices: Option<usize>,
    pub ba_k: Option<usize>,
    pub model_seed: u64,
    pub path: Option<PathBuf>,
    pub jitter: f64,
    pub samplers: Vec<SamplerKind>,
    pub compare: bool,
    pub chains: usize,
    pub steps: Option<u64>,
    pub seconds: Option<f64>,
    pub seed: u64,
    pub tiling_seed: u64,
    pub base_measure: BaseMeasureKind,
    pub weight_seed: u64,
    pub laziness: f64,
    pub burn_in: f64,
    pub subsets: usize,
    pub subset_size: usize,
    pub metrics_every: usize,
    pub parallelism: usize,
    pub out: PathBuf,
    pub timing: bool,
    pub enumerate: bool,
    pub check_coherence: bool,
}

impl RunConfig {
    pub fn resolve(f: &FileConfig) -> Result<Self, ConfigError> {
        let model = match f.model {
            Some(m) => m,
            None => return bad(
                "model: missing feature source (complete, barabasi-albert, edge-list or matrix)",
            ),
        };
        match model {
            ModelKind::Complete | ModelKind::BarabasiAlbert => {
                if f.vertices.is_none() {
                    return bad("vertices: required for graph models");
                }
                if f.path.is_some() {
                    return bad("path: not used by generated graph models");
                }
            }
            ModelKind::EdgeList | ModelKind::Matrix => {
                if f.path.is_none() {
                    return bad("path: required for edge-list and matrix models");
                }
            }
        }
        if model == ModelKind::BarabasiAlbert && f.ba_k.is_none() {
            return bad("ba_k: required for barabasi-albert");
        }
        if f.jitter.is_some() && model != ModelKind::Matrix {
            return bad("jitter: only applies to matrix models");
        }
        let jitter = f.jitter.unwrap_or(0.0);
        if !(jitter >= 0.0 && jitter.is_finite()) {
            return bad(format!("jitter: {jitter} must be a nonnegative number"));
        }

        let sampler = f.sampler.as_deref().unwrap_or("vol-zonotope");
        let (samplers, compare) = if sampler == "compare" {
            (
                vec![SamplerKind::BasisExchange, SamplerKind::VolZonotope],
                true,
            )
        } else {
            match sampler.parse::<SamplerKind>() {
                Ok(k) => (vec![k], false),
                Err(_) => {
                    let names: Vec<&str> = SamplerKind::ALL.iter().map(|k| k.name()).collect();
                    return bad(format!(
                        "sampler: unknown {sampler:?}; expected compare or one of {names:?}"
                    ));
                }
            }
        };

        let steps = match f.steps {
            Some(s) if s <= 0 => return bad(format!("steps: budget {s} must be positive")),
            Some(s) => Some(s as u64),
            None => None,
        };
        if let Some(s) = f.seconds {
            if !(s > 0.0 && s.is_finite()) {
                return bad(format!("seconds: budget {s} must be positive"));
            }
        }
        if steps.is_none() && f.seconds.is_none() {
            return bad("steps/seconds: set at least one budget");
        }
        let chains = f.chains.unwrap_or(1);
        if chains == 0 {
            return bad("chains: must be at least 1");
        }
        let parallelism = f.parallelism.unwrap_or(1);
        if parallelism == 0 {
            return bad("parallelism: must be at least 1");
        }
        let laziness = f.laziness.unwrap_or(0.5);
        if !(0.0..1.0).contains(&laziness) {
            return bad(format!("laziness: {laziness} not in [0, 1)"));
        }
        let burn_in = f.burn_in.unwrap_or(0.1);
        if !(0.0..1.0).contains(&burn_in) {
            return bad(format!("burn_in: {burn_in} not in [0, 1)"));
        }
        let metrics_every = f.metrics_every.unwrap_or(100);
        if metrics_every == 0 {
            return bad("metrics_every: must be at least 1");
        }
        let subset_size = f.subset_size.unwrap_or(3);
        if subset_size == 0 {
            return bad("subset_size: must be at least 1");
        }
        let seed = f.seed.unwrap_or(0);
        let defaults = SamplerConfig::new(SamplerKind::Exact, 1, seed);

        Ok(Self {
            model,
            vertices: f.vertices,
            ba_k: f.ba_k,
            model_seed: f.model_seed.unwrap_or(0),
            path: f.path.clone(),
            jitter,
            samplers,
            compare,
            chains,
            steps,
            seconds: f.seconds,
            seed,
            tiling_seed: f.tiling_seed.unwrap_or(defaults.tiling_seed),
            base_measure: f.base_measure.unwrap_or_default(),
            weight_seed: f.weight_seed.unwrap_or(0),
            laziness,
            burn_in,
            subsets: f.subsets.unwrap_or(3),
            subset_size,
            metrics_every,
            parallelism,
            out: f.out.clone().unwrap_or_else(|| PathBuf::from("out")),
            timing: f.timing.unwrap_or(f.seconds.is_some()),
            enumerate: f.enumerate.unwrap_or(true),
            check_coherence: f.check_coherence.unwrap_or(false),
        })
    }

    pub fn sampler_config(&self, kind: SamplerKind) -> SamplerConfig {
        SamplerConfig {
            kind,
            steps: self.steps,
            seconds: self.seconds,
            seed: self.seed,
            tiling_seed: self.tiling_seed,
            laziness: self.laziness,
            record_timing: self.timing,
            check_coherence: self.check_coherence,
        }
    }

    fn graph(&self) -> Result<Option<Graph>, ConfigError> {
        let g = match self.model {
            ModelKind::Complete => Graph::complete(self.vertices.unwrap_or(0)),
            ModelKind::BarabasiAlbert => barabasi_albert(
                self.vertices.unwrap_or(0),
                self.ba_k.unwrap_or(0),
                self.model_seed,
            ),
            ModelKind::EdgeList => Graph::load_edge_list(self.path.as_deref().expect("validated")),
            ModelKind::Matrix => return Ok(None),
        };
        g.map(Some).map_err(|e| ConfigError(format!("model: {e}")))
    }

    /// Builds the feature matrix, base measure and graph.
    pub fn build_model(&self) -> Result<Model64, ConfigError> {
        let graph = self.graph()?;
        let features: FeatureMatrix64 = match &graph {
            Some(g) => {
                incidence_feature_matrix(g).map_err(|e| ConfigError(format!("model: {e}")))?
            }
            None => {
                let jitter = (self.jitter > 0.0).then_some(Jitter {
                    sd: self.jitter,
                    seed: self.model_seed,
                });
                load_feature_matrix(self.path.as_deref().expect("validated"), jitter)
                    .map_err(|e| ConfigError(format!("path: {e}")))?
            }
        };
        let n = features.len();
        let graph_weights = graph
            .as_ref()
            .and_then(|g| g.weights())
            .map(<[f64]>::to_vec);
        let mode = match self.base_measure {
            BaseMeasureKind::None => {
                if graph_weights.is_some() {
                    return bad(
                        "base_measure: the edge list carries weights; choose sqrt-q or q-scaled",
                    );
                }
                None
            }
            BaseMeasureKind::SqrtQ => Some(WeightMode::SqrtQ),
            BaseMeasureKind::QScaled => Some(WeightMode::QScaled),
        };
        let mut model = Model64::new(features);
        if let Some(mode) = mode {
            let q = match graph_weights {
                Some(w) => {
                    BaseMeasure::new(w, mode).map_err(|e| ConfigError(format!("path: {e}")))?
                }
                None => BaseMeasure::uniform_random(n, self.weight_seed, mode),
            };
            model = model
                .with_base_measure(q)
                .map_err(|e| ConfigError(format!("base_measure: {e}")))?;
        }
        if self.samplers.contains(&SamplerKind::AldousBroder)
            && (graph.is_none() || self.base_measure != BaseMeasureKind::None)
        {
            return bad("sampler: aldous-broder needs an unweighted graph model");
        }
        if let Some(g) = graph {
            model = model.with_graph(g);
        }
        Ok(model)
    }
}
