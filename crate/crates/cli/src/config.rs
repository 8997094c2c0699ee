//! Experiment configuration: CLI flags, optional TOML file, and the merge of
//! the two (flags win field by field).
//!
//! Seed discipline: every random choice is drawn from a stream derived off
//! the base seed, so any run is reproducible byte for byte.
//!   size stream      s_n = derive(seed, n)
//!   trial stream     s_t = derive(s_n, trial)
//!   graph sample     derive(s_t, 0)   (geometric topology only)
//!   spike node       derive(s_t, 1)
//!   estimator        derive(s_t, 2), or derive(derive(doi_seed, n), trial)
//!                    when --doi-seed pins it

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::Args;
use consensus_core::{derive_seed, Graph, PredictorParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Chain,
    Grid,
    Rgg,
}

impl Topology {
    pub fn as_str(self) -> &'static str {
        match self {
            Topology::Chain => "chain",
            Topology::Grid => "grid",
            Topology::Rgg => "rgg",
        }
    }

    /// True when repeated trials see the same graph.
    pub fn is_deterministic(self) -> bool {
        !matches!(self, Topology::Rgg)
    }
}

impl FromStr for Topology {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chain" => Ok(Topology::Chain),
            "grid" => Ok(Topology::Grid),
            "rgg" => Ok(Topology::Rgg),
            other => bail!("unknown topology `{other}` (expected chain, grid, or rgg)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    Slope,
    Spike,
}

impl InitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InitKind::Slope => "slope",
            InitKind::Spike => "spike",
        }
    }
}

impl FromStr for InitKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slope" => Ok(InitKind::Slope),
            "spike" => Ok(InitKind::Spike),
            other => bail!("unknown init `{other}` (expected slope or spike)"),
        }
    }
}

/// Predictor coefficients: `ls` or `asym:<eps>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaMode {
    LeastSquares,
    Asymptotic(f64),
}

impl ThetaMode {
    pub fn params(self) -> Result<PredictorParams> {
        match self {
            ThetaMode::LeastSquares => Ok(PredictorParams::least_squares()),
            ThetaMode::Asymptotic(eps) => {
                PredictorParams::asymptotic(eps).context("invalid --theta asym:<eps>")
            }
        }
    }
}

impl fmt::Display for ThetaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThetaMode::LeastSquares => write!(f, "ls"),
            ThetaMode::Asymptotic(eps) => write!(f, "asym:{eps}"),
        }
    }
}

impl FromStr for ThetaMode {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "ls" {
            return Ok(ThetaMode::LeastSquares);
        }
        if let Some(eps) = s.strip_prefix("asym:") {
            let eps: f64 = eps.parse().context("bad epsilon in --theta asym:<eps>")?;
            return Ok(ThetaMode::Asymptotic(eps));
        }
        bail!("unknown theta mode `{s}` (expected ls or asym:<eps>)");
    }
}

/// Where the tuning eigenvalue comes from: `oracle`, `doi`, or `doi:<K>,<L>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lambda2Source {
    Oracle,
    Doi { k: Option<usize>, l: Option<usize> },
}

impl fmt::Display for Lambda2Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lambda2Source::Oracle => write!(f, "oracle"),
            Lambda2Source::Doi { k: Some(k), l: Some(l) } => write!(f, "doi:{k},{l}"),
            Lambda2Source::Doi { .. } => write!(f, "doi"),
        }
    }
}

impl FromStr for Lambda2Source {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "oracle" {
            return Ok(Lambda2Source::Oracle);
        }
        if s == "doi" {
            return Ok(Lambda2Source::Doi { k: None, l: None });
        }
        if let Some(rest) = s.strip_prefix("doi:") {
            let (k, l) = rest
                .split_once(',')
                .context("expected --lambda2 doi:<K>,<L>")?;
            return Ok(Lambda2Source::Doi {
                k: Some(k.trim().parse().context("bad K in --lambda2 doi:<K>,<L>")?),
                l: Some(l.trim().parse().context("bad L in --lambda2 doi:<K>,<L>")?),
            });
        }
        bail!("unknown lambda2 source `{s}` (expected oracle, doi, or doi:<K>,<L>)");
    }
}

/// Flags shared by every subcommand. All optional: a missing flag falls back
/// to the TOML config, then to the built-in default.
#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML config file mirroring these flags (flags override it)
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Graph family: chain, grid, or rgg
    #[arg(long)]
    pub topology: Option<Topology>,

    /// Network size; repeat for a sweep (grid sizes must be perfect squares)
    #[arg(long = "n", value_name = "N")]
    pub sizes: Vec<usize>,

    /// Trials per size
    #[arg(long)]
    pub trials: Option<usize>,

    /// Initial condition: slope or spike
    #[arg(long)]
    pub init: Option<InitKind>,

    /// Accuracy in dB (negative; -100 means relative error 1e-5)
    #[arg(long)]
    pub eps_db: Option<f64>,

    /// Predictor coefficients: ls or asym:<eps>
    #[arg(long)]
    pub theta: Option<ThetaMode>,

    /// Tuning eigenvalue source: oracle, doi, or doi:<K>,<L>
    #[arg(long)]
    pub lambda2: Option<Lambda2Source>,

    /// Base seed for all derived randomness
    #[arg(long)]
    pub seed: Option<u64>,

    /// Output directory for CSV/JSON artifacts
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Estimator iteration count K (default 2N)
    #[arg(long)]
    pub doi_k: Option<usize>,

    /// Estimator normalization period L (default max(1, diameter))
    #[arg(long)]
    pub doi_l: Option<usize>,

    /// Separate seed for the estimator's start vector
    #[arg(long)]
    pub doi_seed: Option<u64>,
}

/// TOML mirror of [`CommonArgs`]; unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    topology: Option<String>,
    n: Option<Vec<usize>>,
    trials: Option<usize>,
    init: Option<String>,
    eps_db: Option<f64>,
    theta: Option<String>,
    lambda2: Option<String>,
    seed: Option<u64>,
    out: Option<String>,
    doi_k: Option<usize>,
    doi_l: Option<usize>,
    doi_seed: Option<u64>,
}

/// Fully resolved, validated experiment parameters.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub topology: Topology,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub init: InitKind,
    pub epsilon_db: f64,
    #[serde(serialize_with = "serialize_display")]
    pub theta_mode: ThetaMode,
    #[serde(serialize_with = "serialize_display")]
    pub lambda2_source: Lambda2Source,
    pub seed: u64,
    #[serde(skip)]
    pub out: PathBuf,
    pub doi_k: Option<usize>,
    pub doi_l: Option<usize>,
    pub doi_seed: Option<u64>,
}

fn serialize_display<T: fmt::Display, S: serde::Serializer>(
    v: &T,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

impl ExperimentConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                toml::from_str::<FileConfig>(&text)
                    .with_context(|| format!("parsing config {}", path.display()))?
            }
            None => FileConfig::default(),
        };
        fn parse_opt<T: FromStr<Err = anyhow::Error>>(
            s: &Option<String>,
            what: &str,
        ) -> Result<Option<T>> {
            s.as_deref()
                .map(str::parse)
                .transpose()
                .with_context(|| format!("config key `{what}`"))
        }
        let cfg = ExperimentConfig {
            topology: args
                .topology
                .or(parse_opt(&file.topology, "topology")?)
                .unwrap_or(Topology::Chain),
            sizes: if args.sizes.is_empty() {
                file.n.unwrap_or_else(|| vec![50])
            } else {
                args.sizes.clone()
            },
            trials: args.trials.or(file.trials).unwrap_or(30),
            init: args
                .init
                .or(parse_opt(&file.init, "init")?)
                .unwrap_or(InitKind::Slope),
            epsilon_db: args.eps_db.or(file.eps_db).unwrap_or(-100.0),
            theta_mode: args
                .theta
                .or(parse_opt(&file.theta, "theta")?)
                .unwrap_or(ThetaMode::LeastSquares),
            lambda2_source: args
                .lambda2
                .or(parse_opt(&file.lambda2, "lambda2")?)
                .unwrap_or(Lambda2Source::Doi { k: None, l: None }),
            seed: args.seed.or(file.seed).unwrap_or(0),
            out: args
                .out
                .clone()
                .or(file.out.map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("runs")),
            doi_k: args.doi_k.or(file.doi_k),
            doi_l: args.doi_l.or(file.doi_l),
            doi_seed: args.doi_seed.or(file.doi_seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            bail!("at least one --n is required");
        }
        if !self.sizes.windows(2).all(|w| w[0] < w[1]) {
            bail!("sizes must be strictly ascending, got {:?}", self.sizes);
        }
        if self.trials < 1 {
            bail!("--trials must be at least 1");
        }
        if self.epsilon_db >= 0.0 {
            bail!("--eps-db must be negative, got {}", self.epsilon_db);
        }
        if self.topology == Topology::Grid {
            for &n in &self.sizes {
                let side = (n as f64).sqrt().round() as usize;
                if side * side != n {
                    bail!("grid size {n} is not a perfect square");
                }
            }
        }
        self.theta_mode.params().map(|_| ())
    }

    /// Relative l2 accuracy equivalent to `epsilon_db`.
    pub fn epsilon_linear(&self) -> f64 {
        10f64.powf(self.epsilon_db / 20.0)
    }

    pub fn theta(&self) -> PredictorParams {
        // Validated in resolve().
        self.theta_mode.params().unwrap()
    }

    pub fn size_seed(&self, n: usize) -> u64 {
        derive_seed(self.seed, n as u64)
    }

    pub fn trial_seed(&self, n: usize, trial: usize) -> u64 {
        derive_seed(self.size_seed(n), trial as u64)
    }

    /// The graph a given trial operates on.
    pub fn instance(&self, n: usize, trial_seed: u64) -> Result<Graph> {
        Ok(match self.topology {
            Topology::Chain => Graph::chain(n)?,
            Topology::Grid => Graph::grid((n as f64).sqrt().round() as usize)?,
            Topology::Rgg => Graph::random_geometric(n, derive_seed(trial_seed, 0))?.graph,
        })
    }

    pub fn estimator_seed(&self, n: usize, trial: usize) -> u64 {
        match self.doi_seed {
            Some(base) => derive_seed(derive_seed(base, n as u64), trial as u64),
            None => derive_seed(self.trial_seed(n, trial), 2),
        }
    }
}
