use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::gmres::{GmresMode, SolverConfig, Stopping};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSource,
    #[serde(default = "default_preconditioners")]
    pub preconditioners: Vec<PreconditionerSpec>,
    #[serde(default = "default_ranks")]
    pub deflation_ranks: Vec<usize>,
    #[serde(default = "default_weights")]
    pub weights: Vec<WeightChoice>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemSource {
    Generated {
        k: usize,
        #[serde(default = "one")]
        c0: f64,
        #[serde(default = "one")]
        nu: f64,
        #[serde(default = "default_etas")]
        etas: Vec<f64>,
    },
    /// `A` (split into symmetric and skew parts) and optional `b`
    /// (default: all ones). `grid` is needed for Schwarz partitions.
    MatrixMarket {
        a: PathBuf,
        b: Option<PathBuf>,
        grid: Option<[usize; 2]>,
    },
    /// Directory with `M.mtx`, `N.mtx`, `b.txt`, `meta.toml`; `etas`
    /// overrides the stored one.
    Bundle { dir: PathBuf, etas: Option<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PreconditionerSpec {
    Identity,
    InvHermitian,
    Schwarz {
        #[serde(default = "default_subdomains")]
        n_subdomains: usize,
        #[serde(default = "one_usize")]
        overlap: usize,
        #[serde(default)]
        coarse: CoarseChoice,
    },
}

impl PreconditionerSpec {
    pub fn label(&self) -> String {
        match self {
            Self::Identity => "identity".into(),
            Self::InvHermitian => "inv_hermitian".into(),
            Self::Schwarz { n_subdomains, overlap, coarse } => {
                let c = match coarse {
                    CoarseChoice::None => "none".to_string(),
                    CoarseChoice::PartitionOfUnity => "pou".to_string(),
                    CoarseChoice::File(_) => "file".to_string(),
                };
                format!("schwarz{n_subdomains}-ov{overlap}-{c}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoarseChoice {
    None,
    #[default]
    PartitionOfUnity,
    /// Dense matrix file with one coarse vector per column.
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightChoice {
    Preconditioner,
    Identity,
}

impl WeightChoice {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Preconditioner => "W=H",
            Self::Identity => "W=I",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeflationChoice {
    HOrthogonal,
    /// `Y = Z`; only valid with the `inv_hermitian` preconditioner.
    Invariant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigensolverChoice {
    Auto,
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeChoice {
    WeightedRight,
    UnweightedLeft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoppingChoice {
    Weighted,
    PreconditionedEuclidean,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iter: usize,
    pub restart: Option<usize>,
    pub breakdown_eps: f64,
    pub modes: Vec<ModeChoice>,
    pub stopping: StoppingChoice,
    pub track_h_residual: bool,
    pub deflation: DeflationChoice,
    pub eigensolver: EigensolverChoice,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 1000,
            restart: None,
            breakdown_eps: 1e-14,
            modes: vec![ModeChoice::WeightedRight],
            stopping: StoppingChoice::Weighted,
            track_h_residual: true,
            deflation: DeflationChoice::HOrthogonal,
            eigensolver: EigensolverChoice::Auto,
        }
    }
}

impl SolverSection {
    pub fn solver_config(&self, mode: ModeChoice) -> SolverConfig {
        SolverConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            restart: self.restart,
            mode: match mode {
                ModeChoice::WeightedRight => GmresMode::WeightedRight,
                ModeChoice::UnweightedLeft => GmresMode::UnweightedLeft,
            },
            breakdown_eps: self.breakdown_eps,
            stopping: match self.stopping {
                StoppingChoice::Weighted => Stopping::Natural,
                StoppingChoice::PreconditionedEuclidean => Stopping::PreconditionedEuclidean,
            },
            track_h_residual: self.track_h_residual,
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsSection {
    /// Random samples for the sampled theta; 0 disables it.
    pub theta_samples: usize,
    pub kappa_max_iter: usize,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self {
            theta_samples: 1000,
            kappa_max_iter: 200,
        }
    }
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn default_subdomains() -> usize {
    16
}
fn default_etas() -> Vec<f64> {
    vec![1.0]
}
fn default_ranks() -> Vec<usize> {
    vec![0]
}
fn default_weights() -> Vec<WeightChoice> {
    vec![WeightChoice::Preconditioner]
}
fn default_preconditioners() -> Vec<PreconditionerSpec> {
    vec![PreconditionerSpec::Identity]
}
fn default_output() -> PathBuf {
    PathBuf::from("wpdgmres-out")
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.problem {
            ProblemSource::Generated { .. } => {}
            ProblemSource::MatrixMarket { a, b, .. } => {
                fix(a);
                if let Some(b) = b {
                    fix(b);
                }
            }
            ProblemSource::Bundle { dir, .. } => fix(dir),
        }
        for p in &mut self.preconditioners {
            if let PreconditionerSpec::Schwarz { coarse: CoarseChoice::File(f), .. } = p {
                fix(f);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(m) = self.deflation_ranks.iter().find(|m| *m % 2 != 0) {
            return Err(Error::Config(format!("deflation rank {m} is odd")));
        }
        if self.deflation_ranks.is_empty() {
            return Err(Error::Config("deflation_ranks is empty".into()));
        }
        if self.preconditioners.is_empty() || self.weights.is_empty() || self.solver.modes.is_empty() {
            return Err(Error::Config("preconditioners, weights and solver.modes must be non-empty".into()));
        }
        if let ProblemSource::Generated { k, c0, nu, etas } = &self.problem {
            if *k < 2 {
                return Err(Error::Config(format!("k = {k} leaves no interior unknowns")));
            }
            if !(*c0 > 0.0 && *nu > 0.0) {
                return Err(Error::Config("c0 and nu must be positive".into()));
            }
            if etas.is_empty() || etas.iter().any(|e| !e.is_finite()) {
                return Err(Error::Config("etas must be a non-empty list of finite values".into()));
            }
        }
        for p in &self.preconditioners {
            if let PreconditionerSpec::Schwarz { n_subdomains, .. } = p {
                if *n_subdomains == 0 {
                    return Err(Error::Config("schwarz needs n_subdomains >= 1".into()));
                }
            }
        }
        if self.solver.deflation == DeflationChoice::Invariant
            && self.preconditioners.iter().any(|p| *p != PreconditionerSpec::InvHermitian)
        {
            return Err(Error::Config("invariant deflation requires the inv_hermitian preconditioner only".into()));
        }
        self.solver.solver_config(ModeChoice::WeightedRight).validate()
    }
}
