//! Experiment driver: load or generate a problem, solve the pencil once,
//! sweep preconditioners, deflation ranks, weights and solver modes, verify
//! the convergence bounds and write CSV tables and plot scripts.

mod config;
mod output;

pub use config::{
    CoarseChoice, DeflationChoice, DiagnosticsSection, EigensolverChoice, ExperimentConfig, ModeChoice,
    PreconditionerSpec, ProblemSource, SolverSection, StoppingChoice, WeightChoice,
};
pub use output::{emit_plots, write_outputs, write_spectra, SUMMARY_COLUMNS};

use rayon::prelude::*;

use crate::deflation::DeflationPair;
use crate::diagnostics::{estimate_kappa_hm, theta_sampled, verify_run, BoundReport, KappaEstimate, KappaOptions};
use crate::eigenpencil::{
    pencil_dense, pencil_lanczos, real_deflation_basis, tau_of, LanczosOptions, PencilEigenSet, DENSE_SIZE_CAP,
};
use crate::error::{Error, Result};
use crate::gmres::{solve_full, SolveReport};
use crate::linalg::io::{load_dense, load_matrix_market, load_vector};
use crate::linalg::{sparse_cholesky, split_hermitian_skew, CsrMatrix};
use crate::operators::{
    additive_schwarz_op, identity_op, inverse_hermitian_op, partition_structured, CoarseSpace, LinearOperator,
};
use crate::problems::{load_bundle, model_problem};

/// One system `A = M + N` with right-hand side.
#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub eta: f64,
    pub m: CsrMatrix,
    /// Skew-symmetric part of `A`.
    pub n: CsrMatrix,
    pub a: CsrMatrix,
    pub b: Vec<f64>,
    /// Interior grid dimensions when the unknowns form a structured grid.
    pub grid: Option<(usize, usize)>,
}

/// Problems described by the configuration, one per `eta`.
pub fn load_problems(source: &ProblemSource) -> Result<Vec<LoadedProblem>> {
    match source {
        ProblemSource::Generated { k, c0, nu, etas } => etas
            .iter()
            .map(|&eta| {
                let p = model_problem(*k, *c0, *nu, eta)?;
                Ok(LoadedProblem {
                    eta,
                    a: p.a(),
                    n: p.skew_part(),
                    grid: Some(p.grid()),
                    m: p.m,
                    b: p.b,
                })
            })
            .collect(),
        ProblemSource::MatrixMarket { a, b, grid } => {
            let a = load_matrix_market(a)?;
            let (m, n) = split_hermitian_skew(&a)?;
            let b = match b {
                Some(path) => load_vector(path)?,
                None => vec![1.0; a.n_rows()],
            };
            if b.len() != a.n_rows() {
                return Err(Error::DimensionMismatch { context: "right-hand side", expected: a.n_rows(), found: b.len() });
            }
            Ok(vec![LoadedProblem { eta: 1.0, m, n, a, b, grid: grid.map(|[x, y]| (x, y)) }])
        }
        ProblemSource::Bundle { dir, etas } => {
            let (m, n_unit, b, meta) = load_bundle(dir)?;
            let etas = etas.clone().unwrap_or_else(|| vec![meta.eta]);
            let s = meta.k.saturating_sub(1);
            etas.into_iter()
                .map(|eta| {
                    let n = n_unit.scaled(eta);
                    let a = m.add_scaled(1.0, &n, 1.0)?;
                    Ok(LoadedProblem { eta, m: m.clone(), n, a, b: b.clone(), grid: Some((s, s)) })
                })
                .collect()
        }
    }
}

/// Pencil eigenpairs with dense/Lanczos selection.
pub fn solve_pencil(p: &LoadedProblem, k: usize, choice: EigensolverChoice, seed: u64) -> Result<PencilEigenSet> {
    let n = p.m.n_rows();
    let dense = match choice {
        EigensolverChoice::Dense => true,
        EigensolverChoice::Lanczos => false,
        EigensolverChoice::Auto => n < DENSE_SIZE_CAP,
    };
    if dense {
        pencil_dense(&p.n, &p.m, k)
    } else {
        let factor = sparse_cholesky(&p.m)?;
        let opts = LanczosOptions { seed, max_iters: n.min((6 * k).max(1000)), ..LanczosOptions::default() };
        pencil_lanczos(&p.m, &factor, &p.n, k, &opts)
    }
}

pub fn build_preconditioner(spec: &PreconditionerSpec, p: &LoadedProblem) -> Result<Box<dyn LinearOperator>> {
    Ok(match spec {
        PreconditionerSpec::Identity => Box::new(identity_op(p.m.n_rows())),
        PreconditionerSpec::InvHermitian => Box::new(inverse_hermitian_op(&p.m)?),
        PreconditionerSpec::Schwarz { n_subdomains, overlap, coarse } => {
            let grid = p
                .grid
                .ok_or_else(|| Error::Config("schwarz needs a structured grid (set problem.grid)".into()))?;
            let sets = partition_structured(grid, *n_subdomains, *overlap, &p.m)?;
            let coarse = match coarse {
                CoarseChoice::None => CoarseSpace::None,
                CoarseChoice::PartitionOfUnity => CoarseSpace::PartitionOfUnity,
                CoarseChoice::File(path) => CoarseSpace::Vectors(load_dense(path)?),
            };
            Box::new(additive_schwarz_op(&p.m, sets, coarse)?)
        }
    })
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub id: String,
    pub eta: f64,
    pub preconditioner: String,
    pub weight: WeightChoice,
    pub mode: ModeChoice,
    pub m: usize,
    pub report: SolveReport,
    pub bound: BoundReport,
    /// The bound theory applies (`W = H`, weighted right mode).
    pub bound_applicable: bool,
    /// `|lambda_1|`
    pub rho: f64,
    pub tau_exhausted: bool,
}

impl RunRecord {
    pub fn bound_violated(&self) -> bool {
        self.bound_applicable && (!self.bound.bound_satisfied || !self.bound.step_violations.is_empty())
    }

    /// Grouping key for summaries: everything except `m`.
    pub fn group(&self) -> String {
        format!(
            "eta{}_{}_{}_{}",
            self.eta,
            self.preconditioner,
            if self.weight == WeightChoice::Preconditioner { "wH" } else { "wI" },
            mode_label(self.mode)
        )
    }
}

pub fn mode_label(mode: ModeChoice) -> &'static str {
    match mode {
        ModeChoice::WeightedRight => "weighted",
        ModeChoice::UnweightedLeft => "unweighted",
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub records: Vec<RunRecord>,
    /// `(eta, |lambda_1|)` per problem.
    pub spectral_radii: Vec<(f64, f64)>,
}

impl ExperimentOutcome {
    pub fn all_converged(&self) -> bool {
        self.records.iter().all(|r| r.report.converged)
    }

    pub fn any_bound_violation(&self) -> bool {
        self.records.iter().any(RunRecord::bound_violated)
    }
}

struct RunSpec {
    pre: usize,
    weight: WeightChoice,
    mode: ModeChoice,
    m: usize,
}

/// Runs the whole sweep described by `cfg` (computation only; see
/// [`write_outputs`]).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let problems = load_problems(&cfg.problem)?;
    let k_max = cfg.deflation_ranks.iter().copied().max().unwrap_or(0) + 2;
    let mut records = Vec::new();
    let mut radii = Vec::new();
    for p in &problems {
        let n = p.m.n_rows();
        let set = solve_pencil(p, k_max.min(n), cfg.solver.eigensolver, cfg.seed)?;
        radii.push((p.eta, set.spectral_radius()));
        log::info!("eta = {}: rho(M^-1 N) = {:.6}", p.eta, set.spectral_radius());

        let precs: Vec<Box<dyn LinearOperator>> = cfg
            .preconditioners
            .iter()
            .map(|s| build_preconditioner(s, p))
            .collect::<Result<_>>()?;
        let kopts = KappaOptions { max_iter: cfg.diagnostics.kappa_max_iter, seed: cfg.seed ^ 0x9e37, ..KappaOptions::default() };
        let kappas: Vec<KappaEstimate> = precs
            .iter()
            .map(|h| estimate_kappa_hm(h.as_ref(), &p.m, &kopts))
            .collect::<Result<_>>()?;

        let mut specs = Vec::new();
        for pre in 0..precs.len() {
            for &weight in &cfg.weights {
                for &mode in &cfg.solver.modes {
                    for &m in &cfg.deflation_ranks {
                        specs.push(RunSpec { pre, weight, mode, m });
                    }
                }
            }
        }
        let results: Vec<Result<RunRecord>> = specs
            .par_iter()
            .map(|s| {
                let h = precs[s.pre].as_ref();
                let label = cfg.preconditioners[s.pre].label();
                run_one(cfg, p, &set, h, &label, &kappas[s.pre], s)
            })
            .collect();
        for r in results {
            records.push(r?);
        }
    }
    Ok(ExperimentOutcome { records, spectral_radii: radii })
}

fn run_one(
    cfg: &ExperimentConfig,
    p: &LoadedProblem,
    set: &PencilEigenSet,
    h: &dyn LinearOperator,
    label: &str,
    kappa: &KappaEstimate,
    s: &RunSpec,
) -> Result<RunRecord> {
    let n = p.m.n_rows();
    let z = real_deflation_basis(set, s.m)?;
    let pair = match cfg.solver.deflation {
        DeflationChoice::HOrthogonal => DeflationPair::build_h_orthogonal(&p.a, h, z)?,
        DeflationChoice::Invariant => DeflationPair::build_invariant(&p.a, &p.m, h, z)?,
    };
    let identity = identity_op(n);
    let w: &dyn LinearOperator = match s.weight {
        WeightChoice::Preconditioner => h,
        WeightChoice::Identity => &identity,
    };
    let solver = cfg.solver.solver_config(s.mode);
    let (_, report) = solve_full(&p.a, &p.b, h, w, &pair, &solver)?;
    let tau = tau_of(set, s.m);
    let bound_applicable = s.weight == WeightChoice::Preconditioner && s.mode == ModeChoice::WeightedRight;
    let sampled = (bound_applicable && cfg.diagnostics.theta_samples > 0)
        .then(|| theta_sampled(&p.a, h, &pair, cfg.diagnostics.theta_samples, cfg.seed));
    let bound = verify_run(&report, kappa, tau.value, sampled);
    let rec = RunRecord {
        id: String::new(),
        eta: p.eta,
        preconditioner: label.to_string(),
        weight: s.weight,
        mode: s.mode,
        m: s.m,
        report,
        bound,
        bound_applicable,
        rho: set.spectral_radius(),
        tau_exhausted: tau.exhausted,
    };
    let id = format!("{}_m{}", rec.group(), s.m);
    Ok(RunRecord { id, ..rec })
}

/// `|lambda|` of the `top` largest pencil eigenvalues for every problem.
#[derive(Debug, Clone)]
pub struct SpectrumTable {
    pub eta: f64,
    pub abs_lambda: Vec<f64>,
}

pub fn inspect_pencil(cfg: &ExperimentConfig, top: usize) -> Result<Vec<SpectrumTable>> {
    let problems = load_problems(&cfg.problem)?;
    problems
        .iter()
        .map(|p| {
            let set = solve_pencil(p, top.min(p.m.n_rows()), cfg.solver.eigensolver, cfg.seed)?;
            Ok(SpectrumTable { eta: p.eta, abs_lambda: set.pairs.iter().map(|q| q.mu.abs()).collect() })
        })
        .collect()
}
