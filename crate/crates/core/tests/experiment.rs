use std::path::Path;

use wpdgmres::experiment::{
    emit_plots, inspect_pencil, run_experiment, write_outputs, write_spectra, ExperimentConfig,
    SUMMARY_COLUMNS,
};
use wpdgmres::linalg::io::{save_dense, save_matrix_market, save_vector};
use wpdgmres::linalg::DenseMatrix;
use wpdgmres::problems::{model_problem, save_bundle};
use wpdgmres::Error;

const TINY: &str = r#"
seed = 5
deflation_ranks = [0, 4]
weights = ["preconditioner", "identity"]
[problem]
source = "generated"
k = 8
etas = [1.0, 20.0]
[[preconditioners]]
kind = "identity"
[[preconditioners]]
kind = "schwarz"
n_subdomains = 4
[diagnostics]
theta_samples = 50
"#;

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn summaries(dir: &Path) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("summary_"))
        .map(|n| (n.clone(), read(dir, &n)))
        .collect();
    out.sort();
    out
}

#[test]
fn identical_runs_produce_identical_tables() {
    let cfg = ExperimentConfig::from_toml(TINY).unwrap();
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    write_outputs(&run_experiment(&cfg).unwrap(), d1.path()).unwrap();
    write_outputs(&run_experiment(&cfg).unwrap(), d2.path()).unwrap();
    let (s1, s2) = (summaries(d1.path()), summaries(d2.path()));
    assert!(!s1.is_empty());
    assert_eq!(s1, s2);
    assert_eq!(read(d1.path(), "runs.csv"), read(d2.path(), "runs.csv"));
}

#[test]
fn outputs_have_the_documented_shape() {
    let cfg = ExperimentConfig::from_toml(TINY).unwrap();
    let out = run_experiment(&cfg).unwrap();
    // 2 etas x 2 preconditioners x 2 weights x 2 ranks
    assert_eq!(out.records.len(), 16);
    assert!(out.all_converged());
    assert!(!out.any_bound_violation());
    for r in &out.records {
        if r.weight.label() == "W=I" {
            assert!(!r.bound_applicable);
        } else {
            assert!(r.bound.bound_satisfied && r.bound.step_violations.is_empty());
        }
    }
    let dir = tempfile::tempdir().unwrap();
    write_outputs(&out, dir.path()).unwrap();
    for (name, text) in summaries(dir.path()) {
        let header = text.lines().next().unwrap();
        assert_eq!(header, SUMMARY_COLUMNS.join(","), "{name}");
        assert_eq!(text.lines().count(), 1 + cfg.deflation_ranks.len());
    }
    for r in &out.records {
        let res = read(dir.path(), &format!("residuals/{}.csv", r.id));
        assert_eq!(res.lines().count(), 1 + r.report.residual_history.len());
        assert!(res.starts_with("iteration,"));
    }
    let plots = emit_plots(&out.records, dir.path()).unwrap();
    assert_eq!(plots.len(), 4);
    for p in plots {
        let text = std::fs::read_to_string(p).unwrap();
        assert!(text.contains("matplotlib"));
    }
    assert!(emit_plots(&[], dir.path()).unwrap().is_empty());
}

#[test]
fn config_errors_are_reported() {
    let odd = TINY.replace("[0, 4]", "[0, 3]");
    assert!(matches!(ExperimentConfig::from_toml(&odd), Err(Error::Config(_))));
    let unknown = format!("{TINY}\nbogus = 1\n");
    assert!(ExperimentConfig::from_toml(&unknown).is_err());
    let no_etas = TINY.replace("etas = [1.0, 20.0]", "etas = []");
    assert!(ExperimentConfig::from_toml(&no_etas).is_err());
    let bad_tol = format!("{TINY}\n[solver]\ntol = -1.0\n");
    assert!(ExperimentConfig::from_toml(&bad_tol).is_err());
    let invariant = format!("{TINY}\n[solver]\ndeflation = \"invariant\"\n");
    assert!(ExperimentConfig::from_toml(&invariant).is_err());
    assert!(ExperimentConfig::load("/nonexistent/config.toml").is_err());
}

#[test]
fn bundle_and_matrix_market_sources() {
    let dir = tempfile::tempdir().unwrap();
    let p = model_problem(7, 1.0, 1.0, 4.0).unwrap();
    save_bundle(dir.path().join("bundle"), &p).unwrap();
    save_matrix_market(dir.path().join("A.mtx"), &p.a()).unwrap();
    save_vector(dir.path().join("b.txt"), &p.b).unwrap();
    let cfg_text = r#"
deflation_ranks = [0, 2]
[problem]
source = "bundle"
dir = "bundle"
[[preconditioners]]
kind = "inv_hermitian"
"#;
    std::fs::write(dir.path().join("bundle.toml"), cfg_text).unwrap();
    // relative paths resolve against the config file's directory
    let from_bundle = run_experiment(&ExperimentConfig::load(dir.path().join("bundle.toml")).unwrap()).unwrap();

    let mm_text = r#"
deflation_ranks = [0, 2]
[problem]
source = "matrix-market"
a = "A.mtx"
b = "b.txt"
grid = [6, 6]
[[preconditioners]]
kind = "inv_hermitian"
[[preconditioners]]
kind = "schwarz"
n_subdomains = 4
overlap = 0
"#;
    std::fs::write(dir.path().join("mm.toml"), mm_text).unwrap();
    let from_mm = run_experiment(&ExperimentConfig::load(dir.path().join("mm.toml")).unwrap()).unwrap();
    assert!(from_bundle.all_converged() && from_mm.all_converged());
    // same system either way
    for (a, b) in from_bundle.records.iter().zip(&from_mm.records) {
        assert_eq!(a.m, b.m);
        assert_eq!(a.report.iterations, b.report.iterations);
        assert!((a.rho - b.rho).abs() <= 1e-10 * a.rho);
    }
    assert_eq!(from_bundle.records[0].eta, 4.0);
}

#[test]
fn coarse_vectors_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let n = 7 * 7;
    let cols = vec![vec![1.0; n], (0..n).map(|i| (i % 7) as f64).collect()];
    save_dense(dir.path().join("coarse.txt"), &DenseMatrix::from_columns(n, &cols)).unwrap();
    let text = r#"
deflation_ranks = [0]
[problem]
source = "generated"
k = 8
etas = [1.0]
[[preconditioners]]
kind = "schwarz"
n_subdomains = 4
coarse = { file = "coarse.txt" }
"#;
    std::fs::write(dir.path().join("c.toml"), text).unwrap();
    let cfg = ExperimentConfig::load(dir.path().join("c.toml")).unwrap();
    let out = run_experiment(&cfg).unwrap();
    assert!(out.all_converged());
    assert_eq!(out.records[0].preconditioner, "schwarz4-ov1-file");
}

#[test]
fn spectrum_inspection() {
    let cfg = ExperimentConfig::from_toml(TINY).unwrap();
    let tables = inspect_pencil(&cfg, 6).unwrap();
    assert_eq!(tables.len(), 2);
    for t in &tables {
        assert!(t.abs_lambda.len() >= 6);
        assert!(t.abs_lambda.windows(2).all(|w| w[1] <= w[0]));
    }
    // |lambda| scales linearly with eta
    let ratio = tables[1].abs_lambda[0] / tables[0].abs_lambda[0];
    assert!((ratio - 20.0).abs() <= 1e-10 * 20.0);
    let dir = tempfile::tempdir().unwrap();
    let files = write_spectra(&tables, dir.path()).unwrap();
    assert_eq!(files.len(), 2);
}
