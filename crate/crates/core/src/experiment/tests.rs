use super::*;
use crate::error::Error;
use std::path::Path;

fn config() -> ExperimentConfig {
    ExperimentConfig::from_toml_str(
        r#"
name = "tiny"
seed = 3
seeds = 2
algorithms = ["block-smoo", "weighted-sum", "function-alternate", "block-alternate"]
step_sizes = [0.01, 0.05]
checkpoints = 5
batch = 16

[problem]
kind = "synthetic"
data_seed = 1
n_train = 128
n_test = 32
d = 6
q = 3
r = 2
noise_sigma = 0.1

[budget]
kind = "work-units"
value = 60000
"#,
    )
    .unwrap()
}

#[test]
fn grid_runs_every_cell_and_selects_a_step() {
    let cfg = config();
    let problem = LoadedProblem::load(&cfg, Path::new(".")).unwrap();
    let (summary, cells) = run_experiment(&cfg, &problem, None).unwrap();
    assert_eq!(cells.len(), 4 * 2 * 2);
    assert_eq!(summary.best.len(), 4);
    for cell in &cells {
        assert!(cell.error.is_none(), "{:?}", cell.error);
        // checkpoints are monotone and the run stops within one step of the budget
        assert!(cell.rows.windows(2).all(|w| w[0].work_units < w[1].work_units));
        assert_eq!(cell.rows.last().unwrap().checkpoint, 5);
        // scalarized steps pay for all q gradients
        let step_cost: u64 = match cell.algorithm {
            Algorithm::WeightedSum | Algorithm::BlockAlternate => (problem.dim() * 16 * 3) as u64,
            Algorithm::BlockSmoo | Algorithm::FunctionAlternate => (problem.dim() * 16) as u64,
        };
        assert!(cell.work_units >= 60000 && cell.work_units < 60000 + step_cost, "{}", cell.work_units);
    }
    for best in &summary.best {
        let step = best.step_size.unwrap();
        let mean = best.mean_final_test_weighted.unwrap();
        // the oracle: recompute the selection by brute force
        for &other in &cfg.step_sizes {
            let finals: Vec<f64> = cells
                .iter()
                .filter(|c| c.algorithm == best.algorithm && c.step_size == other)
                .map(|c| c.final_test_weighted().unwrap())
                .collect();
            assert!(mean <= finals.iter().sum::<f64>() / finals.len() as f64);
        }
        assert!(cfg.step_sizes.contains(&step));
    }
}

#[test]
fn reruns_write_identical_files() {
    let cfg = config();
    let problem = LoadedProblem::load(&cfg, Path::new(".")).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&cfg, &problem, Some(a.path())).unwrap();
    run_experiment(&cfg, &problem, Some(b.path())).unwrap();
    let mut names: Vec<_> = std::fs::read_dir(a.path().join("cells")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 16);
    for name in names {
        let x = std::fs::read(a.path().join("cells").join(&name)).unwrap();
        let y = std::fs::read(b.path().join("cells").join(&name)).unwrap();
        assert_eq!(x, y);
    }
    assert_eq!(
        std::fs::read(a.path().join("summary.json")).unwrap(),
        std::fs::read(b.path().join("summary.json")).unwrap()
    );
}

#[test]
fn diverging_cells_are_marked_failed() {
    let mut cfg = config();
    cfg.step_sizes = vec![50.0, 0.01];
    cfg.algorithms = vec![Algorithm::WeightedSum];
    let problem = LoadedProblem::load(&cfg, Path::new(".")).unwrap();
    let (summary, _) = run_experiment(&cfg, &problem, None).unwrap();
    assert!(summary.cells.iter().any(|c| c.error.is_some()));
    assert_eq!(summary.best[0].step_size, Some(0.01));
}

#[test]
fn selection_prefers_lowest_mean_and_skips_failures() {
    let cell = |step: f64, seed: usize, v: Option<f64>| CellSummary {
        algorithm: Algorithm::BlockSmoo,
        step_size: step,
        seed,
        work_units: 1,
        final_test_weighted: v,
        error: None,
    };
    let cells = vec![
        cell(0.1, 0, Some(1.0)),
        cell(0.1, 1, Some(3.0)),
        cell(0.2, 0, Some(1.5)),
        cell(0.2, 1, Some(1.5)),
        cell(0.3, 0, Some(0.1)),
        cell(0.3, 1, None),
    ];
    let best = select_best_steps(&cells, &[Algorithm::BlockSmoo], &[0.1, 0.2, 0.3]);
    assert_eq!(best[0].step_size, Some(0.2));
    assert_eq!(best[0].mean_final_test_weighted, Some(1.5));
}

#[test]
fn toy_quadratic_sweep() {
    let cfg = ExperimentConfig::from_toml_str(
        r#"
name = "toy-sweep"
seed = 1
seeds = 1
algorithms = ["block-smoo"]
step_sizes = [0.05]
partition = "two-block"

[problem]
kind = "quadratic"
instance_seed = 4
n = 4
q = 2
eig_lo = 0.5
eig_hi = 2.0
center_scale = 1.0
noise_std = 0.05

[budget]
kind = "work-units"
value = 1000

[sweep]
p = 4
step = 0.05
data_passes = 400
"#,
    )
    .unwrap();
    let problem = LoadedProblem::load(&cfg, Path::new(".")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = run_pareto_sweep(&cfg, &problem, Some(dir.path())).unwrap();
    assert_eq!(report.vectors, 5);
    assert_eq!(report.fronts.iter().map(|f| f.points.len()).sum::<usize>(), 10);
    for m in &report.metrics.methods {
        let purity = m.purity.unwrap();
        assert!((0.0..=1.0).contains(&purity));
    }
    for f in ["block-smoo.csv", "weighted-sum.csv", "block-smoo.nondominated.csv", "metrics.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn missing_sweep_table_is_a_config_error() {
    let cfg = config();
    let problem = LoadedProblem::load(&cfg, Path::new(".")).unwrap();
    assert!(matches!(run_pareto_sweep(&cfg, &problem, None), Err(Error::Config { .. })));
}
