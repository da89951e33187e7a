use std::fs;
use std::path::Path;

use qim_core::datagen::build_balanced_dataset;
use qim_core::experiment::{
    fit_pure, method_al, method_random, method_rf, run_experiment, snapshot_iterations, Family, PoolRef,
};
use qim_core::masking::{build_mixed_masker, build_pure_masker, marginal_spread};
use qim_core::metrics::Pca;
use qim_core::{named_set, Dataset, ExperimentConfig, MaskableSet, Masker, NamedSet, ResultRow, Task};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CliError, CliResult};
use crate::files::*;
use crate::plot::plot_dir;

pub fn gen(cfg: &ExperimentConfig, out: &Path) -> CliResult<()> {
    ensure_dir(out)?;
    let mut n = 0;
    for task in cfg.tasks() {
        let spec = cfg.test_spec(task);
        write_dataset(out, &test_stem(task), &spec, &build_balanced_dataset(&spec)?)?;
        n += 1;
        for g in 0..cfg.groups {
            if cfg.family == Family::Pure {
                for &l in &cfg.l_values {
                    let spec = cfg.train_spec(task, g, l);
                    write_dataset(out, &train_stem(task, g, l), &spec, &build_balanced_dataset(&spec)?)?;
                    n += 1;
                }
            } else {
                let spec = cfg.train_spec(task, g, 0);
                write_dataset(out, &pool_stem(task, g), &spec, &build_balanced_dataset(&spec)?)?;
                n += 1;
            }
        }
    }
    println!("wrote {n} datasets to {}", out.display());
    Ok(())
}

/// Training data of one group: the pure training set for `l`, or the pool.
fn load_training(cfg: &ExperimentConfig, out: &Path, task: Task, g: usize, l: usize) -> CliResult<(Dataset, u64)> {
    let stem = match cfg.family {
        Family::Pure => train_stem(task, g, l),
        _ => pool_stem(task, g),
    };
    let (data, spec) = read_dataset(out, &stem)?;
    Ok((data, spec.seed))
}

fn record(out: &Path, rows: &[ResultRow]) -> CliResult<()> {
    let path = merge_results(out, rows, |old| rows.iter().any(|r| same_cell(old, r)))?;
    for r in rows {
        println!(
            "{} {} g{} {} l={}: accuracy {:.4} auc {:.4}",
            r.experiment, r.set, r.group, r.method, r.l, r.accuracy, r.auc
        );
    }
    println!("updated {}", path.display());
    Ok(())
}

/// Boosting on the pure training set, or on a random subset of the pool.
pub fn train(cfg: &ExperimentConfig, out: &Path) -> CliResult<()> {
    let mut rows = Vec::new();
    for task in cfg.tasks() {
        let (test, _) = read_dataset(out, &test_stem(task))?;
        for &l in &cfg.l_values {
            for g in 0..cfg.groups {
                let (data, seed) = load_training(cfg, out, task, g, l)?;
                match (cfg.family, task) {
                    (Family::Pure, Task::Set(set)) => {
                        let o = fit_pure(cfg, set, g, l, &data, seed, &test)?;
                        write_roc(&roc_path(out, task.name(), g, l), &o.roc)?;
                        rows.push(o.row);
                    }
                    _ => {
                        let pool = PoolRef { task, group: g, pool: &data, pool_seed: seed };
                        rows.push(method_random(cfg, pool, l, &test)?);
                    }
                }
            }
        }
    }
    record(out, &rows)
}

pub fn al(cfg: &ExperimentConfig, out: &Path) -> CliResult<()> {
    if cfg.family == Family::Pure {
        return Err(CliError::Usage(
            "active learning needs a pool; use a mixed or four-class experiment".into(),
        ));
    }
    let mut rows = Vec::new();
    for task in cfg.tasks() {
        let (test, _) = read_dataset(out, &test_stem(task))?;
        for &l in &cfg.l_values {
            let snaps = snapshot_iterations(l)?;
            for g in 0..cfg.groups {
                let (data, seed) = load_training(cfg, out, task, g, l)?;
                let pool = PoolRef { task, group: g, pool: &data, pool_seed: seed };
                let at: &[usize] = if g == 0 { &snaps } else { &[] };
                let o = method_al(cfg, pool, l, &test, at)?;
                write_curve(&curve_path(out, task.name(), g, l), &o.curve)?;
                if g == 0 {
                    let features = test.features();
                    let pca = Pca::fit(&features)?;
                    let coords: Vec<[f64; 2]> = features.iter().map(|f| pca.project(f)).collect();
                    write_pca(out, task.name(), &coords, &test.labels(), &o.snapshots)?;
                }
                rows.push(o.row);
            }
        }
    }
    record(out, &rows)
}

pub fn rf(cfg: &ExperimentConfig, out: &Path) -> CliResult<()> {
    let mut rows = Vec::new();
    for task in cfg.tasks() {
        let (test, _) = read_dataset(out, &test_stem(task))?;
        for &l in &cfg.l_values {
            for g in 0..cfg.groups {
                let (data, seed) = load_training(cfg, out, task, g, l)?;
                let pool = PoolRef { task, group: g, pool: &data, pool_seed: seed };
                rows.push(method_rf(cfg, pool, l, &test)?);
            }
        }
    }
    record(out, &rows)
}

/// Checks every named set against its masker. `perturb` is added to the
/// masker's first angle (beta or alpha) to demonstrate a failing check.
pub fn verify_masking(samples: usize, tol: f64, perturb: f64, seed: u64) -> CliResult<()> {
    let mut failed = Vec::new();
    for name in NamedSet::ALL {
        let set = named_set(name);
        let masker = match set {
            MaskableSet::Circle(c) => Masker::Pure(build_pure_masker(c.beta() + perturb, c.phi())),
            MaskableSet::Disk(d) => Masker::Mixed(build_mixed_masker(d.alpha() + perturb, d.theta())),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = marginal_spread(&set, &masker, samples, &mut rng)?;
        let pass = a <= tol && b <= tol;
        println!(
            "{name}: {} max_marginal_deviation_A={a:e} max_marginal_deviation_B={b:e}",
            if pass { "pass" } else { "FAIL" }
        );
        if !pass {
            failed.push(name.to_string());
        }
    }
    if failed.is_empty() {
        println!("{}/{} sets pass at tol {tol:e}", NamedSet::ALL.len(), NamedSet::ALL.len());
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "masking verification failed for {}",
            failed.join(", ")
        )))
    }
}

pub fn plot(out: &Path) -> CliResult<()> {
    for p in plot_dir(out)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

/// Runs a whole experiment and writes its results, curves, ROC and PCA
/// tables, the effective configuration and the charts.
pub fn reproduce(cfg: &ExperimentConfig, out: &Path) -> CliResult<()> {
    ensure_dir(out)?;
    let report = run_experiment(cfg)?;
    let exp = cfg.experiment.to_string();
    let config_path = out.join(format!("{exp}.config"));
    fs::write(&config_path, cfg.to_kv()).map_err(|e| CliError::io(&config_path, e))?;
    for (row, roc) in &report.rocs {
        write_roc(&roc_path(out, &row.set, row.group, row.l), roc)?;
    }
    for c in &report.curves {
        let l = c.points.last().map_or(0, |p| p.labeled_count);
        write_curve(&curve_path(out, &c.task, c.group, l), &c.points)?;
    }
    for p in &report.pca {
        write_pca(out, &p.task, &p.coords, &p.truth, &p.snapshots)?;
    }
    let path = merge_results(out, &report.rows, |r| r.experiment == exp)?;
    println!("{} rows written to {}", report.rows.len(), path.display());
    plot(out)
}
