//! Renders charts from the CSV files in an output directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};
use crate::files::{list_files, load_results, read_curve, read_pca, RESULTS_FILE};
use crate::svg::{band_chart, bar_chart, line_chart, scatter_grid, Panel, Series};

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn write_svg(path: PathBuf, body: String, written: &mut Vec<PathBuf>) -> CliResult<()> {
    fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Accuracy lines and AUC bars per (experiment, l), learning-curve bands
/// per (set, l) and PCA panels per set. Fails without writing anything when
/// `results.csv` has no rows.
pub fn plot_dir(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let rows = load_results(dir)?;
    if rows.is_empty() {
        return Err(CliError::Io(format!(
            "{}: no result rows to plot",
            dir.join(RESULTS_FILE).display()
        )));
    }
    let mut written = Vec::new();

    let mut by_panel: BTreeMap<(String, usize), BTreeMap<String, BTreeMap<usize, (f64, f64)>>> = BTreeMap::new();
    for r in &rows {
        by_panel
            .entry((r.experiment.clone(), r.l))
            .or_default()
            .entry(format!("{} {}", r.set, r.method))
            .or_default()
            .insert(r.group, (r.accuracy, r.auc));
    }
    for ((exp, l), series) in &by_panel {
        let groups: Vec<usize> = {
            let mut g: Vec<usize> = series.values().flat_map(|m| m.keys().copied()).collect();
            g.sort_unstable();
            g.dedup();
            g
        };
        let ticks: Vec<(f64, String)> = groups.iter().map(|&g| (g as f64, g.to_string())).collect();
        let lines: Vec<Series> = series
            .iter()
            .map(|(name, m)| Series {
                name: name.clone(),
                points: m.iter().map(|(&g, &(acc, _))| (g as f64, acc)).collect(),
            })
            .collect();
        let svg = line_chart(&format!("{exp}: accuracy, l = {l}"), "group", "accuracy", &ticks, &lines);
        write_svg(dir.join(format!("accuracy_{exp}_l{l}.svg")), svg, &mut written)?;

        let cats: Vec<String> = groups.iter().map(|g| format!("g{g}")).collect();
        let names: Vec<String> = series.keys().cloned().collect();
        let values: Vec<Vec<f64>> = series
            .values()
            .map(|m| groups.iter().map(|g| m.get(g).map_or(0.0, |v| v.1)).collect())
            .collect();
        let svg = bar_chart(&format!("{exp}: AUC, l = {l}"), "AUC", &cats, &names, &values);
        write_svg(dir.join(format!("auc_{exp}_l{l}.svg")), svg, &mut written)?;
    }

    let mut curves: BTreeMap<(String, usize), Vec<Vec<(usize, f64)>>> = BTreeMap::new();
    for name in list_files(dir, "curve_", ".csv")? {
        let Some((task, _, l)) = parse_curve_name(&name) else { continue };
        let pts = read_curve(&dir.join(&name))?;
        curves
            .entry((task, l))
            .or_default()
            .push(pts.iter().map(|p| (p.labeled_count, p.test_accuracy)).collect());
    }
    for ((task, l), runs) in &curves {
        let len = runs.iter().map(Vec::len).min().unwrap_or(0);
        if len == 0 {
            continue;
        }
        let xs: Vec<f64> = (0..len).map(|i| runs[0][i].0 as f64).collect();
        let (mean, std): (Vec<f64>, Vec<f64>) = (0..len)
            .map(|i| mean_std(&runs.iter().map(|r| r[i].1).collect::<Vec<_>>()))
            .unzip();
        let svg = band_chart(
            &format!("{task}: learning curve over {} groups", runs.len()),
            "labeled samples",
            "test accuracy",
            &xs,
            &mean,
            &std,
        );
        write_svg(dir.join(format!("learning_curve_{task}_l{l}.svg")), svg, &mut written)?;
    }

    let mut pca: BTreeMap<String, Vec<(usize, String)>> = BTreeMap::new();
    for name in list_files(dir, "pca_", ".csv")? {
        if let Some((task, it)) = parse_pca_name(&name) {
            pca.entry(task).or_default().push((it, name));
        }
    }
    for (task, mut files) in pca {
        files.sort();
        let mut row = Vec::new();
        for (k, (it, name)) in files.iter().enumerate() {
            let t = read_pca(&dir.join(name))?;
            if k == 0 {
                row.push(Panel {
                    title: "true labels".into(),
                    points: t.coords.clone(),
                    labels: t.truth.clone(),
                });
            }
            row.push(Panel {
                title: format!("iteration {it}"),
                points: t.coords,
                labels: t.predicted,
            });
        }
        let svg = scatter_grid(&format!("{task}: PCA of the test set"), &[row]);
        write_svg(dir.join(format!("pca_{task}.svg")), svg, &mut written)?;
    }
    Ok(written)
}

/// `curve_<task>_g<group>_l<l>.csv`
fn parse_curve_name(name: &str) -> Option<(String, usize, usize)> {
    let stem = name.strip_prefix("curve_")?.strip_suffix(".csv")?;
    let (rest, l) = stem.rsplit_once("_l")?;
    let (task, g) = rest.rsplit_once("_g")?;
    Some((task.to_string(), g.parse().ok()?, l.parse().ok()?))
}

/// `pca_<task>_it<n>.csv`
fn parse_pca_name(name: &str) -> Option<(String, usize)> {
    let stem = name.strip_prefix("pca_")?.strip_suffix(".csv")?;
    let (task, it) = stem.rsplit_once("_it")?;
    Some((task.to_string(), it.parse().ok()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names() {
        assert_eq!(parse_curve_name("curve_MT1_g3_l1000.csv"), Some(("MT1".into(), 3, 1000)));
        assert_eq!(parse_curve_name("curve_4class_g0_l2000.csv"), Some(("4class".into(), 0, 2000)));
        assert_eq!(parse_pca_name("pca_MT4_it98.csv"), Some(("MT4".into(), 98)));
        assert_eq!(parse_curve_name("curve_x.csv"), None);
    }

    #[test]
    fn stats() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }
}
