//! Output-directory layout: dataset files, results, curves, ROC and PCA
//! tables.

use std::fs;
use std::path::{Path, PathBuf};

use qim_core::active::CurvePoint;
use qim_core::datagen::{read_csv, write_csv};
use qim_core::experiment::{read_results, write_results, Snapshot};
use qim_core::{Dataset, GenSpec, ResultRow, Roc, Task};

use crate::error::{CliError, CliResult};

pub const RESULTS_FILE: &str = "results.csv";

pub fn test_stem(task: Task) -> String {
    format!("test_{}", task.name())
}

pub fn train_stem(task: Task, group: usize, l: usize) -> String {
    format!("train_{}_g{group}_l{l}", task.name())
}

pub fn pool_stem(task: Task, group: usize) -> String {
    format!("pool_{}_g{group}", task.name())
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Writes `<stem>.csv` and the generating spec as `<stem>.meta`.
pub fn write_dataset(dir: &Path, stem: &str, spec: &GenSpec, data: &Dataset) -> CliResult<()> {
    write_csv(dir.join(format!("{stem}.csv")), data)?;
    let meta = dir.join(format!("{stem}.meta"));
    fs::write(&meta, spec.to_kv()).map_err(|e| CliError::io(&meta, e))
}

/// Loads a dataset written by [`write_dataset`].
pub fn read_dataset(dir: &Path, stem: &str) -> CliResult<(Dataset, GenSpec)> {
    let meta = dir.join(format!("{stem}.meta"));
    let csv = dir.join(format!("{stem}.csv"));
    if !meta.is_file() || !csv.is_file() {
        return Err(CliError::Io(format!(
            "missing dataset {} (run `qim gen` first)",
            csv.display()
        )));
    }
    let text = fs::read_to_string(&meta).map_err(|e| CliError::io(&meta, e))?;
    let spec = GenSpec::from_kv(&text).map_err(|e| CliError::io(&meta, e))?;
    let data = read_csv(&csv, spec.set.label_mode())?;
    Ok((data, spec))
}

pub fn load_results(dir: &Path) -> CliResult<Vec<ResultRow>> {
    let path = dir.join(RESULTS_FILE);
    let file = fs::File::open(&path).map_err(|e| CliError::io(&path, e))?;
    read_results(std::io::BufReader::new(file)).map_err(|e| CliError::io(&path, e))
}

/// Merges `rows` into `results.csv`. Existing rows for which `replace`
/// returns true are dropped first.
pub fn merge_results(
    dir: &Path,
    rows: &[ResultRow],
    replace: impl Fn(&ResultRow) -> bool,
) -> CliResult<PathBuf> {
    let path = dir.join(RESULTS_FILE);
    let mut all = if path.exists() { load_results(dir)? } else { Vec::new() };
    all.retain(|r| !replace(r));
    all.extend_from_slice(rows);
    let mut buf = Vec::new();
    write_results(&mut buf, &all)?;
    fs::write(&path, buf).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// Same experiment, set, group, method and l.
pub fn same_cell(a: &ResultRow, b: &ResultRow) -> bool {
    a.experiment == b.experiment && a.set == b.set && a.group == b.group && a.method == b.method && a.l == b.l
}

fn write_table(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    w.write_record(header).map_err(|e| CliError::io(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn curve_path(dir: &Path, task: &str, group: usize, l: usize) -> PathBuf {
    dir.join(format!("curve_{task}_g{group}_l{l}.csv"))
}

pub fn write_curve(path: &Path, points: &[CurvePoint]) -> CliResult<()> {
    write_table(
        path,
        &["iteration", "labeled_count", "test_accuracy"],
        points.iter().enumerate().map(|(i, p)| {
            vec![i.to_string(), p.labeled_count.to_string(), format!("{:.16e}", p.test_accuracy)]
        }),
    )
}

pub fn read_curve(path: &Path) -> CliResult<Vec<CurvePoint>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::io(path, e))?;
        let bad = || CliError::Io(format!("{}: malformed curve row", path.display()));
        if rec.len() != 3 {
            return Err(bad());
        }
        out.push(CurvePoint {
            labeled_count: rec[1].parse().map_err(|_| bad())?,
            test_accuracy: rec[2].parse().map_err(|_| bad())?,
        });
    }
    Ok(out)
}

pub fn roc_path(dir: &Path, task: &str, group: usize, l: usize) -> PathBuf {
    dir.join(format!("roc_{task}_g{group}_l{l}.csv"))
}

pub fn write_roc(path: &Path, roc: &Roc) -> CliResult<()> {
    write_table(
        path,
        &["threshold", "fpr", "tpr"],
        roc.curve
            .iter()
            .map(|p| vec![format!("{:e}", p.threshold), format!("{:e}", p.fpr), format!("{:e}", p.tpr)]),
    )
}

pub fn pca_path(dir: &Path, task: &str, iteration: usize) -> PathBuf {
    dir.join(format!("pca_{task}_it{iteration}.csv"))
}

/// One file per snapshot: `pc1,pc2,label_true,label_pred`.
pub fn write_pca(dir: &Path, task: &str, coords: &[[f64; 2]], truth: &[u8], snapshots: &[Snapshot]) -> CliResult<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for s in snapshots {
        let path = pca_path(dir, task, s.iteration);
        write_table(
            &path,
            &["pc1", "pc2", "label_true", "label_pred"],
            coords.iter().zip(truth).zip(&s.predicted).map(|((c, t), p)| {
                vec![format!("{:.16e}", c[0]), format!("{:.16e}", c[1]), t.to_string(), p.to_string()]
            }),
        )?;
        paths.push(path);
    }
    Ok(paths)
}

pub struct PcaTable {
    pub coords: Vec<[f64; 2]>,
    pub truth: Vec<u8>,
    pub predicted: Vec<u8>,
}

pub fn read_pca(path: &Path) -> CliResult<PcaTable> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let mut t = PcaTable {
        coords: Vec::new(),
        truth: Vec::new(),
        predicted: Vec::new(),
    };
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::io(path, e))?;
        let bad = || CliError::Io(format!("{}: malformed PCA row", path.display()));
        if rec.len() != 4 {
            return Err(bad());
        }
        t.coords.push([rec[0].parse().map_err(|_| bad())?, rec[1].parse().map_err(|_| bad())?]);
        t.truth.push(rec[2].parse().map_err(|_| bad())?);
        t.predicted.push(rec[3].parse().map_err(|_| bad())?);
    }
    Ok(t)
}

/// File names in `dir` with the given prefix and suffix, sorted.
pub fn list_files(dir: &Path, prefix: &str, suffix: &str) -> CliResult<Vec<String>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut names: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| n.starts_with(prefix) && n.ends_with(suffix))
        .collect();
    names.sort();
    Ok(names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use qim_core::NamedSet;

    #[test]
    fn stems_identify_datasets() {
        let t = Task::Set(NamedSet::MT2);
        assert_eq!(train_stem(t, 3, 400), "train_MT2_g3_l400");
        assert_eq!(pool_stem(t, 0), "pool_MT2_g0");
        assert_eq!(test_stem(Task::FourClass), "test_4class");
    }

    #[test]
    fn curve_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let pts = vec![
            CurvePoint { labeled_count: 20, test_accuracy: 0.6 },
            CurvePoint { labeled_count: 25, test_accuracy: 0.7 },
        ];
        let p = curve_path(dir.path(), "MT1", 0, 25);
        write_curve(&p, &pts).unwrap();
        assert_eq!(read_curve(&p).unwrap(), pts);
    }
}
