//! Named maskable sets, experiment configuration, seed derivation and the
//! experiment runners shared by the CLI and the acceptance suite.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::active::{run_al_observed, AlConfig, CurvePoint};
use crate::datagen::{build_balanced_dataset, parse_kv, Dataset, GenSpec, SetSpec};
use crate::error::{Error, Result};
use crate::learners::cv::{default_pure_grid, grid_search_cv};
use crate::learners::forest::{predict_rf, train_rf, RfParams};
use crate::learners::gbt::{train_gbt, GbtModel, GbtParams, Objective};
use crate::masking::{CircleSpec, DiskSpec, MaskableSet};
use crate::metrics::{accuracy, predicted_labels, roc_auc, Pca, Roc};
use crate::qstate::{BlochVector, PureParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NamedSet {
    T1,
    T2,
    T3,
    T4,
    MT1,
    MT2,
    MT3,
    MT4,
}

impl NamedSet {
    pub const ALL: [NamedSet; 8] = [
        NamedSet::T1,
        NamedSet::T2,
        NamedSet::T3,
        NamedSet::T4,
        NamedSet::MT1,
        NamedSet::MT2,
        NamedSet::MT3,
        NamedSet::MT4,
    ];
    pub const PURE: [NamedSet; 4] = [NamedSet::T1, NamedSet::T2, NamedSet::T3, NamedSet::T4];
    pub const MIXED: [NamedSet; 4] = [NamedSet::MT1, NamedSet::MT2, NamedSet::MT3, NamedSet::MT4];

    pub fn name(self) -> &'static str {
        match self {
            NamedSet::T1 => "T1",
            NamedSet::T2 => "T2",
            NamedSet::T3 => "T3",
            NamedSet::T4 => "T4",
            NamedSet::MT1 => "MT1",
            NamedSet::MT2 => "MT2",
            NamedSet::MT3 => "MT3",
            NamedSet::MT4 => "MT4",
        }
    }

    pub fn is_pure(self) -> bool {
        NamedSet::PURE.contains(&self)
    }
}

impl fmt::Display for NamedSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NamedSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NamedSet::ALL
            .into_iter()
            .find(|n| n.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidInput(format!("unknown set `{s}`")))
    }
}

/// The eight maskable sets used throughout the experiments.
pub fn named_set(name: NamedSet) -> MaskableSet {
    let pure = |x: f64, y: f64| PureParams::new(x, y).expect("valid anchor");
    let ball = |r1: f64, r2: f64, r3: f64| BlochVector::new(r1, r2, r3).expect("valid anchor");
    let circle = |beta, phi, anchor| {
        MaskableSet::Circle(CircleSpec::new(beta, phi, anchor).expect("valid circle"))
    };
    let disk = |alpha, theta, anchor| {
        MaskableSet::Disk(DiskSpec::new(alpha, theta, anchor).expect("valid disk"))
    };
    match name {
        NamedSet::T1 => circle(0.0, 0.0, pure(FRAC_PI_3, FRAC_PI_4)),
        NamedSet::T2 => circle(FRAC_PI_4, FRAC_PI_4, pure(FRAC_PI_3, FRAC_PI_4)),
        NamedSet::T3 => circle(FRAC_PI_2, 0.0, pure(FRAC_PI_3, FRAC_PI_4)),
        NamedSet::T4 => circle(FRAC_PI_3, FRAC_PI_3, pure(2.0 * PI / 3.0, PI / 5.0)),
        NamedSet::MT1 => disk(FRAC_PI_3, FRAC_PI_3, ball(0.25, 0.25, 0.25)),
        NamedSet::MT2 => disk(2.0 * PI / 3.0, 5.0 * PI / 4.0, ball(-1.0 / 3.0, -0.5, 0.2)),
        NamedSet::MT3 => disk(FRAC_PI_4, 3.0 * PI / 4.0, ball(1.0 / 3.0, 0.5, -0.25)),
        NamedSet::MT4 => disk(3.0 * PI / 4.0, 5.0 * PI / 3.0, ball(-0.25, -1.0 / 3.0, -0.2)),
    }
}

fn set_spec(name: NamedSet) -> SetSpec {
    match named_set(name) {
        MaskableSet::Circle(c) => SetSpec::Circle(c),
        MaskableSet::Disk(d) => SetSpec::Disk(d),
    }
}

fn four_disks() -> SetSpec {
    SetSpec::FourDisks(NamedSet::MIXED.map(|n| match named_set(n) {
        MaskableSet::Disk(d) => d,
        MaskableSet::Circle(_) => unreachable!(),
    }))
}

/// What one experiment row is about: a single binary set, or the four
/// mixed disks as classes 0..3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Task {
    Set(NamedSet),
    FourClass,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Set(s) => s.name(),
            Task::FourClass => "4class",
        }
    }

    pub fn set_spec(self) -> SetSpec {
        match self {
            Task::Set(s) => set_spec(s),
            Task::FourClass => four_disks(),
        }
    }
}

/// Stable 64-bit seed from a master seed and a textual path
/// (FNV-1a over the bytes, finished with a splitmix64 round).
pub fn derive_seed(master: u64, task: &str, group: usize, purpose: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h ^= 0xff;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    };
    eat(&master.to_le_bytes());
    eat(task.as_bytes());
    eat(&(group as u64).to_le_bytes());
    eat(purpose.as_bytes());
    let mut z = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExperimentId {
    Fig2,
    Fig3,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    Fig10,
    Custom,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 8] = [
        ExperimentId::Fig2,
        ExperimentId::Fig3,
        ExperimentId::Fig6,
        ExperimentId::Fig7,
        ExperimentId::Fig8,
        ExperimentId::Fig9,
        ExperimentId::Fig10,
        ExperimentId::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Fig2 => "fig2",
            ExperimentId::Fig3 => "fig3",
            ExperimentId::Fig6 => "fig6",
            ExperimentId::Fig7 => "fig7",
            ExperimentId::Fig8 => "fig8",
            ExperimentId::Fig9 => "fig9",
            ExperimentId::Fig10 => "fig10",
            ExperimentId::Custom => "custom",
        }
    }

    pub fn family(self) -> Family {
        match self {
            ExperimentId::Fig2 | ExperimentId::Fig3 => Family::Pure,
            ExperimentId::Fig10 => Family::FourClass,
            _ => Family::Mixed,
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidInput(format!("unknown experiment `{s}`")))
    }
}

/// Which runner an experiment uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Boosting on random balanced training sets of size `l`.
    Pure,
    /// Active learning vs random sampling vs random forest on binary pools.
    Mixed,
    /// The same comparison on four classes.
    FourClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub family: Family,
    pub sets: Vec<NamedSet>,
    pub l_values: Vec<usize>,
    pub groups: usize,
    pub master_seed: u64,
    pub grid_search: bool,
    pub cv_folds: usize,
    pub gbt: GbtParams,
    pub rf: RfParams,
    pub test_per_class: usize,
    pub pool_per_class: usize,
    /// Explicit training/pool seeds keyed by (task name, group).
    pub seed_overrides: BTreeMap<(String, usize), u64>,
}

impl ExperimentConfig {
    pub fn preset(id: ExperimentId) -> Self {
        let family = id.family();
        let base = Self {
            experiment: id,
            family,
            sets: NamedSet::MIXED.to_vec(),
            l_values: vec![1000],
            groups: 6,
            master_seed: 0,
            grid_search: false,
            cv_folds: 5,
            gbt: GbtParams::fixed(),
            rf: RfParams::default(),
            test_per_class: 2000,
            pool_per_class: 800,
            seed_overrides: BTreeMap::new(),
        };
        match family {
            Family::Pure => Self {
                sets: NamedSet::PURE.to_vec(),
                l_values: vec![400, 600, 800, 1000],
                grid_search: true,
                gbt: GbtParams::default(),
                pool_per_class: 0,
                ..base
            },
            Family::Mixed => base,
            Family::FourClass => Self {
                l_values: vec![2000],
                gbt: GbtParams::fixed().with_objective(Objective::Softmax { n_classes: 4 }),
                pool_per_class: 1000,
                ..base
            },
        }
    }

    /// Starts from the preset named by `experiment` (default `custom`) and
    /// applies every other key.
    pub fn from_kv(text: &str) -> Result<Self> {
        let map = parse_kv(text)?;
        let id = match map.get("experiment") {
            Some(v) => v.parse()?,
            None => ExperimentId::Custom,
        };
        let mut cfg = Self::preset(id);
        for (k, v) in &map {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad value `{v}` for `{key}`")))
        }
        fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
            v.split(',').map(|p| num(key, p)).collect()
        }
        match key {
            "experiment" => {}
            "family" => {
                self.family = match value.trim() {
                    "pure" => Family::Pure,
                    "mixed" => Family::Mixed,
                    "four_class" => Family::FourClass,
                    other => return Err(Error::InvalidInput(format!("unknown family `{other}`"))),
                };
                if self.family == Family::FourClass {
                    self.gbt.objective = Objective::Softmax { n_classes: 4 };
                } else {
                    self.gbt.objective = Objective::BinaryLogistic;
                }
            }
            "sets" => {
                self.sets = value
                    .split(',')
                    .map(str::parse)
                    .collect::<Result<Vec<NamedSet>>>()?
            }
            "l" => self.l_values = list(key, value)?,
            "groups" => self.groups = num(key, value)?,
            "seed" => self.master_seed = num(key, value)?,
            "grid_search" => self.grid_search = num(key, value)?,
            "cv_folds" => self.cv_folds = num(key, value)?,
            "test_per_class" => self.test_per_class = num(key, value)?,
            "pool_per_class" => self.pool_per_class = num(key, value)?,
            "eta" => self.gbt.eta = num(key, value)?,
            "max_depth" => self.gbt.max_depth = num(key, value)?,
            "subsample" => self.gbt.subsample = num(key, value)?,
            "colsample_bytree" => self.gbt.colsample_bytree = num(key, value)?,
            "lambda" => self.gbt.lambda = num(key, value)?,
            "gamma" => self.gbt.gamma = num(key, value)?,
            "min_child_weight" => self.gbt.min_child_weight = num(key, value)?,
            "n_rounds" => self.gbt.n_rounds = num(key, value)?,
            "rf.n_trees" => self.rf.n_trees = num(key, value)?,
            "rf.max_depth" => self.rf.max_depth = num(key, value)?,
            "rf.max_samples" => self.rf.max_samples = num(key, value)?,
            "rf.max_features" => self.rf.max_features = num(key, value)?,
            other => {
                let Some(rest) = other.strip_prefix("seed.") else {
                    return Err(Error::InvalidInput(format!("unknown config key `{other}`")));
                };
                let (task, group) = rest.rsplit_once('.').ok_or_else(|| {
                    Error::InvalidInput(format!("expected seed.<set>.<group>, got `{other}`"))
                })?;
                self.seed_overrides
                    .insert((task.to_string(), num(key, group)?), num(key, value)?);
            }
        }
        Ok(())
    }

    pub fn to_kv(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let family = match self.family {
            Family::Pure => "pure",
            Family::Mixed => "mixed",
            Family::FourClass => "four_class",
        };
        let mut lines = vec![
            format!("experiment={}", self.experiment),
            format!("family={family}"),
            format!("sets={}", join(self.sets.iter().map(|s| s.to_string()).collect())),
            format!("l={}", join(self.l_values.iter().map(|l| l.to_string()).collect())),
            format!("groups={}", self.groups),
            format!("seed={}", self.master_seed),
            format!("grid_search={}", self.grid_search),
            format!("cv_folds={}", self.cv_folds),
            format!("test_per_class={}", self.test_per_class),
            format!("pool_per_class={}", self.pool_per_class),
            format!("eta={:?}", self.gbt.eta),
            format!("max_depth={}", self.gbt.max_depth),
            format!("subsample={:?}", self.gbt.subsample),
            format!("colsample_bytree={:?}", self.gbt.colsample_bytree),
            format!("lambda={:?}", self.gbt.lambda),
            format!("gamma={:?}", self.gbt.gamma),
            format!("min_child_weight={:?}", self.gbt.min_child_weight),
            format!("n_rounds={}", self.gbt.n_rounds),
            format!("rf.n_trees={}", self.rf.n_trees),
            format!("rf.max_depth={}", self.rf.max_depth),
            format!("rf.max_samples={:?}", self.rf.max_samples),
            format!("rf.max_features={:?}", self.rf.max_features),
        ];
        for ((task, group), seed) in &self.seed_overrides {
            lines.push(format!("seed.{task}.{group}={seed}"));
        }
        lines.into_iter().map(|l| l + "\n").collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups == 0 || self.l_values.is_empty() {
            return Err(Error::InvalidInput("need at least one group and one l".into()));
        }
        if self.family != Family::FourClass && self.sets.is_empty() {
            return Err(Error::InvalidInput("no sets selected".into()));
        }
        for &s in &self.sets {
            if self.family == Family::Pure && !s.is_pure() {
                return Err(Error::InvalidInput(format!("{s} is not a pure-state set")));
            }
            if self.family == Family::Mixed && s.is_pure() {
                return Err(Error::InvalidInput(format!("{s} is not a mixed-state set")));
            }
        }
        self.gbt.validate()?;
        self.rf.validate()?;
        let n_classes = self.gbt.objective.n_classes();
        for &l in &self.l_values {
            if self.family == Family::Pure && l % 2 != 0 {
                return Err(Error::InvalidInput(format!("l = {l} must be even")));
            }
            if self.family != Family::Pure {
                AlConfig::new(l, 0).iterations()?;
                if l > self.pool_per_class * n_classes {
                    return Err(Error::ConfigInfeasible(format!(
                        "l = {l} exceeds pool size {}",
                        self.pool_per_class * n_classes
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn tasks(&self) -> Vec<Task> {
        match self.family {
            Family::FourClass => vec![Task::FourClass],
            _ => self.sets.iter().map(|&s| Task::Set(s)).collect(),
        }
    }

    fn n_classes(&self) -> usize {
        match self.family {
            Family::FourClass => 4,
            _ => 2,
        }
    }

    /// Seed of the training set (pure) or pool (mixed, four-class) of one
    /// group. Pure training sets also depend on `l`.
    pub fn train_seed(&self, task: Task, group: usize, l: usize) -> u64 {
        if let Some(&s) = self.seed_overrides.get(&(task.name().to_string(), group)) {
            return match self.family {
                Family::Pure => derive_seed(s, task.name(), group, &format!("train-{l}")),
                _ => s,
            };
        }
        match self.family {
            Family::Pure => derive_seed(self.master_seed, task.name(), group, &format!("train-{l}")),
            _ => derive_seed(self.master_seed, task.name(), group, "pool"),
        }
    }

    pub fn test_seed(&self, task: Task) -> u64 {
        derive_seed(self.master_seed, task.name(), usize::MAX, "test")
    }

    pub fn test_spec(&self, task: Task) -> GenSpec {
        GenSpec {
            set: task.set_spec(),
            counts: vec![self.test_per_class; self.n_classes()],
            seed: self.test_seed(task),
        }
    }

    /// Training set (pure: `l/2` per class) or pool of one group.
    pub fn train_spec(&self, task: Task, group: usize, l: usize) -> GenSpec {
        let per_class = match self.family {
            Family::Pure => l / 2,
            _ => self.pool_per_class,
        };
        GenSpec {
            set: task.set_spec(),
            counts: vec![per_class; self.n_classes()],
            seed: self.train_seed(task, group, l),
        }
    }
}

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub set: String,
    pub group: usize,
    pub method: String,
    pub l: usize,
    pub accuracy: f64,
    pub auc: f64,
    pub seed: u64,
}

pub const RESULTS_HEADER: [&str; 8] =
    ["experiment", "set", "group", "method", "l", "accuracy", "auc", "seed"];

pub fn write_results<W: Write>(writer: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RESULTS_HEADER)?;
    for r in rows {
        w.write_record([
            r.experiment.clone(),
            r.set.clone(),
            r.group.to_string(),
            r.method.clone(),
            r.l.to_string(),
            format!("{:.16e}", r.accuracy),
            format!("{:.16e}", r.auc),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results<R: Read>(reader: R) -> Result<Vec<ResultRow>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
    let mut rows = Vec::new();
    let mut records = rd.records();
    let header = records.next().ok_or(Error::Malformed {
        line: 1,
        message: "empty results file".into(),
    })??;
    if header.iter().ne(RESULTS_HEADER) {
        return Err(Error::Malformed {
            line: 1,
            message: format!("expected header {}", RESULTS_HEADER.join(",")),
        });
    }
    for (i, rec) in records.enumerate() {
        let line = i as u64 + 2;
        let rec = rec?;
        let bad = |what: &str| Error::Malformed {
            line,
            message: format!("bad {what}"),
        };
        if rec.len() != RESULTS_HEADER.len() {
            return Err(bad("field count"));
        }
        rows.push(ResultRow {
            experiment: rec[0].to_string(),
            set: rec[1].to_string(),
            group: rec[2].parse().map_err(|_| bad("group"))?,
            method: rec[3].to_string(),
            l: rec[4].parse().map_err(|_| bad("l"))?,
            accuracy: rec[5].parse().map_err(|_| bad("accuracy"))?,
            auc: rec[6].parse().map_err(|_| bad("auc"))?,
            seed: rec[7].parse().map_err(|_| bad("seed"))?,
        });
    }
    Ok(rows)
}

/// Accuracy and AUC of class probabilities. Binary AUC uses `p[1]`; four
/// classes use the mean one-vs-rest AUC.
pub fn evaluate(probs: &[Vec<f64>], labels: &[u8]) -> Result<(f64, f64, Option<Roc>)> {
    let acc = accuracy(&predicted_labels(probs), labels)?;
    let k = probs.first().map_or(2, Vec::len);
    if k == 2 {
        let scores: Vec<f64> = probs.iter().map(|p| p[1]).collect();
        let roc = roc_auc(&scores, labels)?;
        return Ok((acc, roc.auc, Some(roc)));
    }
    let mut total = 0.0;
    for c in 0..k {
        let scores: Vec<f64> = probs.iter().map(|p| p[c]).collect();
        let ovr: Vec<u8> = labels.iter().map(|&y| u8::from(y as usize == c)).collect();
        total += roc_auc(&scores, &ovr)?.auc;
    }
    Ok((acc, total / k as f64, None))
}

#[derive(Debug, Clone)]
pub struct PureOutcome {
    pub row: ResultRow,
    pub roc: Roc,
    pub params: GbtParams,
}

/// Optionally grid-searches on `train`, refits on all of it and scores
/// `test`. `train_seed` is the seed the training set was generated from.
pub fn fit_pure(
    cfg: &ExperimentConfig,
    set: NamedSet,
    group: usize,
    l: usize,
    train: &Dataset,
    train_seed: u64,
    test: &Dataset,
) -> Result<PureOutcome> {
    let name = set.name();
    let params = if cfg.grid_search {
        let grid = default_pure_grid(&cfg.gbt);
        let cv_seed = derive_seed(train_seed, name, group, "cv");
        let r = grid_search_cv(train, &grid, cfg.cv_folds, cv_seed)?;
        log::info!(
            "{set} group {group} l={l}: grid point {} (cv {:.4})",
            r.best_index,
            r.scores[r.best_index]
        );
        r.best
    } else {
        cfg.gbt
    };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(train_seed, name, group, "fit"));
    let model = train_gbt(train, &params, &mut rng)?;
    let probs = model.predict_proba_batch(&test.features());
    let (acc, auc, roc) = evaluate(&probs, &test.labels())?;
    Ok(PureOutcome {
        row: ResultRow {
            experiment: cfg.experiment.to_string(),
            set: name.to_string(),
            group,
            method: METHOD_PURE.into(),
            l,
            accuracy: acc,
            auc,
            seed: train_seed,
        },
        roc: roc.ok_or_else(|| Error::InvalidInput("pure sets are binary".into()))?,
        params,
    })
}

/// Generates the group's training set and runs [`fit_pure`].
pub fn run_pure_group(
    cfg: &ExperimentConfig,
    set: NamedSet,
    group: usize,
    l: usize,
    test: &Dataset,
) -> Result<PureOutcome> {
    let spec = cfg.train_spec(Task::Set(set), group, l);
    let train = build_balanced_dataset(&spec)?;
    fit_pure(cfg, set, group, l, &train, spec.seed, test)
}

/// Test-set predictions of the active learner at selected iterations.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub iteration: usize,
    pub predicted: Vec<u8>,
}

pub const METHOD_PURE: &str = "xgboost";
pub const METHOD_AL: &str = "al_xgboost";
pub const METHOD_RANDOM: &str = "xgboost_random";
pub const METHOD_RF: &str = "random_forest";

/// One pool of one group, with the seed it was generated from.
#[derive(Debug, Clone, Copy)]
pub struct PoolRef<'a> {
    pub task: Task,
    pub group: usize,
    pub pool: &'a Dataset,
    pub pool_seed: u64,
}

impl PoolRef<'_> {
    fn seed(&self, purpose: &str) -> u64 {
        derive_seed(self.pool_seed, self.task.name(), self.group, purpose)
    }

    fn row(&self, cfg: &ExperimentConfig, method: &str, l: usize, acc: f64, auc: f64) -> ResultRow {
        ResultRow {
            experiment: cfg.experiment.to_string(),
            set: self.task.name().to_string(),
            group: self.group,
            method: method.to_string(),
            l,
            accuracy: acc,
            auc,
            seed: self.pool_seed,
        }
    }

    /// The uniformly drawn subset of size `l` shared by both random
    /// baselines, in ascending pool order.
    pub fn random_subset(&self, l: usize) -> Result<Vec<usize>> {
        if l > self.pool.len() {
            return Err(Error::PoolExhausted {
                available: self.pool.len(),
                required: l,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed("subset"));
        let mut idx = sample_indices(&mut rng, self.pool.len(), l).into_vec();
        idx.sort_unstable();
        Ok(idx)
    }
}

#[derive(Debug, Clone)]
pub struct AlOutcome {
    pub row: ResultRow,
    pub curve: Vec<CurvePoint>,
    pub snapshots: Vec<Snapshot>,
    pub model: GbtModel,
}

/// Active learning up to `l` labels; snapshots test predictions at the
/// listed iterations.
pub fn method_al(
    cfg: &ExperimentConfig,
    pool: PoolRef<'_>,
    l: usize,
    test: &Dataset,
    snapshot_at: &[usize],
) -> Result<AlOutcome> {
    let test_features = test.features();
    let al_config = AlConfig::new(l, pool.seed("al"));
    let mut snapshots = Vec::new();
    let run = run_al_observed(pool.pool, test, &al_config, &cfg.gbt, &mut |it, model| {
        if snapshot_at.contains(&it) {
            snapshots.push(Snapshot {
                iteration: it,
                predicted: predicted_labels(&model.predict_proba_batch(&test_features)),
            });
        }
    })?;
    let (acc, auc, _) = evaluate(&run.model.predict_proba_batch(&test_features), &test.labels())?;
    Ok(AlOutcome {
        row: pool.row(cfg, METHOD_AL, l, acc, auc),
        curve: run.learning_curve,
        snapshots,
        model: run.model,
    })
}

/// Boosting on a random subset of size `l`.
pub fn method_random(
    cfg: &ExperimentConfig,
    pool: PoolRef<'_>,
    l: usize,
    test: &Dataset,
) -> Result<ResultRow> {
    let sample = pool.pool.subset(&pool.random_subset(l)?);
    let mut rng = ChaCha8Rng::seed_from_u64(pool.seed("random"));
    let model = train_gbt(&sample, &cfg.gbt, &mut rng)?;
    let (acc, auc, _) = evaluate(&model.predict_proba_batch(&test.features()), &test.labels())?;
    Ok(pool.row(cfg, METHOD_RANDOM, l, acc, auc))
}

/// Random forest on the same random subset as [`method_random`].
pub fn method_rf(
    cfg: &ExperimentConfig,
    pool: PoolRef<'_>,
    l: usize,
    test: &Dataset,
) -> Result<ResultRow> {
    let sample = pool.pool.subset(&pool.random_subset(l)?);
    let mut rng = ChaCha8Rng::seed_from_u64(pool.seed("rf"));
    let forest = train_rf(&sample, &cfg.rf, &mut rng)?;
    let probs: Vec<Vec<f64>> = test.features().iter().map(|f| predict_rf(&forest, f)).collect();
    let (acc, auc, _) = evaluate(&probs, &test.labels())?;
    Ok(pool.row(cfg, METHOD_RF, l, acc, auc))
}

#[derive(Debug, Clone)]
pub struct ComparisonOutcome {
    /// Rows for active learning, random sampling and random forest.
    pub rows: Vec<ResultRow>,
    pub curve: Vec<CurvePoint>,
    pub snapshots: Vec<Snapshot>,
}

/// Generates the group's pool and runs all three methods on it.
pub fn run_comparison_group(
    cfg: &ExperimentConfig,
    task: Task,
    group: usize,
    l: usize,
    test: &Dataset,
    snapshot_at: &[usize],
) -> Result<ComparisonOutcome> {
    let spec = cfg.train_spec(task, group, l);
    let data = build_balanced_dataset(&spec)?;
    let pool = PoolRef {
        task,
        group,
        pool: &data,
        pool_seed: spec.seed,
    };
    let al = method_al(cfg, pool, l, test, snapshot_at)?;
    let random = method_random(cfg, pool, l, test)?;
    let rf = method_rf(cfg, pool, l, test)?;
    log::info!(
        "{} group {group}: al {:.4} random {:.4} rf {:.4}",
        task.name(),
        al.row.accuracy,
        random.accuracy,
        rf.accuracy
    );
    Ok(ComparisonOutcome {
        rows: vec![al.row, random, rf],
        curve: al.curve,
        snapshots: al.snapshots,
    })
}

/// PCA of a test set with true labels and active-learning snapshots.
#[derive(Debug, Clone)]
pub struct PcaPanel {
    pub task: String,
    pub coords: Vec<[f64; 2]>,
    pub truth: Vec<u8>,
    pub snapshots: Vec<Snapshot>,
}

#[derive(Debug, Clone)]
pub struct Curve {
    pub task: String,
    pub group: usize,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentReport {
    pub rows: Vec<ResultRow>,
    /// ROC curves of pure-state runs, aligned with the rows they belong to.
    pub rocs: Vec<(ResultRow, Roc)>,
    pub curves: Vec<Curve>,
    pub pca: Vec<PcaPanel>,
}

/// Iterations snapshotted for the PCA panels: first, middle and last.
pub fn snapshot_iterations(l: usize) -> Result<Vec<usize>> {
    let n = AlConfig::new(l, 0).iterations()?;
    let mut v = vec![0, n / 2, n];
    v.dedup();
    Ok(v)
}

/// Runs every (task, l, group) of the configuration. Groups run in
/// parallel; each owns generators derived from its own seeds, so the
/// result does not depend on scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut report = ExperimentReport::default();
    for task in cfg.tasks() {
        let test = build_balanced_dataset(&cfg.test_spec(task))?;
        for &l in &cfg.l_values {
            match (cfg.family, task) {
                (Family::Pure, Task::Set(set)) => {
                    let outs = (0..cfg.groups)
                        .into_par_iter()
                        .map(|g| run_pure_group(cfg, set, g, l, &test))
                        .collect::<Result<Vec<_>>>()?;
                    for o in outs {
                        report.rows.push(o.row.clone());
                        report.rocs.push((o.row, o.roc));
                    }
                }
                _ => {
                    let snaps = snapshot_iterations(l)?;
                    let outs = (0..cfg.groups)
                        .into_par_iter()
                        .map(|g| {
                            let at: &[usize] = if g == 0 { &snaps } else { &[] };
                            run_comparison_group(cfg, task, g, l, &test, at)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    for (g, o) in outs.into_iter().enumerate() {
                        report.rows.extend(o.rows);
                        report.curves.push(Curve {
                            task: task.name().to_string(),
                            group: g,
                            points: o.curve,
                        });
                        if g == 0 {
                            let pca = Pca::fit(&test.features())?;
                            report.pca.push(PcaPanel {
                                task: task.name().to_string(),
                                coords: test.features().iter().map(|f| pca.project(f)).collect(),
                                truth: test.labels(),
                                snapshots: o.snapshots,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_stable_and_distinct() {
        let a = derive_seed(7, "MT1", 0, "pool");
        assert_eq!(a, derive_seed(7, "MT1", 0, "pool"));
        assert_ne!(a, derive_seed(7, "MT1", 1, "pool"));
        assert_ne!(a, derive_seed(7, "MT2", 0, "pool"));
        assert_ne!(a, derive_seed(8, "MT1", 0, "pool"));
        assert_ne!(a, derive_seed(7, "MT1", 0, "test"));
        // Field boundaries matter.
        assert_ne!(derive_seed(0, "ab", 0, "c"), derive_seed(0, "a", 0, "bc"));
    }

    #[test]
    fn config_round_trip() {
        let mut cfg = ExperimentConfig::preset(ExperimentId::Fig6);
        cfg.master_seed = 42;
        cfg.seed_overrides.insert(("MT2".into(), 3), 99);
        let back = ExperimentConfig::from_kv(&cfg.to_kv()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.train_seed(Task::Set(NamedSet::MT2), 3, 1000), 99);
    }

    #[test]
    fn presets() {
        let f2 = ExperimentConfig::preset(ExperimentId::Fig2);
        assert_eq!(f2.tasks().len(), 4);
        assert_eq!(f2.train_spec(Task::Set(NamedSet::T1), 0, 400).counts, vec![200, 200]);
        assert_eq!(f2.test_spec(Task::Set(NamedSet::T1)).counts, vec![2000, 2000]);
        let f6 = ExperimentConfig::preset(ExperimentId::Fig6);
        assert_eq!(f6.train_spec(Task::Set(NamedSet::MT1), 0, 1000).counts, vec![800, 800]);
        let f10 = ExperimentConfig::preset(ExperimentId::Fig10);
        assert_eq!(f10.tasks(), vec![Task::FourClass]);
        assert_eq!(f10.train_spec(Task::FourClass, 0, 2000).counts, vec![1000; 4]);
        assert_eq!(f10.test_spec(Task::FourClass).counts, vec![2000; 4]);
        for id in ExperimentId::ALL {
            ExperimentConfig::preset(id).validate().unwrap();
        }
    }

    #[test]
    fn config_errors() {
        assert!(ExperimentConfig::from_kv("bogus=1").is_err());
        assert!(ExperimentConfig::from_kv("experiment=fig99").is_err());
        let cfg = ExperimentConfig::from_kv("experiment=fig6\nl=1002").unwrap();
        assert!(matches!(cfg.validate(), Err(Error::ConfigInfeasible(_))));
        let cfg = ExperimentConfig::from_kv("experiment=fig2\nsets=MT1").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn results_round_trip() {
        let rows = vec![ResultRow {
            experiment: "fig6".into(),
            set: "MT1".into(),
            group: 2,
            method: METHOD_AL.into(),
            l: 1000,
            accuracy: 0.951,
            auc: 0.99,
            seed: 123,
        }];
        let mut buf = Vec::new();
        write_results(&mut buf, &rows).unwrap();
        assert_eq!(read_results(&buf[..]).unwrap(), rows);
        assert!(matches!(read_results(&b""[..]), Err(Error::Malformed { .. })));
        assert!(matches!(
            read_results(&b"experiment,set\n"[..]),
            Err(Error::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn snapshot_points() {
        assert_eq!(snapshot_iterations(1000).unwrap(), vec![0, 98, 196]);
        assert_eq!(snapshot_iterations(20).unwrap(), vec![0]);
    }

    #[test]
    fn small_comparison_runs() {
        let mut cfg = ExperimentConfig::preset(ExperimentId::Fig6);
        cfg.pool_per_class = 40;
        cfg.test_per_class = 50;
        cfg.gbt.n_rounds = 10;
        cfg.rf.n_trees = 5;
        let task = Task::Set(NamedSet::MT1);
        let test = build_balanced_dataset(&cfg.test_spec(task)).unwrap();
        let out = run_comparison_group(&cfg, task, 0, 40, &test, &[0, 4]).unwrap();
        assert_eq!(out.rows.len(), 3);
        assert_eq!(out.curve.len(), 5);
        assert_eq!(out.snapshots.len(), 2);
        assert!(out.rows.iter().all(|r| (0.0..=1.0).contains(&r.accuracy)));
    }
}
