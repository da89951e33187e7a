//! Gradient-boosted regression trees with a regularized second-order
//! objective (exact greedy, depth-wise growth).

use std::fmt::Write as _;

use rand::seq::index::sample as sample_indices;
use rand::Rng;

use super::split::{
    leaf_weight, logistic_grad_hess, scan_sorted, sigmoid, sort_rows_by_feature, GradPair,
    SplitCandidate, SplitParams, HESSIAN_FLOOR,
};
use crate::datagen::{Dataset, LabelMode};
use crate::error::{Error, Result};
use crate::qstate::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    BinaryLogistic,
    Softmax { n_classes: usize },
}

impl Objective {
    pub fn n_classes(self) -> usize {
        match self {
            Objective::BinaryLogistic => 2,
            Objective::Softmax { n_classes } => n_classes,
        }
    }

    /// Trees grown per boosting round.
    pub fn trees_per_round(self) -> usize {
        match self {
            Objective::BinaryLogistic => 1,
            Objective::Softmax { n_classes } => n_classes,
        }
    }

    /// The objective matching a dataset's labels.
    pub fn for_mode(mode: LabelMode) -> Self {
        match mode {
            LabelMode::Binary => Objective::BinaryLogistic,
            LabelMode::FourClass => Objective::Softmax { n_classes: 4 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbtParams {
    pub eta: f64,
    pub max_depth: usize,
    pub subsample: f64,
    pub colsample_bytree: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
    pub n_rounds: usize,
    pub objective: Objective,
    pub base_score: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            eta: 0.3,
            max_depth: 6,
            subsample: 1.0,
            colsample_bytree: 1.0,
            lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1.0,
            n_rounds: 100,
            objective: Objective::BinaryLogistic,
            base_score: 0.5,
        }
    }
}

impl GbtParams {
    /// Fixed settings for the mixed-state and four-class comparisons:
    /// `eta = 0.09`, `max_depth = 5`, `subsample = 0.9`,
    /// `colsample_bytree = 1.0`, everything else default.
    pub fn fixed() -> Self {
        Self {
            eta: 0.09,
            max_depth: 5,
            subsample: 0.9,
            colsample_bytree: 1.0,
            ..Self::default()
        }
    }

    pub fn with_objective(self, objective: Objective) -> Self {
        Self { objective, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidInput(format!("invalid {what}")));
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return bad("eta");
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad("subsample");
        }
        if !(self.colsample_bytree > 0.0 && self.colsample_bytree <= 1.0) {
            return bad("colsample_bytree");
        }
        if !(self.lambda >= 0.0 && self.gamma >= 0.0 && self.min_child_weight >= 0.0) {
            return bad("regularization");
        }
        if self.n_rounds == 0 {
            return bad("n_rounds");
        }
        if self.objective.n_classes() < 2 {
            return bad("objective");
        }
        if !(self.base_score > 0.0 && self.base_score < 1.0) {
            return bad("base_score");
        }
        Ok(())
    }

    fn split_params(&self) -> SplitParams {
        SplitParams {
            lambda: self.lambda,
            gamma: self.gamma,
            min_child_weight: self.min_child_weight,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        weight: f64,
        grad_sum: f64,
        hess_sum: f64,
    },
}

/// Regression tree stored in preorder; the root is node 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn leaf_index(&self, f: &FeatureVector) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if f[feature] < threshold { left } else { right } as usize,
                Node::Leaf { .. } => return i,
            }
        }
    }

    pub fn predict(&self, f: &FeatureVector) -> f64 {
        match self.nodes[self.leaf_index(f)] {
            Node::Leaf { weight, .. } => weight,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Split { left, right, .. } => {
                    1 + walk(nodes, left as usize).max(walk(nodes, right as usize))
                }
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Everything a monitor sees right after one tree has been grown.
pub struct TreeEvent<'a> {
    pub round: usize,
    pub class: usize,
    pub tree: &'a Tree,
    pub features: &'a [FeatureVector],
    /// Gradients for every training row at the start of the round.
    pub grads: &'a [GradPair],
    /// Rows sampled for this tree.
    pub rows: &'a [usize],
    pub lambda: f64,
    pub gamma: f64,
}

/// Hooks into the boosting loop.
pub trait TrainMonitor {
    fn on_tree(&mut self, _event: &TreeEvent<'_>) {}
    /// Training logloss over all rows after `round` is applied.
    fn on_round(&mut self, _round: usize, _train_logloss: f64) {}
}

impl TrainMonitor for () {}

#[derive(Debug, Clone, PartialEq)]
pub struct GbtModel {
    params: GbtParams,
    base_margin: f64,
    /// Round-major: tree for class `k` of round `r` at `r * trees_per_round + k`.
    trees: Vec<Tree>,
}

impl GbtModel {
    pub fn params(&self) -> &GbtParams {
        &self.params
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn n_classes(&self) -> usize {
        self.params.objective.n_classes()
    }

    /// Raw margins, one per tree group (1 for binary, k for softmax).
    pub fn predict_margin(&self, f: &FeatureVector) -> Vec<f64> {
        let k = self.params.objective.trees_per_round();
        let mut m = vec![self.base_margin; k];
        for (i, t) in self.trees.iter().enumerate() {
            m[i % k] += self.params.eta * t.predict(f);
        }
        m
    }

    /// Class probabilities; binary models return `[1 - p, p]`.
    pub fn predict_proba(&self, f: &FeatureVector) -> Vec<f64> {
        margins_to_proba(self.params.objective, &self.predict_margin(f))
    }

    pub fn predict_proba_batch(&self, fs: &[FeatureVector]) -> Vec<Vec<f64>> {
        fs.iter().map(|f| self.predict_proba(f)).collect()
    }

    /// Serializes to the versioned text format (17 significant digits).
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut s = String::from("qim-gbt 1\n");
        let objective = match p.objective {
            Objective::BinaryLogistic => "binary_logistic".to_string(),
            Objective::Softmax { n_classes } => format!("softmax:{n_classes}"),
        };
        let _ = writeln!(s, "objective {objective}");
        let _ = writeln!(s, "eta {:.16e}", p.eta);
        let _ = writeln!(s, "max_depth {}", p.max_depth);
        let _ = writeln!(s, "subsample {:.16e}", p.subsample);
        let _ = writeln!(s, "colsample_bytree {:.16e}", p.colsample_bytree);
        let _ = writeln!(s, "lambda {:.16e}", p.lambda);
        let _ = writeln!(s, "gamma {:.16e}", p.gamma);
        let _ = writeln!(s, "min_child_weight {:.16e}", p.min_child_weight);
        let _ = writeln!(s, "n_rounds {}", p.n_rounds);
        let _ = writeln!(s, "base_score {:.16e}", p.base_score);
        let _ = writeln!(s, "base_margin {:.16e}", self.base_margin);
        let _ = writeln!(s, "trees {}", self.trees.len());
        for t in &self.trees {
            let _ = writeln!(s, "tree {}", t.nodes.len());
            for n in &t.nodes {
                match *n {
                    Node::Split {
                        feature, threshold, ..
                    } => {
                        let _ = writeln!(s, "S {feature} {threshold:.16e}");
                    }
                    Node::Leaf {
                        weight,
                        grad_sum,
                        hess_sum,
                    } => {
                        let _ = writeln!(s, "L {weight:.16e} {grad_sum:.16e} {hess_sum:.16e}");
                    }
                }
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i as u64 + 1, l.trim()));
        let mut next = |key: &str| -> Result<(u64, String)> {
            let (no, line) = lines.next().ok_or_else(|| Error::Malformed {
                line: 0,
                message: format!("unexpected end of model, expected `{key}`"),
            })?;
            let rest = line.strip_prefix(key).ok_or_else(|| Error::Malformed {
                line: no,
                message: format!("expected `{key}`"),
            })?;
            Ok((no, rest.trim().to_string()))
        };
        fn num<T: std::str::FromStr>(no: u64, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Malformed {
                line: no,
                message: format!("bad number `{v}`"),
            })
        }
        let (no, version) = next("qim-gbt")?;
        if version != "1" {
            return Err(Error::Malformed {
                line: no,
                message: format!("unsupported model version `{version}`"),
            });
        }
        let (no, obj) = next("objective")?;
        let objective = match obj.as_str() {
            "binary_logistic" => Objective::BinaryLogistic,
            other => match other.strip_prefix("softmax:") {
                Some(k) => Objective::Softmax {
                    n_classes: num(no, k)?,
                },
                None => {
                    return Err(Error::Malformed {
                        line: no,
                        message: format!("unknown objective `{other}`"),
                    })
                }
            },
        };
        let mut f = |key: &str| -> Result<f64> {
            let (no, v) = next(key)?;
            num(no, &v)
        };
        let eta = f("eta")?;
        let max_depth = f("max_depth")? as usize;
        let subsample = f("subsample")?;
        let colsample_bytree = f("colsample_bytree")?;
        let lambda = f("lambda")?;
        let gamma = f("gamma")?;
        let min_child_weight = f("min_child_weight")?;
        let n_rounds = f("n_rounds")? as usize;
        let base_score = f("base_score")?;
        let base_margin = f("base_margin")?;
        let n_trees = f("trees")? as usize;
        let params = GbtParams {
            eta,
            max_depth,
            subsample,
            colsample_bytree,
            lambda,
            gamma,
            min_child_weight,
            n_rounds,
            objective,
            base_score,
        };

        let mut trees = Vec::with_capacity(n_trees);
        for _ in 0..n_trees {
            let (no, count) = next("tree")?;
            let count: usize = num(no, &count)?;
            let mut flat = Vec::with_capacity(count);
            for _ in 0..count {
                let (no, line) = next("")?;
                let parts: Vec<&str> = line.split_whitespace().collect();
                let node = match parts.as_slice() {
                    ["S", feat, thr] => (true, num::<usize>(no, feat)?, [num(no, thr)?, 0.0, 0.0]),
                    ["L", w, g, h] => (false, 0, [num(no, w)?, num(no, g)?, num(no, h)?]),
                    _ => {
                        return Err(Error::Malformed {
                            line: no,
                            message: format!("bad node `{line}`"),
                        })
                    }
                };
                flat.push((no, node));
            }
            trees.push(rebuild_preorder(&flat)?);
        }
        Ok(Self {
            params,
            base_margin,
            trees,
        })
    }
}

type FlatNode = (u64, (bool, usize, [f64; 3]));

fn rebuild_preorder(flat: &[FlatNode]) -> Result<Tree> {
    fn build(flat: &[FlatNode], pos: &mut usize, nodes: &mut Vec<Node>) -> Result<u32> {
        let (no, (is_split, feature, vals)) = *flat.get(*pos).ok_or(Error::Malformed {
            line: 0,
            message: "truncated tree".into(),
        })?;
        *pos += 1;
        let idx = nodes.len();
        if is_split {
            if feature >= 3 {
                return Err(Error::Malformed {
                    line: no,
                    message: format!("feature index {feature} out of range"),
                });
            }
            nodes.push(Node::Leaf {
                weight: 0.0,
                grad_sum: 0.0,
                hess_sum: 0.0,
            });
            let left = build(flat, pos, nodes)?;
            let right = build(flat, pos, nodes)?;
            nodes[idx] = Node::Split {
                feature,
                threshold: vals[0],
                left,
                right,
            };
        } else {
            nodes.push(Node::Leaf {
                weight: vals[0],
                grad_sum: vals[1],
                hess_sum: vals[2],
            });
        }
        Ok(idx as u32)
    }
    let mut nodes = Vec::with_capacity(flat.len());
    let mut pos = 0;
    build(flat, &mut pos, &mut nodes)?;
    if pos != flat.len() {
        return Err(Error::Malformed {
            line: flat[pos].0,
            message: "trailing nodes after a complete tree".into(),
        });
    }
    Ok(Tree { nodes })
}

fn margins_to_proba(objective: Objective, margins: &[f64]) -> Vec<f64> {
    match objective {
        Objective::BinaryLogistic => {
            let p = sigmoid(margins[0]);
            vec![1.0 - p, p]
        }
        Objective::Softmax { .. } => softmax(margins),
    }
}

pub fn softmax(margins: &[f64]) -> Vec<f64> {
    let max = margins.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = margins.iter().map(|m| (m - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

struct TreeBuilder<'a> {
    features: &'a [FeatureVector],
    grads: &'a [GradPair],
    params: &'a GbtParams,
    split: SplitParams,
    active: &'a [usize],
    nodes: Vec<Node>,
    go_left: Vec<bool>,
}

impl TreeBuilder<'_> {
    /// `lists[i]` holds the node's rows sorted by feature `active[i]`.
    fn grow(&mut self, lists: Vec<Vec<usize>>, depth: usize) -> Result<u32> {
        let rows = &lists[0];
        let total = rows.iter().fold(GradPair::default(), |acc, &r| GradPair {
            g: acc.g + self.grads[r].g,
            h: acc.h + self.grads[r].h,
        });
        let idx = self.nodes.len();
        self.nodes.push(Node::Leaf {
            weight: 0.0,
            grad_sum: total.g,
            hess_sum: total.h,
        });

        let mut best: Option<SplitCandidate> = None;
        if depth < self.params.max_depth && rows.len() >= 2 {
            for (i, &f) in self.active.iter().enumerate() {
                scan_sorted(f, &lists[i], self.features, self.grads, total, &self.split, &mut best);
            }
        }
        match best.filter(|b| b.gain > 0.0) {
            None => {
                self.nodes[idx] = Node::Leaf {
                    weight: leaf_weight(total.g, total.h, self.params.lambda)?,
                    grad_sum: total.g,
                    hess_sum: total.h,
                };
            }
            Some(split) => {
                for &r in rows {
                    self.go_left[r] = self.features[r][split.feature] < split.threshold;
                }
                let (left, right): (Vec<_>, Vec<_>) = lists
                    .into_iter()
                    .map(|l| l.into_iter().partition(|&r| self.go_left[r]))
                    .unzip();
                let l = self.grow(left, depth + 1)?;
                let r = self.grow(right, depth + 1)?;
                self.nodes[idx] = Node::Split {
                    feature: split.feature,
                    threshold: split.threshold,
                    left: l,
                    right: r,
                };
            }
        }
        Ok(idx as u32)
    }
}

/// Grows one tree on `rows` using the active features.
pub fn grow_tree(
    features: &[FeatureVector],
    grads: &[GradPair],
    rows: &[usize],
    active: &[usize],
    params: &GbtParams,
) -> Result<Tree> {
    let mut active = active.to_vec();
    active.sort_unstable();
    let lists = active
        .iter()
        .map(|&f| {
            let mut l = rows.to_vec();
            sort_rows_by_feature(&mut l, features, f);
            l
        })
        .collect();
    grow_from_sorted(features, grads, lists, &active, params)
}

fn grow_from_sorted(
    features: &[FeatureVector],
    grads: &[GradPair],
    lists: Vec<Vec<usize>>,
    active: &[usize],
    params: &GbtParams,
) -> Result<Tree> {
    let mut b = TreeBuilder {
        features,
        grads,
        params,
        split: params.split_params(),
        active,
        nodes: Vec::new(),
        go_left: vec![false; features.len()],
    };
    b.grow(lists, 0)?;
    Ok(Tree { nodes: b.nodes })
}

fn fraction_count(n: usize, frac: f64) -> usize {
    ((n as f64 * frac).round() as usize).clamp(1, n)
}

pub fn train_gbt<R: Rng + ?Sized>(
    train: &Dataset,
    params: &GbtParams,
    rng: &mut R,
) -> Result<GbtModel> {
    train_gbt_monitored(train, params, rng, &mut ())
}

/// Boosting loop. Each round samples rows without replacement
/// (`subsample`) and features (`colsample_bytree`, at least one), grows one
/// tree per class on the current gradients and adds `eta * tree` to the
/// margins of every row.
pub fn train_gbt_monitored<R: Rng + ?Sized, M: TrainMonitor + ?Sized>(
    train: &Dataset,
    params: &GbtParams,
    rng: &mut R,
    monitor: &mut M,
) -> Result<GbtModel> {
    params.validate()?;
    if train.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    let expected = Objective::for_mode(train.mode());
    let compatible = match (params.objective, train.mode()) {
        (Objective::BinaryLogistic, LabelMode::Binary) => true,
        (Objective::Softmax { n_classes }, mode) => n_classes == mode.n_classes(),
        _ => false,
    };
    if !compatible {
        return Err(Error::LabelModeMismatch(format!(
            "objective {:?} cannot train on {} labels (expected {expected:?})",
            params.objective,
            train.mode().as_str()
        )));
    }

    let features = train.features();
    let labels = train.labels();
    let n = features.len();
    let k = params.objective.trees_per_round();
    let base_margin = match params.objective {
        Objective::BinaryLogistic => logit(params.base_score),
        Objective::Softmax { .. } => 0.0,
    };
    let n_features = train.n_features();

    // Presort once; per-tree row samples filter these orders.
    let order: Vec<Vec<usize>> = (0..n_features)
        .map(|f| {
            let mut rows: Vec<usize> = (0..n).collect();
            sort_rows_by_feature(&mut rows, &features, f);
            rows
        })
        .collect();

    let mut margins = vec![base_margin; n * k];
    let mut trees = Vec::with_capacity(params.n_rounds * k);
    let mut grads = vec![GradPair::default(); n];
    let mut in_sample = vec![false; n];

    for round in 0..params.n_rounds {
        let n_rows = fraction_count(n, params.subsample);
        let mut rows: Vec<usize> = if n_rows == n {
            (0..n).collect()
        } else {
            sample_indices(rng, n, n_rows).into_vec()
        };
        rows.sort_unstable();
        in_sample.iter_mut().for_each(|v| *v = false);
        for &r in &rows {
            in_sample[r] = true;
        }
        let n_cols = fraction_count(n_features, params.colsample_bytree);
        let mut active: Vec<usize> = if n_cols == n_features {
            (0..n_features).collect()
        } else {
            sample_indices(rng, n_features, n_cols).into_vec()
        };
        active.sort_unstable();

        let probs: Vec<Vec<f64>> = (0..n)
            .map(|i| margins_to_proba(params.objective, &margins[i * k..(i + 1) * k]))
            .collect();

        let mut round_trees = Vec::with_capacity(k);
        for class in 0..k {
            for i in 0..n {
                grads[i] = match params.objective {
                    Objective::BinaryLogistic => {
                        let (g, h) = logistic_grad_hess(margins[i], labels[i]);
                        GradPair { g, h }
                    }
                    Objective::Softmax { .. } => {
                        let p = probs[i][class];
                        let y = if labels[i] as usize == class { 1.0 } else { 0.0 };
                        GradPair {
                            g: p - y,
                            h: (p * (1.0 - p)).max(HESSIAN_FLOOR),
                        }
                    }
                };
            }
            let lists = active
                .iter()
                .map(|&f| order[f].iter().copied().filter(|&r| in_sample[r]).collect())
                .collect();
            let tree = grow_from_sorted(&features, &grads, lists, &active, params)?;
            monitor.on_tree(&TreeEvent {
                round,
                class,
                tree: &tree,
                features: &features,
                grads: &grads,
                rows: &rows,
                lambda: params.lambda,
                gamma: params.gamma,
            });
            round_trees.push(tree);
        }
        for (class, tree) in round_trees.iter().enumerate() {
            for (i, f) in features.iter().enumerate() {
                margins[i * k + class] += params.eta * tree.predict(f);
            }
        }
        trees.extend(round_trees);
        monitor.on_round(round, logloss(params.objective, &margins, &labels));
    }

    Ok(GbtModel {
        params: *params,
        base_margin,
        trees,
    })
}

/// Mean negative log-likelihood of `labels` under the given margins.
pub fn logloss(objective: Objective, margins: &[f64], labels: &[u8]) -> f64 {
    let k = objective.trees_per_round();
    let eps = 1e-15;
    let total: f64 = labels
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let p = margins_to_proba(objective, &margins[i * k..(i + 1) * k]);
            -p[y as usize].clamp(eps, 1.0).ln()
        })
        .sum();
    total / labels.len() as f64
}
