//! Second-order statistics, regularized leaf weights and exact greedy split
//! search.

use crate::error::{Error, Result};
use crate::qstate::FeatureVector;

/// Lower bound on per-sample hessians.
pub const HESSIAN_FLOOR: f64 = 1e-16;

/// First and second derivative of the loss for one row.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GradPair {
    pub g: f64,
    pub h: f64,
}

pub fn sigmoid(margin: f64) -> f64 {
    if margin >= 0.0 {
        1.0 / (1.0 + (-margin).exp())
    } else {
        let e = margin.exp();
        e / (1.0 + e)
    }
}

/// Gradient and hessian of the logistic loss at `margin` for a 0/1 label.
pub fn logistic_grad_hess(margin: f64, label: u8) -> (f64, f64) {
    let p = sigmoid(margin);
    let g = p - f64::from(label);
    let h = (p * (1.0 - p)).max(HESSIAN_FLOOR);
    (g, h)
}

/// Optimal leaf value `-G / (H + lambda)`.
pub fn leaf_weight(g_sum: f64, h_sum: f64, lambda: f64) -> Result<f64> {
    let denom = h_sum + lambda;
    if denom <= 0.0 || !denom.is_finite() {
        return Err(Error::DivisionGuard(denom));
    }
    Ok(-g_sum / denom)
}

/// `G^2 / (H + lambda)`, the structure score of one leaf (times -2).
#[inline]
fn leaf_score(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

/// Loss reduction of splitting a node into `(gl, hl)` and `(gr, hr)`.
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> f64 {
    0.5 * (leaf_score(gl, hl, lambda) + leaf_score(gr, hr, lambda)
        - leaf_score(gl + gr, hl + hr, lambda))
        - gamma
}

/// Regularization knobs that shape split acceptance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitParams {
    pub lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    /// Rows with `value < threshold` go left, the rest right.
    pub threshold: f64,
    pub gain: f64,
    pub left: GradPair,
    pub right: GradPair,
}

/// Threshold between two adjacent distinct sorted values such that `lo`
/// routes left and `hi` routes right.
#[inline]
pub fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid <= lo {
        hi
    } else {
        mid
    }
}

/// Scans one feature whose rows are already sorted by value, updating `best`
/// when a strictly larger gain is found.
pub(crate) fn scan_sorted(
    feature: usize,
    sorted_rows: &[usize],
    features: &[FeatureVector],
    grads: &[GradPair],
    total: GradPair,
    params: &SplitParams,
    best: &mut Option<SplitCandidate>,
) {
    let mut gl = 0.0;
    let mut hl = 0.0;
    for w in 0..sorted_rows.len().saturating_sub(1) {
        let row = sorted_rows[w];
        gl += grads[row].g;
        hl += grads[row].h;
        let lo = features[row][feature];
        let hi = features[sorted_rows[w + 1]][feature];
        if hi <= lo {
            continue;
        }
        let gr = total.g - gl;
        let hr = total.h - hl;
        if hl < params.min_child_weight || hr < params.min_child_weight {
            continue;
        }
        let gain = split_gain(gl, hl, gr, hr, params.lambda, params.gamma);
        if best.map_or(true, |b| gain > b.gain) {
            *best = Some(SplitCandidate {
                feature,
                threshold: midpoint(lo, hi),
                gain,
                left: GradPair { g: gl, h: hl },
                right: GradPair { g: gr, h: hr },
            });
        }
    }
}

pub(crate) fn sort_rows_by_feature(rows: &mut [usize], features: &[FeatureVector], feature: usize) {
    rows.sort_unstable_by(|&a, &b| {
        features[a][feature]
            .total_cmp(&features[b][feature])
            .then(a.cmp(&b))
    });
}

/// Exact greedy search over every boundary between distinct adjacent values
/// of every active feature. Ties keep the lowest feature index, then the
/// lowest threshold. Returns `None` when no split has positive gain.
pub fn find_best_split(
    features: &[FeatureVector],
    grads: &[GradPair],
    rows: &[usize],
    active: &[usize],
    params: &SplitParams,
) -> Option<SplitCandidate> {
    if rows.len() < 2 {
        return None;
    }
    let total = rows.iter().fold(GradPair::default(), |acc, &r| GradPair {
        g: acc.g + grads[r].g,
        h: acc.h + grads[r].h,
    });
    let mut active = active.to_vec();
    active.sort_unstable();
    let mut best = None;
    let mut sorted = rows.to_vec();
    for &f in &active {
        sort_rows_by_feature(&mut sorted, features, f);
        scan_sorted(f, &sorted, features, grads, total, params, &mut best);
    }
    best.filter(|b| b.gain > 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn logistic_examples() {
        assert_eq!(logistic_grad_hess(0.0, 1), (-0.5, 0.25));
        assert_eq!(logistic_grad_hess(0.0, 0), (0.5, 0.25));
        let (g, h) = logistic_grad_hess(20.0, 1);
        assert!(g.abs() < 1e-8 && g <= 0.0);
        assert!(h < 1e-8 && h >= HESSIAN_FLOOR);
        let (_, h) = logistic_grad_hess(800.0, 1);
        assert_eq!(h, HESSIAN_FLOOR);
    }

    #[test]
    fn logistic_matches_finite_differences() {
        // ln(1 + e^m) - y m, evaluated without cancellation.
        let loss = |m: f64, y: f64| m.max(0.0) + (-m.abs()).exp().ln_1p() - y * m;
        let eps = 1e-4;
        for i in 0..=100 {
            let m = -5.0 + 0.1 * i as f64;
            for y in [0u8, 1] {
                let yf = f64::from(y);
                let (g, h) = logistic_grad_hess(m, y);
                let fd_g = (loss(m + eps, yf) - loss(m - eps, yf)) / (2.0 * eps);
                let fd_h =
                    (loss(m + eps, yf) - 2.0 * loss(m, yf) + loss(m - eps, yf)) / (eps * eps);
                assert!((g - fd_g).abs() < 1e-6, "g at {m}");
                assert!((h - fd_h).abs() < 1e-6, "h at {m}");
            }
        }
    }

    #[test]
    fn leaf_weight_examples() {
        assert_eq!(leaf_weight(0.0, 7.0, 1.0).unwrap(), 0.0);
        assert_eq!(leaf_weight(-2.0, 3.0, 1.0).unwrap(), 0.5);
        assert!(matches!(leaf_weight(1.0, 0.0, 0.0), Err(Error::DivisionGuard(_))));
        let mut last = f64::INFINITY;
        for lambda in [0.0, 1.0, 10.0, 1e3, 1e6] {
            let w = leaf_weight(-2.0, 3.0, lambda).unwrap();
            assert!(w < last && w > 0.0);
            last = w;
        }
    }

    #[test]
    fn gain_examples() {
        assert_abs_diff_eq!(split_gain(1.3, 2.0, 1.3, 2.0, 0.0, 0.0), 0.0, epsilon = 1e-15);
        // With lambda > 0 the regularizer favors the merged node.
        assert!(split_gain(1.3, 2.0, 1.3, 2.0, 1.0, 0.0) < 0.0);
        assert_abs_diff_eq!(split_gain(-1.0, 1.0, 1.0, 1.0, 1.0, 0.0), 0.5, epsilon = 1e-15);
        assert!(split_gain(-5.0, 1.0, 5.0, 1.0, 1.0, 1e6) < 0.0);
    }

    #[test]
    fn one_dimensional_split() {
        let features: Vec<_> = [0.1, 0.2, 0.8, 0.9]
            .iter()
            .map(|&v| FeatureVector::new(v, 0.0, 0.0))
            .collect();
        let labels = [0u8, 0, 1, 1];
        let grads: Vec<_> = labels
            .iter()
            .map(|&y| {
                let (g, h) = logistic_grad_hess(0.0, y);
                GradPair { g, h }
            })
            .collect();
        let params = SplitParams {
            lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 0.0,
        };
        let best = find_best_split(&features, &grads, &[0, 1, 2, 3], &[0], &params).unwrap();
        assert_eq!(best.feature, 0);
        assert_abs_diff_eq!(best.threshold, 0.5, epsilon = 1e-15);
        assert!(best.gain > 0.0);
        // Constant features offer no boundary.
        assert!(find_best_split(&features, &grads, &[0, 1, 2, 3], &[1, 2], &params).is_none());
        assert!(find_best_split(&features, &grads, &[0], &[0], &params).is_none());
    }

    #[test]
    fn midpoint_routes_adjacent_floats() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let t = midpoint(lo, hi);
        assert!(lo < t && hi >= t);
        assert_eq!(midpoint(0.2, 0.4), 0.30000000000000004);
    }
}
