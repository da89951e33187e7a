//! Accuracy, confusion counts, ROC/AUC and a two-component PCA projection.

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::qstate::FeatureVector;

/// Hard labels from probability vectors: `p[1] >= 0.5` for two classes,
/// otherwise argmax with ties going to the lowest class.
pub fn predicted_labels(probs: &[Vec<f64>]) -> Vec<u8> {
    probs.iter().map(|p| predict_label(p)).collect()
}

pub fn predict_label(p: &[f64]) -> u8 {
    if p.len() == 2 {
        return u8::from(p[1] >= 0.5);
    }
    let mut best = 0;
    for (k, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = k;
        }
    }
    best as u8
}

pub fn accuracy(predicted: &[u8], truth: &[u8]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::InvalidInput("accuracy of an empty set".into()));
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// `counts[true][predicted]`.
pub fn confusion_matrix(predicted: &[u8], truth: &[u8], n_classes: usize) -> Result<Vec<Vec<usize>>> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    let mut m = vec![vec![0; n_classes]; n_classes];
    for (&p, &t) in predicted.iter().zip(truth) {
        if p as usize >= n_classes || t as usize >= n_classes {
            return Err(Error::InvalidInput(format!("label outside 0..{n_classes}")));
        }
        m[t as usize][p as usize] += 1;
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Roc {
    pub curve: Vec<RocPoint>,
    pub auc: f64,
}

/// ROC sweep over a `+inf` sentinel followed by every distinct score in
/// descending order (a row counts as positive when `score >= threshold`),
/// with the area by the trapezoid rule.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<Roc> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidInput("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut curve = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let prev = *curve.last().unwrap();
        let point = RocPoint {
            threshold: t,
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
        };
        auc += (point.fpr - prev.fpr) * (point.tpr + prev.tpr) / 2.0;
        curve.push(point);
    }
    Ok(Roc { curve, auc })
}

/// Principal axes of 3-D feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: [f64; 3],
    /// Unit eigenvectors of the sample covariance, eigenvalues descending.
    pub axes: [[f64; 3]; 3],
    pub eigenvalues: [f64; 3],
}

impl Pca {
    pub fn fit(features: &[FeatureVector]) -> Result<Self> {
        let n = features.len();
        if n < 2 {
            return Err(Error::InvalidInput("PCA needs at least 2 samples".into()));
        }
        let mut mean = [0.0; 3];
        for f in features {
            for (m, v) in mean.iter_mut().zip(f.as_array()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut cov = [0.0; 9];
        for f in features {
            let d: Vec<f64> = (0..3).map(|k| f[k] - mean[k]).collect();
            for r in 0..3 {
                for c in 0..3 {
                    cov[r * 3 + c] += d[r] * d[c];
                }
            }
        }
        cov.iter_mut().for_each(|v| *v /= (n - 1) as f64);
        let (vals, vecs) = symmetric_eigen(3, &cov);
        let mut axes = [[0.0; 3]; 3];
        for (axis, v) in axes.iter_mut().zip(&vecs) {
            let lead = v
                .iter()
                .copied()
                .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
            let sign = if lead < 0.0 { -1.0 } else { 1.0 };
            for (a, x) in axis.iter_mut().zip(v) {
                *a = sign * x;
            }
        }
        Ok(Self {
            mean,
            axes,
            eigenvalues: [vals[0], vals[1], vals[2]],
        })
    }

    pub fn project(&self, f: &FeatureVector) -> [f64; 2] {
        let d: Vec<f64> = (0..3).map(|k| f[k] - self.mean[k]).collect();
        let dot = |a: &[f64; 3]| a.iter().zip(&d).map(|(x, y)| x * y).sum::<f64>();
        [dot(&self.axes[0]), dot(&self.axes[1])]
    }

    /// Fraction of total variance kept by the first two axes.
    pub fn captured_variance(&self) -> f64 {
        let total: f64 = self.eigenvalues.iter().sum();
        if total <= 0.0 {
            return 1.0;
        }
        (self.eigenvalues[0] + self.eigenvalues[1]) / total
    }
}

/// Centers the data and projects it onto the top two principal axes.
pub fn pca_project(features: &[FeatureVector]) -> Result<Vec<[f64; 2]>> {
    let pca = Pca::fit(features)?;
    Ok(features.iter().map(|f| pca.project(f)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[1, 0, 1], &[1, 0, 1]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 1], &[1, 0]).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 1, 0, 0], &[1, 1, 0, 1]).unwrap(), 0.75);
        assert!(matches!(
            accuracy(&[1], &[1, 0]),
            Err(Error::LengthMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn label_rules() {
        assert_eq!(predict_label(&[0.5, 0.5]), 1);
        assert_eq!(predict_label(&[0.51, 0.49]), 0);
        assert_eq!(predict_label(&[0.3, 0.3, 0.2, 0.2]), 0);
        assert_eq!(predict_label(&[0.1, 0.2, 0.4, 0.3]), 2);
    }

    #[test]
    fn confusion_counts() {
        let m = confusion_matrix(&[0, 1, 1, 0], &[0, 1, 0, 0], 2).unwrap();
        assert_eq!(m, vec![vec![2, 1], vec![0, 1]]);
    }

    #[test]
    fn auc_examples() {
        let r = roc_auc(&[0.9, 0.8, 0.2, 0.1], &[1, 1, 0, 0]).unwrap();
        assert_eq!(r.auc, 1.0);
        let r = roc_auc(&[0.4; 6], &[1, 0, 1, 0, 1, 0]).unwrap();
        assert_eq!(r.auc, 0.5);
        let r = roc_auc(&[0.9, 0.8, 0.7, 0.6, 0.55], &[1, 1, 0, 1, 0]).unwrap();
        assert_abs_diff_eq!(r.auc, 5.0 / 6.0, epsilon = 1e-15);
        assert!(matches!(roc_auc(&[0.1, 0.2], &[1, 1]), Err(Error::SingleClass)));
    }

    #[test]
    fn roc_endpoints_and_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let scores: Vec<f64> = (0..50).map(|_| (rng.gen::<f64>() * 10.0).round() / 10.0).collect();
        let labels: Vec<u8> = (0..50).map(|i| (i % 3 == 0) as u8).collect();
        let r = roc_auc(&scores, &labels).unwrap();
        let first = r.curve[0];
        let last = *r.curve.last().unwrap();
        assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        assert!(r.curve.windows(2).all(|w| w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr));
        assert!(r.curve.windows(2).all(|w| w[1].threshold < w[0].threshold));
    }

    #[test]
    fn pca_rank_one_line() {
        let fs: Vec<_> = [0.1, 0.4, 0.2, 0.9, 0.5]
            .iter()
            .map(|&v| FeatureVector::new(v, 0.0, 0.0))
            .collect();
        let proj = pca_project(&fs).unwrap();
        let mean = 0.42;
        for (p, f) in proj.iter().zip(&fs) {
            assert_abs_diff_eq!(p[0], f[0] - mean, epsilon = 1e-12);
            assert_abs_diff_eq!(p[1], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn pca_decorrelates() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let fs: Vec<_> = (0..100)
            .map(|_| {
                let a: f64 = rng.gen_range(-1.0..1.0);
                let b: f64 = rng.gen_range(-1.0..1.0);
                FeatureVector::new(0.5 * a, 0.3 * a + 0.1 * b, 0.2 * b - 0.1 * a)
            })
            .collect();
        let proj = pca_project(&fs).unwrap();
        let n = proj.len() as f64;
        let m0 = proj.iter().map(|p| p[0]).sum::<f64>() / n;
        let m1 = proj.iter().map(|p| p[1]).sum::<f64>() / n;
        let cov = proj.iter().map(|p| (p[0] - m0) * (p[1] - m1)).sum::<f64>() / (n - 1.0);
        assert!(cov.abs() < 1e-9);
        let pca = Pca::fit(&fs).unwrap();
        for axis in &pca.axes {
            let lead = axis.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
            assert!(lead > 0.0);
        }
        assert!(pca.eigenvalues[0] >= pca.eigenvalues[1] && pca.eigenvalues[1] >= pca.eigenvalues[2]);
    }

    #[test]
    fn pca_needs_two_samples() {
        assert!(pca_project(&[FeatureVector::new(0.5, 0.0, 0.0)]).is_err());
    }
}
