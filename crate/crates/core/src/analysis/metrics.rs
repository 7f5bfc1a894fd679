//! Binary classification metrics and cluster separation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub specificity: f64,
    pub f1: f64,
    pub auc: f64,
    pub ap: f64,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub(crate) fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn check(scores: &[f64], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::Value(format!("{} scores for {} labels", scores.len(), labels.len())));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Value("NaN score".into()));
    }
    let pos = labels.iter().filter(|&&t| t == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Value("metrics need both classes".into()));
    }
    Ok((pos, neg))
}

/// Scores sorted descending, grouped into runs of equal score: (true positives, false positives) per run.
fn threshold_runs(scores: &[f64], labels: &[u8]) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut last = None;
    for i in order {
        if last != Some(scores[i]) {
            runs.push((0, 0));
            last = Some(scores[i]);
        }
        let run = runs.last_mut().expect("pushed above");
        if labels[i] == 1 {
            run.0 += 1;
        } else {
            run.1 += 1;
        }
    }
    runs
}

/// Area under the ROC curve by trapezoids between score thresholds.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, neg) = check(scores, labels)?;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut area = 0.0;
    for (dtp, dfp) in threshold_runs(scores, labels) {
        let (tpr0, fpr0) = (ratio(tp, pos), ratio(fp, neg));
        tp += dtp;
        fp += dfp;
        area += (ratio(fp, neg) - fpr0) * (ratio(tp, pos) + tpr0) / 2.0;
    }
    Ok(area)
}

/// Average precision: sum of precision at each threshold weighted by the recall gained there.
pub fn average_precision(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, _) = check(scores, labels)?;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut ap = 0.0;
    for (dtp, dfp) in threshold_runs(scores, labels) {
        tp += dtp;
        fp += dfp;
        ap += ratio(dtp, pos) * ratio(tp, tp + fp);
    }
    Ok(ap)
}

impl BinaryMetrics {
    /// Threshold metrics at `score >= threshold` plus the ranking metrics.
    pub fn compute(scores: &[f64], labels: &[u8], threshold: f64) -> Result<Self> {
        let (pos, neg) = check(scores, labels)?;
        let mut tp = 0;
        let mut tn = 0;
        for (&s, &t) in scores.iter().zip(labels) {
            match (s >= threshold, t == 1) {
                (true, true) => tp += 1,
                (false, false) => tn += 1,
                _ => {}
            }
        }
        let predicted_pos = scores.iter().filter(|&&s| s >= threshold).count();
        let precision = ratio(tp, predicted_pos);
        let recall = ratio(tp, pos);
        Ok(Self {
            accuracy: ratio(tp + tn, pos + neg),
            precision,
            recall,
            specificity: ratio(tn, neg),
            f1: harmonic(precision, recall),
            auc: roc_auc(scores, labels)?,
            ap: average_precision(scores, labels)?,
        })
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Mean silhouette coefficient over all points. Points in singleton clusters score 0.
pub fn silhouette(points: &[Vec<f64>], labels: &[u8]) -> Result<f64> {
    if points.len() != labels.len() || points.is_empty() {
        return Err(Error::Value("silhouette needs one label per point".into()));
    }
    let mut clusters: Vec<u8> = labels.to_vec();
    clusters.sort_unstable();
    clusters.dedup();
    if clusters.len() < 2 {
        return Err(Error::Value("silhouette needs at least two clusters".into()));
    }
    let mut total = 0.0;
    for (i, p) in points.iter().enumerate() {
        let mean_to = |c: u8| {
            let (s, n) = points
                .iter()
                .zip(labels)
                .enumerate()
                .filter(|&(j, (_, &l))| l == c && j != i)
                .fold((0.0, 0usize), |(s, n), (_, (q, _))| (s + euclid(p, q), n + 1));
            (n > 0).then(|| s / n as f64)
        };
        let Some(a) = mean_to(labels[i]) else { continue };
        let b = clusters
            .iter()
            .filter(|&&c| c != labels[i])
            .filter_map(|&c| mean_to(c))
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / points.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_case() {
        let s = [0.9, 0.8, 0.3, 0.1];
        let y = [1, 1, 0, 0];
        assert_eq!(roc_auc(&s, &y).unwrap(), 1.0);
        assert_eq!(average_precision(&s, &y).unwrap(), 1.0);
    }

    #[test]
    fn constant_scores() {
        let s = [0.5; 6];
        let y = [1, 0, 1, 0, 0, 1];
        assert_eq!(roc_auc(&s, &y).unwrap(), 0.5);
        assert_eq!(average_precision(&s, &y).unwrap(), 0.5);
    }

    #[test]
    fn interleaved_ranking() {
        // ranking 1,0,1,0: ROC steps give 0.75; AP = (1 + 2/3) / 2
        let s = [0.9, 0.7, 0.5, 0.3];
        let y = [1, 0, 1, 0];
        assert!((roc_auc(&s, &y).unwrap() - 0.75).abs() < 1e-15);
        assert!((average_precision(&s, &y).unwrap() - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn threshold_metrics() {
        let m = BinaryMetrics::compute(&[0.9, 0.6, 0.4, 0.2], &[1, 0, 1, 0], 0.5).unwrap();
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.precision, 0.5);
        assert_eq!(m.recall, 0.5);
        assert_eq!(m.specificity, 0.5);
        assert_eq!(m.f1, 0.5);
    }

    #[test]
    fn silhouette_separated_clusters() {
        let pts = vec![vec![0.0], vec![0.1], vec![10.0], vec![10.1]];
        let s = silhouette(&pts, &[0, 0, 1, 1]).unwrap();
        assert!(s > 0.98);
        assert!(silhouette(&pts, &[0, 0, 0, 0]).is_err());
    }
}
