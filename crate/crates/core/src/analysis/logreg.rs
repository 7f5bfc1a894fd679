//! L2-regularised logistic regression by full-batch gradient descent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogRegConfig {
    /// Initial step size of every epoch; halved until the loss drops enough.
    pub lr: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self { lr: 0.1, epochs: 2000, l2: 1e-3 }
    }
}

impl LogRegConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Value(format!("lr must be positive, got {}", self.lr)));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return Err(Error::Value(format!("l2 must be non-negative, got {}", self.l2)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Training loss after each accepted epoch, starting with the initial loss.
    pub loss_history: Vec<f64>,
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean cross-entropy plus `l2 / 2 * |w|^2` at parameters `theta = [w.., b]`,
/// with its gradient in the same layout.
pub fn loss_and_gradient(x: &[Vec<f64>], y: &[u8], theta: &[f64], l2: f64) -> (f64, Vec<f64>) {
    let d = theta.len() - 1;
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; d + 1];
    for (row, &label) in x.iter().zip(y) {
        let z = theta[d] + row.iter().zip(theta).map(|(a, w)| a * w).sum::<f64>();
        let t = f64::from(label);
        loss += softplus(z) - t * z;
        let r = sigmoid(z) - t;
        for (g, a) in grad.iter_mut().zip(row) {
            *g += r * a;
        }
        grad[d] += r;
    }
    loss /= n;
    grad.iter_mut().for_each(|g| *g /= n);
    for j in 0..d {
        loss += 0.5 * l2 * theta[j] * theta[j];
        grad[j] += l2 * theta[j];
    }
    (loss, grad)
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 40;

impl LogisticRegression {
    pub fn fit(x: &[Vec<f64>], y: &[u8], cfg: &LogRegConfig) -> Result<Self> {
        cfg.validate()?;
        let d = check_training_set(x, y)?;
        let mut theta = vec![0.0; d + 1];
        let (mut loss, mut grad) = loss_and_gradient(x, y, &theta, cfg.l2);
        let mut history = vec![loss];
        for _ in 0..cfg.epochs {
            let g2: f64 = grad.iter().map(|g| g * g).sum();
            if g2 < 1e-24 {
                break;
            }
            let mut step = cfg.lr;
            let mut accepted = None;
            for _ in 0..MAX_HALVINGS {
                let trial: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - step * g).collect();
                let (l, g) = loss_and_gradient(x, y, &trial, cfg.l2);
                if l <= loss - ARMIJO * step * g2 {
                    accepted = Some((trial, l, g));
                    break;
                }
                step *= 0.5;
            }
            let Some((t, l, g)) = accepted else { break };
            theta = t;
            loss = l;
            grad = g;
            history.push(loss);
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        let tail = (cfg.epochs / 10).max(1);
        let stalled = history.len() <= cfg.epochs || history[history.len() - 1 - tail] <= loss;
        if cfg.epochs > 0 && gnorm > 1e-6 && stalled {
            log::warn!("logistic regression stalled: loss {loss:.6e}, gradient norm {gnorm:.3e}");
        }
        let bias = theta.pop().unwrap_or(0.0);
        Ok(Self { weights: theta, bias, loss_history: history })
    }

    /// Probability of the abnormal class.
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        sigmoid(self.bias + row.iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>())
    }
}

/// Shared training-set checks; returns the column count.
pub(crate) fn check_training_set(x: &[Vec<f64>], y: &[u8]) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::EmptyMatrix("no training rows".into()));
    }
    if x.len() != y.len() {
        return Err(Error::Value(format!("{} rows but {} labels", x.len(), y.len())));
    }
    let d = x[0].len();
    if x.iter().any(|r| r.len() != d) {
        return Err(Error::Value("ragged training matrix".into()));
    }
    if y.iter().any(|&t| t > 1) {
        return Err(Error::Value("labels must be 0 or 1".into()));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Value("training matrix has non-finite values".into()));
    }
    Ok(d)
}
