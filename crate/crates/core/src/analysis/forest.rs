//! Bagged CART trees with Gini splits.

use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::logreg::check_training_set;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features tried per split; `None` means round(sqrt(#features)).
    pub max_features: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self { n_trees: 200, max_depth: 8, min_leaf: 2, max_features: None, seed: 0 }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Value("n_trees must be at least 1".into()));
        }
        if self.max_depth == 0 {
            return Err(Error::Value("max_depth must be at least 1".into()));
        }
        if self.min_leaf == 0 {
            return Err(Error::Value("min_leaf must be at least 1".into()));
        }
        if self.max_features == Some(0) {
            return Err(Error::Value("max_features must be at least 1".into()));
        }
        Ok(())
    }

    fn features_per_split(&self, d: usize) -> usize {
        self.max_features.unwrap_or_else(|| (d as f64).sqrt().round() as usize).clamp(1, d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    /// Share of abnormal samples that reached the leaf.
    Leaf { p: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    fn leaf(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { p } => return p,
                Node::Split { feature, threshold, left, right } => {
                    i = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    /// Class vote; ties go to normal.
    pub fn vote(&self, row: &[f64]) -> u8 {
        u8::from(self.leaf(row) > 0.5)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub n_features: usize,
    pub trees: Vec<Tree>,
    /// Mean-decrease-in-impurity per feature, summing to 1 unless no tree split.
    pub importances: Vec<f64>,
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [u8],
    cfg: &'a ForestConfig,
    mtry: usize,
    nodes: Vec<Node>,
    gain: Vec<f64>,
    total: f64,
}

impl Builder<'_> {
    fn grow(&mut self, idx: &mut [usize], depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let id = self.nodes.len();
        let n = idx.len();
        let pos = idx.iter().filter(|&&i| self.y[i] == 1).count();
        self.nodes.push(Node::Leaf { p: pos as f64 / n as f64 });
        if depth >= self.cfg.max_depth || pos == 0 || pos == n || n < 2 * self.cfg.min_leaf {
            return id;
        }
        let parent = gini(pos, n);
        let d = self.x[0].len();
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order: Vec<(f64, u8)> = Vec::with_capacity(n);
        let mut candidates = sample(rng, d, self.mtry).into_vec();
        candidates.sort_unstable();
        for f in candidates {
            order.clear();
            order.extend(idx.iter().map(|&i| (self.x[i][f], self.y[i])));
            order.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_pos = 0;
            for k in 1..n {
                left_pos += usize::from(order[k - 1].1);
                if order[k].0 == order[k - 1].0 || k < self.cfg.min_leaf || n - k < self.cfg.min_leaf {
                    continue;
                }
                let child = (k as f64 * gini(left_pos, k) + (n - k) as f64 * gini(pos - left_pos, n - k)) / n as f64;
                let decrease = parent - child;
                if decrease > 1e-12 && best.is_none_or(|(b, _, _)| decrease > b) {
                    best = Some((decrease, f, 0.5 * (order[k - 1].0 + order[k].0)));
                }
            }
        }
        let Some((decrease, feature, threshold)) = best else { return id };
        self.gain[feature] += decrease * n as f64 / self.total;
        idx.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]).then(a.cmp(&b)));
        let cut = idx.partition_point(|&i| self.x[i][feature] <= threshold);
        let (l, r) = idx.split_at_mut(cut);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        self.nodes[id] = Node::Split { feature, threshold, left, right };
        id
    }
}

impl RandomForest {
    pub fn fit(x: &[Vec<f64>], y: &[u8], cfg: &ForestConfig) -> Result<Self> {
        cfg.validate()?;
        let d = check_training_set(x, y)?;
        if d == 0 {
            return Err(Error::EmptyMatrix("no feature columns".into()));
        }
        let n = x.len();
        let mtry = cfg.features_per_split(d);
        let mut importances = vec![0.0; d];
        let mut trees = Vec::with_capacity(cfg.n_trees);
        for t in 0..cfg.n_trees {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(t as u64);
            let mut idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut b = Builder { x, y, cfg, mtry, nodes: Vec::new(), gain: vec![0.0; d], total: n as f64 };
            b.grow(&mut idx, 0, &mut rng);
            let sum: f64 = b.gain.iter().sum();
            if sum > 0.0 {
                importances.iter_mut().zip(&b.gain).for_each(|(acc, g)| *acc += g / sum);
            }
            trees.push(Tree { nodes: b.nodes });
        }
        let sum: f64 = importances.iter().sum();
        if sum > 0.0 {
            importances.iter_mut().for_each(|v| *v /= sum);
        }
        Ok(Self { n_features: d, trees, importances })
    }

    /// Share of trees voting abnormal.
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let votes: usize = self.trees.iter().map(|t| usize::from(t.vote(row))).sum();
        votes as f64 / self.trees.len() as f64
    }
}

/// Features ranked by importance, heaviest first; ties keep column order.
pub fn feature_importance(forest: &RandomForest, names: &[String]) -> Result<Vec<(String, f64)>> {
    if names.len() != forest.n_features {
        return Err(Error::Value(format!("{} names for {} features", names.len(), forest.n_features)));
    }
    let mut ranked: Vec<(String, f64)> = names.iter().cloned().zip(forest.importances.iter().copied()).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor(reps: usize) -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..reps {
            for (a, b) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
                x.push(vec![a, b]);
                y.push(u8::from(a != b));
            }
        }
        (x, y)
    }

    fn accuracy(f: &RandomForest, x: &[Vec<f64>], y: &[u8]) -> f64 {
        let hits = x.iter().zip(y).filter(|(r, &t)| u8::from(f.predict_proba(r) > 0.5) == t).count();
        hits as f64 / y.len() as f64
    }

    #[test]
    fn separating_feature_gives_stumps() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y: Vec<u8> = (0..20).map(|i| u8::from(i >= 10)).collect();
        let f = RandomForest::fit(&x, &y, &ForestConfig { n_trees: 25, ..Default::default() }).unwrap();
        assert_eq!(accuracy(&f, &x, &y), 1.0);
        assert!(f.trees.iter().all(|t| t.nodes.len() == 3));
    }

    #[test]
    fn xor_needs_depth_two() {
        let (x, y) = xor(10);
        let cfg = ForestConfig { n_trees: 50, max_features: Some(2), seed: 4, ..Default::default() };
        let deep = RandomForest::fit(&x, &y, &cfg).unwrap();
        assert!(accuracy(&deep, &x, &y) > 0.9);
        let stumps = RandomForest::fit(&x, &y, &ForestConfig { max_depth: 1, ..cfg }).unwrap();
        assert!(accuracy(&stumps, &x, &y) <= 0.75);
    }

    #[test]
    fn deterministic_given_seed() {
        let (x, y) = xor(5);
        let cfg = ForestConfig { n_trees: 20, seed: 9, ..Default::default() };
        let a = RandomForest::fit(&x, &y, &cfg).unwrap();
        let b = RandomForest::fit(&x.clone(), &y.clone(), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn more_trees_extend_the_same_forest() {
        let (x, y) = xor(5);
        let small = RandomForest::fit(&x, &y, &ForestConfig { n_trees: 10, ..Default::default() }).unwrap();
        let big = RandomForest::fit(&x, &y, &ForestConfig { n_trees: 30, ..Default::default() }).unwrap();
        assert_eq!(small.trees[..], big.trees[..10]);
    }

    #[test]
    fn importance_ranking() {
        let f = RandomForest { n_features: 2, trees: vec![], importances: vec![0.25, 0.75] };
        let r = feature_importance(&f, &["a".into(), "b".into()]).unwrap();
        assert_eq!(r[0].0, "b");
        assert!(feature_importance(&f, &["a".into()]).is_err());
    }

    #[test]
    fn bad_hyperparameters() {
        let x = vec![vec![0.0]];
        for cfg in [
            ForestConfig { n_trees: 0, ..Default::default() },
            ForestConfig { max_depth: 0, ..Default::default() },
            ForestConfig { min_leaf: 0, ..Default::default() },
            ForestConfig { max_features: Some(0), ..Default::default() },
        ] {
            assert!(matches!(RandomForest::fit(&x, &[0], &cfg), Err(Error::Value(_))));
        }
    }
}
