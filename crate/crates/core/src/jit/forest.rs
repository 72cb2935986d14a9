use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::seed::rng_for;

use super::JitError;

/// Node of a CART tree. Samples with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Class counts of the bootstrap samples that reached the leaf,
    /// `[negative, positive]`.
    Leaf {
        votes: [u32; 2],
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    /// Class predicted by the leaf `x` falls into; a tied leaf is negative.
    pub fn predict(&self, x: &[f64]) -> bool {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split { feature, threshold, left, right } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
                Node::Leaf { votes } => return votes[1] > votes[0],
            }
        }
    }
}

/// Random forest of unpruned Gini CART trees, one bootstrap sample and one
/// RNG stream per tree.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub dim: usize,
    pub seed: u64,
}

/// Features tried per split: `max(1, ⌊√d⌋)`.
pub fn max_features(dim: usize) -> usize {
    ((dim as f64).sqrt() as usize).max(1)
}

pub fn forest_train(x: &[Vec<f64>], y: &[bool], n_trees: usize, seed: u64) -> Result<ForestModel, JitError> {
    if x.len() != y.len() {
        return Err(JitError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 || !y.iter().any(|v| *v) || y.iter().all(|v| *v) {
        return Err(JitError::MissingClass);
    }
    if n_trees == 0 {
        return Err(JitError::InvalidConfig("forest needs at least one tree".into()));
    }
    let dim = x[0].len();
    if let Some(bad) = x.iter().find(|r| r.len() != dim) {
        return Err(JitError::DimensionMismatch { expected: dim, found: bad.len() });
    }
    let trees = (0..n_trees)
        .map(|t| {
            let mut rng = rng_for(seed, "forest-tree", t as u64);
            let sample: Vec<usize> = (0..x.len()).map(|_| rng.random_range(0..x.len())).collect();
            grow(x, y, sample, dim, &mut rng)
        })
        .collect();
    Ok(ForestModel { trees, dim, seed })
}

struct Pending {
    node: usize,
    samples: Vec<usize>,
}

fn grow<R: Rng>(x: &[Vec<f64>], y: &[bool], sample: Vec<usize>, dim: usize, rng: &mut R) -> DecisionTree {
    let mut nodes = vec![Node::Leaf { votes: [0, 0] }];
    let mut stack = vec![Pending { node: 0, samples: sample }];
    let mut features: Vec<usize> = (0..dim).collect();
    let mtry = max_features(dim);
    while let Some(Pending { node, samples }) = stack.pop() {
        let pos = samples.iter().filter(|&&i| y[i]).count() as u32;
        let votes = [samples.len() as u32 - pos, pos];
        if samples.len() < 2 || pos == 0 || votes[0] == 0 {
            nodes[node] = Node::Leaf { votes };
            continue;
        }
        features.shuffle(rng);
        let Some((feature, threshold)) = best_split(x, y, &samples, &features, mtry) else {
            nodes[node] = Node::Leaf { votes };
            continue;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = samples.iter().partition(|&&i| x[i][feature] <= threshold);
        let left = nodes.len();
        nodes.push(Node::Leaf { votes: [0, 0] });
        nodes.push(Node::Leaf { votes: [0, 0] });
        nodes[node] = Node::Split { feature, threshold, left, right: left + 1 };
        stack.push(Pending { node: left + 1, samples: r });
        stack.push(Pending { node: left, samples: l });
    }
    DecisionTree { nodes }
}

/// Lowest weighted Gini split over the first `mtry` features of `order`;
/// constant features do not count towards `mtry`, so more are drawn until
/// one split is found or the features run out.
fn best_split(x: &[Vec<f64>], y: &[bool], samples: &[usize], order: &[usize], mtry: usize) -> Option<(usize, f64)> {
    let n = samples.len() as f64;
    let total_pos = samples.iter().filter(|&&i| y[i]).count() as f64;
    let mut best: Option<(f64, usize, f64)> = None;
    let mut tried = 0;
    let mut sorted: Vec<(f64, bool)> = Vec::with_capacity(samples.len());
    for &f in order {
        if tried >= mtry && best.is_some() {
            break;
        }
        sorted.clear();
        sorted.extend(samples.iter().map(|&i| (x[i][f], y[i])));
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        if sorted[0].0 == sorted[sorted.len() - 1].0 {
            continue;
        }
        tried += 1;
        let mut left_pos = 0.0;
        for j in 1..sorted.len() {
            if sorted[j - 1].1 {
                left_pos += 1.0;
            }
            if sorted[j - 1].0 == sorted[j].0 {
                continue;
            }
            let nl = j as f64;
            let nr = n - nl;
            let right_pos = total_pos - left_pos;
            // n · weighted Gini = nl·(1 − pl² − ql²) + nr·(1 − pr² − qr²)
            let gl = nl - (left_pos * left_pos + (nl - left_pos) * (nl - left_pos)) / nl;
            let gr = nr - (right_pos * right_pos + (nr - right_pos) * (nr - right_pos)) / nr;
            let score = gl + gr;
            if best.is_none_or(|(s, _, _)| score < s) {
                let (a, b) = (sorted[j - 1].0, sorted[j].0);
                let mid = a + (b - a) / 2.0;
                let threshold = if mid < b { mid } else { a };
                best = Some((score, f, threshold));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

impl ForestModel {
    /// Number of trees voting positive.
    pub fn positive_votes(&self, x: &[f64]) -> Result<usize, JitError> {
        if x.len() != self.dim {
            return Err(JitError::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        Ok(self.trees.iter().filter(|t| t.predict(x)).count())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("forest trees={} dim={} seed={}\n", self.trees.len(), self.dim, self.seed);
        for (i, t) in self.trees.iter().enumerate() {
            let _ = writeln!(out, "tree {i} nodes={}", t.nodes.len());
            for n in &t.nodes {
                let _ = match n {
                    Node::Split { feature, threshold, left, right } => {
                        writeln!(out, "s {feature} {threshold:?} {left} {right}")
                    }
                    Node::Leaf { votes } => writeln!(out, "l {} {}", votes[0], votes[1]),
                };
            }
        }
        out
    }
}

/// Majority vote over all trees and the positive-vote fraction. A tie is
/// negative: a defect flag needs a strict majority.
pub fn forest_predict(model: &ForestModel, x: &[f64]) -> Result<(bool, f64), JitError> {
    let pos = model.positive_votes(x)?;
    let n = model.trees.len();
    Ok((2 * pos > n, pos as f64 / n as f64))
}
