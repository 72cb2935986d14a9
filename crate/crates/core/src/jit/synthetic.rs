use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::seed::rng_for;

use super::LabeledVector;

/// Synthetic method embeddings for defect prediction.
///
/// By default methods are drawn from a standard Gaussian on a random
/// 3-dimensional subspace of the 75-dimensional embedding space, plus small
/// isotropic noise, and every method of a defective commit is shifted by
/// `shift` standard deviations along the first latent axis. With
/// `latent = 0` the Gaussian is isotropic in all `dim` coordinates and the
/// shift is applied to each of the first `informative` ones.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticJit {
    pub commits: usize,
    pub dim: usize,
    /// Clean commits per defective commit.
    pub imbalance: usize,
    pub shift: f64,
    pub informative: usize,
    /// Methods per commit are drawn uniformly from `1..=max_methods`.
    pub max_methods: usize,
    /// Whether every method of a defective commit is shifted, rather than
    /// one of them.
    pub all_methods_shifted: bool,
    /// When non-zero, methods live on a random `latent`-dimensional subspace
    /// (orthonormal basis) plus isotropic noise of scale `noise`; the shift
    /// then acts along the first latent axis and `informative` is ignored.
    pub latent: usize,
    pub noise: f64,
}

impl Default for SyntheticJit {
    fn default() -> Self {
        SyntheticJit {
            commits: 1000,
            dim: 75,
            imbalance: 10,
            shift: 3.0,
            informative: 1,
            max_methods: 3,
            all_methods_shifted: true,
            latent: 3,
            noise: 0.1,
        }
    }
}

pub fn synthetic_vectors(cfg: &SyntheticJit, seed: u64) -> Vec<LabeledVector> {
    let mut rng = rng_for(seed, "synthetic-jit", 0);
    let n_pos = ((cfg.commits as f64) / (cfg.imbalance as f64 + 1.0)).round() as usize;
    let mut labels: Vec<bool> = (0..cfg.commits).map(|i| i < n_pos).collect();
    labels.shuffle(&mut rng);
    let basis = if cfg.latent > 0 { orthonormal_basis(cfg.dim, cfg.latent, &mut rng) } else { Vec::new() };
    let mut out = Vec::new();
    for (c, &label) in labels.iter().enumerate() {
        let methods = rng.random_range(1..=cfg.max_methods.max(1));
        let culprit = rng.random_range(0..methods);
        for m in 0..methods {
            let shifted = label && (cfg.all_methods_shifted || m == culprit);
            let features = if cfg.latent > 0 {
                let z: Vec<f64> = (0..cfg.latent)
                    .map(|j| rng.sample::<f64, _>(StandardNormal) + if shifted && j == 0 { cfg.shift } else { 0.0 })
                    .collect();
                (0..cfg.dim)
                    .map(|d| {
                        let e: f64 = rng.sample(StandardNormal);
                        basis.iter().zip(&z).map(|(b, zj)| b[d] * zj).sum::<f64>() + cfg.noise * e
                    })
                    .collect()
            } else {
                (0..cfg.dim)
                    .map(|d| {
                        let z: f64 = rng.sample(StandardNormal);
                        if shifted && d < cfg.informative {
                            z + cfg.shift
                        } else {
                            z
                        }
                    })
                    .collect()
            };
            out.push(LabeledVector {
                features,
                label,
                commit_id: format!("c{c:05}"),
                method_id: format!("c{c:05}.m{m}"),
                timestamp: 1_600_000_000 + 3600 * c as i64,
            });
        }
    }
    out
}

/// Same vectors with commit labels permuted across commits, which keeps the
/// class balance and destroys any link between features and labels.
pub fn randomize_labels(vectors: &[LabeledVector], seed: u64) -> Vec<LabeledVector> {
    let mut by_commit: BTreeMap<&str, bool> = BTreeMap::new();
    for v in vectors {
        by_commit.insert(&v.commit_id, v.label);
    }
    let ids: Vec<&str> = by_commit.keys().copied().collect();
    let mut labels: Vec<bool> = by_commit.values().copied().collect();
    labels.shuffle(&mut rng_for(seed, "label-shuffle", 0));
    let new: BTreeMap<&str, bool> = ids.into_iter().zip(labels).collect();
    vectors.iter().map(|v| LabeledVector { label: new[v.commit_id.as_str()], ..v.clone() }).collect()
}

/// `k` orthonormal vectors of length `dim` by Gram–Schmidt on Gaussian draws.
fn orthonormal_basis<R: Rng>(dim: usize, k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    while basis.len() < k {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    basis
}
