use crate::tree::{AstTree, MaskedExample, Vocabulary};

use super::encode::{EncodedExample, EncodedTree};
use super::network::{backward_tree, forward_tree, log_sum_exp, BatchGrad, LabelProjections};
use super::params::ModelParams;
use super::tensor::{matvec_add, sigmoid};
use super::ModelError;

fn check_dims(params: &ModelParams, vocab: Option<&Vocabulary>) -> Result<(), ModelError> {
    if !params.shapes_consistent() {
        return Err(ModelError::DimensionMismatch("parameter shapes disagree with model dims".into()));
    }
    if let Some(v) = vocab {
        if v.len() != params.dims.vocab {
            return Err(ModelError::DimensionMismatch(format!(
                "vocabulary has {} entries, model expects {}",
                v.len(),
                params.dims.vocab
            )));
        }
    }
    Ok(())
}

/// One Child-Sum TreeLSTM cell: returns `(h_j, c_j)` for input `x` and the
/// `(h_k, c_k)` states of the node's children. With no children the summed
/// child state is the zero vector.
pub fn cell_forward(
    x: &[f64],
    children: &[(&[f64], &[f64])],
    params: &ModelParams,
) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    let d = params.dims;
    if x.len() != d.embed {
        return Err(ModelError::DimensionMismatch(format!("input has width {}, expected {}", x.len(), d.embed)));
    }
    if children.iter().any(|(h, c)| h.len() != d.hidden || c.len() != d.hidden) {
        return Err(ModelError::DimensionMismatch(format!("child state width differs from {}", d.hidden)));
    }
    check_dims(params, None)?;
    let hd = d.hidden;
    let mut hsum = vec![0.0; hd];
    for (h, _) in children {
        for r in 0..hd {
            hsum[r] += h[r];
        }
    }
    let gate = |w, u, b: &super::tensor::Tensor, hin: &[f64]| {
        let mut a = b.data.clone();
        matvec_add(&mut a, w, x);
        matvec_add(&mut a, u, hin);
        a
    };
    let i: Vec<f64> = gate(&params.w_i, &params.u_i, &params.b_i, &hsum).into_iter().map(sigmoid).collect();
    let o: Vec<f64> = gate(&params.w_o, &params.u_o, &params.b_o, &hsum).into_iter().map(sigmoid).collect();
    let u: Vec<f64> = gate(&params.w_u, &params.u_u, &params.b_u, &hsum).into_iter().map(f64::tanh).collect();
    let mut c: Vec<f64> = i.iter().zip(&u).map(|(a, b)| a * b).collect();
    for (hk, ck) in children {
        let f: Vec<f64> = gate(&params.w_f, &params.u_f, &params.b_f, hk).into_iter().map(sigmoid).collect();
        for r in 0..hd {
            c[r] += f[r] * ck[r];
        }
    }
    let h = o.iter().zip(&c).map(|(o, c)| o * c.tanh()).collect();
    Ok((h, c))
}

/// Logits over the vocabulary and the root hidden state.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeOutput {
    pub logits: Vec<f64>,
    pub h_root: Vec<f64>,
}

impl TreeOutput {
    pub fn probabilities(&self) -> Vec<f64> {
        super::network::softmax(&self.logits)
    }
}

pub fn forward_encoded(tree: &EncodedTree, params: &ModelParams) -> TreeOutput {
    let mut proj = LabelProjections::new(params);
    let cache = forward_tree(tree, params, &mut proj);
    TreeOutput { h_root: cache.root_hidden().to_vec(), logits: cache.logits }
}

/// Bottom-up evaluation of a masked tree followed by the prediction head.
pub fn tree_forward(
    example: &MaskedExample,
    vocab: &Vocabulary,
    params: &ModelParams,
) -> Result<TreeOutput, ModelError> {
    check_dims(params, Some(vocab))?;
    let enc = EncodedTree::encode_strict(&example.tree, vocab)?;
    Ok(forward_encoded(&enc, params))
}

/// Mean negative log-likelihood (nats) of a batch and its exact gradient.
pub fn loss_and_gradients_encoded(
    batch: &[EncodedExample],
    params: &ModelParams,
) -> Result<(f64, ModelParams), ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let weight = 1.0 / batch.len() as f64;
    let mut proj = LabelProjections::new(params);
    let mut acc = BatchGrad::new(params);
    let mut total = 0.0;
    for ex in batch {
        let cache = forward_tree(&ex.tree, params, &mut proj);
        total += backward_tree(ex, &cache, params, weight, &mut acc);
    }
    Ok((total * weight, acc.finish(params)))
}

pub fn loss_and_gradients(
    batch: &[MaskedExample],
    vocab: &Vocabulary,
    params: &ModelParams,
) -> Result<(f64, ModelParams), ModelError> {
    check_dims(params, Some(vocab))?;
    let enc = batch.iter().map(|e| EncodedExample::from_masked(e, vocab)).collect::<Result<Vec<_>, _>>()?;
    loss_and_gradients_encoded(&enc, params)
}

/// Natural-log probability the model assigns to each example's target.
pub fn target_log_probs(batch: &[EncodedExample], params: &ModelParams) -> Vec<f64> {
    let mut proj = LabelProjections::new(params);
    batch
        .iter()
        .map(|ex| {
            let cache = forward_tree(&ex.tree, params, &mut proj);
            cache.logits[ex.target as usize] - log_sum_exp(&cache.logits)
        })
        .collect()
}

/// Root hidden state of the unmasked tree; out-of-vocabulary labels map to
/// `UNK`.
pub fn embed_tree(tree: &AstTree, vocab: &Vocabulary, params: &ModelParams) -> Result<Vec<f64>, ModelError> {
    check_dims(params, Some(vocab))?;
    let enc = EncodedTree::encode_lossy(tree, vocab);
    Ok(forward_encoded(&enc, params).h_root)
}
