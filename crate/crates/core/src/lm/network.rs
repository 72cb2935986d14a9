//! Child-Sum TreeLSTM forward and reverse-mode passes over encoded trees.
//!
//! For a node `j` with label embedding `x` and children `C(j)`:
//!
//! ```text
//! h̃    = Σ_k h_k
//! i    = σ(W_i x + U_i h̃ + b_i)
//! f_k  = σ(W_f x + U_f h_k + b_f)        for every child k
//! o    = σ(W_o x + U_o h̃ + b_o)
//! u    = tanh(W_u x + U_u h̃ + b_u)
//! c    = i ⊙ u + Σ_k f_k ⊙ c_k
//! h    = o ⊙ tanh(c)
//! ```
//!
//! The prediction head reads the root state:
//! `logits = W_out · tanh(W_hid · h_root + b_hid) + b_out`.
//!
//! `W_g x` depends only on the label, so it is computed once per distinct
//! label in a batch; the matching weight and embedding gradients are
//! likewise accumulated per label and expanded once per batch.

use super::encode::{EncodedExample, EncodedTree};
use super::params::ModelParams;
use super::tensor::{axpy, matvec_add, matvec_t_add, outer_add, sigmoid};

/// Per-batch cache of `[W_i x | W_f x | W_o x | W_u x]` for each label.
pub(crate) struct LabelProjections {
    hidden: usize,
    values: Vec<f64>,
    ready: Vec<bool>,
}

impl LabelProjections {
    pub(crate) fn new(params: &ModelParams) -> Self {
        let d = params.dims;
        LabelProjections { hidden: d.hidden, values: vec![0.0; d.vocab * 4 * d.hidden], ready: vec![false; d.vocab] }
    }

    fn get(&mut self, params: &ModelParams, label: u32) -> &[f64] {
        let h = self.hidden;
        let l = label as usize;
        let block = &mut self.values[l * 4 * h..(l + 1) * 4 * h];
        if !self.ready[l] {
            block.fill(0.0);
            let x = params.embedding.row(l);
            let (bi, rest) = block.split_at_mut(h);
            let (bf, rest) = rest.split_at_mut(h);
            let (bo, bu) = rest.split_at_mut(h);
            matvec_add(bi, &params.w_i, x);
            matvec_add(bf, &params.w_f, x);
            matvec_add(bo, &params.w_o, x);
            matvec_add(bu, &params.w_u, x);
            self.ready[l] = true;
        }
        &self.values[l * 4 * h..(l + 1) * 4 * h]
    }
}

/// Activations of one tree, kept for the backward pass.
pub(crate) struct TreeCache {
    hidden: usize,
    pub h: Vec<f64>,
    pub c: Vec<f64>,
    i: Vec<f64>,
    o: Vec<f64>,
    u: Vec<f64>,
    tanh_c: Vec<f64>,
    /// Forget gate applied by a node's parent to this node's cell.
    forget: Vec<f64>,
    hsum: Vec<f64>,
    pub head_hidden: Vec<f64>,
    pub logits: Vec<f64>,
}

impl TreeCache {
    pub(crate) fn root_hidden(&self) -> &[f64] {
        &self.h[..self.hidden]
    }
}

fn slot(v: &[f64], node: usize, h: usize) -> &[f64] {
    &v[node * h..(node + 1) * h]
}

fn slot_mut(v: &mut [f64], node: usize, h: usize) -> &mut [f64] {
    &mut v[node * h..(node + 1) * h]
}

pub(crate) fn forward_tree(tree: &EncodedTree, params: &ModelParams, proj: &mut LabelProjections) -> TreeCache {
    let hd = params.dims.hidden;
    let n = tree.len();
    let mut cache = TreeCache {
        hidden: hd,
        h: vec![0.0; n * hd],
        c: vec![0.0; n * hd],
        i: vec![0.0; n * hd],
        o: vec![0.0; n * hd],
        u: vec![0.0; n * hd],
        tanh_c: vec![0.0; n * hd],
        forget: vec![0.0; n * hd],
        hsum: vec![0.0; n * hd],
        head_hidden: Vec::new(),
        logits: Vec::new(),
    };
    let mut a_i = vec![0.0; hd];
    let mut a_o = vec![0.0; hd];
    let mut a_u = vec![0.0; hd];
    let mut a_f = vec![0.0; hd];
    // reverse pre-order visits children before parents
    for j in (0..n).rev() {
        let wx = proj.get(params, tree.labels[j]);
        let (wx_i, rest) = wx.split_at(hd);
        let (wx_f, rest) = rest.split_at(hd);
        let (wx_o, wx_u) = rest.split_at(hd);
        let kids = &tree.children[j];

        let mut hsum = vec![0.0; hd];
        for &k in kids {
            axpy(&mut hsum, 1.0, slot(&cache.h, k, hd));
        }
        for r in 0..hd {
            a_i[r] = wx_i[r] + params.b_i.data[r];
            a_o[r] = wx_o[r] + params.b_o.data[r];
            a_u[r] = wx_u[r] + params.b_u.data[r];
        }
        if !kids.is_empty() {
            matvec_add(&mut a_i, &params.u_i, &hsum);
            matvec_add(&mut a_o, &params.u_o, &hsum);
            matvec_add(&mut a_u, &params.u_u, &hsum);
        }
        let mut c = vec![0.0; hd];
        for r in 0..hd {
            let (gi, go, gu) = (sigmoid(a_i[r]), sigmoid(a_o[r]), a_u[r].tanh());
            cache.i[j * hd + r] = gi;
            cache.o[j * hd + r] = go;
            cache.u[j * hd + r] = gu;
            c[r] = gi * gu;
        }
        for &k in kids {
            for r in 0..hd {
                a_f[r] = wx_f[r] + params.b_f.data[r];
            }
            matvec_add(&mut a_f, &params.u_f, slot(&cache.h, k, hd));
            let ck = slot(&cache.c, k, hd);
            let fk = slot_mut(&mut cache.forget, k, hd);
            for r in 0..hd {
                fk[r] = sigmoid(a_f[r]);
                c[r] += fk[r] * ck[r];
            }
        }
        for r in 0..hd {
            let t = c[r].tanh();
            cache.tanh_c[j * hd + r] = t;
            cache.h[j * hd + r] = cache.o[j * hd + r] * t;
        }
        slot_mut(&mut cache.c, j, hd).copy_from_slice(&c);
        slot_mut(&mut cache.hsum, j, hd).copy_from_slice(&hsum);
    }

    let mut z = params.head_hidden_b.data.clone();
    matvec_add(&mut z, &params.head_hidden_w, cache.root_hidden());
    let a: Vec<f64> = z.iter().map(|v| v.tanh()).collect();
    let mut logits = params.head_out_b.data.clone();
    matvec_add(&mut logits, &params.head_out_w, &a);
    cache.head_hidden = a;
    cache.logits = logits;
    cache
}

/// Numerically stable `log Σ exp`.
pub fn log_sum_exp(logits: &[f64]) -> f64 {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(logits);
    logits.iter().map(|l| (l - lse).exp()).collect()
}

/// Gradient accumulator for a batch: dense parameter gradients plus per-label
/// sums of gate pre-activation gradients, expanded in [`Self::finish`].
pub(crate) struct BatchGrad {
    pub grads: ModelParams,
    label_sums: Vec<f64>,
    touched: Vec<bool>,
}

impl BatchGrad {
    pub(crate) fn new(params: &ModelParams) -> Self {
        let d = params.dims;
        BatchGrad {
            grads: ModelParams::zeros(d),
            label_sums: vec![0.0; d.vocab * 4 * d.hidden],
            touched: vec![false; d.vocab],
        }
    }

    /// Folds the per-label sums into `W_*` and embedding gradients.
    pub(crate) fn finish(mut self, params: &ModelParams) -> ModelParams {
        let hd = params.dims.hidden;
        for l in 0..params.dims.vocab {
            if !self.touched[l] {
                continue;
            }
            let s = &self.label_sums[l * 4 * hd..(l + 1) * 4 * hd];
            let (s_i, rest) = s.split_at(hd);
            let (s_f, rest) = rest.split_at(hd);
            let (s_o, s_u) = rest.split_at(hd);
            let x = params.embedding.row(l);
            outer_add(&mut self.grads.w_i, s_i, x);
            outer_add(&mut self.grads.w_f, s_f, x);
            outer_add(&mut self.grads.w_o, s_o, x);
            outer_add(&mut self.grads.w_u, s_u, x);
            let dx = self.grads.embedding.row_mut(l);
            matvec_t_add(dx, &params.w_i, s_i);
            matvec_t_add(dx, &params.w_f, s_f);
            matvec_t_add(dx, &params.w_o, s_o);
            matvec_t_add(dx, &params.w_u, s_u);
        }
        self.grads
    }
}

/// Backpropagates `weight · (−ln softmax(logits)[target])` through one tree
/// and returns the unweighted loss.
pub(crate) fn backward_tree(
    example: &EncodedExample,
    cache: &TreeCache,
    params: &ModelParams,
    weight: f64,
    acc: &mut BatchGrad,
) -> f64 {
    let tree = &example.tree;
    let hd = params.dims.hidden;
    let n = tree.len();
    let g = &mut acc.grads;

    // head
    let lse = log_sum_exp(&cache.logits);
    let loss = lse - cache.logits[example.target as usize];
    let mut dlogits: Vec<f64> = cache.logits.iter().map(|l| weight * (l - lse).exp()).collect();
    dlogits[example.target as usize] -= weight;
    outer_add(&mut g.head_out_w, &dlogits, &cache.head_hidden);
    axpy(&mut g.head_out_b.data, 1.0, &dlogits);
    let mut da = vec![0.0; params.dims.head];
    matvec_t_add(&mut da, &params.head_out_w, &dlogits);
    let dz: Vec<f64> = da.iter().zip(&cache.head_hidden).map(|(d, a)| d * (1.0 - a * a)).collect();
    outer_add(&mut g.head_hidden_w, &dz, cache.root_hidden());
    axpy(&mut g.head_hidden_b.data, 1.0, &dz);

    let mut dh = vec![0.0; n * hd];
    let mut dc = vec![0.0; n * hd];
    matvec_t_add(&mut dh[..hd], &params.head_hidden_w, &dz);

    let mut da_i = vec![0.0; hd];
    let mut da_o = vec![0.0; hd];
    let mut da_u = vec![0.0; hd];
    let mut da_f = vec![0.0; hd];
    let mut dhsum = vec![0.0; hd];
    // pre-order visits parents before children
    for j in 0..n {
        let base = j * hd;
        for r in 0..hd {
            let (o, t, i, u) = (cache.o[base + r], cache.tanh_c[base + r], cache.i[base + r], cache.u[base + r]);
            let dhj = dh[base + r];
            let dcj = dc[base + r] + dhj * o * (1.0 - t * t);
            dc[base + r] = dcj;
            da_o[r] = dhj * t * o * (1.0 - o);
            da_i[r] = dcj * u * i * (1.0 - i);
            da_u[r] = dcj * i * (1.0 - u * u);
        }
        let label = tree.labels[j] as usize;
        acc.touched[label] = true;
        {
            let sums = &mut acc.label_sums[label * 4 * hd..(label + 1) * 4 * hd];
            axpy(&mut sums[..hd], 1.0, &da_i);
            axpy(&mut sums[2 * hd..3 * hd], 1.0, &da_o);
            axpy(&mut sums[3 * hd..], 1.0, &da_u);
        }
        axpy(&mut g.b_i.data, 1.0, &da_i);
        axpy(&mut g.b_o.data, 1.0, &da_o);
        axpy(&mut g.b_u.data, 1.0, &da_u);

        let kids = &tree.children[j];
        if kids.is_empty() {
            continue;
        }
        let hsum = slot(&cache.hsum, j, hd);
        outer_add(&mut g.u_i, &da_i, hsum);
        outer_add(&mut g.u_o, &da_o, hsum);
        outer_add(&mut g.u_u, &da_u, hsum);
        dhsum.fill(0.0);
        matvec_t_add(&mut dhsum, &params.u_i, &da_i);
        matvec_t_add(&mut dhsum, &params.u_o, &da_o);
        matvec_t_add(&mut dhsum, &params.u_u, &da_u);

        for &k in kids {
            let kb = k * hd;
            for r in 0..hd {
                let f = cache.forget[kb + r];
                let dcj = dc[base + r];
                da_f[r] = dcj * cache.c[kb + r] * f * (1.0 - f);
                dc[kb + r] += dcj * f;
            }
            {
                let sums = &mut acc.label_sums[label * 4 * hd..(label + 1) * 4 * hd];
                axpy(&mut sums[hd..2 * hd], 1.0, &da_f);
            }
            axpy(&mut g.b_f.data, 1.0, &da_f);
            outer_add(&mut g.u_f, &da_f, slot(&cache.h, k, hd));
            let dhk = &mut dh[kb..kb + hd];
            axpy(dhk, 1.0, &dhsum);
            matvec_t_add(dhk, &params.u_f, &da_f);
        }
    }
    loss
}
