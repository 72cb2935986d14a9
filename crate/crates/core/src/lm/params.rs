use rand::Rng;

use super::tensor::Tensor;

/// Layer widths of the tree language model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub vocab: usize,
    /// Label embedding width.
    pub embed: usize,
    /// LSTM memory cell width; also the width of tree embeddings.
    pub hidden: usize,
    /// Hidden layer of the prediction head.
    pub head: usize,
}

impl ModelDims {
    pub const DEFAULT_EMBED: usize = 150;
    pub const DEFAULT_HIDDEN: usize = 75;
    pub const DEFAULT_HEAD: usize = 25;

    pub fn with_vocab(vocab: usize) -> Self {
        ModelDims { vocab, embed: Self::DEFAULT_EMBED, hidden: Self::DEFAULT_HIDDEN, head: Self::DEFAULT_HEAD }
    }
}

/// Names of the parameter tensors in storage order.
pub const TENSOR_NAMES: [&str; 17] = [
    "embedding",
    "w_i",
    "w_f",
    "w_o",
    "w_u",
    "u_i",
    "u_f",
    "u_o",
    "u_u",
    "b_i",
    "b_f",
    "b_o",
    "b_u",
    "head_hidden_w",
    "head_hidden_b",
    "head_out_w",
    "head_out_b",
];

/// All trainable tensors of the Child-Sum TreeLSTM and its prediction head.
///
/// Gate naming: `i` input, `f` forget (one per child), `o` output, `u`
/// candidate update. `w_*` act on the node's label embedding, `u_*` on the
/// child hidden states. The same struct holds gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub dims: ModelDims,
    pub embedding: Tensor,
    pub w_i: Tensor,
    pub w_f: Tensor,
    pub w_o: Tensor,
    pub w_u: Tensor,
    pub u_i: Tensor,
    pub u_f: Tensor,
    pub u_o: Tensor,
    pub u_u: Tensor,
    pub b_i: Tensor,
    pub b_f: Tensor,
    pub b_o: Tensor,
    pub b_u: Tensor,
    pub head_hidden_w: Tensor,
    pub head_hidden_b: Tensor,
    pub head_out_w: Tensor,
    pub head_out_b: Tensor,
}

impl ModelParams {
    pub fn zeros(dims: ModelDims) -> Self {
        let ModelDims { vocab, embed, hidden, head } = dims;
        let m = |r, c| Tensor::zeros(r, c);
        ModelParams {
            dims,
            embedding: m(vocab, embed),
            w_i: m(hidden, embed),
            w_f: m(hidden, embed),
            w_o: m(hidden, embed),
            w_u: m(hidden, embed),
            u_i: m(hidden, hidden),
            u_f: m(hidden, hidden),
            u_o: m(hidden, hidden),
            u_u: m(hidden, hidden),
            b_i: m(hidden, 1),
            b_f: m(hidden, 1),
            b_o: m(hidden, 1),
            b_u: m(hidden, 1),
            head_hidden_w: m(head, hidden),
            head_hidden_b: m(head, 1),
            head_out_w: m(vocab, head),
            head_out_b: m(vocab, 1),
        }
    }

    /// Uniform in `±1/√fan_in`, where `fan_in` is the width of the input a
    /// tensor is applied to (biases share the bound of their weight).
    pub fn init<R: Rng + ?Sized>(dims: ModelDims, rng: &mut R) -> Self {
        let mut p = Self::zeros(dims);
        let ModelDims { embed, hidden, head, .. } = dims;
        for (name, t) in p.tensors_mut() {
            let fan_in = match name {
                "embedding" => embed,
                n if n.starts_with("w_") || n.starts_with("b_") => embed,
                n if n.starts_with("u_") => hidden,
                "head_hidden_w" | "head_hidden_b" => hidden,
                _ => head,
            };
            let bound = 1.0 / (fan_in as f64).sqrt();
            *t = Tensor::uniform(t.rows, t.cols, bound, rng);
        }
        p
    }

    pub fn tensors(&self) -> [(&'static str, &Tensor); 17] {
        [
            ("embedding", &self.embedding),
            ("w_i", &self.w_i),
            ("w_f", &self.w_f),
            ("w_o", &self.w_o),
            ("w_u", &self.w_u),
            ("u_i", &self.u_i),
            ("u_f", &self.u_f),
            ("u_o", &self.u_o),
            ("u_u", &self.u_u),
            ("b_i", &self.b_i),
            ("b_f", &self.b_f),
            ("b_o", &self.b_o),
            ("b_u", &self.b_u),
            ("head_hidden_w", &self.head_hidden_w),
            ("head_hidden_b", &self.head_hidden_b),
            ("head_out_w", &self.head_out_w),
            ("head_out_b", &self.head_out_b),
        ]
    }

    pub fn tensors_mut(&mut self) -> [(&'static str, &mut Tensor); 17] {
        [
            ("embedding", &mut self.embedding),
            ("w_i", &mut self.w_i),
            ("w_f", &mut self.w_f),
            ("w_o", &mut self.w_o),
            ("w_u", &mut self.w_u),
            ("u_i", &mut self.u_i),
            ("u_f", &mut self.u_f),
            ("u_o", &mut self.u_o),
            ("u_u", &mut self.u_u),
            ("b_i", &mut self.b_i),
            ("b_f", &mut self.b_f),
            ("b_o", &mut self.b_o),
            ("b_u", &mut self.b_u),
            ("head_hidden_w", &mut self.head_hidden_w),
            ("head_hidden_b", &mut self.head_hidden_b),
            ("head_out_w", &mut self.head_out_w),
            ("head_out_b", &mut self.head_out_b),
        ]
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.is_finite())
    }

    /// Checks every tensor shape against `dims`.
    pub fn shapes_consistent(&self) -> bool {
        let reference = Self::zeros(self.dims);
        self.tensors()
            .iter()
            .zip(reference.tensors().iter())
            .all(|((_, a), (_, b))| a.rows == b.rows && a.cols == b.cols)
    }
}
