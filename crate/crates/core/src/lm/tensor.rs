use rand::Rng;

/// Dense row-major matrix of `f64`. Vectors are `n × 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn uniform<R: Rng + ?Sized>(rows: usize, cols: usize, bound: f64, rng: &mut R) -> Self {
        let data = (0..rows * cols).map(|_| rng.random_range(-bound..=bound)).collect();
        Tensor { rows, cols, data }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Dot product with four independent accumulators. The summation order is
/// fixed, so results are reproducible.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `out += alpha * x`
#[inline]
pub fn axpy(out: &mut [f64], alpha: f64, x: &[f64]) {
    debug_assert_eq!(out.len(), x.len());
    for (o, v) in out.iter_mut().zip(x) {
        *o += alpha * v;
    }
}

/// `out += m · x`
#[inline]
pub fn matvec_add(out: &mut [f64], m: &Tensor, x: &[f64]) {
    debug_assert_eq!(out.len(), m.rows);
    debug_assert_eq!(x.len(), m.cols);
    for (r, o) in out.iter_mut().enumerate() {
        *o += dot(m.row(r), x);
    }
}

/// `out += mᵀ · y`
#[inline]
pub fn matvec_t_add(out: &mut [f64], m: &Tensor, y: &[f64]) {
    debug_assert_eq!(out.len(), m.cols);
    debug_assert_eq!(y.len(), m.rows);
    for (r, &yr) in y.iter().enumerate() {
        if yr != 0.0 {
            axpy(out, yr, m.row(r));
        }
    }
}

/// `g += a · bᵀ`
#[inline]
pub fn outer_add(g: &mut Tensor, a: &[f64], b: &[f64]) {
    debug_assert_eq!(g.rows, a.len());
    debug_assert_eq!(g.cols, b.len());
    for (r, &ar) in a.iter().enumerate() {
        if ar != 0.0 {
            axpy(g.row_mut(r), ar, b);
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
