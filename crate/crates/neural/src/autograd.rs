//! Tape-based reverse-mode differentiation over [`Matrix`] values.
//!
//! Nodes are appended in evaluation order, so the reverse of the tape is a
//! valid topological order for the backward sweep.

use crate::tensor::{dot, Matrix};

pub type NodeId = usize;

const LN_EPS: f64 = 1e-5;
const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)

enum Op {
    Leaf,
    Param(usize),
    MatMul(NodeId, NodeId),
    MatMulT(NodeId, NodeId),
    Add(NodeId, NodeId),
    AddRow(NodeId, NodeId),
    Scale(NodeId, f64),
    Relu(NodeId),
    Gelu(NodeId),
    MulConst(NodeId, Vec<f64>),
    LayerNorm { x: NodeId, gamma: NodeId, beta: NodeId, xhat: Matrix, inv_std: Vec<f64> },
    Softmax(NodeId),
    SliceCols(NodeId, usize),
    ConcatCols(Vec<NodeId>),
    Gather(NodeId, Vec<usize>),
    MaskedMean(NodeId, Vec<bool>),
    StackRows(Vec<NodeId>),
    CrossEntropySum { logits: NodeId, targets: Vec<usize>, probs: Matrix },
    SquaredErrorSum { pred: NodeId, targets: Vec<f64> },
}

struct Node {
    value: Matrix,
    op: Op,
}

#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: Matrix, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        self.nodes.len() - 1
    }

    pub fn value(&self, id: NodeId) -> &Matrix {
        &self.nodes[id].value
    }

    pub fn scalar(&self, id: NodeId) -> f64 {
        self.nodes[id].value.data[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn constant(&mut self, value: Matrix) -> NodeId {
        self.push(value, Op::Leaf)
    }

    /// A trainable leaf; its gradient is reported under `index`.
    pub fn param(&mut self, index: usize, value: &Matrix) -> NodeId {
        self.push(value.clone(), Op::Param(index))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a).matmul(self.value(b));
        self.push(v, Op::MatMul(a, b))
    }

    /// `a · bᵀ`
    pub fn matmul_t(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a).matmul_t(self.value(b));
        self.push(v, Op::MatMulT(a, b))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let mut v = self.value(a).clone();
        v.add_assign(self.value(b));
        self.push(v, Op::Add(a, b))
    }

    /// Adds a `1×n` row to every row of `a`.
    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> NodeId {
        let r = self.value(row);
        assert_eq!(r.rows, 1, "add_row expects a single row");
        let mut v = self.value(a).clone();
        assert_eq!(v.cols, r.cols, "add_row width mismatch");
        for i in 0..v.rows {
            for (x, b) in v.row_mut(i).iter_mut().zip(&r.data) {
                *x += b;
            }
        }
        self.push(v, Op::AddRow(a, row))
    }

    pub fn scale(&mut self, a: NodeId, s: f64) -> NodeId {
        let mut v = self.value(a).clone();
        v.scale(s);
        self.push(v, Op::Scale(a, s))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let mut v = self.value(a).clone();
        for x in &mut v.data {
            *x = x.max(0.0);
        }
        self.push(v, Op::Relu(a))
    }

    /// GELU, tanh approximation.
    pub fn gelu(&mut self, a: NodeId) -> NodeId {
        let mut v = self.value(a).clone();
        for x in &mut v.data {
            let t = (GELU_C * (*x + 0.044715 * *x * *x * *x)).tanh();
            *x = 0.5 * *x * (1.0 + t);
        }
        self.push(v, Op::Gelu(a))
    }

    /// Elementwise product with a constant of the same shape (dropout masks).
    pub fn mul_const(&mut self, a: NodeId, factors: Vec<f64>) -> NodeId {
        let mut v = self.value(a).clone();
        assert_eq!(v.data.len(), factors.len(), "mask length mismatch");
        for (x, f) in v.data.iter_mut().zip(&factors) {
            *x *= f;
        }
        self.push(v, Op::MulConst(a, factors))
    }

    /// Row-wise layer normalisation with `1×n` gain and bias.
    pub fn layer_norm(&mut self, x: NodeId, gamma: NodeId, beta: NodeId) -> NodeId {
        let xv = self.value(x);
        let (rows, cols) = xv.shape();
        let g = &self.value(gamma).data;
        let b = &self.value(beta).data;
        let mut xhat = Matrix::zeros(rows, cols);
        let mut out = Matrix::zeros(rows, cols);
        let mut inv_std = Vec::with_capacity(rows);
        for i in 0..rows {
            let row = xv.row(i);
            let mean = row.iter().sum::<f64>() / cols as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / cols as f64;
            let inv = 1.0 / (var + LN_EPS).sqrt();
            inv_std.push(inv);
            for j in 0..cols {
                let h = (row[j] - mean) * inv;
                xhat.data[i * cols + j] = h;
                out.data[i * cols + j] = h * g[j] + b[j];
            }
        }
        self.push(out, Op::LayerNorm { x, gamma, beta, xhat, inv_std })
    }

    /// Row-wise softmax; with `causal`, entry `(i, j)` for `j > i` is masked out.
    pub fn softmax(&mut self, a: NodeId, causal: bool) -> NodeId {
        let mut v = self.value(a).clone();
        let cols = v.cols;
        for i in 0..v.rows {
            let limit = if causal { (i + 1).min(cols) } else { cols };
            let row = v.row_mut(i);
            let max = row[..limit].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for x in &mut row[..limit] {
                *x = (*x - max).exp();
                sum += *x;
            }
            for x in &mut row[..limit] {
                *x /= sum;
            }
            for x in &mut row[limit..] {
                *x = 0.0;
            }
        }
        self.push(v, Op::Softmax(a))
    }

    pub fn slice_cols(&mut self, a: NodeId, start: usize, len: usize) -> NodeId {
        let src = self.value(a);
        let mut v = Matrix::zeros(src.rows, len);
        for i in 0..src.rows {
            v.row_mut(i).copy_from_slice(&src.row(i)[start..start + len]);
        }
        self.push(v, Op::SliceCols(a, start))
    }

    pub fn concat_cols(&mut self, parts: Vec<NodeId>) -> NodeId {
        let rows = self.value(parts[0]).rows;
        let cols: usize = parts.iter().map(|&p| self.value(p).cols).sum();
        let mut v = Matrix::zeros(rows, cols);
        for i in 0..rows {
            let mut off = 0;
            for &p in &parts {
                let src = self.value(p);
                v.row_mut(i)[off..off + src.cols].copy_from_slice(src.row(i));
                off += src.cols;
            }
        }
        self.push(v, Op::ConcatCols(parts))
    }

    /// Selects rows of `table` (embedding lookup).
    pub fn gather(&mut self, table: NodeId, ids: Vec<usize>) -> NodeId {
        let t = self.value(table);
        let mut v = Matrix::zeros(ids.len(), t.cols);
        for (i, &id) in ids.iter().enumerate() {
            v.row_mut(i).copy_from_slice(t.row(id));
        }
        self.push(v, Op::Gather(table, ids))
    }

    /// Mean of the rows whose mask entry is set, as a `1×n` row.
    pub fn masked_mean(&mut self, a: NodeId, mask: Vec<bool>) -> NodeId {
        let src = self.value(a);
        assert_eq!(src.rows, mask.len(), "mask length mismatch");
        let count = mask.iter().filter(|&&m| m).count();
        assert!(count > 0, "masked_mean over an all-masked sequence");
        let mut v = Matrix::zeros(1, src.cols);
        for (i, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
            for (o, x) in v.data.iter_mut().zip(src.row(i)) {
                *o += x;
            }
        }
        v.scale(1.0 / count as f64);
        self.push(v, Op::MaskedMean(a, mask))
    }

    pub fn stack_rows(&mut self, rows: Vec<NodeId>) -> NodeId {
        let cols = self.value(rows[0]).cols;
        let mut data = Vec::with_capacity(rows.len() * cols);
        for &r in &rows {
            let m = self.value(r);
            assert_eq!(m.shape(), (1, cols), "stack_rows expects 1×n rows");
            data.extend_from_slice(&m.data);
        }
        let v = Matrix::from_vec(rows.len(), cols, data);
        self.push(v, Op::StackRows(rows))
    }

    /// Sum over rows of `-log softmax(logits)[target]`, as a `1×1` node.
    pub fn cross_entropy_sum(&mut self, logits: NodeId, targets: Vec<usize>) -> NodeId {
        let l = self.value(logits);
        assert_eq!(l.rows, targets.len(), "one target per row");
        let mut probs = l.clone();
        let mut loss = 0.0;
        for (i, &t) in targets.iter().enumerate() {
            let row = probs.row_mut(i);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = row.iter().map(|x| (x - max).exp()).sum();
            let log_z = max + sum.ln();
            loss += log_z - row[t];
            for x in row.iter_mut() {
                *x = (*x - log_z).exp();
            }
        }
        self.push(Matrix::scalar(loss), Op::CrossEntropySum { logits, targets, probs })
    }

    /// Sum of squared errors of an `n×1` prediction, as a `1×1` node.
    pub fn squared_error_sum(&mut self, pred: NodeId, targets: Vec<f64>) -> NodeId {
        let p = self.value(pred);
        assert_eq!(p.data.len(), targets.len(), "one target per prediction");
        let loss = p.data.iter().zip(&targets).map(|(a, b)| (a - b) * (a - b)).sum();
        self.push(Matrix::scalar(loss), Op::SquaredErrorSum { pred, targets })
    }

    /// Reverse sweep from a `1×1` root; returns gradients indexed by parameter
    /// index (`None` for parameters the root does not depend on).
    pub fn backward(&self, root: NodeId, n_params: usize) -> Vec<Option<Matrix>> {
        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root] = Some(Matrix::scalar(1.0));
        let mut params: Vec<Option<Matrix>> = (0..n_params).map(|_| None).collect();

        fn acc(grads: &mut [Option<Matrix>], id: NodeId, g: Matrix) {
            match &mut grads[id] {
                Some(existing) => existing.add_assign(&g),
                slot => *slot = Some(g),
            }
        }

        for id in (0..=root).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &self.nodes[id];
            match &node.op {
                Op::Leaf => {}
                Op::Param(p) => match &mut params[*p] {
                    Some(existing) => existing.add_assign(&g),
                    slot => *slot = Some(g),
                },
                Op::MatMul(a, b) => {
                    let ga = g.matmul_t(self.value(*b));
                    let gb = self.value(*a).t_matmul(&g);
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::MatMulT(a, b) => {
                    let ga = g.matmul(self.value(*b));
                    let gb = g.t_matmul(self.value(*a));
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *a, g.clone());
                    acc(&mut grads, *b, g);
                }
                Op::AddRow(a, row) => {
                    let mut gr = Matrix::zeros(1, g.cols);
                    for i in 0..g.rows {
                        for (o, x) in gr.data.iter_mut().zip(g.row(i)) {
                            *o += x;
                        }
                    }
                    acc(&mut grads, *row, gr);
                    acc(&mut grads, *a, g);
                }
                Op::Scale(a, s) => {
                    let mut ga = g;
                    ga.scale(*s);
                    acc(&mut grads, *a, ga);
                }
                Op::Relu(a) => {
                    let mut ga = g;
                    for (x, y) in ga.data.iter_mut().zip(&self.value(*a).data) {
                        if *y <= 0.0 {
                            *x = 0.0;
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::Gelu(a) => {
                    let mut ga = g;
                    for (gx, &x) in ga.data.iter_mut().zip(&self.value(*a).data) {
                        let u = GELU_C * (x + 0.044715 * x * x * x);
                        let t = u.tanh();
                        let du = GELU_C * (1.0 + 3.0 * 0.044715 * x * x);
                        *gx *= 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::MulConst(a, factors) => {
                    let mut ga = g;
                    for (x, f) in ga.data.iter_mut().zip(factors) {
                        *x *= f;
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::LayerNorm { x, gamma, beta, xhat, inv_std } => {
                    let gv = &self.value(*gamma).data;
                    let (rows, cols) = g.shape();
                    let mut gx = Matrix::zeros(rows, cols);
                    let mut ggamma = Matrix::zeros(1, cols);
                    let mut gbeta = Matrix::zeros(1, cols);
                    for i in 0..rows {
                        let gr = g.row(i);
                        let hr = xhat.row(i);
                        let mut dh = vec![0.0; cols];
                        for j in 0..cols {
                            ggamma.data[j] += gr[j] * hr[j];
                            gbeta.data[j] += gr[j];
                            dh[j] = gr[j] * gv[j];
                        }
                        let sum_dh: f64 = dh.iter().sum();
                        let sum_dh_h = dot(&dh, hr);
                        let n = cols as f64;
                        let out = gx.row_mut(i);
                        for j in 0..cols {
                            out[j] = inv_std[i] / n * (n * dh[j] - sum_dh - hr[j] * sum_dh_h);
                        }
                    }
                    acc(&mut grads, *x, gx);
                    acc(&mut grads, *gamma, ggamma);
                    acc(&mut grads, *beta, gbeta);
                }
                Op::Softmax(a) => {
                    let p = &node.value;
                    let mut ga = Matrix::zeros(p.rows, p.cols);
                    for i in 0..p.rows {
                        let pr = p.row(i);
                        let gr = g.row(i);
                        let inner = dot(pr, gr);
                        for (o, (pv, gv)) in ga.row_mut(i).iter_mut().zip(pr.iter().zip(gr)) {
                            *o = pv * (gv - inner);
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::SliceCols(a, start) => {
                    let src = self.value(*a);
                    let mut ga = Matrix::zeros(src.rows, src.cols);
                    for i in 0..g.rows {
                        ga.row_mut(i)[*start..*start + g.cols].copy_from_slice(g.row(i));
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::ConcatCols(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let w = self.value(p).cols;
                        let mut gp = Matrix::zeros(g.rows, w);
                        for i in 0..g.rows {
                            gp.row_mut(i).copy_from_slice(&g.row(i)[off..off + w]);
                        }
                        off += w;
                        acc(&mut grads, p, gp);
                    }
                }
                Op::Gather(table, ids) => {
                    let t = self.value(*table);
                    let mut gt = Matrix::zeros(t.rows, t.cols);
                    for (i, &id) in ids.iter().enumerate() {
                        for (o, x) in gt.row_mut(id).iter_mut().zip(g.row(i)) {
                            *o += x;
                        }
                    }
                    acc(&mut grads, *table, gt);
                }
                Op::MaskedMean(a, mask) => {
                    let src = self.value(*a);
                    let count = mask.iter().filter(|&&m| m).count() as f64;
                    let mut ga = Matrix::zeros(src.rows, src.cols);
                    for (i, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
                        for (o, x) in ga.row_mut(i).iter_mut().zip(&g.data) {
                            *o = x / count;
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::StackRows(rows) => {
                    for (i, &r) in rows.iter().enumerate() {
                        acc(&mut grads, r, Matrix::from_vec(1, g.cols, g.row(i).to_vec()));
                    }
                }
                Op::CrossEntropySum { logits, targets, probs } => {
                    let s = g.data[0];
                    let mut gl = probs.clone();
                    for (i, &t) in targets.iter().enumerate() {
                        gl.row_mut(i)[t] -= 1.0;
                    }
                    gl.scale(s);
                    acc(&mut grads, *logits, gl);
                }
                Op::SquaredErrorSum { pred, targets } => {
                    let s = g.data[0];
                    let p = self.value(*pred);
                    let data = p.data.iter().zip(targets).map(|(a, b)| 2.0 * (a - b) * s).collect();
                    acc(&mut grads, *pred, Matrix::from_vec(p.rows, p.cols, data));
                }
            }
        }
        params
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
        Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    /// Central-difference check of every entry of every parameter.
    fn check(params: &[Matrix], build: impl Fn(&mut Graph, &[NodeId]) -> NodeId) {
        let eval = |ps: &[Matrix]| {
            let mut g = Graph::new();
            let ids: Vec<NodeId> = ps.iter().enumerate().map(|(i, p)| g.param(i, p)).collect();
            let root = build(&mut g, &ids);
            (g.scalar(root), g, root)
        };
        let (_, g, root) = eval(params);
        let grads = g.backward(root, params.len());
        let eps = 1e-6;
        for (pi, p) in params.iter().enumerate() {
            for k in 0..p.len() {
                let mut plus = params.to_vec();
                plus[pi].data[k] += eps;
                let mut minus = params.to_vec();
                minus[pi].data[k] -= eps;
                let numeric = (eval(&plus).0 - eval(&minus).0) / (2.0 * eps);
                let analytic = grads[pi].as_ref().map_or(0.0, |m| m.data[k]);
                let scale = numeric.abs().max(analytic.abs()).max(1e-6);
                assert!(
                    (numeric - analytic).abs() / scale < 1e-6,
                    "param {pi}[{k}]: analytic {analytic} numeric {numeric}"
                );
            }
        }
    }

    #[test]
    fn attention_block_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = vec![random(4, 6, &mut rng), random(6, 6, &mut rng), random(1, 6, &mut rng), random(1, 6, &mut rng)];
        check(&params, |g, p| {
            let ln = g.layer_norm(p[0], p[2], p[3]);
            let q = g.matmul(ln, p[1]);
            let a = g.slice_cols(q, 0, 3);
            let b = g.slice_cols(q, 3, 3);
            let s = g.matmul_t(a, b);
            let s = g.scale(s, 0.5);
            let pr = g.softmax(s, true);
            let o = g.matmul(pr, b);
            let c = g.concat_cols(vec![o, a]);
            let c = g.gelu(c);
            let m = g.masked_mean(c, vec![true, false, true, true]);
            let m2 = g.relu(m);
            let st = g.stack_rows(vec![m2, m]);
            g.cross_entropy_sum(st, vec![1, 4])
        });
    }

    #[test]
    fn embedding_and_regression_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = vec![random(5, 3, &mut rng), random(3, 1, &mut rng), random(1, 1, &mut rng)];
        check(&params, |g, p| {
            let e = g.gather(p[0], vec![4, 1, 4]);
            let e = g.mul_const(e, vec![1.0, 0.0, 2.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5]);
            let y = g.matmul(e, p[1]);
            let y = g.add_row(y, p[2]);
            let l = g.squared_error_sum(y, vec![1.0, -2.0, 0.5]);
            let l2 = g.scale(l, 0.3);
            g.add(l, l2)
        });
    }

    #[test]
    fn causal_softmax_masks_future() {
        let mut g = Graph::new();
        let a = g.constant(Matrix::from_rows(&[vec![1.0, 5.0], vec![1.0, 1.0]]));
        let p = g.softmax(a, true);
        assert_eq!(g.value(p).data, vec![1.0, 0.0, 0.5, 0.5]);
    }
}
