//! Immediate-mode computation graph with reverse-mode differentiation.
//!
//! Values are computed eagerly as nodes are created; `backward` walks the
//! tape in reverse, accumulating exact analytic gradients into every leaf
//! that requires them. A graph instance is single-threaded; independent
//! graphs may run on separate threads.

use crate::error::AdError;
use crate::tensor::{matmul, matmul_nt, matmul_tn, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub(crate) usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Div(NodeId, NodeId),
    Neg(NodeId),
    Scale(NodeId, f64),
    AddScalar(NodeId),
    MatMul(NodeId, NodeId),
    Transpose(NodeId),
    Relu(NodeId),
    Silu(NodeId),
    Abs(NodeId),
    Sqrt(NodeId),
    Exp(NodeId),
    SoftmaxRows(NodeId),
    LayerNormRows(NodeId, f64),
    AddRow(NodeId, NodeId),
    MulRow(NodeId, NodeId),
    MulCol(NodeId, NodeId),
    DivCol(NodeId, NodeId),
    ConcatCols(NodeId, NodeId),
    ConcatRows(NodeId, NodeId),
    SliceCols(NodeId, usize, usize),
    SliceRows(NodeId, usize, usize),
    Reshape(NodeId),
    PadCols(NodeId, usize, usize),
    SumAll(NodeId),
    MeanAll(NodeId),
    RowSums(NodeId),
    ColSums(NodeId),
    CumsumRows(NodeId),
    GatherRows(NodeId, Vec<usize>),
    RepeatRows(NodeId, usize),
    Minimum(NodeId, NodeId),
    Clamp(NodeId, f64, f64),
}

struct Node {
    op: Op,
    value: Tensor,
    grad: Option<Tensor>,
    requires_grad: bool,
}

/// The tape. Node ids are creation-ordered, which is already a topological
/// order of the DAG.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Differentiable input (parameters, trainable tables).
    pub fn leaf(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Leaf, value, true)
    }

    /// Non-differentiable input (data, masks, constants).
    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Leaf, value, false)
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn grad(&self, id: NodeId) -> Option<&Tensor> {
        self.nodes[id.0].grad.as_ref()
    }

    fn push(&mut self, op: Op, value: Tensor, requires_grad: bool) -> NodeId {
        self.nodes.push(Node {
            op,
            value,
            grad: None,
            requires_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn push_op(&mut self, op: Op, value: Tensor, inputs: &[NodeId]) -> NodeId {
        let rg = inputs.iter().any(|i| self.nodes[i.0].requires_grad);
        self.push(op, value, rg)
    }

    fn shape(&self, id: NodeId) -> (usize, usize) {
        self.nodes[id.0].value.shape()
    }

    fn check_same(&self, op: &'static str, a: NodeId, b: NodeId) -> Result<(), AdError> {
        if self.shape(a) != self.shape(b) {
            return Err(AdError::ShapeMismatch {
                op,
                a: self.shape(a),
                b: self.shape(b),
            });
        }
        Ok(())
    }

    // ---- elementwise ----

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AdError> {
        self.check_same("add", a, b)?;
        let mut v = self.nodes[a.0].value.clone();
        v.add_assign(&self.nodes[b.0].value);
        Ok(self.push_op(Op::Add(a, b), v, &[a, b]))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AdError> {
        self.check_same("sub", a, b)?;
        let v = zip_map(&self.nodes[a.0].value, &self.nodes[b.0].value, |x, y| x - y);
        Ok(self.push_op(Op::Sub(a, b), v, &[a, b]))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AdError> {
        self.check_same("mul", a, b)?;
        let v = zip_map(&self.nodes[a.0].value, &self.nodes[b.0].value, |x, y| x * y);
        Ok(self.push_op(Op::Mul(a, b), v, &[a, b]))
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AdError> {
        self.check_same("div", a, b)?;
        let v = zip_map(&self.nodes[a.0].value, &self.nodes[b.0].value, |x, y| x / y);
        Ok(self.push_op(Op::Div(a, b), v, &[a, b]))
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a.0].value.map(|x| -x);
        self.push_op(Op::Neg(a), v, &[a])
    }

    pub fn scale(&mut self, a: NodeId, k: f64) -> NodeId {
        let v = self.nodes[a.0].value.map(|x| k * x);
        self.push_op(Op::Scale(a, k), v, &[a])
    }

    pub fn add_scalar(&mut self, a: NodeId, k: f64) -> NodeId {
        let v = self.nodes[a.0].value.map(|x| x + k);
        self.push_op(Op::AddScalar(a), v, &[a])
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a.0].value.map(|x| x.max(0.0));
        self.push_op(Op::Relu(a), v, &[a])
    }

    pub fn silu(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a.0].value.map(|x| x * sigmoid(x));
        self.push_op(Op::Silu(a), v, &[a])
    }

    pub fn abs(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a.0].value.map(f64::abs);
        self.push_op(Op::Abs(a), v, &[a])
    }

    pub fn sqrt(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a.0].value.map(f64::sqrt);
        self.push_op(Op::Sqrt(a), v, &[a])
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a.0].value.map(f64::exp);
        self.push_op(Op::Exp(a), v, &[a])
    }

    pub fn minimum(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AdError> {
        self.check_same("minimum", a, b)?;
        let v = zip_map(&self.nodes[a.0].value, &self.nodes[b.0].value, f64::min);
        Ok(self.push_op(Op::Minimum(a, b), v, &[a, b]))
    }

    pub fn clamp(&mut self, a: NodeId, lo: f64, hi: f64) -> NodeId {
        let v = self.nodes[a.0].value.map(|x| x.clamp(lo, hi));
        self.push_op(Op::Clamp(a, lo, hi), v, &[a])
    }

    // ---- linear algebra ----

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AdError> {
        let (ar, ac) = self.shape(a);
        let (br, bc) = self.shape(b);
        if ac != br {
            return Err(AdError::ShapeMismatch {
                op: "matmul",
                a: (ar, ac),
                b: (br, bc),
            });
        }
        let v = matmul(&self.nodes[a.0].value, &self.nodes[b.0].value);
        Ok(self.push_op(Op::MatMul(a, b), v, &[a, b]))
    }

    pub fn transpose(&mut self, a: NodeId) -> NodeId {
        let t = &self.nodes[a.0].value;
        let (r, c) = t.shape();
        let mut out = Tensor::zeros(c, r);
        for i in 0..r {
            for j in 0..c {
                out.set(j, i, t.get(i, j));
            }
        }
        self.push_op(Op::Transpose(a), out, &[a])
    }

    // ---- row/col broadcasts ----

    /// a (N×M) + r (1×M) broadcast over rows.
    pub fn add_row(&mut self, a: NodeId, r: NodeId) -> Result<NodeId, AdError> {
        let (n, m) = self.shape(a);
        if self.shape(r) != (1, m) {
            return Err(AdError::ShapeMismatch {
                op: "add_row",
                a: (n, m),
                b: self.shape(r),
            });
        }
        let rv = self.nodes[r.0].value.clone();
        let av = &self.nodes[a.0].value;
        let mut out = av.clone();
        for i in 0..n {
            let row = &mut out.data_mut()[i * m..(i + 1) * m];
            for (o, b) in row.iter_mut().zip(rv.data()) {
                *o += b;
            }
        }
        Ok(self.push_op(Op::AddRow(a, r), out, &[a, r]))
    }

    /// a (N×M) * r (1×M) broadcast over rows.
    pub fn mul_row(&mut self, a: NodeId, r: NodeId) -> Result<NodeId, AdError> {
        let (n, m) = self.shape(a);
        if self.shape(r) != (1, m) {
            return Err(AdError::ShapeMismatch {
                op: "mul_row",
                a: (n, m),
                b: self.shape(r),
            });
        }
        let rv = self.nodes[r.0].value.clone();
        let mut out = self.nodes[a.0].value.clone();
        for i in 0..n {
            let row = &mut out.data_mut()[i * m..(i + 1) * m];
            for (o, b) in row.iter_mut().zip(rv.data()) {
                *o *= b;
            }
        }
        Ok(self.push_op(Op::MulRow(a, r), out, &[a, r]))
    }

    /// a (N×M) * c (N×1) broadcast over columns.
    pub fn mul_col(&mut self, a: NodeId, c: NodeId) -> Result<NodeId, AdError> {
        let (n, m) = self.shape(a);
        if self.shape(c) != (n, 1) {
            return Err(AdError::ShapeMismatch {
                op: "mul_col",
                a: (n, m),
                b: self.shape(c),
            });
        }
        let cv = self.nodes[c.0].value.clone();
        let mut out = self.nodes[a.0].value.clone();
        for i in 0..n {
            let f = cv.data()[i];
            for o in &mut out.data_mut()[i * m..(i + 1) * m] {
                *o *= f;
            }
        }
        Ok(self.push_op(Op::MulCol(a, c), out, &[a, c]))
    }

    /// a (N×M) / c (N×1) broadcast over columns.
    pub fn div_col(&mut self, a: NodeId, c: NodeId) -> Result<NodeId, AdError> {
        let (n, m) = self.shape(a);
        if self.shape(c) != (n, 1) {
            return Err(AdError::ShapeMismatch {
                op: "div_col",
                a: (n, m),
                b: self.shape(c),
            });
        }
        let cv = self.nodes[c.0].value.clone();
        let mut out = self.nodes[a.0].value.clone();
        for i in 0..n {
            let f = 1.0 / cv.data()[i];
            for o in &mut out.data_mut()[i * m..(i + 1) * m] {
                *o *= f;
            }
        }
        Ok(self.push_op(Op::DivCol(a, c), out, &[a, c]))
    }

    // ---- shape ops ----

    pub fn concat_cols(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AdError> {
        let (an, am) = self.shape(a);
        let (bn, bm) = self.shape(b);
        if an != bn {
            return Err(AdError::ShapeMismatch {
                op: "concat_cols",
                a: (an, am),
                b: (bn, bm),
            });
        }
        let av = &self.nodes[a.0].value;
        let bv = &self.nodes[b.0].value;
        let mut out = Tensor::zeros(an, am + bm);
        for i in 0..an {
            out.data_mut()[i * (am + bm)..i * (am + bm) + am].copy_from_slice(av.row(i));
            out.data_mut()[i * (am + bm) + am..(i + 1) * (am + bm)].copy_from_slice(bv.row(i));
        }
        Ok(self.push_op(Op::ConcatCols(a, b), out, &[a, b]))
    }

    pub fn concat_rows(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AdError> {
        let (an, am) = self.shape(a);
        let (bn, bm) = self.shape(b);
        if am != bm {
            return Err(AdError::ShapeMismatch {
                op: "concat_rows",
                a: (an, am),
                b: (bn, bm),
            });
        }
        let mut data = self.nodes[a.0].value.data().to_vec();
        data.extend_from_slice(self.nodes[b.0].value.data());
        let out = Tensor::from_vec(an + bn, am, data);
        Ok(self.push_op(Op::ConcatRows(a, b), out, &[a, b]))
    }

    pub fn slice_cols(&mut self, a: NodeId, start: usize, len: usize) -> Result<NodeId, AdError> {
        let (n, m) = self.shape(a);
        if start + len > m {
            return Err(AdError::ShapeMismatch {
                op: "slice_cols",
                a: (n, m),
                b: (start, len),
            });
        }
        let av = &self.nodes[a.0].value;
        let mut out = Tensor::zeros(n, len);
        for i in 0..n {
            out.data_mut()[i * len..(i + 1) * len]
                .copy_from_slice(&av.row(i)[start..start + len]);
        }
        Ok(self.push_op(Op::SliceCols(a, start, len), out, &[a]))
    }

    pub fn slice_rows(&mut self, a: NodeId, start: usize, len: usize) -> Result<NodeId, AdError> {
        let (n, m) = self.shape(a);
        if start + len > n {
            return Err(AdError::ShapeMismatch {
                op: "slice_rows",
                a: (n, m),
                b: (start, len),
            });
        }
        let av = &self.nodes[a.0].value;
        let out = Tensor::from_vec(len, m, av.data()[start * m..(start + len) * m].to_vec());
        Ok(self.push_op(Op::SliceRows(a, start, len), out, &[a]))
    }

    pub fn reshape(&mut self, a: NodeId, rows: usize, cols: usize) -> Result<NodeId, AdError> {
        let (n, m) = self.shape(a);
        if rows * cols != n * m {
            return Err(AdError::ShapeMismatch {
                op: "reshape",
                a: (n, m),
                b: (rows, cols),
            });
        }
        let out = Tensor::from_vec(rows, cols, self.nodes[a.0].value.data().to_vec());
        Ok(self.push_op(Op::Reshape(a), out, &[a]))
    }

    /// Zero-pad `left` columns before and `right` columns after.
    pub fn pad_cols(&mut self, a: NodeId, left: usize, right: usize) -> NodeId {
        let (n, m) = self.shape(a);
        let w = m + left + right;
        let av = &self.nodes[a.0].value;
        let mut out = Tensor::zeros(n, w);
        for i in 0..n {
            out.data_mut()[i * w + left..i * w + left + m].copy_from_slice(av.row(i));
        }
        self.push_op(Op::PadCols(a, left, right), out, &[a])
    }

    /// Tile a 1×M row `n` times into N×M.
    pub fn repeat_rows(&mut self, a: NodeId, n: usize) -> Result<NodeId, AdError> {
        let (r, m) = self.shape(a);
        if r != 1 {
            return Err(AdError::ShapeMismatch {
                op: "repeat_rows",
                a: (r, m),
                b: (1, m),
            });
        }
        let row = self.nodes[a.0].value.data().to_vec();
        let mut data = Vec::with_capacity(n * m);
        for _ in 0..n {
            data.extend_from_slice(&row);
        }
        let out = Tensor::from_vec(n, m, data);
        Ok(self.push_op(Op::RepeatRows(a, n), out, &[a]))
    }

    /// Select rows of `table` by index; duplicate indices accumulate
    /// gradient. This is the embedding lookup.
    pub fn gather_rows(&mut self, table: NodeId, indices: &[usize]) -> Result<NodeId, AdError> {
        let (n, m) = self.shape(table);
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(AdError::ShapeMismatch {
                op: "gather_rows",
                a: (n, m),
                b: (bad, 0),
            });
        }
        let tv = &self.nodes[table.0].value;
        let mut data = Vec::with_capacity(indices.len() * m);
        for &i in indices {
            data.extend_from_slice(tv.row(i));
        }
        let out = Tensor::from_vec(indices.len(), m, data);
        Ok(self.push_op(Op::GatherRows(table, indices.to_vec()), out, &[table]))
    }

    // ---- reductions & normalizations ----

    pub fn sum_all(&mut self, a: NodeId) -> NodeId {
        let s: f64 = self.nodes[a.0].value.data().iter().sum();
        self.push_op(Op::SumAll(a), Tensor::scalar(s), &[a])
    }

    pub fn mean_all(&mut self, a: NodeId) -> NodeId {
        let t = &self.nodes[a.0].value;
        let s: f64 = t.data().iter().sum::<f64>() / t.len() as f64;
        self.push_op(Op::MeanAll(a), Tensor::scalar(s), &[a])
    }

    /// Per-row sums: N×M → N×1.
    pub fn row_sums(&mut self, a: NodeId) -> NodeId {
        let t = &self.nodes[a.0].value;
        let data = (0..t.rows()).map(|i| t.row(i).iter().sum()).collect();
        let out = Tensor::col_vec(data);
        self.push_op(Op::RowSums(a), out, &[a])
    }

    /// Per-column sums: N×M → 1×M.
    pub fn col_sums(&mut self, a: NodeId) -> NodeId {
        let t = &self.nodes[a.0].value;
        let (n, m) = t.shape();
        let mut data = vec![0.0; m];
        for i in 0..n {
            for (d, v) in data.iter_mut().zip(t.row(i)) {
                *d += v;
            }
        }
        let out = Tensor::row_vec(data);
        self.push_op(Op::ColSums(a), out, &[a])
    }

    /// Cumulative sums down the rows (per column).
    pub fn cumsum_rows(&mut self, a: NodeId) -> NodeId {
        let t = &self.nodes[a.0].value;
        let (n, m) = t.shape();
        let mut out = t.clone();
        for i in 1..n {
            for j in 0..m {
                let prev = out.get(i - 1, j);
                let v = out.get(i, j) + prev;
                out.set(i, j, v);
            }
        }
        self.push_op(Op::CumsumRows(a), out, &[a])
    }

    pub fn softmax_rows(&mut self, a: NodeId) -> NodeId {
        let t = &self.nodes[a.0].value;
        let (n, m) = t.shape();
        let mut out = Tensor::zeros(n, m);
        for i in 0..n {
            let row = t.row(i);
            let mx = row.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let mut sum = 0.0;
            let orow = &mut out.data_mut()[i * m..(i + 1) * m];
            for (o, &v) in orow.iter_mut().zip(row) {
                *o = (v - mx).exp();
                sum += *o;
            }
            for o in orow.iter_mut() {
                *o /= sum;
            }
        }
        self.push_op(Op::SoftmaxRows(a), out, &[a])
    }

    /// Row-wise layer norm without affine terms (compose with mul_row /
    /// add_row for gamma and beta).
    pub fn layer_norm_rows(&mut self, a: NodeId, eps: f64) -> NodeId {
        let t = &self.nodes[a.0].value;
        let (n, m) = t.shape();
        let mut out = Tensor::zeros(n, m);
        for i in 0..n {
            let row = t.row(i);
            let mean = row.iter().sum::<f64>() / m as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m as f64;
            let inv = 1.0 / (var + eps).sqrt();
            let orow = &mut out.data_mut()[i * m..(i + 1) * m];
            for (o, &v) in orow.iter_mut().zip(row) {
                *o = (v - mean) * inv;
            }
        }
        self.push_op(Op::LayerNormRows(a, eps), out, &[a])
    }

    // ---- backward ----

    /// Accumulate gradients of the scalar `loss` into every node that
    /// requires them. Visits nodes in reverse creation order, which is a
    /// reverse topological order of the DAG; each node is visited once.
    pub fn backward(&mut self, loss: NodeId) -> Result<(), AdError> {
        let shape = self.shape(loss);
        if shape != (1, 1) {
            return Err(AdError::NotScalar(shape));
        }
        for n in &mut self.nodes {
            n.grad = None;
        }
        self.nodes[loss.0].grad = Some(Tensor::scalar(1.0));
        for i in (0..=loss.0).rev() {
            if self.nodes[i].grad.is_none() || !self.nodes[i].requires_grad {
                continue;
            }
            let g = self.nodes[i].grad.take().unwrap();
            let op = self.nodes[i].op.clone();
            self.propagate(i, &op, &g);
            self.nodes[i].grad = Some(g);
        }
        Ok(())
    }

    fn accum(&mut self, id: NodeId, delta: Tensor) {
        if !self.nodes[id.0].requires_grad {
            return;
        }
        match &mut self.nodes[id.0].grad {
            Some(g) => g.add_assign(&delta),
            slot @ None => *slot = Some(delta),
        }
    }

    fn propagate(&mut self, node: usize, op: &Op, g: &Tensor) {
        match *op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                self.accum(a, g.clone());
                self.accum(b, g.clone());
            }
            Op::Sub(a, b) => {
                self.accum(a, g.clone());
                self.accum(b, g.map(|x| -x));
            }
            Op::Mul(a, b) => {
                let ga = zip_map(g, &self.nodes[b.0].value, |x, y| x * y);
                let gb = zip_map(g, &self.nodes[a.0].value, |x, y| x * y);
                self.accum(a, ga);
                self.accum(b, gb);
            }
            Op::Div(a, b) => {
                let av = &self.nodes[a.0].value;
                let bv = &self.nodes[b.0].value;
                let ga = zip_map(g, bv, |x, y| x / y);
                let mut gb = Tensor::zeros(bv.rows(), bv.cols());
                for k in 0..gb.len() {
                    gb.data_mut()[k] =
                        -g.data()[k] * av.data()[k] / (bv.data()[k] * bv.data()[k]);
                }
                self.accum(a, ga);
                self.accum(b, gb);
            }
            Op::Neg(a) => self.accum(a, g.map(|x| -x)),
            Op::Scale(a, k) => self.accum(a, g.map(|x| k * x)),
            Op::AddScalar(a) => self.accum(a, g.clone()),
            Op::MatMul(a, b) => {
                let ga = matmul_nt(g, &self.nodes[b.0].value);
                let gb = matmul_tn(&self.nodes[a.0].value, g);
                self.accum(a, ga);
                self.accum(b, gb);
            }
            Op::Transpose(a) => {
                let (r, c) = g.shape();
                let mut t = Tensor::zeros(c, r);
                for i in 0..r {
                    for j in 0..c {
                        t.set(j, i, g.get(i, j));
                    }
                }
                self.accum(a, t);
            }
            Op::Relu(a) => {
                let ga = zip_map(g, &self.nodes[a.0].value, |x, v| if v > 0.0 { x } else { 0.0 });
                self.accum(a, ga);
            }
            Op::Silu(a) => {
                let ga = zip_map(g, &self.nodes[a.0].value, |x, v| {
                    let s = sigmoid(v);
                    x * (s + v * s * (1.0 - s))
                });
                self.accum(a, ga);
            }
            Op::Abs(a) => {
                let ga = zip_map(g, &self.nodes[a.0].value, |x, v| x * sign(v));
                self.accum(a, ga);
            }
            Op::Sqrt(a) => {
                let ga = zip_map(g, &self.nodes[node].value, |x, y| 0.5 * x / y);
                self.accum(a, ga);
            }
            Op::Exp(a) => {
                let ga = zip_map(g, &self.nodes[node].value, |x, y| x * y);
                self.accum(a, ga);
            }
            Op::Minimum(a, b) => {
                let av = &self.nodes[a.0].value;
                let bv = &self.nodes[b.0].value;
                let ga = {
                    let mut t = g.clone();
                    for (k, v) in t.data_mut().iter_mut().enumerate() {
                        if av.data()[k] > bv.data()[k] {
                            *v = 0.0;
                        }
                    }
                    t
                };
                let gb = {
                    let mut t = g.clone();
                    for (k, v) in t.data_mut().iter_mut().enumerate() {
                        if av.data()[k] <= bv.data()[k] {
                            *v = 0.0;
                        }
                    }
                    t
                };
                self.accum(a, ga);
                self.accum(b, gb);
            }
            Op::Clamp(a, lo, hi) => {
                let ga = zip_map(g, &self.nodes[a.0].value, |x, v| {
                    if v > lo && v < hi {
                        x
                    } else {
                        0.0
                    }
                });
                self.accum(a, ga);
            }
            Op::SoftmaxRows(a) => {
                let s = &self.nodes[node].value;
                let (n, m) = s.shape();
                let mut ga = Tensor::zeros(n, m);
                for i in 0..n {
                    let srow = s.row(i);
                    let grow = g.row(i);
                    let dot: f64 = srow.iter().zip(grow).map(|(x, y)| x * y).sum();
                    let orow = &mut ga.data_mut()[i * m..(i + 1) * m];
                    for ((o, &sv), &gv) in orow.iter_mut().zip(srow).zip(grow) {
                        *o = sv * (gv - dot);
                    }
                }
                self.accum(a, ga);
            }
            Op::LayerNormRows(a, eps) => {
                let x = &self.nodes[a.0].value;
                let y = &self.nodes[node].value;
                let (n, m) = x.shape();
                let mut ga = Tensor::zeros(n, m);
                for i in 0..n {
                    let xrow = x.row(i);
                    let yrow = y.row(i);
                    let grow = g.row(i);
                    let mean = xrow.iter().sum::<f64>() / m as f64;
                    let var = xrow.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                        / m as f64;
                    let inv = 1.0 / (var + eps).sqrt();
                    let gmean = grow.iter().sum::<f64>() / m as f64;
                    let gymean =
                        grow.iter().zip(yrow).map(|(x, y)| x * y).sum::<f64>() / m as f64;
                    let orow = &mut ga.data_mut()[i * m..(i + 1) * m];
                    for ((o, &gv), &yv) in orow.iter_mut().zip(grow).zip(yrow) {
                        *o = inv * (gv - gmean - yv * gymean);
                    }
                }
                self.accum(a, ga);
            }
            Op::AddRow(a, r) => {
                self.accum(a, g.clone());
                let (n, m) = g.shape();
                let mut gr = vec![0.0; m];
                for i in 0..n {
                    for (d, v) in gr.iter_mut().zip(g.row(i)) {
                        *d += v;
                    }
                }
                self.accum(r, Tensor::row_vec(gr));
            }
            Op::MulRow(a, r) => {
                let (n, m) = g.shape();
                let rv = self.nodes[r.0].value.clone();
                let av = &self.nodes[a.0].value;
                let mut ga = Tensor::zeros(n, m);
                let mut gr = vec![0.0; m];
                for i in 0..n {
                    let grow = g.row(i);
                    let arow = av.row(i);
                    let orow = &mut ga.data_mut()[i * m..(i + 1) * m];
                    for j in 0..m {
                        orow[j] = grow[j] * rv.data()[j];
                        gr[j] += grow[j] * arow[j];
                    }
                }
                self.accum(a, ga);
                self.accum(r, Tensor::row_vec(gr));
            }
            Op::MulCol(a, c) => {
                let (n, m) = g.shape();
                let cv = self.nodes[c.0].value.clone();
                let av = &self.nodes[a.0].value;
                let mut ga = Tensor::zeros(n, m);
                let mut gc = vec![0.0; n];
                for i in 0..n {
                    let f = cv.data()[i];
                    let grow = g.row(i);
                    let arow = av.row(i);
                    let orow = &mut ga.data_mut()[i * m..(i + 1) * m];
                    for j in 0..m {
                        orow[j] = grow[j] * f;
                        gc[i] += grow[j] * arow[j];
                    }
                }
                self.accum(a, ga);
                self.accum(c, Tensor::col_vec(gc));
            }
            Op::DivCol(a, c) => {
                let (n, m) = g.shape();
                let cv = self.nodes[c.0].value.clone();
                let av = &self.nodes[a.0].value;
                let mut ga = Tensor::zeros(n, m);
                let mut gc = vec![0.0; n];
                for i in 0..n {
                    let f = cv.data()[i];
                    let grow = g.row(i);
                    let arow = av.row(i);
                    let orow = &mut ga.data_mut()[i * m..(i + 1) * m];
                    for j in 0..m {
                        orow[j] = grow[j] / f;
                        gc[i] -= grow[j] * arow[j] / (f * f);
                    }
                }
                self.accum(a, ga);
                self.accum(c, Tensor::col_vec(gc));
            }
            Op::ConcatCols(a, b) => {
                let (_, am) = self.shape(a);
                let (n, m) = g.shape();
                let bm = m - am;
                let mut ga = Tensor::zeros(n, am);
                let mut gb = Tensor::zeros(n, bm);
                for i in 0..n {
                    ga.data_mut()[i * am..(i + 1) * am].copy_from_slice(&g.row(i)[..am]);
                    gb.data_mut()[i * bm..(i + 1) * bm].copy_from_slice(&g.row(i)[am..]);
                }
                self.accum(a, ga);
                self.accum(b, gb);
            }
            Op::ConcatRows(a, b) => {
                let (an, m) = self.shape(a);
                let ga = Tensor::from_vec(an, m, g.data()[..an * m].to_vec());
                let (bn, _) = self.shape(b);
                let gb = Tensor::from_vec(bn, m, g.data()[an * m..].to_vec());
                self.accum(a, ga);
                self.accum(b, gb);
            }
            Op::SliceCols(a, start, len) => {
                let (n, m) = self.shape(a);
                let mut ga = Tensor::zeros(n, m);
                for i in 0..n {
                    ga.data_mut()[i * m + start..i * m + start + len]
                        .copy_from_slice(g.row(i));
                }
                self.accum(a, ga);
            }
            Op::SliceRows(a, start, len) => {
                let (n, m) = self.shape(a);
                let mut ga = Tensor::zeros(n, m);
                ga.data_mut()[start * m..(start + len) * m].copy_from_slice(g.data());
                self.accum(a, ga);
            }
            Op::Reshape(a) => {
                let (n, m) = self.shape(a);
                let ga = Tensor::from_vec(n, m, g.data().to_vec());
                self.accum(a, ga);
            }
            Op::PadCols(a, left, _right) => {
                let (n, m) = self.shape(a);
                let w = g.cols();
                let mut ga = Tensor::zeros(n, m);
                for i in 0..n {
                    ga.data_mut()[i * m..(i + 1) * m]
                        .copy_from_slice(&g.data()[i * w + left..i * w + left + m]);
                }
                self.accum(a, ga);
            }
            Op::SumAll(a) => {
                let (n, m) = self.shape(a);
                self.accum(a, Tensor::full(n, m, g.item()));
            }
            Op::MeanAll(a) => {
                let (n, m) = self.shape(a);
                self.accum(a, Tensor::full(n, m, g.item() / (n * m) as f64));
            }
            Op::RowSums(a) => {
                let (n, m) = self.shape(a);
                let mut ga = Tensor::zeros(n, m);
                for i in 0..n {
                    let gv = g.data()[i];
                    for o in &mut ga.data_mut()[i * m..(i + 1) * m] {
                        *o = gv;
                    }
                }
                self.accum(a, ga);
            }
            Op::ColSums(a) => {
                let (n, m) = self.shape(a);
                let mut ga = Tensor::zeros(n, m);
                for i in 0..n {
                    ga.data_mut()[i * m..(i + 1) * m].copy_from_slice(g.data());
                }
                self.accum(a, ga);
            }
            Op::CumsumRows(a) => {
                // Gradient of a cumulative sum is the reversed cumulative sum.
                let (n, m) = g.shape();
                let mut ga = g.clone();
                for i in (0..n.saturating_sub(1)).rev() {
                    for j in 0..m {
                        let nxt = ga.get(i + 1, j);
                        let v = ga.get(i, j) + nxt;
                        ga.set(i, j, v);
                    }
                }
                self.accum(a, ga);
            }
            Op::GatherRows(table, ref indices) => {
                let (n, m) = self.shape(table);
                let mut gt = Tensor::zeros(n, m);
                for (row, &idx) in indices.iter().enumerate() {
                    let dst = &mut gt.data_mut()[idx * m..(idx + 1) * m];
                    for (d, v) in dst.iter_mut().zip(g.row(row)) {
                        *d += v;
                    }
                }
                self.accum(table, gt);
            }
            Op::RepeatRows(a, n) => {
                let m = g.cols();
                let mut ga = vec![0.0; m];
                for i in 0..n {
                    for (d, v) in ga.iter_mut().zip(g.row(i)) {
                        *d += v;
                    }
                }
                self.accum(a, Tensor::row_vec(ga));
            }
        }
    }
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    debug_assert_eq!(a.shape(), b.shape());
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| f(x, y))
        .collect();
    Tensor::from_vec(a.rows(), a.cols(), data)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}
