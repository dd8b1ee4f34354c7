use std::collections::HashMap;

use super::array::{Array, NumError};
use super::params::{ParamId, ParamSet};

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeRef(usize);

/// Log-probability assigned to masked softmax entries. Large and negative but
/// finite, so forward values never contain infinities; `exp` of it underflows
/// to exactly zero.
pub const MASKED_LOG_PROB: f64 = -1e300;

enum Op {
    Constant,
    Param { id: ParamId },
    ParamRow { id: ParamId, row: usize },
    MatVec { m: NodeRef, v: NodeRef },
    Add { a: NodeRef, b: NodeRef },
    SumN { terms: Vec<NodeRef> },
    Concat { parts: Vec<NodeRef> },
    Tanh { x: NodeRef },
    Sigmoid { x: NodeRef },
    Mul { a: NodeRef, b: NodeRef },
    ScaleShift { x: NodeRef, scale: f64 },
    MaxPair { a: NodeRef, b: NodeRef },
    MaxAll { x: NodeRef, arg: usize },
    SumAll { x: NodeRef },
    Dot { a: NodeRef, b: NodeRef },
    LogSoftmax { x: NodeRef, mask: Option<usize> },
    Pick { x: NodeRef, idx: usize },
    RowsToMatrix { rows: Vec<NodeRef> },
    ColsToMatrix { cols: Vec<NodeRef> },
    ConvMap { input: NodeRef, kernel: NodeRef, bias: NodeRef, width: usize },
    Detach,
}

struct Node {
    value: Array,
    op: Op,
}

#[derive(Hash, PartialEq, Eq)]
enum LeafKey {
    Whole(ParamId),
    Row(ParamId, usize),
}

/// Define-by-run reverse-mode computation graph.
///
/// Values are computed eagerly as ops are added; `backward` walks the tape in
/// reverse and accumulates parameter gradients into the originating
/// [`ParamSet`]. Parameter leaves are cached, so repeated uses of the same
/// parameter (or embedding row) share one node and their gradient
/// contributions sum.
pub struct Graph {
    nodes: Vec<Node>,
    leaves: HashMap<LeafKey, NodeRef>,
}

impl Default for Graph {
    fn default() -> Self {
        Graph::new()
    }
}

/// Node handles for one LSTM direction: per-gate weights over the
/// concatenated `[hidden, input]` vector plus biases.
#[derive(Debug, Clone, Copy)]
pub struct LstmGates {
    pub w_input: NodeRef,
    pub b_input: NodeRef,
    pub w_forget: NodeRef,
    pub b_forget: NodeRef,
    pub w_cell: NodeRef,
    pub b_cell: NodeRef,
    pub w_output: NodeRef,
    pub b_output: NodeRef,
}

impl Graph {
    pub fn new() -> Graph {
        Graph {
            nodes: Vec::new(),
            leaves: HashMap::new(),
        }
    }

    // Non-finite values are allowed to propagate here; training checks the
    // loss and reports divergence as an error rather than a crash.
    fn push(&mut self, value: Array, op: Op) -> NodeRef {
        self.nodes.push(Node { value, op });
        NodeRef(self.nodes.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, n: NodeRef) -> &Array {
        &self.nodes[n.0].value
    }

    /// Scalar value of a shape-`[1]` node.
    pub fn scalar_value(&self, n: NodeRef) -> f64 {
        debug_assert!(self.nodes[n.0].value.is_scalar());
        self.nodes[n.0].value.at(0)
    }

    pub fn constant(&mut self, value: Array) -> NodeRef {
        self.push(value, Op::Constant)
    }

    pub fn scalar(&mut self, v: f64) -> NodeRef {
        self.push(Array::scalar(v), Op::Constant)
    }

    /// Leaf for a whole parameter. Cached per parameter.
    pub fn param(&mut self, params: &ParamSet, id: ParamId) -> NodeRef {
        if let Some(&n) = self.leaves.get(&LeafKey::Whole(id)) {
            return n;
        }
        let n = self.push(params.value(id).clone(), Op::Param { id });
        self.leaves.insert(LeafKey::Whole(id), n);
        n
    }

    /// Leaf for one row of a matrix parameter (an embedding lookup). Cached
    /// per `(parameter, row)`.
    pub fn param_row(&mut self, params: &ParamSet, id: ParamId, row: usize) -> NodeRef {
        if let Some(&n) = self.leaves.get(&LeafKey::Row(id, row)) {
            return n;
        }
        let value = Array::vector(params.value(id).row(row).to_vec());
        let n = self.push(value, Op::ParamRow { id, row });
        self.leaves.insert(LeafKey::Row(id, row), n);
        n
    }

    /// Matrix-vector product `m · v`.
    pub fn matvec(&mut self, m: NodeRef, v: NodeRef) -> Result<NodeRef, NumError> {
        let (mv, vv) = (self.value(m), self.value(v));
        if !mv.is_matrix() || !vv.is_vector() || mv.cols() != vv.len() {
            return Err(NumError::ShapeMismatch {
                op: "matvec",
                left: mv.shape().to_vec(),
                right: vv.shape().to_vec(),
            });
        }
        let rows = mv.rows();
        let cols = mv.cols();
        let mut out = vec![0.0; rows];
        let md = mv.data();
        let vd = vv.data();
        for (r, o) in out.iter_mut().enumerate() {
            let row = &md[r * cols..(r + 1) * cols];
            *o = row.iter().zip(vd).map(|(a, b)| a * b).sum();
        }
        Ok(self.push(Array::vector(out), Op::MatVec { m, v }))
    }

    fn same_shape(&self, op: &'static str, a: NodeRef, b: NodeRef) -> Result<(), NumError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(NumError::ShapeMismatch {
                op,
                left: av.shape().to_vec(),
                right: bv.shape().to_vec(),
            });
        }
        Ok(())
    }

    pub fn add(&mut self, a: NodeRef, b: NodeRef) -> Result<NodeRef, NumError> {
        self.same_shape("add", a, b)?;
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(x, y)| x + y)
            .collect();
        let shape = self.value(a).shape().to_vec();
        Ok(self.push(Array::from_vec(&shape, data)?, Op::Add { a, b }))
    }

    /// Elementwise sum of same-shape nodes.
    pub fn sum_n(&mut self, terms: &[NodeRef]) -> Result<NodeRef, NumError> {
        let first = *terms
            .first()
            .ok_or_else(|| NumError::Argument("sum of zero terms".into()))?;
        for &t in &terms[1..] {
            self.same_shape("sum_n", first, t)?;
        }
        let mut data = self.value(first).data().to_vec();
        for &t in &terms[1..] {
            for (d, v) in data.iter_mut().zip(self.value(t).data()) {
                *d += v;
            }
        }
        let shape = self.value(first).shape().to_vec();
        Ok(self.push(
            Array::from_vec(&shape, data)?,
            Op::SumN {
                terms: terms.to_vec(),
            },
        ))
    }

    /// Concatenation of vectors.
    pub fn concat(&mut self, parts: &[NodeRef]) -> Result<NodeRef, NumError> {
        if parts.is_empty() {
            return Err(NumError::Argument("concat of zero parts".into()));
        }
        let mut data = Vec::new();
        for &p in parts {
            let v = self.value(p);
            if !v.is_vector() {
                return Err(NumError::ShapeMismatch {
                    op: "concat",
                    left: v.shape().to_vec(),
                    right: vec![],
                });
            }
            data.extend_from_slice(v.data());
        }
        Ok(self.push(
            Array::vector(data),
            Op::Concat {
                parts: parts.to_vec(),
            },
        ))
    }

    pub fn tanh(&mut self, x: NodeRef) -> NodeRef {
        let data = self.value(x).data().iter().map(|v| v.tanh()).collect();
        let shape = self.value(x).shape().to_vec();
        self.push(Array::from_vec(&shape, data).unwrap(), Op::Tanh { x })
    }

    pub fn sigmoid(&mut self, x: NodeRef) -> NodeRef {
        let data = self
            .value(x)
            .data()
            .iter()
            .map(|v| 1.0 / (1.0 + (-v).exp()))
            .collect();
        let shape = self.value(x).shape().to_vec();
        self.push(Array::from_vec(&shape, data).unwrap(), Op::Sigmoid { x })
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: NodeRef, b: NodeRef) -> Result<NodeRef, NumError> {
        self.same_shape("mul", a, b)?;
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(x, y)| x * y)
            .collect();
        let shape = self.value(a).shape().to_vec();
        Ok(self.push(Array::from_vec(&shape, data)?, Op::Mul { a, b }))
    }

    /// `scale * x + shift` elementwise with constant coefficients.
    pub fn scale_shift(&mut self, x: NodeRef, scale: f64, shift: f64) -> NodeRef {
        let data = self
            .value(x)
            .data()
            .iter()
            .map(|v| scale * v + shift)
            .collect();
        let shape = self.value(x).shape().to_vec();
        self.push(
            Array::from_vec(&shape, data).unwrap(),
            Op::ScaleShift { x, scale },
        )
    }

    pub fn neg(&mut self, x: NodeRef) -> NodeRef {
        self.scale_shift(x, -1.0, 0.0)
    }

    /// `1 - x` elementwise; the highway pass-through weight.
    pub fn one_minus(&mut self, x: NodeRef) -> NodeRef {
        self.scale_shift(x, -1.0, 1.0)
    }

    /// Elementwise maximum of two same-shape nodes. Gradient routes to the
    /// left argument on ties.
    pub fn max_pair(&mut self, a: NodeRef, b: NodeRef) -> Result<NodeRef, NumError> {
        self.same_shape("max_pair", a, b)?;
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(x, y)| x.max(*y))
            .collect();
        let shape = self.value(a).shape().to_vec();
        Ok(self.push(Array::from_vec(&shape, data)?, Op::MaxPair { a, b }))
    }

    /// Maximum entry of a vector. Gradient routes to the first argmax.
    pub fn max_all(&mut self, x: NodeRef) -> Result<NodeRef, NumError> {
        let v = self.value(x);
        if !v.is_vector() {
            return Err(NumError::ShapeMismatch {
                op: "max_all",
                left: v.shape().to_vec(),
                right: vec![],
            });
        }
        let mut arg = 0;
        let mut best = v.at(0);
        for (i, &val) in v.data().iter().enumerate().skip(1) {
            if val > best {
                best = val;
                arg = i;
            }
        }
        Ok(self.push(Array::scalar(best), Op::MaxAll { x, arg }))
    }

    /// Sum of all entries, as a scalar.
    pub fn sum_all(&mut self, x: NodeRef) -> NodeRef {
        let total: f64 = self.value(x).data().iter().sum();
        self.push(Array::scalar(total), Op::SumAll { x })
    }

    /// Dot product of two same-shape nodes (Frobenius product for matrices).
    pub fn dot(&mut self, a: NodeRef, b: NodeRef) -> Result<NodeRef, NumError> {
        self.same_shape("dot", a, b)?;
        let total = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(x, y)| x * y)
            .sum();
        Ok(self.push(Array::scalar(total), Op::Dot { a, b }))
    }

    /// Log-softmax with an optional masked index excluded from the support.
    /// The masked entry's output is [`MASKED_LOG_PROB`] and receives no
    /// gradient.
    pub fn log_softmax(&mut self, x: NodeRef, mask: Option<usize>) -> Result<NodeRef, NumError> {
        let v = self.value(x);
        if !v.is_vector() {
            return Err(NumError::ShapeMismatch {
                op: "log_softmax",
                left: v.shape().to_vec(),
                right: vec![],
            });
        }
        let n = v.len();
        if let Some(m) = mask {
            if m >= n {
                return Err(NumError::Argument(format!(
                    "mask index {m} out of range for {n} logits"
                )));
            }
            if n == 1 {
                return Err(NumError::Argument(
                    "log_softmax support is empty after masking".into(),
                ));
            }
        }
        let unmasked = |i: usize| mask != Some(i);
        let max = v
            .data()
            .iter()
            .enumerate()
            .filter(|(i, _)| unmasked(*i))
            .map(|(_, &val)| val)
            .fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = v
            .data()
            .iter()
            .enumerate()
            .filter(|(i, _)| unmasked(*i))
            .map(|(_, &val)| (val - max).exp())
            .sum();
        let lse = max + sum.ln();
        let data: Vec<f64> = v
            .data()
            .iter()
            .enumerate()
            .map(|(i, &val)| if unmasked(i) { val - lse } else { MASKED_LOG_PROB })
            .collect();
        Ok(self.push(Array::vector(data), Op::LogSoftmax { x, mask }))
    }

    /// Entry `idx` of a vector, as a scalar.
    pub fn pick(&mut self, x: NodeRef, idx: usize) -> Result<NodeRef, NumError> {
        let v = self.value(x);
        if idx >= v.len() {
            return Err(NumError::Argument(format!(
                "pick index {idx} out of range for length {}",
                v.len()
            )));
        }
        let val = v.at(idx);
        Ok(self.push(Array::scalar(val), Op::Pick { x, idx }))
    }

    /// Stack equal-length vectors as the rows of a matrix.
    pub fn rows_to_matrix(&mut self, rows: &[NodeRef]) -> Result<NodeRef, NumError> {
        let first = *rows
            .first()
            .ok_or_else(|| NumError::Argument("matrix with zero rows".into()))?;
        let cols = self.value(first).len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for &r in rows {
            self.same_shape("rows_to_matrix", first, r)?;
            data.extend_from_slice(self.value(r).data());
        }
        Ok(self.push(
            Array::from_vec(&[rows.len(), cols], data)?,
            Op::RowsToMatrix {
                rows: rows.to_vec(),
            },
        ))
    }

    /// Stack equal-length vectors as the columns of a matrix: `k` vectors of
    /// length `d` give a `[d, k]` matrix.
    pub fn cols_to_matrix(&mut self, cols: &[NodeRef]) -> Result<NodeRef, NumError> {
        let first = *cols
            .first()
            .ok_or_else(|| NumError::Argument("matrix with zero columns".into()))?;
        let dim = self.value(first).len();
        let k = cols.len();
        let mut data = vec![0.0; dim * k];
        for (j, &c) in cols.iter().enumerate() {
            self.same_shape("cols_to_matrix", first, c)?;
            for (r, &v) in self.value(c).data().iter().enumerate() {
                data[r * k + j] = v;
            }
        }
        Ok(self.push(
            Array::from_vec(&[dim, k], data)?,
            Op::ColsToMatrix {
                cols: cols.to_vec(),
            },
        ))
    }

    /// Convolution feature map. `input` is a `[unit_dim, n]` matrix whose
    /// columns are unit embeddings; `kernel` holds `unit_dim * width` weights
    /// (a `[unit_dim, width]` kernel, row-major); `bias` is a scalar. Entry
    /// `j` of the result is `tanh(<input[:, j..j+width], kernel> + bias)`,
    /// giving a feature map of length `n - width + 1`.
    pub fn conv_map(
        &mut self,
        input: NodeRef,
        kernel: NodeRef,
        bias: NodeRef,
        width: usize,
    ) -> Result<NodeRef, NumError> {
        let iv = self.value(input);
        if !iv.is_matrix() {
            return Err(NumError::ShapeMismatch {
                op: "conv_map",
                left: iv.shape().to_vec(),
                right: vec![],
            });
        }
        let unit_dim = iv.rows();
        let n = iv.cols();
        let kv = self.value(kernel);
        if kv.len() != unit_dim * width || width == 0 {
            return Err(NumError::ShapeMismatch {
                op: "conv_map",
                left: iv.shape().to_vec(),
                right: kv.shape().to_vec(),
            });
        }
        if !self.value(bias).is_scalar() {
            return Err(NumError::Argument("conv_map bias must be a scalar".into()));
        }
        if n < width {
            return Err(NumError::Contract(format!(
                "conv_map input has {n} columns but the kernel is {width} wide"
            )));
        }
        let out_len = n - width + 1;
        let b = self.value(bias).at(0);
        let mut out = vec![0.0; out_len];
        let id = self.value(input).data();
        let kd = self.value(kernel).data();
        for (j, o) in out.iter_mut().enumerate() {
            let mut acc = b;
            for r in 0..unit_dim {
                let in_row = &id[r * n + j..r * n + j + width];
                let k_row = &kd[r * width..(r + 1) * width];
                acc += in_row.iter().zip(k_row).map(|(a, b)| a * b).sum::<f64>();
            }
            *o = acc.tanh();
        }
        Ok(self.push(
            Array::vector(out),
            Op::ConvMap {
                input,
                kernel,
                bias,
                width,
            },
        ))
    }

    /// Pass the value through and stop the gradient.
    pub fn detach(&mut self, x: NodeRef) -> NodeRef {
        let value = self.value(x).clone();
        self.push(value, Op::Detach)
    }

    /// Affine transform `w · x + b`.
    pub fn affine(&mut self, x: NodeRef, w: NodeRef, b: NodeRef) -> Result<NodeRef, NumError> {
        let wx = self.matvec(w, x)?;
        self.add(wx, b)
    }

    /// Single-layer perceptron: affine transform of the concatenated inputs
    /// followed by tanh.
    pub fn mlp_tanh(
        &mut self,
        inputs: &[NodeRef],
        w: NodeRef,
        b: NodeRef,
    ) -> Result<NodeRef, NumError> {
        let x = if inputs.len() == 1 {
            inputs[0]
        } else {
            self.concat(inputs)?
        };
        let a = self.affine(x, w, b)?;
        Ok(self.tanh(a))
    }

    /// One LSTM cell step: sigmoid input/forget/output gates, tanh candidate,
    /// `c' = f*c + i*g`, `h' = o * tanh(c')`.
    pub fn lstm_step(
        &mut self,
        h: NodeRef,
        c: NodeRef,
        x: NodeRef,
        gates: &LstmGates,
    ) -> Result<(NodeRef, NodeRef), NumError> {
        let hx = self.concat(&[h, x])?;
        let i_pre = self.affine(hx, gates.w_input, gates.b_input)?;
        let i = self.sigmoid(i_pre);
        let f_pre = self.affine(hx, gates.w_forget, gates.b_forget)?;
        let f = self.sigmoid(f_pre);
        let g_pre = self.affine(hx, gates.w_cell, gates.b_cell)?;
        let g = self.tanh(g_pre);
        let o_pre = self.affine(hx, gates.w_output, gates.b_output)?;
        let o = self.sigmoid(o_pre);
        let fc = self.mul(f, c)?;
        let ig = self.mul(i, g)?;
        let c_next = self.add(fc, ig)?;
        let c_act = self.tanh(c_next);
        let h_next = self.mul(o, c_act)?;
        Ok((h_next, c_next))
    }

    /// Reverse pass from a scalar loss node, accumulating parameter
    /// gradients into `params` (which must be the set the leaves were built
    /// from).
    pub fn backward(&self, loss: NodeRef, params: &mut ParamSet) -> Result<(), NumError> {
        if !self.value(loss).is_scalar() {
            return Err(NumError::Argument(
                "backward requires a scalar loss node".into(),
            ));
        }
        let mut grads: Vec<Array> = self
            .nodes
            .iter()
            .map(|n| Array::zeros(n.value.shape()))
            .collect();
        grads[loss.0].data_mut()[0] = 1.0;

        for i in (0..self.nodes.len()).rev() {
            let g = std::mem::replace(&mut grads[i], Array::scalar(0.0));
            let gd = g.data();
            if gd.iter().all(|&v| v == 0.0) {
                continue;
            }
            match &self.nodes[i].op {
                Op::Constant => {}
                Op::Param { id } => params.accumulate_grad(*id, gd),
                Op::ParamRow { id, row } => params.accumulate_grad_row(*id, *row, gd),
                Op::MatVec { m, v } => {
                    let mv = &self.nodes[m.0].value;
                    let vv = &self.nodes[v.0].value;
                    let cols = mv.cols();
                    {
                        let gm = grads[m.0].data_mut();
                        for (r, &gr) in gd.iter().enumerate() {
                            for (c, &vc) in vv.data().iter().enumerate() {
                                gm[r * cols + c] += gr * vc;
                            }
                        }
                    }
                    let gv = grads[v.0].data_mut();
                    for (r, &gr) in gd.iter().enumerate() {
                        let row = mv.row(r);
                        for (c, &mc) in row.iter().enumerate() {
                            gv[c] += gr * mc;
                        }
                    }
                }
                Op::Add { a, b } => {
                    accumulate(grads[a.0].data_mut(), gd, 1.0);
                    accumulate(grads[b.0].data_mut(), gd, 1.0);
                }
                Op::SumN { terms } => {
                    for t in terms {
                        accumulate(grads[t.0].data_mut(), gd, 1.0);
                    }
                }
                Op::Concat { parts } => {
                    let mut off = 0;
                    for p in parts {
                        let len = self.nodes[p.0].value.len();
                        accumulate(grads[p.0].data_mut(), &gd[off..off + len], 1.0);
                        off += len;
                    }
                }
                Op::Tanh { x } => {
                    let y = self.nodes[i].value.data();
                    let gx = grads[x.0].data_mut();
                    for (k, &gk) in gd.iter().enumerate() {
                        gx[k] += gk * (1.0 - y[k] * y[k]);
                    }
                }
                Op::Sigmoid { x } => {
                    let y = self.nodes[i].value.data();
                    let gx = grads[x.0].data_mut();
                    for (k, &gk) in gd.iter().enumerate() {
                        gx[k] += gk * y[k] * (1.0 - y[k]);
                    }
                }
                Op::Mul { a, b } => {
                    let av = self.nodes[a.0].value.data();
                    let bv = self.nodes[b.0].value.data();
                    {
                        let ga = grads[a.0].data_mut();
                        for (k, &gk) in gd.iter().enumerate() {
                            ga[k] += gk * bv[k];
                        }
                    }
                    let gb = grads[b.0].data_mut();
                    for (k, &gk) in gd.iter().enumerate() {
                        gb[k] += gk * av[k];
                    }
                }
                Op::ScaleShift { x, scale } => {
                    accumulate(grads[x.0].data_mut(), gd, *scale);
                }
                Op::MaxPair { a, b } => {
                    let av = self.nodes[a.0].value.data();
                    let bv = self.nodes[b.0].value.data();
                    {
                        let ga = grads[a.0].data_mut();
                        for (k, &gk) in gd.iter().enumerate() {
                            if av[k] >= bv[k] {
                                ga[k] += gk;
                            }
                        }
                    }
                    let gb = grads[b.0].data_mut();
                    for (k, &gk) in gd.iter().enumerate() {
                        if av[k] < bv[k] {
                            gb[k] += gk;
                        }
                    }
                }
                Op::MaxAll { x, arg } => {
                    grads[x.0].data_mut()[*arg] += gd[0];
                }
                Op::SumAll { x } => {
                    let gx = grads[x.0].data_mut();
                    for v in gx.iter_mut() {
                        *v += gd[0];
                    }
                }
                Op::Dot { a, b } => {
                    let av = self.nodes[a.0].value.data();
                    let bv = self.nodes[b.0].value.data();
                    accumulate(grads[a.0].data_mut(), bv, gd[0]);
                    accumulate(grads[b.0].data_mut(), av, gd[0]);
                }
                Op::LogSoftmax { x, mask } => {
                    let y = self.nodes[i].value.data();
                    let gx = grads[x.0].data_mut();
                    let mut gsum = 0.0;
                    for (k, &gk) in gd.iter().enumerate() {
                        if mask != &Some(k) {
                            gsum += gk;
                        }
                    }
                    for k in 0..y.len() {
                        if mask == &Some(k) {
                            continue;
                        }
                        let p = y[k].exp();
                        gx[k] += gd[k] - p * gsum;
                    }
                }
                Op::Pick { x, idx } => {
                    grads[x.0].data_mut()[*idx] += gd[0];
                }
                Op::RowsToMatrix { rows } => {
                    let cols = self.nodes[i].value.cols();
                    for (r, node) in rows.iter().enumerate() {
                        accumulate(grads[node.0].data_mut(), &gd[r * cols..(r + 1) * cols], 1.0);
                    }
                }
                Op::ColsToMatrix { cols } => {
                    let k = cols.len();
                    for (j, node) in cols.iter().enumerate() {
                        let gc = grads[node.0].data_mut();
                        for (r, t) in gc.iter_mut().enumerate() {
                            *t += gd[r * k + j];
                        }
                    }
                }
                Op::ConvMap {
                    input,
                    kernel,
                    bias,
                    width,
                } => {
                    let y = self.nodes[i].value.data();
                    let iv = &self.nodes[input.0].value;
                    let kv = &self.nodes[kernel.0].value;
                    let unit_dim = iv.rows();
                    let n = iv.cols();
                    let mut gb = 0.0;
                    for (j, &gj) in gd.iter().enumerate() {
                        let gpre = gj * (1.0 - y[j] * y[j]);
                        if gpre == 0.0 {
                            continue;
                        }
                        gb += gpre;
                        {
                            let gk = grads[kernel.0].data_mut();
                            for r in 0..unit_dim {
                                for c in 0..*width {
                                    gk[r * width + c] += gpre * iv.data()[r * n + j + c];
                                }
                            }
                        }
                        let gi = grads[input.0].data_mut();
                        for r in 0..unit_dim {
                            for c in 0..*width {
                                gi[r * n + j + c] += gpre * kv.data()[r * width + c];
                            }
                        }
                    }
                    grads[bias.0].data_mut()[0] += gb;
                }
                Op::Detach => {}
            }
        }
        Ok(())
    }
}

fn accumulate(target: &mut [f64], source: &[f64], scale: f64) {
    debug_assert_eq!(target.len(), source.len());
    for (t, s) in target.iter_mut().zip(source) {
        *t += scale * s;
    }
}
