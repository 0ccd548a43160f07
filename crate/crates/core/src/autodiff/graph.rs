//! Reverse-mode differentiation over a recorded operation graph.
//!
//! Nodes are appended in evaluation order, so operands always precede the
//! node that consumes them and a reverse sweep over node ids is a valid
//! topological traversal. Every vector-Jacobian product is itself written in
//! terms of graph ops; with `create_graph` the backward sweep records those
//! ops too, and the resulting gradients can be differentiated again. That is
//! what the gradient penalty needs: `‖∇ₓD(x)‖` must be differentiable with
//! respect to the critic's weights.
//!
//! A [`Graph`] is scratch space for one forward/backward pass. Parameters
//! live outside it as plain [`Tensor`]s and are bound in as leaves.

use std::cell::{Cell, Ref, RefCell};
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone)]
enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    Offset(usize),
    MatMul(usize, usize),
    Transpose(usize),
    Exp(usize),
    Ln(usize),
    Sqrt(usize),
    Recip(usize),
    LeakyRelu(usize, f64),
    SumAll(usize),
    Expand(usize),
    SumRows(usize),
    BroadcastRows(usize),
    SumCols(usize),
    BroadcastCols(usize),
    Reshape(usize),
    ConcatCols(usize, usize),
    SliceCols(usize, usize),
    PadCols(usize, usize),
    ConcatRows(Rc<[usize]>),
    GatherRows(usize, Rc<[usize]>),
    ScatterRows(usize, Rc<[usize]>),
    LogSoftmaxRows(usize),
    /// Fused `mean_b Σ_c −target·log softmax(logits)` (plus a constant).
    /// Its VJP treats `softmax(logits)` as a constant, so it is first-order only.
    SoftTargetXent { logits: usize, target: Rc<Tensor> },
}

impl Op {
    fn parents(&self) -> Vec<usize> {
        use Op::*;
        match self {
            Leaf => vec![],
            Add(a, b) | Sub(a, b) | Mul(a, b) | MatMul(a, b) | ConcatCols(a, b) => vec![*a, *b],
            Scale(a, _) | Offset(a) | Transpose(a) | Exp(a) | Ln(a) | Sqrt(a) | Recip(a)
            | LeakyRelu(a, _) | SumAll(a) | Expand(a) | SumRows(a) | BroadcastRows(a)
            | SumCols(a) | BroadcastCols(a) | Reshape(a) | SliceCols(a, _) | PadCols(a, _)
            | GatherRows(a, _) | ScatterRows(a, _) | LogSoftmaxRows(a) => vec![*a],
            ConcatRows(parts) => parts.to_vec(),
            SoftTargetXent { logits, .. } => vec![*logits],
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Op::SoftTargetXent { .. } => "soft_target_cross_entropy",
            _ => "op",
        }
    }

    fn twice_differentiable(&self) -> bool {
        !matches!(self, Op::SoftTargetXent { .. })
    }
}

struct Node {
    value: Rc<Tensor>,
    requires_grad: bool,
    op: Op,
}

/// Operation record for one forward (and optionally higher-order backward) pass.
pub struct Graph {
    nodes: RefCell<Vec<Node>>,
    recording: Cell<bool>,
}

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy)]
pub struct Var<'g> {
    graph: &'g Graph,
    id: usize,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Var")
            .field("id", &self.id)
            .field("shape", &self.shape())
            .finish()
    }
}

impl Default for Graph {
    fn default() -> Self {
        Self::new()
    }
}

impl Graph {
    pub fn new() -> Self {
        Graph {
            nodes: RefCell::new(Vec::new()),
            recording: Cell::new(true),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// A leaf that gradients flow into.
    pub fn param(&self, value: Tensor) -> Var<'_> {
        self.push_leaf(value, true)
    }

    /// A leaf that never receives gradients.
    pub fn constant(&self, value: Tensor) -> Var<'_> {
        self.push_leaf(value, false)
    }

    fn push_leaf(&self, value: Tensor, requires_grad: bool) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value: Rc::new(value),
            requires_grad,
            op: Op::Leaf,
        });
        Var {
            graph: self,
            id: nodes.len() - 1,
        }
    }

    fn push(&self, value: Tensor, op: Op) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        let requires_grad =
            self.recording.get() && op.parents().iter().any(|&p| nodes[p].requires_grad);
        let op = if requires_grad { op } else { Op::Leaf };
        nodes.push(Node {
            value: Rc::new(value),
            requires_grad,
            op,
        });
        Var {
            graph: self,
            id: nodes.len() - 1,
        }
    }

    fn value_of(&self, id: usize) -> Rc<Tensor> {
        Rc::clone(&self.nodes.borrow()[id].value)
    }

    fn var(&self, id: usize) -> Var<'_> {
        Var { graph: self, id }
    }

    /// Gradients of the scalar `output` with respect to each of `wrt`.
    ///
    /// Entries are `None` where `output` does not depend on the variable.
    /// With `create_graph`, the returned gradients are themselves recorded
    /// and can be differentiated again; ops with only a first-order VJP
    /// then yield [`Error::Capability`].
    pub fn grad<'g>(
        &'g self,
        output: Var<'g>,
        wrt: &[Var<'g>],
        create_graph: bool,
    ) -> Result<Vec<Option<Var<'g>>>> {
        assert!(std::ptr::eq(output.graph, self), "variable from another graph");
        if output.value().len() != 1 {
            return Err(Error::dim("grad", &output.shape(), &[1]));
        }
        let end = output.id + 1;

        // Nodes from which some `wrt` target is reachable through grad-carrying edges.
        let mut needed = vec![false; end];
        {
            let nodes = self.nodes.borrow();
            for w in wrt {
                if w.id < end && nodes[w.id].requires_grad {
                    needed[w.id] = true;
                }
            }
            for i in 0..end {
                if needed[i] || !nodes[i].requires_grad {
                    continue;
                }
                needed[i] = nodes[i].op.parents().iter().any(|&p| needed[p]);
            }
        }

        let mut grads: Vec<Option<Var<'g>>> = vec![None; end];
        if !needed[output.id] {
            return Ok(wrt.iter().map(|_| None).collect());
        }

        let previous = self.recording.replace(create_graph);
        let result = (|| {
            grads[output.id] = Some(self.constant(Tensor::ones(&output.shape())));
            for id in (0..end).rev() {
                if !needed[id] {
                    continue;
                }
                let Some(upstream) = grads[id] else { continue };
                let op = self.nodes.borrow()[id].op.clone();
                if matches!(op, Op::Leaf) {
                    continue;
                }
                if create_graph && !op.twice_differentiable() {
                    return Err(Error::Capability(op.name()));
                }
                for (parent, contribution) in self.vjp(&op, id, upstream, &needed)? {
                    grads[parent] = Some(match grads[parent] {
                        Some(existing) => existing.add(contribution)?,
                        None => contribution,
                    });
                }
            }
            Ok(())
        })();
        self.recording.set(previous);
        result?;

        Ok(wrt
            .iter()
            .map(|w| grads.get(w.id).copied().flatten())
            .collect())
    }

    /// First-order gradients as plain tensors, zero-filled where unused.
    pub fn gradients(&self, output: Var<'_>, wrt: &[Var<'_>]) -> Result<Vec<Tensor>> {
        let grads = self.grad(output, wrt, false)?;
        Ok(grads
            .into_iter()
            .zip(wrt)
            .map(|(g, w)| match g {
                Some(g) => (*g.value()).clone(),
                None => Tensor::zeros(&w.shape()),
            })
            .collect())
    }

    fn vjp<'g>(
        &'g self,
        op: &Op,
        out_id: usize,
        g: Var<'g>,
        needed: &[bool],
    ) -> Result<Vec<(usize, Var<'g>)>> {
        use Op::*;
        let out = self.var(out_id);
        let v = |id: usize| self.var(id);
        let mut result = Vec::with_capacity(2);
        let mut emit = |id: usize, f: &mut dyn FnMut() -> Result<Var<'g>>| -> Result<()> {
            if needed[id] {
                result.push((id, f()?));
            }
            Ok(())
        };
        match op {
            Leaf => {}
            Add(a, b) => {
                emit(*a, &mut || Ok(g))?;
                emit(*b, &mut || Ok(g))?;
            }
            Sub(a, b) => {
                emit(*a, &mut || Ok(g))?;
                emit(*b, &mut || Ok(g.scale(-1.0)))?;
            }
            Mul(a, b) => {
                emit(*a, &mut || g.mul(v(*b)))?;
                emit(*b, &mut || g.mul(v(*a)))?;
            }
            Scale(a, c) => emit(*a, &mut || Ok(g.scale(*c)))?,
            Offset(a) => emit(*a, &mut || Ok(g))?,
            MatMul(a, b) => {
                emit(*a, &mut || g.matmul(v(*b).transpose()?))?;
                emit(*b, &mut || v(*a).transpose()?.matmul(g))?;
            }
            Transpose(a) => emit(*a, &mut || g.transpose())?,
            Exp(a) => emit(*a, &mut || g.mul(out))?,
            Ln(a) => emit(*a, &mut || g.mul(v(*a).recip()))?,
            Sqrt(a) => emit(*a, &mut || g.mul(out.recip().scale(0.5)))?,
            Recip(a) => emit(*a, &mut || Ok(g.mul(out.mul(out)?)?.scale(-1.0)))?,
            LeakyRelu(a, slope) => emit(*a, &mut || {
                let mask = v(*a).value().map(|x| if x > 0.0 { 1.0 } else { *slope });
                g.mul(self.constant(mask))
            })?,
            SumAll(a) => emit(*a, &mut || g.expand(&v(*a).shape()))?,
            Expand(a) => emit(*a, &mut || Ok(g.sum_all()))?,
            SumRows(a) => emit(*a, &mut || g.broadcast_rows(v(*a).value().rows()))?,
            BroadcastRows(a) => emit(*a, &mut || g.sum_rows())?,
            SumCols(a) => emit(*a, &mut || g.broadcast_cols(v(*a).value().cols()))?,
            BroadcastCols(a) => emit(*a, &mut || g.sum_cols())?,
            Reshape(a) => emit(*a, &mut || g.reshape(&v(*a).shape()))?,
            ConcatCols(a, b) => {
                let p = v(*a).value().cols();
                let q = v(*b).value().cols();
                emit(*a, &mut || g.slice_cols(0, p))?;
                emit(*b, &mut || g.slice_cols(p, q))?;
            }
            SliceCols(a, start) => {
                let total = v(*a).value().cols();
                emit(*a, &mut || g.pad_cols(*start, total))?;
            }
            PadCols(a, start) => {
                let width = v(*a).value().cols();
                emit(*a, &mut || g.slice_cols(*start, width))?;
            }
            ConcatRows(parts) => {
                let mut offset = 0;
                for &p in parts.iter() {
                    let rows = v(p).value().rows();
                    emit(p, &mut || g.slice_rows(offset, rows))?;
                    offset += rows;
                }
            }
            GatherRows(a, idx) => {
                let rows = v(*a).value().rows();
                emit(*a, &mut || g.scatter_rows(Rc::clone(idx), rows))?;
            }
            ScatterRows(a, idx) => emit(*a, &mut || g.gather_rows(Rc::clone(idx)))?,
            LogSoftmaxRows(a) => emit(*a, &mut || {
                let cols = out.value().cols();
                let probs = out.exp();
                g.sub(probs.mul(g.sum_cols()?.broadcast_cols(cols)?)?)
            })?,
            SoftTargetXent { logits, target } => emit(*logits, &mut || {
                let logits_value = v(*logits).value();
                let batch = logits_value.rows() as f64;
                let direction = logits_value
                    .softmax_rows()
                    .zip_map(target, "soft_target_cross_entropy", |p, t| (p - t) / batch)?;
                g.expand(logits_value.shape())?.mul(self.constant(direction))
            })?,
        }
        Ok(result)
    }
}

impl<'g> Var<'g> {
    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn value(&self) -> Rc<Tensor> {
        self.graph.value_of(self.id)
    }

    /// Borrow the node value without bumping the refcount.
    pub fn with_value<T>(&self, f: impl FnOnce(&Tensor) -> T) -> T {
        let nodes: Ref<'_, Vec<Node>> = self.graph.nodes.borrow();
        f(&nodes[self.id].value)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.with_value(|t| t.shape().to_vec())
    }

    pub fn requires_grad(&self) -> bool {
        self.graph.nodes.borrow()[self.id].requires_grad
    }

    fn same_graph(&self, other: &Var<'g>) {
        assert!(
            std::ptr::eq(self.graph, other.graph),
            "variables from different graphs"
        );
    }

    fn binary(
        self,
        other: Var<'g>,
        name: &'static str,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var<'g>> {
        self.same_graph(&other);
        let value = {
            let a = self.value();
            let b = other.value();
            a.zip_map(&b, name, f)?
        };
        Ok(self.graph.push(value, op))
    }

    pub fn add(self, other: Var<'g>) -> Result<Var<'g>> {
        self.binary(other, "add", |a, b| a + b, Op::Add(self.id, other.id))
    }

    pub fn sub(self, other: Var<'g>) -> Result<Var<'g>> {
        self.binary(other, "sub", |a, b| a - b, Op::Sub(self.id, other.id))
    }

    pub fn mul(self, other: Var<'g>) -> Result<Var<'g>> {
        self.binary(other, "mul", |a, b| a * b, Op::Mul(self.id, other.id))
    }

    pub fn scale(self, c: f64) -> Var<'g> {
        let value = self.value().map(|x| x * c);
        self.graph.push(value, Op::Scale(self.id, c))
    }

    pub fn offset(self, c: f64) -> Var<'g> {
        let value = self.value().map(|x| x + c);
        self.graph.push(value, Op::Offset(self.id))
    }

    pub fn matmul(self, other: Var<'g>) -> Result<Var<'g>> {
        self.same_graph(&other);
        let value = self.value().matmul(&other.value())?;
        Ok(self.graph.push(value, Op::MatMul(self.id, other.id)))
    }

    pub fn transpose(self) -> Result<Var<'g>> {
        let value = self.value().transpose()?;
        Ok(self.graph.push(value, Op::Transpose(self.id)))
    }

    pub fn exp(self) -> Var<'g> {
        let value = self.value().map(f64::exp);
        self.graph.push(value, Op::Exp(self.id))
    }

    pub fn ln(self) -> Var<'g> {
        let value = self.value().map(f64::ln);
        self.graph.push(value, Op::Ln(self.id))
    }

    pub fn sqrt(self) -> Var<'g> {
        let value = self.value().map(f64::sqrt);
        self.graph.push(value, Op::Sqrt(self.id))
    }

    pub fn recip(self) -> Var<'g> {
        let value = self.value().map(|x| 1.0 / x);
        self.graph.push(value, Op::Recip(self.id))
    }

    pub fn square(self) -> Result<Var<'g>> {
        self.mul(self)
    }

    /// `max(x, slope·x)` elementwise.
    pub fn leaky_relu(self, slope: f64) -> Var<'g> {
        let value = self.value().map(|x| if x > 0.0 { x } else { slope * x });
        self.graph.push(value, Op::LeakyRelu(self.id, slope))
    }

    pub fn sum_all(self) -> Var<'g> {
        let value = Tensor::scalar(self.value().sum());
        self.graph.push(value, Op::SumAll(self.id))
    }

    pub fn mean_all(self) -> Var<'g> {
        let n = self.with_value(Tensor::len) as f64;
        self.sum_all().scale(1.0 / n)
    }

    /// Broadcast a single-element tensor to `shape`.
    pub fn expand(self, shape: &[usize]) -> Result<Var<'g>> {
        let v = self.value();
        if v.len() != 1 {
            return Err(Error::dim("expand", v.shape(), shape));
        }
        let value = Tensor::full(shape, v.item());
        Ok(self.graph.push(value, Op::Expand(self.id)))
    }

    /// `m×n → 1×n`.
    pub fn sum_rows(self) -> Result<Var<'g>> {
        let v = self.value();
        let (m, n) = (v.rows(), v.cols());
        let mut out = vec![0.0; n];
        for r in 0..m {
            for (o, x) in out.iter_mut().zip(v.row(r)) {
                *o += x;
            }
        }
        Ok(self.graph.push(Tensor::matrix(1, n, out)?, Op::SumRows(self.id)))
    }

    /// `1×n → m×n`.
    pub fn broadcast_rows(self, m: usize) -> Result<Var<'g>> {
        let v = self.value();
        if v.rows() != 1 {
            return Err(Error::dim("broadcast_rows", v.shape(), &[1, v.cols()]));
        }
        let n = v.cols();
        let mut out = Vec::with_capacity(m * n);
        for _ in 0..m {
            out.extend_from_slice(v.data());
        }
        Ok(self
            .graph
            .push(Tensor::matrix(m, n, out)?, Op::BroadcastRows(self.id)))
    }

    /// `m×n → m×1`.
    pub fn sum_cols(self) -> Result<Var<'g>> {
        let v = self.value();
        let m = v.rows();
        let out = (0..m).map(|r| v.row(r).iter().sum()).collect();
        Ok(self.graph.push(Tensor::matrix(m, 1, out)?, Op::SumCols(self.id)))
    }

    /// `m×1 → m×n`.
    pub fn broadcast_cols(self, n: usize) -> Result<Var<'g>> {
        let v = self.value();
        if v.cols() != 1 {
            return Err(Error::dim("broadcast_cols", v.shape(), &[v.rows(), 1]));
        }
        let m = v.rows();
        let mut out = Vec::with_capacity(m * n);
        for &x in v.data() {
            out.extend(std::iter::repeat(x).take(n));
        }
        Ok(self
            .graph
            .push(Tensor::matrix(m, n, out)?, Op::BroadcastCols(self.id)))
    }

    pub fn reshape(self, shape: &[usize]) -> Result<Var<'g>> {
        let value = self.value().reshape(shape)?;
        Ok(self.graph.push(value, Op::Reshape(self.id)))
    }

    pub fn concat_cols(self, other: Var<'g>) -> Result<Var<'g>> {
        self.same_graph(&other);
        let (a, b) = (self.value(), other.value());
        if a.rows() != b.rows() {
            return Err(Error::dim("concat_cols", a.shape(), b.shape()));
        }
        let (p, q) = (a.cols(), b.cols());
        let mut out = Vec::with_capacity(a.rows() * (p + q));
        for r in 0..a.rows() {
            out.extend_from_slice(a.row(r));
            out.extend_from_slice(b.row(r));
        }
        Ok(self.graph.push(
            Tensor::matrix(a.rows(), p + q, out)?,
            Op::ConcatCols(self.id, other.id),
        ))
    }

    pub fn slice_cols(self, start: usize, width: usize) -> Result<Var<'g>> {
        let v = self.value();
        if start + width > v.cols() {
            return Err(Error::dim("slice_cols", v.shape(), &[start, width]));
        }
        let mut out = Vec::with_capacity(v.rows() * width);
        for r in 0..v.rows() {
            out.extend_from_slice(&v.row(r)[start..start + width]);
        }
        Ok(self.graph.push(
            Tensor::matrix(v.rows(), width, out)?,
            Op::SliceCols(self.id, start),
        ))
    }

    /// Zero-pads columns so that the input occupies `start..start+cols` of `total`.
    pub fn pad_cols(self, start: usize, total: usize) -> Result<Var<'g>> {
        let v = self.value();
        let width = v.cols();
        if start + width > total {
            return Err(Error::dim("pad_cols", v.shape(), &[start, total]));
        }
        let mut out = vec![0.0; v.rows() * total];
        for r in 0..v.rows() {
            out[r * total + start..r * total + start + width].copy_from_slice(v.row(r));
        }
        Ok(self.graph.push(
            Tensor::matrix(v.rows(), total, out)?,
            Op::PadCols(self.id, start),
        ))
    }

    pub fn concat_rows(parts: &[Var<'g>]) -> Result<Var<'g>> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Data("concat_rows of nothing".into()))?;
        let graph = first.graph;
        let cols = first.value().cols();
        let mut rows = 0;
        let mut out = Vec::new();
        for p in parts {
            first.same_graph(p);
            let v = p.value();
            if v.cols() != cols {
                return Err(Error::dim("concat_rows", &[rows, cols], v.shape()));
            }
            rows += v.rows();
            out.extend_from_slice(v.data());
        }
        let ids: Rc<[usize]> = parts.iter().map(|p| p.id).collect();
        Ok(graph.push(Tensor::matrix(rows, cols, out)?, Op::ConcatRows(ids)))
    }

    pub fn gather_rows(self, idx: Rc<[usize]>) -> Result<Var<'g>> {
        let v = self.value();
        let (rows, cols) = (v.rows(), v.cols());
        let mut out = Vec::with_capacity(idx.len() * cols);
        for &i in idx.iter() {
            if i >= rows {
                return Err(Error::Index {
                    what: "row",
                    index: i,
                    bound: rows,
                });
            }
            out.extend_from_slice(v.row(i));
        }
        Ok(self.graph.push(
            Tensor::matrix(idx.len(), cols, out)?,
            Op::GatherRows(self.id, idx),
        ))
    }

    pub fn slice_rows(self, start: usize, len: usize) -> Result<Var<'g>> {
        self.gather_rows((start..start + len).collect())
    }

    /// Row `i` of the input is added into row `idx[i]` of an `n`-row zero matrix.
    pub fn scatter_rows(self, idx: Rc<[usize]>, n: usize) -> Result<Var<'g>> {
        let v = self.value();
        if v.rows() != idx.len() {
            return Err(Error::dim("scatter_rows", v.shape(), &[idx.len()]));
        }
        let cols = v.cols();
        let mut out = vec![0.0; n * cols];
        for (r, &i) in idx.iter().enumerate() {
            if i >= n {
                return Err(Error::Index {
                    what: "row",
                    index: i,
                    bound: n,
                });
            }
            for (o, x) in out[i * cols..(i + 1) * cols].iter_mut().zip(v.row(r)) {
                *o += x;
            }
        }
        Ok(self.graph.push(
            Tensor::matrix(n, cols, out)?,
            Op::ScatterRows(self.id, idx),
        ))
    }

    pub fn log_softmax_rows(self) -> Var<'g> {
        let v = self.value();
        let c = v.cols();
        let mut data = v.data().to_vec();
        for row in data.chunks_mut(c) {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
            for x in row.iter_mut() {
                *x -= lse;
            }
        }
        let value = Tensor::new(v.shape().to_vec(), data).expect("same shape");
        self.graph.push(value, Op::LogSoftmaxRows(self.id))
    }

    pub fn softmax_rows(self) -> Var<'g> {
        self.log_softmax_rows().exp()
    }

    /// `mean_b Σ_c target·(ln target − log softmax(self))`, with `0·ln 0 = 0`.
    ///
    /// `target` rows are taken as given; callers validate them.
    pub(crate) fn soft_target_xent(self, target: Rc<Tensor>) -> Result<Var<'g>> {
        let logits = self.value();
        if logits.shape() != target.shape() {
            return Err(Error::dim("soft_target_cross_entropy", logits.shape(), target.shape()));
        }
        let c = logits.cols();
        let b = logits.rows();
        let mut total = 0.0;
        for r in 0..b {
            let row = logits.row(r);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
            for k in 0..c {
                let t = target.row(r)[k];
                if t > 0.0 {
                    total += t * (t.ln() - (row[k] - lse));
                }
            }
        }
        Ok(self.graph.push(
            Tensor::scalar(total / b as f64),
            Op::SoftTargetXent {
                logits: self.id,
                target,
            },
        ))
    }
}
