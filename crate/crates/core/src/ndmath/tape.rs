//! Reverse-mode automatic differentiation over dense tensors.
//!
//! Operations are appended to a [`Tape`] as they are evaluated. Backward
//! propagation walks the tape in exact reverse recording order and expresses
//! every vector-Jacobian product with the same taped operations, so the
//! gradient computation itself can be differentiated again when
//! `create_graph` is requested. The gradient-penalty term relies on this.

use std::cell::{Cell, Ref, RefCell};
use std::rc::Rc;

use super::tensor::matmul_t;
use super::{Real, Tensor};
use crate::error::{dim_err, Error, Result};

type NodeId = usize;

#[derive(Clone, Debug)]
enum Op<F> {
    Leaf,
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Neg(NodeId),
    Scale(NodeId, F),
    AddScalar(NodeId),
    MatMul {
        a: NodeId,
        b: NodeId,
        trans_a: bool,
        trans_b: bool,
    },
    Sum(NodeId),
    BroadcastScalar(NodeId),
    RowSum(NodeId),
    ColSum(NodeId),
    BroadcastRows(NodeId),
    BroadcastCols(NodeId),
    Reshape(NodeId),
    LeakyRelu(NodeId, F),
    Tanh(NodeId),
    Sqrt(NodeId),
    Recip(NodeId),
    ConcatCols(NodeId, NodeId),
    SliceCols(NodeId, usize),
    PadCols(NodeId, usize),
    Softmax(NodeId),
    SoftmaxCrossEntropy(NodeId, Rc<[usize]>),
}

struct Node<F> {
    value: Rc<Tensor<F>>,
    op: Op<F>,
    requires_grad: bool,
}

/// Ordered record of evaluated operations.
pub struct Tape<F> {
    nodes: RefCell<Vec<Node<F>>>,
    grad_enabled: Cell<bool>,
}

impl<F: Real> Default for Tape<F> {
    fn default() -> Self {
        Self::new()
    }
}

/// Handle to a value recorded on a tape.
#[derive(Clone, Copy)]
pub struct Var<'t, F> {
    tape: &'t Tape<F>,
    id: NodeId,
}

impl<F: Real> std::fmt::Debug for Var<'_, F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var#{}({:?})", self.id, self.value())
    }
}

/// Gradients of a scalar root with respect to the leaves that require them.
pub struct Gradients<F> {
    leaves: Vec<Option<Tensor<F>>>,
}

impl<F: Real> Gradients<F> {
    /// Gradient for `var`, or `None` when no differentiable path reaches it.
    pub fn get(&self, var: Var<'_, F>) -> Option<&Tensor<F>> {
        self.leaves.get(var.id).and_then(Option::as_ref)
    }

    /// Gradient for `var`, with zeros standing in for an unreachable leaf.
    pub fn wrt(&self, var: Var<'_, F>) -> Tensor<F> {
        self.get(var)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(var.value().shape()))
    }
}

struct GradModeGuard<'a> {
    cell: &'a Cell<bool>,
    prev: bool,
}

impl Drop for GradModeGuard<'_> {
    fn drop(&mut self) {
        self.cell.set(self.prev);
    }
}

impl<F: Real> Tape<F> {
    pub fn new() -> Self {
        Self {
            nodes: RefCell::new(Vec::new()),
            grad_enabled: Cell::new(true),
        }
    }

    /// Number of recorded nodes, leaves included.
    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Records a leaf. Leaves that require grad receive entries in [`Gradients`].
    pub fn leaf(&self, value: Tensor<F>, requires_grad: bool) -> Result<Var<'_, F>> {
        value.ensure_finite("leaf")?;
        Ok(self.push_node(Node {
            value: Rc::new(value),
            op: Op::Leaf,
            requires_grad,
        }))
    }

    pub fn constant(&self, value: Tensor<F>) -> Result<Var<'_, F>> {
        self.leaf(value, false)
    }

    pub fn param(&self, value: Tensor<F>) -> Result<Var<'_, F>> {
        self.leaf(value, true)
    }

    fn push_node(&self, node: Node<F>) -> Var<'_, F> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(node);
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    fn node_value(&self, id: NodeId) -> Rc<Tensor<F>> {
        Rc::clone(&self.nodes.borrow()[id].value)
    }

    fn node_requires_grad(&self, id: NodeId) -> bool {
        self.nodes.borrow()[id].requires_grad
    }

    fn record(&self, name: &'static str, value: Tensor<F>, op: Op<F>, inputs: &[NodeId]) -> Result<Var<'_, F>> {
        value.ensure_finite(name)?;
        let requires_grad = self.grad_enabled.get() && {
            let nodes = self.nodes.borrow();
            inputs.iter().any(|&i| nodes[i].requires_grad)
        };
        Ok(self.push_node(Node {
            value: Rc::new(value),
            op,
            requires_grad,
        }))
    }

    fn no_grad_guard(&self, enabled: bool) -> GradModeGuard<'_> {
        let prev = self.grad_enabled.replace(enabled);
        GradModeGuard {
            cell: &self.grad_enabled,
            prev,
        }
    }

    /// Propagates from `root`, returning the gradient node of every visited id.
    fn backprop<'t>(&'t self, root: Var<'t, F>, create_graph: bool) -> Result<Vec<Option<Var<'t, F>>>> {
        if !std::ptr::eq(root.tape, self) {
            return Err(Error::Usage("root belongs to a different tape".into()));
        }
        let root_value = root.value();
        if root_value.len() != 1 {
            return Err(Error::Usage(format!(
                "backward needs a scalar root, got shape {:?}",
                root_value.shape()
            )));
        }
        let _guard = self.no_grad_guard(create_graph);
        let mut grads: Vec<Option<Var<'t, F>>> = vec![None; root.id + 1];
        if !self.node_requires_grad(root.id) {
            return Ok(grads);
        }
        grads[root.id] = Some(self.constant(Tensor::ones(root_value.shape()))?);

        for id in (0..=root.id).rev() {
            let Some(g) = grads[id] else { continue };
            let op = {
                let nodes = self.nodes.borrow();
                if !nodes[id].requires_grad {
                    continue;
                }
                nodes[id].op.clone()
            };
            let this = Var { tape: self, id };
            for (input, grad) in self.vjp(&op, this, g)? {
                if !self.node_requires_grad(input) {
                    continue;
                }
                grads[input] = Some(match grads[input] {
                    Some(prev) => prev.add(grad)?,
                    None => grad,
                });
            }
        }
        Ok(grads)
    }

    /// Vector-Jacobian products of one node, as `(input, gradient)` pairs.
    fn vjp<'t>(&'t self, op: &Op<F>, out: Var<'t, F>, g: Var<'t, F>) -> Result<Vec<(NodeId, Var<'t, F>)>> {
        let var = |id| Var { tape: self, id };
        let shape_of = |id: NodeId| self.node_value(id).shape().to_vec();
        Ok(match *op {
            Op::Leaf => Vec::new(),
            Op::Add(a, b) => vec![(a, g), (b, g)],
            Op::Sub(a, b) => vec![(a, g), (b, g.neg()?)],
            Op::Mul(a, b) => vec![(a, g.mul(var(b))?), (b, g.mul(var(a))?)],
            Op::Neg(a) => vec![(a, g.neg()?)],
            Op::Scale(a, c) => vec![(a, g.scale(c)?)],
            Op::AddScalar(a) => vec![(a, g)],
            Op::MatMul {
                a,
                b,
                trans_a,
                trans_b,
            } => {
                let (va, vb) = (var(a), var(b));
                let ga = if trans_a {
                    vb.matmul_t(trans_b, g, true)?
                } else {
                    g.matmul_t(false, vb, !trans_b)?
                };
                let gb = if trans_b {
                    g.matmul_t(true, va, trans_a)?
                } else {
                    va.matmul_t(!trans_a, g, false)?
                };
                vec![(a, ga), (b, gb)]
            }
            Op::Sum(a) => vec![(a, g.broadcast_scalar(&shape_of(a))?)],
            Op::BroadcastScalar(a) => vec![(a, g.sum()?.reshape(&shape_of(a))?)],
            Op::RowSum(a) => {
                let n = self.node_value(a).cols();
                vec![(a, g.broadcast_cols(n)?)]
            }
            Op::ColSum(a) => {
                let b = self.node_value(a).rows();
                vec![(a, g.broadcast_rows(b)?)]
            }
            Op::BroadcastRows(a) => vec![(a, g.col_sum()?)],
            Op::BroadcastCols(a) => vec![(a, g.row_sum()?)],
            Op::Reshape(a) => vec![(a, g.reshape(&shape_of(a))?)],
            Op::LeakyRelu(a, slope) => {
                let mask = self.node_value(a).map(|v| if v > F::zero() { F::one() } else { slope });
                vec![(a, g.mul(self.constant(mask)?)?)]
            }
            Op::Tanh(a) => {
                let d = out.mul(out)?.neg()?.add_scalar(F::one())?;
                vec![(a, g.mul(d)?)]
            }
            Op::Sqrt(a) => vec![(a, g.mul(out.recip()?)?.scale(F::from_f64(0.5))?)],
            Op::Recip(a) => vec![(a, g.mul(out)?.mul(out)?.neg()?)],
            Op::ConcatCols(a, b) => {
                let wa = self.node_value(a).cols();
                let wb = self.node_value(b).cols();
                vec![(a, g.slice_cols(0, wa)?), (b, g.slice_cols(wa, wa + wb)?)]
            }
            Op::SliceCols(a, start) => {
                let total = self.node_value(a).cols();
                vec![(a, g.pad_cols(start, total)?)]
            }
            Op::PadCols(a, start) => {
                let w = self.node_value(a).cols();
                vec![(a, g.slice_cols(start, start + w)?)]
            }
            Op::Softmax(a) => {
                let n = out.value().cols();
                let inner = g.mul(out)?.row_sum()?.broadcast_cols(n)?;
                vec![(a, out.mul(g.sub(inner)?)?)]
            }
            Op::SoftmaxCrossEntropy(a, ref labels) => {
                let logits = var(a);
                let value = logits.value();
                let (b, c) = value.dims2()?;
                let mut onehot = Tensor::zeros(&[b, c]);
                for (i, &l) in labels.iter().enumerate() {
                    onehot.data_mut()[i * c + l] = F::one();
                }
                let diff = logits.softmax()?.sub(self.constant(onehot)?)?;
                let upstream = g.broadcast_scalar(&[b, c])?;
                vec![(a, diff.mul(upstream)?.scale(F::one() / F::from_f64(b as f64))?)]
            }
        })
    }

    /// Gradients of scalar `root` for every leaf that requires grad.
    pub fn backward(&self, root: Var<'_, F>) -> Result<Gradients<F>> {
        let grads = self.backprop(root, false)?;
        let nodes = self.nodes.borrow();
        let leaves = grads
            .iter()
            .enumerate()
            .map(|(id, g)| match (&nodes[id].op, g) {
                (Op::Leaf, Some(g)) if nodes[id].requires_grad => Some((*nodes[g.id].value).clone()),
                _ => None,
            })
            .collect();
        Ok(Gradients { leaves })
    }

    /// Gradients of scalar `root` with respect to `wrt`, as tape values.
    ///
    /// With `create_graph` the returned gradients are themselves
    /// differentiable. Inputs with no path from the root get zeros.
    pub fn grad<'t>(&'t self, root: Var<'t, F>, wrt: &[Var<'t, F>], create_graph: bool) -> Result<Vec<Var<'t, F>>> {
        let grads = self.backprop(root, create_graph)?;
        wrt.iter()
            .map(|v| match grads.get(v.id).copied().flatten() {
                Some(g) => Ok(g),
                None => self.constant(Tensor::zeros(v.value().shape())),
            })
            .collect()
    }

    /// Borrow of all node values, in recording order. Used by diagnostics.
    pub fn values(&self) -> Vec<Rc<Tensor<F>>> {
        let nodes: Ref<'_, Vec<Node<F>>> = self.nodes.borrow();
        nodes.iter().map(|n| Rc::clone(&n.value)).collect()
    }
}

impl<'t, F: Real> Var<'t, F> {
    pub fn tape(&self) -> &'t Tape<F> {
        self.tape
    }

    pub fn value(&self) -> Rc<Tensor<F>> {
        self.tape.node_value(self.id)
    }

    pub fn item(&self) -> Result<F> {
        self.value().item()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.value().shape().to_vec()
    }

    pub fn requires_grad(&self) -> bool {
        self.tape.node_requires_grad(self.id)
    }

    /// Same value as a fresh constant leaf: gradients stop here.
    pub fn detach(self) -> Result<Self> {
        let value = self.value();
        Ok(self.tape.push_node(Node {
            value,
            op: Op::Leaf,
            requires_grad: false,
        }))
    }

    fn same_tape(self, other: Self, op: &'static str) -> Result<()> {
        if std::ptr::eq(self.tape, other.tape) {
            Ok(())
        } else {
            Err(Error::Usage(format!("{op}: operands live on different tapes")))
        }
    }

    fn binary_elementwise(self, other: Self, name: &'static str, op: Op<F>, f: impl Fn(F, F) -> F) -> Result<Self> {
        self.same_tape(other, name)?;
        let out = self.value().zip_map(&other.value(), name, f)?;
        self.tape.record(name, out, op, &[self.id, other.id])
    }

    fn unary(self, name: &'static str, op: Op<F>, out: Tensor<F>) -> Result<Self> {
        self.tape.record(name, out, op, &[self.id])
    }

    pub fn add(self, other: Self) -> Result<Self> {
        self.binary_elementwise(other, "add", Op::Add(self.id, other.id), |a, b| a + b)
    }

    pub fn sub(self, other: Self) -> Result<Self> {
        self.binary_elementwise(other, "sub", Op::Sub(self.id, other.id), |a, b| a - b)
    }

    /// Elementwise product.
    pub fn mul(self, other: Self) -> Result<Self> {
        self.binary_elementwise(other, "mul", Op::Mul(self.id, other.id), |a, b| a * b)
    }

    pub fn neg(self) -> Result<Self> {
        let out = self.value().map(|v| -v);
        self.unary("neg", Op::Neg(self.id), out)
    }

    pub fn scale(self, c: F) -> Result<Self> {
        let out = self.value().map(|v| v * c);
        self.unary("scale", Op::Scale(self.id, c), out)
    }

    pub fn add_scalar(self, c: F) -> Result<Self> {
        let out = self.value().map(|v| v + c);
        self.unary("add_scalar", Op::AddScalar(self.id), out)
    }

    pub fn square(self) -> Result<Self> {
        self.mul(self)
    }

    pub fn matmul(self, other: Self) -> Result<Self> {
        self.matmul_t(false, other, false)
    }

    /// Matrix product with optional transposition of either operand.
    pub fn matmul_t(self, trans_a: bool, other: Self, trans_b: bool) -> Result<Self> {
        self.same_tape(other, "matmul")?;
        let out = matmul_t(&self.value(), trans_a, &other.value(), trans_b)?;
        self.tape.record(
            "matmul",
            out,
            Op::MatMul {
                a: self.id,
                b: other.id,
                trans_a,
                trans_b,
            },
            &[self.id, other.id],
        )
    }

    /// Sum of all elements, as a scalar.
    pub fn sum(self) -> Result<Self> {
        let out = Tensor::scalar(self.value().sum());
        self.unary("sum", Op::Sum(self.id), out)
    }

    pub fn mean(self) -> Result<Self> {
        let n = self.value().len();
        if n == 0 {
            return Err(dim_err("mean", "empty tensor"));
        }
        self.sum()?.scale(F::one() / F::from_f64(n as f64))
    }

    /// Repeats a one-element tensor into `shape`.
    pub fn broadcast_scalar(self, shape: &[usize]) -> Result<Self> {
        let v = self.value().item()?;
        self.unary("broadcast_scalar", Op::BroadcastScalar(self.id), Tensor::full(shape, v))
    }

    /// `[b x n] -> [b]`.
    pub fn row_sum(self) -> Result<Self> {
        let x = self.value();
        let (b, _) = x.dims2()?;
        let data = (0..b).map(|i| x.row(i).iter().copied().sum()).collect();
        self.unary("row_sum", Op::RowSum(self.id), Tensor::new(vec![b], data)?)
    }

    /// `[b x n] -> [n]`.
    pub fn col_sum(self) -> Result<Self> {
        let x = self.value();
        let (b, n) = x.dims2()?;
        let mut data = vec![F::zero(); n];
        for i in 0..b {
            for (acc, &v) in data.iter_mut().zip(x.row(i)) {
                *acc += v;
            }
        }
        self.unary("col_sum", Op::ColSum(self.id), Tensor::new(vec![n], data)?)
    }

    /// `[n] -> [b x n]`, repeating the vector as every row.
    pub fn broadcast_rows(self, b: usize) -> Result<Self> {
        let x = self.value();
        if x.ndim() != 1 {
            return Err(dim_err("broadcast_rows", format!("need a vector, got {:?}", x.shape())));
        }
        let n = x.len();
        let mut data = Vec::with_capacity(b * n);
        for _ in 0..b {
            data.extend_from_slice(x.data());
        }
        self.unary("broadcast_rows", Op::BroadcastRows(self.id), Tensor::new(vec![b, n], data)?)
    }

    /// `[b] -> [b x n]`, repeating each entry across its row.
    pub fn broadcast_cols(self, n: usize) -> Result<Self> {
        let x = self.value();
        if x.ndim() != 1 {
            return Err(dim_err("broadcast_cols", format!("need a vector, got {:?}", x.shape())));
        }
        let b = x.len();
        let data = x.data().iter().flat_map(|&v| std::iter::repeat_n(v, n)).collect();
        self.unary("broadcast_cols", Op::BroadcastCols(self.id), Tensor::new(vec![b, n], data)?)
    }

    pub fn reshape(self, shape: &[usize]) -> Result<Self> {
        let out = (*self.value()).clone().reshape(shape.to_vec())?;
        self.unary("reshape", Op::Reshape(self.id), out)
    }

    pub fn leaky_relu(self, slope: F) -> Result<Self> {
        let out = self.value().map(|v| if v > F::zero() { v } else { v * slope });
        self.unary("leaky_relu", Op::LeakyRelu(self.id, slope), out)
    }

    pub fn relu(self) -> Result<Self> {
        let out = self.value().map(|v| v.max(F::zero()));
        self.unary("relu", Op::LeakyRelu(self.id, F::zero()), out)
    }

    pub fn tanh(self) -> Result<Self> {
        let out = self.value().map(F::tanh);
        self.unary("tanh", Op::Tanh(self.id), out)
    }

    pub fn sqrt(self) -> Result<Self> {
        let x = self.value();
        if x.data().iter().any(|&v| v < F::zero()) {
            return Err(Error::NonFinite { op: "sqrt" });
        }
        let out = x.map(F::sqrt);
        self.unary("sqrt", Op::Sqrt(self.id), out)
    }

    /// Elementwise `1 / x`, with zero mapped to zero.
    pub fn recip(self) -> Result<Self> {
        let out = self.value().map(|v| if v == F::zero() { F::zero() } else { v.recip() });
        self.unary("recip", Op::Recip(self.id), out)
    }

    /// Euclidean norm of every row: `[b x d] -> [b]`.
    pub fn row_norm(self) -> Result<Self> {
        self.square()?.row_sum()?.sqrt()
    }

    /// `[b x n1], [b x n2] -> [b x (n1 + n2)]`.
    pub fn concat_cols(self, other: Self) -> Result<Self> {
        self.same_tape(other, "concat_cols")?;
        let (a, b) = (self.value(), other.value());
        let (ra, ca) = a.dims2()?;
        let (rb, cb) = b.dims2()?;
        if ra != rb {
            return Err(dim_err("concat_cols", format!("{ra} rows vs {rb} rows")));
        }
        let mut data = Vec::with_capacity(ra * (ca + cb));
        for i in 0..ra {
            data.extend_from_slice(a.row(i));
            data.extend_from_slice(b.row(i));
        }
        self.tape.record(
            "concat_cols",
            Tensor::new(vec![ra, ca + cb], data)?,
            Op::ConcatCols(self.id, other.id),
            &[self.id, other.id],
        )
    }

    /// Columns `start..end` of a matrix.
    pub fn slice_cols(self, start: usize, end: usize) -> Result<Self> {
        let x = self.value();
        let (r, c) = x.dims2()?;
        if start > end || end > c {
            return Err(dim_err("slice_cols", format!("{start}..{end} of {c} columns")));
        }
        let mut data = Vec::with_capacity(r * (end - start));
        for i in 0..r {
            data.extend_from_slice(&x.row(i)[start..end]);
        }
        self.unary("slice_cols", Op::SliceCols(self.id, start), Tensor::new(vec![r, end - start], data)?)
    }

    /// Embeds the matrix into `total` columns starting at `start`, zero elsewhere.
    pub fn pad_cols(self, start: usize, total: usize) -> Result<Self> {
        let x = self.value();
        let (r, c) = x.dims2()?;
        if start + c > total {
            return Err(dim_err("pad_cols", format!("{c} columns at {start} exceed {total}")));
        }
        let mut out = Tensor::zeros(&[r, total]);
        for i in 0..r {
            out.row_mut(i)[start..start + c].copy_from_slice(x.row(i));
        }
        self.unary("pad_cols", Op::PadCols(self.id, start), out)
    }

    /// Row-wise softmax.
    pub fn softmax(self) -> Result<Self> {
        let x = self.value();
        let (r, _) = x.dims2()?;
        let mut out = (*x).clone();
        for i in 0..r {
            let row = out.row_mut(i);
            let max = row.iter().fold(F::neg_infinity(), |m, &v| m.max(v));
            let mut total = F::zero();
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                total += *v;
            }
            for v in row.iter_mut() {
                *v /= total;
            }
        }
        self.unary("softmax", Op::Softmax(self.id), out)
    }

    /// Mean negative log-likelihood of `labels` under row-wise softmax of these logits.
    pub fn softmax_cross_entropy(self, labels: &[usize]) -> Result<Self> {
        let x = self.value();
        let (b, c) = x.dims2()?;
        if labels.len() != b {
            return Err(dim_err(
                "softmax_cross_entropy",
                format!("{b} rows but {} labels", labels.len()),
            ));
        }
        if b == 0 {
            return Err(dim_err("softmax_cross_entropy", "empty batch"));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
            return Err(Error::Input(format!("label {bad} out of range for {c} classes")));
        }
        let mut total = F::zero();
        for (i, &l) in labels.iter().enumerate() {
            let row = x.row(i);
            let max = row.iter().fold(F::neg_infinity(), |m, &v| m.max(v));
            let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<F>().ln();
            total += lse - row[l];
        }
        let loss = total / F::from_f64(b as f64);
        self.unary(
            "softmax_cross_entropy",
            Op::SoftmaxCrossEntropy(self.id, labels.into()),
            Tensor::scalar(loss),
        )
    }
}
