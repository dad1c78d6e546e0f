//! Tape-based reverse-mode differentiation over dense matrices.
//!
//! Every operation on a [`Graph`] computes its value eagerly and records
//! how it was produced. [`Graph::backward`] then walks the tape in reverse
//! and returns the gradient of a scalar node with respect to every
//! parameter that was bound into the graph with [`Graph::param`].
//!
//! All values are rank-2; a vector is a `1×n` row.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::numerics::tensor::gemm;
use crate::numerics::{Gradients, ParamId, ParameterSet, Tensor};

/// Handle to a node on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Param(ParamId),
    Linear { x: usize, w: usize, b: Option<usize> },
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    AddRow(usize, usize),
    AddCol(usize, usize),
    Tanh(usize),
    Sigmoid(usize),
    SliceCols { a: usize, start: usize },
    ConcatCols(Vec<usize>),
    Row { a: usize, index: usize },
    StackRows(Vec<usize>),
    SumSquares(usize),
    Sum(usize),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    bound: BTreeMap<ParamId, Var>,
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        let t = &self.nodes[v.0].value;
        (t.rows(), t.cols())
    }

    /// A constant input; receives no gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        assert_eq!(value.shape().len(), 2, "graph values are matrices");
        self.push(value, Op::Leaf)
    }

    /// Binds a parameter. Binding the same parameter twice returns the
    /// same node.
    pub fn param(&mut self, params: &ParameterSet, id: ParamId) -> Var {
        if let Some(v) = self.bound.get(&id) {
            return *v;
        }
        let v = self.push(params.value(id).clone(), Op::Param(id));
        self.bound.insert(id, v);
        v
    }

    /// `x · wᵀ + b` with `x: n×in`, `w: out×in`, `b: 1×out`.
    pub fn linear(&mut self, x: Var, w: Var, b: Option<Var>) -> Var {
        let (xv, wv) = (self.value(x), self.value(w));
        assert_eq!(xv.cols(), wv.cols(), "linear input width");
        let (n, k, m) = (xv.rows(), xv.cols(), wv.rows());
        let mut out = vec![0.0; n * m];
        if let Some(b) = b {
            let bv = self.value(b);
            assert_eq!(bv.shape(), &[1, m], "linear bias shape");
            for r in 0..n {
                out[r * m..(r + 1) * m].copy_from_slice(bv.data());
            }
        }
        gemm(n, k, m, 1.0, xv.data(), false, wv.data(), true, 1.0, &mut out);
        let value = Tensor::matrix(n, m, out).expect("linear shape");
        self.push(
            value,
            Op::Linear {
                x: x.0,
                w: w.0,
                b: b.map(|b| b.0),
            },
        )
    }

    fn zip(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!(av.shape(), bv.shape(), "elementwise shape mismatch");
        let data = av.data().iter().zip(bv.data()).map(|(&x, &y)| f(x, y)).collect();
        Tensor::new(av.shape().to_vec(), data).expect("same shape")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.zip(a, b, |x, y| x + y);
        self.push(v, Op::Add(a.0, b.0))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.zip(a, b, |x, y| x - y);
        self.push(v, Op::Sub(a.0, b.0))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.zip(a, b, |x, y| x * y);
        self.push(v, Op::Mul(a.0, b.0))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let v = self.value(a).map(|x| x * factor);
        self.push(v, Op::Scale(a.0, factor))
    }

    /// `a + row` with the `1×m` row broadcast over every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let (av, rv) = (self.value(a), self.value(row));
        assert_eq!(rv.shape(), &[1, av.cols()], "add_row shape");
        let m = av.cols();
        let mut v = av.clone();
        for (i, x) in v.data_mut().iter_mut().enumerate() {
            *x += rv.data()[i % m];
        }
        self.push(v, Op::AddRow(a.0, row.0))
    }

    /// `a + col` with the `n×1` column broadcast over every column of `a`.
    pub fn add_col(&mut self, a: Var, col: Var) -> Var {
        let (av, cv) = (self.value(a), self.value(col));
        assert_eq!(cv.shape(), &[av.rows(), 1], "add_col shape");
        let m = av.cols();
        let mut v = av.clone();
        for (i, x) in v.data_mut().iter_mut().enumerate() {
            *x += cv.data()[i / m];
        }
        self.push(v, Op::AddCol(a.0, col.0))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::tanh);
        self.push(v, Op::Tanh(a.0))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.value(a).map(sigmoid);
        self.push(v, Op::Sigmoid(a.0))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Var {
        let av = self.value(a);
        assert!(start + len <= av.cols(), "slice_cols out of range");
        let v = av.slice_cols(start, len);
        self.push(v, Op::SliceCols { a: a.0, start })
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let tensors: Vec<&Tensor> = parts.iter().map(|p| self.value(*p)).collect();
        let v = Tensor::concat_cols(&tensors).expect("concat_cols shapes");
        self.push(v, Op::ConcatCols(parts.iter().map(|p| p.0).collect()))
    }

    pub fn row(&mut self, a: Var, index: usize) -> Var {
        let av = self.value(a);
        assert!(index < av.rows(), "row out of range");
        let v = Tensor::row_vector(av.row(index).to_vec());
        self.push(v, Op::Row { a: a.0, index })
    }

    pub fn stack_rows(&mut self, parts: &[Var]) -> Var {
        let tensors: Vec<&Tensor> = parts.iter().map(|p| self.value(*p)).collect();
        let v = Tensor::concat_rows(&tensors).expect("stack_rows shapes");
        self.push(v, Op::StackRows(parts.iter().map(|p| p.0).collect()))
    }

    /// Sum of squared entries as a `1×1` node.
    pub fn sum_squares(&mut self, a: Var) -> Var {
        let v = Tensor::scalar(self.value(a).sum_squares());
        self.push(v, Op::SumSquares(a.0))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let v = Tensor::scalar(self.value(a).sum());
        self.push(v, Op::Sum(a.0))
    }

    /// Gradient of the scalar `loss` with respect to every bound parameter.
    pub fn backward(&self, loss: Var, params: &ParameterSet) -> Result<Gradients> {
        let lv = self.value(loss);
        if lv.shape() != [1, 1] {
            return Err(Error::shape(format!(
                "backward needs a scalar loss, got {:?}",
                lv.shape()
            )));
        }
        lv.ensure_finite("loss value")?;

        let mut grads: Vec<Option<Tensor>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));
        let mut out: BTreeMap<ParamId, Tensor> = BTreeMap::new();

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => {}
                Op::Param(id) => match out.get_mut(id) {
                    Some(acc) => acc.add_assign(&g),
                    None => {
                        out.insert(*id, g);
                    }
                },
                Op::Linear { x, w, b } => {
                    let xv = &self.nodes[*x].value;
                    let wv = &self.nodes[*w].value;
                    let (n, k, m) = (xv.rows(), xv.cols(), wv.rows());
                    {
                        let gx = slot(&mut grads, *x, xv);
                        gemm(n, m, k, 1.0, g.data(), false, wv.data(), false, 1.0, gx.data_mut());
                    }
                    {
                        let gw = slot(&mut grads, *w, wv);
                        gemm(m, n, k, 1.0, g.data(), true, xv.data(), false, 1.0, gw.data_mut());
                    }
                    if let Some(b) = b {
                        let gb = slot(&mut grads, *b, &self.nodes[*b].value);
                        let gbd = gb.data_mut();
                        for r in 0..n {
                            for (acc, v) in gbd.iter_mut().zip(g.row(r)) {
                                *acc += v;
                            }
                        }
                    }
                }
                Op::Add(a, b) => {
                    add_into(&mut grads, *a, &self.nodes[*a].value, g.data(), 1.0);
                    add_into(&mut grads, *b, &self.nodes[*b].value, g.data(), 1.0);
                }
                Op::Sub(a, b) => {
                    add_into(&mut grads, *a, &self.nodes[*a].value, g.data(), 1.0);
                    add_into(&mut grads, *b, &self.nodes[*b].value, g.data(), -1.0);
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (&self.nodes[*a].value, &self.nodes[*b].value);
                    let ga: Vec<f64> = g.data().iter().zip(bv.data()).map(|(x, y)| x * y).collect();
                    let gb: Vec<f64> = g.data().iter().zip(av.data()).map(|(x, y)| x * y).collect();
                    add_into(&mut grads, *a, av, &ga, 1.0);
                    add_into(&mut grads, *b, bv, &gb, 1.0);
                }
                Op::Scale(a, f) => {
                    add_into(&mut grads, *a, &self.nodes[*a].value, g.data(), *f);
                }
                Op::AddRow(a, r) => {
                    add_into(&mut grads, *a, &self.nodes[*a].value, g.data(), 1.0);
                    let rv = &self.nodes[*r].value;
                    let m = rv.cols();
                    let gr = slot(&mut grads, *r, rv);
                    for (i, v) in g.data().iter().enumerate() {
                        gr.data_mut()[i % m] += v;
                    }
                }
                Op::AddCol(a, c) => {
                    let av = &self.nodes[*a].value;
                    add_into(&mut grads, *a, av, g.data(), 1.0);
                    let m = av.cols();
                    let gc = slot(&mut grads, *c, &self.nodes[*c].value);
                    for (i, v) in g.data().iter().enumerate() {
                        gc.data_mut()[i / m] += v;
                    }
                }
                Op::Tanh(a) => {
                    let y = &node.value;
                    let ga: Vec<f64> =
                        g.data().iter().zip(y.data()).map(|(g, y)| g * (1.0 - y * y)).collect();
                    add_into(&mut grads, *a, &self.nodes[*a].value, &ga, 1.0);
                }
                Op::Sigmoid(a) => {
                    let y = &node.value;
                    let ga: Vec<f64> =
                        g.data().iter().zip(y.data()).map(|(g, y)| g * y * (1.0 - y)).collect();
                    add_into(&mut grads, *a, &self.nodes[*a].value, &ga, 1.0);
                }
                Op::SliceCols { a, start } => {
                    let av = &self.nodes[*a].value;
                    let cols = av.cols();
                    let len = g.cols();
                    let ga = slot(&mut grads, *a, av);
                    for r in 0..g.rows() {
                        let dst = &mut ga.data_mut()[r * cols + start..r * cols + start + len];
                        for (d, s) in dst.iter_mut().zip(g.row(r)) {
                            *d += s;
                        }
                    }
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let pv = &self.nodes[*p].value;
                        let w = pv.cols();
                        let gp = slot(&mut grads, *p, pv);
                        for r in 0..g.rows() {
                            let src = &g.row(r)[offset..offset + w];
                            for (d, s) in gp.row_mut(r).iter_mut().zip(src) {
                                *d += s;
                            }
                        }
                        offset += w;
                    }
                }
                Op::Row { a, index } => {
                    let ga = slot(&mut grads, *a, &self.nodes[*a].value);
                    for (d, s) in ga.row_mut(*index).iter_mut().zip(g.data()) {
                        *d += s;
                    }
                }
                Op::StackRows(parts) => {
                    let cols = g.cols();
                    let mut offset = 0;
                    for p in parts {
                        let pv = &self.nodes[*p].value;
                        let n = pv.len();
                        add_into(&mut grads, *p, pv, &g.data()[offset..offset + n], 1.0);
                        offset += n;
                    }
                    debug_assert_eq!(offset, g.rows() * cols);
                }
                Op::SumSquares(a) => {
                    let av = &self.nodes[*a].value;
                    let s = 2.0 * g.item();
                    let ga: Vec<f64> = av.data().iter().map(|x| s * x).collect();
                    add_into(&mut grads, *a, av, &ga, 1.0);
                }
                Op::Sum(a) => {
                    let av = &self.nodes[*a].value;
                    let ga = vec![g.item(); av.len()];
                    add_into(&mut grads, *a, av, &ga, 1.0);
                }
            }
        }

        let mut entries = Vec::with_capacity(out.len());
        for (id, g) in out {
            if !g.is_finite() {
                return Err(Error::NonFinite(format!(
                    "gradient of parameter {}",
                    params.name(id)
                )));
            }
            entries.push((id, g));
        }
        Ok(Gradients { entries })
    }

    /// Runs [`backward`](Self::backward) and adds the result into the
    /// parameter set's gradient buffers.
    pub fn backward_into(&self, loss: Var, params: &mut ParameterSet) -> Result<()> {
        let grads = self.backward(loss, params)?;
        params.accumulate(&grads)
    }
}

fn slot<'a>(grads: &'a mut [Option<Tensor>], i: usize, like: &Tensor) -> &'a mut Tensor {
    grads[i].get_or_insert_with(|| Tensor::zeros(like.shape()))
}

fn add_into(grads: &mut [Option<Tensor>], i: usize, like: &Tensor, g: &[f64], factor: f64) {
    let t = slot(grads, i, like);
    for (d, s) in t.data_mut().iter_mut().zip(g) {
        *d += factor * s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_param(values: Vec<f64>) -> (ParameterSet, ParamId) {
        let mut ps = ParameterSet::new();
        let n = values.len();
        let id = ps.add("p", Tensor::matrix(1, n, values).unwrap()).unwrap();
        (ps, id)
    }

    #[test]
    fn sum_gives_ones() {
        let (ps, id) = one_param(vec![0.3, -1.0, 2.5]);
        let mut g = Graph::new();
        let p = g.param(&ps, id);
        let loss = g.sum(p);
        let grads = g.backward(loss, &ps).unwrap();
        assert_eq!(grads.get(id).unwrap().data(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn half_squared_norm_gives_identity() {
        let (ps, id) = one_param(vec![0.3, -1.0, 2.5]);
        let mut g = Graph::new();
        let p = g.param(&ps, id);
        let sq = g.sum_squares(p);
        let loss = g.scale(sq, 0.5);
        let grads = g.backward(loss, &ps).unwrap();
        assert_eq!(grads.get(id).unwrap().data(), ps.value(id).data());
    }

    #[test]
    fn rebinding_shares_node() {
        let (ps, id) = one_param(vec![2.0]);
        let mut g = Graph::new();
        let a = g.param(&ps, id);
        let b = g.param(&ps, id);
        assert_eq!(a, b);
        let prod = g.mul(a, b);
        let loss = g.sum(prod);
        let grads = g.backward(loss, &ps).unwrap();
        assert_eq!(grads.get(id).unwrap().item(), 4.0);
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let (ps, id) = one_param(vec![1.0, 2.0]);
        let mut g = Graph::new();
        let p = g.param(&ps, id);
        assert!(g.backward(p, &ps).is_err());
    }

    #[test]
    fn nan_gradient_names_parameter() {
        let (ps, id) = one_param(vec![1.0]);
        let mut g = Graph::new();
        let p = g.param(&ps, id);
        let c = g.constant(Tensor::scalar(f64::INFINITY));
        let m = g.mul(p, c);
        // tanh(inf) = 1 keeps the loss finite while 0 * inf poisons the gradient.
        let t = g.tanh(m);
        let loss = g.sum(t);
        let err = g.backward(loss, &ps).unwrap_err();
        match err {
            Error::NonFinite(msg) => assert!(msg.contains("parameter p"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
