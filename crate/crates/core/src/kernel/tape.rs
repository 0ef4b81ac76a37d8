//! Operation tape and reverse sweep.
//!
//! Every primitive appends one node whose inputs were recorded earlier, so
//! node order is already a topological order and the reverse sweep is a
//! single backwards pass over the node list.

use std::collections::HashMap;

use super::{KernelError, ParamId, ParamStore, Tensor};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Axis along which [`Tape::concat`] joins two tensors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    /// Stack vertically; column counts must agree.
    Rows,
    /// Place side by side; row counts must agree.
    Cols,
}

/// The closed set of differentiable primitives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Primitive {
    MatMul,
    Add,
    Hadamard,
    Scale,
    Tanh,
    Relu,
    SoftmaxMasked,
    MeanMasked,
    MaxMasked,
    L2Norm,
    Concat,
    Transpose,
    Mae,
    SumColumns,
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Hadamard(Var, Var),
    Scale(Var, f64),
    Tanh(Var),
    Relu(Var),
    SoftmaxMasked(Var, Vec<bool>),
    MeanMasked(Var, Vec<bool>),
    /// Saved argmax column per row.
    MaxMasked(Var, Vec<usize>),
    L2Norm(Var),
    Concat(Var, Var, Axis),
    Transpose(Var),
    Mae(Var, Var),
    SumColumns(Var),
    SelectColumns(Var, Vec<usize>),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
    param: Option<ParamId>,
}

/// Gradients produced by [`Tape::backward`], keyed by parameter.
#[derive(Clone, Debug, Default)]
pub struct Gradients {
    grads: HashMap<ParamId, Tensor>,
}

impl Gradients {
    pub fn get(&self, id: ParamId) -> Option<&Tensor> {
        self.grads.get(&id)
    }

    /// Gradient for `id`, or zeros of the parameter's shape when the
    /// parameter did not take part in the forward pass.
    pub fn get_or_zeros(&self, id: ParamId, store: &ParamStore) -> Tensor {
        match self.grads.get(&id) {
            Some(g) => g.clone(),
            None => {
                let p = store.get(id);
                Tensor::zeros(p.rows(), p.cols())
            }
        }
    }

    pub fn insert(&mut self, id: ParamId, grad: Tensor) {
        self.grads.insert(id, grad);
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }
}

/// Records primitive applications for one forward pass.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: HashMap<ParamId, Var>,
    consumed: bool,
}

fn shape_err(op: &'static str, detail: String) -> KernelError {
    KernelError::Shape { op, detail }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node { value, op, requires_grad, param: None });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Constant input; never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// Leaf bound to a stored parameter. Repeated calls for the same id
    /// return the same node so that gradient contributions accumulate.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        if let Some(&v) = self.params.get(&id) {
            return v;
        }
        let v = self.push(store.get(id).clone(), Op::Leaf, true);
        self.nodes[v.0].param = Some(id);
        self.params.insert(id, v);
        v
    }

    /// Dispatch by primitive tag. Masks are passed separately for the
    /// masked reductions; `scale` reads its factor from `factor`.
    pub fn apply(
        &mut self,
        op: Primitive,
        inputs: &[Var],
        mask: Option<&[bool]>,
        factor: f64,
    ) -> Result<Var, KernelError> {
        let arity = match op {
            Primitive::MatMul | Primitive::Add | Primitive::Hadamard | Primitive::Concat | Primitive::Mae => 2,
            _ => 1,
        };
        if inputs.len() != arity {
            return Err(KernelError::Contract(format!("{op:?} takes {arity} inputs, got {}", inputs.len())));
        }
        let all_valid;
        let mask = match mask {
            Some(m) => m,
            None => {
                let n = match op {
                    Primitive::SoftmaxMasked => self.value(inputs[0]).rows(),
                    _ => self.value(inputs[0]).cols(),
                };
                all_valid = vec![true; n];
                &all_valid
            }
        };
        match op {
            Primitive::MatMul => self.matmul(inputs[0], inputs[1]),
            Primitive::Add => self.add(inputs[0], inputs[1]),
            Primitive::Hadamard => self.hadamard(inputs[0], inputs[1]),
            Primitive::Scale => Ok(self.scale(inputs[0], factor)),
            Primitive::Tanh => Ok(self.tanh(inputs[0])),
            Primitive::Relu => Ok(self.relu(inputs[0])),
            Primitive::SoftmaxMasked => self.softmax_masked(inputs[0], mask),
            Primitive::MeanMasked => self.mean_masked(inputs[0], mask),
            Primitive::MaxMasked => self.max_masked(inputs[0], mask),
            Primitive::L2Norm => Ok(self.l2_norm(inputs[0])),
            Primitive::Concat => self.concat(inputs[0], inputs[1], Axis::Rows),
            Primitive::Transpose => Ok(self.transpose(inputs[0])),
            Primitive::Mae => self.mae(inputs[0], inputs[1]),
            Primitive::SumColumns => Ok(self.sum_columns(inputs[0])),
        }
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, KernelError> {
        let value = self.value(a).matmul(self.value(b))?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::MatMul(a, b), rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, KernelError> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(shape_err("add", format!("{:?} + {:?}", x.shape(), y.shape())));
        }
        let mut value = x.clone();
        value.add_assign(y);
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::Add(a, b), rg))
    }

    /// `a - b`, built from `add` and `scale`.
    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, KernelError> {
        let nb = self.scale(b, -1.0);
        self.add(a, nb)
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Result<Var, KernelError> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(shape_err("hadamard", format!("{:?} * {:?}", x.shape(), y.shape())));
        }
        let data = x.data().iter().zip(y.data()).map(|(p, q)| p * q).collect();
        let value = Tensor::new(x.rows(), x.cols(), data)?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::Hadamard(a, b), rg))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let x = self.value(a);
        let data = x.data().iter().map(|v| v * factor).collect();
        let value = Tensor::new(x.rows(), x.cols(), data).expect("same shape");
        let rg = self.rg(&[a]);
        self.push(value, Op::Scale(a, factor), rg)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let data = x.data().iter().map(|v| v.tanh()).collect();
        let value = Tensor::new(x.rows(), x.cols(), data).expect("same shape");
        let rg = self.rg(&[a]);
        self.push(value, Op::Tanh(a), rg)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let data = x.data().iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
        let value = Tensor::new(x.rows(), x.cols(), data).expect("same shape");
        let rg = self.rg(&[a]);
        self.push(value, Op::Relu(a), rg)
    }

    /// Softmax over a column vector. Masked entries are exactly zero and the
    /// unmasked entries sum to one.
    pub fn softmax_masked(&mut self, a: Var, mask: &[bool]) -> Result<Var, KernelError> {
        let x = self.value(a);
        if x.cols() != 1 || mask.len() != x.rows() {
            return Err(shape_err(
                "softmax_masked",
                format!("input {:?}, mask {}", x.shape(), mask.len()),
            ));
        }
        let max = x
            .data()
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(v, _)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(KernelError::Degenerate { op: "softmax_masked" });
        }
        let mut out: Vec<f64> = x
            .data()
            .iter()
            .zip(mask)
            .map(|(v, &m)| if m { (v - max).exp() } else { 0.0 })
            .collect();
        let total: f64 = out.iter().sum();
        out.iter_mut().for_each(|v| *v /= total);
        let value = Tensor::column(out);
        let rg = self.rg(&[a]);
        Ok(self.push(value, Op::SoftmaxMasked(a, mask.to_vec()), rg))
    }

    /// Mean over the valid columns of `a`, giving a column vector.
    pub fn mean_masked(&mut self, a: Var, mask: &[bool]) -> Result<Var, KernelError> {
        let x = self.value(a);
        if mask.len() != x.cols() {
            return Err(shape_err("mean_masked", format!("input {:?}, mask {}", x.shape(), mask.len())));
        }
        let k = mask.iter().filter(|&&m| m).count();
        if k == 0 {
            return Err(KernelError::Degenerate { op: "mean_masked" });
        }
        let mut out = vec![0.0; x.rows()];
        for (r, o) in out.iter_mut().enumerate() {
            let s: f64 = (0..x.cols()).filter(|&c| mask[c]).map(|c| x.get(r, c)).sum();
            *o = s / k as f64;
        }
        let rg = self.rg(&[a]);
        Ok(self.push(Tensor::column(out), Op::MeanMasked(a, mask.to_vec()), rg))
    }

    /// Row-wise maximum over the valid columns of `a`.
    pub fn max_masked(&mut self, a: Var, mask: &[bool]) -> Result<Var, KernelError> {
        let x = self.value(a);
        if mask.len() != x.cols() {
            return Err(shape_err("max_masked", format!("input {:?}, mask {}", x.shape(), mask.len())));
        }
        if !mask.iter().any(|&m| m) {
            return Err(KernelError::Degenerate { op: "max_masked" });
        }
        let mut out = Vec::with_capacity(x.rows());
        let mut arg = Vec::with_capacity(x.rows());
        for r in 0..x.rows() {
            let mut best = None::<(usize, f64)>;
            for c in (0..x.cols()).filter(|&c| mask[c]) {
                let v = x.get(r, c);
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((c, v));
                }
            }
            let (c, v) = best.expect("at least one valid column");
            out.push(v);
            arg.push(c);
        }
        let rg = self.rg(&[a]);
        Ok(self.push(Tensor::column(out), Op::MaxMasked(a, arg), rg))
    }

    /// Frobenius norm, as a `1 x 1` tensor.
    pub fn l2_norm(&mut self, a: Var) -> Var {
        let n = self.value(a).sum_squares().sqrt();
        let rg = self.rg(&[a]);
        self.push(Tensor::scalar(n), Op::L2Norm(a), rg)
    }

    pub fn concat(&mut self, a: Var, b: Var, axis: Axis) -> Result<Var, KernelError> {
        let (x, y) = (self.value(a), self.value(b));
        let value = match axis {
            Axis::Rows => {
                if x.cols() != y.cols() {
                    return Err(shape_err("concat", format!("{:?} over {:?}", x.shape(), y.shape())));
                }
                let mut data = x.data().to_vec();
                data.extend_from_slice(y.data());
                Tensor::new(x.rows() + y.rows(), x.cols(), data)?
            }
            Axis::Cols => {
                if x.rows() != y.rows() {
                    return Err(shape_err("concat", format!("{:?} beside {:?}", x.shape(), y.shape())));
                }
                let cols = x.cols() + y.cols();
                let mut data = Vec::with_capacity(x.rows() * cols);
                for r in 0..x.rows() {
                    data.extend_from_slice(&x.data()[r * x.cols()..(r + 1) * x.cols()]);
                    data.extend_from_slice(&y.data()[r * y.cols()..(r + 1) * y.cols()]);
                }
                Tensor::new(x.rows(), cols, data)?
            }
        };
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::Concat(a, b, axis), rg))
    }

    /// Concatenates many tensors along `axis`.
    pub fn concat_all(&mut self, parts: &[Var], axis: Axis) -> Result<Var, KernelError> {
        let (&first, rest) = parts
            .split_first()
            .ok_or_else(|| KernelError::Contract("concat of nothing".into()))?;
        rest.iter().try_fold(first, |acc, &p| self.concat(acc, p, axis))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let value = self.value(a).transposed();
        let rg = self.rg(&[a]);
        self.push(value, Op::Transpose(a), rg)
    }

    /// Mean absolute difference between two same-shaped tensors.
    pub fn mae(&mut self, a: Var, b: Var) -> Result<Var, KernelError> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(shape_err("mae", format!("{:?} vs {:?}", x.shape(), y.shape())));
        }
        if x.is_empty() {
            return Err(KernelError::Degenerate { op: "mae" });
        }
        let s: f64 = x.data().iter().zip(y.data()).map(|(p, q)| (p - q).abs()).sum();
        let value = Tensor::scalar(s / x.len() as f64);
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::Mae(a, b), rg))
    }

    /// Sums across columns: `R x C -> R x 1`.
    pub fn sum_columns(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let out = (0..x.rows())
            .map(|r| x.data()[r * x.cols()..(r + 1) * x.cols()].iter().sum())
            .collect();
        let rg = self.rg(&[a]);
        self.push(Tensor::column(out), Op::SumColumns(a), rg)
    }

    /// Gathers columns of `a` by index; equal to `a` times a one-hot
    /// selection matrix. The reverse sweep scatter-adds in place.
    pub fn select_columns(&mut self, a: Var, indices: &[usize]) -> Result<Var, KernelError> {
        let x = self.value(a);
        if let Some(&bad) = indices.iter().find(|&&c| c >= x.cols()) {
            return Err(shape_err("select_columns", format!("column {bad} of {:?}", x.shape())));
        }
        let mut out = Tensor::zeros(x.rows(), indices.len());
        for r in 0..x.rows() {
            for (j, &c) in indices.iter().enumerate() {
                out.set(r, j, x.get(r, c));
            }
        }
        let rg = self.rg(&[a]);
        Ok(self.push(out, Op::SelectColumns(a, indices.to_vec()), rg))
    }

    /// Sum of every entry, as `1 x 1`.
    pub fn sum_all(&mut self, a: Var) -> Var {
        let rows = self.sum_columns(a);
        let t = self.transpose(rows);
        self.sum_columns(t)
    }

    /// Runs the reverse sweep from a scalar root. A tape supports exactly
    /// one sweep.
    pub fn backward(&mut self, root: Var) -> Result<Gradients, KernelError> {
        if self.consumed {
            return Err(KernelError::Replay);
        }
        let rv = self.value(root);
        if rv.shape() != [1, 1] {
            return Err(KernelError::Contract(format!("backward root must be scalar, got {:?}", rv.shape())));
        }
        self.consumed = true;

        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root.0] = Some(Tensor::scalar(1.0));

        for i in (0..=root.0).rev() {
            if !self.nodes[i].requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            if matches!(self.nodes[i].op, Op::Leaf) {
                grads[i] = Some(g);
                continue;
            }
            self.propagate(i, &g, &mut grads);
        }

        let mut out = Gradients::default();
        for (i, node) in self.nodes.iter().enumerate() {
            if let Some(pid) = node.param {
                let g = grads[i]
                    .take()
                    .unwrap_or_else(|| Tensor::zeros(node.value.rows(), node.value.cols()));
                out.insert(pid, g);
            }
        }
        Ok(out)
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        match &mut grads[v.0] {
            Some(acc) => acc.add_assign(&g),
            slot => *slot = Some(g),
        }
    }

    fn propagate(&self, i: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let node = &self.nodes[i];
        let y = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                if self.requires_grad(*a) {
                    let mut ga = Tensor::zeros(av.rows(), av.cols());
                    Tensor::matmul_into(g, &bv.transposed(), &mut ga);
                    self.accumulate(grads, *a, ga);
                }
                if self.requires_grad(*b) {
                    let mut gb = Tensor::zeros(bv.rows(), bv.cols());
                    Tensor::matmul_into(&av.transposed(), g, &mut gb);
                    self.accumulate(grads, *b, gb);
                }
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.clone());
            }
            Op::Hadamard(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                if self.requires_grad(*a) {
                    self.accumulate(grads, *a, zip_map(g, bv, |p, q| p * q));
                }
                if self.requires_grad(*b) {
                    self.accumulate(grads, *b, zip_map(g, av, |p, q| p * q));
                }
            }
            Op::Scale(a, f) => {
                self.accumulate(grads, *a, map(g, |v| v * f));
            }
            Op::Tanh(a) => {
                self.accumulate(grads, *a, zip_map(g, y, |gv, yv| gv * (1.0 - yv * yv)));
            }
            Op::Relu(a) => {
                let x = self.value(*a);
                self.accumulate(grads, *a, zip_map(g, x, |gv, xv| if xv > 0.0 { gv } else { 0.0 }));
            }
            Op::SoftmaxMasked(a, mask) => {
                let dot: f64 = g.data().iter().zip(y.data()).map(|(p, q)| p * q).sum();
                let data = g
                    .data()
                    .iter()
                    .zip(y.data())
                    .zip(mask)
                    .map(|((gv, yv), &m)| if m { yv * (gv - dot) } else { 0.0 })
                    .collect();
                self.accumulate(grads, *a, Tensor::column(data));
            }
            Op::MeanMasked(a, mask) => {
                let x = self.value(*a);
                let k = mask.iter().filter(|&&m| m).count() as f64;
                let mut ga = Tensor::zeros(x.rows(), x.cols());
                for r in 0..x.rows() {
                    let gr = g.get(r, 0) / k;
                    for c in (0..x.cols()).filter(|&c| mask[c]) {
                        ga.set(r, c, gr);
                    }
                }
                self.accumulate(grads, *a, ga);
            }
            Op::MaxMasked(a, arg) => {
                let x = self.value(*a);
                let mut ga = Tensor::zeros(x.rows(), x.cols());
                for (r, &c) in arg.iter().enumerate() {
                    ga.set(r, c, g.get(r, 0));
                }
                self.accumulate(grads, *a, ga);
            }
            Op::L2Norm(a) => {
                let x = self.value(*a);
                let n = y.item();
                let gv = g.item();
                let ga = if n > 0.0 { map(x, |v| gv * v / n) } else { Tensor::zeros(x.rows(), x.cols()) };
                self.accumulate(grads, *a, ga);
            }
            Op::Concat(a, b, axis) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let (ga, gb) = match axis {
                    Axis::Rows => {
                        let split = av.len();
                        (
                            Tensor::new(av.rows(), av.cols(), g.data()[..split].to_vec()),
                            Tensor::new(bv.rows(), bv.cols(), g.data()[split..].to_vec()),
                        )
                    }
                    Axis::Cols => {
                        let mut da = Vec::with_capacity(av.len());
                        let mut db = Vec::with_capacity(bv.len());
                        for r in 0..g.rows() {
                            let row = &g.data()[r * g.cols()..(r + 1) * g.cols()];
                            da.extend_from_slice(&row[..av.cols()]);
                            db.extend_from_slice(&row[av.cols()..]);
                        }
                        (Tensor::new(av.rows(), av.cols(), da), Tensor::new(bv.rows(), bv.cols(), db))
                    }
                };
                self.accumulate(grads, *a, ga.expect("forward shapes"));
                self.accumulate(grads, *b, gb.expect("forward shapes"));
            }
            Op::Transpose(a) => {
                self.accumulate(grads, *a, g.transposed());
            }
            Op::Mae(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let scale = g.item() / av.len() as f64;
                let ga = zip_map(av, bv, |p, q| scale * sign(p - q));
                if self.requires_grad(*b) {
                    self.accumulate(grads, *b, map(&ga, |v| -v));
                }
                self.accumulate(grads, *a, ga);
            }
            Op::SelectColumns(a, indices) => {
                if !self.requires_grad(*a) {
                    return;
                }
                let x = self.value(*a);
                let acc = grads[a.0].get_or_insert_with(|| Tensor::zeros(x.rows(), x.cols()));
                for r in 0..x.rows() {
                    for (j, &c) in indices.iter().enumerate() {
                        let v = acc.get(r, c) + g.get(r, j);
                        acc.set(r, c, v);
                    }
                }
            }
            Op::SumColumns(a) => {
                let x = self.value(*a);
                let mut ga = Tensor::zeros(x.rows(), x.cols());
                for r in 0..x.rows() {
                    let gr = g.get(r, 0);
                    for c in 0..x.cols() {
                        ga.set(r, c, gr);
                    }
                }
                self.accumulate(grads, *a, ga);
            }
        }
    }
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

fn map(t: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    Tensor::new(t.rows(), t.cols(), t.data().iter().map(|&v| f(v)).collect()).expect("same shape")
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let data = a.data().iter().zip(b.data()).map(|(&p, &q)| f(p, q)).collect();
    Tensor::new(a.rows(), a.cols(), data).expect("same shape")
}
