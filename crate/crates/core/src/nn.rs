//! Parameter storage and the layers shared by the hallucinator and learner.

use std::cell::RefCell;

use rand::Rng;

use crate::autodiff::{Adam, Graph, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub type ParamId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Tensor,
    /// Buffers (batch-norm running statistics) are stored and checkpointed
    /// alongside weights but never receive gradients.
    pub trainable: bool,
}

/// Ordered, named collection of every tensor a model owns.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    entries: Vec<Param>,
}

/// Per-entry gradients; `None` for buffers and unused parameters.
pub type Grads = Vec<Option<Tensor>>;

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor, trainable: bool) -> ParamId {
        self.entries.push(Param {
            name: name.into(),
            value,
            trainable,
        });
        self.entries.len() - 1
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.entries[id].value
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.entries[id].value
    }

    pub fn entries(&self) -> &[Param] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [Param] {
        &mut self.entries
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.entries.iter().position(|p| p.name == name)
    }

    pub fn num_trainable(&self) -> usize {
        self.entries
            .iter()
            .filter(|p| p.trainable)
            .map(|p| p.value.len())
            .sum()
    }

    pub fn checksum(&self) -> u64 {
        self.entries
            .iter()
            .fold(0u64, |h, p| h.rotate_left(7) ^ p.value.checksum())
    }

    /// Loads every entry into `graph`. In train mode trainable entries become
    /// differentiable leaves; otherwise everything is a constant.
    pub fn bind<'g>(&self, graph: &'g Graph, train: bool) -> Bound<'g> {
        let vars = self
            .entries
            .iter()
            .map(|p| {
                if train && p.trainable {
                    graph.param(p.value.clone())
                } else {
                    graph.constant(p.value.clone())
                }
            })
            .collect();
        Bound {
            graph,
            vars,
            train,
            updates: RefCell::new(Vec::new()),
        }
    }

    /// Copies values from `other` into entries with the same name and shape.
    /// Every entry of `self` must be present in `other`.
    pub fn load_matching(&mut self, other: &ParamStore) -> Result<()> {
        for entry in &mut self.entries {
            let src = other
                .entries
                .iter()
                .find(|p| p.name == entry.name)
                .ok_or_else(|| Error::Data(format!("missing parameter {}", entry.name)))?;
            if src.value.shape() != entry.value.shape() {
                return Err(Error::dim("load_params", entry.value.shape(), src.value.shape()));
            }
            entry.value = src.value.clone();
        }
        Ok(())
    }

    pub fn apply_updates(&mut self, updates: Vec<(ParamId, Tensor)>) {
        for (id, value) in updates {
            self.entries[id].value = value;
        }
    }

    /// One Adam update over the trainable entries. Missing gradients count as zero.
    pub fn adam_step(&mut self, grads: &[Option<Tensor>], opt: &mut Adam) -> Result<()> {
        if grads.len() != self.entries.len() {
            return Err(Error::dim("adam_step", &[self.entries.len()], &[grads.len()]));
        }
        let zeros: Vec<Option<Tensor>> = self
            .entries
            .iter()
            .zip(grads)
            .map(|(p, g)| match (p.trainable, g) {
                (true, None) => Some(Tensor::zeros(p.value.shape())),
                _ => None,
            })
            .collect();
        let mut params = Vec::new();
        let mut gs = Vec::new();
        for ((p, g), z) in self.entries.iter_mut().zip(grads).zip(&zeros) {
            if !p.trainable {
                continue;
            }
            params.push(&mut p.value);
            gs.push(g.as_ref().or(z.as_ref()).expect("zero fallback"));
        }
        opt.update(&mut params, &gs)
    }
}

/// A [`ParamStore`] loaded into a graph for one pass.
pub struct Bound<'g> {
    graph: &'g Graph,
    vars: Vec<Var<'g>>,
    train: bool,
    updates: RefCell<Vec<(ParamId, Tensor)>>,
}

impl<'g> Bound<'g> {
    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn var(&self, id: ParamId) -> Var<'g> {
        self.vars[id]
    }

    pub fn is_train(&self) -> bool {
        self.train
    }

    pub(crate) fn record_update(&self, id: ParamId, value: Tensor) {
        self.updates.borrow_mut().push((id, value));
    }

    /// Latest value of a buffer, including updates recorded in this pass.
    pub(crate) fn buffer_value(&self, id: ParamId) -> Tensor {
        let pending = self.updates.borrow();
        match pending.iter().rev().find(|(i, _)| *i == id) {
            Some((_, v)) => v.clone(),
            None => (*self.vars[id].value()).clone(),
        }
    }

    /// Buffer updates produced during the forward pass (running statistics).
    pub fn take_updates(&self) -> Vec<(ParamId, Tensor)> {
        std::mem::take(&mut *self.updates.borrow_mut())
    }

    /// First-order gradients of `loss` for every bound entry.
    pub fn grads(&self, loss: Var<'g>) -> Result<Grads> {
        let grads = self.graph.grad(loss, &self.vars, false)?;
        Ok(grads
            .into_iter()
            .map(|g| g.map(|v| (*v.value()).clone()))
            .collect())
    }
}

/// Fully connected layer `x·W + b`, `W` stored as `in×out`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    /// Uniform(−1/√in, 1/√in) initialization for both weight and bias.
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        rng: &mut R,
    ) -> Self {
        let bound = 1.0 / (in_dim as f64).sqrt();
        let mut uniform = |n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.random_range(-bound..bound)).collect()
        };
        let w = Tensor::matrix(in_dim, out_dim, uniform(in_dim * out_dim)).expect("shape");
        let b = Tensor::matrix(1, out_dim, uniform(out_dim)).expect("shape");
        Linear {
            weight: store.add(format!("{name}.weight"), w, true),
            bias: store.add(format!("{name}.bias"), b, true),
            in_dim,
            out_dim,
        }
    }

    pub fn forward<'g>(&self, p: &Bound<'g>, x: Var<'g>) -> Result<Var<'g>> {
        let rows = x.with_value(Tensor::rows);
        x.matmul(p.var(self.weight))?
            .add(p.var(self.bias).broadcast_rows(rows)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    Train,
    Eval,
}

/// Batch normalization over rows with learnable scale and shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub running_mean: ParamId,
    pub running_var: ParamId,
    pub eps: f64,
    pub momentum: f64,
}

impl BatchNorm {
    pub const EPS: f64 = 1e-5;

    pub fn new(store: &mut ParamStore, name: &str, dim: usize) -> Self {
        BatchNorm {
            gamma: store.add(format!("{name}.gamma"), Tensor::ones(&[1, dim]), true),
            beta: store.add(format!("{name}.beta"), Tensor::zeros(&[1, dim]), true),
            running_mean: store.add(format!("{name}.running_mean"), Tensor::zeros(&[1, dim]), false),
            running_var: store.add(format!("{name}.running_var"), Tensor::ones(&[1, dim]), false),
            eps: Self::EPS,
            momentum: 0.1,
        }
    }

    /// Normalizes without the affine part.
    ///
    /// Train mode uses the batch mean and population variance and records
    /// exponentially averaged running statistics on `p`; eval mode uses the
    /// stored running statistics.
    pub fn normalize<'g>(&self, p: &Bound<'g>, x: Var<'g>, mode: NormMode) -> Result<Var<'g>> {
        let (rows, cols) = x.with_value(|t| (t.rows(), t.cols()));
        match mode {
            NormMode::Train => {
                if rows < 2 {
                    return Err(Error::DegenerateBatch(rows));
                }
                let inv_n = 1.0 / rows as f64;
                let mean = x.sum_rows()?.scale(inv_n);
                let centered = x.sub(mean.broadcast_rows(rows)?)?;
                let var = centered.square()?.sum_rows()?.scale(inv_n);
                let inv_std = var.offset(self.eps).sqrt().recip();
                let y = centered.mul(inv_std.broadcast_rows(rows)?)?;

                let m = self.momentum;
                let update = |id: ParamId, batch: &Tensor| -> Result<Tensor> {
                    p.buffer_value(id)
                        .zip_map(batch, "batch_norm", |old, new| (1.0 - m) * old + m * new)
                };
                let new_mean = update(self.running_mean, &mean.value())?;
                let new_var = update(self.running_var, &var.value())?;
                p.record_update(self.running_mean, new_mean);
                p.record_update(self.running_var, new_var);
                Ok(y)
            }
            NormMode::Eval => {
                let mean = p.var(self.running_mean).value();
                let var = p.var(self.running_var).value();
                if mean.cols() != cols {
                    return Err(Error::dim("batch_norm", &[rows, cols], mean.shape()));
                }
                let shift = p.graph().constant(mean.map(|m| -m));
                let inv_std = p.graph().constant(var.map(|v| 1.0 / (v + self.eps).sqrt()));
                x.add(shift.broadcast_rows(rows)?)?
                    .mul(inv_std.broadcast_rows(rows)?)
            }
        }
    }

    pub fn forward<'g>(&self, p: &Bound<'g>, x: Var<'g>, mode: NormMode) -> Result<Var<'g>> {
        let rows = x.with_value(Tensor::rows);
        let y = self.normalize(p, x, mode)?;
        y.mul(p.var(self.gamma).broadcast_rows(rows)?)?
            .add(p.var(self.beta).broadcast_rows(rows)?)
    }
}

/// Per-row normalization over the feature axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub eps: f64,
}

impl LayerNorm {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize) -> Self {
        LayerNorm {
            gamma: store.add(format!("{name}.gamma"), Tensor::ones(&[1, dim]), true),
            beta: store.add(format!("{name}.beta"), Tensor::zeros(&[1, dim]), true),
            eps: 1e-5,
        }
    }

    pub fn forward<'g>(&self, p: &Bound<'g>, x: Var<'g>) -> Result<Var<'g>> {
        let (rows, cols) = x.with_value(|t| (t.rows(), t.cols()));
        let inv_d = 1.0 / cols as f64;
        let mean = x.sum_cols()?.scale(inv_d);
        let centered = x.sub(mean.broadcast_cols(cols)?)?;
        let var = centered.square()?.sum_cols()?.scale(inv_d);
        let inv_std = var.offset(self.eps).sqrt().recip();
        centered
            .mul(inv_std.broadcast_cols(cols)?)?
            .mul(p.var(self.gamma).broadcast_rows(rows)?)?
            .add(p.var(self.beta).broadcast_rows(rows)?)
    }
}

pub(crate) fn one_hot(labels: &[usize], classes: usize) -> Result<Tensor> {
    let mut t = Tensor::zeros(&[labels.len(), classes]);
    for (r, &c) in labels.iter().enumerate() {
        if c >= classes {
            return Err(Error::Index {
                what: "class",
                index: c,
                bound: classes,
            });
        }
        t.data_mut()[r * classes + c] = 1.0;
    }
    Ok(t)
}
