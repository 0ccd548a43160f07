//! Differentiable building blocks: the recording graph, loss functions,
//! input gradients for the gradient penalty, and Adam.

mod adam;
mod graph;

pub use adam::{Adam, AdamConfig};
pub use graph::{Graph, Var};

use std::rc::Rc;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Mean cross-entropy of `logits` (`b×C`) against class indices.
pub fn softmax_cross_entropy<'g>(logits: Var<'g>, labels: &[usize]) -> Result<Var<'g>> {
    let shape = logits.shape();
    let (b, c) = (shape[0], shape[shape.len() - 1]);
    if labels.len() != b {
        return Err(Error::dim("softmax_cross_entropy", &shape, &[labels.len()]));
    }
    let mut target = Tensor::zeros(&[b, c]);
    for (r, &y) in labels.iter().enumerate() {
        if y >= c {
            return Err(Error::Index {
                what: "label",
                index: y,
                bound: c,
            });
        }
        target.data_mut()[r * c + y] = 1.0;
    }
    logits.soft_target_xent(Rc::new(target))
}

/// `KL(teacher ‖ softmax(student_logits))`, averaged over rows.
///
/// The teacher distribution is the fixed reference; only the student side
/// is differentiated.
pub fn kl_divergence<'g>(teacher_probs: &Tensor, student_logits: Var<'g>) -> Result<Var<'g>> {
    validate_distribution_rows(teacher_probs)?;
    student_logits.soft_target_xent(Rc::new(teacher_probs.clone()))
}

pub(crate) fn validate_distribution_rows(probs: &Tensor) -> Result<()> {
    for r in 0..probs.rows() {
        let row = probs.row(r);
        if let Some(bad) = row.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::Distribution(format!("row {r} has entry {bad}")));
        }
        let total: f64 = row.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::Distribution(format!("row {r} sums to {total}")));
        }
    }
    Ok(())
}

/// Binds `x` as a differentiable input, evaluates `net` and returns
/// `(x, ∇ₓ Σ net(x))`.
///
/// The gradient stays on the graph, so losses built from it can be
/// differentiated with respect to whatever parameters `net` closes over.
/// When `net` produces one score per row and rows do not interact, row `i`
/// of the gradient is the gradient of score `i` with respect to row `i`.
pub fn input_gradient<'g, F>(graph: &'g Graph, x: &Tensor, net: F) -> Result<(Var<'g>, Var<'g>)>
where
    F: FnOnce(Var<'g>) -> Result<Var<'g>>,
{
    let input = graph.param(x.clone());
    let score = net(input)?.sum_all();
    let grad = graph
        .grad(score, &[input], true)?
        .pop()
        .flatten()
        .unwrap_or_else(|| graph.constant(Tensor::zeros(x.shape())));
    Ok((input, grad))
}
