//! Minimal dense numeric core: flat parameter vectors with layer metadata,
//! MLP evaluation, exact reverse-mode gradients over a fixed operation
//! vocabulary, and a finite-difference oracle used to validate every gradient
//! in the system.

mod fd;
mod param;
mod tape;

pub use fd::{finite_diff, finite_diff_multi, max_rel_err};
pub use param::{LayerShape, ParamVector};
pub use tape::{ParamId, Tape, Var};

use thiserror::Error;

/// Per-layer nonlinearity. `ReLU` uses subgradient 0 at the kink; `Softplus`
/// is evaluated through `log1p` so it never overflows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    ReLU,
    Sigmoid,
    Softplus,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::ReLU => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Softplus => x.max(0.0) + (-x.abs()).exp().ln_1p(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed in terms of the input `x` and the output `y`.
    #[inline]
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::ReLU => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Softplus => 1.0 / (1.0 + (-x).exp()),
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("parameter data is not finite at index {0}")]
    NotFinite(usize),
    /// Reserved for kinks without a documented subgradient convention.
    /// ReLU at 0 uses subgradient 0, so the current vocabulary never raises it.
    #[error("non-differentiable point hit exactly")]
    NonDifferentiablePoint,
}

/// Gradients of a user loss with respect to both field parameter blocks and
/// the per-image embeddings, carrying the same shape metadata as the
/// parameters they differentiate.
#[derive(Clone, Debug)]
pub struct GradRecord {
    pub wrt_global: ParamVector,
    pub wrt_personal: ParamVector,
    /// One `(appearance, transient)` gradient pair per training image.
    pub wrt_embeddings: Vec<(Vec<f64>, Vec<f64>)>,
}

/// Evaluates an MLP described by `params` on a single input vector.
///
/// `activations` supplies one entry per layer. Pure: identical inputs give
/// bit-identical outputs.
pub fn mlp_forward(
    params: &ParamVector,
    input: &[f64],
    activations: &[Activation],
) -> Result<Vec<f64>, Error> {
    let shapes = params.shapes();
    if activations.len() != shapes.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} activations for {} layers",
            activations.len(),
            shapes.len()
        )));
    }
    if shapes.is_empty() {
        return Ok(input.to_vec());
    }
    if input.len() != shapes[0].cols as usize {
        return Err(Error::ShapeMismatch(format!(
            "input length {} != first layer cols {}",
            input.len(),
            shapes[0].cols
        )));
    }
    let mut cur = input.to_vec();
    for (li, (shape, act)) in shapes.iter().zip(activations).enumerate() {
        if cur.len() != shape.cols as usize {
            return Err(Error::ShapeMismatch(format!(
                "layer {li}: input length {} != cols {}",
                cur.len(),
                shape.cols
            )));
        }
        let (w, b) = params.layer(li);
        let rows = shape.rows as usize;
        let cols = shape.cols as usize;
        let mut next = vec![0.0; rows];
        for r in 0..rows {
            let row = &w[r * cols..(r + 1) * cols];
            let mut acc = 0.0;
            for (wv, xv) in row.iter().zip(cur.iter()) {
                acc += wv * xv;
            }
            if let Some(b) = b {
                acc += b[r];
            }
            next[r] = act.apply(acc);
        }
        cur = next;
    }
    Ok(cur)
}
