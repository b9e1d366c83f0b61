//! Dense tensors, taped reverse-mode differentiation, and the Adam optimizer.

mod adam;
mod random;
mod scalar;
mod tape;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use random::{gaussian_sample, interpolate, interpolate_with, seeded_rng, truncated_normal, Rng};
pub use scalar::Real;
pub use tape::{Gradients, Tape, Var};
pub use tensor::{matmul, matmul_t, Tensor};

/// Per-row Euclidean norm of a gradient batch, kept on the tape.
pub fn grad_norm<'t, F: Real>(grad: Var<'t, F>) -> crate::Result<Var<'t, F>> {
    grad.row_norm()
}
