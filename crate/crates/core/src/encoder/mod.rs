//! Frozen feature extractors and the embedding table shared with external tooling.
//!
//! An [`Encoder`] maps a batch `[N, ...input_dims]` to features `[N, f]` and provides the
//! Jacobian-transpose product with respect to its input. Weights never change after
//! construction.

mod builtin;
mod conv;
mod persist;
mod table;

pub use builtin::{
    Activation, BuiltinEncoder, ConvSmall, EncoderSpec, Identity, Mlp, RandomProjection,
};
pub use persist::{load_encoder, save_encoder};
pub use table::{embed_dataset, EmbeddingTable};

use crate::error::{Error, Result};
use crate::numcore::Tensor;

pub trait Encoder: Send + Sync {
    /// Shape of one input sample.
    fn input_dims(&self) -> &[usize];

    fn feature_dim(&self) -> usize;

    fn forward(&self, batch: &Tensor) -> Result<Tensor>;

    /// `upstream` is `[N, f]`; returns the gradient with respect to `batch`.
    fn vjp(&self, batch: &Tensor, upstream: &Tensor) -> Result<Tensor>;

    /// Convenience: stacks samples and runs [`forward`](Self::forward).
    fn encode(&self, samples: &[Tensor]) -> Result<Tensor> {
        self.forward(&Tensor::stack(samples)?)
    }
}

/// Validates `[N, ...input_dims]` and returns `N`.
pub(crate) fn batch_len(op: &'static str, input_dims: &[usize], batch: &Tensor) -> Result<usize> {
    let d = batch.dims();
    if d.len() != input_dims.len() + 1 || &d[1..] != input_dims {
        let mut want = vec![d.first().copied().unwrap_or(0)];
        want.extend_from_slice(input_dims);
        return Err(Error::shape(op, &want, d));
    }
    batch.ensure_finite(op)?;
    Ok(d[0])
}

pub(crate) fn check_upstream(
    op: &'static str,
    n: usize,
    f: usize,
    upstream: &Tensor,
) -> Result<()> {
    upstream.ensure_dims(op, &[n, f])?;
    upstream.ensure_finite(op)
}
