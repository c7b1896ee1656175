//! Numerical substrate: tensors, random streams, softmax/cross-entropy, Adam,
//! bilinear resampling with its adjoint, the NDT container and small linear algebra.

pub mod adam;
pub mod linalg;
pub mod ndt;
pub mod ops;
pub mod resample;
pub mod rng;
pub mod tensor;

pub use adam::{adam_step, cosine_decay, AdamConfig, AdamState};
pub use ops::{cross_entropy, sigmoid, softmax};
pub use resample::{bilinear_resize, bilinear_resize_vjp, resample, resample_vjp, AxisMap};
pub use rng::RngStream;
pub use tensor::Tensor;
