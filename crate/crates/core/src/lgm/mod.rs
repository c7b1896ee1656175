//! Linear gradient matching: random linear heads, gradient cosine objective and the
//! distillation loop.

pub mod distill;
pub mod head;
pub mod matching;

pub use distill::{
    distill, distill_step, distill_to_dir, load_synthetic, DistillConfig, DistillState,
    StepGradients, StepMetrics, SyntheticSet,
};
pub use head::{sample_head, HeadInit, LinearHead};
pub use matching::{class_loss_and_grad, meta_grad_features, meta_loss, GradientPair};
