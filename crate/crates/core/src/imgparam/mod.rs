//! Pyramid parameterization of synthetic images, color decorrelation, rendering,
//! checkpoints and PPM export.

pub mod checkpoint;
pub mod color;
pub mod ppm;
pub mod pyramid;

pub use checkpoint::{load_pyramids, save_pyramids};
pub use color::{channel_covariance, color_matrix_from_dataset, ColorTransform};
pub use ppm::{decode_ppm, encode_ppm, export_ppm, read_ppm};
pub use pyramid::{activate_next_level, init_pyramid, render, render_vjp, PyramidImage, Renderer};
