//! Small synthetic datasets for smoke runs and acceptance checks.

use crate::data::LabeledSet;
use crate::error::Result;
use crate::numcore::{RngStream, Tensor};

/// Isotropic Gaussian classes in `dim` dimensions. Class `c` has mean `e_c / sqrt(2)`, so
/// every pair of means is at distance 1. Needs `classes <= dim`.
pub fn gaussian_mixture(
    stream: &mut RngStream,
    classes: usize,
    dim: usize,
    sigma: f64,
    per_class: usize,
) -> Result<LabeledSet> {
    if classes > dim {
        return Err(crate::Error::invalid(format!(
            "{classes} classes need dim >= {classes}, got {dim}"
        )));
    }
    let a = std::f64::consts::FRAC_1_SQRT_2;
    let mut samples = Vec::with_capacity(classes * per_class);
    let mut labels = Vec::with_capacity(classes * per_class);
    for i in 0..classes * per_class {
        let c = i % classes;
        samples.push(Tensor::from_fn(
            &[dim],
            |j| if j == c { a } else { 0.0 } + sigma * stream.normal(),
        ));
        labels.push(c);
    }
    LabeledSet::with_names(
        samples,
        labels,
        (0..classes).map(|c| format!("gauss_{c}")).collect(),
    )
}

pub const SHAPE_NAMES: [&str; 3] = ["cross", "disk", "square"];

/// Colored disks, squares and crosses on a noisy dark background, `3 x size x size`.
/// Class ids follow [`SHAPE_NAMES`] (alphabetical, matching the image-folder loader).
pub fn shapes(stream: &mut RngStream, per_class: usize, size: usize) -> Result<LabeledSet> {
    let mut samples = Vec::with_capacity(3 * per_class);
    let mut labels = Vec::with_capacity(3 * per_class);
    let s = size as f64;
    for i in 0..3 * per_class {
        let class = i % 3;
        let cx = s / 2.0 + stream.uniform(-0.15, 0.15) * s;
        let cy = s / 2.0 + stream.uniform(-0.15, 0.15) * s;
        let radius = stream.uniform(0.22, 0.32) * s;
        let color = [
            stream.uniform(0.4, 1.0),
            stream.uniform(0.4, 1.0),
            stream.uniform(0.4, 1.0),
        ];
        let bg = [
            stream.uniform(0.0, 0.25),
            stream.uniform(0.0, 0.25),
            stream.uniform(0.0, 0.25),
        ];
        let mut img = Tensor::zeros(&[3, size, size]);
        for y in 0..size {
            for x in 0..size {
                let dx = x as f64 + 0.5 - cx;
                let dy = y as f64 + 0.5 - cy;
                let inside = match class {
                    0 => {
                        (dx.abs() <= radius && dy.abs() <= radius / 3.0)
                            || (dy.abs() <= radius && dx.abs() <= radius / 3.0)
                    }
                    1 => dx * dx + dy * dy <= radius * radius,
                    _ => dx.abs() <= radius * 0.85 && dy.abs() <= radius * 0.85,
                };
                for (ch, (&fg, &b)) in color.iter().zip(&bg).enumerate() {
                    let v = if inside { fg } else { b } + 0.03 * stream.normal();
                    img.data_mut()[(ch * size + y) * size + x] = v.clamp(0.0, 1.0);
                }
            }
        }
        samples.push(img);
        labels.push(class);
    }
    LabeledSet::with_names(
        samples,
        labels,
        SHAPE_NAMES.iter().map(|n| n.to_string()).collect(),
    )
}
