use crate::error::{Error, Result};
use crate::imgparam::ColorTransform;
use crate::numcore::{bilinear_resize, bilinear_resize_vjp, sigmoid, RngStream, Tensor};

/// One synthetic image stored as a stack of `3 x r x r` levels, `r = 1, 2, 4, ..., R`.
///
/// Only the first `active_count` levels are rendered and optimized. A "flat" image is the
/// degenerate case of a single `R x R` level.
#[derive(Clone, Debug, PartialEq)]
pub struct PyramidImage {
    levels: Vec<Tensor>,
    active: usize,
    max_resolution: usize,
}

fn pyramid_resolutions(max_resolution: usize) -> Result<Vec<usize>> {
    if max_resolution == 0 || !max_resolution.is_power_of_two() {
        return Err(Error::invalid(format!(
            "pyramid max resolution must be a power of two, got {max_resolution}"
        )));
    }
    let mut res = vec![1];
    while *res.last().unwrap() < max_resolution {
        res.push(res.last().unwrap() * 2);
    }
    Ok(res)
}

impl PyramidImage {
    /// All-zero pyramid with one active level.
    pub fn zeros(max_resolution: usize) -> Result<Self> {
        let levels = pyramid_resolutions(max_resolution)?
            .into_iter()
            .map(|r| Tensor::zeros(&[3, r, r]))
            .collect();
        Ok(PyramidImage {
            levels,
            active: 1,
            max_resolution,
        })
    }

    /// Every level drawn i.i.d. standard normal; only the 1x1 level starts active.
    pub fn init(stream: &mut RngStream, max_resolution: usize) -> Result<Self> {
        let mut p = Self::zeros(max_resolution)?;
        for level in &mut p.levels {
            level
                .data_mut()
                .iter_mut()
                .for_each(|v| *v = stream.normal());
        }
        Ok(p)
    }

    /// A single full-resolution level, active from the start (the no-pyramid ablation).
    pub fn flat(stream: &mut RngStream, resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::invalid("flat image resolution must be positive"));
        }
        let level = Tensor::from_fn(&[3, resolution, resolution], |_| stream.normal());
        Ok(PyramidImage {
            levels: vec![level],
            active: 1,
            max_resolution: resolution,
        })
    }

    /// Rebuilds a pyramid from stored levels, validating the resolution ladder.
    pub fn from_levels(levels: Vec<Tensor>, active: usize) -> Result<Self> {
        let max_resolution = match levels.last() {
            Some(l) => l.dims().last().copied().unwrap_or(0),
            None => return Err(Error::invalid("pyramid needs at least one level")),
        };
        let expected = if levels.len() == 1 {
            vec![max_resolution]
        } else {
            pyramid_resolutions(max_resolution)?
        };
        if expected.len() != levels.len() {
            return Err(Error::invalid(format!(
                "pyramid with max resolution {max_resolution} needs {} levels, got {}",
                expected.len(),
                levels.len()
            )));
        }
        for (l, &r) in levels.iter().zip(&expected) {
            l.ensure_dims("PyramidImage::from_levels", &[3, r, r])?;
        }
        if active == 0 || active > levels.len() {
            return Err(Error::invalid(format!(
                "active level count {active} outside 1..={}",
                levels.len()
            )));
        }
        Ok(PyramidImage {
            levels,
            active,
            max_resolution,
        })
    }

    pub fn max_resolution(&self) -> usize {
        self.max_resolution
    }

    pub fn resolutions(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.dims()[1]).collect()
    }

    pub fn levels(&self) -> &[Tensor] {
        &self.levels
    }

    pub fn level_mut(&mut self, i: usize) -> &mut Tensor {
        &mut self.levels[i]
    }

    /// Mutable view of the active levels.
    pub fn active_levels_mut(&mut self) -> &mut [Tensor] {
        &mut self.levels[..self.active]
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn active_count(&self) -> usize {
        self.active
    }

    /// Enables the next level, capped at the full stack. Stored values are untouched: the
    /// render averages over active levels, which renormalizes them.
    pub fn activate_next_level(&mut self) -> bool {
        if self.active < self.levels.len() {
            self.active += 1;
            true
        } else {
            false
        }
    }

    /// Mean of the active levels upsampled to full resolution (before color and squashing).
    pub fn composite(&self) -> Result<Tensor> {
        let r = self.max_resolution;
        let mut acc = Tensor::zeros(&[3, r, r]);
        for level in &self.levels[..self.active] {
            acc.axpy(1.0, &bilinear_resize(level, r, r)?);
        }
        acc.scale(1.0 / self.active as f64);
        Ok(acc)
    }
}

/// Functional form of [`PyramidImage::activate_next_level`].
pub fn activate_next_level(mut p: PyramidImage) -> PyramidImage {
    p.activate_next_level();
    p
}

/// Maps a pyramid to pixels: average active levels, apply the color transform per pixel,
/// then squash with `sigmoid(scale * x)`.
///
/// `scale = 1` is the plain sigmoid; `scale = 2` gives `0.5 + 0.5 * tanh(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Renderer {
    pub color: ColorTransform,
    pub sigmoid_scale: f64,
}

impl Default for Renderer {
    fn default() -> Self {
        Renderer {
            color: ColorTransform::identity(),
            sigmoid_scale: 1.0,
        }
    }
}

impl Renderer {
    pub fn new(color: ColorTransform) -> Self {
        Renderer {
            color,
            sigmoid_scale: 1.0,
        }
    }

    fn pre_activation(&self, p: &PyramidImage) -> Result<Tensor> {
        let composite = p.composite()?;
        composite.ensure_finite("render")?;
        let mut rgb = self.color.apply(&composite)?;
        rgb.scale(self.sigmoid_scale);
        Ok(rgb)
    }

    pub fn render(&self, p: &PyramidImage) -> Result<Tensor> {
        let mut x = self.pre_activation(p)?;
        x.data_mut().iter_mut().for_each(|v| *v = sigmoid(*v));
        Ok(x)
    }

    /// Gradient of `<render(p), upstream>` with respect to every level; inactive levels get zeros.
    pub fn render_vjp(&self, p: &PyramidImage, upstream: &Tensor) -> Result<Vec<Tensor>> {
        let r = p.max_resolution;
        upstream.ensure_dims("render_vjp", &[3, r, r])?;
        upstream.ensure_finite("render_vjp")?;
        let mut g = self.pre_activation(p)?;
        for (gv, &u) in g.data_mut().iter_mut().zip(upstream.data()) {
            let s = sigmoid(*gv);
            *gv = u * self.sigmoid_scale * s * (1.0 - s);
        }
        let mut g = self.color.apply_transpose(&g)?;
        g.scale(1.0 / p.active as f64);
        p.levels
            .iter()
            .enumerate()
            .map(|(i, level)| {
                let lr = level.dims()[1];
                if i < p.active {
                    bilinear_resize_vjp(&g, lr, lr)
                } else {
                    Ok(Tensor::zeros(level.dims()))
                }
            })
            .collect()
    }
}

pub fn render(p: &PyramidImage, ct: &ColorTransform) -> Result<Tensor> {
    Renderer::new(ct.clone()).render(p)
}

pub fn render_vjp(p: &PyramidImage, ct: &ColorTransform, upstream: &Tensor) -> Result<Vec<Tensor>> {
    Renderer::new(ct.clone()).render_vjp(p, upstream)
}

pub fn init_pyramid(stream: &mut RngStream, max_resolution: usize) -> Result<PyramidImage> {
    PyramidImage::init(stream, max_resolution)
}
