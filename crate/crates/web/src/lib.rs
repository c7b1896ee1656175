//! Browser bindings for three small interactive views of the engine: a pyramid image with
//! levels switched on one by one, the train-time augmentations applied to a toy shape, and
//! a 2-D vector distillation that can be stepped while watching the synthetic points move.
//!
//! Every exported method has a plain Rust twin (`try_*` or a non-exported constructor) so
//! the logic is testable off the browser.

use lgm_core::augment::{apply, sample_for, AugmentConfig, AugmentationParams};
use lgm_core::data::LabeledSet;
use lgm_core::encoder::Identity;
use lgm_core::eval::cosine_similarity;
use lgm_core::imgparam::ppm::quantize;
use lgm_core::imgparam::{ColorTransform, PyramidImage, Renderer};
use lgm_core::lgm::{DistillConfig, DistillState, SyntheticSet};
use lgm_core::numcore::{RngStream, Tensor};
use lgm_core::toy::shapes;
use wasm_bindgen::prelude::*;

fn js<T>(r: lgm_core::Result<T>) -> Result<T, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

/// `3 x H x W` in `[0, 1]` to row-major RGBA bytes.
pub fn to_rgba(img: &Tensor) -> Vec<u8> {
    let (h, w) = (img.dims()[1], img.dims()[2]);
    let plane = h * w;
    let d = img.data();
    let mut out = Vec::with_capacity(4 * plane);
    for i in 0..plane {
        out.extend([
            quantize(d[i]),
            quantize(d[plane + i]),
            quantize(d[2 * plane + i]),
            255,
        ]);
    }
    out
}

#[wasm_bindgen]
pub struct PyramidDemo {
    pyramid: PyramidImage,
    renderer: Renderer,
}

impl PyramidDemo {
    pub fn create(seed: u32, resolution: u32) -> lgm_core::Result<Self> {
        let pyramid = PyramidImage::init(&mut RngStream::new(seed as u64, 1), resolution as usize)?;
        Ok(PyramidDemo {
            pyramid,
            renderer: Renderer::new(ColorTransform::identity()),
        })
    }

    pub fn try_set_active(&mut self, n: u32) -> lgm_core::Result<()> {
        self.pyramid = PyramidImage::from_levels(self.pyramid.levels().to_vec(), n as usize)?;
        Ok(())
    }

    pub fn try_rgba(&self) -> lgm_core::Result<Vec<u8>> {
        Ok(to_rgba(&self.renderer.render(&self.pyramid)?))
    }
}

#[wasm_bindgen]
impl PyramidDemo {
    /// Fresh `N(0, 1)` pyramid with only the 1x1 level active.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, resolution: u32) -> Result<PyramidDemo, JsError> {
        js(Self::create(seed, resolution))
    }

    pub fn resolution(&self) -> u32 {
        self.pyramid.max_resolution() as u32
    }

    pub fn level_count(&self) -> u32 {
        self.pyramid.level_count() as u32
    }

    pub fn active_count(&self) -> u32 {
        self.pyramid.active_count() as u32
    }

    pub fn set_active(&mut self, n: u32) -> Result<(), JsError> {
        js(self.try_set_active(n))
    }

    pub fn rgba(&self) -> Result<Vec<u8>, JsError> {
        js(self.try_rgba())
    }
}

#[wasm_bindgen]
pub struct AugmentDemo {
    source: Tensor,
    stream: RngStream,
    last: Option<AugmentationParams>,
}

impl AugmentDemo {
    pub fn create(seed: u32, size: u32) -> lgm_core::Result<Self> {
        let set = shapes(&mut RngStream::new(seed as u64, 2), 1, size as usize)?;
        Ok(AugmentDemo {
            source: set.samples[seed as usize % 3].clone(),
            stream: RngStream::new(seed as u64, 3),
            last: None,
        })
    }

    pub fn try_sample(
        &mut self,
        flip: bool,
        crop: bool,
        noise: bool,
        noise_std: f64,
    ) -> lgm_core::Result<Vec<u8>> {
        let s = self.source.dims()[1];
        let cfg = AugmentConfig {
            flip,
            crop,
            noise,
            noise_std,
            rounds: 1,
            out_size: Some((s, s)),
            ..AugmentConfig::default()
        };
        cfg.validate()?;
        let params = sample_for(&mut self.stream, &cfg, &self.source);
        let out = apply(&self.source, &params)?;
        self.last = Some(params);
        Ok(to_rgba(&out))
    }
}

#[wasm_bindgen]
impl AugmentDemo {
    /// One toy shape image (`size x size`) chosen by `seed`.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, size: u32) -> Result<AugmentDemo, JsError> {
        js(Self::create(seed, size))
    }

    pub fn size(&self) -> u32 {
        self.source.dims()[1] as u32
    }

    pub fn source_rgba(&self) -> Vec<u8> {
        to_rgba(&self.source)
    }

    /// Draws fresh parameters and returns the augmented image (clamped by quantization).
    pub fn sample(
        &mut self,
        flip: bool,
        crop: bool,
        noise: bool,
        noise_std: f64,
    ) -> Result<Vec<u8>, JsError> {
        js(self.try_sample(flip, crop, noise, noise_std))
    }

    /// The parameters of the last sample, as text.
    pub fn describe(&self) -> String {
        let Some(p) = &self.last else {
            return "no sample yet".into();
        };
        let mut parts = Vec::new();
        if let Some(sp) = p.spatial {
            let c = sp.crop;
            parts.push(format!(
                "crop {}x{} at ({}, {})",
                c.height, c.width, c.top, c.left
            ));
            parts.push(format!("flip {}", if sp.flip { "yes" } else { "no" }));
        }
        parts.push(format!("noise std {}", p.noise.sigma));
        parts.join(", ")
    }
}

const VECTOR_CLASSES: usize = 3;

/// Three Gaussian classes in the plane with means on the unit circle.
pub fn planar_mixture(seed: u64, sigma: f64, per_class: usize) -> lgm_core::Result<LabeledSet> {
    let mut s = RngStream::new(seed, 4);
    let mut samples = Vec::with_capacity(VECTOR_CLASSES * per_class);
    let mut labels = Vec::with_capacity(VECTOR_CLASSES * per_class);
    for i in 0..VECTOR_CLASSES * per_class {
        let c = i % VECTOR_CLASSES;
        let a = std::f64::consts::TAU * c as f64 / VECTOR_CLASSES as f64;
        samples.push(Tensor::new(
            vec![2],
            vec![a.cos() + sigma * s.normal(), a.sin() + sigma * s.normal()],
        )?);
        labels.push(c);
    }
    LabeledSet::new(samples, labels)
}

#[wasm_bindgen]
pub struct VectorDemo {
    state: DistillState,
    data: LabeledSet,
    enc: Identity,
}

impl VectorDemo {
    pub fn create(seed: u32, sigma: f64, per_class: u32) -> lgm_core::Result<Self> {
        let data = planar_mixture(seed as u64, sigma, per_class as usize)?;
        let cfg = DistillConfig {
            iterations: usize::MAX,
            meta_lr: 0.01,
            augment_cfg: AugmentConfig {
                flip: false,
                crop: false,
                noise_std: sigma,
                rounds: 4,
                ..AugmentConfig::default()
            },
            seed: seed as u64,
            ..DistillConfig::default()
        };
        let state = DistillState::init(cfg, &data)?;
        Ok(VectorDemo {
            state,
            data,
            enc: Identity::new(2),
        })
    }

    /// Runs `n` iterations; returns the mean meta loss over the non-skipped ones.
    pub fn try_step(&mut self, n: u32) -> lgm_core::Result<f64> {
        let (mut sum, mut count) = (0.0, 0);
        for _ in 0..n {
            let stream = self.state.step_stream(self.state.iteration);
            let m = self.state.step(&self.enc, &self.data, &stream)?;
            if !m.skipped {
                sum += m.meta_loss;
                count += 1;
            }
        }
        Ok(if count == 0 {
            f64::NAN
        } else {
            sum / count as f64
        })
    }

    pub fn synthetic(&self) -> Vec<Tensor> {
        match &self.state.synthetic {
            SyntheticSet::Vectors { points } => points.clone(),
            SyntheticSet::Images { .. } => unreachable!("vector demo holds vectors"),
        }
    }
}

#[wasm_bindgen]
impl VectorDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, sigma: f64, per_class: u32) -> Result<VectorDemo, JsError> {
        js(Self::create(seed, sigma, per_class))
    }

    pub fn step(&mut self, n: u32) -> Result<f64, JsError> {
        js(self.try_step(n))
    }

    pub fn iteration(&self) -> u32 {
        self.state.iteration as u32
    }

    pub fn classes(&self) -> u32 {
        VECTOR_CLASSES as u32
    }

    /// Synthetic points as `[x0, y0, x1, y1, ...]`, one per class.
    pub fn points(&self) -> Vec<f64> {
        self.synthetic()
            .iter()
            .flat_map(|p| p.data().to_vec())
            .collect()
    }

    pub fn real_points(&self) -> Vec<f64> {
        self.data
            .samples
            .iter()
            .flat_map(|p| p.data().to_vec())
            .collect()
    }

    pub fn real_labels(&self) -> Vec<u32> {
        self.data.labels.iter().map(|&l| l as u32).collect()
    }

    /// Share of real points whose most cosine-similar synthetic point has their class.
    pub fn accuracy(&self) -> f64 {
        let syn = self.synthetic();
        let hits = self
            .data
            .samples
            .iter()
            .zip(&self.data.labels)
            .filter(|(x, &y)| {
                let best = (0..syn.len())
                    .max_by(|&a, &b| {
                        cosine_similarity(syn[a].data(), x.data())
                            .total_cmp(&cosine_similarity(syn[b].data(), x.data()))
                            .then(b.cmp(&a))
                    })
                    .unwrap_or(0);
                best == y
            })
            .count();
        hits as f64 / self.data.len() as f64
    }
}
