//! Differentiable train-time augmentations: horizontal flip, random resized crop and
//! additive Gaussian noise, applied in that order.
//!
//! Parameters are drawn up front and stored, so a transform can be replayed exactly and
//! its adjoint applied to an upstream gradient. Given fixed parameters the map from input
//! pixels to output pixels is linear plus an additive noise constant.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numcore::{resample, resample_vjp, AxisMap, RngStream, Tensor};

#[derive(Clone, Debug, PartialEq)]
pub struct AugmentConfig {
    pub flip: bool,
    pub crop: bool,
    pub noise: bool,
    pub flip_prob: f64,
    /// Crop area as a fraction of the source area.
    pub area_range: (f64, f64),
    /// Crop width / height.
    pub aspect_range: (f64, f64),
    pub noise_std: f64,
    /// Independent augmented copies per image.
    pub rounds: usize,
    /// Output size `(H, W)` for images; `None` keeps the source size.
    pub out_size: Option<(usize, usize)>,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            flip: true,
            crop: true,
            noise: true,
            flip_prob: 0.5,
            area_range: (0.08, 1.0),
            aspect_range: (3.0 / 4.0, 4.0 / 3.0),
            noise_std: 0.2,
            rounds: 10,
            out_size: None,
        }
    }
}

impl AugmentConfig {
    /// All transforms off, one round.
    pub fn disabled() -> Self {
        AugmentConfig {
            flip: false,
            crop: false,
            noise: false,
            rounds: 1,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (a0, a1) = self.area_range;
        let (r0, r1) = self.aspect_range;
        if !(a0 > 0.0 && a0 <= a1 && a1 <= 1.0) {
            return Err(Error::invalid(format!(
                "bad crop area range {:?}",
                self.area_range
            )));
        }
        if !(r0 > 0.0 && r0 <= r1) {
            return Err(Error::invalid(format!(
                "bad crop aspect range {:?}",
                self.aspect_range
            )));
        }
        if !(0.0..=1.0).contains(&self.flip_prob) {
            return Err(Error::invalid(format!(
                "flip probability {} outside [0,1]",
                self.flip_prob
            )));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::invalid(format!(
                "noise std {} must be >= 0",
                self.noise_std
            )));
        }
        if self.rounds == 0 {
            return Err(Error::invalid("augmentation rounds must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CropBox {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
}

/// Flip and crop geometry for image inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Spatial {
    pub flip: bool,
    pub crop: CropBox,
    pub src: (usize, usize),
    pub out: (usize, usize),
}

/// Reference to a replayable per-element normal field scaled by `sigma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseDraw {
    pub seed: u64,
    pub stream_id: u64,
    pub sigma: f64,
}

impl NoiseDraw {
    pub const NONE: NoiseDraw = NoiseDraw {
        seed: 0,
        stream_id: 0,
        sigma: 0.0,
    };

    fn add_to(&self, out: &mut Tensor) {
        if self.sigma == 0.0 {
            return;
        }
        let mut s = RngStream::new(self.seed, self.stream_id);
        for v in out.data_mut() {
            *v += self.sigma * s.normal();
        }
    }
}

/// One sampled augmentation. `spatial` is `None` for vector inputs, where only noise applies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AugmentationParams {
    pub spatial: Option<Spatial>,
    pub noise: NoiseDraw,
}

impl AugmentationParams {
    pub fn identity_image(h: usize, w: usize) -> Self {
        AugmentationParams {
            spatial: Some(Spatial {
                flip: false,
                crop: CropBox {
                    top: 0,
                    left: 0,
                    height: h,
                    width: w,
                },
                src: (h, w),
                out: (h, w),
            }),
            noise: NoiseDraw::NONE,
        }
    }

    pub fn identity_vector() -> Self {
        AugmentationParams {
            spatial: None,
            noise: NoiseDraw::NONE,
        }
    }

    fn axes(sp: &Spatial) -> Result<(AxisMap, AxisMap)> {
        let rows = AxisMap::new(sp.src.0, sp.out.0, sp.crop.top, sp.crop.height, false)?;
        let cols = AxisMap::new(sp.src.1, sp.out.1, sp.crop.left, sp.crop.width, sp.flip)?;
        Ok((rows, cols))
    }
}

fn sample_noise(stream: &mut RngStream, cfg: &AugmentConfig) -> NoiseDraw {
    if cfg.noise && cfg.noise_std > 0.0 {
        NoiseDraw {
            seed: stream.seed(),
            stream_id: stream.next_u64(),
            sigma: cfg.noise_std,
        }
    } else {
        NoiseDraw::NONE
    }
}

fn sample_crop(stream: &mut RngStream, cfg: &AugmentConfig, h: usize, w: usize) -> CropBox {
    let full = CropBox {
        top: 0,
        left: 0,
        height: h,
        width: w,
    };
    if !cfg.crop {
        return full;
    }
    let area = (h * w) as f64;
    let (lr0, lr1) = (cfg.aspect_range.0.ln(), cfg.aspect_range.1.ln());
    for _ in 0..10 {
        let target = area * stream.uniform(cfg.area_range.0, cfg.area_range.1);
        let aspect = stream.uniform(lr0, lr1).exp();
        let cw = (target * aspect).sqrt().round() as usize;
        let ch = (target / aspect).sqrt().round() as usize;
        if cw > 0 && cw <= w && ch > 0 && ch <= h {
            let top = stream.below(h - ch + 1);
            let left = stream.below(w - cw + 1);
            return CropBox {
                top,
                left,
                height: ch,
                width: cw,
            };
        }
    }
    full
}

/// Draws flip, crop and noise for a `3 x src_h x src_w` image.
pub fn sample_params(
    stream: &mut RngStream,
    cfg: &AugmentConfig,
    src_h: usize,
    src_w: usize,
) -> AugmentationParams {
    let flip = cfg.flip && stream.bernoulli(cfg.flip_prob);
    let crop = sample_crop(stream, cfg, src_h, src_w);
    let out = cfg.out_size.unwrap_or((src_h, src_w));
    AugmentationParams {
        spatial: Some(Spatial {
            flip,
            crop,
            src: (src_h, src_w),
            out,
        }),
        noise: sample_noise(stream, cfg),
    }
}

/// Draws noise only, for vector inputs.
pub fn sample_vector_params(stream: &mut RngStream, cfg: &AugmentConfig) -> AugmentationParams {
    AugmentationParams {
        spatial: None,
        noise: sample_noise(stream, cfg),
    }
}

/// Samples parameters appropriate for the shape of `sample`.
pub fn sample_for(
    stream: &mut RngStream,
    cfg: &AugmentConfig,
    sample: &Tensor,
) -> AugmentationParams {
    match *sample.dims() {
        [_, h, w] => sample_params(stream, cfg, h, w),
        _ => sample_vector_params(stream, cfg),
    }
}

fn check_source(op: &'static str, sp: &Spatial, dims: &[usize]) -> Result<usize> {
    match *dims {
        [c, h, w] if (h, w) == sp.src => Ok(c),
        _ => Err(Error::invalid(format!(
            "{op}: params expect source {}x{}, got dims {dims:?}",
            sp.src.0, sp.src.1
        ))),
    }
}

/// Applies flip, crop-resize and noise.
pub fn apply(img: &Tensor, params: &AugmentationParams) -> Result<Tensor> {
    let mut out = match &params.spatial {
        Some(sp) => {
            check_source("augment::apply", sp, img.dims())?;
            let (rows, cols) = AugmentationParams::axes(sp)?;
            resample(img, &rows, &cols)?
        }
        None => {
            img.ensure_finite("augment::apply")?;
            img.clone()
        }
    };
    params.noise.add_to(&mut out);
    Ok(out)
}

/// Adjoint of the linear part of [`apply`]; `src_dims` is the shape of the original input.
pub fn apply_vjp(
    params: &AugmentationParams,
    upstream: &Tensor,
    src_dims: &[usize],
) -> Result<Tensor> {
    match &params.spatial {
        Some(sp) => {
            let c = check_source("augment::apply_vjp", sp, src_dims)?;
            upstream.ensure_dims("augment::apply_vjp", &[c, sp.out.0, sp.out.1])?;
            let (rows, cols) = AugmentationParams::axes(sp)?;
            resample_vjp(upstream, &rows, &cols)
        }
        None => {
            upstream.ensure_dims("augment::apply_vjp", src_dims)?;
            Ok(upstream.clone())
        }
    }
}

/// `k` independently augmented copies of every image, round-major:
/// `[img0 r0, img1 r0, ..., img0 r1, img1 r1, ...]`.
pub fn expand_batch(
    images: &[Tensor],
    cfg: &AugmentConfig,
    stream: &mut RngStream,
) -> Result<(Vec<Tensor>, Vec<AugmentationParams>)> {
    let k = cfg.rounds.max(1);
    let mut params = Vec::with_capacity(images.len() * k);
    for _ in 0..k {
        for img in images {
            params.push(sample_for(stream, cfg, img));
        }
    }
    let out = params
        .iter()
        .enumerate()
        .map(|(i, p)| apply(&images[i % images.len()], p))
        .collect::<Result<Vec<_>>>()?;
    Ok((out, params))
}

/// Labels matching the round-major order of [`expand_batch`].
pub fn expand_labels(labels: &[usize], rounds: usize) -> Vec<usize> {
    (0..rounds.max(1))
        .flat_map(|_| labels.iter().copied())
        .collect()
}

/// Sums per-copy adjoints back onto the `n` source images.
pub fn expand_batch_vjp(
    params: &[AugmentationParams],
    upstream: &[Tensor],
    sources: &[Tensor],
) -> Result<Vec<Tensor>> {
    if params.len() != upstream.len()
        || sources.is_empty()
        || !params.len().is_multiple_of(sources.len())
    {
        return Err(Error::invalid(format!(
            "expand_batch_vjp: {} params, {} gradients, {} sources",
            params.len(),
            upstream.len(),
            sources.len()
        )));
    }
    let mut grads: Vec<Tensor> = sources.iter().map(|s| Tensor::zeros(s.dims())).collect();
    for (i, (p, g)) in params.iter().zip(upstream).enumerate() {
        let j = i % sources.len();
        let back = apply_vjp(p, g, sources[j].dims())?;
        grads[j].axpy(1.0, &back);
    }
    Ok(grads)
}

impl fmt::Display for AugmentationParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(sp) = &self.spatial {
            write!(
                f,
                "flip={} crop={},{},{},{} src={}x{} out={}x{} ",
                sp.flip as u8,
                sp.crop.top,
                sp.crop.left,
                sp.crop.height,
                sp.crop.width,
                sp.src.0,
                sp.src.1,
                sp.out.0,
                sp.out.1
            )?;
        }
        write!(
            f,
            "noise={}:{}:{:e}",
            self.noise.seed, self.noise.stream_id, self.noise.sigma
        )
    }
}

impl FromStr for AugmentationParams {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("malformed augmentation params `{s}`"));
        let mut flip = None;
        let mut crop = None;
        let mut src = None;
        let mut out = None;
        let mut noise = None;
        let nums = |v: &str, sep: char| -> Result<Vec<u64>> {
            v.split(sep).map(|x| x.parse().map_err(|_| bad())).collect()
        };
        for tok in s.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(bad)?;
            match k {
                "flip" => flip = Some(v == "1"),
                "crop" => crop = Some(nums(v, ',')?),
                "src" => src = Some(nums(v, 'x')?),
                "out" => out = Some(nums(v, 'x')?),
                "noise" => {
                    let parts: Vec<&str> = v.split(':').collect();
                    if parts.len() != 3 {
                        return Err(bad());
                    }
                    noise = Some(NoiseDraw {
                        seed: parts[0].parse().map_err(|_| bad())?,
                        stream_id: parts[1].parse().map_err(|_| bad())?,
                        sigma: parts[2].parse().map_err(|_| bad())?,
                    });
                }
                _ => return Err(bad()),
            }
        }
        let noise = noise.ok_or_else(bad)?;
        let spatial = match (flip, crop, src, out) {
            (None, None, None, None) => None,
            (Some(flip), Some(c), Some(sv), Some(o))
                if c.len() == 4 && sv.len() == 2 && o.len() == 2 =>
            {
                Some(Spatial {
                    flip,
                    crop: CropBox {
                        top: c[0] as usize,
                        left: c[1] as usize,
                        height: c[2] as usize,
                        width: c[3] as usize,
                    },
                    src: (sv[0] as usize, sv[1] as usize),
                    out: (o[0] as usize, o[1] as usize),
                })
            }
            _ => return Err(bad()),
        };
        Ok(AugmentationParams { spatial, noise })
    }
}
