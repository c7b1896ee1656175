use std::path::{Path, PathBuf};

use lgm_core::augment::AugmentConfig;
use lgm_core::config::RunConfig;
use lgm_core::data::{eval_preprocess, LabeledSet};
use lgm_core::encoder::{embed_dataset, load_encoder, BuiltinEncoder, EmbeddingTable, Encoder};
use lgm_core::numcore::{bilinear_resize, RngStream, Tensor};

use crate::{CliError, Common, Result};

pub const STREAM_DATA: u64 = 0;
pub const STREAM_SPLIT: u64 = 7;
pub const STREAM_ENCODER: u64 = 10;
pub const STREAM_PROBE: u64 = 500;
pub const STREAM_RANDOM: u64 = 600;

const EMBED_BATCH: usize = 256;

/// Config file, then `LGM_*` environment, then `--set`, then `--seed`.
pub fn resolve_config(c: &Common) -> Result<RunConfig> {
    resolve_config_over(c, &[])
}

/// Like [`resolve_config`], with `base` applied on top of the built-in defaults when no
/// `--config` file is given.
pub fn resolve_config_over(c: &Common, base: &[(&str, String)]) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => {
            let mut cfg = RunConfig::default();
            for (k, v) in base {
                cfg.set(k, v)?;
            }
            cfg
        }
    };
    cfg.apply_env()?;
    for kv in &c.sets {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v)?;
    }
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

pub fn out_dir(c: &Common) -> Result<&Path> {
    c.out
        .as_deref()
        .ok_or_else(|| CliError::Usage("--out DIR is required for this command".into()))
}

/// Flag value if given, else the config path `key`.
pub fn pick_path(flag: Option<PathBuf>, from_cfg: &Option<PathBuf>, key: &str) -> Result<PathBuf> {
    flag.or_else(|| from_cfg.clone()).ok_or_else(|| {
        CliError::Usage(format!(
            "no {key} dataset: pass --{key} or set `{key}=` in the config"
        ))
    })
}

/// Loads `path` and splits off the validation part with the run seed. Both `distill` and
/// `eval-probe` call this, so the distilled set never sees validation samples.
pub fn load_train(cfg: &RunConfig, path: &Path) -> Result<(LabeledSet, Option<LabeledSet>)> {
    let all = LabeledSet::load(path)?;
    if cfg.val_fraction <= 0.0 {
        return Ok((all, None));
    }
    let (train, val) = all.split(
        cfg.val_fraction,
        &mut RngStream::new(cfg.seed, STREAM_SPLIT),
    );
    Ok((train, (!val.is_empty()).then_some(val)))
}

/// The configured encoder for samples shaped like `dims`: loaded from `encoder_path` when
/// set, otherwise drawn from `encoder_seed`.
pub fn build_encoder(cfg: &RunConfig, dims: &[usize]) -> Result<BuiltinEncoder> {
    let enc = match &cfg.encoder_path {
        Some(p) => load_encoder(p)?,
        None => BuiltinEncoder::build(
            &cfg.encoder_spec(dims)?,
            &mut RngStream::new(cfg.encoder_seed, STREAM_ENCODER),
        )?,
    };
    let want: usize = enc.input_dims().iter().product();
    let got: usize = match *dims {
        [c, _, _] => c * cfg.image_size * cfg.image_size,
        _ => dims.iter().product(),
    };
    if want != got {
        return Err(CliError::Usage(format!(
            "encoder expects input {:?} but the data gives {dims:?} (image_size={})",
            enc.input_dims(),
            cfg.image_size
        )));
    }
    Ok(enc)
}

/// Test-time view of a dataset: images go through resize + center crop to `image_size`.
pub fn eval_view(cfg: &RunConfig, set: &LabeledSet) -> Result<LabeledSet> {
    if !set.is_image() {
        return Ok(set.clone());
    }
    let samples = set
        .samples
        .iter()
        .map(|x| eval_preprocess(x, cfg.image_size))
        .collect::<lgm_core::Result<Vec<_>>>()?;
    Ok(LabeledSet::with_names(
        samples,
        set.labels.clone(),
        set.class_names.clone(),
    )?)
}

/// Synthetic images are resized (not cropped) to the encoder input.
pub fn synthetic_view(cfg: &RunConfig, set: &LabeledSet) -> Result<LabeledSet> {
    if !set.is_image() {
        return Ok(set.clone());
    }
    let s = cfg.image_size;
    let samples = set
        .samples
        .iter()
        .map(|x| {
            if x.dims()[1..] == [s, s] {
                Ok(x.clone())
            } else {
                bilinear_resize(x, s, s)
            }
        })
        .collect::<lgm_core::Result<Vec<Tensor>>>()?;
    Ok(LabeledSet::new(samples, set.labels.clone())?)
}

pub fn embed(enc: &dyn Encoder, set: &LabeledSet) -> Result<EmbeddingTable> {
    let mut t = embed_dataset(enc, &set.samples, &set.labels, EMBED_BATCH)?;
    t.class_names = Some(set.class_names.clone());
    Ok(t)
}

/// Probe-time augmentation, or `None` when disabled.
pub fn probe_augment(cfg: &RunConfig, image: bool) -> Option<AugmentConfig> {
    if !cfg.probe_augment || !cfg.augment {
        return None;
    }
    let mut a = cfg.augment_config();
    a.rounds = 1;
    if image {
        a.out_size = Some((cfg.image_size, cfg.image_size));
    }
    Some(a)
}

/// `dir` itself if it holds a synthetic set, else `dir/final`.
pub fn distilled_dir(dir: &Path) -> PathBuf {
    let fin = dir.join("final");
    if fin.is_dir() {
        fin
    } else {
        dir.to_path_buf()
    }
}
