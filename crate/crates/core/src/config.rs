//! Flat `key=value` run configuration shared by every command.
//!
//! Blank lines and `#` comments are ignored. Unknown keys are errors. Any key can be
//! overridden from the environment as `LGM_<KEY>` (upper case), e.g. `LGM_ITERATIONS=100`.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::augment::AugmentConfig;
use crate::encoder::{Activation, EncoderSpec};
use crate::error::{Error, Result};
use crate::eval::{ProbeConfig, StopPolicy};
use crate::lgm::{DistillConfig, HeadInit};

pub const ENV_PREFIX: &str = "LGM_";

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    // distillation
    pub iterations: usize,
    pub level_period: usize,
    pub rounds: usize,
    pub meta_lr: f64,
    pub head_init: HeadInit,
    pub include_bias: bool,
    pub pyramid: bool,
    pub decorrelate: bool,
    pub augment: bool,
    pub flip: bool,
    pub crop: bool,
    pub noise: bool,
    pub noise_std: f64,
    pub resolution: usize,
    pub vector_init_scale: f64,
    pub sigmoid_scale: f64,
    pub failure_budget: usize,
    pub checkpoint_every: usize,
    // encoder
    pub encoder: String,
    pub encoder_seed: u64,
    pub encoder_path: Option<PathBuf>,
    pub image_size: usize,
    pub feature_dim: usize,
    pub hidden: usize,
    pub channels1: usize,
    pub channels2: usize,
    pub activation: Activation,
    // evaluation
    pub probe_epochs: usize,
    pub probe_batch_size: usize,
    pub probe_lr: f64,
    pub probe_cosine: bool,
    pub probe_patience: usize,
    pub probe_policy: StopPolicy,
    pub probe_augment: bool,
    pub val_fraction: f64,
    pub eval_seeds: usize,
    pub random_seeds: usize,
    pub align_k: usize,
    // data
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let d = DistillConfig::default();
        let p = ProbeConfig::default();
        let a = AugmentConfig::default();
        RunConfig {
            seed: 0,
            iterations: d.iterations,
            level_period: d.level_period,
            rounds: a.rounds,
            meta_lr: d.meta_lr,
            head_init: d.head_init,
            include_bias: d.include_bias,
            pyramid: d.pyramid,
            decorrelate: d.decorrelate,
            augment: d.augment,
            flip: a.flip,
            crop: a.crop,
            noise: a.noise,
            noise_std: a.noise_std,
            resolution: d.resolution,
            vector_init_scale: d.vector_init_scale,
            sigmoid_scale: d.sigmoid_scale,
            failure_budget: d.failure_budget,
            checkpoint_every: d.checkpoint_every,
            encoder: "conv_small".into(),
            encoder_seed: 0,
            encoder_path: None,
            image_size: 224,
            feature_dim: 16,
            hidden: 64,
            channels1: 8,
            channels2: 16,
            activation: Activation::Tanh,
            probe_epochs: p.epochs,
            probe_batch_size: p.batch_size,
            probe_lr: p.lr,
            probe_cosine: p.cosine,
            probe_patience: p.patience,
            probe_policy: p.policy,
            probe_augment: true,
            val_fraction: 0.1,
            eval_seeds: 3,
            random_seeds: 10,
            align_k: 10,
            train: None,
            test: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("cannot parse `{v}` for `{key}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!(
            "`{key}` expects true/false, got `{v}`"
        ))),
    }
}

fn opt_path(v: &str) -> Option<PathBuf> {
    (!v.is_empty()).then(|| PathBuf::from(v))
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_default()
}

impl RunConfig {
    /// Every key with its current value, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("seed", self.seed.to_string()),
            ("iterations", self.iterations.to_string()),
            ("level_period", self.level_period.to_string()),
            ("rounds", self.rounds.to_string()),
            ("meta_lr", self.meta_lr.to_string()),
            ("head_init", self.head_init.to_string()),
            ("include_bias", self.include_bias.to_string()),
            ("pyramid", self.pyramid.to_string()),
            ("decorrelate", self.decorrelate.to_string()),
            ("augment", self.augment.to_string()),
            ("flip", self.flip.to_string()),
            ("crop", self.crop.to_string()),
            ("noise", self.noise.to_string()),
            ("noise_std", self.noise_std.to_string()),
            ("resolution", self.resolution.to_string()),
            ("vector_init_scale", self.vector_init_scale.to_string()),
            ("sigmoid_scale", self.sigmoid_scale.to_string()),
            ("failure_budget", self.failure_budget.to_string()),
            ("checkpoint_every", self.checkpoint_every.to_string()),
            ("encoder", self.encoder.clone()),
            ("encoder_seed", self.encoder_seed.to_string()),
            ("encoder_path", show_path(&self.encoder_path)),
            ("image_size", self.image_size.to_string()),
            ("feature_dim", self.feature_dim.to_string()),
            ("hidden", self.hidden.to_string()),
            ("channels1", self.channels1.to_string()),
            ("channels2", self.channels2.to_string()),
            ("activation", self.activation.to_string()),
            ("probe_epochs", self.probe_epochs.to_string()),
            ("probe_batch_size", self.probe_batch_size.to_string()),
            ("probe_lr", self.probe_lr.to_string()),
            ("probe_cosine", self.probe_cosine.to_string()),
            ("probe_patience", self.probe_patience.to_string()),
            ("probe_policy", self.probe_policy.to_string()),
            ("probe_augment", self.probe_augment.to_string()),
            ("val_fraction", self.val_fraction.to_string()),
            ("eval_seeds", self.eval_seeds.to_string()),
            ("random_seeds", self.random_seeds.to_string()),
            ("align_k", self.align_k.to_string()),
            ("train", show_path(&self.train)),
            ("test", show_path(&self.test)),
        ]
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let v = v.trim();
        match key {
            "seed" => self.seed = parse(key, v)?,
            "iterations" => self.iterations = parse(key, v)?,
            "level_period" => self.level_period = parse(key, v)?,
            "rounds" => self.rounds = parse(key, v)?,
            "meta_lr" => self.meta_lr = parse(key, v)?,
            "head_init" => {
                self.head_init = v.parse().map_err(|e: Error| Error::Config(e.to_string()))?
            }
            "include_bias" => self.include_bias = parse_bool(key, v)?,
            "pyramid" => self.pyramid = parse_bool(key, v)?,
            "decorrelate" => self.decorrelate = parse_bool(key, v)?,
            "augment" => self.augment = parse_bool(key, v)?,
            "flip" => self.flip = parse_bool(key, v)?,
            "crop" => self.crop = parse_bool(key, v)?,
            "noise" => self.noise = parse_bool(key, v)?,
            "noise_std" => self.noise_std = parse(key, v)?,
            "resolution" => self.resolution = parse(key, v)?,
            "vector_init_scale" => self.vector_init_scale = parse(key, v)?,
            "sigmoid_scale" => self.sigmoid_scale = parse(key, v)?,
            "failure_budget" => self.failure_budget = parse(key, v)?,
            "checkpoint_every" => self.checkpoint_every = parse(key, v)?,
            "encoder" => self.encoder = v.to_string(),
            "encoder_seed" => self.encoder_seed = parse(key, v)?,
            "encoder_path" => self.encoder_path = opt_path(v),
            "image_size" => self.image_size = parse(key, v)?,
            "feature_dim" => self.feature_dim = parse(key, v)?,
            "hidden" => self.hidden = parse(key, v)?,
            "channels1" => self.channels1 = parse(key, v)?,
            "channels2" => self.channels2 = parse(key, v)?,
            "activation" => {
                self.activation = v.parse().map_err(|e: Error| Error::Config(e.to_string()))?
            }
            "probe_epochs" => self.probe_epochs = parse(key, v)?,
            "probe_batch_size" => self.probe_batch_size = parse(key, v)?,
            "probe_lr" => self.probe_lr = parse(key, v)?,
            "probe_cosine" => self.probe_cosine = parse_bool(key, v)?,
            "probe_patience" => self.probe_patience = parse(key, v)?,
            "probe_policy" => {
                self.probe_policy = v.parse().map_err(|e: Error| Error::Config(e.to_string()))?
            }
            "probe_augment" => self.probe_augment = parse_bool(key, v)?,
            "val_fraction" => self.val_fraction = parse(key, v)?,
            "eval_seeds" => self.eval_seeds = parse(key, v)?,
            "random_seeds" => self.random_seeds = parse(key, v)?,
            "align_k" => self.align_k = parse(key, v)?,
            "train" => self.train = opt_path(v),
            "test" => self.test = opt_path(v),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key=value, got `{line}`", n + 1))
            })?;
            cfg.set(k.trim(), v)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_text(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Applies `LGM_<KEY>` overrides from `vars`.
    pub fn apply_overrides<I, K, V>(&mut self, vars: I) -> Result<()>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let keys: Vec<&str> = self.entries().iter().map(|(k, _)| *k).collect();
        for (name, value) in vars {
            let Some(rest) = name.as_ref().strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let key = rest.to_ascii_lowercase();
            if keys.contains(&key.as_str()) {
                self.set(&key, value.as_ref())
                    .map_err(|e| Error::Config(format!("{}: {e}", name.as_ref())))?;
            }
        }
        Ok(())
    }

    pub fn apply_env(&mut self) -> Result<()> {
        self.apply_overrides(std::env::vars())
    }

    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    /// Writes the resolved configuration as `config.txt` in `dir`.
    pub fn write_resolved(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let p = dir.join("config.txt");
        fs::write(&p, self.to_text()).map_err(|e| Error::io(&p, e))
    }

    pub fn augment_config(&self) -> AugmentConfig {
        AugmentConfig {
            flip: self.flip,
            crop: self.crop,
            noise: self.noise,
            noise_std: self.noise_std,
            rounds: self.rounds.max(1),
            ..AugmentConfig::default()
        }
    }

    /// `rounds = 0` is accepted as a synonym for `augment=false`.
    pub fn distill_config(&self) -> Result<DistillConfig> {
        let cfg = DistillConfig {
            iterations: self.iterations,
            level_period: self.level_period,
            meta_lr: self.meta_lr,
            head_init: self.head_init,
            include_bias: self.include_bias,
            pyramid: self.pyramid,
            decorrelate: self.decorrelate,
            augment: self.augment && self.rounds > 0,
            augment_cfg: self.augment_config(),
            resolution: self.resolution,
            vector_init_scale: self.vector_init_scale,
            sigmoid_scale: self.sigmoid_scale,
            seed: self.seed,
            failure_budget: self.failure_budget,
            checkpoint_every: self.checkpoint_every,
        };
        cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn probe_config(&self) -> Result<ProbeConfig> {
        let cfg = ProbeConfig {
            epochs: self.probe_epochs,
            batch_size: self.probe_batch_size,
            lr: self.probe_lr,
            cosine: self.probe_cosine,
            patience: self.probe_patience,
            policy: self.probe_policy,
        };
        cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Built-in encoder for samples of shape `input`. Image encoders see `image_size` inputs.
    pub fn encoder_spec(&self, input: &[usize]) -> Result<EncoderSpec> {
        let image_input = || -> Result<[usize; 3]> {
            match *input {
                [c, _, _] => Ok([c, self.image_size, self.image_size]),
                _ => Err(Error::Config(format!(
                    "encoder `{}` needs image data, got dims {input:?}",
                    self.encoder
                ))),
            }
        };
        let input_dims = || -> Vec<usize> {
            match *input {
                [c, _, _] => vec![c, self.image_size, self.image_size],
                _ => input.to_vec(),
            }
        };
        Ok(match self.encoder.as_str() {
            "identity" => EncoderSpec::Identity {
                dim: input_dims().iter().product(),
            },
            "random_projection" => EncoderSpec::RandomProjection {
                input: input_dims(),
                feature_dim: self.feature_dim,
            },
            "mlp" => EncoderSpec::Mlp {
                input: input_dims(),
                hidden: self.hidden,
                feature_dim: self.feature_dim,
                activation: self.activation,
            },
            "conv_small" => EncoderSpec::ConvSmall {
                input: image_input()?,
                channels: (self.channels1, self.channels2),
                feature_dim: self.feature_dim,
                activation: self.activation,
            },
            other => return Err(Error::Config(format!("unknown encoder `{other}`"))),
        })
    }
}
