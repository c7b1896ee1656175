//! Linear probe training on frozen features.

use std::fmt;
use std::str::FromStr;

use crate::augment::{apply, sample_for, AugmentConfig};
use crate::data::LabeledSet;
use crate::encoder::{EmbeddingTable, Encoder};
use crate::error::{Error, Result};
use crate::lgm::{class_loss_and_grad, sample_head, HeadInit, LinearHead};
use crate::numcore::{cosine_decay, AdamConfig, AdamState, RngStream, Tensor};

/// Which split drives early stopping.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopPolicy {
    /// A held-out validation table.
    Validation,
    /// The test table itself. Leaks test labels into model selection.
    Test,
    /// Train for all epochs; report the final head.
    None,
}

impl fmt::Display for StopPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopPolicy::Validation => "validation",
            StopPolicy::Test => "test",
            StopPolicy::None => "none",
        })
    }
}

impl FromStr for StopPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "validation" => Ok(StopPolicy::Validation),
            "test" => Ok(StopPolicy::Test),
            "none" => Ok(StopPolicy::None),
            _ => Err(Error::invalid(format!("unknown stop policy `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub cosine: bool,
    pub patience: usize,
    pub policy: StopPolicy,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            epochs: 1000,
            batch_size: 100,
            lr: 0.001 / 256.0,
            cosine: true,
            patience: 50,
            policy: StopPolicy::Validation,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("probe batch size must be >= 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid(format!("probe lr {} must be > 0", self.lr)));
        }
        if self.patience == 0
            || (self.epochs > 0 && self.patience >= self.epochs && self.policy != StopPolicy::None)
        {
            return Err(Error::invalid(format!(
                "probe patience {} must be in 1..epochs ({})",
                self.patience, self.epochs
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeResult {
    pub head: LinearHead,
    /// Test accuracy of the selected head.
    pub accuracy: f64,
    /// Epochs completed when the selected head was recorded (0 = untrained).
    pub best_epoch: usize,
    pub epochs_run: usize,
}

/// Trains a fresh linear head on `encoder(train)` and scores it on `test`.
///
/// Each epoch redraws one augmentation per training sample when `augment` is given. With
/// [`StopPolicy::Validation`] the `validation` table is required.
pub fn train_probe(
    train: &LabeledSet,
    encoder: &dyn Encoder,
    augment: Option<&AugmentConfig>,
    validation: Option<&EmbeddingTable>,
    test: &EmbeddingTable,
    cfg: &ProbeConfig,
    stream: &RngStream,
) -> Result<ProbeResult> {
    cfg.validate()?;
    let classes = test.num_classes().max(train.num_classes());
    let f = encoder.feature_dim();
    if test.dim() != f {
        return Err(Error::invalid(format!(
            "test features have dim {}, encoder gives {f}",
            test.dim()
        )));
    }
    let monitor = match cfg.policy {
        StopPolicy::Validation => Some(
            validation
                .ok_or_else(|| Error::invalid("validation stop policy needs a validation table"))?,
        ),
        StopPolicy::Test => Some(test),
        StopPolicy::None => None,
    };
    let mut head = sample_head(&mut stream.derive(1), classes, f, HeadInit::FanIn);
    let score = |h: &LinearHead, t: &EmbeddingTable| h.accuracy(&t.features, &t.labels);

    let n = train.len();
    let batches_per_epoch = n.div_ceil(cfg.batch_size);
    let total_steps = cfg.epochs * batches_per_epoch;
    let adam = AdamConfig::with_lr(cfg.lr);
    let mut sw = AdamState::new(head.w.dims(), adam);
    let mut sb = AdamState::new(head.b.dims(), adam);
    let fixed = if augment.is_none() {
        Some(encoder.encode(&train.samples)?)
    } else {
        None
    };

    let mut best = (
        monitor.map(|m| score(&head, m)).transpose()?.unwrap_or(0.0),
        0,
        head.clone(),
    );
    let mut epochs_run = 0;
    let mut step = 0;
    let mut aug_stream = stream.derive(2);
    let mut order_stream = stream.derive(3);
    for epoch in 1..=cfg.epochs {
        let z = match (&fixed, augment) {
            (Some(z), _) => z.clone(),
            (None, Some(a)) => {
                let a = AugmentConfig {
                    rounds: 1,
                    ..a.clone()
                };
                let xs = train
                    .samples
                    .iter()
                    .map(|x| apply(x, &sample_for(&mut aug_stream, &a, x)))
                    .collect::<Result<Vec<_>>>()?;
                encoder.encode(&xs)?
            }
            (None, None) => unreachable!(),
        };
        let order = order_stream.shuffle(n);
        for chunk in order.chunks(cfg.batch_size) {
            let rows: Vec<Tensor> = chunk
                .iter()
                .map(|&i| Tensor::new(vec![f], z.row(i).to_vec()))
                .collect::<Result<_>>()?;
            let labels: Vec<usize> = chunk.iter().map(|&i| train.labels[i]).collect();
            let (_, g) = class_loss_and_grad(&head, &Tensor::stack(&rows)?, &labels)?;
            let lr = if cfg.cosine {
                cosine_decay(cfg.lr, step, total_steps)
            } else {
                cfg.lr
            };
            sw.step_with_lr(&mut head.w, &g.gw, lr)?;
            sb.step_with_lr(&mut head.b, &g.gb, lr)?;
            step += 1;
        }
        epochs_run = epoch;
        if let Some(m) = monitor {
            let acc = score(&head, m)?;
            // ties refresh the selection: on a plateau the later, longer-trained head wins
            if acc >= best.0 {
                best = (acc, epoch, head.clone());
            } else if epoch - best.1 >= cfg.patience {
                break;
            }
        }
    }
    let (best_epoch, chosen) = match monitor {
        Some(_) => (best.1, best.2),
        None => (epochs_run, head),
    };
    Ok(ProbeResult {
        accuracy: score(&chosen, test)?,
        head: chosen,
        best_epoch,
        epochs_run,
    })
}
