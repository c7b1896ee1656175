//! The distillation loop: one synthetic sample per class, optimized so that the gradient a
//! random linear head receives on the synthetic batch points the same way as on a real batch.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::head::{sample_head, HeadInit, LinearHead};
use super::matching::{class_loss_and_grad, meta_grad_features, meta_loss, GradientPair};
use crate::augment::{
    apply, expand_batch, expand_batch_vjp, expand_labels, sample_for, AugmentConfig,
};
use crate::data::{LabeledSet, RealBatchProvider};
use crate::encoder::Encoder;
use crate::error::{Error, Result};
use crate::imgparam::{
    color_matrix_from_dataset, export_ppm, read_ppm, save_pyramids, ColorTransform, PyramidImage,
    Renderer,
};
use crate::numcore::{ndt, AdamConfig, AdamState, RngStream, Tensor};

const STREAM_INIT: u64 = 0x1;
const STREAM_STEP: u64 = 0x2;

const TAG_HEAD: u64 = 1;
const TAG_SYN_AUG: u64 = 2;
const TAG_REAL_IDX: u64 = 3;
const TAG_REAL_AUG: u64 = 4;

/// Head redraws allowed within one step before it counts as skipped.
const HEAD_RETRIES: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct DistillConfig {
    pub iterations: usize,
    /// A new pyramid level is activated every this many iterations.
    pub level_period: usize,
    pub meta_lr: f64,
    pub head_init: HeadInit,
    pub include_bias: bool,
    /// Multi-resolution parameterization; when off a single full-resolution level is used.
    pub pyramid: bool,
    pub decorrelate: bool,
    /// Master switch for augmentation on both synthetic and real batches.
    pub augment: bool,
    /// Augmentation settings; `rounds` is the number of copies per synthetic image.
    pub augment_cfg: AugmentConfig,
    /// Side of the synthetic images.
    pub resolution: usize,
    /// Standard deviation of the Gaussian init of vector-mode samples.
    pub vector_init_scale: f64,
    pub sigmoid_scale: f64,
    pub seed: u64,
    /// Skipped steps tolerated before the run aborts.
    pub failure_budget: usize,
    /// Save a checkpoint every this many iterations (0 disables).
    pub checkpoint_every: usize,
}

impl Default for DistillConfig {
    fn default() -> Self {
        DistillConfig {
            iterations: 5000,
            level_period: 200,
            meta_lr: 0.002,
            head_init: HeadInit::FanIn,
            include_bias: true,
            pyramid: true,
            decorrelate: true,
            augment: true,
            augment_cfg: AugmentConfig::default(),
            resolution: 256,
            vector_init_scale: 0.1,
            sigmoid_scale: 1.0,
            seed: 0,
            failure_budget: 50,
            checkpoint_every: 0,
        }
    }
}

impl DistillConfig {
    pub fn validate(&self) -> Result<()> {
        if self.level_period == 0 {
            return Err(Error::invalid("level_period must be >= 1"));
        }
        if !(self.meta_lr > 0.0 && self.meta_lr.is_finite()) {
            return Err(Error::invalid(format!(
                "meta_lr {} must be > 0",
                self.meta_lr
            )));
        }
        if !(self.vector_init_scale > 0.0 && self.vector_init_scale.is_finite()) {
            return Err(Error::invalid("vector_init_scale must be > 0"));
        }
        if !(self.sigmoid_scale > 0.0 && self.sigmoid_scale.is_finite()) {
            return Err(Error::invalid("sigmoid_scale must be > 0"));
        }
        self.augment_cfg.validate()
    }

    /// Copies per synthetic image actually used in a step.
    pub fn rounds(&self) -> usize {
        if self.augment {
            self.augment_cfg.rounds
        } else {
            1
        }
    }

    fn effective_augment(&self, out: Option<(usize, usize)>, rounds: usize) -> AugmentConfig {
        let base = if self.augment {
            self.augment_cfg.clone()
        } else {
            AugmentConfig::disabled()
        };
        AugmentConfig {
            rounds,
            out_size: out,
            ..base
        }
    }
}

/// The learned synthetic samples.
#[derive(Clone, Debug, PartialEq)]
pub enum SyntheticSet {
    Images {
        pyramids: Vec<PyramidImage>,
        renderer: Renderer,
    },
    Vectors {
        points: Vec<Tensor>,
    },
}

impl SyntheticSet {
    pub fn len(&self) -> usize {
        match self {
            SyntheticSet::Images { pyramids, .. } => pyramids.len(),
            SyntheticSet::Vectors { points } => points.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rendered images (or the raw vectors), one per class.
    pub fn samples(&self) -> Result<Vec<Tensor>> {
        match self {
            SyntheticSet::Images { pyramids, renderer } => {
                pyramids.iter().map(|p| renderer.render(p)).collect()
            }
            SyntheticSet::Vectors { points } => Ok(points.clone()),
        }
    }

    pub fn active_levels(&self) -> usize {
        match self {
            SyntheticSet::Images { pyramids, .. } => {
                pyramids.first().map_or(0, |p| p.active_count())
            }
            SyntheticSet::Vectors { .. } => 1,
        }
    }

    /// Trainable parameters of class `c`: the active pyramid levels, or the vector itself.
    pub fn params_mut(&mut self, c: usize) -> Vec<&mut Tensor> {
        match self {
            SyntheticSet::Images { pyramids, .. } => {
                pyramids[c].active_levels_mut().iter_mut().collect()
            }
            SyntheticSet::Vectors { points } => vec![&mut points[c]],
        }
    }
}

/// Per-step diagnostics. Skipped steps carry NaN losses and norms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepMetrics {
    pub iteration: usize,
    pub meta_loss: f64,
    pub ell_real: f64,
    pub ell_syn: f64,
    pub grad_norm_syn: f64,
    pub grad_norm_real: f64,
    pub active_levels: usize,
    pub skipped: bool,
}

impl StepMetrics {
    pub const CSV_HEADER: &'static str =
        "iteration,meta_loss,ell_real,ell_syn,grad_norm_syn,grad_norm_real,active_levels";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.iteration,
            self.meta_loss,
            self.ell_real,
            self.ell_syn,
            self.grad_norm_syn,
            self.grad_norm_real,
            self.active_levels
        )
    }
}

/// Gradients for every class and active level plus the step's metrics, before any update.
#[derive(Clone, Debug)]
pub struct StepGradients {
    pub grads: Vec<Vec<Tensor>>,
    pub metrics: StepMetrics,
}

#[derive(Clone, Debug)]
pub struct DistillState {
    pub config: DistillConfig,
    pub synthetic: SyntheticSet,
    /// Adam state per class and level.
    pub optim: Vec<Vec<AdamState>>,
    /// Iterations completed.
    pub iteration: usize,
    pub skipped: usize,
}

impl DistillState {
    /// Builds the initial synthetic set for `data`: pyramids for image data, vectors otherwise.
    pub fn init(config: DistillConfig, data: &LabeledSet) -> Result<Self> {
        config.validate()?;
        let classes = data.num_classes();
        let mut stream = RngStream::new(config.seed, STREAM_INIT);
        let synthetic = if data.is_image() {
            let color = if config.decorrelate {
                color_matrix_from_dataset(&data.samples)?
            } else {
                ColorTransform::identity()
            };
            let pyramids = (0..classes)
                .map(|_| {
                    if config.pyramid {
                        PyramidImage::init(&mut stream, config.resolution)
                    } else {
                        PyramidImage::flat(&mut stream, config.resolution)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            SyntheticSet::Images {
                pyramids,
                renderer: Renderer {
                    color,
                    sigmoid_scale: config.sigmoid_scale,
                },
            }
        } else {
            let dims = data.sample_dims().to_vec();
            SyntheticSet::Vectors {
                points: (0..classes)
                    .map(|_| Tensor::from_fn(&dims, |_| config.vector_init_scale * stream.normal()))
                    .collect(),
            }
        };
        Self::from_synthetic(config, synthetic)
    }

    pub fn from_synthetic(config: DistillConfig, synthetic: SyntheticSet) -> Result<Self> {
        config.validate()?;
        let adam = AdamConfig::with_lr(config.meta_lr);
        let optim = match &synthetic {
            SyntheticSet::Images { pyramids, .. } => pyramids
                .iter()
                .map(|p| {
                    p.levels()
                        .iter()
                        .map(|l| AdamState::new(l.dims(), adam))
                        .collect()
                })
                .collect(),
            SyntheticSet::Vectors { points } => points
                .iter()
                .map(|v| vec![AdamState::new(v.dims(), adam)])
                .collect(),
        };
        Ok(DistillState {
            config,
            synthetic,
            optim,
            iteration: 0,
            skipped: 0,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.synthetic.len()
    }

    /// The per-step random stream for iteration `it`.
    pub fn step_stream(&self, it: usize) -> RngStream {
        RngStream::new(self.config.seed, STREAM_STEP).derive(it as u64)
    }

    pub fn activate_next_level(&mut self) -> bool {
        match &mut self.synthetic {
            SyntheticSet::Images { pyramids, .. } => {
                let mut any = false;
                for p in pyramids {
                    any |= p.activate_next_level();
                }
                any
            }
            SyntheticSet::Vectors { .. } => false,
        }
    }

    /// Labels of the synthetic set: class `c` for sample `c`.
    pub fn labels(&self) -> Vec<usize> {
        (0..self.num_classes()).collect()
    }

    /// Meta-loss at the current parameters for the batches and head that `stream` draws.
    /// Reusing one stream freezes all step randomness, which makes finite differences of
    /// this function comparable with [`compute_step`](Self::compute_step).
    pub fn meta_loss_at(
        &self,
        enc: &dyn Encoder,
        data: &dyn RealBatchProvider,
        stream: &RngStream,
    ) -> Result<f64> {
        let b = self.batches(enc, data, stream)?;
        let d = self.draw_head(enc, &b, stream)?;
        meta_loss(&d.g_syn, &d.g_real)
    }

    /// Redraws the head until both gradients are nonzero.
    fn draw_head(&self, enc: &dyn Encoder, b: &Batches, stream: &RngStream) -> Result<HeadDraw> {
        let c = self.num_classes();
        let f = enc.feature_dim();
        let mut head_stream = stream.derive(TAG_HEAD);
        for _ in 0..=HEAD_RETRIES {
            let head = sample_head(&mut head_stream, c, f, self.config.head_init);
            let (ell_syn, gs) = class_loss_and_grad(&head, &b.z_syn, &b.syn_labels)?;
            let (ell_real, gr) = class_loss_and_grad(&head, &b.z_real, &b.real_labels)?;
            let (g_syn, g_real) = if self.config.include_bias {
                (gs, gr)
            } else {
                (gs.without_bias(), gr.without_bias())
            };
            if g_syn.norm() > 0.0 && g_real.norm() > 0.0 {
                return Ok(HeadDraw {
                    head,
                    ell_syn,
                    ell_real,
                    g_syn,
                    g_real,
                });
            }
        }
        Err(Error::DegenerateGradient)
    }

    /// Computes gradients for every class and active level without changing any state.
    pub fn compute_step(
        &self,
        enc: &dyn Encoder,
        data: &dyn RealBatchProvider,
        stream: &RngStream,
    ) -> Result<StepGradients> {
        let b = self.batches(enc, data, stream)?;
        let HeadDraw {
            head,
            ell_syn,
            ell_real,
            g_syn: gs,
            g_real: gr,
        } = self.draw_head(enc, &b, stream)?;
        let loss = meta_loss(&gs, &gr)?;
        let dz = meta_grad_features(&head, &b.z_syn, &b.syn_labels, &gs, &gr)?;
        let dx = enc.vjp(&Tensor::stack(&b.syn_batch)?, &dz)?;
        let dsamples = expand_batch_vjp(&b.syn_params, &dx.unstack(), &b.rendered)?;
        let grads = match &self.synthetic {
            SyntheticSet::Images { pyramids, renderer } => pyramids
                .iter()
                .zip(&dsamples)
                .map(|(p, g)| {
                    let mut levels = renderer.render_vjp(p, g)?;
                    levels.truncate(p.active_count());
                    Ok(levels)
                })
                .collect::<Result<Vec<_>>>()?,
            SyntheticSet::Vectors { .. } => dsamples.into_iter().map(|g| vec![g]).collect(),
        };
        Ok(StepGradients {
            grads,
            metrics: StepMetrics {
                iteration: self.iteration,
                meta_loss: loss,
                ell_real,
                ell_syn,
                grad_norm_syn: gs.norm(),
                grad_norm_real: gr.norm(),
                active_levels: self.synthetic.active_levels(),
                skipped: false,
            },
        })
    }

    /// Adam update of every active level.
    pub fn apply(&mut self, grads: &[Vec<Tensor>]) -> Result<()> {
        if grads.len() != self.num_classes() {
            return Err(Error::invalid("one gradient list per class expected"));
        }
        for (c, class_grads) in grads.iter().enumerate() {
            let params = self.synthetic.params_mut(c);
            for ((param, g), state) in params.into_iter().zip(class_grads).zip(&mut self.optim[c]) {
                state.step(param, g)?;
            }
        }
        Ok(())
    }

    /// One full step at the current iteration. Degenerate steps are skipped and counted;
    /// exceeding the failure budget is an error.
    pub fn step(
        &mut self,
        enc: &dyn Encoder,
        data: &dyn RealBatchProvider,
        stream: &RngStream,
    ) -> Result<StepMetrics> {
        let metrics = match self.compute_step(enc, data, stream) {
            Ok(out) => {
                self.apply(&out.grads)?;
                out.metrics
            }
            Err(Error::DegenerateGradient) => {
                self.skipped += 1;
                if self.skipped > self.config.failure_budget {
                    return Err(Error::DegenerateGradient);
                }
                StepMetrics {
                    iteration: self.iteration,
                    meta_loss: f64::NAN,
                    ell_real: f64::NAN,
                    ell_syn: f64::NAN,
                    grad_norm_syn: f64::NAN,
                    grad_norm_real: f64::NAN,
                    active_levels: self.synthetic.active_levels(),
                    skipped: true,
                }
            }
            Err(e) => return Err(e),
        };
        self.iteration += 1;
        Ok(metrics)
    }

    fn batches(
        &self,
        enc: &dyn Encoder,
        data: &dyn RealBatchProvider,
        stream: &RngStream,
    ) -> Result<Batches> {
        if data.num_classes() != self.num_classes() {
            return Err(Error::invalid(format!(
                "real data has {} classes, synthetic set has {}",
                data.num_classes(),
                self.num_classes()
            )));
        }
        let out = match *enc.input_dims() {
            [_, h, w] => Some((h, w)),
            _ => None,
        };
        let k = self.config.rounds();
        let rendered = self.synthetic.samples()?;
        let syn_cfg = self.config.effective_augment(out, k);
        let (syn_batch, syn_params) =
            expand_batch(&rendered, &syn_cfg, &mut stream.derive(TAG_SYN_AUG))?;
        let syn_labels = expand_labels(&self.labels(), k);

        let (real, real_labels) = data.draw(&mut stream.derive(TAG_REAL_IDX), syn_batch.len());
        let real_cfg = self.config.effective_augment(out, 1);
        let mut aug_stream = stream.derive(TAG_REAL_AUG);
        let real_batch = real
            .into_iter()
            .map(|x| apply(x, &sample_for(&mut aug_stream, &real_cfg, x)))
            .collect::<Result<Vec<_>>>()?;

        Ok(Batches {
            z_syn: enc.encode(&syn_batch)?,
            z_real: enc.encode(&real_batch)?,
            rendered,
            syn_batch,
            syn_params,
            syn_labels,
            real_labels,
        })
    }

    /// Writes the synthetic set under `dir`: pyramid levels plus one rendered PPM per class
    /// for images, `vectors.ndt` for vectors.
    pub fn save(&self, dir: &Path) -> Result<()> {
        match &self.synthetic {
            SyntheticSet::Images { pyramids, renderer } => {
                save_pyramids(dir, pyramids, self.iteration)?;
                for (c, p) in pyramids.iter().enumerate() {
                    export_ppm(&renderer.render(p)?, dir.join(format!("class_{c:03}.ppm")))?;
                }
                Ok(())
            }
            SyntheticSet::Vectors { points } => {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                ndt::write_f64(dir.join("vectors.ndt"), &Tensor::stack(points)?)
            }
        }
    }
}

/// Reads a synthetic set written by [`DistillState::save`]: `vectors.ndt` if present,
/// otherwise the `class_NNN.ppm` renders. Labels are the class ids `0..c`.
pub fn load_synthetic(dir: &Path) -> Result<LabeledSet> {
    let vectors = dir.join("vectors.ndt");
    let samples = if vectors.exists() {
        let t = ndt::read_f64(&vectors)?;
        if t.dims().len() != 2 {
            return Err(Error::format(
                &vectors,
                format!("expected a 2-d array, got dims {:?}", t.dims()),
            ));
        }
        (0..t.dims()[0])
            .map(|i| Tensor::new(vec![t.dims()[1]], t.row(i).to_vec()))
            .collect::<Result<Vec<_>>>()?
    } else {
        let mut out = Vec::new();
        while dir.join(format!("class_{:03}.ppm", out.len())).exists() {
            out.push(read_ppm(dir.join(format!("class_{:03}.ppm", out.len())))?);
        }
        out
    };
    if samples.is_empty() {
        return Err(Error::format(dir, "no vectors.ndt or class_000.ppm found"));
    }
    let n = samples.len();
    LabeledSet::new(samples, (0..n).collect())
}

struct HeadDraw {
    head: LinearHead,
    ell_syn: f64,
    ell_real: f64,
    g_syn: GradientPair,
    g_real: GradientPair,
}

struct Batches {
    rendered: Vec<Tensor>,
    syn_batch: Vec<Tensor>,
    syn_params: Vec<crate::augment::AugmentationParams>,
    syn_labels: Vec<usize>,
    real_labels: Vec<usize>,
    z_syn: Tensor,
    z_real: Tensor,
}

/// Functional form of [`DistillState::step`].
pub fn distill_step(
    mut state: DistillState,
    enc: &dyn Encoder,
    data: &dyn RealBatchProvider,
    stream: &RngStream,
) -> Result<(DistillState, StepMetrics)> {
    let m = state.step(enc, data, stream)?;
    Ok((state, m))
}

/// Runs the remaining iterations, activating a pyramid level every `level_period` steps.
/// `on_step` sees the state after each update.
pub fn distill(
    state: &mut DistillState,
    enc: &dyn Encoder,
    data: &dyn RealBatchProvider,
    mut on_step: impl FnMut(&DistillState, &StepMetrics) -> Result<()>,
) -> Result<()> {
    while state.iteration < state.config.iterations {
        let it = state.iteration;
        if it > 0 && it.is_multiple_of(state.config.level_period) {
            state.activate_next_level();
        }
        let stream = state.step_stream(it);
        let m = state.step(enc, data, &stream)?;
        on_step(state, &m)?;
    }
    Ok(())
}

/// Runs [`distill`] writing `metrics.csv`, periodic checkpoints and the final synthetic set
/// into `out`.
pub fn distill_to_dir(
    state: &mut DistillState,
    enc: &dyn Encoder,
    data: &dyn RealBatchProvider,
    out: &Path,
) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mpath = out.join("metrics.csv");
    let file = fs::File::create(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "{}", StepMetrics::CSV_HEADER).map_err(|e| Error::io(&mpath, e))?;
    let every = state.config.checkpoint_every;
    distill(state, enc, data, |s, m| {
        writeln!(w, "{}", m.csv_row()).map_err(|e| Error::io(&mpath, e))?;
        if every > 0 && s.iteration % every == 0 {
            s.save(&out.join(format!("checkpoint_{:06}", s.iteration)))?;
        }
        Ok(())
    })?;
    w.flush().map_err(|e| Error::io(&mpath, e))?;
    state.save(&out.join("final"))
}
