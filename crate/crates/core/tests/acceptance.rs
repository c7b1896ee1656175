//! Acceptance suite: one PASS/FAIL line per criterion A1-A9.
//!
//! Runs as a plain binary (`harness = false`). Pass criterion ids as arguments to run a
//! subset, e.g. `cargo test --test acceptance -- A4 A9`.

use std::collections::BTreeMap;
use std::time::Instant;

use lgm_core::augment::{
    apply, apply_vjp, expand_batch, expand_batch_vjp, sample_params, sample_vector_params,
    AugmentConfig,
};
use lgm_core::data::{eval_preprocess, LabeledSet};
use lgm_core::encoder::{embed_dataset, Activation, ConvSmall, EmbeddingTable, Encoder, Identity};
use lgm_core::eval::{
    baseline_centroids, baseline_random, mutual_knn_alignment, train_probe, ProbeConfig, ReportRow,
    StopPolicy,
};
use lgm_core::lgm::{
    class_loss_and_grad, distill, distill_to_dir, meta_grad_features, meta_loss, DistillConfig,
    DistillState, GradientPair, LinearHead, SyntheticSet,
};
use lgm_core::numcore::{bilinear_resize, bilinear_resize_vjp, RngStream, Tensor};
use lgm_core::toy::{gaussian_mixture, shapes};
use nalgebra::{DMatrix, DVector};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn main() {
    let args: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let wanted = |id: &str| args.is_empty() || args.iter().any(|a| a.eq_ignore_ascii_case(id));
    let mut shared = Shared::default();
    let criteria: [(&str, &str, fn(&mut Shared) -> Verdict); 9] = [
        ("A1", "gradient oracle", a1_gradient_oracle),
        ("A2", "adjoint identities", a2_adjoints),
        ("A3", "meta-loss identities", a3_meta_loss),
        ("A4", "vector-mode toy distillation", a4_vector_toy),
        ("A5", "image-mode toy distillation", a5_image_toy),
        ("A6", "augmentation ablation direction", a6_ablation),
        ("A7", "alignment metric", a7_alignment),
        ("A8", "determinism", a8_determinism),
        ("A9", "schedule contract", a9_schedule),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !wanted(id) {
            continue;
        }
        let t = Instant::now();
        let v = run(&mut shared);
        let status = if v.passed { "PASS" } else { "FAIL" };
        println!(
            "{id} {status} {name}: {} [{:.1}s]",
            v.detail,
            t.elapsed().as_secs_f64()
        );
        failed += usize::from(!v.passed);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

/// Loss curves from the toy runs, reused by the schedule check.
#[derive(Default)]
struct Shared {
    curves: BTreeMap<String, Vec<f64>>,
    image_runs: BTreeMap<(usize, u64), ImageRun>,
}

// ---------------------------------------------------------------------------------------
// A1

fn max_rel_err(analytic: &[f64], fd: &[f64]) -> f64 {
    let scale = analytic
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-12);
    analytic
        .iter()
        .zip(fd)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        / scale
}

fn a1_gradient_oracle(_: &mut Shared) -> Verdict {
    // analytic head gradient, c=3, f=5, N=4
    let mut worst_head: f64 = 0.0;
    for seed in 0..20 {
        let mut s = RngStream::new(seed, 100);
        let head = LinearHead::new(
            Tensor::from_fn(&[3, 5], |_| s.normal()),
            Tensor::from_fn(&[3], |_| s.normal()),
        )
        .unwrap();
        let zs = Tensor::from_fn(&[4, 5], |_| s.normal());
        let ls: Vec<usize> = (0..4).map(|_| s.below(3)).collect();
        let zr = Tensor::from_fn(&[8, 5], |_| s.normal());
        let lr: Vec<usize> = (0..8).map(|_| s.below(3)).collect();
        let (_, gr) = class_loss_and_grad(&head, &zr, &lr).unwrap();
        let (_, gs) = class_loss_and_grad(&head, &zs, &ls).unwrap();
        let analytic = meta_grad_features(&head, &zs, &ls, &gs, &gr).unwrap();
        let f =
            |z: &Tensor| meta_loss(&class_loss_and_grad(&head, z, &ls).unwrap().1, &gr).unwrap();
        let h = 1e-5;
        let fd: Vec<f64> = (0..zs.len())
            .map(|i| {
                let mut p = zs.clone();
                p.data_mut()[i] += h;
                let mut m = zs.clone();
                m.data_mut()[i] -= h;
                (f(&p) - f(&m)) / (2.0 * h)
            })
            .collect();
        worst_head = worst_head.max(max_rel_err(analytic.data(), &fd));
    }

    // full chain: pyramid -> color -> sigmoid -> augment -> conv encoder -> head gradients -> cosine
    let mut s = RngStream::new(7, 7);
    let samples: Vec<Tensor> = (0..8)
        .map(|i| {
            Tensor::from_fn(
                &[3, 8, 8],
                |j| if (j / 64) == i % 2 { 0.7 } else { 0.2 } + 0.2 * s.uniform01(),
            )
        })
        .collect();
    let data = LabeledSet::new(samples, (0..8).map(|i| i % 2).collect()).unwrap();
    let enc = ConvSmall::random(
        &mut RngStream::new(3, 3),
        [3, 8, 8],
        (3, 4),
        4,
        Activation::Tanh,
    )
    .unwrap();
    let cfg = DistillConfig {
        resolution: 8,
        augment_cfg: AugmentConfig {
            rounds: 2,
            ..AugmentConfig::default()
        },
        seed: 5,
        ..DistillConfig::default()
    };
    let mut state = DistillState::init(cfg, &data).unwrap();
    while state.activate_next_level() {}
    let stream = state.step_stream(0);
    let out = state.compute_step(&enc, &data, &stream).unwrap();
    let h = 1e-5;
    let mut analytic = Vec::new();
    let mut fd = Vec::new();
    for c in 0..2 {
        for (lvl, g) in out.grads[c].iter().enumerate() {
            for i in 0..g.len() {
                let eval = |d: f64| {
                    let mut st = state.clone();
                    st.synthetic.params_mut(c)[lvl].data_mut()[i] += d;
                    st.meta_loss_at(&enc, &data, &stream).unwrap()
                };
                analytic.push(g.data()[i]);
                fd.push((eval(h) - eval(-h)) / (2.0 * h));
            }
        }
    }
    let worst_chain = max_rel_err(&analytic, &fd);
    verdict(
        worst_head < 1e-6 && worst_chain < 1e-5,
        format!(
            "head max rel err {worst_head:.2e} (< 1e-6), full chain max rel err {worst_chain:.2e} (< 1e-5) over {} params",
            analytic.len()
        ),
    )
}

// ---------------------------------------------------------------------------------------
// A2

fn inner(a: &Tensor, b: &Tensor) -> f64 {
    a.dot(b)
}

fn a2_adjoints(_: &mut Shared) -> Verdict {
    let mut s = RngStream::new(11, 2);
    let mut worst: f64 = 0.0;
    let mut check = |lhs: f64, rhs: f64| worst = worst.max((lhs - rhs).abs() / lhs.abs().max(1.0));
    for _ in 0..100 {
        // bilinear resize
        let (h, w) = (1 + s.below(20), 1 + s.below(20));
        let (oh, ow) = (1 + s.below(40), 1 + s.below(40));
        let x = Tensor::from_fn(&[2, h, w], |_| s.normal());
        let y = Tensor::from_fn(&[2, oh, ow], |_| s.normal());
        check(
            inner(&bilinear_resize(&x, oh, ow).unwrap(), &y),
            inner(&x, &bilinear_resize_vjp(&y, h, w).unwrap()),
        );

        // each augmentation alone and all together; noise is affine so compare linear parts
        let (h, w) = (4 + s.below(24), 4 + s.below(24));
        let out = (4 + s.below(16), 4 + s.below(16));
        let x = Tensor::from_fn(&[3, h, w], |_| s.normal());
        let y = Tensor::from_fn(&[3, out.0, out.1], |_| s.normal());
        let variants = [
            (true, false, false),
            (false, true, false),
            (false, false, true),
            (true, true, true),
        ];
        for (flip, crop, noise) in variants {
            let cfg = AugmentConfig {
                flip,
                crop,
                noise,
                flip_prob: 0.5,
                out_size: Some(out),
                ..AugmentConfig::default()
            };
            let p = sample_params(&mut s, &cfg, h, w);
            let shift = apply(&Tensor::zeros(x.dims()), &p).unwrap();
            let mut ax = apply(&x, &p).unwrap();
            ax.axpy(-1.0, &shift);
            check(
                inner(&ax, &y),
                inner(&x, &apply_vjp(&p, &y, x.dims()).unwrap()),
            );
        }
        // vector noise path
        let v = Tensor::from_fn(&[7], |_| s.normal());
        let u = Tensor::from_fn(&[7], |_| s.normal());
        let p = sample_vector_params(&mut s, &AugmentConfig::default());
        let mut av = apply(&v, &p).unwrap();
        av.axpy(-1.0, &apply(&Tensor::zeros(&[7]), &p).unwrap());
        check(inner(&av, &u), inner(&v, &apply_vjp(&p, &u, &[7]).unwrap()));

        // multi-round expansion
        let imgs: Vec<Tensor> = (0..3)
            .map(|_| Tensor::from_fn(&[3, h, w], |_| s.normal()))
            .collect();
        let cfg = AugmentConfig {
            noise: false,
            rounds: 3,
            out_size: Some(out),
            ..AugmentConfig::default()
        };
        let (batch, params) = expand_batch(&imgs, &cfg, &mut s).unwrap();
        let ups: Vec<Tensor> = batch
            .iter()
            .map(|b| Tensor::from_fn(b.dims(), |_| s.normal()))
            .collect();
        let lhs: f64 = batch.iter().zip(&ups).map(|(a, b)| inner(a, b)).sum();
        let back = expand_batch_vjp(&params, &ups, &imgs).unwrap();
        let rhs: f64 = imgs.iter().zip(&back).map(|(a, b)| inner(a, b)).sum();
        check(lhs, rhs);
    }
    verdict(
        worst < 1e-9,
        format!("max relative adjoint gap {worst:.2e} over 100 draws x 7 operators (< 1e-9)"),
    )
}

// ---------------------------------------------------------------------------------------
// A3

fn pair(gw: Vec<f64>, gb: Vec<f64>) -> GradientPair {
    GradientPair {
        gw: Tensor::new(vec![2, gw.len() / 2], gw).unwrap(),
        gb: Tensor::new(vec![2], gb).unwrap(),
    }
}

fn a3_meta_loss(_: &mut Shared) -> Verdict {
    let mut s = RngStream::new(12, 3);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for _ in 0..100 {
        let gw: Vec<f64> = (0..6).map(|_| s.normal()).collect();
        let gb: Vec<f64> = (0..2).map(|_| s.normal()).collect();
        let a = pair(gw.clone(), gb.clone());
        let neg = pair(
            gw.iter().map(|v| -v).collect(),
            gb.iter().map(|v| -v).collect(),
        );
        let e0 = meta_loss(&a, &a).unwrap().abs();
        let e2 = (meta_loss(&a, &neg).unwrap() - 2.0).abs();
        // orthogonal partner: Gram-Schmidt against the flattened vector
        let flat = a.flatten();
        let mut o: Vec<f64> = (0..8).map(|_| s.normal()).collect();
        let proj = flat.iter().zip(&o).map(|(x, y)| x * y).sum::<f64>()
            / flat.iter().map(|x| x * x).sum::<f64>();
        o.iter_mut().zip(&flat).for_each(|(y, x)| *y -= proj * x);
        let orth = pair(o[..6].to_vec(), o[6..].to_vec());
        let e1 = (meta_loss(&a, &orth).unwrap() - 1.0).abs();
        worst = worst.max(e0).max(e1).max(e2);
        let b = pair(
            (0..6).map(|_| s.normal()).collect(),
            (0..2).map(|_| s.normal()).collect(),
        );
        let alpha = s.uniform(0.01, 100.0);
        let scaled = pair(
            gw.iter().map(|v| alpha * v).collect(),
            gb.iter().map(|v| alpha * v).collect(),
        );
        let base = meta_loss(&a, &b).unwrap();
        let inv = (meta_loss(&scaled, &b).unwrap() - base)
            .abs()
            .max((meta_loss(&b, &scaled).unwrap() - base).abs());
        ok &= inv < 1e-12;
        ok &= (0.0..=2.0).contains(&base);
    }
    verdict(
        worst < 1e-12 && ok,
        format!(
            "max identity error {worst:.1e} (< 1e-12); rescaling invariance {}",
            if ok { "holds" } else { "violated" }
        ),
    )
}

// ---------------------------------------------------------------------------------------
// Shared evaluation helpers

fn table(set: &LabeledSet, enc: &dyn Encoder) -> EmbeddingTable {
    embed_dataset(enc, &set.samples, &set.labels, 128).unwrap()
}

fn median(v: &[f64]) -> f64 {
    ReportRow::new("m", v.to_vec()).median()
}

fn smoothed(curve: &[f64], end: usize, window: usize) -> f64 {
    let w: Vec<f64> = curve[end.saturating_sub(window)..end]
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .collect();
    w.iter().sum::<f64>() / w.len() as f64
}

/// Multinomial logistic regression fit by damped Newton steps with a tiny ridge term,
/// solved with dense linear algebra. Independent of the probe code path.
fn logistic_regression_oracle(
    train: &EmbeddingTable,
    test: &EmbeddingTable,
    classes: usize,
) -> f64 {
    let f = train.dim() + 1;
    let p = classes * f;
    let n = train.len();
    let lambda = 1e-6;
    let x = |t: &EmbeddingTable, i: usize| -> Vec<f64> {
        let mut r = t.row(i).to_vec();
        r.push(1.0);
        r
    };
    let probs = |theta: &DVector<f64>, xi: &[f64]| -> Vec<f64> {
        let logits: Vec<f64> = (0..classes)
            .map(|k| (0..f).map(|j| theta[k * f + j] * xi[j]).sum())
            .collect();
        let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
        let s: f64 = e.iter().sum();
        e.iter().map(|v| v / s).collect()
    };
    let objective = |theta: &DVector<f64>| -> f64 {
        let mut l = 0.5 * lambda * theta.norm_squared() * n as f64;
        for i in 0..n {
            l -= probs(theta, &x(train, i))[train.labels[i]].ln();
        }
        l
    };
    let mut theta = DVector::zeros(p);
    for _ in 0..100 {
        let mut g = &theta * (lambda * n as f64);
        let mut hess = DMatrix::identity(p, p) * (lambda * n as f64);
        for i in 0..n {
            let xi = x(train, i);
            let pi = probs(&theta, &xi);
            for a in 0..classes {
                let ra = pi[a] - f64::from(u8::from(a == train.labels[i]));
                for j in 0..f {
                    g[a * f + j] += ra * xi[j];
                }
                for b in 0..classes {
                    let w = if a == b {
                        pi[a] * (1.0 - pi[a])
                    } else {
                        -pi[a] * pi[b]
                    };
                    for j in 0..f {
                        for k in 0..f {
                            hess[(a * f + j, b * f + k)] += w * xi[j] * xi[k];
                        }
                    }
                }
            }
        }
        if g.norm() < 1e-9 {
            break;
        }
        let dir = hess
            .cholesky()
            .expect("ridge keeps the Hessian positive definite")
            .solve(&g);
        let mut step = 1.0;
        let f0 = objective(&theta);
        while objective(&(&theta - &dir * step)) > f0 && step > 1e-8 {
            step *= 0.5;
        }
        theta -= dir * step;
    }
    let hits = (0..test.len())
        .filter(|&i| {
            let pr = probs(&theta, &x(test, i));
            let best = (0..classes).fold(0, |b, k| if pr[k] > pr[b] { k } else { b });
            best == test.labels[i]
        })
        .count();
    hits as f64 / test.len() as f64
}

// ---------------------------------------------------------------------------------------
// A4

const A4_ITERS: usize = 1500;

// The oracle is a converged fit, so the probes also train to the end. Early stopping on a
// 50-sample validation split moves accuracy by several points even for the true means.
fn a4_probe_config() -> ProbeConfig {
    ProbeConfig {
        epochs: 1000,
        batch_size: 100,
        lr: 0.01,
        cosine: true,
        patience: 50,
        policy: StopPolicy::None,
    }
}

fn a4_vector_toy(shared: &mut Shared) -> Verdict {
    let enc = Identity::new(16);
    // noise matches the in-class spread of the mixture
    let noise_only = AugmentConfig {
        flip: false,
        crop: false,
        noise: true,
        noise_std: 0.5,
        rounds: 10,
        ..AugmentConfig::default()
    };
    let probe = a4_probe_config();
    let mut distilled = Vec::new();
    let mut full = Vec::new();
    let mut centroid = Vec::new();
    for seed in 0..3u64 {
        let mut ds = RngStream::new(1000 + seed, 0);
        let all = gaussian_mixture(&mut ds, 5, 16, 0.5, 100).unwrap();
        let test = gaussian_mixture(&mut ds, 5, 16, 0.5, 100).unwrap();
        let (train, val) = all.split(0.1, &mut ds);
        let test_t = table(&test, &enc);
        let val_t = table(&val, &enc);
        let train_t = table(&train, &enc);

        let cfg = DistillConfig {
            iterations: A4_ITERS,
            augment_cfg: noise_only.clone(),
            seed,
            ..DistillConfig::default()
        };
        let mut state = DistillState::init(cfg, &train).unwrap();
        let mut curve = Vec::new();
        distill(&mut state, &enc, &train, |_, m| {
            curve.push(m.meta_loss);
            Ok(())
        })
        .unwrap();
        shared.curves.insert(format!("A4 seed {seed}"), curve);
        let SyntheticSet::Vectors { points } = &state.synthetic else {
            unreachable!()
        };
        let syn = LabeledSet::new(points.clone(), (0..5).collect()).unwrap();
        let stream = RngStream::new(seed, 500);
        let r = train_probe(
            &syn,
            &enc,
            Some(&noise_only),
            Some(&val_t),
            &test_t,
            &probe,
            &stream,
        )
        .unwrap();
        distilled.push(r.accuracy);

        let picks = baseline_centroids(&train_t).unwrap();
        let cset = train.select(&picks);
        let r = train_probe(
            &cset,
            &enc,
            Some(&noise_only),
            Some(&val_t),
            &test_t,
            &probe,
            &stream,
        )
        .unwrap();
        centroid.push(r.accuracy);

        full.push(logistic_regression_oracle(&train_t, &test_t, 5));
    }
    let (d, f, c) = (median(&distilled), median(&full), median(&centroid));
    verdict(
        d >= f - 0.02 && d >= c - 0.01,
        format!(
            "distilled {:.1}% vs full-data oracle {:.1}% (need >= {:.1}) and centroids {:.1}% (need >= {:.1}); per-seed distilled {:?}",
            100.0 * d,
            100.0 * f,
            100.0 * (f - 0.02),
            100.0 * c,
            100.0 * (c - 0.01),
            distilled.iter().map(|v| (1000.0 * v).round() / 10.0).collect::<Vec<_>>()
        ),
    )
}

// ---------------------------------------------------------------------------------------
// A5 / A6

const A5_ITERS: usize = 2000;
const A5_ROUNDS: usize = 5;

struct ImageRun {
    synthetic: Vec<Tensor>,
}

struct ImageSetup {
    train: LabeledSet,
    val: LabeledSet,
    test: LabeledSet,
    enc: ConvSmall,
    cross_enc: ConvSmall,
    aug: AugmentConfig,
}

fn image_setup() -> ImageSetup {
    let mut ds = RngStream::new(2024, 0);
    let all = shapes(&mut ds, 300, 32).unwrap();
    let (train, val) = all.split(0.1, &mut ds);
    let test_raw = shapes(&mut ds, 100, 32).unwrap();
    let test = LabeledSet::with_names(
        test_raw
            .samples
            .iter()
            .map(|x| eval_preprocess(x, 32).unwrap())
            .collect(),
        test_raw.labels.clone(),
        test_raw.class_names.clone(),
    )
    .unwrap();
    let enc = ConvSmall::random(
        &mut RngStream::new(1, 10),
        [3, 32, 32],
        (8, 16),
        16,
        Activation::Tanh,
    )
    .unwrap();
    let cross_enc = ConvSmall::random(
        &mut RngStream::new(2, 10),
        [3, 32, 32],
        (8, 16),
        16,
        Activation::Tanh,
    )
    .unwrap();
    let aug = AugmentConfig {
        rounds: A5_ROUNDS,
        out_size: Some((32, 32)),
        ..AugmentConfig::default()
    };
    ImageSetup {
        train,
        val,
        test,
        enc,
        cross_enc,
        aug,
    }
}

fn image_probe_config() -> ProbeConfig {
    ProbeConfig {
        epochs: 1000,
        batch_size: 100,
        lr: 0.01,
        cosine: true,
        patience: 50,
        policy: StopPolicy::Validation,
    }
}

fn image_run(shared: &mut Shared, setup: &ImageSetup, rounds: usize, seed: u64) -> Vec<Tensor> {
    if let Some(r) = shared.image_runs.get(&(rounds, seed)) {
        return r.synthetic.clone();
    }
    let cfg = DistillConfig {
        iterations: A5_ITERS,
        resolution: 32,
        augment: rounds > 0,
        augment_cfg: AugmentConfig {
            rounds: rounds.max(1),
            ..setup.aug.clone()
        },
        seed,
        ..DistillConfig::default()
    };
    let mut state = DistillState::init(cfg, &setup.train).unwrap();
    let mut curve = Vec::new();
    let mut levels = Vec::new();
    distill(&mut state, &setup.enc, &setup.train, |_, m| {
        curve.push(m.meta_loss);
        levels.push(m.active_levels as f64);
        Ok(())
    })
    .unwrap();
    if rounds == A5_ROUNDS {
        shared.curves.insert(format!("A5 seed {seed}"), curve);
        shared
            .curves
            .insert(format!("A5 levels seed {seed}"), levels);
    }
    let synthetic = state.synthetic.samples().unwrap();
    shared.image_runs.insert(
        (rounds, seed),
        ImageRun {
            synthetic: synthetic.clone(),
        },
    );
    synthetic
}

fn image_probe(setup: &ImageSetup, enc: &dyn Encoder, train: &LabeledSet, seed: u64) -> f64 {
    let val = table(&setup.val, enc);
    let test = table(&setup.test, enc);
    train_probe(
        train,
        enc,
        Some(&setup.aug),
        Some(&val),
        &test,
        &image_probe_config(),
        &RngStream::new(seed, 600),
    )
    .unwrap()
    .accuracy
}

fn synthetic_set(images: Vec<Tensor>) -> LabeledSet {
    LabeledSet::new(images, vec![0, 1, 2]).unwrap()
}

fn a5_image_toy(shared: &mut Shared) -> Verdict {
    let setup = image_setup();
    let mut distilled = Vec::new();
    for seed in 0..3 {
        let images = image_run(shared, &setup, A5_ROUNDS, seed);
        distilled.push(image_probe(
            &setup,
            &setup.enc,
            &synthetic_set(images),
            seed,
        ));
    }
    let random: Vec<f64> = (0..10)
        .map(|seed| {
            let picks =
                baseline_random(&setup.train.labels, &mut RngStream::new(seed, 700)).unwrap();
            image_probe(&setup, &setup.enc, &setup.train.select(&picks), seed)
        })
        .collect();
    let d = median(&distilled);
    let r = ReportRow::new("random", random);
    verdict(
        d >= r.mean() + 0.05,
        format!(
            "distilled median {:.1}% (seeds {:?}) vs random {:.1}% ± {:.1} over 10 seeds (need >= +5 points)",
            100.0 * d,
            distilled.iter().map(|v| (1000.0 * v).round() / 10.0).collect::<Vec<_>>(),
            100.0 * r.mean(),
            100.0 * r.std().unwrap_or(0.0)
        ),
    )
}

fn a6_ablation(shared: &mut Shared) -> Verdict {
    let setup = image_setup();
    let mut with = Vec::new();
    let mut without = Vec::new();
    for seed in 0..3 {
        let a = image_run(shared, &setup, A5_ROUNDS, seed);
        with.push(image_probe(
            &setup,
            &setup.cross_enc,
            &synthetic_set(a),
            seed,
        ));
        let b = image_run(shared, &setup, 0, seed);
        without.push(image_probe(
            &setup,
            &setup.cross_enc,
            &synthetic_set(b),
            seed,
        ));
    }
    let (w, wo) = (median(&with), median(&without));
    verdict(
        wo < w,
        format!(
            "cross-encoder accuracy k=0 {:.1}% vs k={A5_ROUNDS} {:.1}% (need strictly lower)",
            100.0 * wo,
            100.0 * w
        ),
    )
}

// ---------------------------------------------------------------------------------------
// A7

fn random_rotation(s: &mut RngStream, d: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(d, d, |_, _| s.normal());
    m.qr().q()
}

fn a7_alignment(_: &mut Shared) -> Verdict {
    let (n, k, d) = (200, 10, 16);
    let mut s = RngStream::new(77, 7);
    let a = Tensor::from_fn(&[n, d], |_| s.normal());
    let self_score = mutual_knn_alignment(&a, &a, k).unwrap();

    let q = random_rotation(&mut s, d);
    let rotated = Tensor::from_fn(&[n, d], |idx| {
        let (i, j) = (idx / d, idx % d);
        (0..d).map(|t| a.row(i)[t] * q[(t, j)]).sum()
    });
    let rot_score = mutual_knn_alignment(&a, &rotated, k).unwrap();

    let sims = 30;
    let scores: Vec<f64> = (0..sims)
        .map(|_| {
            let x = Tensor::from_fn(&[n, d], |_| s.normal());
            let y = Tensor::from_fn(&[n, d], |_| s.normal());
            mutual_knn_alignment(&x, &y, k).unwrap()
        })
        .collect();
    let row = ReportRow::new("sim", scores);
    let expected = k as f64 / (n - 1) as f64;
    let se = row.std().unwrap() / (sims as f64).sqrt();
    let z = (row.mean() - expected) / se;
    verdict(
        self_score == 1.0 && rot_score == 1.0 && z.abs() <= 3.0,
        format!(
            "self {self_score}, rotated {rot_score}, random mean {:.5} vs k/(n-1) = {expected:.5} (z = {z:.2}, |z| <= 3)",
            row.mean()
        ),
    )
}

// ---------------------------------------------------------------------------------------
// A8

fn a8_determinism(_: &mut Shared) -> Verdict {
    let mut ds = RngStream::new(9, 9);
    let data = shapes(&mut ds, 10, 16).unwrap();
    let enc = ConvSmall::random(
        &mut RngStream::new(4, 4),
        [3, 16, 16],
        (4, 8),
        8,
        Activation::Relu,
    )
    .unwrap();
    let cfg = DistillConfig {
        iterations: 60,
        level_period: 20,
        resolution: 16,
        checkpoint_every: 30,
        augment_cfg: AugmentConfig {
            rounds: 2,
            out_size: Some((16, 16)),
            ..AugmentConfig::default()
        },
        seed: 3,
        ..DistillConfig::default()
    };
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let mut state = DistillState::init(cfg.clone(), &data).unwrap();
        distill_to_dir(&mut state, &enc, &data, dir.path()).unwrap();
        let mut files = BTreeMap::new();
        collect_files(dir.path(), dir.path(), &mut files);
        files
    };
    let (a, b) = (run(), run());
    let ppms = a.keys().filter(|k| k.ends_with(".ppm")).count();
    verdict(
        a == b && ppms >= 3 && a.contains_key("metrics.csv"),
        format!(
            "{} files compared ({ppms} PPMs, metrics.csv), identical: {}",
            a.len(),
            a == b
        ),
    )
}

fn collect_files(
    root: &std::path::Path,
    dir: &std::path::Path,
    out: &mut BTreeMap<String, Vec<u8>>,
) {
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            collect_files(root, &p, out);
        } else {
            let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
            out.insert(rel, std::fs::read(&p).unwrap());
        }
    }
}

// ---------------------------------------------------------------------------------------
// A9

fn a9_schedule(shared: &mut Shared) -> Verdict {
    // level activation contract on a cheap vector-encoded image problem
    let mut ds = RngStream::new(5, 5);
    let data = shapes(&mut ds, 4, 32).unwrap();
    let enc =
        lgm_core::encoder::RandomProjection::random(&mut RngStream::new(6, 6), &[3, 32, 32], 8);
    let cfg = DistillConfig {
        iterations: 1401,
        resolution: 32,
        augment: false,
        seed: 1,
        ..DistillConfig::default()
    };
    let mut state = DistillState::init(cfg, &data).unwrap();
    let mut active = Vec::new();
    distill(&mut state, &enc, &data, |_, m| {
        active.push(m.active_levels);
        Ok(())
    })
    .unwrap();
    let schedule_ok = (0..active.len()).all(|it| active[it] == (1 + it / 200).min(6));

    let mut notes = vec![format!(
        "levels follow min(1 + t/200, 6) for 1401 iterations: {schedule_ok}"
    )];
    if !shared.curves.keys().any(|k| k.starts_with("A4")) {
        a4_vector_toy(shared);
    }
    let mut curves_ok = true;
    let mut seen = 0;
    for (name, curve) in &shared.curves {
        if name.contains("levels") {
            continue;
        }
        seen += 1;
        let early = smoothed(curve, 100, 100);
        let late = smoothed(curve, curve.len(), 100);
        curves_ok &= late < early;
        notes.push(format!("{name}: {early:.4} -> {late:.4}"));
    }
    if seen == 0 {
        notes.push("no A4/A5 curves in this run; loss check skipped".into());
        curves_ok = false;
    }
    verdict(schedule_ok && curves_ok, notes.join("; "))
}
