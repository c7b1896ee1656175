use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use lgm_core::data::LabeledSet;
use lgm_core::encoder::{save_encoder, EmbeddingTable};
use lgm_core::eval::{
    baseline_centroids, baseline_neighbors, baseline_random, mutual_knn_alignment, pca2,
    train_probe, write_pca_csv, EvalReport, ReportRow, StopPolicy,
};
use lgm_core::lgm::{distill_to_dir, load_synthetic, DistillState};
use lgm_core::numcore::RngStream;
use lgm_core::toy::{gaussian_mixture, shapes};

use crate::common::*;
use crate::{CliError, Common, Result, ToyKind};

pub fn gen_toy(
    c: &Common,
    kind: ToyKind,
    per_class: Option<usize>,
    test_per_class: usize,
    size: usize,
) -> Result<()> {
    let out = out_dir(c)?;
    let (train_dir, test_dir) = (out.join("train"), out.join("test"));
    // the written config.txt is ready to pass to the next commands
    let mut base = vec![
        ("train", train_dir.display().to_string()),
        ("test", test_dir.display().to_string()),
        ("probe_lr", "0.01".to_string()),
    ];
    base.extend(match kind {
        ToyKind::Gaussian => vec![
            ("encoder", "identity".to_string()),
            ("flip", "false".to_string()),
            ("crop", "false".to_string()),
            ("noise_std", "0.5".to_string()),
        ],
        ToyKind::Shapes => vec![
            ("image_size", size.to_string()),
            ("resolution", size.to_string()),
        ],
    });
    let cfg = resolve_config_over(c, &base)?;
    let mut s = RngStream::new(cfg.seed, STREAM_DATA);
    match kind {
        ToyKind::Gaussian => {
            gaussian_mixture(&mut s, 5, 16, 0.5, per_class.unwrap_or(100))?
                .save_vectors(&train_dir)?;
            gaussian_mixture(&mut s, 5, 16, 0.5, test_per_class)?.save_vectors(&test_dir)?;
        }
        ToyKind::Shapes => {
            shapes(&mut s, per_class.unwrap_or(300), size)?.save_image_folder(&train_dir)?;
            shapes(&mut s, test_per_class, size)?.save_image_folder(&test_dir)?;
        }
    }
    cfg.write_resolved(out)?;
    println!("{}\n{}", train_dir.display(), test_dir.display());
    Ok(())
}

pub fn distill(c: &Common, train: Option<PathBuf>) -> Result<()> {
    let cfg = resolve_config(c)?;
    let out = out_dir(c)?;
    let dcfg = cfg.distill_config()?;
    let (train, _) = load_train(&cfg, &pick_path(train, &cfg.train, "train")?)?;
    let enc = build_encoder(&cfg, train.sample_dims())?;
    cfg.write_resolved(out)?;
    let mut state = DistillState::init(dcfg, &train)?;
    distill_to_dir(&mut state, &enc, &train, out)?;
    println!(
        "distilled {} samples in {} iterations ({} skipped) -> {}",
        state.num_classes(),
        state.iteration,
        state.skipped,
        out.join("final").display()
    );
    Ok(())
}

pub fn embed(c: &Common, data: &Path) -> Result<()> {
    let cfg = resolve_config(c)?;
    let out = out_dir(c)?;
    let set = LabeledSet::load(data)?;
    let enc = build_encoder(&cfg, set.sample_dims())?;
    let mut table = crate::common::embed(&enc, &eval_view(&cfg, &set)?)?;
    table.manifest = vec![
        ("encoder".into(), enc.arch().into()),
        ("encoder_seed".into(), cfg.encoder_seed.to_string()),
        ("layer".into(), "output".into()),
        ("source".into(), data.display().to_string()),
    ];
    table.save(out)?;
    save_encoder(&enc, &out.join("encoder"))?;
    cfg.write_resolved(out)?;
    println!("{} x {} -> {}", table.len(), table.dim(), out.display());
    Ok(())
}

fn index_lines(sets: &[Vec<usize>]) -> String {
    sets.iter()
        .map(|s| s.iter().map(usize::to_string).collect::<Vec<_>>().join(" ") + "\n")
        .collect()
}

fn random_picks(
    cfg: &lgm_core::config::RunConfig,
    train: &LabeledSet,
    i: usize,
) -> Result<Vec<usize>> {
    Ok(baseline_random(
        &train.labels,
        &mut RngStream::new(cfg.seed, STREAM_RANDOM).derive(i as u64),
    )?)
}

fn load_distilled(dir: &Path, classes: usize) -> Result<LabeledSet> {
    let dir = distilled_dir(dir);
    let syn = load_synthetic(&dir)?;
    if syn.len() != classes {
        return Err(CliError::Usage(format!(
            "{}: {} synthetic samples but the training set has {classes} classes",
            dir.display(),
            syn.len()
        )));
    }
    Ok(syn)
}

pub fn baselines(c: &Common, train: Option<PathBuf>, distilled: Option<PathBuf>) -> Result<()> {
    let cfg = resolve_config(c)?;
    let out = out_dir(c)?;
    let (train, _) = load_train(&cfg, &pick_path(train, &cfg.train, "train")?)?;
    let enc = build_encoder(&cfg, train.sample_dims())?;
    let train_t = crate::common::embed(&enc, &eval_view(&cfg, &train)?)?;
    fs::create_dir_all(out).map_err(|e| lgm_core::Error::Io {
        path: out.into(),
        source: e,
    })?;
    let header = format!(
        "# indices into the training split (seed={}, val_fraction={}), one selection per line\n",
        cfg.seed, cfg.val_fraction
    );
    let random: Vec<Vec<usize>> = (0..cfg.random_seeds)
        .map(|i| random_picks(&cfg, &train, i))
        .collect::<Result<_>>()?;
    let mut files = vec![
        ("random.txt", index_lines(&random)),
        (
            "centroids.txt",
            index_lines(&[baseline_centroids(&train_t)?]),
        ),
    ];
    if let Some(d) = distilled {
        let syn = synthetic_view(&cfg, &load_distilled(&d, train.num_classes())?)?;
        let syn_t = crate::common::embed(&enc, &syn)?;
        files.push((
            "neighbors.txt",
            index_lines(&[baseline_neighbors(&train_t, &syn_t.features)?]),
        ));
    }
    for (name, body) in files {
        let p = out.join(name);
        fs::write(&p, format!("{header}{body}")).map_err(|e| lgm_core::Error::Io {
            path: p.clone(),
            source: e,
        })?;
    }
    cfg.write_resolved(out)?;
    Ok(())
}

const METHODS: [&str; 5] = ["distilled", "neighbors", "centroids", "random", "full"];

pub fn eval_probe(
    c: &Common,
    train: Option<PathBuf>,
    test: Option<PathBuf>,
    distilled: Option<PathBuf>,
    methods: Option<Vec<String>>,
) -> Result<()> {
    let cfg = resolve_config(c)?;
    let out = out_dir(c)?;
    let probe_cfg = cfg.probe_config()?;
    let methods = match methods {
        Some(m) => m,
        None => METHODS
            .iter()
            .filter(|m| distilled.is_some() || !matches!(**m, "distilled" | "neighbors"))
            .map(|m| m.to_string())
            .collect(),
    };
    if let Some(bad) = methods.iter().find(|m| !METHODS.contains(&m.as_str())) {
        return Err(CliError::Usage(format!(
            "unknown method `{bad}` (expected one of {})",
            METHODS.join(",")
        )));
    }
    let (train, val) = load_train(&cfg, &pick_path(train, &cfg.train, "train")?)?;
    let test = LabeledSet::load(&pick_path(test, &cfg.test, "test")?)?;
    let enc = build_encoder(&cfg, train.sample_dims())?;
    let test_t = crate::common::embed(&enc, &eval_view(&cfg, &test)?)?;
    let val_t = val
        .map(|v| crate::common::embed(&enc, &eval_view(&cfg, &v)?))
        .transpose()?;
    if probe_cfg.policy == StopPolicy::Validation && val_t.is_none() {
        return Err(CliError::Usage(
            "probe_policy=validation needs val_fraction > 0".into(),
        ));
    }
    let aug = probe_augment(&cfg, train.is_image());
    let train_eval = eval_view(&cfg, &train)?;
    let train_t = crate::common::embed(&enc, &train_eval)?;

    // augmented probes see raw samples; the crop brings them to the encoder size
    let probe = |raw: &LabeledSet, fixed: &LabeledSet, seed: usize| -> Result<f64> {
        let set = if aug.is_some() { raw } else { fixed };
        let stream = RngStream::new(seed as u64, STREAM_PROBE);
        Ok(train_probe(
            set,
            &enc,
            aug.as_ref(),
            val_t.as_ref(),
            &test_t,
            &probe_cfg,
            &stream,
        )?
        .accuracy)
    };
    let repeat = |raw: &LabeledSet, fixed: &LabeledSet| -> Result<Vec<f64>> {
        (0..cfg.eval_seeds).map(|s| probe(raw, fixed, s)).collect()
    };

    let syn = distilled
        .as_ref()
        .map(|d| load_distilled(d, train.num_classes()))
        .transpose()?;
    let mut report = EvalReport {
        config: cfg
            .entries()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        ..Default::default()
    };
    for m in &methods {
        let accs = match m.as_str() {
            "distilled" | "neighbors" => {
                let syn = syn
                    .as_ref()
                    .ok_or_else(|| CliError::Usage(format!("method `{m}` needs --distilled")))?;
                let syn_fixed = synthetic_view(&cfg, syn)?;
                if m == "distilled" {
                    repeat(syn, &syn_fixed)?
                } else {
                    let syn_t = crate::common::embed(&enc, &syn_fixed)?;
                    let picks = baseline_neighbors(&train_t, &syn_t.features)?;
                    repeat(&train.select(&picks), &train_eval.select(&picks))?
                }
            }
            "centroids" => {
                let picks = baseline_centroids(&train_t)?;
                repeat(&train.select(&picks), &train_eval.select(&picks))?
            }
            "random" => (0..cfg.random_seeds)
                .map(|i| {
                    let picks = random_picks(&cfg, &train, i)?;
                    probe(&train.select(&picks), &train_eval.select(&picks), i)
                })
                .collect::<Result<_>>()?,
            _ => repeat(&train, &train_eval)?,
        };
        report.push(ReportRow::new(m.clone(), accs));
    }
    report.save(out)?;
    cfg.write_resolved(out)?;
    print!("{}", report.to_table());
    Ok(())
}

fn load_table(p: &Path) -> Result<EmbeddingTable> {
    Ok(EmbeddingTable::load(p)?)
}

pub fn align(c: &Common, a: &Path, b: &Path, k: Option<usize>) -> Result<()> {
    let cfg = resolve_config(c)?;
    let (ta, tb) = (load_table(a)?, load_table(b)?);
    let k = k.unwrap_or(cfg.align_k);
    let v = mutual_knn_alignment(&ta.features, &tb.features, k)?;
    println!("{v:?}");
    if let Some(out) = &c.out {
        let mut body = String::new();
        let _ = writeln!(
            body,
            "a={}\nb={}\nk={k}\nalignment={v:?}",
            a.display(),
            b.display()
        );
        cfg.write_resolved(out)?;
        let p = out.join("align.txt");
        fs::write(&p, body).map_err(|e| lgm_core::Error::Io {
            path: p.clone(),
            source: e,
        })?;
    }
    Ok(())
}

pub fn pca(c: &Common, table: &Path) -> Result<()> {
    let cfg = resolve_config(c)?;
    let out = out_dir(c)?;
    let t = load_table(table)?;
    let coords = pca2(&t.features)?;
    cfg.write_resolved(out)?;
    write_pca_csv(&out.join("pca.csv"), &coords, &t.labels)?;
    Ok(())
}
