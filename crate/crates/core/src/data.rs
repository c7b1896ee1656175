//! Labeled datasets: image folders of P6 PPMs or NDT vector sets, plus evaluation-time
//! preprocessing.

use std::fs;
use std::path::Path;

use crate::encoder::EmbeddingTable;
use crate::error::{Error, Result};
use crate::imgparam::read_ppm;
use crate::numcore::{bilinear_resize, RngStream, Tensor};

/// Samples of identical shape with class ids in `0..num_classes`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSet {
    pub samples: Vec<Tensor>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

impl LabeledSet {
    pub fn new(samples: Vec<Tensor>, labels: Vec<usize>) -> Result<Self> {
        let classes = labels.iter().max().map_or(0, |m| m + 1);
        let names = (0..classes).map(|c| format!("class_{c:03}")).collect();
        Self::with_names(samples, labels, names)
    }

    pub fn with_names(
        samples: Vec<Tensor>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::invalid("dataset is empty"))?;
        if samples.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} samples but {} labels",
                samples.len(),
                labels.len()
            )));
        }
        if let Some(s) = samples.iter().find(|s| s.dims() != first.dims()) {
            return Err(Error::shape("LabeledSet", first.dims(), s.dims()));
        }
        let classes = class_names.len();
        if let Some(&l) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::LabelOutOfRange { label: l, classes });
        }
        let set = LabeledSet {
            samples,
            labels,
            class_names,
        };
        if let Some(c) = (0..classes).find(|&c| !set.labels.contains(&c)) {
            return Err(Error::invalid(format!("class {c} has no samples")));
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn sample_dims(&self) -> &[usize] {
        self.samples[0].dims()
    }

    pub fn is_image(&self) -> bool {
        self.sample_dims().len() == 3
    }

    pub fn class_indices(&self, class: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.labels[i] == class)
            .collect()
    }

    /// Subset in the given order; class names are kept.
    pub fn select(&self, indices: &[usize]) -> LabeledSet {
        LabeledSet {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }

    /// Splits off a stratified random fraction of every class (at least one row per class is
    /// kept for training).
    pub fn split(&self, fraction: f64, stream: &mut RngStream) -> (LabeledSet, LabeledSet) {
        let mut train = Vec::new();
        let mut held = Vec::new();
        for c in 0..self.num_classes() {
            let idx = self.class_indices(c);
            let perm = stream.shuffle(idx.len());
            let n_held =
                ((idx.len() as f64 * fraction).round() as usize).min(idx.len().saturating_sub(1));
            for (j, &p) in perm.iter().enumerate() {
                if j < n_held {
                    held.push(idx[p]);
                } else {
                    train.push(idx[p]);
                }
            }
        }
        train.sort_unstable();
        held.sort_unstable();
        (self.select(&train), self.select(&held))
    }

    /// Vectors from an embedding-table-style directory (`features.ndt`, `labels.ndt`).
    pub fn load_vectors(dir: &Path) -> Result<LabeledSet> {
        let table = EmbeddingTable::load(dir)?;
        let samples = table
            .features
            .unstack()
            .into_iter()
            .map(|t| t.reshape(&[table.dim()]))
            .collect::<Result<Vec<_>>>()?;
        let classes = table.num_classes();
        let names = table
            .class_names
            .clone()
            .filter(|n| n.len() == classes)
            .unwrap_or_else(|| (0..classes).map(|c| format!("class_{c:03}")).collect());
        LabeledSet::with_names(samples, table.labels, names)
    }

    pub fn save_vectors(&self, dir: &Path) -> Result<()> {
        let mut table = EmbeddingTable::new(Tensor::stack(&self.samples)?, self.labels.clone())?;
        table.class_names = Some(self.class_names.clone());
        table.save(dir)
    }

    /// One subdirectory per class (sorted by name) holding `.ppm` files (sorted by name).
    pub fn load_image_folder(root: &Path) -> Result<LabeledSet> {
        let mut classes: Vec<_> = read_dir_sorted(root)?
            .into_iter()
            .filter(|p| p.is_dir())
            .collect();
        classes.sort();
        if classes.is_empty() {
            return Err(Error::format(root, "no class subdirectories"));
        }
        let mut samples = Vec::new();
        let mut labels = Vec::new();
        let mut names = Vec::new();
        for (c, dir) in classes.iter().enumerate() {
            let files: Vec<_> = read_dir_sorted(dir)?
                .into_iter()
                .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("ppm")))
                .collect();
            if files.is_empty() {
                return Err(Error::format(dir, "class directory has no .ppm files"));
            }
            for f in files {
                let img = read_ppm(&f)?;
                if let Some(first) = samples.first() {
                    let first: &Tensor = first;
                    if first.dims() != img.dims() {
                        return Err(Error::format(
                            &f,
                            format!("image dims {:?} differ from {:?}", img.dims(), first.dims()),
                        ));
                    }
                }
                samples.push(img);
                labels.push(c);
            }
            names.push(
                dir.file_name()
                    .unwrap_or_default()
                    .to_string_lossy()
                    .into_owned(),
            );
        }
        LabeledSet::with_names(samples, labels, names)
    }

    /// Writes `root/<class name>/<index>.ppm`.
    pub fn save_image_folder(&self, root: &Path) -> Result<()> {
        for (i, (img, &l)) in self.samples.iter().zip(&self.labels).enumerate() {
            let dir = root.join(&self.class_names[l]);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            crate::imgparam::export_ppm(img, dir.join(format!("{i:05}.ppm")))?;
        }
        Ok(())
    }

    /// Loads whichever layout `path` holds.
    pub fn load(path: &Path) -> Result<LabeledSet> {
        if path.join("features.ndt").exists() {
            Self::load_vectors(path)
        } else {
            Self::load_image_folder(path)
        }
    }
}

fn read_dir_sorted(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<_>>()?;
    v.sort();
    Ok(v)
}

/// Source of real training batches for distillation.
pub trait RealBatchProvider {
    fn num_classes(&self) -> usize;

    /// Draws `n` samples uniformly without replacement (cycling through fresh
    /// permutations when `n` exceeds the dataset size).
    fn draw(&self, stream: &mut RngStream, n: usize) -> (Vec<&Tensor>, Vec<usize>);
}

impl RealBatchProvider for LabeledSet {
    fn num_classes(&self) -> usize {
        LabeledSet::num_classes(self)
    }

    fn draw(&self, stream: &mut RngStream, n: usize) -> (Vec<&Tensor>, Vec<usize>) {
        let mut idx = Vec::with_capacity(n);
        while idx.len() < n {
            let perm = stream.shuffle(self.len());
            idx.extend(perm.into_iter().take(n - idx.len()));
        }
        (
            idx.iter().map(|&i| &self.samples[i]).collect(),
            idx.iter().map(|&i| self.labels[i]).collect(),
        )
    }
}

/// Evaluation preprocessing at working resolution `r`: resize the shorter side to
/// `ceil(8r/7)` (bilinear), then take the central `r x r` crop. At `r = 224` this is the
/// usual resize-256 / center-crop-224 recipe.
pub fn eval_preprocess(img: &Tensor, r: usize) -> Result<Tensor> {
    let (c, h, w) = match *img.dims() {
        [c, h, w] => (c, h, w),
        _ => {
            return Err(Error::invalid(format!(
                "expected C x H x W, got {:?}",
                img.dims()
            )))
        }
    };
    let short = (8 * r).div_ceil(7);
    let (nh, nw) = if h <= w {
        (
            short,
            ((w * short) as f64 / h as f64).round().max(1.0) as usize,
        )
    } else {
        (
            ((h * short) as f64 / w as f64).round().max(1.0) as usize,
            short,
        )
    };
    let resized = bilinear_resize(img, nh, nw)?;
    let top = (nh - r) / 2;
    let left = (nw - r) / 2;
    let src = resized.data();
    Ok(Tensor::from_fn(&[c, r, r], |i| {
        let ch = i / (r * r);
        let y = (i / r) % r;
        let x = i % r;
        src[(ch * nh + top + y) * nw + left + x]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set() -> LabeledSet {
        let samples = (0..9).map(|i| Tensor::filled(&[2], i as f64)).collect();
        LabeledSet::new(samples, (0..9).map(|i| i % 3).collect()).unwrap()
    }

    #[test]
    fn validation() {
        assert!(LabeledSet::new(vec![], vec![]).is_err());
        assert!(
            LabeledSet::new(vec![Tensor::zeros(&[2]), Tensor::zeros(&[3])], vec![0, 0]).is_err()
        );
        assert!(
            LabeledSet::new(vec![Tensor::zeros(&[2]), Tensor::zeros(&[2])], vec![0, 2]).is_err()
        );
    }

    #[test]
    fn draw_covers_without_replacement() {
        let s = set();
        let (_, labels) = s.draw(&mut RngStream::new(1, 1), 9);
        let mut counts = [0; 3];
        labels.iter().for_each(|&l| counts[l] += 1);
        assert_eq!(counts, [3, 3, 3]);
        let (x, _) = s.draw(&mut RngStream::new(1, 1), 20);
        assert_eq!(x.len(), 20);
    }

    #[test]
    fn stratified_split() {
        let s = set();
        let (train, held) = s.split(1.0 / 3.0, &mut RngStream::new(0, 0));
        assert_eq!(train.len(), 6);
        assert_eq!(held.len(), 3);
        let mut c = held.labels.clone();
        c.sort();
        assert_eq!(c, vec![0, 1, 2]);
    }

    #[test]
    fn eval_preprocess_geometry() {
        let img = Tensor::filled(&[3, 32, 48], 0.25);
        let out = eval_preprocess(&img, 32).unwrap();
        assert_eq!(out.dims(), &[3, 32, 32]);
        assert!(out.data().iter().all(|&v| (v - 0.25).abs() < 1e-15));
        // 224 -> shorter side 256
        assert_eq!((8 * 224usize).div_ceil(7), 256);
    }

    #[test]
    fn image_folder_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = RngStream::new(3, 3);
        let samples: Vec<Tensor> = (0..4)
            .map(|_| Tensor::from_fn(&[3, 4, 4], |_| s.uniform01()))
            .collect();
        let set = LabeledSet::with_names(
            samples,
            vec![0, 1, 0, 1],
            vec!["b_cls".into(), "a_cls".into()],
        )
        .unwrap();
        set.save_image_folder(dir.path()).unwrap();
        let back = LabeledSet::load(dir.path()).unwrap();
        // class ids follow sorted directory names
        assert_eq!(back.class_names, vec!["a_cls", "b_cls"]);
        assert_eq!(back.labels, vec![0, 0, 1, 1]);
        assert!(back.samples[0].max_abs_diff(&set.samples[1]) <= 0.5 / 255.0 + 1e-12);
    }
}
