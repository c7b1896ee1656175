//! Embedding tables: `n x f` features plus per-row labels.
//!
//! On disk a table is a directory with `features.ndt` (float64 `[n, f]`), `labels.ndt`
//! (uint32 `[n]`), an optional `names.txt` (one class name per line) and an optional
//! `manifest.txt` of `key=value` lines (for example the layer that produced external
//! features). When the manifest declares `feature_dim` or `count`, they must match the files.

use std::fs;
use std::path::Path;

use super::Encoder;
use crate::error::{Error, Result};
use crate::numcore::{ndt, Tensor};

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    pub features: Tensor,
    pub labels: Vec<usize>,
    pub class_names: Option<Vec<String>>,
    pub manifest: Vec<(String, String)>,
}

impl EmbeddingTable {
    pub fn new(features: Tensor, labels: Vec<usize>) -> Result<Self> {
        if features.dims().len() != 2 {
            return Err(Error::invalid(format!(
                "embedding features must be 2-D, got {:?}",
                features.dims()
            )));
        }
        if features.rows() != labels.len() {
            return Err(Error::invalid(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        Ok(EmbeddingTable {
            features,
            labels,
            class_names: None,
            manifest: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.row_len()
    }

    pub fn num_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    /// Checks that every class id in `0..num_classes` occurs at least once.
    pub fn validate_contiguous(&self) -> Result<()> {
        let mut seen = vec![false; self.num_classes()];
        for &l in &self.labels {
            seen[l] = true;
        }
        match seen.iter().position(|s| !s) {
            Some(missing) => Err(Error::invalid(format!("class {missing} has no rows"))),
            None => Ok(()),
        }
    }

    pub fn manifest_value(&self, key: &str) -> Option<&str> {
        self.manifest
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Rows selected by index, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<EmbeddingTable> {
        let rows: Vec<Tensor> = indices
            .iter()
            .map(|&i| Tensor::new(vec![self.dim()], self.row(i).to_vec()))
            .collect::<Result<_>>()?;
        let mut t = EmbeddingTable::new(
            Tensor::stack(&rows)?,
            indices.iter().map(|&i| self.labels[i]).collect(),
        )?;
        t.class_names = self.class_names.clone();
        Ok(t)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        ndt::write_f64(dir.join("features.ndt"), &self.features)?;
        let labels: Vec<u32> = self.labels.iter().map(|&l| l as u32).collect();
        ndt::write_u32(dir.join("labels.ndt"), &[labels.len()], &labels)?;
        if let Some(names) = &self.class_names {
            let p = dir.join("names.txt");
            let mut text = names.join("\n");
            text.push('\n');
            fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        }
        if !self.manifest.is_empty() {
            let p = dir.join("manifest.txt");
            let text: String = self
                .manifest
                .iter()
                .map(|(k, v)| format!("{k}={v}\n"))
                .collect();
            fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<EmbeddingTable> {
        let fpath = dir.join("features.ndt");
        let lpath = dir.join("labels.ndt");
        let features = ndt::read_f64(&fpath)?;
        if features.dims().len() != 2 {
            return Err(Error::format(
                &fpath,
                format!("expected [n, f], got {:?}", features.dims()),
            ));
        }
        let (ldims, labels) = ndt::read_u32(&lpath)?;
        if ldims.len() != 1 || ldims[0] != features.rows() {
            return Err(Error::format(
                &lpath,
                format!(
                    "labels dims {ldims:?} do not match {} feature rows",
                    features.rows()
                ),
            ));
        }
        let mut table =
            EmbeddingTable::new(features, labels.into_iter().map(|l| l as usize).collect())?;
        let npath = dir.join("names.txt");
        if npath.exists() {
            let text = fs::read_to_string(&npath).map_err(|e| Error::io(&npath, e))?;
            table.class_names = Some(text.lines().map(str::to_string).collect());
        }
        let mpath = dir.join("manifest.txt");
        if mpath.exists() {
            let text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| Error::format(&mpath, format!("malformed line `{line}`")))?;
                table
                    .manifest
                    .push((k.trim().to_string(), v.trim().to_string()));
            }
            for (key, actual) in [("feature_dim", table.dim()), ("count", table.len())] {
                if let Some(v) = table.manifest_value(key) {
                    if v.parse::<usize>().ok() != Some(actual) {
                        return Err(Error::format(
                            &mpath,
                            format!("{key}={v} but files hold {actual}"),
                        ));
                    }
                }
            }
        }
        Ok(table)
    }
}

/// Encodes samples in batches; row `i` equals `enc.forward` of sample `i` alone.
pub fn embed_dataset(
    enc: &dyn Encoder,
    samples: &[Tensor],
    labels: &[usize],
    batch_size: usize,
) -> Result<EmbeddingTable> {
    if samples.is_empty() {
        return Err(Error::invalid("cannot embed an empty dataset"));
    }
    if samples.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} samples but {} labels",
            samples.len(),
            labels.len()
        )));
    }
    let mut data = Vec::with_capacity(samples.len() * enc.feature_dim());
    for chunk in samples.chunks(batch_size.max(1)) {
        data.extend_from_slice(enc.encode(chunk)?.data());
    }
    EmbeddingTable::new(
        Tensor::new(vec![samples.len(), enc.feature_dim()], data)?,
        labels.to_vec(),
    )
}
