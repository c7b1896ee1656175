//! Coreset baselines: one real sample per class.

use super::knn::cosine_similarity;
use crate::encoder::EmbeddingTable;
use crate::error::{Error, Result};
use crate::numcore::{RngStream, Tensor};

fn classes_of(labels: &[usize]) -> Result<Vec<Vec<usize>>> {
    let c = labels.iter().max().map_or(0, |m| m + 1);
    let mut by_class = vec![Vec::new(); c];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    if let Some(missing) = by_class.iter().position(Vec::is_empty) {
        return Err(Error::invalid(format!("class {missing} has no samples")));
    }
    Ok(by_class)
}

/// Highest cosine similarity to `target` among `candidates`; ties go to the earliest.
fn closest(emb: &EmbeddingTable, candidates: &[usize], target: &[f64]) -> usize {
    let mut best = candidates[0];
    let mut best_sim = f64::NEG_INFINITY;
    for &i in candidates {
        let s = cosine_similarity(emb.row(i), target);
        if s > best_sim {
            best_sim = s;
            best = i;
        }
    }
    best
}

/// A uniformly random sample of every class.
pub fn baseline_random(labels: &[usize], stream: &mut RngStream) -> Result<Vec<usize>> {
    Ok(classes_of(labels)?
        .into_iter()
        .map(|idx| idx[stream.below(idx.len())])
        .collect())
}

/// The sample of every class whose embedding is closest to that class's mean embedding.
pub fn baseline_centroids(emb: &EmbeddingTable) -> Result<Vec<usize>> {
    Ok(classes_of(&emb.labels)?
        .into_iter()
        .map(|idx| {
            let mut mean = vec![0.0; emb.dim()];
            for &i in &idx {
                for (m, v) in mean.iter_mut().zip(emb.row(i)) {
                    *m += v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= idx.len() as f64);
            closest(emb, &idx, &mean)
        })
        .collect())
}

/// The sample of every class whose embedding is closest to that class's distilled sample
/// embedding (`synthetic` row `c` for class `c`).
pub fn baseline_neighbors(emb: &EmbeddingTable, synthetic: &Tensor) -> Result<Vec<usize>> {
    let by_class = classes_of(&emb.labels)?;
    if synthetic.dims() != [by_class.len(), emb.dim()] {
        return Err(Error::shape(
            "baseline_neighbors",
            &[by_class.len(), emb.dim()],
            synthetic.dims(),
        ));
    }
    Ok(by_class
        .iter()
        .enumerate()
        .map(|(c, idx)| closest(emb, idx, synthetic.row(c)))
        .collect())
}
