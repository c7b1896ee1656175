use crate::encoder::EmbeddingTable;
use crate::error::{Error, Result};
use crate::numcore::tensor::dot;
use crate::numcore::Tensor;

/// Cosine similarity; zero vectors are treated as orthogonal to everything.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot(a, b) / (na * nb)
}

fn unit_rows(t: &Tensor) -> Vec<Vec<f64>> {
    (0..t.rows())
        .map(|i| {
            let r = t.row(i);
            let n = dot(r, r).sqrt();
            if n == 0.0 {
                vec![0.0; r.len()]
            } else {
                r.iter().map(|v| v / n).collect()
            }
        })
        .collect()
}

/// 1-NN classification by cosine similarity. Ties go to the lowest train index.
pub fn knn_eval(train: &EmbeddingTable, test: &EmbeddingTable) -> Result<f64> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::invalid("knn_eval needs non-empty tables"));
    }
    if train.dim() != test.dim() {
        return Err(Error::shape(
            "knn_eval",
            &[train.len(), test.dim()],
            train.features.dims(),
        ));
    }
    let tr = unit_rows(&train.features);
    let te = unit_rows(&test.features);
    let hits = te
        .iter()
        .zip(&test.labels)
        .filter(|(q, &label)| {
            let mut best = 0;
            let mut best_sim = f64::NEG_INFINITY;
            for (j, r) in tr.iter().enumerate() {
                let s = dot(q, r);
                if s > best_sim {
                    best_sim = s;
                    best = j;
                }
            }
            train.labels[best] == label
        })
        .count();
    Ok(hits as f64 / test.len() as f64)
}

/// Indices of the `k` most cosine-similar rows to row `i`, self excluded. Ties prefer lower
/// indices.
fn neighbor_sets(rows: &[Vec<f64>], k: usize) -> Vec<Vec<usize>> {
    let n = rows.len();
    (0..n)
        .map(|i| {
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (dot(&rows[i], &rows[j]), j))
                .collect();
            cand.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let mut top: Vec<usize> = cand.into_iter().take(k).map(|(_, j)| j).collect();
            top.sort_unstable();
            top
        })
        .collect()
}

/// Mean over rows of the fraction of shared cosine `k`-nearest neighbors between two
/// embeddings of the same samples.
pub fn mutual_knn_alignment(a: &Tensor, b: &Tensor, k: usize) -> Result<f64> {
    if a.dims().len() != 2 || b.dims().len() != 2 || a.rows() != b.rows() {
        return Err(Error::invalid(format!(
            "alignment needs two 2-D tables with equal row counts, got {:?} and {:?}",
            a.dims(),
            b.dims()
        )));
    }
    let n = a.rows();
    if k == 0 || k >= n {
        return Err(Error::invalid(format!("alignment k={k} must be in 1..{n}")));
    }
    let na = neighbor_sets(&unit_rows(a), k);
    let nb = neighbor_sets(&unit_rows(b), k);
    let total: usize = na
        .iter()
        .zip(&nb)
        .map(|(x, y)| x.iter().filter(|j| y.binary_search(j).is_ok()).count())
        .sum();
    Ok(total as f64 / (n * k) as f64)
}
