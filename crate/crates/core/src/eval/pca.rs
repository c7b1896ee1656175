use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numcore::linalg::symmetric_eigen;
use crate::numcore::Tensor;

/// Projects mean-centered rows onto the top two principal axes. Each axis is signed so its
/// largest-magnitude coordinate is positive. Features of dimension 1 give a zero second column.
pub fn pca2(features: &Tensor) -> Result<Tensor> {
    if features.dims().len() != 2 || features.rows() == 0 {
        return Err(Error::invalid(format!(
            "pca2 needs an n x f table, got {:?}",
            features.dims()
        )));
    }
    let (n, f) = (features.rows(), features.row_len());
    let mut mean = vec![0.0; f];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(features.row(i)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            features
                .row(i)
                .iter()
                .zip(&mean)
                .map(|(v, m)| v - m)
                .collect()
        })
        .collect();
    let mut cov = vec![0.0; f * f];
    for r in &centered {
        for a in 0..f {
            for b in 0..f {
                cov[a * f + b] += r[a] * r[b];
            }
        }
    }
    cov.iter_mut().for_each(|c| *c /= n as f64);
    let (_, vectors) = symmetric_eigen(&cov, f);
    let mut axes: Vec<Vec<f64>> = vectors.into_iter().take(2).collect();
    for ax in &mut axes {
        let lead = ax
            .iter()
            .copied()
            .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if lead < 0.0 {
            ax.iter_mut().for_each(|v| *v = -*v);
        }
    }
    let mut out = Tensor::zeros(&[n, 2]);
    for (i, r) in centered.iter().enumerate() {
        for (k, ax) in axes.iter().enumerate() {
            out.row_mut(i)[k] = r.iter().zip(ax).map(|(a, b)| a * b).sum();
        }
    }
    Ok(out)
}

/// `x,y,label` rows.
pub fn write_pca_csv(path: &Path, coords: &Tensor, labels: &[usize]) -> Result<()> {
    let mut s = String::from("x,y,label\n");
    for (i, l) in labels.iter().enumerate() {
        let r = coords.row(i);
        let _ = writeln!(s, "{},{},{}", r[0], r[1], l);
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}
