//! Classifier gradients and the cosine gradient-matching objective.
//!
//! For a head `(W, b)` and features `z_i` with labels `y_i`, the mean cross-entropy has
//! `G_W = (1/N) sum_i (p_i - y_i) z_i^T` and `G_b = (1/N) sum_i (p_i - y_i)`. The matching loss
//! compares the synthetic and real gradients as flat vectors `s`, `r`:
//! `L = 1 - <s, r> / (|s| |r|)`.
//!
//! `dL/ds = -(1/|s|) (r/|r| - cos * s/|s|)`; reshaped into `(U, v)` this gives
//! `dL/dz_i = (1/N) [U^T (p_i - y_i) + W^T (diag(p_i) - p_i p_i^T)(U z_i + v)]`.

use super::head::LinearHead;
use crate::error::{Error, Result};
use crate::numcore::ops::{check_labels, softmax_in_place};
use crate::numcore::tensor::{dot, matvec, matvec_t_acc};
use crate::numcore::Tensor;

/// Gradient of the mean cross-entropy with respect to a linear head.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientPair {
    pub gw: Tensor,
    pub gb: Tensor,
}

impl GradientPair {
    pub fn dot(&self, other: &GradientPair) -> f64 {
        self.gw.dot(&other.gw) + self.gb.dot(&other.gb)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// The same gradient with the bias block zeroed, for matching on `W` alone.
    pub fn without_bias(mut self) -> Self {
        self.gb.data_mut().iter_mut().for_each(|v| *v = 0.0);
        self
    }

    /// `[vec(G_W); G_b]`.
    pub fn flatten(&self) -> Vec<f64> {
        self.gw
            .data()
            .iter()
            .chain(self.gb.data())
            .copied()
            .collect()
    }
}

fn check_features(op: &'static str, head: &LinearHead, z: &Tensor, labels: &[usize]) -> Result<()> {
    if z.dims().len() != 2 || z.row_len() != head.features() || z.rows() != labels.len() {
        return Err(Error::shape(op, &[labels.len(), head.features()], z.dims()));
    }
    if z.rows() == 0 {
        return Err(Error::invalid(format!("{op}: empty batch")));
    }
    z.ensure_finite(op)?;
    check_labels(labels, head.classes())
}

/// Mean cross-entropy of `head` on `(z, labels)` and its gradient with respect to the head.
pub fn class_loss_and_grad(
    head: &LinearHead,
    z: &Tensor,
    labels: &[usize],
) -> Result<(f64, GradientPair)> {
    check_features("class_loss_and_grad", head, z, labels)?;
    let (n, c, f) = (z.rows(), head.classes(), head.features());
    let mut gw = Tensor::zeros(&[c, f]);
    let mut gb = Tensor::zeros(&[c]);
    let mut loss = 0.0;
    let mut p = vec![0.0; c];
    for (i, &y) in labels.iter().enumerate() {
        let zi = z.row(i);
        head.logits_row(zi, &mut p);
        let lse = softmax_in_place(&mut p);
        let logit_y = dot(head.w.row(y), zi) + head.b.data()[y];
        loss += lse - logit_y;
        p[y] -= 1.0;
        for (k, &d) in p.iter().enumerate() {
            gb.data_mut()[k] += d;
            for (g, &zv) in gw.row_mut(k).iter_mut().zip(zi) {
                *g += d * zv;
            }
        }
    }
    let inv = 1.0 / n as f64;
    gw.scale(inv);
    gb.scale(inv);
    let loss = loss * inv;
    if !loss.is_finite() {
        return Err(Error::NonFinite {
            op: "class_loss_and_grad",
        });
    }
    Ok((loss, GradientPair { gw, gb }))
}

/// `1 - cos(s, r)`. Fails with [`Error::DegenerateGradient`] when either gradient is zero.
pub fn meta_loss(syn: &GradientPair, real: &GradientPair) -> Result<f64> {
    let (ns, nr) = (syn.norm(), real.norm());
    if ns == 0.0 || nr == 0.0 || !ns.is_finite() || !nr.is_finite() {
        return Err(Error::DegenerateGradient);
    }
    let cos = (syn.dot(real) / (ns * nr)).clamp(-1.0, 1.0);
    Ok(1.0 - cos)
}

/// Gradient of [`meta_loss`] with respect to the synthetic features `z_syn`, holding the
/// real gradient fixed. `g_syn` must be the gradient computed from `(head, z_syn, labels)`,
/// with the bias block zeroed in both pairs when matching on `W` only.
pub fn meta_grad_features(
    head: &LinearHead,
    z_syn: &Tensor,
    labels: &[usize],
    g_syn: &GradientPair,
    g_real: &GradientPair,
) -> Result<Tensor> {
    check_features("meta_grad_features", head, z_syn, labels)?;
    let (ns, nr) = (g_syn.norm(), g_real.norm());
    if ns == 0.0 || nr == 0.0 {
        return Err(Error::DegenerateGradient);
    }
    let cos = g_syn.dot(g_real) / (ns * nr);
    // (U, v) = dL/d(G_W, G_b)
    let coeff_r = -1.0 / (ns * nr);
    let coeff_s = cos / (ns * ns);
    let mut u = g_real.gw.clone();
    u.scale(coeff_r);
    u.axpy(coeff_s, &g_syn.gw);
    let mut v = g_real.gb.clone();
    v.scale(coeff_r);
    v.axpy(coeff_s, &g_syn.gb);

    let (n, c, f) = (z_syn.rows(), head.classes(), head.features());
    let inv = 1.0 / n as f64;
    let mut out = Tensor::zeros(&[n, f]);
    let mut p = vec![0.0; c];
    let mut a = vec![0.0; c];
    for (i, &y) in labels.iter().enumerate() {
        let zi = z_syn.row(i);
        head.logits_row(zi, &mut p);
        softmax_in_place(&mut p);
        // a = U z_i + v, then a <- (diag(p) - p p^T) a
        matvec(u.data(), c, f, zi, &mut a);
        for (ak, &vk) in a.iter_mut().zip(v.data()) {
            *ak += vk;
        }
        let pa = dot(&p, &a);
        for (ak, &pk) in a.iter_mut().zip(&p) {
            *ak = pk * (*ak - pa);
        }
        let row = out.row_mut(i);
        matvec_t_acc(head.w.data(), c, f, &a, row);
        p[y] -= 1.0;
        matvec_t_acc(u.data(), c, f, &p, row);
        row.iter_mut().for_each(|r| *r *= inv);
    }
    out.ensure_finite("meta_grad_features")?;
    Ok(out)
}
