use crate::error::{Error, Result};
use crate::numcore::{linalg, Tensor};

const MAX_CONDITION: f64 = 1e6;

/// Fixed per-pixel 3x3 channel transform, row-major.
///
/// Synthetic images are optimized in a decorrelated channel space; this matrix maps a
/// decorrelated pixel back to correlated RGB.
#[derive(Clone, Debug, PartialEq)]
pub struct ColorTransform {
    matrix: [f64; 9],
}

impl Default for ColorTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl ColorTransform {
    pub fn identity() -> Self {
        ColorTransform {
            matrix: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        }
    }

    pub fn from_matrix(matrix: [f64; 9]) -> Result<Self> {
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                op: "ColorTransform",
            });
        }
        let cond = linalg::condition_number(&matrix, 3);
        if cond >= MAX_CONDITION {
            return Err(Error::invalid(format!(
                "color transform is ill-conditioned (condition number {cond:.3e})"
            )));
        }
        Ok(ColorTransform { matrix })
    }

    pub fn matrix(&self) -> &[f64; 9] {
        &self.matrix
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    pub fn inverse(&self) -> ColorTransform {
        let inv = linalg::inverse(&self.matrix, 3).expect("invertible by construction");
        ColorTransform {
            matrix: inv.try_into().unwrap(),
        }
    }

    #[inline]
    pub fn apply_pixel(&self, p: [f64; 3]) -> [f64; 3] {
        let m = &self.matrix;
        [
            m[0] * p[0] + m[1] * p[1] + m[2] * p[2],
            m[3] * p[0] + m[4] * p[1] + m[5] * p[2],
            m[6] * p[0] + m[7] * p[1] + m[8] * p[2],
        ]
    }

    #[inline]
    pub fn apply_pixel_transpose(&self, p: [f64; 3]) -> [f64; 3] {
        let m = &self.matrix;
        [
            m[0] * p[0] + m[3] * p[1] + m[6] * p[2],
            m[1] * p[0] + m[4] * p[1] + m[7] * p[2],
            m[2] * p[0] + m[5] * p[1] + m[8] * p[2],
        ]
    }

    /// Applies the transform to every pixel of a `3 x H x W` image.
    pub fn apply(&self, img: &Tensor) -> Result<Tensor> {
        self.map_pixels(img, |p| self.apply_pixel(p))
    }

    pub fn apply_transpose(&self, img: &Tensor) -> Result<Tensor> {
        self.map_pixels(img, |p| self.apply_pixel_transpose(p))
    }

    fn map_pixels(&self, img: &Tensor, f: impl Fn([f64; 3]) -> [f64; 3]) -> Result<Tensor> {
        if img.dims().len() != 3 || img.dims()[0] != 3 {
            return Err(Error::invalid(format!(
                "color transform needs a 3 x H x W image, got {:?}",
                img.dims()
            )));
        }
        let plane = img.dims()[1] * img.dims()[2];
        let mut out = img.clone();
        let src = img.data();
        let dst = out.data_mut();
        for i in 0..plane {
            let q = f([src[i], src[plane + i], src[2 * plane + i]]);
            dst[i] = q[0];
            dst[plane + i] = q[1];
            dst[2 * plane + i] = q[2];
        }
        Ok(out)
    }
}

/// Channel covariance (population) over all pixels of a set of `3 x H x W` images.
pub fn channel_covariance(images: &[Tensor]) -> Result<[f64; 9]> {
    let mut count = 0usize;
    let mut sum = [0.0; 3];
    for img in images {
        if img.dims().len() != 3 || img.dims()[0] != 3 {
            return Err(Error::invalid(format!(
                "expected 3 x H x W images, got {:?}",
                img.dims()
            )));
        }
        let plane = img.row_len();
        for (c, s) in sum.iter_mut().enumerate() {
            *s += img.row(c).iter().sum::<f64>();
        }
        count += plane;
    }
    if count == 0 {
        return Err(Error::invalid("no images to estimate channel covariance"));
    }
    let mean = sum.map(|s| s / count as f64);
    let mut cov = [0.0; 9];
    for img in images {
        let (r, g, b) = (img.row(0), img.row(1), img.row(2));
        for i in 0..r.len() {
            let d = [r[i] - mean[0], g[i] - mean[1], b[i] - mean[2]];
            for a in 0..3 {
                for c in 0..3 {
                    cov[a * 3 + c] += d[a] * d[c];
                }
            }
        }
    }
    Ok(cov.map(|v| v / count as f64))
}

/// Cholesky factor of the dataset's channel covariance, or identity when the covariance
/// is near-singular.
pub fn color_matrix_from_dataset(images: &[Tensor]) -> Result<ColorTransform> {
    let cov = channel_covariance(images)?;
    let (eig, _) = linalg::symmetric_eigen(&cov, 3);
    if eig[2] <= 0.0 || eig[0] / eig[2] >= MAX_CONDITION {
        return Ok(ColorTransform::identity());
    }
    match linalg::cholesky(&cov, 3) {
        Some(l) => {
            ColorTransform::from_matrix(l.try_into().unwrap()).or(Ok(ColorTransform::identity()))
        }
        None => Ok(ColorTransform::identity()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::RngStream;

    fn images_from(
        pixels: impl Fn(&mut RngStream) -> [f64; 3],
        n: usize,
        seed: u64,
    ) -> Vec<Tensor> {
        let mut s = RngStream::new(seed, 0);
        (0..n)
            .map(|_| {
                let mut img = Tensor::zeros(&[3, 16, 16]);
                for i in 0..256 {
                    let p = pixels(&mut s);
                    for c in 0..3 {
                        img.data_mut()[c * 256 + i] = p[c];
                    }
                }
                img
            })
            .collect()
    }

    #[test]
    fn grayscale_falls_back_to_identity() {
        let imgs = images_from(
            |s| {
                let v = s.uniform01();
                [v, v, v]
            },
            4,
            1,
        );
        assert!(color_matrix_from_dataset(&imgs).unwrap().is_identity());
    }

    #[test]
    fn independent_unit_variance_gives_near_identity() {
        let imgs = images_from(|s| [s.normal(), s.normal(), s.normal()], 200, 2);
        let ct = color_matrix_from_dataset(&imgs).unwrap();
        let id = ColorTransform::identity();
        for (a, b) in ct.matrix().iter().zip(id.matrix()) {
            assert!((a - b).abs() < 0.02, "{:?}", ct.matrix());
        }
        // composed with its inverse
        let inv = ct.inverse();
        let p = [0.3, -1.1, 2.0];
        let q = inv.apply_pixel(ct.apply_pixel(p));
        for (a, b) in p.iter().zip(q) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn recovers_known_covariance() {
        // data = A * noise has covariance A A^T; the factor must reproduce the
        // sample covariance exactly and the population one to sampling accuracy.
        let a = [0.5, 0.0, 0.0, 0.3, 0.2, 0.0, 0.1, 0.25, 0.15];
        let imgs = images_from(
            |s| {
                let n = [s.normal(), s.normal(), s.normal()];
                [
                    a[0] * n[0],
                    a[3] * n[0] + a[4] * n[1],
                    a[6] * n[0] + a[7] * n[1] + a[8] * n[2],
                ]
            },
            100,
            3,
        );
        let cov = channel_covariance(&imgs).unwrap();
        let l = color_matrix_from_dataset(&imgs).unwrap();
        let m = l.matrix();
        for r in 0..3 {
            for c in 0..3 {
                let llt: f64 = (0..3).map(|k| m[r * 3 + k] * m[c * 3 + k]).sum();
                assert!((llt - cov[r * 3 + c]).abs() < 1e-6);
                let sigma: f64 = (0..3).map(|k| a[r * 3 + k] * a[c * 3 + k]).sum();
                assert!((llt - sigma).abs() < 0.01);
            }
        }
    }

    #[test]
    fn rejects_singular_matrix() {
        assert!(
            ColorTransform::from_matrix([1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]).is_err()
        );
    }

    #[test]
    fn transpose_is_adjoint() {
        let ct =
            ColorTransform::from_matrix([1.0, 0.2, 0.0, 0.3, 1.0, 0.1, 0.0, 0.5, 2.0]).unwrap();
        let x = [0.3, -0.4, 1.2];
        let y = [2.0, 0.1, -0.7];
        let ax = ct.apply_pixel(x);
        let aty = ct.apply_pixel_transpose(y);
        let lhs: f64 = ax.iter().zip(y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(aty).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-14);
    }
}
