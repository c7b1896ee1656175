//! Bilinear resampling and its exact adjoint.
//!
//! Output sample `d` along an axis reads source coordinate
//! `s = (d + 0.5) * (extent / out) - 0.5`, clamped to `[0, extent - 1]`, inside a window
//! `[offset, offset + extent)` of the source axis. A plain resize uses the full axis as the
//! window; random-resized-crop uses a sub-window, and a horizontal flip mirrors the indices.
//! Because every output is a convex combination of inputs, a constant image maps to the
//! same constant.

use crate::error::{Error, Result};
use crate::numcore::Tensor;

/// Per-output-index interpolation taps along one axis.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisMap {
    in_len: usize,
    taps: Vec<(usize, usize, f64)>,
}

impl AxisMap {
    pub fn new(
        in_len: usize,
        out_len: usize,
        offset: usize,
        extent: usize,
        mirror: bool,
    ) -> Result<Self> {
        if in_len == 0 || out_len == 0 || extent == 0 || offset + extent > in_len {
            return Err(Error::invalid(format!(
                "bad resample axis: in={in_len} out={out_len} offset={offset} extent={extent}"
            )));
        }
        let scale = extent as f64 / out_len as f64;
        let map = |i: usize| {
            if mirror {
                in_len - 1 - (offset + i)
            } else {
                offset + i
            }
        };
        let taps = (0..out_len)
            .map(|d| {
                let s = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (extent - 1) as f64);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(extent - 1);
                let t = s - i0 as f64;
                (map(i0), map(i1), t)
            })
            .collect();
        Ok(AxisMap { in_len, taps })
    }

    pub fn resize(in_len: usize, out_len: usize) -> Result<Self> {
        Self::new(in_len, out_len, 0, in_len, false)
    }

    pub fn in_len(&self) -> usize {
        self.in_len
    }

    pub fn out_len(&self) -> usize {
        self.taps.len()
    }
}

fn image_dims(op: &'static str, img: &Tensor) -> Result<(usize, usize, usize)> {
    match *img.dims() {
        [c, h, w] => Ok((c, h, w)),
        _ => Err(Error::invalid(format!(
            "{op}: expected a C x H x W tensor, got dims {:?}",
            img.dims()
        ))),
    }
}

/// Separable bilinear sampling of a `C x H x W` image.
pub fn resample(img: &Tensor, rows: &AxisMap, cols: &AxisMap) -> Result<Tensor> {
    let (c, h, w) = image_dims("resample", img)?;
    if h != rows.in_len || w != cols.in_len {
        return Err(Error::shape(
            "resample",
            &[c, rows.in_len, cols.in_len],
            img.dims(),
        ));
    }
    img.ensure_finite("resample")?;
    let (oh, ow) = (rows.out_len(), cols.out_len());
    let mut out = Tensor::zeros(&[c, oh, ow]);
    let src = img.data();
    let dst = out.data_mut();
    for ch in 0..c {
        let plane = &src[ch * h * w..(ch + 1) * h * w];
        let oplane = &mut dst[ch * oh * ow..(ch + 1) * oh * ow];
        for (y, &(r0, r1, ty)) in rows.taps.iter().enumerate() {
            let row0 = &plane[r0 * w..(r0 + 1) * w];
            let row1 = &plane[r1 * w..(r1 + 1) * w];
            for (x, &(c0, c1, tx)) in cols.taps.iter().enumerate() {
                let top = (1.0 - tx) * row0[c0] + tx * row0[c1];
                let bot = (1.0 - tx) * row1[c0] + tx * row1[c1];
                oplane[y * ow + x] = (1.0 - ty) * top + ty * bot;
            }
        }
    }
    Ok(out)
}

/// Transpose of [`resample`]: scatters `upstream` (C x out_h x out_w) back onto the source grid.
pub fn resample_vjp(upstream: &Tensor, rows: &AxisMap, cols: &AxisMap) -> Result<Tensor> {
    let (c, oh, ow) = image_dims("resample_vjp", upstream)?;
    if oh != rows.out_len() || ow != cols.out_len() {
        return Err(Error::shape(
            "resample_vjp",
            &[c, rows.out_len(), cols.out_len()],
            upstream.dims(),
        ));
    }
    upstream.ensure_finite("resample_vjp")?;
    let (h, w) = (rows.in_len, cols.in_len);
    let mut out = Tensor::zeros(&[c, h, w]);
    let src = upstream.data();
    let dst = out.data_mut();
    for ch in 0..c {
        let uplane = &src[ch * oh * ow..(ch + 1) * oh * ow];
        let plane = &mut dst[ch * h * w..(ch + 1) * h * w];
        for (y, &(r0, r1, ty)) in rows.taps.iter().enumerate() {
            for (x, &(c0, c1, tx)) in cols.taps.iter().enumerate() {
                let g = uplane[y * ow + x];
                if g == 0.0 {
                    continue;
                }
                let gt = (1.0 - ty) * g;
                let gb = ty * g;
                plane[r0 * w + c0] += (1.0 - tx) * gt;
                plane[r0 * w + c1] += tx * gt;
                plane[r1 * w + c0] += (1.0 - tx) * gb;
                plane[r1 * w + c1] += tx * gb;
            }
        }
    }
    Ok(out)
}

/// Resizes a `C x h x w` image to `C x out_h x out_w` with half-pixel-center bilinear sampling.
pub fn bilinear_resize(img: &Tensor, out_h: usize, out_w: usize) -> Result<Tensor> {
    let (_, h, w) = image_dims("bilinear_resize", img)?;
    resample(
        img,
        &AxisMap::resize(h, out_h)?,
        &AxisMap::resize(w, out_w)?,
    )
}

/// Exact adjoint of [`bilinear_resize`] from an `h x w` source.
pub fn bilinear_resize_vjp(upstream: &Tensor, h: usize, w: usize) -> Result<Tensor> {
    let (_, oh, ow) = image_dims("bilinear_resize_vjp", upstream)?;
    resample_vjp(upstream, &AxisMap::resize(h, oh)?, &AxisMap::resize(w, ow)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::RngStream;
    use proptest::prelude::*;

    fn random(dims: &[usize], seed: u64) -> Tensor {
        let mut s = RngStream::new(seed, 11);
        Tensor::from_fn(dims, |_| s.normal())
    }

    /// Reference sampler evaluating the coordinate formula pixel by pixel.
    fn oracle_resize(img: &Tensor, oh: usize, ow: usize) -> Tensor {
        let (c, h, w) = (img.dims()[0], img.dims()[1], img.dims()[2]);
        let coord = |d: usize, inl: usize, outl: usize| {
            let s = ((d as f64 + 0.5) * inl as f64 / outl as f64 - 0.5)
                .max(0.0)
                .min((inl - 1) as f64);
            let i0 = s.floor() as usize;
            (i0, (i0 + 1).min(inl - 1), s - i0 as f64)
        };
        let at = |ch: usize, y: usize, x: usize| img.data()[(ch * h + y) * w + x];
        Tensor::from_fn(&[c, oh, ow], |idx| {
            let ch = idx / (oh * ow);
            let y = (idx / ow) % oh;
            let x = idx % ow;
            let (y0, y1, ty) = coord(y, h, oh);
            let (x0, x1, tx) = coord(x, w, ow);
            (1.0 - ty) * ((1.0 - tx) * at(ch, y0, x0) + tx * at(ch, y0, x1))
                + ty * ((1.0 - tx) * at(ch, y1, x0) + tx * at(ch, y1, x1))
        })
    }

    #[test]
    fn same_size_is_identity() {
        let x = random(&[3, 5, 7], 1);
        assert_eq!(bilinear_resize(&x, 5, 7).unwrap(), x);
        assert_eq!(bilinear_resize_vjp(&x, 5, 7).unwrap(), x);
    }

    #[test]
    fn constant_is_preserved() {
        let x = Tensor::filled(&[2, 3, 5], 0.37);
        for (oh, ow) in [(1, 1), (7, 2), (16, 16), (3, 5)] {
            let y = bilinear_resize(&x, oh, ow).unwrap();
            assert!(y.data().iter().all(|&v| (v - 0.37).abs() < 1e-15));
        }
    }

    #[test]
    fn two_by_two_to_four_by_four() {
        // Source [[0,1],[2,3]] is the plane 2*y + x, so bilinear sampling is exact on it:
        // coordinates along each axis are 0, 0.25, 0.75, 1.
        let x = Tensor::new(vec![1, 2, 2], vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let y = bilinear_resize(&x, 4, 4).unwrap();
        let c = [0.0, 0.25, 0.75, 1.0];
        let expected: Vec<f64> = c
            .iter()
            .flat_map(|&r| c.iter().map(move |&q| 2.0 * r + q))
            .collect();
        assert_eq!(y.data(), &expected[..]);
        assert!(y.max_abs_diff(&oracle_resize(&x, 4, 4)) < 1e-15);
    }

    #[test]
    fn matches_oracle_on_random_shapes() {
        let x = random(&[3, 5, 9], 3);
        for (oh, ow) in [(10, 3), (2, 17), (5, 9), (1, 1)] {
            let y = bilinear_resize(&x, oh, ow).unwrap();
            assert!(y.max_abs_diff(&oracle_resize(&x, oh, ow)) < 1e-14);
        }
    }

    #[test]
    fn upsample_by_two_conserves_mass() {
        // Column sums of the explicit resize matrix.
        let ones = Tensor::filled(&[1, 8, 8], 1.0);
        let g = bilinear_resize_vjp(&ones, 4, 4).unwrap();
        assert!(
            g.data().iter().all(|&v| (v - 4.0).abs() < 1e-12),
            "{:?}",
            g.data()
        );
    }

    #[test]
    fn adjoint_three_to_five() {
        let x = random(&[3, 3, 3], 5);
        let y = random(&[3, 5, 5], 6);
        let lhs = bilinear_resize(&x, 5, 5).unwrap().dot(&y);
        let rhs = x.dot(&bilinear_resize_vjp(&y, 3, 3).unwrap());
        assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn bad_shapes() {
        let x = Tensor::zeros(&[3, 4]);
        assert!(bilinear_resize(&x, 2, 2).is_err());
        let up = Tensor::zeros(&[1, 4, 4]);
        assert!(resample_vjp(
            &up,
            &AxisMap::resize(2, 3).unwrap(),
            &AxisMap::resize(2, 4).unwrap()
        )
        .is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn adjoint_identity(h in 1usize..64, w in 1usize..64, oh in 1usize..64, ow in 1usize..64, seed in 0u64..1000) {
            let x = random(&[1, h, w], seed);
            let y = random(&[1, oh, ow], seed + 1);
            let lhs = bilinear_resize(&x, oh, ow).unwrap().dot(&y);
            let rhs = x.dot(&bilinear_resize_vjp(&y, h, w).unwrap());
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }
    }
}
