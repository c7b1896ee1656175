//! 3x3 same-padded convolution and 2x2 average pooling on single `C x H x W` samples.

/// `out[o] = bias[o] + sum_i w[o, i] (*) input[i]` with zero padding of one pixel.
pub(crate) fn conv3x3(
    input: &[f64],
    cin: usize,
    h: usize,
    w: usize,
    weight: &[f64],
    bias: &[f64],
    cout: usize,
) -> Vec<f64> {
    let plane = h * w;
    let mut out = vec![0.0; cout * plane];
    for o in 0..cout {
        let oplane = &mut out[o * plane..(o + 1) * plane];
        oplane.iter_mut().for_each(|v| *v = bias[o]);
        for i in 0..cin {
            let iplane = &input[i * plane..(i + 1) * plane];
            let k = &weight[(o * cin + i) * 9..(o * cin + i + 1) * 9];
            for ky in 0..3 {
                for kx in 0..3 {
                    let wv = k[ky * 3 + kx];
                    // output rows y read input row y + ky - 1
                    let y_lo = if ky == 0 { 1 } else { 0 };
                    let y_hi = if ky == 2 { h - 1 } else { h };
                    let x_lo = if kx == 0 { 1 } else { 0 };
                    let x_hi = if kx == 2 { w - 1 } else { w };
                    for y in y_lo..y_hi {
                        let sy = y + ky - 1;
                        let orow = &mut oplane[y * w..(y + 1) * w];
                        let irow = &iplane[sy * w..(sy + 1) * w];
                        for x in x_lo..x_hi {
                            orow[x] += wv * irow[x + kx - 1];
                        }
                    }
                }
            }
        }
    }
    out
}

/// Input gradient of [`conv3x3`].
pub(crate) fn conv3x3_vjp(
    upstream: &[f64],
    cin: usize,
    h: usize,
    w: usize,
    weight: &[f64],
    cout: usize,
) -> Vec<f64> {
    let plane = h * w;
    let mut grad = vec![0.0; cin * plane];
    for o in 0..cout {
        let uplane = &upstream[o * plane..(o + 1) * plane];
        for i in 0..cin {
            let gplane = &mut grad[i * plane..(i + 1) * plane];
            let k = &weight[(o * cin + i) * 9..(o * cin + i + 1) * 9];
            for ky in 0..3 {
                for kx in 0..3 {
                    let wv = k[ky * 3 + kx];
                    let y_lo = if ky == 0 { 1 } else { 0 };
                    let y_hi = if ky == 2 { h - 1 } else { h };
                    let x_lo = if kx == 0 { 1 } else { 0 };
                    let x_hi = if kx == 2 { w - 1 } else { w };
                    for y in y_lo..y_hi {
                        let sy = y + ky - 1;
                        let urow = &uplane[y * w..(y + 1) * w];
                        let grow = &mut gplane[sy * w..(sy + 1) * w];
                        for x in x_lo..x_hi {
                            grow[x + kx - 1] += wv * urow[x];
                        }
                    }
                }
            }
        }
    }
    grad
}

/// 2x2 average pooling with stride 2; `h` and `w` must be even.
pub(crate) fn avgpool2(input: &[f64], c: usize, h: usize, w: usize) -> Vec<f64> {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = vec![0.0; c * oh * ow];
    for ch in 0..c {
        let ip = &input[ch * h * w..];
        for y in 0..oh {
            for x in 0..ow {
                let a = ip[(2 * y) * w + 2 * x] + ip[(2 * y) * w + 2 * x + 1];
                let b = ip[(2 * y + 1) * w + 2 * x] + ip[(2 * y + 1) * w + 2 * x + 1];
                out[(ch * oh + y) * ow + x] = 0.25 * (a + b);
            }
        }
    }
    out
}

pub(crate) fn avgpool2_vjp(upstream: &[f64], c: usize, h: usize, w: usize) -> Vec<f64> {
    let (oh, ow) = (h / 2, w / 2);
    let mut grad = vec![0.0; c * h * w];
    for ch in 0..c {
        for y in 0..oh {
            for x in 0..ow {
                let g = 0.25 * upstream[(ch * oh + y) * ow + x];
                let base = ch * h * w;
                grad[base + (2 * y) * w + 2 * x] = g;
                grad[base + (2 * y) * w + 2 * x + 1] = g;
                grad[base + (2 * y + 1) * w + 2 * x] = g;
                grad[base + (2 * y + 1) * w + 2 * x + 1] = g;
            }
        }
    }
    grad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::RngStream;

    fn naive_conv(
        input: &[f64],
        cin: usize,
        h: usize,
        w: usize,
        weight: &[f64],
        bias: &[f64],
        cout: usize,
    ) -> Vec<f64> {
        let mut out = vec![0.0; cout * h * w];
        for o in 0..cout {
            for y in 0..h as isize {
                for x in 0..w as isize {
                    let mut acc = bias[o];
                    for i in 0..cin {
                        for ky in 0..3isize {
                            for kx in 0..3isize {
                                let (sy, sx) = (y + ky - 1, x + kx - 1);
                                if sy >= 0 && sy < h as isize && sx >= 0 && sx < w as isize {
                                    acc += weight[((o * cin + i) * 9) + (ky * 3 + kx) as usize]
                                        * input[(i * h + sy as usize) * w + sx as usize];
                                }
                            }
                        }
                    }
                    out[(o * h + y as usize) * w + x as usize] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn conv_matches_naive_and_adjoint() {
        let mut s = RngStream::new(1, 0);
        let (cin, cout, h, w) = (2, 3, 5, 4);
        let x: Vec<f64> = s.normals(cin * h * w);
        let wt: Vec<f64> = s.normals(cout * cin * 9);
        let b: Vec<f64> = s.normals(cout);
        let y = conv3x3(&x, cin, h, w, &wt, &b, cout);
        let want = naive_conv(&x, cin, h, w, &wt, &b, cout);
        assert!(y.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-12));

        let u: Vec<f64> = s.normals(cout * h * w);
        let zero_b = vec![0.0; cout];
        let lhs: f64 = conv3x3(&x, cin, h, w, &wt, &zero_b, cout)
            .iter()
            .zip(&u)
            .map(|(a, b)| a * b)
            .sum();
        let rhs: f64 = conv3x3_vjp(&u, cin, h, w, &wt, cout)
            .iter()
            .zip(&x)
            .map(|(a, b)| a * b)
            .sum();
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn pool_adjoint() {
        let mut s = RngStream::new(2, 0);
        let x = s.normals(2 * 4 * 6);
        let u = s.normals(2 * 2 * 3);
        let lhs: f64 = avgpool2(&x, 2, 4, 6)
            .iter()
            .zip(&u)
            .map(|(a, b)| a * b)
            .sum();
        let rhs: f64 = avgpool2_vjp(&u, 2, 4, 6)
            .iter()
            .zip(&x)
            .map(|(a, b)| a * b)
            .sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
