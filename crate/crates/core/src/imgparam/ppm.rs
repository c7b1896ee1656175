//! Binary PPM (P6) export and import for `3 x H x W` images with values in `[0, 1]`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numcore::Tensor;

/// Quantizes with round-half-up and clamps to `[0, 255]`.
#[inline]
pub fn quantize(v: f64) -> u8 {
    (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

pub fn encode_ppm(img: &Tensor) -> Result<Vec<u8>> {
    let (h, w) = match *img.dims() {
        [3, h, w] => (h, w),
        _ => {
            return Err(Error::invalid(format!(
                "PPM export needs a 3 x H x W image, got {:?}",
                img.dims()
            )))
        }
    };
    img.ensure_finite("export_ppm")?;
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    let plane = h * w;
    let d = img.data();
    out.reserve(3 * plane);
    for i in 0..plane {
        out.push(quantize(d[i]));
        out.push(quantize(d[plane + i]));
        out.push(quantize(d[2 * plane + i]));
    }
    Ok(out)
}

pub fn export_ppm(img: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_ppm(img)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self) -> std::result::Result<usize, String> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| "malformed PPM header".to_string())
    }
}

/// Decodes a P6 image with `maxval <= 255` to values in `[0, 1]`.
pub fn decode_ppm(bytes: &[u8]) -> std::result::Result<Tensor, String> {
    if bytes.len() < 2 || &bytes[..2] != b"P6" {
        return Err("not a binary PPM (missing P6 magic)".into());
    }
    let mut hdr = Header { bytes, pos: 2 };
    let w = hdr.number()?;
    let h = hdr.number()?;
    let maxval = hdr.number()?;
    if w == 0 || h == 0 || maxval == 0 || maxval > 255 {
        return Err(format!("unsupported PPM geometry {w}x{h} maxval {maxval}"));
    }
    // exactly one whitespace byte separates the header from the raster
    let start = hdr.pos + 1;
    let raster = bytes
        .get(start..start + 3 * w * h)
        .ok_or("truncated PPM raster")?;
    let plane = w * h;
    let mut img = Tensor::zeros(&[3, h, w]);
    let d = img.data_mut();
    let scale = 1.0 / maxval as f64;
    for i in 0..plane {
        for c in 0..3 {
            d[c * plane + i] = raster[3 * i + c] as f64 * scale;
        }
    }
    Ok(img)
}

pub fn read_ppm(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_ppm(&bytes).map_err(|m| Error::format(path, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::RngStream;

    #[test]
    fn half_grey_is_128() {
        let b = encode_ppm(&Tensor::filled(&[3, 2, 3], 0.5)).unwrap();
        let hdr = b"P6\n3 2\n255\n";
        assert_eq!(&b[..hdr.len()], hdr);
        assert!(b[hdr.len()..].iter().all(|&v| v == 128));
    }

    #[test]
    fn black_pixel_exact_bytes() {
        let b = encode_ppm(&Tensor::zeros(&[3, 1, 1])).unwrap();
        assert_eq!(b, b"P6\n1 1\n255\n\0\0\0");
    }

    #[test]
    fn clamps_out_of_range() {
        let img = Tensor::new(vec![3, 1, 1], vec![-0.3, 1.7, 1.0]).unwrap();
        let b = encode_ppm(&img).unwrap();
        assert_eq!(&b[b.len() - 3..], &[0, 255, 255]);
    }

    #[test]
    fn round_trip_within_quantization() {
        let mut s = RngStream::new(4, 0);
        let img = Tensor::from_fn(&[3, 5, 7], |_| s.uniform01());
        let back = decode_ppm(&encode_ppm(&img).unwrap()).unwrap();
        assert_eq!(back.dims(), img.dims());
        assert!(img.max_abs_diff(&back) <= 0.5 / 255.0 + 1e-12);
    }

    #[test]
    fn header_comments_and_errors() {
        let bytes = b"P6 # comment\n1 1\n255\n\x10\x20\x30";
        let img = decode_ppm(bytes).unwrap();
        assert!((img.data()[2] - 48.0 / 255.0).abs() < 1e-15);
        assert!(decode_ppm(b"P3\n1 1\n255\n").is_err());
        assert!(decode_ppm(b"P6\n2 2\n255\n\0\0\0").is_err());
    }
}
