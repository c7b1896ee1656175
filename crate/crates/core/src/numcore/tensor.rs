use crate::error::{Error, Result};

/// Dense row-major array of `f64`.
///
/// Every dimension is positive and `data.len()` equals the product of the
/// dimensions. A zero-dimensional tensor holds a single scalar.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor, rejecting inconsistent shapes and non-finite entries.
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        check_dims(&dims)?;
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(Error::invalid(format!(
                "tensor dims {dims:?} need {n} values, got {}",
                data.len()
            )));
        }
        let t = Tensor { dims, data };
        t.ensure_finite("Tensor::new")?;
        Ok(t)
    }

    pub fn zeros(dims: &[usize]) -> Self {
        Self::filled(dims, 0.0)
    }

    pub fn filled(dims: &[usize], value: f64) -> Self {
        assert!(dims.iter().all(|&d| d > 0), "tensor dims must be positive");
        let n = dims.iter().product();
        Tensor {
            dims: dims.to_vec(),
            data: vec![value; n],
        }
    }

    pub fn from_vec(data: Vec<f64>) -> Result<Self> {
        let n = data.len();
        Self::new(vec![n], data)
    }

    pub fn from_fn(dims: &[usize], mut f: impl FnMut(usize) -> f64) -> Self {
        let mut t = Self::zeros(dims);
        for (i, v) in t.data.iter_mut().enumerate() {
            *v = f(i);
        }
        t
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn reshape(self, dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        let n: usize = dims.iter().product();
        if n != self.data.len() {
            return Err(Error::shape("reshape", dims, &self.dims));
        }
        Ok(Tensor {
            dims: dims.to_vec(),
            data: self.data,
        })
    }

    pub fn ensure_finite(&self, op: &'static str) -> Result<()> {
        if self.data.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite { op })
        }
    }

    pub fn ensure_dims(&self, op: &'static str, dims: &[usize]) -> Result<()> {
        if self.dims == dims {
            Ok(())
        } else {
            Err(Error::shape(op, dims, &self.dims))
        }
    }

    /// Number of rows of a matrix view: the leading dimension.
    pub fn rows(&self) -> usize {
        self.dims.first().copied().unwrap_or(1)
    }

    /// Elements per leading-dimension slice.
    pub fn row_len(&self) -> usize {
        self.data.len() / self.rows()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.row_len();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let w = self.row_len();
        &mut self.data[i * w..(i + 1) * w]
    }

    /// Stacks equally shaped tensors along a new leading axis.
    pub fn stack(items: &[Tensor]) -> Result<Tensor> {
        let first = items
            .first()
            .ok_or_else(|| Error::invalid("cannot stack an empty sequence"))?;
        let mut dims = Vec::with_capacity(first.dims.len() + 1);
        dims.push(items.len());
        dims.extend_from_slice(&first.dims);
        let mut data = Vec::with_capacity(first.len() * items.len());
        for t in items {
            if t.dims != first.dims {
                return Err(Error::shape("stack", &first.dims, &t.dims));
            }
            data.extend_from_slice(&t.data);
        }
        Ok(Tensor { dims, data })
    }

    /// Splits along the leading axis.
    pub fn unstack(&self) -> Vec<Tensor> {
        let inner: Vec<usize> = if self.dims.len() > 1 {
            self.dims[1..].to_vec()
        } else {
            vec![1]
        };
        (0..self.rows())
            .map(|i| Tensor {
                dims: inner.clone(),
                data: self.row(i).to_vec(),
            })
            .collect()
    }

    pub fn dot(&self, other: &Tensor) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        dot(&self.data, &other.data)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &Tensor) {
        debug_assert_eq!(self.len(), other.len());
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.contains(&0) {
        return Err(Error::invalid(format!(
            "tensor dims must be positive, got {dims:?}"
        )));
    }
    Ok(())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `out[r] = sum_c m[r, c] * x[c]` for a row-major `rows x cols` matrix.
pub fn matvec(m: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    for (r, o) in out.iter_mut().enumerate().take(rows) {
        *o = dot(&m[r * cols..(r + 1) * cols], x);
    }
}

/// `out[c] += sum_r m[r, c] * y[r]`
pub fn matvec_t_acc(m: &[f64], rows: usize, cols: usize, y: &[f64], out: &mut [f64]) {
    for (r, &yr) in y.iter().enumerate().take(rows) {
        if yr == 0.0 {
            continue;
        }
        let row = &m[r * cols..(r + 1) * cols];
        for (o, &w) in out.iter_mut().zip(row) {
            *o += w * yr;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes_and_nan() {
        assert!(Tensor::new(vec![2, 2], vec![0.0; 3]).is_err());
        assert!(Tensor::new(vec![0], vec![]).is_err());
        assert!(matches!(
            Tensor::new(vec![1], vec![f64::NAN]),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn stack_unstack() {
        let a = Tensor::new(vec![2], vec![1.0, 2.0]).unwrap();
        let b = Tensor::new(vec![2], vec![3.0, 4.0]).unwrap();
        let s = Tensor::stack(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(s.dims(), &[2, 2]);
        assert_eq!(s.unstack(), vec![a, b]);
    }
}
