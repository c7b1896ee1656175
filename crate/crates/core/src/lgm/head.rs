use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numcore::tensor::dot;
use crate::numcore::{RngStream, Tensor};

/// How a fresh linear classifier is drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeadInit {
    /// `W ~ N(0, 1)`, `b = 0`.
    Normal,
    /// `W, b ~ U[-1/sqrt(f), 1/sqrt(f)]` (the usual fan-in initialization of a linear layer).
    FanIn,
}

impl fmt::Display for HeadInit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeadInit::Normal => "normal",
            HeadInit::FanIn => "fanin",
        })
    }
}

impl FromStr for HeadInit {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(HeadInit::Normal),
            "fanin" => Ok(HeadInit::FanIn),
            _ => Err(Error::invalid(format!("unknown head init `{s}`"))),
        }
    }
}

/// Linear classifier `logits = W z + b` with `W: c x f`, `b: c`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearHead {
    pub w: Tensor,
    pub b: Tensor,
}

impl LinearHead {
    pub fn new(w: Tensor, b: Tensor) -> Result<Self> {
        if w.dims().len() != 2 {
            return Err(Error::invalid(format!(
                "head weight must be c x f, got {:?}",
                w.dims()
            )));
        }
        b.ensure_dims("LinearHead", &[w.rows()])?;
        Ok(LinearHead { w, b })
    }

    pub fn zeros(classes: usize, features: usize) -> Self {
        LinearHead {
            w: Tensor::zeros(&[classes, features]),
            b: Tensor::zeros(&[classes]),
        }
    }

    pub fn classes(&self) -> usize {
        self.w.rows()
    }

    pub fn features(&self) -> usize {
        self.w.row_len()
    }

    pub(crate) fn logits_row(&self, z: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = dot(self.w.row(k), z) + self.b.data()[k];
        }
    }

    /// `N x c` logits for `N x f` features.
    pub fn logits(&self, z: &Tensor) -> Result<Tensor> {
        if z.dims().len() != 2 || z.row_len() != self.features() {
            return Err(Error::shape(
                "LinearHead::logits",
                &[z.rows(), self.features()],
                z.dims(),
            ));
        }
        let c = self.classes();
        let mut out = Tensor::zeros(&[z.rows(), c]);
        for i in 0..z.rows() {
            self.logits_row(z.row(i), out.row_mut(i));
        }
        Ok(out)
    }

    /// Arg-max class per row; ties resolve to the lowest class id.
    pub fn predict(&self, z: &Tensor) -> Result<Vec<usize>> {
        let logits = self.logits(z)?;
        Ok((0..logits.rows())
            .map(|i| {
                let row = logits.row(i);
                let mut best = 0;
                for k in 1..row.len() {
                    if row[k] > row[best] {
                        best = k;
                    }
                }
                best
            })
            .collect())
    }

    pub fn accuracy(&self, z: &Tensor, labels: &[usize]) -> Result<f64> {
        let pred = self.predict(z)?;
        if pred.len() != labels.len() || labels.is_empty() {
            return Err(Error::invalid("accuracy needs one label per row"));
        }
        let hits = pred.iter().zip(labels).filter(|(p, l)| p == l).count();
        Ok(hits as f64 / labels.len() as f64)
    }
}

pub fn sample_head(
    stream: &mut RngStream,
    classes: usize,
    features: usize,
    mode: HeadInit,
) -> LinearHead {
    match mode {
        HeadInit::Normal => LinearHead {
            w: Tensor::from_fn(&[classes, features], |_| stream.normal()),
            b: Tensor::zeros(&[classes]),
        },
        HeadInit::FanIn => {
            let bound = 1.0 / (features as f64).sqrt();
            LinearHead {
                w: Tensor::from_fn(&[classes, features], |_| stream.uniform(-bound, bound)),
                b: Tensor::from_fn(&[classes], |_| stream.uniform(-bound, bound)),
            }
        }
    }
}
