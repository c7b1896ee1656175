use std::fmt;
use std::str::FromStr;

use super::conv::{avgpool2, avgpool2_vjp, conv3x3, conv3x3_vjp};
use super::{batch_len, check_upstream, Encoder};
use crate::error::{Error, Result};
use crate::numcore::tensor::{matvec, matvec_t_acc};
use crate::numcore::{RngStream, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    /// Piecewise linear; finite-difference checks need points away from the kinks.
    Relu,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative evaluated at the pre-activation `x`.
    #[inline]
    fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            _ => Err(Error::invalid(format!("unknown activation `{s}`"))),
        }
    }
}

/// Passes vectors through unchanged.
#[derive(Clone, Debug, PartialEq)]
pub struct Identity {
    dims: [usize; 1],
}

impl Identity {
    pub fn new(dim: usize) -> Self {
        Identity { dims: [dim] }
    }
}

impl Encoder for Identity {
    fn input_dims(&self) -> &[usize] {
        &self.dims
    }

    fn feature_dim(&self) -> usize {
        self.dims[0]
    }

    fn forward(&self, batch: &Tensor) -> Result<Tensor> {
        batch_len("identity::forward", &self.dims, batch)?;
        Ok(batch.clone())
    }

    fn vjp(&self, batch: &Tensor, upstream: &Tensor) -> Result<Tensor> {
        let n = batch_len("identity::vjp", &self.dims, batch)?;
        check_upstream("identity::vjp", n, self.dims[0], upstream)?;
        Ok(upstream.clone())
    }
}

/// `z = M x` with a fixed Gaussian `f x d` matrix scaled by `1/sqrt(d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomProjection {
    input: Vec<usize>,
    matrix: Tensor,
}

impl RandomProjection {
    pub fn random(stream: &mut RngStream, input_dims: &[usize], feature_dim: usize) -> Self {
        let d: usize = input_dims.iter().product();
        let scale = 1.0 / (d as f64).sqrt();
        let matrix = Tensor::from_fn(&[feature_dim, d], |_| stream.normal() * scale);
        RandomProjection {
            input: input_dims.to_vec(),
            matrix,
        }
    }

    pub fn from_matrix(input_dims: &[usize], matrix: Tensor) -> Result<Self> {
        let d: usize = input_dims.iter().product();
        if matrix.dims().len() != 2 || matrix.dims()[1] != d {
            return Err(Error::shape(
                "RandomProjection",
                &[matrix.rows(), d],
                matrix.dims(),
            ));
        }
        Ok(RandomProjection {
            input: input_dims.to_vec(),
            matrix,
        })
    }

    pub fn matrix(&self) -> &Tensor {
        &self.matrix
    }
}

impl Encoder for RandomProjection {
    fn input_dims(&self) -> &[usize] {
        &self.input
    }

    fn feature_dim(&self) -> usize {
        self.matrix.dims()[0]
    }

    fn forward(&self, batch: &Tensor) -> Result<Tensor> {
        let n = batch_len("random_projection::forward", &self.input, batch)?;
        let (f, d) = (self.matrix.dims()[0], self.matrix.dims()[1]);
        let mut out = Tensor::zeros(&[n, f]);
        for i in 0..n {
            matvec(self.matrix.data(), f, d, batch.row(i), out.row_mut(i));
        }
        Ok(out)
    }

    fn vjp(&self, batch: &Tensor, upstream: &Tensor) -> Result<Tensor> {
        let n = batch_len("random_projection::vjp", &self.input, batch)?;
        let (f, d) = (self.matrix.dims()[0], self.matrix.dims()[1]);
        check_upstream("random_projection::vjp", n, f, upstream)?;
        let mut out = Tensor::zeros(batch.dims());
        for i in 0..n {
            matvec_t_acc(self.matrix.data(), f, d, upstream.row(i), out.row_mut(i));
        }
        Ok(out)
    }
}

/// `z = W2 act(W1 x + b1) + b2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    input: Vec<usize>,
    pub(crate) w1: Tensor,
    pub(crate) b1: Tensor,
    pub(crate) w2: Tensor,
    pub(crate) b2: Tensor,
    pub(crate) activation: Activation,
}

impl Mlp {
    pub fn random(
        stream: &mut RngStream,
        input_dims: &[usize],
        hidden: usize,
        feature_dim: usize,
        activation: Activation,
    ) -> Self {
        let d: usize = input_dims.iter().product();
        let s1 = 1.0 / (d as f64).sqrt();
        let s2 = 1.0 / (hidden as f64).sqrt();
        Mlp {
            input: input_dims.to_vec(),
            w1: Tensor::from_fn(&[hidden, d], |_| stream.normal() * s1),
            b1: Tensor::from_fn(&[hidden], |_| stream.normal() * 0.1),
            w2: Tensor::from_fn(&[feature_dim, hidden], |_| stream.normal() * s2),
            b2: Tensor::from_fn(&[feature_dim], |_| stream.normal() * 0.1),
            activation,
        }
    }

    pub(crate) fn from_parts(
        input: &[usize],
        w1: Tensor,
        b1: Tensor,
        w2: Tensor,
        b2: Tensor,
        activation: Activation,
    ) -> Result<Self> {
        let d: usize = input.iter().product();
        let h = w1.rows();
        let f = w2.rows();
        w1.ensure_dims("mlp w1", &[h, d])?;
        b1.ensure_dims("mlp b1", &[h])?;
        w2.ensure_dims("mlp w2", &[f, h])?;
        b2.ensure_dims("mlp b2", &[f])?;
        Ok(Mlp {
            input: input.to_vec(),
            w1,
            b1,
            w2,
            b2,
            activation,
        })
    }

    fn dims(&self) -> (usize, usize, usize) {
        (self.w1.dims()[1], self.w1.dims()[0], self.w2.dims()[0])
    }

    fn hidden_pre(&self, x: &[f64]) -> Vec<f64> {
        let (d, h, _) = self.dims();
        let mut a = vec![0.0; h];
        matvec(self.w1.data(), h, d, x, &mut a);
        a.iter_mut().zip(self.b1.data()).for_each(|(v, b)| *v += b);
        a
    }
}

impl Encoder for Mlp {
    fn input_dims(&self) -> &[usize] {
        &self.input
    }

    fn feature_dim(&self) -> usize {
        self.w2.dims()[0]
    }

    fn forward(&self, batch: &Tensor) -> Result<Tensor> {
        let n = batch_len("mlp::forward", &self.input, batch)?;
        let (_, h, f) = self.dims();
        let mut out = Tensor::zeros(&[n, f]);
        for i in 0..n {
            let hid: Vec<f64> = self
                .hidden_pre(batch.row(i))
                .into_iter()
                .map(|v| self.activation.apply(v))
                .collect();
            let row = out.row_mut(i);
            matvec(self.w2.data(), f, h, &hid, row);
            row.iter_mut()
                .zip(self.b2.data())
                .for_each(|(v, b)| *v += b);
        }
        Ok(out)
    }

    fn vjp(&self, batch: &Tensor, upstream: &Tensor) -> Result<Tensor> {
        let n = batch_len("mlp::vjp", &self.input, batch)?;
        let (d, h, f) = self.dims();
        check_upstream("mlp::vjp", n, f, upstream)?;
        let mut out = Tensor::zeros(batch.dims());
        for i in 0..n {
            let pre = self.hidden_pre(batch.row(i));
            let mut gh = vec![0.0; h];
            matvec_t_acc(self.w2.data(), f, h, upstream.row(i), &mut gh);
            gh.iter_mut()
                .zip(&pre)
                .for_each(|(g, &a)| *g *= self.activation.derivative(a));
            matvec_t_acc(self.w1.data(), h, d, &gh, out.row_mut(i));
        }
        Ok(out)
    }
}

const CONV1_GAIN: f64 = 6.0;
const CONV2_GAIN: f64 = 3.0;
/// Bias spread; an offset tanh has an even part, so averaged responses keep edge energy.
const CONV_BIAS_STD: f64 = 0.7;

/// Two 3x3 convolution + 2x2 average-pool stages, global average, then a linear map to `f`.
///
/// Input is `3 x H x W` with `H` and `W` divisible by 4. Random weights use zero-mean
/// first-layer kernels with large gains and biases.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvSmall {
    input: [usize; 3],
    pub(crate) conv1_w: Tensor,
    pub(crate) conv1_b: Tensor,
    pub(crate) conv2_w: Tensor,
    pub(crate) conv2_b: Tensor,
    pub(crate) fc_w: Tensor,
    pub(crate) fc_b: Tensor,
    pub(crate) activation: Activation,
}

struct ConvTrace {
    pre1: Vec<f64>,
    pre2: Vec<f64>,
}

impl ConvSmall {
    pub fn random(
        stream: &mut RngStream,
        input_dims: [usize; 3],
        channels: (usize, usize),
        feature_dim: usize,
        activation: Activation,
    ) -> Result<Self> {
        let (c1, c2) = channels;
        let cin = input_dims[0];
        let s1 = CONV1_GAIN / ((cin * 9) as f64).sqrt();
        let s2 = CONV2_GAIN / ((c1 * 9) as f64).sqrt();
        let s3 = 1.0 / (c2 as f64).sqrt();
        let mut conv1_w = Tensor::from_fn(&[c1, cin, 3, 3], |_| stream.normal() * s1);
        // flat regions give no response, so the pooled features track edges rather than mean color
        for k in conv1_w.data_mut().chunks_mut(9) {
            let m = k.iter().sum::<f64>() / 9.0;
            k.iter_mut().for_each(|v| *v -= m);
        }
        Self::from_parts(
            input_dims,
            conv1_w,
            Tensor::from_fn(&[c1], |_| stream.normal() * CONV_BIAS_STD),
            Tensor::from_fn(&[c2, c1, 3, 3], |_| stream.normal() * s2),
            Tensor::from_fn(&[c2], |_| stream.normal() * CONV_BIAS_STD),
            Tensor::from_fn(&[feature_dim, c2], |_| stream.normal() * s3),
            Tensor::zeros(&[feature_dim]),
            activation,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        input: [usize; 3],
        conv1_w: Tensor,
        conv1_b: Tensor,
        conv2_w: Tensor,
        conv2_b: Tensor,
        fc_w: Tensor,
        fc_b: Tensor,
        activation: Activation,
    ) -> Result<Self> {
        let [cin, h, w] = input;
        if h % 4 != 0 || w % 4 != 0 || h == 0 || w == 0 {
            return Err(Error::invalid(format!(
                "conv_small input {h}x{w} must be a positive multiple of 4"
            )));
        }
        let c1 = conv1_w.rows();
        let c2 = conv2_w.rows();
        let f = fc_w.rows();
        conv1_w.ensure_dims("conv1_w", &[c1, cin, 3, 3])?;
        conv1_b.ensure_dims("conv1_b", &[c1])?;
        conv2_w.ensure_dims("conv2_w", &[c2, c1, 3, 3])?;
        conv2_b.ensure_dims("conv2_b", &[c2])?;
        fc_w.ensure_dims("fc_w", &[f, c2])?;
        fc_b.ensure_dims("fc_b", &[f])?;
        Ok(ConvSmall {
            input,
            conv1_w,
            conv1_b,
            conv2_w,
            conv2_b,
            fc_w,
            fc_b,
            activation,
        })
    }

    fn channels(&self) -> (usize, usize) {
        (self.conv1_w.rows(), self.conv2_w.rows())
    }

    /// Runs one sample, returning the pooled feature vector and the pre-activations.
    fn trunk(&self, x: &[f64]) -> (Vec<f64>, ConvTrace) {
        let [cin, h, w] = self.input;
        let (c1, c2) = self.channels();
        let act = self.activation;
        let pre1 = conv3x3(x, cin, h, w, self.conv1_w.data(), self.conv1_b.data(), c1);
        let a1: Vec<f64> = pre1.iter().map(|&v| act.apply(v)).collect();
        let p1 = avgpool2(&a1, c1, h, w);
        let (h2, w2) = (h / 2, w / 2);
        let pre2 = conv3x3(
            &p1,
            c1,
            h2,
            w2,
            self.conv2_w.data(),
            self.conv2_b.data(),
            c2,
        );
        let a2: Vec<f64> = pre2.iter().map(|&v| act.apply(v)).collect();
        let p2 = avgpool2(&a2, c2, h2, w2);
        let area = (h2 / 2) * (w2 / 2);
        let gap: Vec<f64> = p2
            .chunks(area)
            .map(|c| c.iter().sum::<f64>() / area as f64)
            .collect();
        (gap, ConvTrace { pre1, pre2 })
    }
}

impl Encoder for ConvSmall {
    fn input_dims(&self) -> &[usize] {
        &self.input
    }

    fn feature_dim(&self) -> usize {
        self.fc_w.rows()
    }

    fn forward(&self, batch: &Tensor) -> Result<Tensor> {
        let n = batch_len("conv_small::forward", &self.input, batch)?;
        let f = self.feature_dim();
        let c2 = self.channels().1;
        let mut out = Tensor::zeros(&[n, f]);
        for i in 0..n {
            let (gap, _) = self.trunk(batch.row(i));
            let row = out.row_mut(i);
            matvec(self.fc_w.data(), f, c2, &gap, row);
            row.iter_mut()
                .zip(self.fc_b.data())
                .for_each(|(v, b)| *v += b);
        }
        Ok(out)
    }

    fn vjp(&self, batch: &Tensor, upstream: &Tensor) -> Result<Tensor> {
        let n = batch_len("conv_small::vjp", &self.input, batch)?;
        let f = self.feature_dim();
        check_upstream("conv_small::vjp", n, f, upstream)?;
        let [cin, h, w] = self.input;
        let (c1, c2) = self.channels();
        let (h2, w2) = (h / 2, w / 2);
        let area = (h2 / 2) * (w2 / 2);
        let act = self.activation;
        let mut out = Tensor::zeros(batch.dims());
        for i in 0..n {
            let (_, trace) = self.trunk(batch.row(i));
            let mut g_gap = vec![0.0; c2];
            matvec_t_acc(self.fc_w.data(), f, c2, upstream.row(i), &mut g_gap);
            let g_p2: Vec<f64> = g_gap
                .iter()
                .flat_map(|&g| std::iter::repeat_n(g / area as f64, area))
                .collect();
            let mut g_a2 = avgpool2_vjp(&g_p2, c2, h2, w2);
            g_a2.iter_mut()
                .zip(&trace.pre2)
                .for_each(|(g, &a)| *g *= act.derivative(a));
            let g_p1 = conv3x3_vjp(&g_a2, c1, h2, w2, self.conv2_w.data(), c2);
            let mut g_a1 = avgpool2_vjp(&g_p1, c1, h, w);
            g_a1.iter_mut()
                .zip(&trace.pre1)
                .for_each(|(g, &a)| *g *= act.derivative(a));
            let g_x = conv3x3_vjp(&g_a1, cin, h, w, self.conv1_w.data(), c1);
            out.row_mut(i).copy_from_slice(&g_x);
        }
        Ok(out)
    }
}

/// Architecture and size description sufficient to build a built-in encoder from a seed.
#[derive(Clone, Debug, PartialEq)]
pub enum EncoderSpec {
    Identity {
        dim: usize,
    },
    RandomProjection {
        input: Vec<usize>,
        feature_dim: usize,
    },
    Mlp {
        input: Vec<usize>,
        hidden: usize,
        feature_dim: usize,
        activation: Activation,
    },
    ConvSmall {
        input: [usize; 3],
        channels: (usize, usize),
        feature_dim: usize,
        activation: Activation,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum BuiltinEncoder {
    Identity(Identity),
    RandomProjection(RandomProjection),
    Mlp(Mlp),
    ConvSmall(ConvSmall),
}

impl BuiltinEncoder {
    /// Draws frozen weights from `stream`.
    pub fn build(spec: &EncoderSpec, stream: &mut RngStream) -> Result<Self> {
        Ok(match spec {
            EncoderSpec::Identity { dim } => BuiltinEncoder::Identity(Identity::new(*dim)),
            EncoderSpec::RandomProjection { input, feature_dim } => {
                BuiltinEncoder::RandomProjection(RandomProjection::random(
                    stream,
                    input,
                    *feature_dim,
                ))
            }
            EncoderSpec::Mlp {
                input,
                hidden,
                feature_dim,
                activation,
            } => BuiltinEncoder::Mlp(Mlp::random(
                stream,
                input,
                *hidden,
                *feature_dim,
                *activation,
            )),
            EncoderSpec::ConvSmall {
                input,
                channels,
                feature_dim,
                activation,
            } => BuiltinEncoder::ConvSmall(ConvSmall::random(
                stream,
                *input,
                *channels,
                *feature_dim,
                *activation,
            )?),
        })
    }

    pub fn arch(&self) -> &'static str {
        match self {
            BuiltinEncoder::Identity(_) => "identity",
            BuiltinEncoder::RandomProjection(_) => "random_projection",
            BuiltinEncoder::Mlp(_) => "mlp",
            BuiltinEncoder::ConvSmall(_) => "conv_small",
        }
    }

    fn inner(&self) -> &dyn Encoder {
        match self {
            BuiltinEncoder::Identity(e) => e,
            BuiltinEncoder::RandomProjection(e) => e,
            BuiltinEncoder::Mlp(e) => e,
            BuiltinEncoder::ConvSmall(e) => e,
        }
    }
}

impl Encoder for BuiltinEncoder {
    fn input_dims(&self) -> &[usize] {
        self.inner().input_dims()
    }

    fn feature_dim(&self) -> usize {
        self.inner().feature_dim()
    }

    fn forward(&self, batch: &Tensor) -> Result<Tensor> {
        self.inner().forward(batch)
    }

    fn vjp(&self, batch: &Tensor, upstream: &Tensor) -> Result<Tensor> {
        self.inner().vjp(batch, upstream)
    }
}
