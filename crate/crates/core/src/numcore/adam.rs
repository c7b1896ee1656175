use crate::error::{Error, Result};
use crate::numcore::Tensor;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            ..Default::default()
        }
    }
}

/// Moment estimates for one parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Tensor,
    v: Tensor,
    t: u64,
}

impl AdamState {
    pub fn new(shape: &[usize], config: AdamConfig) -> Self {
        AdamState {
            config,
            m: Tensor::zeros(shape),
            v: Tensor::zeros(shape),
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self) -> &Tensor {
        &self.m
    }

    pub fn second_moment(&self) -> &Tensor {
        &self.v
    }

    /// In-place bias-corrected Adam update using the configured learning rate.
    pub fn step(&mut self, param: &mut Tensor, grad: &Tensor) -> Result<()> {
        self.step_with_lr(param, grad, self.config.lr)
    }

    /// Same as [`step`](Self::step) with an explicit learning rate, for schedules.
    pub fn step_with_lr(&mut self, param: &mut Tensor, grad: &Tensor, lr: f64) -> Result<()> {
        if param.dims() != self.m.dims() {
            return Err(Error::shape("adam_step", self.m.dims(), param.dims()));
        }
        if grad.dims() != param.dims() {
            return Err(Error::shape("adam_step", param.dims(), grad.dims()));
        }
        grad.ensure_finite("adam_step")?;
        param.ensure_finite("adam_step")?;

        let AdamConfig {
            beta1, beta2, eps, ..
        } = self.config;
        self.t += 1;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        let m = self.m.data_mut();
        let v = self.v.data_mut();
        for (((p, &g), m), v) in param
            .data_mut()
            .iter_mut()
            .zip(grad.data())
            .zip(m.iter_mut())
            .zip(v.iter_mut())
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

/// Functional form: consumes the state and parameter, returns their updated values.
pub fn adam_step(
    mut state: AdamState,
    mut param: Tensor,
    grad: &Tensor,
) -> Result<(AdamState, Tensor)> {
    state.step(&mut param, grad)?;
    Ok((state, param))
}

/// Cosine decay from `base` at step 0 to zero at `total`.
pub fn cosine_decay(base: f64, step: usize, total: usize) -> f64 {
    if total == 0 {
        return base;
    }
    let frac = (step.min(total)) as f64 / total as f64;
    0.5 * base * (1.0 + (std::f64::consts::PI * frac).cos())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_keeps_param() {
        let p = Tensor::new(vec![3], vec![1.0, -2.0, 0.5]).unwrap();
        let s = AdamState::new(&[3], AdamConfig::default());
        let (_, q) = adam_step(s, p.clone(), &Tensor::zeros(&[3])).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn first_step_moves_by_lr_against_sign() {
        // m_hat = g, v_hat = g^2 after one step, so the update is lr * g / (|g| + eps).
        let cfg = AdamConfig {
            eps: 1e-12,
            ..AdamConfig::with_lr(0.002)
        };
        let p = Tensor::zeros(&[4]);
        let g = Tensor::new(vec![4], vec![3.0, -0.01, 1e-3, -250.0]).unwrap();
        let (s, q) = adam_step(AdamState::new(&[4], cfg), p, &g).unwrap();
        for (&qi, &gi) in q.data().iter().zip(g.data()) {
            assert!((qi + 0.002 * gi.signum()).abs() < 1e-10, "{qi}");
        }
        // A second identical step keeps moving the same way.
        let (_, r) = adam_step(s, q.clone(), &g).unwrap();
        for ((&ri, &qi), &gi) in r.data().iter().zip(q.data()).zip(g.data()) {
            assert!((ri - qi) * gi.signum() < 0.0);
            assert!(((ri - qi).abs() - 0.002).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic_bitwise() {
        let g = Tensor::new(vec![2], vec![0.3, -0.7]).unwrap();
        let run = || {
            let mut s = AdamState::new(&[2], AdamConfig::default());
            let mut p = Tensor::new(vec![2], vec![0.1, 0.2]).unwrap();
            for _ in 0..5 {
                s.step(&mut p, &g).unwrap();
            }
            (s, p)
        };
        let (s1, p1) = run();
        let (s2, p2) = run();
        assert_eq!(s1, s2);
        assert!(p1
            .data()
            .iter()
            .zip(p2.data())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn shape_mismatch_is_error() {
        let s = AdamState::new(&[2], AdamConfig::default());
        assert!(adam_step(s, Tensor::zeros(&[3]), &Tensor::zeros(&[3])).is_err());
    }

    #[test]
    fn cosine_endpoints() {
        assert_eq!(cosine_decay(1.0, 0, 10), 1.0);
        assert!(cosine_decay(1.0, 10, 10).abs() < 1e-15);
        assert!((cosine_decay(1.0, 5, 10) - 0.5).abs() < 1e-15);
    }
}
