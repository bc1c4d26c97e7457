use super::config::OptimizerKind;
use crate::error::{Error, Result};
use crate::scalar::Real;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// First-order optimizer over a flat parameter vector.
#[derive(Clone, Debug)]
pub struct Optimizer<F> {
    kind: OptimizerKind,
    learning_rate: F,
    grad_clip: F,
    m: Vec<F>,
    v: Vec<F>,
    t: i32,
}

impl<F: Real> Optimizer<F> {
    pub fn new(kind: OptimizerKind, learning_rate: f64, grad_clip: f64, num_params: usize) -> Self {
        Self {
            kind,
            learning_rate: F::of(learning_rate),
            grad_clip: F::of(grad_clip),
            m: vec![F::zero(); num_params],
            v: vec![F::zero(); num_params],
            t: 0,
        }
    }

    pub fn steps_taken(&self) -> i32 {
        self.t
    }

    /// Applies one descent step on `params` given the loss gradient.
    pub fn step(&mut self, params: &mut [F], grad: &[F]) -> Result<()> {
        if params.len() != self.m.len() || grad.len() != params.len() {
            return Err(Error::input("optimizer dimension mismatch"));
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::input("non-finite gradient"));
        }
        self.t += 1;
        if self.learning_rate == F::zero() {
            return Ok(());
        }
        let scale = clip_scale(grad, self.grad_clip);
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, &g) in params.iter_mut().zip(grad) {
                    *p = *p - self.learning_rate * scale * g;
                }
            }
            OptimizerKind::Adam => {
                let (b1, b2) = (F::of(ADAM_BETA1), F::of(ADAM_BETA2));
                let c1 = F::one() - b1.powi(self.t);
                let c2 = F::one() - b2.powi(self.t);
                for j in 0..params.len() {
                    let g = grad[j] * scale;
                    self.m[j] = b1 * self.m[j] + (F::one() - b1) * g;
                    self.v[j] = b2 * self.v[j] + (F::one() - b2) * g * g;
                    let m_hat = self.m[j] / c1;
                    let v_hat = self.v[j] / c2;
                    params[j] = params[j] - self.learning_rate * m_hat / (v_hat.sqrt() + F::of(ADAM_EPS));
                }
            }
        }
        Ok(())
    }
}

/// Factor that rescales `grad` to global norm `max_norm` (1 when disabled or within bound).
pub fn clip_scale<F: Real>(grad: &[F], max_norm: F) -> F {
    if max_norm <= F::zero() {
        return F::one();
    }
    let norm = grad.iter().map(|&g| g * g).sum::<F>().sqrt();
    if norm > max_norm {
        max_norm / norm
    } else {
        F::one()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        for kind in [OptimizerKind::Sgd, OptimizerKind::Adam] {
            let mut opt = Optimizer::<f64>::new(kind, 0.0, 0.0, 3);
            let mut p = vec![0.1, -0.2, 0.3];
            let before = p.clone();
            for _ in 0..10 {
                opt.step(&mut p, &[1.0, 2.0, -3.0]).unwrap();
            }
            assert_eq!(p, before);
        }
    }

    #[test]
    fn sgd_step_and_clip() {
        let mut opt = Optimizer::<f64>::new(OptimizerKind::Sgd, 0.5, 1.0, 2);
        let mut p = vec![0.0, 0.0];
        opt.step(&mut p, &[3.0, 4.0]).unwrap();
        assert!((p[0] + 0.3).abs() < 1e-15 && (p[1] + 0.4).abs() < 1e-15);
    }

    #[test]
    fn adam_first_step_has_learning_rate_magnitude() {
        let mut opt = Optimizer::<f64>::new(OptimizerKind::Adam, 0.1, 0.0, 2);
        let mut p = vec![1.0, 1.0];
        opt.step(&mut p, &[5.0, -0.01]).unwrap();
        assert!((p[0] - 0.9).abs() < 1e-6);
        assert!((p[1] - 1.1).abs() < 1e-4);
    }

    #[test]
    fn rejects_non_finite_gradients() {
        let mut opt = Optimizer::<f64>::new(OptimizerKind::Sgd, 0.1, 0.0, 1);
        assert!(opt.step(&mut [0.0], &[f64::INFINITY]).is_err());
    }
}
