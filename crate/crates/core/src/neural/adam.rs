use super::{GradientSet, MlpParams, NeuralError};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// Adam with bias correction. Steps descend along the supplied gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    first_moment: GradientSet,
    second_moment: GradientSet,
    steps: u64,
}

impl Adam {
    pub fn new(net: &MlpParams, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            first_moment: GradientSet::zeros_like(net),
            second_moment: GradientSet::zeros_like(net),
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn step(&mut self, net: &mut MlpParams, grads: &GradientSet) -> Result<(), NeuralError> {
        if !grads.matches(net) || !self.first_moment.matches(net) {
            return Err(NeuralError::Shape);
        }
        self.steps += 1;
        let t = self.steps as i32;
        let correction1 = 1.0 - ADAM_BETA1.powi(t);
        let correction2 = 1.0 - ADAM_BETA2.powi(t);
        let lr = self.learning_rate;

        let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for (((p, g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                let m_hat = *m / correction1;
                let v_hat = *v / correction2;
                *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
            }
        };
        let moments = self
            .first_moment
            .layers
            .iter_mut()
            .zip(self.second_moment.layers.iter_mut());
        for ((layer, (gw, gb)), ((mw, mb), (vw, vb))) in
            net.layers.iter_mut().zip(&grads.layers).zip(moments)
        {
            update(&mut layer.weights, gw, mw, vw);
            update(&mut layer.bias, gb, mb, vb);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::Activation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn net() -> MlpParams {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        MlpParams::new(&[3, 4, 2], Activation::Relu, Activation::Identity, &mut rng)
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut n = net();
        let before = n.clone();
        let mut adam = Adam::new(&n, 1e-3);
        let zeros = GradientSet::zeros_like(&n);
        adam.step(&mut n, &zeros).unwrap();
        assert_eq!(n, before);
    }

    #[test]
    fn first_step_matches_hand_recurrence() {
        let mut n = net();
        let before = n.clone();
        let mut grads = GradientSet::zeros_like(&n);
        for (i, g) in grads.values_mut().enumerate() {
            *g = if i % 3 == 0 {
                0.0
            } else {
                (i as f64 - 7.5) * 0.3
            };
        }
        let lr = 0.01;
        let mut adam = Adam::new(&n, lr);
        adam.step(&mut n, &grads).unwrap();
        for ((after, start), g) in n.parameters().zip(before.parameters()).zip(grads.values()) {
            // m = 0.1 g, v = 0.001 g^2; bias-corrected: m_hat = g, v_hat = g^2.
            let m = (1.0 - ADAM_BETA1) * g;
            let v = (1.0 - ADAM_BETA2) * g * g;
            let m_hat = m / (1.0 - ADAM_BETA1);
            let v_hat = v / (1.0 - ADAM_BETA2);
            let expected = start - lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
            assert!((after - expected).abs() < 1e-15);
            if g != 0.0 {
                assert!(((start - after).abs() - lr).abs() < 1e-8);
            } else {
                assert_eq!(after, start);
            }
        }
    }

    #[test]
    fn identical_runs_are_deterministic() {
        let mut grads = GradientSet::zeros_like(&net());
        grads
            .values_mut()
            .enumerate()
            .for_each(|(i, g)| *g = (i as f64).sin());
        let run = || {
            let mut n = net();
            let mut adam = Adam::new(&n, 1e-3);
            adam.step(&mut n, &grads).unwrap();
            adam.step(&mut n, &grads).unwrap();
            n
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut n = net();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let other = MlpParams::new(&[3, 5, 2], Activation::Relu, Activation::Identity, &mut rng);
        let mut adam = Adam::new(&n, 1e-3);
        assert!(adam.step(&mut n, &GradientSet::zeros_like(&other)).is_err());
    }
}
