//! Minibatch forward and backward passes.
//!
//! Batches are row-major `n x dim` slices. The results match the
//! per-sample [`MlpParams::forward`] and
//! [`MlpParams::backward_accumulate`] up to floating-point summation order.

use matrixmultiply::dgemm;

use super::{Dense, GradientSet, MlpParams, NeuralError};

/// Layer inputs and the final output of one batched forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchCache {
    pub rows: usize,
    /// `activations[0]` is the input batch, `activations[i + 1]` the output
    /// batch of layer `i`.
    pub activations: Vec<Vec<f64>>,
}

impl BatchCache {
    pub fn output(&self) -> &[f64] {
        self.activations
            .last()
            .expect("cache holds at least the input")
    }
}

/// `c <- alpha * a * b + beta * c` for row-major `a: m x k`, `b: k x n`,
/// with explicit strides for `a` and `b`.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
) {
    debug_assert!(c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: every index touched is < m*k (a), k*n (b) or m*n (c) by the
    // stride choices at the call sites, and the slices are at least that long.
    unsafe {
        dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

impl Dense {
    fn forward_batch(&self, input: &[f64], rows: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(rows * self.outputs);
        for _ in 0..rows {
            out.extend_from_slice(&self.bias);
        }
        // out (rows x outputs) += input (rows x inputs) * W^T (inputs x outputs)
        gemm(
            rows,
            self.inputs,
            self.outputs,
            input,
            (self.inputs, 1),
            &self.weights,
            (1, self.inputs),
            1.0,
            &mut out,
        );
        for v in &mut out {
            *v = self.activation.apply(*v);
        }
        out
    }
}

impl MlpParams {
    fn check_batch(&self, input: &[f64], rows: usize) -> Result<(), NeuralError> {
        if input.len() != rows * self.input_dim() {
            return Err(NeuralError::Dimension {
                expected: rows * self.input_dim(),
                found: input.len(),
            });
        }
        Ok(())
    }

    pub fn forward_batch(&self, input: &[f64], rows: usize) -> Result<BatchCache, NeuralError> {
        self.check_batch(input, rows)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_vec());
        for layer in &self.layers {
            let out = layer.forward_batch(activations.last().expect("non-empty"), rows);
            activations.push(out);
        }
        Ok(BatchCache { rows, activations })
    }

    pub fn infer_batch(&self, input: &[f64], rows: usize) -> Result<Vec<f64>, NeuralError> {
        self.check_batch(input, rows)?;
        let mut current = input.to_vec();
        for layer in &self.layers {
            current = layer.forward_batch(&current, rows);
        }
        Ok(current)
    }

    /// Batched reverse pass for `sum_rows output_row · output_gradient_row`.
    /// Adds parameter gradients into `grads` when given; returns the input
    /// gradient batch.
    pub fn backward_batch(
        &self,
        cache: &BatchCache,
        output_gradient: &[f64],
        mut grads: Option<&mut GradientSet>,
    ) -> Result<Vec<f64>, NeuralError> {
        let rows = cache.rows;
        if cache.activations.len() != self.layers.len() + 1 {
            return Err(NeuralError::Shape);
        }
        if output_gradient.len() != rows * self.output_dim() {
            return Err(NeuralError::Dimension {
                expected: rows * self.output_dim(),
                found: output_gradient.len(),
            });
        }
        if let Some(g) = grads.as_deref() {
            if !g.matches(self) {
                return Err(NeuralError::Shape);
            }
        }
        let mut upstream = output_gradient.to_vec();
        for (index, layer) in self.layers.iter().enumerate().rev() {
            let input = &cache.activations[index];
            let output = &cache.activations[index + 1];
            if input.len() != rows * layer.inputs || output.len() != rows * layer.outputs {
                return Err(NeuralError::Shape);
            }
            let mut delta = upstream;
            for (d, y) in delta.iter_mut().zip(output) {
                *d *= layer.activation.derivative_from_output(*y);
            }
            if let Some(g) = grads.as_deref_mut() {
                let (dw, db) = &mut g.layers[index];
                // dW (outputs x inputs) += delta^T (outputs x rows) * input (rows x inputs)
                gemm(
                    layer.outputs,
                    rows,
                    layer.inputs,
                    &delta,
                    (1, layer.outputs),
                    input,
                    (layer.inputs, 1),
                    1.0,
                    dw,
                );
                for row in delta.chunks_exact(layer.outputs) {
                    for (b, d) in db.iter_mut().zip(row) {
                        *b += d;
                    }
                }
            }
            // downstream (rows x inputs) = delta (rows x outputs) * W (outputs x inputs)
            let mut downstream = vec![0.0; rows * layer.inputs];
            gemm(
                rows,
                layer.outputs,
                layer.inputs,
                &delta,
                (layer.outputs, 1),
                &layer.weights,
                (layer.inputs, 1),
                0.0,
                &mut downstream,
            );
            upstream = downstream;
        }
        Ok(upstream)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::Activation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len()
            && a.iter()
                .zip(b)
                .all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + x.abs().max(y.abs())))
    }

    #[test]
    fn batch_matches_per_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (hidden, out) in [
            (Activation::Relu, Activation::Tanh),
            (Activation::Tanh, Activation::Identity),
        ] {
            let net = MlpParams::new(&[5, 7, 6, 3], hidden, out, &mut rng);
            let rows = 9;
            let input: Vec<f64> = (0..rows * 5).map(|_| rng.random_range(-2.0..2.0)).collect();
            let out_grad: Vec<f64> = (0..rows * 3).map(|_| rng.random_range(-1.0..1.0)).collect();

            let cache = net.forward_batch(&input, rows).unwrap();
            let mut batch_grads = GradientSet::zeros_like(&net);
            let batch_input_grad = net
                .backward_batch(&cache, &out_grad, Some(&mut batch_grads))
                .unwrap();

            let mut grads = GradientSet::zeros_like(&net);
            for r in 0..rows {
                let x = &input[r * 5..(r + 1) * 5];
                let (y, c) = net.forward(x).unwrap();
                assert!(close(&y, &cache.output()[r * 3..(r + 1) * 3]));
                assert!(close(&y, &net.infer_batch(x, 1).unwrap()));
                let gi = net
                    .backward_accumulate(&c, &out_grad[r * 3..(r + 1) * 3], Some(&mut grads))
                    .unwrap();
                assert!(close(&gi, &batch_input_grad[r * 5..(r + 1) * 5]));
            }
            let a: Vec<f64> = grads.values().collect();
            let b: Vec<f64> = batch_grads.values().collect();
            assert!(close(&a, &b));
        }
    }

    #[test]
    fn batch_dimension_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = MlpParams::new(&[2, 3, 1], Activation::Relu, Activation::Identity, &mut rng);
        assert!(net.forward_batch(&[1.0; 5], 2).is_err());
        let cache = net.forward_batch(&[1.0; 4], 2).unwrap();
        assert!(net.backward_batch(&cache, &[1.0], None).is_err());
    }
}
