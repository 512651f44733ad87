//! Oracles shared by the integration tests and the acceptance suite.

#![allow(dead_code)]

use mddpg::geometry::Vec2;
use mddpg::neural::{Activation, MlpParams};
use mddpg::predictor::{fit_controls, HistoryBuffer, PredictorConfig};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-4;

/// Relative error with a floor on the denominator, so gradients that are
/// zero up to roundoff compare on an absolute scale.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Random net with 1 to 4 layers of width at most 32.
pub fn random_net(rng: &mut ChaCha8Rng, hidden: Activation, output: Activation) -> MlpParams {
    let layers = rng.random_range(1..=4);
    let mut dims = vec![rng.random_range(1..=32)];
    for _ in 0..layers {
        dims.push(rng.random_range(1..=32));
    }
    MlpParams::new(&dims, hidden, output, rng)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

/// Forward pass written directly from the layer definitions. Also returns
/// the smallest pre-activation magnitude seen on a ReLU layer.
pub fn plain_forward(net: &MlpParams, input: &[f64]) -> (Vec<f64>, f64) {
    let mut x = input.to_vec();
    let mut closest_kink = f64::INFINITY;
    for layer in &net.layers {
        let mut y = Vec::with_capacity(layer.outputs);
        for o in 0..layer.outputs {
            let mut z = layer.bias[o];
            for i in 0..layer.inputs {
                z += layer.weights[o * layer.inputs + i] * x[i];
            }
            y.push(match layer.activation {
                Activation::Identity => z,
                Activation::Relu => {
                    closest_kink = closest_kink.min(z.abs());
                    z.max(0.0)
                }
                Activation::Tanh => z.tanh(),
            });
        }
        x = y;
    }
    (x, closest_kink)
}

fn objective(net: &MlpParams, input: &[f64], weights: &[f64]) -> f64 {
    net.infer(input)
        .unwrap()
        .iter()
        .zip(weights)
        .map(|(y, g)| y * g)
        .sum()
}

/// True when no ReLU pre-activation is close enough to zero for a
/// finite-difference step to cross the kink.
pub fn away_from_kinks(net: &MlpParams, input: &[f64]) -> bool {
    let scale = 1.0 + input.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    plain_forward(net, input).1 > 1e3 * FD_STEP * scale
}

/// Largest relative error between backpropagated gradients of
/// `output · out_grad` and central differences, over every parameter and
/// every input coordinate.
pub fn fd_max_error(net: &MlpParams, input: &[f64], out_grad: &[f64]) -> f64 {
    let (_, cache) = net.forward(input).unwrap();
    let (grads, input_grad) = net.backward(&cache, out_grad).unwrap();
    let analytic: Vec<f64> = grads.values().collect();

    let mut worst = 0.0f64;
    let mut probe = net.clone();
    for (k, a) in analytic.iter().enumerate() {
        let original = net.parameters().nth(k).unwrap();
        *probe.parameters_mut().nth(k).unwrap() = original + FD_STEP;
        let up = objective(&probe, input, out_grad);
        *probe.parameters_mut().nth(k).unwrap() = original - FD_STEP;
        let down = objective(&probe, input, out_grad);
        *probe.parameters_mut().nth(k).unwrap() = original;
        worst = worst.max(rel_err(*a, (up - down) / (2.0 * FD_STEP)));
    }
    let mut x = input.to_vec();
    for (i, a) in input_grad.iter().enumerate() {
        let original = x[i];
        x[i] = original + FD_STEP;
        let up = objective(net, &x, out_grad);
        x[i] = original - FD_STEP;
        let down = objective(net, &x, out_grad);
        x[i] = original;
        worst = worst.max(rel_err(*a, (up - down) / (2.0 * FD_STEP)));
    }
    worst
}

/// Runs `count` kink-free gradient checks for nets with `hidden`
/// activations and returns the worst relative error.
pub fn gradient_sweep(hidden: Activation, count: usize, seed: u64) -> f64 {
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < count {
        let output = [Activation::Identity, Activation::Tanh][done % 2];
        let net = random_net(&mut rng, hidden, output);
        let input = random_vec(&mut rng, net.input_dim(), 2.0);
        if hidden == Activation::Relu && !away_from_kinks(&net, &input) {
            continue;
        }
        let out_grad = random_vec(&mut rng, net.output_dim(), 1.0);
        worst = worst.max(fd_max_error(&net, &input, &out_grad));
        done += 1;
    }
    worst
}

/// Largest gap `|theta'_n - theta| - (1 - tau)^n |theta'_0 - theta|`,
/// relative to the initial distance, over `steps` repeated soft updates.
pub fn soft_update_contraction_error(tau: f64, steps: usize, seed: u64) -> f64 {
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let online = MlpParams::new(
        &[6, 16, 16, 2],
        Activation::Relu,
        Activation::Tanh,
        &mut rng,
    );
    let mut target = MlpParams::new(
        &[6, 16, 16, 2],
        Activation::Relu,
        Activation::Tanh,
        &mut rng,
    );
    let distance = |t: &MlpParams| {
        t.parameters()
            .zip(online.parameters())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let d0 = distance(&target);
    let mut worst = 0.0f64;
    for n in 1..=steps {
        target.soft_update(&online, tau).unwrap();
        let expected = (1.0 - tau).powi(n as i32) * d0;
        worst = worst.max((distance(&target) - expected).abs() / d0);
    }
    worst
}

/// Fitting cost of a constant control, simulated step by step from the
/// first buffered position with the first-difference velocity.
pub fn mpc_oracle_cost(history: &[(f64, f64)], ux: f64, uy: f64, rho: f64) -> f64 {
    let (mut px, mut py) = history[0];
    let (mut vx, mut vy) = (history[1].0 - history[0].0, history[1].1 - history[0].1);
    let mut cost = 0.0;
    for (k, &(ox, oy)) in history.iter().enumerate() {
        if k > 0 {
            px += vx;
            py += vy;
            vx += ux;
            vy += uy;
        }
        cost += (px - ox).powi(2) + (py - oy).powi(2);
    }
    cost + rho * (history.len() - 1) as f64 * (ux * ux + uy * uy)
}

/// The same cost restricted to one coordinate.
pub fn mpc_axis_cost(history: &[f64], u: f64, rho: f64) -> f64 {
    let mut p = history[0];
    let mut v = history[1] - history[0];
    let mut cost = 0.0;
    for (k, &o) in history.iter().enumerate() {
        if k > 0 {
            p += v;
            v += u;
        }
        cost += (p - o).powi(2);
    }
    cost + rho * (history.len() - 1) as f64 * u * u
}

pub fn control_grid(u_max: f64, step: f64) -> impl Iterator<Item = f64> {
    let n = (2.0 * u_max / step).round() as i64;
    (0..=n).map(move |i| -u_max + i as f64 * step)
}

/// Constant-acceleration track with uniform position noise of +-3.
pub fn noisy_history(rng: &mut ChaCha8Rng, len: usize) -> Vec<(f64, f64)> {
    let mut p = (
        rng.random_range(-100.0..100.0),
        rng.random_range(-100.0..100.0),
    );
    let mut v = (rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0));
    let a = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push((
            p.0 + rng.random_range(-3.0..3.0),
            p.1 + rng.random_range(-3.0..3.0),
        ));
        p = (p.0 + v.0, p.1 + v.1);
        v = (v.0 + a.0, v.1 + a.1);
    }
    out
}

pub fn history_buffer(history: &[(f64, f64)]) -> HistoryBuffer {
    HistoryBuffer::from_positions(history.len(), history.iter().map(|&(x, y)| Vec2::new(x, y)))
}

/// Positions of the double integrator driven by a constant control.
pub fn generate_track(p0: Vec2, v0: Vec2, u: Vec2, len: usize) -> Vec<Vec2> {
    let (mut p, mut v) = (p0, v0);
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(p);
        p = p + v;
        v = v + u;
    }
    out
}

/// Minimum of the per-axis cost over `[-u_max, u_max]` by repeated grid
/// search, each pass searching a finer grid around the previous best point.
pub fn mpc_axis_grid_min(history: &[f64], rho: f64, u_max: f64) -> f64 {
    let mut best_u = 0.0;
    let mut best = f64::INFINITY;
    for u in control_grid(u_max, 1e-3) {
        let c = mpc_axis_cost(history, u, rho);
        if c < best {
            (best, best_u) = (c, u);
        }
    }
    let mut step = 1e-3;
    for _ in 0..4 {
        let fine = step / 100.0;
        let center = best_u;
        for i in -100..=100 {
            let u = (center + i as f64 * fine).clamp(-u_max, u_max);
            let c = mpc_axis_cost(history, u, rho);
            if c < best {
                (best, best_u) = (c, u);
            }
        }
        step = fine;
    }
    best
}

/// Absolute difference between the fitted cost and the refined grid-search
/// minimum, for one history with `u_max = 1`.
pub fn mpc_refined_gap(history: &[(f64, f64)], rho: f64) -> f64 {
    let cfg = PredictorConfig {
        horizon: 5,
        fit_window: history.len(),
        control_penalty: rho,
        u_max: 1.0,
    };
    let fit = fit_controls(&history_buffer(history), &cfg).unwrap();
    let xs: Vec<f64> = history.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = history.iter().map(|p| p.1).collect();
    let grid_min = mpc_axis_grid_min(&xs, rho, 1.0) + mpc_axis_grid_min(&ys, rho, 1.0);
    (mpc_oracle_cost(history, fit.control.x, fit.control.y, rho) - grid_min).abs()
}
