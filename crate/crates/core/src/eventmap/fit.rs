//! Regression of a scalar SIREN event function on labelled points.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EventError;
use crate::netpoly::{Activation, LayerActivation, OutputWiring, PolicyNet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Hidden layer widths.
    pub hidden: Vec<usize>,
    pub w0: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            hidden: vec![8],
            w0: 3.0,
            iterations: 3000,
            learning_rate: 3e-2,
            holdout_fraction: 0.2,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FitReport {
    pub net: PolicyNet,
    pub train_mse: f64,
    pub holdout_mse: f64,
    pub holdout_rmse: f64,
    pub holdout_count: usize,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;

    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * grad[i];
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * grad[i] * grad[i];
            params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + 1e-12);
        }
    }
}

/// Flat parameter vector `[W₀, b₀, W₁, b₁, …]`.
fn flatten(net: &PolicyNet) -> Vec<f64> {
    net.layers()
        .iter()
        .flat_map(|l| l.weights().iter().chain(l.bias()).copied())
        .collect()
}

fn unflatten(net: &mut PolicyNet, p: &[f64]) {
    let mut off = 0;
    for l in net.layers_mut() {
        let (w, b) = l.params_mut();
        w.copy_from_slice(&p[off..off + w.len()]);
        off += w.len();
        b.copy_from_slice(&p[off..off + b.len()]);
        off += b.len();
    }
}

/// Mean squared error over `idx`, accumulating its gradient into `grad`
/// when given.
fn loss_and_grad(
    net: &PolicyNet,
    samples: &[([f64; 3], f64)],
    idx: &[usize],
    mut grad: Option<&mut [f64]>,
) -> f64 {
    let layers = net.layers();
    let (shift, scale) = (net.input_shift(), net.input_scale());
    let inv_n = 1.0 / idx.len() as f64;
    // acts[l] is the input of layer l; slopes[l] its activation slopes
    let mut acts: Vec<Vec<f64>> = std::iter::once(3)
        .chain(layers.iter().map(|l| l.rows()))
        .map(|n| vec![0.0; n])
        .collect();
    let mut slopes: Vec<Vec<f64>> = layers.iter().map(|l| vec![0.0; l.rows()]).collect();
    let widest = layers.iter().map(|l| l.rows().max(l.cols())).max().unwrap_or(1);
    let (mut delta, mut next) = (vec![0.0; widest], vec![0.0; widest]);
    let offsets: Vec<usize> = layers
        .iter()
        .scan(0, |o, l| {
            let here = *o;
            *o += l.param_count();
            Some(here)
        })
        .collect();
    let mut loss = 0.0;
    for &s in idx {
        let (p, target) = &samples[s];
        for j in 0..3 {
            acts[0][j] = (p[j] - shift[j]) * scale[j];
        }
        for (li, l) in layers.iter().enumerate() {
            let (head, tail) = acts.split_at_mut(li + 1);
            let (x, a) = (&head[li], &mut tail[0]);
            let w = l.weights();
            for i in 0..l.rows() {
                let row = &w[i * l.cols()..(i + 1) * l.cols()];
                let z = l.bias()[i] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
                let (v, dv) = l.activation().get(i).value_and_slope(z);
                a[i] = v;
                slopes[li][i] = dv;
            }
        }
        let r = acts[layers.len()][0] - target;
        loss += r * r * inv_n;
        let Some(g) = grad.as_deref_mut() else {
            continue;
        };
        delta[0] = 2.0 * r * inv_n * slopes[layers.len() - 1][0];
        for (li, l) in layers.iter().enumerate().rev() {
            let off = offsets[li];
            let (rows, cols) = (l.rows(), l.cols());
            let x = &acts[li];
            let w = l.weights();
            for i in 0..rows {
                let gi = &mut g[off + i * cols..off + (i + 1) * cols];
                for (gij, xj) in gi.iter_mut().zip(x) {
                    *gij += delta[i] * xj;
                }
                g[off + rows * cols + i] += delta[i];
            }
            if li > 0 {
                for j in 0..cols {
                    let s: f64 = (0..rows).map(|i| w[i * cols + j] * delta[i]).sum();
                    next[j] = s * slopes[li - 1][j];
                }
                std::mem::swap(&mut delta, &mut next);
            }
        }
    }
    loss
}

/// Fits `p ↦ value` with a sine-activated network and a linear head,
/// trained by full-batch Adam on a random train/holdout split.
pub fn fit_event_net(samples: &[([f64; 3], f64)], cfg: &FitConfig) -> Result<FitReport, EventError> {
    let mut dims = vec![3];
    dims.extend(&cfg.hidden);
    dims.push(1);
    let mut net = PolicyNet::random_siren(
        &dims,
        cfg.w0,
        LayerActivation::Uniform(Activation::Linear),
        OutputWiring::Event,
        cfg.seed,
    )?;
    let required = 10 * net.param_count();
    if samples.len() < required {
        return Err(EventError::InsufficientSamples {
            samples: samples.len(),
            required,
        });
    }
    // map the sample bounding box to [-1, 1]³
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for (p, _) in samples {
        for j in 0..3 {
            lo[j] = lo[j].min(p[j]);
            hi[j] = hi[j].max(p[j]);
        }
    }
    let shift = (0..3).map(|j| 0.5 * (lo[j] + hi[j])).collect();
    let scale = (0..3)
        .map(|j| {
            let half = 0.5 * (hi[j] - lo[j]);
            if half > 0.0 {
                1.0 / half
            } else {
                1.0
            }
        })
        .collect();
    net = net.with_input_scaling(shift, scale)?;

    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9));
    let n_hold = ((samples.len() as f64) * cfg.holdout_fraction.clamp(0.0, 0.9)).round() as usize;
    let (hold, train) = order.split_at(n_hold);

    let mut params = flatten(&net);
    let mut grad = vec![0.0; params.len()];
    let mut adam = Adam::new(params.len());
    let mut train_mse = f64::NAN;
    for it in 0..cfg.iterations {
        grad.iter_mut().for_each(|g| *g = 0.0);
        train_mse = loss_and_grad(&net, samples, train, Some(&mut grad));
        if !train_mse.is_finite() {
            return Err(EventError::Diverged {
                seed: cfg.seed,
                learning_rate: cfg.learning_rate,
                iteration: it,
            });
        }
        // cosine decay to 1% of the initial rate
        let frac = it as f64 / cfg.iterations as f64;
        let lr = cfg.learning_rate * (0.01 + 0.99 * 0.5 * (1.0 + (std::f64::consts::PI * frac).cos()));
        adam.step(&mut params, &grad, lr);
        unflatten(&mut net, &params);
    }
    if cfg.iterations > 0 {
        train_mse = loss_and_grad(&net, samples, train, None);
    }
    let holdout_mse = if hold.is_empty() {
        f64::NAN
    } else {
        loss_and_grad(&net, samples, hold, None)
    };
    Ok(FitReport {
        net,
        train_mse,
        holdout_mse,
        holdout_rmse: holdout_mse.sqrt(),
        holdout_count: hold.len(),
    })
}
