//! Mini-batch Adam training with step learning-rate decay and best-epoch
//! selection on the validation split.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::collocation::CollocationBasis;
use crate::regressor::dataset::TrainingSet;
use crate::regressor::mlp::{BasisSpec, Layer, MlpModel};
use crate::{rng, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Learning rate is multiplied by `decay_rate` every `decay_step` epochs.
    pub decay_rate: f64,
    pub decay_step: usize,
    /// Train / validation / test fractions.
    pub split: (f64, f64, f64),
    pub seed: u64,
}

impl TrainConfig {
    /// Full-scale settings: three hidden layers of 200 units, 3000 epochs.
    pub fn full_scale() -> Self {
        TrainConfig {
            hidden: vec![200, 200, 200],
            epochs: 3000,
            batch_size: 1024,
            learning_rate: 1e-3,
            decay_rate: 0.1,
            decay_step: 1000,
            split: (0.7, 0.2, 0.1),
            seed: 0,
        }
    }

    /// Small network for the benchmark toy set: two hidden layers of 20.
    pub fn toy() -> Self {
        TrainConfig {
            hidden: vec![20, 20],
            ..Self::full_scale()
        }
    }

    fn validate(&self) -> Result<()> {
        let (a, b, c) = self.split;
        if a <= 0.0 || b < 0.0 || c < 0.0 || ((a + b + c) - 1.0).abs() > 1e-9 {
            return Err(Error::param(
                "split",
                "fractions must be non-negative and sum to 1",
            ));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.decay_step == 0 {
            return Err(Error::param(
                "epochs",
                "epochs, batch size and decay step must be positive",
            ));
        }
        if !(self.learning_rate > 0.0) || !(self.decay_rate > 0.0) {
            return Err(Error::param("learning_rate", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub best_epoch: usize,
    pub initial_train_mse: f64,
    pub final_train_mse: f64,
    pub best_val_mse: f64,
    pub test_mse: f64,
    /// Coefficient of determination per output on the test split,
    /// in original units.
    pub test_r2: Vec<f64>,
    /// Mean batch loss per epoch.
    pub history: Vec<f64>,
}

impl TrainReport {
    pub fn worst_r2(&self) -> f64 {
        self.test_r2.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

struct Adam {
    m: Vec<Layer>,
    v: Vec<Layer>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(layers: &[Layer]) -> Self {
        let zero = |l: &Layer| Layer {
            weights: vec![0.0; l.weights.len()],
            biases: vec![0.0; l.biases.len()],
            ..l.clone()
        };
        Adam {
            m: layers.iter().map(zero).collect(),
            v: layers.iter().map(zero).collect(),
            t: 0,
        }
    }

    fn step(&mut self, layers: &mut [Layer], grads: &[Layer], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for k in 0..layers.len() {
            let upd = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
                for i in 0..p.len() {
                    m[i] = Self::B1 * m[i] + (1.0 - Self::B1) * g[i];
                    v[i] = Self::B2 * v[i] + (1.0 - Self::B2) * g[i] * g[i];
                    p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + Self::EPS);
                }
            };
            upd(
                &mut layers[k].weights,
                &grads[k].weights,
                &mut self.m[k].weights,
                &mut self.v[k].weights,
            );
            upd(
                &mut layers[k].biases,
                &grads[k].biases,
                &mut self.m[k].biases,
                &mut self.v[k].biases,
            );
        }
    }
}

/// Row indices of the train, validation and test splits.
pub fn split_indices(
    n: usize,
    split: (f64, f64, f64),
    seed: u64,
) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream(seed, 0));
    let n_train = ((n as f64 * split.0).round() as usize).clamp(1, n);
    let n_val = ((n as f64 * split.1).round() as usize).min(n - n_train);
    let test = idx.split_off(n_train + n_val);
    let val = idx.split_off(n_train);
    (idx, val, test)
}

/// Trains a network on `ts`. The returned model is the one with the lowest
/// validation MSE over all epochs (the last epoch if there is no validation
/// split). Deterministic for a given `cfg.seed`.
pub fn train(
    ts: &TrainingSet,
    basis: &CollocationBasis,
    cfg: &TrainConfig,
) -> Result<(MlpModel, TrainReport)> {
    cfg.validate()?;
    if ts.len() < 3 {
        return Err(Error::TooFewSamples(format!("{} training rows", ts.len())));
    }
    if basis.m() != ts.n_outputs() {
        return Err(Error::Dimension {
            context: "basis size",
            expected: ts.n_outputs(),
            got: basis.m(),
        });
    }
    let norm = ts.norm_stats()?;
    let xs: Vec<Vec<f64>> = (0..ts.len())
        .map(|i| norm.normalize_input(ts.input(i)))
        .collect();
    let ys: Vec<Vec<f64>> = (0..ts.len())
        .map(|i| norm.normalize_output(ts.output(i)))
        .collect();
    let (mut tr, val, test) = split_indices(ts.len(), cfg.split, rng::derive(cfg.seed, 1));

    let mut sizes = vec![ts.n_inputs()];
    sizes.extend(&cfg.hidden);
    sizes.push(ts.n_outputs());
    let mut model = MlpModel::new(
        ts.schema(),
        &sizes,
        norm,
        BasisSpec::from_basis(basis),
        rng::derive(cfg.seed, 2),
    )?;
    let initial_train_mse = model.mse(&xs, &ys, &tr);
    let mut adam = Adam::new(&model.layers);
    let mut best = (f64::INFINITY, 0usize, model.layers.clone());
    let mut history = Vec::with_capacity(cfg.epochs);
    let order_seed = rng::derive(cfg.seed, 3);

    for epoch in 0..cfg.epochs {
        let lr = cfg.learning_rate * cfg.decay_rate.powi((epoch / cfg.decay_step) as i32);
        tr.shuffle(&mut rng::stream(order_seed, epoch as u64));
        let mut total = 0.0;
        let mut batches = 0;
        for batch in tr.chunks(cfg.batch_size) {
            let (loss, grads) = model.loss_and_gradient(&xs, &ys, batch);
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            adam.step(&mut model.layers, &grads, lr);
            total += loss;
            batches += 1;
        }
        history.push(total / batches as f64);
        let score = if val.is_empty() {
            model.mse(&xs, &ys, &tr)
        } else {
            model.mse(&xs, &ys, &val)
        };
        if !score.is_finite() {
            return Err(Error::Divergence { epoch, loss: score });
        }
        if score < best.0 || val.is_empty() {
            best = (score, epoch, model.layers.clone());
        }
        if epoch % 100 == 0 {
            log::debug!(
                "epoch {epoch}: train {:.3e}, selection {:.3e}",
                history[epoch],
                score
            );
        }
    }
    model.layers = best.2;
    tr.sort_unstable();
    let final_train_mse = model.mse(&xs, &ys, &tr);
    let eval = if test.is_empty() { &val } else { &test };
    let eval = if eval.is_empty() { &tr } else { eval };
    let test_mse = model.mse(&xs, &ys, eval);
    let test_r2 = r2_per_output(&model, ts, eval)?;
    let report = TrainReport {
        best_epoch: best.1,
        initial_train_mse,
        final_train_mse,
        best_val_mse: best.0,
        test_mse,
        test_r2,
        history,
    };
    Ok((model, report))
}

/// Per-output `R^2 = 1 - SS_res / SS_tot` of raw predictions on rows `idx`.
/// An output that is constant over `idx` scores 1 if predicted exactly and
/// `-inf` otherwise.
pub fn r2_per_output(model: &MlpModel, ts: &TrainingSet, idx: &[usize]) -> Result<Vec<f64>> {
    let m = ts.n_outputs();
    let mut mean = vec![0.0; m];
    for &i in idx {
        for (s, v) in mean.iter_mut().zip(ts.output(i)) {
            *s += v;
        }
    }
    mean.iter_mut().for_each(|s| *s /= idx.len() as f64);
    let mut ss_res = vec![0.0; m];
    let mut ss_tot = vec![0.0; m];
    for &i in idx {
        let pred = model.predict_raw(ts.input(i))?;
        for j in 0..m {
            let y = ts.output(i)[j];
            ss_res[j] += (pred[j] - y) * (pred[j] - y);
            ss_tot[j] += (y - mean[j]) * (y - mean[j]);
        }
    }
    Ok(ss_res
        .iter()
        .zip(&ss_tot)
        .map(|(r, t)| {
            if *t > 0.0 {
                1.0 - r / t
            } else if *r == 0.0 {
                1.0
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collocation::TailDegree;
    use crate::regressor::dataset::Schema;

    #[test]
    fn split_sizes() {
        let (a, b, c) = split_indices(100, (0.7, 0.2, 0.1), 1);
        assert_eq!((a.len(), b.len(), c.len()), (70, 20, 10));
        let mut all: Vec<usize> = a.iter().chain(&b).chain(&c).copied().collect();
        all.sort();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn bad_split_rejected() {
        let mut cfg = TrainConfig::toy();
        cfg.split = (0.5, 0.2, 0.2);
        let mut ts = TrainingSet::new(Schema::FxL, 3);
        for i in 0..10 {
            ts.push(&[i as f64; 6], &[0.0, 1.0, 2.0]).unwrap();
        }
        let b = CollocationBasis::new(3, 2.0, TailDegree::Linear).unwrap();
        assert!(train(&ts, &b, &cfg).is_err());
    }
}
