//! Dense feed-forward network: ReLU hidden layers, identity output.

use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::collocation::{CollocationBasis, CollocationValues, TailDegree};
use crate::regressor::dataset::{NormStats, Schema};
use crate::{rng, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    /// Row-major `n_out x n_in`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(n_in: usize, n_out: usize) -> Self {
        Layer {
            n_in,
            n_out,
            weights: vec![0.0; n_in * n_out],
            biases: vec![0.0; n_out],
        }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (o, (row, b)) in out
            .iter_mut()
            .zip(self.weights.chunks(self.n_in).zip(&self.biases))
        {
            *o = b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }
}

/// Collocation basis the outputs refer to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub m: usize,
    pub xi_bar: f64,
    pub tail_degree: u8,
}

impl BasisSpec {
    pub fn from_basis(b: &CollocationBasis) -> Self {
        BasisSpec {
            m: b.m(),
            xi_bar: b.xi_bar(),
            tail_degree: b.tail().points() as u8 - 1,
        }
    }

    pub fn basis(&self) -> Result<CollocationBasis> {
        let tail = match self.tail_degree {
            1 => TailDegree::Linear,
            2 => TailDegree::Quadratic,
            d => {
                return Err(Error::param(
                    "tail_degree",
                    format!("expected 1 or 2, got {d}"),
                ))
            }
        };
        CollocationBasis::new(self.m, self.xi_bar, tail)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    pub schema: Schema,
    pub layers: Vec<Layer>,
    pub norm: NormStats,
    pub basis: BasisSpec,
}

/// Layout of the JSON model file.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema: Schema,
    layer_sizes: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    norm_stats: NormStats,
    basis: BasisSpec,
}

impl MlpModel {
    /// Network with `sizes = [inputs, hidden.., outputs]` and He-uniform
    /// weights `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))`, zero biases.
    pub fn new(
        schema: Schema,
        sizes: &[usize],
        norm: NormStats,
        basis: BasisSpec,
        seed: u64,
    ) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::param(
                "layer_sizes",
                "need at least input and output layers, all non-empty",
            ));
        }
        let mut r = rng::stream(seed, 0);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let mut l = Layer::zeros(w[0], w[1]);
                let lim = (6.0 / w[0] as f64).sqrt();
                for v in l.weights.iter_mut() {
                    *v = r.random_range(-lim..lim);
                }
                l
            })
            .collect();
        let model = MlpModel {
            schema,
            layers,
            norm,
            basis,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].n_in];
        s.extend(self.layers.iter().map(|l| l.n_out));
        s
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn n_outputs(&self) -> usize {
        self.layers[self.layers.len() - 1].n_out
    }

    fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Empty("layers"));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.weights.len() != l.n_in * l.n_out || l.biases.len() != l.n_out {
                return Err(Error::Dimension {
                    context: "layer parameters",
                    expected: l.n_in * l.n_out,
                    got: l.weights.len(),
                });
            }
            if i > 0 && self.layers[i - 1].n_out != l.n_in {
                return Err(Error::Dimension {
                    context: "layer chain",
                    expected: self.layers[i - 1].n_out,
                    got: l.n_in,
                });
            }
            if l.weights.iter().chain(&l.biases).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("network weights"));
            }
        }
        if self.n_inputs() != self.schema.n_features() || self.norm.in_min.len() != self.n_inputs()
        {
            return Err(Error::Dimension {
                context: "model inputs",
                expected: self.schema.n_features(),
                got: self.n_inputs(),
            });
        }
        if self.n_outputs() != self.basis.m || self.norm.out_min.len() != self.n_outputs() {
            return Err(Error::Dimension {
                context: "model outputs",
                expected: self.basis.m,
                got: self.n_outputs(),
            });
        }
        Ok(())
    }

    /// Forward pass in normalized coordinates.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut next = vec![0.0; l.n_out];
            l.apply(&cur, &mut next);
            if i < last {
                next.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            cur = next;
        }
        cur
    }

    /// Raw (denormalized, unprojected) network output for inputs `p`.
    pub fn predict_raw(&self, p: &[f64]) -> Result<Vec<f64>> {
        if p.len() != self.n_inputs() {
            return Err(Error::Dimension {
                context: "model inputs",
                expected: self.n_inputs(),
                got: p.len(),
            });
        }
        let z = self.forward(&self.norm.normalize_input(p));
        Ok(self.norm.denormalize_output(&z))
    }

    /// Predicted collocation values, projected onto non-decreasing sequences.
    pub fn predict_cvs(&self, p: &[f64]) -> Result<CollocationValues> {
        if !self.norm.input_inside(p, 1e-9) {
            log::warn!("model input {p:?} lies outside the trained ranges");
        }
        Ok(CollocationValues(self.predict_raw(p)?).isotonic())
    }

    pub fn collocation_basis(&self) -> Result<CollocationBasis> {
        self.basis.basis()
    }

    /// Mean squared error over rows `idx` and its gradient with respect to
    /// all weights and biases (same shapes as `self.layers`).
    pub fn loss_and_gradient(
        &self,
        xs: &[Vec<f64>],
        ys: &[Vec<f64>],
        idx: &[usize],
    ) -> (f64, Vec<Layer>) {
        let mut grads: Vec<Layer> = self
            .layers
            .iter()
            .map(|l| Layer::zeros(l.n_in, l.n_out))
            .collect();
        let scale = 1.0 / (idx.len() * self.n_outputs()) as f64;
        let last = self.layers.len() - 1;
        let mut acts: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.n_out]).collect();
        let mut loss = 0.0;
        for &i in idx {
            let x = &xs[i];
            for k in 0..self.layers.len() {
                let (prev, rest) = acts.split_at_mut(k);
                let input: &[f64] = if k == 0 { x } else { &prev[k - 1] };
                self.layers[k].apply(input, &mut rest[0]);
                if k < last {
                    rest[0].iter_mut().for_each(|v| *v = v.max(0.0));
                }
            }
            let mut delta: Vec<f64> = acts[last]
                .iter()
                .zip(&ys[i])
                .map(|(o, y)| {
                    loss += (o - y) * (o - y);
                    2.0 * (o - y) * scale
                })
                .collect();
            for k in (0..self.layers.len()).rev() {
                let input: &[f64] = if k == 0 { x } else { &acts[k - 1] };
                let l = &self.layers[k];
                let g = &mut grads[k];
                for o in 0..l.n_out {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    g.biases[o] += d;
                    let row = &mut g.weights[o * l.n_in..(o + 1) * l.n_in];
                    for (gw, v) in row.iter_mut().zip(input) {
                        *gw += d * v;
                    }
                }
                if k > 0 {
                    let mut back = vec![0.0; l.n_in];
                    for o in 0..l.n_out {
                        let d = delta[o];
                        if d == 0.0 {
                            continue;
                        }
                        for (b, w) in back
                            .iter_mut()
                            .zip(&l.weights[o * l.n_in..(o + 1) * l.n_in])
                        {
                            *b += d * w;
                        }
                    }
                    // ReLU derivative: activations equal zero exactly where inactive.
                    for (b, a) in back.iter_mut().zip(&acts[k - 1]) {
                        if *a <= 0.0 {
                            *b = 0.0;
                        }
                    }
                    delta = back;
                }
            }
        }
        (loss * scale, grads)
    }

    /// Mean squared error in normalized coordinates over rows `idx`.
    pub fn mse(&self, xs: &[Vec<f64>], ys: &[Vec<f64>], idx: &[usize]) -> f64 {
        let mut s = 0.0;
        for &i in idx {
            let o = self.forward(&xs[i]);
            s += o
                .iter()
                .zip(&ys[i])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        }
        s / (idx.len() * self.n_outputs()) as f64
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            schema: self.schema,
            layer_sizes: self.layer_sizes(),
            weights: self.layers.iter().map(|l| l.weights.clone()).collect(),
            biases: self.layers.iter().map(|l| l.biases.clone()).collect(),
            norm_stats: self.norm.clone(),
            basis: self.basis,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(text)?;
        if f.layer_sizes.len() < 2
            || f.weights.len() != f.layer_sizes.len() - 1
            || f.biases.len() != f.weights.len()
        {
            return Err(Error::Dimension {
                context: "model file layers",
                expected: f.layer_sizes.len().saturating_sub(1),
                got: f.weights.len(),
            });
        }
        let layers = f
            .layer_sizes
            .windows(2)
            .zip(f.weights.into_iter().zip(f.biases))
            .map(|(w, (weights, biases))| Layer {
                n_in: w[0],
                n_out: w[1],
                weights,
                biases,
            })
            .collect();
        let model = MlpModel {
            schema: f.schema,
            layers,
            norm: f.norm_stats,
            basis: f.basis,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
