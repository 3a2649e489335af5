use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::params::ParamSet;
use crate::{Error, Result};

/// Slope of the leaky rectifier on hidden layers.
pub const LEAKY_SLOPE: f64 = 0.01;

/// Dense network: leaky rectifier on hidden layers, identity on the output.
///
/// `weights[l]` has shape `(layer_sizes[l + 1], layer_sizes[l])`; inputs
/// are batched row-wise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Activations kept by [`Mlp::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    /// Input to every layer (the network input first).
    inputs: Vec<Array2<f64>>,
    /// Pre-activation of every layer.
    pre: Vec<Array2<f64>>,
}

fn leaky(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        LEAKY_SLOPE * x
    }
}

impl Mlp {
    /// All-zero network.
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(Error::InvalidInput(format!("bad layer sizes {layer_sizes:?}")));
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights: layer_sizes
                .windows(2)
                .map(|w| Array2::zeros((w[1], w[0])))
                .collect(),
            biases: layer_sizes[1..].iter().map(|&n| Array1::zeros(n)).collect(),
        })
    }

    /// He-normal weights and zero biases. With `zero_final` the last layer
    /// starts at zero so the network initially outputs zeros.
    pub fn new(layer_sizes: &[usize], zero_final: bool, rng: &mut impl Rng) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes)?;
        let last = net.weights.len() - 1;
        for (l, w) in net.weights.iter_mut().enumerate() {
            if zero_final && l == last {
                continue;
            }
            let normal = Normal::new(0.0, (2.0 / w.ncols() as f64).sqrt()).expect("positive std");
            w.mapv_inplace(|_| normal.sample(rng));
        }
        Ok(net)
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("at least two layers")
    }

    pub fn validate(&self) -> Result<()> {
        let chained = self.layer_sizes.len() == self.weights.len() + 1
            && self.weights.len() == self.biases.len()
            && self.weights.iter().zip(&self.biases).enumerate().all(|(l, (w, b))| {
                w.dim() == (self.layer_sizes[l + 1], self.layer_sizes[l]) && b.len() == w.nrows()
            });
        if !chained {
            return Err(Error::InvalidInput(format!(
                "weights do not chain through {:?}",
                self.layer_sizes
            )));
        }
        if !self.weights.iter().all(|w| w.iter().all(|x| x.is_finite()))
            || !self.biases.iter().all(|b| b.iter().all(|x| x.is_finite()))
        {
            return Err(Error::InvalidInput("non-finite network parameter".into()));
        }
        Ok(())
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "mlp input",
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        Ok(())
    }

    /// Batched forward pass returning the output and the cache.
    pub fn forward(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, MlpCache)> {
        self.check_input(&x)?;
        let n = self.weights.len();
        let mut inputs = Vec::with_capacity(n);
        let mut pre = Vec::with_capacity(n);
        let mut h = x.to_owned();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let z = h.dot(&w.t()) + b;
            inputs.push(h);
            h = if l + 1 < n { z.mapv(leaky) } else { z.clone() };
            pre.push(z);
        }
        Ok((h, MlpCache { inputs, pre }))
    }

    /// Forward pass without keeping activations.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(&x)?;
        let n = self.weights.len();
        let mut h = x.to_owned();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            h = h.dot(&w.t()) + b;
            if l + 1 < n {
                h.mapv_inplace(leaky);
            }
        }
        Ok(h)
    }

    /// Single-vector forward pass.
    pub fn forward_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let view = ArrayView2::from_shape((1, x.len()), x)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(self.predict(view)?.into_raw_vec_and_offset().0)
    }

    /// Reverse pass: gradients of a loss with respect to the parameters
    /// (summed over the batch) and to the input.
    pub fn backward(&self, cache: &MlpCache, grad_out: ArrayView2<f64>) -> Result<(Mlp, Array2<f64>)> {
        let n = self.weights.len();
        let batch = cache.inputs.first().map(|x| x.nrows()).unwrap_or(0);
        if cache.inputs.len() != n
            || cache.pre.len() != n
            || grad_out.dim() != (batch, self.output_dim())
            || cache.inputs.iter().enumerate().any(|(l, x)| x.ncols() != self.layer_sizes[l])
        {
            return Err(Error::InvalidInput("activation cache does not match network".into()));
        }
        let mut grads = Mlp::zeros(&self.layer_sizes)?;
        let mut delta = grad_out.to_owned();
        for l in (0..n).rev() {
            if l + 1 < n {
                delta.zip_mut_with(&cache.pre[l], |d, &z| {
                    if z <= 0.0 {
                        *d *= LEAKY_SLOPE
                    }
                });
            }
            // the transposed product can come back column-major
            grads.weights[l] = delta.t().dot(&cache.inputs[l]).as_standard_layout().into_owned();
            grads.biases[l] = delta.sum_axis(Axis(0));
            delta = delta.dot(&self.weights[l]);
        }
        Ok((grads, delta))
    }
}

impl ParamSet for Mlp {
    fn blocks(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::with_capacity(2 * self.weights.len());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            out.push((format!("layer{l}.weights"), w.as_slice().expect("standard layout")));
            out.push((format!("layer{l}.biases"), b.as_slice().expect("standard layout")));
        }
        out
    }

    fn blocks_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out = Vec::with_capacity(2 * self.weights.len());
        for (l, (w, b)) in self.weights.iter_mut().zip(self.biases.iter_mut()).enumerate() {
            out.push((format!("layer{l}.weights"), w.as_slice_mut().expect("standard layout")));
            out.push((format!("layer{l}.biases"), b.as_slice_mut().expect("standard layout")));
        }
        out
    }
}

/// Horizontal concatenation of two batches.
pub(crate) fn hcat(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Array2<f64> {
    concatenate(Axis(1), &[a, b]).expect("equal row counts")
}

/// Splits a batch into its first `k` columns and the rest.
pub(crate) fn hsplit(x: &Array2<f64>, k: usize) -> (Array2<f64>, Array2<f64>) {
    (x.slice(s![.., ..k]).to_owned(), x.slice(s![.., k..]).to_owned())
}
