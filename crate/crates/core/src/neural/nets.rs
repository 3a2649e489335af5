use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{hcat, hsplit, Mlp, MlpCache};
use super::params::{prefixed, prefixed_mut, ParamSet};
use crate::{Error, Result};

/// Two chained MLPs: `A` encodes a primary input, `B` maps the encoding
/// concatenated with a side input (the scene descriptor) to the output.
///
/// The trajectory update network, the discriminator and the regression
/// baselines all share this layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStageNet {
    pub a: Mlp,
    pub b: Mlp,
}

pub struct TwoStageCache {
    a: MlpCache,
    b: MlpCache,
}

/// Layer widths of a [`TwoStageNet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStageShape {
    pub input: usize,
    pub a_hidden: Vec<usize>,
    pub embedding: usize,
    pub side: usize,
    pub b_hidden: Vec<usize>,
    pub output: usize,
}

impl TwoStageShape {
    pub fn a_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input];
        s.extend(&self.a_hidden);
        s.push(self.embedding);
        s
    }

    pub fn b_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.embedding + self.side];
        s.extend(&self.b_hidden);
        s.push(self.output);
        s
    }
}

impl TwoStageNet {
    /// Random init; the final layer of `B` starts at zero.
    pub fn new(shape: &TwoStageShape, rng: &mut impl Rng) -> Result<Self> {
        Ok(Self {
            a: Mlp::new(&shape.a_sizes(), false, rng)?,
            b: Mlp::new(&shape.b_sizes(), true, rng)?,
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            a: Mlp::zeros(&self.a.layer_sizes).expect("valid sizes"),
            b: Mlp::zeros(&self.b.layer_sizes).expect("valid sizes"),
        }
    }

    pub fn shape(&self) -> TwoStageShape {
        let a = &self.a.layer_sizes;
        let b = &self.b.layer_sizes;
        let embedding = *a.last().expect("sizes");
        TwoStageShape {
            input: a[0],
            a_hidden: a[1..a.len() - 1].to_vec(),
            embedding,
            side: b[0] - embedding,
            b_hidden: b[1..b.len() - 1].to_vec(),
            output: *b.last().expect("sizes"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.a.validate()?;
        self.b.validate()?;
        if self.b.input_dim() < self.a.output_dim() {
            return Err(Error::InvalidInput("B is narrower than A's embedding".into()));
        }
        Ok(())
    }

    pub fn forward(&self, input: ArrayView2<f64>, side: ArrayView2<f64>) -> Result<(Array2<f64>, TwoStageCache)> {
        let (e, a) = self.a.forward(input)?;
        let (out, b) = self.b.forward(hcat(e.view(), side).view())?;
        Ok((out, TwoStageCache { a, b }))
    }

    pub fn predict(&self, input: ArrayView2<f64>, side: ArrayView2<f64>) -> Result<Array2<f64>> {
        let e = self.a.predict(input)?;
        self.b.predict(hcat(e.view(), side).view())
    }

    /// Parameter gradients and the gradient with respect to the primary
    /// input.
    pub fn backward(&self, cache: &TwoStageCache, grad_out: ArrayView2<f64>) -> Result<(TwoStageNet, Array2<f64>)> {
        let (gb, d_bin) = self.b.backward(&cache.b, grad_out)?;
        let (d_e, _) = hsplit(&d_bin, self.a.output_dim());
        let (ga, d_in) = self.a.backward(&cache.a, d_e.view())?;
        Ok((TwoStageNet { a: ga, b: gb }, d_in))
    }
}

impl ParamSet for TwoStageNet {
    fn blocks(&self) -> Vec<(String, &[f64])> {
        let mut out = prefixed("A", self.a.blocks());
        out.extend(prefixed("B", self.b.blocks()));
        out
    }

    fn blocks_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out = prefixed_mut("A", self.a.blocks_mut());
        out.extend(prefixed_mut("B", self.b.blocks_mut()));
        out
    }
}

pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus_inverse(y: f64) -> f64 {
    y + (-(-y).exp_m1()).ln()
}

/// Keeps the gap `z_max - z_min` representable next to `z_min`.
const GAP_FLOOR_INPUT: f64 = -30.0;
/// Keeps `z_min` from underflowing to zero.
const MIN_FLOOR_INPUT: f64 = -700.0;

/// Depth-calibration regressor: an MLP whose two raw outputs pass through
/// an ordered softplus transform, so `0 < z_min < z_max` always holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthNet {
    pub mlp: Mlp,
    /// `(z_min, z_max)` produced by a zero raw output.
    pub prior: (f64, f64),
}

pub struct DepthNetCache {
    mlp: MlpCache,
    raw: Array2<f64>,
}

impl DepthNet {
    pub fn new(layer_sizes: &[usize], prior: (f64, f64), rng: &mut impl Rng) -> Result<Self> {
        if layer_sizes.last() != Some(&2) {
            return Err(Error::InvalidInput("depth net must end in two outputs".into()));
        }
        if !(prior.0 > 0.0 && prior.1 > prior.0) {
            return Err(Error::InvalidInput(format!("bad depth prior {prior:?}")));
        }
        Ok(Self {
            mlp: Mlp::new(layer_sizes, true, rng)?,
            prior,
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            mlp: Mlp::zeros(&self.mlp.layer_sizes).expect("valid sizes"),
            prior: self.prior,
        }
    }

    fn offsets(&self) -> (f64, f64) {
        (softplus_inverse(self.prior.0), softplus_inverse(self.prior.1 - self.prior.0))
    }

    fn transform(&self, raw: &Array2<f64>) -> Vec<(f64, f64)> {
        let (b0, b1) = self.offsets();
        raw.axis_iter(Axis(0))
            .map(|r| {
                let lo = softplus((r[0] + b0).max(MIN_FLOOR_INPUT));
                (lo, lo + softplus((r[1] + b1).max(GAP_FLOOR_INPUT)))
            })
            .collect()
    }

    pub fn forward(&self, input: ArrayView2<f64>) -> Result<(Vec<(f64, f64)>, DepthNetCache)> {
        let (raw, mlp) = self.mlp.forward(input)?;
        let out = self.transform(&raw);
        Ok((out, DepthNetCache { mlp, raw }))
    }

    pub fn predict(&self, input: ArrayView2<f64>) -> Result<Vec<(f64, f64)>> {
        Ok(self.transform(&self.mlp.predict(input)?))
    }

    /// Backward pass from gradients with respect to `(z_min, z_max)`.
    pub fn backward(&self, cache: &DepthNetCache, grad: &[(f64, f64)]) -> Result<(DepthNet, Array2<f64>)> {
        let (b0, b1) = self.offsets();
        if grad.len() != cache.raw.nrows() {
            return Err(Error::InvalidInput("gradient batch does not match cache".into()));
        }
        let mut d_raw = Array2::zeros(cache.raw.raw_dim());
        for (i, (g_lo, g_hi)) in grad.iter().enumerate() {
            let (x0, x1) = (cache.raw[[i, 0]] + b0, cache.raw[[i, 1]] + b1);
            d_raw[[i, 0]] = if x0 > MIN_FLOOR_INPUT { (g_lo + g_hi) * sigmoid(x0) } else { 0.0 };
            d_raw[[i, 1]] = if x1 > GAP_FLOOR_INPUT { g_hi * sigmoid(x1) } else { 0.0 };
        }
        let (mlp, d_in) = self.mlp.backward(&cache.mlp, d_raw.view())?;
        Ok((DepthNet { mlp, prior: self.prior }, d_in))
    }
}

impl ParamSet for DepthNet {
    fn blocks(&self) -> Vec<(String, &[f64])> {
        prefixed("H", self.mlp.blocks())
    }

    fn blocks_mut(&mut self) -> Vec<(String, &mut [f64])> {
        prefixed_mut("H", self.mlp.blocks_mut())
    }
}

/// Per-coordinate standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    /// Statistics over `rows`; standard deviations below `floor` are
    /// raised to it.
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64]>, floor: f64) -> Result<Self> {
        let rows: Vec<&[f64]> = rows.into_iter().collect();
        let first = rows.first().ok_or_else(|| Error::Training("no rows to normalize".into()))?;
        let dim = first.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                context: "normalizer rows",
                expected: dim,
                got: bad.len(),
            });
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in &rows {
            for (m, x) in mean.iter_mut().zip(r.iter()) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in &rows {
            for ((v, x), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *v += (x - m).powi(2);
            }
        }
        let std = var.iter().map(|v| (v / n).sqrt().max(floor)).collect();
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(x.iter().zip(&self.mean).zip(&self.std).map(|((x, m), s)| (x - m) / s).collect())
    }

    pub fn invert(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(x.iter().zip(&self.mean).zip(&self.std).map(|((x, m), s)| x * s + m).collect())
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "normalizer input",
                expected: self.dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite value passed to network".into()));
        }
        Ok(())
    }

    /// Normalizes many rows into a batch matrix.
    pub fn batch<'a>(&self, rows: impl IntoIterator<Item = &'a [f64]>) -> Result<Array2<f64>> {
        let mut flat = Vec::new();
        let mut n = 0;
        for r in rows {
            flat.extend(self.apply(r)?);
            n += 1;
        }
        Ok(Array2::from_shape_vec((n, self.dim()), flat).expect("rows of equal length"))
    }
}
