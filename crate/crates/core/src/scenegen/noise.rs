use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::DepthMap;
use crate::{Error, Result};

/// Smallest depth a corrupted map may contain (m).
pub const MIN_CORRUPTED_DEPTH: f64 = 0.01;

/// One concrete corruption applied to a depth map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub scale: f64,
    /// Meters.
    pub offset: f64,
    /// Meters.
    pub bias_amplitude: f64,
    /// Cycles per image.
    pub bias_frequency: f64,
    /// Phases of the bias field along u and v (radians).
    pub bias_phase: [f64; 2],
    /// Meters.
    pub pixel_sigma: f64,
    /// Pixels; Gaussian sigma is half of this.
    pub blur_radius: f64,
}

impl NoiseModel {
    pub const IDENTITY: NoiseModel = NoiseModel {
        scale: 1.0,
        offset: 0.0,
        bias_amplitude: 0.0,
        bias_frequency: 0.0,
        bias_phase: [0.0, 0.0],
        pixel_sigma: 0.0,
        blur_radius: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.scale,
            self.offset,
            self.bias_amplitude,
            self.bias_frequency,
            self.pixel_sigma,
            self.blur_radius,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite || self.scale <= 0.0 || self.pixel_sigma < 0.0 || self.blur_radius < 0.0 {
            return Err(Error::InvalidInput(format!("invalid noise model {self:?}")));
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.scale == 1.0
            && self.offset == 0.0
            && (self.bias_amplitude == 0.0 || self.bias_frequency == 0.0)
            && self.pixel_sigma == 0.0
            && self.blur_radius == 0.0
    }
}

/// Distribution over [`NoiseModel`]s; every dataset record draws its own.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseDistribution {
    /// Sigma of the log of the global scale (median scale 1).
    pub scale_log_sigma: f64,
    pub offset_sigma: f64,
    pub bias_amplitude: f64,
    pub bias_frequency: f64,
    pub pixel_sigma: f64,
    pub blur_radius: f64,
}

impl Default for NoiseDistribution {
    /// Log-scale sigma 0.1, offset sigma 4 cm, 6 cm bias at 2 cycles per
    /// image, 1.2 cm white noise, 2 px blur.
    fn default() -> Self {
        Self::with_strength(0.4)
    }
}

impl NoiseDistribution {
    /// Every magnitude multiplied by `k` relative to log-scale sigma 0.25,
    /// offset sigma 0.1 m, bias 0.15 m and white noise 0.03 m; frequency
    /// and blur fixed.
    pub fn with_strength(k: f64) -> Self {
        Self {
            scale_log_sigma: 0.25 * k,
            offset_sigma: 0.1 * k,
            bias_amplitude: 0.15 * k,
            bias_frequency: 2.0,
            pixel_sigma: 0.03 * k,
            blur_radius: 2.0,
        }
    }

    /// Always yields [`NoiseModel::IDENTITY`].
    pub fn identity() -> Self {
        Self {
            scale_log_sigma: 0.0,
            offset_sigma: 0.0,
            bias_amplitude: 0.0,
            bias_frequency: 0.0,
            pixel_sigma: 0.0,
            blur_radius: 0.0,
        }
    }

    /// Global scale error with only faint pixel noise.
    pub fn scale_dominant() -> Self {
        Self {
            scale_log_sigma: 0.3,
            pixel_sigma: 0.005,
            ..Self::identity()
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Result<NoiseModel> {
        let bad = |what: &str| Error::InvalidInput(format!("noise distribution: {what}"));
        let scale = if self.scale_log_sigma > 0.0 {
            LogNormal::new(0.0, self.scale_log_sigma)
                .map_err(|_| bad("scale_log_sigma"))?
                .sample(rng)
        } else {
            1.0
        };
        let offset = if self.offset_sigma > 0.0 {
            Normal::new(0.0, self.offset_sigma)
                .map_err(|_| bad("offset_sigma"))?
                .sample(rng)
        } else {
            0.0
        };
        let bias_phase = if self.bias_amplitude > 0.0 {
            let tau = std::f64::consts::TAU;
            [rng.random_range(0.0..tau), rng.random_range(0.0..tau)]
        } else {
            [0.0, 0.0]
        };
        let model = NoiseModel {
            scale,
            offset,
            bias_amplitude: self.bias_amplitude,
            bias_frequency: self.bias_frequency,
            bias_phase,
            pixel_sigma: self.pixel_sigma,
            blur_radius: self.blur_radius,
        };
        model.validate()?;
        Ok(model)
    }
}

fn gaussian_kernel(radius: f64) -> Vec<f64> {
    let sigma = radius / 2.0;
    let half = radius.ceil() as i64;
    let mut k: Vec<f64> = (-half..=half)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|x| *x /= sum);
    k
}

/// Separable Gaussian blur with clamped edges.
fn blur(values: &[f64], w: usize, h: usize, radius: f64) -> Vec<f64> {
    let kernel = gaussian_kernel(radius);
    let half = (kernel.len() / 2) as i64;
    let clamp = |i: i64, n: usize| i.clamp(0, n as i64 - 1) as usize;
    let mut tmp = vec![0.0; values.len()];
    for v in 0..h {
        for u in 0..w {
            tmp[v * w + u] = kernel
                .iter()
                .enumerate()
                .map(|(k, c)| c * values[v * w + clamp(u as i64 + k as i64 - half, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; values.len()];
    for v in 0..h {
        for u in 0..w {
            out[v * w + u] = kernel
                .iter()
                .enumerate()
                .map(|(k, c)| c * tmp[clamp(v as i64 + k as i64 - half, h) * w + u])
                .sum();
        }
    }
    out
}

/// Applies `nm` to `depth`: scale, offset, a smooth sinusoidal bias field
/// and white noise, then a blur, then clamping to at least
/// [`MIN_CORRUPTED_DEPTH`].
pub fn corrupt_depth(depth: &DepthMap, nm: &NoiseModel, seed: u64) -> Result<DepthMap> {
    nm.validate()?;
    depth.validate()?;
    if nm.is_identity() {
        return Ok(depth.clone());
    }
    let (w, h) = (depth.width, depth.height);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let white = Normal::new(0.0, nm.pixel_sigma)
        .map_err(|_| Error::InvalidInput("pixel_sigma".into()))?;
    let tau = std::f64::consts::TAU;
    let mut values: Vec<f64> = depth
        .values
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let (u, v) = ((i % w) as f64, (i / w) as f64);
            let mut out = nm.scale * z + nm.offset;
            if nm.bias_amplitude != 0.0 {
                out += nm.bias_amplitude
                    * (tau * nm.bias_frequency * u / w as f64 + nm.bias_phase[0]).sin()
                    * (tau * nm.bias_frequency * v / h as f64 + nm.bias_phase[1]).sin();
            }
            if nm.pixel_sigma > 0.0 {
                out += white.sample(&mut rng);
            }
            out
        })
        .collect();
    if nm.blur_radius > 0.0 {
        values = blur(&values, w, h, nm.blur_radius);
    }
    for z in &mut values {
        *z = z.max(MIN_CORRUPTED_DEPTH);
    }
    depth.with_values(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CameraIntrinsics;
    use proptest::prelude::*;

    fn ramp_map(w: usize, h: usize) -> DepthMap {
        let intr = CameraIntrinsics::from_fov(w, h, 90.0).unwrap();
        let values = (0..w * h).map(|i| 0.5 + (i % 37) as f64 * 0.1).collect();
        DepthMap::new(values, intr).unwrap()
    }

    #[test]
    fn identity_is_exact() {
        let d = ramp_map(16, 16);
        assert_eq!(corrupt_depth(&d, &NoiseModel::IDENTITY, 5).unwrap(), d);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(NoiseDistribution::identity().sample(&mut rng).unwrap().is_identity());
    }

    #[test]
    fn pure_scale_doubles_extremes() {
        let d = ramp_map(16, 16);
        let nm = NoiseModel { scale: 2.0, ..NoiseModel::IDENTITY };
        let out = corrupt_depth(&d, &nm, 0).unwrap();
        assert_eq!(out.min(), 2.0 * d.min());
        assert_eq!(out.max(), 2.0 * d.max());
    }

    #[test]
    fn white_noise_std() {
        let intr = CameraIntrinsics::from_fov(256, 256, 90.0).unwrap();
        let d = DepthMap::constant(3.0, intr).unwrap();
        let nm = NoiseModel { pixel_sigma: 0.05, ..NoiseModel::IDENTITY };
        let out = corrupt_depth(&d, &nm, 9).unwrap();
        let r: Vec<f64> = out.values.iter().map(|z| z - 3.0).collect();
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        let var = r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r.len() - 1) as f64;
        assert!((0.045..=0.055).contains(&var.sqrt()), "std {}", var.sqrt());
    }

    #[test]
    fn blur_preserves_constants() {
        let out = blur(&[2.5; 64], 8, 8, 2.0);
        assert!(out.iter().all(|z| (z - 2.5).abs() < 1e-12));
    }

    #[test]
    fn rejects_bad_model() {
        let d = ramp_map(4, 4);
        let nm = NoiseModel { scale: 0.0, ..NoiseModel::IDENTITY };
        assert!(corrupt_depth(&d, &nm, 0).is_err());
    }

    proptest! {
        #[test]
        fn output_positive_and_deterministic(seed in any::<u64>(), offset in -5.0..1.0f64) {
            let d = ramp_map(12, 10);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut nm = NoiseDistribution::default().sample(&mut rng).unwrap();
            nm.offset = offset;
            let a = corrupt_depth(&d, &nm, seed).unwrap();
            prop_assert!(a.values.iter().all(|&z| z >= MIN_CORRUPTED_DEPTH));
            prop_assert_eq!(a, corrupt_depth(&d, &nm, seed).unwrap());
        }
    }
}
