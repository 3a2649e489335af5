use serde::{Deserialize, Serialize};

use crate::geometry::DepthMap;
use crate::{Error, Result};

pub const HISTOGRAM_BINS: usize = 256;

/// Cumulative depth histogram over `[0, max_depth]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthCdf {
    pub max_depth: f64,
    /// `cdf[i]` is the mass at or below the upper edge of bin `i`.
    pub cdf: Vec<f64>,
}

impl DepthCdf {
    pub fn fit<'a>(maps: impl IntoIterator<Item = &'a DepthMap>, max_depth: f64) -> Result<Self> {
        if !(max_depth > 0.0 && max_depth.is_finite()) {
            return Err(Error::InvalidInput(format!("histogram range {max_depth}")));
        }
        let mut counts = vec![0u64; HISTOGRAM_BINS];
        let mut total = 0u64;
        for map in maps {
            for &d in &map.values {
                counts[bin_of(d, max_depth)] += 1;
                total += 1;
            }
        }
        if total == 0 {
            return Err(Error::InvalidInput("histogram of no depth values".into()));
        }
        let mut acc = 0u64;
        let cdf = counts
            .iter()
            .map(|c| {
                acc += c;
                acc as f64 / total as f64
            })
            .collect();
        Ok(Self { max_depth, cdf })
    }

    fn width(&self) -> f64 {
        self.max_depth / HISTOGRAM_BINS as f64
    }

    /// Cumulative mass at `d`, linear inside a bin.
    pub fn eval(&self, d: f64) -> f64 {
        let x = (d / self.width()).clamp(0.0, HISTOGRAM_BINS as f64);
        let i = (x.floor() as usize).min(HISTOGRAM_BINS - 1);
        let below = if i == 0 { 0.0 } else { self.cdf[i - 1] };
        below + (self.cdf[i] - below) * (x - i as f64)
    }

    /// Smallest depth whose cumulative mass reaches `q`, linear inside a bin.
    pub fn inverse(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        let i = self.cdf.partition_point(|&c| c < q).min(HISTOGRAM_BINS - 1);
        let below = if i == 0 { 0.0 } else { self.cdf[i - 1] };
        let mass = self.cdf[i] - below;
        let frac = if mass > 0.0 { ((q - below) / mass).clamp(0.0, 1.0) } else { 0.0 };
        (i as f64 + frac) * self.width()
    }
}

fn bin_of(d: f64, max_depth: f64) -> usize {
    ((d / max_depth * HISTOGRAM_BINS as f64).floor().max(0.0) as usize).min(HISTOGRAM_BINS - 1)
}

/// Maps each value through `source` and back through the inverse of
/// `target`, so the output's histogram follows `target`.
pub fn hist_equalize_depth(depth: &DepthMap, source: &DepthCdf, target: &DepthCdf, min_depth: f64) -> Result<DepthMap> {
    let values = depth
        .values
        .iter()
        .map(|&d| target.inverse(source.eval(d)).max(min_depth))
        .collect();
    depth.with_values(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CameraIntrinsics;
    use proptest::prelude::*;

    fn map(values: Vec<f64>) -> DepthMap {
        let intr = CameraIntrinsics::new(1.0, 1.0, 0.0, 0.0, values.len(), 1).unwrap();
        DepthMap::new(values, intr).unwrap()
    }

    fn uniform(lo: f64, hi: f64, n: usize) -> DepthMap {
        map((0..n).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64).collect())
    }

    #[test]
    fn cdf_of_uniform_is_linear() {
        let cdf = DepthCdf::fit([&uniform(0.0, 8.0, 4096)], 8.0).unwrap();
        for d in [0.5, 2.0, 4.0, 7.3] {
            assert!((cdf.eval(d) - d / 8.0).abs() < 1e-3);
            assert!((cdf.inverse(d / 8.0) - d).abs() < 0.01);
        }
        assert_eq!(cdf.eval(100.0), 1.0);
    }

    #[test]
    fn equalizing_a_scaled_map_undoes_the_scale() {
        let gt = uniform(1.0, 5.0, 4096);
        let noisy = map(gt.values.iter().map(|d| 1.5 * d).collect());
        let src = DepthCdf::fit([&noisy], 8.0).unwrap();
        let dst = DepthCdf::fit([&gt], 8.0).unwrap();
        let out = hist_equalize_depth(&noisy, &src, &dst, 0.01).unwrap();
        let worst = out.values.iter().zip(&gt.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 0.05, "worst {worst}");
    }

    #[test]
    fn rejects_empty() {
        assert!(DepthCdf::fit(std::iter::empty(), 8.0).is_err());
        assert!(DepthCdf::fit([&uniform(1.0, 2.0, 8)], 0.0).is_err());
    }

    proptest! {
        #[test]
        fn equalization_is_monotone(values in prop::collection::vec(0.05..9.0f64, 2..64), other in prop::collection::vec(0.05..9.0f64, 1..64)) {
            let src = DepthCdf::fit([&map(values.clone())], 8.0).unwrap();
            let dst = DepthCdf::fit([&map(other)], 8.0).unwrap();
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            let out = hist_equalize_depth(&map(sorted), &src, &dst, 0.01).unwrap();
            for w in out.values.windows(2) {
                prop_assert!(w[0] <= w[1] + 1e-12);
            }
        }
    }
}
