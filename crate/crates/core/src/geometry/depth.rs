use serde::{Deserialize, Serialize};

use super::camera::{unproject_pixel, CameraIntrinsics};
use crate::{Error, Result, Vec3};

/// Row-major grid of z-depths in meters with the camera that observed it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub intrinsics: CameraIntrinsics,
}

impl DepthMap {
    pub fn new(values: Vec<f64>, intrinsics: CameraIntrinsics) -> Result<Self> {
        let map = Self {
            width: intrinsics.width,
            height: intrinsics.height,
            values,
            intrinsics,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn constant(depth: f64, intrinsics: CameraIntrinsics) -> Result<Self> {
        Self::new(vec![depth; intrinsics.pixel_count()], intrinsics)
    }

    pub fn validate(&self) -> Result<()> {
        self.intrinsics.validate()?;
        if self.width != self.intrinsics.width || self.height != self.intrinsics.height {
            return Err(Error::InvalidInput(format!(
                "depth map is {}x{} but intrinsics describe {}x{}",
                self.width, self.height, self.intrinsics.width, self.intrinsics.height
            )));
        }
        if self.values.len() != self.width * self.height {
            return Err(Error::DimensionMismatch {
                context: "depth map values",
                expected: self.width * self.height,
                got: self.values.len(),
            });
        }
        check_values(&self.values)
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.values[v * self.width + u]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Rounds every value to single precision so the map survives a PFM
    /// round trip unchanged.
    pub fn quantize_f32(&mut self) {
        for v in &mut self.values {
            *v = *v as f32 as f64;
        }
    }

    /// Same grid and camera with new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(values, self.intrinsics)
    }
}

fn check_values(values: &[f64]) -> Result<()> {
    match values
        .iter()
        .position(|d| !(d.is_finite() && *d > 0.0))
    {
        Some(index) => Err(Error::InvalidDepth {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

/// One camera-frame point per pixel, row-major.
pub fn unproject_depth(depth: &DepthMap) -> Result<Vec<Vec3>> {
    check_values(&depth.values)?;
    let intr = &depth.intrinsics;
    let mut cloud = Vec::with_capacity(depth.values.len());
    for v in 0..depth.height {
        for u in 0..depth.width {
            cloud.push(unproject_pixel(
                u as f64,
                v as f64,
                depth.get(u, v),
                intr,
            ));
        }
    }
    Ok(cloud)
}

/// Affinely remaps the depth range so that the current minimum lands on
/// `z_min` and the current maximum on `z_max`.
pub fn rescale_depth(depth: &DepthMap, z_min: f64, z_max: f64) -> Result<DepthMap> {
    if !(z_min.is_finite() && z_max.is_finite() && z_min > 0.0 && z_min < z_max) {
        return Err(Error::InvalidRange { z_min, z_max });
    }
    let (lo, hi) = (depth.min(), depth.max());
    if !(hi > lo) {
        return Err(Error::DegenerateRange(lo));
    }
    let span = hi - lo;
    let values = depth
        .values
        .iter()
        .map(|&d| {
            let t = (d - lo) / span;
            (1.0 - t) * z_min + t * z_max
        })
        .collect();
    depth.with_values(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_2x2() -> CameraIntrinsics {
        CameraIntrinsics::new(1.0, 1.0, 0.5, 0.5, 2, 2).unwrap()
    }

    #[test]
    fn unproject_2x2_unit_depth() {
        let map = DepthMap::constant(1.0, unit_2x2()).unwrap();
        let cloud = unproject_depth(&map).unwrap();
        let expected = [
            Vec3::new(-0.5, -0.5, 1.0),
            Vec3::new(0.5, -0.5, 1.0),
            Vec3::new(-0.5, 0.5, 1.0),
            Vec3::new(0.5, 0.5, 1.0),
        ];
        assert_eq!(cloud, expected);
    }

    #[test]
    fn unproject_names_bad_pixel() {
        let mut map = DepthMap::constant(1.0, unit_2x2()).unwrap();
        map.values[2] = -1.0;
        match unproject_depth(&map) {
            Err(Error::InvalidDepth { index, .. }) => assert_eq!(index, 2),
            other => panic!("unexpected {other:?}"),
        }
        map.values[2] = f64::NAN;
        assert!(matches!(
            unproject_depth(&map),
            Err(Error::InvalidDepth { index: 2, .. })
        ));
    }

    fn ramp(lo: f64, hi: f64) -> DepthMap {
        let intr = CameraIntrinsics::new(2.0, 2.0, 2.0, 0.0, 5, 1).unwrap();
        let values = (0..5).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect();
        DepthMap::new(values, intr).unwrap()
    }

    #[test]
    fn rescale_interpolates() {
        let out = rescale_depth(&ramp(1.0, 5.0), 2.0, 10.0).unwrap();
        // value 3 sits halfway
        assert!((out.values[2] - 6.0).abs() < 1e-12);
        assert_eq!(out.min(), 2.0);
        assert!((out.max() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn rescale_endpoints_map_to_targets() {
        let out = rescale_depth(&ramp(2.0, 4.0), 1.0, 2.0).unwrap();
        assert!((out.values[4] - 2.0).abs() < 1e-12);
        assert!((out.values[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rescale_identity_targets() {
        let map = ramp(1.0, 5.0);
        let out = rescale_depth(&map, 1.0, 5.0).unwrap();
        for (a, b) in map.values.iter().zip(&out.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rescale_errors() {
        let flat = DepthMap::constant(3.0, unit_2x2()).unwrap();
        assert!(matches!(
            rescale_depth(&flat, 1.0, 2.0),
            Err(Error::DegenerateRange(_))
        ));
        assert!(matches!(
            rescale_depth(&ramp(1.0, 2.0), 2.0, 2.0),
            Err(Error::InvalidRange { .. })
        ));
        assert!(matches!(
            rescale_depth(&ramp(1.0, 2.0), 3.0, 2.0),
            Err(Error::InvalidRange { .. })
        ));
    }

    proptest! {
        #[test]
        fn rescale_is_idempotent(
            values in proptest::collection::vec(0.2f64..20.0, 12),
            a in 0.1f64..5.0,
            extra in 0.1f64..10.0,
        ) {
            prop_assume!(values.iter().cloned().fold(f64::MIN, f64::max)
                - values.iter().cloned().fold(f64::MAX, f64::min) > 1e-3);
            let intr = CameraIntrinsics::new(3.0, 3.0, 1.5, 1.0, 4, 3).unwrap();
            let map = DepthMap::new(values, intr).unwrap();
            let once = rescale_depth(&map, a, a + extra).unwrap();
            let twice = rescale_depth(&once, a, a + extra).unwrap();
            prop_assert!((once.min() - a).abs() < 1e-9);
            prop_assert!((once.max() - (a + extra)).abs() < 1e-9);
            for (x, y) in once.values.iter().zip(&twice.values) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
