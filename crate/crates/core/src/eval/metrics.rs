use crate::geometry::{project_point, CameraIntrinsics};
use crate::simulator::Trajectory;
use crate::{Error, Result, Vec3};

/// Space in which [`l2_traj`] measures distances.
#[derive(Debug, Clone, Copy)]
pub enum L2Mode<'a> {
    /// Camera-frame meters.
    ThreeD,
    /// Pixels after projection with the given camera.
    TwoD(&'a CameraIntrinsics),
}

/// Time-averaged Euclidean distance between corresponding samples.
pub fn l2_traj(pred: &Trajectory, gt: &Trajectory, mode: L2Mode<'_>) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::DimensionMismatch {
            context: "trajectory lengths",
            expected: gt.len(),
            got: pred.len(),
        });
    }
    if gt.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (p, g) in pred.samples.iter().zip(&gt.samples) {
        total += match mode {
            L2Mode::ThreeD => (p - g).norm(),
            L2Mode::TwoD(intr) => (project_point(p, intr)? - project_point(g, intr)?).norm(),
        };
    }
    Ok(total / gt.len() as f64)
}

/// `|t_pred - t_gt|` between first bounces; `horizon` when exactly one
/// side never bounces, 0 when neither does.
pub fn first_bounce_error(pred: &Trajectory, gt: &Trajectory, horizon: f64) -> f64 {
    match (pred.contact_times.first(), gt.contact_times.first()) {
        (Some(a), Some(b)) => (a - b).abs(),
        (None, None) => 0.0,
        _ => horizon,
    }
}

/// Bounce times inferred from positions alone, for trajectories that did
/// not come from the simulator.
///
/// A bounce is flagged between samples `k` and `k + 1` when the velocity
/// along gravity gains less than half of what free fall would add, after
/// a stretch of free fall. The estimate is the time of sample `k + 1`.
pub fn estimate_contact_times(traj: &Trajectory, gravity: &Vec3) -> Vec<f64> {
    let g = gravity.norm();
    if traj.len() < 3 || g == 0.0 {
        return Vec::new();
    }
    let dir = gravity / g;
    let rate = traj.sample_rate;
    let along: Vec<f64> = traj.samples.iter().map(|p| p.dot(&dir)).collect();
    let vel: Vec<f64> = along.windows(2).map(|w| (w[1] - w[0]) * rate).collect();
    let expected = g / rate;
    let mut out = Vec::new();
    let mut falling = true;
    for k in 0..vel.len() - 1 {
        let gain = vel[k + 1] - vel[k];
        if gain < 0.5 * expected {
            if falling {
                out.push(traj.time_of(k + 1));
            }
            falling = false;
        } else {
            falling = true;
        }
    }
    out
}

/// Per-index mean of equal-length trajectories.
pub fn mean_trajectory<'a>(set: impl IntoIterator<Item = &'a Trajectory>) -> Result<Trajectory> {
    let mut iter = set.into_iter();
    let first = iter.next().ok_or_else(|| Error::InvalidInput("mean of an empty set".into()))?;
    let mut sum: Vec<Vec3> = first.samples.clone();
    let mut n = 1.0;
    for t in iter {
        if t.len() != first.len() {
            return Err(Error::DimensionMismatch {
                context: "trajectory lengths",
                expected: first.len(),
                got: t.len(),
            });
        }
        for (s, p) in sum.iter_mut().zip(&t.samples) {
            *s += p;
        }
        n += 1.0;
    }
    Ok(Trajectory::new(first.sample_rate, sum.into_iter().map(|s| s / n).collect()))
}

/// Copy of `traj` with every sample's depth raised to at least `min_z`,
/// so it can be projected.
pub fn clamp_depth(traj: &Trajectory, min_z: f64) -> Trajectory {
    let mut out = traj.clone();
    for p in &mut out.samples {
        p.z = p.z.max(min_z);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{simulate_mesh, InitialConditions, SimConfig};
    use crate::geometry::TriangleMesh;
    use proptest::prelude::*;

    fn traj(points: &[[f64; 3]]) -> Trajectory {
        Trajectory::new(20.0, points.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect())
    }

    #[test]
    fn l2_examples() {
        let a = traj(&[[0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 2.0, 1.0]]);
        let b = traj(&[[0.0, 0.0, 1.0], [1.0, 3.0, 5.0], [0.0, 0.0, 1.0]]);
        assert_eq!(l2_traj(&a, &a, L2Mode::ThreeD).unwrap(), 0.0);
        // distances 0, 5, 2
        assert!((l2_traj(&a, &b, L2Mode::ThreeD).unwrap() - 7.0 / 3.0).abs() < 1e-15);
        let shifted = traj(&[[0.3, -0.4, 1.0], [1.3, -0.4, 1.0], [0.3, 1.6, 1.0]]);
        assert!((l2_traj(&a, &shifted, L2Mode::ThreeD).unwrap() - 0.5).abs() < 1e-15);
        assert!(l2_traj(&a, &traj(&[[0.0; 3]]), L2Mode::ThreeD).is_err());
    }

    #[test]
    fn l2_in_pixels() {
        let intr = CameraIntrinsics::new(100.0, 100.0, 50.0, 50.0, 101, 101).unwrap();
        let a = traj(&[[0.0, 0.0, 2.0]]);
        let b = traj(&[[0.06, 0.08, 2.0]]);
        assert!((l2_traj(&a, &b, L2Mode::TwoD(&intr)).unwrap() - 5.0).abs() < 1e-12);
        assert!(l2_traj(&a, &traj(&[[0.0, 0.0, -1.0]]), L2Mode::TwoD(&intr)).is_err());
    }

    #[test]
    fn bounce_errors() {
        let mut a = traj(&[[0.0; 3]]);
        let mut b = a.clone();
        assert_eq!(first_bounce_error(&a, &b, 1.5), 0.0);
        a.contact_times = vec![0.45];
        b.contact_times = vec![0.60, 0.9];
        assert!((first_bounce_error(&a, &b, 1.5) - 0.15).abs() < 1e-15);
        a.contact_times.clear();
        assert_eq!(first_bounce_error(&a, &b, 1.5), 1.5);
    }

    #[test]
    fn estimated_bounce_is_near_simulated() {
        let cfg = SimConfig::with_pitch(0.0);
        let floor = TriangleMesh::new(
            vec![Vec3::new(-9.0, 1.0, -9.0), Vec3::new(9.0, 1.0, -9.0), Vec3::new(-9.0, 1.0, 9.0), Vec3::new(9.0, 1.0, 9.0)],
            vec![[0, 3, 1], [0, 2, 3]],
        )
        .unwrap();
        for height in [0.5, 0.8, 1.1] {
            let rho = InitialConditions {
                position: Vec3::new(0.0, 1.0 - height, 2.0),
                velocity: Vec3::new(0.0, 0.0, 0.6),
                ..Default::default()
            };
            let t = simulate_mesh(floor.clone(), &rho, &cfg).unwrap();
            let est = estimate_contact_times(&t, &cfg.gravity);
            assert!((est[0] - t.contact_times[0]).abs() <= 1.0 / cfg.sample_rate + 1e-9, "{est:?} {:?}", t.contact_times);
        }
    }

    #[test]
    fn free_fall_has_no_bounce() {
        let cfg = SimConfig::default();
        let rho = InitialConditions::default();
        let t = simulate_mesh(TriangleMesh::default(), &rho, &cfg).unwrap();
        assert!(estimate_contact_times(&t, &cfg.gravity).is_empty());
    }

    #[test]
    fn means() {
        let a = traj(&[[0.0, 0.0, 1.0], [2.0, 2.0, 2.0]]);
        assert_eq!(mean_trajectory([&a]).unwrap(), a);
        let b = traj(&[[2.0, 0.0, 3.0], [0.0, 0.0, 0.0]]);
        let m = mean_trajectory([&a, &b]).unwrap();
        assert_eq!(m.samples[0], Vec3::new(1.0, 0.0, 2.0));
        assert!(mean_trajectory(std::iter::empty()).is_err());
    }

    fn arb_traj() -> impl Strategy<Value = Trajectory> {
        prop::collection::vec(prop::array::uniform3(-5.0..5.0f64), 4).prop_map(|p| traj(&p))
    }

    proptest! {
        #[test]
        fn l2_is_a_metric(a in arb_traj(), b in arb_traj(), c in arb_traj(), t in prop::array::uniform3(-3.0..3.0f64)) {
            let d = |x: &Trajectory, y: &Trajectory| l2_traj(x, y, L2Mode::ThreeD).unwrap();
            prop_assert!(d(&a, &b) >= 0.0);
            prop_assert!((d(&a, &b) - d(&b, &a)).abs() < 1e-12);
            prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
            let shift = |x: &Trajectory| {
                let mut y = x.clone();
                y.samples.iter_mut().for_each(|p| *p += Vec3::new(t[0], t[1], t[2]));
                y
            };
            prop_assert!((d(&shift(&a), &shift(&b)) - d(&a, &b)).abs() < 1e-9);
        }

        #[test]
        fn symmetric_pair_mean_is_center(c in arb_traj(), e in arb_traj()) {
            let plus = Trajectory::new(20.0, c.samples.iter().zip(&e.samples).map(|(x, y)| x + y).collect());
            let minus = Trajectory::new(20.0, c.samples.iter().zip(&e.samples).map(|(x, y)| x - y).collect());
            let m = mean_trajectory([&plus, &minus]).unwrap();
            for (p, q) in m.samples.iter().zip(&c.samples) {
                prop_assert!((p - q).norm() < 1e-12);
            }
        }
    }
}
