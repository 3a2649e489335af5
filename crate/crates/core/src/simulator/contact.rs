use super::broadphase::CollisionWorld;
use crate::geometry::DEGENERATE_AREA;
use crate::{Error, Result, Vec3};

/// Nearest point of the closed triangle `tri` to `p`.
pub fn closest_point_on_triangle(p: &Vec3, tri: &[Vec3; 3]) -> Result<Vec3> {
    let [a, b, c] = tri;
    if 0.5 * (b - a).cross(&(c - a)).norm() <= DEGENERATE_AREA {
        return Err(Error::InvalidInput(format!("degenerate triangle {tri:?}")));
    }
    Ok(closest_point_unchecked(p, tri))
}

/// Voronoi-region walk over vertices, edges and the face.
#[inline]
pub(crate) fn closest_point_unchecked(p: &Vec3, tri: &[Vec3; 3]) -> Vec3 {
    let [a, b, c] = tri;
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Material and size parameters needed to resolve one contact.
#[derive(Debug, Clone, Copy)]
pub struct ContactParams {
    pub radius: f64,
    pub restitution: f64,
    pub friction: f64,
    /// Approach speeds below this are treated as resting contact and get
    /// no bounce.
    pub rest_speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyState {
    pub position: Vec3,
    pub velocity: Vec3,
}

/// Post-impulse velocity for an approach along `normal`.
///
/// The normal component `v_n < 0` becomes `-e * v_n`; the tangential part is
/// scaled by `max(0, 1 - mu * (1 + e) * |v_n| / |v_t|)`.
pub fn contact_impulse(velocity: &Vec3, normal: &Vec3, restitution: f64, friction: f64) -> Vec3 {
    let vn = velocity.dot(normal);
    if vn >= 0.0 {
        return *velocity;
    }
    let tangential = velocity - normal * vn;
    let vt = tangential.norm();
    let keep = if vt > 0.0 {
        (1.0 - friction * (1.0 + restitution) * (-vn) / vt).max(0.0)
    } else {
        0.0
    };
    tangential * keep - normal * (restitution * vn)
}

/// Details of one resolved contact, for diagnostics and tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactEvent {
    /// Offset into the substep at which the sphere touched the surface.
    pub time_of_impact: f64,
    pub normal: Vec3,
    pub position_before: Vec3,
    pub position_after: Vec3,
    pub velocity_before: Vec3,
    pub velocity_after: Vec3,
    pub triangle: usize,
}

impl ContactEvent {
    /// Change in mechanical energy per unit mass across the event.
    pub fn energy_change(&self, gravity: &Vec3) -> f64 {
        let e = |p: &Vec3, v: &Vec3| 0.5 * v.norm_squared() - gravity.dot(p);
        e(&self.position_after, &self.velocity_after) - e(&self.position_before, &self.velocity_before)
    }
}

/// Advances a sphere over one substep of length `dt`, resolving the deepest
/// contact the motion would run into.
///
/// The sphere moves to the time of impact, its velocity goes through
/// [`contact_impulse`], and it travels the rest of the substep with the new
/// velocity. A sphere that already penetrates is first projected out along
/// the contact normal; any potential energy that costs is taken from its
/// kinetic energy. Gravity is not applied here.
pub fn resolve_contact(
    state: BodyState,
    world: &CollisionWorld,
    params: &ContactParams,
    dt: f64,
) -> Result<(BodyState, Option<ContactEvent>)> {
    let BodyState { position, velocity } = state;
    let speed = velocity.norm();
    let reach = params.radius + speed * dt;
    let Some(contact) = world.deepest_contact(&position, &velocity, params.radius, reach, dt) else {
        return Ok((
            BodyState {
                position: position + velocity * dt,
                velocity,
            },
            None,
        ));
    };
    if speed * dt >= params.radius / 2.0 {
        return Err(Error::SimConfig(format!(
            "ball moves {:.4} m per substep, more than half its radius; increase substeps_per_sample",
            speed * dt
        )));
    }

    let n = contact.normal;
    let vn = velocity.dot(&n);
    let (toi, touch) = if contact.gap < 0.0 {
        (0.0, position - n * contact.gap)
    } else {
        let toi = if vn < 0.0 { (contact.gap / -vn).min(dt) } else { 0.0 };
        (toi, position + velocity * toi)
    };
    let before = if contact.gap < 0.0 { position } else { touch };

    let effective_e = if -vn < params.rest_speed { 0.0 } else { params.restitution };
    let mut after = contact_impulse(&velocity, &n, effective_e, params.friction);
    if contact.gap < 0.0 {
        let lift = -world.gravity.dot(&(touch - position));
        if lift > 0.0 {
            let ke = 0.5 * after.norm_squared();
            after *= if ke > lift { ((ke - lift) / ke).sqrt() } else { 0.0 };
        }
    }

    let event = ContactEvent {
        time_of_impact: toi,
        normal: n,
        position_before: before,
        position_after: touch,
        velocity_before: velocity,
        velocity_after: after,
        triangle: contact.triangle,
    };
    Ok((
        BodyState {
            position: touch + after * (dt - toi),
            velocity: after,
        },
        Some(event),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::TriangleMesh;

    fn tri() -> [Vec3; 3] {
        [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ]
    }

    #[test]
    fn interior_projects_onto_plane() {
        let q = closest_point_on_triangle(&Vec3::new(0.2, 3.0, 0.3), &tri()).unwrap();
        assert!((q - Vec3::new(0.2, 0.0, 0.3)).norm() < 1e-15);
    }

    #[test]
    fn vertex_region() {
        let q = closest_point_on_triangle(&Vec3::new(-1.0, 0.5, -2.0), &tri()).unwrap();
        assert_eq!(q, Vec3::zeros());
        let q = closest_point_on_triangle(&Vec3::new(3.0, -1.0, -0.5), &tri()).unwrap();
        assert_eq!(q, Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn point_inside_is_itself() {
        let p = Vec3::new(0.25, 0.0, 0.25);
        assert_eq!(closest_point_on_triangle(&p, &tri()).unwrap(), p);
    }

    #[test]
    fn edge_region() {
        let q = closest_point_on_triangle(&Vec3::new(1.0, 0.0, 1.0), &tri()).unwrap();
        assert!((q - Vec3::new(0.5, 0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn degenerate_triangle() {
        let t = [Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0)];
        assert!(closest_point_on_triangle(&Vec3::new(0.0, 1.0, 0.0), &t).is_err());
    }

    /// Brute-force check: sample the triangle densely.
    #[test]
    fn matches_dense_sampling() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let t: [Vec3; 3] = std::array::from_fn(|_| {
                Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let p = Vec3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let q = closest_point_unchecked(&p, &t);
            let n = 200;
            let mut best = f64::INFINITY;
            for i in 0..=n {
                for j in 0..=(n - i) {
                    let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
                    let s = t[0] + (t[1] - t[0]) * u + (t[2] - t[0]) * v;
                    best = best.min((s - p).norm());
                }
            }
            let d = (q - p).norm();
            assert!(d <= best + 1e-12, "closest {d} worse than sample {best}");
            assert!(best - d < 0.02, "sampling bound");
        }
    }

    #[test]
    fn impulse_reflects_normal_component() {
        let up = Vec3::new(0.0, 1.0, 0.0);
        assert_eq!(contact_impulse(&Vec3::new(0.0, -4.0, 0.0), &up, 0.5, 0.0), Vec3::new(0.0, 2.0, 0.0));
        assert_eq!(contact_impulse(&Vec3::new(3.0, -4.0, 0.0), &up, 0.5, 0.0), Vec3::new(3.0, 2.0, 0.0));
    }

    #[test]
    fn impulse_friction_clamp() {
        let up = Vec3::new(0.0, 1.0, 0.0);
        // mu (1 + e) |v_n| = 0.5 * 1.5 * 4 = 3 >= |v_t| = 3: full stick
        let v = contact_impulse(&Vec3::new(3.0, -4.0, 0.0), &up, 0.5, 0.5);
        assert_eq!(v, Vec3::new(0.0, 2.0, 0.0));
        // mu = 0.25: tangential scaled by 1 - 1.5 / 3 = 0.5
        let v = contact_impulse(&Vec3::new(3.0, -4.0, 0.0), &up, 0.5, 0.25);
        assert!((v - Vec3::new(1.5, 2.0, 0.0)).norm() < 1e-15);
    }

    fn floor_world(y: f64) -> CollisionWorld {
        // camera-style frame: +y is down, so the floor normal is -y
        let mesh = TriangleMesh::new(
            vec![
                Vec3::new(-5.0, y, -5.0),
                Vec3::new(5.0, y, -5.0),
                Vec3::new(-5.0, y, 5.0),
                Vec3::new(5.0, y, 5.0),
            ],
            vec![[0, 3, 1], [0, 2, 3]],
        )
        .unwrap();
        CollisionWorld::new(mesh, Vec3::new(0.0, 9.81, 0.0))
    }

    #[test]
    fn resolve_contact_bounces_off_floor() {
        let world = floor_world(1.0);
        let params = ContactParams { radius: 0.1, restitution: 0.5, friction: 0.0, rest_speed: 0.0 };
        let state = BodyState { position: Vec3::new(0.0, 0.895, 0.0), velocity: Vec3::new(3.0, 4.0, 0.0) };
        let (next, event) = resolve_contact(state, &world, &params, 0.002).unwrap();
        let event = event.expect("contact");
        assert_eq!(next.velocity, Vec3::new(3.0, -2.0, 0.0));
        assert!((event.time_of_impact - 0.00125).abs() < 1e-12);
        assert!(next.position.y < 0.9);
        assert!(event.energy_change(&world.gravity) <= 0.0);
    }

    #[test]
    fn resolve_contact_projects_penetration() {
        let world = floor_world(1.0);
        let params = ContactParams { radius: 0.1, restitution: 0.5, friction: 0.5, rest_speed: 0.0 };
        let state = BodyState { position: Vec3::new(0.0, 0.95, 0.0), velocity: Vec3::new(1.0, 2.0, 0.0) };
        let (_, event) = resolve_contact(state, &world, &params, 0.001).unwrap();
        let event = event.unwrap();
        assert!((event.position_after.y - 0.9).abs() < 1e-12);
        assert!(event.energy_change(&world.gravity) <= 1e-12);
    }

    #[test]
    fn tunneling_guard() {
        let world = floor_world(1.0);
        let params = ContactParams { radius: 0.1, restitution: 0.5, friction: 0.0, rest_speed: 0.0 };
        let state = BodyState { position: Vec3::new(0.0, 0.85, 0.0), velocity: Vec3::new(0.0, 60.0, 0.0) };
        assert!(matches!(
            resolve_contact(state, &world, &params, 0.001),
            Err(Error::SimConfig(_))
        ));
    }

    #[test]
    fn free_space_moves_linearly() {
        let world = floor_world(1.0);
        let params = ContactParams { radius: 0.1, restitution: 0.5, friction: 0.0, rest_speed: 0.0 };
        let state = BodyState { position: Vec3::zeros(), velocity: Vec3::new(1.0, 0.0, 0.0) };
        let (next, event) = resolve_contact(state, &world, &params, 0.5).unwrap();
        assert!(event.is_none());
        assert_eq!(next.position, Vec3::new(0.5, 0.0, 0.0));
    }
}
