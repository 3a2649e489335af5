use super::contact::closest_point_unchecked;
use crate::geometry::TriangleMesh;
use crate::Vec3;

/// Uniform grid over the mesh's x/z extent. Each cell lists the triangles
/// whose bounding box overlaps it, stored in compressed-row form.
#[derive(Debug, Clone)]
pub struct TriangleGrid {
    origin_x: f64,
    origin_z: f64,
    cell: f64,
    nx: usize,
    nz: usize,
    cell_start: Vec<u32>,
    items: Vec<u32>,
}

impl TriangleGrid {
    pub fn build(bounds: &[[Vec3; 2]]) -> Self {
        if bounds.is_empty() {
            return Self {
                origin_x: 0.0,
                origin_z: 0.0,
                cell: 1.0,
                nx: 0,
                nz: 0,
                cell_start: vec![0],
                items: Vec::new(),
            };
        }
        let (mut lo_x, mut lo_z) = (f64::INFINITY, f64::INFINITY);
        let (mut hi_x, mut hi_z) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut extents: Vec<f64> = Vec::with_capacity(bounds.len());
        for [lo, hi] in bounds {
            lo_x = lo_x.min(lo.x);
            lo_z = lo_z.min(lo.z);
            hi_x = hi_x.max(hi.x);
            hi_z = hi_z.max(hi.z);
            extents.push((hi.x - lo.x).max(hi.z - lo.z));
        }
        let mid = extents.len() / 2;
        let median = *extents.select_nth_unstable_by(mid, f64::total_cmp).1;
        let span = (hi_x - lo_x).max(hi_z - lo_z).max(1e-6);
        // cap the cell count so huge rubber-sheet meshes stay bounded
        let cell = (2.0 * median).max(span / 1024.0).max(1e-3);
        let nx = ((hi_x - lo_x) / cell).floor() as usize + 1;
        let nz = ((hi_z - lo_z) / cell).floor() as usize + 1;

        let cell_range = |lo: &Vec3, hi: &Vec3| {
            let ix0 = ((lo.x - lo_x) / cell).floor().max(0.0) as usize;
            let iz0 = ((lo.z - lo_z) / cell).floor().max(0.0) as usize;
            let ix1 = (((hi.x - lo_x) / cell).floor() as usize).min(nx - 1);
            let iz1 = (((hi.z - lo_z) / cell).floor() as usize).min(nz - 1);
            (ix0, ix1, iz0, iz1)
        };
        let mut counts = vec![0u32; nx * nz + 1];
        for [lo, hi] in bounds {
            let (ix0, ix1, iz0, iz1) = cell_range(lo, hi);
            for iz in iz0..=iz1 {
                for ix in ix0..=ix1 {
                    counts[iz * nx + ix + 1] += 1;
                }
            }
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; counts[nx * nz] as usize];
        for (t, [lo, hi]) in bounds.iter().enumerate() {
            let (ix0, ix1, iz0, iz1) = cell_range(lo, hi);
            for iz in iz0..=iz1 {
                for ix in ix0..=ix1 {
                    let slot = &mut fill[iz * nx + ix];
                    items[*slot as usize] = t as u32;
                    *slot += 1;
                }
            }
        }
        Self {
            origin_x: lo_x,
            origin_z: lo_z,
            cell,
            nx,
            nz,
            cell_start: counts,
            items,
        }
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    /// Appends every triangle whose cells overlap the x/z box to `out`,
    /// sorted and without duplicates.
    pub fn query(&self, min_x: f64, max_x: f64, min_z: f64, max_z: f64, out: &mut Vec<u32>) {
        out.clear();
        if self.nx == 0 {
            return;
        }
        let fx0 = ((min_x - self.origin_x) / self.cell).floor();
        let fz0 = ((min_z - self.origin_z) / self.cell).floor();
        let fx1 = ((max_x - self.origin_x) / self.cell).floor();
        let fz1 = ((max_z - self.origin_z) / self.cell).floor();
        if fx1 < 0.0 || fz1 < 0.0 || fx0 >= self.nx as f64 || fz0 >= self.nz as f64 {
            return;
        }
        let ix0 = fx0.max(0.0) as usize;
        let iz0 = fz0.max(0.0) as usize;
        let ix1 = (fx1 as usize).min(self.nx - 1);
        let iz1 = (fz1 as usize).min(self.nz - 1);
        for iz in iz0..=iz1 {
            let row = iz * self.nx;
            let a = self.cell_start[row + ix0] as usize;
            let b = self.cell_start[row + ix1 + 1] as usize;
            out.extend_from_slice(&self.items[a..b]);
        }
        if iz1 > iz0 || ix1 > ix0 {
            out.sort_unstable();
            out.dedup();
        }
    }
}

/// A contact candidate between the sphere and one triangle.
#[derive(Debug, Clone, Copy)]
pub struct Contact {
    pub triangle: usize,
    pub point: Vec3,
    pub normal: Vec3,
    /// Signed clearance between sphere surface and triangle; negative means
    /// penetration.
    pub gap: f64,
}

/// Static mesh plus the acceleration structure used for sphere queries.
/// Immutable once built and safe to share across threads.
#[derive(Debug, Clone)]
pub struct CollisionWorld {
    pub mesh: TriangleMesh,
    pub gravity: Vec3,
    bounds: Vec<[Vec3; 2]>,
    grid: TriangleGrid,
}

impl CollisionWorld {
    pub fn new(mesh: TriangleMesh, gravity: Vec3) -> Self {
        let bounds: Vec<[Vec3; 2]> = (0..mesh.triangles.len())
            .map(|t| {
                let [a, b, c] = mesh.corners(t);
                [a.inf(&b).inf(&c), a.sup(&b).sup(&c)]
            })
            .collect();
        let grid = TriangleGrid::build(&bounds);
        Self {
            mesh,
            gravity,
            bounds,
            grid,
        }
    }

    pub fn grid(&self) -> &TriangleGrid {
        &self.grid
    }

    /// Triangles the sphere could touch within `reach` of its center.
    pub fn candidates(&self, center: &Vec3, reach: f64, out: &mut Vec<u32>) {
        self.grid.query(
            center.x - reach,
            center.x + reach,
            center.z - reach,
            center.z + reach,
            out,
        );
        out.retain(|&t| {
            let [lo, hi] = &self.bounds[t as usize];
            center.y + reach >= lo.y && center.y - reach <= hi.y
                && center.x + reach >= lo.x && center.x - reach <= hi.x
                && center.z + reach >= lo.z && center.z - reach <= hi.z
        });
    }

    /// The contact the sphere would hit first over a step of `dt`: smallest
    /// predicted clearance `gap + min(v_n, 0) dt`, counting only contacts
    /// where that is negative.
    pub fn deepest_contact(
        &self,
        center: &Vec3,
        velocity: &Vec3,
        radius: f64,
        reach: f64,
        dt: f64,
    ) -> Option<Contact> {
        thread_local! {
            static SCRATCH: std::cell::RefCell<Vec<u32>> = const { std::cell::RefCell::new(Vec::new()) };
        }
        SCRATCH.with(|scratch| {
            let mut cands = scratch.borrow_mut();
            self.candidates(center, reach + 1e-9, &mut cands);
            let mut best: Option<(f64, Contact)> = None;
            for &t in cands.iter() {
                let tri = self.mesh.corners(t as usize);
                let point = closest_point_unchecked(center, &tri);
                let offset = center - point;
                let dist = offset.norm();
                let normal = if dist > 1e-12 {
                    offset / dist
                } else {
                    let face = (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).normalize();
                    if face.dot(velocity) > 0.0 { -face } else { face }
                };
                let gap = dist - radius;
                let predicted = gap + velocity.dot(&normal).min(0.0) * dt;
                if predicted < 0.0 && best.as_ref().is_none_or(|(b, _)| predicted < *b) {
                    best = Some((
                        predicted,
                        Contact {
                            triangle: t as usize,
                            point,
                            normal,
                            gap,
                        },
                    ));
                }
            }
            best.map(|(_, c)| c)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{mesh_from_depth, CameraIntrinsics, DepthMap};
    use rand::{Rng, SeedableRng};

    #[test]
    fn grid_query_matches_brute_force() {
        let intr = CameraIntrinsics::from_fov(24, 20, 90.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let depth = DepthMap::new(
            (0..intr.pixel_count()).map(|_| rng.random_range(1.0..4.0)).collect(),
            intr,
        )
        .unwrap();
        let world = CollisionWorld::new(mesh_from_depth(&depth, None).unwrap(), Vec3::zeros());
        let mut out = Vec::new();
        for _ in 0..500 {
            let c = Vec3::new(rng.random_range(-4.0..4.0), rng.random_range(-3.0..3.0), rng.random_range(0.5..4.5));
            let reach = rng.random_range(0.01..0.5);
            world.candidates(&c, reach, &mut out);
            let brute: Vec<u32> = (0..world.mesh.triangles.len() as u32)
                .filter(|&t| {
                    let [lo, hi] = world.bounds[t as usize];
                    (0..3).all(|k| c[k] + reach >= lo[k] && c[k] - reach <= hi[k])
                })
                .collect();
            assert_eq!(out, brute);
        }
    }

    #[test]
    fn empty_world_has_no_contacts() {
        let world = CollisionWorld::new(TriangleMesh::default(), Vec3::zeros());
        assert!(world
            .deepest_contact(&Vec3::zeros(), &Vec3::new(0.0, 1.0, 0.0), 0.1, 1.0, 0.1)
            .is_none());
    }
}
