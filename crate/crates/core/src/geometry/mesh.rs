use std::io::Write;
use std::path::Path;

use super::depth::{unproject_depth, DepthMap};
use crate::{Error, Result, Vec3};

/// Triangles with area at or below this are dropped.
pub const DEGENERATE_AREA: f64 = 1e-12;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len() as u32;
        if let Some(t) = triangles.iter().find(|t| t.iter().any(|&i| i >= n)) {
            return Err(Error::InvalidInput(format!(
                "triangle {t:?} indexes past {n} vertices"
            )));
        }
        Ok(Self {
            vertices,
            triangles,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    #[inline]
    pub fn corners(&self, tri: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[tri];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Wavefront OBJ, for inspecting meshes in external viewers.
    pub fn write_obj(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        for v in &self.vertices {
            writeln!(out, "v {} {} {}", v.x, v.y, v.z).unwrap();
        }
        for t in &self.triangles {
            writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1).unwrap();
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

pub fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Connects neighbouring grid vertices: every 2x2 quad is split along its
/// top-left to bottom-right diagonal. With a threshold, triangles whose
/// vertices differ in z by more than it are dropped.
pub fn triangulate_grid(
    cloud: &[Vec3],
    width: usize,
    height: usize,
    discontinuity_threshold: Option<f64>,
) -> Result<TriangleMesh> {
    if cloud.len() != width * height {
        return Err(Error::DimensionMismatch {
            context: "grid triangulation",
            expected: width * height,
            got: cloud.len(),
        });
    }
    let mut triangles =
        Vec::with_capacity(2 * width.saturating_sub(1) * height.saturating_sub(1));
    let idx = |u: usize, v: usize| (v * width + u) as u32;
    for v in 0..height.saturating_sub(1) {
        for u in 0..width - 1 {
            let tl = idx(u, v);
            let tr = idx(u + 1, v);
            let bl = idx(u, v + 1);
            let br = idx(u + 1, v + 1);
            for tri in [[tl, br, tr], [tl, bl, br]] {
                let p = tri.map(|i| cloud[i as usize]);
                if let Some(limit) = discontinuity_threshold {
                    let zs = [p[0].z, p[1].z, p[2].z];
                    let span = zs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                        - zs.iter().copied().fold(f64::INFINITY, f64::min);
                    if span > limit {
                        continue;
                    }
                }
                if triangle_area(&p[0], &p[1], &p[2]) <= DEGENERATE_AREA {
                    continue;
                }
                triangles.push(tri);
            }
        }
    }
    Ok(TriangleMesh {
        vertices: cloud.to_vec(),
        triangles,
    })
}

/// Unprojects and triangulates a depth map in one go.
pub fn mesh_from_depth(depth: &DepthMap, discontinuity_threshold: Option<f64>) -> Result<TriangleMesh> {
    let cloud = unproject_depth(depth)?;
    triangulate_grid(&cloud, depth.width, depth.height, discontinuity_threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CameraIntrinsics;
    use std::collections::HashMap;

    fn grid(width: usize, height: usize, depth: impl Fn(usize, usize) -> f64) -> Vec<Vec3> {
        let mut cloud = Vec::new();
        for v in 0..height {
            for u in 0..width {
                cloud.push(Vec3::new(u as f64, v as f64, depth(u, v)));
            }
        }
        cloud
    }

    #[test]
    fn single_quad() {
        let mesh = triangulate_grid(&grid(2, 2, |_, _| 1.0), 2, 2, None).unwrap();
        assert_eq!(mesh.vertices.len(), 4);
        assert_eq!(mesh.triangles.len(), 2);
    }

    #[test]
    fn three_by_three() {
        let mesh = triangulate_grid(&grid(3, 3, |_, _| 1.0), 3, 3, None).unwrap();
        assert_eq!(mesh.triangles.len(), 8);
    }

    #[test]
    fn size_mismatch() {
        assert!(matches!(
            triangulate_grid(&grid(2, 2, |_, _| 1.0), 3, 2, None),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn discontinuity_depends_on_diagonal() {
        // The diagonal joins top-left and bottom-right, so a deep corner on
        // the diagonal spoils both triangles while an off-diagonal one
        // spoils only its own.
        let cases = [((0, 0), 0), ((1, 1), 0), ((1, 0), 1), ((0, 1), 1)];
        for ((du, dv), expected) in cases {
            let cloud = grid(2, 2, |u, v| if (u, v) == (du, dv) { 11.0 } else { 1.0 });
            let mesh = triangulate_grid(&cloud, 2, 2, Some(1.0)).unwrap();
            assert_eq!(mesh.triangles.len(), expected, "deep corner {du},{dv}");
        }
    }

    #[test]
    fn interior_edges_shared_twice() {
        let (w, h) = (7, 5);
        let mesh = triangulate_grid(&grid(w, h, |u, v| 1.0 + 0.1 * (u * v) as f64), w, h, None).unwrap();
        let mut edges: HashMap<(u32, u32), usize> = HashMap::new();
        for t in &mesh.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        for ((a, b), count) in edges {
            let (ua, va) = (a as usize % w, a as usize / w);
            let (ub, vb) = (b as usize % w, b as usize / w);
            let on_border = (ua == ub && (ua == 0 || ua == w - 1))
                || (va == vb && (va == 0 || va == h - 1));
            assert_eq!(count, if on_border { 1 } else { 2 }, "edge {a}-{b}");
        }
    }

    #[test]
    fn mesh_from_depth_keeps_one_vertex_per_pixel() {
        let intr = CameraIntrinsics::from_fov(8, 6, 90.0).unwrap();
        let depth = DepthMap::constant(2.0, intr).unwrap();
        let mesh = mesh_from_depth(&depth, None).unwrap();
        assert_eq!(mesh.vertices.len(), 48);
        assert_eq!(mesh.triangles.len(), 2 * 7 * 5);
    }

    #[test]
    fn obj_export() {
        let mesh = triangulate_grid(&grid(2, 2, |_, _| 1.0), 2, 2, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.obj");
        mesh.write_obj(&path).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 4);
        assert!(text.contains("f 1 4 2"));
    }
}
