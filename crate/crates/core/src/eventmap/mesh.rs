//! Closed triangle meshes: inside/outside tests by ray parity and signed
//! distance to the surface.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

type V3 = Vector3<f64>;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh is not watertight: edge ({0}, {1}) is used by {2} triangles")]
    NotWatertight(usize, usize, usize),
    #[error("mesh has no triangles")]
    Empty,
    #[error("triangle {0} references a missing vertex")]
    BadIndex(usize),
    #[error("unsupported mesh format: {0}")]
    Format(String),
    #[error("every ray direction hit an edge or vertex")]
    DegenerateRays,
    #[error("altitude must be nonnegative, got {0}")]
    NegativeAltitude(f64),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

/// Barycentric slack below which a ray hit is treated as touching an edge.
const EDGE_EPS: f64 = 1e-9;
const RAY_RETRIES: usize = 16;

/// An indexed triangle mesh, checked to be closed (every edge shared by
/// exactly two triangles).
#[derive(Clone, Debug)]
pub struct TriangleMesh {
    vertices: Vec<V3>,
    triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<[f64; 3]>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        for (i, t) in triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= vertices.len()) {
                return Err(MeshError::BadIndex(i));
            }
        }
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &triangles {
            for j in 0..3 {
                let (a, b) = (t[j], t[(j + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let mut bad: Vec<_> = edges.into_iter().filter(|&(_, c)| c != 2).collect();
        bad.sort_unstable();
        if let Some(&((a, b), c)) = bad.first() {
            return Err(MeshError::NotWatertight(a, b, c));
        }
        Ok(TriangleMesh {
            vertices: vertices.into_iter().map(V3::from).collect(),
            triangles,
        })
    }

    /// Loads ASCII/binary STL or OBJ, chosen by file extension.
    pub fn load(path: &Path) -> Result<Self, MeshError> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .unwrap_or_default();
        match ext.as_str() {
            "stl" => Self::load_stl(path),
            "obj" => Self::load_obj(path),
            other => Err(MeshError::Format(other.to_string())),
        }
    }

    fn load_stl(path: &Path) -> Result<Self, MeshError> {
        let io = |source| MeshError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut f = BufReader::new(File::open(path).map_err(io)?);
        let m = stl_io::read_stl(&mut f).map_err(io)?;
        let verts = m
            .vertices
            .iter()
            .map(|v| [v.0[0] as f64, v.0[1] as f64, v.0[2] as f64])
            .collect();
        let tris = m.faces.iter().map(|f| f.vertices).collect();
        Self::new(verts, tris)
    }

    fn load_obj(path: &Path) -> Result<Self, MeshError> {
        let opts = tobj::LoadOptions {
            triangulate: true,
            single_index: false,
            ..Default::default()
        };
        let (models, _) = tobj::load_obj(path, &opts).map_err(|e| MeshError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut verts = Vec::new();
        let mut tris = Vec::new();
        for m in models {
            let base = verts.len();
            let p = &m.mesh.positions;
            verts.extend(p.chunks_exact(3).map(|c| [c[0] as f64, c[1] as f64, c[2] as f64]));
            tris.extend(
                m.mesh
                    .indices
                    .chunks_exact(3)
                    .map(|c| [base + c[0] as usize, base + c[1] as usize, base + c[2] as usize]),
            );
        }
        Self::new(verts, tris)
    }

    /// Writes a binary STL.
    pub fn save_stl(&self, path: &Path) -> Result<(), MeshError> {
        let io = |source| MeshError::Io {
            path: path.to_path_buf(),
            source,
        };
        let f32v = |v: &V3| stl_io::Vector::new([v.x as f32, v.y as f32, v.z as f32]);
        let tris: Vec<stl_io::Triangle> = self
            .triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| self.vertices[i]);
                let n = (b - a).cross(&(c - a)).normalize();
                stl_io::Triangle {
                    normal: f32v(&n),
                    vertices: [f32v(&a), f32v(&b), f32v(&c)],
                }
            })
            .collect();
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        stl_io::write_stl(&mut w, tris.iter()).map_err(io)
    }

    /// Axis-aligned box with outward-facing triangles.
    pub fn cube(min: [f64; 3], max: [f64; 3]) -> Self {
        let v: Vec<[f64; 3]> = (0..8)
            .map(|i| {
                [
                    if i & 1 == 0 { min[0] } else { max[0] },
                    if i & 2 == 0 { min[1] } else { max[1] },
                    if i & 4 == 0 { min[2] } else { max[2] },
                ]
            })
            .collect();
        let quads = [
            [0, 2, 3, 1],
            [4, 5, 7, 6],
            [0, 1, 5, 4],
            [2, 6, 7, 3],
            [0, 4, 6, 2],
            [1, 3, 7, 5],
        ];
        let t = quads
            .iter()
            .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
            .collect();
        Self::new(v, t).expect("closed box")
    }

    /// Subdivided icosahedron with vertices on the sphere of `radius`.
    pub fn icosphere(center: [f64; 3], radius: f64, subdivisions: u32) -> Self {
        let p = (1.0 + 5f64.sqrt()) / 2.0;
        let mut verts: Vec<V3> = [
            [-1.0, p, 0.0],
            [1.0, p, 0.0],
            [-1.0, -p, 0.0],
            [1.0, -p, 0.0],
            [0.0, -1.0, p],
            [0.0, 1.0, p],
            [0.0, -1.0, -p],
            [0.0, 1.0, -p],
            [p, 0.0, -1.0],
            [p, 0.0, 1.0],
            [-p, 0.0, -1.0],
            [-p, 0.0, 1.0],
        ]
        .iter()
        .map(|v| V3::from(*v).normalize())
        .collect();
        let mut tris: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..subdivisions {
            let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
            let mut midpoint = |a: usize, b: usize, verts: &mut Vec<V3>| {
                *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                    verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                    verts.len() - 1
                })
            };
            let mut next = Vec::with_capacity(tris.len() * 4);
            for &[a, b, c] in &tris {
                let ab = midpoint(a, b, &mut verts);
                let bc = midpoint(b, c, &mut verts);
                let ca = midpoint(c, a, &mut verts);
                next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            tris = next;
        }
        let c = V3::from(center);
        let verts = verts.iter().map(|v| (c + v * radius).into()).collect();
        Self::new(verts, tris).expect("closed icosphere")
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Corner positions of triangle `i`.
    pub fn triangle(&self, i: usize) -> [[f64; 3]; 3] {
        self.triangles[i].map(|v| self.vertices[v].into())
    }

    /// Axis-aligned bounds `(min, max)`.
    pub fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = V3::repeat(f64::INFINITY);
        let mut hi = V3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo.into(), hi.into())
    }

    fn corners(&self, t: usize) -> [V3; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }

    /// Ray parity test; `None` when some hit lands on an edge or the ray
    /// is parallel to a triangle it passes through.
    fn parity(&self, o: &V3, d: &V3) -> Option<bool> {
        let mut inside = false;
        for t in 0..self.triangles.len() {
            match moller_trumbore(o, d, &self.corners(t)) {
                Hit::Miss => {}
                Hit::Hit => inside = !inside,
                Hit::Degenerate => return None,
            }
        }
        Some(inside)
    }

    /// Inside test by counting crossings of a random ray; directions are
    /// redrawn when a hit is too close to an edge to count reliably.
    pub fn point_in_mesh(&self, p: [f64; 3]) -> Result<bool, MeshError> {
        let o = V3::from(p);
        let seed = p.iter().fold(0x5eed_u64, |h, x| h.rotate_left(17) ^ x.to_bits());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..RAY_RETRIES {
            let d = loop {
                let v = V3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
                let n = v.norm();
                if n > 0.1 && n <= 1.0 {
                    break v / n;
                }
            };
            if let Some(inside) = self.parity(&o, &d) {
                return Ok(inside);
            }
        }
        Err(MeshError::DegenerateRays)
    }

    /// Unsigned Euclidean distance from `p` to the surface.
    pub fn distance(&self, p: [f64; 3]) -> f64 {
        let p = V3::from(p);
        (0..self.triangles.len())
            .map(|t| (closest_point(&p, &self.corners(t)) - p).norm_squared())
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }

    /// `s·d(p) − h`: positive above the altitude-`h` surface, negative
    /// below it, with `s = −1` inside the mesh.
    pub fn signed_boundary_value(&self, p: [f64; 3], h: f64) -> Result<f64, MeshError> {
        if !(h >= 0.0) {
            return Err(MeshError::NegativeAltitude(h));
        }
        let d = self.distance(p);
        if d <= 1e-12 * V3::from(p).norm().max(1.0) {
            return Ok(-h);
        }
        let s = if self.point_in_mesh(p)? { -1.0 } else { 1.0 };
        Ok(s * d - h)
    }
}

enum Hit {
    Miss,
    Hit,
    Degenerate,
}

fn moller_trumbore(o: &V3, d: &V3, [a, b, c]: &[V3; 3]) -> Hit {
    let e1 = b - a;
    let e2 = c - a;
    let pv = d.cross(&e2);
    let det = e1.dot(&pv);
    let scale = e1.norm() * e2.norm();
    if det.abs() <= 1e-12 * scale {
        // parallel: only a problem if the ray lies in the triangle's plane
        let n = e1.cross(&e2);
        return if n.dot(&(o - a)).abs() <= 1e-12 * scale {
            Hit::Degenerate
        } else {
            Hit::Miss
        };
    }
    let inv = 1.0 / det;
    let tv = o - a;
    let u = tv.dot(&pv) * inv;
    if u < -EDGE_EPS || u > 1.0 + EDGE_EPS {
        return Hit::Miss;
    }
    let qv = tv.cross(&e1);
    let v = d.dot(&qv) * inv;
    if v < -EDGE_EPS || u + v > 1.0 + EDGE_EPS {
        return Hit::Miss;
    }
    let t = e2.dot(&qv) * inv;
    if t <= 0.0 {
        return Hit::Miss;
    }
    if u < EDGE_EPS || v < EDGE_EPS || u + v > 1.0 - EDGE_EPS {
        return Hit::Degenerate;
    }
    Hit::Hit
}

/// Closest point on a triangle (Voronoi-region walk).
fn closest_point(p: &V3, [a, b, c]: &[V3; 3]) -> V3 {
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
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_membership() {
        let m = TriangleMesh::cube([0.0; 3], [1.0; 3]);
        assert!(m.point_in_mesh([0.5, 0.5, 0.5]).unwrap());
        assert!(!m.point_in_mesh([2.0, 0.0, 0.0]).unwrap());
        assert!(!m.point_in_mesh([-0.1, 0.5, 0.5]).unwrap());
    }

    #[test]
    fn open_mesh_rejected() {
        let e = TriangleMesh::new(
            vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2]],
        );
        assert!(matches!(e, Err(MeshError::NotWatertight(..))));
    }

    #[test]
    fn closest_point_regions() {
        let t = [V3::zeros(), V3::new(1.0, 0.0, 0.0), V3::new(0.0, 1.0, 0.0)];
        assert!((closest_point(&V3::new(0.2, 0.2, 3.0), &t) - V3::new(0.2, 0.2, 0.0)).norm() < 1e-15);
        assert_eq!(closest_point(&V3::new(-1.0, -1.0, 0.0), &t), V3::zeros());
        assert_eq!(closest_point(&V3::new(2.0, -1.0, 0.0), &t), t[1]);
        let e = closest_point(&V3::new(1.0, 1.0, 0.0), &t);
        assert!((e - V3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn signed_values_on_icosphere() {
        let m = TriangleMesh::icosphere([0.0; 3], 1.0, 4);
        let out = m.signed_boundary_value([1.5, 0.0, 0.0], 0.25).unwrap();
        assert!((out - 0.25).abs() < 2e-3, "{out}");
        let inside = m.signed_boundary_value([0.0, 0.5, 0.0], 0.25).unwrap();
        assert!((inside + 0.75).abs() < 2e-3, "{inside}");
        let on = m.signed_boundary_value(m.vertices[0].into(), 0.0).unwrap();
        assert!(on.abs() < 1e-12, "{on}");
        assert!(m.signed_boundary_value([0.0; 3], -1.0).is_err());
    }

    #[test]
    fn stl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cube.stl");
        let m = TriangleMesh::cube([0.0; 3], [1.0; 3]);
        m.save_stl(&path).unwrap();
        let back = TriangleMesh::load(&path).unwrap();
        assert_eq!(back.triangle_count(), 12);
        assert_eq!(back.vertex_count(), 8);
        assert!(back.point_in_mesh([0.5, 0.5, 0.5]).unwrap());
    }

    #[test]
    fn obj_loads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tet.obj");
        std::fs::write(
            &path,
            "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 3 2\nf 1 2 4\nf 1 4 3\nf 2 3 4\n",
        )
        .unwrap();
        let m = TriangleMesh::load(&path).unwrap();
        assert!(m.point_in_mesh([0.1, 0.1, 0.1]).unwrap());
        assert!(!m.point_in_mesh([0.5, 0.5, 0.5]).unwrap());
    }
}
