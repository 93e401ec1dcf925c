//! Oriented closed triangulations with vertices on the exact surface.

mod io;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

pub use io::{write_csv_triangles, write_csv_vertices, write_vtk, VtkFormat};

use crate::error::{Error, Result};
use crate::geometry::{Atlas, SurfaceKind};
use crate::linalg::{self, Vec3};
use crate::scalar::Real;

static NEXT_MESH_ID: AtomicU64 = AtomicU64::new(1);

/// Opaque identifier tying discrete fields to the mesh they live on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct MeshId(u64);

/// Mesh presets with deterministic refinement hierarchies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum MeshPreset {
    /// Icosahedron projected to the sphere, midpoint-subdivided `subdivisions` times.
    SphereIcosahedral { subdivisions: usize },
    /// Structured `n_minor × n_major` grid in the torus angles, each quad split in two.
    TorusGrid { n_minor: usize, n_major: usize },
}

impl MeshPreset {
    /// Preset by name. For the torus, `resolution` n gives an `n × 3n` grid.
    pub fn from_name(name: &str, resolution: usize) -> Result<Self> {
        match name {
            "sphere-icosahedral" | "sphere" => Ok(MeshPreset::SphereIcosahedral {
                subdivisions: resolution,
            }),
            "torus-grid" | "torus" => Ok(MeshPreset::TorusGrid {
                n_minor: resolution,
                n_major: 3 * resolution,
            }),
            other => Err(Error::InvalidArgument(format!("unknown mesh preset '{other}'"))),
        }
    }
}

/// Triangle surface mesh.
#[derive(Debug, Clone)]
pub struct SurfaceMesh<T> {
    id: MeshId,
    vertices: Vec<Vec3<T>>,
    triangles: Vec<[usize; 3]>,
    /// Undirected edge `(lo, hi)` → incident triangles.
    edges: BTreeMap<(usize, usize), Vec<usize>>,
}

/// Per-element data of the affine triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry<T> {
    pub area: T,
    pub normal: Vec3<T>,
    /// Gradients of the three hat functions restricted to the triangle plane.
    pub gradients: [Vec3<T>; 3],
}

impl<T: Real> SurfaceMesh<T> {
    /// Builds a mesh, rejecting out-of-range indices and degenerate triangles.
    /// Closedness and orientation are checked separately by [`Self::validate_closed`].
    pub fn new(vertices: Vec<Vec3<T>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        let mut edges: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        let scale = bounding_scale(&vertices);
        let min_area = T::c(1e-14) * scale * scale;
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::Mesh(format!("triangle {t} references a missing vertex")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::Mesh(format!("triangle {t} repeats a vertex")));
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            let area = T::c(0.5) * linalg::norm(&linalg::cross(&linalg::sub(&b, &a), &linalg::sub(&c, &a)));
            if !(area > T::zero() && area >= min_area) {
                return Err(Error::Mesh(format!("triangle {t} is degenerate")));
            }
            for k in 0..3 {
                let (i, j) = (tri[k], tri[(k + 1) % 3]);
                edges.entry((i.min(j), i.max(j))).or_default().push(t);
            }
        }
        Ok(Self {
            id: MeshId(NEXT_MESH_ID.fetch_add(1, Ordering::Relaxed)),
            vertices,
            triangles,
            edges,
        })
    }

    pub fn id(&self) -> MeshId {
        self.id
    }

    pub fn vertices(&self) -> &[Vec3<T>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Undirected edges with their incident triangles.
    pub fn edges(&self) -> impl Iterator<Item = (&(usize, usize), &Vec<usize>)> {
        self.edges.iter()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.triangles.len() as i64
    }

    /// Checks that every edge has exactly two triangles that traverse it in
    /// opposite directions.
    pub fn validate_closed(&self) -> Result<()> {
        for (&(i, j), faces) in &self.edges {
            if faces.len() != 2 {
                return Err(Error::Mesh(format!(
                    "edge ({i}, {j}) has {} incident triangles",
                    faces.len()
                )));
            }
            let dir = |t: usize| {
                let tri = self.triangles[t];
                (0..3).any(|k| tri[k] == i && tri[(k + 1) % 3] == j)
            };
            if dir(faces[0]) == dir(faces[1]) {
                return Err(Error::Mesh(format!("inconsistent orientation across edge ({i}, {j})")));
            }
        }
        Ok(())
    }

    pub fn element_geometry(&self, t: usize) -> Result<ElementGeometry<T>> {
        let tri = self
            .triangles
            .get(t)
            .ok_or_else(|| Error::Mesh(format!("triangle index {t} out of range")))?;
        let x = tri.map(|v| self.vertices[v]);
        let cr = linalg::cross(&linalg::sub(&x[1], &x[0]), &linalg::sub(&x[2], &x[0]));
        let twice = linalg::norm(&cr);
        if !(twice > T::zero()) {
            return Err(Error::Mesh(format!("triangle {t} is degenerate")));
        }
        let normal = linalg::scale(T::one() / twice, &cr);
        let gradients = std::array::from_fn(|i| {
            let edge = linalg::sub(&x[(i + 2) % 3], &x[(i + 1) % 3]);
            linalg::scale(T::one() / twice, &linalg::cross(&normal, &edge))
        });
        Ok(ElementGeometry {
            area: T::c(0.5) * twice,
            normal,
            gradients,
        })
    }

    /// All element geometries in triangle order.
    pub fn element_geometries(&self) -> Result<Vec<ElementGeometry<T>>> {
        (0..self.triangles.len()).map(|t| self.element_geometry(t)).collect()
    }

    /// Longest edge length.
    pub fn mesh_size(&self) -> T {
        self.edges
            .keys()
            .map(|&(i, j)| linalg::norm(&linalg::sub(&self.vertices[i], &self.vertices[j])))
            .fold(T::zero(), T::max)
    }

    pub fn total_area(&self) -> T {
        self.triangles
            .iter()
            .map(|tri| {
                let [a, b, c] = tri.map(|v| self.vertices[v]);
                T::c(0.5) * linalg::norm(&linalg::cross(&linalg::sub(&b, &a), &linalg::sub(&c, &a)))
            })
            .sum()
    }

    /// Splits every triangle into four at the edge midpoints; new vertices are
    /// projected onto the exact surface.
    pub fn refine(&self, atlas: &Atlas<T>) -> Result<Self> {
        let mut vertices = self.vertices.clone();
        let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        let half = T::c(0.5);
        for tri in &self.triangles {
            let mut mid = [0usize; 3];
            for k in 0..3 {
                let (i, j) = (tri[k], tri[(k + 1) % 3]);
                let key = (i.min(j), i.max(j));
                mid[k] = match midpoint.get(&key) {
                    Some(&m) => m,
                    None => {
                        let m = linalg::scale(half, &linalg::add(&self.vertices[i], &self.vertices[j]));
                        vertices.push(atlas.project(&m)?);
                        midpoint.insert(key, vertices.len() - 1);
                        vertices.len() - 1
                    }
                };
            }
            let [a, b, c] = *tri;
            let [ab, bc, ca] = mid;
            triangles.push([a, ab, ca]);
            triangles.push([ab, b, bc]);
            triangles.push([ca, bc, c]);
            triangles.push([ab, bc, ca]);
        }
        SurfaceMesh::new(vertices, triangles)
    }

    /// Interpolates an ambient function at the vertices.
    pub fn interpolate(&self, f: impl Fn(&Vec3<T>) -> T) -> Vec<T> {
        self.vertices.iter().map(f).collect()
    }
}

fn bounding_scale<T: Real>(vertices: &[Vec3<T>]) -> T {
    let mut lo = [T::infinity(); 3];
    let mut hi = [T::neg_infinity(); 3];
    for v in vertices {
        for k in 0..3 {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    let d = linalg::sub(&hi, &lo);
    if d.iter().all(|x| x.is_finite()) {
        linalg::norm(&d)
    } else {
        T::one()
    }
}

/// Builds a preset mesh on the given atlas.
pub fn build_mesh<T: Real>(atlas: &Atlas<T>, preset: MeshPreset) -> Result<SurfaceMesh<T>> {
    let mesh = match (preset, atlas.kind()) {
        (MeshPreset::SphereIcosahedral { subdivisions }, SurfaceKind::Sphere { .. }) => {
            let mut mesh = icosahedron(atlas)?;
            for _ in 0..subdivisions {
                mesh = mesh.refine(atlas)?;
            }
            mesh
        }
        (MeshPreset::TorusGrid { n_minor, n_major }, SurfaceKind::Torus { .. }) => torus_grid(atlas, n_minor, n_major)?,
        (p, k) => {
            return Err(Error::InvalidArgument(format!(
                "preset {p:?} does not apply to surface {k:?}"
            )))
        }
    };
    mesh.validate_closed()?;
    Ok(mesh)
}

fn icosahedron<T: Real>(atlas: &Atlas<T>) -> Result<SurfaceMesh<T>> {
    let phi = (T::one() + T::c(5.0).sqrt()) * T::c(0.5);
    let (o, z) = (T::one(), T::zero());
    let raw: [Vec3<T>; 12] = [
        [-o, phi, z],
        [o, phi, z],
        [-o, -phi, z],
        [o, -phi, z],
        [z, -o, phi],
        [z, o, phi],
        [z, -o, -phi],
        [z, o, -phi],
        [phi, z, -o],
        [phi, z, o],
        [-phi, z, -o],
        [-phi, z, o],
    ];
    let vertices = raw.iter().map(|v| atlas.project(v)).collect::<Result<Vec<_>>>()?;
    let triangles = vec![
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
    orient_outward(atlas, vertices, triangles)
}

fn torus_grid<T: Real>(atlas: &Atlas<T>, n_minor: usize, n_major: usize) -> Result<SurfaceMesh<T>> {
    if n_minor < 3 || n_major < 3 {
        return Err(Error::InvalidArgument("torus grid needs at least 3×3 cells".into()));
    }
    let chart = atlas
        .charts()
        .first()
        .ok_or_else(|| Error::Mesh("atlas has no charts".into()))?;
    let two_pi = T::PI() + T::PI();
    let mut vertices = Vec::with_capacity(n_minor * n_major);
    for j in 0..n_major {
        for i in 0..n_minor {
            let y = [
                two_pi * T::from_usize_lossy(i) / T::from_usize_lossy(n_minor),
                two_pi * T::from_usize_lossy(j) / T::from_usize_lossy(n_major),
            ];
            vertices.push(chart.point(&y)?);
        }
    }
    let idx = |i: usize, j: usize| (j % n_major) * n_minor + (i % n_minor);
    let mut triangles = Vec::with_capacity(2 * n_minor * n_major);
    for j in 0..n_major {
        for i in 0..n_minor {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    orient_outward(atlas, vertices, triangles)
}

/// Flips triangles whose geometric normal points into the enclosed region.
fn orient_outward<T: Real>(
    atlas: &Atlas<T>,
    vertices: Vec<Vec3<T>>,
    mut triangles: Vec<[usize; 3]>,
) -> Result<SurfaceMesh<T>> {
    let third = T::one() / T::c(3.0);
    for tri in triangles.iter_mut() {
        let [a, b, c] = tri.map(|v| vertices[v]);
        let n = linalg::cross(&linalg::sub(&b, &a), &linalg::sub(&c, &a));
        let centroid = linalg::scale(third, &linalg::add(&linalg::add(&a, &b), &c));
        let nu = atlas.normal(&centroid)?;
        if linalg::dot(&n, &nu) < T::zero() {
            tri.swap(1, 2);
        }
    }
    SurfaceMesh::new(vertices, triangles)
}
