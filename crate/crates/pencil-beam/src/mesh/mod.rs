//! Conforming triangulations of the rectangular phase-space domain
//! I_y x I_eta, with red-green local refinement, boundary classification
//! for the transport field beta = (eta, 0), text import/export and point
//! location.

mod io;
mod locate;
mod refine;

pub use locate::Locator;

use crate::error::{Error, Result};
use std::sync::atomic::{AtomicU64, Ordering};

static NEXT_MESH_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_mesh_id() -> u64 {
    NEXT_MESH_ID.fetch_add(1, Ordering::Relaxed)
}

/// Axis-aligned domain rectangle [y_min, y_max] x [eta_min, eta_max].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub y_min: f64,
    pub y_max: f64,
    pub eta_min: f64,
    pub eta_max: f64,
}

impl Rect {
    pub fn new(y_min: f64, y_max: f64, eta_min: f64, eta_max: f64) -> Result<Self> {
        if !(y_min < y_max && eta_min < eta_max)
            || !y_min.is_finite()
            || !y_max.is_finite()
            || !eta_min.is_finite()
            || !eta_max.is_finite()
        {
            return Err(Error::DegenerateDomain(format!(
                "[{y_min}, {y_max}] x [{eta_min}, {eta_max}]"
            )));
        }
        Ok(Self { y_min, y_max, eta_min, eta_max })
    }

    /// The standard domain [-1, 1] x [-1, 1].
    pub fn unit_centered() -> Self {
        Self { y_min: -1.0, y_max: 1.0, eta_min: -1.0, eta_max: 1.0 }
    }

    pub fn width(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn height(&self) -> f64 {
        self.eta_max - self.eta_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

/// Boundary classification against the transport field beta = (eta, 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    /// n . beta < 0 at the edge midpoint: beam enters here, solution pinned
    /// to zero.
    Inflow,
    /// n . beta >= 0 on a y-side: beam leaves freely.
    Outflow,
    /// eta-sides, where the transport field is tangential.
    Characteristic,
}

impl BoundaryTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryTag::Inflow => "inflow",
            BoundaryTag::Outflow => "outflow",
            BoundaryTag::Characteristic => "characteristic",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "inflow" => Ok(BoundaryTag::Inflow),
            "outflow" => Ok(BoundaryTag::Outflow),
            "characteristic" => Ok(BoundaryTag::Characteristic),
            other => Err(Error::MeshFormat(format!("unknown boundary tag {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    /// Vertex indices, ordered as traversed by the owning triangle.
    pub v: [usize; 2],
    pub tag: BoundaryTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triangle {
    /// Counter-clockwise vertex indices.
    pub v: [usize; 3],
    /// Refinement depth; children are one generation deeper than the
    /// triangle they subdivide.
    pub generation: u32,
    /// Index of the subdivided triangle in the mesh this one was refined
    /// from; `None` for triangles of a freshly built mesh.
    pub parent: Option<usize>,
    /// Green (bisection) closure triangles are unwound before the next
    /// refinement sweep to keep angles bounded.
    pub green: bool,
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    id: u64,
    pub rect: Rect,
    /// (y, eta) coordinates.
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<Triangle>,
    pub boundary: Vec<BoundaryEdge>,
}

/// Smallest interior angle tolerated anywhere, in degrees.
pub const MIN_ANGLE_DEG: f64 = 15.0;

impl TriMesh {
    /// Uniform diagonal-split grid over `rect` with close to
    /// `target_elements` triangles (2 per grid cell).
    pub fn rectangle(rect: Rect, target_elements: usize) -> Result<Self> {
        if target_elements < 2 {
            return Err(Error::InvalidArgument(format!(
                "target_elements {target_elements} < 2"
            )));
        }
        let aspect = rect.width() / rect.height();
        let nx = ((target_elements as f64 * aspect / 2.0).sqrt().round() as usize).max(1);
        let ny = ((nx as f64 / aspect).round() as usize).max(1);
        let ys: Vec<f64> = (0..=nx)
            .map(|i| rect.y_min + rect.width() * i as f64 / nx as f64)
            .collect();
        let es: Vec<f64> = (0..=ny)
            .map(|j| rect.eta_min + rect.height() * j as f64 / ny as f64)
            .collect();
        Self::from_tensor_grid(&ys, &es)
    }

    /// Diagonal-split triangulation whose vertex set is the tensor grid
    /// `ys x etas`. Coordinates must be strictly increasing.
    pub fn from_tensor_grid(ys: &[f64], etas: &[f64]) -> Result<Self> {
        if ys.len() < 2 || etas.len() < 2 {
            return Err(Error::DegenerateDomain(
                "tensor grid needs at least 2 coordinates per axis".into(),
            ));
        }
        for w in ys.windows(2).chain(etas.windows(2)) {
            if !(w[0] < w[1]) {
                return Err(Error::DegenerateDomain(
                    "tensor grid coordinates must be strictly increasing".into(),
                ));
            }
        }
        let rect = Rect::new(ys[0], *ys.last().unwrap(), etas[0], *etas.last().unwrap())?;
        let nx = ys.len() - 1;
        let ny = etas.len() - 1;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for eta in etas {
            for y in ys {
                vertices.push([*y, *eta]);
            }
        }
        let idx = |i: usize, j: usize| j * (nx + 1) + i;
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (bl, br) = (idx(i, j), idx(i + 1, j));
                let (tl, tr) = (idx(i, j + 1), idx(i + 1, j + 1));
                triangles.push(Triangle { v: [bl, br, tr], generation: 0, parent: None, green: false });
                triangles.push(Triangle { v: [bl, tr, tl], generation: 0, parent: None, green: false });
            }
        }
        let mut mesh = TriMesh { id: fresh_mesh_id(), rect, vertices, triangles, boundary: Vec::new() };
        mesh.boundary = mesh.classify_boundary()?;
        Ok(mesh)
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_coords(&self, t: usize) -> [[f64; 2]; 3] {
        let tri = &self.triangles[t];
        [
            self.vertices[tri.v[0]],
            self.vertices[tri.v[1]],
            self.vertices[tri.v[2]],
        ]
    }

    /// Signed area of triangle `t`; positive for CCW orientation.
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_coords(t);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn barycenter(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangle_coords(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Classifies every boundary edge of the mesh. Inflow on a y-side means
    /// the outward normal opposes the transport field (eta, 0) at the edge
    /// midpoint; ties (midpoint eta = 0) classify as outflow; eta-sides are
    /// characteristic.
    pub fn classify_boundary(&self) -> Result<Vec<BoundaryEdge>> {
        let tol_y = 1e-12 * self.rect.width().max(1.0);
        let tol_e = 1e-12 * self.rect.height().max(1.0);
        let mut out = Vec::new();
        for (e, _count) in self.boundary_edge_candidates()? {
            let (p, q) = (self.vertices[e[0]], self.vertices[e[1]]);
            let mid_eta = 0.5 * (p[1] + q[1]);
            let on_left = (p[0] - self.rect.y_min).abs() <= tol_y
                && (q[0] - self.rect.y_min).abs() <= tol_y;
            let on_right = (p[0] - self.rect.y_max).abs() <= tol_y
                && (q[0] - self.rect.y_max).abs() <= tol_y;
            let on_bottom = (p[1] - self.rect.eta_min).abs() <= tol_e
                && (q[1] - self.rect.eta_min).abs() <= tol_e;
            let on_top = (p[1] - self.rect.eta_max).abs() <= tol_e
                && (q[1] - self.rect.eta_max).abs() <= tol_e;
            let tag = if on_left {
                // outward normal (-1, 0): n.beta = -eta
                if mid_eta > 0.0 {
                    BoundaryTag::Inflow
                } else {
                    BoundaryTag::Outflow
                }
            } else if on_right {
                // outward normal (+1, 0): n.beta = eta
                if mid_eta < 0.0 {
                    BoundaryTag::Inflow
                } else {
                    BoundaryTag::Outflow
                }
            } else if on_bottom || on_top {
                BoundaryTag::Characteristic
            } else {
                return Err(Error::MeshFormat(format!(
                    "boundary edge ({:?} - {:?}) lies on no domain side",
                    p, q
                )));
            };
            out.push(BoundaryEdge { v: e, tag });
        }
        Ok(out)
    }

    /// Edges owned by exactly one triangle, in deterministic (triangle
    /// scan) order, keeping the owning triangle's traversal direction.
    fn boundary_edge_candidates(&self) -> Result<Vec<([usize; 2], usize)>> {
        use std::collections::HashMap;
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri.v[k], tri.v[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                *count.entry(key).or_insert(0) += 1;
            }
        }
        for (&(a, b), &c) in &count {
            if c > 2 {
                return Err(Error::MeshFormat(format!(
                    "edge ({a}, {b}) shared by {c} triangles"
                )));
            }
        }
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri.v[k], tri.v[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                if count[&key] == 1 && seen.insert(key) {
                    out.push(([a, b], 1));
                }
            }
        }
        Ok(out)
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        let mut min = f64::INFINITY;
        for t in 0..self.triangles.len() {
            let c = self.triangle_coords(t);
            for k in 0..3 {
                let a = c[k];
                let b = c[(k + 1) % 3];
                let d = c[(k + 2) % 3];
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [d[0] - a[0], d[1] - a[1]];
                let dot = u[0] * v[0] + u[1] * v[1];
                let nu = (u[0] * u[0] + u[1] * u[1]).sqrt();
                let nv = (v[0] * v[0] + v[1] * v[1]).sqrt();
                let cos = (dot / (nu * nv)).clamp(-1.0, 1.0);
                min = min.min(cos.acos());
            }
        }
        min.to_degrees()
    }

    /// Checks every structural invariant: positive CCW areas, conformity,
    /// boundary closure with consistent tags, angle floor, and exact tiling
    /// of the domain rectangle.
    pub fn validate(&self) -> Result<()> {
        if self.triangles.is_empty() {
            return Err(Error::DegenerateDomain("mesh has no triangles".into()));
        }
        let mut area_sum = 0.0;
        for t in 0..self.triangles.len() {
            let a = self.signed_area(t);
            if !(a > 0.0) {
                return Err(Error::MeshFormat(format!(
                    "triangle {t} has non-positive area {a}"
                )));
            }
            area_sum += a;
            for &v in &self.triangles[t].v {
                if v >= self.vertices.len() {
                    return Err(Error::MeshFormat(format!(
                        "triangle {t} references vertex {v} out of range"
                    )));
                }
            }
        }
        let rect_area = self.rect.area();
        if ((area_sum - rect_area) / rect_area).abs() > 1e-12 {
            return Err(Error::MeshFormat(format!(
                "triangles tile {area_sum}, domain area {rect_area}"
            )));
        }
        let expected = self.classify_boundary()?;
        if expected.len() != self.boundary.len() {
            return Err(Error::MeshFormat(format!(
                "boundary has {} edges, classification finds {}",
                self.boundary.len(),
                expected.len()
            )));
        }
        let key = |e: &BoundaryEdge| {
            (e.v[0].min(e.v[1]), e.v[0].max(e.v[1]), e.tag)
        };
        let mut got: Vec<_> = self.boundary.iter().map(key).collect();
        let mut want: Vec<_> = expected.iter().map(key).collect();
        got.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        want.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        if got != want {
            return Err(Error::MeshFormat("boundary tags inconsistent".into()));
        }
        let min_angle = self.min_angle_deg();
        if min_angle < MIN_ANGLE_DEG {
            return Err(Error::MeshFormat(format!(
                "minimum angle {min_angle:.2} below floor {MIN_ANGLE_DEG}"
            )));
        }
        Ok(())
    }

    /// Vertices touched by at least one inflow boundary edge. This is the
    /// constrained set for the vanishing-inflow condition; corners shared
    /// with other boundary kinds are included (safest superset).
    pub fn inflow_vertices(&self) -> Vec<usize> {
        let mut flag = vec![false; self.vertices.len()];
        for e in &self.boundary {
            if e.tag == BoundaryTag::Inflow {
                flag[e.v[0]] = true;
                flag[e.v[1]] = true;
            }
        }
        (0..self.vertices.len()).filter(|&v| flag[v]).collect()
    }

    /// Vertex values of `f(y, eta)`, the nodal interpolant.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.vertices.iter().map(|v| f(v[0], v[1])).collect()
    }

    /// Geometry/topology equality, ignoring mesh identity and genealogy.
    pub fn same_geometry(&self, other: &TriMesh) -> bool {
        self.rect == other.rect
            && self.vertices == other.vertices
            && self
                .triangles
                .iter()
                .zip(&other.triangles)
                .all(|(a, b)| a.v == b.v)
            && self.triangles.len() == other.triangles.len()
            && self.boundary == other.boundary
    }
}
