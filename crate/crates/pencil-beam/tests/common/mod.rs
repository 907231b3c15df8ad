//! Shared oracles for the integration suites: dense reference assembly by
//! closed-form barycentric moments (no quadrature), so agreement with the
//! library's quadrature-based path checks two independent derivations.

#![allow(dead_code)]

use pencil_beam::assembly::shape_gradients;
use pencil_beam::mesh::{BoundaryTag, TriMesh};
use pencil_beam::SparseMatrix;

pub type Dense = Vec<Vec<f64>>;

pub fn zeros(n: usize) -> Dense {
    vec![vec![0.0; n]; n]
}

pub fn max_entry_diff(a: &Dense, b: &Dense) -> f64 {
    let mut worst = 0.0f64;
    for (ra, rb) in a.iter().zip(b) {
        for (x, y) in ra.iter().zip(rb) {
            worst = worst.max((x - y).abs());
        }
    }
    worst
}

pub fn sparse_vs_dense(s: &SparseMatrix, d: &Dense) -> f64 {
    max_entry_diff(&s.to_dense(), d)
}

/// int_T lambda_i lambda_j = A (1 + delta_ij) / 12.
pub fn dense_mass(mesh: &TriMesh) -> Dense {
    let mut m = zeros(mesh.num_vertices());
    for t in 0..mesh.num_triangles() {
        let v = mesh.triangles[t].v;
        let a = mesh.signed_area(t);
        for i in 0..3 {
            for j in 0..3 {
                m[v[i]][v[j]] += a * if i == j { 2.0 } else { 1.0 } / 12.0;
            }
        }
    }
    m
}

/// C_ij = (dphi_j/dy) int eta phi_i; int_T eta lambda_i = A (sum eta + eta_i) / 12.
pub fn dense_convection(mesh: &TriMesh) -> Dense {
    let mut m = zeros(mesh.num_vertices());
    for t in 0..mesh.num_triangles() {
        let v = mesh.triangles[t].v;
        let a = mesh.signed_area(t);
        let g = shape_gradients(mesh, t);
        let eta = [
            mesh.vertices[v[0]][1],
            mesh.vertices[v[1]][1],
            mesh.vertices[v[2]][1],
        ];
        let sum: f64 = eta.iter().sum();
        for i in 0..3 {
            for j in 0..3 {
                m[v[i]][v[j]] += g[j][0] * a * (sum + eta[i]) / 12.0;
            }
        }
    }
    m
}

/// D_ij = (dphi_j/dy)(dphi_i/dy) int eta^2;
/// int_T eta^2 = (A/12) ((sum eta)^2 + sum eta^2).
pub fn dense_streamline(mesh: &TriMesh) -> Dense {
    let mut m = zeros(mesh.num_vertices());
    for t in 0..mesh.num_triangles() {
        let v = mesh.triangles[t].v;
        let a = mesh.signed_area(t);
        let g = shape_gradients(mesh, t);
        let eta = [
            mesh.vertices[v[0]][1],
            mesh.vertices[v[1]][1],
            mesh.vertices[v[2]][1],
        ];
        let sum: f64 = eta.iter().sum();
        let sum_sq: f64 = eta.iter().map(|e| e * e).sum();
        let int_eta2 = a * (sum * sum + sum_sq) / 12.0;
        for i in 0..3 {
            for j in 0..3 {
                m[v[i]][v[j]] += g[j][0] * g[i][0] * int_eta2;
            }
        }
    }
    m
}

pub fn dense_eta_stiffness(mesh: &TriMesh) -> Dense {
    let mut m = zeros(mesh.num_vertices());
    for t in 0..mesh.num_triangles() {
        let v = mesh.triangles[t].v;
        let a = mesh.signed_area(t);
        let g = shape_gradients(mesh, t);
        for i in 0..3 {
            for j in 0..3 {
                m[v[i]][v[j]] += g[j][1] * g[i][1] * a;
            }
        }
    }
    m
}

pub fn dense_cross(mesh: &TriMesh) -> Dense {
    let mut m = zeros(mesh.num_vertices());
    for t in 0..mesh.num_triangles() {
        let v = mesh.triangles[t].v;
        let a = mesh.signed_area(t);
        let g = shape_gradients(mesh, t);
        for i in 0..3 {
            for j in 0..3 {
                m[v[i]][v[j]] += g[j][1] * g[i][0] * a;
            }
        }
    }
    m
}

/// Boundary mass weighted by eta n_y on the y-sides; with eta linear on
/// the edge, int_e eta phi_a phi_a = len (3 eta_a + eta_b) / 12 and
/// int_e eta phi_a phi_b = len (eta_a + eta_b) / 12.
pub fn dense_boundary_eta_ny(mesh: &TriMesh) -> Dense {
    let mut m = zeros(mesh.num_vertices());
    let mid_y = 0.5 * (mesh.rect.y_min + mesh.rect.y_max);
    for e in &mesh.boundary {
        if e.tag == BoundaryTag::Characteristic {
            continue;
        }
        let (a, b) = (mesh.vertices[e.v[0]], mesh.vertices[e.v[1]]);
        let ny = if 0.5 * (a[0] + b[0]) > mid_y { 1.0 } else { -1.0 };
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let (ea, eb) = (a[1], b[1]);
        let local = [
            [(3.0 * ea + eb) / 12.0, (ea + eb) / 12.0],
            [(ea + eb) / 12.0, (ea + 3.0 * eb) / 12.0],
        ];
        for i in 0..2 {
            for j in 0..2 {
                m[e.v[i]][e.v[j]] += ny * len * local[i][j];
            }
        }
    }
    m
}

pub fn add_scaled_dense(a: &Dense, b: &Dense, beta: f64) -> Dense {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + beta * y).collect())
        .collect()
}

pub fn transpose_dense(a: &Dense) -> Dense {
    let n = a.len();
    let mut t = zeros(n);
    for (i, row) in a.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            t[j][i] = v;
        }
    }
    t
}

pub fn to_nalgebra(a: &Dense) -> nalgebra::DMatrix<f64> {
    let n = a.len();
    nalgebra::DMatrix::from_fn(n, n, |i, j| a[i][j])
}

/// Explicit dense Kronecker product, the oracle for the matrix-free apply.
pub fn kron_dense(a: &nalgebra::DMatrix<f64>, b: &nalgebra::DMatrix<f64>) -> nalgebra::DMatrix<f64> {
    a.kronecker(b)
}
