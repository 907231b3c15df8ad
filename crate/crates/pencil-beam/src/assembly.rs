//! P1 finite element assembly on the (y, eta) cross-section.
//!
//! With u(x) = sum_j U_j(x) phi_j, the marching system reads
//!
//! ```text
//! B dU/dx + A U = 0
//! A = C + delta D + (sigma/2) S [+ delta sigma cross terms]
//! B = M + delta C^T
//! ```
//!
//! where delta = 0 recovers the standard Galerkin scheme. Matrix
//! convention: rows are test functions, columns trial functions.

use crate::error::Result;
use crate::mesh::{BoundaryTag, TriMesh};
use crate::quadrature::{integrate_edge, integrate_triangle, tri_degree_4};
use crate::sparse::SparseMatrix;

/// Constant P1 shape gradients [d/dy, d/deta] on triangle `t`.
pub fn shape_gradients(mesh: &TriMesh, t: usize) -> [[f64; 2]; 3] {
    let c = mesh.triangle_coords(t);
    let two_a = (c[1][0] - c[0][0]) * (c[2][1] - c[0][1])
        - (c[2][0] - c[0][0]) * (c[1][1] - c[0][1]);
    [
        [(c[1][1] - c[2][1]) / two_a, (c[2][0] - c[1][0]) / two_a],
        [(c[2][1] - c[0][1]) / two_a, (c[0][0] - c[2][0]) / two_a],
        [(c[0][1] - c[1][1]) / two_a, (c[1][0] - c[0][0]) / two_a],
    ]
}

fn assemble<F>(mesh: &TriMesh, mut local: F) -> SparseMatrix
where
    F: FnMut(usize) -> [[f64; 3]; 3],
{
    let n = mesh.num_vertices();
    let mut trips = Vec::with_capacity(9 * mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let el = local(t);
        let v = mesh.triangles[t].v;
        for (i, row) in el.iter().enumerate() {
            for (j, &val) in row.iter().enumerate() {
                trips.push((v[i], v[j], val));
            }
        }
    }
    SparseMatrix::from_triplets(n, n, &trips).expect("element triplets in range")
}

/// M_ij = int phi_j phi_i.
pub fn mass_matrix(mesh: &TriMesh) -> SparseMatrix {
    let rule = tri_degree_4();
    assemble(mesh, |t| {
        let c = mesh.triangle_coords(t);
        let mut el = [[0.0; 3]; 3];
        for (i, row) in el.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = integrate_triangle(rule, c, |_, _, l| l[i] * l[j]);
            }
        }
        el
    })
}

/// C_ij = int eta (dphi_j/dy) phi_i: transport in y at speed eta.
pub fn convection_matrix(mesh: &TriMesh) -> SparseMatrix {
    convection_matrix_with_weight(mesh, &|_, eta| eta)
}

/// int w(y, eta) (dphi_j/dy) phi_i for an arbitrary weight.
pub fn convection_matrix_with_weight(
    mesh: &TriMesh,
    w: &dyn Fn(f64, f64) -> f64,
) -> SparseMatrix {
    let rule = tri_degree_4();
    assemble(mesh, |t| {
        let c = mesh.triangle_coords(t);
        let g = shape_gradients(mesh, t);
        let mut el = [[0.0; 3]; 3];
        for (i, row) in el.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = g[j][0] * integrate_triangle(rule, c, |y, eta, l| w(y, eta) * l[i]);
            }
        }
        el
    })
}

/// D_ij = int eta^2 (dphi_j/dy)(dphi_i/dy): streamline diffusion along y.
pub fn streamline_matrix(mesh: &TriMesh) -> SparseMatrix {
    let rule = tri_degree_4();
    assemble(mesh, |t| {
        let c = mesh.triangle_coords(t);
        let g = shape_gradients(mesh, t);
        let eta2 = integrate_triangle(rule, c, |_, eta, _| eta * eta);
        let mut el = [[0.0; 3]; 3];
        for (i, row) in el.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = g[j][0] * g[i][0] * eta2;
            }
        }
        el
    })
}

/// S_ij = int (dphi_j/deta)(dphi_i/deta): angular diffusion stiffness.
pub fn eta_stiffness_matrix(mesh: &TriMesh) -> SparseMatrix {
    assemble(mesh, |t| {
        let area = mesh.signed_area(t);
        let g = shape_gradients(mesh, t);
        let mut el = [[0.0; 3]; 3];
        for (i, row) in el.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = g[j][1] * g[i][1] * area;
            }
        }
        el
    })
}

/// X_ij = int (dphi_j/deta)(dphi_i/dy): the delta*sigma volume coupling.
pub fn cross_matrix(mesh: &TriMesh) -> SparseMatrix {
    assemble(mesh, |t| {
        let area = mesh.signed_area(t);
        let g = shape_gradients(mesh, t);
        let mut el = [[0.0; 3]; 3];
        for (i, row) in el.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = g[j][1] * g[i][0] * area;
            }
        }
        el
    })
}

/// Boundary mass weighted by eta n_y: int_{dOmega} eta n_y phi_j phi_i.
/// Only the y-sides contribute (n_y = 0 on eta-sides). By integration by
/// parts, C + C^T equals this matrix exactly.
pub fn boundary_mass_eta_ny(mesh: &TriMesh) -> SparseMatrix {
    let n = mesh.num_vertices();
    let mut trips = Vec::new();
    let mid_y = 0.5 * (mesh.rect.y_min + mesh.rect.y_max);
    for e in &mesh.boundary {
        if e.tag == BoundaryTag::Characteristic {
            continue;
        }
        let (a, b) = (mesh.vertices[e.v[0]], mesh.vertices[e.v[1]]);
        let ny = if 0.5 * (a[0] + b[0]) > mid_y { 1.0 } else { -1.0 };
        let len2 = (b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2);
        for (i, vi) in e.v.iter().enumerate() {
            for (j, vj) in e.v.iter().enumerate() {
                let val = integrate_edge(a, b, |y, eta| {
                    // linear edge shape functions via projection onto [a, b]
                    let t = ((y - a[0]) * (b[0] - a[0]) + (eta - a[1]) * (b[1] - a[1])) / len2;
                    let phi = [1.0 - t, t];
                    eta * phi[i] * phi[j]
                });
                trips.push((*vi, *vj, ny * val));
            }
        }
    }
    SparseMatrix::from_triplets(n, n, &trips).expect("edge triplets in range")
}

/// Line coupling on the characteristic sides:
/// sum over eta = +-eta0 edges of (n_eta eta) int (dphi_j/deta)(dphi_i/dy) dl,
/// gradients taken from the owning triangle. Appears (scaled by
/// -delta sigma / 2) when the delta*sigma terms are kept.
pub fn characteristic_cross_line(mesh: &TriMesh) -> SparseMatrix {
    use std::collections::HashMap;
    let n = mesh.num_vertices();
    let mut owner: HashMap<(usize, usize), usize> = HashMap::new();
    for t in 0..mesh.num_triangles() {
        let v = mesh.triangles[t].v;
        for k in 0..3 {
            let (a, b) = (v[k], v[(k + 1) % 3]);
            owner.insert((a.min(b), a.max(b)), t);
        }
    }
    let mid_eta = 0.5 * (mesh.rect.eta_min + mesh.rect.eta_max);
    let mut trips = Vec::new();
    for e in &mesh.boundary {
        if e.tag != BoundaryTag::Characteristic {
            continue;
        }
        let t = owner[&(e.v[0].min(e.v[1]), e.v[0].max(e.v[1]))];
        let (a, b) = (mesh.vertices[e.v[0]], mesh.vertices[e.v[1]]);
        let eta_edge = 0.5 * (a[1] + b[1]);
        // n_eta * eta = |eta0| on both characteristic sides
        let n_eta = if eta_edge > mid_eta { 1.0 } else { -1.0 };
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let g = shape_gradients(mesh, t);
        let v = mesh.triangles[t].v;
        for i in 0..3 {
            for j in 0..3 {
                trips.push((v[i], v[j], n_eta * eta_edge * len * g[j][1] * g[i][0]));
            }
        }
    }
    SparseMatrix::from_triplets(n, n, &trips).expect("edge triplets in range")
}

#[derive(Debug, Clone)]
pub struct SystemMatrices {
    /// Spatial operator: C + delta D + (sigma/2) S + optional cross terms.
    pub a: SparseMatrix,
    /// Marching mass: M + delta C^T.
    pub b: SparseMatrix,
    pub mass: SparseMatrix,
    pub eta_stiffness: SparseMatrix,
}

/// Builds the marching pair (A, B). `delta = 0` gives standard Galerkin.
/// `drop_delta_sigma` omits the delta*sigma coupling (volume cross matrix
/// and characteristic line term), the usual simplification when
/// delta*sigma is far below the transport scales.
pub fn assemble_system(
    mesh: &TriMesh,
    sigma_tr: f64,
    delta: f64,
    drop_delta_sigma: bool,
) -> Result<SystemMatrices> {
    if sigma_tr < 0.0 || !sigma_tr.is_finite() {
        return Err(crate::Error::InvalidArgument(format!(
            "sigma_tr {sigma_tr} must be finite and >= 0"
        )));
    }
    if delta < 0.0 || !delta.is_finite() {
        return Err(crate::Error::InvalidArgument(format!(
            "delta {delta} must be finite and >= 0"
        )));
    }
    let mass = mass_matrix(mesh);
    let c = convection_matrix(mesh);
    let s = eta_stiffness_matrix(mesh);

    let mut a = c.add_scaled(1.0, &s, 0.5 * sigma_tr);
    if delta > 0.0 {
        let d = streamline_matrix(mesh);
        a = a.add_scaled(1.0, &d, delta);
        if !drop_delta_sigma && sigma_tr > 0.0 {
            let x = cross_matrix(mesh);
            let line = characteristic_cross_line(mesh);
            a = a.add_scaled(1.0, &x, 0.5 * delta * sigma_tr);
            a = a.add_scaled(1.0, &line, -0.5 * delta * sigma_tr);
        }
    }
    let b = if delta > 0.0 {
        mass.add_scaled(1.0, &c.transpose(), delta)
    } else {
        mass.clone()
    };
    Ok(SystemMatrices { a, b, mass, eta_stiffness: s })
}
