//! Run artifacts: L2 norms and errors, convergence tables, flat run
//! manifests, and nodal field dumps. All text output is deterministic so
//! identical runs produce identical bytes.

use crate::error::Result;
use crate::mesh::TriMesh;
use crate::quadrature::{integrate_triangle, TriRule};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// Writes through a sibling temp file and renames, so readers never see a
/// half-written artifact.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, content)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// L2 norm of the P1 field `values` over the mesh. The integrand is
/// quadratic, so any rule of degree >= 2 is exact.
pub fn field_l2_norm(mesh: &TriMesh, values: &[f64]) -> f64 {
    let rule = crate::quadrature::tri_degree_2();
    let mut acc = 0.0;
    for t in 0..mesh.num_triangles() {
        let tri = &mesh.triangles[t];
        let c = mesh.triangle_coords(t);
        acc += integrate_triangle(rule, c, |_, _, l| {
            let u = l[0] * values[tri.v[0]] + l[1] * values[tri.v[1]] + l[2] * values[tri.v[2]];
            u * u
        });
    }
    acc.sqrt()
}

/// L2 distance between the P1 field and a reference function, using the
/// given quadrature rule on each triangle.
pub fn l2_error(
    mesh: &TriMesh,
    values: &[f64],
    rule: &TriRule,
    reference: &dyn Fn(f64, f64) -> f64,
) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.num_triangles() {
        let tri = &mesh.triangles[t];
        let c = mesh.triangle_coords(t);
        acc += integrate_triangle(rule, c, |y, eta, l| {
            let u = l[0] * values[tri.v[0]] + l[1] * values[tri.v[1]] + l[2] * values[tri.v[2]];
            let d = u - reference(y, eta);
            d * d
        });
    }
    acc.sqrt()
}

/// Weighted inner product (u_h, w f) of a P1 field with a reference
/// function (weight w = 1 for the plain product).
pub fn field_function_inner(
    mesh: &TriMesh,
    values: &[f64],
    rule: &TriRule,
    reference: &dyn Fn(f64, f64) -> f64,
) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.num_triangles() {
        let tri = &mesh.triangles[t];
        let c = mesh.triangle_coords(t);
        acc += integrate_triangle(rule, c, |y, eta, l| {
            let u = l[0] * values[tri.v[0]] + l[1] * values[tri.v[1]] + l[2] * values[tri.v[2]];
            u * reference(y, eta)
        });
    }
    acc
}

/// One row of an adaptive convergence history.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceRow {
    pub level: usize,
    pub elements: usize,
    pub vertices: usize,
    /// Unconstrained (free) vertices.
    pub dof: usize,
    pub error: f64,
}

/// CSV with header `n,elements,vertices,dof,e_n,ratio`; the ratio column
/// holds e_{n-1}/e_n to two decimals and is empty on the first row.
pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from("n,elements,vertices,dof,e_n,ratio\n");
    for (i, r) in rows.iter().enumerate() {
        let ratio = if i == 0 {
            String::new()
        } else {
            format!("{:.2}", rows[i - 1].error / r.error)
        };
        writeln!(
            s,
            "{},{},{},{},{:.3e},{}",
            r.level, r.elements, r.vertices, r.dof, r.error, ratio
        )
        .unwrap();
    }
    s
}

/// Flat `key=value` manifest describing one run, keys sorted.
#[derive(Debug, Default, Clone)]
pub struct RunManifest {
    entries: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl std::fmt::Display) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            writeln!(s, "{k}={v}").unwrap();
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_text())
    }
}

/// Nodal field dump: one `y eta value` line per vertex, full-precision
/// floats.
pub fn dump_field(mesh: &TriMesh, values: &[f64]) -> String {
    let mut s = String::new();
    for (v, val) in mesh.vertices.iter().zip(values) {
        writeln!(s, "{} {} {}", v[0], v[1], val).unwrap();
    }
    s
}
