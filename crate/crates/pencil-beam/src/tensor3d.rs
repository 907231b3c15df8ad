//! Desk-scale 3D phase-space stepper: the transverse plane (y, z) and the
//! velocity plane (eta, xi) each carry a P1 triangulation, the full
//! operator is a sum of Kronecker products of factor matrices, and the
//! march in x is trapezoidal:
//!
//! `[M (x) Mv + (k/2)(Cy (x) Mt_eta + Cz (x) Mt_xi) + (sigma k/4)(M (x) Sv)] U+
//!  = [mirror with flipped signs] U`
//!
//! Flat vectors run velocity-fastest: `u[s * nv + v]`. The velocity mesh
//! uses the sine-spaced grid, whose cells collapse towards the corners of
//! the square; it deliberately skips the minimum-angle audit that the
//! transverse solver meshes must pass.

use crate::assembly::{mass_matrix, shape_gradients};
use crate::error::{Error, Result};
use crate::mesh::{Rect, TriMesh};
use crate::solver::bicgstab;
use crate::sparse::{dot, norm2, LinOp, SparseMatrix};

/// Largest product-space dimension accepted: past this the flat vectors
/// and factor solves stop being interactive on a desk machine.
pub const DESK_CAP: usize = 50_000;

/// Sine-spaced velocity coordinates `sin(i pi / 2n)` for `i = -n..=n`,
/// clustered towards the endpoints. Mirrored so the grid negates exactly;
/// endpoints pinned to exactly -1 and 1.
pub fn velocity_grid(n: usize) -> Vec<f64> {
    assert!(n >= 1, "velocity grid needs n >= 1");
    let mut g = vec![0.0; 2 * n + 1];
    for i in 1..=n {
        let s = if i == n {
            1.0
        } else {
            (i as f64 * std::f64::consts::FRAC_PI_2 / n as f64).sin()
        };
        g[n + i] = s;
        g[n - i] = -s;
    }
    g
}

/// `sum_e area * (grad_j . e_dir) * phi_i` — the spatial convection
/// factor, integrated in closed form (the gradient is constant and
/// `int phi_i = area/3`).
pub fn directional_convection(mesh: &TriMesh, dir: usize) -> SparseMatrix {
    assert!(dir < 2);
    let n = mesh.num_vertices();
    let mut trips = Vec::with_capacity(9 * mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangles[t].v;
        let g = shape_gradients(mesh, t);
        let area = mesh.signed_area(t);
        for i in 0..3 {
            for j in 0..3 {
                trips.push((tri[i], tri[j], g[j][dir] * area / 3.0));
            }
        }
    }
    SparseMatrix::from_triplets(n, n, &trips).expect("indices in range")
}

/// Mass matrix weighted by one coordinate, `int c phi_j phi_i`, via the
/// exact barycentric moments `int l^3 = A/10`, `int l^2 l = A/30`,
/// `int l l l = A/60`.
pub fn coordinate_weighted_mass(mesh: &TriMesh, coord: usize) -> SparseMatrix {
    assert!(coord < 2);
    let n = mesh.num_vertices();
    let mut trips = Vec::with_capacity(9 * mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangles[t].v;
        let area = mesh.signed_area(t);
        let w = [
            mesh.vertices[tri[0]][coord],
            mesh.vertices[tri[1]][coord],
            mesh.vertices[tri[2]][coord],
        ];
        for i in 0..3 {
            for j in 0..3 {
                let mut v = 0.0;
                for k in 0..3 {
                    let moment = if i == j && j == k {
                        1.0 / 10.0
                    } else if i == j || j == k || i == k {
                        1.0 / 30.0
                    } else {
                        1.0 / 60.0
                    };
                    v += w[k] * moment;
                }
                trips.push((tri[i], tri[j], v * area));
            }
        }
    }
    SparseMatrix::from_triplets(n, n, &trips).expect("indices in range")
}

/// Full gradient stiffness `int grad phi_j . grad phi_i` over both
/// coordinates of the mesh plane.
pub fn full_stiffness(mesh: &TriMesh) -> SparseMatrix {
    let n = mesh.num_vertices();
    let mut trips = Vec::with_capacity(9 * mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangles[t].v;
        let g = shape_gradients(mesh, t);
        let area = mesh.signed_area(t);
        for i in 0..3 {
            for j in 0..3 {
                trips.push((tri[i], tri[j], area * (g[i][0] * g[j][0] + g[i][1] * g[j][1])));
            }
        }
    }
    SparseMatrix::from_triplets(n, n, &trips).expect("indices in range")
}

/// One `scale * (spatial (x) velocity)` Kronecker factor pair.
pub struct KronTerm {
    pub scale: f64,
    pub spatial: SparseMatrix,
    pub velocity: SparseMatrix,
}

/// Matrix-free sum of Kronecker products over a fixed product space.
pub struct KronSum {
    terms: Vec<KronTerm>,
    ns: usize,
    nv: usize,
}

impl KronSum {
    pub fn new(terms: Vec<KronTerm>) -> Result<Self> {
        let first = terms.first().ok_or_else(|| {
            Error::InvalidArgument("Kronecker sum needs at least one term".into())
        })?;
        let (ns, nv) = (first.spatial.nrows(), first.velocity.nrows());
        for t in &terms {
            if t.spatial.nrows() != ns
                || t.spatial.ncols() != ns
                || t.velocity.nrows() != nv
                || t.velocity.ncols() != nv
            {
                return Err(Error::DimensionMismatch(
                    "Kronecker factors must be square and share shapes across terms".into(),
                ));
            }
        }
        Ok(Self { terms, ns, nv })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.ns, self.nv)
    }

    pub fn apply_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.ns * self.nv];
        self.apply(x, &mut y);
        y
    }
}

impl LinOp for KronSum {
    fn nrows(&self) -> usize {
        self.ns * self.nv
    }

    fn ncols(&self) -> usize {
        self.ns * self.nv
    }

    /// `y = sum_t scale_t (A_t (x) B_t) x`: apply B blockwise along the
    /// fast velocity index, then combine blocks through the rows of A.
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (ns, nv) = (self.ns, self.nv);
        assert_eq!(x.len(), ns * nv, "operand length");
        assert_eq!(y.len(), ns * nv, "output length");
        y.fill(0.0);
        let mut bx = vec![0.0; ns * nv];
        for term in &self.terms {
            for js in 0..ns {
                term.velocity
                    .matvec(&x[js * nv..(js + 1) * nv], &mut bx[js * nv..(js + 1) * nv]);
            }
            for is in 0..ns {
                let (cols, vals) = term.spatial.row(is);
                let out = &mut y[is * nv..(is + 1) * nv];
                for (js, a) in cols.iter().zip(vals) {
                    let c = term.scale * a;
                    let src = &bx[js * nv..(js + 1) * nv];
                    for v in 0..nv {
                        out[v] += c * src[v];
                    }
                }
            }
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.ns * self.nv];
        for term in &self.terms {
            let ds: Vec<f64> = (0..self.ns).map(|i| term.spatial.get(i, i)).collect();
            let dv: Vec<f64> = (0..self.nv).map(|i| term.velocity.get(i, i)).collect();
            for is in 0..self.ns {
                for iv in 0..self.nv {
                    d[is * self.nv + iv] += term.scale * ds[is] * dv[iv];
                }
            }
        }
        d
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Tensor3dConfig {
    /// Element-count request for the transverse (y, z) mesh.
    pub spatial_elements: usize,
    /// Half-resolution of the sine velocity grid; (2n+1)^2 velocity
    /// vertices.
    pub velocity_half_resolution: usize,
    pub sigma_tr: f64,
    pub step: f64,
    pub length: f64,
    pub solver_tol: f64,
}

impl Tensor3dConfig {
    pub fn validate(&self) -> Result<()> {
        if self.spatial_elements < 2 {
            return Err(Error::InvalidArgument(
                "spatial mesh needs at least 2 elements".into(),
            ));
        }
        if self.velocity_half_resolution < 1 {
            return Err(Error::InvalidArgument(
                "velocity grid needs half-resolution >= 1".into(),
            ));
        }
        if !(self.sigma_tr >= 0.0 && self.sigma_tr.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sigma_tr {} must be finite and >= 0",
                self.sigma_tr
            )));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "slab length {} must be finite and > 0",
                self.length
            )));
        }
        if !(self.step > 0.0 && self.step <= self.length) {
            return Err(Error::InvalidArgument(format!(
                "step {} must lie in (0, {}]",
                self.step, self.length
            )));
        }
        if !(self.solver_tol > 0.0 && self.solver_tol <= 1e-6) {
            return Err(Error::InvalidArgument(format!(
                "solver tolerance {} outside (0, 1e-6]",
                self.solver_tol
            )));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        ((self.length / self.step).round() as usize).max(1)
    }

    pub fn effective_step(&self) -> f64 {
        self.length / self.n_steps() as f64
    }
}

pub struct Tensor3dSystem {
    pub spatial: TriMesh,
    pub velocity: TriMesh,
    pub lhs: KronSum,
    pub rhs: KronSum,
    /// `1' (M (x) Mv)` as a flat vector; total weighted mass is its dot
    /// product with the state.
    pub mass_vector: Vec<f64>,
    /// `1' [(k/2)(Cy (x) Mt_eta + Cz (x) Mt_xi) + (sigma k/4)(M (x) Sv)]`:
    /// the exact algebraic mass-drift functional of one trapezoidal step.
    pub flux_vector: Vec<f64>,
    pub k: f64,
    pub n_steps: usize,
    pub solver_tol: f64,
}

fn column_sums(m: &SparseMatrix) -> Vec<f64> {
    let mut s = vec![0.0; m.ncols()];
    for r in 0..m.nrows() {
        let (cols, vals) = m.row(r);
        for (c, v) in cols.iter().zip(vals) {
            s[*c] += v;
        }
    }
    s
}

fn outer_into(acc: &mut [f64], scale: f64, a: &[f64], b: &[f64]) {
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            acc[i * b.len() + j] += scale * ai * bj;
        }
    }
}

pub fn build_system(cfg: &Tensor3dConfig) -> Result<Tensor3dSystem> {
    cfg.validate()?;
    let spatial = TriMesh::rectangle(Rect::new(-1.0, 1.0, -1.0, 1.0)?, cfg.spatial_elements)?;
    let g = velocity_grid(cfg.velocity_half_resolution);
    let velocity = TriMesh::from_tensor_grid(&g, &g)?;
    let (ns, nv) = (spatial.num_vertices(), velocity.num_vertices());
    if ns * nv > DESK_CAP {
        return Err(Error::InvalidArgument(format!(
            "product space {ns} x {nv} = {} exceeds the desk cap {DESK_CAP}",
            ns * nv
        )));
    }

    let m_s = mass_matrix(&spatial);
    let m_v = mass_matrix(&velocity);
    let c_y = directional_convection(&spatial, 0);
    let c_z = directional_convection(&spatial, 1);
    let mt_eta = coordinate_weighted_mass(&velocity, 0);
    let mt_xi = coordinate_weighted_mass(&velocity, 1);
    let s_v = full_stiffness(&velocity);

    let k = cfg.effective_step();
    let build = |sign: f64| -> Result<KronSum> {
        let mut terms = vec![
            KronTerm { scale: 1.0, spatial: m_s.clone(), velocity: m_v.clone() },
            KronTerm { scale: sign * 0.5 * k, spatial: c_y.clone(), velocity: mt_eta.clone() },
            KronTerm { scale: sign * 0.5 * k, spatial: c_z.clone(), velocity: mt_xi.clone() },
        ];
        if cfg.sigma_tr > 0.0 {
            terms.push(KronTerm {
                scale: sign * 0.25 * cfg.sigma_tr * k,
                spatial: m_s.clone(),
                velocity: s_v.clone(),
            });
        }
        KronSum::new(terms)
    };
    let lhs = build(1.0)?;
    let rhs = build(-1.0)?;

    let mut mass_vector = vec![0.0; ns * nv];
    outer_into(&mut mass_vector, 1.0, &column_sums(&m_s), &column_sums(&m_v));
    let mut flux_vector = vec![0.0; ns * nv];
    outer_into(&mut flux_vector, 0.5 * k, &column_sums(&c_y), &column_sums(&mt_eta));
    outer_into(&mut flux_vector, 0.5 * k, &column_sums(&c_z), &column_sums(&mt_xi));
    if cfg.sigma_tr > 0.0 {
        outer_into(
            &mut flux_vector,
            0.25 * cfg.sigma_tr * k,
            &column_sums(&m_s),
            &column_sums(&s_v),
        );
    }

    Ok(Tensor3dSystem {
        spatial,
        velocity,
        lhs,
        rhs,
        mass_vector,
        flux_vector,
        k,
        n_steps: cfg.n_steps(),
        solver_tol: cfg.solver_tol,
    })
}

/// Samples `f(y, z, eta, xi)` on the product grid, velocity-fastest.
pub fn sample_product(
    spatial: &TriMesh,
    velocity: &TriMesh,
    f: impl Fn(f64, f64, f64, f64) -> f64,
) -> Vec<f64> {
    let mut u = Vec::with_capacity(spatial.num_vertices() * velocity.num_vertices());
    for s in &spatial.vertices {
        for v in &velocity.vertices {
            u.push(f(s[0], s[1], v[0], v[1]));
        }
    }
    u
}

#[derive(Debug, Clone)]
pub struct Tensor3dRun {
    pub final_values: Vec<f64>,
    /// Total weighted mass per level, index 0 = entry.
    pub masses: Vec<f64>,
    /// Worst relative defect of the per-step algebraic mass identity.
    pub max_audit_defect: f64,
}

impl Tensor3dSystem {
    pub fn march(&self, entry: &[f64]) -> Result<Tensor3dRun> {
        let n = self.lhs.nrows();
        if entry.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "entry data has {} values for a {n}-dimensional product space",
                entry.len()
            )));
        }
        let audit_tol = (1e3 * self.solver_tol).max(1e-12);
        let mut u = entry.to_vec();
        let mut masses = vec![dot(&self.mass_vector, &u)];
        let mut max_defect = 0.0f64;
        for _ in 0..self.n_steps {
            let rhs = self.rhs.apply_alloc(&u);
            let next = bicgstab(&self.lhs, &rhs, self.solver_tol * 0.01, 20_000)?.0;
            let rnorm = norm2(&rhs);
            if rnorm > 0.0 {
                let back = self.lhs.apply_alloc(&next);
                let r: Vec<f64> = back.iter().zip(&rhs).map(|(a, b)| a - b).collect();
                let rel = norm2(&r) / rnorm;
                if !(rel <= self.solver_tol) {
                    return Err(Error::SolverFailure { residual: rel, iterations: 0 });
                }
            }
            // algebraic identity of the trapezoidal step: the new mass
            // differs from the old exactly by the flux functional of the
            // level average
            let m_new = dot(&self.mass_vector, &next);
            let m_old = *masses.last().expect("at least entry mass");
            let avg: Vec<f64> = u.iter().zip(&next).map(|(a, b)| a + b).collect();
            let predicted = -dot(&self.flux_vector, &avg);
            let scale = m_old.abs() + m_new.abs() + predicted.abs() + 1.0;
            let defect = ((m_new - m_old) - predicted).abs() / scale;
            if defect > audit_tol {
                return Err(Error::InvariantViolation(format!(
                    "mass audit defect {defect:.3e} exceeds {audit_tol:.3e}"
                )));
            }
            max_defect = max_defect.max(defect);
            masses.push(m_new);
            u = next;
        }
        Ok(Tensor3dRun { final_values: u, masses, max_audit_defect: max_defect })
    }
}
