//! Backward-Euler marching of the beam equation through the slab.
//!
//! Each step solves `(B + kA) u_next = B u` with the rows of inflow
//! vertices replaced by `u_next = 0`, or, for the characteristic scheme,
//! pulls values back along `dy/dx = eta` and projects through the angular
//! diffusion.

use crate::assembly::{assemble_system, boundary_mass_eta_ny, SystemMatrices};
use crate::error::{Error, Result};
use crate::mesh::{Locator, TriMesh};
use crate::solver::{bicgstab, BandedLu, DIRECT_SOLVER_MAX_DOF};
use crate::sparse::{dot, norm2, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    StandardGalerkin,
    SemiStreamlineDiffusion,
    CharacteristicStreamlineDiffusion,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::StandardGalerkin => "sg",
            Scheme::SemiStreamlineDiffusion => "ssd",
            Scheme::CharacteristicStreamlineDiffusion => "csd",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sg" => Ok(Scheme::StandardGalerkin),
            "ssd" => Ok(Scheme::SemiStreamlineDiffusion),
            "csd" => Ok(Scheme::CharacteristicStreamlineDiffusion),
            other => Err(Error::InvalidArgument(format!(
                "unknown scheme '{other}' (expected sg, ssd, or csd)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MarchConfig {
    pub scheme: Scheme,
    pub sigma_tr: f64,
    /// Streamline parameter; only the semi-streamline scheme reads it.
    pub delta: f64,
    /// Requested step; the actual step divides `length` exactly.
    pub step: f64,
    pub length: f64,
    pub solver_tol: f64,
    pub drop_delta_sigma: bool,
}

impl MarchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_tr >= 0.0 && self.sigma_tr.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sigma_tr {} must be finite and >= 0",
                self.sigma_tr
            )));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "delta {} must be finite and >= 0",
                self.delta
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

/// A factorized (or, past the direct-solver size cap, iterated) linear
/// system kept across many solves with the same matrix.
pub struct LinearSolver {
    matrix: SparseMatrix,
    lu: Option<BandedLu>,
    tol: f64,
}

impl LinearSolver {
    pub fn new(matrix: SparseMatrix, tol: f64) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "linear solver needs a square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if !(tol > 0.0 && tol <= 1e-6) {
            return Err(Error::InvalidArgument(format!(
                "solver tolerance {tol} outside (0, 1e-6]"
            )));
        }
        let lu = if matrix.nrows() <= DIRECT_SOLVER_MAX_DOF {
            Some(BandedLu::new(&matrix)?)
        } else {
            None
        };
        Ok(Self { matrix, lu, tol })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let x = match &self.lu {
            Some(lu) => lu.solve(rhs),
            None => bicgstab(&self.matrix, rhs, self.tol * 0.01, 20_000)?.0,
        };
        let bnorm = norm2(rhs);
        if bnorm > 0.0 {
            let ax = self.matrix.matvec_alloc(&x);
            let r: Vec<f64> = ax.iter().zip(rhs).map(|(p, q)| p - q).collect();
            let rel = norm2(&r) / bnorm;
            if !(rel <= self.tol) {
                return Err(Error::SolverFailure { residual: rel, iterations: 0 });
            }
        }
        Ok(x)
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }
}

/// Energy bookkeeping along the march. The discrete identity for the
/// standard scheme telescopes to
/// `|u_N|_M^2 + sum_m k [sigma u_m' S u_m + u_m' G u_m] <= |u_0|_M^2`
/// with G the signed outflow boundary form; the streamline variant obeys
/// the same bound up to O(delta) and is checked with slack.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    /// sqrt(u' M u) at every level, index 0 = entry data.
    pub mass_norms: Vec<f64>,
    /// sqrt(u' M u + (delta/2) sigma u' S u) at every level; equals
    /// `mass_norms` whenever the scheme carries no streamline term.
    pub composite_norms: Vec<f64>,
    /// Accumulated angular dissipation `sum_m k sigma u_m' S u_m`.
    pub dissipation: f64,
    /// Accumulated boundary flux `sum_m k u_m' G u_m` (signed; positive
    /// when mass leaves through outflow sides).
    pub boundary_flux: f64,
}

impl StabilityReport {
    /// Scheme-adapted diagnostic norm: accumulated angular dissipation
    /// plus outflow flux. The inflow rows are zero, so the signed
    /// boundary form reduces to the outflow part.
    pub fn triple_norm(&self) -> f64 {
        (self.dissipation + self.boundary_flux).max(0.0).sqrt()
    }

    /// Mass norms never grow by more than the relative slack.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.mass_norms
            .windows(2)
            .all(|w| w[1] <= w[0] * (1.0 + slack))
    }

    /// Composite (streamline-weighted) norms never grow by more than the
    /// relative slack.
    pub fn composite_monotone(&self, slack: f64) -> bool {
        self.composite_norms
            .windows(2)
            .all(|w| w[1] <= w[0] * (1.0 + slack))
    }

    /// Telescoped energy stays below the entry energy, with relative
    /// slack: `|u_N|^2 + dissipation + flux <= (1+slack) |u_0|^2`.
    pub fn energy_bounded(&self, slack: f64) -> bool {
        let last = self.mass_norms.last().copied().unwrap_or(0.0);
        let e0 = self.mass_norms.first().copied().unwrap_or(0.0).powi(2);
        last * last + self.dissipation + self.boundary_flux <= e0 * (1.0 + slack)
    }
}

#[derive(Debug, Clone)]
pub struct MarchResult {
    pub final_values: Vec<f64>,
    pub stability: StabilityReport,
}

pub struct Marcher<'m> {
    mesh: &'m TriMesh,
    config: MarchConfig,
    system: SystemMatrices,
    boundary_form: SparseMatrix,
    constrained: Vec<usize>,
    /// B with constrained rows zeroed; right-hand-side operator.
    b_constrained: Option<SparseMatrix>,
    solver: Option<LinearSolver>,
    /// Characteristic feet, one `(triangle, barycentric)` pair per vertex.
    feet: Vec<(usize, [f64; 3])>,
    delta_eff: f64,
    k: f64,
    n_steps: usize,
}

impl<'m> Marcher<'m> {
    pub fn new(mesh: &'m TriMesh, config: MarchConfig) -> Result<Self> {
        config.validate()?;
        let k = config.effective_step();
        let n_steps = config.n_steps();
        let delta = match config.scheme {
            Scheme::SemiStreamlineDiffusion => config.delta,
            _ => 0.0,
        };
        let system = assemble_system(mesh, config.sigma_tr, delta, config.drop_delta_sigma)?;
        let boundary_form = boundary_mass_eta_ny(mesh);

        let mut constrained = Vec::new();
        let mut b_constrained = None;
        let mut feet = Vec::new();
        let solver = match config.scheme {
            Scheme::StandardGalerkin | Scheme::SemiStreamlineDiffusion => {
                constrained = mesh.inflow_vertices();
                let mut a = system.a.clone();
                let mut b = system.b.clone();
                a.zero_rows(&constrained);
                b.zero_rows(&constrained);
                let kmat = b.add_scaled(1.0, &a, k).set_unit_diagonal(&constrained);
                b_constrained = Some(b);
                Some(LinearSolver::new(kmat, config.solver_tol)?)
            }
            Scheme::CharacteristicStreamlineDiffusion => {
                let locator = Locator::new(mesh);
                feet = mesh
                    .vertices
                    .iter()
                    .map(|&[y, eta]| locator.locate(y - k * eta, eta))
                    .collect::<Result<Vec<_>>>()?;
                if config.sigma_tr > 0.0 {
                    let m = system
                        .mass
                        .add_scaled(1.0, &system.eta_stiffness, 0.5 * k * config.sigma_tr);
                    Some(LinearSolver::new(m, config.solver_tol)?)
                } else {
                    None
                }
            }
        };
        Ok(Self {
            mesh,
            config,
            system,
            boundary_form,
            constrained,
            b_constrained,
            solver,
            feet,
            delta_eff: delta,
            k,
            n_steps,
        })
    }

    pub fn step_size(&self) -> f64 {
        self.k
    }

    pub fn step_count(&self) -> usize {
        self.n_steps
    }

    pub fn system(&self) -> &SystemMatrices {
        &self.system
    }

    pub fn constrained(&self) -> &[usize] {
        &self.constrained
    }

    pub fn march(&self, entry: &[f64]) -> Result<MarchResult> {
        self.march_with(entry, |_, _| {})
    }

    /// Marches `n_steps` levels, calling `observe(level, values)` at the
    /// (boundary-corrected) entry level 0 and after every step.
    pub fn march_with(
        &self,
        entry: &[f64],
        mut observe: impl FnMut(usize, &[f64]),
    ) -> Result<MarchResult> {
        let n = self.mesh.num_vertices();
        if entry.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "entry data has {} values for {} vertices",
                entry.len(),
                n
            )));
        }
        let mut u = entry.to_vec();
        for &c in &self.constrained {
            u[c] = 0.0;
        }
        let mut stability = StabilityReport {
            mass_norms: vec![self.mass_norm(&u)],
            composite_norms: vec![self.composite_norm(&u)],
            dissipation: 0.0,
            boundary_flux: 0.0,
        };
        observe(0, &u);
        for level in 1..=self.n_steps {
            u = match self.config.scheme {
                Scheme::StandardGalerkin | Scheme::SemiStreamlineDiffusion => {
                    let rhs = self
                        .b_constrained
                        .as_ref()
                        .expect("marching matrix present")
                        .matvec_alloc(&u);
                    self.solver
                        .as_ref()
                        .expect("marching solver present")
                        .solve(&rhs)?
                }
                Scheme::CharacteristicStreamlineDiffusion => self.csd_step(&u)?,
            };
            stability.mass_norms.push(self.mass_norm(&u));
            stability.composite_norms.push(self.composite_norm(&u));
            stability.dissipation +=
                self.k * self.config.sigma_tr * self.quadratic(&self.system.eta_stiffness, &u);
            stability.boundary_flux += self.k * self.quadratic(&self.boundary_form, &u);
            observe(level, &u);
        }
        Ok(MarchResult { final_values: u, stability })
    }

    /// One characteristic step: pull back along `y - k eta`, then damp
    /// through `(M + k sigma/2 S) u_next = M u_tilde`. Feet outside the
    /// rectangle were clamped when located.
    fn csd_step(&self, u: &[f64]) -> Result<Vec<f64>> {
        let tilde: Vec<f64> = self
            .feet
            .iter()
            .map(|&(t, lambda)| {
                let tri = self.mesh.triangles[t].v;
                (0..3).map(|j| lambda[j] * u[tri[j]]).sum()
            })
            .collect();
        match &self.solver {
            None => Ok(tilde),
            Some(solver) => {
                let rhs = self.system.mass.matvec_alloc(&tilde);
                solver.solve(&rhs)
            }
        }
    }

    fn mass_norm(&self, u: &[f64]) -> f64 {
        self.quadratic(&self.system.mass, u).max(0.0).sqrt()
    }

    fn composite_norm(&self, u: &[f64]) -> f64 {
        let extra = 0.5 * self.delta_eff * self.config.sigma_tr;
        let mut e = self.quadratic(&self.system.mass, u);
        if extra > 0.0 {
            e += extra * self.quadratic(&self.system.eta_stiffness, u);
        }
        e.max(0.0).sqrt()
    }

    fn quadratic(&self, m: &SparseMatrix, u: &[f64]) -> f64 {
        dot(&m.matvec_alloc(u), u)
    }
}
