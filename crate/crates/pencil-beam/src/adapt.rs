//! Adaptive refinement loop: march to the exit face, compare the exit
//! field with the closed-form Gaussian profile, mark every element whose
//! pointwise indicator reaches a fraction of the global maximum, refine
//! red-green, and stop once successive solutions agree in L2.

use crate::analytic::{exact_2d, exact_2d_l2_squared, InitialData};
use crate::error::{Error, Result};
use crate::mesh::{Locator, Rect, TriMesh};
use crate::quadrature::tri_degree_8;
use crate::report::{field_function_inner, field_l2_norm, l2_error, ConvergenceRow};
use crate::stepper::{MarchConfig, Marcher, StabilityReport};

#[derive(Debug, Clone, Copy)]
pub struct AdaptConfig {
    pub march: MarchConfig,
    pub initial: InitialData,
    pub domain: Rect,
    /// Marking threshold fraction, strictly inside (0, 1).
    pub gamma: f64,
    /// Stop once the L2 distance between successive exit fields drops
    /// below this; an infinite value requests a single solve.
    pub tol: f64,
    pub max_refinements: usize,
    /// Element-count request for the starting mesh.
    pub target_elements: usize,
    /// Aim the indicator at the best-scaled profile `c u` instead of the
    /// raw `u`: the smoothed entry data cannot match the exit amplitude,
    /// and without the fit the amplitude gap drowns the shape error.
    pub fit_amplitude: bool,
}

impl AdaptConfig {
    pub fn validate(&self) -> Result<()> {
        self.march.validate()?;
        self.initial.validate()?;
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "marking fraction {} outside (0, 1)",
                self.gamma
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "stopping tolerance {} must be positive",
                self.tol
            )));
        }
        if self.max_refinements < 1 {
            return Err(Error::InvalidArgument(
                "max_refinements must be at least 1".into(),
            ));
        }
        if self.target_elements < 2 {
            return Err(Error::InvalidArgument(format!(
                "target of {} elements cannot triangulate a rectangle",
                self.target_elements
            )));
        }
        Ok(())
    }
}

/// Per-element indicator: the largest pointwise deviation from `oracle`
/// over the three vertices and the barycenter.
pub fn error_indicator(
    mesh: &TriMesh,
    values: &[f64],
    oracle: &dyn Fn(f64, f64) -> f64,
) -> Vec<f64> {
    (0..mesh.num_triangles())
        .map(|t| {
            let tri = mesh.triangles[t].v;
            let mut worst = 0.0f64;
            let mut mean = 0.0;
            for &v in &tri {
                let [y, eta] = mesh.vertices[v];
                worst = worst.max((oracle(y, eta) - values[v]).abs());
                mean += values[v] / 3.0;
            }
            let [cy, ce] = mesh.barycenter(t);
            worst.max((oracle(cy, ce) - mean).abs())
        })
        .collect()
}

/// Elements whose indicator reaches `gamma` times the maximum. The
/// arg-max element is always included; all-zero indicators mark the full
/// set (every element attains 0 >= 0).
pub fn mark(indicators: &[f64], gamma: f64) -> Vec<usize> {
    let max = indicators.iter().fold(0.0f64, |a, &b| a.max(b));
    let cut = gamma * max;
    (0..indicators.len())
        .filter(|&i| indicators[i] >= cut)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Infinite tolerance: diagnostics-only single solve.
    SingleSolve,
    /// Successive exit fields agreed to the tolerance.
    Converged,
    /// Refinement budget exhausted.
    MaxRefinements,
}

/// One refinement level: the mesh, its exit field, and every measurement
/// taken on it.
#[derive(Debug, Clone)]
pub struct AdaptLevel {
    pub mesh: TriMesh,
    pub values: Vec<f64>,
    pub row: ConvergenceRow,
    /// Error against the best-scaled profile `c u`.
    pub fitted_error: f64,
    /// The least-squares scale `c = <u_h, u> / |u|^2`.
    pub amplitude: f64,
    /// L2 distance to the previous level's field, evaluated at this
    /// level's vertices. `None` on the first level.
    pub diff_from_previous: Option<f64>,
    pub stability: StabilityReport,
}

#[derive(Debug, Clone)]
pub struct AdaptOutcome {
    pub levels: Vec<AdaptLevel>,
    pub stop: StopReason,
}

impl AdaptOutcome {
    pub fn rows(&self) -> Vec<ConvergenceRow> {
        self.levels.iter().map(|l| l.row).collect()
    }

    pub fn final_level(&self) -> &AdaptLevel {
        self.levels.last().expect("at least one level")
    }
}

/// L2 distance between a field on `coarse` and a field on `fine`, where
/// `fine` was refined out of `coarse`: the coarse field is evaluated at
/// fine vertices (exact for nested piecewise linears) and the difference
/// is measured in the fine mesh's norm.
pub fn cross_mesh_l2(
    coarse: &TriMesh,
    coarse_values: &[f64],
    fine: &TriMesh,
    fine_values: &[f64],
) -> Result<f64> {
    let locator = Locator::new(coarse);
    let diff: Vec<f64> = fine
        .vertices
        .iter()
        .zip(fine_values)
        .map(|(&[y, eta], &v)| Ok(v - locator.eval(coarse_values, y, eta)?))
        .collect::<Result<_>>()?;
    Ok(field_l2_norm(fine, &diff))
}

pub fn run_adaptive(cfg: &AdaptConfig) -> Result<AdaptOutcome> {
    cfg.validate()?;
    let sigma = cfg.march.sigma_tr;
    let exit_x = cfg.march.length;
    let profile = move |y: f64, eta: f64| exact_2d(sigma, exit_x, y, eta);
    let profile_norm_sq = exact_2d_l2_squared(sigma, exit_x);
    let rule = tri_degree_8();

    let mut mesh = TriMesh::rectangle(cfg.domain, cfg.target_elements)?;
    let mut levels: Vec<AdaptLevel> = Vec::new();
    let stop = loop {
        let n = levels.len();
        let entry = mesh.sample(|y, eta| cfg.initial.eval(y, eta));
        let marched = Marcher::new(&mesh, cfg.march)?.march(&entry)?;
        let values = marched.final_values;

        let raw = l2_error(&mesh, &values, rule, &profile);
        let amplitude = field_function_inner(&mesh, &values, rule, &profile) / profile_norm_sq;
        let fitted = l2_error(&mesh, &values, rule, &|y, eta| amplitude * profile(y, eta));
        let diff = match levels.last() {
            None => None,
            Some(prev) => Some(cross_mesh_l2(&prev.mesh, &prev.values, &mesh, &values)?),
        };
        let dof = mesh.num_vertices() - mesh.inflow_vertices().len();
        levels.push(AdaptLevel {
            row: ConvergenceRow {
                level: n,
                elements: mesh.num_triangles(),
                vertices: mesh.num_vertices(),
                dof,
                error: raw,
            },
            fitted_error: fitted,
            amplitude,
            diff_from_previous: diff,
            stability: marched.stability,
            values,
            mesh: mesh.clone(),
        });

        if cfg.tol.is_infinite() {
            break StopReason::SingleSolve;
        }
        if let Some(d) = diff {
            if d < cfg.tol {
                break StopReason::Converged;
            }
        }
        if n == cfg.max_refinements {
            break StopReason::MaxRefinements;
        }

        let level = levels.last().expect("just pushed");
        let c = if cfg.fit_amplitude { level.amplitude } else { 1.0 };
        let indicators =
            error_indicator(&mesh, &level.values, &|y, eta| c * profile(y, eta));
        let marked = mark(&indicators, cfg.gamma);
        mesh = mesh.refine(&marked)?;
    };
    Ok(AdaptOutcome { levels, stop })
}
