//! Dual-weighted residual indicators for the compliance objective.

mod patch;
mod residual;

pub use patch::{build_parent_quartic, build_patch_quartic, PatchQuartic};
pub use residual::{cell_residual, edge_residual, project_stresses, ProjectedStress, StressProjector};

use crate::fem::{DisplacementField, Q2Space, TensorField};
use crate::laminate::{
    eig_sym2, effective_tensor, recover_params_newton, tensor_derivatives, IsotropicMaterial, LaminateParams, NewtonGuess,
};
use crate::mesh::{CellId, Direction, ElementPatch, PatchLookup, QuadMesh};
use crate::optimizer::DesignState;
use crate::quadrature::{GaussRule, SquareRule};
use crate::tensor::Sym2;

/// Points per direction of the estimator's integration rules.
const ESTIMATOR_POINTS: usize = 5;

/// Where the weights of an element came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightSource {
    /// Complete 2×2 sibling patch.
    Patch,
    /// Lattice over the parent region sampled across finer leaves.
    ParentLattice,
    /// Root cell: primal and density weights are zero.
    Unavailable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellIndicators {
    pub rho_u_cell: f64,
    pub rho_u_edge: f64,
    pub rho_m: f64,
    pub rho_theta: f64,
    pub omega_u_cell: f64,
    pub omega_u_edge: f64,
    pub omega_m: f64,
    pub omega_theta: f64,
    pub eta: f64,
    pub source: WeightSource,
}

impl CellIndicators {
    /// The four addends of `η_T`.
    pub fn terms(&self) -> [f64; 4] {
        [
            self.rho_u_cell * self.omega_u_cell,
            self.rho_u_edge * self.omega_u_edge,
            0.5 * self.rho_m * self.omega_m,
            0.5 * self.rho_theta * self.omega_theta,
        ]
    }

    pub fn is_fallback(&self) -> bool {
        self.source != WeightSource::Patch
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementIndicators {
    pub cells: Vec<CellIndicators>,
}

impl ElementIndicators {
    pub fn eta(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.eta).collect()
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().map(|c| c.eta).sum()
    }

    pub fn fallback_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_fallback()).count()
    }
}

/// `(‖u_h − I⁴u_h‖_{L²(T)}, ‖u_h − I⁴u_h‖_{L²(∂T)})`.
pub fn primal_weights(mesh: &QuadMesh, u: &DisplacementField, quartic: &PatchQuartic, cell: CellId, rule: &SquareRule) -> (f64, f64) {
    let h = mesh.h(cell);
    let diff2 = |p: [f64; 2]| {
        let a = u.value_at(mesh, cell, p);
        let b = quartic.value(mesh.map_point(cell, p));
        (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
    };
    let inner: f64 = rule.points.iter().zip(&rule.weights).map(|(p, w)| w * diff2(*p)).sum();
    let mut edge = 0.0;
    for dir in Direction::ALL {
        for (t, w) in rule.line.on_interval(0.0, 1.0) {
            edge += w * diff2(dir.edge_point(t));
        }
    }
    ((inner * h * h).sqrt(), (edge * h).sqrt())
}

/// `(‖R[α]C̄_{,m} ε:ε‖_{L¹(T)}, ‖R[α]C̄_{,θ} ε:ε‖_{L¹(T)})` on the space's quadrature rule.
pub fn control_residuals(space: &Q2Space, u: &DisplacementField, design: &DesignState, mat: &IsotropicMaterial, cell: CellId) -> (f64, f64) {
    let mesh = space.mesh();
    let rule = space.rule();
    let h = mesh.h(cell);
    let vals = u.element_values(mesh, cell);
    let (mut rm, mut rt) = (0.0, 0.0);
    for (q, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
        let eps = crate::fem::strain_of_values(&vals, h, *p);
        let par = design.params(cell, q);
        let local = eps.to_frame(par.alpha).strain_voigt();
        let (dm, dt) = tensor_derivatives(par.m, par.theta, mat);
        rm += w * (dm.0 * local).dot(&local).abs();
        rt += w * (dt.0 * local).dot(&local).abs();
    }
    (rm * h * h, rt * h * h)
}

fn direct_m(sigma: &Sym2) -> f64 {
    let e = eig_sym2(sigma);
    let s = e.lambda1.abs() + e.lambda2.abs();
    if s == 0.0 {
        0.5
    } else {
        e.lambda2.abs() / s
    }
}

/// Newton-recovered `m` from a strain, or `None` on failure.
fn recovered_m(strain: &Sym2, guess: NewtonGuess, theta: f64, mat: &IsotropicMaterial) -> Option<(f64, NewtonGuess)> {
    let r = recover_params_newton(strain, theta, guess, mat).ok()?;
    Some((r.m, NewtonGuess { alpha: r.alpha, lambda1: r.lambda1, lambda2: r.lambda2 }))
}

/// `ω_m`: largest change of the Newton-recovered `m` when `ε(u_h)` is
/// replaced by `ε(I⁴u_h)`, over the quadrature points of `cell`.
pub fn control_weight_m(
    space: &Q2Space,
    u: &DisplacementField,
    design: &DesignState,
    quartic: Option<&PatchQuartic>,
    mat: &IsotropicMaterial,
    cell: CellId,
) -> f64 {
    let mesh = space.mesh();
    let rule = space.rule();
    let h = mesh.h(cell);
    let vals = u.element_values(mesh, cell);
    let mut worst: f64 = 0.0;
    for (q, p) in rule.points.iter().enumerate() {
        let par: LaminateParams = design.params(cell, q);
        let c = effective_tensor(&par, mat);
        let eps = crate::fem::strain_of_values(&vals, h, *p);
        let guess = NewtonGuess::from_params(&eps, &par, mat);
        let current = recovered_m(&eps, guess, par.theta, mat);
        let m_cur = current.map_or(par.m, |(m, _)| m);
        let m_rec = match quartic {
            Some(qd) => {
                let eps4 = qd.strain(mesh.map_point(cell, *p));
                let g4 = current.map_or_else(|| NewtonGuess::from_params(&eps4, &par, mat), |(_, g)| g);
                recovered_m(&eps4, g4, par.theta, mat).map_or_else(|| direct_m(&c.stress(&eps4)), |(m, _)| m)
            }
            None => direct_m(&c.stress(&eps)),
        };
        worst = worst.max((m_cur - m_rec).abs());
    }
    worst
}

/// `ω_θ`: largest deviation of `θ_T` from the bilinear profile through the
/// patch's element-center densities, attained at a corner of `cell`.
pub fn control_weight_theta(mesh: &QuadMesh, theta: &[f64], patch: &ElementPatch, cell: CellId) -> f64 {
    let size = patch.size[0];
    let t = patch.elements.map(|e| theta[e]);
    // Centers sit at 1/4 and 3/4 of the patch in each direction.
    let profile = |x: [f64; 2]| {
        let s = ((x[0] - patch.origin[0]) / size - 0.25) * 2.0;
        let r = ((x[1] - patch.origin[1]) / size - 0.25) * 2.0;
        (1.0 - s) * (1.0 - r) * t[0] + s * (1.0 - r) * t[1] + (1.0 - s) * r * t[2] + s * r * t[3]
    };
    let mut worst: f64 = 0.0;
    for p in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]] {
        worst = worst.max((theta[cell] - profile(mesh.map_point(cell, p))).abs());
    }
    worst
}

/// All indicators. `field` is the tensor field `u` was solved with and
/// `design` the laminate parameters `q_h` the control terms refer to.
pub fn indicators(
    space: &Q2Space,
    u: &DisplacementField,
    field: &impl TensorField,
    design: &DesignState,
    mat: &IsotropicMaterial,
) -> ElementIndicators {
    let mesh = space.mesh();
    let rule = SquareRule::new(ESTIMATOR_POINTS);
    let line = GaussRule::new(ESTIMATOR_POINTS);
    let stresses = project_stresses(space, u, field);
    let mut quartics: std::collections::HashMap<crate::mesh::Cell, (PatchQuartic, WeightSource, Option<ElementPatch>)> =
        std::collections::HashMap::new();
    let mut cells = Vec::with_capacity(mesh.num_cells());
    for cell in 0..mesh.num_cells() {
        let rho_u_cell = cell_residual(mesh, &stresses[cell], cell, &rule);
        let rho_u_edge = edge_residual(space, &stresses, cell, &line);
        let (rho_m, rho_theta) = control_residuals(space, u, design, mat, cell);
        let entry = match mesh.sibling_patch(cell) {
            PatchLookup::Patch(p) => Some(
                &*quartics.entry(p.parent).or_insert_with(|| (build_patch_quartic(mesh, u, &p), WeightSource::Patch, Some(p))),
            ),
            PatchLookup::Incomplete { parent } => Some(
                &*quartics
                    .entry(parent)
                    .or_insert_with(|| (build_parent_quartic(mesh, u, &parent), WeightSource::ParentLattice, None)),
            ),
            PatchLookup::NoParent => None,
        };
        let (omega_u_cell, omega_u_edge, omega_m, omega_theta, source) = match entry {
            Some((quartic, source, patch)) => {
                let (wc, we) = primal_weights(mesh, u, quartic, cell, &rule);
                let wm = control_weight_m(space, u, design, Some(quartic), mat, cell);
                let wt = patch.as_ref().map_or(0.0, |p| control_weight_theta(mesh, &design.theta, p, cell));
                (wc, we, wm, wt, *source)
            }
            None => (0.0, 0.0, control_weight_m(space, u, design, None, mat, cell), 0.0, WeightSource::Unavailable),
        };
        let mut c = CellIndicators {
            rho_u_cell,
            rho_u_edge,
            rho_m,
            rho_theta,
            omega_u_cell,
            omega_u_edge,
            omega_m,
            omega_theta,
            eta: 0.0,
            source,
        };
        c.eta = c.terms().iter().sum();
        cells.push(c);
    }
    ElementIndicators { cells }
}

#[cfg(test)]
mod tests;
