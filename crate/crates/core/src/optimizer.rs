//! Alternating minimization over displacement, laminate parameters and the
//! volume multiplier.

use crate::error::{Error, Result};
use crate::fem::{assemble, compliance, solve, DisplacementField, Q2Space, SolverConfig, TabulatedTensors, TensorField};
use crate::fem::stress_at;
use crate::laminate::{
    clamp_m, eig_sym2, effective_tensor, volume_of, IsotropicMaterial, LaminateParams, Multiplier, PARAM_EPS,
};
use crate::mesh::{CellId, QuadMesh};
use crate::tensor::Sym2;

/// Laminate design: `(α, m)` per quadrature point, `θ` per element.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignState {
    points_per_element: usize,
    pub alpha: Vec<f64>,
    pub m: Vec<f64>,
    pub theta: Vec<f64>,
    pub multiplier: Option<Multiplier>,
}

impl DesignState {
    /// `θ ≡ theta`, `m ≡ 1/2`, `α ≡ 0`.
    pub fn uniform(num_cells: usize, points_per_element: usize, theta: f64) -> Self {
        let n = num_cells * points_per_element;
        Self { points_per_element, alpha: vec![0.0; n], m: vec![0.5; n], theta: vec![theta; num_cells], multiplier: None }
    }

    /// Default start for a target volume on `space`.
    pub fn initial(space: &Q2Space, target_volume: f64) -> Self {
        let mesh = space.mesh();
        Self::uniform(mesh.num_cells(), space.points_per_element(), (target_volume / mesh.area()).clamp(PARAM_EPS, 1.0))
    }

    pub fn from_parts(points_per_element: usize, alpha: Vec<f64>, m: Vec<f64>, theta: Vec<f64>, multiplier: Option<Multiplier>) -> Self {
        assert_eq!(alpha.len(), theta.len() * points_per_element);
        assert_eq!(m.len(), alpha.len());
        Self { points_per_element, alpha, m, theta, multiplier }
    }

    pub fn points_per_element(&self) -> usize {
        self.points_per_element
    }

    pub fn num_cells(&self) -> usize {
        self.theta.len()
    }

    pub fn params(&self, cell: CellId, qp: usize) -> LaminateParams {
        let k = cell * self.points_per_element + qp;
        LaminateParams { alpha: self.alpha[k], m: self.m[k], theta: self.theta[cell] }
    }

    /// Effective tensors at every quadrature point.
    pub fn tensors(&self, mat: &IsotropicMaterial) -> TabulatedTensors {
        let nq = self.points_per_element;
        let values = (0..self.alpha.len()).map(|k| effective_tensor(&self.params(k / nq, k % nq), mat)).collect();
        TabulatedTensors::new(nq, values)
    }

    pub fn volume(&self, mesh: &QuadMesh) -> f64 {
        volume_of(&self.theta, mesh)
    }
}

/// Stresses at every quadrature point, index `cell * nq + q`.
pub fn quadrature_stresses(space: &Q2Space, u: &DisplacementField, field: &impl TensorField) -> Vec<Sym2> {
    let mesh = space.mesh();
    let rule = space.rule();
    let mut out = Vec::with_capacity(mesh.num_cells() * rule.points.len());
    for cell in 0..mesh.num_cells() {
        for (q, p) in rule.points.iter().enumerate() {
            out.push(stress_at(mesh, u, &field.tensor(cell, q), cell, *p));
        }
    }
    out
}

/// Eigen-data of frozen stresses, enough to re-evaluate `θ(l)` cheaply.
#[derive(Debug, Clone)]
pub struct FrozenStresses {
    points_per_element: usize,
    alpha: Vec<f64>,
    m: Vec<f64>,
    /// `k·(|λ1| + |λ2|)`, the density before division by `√l`.
    scaled_sum: Vec<f64>,
}

impl FrozenStresses {
    pub fn new(stresses: &[Sym2], points_per_element: usize, mat: &IsotropicMaterial) -> Self {
        let k = mat.density_factor();
        let n = stresses.len();
        let (mut alpha, mut m, mut scaled_sum) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for s in stresses {
            let e = eig_sym2(s);
            let sum = e.lambda1.abs() + e.lambda2.abs();
            if sum == 0.0 {
                alpha.push(0.0);
                m.push(0.5);
            } else {
                alpha.push(e.angle());
                m.push(clamp_m(e.lambda2.abs() / sum));
            }
            scaled_sum.push(k * sum);
        }
        Self { points_per_element, alpha, m, scaled_sum }
    }

    /// Element densities: mean of the clamped quadrature-point densities.
    pub fn element_theta(&self, l: Multiplier) -> Vec<f64> {
        let inv = 1.0 / l.l.sqrt();
        let nq = self.points_per_element;
        self.scaled_sum
            .chunks(nq)
            .map(|c| c.iter().map(|s| (s * inv).clamp(PARAM_EPS, 1.0)).sum::<f64>() / nq as f64)
            .collect()
    }

    pub fn volume(&self, l: Multiplier, mesh: &QuadMesh) -> f64 {
        volume_of(&self.element_theta(l), mesh)
    }

    pub fn design(&self, l: Multiplier) -> DesignState {
        DesignState::from_parts(self.points_per_element, self.alpha.clone(), self.m.clone(), self.element_theta(l), Some(l))
    }
}

/// `q[σ_h]` at a fixed multiplier.
pub fn update_params(space: &Q2Space, u: &DisplacementField, field: &impl TensorField, l: Multiplier, mat: &IsotropicMaterial) -> DesignState {
    let stresses = quadrature_stresses(space, u, field);
    FrozenStresses::new(&stresses, space.points_per_element(), mat).design(l)
}

const BRACKET_STEPS: usize = 60;
const BISECTION_STEPS: usize = 200;

/// Multiplier whose frozen-stress design has volume `target`, by bisection in
/// `log l`. The returned volume is within `tol` relative of the target.
pub fn adapt_multiplier(frozen: &FrozenStresses, mesh: &QuadMesh, target: f64, tol: f64, start: Option<Multiplier>) -> Result<Multiplier> {
    if !(target > 0.0) || target > mesh.area() * (1.0 + 1e-12) {
        return Err(Error::InfeasibleVolume { target, min: PARAM_EPS * mesh.area(), max: mesh.area() });
    }
    let vol = |l: f64| frozen.volume(Multiplier { l }, mesh);
    let l0 = start.map_or(1.0, |m| m.l);
    let (mut lo, mut hi) = (l0, l0);
    // volume(l) is nonincreasing: lo must overshoot, hi undershoot.
    let mut steps = 0;
    while vol(lo) < target {
        lo *= 0.5;
        steps += 1;
        if steps > BRACKET_STEPS {
            return Err(Error::InfeasibleVolume { target, min: vol(hi), max: vol(lo) });
        }
    }
    steps = 0;
    while vol(hi) > target {
        hi *= 2.0;
        steps += 1;
        if steps > BRACKET_STEPS {
            return Err(Error::InfeasibleVolume { target, min: vol(hi), max: vol(lo) });
        }
    }
    for _ in 0..BISECTION_STEPS {
        if hi / lo - 1.0 <= 4.0 * f64::EPSILON {
            break;
        }
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if vol(mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (vlo, vhi) = (vol(lo), vol(hi));
    let l = if (vlo - target).abs() <= (vhi - target).abs() { lo } else { hi };
    let v = vol(l);
    if (v - target).abs() > tol * target {
        return Err(Error::InfeasibleVolume { target, min: vhi, max: vlo });
    }
    Ok(Multiplier { l })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Prescribed material volume `Θ`.
    pub target_volume: f64,
    /// Stop when `|J_k - J_{k-1}| < tolerance · max(1, |J_k|)`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Relative volume tolerance of the multiplier.
    pub volume_tolerance: f64,
    pub solver: SolverConfig,
}

impl OptimizerConfig {
    pub fn new(target_volume: f64) -> Self {
        Self { target_volume, tolerance: 1e-7, max_iterations: 500, volume_tolerance: 1e-2, solver: SolverConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub compliance: f64,
    pub volume: f64,
    pub multiplier: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub displacement: DisplacementField,
    /// Design the final displacement was solved with.
    pub solved_design: DesignState,
    /// `q[σ_h]` from the final displacement.
    pub design: DesignState,
    pub compliance: f64,
    pub history: Vec<IterationRecord>,
    pub converged: bool,
}

/// Alternates solve, parameter update and multiplier adaptation until the
/// compliance stagnates or the iteration cap is hit.
pub fn optimize(space: &Q2Space, mat: &IsotropicMaterial, config: &OptimizerConfig, init: Option<DesignState>) -> Result<OptimizationResult> {
    let mesh = space.mesh();
    let nq = space.points_per_element();
    let mut design = match init {
        Some(d) => {
            if d.num_cells() != mesh.num_cells() || d.points_per_element() != nq {
                return Err(Error::InvalidArgument("initial design does not match the discrete space".into()));
            }
            d
        }
        None => DesignState::initial(space, config.target_volume),
    };
    let mut history: Vec<IterationRecord> = Vec::new();
    let mut warm: Option<DisplacementField> = None;
    let mut iteration = 0;
    loop {
        let tensors = design.tensors(mat);
        let system = assemble(space, &tensors);
        let (u, _) = solve(space, &system, warm.as_ref(), &config.solver)?;
        let j = compliance(space, &u);
        let frozen = FrozenStresses::new(&quadrature_stresses(space, &u, &tensors), nq, mat);
        let l = adapt_multiplier(&frozen, mesh, config.target_volume, config.volume_tolerance, design.multiplier)?;
        let next = frozen.design(l);
        history.push(IterationRecord { iteration, compliance: j, volume: next.volume(mesh), multiplier: l.l });
        let converged = history.len() >= 2 && {
            let prev = history[history.len() - 2].compliance;
            (j - prev).abs() < config.tolerance * j.abs().max(1.0)
        };
        iteration += 1;
        if converged || iteration >= config.max_iterations {
            return Ok(OptimizationResult { displacement: u, solved_design: design, design: next, compliance: j, history, converged });
        }
        design = next;
        warm = Some(u);
    }
}
