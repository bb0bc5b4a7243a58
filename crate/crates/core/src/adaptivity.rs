//! Adaptive loop: optimize, estimate, mark, refine.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::estimator::{indicators, ElementIndicators};
use crate::fem::Q2Space;
use crate::mesh::{CellId, QuadMesh};
use crate::optimizer::{optimize, DesignState, OptimizationResult, OptimizerConfig};
use crate::scenario::Scenario;

pub const DEFAULT_MARKING_FRACTION: f64 = 0.4;

/// Estimates at or below this multiple of `max(|J_h|, 1)` count as zero.
pub const ROUNDOFF_ESTIMATE: f64 = 1e-12;

/// Smallest set of cells, taken by descending `η` with ties broken by
/// ascending id, whose indicator sum reaches `fraction · Ση`. Empty when
/// `Ση = 0`.
pub fn dorfler_mark(eta: &[f64], fraction: f64) -> Vec<CellId> {
    assert!(fraction > 0.0 && fraction <= 1.0, "marking fraction must lie in (0, 1]");
    let mut order: Vec<CellId> = (0..eta.len()).collect();
    order.sort_by(|&a, &b| eta[b].total_cmp(&eta[a]).then(a.cmp(&b)));
    // Summed in marking order so that fraction 1 reaches the total exactly.
    let total: f64 = order.iter().map(|&i| eta[i]).sum();
    if !(total > 0.0) {
        return Vec::new();
    }
    let threshold = fraction * total;
    let mut sum = 0.0;
    let mut marked = Vec::new();
    for id in order {
        if sum >= threshold || eta[id] <= 0.0 {
            break;
        }
        sum += eta[id];
        marked.push(id);
    }
    marked
}

/// Moves a design onto a refinement of its mesh: `θ` is inherited from the
/// covering old cell, `α` and `m` from the nearest old quadrature point.
pub fn transfer_design(old: &QuadMesh, new: &QuadMesh, design: &DesignState, space: &Q2Space) -> DesignState {
    let nq = design.points_per_element();
    assert_eq!(nq, space.points_per_element());
    let points = &space.rule().points;
    let (mut alpha, mut m, mut theta) = (Vec::new(), Vec::new(), Vec::with_capacity(new.num_cells()));
    for cell in 0..new.num_cells() {
        let parent = old.covering_leaf(&new.cell(cell)).expect("refinement never coarsens");
        theta.push(design.theta[parent]);
        let (o, h) = (old.cell_origin(parent), old.h(parent));
        for p in points {
            let x = new.map_point(cell, *p);
            let local = [(x[0] - o[0]) / h, (x[1] - o[1]) / h];
            let dist = |q: &[f64; 2]| (q[0] - local[0]).powi(2) + (q[1] - local[1]).powi(2);
            let nearest = (0..nq).min_by(|&a, &b| dist(&points[a]).total_cmp(&dist(&points[b]))).unwrap();
            alpha.push(design.alpha[parent * nq + nearest]);
            m.push(design.m[parent * nq + nearest]);
        }
    }
    DesignState::from_parts(nq, alpha, m, theta, design.multiplier)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveConfig {
    /// Dörfler fraction in `(0, 1]`.
    pub fraction: f64,
    pub max_steps: usize,
    /// Optional stop once `Ση` falls below this value.
    pub eta_threshold: Option<f64>,
    pub optimizer: OptimizerConfig,
}

impl AdaptiveConfig {
    pub fn new(scenario: &Scenario, max_steps: usize) -> Self {
        Self {
            fraction: DEFAULT_MARKING_FRACTION,
            max_steps,
            eta_threshold: None,
            optimizer: OptimizerConfig::new(scenario.target_volume()),
        }
    }
}

/// Summary of one optimize-estimate-mark cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub cells: usize,
    pub dofs: usize,
    pub hanging_nodes: usize,
    pub max_level: u8,
    pub compliance: f64,
    pub estimate: f64,
    pub volume: f64,
    pub multiplier: f64,
    pub iterations: usize,
    pub converged: bool,
    pub marked: usize,
    pub fallback_cells: usize,
    pub wall: Duration,
}

/// Everything computed in one step, handed to observers before refinement.
pub struct StepOutput<'a> {
    pub record: &'a StepRecord,
    pub space: &'a Q2Space<'a>,
    pub result: &'a OptimizationResult,
    pub indicators: &'a ElementIndicators,
    pub marked: &'a [CellId],
}

#[derive(Debug, Clone)]
pub struct AdaptiveRun {
    pub config: AdaptiveConfig,
    pub steps: Vec<StepRecord>,
    pub final_mesh: QuadMesh,
}

/// Runs the adaptive loop from a uniform mesh of `initial_level`. The loop
/// stops after `max_steps` refinements or when nothing is marked.
pub fn adaptive_loop(
    scenario: &Scenario,
    initial_level: u8,
    config: &AdaptiveConfig,
    mut observer: impl FnMut(&StepOutput) -> Result<()>,
) -> Result<AdaptiveRun> {
    scenario.validate()?;
    if !(config.fraction > 0.0 && config.fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("marking fraction must lie in (0, 1], got {}", config.fraction)));
    }
    let mut mesh = scenario.mesh(initial_level);
    let mut init: Option<DesignState> = None;
    let mut steps = Vec::new();
    for step in 0..=config.max_steps {
        let start = Instant::now();
        let space = Q2Space::new(&mesh, &scenario.bc)?;
        let result = optimize(&space, &scenario.material, &config.optimizer, init.take())?;
        let tensors = result.solved_design.tensors(&scenario.material);
        let ind = indicators(&space, &result.displacement, &tensors, &result.solved_design, &scenario.material);
        let estimate = ind.total();
        let negligible = estimate <= ROUNDOFF_ESTIMATE * result.compliance.abs().max(1.0);
        let stop_on_eta = negligible || config.eta_threshold.is_some_and(|t| estimate < t);
        let marked = if step < config.max_steps && !stop_on_eta { dorfler_mark(&ind.eta(), config.fraction) } else { Vec::new() };
        let last = result.history.last().expect("at least one iteration");
        let record = StepRecord {
            step,
            cells: mesh.num_cells(),
            dofs: space.num_dofs(),
            hanging_nodes: mesh.num_hanging_nodes(),
            max_level: mesh.max_level(),
            compliance: result.compliance,
            estimate,
            volume: last.volume,
            multiplier: last.multiplier,
            iterations: result.history.len(),
            converged: result.converged,
            marked: marked.len(),
            fallback_cells: ind.fallback_count(),
            wall: start.elapsed(),
        };
        observer(&StepOutput { record: &record, space: &space, result: &result, indicators: &ind, marked: &marked })?;
        steps.push(record);
        if marked.is_empty() {
            break;
        }
        let refined = mesh.refine(&marked);
        init = Some(transfer_design(&mesh, &refined, &result.design, &space));
        drop(space);
        mesh = refined;
    }
    Ok(AdaptiveRun { config: *config, steps, final_mesh: mesh })
}
