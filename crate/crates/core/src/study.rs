//! Uniform and adaptive refinement studies.

use std::time::Instant;

use crate::adaptivity::{StepOutput, StepRecord};
use crate::error::{Error, Result};
use crate::estimator::indicators;
use crate::extrapolation::{fit_extrapolation, FitResult};
use crate::fem::Q2Space;
use crate::optimizer::{optimize, OptimizerConfig};
use crate::scenario::Scenario;

#[derive(Debug, Clone)]
pub struct UniformStudy {
    pub levels: Vec<u8>,
    /// Element edge length per level.
    pub h: Vec<f64>,
    pub records: Vec<StepRecord>,
    /// Present when at least three levels were run.
    pub fit: Option<FitResult>,
}

impl UniformStudy {
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.h.iter().zip(&self.records).map(|(h, r)| (*h, r.compliance)).collect()
    }
}

/// Optimizes on uniform meshes of the given levels, estimating the error on
/// each, and fits the extrapolation model to the compliances.
pub fn uniform_study(
    scenario: &Scenario,
    levels: &[u8],
    optimizer: &OptimizerConfig,
    mut observer: impl FnMut(&StepOutput) -> Result<()>,
) -> Result<UniformStudy> {
    scenario.validate()?;
    if levels.is_empty() || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("levels must be nonempty and strictly increasing".into()));
    }
    let mut records = Vec::with_capacity(levels.len());
    let mut h = Vec::with_capacity(levels.len());
    for (step, &level) in levels.iter().enumerate() {
        let start = Instant::now();
        let mesh = scenario.mesh(level);
        let space = Q2Space::new(&mesh, &scenario.bc)?;
        let result = optimize(&space, &scenario.material, optimizer, None)?;
        let tensors = result.solved_design.tensors(&scenario.material);
        let ind = indicators(&space, &result.displacement, &tensors, &result.solved_design, &scenario.material);
        let last = result.history.last().expect("at least one iteration");
        let record = StepRecord {
            step,
            cells: mesh.num_cells(),
            dofs: space.num_dofs(),
            hanging_nodes: 0,
            max_level: level,
            compliance: result.compliance,
            estimate: ind.total(),
            volume: last.volume,
            multiplier: last.multiplier,
            iterations: result.history.len(),
            converged: result.converged,
            marked: 0,
            fallback_cells: ind.fallback_count(),
            wall: start.elapsed(),
        };
        observer(&StepOutput { record: &record, space: &space, result: &result, indicators: &ind, marked: &[] })?;
        records.push(record);
        h.push(scenario.layout.cell_size(level));
    }
    let mut study = UniformStudy { levels: levels.to_vec(), h, records, fit: None };
    if levels.len() >= 3 {
        study.fit = Some(fit_extrapolation(&study.pairs())?);
    }
    Ok(study)
}

/// One uniform level paired with the adaptive step of closest element count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedPair {
    pub uniform_cells: usize,
    pub adaptive_cells: usize,
    pub uniform_error: f64,
    pub adaptive_error: f64,
}

/// Pairs every uniform record with the adaptive step whose element count is
/// closest in ratio, keeping pairs within a factor of 2. Errors are measured
/// against `j_star`. Sorted by increasing uniform element count.
pub fn match_by_cells(uniform: &[StepRecord], adaptive: &[StepRecord], j_star: f64) -> Vec<MatchedPair> {
    let ratio = |a: usize, b: usize| (a as f64 / b as f64).ln().abs();
    let mut out: Vec<MatchedPair> = uniform
        .iter()
        .filter_map(|u| {
            let a = adaptive.iter().min_by(|x, y| ratio(x.cells, u.cells).total_cmp(&ratio(y.cells, u.cells)))?;
            (ratio(a.cells, u.cells) <= 2f64.ln()).then(|| MatchedPair {
                uniform_cells: u.cells,
                adaptive_cells: a.cells,
                uniform_error: (j_star - u.compliance).abs(),
                adaptive_error: (j_star - a.compliance).abs(),
            })
        })
        .collect();
    out.sort_by_key(|m| m.uniform_cells);
    out
}
