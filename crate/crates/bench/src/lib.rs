//! Fixtures shared by the benchmarks.

use seqlam_core::fem::{assemble, solve, DisplacementField, Q2Space, SolverConfig, TabulatedTensors};
use seqlam_core::mesh::QuadMesh;
use seqlam_core::optimizer::{update_params, DesignState};
use seqlam_core::scenario::{builtin_scenario, Scenario, ScenarioOverrides};

pub fn carrier() -> Scenario {
    builtin_scenario("carrier-plate", &ScenarioOverrides::default()).expect("builtin scenario")
}

/// Solution and laminate design after one alternating step on a uniform mesh.
pub struct Snapshot {
    pub u: DisplacementField,
    pub design: DesignState,
    pub tensors: TabulatedTensors,
}

pub fn snapshot(scenario: &Scenario, space: &Q2Space) -> Snapshot {
    let mat = scenario.material;
    let start = DesignState::initial(space, scenario.target_volume());
    let (u, _) = solve(space, &assemble(space, &start.tensors(&mat)), None, &SolverConfig::default()).expect("solve");
    let l = seqlam_core::laminate::Multiplier { l: 1.0 };
    let design = update_params(space, &u, &start.tensors(&mat), l, &mat);
    let tensors = design.tensors(&mat);
    Snapshot { u, design, tensors }
}

pub fn mesh(scenario: &Scenario, level: u8) -> QuadMesh {
    scenario.mesh(level)
}
