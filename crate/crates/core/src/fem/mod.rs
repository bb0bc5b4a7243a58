//! Bi-quadratic finite elements for plane linearized elasticity.

mod assembly;
pub mod basis;
mod bc;
mod space;
mod sparse;

pub use assembly::{
    assemble, compliance, element_stiffness, energy, expand_solution, solve, stress_at, stress_at_qp, LinearSystem,
    TabulatedTensors, TensorField, UniformTensor,
};
pub use bc::{BoundaryConditions, DirichletCondition, EdgeSelector, NeumannCondition, NodeSelector, Prescribed, Side};
pub use space::{strain_of_values, BoundaryEdge, DisplacementField, DofKind, Q2Space, DEFAULT_QUADRATURE_POINTS};
pub use sparse::{cholesky, pcg, solve_system, CsrMatrix, SolveStats, SolverConfig, SolverMethod, SparsityPattern};

#[cfg(test)]
mod tests;
