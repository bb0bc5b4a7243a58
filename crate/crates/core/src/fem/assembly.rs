use super::basis::shape_grad;
use super::space::{gradient, strain_from_gradient, DisplacementField, DofKind, Q2Space};
use super::sparse::{solve_system, CsrMatrix, SolveStats, SolverConfig};
use crate::error::Result;
use crate::mesh::{CellId, QuadMesh};
use crate::quadrature::SquareRule;
use crate::tensor::{Sym2, VoigtTensor};

/// Elasticity tensor sampled at the quadrature points of a [`Q2Space`].
pub trait TensorField {
    fn tensor(&self, cell: CellId, qp: usize) -> VoigtTensor;
}

/// The same tensor everywhere.
#[derive(Debug, Clone, Copy)]
pub struct UniformTensor(pub VoigtTensor);

impl TensorField for UniformTensor {
    fn tensor(&self, _: CellId, _: usize) -> VoigtTensor {
        self.0
    }
}

impl<F: Fn(CellId, usize) -> VoigtTensor> TensorField for F {
    fn tensor(&self, cell: CellId, qp: usize) -> VoigtTensor {
        self(cell, qp)
    }
}

/// Tensors precomputed per `(cell, qp)`.
#[derive(Debug, Clone)]
pub struct TabulatedTensors {
    points_per_cell: usize,
    values: Vec<VoigtTensor>,
}

impl TabulatedTensors {
    pub fn new(points_per_cell: usize, values: Vec<VoigtTensor>) -> Self {
        assert_eq!(values.len() % points_per_cell, 0);
        Self { points_per_cell, values }
    }

    pub fn from_field(space: &Q2Space, field: &impl TensorField) -> Self {
        let nq = space.points_per_element();
        let values = (0..space.mesh().num_cells()).flat_map(|c| (0..nq).map(move |q| (c, q))).map(|(c, q)| field.tensor(c, q)).collect();
        Self { points_per_cell: nq, values }
    }
}

impl TensorField for TabulatedTensors {
    fn tensor(&self, cell: CellId, qp: usize) -> VoigtTensor {
        self.values[cell * self.points_per_cell + qp]
    }
}

/// Reduced system after hanging-node condensation and Dirichlet elimination.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

/// 18×18 element stiffness `∫_T C ε(φ_a) : ε(φ_b)` for a square of side `h`;
/// local dof `2 * k + c`.
pub fn element_stiffness(h: f64, rule: &SquareRule, tensor: impl Fn(usize) -> VoigtTensor) -> [[f64; 18]; 18] {
    let mut ke = [[0.0; 18]; 18];
    for (q, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
        let g = shape_grad(*p);
        let c = tensor(q).0;
        // B is 3×18: rows (ε11, ε22, 2ε12).
        let mut bm = [[0.0; 18]; 3];
        for k in 0..9 {
            let (gx, gy) = (g[k][0] / h, g[k][1] / h);
            bm[0][2 * k] = gx;
            bm[1][2 * k + 1] = gy;
            bm[2][2 * k] = gy;
            bm[2][2 * k + 1] = gx;
        }
        let mut cb = [[0.0; 18]; 3];
        for i in 0..3 {
            for a in 0..18 {
                cb[i][a] = c[(i, 0)] * bm[0][a] + c[(i, 1)] * bm[1][a] + c[(i, 2)] * bm[2][a];
            }
        }
        let scale = w * h * h;
        for a in 0..18 {
            let (b0, b1, b2) = (bm[0][a], bm[1][a], bm[2][a]);
            if b0 == 0.0 && b1 == 0.0 && b2 == 0.0 {
                continue;
            }
            for b in 0..18 {
                ke[a][b] += scale * (b0 * cb[0][b] + b1 * cb[1][b] + b2 * cb[2][b]);
            }
        }
    }
    ke
}

/// Assembles the condensed stiffness matrix and load vector.
pub fn assemble(space: &Q2Space, field: &impl TensorField) -> LinearSystem {
    let mesh = space.mesh();
    let mut matrix = CsrMatrix::zeros(space.pattern());
    let mut rhs = vec![0.0; space.num_free()];

    let mut exp_a = Vec::new();
    let mut exp_b = Vec::new();
    for cell in 0..mesh.num_cells() {
        let ke = element_stiffness(mesh.h(cell), space.rule(), |q| field.tensor(cell, q));
        let dofs = space.element_dofs(cell);
        for a in 0..18 {
            space.expand(dofs[a], &mut exp_a);
            for &(da, wa) in &exp_a {
                let DofKind::Free(i) = space.dof_kind(da) else { continue };
                for b in 0..18 {
                    let kab = ke[a][b];
                    if kab == 0.0 {
                        continue;
                    }
                    space.expand(dofs[b], &mut exp_b);
                    for &(db, wb) in &exp_b {
                        match space.dof_kind(db) {
                            DofKind::Free(j) => matrix.add(i, j, wa * wb * kab),
                            DofKind::Fixed(v) => rhs[i] -= wa * wb * kab * v,
                            DofKind::Hanging => unreachable!("expansion yields master dofs only"),
                        }
                    }
                }
            }
        }
    }

    let load = space.load_vector();
    let mut exp = Vec::new();
    for (dof, &f) in load.iter().enumerate() {
        if f == 0.0 {
            continue;
        }
        space.expand(dof, &mut exp);
        for &(d, w) in &exp {
            if let DofKind::Free(i) = space.dof_kind(d) {
                rhs[i] += w * f;
            }
        }
    }
    LinearSystem { matrix, rhs }
}

/// Solves the condensed system and expands to a full displacement field.
pub fn solve(
    space: &Q2Space,
    system: &LinearSystem,
    warm_start: Option<&DisplacementField>,
    config: &SolverConfig,
) -> Result<(DisplacementField, SolveStats)> {
    let mut x = vec![0.0; space.num_free()];
    if let Some(u0) = warm_start.filter(|u| u.values.len() == space.num_dofs()) {
        for (dof, v) in u0.values.iter().enumerate() {
            if let DofKind::Free(i) = space.dof_kind(dof) {
                x[i] = *v;
            }
        }
    }
    let stats = solve_system(&system.matrix, Some(space.pattern()), &system.rhs, &mut x, config)?;
    Ok((expand_solution(space, &x), stats))
}

/// Full field from reduced unknowns.
pub fn expand_solution(space: &Q2Space, reduced: &[f64]) -> DisplacementField {
    let mut values = vec![0.0; space.num_dofs()];
    for (dof, v) in values.iter_mut().enumerate() {
        *v = match space.dof_kind(dof) {
            DofKind::Free(i) => reduced[i],
            DofKind::Fixed(val) => val,
            DofKind::Hanging => 0.0,
        };
    }
    let mut field = DisplacementField { values };
    field.apply_constraints(space);
    field
}

/// Compliance `∫_{Γ_N} g · u`.
pub fn compliance(space: &Q2Space, u: &DisplacementField) -> f64 {
    space.load_vector().iter().zip(&u.values).map(|(f, v)| f * v).sum()
}

/// Energy `a(u, u) = ∫ C ε(u) : ε(u)`, integrated element by element.
pub fn energy(space: &Q2Space, field: &impl TensorField, u: &DisplacementField) -> f64 {
    let mesh = space.mesh();
    let rule = space.rule();
    let mut total = 0.0;
    for cell in 0..mesh.num_cells() {
        let vals = u.element_values(mesh, cell);
        let h = mesh.h(cell);
        for (q, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let eps = strain_from_gradient(gradient(&vals, h, *p));
            total += w * h * h * field.tensor(cell, q).energy(&eps);
        }
    }
    total
}

/// Stress `C ε(u_h)` at a reference point of `cell`.
pub fn stress_at(mesh: &QuadMesh, u: &DisplacementField, tensor: &VoigtTensor, cell: CellId, local: [f64; 2]) -> Sym2 {
    tensor.stress(&u.strain_at(mesh, cell, local))
}

/// Stress at quadrature point `qp` of `cell`, using the field's tensor there.
pub fn stress_at_qp(space: &Q2Space, u: &DisplacementField, field: &impl TensorField, cell: CellId, qp: usize) -> Sym2 {
    let p = space.rule().points[qp];
    stress_at(space.mesh(), u, &field.tensor(cell, qp), cell, p)
}
