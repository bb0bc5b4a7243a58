use std::sync::OnceLock;

use super::basis::{lagrange2, shape, shape_grad};
use super::bc::{BoundaryConditions, NodeSelector, Side};
use super::sparse::SparsityPattern;
use crate::error::Result;
use crate::mesh::{CellId, Direction, Neighbor, QuadMesh};
use crate::quadrature::SquareRule;
use crate::tensor::Sym2;

/// Default number of Gauss points per direction (1D exactness degree 5).
pub const DEFAULT_QUADRATURE_POINTS: usize = 3;

/// Role of a scalar degree of freedom (`2 * node + component`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DofKind {
    /// Unknown with its index in the reduced system.
    Free(usize),
    /// Dirichlet value.
    Fixed(f64),
    /// Determined by the masters of a hanging node.
    Hanging,
}

/// A cell edge on the domain boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub cell: CellId,
    pub dir: Direction,
    /// Bounding-box side the edge lies on; `None` for re-entrant boundary.
    pub side: Option<Side>,
    /// Start and end coordinate along the side.
    pub span: (f64, f64),
}

/// Continuous vector-valued bi-quadratic space on a [`QuadMesh`] with the
/// boundary conditions folded into the dof classification.
#[derive(Debug)]
pub struct Q2Space<'m> {
    mesh: &'m QuadMesh,
    bc: BoundaryConditions,
    rule: SquareRule,
    dofs: Vec<DofKind>,
    num_free: usize,
    load: Vec<f64>,
    boundary: Vec<BoundaryEdge>,
    pattern: OnceLock<SparsityPattern>,
}

impl<'m> Q2Space<'m> {
    pub fn new(mesh: &'m QuadMesh, bc: &BoundaryConditions) -> Result<Self> {
        Self::with_quadrature(mesh, bc, DEFAULT_QUADRATURE_POINTS)
    }

    pub fn with_quadrature(mesh: &'m QuadMesh, bc: &BoundaryConditions, points: usize) -> Result<Self> {
        bc.validate()?;
        let boundary = boundary_edges(mesh);
        let scale = mesh.layout().root_size;
        let tol = 1e-10 * scale;

        let mut fixed: Vec<Option<f64>> = vec![None; 2 * mesh.num_nodes()];
        for d in &bc.dirichlet {
            match d.selector {
                NodeSelector::Edge(sel) => {
                    for e in boundary.iter().filter(|e| e.side == Some(sel.side)) {
                        for k in e.dir.edge_nodes() {
                            let node = mesh.cell_nodes(e.cell)[k];
                            let x = mesh.node(node);
                            let s = along(sel.side, x);
                            if sel.contains(s, tol) {
                                let v = d.value.eval(x);
                                for c in 0..2 {
                                    if d.fixed[c] {
                                        fixed[2 * node + c] = Some(v[c]);
                                    }
                                }
                            }
                        }
                    }
                }
                NodeSelector::Point(p) => {
                    let hit = mesh
                        .nodes()
                        .iter()
                        .position(|x| (x[0] - p[0]).abs() <= tol && (x[1] - p[1]).abs() <= tol);
                    if let Some(node) = hit {
                        let v = d.value.eval(mesh.node(node));
                        for c in 0..2 {
                            if d.fixed[c] {
                                fixed[2 * node + c] = Some(v[c]);
                            }
                        }
                    }
                }
            }
        }

        let mut dofs = Vec::with_capacity(fixed.len());
        let mut num_free = 0;
        for (dof, f) in fixed.iter().enumerate() {
            let kind = if mesh.is_hanging(dof / 2) {
                DofKind::Hanging
            } else if let Some(v) = f {
                DofKind::Fixed(*v)
            } else {
                num_free += 1;
                DofKind::Free(num_free - 1)
            };
            dofs.push(kind);
        }

        let rule = SquareRule::new(points);
        let mut load = vec![0.0; fixed.len()];
        for e in &boundary {
            let Some(side) = e.side else { continue };
            let (a, b) = e.span;
            let len = b - a;
            let nodes = e.dir.edge_nodes().map(|k| mesh.cell_nodes(e.cell)[k]);
            for n in bc.neumann.iter().filter(|n| n.selector.side == side) {
                let Some((lo, hi)) = n.selector.clip(a, b) else { continue };
                for (s, w) in rule.line.on_interval(lo, hi) {
                    let phi = lagrange2((s - a) / len);
                    for k in 0..3 {
                        for c in 0..2 {
                            load[2 * nodes[k] + c] += w * n.traction[c] * phi[k];
                        }
                    }
                }
            }
        }

        Ok(Self { mesh, bc: bc.clone(), rule, dofs, num_free, load, boundary, pattern: OnceLock::new() })
    }

    pub fn mesh(&self) -> &'m QuadMesh {
        self.mesh
    }

    pub fn boundary_conditions(&self) -> &BoundaryConditions {
        &self.bc
    }

    pub fn rule(&self) -> &SquareRule {
        &self.rule
    }

    /// Quadrature points per element.
    pub fn points_per_element(&self) -> usize {
        self.rule.len()
    }

    pub fn num_dofs(&self) -> usize {
        self.dofs.len()
    }

    pub fn num_free(&self) -> usize {
        self.num_free
    }

    pub fn dof_kind(&self, dof: usize) -> DofKind {
        self.dofs[dof]
    }

    /// Consistent Neumann load `∫_{Γ_N} g · φ_i` for every dof.
    pub fn load_vector(&self) -> &[f64] {
        &self.load
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    /// Boundary edge record for a cell edge, if the edge lies on the boundary.
    pub fn boundary_edge(&self, cell: CellId, dir: Direction) -> Option<BoundaryEdge> {
        if self.mesh.neighbor(cell, dir) != Neighbor::Boundary {
            return None;
        }
        Some(make_boundary_edge(self.mesh, cell, dir))
    }

    /// Global dofs of an element, local index `2 * k + c`.
    pub fn element_dofs(&self, cell: CellId) -> [usize; 18] {
        let nodes = self.mesh.cell_nodes(cell);
        std::array::from_fn(|d| 2 * nodes[d / 2] + d % 2)
    }

    /// Expansion of a dof into `(dof, weight)` pairs of non-hanging dofs.
    pub fn expand(&self, dof: usize, out: &mut Vec<(usize, f64)>) {
        out.clear();
        match self.dofs[dof] {
            DofKind::Hanging => {
                let c = &self.mesh.constraints()[&(dof / 2)];
                for k in 0..3 {
                    out.push((2 * c.masters[k] + dof % 2, c.weights[k]));
                }
            }
            _ => out.push((dof, 1.0)),
        }
    }

    pub(crate) fn pattern(&self) -> &SparsityPattern {
        self.pattern.get_or_init(|| SparsityPattern::for_space(self))
    }
}

fn along(side: Side, x: [f64; 2]) -> f64 {
    match side {
        Side::Left | Side::Right => x[1],
        Side::Bottom | Side::Top => x[0],
    }
}

fn make_boundary_edge(mesh: &QuadMesh, cell: CellId, dir: Direction) -> BoundaryEdge {
    let bbox = mesh.layout().bounding_box();
    let o = mesh.cell_origin(cell);
    let h = mesh.h(cell);
    let tol = 1e-12 * mesh.layout().root_size;
    let (on_side, side, span) = match dir {
        Direction::Left => ((o[0] - bbox.min[0]).abs() <= tol, Side::Left, (o[1], o[1] + h)),
        Direction::Right => ((o[0] + h - bbox.max[0]).abs() <= tol, Side::Right, (o[1], o[1] + h)),
        Direction::Bottom => ((o[1] - bbox.min[1]).abs() <= tol, Side::Bottom, (o[0], o[0] + h)),
        Direction::Top => ((o[1] + h - bbox.max[1]).abs() <= tol, Side::Top, (o[0], o[0] + h)),
    };
    BoundaryEdge { cell, dir, side: on_side.then_some(side), span }
}

fn boundary_edges(mesh: &QuadMesh) -> Vec<BoundaryEdge> {
    let mut out = Vec::new();
    for cell in 0..mesh.num_cells() {
        for dir in Direction::ALL {
            if mesh.neighbor(cell, dir) == Neighbor::Boundary {
                out.push(make_boundary_edge(mesh, cell, dir));
            }
        }
    }
    out
}

/// Nodal displacement coefficients, two per mesh node.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    pub values: Vec<f64>,
}

impl DisplacementField {
    pub fn zeros(space: &Q2Space) -> Self {
        Self { values: vec![0.0; space.num_dofs()] }
    }

    /// Nodal interpolant of `f` (hanging nodes take their constrained values).
    pub fn interpolate(space: &Q2Space, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        let mesh = space.mesh();
        let mut values = vec![0.0; space.num_dofs()];
        for (n, x) in mesh.nodes().iter().enumerate() {
            let v = f(*x);
            values[2 * n] = v[0];
            values[2 * n + 1] = v[1];
        }
        let mut field = Self { values };
        field.apply_constraints(space);
        field
    }

    /// Overwrites hanging-node values with their constrained values.
    pub fn apply_constraints(&mut self, space: &Q2Space) {
        for (&node, c) in space.mesh().constraints() {
            for comp in 0..2 {
                self.values[2 * node + comp] =
                    (0..3).map(|k| c.weights[k] * self.values[2 * c.masters[k] + comp]).sum();
            }
        }
    }

    pub fn node_value(&self, node: usize) -> [f64; 2] {
        [self.values[2 * node], self.values[2 * node + 1]]
    }

    /// Element coefficients, one pair per local node.
    pub fn element_values(&self, mesh: &QuadMesh, cell: CellId) -> [[f64; 2]; 9] {
        let nodes = mesh.cell_nodes(cell);
        std::array::from_fn(|k| self.node_value(nodes[k]))
    }

    pub fn value_at(&self, mesh: &QuadMesh, cell: CellId, local: [f64; 2]) -> [f64; 2] {
        let u = self.element_values(mesh, cell);
        let n = shape(local);
        let mut v = [0.0; 2];
        for k in 0..9 {
            v[0] += n[k] * u[k][0];
            v[1] += n[k] * u[k][1];
        }
        v
    }

    /// Physical displacement gradient `∂u_i/∂x_j`.
    pub fn gradient_at(&self, mesh: &QuadMesh, cell: CellId, local: [f64; 2]) -> [[f64; 2]; 2] {
        gradient(&self.element_values(mesh, cell), mesh.h(cell), local)
    }

    pub fn strain_at(&self, mesh: &QuadMesh, cell: CellId, local: [f64; 2]) -> Sym2 {
        strain_from_gradient(self.gradient_at(mesh, cell, local))
    }

    pub fn max_abs_difference(&self, other: &DisplacementField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

pub(crate) fn gradient(u: &[[f64; 2]; 9], h: f64, local: [f64; 2]) -> [[f64; 2]; 2] {
    let g = shape_grad(local);
    let mut out = [[0.0; 2]; 2];
    for k in 0..9 {
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] += u[k][i] * g[k][j] / h;
            }
        }
    }
    out
}

pub(crate) fn strain_from_gradient(g: [[f64; 2]; 2]) -> Sym2 {
    Sym2::new(g[0][0], g[1][1], 0.5 * (g[0][1] + g[1][0]))
}

/// Strain at `local` from the nine nodal values of an element of side `h`.
pub fn strain_of_values(u: &[[f64; 2]; 9], h: f64, local: [f64; 2]) -> Sym2 {
    strain_from_gradient(gradient(u, h, local))
}
