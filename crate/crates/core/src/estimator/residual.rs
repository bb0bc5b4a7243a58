//! Element and edge residuals of the projected discrete stress.

use crate::fem::basis::{shape, shape_grad};
use crate::fem::{BoundaryConditions, DisplacementField, Q2Space, TensorField};
use crate::fem::stress_at;
use crate::mesh::{CellId, Direction, Neighbor, QuadMesh};
use crate::quadrature::{GaussRule, SquareRule};
use crate::tensor::Sym2;
use nalgebra::{DMatrix, SMatrix};

/// Least-squares projector from quadrature values onto the nine Q2 shape
/// functions of the reference square.
#[derive(Debug, Clone)]
pub struct StressProjector {
    /// Row `k` gives the coefficient of shape function `k`.
    map: DMatrix<f64>,
}

impl StressProjector {
    pub fn new(rule: &SquareRule) -> Self {
        let nq = rule.points.len();
        assert!(nq >= 9, "stress projection needs at least 9 quadrature points");
        let mut mass = SMatrix::<f64, 9, 9>::zeros();
        let mut rhs = DMatrix::zeros(9, nq);
        for (q, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let phi = shape(*p);
            for a in 0..9 {
                rhs[(a, q)] = w * phi[a];
                for b in 0..9 {
                    mass[(a, b)] += w * phi[a] * phi[b];
                }
            }
        }
        let inv = mass.try_inverse().expect("Q2 mass matrix is invertible");
        let inv = DMatrix::from_fn(9, 9, |i, j| inv[(i, j)]);
        Self { map: inv * rhs }
    }

    pub fn project(&self, values: &[Sym2]) -> ProjectedStress {
        let mut c = [Sym2::ZERO; 9];
        for (k, ck) in c.iter_mut().enumerate() {
            for (q, v) in values.iter().enumerate() {
                *ck = *ck + self.map[(k, q)] * *v;
            }
        }
        ProjectedStress { coeffs: c }
    }
}

/// Bi-quadratic stress on one element in reference coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedStress {
    pub coeffs: [Sym2; 9],
}

impl ProjectedStress {
    pub fn value(&self, local: [f64; 2]) -> Sym2 {
        let phi = shape(local);
        let mut s = Sym2::ZERO;
        for k in 0..9 {
            s = s + phi[k] * self.coeffs[k];
        }
        s
    }

    /// `div σ` on an element of side `h`.
    pub fn divergence(&self, local: [f64; 2], h: f64) -> [f64; 2] {
        let g = shape_grad(local);
        let mut d = [0.0; 2];
        for k in 0..9 {
            let (gx, gy) = (g[k][0] / h, g[k][1] / h);
            let c = &self.coeffs[k];
            d[0] += gx * c.xx + gy * c.xy;
            d[1] += gx * c.xy + gy * c.yy;
        }
        d
    }
}

/// Projected stresses of all elements.
pub fn project_stresses(space: &Q2Space, u: &DisplacementField, field: &impl TensorField) -> Vec<ProjectedStress> {
    let mesh = space.mesh();
    let rule = space.rule();
    let projector = StressProjector::new(rule);
    let mut vals = Vec::with_capacity(rule.points.len());
    (0..mesh.num_cells())
        .map(|cell| {
            vals.clear();
            vals.extend(rule.points.iter().enumerate().map(|(q, p)| stress_at(mesh, u, &field.tensor(cell, q), cell, *p)));
            projector.project(&vals)
        })
        .collect()
}

/// `‖div σ_h‖_{L²(T)}`.
pub fn cell_residual(mesh: &QuadMesh, stress: &ProjectedStress, cell: CellId, rule: &SquareRule) -> f64 {
    let h = mesh.h(cell);
    let mut sum = 0.0;
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        let d = stress.divergence(*p, h);
        sum += w * (d[0] * d[0] + d[1] * d[1]);
    }
    (sum * h * h).sqrt()
}

fn local_of(mesh: &QuadMesh, cell: CellId, x: [f64; 2]) -> [f64; 2] {
    let o = mesh.cell_origin(cell);
    let h = mesh.h(cell);
    [(x[0] - o[0]) / h, (x[1] - o[1]) / h]
}

/// Squared L² norm of `½(σ_T − σ_N)n` over the part of the edge of `cell`
/// in direction `dir` between edge parameters `t0` and `t1`.
fn jump_squared(
    mesh: &QuadMesh,
    stresses: &[ProjectedStress],
    cell: CellId,
    other: CellId,
    dir: Direction,
    (t0, t1): (f64, f64),
    line: &GaussRule,
) -> f64 {
    let h = mesh.h(cell);
    let n = dir.normal();
    let mut sum = 0.0;
    for (t, w) in line.on_interval(t0, t1) {
        let p = dir.edge_point(t);
        let x = mesh.map_point(cell, p);
        let s = stresses[cell].value(p) - stresses[other].value(local_of(mesh, other, x));
        let j = s.apply(n);
        sum += w * h * 0.25 * (j[0] * j[0] + j[1] * j[1]);
    }
    sum
}

/// `‖σ_h n − g‖` on a boundary edge, with fixed components dropped.
fn boundary_squared(space: &Q2Space, stress: &ProjectedStress, cell: CellId, dir: Direction, line: &GaussRule) -> f64 {
    let mesh = space.mesh();
    let bc: &BoundaryConditions = space.boundary_conditions();
    let edge = space.boundary_edge(cell, dir).expect("boundary edge");
    let h = mesh.h(cell);
    let n = dir.normal();
    let (a, b) = edge.span;
    let (fixed, breaks) = match edge.side {
        Some(side) => (bc.fixed_on_segment(side, a, b, 1e-12 * (b - a)), bc.breakpoints(side, a, b)),
        None => ([false; 2], Vec::new()),
    };
    if fixed[0] && fixed[1] {
        return 0.0;
    }
    let mut cuts = vec![a];
    cuts.extend(breaks);
    cuts.push(b);
    let mut sum = 0.0;
    for piece in cuts.windows(2) {
        let mid = 0.5 * (piece[0] + piece[1]);
        let g = edge.side.map_or([0.0; 2], |side| bc.traction_at(side, mid));
        let (t0, t1) = ((piece[0] - a) / (b - a), (piece[1] - a) / (b - a));
        for (t, w) in line.on_interval(t0, t1) {
            let tr = stress.value(dir.edge_point(t)).apply(n);
            let r = [if fixed[0] { 0.0 } else { tr[0] - g[0] }, if fixed[1] { 0.0 } else { tr[1] - g[1] }];
            sum += w * h * (r[0] * r[0] + r[1] * r[1]);
        }
    }
    sum
}

/// `‖½[σ_h n]‖` over interior edges and `‖σ_h n − g‖` over boundary edges,
/// combined as one L² norm over `∂T`.
pub fn edge_residual(space: &Q2Space, stresses: &[ProjectedStress], cell: CellId, line: &GaussRule) -> f64 {
    let mesh = space.mesh();
    let mut sum = 0.0;
    for dir in Direction::ALL {
        sum += match mesh.neighbor(cell, dir) {
            Neighbor::Boundary => boundary_squared(space, &stresses[cell], cell, dir, line),
            Neighbor::Same(n) | Neighbor::Coarser(n) => jump_squared(mesh, stresses, cell, n, dir, (0.0, 1.0), line),
            Neighbor::Finer(fine) => {
                // Sub-edge k covers the parameter range [k/2, (k+1)/2] of this edge.
                let mut s = 0.0;
                for f in fine {
                    let mid = mesh.map_point(f, dir.opposite().edge_point(0.5));
                    let t = if dir.is_vertical() { local_of(mesh, cell, mid)[1] } else { local_of(mesh, cell, mid)[0] };
                    let range = if t < 0.5 { (0.0, 0.5) } else { (0.5, 1.0) };
                    s += jump_squared(mesh, stresses, cell, f, dir, range, line);
                }
                s
            }
        };
    }
    sum.sqrt()
}
