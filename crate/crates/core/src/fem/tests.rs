use super::*;
use crate::mesh::{uniform_mesh, Cell, Direction, Neighbor, QuadMesh, Rect};
use crate::tensor::VoigtTensor;
use crate::Error;
use nalgebra::{DMatrix, DVector};

fn iso() -> UniformTensor {
    UniformTensor(VoigtTensor::isotropic(1.0, 1.0))
}

fn hanging_mesh() -> QuadMesh {
    let m = uniform_mesh(Rect::unit_square(), 2).unwrap();
    let m = m.refine(&[m.find(&Cell::new(2, 1, 1)).unwrap(), m.find(&Cell::new(2, 2, 2)).unwrap()]);
    let deep = m.find(&Cell::new(3, 3, 3)).unwrap();
    let m = m.refine(&[deep]);
    assert!(m.num_hanging_nodes() > 0);
    m
}

fn affine_bc(gradient: [[f64; 2]; 2], offset: [f64; 2]) -> BoundaryConditions {
    let mut bc = BoundaryConditions::new();
    for side in [Side::Left, Side::Right, Side::Bottom, Side::Top] {
        bc = bc.fix(NodeSelector::Edge(EdgeSelector::whole(side)), [true, true], Prescribed::Affine { gradient, offset });
    }
    bc
}

fn solve_with(space: &Q2Space, field: &impl TensorField) -> DisplacementField {
    let sys = assemble(space, field);
    solve(space, &sys, None, &SolverConfig::default()).unwrap().0
}

#[test]
fn zero_data_gives_zero_solution() {
    let mesh = uniform_mesh(Rect::unit_square(), 2).unwrap();
    let bc = BoundaryConditions::new().clamp(EdgeSelector::whole(Side::Left)).clamp(EdgeSelector::whole(Side::Right));
    let space = Q2Space::new(&mesh, &bc).unwrap();
    let sys = assemble(&space, &iso());
    assert!(sys.rhs.iter().all(|&v| v == 0.0));
    let u = solve_with(&space, &iso());
    assert!(u.values.iter().all(|&v| v == 0.0));
    assert_eq!(compliance(&space, &u), 0.0);
}

#[test]
fn patch_test_reproduces_linear_field_with_hanging_nodes() {
    let mesh = hanging_mesh();
    let grad = [[0.3, -0.2], [0.5, 0.1]];
    let off = [0.05, -0.02];
    let exact = |x: [f64; 2]| Prescribed::Affine { gradient: grad, offset: off }.eval(x);
    let space = Q2Space::new(&mesh, &affine_bc(grad, off)).unwrap();
    let sys = assemble(&space, &iso());
    assert!(sys.matrix.is_symmetric(1e-13));
    let tight = SolverConfig { tolerance: 1e-14, ..SolverConfig::default() };
    let u = solve(&space, &sys, None, &tight).unwrap().0;
    let reference = DisplacementField::interpolate(&space, exact);
    assert!(u.max_abs_difference(&reference) < 1e-10);

    // Constant stress on every element.
    let s0 = stress_at_qp(&space, &u, &iso(), 0, 0);
    for cell in 0..mesh.num_cells() {
        for q in 0..space.points_per_element() {
            let s = stress_at_qp(&space, &u, &iso(), cell, q);
            assert!((s - s0).frobenius_norm() < 1e-9, "{:?} {:?}", s, s0);
        }
    }
}

#[test]
fn traces_agree_across_hanging_edges() {
    let mesh = hanging_mesh();
    let bc = BoundaryConditions::new()
        .clamp(EdgeSelector::whole(Side::Bottom))
        .load(EdgeSelector::whole(Side::Top), [1.0, 0.3]);
    let space = Q2Space::new(&mesh, &bc).unwrap();
    let u = solve_with(&space, &iso());
    let mut checked = 0;
    for coarse in 0..mesh.num_cells() {
        for dir in Direction::ALL {
            let Neighbor::Finer(fine) = mesh.neighbor(coarse, dir) else { continue };
            for (half, &f) in fine.iter().enumerate() {
                for t in [0.0, 0.13, 0.5, 0.77, 1.0] {
                    let pc = dir.edge_point(0.5 * (half as f64 + t));
                    let pf = dir.opposite().edge_point(t);
                    let a = u.value_at(&mesh, coarse, pc);
                    let b = u.value_at(&mesh, f, pf);
                    assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 0);
}

#[test]
fn uniaxial_tension_compliance_in_closed_form() {
    // Rollers on left and bottom, unit traction on the right edge. The exact
    // solution is linear: u = (3x/8, -y/8) for λ = μ = 1.
    let bc = BoundaryConditions::new()
        .fix(NodeSelector::Edge(EdgeSelector::whole(Side::Left)), [true, false], Prescribed::Zero)
        .fix(NodeSelector::Edge(EdgeSelector::whole(Side::Bottom)), [false, true], Prescribed::Zero)
        .load(EdgeSelector::whole(Side::Right), [1.0, 0.0]);
    for mesh in [uniform_mesh(Rect::unit_square(), 0).unwrap(), hanging_mesh()] {
        let space = Q2Space::new(&mesh, &bc).unwrap();
        let u = solve_with(&space, &iso());
        let j = compliance(&space, &u);
        assert!((j - 0.375).abs() < 1e-10, "J = {j}");
        let reference = DisplacementField::interpolate(&space, |x| [0.375 * x[0], -0.125 * x[1]]);
        assert!(u.max_abs_difference(&reference) < 1e-10);
    }
}

/// Independent dense assembly of one 9-node element with a 4-point rule.
fn dense_element(lambda: f64, mu: f64) -> DMatrix<f64> {
    let d = nalgebra::Matrix3::new(lambda + 2.0 * mu, lambda, 0.0, lambda, lambda + 2.0 * mu, 0.0, 0.0, 0.0, mu);
    let gp = [0.0694318442029737, 0.3300094782075719, 0.6699905217924281, 0.9305681557970263];
    let gw = [0.1739274225687269, 0.3260725774312731, 0.3260725774312731, 0.1739274225687269];
    let l = |t: f64| [2.0 * (t - 0.5) * (t - 1.0), 4.0 * t * (1.0 - t), 2.0 * t * (t - 0.5)];
    let dl = |t: f64| [4.0 * t - 3.0, 4.0 - 8.0 * t, 4.0 * t - 1.0];
    let mut k = DMatrix::zeros(18, 18);
    for (x, wx) in gp.iter().zip(gw) {
        for (y, wy) in gp.iter().zip(gw) {
            let mut b = nalgebra::DMatrix::zeros(3, 18);
            for node in 0..9 {
                let (a, c) = (node % 3, node / 3);
                let nx = dl(*x)[a] * l(*y)[c];
                let ny = l(*x)[a] * dl(*y)[c];
                b[(0, 2 * node)] = nx;
                b[(1, 2 * node + 1)] = ny;
                b[(2, 2 * node)] = ny;
                b[(2, 2 * node + 1)] = nx;
            }
            let dd = DMatrix::from_fn(3, 3, |i, j| d[(i, j)]);
            k += b.transpose() * dd * b * (wx * wy);
        }
    }
    k
}

#[test]
fn single_element_matches_dense_oracle() {
    let mesh = uniform_mesh(Rect::unit_square(), 0).unwrap();
    let bc = BoundaryConditions::new()
        .fix(NodeSelector::Edge(EdgeSelector::whole(Side::Left)), [true, false], Prescribed::Zero)
        .fix(NodeSelector::Edge(EdgeSelector::whole(Side::Bottom)), [false, true], Prescribed::Zero)
        .load(EdgeSelector::new(Side::Right, 0.0, 1.0), [1.0, 0.0]);
    let space = Q2Space::new(&mesh, &bc).unwrap();
    let u = solve_with(&space, &iso());
    let j = compliance(&space, &u);

    // Oracle: dense system with rows/cols of fixed dofs removed.
    let k = dense_element(1.0, 1.0);
    let mut f = DVector::zeros(18);
    // Right edge nodes 2, 5, 8 with Simpson weights for a constant traction.
    for (node, w) in [(2, 1.0 / 6.0), (5, 4.0 / 6.0), (8, 1.0 / 6.0)] {
        f[2 * node] = w;
    }
    let fixed: Vec<usize> = (0..18)
        .filter(|&d| {
            let node = d / 2;
            (d % 2 == 0 && node % 3 == 0) || (d % 2 == 1 && node / 3 == 0)
        })
        .collect();
    let free: Vec<usize> = (0..18).filter(|d| !fixed.contains(d)).collect();
    let kr = DMatrix::from_fn(free.len(), free.len(), |i, jj| k[(free[i], free[jj])]);
    let fr = DVector::from_fn(free.len(), |i, _| f[free[i]]);
    let ur = kr.lu().solve(&fr).unwrap();
    let j_oracle = fr.dot(&ur);
    assert!(((j - j_oracle) / j_oracle).abs() < 1e-10, "{j} vs {j_oracle}");

    // Library element matrix agrees entrywise with the oracle.
    let ke = element_stiffness(1.0, space.rule(), |_| VoigtTensor::isotropic(1.0, 1.0));
    for a in 0..18 {
        for b in 0..18 {
            assert!((ke[a][b] - k[(a, b)]).abs() < 1e-12, "{a} {b} {} {}", ke[a][b], k[(a, b)]);
        }
    }
}

#[test]
fn galerkin_identity_with_varying_tensor() {
    let mesh = hanging_mesh();
    let bc = BoundaryConditions::new()
        .clamp(EdgeSelector::whole(Side::Left))
        .load(EdgeSelector::new(Side::Right, 0.3, 0.6), [0.2, -1.0]);
    let space = Q2Space::new(&mesh, &bc).unwrap();
    let field = |cell: usize, q: usize| {
        let t = 0.1 + 0.9 * ((cell * 7 + q * 3) % 11) as f64 / 10.0;
        VoigtTensor::orthotropic(3.0 * t, 1.0 + t, 0.5 * t, 0.01 + 0.3 * t).rotated(0.2 * q as f64)
    };
    let u = solve_with(&space, &field);
    let l = compliance(&space, &u);
    let a = energy(&space, &field, &u);
    assert!(l > 0.0);
    assert!(((l - a) / l).abs() <= 1e-8, "l = {l}, a = {a}");
}

#[test]
fn stress_of_linear_field() {
    let mesh = uniform_mesh(Rect::unit_square(), 1).unwrap();
    let space = Q2Space::new(&mesh, &BoundaryConditions::new()).unwrap();
    let u = DisplacementField::interpolate(&space, |x| [x[0], -x[1]]);
    let c = VoigtTensor::isotropic(1.0, 1.0);
    for cell in 0..mesh.num_cells() {
        let s = stress_at(&mesh, &u, &c, cell, [0.3, 0.8]);
        assert!((s.xx - 2.0).abs() < 1e-13 && (s.yy + 2.0).abs() < 1e-13 && s.xy.abs() < 1e-13);
    }
    let zero = DisplacementField::zeros(&space);
    assert_eq!(stress_at(&mesh, &zero, &c, 0, [0.5, 0.5]), crate::tensor::Sym2::ZERO);
}

#[test]
fn coercivity_violation_is_reported() {
    let mesh = uniform_mesh(Rect::unit_square(), 1).unwrap();
    let bc = BoundaryConditions::new().clamp(EdgeSelector::whole(Side::Left)).load(EdgeSelector::whole(Side::Right), [1.0, 0.0]);
    let space = Q2Space::new(&mesh, &bc).unwrap();
    let bad = UniformTensor(VoigtTensor::orthotropic(-1.0, -1.0, 0.0, -0.1));
    let sys = assemble(&space, &bad);
    let err = solve(&space, &sys, None, &SolverConfig::default()).unwrap_err();
    assert!(matches!(err, Error::NotPositiveDefinite { .. }));
}

#[test]
fn partial_strip_load_integrates_exactly() {
    // Total force of a unit traction on [0.4, 0.6] is 0.2 regardless of the mesh.
    let bc = BoundaryConditions::new().load(EdgeSelector::new(Side::Right, 0.4, 0.6), [0.0, -1.0]);
    for level in 0..4 {
        let mesh = uniform_mesh(Rect::new([0.0, 0.0], [2.0, 1.0]), level).unwrap();
        let space = Q2Space::new(&mesh, &bc).unwrap();
        let total: f64 = space.load_vector().iter().skip(1).step_by(2).sum();
        assert!((total + 0.2).abs() < 1e-14);
    }
}
