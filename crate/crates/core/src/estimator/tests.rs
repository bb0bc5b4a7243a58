use super::*;
use crate::fem::{
    assemble, solve, BoundaryConditions, EdgeSelector, NodeSelector, Prescribed, Side, SolverConfig, TabulatedTensors, UniformTensor,
};
use crate::laminate::{params_from_stress, Multiplier};
use crate::mesh::{uniform_mesh, Cell, Rect};
use crate::tensor::VoigtTensor;

const MAT: IsotropicMaterial = IsotropicMaterial { lam: 1.0, mu: 1.0 };

fn hanging_mesh() -> QuadMesh {
    let m = uniform_mesh(Rect::unit_square(), 2).unwrap();
    let m = m.refine(&[m.find(&Cell::new(2, 1, 1)).unwrap(), m.find(&Cell::new(2, 2, 2)).unwrap()]);
    let m = m.refine(&[m.find(&Cell::new(3, 3, 3)).unwrap()]);
    assert!(m.num_hanging_nodes() > 0);
    m
}

/// Full-material laminate aligned with a constant stress.
fn aligned_design(mesh: &QuadMesh, nq: usize, sigma: &Sym2) -> DesignState {
    let p = params_from_stress(sigma, Multiplier { l: 1e-6 }, &MAT);
    assert_eq!(p.theta, 1.0);
    let n = mesh.num_cells() * nq;
    DesignState::from_parts(nq, vec![p.alpha; n], vec![p.m; n], vec![1.0; mesh.num_cells()], None)
}

#[test]
fn quartic_reproduces_polynomials() {
    let mesh = uniform_mesh(Rect::unit_square(), 1).unwrap();
    let space = Q2Space::new(&mesh, &BoundaryConditions::new()).unwrap();
    let f = |x: [f64; 2]| [1.0 + x[0] * x[0] * x[1] - 2.0 * x[1] * x[1], x[0] * x[1] * x[1] * x[0]];
    let u = DisplacementField::interpolate(&space, f);
    let PatchLookup::Patch(p) = mesh.sibling_patch(0) else { panic!("patch expected") };
    let q = build_patch_quartic(&mesh, &u, &p);
    for k in 0..40 {
        let x = [(k as f64 * 0.377) % 1.0, (k as f64 * 0.619) % 1.0];
        let (a, b) = (q.value(x), f(x));
        assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
    }
    // Bi-quartic data is reproduced on the whole patch, and interpolation is idempotent.
    let g = |x: [f64; 2]| [x[0].powi(4) * x[1].powi(3) - x[1].powi(4), 0.5 * x[0].powi(3) * x[1]];
    let qg = PatchQuartic::from_fn([0.0, 0.0], 1.0, g);
    let again = PatchQuartic::from_fn([0.0, 0.0], 1.0, |x| qg.value(x));
    for k in 0..40 {
        let x = [(k as f64 * 0.271) % 1.0, (k as f64 * 0.733) % 1.0];
        let (a, b) = (qg.value(x), g(x));
        assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        let c = again.value(x);
        assert!((a[0] - c[0]).abs() < 1e-12 && (a[1] - c[1]).abs() < 1e-12);
        let gr = qg.gradient(x);
        let exact = [[4.0 * x[0].powi(3) * x[1].powi(3), 3.0 * x[0].powi(4) * x[1].powi(2) - 4.0 * x[1].powi(3)], [1.5 * x[0] * x[0] * x[1], 0.5 * x[0].powi(3)]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((gr[i][j] - exact[i][j]).abs() < 1e-11);
            }
        }
    }
}

#[test]
fn quartic_interpolation_order() {
    let f = |x: [f64; 2]| [x[0].sin() * x[1].sin(), 0.0];
    let err = |size: f64| {
        let q = PatchQuartic::from_fn([0.1, 0.2], size, f);
        (0..100)
            .map(|k| {
                let x = [0.1 + size * ((k % 10) as f64 + 0.37) / 10.0, 0.2 + size * ((k / 10) as f64 + 0.61) / 10.0];
                (q.value(x)[0] - f(x)[0]).abs()
            })
            .fold(0.0, f64::max)
    };
    let (e1, e2, e3) = (err(0.5), err(0.25), err(0.125));
    assert!(e1 > 0.0);
    assert!((e1 / e2).log2() >= 3.0 && (e2 / e3).log2() >= 3.0, "{e1} {e2} {e3}");
}

#[test]
fn cell_residual_of_manufactured_field() {
    let mesh = uniform_mesh(Rect::unit_square(), 2).unwrap();
    let space = Q2Space::new(&mesh, &BoundaryConditions::new()).unwrap();
    let u = DisplacementField::interpolate(&space, |x| [x[0] * x[0], 0.0]);
    let field = UniformTensor(VoigtTensor::isotropic(0.0, 1.0));
    let stresses = project_stresses(&space, &u, &field);
    let rule = SquareRule::new(5);
    for cell in 0..mesh.num_cells() {
        // σ11 = 4x, so div σ = (4, 0).
        assert!((cell_residual(&mesh, &stresses[cell], cell, &rule) - 4.0 * 0.25).abs() < 1e-12);
    }
    let lin = DisplacementField::interpolate(&space, |x| [0.3 * x[0] - x[1], 0.2 * x[1]]);
    let s = project_stresses(&space, &lin, &UniformTensor(MAT.tensor()));
    assert!((0..mesh.num_cells()).all(|c| cell_residual(&mesh, &s[c], c, &rule) < 1e-12));
}

#[test]
fn cell_residual_converges_with_refinement() {
    let f = |x: [f64; 2]| [(2.0 * x[0]).sin() * x[1], (x[0] * x[1]).cos()];
    // div σ = 2∇(div u) + Δu for λ = μ = 1.
    let div = |x: [f64; 2]| {
        let (a, b) = (x[0], x[1]);
        let g = [
            -4.0 * (2.0 * a).sin() * b - (a * b).sin() - a * b * (a * b).cos(),
            2.0 * (2.0 * a).cos() - a * a * (a * b).cos(),
        ];
        let lap = [-4.0 * (2.0 * a).sin() * b, -(a * a + b * b) * (a * b).cos()];
        (2.0 * g[0] + lap[0]).hypot(2.0 * g[1] + lap[1])
    };
    let rule = SquareRule::new(5);
    let mut prev: Option<f64> = None;
    for level in 1..5 {
        let mesh = uniform_mesh(Rect::unit_square(), level).unwrap();
        let space = Q2Space::new(&mesh, &BoundaryConditions::new()).unwrap();
        let u = DisplacementField::interpolate(&space, f);
        let s = project_stresses(&space, &u, &UniformTensor(MAT.tensor()));
        let (cell, _) = mesh.locate([0.3, 0.6]).unwrap();
        let h = mesh.h(cell);
        let centre = mesh.map_point(cell, [0.5, 0.5]);
        let err = (cell_residual(&mesh, &s[cell], cell, &rule) / h - div(centre)).abs();
        if let Some(p) = prev {
            assert!(err < 0.75 * p, "{p} -> {err}");
        }
        prev = Some(err);
    }
}

#[test]
fn edge_residual_hand_values() {
    let line = GaussRule::new(5);
    // Single element, no boundary conditions, σ = diag(3, 1).
    let mesh = uniform_mesh(Rect::unit_square(), 0).unwrap();
    let space = Q2Space::new(&mesh, &BoundaryConditions::new()).unwrap();
    let u = DisplacementField::interpolate(&space, |x| [x[0], 0.0]);
    let s = project_stresses(&space, &u, &UniformTensor(MAT.tensor()));
    assert!((edge_residual(&space, &s, 0, &line) - 20f64.sqrt()).abs() < 1e-12);

    // Tensor jump across x = 1/2: σ = diag(3, 1) on the left, diag(4, 2) on the right.
    let mesh = uniform_mesh(Rect::unit_square(), 1).unwrap();
    let space = Q2Space::new(&mesh, &BoundaryConditions::new()).unwrap();
    let u = DisplacementField::interpolate(&space, |x| [x[0], 0.0]);
    let field = |cell: usize, _q: usize| {
        if mesh.cell_origin(cell)[0] < 0.25 {
            VoigtTensor::isotropic(1.0, 1.0)
        } else {
            VoigtTensor::isotropic(2.0, 1.0)
        }
    };
    let s = project_stresses(&space, &u, &field);
    let (cell, _) = mesh.locate([0.1, 0.1]).unwrap();
    assert!((edge_residual(&space, &s, cell, &line) - 5.125f64.sqrt()).abs() < 1e-12);

    // Clamped bottom and loaded top remove those contributions exactly.
    let bc = BoundaryConditions::new().clamp(EdgeSelector::whole(Side::Bottom)).load(EdgeSelector::whole(Side::Top), [0.0, 1.0]);
    let mesh = uniform_mesh(Rect::unit_square(), 0).unwrap();
    let space = Q2Space::new(&mesh, &bc).unwrap();
    let u = DisplacementField::interpolate(&space, |x| [x[0], 0.0]);
    let s = project_stresses(&space, &u, &UniformTensor(MAT.tensor()));
    assert!((edge_residual(&space, &s, 0, &line) - 18f64.sqrt()).abs() < 1e-12);
}

/// Constant stress σ = diag(2, 1) + shear; Dirichlet data on left and bottom,
/// exact tractions on right and top.
fn patch_setup(mesh: &QuadMesh) -> (BoundaryConditions, Sym2, [[f64; 2]; 2]) {
    let sigma = Sym2::new(2.0, 1.0, 0.4);
    let c_inv = MAT.tensor().0.try_inverse().unwrap();
    let eps = Sym2::from_strain_voigt(&(c_inv * sigma.stress_voigt()));
    let grad = [[eps.xx, eps.xy], [eps.xy, eps.yy]];
    let _ = mesh;
    let affine = Prescribed::Affine { gradient: grad, offset: [0.0, 0.0] };
    let bc = BoundaryConditions::new()
        .fix(NodeSelector::Edge(EdgeSelector::whole(Side::Left)), [true, true], affine)
        .fix(NodeSelector::Edge(EdgeSelector::whole(Side::Bottom)), [true, true], affine)
        .load(EdgeSelector::whole(Side::Right), sigma.apply([1.0, 0.0]))
        .load(EdgeSelector::whole(Side::Top), sigma.apply([0.0, 1.0]));
    (bc, sigma, grad)
}

#[test]
fn patch_test_has_vanishing_indicators() {
    let mesh = hanging_mesh();
    let (bc, sigma, grad) = patch_setup(&mesh);
    let space = Q2Space::new(&mesh, &bc).unwrap();
    let design = aligned_design(&mesh, space.points_per_element(), &sigma);
    let tensors = design.tensors(&MAT);
    let sys = assemble(&space, &tensors);
    let (u, _) = solve(&space, &sys, None, &SolverConfig::default()).unwrap();
    let exact = DisplacementField::interpolate(&space, |x| {
        [grad[0][0] * x[0] + grad[0][1] * x[1], grad[1][0] * x[0] + grad[1][1] * x[1]]
    });
    assert!(u.max_abs_difference(&exact) < 1e-10);
    let ind = indicators(&space, &u, &tensors, &design, &MAT);
    assert!(ind.total() <= 1e-9, "Ση = {}", ind.total());
    for c in &ind.cells {
        for v in [c.rho_u_cell, c.rho_u_edge, c.rho_m, c.omega_u_cell, c.omega_u_edge, c.omega_m, c.omega_theta] {
            assert!(v <= 1e-9, "{c:?}");
        }
    }
}

#[test]
fn primal_weight_equals_quartic_deficit() {
    let mesh = uniform_mesh(Rect::unit_square(), 1).unwrap();
    let space = Q2Space::new(&mesh, &BoundaryConditions::new()).unwrap();
    let f = |x: [f64; 2]| [x[0].powi(4) + x[0] * x[1], x[1].powi(3) * x[0] * x[0]];
    let u = DisplacementField::interpolate(&space, f);
    let PatchLookup::Patch(p) = mesh.sibling_patch(0) else { panic!() };
    let q = build_patch_quartic(&mesh, &u, &p);
    let rule = SquareRule::new(5);
    let fine = SquareRule::new(8);
    for cell in 0..4 {
        let (w, we) = primal_weights(&mesh, &u, &q, cell, &rule);
        // Independent: deficit of the Q2 interpolant against f with a finer rule.
        let h = mesh.h(cell);
        let mut sum = 0.0;
        for (pt, wt) in fine.points.iter().zip(&fine.weights) {
            let a = u.value_at(&mesh, cell, *pt);
            let b = f(mesh.map_point(cell, *pt));
            sum += wt * ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2));
        }
        assert!((w - (sum * h * h).sqrt()).abs() < 1e-12, "{w}");
        assert!(w > 0.0 && we > 0.0);
    }
    let quad = DisplacementField::interpolate(&space, |x| [x[0] * x[1], x[1] * x[1] - x[0]]);
    let q2 = build_patch_quartic(&mesh, &quad, &p);
    let (w, we) = primal_weights(&mesh, &quad, &q2, 0, &rule);
    assert!(w < 1e-12 && we < 1e-12);
}

#[test]
fn density_weight_examples() {
    let mesh = uniform_mesh(Rect::unit_square(), 1).unwrap();
    let PatchLookup::Patch(p) = mesh.sibling_patch(0) else { panic!() };
    let mut theta = vec![0.0; 4];
    for (slot, &e) in p.elements.iter().enumerate() {
        theta[e] = [0.2, 0.2, 0.8, 0.8][slot];
    }
    assert!((control_weight_theta(&mesh, &theta, &p, p.elements[0]) - 0.3).abs() < 1e-14);
    let flat = vec![0.4; 4];
    assert!(control_weight_theta(&mesh, &flat, &p, p.elements[3]) < 1e-15);
}

#[test]
fn m_weight_vanishes_for_biquadratic_fields() {
    let mesh = uniform_mesh(Rect::unit_square(), 2).unwrap();
    let space = Q2Space::new(&mesh, &BoundaryConditions::new()).unwrap();
    let u = DisplacementField::interpolate(&space, |x| [x[0] * x[0] + 0.3 * x[1], 0.5 * x[0] * x[1] - 0.2 * x[1]]);
    let iso = UniformTensor(MAT.tensor());
    let design = crate::optimizer::update_params(&space, &u, &iso, Multiplier { l: 5.0 }, &MAT);
    for cell in 0..mesh.num_cells() {
        let PatchLookup::Patch(p) = mesh.sibling_patch(cell) else { panic!() };
        let q = build_patch_quartic(&mesh, &u, &p);
        assert!(control_weight_m(&space, &u, &design, Some(&q), &MAT, cell) < 1e-10);
    }
}

#[test]
fn control_residual_matches_energy_derivative() {
    let mesh = uniform_mesh(Rect::unit_square(), 1).unwrap();
    let space = Q2Space::new(&mesh, &BoundaryConditions::new()).unwrap();
    let eps = Sym2::new(0.2, -0.05, 0.07);
    let u = DisplacementField::interpolate(&space, |x| [eps.xx * x[0] + eps.xy * x[1], eps.xy * x[0] + eps.yy * x[1]]);
    let (alpha, m, theta) = (0.3, 0.35, 0.6);
    let nq = space.points_per_element();
    let n = mesh.num_cells() * nq;
    let design = DesignState::from_parts(nq, vec![alpha; n], vec![m; n], vec![theta; mesh.num_cells()], None);
    let (rm, rt) = control_residuals(&space, &u, &design, &MAT, 0);
    let area = mesh.cell_area(0);
    let energy = |m: f64, t: f64| effective_tensor(&LaminateParams { alpha, m, theta: t }, &MAT).energy(&eps) * area;
    let d = 1e-6;
    let fm = (energy(m + d, theta) - energy(m - d, theta)) / (2.0 * d);
    let ft = (energy(m, theta + d) - energy(m, theta - d)) / (2.0 * d);
    assert!(((rm - fm.abs()) / rm).abs() < 1e-5, "{rm} vs {fm}");
    assert!(((rt - ft.abs()) / rt).abs() < 1e-5, "{rt} vs {ft}");
    let zero = DisplacementField::zeros(&space);
    assert_eq!(control_residuals(&space, &zero, &design, &MAT, 0), (0.0, 0.0));
}

fn solved_carrier(mesh: &QuadMesh) -> (Q2Space<'_>, DisplacementField, TabulatedTensors, DesignState) {
    let bc = BoundaryConditions::new().clamp(EdgeSelector::whole(Side::Bottom)).load(EdgeSelector::whole(Side::Top), [1.0, 0.0]);
    let bc: &'static BoundaryConditions = Box::leak(Box::new(bc));
    let space = Q2Space::new(mesh, bc).unwrap();
    let iso = UniformTensor(MAT.tensor());
    let (u, _) = solve(&space, &assemble(&space, &iso), None, &SolverConfig::default()).unwrap();
    let design = crate::optimizer::update_params(&space, &u, &iso, Multiplier { l: 2.0 }, &MAT);
    let tensors = design.tensors(&MAT);
    let (u, _) = solve(&space, &assemble(&space, &tensors), None, &SolverConfig::default()).unwrap();
    (space, u, tensors, design)
}

#[test]
fn indicators_are_nonnegative_and_flag_fallbacks() {
    let mesh = hanging_mesh();
    let (space, u, tensors, design) = solved_carrier(&mesh);
    let ind = indicators(&space, &u, &tensors, &design, &MAT);
    assert!(ind.cells.iter().all(|c| c.eta >= 0.0 && c.terms().iter().all(|t| *t >= 0.0)));
    assert!(ind.total() > 0.0);
    assert!(ind.fallback_count() > 0);
    for c in &ind.cells {
        assert!((c.eta - c.terms().iter().sum::<f64>()).abs() <= 1e-15 * c.eta.max(1.0));
    }
    let root = uniform_mesh(Rect::unit_square(), 0).unwrap();
    let (space, u, tensors, design) = solved_carrier(&root);
    let ind = indicators(&space, &u, &tensors, &design, &MAT);
    assert_eq!(ind.cells[0].source, WeightSource::Unavailable);
    assert_eq!((ind.cells[0].omega_u_cell, ind.cells[0].omega_theta), (0.0, 0.0));
}

#[test]
fn indicators_are_local() {
    let mesh = uniform_mesh(Rect::unit_square(), 3).unwrap();
    let (space, u, tensors, design) = solved_carrier(&mesh);
    let base = indicators(&space, &u, &tensors, &design, &MAT);
    let cell = mesh.find(&Cell::new(3, 2, 4)).unwrap();
    let PatchLookup::Patch(p) = mesh.sibling_patch(cell) else { panic!() };
    // Perturb the node at the patch centre.
    let center = [p.origin[0] + 0.5 * p.size[0], p.origin[1] + 0.5 * p.size[1]];
    let node = (0..mesh.num_nodes()).find(|&n| {
        let x = mesh.node(n);
        (x[0] - center[0]).abs() < 1e-12 && (x[1] - center[1]).abs() < 1e-12
    });
    let node = node.unwrap();
    let mut v = u.clone();
    v.values[2 * node] += 1e-3;
    let changed = indicators(&space, &v, &tensors, &design, &MAT);
    let (lo, hi) = (p.origin, [p.origin[0] + p.size[0], p.origin[1] + p.size[1]]);
    let mut count = 0;
    for c in 0..mesh.num_cells() {
        if (changed.cells[c].eta - base.cells[c].eta).abs() > 1e-14 {
            count += 1;
            let o = mesh.cell_origin(c);
            let h = mesh.h(c);
            let touches = o[0] <= hi[0] + 1e-12 && o[0] + h >= lo[0] - 1e-12 && o[1] <= hi[1] + 1e-12 && o[1] + h >= lo[1] - 1e-12;
            assert!(touches, "cell {c} changed");
        }
    }
    assert!(count >= 4);
}
