//! Bi-quadratic Lagrange shape functions on the reference square `[0, 1]²`.

/// 1D quadratic Lagrange basis with nodes at 0, 1/2, 1.
pub fn lagrange2(t: f64) -> [f64; 3] {
    [2.0 * (t - 0.5) * (t - 1.0), 4.0 * t * (1.0 - t), 2.0 * t * (t - 0.5)]
}

pub fn lagrange2_deriv(t: f64) -> [f64; 3] {
    [4.0 * t - 3.0, 4.0 - 8.0 * t, 4.0 * t - 1.0]
}

/// Values of the nine shape functions, node `b * 3 + a`.
pub fn shape(p: [f64; 2]) -> [f64; 9] {
    let lx = lagrange2(p[0]);
    let ly = lagrange2(p[1]);
    std::array::from_fn(|k| lx[k % 3] * ly[k / 3])
}

/// Reference gradients `(∂/∂ξ, ∂/∂η)` of the nine shape functions.
pub fn shape_grad(p: [f64; 2]) -> [[f64; 2]; 9] {
    let lx = lagrange2(p[0]);
    let ly = lagrange2(p[1]);
    let dx = lagrange2_deriv(p[0]);
    let dy = lagrange2_deriv(p[1]);
    std::array::from_fn(|k| [dx[k % 3] * ly[k / 3], lx[k % 3] * dy[k / 3]])
}

/// Reference coordinates of local node `k`.
pub fn node_point(k: usize) -> [f64; 2] {
    [0.5 * (k % 3) as f64, 0.5 * (k / 3) as f64]
}
