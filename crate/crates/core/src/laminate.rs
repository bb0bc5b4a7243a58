//! Rank-2 sequential laminates of an isotropic material and void.

use crate::error::{Error, Result};
use crate::mesh::QuadMesh;
use crate::tensor::{Sym2, VoigtTensor};
use nalgebra::{Matrix3, Vector3};
use std::f64::consts::{FRAC_PI_2, PI};

/// Lower clamp for `m`, `1 - m` and `θ`.
pub const PARAM_EPS: f64 = 1e-3;
/// Reference-frame shear entry of every effective tensor.
pub const SHEAR_REGULARIZATION: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropicMaterial {
    pub lam: f64,
    pub mu: f64,
}

impl IsotropicMaterial {
    pub fn new(lam: f64, mu: f64) -> Result<Self> {
        if !(mu > 0.0) || !(lam >= 0.0) || !lam.is_finite() || !mu.is_finite() {
            return Err(Error::InvalidArgument(format!("Lamé parameters need μ > 0, λ ≥ 0 (got λ = {lam}, μ = {mu})")));
        }
        Ok(Self { lam, mu })
    }

    pub fn kappa(&self) -> f64 {
        self.lam + self.mu
    }

    pub fn tensor(&self) -> VoigtTensor {
        VoigtTensor::isotropic(self.lam, self.mu)
    }

    /// `A⁻¹σ : σ` for the plane isotropic law.
    pub fn complementary_energy(&self, sigma: &Sym2) -> f64 {
        let f2 = sigma.ddot(sigma);
        let tr = sigma.trace();
        (f2 - self.lam / (2.0 * self.kappa()) * tr * tr) / (2.0 * self.mu)
    }

    /// `sqrt((2μ+λ) / (4μ(μ+λ)))`, so that `θ = k·(|λ1|+|λ2|)/√l` before clamping.
    pub fn density_factor(&self) -> f64 {
        ((2.0 * self.mu + self.lam) / (4.0 * self.mu * (self.mu + self.lam))).sqrt()
    }
}

impl Default for IsotropicMaterial {
    fn default() -> Self {
        Self { lam: 1.0, mu: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaminateParams {
    pub alpha: f64,
    pub m: f64,
    pub theta: f64,
}

impl LaminateParams {
    /// Clamps `m`, `θ` and normalizes `α`.
    pub fn new(alpha: f64, m: f64, theta: f64) -> Self {
        Self { alpha: normalize_angle(alpha), m: clamp_m(m), theta: clamp_theta(theta) }
    }
}

/// Maps an angle into `[-π/2, π/2)`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = (a + FRAC_PI_2).rem_euclid(PI) - FRAC_PI_2;
    if r >= FRAC_PI_2 {
        -FRAC_PI_2
    } else {
        r
    }
}

pub fn clamp_m(m: f64) -> f64 {
    m.clamp(PARAM_EPS, 1.0 - PARAM_EPS)
}

pub fn clamp_theta(theta: f64) -> f64 {
    theta.clamp(PARAM_EPS, 1.0)
}

/// Lagrange multiplier of the volume constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Multiplier {
    pub l: f64,
}

impl Multiplier {
    pub fn new(l: f64) -> Result<Self> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::InvalidArgument(format!("multiplier must be positive, got {l}")));
        }
        Ok(Self { l })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigen2 {
    pub lambda1: f64,
    pub lambda2: f64,
    pub tau1: [f64; 2],
    pub tau2: [f64; 2],
}

impl Eigen2 {
    /// Angle of `τ1` in `[-π/2, π/2)`.
    pub fn angle(&self) -> f64 {
        normalize_angle(self.tau1[1].atan2(self.tau1[0]))
    }
}

/// Closed-form eigendecomposition with `|λ1| ≥ |λ2|` (ties: `λ1 ≥ λ2`).
pub fn eig_sym2(s: &Sym2) -> Eigen2 {
    let mean = 0.5 * (s.xx + s.yy);
    let half = 0.5 * (s.xx - s.yy);
    let r = half.hypot(s.xy);
    let (plus, minus) = (mean + r, mean - r);
    let (lambda1, lambda2) = if plus.abs() >= minus.abs() { (plus, minus) } else { (minus, plus) };
    let mut tau1 = if r == 0.0 {
        [1.0, 0.0]
    } else {
        // Two null-space candidates of (S - λ1 I); the longer one is well conditioned.
        let a = [s.xy, lambda1 - s.xx];
        let b = [lambda1 - s.yy, s.xy];
        let v = if a[0].hypot(a[1]) >= b[0].hypot(b[1]) { a } else { b };
        let n = v[0].hypot(v[1]);
        [v[0] / n, v[1] / n]
    };
    if tau1[0] < 0.0 || (tau1[0] == 0.0 && tau1[1] < 0.0) {
        tau1 = [-tau1[0], -tau1[1]];
    }
    tau1 = [tau1[0] + 0.0, tau1[1] + 0.0];
    Eigen2 { lambda1, lambda2, tau1, tau2: [-tau1[1], tau1[0]] }
}

/// Density from a stress before element averaging.
pub fn density_from_stress(sigma: &Sym2, l: Multiplier, mat: &IsotropicMaterial) -> f64 {
    let e = eig_sym2(sigma);
    density_from_sum(e.lambda1.abs() + e.lambda2.abs(), l, mat)
}

/// `θ` from `S = |λ1| + |λ2|`.
pub fn density_from_sum(s: f64, l: Multiplier, mat: &IsotropicMaterial) -> f64 {
    clamp_theta((mat.density_factor() * s / l.l.sqrt()).min(1.0))
}

/// Optimal laminate parameters for a given stress.
pub fn params_from_stress(sigma: &Sym2, l: Multiplier, mat: &IsotropicMaterial) -> LaminateParams {
    let e = eig_sym2(sigma);
    let s = e.lambda1.abs() + e.lambda2.abs();
    if s == 0.0 {
        return LaminateParams { alpha: 0.0, m: 0.5, theta: PARAM_EPS };
    }
    LaminateParams { alpha: e.angle(), m: clamp_m(e.lambda2.abs() / s), theta: density_from_sum(s, l, mat) }
}

struct Rational {
    d: f64,
    n11: f64,
    n22: f64,
    n12: f64,
}

fn rational(m: f64, theta: f64, mat: &IsotropicMaterial) -> Rational {
    let (k, mu, lam) = (mat.kappa(), mat.mu, mat.lam);
    let kmu = 4.0 * k * mu;
    Rational {
        d: kmu * m * (1.0 - m) * theta * theta + (k + mu).powi(2) * (1.0 - theta),
        n11: kmu * (k + mu) * theta * (1.0 - theta * (1.0 - m)) * (1.0 - m),
        n22: kmu * (k + mu) * theta * (1.0 - theta * m) * m,
        n12: kmu * lam * theta * theta * m * (1.0 - m),
    }
}

/// Unrotated laminate tensor `C̄[m, θ]` with the given shear entry.
pub fn reference_tensor_with_shear(m: f64, theta: f64, mat: &IsotropicMaterial, shear: f64) -> VoigtTensor {
    let r = rational(m, theta, mat);
    assert!(r.d > 0.0, "laminate denominator must be positive (m = {m}, θ = {theta})");
    VoigtTensor::orthotropic(r.n11 / r.d, r.n22 / r.d, r.n12 / r.d, shear)
}

pub fn reference_tensor(m: f64, theta: f64, mat: &IsotropicMaterial) -> VoigtTensor {
    reference_tensor_with_shear(m, theta, mat, SHEAR_REGULARIZATION)
}

/// `C*[α, m, θ]`: the regularized reference tensor rotated by `α`.
pub fn effective_tensor(p: &LaminateParams, mat: &IsotropicMaterial) -> VoigtTensor {
    reference_tensor(p.m, p.theta, mat).rotated(p.alpha)
}

/// Partial derivatives `(∂C̄/∂m, ∂C̄/∂θ)` in the reference frame; shear entries are zero.
pub fn tensor_derivatives(m: f64, theta: f64, mat: &IsotropicMaterial) -> (VoigtTensor, VoigtTensor) {
    let (k, mu, lam) = (mat.kappa(), mat.mu, mat.lam);
    let kmu = 4.0 * k * mu;
    let r = rational(m, theta, mat);
    let dd_m = kmu * (1.0 - 2.0 * m) * theta * theta;
    let dd_t = 2.0 * kmu * m * (1.0 - m) * theta - (k + mu).powi(2);
    let dn11_m = kmu * (k + mu) * theta * (2.0 * theta * (1.0 - m) - 1.0);
    let dn11_t = kmu * (k + mu) * (1.0 - m) * (1.0 - 2.0 * theta * (1.0 - m));
    let dn22_m = kmu * (k + mu) * theta * (1.0 - 2.0 * theta * m);
    let dn22_t = kmu * (k + mu) * m * (1.0 - 2.0 * theta * m);
    let dn12_m = kmu * lam * theta * theta * (1.0 - 2.0 * m);
    let dn12_t = 2.0 * kmu * lam * theta * m * (1.0 - m);
    let q = |n: f64, dn: f64, dd: f64| (dn * r.d - n * dd) / (r.d * r.d);
    (
        VoigtTensor::orthotropic(q(r.n11, dn11_m, dd_m), q(r.n22, dn22_m, dd_m), q(r.n12, dn12_m, dd_m), 0.0),
        VoigtTensor::orthotropic(q(r.n11, dn11_t, dd_t), q(r.n22, dn22_t, dd_t), q(r.n12, dn12_t, dd_t), 0.0),
    )
}

/// Complementary energy `{C*}⁻¹σ : σ` of the optimal laminate at density `θ`.
pub fn hs_energy_density(sigma: &Sym2, theta: f64, mat: &IsotropicMaterial) -> f64 {
    let base = mat.complementary_energy(sigma);
    if theta >= 1.0 {
        return base;
    }
    let e = eig_sym2(sigma);
    let s = e.lambda1.abs() + e.lambda2.abs();
    let (k, mu) = (mat.kappa(), mat.mu);
    base + (k + mu) * (1.0 - theta) / (4.0 * k * mu * theta) * s * s
}

/// Starting point of [`recover_params_newton`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonGuess {
    pub alpha: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl NewtonGuess {
    /// Eigenvalue guesses from `C̄[m, θ]` applied to the strain in the frame of `p.alpha`.
    pub fn from_params(strain: &Sym2, p: &LaminateParams, mat: &IsotropicMaterial) -> Self {
        let local = strain.to_frame(p.alpha);
        let s = reference_tensor(p.m, p.theta, mat).0 * local.strain_voigt();
        Self { alpha: p.alpha, lambda1: s[0], lambda2: s[1] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recovery {
    pub alpha: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub m: f64,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecoveryFailure {
    SingularJacobian,
    NotConverged,
}

pub const NEWTON_MAX_ITERATIONS: usize = 50;
pub const NEWTON_TOLERANCE: f64 = 1e-10;

fn m_of(l1: f64, l2: f64) -> (f64, f64, f64) {
    let s = l1.abs() + l2.abs();
    if s == 0.0 {
        return (0.5, 0.0, 0.0);
    }
    let m = l2.abs() / s;
    if m <= PARAM_EPS || m >= 1.0 - PARAM_EPS {
        return (clamp_m(m), 0.0, 0.0);
    }
    (m, -l2.abs() * l1.signum() / (s * s), l1.abs() * l2.signum() / (s * s))
}

fn newton_residual(strain: &Sym2, theta: f64, mat: &IsotropicMaterial, x: &Vector3<f64>) -> Vector3<f64> {
    let (m, _, _) = m_of(x[1], x[2]);
    let e = strain.to_frame(x[0]).strain_voigt();
    reference_tensor(m, theta, mat).0 * e - Vector3::new(x[1], x[2], 0.0)
}

/// Solves `C̄[m(λ), θ]·ε' = diag(λ1, λ2)` for `(α, λ1, λ2)`, where `ε'` is the
/// strain in the frame rotated by `α` and `m = |λ2| / (|λ1| + |λ2|)`.
///
/// The result is relabelled so that `|λ1| ≥ |λ2|` and `α ∈ [-π/2, π/2)`.
pub fn recover_params_newton(
    strain: &Sym2,
    theta: f64,
    init: NewtonGuess,
    mat: &IsotropicMaterial,
) -> std::result::Result<Recovery, RecoveryFailure> {
    let mut x = Vector3::new(init.alpha, init.lambda1, init.lambda2);
    let mut r = newton_residual(strain, theta, mat, &x);
    let scale = |x: &Vector3<f64>| x[1].abs().max(x[2].abs()).max(1.0);
    let mut it = 0;
    while r.amax() > NEWTON_TOLERANCE * scale(&x) {
        if it >= NEWTON_MAX_ITERATIONS {
            return Err(RecoveryFailure::NotConverged);
        }
        let (m, dm1, dm2) = m_of(x[1], x[2]);
        let local = strain.to_frame(x[0]);
        let e = local.strain_voigt();
        let c = reference_tensor(m, theta, mat).0;
        let (dc_m, _) = tensor_derivatives(m, theta, mat);
        let de_alpha = Vector3::new(2.0 * local.xy, -2.0 * local.xy, 2.0 * (local.yy - local.xx));
        let col_a = c * de_alpha;
        let dce = dc_m.0 * e;
        let col_1 = dce * dm1 - Vector3::new(1.0, 0.0, 0.0);
        let col_2 = dce * dm2 - Vector3::new(0.0, 1.0, 0.0);
        let jac = Matrix3::from_columns(&[col_a, col_1, col_2]);
        let jac_scale = jac.amax();
        if jac_scale == 0.0 || jac.determinant().abs() <= 1e-14 * jac_scale.powi(3) {
            return Err(RecoveryFailure::SingularJacobian);
        }
        let Some(step) = jac.lu().solve(&(-r)) else { return Err(RecoveryFailure::SingularJacobian) };
        let mut t = 1.0;
        loop {
            let trial = x + step * t;
            let rt = newton_residual(strain, theta, mat, &trial);
            if rt.amax() < r.amax() || t < 1e-6 {
                x = trial;
                r = rt;
                break;
            }
            t *= 0.5;
        }
        it += 1;
    }
    let (mut alpha, mut l1, mut l2) = (x[0], x[1], x[2]);
    if l1.abs() < l2.abs() || (l1.abs() == l2.abs() && l1 < l2) {
        std::mem::swap(&mut l1, &mut l2);
        alpha += FRAC_PI_2;
    }
    let (m, _, _) = m_of(l1, l2);
    Ok(Recovery { alpha: normalize_angle(alpha), lambda1: l1, lambda2: l2, m, iterations: it, residual: r.amax() })
}

/// `Σ_T θ_T |T|`.
pub fn volume_of(theta: &[f64], mesh: &QuadMesh) -> f64 {
    assert_eq!(theta.len(), mesh.num_cells());
    theta.iter().enumerate().map(|(c, t)| t * mesh.cell_area(c)).sum()
}
