//! Small dense tensors used throughout: symmetric 2×2 matrices and plane
//! elasticity tensors in Voigt form.
//!
//! Voigt convention: strains are `(ε11, ε22, 2ε12)`, stresses are
//! `(σ11, σ22, σ12)`, so `σ = C ε` and the energy density is `εᵀ C ε`.

use std::ops::{Add, Mul, Sub};

use nalgebra::{Matrix3, Vector3};

/// Symmetric 2×2 matrix (stress or strain tensor).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sym2 {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 { xx: 0.0, yy: 0.0, xy: 0.0 };

    pub const fn new(xx: f64, yy: f64, xy: f64) -> Self {
        Self { xx, yy, xy }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Self::new(a, b, 0.0)
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// Frobenius inner product `a : b`.
    pub fn ddot(&self, other: &Sym2) -> f64 {
        self.xx * other.xx + self.yy * other.yy + 2.0 * self.xy * other.xy
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.ddot(self).sqrt()
    }

    /// Engineering Voigt vector of a strain, `(ε11, ε22, 2ε12)`.
    pub fn strain_voigt(&self) -> Vector3<f64> {
        Vector3::new(self.xx, self.yy, 2.0 * self.xy)
    }

    /// Voigt vector of a stress, `(σ11, σ22, σ12)`.
    pub fn stress_voigt(&self) -> Vector3<f64> {
        Vector3::new(self.xx, self.yy, self.xy)
    }

    pub fn from_strain_voigt(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], 0.5 * v[2])
    }

    pub fn from_stress_voigt(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    /// Traction `σ n` for a unit normal `n`.
    pub fn apply(&self, n: [f64; 2]) -> [f64; 2] {
        [self.xx * n[0] + self.xy * n[1], self.xy * n[0] + self.yy * n[1]]
    }

    /// `Qᵀ S Q` for the rotation `Q = [[c, -s], [s, c]]` by `angle`.
    pub fn to_frame(&self, angle: f64) -> Sym2 {
        let (s, c) = angle.sin_cos();
        Sym2::new(
            c * c * self.xx + 2.0 * c * s * self.xy + s * s * self.yy,
            s * s * self.xx - 2.0 * c * s * self.xy + c * c * self.yy,
            (c * c - s * s) * self.xy + c * s * (self.yy - self.xx),
        )
    }

    /// Two-dimensional von Mises equivalent stress.
    pub fn von_mises(&self) -> f64 {
        let v = self.xx * self.xx - self.xx * self.yy + self.yy * self.yy + 3.0 * self.xy * self.xy;
        v.max(0.0).sqrt()
    }
}

impl Add for Sym2 {
    type Output = Sym2;
    fn add(self, o: Sym2) -> Sym2 {
        Sym2::new(self.xx + o.xx, self.yy + o.yy, self.xy + o.xy)
    }
}

impl Sub for Sym2 {
    type Output = Sym2;
    fn sub(self, o: Sym2) -> Sym2 {
        Sym2::new(self.xx - o.xx, self.yy - o.yy, self.xy - o.xy)
    }
}

impl Mul<Sym2> for f64 {
    type Output = Sym2;
    fn mul(self, s: Sym2) -> Sym2 {
        Sym2::new(self * s.xx, self * s.yy, self * s.xy)
    }
}

/// Plane elasticity tensor stored as a symmetric 3×3 Voigt matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoigtTensor(pub Matrix3<f64>);

impl VoigtTensor {
    pub fn zeros() -> Self {
        Self(Matrix3::zeros())
    }

    /// Orthotropic tensor aligned with the coordinate axes.
    pub fn orthotropic(c1111: f64, c2222: f64, c1122: f64, c1212: f64) -> Self {
        Self(Matrix3::new(
            c1111, c1122, 0.0, //
            c1122, c2222, 0.0, //
            0.0, 0.0, c1212,
        ))
    }

    /// Plane isotropic law `σ = 2μ ε + λ tr(ε) I`.
    pub fn isotropic(lambda: f64, mu: f64) -> Self {
        Self::orthotropic(lambda + 2.0 * mu, lambda + 2.0 * mu, lambda, mu)
    }

    pub fn c1111(&self) -> f64 {
        self.0[(0, 0)]
    }

    pub fn c2222(&self) -> f64 {
        self.0[(1, 1)]
    }

    pub fn c1122(&self) -> f64 {
        self.0[(0, 1)]
    }

    pub fn c1212(&self) -> f64 {
        self.0[(2, 2)]
    }

    pub fn stress(&self, strain: &Sym2) -> Sym2 {
        Sym2::from_stress_voigt(&(self.0 * strain.strain_voigt()))
    }

    /// Energy density `C ε : ε`.
    pub fn energy(&self, strain: &Sym2) -> f64 {
        let e = strain.strain_voigt();
        e.dot(&(self.0 * e))
    }

    /// Tensor expressed in the frame rotated by `angle`:
    /// `C*_mnop = Q_mi Q_nj Q_ok Q_pl C_ijkl` with `Q = [[c, -s], [s, c]]`.
    pub fn rotated(&self, angle: f64) -> Self {
        let t = stress_rotation(angle);
        Self(t * self.0 * t.transpose())
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (self.0 - self.0.transpose()).amax() <= tol
    }
}

/// Voigt matrix mapping `σ` to `Q σ Qᵀ`.
pub fn stress_rotation(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(
        c * c, s * s, -2.0 * c * s, //
        s * s, c * c, 2.0 * c * s, //
        c * s, -c * s, c * c - s * s,
    )
}
