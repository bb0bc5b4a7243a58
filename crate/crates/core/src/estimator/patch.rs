//! Bi-quartic interpolation on 2×2 element patches.

use crate::fem::DisplacementField;
use crate::mesh::{Cell, ElementPatch, QuadMesh};
use crate::tensor::Sym2;

fn lagrange4(t: f64) -> [f64; 5] {
    let n: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
    std::array::from_fn(|i| {
        let mut v = 1.0;
        for (j, &nj) in n.iter().enumerate() {
            if j != i {
                v *= (t - nj) / (n[i] - nj);
            }
        }
        v
    })
}

fn lagrange4_deriv(t: f64) -> [f64; 5] {
    let n: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
    std::array::from_fn(|i| {
        let mut sum = 0.0;
        for k in 0..5 {
            if k == i {
                continue;
            }
            let mut prod = 1.0 / (n[i] - n[k]);
            for (j, &nj) in n.iter().enumerate() {
                if j != i && j != k {
                    prod *= (t - nj) / (n[i] - nj);
                }
            }
            sum += prod;
        }
        sum
    })
}

/// Vector-valued tensor-product quartic through a 5×5 lattice on a square.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchQuartic {
    pub origin: [f64; 2],
    pub size: f64,
    /// Nodal values, index `5 * j + i` for the node at `origin + size·(i, j)/4`.
    pub values: [[f64; 2]; 25],
}

impl PatchQuartic {
    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        [self.origin[0] + self.size * i as f64 / 4.0, self.origin[1] + self.size * j as f64 / 4.0]
    }

    /// Interpolant of `f` sampled at the lattice.
    pub fn from_fn(origin: [f64; 2], size: f64, mut f: impl FnMut([f64; 2]) -> [f64; 2]) -> Self {
        let mut q = Self { origin, size, values: [[0.0; 2]; 25] };
        for j in 0..5 {
            for i in 0..5 {
                q.values[5 * j + i] = f(q.node(i, j));
            }
        }
        q
    }

    fn local(&self, x: [f64; 2]) -> [f64; 2] {
        [(x[0] - self.origin[0]) / self.size, (x[1] - self.origin[1]) / self.size]
    }

    pub fn value(&self, x: [f64; 2]) -> [f64; 2] {
        let p = self.local(x);
        let (lx, ly) = (lagrange4(p[0]), lagrange4(p[1]));
        let mut v = [0.0; 2];
        for j in 0..5 {
            for i in 0..5 {
                let w = lx[i] * ly[j];
                v[0] += w * self.values[5 * j + i][0];
                v[1] += w * self.values[5 * j + i][1];
            }
        }
        v
    }

    /// `g[i][j] = ∂u_i/∂x_j`.
    pub fn gradient(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        let p = self.local(x);
        let (lx, ly) = (lagrange4(p[0]), lagrange4(p[1]));
        let (dx, dy) = (lagrange4_deriv(p[0]), lagrange4_deriv(p[1]));
        let mut g = [[0.0; 2]; 2];
        for j in 0..5 {
            for i in 0..5 {
                let v = self.values[5 * j + i];
                let (wx, wy) = (dx[i] * ly[j] / self.size, lx[i] * dy[j] / self.size);
                for c in 0..2 {
                    g[c][0] += wx * v[c];
                    g[c][1] += wy * v[c];
                }
            }
        }
        g
    }

    pub fn strain(&self, x: [f64; 2]) -> Sym2 {
        let g = self.gradient(x);
        Sym2::new(g[0][0], g[1][1], 0.5 * (g[0][1] + g[1][0]))
    }
}

/// `I⁴u_h` on a complete sibling patch; every lattice node is a Q2 node of
/// one of the four elements.
pub fn build_patch_quartic(mesh: &QuadMesh, u: &DisplacementField, patch: &ElementPatch) -> PatchQuartic {
    let mut q = PatchQuartic { origin: patch.origin, size: patch.size[0], values: [[0.0; 2]; 25] };
    for j in 0..5 {
        for i in 0..5 {
            let (cx, cy) = ((i / 2).min(1), (j / 2).min(1));
            let local = [(i - 2 * cx) as f64 / 2.0, (j - 2 * cy) as f64 / 2.0];
            q.values[5 * j + i] = u.value_at(mesh, patch.elements[2 * cy + cx], local);
        }
    }
    q
}

/// Lattice interpolant of `u_h` over the region of `parent`, sampling
/// whichever leaves cover the lattice nodes.
pub fn build_parent_quartic(mesh: &QuadMesh, u: &DisplacementField, parent: &Cell) -> PatchQuartic {
    let layout = mesh.layout();
    let origin = layout.cell_origin(parent);
    let size = layout.cell_size(parent.level);
    let center = [origin[0] + 0.5 * size, origin[1] + 0.5 * size];
    PatchQuartic::from_fn(origin, size, |x| {
        // Nodes on the edge of a masked root are nudged into the parent.
        let nudged = [x[0] + (center[0] - x[0]) * 1e-9, x[1] + (center[1] - x[1]) * 1e-9];
        let (cell, local) = mesh.locate(x).or_else(|| mesh.locate(nudged)).expect("lattice node outside the mesh");
        u.value_at(mesh, cell, local)
    })
}
