//! Boundary condition descriptions, independent of any mesh.

use crate::error::{Error, Result};

/// Side of the domain's bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

/// Portion `[from, to]` of a side, in absolute coordinates along the side
/// (y for left/right, x for bottom/top).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSelector {
    pub side: Side,
    pub from: f64,
    pub to: f64,
}

impl EdgeSelector {
    pub fn new(side: Side, from: f64, to: f64) -> Self {
        Self { side, from: from.min(to), to: from.max(to) }
    }

    /// The whole side.
    pub fn whole(side: Side) -> Self {
        Self::new(side, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn contains(&self, s: f64, tol: f64) -> bool {
        s >= self.from - tol && s <= self.to + tol
    }

    /// Overlap of `[a, b]` with the selected interval, if it has positive length.
    pub fn clip(&self, a: f64, b: f64) -> Option<(f64, f64)> {
        let lo = a.max(self.from);
        let hi = b.min(self.to);
        (hi > lo).then_some((lo, hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeSelector {
    Edge(EdgeSelector),
    /// The mesh node at this position.
    Point([f64; 2]),
}

/// Prescribed displacement values on Dirichlet nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prescribed {
    Zero,
    Constant([f64; 2]),
    /// `u(x) = gradient · x + offset`.
    Affine { gradient: [[f64; 2]; 2], offset: [f64; 2] },
}

impl Prescribed {
    pub fn eval(&self, x: [f64; 2]) -> [f64; 2] {
        match *self {
            Prescribed::Zero => [0.0, 0.0],
            Prescribed::Constant(v) => v,
            Prescribed::Affine { gradient: g, offset: o } => {
                [g[0][0] * x[0] + g[0][1] * x[1] + o[0], g[1][0] * x[0] + g[1][1] * x[1] + o[1]]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletCondition {
    pub selector: NodeSelector,
    /// Which displacement components are fixed; `[false, true]` is a roller.
    pub fixed: [bool; 2],
    pub value: Prescribed,
}

/// Constant surface traction (force per length) on part of a side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeumannCondition {
    pub selector: EdgeSelector,
    pub traction: [f64; 2],
}

/// Dirichlet and Neumann data. Boundary not covered by either is traction free.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundaryConditions {
    pub dirichlet: Vec<DirichletCondition>,
    pub neumann: Vec<NeumannCondition>,
}

impl BoundaryConditions {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clamp(mut self, selector: EdgeSelector) -> Self {
        self.dirichlet.push(DirichletCondition {
            selector: NodeSelector::Edge(selector),
            fixed: [true, true],
            value: Prescribed::Zero,
        });
        self
    }

    pub fn fix(mut self, selector: NodeSelector, fixed: [bool; 2], value: Prescribed) -> Self {
        self.dirichlet.push(DirichletCondition { selector, fixed, value });
        self
    }

    pub fn load(mut self, selector: EdgeSelector, traction: [f64; 2]) -> Self {
        self.neumann.push(NeumannCondition { selector, traction });
        self
    }

    /// Same conditions with every traction multiplied by `factor`.
    pub fn scaled_loads(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for n in &mut out.neumann {
            n.traction = [n.traction[0] * factor, n.traction[1] * factor];
        }
        out
    }

    /// Rejects Neumann data on a component that a Dirichlet strip fixes.
    pub fn validate(&self) -> Result<()> {
        for n in &self.neumann {
            for d in &self.dirichlet {
                let NodeSelector::Edge(sel) = d.selector else { continue };
                if sel.side != n.selector.side || sel.clip(n.selector.from, n.selector.to).is_none() {
                    continue;
                }
                for c in 0..2 {
                    if d.fixed[c] && n.traction[c] != 0.0 {
                        return Err(Error::InvalidBoundaryConditions(format!(
                            "component {c} on {:?} carries both a traction and a prescribed displacement",
                            n.selector.side
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Total traction at coordinate `s` along `side`.
    pub fn traction_at(&self, side: Side, s: f64) -> [f64; 2] {
        let mut g = [0.0; 2];
        for n in self.neumann.iter().filter(|n| n.selector.side == side && n.selector.contains(s, 0.0)) {
            g[0] += n.traction[0];
            g[1] += n.traction[1];
        }
        g
    }

    /// Interior points of `(a, b)` where the traction on `side` may jump.
    pub fn breakpoints(&self, side: Side, a: f64, b: f64) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .neumann
            .iter()
            .filter(|n| n.selector.side == side)
            .flat_map(|n| [n.selector.from, n.selector.to])
            .filter(|&s| s > a && s < b)
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Components fixed along the whole segment `[a, b]` of `side`.
    pub fn fixed_on_segment(&self, side: Side, a: f64, b: f64, tol: f64) -> [bool; 2] {
        let mut fixed = [false; 2];
        for d in &self.dirichlet {
            if let NodeSelector::Edge(sel) = d.selector {
                if sel.side == side && sel.contains(a, tol) && sel.contains(b, tol) {
                    fixed[0] |= d.fixed[0];
                    fixed[1] |= d.fixed[1];
                }
            }
        }
        fixed
    }
}
