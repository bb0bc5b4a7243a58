//! Builtin load cases.

use crate::error::{Error, Result};
use crate::fem::{BoundaryConditions, EdgeSelector, NodeSelector, Prescribed, Side};
use crate::laminate::IsotropicMaterial;
use crate::mesh::{QuadMesh, Rect, RootLayout};

pub const SCENARIO_NAMES: [&str; 4] = ["carrier-plate", "cantilever", "bridge", "l-shape"];

/// Domain, boundary data, material and volume budget of one optimization problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub layout: RootLayout,
    pub bc: BoundaryConditions,
    pub material: IsotropicMaterial,
    /// `Θ / |D|`, in `(0, 1]`.
    pub volume_fraction: f64,
}

/// Optional replacements for scenario defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScenarioOverrides {
    pub lame_lambda: Option<f64>,
    pub lame_mu: Option<f64>,
    /// Traction magnitude, 1 by default.
    pub load: Option<f64>,
    pub volume_fraction: Option<f64>,
}

impl Scenario {
    /// Prescribed material volume `Θ`.
    pub fn target_volume(&self) -> f64 {
        self.volume_fraction * self.layout.area()
    }

    pub fn mesh(&self, level: u8) -> QuadMesh {
        QuadMesh::uniform(self.layout.clone(), level)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.volume_fraction > 0.0 && self.volume_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!("volume fraction must lie in (0, 1], got {}", self.volume_fraction)));
        }
        if !self.bc.neumann.iter().any(|n| n.traction != [0.0, 0.0]) {
            return Err(Error::InvalidBoundaryConditions("scenario has no nonzero traction".into()));
        }
        self.bc.validate()
    }

    pub fn with_overrides(mut self, o: &ScenarioOverrides) -> Result<Self> {
        let lam = o.lame_lambda.unwrap_or(self.material.lam);
        let mu = o.lame_mu.unwrap_or(self.material.mu);
        self.material = IsotropicMaterial::new(lam, mu)?;
        if let Some(g) = o.load {
            self.bc = self.bc.scaled_loads(g);
        }
        if let Some(f) = o.volume_fraction {
            self.volume_fraction = f;
        }
        self.validate()?;
        Ok(self)
    }
}

/// Scenario by name with unit material and unit traction magnitude.
pub fn builtin_scenario(name: &str, overrides: &ScenarioOverrides) -> Result<Scenario> {
    let rect = |w: f64| RootLayout::rectangle(Rect::new([0.0, 0.0], [w, 1.0])).expect("valid rectangle");
    let (layout, bc, volume_fraction) = match name {
        "carrier-plate" => (
            rect(1.0),
            BoundaryConditions::new().clamp(EdgeSelector::whole(Side::Bottom)).load(EdgeSelector::whole(Side::Top), [1.0, 0.0]),
            0.33,
        ),
        "cantilever" => (
            rect(2.0),
            BoundaryConditions::new()
                .clamp(EdgeSelector::whole(Side::Left))
                .load(EdgeSelector::new(Side::Right, 0.4, 0.6), [0.0, -1.0]),
            0.5,
        ),
        "bridge" => {
            let roller = |a, b| NodeSelector::Edge(EdgeSelector::new(Side::Bottom, a, b));
            let bc = BoundaryConditions::new()
                .fix(roller(0.0, 0.4), [false, true], Prescribed::Zero)
                .fix(roller(1.6, 2.0), [false, true], Prescribed::Zero)
                .fix(NodeSelector::Point([0.0, 0.0]), [true, true], Prescribed::Zero)
                .load(EdgeSelector::new(Side::Bottom, 0.4, 1.6), [0.0, -1.0]);
            (rect(2.0), bc, 0.33)
        }
        "l-shape" => (
            RootLayout::l_shape(),
            BoundaryConditions::new()
                .clamp(EdgeSelector::whole(Side::Bottom))
                .load(EdgeSelector::new(Side::Right, 0.2, 0.3), [0.0, -1.0]),
            0.33,
        ),
        other => return Err(Error::UnknownScenario(other.to_string())),
    };
    let s = Scenario { name: name.to_string(), layout, bc, material: IsotropicMaterial::default(), volume_fraction };
    s.with_overrides(overrides)
}

/// Unit square under the constant stress `diag(2, 1)` with full material:
/// affine displacement on left and bottom, exact tractions on right and top.
/// The principal axes match the default layering angle, so the initial
/// design is already optimal and every discrete residual vanishes.
pub fn patch_test_scenario() -> Scenario {
    let material = IsotropicMaterial::default();
    let sigma = [[2.0, 0.0], [0.0, 1.0]];
    let (lam, mu) = (material.lam, material.mu);
    let tr = (sigma[0][0] + sigma[1][1]) / (2.0 * (lam + mu));
    let eps = |i: usize, j: usize| (sigma[i][j] - if i == j { lam * tr } else { 0.0 }) / (2.0 * mu);
    let gradient = [[eps(0, 0), eps(0, 1)], [eps(1, 0), eps(1, 1)]];
    let affine = Prescribed::Affine { gradient, offset: [0.0, 0.0] };
    let bc = BoundaryConditions::new()
        .fix(NodeSelector::Edge(EdgeSelector::whole(Side::Left)), [true, true], affine)
        .fix(NodeSelector::Edge(EdgeSelector::whole(Side::Bottom)), [true, true], affine)
        .load(EdgeSelector::whole(Side::Right), [sigma[0][0], sigma[1][0]])
        .load(EdgeSelector::whole(Side::Top), [sigma[0][1], sigma[1][1]]);
    Scenario {
        name: "patch-test".into(),
        layout: RootLayout::rectangle(Rect::unit_square()).expect("valid rectangle"),
        bc,
        material,
        volume_fraction: 1.0,
    }
}
