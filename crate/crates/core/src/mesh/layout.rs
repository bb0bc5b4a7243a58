use super::Cell;
use crate::error::{Error, Result};

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub const fn new(min: [f64; 2], max: [f64; 2]) -> Self {
        Self { min, max }
    }

    pub const fn unit_square() -> Self {
        Self::new([0.0, 0.0], [1.0, 1.0])
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

/// Arrangement of equal square level-0 cells covering the domain.
///
/// A rectangle with an integer aspect ratio uses `nx × ny` roots; masked
/// layouts (such as an L-shape) switch individual roots off.
#[derive(Debug, Clone, PartialEq)]
pub struct RootLayout {
    pub origin: [f64; 2],
    pub root_size: f64,
    pub nx: u32,
    pub ny: u32,
    active: Vec<bool>,
}

impl RootLayout {
    /// Square roots tiling `rect`; the aspect ratio must be an integer or its inverse.
    pub fn rectangle(rect: Rect) -> Result<Self> {
        let (w, h) = (rect.width(), rect.height());
        if !(w > 0.0 && h > 0.0) {
            return Err(Error::InvalidArgument(format!("degenerate domain {rect:?}")));
        }
        let size = w.min(h);
        let nx = (w / size).round();
        let ny = (h / size).round();
        if ((nx * size - w).abs() > 1e-12 * w) || ((ny * size - h).abs() > 1e-12 * h) {
            return Err(Error::InvalidArgument(format!(
                "domain {rect:?} cannot be tiled by equal squares (aspect ratio must be an integer)"
            )));
        }
        Self::masked(rect.min, size, nx as u32, ny as u32, vec![true; (nx * ny) as usize])
    }

    /// Layout with explicit root activity, indexed `rj * nx + ri`.
    pub fn masked(origin: [f64; 2], root_size: f64, nx: u32, ny: u32, active: Vec<bool>) -> Result<Self> {
        if nx == 0 || ny == 0 || active.len() != (nx * ny) as usize || !active.iter().any(|&a| a) {
            return Err(Error::InvalidArgument("root layout needs at least one active root".into()));
        }
        if !(root_size > 0.0) {
            return Err(Error::InvalidArgument(format!("root size must be positive, got {root_size}")));
        }
        Ok(Self { origin, root_size, nx, ny, active })
    }

    /// Unit square with its upper-right quadrant removed.
    pub fn l_shape() -> Self {
        Self::masked([0.0, 0.0], 0.5, 2, 2, vec![true, true, true, false]).expect("valid layout")
    }

    pub fn is_active(&self, ri: u32, rj: u32) -> bool {
        ri < self.nx && rj < self.ny && self.active[(rj * self.nx + ri) as usize]
    }

    pub fn contains(&self, cell: &Cell) -> bool {
        let (ri, rj) = cell.root();
        self.is_active(ri, rj)
    }

    pub fn active_roots(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.ny).flat_map(move |rj| (0..self.nx).map(move |ri| (ri, rj))).filter(|&(ri, rj)| self.is_active(ri, rj))
    }

    pub fn num_roots(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn cell_size(&self, level: u8) -> f64 {
        self.root_size / (1u64 << level) as f64
    }

    pub fn cell_origin(&self, cell: &Cell) -> [f64; 2] {
        let h = self.cell_size(cell.level);
        [self.origin[0] + h * cell.i as f64, self.origin[1] + h * cell.j as f64]
    }

    pub fn area(&self) -> f64 {
        self.num_roots() as f64 * self.root_size * self.root_size
    }

    pub fn bounding_box(&self) -> Rect {
        Rect::new(
            self.origin,
            [self.origin[0] + self.nx as f64 * self.root_size, self.origin[1] + self.ny as f64 * self.root_size],
        )
    }
}
