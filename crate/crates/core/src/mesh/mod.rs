//! Adaptive quadtree mesh of square cells with 2:1 edge balance.
//!
//! Cells are addressed by integer coordinates `(level, i, j)`; a cell at level
//! `l` has edge length `root_size / 2^l`. Every leaf carries the nine nodes of
//! a bi-quadratic element, numbered lexicographically (`b * 3 + a`, with `a`
//! running along x). Edge nodes of a fine cell that lie on a quarter point of
//! a coarser neighbour's edge are hanging and constrained to that edge.

mod layout;
mod refine;

use std::collections::{BTreeMap, HashMap};

pub use layout::{Rect, RootLayout};

use crate::error::Result;

/// Index of a leaf cell in a [`QuadMesh`].
pub type CellId = usize;

const KEY_BITS: u32 = 40;

/// Quadtree cell address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub level: u8,
    pub i: u32,
    pub j: u32,
}

impl Cell {
    pub const fn new(level: u8, i: u32, j: u32) -> Self {
        Self { level, i, j }
    }

    pub fn parent(&self) -> Option<Cell> {
        (self.level > 0).then(|| Cell::new(self.level - 1, self.i / 2, self.j / 2))
    }

    /// Children ordered `(0,0), (1,0), (0,1), (1,1)`.
    pub fn children(&self) -> [Cell; 4] {
        let (l, i, j) = (self.level + 1, 2 * self.i, 2 * self.j);
        [Cell::new(l, i, j), Cell::new(l, i + 1, j), Cell::new(l, i, j + 1), Cell::new(l, i + 1, j + 1)]
    }

    /// Ancestor at `level` (or the cell itself).
    pub fn ancestor(&self, level: u8) -> Cell {
        debug_assert!(level <= self.level);
        let shift = self.level - level;
        Cell::new(level, self.i >> shift, self.j >> shift)
    }

    pub fn is_ancestor_of(&self, other: &Cell) -> bool {
        self.level <= other.level && other.ancestor(self.level) == *self
    }

    fn root(&self) -> (u32, u32) {
        (self.i >> self.level, self.j >> self.level)
    }

    /// Same-level neighbour across `dir`, if the coordinates stay nonnegative.
    fn step(&self, dir: Direction) -> Option<Cell> {
        let (di, dj) = dir.offset();
        let i = self.i.checked_add_signed(di)?;
        let j = self.j.checked_add_signed(dj)?;
        Some(Cell::new(self.level, i, j))
    }

    fn node_key(&self, a: u32, b: u32) -> (u64, u64) {
        let shift = KEY_BITS - self.level as u32 - 1;
        (((2 * self.i + a) as u64) << shift, ((2 * self.j + b) as u64) << shift)
    }
}

/// Edge of a cell, named by its outward direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Left,
    Right,
    Bottom,
    Top,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Left, Direction::Right, Direction::Bottom, Direction::Top];

    pub fn index(self) -> usize {
        self as usize
    }

    fn offset(self) -> (i32, i32) {
        match self {
            Direction::Left => (-1, 0),
            Direction::Right => (1, 0),
            Direction::Bottom => (0, -1),
            Direction::Top => (0, 1),
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
            Direction::Bottom => Direction::Top,
            Direction::Top => Direction::Bottom,
        }
    }

    pub fn normal(self) -> [f64; 2] {
        match self {
            Direction::Left => [-1.0, 0.0],
            Direction::Right => [1.0, 0.0],
            Direction::Bottom => [0.0, -1.0],
            Direction::Top => [0.0, 1.0],
        }
    }

    /// Local Q2 node indices on this edge, ordered by increasing coordinate.
    pub fn edge_nodes(self) -> [usize; 3] {
        match self {
            Direction::Left => [0, 3, 6],
            Direction::Right => [2, 5, 8],
            Direction::Bottom => [0, 1, 2],
            Direction::Top => [6, 7, 8],
        }
    }

    /// Reference coordinates of the edge point at parameter `t ∈ [0, 1]`.
    pub fn edge_point(self, t: f64) -> [f64; 2] {
        match self {
            Direction::Left => [0.0, t],
            Direction::Right => [1.0, t],
            Direction::Bottom => [t, 0.0],
            Direction::Top => [t, 1.0],
        }
    }

    /// Whether the edge runs along y (a vertical edge).
    pub fn is_vertical(self) -> bool {
        matches!(self, Direction::Left | Direction::Right)
    }
}

/// What lies across one edge of a leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighbor {
    Boundary,
    Same(CellId),
    Coarser(CellId),
    /// Two finer leaves, ordered by increasing coordinate along the edge.
    Finer([CellId; 2]),
}

/// Hanging node constraint: `u(node) = Σ weights[k] · u(masters[k])`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HangingConstraint {
    pub masters: [usize; 3],
    pub weights: [f64; 3],
}

/// Four leaves sharing a parent, ordered `(0,0), (1,0), (0,1), (1,1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementPatch {
    pub parent: Cell,
    pub elements: [CellId; 4],
    pub origin: [f64; 2],
    pub size: [f64; 2],
}

/// Result of a sibling patch lookup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PatchLookup {
    Patch(ElementPatch),
    /// The cell is a root cell.
    NoParent,
    /// At least one sibling is refined further.
    Incomplete { parent: Cell },
}

/// Adaptive quadrilateral mesh with Q2 node numbering and hanging-node constraints.
#[derive(Debug, Clone)]
pub struct QuadMesh {
    layout: RootLayout,
    leaves: Vec<Cell>,
    index: HashMap<Cell, CellId>,
    nodes: Vec<[f64; 2]>,
    node_index: HashMap<(u64, u64), usize>,
    cell_nodes: Vec<[usize; 9]>,
    neighbors: Vec<[Neighbor; 4]>,
    constraints: BTreeMap<usize, HangingConstraint>,
}

/// Uniform mesh of a rectangle built from square root cells.
pub fn uniform_mesh(domain: Rect, level: u8) -> Result<QuadMesh> {
    Ok(QuadMesh::uniform(RootLayout::rectangle(domain)?, level))
}

impl QuadMesh {
    pub fn uniform(layout: RootLayout, level: u8) -> Self {
        let n = 1u32 << level;
        let mut leaves = Vec::new();
        for (ri, rj) in layout.active_roots() {
            for j in 0..n {
                for i in 0..n {
                    leaves.push(Cell::new(level, ri * n + i, rj * n + j));
                }
            }
        }
        Self::from_leaves(layout, leaves)
    }

    fn from_leaves(layout: RootLayout, mut leaves: Vec<Cell>) -> Self {
        leaves.sort_by_key(|c| (c.level, c.j, c.i));
        let index: HashMap<Cell, CellId> = leaves.iter().enumerate().map(|(k, c)| (*c, k)).collect();

        let mut nodes = Vec::new();
        let mut node_index = HashMap::new();
        let mut cell_nodes = Vec::with_capacity(leaves.len());
        for cell in &leaves {
            let h = layout.root_size / (1u64 << cell.level) as f64;
            let mut local = [0usize; 9];
            for b in 0..3u32 {
                for a in 0..3u32 {
                    let key = cell.node_key(a, b);
                    let id = *node_index.entry(key).or_insert_with(|| {
                        nodes.push([
                            layout.origin[0] + h * (cell.i as f64 + 0.5 * a as f64),
                            layout.origin[1] + h * (cell.j as f64 + 0.5 * b as f64),
                        ]);
                        nodes.len() - 1
                    });
                    local[(b * 3 + a) as usize] = id;
                }
            }
            cell_nodes.push(local);
        }

        let mut mesh = Self {
            layout,
            leaves,
            index,
            nodes,
            node_index,
            cell_nodes,
            neighbors: Vec::new(),
            constraints: BTreeMap::new(),
        };
        mesh.neighbors = (0..mesh.leaves.len())
            .map(|id| Direction::ALL.map(|d| mesh.compute_neighbor(id, d)))
            .collect();
        mesh.constraints = mesh.compute_constraints();
        mesh
    }

    fn compute_neighbor(&self, id: CellId, dir: Direction) -> Neighbor {
        let cell = self.leaves[id];
        let Some(adj) = cell.step(dir).filter(|c| self.layout.contains(c)) else {
            return Neighbor::Boundary;
        };
        if let Some(&n) = self.index.get(&adj) {
            return Neighbor::Same(n);
        }
        if let Some(p) = adj.parent() {
            if let Some(&n) = self.index.get(&p) {
                return Neighbor::Coarser(n);
            }
        }
        // Finer: the two children of `adj` touching `cell`.
        let kids = adj.children();
        let pair = match dir {
            Direction::Left => [kids[1], kids[3]],
            Direction::Right => [kids[0], kids[2]],
            Direction::Bottom => [kids[2], kids[3]],
            Direction::Top => [kids[0], kids[1]],
        };
        let a = self.index.get(&pair[0]).copied();
        let b = self.index.get(&pair[1]).copied();
        match (a, b) {
            (Some(a), Some(b)) => Neighbor::Finer([a, b]),
            _ => panic!("2:1 balance violated next to {cell:?}"),
        }
    }

    fn compute_constraints(&self) -> BTreeMap<usize, HangingConstraint> {
        let mut out = BTreeMap::new();
        for (id, nbrs) in self.neighbors.iter().enumerate() {
            for dir in Direction::ALL {
                if !matches!(nbrs[dir.index()], Neighbor::Finer(_)) {
                    continue;
                }
                let cell = self.leaves[id];
                let local = dir.edge_nodes();
                let masters = local.map(|k| self.cell_nodes[id][k]);
                let keys = local.map(|k| cell.node_key((k % 3) as u32, (k / 3) as u32));
                let mid = |p: (u64, u64), q: (u64, u64)| ((p.0 + q.0) / 2, (p.1 + q.1) / 2);
                let quarter = [mid(keys[0], keys[1]), mid(keys[1], keys[2])];
                let weights = [[0.375, 0.75, -0.125], [-0.125, 0.75, 0.375]];
                for (key, w) in quarter.iter().zip(weights) {
                    let node = self.node_index[key];
                    out.insert(node, HangingConstraint { masters, weights: w });
                }
            }
        }
        out
    }

    pub fn layout(&self) -> &RootLayout {
        &self.layout
    }

    pub fn num_cells(&self) -> usize {
        self.leaves.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.leaves
    }

    pub fn cell(&self, id: CellId) -> Cell {
        self.leaves[id]
    }

    pub fn find(&self, cell: &Cell) -> Option<CellId> {
        self.index.get(cell).copied()
    }

    /// Leaf equal to or containing `cell`, if any.
    pub fn covering_leaf(&self, cell: &Cell) -> Option<CellId> {
        (0..=cell.level).rev().find_map(|l| self.find(&cell.ancestor(l)))
    }

    /// Edge length of a cell.
    pub fn h(&self, id: CellId) -> f64 {
        self.layout.cell_size(self.leaves[id].level)
    }

    pub fn cell_area(&self, id: CellId) -> f64 {
        let h = self.h(id);
        h * h
    }

    /// Lower-left corner of a cell.
    pub fn cell_origin(&self, id: CellId) -> [f64; 2] {
        self.layout.cell_origin(&self.leaves[id])
    }

    /// Physical point for reference coordinates in `[0, 1]²`.
    pub fn map_point(&self, id: CellId, local: [f64; 2]) -> [f64; 2] {
        let o = self.cell_origin(id);
        let h = self.h(id);
        [o[0] + h * local[0], o[1] + h * local[1]]
    }

    /// Leaf containing `x` and the reference coordinates of `x` in it.
    pub fn locate(&self, x: [f64; 2]) -> Option<(CellId, [f64; 2])> {
        let s = self.layout.root_size;
        let fx = (x[0] - self.layout.origin[0]) / s;
        let fy = (x[1] - self.layout.origin[1]) / s;
        let tol = 1e-12;
        if fx < -tol || fy < -tol || fx > self.layout.nx as f64 + tol || fy > self.layout.ny as f64 + tol {
            return None;
        }
        let deepest = self.leaves.iter().map(|c| c.level).max().unwrap_or(0);
        let n = (1u64 << deepest) as f64;
        let clampi = |f: f64, max: u32| -> u32 {
            let v = (f * n).floor().max(0.0) as u64;
            v.min((max as u64) * (1u64 << deepest) - 1) as u32
        };
        let probe = Cell::new(deepest, clampi(fx, self.layout.nx), clampi(fy, self.layout.ny));
        if !self.layout.contains(&probe) {
            return None;
        }
        let id = self.covering_leaf(&probe)?;
        let o = self.cell_origin(id);
        let h = self.h(id);
        Some((id, [((x[0] - o[0]) / h).clamp(0.0, 1.0), ((x[1] - o[1]) / h).clamp(0.0, 1.0)]))
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn node(&self, n: usize) -> [f64; 2] {
        self.nodes[n]
    }

    pub fn cell_nodes(&self, id: CellId) -> &[usize; 9] {
        &self.cell_nodes[id]
    }

    /// The four corner nodes in counter-clockwise order.
    pub fn corner_nodes(&self, id: CellId) -> [usize; 4] {
        let n = &self.cell_nodes[id];
        [n[0], n[2], n[8], n[6]]
    }

    pub fn neighbors(&self, id: CellId) -> &[Neighbor; 4] {
        &self.neighbors[id]
    }

    pub fn neighbor(&self, id: CellId, dir: Direction) -> Neighbor {
        self.neighbors[id][dir.index()]
    }

    pub fn constraints(&self) -> &BTreeMap<usize, HangingConstraint> {
        &self.constraints
    }

    pub fn num_hanging_nodes(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_hanging(&self, node: usize) -> bool {
        self.constraints.contains_key(&node)
    }

    pub fn area(&self) -> f64 {
        self.layout.area()
    }

    pub fn max_level(&self) -> u8 {
        self.leaves.iter().map(|c| c.level).max().unwrap_or(0)
    }

    /// The 2×2 block of siblings containing `id`, if all four are leaves.
    pub fn sibling_patch(&self, id: CellId) -> PatchLookup {
        let cell = self.leaves[id];
        let Some(parent) = cell.parent() else {
            return PatchLookup::NoParent;
        };
        let kids = parent.children();
        let mut elements = [0; 4];
        for (slot, kid) in elements.iter_mut().zip(kids.iter()) {
            match self.find(kid) {
                Some(k) => *slot = k,
                None => return PatchLookup::Incomplete { parent },
            }
        }
        let size = self.layout.cell_size(parent.level);
        PatchLookup::Patch(ElementPatch { parent, elements, origin: self.layout.cell_origin(&parent), size: [size, size] })
    }

    /// Checks tiling, balance and constraint invariants.
    pub fn check_invariants(&self) -> Result<(), String> {
        let area: f64 = (0..self.num_cells()).map(|id| self.cell_area(id)).sum();
        if ((area - self.area()) / self.area()).abs() > 1e-12 {
            return Err(format!("leaf area {area} differs from domain area {}", self.area()));
        }
        for (id, nbrs) in self.neighbors.iter().enumerate() {
            let level = self.leaves[id].level;
            for n in nbrs {
                let ok = match *n {
                    Neighbor::Boundary => true,
                    Neighbor::Same(k) => self.leaves[k].level == level,
                    Neighbor::Coarser(k) => self.leaves[k].level + 1 == level,
                    Neighbor::Finer([a, b]) => self.leaves[a].level == level + 1 && self.leaves[b].level == level + 1,
                };
                if !ok {
                    return Err(format!("inconsistent neighbour of cell {id}"));
                }
            }
        }
        for (node, c) in &self.constraints {
            let s: f64 = c.weights.iter().sum();
            if (s - 1.0).abs() > 1e-14 {
                return Err(format!("weights of hanging node {node} sum to {s}"));
            }
            if c.masters.iter().any(|m| self.constraints.contains_key(m)) {
                return Err(format!("hanging node {node} depends on another hanging node"));
            }
        }
        Ok(())
    }
}
