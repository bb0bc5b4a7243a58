use std::collections::BTreeSet;

use super::{Cell, CellId, Direction, QuadMesh};

impl QuadMesh {
    /// Splits every marked leaf into four children, refining further leaves
    /// as needed so that edge-adjacent leaves differ by at most one level.
    pub fn refine(&self, marked: &[CellId]) -> QuadMesh {
        let mut split: BTreeSet<Cell> = BTreeSet::new();
        let mut work: Vec<Cell> = Vec::new();
        for &id in marked {
            let cell = self.leaves[id];
            if split.insert(cell) {
                work.push(cell);
            }
        }
        if split.is_empty() {
            return self.clone();
        }
        while let Some(cell) = work.pop() {
            for dir in Direction::ALL {
                let Some(adj) = cell.step(dir).filter(|c| self.layout.contains(c)) else {
                    continue;
                };
                // A coarser leaf across this edge would end up two levels apart.
                if let Some(n) = self.covering_leaf(&adj) {
                    let other = self.leaves[n];
                    if other.level < cell.level && split.insert(other) {
                        work.push(other);
                    }
                }
            }
        }
        let mut leaves: Vec<Cell> = self.leaves.iter().filter(|c| !split.contains(c)).copied().collect();
        for cell in &split {
            leaves.extend(cell.children());
        }
        QuadMesh::from_leaves(self.layout.clone(), leaves)
    }

    /// Uniformly refined copy.
    pub fn refine_all(&self) -> QuadMesh {
        let all: Vec<CellId> = (0..self.num_cells()).collect();
        self.refine(&all)
    }
}
