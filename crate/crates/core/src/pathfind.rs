//! Shortest paths on the 4-connected walkable grid.
//!
//! Every query resolves ties the same way: from the current cell, take the
//! first neighbour in up, right, down, left order that is one step closer to
//! the goal. The resulting path is a pure function of the layout and the two
//! endpoints, so the precomputed per-exit fields and on-demand searches always
//! agree cell for cell.

use std::collections::VecDeque;

use thiserror::Error;

use crate::layout::{Cell, ExitId, FloorLayout};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PathError {
    #[error("no path from {from} to {to}")]
    NoPath { from: Cell, to: Cell },
    #[error("no exit reachable from {from}")]
    NoExit { from: Cell },
    #[error("{0} is not walkable")]
    Blocked(Cell),
}

/// Breadth-first distances (in steps) from one source cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceField {
    width: usize,
    height: usize,
    dist: Vec<u32>,
}

impl DistanceField {
    const UNREACHED: u32 = u32::MAX;

    pub fn from_source(layout: &FloorLayout, source: Cell) -> Self {
        let mut field = DistanceField {
            width: layout.width(),
            height: layout.height(),
            dist: vec![Self::UNREACHED; layout.width() * layout.height()],
        };
        let Some(start) = layout.index(source).filter(|_| layout.is_walkable(source)) else {
            return field;
        };
        field.dist[start] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(c) = queue.pop_front() {
            let d = field.dist[layout.index(c).unwrap()];
            for n in layout.open_neighbors(c) {
                let i = layout.index(n).unwrap();
                if field.dist[i] == Self::UNREACHED {
                    field.dist[i] = d + 1;
                    queue.push_back(n);
                }
            }
        }
        field
    }

    /// Steps from the source, or `None` when unreachable.
    pub fn get(&self, c: Cell) -> Option<u32> {
        if c.x < 0 || c.y < 0 || c.x as usize >= self.width || c.y as usize >= self.height {
            return None;
        }
        let d = self.dist[c.y as usize * self.width + c.x as usize];
        (d != Self::UNREACHED).then_some(d)
    }

    /// The canonical next cell from `from` towards the source.
    pub fn next_step(&self, from: Cell) -> Option<Cell> {
        let d = self.get(from)?;
        if d == 0 {
            return None;
        }
        from.neighbors()
            .into_iter()
            .find(|n| self.get(*n) == Some(d - 1))
    }

    /// Walks up to `steps` cells towards the source and returns where it stops.
    pub fn advance(&self, from: Cell, steps: u32) -> Cell {
        let mut cur = from;
        for _ in 0..steps {
            match self.next_step(cur) {
                Some(next) => cur = next,
                None => break,
            }
        }
        cur
    }

    /// The full canonical path from `from` to the source, or `None` if unreachable.
    pub fn path_from(&self, from: Cell) -> Option<Path> {
        let cost = self.get(from)?;
        let mut cells = Vec::with_capacity(cost as usize + 1);
        cells.push(from);
        let mut cur = from;
        while let Some(next) = self.next_step(cur) {
            cells.push(next);
            cur = next;
        }
        Some(Path { cells })
    }
}

/// Consecutive cells are 4-neighbours; none is a wall.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    cells: Vec<Cell>,
}

impl Path {
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cost(&self) -> u32 {
        (self.cells.len() - 1) as u32
    }

    pub fn start(&self) -> Cell {
        self.cells[0]
    }

    pub fn end(&self) -> Cell {
        *self.cells.last().unwrap()
    }
}

pub fn shortest_path(layout: &FloorLayout, from: Cell, to: Cell) -> Result<Path, PathError> {
    for c in [from, to] {
        if !layout.is_walkable(c) {
            return Err(PathError::Blocked(c));
        }
    }
    DistanceField::from_source(layout, to)
        .path_from(from)
        .ok_or(PathError::NoPath { from, to })
}

/// Exit with the lowest walking cost; ties go to the lowest exit id.
pub fn nearest_exit(layout: &FloorLayout, from: Cell) -> Result<(ExitId, Path), PathError> {
    if !layout.is_walkable(from) {
        return Err(PathError::Blocked(from));
    }
    let exit = nearest_exit_id(layout, from).ok_or(PathError::NoExit { from })?;
    let path = layout.exit_field(exit).path_from(from).unwrap();
    Ok((exit, path))
}

pub(crate) fn nearest_exit_id(layout: &FloorLayout, from: Cell) -> Option<ExitId> {
    (0..layout.exits().len())
        .filter_map(|e| layout.exit_field(e).get(from).map(|d| (d, e)))
        .min()
        .map(|(_, e)| e)
}

/// Advances `min(speed, cost)` cells along `shortest_path(from, target)`.
pub fn step_toward(
    layout: &FloorLayout,
    from: Cell,
    target: Cell,
    speed: u32,
) -> Result<Cell, PathError> {
    let path = shortest_path(layout, from, target)?;
    let k = speed.min(path.cost()) as usize;
    Ok(path.cells()[k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::manhattan;

    fn corridor() -> FloorLayout {
        FloorLayout::parse("8x3\n########\nEaaaaaa#\n########\n").unwrap()
    }

    #[test]
    fn trivial_and_straight_paths() {
        let l = corridor();
        let p = shortest_path(&l, Cell::new(2, 1), Cell::new(2, 1)).unwrap();
        assert_eq!(p.cost(), 0);
        assert_eq!(p.cells(), &[Cell::new(2, 1)]);
        let p = shortest_path(&l, Cell::new(1, 1), Cell::new(6, 1)).unwrap();
        assert_eq!(p.cost(), 5);
        assert!(p.cells().windows(2).all(|w| manhattan(w[0], w[1]) == 1));
    }

    #[test]
    fn step_toward_on_corridor() {
        let l = corridor();
        let (a, b) = (Cell::new(1, 1), Cell::new(6, 1));
        assert_eq!(step_toward(&l, a, b, 0).unwrap(), a);
        assert_eq!(step_toward(&l, a, b, 5).unwrap(), b);
        assert_eq!(step_toward(&l, a, b, 50).unwrap(), b);
        // enumerated path: (1,1) (2,1) (3,1) ... so two steps land on the third cell
        let path = shortest_path(&l, a, b).unwrap();
        assert_eq!(step_toward(&l, a, b, 2).unwrap(), path.cells()[2]);
        assert_eq!(path.cells()[2], Cell::new(3, 1));
    }

    #[test]
    fn errors() {
        let l = FloorLayout::parse("5x3\nE.#a.\n#.#+#\n#...#\n").unwrap();
        assert_eq!(
            shortest_path(&l, Cell::new(0, 1), Cell::new(1, 1)),
            Err(PathError::Blocked(Cell::new(0, 1)))
        );
        let island = FloorLayout::parse("5x3\nE.#..\n#a###\n#####\n").unwrap();
        assert_eq!(
            shortest_path(&island, Cell::new(1, 0), Cell::new(4, 0)),
            Err(PathError::NoPath {
                from: Cell::new(1, 0),
                to: Cell::new(4, 0)
            })
        );
        assert_eq!(
            nearest_exit(&island, Cell::new(4, 0)),
            Err(PathError::NoExit {
                from: Cell::new(4, 0)
            })
        );
    }

    #[test]
    fn tie_break_prefers_up_then_right() {
        // two equal routes around a pillar: up-first wins
        let l = FloorLayout::parse("5x5\n#####\n#aaa#\nEa#a#\n#aaa#\n#####\n").unwrap();
        let p = shortest_path(&l, Cell::new(1, 2), Cell::new(3, 2)).unwrap();
        assert_eq!(p.cost(), 4);
        assert_eq!(p.cells()[1], Cell::new(1, 1));
    }

    #[test]
    fn nearest_exit_adjacent_and_tie() {
        let l = FloorLayout::parse("5x3\n#####\nEaaaE\n#####\n").unwrap();
        let (e, p) = nearest_exit(&l, Cell::new(1, 1)).unwrap();
        assert_eq!((e, p.cost()), (0, 1));
        // centre cell is two steps from both exits: lowest id wins
        let (e, p) = nearest_exit(&l, Cell::new(2, 1)).unwrap();
        assert_eq!((e, p.cost()), (0, 2));
        let (e, _) = nearest_exit(&l, Cell::new(3, 1)).unwrap();
        assert_eq!(e, 1);
    }
}
