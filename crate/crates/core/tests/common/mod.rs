#![allow(dead_code)]

use std::collections::VecDeque;

use egress_sim::FloorLayout;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random valid map no larger than `max` x `max` with one to three exits,
/// plus its character grid.
/// Interior cells are wall, hallway or room floor; floor not connected to
/// the exit is walled in, and maps the parser still rejects are redrawn.
pub fn random_map(rng: &mut ChaCha8Rng, max: usize) -> (FloorLayout, Vec<Vec<u8>>) {
    loop {
        let w = rng.random_range(4..=max);
        let h = rng.random_range(4..=max);
        let mut g = vec![vec![b'#'; w]; h];
        for row in g.iter_mut().take(h - 1).skip(1) {
            for c in row.iter_mut().take(w - 1).skip(1) {
                let r: f64 = rng.random();
                *c = if r < 0.3 {
                    b'#'
                } else if r < 0.55 {
                    b'.'
                } else if r < 0.8 {
                    b'a'
                } else {
                    b'b'
                };
            }
        }
        // exit on the boundary next to an interior floor cell
        let mut candidates = Vec::new();
        for x in 1..w - 1 {
            candidates.push(((x, 0), (x, 1)));
            candidates.push(((x, h - 1), (x, h - 2)));
        }
        for y in 1..h - 1 {
            candidates.push(((0, y), (1, y)));
            candidates.push(((w - 1, y), (w - 2, y)));
        }
        candidates.retain(|&(_, (ix, iy))| g[iy][ix] != b'#');
        if candidates.is_empty() {
            continue;
        }
        let mut first = None;
        for _ in 0..rng.random_range(1..=3) {
            let ((ex, ey), _) = candidates[rng.random_range(0..candidates.len())];
            g[ey][ex] = b'E';
            first.get_or_insert((ex, ey));
        }
        let dist = bfs(&g, first.unwrap());
        for y in 0..h {
            for x in 0..w {
                if g[y][x] != b'#' && dist[y][x].is_none() {
                    g[y][x] = b'#';
                }
            }
        }
        if let Ok(layout) = FloorLayout::parse(&to_text(&g)) {
            return (layout, g);
        }
    }
}

pub fn to_text(g: &[Vec<u8>]) -> String {
    let mut s = format!("{}x{}\n", g[0].len(), g.len());
    for row in g {
        s.push_str(std::str::from_utf8(row).unwrap());
        s.push('\n');
    }
    s
}

/// Plain breadth-first search over the character grid.
pub fn bfs(g: &[Vec<u8>], src: (usize, usize)) -> Vec<Vec<Option<u32>>> {
    let (w, h) = (g[0].len(), g.len());
    let mut dist = vec![vec![None; w]; h];
    dist[src.1][src.0] = Some(0);
    let mut q = VecDeque::from([src]);
    while let Some((x, y)) = q.pop_front() {
        let d = dist[y][x].unwrap();
        let mut next = Vec::new();
        if x > 0 {
            next.push((x - 1, y));
        }
        if y > 0 {
            next.push((x, y - 1));
        }
        if x + 1 < w {
            next.push((x + 1, y));
        }
        if y + 1 < h {
            next.push((x, y + 1));
        }
        for (nx, ny) in next {
            if g[ny][nx] != b'#' && dist[ny][nx].is_none() {
                dist[ny][nx] = Some(d + 1);
                q.push_back((nx, ny));
            }
        }
    }
    dist
}

pub fn open_cells(g: &[Vec<u8>]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (y, row) in g.iter().enumerate() {
        for (x, &c) in row.iter().enumerate() {
            if c != b'#' {
                out.push((x, y));
            }
        }
    }
    out
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
