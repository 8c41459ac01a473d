//! ASCII floor plans: parsing, validation and the spatial queries every agent
//! relies on.
//!
//! Map format (UTF-8, one character per cell, 1 cell = 1 metre):
//!
//! ```text
//! ; comment lines start with a semicolon
//! ; name: tiny            <- optional, sets the layout name
//! 5x3
//! #####
//! E.+a#
//! #####
//! ```
//!
//! `#` wall, `.` hallway floor, `+` door, `E` exit, any other ASCII letter is
//! room floor. A 4-connected region of one letter is one room; the same letter
//! may be reused for rooms that do not touch.

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

use crate::pathfind::DistanceField;

pub type RoomId = usize;
pub type ExitId = usize;

/// Grid coordinate. `x` grows to the right, `y` grows downward.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    /// 4-neighbourhood in the canonical order: up, right, down, left.
    pub fn neighbors(self) -> [Cell; 4] {
        [
            Cell::new(self.x, self.y - 1),
            Cell::new(self.x + 1, self.y),
            Cell::new(self.x, self.y + 1),
            Cell::new(self.x - 1, self.y),
        ]
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellKind {
    Wall,
    /// `None` is hallway floor.
    Floor(Option<RoomId>),
    Door,
    Exit(ExitId),
}

impl CellKind {
    pub fn is_walkable(self) -> bool {
        !matches!(self, CellKind::Wall)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Room {
    pub id: RoomId,
    pub glyph: char,
    pub cells: Vec<Cell>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LayoutStats {
    pub room_count: usize,
    pub exit_count: usize,
    pub floor_cell_count: usize,
}

impl fmt::Display for LayoutStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "rooms={} exits={} floor_cells={}",
            self.room_count, self.exit_count, self.floor_cell_count
        )
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SyntaxError {
    #[error("line {line}: missing `WxH` dimensions header")]
    MissingHeader { line: usize },
    #[error("line {line}: malformed dimensions header {text:?}")]
    BadHeader { line: usize, text: String },
    #[error("line {line}, column {column}: unknown glyph {glyph:?}")]
    UnknownGlyph {
        line: usize,
        column: usize,
        glyph: char,
    },
    #[error("line {line}: row has {found} cells, expected {expected}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: expected {expected} rows, found {found}")]
    RowCount {
        line: usize,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ValidationError {
    #[error("layout has no exits")]
    NoExits,
    #[error("layout has no rooms")]
    NoRooms,
    #[error("exit {exit} at {cell} is not on the grid boundary")]
    ExitNotOnBoundary { exit: ExitId, cell: Cell },
    #[error("exit {exit} at {cell} is enclosed by walls")]
    ExitEnclosed { exit: ExitId, cell: Cell },
    #[error("door at {cell} does not connect two open cells")]
    DeadDoor { cell: Cell },
    #[error("room {room} at {cell} has no path to any exit")]
    UnreachableRoom { room: RoomId, cell: Cell },
}

impl ValidationError {
    /// Grid cell the diagnostic points at, when there is one.
    pub fn cell(&self) -> Option<Cell> {
        match self {
            ValidationError::NoExits | ValidationError::NoRooms => None,
            ValidationError::ExitNotOnBoundary { cell, .. }
            | ValidationError::ExitEnclosed { cell, .. }
            | ValidationError::DeadDoor { cell }
            | ValidationError::UnreachableRoom { cell, .. } => Some(*cell),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LayoutError {
    #[error("syntax error: {0}")]
    Syntax(#[from] SyntaxError),
    #[error("invalid layout: {0}")]
    Validation(#[from] ValidationError),
}

/// A parsed and validated floor plan. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct FloorLayout {
    name: String,
    width: usize,
    height: usize,
    cells: Vec<CellKind>,
    rooms: Vec<Room>,
    exits: Vec<Cell>,
    hallway: Vec<Cell>,
    room_floor: Vec<Cell>,
    exit_fields: Vec<DistanceField>,
}

impl FloorLayout {
    pub fn parse(source: &str) -> Result<Self, LayoutError> {
        let raw = RawGrid::parse(source)?;
        Ok(raw.build()?)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn rooms(&self) -> &[Room] {
        &self.rooms
    }

    /// Exit cells indexed by exit id (row-major discovery order).
    pub fn exits(&self) -> &[Cell] {
        &self.exits
    }

    /// Hallway floor cells (no room id), row-major.
    pub fn hallway_cells(&self) -> &[Cell] {
        &self.hallway
    }

    /// Room floor cells, row-major.
    pub fn room_cells(&self) -> &[Cell] {
        &self.room_floor
    }

    /// Walking distance from every cell to the given exit.
    pub fn exit_field(&self, exit: ExitId) -> &DistanceField {
        &self.exit_fields[exit]
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    pub fn index(&self, c: Cell) -> Option<usize> {
        self.in_bounds(c)
            .then(|| c.y as usize * self.width + c.x as usize)
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new((index % self.width) as i32, (index / self.width) as i32)
    }

    /// Out-of-bounds cells read as walls.
    pub fn kind(&self, c: Cell) -> CellKind {
        self.index(c).map_or(CellKind::Wall, |i| self.cells[i])
    }

    pub fn is_walkable(&self, c: Cell) -> bool {
        self.kind(c).is_walkable()
    }

    pub fn is_wall(&self, c: Cell) -> bool {
        !self.is_walkable(c)
    }

    /// Hallway floor, doors and exits: everything walkable that is not inside a room.
    pub fn is_circulation(&self, c: Cell) -> bool {
        matches!(
            self.kind(c),
            CellKind::Floor(None) | CellKind::Door | CellKind::Exit(_)
        )
    }

    pub fn room_of(&self, c: Cell) -> Option<RoomId> {
        match self.kind(c) {
            CellKind::Floor(room) => room,
            _ => None,
        }
    }

    pub fn exit_at(&self, c: Cell) -> Option<ExitId> {
        match self.kind(c) {
            CellKind::Exit(id) => Some(id),
            _ => None,
        }
    }

    /// Walkable 4-neighbours in canonical order.
    pub fn open_neighbors(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        c.neighbors().into_iter().filter(|n| self.is_walkable(*n))
    }

    /// True iff the segment between the two cell centres touches no wall cell.
    pub fn line_of_sight(&self, a: Cell, b: Cell) -> bool {
        supercover(a, b).into_iter().all(|c| self.is_walkable(c))
    }

    /// Renders back to the map format. `parse(to_map_string())` reproduces the layout.
    pub fn to_map_string(&self) -> String {
        let mut out = String::new();
        if !self.name.is_empty() {
            out.push_str(&format!("; name: {}\n", self.name));
        }
        out.push_str(&format!("{}x{}\n", self.width, self.height));
        for y in 0..self.height {
            for x in 0..self.width {
                let glyph = match self.cells[y * self.width + x] {
                    CellKind::Wall => '#',
                    CellKind::Floor(None) => '.',
                    CellKind::Floor(Some(room)) => self.rooms[room].glyph,
                    CellKind::Door => '+',
                    CellKind::Exit(_) => 'E',
                };
                out.push(glyph);
            }
            out.push('\n');
        }
        out
    }
}

/// Counts by enumeration over the grid.
pub fn layout_stats(layout: &FloorLayout) -> LayoutStats {
    let mut seen_rooms = vec![false; layout.rooms.len()];
    let mut stats = LayoutStats::default();
    for kind in &layout.cells {
        match *kind {
            CellKind::Floor(room) => {
                stats.floor_cell_count += 1;
                if let Some(r) = room {
                    if !seen_rooms[r] {
                        seen_rooms[r] = true;
                        stats.room_count += 1;
                    }
                }
            }
            CellKind::Exit(_) => stats.exit_count += 1,
            CellKind::Wall | CellKind::Door => {}
        }
    }
    stats
}

pub fn manhattan(a: Cell, b: Cell) -> u32 {
    a.x.abs_diff(b.x) + a.y.abs_diff(b.y)
}

/// Every cell touched by the segment joining the centres of `a` and `b`,
/// including both side cells where the segment passes exactly through a
/// grid corner. The result starts at `a` and ends at `b`.
pub fn supercover(a: Cell, b: Cell) -> Vec<Cell> {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let (nx, ny) = (i64::from(dx.unsigned_abs()), i64::from(dy.unsigned_abs()));
    let (sx, sy) = (dx.signum(), dy.signum());
    let mut out = Vec::with_capacity((nx + ny + 1) as usize);
    let mut cur = a;
    out.push(cur);
    let (mut ix, mut iy) = (0i64, 0i64);
    while ix < nx || iy < ny {
        // compare the parameter at which the next vertical vs horizontal
        // grid line is crossed: (0.5 + ix) / nx against (0.5 + iy) / ny
        let horizontal = (1 + 2 * ix) * ny;
        let vertical = (1 + 2 * iy) * nx;
        match horizontal.cmp(&vertical) {
            std::cmp::Ordering::Equal => {
                out.push(Cell::new(cur.x + sx, cur.y));
                out.push(Cell::new(cur.x, cur.y + sy));
                cur = Cell::new(cur.x + sx, cur.y + sy);
                ix += 1;
                iy += 1;
            }
            std::cmp::Ordering::Less => {
                cur.x += sx;
                ix += 1;
            }
            std::cmp::Ordering::Greater => {
                cur.y += sy;
                iy += 1;
            }
        }
        out.push(cur);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Glyph {
    Wall,
    Hall,
    Door,
    Exit,
    Room(char),
}

impl Glyph {
    fn from_char(c: char) -> Option<Self> {
        match c {
            '#' => Some(Glyph::Wall),
            '.' => Some(Glyph::Hall),
            '+' => Some(Glyph::Door),
            'E' => Some(Glyph::Exit),
            c if c.is_ascii_alphabetic() => Some(Glyph::Room(c)),
            _ => None,
        }
    }
}

struct RawGrid {
    name: String,
    width: usize,
    height: usize,
    glyphs: Vec<Glyph>,
}

impl RawGrid {
    fn parse(source: &str) -> Result<Self, SyntaxError> {
        let mut name = String::new();
        let mut dims: Option<(usize, usize)> = None;
        let mut glyphs = Vec::new();
        let mut rows = 0usize;
        let mut last_line = 0usize;

        for (idx, line) in source.lines().enumerate() {
            let line_no = idx + 1;
            last_line = line_no;
            let line = line.strip_suffix('\r').unwrap_or(line);
            if let Some(comment) = line.strip_prefix(';') {
                if let Some(n) = comment.trim().strip_prefix("name:") {
                    if dims.is_none() {
                        name = n.trim().to_string();
                    }
                }
                continue;
            }
            let Some((width, height)) = dims else {
                if line.trim().is_empty() {
                    continue;
                }
                dims = Some(parse_dims(line).ok_or_else(|| SyntaxError::BadHeader {
                    line: line_no,
                    text: line.to_string(),
                })?);
                continue;
            };
            if rows == height {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(SyntaxError::RowCount {
                    line: line_no,
                    expected: height,
                    found: rows + 1,
                });
            }
            let found = line.chars().count();
            for (col, ch) in line.chars().enumerate() {
                let glyph = Glyph::from_char(ch).ok_or(SyntaxError::UnknownGlyph {
                    line: line_no,
                    column: col + 1,
                    glyph: ch,
                })?;
                glyphs.push(glyph);
            }
            if found != width {
                return Err(SyntaxError::RaggedRow {
                    line: line_no,
                    expected: width,
                    found,
                });
            }
            rows += 1;
        }

        let Some((width, height)) = dims else {
            return Err(SyntaxError::MissingHeader {
                line: last_line.max(1),
            });
        };
        if rows != height {
            return Err(SyntaxError::RowCount {
                line: last_line,
                expected: height,
                found: rows,
            });
        }
        Ok(RawGrid {
            name,
            width,
            height,
            glyphs,
        })
    }

    fn build(self) -> Result<FloorLayout, ValidationError> {
        let RawGrid {
            name,
            width,
            height,
            glyphs,
        } = self;
        let to_cell = |i: usize| Cell::new((i % width) as i32, (i / width) as i32);
        let in_bounds =
            |c: Cell| c.x >= 0 && c.y >= 0 && (c.x as usize) < width && (c.y as usize) < height;
        let idx = |c: Cell| c.y as usize * width + c.x as usize;

        let mut cells = vec![CellKind::Wall; glyphs.len()];
        let mut rooms: Vec<Room> = Vec::new();
        let mut exits = Vec::new();

        for i in 0..glyphs.len() {
            match glyphs[i] {
                Glyph::Wall => {}
                Glyph::Hall => cells[i] = CellKind::Floor(None),
                Glyph::Door => cells[i] = CellKind::Door,
                Glyph::Exit => {
                    cells[i] = CellKind::Exit(exits.len());
                    exits.push(to_cell(i));
                }
                Glyph::Room(letter) => {
                    if matches!(cells[i], CellKind::Floor(Some(_))) {
                        continue;
                    }
                    // flood fill the contiguous region of this letter
                    let id = rooms.len();
                    let mut region = Vec::new();
                    let mut queue = VecDeque::from([to_cell(i)]);
                    cells[i] = CellKind::Floor(Some(id));
                    while let Some(c) = queue.pop_front() {
                        region.push(c);
                        for n in c.neighbors() {
                            if in_bounds(n)
                                && glyphs[idx(n)] == Glyph::Room(letter)
                                && cells[idx(n)] == CellKind::Wall
                            {
                                cells[idx(n)] = CellKind::Floor(Some(id));
                                queue.push_back(n);
                            }
                        }
                    }
                    region.sort_by_key(|c| (c.y, c.x));
                    rooms.push(Room {
                        id,
                        glyph: letter,
                        cells: region,
                    });
                }
            }
        }

        if exits.is_empty() {
            return Err(ValidationError::NoExits);
        }
        if rooms.is_empty() {
            return Err(ValidationError::NoRooms);
        }

        let open = |c: Cell| in_bounds(c) && cells[idx(c)].is_walkable();
        for (exit, &cell) in exits.iter().enumerate() {
            let on_boundary = cell.x == 0
                || cell.y == 0
                || cell.x as usize == width - 1
                || cell.y as usize == height - 1;
            if !on_boundary {
                return Err(ValidationError::ExitNotOnBoundary { exit, cell });
            }
            if !cell.neighbors().into_iter().any(open) {
                return Err(ValidationError::ExitEnclosed { exit, cell });
            }
        }
        for (i, kind) in cells.iter().enumerate() {
            if *kind == CellKind::Door {
                let cell = to_cell(i);
                if cell.neighbors().into_iter().filter(|n| open(*n)).count() < 2 {
                    return Err(ValidationError::DeadDoor { cell });
                }
            }
        }

        let hallway = (0..cells.len())
            .filter(|&i| cells[i] == CellKind::Floor(None))
            .map(to_cell)
            .collect();
        let room_floor = (0..cells.len())
            .filter(|&i| matches!(cells[i], CellKind::Floor(Some(_))))
            .map(to_cell)
            .collect();

        let mut layout = FloorLayout {
            name,
            width,
            height,
            cells,
            rooms,
            exits,
            hallway,
            room_floor,
            exit_fields: Vec::new(),
        };
        layout.exit_fields = layout
            .exits
            .iter()
            .map(|&e| DistanceField::from_source(&layout, e))
            .collect();

        for room in &layout.rooms {
            let anchor = room.cells[0];
            let reachable = layout
                .exit_fields
                .iter()
                .any(|field| field.get(anchor).is_some());
            if !reachable {
                return Err(ValidationError::UnreachableRoom {
                    room: room.id,
                    cell: anchor,
                });
            }
        }
        Ok(layout)
    }
}

fn parse_dims(line: &str) -> Option<(usize, usize)> {
    let (w, h) = line.trim().split_once(['x', 'X'])?;
    let w: usize = w.trim().parse().ok()?;
    let h: usize = h.trim().parse().ok()?;
    (w > 0 && h > 0).then_some((w, h))
}
