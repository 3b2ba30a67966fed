//! Beacon lattice geometry.
//!
//! Beacons sit on the vertices of an axis-aligned lattice with uniform
//! spacing. A cell is the rectangle between two adjacent beacon columns and
//! two adjacent beacon rows.

use alloc::vec::Vec;
use core::fmt;
use thiserror::Error;

/// Tolerance for coordinate equality, in meters.
pub const GEO_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeometryError {
    #[error("lattice spacing must be positive and finite, got {0}")]
    BadSpacing(f64),
    #[error("lattice needs at least 2 columns and 2 rows, got {cols}x{rows}")]
    TooSmall { cols: usize, rows: usize },
    #[error("lattice origin must be finite")]
    BadOrigin,
    #[error("corners do not bound a single lattice cell")]
    NotACell,
    #[error("point ({x}, {y}) lies outside the lattice")]
    OutOfRegion { x: f64, y: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }

    pub fn dist_sq(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn approx_eq(&self, other: &Point) -> bool {
        (self.x - other.x).abs() <= GEO_EPS && (self.y - other.y).abs() <= GEO_EPS
    }

    /// Lexicographic order on (x, y), used for deterministic tie-breaks.
    pub fn lex_cmp(&self, other: &Point) -> core::cmp::Ordering {
        self.x.total_cmp(&other.x).then(self.y.total_cmp(&other.y))
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Closed axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x - GEO_EPS
            && p.x <= self.max.x + GEO_EPS
            && p.y >= self.min.y - GEO_EPS
            && p.y <= self.max.y + GEO_EPS
    }

    pub fn clamp(&self, p: Point) -> Point {
        Point::new(p.x.clamp(self.min.x, self.max.x), p.y.clamp(self.min.y, self.max.y))
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.min.x + self.max.x), 0.5 * (self.min.y + self.max.y))
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BeaconId(pub u32);

impl fmt::Display for BeaconId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beacon {
    pub id: BeaconId,
    pub pos: Point,
}

/// A lattice cell, indexed by its lower-left beacon column and row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellId {
    pub col: usize,
    pub row: usize,
}

impl CellId {
    pub const fn new(col: usize, row: usize) -> Self {
        Self { col, row }
    }
}

/// Uniform beacon lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub origin: Point,
    pub spacing_m: f64,
    pub cols: usize,
    pub rows: usize,
}

impl Default for GridSpec {
    /// 3x3 beacons at 4 m, covering 8 m x 8 m.
    fn default() -> Self {
        Self {
            origin: Point::new(0.0, 0.0),
            spacing_m: 4.0,
            cols: 3,
            rows: 3,
        }
    }
}

impl GridSpec {
    pub fn new(origin: Point, spacing_m: f64, cols: usize, rows: usize) -> Result<Self, GeometryError> {
        let spec = Self {
            origin,
            spacing_m,
            cols,
            rows,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.spacing_m.is_finite() && self.spacing_m > 0.0) {
            return Err(GeometryError::BadSpacing(self.spacing_m));
        }
        if self.cols < 2 || self.rows < 2 {
            return Err(GeometryError::TooSmall {
                cols: self.cols,
                rows: self.rows,
            });
        }
        if !self.origin.is_finite() {
            return Err(GeometryError::BadOrigin);
        }
        Ok(())
    }

    pub fn beacon_count(&self) -> usize {
        self.cols * self.rows
    }

    pub fn vertex(&self, col: usize, row: usize) -> Point {
        Point::new(
            self.origin.x + col as f64 * self.spacing_m,
            self.origin.y + row as f64 * self.spacing_m,
        )
    }

    /// Row-major beacon id for lattice vertex (col, row).
    pub fn beacon_id(&self, col: usize, row: usize) -> BeaconId {
        BeaconId((row * self.cols + col) as u32)
    }

    pub fn bounds(&self) -> Rect {
        Rect {
            min: self.origin,
            max: self.vertex(self.cols - 1, self.rows - 1),
        }
    }

    pub fn cell_rect(&self, cell: CellId) -> Rect {
        Rect {
            min: self.vertex(cell.col, cell.row),
            max: self.vertex(cell.col + 1, cell.row + 1),
        }
    }

    pub fn cell_center(&self, cell: CellId) -> Point {
        self.cell_rect(cell).center()
    }

    pub fn cell_count(&self) -> usize {
        (self.cols - 1) * (self.rows - 1)
    }

    pub fn cells(&self) -> impl Iterator<Item = CellId> + '_ {
        (0..self.rows - 1).flat_map(move |row| (0..self.cols - 1).map(move |col| CellId::new(col, row)))
    }

    /// Corners of `cell` in order lower-left, lower-right, upper-left, upper-right.
    pub fn corners_of(&self, cell: CellId) -> [Point; 4] {
        [
            self.vertex(cell.col, cell.row),
            self.vertex(cell.col + 1, cell.row),
            self.vertex(cell.col, cell.row + 1),
            self.vertex(cell.col + 1, cell.row + 1),
        ]
    }

    /// Lattice index of a coordinate along one axis, if it sits on a lattice line.
    fn line_index(&self, offset: f64, count: usize) -> Option<usize> {
        let u = offset / self.spacing_m;
        let k = libm::round(u);
        if (u - k).abs() * self.spacing_m > GEO_EPS || k < 0.0 || k >= count as f64 {
            return None;
        }
        Some(k as usize)
    }

    /// Lattice vertex at `p`, if any.
    pub fn vertex_of(&self, p: Point) -> Option<(usize, usize)> {
        Some((
            self.line_index(p.x - self.origin.x, self.cols)?,
            self.line_index(p.y - self.origin.y, self.rows)?,
        ))
    }

    /// Cells that have the vertex (col, row) as a corner.
    pub fn cells_around(&self, col: usize, row: usize) -> impl Iterator<Item = CellId> + '_ {
        let cols = col.saturating_sub(1)..=col.min(self.cols - 2);
        let rows = row.saturating_sub(1)..=row.min(self.rows - 2);
        rows.flat_map(move |r| cols.clone().map(move |c| CellId::new(c, r)))
    }
}

/// All beacons of the lattice, row-major.
pub fn build_lattice(spec: &GridSpec) -> Result<Vec<Beacon>, GeometryError> {
    spec.validate()?;
    let mut beacons = Vec::with_capacity(spec.beacon_count());
    for row in 0..spec.rows {
        for col in 0..spec.cols {
            beacons.push(Beacon {
                id: spec.beacon_id(col, row),
                pos: spec.vertex(col, row),
            });
        }
    }
    Ok(beacons)
}

fn distinct_values(values: [f64; 4]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(4);
    for v in values {
        if !out.iter().any(|u| (u - v).abs() <= GEO_EPS) {
            out.push(v);
        }
    }
    out
}

/// True iff the points are the four distinct corners of an axis-aligned rectangle.
pub fn is_rectangle(quad: &[Point; 4]) -> bool {
    let xs = distinct_values(quad.map(|p| p.x));
    let ys = distinct_values(quad.map(|p| p.y));
    if xs.len() != 2 || ys.len() != 2 {
        return false;
    }
    xs.iter().all(|&x| {
        ys.iter().all(|&y| {
            let corner = Point::new(x, y);
            quad.iter().filter(|p| p.approx_eq(&corner)).count() == 1
        })
    })
}

/// The lattice cell bounded by `quad`.
pub fn cell_of_corners(quad: &[Point; 4], spec: &GridSpec) -> Result<CellId, GeometryError> {
    if !is_rectangle(quad) {
        return Err(GeometryError::NotACell);
    }
    let mut lo = quad[0];
    for p in &quad[1..] {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
    }
    let (col, row) = spec.vertex_of(lo).ok_or(GeometryError::NotACell)?;
    if col + 1 >= spec.cols || row + 1 >= spec.rows {
        return Err(GeometryError::NotACell);
    }
    let cell = CellId::new(col, row);
    let rect = spec.cell_rect(cell);
    let on_corner = |p: &Point| {
        ((p.x - rect.min.x).abs() <= GEO_EPS || (p.x - rect.max.x).abs() <= GEO_EPS)
            && ((p.y - rect.min.y).abs() <= GEO_EPS || (p.y - rect.max.y).abs() <= GEO_EPS)
    };
    if quad.iter().all(on_corner) {
        Ok(cell)
    } else {
        Err(GeometryError::NotACell)
    }
}

fn axis_cell(offset: f64, spacing: f64, cells: usize) -> usize {
    // ceil - 1 puts shared edges in the lower-index cell
    let k = libm::ceil(offset / spacing) - 1.0;
    if k <= 0.0 {
        0
    } else {
        (k as usize).min(cells - 1)
    }
}

/// The cell whose closed bounds contain `p`; shared edges go to the lower index.
pub fn containing_cell(p: Point, spec: &GridSpec) -> Result<CellId, GeometryError> {
    if !p.is_finite() || !spec.bounds().contains(p) {
        return Err(GeometryError::OutOfRegion { x: p.x, y: p.y });
    }
    Ok(CellId::new(
        axis_cell(p.x - spec.origin.x, spec.spacing_m, spec.cols - 1),
        axis_cell(p.y - spec.origin.y, spec.spacing_m, spec.rows - 1),
    ))
}
