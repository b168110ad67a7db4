//! Rectangles, uniform node grids and nodal scalar fields.
//!
//! Values live on nodes `(i, j)` with `i in 0..=nx`, `j in 0..=ny`. Every
//! quadrature in the crate works cell by cell, using the forward-difference
//! gradient anchored at the lower-left node of the cell, so energies are
//! additive over node-aligned sub-rectangles.

use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl Rect {
    pub fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Result<Self> {
        let all_finite = [x_lo, x_hi, y_lo, y_hi].iter().all(|v| v.is_finite());
        if !all_finite || x_lo >= x_hi || y_lo >= y_hi {
            return Err(Error::Domain(format!(
                "invalid rectangle [{x_lo}, {x_hi}] x [{y_lo}, {y_hi}]"
            )));
        }
        Ok(Self {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
        })
    }

    /// The strip `[-3N, 3N] x [-1, 1]`.
    pub fn strip(n: f64) -> Result<Self> {
        Self::new(-3.0 * n, 3.0 * n, -1.0, 1.0)
    }

    pub fn width(&self) -> f64 {
        self.x_hi - self.x_lo
    }

    pub fn height(&self) -> f64 {
        self.y_hi - self.y_lo
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_lo && x <= self.x_hi && y >= self.y_lo && y <= self.y_hi
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x_lo >= self.x_lo
            && other.x_hi <= self.x_hi
            && other.y_lo >= self.y_lo
            && other.y_hi <= self.y_hi
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}] x [{}, {}]",
            self.x_lo, self.x_hi, self.y_lo, self.y_hi
        )
    }
}

/// Half-open range of cells `i0..i1` by `j0..j1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellRange {
    pub i0: usize,
    pub i1: usize,
    pub j0: usize,
    pub j1: usize,
}

impl CellRange {
    pub fn num_cells(&self) -> usize {
        (self.i1 - self.i0) * (self.j1 - self.j0)
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i >= self.i0 && i < self.i1 && j >= self.j0 && j < self.j1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub rect: Rect,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
}

impl Grid {
    pub fn new(rect: Rect, nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::Domain(format!(
                "grid needs at least 2 cells per axis, got {nx} x {ny}"
            )));
        }
        Ok(Self {
            rect,
            nx,
            ny,
            hx: rect.width() / nx as f64,
            hy: rect.height() / ny as f64,
        })
    }

    /// Grid whose spacings do not exceed `hx_max` and `hy_max`.
    pub fn with_max_spacing(rect: Rect, hx_max: f64, hy_max: f64) -> Result<Self> {
        if !(hx_max > 0.0 && hy_max > 0.0) {
            return Err(Error::Domain("spacings must be positive".into()));
        }
        let nx = ((rect.width() / hx_max) - 1e-9).ceil().max(2.0) as usize;
        let ny = ((rect.height() / hy_max) - 1e-9).ceil().max(2.0) as usize;
        Self::new(rect, nx, ny)
    }

    pub fn num_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        if i == self.nx {
            self.rect.x_hi
        } else {
            self.rect.x_lo + i as f64 * self.hx
        }
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        if j == self.ny {
            self.rect.y_hi
        } else {
            self.rect.y_lo + j as f64 * self.hy
        }
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.rect.x_lo + (i as f64 + 0.5) * self.hx,
            self.rect.y_lo + (j as f64 + 0.5) * self.hy,
        )
    }

    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    pub fn h_max(&self) -> f64 {
        self.hx.max(self.hy)
    }

    pub fn h_min(&self) -> f64 {
        self.hx.min(self.hy)
    }

    pub fn is_boundary_node(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx || j == self.ny
    }

    pub fn all_cells(&self) -> CellRange {
        CellRange {
            i0: 0,
            i1: self.nx,
            j0: 0,
            j1: self.ny,
        }
    }

    fn aligned_index(&self, v: f64, lo: f64, h: f64, n: usize, what: &str) -> Result<usize> {
        let t = (v - lo) / h;
        let k = t.round();
        if (t - k).abs() > 1e-7 || k < 0.0 || k > n as f64 {
            return Err(Error::Alignment(format!(
                "{what} = {v} is not on a grid node"
            )));
        }
        Ok(k as usize)
    }

    /// Cells covered by a node-aligned sub-rectangle.
    pub fn cell_range(&self, sub: &Rect) -> Result<CellRange> {
        let slack = 1e-9 * self.h_max();
        let outer = Rect {
            x_lo: self.rect.x_lo - slack,
            x_hi: self.rect.x_hi + slack,
            y_lo: self.rect.y_lo - slack,
            y_hi: self.rect.y_hi + slack,
        };
        if !outer.contains_rect(sub) {
            return Err(Error::Alignment(format!("{sub} not inside {}", self.rect)));
        }
        let r = &self.rect;
        let i0 = self.aligned_index(sub.x_lo, r.x_lo, self.hx, self.nx, "x_lo")?;
        let i1 = self.aligned_index(sub.x_hi, r.x_lo, self.hx, self.nx, "x_hi")?;
        let j0 = self.aligned_index(sub.y_lo, r.y_lo, self.hy, self.ny, "y_lo")?;
        let j1 = self.aligned_index(sub.y_hi, r.y_lo, self.hy, self.ny, "y_hi")?;
        if i1 <= i0 || j1 <= j0 {
            return Err(Error::Alignment(format!("{sub} covers no cells")));
        }
        Ok(CellRange { i0, i1, j0, j1 })
    }
}

/// Real values on the nodes of a [`Grid`], row-major with `j` outer.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField2D {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_nodes() {
            return Err(Error::Domain(format!(
                "expected {} nodal values, got {}",
                grid.num_nodes(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("nodal value {k} is not finite")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.num_nodes());
        for j in 0..=grid.ny {
            let y = grid.y(j);
            for i in 0..=grid.nx {
                values.push(f(grid.x(i), y));
            }
        }
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.num_nodes()],
        }
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.num_nodes());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Mean of the four corner values of cell `(i, j)`.
    #[inline]
    pub fn cell_mean(&self, i: usize, j: usize) -> f64 {
        let g = &self.grid;
        let k = g.idx(i, j);
        let up = k + g.nx + 1;
        ((self.values[k] + self.values[k + 1]) + (self.values[up] + self.values[up + 1])) * 0.25
    }

    /// Bilinear interpolation; `None` outside the rectangle.
    pub fn interpolate(&self, x: f64, y: f64) -> Option<f64> {
        let g = &self.grid;
        if !g.rect.contains(x, y) {
            return None;
        }
        let tx = ((x - g.rect.x_lo) / g.hx).clamp(0.0, g.nx as f64);
        let ty = ((y - g.rect.y_lo) / g.hy).clamp(0.0, g.ny as f64);
        let i = (tx.floor() as usize).min(g.nx - 1);
        let j = (ty.floor() as usize).min(g.ny - 1);
        let (fx, fy) = (tx - i as f64, ty - j as f64);
        let v00 = self.at(i, j);
        let v10 = self.at(i + 1, j);
        let v01 = self.at(i, j + 1);
        let v11 = self.at(i + 1, j + 1);
        Some(
            (1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11),
        )
    }

    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        let g = &self.grid;
        writeln!(w, "{} {}", g.nx, g.ny)?;
        writeln!(
            w,
            "{:?} {:?} {:?} {:?}",
            g.rect.x_lo, g.rect.x_hi, g.rect.y_lo, g.rect.y_hi
        )?;
        for v in &self.values {
            writeln!(w, "{v:?}")?;
        }
        Ok(())
    }

    pub fn read_dump<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next = |what: &str| -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing {what}")))?
                .map_err(Error::from)
        };
        let header = next("header")?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad size {t:?}"))))
            .collect::<Result<_>>()?;
        let [nx, ny] = dims[..] else {
            return Err(Error::Parse(format!("bad header {header:?}")));
        };
        let rect_line = next("rectangle")?;
        let r: Vec<f64> = rect_line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad coordinate {t:?}"))))
            .collect::<Result<_>>()?;
        let [x_lo, x_hi, y_lo, y_hi] = r[..] else {
            return Err(Error::Parse(format!("bad rectangle line {rect_line:?}")));
        };
        let grid = Grid::new(Rect::new(x_lo, x_hi, y_lo, y_hi)?, nx, ny)?;
        let mut values = Vec::with_capacity(grid.num_nodes());
        for k in 0..grid.num_nodes() {
            let line = next("value")?;
            let v: f64 = line
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad value at node {k}: {line:?}")))?;
            values.push(v);
        }
        Self::new(grid, values)
    }
}

/// Forward-difference gradient on cell `(i, j)`, anchored at its lower-left node.
pub fn gradient(field: &ScalarField2D, cell: (usize, usize)) -> Result<[f64; 2]> {
    let g = field.grid();
    let (i, j) = cell;
    if i >= g.nx || j >= g.ny {
        return Err(Error::Index {
            i,
            j,
            nx: g.nx,
            ny: g.ny,
        });
    }
    let u = field.at(i, j);
    Ok([
        (field.at(i + 1, j) - u) / g.hx,
        (field.at(i, j + 1) - u) / g.hy,
    ])
}

/// The sub-field on a node-aligned sub-rectangle.
pub fn restrict(field: &ScalarField2D, sub: &Rect) -> Result<ScalarField2D> {
    let g = field.grid();
    let cr = g.cell_range(sub)?;
    let rect = Rect::new(g.x(cr.i0), g.x(cr.i1), g.y(cr.j0), g.y(cr.j1))?;
    let grid = Grid {
        rect,
        nx: cr.i1 - cr.i0,
        ny: cr.j1 - cr.j0,
        hx: g.hx,
        hy: g.hy,
    };
    if grid.nx < 2 || grid.ny < 2 {
        return Err(Error::Alignment(format!(
            "{sub} spans fewer than 2 cells per axis"
        )));
    }
    let mut values = Vec::with_capacity(grid.num_nodes());
    for j in cr.j0..=cr.j1 {
        for i in cr.i0..=cr.i1 {
            values.push(field.at(i, j));
        }
    }
    Ok(ScalarField2D::from_raw(grid, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(n: usize) -> Grid {
        Grid::new(Rect::new(-1.0, 1.0, -1.0, 1.0).unwrap(), n, n).unwrap()
    }

    #[test]
    fn gradient_of_constant_and_affine() {
        let g = square(8);
        let c = ScalarField2D::from_fn(g, |_, _| 3.5);
        let lin = ScalarField2D::from_fn(g, |_, y| y);
        for j in 0..8 {
            for i in 0..8 {
                assert_eq!(gradient(&c, (i, j)).unwrap(), [0.0, 0.0]);
                let d = gradient(&lin, (i, j)).unwrap();
                assert!(d[0].abs() < 1e-14 && (d[1] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_with_half_spacing() {
        let g = Grid::new(Rect::new(0.0, 1.0, -1.0, 1.0).unwrap(), 4, 4).unwrap();
        assert_eq!(g.hy, 0.5);
        let f = ScalarField2D::from_fn(g, |_, y| 2.0 * y);
        let d = gradient(&f, (1, 2)).unwrap();
        assert!(d[0].abs() < 1e-14 && (d[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_out_of_range() {
        let f = ScalarField2D::zeros(square(4));
        assert!(matches!(gradient(&f, (4, 0)), Err(Error::Index { .. })));
    }

    #[test]
    fn restrict_full_is_identity() {
        let g = square(8);
        let f = ScalarField2D::from_fn(g, |x, y| x * x - y);
        assert_eq!(restrict(&f, &g.rect).unwrap(), f);
    }

    #[test]
    fn restrict_keeps_values_and_composes() {
        let g = square(8);
        let f = ScalarField2D::from_fn(g, |_, y| y);
        let half = Rect::new(0.0, 1.0, -1.0, 1.0).unwrap();
        let r = restrict(&f, &half).unwrap();
        assert_eq!(r.grid().nx, 4);
        for j in 0..=8 {
            for i in 0..=4 {
                assert_eq!(r.at(i, j), f.at(i + 4, j));
            }
        }
        let inner = Rect::new(0.25, 0.75, -0.5, 0.5).unwrap();
        let twice = restrict(&r, &inner).unwrap();
        let once = restrict(&f, &inner).unwrap();
        assert_eq!(twice.values(), once.values());
    }

    #[test]
    fn restrict_rejects_misaligned() {
        let f = ScalarField2D::zeros(square(8));
        let bad = Rect::new(0.1, 1.0, -1.0, 1.0).unwrap();
        assert!(matches!(restrict(&f, &bad), Err(Error::Alignment(_))));
        let outside = Rect::new(0.0, 2.0, -1.0, 1.0).unwrap();
        assert!(matches!(restrict(&f, &outside), Err(Error::Alignment(_))));
    }

    #[test]
    fn dump_round_trip_is_exact() {
        let g = Grid::new(Rect::new(-3.0, 3.0, -1.0, 1.0).unwrap(), 6, 4).unwrap();
        let f = ScalarField2D::from_fn(g, |x, y| (x * 0.1).sin() + y / 3.0);
        let mut buf = Vec::new();
        f.write_dump(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("6 4\n"));
        let back = ScalarField2D::read_dump(&buf[..]).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn interpolation_is_exact_for_bilinear() {
        let g = square(5);
        let f = ScalarField2D::from_fn(g, |x, y| 1.0 + 2.0 * x - y + 0.5 * x * y);
        let v = f.interpolate(0.13, -0.71).unwrap();
        let exact = 1.0 + 0.26 + 0.71 + 0.5 * 0.13 * -0.71;
        assert!((v - exact).abs() < 1e-12);
        assert!(f.interpolate(1.5, 0.0).is_none());
    }
}
