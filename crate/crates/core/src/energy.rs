//! Discrete two-phase energies, the sliced energy and the Weiss functional.
//!
//! Each cell contributes its forward-difference gradient times the cell area,
//! plus `q^2` times the area if the mean of its four nodes is above
//! `zero_tol` (positive phase) or below `-zero_tol` (negative phase). Weights
//! are sampled at cell centers.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::boundary::Weights;
use crate::error::{Error, Result};
use crate::geometry::{CellRange, Rect, ScalarField2D};

/// Cells whose mean is within this of zero belong to the zero phase.
pub const DEFAULT_ZERO_TOL: f64 = 1e-9;

/// Sub-samples per axis when estimating disk coverage of a boundary cell.
pub const DISK_SUBSAMPLES: usize = 16;

/// Points of the trapezoid rule on the sphere term of the Weiss functional.
pub const CIRCLE_POINTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyReport {
    pub dirichlet: f64,
    /// `q_+^2`-weighted area of the positive phase.
    pub area_plus: f64,
    /// `q_-^2`-weighted area of the negative phase.
    pub area_minus: f64,
    pub total: f64,
    pub sliced_total: f64,
    pub dx_part: f64,
}

/// Energy over a block of cells.
pub fn energy_cells(
    field: &ScalarField2D,
    weights: &Weights,
    cells: &CellRange,
    zero_tol: f64,
) -> EnergyReport {
    let g = field.grid();
    let area = g.cell_area();
    let qp = weights.q_plus.as_constant();
    let qm = weights.q_minus.as_constant();
    let (mut dx, mut dy, mut ap, mut am) = (0.0, 0.0, 0.0, 0.0);
    for j in cells.j0..cells.j1 {
        for i in cells.i0..cells.i1 {
            let u = field.at(i, j);
            let gx = (field.at(i + 1, j) - u) / g.hx;
            let gy = (field.at(i, j + 1) - u) / g.hy;
            dx += gx * gx * area;
            dy += gy * gy * area;
            let mean = field.cell_mean(i, j);
            if mean > zero_tol {
                let q = qp.unwrap_or_else(|| {
                    let (x, y) = g.cell_center(i, j);
                    weights.q_plus.eval(x, y)
                });
                ap += q * q * area;
            } else if mean < -zero_tol {
                let q = qm.unwrap_or_else(|| {
                    let (x, y) = g.cell_center(i, j);
                    weights.q_minus.eval(x, y)
                });
                am += q * q * area;
            }
        }
    }
    let sliced_total = dy + ap + am;
    EnergyReport {
        dirichlet: dx + dy,
        area_plus: ap,
        area_minus: am,
        total: sliced_total + dx,
        sliced_total,
        dx_part: dx,
    }
}

#[allow(non_snake_case)]
pub fn energy_J(field: &ScalarField2D, weights: &Weights, sub: &Rect, zero_tol: f64) -> Result<EnergyReport> {
    let cells = field.grid().cell_range(sub)?;
    Ok(energy_cells(field, weights, &cells, zero_tol))
}

/// Energy with only the `y`-derivative in the Dirichlet term, unit weights.
#[allow(non_snake_case)]
pub fn sliced_energy_S(field: &ScalarField2D, sub: &Rect, zero_tol: f64) -> Result<f64> {
    Ok(energy_J(field, &Weights::unit(), sub, zero_tol)?.sliced_total)
}

pub fn dx_energy(field: &ScalarField2D, sub: &Rect) -> Result<f64> {
    Ok(energy_J(field, &Weights::unit(), sub, DEFAULT_ZERO_TOL)?.dx_part)
}

/// Fraction of cell `(i, j)` inside the closed disk, by sub-sampling straddling cells.
pub(crate) fn disk_coverage(field: &ScalarField2D, i: usize, j: usize, c: (f64, f64), r: f64) -> f64 {
    let g = field.grid();
    let (x0, y0) = (g.x(i), g.y(j));
    let (x1, y1) = (g.x(i + 1), g.y(j + 1));
    let r2 = r * r;
    let far = |a: f64, b: f64, m: f64| (a - m).abs().max((b - m).abs());
    let fx = far(x0, x1, c.0);
    let fy = far(y0, y1, c.1);
    if fx * fx + fy * fy <= r2 {
        return 1.0;
    }
    let nx = c.0.clamp(x0, x1) - c.0;
    let ny = c.1.clamp(y0, y1) - c.1;
    if nx * nx + ny * ny >= r2 {
        return 0.0;
    }
    let n = DISK_SUBSAMPLES;
    let mut inside = 0usize;
    for b in 0..n {
        let y = y0 + (b as f64 + 0.5) / n as f64 * (y1 - y0) - c.1;
        for a in 0..n {
            let x = x0 + (a as f64 + 0.5) / n as f64 * (x1 - x0) - c.0;
            if x * x + y * y <= r2 {
                inside += 1;
            }
        }
    }
    inside as f64 / (n * n) as f64
}

fn check_ball(field: &ScalarField2D, x0: (f64, f64), r: f64) -> Result<()> {
    let g = field.grid();
    if !(r > 0.0) || !x0.0.is_finite() || !x0.1.is_finite() {
        return Err(Error::Domain(format!("bad ball center {x0:?} radius {r}")));
    }
    let rr = &g.rect;
    let slack = 1e-12 * rr.width().max(rr.height());
    if x0.0 - r < rr.x_lo - slack
        || x0.0 + r > rr.x_hi + slack
        || x0.1 - r < rr.y_lo - slack
        || x0.1 + r > rr.y_hi + slack
    {
        return Err(Error::Domain(format!(
            "ball of radius {r} at {x0:?} leaves the domain {rr}"
        )));
    }
    Ok(())
}

/// Cells whose closure can meet the disk.
pub(crate) fn ball_cells(field: &ScalarField2D, x0: (f64, f64), r: f64) -> CellRange {
    let g = field.grid();
    let lo = |v: f64, start: f64, h: f64| (((v - start) / h).floor().max(0.0)) as usize;
    let hi = |v: f64, start: f64, h: f64, n: usize| ((((v - start) / h).ceil()) as usize).min(n);
    CellRange {
        i0: lo(x0.0 - r, g.rect.x_lo, g.hx),
        i1: hi(x0.0 + r, g.rect.x_lo, g.hx, g.nx),
        j0: lo(x0.1 - r, g.rect.y_lo, g.hy),
        j1: hi(x0.1 + r, g.rect.y_lo, g.hy, g.ny),
    }
}

/// Energy restricted to a disk, weighting straddling cells by their sampled coverage.
pub fn ball_energy(
    field: &ScalarField2D,
    weights: &Weights,
    x0: (f64, f64),
    r: f64,
    zero_tol: f64,
) -> Result<f64> {
    check_ball(field, x0, r)?;
    let g = field.grid();
    let cells = ball_cells(field, x0, r);
    let area = g.cell_area();
    let mut total = 0.0;
    for j in cells.j0..cells.j1 {
        for i in cells.i0..cells.i1 {
            let cov = disk_coverage(field, i, j, x0, r);
            if cov == 0.0 {
                continue;
            }
            let u = field.at(i, j);
            let gx = (field.at(i + 1, j) - u) / g.hx;
            let gy = (field.at(i, j + 1) - u) / g.hy;
            let mean = field.cell_mean(i, j);
            let (cx, cy) = g.cell_center(i, j);
            let q2 = if mean > zero_tol {
                let q = weights.q_plus.eval(cx, cy);
                q * q
            } else if mean < -zero_tol {
                let q = weights.q_minus.eval(cx, cy);
                q * q
            } else {
                0.0
            };
            total += cov * area * (gx * gx + gy * gy + q2);
        }
    }
    Ok(total)
}

/// Weiss functional in the plane:
/// `r^-2 int_B (|grad u|^2 + q^2 chi) - r^-3 int_dB u^2`.
pub fn weiss(
    field: &ScalarField2D,
    weights: &Weights,
    x0: (f64, f64),
    r: f64,
    zero_tol: f64,
) -> Result<f64> {
    let g = field.grid();
    if r < 4.0 * g.h_max() {
        return Err(Error::Domain(format!(
            "radius {r} below four grid spacings ({})",
            4.0 * g.h_max()
        )));
    }
    let volume = ball_energy(field, weights, x0, r, zero_tol)?;
    let mut ring = 0.0;
    for k in 0..CIRCLE_POINTS {
        let t = 2.0 * PI * k as f64 / CIRCLE_POINTS as f64;
        let x = (x0.0 + r * t.cos()).clamp(g.rect.x_lo, g.rect.x_hi);
        let y = (x0.1 + r * t.sin()).clamp(g.rect.y_lo, g.rect.y_hi);
        let u = field
            .interpolate(x, y)
            .ok_or_else(|| Error::Domain(format!("circle point ({x}, {y}) outside domain")))?;
        ring += u * u;
    }
    let boundary = ring * 2.0 * PI * r / CIRCLE_POINTS as f64;
    Ok(volume / (r * r) - boundary / (r * r * r))
}

/// Largest discrete gradient magnitude over the cells of `sub`, which must
/// stay at least two cells away from the edge of the field.
pub fn lipschitz_estimate(field: &ScalarField2D, sub: &Rect) -> Result<f64> {
    let g = field.grid();
    let cells = g.cell_range(sub)?;
    if cells.i0 < 2 || cells.j0 < 2 || cells.i1 + 2 > g.nx || cells.j1 + 2 > g.ny {
        return Err(Error::Domain(format!(
            "{sub} must keep a margin of two cells inside {}",
            g.rect
        )));
    }
    let mut best: f64 = 0.0;
    for j in cells.j0..cells.j1 {
        for i in cells.i0..cells.i1 {
            let u = field.at(i, j);
            let gx = (field.at(i + 1, j) - u) / g.hx;
            let gy = (field.at(i, j + 1) - u) / g.hy;
            best = best.max((gx * gx + gy * gy).sqrt());
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Grid;

    fn grid(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Grid {
        Grid::new(Rect::new(x.0, x.1, y.0, y.1).unwrap(), nx, ny).unwrap()
    }

    #[test]
    fn linear_slice_energy() {
        let g = grid((0.0, 1.0), (-1.0, 1.0), 8, 64);
        let u = ScalarField2D::from_fn(g, |_, y| 2.0 * y);
        let e = energy_J(&u, &Weights::unit(), &g.rect, DEFAULT_ZERO_TOL).unwrap();
        assert!((e.dirichlet - 8.0).abs() < 1e-12);
        assert!((e.area_plus + e.area_minus - 2.0).abs() < 1e-12);
        assert!((e.total - 10.0).abs() < 1e-12);
        assert!((sliced_energy_S(&u, &g.rect, 0.0).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn zero_field() {
        let g = grid((0.0, 1.0), (-1.0, 1.0), 4, 4);
        let e = energy_J(&ScalarField2D::zeros(g), &Weights::unit(), &g.rect, 0.0).unwrap();
        assert_eq!(e.total, 0.0);
    }

    #[test]
    fn pool_slice_extended_in_x() {
        let g = grid((0.0, 1.0), (-1.0, 1.0), 4, 640);
        let u = ScalarField2D::from_fn(g, |_, y| crate::slice1d::slice_value(0.9, y));
        let e = energy_J(&u, &Weights::unit(), &g.rect, DEFAULT_ZERO_TOL).unwrap();
        assert!((e.total - 3.6).abs() < 2.0 * g.hy);
    }

    #[test]
    fn dx_energy_cases() {
        let g = grid((0.0, 1.0), (0.0, 1.0), 16, 16);
        let u = ScalarField2D::from_fn(g, |x, _| x);
        assert!((dx_energy(&u, &g.rect).unwrap() - 1.0).abs() < 1e-12);
        let v = ScalarField2D::from_fn(g, |_, y| y * y);
        assert_eq!(dx_energy(&v, &g.rect).unwrap(), 0.0);
        let s = sliced_energy_S(&u, &g.rect, DEFAULT_ZERO_TOL).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn additivity_over_split() {
        let g = grid((-2.0, 2.0), (-1.0, 1.0), 16, 8);
        let u = ScalarField2D::from_fn(g, |x, y| (x * 1.3).sin() * y - 0.2 * x);
        let w = Weights::unit();
        let all = energy_J(&u, &w, &g.rect, 0.0).unwrap().total;
        let l = energy_J(&u, &w, &Rect::new(-2.0, 0.5, -1.0, 1.0).unwrap(), 0.0).unwrap().total;
        let r = energy_J(&u, &w, &Rect::new(0.5, 2.0, -1.0, 1.0).unwrap(), 0.0).unwrap().total;
        assert!((all - l - r).abs() < 1e-12 * all);
    }

    #[test]
    fn weiss_linear_and_zero() {
        let g = grid((-1.0, 1.0), (-1.0, 1.0), 128, 128);
        let u = ScalarField2D::from_fn(g, |_, y| y);
        let w = Weights::unit();
        let val = weiss(&u, &w, (0.0, 0.0), 0.5, DEFAULT_ZERO_TOL).unwrap();
        assert!((val - PI).abs() < 0.02, "{val}");
        let z = ScalarField2D::zeros(g);
        assert_eq!(weiss(&z, &w, (0.0, 0.0), 0.5, 0.0).unwrap(), 0.0);
        assert!(weiss(&u, &w, (0.8, 0.0), 0.5, 0.0).is_err());
        assert!(weiss(&u, &w, (0.0, 0.0), 0.02, 0.0).is_err());
    }

    #[test]
    fn weiss_two_slopes() {
        let g = grid((-1.0, 1.0), (-1.0, 1.0), 128, 128);
        let u = ScalarField2D::from_fn(g, |_, y| if y > 0.0 { y } else { 2.0 * y });
        let w = Weights::constant(1.0, 2.0).unwrap();
        let val = weiss(&u, &w, (0.1, 0.0), 0.6, DEFAULT_ZERO_TOL).unwrap();
        assert!((val - 2.5 * PI).abs() < 0.05, "{val}");
    }

    #[test]
    fn lipschitz_cases() {
        let g = grid((-1.0, 1.0), (-1.0, 1.0), 16, 16);
        let u = ScalarField2D::from_fn(g, |_, y| 2.0 * y);
        let inner = Rect::new(-0.5, 0.5, -0.5, 0.5).unwrap();
        assert!((lipschitz_estimate(&u, &inner).unwrap() - 2.0).abs() < 1e-12);
        let edge = Rect::new(-1.0, 0.5, -0.5, 0.5).unwrap();
        assert!(lipschitz_estimate(&u, &edge).is_err());
    }
}
