//! Boundary profiles on the strip `[-3N, 3N] x [-1, 1]` and phase weights.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Grid, Rect};
use crate::slice1d;

/// Relative slack for evaluating profiles at the strip ends.
const END_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    pub n: f64,
    pub alpha: f64,
}

impl ProfileParams {
    pub fn new(n: f64, alpha: f64) -> Result<Self> {
        if !(n >= 1.0 && n.is_finite()) {
            return Err(Error::Domain(format!("N must be >= 1, got {n}")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        Ok(Self { n, alpha })
    }

    pub fn half_length(&self) -> f64 {
        3.0 * self.n
    }

    pub fn rect(&self) -> Rect {
        Rect {
            x_lo: -3.0 * self.n,
            x_hi: 3.0 * self.n,
            y_lo: -1.0,
            y_hi: 1.0,
        }
    }

    /// `|x|` at which the flat profile crosses 1.
    pub fn unit_crossing(&self) -> f64 {
        (1.0 + 2.0 * self.alpha) * self.n / (1.0 + self.alpha)
    }
}

fn check_end(v: f64, end: f64, what: &str) -> Result<()> {
    if v > end * (1.0 + END_SLACK) || !v.is_finite() {
        return Err(Error::Domain(format!("{what} = {v} outside [0, {end}]")));
    }
    Ok(())
}

/// Flat profile: `1 - alpha` on the middle third, a linear ramp, then 2.
pub fn f_flat(x: f64, p: &ProfileParams) -> Result<f64> {
    let ax = x.abs();
    check_end(ax, 3.0 * p.n, "|x|")?;
    Ok(f_flat_raw(ax, p.n, p.alpha))
}

pub(crate) fn f_flat_raw(ax: f64, n: f64, alpha: f64) -> f64 {
    if ax <= n {
        1.0 - alpha
    } else if ax <= 2.0 * n {
        ax * (1.0 + alpha) / n - 2.0 * alpha
    } else {
        2.0
    }
}

/// Derivative of the flat profile in `|x|` (one-sided at the kinks, taking the ramp value).
pub fn f_flat_slope(x: f64, p: &ProfileParams) -> f64 {
    let ax = x.abs();
    if ax < p.n || ax > 2.0 * p.n {
        0.0
    } else {
        (1.0 + p.alpha) / p.n
    }
}

/// Radial profile with logarithmic growth between `r = 1` and `r = 2N`.
pub fn f_radial(r: f64, p: &ProfileParams) -> Result<f64> {
    if r < 0.0 {
        return Err(Error::Domain(format!("radius must be nonnegative, got {r}")));
    }
    check_end(r, 3.0 * p.n, "r")?;
    Ok(f_radial_raw(r, p.n, p.alpha))
}

/// Radial profile without parameter validation; `alpha = 0` is allowed.
pub(crate) fn f_radial_raw(r: f64, n: f64, alpha: f64) -> f64 {
    if r <= 1.0 {
        1.0 - alpha
    } else if r <= 2.0 * n {
        (r.ln() / (2.0 * n).ln() + 1.0) * (1.0 + alpha) - 2.0 * alpha
    } else {
        2.0
    }
}

/// Dirichlet data on the strip. `Constant` keeps `f` fixed along the top and
/// bottom edges and is used to check the solver against exact slice minimizers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryData {
    Flat(ProfileParams),
    Constant { f: f64, n: f64 },
}

impl BoundaryData {
    pub fn n(&self) -> f64 {
        match self {
            Self::Flat(p) => p.n,
            Self::Constant { n, .. } => *n,
        }
    }

    pub fn rect(&self) -> Rect {
        let n = self.n();
        Rect {
            x_lo: -3.0 * n,
            x_hi: 3.0 * n,
            y_lo: -1.0,
            y_hi: 1.0,
        }
    }

    /// Boundary value `f(x)` on the top edge; `x` is clamped to the strip.
    pub fn profile(&self, x: f64) -> f64 {
        match self {
            Self::Flat(p) => f_flat_raw(x.abs().min(3.0 * p.n), p.n, p.alpha),
            Self::Constant { f, .. } => *f,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::Flat(p) => ProfileParams::new(p.n, p.alpha).map(|_| ()),
            Self::Constant { f, n } => {
                if !(*f >= 0.0 && f.is_finite() && *n > 0.0) {
                    return Err(Error::Domain(format!("bad constant data f = {f}, N = {n}")));
                }
                Ok(())
            }
        }
    }

    /// Values on every boundary node of `grid`.
    ///
    /// Top and bottom get `+f(x)` and `-f(x)`. The side edges carry the slice
    /// minimizer for `f(x_side)`; for the flat profile this is the linear
    /// interpolation `2y`.
    pub fn dirichlet_data(&self, grid: &Grid) -> Result<BoundaryAssignment> {
        self.validate()?;
        let r = self.rect();
        let tol = 1e-9 * r.width();
        let g = &grid.rect;
        if (g.x_lo - r.x_lo).abs() > tol
            || (g.x_hi - r.x_hi).abs() > tol
            || (g.y_lo - r.y_lo).abs() > 1e-12
            || (g.y_hi - r.y_hi).abs() > 1e-12
        {
            return Err(Error::Domain(format!(
                "grid rectangle {g} does not match the strip {r}"
            )));
        }
        let mut nodes = Vec::with_capacity(2 * (grid.nx + grid.ny));
        for j in 0..=grid.ny {
            for i in 0..=grid.nx {
                if !grid.is_boundary_node(i, j) {
                    continue;
                }
                let x = grid.x(i);
                // exactly antisymmetric heights, so the data is exactly odd
                let y = 0.5 * (r.y_lo + r.y_hi) + (2.0 * j as f64 - grid.ny as f64) / (2.0 * grid.ny as f64) * r.height();
                let f = self.profile(x);
                let v = if j == grid.ny {
                    f
                } else if j == 0 {
                    -f
                } else {
                    slice1d::slice_value(f, y)
                };
                nodes.push((grid.idx(i, j), v));
            }
        }
        Ok(BoundaryAssignment { grid: *grid, nodes })
    }
}

/// Prescribed values on the boundary nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryAssignment {
    pub grid: Grid,
    /// `(flat node index, value)` in row-major order.
    pub nodes: Vec<(usize, f64)>,
}

impl BoundaryAssignment {
    pub fn value_at(&self, i: usize, j: usize) -> Option<f64> {
        let k = self.grid.idx(i, j);
        self.nodes
            .binary_search_by_key(&k, |&(idx, _)| idx)
            .ok()
            .map(|p| self.nodes[p].1)
    }

    pub fn apply(&self, values: &mut [f64]) {
        for &(k, v) in &self.nodes {
            values[k] = v;
        }
    }
}

/// A positive weight as a function of position.
#[derive(Clone)]
pub enum WeightFn {
    Constant(f64),
    Field(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl WeightFn {
    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Field(f) => f(x, y),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Self::Constant(c) => Some(*c),
            Self::Field(_) => None,
        }
    }
}

impl fmt::Debug for WeightFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Field(_) => write!(f, "Field(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Weights {
    pub q_plus: WeightFn,
    pub q_minus: WeightFn,
    pub holder_alpha: f64,
    pub c0: f64,
}

impl Weights {
    pub fn unit() -> Self {
        Self::constant(1.0, 1.0).expect("unit weights are valid")
    }

    pub fn constant(q_plus: f64, q_minus: f64) -> Result<Self> {
        if !(q_plus > 0.0 && q_minus > 0.0 && q_plus.is_finite() && q_minus.is_finite()) {
            return Err(Error::Domain(format!(
                "weights must be positive, got {q_plus}, {q_minus}"
            )));
        }
        let lo = q_plus.min(q_minus);
        let hi = q_plus.max(q_minus);
        Ok(Self {
            q_plus: WeightFn::Constant(q_plus),
            q_minus: WeightFn::Constant(q_minus),
            holder_alpha: 1.0,
            c0: lo.min(1.0 / hi),
        })
    }

    pub fn new(q_plus: WeightFn, q_minus: WeightFn, holder_alpha: f64, c0: f64) -> Result<Self> {
        if !(holder_alpha > 0.0 && holder_alpha <= 1.0) {
            return Err(Error::Domain(format!(
                "Holder exponent must lie in (0, 1], got {holder_alpha}"
            )));
        }
        if !(c0 > 0.0 && c0 <= 1.0) {
            return Err(Error::Domain(format!("c0 must lie in (0, 1], got {c0}")));
        }
        Ok(Self {
            q_plus,
            q_minus,
            holder_alpha,
            c0,
        })
    }

    pub fn is_unit(&self) -> bool {
        self.q_plus.as_constant() == Some(1.0) && self.q_minus.as_constant() == Some(1.0)
    }

    /// Checks `c0 <= q <= 1/c0` at the given sample points.
    pub fn check_bounds(&self, points: &[(f64, f64)]) -> Result<()> {
        for &(x, y) in points {
            for q in [self.q_plus.eval(x, y), self.q_minus.eval(x, y)] {
                if !(q >= self.c0 && q <= 1.0 / self.c0) {
                    return Err(Error::Domain(format!(
                        "weight {q} at ({x}, {y}) outside [{}, {}]",
                        self.c0,
                        1.0 / self.c0
                    )));
                }
            }
        }
        Ok(())
    }
}

impl Default for Weights {
    fn default() -> Self {
        Self::unit()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: f64) -> ProfileParams {
        ProfileParams::new(n, 0.1).unwrap()
    }

    #[test]
    fn flat_profile_values() {
        let p10 = p(10.0);
        assert!((f_flat(0.0, &p10).unwrap() - 0.9).abs() < 1e-15);
        assert_eq!(f_flat(25.0, &p10).unwrap(), 2.0);
        assert!((f_flat(p10.unit_crossing(), &p10).unwrap() - 1.0).abs() < 1e-14);
        assert!((f_flat(-p10.unit_crossing(), &p10).unwrap() - 1.0).abs() < 1e-14);
        assert!(matches!(f_flat(30.5, &p10), Err(Error::Domain(_))));
    }

    #[test]
    fn flat_profile_continuous_at_kinks() {
        let q = p(7.0);
        for x in [q.n, 2.0 * q.n] {
            let l = f_flat(x - 1e-9, &q).unwrap();
            let r = f_flat(x + 1e-9, &q).unwrap();
            assert!((l - r).abs() < 1e-8);
        }
    }

    #[test]
    fn radial_profile_values() {
        let q = p(50.0);
        assert!((f_radial(1.0, &q).unwrap() - 0.9).abs() < 1e-15);
        assert!((f_radial(100.0, &q).unwrap() - 2.0).abs() < 1e-14);
        assert!((f_radial(100f64.sqrt(), &q).unwrap() - 1.45).abs() < 1e-14);
        assert!(f_radial(-0.1, &q).is_err());
        assert!(f_radial(151.0, &q).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ProfileParams::new(0.5, 0.1).is_err());
        assert!(ProfileParams::new(2.0, 0.0).is_err());
        assert!(ProfileParams::new(2.0, 1.0).is_err());
    }

    #[test]
    fn dirichlet_data_on_strip() {
        let q = p(2.0);
        let grid = Grid::new(q.rect(), 24, 8).unwrap();
        let data = BoundaryData::Flat(q).dirichlet_data(&grid).unwrap();
        let mid = 12;
        assert!((data.value_at(mid, 8).unwrap() - 0.9).abs() < 1e-15);
        assert!((data.value_at(mid, 0).unwrap() + 0.9).abs() < 1e-15);
        for j in 0..=8 {
            let y = grid.y(j);
            assert!((data.value_at(24, j).unwrap() - 2.0 * y).abs() < 1e-14);
            assert!((data.value_at(0, j).unwrap() - 2.0 * y).abs() < 1e-14);
        }
        assert_eq!(data.value_at(3, 3), None);
        for i in 0..=24 {
            assert_eq!(data.value_at(i, 0).unwrap(), -data.value_at(i, 8).unwrap());
        }
    }

    #[test]
    fn dirichlet_data_rejects_wrong_rect() {
        let q = p(2.0);
        let grid = Grid::new(Rect::new(-1.0, 1.0, -1.0, 1.0).unwrap(), 8, 8).unwrap();
        assert!(BoundaryData::Flat(q).dirichlet_data(&grid).is_err());
    }

    #[test]
    fn weights_bounds() {
        let w = Weights::constant(1.0, 2.0).unwrap();
        assert!((w.c0 - 0.5).abs() < 1e-15);
        w.check_bounds(&[(0.0, 0.0)]).unwrap();
        assert!(Weights::constant(0.0, 1.0).is_err());
        assert!(Weights::unit().is_unit());
    }
}
