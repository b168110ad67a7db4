//! Ball-local competitor checks for a computed minimizer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boundary::Weights;
use crate::energy::{ball_cells, energy_cells, DEFAULT_ZERO_TOL};
use crate::error::{Error, Result};
use crate::geometry::ScalarField2D;

use super::linalg::harmonic_fill;
use super::{slice_field_for, SolveResult};

/// Audit tolerance is `C_AUDIT * h * r` for a ball of radius `r`.
pub const C_AUDIT: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompetitorKind {
    Identity,
    Harmonic,
    ZeroFill,
    SliceSplice,
    BumpUp,
    BumpDown,
    TwoPlane,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub center: (f64, f64),
    pub radius: f64,
    pub kind: CompetitorKind,
    /// `J(competitor) - J(u)` over the cells meeting the ball.
    pub margin: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub records: Vec<AuditRecord>,
    pub worst_margin: f64,
    pub violations: Vec<AuditRecord>,
    pub passed: bool,
}

/// Interior grid nodes strictly inside the disk.
pub(crate) fn ball_mask(field: &ScalarField2D, c: (f64, f64), r: f64) -> Vec<bool> {
    let g = field.grid();
    let cells = ball_cells(field, c, r);
    let mut mask = vec![false; g.num_nodes()];
    for j in cells.j0..=cells.j1 {
        for i in cells.i0..=cells.i1 {
            if g.is_boundary_node(i, j) {
                continue;
            }
            let (dx, dy) = (g.x(i) - c.0, g.y(j) - c.1);
            if dx * dx + dy * dy < r * r {
                mask[g.idx(i, j)] = true;
            }
        }
    }
    mask
}

/// Energy difference `J(v) - J(u)` on the cells meeting the ball, where `v`
/// differs from `u` only on the ball mask.
pub(crate) fn local_margin(
    u: &ScalarField2D,
    v: &[f64],
    weights: &Weights,
    c: (f64, f64),
    r: f64,
    zero_tol: f64,
) -> f64 {
    let cells = ball_cells(u, c, r);
    let vf = ScalarField2D::from_raw(*u.grid(), v.to_vec());
    energy_cells(&vf, weights, &cells, zero_tol).total - energy_cells(u, weights, &cells, zero_tol).total
}

/// Competitors shared by the minimizer audit and the almost-minimality certificate.
pub(crate) fn standard_competitors(
    u: &ScalarField2D,
    mask: &[bool],
    c: (f64, f64),
    r: f64,
) -> Vec<(CompetitorKind, Vec<f64>)> {
    let g = u.grid();
    let base = u.values();
    let mut out = Vec::new();
    let mut harm = base.to_vec();
    harmonic_fill(g, &mut harm, mask, 1e-10, 2000);
    out.push((CompetitorKind::Harmonic, harm));
    let zero: Vec<f64> = base
        .iter()
        .zip(mask)
        .map(|(&v, &m)| if m { 0.0 } else { v })
        .collect();
    out.push((CompetitorKind::ZeroFill, zero));
    let amp = 0.05 * r;
    for (kind, s) in [(CompetitorKind::BumpUp, 1.0), (CompetitorKind::BumpDown, -1.0)] {
        let mut v = base.to_vec();
        for j in 0..=g.ny {
            for i in 0..=g.nx {
                let k = g.idx(i, j);
                if mask[k] {
                    let (dx, dy) = (g.x(i) - c.0, g.y(j) - c.1);
                    v[k] += s * amp * (1.0 - (dx * dx + dy * dy) / (r * r)).max(0.0);
                }
            }
        }
        out.push((kind, v));
    }
    out
}

/// Samples `n_balls` balls inside the strip and checks that no competitor
/// undercuts `u` by more than `C_AUDIT * h * r`.
pub fn competitor_audit(result: &SolveResult, weights: &Weights, data: &crate::boundary::BoundaryData, n_balls: usize, seed: u64) -> Result<AuditReport> {
    let u = &result.u;
    let g = *u.grid();
    let h = g.h_max();
    let r_hi = 0.5f64.min(0.45 * g.rect.height());
    let r_lo = (4.0 * h).min(r_hi);
    let slice = slice_field_for(data, &g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    for _ in 0..n_balls {
        let r = if r_hi > r_lo { rng.gen_range(r_lo..=r_hi) } else { r_hi };
        let m = r + h;
        let rect = g.rect;
        if rect.width() <= 2.0 * m || rect.height() <= 2.0 * m {
            return Err(Error::Domain(format!("ball radius {r} does not fit in {rect}")));
        }
        let c = (
            rng.gen_range(rect.x_lo + m..rect.x_hi - m),
            rng.gen_range(rect.y_lo + m..rect.y_hi - m),
        );
        let mask = ball_mask(u, c, r);
        let tol = C_AUDIT * h * r;
        let mut comps = standard_competitors(u, &mask, c, r);
        let spliced: Vec<f64> = u
            .values()
            .iter()
            .zip(slice.values())
            .zip(&mask)
            .map(|((&a, &b), &m)| if m { b } else { a })
            .collect();
        comps.push((CompetitorKind::SliceSplice, spliced));
        for (kind, v) in comps {
            let margin = local_margin(u, &v, weights, c, r, DEFAULT_ZERO_TOL);
            records.push(AuditRecord {
                center: c,
                radius: r,
                kind,
                margin,
                tol,
            });
        }
    }
    let worst_margin = records.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    let violations: Vec<AuditRecord> = records.iter().filter(|r| r.margin < -r.tol).copied().collect();
    Ok(AuditReport {
        passed: violations.is_empty(),
        worst_margin: if records.is_empty() { 0.0 } else { worst_margin },
        violations,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Grid, Rect};

    #[test]
    fn identity_competitor_has_zero_margin() {
        let g = Grid::new(Rect::new(-1.0, 1.0, -1.0, 1.0).unwrap(), 32, 32).unwrap();
        let u = ScalarField2D::from_fn(g, |_, y| y);
        let m = local_margin(&u, u.values(), &Weights::unit(), (0.1, 0.0), 0.3, 0.0);
        assert_eq!(m, 0.0);
    }

    #[test]
    fn linear_field_beats_its_competitors() {
        let g = Grid::new(Rect::new(-1.0, 1.0, -1.0, 1.0).unwrap(), 64, 64).unwrap();
        let u = ScalarField2D::from_fn(g, |_, y| y);
        let (c, r) = ((0.0, 0.0), 0.4);
        let mask = ball_mask(&u, c, r);
        for (kind, v) in standard_competitors(&u, &mask, c, r) {
            let m = local_margin(&u, &v, &Weights::unit(), c, r, DEFAULT_ZERO_TOL);
            assert!(m >= -1e-9, "{kind:?}: {m}");
        }
    }

    #[test]
    fn zero_fill_in_zero_region_is_free() {
        let g = Grid::new(Rect::new(-1.0, 1.0, -1.0, 1.0).unwrap(), 32, 32).unwrap();
        let u = ScalarField2D::from_fn(g, |_, y| if y.abs() < 0.5 { 0.0 } else { y - 0.5 * y.signum() });
        let (c, r) = ((0.0, 0.0), 0.3);
        let mask = ball_mask(&u, c, r);
        let comps = standard_competitors(&u, &mask, c, r);
        let zero = &comps.iter().find(|(k, _)| *k == CompetitorKind::ZeroFill).unwrap().1;
        assert_eq!(local_margin(&u, zero, &Weights::unit(), c, r, 0.0), 0.0);
    }
}
