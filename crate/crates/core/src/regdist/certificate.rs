//! Per-ball excess of a built field over a family of competitors, and the
//! fitted decay exponent.
//!
//! The competitors only bound the true local minimum from above, so the
//! excess here is a lower bound for the real one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boundary::Weights;
use crate::energy::{ball_cells, energy_cells, DEFAULT_ZERO_TOL};
use crate::error::{Error, Result};
use crate::geometry::ScalarField2D;
use crate::minimize2d::audit::{ball_mask, local_margin, standard_competitors};
use crate::minimize2d::CompetitorKind;

const DIM: f64 = 2.0;
const SLOPE_SLACK: f64 = 0.3;
/// Excess below `NOISE_REL * max(1, J_B(u))` counts as zero.
const NOISE_REL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallExcess {
    pub center: (f64, f64),
    pub radius: f64,
    pub excess: f64,
    pub best: CompetitorKind,
    pub local_energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusLevel {
    pub radius: f64,
    pub max_excess: f64,
    pub above_noise: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub balls: Vec<BallExcess>,
    pub levels: Vec<RadiusLevel>,
    /// Least-squares slope of `log max_excess` against `log r` over the
    /// levels above noise; absent with fewer than two such levels.
    pub slope: Option<f64>,
    pub exponent: f64,
    pub threshold: f64,
    /// `max_r max_excess(r) / r^exponent`.
    pub fitted_c: f64,
    pub noise_level: bool,
    pub passed: bool,
}

/// Least-squares plane through the masked nodes.
fn plane_fit(u: &ScalarField2D, mask: &[bool], c: (f64, f64)) -> Option<Vec<f64>> {
    let g = u.grid();
    let (mut n, mut sx, mut sy, mut sxx, mut sxy, mut syy, mut su, mut sxu, mut syu) =
        (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            if !mask[g.idx(i, j)] {
                continue;
            }
            let (x, y, v) = (g.x(i) - c.0, g.y(j) - c.1, u.at(i, j));
            n += 1.0;
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            syy += y * y;
            su += v;
            sxu += x * v;
            syu += y * v;
        }
    }
    let m = [[n, sx, sy], [sx, sxx, sxy], [sy, sxy, syy]];
    let rhs = [su, sxu, syu];
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    if n < 3.0 || d.abs() < 1e-300 {
        return None;
    }
    let mut coef = [0.0; 3];
    for k in 0..3 {
        let mut mk = m;
        for r in 0..3 {
            mk[r][k] = rhs[r];
        }
        coef[k] = det(&mk) / d;
    }
    let mut v = u.values().to_vec();
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let k = g.idx(i, j);
            if mask[k] {
                v[k] = coef[0] + coef[1] * (g.x(i) - c.0) + coef[2] * (g.y(j) - c.1);
            }
        }
    }
    Some(v)
}

/// `u` cut off to zero on the inner half of the ball with a linear ramp out to
/// the rim, so it stays close to `u` across the ball boundary.
fn zero_ramp(u: &ScalarField2D, mask: &[bool], c: (f64, f64), r: f64) -> Vec<f64> {
    let g = u.grid();
    let mut v = u.values().to_vec();
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let k = g.idx(i, j);
            if mask[k] {
                let rho = (g.x(i) - c.0).hypot(g.y(j) - c.1);
                v[k] *= (2.0 * rho / r - 1.0).clamp(0.0, 1.0);
            }
        }
    }
    v
}

fn fit_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Interface nodes: zero nodes next to a nonzero one, or sign changes.
fn interface_nodes(u: &ScalarField2D) -> Vec<(usize, usize)> {
    let g = u.grid();
    let mut out = Vec::new();
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let v = u.at(i, j);
            let mut hit = false;
            for (di, dj) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                let (a, b) = (i as i64 + di, j as i64 + dj);
                if a < 0 || b < 0 || a > g.nx as i64 || b > g.ny as i64 {
                    continue;
                }
                let w = u.at(a as usize, b as usize);
                if (v == 0.0) != (w == 0.0) || v * w < 0.0 {
                    hit = true;
                }
            }
            if hit {
                out.push((i, j));
            }
        }
    }
    out
}

/// Evaluates nested balls at dyadic radii in `[8h, 1/4]` around shared
/// centres, three quarters of them on the free boundary, and fits the decay
/// of the worst excess.
pub fn almost_min_certificate(
    field: &ScalarField2D,
    weights: &Weights,
    holder_alpha: f64,
    n_balls: usize,
    seed: u64,
) -> Result<CertificateReport> {
    if !(holder_alpha > 0.0 && holder_alpha <= 1.0) {
        return Err(Error::Domain(format!("Hölder exponent {holder_alpha} outside (0, 1]")));
    }
    let g = *field.grid();
    let h = g.h_max();
    let r0 = 0.25f64.min(0.45 * g.rect.width().min(g.rect.height()));
    let mut radii = Vec::new();
    let mut r = 8.0 * h;
    while r <= r0 * (1.0 + 1e-9) {
        radii.push(r);
        r *= 2.0;
    }
    if radii.len() < 2 {
        return Err(Error::Domain(format!("grid spacing {h} leaves fewer than two radii in [8h, {r0}]")));
    }
    if n_balls < radii.len() {
        return Err(Error::Domain(format!("need at least {} balls", radii.len())));
    }
    let exponent = DIM + holder_alpha / (4.0 * DIM + 2.0 * holder_alpha);
    let threshold = exponent - SLOPE_SLACK;
    let rect = g.rect;
    let m = r0 + h;
    let inside = |c: (f64, f64)| {
        c.0 - m >= rect.x_lo && c.0 + m <= rect.x_hi && c.1 - m >= rect.y_lo && c.1 + m <= rect.y_hi
    };
    let candidates: Vec<(f64, f64)> = interface_nodes(field)
        .into_iter()
        .map(|(i, j)| (g.x(i), g.y(j)))
        .filter(|&c| inside(c))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // one set of centres shared by every radius
    let per = n_balls.div_ceil(radii.len());
    let centers: Vec<(f64, f64)> = (0..per)
        .map(|b| {
            if b % 4 != 3 && !candidates.is_empty() {
                candidates[rng.gen_range(0..candidates.len())]
            } else {
                (rng.gen_range(rect.x_lo + m..rect.x_hi - m), rng.gen_range(rect.y_lo + m..rect.y_hi - m))
            }
        })
        .collect();
    let mut balls = Vec::new();
    let mut levels = Vec::new();
    for &r in &radii {
        let mut level_max = 0.0f64;
        let mut level_noise = true;
        for &c in &centers {
            let mask = ball_mask(field, c, r);
            let mut comps: Vec<(CompetitorKind, Vec<f64>)> = standard_competitors(field, &mask, c, r)
                .into_iter()
                .filter(|(k, _)| *k != CompetitorKind::ZeroFill)
                .collect();
            comps.push((CompetitorKind::ZeroFill, zero_ramp(field, &mask, c, r)));
            if let Some(p) = plane_fit(field, &mask, c) {
                comps.push((CompetitorKind::TwoPlane, p));
            }
            let local = energy_cells(field, weights, &ball_cells(field, c, r), DEFAULT_ZERO_TOL).total;
            let mut best = (CompetitorKind::Identity, 0.0f64);
            for (kind, v) in &comps {
                let gain = -local_margin(field, v, weights, c, r, DEFAULT_ZERO_TOL);
                if gain > best.1 {
                    best = (*kind, gain);
                }
            }
            let noise = NOISE_REL * local.abs().max(1.0);
            if best.1 > noise {
                level_noise = false;
            }
            level_max = level_max.max(best.1);
            balls.push(BallExcess { center: c, radius: r, excess: best.1, best: best.0, local_energy: local });
        }
        levels.push(RadiusLevel { radius: r, max_excess: level_max, above_noise: !level_noise });
    }
    let pts: Vec<(f64, f64)> = levels
        .iter()
        .filter(|l| l.above_noise)
        .map(|l| (l.radius.ln(), l.max_excess.ln()))
        .collect();
    let slope = fit_slope(&pts);
    let fitted_c = levels
        .iter()
        .map(|l| l.max_excess / l.radius.powf(exponent))
        .fold(0.0, f64::max);
    let noise_level = levels.iter().all(|l| !l.above_noise);
    Ok(CertificateReport {
        balls,
        levels,
        slope,
        exponent,
        threshold,
        fitted_c,
        noise_level,
        passed: slope.map_or(true, |s| s >= threshold),
    })
}
