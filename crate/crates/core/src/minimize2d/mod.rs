//! Discrete minimization of the two-phase energy on the strip.
//!
//! The solver starts from the slice field, runs preconditioned nonlinear
//! conjugate gradients on a smoothed energy for a decreasing sequence of
//! smoothing widths, then zeroes nodes where that lowers the sharp energy and
//! replaces each phase by its discrete harmonic extension when that helps.

pub(crate) mod audit;
pub(crate) mod linalg;
mod smooth;

use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryData, ProfileParams, Weights};
use crate::energy::{energy_J, EnergyReport, DEFAULT_ZERO_TOL};
use crate::error::{Error, Result};
use crate::geometry::{Grid, ScalarField2D};
use crate::slice1d::slice_value;

pub use audit::{competitor_audit, AuditRecord, AuditReport, CompetitorKind, C_AUDIT};
pub use linalg_api::harmonic_replace;

use linalg::{dirichlet_curvature, dot, ColumnPrecond};
use smooth::SmoothEnergy;

/// Iterations over which the relative energy decrease is measured.
pub const CONVERGENCE_WINDOW: usize = 50;

const POLISH_ROUNDS: usize = 3;

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub data: BoundaryData,
    pub grid: Grid,
    pub weights: Weights,
    pub eps_schedule: Vec<f64>,
    /// Iteration cap per smoothing stage.
    pub max_iter: usize,
    pub rel_tol: f64,
    /// Seed for randomized steps; the descent itself is deterministic.
    pub seed: u64,
}

impl SolveConfig {
    /// Default grid and schedule for the flat profile with vertical spacing `hy`.
    pub fn new(profile: ProfileParams, hy: f64) -> Result<Self> {
        Self::for_data(BoundaryData::Flat(profile), hy)
    }

    pub fn for_data(data: BoundaryData, hy: f64) -> Result<Self> {
        if !(hy > 0.0 && hy <= 0.5) {
            return Err(Error::Domain(format!("hy must lie in (0, 1/2], got {hy}")));
        }
        let grid = Grid::with_max_spacing(data.rect(), 0.125, hy)?;
        let hy = grid.hy;
        Ok(Self {
            data,
            grid,
            weights: Weights::unit(),
            eps_schedule: vec![4.0 * hy, hy, 0.25 * hy],
            max_iter: 20_000,
            rel_tol: 1e-9,
            seed: 0,
        })
    }

    /// Whether iterates are kept odd in `y`. Requires an even row count and
    /// equal constant phase weights; the boundary data is always odd.
    pub fn odd_symmetric(&self) -> bool {
        self.grid.ny % 2 == 0
            && matches!(
                (self.weights.q_plus.as_constant(), self.weights.q_minus.as_constant()),
                (Some(a), Some(b)) if a == b
            )
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_schedule.is_empty() {
            return Err(Error::Domain("empty smoothing schedule".into()));
        }
        if self.eps_schedule.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::Domain("smoothing schedule must be strictly decreasing".into()));
        }
        let last = *self.eps_schedule.last().unwrap();
        if last < 0.25 * self.grid.hy * (1.0 - 1e-9) {
            return Err(Error::Domain(format!(
                "last smoothing width {last} is below hy/4"
            )));
        }
        if !(self.rel_tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Domain("rel_tol and max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub u: ScalarField2D,
    /// Smoothed energy after every accepted step, all stages concatenated.
    pub energy_history: Vec<f64>,
    /// Index into `energy_history` where each stage ends.
    pub stage_ends: Vec<usize>,
    pub converged: bool,
    pub final_energy: EnergyReport,
    pub zeroed_nodes: usize,
    pub harmonic_accepted: [bool; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveSummary {
    pub converged: bool,
    pub iterations: usize,
    pub stage_ends: Vec<usize>,
    pub zeroed_nodes: usize,
    pub harmonic_accepted: [bool; 2],
    pub final_energy: EnergyReport,
}

impl SolveResult {
    pub fn summary(&self) -> SolveSummary {
        SolveSummary {
            converged: self.converged,
            iterations: self.energy_history.len(),
            stage_ends: self.stage_ends.clone(),
            zeroed_nodes: self.zeroed_nodes,
            harmonic_accepted: self.harmonic_accepted,
            final_energy: self.final_energy,
        }
    }
}

/// Nodal slice minimizers for the flat profile.
pub fn slice_field(profile: &ProfileParams, grid: &Grid) -> Result<ScalarField2D> {
    slice_field_for(&BoundaryData::Flat(*profile), grid)
}

pub fn slice_field_for(data: &BoundaryData, grid: &Grid) -> Result<ScalarField2D> {
    // validates the rectangle
    let bc = data.dirichlet_data(grid)?;
    let mut values = ScalarField2D::from_fn(*grid, |x, y| slice_value(data.profile(x), y)).into_values();
    bc.apply(&mut values);
    ScalarField2D::new(*grid, values)
}

fn check_finite(v: f64, stage: usize) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Numeric(format!("energy became {v} in stage {stage}")))
    }
}

struct StageOutcome {
    converged: bool,
}

fn run_stage(
    problem: &SmoothEnergy,
    base_pc: &ColumnPrecond,
    free: &[bool],
    u: &mut [f64],
    eps: f64,
    stage: usize,
    cfg: &SolveConfig,
    history: &mut Vec<f64>,
) -> Result<StageOutcome> {
    let n = u.len();
    let grid = problem.grid;
    let mut g = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut extra = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut e = problem.value(u, eps);
    check_finite(e, stage)?;
    let start = history.len();
    history.push(e);

    let odd = cfg.odd_symmetric();
    let grad = |u: &[f64], g: &mut [f64], z: &mut [f64], extra: &mut [f64]| {
        problem.gradient(u, eps, g);
        for k in 0..n {
            if !free[k] {
                g[k] = 0.0;
            }
        }
        problem.area_diag(u, eps, extra);
        let mut pc = base_pc.with_extra(extra, free);
        pc.solve(g, z);
        for k in 0..n {
            if !free[k] {
                z[k] = 0.0;
            }
        }
        if odd {
            odd_project(&grid, z);
        }
    };

    grad(u, &mut g, &mut z, &mut extra);
    let mut gz = dot(&g, &z);
    for k in 0..n {
        d[k] = -z[k];
    }
    let mut restarted = true;
    for _ in 0..cfg.max_iter {
        let mut gd = dot(&g, &d);
        if gd >= 0.0 {
            for k in 0..n {
                d[k] = -z[k];
            }
            gd = -gz;
            restarted = true;
        }
        if gd.abs() <= 1e-15 * e.abs().max(1.0) {
            return Ok(StageOutcome { converged: true });
        }
        let curv = dirichlet_curvature(&grid, &d)
            + d.iter().zip(&extra).map(|(a, b)| a * a * b).sum::<f64>();
        let mut t = if curv > 0.0 { -gd / curv } else { 1.0 };
        let mut accepted = None;
        for _ in 0..60 {
            for k in 0..n {
                trial[k] = u[k] + t * d[k];
            }
            let et = problem.value(&trial, eps);
            check_finite(et, stage)?;
            if et <= e + 1e-4 * t * gd {
                accepted = Some(et);
                break;
            }
            t *= 0.5;
        }
        let Some(et) = accepted else {
            if restarted {
                let first = history.len() == start + 1;
                if first && gd.abs() > 1e-8 * e.abs().max(1.0) {
                    return Err(Error::SolverStall {
                        stage,
                        eps,
                        detail: format!("line search failed on the first step, slope {gd:.3e}"),
                    });
                }
                return Ok(StageOutcome { converged: true });
            }
            for k in 0..n {
                d[k] = -z[k];
            }
            restarted = true;
            continue;
        };
        u.copy_from_slice(&trial);
        e = et;
        history.push(e);
        let old_gz = gz;
        let old_z = z.clone();
        grad(u, &mut g, &mut z, &mut extra);
        gz = dot(&g, &z);
        // Polak-Ribiere with restart
        let beta = ((gz - dot(&g, &old_z)) / old_gz).max(0.0);
        for k in 0..n {
            d[k] = -z[k] + beta * d[k];
        }
        restarted = beta == 0.0;
        let len = history.len() - start;
        if len > CONVERGENCE_WINDOW {
            let past = history[history.len() - 1 - CONVERGENCE_WINDOW];
            if past - e < cfg.rel_tol * e.abs() {
                return Ok(StageOutcome { converged: true });
            }
        }
    }
    Ok(StageOutcome { converged: false })
}

/// Zeroes small nodes where that strictly lowers the sharp energy. Nodes are
/// visited in four parity classes so that no two simultaneous updates share a
/// cell; this keeps the pass symmetric under reflection of an even grid.
fn truncate(problem: &SmoothEnergy, free: &[bool], u: &mut [f64], threshold: f64, zero_tol: f64) -> usize {
    let grid = problem.grid;
    let mut zeroed = 0;
    loop {
        let mut changed = 0;
        for (pi, pj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            let mut hits = Vec::new();
            for j in (pj..=grid.ny).step_by(2) {
                for i in (pi..=grid.nx).step_by(2) {
                    let k = grid.idx(i, j);
                    if !free[k] || u[k] == 0.0 || u[k].abs() >= threshold {
                        continue;
                    }
                    let before = problem.local_sharp(u, i, j, zero_tol);
                    let keep = u[k];
                    u[k] = 0.0;
                    let after = problem.local_sharp(u, i, j, zero_tol);
                    u[k] = keep;
                    if after - before < -1e-14 {
                        hits.push(k);
                    }
                }
            }
            for k in hits {
                u[k] = 0.0;
                changed += 1;
            }
        }
        zeroed += changed;
        if changed == 0 {
            return zeroed;
        }
    }
}

/// Replaces `v` by its odd part in `y`; the middle row becomes exactly zero.
fn odd_project(grid: &Grid, v: &mut [f64]) {
    for j in 0..grid.ny / 2 {
        for i in 0..=grid.nx {
            let (a, b) = (grid.idx(i, j), grid.idx(i, grid.ny - j));
            let m = 0.5 * (v[b] - v[a]);
            v[b] = m;
            v[a] = -m;
        }
    }
    if grid.ny % 2 == 0 {
        for i in 0..=grid.nx {
            v[grid.idx(i, grid.ny / 2)] = 0.0;
        }
    }
}

/// Zeroes the mirror of every zero node so rounding cannot split a pair.
fn mirror_zeros(grid: &Grid, v: &mut [f64]) {
    for j in 0..grid.ny / 2 {
        for i in 0..=grid.nx {
            let (a, b) = (grid.idx(i, j), grid.idx(i, grid.ny - j));
            if v[a] == 0.0 || v[b] == 0.0 {
                v[a] = 0.0;
                v[b] = 0.0;
            }
        }
    }
}

/// Zero nodes that are a corner of some cell whose four nodes all vanish.
fn zero_cell_corners(grid: &Grid, u: &[f64]) -> Vec<bool> {
    let s = grid.nx + 1;
    let mut out = vec![false; u.len()];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = grid.idx(i, j);
            if u[k] == 0.0 && u[k + 1] == 0.0 && u[k + s] == 0.0 && u[k + s + 1] == 0.0 {
                for c in [k, k + 1, k + s, k + s + 1] {
                    out[c] = true;
                }
            }
        }
    }
    out
}

fn sharp_total(grid: &Grid, u: &[f64], weights: &Weights) -> f64 {
    let f = ScalarField2D::from_raw(*grid, u.to_vec());
    energy_J(&f, weights, &grid.rect, DEFAULT_ZERO_TOL)
        .map(|r| r.total)
        .unwrap_or(f64::INFINITY)
}

pub fn solve(config: &SolveConfig) -> Result<SolveResult> {
    config.validate()?;
    let grid = config.grid;
    let init = slice_field_for(&config.data, &grid)?;
    let mut u = init.into_values();
    let odd = config.odd_symmetric();
    if odd {
        odd_project(&grid, &mut u);
    }
    let free: Vec<bool> = (0..grid.num_nodes())
        .map(|k| !grid.is_boundary_node(k % (grid.nx + 1), k / (grid.nx + 1)))
        .collect();
    let problem = SmoothEnergy::new(grid, &config.weights);
    let base_pc = ColumnPrecond::new(&grid, &free);
    let mut history = Vec::new();
    let mut stage_ends = Vec::new();
    let mut converged = false;
    for (stage, &eps) in config.eps_schedule.iter().enumerate() {
        let out = run_stage(&problem, &base_pc, &free, &mut u, eps, stage, config, &mut history)?;
        stage_ends.push(history.len());
        converged = out.converged;
    }
    let eps_last = *config.eps_schedule.last().unwrap();
    let mut zeroed_nodes = 0;
    let mut harmonic_accepted = [false, false];
    let mut current = sharp_total(&grid, &u, &config.weights);
    for _ in 0..POLISH_ROUNDS {
        zeroed_nodes += truncate(&problem, &free, &mut u, eps_last, DEFAULT_ZERO_TOL);
        if odd {
            mirror_zeros(&grid, &mut u);
        }
        let pinned = zero_cell_corners(&grid, &u);
        current = current.min(sharp_total(&grid, &u, &config.weights));
        let mut improved = false;
        // sign-free over everything not pinned by a zero cell, then each
        // phase with the other held fixed
        for (slot, sign) in [(None, 0.0f64), (Some(0), 1.0), (Some(1), -1.0)] {
            let mask: Vec<bool> = (0..u.len())
                .map(|k| free[k] && if sign == 0.0 { !pinned[k] } else { sign * u[k] > 0.0 })
                .collect();
            let mut cand = u.clone();
            linalg::harmonic_fill(&grid, &mut cand, &mask, 1e-10, 2000);
            if odd {
                odd_project(&grid, &mut cand);
            }
            let e = sharp_total(&grid, &cand, &config.weights);
            if e <= current {
                improved |= e < current;
                current = e;
                u = cand;
                if let Some(s) = slot {
                    harmonic_accepted[s] = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    let u = ScalarField2D::new(grid, u)?;
    let final_energy = energy_J(&u, &config.weights, &grid.rect, DEFAULT_ZERO_TOL)?;
    Ok(SolveResult {
        u,
        energy_history: history,
        stage_ends,
        converged,
        final_energy,
        zeroed_nodes,
        harmonic_accepted,
    })
}

mod linalg_api {
    use super::linalg;
    use crate::error::{Error, Result};
    use crate::geometry::ScalarField2D;

    /// Replaces `field` on the nodes where `mask` is set by the discrete
    /// harmonic function with the remaining values as Dirichlet data.
    pub fn harmonic_replace(field: &ScalarField2D, mask: &[bool]) -> Result<ScalarField2D> {
        let g = *field.grid();
        if mask.len() != g.num_nodes() {
            return Err(Error::Domain("mask length does not match the grid".into()));
        }
        let mut u = field.values().to_vec();
        linalg::harmonic_fill(&g, &mut u, mask, 1e-12, 5000);
        ScalarField2D::new(g, u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slice_field_nodes() {
        let p = ProfileParams::new(10.0, 0.1).unwrap();
        let g = Grid::new(p.rect(), 480, 40).unwrap();
        let v = slice_field(&p, &g).unwrap();
        let i0 = 240;
        assert!((v.at(i0, 40) - 0.9).abs() < 1e-14);
        let i25 = 240 + 200; // x = 25
        assert!((g.x(i25) - 25.0).abs() < 1e-12);
        assert!((v.at(i25, 30) - 1.0).abs() < 1e-12); // y = 0.5
        assert_eq!(v.at(i0, 21), 0.0); // y = 0.05
    }

    #[test]
    fn config_validation() {
        let p = ProfileParams::new(2.0, 0.1).unwrap();
        let mut c = SolveConfig::new(p, 1.0 / 16.0).unwrap();
        assert_eq!(c.grid.ny, 32);
        assert!(c.grid.hx <= 0.125);
        c.validate().unwrap();
        c.eps_schedule = vec![0.1, 0.2];
        assert!(c.validate().is_err());
        c.eps_schedule = vec![0.001];
        assert!(c.validate().is_err());
    }

    #[test]
    fn constant_data_is_already_optimal() {
        let data = BoundaryData::Constant { f: 2.0, n: 1.0 };
        let mut c = SolveConfig::for_data(data, 1.0 / 16.0).unwrap();
        c.max_iter = 500;
        let r = solve(&c).unwrap();
        let width = 6.0;
        assert!((r.final_energy.total - 10.0 * width).abs() < 1e-6);
    }
}
