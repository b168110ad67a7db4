//! Smoothed two-phase energy on cell means.
//!
//! The phase indicators are replaced by `s(m / eps)` and `s(-m / eps)` with the
//! C1 smoothstep `s(r) = 3r^2 - 2r^3` on `[0, 1]`, where `m` is the cell mean.

use crate::boundary::Weights;
use crate::geometry::Grid;

use super::linalg::{add_dirichlet_grad, dirichlet_energy};

#[inline]
fn step(r: f64) -> f64 {
    if r <= 0.0 {
        0.0
    } else if r >= 1.0 {
        1.0
    } else {
        r * r * (3.0 - 2.0 * r)
    }
}

#[inline]
fn step_d(r: f64) -> f64 {
    if r <= 0.0 || r >= 1.0 {
        0.0
    } else {
        6.0 * r * (1.0 - r)
    }
}

#[inline]
fn step_dd(r: f64) -> f64 {
    if r <= 0.0 || r >= 1.0 {
        0.0
    } else {
        6.0 - 12.0 * r
    }
}

pub(crate) struct SmoothEnergy {
    pub grid: Grid,
    /// `q_+^2 * cell area`, one per cell.
    qp: Vec<f64>,
    qm: Vec<f64>,
}

impl SmoothEnergy {
    pub fn new(grid: Grid, weights: &Weights) -> Self {
        let a = grid.cell_area();
        let mut qp = Vec::with_capacity(grid.nx * grid.ny);
        let mut qm = Vec::with_capacity(grid.nx * grid.ny);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.cell_center(i, j);
                let p = weights.q_plus.eval(x, y);
                let m = weights.q_minus.eval(x, y);
                qp.push(p * p * a);
                qm.push(m * m * a);
            }
        }
        Self { grid, qp, qm }
    }

    #[inline]
    fn mean(&self, u: &[f64], i: usize, j: usize) -> f64 {
        let k = self.grid.idx(i, j);
        let s = self.grid.nx + 1;
        ((u[k] + u[k + 1]) + (u[k + s] + u[k + s + 1])) * 0.25
    }

    pub fn value(&self, u: &[f64], eps: f64) -> f64 {
        let mut area = 0.0;
        let mut c = 0;
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                let r = self.mean(u, i, j) / eps;
                area += self.qp[c] * step(r) + self.qm[c] * step(-r);
                c += 1;
            }
        }
        dirichlet_energy(&self.grid, u) + area
    }

    /// Full gradient (fixed nodes included) written into `g`.
    pub fn gradient(&self, u: &[f64], eps: f64, g: &mut [f64]) {
        g.iter_mut().for_each(|v| *v = 0.0);
        add_dirichlet_grad(&self.grid, u, g);
        let s = self.grid.nx + 1;
        let mut c = 0;
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                let r = self.mean(u, i, j) / eps;
                let d = (self.qp[c] * step_d(r) - self.qm[c] * step_d(-r)) / (4.0 * eps);
                c += 1;
                if d != 0.0 {
                    let k = self.grid.idx(i, j);
                    g[k] += d;
                    g[k + 1] += d;
                    g[k + s] += d;
                    g[k + s + 1] += d;
                }
            }
        }
    }

    /// Positive part of the diagonal of the area term's Hessian.
    pub fn area_diag(&self, u: &[f64], eps: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let s = self.grid.nx + 1;
        let mut c = 0;
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                let r = self.mean(u, i, j) / eps;
                let h = (self.qp[c] * step_dd(r) + self.qm[c] * step_dd(-r)) / (16.0 * eps * eps);
                c += 1;
                if h > 0.0 {
                    let k = self.grid.idx(i, j);
                    out[k] += h;
                    out[k + 1] += h;
                    out[k + s] += h;
                    out[k + s + 1] += h;
                }
            }
        }
    }

    /// Sharp energy of the four cells around node `(i, j)`.
    pub fn local_sharp(&self, u: &[f64], i: usize, j: usize, zero_tol: f64) -> f64 {
        let g = &self.grid;
        let s = g.nx + 1;
        let a = g.cell_area();
        let mut e = 0.0;
        for cj in j.saturating_sub(1)..(j + 1).min(g.ny) {
            for ci in i.saturating_sub(1)..(i + 1).min(g.nx) {
                let k = g.idx(ci, cj);
                let gx = (u[k + 1] - u[k]) / g.hx;
                let gy = (u[k + s] - u[k]) / g.hy;
                let m = self.mean(u, ci, cj);
                let c = cj * g.nx + ci;
                let area = if m > zero_tol {
                    self.qp[c]
                } else if m < -zero_tol {
                    self.qm[c]
                } else {
                    0.0
                };
                e += a * (gx * gx + gy * gy) + area;
            }
        }
        e
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;

    #[test]
    fn gradient_matches_finite_difference() {
        let g = Grid::new(Rect::new(-1.0, 1.0, -1.0, 1.0).unwrap(), 8, 8).unwrap();
        let w = Weights::constant(1.0, 1.5).unwrap();
        let e = SmoothEnergy::new(g, &w);
        let u: Vec<f64> = (0..g.num_nodes())
            .map(|k| 0.05 * (((k * 37) % 11) as f64 - 5.0) / 5.0)
            .collect();
        let eps = 0.1;
        let mut gr = vec![0.0; u.len()];
        e.gradient(&u, eps, &mut gr);
        for k in [10, 30, 44, 60] {
            let mut up = u.clone();
            let mut dn = u.clone();
            up[k] += 1e-7;
            dn[k] -= 1e-7;
            let fd = (e.value(&up, eps) - e.value(&dn, eps)) / 2e-7;
            assert!((fd - gr[k]).abs() < 1e-5 * (1.0 + fd.abs()), "{k}: {fd} vs {}", gr[k]);
        }
    }

    #[test]
    fn smooth_below_sharp() {
        let g = Grid::new(Rect::new(-1.0, 1.0, -1.0, 1.0).unwrap(), 8, 8).unwrap();
        let e = SmoothEnergy::new(g, &Weights::unit());
        let u: Vec<f64> = (0..g.num_nodes()).map(|k| (k as f64 * 0.37).sin()).collect();
        let f = crate::geometry::ScalarField2D::new(g, u.clone()).unwrap();
        let sharp = crate::energy::energy_J(&f, &Weights::unit(), &g.rect, 0.0).unwrap().total;
        assert!(e.value(&u, 0.5) <= sharp + 1e-12);
        assert!((e.value(&u, 1e-12) - sharp).abs() < 1e-9);
    }
}
