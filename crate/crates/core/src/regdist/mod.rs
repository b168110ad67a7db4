//! Regularized distance to a weighted graph measure and the two-phase fields
//! built from it.
//!
//! For a graph `Γ = {(t, f(t))}` with `f ≡ 0` outside `|t| <= R/10` and the
//! measure `q^{-1} ds` on it,
//!
//! ```text
//! D(x) = ( ∫ |x - y|^{-(d + β)} dμ(y) )^{-1/β}
//! ```
//!
//! The curved core is integrated adaptively; the flat ends are integrated in
//! closed form after `t = a + |b| tan θ`.

mod certificate;
mod graph;
pub(crate) mod quad;

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boundary::WeightFn;
use crate::error::{Error, Result};
use crate::geometry::{Grid, ScalarField2D};

pub use certificate::{almost_min_certificate, BallExcess, CertificateReport, RadiusLevel};
pub use graph::{bump, cantor_intervals, GraphFn};

/// Points on the graph at which the near-graph gradient is compared with the density.
pub const NEAR_GRAPH_POINTS: usize = 50;

#[derive(Debug, Clone)]
pub struct GraphMeasureSpec {
    pub graph: GraphFn,
    /// The measure has density `1 / q` against arclength.
    pub q: WeightFn,
    pub beta: f64,
    /// Dimension of the graph; only `1` is supported.
    pub d: u32,
    /// Domain radius `R`; the graph is flat outside `R / 10`.
    pub r_domain: f64,
    /// Relative tolerance of the core quadrature.
    pub quad_tol: f64,
}

impl GraphMeasureSpec {
    pub fn new(graph: GraphFn, q: WeightFn, r_domain: f64) -> Result<Self> {
        let s = Self {
            graph,
            q,
            beta: 1.0,
            d: 1,
            r_domain,
            quad_tol: 1e-10,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn flat(q: f64, r_domain: f64) -> Result<Self> {
        Self::new(GraphFn::Flat, WeightFn::Constant(q), r_domain)
    }

    pub fn core_half_width(&self) -> f64 {
        self.r_domain / 10.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.d != 1 {
            return Err(Error::Domain(format!("graph dimension {} unsupported, only d = 1", self.d)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Domain(format!("tail integral diverges for beta = {}", self.beta)));
        }
        if !(self.r_domain > 0.0 && self.r_domain.is_finite()) {
            return Err(Error::Domain("domain radius must be positive".into()));
        }
        if !(self.quad_tol > 0.0 && self.quad_tol < 1e-2) {
            return Err(Error::Domain("quadrature tolerance must lie in (0, 1e-2)".into()));
        }
        self.graph.validate()?;
        let l = self.core_half_width();
        if self.graph.support_radius() > l {
            return Err(Error::Domain(format!(
                "graph support radius {} exceeds R/10 = {l}",
                self.graph.support_radius()
            )));
        }
        for k in 0..=20 {
            let t = -l + 2.0 * l * k as f64 / 20.0;
            let q = self.q.eval(t, self.graph.eval(t));
            if !(q > 0.0 && q.is_finite()) {
                return Err(Error::Domain(format!("weight {q} at t = {t} is not positive")));
            }
        }
        Ok(())
    }

    fn point(&self, t: f64) -> (f64, f64) {
        (t, self.graph.eval(t))
    }

    /// `[I, dI/dx, dI/dy]`.
    fn integrals(&self, x: (f64, f64)) -> Result<[f64; 3]> {
        let l = self.core_half_width();
        let beta = self.beta;
        let p = 0.5 * (self.d as f64 + beta);
        let on_core = x.0.abs() <= l;
        let gap = if on_core { (x.1 - self.graph.eval(x.0)).abs() } else { x.1.abs() };
        if gap == 0.0 {
            return Err(Error::Singular(0.0));
        }
        let mut breaks = vec![-l, l];
        let c = x.0.clamp(-l, l);
        for k in [0.0, 1.0, -1.0, 10.0, -10.0] {
            breaks.push((c + k * gap).clamp(-l, l));
        }
        breaks.extend(self.graph.kinks().into_iter().filter(|k| k.abs() < l));
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let integrand = |t: f64| {
            let gy = self.graph.eval(t);
            let fp = self.graph.slope(t);
            let w = (1.0 + fp * fp).sqrt() / self.q.eval(t, gy);
            let (dx, dy) = (x.0 - t, x.1 - gy);
            let r2 = dx * dx + dy * dy;
            let k = w * r2.powf(-p);
            [k, -2.0 * p * k * dx / r2, -2.0 * p * k * dy / r2]
        };
        let (mut v, _) = quad::integrate(integrand, &breaks, self.quad_tol, 0.0);
        let wr = 1.0 / self.q.eval(l, 0.0);
        let wl = 1.0 / self.q.eval(-l, 0.0);
        let r = flat_tail(l, x.0, x.1, beta)?;
        let lt = flat_tail(l, -x.0, x.1, beta)?;
        v[0] += wr * r[0] + wl * lt[0];
        v[1] += wr * r[1] - wl * lt[1];
        v[2] += wr * r[2] + wl * lt[2];
        if !v.iter().all(|z| z.is_finite()) || !(v[0] > 0.0) {
            return Err(Error::Singular(gap));
        }
        Ok(v)
    }
}

/// `∫_{θ0}^{π/2} cos^{β-1} θ dθ` for `θ0` in `(-π/2, π/2)`.
fn cos_power_tail(theta0: f64, beta: f64) -> f64 {
    if beta == 1.0 {
        return FRAC_PI_2 - theta0;
    }
    // ∫_c^{π/2} cos^{β-1} = ∫_0^{π/2-c} sin^{β-1} φ dφ, with w = φ^β / β
    // removing the endpoint singularity.
    let upper = |c: f64| {
        let phi_max = FRAC_PI_2 - c;
        let wmax = phi_max.powf(beta) / beta;
        let ([v], _) = quad::integrate(
            |w: f64| {
                let phi = (beta * w).powf(1.0 / beta);
                if phi == 0.0 {
                    [1.0]
                } else {
                    [(phi.sin() / phi).powf(beta - 1.0)]
                }
            },
            &[0.0, wmax],
            1e-13,
            0.0,
        );
        v
    };
    if theta0 >= 0.0 {
        upper(theta0)
    } else {
        2.0 * upper(0.0) - upper(-theta0)
    }
}

/// `∫_{θ0}^{π/2} cos^{β+1} θ dθ`.
fn cos_power_tail_plus(theta0: f64, beta: f64) -> f64 {
    if beta == 1.0 {
        let a = FRAC_PI_2 - theta0;
        return 0.5 * a - 0.25 * (2.0 * theta0).sin();
    }
    let ([v], _) = quad::integrate(|t: f64| [t.cos().max(0.0).powf(beta + 1.0)], &[theta0, FRAC_PI_2], 1e-13, 0.0);
    v
}

/// `[T, dT/da, dT/db]` for `T = ∫_l^∞ ((t - a)^2 + b^2)^{-(1+β)/2} dt`.
fn flat_tail(l: f64, a: f64, b: f64, beta: f64) -> Result<[f64; 3]> {
    let s0 = l - a;
    let p = 0.5 * (1.0 + beta);
    if b == 0.0 {
        if s0 <= 0.0 {
            return Err(Error::Singular(0.0));
        }
        return Ok([s0.powf(-beta) / beta, s0.powf(-2.0 * p), 0.0]);
    }
    let ab = b.abs();
    let theta0 = (s0 / ab).atan();
    let t = ab.powf(-beta) * cos_power_tail(theta0, beta);
    let ta = (s0 * s0 + b * b).powf(-p);
    let tb = -(1.0 + beta) * b * ab.powf(-(2.0 + beta)) * cos_power_tail_plus(theta0, beta);
    Ok([t, ta, tb])
}

/// `D(x)`.
pub fn regdist_eval(spec: &GraphMeasureSpec, x: (f64, f64)) -> Result<f64> {
    let v = spec.integrals(x)?;
    Ok(v[0].powf(-1.0 / spec.beta))
}

/// `D(x)` and its gradient, both from the same quadrature.
pub fn regdist_grad(spec: &GraphMeasureSpec, x: (f64, f64)) -> Result<(f64, [f64; 2])> {
    let [i, ix, iy] = spec.integrals(x)?;
    let d = i.powf(-1.0 / spec.beta);
    let k = -d / (spec.beta * i);
    Ok((d, [k * ix, k * iy]))
}

/// The constant `c` in `|∇D| = c Θ^{-1/β}` on the support, from the flat line
/// with unit density, where `Θ = 2` and `D` is linear in the distance.
pub fn calibrate_c(beta: f64, quad_tol: f64) -> Result<f64> {
    let mut s = GraphMeasureSpec::flat(1.0, 10.0)?;
    s.beta = beta;
    s.quad_tol = quad_tol;
    s.validate()?;
    Ok(regdist_eval(&s, (0.0, 1.0))? * 2f64.powf(1.0 / beta))
}

fn check_grid_in_ball(spec: &GraphMeasureSpec, grid: &Grid) -> Result<()> {
    let r = &grid.rect;
    for (x, y) in [(r.x_lo, r.y_lo), (r.x_lo, r.y_hi), (r.x_hi, r.y_lo), (r.x_hi, r.y_hi)] {
        if x.hypot(y) > spec.r_domain {
            return Err(Error::Domain(format!("grid {r} is not inside B(0, {})", spec.r_domain)));
        }
    }
    Ok(())
}

/// `D⁺` above the upper graph, `-D⁻` below the lower one, zero in between.
pub fn build_almost_minimizer(plus: &GraphMeasureSpec, minus: &GraphMeasureSpec, grid: &Grid) -> Result<ScalarField2D> {
    plus.validate()?;
    minus.validate()?;
    check_grid_in_ball(plus, grid)?;
    check_grid_in_ball(minus, grid)?;
    let samples = 4 * grid.nx + 1;
    for k in 0..=samples {
        let x = grid.rect.x_lo + grid.rect.width() * k as f64 / samples as f64;
        let (fp, fm) = (plus.graph.eval(x), minus.graph.eval(x));
        if fm > fp {
            return Err(Error::Domain(format!("lower graph {fm} above upper graph {fp} at x = {x}")));
        }
    }
    let mut values = Vec::with_capacity(grid.num_nodes());
    for j in 0..=grid.ny {
        let y = grid.y(j);
        for i in 0..=grid.nx {
            let x = grid.x(i);
            let v = if y > plus.graph.eval(x) {
                regdist_eval(plus, (x, y))?
            } else if y < minus.graph.eval(x) {
                -regdist_eval(minus, (x, y))?
            } else {
                0.0
            };
            values.push(v);
        }
    }
    ScalarField2D::new(*grid, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearGraphSample {
    pub t: f64,
    pub measured: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    /// Smallest `C` with `dist / C <= D <= C dist` over the samples.
    pub c1: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub sup_grad: f64,
    /// Supremum of `|D² D| · dist`.
    pub sup_hess_dist: f64,
    pub calibration_c: f64,
    pub near_graph: Vec<NearGraphSample>,
    pub near_graph_max_rel_err: f64,
    pub samples: usize,
}

/// Distance from `x` to the graph, searching near the foot parameter `t`.
fn graph_distance(spec: &GraphMeasureSpec, x: (f64, f64), t: f64, s: f64) -> f64 {
    let d2 = |u: f64| {
        let p = spec.point(u);
        (p.0 - x.0).powi(2) + (p.1 - x.1).powi(2)
    };
    let span = 3.0 * s;
    let m = 400;
    let mut best = (t, d2(t));
    for k in 0..=m {
        let u = t - span + 2.0 * span * k as f64 / m as f64;
        let v = d2(u);
        if v < best.1 {
            best = (u, v);
        }
    }
    let step = 2.0 * span / m as f64;
    let (mut lo, mut hi) = (best.0 - step, best.0 + step);
    for _ in 0..60 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if d2(a) < d2(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    // the flat ends are a line
    d2(0.5 * (lo + hi)).sqrt().min(if (x.0.abs()) > spec.core_half_width() { x.1.abs() } else { f64::INFINITY })
}

fn unit_normal(spec: &GraphMeasureSpec, t: f64) -> (f64, f64) {
    let fp = spec.graph.slope(t);
    let n = (1.0 + fp * fp).sqrt();
    (-fp / n, 1.0 / n)
}

/// Samples points at dyadic distances above the graph and measures the
/// comparability constant, gradient and Hessian bounds, and the near-graph
/// gradient against `c Θ^{-1/β}` with `Θ = 2 / q`.
pub fn growth_checks(spec: &GraphMeasureSpec, sample_n: usize, seed: u64) -> Result<GrowthReport> {
    if sample_n < 100 {
        return Err(Error::Domain(format!("growth checks need at least 100 samples, got {sample_n}")));
    }
    spec.validate()?;
    let l = spec.core_half_width();
    let w = match spec.graph.support_radius() {
        r if r > 0.0 => r,
        _ => l,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut rmin, mut rmax) = (f64::INFINITY, 0.0f64);
    let mut sup_grad = 0.0f64;
    let mut sup_hess = 0.0f64;
    for _ in 0..sample_n {
        let t = rng.gen_range(-0.9 * w..0.9 * w);
        let k: i32 = rng.gen_range(2..=10);
        let s = 2f64.powi(-k) * w.min(1.0);
        let nu = unit_normal(spec, t);
        let q = spec.point(t);
        let x = (q.0 + s * nu.0, q.1 + s * nu.1);
        let dist = graph_distance(spec, x, t, s);
        let (d, g) = regdist_grad(spec, x)?;
        rmin = rmin.min(d / dist);
        rmax = rmax.max(d / dist);
        sup_grad = sup_grad.max(g[0].hypot(g[1]));
        let eta = 1e-3 * dist;
        let (_, gxp) = regdist_grad(spec, (x.0 + eta, x.1))?;
        let (_, gxm) = regdist_grad(spec, (x.0 - eta, x.1))?;
        let (_, gyp) = regdist_grad(spec, (x.0, x.1 + eta))?;
        let (_, gym) = regdist_grad(spec, (x.0, x.1 - eta))?;
        let hxx = (gxp[0] - gxm[0]) / (2.0 * eta);
        let hxy = (gxp[1] - gxm[1]) / (2.0 * eta);
        let hyx = (gyp[0] - gym[0]) / (2.0 * eta);
        let hyy = (gyp[1] - gym[1]) / (2.0 * eta);
        let fro = (hxx * hxx + hxy * hxy + hyx * hyx + hyy * hyy).sqrt();
        sup_hess = sup_hess.max(fro * dist);
    }
    let c = calibrate_c(spec.beta, spec.quad_tol)?;
    let s0 = 1e-3 * w.min(1.0);
    let mut near = Vec::with_capacity(NEAR_GRAPH_POINTS);
    let mut worst = 0.0f64;
    for k in 0..NEAR_GRAPH_POINTS {
        let t = -0.9 * w + 1.8 * w * k as f64 / (NEAR_GRAPH_POINTS - 1) as f64;
        let q = spec.point(t);
        let nu = unit_normal(spec, t);
        let grad_at = |s: f64| -> Result<f64> {
            let (_, g) = regdist_grad(spec, (q.0 + s * nu.0, q.1 + s * nu.1))?;
            Ok(g[0].hypot(g[1]))
        };
        // linear extrapolation to the graph
        let measured = 2.0 * grad_at(0.5 * s0)? - grad_at(s0)?;
        let theta = 2.0 / spec.q.eval(q.0, q.1);
        let predicted = c * theta.powf(-1.0 / spec.beta);
        worst = worst.max((measured / predicted - 1.0).abs());
        near.push(NearGraphSample { t, measured, predicted });
    }
    Ok(GrowthReport {
        c1: rmax.max(1.0 / rmin),
        ratio_min: rmin,
        ratio_max: rmax,
        sup_grad,
        sup_hess_dist: sup_hess,
        calibration_c: c,
        near_graph: near,
        near_graph_max_rel_err: worst,
        samples: sample_n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierDirection {
    /// `w̄_t <= field` with `w̄_t = M₊(y - t)⁺ - m₋(y - t)⁻`.
    Sub,
    /// `w̲_t >= field` with `w̲_t = m₊(y + t)⁺ - M₋(y + t)⁻`.
    Super,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierParams {
    pub t: f64,
    /// Supremum of `q₊` over the ball.
    pub big_m_plus: f64,
    /// Infimum of `q₋` over the ball.
    pub m_minus: f64,
    /// Infimum of `q₊` over the ball.
    pub m_plus: f64,
    /// Supremum of `q₋` over the ball.
    pub big_m_minus: f64,
}

impl BarrierParams {
    pub fn new(t: f64, big_m_plus: f64, m_minus: f64, m_plus: f64, big_m_minus: f64) -> Result<Self> {
        let p = Self { t, big_m_plus, m_minus, m_plus, big_m_minus };
        if [big_m_plus, m_minus, m_plus, big_m_minus].iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Domain("barrier slopes must be positive".into()));
        }
        if m_plus > big_m_plus || m_minus > big_m_minus {
            return Err(Error::Domain("barrier infimum exceeds supremum".into()));
        }
        Ok(p)
    }

    pub fn unit(t: f64) -> Self {
        Self { t, big_m_plus: 1.0, m_minus: 1.0, m_plus: 1.0, big_m_minus: 1.0 }
    }

    pub fn value(&self, dir: BarrierDirection, y: f64) -> f64 {
        match dir {
            BarrierDirection::Sub => {
                let z = y - self.t;
                self.big_m_plus * z.max(0.0) - self.m_minus * (-z).max(0.0)
            }
            BarrierDirection::Super => {
                let z = y + self.t;
                self.m_plus * z.max(0.0) - self.big_m_minus * (-z).max(0.0)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierReport {
    pub holds: bool,
    /// Least signed gap over the ball nodes; negative where the ordering fails.
    pub worst_margin: f64,
    pub worst_at: (f64, f64),
}

fn ball_nodes(field: &ScalarField2D, c: (f64, f64), r: f64) -> Result<Vec<(f64, f64, f64)>> {
    let g = field.grid();
    let rect = g.rect;
    if !(r > 0.0)
        || c.0 - r < rect.x_lo - 1e-12
        || c.0 + r > rect.x_hi + 1e-12
        || c.1 - r < rect.y_lo - 1e-12
        || c.1 + r > rect.y_hi + 1e-12
    {
        return Err(Error::Domain(format!("ball ({}, {}) r = {r} not inside {rect}", c.0, c.1)));
    }
    let mut out = Vec::new();
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let (x, y) = (g.x(i), g.y(j));
            if (x - c.0).hypot(y - c.1) <= r {
                out.push((x, y, field.at(i, j)));
            }
        }
    }
    Ok(out)
}

/// Checks the barrier ordering at every node of the closed ball.
pub fn barrier_compare(
    field: &ScalarField2D,
    center: (f64, f64),
    radius: f64,
    params: &BarrierParams,
    dir: BarrierDirection,
) -> Result<BarrierReport> {
    let nodes = ball_nodes(field, center, radius)?;
    Ok(compare_nodes(&nodes, params, dir))
}

fn compare_nodes(nodes: &[(f64, f64, f64)], params: &BarrierParams, dir: BarrierDirection) -> BarrierReport {
    let mut worst = f64::INFINITY;
    let mut at = (f64::NAN, f64::NAN);
    let mut scale = 1.0f64;
    for &(x, y, u) in nodes {
        let w = params.value(dir, y);
        scale = scale.max(u.abs());
        let m = match dir {
            BarrierDirection::Sub => u - w,
            BarrierDirection::Super => w - u,
        };
        if m < worst {
            worst = m;
            at = (x, y);
        }
    }
    BarrierReport {
        holds: worst >= -1e-12 * scale,
        worst_margin: worst,
        worst_at: at,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlideReport {
    /// Last offset, sweeping downward, at which the ordering held.
    pub last_hold: Option<f64>,
    /// First offset at which it failed.
    pub first_failure: Option<f64>,
}

/// Sweeps `t` from `t_max` down to `t_min` in `steps` equal steps.
pub fn slide_barrier(
    field: &ScalarField2D,
    center: (f64, f64),
    radius: f64,
    params: &BarrierParams,
    dir: BarrierDirection,
    t_max: f64,
    t_min: f64,
    steps: usize,
) -> Result<SlideReport> {
    if !(t_max > t_min) || steps == 0 {
        return Err(Error::Domain("sliding needs t_max > t_min and at least one step".into()));
    }
    let nodes = ball_nodes(field, center, radius)?;
    let mut last = None;
    for k in 0..=steps {
        let t = t_max - (t_max - t_min) * k as f64 / steps as f64;
        let p = BarrierParams { t, ..*params };
        if compare_nodes(&nodes, &p, dir).holds {
            last = Some(t);
        } else {
            return Ok(SlideReport { last_hold: last, first_failure: Some(t) });
        }
    }
    Ok(SlideReport { last_hold: last, first_failure: None })
}
