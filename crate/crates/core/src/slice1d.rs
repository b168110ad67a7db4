//! The one-dimensional slice problem on `[-1, 1]` with data `w(+-1) = +-f`:
//! minimize `int (w')^2 dy + |{w != 0}|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceSolution {
    pub f: f64,
    /// Zero interval `[a, b]`; `a == b` when the minimizer only crosses zero.
    pub a: f64,
    pub b: f64,
    pub energy: f64,
}

impl SliceSolution {
    pub fn eval(&self, y: f64) -> f64 {
        slice_value(self.f, y)
    }
}

/// Value of the closed-form slice minimizer for boundary value `f` at height `y`.
#[inline]
pub fn slice_value(f: f64, y: f64) -> f64 {
    if f >= 1.0 {
        y * f
    } else {
        let t = (y.abs() - 1.0 + f).max(0.0);
        if y < 0.0 {
            -t
        } else {
            t
        }
    }
}

/// Closed-form energy of the slice minimizer.
#[inline]
pub fn slice_min_energy(f: f64) -> f64 {
    if f >= 1.0 {
        2.0 * f * f + 2.0
    } else {
        4.0 * f
    }
}

pub fn slice_minimize(f: f64) -> Result<SliceSolution> {
    if !(f >= 0.0 && f.is_finite()) {
        return Err(Error::Domain(format!("boundary value must be >= 0, got {f}")));
    }
    let (a, b) = if f >= 1.0 { (0.0, 0.0) } else { (f - 1.0, 1.0 - f) };
    Ok(SliceSolution {
        f,
        a,
        b,
        energy: slice_min_energy(f),
    })
}

/// Least energy of a slice vanishing exactly on `[a, b]`: the profile is affine
/// from `-f` at `-1` to 0 at `a`, zero on `[a, b]`, affine up to `f` at 1.
pub fn interval_energy(f: f64, a: f64, b: f64) -> f64 {
    f * f / (1.0 - b) + f * f / (a + 1.0) + 2.0 - (b - a)
}

/// Brute-force minimization of [`interval_energy`] over a grid of `grid_n`
/// points per axis on `(-1, 1)`, offset half a step from the ends, subject to `a <= b`.
pub fn slice_oracle(f: f64, grid_n: usize) -> Result<SliceSolution> {
    if !(f >= 0.0 && f.is_finite()) {
        return Err(Error::Domain(format!("boundary value must be >= 0, got {f}")));
    }
    if grid_n < 100 {
        return Err(Error::Domain(format!("oracle grid needs >= 100 points, got {grid_n}")));
    }
    let step = 2.0 / grid_n as f64;
    let node = |k: usize| -1.0 + (k as f64 + 0.5) * step;
    let f2 = f * f;
    // The objective splits as g(a) + h(b); scan b while tracking the best a <= b.
    let mut best_a = 0;
    let mut best_ga = f64::INFINITY;
    let mut best = (f64::INFINITY, 0, 0);
    for kb in 0..grid_n {
        let a = node(kb);
        let ga = f2 / (a + 1.0) + a;
        if ga < best_ga {
            best_ga = ga;
            best_a = kb;
        }
        let b = node(kb);
        let val = best_ga + f2 / (1.0 - b) + 2.0 - b;
        if val < best.0 {
            best = (val, best_a, kb);
        }
    }
    let (a, b) = (node(best.1), node(best.2));
    Ok(SliceSolution {
        f,
        a,
        b,
        energy: interval_energy(f, a, b),
    })
}

/// Samples of a slice on a uniform grid over `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceProfile {
    pub samples: Vec<f64>,
}

impl SliceProfile {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Domain("a slice profile needs at least 2 samples".into()));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("slice profile has non-finite samples".into()));
        }
        Ok(Self { samples })
    }

    pub fn from_fn(m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::Domain("a slice profile needs at least 2 samples".into()));
        }
        let dy = 2.0 / (m - 1) as f64;
        Self::new(
            (0..m)
                .map(|k| f(if k == m - 1 { 1.0 } else { -1.0 + k as f64 * dy }))
                .collect(),
        )
    }

    pub fn m(&self) -> usize {
        self.samples.len()
    }

    pub fn dy(&self) -> f64 {
        2.0 / (self.samples.len() - 1) as f64
    }

    pub fn y(&self, k: usize) -> f64 {
        if k == self.m() - 1 {
            1.0
        } else {
            -1.0 + k as f64 * self.dy()
        }
    }
}

/// Forward-difference Dirichlet energy plus the width of cells where either
/// endpoint exceeds `zero_tol` in absolute value.
pub fn slice_energy(profile: &SliceProfile, zero_tol: f64) -> f64 {
    let dy = profile.dy();
    let mut dir = 0.0;
    let mut area = 0.0;
    for w in profile.samples.windows(2) {
        let d = w[1] - w[0];
        dir += d * d / dy;
        if w[0].abs() > zero_tol || w[1].abs() > zero_tol {
            area += dy;
        }
    }
    dir + area
}

/// Lower bound `(f - delta)^2 / eps` for a slice with `|w(y0)| <= delta` at some `1 - |y0| < eps`.
pub fn energy_lower_bound_small_u(f: f64, delta: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0, 1], got {eps}")));
    }
    if !(delta >= 0.0 && delta < f) {
        return Err(Error::Domain(format!("need 0 <= delta < f, got delta = {delta}, f = {f}")));
    }
    Ok((f - delta) * (f - delta) / eps)
}

/// Uniform energy gap `min(4 beta, alpha^2 / 1e4)` for slices that are larger
/// than `beta` somewhere below height `alpha / 2`.
pub fn eta_lower_bound(alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(beta >= 0.0) {
        return Err(Error::Domain(format!("beta must be >= 0, got {beta}")));
    }
    Ok((4.0 * beta).min(alpha * alpha / 2.0).min(alpha * alpha / 1e4))
}

/// Lower bound on the slice energy with data `1 - alpha` when the zero set has measure `delta`.
pub fn zero_measure_lower_bound(alpha: f64, delta: f64) -> f64 {
    4.0 * (1.0 - alpha) + (delta - 2.0 * alpha).powi(2) / (2.0 - delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityCheck {
    pub passed: bool,
    pub sup_distance: f64,
    pub excess: f64,
}

/// Checks `sup |w - y f| <= C sqrt(eps)` for a near-minimal slice with `f >= 1`.
pub fn linf_stability_check(profile: &SliceProfile, f: f64, eps: f64, c: f64) -> Result<StabilityCheck> {
    if !(f >= 1.0) {
        return Err(Error::Domain(format!("stability check needs f >= 1, got {f}")));
    }
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let m = profile.m();
    let tol = 1e-9 * f;
    if (profile.samples[0] + f).abs() > tol || (profile.samples[m - 1] - f).abs() > tol {
        return Err(Error::Domain("profile endpoints must equal -f and f".into()));
    }
    let excess = slice_energy(profile, 0.0) - slice_min_energy(f);
    if excess > eps {
        return Err(Error::Precondition { excess, limit: eps });
    }
    let sup_distance = profile
        .samples
        .iter()
        .enumerate()
        .map(|(k, &w)| (w - profile.y(k) * f).abs())
        .fold(0.0, f64::max);
    Ok(StabilityCheck {
        passed: sup_distance <= c * eps.sqrt(),
        sup_distance,
        excess,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_cases() {
        let s = slice_minimize(2.0).unwrap();
        assert_eq!((s.a, s.b, s.energy), (0.0, 0.0, 10.0));
        let s = slice_minimize(0.9).unwrap();
        assert!((s.a + 0.1).abs() < 1e-15 && (s.b - 0.1).abs() < 1e-15);
        assert!((s.energy - 3.6).abs() < 1e-14);
        assert_eq!(slice_minimize(1.0).unwrap().energy, 4.0);
        assert_eq!(slice_minimize(0.0).unwrap().energy, 0.0);
        assert_eq!(slice_value(0.0, 0.7), 0.0);
        assert!(slice_minimize(-0.1).is_err());
    }

    #[test]
    fn oracle_cases() {
        let s = slice_oracle(0.5, 2000).unwrap();
        assert!((s.a + 0.5).abs() < 2e-3 && (s.b - 0.5).abs() < 2e-3);
        assert!((s.energy - 2.0).abs() < 1e-3);
        let s = slice_oracle(2.0, 2000).unwrap();
        assert!(s.a.abs() < 2e-3 && s.b.abs() < 2e-3);
        assert!((s.energy - 10.0).abs() < 1e-3);
        let s = slice_oracle(1.0, 2000).unwrap();
        assert!((s.energy - 4.0).abs() < 1e-3);
        assert!(slice_oracle(1.0, 50).is_err());
    }

    #[test]
    fn discrete_slice_energy() {
        let lin = SliceProfile::from_fn(1000, |y| 2.0 * y).unwrap();
        assert!((slice_energy(&lin, 0.0) - 10.0).abs() < 1e-9);
        let sol = slice_minimize(0.9).unwrap();
        let p = SliceProfile::from_fn(10_000, |y| sol.eval(y)).unwrap();
        assert!((slice_energy(&p, 0.0) - 3.6).abs() < 2e-3);
        let z = SliceProfile::new(vec![0.0; 17]).unwrap();
        assert_eq!(slice_energy(&z, 0.0), 0.0);
    }

    #[test]
    fn bounds() {
        assert!((energy_lower_bound_small_u(0.75, 0.25, 1.0 / 44.0).unwrap() - 11.0).abs() < 1e-12);
        assert_eq!(energy_lower_bound_small_u(2.0, 0.0, 1.0).unwrap(), 4.0);
        assert!((energy_lower_bound_small_u(1.0, 0.5, 0.25).unwrap() - 1.0).abs() < 1e-15);
        assert!(energy_lower_bound_small_u(1.0, 1.0, 0.5).is_err());
        assert!((eta_lower_bound(0.1, 1.0).unwrap() - 1e-6).abs() < 1e-18);
        assert!((eta_lower_bound(0.1, 1e-8).unwrap() - 4e-8).abs() < 1e-20);
        assert_eq!(eta_lower_bound(0.3, 0.0).unwrap(), 0.0);
    }

    /// Direct minimization over slices pinned to `delta` at `y0` near the top:
    /// the best pinned profile is affine on both sides of `y0`.
    #[test]
    fn small_u_bound_against_pinned_minimum() {
        let (f, delta, eps) = (1.0, 0.5, 0.25);
        let bound = energy_lower_bound_small_u(f, delta, eps).unwrap();
        for k in 0..200 {
            let y0 = 1.0 - eps * (k as f64 + 0.5) / 200.0;
            // above y0 the cheapest way from delta to f over length 1 - y0
            let top = (f - delta).powi(2) / (1.0 - y0);
            assert!(top + (1.0 - y0) >= bound);
        }
    }

    #[test]
    fn stability_exact_minimizer() {
        let p = SliceProfile::from_fn(401, |y| 2.0 * y).unwrap();
        let r = linf_stability_check(&p, 2.0, 1e-6, 1.0).unwrap();
        assert!(r.passed && r.sup_distance < 1e-15);
    }

    #[test]
    fn stability_zero_interval_profile() {
        // f = 1 with zero interval [-s, s]: excess 2 s^2 / (1 - s), distance s
        let s = 0.05;
        let f = 1.0;
        let w = |y: f64| {
            if y.abs() <= s {
                0.0
            } else {
                y.signum() * (y.abs() - s) / (1.0 - s)
            }
        };
        let p = SliceProfile::from_fn(2001, w).unwrap();
        let exact = 2.0 * s * s / (1.0 - s);
        assert!((interval_energy(f, -s, s) - 4.0 - exact).abs() < 1e-12);
        // kink cells add up to two cell widths to the discrete measure
        let r = linf_stability_check(&p, f, exact + 4.0 * p.dy(), 1.0).unwrap();
        assert!((r.excess - exact).abs() < 2e-3);
        assert!((r.sup_distance - s).abs() < 1e-3);
        assert!(r.passed);
    }

    #[test]
    fn stability_precondition() {
        let p = SliceProfile::from_fn(101, |y| 2.0 * y + 0.3 * (1.0 - y * y)).unwrap();
        assert!(matches!(
            linf_stability_check(&p, 2.0, 1e-4, 10.0),
            Err(Error::Precondition { .. })
        ));
    }
}
