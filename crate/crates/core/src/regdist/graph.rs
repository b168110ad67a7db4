//! Graph functions over the base line, all compactly supported.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smooth bump on `(-1, 1)` with `psi(0) = 1`.
pub fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphFn {
    Flat,
    /// `amp * bump(x / width)`.
    Bump { amp: f64, width: f64 },
    /// `amp * max(0, x)^3 * bump(x / width)`.
    CubicCusp { amp: f64, width: f64 },
    /// `amp * bump * S / (1 + S / cap)` with `S = 1 / sum (x - e)^-2`, which
    /// vanishes to second order exactly at the points.
    PointSet { points: Vec<f64>, amp: f64, cap: f64, width: f64 },
    /// Same saturation applied to the squared distance to a union of intervals.
    Intervals { intervals: Vec<(f64, f64)>, amp: f64, cap: f64, width: f64 },
    /// Negated copy.
    Reflect { of: Box<GraphFn> },
}

fn saturate(s: f64, amp: f64, cap: f64) -> f64 {
    amp * s / (1.0 + s / cap)
}

/// Intervals of the `level`-th middle-thirds step on `[lo, hi]`.
pub fn cantor_intervals(level: u32, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let mut iv = vec![(lo, hi)];
    for _ in 0..level {
        iv = iv
            .into_iter()
            .flat_map(|(a, b)| {
                let t = (b - a) / 3.0;
                [(a, a + t), (b - t, b)]
            })
            .collect();
    }
    iv
}

impl GraphFn {
    pub fn cantor(level: u32, lo: f64, hi: f64, amp: f64, cap: f64, width: f64) -> Self {
        Self::Intervals { intervals: cantor_intervals(level, lo, hi), amp, cap, width }
    }

    pub fn segment(a: f64, b: f64, amp: f64, cap: f64, width: f64) -> Self {
        Self::Intervals { intervals: vec![(a, b)], amp, cap, width }
    }

    pub fn reflected(&self) -> Self {
        match self {
            Self::Reflect { of } => (**of).clone(),
            g => Self::Reflect { of: Box::new(g.clone()) },
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Flat => 0.0,
            Self::Bump { amp, width } => amp * bump(x / width),
            Self::CubicCusp { amp, width } => amp * x.max(0.0).powi(3) * bump(x / width),
            Self::PointSet { points, amp, cap, width } => {
                let b = bump(x / width);
                if b == 0.0 {
                    return 0.0;
                }
                let mut inv = 0.0;
                for &e in points {
                    let d = x - e;
                    if d == 0.0 {
                        return 0.0;
                    }
                    inv += 1.0 / (d * d);
                }
                if inv == 0.0 {
                    return amp * cap * b;
                }
                b * saturate(1.0 / inv, *amp, *cap)
            }
            Self::Intervals { intervals, amp, cap, width } => {
                let b = bump(x / width);
                if b == 0.0 {
                    return 0.0;
                }
                let d = intervals
                    .iter()
                    .map(|&(a, c)| if x < a { a - x } else if x > c { x - c } else { 0.0 })
                    .fold(f64::INFINITY, f64::min);
                if !d.is_finite() {
                    return amp * cap * b;
                }
                b * saturate(d * d, *amp, *cap)
            }
            Self::Reflect { of: g } => -g.eval(x),
        }
    }

    /// Central-difference slope.
    pub fn slope(&self, x: f64) -> f64 {
        let h = 1e-6 * x.abs().max(1.0);
        (self.eval(x + h) - self.eval(x - h)) / (2.0 * h)
    }

    /// Half-width of the support, `0` for the flat graph.
    pub fn support_radius(&self) -> f64 {
        match self {
            Self::Flat => 0.0,
            Self::Bump { width, .. }
            | Self::CubicCusp { width, .. }
            | Self::PointSet { width, .. }
            | Self::Intervals { width, .. } => *width,
            Self::Reflect { of: g } => g.support_radius(),
        }
    }

    /// Points where the second derivative jumps.
    pub fn kinks(&self) -> Vec<f64> {
        match self {
            Self::CubicCusp { .. } => vec![0.0],
            Self::Intervals { .. } => self.branch_set(),
            Self::Reflect { of: g } => g.kinks(),
            _ => Vec::new(),
        }
    }

    /// Points where the graph and its reflection are expected to separate.
    pub fn branch_set(&self) -> Vec<f64> {
        match self {
            Self::Flat | Self::Bump { .. } => Vec::new(),
            Self::CubicCusp { .. } => vec![0.0],
            Self::PointSet { points, .. } => points.clone(),
            Self::Intervals { intervals, .. } => {
                let mut v: Vec<f64> = intervals.iter().flat_map(|&(a, b)| [a, b]).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            }
            Self::Reflect { of: g } => g.branch_set(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Domain(format!("graph: {m}")));
        match self {
            Self::Flat => Ok(()),
            Self::Bump { amp, width } | Self::CubicCusp { amp, width } => {
                if !(amp.is_finite() && *width > 0.0) {
                    return bad("width must be positive and amp finite");
                }
                Ok(())
            }
            Self::PointSet { points, amp, cap, width } => {
                if !(*amp > 0.0 && *cap > 0.0 && *width > 0.0) {
                    return bad("amp, cap and width must be positive");
                }
                if points.iter().any(|e| !e.is_finite()) {
                    return bad("non-finite point");
                }
                Ok(())
            }
            Self::Intervals { intervals, amp, cap, width } => {
                if !(*amp > 0.0 && *cap > 0.0 && *width > 0.0) {
                    return bad("amp, cap and width must be positive");
                }
                if intervals.iter().any(|&(a, b)| !(a <= b)) {
                    return bad("interval with lo > hi");
                }
                Ok(())
            }
            Self::Reflect { of: g } => g.validate(),
        }
    }
}
