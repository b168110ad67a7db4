//! Free boundaries of a discrete field, phase labels, branch points and pools.
//!
//! Cells are split into positive, negative and zero bands by their nodal mean.
//! The boundary of the positive band is traced by marching squares on the
//! lattice of cell centers; contour vertices sit at midpoints of faces shared
//! by a positive cell and a non-positive one.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::boundary::{f_flat, ProfileParams};
use crate::error::{Error, Result};
use crate::geometry::{Grid, ScalarField2D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseLabel {
    OnePhase,
    TwoPhase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub x: f64,
    pub y: f64,
    /// Cell on the phase side of the face.
    pub inner: (usize, usize),
    /// Cell across the face.
    pub outer: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub vertices: Vec<Vertex>,
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeBoundary {
    pub gamma_plus: Vec<Polyline>,
    pub gamma_minus: Vec<Polyline>,
    /// Labels parallel to the vertices of `gamma_plus`; empty until classified.
    pub labels_plus: Vec<Vec<PhaseLabel>>,
    pub labels_minus: Vec<Vec<PhaseLabel>>,
    pub branch_points: Vec<(f64, f64)>,
    pub r_cls: f64,
}

impl FreeBoundary {
    pub fn plus_vertices(&self) -> impl Iterator<Item = &Vertex> {
        self.gamma_plus.iter().flat_map(|p| p.vertices.iter())
    }

    pub fn minus_vertices(&self) -> impl Iterator<Item = &Vertex> {
        self.gamma_minus.iter().flat_map(|p| p.vertices.iter())
    }

    /// Total polyline length of both boundaries.
    pub fn length(&self) -> f64 {
        self.gamma_plus
            .iter()
            .chain(&self.gamma_minus)
            .map(|p| {
                let mut l: f64 = p
                    .vertices
                    .windows(2)
                    .map(|w| (w[1].x - w[0].x).hypot(w[1].y - w[0].y))
                    .sum();
                if p.closed && p.vertices.len() > 2 {
                    let (a, b) = (p.vertices[0], p.vertices[p.vertices.len() - 1]);
                    l += (a.x - b.x).hypot(a.y - b.y);
                }
                l
            })
            .sum()
    }

    /// `(vertex, label)` pairs for one boundary, flattening the polylines.
    pub fn labelled(&self, plus: bool) -> Vec<(Vertex, PhaseLabel)> {
        let (lines, labels) = if plus {
            (&self.gamma_plus, &self.labels_plus)
        } else {
            (&self.gamma_minus, &self.labels_minus)
        };
        lines
            .iter()
            .zip(labels)
            .flat_map(|(p, l)| p.vertices.iter().copied().zip(l.iter().copied()))
            .collect()
    }
}

/// Cell phases: `1`, `-1` or `0`, indexed `j * nx + i`.
pub fn cell_phases(field: &ScalarField2D, zero_tol: f64) -> Vec<i8> {
    let g = field.grid();
    let mut out = Vec::with_capacity(g.nx * g.ny);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let m = field.cell_mean(i, j);
            out.push(if m > zero_tol {
                1
            } else if m < -zero_tol {
                -1
            } else {
                0
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Face {
    /// Between cells `(i, j)` and `(i + 1, j)`.
    H(usize, usize),
    /// Between cells `(i, j)` and `(i, j + 1)`.
    V(usize, usize),
}

fn face_vertex(g: &Grid, inside: &dyn Fn(usize, usize) -> bool, f: Face) -> Vertex {
    match f {
        Face::H(i, j) => {
            let (a, b) = ((i, j), (i + 1, j));
            let (inner, outer) = if inside(i, j) { (a, b) } else { (b, a) };
            Vertex {
                x: g.x(i + 1),
                y: g.cell_center(i, j).1,
                inner,
                outer,
            }
        }
        Face::V(i, j) => {
            let (a, b) = ((i, j), (i, j + 1));
            let (inner, outer) = if inside(i, j) { (a, b) } else { (b, a) };
            Vertex {
                x: g.cell_center(i, j).0,
                y: g.y(j + 1),
                inner,
                outer,
            }
        }
    }
}

/// Marching squares for the boundary of `{inside}` over the cell-center lattice.
fn trace(g: &Grid, inside: &dyn Fn(usize, usize) -> bool) -> Vec<Polyline> {
    let mut adj: HashMap<Face, Vec<Face>> = HashMap::new();
    let mut order: Vec<Face> = Vec::new();
    let link = |a: Face, b: Face, adj: &mut HashMap<Face, Vec<Face>>, order: &mut Vec<Face>| {
        for (p, q) in [(a, b), (b, a)] {
            let e = adj.entry(p).or_insert_with(|| {
                order.push(p);
                Vec::new()
            });
            e.push(q);
        }
    };
    for j in 0..g.ny.saturating_sub(1) {
        for i in 0..g.nx.saturating_sub(1) {
            // corners: 0 = (i, j), 1 = (i+1, j), 2 = (i+1, j+1), 3 = (i, j+1)
            let c = [
                inside(i, j),
                inside(i + 1, j),
                inside(i + 1, j + 1),
                inside(i, j + 1),
            ];
            let code = c[0] as u8 | (c[1] as u8) << 1 | (c[2] as u8) << 2 | (c[3] as u8) << 3;
            let bottom = Face::H(i, j);
            let right = Face::V(i + 1, j);
            let top = Face::H(i, j + 1);
            let left = Face::V(i, j);
            let segs: &[(Face, Face)] = match code {
                0 | 15 => &[],
                1 | 14 => &[(left, bottom)],
                2 | 13 => &[(bottom, right)],
                3 | 12 => &[(left, right)],
                4 | 11 => &[(right, top)],
                6 | 9 => &[(bottom, top)],
                7 | 8 => &[(left, top)],
                // saddles: keep diagonal inside corners apart
                5 => &[(left, bottom), (right, top)],
                10 => &[(bottom, right), (left, top)],
                _ => unreachable!(),
            };
            for &(a, b) in segs {
                link(a, b, &mut adj, &mut order);
            }
        }
    }
    let mut seen: HashMap<Face, bool> = HashMap::new();
    let mut out = Vec::new();
    let walk = |start: Face, seen: &mut HashMap<Face, bool>| -> (Vec<Face>, bool) {
        let mut path = vec![start];
        seen.insert(start, true);
        let mut prev = None;
        let mut cur = start;
        loop {
            let next = adj[&cur]
                .iter()
                .copied()
                .find(|n| Some(*n) != prev && !seen.contains_key(n));
            match next {
                Some(n) => {
                    seen.insert(n, true);
                    path.push(n);
                    prev = Some(cur);
                    cur = n;
                }
                None => {
                    let closed = path.len() > 2 && adj[&cur].contains(&start);
                    return (path, closed);
                }
            }
        }
    };
    // open chains first, from their endpoints
    for &f in &order {
        if !seen.contains_key(&f) && adj[&f].len() == 1 {
            let (path, _) = walk(f, &mut seen);
            out.push((path, false));
        }
    }
    for &f in &order {
        if !seen.contains_key(&f) {
            let (path, closed) = walk(f, &mut seen);
            out.push((path, closed));
        }
    }
    out.into_iter()
        .map(|(path, closed)| Polyline {
            vertices: path.into_iter().map(|f| face_vertex(g, inside, f)).collect(),
            closed,
        })
        .collect()
}

/// Traces the boundaries of the positive and negative bands.
pub fn extract_boundaries(field: &ScalarField2D, zero_tol: f64) -> FreeBoundary {
    let g = *field.grid();
    let phases = cell_phases(field, zero_tol);
    let plus = |i: usize, j: usize| phases[j * g.nx + i] > 0;
    let minus = |i: usize, j: usize| phases[j * g.nx + i] < 0;
    FreeBoundary {
        gamma_plus: trace(&g, &plus),
        gamma_minus: trace(&g, &minus),
        labels_plus: Vec::new(),
        labels_minus: Vec::new(),
        branch_points: Vec::new(),
        r_cls: 0.0,
    }
}

/// Bucketed point set for radius queries.
struct PointIndex {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<(f64, f64)>>,
}

impl PointIndex {
    fn new(points: impl Iterator<Item = (f64, f64)>, cell: f64) -> Self {
        let mut buckets: HashMap<(i64, i64), Vec<(f64, f64)>> = HashMap::new();
        for p in points {
            buckets.entry(Self::key(p, cell)).or_default().push(p);
        }
        Self { cell, buckets }
    }

    fn key(p: (f64, f64), cell: f64) -> (i64, i64) {
        ((p.0 / cell).floor() as i64, (p.1 / cell).floor() as i64)
    }

    fn any_within(&self, p: (f64, f64), r: f64) -> bool {
        let (ki, kj) = Self::key(p, self.cell);
        let reach = (r / self.cell).ceil() as i64;
        for dj in -reach..=reach {
            for di in -reach..=reach {
                if let Some(b) = self.buckets.get(&(ki + di, kj + dj)) {
                    if b.iter().any(|q| (q.0 - p.0).hypot(q.1 - p.1) <= r) {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// Default classification radius: three of the smaller grid spacings.
pub fn default_r_cls(grid: &Grid) -> f64 {
    3.0 * grid.h_min()
}

/// Labels vertices two-phase when the opposite boundary is within `r_cls`,
/// and collects branch points: two-phase vertices with a one-phase vertex within `r_cls`.
pub fn classify_points(fb: &FreeBoundary, grid: &Grid, r_cls: f64) -> Result<FreeBoundary> {
    if r_cls < 2.0 * grid.h_min() * (1.0 - 1e-12) {
        return Err(Error::Domain(format!(
            "classification radius {r_cls} below two grid spacings ({})",
            2.0 * grid.h_min()
        )));
    }
    // vertices along a contour can be a full cell apart on anisotropic grids
    let closure = r_cls.max(1.5 * grid.h_max());
    let cell = closure;
    let pts = |it: &mut dyn Iterator<Item = &Vertex>| -> Vec<(f64, f64)> { it.map(|v| (v.x, v.y)).collect() };
    let plus_pts = pts(&mut fb.plus_vertices());
    let minus_pts = pts(&mut fb.minus_vertices());
    let plus_idx = PointIndex::new(plus_pts.iter().copied(), cell);
    let minus_idx = PointIndex::new(minus_pts.iter().copied(), cell);
    let label = |lines: &[Polyline], other: &PointIndex| -> Vec<Vec<PhaseLabel>> {
        lines
            .iter()
            .map(|p| {
                p.vertices
                    .iter()
                    .map(|v| {
                        if other.any_within((v.x, v.y), r_cls) {
                            PhaseLabel::TwoPhase
                        } else {
                            PhaseLabel::OnePhase
                        }
                    })
                    .collect()
            })
            .collect()
    };
    let labels_plus = label(&fb.gamma_plus, &minus_idx);
    let labels_minus = label(&fb.gamma_minus, &plus_idx);
    let mut out = FreeBoundary {
        gamma_plus: fb.gamma_plus.clone(),
        gamma_minus: fb.gamma_minus.clone(),
        labels_plus,
        labels_minus,
        branch_points: Vec::new(),
        r_cls,
    };
    let mut one = Vec::new();
    let mut two = Vec::new();
    for plus in [true, false] {
        for (v, l) in out.labelled(plus) {
            match l {
                PhaseLabel::OnePhase => one.push((v.x, v.y)),
                PhaseLabel::TwoPhase => two.push((v.x, v.y)),
            }
        }
    }
    let one_idx = PointIndex::new(one.into_iter(), cell);
    let mut bps: Vec<(f64, f64)> = two.into_iter().filter(|&p| one_idx.any_within(p, closure)).collect();
    bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    bps.dedup();
    out.branch_points = bps;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pool {
    pub component_cells: Vec<(usize, usize)>,
    pub area: f64,
    pub boundary_touches_plus: bool,
    pub boundary_touches_minus: bool,
    pub margin_to_domain_boundary: f64,
    /// Distance from the component to the top and bottom edges.
    pub margin_y: f64,
    /// Distance from the component to the left and right edges.
    pub margin_x: f64,
    /// `[x_lo, x_hi, y_lo, y_hi]` of the covered cells.
    pub bbox: [f64; 4],
}

impl Pool {
    pub fn contains_cell(&self, c: (usize, usize)) -> bool {
        self.component_cells.binary_search(&c).is_ok()
    }
}

/// 4-connected components of zero cells with area at least `min_area`.
pub fn find_pools(field: &ScalarField2D, zero_tol: f64, min_area: f64) -> Vec<Pool> {
    let g = *field.grid();
    let phases = cell_phases(field, zero_tol);
    let (nx, ny) = (g.nx, g.ny);
    let mut label = vec![usize::MAX; nx * ny];
    let mut pools = Vec::new();
    let mut stack = Vec::new();
    for start in 0..nx * ny {
        if phases[start] != 0 || label[start] != usize::MAX {
            continue;
        }
        let id = start;
        label[start] = id;
        stack.push(start);
        let mut cells = Vec::new();
        let (mut tp, mut tm) = (false, false);
        let mut bbox = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        while let Some(c) = stack.pop() {
            let (i, j) = (c % nx, c / nx);
            cells.push((i, j));
            bbox[0] = bbox[0].min(g.x(i));
            bbox[1] = bbox[1].max(g.x(i + 1));
            bbox[2] = bbox[2].min(g.y(j));
            bbox[3] = bbox[3].max(g.y(j + 1));
            let mut nbrs = [None; 4];
            if i > 0 {
                nbrs[0] = Some(c - 1);
            }
            if i + 1 < nx {
                nbrs[1] = Some(c + 1);
            }
            if j > 0 {
                nbrs[2] = Some(c - nx);
            }
            if j + 1 < ny {
                nbrs[3] = Some(c + nx);
            }
            for n in nbrs.into_iter().flatten() {
                match phases[n] {
                    1 => tp = true,
                    -1 => tm = true,
                    _ => {
                        if label[n] == usize::MAX {
                            label[n] = id;
                            stack.push(n);
                        }
                    }
                }
            }
        }
        let area = cells.len() as f64 * g.cell_area();
        if area < min_area {
            continue;
        }
        cells.sort_unstable();
        let r = g.rect;
        let margin_x = (bbox[0] - r.x_lo).min(r.x_hi - bbox[1]);
        let margin_y = (bbox[2] - r.y_lo).min(r.y_hi - bbox[3]);
        pools.push(Pool {
            component_cells: cells,
            area,
            boundary_touches_plus: tp,
            boundary_touches_minus: tm,
            margin_to_domain_boundary: margin_x.min(margin_y),
            margin_y,
            margin_x,
            bbox,
        });
    }
    pools.sort_by(|a, b| b.area.partial_cmp(&a.area).unwrap());
    pools
}

/// Default minimum pool area: 16 cells.
pub fn default_min_area(grid: &Grid) -> f64 {
    16.0 * grid.cell_area()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripReport {
    /// Least value of `u` in the upper strip `1 - 1/44 <= y <= 1 - 1/88`.
    pub min_upper_strip: f64,
    /// Largest value of `u` in the mirrored lower strip.
    pub max_lower_strip: f64,
    /// Lowest `y` of a positive node with `|x| < N - 1` (infinite if none).
    pub min_positive_y: f64,
    /// Largest `|y|` of a zero of `u` where the profile is at least 1.
    pub theta: f64,
}

/// Measures the strip bounds near the top and bottom, the lowest positive
/// point over the middle and how far zeros stray from `y = 0` where `f >= 1`.
/// Zeros are nodes with `|u| <= zero_tol` and sign changes along vertical edges.
pub fn strip_checks(field: &ScalarField2D, profile: &ProfileParams, delta: f64, zero_tol: f64) -> Result<StripReport> {
    let g = field.grid();
    let n = profile.n;
    let x_max = 3.0 * n - delta;
    let (s_lo, s_hi) = (1.0 - 1.0 / 44.0, 1.0 - 1.0 / 88.0);
    let mut min_up = f64::INFINITY;
    let mut max_lo = f64::NEG_INFINITY;
    let mut min_pos_y = f64::INFINITY;
    let mut theta: f64 = 0.0;
    for i in 0..=g.nx {
        let x = g.x(i);
        if x.abs() > x_max {
            continue;
        }
        let f = f_flat(x.clamp(-3.0 * n, 3.0 * n), profile)?;
        for j in 0..=g.ny {
            let y = g.y(j);
            let u = field.at(i, j);
            if y >= s_lo && y <= s_hi {
                min_up = min_up.min(u);
            }
            if -y >= s_lo && -y <= s_hi {
                max_lo = max_lo.max(u);
            }
            if x.abs() < n - 1.0 && u > zero_tol {
                min_pos_y = min_pos_y.min(y);
            }
            if f >= 1.0 && y.abs() <= s_hi {
                if u.abs() <= zero_tol {
                    theta = theta.max(y.abs());
                }
                if j < g.ny {
                    let w = field.at(i, j + 1);
                    if (u > zero_tol && w < -zero_tol) || (u < -zero_tol && w > zero_tol) {
                        let yc = y + (g.y(j + 1) - y) * u / (u - w);
                        if yc.abs() <= s_hi {
                            theta = theta.max(yc.abs());
                        }
                    }
                }
            }
        }
    }
    Ok(StripReport {
        min_upper_strip: min_up,
        max_lower_strip: max_lo,
        min_positive_y: min_pos_y,
        theta,
    })
}

/// Symmetric Hausdorff distance between two finite point sets; infinite if
/// exactly one of them is empty.
pub fn hausdorff(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return f64::INFINITY,
        _ => {}
    }
    let one_sided = |p: &[(f64, f64)], q: &[(f64, f64)]| {
        p.iter()
            .map(|&(x, y)| q.iter().map(|&(u, v)| (x - u).hypot(y - v)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

/// Hausdorff distance between the negative boundary and the mirror image of
/// the positive one under `y -> -y`.
pub fn reflection_mismatch(fb: &FreeBoundary) -> f64 {
    let plus: Vec<(f64, f64)> = fb.plus_vertices().map(|v| (v.x, -v.y)).collect();
    let minus: Vec<(f64, f64)> = fb.minus_vertices().map(|v| (v.x, v.y)).collect();
    hausdorff(&plus, &minus)
}
