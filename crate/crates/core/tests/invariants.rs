use fbpool_core::boundary::{f_flat, f_radial, BoundaryData};
use fbpool_core::energy::{dx_energy, energy_J, sliced_energy_S, weiss, DEFAULT_ZERO_TOL};
use fbpool_core::freeboundary::{classify_points, extract_boundaries, find_pools};
use fbpool_core::geometry::{gradient, restrict};
use fbpool_core::regdist::{regdist_eval, GraphFn, GraphMeasureSpec};
use fbpool_core::boundary::WeightFn;
use fbpool_core::slice1d::{slice_energy, slice_minimize, slice_oracle, zero_measure_lower_bound, SliceProfile};
use fbpool_core::{Grid, ProfileParams, Rect, ScalarField2D, Weights};
use proptest::prelude::*;

fn field(nx: usize, ny: usize, vals: &[f64]) -> ScalarField2D {
    let g = Grid::new(Rect::new(-2.0, 2.0, -1.0, 1.0).unwrap(), nx, ny).unwrap();
    let v: Vec<f64> = (0..g.num_nodes()).map(|k| vals[k % vals.len()]).collect();
    ScalarField2D::new(g, v).unwrap()
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), -2.0..2.0f64], 7..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn affine_gradient_is_exact(a in -3.0..3.0f64, b in -3.0..3.0f64, c in -1.0..1.0f64, nx in 2usize..20, ny in 2usize..20) {
        let g = Grid::new(Rect::new(-1.0, 2.0, -1.0, 1.0).unwrap(), nx, ny).unwrap();
        let u = ScalarField2D::from_fn(g, |x, y| a * x + b * y + c);
        for j in 0..ny {
            for i in 0..nx {
                let d = gradient(&u, (i, j)).unwrap();
                prop_assert!((d[0] - a).abs() < 1e-9 && (d[1] - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn restrict_is_idempotent_and_nests(vals in values(), i0 in 0usize..4, i1 in 5usize..8, j0 in 0usize..2, j1 in 3usize..4) {
        let u = field(8, 4, &vals);
        let g = *u.grid();
        let outer = Rect::new(g.x(i0), g.x(i1), g.y(j0), g.y(j1)).unwrap();
        let r = restrict(&u, &outer).unwrap();
        prop_assert_eq!(&restrict(&r, &outer).unwrap(), &r);
        let inner = Rect::new(g.x(i0), g.x(i0 + 2), g.y(j0), g.y(j0 + 2)).unwrap();
        prop_assert_eq!(restrict(&r, &inner).unwrap(), restrict(&u, &inner).unwrap());
    }

    #[test]
    fn energies_add_over_splits(vals in values(), cut in 1usize..12, nx in 12usize..16, ny in 2usize..8) {
        let u = field(nx, ny, &vals);
        let g = *u.grid();
        let r = g.rect;
        let left = Rect::new(r.x_lo, g.x(cut), r.y_lo, r.y_hi).unwrap();
        let right = Rect::new(g.x(cut), r.x_hi, r.y_lo, r.y_hi).unwrap();
        let w = Weights::constant(1.3, 0.7).unwrap();
        let all = energy_J(&u, &w, &r, DEFAULT_ZERO_TOL).unwrap();
        let (a, b) = (energy_J(&u, &w, &left, DEFAULT_ZERO_TOL).unwrap(), energy_J(&u, &w, &right, DEFAULT_ZERO_TOL).unwrap());
        prop_assert!((all.total - a.total - b.total).abs() <= 1e-12 * all.total.max(1.0));
        let s = sliced_energy_S(&u, &r, 0.0).unwrap();
        let s2 = sliced_energy_S(&u, &left, 0.0).unwrap() + sliced_energy_S(&u, &right, 0.0).unwrap();
        prop_assert!((s - s2).abs() <= 1e-12 * s.max(1.0));
        let d = dx_energy(&u, &r).unwrap();
        let d2 = dx_energy(&u, &left).unwrap() + dx_energy(&u, &right).unwrap();
        prop_assert!((d - d2).abs() <= 1e-12 * d.max(1.0));
    }

    #[test]
    fn energy_decomposes_into_slices_and_dx(vals in values(), nx in 2usize..20, ny in 2usize..20) {
        let u = field(nx, ny, &vals);
        let r = u.grid().rect;
        let j = energy_J(&u, &Weights::unit(), &r, DEFAULT_ZERO_TOL).unwrap().total;
        let s = sliced_energy_S(&u, &r, DEFAULT_ZERO_TOL).unwrap();
        prop_assert!((j - s - dx_energy(&u, &r).unwrap()).abs() <= 1e-12 * j.abs().max(1e-300));
    }

    #[test]
    fn flat_profile_range_and_crossing(n in 1.0..50.0f64, alpha in 0.01..0.99f64, t in -1.0..1.0f64) {
        let p = ProfileParams::new(n, alpha).unwrap();
        let x = 3.0 * n * t;
        let f = f_flat(x, &p).unwrap();
        prop_assert!(f >= 1.0 - alpha - 1e-12 && f <= 2.0 + 1e-12);
        if alpha <= 0.25 {
            prop_assert!(f >= 0.75);
        }
        let xc = p.unit_crossing();
        if (x.abs() - xc).abs() > 1e-9 * n {
            prop_assert_eq!(f >= 1.0, x.abs() >= xc);
        }
        // continuity: a small step moves f by at most the ramp slope times the step
        let h = 1e-7 * n;
        let x2 = (x + h).clamp(-3.0 * n, 3.0 * n);
        prop_assert!((f_flat(x2, &p).unwrap() - f).abs() <= (1.0 + alpha) / n * h * (1.0 + 1e-6));
        let r = 3.0 * n * t.abs();
        let r2 = (r + h).min(3.0 * n);
        prop_assert!((f_radial(r2, &p).unwrap() - f_radial(r, &p).unwrap()).abs() <= 2.0 * h * (1.0 + alpha));
    }

    #[test]
    fn dirichlet_data_is_odd(n in 1.0..10.0f64, alpha in 0.01..0.5f64, half_ny in 2usize..10) {
        let p = ProfileParams::new(n, alpha).unwrap();
        let g = Grid::new(p.rect(), 24, 2 * half_ny).unwrap();
        let bc = BoundaryData::Flat(p).dirichlet_data(&g).unwrap();
        for i in 0..=g.nx {
            for j in 0..=g.ny {
                if let Some(v) = bc.value_at(i, j) {
                    prop_assert_eq!(Some(-v), bc.value_at(i, g.ny - j));
                }
            }
        }
    }

    #[test]
    fn slice_minimizer_zero_set_is_the_interval(f in 0.0..3.0f64, y in -1.0..1.0f64) {
        let s = slice_minimize(f).unwrap();
        let zero = s.eval(y) == 0.0;
        let inside = y >= s.a && y <= s.b;
        prop_assert_eq!(zero, inside || (f == 0.0));
    }

    #[test]
    fn slice_energy_nondecreasing(f in 0.0..3.0f64, df in 0.0..0.5f64) {
        let (a, b) = (slice_minimize(f).unwrap().energy, slice_minimize(f + df).unwrap().energy);
        prop_assert!(b >= a);
        prop_assert!(b - a <= 4.0 * (f + df).max(1.0) * df + 1e-12);
    }

    #[test]
    fn oracle_agrees_with_closed_form(f in 0.0..3.0f64) {
        let (s, o) = (slice_minimize(f).unwrap(), slice_oracle(f, 2000).unwrap());
        prop_assert!((s.energy - o.energy).abs() <= 5e-3);
        prop_assert!((s.a - o.a).abs() <= 5e-3 && (s.b - o.b).abs() <= 5e-3);
    }

    /// Piecewise linear profiles with data `+-(1 - alpha)` never beat the
    /// zero-measure lower bound.
    #[test]
    fn zero_measure_bound_on_coarse_profiles(
        alpha in 0.02..0.5f64,
        inner in prop::collection::vec(prop_oneof![2 => Just(0.0), 1 => -1.0..1.0f64], 15),
    ) {
        let f = 1.0 - alpha;
        let mut s = vec![-f];
        s.extend(inner);
        s.push(f);
        let p = SliceProfile::new(s).unwrap();
        let zero_cells = p.samples.windows(2).filter(|w| w[0] == 0.0 && w[1] == 0.0).count();
        let delta = zero_cells as f64 * p.dy();
        prop_assert!(slice_energy(&p, 0.0) >= zero_measure_lower_bound(alpha, delta) - 1e-12);
    }

    #[test]
    fn weiss_of_homogeneous_planes_is_radius_free(lambda in 1.0..3.0f64, r1 in 0.15..0.4f64, r2 in 0.4..0.7f64) {
        let g = Grid::new(Rect::new(-1.0, 1.0, -1.0, 1.0).unwrap(), 256, 256).unwrap();
        let u = ScalarField2D::from_fn(g, |_, y| lambda * y);
        let w = Weights::unit();
        let a = weiss(&u, &w, (0.0, 0.0), r1, DEFAULT_ZERO_TOL).unwrap();
        let b = weiss(&u, &w, (0.0, 0.0), r2, DEFAULT_ZERO_TOL).unwrap();
        prop_assert!((a - b).abs() <= 1e-2, "{} vs {}", a, b);
    }

    #[test]
    fn negation_swaps_free_boundaries(vals in values()) {
        let u = field(10, 6, &vals);
        let a = extract_boundaries(&u, DEFAULT_ZERO_TOL);
        let b = extract_boundaries(&u.map(|v| -v), DEFAULT_ZERO_TOL);
        prop_assert_eq!(&a.gamma_plus, &b.gamma_minus);
        prop_assert_eq!(&a.gamma_minus, &b.gamma_plus);
    }

    #[test]
    fn two_phase_labels_grow_with_radius(vals in values(), k in 0usize..4) {
        let u = field(16, 8, &vals);
        let g = *u.grid();
        let fb = extract_boundaries(&u, DEFAULT_ZERO_TOL);
        let r1 = 2.0 * g.h_min() * (1.0 + k as f64 * 0.5);
        let r2 = r1 * 1.7;
        let two = |r: f64| -> Vec<bool> {
            let c = classify_points(&fb, &g, r).unwrap();
            [true, false].iter().flat_map(|&p| c.labelled(p)).map(|(_, l)| l == fbpool_core::freeboundary::PhaseLabel::TwoPhase).collect()
        };
        for (a, b) in two(r1).into_iter().zip(two(r2)) {
            prop_assert!(!a || b);
        }
    }

    #[test]
    fn pools_are_disjoint(vals in values()) {
        let u = field(16, 8, &vals);
        let pools = find_pools(&u, DEFAULT_ZERO_TOL, 0.0);
        let mut seen = std::collections::HashSet::new();
        for p in &pools {
            for c in &p.component_cells {
                prop_assert!(seen.insert(*c));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn regdist_scales_and_reflects(lambda in 0.3..3.0f64, x in -0.5..0.5f64, y in 0.05..0.8f64) {
        let g = GraphFn::PointSet { points: vec![0.1], amp: 2.0, cap: 1.0, width: 1.0 };
        let base = GraphMeasureSpec::new(g.clone(), WeightFn::Constant(1.0), 20.0).unwrap();
        // the measure is q^-1 ds, so dividing q by lambda scales it by lambda
        let scaled = GraphMeasureSpec::new(g.clone(), WeightFn::Constant(1.0 / lambda), 20.0).unwrap();
        let p = (x, g.eval(x) + y);
        let d = regdist_eval(&base, p).unwrap();
        let ds = regdist_eval(&scaled, p).unwrap();
        prop_assert!((ds - d / lambda).abs() <= 1e-7 * d);
        let mirrored = GraphMeasureSpec::new(g.reflected(), WeightFn::Constant(1.0), 20.0).unwrap();
        let dm = regdist_eval(&mirrored, (p.0, -p.1)).unwrap();
        prop_assert!((dm - d).abs() <= 1e-9 * d);
        let flipped = GraphMeasureSpec::new(GraphFn::PointSet { points: vec![-0.1], amp: 2.0, cap: 1.0, width: 1.0 }, WeightFn::Constant(1.0), 20.0).unwrap();
        let df = regdist_eval(&flipped, (-p.0, p.1)).unwrap();
        prop_assert!((df - d).abs() <= 1e-7 * d);
    }
}
