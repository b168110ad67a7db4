use fbpool_core::energy::{energy_J, DEFAULT_ZERO_TOL};
use fbpool_core::minimize2d::{slice_field, solve, SolveConfig, SolveResult};
use fbpool_core::{ProfileParams, Weights};

fn small_solve(n: f64) -> (SolveConfig, SolveResult) {
    let cfg = SolveConfig::new(ProfileParams::new(n, 0.1).unwrap(), 1.0 / 16.0).unwrap();
    let r = solve(&cfg).unwrap();
    (cfg, r)
}

#[test]
fn energy_history_decreases_within_stages() {
    let (_, r) = small_solve(2.0);
    assert!(!r.energy_history.is_empty());
    assert_eq!(*r.stage_ends.last().unwrap(), r.energy_history.len());
    let mut start = 0;
    for &end in &r.stage_ends {
        for w in r.energy_history[start..end].windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} -> {}", w[0], w[1]);
        }
        start = end;
    }
}

#[test]
fn solution_is_odd_and_keeps_boundary_data() {
    let (cfg, r) = small_solve(2.0);
    let g = cfg.grid;
    assert!(cfg.odd_symmetric());
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let d = r.u.at(i, j) + r.u.at(i, g.ny - j);
            assert!(d.abs() <= 1e-8, "asymmetry {d} at ({i}, {j})");
        }
    }
    let bc = cfg.data.dirichlet_data(&g).unwrap();
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            if let Some(v) = bc.value_at(i, j) {
                assert_eq!(r.u.at(i, j), v);
            }
        }
    }
}

#[test]
fn beats_the_slice_competitor() {
    let (cfg, r) = small_solve(3.0);
    let w = Weights::unit();
    let rect = cfg.grid.rect;
    let slices = slice_field(&ProfileParams::new(3.0, 0.1).unwrap(), &cfg.grid).unwrap();
    let s = energy_J(&slices, &w, &rect, DEFAULT_ZERO_TOL).unwrap();
    let j = energy_J(&r.u, &w, &rect, DEFAULT_ZERO_TOL).unwrap();
    assert!(j.total <= s.total + 1e-9, "{} > {}", j.total, s.total);
    assert!((j.total - r.final_energy.total).abs() <= 1e-9 * j.total.abs().max(1.0));
}

#[test]
fn solves_are_deterministic() {
    let (_, a) = small_solve(2.0);
    let (_, b) = small_solve(2.0);
    assert_eq!(a.u.values(), b.u.values());
    assert_eq!(a.energy_history, b.energy_history);
}
