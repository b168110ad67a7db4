use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::boundary::{ProfileParams, WeightFn, Weights};
use crate::energy::{energy_J, DEFAULT_ZERO_TOL};
use crate::error::{Error, Result};
use crate::freeboundary::{
    classify_points, default_min_area, default_r_cls, extract_boundaries, find_pools, hausdorff, reflection_mismatch,
};
use crate::geometry::{Grid, Rect, ScalarField2D};
use crate::minimize2d::{solve, SolveConfig};
use crate::regdist::{almost_min_certificate, build_almost_minimizer, growth_checks, GraphFn, GraphMeasureSpec};
use crate::slice1d::{slice_minimize, slice_oracle};

use super::{default_tolerances, radial_decay_check, run_verify, VerifyConfig};

#[derive(Parser, Debug)]
#[command(name = "fbpool", version, about = "Two-phase free boundary strips, slices and regularized distances")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Minimize the energy on the strip [-3N, 3N] x [-1, 1] with the flat profile.
    Solve {
        #[arg(long = "N")]
        n: f64,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        /// Vertical grid spacing; the horizontal spacing is at most 1/8.
        #[arg(long, default_value_t = 1.0 / 64.0)]
        hy: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Iteration cap per smoothing stage.
        #[arg(long)]
        max_iter: Option<usize>,
        /// Directory for the field dump, summary and energy history CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form slice minimizer for boundary value f, optionally against the brute-force oracle.
    Slice {
        #[arg(long)]
        f: f64,
        /// Points per axis of the oracle search grid.
        #[arg(long)]
        oracle_n: Option<usize>,
    },
    /// Energy of a dumped field.
    Energy {
        #[arg(long)]
        field: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        q_plus: f64,
        #[arg(long, default_value_t = 1.0)]
        q_minus: f64,
        /// Node-aligned sub-rectangle `x_lo,x_hi,y_lo,y_hi`; the whole grid by default.
        #[arg(long)]
        sub: Option<String>,
        #[arg(long, default_value_t = DEFAULT_ZERO_TOL)]
        zero_tol: f64,
    },
    /// Free boundaries, branch points and zero pools of a dumped field.
    Fb {
        #[arg(long)]
        field: PathBuf,
        /// Classification radius; three grid spacings by default.
        #[arg(long)]
        r_cls: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_ZERO_TOL)]
        zero_tol: f64,
        /// Directory for the contour CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the almost-minimizer from two weighted graphs on [-1, 1]^2.
    Regdist {
        /// Graph spec: JSON, `@file`, or one of flat, bump[=amp,width],
        /// cubic-cusp[=amp,width], cantor-K[=lo,hi], points=e1,e2,..., segment=a,b.
        #[arg(long)]
        graph_plus: String,
        /// Defaults to the reflection of the upper graph.
        #[arg(long)]
        graph_minus: Option<String>,
        /// Radius of the domain carrying the graph measure.
        #[arg(long = "R", default_value_t = 20.0)]
        r_domain: f64,
        #[arg(long, default_value_t = 1.0 / 128.0)]
        hy: f64,
        /// Constant weight of the graph measure density.
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        #[arg(long, default_value_t = 200)]
        growth_samples: usize,
        /// Balls for the almost-minimality certificate; 0 skips it.
        #[arg(long, default_value_t = 0)]
        certificate_balls: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the inequality checks over a sweep of strip lengths.
    Verify {
        #[arg(long = "N-list", visible_alias = "N", value_delimiter = ',', default_values_t = [5.0, 10.0, 20.0])]
        n_list: Vec<f64>,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0 / 64.0)]
        hy: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 0.15)]
        theta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        regions: usize,
        #[arg(long, default_value_t = 60)]
        audit_balls: usize,
        /// Override a tolerance, `name=value`; repeatable.
        #[arg(long = "tol")]
        tolerances: Vec<String>,
        /// Report path; the report goes to stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Only failures at the largest N fail the run.
        #[arg(long)]
        expect_subcritical: bool,
    },
    /// Radial slice energies against A / log(2N).
    Radial {
        #[arg(long = "N-list", visible_alias = "N", value_delimiter = ',', default_values_t = [1e2, 1e4, 1e6])]
        n_list: Vec<f64>,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
    },
}

/// Runs the command line and returns the exit status: 0 on success, 1 when
/// a check fails, 2 on usage or input errors.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.cmd) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w)?;
    Ok(())
}

fn read_field(path: &Path) -> Result<ScalarField2D> {
    ScalarField2D::read_dump(BufReader::new(File::open(path)?))
}

fn write_field(path: &Path, u: &ScalarField2D) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    u.write_dump(&mut w)?;
    w.flush()?;
    Ok(())
}

fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number {t:?}"))))
        .collect()
}

/// Parses a graph spec; see the `--graph-plus` help.
pub fn parse_graph(spec: &str) -> Result<GraphFn> {
    let spec = spec.trim();
    if spec.starts_with('{') {
        return Ok(serde_json::from_str(spec)?);
    }
    if let Some(path) = spec.strip_prefix('@') {
        return Ok(serde_json::from_str(&fs::read_to_string(path)?)?);
    }
    let (name, args) = match spec.split_once('=') {
        Some((n, a)) => (n, parse_floats(a)?),
        None => (spec, Vec::new()),
    };
    let arg = |k: usize, d: f64| args.get(k).copied().unwrap_or(d);
    let g = match name {
        "flat" => GraphFn::Flat,
        "bump" => GraphFn::Bump { amp: arg(0, 0.1), width: arg(1, 1.0) },
        "cubic-cusp" => GraphFn::CubicCusp { amp: arg(0, 1.0), width: arg(1, 1.0) },
        "points" if !args.is_empty() => GraphFn::PointSet { points: args.clone(), amp: 60.0, cap: 0.005, width: 1.5 },
        "segment" if args.len() == 2 => GraphFn::segment(args[0], args[1], 2000.0, 1.5e-4, 1.5),
        _ => match name.strip_prefix("cantor-").and_then(|k| k.parse::<u32>().ok()) {
            Some(level) => GraphFn::cantor(level, arg(0, -0.8), arg(1, 0.8), 2000.0, 1.5e-4, 1.5),
            None => return Err(Error::Parse(format!("unknown graph spec {spec:?}"))),
        },
    };
    g.validate()?;
    Ok(g)
}

fn run(cmd: Cmd) -> Result<bool> {
    match cmd {
        Cmd::Solve { n, alpha, hy, seed, max_iter, out } => {
            let mut config = SolveConfig::new(ProfileParams::new(n, alpha)?, hy)?;
            config.seed = seed;
            if let Some(m) = max_iter {
                config.max_iter = m;
            }
            let r = solve(&config)?;
            let summary = r.summary();
            if let Some(dir) = out {
                fs::create_dir_all(&dir)?;
                write_field(&dir.join("u.dump"), &r.u)?;
                write_json(&dir.join("summary.json"), &summary)?;
                let mut w = BufWriter::new(File::create(dir.join("energy_history.csv"))?);
                writeln!(w, "iteration,stage,energy")?;
                for (k, e) in r.energy_history.iter().enumerate() {
                    let stage = r.stage_ends.iter().position(|&end| k < end).unwrap_or(r.stage_ends.len());
                    writeln!(w, "{k},{stage},{e:?}")?;
                }
                w.flush()?;
            }
            print_json(&summary)?;
            Ok(true)
        }
        Cmd::Slice { f, oracle_n } => {
            let s = slice_minimize(f)?;
            match oracle_n {
                Some(m) => print_json(&json!({ "closed_form": s, "oracle": slice_oracle(f, m)? }))?,
                None => print_json(&s)?,
            }
            Ok(true)
        }
        Cmd::Energy { field, q_plus, q_minus, sub, zero_tol } => {
            let u = read_field(&field)?;
            let rect = match sub {
                Some(s) => match parse_floats(&s)?[..] {
                    [a, b, c, d] => Rect::new(a, b, c, d)?,
                    _ => return Err(Error::Parse(format!("--sub needs four numbers, got {s:?}"))),
                },
                None => u.grid().rect,
            };
            print_json(&energy_J(&u, &Weights::constant(q_plus, q_minus)?, &rect, zero_tol)?)?;
            Ok(true)
        }
        Cmd::Fb { field, r_cls, zero_tol, out } => {
            let u = read_field(&field)?;
            let g = *u.grid();
            let fb = classify_points(&extract_boundaries(&u, zero_tol), &g, r_cls.unwrap_or_else(|| default_r_cls(&g)))?;
            let pools = find_pools(&u, zero_tol, default_min_area(&g));
            if let Some(dir) = out {
                fs::create_dir_all(&dir)?;
                let mut w = BufWriter::new(File::create(dir.join("contours.csv"))?);
                writeln!(w, "phase,line,closed,x,y,label")?;
                for plus in [true, false] {
                    let (lines, labels) = if plus { (&fb.gamma_plus, &fb.labels_plus) } else { (&fb.gamma_minus, &fb.labels_minus) };
                    for (k, (p, l)) in lines.iter().zip(labels).enumerate() {
                        for (v, lab) in p.vertices.iter().zip(l) {
                            let lab = serde_json::to_value(lab)?;
                            writeln!(w, "{},{k},{},{:?},{:?},{}", if plus { "plus" } else { "minus" }, p.closed, v.x, v.y, lab.as_str().unwrap_or(""))?;
                        }
                    }
                }
                w.flush()?;
            }
            let pool_json: Vec<_> = pools
                .iter()
                .map(|p| {
                    json!({
                        "area": p.area,
                        "bbox": p.bbox,
                        "margin_x": p.margin_x,
                        "margin_y": p.margin_y,
                        "touches_plus": p.boundary_touches_plus,
                        "touches_minus": p.boundary_touches_minus,
                    })
                })
                .collect();
            print_json(&json!({
                "length": fb.length(),
                "plus_vertices": fb.plus_vertices().count(),
                "minus_vertices": fb.minus_vertices().count(),
                "branch_points": fb.branch_points,
                "r_cls": fb.r_cls,
                "reflection_mismatch": reflection_mismatch(&fb),
                "pools": pool_json,
            }))?;
            Ok(true)
        }
        Cmd::Regdist { graph_plus, graph_minus, r_domain, hy, q, growth_samples, certificate_balls, seed, out } => {
            let gp = parse_graph(&graph_plus)?;
            let gm = match graph_minus {
                Some(s) => parse_graph(&s)?,
                None => gp.reflected(),
            };
            let plus = GraphMeasureSpec::new(gp.clone(), WeightFn::Constant(q), r_domain)?;
            let minus = GraphMeasureSpec::new(gm.clone(), WeightFn::Constant(q), r_domain)?;
            let n = (2.0 / hy).ceil() as usize;
            let grid = Grid::new(Rect::new(-1.0, 1.0, -1.0, 1.0)?, n, n)?;
            let u = build_almost_minimizer(&plus, &minus, &grid)?;
            let growth = growth_checks(&plus, growth_samples, seed)?;
            let r_cls = default_r_cls(&grid);
            let fb = classify_points(&extract_boundaries(&u, DEFAULT_ZERO_TOL), &grid, r_cls)?;
            let mut e: Vec<(f64, f64)> = gp
                .branch_set()
                .into_iter()
                .filter(|x| x.abs() <= 1.0)
                .map(|x| (x, 0.0))
                .collect();
            e.dedup();
            let branch = json!({
                "detected": fb.branch_points,
                "prescribed": e,
                "hausdorff": if e.is_empty() && fb.branch_points.is_empty() { 0.0 } else { hausdorff(&fb.branch_points, &e) },
                "tolerance": 2.0 * grid.h_max().max(r_cls),
                "reflection_mismatch": reflection_mismatch(&fb),
            });
            // the measure density q^-1 gives energy weights q / pi on the trace
            let w = Weights::constant(q / std::f64::consts::PI, q / std::f64::consts::PI)?;
            let cert = if certificate_balls > 0 { Some(almost_min_certificate(&u, &w, 1.0, certificate_balls, seed)?) } else { None };
            if let Some(dir) = out {
                fs::create_dir_all(&dir)?;
                write_field(&dir.join("u.dump"), &u)?;
                write_json(&dir.join("growth.json"), &growth)?;
                write_json(&dir.join("branch.json"), &branch)?;
                if let Some(c) = &cert {
                    write_json(&dir.join("certificate.json"), c)?;
                }
            }
            let mut summary = BTreeMap::new();
            summary.insert("graph_plus", serde_json::to_value(&gp)?);
            summary.insert("graph_minus", serde_json::to_value(&gm)?);
            summary.insert("growth_c1", json!(growth.c1));
            summary.insert("calibration_c", json!(growth.calibration_c));
            summary.insert("near_graph_max_rel_err", json!(growth.near_graph_max_rel_err));
            summary.insert("branch", branch);
            if let Some(c) = &cert {
                summary.insert("certificate", json!({ "slope": c.slope, "threshold": c.threshold, "passed": c.passed }));
            }
            print_json(&summary)?;
            Ok(cert.map_or(true, |c| c.passed))
        }
        Cmd::Verify { n_list, alpha, hy, delta, theta, seed, regions, audit_balls, tolerances, out, expect_subcritical } => {
            let mut tol = default_tolerances();
            for t in &tolerances {
                let (k, v) = t.split_once('=').ok_or_else(|| Error::Parse(format!("--tol expects name=value, got {t:?}")))?;
                if !tol.contains_key(k) {
                    return Err(Error::Parse(format!("unknown tolerance {k:?}")));
                }
                let v: f64 = v.parse().map_err(|_| Error::Parse(format!("bad tolerance value {v:?}")))?;
                tol.insert(k.to_string(), v);
            }
            let cfg = VerifyConfig {
                n_list,
                alpha,
                hy,
                delta,
                theta,
                tolerances: tol,
                seed,
                n_regions: regions,
                audit_balls,
                expect_subcritical,
            };
            let report = run_verify(&cfg)?;
            for c in &report.checks {
                let n = c.n.map_or("all".to_string(), |n| n.to_string());
                eprintln!("{} N={n} {}", if c.passed { "PASS" } else { "FAIL" }, c.name);
            }
            match out {
                Some(p) => write_json(&p, &report)?,
                None => print_json(&report)?,
            }
            Ok(report.passed)
        }
        Cmd::Radial { n_list, alpha } => {
            let r = radial_decay_check(&n_list, alpha)?;
            print_json(&r)?;
            Ok(r.passed)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_specs() {
        assert_eq!(parse_graph("flat").unwrap(), GraphFn::Flat);
        assert_eq!(parse_graph("cantor-2").unwrap().branch_set().len(), 8);
        assert_eq!(parse_graph("points=0,0.5").unwrap().branch_set(), vec![0.0, 0.5]);
        let j = serde_json::to_string(&GraphFn::Bump { amp: 0.2, width: 1.0 }).unwrap();
        assert_eq!(parse_graph(&j).unwrap(), GraphFn::Bump { amp: 0.2, width: 1.0 });
        assert!(parse_graph("spiral").is_err());
        assert!(parse_graph("segment=1").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(cli_main(["fbpool", "bogus"]), 2);
        assert_eq!(cli_main(["fbpool", "slice", "--f", "2", "--nope"]), 2);
        assert_eq!(cli_main(["fbpool", "slice", "--f", "-1"]), 2);
        assert_eq!(cli_main(["fbpool", "slice", "--f", "2"]), 0);
        assert_eq!(cli_main(["fbpool", "radial", "--N-list", "10,100"]), 2);
    }
}
