//! Per-step reporting: solution extrema, line samples, energy-inequality
//! monitors and the CSV writers for the time series.

use std::io::Write;
use std::path::Path;

use crate::ale::{AleFrame, AleStabilityReport, Geometry};
use crate::assembly::{assemble_mass, cell_delta, supg_norm_sq, AssemblyContext};
use crate::error::{Error, Result};
use crate::mesh::{reference_map, Mesh};
use crate::problem::ProblemSpec;
use crate::space::FunctionSpace;
use crate::stab::StabilizationConfig;

/// One row of the time series.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub undershoot: f64,
    pub overshoot: f64,
    pub l2: f64,
    pub supg: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// Stability bound of the active scheme; +inf for rigid motion.
    pub dt_max: f64,
    /// RHS minus LHS of the per-step energy inequality; NaN when not
    /// computable (mu = 0 with a nonzero source).
    pub energy_slack: f64,
}

/// Extrema and bound violations measured over dof values.
pub fn extrema_report(coeffs: &[f64], bounds: [f64; 2]) -> (f64, f64, f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in coeffs {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let undershoot = (bounds[0] - lo).max(0.0);
    let overshoot = (hi - bounds[1]).max(0.0);
    (lo, hi, undershoot, overshoot)
}

/// One sample of a horizontal line probe. `u` is None inside holes
/// (outside every cell).
#[derive(Debug, Clone, Copy)]
pub struct LineSample {
    pub x: f64,
    pub y: f64,
    pub u: Option<f64>,
}

const LOCATE_TOL: f64 = 1e-10;

/// Evaluates the discrete field at `p` by point location, or None when the
/// point lies outside the mesh.
pub fn evaluate_at(
    mesh: &Mesh,
    space: &FunctionSpace,
    coords: &[[f64; 2]],
    coeffs: &[f64],
    p: [f64; 2],
) -> Result<Option<f64>> {
    for k in 0..mesh.n_cells() {
        let map = reference_map(&mesh.cells, coords, k)?;
        let dx = [p[0] - map.origin[0], p[1] - map.origin[1]];
        let xi = map.inv[0][0] * dx[0] + map.inv[0][1] * dx[1];
        let eta = map.inv[1][0] * dx[0] + map.inv[1][1] * dx[1];
        if xi >= -LOCATE_TOL && eta >= -LOCATE_TOL && xi + eta <= 1.0 + LOCATE_TOL {
            let vals = crate::basis::eval_values(space.degree, xi, eta)?;
            let dofs = &space.cell_dofs[k];
            let mut u = 0.0;
            for (i, &d) in dofs.iter().enumerate() {
                u += coeffs[d] * vals[i];
            }
            return Ok(Some(u));
        }
    }
    Ok(None)
}

/// Samples the field along the line y = y0 over [x_lo, x_hi] at n_points
/// equispaced abscissae.
pub fn line_sample(
    mesh: &Mesh,
    space: &FunctionSpace,
    coords: &[[f64; 2]],
    coeffs: &[f64],
    y0: f64,
    x_lo: f64,
    x_hi: f64,
    n_points: usize,
) -> Result<Vec<LineSample>> {
    if n_points < 2 {
        return Err(Error::InvalidParameter("need at least 2 sample points".into()));
    }
    let mut out = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let x = x_lo + (x_hi - x_lo) * i as f64 / (n_points - 1) as f64;
        let u = evaluate_at(mesh, space, coords, coeffs, [x, y0])?;
        out.push(LineSample { x, y: y0, u });
    }
    Ok(out)
}

/// L2 norm squared of the source and its delta_K-weighted counterpart on
/// the given geometry: (||f||^2, sum_K delta_K ||f||^2_K).
#[allow(clippy::too_many_arguments)]
pub fn source_norms(
    ctx: &AssemblyContext,
    coords: &[[f64; 2]],
    velocity: Option<&[[f64; 2]]>,
    problem: &ProblemSpec,
    stab: &StabilizationConfig,
    t: f64,
    dt: f64,
) -> Result<(f64, f64)> {
    let mut plain = 0.0;
    let mut weighted = 0.0;
    for k in 0..ctx.mesh.n_cells() {
        let map = reference_map(&ctx.mesh.cells, coords, k)?;
        let area = map.det / 2.0;
        let delta = cell_delta(ctx, coords, velocity, problem, stab, t, dt, k)?;
        let mut cell = 0.0;
        for q in 0..ctx.quad.len() {
            let [xi, eta] = ctx.quad.xy(q);
            let f = (problem.f)(t, map.map(xi, eta));
            cell += ctx.quad.weights[q] * area * f * f;
        }
        plain += cell;
        weighted += delta * cell;
    }
    Ok((plain, weighted))
}

fn combine(a: &[f64], ca: f64, b: &[f64], cb: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| ca * x + cb * y).collect()
}

fn source_term(dt_over_mu_factor: f64, dt: f64, mu: f64, f_sq: f64) -> f64 {
    if f_sq == 0.0 {
        0.0
    } else if mu <= 0.0 {
        f64::NAN
    } else {
        dt_over_mu_factor * dt / mu * f_sq
    }
}

/// Implicit-Euler per-step energy inequality slack (RHS - LHS):
/// RHS = dt a1 ||u1||^2 + (1 + dt a2) ||u0||^2_prev
///     + (2 dt / mu) ||f||^2 + 2 dt sum_K delta_K ||f||^2_K,
/// LHS = ||u1||^2 + (dt/2) |||u1|||^2, spatial terms on the curr geometry
/// at the new time level.
#[allow(clippy::too_many_arguments)]
pub fn energy_slack_euler(
    ctx: &AssemblyContext,
    frame: &AleFrame,
    problem: &ProblemSpec,
    stab: &StabilizationConfig,
    report: &AleStabilityReport,
    t_prev: f64,
    u_old: &[f64],
    u_new: &[f64],
) -> Result<f64> {
    let dt = frame.dt;
    let t_new = t_prev + dt;
    let curr = frame.coords(Geometry::Curr);
    let prev = frame.coords(Geometry::Prev);
    let w = Some(frame.velocity.as_slice());
    let m_curr = assemble_mass(ctx, curr)?;
    let m_prev = assemble_mass(ctx, prev)?;
    let u1_sq = m_curr.quadratic_form(u_new, u_new)?;
    let u0_sq = m_prev.quadratic_form(u_old, u_old)?;
    let norm_sq = supg_norm_sq(ctx, curr, w, problem, stab, t_new, dt, u_new)?;
    let (f_sq, f_delta_sq) = source_norms(ctx, curr, w, problem, stab, t_new, dt)?;
    let rhs = dt * report.alpha1 * u1_sq
        + (1.0 + dt * report.alpha2) * u0_sq
        + source_term(2.0, dt, stab.mu, f_sq)
        + 2.0 * dt * f_delta_sq;
    Ok(rhs - (u1_sq + 0.5 * dt * norm_sq))
}

/// Crank-Nicolson per-step slack:
/// RHS = dt b1 ||u1||^2 + (1 + dt b2) ||u0||^2_prev
///     + (dt/mu) ||f^{1/2}||^2_mid + 2 dt sum_K delta_K ||f^{1/2}||^2_K,
/// LHS = ||u1||^2 + (dt/4) |||u1 + u0|||^2_mid.
#[allow(clippy::too_many_arguments)]
pub fn energy_slack_cn(
    ctx: &AssemblyContext,
    frame: &AleFrame,
    problem: &ProblemSpec,
    stab: &StabilizationConfig,
    report: &AleStabilityReport,
    t_prev: f64,
    u_old: &[f64],
    u_new: &[f64],
) -> Result<f64> {
    let dt = frame.dt;
    let t_mid = t_prev + 0.5 * dt;
    let curr = frame.coords(Geometry::Curr);
    let prev = frame.coords(Geometry::Prev);
    let mid = frame.coords(Geometry::Mid);
    let w = Some(frame.velocity.as_slice());
    let m_curr = assemble_mass(ctx, curr)?;
    let m_prev = assemble_mass(ctx, prev)?;
    let u1_sq = m_curr.quadratic_form(u_new, u_new)?;
    let u0_sq = m_prev.quadratic_form(u_old, u_old)?;
    let sum = combine(u_new, 1.0, u_old, 1.0);
    let norm_sq = supg_norm_sq(ctx, mid, w, problem, stab, t_mid, dt, &sum)?;
    let (f_sq, f_delta_sq) = source_norms(ctx, mid, w, problem, stab, t_mid, dt)?;
    let rhs = dt * report.beta1 * u1_sq
        + (1.0 + dt * report.beta2) * u0_sq
        + source_term(1.0, dt, stab.mu, f_sq)
        + 2.0 * dt * f_delta_sq;
    Ok(rhs - (u1_sq + 0.25 * dt * norm_sq))
}

/// BDF-2 per-step slack using the grouped quantities
/// ||u1||^2 + ||2u1 - u0||^2 (new level) and ||u0||^2 + ||2u0 - um||^2
/// (old level), with the transport term bounded by
/// dt a2 (||u0||^2 + ||u0 - um||^2) on the prev geometry:
/// RHS = ||u0||^2 + ||2u0 - um||^2 + dt a2 (||u0||^2 + ||u0 - um||^2)
///     + 2 dt a1 ||u1||^2 + (8 dt / mu) ||f||^2 + 8 dt sum_K delta_K ||f||^2_K,
/// LHS = ||u1||^2 + ||2u1 - u0||^2 + dt |||u1|||^2.
#[allow(clippy::too_many_arguments)]
pub fn energy_slack_bdf2(
    ctx: &AssemblyContext,
    frame: &AleFrame,
    problem: &ProblemSpec,
    stab: &StabilizationConfig,
    report: &AleStabilityReport,
    t_prev: f64,
    u_older: &[f64],
    u_old: &[f64],
    u_new: &[f64],
) -> Result<f64> {
    let dt = frame.dt;
    let t_new = t_prev + dt;
    let curr = frame.coords(Geometry::Curr);
    let prev = frame.coords(Geometry::Prev);
    let w = Some(frame.velocity.as_slice());
    let m_curr = assemble_mass(ctx, curr)?;
    let m_prev = assemble_mass(ctx, prev)?;
    let u1_sq = m_curr.quadratic_form(u_new, u_new)?;
    let g_new = combine(u_new, 2.0, u_old, -1.0);
    let g_new_sq = m_curr.quadratic_form(&g_new, &g_new)?;
    let u0_sq = m_prev.quadratic_form(u_old, u_old)?;
    let g_old = combine(u_old, 2.0, u_older, -1.0);
    let g_old_sq = m_prev.quadratic_form(&g_old, &g_old)?;
    let d_old = combine(u_old, 1.0, u_older, -1.0);
    let d_old_sq = m_prev.quadratic_form(&d_old, &d_old)?;
    let norm_sq = supg_norm_sq(ctx, curr, w, problem, stab, t_new, dt, u_new)?;
    let (f_sq, f_delta_sq) = source_norms(ctx, curr, w, problem, stab, t_new, dt)?;
    let rhs = u0_sq
        + g_old_sq
        + dt * report.alpha2 * (u0_sq + d_old_sq)
        + 2.0 * dt * report.alpha1 * u1_sq
        + source_term(8.0, dt, stab.mu, f_sq)
        + 8.0 * dt * f_delta_sq;
    Ok(rhs - (u1_sq + g_new_sq + dt * norm_sq))
}

fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.17e}")
    }
}

/// Writes the per-step time series.
pub fn write_step_csv(path: &Path, records: &[StepRecord]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        f,
        "step,t,u_min,u_max,undershoot,overshoot,l2,supg,alpha1,alpha2,dt_max,energy_slack"
    )?;
    for r in records {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.step,
            fmt(r.t),
            fmt(r.u_min),
            fmt(r.u_max),
            fmt(r.undershoot),
            fmt(r.overshoot),
            fmt(r.l2),
            fmt(r.supg),
            fmt(r.alpha1),
            fmt(r.alpha2),
            fmt(r.dt_max),
            fmt(r.energy_slack)
        )?;
    }
    Ok(())
}

/// Writes a line-probe sample; holes carry u = 0 and in_domain = 0.
pub fn write_line_csv(path: &Path, samples: &[LineSample]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "x,y,u,in_domain")?;
    for s in samples {
        match s.u {
            Some(u) => writeln!(f, "{},{},{},1", fmt(s.x), fmt(s.y), fmt(u))?,
            None => writeln!(f, "{},{},0,0", fmt(s.x), fmt(s.y))?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_square_mesh;
    use crate::space::build_function_space;

    #[test]
    fn extrema_inside_bounds() {
        let (lo, hi, under, over) = extrema_report(&[0.2, 0.5, 0.9], [0.0, 1.0]);
        assert_eq!((lo, hi), (0.2, 0.9));
        assert_eq!((under, over), (0.0, 0.0));
    }

    #[test]
    fn extrema_overshoot_arithmetic() {
        let (_, _, under, over) = extrema_report(&[0.0, 1.08], [0.0, 1.0]);
        assert_eq!(under, 0.0);
        assert!((over - 0.08).abs() < 1e-15);
    }

    #[test]
    fn extrema_shift_invariance() {
        let v = [0.3, -0.1, 1.2, 0.8];
        let (_, _, u1, o1) = extrema_report(&v, [0.0, 1.0]);
        let shifted: Vec<f64> = v.iter().map(|x| x + 5.0).collect();
        let (_, _, u2, o2) = extrema_report(&shifted, [5.0, 6.0]);
        assert!((u1 - u2).abs() < 1e-14);
        assert!((o1 - o2).abs() < 1e-14);
        let mut perm = v.to_vec();
        perm.reverse();
        let (_, _, u3, o3) = extrema_report(&perm, [0.0, 1.0]);
        assert_eq!((u1, o1), (u3, o3));
    }

    #[test]
    fn line_sample_reproduces_linear_field() {
        let mesh = unit_square_mesh(4).unwrap();
        let space = build_function_space(&mesh, 1).unwrap();
        let coeffs = space.interpolate(&mesh.nodes, |p| p[0]);
        let samples =
            line_sample(&mesh, &space, &mesh.nodes, &coeffs, 0.5, 0.0, 1.0, 11).unwrap();
        for s in &samples {
            let u = s.u.expect("inside the square");
            assert!((u - s.x).abs() < 1e-12, "u({}) = {u}", s.x);
        }
    }

    #[test]
    fn line_sample_reports_gaps_outside() {
        let mesh = unit_square_mesh(2).unwrap();
        let space = build_function_space(&mesh, 1).unwrap();
        let coeffs = vec![1.0; space.n_dofs];
        let samples =
            line_sample(&mesh, &space, &mesh.nodes, &coeffs, 0.5, -1.0, 2.0, 31).unwrap();
        assert!(samples.iter().any(|s| s.u.is_none()));
        for s in &samples {
            if s.x >= 0.0 && s.x <= 1.0 {
                assert!((s.u.unwrap() - 1.0).abs() < 1e-12);
            } else if s.x < -1e-9 || s.x > 1.0 + 1e-9 {
                assert!(s.u.is_none());
            }
        }
    }

    #[test]
    fn dof_values_reproduced_at_dof_coordinates() {
        let mesh = unit_square_mesh(3).unwrap();
        let space = build_function_space(&mesh, 2).unwrap();
        let coeffs = space.interpolate(&mesh.nodes, |p| p[0] * p[1] + 0.3 * p[0]);
        let dof_coords = space.dof_coords(&mesh.nodes);
        for (d, p) in dof_coords.iter().enumerate() {
            let u = evaluate_at(&mesh, &space, &mesh.nodes, &coeffs, *p)
                .unwrap()
                .expect("dof inside the mesh");
            assert!((u - coeffs[d]).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_writers_roundtrip_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let rec = StepRecord {
            step: 1,
            t: 0.01,
            u_min: -0.1,
            u_max: 1.05,
            undershoot: 0.1,
            overshoot: 0.05,
            l2: 2.0,
            supg: 3.0,
            alpha1: 0.0,
            alpha2: 0.0,
            dt_max: f64::INFINITY,
            energy_slack: f64::NAN,
        };
        let steps = dir.path().join("steps.csv");
        write_step_csv(&steps, &[rec]).unwrap();
        let text = std::fs::read_to_string(&steps).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "step,t,u_min,u_max,undershoot,overshoot,l2,supg,alpha1,alpha2,dt_max,energy_slack"
        );
        let row = lines.next().unwrap();
        assert_eq!(row.split(',').count(), 12);
        assert!(row.contains("inf") && row.contains("nan"));

        let line = dir.path().join("line.csv");
        let samples = vec![
            LineSample { x: 0.0, y: 0.0, u: Some(1.0) },
            LineSample { x: 1.0, y: 0.0, u: None },
        ];
        write_line_csv(&line, &samples).unwrap();
        let text = std::fs::read_to_string(&line).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows[0], "x,y,u,in_domain");
        assert!(rows[1].ends_with(",1"));
        assert!(rows[2].ends_with(",0,0"));
    }
}
