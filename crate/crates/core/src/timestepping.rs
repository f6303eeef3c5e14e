//! Fully discrete schemes on the moving geometry and the outer time loop.
//!
//! Coefficient vectors are reused across geometries: a nodal coefficient is
//! invariant under the discrete ALE map, so u^n is multiplied against
//! matrices assembled on whichever geometry the scheme prescribes, never
//! re-interpolated.

use crate::ale::{stability_report, AleFrame, Geometry};
use crate::assembly::{
    apply_dirichlet, assemble_mass, assemble_mesh_convection, assemble_rhs, assemble_supg_form,
    dirichlet_values, supg_norm_sq, AssemblyContext,
};
use crate::diagnostics::{
    energy_slack_bdf2, energy_slack_cn, energy_slack_euler, extrema_report, StepRecord,
};
use crate::error::{Error, Result};
use crate::linalg::{solve, SolverConfig};
use crate::mesh::Mesh;
use crate::problem::ProblemSpec;
use crate::space::FunctionSpace;
use crate::stab::StabilizationConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Euler,
    CrankNicolson,
    Bdf2,
}

impl Scheme {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Scheme::Euler),
            "cn" => Ok(Scheme::CrankNicolson),
            "bdf2" => Ok(Scheme::Bdf2),
            other => Err(Error::Config(format!(
                "unknown scheme '{other}' (expected euler, cn or bdf2)"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Euler => "euler",
            Scheme::CrankNicolson => "cn",
            Scheme::Bdf2 => "bdf2",
        }
    }
}

/// Evolving state of the time loop.
#[derive(Debug, Clone)]
pub struct TimeState {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_now: f64,
    pub step_index: usize,
    pub u_curr: Vec<f64>,
    /// Coefficients one level back; kept only by BDF-2 after its first step.
    pub u_prev: Option<Vec<f64>>,
}

impl TimeState {
    pub fn new(scheme: Scheme, dt: f64, u0: Vec<f64>) -> Result<Self> {
        if dt <= 0.0 {
            return Err(Error::NonpositiveDt(dt));
        }
        Ok(TimeState {
            scheme,
            dt,
            t_now: 0.0,
            step_index: 0,
            u_curr: u0,
            u_prev: None,
        })
    }
}

/// One implicit-Euler step. Every operator lives on the curr geometry at
/// the new time level:
/// (M/dt + A_SUPG + W) u1 = M u0 / dt + F.
pub fn step_euler(
    ctx: &AssemblyContext,
    frame: &AleFrame,
    problem: &ProblemSpec,
    stab: Option<&StabilizationConfig>,
    solver: &SolverConfig,
    t_prev: f64,
    u_prev: &[f64],
) -> Result<Vec<f64>> {
    let dt = frame.dt;
    let t_new = t_prev + dt;
    let coords = frame.coords(Geometry::Curr);
    let w = frame.velocity.as_slice();
    let a = assemble_supg_form(ctx, coords, Some(w), problem, stab, t_new, dt)?;
    let conv = assemble_mesh_convection(ctx, coords, w)?;
    let mass = assemble_mass(ctx, coords)?;
    let mut system = a.add(&conv)?.add_scaled(&mass, 1.0 / dt)?;
    let mut rhs = mass.spmv(u_prev)?;
    let load = assemble_rhs(ctx, coords, Some(w), problem, stab, t_new, dt)?;
    for (r, l) in rhs.iter_mut().zip(&load) {
        *r = *r / dt + l;
    }
    let bc = dirichlet_values(ctx.space, coords, problem, t_new);
    apply_dirichlet(&mut system, &mut rhs, &bc);
    let (u, _) = solve(&system, &rhs, solver, Some(u_prev))?;
    Ok(u)
}

/// One modified Crank-Nicolson step. Every term acts on the midpoint
/// geometry at t^{n+1/2}; the spatial operators apply to the average of the
/// two levels:
/// (M_m/dt + S_m/2) u1 = M_m u0 / dt - S_m u0 / 2 + F_m,  S_m = A_m + W_m.
/// Placing the mass difference on the midpoint geometry (rather than the new
/// one) is what keeps the scheme second order on a deforming mesh; the
/// alternatives differ by O(dt) in the mass term.
pub fn step_cn(
    ctx: &AssemblyContext,
    frame: &AleFrame,
    problem: &ProblemSpec,
    stab: Option<&StabilizationConfig>,
    solver: &SolverConfig,
    t_prev: f64,
    u_prev: &[f64],
) -> Result<Vec<f64>> {
    let dt = frame.dt;
    let t_new = t_prev + dt;
    let t_mid = t_prev + 0.5 * dt;
    let curr = frame.coords(Geometry::Curr);
    let mid = frame.coords(Geometry::Mid);
    let w = frame.velocity.as_slice();
    let a = assemble_supg_form(ctx, mid, Some(w), problem, stab, t_mid, dt)?;
    let conv = assemble_mesh_convection(ctx, mid, w)?;
    let spatial = a.add(&conv)?;
    let mass = assemble_mass(ctx, mid)?;
    let mut system = mass.add_scaled(&spatial, 0.5 * dt)?;
    system.scale(1.0 / dt);
    let m_u = mass.spmv(u_prev)?;
    let s_u = spatial.spmv(u_prev)?;
    let load = assemble_rhs(ctx, mid, Some(w), problem, stab, t_mid, dt)?;
    let rhs: Vec<f64> = (0..u_prev.len())
        .map(|i| m_u[i] / dt - 0.5 * s_u[i] + load[i])
        .collect();
    let mut rhs = rhs;
    let bc = dirichlet_values(ctx.space, curr, problem, t_new);
    apply_dirichlet(&mut system, &mut rhs, &bc);
    let (u, _) = solve(&system, &rhs, solver, Some(u_prev))?;
    Ok(u)
}

/// One BDF-2 step on the curr geometry at the new time level:
/// (3/2 M + dt (A_SUPG + W)) u1 = M (2 u0 - 1/2 um) + dt F.
///
/// When the node positions at t^{n-1} are supplied, the mesh velocity for
/// the convection and stabilization terms is the two-step backward
/// difference (3x^{n+1} - 4x^n + x^{n-1}) / (2 dt), which is second order
/// at t^{n+1}; the one-step difference held in the frame is only first
/// order there and would drag the whole scheme down with it.
#[allow(clippy::too_many_arguments)]
pub fn step_bdf2(
    ctx: &AssemblyContext,
    frame: &AleFrame,
    coords_older: Option<&[[f64; 2]]>,
    problem: &ProblemSpec,
    stab: Option<&StabilizationConfig>,
    solver: &SolverConfig,
    t_prev: f64,
    u_prev: &[f64],
    u_older: &[f64],
) -> Result<Vec<f64>> {
    let dt = frame.dt;
    let t_new = t_prev + dt;
    let coords = frame.coords(Geometry::Curr);
    let w_bdf2: Option<Vec<[f64; 2]>> = coords_older.map(|older| {
        frame
            .coords(Geometry::Curr)
            .iter()
            .zip(frame.coords(Geometry::Prev))
            .zip(older)
            .map(|((c, p), o)| {
                [
                    (1.5 * c[0] - 2.0 * p[0] + 0.5 * o[0]) / dt,
                    (1.5 * c[1] - 2.0 * p[1] + 0.5 * o[1]) / dt,
                ]
            })
            .collect()
    });
    let w = w_bdf2.as_deref().unwrap_or(frame.velocity.as_slice());
    let a = assemble_supg_form(ctx, coords, Some(w), problem, stab, t_new, dt)?;
    let conv = assemble_mesh_convection(ctx, coords, w)?;
    let mass = assemble_mass(ctx, coords)?;
    let mut system = mass.add_scaled(&a.add(&conv)?, dt / 1.5)?;
    system.scale(1.5);
    let hist: Vec<f64> = u_prev
        .iter()
        .zip(u_older)
        .map(|(p, q)| 2.0 * p - 0.5 * q)
        .collect();
    let mut rhs = mass.spmv(&hist)?;
    let load = assemble_rhs(ctx, coords, Some(w), problem, stab, t_new, dt)?;
    for (r, l) in rhs.iter_mut().zip(&load) {
        *r += dt * l;
    }
    let bc = dirichlet_values(ctx.space, coords, problem, t_new);
    apply_dirichlet(&mut system, &mut rhs, &bc);
    let (u, _) = solve(&system, &rhs, solver, Some(u_prev))?;
    Ok(u)
}

/// Prescribed mesh motion: node positions as a function of time, always
/// evaluated from the reference configuration.
pub trait MeshMotion: Sync {
    fn coords_at(&self, mesh: &Mesh, t: f64) -> Result<Vec<[f64; 2]>>;
}

/// Fixed-domain motion.
pub struct StationaryMotion;

impl MeshMotion for StationaryMotion {
    fn coords_at(&self, mesh: &Mesh, _t: f64) -> Result<Vec<[f64; 2]>> {
        Ok(mesh.nodes.clone())
    }
}

impl<F> MeshMotion for F
where
    F: Fn(&Mesh, f64) -> Result<Vec<[f64; 2]>> + Sync,
{
    fn coords_at(&self, mesh: &Mesh, t: f64) -> Result<Vec<[f64; 2]>> {
        self(mesh, t)
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    pub solver: SolverConfig,
    /// Physical bounds used for the under/overshoot columns.
    pub bounds: [f64; 2],
    /// Snapshot cadence in steps; 0 disables snapshots.
    pub output_every: usize,
}

/// Everything a snapshot consumer needs for one output instant.
pub struct Snapshot<'a> {
    pub step: usize,
    pub t: f64,
    pub coords: &'a [[f64; 2]],
    pub velocity: &'a [[f64; 2]],
    pub u: &'a [f64],
}

pub struct RunResult {
    pub records: Vec<StepRecord>,
    pub u: Vec<f64>,
    pub coords: Vec<[f64; 2]>,
    /// Steps on which dt exceeded the active scheme's stability bound.
    pub dt_warnings: usize,
}

/// Runs the full time loop: move the mesh, build the step frame, report
/// stability quantities, advance, record diagnostics. dt violations of the
/// stability bound are counted, not fatal.
#[allow(clippy::too_many_arguments)]
pub fn run(
    mesh: &Mesh,
    space: &FunctionSpace,
    problem: &ProblemSpec,
    motion: &dyn MeshMotion,
    stab: Option<&StabilizationConfig>,
    options: &RunOptions,
    mut on_snapshot: Option<&mut dyn FnMut(&Snapshot) -> Result<()>>,
) -> Result<RunResult> {
    if options.dt <= 0.0 {
        return Err(Error::NonpositiveDt(options.dt));
    }
    if options.t_end < options.dt {
        return Err(Error::Config("t_end must be at least dt".into()));
    }
    let ctx = AssemblyContext::new(mesh, space)?;
    let n_steps = (options.t_end / options.dt).round().max(1.0) as usize;
    let dt = options.dt;
    // the monitor needs a mu > 0; fall back to the configured stab value
    let monitor_stab = stab.copied().unwrap_or_else(|| StabilizationConfig {
        delta0: 0.0,
        mu: 0.0,
        c_inv: 20.0,
        dt_cap_enabled: true,
    });

    let coords0 = motion.coords_at(mesh, 0.0)?;
    let mut state = TimeState::new(
        options.scheme,
        dt,
        space.interpolate(&coords0, |p| (problem.u0)(p)),
    )?;
    let mut coords_prev = coords0;
    // node positions at t^{n-1}, for the BDF-2 mesh velocity
    let mut coords_older: Option<Vec<[f64; 2]>> = None;
    let mut records = Vec::with_capacity(n_steps);
    let mut dt_warnings = 0;

    if let Some(cb) = on_snapshot.as_deref_mut() {
        let zero_w = vec![[0.0, 0.0]; mesh.n_nodes()];
        cb(&Snapshot {
            step: 0,
            t: 0.0,
            coords: &coords_prev,
            velocity: &zero_w,
            u: &state.u_curr,
        })?;
    }

    for step in 1..=n_steps {
        let t_prev = (step - 1) as f64 * dt;
        let t_new = step as f64 * dt;
        let coords_curr = motion.coords_at(mesh, t_new)?;
        mesh.audit_on(&coords_curr)?;
        let frame = AleFrame::new(coords_prev.clone(), coords_curr, dt)?;
        let report = stability_report(mesh, &frame)?;
        let dt_max = match options.scheme {
            Scheme::Euler => report.dt_max_euler,
            Scheme::CrankNicolson => report.dt_max_cn,
            Scheme::Bdf2 => report.dt_max_bdf2,
        };
        if dt > dt_max {
            dt_warnings += 1;
        }

        let u_old = state.u_curr.clone();
        let u_new = match options.scheme {
            Scheme::Euler => {
                step_euler(&ctx, &frame, problem, stab, &options.solver, t_prev, &u_old)?
            }
            Scheme::CrankNicolson => {
                step_cn(&ctx, &frame, problem, stab, &options.solver, t_prev, &u_old)?
            }
            Scheme::Bdf2 => match &state.u_prev {
                // startup: one Crank-Nicolson step keeps second order
                None => step_cn(&ctx, &frame, problem, stab, &options.solver, t_prev, &u_old)?,
                Some(u_older) => step_bdf2(
                    &ctx,
                    &frame,
                    coords_older.as_deref(),
                    problem,
                    stab,
                    &options.solver,
                    t_prev,
                    &u_old,
                    u_older,
                )?,
            },
        };

        let energy_slack = match options.scheme {
            Scheme::Euler => energy_slack_euler(
                &ctx, &frame, problem, &monitor_stab, &report, t_prev, &u_old, &u_new,
            )?,
            Scheme::CrankNicolson => energy_slack_cn(
                &ctx, &frame, problem, &monitor_stab, &report, t_prev, &u_old, &u_new,
            )?,
            Scheme::Bdf2 => match &state.u_prev {
                None => f64::NAN,
                Some(u_older) => energy_slack_bdf2(
                    &ctx,
                    &frame,
                    problem,
                    &monitor_stab,
                    &report,
                    t_prev,
                    u_older,
                    &u_old,
                    &u_new,
                )?,
            },
        };

        let curr = frame.coords(Geometry::Curr);
        let mass = assemble_mass(&ctx, curr)?;
        let l2 = mass.quadratic_form(&u_new, &u_new)?.max(0.0).sqrt();
        let supg = supg_norm_sq(
            &ctx,
            curr,
            Some(&frame.velocity),
            problem,
            &monitor_stab,
            t_new,
            dt,
            &u_new,
        )?
        .max(0.0)
        .sqrt();
        let (u_min, u_max, undershoot, overshoot) = extrema_report(&u_new, options.bounds);
        records.push(StepRecord {
            step,
            t: t_new,
            u_min,
            u_max,
            undershoot,
            overshoot,
            l2,
            supg,
            alpha1: report.alpha1,
            alpha2: report.alpha2,
            dt_max,
            energy_slack,
        });

        if options.output_every > 0 && (step % options.output_every == 0 || step == n_steps) {
            if let Some(cb) = on_snapshot.as_deref_mut() {
                cb(&Snapshot {
                    step,
                    t: t_new,
                    coords: curr,
                    velocity: &frame.velocity,
                    u: &u_new,
                })?;
            }
        }

        state.u_prev = if options.scheme == Scheme::Bdf2 {
            Some(u_old)
        } else {
            None
        };
        state.u_curr = u_new;
        state.t_now = t_new;
        state.step_index = step;
        coords_older = Some(std::mem::replace(&mut coords_prev, frame.coords_curr));
    }

    Ok(RunResult {
        records,
        u: state.u_curr,
        coords: coords_prev,
        dt_warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ale::AleFrame;
    use crate::linalg::SolveMethod;
    use crate::mesh::{retag_all, unit_square_mesh, BoundaryTag};
    use crate::space::build_function_space;
    use std::sync::Arc;

    fn solver() -> SolverConfig {
        SolverConfig {
            method: SolveMethod::DirectSmall,
            ..SolverConfig::default()
        }
    }

    fn wobble(mesh: &Mesh, t: f64) -> Result<Vec<[f64; 2]>> {
        Ok(mesh
            .nodes
            .iter()
            .map(|p| {
                let s = 0.05
                    * (2.0 * std::f64::consts::PI * t).sin()
                    * (std::f64::consts::PI * p[0]).sin()
                    * (std::f64::consts::PI * p[1]).sin();
                [p[0] + s, p[1] + s]
            })
            .collect())
    }

    #[test]
    fn constants_preserved_by_all_schemes_under_motion() {
        let mut mesh = unit_square_mesh(4).unwrap();
        retag_all(&mut mesh, BoundaryTag::Neumann);
        let space = build_function_space(&mesh, 2).unwrap();
        let mut problem = ProblemSpec::constant(1e-3, [1.0, 0.5], 0.0, 0.0);
        problem.u0 = Arc::new(|_| 1.0);
        let stab = StabilizationConfig { delta0: 1.0, mu: 0.0, c_inv: 20.0, dt_cap_enabled: true };
        for scheme in [Scheme::Euler, Scheme::CrankNicolson, Scheme::Bdf2] {
            let options = RunOptions {
                scheme,
                dt: 0.02,
                t_end: 0.5,
                solver: solver(),
                bounds: [0.0, 1.0],
                output_every: 0,
            };
            let out = run(&mesh, &space, &problem, &wobble, Some(&stab), &options, None).unwrap();
            let dev = out
                .u
                .iter()
                .map(|v| (v - 1.0).abs())
                .fold(0.0f64, f64::max);
            assert!(dev <= 1e-11, "{scheme:?} drifted by {dev:e}");
        }
    }

    #[test]
    fn cn_amplification_factor_scalar_decay() {
        // constant mode with pure Neumann reduces to du/dt = -c u;
        // compare against (1 - c dt / 2) / (1 + c dt / 2)
        let lambda = 3.0;
        let problem = ProblemSpec::constant(1e-14, [0.0, 0.0], lambda, 0.0);
        let dt = 0.1;
        let mut mesh2 = unit_square_mesh(1).unwrap();
        retag_all(&mut mesh2, BoundaryTag::Neumann);
        let space2 = build_function_space(&mesh2, 1).unwrap();
        let ctx2 = AssemblyContext::new(&mesh2, &space2).unwrap();
        let frame = AleFrame::stationary(mesh2.nodes.clone(), dt).unwrap();
        let u0 = vec![1.0; space2.n_dofs];
        let u1 = step_cn(&ctx2, &frame, &problem, None, &solver(), 0.0, &u0).unwrap();
        let amp = (1.0 - lambda * dt / 2.0) / (1.0 + lambda * dt / 2.0);
        for v in &u1 {
            assert!((v - amp).abs() < 1e-12, "{v} vs {amp}");
        }
        // Euler for contrast: 1 / (1 + c dt)
        let u1e = step_euler(&ctx2, &frame, &problem, None, &solver(), 0.0, &u0).unwrap();
        let ampe = 1.0 / (1.0 + lambda * dt);
        for v in &u1e {
            assert!((v - ampe).abs() < 1e-12);
        }
    }

    #[test]
    fn bdf2_characteristic_root_scalar_decay() {
        // 3/2 u2 - 2 u1 + 1/2 u0 = -c dt u2 with exact lower history
        let mut mesh = unit_square_mesh(1).unwrap();
        retag_all(&mut mesh, BoundaryTag::Neumann);
        let space = build_function_space(&mesh, 1).unwrap();
        let ctx = AssemblyContext::new(&mesh, &space).unwrap();
        let lambda = 2.0;
        let problem = ProblemSpec::constant(1e-14, [0.0, 0.0], lambda, 0.0);
        let dt = 0.05;
        let frame = AleFrame::stationary(mesh.nodes.clone(), dt).unwrap();
        let a = 0.7;
        let u_older = vec![1.0; space.n_dofs];
        let u_prev = vec![a; space.n_dofs];
        let u =
            step_bdf2(&ctx, &frame, None, &problem, None, &solver(), dt, &u_prev, &u_older).unwrap();
        let expect = (2.0 * a - 0.5) / (1.5 + lambda * dt);
        for v in &u {
            assert!((v - expect).abs() < 1e-12, "{v} vs {expect}");
        }
    }

    #[test]
    fn dirichlet_values_exact_after_each_step() {
        let mesh = unit_square_mesh(3).unwrap();
        let space = build_function_space(&mesh, 2).unwrap();
        let mut problem = ProblemSpec::constant(0.1, [1.0, 0.0], 1.0, 0.0);
        problem.dirichlet = Arc::new(|_, t, x| t + x[0]);
        let options = RunOptions {
            scheme: Scheme::Euler,
            dt: 0.1,
            t_end: 0.3,
            solver: solver(),
            bounds: [0.0, 1.0],
            output_every: 0,
        };
        let out = run(
            &mesh,
            &space,
            &problem,
            &StationaryMotion,
            None,
            &options,
            None,
        )
        .unwrap();
        let dof_coords = space.dof_coords(&mesh.nodes);
        for d in 0..space.n_dofs {
            if space.is_dirichlet(d) {
                let expect = 0.3 + dof_coords[d][0];
                assert!((out.u[d] - expect).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn zero_motion_equals_stationary_run_bitwise() {
        let mesh = unit_square_mesh(3).unwrap();
        let space = build_function_space(&mesh, 2).unwrap();
        let mut problem = ProblemSpec::constant(0.05, [1.0, 0.3], 1.0, 1.0);
        problem.u0 = Arc::new(|p| (p[0] * p[1]).sin());
        let stab = StabilizationConfig { delta0: 1.0, mu: 1.0, c_inv: 20.0, dt_cap_enabled: true };
        let options = RunOptions {
            scheme: Scheme::CrankNicolson,
            dt: 0.05,
            t_end: 0.25,
            solver: solver(),
            bounds: [0.0, 1.0],
            output_every: 0,
        };
        let zero_motion =
            |mesh: &Mesh, _t: f64| -> Result<Vec<[f64; 2]>> { Ok(mesh.nodes.clone()) };
        let a = run(&mesh, &space, &problem, &StationaryMotion, Some(&stab), &options, None)
            .unwrap();
        let b = run(&mesh, &space, &problem, &zero_motion, Some(&stab), &options, None).unwrap();
        assert_eq!(a.u, b.u);
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.l2.to_bits(), rb.l2.to_bits());
            assert_eq!(ra.energy_slack.to_bits(), rb.energy_slack.to_bits());
        }
    }

    #[test]
    fn single_step_run() {
        let mesh = unit_square_mesh(2).unwrap();
        let space = build_function_space(&mesh, 1).unwrap();
        let problem = ProblemSpec::constant(1.0, [0.0, 0.0], 0.0, 1.0);
        let options = RunOptions {
            scheme: Scheme::Euler,
            dt: 0.1,
            t_end: 0.1,
            solver: solver(),
            bounds: [0.0, 1.0],
            output_every: 1,
        };
        let mut snapshots = 0;
        let mut cb = |_s: &Snapshot| -> Result<()> {
            snapshots += 1;
            Ok(())
        };
        let out = run(
            &mesh,
            &space,
            &problem,
            &StationaryMotion,
            None,
            &options,
            Some(&mut cb),
        )
        .unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(snapshots, 2); // initial state plus the one step
        assert_eq!(out.records[0].step, 1);
        assert!(out.records[0].dt_max.is_infinite());
    }

    #[test]
    fn euler_energy_monitor_nonnegative_on_stationary_mesh() {
        let mesh = unit_square_mesh(3).unwrap();
        let space = build_function_space(&mesh, 2).unwrap();
        let mut problem = ProblemSpec::constant(0.01, [2.0, 1.0], 1.5, 1.0);
        problem.u0 = Arc::new(|p| (3.0 * p[0]).sin() * p[1]);
        let stab = StabilizationConfig { delta0: 1.0, mu: 1.5, c_inv: 20.0, dt_cap_enabled: true };
        let options = RunOptions {
            scheme: Scheme::Euler,
            dt: 0.01,
            t_end: 0.3,
            solver: solver(),
            bounds: [0.0, 1.0],
            output_every: 0,
        };
        let out = run(&mesh, &space, &problem, &StationaryMotion, Some(&stab), &options, None)
            .unwrap();
        for r in &out.records {
            assert!(r.energy_slack >= -1e-9, "step {} slack {}", r.step, r.energy_slack);
        }
        assert_eq!(out.dt_warnings, 0);
    }

    #[test]
    fn rejects_bad_time_parameters() {
        let mesh = unit_square_mesh(2).unwrap();
        let space = build_function_space(&mesh, 1).unwrap();
        let problem = ProblemSpec::constant(1.0, [0.0, 0.0], 0.0, 0.0);
        let mut options = RunOptions {
            scheme: Scheme::Euler,
            dt: 0.0,
            t_end: 1.0,
            solver: solver(),
            bounds: [0.0, 1.0],
            output_every: 0,
        };
        assert!(run(&mesh, &space, &problem, &StationaryMotion, None, &options, None).is_err());
        options.dt = 0.5;
        options.t_end = 0.1;
        assert!(run(&mesh, &space, &problem, &StationaryMotion, None, &options, None).is_err());
    }
}
