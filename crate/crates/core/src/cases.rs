//! Built-in problems: the oscillating-beam channel benchmark and
//! manufactured-solution verification cases.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::ale::{elastic_update, ElasticParams};
use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Mesh};
use crate::meshgen::{point_in_polygon, triangulate_domain, DomainSpec};
use crate::problem::ProblemSpec;
use crate::timestepping::MeshMotion;

pub const CHANNEL_X: [f64; 2] = [-5.0, 18.0];
pub const CHANNEL_Y: [f64; 2] = [-5.0, 5.0];
pub const ARM_X: [f64; 2] = [0.5, 4.5];
pub const ARM_HALF_WIDTH: f64 = 0.03;
pub const TIP_CENTER: [f64; 2] = [4.5, 0.0];
pub const TIP_RADIUS: f64 = 0.03;
/// The analytic fluid motion decays to zero at this distance from the beam.
pub const MOTION_CUTOFF_RADIUS: f64 = 1.5;

/// Mesh grading and tip resolution for the channel-with-beam mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamGeometry {
    /// Target spacing near the beam.
    pub near_h: f64,
    /// Target spacing at the channel walls.
    pub far_h: f64,
    /// Polygon segments on the semicircular tip.
    pub n_arc: usize,
}

impl Default for BeamGeometry {
    fn default() -> Self {
        BeamGeometry {
            near_h: 0.04,
            far_h: 0.8,
            n_arc: 12,
        }
    }
}

/// Prescribed beam displacement at a reference point. The square block
/// (x <= 0.5) is the fixed cantilever root and does not move; past it the
/// closed form d = 0.75 (x - 0.5)^2, theta = atan(y / (x - 0.5)) applies
/// with the pivot at x = 0.5. The sinusoidal factor sin(2 pi t / 5) scales
/// the whole displacement, so the map is the identity whenever it vanishes.
pub fn beam_displacement(y: [f64; 2], t: f64) -> [f64; 2] {
    let dx = y[0] - 0.5;
    if dx <= 0.0 {
        return [0.0, 0.0];
    }
    let s = (2.0 * PI * t / 5.0).sin();
    let d = 0.75 * dx * dx;
    let tan_theta = y[1] / dx;
    let sin_theta = y[1] / (dx * dx + y[1] * y[1]).sqrt();
    [
        0.05 * s * (0.25 * d * tan_theta - y[1] * sin_theta),
        0.05 * s * d,
    ]
}

/// Physical position of a beam reference point at time t.
pub fn beam_map(y: [f64; 2], t: f64) -> [f64; 2] {
    let d = beam_displacement(y, t);
    [y[0] + d[0], y[1] + d[1]]
}

/// Distance from a point to the (undeformed) beam solid.
pub fn distance_to_beam(p: [f64; 2]) -> f64 {
    closest_beam_point(p).1
}

/// Closest point on the (undeformed) beam solid and the distance to it.
/// Points on the beam surface map to themselves.
pub fn closest_beam_point(p: [f64; 2]) -> ([f64; 2], f64) {
    let on_rect = |x: [f64; 2], y: [f64; 2]| {
        [p[0].clamp(x[0], x[1]), p[1].clamp(y[0], y[1])]
    };
    let mut best = ([0.0; 2], f64::INFINITY);
    for q in [
        on_rect([-0.5, 0.5], [-0.5, 0.5]),
        on_rect(ARM_X, [-ARM_HALF_WIDTH, ARM_HALF_WIDTH]),
    ] {
        let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        if d < best.1 {
            best = (q, d);
        }
    }
    let r = ((p[0] - TIP_CENTER[0]).powi(2) + (p[1] - TIP_CENTER[1]).powi(2)).sqrt();
    let (q_tip, d_tip) = if r <= TIP_RADIUS {
        (p, 0.0)
    } else {
        let q = [
            TIP_CENTER[0] + TIP_RADIUS * (p[0] - TIP_CENTER[0]) / r,
            TIP_CENTER[1] + TIP_RADIUS * (p[1] - TIP_CENTER[1]) / r,
        ];
        (q, r - TIP_RADIUS)
    };
    if d_tip < best.1 {
        best = (q_tip, d_tip);
    }
    best
}

/// C1 cutoff: 1 on the beam, 0 beyond MOTION_CUTOFF_RADIUS.
pub fn motion_cutoff(dist: f64) -> f64 {
    let s = (dist / MOTION_CUTOFF_RADIUS).clamp(0.0, 1.0);
    1.0 - 3.0 * s * s + 2.0 * s * s * s
}

/// How fluid nodes follow the prescribed beam motion.
pub enum BeamMotionMode {
    /// Analytic displacement damped by the radial cutoff.
    AnalyticCutoff,
    /// Solid boundary moves analytically; interior follows a linear
    /// elasticity solve from the reference configuration.
    Elastic(ElasticParams),
}

pub struct BeamMotion {
    pub mode: BeamMotionMode,
}

impl MeshMotion for BeamMotion {
    fn coords_at(&self, mesh: &Mesh, t: f64) -> Result<Vec<[f64; 2]>> {
        match &self.mode {
            // Fluid nodes follow the displacement of the nearest beam
            // surface point, damped by the radial cutoff. Evaluating the
            // closed form off the beam is ill posed near the clamped root
            // (the cross-section angle diverges as x -> 0.5+).
            BeamMotionMode::AnalyticCutoff => Ok(mesh
                .nodes
                .iter()
                .map(|&y| {
                    let (q, dist) = closest_beam_point(y);
                    let d = beam_displacement(q, t);
                    let psi = motion_cutoff(dist);
                    [y[0] + psi * d[0], y[1] + psi * d[1]]
                })
                .collect()),
            BeamMotionMode::Elastic(params) => {
                let mut solid: HashMap<usize, [f64; 2]> = HashMap::new();
                for e in &mesh.boundary_edges {
                    if e.tag == BoundaryTag::Solid {
                        for &n in &e.nodes {
                            solid.insert(n, beam_displacement(mesh.nodes[n], t));
                        }
                    }
                }
                let disp = elastic_update(mesh, &mesh.nodes, &solid, params)?;
                Ok(mesh
                    .nodes
                    .iter()
                    .zip(&disp)
                    .map(|(y, d)| [y[0] + d[0], y[1] + d[1]])
                    .collect())
            }
        }
    }
}

fn smooth01(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * (3.0 - 2.0 * s)
}

/// Spacing of the polygonalized tip arc; the finest scale on the boundary.
fn tip_arc_h(g: &BeamGeometry) -> f64 {
    (PI * TIP_RADIUS / g.n_arc as f64).min(g.near_h)
}

fn target_h(p: [f64; 2], g: &BeamGeometry) -> f64 {
    let dist = distance_to_beam(p);
    let base = g.near_h + (g.far_h - g.near_h) * smooth01((dist - 0.3) / 2.7);
    // grade down to the arc spacing near the tip, otherwise cells adjacent
    // to the arc are slivers that invert under the beam motion
    let dist_tip = (((p[0] - TIP_CENTER[0]).powi(2) + (p[1] - TIP_CENTER[1]).powi(2)).sqrt()
        - TIP_RADIUS)
        .max(0.0);
    if dist_tip < 0.25 {
        let th = tip_arc_h(g);
        base.min(th + (g.near_h - th) * smooth01(dist_tip / 0.25))
    } else {
        base
    }
}

fn sample_segment(a: [f64; 2], b: [f64; 2], h: f64, out: &mut Vec<[f64; 2]>) {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let n = (len / h).ceil().max(1.0) as usize;
    for i in 0..n {
        let s = i as f64 / n as f64;
        out.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
    }
}

/// Beam outline as a closed loop, tip polygonalized with n_arc segments.
pub fn beam_loop(g: &BeamGeometry) -> Vec<[f64; 2]> {
    let h = g.near_h;
    let w = ARM_HALF_WIDTH;
    let mut lp = Vec::new();
    sample_segment([0.5, w], [ARM_X[1], w], h, &mut lp);
    for i in 0..g.n_arc {
        let phi = PI / 2.0 - PI * i as f64 / g.n_arc as f64;
        lp.push([
            TIP_CENTER[0] + TIP_RADIUS * phi.cos(),
            TIP_CENTER[1] + TIP_RADIUS * phi.sin(),
        ]);
    }
    sample_segment([ARM_X[1], -w], [0.5, -w], h, &mut lp);
    sample_segment([0.5, -w], [0.5, -0.5], h, &mut lp);
    sample_segment([0.5, -0.5], [-0.5, -0.5], h, &mut lp);
    sample_segment([-0.5, -0.5], [-0.5, 0.5], h, &mut lp);
    sample_segment([-0.5, 0.5], [0.5, 0.5], h, &mut lp);
    sample_segment([0.5, 0.5], [0.5, w], h, &mut lp);
    lp
}

fn channel_loop(g: &BeamGeometry) -> Vec<[f64; 2]> {
    let h = g.far_h;
    let [x0, x1] = CHANNEL_X;
    let [y0, y1] = CHANNEL_Y;
    let mut lp = Vec::new();
    sample_segment([x0, y0], [x1, y0], h, &mut lp);
    sample_segment([x1, y0], [x1, y1], h, &mut lp);
    sample_segment([x1, y1], [x0, y1], h, &mut lp);
    sample_segment([x0, y1], [x0, y0], h, &mut lp);
    lp
}

fn seed_rng(i: i64, j: i64, level: usize) -> f64 {
    let mut s = (i as u64)
        .wrapping_mul(0x9e3779b97f4a7c15)
        .wrapping_add((j as u64).wrapping_mul(0xc2b2ae3d27d4eb4f))
        .wrapping_add(level as u64);
    s ^= s >> 30;
    s = s.wrapping_mul(0xbf58476d1ce4e5b9);
    s ^= s >> 27;
    ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
}

fn graded_seeds(g: &BeamGeometry) -> Vec<[f64; 2]> {
    let h_min = tip_arc_h(g);
    let mut levels = Vec::new();
    let mut s = g.far_h;
    loop {
        levels.push(s);
        if s <= h_min {
            break;
        }
        s = (s / 2.0).max(h_min);
    }
    let [x0, x1] = CHANNEL_X;
    let [y0, y1] = CHANNEL_Y;
    let mut seeds = Vec::new();
    for (lvl, &s) in levels.iter().enumerate() {
        let upper = if lvl == 0 { f64::INFINITY } else { levels[lvl - 1] };
        let ni = ((x1 - x0) / s).ceil() as i64;
        let nj = ((y1 - y0) / s).ceil() as i64;
        for i in 0..ni {
            for j in 0..nj {
                let jx = 0.25 * s * seed_rng(i, j, 2 * lvl);
                let jy = 0.25 * s * seed_rng(i, j, 2 * lvl + 1);
                let p = [
                    x0 + (i as f64 + 0.5) * s + jx,
                    y0 + (j as f64 + 0.5) * s + jy,
                ];
                if p[0] <= x0 || p[0] >= x1 || p[1] <= y0 || p[1] >= y1 {
                    continue;
                }
                let h = target_h(p, g);
                let in_band = if lvl == 0 { h >= s } else { h >= s && h < upper };
                if !in_band {
                    continue;
                }
                if distance_to_beam(p) < 0.5 * h {
                    continue;
                }
                seeds.push(p);
            }
        }
    }
    seeds
}

/// Graded boundary-conforming triangulation of the channel minus the beam.
pub fn generate_beam_mesh(g: &BeamGeometry) -> Result<Mesh> {
    if g.n_arc < 3 {
        return Err(Error::MeshGeneration(format!(
            "n_arc = {} under-resolves the tip (need >= 3)",
            g.n_arc
        )));
    }
    if g.near_h <= 0.0 || g.far_h <= g.near_h {
        return Err(Error::MeshGeneration(
            "grading requires 0 < near_h < far_h".into(),
        ));
    }
    let beam = beam_loop(g);
    let channel = channel_loop(g);
    let beam_for_inside = beam.clone();
    let [x0, x1] = CHANNEL_X;
    let [y0, y1] = CHANNEL_Y;
    let spec = DomainSpec {
        loops: vec![channel, beam],
        interior: graded_seeds(g),
        inside: Box::new(move |p| {
            p[0] > x0
                && p[0] < x1
                && p[1] > y0
                && p[1] < y1
                && !point_in_polygon(p, &beam_for_inside)
        }),
        tag: Box::new(move |mid| {
            let on_wall = (mid[0] - x0).abs() < 1e-6
                || (mid[0] - x1).abs() < 1e-6
                || (mid[1] - y0).abs() < 1e-6
                || (mid[1] - y1).abs() < 1e-6;
            if (mid[0] - x1).abs() < 1e-6 {
                BoundaryTag::Neumann
            } else if on_wall {
                BoundaryTag::Dirichlet
            } else {
                BoundaryTag::Solid
            }
        }),
        clearance: 0.7,
    };
    triangulate_domain(&spec)
}

/// Channel benchmark data: convection (1, 0), vanishing diffusion, hot beam.
pub fn benchmark_problem() -> ProblemSpec {
    ProblemSpec {
        eps: 1e-6,
        b: Arc::new(|_, _| [1.0, 0.0]),
        div_b: Arc::new(|_, _| 0.0),
        c: Arc::new(|_, _| 0.0),
        f: Arc::new(|_, _| 0.0),
        u0: Arc::new(|_| 0.0),
        dirichlet: Arc::new(|tag, _, _| match tag {
            BoundaryTag::Solid => 1.0,
            _ => 0.0,
        }),
    }
}

pub type ExactFn = Arc<dyn Fn(f64, [f64; 2]) -> f64 + Send + Sync>;

/// A problem with a known exact solution for convergence studies.
pub struct ManufacturedCase {
    pub problem: ProblemSpec,
    pub exact: ExactFn,
}

/// Exact solution sin(pi x1) sin(pi x2) e^{-t} on the unit square whose
/// interior moves as x(Y, t) = Y + 0.05 sin(2 pi t) sin(pi Y1) sin(pi Y2)
/// while the boundary stays fixed. The source closes the equation
/// u_t - eps Lap u + b.grad u + c u = f in the fixed frame.
pub fn moving_square_case(eps: f64, b: [f64; 2], c: f64) -> ManufacturedCase {
    let exact: ExactFn =
        Arc::new(|t, x| (PI * x[0]).sin() * (PI * x[1]).sin() * (-t).exp());
    let f = {
        let exact = exact.clone();
        move |t: f64, x: [f64; 2]| {
            let u = exact(t, x);
            let gx = PI * (PI * x[0]).cos() * (PI * x[1]).sin() * (-t).exp();
            let gy = PI * (PI * x[0]).sin() * (PI * x[1]).cos() * (-t).exp();
            (-1.0 + 2.0 * PI * PI * eps + c) * u + b[0] * gx + b[1] * gy
        }
    };
    let dirichlet = {
        let exact = exact.clone();
        move |_tag: BoundaryTag, t: f64, x: [f64; 2]| exact(t, x)
    };
    let u0 = {
        let exact = exact.clone();
        move |x: [f64; 2]| exact(0.0, x)
    };
    ManufacturedCase {
        problem: ProblemSpec {
            eps,
            b: Arc::new(move |_, _| b),
            div_b: Arc::new(|_, _| 0.0),
            c: Arc::new(move |_, _| c),
            f: Arc::new(f),
            u0: Arc::new(u0),
            dirichlet: Arc::new(dirichlet),
        },
        exact,
    }
}

/// Interior motion of the moving-square case.
pub fn moving_square_motion() -> impl Fn(&Mesh, f64) -> Result<Vec<[f64; 2]>> + Sync {
    |mesh: &Mesh, t: f64| {
        Ok(mesh
            .nodes
            .iter()
            .map(|&y| {
                let s = 0.05 * (2.0 * PI * t).sin() * (PI * y[0]).sin() * (PI * y[1]).sin();
                [y[0] + s, y[1] + s]
            })
            .collect())
    }
}

/// Steady diffusion-dominated case with exact solution
/// sin(pi x1) sin(pi x2) for spatial-order studies.
pub fn steady_case(eps: f64, b: [f64; 2], c: f64) -> ManufacturedCase {
    let exact: ExactFn = Arc::new(|_t, x| (PI * x[0]).sin() * (PI * x[1]).sin());
    let f = move |_t: f64, x: [f64; 2]| {
        let u = (PI * x[0]).sin() * (PI * x[1]).sin();
        let gx = PI * (PI * x[0]).cos() * (PI * x[1]).sin();
        let gy = PI * (PI * x[0]).sin() * (PI * x[1]).cos();
        (2.0 * PI * PI * eps + c) * u + b[0] * gx + b[1] * gy
    };
    ManufacturedCase {
        problem: ProblemSpec {
            eps,
            b: Arc::new(move |_, _| b),
            div_b: Arc::new(|_, _| 0.0),
            c: Arc::new(move |_, _| c),
            f: Arc::new(f),
            u0: Arc::new(|_| 0.0),
            dirichlet: Arc::new(|_, _, _| 0.0),
        },
        exact,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beam_map_is_identity_at_rest_times() {
        for t in [0.0, 2.5, 5.0] {
            for y in [[4.5, 0.0], [2.0, 0.03], [0.9, -0.03], [-0.2, 0.4]] {
                let x = beam_map(y, t);
                assert!((x[0] - y[0]).abs() <= 1e-14);
                assert!((x[1] - y[1]).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn beam_map_tip_at_peak() {
        let x = beam_map([4.5, 0.0], 1.25);
        assert!((x[0] - 4.5).abs() < 1e-14);
        assert!((x[1] - 0.6).abs() < 1e-14);
    }

    #[test]
    fn beam_map_arm_edge_at_peak() {
        // y = (4.5, 0.03): d = 0.75 * 16, theta = atan(0.03 / 4)
        let y = [4.5, 0.03];
        let d = 0.75 * 16.0;
        let theta = (0.03f64 / 4.0).atan();
        let expect = [
            4.5 + 0.05 * (0.25 * d * theta.tan() - 0.03 * theta.sin()),
            0.03 + 0.05 * d,
        ];
        let x = beam_map(y, 1.25);
        assert!((x[0] - expect[0]).abs() < 1e-13, "{} vs {}", x[0], expect[0]);
        assert!((x[1] - expect[1]).abs() < 1e-13);
        assert!((x[1] - 0.63).abs() < 1e-13);
    }

    #[test]
    fn beam_map_periodicity() {
        for y in [[3.0, 0.03], [4.5, -0.03], [1.0, 0.0]] {
            for t in [0.3, 1.7, 2.2] {
                let a = beam_map(y, t);
                let b = beam_map(y, t + 5.0);
                assert!((a[0] - b[0]).abs() < 1e-12);
                assert!((a[1] - b[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn square_block_is_clamped() {
        let x = beam_map([0.2, 0.4], 1.25);
        assert_eq!(x, [0.2, 0.4]);
        let x = beam_map([0.5, -0.5], 1.0);
        assert_eq!(x, [0.5, -0.5]);
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(motion_cutoff(0.0), 1.0);
        assert_eq!(motion_cutoff(MOTION_CUTOFF_RADIUS), 0.0);
        assert_eq!(motion_cutoff(10.0), 0.0);
        let mid = motion_cutoff(MOTION_CUTOFF_RADIUS / 2.0);
        assert!((mid - 0.5).abs() < 1e-14);
        // C1 at the far end: slope vanishes
        let h = 1e-6;
        let slope = (motion_cutoff(MOTION_CUTOFF_RADIUS) - motion_cutoff(MOTION_CUTOFF_RADIUS - h)) / h;
        assert!(slope.abs() < 1e-5);
    }

    #[test]
    fn distance_to_beam_samples() {
        assert_eq!(distance_to_beam([0.0, 0.0]), 0.0);
        assert_eq!(distance_to_beam([2.0, 0.01]), 0.0);
        assert!((distance_to_beam([2.0, 0.53]) - 0.5).abs() < 1e-14);
        assert!((distance_to_beam([4.53 + 0.1, 0.0]) - 0.1).abs() < 1e-12);
        assert!((distance_to_beam([-1.5, 0.0]) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn arc_points_on_radius() {
        let g = BeamGeometry { near_h: 0.1, far_h: 1.0, n_arc: 12 };
        let lp = beam_loop(&g);
        let on_arc: Vec<&[f64; 2]> = lp
            .iter()
            .filter(|p| p[0] > ARM_X[1] + 1e-12)
            .collect();
        assert!(on_arc.len() >= g.n_arc - 1);
        for p in on_arc {
            let r = ((p[0] - TIP_CENTER[0]).powi(2) + (p[1] - TIP_CENTER[1]).powi(2)).sqrt();
            assert!((r - TIP_RADIUS).abs() < 1e-12, "radius {r}");
        }
    }

    #[test]
    fn n_arc_validation() {
        let g = BeamGeometry { n_arc: 2, ..BeamGeometry::default() };
        assert!(matches!(generate_beam_mesh(&g), Err(Error::MeshGeneration(_))));
    }

    #[test]
    fn benchmark_problem_fields() {
        let p = benchmark_problem();
        assert_eq!(p.eps, 1e-6);
        assert_eq!((p.b)(3.0, [7.0, 2.0]), [1.0, 0.0]);
        assert_eq!((p.dirichlet)(BoundaryTag::Solid, 1.0, [0.5, 0.0]), 1.0);
        assert_eq!((p.dirichlet)(BoundaryTag::Dirichlet, 1.0, [-5.0, 0.0]), 0.0);
    }

    #[test]
    fn manufactured_source_matches_finite_differences() {
        let case = moving_square_case(0.05, [1.0, 0.5], 1.0);
        let exact = case.exact.clone();
        let h = 1e-5;
        for (t, x) in [(0.0, [0.5, 0.5]), (0.3, [0.3, 0.7]), (1.0, [0.8, 0.2])] {
            let u = exact(t, x);
            let ut = (exact(t + h, x) - exact(t - h, x)) / (2.0 * h);
            let uxx = (exact(t, [x[0] + h, x[1]]) - 2.0 * u + exact(t, [x[0] - h, x[1]]))
                / (h * h);
            let uyy = (exact(t, [x[0], x[1] + h]) - 2.0 * u + exact(t, [x[0], x[1] - h]))
                / (h * h);
            let ux = (exact(t, [x[0] + h, x[1]]) - exact(t, [x[0] - h, x[1]])) / (2.0 * h);
            let uy = (exact(t, [x[0], x[1] + h]) - exact(t, [x[0], x[1] - h])) / (2.0 * h);
            let f_fd = ut - 0.05 * (uxx + uyy) + 1.0 * ux + 0.5 * uy + 1.0 * u;
            let f = (case.problem.f)(t, x);
            assert!((f - f_fd).abs() < 1e-5, "t={t}: {f} vs {f_fd}");
        }
    }

    #[test]
    fn manufactured_initial_datum_matches_exact() {
        let case = moving_square_case(0.05, [1.0, 0.5], 1.0);
        for x in [[0.2, 0.9], [0.5, 0.5], [0.77, 0.13]] {
            assert_eq!((case.problem.u0)(x), (case.exact)(0.0, x));
        }
    }

    #[test]
    fn moving_square_motion_fixes_boundary() {
        let mesh = crate::mesh::unit_square_mesh(4).unwrap();
        let motion = moving_square_motion();
        let coords = motion(&mesh, 0.23).unwrap();
        for (p, q) in mesh.nodes.iter().zip(&coords) {
            let on_boundary = p[0] < 1e-14 || p[0] > 1.0 - 1e-14 || p[1] < 1e-14 || p[1] > 1.0 - 1e-14;
            if on_boundary {
                assert!((p[0] - q[0]).abs() < 1e-12 && (p[1] - q[1]).abs() < 1e-12);
            }
        }
        assert!(mesh.nodes.iter().zip(&coords).any(|(p, q)| p != q));
    }
}
