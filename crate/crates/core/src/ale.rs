//! Discrete ALE frames: mesh velocity, step Jacobian diagnostics and the
//! elastic-solid interior mesh update.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::{solve, CsrMatrix, SolveMethod, SolverConfig};
use crate::mesh::{cell_area, reference_map, BoundaryTag, Mesh};

/// Which coordinate set of a frame an operation is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    Prev,
    Mid,
    Curr,
}

/// Snapshot of one mesh-motion step [t^n, t^{n+1}].
#[derive(Debug, Clone)]
pub struct AleFrame {
    pub coords_prev: Vec<[f64; 2]>,
    pub coords_mid: Vec<[f64; 2]>,
    pub coords_curr: Vec<[f64; 2]>,
    /// Piecewise-constant-in-time nodal mesh velocity (x^{n+1} - x^n) / dt.
    pub velocity: Vec<[f64; 2]>,
    pub dt: f64,
}

impl AleFrame {
    pub fn new(coords_prev: Vec<[f64; 2]>, coords_curr: Vec<[f64; 2]>, dt: f64) -> Result<Self> {
        let velocity = mesh_velocity(&coords_prev, &coords_curr, dt)?;
        let coords_mid = midpoint_coords(&coords_prev, &coords_curr)?;
        Ok(AleFrame {
            coords_prev,
            coords_mid,
            coords_curr,
            velocity,
            dt,
        })
    }

    /// A frame with no motion.
    pub fn stationary(coords: Vec<[f64; 2]>, dt: f64) -> Result<Self> {
        let curr = coords.clone();
        Self::new(coords, curr, dt)
    }

    pub fn coords(&self, which: Geometry) -> &[[f64; 2]] {
        match which {
            Geometry::Prev => &self.coords_prev,
            Geometry::Mid => &self.coords_mid,
            Geometry::Curr => &self.coords_curr,
        }
    }

    /// Time associated with a geometry selector given t^n.
    pub fn time_at(&self, which: Geometry, t_prev: f64) -> f64 {
        match which {
            Geometry::Prev => t_prev,
            Geometry::Mid => t_prev + 0.5 * self.dt,
            Geometry::Curr => t_prev + self.dt,
        }
    }
}

/// Nodal mesh velocity w_i = (x_i^{n+1} - x_i^n) / dt.
pub fn mesh_velocity(
    coords_prev: &[[f64; 2]],
    coords_curr: &[[f64; 2]],
    dt: f64,
) -> Result<Vec<[f64; 2]>> {
    if dt <= 0.0 {
        return Err(Error::NonpositiveDt(dt));
    }
    if coords_prev.len() != coords_curr.len() {
        return Err(Error::NodeCountMismatch(coords_prev.len(), coords_curr.len()));
    }
    Ok(coords_prev
        .iter()
        .zip(coords_curr)
        .map(|(p, c)| [(c[0] - p[0]) / dt, (c[1] - p[1]) / dt])
        .collect())
}

/// Linear-in-time interpolant at t^{n+1/2}.
pub fn midpoint_coords(
    coords_prev: &[[f64; 2]],
    coords_curr: &[[f64; 2]],
) -> Result<Vec<[f64; 2]>> {
    if coords_prev.len() != coords_curr.len() {
        return Err(Error::NodeCountMismatch(coords_prev.len(), coords_curr.len()));
    }
    Ok(coords_prev
        .iter()
        .zip(coords_curr)
        .map(|(p, c)| [0.5 * (p[0] + c[0]), 0.5 * (p[1] + c[1])])
        .collect())
}

/// Cellwise-constant divergence of the P1 nodal velocity field on the
/// given geometry.
pub fn divergence_w_cell(
    mesh: &Mesh,
    coords: &[[f64; 2]],
    velocity: &[[f64; 2]],
    k: usize,
) -> Result<f64> {
    let map = reference_map(&mesh.cells, coords, k)?;
    // P1 reference gradients
    const GR: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
    let mut div = 0.0;
    for (i, &node) in mesh.cells[k].iter().enumerate() {
        let g = map.phys_grad(GR[i]);
        div += velocity[node][0] * g[0] + velocity[node][1] * g[1];
    }
    Ok(div)
}

/// Sup over cells of |div w_h| on the chosen geometry.
pub fn divergence_w_sup(mesh: &Mesh, frame: &AleFrame, which: Geometry) -> Result<f64> {
    let coords = frame.coords(which);
    let mut sup: f64 = 0.0;
    for k in 0..mesh.n_cells() {
        sup = sup.max(divergence_w_cell(mesh, coords, &frame.velocity, k)?.abs());
    }
    Ok(sup)
}

/// The alpha/beta quantities of the per-step stability bounds and the
/// admissible time-step limits they imply.
#[derive(Debug, Clone, Copy)]
pub struct AleStabilityReport {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub dt_max_euler: f64,
    pub dt_max_cn: f64,
    pub dt_max_bdf2: f64,
}

fn inv_or_inf(x: f64) -> f64 {
    if x > 0.0 {
        1.0 / x
    } else {
        f64::INFINITY
    }
}

/// Computes alpha1, alpha2 (implicit Euler / BDF-2) and beta1, beta2
/// (Crank-Nicolson) for one motion step.
///
/// alpha2's sup over t in (t^n, t^{n+1}) is sampled on the prev, mid and
/// curr geometries; since J * div(w) is linear in time on each cell of the
/// linear-in-time discrete map, the endpoint samples attain the sup.
pub fn stability_report(mesh: &Mesh, frame: &AleFrame) -> Result<AleStabilityReport> {
    let alpha1 = divergence_w_sup(mesh, frame, Geometry::Curr)?;
    let mut alpha2: f64 = 0.0;
    for which in [Geometry::Prev, Geometry::Mid, Geometry::Curr] {
        let coords = frame.coords(which);
        for k in 0..mesh.n_cells() {
            let area_prev = cell_area(&mesh.cells, &frame.coords_prev, k);
            let area_here = cell_area(&mesh.cells, coords, k);
            let jac = (area_here / area_prev).abs();
            let div = divergence_w_cell(mesh, coords, &frame.velocity, k)?.abs();
            alpha2 = alpha2.max(jac * div);
        }
    }
    // Crank-Nicolson weights: products of global sup norms, as displayed in
    // the stability analysis for the midpoint scheme.
    let mut j_curr_to_mid: f64 = 0.0;
    let mut j_prev_to_mid: f64 = 0.0;
    for k in 0..mesh.n_cells() {
        let a_prev = cell_area(&mesh.cells, &frame.coords_prev, k);
        let a_mid = cell_area(&mesh.cells, &frame.coords_mid, k);
        let a_curr = cell_area(&mesh.cells, &frame.coords_curr, k);
        j_curr_to_mid = j_curr_to_mid.max((a_mid / a_curr).abs());
        j_prev_to_mid = j_prev_to_mid.max((a_mid / a_prev).abs());
    }
    let div_mid = divergence_w_sup(mesh, frame, Geometry::Mid)?;
    let div_prev = divergence_w_sup(mesh, frame, Geometry::Prev)?;
    let beta1 = j_curr_to_mid * div_mid;
    let beta2 = j_prev_to_mid * div_prev;
    Ok(AleStabilityReport {
        alpha1,
        alpha2,
        beta1,
        beta2,
        dt_max_euler: inv_or_inf(alpha1 + alpha2),
        dt_max_cn: inv_or_inf(beta1 + beta2),
        dt_max_bdf2: inv_or_inf(2.0 * alpha1 + alpha2),
    })
}

/// Material and scaling options for the elastic mesh update.
#[derive(Debug, Clone, Copy)]
pub struct ElasticParams {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    /// Stiffen each cell by (mean area / cell area) to protect small cells.
    pub stiffen_small_cells: bool,
}

impl Default for ElasticParams {
    fn default() -> Self {
        ElasticParams {
            youngs_modulus: 1.0,
            poisson_ratio: 0.3,
            stiffen_small_cells: false,
        }
    }
}

/// Solves linear elastostatics for interior node displacements.
///
/// `solid_displacement` prescribes the motion of SOLID-tagged boundary
/// nodes; all other boundary nodes are held fixed. Returns the displacement
/// at every node.
pub fn elastic_update(
    mesh: &Mesh,
    coords: &[[f64; 2]],
    solid_displacement: &HashMap<usize, [f64; 2]>,
    params: &ElasticParams,
) -> Result<Vec<[f64; 2]>> {
    let n = coords.len();
    let ndof = 2 * n;
    let e = params.youngs_modulus;
    let nu = params.poisson_ratio;
    // plane strain constitutive matrix
    let fac = e / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let d = [
        [fac * (1.0 - nu), fac * nu, 0.0],
        [fac * nu, fac * (1.0 - nu), 0.0],
        [0.0, 0.0, fac * (1.0 - 2.0 * nu) / 2.0],
    ];
    let mean_area = (0..mesh.n_cells())
        .map(|k| cell_area(&mesh.cells, coords, k))
        .sum::<f64>()
        / mesh.n_cells() as f64;

    let mut triplets = Vec::with_capacity(mesh.n_cells() * 36);
    const GR: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
    for k in 0..mesh.n_cells() {
        let map = reference_map(&mesh.cells, coords, k)?;
        let area = cell_area(&mesh.cells, coords, k);
        if area <= 0.0 {
            return Err(Error::InvertedCell { cell: k, area });
        }
        let scale = if params.stiffen_small_cells {
            mean_area / area
        } else {
            1.0
        };
        // strain-displacement matrix: columns are (ux_i, uy_i) per vertex
        let mut b = [[0.0f64; 6]; 3];
        for i in 0..3 {
            let g = map.phys_grad(GR[i]);
            b[0][2 * i] = g[0];
            b[1][2 * i + 1] = g[1];
            b[2][2 * i] = g[1];
            b[2][2 * i + 1] = g[0];
        }
        // K_e = area * B^T D B
        for r in 0..6 {
            for c in 0..6 {
                let mut v = 0.0;
                for p in 0..3 {
                    for q in 0..3 {
                        v += b[p][r] * d[p][q] * b[q][c];
                    }
                }
                v *= area * scale;
                let gi = 2 * mesh.cells[k][r / 2] + r % 2;
                let gj = 2 * mesh.cells[k][c / 2] + c % 2;
                triplets.push((gi, gj, v));
            }
        }
    }
    let mut matrix = CsrMatrix::from_triplets(ndof, ndof, triplets);
    let mut rhs = vec![0.0; ndof];
    // constrained nodes: every boundary node; solid nodes carry the data
    let mut constrained: HashMap<usize, [f64; 2]> = HashMap::new();
    for be in &mesh.boundary_edges {
        for &node in &be.nodes {
            if be.tag == BoundaryTag::Solid {
                let disp = solid_displacement.get(&node).copied().ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "no displacement given for solid boundary node {node}"
                    ))
                })?;
                constrained.insert(node, disp);
            } else {
                constrained.entry(node).or_insert([0.0, 0.0]);
            }
        }
    }
    // solid nodes win over other tags at shared corners
    for be in &mesh.boundary_edges {
        if be.tag == BoundaryTag::Solid {
            for &node in &be.nodes {
                if let Some(disp) = solid_displacement.get(&node) {
                    constrained.insert(node, *disp);
                }
            }
        }
    }
    for (&node, disp) in &constrained {
        for axis in 0..2 {
            let dof = 2 * node + axis;
            matrix.set_identity_row(dof);
            rhs[dof] = disp[axis];
        }
    }
    let config = SolverConfig {
        method: if ndof <= 2000 {
            SolveMethod::DirectSmall
        } else {
            SolveMethod::Gmres
        },
        tol: 1e-10,
        max_iter: 20000,
    };
    let (x, _) = solve(&matrix, &rhs, &config, None)?;
    let disp: Vec<[f64; 2]> = (0..n).map(|i| [x[2 * i], x[2 * i + 1]]).collect();
    // audit the moved configuration
    let moved: Vec<[f64; 2]> = coords
        .iter()
        .zip(&disp)
        .map(|(p, d)| [p[0] + d[0], p[1] + d[1]])
        .collect();
    for k in 0..mesh.n_cells() {
        let area = cell_area(&mesh.cells, &moved, k);
        if area <= 1e-14 * cell_area(&mesh.cells, coords, k) {
            return Err(Error::InvertedCell { cell: k, area });
        }
    }
    Ok(disp)
}
