//! Assembly of the Galerkin and SUPG forms on a selected geometry,
//! including the mesh-velocity convection term of the non-conservative
//! ALE formulation.

use rayon::prelude::*;

use crate::basis::{shape_values, ShapeTable, MAX_LOCAL_DOFS};
use crate::error::Result;
use crate::linalg::CsrMatrix;
use crate::mesh::{cell_diameter, reference_map, Mesh};
use crate::problem::ProblemSpec;
use crate::quadrature::QuadratureRule;
use crate::space::FunctionSpace;
use crate::stab::{delta_k, StabilizationConfig};

/// Shared immutable data for the cell loops.
pub struct AssemblyContext<'a> {
    pub mesh: &'a Mesh,
    pub space: &'a FunctionSpace,
    pub quad: QuadratureRule,
    pub table: ShapeTable,
}

impl<'a> AssemblyContext<'a> {
    pub fn new(mesh: &'a Mesh, space: &'a FunctionSpace) -> Result<Self> {
        let quad = QuadratureRule::degree5();
        let table = shape_values(space.degree, &quad)?;
        Ok(AssemblyContext {
            mesh,
            space,
            quad,
            table,
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.space.n_dofs
    }
}

struct CellWork {
    dofs: Vec<usize>,
    matrix: [[f64; MAX_LOCAL_DOFS]; MAX_LOCAL_DOFS],
    rhs: [f64; MAX_LOCAL_DOFS],
}

/// Runs a per-cell kernel in parallel and scatters sequentially in cell
/// order, so the triplet stream is independent of the worker count.
fn assemble_cells<F>(ctx: &AssemblyContext, kernel: F) -> Result<(CsrMatrix, Vec<f64>)>
where
    F: Fn(usize) -> Result<CellWork> + Sync,
{
    let works: Vec<Result<CellWork>> = (0..ctx.mesh.n_cells())
        .into_par_iter()
        .map(&kernel)
        .collect();
    let n = ctx.n_dofs();
    let nd = ctx.space.local_dofs();
    let mut triplets = Vec::with_capacity(ctx.mesh.n_cells() * nd * nd);
    let mut rhs = vec![0.0; n];
    for work in works {
        let work = work?;
        for (i, &gi) in work.dofs.iter().enumerate() {
            rhs[gi] += work.rhs[i];
            for (j, &gj) in work.dofs.iter().enumerate() {
                triplets.push((gi, gj, work.matrix[i][j]));
            }
        }
    }
    Ok((CsrMatrix::from_triplets(n, n, triplets), rhs))
}

/// Mesh velocity (P1 nodal field) evaluated at a quadrature point of cell k.
pub(crate) fn velocity_at(
    mesh: &Mesh,
    velocity: Option<&[[f64; 2]]>,
    k: usize,
    bary: [f64; 3],
) -> [f64; 2] {
    match velocity {
        None => [0.0, 0.0],
        Some(w) => {
            let cell = mesh.cells[k];
            let mut v = [0.0, 0.0];
            for i in 0..3 {
                v[0] += bary[i] * w[cell[i]][0];
                v[1] += bary[i] * w[cell[i]][1];
            }
            v
        }
    }
}

/// Per-cell SUPG parameter from the cell's quadrature-point data.
#[allow(clippy::too_many_arguments)]
pub(crate) fn cell_delta(
    ctx: &AssemblyContext,
    coords: &[[f64; 2]],
    velocity: Option<&[[f64; 2]]>,
    problem: &ProblemSpec,
    stab: &StabilizationConfig,
    t: f64,
    dt: f64,
    k: usize,
) -> Result<f64> {
    let map = reference_map(&ctx.mesh.cells, coords, k)?;
    let mut conv_norm: f64 = 0.0;
    let mut c_norm: f64 = 0.0;
    for q in 0..ctx.quad.len() {
        let [xi, eta] = ctx.quad.xy(q);
        let x = map.map(xi, eta);
        let b = (problem.b)(t, x);
        let w = velocity_at(ctx.mesh, velocity, k, ctx.quad.points[q]);
        conv_norm = conv_norm.max(((b[0] - w[0]).powi(2) + (b[1] - w[1]).powi(2)).sqrt());
        c_norm = c_norm.max((problem.c)(t, x).abs());
    }
    let h_k = cell_diameter(&ctx.mesh.cells, coords, k);
    delta_k(h_k, conv_norm, c_norm, problem.eps, dt, stab)
}

/// a_SUPG: eps (grad u, grad v) + (b.grad u, v) + (c u, v)
/// + sum_K delta_K (-eps Lap u + (b-w).grad u + c u, (b-w).grad v)_K.
///
/// The plain convection group uses b; only the stabilization residual and
/// weight use (b - w). With `stab = None` (or delta0 = 0) this reduces to
/// the plain Galerkin operator.
#[allow(clippy::too_many_arguments)]
pub fn assemble_supg_form(
    ctx: &AssemblyContext,
    coords: &[[f64; 2]],
    velocity: Option<&[[f64; 2]]>,
    problem: &ProblemSpec,
    stab: Option<&StabilizationConfig>,
    t: f64,
    dt: f64,
) -> Result<CsrMatrix> {
    let nd = ctx.space.local_dofs();
    let (matrix, _) = assemble_cells(ctx, |k| {
        let map = reference_map(&ctx.mesh.cells, coords, k)?;
        let area = map.det / 2.0;
        let delta = match stab {
            Some(s) => cell_delta(ctx, coords, velocity, problem, s, t, dt, k)?,
            None => 0.0,
        };
        let laps: Vec<f64> = (0..nd)
            .map(|i| map.phys_laplacian(ctx.table.hessians[i]))
            .collect();
        let mut local = [[0.0f64; MAX_LOCAL_DOFS]; MAX_LOCAL_DOFS];
        for q in 0..ctx.quad.len() {
            let wq = ctx.quad.weights[q] * area;
            let [xi, eta] = ctx.quad.xy(q);
            let x = map.map(xi, eta);
            let b = (problem.b)(t, x);
            let c = (problem.c)(t, x);
            let w = velocity_at(ctx.mesh, velocity, k, ctx.quad.points[q]);
            let bw = [b[0] - w[0], b[1] - w[1]];
            let vals = &ctx.table.values[q];
            let grads: Vec<[f64; 2]> = (0..nd)
                .map(|i| map.phys_grad(ctx.table.grads[q][i]))
                .collect();
            for i in 0..nd {
                let gi = grads[i];
                let vi = vals[i];
                let stream_i = bw[0] * gi[0] + bw[1] * gi[1];
                for j in 0..nd {
                    let gj = grads[j];
                    let vj = vals[j];
                    let galerkin = problem.eps * (gj[0] * gi[0] + gj[1] * gi[1])
                        + (b[0] * gj[0] + b[1] * gj[1]) * vi
                        + c * vj * vi;
                    let residual_j =
                        -problem.eps * laps[j] + bw[0] * gj[0] + bw[1] * gj[1] + c * vj;
                    local[i][j] += wq * (galerkin + delta * residual_j * stream_i);
                }
            }
        }
        Ok(CellWork {
            dofs: ctx.space.cell_dofs[k].clone(),
            matrix: local,
            rhs: [0.0; MAX_LOCAL_DOFS],
        })
    })?;
    Ok(matrix)
}

/// Matrix of -(w_h . grad u, v) on the selected geometry.
pub fn assemble_mesh_convection(
    ctx: &AssemblyContext,
    coords: &[[f64; 2]],
    velocity: &[[f64; 2]],
) -> Result<CsrMatrix> {
    let nd = ctx.space.local_dofs();
    let (matrix, _) = assemble_cells(ctx, |k| {
        let map = reference_map(&ctx.mesh.cells, coords, k)?;
        let area = map.det / 2.0;
        let mut local = [[0.0f64; MAX_LOCAL_DOFS]; MAX_LOCAL_DOFS];
        for q in 0..ctx.quad.len() {
            let wq = ctx.quad.weights[q] * area;
            let w = velocity_at(ctx.mesh, Some(velocity), k, ctx.quad.points[q]);
            let vals = &ctx.table.values[q];
            for i in 0..nd {
                for j in 0..nd {
                    let gj = map.phys_grad(ctx.table.grads[q][j]);
                    local[i][j] -= wq * (w[0] * gj[0] + w[1] * gj[1]) * vals[i];
                }
            }
        }
        Ok(CellWork {
            dofs: ctx.space.cell_dofs[k].clone(),
            matrix: local,
            rhs: [0.0; MAX_LOCAL_DOFS],
        })
    })?;
    Ok(matrix)
}

/// Mass matrix on the selected geometry.
pub fn assemble_mass(ctx: &AssemblyContext, coords: &[[f64; 2]]) -> Result<CsrMatrix> {
    let nd = ctx.space.local_dofs();
    let (matrix, _) = assemble_cells(ctx, |k| {
        let map = reference_map(&ctx.mesh.cells, coords, k)?;
        let area = map.det / 2.0;
        let mut local = [[0.0f64; MAX_LOCAL_DOFS]; MAX_LOCAL_DOFS];
        for q in 0..ctx.quad.len() {
            let wq = ctx.quad.weights[q] * area;
            let vals = &ctx.table.values[q];
            for i in 0..nd {
                for j in 0..nd {
                    local[i][j] += wq * vals[i] * vals[j];
                }
            }
        }
        Ok(CellWork {
            dofs: ctx.space.cell_dofs[k].clone(),
            matrix: local,
            rhs: [0.0; MAX_LOCAL_DOFS],
        })
    })?;
    Ok(matrix)
}

/// Divergence-weighted mass matrix: entries of ((div w_h) u, v).
/// div w_h is cellwise constant; used by the energy monitors and tests.
pub fn assemble_divw_mass(
    ctx: &AssemblyContext,
    coords: &[[f64; 2]],
    velocity: &[[f64; 2]],
) -> Result<CsrMatrix> {
    let nd = ctx.space.local_dofs();
    let (matrix, _) = assemble_cells(ctx, |k| {
        let map = reference_map(&ctx.mesh.cells, coords, k)?;
        let area = map.det / 2.0;
        let div = crate::ale::divergence_w_cell(ctx.mesh, coords, velocity, k)?;
        let mut local = [[0.0f64; MAX_LOCAL_DOFS]; MAX_LOCAL_DOFS];
        for q in 0..ctx.quad.len() {
            let wq = ctx.quad.weights[q] * area * div;
            let vals = &ctx.table.values[q];
            for i in 0..nd {
                for j in 0..nd {
                    local[i][j] += wq * vals[i] * vals[j];
                }
            }
        }
        Ok(CellWork {
            dofs: ctx.space.cell_dofs[k].clone(),
            matrix: local,
            rhs: [0.0; MAX_LOCAL_DOFS],
        })
    })?;
    Ok(matrix)
}

/// Load vector: (f, v) + sum_K delta_K (f, (b-w).grad v)_K.
#[allow(clippy::too_many_arguments)]
pub fn assemble_rhs(
    ctx: &AssemblyContext,
    coords: &[[f64; 2]],
    velocity: Option<&[[f64; 2]]>,
    problem: &ProblemSpec,
    stab: Option<&StabilizationConfig>,
    t: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    let nd = ctx.space.local_dofs();
    let (_, rhs) = assemble_cells(ctx, |k| {
        let map = reference_map(&ctx.mesh.cells, coords, k)?;
        let area = map.det / 2.0;
        let delta = match stab {
            Some(s) => cell_delta(ctx, coords, velocity, problem, s, t, dt, k)?,
            None => 0.0,
        };
        let mut local = [0.0f64; MAX_LOCAL_DOFS];
        for q in 0..ctx.quad.len() {
            let wq = ctx.quad.weights[q] * area;
            let [xi, eta] = ctx.quad.xy(q);
            let x = map.map(xi, eta);
            let f = (problem.f)(t, x);
            let b = (problem.b)(t, x);
            let w = velocity_at(ctx.mesh, velocity, k, ctx.quad.points[q]);
            let bw = [b[0] - w[0], b[1] - w[1]];
            let vals = &ctx.table.values[q];
            for i in 0..nd {
                let gi = map.phys_grad(ctx.table.grads[q][i]);
                local[i] += wq * f * (vals[i] + delta * (bw[0] * gi[0] + bw[1] * gi[1]));
            }
        }
        Ok(CellWork {
            dofs: ctx.space.cell_dofs[k].clone(),
            matrix: [[0.0; MAX_LOCAL_DOFS]; MAX_LOCAL_DOFS],
            rhs: local,
        })
    })?;
    Ok(rhs)
}

/// The mesh-dependent norm squared:
/// eps |u|_1^2 + sum_K delta_K ||(b-w).grad u||_{0,K}^2 + mu ||u||_0^2.
#[allow(clippy::too_many_arguments)]
pub fn supg_norm_sq(
    ctx: &AssemblyContext,
    coords: &[[f64; 2]],
    velocity: Option<&[[f64; 2]]>,
    problem: &ProblemSpec,
    stab: &StabilizationConfig,
    t: f64,
    dt: f64,
    coeffs: &[f64],
) -> Result<f64> {
    let nd = ctx.space.local_dofs();
    let parts: Vec<Result<f64>> = (0..ctx.mesh.n_cells())
        .into_par_iter()
        .map(|k| {
            let map = reference_map(&ctx.mesh.cells, coords, k)?;
            let area = map.det / 2.0;
            let delta = cell_delta(ctx, coords, velocity, problem, stab, t, dt, k)?;
            let dofs = &ctx.space.cell_dofs[k];
            let mut acc = 0.0;
            for q in 0..ctx.quad.len() {
                let wq = ctx.quad.weights[q] * area;
                let [xi, eta] = ctx.quad.xy(q);
                let x = map.map(xi, eta);
                let b = (problem.b)(t, x);
                let w = velocity_at(ctx.mesh, velocity, k, ctx.quad.points[q]);
                let bw = [b[0] - w[0], b[1] - w[1]];
                let mut u = 0.0;
                let mut grad = [0.0, 0.0];
                for i in 0..nd {
                    let c = coeffs[dofs[i]];
                    u += c * ctx.table.values[q][i];
                    let g = map.phys_grad(ctx.table.grads[q][i]);
                    grad[0] += c * g[0];
                    grad[1] += c * g[1];
                }
                let stream = bw[0] * grad[0] + bw[1] * grad[1];
                acc += wq
                    * (problem.eps * (grad[0] * grad[0] + grad[1] * grad[1])
                        + delta * stream * stream
                        + stab.mu * u * u);
            }
            Ok(acc)
        })
        .collect();
    let mut total = 0.0;
    for p in parts {
        total += p?;
    }
    Ok(total)
}

/// L2 norm squared of (u_h - g) on the given geometry.
pub fn l2_error_sq<G: Fn([f64; 2]) -> f64 + Sync>(
    ctx: &AssemblyContext,
    coords: &[[f64; 2]],
    coeffs: &[f64],
    g: G,
) -> Result<f64> {
    let nd = ctx.space.local_dofs();
    let parts: Vec<Result<f64>> = (0..ctx.mesh.n_cells())
        .into_par_iter()
        .map(|k| {
            let map = reference_map(&ctx.mesh.cells, coords, k)?;
            let area = map.det / 2.0;
            let dofs = &ctx.space.cell_dofs[k];
            let mut acc = 0.0;
            for q in 0..ctx.quad.len() {
                let wq = ctx.quad.weights[q] * area;
                let [xi, eta] = ctx.quad.xy(q);
                let x = map.map(xi, eta);
                let mut u = 0.0;
                for i in 0..nd {
                    u += coeffs[dofs[i]] * ctx.table.values[q][i];
                }
                let d = u - g(x);
                acc += wq * d * d;
            }
            Ok(acc)
        })
        .collect();
    let mut total = 0.0;
    for p in parts {
        total += p?;
    }
    Ok(total)
}

/// Dirichlet values at constrained dofs on the given geometry.
pub fn dirichlet_values(
    space: &FunctionSpace,
    coords: &[[f64; 2]],
    problem: &ProblemSpec,
    t: f64,
) -> Vec<(usize, f64)> {
    let dof_coords = space.dof_coords(coords);
    space
        .dirichlet_tag
        .iter()
        .enumerate()
        .filter_map(|(dof, tag)| {
            tag.map(|tag| (dof, (problem.dirichlet)(tag, t, dof_coords[dof])))
        })
        .collect()
}

/// Row replacement with value injection at constrained dofs.
pub fn apply_dirichlet(matrix: &mut CsrMatrix, rhs: &mut [f64], values: &[(usize, f64)]) {
    for &(dof, value) in values {
        matrix.set_identity_row(dof);
        rhs[dof] = value;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{unit_square_mesh, BoundaryEdge, BoundaryTag, Mesh};
    use crate::space::build_function_space;
    use std::sync::Arc;

    fn one_cell_mesh() -> Mesh {
        Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![
                BoundaryEdge { nodes: [0, 1], tag: BoundaryTag::Dirichlet },
                BoundaryEdge { nodes: [1, 2], tag: BoundaryTag::Dirichlet },
                BoundaryEdge { nodes: [2, 0], tag: BoundaryTag::Dirichlet },
            ],
        )
        .unwrap()
    }

    fn rand_stream(seed: u64) -> impl FnMut() -> f64 {
        let mut s = seed;
        move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 33) as f64) / (u32::MAX as f64) - 0.5
        }
    }

    #[test]
    fn one_cell_p1_stiffness_matches_hand_value() {
        // cotangent formula on the reference triangle, eps = 1:
        // K = [[1, -1/2, -1/2], [-1/2, 1/2, 0], [-1/2, 0, 1/2]]
        let mesh = one_cell_mesh();
        let space = build_function_space(&mesh, 1).unwrap();
        let ctx = AssemblyContext::new(&mesh, &space).unwrap();
        let p = ProblemSpec::constant(1.0, [0.0, 0.0], 0.0, 0.0);
        let a = assemble_supg_form(&ctx, &mesh.nodes, None, &p, None, 0.0, 1.0).unwrap();
        let d = a.to_dense();
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((d[i][j] - expect[i][j]).abs() < 1e-14, "K[{i}][{j}]");
            }
        }
    }

    #[test]
    fn constants_annihilated_except_reaction() {
        let mesh = unit_square_mesh(3).unwrap();
        let space = build_function_space(&mesh, 2).unwrap();
        let ctx = AssemblyContext::new(&mesh, &space).unwrap();
        let p = ProblemSpec::constant(0.5, [1.0, 2.0], 3.0, 0.0);
        let a = assemble_supg_form(&ctx, &mesh.nodes, None, &p, None, 0.0, 1.0).unwrap();
        let mass = assemble_mass(&ctx, &mesh.nodes).unwrap();
        let ones = vec![1.0; space.n_dofs];
        let au = a.spmv(&ones).unwrap();
        let mu = mass.spmv(&ones).unwrap();
        for (x, m) in au.iter().zip(&mu) {
            assert!((x - 3.0 * m).abs() < 1e-12);
        }
    }

    #[test]
    fn mass_total_is_area_and_scales() {
        let mesh = unit_square_mesh(3).unwrap();
        let space = build_function_space(&mesh, 2).unwrap();
        let ctx = AssemblyContext::new(&mesh, &space).unwrap();
        let m = assemble_mass(&ctx, &mesh.nodes).unwrap();
        let total: f64 = m.values.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let scaled: Vec<[f64; 2]> = mesh.nodes.iter().map(|p| [2.0 * p[0], 2.0 * p[1]]).collect();
        let m2 = assemble_mass(&ctx, &scaled).unwrap();
        let total2: f64 = m2.values.iter().sum();
        assert!((total2 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn p2_one_cell_mass_matches_symbolic_values() {
        // exact P2 mass on a triangle of area A, ordering v0 v1 v2 m01 m12 m20:
        // vertex diag 6, vertex-vertex -1, vertex-opposite-midpoint -4,
        // vertex-adjacent-midpoint 0, midpoint diag 32, midpoint-midpoint 16,
        // all times A/180.
        let mesh = one_cell_mesh();
        let space = build_function_space(&mesh, 2).unwrap();
        let ctx = AssemblyContext::new(&mesh, &space).unwrap();
        let m = assemble_mass(&ctx, &mesh.nodes).unwrap().to_dense();
        let a = 0.5;
        let s = a / 180.0;
        let expect = [
            [6.0, -1.0, -1.0, 0.0, -4.0, 0.0],
            [-1.0, 6.0, -1.0, 0.0, 0.0, -4.0],
            [-1.0, -1.0, 6.0, -4.0, 0.0, 0.0],
            [0.0, 0.0, -4.0, 32.0, 16.0, 16.0],
            [-4.0, 0.0, 0.0, 16.0, 32.0, 16.0],
            [0.0, -4.0, 0.0, 16.0, 16.0, 32.0],
        ];
        for i in 0..6 {
            for j in 0..6 {
                assert!(
                    (m[i][j] - s * expect[i][j]).abs() < 1e-14,
                    "M[{i}][{j}] = {} vs {}",
                    m[i][j],
                    s * expect[i][j]
                );
            }
        }
    }

    #[test]
    fn mesh_convection_zero_velocity_is_zero() {
        let mesh = unit_square_mesh(2).unwrap();
        let space = build_function_space(&mesh, 2).unwrap();
        let ctx = AssemblyContext::new(&mesh, &space).unwrap();
        let w = vec![[0.0, 0.0]; mesh.n_nodes()];
        let m = assemble_mesh_convection(&ctx, &mesh.nodes, &w).unwrap();
        assert!(m.values.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn mesh_convection_skew_for_divergence_free_velocity() {
        let mesh = unit_square_mesh(4).unwrap();
        let space = build_function_space(&mesh, 2).unwrap();
        let ctx = AssemblyContext::new(&mesh, &space).unwrap();
        let w = vec![[0.7, -0.4]; mesh.n_nodes()];
        let m = assemble_mesh_convection(&ctx, &mesh.nodes, &w).unwrap();
        let mut rnd = rand_stream(7);
        for _ in 0..5 {
            let u: Vec<f64> = (0..space.n_dofs)
                .map(|d| if space.is_dirichlet(d) { 0.0 } else { rnd() })
                .collect();
            let q = m.quadratic_form(&u, &u).unwrap();
            assert!(q.abs() < 1e-12, "quadratic form {q}");
        }
    }

    #[test]
    fn mesh_convection_dilation_identity() {
        // for u vanishing on the boundary: (M_w u, u) = -(w.grad u, u)
        // = 1/2 int (div w) u^2
        let mesh = unit_square_mesh(4).unwrap();
        let space = build_function_space(&mesh, 2).unwrap();
        let ctx = AssemblyContext::new(&mesh, &space).unwrap();
        let s = 0.3;
        let w: Vec<[f64; 2]> = mesh.nodes.iter().map(|p| [s * p[0], s * p[1]]).collect();
        let mw = assemble_mesh_convection(&ctx, &mesh.nodes, &w).unwrap();
        let dm = assemble_divw_mass(&ctx, &mesh.nodes, &w).unwrap();
        let mut rnd = rand_stream(11);
        for _ in 0..5 {
            let u: Vec<f64> = (0..space.n_dofs)
                .map(|d| if space.is_dirichlet(d) { 0.0 } else { rnd() })
                .collect();
            let lhs = mw.quadratic_form(&u, &u).unwrap();
            let rhs = 0.5 * dm.quadratic_form(&u, &u).unwrap();
            assert!((lhs - rhs).abs() < 1e-11, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn rhs_constant_load_and_supg_part() {
        let mesh = unit_square_mesh(3).unwrap();
        let space = build_function_space(&mesh, 1).unwrap();
        let ctx = AssemblyContext::new(&mesh, &space).unwrap();
        let p0 = ProblemSpec::constant(1.0, [0.0, 0.0], 0.0, 0.0);
        let z = assemble_rhs(&ctx, &mesh.nodes, None, &p0, None, 0.0, 1.0).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-15));
        // f = 1, delta = 0: entries are int(phi_i); total = area 1
        let p1 = ProblemSpec::constant(1.0, [1.0, 0.0], 0.0, 1.0);
        let f = assemble_rhs(&ctx, &mesh.nodes, None, &p1, None, 0.0, 1.0).unwrap();
        assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // with delta > 0, b constant, w = 0 the SUPG additions sum to zero
        let stab = StabilizationConfig { delta0: 1.0, mu: 0.0, c_inv: 8.0, dt_cap_enabled: false };
        let fs = assemble_rhs(&ctx, &mesh.nodes, None, &p1, Some(&stab), 0.0, 1.0).unwrap();
        assert!((fs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(fs.iter().zip(&f).any(|(a, b)| (a - b).abs() > 1e-13));
    }

    #[test]
    fn rhs_linear_in_source() {
        let mesh = unit_square_mesh(3).unwrap();
        let space = build_function_space(&mesh, 2).unwrap();
        let ctx = AssemblyContext::new(&mesh, &space).unwrap();
        let mk = |f: crate::problem::ScalarFn| {
            let mut p = ProblemSpec::constant(1.0, [1.0, 0.0], 0.5, 0.0);
            p.f = f;
            p
        };
        let pa = mk(Arc::new(|_, x: [f64; 2]| x[0] + 0.3));
        let pb = mk(Arc::new(|_, x: [f64; 2]| x[1] * x[0] - 1.0));
        let pab = mk(Arc::new(|_, x: [f64; 2]| {
            2.0 * (x[0] + 0.3) + 3.0 * (x[1] * x[0] - 1.0)
        }));
        let stab = StabilizationConfig { delta0: 2.0, mu: 1.0, c_inv: 20.0, dt_cap_enabled: true };
        let fa = assemble_rhs(&ctx, &mesh.nodes, None, &pa, Some(&stab), 0.0, 0.1).unwrap();
        let fb = assemble_rhs(&ctx, &mesh.nodes, None, &pb, Some(&stab), 0.0, 0.1).unwrap();
        let fab = assemble_rhs(&ctx, &mesh.nodes, None, &pab, Some(&stab), 0.0, 0.1).unwrap();
        for i in 0..fa.len() {
            assert!((fab[i] - 2.0 * fa[i] - 3.0 * fb[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn supg_norm_reduces_to_l2() {
        let mesh = unit_square_mesh(3).unwrap();
        let space = build_function_space(&mesh, 2).unwrap();
        let ctx = AssemblyContext::new(&mesh, &space).unwrap();
        // mu = 1, eps tiny, delta0 = 0: norm ~ L2 norm
        let p = ProblemSpec::constant(1e-30, [0.0, 0.0], 0.0, 0.0);
        let stab = StabilizationConfig { delta0: 0.0, mu: 1.0, c_inv: 20.0, dt_cap_enabled: false };
        let mass = assemble_mass(&ctx, &mesh.nodes).unwrap();
        let mut rnd = rand_stream(3);
        let u: Vec<f64> = (0..space.n_dofs).map(|_| rnd()).collect();
        let n1 = supg_norm_sq(&ctx, &mesh.nodes, None, &p, &stab, 0.0, 1.0, &u).unwrap();
        let n2 = mass.quadratic_form(&u, &u).unwrap();
        assert!((n1 - n2).abs() < 1e-12);
        let z = vec![0.0; space.n_dofs];
        assert_eq!(supg_norm_sq(&ctx, &mesh.nodes, None, &p, &stab, 0.0, 1.0, &z).unwrap(), 0.0);
    }

    #[test]
    fn coercivity_on_random_vectors() {
        // Coercivity bound: a(u,u) >= 1/2 |||u|||^2 with caps enforced, mu = 1
        let stab = StabilizationConfig { delta0: 5.0, mu: 1.0, c_inv: 20.0, dt_cap_enabled: true };
        for n in [2usize, 3, 5] {
            let mesh = unit_square_mesh(n).unwrap();
            let space = build_function_space(&mesh, 2).unwrap();
            let ctx = AssemblyContext::new(&mesh, &space).unwrap();
            let p = ProblemSpec::constant(0.01, [2.0, 1.0], 1.0, 0.0);
            let w: Vec<[f64; 2]> = mesh
                .nodes
                .iter()
                .map(|q| [0.1 * (q[1] * 5.0).sin(), -0.2 * (q[0] * 3.0).cos()])
                .collect();
            let a = assemble_supg_form(&ctx, &mesh.nodes, Some(&w), &p, Some(&stab), 0.0, 0.05)
                .unwrap();
            let mut rnd = rand_stream(17 + n as u64);
            for _ in 0..20 {
                let u: Vec<f64> = (0..space.n_dofs)
                    .map(|d| if space.is_dirichlet(d) { 0.0 } else { rnd() })
                    .collect();
                let auu = a.quadratic_form(&u, &u).unwrap();
                let norm =
                    supg_norm_sq(&ctx, &mesh.nodes, Some(&w), &p, &stab, 0.0, 0.05, &u).unwrap();
                assert!(auu >= 0.5 * norm - 1e-10 * norm, "a(u,u)={auu}, |||u|||^2={norm}");
            }
        }
    }

    #[test]
    fn galerkin_limit_matches_plain_assembler() {
        let mesh = unit_square_mesh(3).unwrap();
        let space = build_function_space(&mesh, 2).unwrap();
        let ctx = AssemblyContext::new(&mesh, &space).unwrap();
        let p = ProblemSpec::constant(0.7, [1.0, -0.5], 2.0, 0.0);
        let stab = StabilizationConfig { delta0: 0.0, mu: 1.0, c_inv: 20.0, dt_cap_enabled: true };
        let w = vec![[0.0, 0.0]; mesh.n_nodes()];
        let a1 =
            assemble_supg_form(&ctx, &mesh.nodes, Some(&w), &p, Some(&stab), 0.0, 0.1).unwrap();
        let a2 = assemble_supg_form(&ctx, &mesh.nodes, None, &p, None, 0.0, 0.1).unwrap();
        assert_eq!(a1.col_idx, a2.col_idx);
        for (x, y) in a1.values.iter().zip(&a2.values) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn coordinates_not_labels_determine_values() {
        let mesh = unit_square_mesh(3).unwrap();
        let space = build_function_space(&mesh, 2).unwrap();
        let ctx = AssemblyContext::new(&mesh, &space).unwrap();
        let moved: Vec<[f64; 2]> = mesh
            .nodes
            .iter()
            .map(|p| [p[0] + 0.01 * (p[1] * 7.0).sin(), p[1]])
            .collect();
        let m1 = assemble_mass(&ctx, &moved).unwrap();
        let m2 = assemble_mass(&ctx, &moved).unwrap();
        assert_eq!(m1.values, m2.values);
    }

    #[test]
    fn dirichlet_rows_are_identity_with_value() {
        let mesh = unit_square_mesh(2).unwrap();
        let space = build_function_space(&mesh, 1).unwrap();
        let ctx = AssemblyContext::new(&mesh, &space).unwrap();
        let p = ProblemSpec {
            dirichlet: Arc::new(|_, _, x| x[0] + 2.0 * x[1]),
            ..ProblemSpec::constant(1.0, [0.0, 0.0], 0.0, 0.0)
        };
        let mut a = assemble_supg_form(&ctx, &mesh.nodes, None, &p, None, 0.0, 1.0).unwrap();
        let mut rhs = vec![0.0; space.n_dofs];
        let values = dirichlet_values(&space, &mesh.nodes, &p, 0.0);
        apply_dirichlet(&mut a, &mut rhs, &values);
        for (dof, v) in values {
            let (cols, vals) = a.row(dof);
            for (c, x) in cols.iter().zip(vals) {
                let expect = if *c == dof { 1.0 } else { 0.0 };
                assert_eq!(*x, expect);
            }
            assert_eq!(rhs[dof], v);
        }
    }
}
