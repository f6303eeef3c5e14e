//! Lagrange finite element spaces (P1/P2) over a triangulation.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::mesh::{cell_area, BoundaryTag, Mesh};

/// A scalar Lagrange space of degree 1 or 2 on a mesh.
///
/// Degrees of freedom: one per node, plus (degree 2) one per edge at the
/// edge midpoint. Dof coordinates follow the mesh geometry, so they are
/// computed against an explicit coordinate set.
#[derive(Debug, Clone)]
pub struct FunctionSpace {
    pub degree: usize,
    pub n_nodes: usize,
    pub n_dofs: usize,
    /// Unique mesh edges as sorted node pairs, in deterministic discovery order.
    pub edges: Vec<[usize; 2]>,
    /// Global dofs of each cell: 3 vertex dofs, then (P2) edge dofs for
    /// local edges 01, 12, 20.
    pub cell_dofs: Vec<Vec<usize>>,
    /// Constraint tag per dof: `Some(tag)` for dofs on Dirichlet/Solid edges.
    pub dirichlet_tag: Vec<Option<BoundaryTag>>,
}

impl FunctionSpace {
    pub fn local_dofs(&self) -> usize {
        if self.degree == 1 {
            3
        } else {
            6
        }
    }

    /// Dof coordinates on the given node coordinates.
    pub fn dof_coords(&self, coords: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(self.n_dofs);
        out.extend_from_slice(coords);
        if self.degree == 2 {
            for e in &self.edges {
                let a = coords[e[0]];
                let b = coords[e[1]];
                out.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
            }
        }
        out
    }

    /// Nodal interpolation of `f(x)` on the given geometry.
    pub fn interpolate<F: Fn([f64; 2]) -> f64>(&self, coords: &[[f64; 2]], f: F) -> Vec<f64> {
        self.dof_coords(coords).iter().map(|&p| f(p)).collect()
    }

    pub fn is_dirichlet(&self, dof: usize) -> bool {
        self.dirichlet_tag[dof].is_some()
    }
}

/// Builds a P1 or P2 space on the mesh.
pub fn build_function_space(mesh: &Mesh, degree: usize) -> Result<FunctionSpace> {
    if degree != 1 && degree != 2 {
        return Err(Error::UnsupportedDegree(degree));
    }
    for k in 0..mesh.n_cells() {
        let a = cell_area(&mesh.cells, &mesh.nodes, k);
        if a <= 0.0 {
            return Err(Error::DegenerateCell { cell: k, area: a });
        }
    }
    let n_nodes = mesh.n_nodes();
    let mut edges: Vec<[usize; 2]> = Vec::new();
    let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut cell_dofs = Vec::with_capacity(mesh.n_cells());
    for cell in &mesh.cells {
        let mut dofs = vec![cell[0], cell[1], cell[2]];
        if degree == 2 {
            for e in 0..3 {
                let a = cell[e];
                let b = cell[(e + 1) % 3];
                let key = (a.min(b), a.max(b));
                let idx = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edges.len() - 1
                });
                dofs.push(n_nodes + idx);
            }
        }
        cell_dofs.push(dofs);
    }
    if degree == 1 {
        // edge list still useful for diagnostics; build it deterministically
        for cell in &mesh.cells {
            for e in 0..3 {
                let a = cell[e];
                let b = cell[(e + 1) % 3];
                let key = (a.min(b), a.max(b));
                edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edges.len() - 1
                });
            }
        }
    }
    let n_dofs = if degree == 1 {
        n_nodes
    } else {
        n_nodes + edges.len()
    };
    let mut dirichlet_tag = vec![None; n_dofs];
    // Solid takes precedence where a dof sits on edges with both tags.
    let set = |dof: usize, tag: BoundaryTag, dir: &mut Vec<Option<BoundaryTag>>| {
        match dir[dof] {
            Some(BoundaryTag::Solid) => {}
            _ => dir[dof] = Some(tag),
        }
    };
    for be in &mesh.boundary_edges {
        let tag = be.tag;
        if tag == BoundaryTag::Neumann {
            continue;
        }
        let [a, b] = be.nodes;
        set(a, tag, &mut dirichlet_tag);
        set(b, tag, &mut dirichlet_tag);
        if degree == 2 {
            let key = (a.min(b), a.max(b));
            let idx = edge_index.get(&key).ok_or_else(|| {
                Error::InvalidMesh(format!("boundary edge ({a},{b}) missing from edge set"))
            })?;
            set(n_nodes + idx, tag, &mut dirichlet_tag);
        }
    }
    Ok(FunctionSpace {
        degree,
        n_nodes,
        n_dofs,
        edges,
        cell_dofs,
        dirichlet_tag,
    })
}
