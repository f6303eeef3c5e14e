//! Unstructured triangular meshes: connectivity, validity audit, the
//! affine reference map and the ASCII mesh file format.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Boundary condition tag carried by a boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
    Solid,
}

impl BoundaryTag {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryTag::Dirichlet => "dirichlet",
            BoundaryTag::Neumann => "neumann",
            BoundaryTag::Solid => "solid",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dirichlet" => Ok(BoundaryTag::Dirichlet),
            "neumann" => Ok(BoundaryTag::Neumann),
            "solid" => Ok(BoundaryTag::Solid),
            other => Err(Error::MeshFormat(format!("unknown boundary tag `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
}

/// A triangulation with tagged boundary edges.
///
/// `nodes` holds the reference coordinates; on moving domains the current
/// coordinates are passed separately so the connectivity is shared between
/// time levels.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    /// Counterclockwise node-index triples.
    pub cells: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Longest edge of each cell on the reference coordinates.
    pub cell_diameters: Vec<f64>,
}

/// Signed area of a triangle.
pub fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Signed area of cell `k` on the given coordinate set.
pub fn cell_area(cells: &[[usize; 3]], coords: &[[f64; 2]], k: usize) -> f64 {
    let [i, j, l] = cells[k];
    signed_area(coords[i], coords[j], coords[l])
}

/// Longest edge of cell `k` on the given coordinate set.
pub fn cell_diameter(cells: &[[usize; 3]], coords: &[[f64; 2]], k: usize) -> f64 {
    let [i, j, l] = cells[k];
    let d = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    d(coords[i], coords[j])
        .max(d(coords[j], coords[l]))
        .max(d(coords[l], coords[i]))
}

impl Mesh {
    /// Builds a mesh and recomputes cell diameters. Runs the audit.
    pub fn new(
        nodes: Vec<[f64; 2]>,
        cells: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
    ) -> Result<Self> {
        let cell_diameters = (0..cells.len())
            .map(|k| cell_diameter(&cells, &nodes, k))
            .collect();
        let mesh = Mesh {
            nodes,
            cells,
            boundary_edges,
            cell_diameters,
        };
        mesh.audit()?;
        Ok(mesh)
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    /// Validates orientation, index ranges, edge manifoldness and the
    /// stored cell diameters.
    pub fn audit(&self) -> Result<()> {
        self.audit_on(&self.nodes)
    }

    /// Audit against an alternative coordinate set (same connectivity).
    pub fn audit_on(&self, coords: &[[f64; 2]]) -> Result<()> {
        if coords.len() != self.nodes.len() {
            return Err(Error::NodeCountMismatch(coords.len(), self.nodes.len()));
        }
        let n = coords.len();
        for (k, cell) in self.cells.iter().enumerate() {
            for &i in cell {
                if i >= n {
                    return Err(Error::InvalidMesh(format!(
                        "cell {k} references node {i} out of range"
                    )));
                }
            }
            let area = cell_area(&self.cells, coords, k);
            if area <= 0.0 {
                return Err(Error::InvertedCell { cell: k, area });
            }
        }
        if self.cell_diameters.len() != self.cells.len() {
            return Err(Error::InvalidMesh("cell_diameters length mismatch".into()));
        }
        // diameters are stored for the reference coordinates only
        if std::ptr::eq(coords.as_ptr(), self.nodes.as_ptr()) {
            for k in 0..self.cells.len() {
                let h = cell_diameter(&self.cells, coords, k);
                if (h - self.cell_diameters[k]).abs() > 1e-12 * h.max(1.0) {
                    return Err(Error::InvalidMesh(format!(
                        "cell {k}: stored diameter {} differs from recomputed {h}",
                        self.cell_diameters[k]
                    )));
                }
            }
        }
        // interior edges in exactly two cells, boundary edges in exactly one
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for cell in &self.cells {
            for e in 0..3 {
                let a = cell[e];
                let b = cell[(e + 1) % 3];
                let key = (a.min(b), a.max(b));
                *edge_count.entry(key).or_insert(0) += 1;
            }
        }
        for (&(a, b), &cnt) in &edge_count {
            if cnt > 2 {
                return Err(Error::InvalidMesh(format!(
                    "edge ({a},{b}) shared by {cnt} cells"
                )));
            }
        }
        let mut tagged: HashMap<(usize, usize), usize> = HashMap::new();
        for (i, be) in self.boundary_edges.iter().enumerate() {
            let [a, b] = be.nodes;
            if a >= n || b >= n {
                return Err(Error::InvalidMesh(format!(
                    "boundary edge {i} references node out of range"
                )));
            }
            let key = (a.min(b), a.max(b));
            match edge_count.get(&key) {
                Some(1) => {}
                Some(c) => {
                    return Err(Error::InvalidMesh(format!(
                        "boundary edge ({a},{b}) belongs to {c} cells"
                    )))
                }
                None => {
                    return Err(Error::InvalidMesh(format!(
                        "boundary edge ({a},{b}) is not a cell edge"
                    )))
                }
            }
            if tagged.insert(key, i).is_some() {
                return Err(Error::InvalidMesh(format!(
                    "boundary edge ({a},{b}) tagged twice"
                )));
            }
        }
        // every cell edge used once must be tagged
        for (&(a, b), &cnt) in &edge_count {
            if cnt == 1 && !tagged.contains_key(&(a, b)) {
                return Err(Error::InvalidMesh(format!(
                    "untagged boundary edge ({a},{b})"
                )));
            }
        }
        Ok(())
    }

    /// Writes the ASCII `ale-mesh 1` format.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "ale-mesh 1")?;
        writeln!(w, "nodes {}", self.nodes.len())?;
        for p in &self.nodes {
            writeln!(w, "{:.17e} {:.17e}", p[0], p[1])?;
        }
        writeln!(w, "cells {}", self.cells.len())?;
        for c in &self.cells {
            writeln!(w, "{} {} {}", c[0], c[1], c[2])?;
        }
        writeln!(w, "bedges {}", self.boundary_edges.len())?;
        for be in &self.boundary_edges {
            writeln!(w, "{} {} {}", be.nodes[0], be.nodes[1], be.tag.as_str())?;
        }
        Ok(())
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write(std::io::BufWriter::new(f))
    }

    /// Reads the ASCII `ale-mesh 1` format.
    pub fn read<R: std::io::Read>(r: R) -> Result<Self> {
        let reader = BufReader::new(r);
        let mut lines = reader
            .lines()
            .collect::<std::io::Result<Vec<String>>>()?
            .into_iter()
            .filter(|l| !l.trim().is_empty());
        let mut next = || {
            lines
                .next()
                .ok_or_else(|| Error::MeshFormat("unexpected end of file".into()))
        };
        let header = next()?;
        if header.trim() != "ale-mesh 1" {
            return Err(Error::MeshFormat(format!("bad header `{header}`")));
        }
        let count = |line: &str, kw: &str| -> Result<usize> {
            let mut it = line.split_whitespace();
            match (it.next(), it.next()) {
                (Some(k), Some(v)) if k == kw => v
                    .parse()
                    .map_err(|_| Error::MeshFormat(format!("bad count in `{line}`"))),
                _ => Err(Error::MeshFormat(format!("expected `{kw} N`, got `{line}`"))),
            }
        };
        let n_nodes = count(&next()?, "nodes")?;
        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            let line = next()?;
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::MeshFormat(format!("bad node line `{line}`")))?;
            if vals.len() != 2 {
                return Err(Error::MeshFormat(format!("bad node line `{line}`")));
            }
            nodes.push([vals[0], vals[1]]);
        }
        let n_cells = count(&next()?, "cells")?;
        let mut cells = Vec::with_capacity(n_cells);
        for _ in 0..n_cells {
            let line = next()?;
            let vals: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::MeshFormat(format!("bad cell line `{line}`")))?;
            if vals.len() != 3 {
                return Err(Error::MeshFormat(format!("bad cell line `{line}`")));
            }
            cells.push([vals[0], vals[1], vals[2]]);
        }
        let n_bedges = count(&next()?, "bedges")?;
        let mut boundary_edges = Vec::with_capacity(n_bedges);
        for _ in 0..n_bedges {
            let line = next()?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(Error::MeshFormat(format!("bad bedge line `{line}`")));
            }
            let a = toks[0]
                .parse()
                .map_err(|_| Error::MeshFormat(format!("bad bedge line `{line}`")))?;
            let b = toks[1]
                .parse()
                .map_err(|_| Error::MeshFormat(format!("bad bedge line `{line}`")))?;
            boundary_edges.push(BoundaryEdge {
                nodes: [a, b],
                tag: BoundaryTag::parse(toks[2])?,
            });
        }
        Mesh::new(nodes, cells, boundary_edges)
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| {
            Error::MeshFormat(format!("cannot open mesh file {}: {e}", path.display()))
        })?;
        Self::read(f)
    }
}

/// Affine map from the reference triangle to a physical cell.
#[derive(Debug, Clone, Copy)]
pub struct AffineMap {
    /// Physical image of the reference origin (vertex 0).
    pub origin: [f64; 2],
    /// Jacobian columns: jac[.][0] along xi, jac[.][1] along eta.
    pub jac: [[f64; 2]; 2],
    pub det: f64,
    /// Inverse Jacobian.
    pub inv: [[f64; 2]; 2],
}

impl AffineMap {
    pub fn map(&self, xi: f64, eta: f64) -> [f64; 2] {
        [
            self.origin[0] + self.jac[0][0] * xi + self.jac[0][1] * eta,
            self.origin[1] + self.jac[1][0] * xi + self.jac[1][1] * eta,
        ]
    }

    /// Physical gradient from a reference gradient: J^{-T} g.
    pub fn phys_grad(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv[0][0] * g[0] + self.inv[1][0] * g[1],
            self.inv[0][1] * g[0] + self.inv[1][1] * g[1],
        ]
    }

    /// Physical Laplacian from a reference Hessian (xx, xy, yy).
    /// For an affine map: tr(J^{-T} H J^{-1}).
    pub fn phys_laplacian(&self, h: [f64; 3]) -> f64 {
        let b = self.inv;
        // K = B^T H B with H symmetric 2x2, take trace
        let h00 = h[0];
        let h01 = h[1];
        let h11 = h[2];
        let k00 = b[0][0] * (h00 * b[0][0] + h01 * b[1][0])
            + b[1][0] * (h01 * b[0][0] + h11 * b[1][0]);
        let k11 = b[0][1] * (h00 * b[0][1] + h01 * b[1][1])
            + b[1][1] * (h01 * b[0][1] + h11 * b[1][1]);
        k00 + k11
    }
}

/// Affine map for cell `k` of the connectivity on the given coordinates.
pub fn reference_map(cells: &[[usize; 3]], coords: &[[f64; 2]], k: usize) -> Result<AffineMap> {
    let [i, j, l] = cells[k];
    let a = coords[i];
    let b = coords[j];
    let c = coords[l];
    let jac = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    if det.abs() < f64::EPSILON {
        return Err(Error::DegenerateCell { cell: k, area: det / 2.0 });
    }
    let inv = [
        [jac[1][1] / det, -jac[0][1] / det],
        [-jac[1][0] / det, jac[0][0] / det],
    ];
    Ok(AffineMap {
        origin: a,
        jac,
        det,
        inv,
    })
}

/// Structured triangulation of the unit square with `n x n` quads split
/// into two triangles each; the whole boundary is tagged Dirichlet.
pub fn unit_square_mesh(n: usize) -> Result<Mesh> {
    rect_mesh(n, n, [0.0, 0.0], [1.0, 1.0])
}

/// Structured triangulation of a rectangle. All boundary edges Dirichlet.
pub fn rect_mesh(nx: usize, ny: usize, lo: [f64; 2], hi: [f64; 2]) -> Result<Mesh> {
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([
                lo[0] + (hi[0] - lo[0]) * i as f64 / nx as f64,
                lo[1] + (hi[1] - lo[1]) * j as f64 / ny as f64,
            ]);
        }
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            cells.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            cells.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    let mut boundary_edges = Vec::new();
    for i in 0..nx {
        boundary_edges.push(BoundaryEdge {
            nodes: [idx(i, 0), idx(i + 1, 0)],
            tag: BoundaryTag::Dirichlet,
        });
        boundary_edges.push(BoundaryEdge {
            nodes: [idx(i, ny), idx(i + 1, ny)],
            tag: BoundaryTag::Dirichlet,
        });
    }
    for j in 0..ny {
        boundary_edges.push(BoundaryEdge {
            nodes: [idx(0, j), idx(0, j + 1)],
            tag: BoundaryTag::Dirichlet,
        });
        boundary_edges.push(BoundaryEdge {
            nodes: [idx(nx, j), idx(nx, j + 1)],
            tag: BoundaryTag::Dirichlet,
        });
    }
    Mesh::new(nodes, cells, boundary_edges)
}

/// Re-tags every boundary edge with one tag (e.g. all-Neumann tests).
pub fn retag_all(mesh: &mut Mesh, tag: BoundaryTag) {
    for be in &mut mesh.boundary_edges {
        be.tag = tag;
    }
}
