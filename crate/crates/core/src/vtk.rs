//! Legacy ASCII VTK output: triangle mesh with the scalar field u and the
//! node velocity vector.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Writes one snapshot. `u` may be longer than the node count (quadratic
/// dofs); only the vertex values are emitted.
pub fn write_snapshot(
    path: &Path,
    mesh: &Mesh,
    coords: &[[f64; 2]],
    velocity: &[[f64; 2]],
    u: &[f64],
    title: &str,
) -> Result<()> {
    let n = mesh.n_nodes();
    if coords.len() != n || velocity.len() != n {
        return Err(Error::NodeCountMismatch(coords.len(), n));
    }
    if u.len() < n {
        return Err(Error::DimensionMismatch(format!(
            "field has {} values for {} nodes",
            u.len(),
            n
        )));
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# vtk DataFile Version 3.0")?;
    writeln!(f, "{title}")?;
    writeln!(f, "ASCII")?;
    writeln!(f, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(f, "POINTS {n} double")?;
    for p in coords {
        writeln!(f, "{:.17e} {:.17e} 0", p[0], p[1])?;
    }
    let m = mesh.n_cells();
    writeln!(f, "CELLS {m} {}", 4 * m)?;
    for c in &mesh.cells {
        writeln!(f, "3 {} {} {}", c[0], c[1], c[2])?;
    }
    writeln!(f, "CELL_TYPES {m}")?;
    for _ in 0..m {
        writeln!(f, "5")?;
    }
    writeln!(f, "POINT_DATA {n}")?;
    writeln!(f, "SCALARS u double 1")?;
    writeln!(f, "LOOKUP_TABLE default")?;
    for v in &u[..n] {
        writeln!(f, "{v:.17e}")?;
    }
    writeln!(f, "VECTORS mesh_velocity double")?;
    for w in velocity {
        writeln!(f, "{:.17e} {:.17e} 0", w[0], w[1])?;
    }
    Ok(())
}
