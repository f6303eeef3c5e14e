//! Unstructured triangulation of planar domains with holes: Bowyer-Watson
//! Delaunay over seeded points, centroid classification against the domain
//! predicate, and boundary recovery by midpoint insertion.

use crate::error::{Error, Result};
use crate::mesh::{signed_area, BoundaryEdge, BoundaryTag, Mesh};
use std::collections::HashMap;

/// Even-odd ray casting. Points exactly on the polygon are unspecified;
/// callers test centroids, which stay away from edges.
pub fn point_in_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn circumcircle_contains(a: [f64; 2], b: [f64; 2], c: [f64; 2], p: [f64; 2]) -> bool {
    // incircle determinant, sign-corrected for orientation
    let ax = a[0] - p[0];
    let ay = a[1] - p[1];
    let bx = b[0] - p[0];
    let by = b[1] - p[1];
    let cx = c[0] - p[0];
    let cy = c[1] - p[1];
    let det = (ax * ax + ay * ay) * (bx * cy - cx * by)
        - (bx * bx + by * by) * (ax * cy - cx * ay)
        + (cx * cx + cy * cy) * (ax * by - bx * ay);
    let orient = signed_area(a, b, c);
    if orient >= 0.0 {
        det > 0.0
    } else {
        det < 0.0
    }
}

/// Delaunay triangulation by incremental point insertion. Quadratic in the
/// worst case, adequate at desk scale. Returns positively oriented cells.
pub fn delaunay(points: &[[f64; 2]]) -> Result<Vec<[usize; 3]>> {
    if points.len() < 3 {
        return Err(Error::MeshGeneration("need at least 3 points".into()));
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in points {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1.0);
    let cx = 0.5 * (lo[0] + hi[0]);
    let cy = 0.5 * (lo[1] + hi[1]);
    // super-triangle well clear of every circumcircle of interest
    let m = 50.0 * span;
    let n = points.len();
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.push([cx - 2.0 * m, cy - m]);
    pts.push([cx + 2.0 * m, cy - m]);
    pts.push([cx, cy + 2.0 * m]);
    let mut tris: Vec<[usize; 3]> = vec![[n, n + 1, n + 2]];

    for i in 0..n {
        let p = pts[i];
        let mut bad = Vec::new();
        for (t, tri) in tris.iter().enumerate() {
            if circumcircle_contains(pts[tri[0]], pts[tri[1]], pts[tri[2]], p) {
                bad.push(t);
            }
        }
        // boundary of the cavity: edges of bad triangles not shared twice
        let mut edge_count: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for &t in &bad {
            let tri = tris[t];
            for e in 0..3 {
                let u = tri[e];
                let v = tri[(e + 1) % 3];
                let key = (u.min(v), u.max(v));
                edge_count
                    .entry(key)
                    .and_modify(|(_, c)| *c += 1)
                    .or_insert((if u < v { 0 } else { 1 }, 1));
            }
        }
        let mut cavity: Vec<(usize, usize)> = Vec::new();
        for &t in &bad {
            let tri = tris[t];
            for e in 0..3 {
                let u = tri[e];
                let v = tri[(e + 1) % 3];
                let key = (u.min(v), u.max(v));
                if edge_count[&key].1 == 1 {
                    cavity.push((u, v));
                }
            }
        }
        bad.sort_unstable();
        for &t in bad.iter().rev() {
            tris.swap_remove(t);
        }
        for (u, v) in cavity {
            // keep the cavity edge orientation so the new cell is ccw
            tris.push([u, v, i]);
        }
    }

    let mut out = Vec::new();
    for tri in tris {
        if tri.iter().any(|&v| v >= n) {
            continue;
        }
        let area = signed_area(pts[tri[0]], pts[tri[1]], pts[tri[2]]);
        if area.abs() < 1e-14 * span * span {
            continue;
        }
        if area > 0.0 {
            out.push(tri);
        } else {
            out.push([tri[0], tri[2], tri[1]]);
        }
    }
    if out.is_empty() {
        return Err(Error::MeshGeneration("empty triangulation".into()));
    }
    Ok(out)
}

const MERGE_TOL: f64 = 1e-9;

fn dedupe(points: Vec<[f64; 2]>) -> (Vec<[f64; 2]>, Vec<usize>) {
    let mut kept: Vec<[f64; 2]> = Vec::with_capacity(points.len());
    let mut index = Vec::with_capacity(points.len());
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let cell = |p: [f64; 2]| {
        (
            (p[0] / (10.0 * MERGE_TOL)).floor() as i64,
            (p[1] / (10.0 * MERGE_TOL)).floor() as i64,
        )
    };
    for p in points {
        let (ci, cj) = cell(p);
        let mut found = None;
        'search: for di in -1..=1 {
            for dj in -1..=1 {
                if let Some(ids) = grid.get(&(ci + di, cj + dj)) {
                    for &id in ids {
                        let q = kept[id];
                        if (q[0] - p[0]).abs() < MERGE_TOL && (q[1] - p[1]).abs() < MERGE_TOL {
                            found = Some(id);
                            break 'search;
                        }
                    }
                }
            }
        }
        match found {
            Some(id) => index.push(id),
            None => {
                kept.push(p);
                grid.entry((ci, cj)).or_default().push(kept.len() - 1);
                index.push(kept.len() - 1);
            }
        }
    }
    (kept, index)
}

/// Closed boundary loops plus classification callbacks describing a domain.
pub struct DomainSpec<'a> {
    /// Each loop is a closed polyline (consecutive points are mandatory
    /// boundary segments; last connects back to first).
    pub loops: Vec<Vec<[f64; 2]>>,
    /// Interior seed points; points too close to the boundary are dropped.
    pub interior: Vec<[f64; 2]>,
    /// Domain membership test, evaluated at cell centroids.
    pub inside: Box<dyn Fn([f64; 2]) -> bool + 'a>,
    /// Boundary tag from an edge midpoint.
    pub tag: Box<dyn Fn([f64; 2]) -> BoundaryTag + 'a>,
    /// Interior seeds closer than this factor times the local boundary
    /// spacing are discarded to protect element quality.
    pub clearance: f64,
}

/// Boundary-conforming triangulation. Retries with segment midpoint
/// insertion when a mandatory boundary segment is missing from the
/// triangulation, up to a fixed number of rounds.
pub fn triangulate_domain(spec: &DomainSpec) -> Result<Mesh> {
    let mut loops = spec.loops.clone();
    for round in 0..12 {
        let boundary: Vec<[f64; 2]> = loops.iter().flatten().copied().collect();
        // local boundary spacing at each boundary point
        let spacing: Vec<f64> = loops
            .iter()
            .flat_map(|lp| {
                let n = lp.len();
                (0..n).map(move |i| {
                    let prev = lp[(i + n - 1) % n];
                    let next = lp[(i + 1) % n];
                    let d1 = ((lp[i][0] - prev[0]).powi(2) + (lp[i][1] - prev[1]).powi(2)).sqrt();
                    let d2 = ((lp[i][0] - next[0]).powi(2) + (lp[i][1] - next[1]).powi(2)).sqrt();
                    d1.min(d2)
                })
            })
            .collect();
        let mut points = boundary.clone();
        'seeds: for &s in &spec.interior {
            for (bp, sp) in boundary.iter().zip(&spacing) {
                let d2 = (s[0] - bp[0]).powi(2) + (s[1] - bp[1]).powi(2);
                let min_d = spec.clearance * sp;
                if d2 < min_d * min_d {
                    continue 'seeds;
                }
            }
            points.push(s);
        }
        let (points, _) = dedupe(points);
        let cells_all = delaunay(&points)?;
        let cells: Vec<[usize; 3]> = cells_all
            .into_iter()
            .filter(|&[a, b, c]| {
                let cx = (points[a][0] + points[b][0] + points[c][0]) / 3.0;
                let cy = (points[a][1] + points[b][1] + points[c][1]) / 3.0;
                (spec.inside)([cx, cy])
            })
            .collect();
        if cells.is_empty() {
            return Err(Error::MeshGeneration("no cells inside the domain".into()));
        }

        // verify every mandatory segment is an edge of the kept cells
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &cells {
            for e in 0..3 {
                let u = tri[e];
                let v = tri[(e + 1) % 3];
                *edges.entry((u.min(v), u.max(v))).or_insert(0) += 1;
            }
        }
        let locate = |p: [f64; 2]| -> Option<usize> {
            points.iter().position(|q| {
                (q[0] - p[0]).abs() < MERGE_TOL && (q[1] - p[1]).abs() < MERGE_TOL
            })
        };
        let mut missing: Vec<(usize, usize, [f64; 2])> = Vec::new();
        for (li, lp) in loops.iter().enumerate() {
            for i in 0..lp.len() {
                let a = lp[i];
                let b = lp[(i + 1) % lp.len()];
                let (ia, ib) = match (locate(a), locate(b)) {
                    (Some(x), Some(y)) => (x, y),
                    _ => {
                        return Err(Error::MeshGeneration(format!(
                            "boundary point of loop {li} merged away near ({:.3}, {:.3})",
                            a[0], a[1]
                        )))
                    }
                };
                if !edges.contains_key(&(ia.min(ib), ia.max(ib))) {
                    missing.push((li, i, [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]));
                }
            }
        }
        if !missing.is_empty() {
            if round == 11 {
                let (_, _, p) = missing[0];
                return Err(Error::MeshGeneration(format!(
                    "boundary not recovered after refinement near ({:.4}, {:.4})",
                    p[0], p[1]
                )));
            }
            // split the missing segments and retry
            for (li, i, mid) in missing.into_iter().rev() {
                loops[li].insert(i + 1, mid);
            }
            continue;
        }

        // drop unused points and build the mesh
        let mut remap = vec![usize::MAX; points.len()];
        let mut nodes = Vec::new();
        let mut new_cells = Vec::with_capacity(cells.len());
        for tri in &cells {
            let mut mapped = [0usize; 3];
            for (slot, &v) in mapped.iter_mut().zip(tri.iter()) {
                if remap[v] == usize::MAX {
                    remap[v] = nodes.len();
                    nodes.push(points[v]);
                }
                *slot = remap[v];
            }
            new_cells.push(mapped);
        }
        let mut boundary_edges = Vec::new();
        for (&(u, v), &count) in &edges {
            if count == 1 {
                let mid = [
                    (points[u][0] + points[v][0]) / 2.0,
                    (points[u][1] + points[v][1]) / 2.0,
                ];
                boundary_edges.push(BoundaryEdge {
                    nodes: [remap[u], remap[v]],
                    tag: (spec.tag)(mid),
                });
            }
        }
        boundary_edges.sort_by_key(|e| (e.nodes[0].min(e.nodes[1]), e.nodes[0].max(e.nodes[1])));
        let mut fixed = vec![false; nodes.len()];
        for be in &boundary_edges {
            fixed[be.nodes[0]] = true;
            fixed[be.nodes[1]] = true;
        }
        smooth_interior(&mut nodes, &new_cells, &fixed, 8);
        return Mesh::new(nodes, new_cells, boundary_edges);
    }
    unreachable!("bounded retry loop");
}

/// Laplacian smoothing of interior nodes. Each node moves to the average of
/// its edge neighbors; a move is rejected if it would make any incident cell
/// degenerate. Boundary-recovered Delaunay meshes can carry sliver cells
/// where the boundary spacing is much finer than the seed spacing; a few
/// rounds of smoothing removes them.
fn smooth_interior(nodes: &mut [[f64; 2]], cells: &[[usize; 3]], fixed: &[bool], rounds: usize) {
    let n = nodes.len();
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, tri) in cells.iter().enumerate() {
        for e in 0..3 {
            let a = tri[e];
            let b = tri[(e + 1) % 3];
            if !neighbors[a].contains(&b) {
                neighbors[a].push(b);
            }
            if !neighbors[b].contains(&a) {
                neighbors[b].push(a);
            }
            incident[a].push(k);
        }
    }
    for _ in 0..rounds {
        for i in 0..n {
            if fixed[i] || neighbors[i].is_empty() {
                continue;
            }
            let mut c = [0.0f64; 2];
            for &j in &neighbors[i] {
                c[0] += nodes[j][0];
                c[1] += nodes[j][1];
            }
            let inv = 1.0 / neighbors[i].len() as f64;
            let old = nodes[i];
            nodes[i] = [c[0] * inv, c[1] * inv];
            let valid = incident[i].iter().all(|&k| {
                let [a, b, c] = cells[k];
                signed_area(nodes[a], nodes[b], nodes[c]) > 1e-14
            });
            if !valid {
                nodes[i] = old;
            }
        }
    }
}
