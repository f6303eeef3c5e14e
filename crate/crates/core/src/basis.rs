//! Lagrange P1/P2 basis functions on the reference triangle.
//!
//! Local dof ordering: vertices 0,1,2 followed (for P2) by the edge
//! midpoints m01, m12, m20.

use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;

pub const MAX_LOCAL_DOFS: usize = 6;

/// Basis values, reference gradients and reference Hessians tabulated at
/// the points of a quadrature rule.
#[derive(Debug, Clone)]
pub struct ShapeTable {
    pub degree: usize,
    pub n_dofs: usize,
    /// values[q][i]
    pub values: Vec<Vec<f64>>,
    /// grads[q][i] = (d phi_i / d xi, d phi_i / d eta)
    pub grads: Vec<Vec<[f64; 2]>>,
    /// Constant reference Hessians (d2/dxi2, d2/dxi deta, d2/deta2); zero for P1.
    pub hessians: Vec<[f64; 3]>,
}

/// Basis values at a single reference point.
pub fn eval_values(degree: usize, xi: f64, eta: f64) -> Result<Vec<f64>> {
    let l0 = 1.0 - xi - eta;
    let l1 = xi;
    let l2 = eta;
    match degree {
        1 => Ok(vec![l0, l1, l2]),
        2 => Ok(vec![
            l0 * (2.0 * l0 - 1.0),
            l1 * (2.0 * l1 - 1.0),
            l2 * (2.0 * l2 - 1.0),
            4.0 * l0 * l1,
            4.0 * l1 * l2,
            4.0 * l2 * l0,
        ]),
        d => Err(Error::UnsupportedDegree(d)),
    }
}

/// Reference gradients at a single point.
pub fn eval_grads(degree: usize, xi: f64, eta: f64) -> Result<Vec<[f64; 2]>> {
    // gradients of barycentric coordinates w.r.t. (xi, eta)
    const G0: [f64; 2] = [-1.0, -1.0];
    const G1: [f64; 2] = [1.0, 0.0];
    const G2: [f64; 2] = [0.0, 1.0];
    let l0 = 1.0 - xi - eta;
    let l1 = xi;
    let l2 = eta;
    match degree {
        1 => Ok(vec![G0, G1, G2]),
        2 => {
            let v = |a: f64, g: [f64; 2]| [(4.0 * a - 1.0) * g[0], (4.0 * a - 1.0) * g[1]];
            let m = |a: f64, ga: [f64; 2], b: f64, gb: [f64; 2]| {
                [4.0 * (a * gb[0] + b * ga[0]), 4.0 * (a * gb[1] + b * ga[1])]
            };
            Ok(vec![
                v(l0, G0),
                v(l1, G1),
                v(l2, G2),
                m(l0, G0, l1, G1),
                m(l1, G1, l2, G2),
                m(l2, G2, l0, G0),
            ])
        }
        d => Err(Error::UnsupportedDegree(d)),
    }
}

/// Constant reference Hessians (xx, xy, yy). Zero for P1.
pub fn eval_hessians(degree: usize) -> Result<Vec<[f64; 3]>> {
    const G0: [f64; 2] = [-1.0, -1.0];
    const G1: [f64; 2] = [1.0, 0.0];
    const G2: [f64; 2] = [0.0, 1.0];
    let outer = |a: [f64; 2], b: [f64; 2]| [a[0] * b[0], a[0] * b[1], a[1] * b[1]];
    match degree {
        1 => Ok(vec![[0.0; 3]; 3]),
        2 => {
            let v = |g: [f64; 2]| {
                let o = outer(g, g);
                [4.0 * o[0], 4.0 * o[1], 4.0 * o[2]]
            };
            let m = |ga: [f64; 2], gb: [f64; 2]| {
                let o1 = outer(ga, gb);
                let o2 = outer(gb, ga);
                [4.0 * (o1[0] + o2[0]), 4.0 * (o1[1] + o2[1]), 4.0 * (o1[2] + o2[2])]
            };
            Ok(vec![v(G0), v(G1), v(G2), m(G0, G1), m(G1, G2), m(G2, G0)])
        }
        d => Err(Error::UnsupportedDegree(d)),
    }
}

/// Tabulates basis values and reference derivatives at quadrature points.
pub fn shape_values(degree: usize, quad: &QuadratureRule) -> Result<ShapeTable> {
    let n_dofs = match degree {
        1 => 3,
        2 => 6,
        d => return Err(Error::UnsupportedDegree(d)),
    };
    let mut values = Vec::with_capacity(quad.len());
    let mut grads = Vec::with_capacity(quad.len());
    for q in 0..quad.len() {
        let [xi, eta] = quad.xy(q);
        values.push(eval_values(degree, xi, eta)?);
        grads.push(eval_grads(degree, xi, eta)?);
    }
    Ok(ShapeTable {
        degree,
        n_dofs,
        values,
        grads,
        hessians: eval_hessians(degree)?,
    })
}
