//! Quadrature rules on the reference triangle (0,0)-(1,0)-(0,1).

/// A quadrature rule given in barycentric coordinates.
///
/// Weights sum to one; integrals over a physical cell are
/// `area(K) * sum_q w_q f(x_q)`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    /// Barycentric coordinates (l0, l1, l2) of each point.
    pub points: Vec<[f64; 3]>,
    /// Normalized weights, summing to 1.
    pub weights: Vec<f64>,
    /// Highest polynomial degree integrated exactly.
    pub degree: usize,
}

impl QuadratureRule {
    /// Seven-point rule, exact for polynomials up to degree 5.
    pub fn degree5() -> Self {
        let s15 = 15.0_f64.sqrt();
        // orbit with barycentric value (6 - sqrt(15))/21 repeated twice
        let b1 = (6.0 - s15) / 21.0;
        let a1 = 1.0 - 2.0 * b1;
        let w1 = (155.0 - s15) / 1200.0;
        // orbit with (6 + sqrt(15))/21 repeated twice
        let b2 = (6.0 + s15) / 21.0;
        let a2 = 1.0 - 2.0 * b2;
        let w2 = (155.0 + s15) / 1200.0;
        let third = 1.0 / 3.0;
        QuadratureRule {
            points: vec![
                [third, third, third],
                [a1, b1, b1],
                [b1, a1, b1],
                [b1, b1, a1],
                [a2, b2, b2],
                [b2, a2, b2],
                [b2, b2, a2],
            ],
            weights: vec![9.0 / 40.0, w1, w1, w1, w2, w2, w2],
            degree: 5,
        }
    }

    /// Reference coordinates (xi, eta) of point `q`.
    pub fn xy(&self, q: usize) -> [f64; 2] {
        let p = self.points[q];
        [p[1], p[2]]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
