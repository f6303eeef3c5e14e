//! SUPG stabilization parameter and the admissibility checks it must obey.

use crate::error::{Error, Result};
use crate::mesh::{reference_map, Mesh};
use crate::problem::ProblemSpec;
use crate::quadrature::QuadratureRule;

/// Below this magnitude a convection or reaction sup-norm is treated as zero
/// and the corresponding term/cap is skipped.
pub const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct StabilizationConfig {
    /// Dimensionless user scale for the streamline-diffusion base value.
    pub delta0: f64,
    /// Coercivity constant; also used as the mu_0 of the reaction cap.
    pub mu: f64,
    /// Inverse-inequality constant for the diffusion cap.
    pub c_inv: f64,
    /// Enables the delta_K <= dt/4 cap required by the fully discrete schemes.
    pub dt_cap_enabled: bool,
}

impl StabilizationConfig {
    /// Conservative defaults: c_inv = 8 for P1, 20 for P2.
    pub fn for_degree(delta0: f64, degree: usize) -> Self {
        StabilizationConfig {
            delta0,
            mu: 0.0,
            c_inv: if degree == 1 { 8.0 } else { 20.0 },
            dt_cap_enabled: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta0 < 0.0 {
            return Err(Error::InvalidParameter("delta0 must be >= 0".into()));
        }
        if self.c_inv <= 0.0 {
            return Err(Error::InvalidParameter("c_inv must be > 0".into()));
        }
        if self.mu < 0.0 {
            return Err(Error::InvalidParameter("mu must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CoercivityReport {
    /// min over quadrature points of (c - 0.5 div b).
    pub mu: f64,
    /// Set when the minimum is <= 0; the run proceeds regardless.
    pub violated: bool,
}

/// Evaluates the coercivity constant mu = min (c - div(b)/2) over all
/// quadrature points of the mesh at time `t`.
pub fn check_coercivity_assumption(
    problem: &ProblemSpec,
    mesh: &Mesh,
    coords: &[[f64; 2]],
    quad: &QuadratureRule,
    t: f64,
) -> CoercivityReport {
    let mut mu = f64::INFINITY;
    for k in 0..mesh.n_cells() {
        let map = match reference_map(&mesh.cells, coords, k) {
            Ok(m) => m,
            Err(_) => continue,
        };
        for q in 0..quad.len() {
            let [xi, eta] = quad.xy(q);
            let x = map.map(xi, eta);
            let v = (problem.c)(t, x) - 0.5 * (problem.div_b)(t, x);
            if v < mu {
                mu = v;
            }
        }
    }
    if !mu.is_finite() {
        mu = 0.0;
    }
    CoercivityReport {
        mu,
        violated: mu <= 0.0,
    }
}

/// Per-cell SUPG parameter.
///
/// Base value delta0 * h_K / (2 |b - w|_inf,K), clipped by the reaction cap
/// mu_0 / (2 |c|_inf^2), the inverse-inequality cap h_K^2 / (2 eps c_inv^2)
/// and, when enabled, dt/4. A vanishing convection norm yields 0.
pub fn delta_k(
    h_k: f64,
    conv_norm: f64,
    c_norm: f64,
    eps: f64,
    dt: f64,
    config: &StabilizationConfig,
) -> Result<f64> {
    if h_k <= 0.0 {
        return Err(Error::InvalidParameter(format!("nonpositive h_K {h_k}")));
    }
    if eps <= 0.0 {
        return Err(Error::InvalidParameter(format!("nonpositive eps {eps}")));
    }
    if dt <= 0.0 {
        return Err(Error::NonpositiveDt(dt));
    }
    if conv_norm < DEGENERATE_NORM {
        return Ok(0.0);
    }
    let mut delta = config.delta0 * h_k / (2.0 * conv_norm);
    if c_norm >= DEGENERATE_NORM {
        delta = delta.min(config.mu / (2.0 * c_norm * c_norm));
    }
    delta = delta.min(h_k * h_k / (2.0 * eps * config.c_inv * config.c_inv));
    if config.dt_cap_enabled {
        delta = delta.min(dt / 4.0);
    }
    Ok(delta.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::unit_square_mesh;
    use std::sync::Arc;

    #[test]
    fn coercivity_constant_convection() {
        let mesh = unit_square_mesh(2).unwrap();
        let quad = QuadratureRule::degree5();
        let p = ProblemSpec::constant(1.0, [1.0, 0.0], 1.0, 0.0);
        let rep = check_coercivity_assumption(&p, &mesh, &mesh.nodes, &quad, 0.0);
        assert!((rep.mu - 1.0).abs() < 1e-14);
        assert!(!rep.violated);
    }

    #[test]
    fn coercivity_violation_flagged_when_c_zero() {
        let mesh = unit_square_mesh(2).unwrap();
        let quad = QuadratureRule::degree5();
        let p = ProblemSpec::constant(1e-6, [1.0, 0.0], 0.0, 0.0);
        let rep = check_coercivity_assumption(&p, &mesh, &mesh.nodes, &quad, 0.0);
        assert_eq!(rep.mu, 0.0);
        assert!(rep.violated);
    }

    #[test]
    fn coercivity_divergence_free_variable_field() {
        let mesh = unit_square_mesh(2).unwrap();
        let quad = QuadratureRule::degree5();
        let mut p = ProblemSpec::constant(1.0, [0.0, 0.0], 1.0, 0.0);
        p.b = Arc::new(|_, x| [x[0], -x[1]]);
        p.div_b = Arc::new(|_, _| 0.0); // d(x1)/dx1 + d(-x2)/dx2 = 0
        let rep = check_coercivity_assumption(&p, &mesh, &mesh.nodes, &quad, 0.0);
        assert!((rep.mu - 1.0).abs() < 1e-14);
    }

    #[test]
    fn delta_zero_without_convection() {
        let cfg = StabilizationConfig { delta0: 5.0, mu: 0.0, c_inv: 20.0, dt_cap_enabled: true };
        let d = delta_k(0.1, 0.0, 0.0, 1e-6, 0.01, &cfg).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn dt_cap_binds_on_benchmark_like_cells() {
        // eps = 1e-6, c = 0, delta0 = 5, dt = 0.01: dt/4 = 0.0025 binds
        // whenever 5 h / 2 > 0.0025 and h^2/(2e-6 c_inv^2) > 0.0025.
        let cfg = StabilizationConfig { delta0: 5.0, mu: 0.0, c_inv: 20.0, dt_cap_enabled: true };
        for h in [0.01, 0.05, 0.2] {
            let d = delta_k(h, 1.0, 0.0, 1e-6, 0.01, &cfg).unwrap();
            let expect = (5.0 * h / 2.0)
                .min(h * h / (2.0 * 1e-6 * 400.0))
                .min(0.0025);
            assert!((d - expect).abs() < 1e-15);
            if h > 1e-3 {
                assert_eq!(d, 0.0025);
            }
        }
    }

    #[test]
    fn diffusion_cap_binds() {
        let cfg = StabilizationConfig { delta0: 1e9, mu: 0.0, c_inv: 10.0, dt_cap_enabled: false };
        let d = delta_k(0.1, 1.0, 0.0, 1.0, 1.0, &cfg).unwrap();
        assert!((d - 5e-5).abs() < 1e-18);
    }

    #[test]
    fn monotone_in_delta0_and_h() {
        let mk = |delta0: f64| StabilizationConfig {
            delta0,
            mu: 1.0,
            c_inv: 20.0,
            dt_cap_enabled: false,
        };
        let mut prev = 0.0;
        for d0 in [0.0, 0.5, 1.0, 5.0, 10.0] {
            let d = delta_k(0.1, 2.0, 0.5, 1.0, 0.01, &mk(d0)).unwrap();
            assert!(d >= prev);
            prev = d;
        }
        let cfg = mk(1.0);
        let mut prev = 0.0;
        for h in [0.01, 0.02, 0.05, 0.1] {
            let d = delta_k(h, 2.0, 0.5, 1.0, 0.01, &cfg).unwrap();
            assert!(d >= prev);
            prev = d;
        }
    }

    #[test]
    fn invalid_inputs_rejected() {
        let cfg = StabilizationConfig { delta0: 1.0, mu: 0.0, c_inv: 20.0, dt_cap_enabled: true };
        assert!(delta_k(0.0, 1.0, 0.0, 1.0, 0.01, &cfg).is_err());
        assert!(delta_k(0.1, 1.0, 0.0, 0.0, 0.01, &cfg).is_err());
        assert!(delta_k(0.1, 1.0, 0.0, 1.0, 0.0, &cfg).is_err());
    }
}
