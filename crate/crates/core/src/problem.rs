//! Problem data: coefficients, boundary conditions and initial datum.

use std::sync::Arc;

use crate::mesh::BoundaryTag;

pub type ScalarFn = Arc<dyn Fn(f64, [f64; 2]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(f64, [f64; 2]) -> [f64; 2] + Send + Sync>;
pub type InitialFn = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;
pub type DirichletFn = Arc<dyn Fn(BoundaryTag, f64, [f64; 2]) -> f64 + Send + Sync>;

/// Transient convection-diffusion-reaction problem
/// du/dt - eps Lap(u) + b.grad(u) + c u = f.
#[derive(Clone)]
pub struct ProblemSpec {
    pub eps: f64,
    pub b: VectorFn,
    /// Analytic divergence of b, used by the coercivity check.
    pub div_b: ScalarFn,
    pub c: ScalarFn,
    pub f: ScalarFn,
    pub u0: InitialFn,
    /// Dirichlet values per boundary tag; Neumann edges are homogeneous.
    pub dirichlet: DirichletFn,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec").field("eps", &self.eps).finish()
    }
}

impl ProblemSpec {
    /// Constant-coefficient problem with homogeneous Dirichlet data.
    pub fn constant(eps: f64, b: [f64; 2], c: f64, f: f64) -> Self {
        ProblemSpec {
            eps,
            b: Arc::new(move |_, _| b),
            div_b: Arc::new(|_, _| 0.0),
            c: Arc::new(move |_, _| c),
            f: Arc::new(move |_, _| f),
            u0: Arc::new(|_| 0.0),
            dirichlet: Arc::new(|_, _, _| 0.0),
        }
    }
}
