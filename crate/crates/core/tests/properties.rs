//! Property-based invariants for the geometry helpers and the sparse
//! matrix kernels.

use proptest::prelude::*;

use ale_supg::assembly::{assemble_supg_form, AssemblyContext};
use ale_supg::cases::{beam_displacement, closest_beam_point, distance_to_beam, motion_cutoff};
use ale_supg::linalg::CsrMatrix;
use ale_supg::mesh::unit_square_mesh;
use ale_supg::problem::ProblemSpec;
use ale_supg::space::build_function_space;
use ale_supg::stab::StabilizationConfig;

fn test_matrix() -> CsrMatrix {
    let mesh = unit_square_mesh(4).unwrap();
    let space = build_function_space(&mesh, 2).unwrap();
    let ctx = AssemblyContext::new(&mesh, &space).unwrap();
    let problem = ProblemSpec::constant(0.1, [1.0, -0.5], 1.0, 0.0);
    let stab = StabilizationConfig::for_degree(1.0, 2);
    assemble_supg_form(&ctx, &mesh.nodes, None, &problem, Some(&stab), 0.0, 0.1).unwrap()
}

proptest! {
    /// The reported closest point lies on the solid and realizes the
    /// reported distance.
    #[test]
    fn closest_beam_point_is_consistent(
        px in -6.0f64..19.0,
        py in -6.0f64..6.0,
    ) {
        let p = [px, py];
        let (q, d) = closest_beam_point(p);
        let euclid = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        prop_assert!((d - euclid).abs() <= 1e-12);
        prop_assert!(distance_to_beam(q) <= 1e-12);
        prop_assert!((d - distance_to_beam(p)).abs() <= 1e-12);
    }

    /// The prescribed solid motion vanishes at the rest phases of the
    /// period and everywhere on the clamped block.
    #[test]
    fn beam_displacement_rest_and_clamp(
        px in -6.0f64..19.0,
        py in -6.0f64..6.0,
        t in 0.0f64..10.0,
    ) {
        let q = closest_beam_point([px, py]).0;
        for rest in [0.0, 2.5, 5.0, 7.5] {
            let d = beam_displacement(q, rest);
            prop_assert!(d[0].abs() <= 1e-12 && d[1].abs() <= 1e-12);
        }
        if q[0] <= 0.5 {
            let d = beam_displacement(q, t);
            prop_assert!(d[0] == 0.0 && d[1] == 0.0);
        }
    }

    /// The motion cutoff is a partition between 1 on the solid and 0 far
    /// away, monotonically non-increasing in the distance.
    #[test]
    fn motion_cutoff_monotone(a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(motion_cutoff(lo) >= motion_cutoff(hi));
        prop_assert!((motion_cutoff(0.0) - 1.0).abs() <= 1e-15);
        prop_assert!(motion_cutoff(hi) >= 0.0 && motion_cutoff(lo) <= 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// quadratic_form(x, y) agrees with x . (A y) for the assembled
    /// stabilized operator.
    #[test]
    fn quadratic_form_matches_spmv(seed in any::<u64>()) {
        let a = test_matrix();
        let n = a.n_rows;
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            (z ^ (z >> 31)) as f64 / u64::MAX as f64 - 0.5
        };
        let x: Vec<f64> = (0..n).map(|_| next()).collect();
        let y: Vec<f64> = (0..n).map(|_| next()).collect();
        let via_form = a.quadratic_form(&x, &y).unwrap();
        let ay = a.spmv(&y).unwrap();
        let via_spmv: f64 = x.iter().zip(&ay).map(|(u, v)| u * v).sum();
        let scale = x.iter().map(|v| v.abs()).sum::<f64>() + 1.0;
        prop_assert!((via_form - via_spmv).abs() <= 1e-12 * scale);
    }
}
