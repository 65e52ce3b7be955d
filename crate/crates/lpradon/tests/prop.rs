use lpradon::grid::squared_coords_weight;
use lpradon::spline::{bspline3, catmull, interpolate_from_lattice, smear_to_lattice};
use lpradon::{CmpGather, RegularGrid2, SectorGeometry};
use ndarray::Array2;
use proptest::prelude::*;

proptest! {
    #[test]
    fn bspline3_partition_of_unity(frac in 0.0f64..1.0) {
        let s: f64 = (-3..=3).map(|i| bspline3(frac - i as f64)).sum();
        prop_assert!((s - 1.0).abs() < 1e-13);
    }

    #[test]
    fn smear_preserves_total_mass(
        vals in prop::collection::vec(-10.0f64..10.0, 1..20),
        coords in prop::collection::vec((3.0f64..12.0, 3.0f64..12.0), 20),
    ) {
        let n = vals.len();
        let xi: Vec<f64> = coords[..n].iter().map(|c| c.0).collect();
        let eta: Vec<f64> = coords[..n].iter().map(|c| c.1).collect();
        let field = smear_to_lattice(&vals, &xi, &eta, 16, 16);
        let total: f64 = field.iter().sum();
        let expected: f64 = vals.iter().sum();
        prop_assert!((total - expected).abs() < 1e-10 * (1.0 + expected.abs()));
    }

    #[test]
    fn smear_and_interpolate_are_adjoint(
        pts in prop::collection::vec((2.5f64..12.5, 2.5f64..12.5, -5.0f64..5.0), 1..15),
        field_seed in 0u64..1000,
    ) {
        let (m, n) = (16usize, 17usize);
        let xi: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let eta: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let vals: Vec<f64> = pts.iter().map(|p| p.2).collect();
        let mut field = Array2::<f64>::zeros((m, n));
        let mut state = field_seed.wrapping_mul(2654435761).wrapping_add(1);
        for v in field.iter_mut() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            *v = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
        }
        let smeared = smear_to_lattice(&vals, &xi, &eta, m, n);
        let interped = interpolate_from_lattice(&field, &xi, &eta);
        let lhs: f64 = smeared.iter().zip(field.iter()).map(|(a, b)| a * b).sum();
        let rhs: f64 = vals.iter().zip(interped.iter()).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() < 1e-11 * (1.0 + lhs.abs()));
    }

    #[test]
    fn catmull_is_exact_on_linear_traces(
        slope in -3.0f64..3.0,
        offset in -2.0f64..2.0,
        pos in 1.0f64..13.0,
    ) {
        let trace: Vec<f64> = (0..16).map(|i| offset + slope * i as f64).collect();
        let exact = offset + slope * pos;
        prop_assert!((catmull(&trace, pos) - exact).abs() < 1e-11);
    }

    #[test]
    fn soft_threshold_shrinks_toward_zero(v in -100.0f64..100.0, mu in 0.0f64..10.0) {
        let s = lpradon::soft_threshold(v, mu);
        prop_assert!(s.abs() <= v.abs());
        prop_assert!(s * v >= 0.0);
        prop_assert!((v - s).abs() <= mu / 2.0 + 1e-12);
    }

    #[test]
    fn hyperbola_incidence_holds_for_random_parameters(
        tau in 0.2f64..0.9,
        q in 0.25f64..0.85,
        x in 0.0f64..1.0,
    ) {
        let g = SectorGeometry::for_band(0.2, 0.9, 0.15 * 0.15, 1.0, 0.02).unwrap();
        let t = (tau * tau + q * q * x * x).sqrt();
        prop_assume!(t <= 1.0);
        let (theta, p) = g.theta_rho_radon(tau, q);
        let (phi, _, r) = g.phi_eta_data(t, x);
        prop_assert!((r * (theta - phi).cos() - p).abs() < 1e-9);
    }

    #[test]
    fn flat_round_trip(flat in prop::collection::vec(-1e6f64..1e6, 12)) {
        let grid = RegularGrid2::new(4, 3, 0.0, 0.1, 0.0, 0.1).unwrap();
        let g = CmpGather::from_flat(grid, flat.clone()).unwrap();
        prop_assert_eq!(g.to_flat(), flat);
    }

    #[test]
    fn squared_coords_weight_matches_definition(
        samples in prop::collection::vec(-5.0f64..5.0, 24),
        j in 1usize..6,
    ) {
        let grid = RegularGrid2::new(4, 6, 0.0, 0.1, 0.0, 0.25).unwrap();
        let g = CmpGather::from_flat(grid, samples).unwrap();
        let x = grid.coord2(j);
        let w = squared_coords_weight(&g, 2, j);
        prop_assert!((w - g.data[(2, j)] / (2.0 * x)).abs() < 1e-12);
    }
}
