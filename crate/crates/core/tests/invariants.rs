mod common;

use atlas_geodesic::analytic::{CircleAtlas, FlatAtlas, SphereAtlas};
use atlas_geodesic::metric::{curve_length_discrete, jacobian_fd, pullback_metric, riemannian_inner, SegmentSpec};
use atlas_geodesic::neural::load_neural_atlas;
use atlas_geodesic::{AmbientPoint, Atlas, LatentCoord};
use common::{fixture, sphere_north_jacobian};
use proptest::prelude::*;

fn analytic(which: u8) -> Box<dyn Atlas> {
    match which % 3 {
        0 => Box::new(FlatAtlas),
        1 => Box::new(CircleAtlas),
        _ => Box::new(SphereAtlas),
    }
}

fn ambient_vec(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-4.0..4.0f64, dim)
}

fn on_sphere() -> impl Strategy<Value = [f64; 3]> {
    (ambient_vec(3)).prop_filter_map("degenerate", |v| {
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        (n > 1e-3).then(|| [v[0] / n, v[1] / n, v[2] / n])
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn partition_is_a_simplex_point(which in 0u8..3, raw in ambient_vec(3)) {
        let atlas = analytic(which);
        let x = AmbientPoint(raw[..atlas.dims().ambient].to_vec());
        let w = atlas.partition(&x).unwrap();
        let sum: f64 = w.as_slice().iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-9);
        prop_assert!(w.as_slice().iter().all(|&v| v >= 0.0));
        prop_assert!(!atlas.chart_membership(&x, 0.4).unwrap().is_empty());
    }

    #[test]
    fn neural_partition_is_a_simplex_point(raw in ambient_vec(3)) {
        let atlas = load_neural_atlas(fixture("mlp_ref.json")).unwrap();
        let w = atlas.partition(&AmbientPoint(raw.clone())).unwrap();
        prop_assert!((w.as_slice().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!(!atlas.chart_membership(&AmbientPoint(raw), 0.4).unwrap().is_empty());
    }

    #[test]
    fn sphere_charts_invert_on_their_domain(p in on_sphere()) {
        let x = AmbientPoint(p.to_vec());
        for chart in SphereAtlas.chart_membership(&x, 0.05).unwrap() {
            let z = SphereAtlas.encode(chart, &x).unwrap();
            let back = SphereAtlas.decode(&LatentCoord::new(chart, z)).unwrap();
            prop_assert!(back.distance(&x) <= 1e-9);
        }
    }

    #[test]
    fn sphere_transition_map_is_inversion(z in prop::array::uniform2(-5.0..5.0f64)) {
        let r2 = z[0] * z[0] + z[1] * z[1];
        prop_assume!(r2 > 1e-6);
        let x = SphereAtlas.decode(&LatentCoord::new(0, z.to_vec())).unwrap();
        let w = SphereAtlas.encode(1, &x).unwrap();
        prop_assert!((w[0] - z[0] / r2).abs() <= 1e-9 * (1.0 + 1.0 / r2));
        prop_assert!((w[1] - z[1] / r2).abs() <= 1e-9 * (1.0 + 1.0 / r2));
    }

    #[test]
    fn circle_charts_invert(theta in -3.1f64..3.1) {
        let x = AmbientPoint(vec![theta.cos(), theta.sin()]);
        let z0 = CircleAtlas.encode(0, &x).unwrap();
        prop_assert!((z0[0] - theta).abs() <= 1e-12);
        for chart in CircleAtlas.chart_membership(&x, 1e-6).unwrap() {
            let z = CircleAtlas.encode(chart, &x).unwrap();
            let back = CircleAtlas.decode(&LatentCoord::new(chart, z)).unwrap();
            prop_assert!(back.distance(&x) <= 1e-12);
        }
    }

    #[test]
    fn metric_is_symmetric_and_psd(chart in 0usize..2, z in prop::array::uniform2(-3.0..3.0f64),
                                    u in prop::array::uniform2(-2.0..2.0f64),
                                    v in prop::array::uniform2(-2.0..2.0f64)) {
        let p = LatentCoord::new(chart, z.to_vec());
        let g = pullback_metric(&SphereAtlas, &p, 1e-5).unwrap();
        prop_assert_eq!(g.max_asymmetry(), 0.0);
        prop_assert!(g.min_eigenvalue() >= -1e-12);
        let a = riemannian_inner(&SphereAtlas, &p, &u, &v, 1e-5).unwrap();
        let b = riemannian_inner(&SphereAtlas, &p, &v, &u, 1e-5).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn fd_jacobian_matches_hand_derivation(z in prop::array::uniform2(-3.0..3.0f64)) {
        let jac = jacobian_fd(&SphereAtlas, &LatentCoord::new(0, z.to_vec()), 1e-5).unwrap();
        let exact = sphere_north_jacobian(z);
        for i in 0..3 {
            for j in 0..2 {
                prop_assert!((jac[(i, j)] - exact[i][j]).abs() <= 1e-5);
            }
        }
    }

    #[test]
    fn discrete_length_bounds_the_chord(which in 0u8..3, chart in 0usize..2, steps in 1usize..40,
                                        za in prop::array::uniform2(-3.0..3.0f64),
                                        zb in prop::array::uniform2(-3.0..3.0f64)) {
        let atlas = analytic(which);
        let dims = atlas.dims();
        let chart = chart % dims.m;
        let (za, zb) = (za[..dims.d].to_vec(), zb[..dims.d].to_vec());
        let seg = SegmentSpec { chart, z_a: za.clone(), z_b: zb.clone(), steps };
        let length = curve_length_discrete(atlas.as_ref(), &seg).unwrap();
        let a = atlas.decode(&LatentCoord::new(chart, za)).unwrap();
        let b = atlas.decode(&LatentCoord::new(chart, zb)).unwrap();
        prop_assert!(length >= a.distance(&b) * (1.0 - 1e-12));
    }
}

#[test]
fn length_converges_under_refinement() {
    let seg = |steps| SegmentSpec {
        chart: 0,
        z_a: vec![-1.3, 0.4],
        z_b: vec![2.1, -0.7],
        steps,
    };
    let coarse = curve_length_discrete(&SphereAtlas, &seg(480)).unwrap();
    let fine = curve_length_discrete(&SphereAtlas, &seg(960)).unwrap();
    assert!((fine - coarse).abs() <= 1e-4);
    assert!(fine >= coarse);
}
