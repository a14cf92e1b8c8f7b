use finsler_core::calculus::{curvature, CurvatureKind};
use finsler_core::conformance::closed_forms::{randers_metric_tensor, sphere_christoffel, sphere_h_curvature};
use finsler_core::jets::ChartPoint;
use finsler_core::{build_metric, ConnectionName, ConnectionTriple, MetricSpec, PointGeometry};
use proptest::prelude::*;

fn geometry(spec: &MetricSpec, x: &[f64], y: &[f64]) -> PointGeometry {
    let m = build_metric(spec).unwrap();
    PointGeometry::new(&m, &ChartPoint::new(x.to_vec(), y.to_vec()).unwrap()).unwrap()
}

fn fiber() -> impl Strategy<Value = [f64; 2]> {
    (0.0f64..std::f64::consts::TAU, 0.5f64..2.0).prop_map(|(t, r)| [r * t.cos(), r * t.sin()])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn metric_tensor_is_fiber_homogeneous_of_degree_zero(
        x in prop::array::uniform2(-1.0f64..1.0),
        y in fiber(),
        lambda in 0.3f64..3.0,
    ) {
        let spec = MetricSpec::randers_x();
        let a = geometry(&spec, &x, &y);
        let b = geometry(&spec, &x, &[lambda * y[0], lambda * y[1]]);
        prop_assert!(a.g.value(&a.point).max_abs_diff(&b.g.value(&b.point)) < 1e-12);
    }

    #[test]
    fn spray_is_fiber_homogeneous_of_degree_two(
        x in prop::array::uniform2(-1.0f64..1.0),
        y in fiber(),
        lambda in 0.3f64..3.0,
    ) {
        let spec = MetricSpec::randers_x();
        let a = geometry(&spec, &x, &y);
        let b = geometry(&spec, &x, &[lambda * y[0], lambda * y[1]]);
        let scaled = a.spray.value(&a.point).scale(lambda * lambda);
        prop_assert!(scaled.max_abs_diff(&b.spray.value(&b.point)) < 1e-12 * (1.0 + scaled.max_abs()));
    }

    #[test]
    fn randers_metric_tensor_matches_closed_form(x in prop::array::uniform2(-1.0f64..1.0), y in fiber()) {
        let spec = MetricSpec::randers_x();
        let g = geometry(&spec, &x, &y);
        let closed = randers_metric_tensor(&spec, &g.point).unwrap();
        prop_assert!(closed.max_abs_diff(&g.g.value(&g.point)) < 1e-12);
    }

    #[test]
    fn euler_identity_for_the_metric(x in prop::array::uniform2(-1.0f64..1.0), y in fiber()) {
        let g = geometry(&MetricSpec::randers_sphere(), &[x[0] + 1.6, x[1]], &y);
        let gv = g.g.value(&g.point);
        let l = g.fundamental().unwrap().value();
        let quad: f64 = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| gv.get(&[i, j]) * y[i] * y[j]).sum();
        prop_assert!((quad - l * l).abs() < 1e-12 * l * l);
    }

    #[test]
    fn sphere_connections_reduce_to_levi_civita(x1 in 0.3f64..2.8, x2 in -1.0f64..1.0, y in fiber()) {
        let g = geometry(&MetricSpec::sphere(), &[x1, x2], &y);
        let lc = sphere_christoffel(&g.point);
        let riemann = sphere_h_curvature(&g.point);
        for name in ConnectionName::CANONICAL {
            let t = ConnectionTriple::canonical(&g, name).unwrap();
            prop_assert!(t.value(&g.point).f.max_abs_diff(&lc) < 1e-8);
            let k = curvature(&t, CurvatureKind::H, &g.point).unwrap();
            prop_assert!(k.max_abs_diff(&riemann) < 1e-7);
        }
    }
}

#[test]
fn riemannian_square_is_quadratic_in_y() {
    let m = build_metric(&MetricSpec::sphere()).unwrap();
    for (x, y) in [([0.7, 0.1], [1.0, -0.4]), ([2.1, -0.8], [0.3, 1.7]), ([1.3, 0.5], [-0.9, -0.2])] {
        let p = ChartPoint::new(x.to_vec(), y.to_vec()).unwrap();
        let l = m.eval_jet(&p, 3).unwrap();
        let square = &l * &l;
        for a in 0..=3 {
            let alpha = [0, 0, a, 3 - a];
            assert!(square.extract(&alpha).unwrap().abs() < 1e-9, "{alpha:?}");
        }
    }
}
