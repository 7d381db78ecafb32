use frontfix::stencil::{
    certify_scheme, near_boundary_row, scheme_a, scheme_b, scheme_c, NearBoundaryOrder,
};
use frontfix::{BoundaryValues, CompactSystem, ExactNodes, GridSpec, LhsVariant, NodeDistribution};
use num_rational::BigRational;
use num_traits::ToPrimitive;

const FIVE: [&str; 4] = ["2,3,4,5,6", "2,4,5,6,7", "2,4,6,8,10", "3,4,5,6,7"];
const FOUR: [&str; 7] = ["2,3,4,5", "2,4,5,6", "2,4,6,8", "3,4,5,6", "3,5,7,9", "3,6,9,12", "4,5,6,7"];

fn exact(list: &str) -> ExactNodes {
    let g = list
        .split(',')
        .map(|s| BigRational::from_integer(s.parse::<i64>().unwrap().into()))
        .collect();
    NodeDistribution::new(g).unwrap()
}

#[test]
fn five_node_schemes_certify() {
    for g in FIVE {
        let d = NodeDistribution::parse(g).unwrap();
        assert!(certify_scheme(&scheme_a(&d).unwrap(), 7).passes(1e-10), "A {g}");
        assert!(certify_scheme(&scheme_b(&d).unwrap(), 6).passes(1e-10), "B {g}");
    }
}

#[test]
fn four_node_schemes_certify() {
    for g in FOUR {
        let d = NodeDistribution::parse(g).unwrap();
        let c = scheme_c(&d).unwrap();
        assert_eq!(c.len(), 4);
        assert!(certify_scheme(&c, 6).passes(1e-10), "C {g}");
        // The first order not annihilated has a visible residual.
        let residual = certify_scheme(&c, 7);
        assert!(residual.residual(7).unwrap().abs() > 1e-6, "C {g}");
    }
}

#[test]
fn exact_rational_weights_match_floats() {
    for g in FIVE {
        let f = scheme_a(&NodeDistribution::parse(g).unwrap()).unwrap();
        let e = scheme_a(&exact(g)).unwrap();
        assert_eq!(e.residual, BigRational::from_integer(0.into()));
        for (a, b) in f.weights.iter().zip(&e.weights) {
            let b = b.to_f64().unwrap();
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{g}: {a} vs {b}");
        }
        let c = e.truncation_constant().to_f64().unwrap();
        assert!((f.truncation_constant() - c).abs() <= 1e-10 * c.abs());
    }
    for g in FOUR {
        let f = scheme_c(&NodeDistribution::parse(g).unwrap()).unwrap();
        let e = scheme_c(&exact(g)).unwrap();
        for (a, b) in f.weights.iter().zip(&e.weights) {
            let b = b.to_f64().unwrap();
            assert!((a - b).abs() <= 1e-11 * b.abs().max(1.0), "{g}: {a} vs {b}");
        }
    }
}

#[test]
fn equispaced_middle_weight_is_1250_over_27() {
    // Scaling every offset leaves the weights unchanged, so (2,4,..,10)
    // carries the equispaced weights (625, -625/4, 1250/27, -625/64, 1).
    let s = scheme_a(&exact("2,4,6,8,10")).unwrap();
    assert_eq!(s.weights[2], BigRational::new(1250.into(), 27.into()));
    assert_ne!(s.weights[2], BigRational::new(1024.into(), 27.into()));
}

#[test]
fn near_boundary_rows_sum_to_twelve() {
    for o in [NearBoundaryOrder::Fourth, NearBoundaryOrder::Fifth, NearBoundaryOrder::Sixth] {
        let s: f64 = near_boundary_row(o).lhs::<f64>().iter().sum();
        assert!((s - 12.0).abs() < 1e-13, "{o:?}");
    }
}

#[test]
fn compact_operator_exact_on_quadratics() {
    for (x_max, h) in [(3.0, 0.1), (3.0, 0.0125), (1.0, 1.0 / 12.0)] {
        for v in [LhsVariant::B5, LhsVariant::B6] {
            let grid = GridSpec::from_step(x_max, h).unwrap();
            let sys = CompactSystem::assemble(grid, v).unwrap();
            let f = |x: f64| 2.5 * x * x - x + 4.0;
            let inner: Vec<f64> = (1..grid.n_x()).map(|i| f(grid.x(i))).collect();
            let bc = BoundaryValues { left: f(0.0), right: f(x_max) };
            for d in sys.second_derivative(&inner, bc).unwrap() {
                assert!((d - 5.0).abs() < 1e-7, "h = {h}, {v:?}: {d}");
            }
        }
    }
}
