use approx::assert_abs_diff_eq;
use capgrav::profiles::{b_min, build_b, quad, PGrid, Physics, ProfileFn, ProfileSpec};
use capgrav::Error;
use proptest::prelude::*;

#[test]
fn polynomial_and_table_evaluation() {
    let one = ProfileFn::poly(vec![1.0], -1.0, 0.0).unwrap();
    let id = ProfileFn::poly(vec![0.0, 1.0], -1.0, 0.0).unwrap();
    let sq = ProfileFn::poly(vec![0.0, 0.0, 1.0], -1.0, 0.0).unwrap();
    let tab = ProfileFn::table(vec![-1.0, 0.0], vec![2.0, 3.0]).unwrap();

    assert_eq!(one.eval(-0.5).unwrap(), 1.0);
    assert_eq!(id.eval(-0.5).unwrap(), -0.5);
    assert_eq!(tab.eval(-1.0).unwrap(), 2.0);
    assert_eq!(id.deriv(-0.3).unwrap(), 1.0);
    assert_eq!(one.deriv(-0.3).unwrap(), 0.0);
    assert_eq!(sq.deriv(-1.0).unwrap(), -2.0);
}

#[test]
fn evaluation_outside_the_domain_is_rejected() {
    let f = ProfileFn::poly(vec![1.0], -1.0, 0.0).unwrap();
    assert!(matches!(f.eval(0.5), Err(Error::Domain { .. })));
    assert!(matches!(f.deriv(-1.5), Err(Error::Domain { .. })));
    assert!(matches!(f.eval(f64::NAN), Err(Error::Domain { .. })));
}

#[test]
fn table_spec_must_span_the_domain() {
    let spec = ProfileSpec::Table { p: vec![-0.5, 0.0], v: vec![1.0, 1.0] };
    assert!(spec.build(-1.0, 0.0).is_err());
    let spec = ProfileSpec::Table { p: vec![-1.0, -0.4, 0.0], v: vec![1.2, 1.1, 1.0] };
    assert!(spec.build(-1.0, 0.0).is_ok());
}

#[test]
fn physics_rejects_unstable_or_nonpositive_density() {
    let beta = ProfileFn::constant(0.0, 0.0, 1.0).unwrap();
    let rising = ProfileFn::poly(vec![1.0, 0.3], -1.0, 0.0).unwrap();
    assert!(Physics::new(1.0, 1.0, -1.0, 0.0, rising, beta.clone(), 1e-6).is_err());
    let negative = ProfileFn::poly(vec![-1.0], -1.0, 0.0).unwrap();
    assert!(Physics::new(1.0, 1.0, -1.0, 0.0, negative, beta.clone(), 1e-6).is_err());
    let rho = ProfileFn::constant(1.0, -1.0, 0.0).unwrap();
    assert!(Physics::new(-1.0, 1.0, -1.0, 0.0, rho.clone(), beta.clone(), 1e-6).is_err());
    assert!(Physics::new(1.0, 0.0, -1.0, 0.0, rho.clone(), beta.clone(), 1e-6).is_err());
    assert!(Physics::new(1.0, 1.0, -1.0, -0.1, rho, beta, 1e-6).is_err());
}

#[test]
fn grid_shape_rules() {
    assert!(PGrid::new(-1.0, 8).is_ok());
    assert!(PGrid::new(-1.0, 6).is_err());
    assert!(PGrid::new(-1.0, 9).is_err());
    assert!(PGrid::new(1.0, 8).is_err());
    let g = PGrid::new(-2.0, 8).unwrap();
    assert_eq!(g.node(0), -2.0);
    assert_eq!(g.node(8), 0.0);
    assert_eq!(g.refined().intervals(), 16);
}

#[test]
fn antiderivative_examples() {
    let grid = PGrid::new(-1.0, 16).unwrap();

    let zero = build_b(&ProfileFn::constant(0.0, 0.0, 1.0).unwrap(), &grid).unwrap();
    for p in grid.nodes() {
        assert_eq!(zero.value(p), 0.0);
    }

    let one = build_b(&ProfileFn::constant(1.0, 0.0, 1.0).unwrap(), &grid).unwrap();
    for p in grid.nodes() {
        assert_abs_diff_eq!(one.value(p), p, epsilon = 1e-14);
    }
    assert_abs_diff_eq!(b_min(&one), -1.0, epsilon = 1e-14);

    let lin = build_b(&ProfileFn::poly(vec![0.0, 1.0], 0.0, 1.0).unwrap(), &grid).unwrap();
    for p in grid.nodes() {
        assert_abs_diff_eq!(lin.value(p), -p * p / 2.0, epsilon = 1e-14);
    }
    assert_abs_diff_eq!(b_min(&lin), -0.5, epsilon = 1e-14);
}

#[test]
fn simpson_examples() {
    let grid = PGrid::new(-1.0, 8).unwrap();
    let nodes = grid.nodes();
    let ones = vec![1.0; nodes.len()];
    let p2: Vec<f64> = nodes.iter().map(|p| p * p).collect();
    assert_abs_diff_eq!(quad(&grid, &ones).unwrap(), 1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(quad(&grid, &nodes).unwrap(), -0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(quad(&grid, &p2).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
    assert!(matches!(quad(&grid, &ones[1..]), Err(Error::Shape(_))));
}

proptest! {
    #[test]
    fn simpson_order_on_sine_ladders(p0 in -3.0f64..-0.2, k in 0.5f64..4.0, phase in 0.0f64..3.0) {
        let exact = ((k * p0 + phase).cos() - phase.cos()) / k;
        let err = |n: usize| {
            let grid = PGrid::new(p0, n).unwrap();
            let s: Vec<f64> = grid.nodes().iter().map(|p| (k * p + phase).sin()).collect();
            (quad(&grid, &s).unwrap() - exact).abs()
        };
        let (e1, e2) = (err(16), err(32));
        // Skip ladders already at rounding level.
        prop_assume!(e2 > 1e-13);
        prop_assert!((e1 / e2).log2() >= 3.8, "order {}", (e1 / e2).log2());
    }

    #[test]
    fn antiderivative_differentiates_back(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0) {
        let beta = ProfileFn::poly(vec![a, b, c], 0.0, 1.0).unwrap();
        let err = |n: usize| {
            let grid = PGrid::new(-1.0, n).unwrap();
            let bt = build_b(&beta, &grid).unwrap();
            let h = grid.step();
            (1..n).map(|k| {
                let p = grid.node(k);
                let d = (bt.value(grid.node(k + 1)) - bt.value(grid.node(k - 1))) / (2.0 * h);
                (d - beta.value(-p)).abs()
            }).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(16), err(32));
        prop_assert!(e1 <= 1e-12 || e1 / e2 > 3.5, "ratio {}", e1 / e2);
        prop_assert!(e2 <= c.abs() * 1e-2 + 1e-12);
    }
}
