use approx::assert_relative_eq;
use capgrav::laminar::*;
use capgrav::profiles::{PGrid, Physics, ProfileFn};
use capgrav::Error;

fn fp() -> FixedPoint {
    FixedPoint::default()
}

fn t0() -> Physics {
    Physics::homogeneous(1.0, 1.0, -1.0, 0.0).unwrap()
}

fn with_profiles(g: f64, rho: &[f64], beta: &[f64], p0: f64, sigma: f64) -> Physics {
    Physics::new(
        g,
        1.0,
        p0,
        sigma,
        ProfileFn::poly(rho.to_vec(), p0, 0.0).unwrap(),
        ProfileFn::poly(beta.to_vec(), 0.0, -p0).unwrap(),
        1e-6,
    )
    .unwrap()
}

fn tenth_slope() -> Physics {
    with_profiles(1.0, &[1.0, -0.1], &[0.0], -1.0, 0.0)
}

#[test]
fn epsilon0_examples() {
    assert_relative_eq!(epsilon0(&t0()), 4.0, max_relative = 1e-14);
    assert_eq!(epsilon0(&Physics::homogeneous(0.0, 1.0, -1.0, 0.0).unwrap()), 0.0);
    assert_relative_eq!(epsilon0(&tenth_slope()), 4.0, max_relative = 1e-14);
}

#[test]
fn floor_examples() {
    assert_relative_eq!(lambda_floor(&t0()), 1e-6, max_relative = 1e-9);
    let beta_one = with_profiles(1.0, &[1.0], &[1.0], -1.0, 0.0);
    assert_relative_eq!(lambda_floor(&beta_one), 2.0 + 1e-6, max_relative = 1e-12);
    assert_relative_eq!(lambda_floor(&tenth_slope()), 4.0, max_relative = 1e-12);
}

#[test]
fn t0_flow_is_linear() {
    let grid = PGrid::new(-1.0, 32).unwrap();
    let flow = solve_laminar(&t0(), 4.0, &grid, fp()).unwrap();
    for (k, p) in grid.nodes().iter().enumerate() {
        assert_relative_eq!(flow.h[k], (p + 1.0) / 2.0, epsilon = 1e-13);
        assert_relative_eq!(flow.hp[k], 0.5, epsilon = 1e-13);
    }
    assert_relative_eq!(flow.h_top(), 0.5, epsilon = 1e-13);
    assert_relative_eq!(q_of_lambda(&t0(), &flow), 5.0, epsilon = 1e-12);
    let flow1 = solve_laminar(&t0(), 1.0, &grid, fp()).unwrap();
    assert_relative_eq!(flow1.q, 3.0, epsilon = 1e-12);
}

#[test]
fn pure_capillary_flow() {
    let phys = Physics::homogeneous(0.0, 1.0, -1.0, 1.0).unwrap();
    let grid = PGrid::new(-1.0, 32).unwrap();
    let flow = solve_laminar(&phys, 4.0, &grid, fp()).unwrap();
    assert_relative_eq!(flow.h_top(), 0.5, epsilon = 1e-13);
    assert_eq!(flow.q, 4.0);
}

#[test]
fn homogeneous_flow_needs_one_step() {
    let grid = PGrid::new(-1.0, 32).unwrap();
    let phys = with_profiles(1.0, &[1.0], &[0.3, -0.4], -1.0, 0.0);
    let once = solve_laminar(&phys, 3.0, &grid, FixedPoint { tol: 1e-12, max_iter: 1 }).unwrap();
    let many = solve_laminar(&phys, 3.0, &grid, fp()).unwrap();
    assert_eq!(once.h, many.h);
}

#[test]
fn below_floor_is_a_domain_error() {
    let grid = PGrid::new(-1.0, 32).unwrap();
    let err = solve_laminar(&tenth_slope(), 3.0, &grid, fp()).unwrap_err();
    assert!(matches!(err, Error::BelowFloor { .. }));
}

#[test]
fn stratified_flow_is_self_consistent() {
    let phys = tenth_slope();
    let grid = PGrid::new(-1.0, 64).unwrap();
    let flow = solve_laminar(&phys, 5.0, &grid, fp()).unwrap();
    assert!(flow.converged);
    assert_relative_eq!(flow.hp[grid.intervals()], 5.0f64.powf(-0.5), max_relative = 1e-12);
    for k in 0..grid.len() {
        assert_relative_eq!(flow.hp[k], (5.0 + flow.g[k]).powf(-0.5), max_relative = 1e-12);
        assert!(flow.gdot[k] <= 1e-15 && flow.gdot[k] >= -0.5, "Gdot {}", flow.gdot[k]);
    }
    // Halving the grid moves the flow by a discretization error only.
    let coarse = solve_laminar(&phys, 5.0, &PGrid::new(-1.0, 32).unwrap(), fp()).unwrap();
    assert!((coarse.h_top() - flow.h_top()).abs() < 1e-6);
}

#[test]
fn h_converges_at_second_order_or_better() {
    let phys = with_profiles(1.0, &[1.0, -0.4], &[0.5, 1.0], -1.0, 0.0);
    let lam = lambda_floor(&phys) + 2.0;
    let top = |n| solve_laminar(&phys, lam, &PGrid::new(-1.0, n).unwrap(), fp()).unwrap().h_top();
    let (a, b, c) = (top(16), top(32), top(64));
    let order = ((a - b) / (b - c)).abs().log2();
    assert!(order >= 2.0, "order {order}");
}

#[test]
fn derivatives_of_t0() {
    let grid = PGrid::new(-1.0, 64).unwrap();
    let flow = solve_laminar(&t0(), 4.0, &grid, fp()).unwrap();
    let d = lambda_derivatives(&t0(), &flow, fp()).unwrap();
    assert!(d.gdot.iter().all(|&v| v == 0.0));
    assert_relative_eq!(d.ydot[0], 1.0 / 16.0, max_relative = 1e-12);
    assert_relative_eq!(d.qdot, 0.875, max_relative = 1e-12);
    let flow1 = solve_laminar(&t0(), 1.0, &grid, fp()).unwrap();
    assert!(flow1.qdot.abs() < 1e-12);
}

#[test]
fn qdot_matches_closed_form_and_q_is_convex() {
    let grid = PGrid::new(-1.0, 64).unwrap();
    let lams: Vec<f64> = (0..20).map(|j| 0.3 + 0.25 * j as f64).collect();
    let flows: Vec<_> = lams.iter().map(|&l| solve_laminar(&t0(), l, &grid, fp()).unwrap()).collect();
    for (l, f) in lams.iter().zip(&flows) {
        assert_relative_eq!(f.qdot, 1.0 - l.powf(-1.5), epsilon = 1e-12);
        assert!(f.qdot < 1.0);
    }
    assert!(flows.windows(2).all(|w| w[1].qdot > w[0].qdot));
    for w in flows.windows(3) {
        assert!(w[0].q - 2.0 * w[1].q + w[2].q >= -1e-12);
    }
    let strat = tenth_slope();
    let qs: Vec<f64> = (0..12)
        .map(|j| solve_laminar(&strat, 4.1 + 0.3 * j as f64, &grid, fp()).unwrap().q)
        .collect();
    for w in qs.windows(3) {
        assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-10);
    }
}

#[test]
fn critical_values_match_closed_forms() {
    let grid = PGrid::new(-1.0, 128).unwrap();
    assert_relative_eq!(find_lambda0(&t0(), &grid, fp()).unwrap(), 1.0, max_relative = 1e-8);
    assert_relative_eq!(find_lambda_c(&t0(), &grid, fp()).unwrap(), 1.0, max_relative = 1e-8);
    assert_relative_eq!(sigma_c(&t0(), &grid, fp()).unwrap(), 1.0 / 3.0, max_relative = 1e-8);

    let g2 = Physics::homogeneous(2.0, 1.0, -1.0, 0.0).unwrap();
    let l0 = 2.0f64.powf(2.0 / 3.0);
    assert_relative_eq!(find_lambda0(&g2, &grid, fp()).unwrap(), l0, max_relative = 1e-8);
    assert_relative_eq!(find_lambda_c(&g2, &grid, fp()).unwrap(), l0, max_relative = 1e-8);

    let deep = Physics::homogeneous(1.0, 1.0, -2.0, 0.0).unwrap();
    let dgrid = PGrid::new(-2.0, 128).unwrap();
    assert_relative_eq!(
        sigma_c(&deep, &dgrid, fp()).unwrap(),
        2.0f64.powf(4.0 / 3.0) / 3.0,
        max_relative = 1e-8
    );
}

#[test]
fn stratified_lambda_c_lies_right_of_lambda0() {
    let grid = PGrid::new(-1.0, 64).unwrap();
    let phys = tenth_slope();
    let l0 = find_lambda0(&phys, &grid, fp());
    let lc = find_lambda_c(&phys, &grid, fp()).unwrap();
    // λ₀ may sit below the floor, in which case the floor bounds it.
    let l0 = l0.unwrap_or(lambda_floor(&phys));
    assert!(lc >= l0 - 1e-10, "lc {lc} l0 {l0}");
}

#[test]
fn zero_gravity_has_no_critical_values() {
    let phys = Physics::homogeneous(0.0, 1.0, -1.0, 1.0).unwrap();
    let grid = PGrid::new(-1.0, 32).unwrap();
    assert!(matches!(find_lambda0(&phys, &grid, fp()), Err(Error::NoMinimum)));
    assert!(matches!(find_lambda_c(&phys, &grid, fp()), Err(Error::Undefined(_))));
    assert!(matches!(sigma_c(&phys, &grid, fp()), Err(Error::Undefined(_))));
}

#[test]
fn size_condition_examples() {
    let grid = PGrid::new(-1.0, 64).unwrap();
    assert!(check_size_condition(&t0().with_sigma(10.0), &grid).satisfied);
    let hom = check_size_condition(&t0(), &grid);
    assert!(hom.margin.is_finite());
    let shallow = Physics::homogeneous(1.0, 1.0, -1e-3, 1.0).unwrap();
    assert!(check_size_condition(&shallow, &PGrid::new(-1e-3, 64).unwrap()).satisfied);
}
