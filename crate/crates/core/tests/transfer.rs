use rtstat::inducing::{build_inducing_scheme, Extension, SchemeOptions};
use rtstat::maps::IntervalMap;
use rtstat::transfer::{
    invariant_density, transfer_apply, GridFunction, Grid, PowerOptions, Potential, RychlikSystem, UlamOperator,
};
use rtstat::Interval;

#[test]
fn geometric_operator_is_conformal() {
    for m in [IntervalMap::<f64>::doubling(), IntervalMap::skew_linear(&[0.2, 0.45, 0.35]).unwrap()] {
        let sys = RychlikSystem::from_full_branch_map(&m, Potential::geometric()).unwrap();
        let grid = Grid::new(m.domain(), 2000);
        for psi in [
            GridFunction::constant(grid, 1.0),
            GridFunction::from_fn(grid, |x| (3.0 * x).exp()),
            GridFunction::from_fn(grid, |x| if x < 0.3 { 2.0 } else { 0.5 }),
        ] {
            let (l, rem) = transfer_apply(&sys, &psi);
            assert_eq!(rem, 0.0);
            assert!((l.integral() - psi.integral()).abs() < 1e-3 * psi.integral(), "{}", m.family());
        }
    }
}

#[test]
fn ulam_density_converges_under_refinement() {
    let m = IntervalMap::<f64>::logistic(4.0).unwrap();
    // sin²(π/8) is a preimage of the fixed point 3/4, so returns to Y are
    // finitely many per level
    let y = Interval::new((std::f64::consts::PI / 8.0).sin().powi(2), 0.5);
    let s = build_inducing_scheme(&m, Extension::FirstReturn(y), SchemeOptions::default()).unwrap();
    let sys = RychlikSystem::from_scheme(&m, &s, Potential::geometric()).unwrap();
    let d = m.density().unwrap();
    let mu_y = d.measure(&y);
    let mut errs = Vec::new();
    for bins in [256, 1024] {
        let op = UlamOperator::new(&sys, bins);
        let est = invariant_density(&op, PowerOptions::default()).unwrap();
        let exact = GridFunction {
            grid: op.grid,
            values: (0..bins).map(|j| d.measure(&op.grid.bin(j)) / op.grid.width() / mu_y).collect(),
        };
        errs.push(est.density.l1_distance(&exact));
        assert!((est.lambda - 1.0).abs() < 1e-6, "{}", est.lambda);
    }
    assert!(errs[1] < errs[0], "{errs:?}");
}
