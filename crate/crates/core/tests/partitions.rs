use proptest::prelude::*;
use rtstat::maps::{cylinder_of, IntervalMap, MapSpec};
use rtstat::Partition;

fn gallery() -> Vec<IntervalMap<f64>> {
    ["doubling", "tent(2)", "tent(sqrt(2))", "logistic(4)", "logistic(3.8)", "skewlinear(1/3,2/3)", "cubic(4)"]
        .iter()
        .map(|s| s.parse::<MapSpec>().unwrap().build().unwrap())
        .collect()
}

#[test]
fn refinements_tile_the_domain_and_shrink() {
    for m in gallery() {
        let mut prev = f64::INFINITY;
        for n in 1..=10 {
            let p = Partition::at_level(&m, n);
            let cells = p.cells();
            let total: f64 = cells.iter().map(|c| c.interval.width()).sum();
            assert!((total - m.domain().width()).abs() < 1e-9, "{} level {n}", m.family());
            for w in cells.windows(2) {
                assert!(w[0].interval.hi <= w[1].interval.lo + 1e-12);
            }
            assert!(p.max_width() <= prev);
            prev = p.max_width();
        }
    }
}

#[test]
fn expanding_maps_have_geometric_cylinders() {
    let m: IntervalMap<f64> = "skewlinear(1/3,2/3)".parse::<MapSpec>().unwrap().build().unwrap();
    let p = Partition::at_level(&m, 12);
    assert_eq!(p.len(), 1 << 12);
    assert!((p.max_width() - (2.0f64 / 3.0).powi(12)).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cylinder_contains_its_point_and_follows_its_orbit(x in 0.0f64..1.0, n in 1usize..12, pick in 0usize..7) {
        let m = &gallery()[pick];
        let c = cylinder_of(m, x, n).unwrap();
        prop_assert!(c.interval.contains(x));
        prop_assert_eq!(c.itinerary.len(), n);
        let mut y = x;
        for &s in &c.itinerary {
            prop_assert_eq!(m.branch_index(y), s as usize);
            y = m.apply(y);
        }
        let p = Partition::at_level(m, n);
        if let Some(i) = p.locate(x) {
            let cell = &p.cells()[i];
            if !c.ambiguous && cell.interval.contains_interior(x) {
                prop_assert_eq!(&cell.itinerary, &c.itinerary);
            }
        }
    }

    #[test]
    fn single_precision_cylinders_agree(x in 0.01f64..0.99, n in 1usize..8) {
        let m64 = IntervalMap::<f64>::skew_linear(&[0.25, 0.75]).unwrap();
        let m32 = IntervalMap::<f32>::skew_linear(&[0.25, 0.75]).unwrap();
        let a = cylinder_of(&m64, x, n).unwrap();
        let b = cylinder_of(&m32, x as f32, n).unwrap();
        // f32 may pick the other side when x sits within rounding of a boundary
        if a.interval.depth(x) > 1e-5 {
            prop_assert_eq!(a.itinerary, b.itinerary);
            prop_assert!((a.interval.lo - b.interval.lo as f64).abs() < 1e-5);
        }
    }
}
