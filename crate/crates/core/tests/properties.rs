use internex_core::{scenario_preset, solve, InternalExchange, MarketParams, ScenarioName, Side, SolverGrid};

fn solved(internal: InternalExchange, bound: i64) -> (internex_core::ValueSurface, internex_core::ExecutionRegion) {
    let m = MarketParams::desk_calibration();
    let grid = SolverGrid::new(&m, &internal, 0.01, -bound, bound).unwrap();
    solve(&m, &internal, &grid).unwrap()
}

#[test]
fn doubling_the_inventory_bounds_leaves_the_core_unchanged() {
    for scenario in [ScenarioName::Iceberg, ScenarioName::Twap] {
        let internal = InternalExchange::Enabled(scenario_preset(scenario, 0.0, 0.0));
        let (narrow, narrow_region) = solved(internal, 30);
        let (wide, wide_region) = solved(internal, 60);
        let mut worst = 0.0f64;
        for q in -10..=10 {
            for l in 0..=1 {
                let (a, b) = (narrow.h(0, q, l).unwrap(), wide.h(0, q, l).unwrap());
                worst = worst.max((a - b).abs() / b.abs().max(1.0));
            }
        }
        assert!(worst < 1e-6, "{scenario}: {worst:e}");
        assert_eq!(narrow_region.boundary(0, 1), wide_region.boundary(0, 1));
    }
}

#[test]
fn iceberg_asks_are_lower_just_above_the_boundary() {
    let internal = InternalExchange::Enabled(scenario_preset(ScenarioName::Iceberg, 0.0, 0.0));
    let (surface, region) = solved(internal, 30);
    let (reference, _) = solved(InternalExchange::Disabled, 30);
    let q = region.boundary(0, 1).unwrap() + 1;
    for z in [1, 5, 10] {
        let with_order = surface.optimal_depth(0, q, 1, Side::Ask, z).unwrap();
        let without = reference.optimal_depth(0, q, 0, Side::Ask, z).unwrap();
        assert!(with_order <= without, "z={z}: {with_order} > {without}");
    }
}

#[test]
fn boundary_moves_down_as_the_offset_rises() {
    for scenario in [ScenarioName::Iceberg, ScenarioName::Twap] {
        let mut last = i64::MAX;
        for rho in [-0.2, -0.1, 0.0, 0.1, 0.2] {
            let (_, region) = solved(InternalExchange::Enabled(scenario_preset(scenario, rho, 0.0)), 30);
            let q = region.boundary(0, 1).unwrap_or(i64::MIN);
            assert!(q <= last, "{scenario} rho={rho}: {q} > {last}");
            last = q;
        }
    }
}
