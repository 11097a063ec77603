use superfluor_core::bosonic::{validate_against_full, PopulationMap, ValidationOptions};
use superfluor_core::series::uniform_grid;
use superfluor_core::RateSet;

fn options(map: PopulationMap) -> ValidationOptions {
    ValidationOptions {
        map,
        ..ValidationOptions::default()
    }
}

#[test]
fn single_excitation_without_dephasing() {
    let grid = uniform_grid(0.3, 601).unwrap();
    for map in [PopulationMap::PopulationWeighted, PopulationMap::MeanTrajectory] {
        let r = validate_against_full(200, 1, &RateSet::new(1.0, 10.0, 0.0), &grid, &options(map)).unwrap();
        assert!(r.relative_deviation.nb < 0.01, "{map:?} {:?}", r.relative_deviation);
        assert!(r.max_full_dark < 1.0 / 200.0);
    }
}

#[test]
fn two_excitations_under_strong_dephasing() {
    let grid = uniform_grid(0.3, 601).unwrap();
    for map in [PopulationMap::PopulationWeighted, PopulationMap::MeanTrajectory] {
        let r = validate_against_full(200, 2, &RateSet::new(1.0, 10.0, 100.0), &grid, &options(map)).unwrap();
        assert!(r.passed, "{map:?} {:?}", r.relative_deviation);
    }
}

#[test]
fn dark_branching_at_hundred_emitters() {
    let grid = uniform_grid(0.5, 1001).unwrap();
    let r = validate_against_full(100, 1, &RateSet::new(1.0, 10.0, 100.0), &grid, &ValidationOptions::default()).unwrap();
    assert!(r.relative_deviation.nd < 0.05, "{:?}", r.relative_deviation);
}

#[test]
fn weak_dephasing_exposes_the_hard_core_offset() {
    // A symmetric k-excitation start carries n_d = k(k-1)/N in the full
    // model, large next to the little dark population weak dephasing makes.
    let grid = uniform_grid(0.3, 301).unwrap();
    let rates = RateSet::new(1.0, 1.0, 10.0);
    let one = validate_against_full(200, 1, &rates, &grid, &ValidationOptions::default()).unwrap();
    let two = validate_against_full(200, 2, &rates, &grid, &ValidationOptions::default()).unwrap();
    assert!(one.relative_deviation.nd < 0.03);
    assert!(two.relative_deviation.nd > 2.0 * one.relative_deviation.nd);
    assert!(two.relative_deviation.nb < 0.01);
}
