use proptest::prelude::*;

use superfluor_core::analysis::{effective_delay_time, sweep_phase_diagram, DephasingGrid, SweepSpec};
use superfluor_core::dicke::{enumerate_dicke_space, DickeIndex};
use superfluor_core::piqs::{evolve_populations_with, initial_dicke_state, PiqsOptions};
use superfluor_core::{run, RateSet, RunConfig, SolverKind};

fn delay(solver: SolverKind, n: u32, rates: RateSet, samples: usize) -> f64 {
    let mut config = RunConfig::new(solver, n, rates, 4.0 * rates.t0());
    config.samples = samples;
    config.rtol = 1e-10;
    effective_delay_time(&run(&config).unwrap()).unwrap().time().unwrap()
}

#[test]
fn delay_time_is_stable_under_grid_refinement() {
    for (solver, n, rates) in [
        (SolverKind::Cumulant(2), 1000, RateSet::new(1.0, 10.0, 100.0)),
        (SolverKind::Cumulant(2), 200, RateSet::new(1.0, 10.0, 500.0)),
        (SolverKind::Piqs, 40, RateSet::new(1.0, 0.1, 10.0)),
    ] {
        let coarse = delay(solver, n, rates, 401);
        let fine = delay(solver, n, rates, 1601);
        assert!((coarse - fine).abs() / fine < 5e-3, "{solver} N={n}: {coarse} vs {fine}");
        assert!(fine <= 4.0 * rates.t0());
    }
}

#[test]
fn delay_time_grows_with_dephasing() {
    let mut spec = SweepSpec::new(
        vec![100, 400, 1000],
        DephasingGrid::RelativeToThreshold((0..8).map(|k| 10f64.powf(-1.0 + k as f64 / 3.5)).collect()),
        1.0,
        10.0,
        SolverKind::Cumulant(2),
    );
    spec.samples = 201;
    let rows = sweep_phase_diagram(&spec).unwrap();
    for row in rows.chunks(8) {
        let t: Vec<f64> = row.iter().map(|r| r.t_d_eff.unwrap()).collect();
        assert!(t.windows(2).all(|w| w[1] >= w[0]), "N={}: {t:?}", row[0].n);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn populations_stay_on_the_simplex_and_energy_falls(
        n in 2u32..24,
        pick in 0usize..1000,
        gs in 0.0f64..3.0,
        gl in 0.0f64..3.0,
        gd in 0.0f64..3.0,
    ) {
        let states = enumerate_dicke_space(n).unwrap();
        let start = states[pick % states.len()];
        let rates = RateSet::new(gs, gl, gd);
        let grid: Vec<f64> = (0..=30).map(|k| k as f64 * 0.05).collect();
        let mut last = f64::INFINITY;
        let mut ok = Ok(());
        evolve_populations_with(&initial_dicke_state(n, start).unwrap(), &rates, &grid, &PiqsOptions::with_rtol(1e-10), |pv| {
            let jz = pv.moments()[0];
            if pv.min() < -1e-9 || pv.normalization_error() > 1e-10 || jz > last + 1e-9 {
                ok = Err(format!("t={} min p {} norm {} jz {jz} after {last}", pv.time, pv.min(), pv.normalization_error()));
            }
            last = jz;
            Ok(())
        }).unwrap();
        prop_assert!(ok.is_ok(), "{:?}", ok);
    }

    #[test]
    fn pure_emission_stays_on_the_ladder(n in 2u32..40, pick in 0usize..1000) {
        let states = enumerate_dicke_space(n).unwrap();
        let start: DickeIndex = states[pick % states.len()];
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        evolve_populations_with(&initial_dicke_state(n, start).unwrap(), &RateSet::new(1.0, 0.0, 0.0), &grid, &PiqsOptions::with_rtol(1e-10), |pv| {
            for (s, p) in states.iter().zip(&pv.p) {
                if s.j != start.j {
                    assert!(p.abs() < 1e-14, "{s} holds {p}");
                }
            }
            Ok(())
        }).unwrap();
    }
}
