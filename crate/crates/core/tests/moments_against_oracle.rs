use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use superfluor_core::dicke::{enumerate_dicke_space, DickeIndex};
use superfluor_core::moments::{
    first_order_reference, generate_system, rhs_second_order, second_order_reference,
    unclosed_rhs, Mono, MomentKey, PeelOneFactor,
};
use superfluor_core::oracle::{build_dicke_basis, build_operators, lindblad_rhs, DensityMatrix, OperatorSet};
use superfluor_core::{Channel, RateSet};

const COMBOS: [(f64, f64, f64); 5] = [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0), (1.0, 0.1, 10.0), (0.7, 2.3, 0.4)];

fn mono_operator(ops: &OperatorSet, m: Mono) -> DMatrix<Complex64> {
    let mut out = DMatrix::identity(ops.dim(), ops.dim());
    let j2 = ops.j2.matrix.to_dense();
    let jz = ops.jz.matrix.to_dense();
    for _ in 0..m.c {
        out = &out * &j2;
    }
    for _ in 0..m.z {
        out = &out * &jz;
    }
    out
}

fn trace_re(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a * b).trace().re
}

/// Compares `Tr(O L[rho])` with the unclosed hierarchy at `t = 0`.
fn check_state(ops: &OperatorSet, rho: &DensityMatrix, n: u32, rates: &RateSet, label: &str) {
    let drho = lindblad_rhs(rho, rates, ops).unwrap();
    let moment = |m: Mono| trace_re(&mono_operator(ops, m), &rho.matrix);
    for m in [Mono::Z, Mono::new(0, 2), Mono::C, Mono::new(1, 1), Mono::new(0, 3)] {
        let exact = trace_re(&mono_operator(ops, m), &drho);
        let hierarchy = unclosed_rhs(m, n, rates, moment).unwrap();
        assert!(
            (exact - hierarchy).abs() < 1e-9 * (1.0 + exact.abs()),
            "{label} {rates:?} d{m}/dt: oracle {exact} hierarchy {hierarchy}"
        );
    }
}

#[test]
fn unclosed_derivatives_match_oracle_on_dicke_states() {
    let n = 6;
    let ops = build_operators(n).unwrap();
    let basis = build_dicke_basis(n).unwrap();
    for (gs, gl, gd) in COMBOS {
        let rates = RateSet::new(gs, gl, gd).with_omega0(1.7);
        for idx in enumerate_dicke_space(n).unwrap() {
            let rho = basis.dicke_density(idx).unwrap();
            check_state(&ops, &rho, n, &rates, &idx.to_string());
        }
    }
}

fn random_density(dim: usize, seed: u64) -> DensityMatrix {
    let mut s = seed;
    let mut next = || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let a = DMatrix::from_fn(dim, dim, |_, _| Complex64::new(next(), next()));
    let mut m = &a * a.adjoint();
    let tr = m.trace();
    m /= tr;
    DensityMatrix::new(m, 0.0).unwrap()
}

#[test]
fn unclosed_derivatives_hold_for_arbitrary_states() {
    let n = 4;
    let ops = build_operators(n).unwrap();
    for (k, (gs, gl, gd)) in COMBOS.into_iter().enumerate() {
        let rates = RateSet::new(gs, gl, gd);
        let rho = random_density(1 << n, 17 + k as u64);
        check_state(&ops, &rho, n, &rates, "random");
    }
}

#[test]
fn second_order_at_full_inversion_against_oracle() {
    // Every factorization is exact on a Dicke state.
    let n = 6;
    let ops = build_operators(n).unwrap();
    let basis = build_dicke_basis(n).unwrap();
    let rates = RateSet::new(1.0, 0.0, 0.0);
    let rho = basis.dicke_density(DickeIndex::excited(n)).unwrap();
    let drho = lindblad_rhs(&rho, &rates, &ops).unwrap();
    let exact = trace_re(&mono_operator(&ops, Mono::new(0, 2)), &drho);
    let [_, _, djz2] = rhs_second_order(3.0, 12.0, 9.0, &rates, n);
    assert!((exact - djz2).abs() < 1e-9, "{exact} vs {djz2}");
    assert!((djz2 + 30.0).abs() < 1e-12);
}

#[test]
fn generator_reproduces_hand_coded_systems() {
    let first = generate_system(1, &Channel::ALL, &PeelOneFactor).unwrap();
    assert!(first.same_equations(&first_order_reference()), "{}", first.to_text());
    let second = generate_system(2, &Channel::ALL, &PeelOneFactor).unwrap();
    assert!(second.same_equations(&second_order_reference()), "{}", second.to_text());
}

#[test]
fn rotation_drops_out_of_balanced_keys() {
    let n = 4;
    let ops = build_operators(n).unwrap();
    let basis = build_dicke_basis(n).unwrap();
    let idx = DickeIndex::excited(n);
    let rho = basis.dicke_density(idx).unwrap();
    let a = lindblad_rhs(&rho, &RateSet::new(1.0, 0.3, 0.2), &ops).unwrap();
    let b = lindblad_rhs(&rho, &RateSet::new(1.0, 0.3, 0.2).with_omega0(25.0), &ops).unwrap();
    for m in [Mono::Z, Mono::C, Mono::new(0, 2)] {
        let op = mono_operator(&ops, m);
        assert!((trace_re(&op, &a) - trace_re(&op, &b)).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ground_moments_are_stationary(n in 1u32..200, gs in 0.0f64..5.0, gl in 0.0f64..5.0, gd in 0.0f64..5.0) {
        let rates = RateSet::new(gs, gl, gd);
        let half = n as f64 / 2.0;
        for m in [Mono::Z, Mono::C, Mono::new(0, 2), Mono::new(1, 1)] {
            let d = unclosed_rhs(m, n, &rates, |x| x.eval(half * (half + 1.0), -half)).unwrap();
            prop_assert!(d.abs() < 1e-9 * (1.0 + half.powi(4)));
        }
    }

    #[test]
    fn key_derivatives_are_polynomial_identities(p in 0u32..3, r in 0u32..3, j2 in 1u32..12) {
        // At fixed (j, m), the expansion evaluated through C and Z equals the
        // same expansion evaluated through balanced keys on that Dicke state.
        let key = MomentKey::new(p, r, p);
        let j = j2 as f64 / 2.0;
        let parts = superfluor_core::moments::key_derivative(key).unwrap();
        for m2 in (0..=j2).map(|k| j2 as i64 - 2 * k as i64) {
            let m = m2 as f64 / 2.0;
            for part in &parts {
                let via_cz = part.eval(10.0, j * (j + 1.0), m);
                let mut via_keys = 0.0;
                for (k, c) in superfluor_core::moments::cz_to_keys(part) {
                    via_keys += c.eval(10.0) * k.eval_dicke(j, m);
                }
                prop_assert!((via_cz - via_keys).abs() < 1e-8 * (1.0 + via_cz.abs()));
            }
        }
    }
}
