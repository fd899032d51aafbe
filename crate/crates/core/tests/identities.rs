//! Property-based identity suite over random atomic measures. Each identity
//! has an independent algebraic derivation, so these never compare the code
//! against itself: chi is checked by substituting back into psi, S-from-R by
//! the direct psi-inversion route, and the squaring/inversion/scaling laws
//! by transport of explicit atoms.

use freebrown::measures::{Map, PositiveRealMeasure};
use freebrown::transforms::{
    chi, psi, r_table, r_transform, s_from_r, s_of_inverse, s_of_square, s_transform,
};
use proptest::prelude::*;

const W_POINTS: [f64; 4] = [-0.9, -0.5, -0.1, -0.01];

fn atomic_measure() -> impl Strategy<Value = PositiveRealMeasure> {
    prop::collection::vec((0.1..5.0f64, 0.1..1.0f64), 1..=4).prop_map(|mut atoms| {
        let total: f64 = atoms.iter().map(|&(_, w)| w).sum();
        for a in atoms.iter_mut() {
            a.1 /= total;
        }
        PositiveRealMeasure::from_atoms(&atoms).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn psi_chi_round_trip(mu in atomic_measure()) {
        for &w in &W_POINTS {
            let u = chi(&mu, w).unwrap();
            prop_assert!(u < 0.0);
            prop_assert!((psi(&mu, u) - w).abs() < 1e-10);
        }
    }

    #[test]
    fn s_from_r_matches_s_transform(mu in atomic_measure()) {
        let eps = r_table(&mu).unwrap().epsilon();
        for frac in [0.25, 0.5, 0.85] {
            let w = (eps - 1.0) * frac;
            let a = s_from_r(&mu, w).unwrap();
            let b = s_transform(&mu, w).unwrap();
            prop_assert!((a - b).abs() < 1e-8, "w={w}: {a} vs {b}");
        }
    }

    #[test]
    fn squaring_identity(mu in atomic_measure()) {
        // S_{mu}(w) = w/(1+w) S_nu(w)^2 where nu symmetrizes sqrt(mu)
        let nu = mu.pushforward(Map::Sqrt).unwrap().symmetrize();
        for &w in &W_POINTS {
            let lhs = s_of_square(&nu, w).unwrap();
            let rhs = s_transform(&mu, w).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-8, "w={w}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn inversion_identity(mu in atomic_measure()) {
        let inv = mu.pushforward(Map::Inverse).unwrap();
        for &w in &W_POINTS {
            let lhs = s_of_inverse(&mu, w).unwrap();
            let rhs = s_transform(&inv, w).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-8, "w={w}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn scaling_relations(mu in atomic_measure(), c in 0.5..2.0f64) {
        let dil = mu.pushforward(Map::Dilate(c)).unwrap();
        // S_{D_c mu}(w) = S_mu(w)/c
        for &w in &W_POINTS {
            let lhs = s_transform(&dil, w).unwrap();
            let rhs = s_transform(&mu, w).unwrap() / c;
            prop_assert!((lhs - rhs).abs() < 1e-10, "S: w={w}: {lhs} vs {rhs}");
        }
        // R_{D_c mu}(w) = c R_mu(c w)
        let eps_mu = r_table(&mu).unwrap().epsilon();
        let eps_dil = r_table(&dil).unwrap().epsilon();
        for frac in [0.2, 0.5, 0.8] {
            let w = -frac * eps_dil.min(eps_mu / c);
            let lhs = r_transform(&dil, w).unwrap();
            let rhs = c * r_transform(&mu, c * w).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10, "R: w={w}: {lhs} vs {rhs}");
        }
    }
}
