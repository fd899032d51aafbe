//! Monte Carlo oracle: finite random matrices whose eigenvalue/singular-value
//! statistics converge to the computed Brown measures.
//!
//! Trials run concurrently; each trial owns an RNG stream derived from the
//! master seed by the ChaCha stream counter, so results are deterministic
//! regardless of scheduling.

use ndarray::{s, Array1, Array2};
use ndarray_linalg::{c64, EigVals, Factorize, QRSquare, ReciprocalConditionNum, Solve, SVD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::measures::{radial_cdf, RadialBrownMeasure};
use crate::stable::{mu_beta_brown, nu_beta_moment};

const RCOND_MIN: f64 = 1e-12;
const MAX_RESAMPLES: usize = 8;

#[derive(Debug, Clone, Serialize)]
pub enum EnsembleKind {
    Ginibre,
    HaarUnitary,
    TruncatedHaar { m: usize },
    GinibreProduct { k: u32 },
    FreeSum(Vec<EnsembleKind>),
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub spec: EnsembleSpec,
    /// pooled |lambda| after scaling, sorted ascending
    pub scaled_radii: Vec<f64>,
    pub ks_distance: f64,
    pub predicted_quantile_ref: String,
    pub n_resamples: usize,
    pub wall_time_s: f64,
}

/// Result of a fractional singular-moment comparison.
#[derive(Debug, Clone, Serialize)]
pub struct MomentCheck {
    pub empirical: f64,
    pub predicted: f64,
    pub relative_error: f64,
    /// gamma within 15% of the divergence boundary 1/(1+k)
    pub near_divergent: bool,
    pub n_resamples: usize,
}

/// i.i.d. complex Gaussian entries with variance 1/n (1/(2n) per component),
/// so that (1/n) E tr GG* = 1.
pub fn sample_ginibre(n: usize, rng: &mut ChaCha8Rng) -> Array2<c64> {
    let sigma = (0.5 / n as f64).sqrt();
    Array2::from_shape_simple_fn((n, n), || {
        c64::new(
            sigma * rng.sample::<f64, _>(StandardNormal),
            sigma * rng.sample::<f64, _>(StandardNormal),
        )
    })
}

/// Haar unitary via phase-corrected QR of a Ginibre sample. Unitarity is
/// asserted on every sample: in full for small n, on sampled column pairs
/// for large n (the full check is O(n^3) and would dwarf the eigensolve).
pub fn sample_haar_unitary(n: usize, rng: &mut ChaCha8Rng) -> Result<Array2<c64>> {
    let g = sample_ginibre(n, rng);
    let (q, r) = g
        .qr_square()
        .map_err(|e| Error::SolverFailure(format!("QR: {e}")))?;
    let mut u = q;
    for j in 0..n {
        let d = r[[j, j]];
        let phase = d / d.norm();
        u.column_mut(j).mapv_inplace(|x| x * phase);
    }
    let ok = if n <= 128 {
        let prod = u.t().mapv(|x| x.conj()).dot(&u);
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[[i, j]] - target).norm());
            }
        }
        worst < 1e-10
    } else {
        let mut worst = 0.0_f64;
        for pair in 0..8 {
            let i = (pair * 37) % n;
            let j = (pair * 113 + 1) % n;
            let mut dot = c64::new(0.0, 0.0);
            for row in 0..n {
                dot += u[[row, i]].conj() * u[[row, j]];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).norm());
        }
        worst < 1e-10
    };
    if !ok {
        return Err(Error::QRBreakdown);
    }
    Ok(u)
}

/// Build one sample of the ensemble. The returned matrix may be a similarity
/// transpose of the nominal model (eigenvalues and singular values agree).
/// Returns the matrix together with the number of condition-number resamples.
fn build_matrix(kind: &EnsembleKind, n: usize, rng: &mut ChaCha8Rng) -> Result<(Array2<c64>, usize)> {
    match kind {
        EnsembleKind::Ginibre => Ok((sample_ginibre(n, rng), 0)),
        EnsembleKind::HaarUnitary => Ok((sample_haar_unitary(n, rng)?, 0)),
        EnsembleKind::TruncatedHaar { m } => {
            if *m < 1 || *m > n {
                return Err(Error::InvalidMeasure(format!(
                    "truncation size {m} outside 1..={n}"
                )));
            }
            let u = sample_haar_unitary(n, rng)?;
            Ok((u.slice(s![..*m, ..*m]).to_owned(), 0))
        }
        EnsembleKind::GinibreProduct { k } => {
            let g1 = sample_ginibre(n, rng);
            if *k == 0 {
                return Ok((g1, 0));
            }
            // inverse powers by linear solves, never explicit inverses;
            // ill-conditioned factors are resampled
            let mut resamples = 0usize;
            let lu = loop {
                let g2t = sample_ginibre(n, rng).t().to_owned();
                let f = g2t
                    .factorize()
                    .map_err(|e| Error::SolverFailure(format!("LU: {e}")))?;
                let rc = f
                    .rcond()
                    .map_err(|e| Error::SolverFailure(format!("rcond: {e}")))?;
                if rc >= RCOND_MIN {
                    break f;
                }
                resamples += 1;
                if resamples >= MAX_RESAMPLES {
                    return Err(Error::SingularInverseFactor(resamples));
                }
            };
            // X := (G2^T)^{-k} G1^T = (G1 G2^{-k})^T
            let mut x = g1.t().to_owned();
            for _ in 0..*k {
                for j in 0..n {
                    let col = x.column(j).to_owned();
                    let solved = lu
                        .solve(&col)
                        .map_err(|e| Error::SolverFailure(format!("solve: {e}")))?;
                    x.column_mut(j).assign(&solved);
                }
            }
            Ok((x, resamples))
        }
        EnsembleKind::FreeSum(kinds) => {
            let mut total: Option<Array2<c64>> = None;
            let mut resamples = 0usize;
            for sub in kinds {
                let (m, r) = build_matrix(sub, n, rng)?;
                resamples += r;
                total = Some(match total {
                    None => m,
                    Some(t) => t + m,
                });
            }
            total
                .map(|m| (m, resamples))
                .ok_or_else(|| Error::InvalidMeasure("free_sum needs at least one term".into()))
        }
    }
}

fn eigen_radii(a: &Array2<c64>) -> Result<Vec<f64>> {
    let vals: Array1<c64> = a
        .eigvals()
        .map_err(|e| Error::SolverFailure(format!("eig: {e}")))?;
    Ok(vals.iter().map(|z| z.norm()).collect())
}

/// Two-sided Kolmogorov-Smirnov distance between a sorted sample and a CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    let mut worst = 0.0_f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        worst = worst.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    worst
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64 + 1);
    rng
}

/// Run all trials, pool the scaled eigenvalue radii, and compare the
/// empirical radial CDF against the prediction.
pub fn run_experiment(
    spec: &EnsembleSpec,
    predicted: &RadialBrownMeasure,
    scaling: f64,
    predicted_ref: &str,
) -> Result<ExperimentReport> {
    if spec.trials < 1 || spec.n < 1 {
        return Err(Error::InvalidMeasure("trials and n must be >= 1".into()));
    }
    let start = Instant::now();
    let per_trial: Vec<(Vec<f64>, usize)> = (0..spec.trials)
        .into_par_iter()
        .map(|i| -> Result<(Vec<f64>, usize)> {
            let mut rng = trial_rng(spec.seed, i);
            let (m, resamples) = build_matrix(&spec.kind, spec.n, &mut rng)?;
            let radii = eigen_radii(&m)?;
            Ok((radii.iter().map(|r| r * scaling).collect(), resamples))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pooled = Vec::new();
    let mut n_resamples = 0usize;
    for (radii, r) in per_trial {
        pooled.extend(radii);
        n_resamples += r;
    }
    pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ks = ks_distance(&pooled, |r| radial_cdf(predicted, r));
    Ok(ExperimentReport {
        spec: spec.clone(),
        scaled_radii: pooled,
        ks_distance: ks,
        predicted_quantile_ref: predicted_ref.to_string(),
        n_resamples,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Sum of two independent G1 G2^{-k} samples: radii scaled by 2^{-(1+k)/2}
/// must follow mu_k (stability under free addition).
pub fn free_sum_check(k: u32, n: usize, trials: usize, seed: u64) -> Result<ExperimentReport> {
    let spec = EnsembleSpec {
        kind: EnsembleKind::FreeSum(vec![
            EnsembleKind::GinibreProduct { k },
            EnsembleKind::GinibreProduct { k },
        ]),
        n,
        trials,
        seed,
    };
    let predicted = mu_beta_brown(k as f64, 1.0, 4096);
    let scaling = 2.0_f64.powf(-(1.0 + k as f64) / 2.0);
    run_experiment(&spec, &predicted, scaling, &format!("mu_beta(beta={k})"))
}

/// Mean of sigma^{2 gamma} over the squared singular values of G1 G2^{-k}
/// against the closed-form nu_beta fractional moment.
pub fn singular_moment_check(
    k: u32,
    gamma: f64,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<MomentCheck> {
    assert!(k >= 1);
    let beta = k as f64;
    let predicted = match nu_beta_moment(beta, gamma) {
        crate::measures::Extended::Finite(v) => v,
        crate::measures::Extended::Infinite => {
            return Err(Error::InvalidMeasure(format!(
                "gamma = {gamma} outside the convergent range of nu_{beta}"
            )))
        }
    };
    let per_trial: Vec<(f64, usize)> = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<(f64, usize)> {
            let mut rng = trial_rng(seed, i);
            let (m, resamples) =
                build_matrix(&EnsembleKind::GinibreProduct { k }, n, &mut rng)?;
            let (_, sv, _) = m
                .svd(false, false)
                .map_err(|e| Error::SolverFailure(format!("svd: {e}")))?;
            let mean =
                sv.iter().map(|s| (s * s).powf(gamma)).sum::<f64>() / sv.len() as f64;
            Ok((mean, resamples))
        })
        .collect::<Result<Vec<_>>>()?;
    let empirical =
        per_trial.iter().map(|(m, _)| m).sum::<f64>() / per_trial.len() as f64;
    let n_resamples = per_trial.iter().map(|(_, r)| r).sum();
    Ok(MomentCheck {
        empirical,
        predicted,
        relative_error: (empirical - predicted).abs() / predicted.abs(),
        near_divergent: gamma >= 0.85 / (1.0 + beta),
        n_resamples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ginibre_entry_variance() {
        let mut rng = trial_rng(7, 0);
        let mut acc = 0.0;
        let draws = 100_000usize;
        for _ in 0..draws / 4 {
            let g = sample_ginibre(2, &mut rng);
            acc += g.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        // E|entry|^2 = 1/n = 1/2 here; 3 sigma over 1e5 draws
        let mean = acc / draws as f64;
        assert!((mean - 0.5).abs() < 3.0 * 0.5 / (draws as f64).sqrt(), "{mean}");
    }

    #[test]
    fn ginibre_trace_moment() {
        let n = 256;
        let mut acc = 0.0;
        for t in 0..50 {
            let mut rng = trial_rng(11, t);
            let g = sample_ginibre(n, &mut rng);
            acc += g.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
        }
        assert!((acc / 50.0 - 1.0).abs() < 0.02);
    }

    #[test]
    fn ginibre_deterministic() {
        let a = sample_ginibre(16, &mut trial_rng(3, 4));
        let b = sample_ginibre(16, &mut trial_rng(3, 4));
        assert_eq!(a, b);
    }

    #[test]
    fn haar_eigenvalues_on_circle() {
        let mut rng = trial_rng(5, 0);
        let u = sample_haar_unitary(64, &mut rng).unwrap();
        for z in u.eigvals().unwrap().iter() {
            assert_relative_eq!(z.norm(), 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn haar_trace_moment() {
        let n = 256;
        let mut acc = c64::new(0.0, 0.0);
        for t in 0..100 {
            let mut rng = trial_rng(13, t);
            let u = sample_haar_unitary(n, &mut rng).unwrap();
            acc += (0..n).map(|i| u[[i, i]]).sum::<c64>() / n as f64;
        }
        assert!((acc / 100.0).norm() < 0.05);
    }

    #[test]
    fn haar_n1_uniform_phase() {
        let mut rng = trial_rng(17, 0);
        let mut acc = c64::new(0.0, 0.0);
        for _ in 0..2000 {
            let u = sample_haar_unitary(1, &mut rng).unwrap();
            assert_relative_eq!(u[[0, 0]].norm(), 1.0, epsilon = 1e-12);
            acc += u[[0, 0]];
        }
        assert!((acc / 2000.0).norm() < 0.05);
    }

    #[test]
    fn ks_distance_simple() {
        let xs = [0.25, 0.5, 0.75, 1.0];
        // against U(0,1): empirical steps hit the CDF exactly at the right
        // edges, so the distance is one step = 0.25
        assert_relative_eq!(ks_distance(&xs, |x| x), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn free_sum_smoke() {
        let rep = free_sum_check(1, 64, 1, 42).unwrap();
        assert_eq!(rep.scaled_radii.len(), 64);
        assert!(rep.ks_distance <= 1.0);
    }

    #[test]
    fn reproducible_reports() {
        let spec = EnsembleSpec {
            kind: EnsembleKind::GinibreProduct { k: 1 },
            n: 32,
            trials: 3,
            seed: 99,
        };
        let predicted = mu_beta_brown(1.0, 1.0, 512);
        let a = run_experiment(&spec, &predicted, 1.0, "mu_1").unwrap();
        let b = run_experiment(&spec, &predicted, 1.0, "mu_1").unwrap();
        assert_eq!(a.scaled_radii, b.scaled_radii);
        assert_eq!(a.ks_distance, b.ks_distance);
    }

    #[test]
    fn gamma_zero_moment_is_one() {
        let chk = singular_moment_check(1, 0.0, 32, 2, 5).unwrap();
        assert_relative_eq!(chk.empirical, 1.0, epsilon = 1e-12);
        assert_relative_eq!(chk.predicted, 1.0, epsilon = 1e-12);
        assert!(!chk.near_divergent);
    }

    #[test]
    fn truncated_haar_ks_decreases_with_n() {
        use crate::semigroup::{compressed_brown, CompressionParams, Scaling};
        // median per-trial KS must fall as n doubles from 256 to 1024
        let predicted = compressed_brown(
            &crate::measures::PositiveRealMeasure::point_mass(1.0),
            CompressionParams::new(2.0, Scaling::SqrtS).unwrap(),
            2048,
        )
        .unwrap();
        let mut medians = Vec::new();
        for n in [256usize, 512, 1024] {
            let mut per_trial: Vec<f64> = (0..20)
                .map(|i| {
                    let spec = EnsembleSpec {
                        kind: EnsembleKind::TruncatedHaar { m: n / 2 },
                        n,
                        trials: 1,
                        seed: 1000 + i,
                    };
                    run_experiment(&spec, &predicted, 2.0_f64.sqrt(), "compressed haar")
                        .unwrap()
                        .ks_distance
                })
                .collect();
            per_trial.sort_by(|a, b| a.partial_cmp(b).unwrap());
            medians.push(0.5 * (per_trial[9] + per_trial[10]));
        }
        assert!(
            medians[0] > medians[1] && medians[1] > medians[2],
            "medians not decreasing: {medians:?}"
        );
    }

    #[test]
    fn near_divergent_flag() {
        let chk = singular_moment_check(1, 0.45, 32, 2, 5).unwrap();
        assert!(chk.near_divergent);
        assert!(chk.empirical.is_finite());
    }
}
