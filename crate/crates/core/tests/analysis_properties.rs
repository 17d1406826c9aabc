//! Properties of codeword difference matrices, PEP bounds and power allocation.

mod common;

use common::*;
use proptest::prelude::*;
use ssotfs_core::analysis::{
    codeword_diff_matrix, codeword_matrix, conditional_pep_bound, gram_det_recursive, numerical_rank,
    offdiag_diagnostics, path_chains, pep_bounds, psd_eigenvalues, determinant_bound_check,
};
use ssotfs_core::channel::{sample_scenario, DelayDopplerPolicy, DopplerModel, Scenario, ScenarioSpec};
use ssotfs_core::radar::radar_power_allocation;
use ssotfs_core::rng::stream_rng;
use ssotfs_core::tx::{build_precoder_set, exact_estimates, PrecoderSet, VirtualIndexPolicy};
use ssotfs_core::{Complex64, FrameParams};

const M: usize = 8;
const N: usize = 8;

/// Differences of two random QPSK frames (BPSK when `bpsk`), zeroed outside `support`.
fn error_sequence(seed: u64, support: usize, bpsk: bool) -> Vec<Complex64> {
    let mut rng = stream_rng(seed, 0xE0, 0);
    use rand::Rng;
    let pts: Vec<Complex64> = if bpsk {
        vec![c(1.0, 0.0), c(-1.0, 0.0)]
    } else {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        vec![c(h, h), c(h, -h), c(-h, h), c(-h, -h)]
    };
    let mut e: Vec<Complex64> = (0..M * N)
        .map(|i| if i < support { pts[rng.random_range(0..pts.len())] - pts[rng.random_range(0..pts.len())] } else { c(0.0, 0.0) })
        .collect();
    if e.iter().all(|v| v.norm() == 0.0) {
        e[0] = c(2.0, 0.0);
    }
    e
}

fn scenario(paths: usize, doppler: DopplerModel, l_max: usize, k_max: usize, seed: u64) -> Scenario {
    let params = FrameParams::grid(M, N, 16).unwrap();
    let spec = ScenarioSpec { l_max, k_max, doppler, policy: DelayDopplerPolicy::Independent, ..ScenarioSpec::new(1, paths) };
    sample_scenario(&params, &spec, &mut stream_rng(seed, 0xE1, 0)).unwrap()
}

fn precoders(sc: &Scenario, choice: u8, seed: u64) -> PrecoderSet {
    let policy = match choice % 4 {
        0 => return PrecoderSet::identity(sc.params.n_bs),
        1 => VirtualIndexPolicy::Distinct,
        2 => VirtualIndexPolicy::Random,
        _ => VirtualIndexPolicy::Zero,
    };
    build_precoder_set(&sc.params, &exact_estimates(sc), policy, 0, &mut stream_rng(seed, 0xE2, 0)).unwrap()
}

fn d_e_sq(e: &[Complex64]) -> f64 {
    e.iter().map(|v| v.norm_sqr()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn determinant_never_exceeds_the_distance_bound(
        seed in any::<u64>(), paths in 1usize..=5, support in 1usize..=64, choice in any::<u8>(),
        frac in any::<bool>(), bpsk in any::<bool>(),
    ) {
        let doppler = if frac { DopplerModel::Fractional } else { DopplerModel::Integer };
        let sc = scenario(paths, doppler, 2, 2, seed);
        let w = precoders(&sc, choice, seed);
        let e = error_sequence(seed, support, bpsk);
        let chains = path_chains(&sc, 0, &w).unwrap();
        let cdm = codeword_diff_matrix(&e, &chains, &vec![1.0; paths], M, N).unwrap();
        let d2 = d_e_sq(&e);
        for i in 0..paths {
            prop_assert!((cdm.omega[(i, i)].re - d2).abs() <= 1e-9 * d2);
        }
        let chk = determinant_bound_check(&cdm.omega, d2).unwrap();
        prop_assert!(chk.holds, "det {} > bound {}", chk.determinant, chk.bound);
    }

    #[test]
    fn gram_recursion_matches_dense_determinant(
        seed in any::<u64>(), paths in 1usize..=5, support in 1usize..=64, choice in any::<u8>(),
    ) {
        let sc = scenario(paths, DopplerModel::Fractional, 2, 2, seed);
        let w = precoders(&sc, choice, seed);
        let e = error_sequence(seed, support, false);
        let phi = codeword_matrix(&e, &path_chains(&sc, 0, &w).unwrap(), M, N).unwrap();
        let dense = (phi.adjoint() * &phi).determinant().re;
        let cols: Vec<Vec<Complex64>> = (0..paths).map(|p| phi.column(p).iter().copied().collect()).collect();
        let rec = gram_det_recursive(&cols).unwrap();
        let scale = d_e_sq(&e).powi(paths as i32);
        prop_assert!((rec.determinant - dense).abs() <= 1e-9 * scale.max(dense.abs()));
        for (u, p) in rec.norms_sq.iter().zip(&rec.projection_norms_sq) {
            prop_assert!(*p <= *u * (1.0 + 1e-12));
        }
    }

    #[test]
    fn power_weighting_preserves_rank(
        seed in any::<u64>(), paths in 1usize..=5, support in 1usize..=12, choice in any::<u8>(),
        alpha in prop::collection::vec(0.01f64..10.0, 5),
    ) {
        let sc = scenario(paths, DopplerModel::Integer, 1, 1, seed);
        let w = precoders(&sc, choice, seed);
        let e = error_sequence(seed, support, true);
        let cdm = codeword_diff_matrix(&e, &path_chains(&sc, 0, &w).unwrap(), &alpha[..paths], M, N).unwrap();
        let r = numerical_rank(&psd_eigenvalues(&cdm.omega).unwrap());
        let rt = numerical_rank(&psd_eigenvalues(&cdm.weighted).unwrap());
        prop_assert_eq!(r, rt);
    }

    #[test]
    fn offdiagonal_sum_form_matches_operator_form(
        seed in any::<u64>(), paths in 2usize..=5, support in 1usize..=64, choice in any::<u8>(),
    ) {
        let sc = scenario(paths, DopplerModel::Integer, 4, 4, seed);
        let w = precoders(&sc, choice, seed);
        let e = error_sequence(seed, support, false);
        let chains = path_chains(&sc, 0, &w).unwrap();
        let scale = d_e_sq(&e);
        for i in 0..paths {
            for j in 0..paths {
                let d = offdiag_diagnostics(&e, &chains[i], &chains[j], M, N).unwrap();
                let s = d.sum_form.expect("integer chains collapse");
                prop_assert!((s - d.direct).norm() <= 1e-10 * scale);
                if let Some(sd) = d.same_delay {
                    prop_assert!((sd - d.direct).norm() <= 1e-10 * scale);
                }
            }
        }
    }

    #[test]
    fn pep_bounds_are_ordered(
        seed in any::<u64>(), paths in 1usize..=5, support in 1usize..=64, choice in any::<u8>(),
        alpha in prop::collection::vec(0.05f64..2.0, 5), snr_db in -5.0f64..30.0,
    ) {
        let sc = scenario(paths, DopplerModel::Fractional, 2, 2, seed);
        let w = precoders(&sc, choice, seed);
        let e = error_sequence(seed, support, false);
        let alpha = &alpha[..paths];
        let cdm = codeword_diff_matrix(&e, &path_chains(&sc, 0, &w).unwrap(), alpha, M, N).unwrap();
        let n0 = 10f64.powf(-snr_db / 10.0);
        let b = pep_bounds(&cdm, alpha, n0, d_e_sq(&e)).unwrap();
        prop_assert!(b.averaged > 0.0 && b.averaged <= 1.0);
        prop_assert!(b.asymptotic >= b.averaged * (1.0 - 1e-12));
        if let (Some(full), Some(fin)) = (b.full_rank, b.final_bound) {
            prop_assert!((full - b.asymptotic).abs() <= 1e-6 * full);
            prop_assert!(fin <= full * (1.0 + 1e-6));
        }
        let h = rand_vec(paths, seed);
        let cb = conditional_pep_bound(&h, &cdm.weighted, n0).unwrap();
        prop_assert!((cb.direct - cb.eigen_expanded).abs() <= 1e-9);
    }

    #[test]
    fn maxmin_allocation_equalises_and_dominates(
        gains in prop::collection::vec(0.01f64..20.0, 1..9), n_range in 0usize..3, seed in any::<u64>(),
    ) {
        let n_range = 2 * n_range;
        let total = 1.0;
        let alpha = radar_power_allocation(&gains, total, n_range).unwrap();
        let spent: f64 = alpha.iter().sum::<f64>() * (n_range as f64 + 1.0);
        prop_assert!((spent - total).abs() < 1e-12);
        let echo: Vec<f64> = alpha.iter().zip(&gains).map(|(a, g)| a * g).collect();
        let lo = echo.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = echo.iter().copied().fold(0.0, f64::max);
        prop_assert!(hi - lo <= 1e-12 * hi);
        let raw: Vec<f64> = rand_vec(gains.len(), seed).iter().map(|v| v.norm_sqr() + 1e-3).collect();
        let s: f64 = raw.iter().sum::<f64>() * (n_range as f64 + 1.0);
        let other = raw.iter().zip(&gains).map(|(r, g)| r / s * total * g).fold(f64::INFINITY, f64::min);
        prop_assert!(other <= lo * (1.0 + 1e-12));
    }
}

#[test]
fn diagonal_cases_meet_the_bound_with_equality() {
    // Paths whose virtual delays are separated by more than the error support
    // give orthogonal columns.
    let params = FrameParams::grid(M, N, 16).unwrap();
    for paths in 1..=5 {
        let spec = ScenarioSpec { l_max: 0, k_max: 0, doppler: DopplerModel::Integer, ..ScenarioSpec::new(1, paths) };
        let sc = sample_scenario(&params, &spec, &mut stream_rng(3, 0, paths as u64)).unwrap();
        let w = build_precoder_set(&params, &exact_estimates(&sc), VirtualIndexPolicy::Distinct, 0, &mut stream_rng(0, 0, 0)).unwrap();
        let mut e = vec![c(0.0, 0.0); M * N];
        e[0] = c(2.0, 0.0);
        let cdm = codeword_diff_matrix(&e, &path_chains(&sc, 0, &w).unwrap(), &vec![1.0; paths], M, N).unwrap();
        let chk = determinant_bound_check(&cdm.omega, 4.0).unwrap();
        assert!(chk.diagonal, "P={paths}");
        assert!(chk.equality_gap.abs() < 1e-6, "P={paths}: gap {}", chk.equality_gap);
    }
}

#[test]
fn worked_allocation_case() {
    let a = radar_power_allocation(&[1.0, 4.0], 1.0, 0).unwrap();
    assert!((a[0] - 0.8).abs() < 1e-15 && (a[1] - 0.2).abs() < 1e-15);
}
