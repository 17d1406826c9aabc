//! Pairwise-error analysis: equivalent codeword matrices, codeword difference
//! matrices, PEP bounds, the Gram-determinant recursion and diagnostics of
//! the off-diagonal entries.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{sample_scenario, DelayDopplerPolicy, DopplerModel, Scenario, ScenarioSpec};
use crate::error::{Error, Result};
use crate::otfs::{dd_to_td_in_place, td_to_dd_in_place, Factor, FrameParams, OperatorChain, ReducedOperator};
use crate::rng::stream_rng;
use crate::stats::{mean_and_half_width, CurvePoint};
use crate::tx::{build_precoder_set, exact_estimates, PrecoderSet, VirtualIndexPolicy};

/// Relative eigenvalue threshold that separates zero from non-zero eigenvalues.
pub const RANK_TOL: f64 = 1e-10;

const STREAM_DET: u64 = 0x4445_5431;

/// `Ξ_p` of every path of `user`, as time-delay chains `Π^l Δ^{k+κ} W_a`.
pub fn path_chains(scenario: &Scenario, user: usize, precoders: &PrecoderSet) -> Result<Vec<OperatorChain>> {
    let paths = scenario
        .users
        .get(user)
        .ok_or_else(|| Error::invalid(format!("unknown user index {user}")))?;
    Ok(paths
        .iter()
        .map(|p| {
            OperatorChain::new(vec![Factor::Shift(p.l as i64), Factor::Phase(p.doppler())])
                .then_right(&precoders.get(p.a_tx).chain())
        })
        .collect())
}

fn check_frame(v: &[Complex64], m: usize, n: usize) -> Result<()> {
    if v.len() != m * n || v.is_empty() {
        return Err(Error::invalid(format!("vector length {} does not match M*N = {}", v.len(), m * n)));
    }
    Ok(())
}

/// Time-delay columns `chain_p ẽ` with `ẽ = (F^H ⊗ I) e`.
fn td_columns(e: &[Complex64], chains: &[OperatorChain], m: usize, n: usize) -> Result<Vec<Vec<Complex64>>> {
    check_frame(e, m, n)?;
    if chains.is_empty() {
        return Err(Error::invalid("at least one path is required"));
    }
    let mut e_td = e.to_vec();
    dd_to_td_in_place(&mut e_td, m, n);
    Ok(chains.iter().map(|c| c.apply(&e_td)).collect())
}

/// Equivalent codeword matrix `Φ` (MN × P): column `p` is `Ξ_p x`.
pub fn codeword_matrix(x: &[Complex64], chains: &[OperatorChain], m: usize, n: usize) -> Result<DMatrix<Complex64>> {
    let cols = td_columns(x, chains, m, n)?;
    let mut phi = DMatrix::zeros(m * n, cols.len());
    for (p, mut col) in cols.into_iter().enumerate() {
        td_to_dd_in_place(&mut col, m, n);
        phi.set_column(p, &nalgebra::DVector::from_vec(col));
    }
    Ok(phi)
}

fn gram(cols: &[Vec<Complex64>]) -> DMatrix<Complex64> {
    let p = cols.len();
    let mut g = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let v: Complex64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum();
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    g
}

/// Codeword difference matrix and its power-weighted version.
#[derive(Debug, Clone, PartialEq)]
pub struct CodewordDiffMatrix {
    /// `Ω = Φ^H Φ`.
    pub omega: DMatrix<Complex64>,
    /// `Ω̃ = A^H Ω A` with `A = diag(√α_p)`.
    pub weighted: DMatrix<Complex64>,
}

/// `Ω(e)` and `Ω̃(e)`; inner products are evaluated in the time-delay domain,
/// which the unitary DFT leaves unchanged.
pub fn codeword_diff_matrix(
    e: &[Complex64],
    chains: &[OperatorChain],
    alpha: &[f64],
    m: usize,
    n: usize,
) -> Result<CodewordDiffMatrix> {
    if alpha.len() != chains.len() {
        return Err(Error::invalid("one power value per path is required"));
    }
    if alpha.iter().any(|&a| a < 0.0 || !a.is_finite()) {
        return Err(Error::invalid("powers must be non-negative"));
    }
    let omega = gram(&td_columns(e, chains, m, n)?);
    let s: Vec<f64> = alpha.iter().map(|a| a.sqrt()).collect();
    let weighted = DMatrix::from_fn(omega.nrows(), omega.ncols(), |i, j| omega[(i, j)] * (s[i] * s[j]));
    Ok(CodewordDiffMatrix { omega, weighted })
}

/// `h^H Ω̃ h`.
pub fn conditional_distance(h: &[Complex64], omega_tilde: &DMatrix<Complex64>) -> Result<f64> {
    if omega_tilde.nrows() != h.len() || omega_tilde.ncols() != h.len() {
        return Err(Error::invalid("gain vector and matrix dimensions differ"));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..h.len() {
        for j in 0..h.len() {
            acc += h[i].conj() * omega_tilde[(i, j)] * h[j];
        }
    }
    Ok(acc.re.max(0.0))
}

/// Descending eigenvalues of a Hermitian PSD matrix; rejects non-Hermitian or
/// indefinite input.
pub fn psd_eigenvalues(a: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::invalid("matrix must be square"));
    }
    let scale = (0..a.nrows()).map(|i| a[(i, i)].re.abs()).sum::<f64>().max(1.0);
    let asym = (a - a.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max);
    if asym > 1e-9 * scale {
        return Err(Error::invalid("matrix is not Hermitian"));
    }
    let herm = (a + a.adjoint()).map(|v| v * 0.5);
    let mut ev: Vec<f64> = herm.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    if ev.last().is_some_and(|&l| l < -RANK_TOL * scale) {
        return Err(Error::invalid("matrix is not positive semidefinite"));
    }
    Ok(ev.into_iter().map(|l| l.max(0.0)).collect())
}

/// Number of eigenvalues above `RANK_TOL · λ_max`.
pub fn numerical_rank(eigenvalues: &[f64]) -> usize {
    let top = eigenvalues.iter().copied().fold(0.0, f64::max);
    if top <= 0.0 {
        return 0;
    }
    eigenvalues.iter().filter(|&&l| l > RANK_TOL * top).count()
}

/// Conditional PEP bound, both directly and through the eigen-decomposition of `Ω̃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalBound {
    pub direct: f64,
    pub eigen_expanded: f64,
}

/// `exp(−h^H Ω̃ h / 4N0)`.
pub fn conditional_pep_bound(h: &[Complex64], omega_tilde: &DMatrix<Complex64>, n0: f64) -> Result<ConditionalBound> {
    if !(n0 > 0.0) {
        return Err(Error::invalid("noise level must be positive"));
    }
    let d = conditional_distance(h, omega_tilde)?;
    psd_eigenvalues(omega_tilde)?;
    let herm = (omega_tilde + omega_tilde.adjoint()).map(|v| v * 0.5);
    let eig = herm.symmetric_eigen();
    let mut s = 0.0;
    for j in 0..h.len() {
        let u = eig.eigenvectors.column(j);
        let proj: Complex64 = u.iter().zip(h).map(|(a, b)| a.conj() * b).sum();
        s += eig.eigenvalues[j].max(0.0) * proj.norm_sqr();
    }
    Ok(ConditionalBound { direct: (-d / (4.0 * n0)).exp(), eigen_expanded: (-s / (4.0 * n0)).exp() })
}

/// Averaged PEP bounds for one error sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct PepBounds {
    /// Eigenvalues of `Ω̃`, descending.
    pub eigenvalues: Vec<f64>,
    pub rank: usize,
    /// `Π_{j≤r} 1 / (1 + λ_j / 4N0P)`.
    pub averaged: f64,
    /// High-SNR form `Π_{j≤r} 4N0P / λ_j`.
    pub asymptotic: f64,
    /// `(4N0P)^P / (det Ω Π α)`, at full rank.
    pub full_rank: Option<f64>,
    /// `(4N0P)^P / ((d_E²)^P Π α)`, at full rank.
    pub final_bound: Option<f64>,
}

/// PEP bounds from `Ω`, `Ω̃`, the per-path powers and `d_E²(e)`.
pub fn pep_bounds(cdm: &CodewordDiffMatrix, alpha: &[f64], n0: f64, d_e_sq: f64) -> Result<PepBounds> {
    if !(n0 > 0.0) {
        return Err(Error::invalid("noise level must be positive"));
    }
    let p = cdm.omega.nrows();
    if alpha.len() != p {
        return Err(Error::invalid("one power value per path is required"));
    }
    let eigenvalues = psd_eigenvalues(&cdm.weighted)?;
    psd_eigenvalues(&cdm.omega)?;
    let rank = numerical_rank(&eigenvalues);
    let c = 4.0 * n0 * p as f64;
    let averaged = eigenvalues[..rank].iter().map(|l| 1.0 / (1.0 + l / c)).product();
    let asymptotic = eigenvalues[..rank].iter().map(|l| c / l).product();
    let (full_rank, final_bound) = if rank == p {
        let prod_alpha: f64 = alpha.iter().product();
        let det = cdm.omega.determinant().re;
        (Some(c.powi(p as i32) / (det * prod_alpha)), Some(c.powi(p as i32) / (d_e_sq.powi(p as i32) * prod_alpha)))
    } else {
        (None, None)
    };
    Ok(PepBounds { eigenvalues, rank, averaged, asymptotic, full_rank, final_bound })
}

/// Gram determinant by successive orthogonal projection.
#[derive(Debug, Clone, PartialEq)]
pub struct GramRecursion {
    pub determinant: f64,
    /// `‖u_j‖²`.
    pub norms_sq: Vec<f64>,
    /// `‖ũ_j‖²`: squared norm of `u_j` projected off `span(u_1..u_{j−1})`.
    pub projection_norms_sq: Vec<f64>,
}

/// `GD(u_1..u_j) = GD(u_1..u_{j−1}) ‖ũ_j‖²`, evaluated with modified
/// Gram-Schmidt and one re-orthogonalisation pass.
pub fn gram_det_recursive(vectors: &[Vec<Complex64>]) -> Result<GramRecursion> {
    let len = vectors.first().map_or(0, Vec::len);
    if vectors.iter().any(|v| v.len() != len) {
        return Err(Error::invalid("vectors must have equal length"));
    }
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(vectors.len());
    let mut norms_sq = Vec::with_capacity(vectors.len());
    let mut proj = Vec::with_capacity(vectors.len());
    let mut det = 1.0;
    for u in vectors {
        let nu: f64 = u.iter().map(|v| v.norm_sqr()).sum();
        let mut w = u.clone();
        for _ in 0..2 {
            for q in &basis {
                let c: Complex64 = q.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let mut nw: f64 = w.iter().map(|v| v.norm_sqr()).sum();
        if nw <= 1e-20 * nu || nu == 0.0 {
            nw = 0.0;
        } else {
            let s = 1.0 / nw.sqrt();
            basis.push(w.iter().map(|v| v * s).collect());
        }
        norms_sq.push(nu);
        proj.push(nw);
        det *= nw;
    }
    Ok(GramRecursion { determinant: det, norms_sq, projection_norms_sq: proj })
}

/// Outcome of checking `det Ω ≤ (d_E²)^P`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeterminantBoundCheck {
    pub bound: f64,
    pub determinant: f64,
    pub holds: bool,
    /// `(bound − det) / bound`.
    pub equality_gap: f64,
    /// Largest off-diagonal magnitude is below `1e-9 d_E²`.
    pub diagonal: bool,
}

pub fn determinant_bound_check(omega: &DMatrix<Complex64>, d_e_sq: f64) -> Result<DeterminantBoundCheck> {
    let p = omega.nrows();
    if p == 0 || omega.ncols() != p {
        return Err(Error::invalid("matrix must be square and non-empty"));
    }
    let determinant = omega.determinant().re;
    let bound = d_e_sq.powi(p as i32);
    let holds = determinant <= bound + 1e-6 * bound;
    let equality_gap = if bound > 0.0 { (bound - determinant) / bound } else { 0.0 };
    let mut off: f64 = 0.0;
    for i in 0..p {
        for j in 0..p {
            if i != j {
                off = off.max(omega[(i, j)].norm());
            }
        }
    }
    Ok(DeterminantBoundCheck { bound, determinant, holds, equality_gap, diagonal: off < 1e-9 * d_e_sq })
}

/// Off-diagonal entry `e^H Ξ_p^H Ξ_p' e` computed several ways.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffDiagDiagnostics {
    /// Operator-composition value.
    pub direct: Complex64,
    /// Time-delay summation form (both operators collapse to shift-phase form).
    pub sum_form: Option<Complex64>,
    /// Closed form for equal delays: `Σ_n γ^{n(b' − b)} |ẽ[n]|²`.
    pub same_delay: Option<Complex64>,
    /// Approximation for equal Dopplers: `γ^{(a − a') b} Σ_n ẽ*[n] ẽ[n']`.
    pub same_doppler_approx: Option<Complex64>,
    /// `|direct − same_doppler_approx|`.
    pub same_doppler_gap: Option<f64>,
}

fn gamma(turns_num: f64, len: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * turns_num / len as f64)
}

/// Diagnostics for the pair `(p, p')` given their chains.
pub fn offdiag_diagnostics(
    e: &[Complex64],
    chain_p: &OperatorChain,
    chain_q: &OperatorChain,
    m: usize,
    n: usize,
) -> Result<OffDiagDiagnostics> {
    check_frame(e, m, n)?;
    let mn = m * n;
    let mut e_td = e.to_vec();
    dd_to_td_in_place(&mut e_td, m, n);
    let u = chain_p.apply(&e_td);
    let v = chain_q.apply(&e_td);
    let direct: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
    let (rp, rq) = match (chain_p.reduce(mn), chain_q.reduce(mn)) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Ok(OffDiagDiagnostics {
                direct,
                sum_form: None,
                same_delay: None,
                same_doppler_approx: None,
                same_doppler_gap: None,
            })
        }
    };
    let ReducedOperator { scale: s_p, delay: a_p, doppler: b_p } = rp;
    let ReducedOperator { scale: s_q, delay: a_q, doppler: b_q } = rq;
    let pref = s_p.conj() * s_q;
    let d = a_q - a_p;
    let shifted = |i: usize| (i as i64 - d).rem_euclid(mn as i64) as usize;
    let sum: Complex64 = (0..mn)
        .map(|i| {
            let j = shifted(i);
            gamma(-b_p * i as f64 + b_q * j as f64, mn) * e_td[i].conj() * e_td[j]
        })
        .sum();
    let same_delay = (d.rem_euclid(mn as i64) == 0).then(|| {
        pref * (0..mn).map(|i| gamma(i as f64 * (b_q - b_p), mn) * e_td[i].norm_sqr()).sum::<Complex64>()
    });
    let same_doppler_approx = ((b_p - b_q).abs() < 1e-12).then(|| {
        let corr: Complex64 = (0..mn).map(|i| e_td[i].conj() * e_td[shifted(i)]).sum();
        pref * gamma(((a_p - a_q) as f64) * b_p, mn) * corr
    });
    Ok(OffDiagDiagnostics {
        direct,
        sum_form: Some(pref * sum),
        same_delay,
        same_doppler_approx,
        same_doppler_gap: same_doppler_approx.map(|a| (direct - a).norm()),
    })
}

/// Error sequence `[2, 0, −2]` repeated `repeats` times, then zeros.
pub fn repeated_error_sequence(repeats: usize, mn: usize) -> Result<Vec<Complex64>> {
    if 3 * repeats > mn {
        return Err(Error::invalid("error pattern longer than the frame"));
    }
    let mut e = vec![Complex64::new(0.0, 0.0); mn];
    for r in 0..repeats {
        e[3 * r] = Complex64::new(2.0, 0.0);
        e[3 * r + 2] = Complex64::new(-2.0, 0.0);
    }
    Ok(e)
}

/// Channel and precoding policies compared by the determinant experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetPolicy {
    /// Independent delays, fractional Doppler, precoded onto distinct virtual indices.
    PrecodedDistinct,
    /// Independent delays, fractional Doppler, no precoding.
    NonPrecodedRandom,
    /// Distinct delays, fractional Doppler, no precoding.
    NonPrecodedDistinctDelays,
}

impl DetPolicy {
    pub fn label(self) -> &'static str {
        match self {
            DetPolicy::PrecodedDistinct => "precoded-distinct",
            DetPolicy::NonPrecodedRandom => "non-precoded-random",
            DetPolicy::NonPrecodedDistinctDelays => "non-precoded-distinct-delay",
        }
    }
}

/// Setup of the average-determinant experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct DetEvalSetup {
    pub params: FrameParams,
    pub path_counts: Vec<usize>,
    pub l_max: usize,
    pub k_max: usize,
    pub min_doppler_separation: f64,
    /// Repetitions of the `[2, 0, −2]` pattern; `d_E² = 8 · repeats`.
    pub repeats: Vec<usize>,
    pub policies: Vec<DetPolicy>,
    pub draws: u64,
    pub seed: u64,
}

/// Mean `det Ω(e)` against `d_E²(e)` for each path count and policy, plus the
/// `(d_E²)^P` bound as series `P=<p>/bound`.
pub fn avg_determinant_experiment(setup: &DetEvalSetup) -> Result<Vec<CurvePoint>> {
    if setup.draws == 0 {
        return Err(Error::config("determinant experiment needs at least one draw"));
    }
    let params = setup.params;
    let (m, n) = (params.m, params.n);
    let errors: Vec<(f64, Vec<Complex64>)> = setup
        .repeats
        .iter()
        .map(|&j| repeated_error_sequence(j, params.mn()).map(|e| (8.0 * j as f64, e)))
        .collect::<Result<_>>()?;
    let mut points = Vec::new();
    for (pi, &p) in setup.path_counts.iter().enumerate() {
        // dets[draw][policy][error]
        let dets: Vec<Vec<Vec<f64>>> = (0..setup.draws)
            .into_par_iter()
            .map(|t| -> Result<Vec<Vec<f64>>> {
                setup
                    .policies
                    .iter()
                    .map(|&policy| {
                        let mut rng = stream_rng(setup.seed, STREAM_DET + pi as u64, t);
                        let spec = ScenarioSpec {
                            l_max: setup.l_max,
                            k_max: setup.k_max,
                            doppler: DopplerModel::Fractional,
                            policy: match policy {
                                DetPolicy::NonPrecodedDistinctDelays => DelayDopplerPolicy::DistinctDelays,
                                _ => DelayDopplerPolicy::Independent,
                            },
                            min_doppler_separation: setup.min_doppler_separation,
                            ..ScenarioSpec::new(1, p)
                        };
                        let scenario = sample_scenario(&params, &spec, &mut rng)?;
                        let precoders = match policy {
                            DetPolicy::PrecodedDistinct => build_precoder_set(
                                &params,
                                &exact_estimates(&scenario),
                                VirtualIndexPolicy::Distinct,
                                0,
                                &mut rng,
                            )?,
                            _ => PrecoderSet::identity(params.n_bs),
                        };
                        let chains = path_chains(&scenario, 0, &precoders)?;
                        errors
                            .iter()
                            .map(|(_, e)| {
                                let cols = td_columns(e, &chains, m, n)?;
                                Ok(gram(&cols).determinant().re)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        for (qi, policy) in setup.policies.iter().enumerate() {
            for (ei, (d2, _)) in errors.iter().enumerate() {
                let vals: Vec<f64> = dets.iter().map(|d| d[qi][ei]).collect();
                let (mean, hw) = mean_and_half_width(&vals);
                points.push(CurvePoint {
                    series: format!("P={p}/{}", policy.label()),
                    x: *d2,
                    metric: mean,
                    n_trials: setup.draws,
                    ci_half_width: hw,
                });
            }
        }
        for (d2, _) in &errors {
            points.push(CurvePoint::exact(format!("P={p}/bound"), *d2, d2.powi(p as i32)));
        }
    }
    Ok(points)
}
