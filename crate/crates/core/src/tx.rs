//! Transmit chain: symbol-wise precoding, per-antenna power and spatial spreading.
//!
//! Per-antenna signals are stacked antenna-major: antenna `a` (1-based) holds
//! samples `(a-1)·MN .. a·MN` of a stacked vector.

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;

use crate::channel::Scenario;
use crate::error::{Error, Result};
use crate::otfs::{dd_to_td, interleaved_dft, DdFrame, Factor, FrameParams, OperatorChain};
use crate::radar::beam_tracking_set;

/// Structured precoder `W = Δ^{-(k̂+κ̂)} Π^{l̇ - l̂} Δ^{k̇}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecoderSpec {
    pub l_hat: i64,
    pub k_hat_total: f64,
    pub l_dot: usize,
    pub k_dot: usize,
}

impl PrecoderSpec {
    pub fn identity() -> Self {
        PrecoderSpec { l_hat: 0, k_hat_total: 0.0, l_dot: 0, k_dot: 0 }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    /// The precoder as a chain of shift and phase factors (matrix order).
    pub fn chain(&self) -> OperatorChain {
        OperatorChain::new(vec![
            Factor::Phase(-self.k_hat_total),
            Factor::Shift(self.l_dot as i64 - self.l_hat),
            Factor::Phase(self.k_dot as f64),
        ])
    }

    /// `W v`.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.chain().apply(v)
    }
}

/// How virtual delay and Doppler indices are assigned to a user's paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VirtualIndexPolicy {
    /// Evenly spread anti-diagonal lattice, see [`distinct_virtual_indices`].
    Distinct,
    /// All virtual indices zero: the precoder only undoes the estimated shifts.
    Zero,
    /// Distinct delays and distinct Dopplers drawn uniformly without replacement.
    Random,
}

/// Radar-derived estimate of one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathEstimate {
    /// Beam centre (estimated transmit angular index, 1-based).
    pub a_tx: usize,
    pub l_hat: i64,
    pub k_hat_total: f64,
}

/// Estimates equal to the true delays, Dopplers and beam centres.
pub fn exact_estimates(scenario: &Scenario) -> Vec<Vec<PathEstimate>> {
    scenario
        .users
        .iter()
        .map(|paths| {
            paths
                .iter()
                .map(|p| PathEstimate { a_tx: p.beam_centre, l_hat: p.l as i64, k_hat_total: p.doppler() })
                .collect()
        })
        .collect()
}

/// One precoder per antenna; antennas without a path carry the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    specs: Vec<PrecoderSpec>,
}

impl PrecoderSet {
    pub fn identity(n_bs: usize) -> Self {
        PrecoderSet { specs: vec![PrecoderSpec::identity(); n_bs] }
    }

    /// Precoder of antenna `a` (1-based).
    pub fn get(&self, a: usize) -> &PrecoderSpec {
        &self.specs[a - 1]
    }

    pub fn set(&mut self, a: usize, spec: PrecoderSpec) {
        self.specs[a - 1] = spec;
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }
}

/// `l̇_p = ⌊pM/P⌋` and `k̇_p = (N − ⌊pN/P⌋) mod N` for 0-based `p < P ≤ min(M, N)`.
///
/// Both index sets are distinct. Spreading them over the whole grid, with the
/// Doppler order reversed against the delay order, keeps the shifted copies
/// of a long error sequence apart, so the codeword difference matrix stays
/// close to diagonal for long error events as well as short ones.
pub fn distinct_virtual_indices(p: usize, m: usize, n: usize) -> (Vec<usize>, Vec<usize>) {
    let l = (0..p).map(|i| i * m / p).collect();
    let k = (0..p).map(|i| (n - i * n / p) % n).collect();
    (l, k)
}

/// Builds the per-antenna precoders from radar estimates.
///
/// With `n_range > 0` every antenna of a path's beam window carries that
/// path's precoder.
pub fn build_precoder_set<R: Rng + ?Sized>(
    params: &FrameParams,
    estimates: &[Vec<PathEstimate>],
    policy: VirtualIndexPolicy,
    n_range: usize,
    rng: &mut R,
) -> Result<PrecoderSet> {
    let mut set = PrecoderSet::identity(params.n_bs);
    for user in estimates {
        let p = user.len();
        let (l_dots, k_dots): (Vec<usize>, Vec<usize>) = match policy {
            VirtualIndexPolicy::Zero => (vec![0; p], vec![0; p]),
            VirtualIndexPolicy::Distinct | VirtualIndexPolicy::Random => {
                if p > params.m.min(params.n) {
                    return Err(Error::config(format!(
                        "{p} paths cannot have distinct virtual indices with M={}, N={}",
                        params.m, params.n
                    )));
                }
                if policy == VirtualIndexPolicy::Distinct {
                    distinct_virtual_indices(p, params.m, params.n)
                } else {
                    (sample(rng, params.m, p).into_vec(), sample(rng, params.n, p).into_vec())
                }
            }
        };
        for (i, est) in user.iter().enumerate() {
            let spec = PrecoderSpec { l_hat: est.l_hat, k_hat_total: est.k_hat_total, l_dot: l_dots[i], k_dot: k_dots[i] };
            for a in beam_tracking_set(est.a_tx, n_range, params.n_bs)?.indices {
                set.set(a, spec);
            }
        }
    }
    Ok(set)
}

/// Per-antenna transmit powers.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub alpha: Vec<f64>,
}

impl PowerAllocation {
    pub fn new(alpha: Vec<f64>, alpha_total: f64) -> Result<Self> {
        if alpha.iter().any(|&a| !(a >= 0.0)) {
            return Err(Error::invalid("per-antenna powers must be nonnegative"));
        }
        let sum: f64 = alpha.iter().sum();
        if sum > alpha_total + 1e-9 {
            return Err(Error::invalid(format!("allocated power {sum} exceeds the budget {alpha_total}")));
        }
        Ok(PowerAllocation { alpha })
    }

    /// Each path `p` (flattened over users) puts `path_power[p]` on every
    /// antenna of its beam window.
    pub fn from_path_powers(
        params: &FrameParams,
        estimates: &[Vec<PathEstimate>],
        path_power: &[f64],
        n_range: usize,
    ) -> Result<Self> {
        let mut alpha = vec![0.0; params.n_bs];
        let flat: Vec<&PathEstimate> = estimates.iter().flatten().collect();
        if flat.len() != path_power.len() {
            return Err(Error::invalid("one power value per path is required"));
        }
        for (est, &pw) in flat.iter().zip(path_power) {
            for a in beam_tracking_set(est.a_tx, n_range, params.n_bs)?.indices {
                alpha[a - 1] += pw;
            }
        }
        Self::new(alpha, params.alpha_total)
    }

    /// The budget split evenly over all beam windows.
    pub fn equal(params: &FrameParams, estimates: &[Vec<PathEstimate>], n_range: usize) -> Result<Self> {
        let count = estimates.iter().map(Vec::len).sum::<usize>();
        let each = params.alpha_total / (count * (n_range + 1)) as f64;
        Self::from_path_powers(params, estimates, &vec![each; count], n_range)
    }

    pub fn total(&self) -> f64 {
        self.alpha.iter().sum()
    }
}

/// `S = Z F^H`: unitary IDFT across the antenna dimension for every time-delay sample.
pub fn spatial_spread(z: &[Complex64], mn: usize, n_bs: usize) -> Result<Vec<Complex64>> {
    if z.len() != mn * n_bs {
        return Err(Error::invalid(format!("stacked signal length {} does not match MN*N_BS = {}", z.len(), mn * n_bs)));
    }
    let mut s = z.to_vec();
    interleaved_dft(&mut s, n_bs, mn, true);
    Ok(s)
}

/// Time-delay-angular signals `z_a = sqrt(alpha_a) W_a (F_N^H ⊗ I_M) x`.
pub fn tda_signal(x: &DdFrame, precoders: &PrecoderSet, alpha: &PowerAllocation, params: &FrameParams) -> Result<Vec<Complex64>> {
    if precoders.len() != params.n_bs || alpha.alpha.len() != params.n_bs {
        return Err(Error::invalid("precoder and power vectors must have one entry per antenna"));
    }
    let v = dd_to_td(x, params)?;
    let mn = params.mn();
    let mut z = vec![Complex64::new(0.0, 0.0); mn * params.n_bs];
    for (a, &pw) in alpha.alpha.iter().enumerate() {
        if pw == 0.0 {
            continue;
        }
        let d = precoders.get(a + 1).apply(v.as_slice());
        let g = pw.sqrt();
        for (o, s) in z[a * mn..(a + 1) * mn].iter_mut().zip(&d) {
            *o = s * g;
        }
    }
    Ok(z)
}

/// The stacked spatial signal `s = ((F^H α) ⊗ I_MN) W (F_N^H ⊗ I_M) x`.
pub fn full_tx_chain(x: &DdFrame, precoders: &PrecoderSet, alpha: &PowerAllocation, params: &FrameParams) -> Result<Vec<Complex64>> {
    let z = tda_signal(x, precoders, alpha, params)?;
    spatial_spread(&z, params.mn(), params.n_bs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_gaussian, stream_rng};

    fn rand_vec(len: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = stream_rng(seed, 0, 0);
        (0..len).map(|_| complex_gaussian(&mut rng, 1.0)).collect()
    }

    #[test]
    fn identity_precoder_is_noop_and_all_are_unitary() {
        let v = rand_vec(16, 1);
        assert_eq!(PrecoderSpec::identity().apply(&v), v);
        let w = PrecoderSpec { l_hat: 3, k_hat_total: 1.37, l_dot: 2, k_dot: 1 };
        let out = w.apply(&v);
        let e0: f64 = v.iter().map(|x| x.norm_sqr()).sum();
        let e1: f64 = out.iter().map(|x| x.norm_sqr()).sum();
        assert!((e0 - e1).abs() < 1e-12 * e0);
    }

    #[test]
    fn spread_lattice_values_and_distinctness() {
        assert_eq!(distinct_virtual_indices(4, 8, 8), (vec![0, 2, 4, 6], vec![0, 6, 4, 2]));
        assert_eq!(distinct_virtual_indices(1, 8, 8), (vec![0], vec![0]));
        for (m, n) in [(4, 4), (8, 8), (16, 8), (32, 16)] {
            for p in 1..=m.min(n) {
                let (l, k) = distinct_virtual_indices(p, m, n);
                let mut l2 = l.clone();
                let mut k2 = k.clone();
                l2.sort_unstable();
                l2.dedup();
                k2.sort_unstable();
                k2.dedup();
                assert_eq!((l2.len(), k2.len()), (p, p), "m={m} n={n} p={p}");
                assert!(l.iter().all(|&x| x < m) && k.iter().all(|&x| x < n));
            }
        }
    }

    #[test]
    fn distinct_policy_contract() {
        let params = FrameParams::grid(4, 4, 8).unwrap();
        let est = vec![vec![
            PathEstimate { a_tx: 1, l_hat: 1, k_hat_total: 0.3 },
            PathEstimate { a_tx: 5, l_hat: 2, k_hat_total: 1.0 },
        ]];
        let mut rng = stream_rng(0, 0, 0);
        let set = build_precoder_set(&params, &est, VirtualIndexPolicy::Distinct, 0, &mut rng).unwrap();
        let (a, b) = (set.get(1), set.get(5));
        assert_ne!(a.l_dot, b.l_dot);
        assert_ne!(a.k_dot, b.k_dot);
        assert!(set.get(2).is_identity());
        let too_many = vec![(0..5).map(|i| PathEstimate { a_tx: i + 1, l_hat: 0, k_hat_total: 0.0 }).collect()];
        assert!(build_precoder_set(&params, &too_many, VirtualIndexPolicy::Distinct, 0, &mut rng).is_err());
    }

    #[test]
    fn random_policy_is_reproducible_and_distinct() {
        let params = FrameParams::grid(8, 8, 16).unwrap();
        let est = vec![(0..4).map(|i| PathEstimate { a_tx: 2 * i + 1, l_hat: 0, k_hat_total: 0.0 }).collect::<Vec<_>>()];
        let a = build_precoder_set(&params, &est, VirtualIndexPolicy::Random, 0, &mut stream_rng(4, 0, 0)).unwrap();
        let b = build_precoder_set(&params, &est, VirtualIndexPolicy::Random, 0, &mut stream_rng(4, 0, 0)).unwrap();
        assert_eq!(a, b);
        let ls: Vec<_> = (0..4).map(|i| a.get(2 * i + 1).l_dot).collect();
        let ks: Vec<_> = (0..4).map(|i| a.get(2 * i + 1).k_dot).collect();
        for i in 0..4 {
            for j in i + 1..4 {
                assert_ne!(ls[i], ls[j]);
                assert_ne!(ks[i], ks[j]);
            }
        }
    }

    #[test]
    fn beam_windows_replicate_precoder_and_split_power() {
        let params = FrameParams::grid(4, 4, 16).unwrap();
        let est = vec![vec![PathEstimate { a_tx: 1, l_hat: 1, k_hat_total: 0.0 }]];
        let set = build_precoder_set(&params, &est, VirtualIndexPolicy::Zero, 2, &mut stream_rng(0, 0, 0)).unwrap();
        assert_eq!(set.get(16), set.get(1));
        assert_eq!(set.get(2), set.get(1));
        assert!(set.get(3).is_identity());
        let pa = PowerAllocation::equal(&params, &est, 2).unwrap();
        assert!((pa.alpha[15] - 1.0 / 3.0).abs() < 1e-15);
        assert!((pa.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_budget_is_enforced() {
        assert!(PowerAllocation::new(vec![0.6, 0.6], 1.0).is_err());
        assert!(PowerAllocation::new(vec![-0.1, 0.6], 1.0).is_err());
        assert!(PowerAllocation::new(vec![0.5, 0.5], 1.0).is_ok());
    }

    #[test]
    fn spreading_a_single_column_flattens_power() {
        let (mn, n_bs) = (4, 8);
        let mut z = vec![Complex64::new(0.0, 0.0); mn * n_bs];
        for q in 0..mn {
            z[2 * mn + q] = Complex64::new(1.0 + q as f64, 0.0);
        }
        let s = spatial_spread(&z, mn, n_bs).unwrap();
        for a in 0..n_bs {
            let col: f64 = s[a * mn..(a + 1) * mn].iter().map(|x| x.norm_sqr()).sum();
            assert!((col - 30.0 / 8.0).abs() < 1e-12);
        }
        assert!(spatial_spread(&z[1..], mn, n_bs).is_err());
    }

    #[test]
    fn zero_power_gives_zero_signal() {
        let params = FrameParams::grid(2, 2, 4).unwrap();
        let x = DdFrame::new(rand_vec(4, 2), &params).unwrap();
        let s = full_tx_chain(&x, &PrecoderSet::identity(4), &PowerAllocation { alpha: vec![0.0; 4] }, &params).unwrap();
        assert!(s.iter().all(|v| v.norm() == 0.0));
    }
}
