//! Effective delay-Doppler channel seen by one user after precoding and power allocation.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channel::{AngleRegime, Scenario};
use crate::error::{Error, Result};
use crate::otfs::{dd_to_td_in_place, td_to_dd_in_place, Factor, OperatorChain, ReducedOperator};
use crate::tx::{PowerAllocation, PrecoderSet};

/// One path of the effective channel: `weight · (F ⊗ I) chain (F^H ⊗ I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveTap {
    /// `√α_a · h`.
    pub weight: Complex64,
    /// `Π^l Δ^{k+κ} W_a` in matrix order.
    pub chain: OperatorChain,
    /// `chain` collapsed to `scale · Π^a Δ^b`, when such a form exists.
    pub reduced: Option<ReducedOperator>,
}

impl EffectiveTap {
    /// Integer delay and Doppler of the collapsed operator, if both are integers.
    pub fn integer_indices(&self) -> Option<(i64, i64)> {
        let r = self.reduced?;
        let b = r.doppler.round();
        ((r.doppler - b).abs() < 1e-9).then_some((r.delay, b as i64))
    }
}

/// `H^DD = Σ_p √α h_p Ξ_p` for one user.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveDdChannel {
    pub m: usize,
    pub n: usize,
    pub taps: Vec<EffectiveTap>,
}

/// Sparse row representation of an integer-only effective channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDdChannel {
    pub mn: usize,
    /// `rows[r]` lists `(column, coefficient)` with distinct columns.
    pub rows: Vec<Vec<(usize, Complex64)>>,
}

impl SparseDdChannel {
    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.mn {
            return Err(Error::invalid("input length does not match the channel"));
        }
        Ok(self.rows.iter().map(|row| row.iter().map(|&(c, h)| h * x[c]).sum()).collect())
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut d = DMatrix::zeros(self.mn, self.mn);
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, h) in row {
                d[(r, c)] += h;
            }
        }
        d
    }

    /// Keeps the entries of a dense matrix whose magnitude exceeds
    /// `rel_threshold` times the largest magnitude in their row.
    ///
    /// This is an approximation for fractional-Doppler channels: the dropped
    /// entries act as unmodelled interference for a detector using the graph.
    pub fn truncated_from_dense(h: &DMatrix<Complex64>, rel_threshold: f64) -> Result<Self> {
        if h.nrows() != h.ncols() {
            return Err(Error::invalid("channel matrix must be square"));
        }
        if !(0.0..1.0).contains(&rel_threshold) {
            return Err(Error::invalid("relative threshold must lie in [0, 1)"));
        }
        let mn = h.nrows();
        let rows = (0..mn)
            .map(|r| {
                let top = (0..mn).map(|c| h[(r, c)].norm()).fold(0.0, f64::max);
                (0..mn)
                    .filter(|&c| h[(r, c)].norm() > rel_threshold * top && h[(r, c)].norm() > 0.0)
                    .map(|c| (c, h[(r, c)]))
                    .collect()
            })
            .collect();
        Ok(SparseDdChannel { mn, rows })
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

impl EffectiveDdChannel {
    pub fn mn(&self) -> usize {
        self.m * self.n
    }

    /// True when every tap collapses to integer delay and Doppler indices,
    /// i.e. the DD-domain matrix has at most one entry per tap in each row.
    pub fn is_integer(&self) -> bool {
        self.taps.iter().all(|t| t.integer_indices().is_some())
    }

    /// `H^DD x` via the time-delay domain.
    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let mn = self.mn();
        if x.len() != mn {
            return Err(Error::invalid("input length does not match M*N"));
        }
        let mut s = x.to_vec();
        dd_to_td_in_place(&mut s, self.m, self.n);
        let mut y = vec![Complex64::new(0.0, 0.0); mn];
        for tap in &self.taps {
            let v = tap.chain.apply(&s);
            for (o, vi) in y.iter_mut().zip(&v) {
                *o += tap.weight * vi;
            }
        }
        td_to_dd_in_place(&mut y, self.m, self.n);
        Ok(y)
    }

    /// Dense `MN × MN` realisation built column by column.
    pub fn dense(&self) -> DMatrix<Complex64> {
        let mn = self.mn();
        let mut d = DMatrix::zeros(mn, mn);
        let mut e = vec![Complex64::new(0.0, 0.0); mn];
        for c in 0..mn {
            e[c] = Complex64::new(1.0, 0.0);
            let col = self.apply(&e).expect("unit vector has the channel dimension");
            for (r, v) in col.into_iter().enumerate() {
                d[(r, c)] = v;
            }
            e[c] = Complex64::new(0.0, 0.0);
        }
        d
    }

    /// Sparse form; taps that land on the same entry are merged.
    ///
    /// For `scale · Π^a Δ^b` with `a = a_m + M a_s`, entry `(m, k)` reads
    /// `x[m', (k − b) mod N]` with `m' = (m − a_m) mod M`, weighted by
    /// `exp(−j2π k c / N) exp(j2π b m' / MN)` where `c = a_s + [m < a_m]`.
    pub fn sparse(&self) -> Result<SparseDdChannel> {
        let (m_len, n_len) = (self.m, self.n);
        let mn = self.mn();
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::with_capacity(self.taps.len()); mn];
        for tap in &self.taps {
            let (a, b) = tap.integer_indices().ok_or_else(|| {
                Error::Unsupported("the effective channel has fractional Doppler taps and no sparse form".into())
            })?;
            let scale = tap.weight * tap.reduced.map(|r| r.scale).unwrap_or(Complex64::new(1.0, 0.0));
            let a = a.rem_euclid(mn as i64) as usize;
            let (a_m, a_s) = (a % m_len, a / m_len);
            for k in 0..n_len {
                for m in 0..m_len {
                    let (m_src, c) = if m >= a_m { (m - a_m, a_s) } else { (m + m_len - a_m, a_s + 1) };
                    let k_src = (k as i64 - b).rem_euclid(n_len as i64) as usize;
                    let turns = -(((k * c) % n_len) as f64) / n_len as f64
                        + (b.rem_euclid(mn as i64) as usize * m_src % mn) as f64 / mn as f64;
                    let coef = scale * Complex64::from_polar(1.0, 2.0 * PI * turns);
                    let col = m_src + m_len * k_src;
                    let row = &mut rows[m + m_len * k];
                    match row.iter_mut().find(|(c2, _)| *c2 == col) {
                        Some(entry) => entry.1 += coef,
                        None => row.push((col, coef)),
                    }
                }
            }
        }
        Ok(SparseDdChannel { mn, rows })
    }
}

/// Builds the effective channel of `user` from the true paths, the per-antenna
/// precoders and the per-antenna powers.
///
/// Requires an on-grid scenario, where each path is served by exactly one antenna.
pub fn build_effective_dd_channel(
    scenario: &Scenario,
    user: usize,
    precoders: &PrecoderSet,
    alpha: &PowerAllocation,
) -> Result<EffectiveDdChannel> {
    let params = &scenario.params;
    if scenario.regime != AngleRegime::OnGrid {
        return Err(Error::Unsupported("the effective channel is defined for on-grid angles".into()));
    }
    if precoders.len() != params.n_bs || alpha.alpha.len() != params.n_bs {
        return Err(Error::invalid("precoder and power records must cover every antenna"));
    }
    let paths = scenario
        .users
        .get(user)
        .ok_or_else(|| Error::invalid(format!("unknown user index {user}")))?;
    let mn = params.mn();
    let taps = paths
        .iter()
        .map(|p| {
            let chain = OperatorChain::new(vec![Factor::Shift(p.l as i64), Factor::Phase(p.doppler())])
                .then_right(&precoders.get(p.a_tx).chain());
            let reduced = chain.reduce(mn);
            EffectiveTap { weight: alpha.alpha[p.a_tx - 1].sqrt() * p.h, chain, reduced }
        })
        .collect();
    Ok(EffectiveDdChannel { m: params.m, n: params.n, taps })
}

/// Average received symbol energy `β = Σ_p α_{a_p} / P` of `user`.
pub fn average_symbol_energy(scenario: &Scenario, user: usize, alpha: &PowerAllocation) -> Result<f64> {
    let paths = scenario
        .users
        .get(user)
        .ok_or_else(|| Error::invalid(format!("unknown user index {user}")))?;
    Ok(paths.iter().map(|p| alpha.alpha[p.a_tx - 1]).sum::<f64>() / paths.len() as f64)
}
