//! Symbol detectors for the delay-Doppler link.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::comm::effective::SparseDdChannel;
use crate::constellation::Constellation;
use crate::error::{Error, Result};

/// Largest exhaustive search, in bits per frame.
pub const ML_BIT_BUDGET: usize = 20;

/// Smallest interference-plus-noise variance used by the message-passing detector.
const VARIANCE_FLOOR: f64 = 1e-12;

/// Exhaustive maximum-likelihood detection over all codewords.
///
/// Candidates are visited in lexicographic order of symbol indices (first
/// symbol most significant) and only a strictly smaller metric replaces the
/// incumbent, so ties resolve to the lexicographically first codeword.
pub fn ml_detect(y: &[Complex64], h: &DMatrix<Complex64>, c: Constellation) -> Result<Vec<usize>> {
    let len = h.ncols();
    if h.nrows() != y.len() {
        return Err(Error::invalid("observation length does not match the channel"));
    }
    if len * c.bits_per_symbol() > ML_BIT_BUDGET {
        return Err(Error::config(format!(
            "exhaustive search over {} bits exceeds the budget of {ML_BIT_BUDGET}",
            len * c.bits_per_symbol()
        )));
    }
    let q = c.order();
    let pts = c.points();
    let mut idx = vec![0usize; len];
    let mut best = idx.clone();
    let mut best_metric = f64::INFINITY;
    loop {
        let mut metric = 0.0;
        for (r, yr) in y.iter().enumerate() {
            let mut s = *yr;
            for (j, &i) in idx.iter().enumerate() {
                s -= h[(r, j)] * pts[i];
            }
            metric += s.norm_sqr();
            if metric >= best_metric {
                break;
            }
        }
        if metric < best_metric {
            best_metric = metric;
            best.copy_from_slice(&idx);
        }
        // Lexicographic odometer, last symbol fastest.
        let mut pos = len;
        loop {
            if pos == 0 {
                return Ok(best);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < q {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Message-passing controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpOptions {
    pub max_iterations: usize,
    /// Weight of the new message in `p ← δ p_new + (1 − δ) p_old`.
    pub damping: f64,
    /// Stop once no message probability moves by more than this.
    pub tolerance: f64,
}

impl Default for MpOptions {
    fn default() -> Self {
        MpOptions { max_iterations: 30, damping: 0.7, tolerance: 1e-6 }
    }
}

/// Detector output with per-symbol probabilities (`order` entries per symbol).
#[derive(Debug, Clone, PartialEq)]
pub struct SoftDecisions {
    pub decisions: Vec<usize>,
    pub probabilities: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

fn softmax_in_place(logits: &mut [f64]) {
    let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for l in logits.iter_mut() {
        *l = (*l - top).exp();
        sum += *l;
    }
    for l in logits.iter_mut() {
        *l /= sum;
    }
}

/// Gaussian-approximation message passing on the sparse delay-Doppler graph.
///
/// Each observation node models the interference from all but one connected
/// symbol as complex Gaussian; each symbol node combines the resulting
/// likelihoods from all but the target observation.
pub fn mp_detect(
    y: &[Complex64],
    channel: &SparseDdChannel,
    c: Constellation,
    n0: f64,
    opts: MpOptions,
) -> Result<SoftDecisions> {
    let mn = channel.mn;
    if y.len() != mn {
        return Err(Error::invalid("observation length does not match the channel"));
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::invalid("damping must lie in (0, 1]"));
    }
    let q = c.order();
    let pts = c.points();
    let energy: Vec<f64> = pts.iter().map(|p| p.norm_sqr()).collect();

    // Flattened edges in row order, plus the edge lists of every column.
    let mut edge_row = Vec::new();
    let mut edge_col = Vec::new();
    let mut edge_h = Vec::new();
    let mut row_start = Vec::with_capacity(mn + 1);
    for (r, row) in channel.rows.iter().enumerate() {
        row_start.push(edge_row.len());
        for &(col, h) in row {
            edge_row.push(r);
            edge_col.push(col);
            edge_h.push(h);
        }
    }
    row_start.push(edge_row.len());
    let n_edges = edge_row.len();
    let mut col_edges: Vec<Vec<usize>> = vec![Vec::new(); mn];
    for (e, &col) in edge_col.iter().enumerate() {
        col_edges[col].push(e);
    }

    // Symbol-to-observation probabilities, and observation-to-symbol log-likelihoods.
    let mut p_msg = vec![1.0 / q as f64; n_edges * q];
    let mut llk = vec![0.0; n_edges * q];
    let mut mean = vec![Complex64::new(0.0, 0.0); n_edges];
    let mut var = vec![0.0; n_edges];
    let mut iterations = 0;
    let mut converged = false;
    let mut logits = vec![0.0; q];

    while iterations < opts.max_iterations {
        iterations += 1;
        for e in 0..n_edges {
            let p = &p_msg[e * q..(e + 1) * q];
            let m: Complex64 = p.iter().zip(&pts).map(|(w, s)| s * *w).sum();
            let second: f64 = p.iter().zip(&energy).map(|(w, s)| w * s).sum();
            mean[e] = edge_h[e] * m;
            var[e] = edge_h[e].norm_sqr() * (second - m.norm_sqr()).max(0.0);
        }
        for r in 0..mn {
            let range = row_start[r]..row_start[r + 1];
            let mu: Complex64 = range.clone().map(|e| mean[e]).sum();
            let sigma: f64 = range.clone().map(|e| var[e]).sum();
            for e in range {
                let mu_e = mu - mean[e];
                let s2 = ((sigma - var[e]).max(0.0) + n0).max(VARIANCE_FLOOR);
                let resid = y[r] - mu_e;
                for (a, s) in pts.iter().enumerate() {
                    llk[e * q + a] = -(resid - edge_h[e] * s).norm_sqr() / s2;
                }
            }
        }
        let mut delta: f64 = 0.0;
        for edges in &col_edges {
            for &target in edges {
                logits.iter_mut().for_each(|l| *l = 0.0);
                for &e in edges {
                    if e != target {
                        for a in 0..q {
                            logits[a] += llk[e * q + a];
                        }
                    }
                }
                softmax_in_place(&mut logits);
                for a in 0..q {
                    let old = p_msg[target * q + a];
                    let new = opts.damping * logits[a] + (1.0 - opts.damping) * old;
                    delta = delta.max((new - old).abs());
                    p_msg[target * q + a] = new;
                }
            }
        }
        if delta < opts.tolerance {
            converged = true;
            break;
        }
    }

    let mut probabilities = vec![0.0; mn * q];
    let mut decisions = vec![0; mn];
    for (col, edges) in col_edges.iter().enumerate() {
        logits.iter_mut().for_each(|l| *l = 0.0);
        for &e in edges {
            for a in 0..q {
                logits[a] += llk[e * q + a];
            }
        }
        softmax_in_place(&mut logits);
        probabilities[col * q..(col + 1) * q].copy_from_slice(&logits);
        decisions[col] = argmax(&logits);
    }
    Ok(SoftDecisions { decisions, probabilities, iterations, converged })
}

/// Linear MMSE equaliser with per-symbol Gaussian soft demapping.
///
/// The eigen-decomposition `H^H H = U Λ U^H` is computed once, so the filter
/// for every noise level costs `O((MN)²)`. Works with any channel matrix,
/// including dense fractional-Doppler ones.
#[derive(Debug, Clone)]
pub struct LmmseEqualizer {
    h_adj: DMatrix<Complex64>,
    u: DMatrix<Complex64>,
    lambda: Vec<f64>,
}

impl LmmseEqualizer {
    pub fn new(h: &DMatrix<Complex64>) -> Self {
        let h_adj = h.adjoint();
        let g = &h_adj * h;
        let herm = (&g + g.adjoint()).map(|v| v * 0.5);
        let eig = herm.symmetric_eigen();
        let lambda = eig.eigenvalues.iter().map(|l| l.max(0.0)).collect();
        LmmseEqualizer { h_adj, u: eig.eigenvectors, lambda }
    }

    pub fn detect(&self, y: &[Complex64], c: Constellation, n0: f64) -> Result<SoftDecisions> {
        if self.h_adj.ncols() != y.len() {
            return Err(Error::invalid("observation length does not match the channel"));
        }
        let len = self.h_adj.nrows();
        let q = c.order();
        let pts = c.points();
        let reg = n0.max(VARIANCE_FLOOR);
        let mf = &self.h_adj * DVector::from_column_slice(y);
        let mut coeff = self.u.adjoint() * mf;
        for (k, v) in coeff.iter_mut().enumerate() {
            *v /= self.lambda[k] + reg;
        }
        let x_hat = &self.u * coeff;
        let mut probabilities = vec![0.0; len * q];
        let mut decisions = vec![0; len];
        let mut logits = vec![0.0; q];
        for i in 0..len {
            // Bias: diag((H^H H + N0 I)^{-1} H^H H).
            let mu: f64 = (0..len)
                .map(|k| self.u[(i, k)].norm_sqr() * self.lambda[k] / (self.lambda[k] + reg))
                .sum::<f64>()
                .clamp(1e-12, 1.0);
            let v = (mu * (1.0 - mu)).max(VARIANCE_FLOOR);
            for (a, s) in pts.iter().enumerate() {
                logits[a] = -(x_hat[i] - s * mu).norm_sqr() / v;
            }
            softmax_in_place(&mut logits);
            probabilities[i * q..(i + 1) * q].copy_from_slice(&logits);
            decisions[i] = argmax(&logits);
        }
        Ok(SoftDecisions { decisions, probabilities, iterations: 1, converged: true })
    }
}

/// One-shot [`LmmseEqualizer`].
pub fn lmmse_detect(y: &[Complex64], h: &DMatrix<Complex64>, c: Constellation, n0: f64) -> Result<SoftDecisions> {
    if h.nrows() != y.len() {
        return Err(Error::invalid("observation length does not match the channel"));
    }
    LmmseEqualizer::new(h).detect(y, c, n0)
}
