//! Steering vectors and the angular-domain view created by spatial spreading.
//!
//! Spreading with an `n_bs`-point unitary IDFT and de-spreading with the
//! matching DFT turn a path at angle `phi` into an antenna-indexed pattern.
//! When `sin(phi)` is a multiple of the angular resolution `2/n_bs` the pattern
//! collapses onto a single transmit index and a single receive index.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance on `|sin(phi) n_bs / 2 − round(.)|` below which an angle is on-grid.
pub const ON_GRID_TOL: f64 = 1e-9;

const ANGLE_SLACK: f64 = 1e-12;
const SINGULAR_TOL: f64 = 1e-7;

/// 1-based transmit and receive angular indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AngularIndexPair {
    pub a_tx: usize,
    pub a_rx: usize,
}

/// Raw (unrounded) index values together with their rounded pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularIndices {
    pub raw_tx: f64,
    pub raw_rx: f64,
    pub pair: AngularIndexPair,
    pub on_grid: bool,
}

/// Angular resolution `2 / n_bs` in units of `sin(phi)`.
pub fn angular_resolution(n_bs: usize) -> f64 {
    2.0 / n_bs as f64
}

fn check_angle(phi: f64, n_bs: usize) -> Result<()> {
    if n_bs == 0 {
        return Err(Error::invalid("antenna count must be positive"));
    }
    if !phi.is_finite() || phi.abs() > FRAC_PI_2 + ANGLE_SLACK {
        return Err(Error::invalid(format!("angle {phi} outside [-pi/2, pi/2]")));
    }
    Ok(())
}

/// Unit-norm uniform-linear-array response, entry `m` is `exp(j pi m sin(phi)) / sqrt(n_bs)`.
pub fn steering_vector(phi: f64, n_bs: usize) -> Result<Vec<Complex64>> {
    check_angle(phi, n_bs)?;
    let s = phi.sin();
    let scale = 1.0 / (n_bs as f64).sqrt();
    Ok((0..n_bs).map(|m| Complex64::from_polar(scale, PI * m as f64 * s)).collect())
}

/// Nearest integer with ties resolved toward the smaller value.
fn round_half_down(x: f64) -> f64 {
    (x - 0.5).ceil()
}

/// Transmit and receive angular indices of `phi`.
///
/// The modular reduction is applied to the raw value first and the result is
/// then rounded into `1..=n_bs` (a rounded value of `n_bs + 1` wraps to 1).
pub fn angular_indices(phi: f64, n_bs: usize) -> Result<AngularIndices> {
    check_angle(phi, n_bs)?;
    let n = n_bs as f64;
    let half = phi.sin() * n / 2.0;
    let nearest = half.round();
    let on_grid = (half - nearest).abs() < ON_GRID_TOL;
    let raw_tx = (n - half).rem_euclid(n) + 1.0;
    let raw_rx = (n + half).rem_euclid(n) + 1.0;
    let pair = if on_grid {
        let j = nearest as i64;
        AngularIndexPair {
            a_tx: (-j).rem_euclid(n_bs as i64) as usize + 1,
            a_rx: j.rem_euclid(n_bs as i64) as usize + 1,
        }
    } else {
        let wrap = |x: f64| {
            let r = round_half_down(x) as usize;
            if r > n_bs {
                1
            } else {
                r.max(1)
            }
        };
        AngularIndexPair { a_tx: wrap(raw_tx), a_rx: wrap(raw_rx) }
    };
    Ok(AngularIndices { raw_tx, raw_rx, pair, on_grid })
}

/// The on-grid angle whose transmit angular index is `a_tx`, in `[-pi/2, pi/2)`.
pub fn on_grid_angle(a_tx: usize, n_bs: usize) -> Result<f64> {
    if a_tx == 0 || a_tx > n_bs {
        return Err(Error::invalid(format!("transmit index {a_tx} outside 1..={n_bs}")));
    }
    let mut s = -2.0 * (a_tx - 1) as f64 / n_bs as f64;
    if s < -1.0 {
        s += 2.0;
    }
    Ok(s.asin())
}

/// Receive index paired with transmit index `a_tx` for an on-grid angle.
pub fn rx_index_for_tx(a_tx: usize, n_bs: usize) -> usize {
    (n_bs - (a_tx - 1)) % n_bs + 1
}

/// Angle recovered from a receive angular index, principal value in `[-pi/2, pi/2]`.
pub fn aoa_from_rx_index(a_rx: usize, n_bs: usize) -> Result<f64> {
    if a_rx == 0 || a_rx > n_bs {
        return Err(Error::invalid(format!("receive index {a_rx} outside 1..={n_bs}")));
    }
    let j = (a_rx - 1) as f64;
    let half = n_bs as f64 / 2.0;
    let mut s = 2.0 * j / n_bs as f64;
    if j > half {
        s -= 2.0;
    }
    Ok(s.clamp(-1.0, 1.0).asin())
}

/// `(1/n) sum_{m<n} exp(j m theta)` evaluated in closed form away from the pole.
fn dirichlet(theta: f64, n: usize) -> Complex64 {
    let nf = n as f64;
    let one = Complex64::new(1.0, 0.0);
    let den = one - Complex64::from_polar(1.0, theta);
    if den.norm() < SINGULAR_TOL {
        // Close to the removable singularity; the direct sum is exact and stable.
        let sum: Complex64 = (0..n).map(|m| Complex64::from_polar(1.0, theta * m as f64)).sum();
        return sum / nf;
    }
    (one - Complex64::from_polar(1.0, theta * nf)) / den / nf
}

/// Power-free transmit pattern `a^T(phi) F^H`, entry `l-1` for index `l`.
pub fn tx_pattern(phi: f64, n_bs: usize) -> Result<Vec<Complex64>> {
    let idx = angular_indices(phi, n_bs)?;
    let s = phi.sin();
    let n = n_bs as f64;
    Ok((0..n_bs)
        .map(|l| {
            if idx.on_grid {
                let v = if l + 1 == idx.pair.a_tx { 1.0 } else { 0.0 };
                return Complex64::new(v, 0.0);
            }
            dirichlet(PI * s + 2.0 * PI * l as f64 / n, n_bs)
        })
        .collect())
}

/// Power-free receive pattern `F a(phi)`, entry `k-1` for index `k`.
pub fn rx_pattern(phi: f64, n_bs: usize) -> Result<Vec<Complex64>> {
    let idx = angular_indices(phi, n_bs)?;
    let s = phi.sin();
    let n = n_bs as f64;
    Ok((0..n_bs)
        .map(|k| {
            if idx.on_grid {
                let v = if k + 1 == idx.pair.a_rx { 1.0 } else { 0.0 };
                return Complex64::new(v, 0.0);
            }
            dirichlet(PI * s - 2.0 * PI * k as f64 / n, n_bs)
        })
        .collect())
}

fn check_alpha(alpha: &[f64], n_bs: usize) -> Result<()> {
    if alpha.len() != n_bs {
        return Err(Error::invalid(format!("power vector has {} entries, expected {n_bs}", alpha.len())));
    }
    if alpha.iter().any(|&a| !(a >= 0.0)) {
        return Err(Error::invalid("per-antenna powers must be nonnegative"));
    }
    Ok(())
}

/// Angular communication vector `h^A = a^T(phi) F^H diag(sqrt(alpha))`.
pub fn angular_comm_vector(phi: f64, n_bs: usize, alpha: &[f64]) -> Result<Vec<Complex64>> {
    check_alpha(alpha, n_bs)?;
    let u = tx_pattern(phi, n_bs)?;
    Ok(u.iter().zip(alpha).map(|(u, a)| u * a.sqrt()).collect())
}

/// Angular radar matrix `F A(phi) F^H diag(sqrt(alpha))`, rows indexed by receive index.
pub fn angular_radar_matrix(phi: f64, n_bs: usize, alpha: &[f64]) -> Result<DMatrix<Complex64>> {
    check_alpha(alpha, n_bs)?;
    let ut = tx_pattern(phi, n_bs)?;
    let ur = rx_pattern(phi, n_bs)?;
    Ok(DMatrix::from_fn(n_bs, n_bs, |k, l| ur[k] * ut[l] * alpha[l].sqrt()))
}
