//! Dense reference constructions shared by the integration tests.
//!
//! Everything here is built entry by entry from the textbook definitions so
//! that it shares no code with the structured operators under test.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use ssotfs_core::rng::{complex_gaussian, stream_rng};

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Unitary DFT matrix, entry `(k, n) = exp(-j2π kn/N)/√N`.
pub fn dft(n: usize) -> CMat {
    let s = 1.0 / (n as f64).sqrt();
    CMat::from_fn(n, n, |k, j| Complex64::from_polar(s, -2.0 * PI * (k * j) as f64 / n as f64))
}

pub fn idft(n: usize) -> CMat {
    dft(n).adjoint()
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Cyclic permutation `Π^l` with `(Π^l v)[q] = v[q − l]`.
pub fn shift(len: usize, l: i64) -> CMat {
    let s = l.rem_euclid(len as i64) as usize;
    CMat::from_fn(len, len, |i, j| if i == (j + s) % len { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

/// `Δ^κ = diag(exp(j2π κ q / L))`.
pub fn phase(len: usize, kappa: f64) -> CMat {
    CMat::from_fn(len, len, |i, j| {
        if i == j {
            Complex64::from_polar(1.0, 2.0 * PI * kappa * i as f64 / len as f64)
        } else {
            c(0.0, 0.0)
        }
    })
}

pub fn steering(phi: f64, n_bs: usize) -> Vec<Complex64> {
    let s = 1.0 / (n_bs as f64).sqrt();
    (0..n_bs).map(|m| Complex64::from_polar(s, PI * m as f64 * phi.sin())).collect()
}

pub fn matvec(a: &CMat, x: &[Complex64]) -> Vec<Complex64> {
    (a * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec()
}

pub fn rand_vec(len: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = stream_rng(seed, 0xD0, 0);
    (0..len).map(|_| complex_gaussian(&mut rng, 1.0)).collect()
}

pub fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖a − b‖ / ‖b‖` (absolute when `b` is zero).
pub fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch");
    let d: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let nb = norm(b);
    if nb == 0.0 {
        norm(&d)
    } else {
        norm(&d) / nb
    }
}

pub fn mat_rel_err(a: &CMat, b: &CMat) -> f64 {
    let nb = b.norm();
    let d = (a - b).norm();
    if nb == 0.0 {
        d
    } else {
        d / nb
    }
}

/// `diag(v)`.
pub fn diag(v: &[Complex64]) -> CMat {
    CMat::from_fn(v.len(), v.len(), |i, j| if i == j { v[i] } else { c(0.0, 0.0) })
}
