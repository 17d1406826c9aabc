//! OTFS frame geometry and the basic delay-Doppler operators.
//!
//! Symbols are vectorised column-major with delay as the fast axis, so entry
//! `m + M*n` of a delay-Doppler frame holds delay bin `m`, Doppler bin `n`.
//! All DFTs are unitary (scaled by `1/sqrt(len)`), which makes every transform
//! in the chain energy preserving.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};

/// OTFS grid and antenna array geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameParams {
    /// Delay bins (subcarriers).
    pub m: usize,
    /// Doppler bins (time slots).
    pub n: usize,
    /// Base-station antennas.
    pub n_bs: usize,
    /// Subcarrier spacing in Hz.
    pub delta_f: f64,
    /// Slot duration in seconds.
    pub slot_duration: f64,
    /// Total transmit power budget.
    pub alpha_total: f64,
}

impl FrameParams {
    pub fn new(m: usize, n: usize, n_bs: usize, delta_f: f64, slot_duration: f64, alpha_total: f64) -> Result<Self> {
        let p = FrameParams { m, n, n_bs, delta_f, slot_duration, alpha_total };
        p.validate()?;
        Ok(p)
    }

    /// Grid with the default numerology (15 kHz spacing, `T = 1/delta_f`, unit power).
    pub fn grid(m: usize, n: usize, n_bs: usize) -> Result<Self> {
        Self::new(m, n, n_bs, 15e3, 1.0 / 15e3, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.n_bs == 0 {
            return Err(Error::invalid("M, N and N_BS must be positive"));
        }
        if !(self.delta_f > 0.0 && self.slot_duration > 0.0) {
            return Err(Error::invalid("subcarrier spacing and slot duration must be positive"));
        }
        if !(self.alpha_total > 0.0) {
            return Err(Error::invalid("total power must be positive"));
        }
        Ok(())
    }

    /// Frame length `M*N`.
    pub fn mn(&self) -> usize {
        self.m * self.n
    }

    /// Delay resolution `1/(M delta_f)` in seconds.
    pub fn delay_resolution(&self) -> f64 {
        1.0 / (self.m as f64 * self.delta_f)
    }

    /// Doppler resolution `1/(N T)` in Hz.
    pub fn doppler_resolution(&self) -> f64 {
        1.0 / (self.n as f64 * self.slot_duration)
    }
}

/// Delay-Doppler domain frame, `vec(X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DdFrame(Vec<Complex64>);

/// Time-delay domain frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TdFrame(Vec<Complex64>);

macro_rules! frame_newtype {
    ($t:ident) => {
        impl $t {
            pub fn new(data: Vec<Complex64>, params: &FrameParams) -> Result<Self> {
                if data.len() != params.mn() {
                    return Err(Error::invalid(format!(
                        "frame length {} does not match M*N = {}",
                        data.len(),
                        params.mn()
                    )));
                }
                Ok($t(data))
            }

            pub fn zeros(params: &FrameParams) -> Self {
                $t(vec![Complex64::new(0.0, 0.0); params.mn()])
            }

            pub fn as_slice(&self) -> &[Complex64] {
                &self.0
            }

            pub fn into_inner(self) -> Vec<Complex64> {
                self.0
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            pub fn energy(&self) -> f64 {
                self.0.iter().map(|v| v.norm_sqr()).sum()
            }
        }
    };
}

frame_newtype!(DdFrame);
frame_newtype!(TdFrame);

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unitary DFT of length `len` applied to each of the `count` interleaved
/// sequences in `data`; element `i` of sequence `j` lives at `j + i*count`.
///
/// `inverse` selects `exp(+j2pi..)`. This covers both the Doppler-axis
/// transform of a frame (`count = M`) and the antenna-axis transform of a
/// per-antenna signal matrix (`count = MN`).
pub(crate) fn interleaved_dft(data: &mut [Complex64], len: usize, count: usize, inverse: bool) {
    debug_assert_eq!(data.len(), len * count);
    if len == 1 {
        return;
    }
    let direction = if inverse { FftDirection::Inverse } else { FftDirection::Forward };
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft(len, direction));
    let scale = 1.0 / (len as f64).sqrt();
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for j in 0..count {
        for (i, b) in buf.iter_mut().enumerate() {
            *b = data[j + i * count];
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (i, b) in buf.iter().enumerate() {
            data[j + i * count] = b * scale;
        }
    }
}

/// `v = (F_N^H ⊗ I_M) x`.
pub fn dd_to_td(x: &DdFrame, params: &FrameParams) -> Result<TdFrame> {
    if x.len() != params.mn() {
        return Err(Error::invalid("delay-Doppler frame does not match M*N"));
    }
    let mut v = x.0.clone();
    interleaved_dft(&mut v, params.n, params.m, true);
    Ok(TdFrame(v))
}

/// `x = (F_N ⊗ I_M) v`, the exact inverse of [`dd_to_td`].
pub fn td_to_dd(v: &TdFrame, params: &FrameParams) -> Result<DdFrame> {
    if v.len() != params.mn() {
        return Err(Error::invalid("time-delay frame does not match M*N"));
    }
    let mut x = v.0.clone();
    interleaved_dft(&mut x, params.n, params.m, false);
    Ok(DdFrame(x))
}

/// In-place variants over raw slices (`m` delay bins, `n` Doppler bins).
pub(crate) fn dd_to_td_in_place(buf: &mut [Complex64], m: usize, n: usize) {
    interleaved_dft(buf, n, m, true);
}

pub(crate) fn td_to_dd_in_place(buf: &mut [Complex64], m: usize, n: usize) {
    interleaved_dft(buf, n, m, false);
}

/// `Π^l v`: forward cyclic shift by `l` positions (`l` reduced modulo the length).
pub fn apply_delay_shift(v: &[Complex64], l: i64) -> Result<Vec<Complex64>> {
    if v.is_empty() {
        return Err(Error::invalid("cannot shift an empty vector"));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
    delay_shift_into(v, l, &mut out);
    Ok(out)
}

pub(crate) fn delay_shift_into(v: &[Complex64], l: i64, out: &mut [Complex64]) {
    let len = v.len();
    let shift = l.rem_euclid(len as i64) as usize;
    out[shift..].copy_from_slice(&v[..len - shift]);
    out[..shift].copy_from_slice(&v[len - shift..]);
}

/// `Δ^κ v`: entry `q` is rotated by `exp(j 2π κ q / L)` where `L = len(v)`.
///
/// `kappa_total` may be fractional; the exponent is evaluated directly.
pub fn apply_doppler_phase(v: &[Complex64], kappa_total: f64) -> Vec<Complex64> {
    let mut out = v.to_vec();
    doppler_phase_in_place(&mut out, kappa_total);
    out
}

pub(crate) fn doppler_phase_in_place(v: &mut [Complex64], kappa_total: f64) {
    if kappa_total == 0.0 {
        return;
    }
    let step = 2.0 * PI * kappa_total / v.len() as f64;
    for (q, x) in v.iter_mut().enumerate() {
        *x *= Complex64::from_polar(1.0, step * q as f64);
    }
}

/// One factor of a structured time-delay operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Factor {
    /// `Π^l`.
    Shift(i64),
    /// `Δ^κ`.
    Phase(f64),
}

const INTEGER_TOL: f64 = 1e-9;

fn near_integer(x: f64) -> Option<i64> {
    let r = x.round();
    ((x - r).abs() < INTEGER_TOL).then_some(r as i64)
}

/// A product of shift and phase factors written in matrix order: the last
/// factor touches the vector first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OperatorChain {
    pub factors: Vec<Factor>,
}

/// `scale · Π^delay Δ^doppler`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedOperator {
    pub scale: Complex64,
    pub delay: i64,
    pub doppler: f64,
}

impl OperatorChain {
    pub fn new(factors: Vec<Factor>) -> Self {
        OperatorChain { factors }
    }

    pub fn identity() -> Self {
        OperatorChain::default()
    }

    /// `self · other`.
    pub fn then_right(mut self, other: &OperatorChain) -> Self {
        self.factors.extend_from_slice(&other.factors);
        self
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut cur = v.to_vec();
        let mut tmp = vec![Complex64::new(0.0, 0.0); v.len()];
        for f in self.factors.iter().rev() {
            match *f {
                Factor::Shift(l) => {
                    delay_shift_into(&cur, l, &mut tmp);
                    std::mem::swap(&mut cur, &mut tmp);
                }
                Factor::Phase(k) => doppler_phase_in_place(&mut cur, k),
            }
        }
        cur
    }

    /// Collapses the chain to `scale · Π^a Δ^b` when possible.
    ///
    /// `Δ^b Π^c = γ^{bc} Π^c Δ^b` holds for integer `b`; a fractional phase
    /// to the left of a non-trivial shift has no such form and yields `None`.
    pub fn reduce(&self, len: usize) -> Option<ReducedOperator> {
        let mut scale = Complex64::new(1.0, 0.0);
        let mut delay: i64 = 0;
        let mut doppler = 0.0;
        for f in &self.factors {
            match *f {
                Factor::Phase(k) => doppler += k,
                Factor::Shift(c) => {
                    let c = c.rem_euclid(len as i64);
                    if c == 0 {
                        continue;
                    }
                    let b = near_integer(doppler)?;
                    let turns = ((b as i128 * c as i128).rem_euclid(len as i128)) as f64 / len as f64;
                    scale *= Complex64::from_polar(1.0, 2.0 * PI * turns);
                    delay += c;
                }
            }
        }
        if let Some(b) = near_integer(doppler) {
            doppler = b as f64;
        }
        Some(ReducedOperator { scale, delay: delay.rem_euclid(len as i64), doppler })
    }
}
