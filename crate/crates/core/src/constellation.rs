//! Unit-energy constellations and bit/symbol mapping.

use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::FRAC_1_SQRT_2;

/// Largest magnitude allowed for a bit log-likelihood ratio.
pub const LLR_CLIP: f64 = 30.0;

/// Supported unit-modulus constellations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constellation {
    /// Bit 0 maps to +1, bit 1 to −1.
    Bpsk,
    /// Gray-mapped QPSK: the first bit sets the real sign, the second the imaginary sign.
    Qpsk,
}

impl Constellation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Constellation::Bpsk => 1,
            Constellation::Qpsk => 2,
        }
    }

    pub fn order(self) -> usize {
        1 << self.bits_per_symbol()
    }

    /// Constellation points indexed by their bit label (first bit most significant).
    pub fn points(self) -> Vec<Complex64> {
        (0..self.order()).map(|i| self.point(i)).collect()
    }

    pub fn point(self, index: usize) -> Complex64 {
        match self {
            Constellation::Bpsk => Complex64::new(if index & 1 == 0 { 1.0 } else { -1.0 }, 0.0),
            Constellation::Qpsk => {
                let re = if index & 2 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
                let im = if index & 1 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
                Complex64::new(re, im)
            }
        }
    }

    /// Maps a bit stream (length a multiple of `bits_per_symbol`) to symbol indices.
    pub fn bits_to_indices(self, bits: &[u8]) -> Vec<usize> {
        let b = self.bits_per_symbol();
        debug_assert_eq!(bits.len() % b, 0);
        bits.chunks(b)
            .map(|c| c.iter().fold(0usize, |acc, &bit| (acc << 1) | (bit & 1) as usize))
            .collect()
    }

    pub fn indices_to_bits(self, indices: &[usize]) -> Vec<u8> {
        let b = self.bits_per_symbol();
        let mut out = Vec::with_capacity(indices.len() * b);
        for &i in indices {
            for k in (0..b).rev() {
                out.push(((i >> k) & 1) as u8);
            }
        }
        out
    }

    pub fn modulate(self, indices: &[usize]) -> Vec<Complex64> {
        indices.iter().map(|&i| self.point(i)).collect()
    }

    pub fn random_indices<R: Rng + ?Sized>(self, count: usize, rng: &mut R) -> Vec<usize> {
        (0..count).map(|_| rng.random_range(0..self.order())).collect()
    }

    /// Nearest-point decision.
    pub fn hard_decision(self, y: Complex64) -> usize {
        let pts = self.points();
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in pts.iter().enumerate() {
            let d = (y - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Per-bit LLRs `ln P(bit = 0) / P(bit = 1)` from per-symbol probabilities
    /// laid out as `order` consecutive entries per symbol.
    pub fn bit_llrs(self, probs: &[f64]) -> Vec<f64> {
        let q = self.order();
        let b = self.bits_per_symbol();
        let mut out = Vec::with_capacity(probs.len() / q * b);
        for sym in probs.chunks(q) {
            for k in (0..b).rev() {
                let (mut p0, mut p1) = (0.0, 0.0);
                for (i, &p) in sym.iter().enumerate() {
                    if (i >> k) & 1 == 0 {
                        p0 += p;
                    } else {
                        p1 += p;
                    }
                }
                let llr = (p0.max(1e-300) / p1.max(1e-300)).ln();
                out.push(llr.clamp(-LLR_CLIP, LLR_CLIP));
            }
        }
        out
    }
}
