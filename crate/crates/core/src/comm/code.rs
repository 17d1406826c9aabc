//! Terminated rate-1/2 convolutional code with generators (7, 5) octal.
//!
//! The encoder state holds the two previous input bits; each input bit `b`
//! emits `b ⊕ s1 ⊕ s2` then `b ⊕ s2`, and two zero bits flush the register.

use crate::error::{Error, Result};

/// Flush bits appended by the encoder.
pub const TAIL_BITS: usize = 2;

fn branch(bit: u8, state: usize) -> (u8, u8, usize) {
    let s1 = (state & 1) as u8;
    let s2 = ((state >> 1) & 1) as u8;
    let c1 = bit ^ s1 ^ s2;
    let c2 = bit ^ s2;
    let next = ((state << 1) | bit as usize) & 0b11;
    (c1, c2, next)
}

/// Payload bits that fit in `coded_len` coded bits.
pub fn payload_len(coded_len: usize) -> Result<usize> {
    if coded_len % 2 != 0 || coded_len < 2 * TAIL_BITS {
        return Err(Error::invalid(format!("coded length {coded_len} is not a terminated rate-1/2 length")));
    }
    Ok(coded_len / 2 - TAIL_BITS)
}

/// Encodes `bits` and the flush tail; the output has `2 (len + 2)` bits.
pub fn conv75_encode(bits: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(2 * (bits.len() + TAIL_BITS));
    let mut state = 0;
    for &b in bits.iter().chain([0u8; TAIL_BITS].iter()) {
        let (c1, c2, next) = branch(b & 1, state);
        out.push(c1);
        out.push(c2);
        state = next;
    }
    out
}

/// Soft-input Viterbi decoding of a terminated codeword.
///
/// `llrs` are `ln P(0)/P(1)` per coded bit. Ties between survivor paths keep
/// the path from the lower-numbered predecessor state.
pub fn viterbi75_decode(llrs: &[f64]) -> Result<Vec<u8>> {
    let k = payload_len(llrs.len())?;
    let steps = k + TAIL_BITS;
    let mut metric = [f64::NEG_INFINITY; 4];
    metric[0] = 0.0;
    // decisions[t][s] = (previous state, input bit)
    let mut decisions = vec![[(0usize, 0u8); 4]; steps];
    for t in 0..steps {
        let (l1, l2) = (llrs[2 * t], llrs[2 * t + 1]);
        let mut next = [f64::NEG_INFINITY; 4];
        let inputs: &[u8] = if t < k { &[0, 1] } else { &[0] };
        for s in 0..4 {
            if metric[s] == f64::NEG_INFINITY {
                continue;
            }
            for &b in inputs {
                let (c1, c2, ns) = branch(b, s);
                let gain = if c1 == 0 { l1 } else { -l1 } + if c2 == 0 { l2 } else { -l2 };
                let cand = metric[s] + 0.5 * gain;
                if cand > next[ns] {
                    next[ns] = cand;
                    decisions[t][ns] = (s, b);
                }
            }
        }
        metric = next;
    }
    let mut state = 0;
    let mut bits = vec![0u8; steps];
    for t in (0..steps).rev() {
        let (prev, b) = decisions[t][state];
        bits[t] = b;
        state = prev;
    }
    bits.truncate(k);
    Ok(bits)
}

/// Hard bits to perfectly confident LLRs.
pub fn hard_llrs(bits: &[u8]) -> Vec<f64> {
    bits.iter().map(|&b| if b == 0 { 10.0 } else { -10.0 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    #[test]
    fn zero_input_gives_zero_codeword() {
        assert!(conv75_encode(&[0; 10]).iter().all(|&b| b == 0));
    }

    #[test]
    fn impulse_response_matches_generators() {
        // 7 = 111 and 5 = 101 interleaved: 11 10 11.
        assert_eq!(conv75_encode(&[1]), vec![1, 1, 1, 0, 1, 1]);
        assert_eq!(conv75_encode(&[0, 1]), vec![0, 0, 1, 1, 1, 0, 1, 1]);
    }

    #[test]
    fn noiseless_round_trip() {
        let mut rng = stream_rng(7, 0, 0);
        for _ in 0..20 {
            let bits: Vec<u8> = (0..64).map(|_| rng.random_range(0..2)).collect();
            let cw = conv75_encode(&bits);
            assert_eq!(cw.len(), 2 * 66);
            assert_eq!(viterbi75_decode(&hard_llrs(&cw)).unwrap(), bits);
        }
    }

    #[test]
    fn corrects_a_single_flip() {
        let bits = vec![1, 0, 1, 1, 0, 0, 1, 0, 1, 1];
        let mut cw = conv75_encode(&bits);
        cw[7] ^= 1;
        assert_eq!(viterbi75_decode(&hard_llrs(&cw)).unwrap(), bits);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(viterbi75_decode(&[0.0; 5]).is_err());
        assert!(viterbi75_decode(&[0.0; 2]).is_err());
        assert_eq!(viterbi75_decode(&[1.0; 4]).unwrap(), Vec::<u8>::new());
    }
}
