//! Brute-force reference implementations, independent of the main code paths.
//!
//! These back the test suites and the CLI `verify` command. They are written
//! for obviousness, not speed: the Cayley sign is computed by literally
//! bubble-sorting the concatenated generator list.

use crate::algebra::Signature;

/// Sign of the blade product e_a * e_b computed from first principles:
/// concatenate the generator lists, bubble-sort into ascending order counting
/// transpositions, then contract adjacent equal generators with their squares.
pub fn blade_sign_bruteforce(sig: &Signature, a: usize, b: usize) -> i8 {
    let mut gens: Vec<u32> = Vec::new();
    for i in 0..32 {
        if a & (1 << i) != 0 {
            gens.push(i);
        }
    }
    for i in 0..32 {
        if b & (1 << i) != 0 {
            gens.push(i);
        }
    }

    let mut sign: i8 = 1;
    // bubble sort with sign flips per swap
    let len = gens.len();
    for _ in 0..len {
        for k in 1..len {
            if gens[k - 1] > gens[k] {
                gens.swap(k - 1, k);
                sign = -sign;
            }
        }
    }
    // contract repeated generators
    let mut k = 0;
    while k + 1 < gens.len() {
        if gens[k] == gens[k + 1] {
            sign *= sig.generator_square(gens[k]);
            gens.drain(k..k + 2);
        } else {
            k += 1;
        }
    }
    sign
}

/// All signatures (p, q, r) with 1 <= p+q+r <= `max_n`.
pub fn signatures_up_to(max_n: u32) -> Vec<(u32, u32, u32)> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        for p in 0..=n {
            for q in 0..=(n - p) {
                out.push((p, q, n - p - q));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_knows_complex_numbers() {
        let sig = Signature::new(0, 1, 0);
        assert_eq!(blade_sign_bruteforce(&sig, 1, 1), -1);
        assert_eq!(blade_sign_bruteforce(&sig, 0, 1), 1);
    }

    #[test]
    fn oracle_handles_degenerate_generators() {
        let sig = Signature::new(1, 0, 1);
        assert_eq!(blade_sign_bruteforce(&sig, 0b10, 0b10), 0);
        assert_eq!(blade_sign_bruteforce(&sig, 0b01, 0b01), 1);
    }

    #[test]
    fn signature_enumeration_counts() {
        // n generators give (n+1)(n+2)/2 signatures
        assert_eq!(signatures_up_to(1).len(), 3);
        assert_eq!(signatures_up_to(2).len(), 3 + 6);
    }
}
