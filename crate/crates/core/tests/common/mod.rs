//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use idionet::immune::{IdiotopeMatrix, ParatopeMatrix};
use idionet::sensing::AntigenSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const N: usize = 16;
pub const L: usize = 8;

/// S1, S2, S3 and Sg computed with plain nested loops straight from the
/// matching-function definitions.
pub struct Naive {
    pub s1: [f64; N],
    pub alpha: usize,
    pub s2: [f64; N],
    pub s3: [f64; N],
    pub sg: [f64; N],
}

pub fn naive_strengths(
    p: &[[f64; L]; N],
    idio: &[[f64; L]; N],
    presenting: &[usize],
    dominant: usize,
    c: &[f64; N],
    k1: f64,
) -> Naive {
    let mut g = [[0.0; L]; N];
    for i in 0..N {
        for j in 0..L {
            if !presenting.contains(&j) {
                continue;
            }
            g[i][j] = if j == dominant {
                if p[i][j] > 0.0 {
                    2.0
                } else {
                    0.0
                }
            } else {
                0.25
            };
        }
    }
    let mut s1 = [0.0; N];
    for i in 0..N {
        for j in 0..L {
            s1[i] += p[i][j] * g[i][j];
        }
    }
    let mut alpha = 0;
    for i in 0..N {
        if s1[i] > s1[alpha] {
            alpha = i;
        }
    }
    let mut h = [0.0; N];
    for i in 0..N {
        for &j in presenting {
            if p[i][j] > 0.0 {
                h[i] = 1.0;
            }
        }
    }
    let mut s2 = [0.0; N];
    let mut s3 = [0.0; N];
    let mut sg = [0.0; N];
    for i in 0..N {
        for j in 0..L {
            s2[i] += p[alpha][j] * idio[i][j] * h[i] * c[i] * c[alpha];
            s3[i] += (1.0 - p[i][j]) * idio[alpha][j] * h[i] * c[i] * c[alpha];
        }
        sg[i] = s1[i] - k1 * s2[i] + s3[i];
    }
    Naive {
        s1,
        alpha,
        s2,
        s3,
        sg,
    }
}

/// A random paratope with roughly one element in eight forced to zero.
pub fn random_paratope(rng: &mut ChaCha8Rng) -> ParatopeMatrix {
    let mut rows = [[0.0; L]; N];
    for v in rows.iter_mut().flatten() {
        *v = if rng.gen_bool(0.125) { 0.0 } else { rng.gen() };
    }
    ParatopeMatrix::new(rows)
}

/// A random idiotope drawn from the allowed element values.
pub fn random_idiotope(rng: &mut ChaCha8Rng) -> IdiotopeMatrix {
    let mut rows = [[0.0; L]; N];
    for v in rows.iter_mut().flatten() {
        *v = [0.0, 0.5, 1.0][rng.gen_range(0..3)];
    }
    IdiotopeMatrix::from_rows(rows).unwrap()
}

/// A non-empty presenting set and its dominant member.
pub fn random_presenting(rng: &mut ChaCha8Rng) -> (AntigenSet, usize) {
    loop {
        let set: AntigenSet = (0..L).filter(|_| rng.gen_bool(0.3)).collect();
        if let Some(d) = idionet::sensing::dominant_of(set) {
            return (set, d);
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One-sided permutation test: the share of relabellings whose mean
/// difference (a − b) is at most the observed one. Exhaustive for small
/// samples.
pub fn permutation_p(a: &[f64], b: &[f64]) -> f64 {
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = all.len();
    let na = a.len();
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let observed = mean(a) - mean(b);
    let total: f64 = all.iter().sum();
    let mut hits = 0u64;
    let mut count = 0u64;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != na {
            continue;
        }
        let sa: f64 = (0..n)
            .filter(|k| mask & (1 << k) != 0)
            .map(|k| all[k])
            .sum();
        let diff = sa / na as f64 - (total - sa) / (n - na) as f64;
        if diff <= observed + 1e-12 {
            hits += 1;
        }
        count += 1;
    }
    hits as f64 / count as f64
}
