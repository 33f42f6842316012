//! Reference implementations used to validate the fast paths.
//!
//! Everything here is written for obviousness rather than speed: a textbook
//! Levenshtein table, a per-position neighbor scan, and the histogram L1.
//! None of it shares code with [`crate::matcher`] or [`crate::magic`].

use crate::error::LengthError;
use crate::seq::{Base, BaseHistogram};

/// Levenshtein distance (unit-cost substitutions, insertions, deletions).
pub fn edit_distance(s1: &[Base], s2: &[Base]) -> usize {
    if s1.is_empty() {
        return s2.len();
    }
    if s2.is_empty() {
        return s1.len();
    }
    let mut prev: Vec<usize> = (0..=s2.len()).collect();
    let mut cur = vec![0; s2.len() + 1];
    for (i, a) in s1.iter().enumerate() {
        cur[0] = i + 1;
        for (j, b) in s2.iter().enumerate() {
            let sub = prev[j] + usize::from(a != b);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[s2.len()]
}

/// |A1-A2| + |T1-T2| + |G1-G2| + |C1-C2|.
pub fn histogram_l1(h1: &BaseHistogram, h2: &BaseHistogram) -> u32 {
    let d = |x: u32, y: u32| (x as i64 - y as i64).unsigned_abs() as u32;
    d(h1.a, h2.a) + d(h1.t, h2.t) + d(h1.g, h2.g) + d(h1.c, h2.c)
}

/// Position `i` is an edit when `query[i]` equals none of `kmer[i-1]`,
/// `kmer[i]`, `kmer[i+1]`. A neighbor outside the k-mer counts as a mismatch.
pub fn brute_force_edits_vector(kmer: &[Base], query: &[Base]) -> Result<Vec<bool>, LengthError> {
    if kmer.len() != query.len() {
        return Err(LengthError { expected: kmer.len(), actual: query.len() });
    }
    let k = kmer.len() as isize;
    let at = |j: isize| if (0..k).contains(&j) { Some(kmer[j as usize]) } else { None };
    Ok(query
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let i = i as isize;
            ![i - 1, i, i + 1].iter().any(|&j| at(j) == Some(*q))
        })
        .collect())
}

pub fn hamming_distance(s1: &[Base], s2: &[Base]) -> Result<usize, LengthError> {
    if s1.len() != s2.len() {
        return Err(LengthError { expected: s1.len(), actual: s2.len() });
    }
    Ok(s1.iter().zip(s2).filter(|(a, b)| a != b).count())
}
