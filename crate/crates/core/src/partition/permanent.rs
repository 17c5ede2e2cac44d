//! Matrix permanents: brute-force enumeration and Ryser's inclusion–exclusion
//! formula.
//!
//! The Ryser evaluation uses the Nijenhuis–Wilf form
//!
//! ```text
//! per(A) = (-1)^(n-1) 2 sum_{S ⊆ [n-1]} (-1)^|S| prod_i (x_i + sum_{j in S} a_ij),
//! x_i = a_{i,n} - (1/2) sum_j a_ij
//! ```
//!
//! which halves the subset lattice and centers the row sums. For positive
//! matrices that is the difference between losing ~11 and ~3 significant
//! digits to cancellation at `n = 22`. Subsets are visited in Gray-code order
//! so each step updates the row sums with a single column.

use rayon::prelude::*;

use super::PartitionError;
use crate::numeric::{Matrix, NeumaierSum};

pub const BRUTE_CAP: usize = 9;
pub const DEFAULT_RYSER_CAP: usize = 26;
/// Hard ceiling for the overridable cap (the subset index is a `u64`).
pub const RYSER_MAX: usize = 40;

/// Row sums are rebuilt from scratch at Gray-code indices that are multiples
/// of this, bounding the drift of the incremental updates.
const REFRESH_INTERVAL: u64 = 1 << 10;
/// Fixed block length of the parallel decomposition. Independent of the
/// thread count so results are bit-identical across machines.
const BLOCK_LEN: u64 = 1 << 16;

fn check_square(m: &Matrix) -> Result<usize, PartitionError> {
    if !m.is_square() {
        return Err(PartitionError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if m.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(PartitionError::NonFinite);
    }
    Ok(m.rows())
}

/// Permanent by summing over all `n!` permutations (Heap's algorithm).
pub fn permanent_brute(m: &Matrix) -> Result<f64, PartitionError> {
    let n = check_square(m)?;
    if n > BRUTE_CAP {
        return Err(PartitionError::SizeLimit {
            method: "brute",
            n,
            cap: BRUTE_CAP,
        });
    }
    if n == 0 {
        return Ok(1.0);
    }
    let mut acc = NeumaierSum::new();
    for_each_permutation(n, |p| acc.add(p.iter().enumerate().map(|(i, &j)| m[(i, j)]).product::<f64>()));
    Ok(acc.value())
}

/// Calls `f` once for every permutation of `0..n` (Heap's algorithm).
pub(crate) fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut counters = vec![0usize; n];
    f(&perm);
    let mut i = 1;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            f(&perm);
            counters[i] += 1;
            i = 1;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
}

/// Ryser permanent with the default size cap.
pub fn permanent_ryser(m: &Matrix) -> Result<f64, PartitionError> {
    permanent_ryser_capped(m, DEFAULT_RYSER_CAP)
}

pub fn permanent_ryser_capped(m: &Matrix, cap: usize) -> Result<f64, PartitionError> {
    let n = check_square(m)?;
    let cap = cap.min(RYSER_MAX);
    if n > cap {
        return Err(PartitionError::SizeLimit {
            method: "ryser",
            n,
            cap,
        });
    }
    if n == 0 {
        return Ok(1.0);
    }

    let last = n - 1;
    let offsets: Vec<f64> = (0..n)
        .map(|i| {
            let row_sum: NeumaierSum = m.row(i).iter().copied().collect();
            m[(i, last)] - 0.5 * row_sum.value()
        })
        .collect();

    let total: u64 = 1 << last;
    let blocks = total.div_ceil(BLOCK_LEN);
    let partials: Vec<NeumaierSum> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * BLOCK_LEN;
            let end = (start + BLOCK_LEN).min(total);
            ryser_block(m, &offsets, start, end)
        })
        .collect();

    let mut acc = NeumaierSum::new();
    for p in &partials {
        acc.merge(p);
    }
    let sign = if last % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * 2.0 * acc.value())
}

/// Row sums `x_i + sum_{j in subset} a_ij` for a subset bitmask over the
/// first `n - 1` columns.
fn fresh_row_sums(m: &Matrix, offsets: &[f64], subset: u64, sums: &mut [f64]) {
    for (i, s) in sums.iter_mut().enumerate() {
        let row = m.row(i);
        let mut v = offsets[i];
        let mut bits = subset;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            v += row[j];
            bits &= bits - 1;
        }
        *s = v;
    }
}

/// Signed terms for Gray-code indices `start..end`.
fn ryser_block(m: &Matrix, offsets: &[f64], start: u64, end: u64) -> NeumaierSum {
    let n = m.rows();
    let mut sums = vec![0.0; n];
    let mut acc = NeumaierSum::new();
    let gray = |k: u64| k ^ (k >> 1);
    for k in start..end {
        if k == start || k % REFRESH_INTERVAL == 0 {
            fresh_row_sums(m, offsets, gray(k), &mut sums);
        } else {
            let j = k.trailing_zeros() as usize;
            let added = gray(k) & (1 << j) != 0;
            for (i, s) in sums.iter_mut().enumerate() {
                let a = m[(i, j)];
                if added {
                    *s += a;
                } else {
                    *s -= a;
                }
            }
        }
        let term: f64 = sums.iter().product();
        // popcount(gray(k)) has the parity of k.
        if k % 2 == 0 {
            acc.add(term);
        } else {
            acc.add(-term);
        }
    }
    acc
}
