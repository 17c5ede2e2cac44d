//! Truncated expansions of `D_n` and their limits.
//!
//! Writing `rho = 1 + rho~` and expanding the product over `i` gives
//!
//! ```text
//! D_{n,K}   = 1 + (1/n!) sum_sigma sum_{1 <= |A| <= K} prod_{i in A} rho~(i/n, sigma_i/n)
//! D_K^(L)   = 1 + sum_{b : 2|b| <= K} prod_l lambda_l^(2 b_l) w(b_l)
//! D^(L)     = prod_l (1 - lambda_l^2)^(-1/2)
//! w(b)      = ((2b - 1)!!)^2 / (2b)! = C(2b, b) / 4^b
//! ```
//!
//! where `rho~^(L)` is the rank-`L` eigen-expansion of the centered kernel.

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bridge::BridgeSolution;
use crate::numeric::{neumaier_sum, unit_points, Matrix, NeumaierSum};
use crate::partition::permanent::for_each_permutation;
use crate::spectral::{SpectralError, Spectrum};

/// Largest `n` for the permutation-enumeration expansions.
pub const EXPANSION_CAP: usize = 8;
/// Largest number of functions in [`normalized_square_sum`].
pub const SQUARE_ORDER_CAP: usize = 6;
/// Enumeration branches whose weight falls below this are dropped.
pub const PRUNE_FLOOR: f64 = 1e-300;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("eigenvalue {0} lies outside (-1, 1)")]
    Domain(f64),
    #[error("{what} limited to {cap}, got {value}")]
    ScaleLimit { what: &'static str, value: usize, cap: usize },
    #[error("truncation order K = {k} exceeds n = {n}")]
    TruncationTooLarge { k: usize, n: usize },
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("functions must be sampled at the same n points")]
    RaggedSamples,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TruncationKind {
    /// `D_{n,K}` with the exact centered kernel.
    #[serde(rename = "finite-n")]
    FiniteN,
    /// `D_{n,K}^(L)` with the rank-`L` kernel.
    #[serde(rename = "finite-n-rank-L")]
    FiniteNRankL,
    /// `D_K^(L)`.
    #[serde(rename = "limit")]
    Limit,
    /// `D^(L)`.
    #[serde(rename = "closed-form")]
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationResult {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub value: f64,
    pub kind: TruncationKind,
}

/// `H_k(0)` for the probabilists' Hermite polynomials
/// `H_{k+1}(x) = x H_k(x) - k H_{k-1}(x)`.
pub fn hermite_zero(k: usize) -> BigInt {
    let mut prev = BigInt::from(1); // H_0(0)
    if k == 0 {
        return prev;
    }
    let mut cur = BigInt::from(0); // H_1(0)
    for j in 1..k {
        let next = -(BigInt::from(j) * &prev);
        prev = cur;
        cur = next;
    }
    cur
}

/// `(2b - 1)!!`, with `(-1)!! = 1`. Counts perfect matchings of `K_{2b}`.
pub fn odd_double_factorial(b: usize) -> BigInt {
    (1..=b).fold(BigInt::from(1), |acc, j| acc * (2 * j - 1))
}

/// `w(b) = ((2b - 1)!!)^2 / (2b)!` for `b = 0..=max_b`, by the ratio
/// `w(b) / w(b - 1) = (2b - 1) / (2b)`.
pub fn matching_weights(max_b: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(max_b + 1);
    w.push(1.0);
    for b in 1..=max_b {
        let prev = w[b - 1];
        w.push(prev * (2 * b - 1) as f64 / (2 * b) as f64);
    }
    w
}

fn check_open_interval(lambdas: &[f64]) -> Result<(), SeriesError> {
    match lambdas.iter().find(|l| l.is_nan() || l.abs() >= 1.0) {
        Some(&l) => Err(SeriesError::Domain(l)),
        None => Ok(()),
    }
}

/// `D_K^(L)`: all frequency vectors `b` with `sum b <= K / 2`.
///
/// The sum factorizes over eigenvalues, so it is accumulated as a truncated
/// product of power series in the total degree `sum b`.
pub fn dkl_limit(lambdas: &[f64], k: usize) -> Result<TruncationResult, SeriesError> {
    check_open_interval(lambdas)?;
    let half = k / 2;
    let w = matching_weights(half);
    let mut coeffs = vec![0.0; half + 1];
    coeffs[0] = 1.0;
    for &lambda in lambdas {
        let l2 = lambda * lambda;
        let mut factor = Vec::with_capacity(half + 1);
        let mut power = 1.0;
        for wb in &w {
            factor.push(wb * power);
            power *= l2;
        }
        let mut next = vec![0.0; half + 1];
        for (s, out) in next.iter_mut().enumerate() {
            *out = neumaier_sum((0..=s).map(|b| factor[b] * coeffs[s - b]));
        }
        coeffs = next;
    }
    Ok(TruncationResult {
        k,
        l: lambdas.len(),
        value: neumaier_sum(coeffs.iter().copied()),
        kind: TruncationKind::Limit,
    })
}

/// `D_K^(L)` by literal recursive enumeration of the frequency vectors,
/// dropping branches whose partial product falls below [`PRUNE_FLOOR`].
pub fn dkl_limit_enumerated(lambdas: &[f64], k: usize) -> Result<TruncationResult, SeriesError> {
    check_open_interval(lambdas)?;
    let half = k / 2;
    let w = matching_weights(half);
    let mut acc = NeumaierSum::new();
    enumerate_frequencies(lambdas, &w, half, 1.0, &mut acc);
    Ok(TruncationResult {
        k,
        l: lambdas.len(),
        value: acc.value(),
        kind: TruncationKind::Limit,
    })
}

fn enumerate_frequencies(lambdas: &[f64], w: &[f64], budget: usize, weight: f64, acc: &mut NeumaierSum) {
    let Some((&lambda, rest)) = lambdas.split_first() else {
        acc.add(weight);
        return;
    };
    let l2 = lambda * lambda;
    let mut power = 1.0;
    for b in 0..=budget {
        let term = weight * power * w[b];
        if term < PRUNE_FLOOR {
            break;
        }
        enumerate_frequencies(rest, w, budget - b, term, acc);
        power *= l2;
    }
}

/// `D^(L) = prod (1 - lambda^2)^(-1/2)`.
pub fn dl_closed_form(lambdas: &[f64]) -> Result<TruncationResult, SeriesError> {
    check_open_interval(lambdas)?;
    let log_det = neumaier_sum(lambdas.iter().map(|l| (-l * l).ln_1p()));
    Ok(TruncationResult {
        k: 0,
        l: lambdas.len(),
        value: (-0.5 * log_det).exp(),
        kind: TruncationKind::ClosedForm,
    })
}

/// `rho~(i/n, j/n) = rho(i/n, j/n) - 1`.
pub fn centered_unit_density(sol: &BridgeSolution, n: usize) -> Matrix {
    let mut r = sol.unit_density(n);
    r.data_mut().iter_mut().for_each(|v| *v -= 1.0);
    r
}

/// `D_{n,K}` from an `n x n` matrix of centered kernel values: for each
/// permutation the subset sum over `|A| = r` is the elementary symmetric
/// polynomial `e_r` of the diagonal entries `rho~(i, sigma_i)`.
pub fn dnk_exact(rho_tilde: &Matrix, k: usize) -> Result<TruncationResult, SeriesError> {
    let value = expansion_value(rho_tilde, k)?;
    Ok(TruncationResult {
        k,
        l: 0,
        value,
        kind: TruncationKind::FiniteN,
    })
}

fn expansion_value(rho_tilde: &Matrix, k: usize) -> Result<f64, SeriesError> {
    if !rho_tilde.is_square() {
        return Err(SeriesError::NotSquare {
            rows: rho_tilde.rows(),
            cols: rho_tilde.cols(),
        });
    }
    let n = rho_tilde.rows();
    if n > EXPANSION_CAP {
        return Err(SeriesError::ScaleLimit {
            what: "expansion size n",
            value: n,
            cap: EXPANSION_CAP,
        });
    }
    if k > n {
        return Err(SeriesError::TruncationTooLarge { k, n });
    }
    let mut acc = NeumaierSum::new();
    let mut e = vec![0.0; k + 1];
    for_each_permutation(n, |perm| {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[0] = 1.0;
        for (i, &j) in perm.iter().enumerate() {
            let v = rho_tilde[(i, j)];
            for r in (1..=k).rev() {
                e[r] += v * e[r - 1];
            }
        }
        for &er in &e[1..] {
            acc.add(er);
        }
    });
    // n <= 8, so n! is exact in f64.
    Ok(1.0 + acc.value() / factorial(n))
}

/// Nyström-extended eigenfunctions `phi_l(i/n)` for `l < count`.
pub fn extended_eigenfunctions(
    sol: &BridgeSolution,
    spectrum: &Spectrum,
    n: usize,
    count: usize,
) -> Result<Vec<Vec<f64>>, SeriesError> {
    let pts = unit_points(n);
    (0..count)
        .map(|l| spectrum.extend(sol, l, &pts).map_err(SeriesError::from))
        .collect()
}

/// Rank-`L` centered kernel `sum_{l < L} lambda_l phi_l(i/n) phi_l(j/n)`.
pub fn rank_l_kernel(sol: &BridgeSolution, spectrum: &Spectrum, n: usize, l: usize) -> Result<Matrix, SeriesError> {
    let phis = extended_eigenfunctions(sol, spectrum, n, l)?;
    Ok(Matrix::from_fn(n, n, |i, j| {
        neumaier_sum(
            phis.iter()
                .zip(&spectrum.eigenvalues)
                .map(|(phi, lambda)| lambda * phi[i] * phi[j]),
        )
    }))
}

/// `D_{n,K}^(L)`.
pub fn dnkl_exact(
    sol: &BridgeSolution,
    spectrum: &Spectrum,
    n: usize,
    k: usize,
    l: usize,
) -> Result<TruncationResult, SeriesError> {
    if n > EXPANSION_CAP {
        return Err(SeriesError::ScaleLimit {
            what: "expansion size n",
            value: n,
            cap: EXPANSION_CAP,
        });
    }
    let kernel = rank_l_kernel(sol, spectrum, n, l)?;
    Ok(TruncationResult {
        k,
        l,
        value: expansion_value(&kernel, k)?,
        kind: TruncationKind::FiniteNRankL,
    })
}

/// `[n^(-r/2) sum_{distinct i_1..i_r} prod_t phi_t(i_t / n)]^2` for `r`
/// functions sampled at `i/n`.
///
/// The sum over distinct indices is obtained by Möbius inversion over set
/// partitions of the `r` slots: each block contributes the full sum of the
/// product of its functions, weighted by `(-1)^(|B|-1) (|B|-1)!`.
pub fn normalized_square_sum(phis: &[Vec<f64>]) -> Result<f64, SeriesError> {
    let r = phis.len();
    if r > SQUARE_ORDER_CAP {
        return Err(SeriesError::ScaleLimit {
            what: "number of functions r",
            value: r,
            cap: SQUARE_ORDER_CAP,
        });
    }
    let n = phis.first().map_or(0, Vec::len);
    if phis.iter().any(|p| p.len() != n) {
        return Err(SeriesError::RaggedSamples);
    }
    if r > n {
        return Err(SeriesError::TruncationTooLarge { k: r, n });
    }
    let mut total = NeumaierSum::new();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for_each_set_partition(0, r, &mut blocks, &mut |partition| {
        let mut term = 1.0;
        for block in partition {
            let size = block.len();
            let moebius = if size % 2 == 1 { 1.0 } else { -1.0 } * factorial(size - 1);
            let block_sum = neumaier_sum((0..n).map(|i| block.iter().map(|&t| phis[t][i]).product::<f64>()));
            term *= moebius * block_sum;
        }
        total.add(term);
    });
    let scaled = total.value() / (n as f64).powf(r as f64 / 2.0);
    Ok(scaled * scaled)
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

fn for_each_set_partition(next: usize, r: usize, blocks: &mut Vec<Vec<usize>>, f: &mut impl FnMut(&[Vec<usize>])) {
    if next == r {
        f(blocks);
        return;
    }
    for b in 0..blocks.len() {
        blocks[b].push(next);
        for_each_set_partition(next + 1, r, blocks, f);
        blocks[b].pop();
    }
    blocks.push(vec![next]);
    for_each_set_partition(next + 1, r, blocks, f);
    blocks.pop();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridge::{self, DEFAULT_MAX_ITER, DEFAULT_TOL};
    use crate::costs::CostSpec;
    use crate::partition::{compute_dn, ExactMethod};
    use crate::spectral::spectrum_of;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn quad(m: usize) -> BridgeSolution {
        bridge::solve(&CostSpec::quadratic(1.0).unwrap(), m, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap()
    }

    /// `D_{n,K}` through the injective-tuple formulation:
    /// `1 + sum_r (n-r)!/n! sum_{|A| = r} sum_{j injective} prod rho~(i, j_i)`.
    fn dnk_by_injective_tuples(rt: &Matrix, k: usize) -> f64 {
        fn tuples(rt: &Matrix, rows: &[usize], used: &mut Vec<bool>, acc: f64, out: &mut f64) {
            let Some((&i, rest)) = rows.split_first() else {
                *out += acc;
                return;
            };
            for j in 0..rt.cols() {
                if !used[j] {
                    used[j] = true;
                    tuples(rt, rest, used, acc * rt[(i, j)], out);
                    used[j] = false;
                }
            }
        }
        let n = rt.rows();
        let mut total = 1.0;
        for mask in 1u32..(1 << n) {
            let rows: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let r = rows.len();
            if r > k {
                continue;
            }
            let mut s = 0.0;
            tuples(rt, &rows, &mut vec![false; n], 1.0, &mut s);
            total += s * factorial(n - r) / factorial(n);
        }
        total
    }

    #[test]
    fn hermite_values() {
        assert_eq!(hermite_zero(0), BigInt::from(1));
        assert_eq!(hermite_zero(1), BigInt::from(0));
        assert_eq!(hermite_zero(2), BigInt::from(-1));
        assert_eq!(hermite_zero(4), BigInt::from(3));
        assert_eq!(hermite_zero(6), BigInt::from(-15));
    }

    #[test]
    fn double_factorials() {
        assert_eq!(odd_double_factorial(0), BigInt::from(1));
        assert_eq!(odd_double_factorial(2), BigInt::from(3));
        assert_eq!(odd_double_factorial(5), BigInt::from(945));
    }

    #[test]
    fn hermite_matches_double_factorial_and_matchings() {
        for b in 0..=20usize {
            let sign = if b % 2 == 0 { 1 } else { -1 };
            assert_eq!(hermite_zero(2 * b), sign * odd_double_factorial(b));
            assert_eq!(hermite_zero(2 * b + 1), BigInt::from(0));
        }
        // Perfect matchings of K_6 by pairing the first vertex recursively.
        fn matchings(k: usize) -> u64 {
            if k == 0 {
                1
            } else {
                (k as u64 - 1) * matchings(k - 2)
            }
        }
        for b in 0..=8 {
            assert_eq!(odd_double_factorial(b), BigInt::from(matchings(2 * b)));
        }
    }

    #[test]
    fn matching_weights_are_central_binomials() {
        let w = matching_weights(30);
        for (b, wb) in w.iter().enumerate() {
            let exact = odd_double_factorial(b).pow(2u32);
            let fact: BigInt = (1..=2 * b).fold(BigInt::from(1), |a, j| a * j);
            let ratio = exact.to_string().parse::<f64>().unwrap() / fact.to_string().parse::<f64>().unwrap();
            assert!((wb - ratio).abs() <= 1e-14 * ratio, "b = {b}");
        }
    }

    #[test]
    fn limit_trivial_cases() {
        assert_eq!(dkl_limit(&[0.3, 0.5], 0).unwrap().value, 1.0);
        assert_eq!(dkl_limit(&[0.0], 40).unwrap().value, 1.0);
        assert_eq!(dkl_limit(&[], 10).unwrap().value, 1.0);
        assert!(matches!(dkl_limit(&[1.0], 4), Err(SeriesError::Domain(_))));
    }

    #[test]
    fn single_eigenvalue_series_converges() {
        let r = dkl_limit(&[0.6], 400).unwrap();
        assert!((r.value - 1.25).abs() < 1e-12);
        let r = dkl_limit(&[0.3], 60).unwrap();
        assert!((r.value - 1.0 / (1.0f64 - 0.09).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn dp_matches_enumeration() {
        let lambdas = [0.5, -0.3, 0.2, 0.05];
        for k in [0, 2, 6, 10, 30] {
            let a = dkl_limit(&lambdas, k).unwrap().value;
            let b = dkl_limit_enumerated(&lambdas, k).unwrap().value;
            assert!((a - b).abs() < 1e-14, "K = {k}: {a} vs {b}");
        }
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(dl_closed_form(&[]).unwrap().value, 1.0);
        assert!((dl_closed_form(&[0.6]).unwrap().value - 1.25).abs() < 1e-15);
        let expect = (0.64f64 * 0.91).powf(-0.5);
        assert!((dl_closed_form(&[0.6, 0.3]).unwrap().value - expect).abs() < 1e-15);
        assert!(dl_closed_form(&[-1.0]).is_err());
    }

    #[test]
    fn product_structure() {
        let joint = dkl_limit(&[0.6, 0.3], 200).unwrap().value;
        let split = dl_closed_form(&[0.6]).unwrap().value * dl_closed_form(&[0.3]).unwrap().value;
        assert!((joint - split).abs() < 1e-12);
    }

    #[test]
    fn expansion_matches_injective_tuples() {
        let sol = quad(128);
        for n in 2..=6 {
            let rt = centered_unit_density(&sol, n);
            for k in 0..=n {
                let a = dnk_exact(&rt, k).unwrap().value;
                let b = dnk_by_injective_tuples(&rt, k);
                assert!((a - b).abs() < 1e-12, "n = {n}, K = {k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn full_expansion_reconstitutes_dn() {
        let sol = quad(128);
        for n in 3..=7 {
            let rt = centered_unit_density(&sol, n);
            let a = dnk_exact(&rt, n).unwrap().value;
            let d = compute_dn(&sol, n, ExactMethod::Brute).unwrap().d_n;
            assert!((a - d).abs() < 1e-12 * d, "n = {n}");
        }
    }

    #[test]
    fn first_order_term_is_a_double_sum() {
        let sol = quad(128);
        let n = 7;
        let rt = centered_unit_density(&sol, n);
        let expect = 1.0 + neumaier_sum(rt.as_slice().iter().copied()) / n as f64;
        assert!((dnk_exact(&rt, 1).unwrap().value - expect).abs() < 1e-13);
    }

    #[test]
    fn zero_cost_expansions_are_one() {
        let sol = bridge::solve(&CostSpec::zero(), 32, 1e-12, 10).unwrap();
        let rt = centered_unit_density(&sol, 5);
        assert_eq!(dnk_exact(&rt, 5).unwrap().value, 1.0);
        let spec = spectrum_of(&sol).unwrap();
        assert_eq!(dnkl_exact(&sol, &spec, 5, 5, 0).unwrap().value, 1.0);
    }

    #[test]
    fn rank_l_expansion_approaches_exact() {
        let sol = quad(256);
        let spec = spectrum_of(&sol).unwrap();
        let n = 6;
        let exact = dnk_exact(&centered_unit_density(&sol, n), n).unwrap().value;
        let mut prev = f64::INFINITY;
        for l in 1..=spec.len() {
            let err = (dnkl_exact(&sol, &spec, n, n, l).unwrap().value - exact).abs();
            assert!(err <= prev * 1.5 + 1e-12, "L = {l}");
            prev = err;
        }
        assert!(prev < 1e-9, "{prev}");
    }

    #[test]
    fn rank_one_double_sum() {
        let sol = quad(256);
        let spec = spectrum_of(&sol).unwrap();
        let n = 6;
        let phi = spec.extend(&sol, 0, &unit_points(n)).unwrap();
        let lambda = spec.eigenvalues[0];
        // r = 1: (1/n) sum_ij k_ij. r = 2: (1/(n(n-1))) sum over i1 != i2, j1 != j2.
        let k = |i: usize, j: usize| lambda * phi[i] * phi[j];
        let mut first = 0.0;
        let mut second = 0.0;
        for i1 in 0..n {
            for j1 in 0..n {
                first += k(i1, j1);
                for i2 in (i1 + 1)..n {
                    for j2 in 0..n {
                        if j2 != j1 {
                            second += k(i1, j1) * k(i2, j2);
                        }
                    }
                }
            }
        }
        let expect = 1.0 + first / n as f64 + second / (n * (n - 1)) as f64;
        let got = dnkl_exact(&sol, &spec, n, 2, 1).unwrap().value;
        assert!((got - expect).abs() < 1e-13, "{got} vs {expect}");
    }

    #[test]
    fn expansion_limits() {
        let big = Matrix::zeros(9, 9);
        assert!(matches!(dnk_exact(&big, 2), Err(SeriesError::ScaleLimit { .. })));
        assert!(matches!(
            dnk_exact(&Matrix::zeros(3, 3), 4),
            Err(SeriesError::TruncationTooLarge { .. })
        ));
    }

    fn square_sum_by_enumeration(phis: &[Vec<f64>]) -> f64 {
        fn rec(phis: &[Vec<f64>], t: usize, used: &mut Vec<bool>, acc: f64, out: &mut f64) {
            if t == phis.len() {
                *out += acc;
                return;
            }
            for i in 0..used.len() {
                if !used[i] {
                    used[i] = true;
                    rec(phis, t + 1, used, acc * phis[t][i], out);
                    used[i] = false;
                }
            }
        }
        let n = phis[0].len();
        let mut s = 0.0;
        rec(phis, 0, &mut vec![false; n], 1.0, &mut s);
        let v = s / (n as f64).powf(phis.len() as f64 / 2.0);
        v * v
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn square_sum_matches_enumeration(r in 1usize..=4, n in 4usize..=7, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let phis: Vec<Vec<f64>> = (0..r).map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
            let a = normalized_square_sum(&phis).unwrap();
            let b = square_sum_by_enumeration(&phis);
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b));
        }

        #[test]
        fn limit_is_monotone_in_k(l1 in -0.95f64..0.95, l2 in -0.95f64..0.95, k in 0usize..40) {
            let a = dkl_limit(&[l1, l2], k).unwrap().value;
            let b = dkl_limit(&[l1, l2], k + 2).unwrap().value;
            prop_assert!(a >= 1.0);
            prop_assert!(b >= a);
            prop_assert!(b <= dl_closed_form(&[l1, l2]).unwrap().value * (1.0 + 1e-14));
        }
    }

    #[test]
    fn square_sum_trends() {
        let sol = quad(256);
        let spec = spectrum_of(&sol).unwrap();
        let mut same = Vec::new();
        let mut cross = Vec::new();
        let mut single = Vec::new();
        for n in [10, 40, 160] {
            let phis = extended_eigenfunctions(&sol, &spec, n, 2).unwrap();
            // The points i/n are one-sided, so the discrete mean decays like 1/n.
            single.push(normalized_square_sum(&phis[..1]).unwrap());
            same.push(normalized_square_sum(&[phis[0].clone(), phis[0].clone()]).unwrap());
            cross.push(normalized_square_sum(&phis).unwrap());
        }
        assert!(single[2] < single[1] && single[1] < single[0] && single[2] < 0.05, "{single:?}");
        assert!((same[2] - 1.0).abs() < (same[0] - 1.0).abs());
        assert!((same[2] - 1.0).abs() < 0.05);
        assert!(cross[2] < cross[0] && cross[2] < 0.01, "{cross:?}");
    }
}
