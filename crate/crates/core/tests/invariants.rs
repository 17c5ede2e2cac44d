//! Cross-module invariants and independent oracles.

use std::sync::OnceLock;

use mallows_core::bridge::{self, BridgeSolution, DEFAULT_MAX_ITER, DEFAULT_TOL};
use mallows_core::costs::CostSpec;
use mallows_core::numeric::{midpoint_grid, rel_diff, Matrix};
use mallows_core::partition::{
    compute_dn, mc_estimate_dn, permanent_brute, permanent_ryser, scaled_sequence, ExactMethod, TableSettings,
};
use mallows_core::series::{dkl_limit, dl_closed_form};
use mallows_core::spectral::spectrum_of;
use proptest::prelude::*;

fn beta_one() -> &'static BridgeSolution {
    static SOL: OnceLock<BridgeSolution> = OnceLock::new();
    SOL.get_or_init(|| bridge::solve(&CostSpec::quadratic(1.0).unwrap(), 256, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap())
}

#[test]
fn riemann_gap_follows_euler_maclaurin() {
    // n * gap(n) -> (a'(0) - a'(1)) / 12 = a'(0) / 6 for a reflection-symmetric
    // potential; a'(0) from a one-sided difference of the off-grid potential.
    // The quadrature error of int a enters as n * O(1/m^2), hence the fine grid.
    let sol = bridge::solve(&CostSpec::quadratic(1.0).unwrap(), 1024, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    let h = 1e-4;
    let slope = (-3.0 * sol.potential_at(0.0).unwrap() + 4.0 * sol.potential_at(h).unwrap()
        - sol.potential_at(2.0 * h).unwrap())
        / (2.0 * h);
    for n in [10, 25, 50] {
        let scaled = n as f64 * sol.riemann_gap(n);
        assert!(rel_diff(scaled, slope / 6.0) < 0.01, "n = {n}: {scaled} vs {}", slope / 6.0);
    }
}

#[test]
fn scaled_and_dn_converge_together() {
    let sol = beta_one();
    let pts = scaled_sequence(sol, 6, 20, &TableSettings::default()).unwrap();
    let gaps: Vec<f64> = pts.iter().map(|p| (p.scaled - p.d_n).abs()).collect();
    assert!(gaps.last().unwrap() < &gaps[0]);
    let p20 = pts.last().unwrap();
    let bound = (2.0 * sol.riemann_gap(20).abs()).exp();
    let ratio = p20.scaled / p20.d_n;
    assert!(ratio <= bound && ratio >= 1.0 / bound, "{ratio} vs {bound}");
}

#[test]
fn monte_carlo_stderr_scales_with_sample_count() {
    let sol = beta_one();
    for seed in 0..3 {
        let small = mc_estimate_dn(sol, 8, 20_000, seed).unwrap().mc_stderr.unwrap();
        let large = mc_estimate_dn(sol, 8, 80_000, seed + 100).unwrap().mc_stderr.unwrap();
        let ratio = large / small;
        assert!((ratio - 0.5).abs() < 0.15, "seed {seed}: ratio {ratio}");
    }
}

#[test]
fn closed_form_matches_spectral_constant() {
    let sol = beta_one();
    let spec = spectrum_of(sol).unwrap();
    let c = spec.conjectured_constant().unwrap();
    assert!(rel_diff(dl_closed_form(&spec.eigenvalues).unwrap().value, c) < 1e-12);
    // Eigenvalues here are far from 1, so a modest K already converges.
    assert!(rel_diff(dkl_limit(&spec.eigenvalues, 40).unwrap().value, c) < 1e-12);
}

#[test]
fn tabulated_quadratic_reproduces_builtin_pipeline() {
    let m = 64;
    let xs = midpoint_grid(m);
    let mut text = format!("{m}\n");
    for x in &xs {
        let row: Vec<String> = xs.iter().map(|y| ((x - y) * (x - y)).to_string()).collect();
        text.push_str(&row.join(" "));
        text.push('\n');
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("quad.txt");
    std::fs::write(&path, text).unwrap();
    let kind = format!("table:{}", path.display()).parse().unwrap();
    let table = CostSpec::new(kind, 1.0).unwrap();
    let a = bridge::solve(&table, m, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    let b = bridge::solve(&CostSpec::quadratic(1.0).unwrap(), m, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    assert!((a.gamma0() - b.gamma0()).abs() < 1e-12);
    let ca = spectrum_of(&a).unwrap().conjectured_constant().unwrap();
    let cb = spectrum_of(&b).unwrap().conjectured_constant().unwrap();
    assert!(rel_diff(ca, cb) < 1e-10);
}

#[test]
fn bridge_json_round_trip_preserves_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bridge.json");
    let sol = beta_one();
    sol.write_json(&path).unwrap();
    let back = BridgeSolution::read_json(&path).unwrap();
    assert_eq!(back.a_values(), sol.a_values());
    let d1 = compute_dn(sol, 7, ExactMethod::Brute).unwrap().d_n;
    let d2 = compute_dn(&back, 7, ExactMethod::Brute).unwrap().d_n;
    assert_eq!(d1, d2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn permanent_of_nonnegative_matrix_is_nonnegative(n in 1usize..=8, entries in prop::collection::vec(0.0f64..3.0, 64)) {
        let m = Matrix::from_fn(n, n, |i, j| entries[i * 8 + j]);
        let brute = permanent_brute(&m).unwrap();
        let ryser = permanent_ryser(&m).unwrap();
        prop_assert!(brute >= 0.0);
        prop_assert!((ryser - brute).abs() <= 1e-12 * brute.max(1e-300) + 1e-13);
    }

    #[test]
    fn permanent_is_multilinear_in_rows(n in 2usize..=7, scale in 0.1f64..4.0, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = Matrix::from_fn(n, n, |_, _| rng.gen_range(0.5..1.5));
        let mut scaled = m.clone();
        scaled.row_mut(0).iter_mut().for_each(|v| *v *= scale);
        let a = permanent_ryser(&m).unwrap();
        let b = permanent_ryser(&scaled).unwrap();
        prop_assert!(rel_diff(b, scale * a) < 1e-12);
    }

    #[test]
    fn bridge_is_reflection_symmetric(beta in 0.1f64..3.0) {
        let sol = bridge::solve(&CostSpec::quadratic(beta).unwrap(), 64, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        prop_assert!(sol.reflection_asymmetry() < 1e-12);
        prop_assert!(sol.marginal_residual() < 1e-10);
        let (g1, g2) = sol.gamma0_two_ways();
        prop_assert!((g1 - g2).abs() < 1e-10);
    }
}
