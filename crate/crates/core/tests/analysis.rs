mod common;

use common::*;
use num_rational::Rational64;
use proptest::prelude::*;
use semiwalk::analysis::conditional::{estimate_conditional_grid, LadderOptions};
use semiwalk::analysis::exact_nd::{exact_nd, NdMode, NdOptions};
use semiwalk::analysis::index::{estimate_index_symmetric, IndexMode, IndexOptions};
use semiwalk::analysis::tail::{moment_expansion_check, random_positive_law, random_rational_a, tail_crossing, TransformMode, X1Law};
use semiwalk::analysis::weak::{check_weak_semiconservative, CheckMethod, Verdict, WeakOptions};
use semiwalk::families::*;
use semiwalk::rng::{domain, RngStream};
use semiwalk::Error;

/// `Σb / Σc` from the parts.
fn pooled(b: &[f64], c: &[f64]) -> f64 {
    b.iter().sum::<f64>() / c.iter().sum::<f64>()
}

#[test]
fn fraction_comparison_fails_without_common_denominators() {
    let (b, c) = ([1.0, 9.0], [10.0, 10.0]);
    let (b2, c2) = ([20.0, 1.0], [100.0, 1.0]);
    assert!(b.iter().zip(&c).zip(b2.iter().zip(&c2)).all(|((x, y), (u, v))| x / y <= u / v));
    assert!(pooled(&b, &c) > pooled(&b2, &c2));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// Termwise `b_j/c_j <= b'_j/c'_j` pools when `c'` is proportional to `c`.
    #[test]
    fn fraction_comparison_with_proportional_denominators(
        parts in prop::collection::vec((1u32..100, 1u32..100, 0u32..50), 1..8),
        k in 1u32..5,
    ) {
        let c: Vec<f64> = parts.iter().map(|p| p.0 as f64).collect();
        let b: Vec<f64> = parts.iter().map(|p| p.1 as f64).collect();
        let c2: Vec<f64> = c.iter().map(|x| x * k as f64).collect();
        // b'_j = k b_j + extra_j keeps b'_j / c'_j >= b_j / c_j.
        let b2: Vec<f64> = b.iter().zip(&parts).map(|(x, p)| x * k as f64 + p.2 as f64).collect();
        prop_assert!(pooled(&b, &c) <= pooled(&b2, &c2) * (1.0 + 1e-12));
    }
}

#[test]
fn exact_oracle_matches_monte_carlo_for_simple_member() {
    let m = pm(2, 2).member(&FamilyParameter::simple(2)).unwrap();
    let zs = [r(6, 1), r(8, 1)];
    let nd: Vec<_> = zs.iter().map(|&z| exact_nd(&m, z, NdMode::Simple, &NdOptions::default())).collect();
    assert!(matches!(nd[0], Err(Error::NoComposition(_))));
    let exact = nd[1].as_ref().unwrap().ratio;
    assert!((exact - 5.0 / 16.0).abs() < 1e-12);
    let opts = LadderOptions { base_horizon: 128, paths: 100_000, seed: 31, ..LadderOptions::default() };
    let mc = estimate_conditional_grid(&m, &zs, &opts).unwrap();
    assert!(matches!(mc[0], Err(Error::InsufficientData(_))), "{:?}", mc[0]);
    let e = &mc[1].as_ref().unwrap().estimate;
    assert!((e.value - exact).abs() < 3.0 * e.stderr, "{} ± {} vs {exact}", e.value, e.stderr);
}

#[test]
fn exact_oracle_matches_monte_carlo_for_regular_member() {
    let a = FamilyParameter::exact(vec![r(3, 2), r(1, 2)]).unwrap();
    let m = pm(2, 2).member(&a).unwrap();
    let zs = [r(4, 1), r(6, 1), r(8, 1)];
    let opts = LadderOptions { base_horizon: 256, paths: 60_000, seed: 8, ..LadderOptions::default() };
    let mc = estimate_conditional_grid(&m, &zs, &opts).unwrap();
    for (z, est) in zs.iter().zip(mc) {
        let exact = exact_nd(&m, *z, NdMode::Regular, &NdOptions::default()).unwrap();
        let e = est.unwrap().estimate;
        assert!((e.value - exact.ratio).abs() < 3.0 * e.stderr + exact.numerical_error, "z={z}: {} ± {} vs {}", e.value, e.stderr, exact.ratio);
    }
}

fn signs(rep: &semiwalk::analysis::weak::WeakSemiReport) -> Vec<Vec<semiwalk::analysis::weak::Sign>> {
    rep.members.iter().map(|m| m.margins.iter().map(|p| p.sign).collect()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    /// Scaling the base law and the level grid by `c` leaves verdict and sign pattern unchanged.
    #[test]
    fn weak_check_is_scale_invariant(num in 1i64..6, den in 1i64..4) {
        let c = Rational64::new(num, den);
        let members = [FamilyParameter::exact(vec![r(3, 2), r(1, 2)]).unwrap()];
        let grid: Vec<Rational64> = (1..=5).map(|k| r(4 * k, 1)).collect();
        let opts = WeakOptions { extend: false, ..WeakOptions::default() };
        let base = check_weak_semiconservative(&pm(2, 2), &members, &grid, CheckMethod::Exact, &opts).unwrap();
        let scaled_fam = ScaledFamily::new(BaseDistribution::Lattice(LatticeLaw::two_point(r(2, 1) * c).unwrap()), 2).unwrap();
        let scaled_grid: Vec<Rational64> = grid.iter().map(|&z| z * c).collect();
        let scaled = check_weak_semiconservative(&scaled_fam, &members, &scaled_grid, CheckMethod::Exact, &opts).unwrap();
        prop_assert_eq!(base.verdict, scaled.verdict);
        prop_assert_eq!(signs(&base), signs(&scaled));
        for (p, q) in base.members[0].margins.iter().zip(&scaled.members[0].margins) {
            if let (Some(x), Some(y)) = (p.margin, q.margin) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tail_ordering_beyond_crossing(seed in any::<u64>(), d in 2usize..4) {
        let mut rng = RngStream::new(seed, 0).rng(domain::PROPTEST);
        let law = random_positive_law(&mut rng, 4);
        let a = random_rational_a(&mut rng, d);
        let rep = tail_crossing(&law, &a).unwrap();
        prop_assert!(rep.tail_holds && rep.means_equal && rep.stop_loss_holds && rep.var_identity_holds);
        prop_assert!(rep.var_x <= rep.var_y * (1.0 + 1e-12));
        let m = moment_expansion_check(&X1Law::from_positive(&law), &a, &[0.01, 0.05, 0.1, 0.2], TransformMode::Laplace).unwrap();
        if let Some(s) = m.s_star {
            prop_assert!(m.points.iter().filter(|p| p.s <= s).all(|p| p.holds));
        }
    }
}

#[test]
fn one_dimensional_symmetric_index_is_zero() {
    let fam = make_symmetric_family(&[0.5]).unwrap();
    let est = estimate_index_symmetric(&fam, IndexMode::Exact, &IndexOptions::default()).unwrap();
    assert_eq!(est.psi, 0.0);
}

#[test]
fn weak_check_passes_on_reference_lattice() {
    let members = [FamilyParameter::exact(vec![r(3, 2), r(1, 2)]).unwrap()];
    let grid: Vec<Rational64> = (1..=6).map(|k| r(4 * k, 1)).collect();
    let rep = check_weak_semiconservative(&pm(2, 2), &members, &grid, CheckMethod::Exact, &WeakOptions::default()).unwrap();
    assert_eq!(rep.verdict, Verdict::Pass);
    assert!(rep.members[0].z_star.is_some());
}
