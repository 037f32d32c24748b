mod common;

use common::*;
use proptest::prelude::*;
use semiwalk::families::*;
use semiwalk::queue::*;
use semiwalk::rng::{domain, RngStream};
use semiwalk::stats::{ks_critical, ks_statistic};
use semiwalk::walker::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Same draws: class-i workload equals coordinate i of the reflected walk at every epoch.
    #[test]
    fn workloads_equal_reflected_coordinates(base in symmetric_lattice(), w in weights(2), seed in any::<u64>()) {
        let m = ScaledFamily::new(BaseDistribution::Lattice(base), 2).unwrap().member(&member_from_weights(&w)).unwrap();
        let walk = LatticeWalk::from_member(&m).unwrap();
        let gcds = class_gcds(&m, &walk).unwrap();
        let mut queue = Vec::new();
        run_queue_path(&walk, 300, seed, 0, |s| queue.push(s.workloads.clone()));
        let mut st = Stepper::new(&walk, true);
        let mut rng = RngStream::new(seed, 0).rng(domain::WALK);
        for wl in &queue {
            st.advance(&mut rng);
            prop_assert_eq!(st.position(), wl.as_slice());
            for (x, g) in wl.iter().zip(&gcds) {
                prop_assert!(*x >= 0 && x % g == 0);
            }
        }
    }
}

#[test]
fn uncoupled_workload_matches_reflected_norm_in_law() {
    let m = pm(1, 1).member(&FamilyParameter::simple(1)).unwrap();
    let walk = LatticeWalk::from_member(&m).unwrap();
    let work: Vec<f64> = workloads_at(&walk, 100, 20_000, 11).iter().map(|w| w[0] as f64).collect();
    let mut st = Stepper::new(&walk, true);
    let refl: Vec<f64> = (0..20_000u64)
        .map(|p| {
            st.reset();
            let mut rng = RngStream::new(12, p).rng(domain::WALK);
            (0..100).fold(0, |_, _| st.advance(&mut rng).1) as f64
        })
        .collect();
    let ks = ks_statistic(&work, &refl);
    assert!(ks < ks_critical(work.len(), refl.len(), 1e-3), "ks {ks}");
}

#[test]
fn strict_mode_needs_fair_signs() {
    let law = LatticeLaw::from_values(&[(r(-2, 1), 0.25), (r(0, 1), 0.25), (r(1, 1), 0.5)]).unwrap();
    let m = ScaledFamily::new(BaseDistribution::Lattice(law), 1).unwrap().member(&FamilyParameter::simple(1)).unwrap();
    let walk = LatticeWalk::from_member(&m).unwrap();
    let err = StrictLattice::new(&m, walk.exact_unit()).unwrap_err();
    assert!(matches!(err, semiwalk::Error::Config(_)), "{err}");
    let ok = pm(2, 1).member(&FamilyParameter::simple(1)).unwrap();
    assert!(StrictLattice::new(&ok, LatticeWalk::from_member(&ok).unwrap().exact_unit()).is_ok());
}

/// Zero-drift workload: the mean grows like `c √j`; the slope on `√j` is stable across ranges.
#[test]
fn workload_mean_grows_like_sqrt_j() {
    let m = pm(1, 1).member(&FamilyParameter::simple(1)).unwrap();
    let walk = LatticeWalk::from_member(&m).unwrap();
    let js = [100u64, 400, 1600, 6400];
    let means: Vec<f64> = js
        .iter()
        .map(|&j| workloads_at(&walk, j, 4000, 21).iter().map(|w| w[0] as f64).sum::<f64>() / 4000.0)
        .collect();
    let c: Vec<f64> = js.iter().zip(&means).map(|(&j, m)| m / (j as f64).sqrt()).collect();
    // E|S_j| / √j → √(2/π).
    let limit = (2.0 / std::f64::consts::PI).sqrt();
    for x in &c {
        assert!((x / limit - 1.0).abs() < 0.2, "{c:?}");
    }
}
