mod common;

use common::*;
use semiwalk::ck_solver::*;
use semiwalk::families::*;

#[test]
fn pm_one_chain_conserves_mass_and_doubles() {
    let sol = integrate_ck(&CkSystem::pm_one(), &CkOptions { n_report: Some(20), ..CkOptions::default() }).unwrap();
    assert!(sol.mass_error <= 1e-9, "{}", sol.mass_error);
    assert!((sol.q[0] - 1.0).abs() < 1e-12);
    for n in 1..=20 {
        assert!((sol.q[n] - 2.0).abs() < 1e-4, "q_{n} = {}", sol.q[n]);
    }
    assert!(sol.p.iter().flatten().all(|&p| p >= -1e-12));
}

/// `P(Q_t = n)` from integration against queue occupancy at a clock time.
#[test]
fn ck_matches_queue_occupancy() {
    use semiwalk::queue::run_queue_path;
    use semiwalk::walker::LatticeWalk;
    let m = pm(1, 1).member(&FamilyParameter::simple(1)).unwrap();
    let walk = LatticeWalk::from_member(&m).unwrap();
    let t = 20.0;
    let sol = integrate_ck(&CkSystem::pm_one(), &CkOptions { t_end: t, samples: 2, ..CkOptions::default() }).unwrap();
    let p_end = sol.p.last().unwrap();
    let paths = 100_000u64;
    let mut counts = [0u64; 6];
    for p in 0..paths {
        let mut w_at = 0i64;
        run_queue_path(&walk, 200, 3, p, |s| {
            if s.clock <= t {
                w_at = s.workloads[0];
            }
        });
        if (w_at as usize) < counts.len() {
            counts[w_at as usize] += 1;
        }
    }
    for n in 0..counts.len() {
        let f = counts[n] as f64 / paths as f64;
        let se = (p_end[n] * (1.0 - p_end[n]) / paths as f64).sqrt();
        assert!((f - p_end[n]).abs() < 3.0 * se + 1e-4, "n={n}: {f} vs {}", p_end[n]);
    }
}

#[test]
fn worked_gcd_example() {
    // Sizes {0, 2, 4, 6} with negative sizes {2, 4}: gcd 2.
    let g = gcd_of_support(&[r(0, 1), r(2, 1), r(4, 1), r(6, 1)], &[r(2, 1), r(4, 1)]).unwrap();
    assert_eq!(g, r(2, 1));
    assert!(matches!(gcd_of_support(&[r(1, 1)], &[]), Err(semiwalk::Error::UndefinedGcd)));
}

#[test]
fn property1_on_simple_member_is_exact() {
    let fam = pm(2, 2);
    let rep = verify_property1(&fam, &FamilyParameter::simple(2), 20, &CkOptions::default()).unwrap();
    assert_eq!(rep.max_deviation, 0.0);
    assert!(rep.pmf_identity && rep.gcd_identity && rep.converged);
}

#[test]
fn properties_hold_for_three_halves_one_half() {
    let fam = pm(2, 2);
    let a = FamilyParameter::exact(vec![r(3, 2), r(1, 2)]).unwrap();
    let p1 = verify_property1(&fam, &a, 20, &CkOptions::default()).unwrap();
    assert!(p1.max_deviation < 1e-6 && p1.pmf_identity && p1.gcd_identity);
    assert_eq!(p1.gcds, vec!["3", "1"]);
    let p2 = verify_property2(&fam, &a, &FamilyParameter::simple(2), 20, &CkOptions::default()).unwrap();
    assert!(p2.max_deviation < 1e-6 && p2.pmf_identity && p2.gcd_identity);
}

#[test]
fn cyclic_classes_of_even_jumps() {
    let sys = CkSystem::new(0.5, vec![(2, 1.0)], vec![(2, 1.0)]).unwrap();
    let c = cyclic_classes(&sys, 8);
    assert!(c.class[1].is_none() && c.class[3].is_none());
    assert_eq!(c.period, 2);
    assert_ne!(c.class[0], c.class[2]);
}
