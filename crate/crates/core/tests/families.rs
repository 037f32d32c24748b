mod common;

use common::*;
use num_rational::Rational64;
use proptest::prelude::*;
use semiwalk::families::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scaled_laws_keep_mean_and_scale_variance(base in symmetric_lattice(), w in weights(3)) {
        let a = member_from_weights(&w);
        let fam = ScaledFamily::new(BaseDistribution::Lattice(base.clone()), 3).unwrap();
        let m = fam.member(&a).unwrap();
        for (i, law) in m.laws.iter().enumerate() {
            prop_assert!(law.mean().abs() < 1e-12);
            let expect = a.values()[i].powi(2) * base.variance();
            prop_assert!((law.variance() - expect).abs() < 1e-10 * expect.max(1.0));
            prop_assert_eq!(law.span().unwrap(), a.rationals().unwrap()[i] * base.span());
        }
    }

    #[test]
    fn sum_of_squares_at_least_dimension(w in weights(4)) {
        let a = member_from_weights(&w);
        let s = a.sum_squares_exact().unwrap();
        prop_assert!(s >= Rational64::from_integer(4));
        prop_assert_eq!(s == Rational64::from_integer(4), a.is_simple());
    }

    #[test]
    fn split_then_recombine_is_identity(base in symmetric_lattice(), w in weights(2)) {
        let a = member_from_weights(&w);
        let law = scale_distribution(&BaseDistribution::Lattice(base), a.scale(0)).unwrap();
        let split = split_signed(&law).unwrap();
        prop_assert!(split.p_plus > 0.0 && split.p_plus < 1.0);
        prop_assert!(split.bt_pmf.iter().all(|(v, _)| *v > Rational64::from_integer(0)));
        let back = split.recombine();
        let orig = law.atoms().unwrap();
        prop_assert_eq!(back.len(), orig.len());
        for ((v1, p1), (v2, p2)) in back.iter().zip(&orig) {
            prop_assert_eq!(v1, v2);
            prop_assert!((p1 - p2).abs() <= 1e-15, "{} vs {}", p1, p2);
        }
    }
}

#[test]
fn parameter_must_sum_to_dimension() {
    assert!(FamilyParameter::exact(vec![r(3, 2), r(1, 3)]).is_err());
    assert!(FamilyParameter::exact(vec![r(2, 1), r(0, 1)]).is_err());
    assert!(FamilyParameter::real(vec![1.2, 0.8]).is_ok());
}

#[test]
fn klebaner_up_probability() {
    let k = make_klebaner_family(KlebanerFamily { alpha: AlphaSeq::Constant { alpha: 0.1 }, bound: 1.0 }).unwrap();
    assert!((k.up_probability(10).unwrap() - 0.51).abs() < 1e-15);
    assert_eq!(k.up_probability(0).unwrap(), 1.0);
}

#[test]
fn asymmetric_base_splits_with_zero_atom_on_positive_side() {
    let law = LatticeLaw::from_values(&[(r(-2, 1), 0.25), (r(0, 1), 0.25), (r(1, 1), 0.5)]).unwrap();
    let inc = scale_distribution(&BaseDistribution::Lattice(law), 1.0).unwrap();
    let s = split_signed(&inc).unwrap();
    assert!((s.p_plus - 0.75).abs() < 1e-15);
    assert_eq!(s.b_pmf[0].0, r(0, 1));
}
