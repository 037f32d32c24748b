#![allow(dead_code)]

use num_rational::Rational64;
use proptest::prelude::*;
use semiwalk::families::{BaseDistribution, FamilyParameter, LatticeLaw, ScaledFamily};

/// Positive integer weights turned into an exact member `a = d k / Σk`.
pub fn member_from_weights(w: &[i64]) -> FamilyParameter {
    let d = w.len() as i64;
    let s: i64 = w.iter().sum();
    FamilyParameter::exact(w.iter().map(|&k| Rational64::new(d * k, s)).collect()).unwrap()
}

pub fn weights(d: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(1i64..6, d)
}

/// Symmetric lattice laws: `±v` or uniform on `{-m..m}·span`.
pub fn symmetric_lattice() -> impl Strategy<Value = LatticeLaw> {
    prop_oneof![
        (1i64..5, 1i64..4).prop_map(|(n, d)| LatticeLaw::two_point(Rational64::new(n, d)).unwrap()),
        (1i64..4, 1i64..3).prop_map(|(m, s)| LatticeLaw::symmetric_uniform(m, Rational64::from_integer(s)).unwrap()),
    ]
}

pub fn pm(v: i64, d: usize) -> ScaledFamily {
    ScaledFamily::new(BaseDistribution::Lattice(LatticeLaw::two_point(Rational64::from_integer(v)).unwrap()), d).unwrap()
}

pub fn r(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}
