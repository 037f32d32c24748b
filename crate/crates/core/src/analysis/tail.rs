//! Tail comparison of `X = ΣX_i` and `Y = Σa_i X_i` for iid positive `X_i`,
//! and the transform inequality `π(s)^d <= Π π(a_i s)` near zero.

use crate::error::{invalid, Error, Result};
use crate::families::FamilyParameter;
use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use std::collections::BTreeMap;

/// Positive law with finite support and exact rational probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveLaw {
    atoms: Vec<(BigRational, BigRational)>,
}

fn big(r: Rational64) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

fn big_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

impl PositiveLaw {
    pub fn new(atoms: &[(Rational64, Rational64)]) -> Result<Self> {
        if atoms.is_empty() {
            return Err(invalid("empty law"));
        }
        let mut m: BTreeMap<BigRational, BigRational> = BTreeMap::new();
        for &(v, p) in atoms {
            if v <= Rational64::zero() || p <= Rational64::zero() {
                return Err(invalid(format!("atom ({v}, {p}) must have positive value and mass")));
            }
            *m.entry(big(v)).or_insert_with(BigRational::zero) += big(p);
        }
        let total: BigRational = m.values().cloned().sum();
        if !total.is_one() {
            return Err(invalid(format!("mass {total} differs from 1")));
        }
        Ok(Self { atoms: m.into_iter().collect() })
    }

    /// From `f64` probabilities, converted exactly and renormalised so the mass is exactly 1.
    pub fn from_f64(atoms: &[(Rational64, f64)]) -> Result<Self> {
        let probs: Vec<BigRational> = atoms
            .iter()
            .map(|a| BigRational::from_float(a.1).ok_or_else(|| invalid("probability is not finite")))
            .collect::<Result<_>>()?;
        let total: BigRational = probs.iter().cloned().sum();
        if total.is_zero() || (big_to_f64(&total) - 1.0).abs() > 1e-9 {
            return Err(invalid("probabilities must sum to 1"));
        }
        let mut m: BTreeMap<BigRational, BigRational> = BTreeMap::new();
        for (&(v, _), p) in atoms.iter().zip(probs) {
            if v <= Rational64::zero() || !p.is_positive() {
                return Err(invalid("positive values and masses required"));
            }
            *m.entry(big(v)).or_insert_with(BigRational::zero) += p / &total;
        }
        Ok(Self { atoms: m.into_iter().collect() })
    }

    pub fn atoms(&self) -> &[(BigRational, BigRational)] {
        &self.atoms
    }

    pub fn mean(&self) -> BigRational {
        self.atoms.iter().map(|(v, p)| v * p).sum()
    }

    pub fn variance(&self) -> BigRational {
        let m = self.mean();
        self.atoms.iter().map(|(v, p)| (v - &m) * (v - &m) * p).sum()
    }

    fn scaled(&self, a: &BigRational) -> Vec<(BigRational, BigRational)> {
        self.atoms.iter().map(|(v, p)| (v * a, p.clone())).collect()
    }
}

/// Exact law of a sum of independent finite laws.
pub fn convolve(laws: &[Vec<(BigRational, BigRational)>]) -> BTreeMap<BigRational, BigRational> {
    let mut acc: BTreeMap<BigRational, BigRational> = BTreeMap::new();
    acc.insert(BigRational::zero(), BigRational::one());
    for law in laws {
        let mut next = BTreeMap::new();
        for (x, px) in &acc {
            for (v, pv) in law {
                *next.entry(x + v).or_insert_with(BigRational::zero) += px * pv;
            }
        }
        acc = next;
    }
    acc
}

/// `P{Z > x}` at each point of `xs` (sorted ascending).
fn survival(law: &BTreeMap<BigRational, BigRational>, xs: &[BigRational]) -> Vec<BigRational> {
    let mut out = Vec::with_capacity(xs.len());
    let mut tail: BigRational = law.values().cloned().sum();
    let mut it = law.iter().peekable();
    for x in xs {
        while let Some((v, p)) = it.peek() {
            if *v <= x {
                tail -= *p;
                it.next();
            } else {
                break;
            }
        }
        out.push(tail.clone());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCrossingReport {
    /// From here on `P{X > x} <= P{Y > x}`.
    pub x_star: f64,
    pub x_star_exact: String,
    /// Sign changes of `P{X > x} - P{Y > x}` over the breakpoints.
    pub sign_changes: usize,
    pub tail_holds: bool,
    pub mean_x: f64,
    pub mean_y: f64,
    pub means_equal: bool,
    pub var_x: f64,
    pub var_y: f64,
    /// `var Y - var X == var(X_1) (Σa² - d)`, exactly.
    pub var_identity_holds: bool,
    /// `E(X - k)^+ <= E(Y - k)^+` at every breakpoint `k`.
    pub stop_loss_holds: bool,
    pub support_x: usize,
    pub support_y: usize,
}

/// Exact tail comparison for rational `a` with `Σa = d`.
pub fn tail_crossing(x1: &PositiveLaw, a: &FamilyParameter) -> Result<TailCrossingReport> {
    let ar = a.rationals().ok_or_else(|| Error::Unsupported("exact tail comparison needs rational a".into()))?;
    let d = ar.len();
    let ones: Vec<_> = (0..d).map(|_| x1.atoms.clone()).collect();
    let scaled: Vec<_> = ar.iter().map(|&ai| x1.scaled(&big(ai))).collect();
    let lx = convolve(&ones);
    let ly = convolve(&scaled);
    let mut xs: Vec<BigRational> = lx.keys().chain(ly.keys()).cloned().collect();
    xs.sort();
    xs.dedup();
    let sx = survival(&lx, &xs);
    let sy = survival(&ly, &xs);
    let diff: Vec<BigRational> = sx.iter().zip(&sy).map(|(a, b)| a - b).collect();
    // D is constant on [xs[k], xs[k+1]); the inequality holds from the first breakpoint after the last positive stretch.
    let x_star = match diff.iter().rposition(|v| v.is_positive()) {
        Some(k) => xs[k + 1].clone(),
        None => BigRational::zero(),
    };
    let tail_holds = xs.iter().zip(&diff).filter(|(x, _)| **x >= x_star).all(|(_, v)| !v.is_positive());
    let signs: Vec<i8> = diff.iter().filter(|v| !v.is_zero()).map(|v| if v.is_positive() { 1 } else { -1 }).collect();
    let sign_changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
    let mean = |l: &BTreeMap<BigRational, BigRational>| -> BigRational { l.iter().map(|(v, p)| v * p).sum() };
    let var = |l: &BTreeMap<BigRational, BigRational>, m: &BigRational| -> BigRational {
        l.iter().map(|(v, p)| (v - m) * (v - m) * p).sum()
    };
    let (mx, my) = (mean(&lx), mean(&ly));
    let (vx, vy) = (var(&lx, &mx), var(&ly, &my));
    let sum_sq: BigRational = ar.iter().map(|&ai| big(ai) * big(ai)).sum();
    let expected = x1.variance() * (sum_sq - BigRational::from_integer(BigInt::from(d)));
    let stop_loss = |l: &BTreeMap<BigRational, BigRational>, k: &BigRational| -> BigRational {
        l.iter().filter(|(v, _)| *v > k).map(|(v, p)| (v - k) * p).sum()
    };
    let stop_loss_holds = xs.iter().all(|k| stop_loss(&lx, k) <= stop_loss(&ly, k));
    Ok(TailCrossingReport {
        x_star: big_to_f64(&x_star),
        x_star_exact: x_star.to_string(),
        sign_changes,
        tail_holds,
        mean_x: big_to_f64(&mx),
        mean_y: big_to_f64(&my),
        means_equal: mx == my,
        var_x: big_to_f64(&vx),
        var_y: big_to_f64(&vy),
        var_identity_holds: &vy - &vx == expected,
        stop_loss_holds,
        support_x: lx.len(),
        support_y: ly.len(),
    })
}

/// Law of `X_1` for the transform check.
#[derive(Debug, Clone, PartialEq)]
pub enum X1Law {
    Lattice(Vec<(f64, f64)>),
    Exponential { rate: f64 },
}

impl X1Law {
    pub fn from_positive(law: &PositiveLaw) -> Self {
        X1Law::Lattice(law.atoms.iter().map(|(v, p)| (big_to_f64(v), big_to_f64(p))).collect())
    }

    pub fn variance(&self) -> f64 {
        match self {
            X1Law::Lattice(a) => {
                let m: f64 = a.iter().map(|(v, p)| v * p).sum();
                a.iter().map(|(v, p)| (v - m).powi(2) * p).sum()
            }
            X1Law::Exponential { rate } => 1.0 / (rate * rate),
        }
    }

    fn validate(&self, mode: TransformMode) -> Result<()> {
        match self {
            X1Law::Lattice(a) => {
                let s: f64 = a.iter().map(|x| x.1).sum();
                if a.is_empty() || (s - 1.0).abs() > 1e-12 || a.iter().any(|x| !(x.1 >= 0.0) || !x.0.is_finite()) {
                    return Err(invalid("lattice law must be a finite pmf"));
                }
                if mode == TransformMode::Laplace && a.iter().any(|x| x.0 <= 0.0) {
                    return Err(invalid("transform mode needs a positive law"));
                }
            }
            X1Law::Exponential { rate } if !(*rate > 0.0 && rate.is_finite()) => return Err(invalid("rate must be positive")),
            _ => {}
        }
        Ok(())
    }

    /// `ln π(s)` or `ln |φ(s)|`, accurate near `s = 0`.
    fn log_transform(&self, s: f64, mode: TransformMode) -> f64 {
        match (self, mode) {
            (X1Law::Lattice(a), TransformMode::Laplace) => a.iter().map(|&(v, p)| p * (-s * v).exp_m1()).sum::<f64>().ln_1p(),
            (X1Law::Lattice(a), TransformMode::Characteristic) => {
                let cm1: f64 = -2.0 * a.iter().map(|&(v, p)| p * (0.5 * s * v).sin().powi(2)).sum::<f64>();
                let sn: f64 = a.iter().map(|&(v, p)| p * (s * v).sin()).sum();
                0.5 * (cm1 * (cm1 + 2.0) + sn * sn).ln_1p()
            }
            (X1Law::Exponential { rate }, TransformMode::Laplace) => -(s / rate).ln_1p(),
            (X1Law::Exponential { rate }, TransformMode::Characteristic) => -0.5 * (s * s / (rate * rate)).ln_1p(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformMode {
    /// `π(s) = E e^{-sX}`; expects `π^d <= Π π(a_i s)`.
    Laplace,
    /// `|φ(s)| = |E e^{isX}|`; the quadratic term flips sign, so expects `|φ|^d >= Π |φ(a_i s)|`.
    Characteristic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformPoint {
    pub s: f64,
    /// `Σ ln π(a_i s) - d ln π(s)`.
    pub log_gap: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentExpansionReport {
    pub mode: TransformMode,
    pub points: Vec<TransformPoint>,
    /// Largest grid `s` with the inequality holding on the whole grid up to it.
    pub s_star: Option<f64>,
    pub holds_on_grid: bool,
    /// `G''(0)` of the log gap `G`, by Richardson-extrapolated central differences.
    pub second_derivative: f64,
    /// `± var(X_1) (Σa² - d)`.
    pub expected_second_derivative: f64,
    pub coefficient_error: f64,
    pub warnings: Vec<String>,
}

fn log_gap(x1: &X1Law, a: &[f64], s: f64, mode: TransformMode) -> f64 {
    let d = a.len() as f64;
    a.iter().map(|&ai| x1.log_transform(ai * s, mode)).sum::<f64>() - d * x1.log_transform(s, mode)
}

/// Evaluates the transform inequality on `s_grid` and the quadratic coefficient of the gap.
pub fn moment_expansion_check(x1: &X1Law, a: &FamilyParameter, s_grid: &[f64], mode: TransformMode) -> Result<MomentExpansionReport> {
    x1.validate(mode)?;
    let av = a.values();
    let mut grid: Vec<f64> = s_grid.to_vec();
    if grid.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(invalid("transform grid must be positive and finite"));
    }
    grid.sort_by(f64::total_cmp);
    let sign = match mode {
        TransformMode::Laplace => 1.0,
        TransformMode::Characteristic => -1.0,
    };
    let mut warnings = Vec::new();
    let mut points = Vec::new();
    for &s in &grid {
        let g = log_gap(x1, av, s, mode);
        if !g.is_finite() {
            warnings.push(format!("transform unstable at s = {s}; grid restricted"));
            break;
        }
        let scale = av.iter().map(|&ai| x1.log_transform(ai * s, mode).abs()).fold(x1.log_transform(s, mode).abs(), f64::max);
        let tol = 64.0 * f64::EPSILON * scale.max(f64::MIN_POSITIVE) * av.len() as f64;
        points.push(TransformPoint { s, log_gap: g, holds: sign * g >= -tol });
    }
    let first_bad = points.iter().position(|p| !p.holds);
    let s_star = match first_bad {
        Some(0) => None,
        Some(k) => Some(points[k - 1].s),
        None => points.last().map(|p| p.s),
    };
    let g2 = |h: f64| (log_gap(x1, av, h, mode) + log_gap(x1, av, -h, mode)) / (h * h);
    let h = 1e-3;
    let second = (4.0 * g2(h / 2.0) - g2(h)) / 3.0;
    let expected = sign * x1.variance() * (a.sum_squares() - av.len() as f64);
    Ok(MomentExpansionReport {
        mode,
        holds_on_grid: first_bad.is_none() && !points.is_empty(),
        points,
        s_star,
        second_derivative: second,
        expected_second_derivative: expected,
        coefficient_error: (second - expected).abs(),
        warnings,
    })
}

/// Random positive rational law with at most `max_support` atoms; used by tests and the acceptance suite.
pub fn random_positive_law(rng: &mut crate::rng::PathRng, max_support: usize) -> PositiveLaw {
    let k = 2 + (rng.next_u64() % (max_support.max(2) as u64 - 1)) as usize;
    let mut values: Vec<i64> = Vec::new();
    while values.len() < k {
        let v = 1 + (rng.next_u64() % 12) as i64;
        if !values.contains(&v) {
            values.push(v);
        }
    }
    let weights: Vec<i64> = (0..k).map(|_| 1 + (rng.next_u64() % 9) as i64).collect();
    let total: i64 = weights.iter().sum();
    let atoms: Vec<(Rational64, Rational64)> =
        values.iter().zip(&weights).map(|(&v, &w)| (Rational64::from_integer(v), Rational64::new(w, total))).collect();
    PositiveLaw::new(&atoms).expect("valid by construction")
}

/// Random rational `a` with positive entries (denominators up to 10) summing to `d`.
pub fn random_rational_a(rng: &mut crate::rng::PathRng, d: usize) -> FamilyParameter {
    loop {
        let den = 2 + (rng.next_u64() % 9) as i64;
        let total = den * d as i64;
        let mut parts: Vec<i64> = (0..d - 1).map(|_| 1 + (rng.next_u64() % (total as u64 - 1)) as i64).collect();
        parts.sort();
        parts.dedup();
        if parts.len() != d - 1 {
            continue;
        }
        let mut prev = 0;
        let mut a = Vec::with_capacity(d);
        for &p in parts.iter().chain(std::iter::once(&total)) {
            a.push(Rational64::new(p - prev, den));
            prev = p;
        }
        if a.iter().all(|x| *x > Rational64::zero()) && a.iter().any(|x| *x != Rational64::from_integer(1)) {
            return FamilyParameter::exact(a).expect("sums to d");
        }
    }
}

/// `var(X_1)` of a positive law as `f64`.
pub fn positive_law_variance(law: &PositiveLaw) -> f64 {
    big_to_f64(&law.variance())
}
