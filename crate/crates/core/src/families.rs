//! Walk families: scaled product families `F(x / a_i)`, the symmetric
//! nearest-neighbour family and the one-dimensional state-dependent walk.

use crate::error::{invalid, Error, Result};
use crate::exact::{gcd_all, rational_from_f64, to_f64};
use num_rational::Rational64;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

const MASS_TOL: f64 = 1e-12;
const MEAN_TOL: f64 = 1e-12;
const SUM_TOL: f64 = 1e-12;

/// Per-coordinate scale factors `a`: positive, summing to `d`.
///
/// Lattice work needs the exact form; the real form only carries doubles.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyParameter {
    exact: Option<Vec<Rational64>>,
    values: Vec<f64>,
}

impl FamilyParameter {
    pub fn exact(components: Vec<Rational64>) -> Result<Self> {
        if components.is_empty() {
            return Err(invalid("family parameter needs at least one component"));
        }
        if let Some(c) = components.iter().find(|c| !c.is_positive()) {
            return Err(invalid(format!("component {c} is not positive")));
        }
        let sum: Rational64 = components.iter().copied().sum();
        let d = Rational64::from_integer(components.len() as i64);
        if sum != d {
            return Err(invalid(format!("components sum to {sum}, expected {d}")));
        }
        let values = components.iter().map(|&c| to_f64(c)).collect();
        Ok(Self { exact: Some(components), values })
    }

    /// Real-valued member; snapped to an exact rational when every entry is a
    /// short decimal whose exact sum is `d`.
    pub fn real(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(invalid("family parameter needs at least one component"));
        }
        if let Some(c) = components.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return Err(invalid(format!("component {c} is not positive")));
        }
        let d = components.len() as f64;
        let sum: f64 = components.iter().sum();
        if (sum - d).abs() > SUM_TOL * d {
            return Err(invalid(format!("components sum to {sum}, expected {d}")));
        }
        let exact: Option<Vec<Rational64>> =
            components.iter().map(|&c| rational_from_f64(c).ok()).collect();
        match exact {
            Some(ex) if ex.iter().copied().sum::<Rational64>() == Rational64::from_integer(d as i64) => {
                Self::exact(ex)
            }
            _ => Ok(Self { exact: None, values: components }),
        }
    }

    /// The all-ones member.
    pub fn simple(d: usize) -> Self {
        Self::exact(vec![Rational64::one(); d.max(1)]).expect("ones are valid")
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rationals(&self) -> Option<&[Rational64]> {
        self.exact.as_deref()
    }

    pub fn is_simple(&self) -> bool {
        match &self.exact {
            Some(ex) => ex.iter().all(|c| c.is_one()),
            None => self.values.iter().all(|&v| v == 1.0),
        }
    }

    pub fn sum_squares(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Exact `Σ a_i²` when rational.
    pub fn sum_squares_exact(&self) -> Option<Rational64> {
        self.exact.as_ref().map(|ex| ex.iter().map(|c| c * c).sum())
    }

    pub fn scale(&self, i: usize) -> Scale {
        Scale { value: self.values[i], exact: self.exact.as_ref().map(|e| e[i]) }
    }

    pub fn label(&self) -> String {
        let parts: Vec<String> = match &self.exact {
            Some(ex) => ex.iter().map(|c| format!("{}", to_f64(*c))).collect(),
            None => self.values.iter().map(|v| format!("{v}")).collect(),
        };
        format!("({})", parts.join(","))
    }
}

/// One scale factor, with its exact value when known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scale {
    pub value: f64,
    pub exact: Option<Rational64>,
}

impl From<f64> for Scale {
    fn from(value: f64) -> Self {
        Scale { value, exact: rational_from_f64(value).ok() }
    }
}

impl From<Rational64> for Scale {
    fn from(r: Rational64) -> Self {
        Scale { value: to_f64(r), exact: Some(r) }
    }
}

/// Lattice law: atoms `k * span` with probabilities, sorted by `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeLaw {
    span: Rational64,
    atoms: Vec<(i64, f64)>,
}

impl LatticeLaw {
    pub fn new(span: Rational64, atoms: Vec<(i64, f64)>) -> Result<Self> {
        if !span.is_positive() {
            return Err(invalid(format!("span {span} must be positive")));
        }
        let mut merged: Vec<(i64, f64)> = Vec::with_capacity(atoms.len());
        let mut sorted = atoms;
        sorted.sort_by_key(|a| a.0);
        for (k, p) in sorted {
            if !(p.is_finite() && p >= 0.0) {
                return Err(invalid(format!("mass {p} at atom {k} is not a probability")));
            }
            match merged.last_mut() {
                Some(last) if last.0 == k => last.1 += p,
                _ => merged.push((k, p)),
            }
        }
        merged.retain(|a| a.1 > 0.0);
        let total: f64 = merged.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(invalid(format!("pmf mass sums to {total}")));
        }
        if merged.len() < 2 {
            return Err(invalid("base law needs at least two support points"));
        }
        let kmax = merged.iter().map(|a| a.0.unsigned_abs()).max().unwrap_or(1) as f64;
        let mean: f64 = merged.iter().map(|&(k, p)| k as f64 * p).sum();
        if mean.abs() > MEAN_TOL * kmax.max(1.0) {
            return Err(invalid(format!("pmf mean is {mean} span units, expected 0")));
        }
        Ok(Self { span, atoms: merged })
    }

    /// Law from `(value, probability)` pairs; the span is the rational gcd.
    pub fn from_values(pairs: &[(Rational64, f64)]) -> Result<Self> {
        let span = gcd_all(pairs.iter().map(|p| p.0)).ok_or_else(|| invalid("all values are zero"))?;
        let atoms = pairs.iter().map(|&(v, p)| ((v / span).to_integer(), p)).collect();
        Self::new(span, atoms)
    }

    /// `{-v: 1/2, +v: 1/2}`.
    pub fn two_point(v: Rational64) -> Result<Self> {
        Self::new(v.abs(), vec![(-1, 0.5), (1, 0.5)])
    }

    /// Uniform on `{-m, ..., m} * span`.
    pub fn symmetric_uniform(m: i64, span: Rational64) -> Result<Self> {
        if m < 1 {
            return Err(invalid("symmetric uniform lattice needs m >= 1"));
        }
        let p = 1.0 / (2 * m + 1) as f64;
        Self::new(span, (-m..=m).map(|k| (k, p)).collect())
    }

    pub fn span(&self) -> Rational64 {
        self.span
    }

    pub fn atoms(&self) -> &[(i64, f64)] {
        &self.atoms
    }

    /// Atoms as exact values.
    pub fn values(&self) -> Vec<(Rational64, f64)> {
        self.atoms.iter().map(|&(k, p)| (self.span * k, p)).collect()
    }

    pub fn variance(&self) -> f64 {
        let s = to_f64(self.span);
        self.atoms.iter().map(|&(k, p)| (k as f64 * s).powi(2) * p).sum()
    }

    pub fn mean(&self) -> f64 {
        let s = to_f64(self.span);
        self.atoms.iter().map(|&(k, p)| k as f64 * s * p).sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let s = to_f64(self.span);
        self.atoms.iter().filter(|a| a.0 as f64 * s <= x).map(|a| a.1).sum::<f64>().min(1.0)
    }

    /// Gcd of the support in span units.
    pub fn support_gcd(&self) -> i64 {
        self.atoms.iter().fold(0i64, |g, a| num_integer::gcd(g, a.0))
    }
}

/// Continuous symmetric bases sampled by inverse cdf.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContinuousLaw {
    /// Uniform on `(-c, c)`.
    Uniform { c: f64 },
    /// Centered normal with scale `sigma` truncated to `[-c, c]`.
    TruncatedNormal { sigma: f64, c: f64 },
}

impl ContinuousLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ContinuousLaw::Uniform { c } => c.is_finite() && c > 0.0,
            ContinuousLaw::TruncatedNormal { sigma, c } => {
                sigma.is_finite() && sigma > 0.0 && c.is_finite() && c > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("bad continuous law {self:?}")))
        }
    }

    fn std_normal() -> Normal {
        Normal::standard()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            ContinuousLaw::Uniform { c } => ((x + c) / (2.0 * c)).clamp(0.0, 1.0),
            ContinuousLaw::TruncatedNormal { sigma, c } => {
                if x <= -c {
                    return 0.0;
                }
                if x >= c {
                    return 1.0;
                }
                let n = Self::std_normal();
                let lo = n.cdf(-c / sigma);
                let hi = n.cdf(c / sigma);
                (n.cdf(x / sigma) - lo) / (hi - lo)
            }
        }
    }

    /// Inverse cdf on `(0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            ContinuousLaw::Uniform { c } => c * (2.0 * u - 1.0),
            ContinuousLaw::TruncatedNormal { sigma, c } => {
                let n = Self::std_normal();
                let lo = n.cdf(-c / sigma);
                let hi = n.cdf(c / sigma);
                (sigma * n.inverse_cdf(lo + u * (hi - lo))).clamp(-c, c)
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            ContinuousLaw::Uniform { c } => c * c / 3.0,
            ContinuousLaw::TruncatedNormal { sigma, c } => {
                let b = c / sigma;
                let phi = (-0.5 * b * b).exp() / (2.0 * std::f64::consts::PI).sqrt();
                let mass = 2.0 * Self::std_normal().cdf(b) - 1.0;
                sigma * sigma * (1.0 - 2.0 * b * phi / mass)
            }
        }
    }

    /// Support half-width.
    pub fn bound(&self) -> f64 {
        match *self {
            ContinuousLaw::Uniform { c } | ContinuousLaw::TruncatedNormal { c, .. } => c,
        }
    }
}

/// The base law `F`: zero mean, finite positive variance.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseDistribution {
    Lattice(LatticeLaw),
    Continuous(ContinuousLaw),
}

impl BaseDistribution {
    pub fn variance(&self) -> f64 {
        match self {
            BaseDistribution::Lattice(l) => l.variance(),
            BaseDistribution::Continuous(c) => c.variance(),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            BaseDistribution::Lattice(l) => l.mean(),
            BaseDistribution::Continuous(_) => 0.0,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            BaseDistribution::Lattice(l) => l.cdf(x),
            BaseDistribution::Continuous(c) => c.cdf(x),
        }
    }

    pub fn is_lattice(&self) -> bool {
        matches!(self, BaseDistribution::Lattice(_))
    }

    pub fn as_lattice(&self) -> Option<&LatticeLaw> {
        match self {
            BaseDistribution::Lattice(l) => Some(l),
            BaseDistribution::Continuous(_) => None,
        }
    }
}

/// Per-coordinate law `x ↦ F(x / a_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementLaw {
    pub base: BaseDistribution,
    pub scale: Scale,
}

impl IncrementLaw {
    pub fn variance(&self) -> f64 {
        self.scale.value * self.scale.value * self.base.variance()
    }

    pub fn mean(&self) -> f64 {
        self.scale.value * self.base.mean()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.base.cdf(x / self.scale.value)
    }

    /// `a_i * span(F)`; lattice only.
    pub fn span(&self) -> Option<Rational64> {
        Some(self.base.as_lattice()?.span() * self.scale.exact?)
    }

    /// Exact atoms `a_i * k * span`; lattice only.
    pub fn atoms(&self) -> Option<Vec<(Rational64, f64)>> {
        let s = self.span()?;
        Some(self.base.as_lattice()?.atoms().iter().map(|&(k, p)| (s * k, p)).collect())
    }
}

/// Builds `F^(i)(x; a) = F(x / a_i)`.
pub fn scale_distribution(base: &BaseDistribution, a_i: impl Into<Scale>) -> Result<IncrementLaw> {
    let scale = a_i.into();
    if !(scale.value.is_finite() && scale.value > 0.0) {
        return Err(invalid(format!("scale {} must be positive", scale.value)));
    }
    if base.is_lattice() && scale.exact.is_none() {
        return Err(invalid("lattice scaling needs a rational scale factor"));
    }
    Ok(IncrementLaw { base: base.clone(), scale })
}

/// Sign decomposition of a lattice increment law.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedSplit {
    /// `P{x >= 0}`.
    pub p_plus: f64,
    /// Law of `x` given `x >= 0`.
    pub b_pmf: Vec<(Rational64, f64)>,
    /// Law of `-x` given `x < 0`; strictly positive support.
    pub bt_pmf: Vec<(Rational64, f64)>,
}

impl SignedSplit {
    pub fn mean_b(&self) -> f64 {
        self.b_pmf.iter().map(|&(v, p)| to_f64(v) * p).sum()
    }

    pub fn mean_bt(&self) -> f64 {
        self.bt_pmf.iter().map(|&(v, p)| to_f64(v) * p).sum()
    }

    /// Mixture `p_plus * B - (1 - p_plus) * B̃` as a pmf sorted by value.
    pub fn recombine(&self) -> Vec<(Rational64, f64)> {
        let mut out: Vec<(Rational64, f64)> = self
            .bt_pmf
            .iter()
            .map(|&(v, p)| (-v, p * (1.0 - self.p_plus)))
            .chain(self.b_pmf.iter().map(|&(v, p)| (v, p * self.p_plus)))
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }
}

pub fn split_signed(law: &IncrementLaw) -> Result<SignedSplit> {
    let atoms = law
        .atoms()
        .ok_or_else(|| Error::Unsupported("sign split is defined for lattice laws".into()))?;
    let p_plus: f64 = atoms.iter().filter(|a| !a.0.is_negative()).map(|a| a.1).sum();
    let p_minus: f64 = atoms.iter().filter(|a| a.0.is_negative()).map(|a| a.1).sum();
    if p_plus <= 0.0 || p_minus <= 0.0 {
        return Err(Error::DegenerateSplit);
    }
    let b_pmf = atoms.iter().filter(|a| !a.0.is_negative()).map(|&(v, p)| (v, p / p_plus)).collect();
    let mut bt_pmf: Vec<_> =
        atoms.iter().filter(|a| a.0.is_negative()).map(|&(v, p)| (-v, p / p_minus)).collect();
    bt_pmf.sort_by(|a: &(Rational64, f64), b| a.0.cmp(&b.0));
    let p_plus = p_plus / (p_plus + p_minus);
    Ok(SignedSplit { p_plus, b_pmf, bt_pmf })
}

/// Product family: each coordinate gets an independent copy of `F(x / a_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledFamily {
    pub base: BaseDistribution,
    pub dim: usize,
}

/// One member of a [`ScaledFamily`].
#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub a: FamilyParameter,
    pub laws: Vec<IncrementLaw>,
}

impl ScaledFamily {
    pub fn new(base: BaseDistribution, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if let BaseDistribution::Continuous(c) = &base {
            c.validate()?;
        }
        let v = base.variance();
        if !(v.is_finite() && v > 0.0) {
            return Err(invalid(format!("base variance {v} must be finite and positive")));
        }
        Ok(Self { base, dim })
    }

    pub fn member(&self, a: &FamilyParameter) -> Result<Member> {
        if a.dim() != self.dim {
            return Err(invalid(format!("member has {} components, family has dimension {}", a.dim(), self.dim)));
        }
        let laws = (0..self.dim).map(|i| scale_distribution(&self.base, a.scale(i))).collect::<Result<_>>()?;
        Ok(Member { a: a.clone(), laws })
    }
}

/// Nearest-neighbour family: step `±e_i` with probability `alpha_i` each.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricFamily {
    alphas: Vec<f64>,
}

impl SymmetricFamily {
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn dim(&self) -> usize {
        self.alphas.len()
    }

    /// Moves as `(coordinate, sign, probability)`.
    pub fn moves(&self) -> Vec<(usize, i64, f64)> {
        self.alphas.iter().enumerate().flat_map(|(i, &a)| [(i, 1, a), (i, -1, a)]).collect()
    }
}

pub fn make_symmetric_family(alphas: &[f64]) -> Result<SymmetricFamily> {
    if alphas.is_empty() {
        return Err(invalid("symmetric family needs d >= 1"));
    }
    if let Some(a) = alphas.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(invalid(format!("alpha {a} must be positive")));
    }
    let s: f64 = alphas.iter().sum();
    if (2.0 * s - 1.0).abs() > SUM_TOL {
        return Err(invalid(format!("2 * sum(alpha) = {}, expected 1", 2.0 * s)));
    }
    Ok(SymmetricFamily { alphas: alphas.to_vec() })
}

/// `n ↦ α_n` for the one-dimensional state-dependent walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaSeq {
    Constant { alpha: f64 },
    /// `alpha_star + c * n^(-power)`.
    Power { alpha_star: f64, c: f64, power: f64 },
}

impl AlphaSeq {
    pub fn at(&self, n: u64) -> f64 {
        match *self {
            AlphaSeq::Constant { alpha } => alpha,
            AlphaSeq::Power { alpha_star, c, power } => alpha_star + c * (n as f64).powf(-power),
        }
    }

    pub fn limit(&self) -> f64 {
        match *self {
            AlphaSeq::Constant { alpha } => alpha,
            AlphaSeq::Power { alpha_star, power, .. } if power > 0.0 => alpha_star,
            AlphaSeq::Power { alpha_star, c, .. } => alpha_star + c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlebanerFamily {
    pub alpha: AlphaSeq,
    /// Uniform bound `C` on `|α_n|`.
    pub bound: f64,
}

/// State-dependent walk on `{0, 1, 2, ...}` for `|S_t|`.
#[derive(Debug, Clone, PartialEq)]
pub struct KlebanerWalk {
    spec: KlebanerFamily,
}

pub fn make_klebaner_family(spec: KlebanerFamily) -> Result<KlebanerWalk> {
    if !(spec.bound.is_finite() && spec.bound > 0.0) {
        return Err(invalid("bound C must be positive"));
    }
    let walk = KlebanerWalk { spec };
    walk.up_probability(1)?;
    Ok(walk)
}

impl KlebanerWalk {
    pub fn spec(&self) -> &KlebanerFamily {
        &self.spec
    }

    pub fn alpha_star(&self) -> f64 {
        self.spec.alpha.limit()
    }

    /// Probability that `|S|` moves from `n` to `n + 1`.
    pub fn up_probability(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Ok(1.0);
        }
        let a = self.spec.alpha.at(n);
        let limit = self.spec.bound.min(0.5 * n as f64);
        if !(a.abs() < limit) {
            return Err(invalid(format!("|alpha_{n}| = {} violates min(C, n/2) = {limit}", a.abs())));
        }
        Ok(0.5 + a / n as f64)
    }

    /// Up-probabilities for `n = 0..=n_max`.
    pub fn table(&self, n_max: u64) -> Result<Vec<f64>> {
        (0..=n_max).map(|n| self.up_probability(n)).collect()
    }

    /// `n * ln(up / down)` at level `n`, evaluated without cancellation.
    pub fn log_ratio_power(&self, n: u64) -> Result<f64> {
        self.up_probability(n)?;
        let x = 2.0 * self.spec.alpha.at(n) / n as f64;
        Ok(n as f64 * (x.ln_1p() - (-x).ln_1p()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> Rational64 {
        Rational64::new(p, q)
    }

    fn lat(pairs: &[(i64, f64)]) -> BaseDistribution {
        BaseDistribution::Lattice(LatticeLaw::new(r(1, 1), pairs.to_vec()).unwrap())
    }

    #[test]
    fn parameter_invariants() {
        assert!(FamilyParameter::exact(vec![r(3, 2), r(1, 2)]).is_ok());
        assert!(FamilyParameter::exact(vec![r(3, 2), r(1, 3)]).is_err());
        assert!(FamilyParameter::exact(vec![r(2, 1), r(0, 1)]).is_err());
        let a = FamilyParameter::real(vec![1.2, 0.8]).unwrap();
        assert_eq!(a.rationals().unwrap(), &[r(6, 5), r(4, 5)]);
        assert!(FamilyParameter::simple(3).is_simple());
        let irr = FamilyParameter::real(vec![std::f64::consts::SQRT_2, 2.0 - std::f64::consts::SQRT_2]).unwrap();
        assert!(irr.dim() == 2);
    }

    #[test]
    fn scaling_two_point_by_two() {
        let base = lat(&[(-1, 0.5), (1, 0.5)]);
        let law = scale_distribution(&base, r(2, 1)).unwrap();
        assert_eq!(law.atoms().unwrap(), vec![(r(-2, 1), 0.5), (r(2, 1), 0.5)]);
        let id = scale_distribution(&base, r(1, 1)).unwrap();
        assert_eq!(id.atoms().unwrap(), base.as_lattice().unwrap().values());
        assert!(scale_distribution(&base, 0.0).is_err());
        assert!(scale_distribution(&base, -1.0).is_err());
    }

    #[test]
    fn scaled_variance() {
        let base = BaseDistribution::Continuous(ContinuousLaw::Uniform { c: 1.0 });
        let law = scale_distribution(&base, 1.5).unwrap();
        assert!((law.variance() - 2.25 / 3.0).abs() < 1e-15);
        assert!((law.cdf(0.75) - base.cdf(0.5)).abs() < 1e-15);
    }

    #[test]
    fn split_examples() {
        let s = split_signed(&scale_distribution(&lat(&[(-1, 0.5), (1, 0.5)]), r(1, 1)).unwrap()).unwrap();
        assert_eq!(s.p_plus, 0.5);
        assert_eq!(s.b_pmf, vec![(r(1, 1), 1.0)]);
        assert_eq!(s.bt_pmf, vec![(r(1, 1), 1.0)]);

        let s = split_signed(&scale_distribution(&lat(&[(-1, 0.25), (0, 0.5), (1, 0.25)]), r(1, 1)).unwrap())
            .unwrap();
        assert_eq!(s.p_plus, 0.75);
        assert_eq!(s.b_pmf.len(), 2);
        assert!((s.b_pmf[0].1 - 2.0 / 3.0).abs() < 1e-15 && (s.b_pmf[1].1 - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.bt_pmf, vec![(r(1, 1), 1.0)]);

        let s = split_signed(
            &scale_distribution(&lat(&[(-2, 0.25), (-1, 0.25), (1, 0.25), (2, 0.25)]), r(1, 1)).unwrap(),
        )
        .unwrap();
        assert_eq!(s.b_pmf, vec![(r(1, 1), 0.5), (r(2, 1), 0.5)]);
        assert_eq!(s.bt_pmf, vec![(r(1, 1), 0.5), (r(2, 1), 0.5)]);
    }

    #[test]
    fn continuous_split_is_unsupported() {
        let base = BaseDistribution::Continuous(ContinuousLaw::Uniform { c: 1.0 });
        let law = scale_distribution(&base, 1.0).unwrap();
        assert!(matches!(split_signed(&law), Err(Error::Unsupported(_))));
    }

    #[test]
    fn base_validation() {
        assert!(LatticeLaw::new(r(1, 1), vec![(1, 1.0)]).is_err());
        assert!(LatticeLaw::new(r(1, 1), vec![(-1, 0.5), (2, 0.5)]).is_err());
        assert!(LatticeLaw::new(r(1, 1), vec![(-1, 0.5), (1, 0.4)]).is_err());
        assert!(LatticeLaw::new(r(1, 1), vec![(-2, 1.0 / 3.0), (1, 2.0 / 3.0)]).is_ok());
        assert!(ContinuousLaw::Uniform { c: 0.0 }.validate().is_err());
    }

    #[test]
    fn truncated_normal_moments() {
        let law = ContinuousLaw::TruncatedNormal { sigma: 1.0, c: 2.0 };
        // Midpoint rule on the density as an independent oracle.
        let n = 200_000;
        let h = 4.0 / n as f64;
        let mut mass = 0.0;
        let mut var = 0.0;
        for k in 0..n {
            let x = -2.0 + (k as f64 + 0.5) * h;
            let f = (-0.5 * x * x).exp();
            mass += f * h;
            var += x * x * f * h;
        }
        assert!((law.variance() - var / mass).abs() < 1e-8);
        for &u in &[0.05, 0.3, 0.5, 0.9] {
            assert!((law.cdf(law.quantile(u)) - u).abs() < 1e-10);
        }
    }

    #[test]
    fn symmetric_family_examples() {
        let f = make_symmetric_family(&[0.3, 0.2]).unwrap();
        let moves = f.moves();
        assert!(moves.contains(&(0, 1, 0.3)) && moves.contains(&(1, -1, 0.2)));
        assert!(make_symmetric_family(&[0.3, 0.3]).is_err());
        assert_eq!(make_symmetric_family(&[0.5]).unwrap().moves().len(), 2);
    }

    #[test]
    fn klebaner_examples() {
        let w = make_klebaner_family(KlebanerFamily { alpha: AlphaSeq::Constant { alpha: 0.0 }, bound: 1.0 })
            .unwrap();
        assert_eq!(w.up_probability(7).unwrap(), 0.5);
        assert_eq!(w.up_probability(0).unwrap(), 1.0);
        let w = make_klebaner_family(KlebanerFamily { alpha: AlphaSeq::Constant { alpha: 0.1 }, bound: 1.0 })
            .unwrap();
        assert!((w.up_probability(10).unwrap() - 0.51).abs() < 1e-15);
        let bad = make_klebaner_family(KlebanerFamily { alpha: AlphaSeq::Constant { alpha: 0.6 }, bound: 1.0 });
        assert!(bad.is_err());
        let edge = KlebanerWalk { spec: KlebanerFamily { alpha: AlphaSeq::Constant { alpha: 0.9 }, bound: 1.0 } };
        assert!(edge.up_probability(1).is_err());
        assert!(edge.up_probability(2).is_ok());
    }
}
