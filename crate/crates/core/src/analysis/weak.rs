//! Weak semiconservativity: the member-vs-reference margin over a level grid.
//!
//! For each member `a` and level `z`, margin `m(z) = P(a, z) - P(1, z)`.
//! The reference direction is `m >= 0` (reference on the smaller side).
//! `z_star` is the smallest grid level from which no margin is significantly
//! against the direction.

use super::conditional::{estimate_conditional_grid, LadderOptions};
use super::exact_nd::{NdContext, NdMode, NdOptions};
use super::ConditionalEstimate;
use crate::error::{Error, Result};
use crate::exact::to_f64;
use crate::families::{FamilyParameter, Member, ScaledFamily};
use crate::rng::derive_seed;
use num_rational::Rational64;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckMethod {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Inconclusive => 3,
        }
    }

    /// Fail dominates, then inconclusive.
    pub fn combine(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Pass,
        }
    }
}

/// `Le`: `P(1, z) <= P(a, z)`; `Ge`: the reverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Le,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sign {
    Positive,
    Negative,
    /// Within the uncertainty band (includes exact ties).
    Level,
    Unreachable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginPoint {
    pub z: f64,
    pub reference: Option<f64>,
    pub member: Option<f64>,
    pub margin: Option<f64>,
    /// Combined uncertainty: `k σ` for Monte Carlo, summed bounds for exact.
    pub band: f64,
    pub sigma: f64,
    /// Fewer of the two conditioning-event counts; zero when unreachable.
    pub events: u64,
    pub sign: Sign,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberReport {
    pub a: String,
    pub direction: Option<Direction>,
    pub z_star: Option<f64>,
    pub margins: Vec<MarginPoint>,
    pub positive_points: usize,
    pub extended: bool,
    pub verdict: Verdict,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakSemiReport {
    pub method: CheckMethod,
    pub members: Vec<MemberReport>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone)]
pub struct WeakOptions {
    pub nd: NdOptions,
    pub ladder: LadderOptions,
    /// Significance multiplier for Monte Carlo margins.
    pub k_sigma: f64,
    /// Extend the grid once when the rightmost margin is against the direction.
    pub extend: bool,
    /// Monte Carlo: raise `T` to `factor · z_max² / σ_min²` per member.
    pub horizon_factor: Option<f64>,
    /// Fewest stable grid points needed for a verdict other than inconclusive.
    pub min_tail: usize,
}

impl Default for WeakOptions {
    fn default() -> Self {
        Self { nd: NdOptions::default(), ladder: LadderOptions::default(), k_sigma: 3.0, extend: true, horizon_factor: Some(2.0), min_tail: 2 }
    }
}

type Eval = dyn FnMut(&Member, usize, &[Rational64]) -> Result<Vec<Result<ConditionalEstimate>>>;

/// Runs the check for every member of `members`; `a = 1` is always the reference.
pub fn check_weak_semiconservative(
    family: &ScaledFamily,
    members: &[FamilyParameter],
    z_grid: &[Rational64],
    method: CheckMethod,
    opts: &WeakOptions,
) -> Result<WeakSemiReport> {
    if z_grid.is_empty() {
        return Err(crate::error::invalid("empty level grid"));
    }
    let mut grid = z_grid.to_vec();
    grid.sort();
    grid.dedup();
    let reference = family.member(&FamilyParameter::simple(family.dim))?;
    let mut eval: Box<Eval> = match method {
        CheckMethod::Exact => {
            if !family.base.is_lattice() {
                return Err(Error::Unsupported("exact method needs a lattice base".into()));
            }
            let nd = opts.nd.clone();
            Box::new(move |m: &Member, _k: usize, zs: &[Rational64]| {
                let z_max = *zs.iter().max().expect("nonempty");
                let mode = if m.a.is_simple() { NdMode::Simple } else { NdMode::Regular };
                let ctx = NdContext::new(m, mode, z_max, &nd)?;
                Ok(zs.iter().map(|&z| ctx.evaluate(z).map(|r| r.estimate())).collect())
            })
        }
        CheckMethod::MonteCarlo => {
            let base = opts.ladder.clone();
            let factor = opts.horizon_factor;
            Box::new(move |m: &Member, k: usize, zs: &[Rational64]| {
                let mut o = base.clone();
                o.seed = derive_seed(base.seed, k as u64);
                if let Some(f) = factor {
                    o.base_horizon = o.base_horizon.max(auto_horizon(m, zs, f));
                }
                Ok(estimate_conditional_grid(m, zs, &o)?.into_iter().map(|r| r.map(|l| l.estimate)).collect())
            })
        }
    };
    let mut ref_cache = eval(&reference, 0, &grid)?;
    let mut ref_grid = grid.clone();
    let mut reports = Vec::with_capacity(members.len());
    for (k, a) in members.iter().enumerate() {
        let member = family.member(a)?;
        let mut zs = grid.clone();
        let mut extended = false;
        loop {
            if zs.len() > ref_grid.len() {
                ref_cache = eval(&reference, 0, &zs)?;
                ref_grid = zs.clone();
            }
            let values = if a.is_simple() {
                ref_cache.iter().map(clone_result).collect()
            } else {
                eval(&member, k + 1, &zs)?
            };
            let points = margins(&zs, &ref_cache[..zs.len()], &values, method, opts.k_sigma);
            let last_against = points.iter().rev().find(|p| p.sign != Sign::Unreachable).map(|p| p.sign == Sign::Negative);
            if opts.extend && !extended && last_against == Some(true) {
                zs = extend_grid(&zs);
                extended = true;
                continue;
            }
            reports.push(member_report(a, points, extended, opts.min_tail));
            break;
        }
    }
    let verdict = reports.iter().fold(Verdict::Pass, |v, r| v.combine(r.verdict));
    Ok(WeakSemiReport { method, members: reports, verdict })
}

fn clone_result(r: &Result<ConditionalEstimate>) -> Result<ConditionalEstimate> {
    match r {
        Ok(e) => Ok(e.clone()),
        Err(e) => Err(Error::NoComposition(e.to_string())),
    }
}

/// `factor · z_max² / σ_min²` in real units, at least 1.
pub fn auto_horizon(m: &Member, zs: &[Rational64], factor: f64) -> u64 {
    let z = zs.iter().map(|&z| to_f64(z)).fold(0.0, f64::max);
    let var = m.laws.iter().map(|l| l.variance()).fold(f64::INFINITY, f64::min);
    (factor * z * z / var).ceil().max(1.0) as u64
}

/// Doubles the grid by continuing its final spacing.
fn extend_grid(zs: &[Rational64]) -> Vec<Rational64> {
    let n = zs.len();
    let step = if n >= 2 { zs[n - 1] - zs[n - 2] } else { zs[0] };
    let mut out = zs.to_vec();
    for i in 1..=n {
        out.push(zs[n - 1] + step * Rational64::from_integer(i as i64));
    }
    out
}

fn margins(
    zs: &[Rational64],
    reference: &[Result<ConditionalEstimate>],
    member: &[Result<ConditionalEstimate>],
    method: CheckMethod,
    k_sigma: f64,
) -> Vec<MarginPoint> {
    zs.iter()
        .zip(reference.iter().zip(member))
        .map(|(&z, (r, m))| match (r, m) {
            (Ok(r), Ok(m)) => {
                let margin = m.value - r.value;
                let sigma = (m.stderr * m.stderr + r.stderr * r.stderr).sqrt();
                let band = match method {
                    CheckMethod::Exact => m.numerical_error + r.numerical_error,
                    CheckMethod::MonteCarlo => k_sigma * sigma,
                };
                let sign = if margin > band {
                    Sign::Positive
                } else if margin < -band {
                    Sign::Negative
                } else {
                    Sign::Level
                };
                MarginPoint { z: to_f64(z), reference: Some(r.value), member: Some(m.value), margin: Some(margin), band, sigma, events: r.samples.min(m.samples), sign }
            }
            (r, m) => MarginPoint {
                z: to_f64(z),
                reference: r.as_ref().ok().map(|e| e.value),
                member: m.as_ref().ok().map(|e| e.value),
                margin: None,
                band: 0.0,
                sigma: 0.0,
                events: 0,
                sign: Sign::Unreachable,
            },
        })
        .collect()
}

/// Smallest index from which no point has sign `bad`.
fn stable_from(points: &[MarginPoint], bad: Sign) -> Option<usize> {
    let mut start = None;
    for (i, p) in points.iter().enumerate().rev() {
        match p.sign {
            s if s == bad => break,
            _ => start = Some(i),
        }
    }
    start
}

fn member_report(a: &FamilyParameter, points: Vec<MarginPoint>, extended: bool, min_tail: usize) -> MemberReport {
    let reachable = |from: usize| points[from..].iter().filter(|p| p.sign != Sign::Unreachable).count();
    let positive_points = points.iter().filter(|p| p.sign == Sign::Positive).count();
    let le = stable_from(&points, Sign::Negative);
    let ge = stable_from(&points, Sign::Positive);
    let (verdict, note) = match le {
        Some(i) if reachable(i) >= min_tail => (Verdict::Pass, String::new()),
        Some(_) => (Verdict::Inconclusive, "stable tail shorter than the minimum".into()),
        None if reachable(0) == 0 => (Verdict::Inconclusive, "no reachable grid level".into()),
        None => (Verdict::Fail, "rightmost margin is significantly negative".into()),
    };
    let (direction, z_star) = match (le, ge) {
        (Some(i), Some(j)) if j < i => (Some(Direction::Ge), Some(points[j].z)),
        (Some(i), _) => (Some(Direction::Le), Some(points[i].z)),
        (None, Some(j)) => (Some(Direction::Ge), Some(points[j].z)),
        (None, None) => (None, None),
    };
    MemberReport { a: a.label(), direction, z_star, margins: points, positive_points, extended, verdict, note }
}

/// Per-z margin rows for CSV output.
pub fn write_margins_csv<W: std::io::Write>(report: &WeakSemiReport, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["a", "z", "reference", "member", "margin", "sigma", "band", "events", "sign"])?;
    let f = |x: Option<f64>| x.map(crate::walker::fmt_real).unwrap_or_default();
    for m in &report.members {
        for p in &m.margins {
            let sign = serde_json::to_value(p.sign)?.as_str().unwrap_or_default().to_string();
            w.write_record([
                m.a.clone(),
                crate::walker::fmt_real(p.z),
                f(p.reference),
                f(p.member),
                f(p.margin),
                crate::walker::fmt_real(p.sigma),
                crate::walker::fmt_real(p.band),
                p.events.to_string(),
                sign,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::exact_nd::QSource;
    use crate::families::{BaseDistribution, LatticeLaw};

    fn r(p: i64) -> Rational64 {
        Rational64::from_integer(p)
    }

    fn pm2() -> ScaledFamily {
        ScaledFamily::new(BaseDistribution::Lattice(LatticeLaw::two_point(r(2)).unwrap()), 2).unwrap()
    }

    fn exact_opts() -> WeakOptions {
        let mut q = vec![2.0; 40];
        q[0] = 1.0;
        WeakOptions { nd: NdOptions { q: QSource::Given(q), ..Default::default() }, ..Default::default() }
    }

    #[test]
    fn reference_member_has_zero_margins() {
        let grid: Vec<Rational64> = (1..=6).map(|k| r(4 * k)).collect();
        let rep = check_weak_semiconservative(&pm2(), &[FamilyParameter::simple(2)], &grid, CheckMethod::Exact, &exact_opts()).unwrap();
        let m = &rep.members[0];
        assert!(m.margins.iter().all(|p| p.margin == Some(0.0)));
        assert_eq!(m.z_star, Some(4.0));
        assert_eq!(rep.verdict, Verdict::Pass);
    }

    #[test]
    fn exact_lattice_members_pass() {
        let grid: Vec<Rational64> = (1..=6).map(|k| r(4 * k)).collect();
        let members = [
            FamilyParameter::exact(vec![Rational64::new(3, 2), Rational64::new(1, 2)]).unwrap(),
            FamilyParameter::exact(vec![Rational64::new(6, 5), Rational64::new(4, 5)]).unwrap(),
        ];
        let rep = check_weak_semiconservative(&pm2(), &members, &grid, CheckMethod::Exact, &exact_opts()).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass, "{rep:#?}");
        for m in &rep.members {
            assert_eq!(m.direction, Some(Direction::Le));
            assert!(m.z_star.is_some());
        }
    }

    #[test]
    fn stable_tail_scan() {
        let mk = |s: Sign| MarginPoint { z: 1.0, reference: None, member: None, margin: None, band: 0.0, sigma: 0.0, events: 0, sign: s };
        let pts = vec![mk(Sign::Negative), mk(Sign::Positive), mk(Sign::Level), mk(Sign::Positive)];
        assert_eq!(stable_from(&pts, Sign::Negative), Some(1));
        assert_eq!(stable_from(&pts, Sign::Positive), None);
        let pts = vec![mk(Sign::Positive), mk(Sign::Negative)];
        assert_eq!(stable_from(&pts, Sign::Negative), None);
    }

    #[test]
    fn grid_extension_keeps_spacing() {
        let g = extend_grid(&[r(4), r(8), r(12)]);
        assert_eq!(g, vec![r(4), r(8), r(12), r(16), r(20), r(24)]);
    }

    #[test]
    fn continuous_exact_is_unsupported() {
        let fam = ScaledFamily::new(BaseDistribution::Continuous(crate::families::ContinuousLaw::Uniform { c: 1.0 }), 2).unwrap();
        let res = check_weak_semiconservative(&fam, &[FamilyParameter::simple(2)], &[r(1)], CheckMethod::Exact, &WeakOptions::default());
        assert!(matches!(res, Err(Error::Unsupported(_))));
    }
}
