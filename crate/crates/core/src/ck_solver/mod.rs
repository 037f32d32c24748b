//! Chapman–Kolmogorov integration for one workload class.
//!
//! The class workload, measured in units of `g = gcd(𝓑)`, jumps at the
//! epochs of a rate-1 Poisson stream. With probability `p_plus` the jump is
//! `+B` (law `r`); otherwise it is the negative-arrival map `n ↦ |n - B̃|`
//! (law `r̃`). States above `n_max` are absorbed into a leak component, so
//! `Σ p_n + leak = 1` exactly up to rounding.
//!
//! `q_n = lim p_n(t) / p_0(t)` converges like a power series in `1 / t`.
//! [`extract_q`] fits that series over the second half of the horizon and
//! evaluates it at `1 / t = 0`.

pub mod dopri;

use crate::error::{invalid, Error, Result};
use crate::exact::{gcd_all, integer_multiple};
use crate::families::{FamilyParameter, IncrementLaw, Member, ScaledFamily, SignedSplit, split_signed};
use dopri::{Rhs, Tolerance};
use nalgebra::{DMatrix, DVector};
use num_rational::Rational64;
use num_traits::Signed;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

/// `gcd` of the positive values among `B` and `B̃` sizes.
pub fn gcd_of_support(b_values: &[Rational64], bt_values: &[Rational64]) -> Result<Rational64> {
    if bt_values.is_empty() {
        return Err(Error::UndefinedGcd);
    }
    if let Some(v) = bt_values.iter().find(|v| !v.is_positive()) {
        return Err(Error::ContractViolation(format!("negative-arrival size {v} must be positive")));
    }
    if let Some(v) = b_values.iter().find(|v| v.is_negative()) {
        return Err(Error::ContractViolation(format!("positive-arrival size {v} is negative")));
    }
    gcd_all(b_values.iter().chain(bt_values).copied()).ok_or(Error::UndefinedGcd)
}

/// Combined positive support of one class and its gcd.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    pub support: Vec<Rational64>,
    pub g: Rational64,
}

impl LatticeSpec {
    pub fn from_split(split: &SignedSplit) -> Result<Self> {
        let b: Vec<Rational64> = split.b_pmf.iter().map(|a| a.0).collect();
        let bt: Vec<Rational64> = split.bt_pmf.iter().map(|a| a.0).collect();
        let g = gcd_of_support(&b, &bt)?;
        let mut support: Vec<Rational64> = b.iter().chain(&bt).copied().filter(|v| v.is_positive()).collect();
        support.sort();
        support.dedup();
        Ok(Self { support, g })
    }
}

/// Jump laws of one class in units of its gcd.
#[derive(Debug, Clone, PartialEq)]
pub struct CkSystem {
    pub p_plus: f64,
    /// `(b, r_b)`, `b >= 0`.
    pub r: Vec<(usize, f64)>,
    /// `(c, r̃_c)`, `c >= 1`.
    pub rt: Vec<(usize, f64)>,
}

impl CkSystem {
    pub fn new(p_plus: f64, r: Vec<(usize, f64)>, rt: Vec<(usize, f64)>) -> Result<Self> {
        if !(p_plus > 0.0 && p_plus < 1.0) && !(p_plus == 1.0 && rt.is_empty()) {
            return Err(invalid(format!("p_plus = {p_plus} must lie in (0, 1)")));
        }
        for (name, pmf) in [("r", &r), ("r~", &rt)] {
            let s: f64 = pmf.iter().map(|a| a.1).sum();
            if pmf.iter().any(|a| !(a.1 >= 0.0)) || (s - 1.0).abs() > 1e-12 {
                return Err(invalid(format!("{name} is not a pmf (mass {s})")));
            }
        }
        if rt.iter().any(|a| a.0 == 0) {
            return Err(invalid("negative-arrival sizes must be at least one unit"));
        }
        Ok(Self { p_plus, r, rt })
    }

    /// The symmetric `±1` chain: `B ≡ B̃ ≡ 1`, fair signs.
    pub fn pm_one() -> Self {
        Self { p_plus: 0.5, r: vec![(1, 1.0)], rt: vec![(1, 1.0)] }
    }

    /// System of one class plus its lattice data.
    pub fn from_split(split: &SignedSplit) -> Result<(Self, LatticeSpec)> {
        let spec = LatticeSpec::from_split(split)?;
        let conv = |pmf: &[(Rational64, f64)]| -> Vec<(usize, f64)> {
            pmf.iter()
                .map(|&(v, p)| (integer_multiple(v, spec.g).expect("gcd divides support") as usize, p))
                .collect()
        };
        let sys = Self::new(split.p_plus, conv(&split.b_pmf), conv(&split.bt_pmf))?;
        Ok((sys, spec))
    }

    pub fn from_law(law: &IncrementLaw) -> Result<(Self, LatticeSpec)> {
        Self::from_split(&split_signed(law)?)
    }

    /// Second moment of one signed jump, in squared units.
    pub fn jump_second_moment(&self) -> f64 {
        let m = |pmf: &[(usize, f64)]| pmf.iter().map(|&(k, p)| (k * k) as f64 * p).sum::<f64>();
        self.p_plus * m(&self.r) + (1.0 - self.p_plus) * m(&self.rt)
    }

    /// Largest single jump, in units.
    pub fn max_jump(&self) -> usize {
        self.r.iter().chain(&self.rt).map(|a| a.0).max().unwrap_or(1)
    }

    /// Outgoing transitions of state `l` as `(target, probability)`.
    pub fn transitions(&self, l: usize) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(self.r.len() + self.rt.len());
        let mut push = |n: usize, w: f64| match out.iter_mut().find(|e| e.0 == n) {
            Some(e) => e.1 += w,
            None => out.push((n, w)),
        };
        for &(b, p) in &self.r {
            push(l + b, self.p_plus * p);
        }
        let pm = 1.0 - self.p_plus;
        for &(c, p) in &self.rt {
            push(l.abs_diff(c), pm * p);
        }
        out
    }
}

/// Sparse generator on `0..=n_max` plus leak.
struct Generator {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
    leak: Vec<f64>,
}

impl Generator {
    fn new(sys: &CkSystem, n_max: usize) -> Self {
        let mut rows = Vec::with_capacity(n_max + 1);
        let mut leak = Vec::with_capacity(n_max + 1);
        for l in 0..=n_max {
            let (inside, outside): (Vec<_>, Vec<_>) = sys.transitions(l).into_iter().partition(|e| e.0 <= n_max);
            leak.push(outside.iter().map(|e| e.1).sum());
            rows.push(inside);
        }
        Self { n: n_max + 1, rows, leak }
    }
}

impl Rhs for Generator {
    fn eval(&self, y: &[f64], dy: &mut [f64]) {
        dy.fill(0.0);
        let mut lk = 0.0;
        for l in 0..self.n {
            let yl = y[l];
            if yl == 0.0 {
                continue;
            }
            dy[l] -= yl;
            for &(n, w) in &self.rows[l] {
                dy[n] += yl * w;
            }
            lk += yl * self.leak[l];
        }
        dy[self.n] = lk;
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CkOptions {
    pub t_end: f64,
    /// Fixed truncation; `None` picks `max(50, 10 sqrt(t_end var))` and doubles on leak.
    pub n_max: Option<usize>,
    pub rtol: f64,
    pub atol: f64,
    /// Output samples over `[0.45 t_end, t_end]`.
    pub samples: usize,
    /// Highest state whose ratio is extracted; `None` uses `sqrt(t_end var)`.
    pub n_report: Option<usize>,
    pub plateau_tol: f64,
    pub degree: usize,
    pub leak_tol: f64,
}

impl Default for CkOptions {
    fn default() -> Self {
        Self {
            t_end: 500.0,
            n_max: None,
            rtol: 1e-10,
            atol: 1e-14,
            samples: 111,
            n_report: None,
            plateau_tol: 1e-5,
            degree: 6,
            leak_tol: 1e-6,
        }
    }
}

/// Truncated trajectory and extracted ratios.
#[derive(Debug, Clone, Serialize)]
pub struct CkSolution {
    pub n_max: usize,
    pub times: Vec<f64>,
    /// `p[k][n] = p_n(times[k])`.
    pub p: Vec<Vec<f64>>,
    pub leak: Vec<f64>,
    /// `max_k |Σ_n p_n + leak - 1|`.
    pub mass_error: f64,
    /// Entries below `-1e-12` across all outputs.
    pub negative_count: usize,
    pub q: Vec<f64>,
    pub q_raw: Vec<f64>,
    pub q_error: Vec<f64>,
    pub plateau_error: f64,
    pub converged: bool,
    pub steps: usize,
}

const MAX_STATES: usize = 1 << 20;

fn output_times(t_end: f64, samples: usize) -> Vec<f64> {
    let mut t = vec![0.0];
    let lo = 0.45 * t_end;
    let k = samples.max(2);
    t.extend((0..k).map(|i| lo + (t_end - lo) * i as f64 / (k - 1) as f64));
    t
}

/// Integrates from `p_0(0) = 1`.
pub fn integrate_ck(sys: &CkSystem, opts: &CkOptions) -> Result<CkSolution> {
    if !(opts.t_end.is_finite() && opts.t_end > 0.0) {
        return Err(invalid("t_end must be positive"));
    }
    let var = sys.jump_second_moment().max(1e-300);
    let auto = opts.n_max.is_none();
    let mut n_max = opts.n_max.unwrap_or_else(|| 50usize.max((10.0 * (opts.t_end * var).sqrt()).ceil() as usize));
    loop {
        let sol = integrate_fixed(sys, n_max, opts)?;
        let leak = *sol.leak.last().unwrap_or(&0.0);
        if leak <= opts.leak_tol {
            return Ok(sol);
        }
        let suggested = 2 * n_max;
        if !auto || suggested > MAX_STATES {
            return Err(Error::TruncationTooSmall { leak, t: opts.t_end, suggested });
        }
        n_max = suggested;
    }
}

fn integrate_fixed(sys: &CkSystem, n_max: usize, opts: &CkOptions) -> Result<CkSolution> {
    let gen = Generator::new(sys, n_max);
    let mut y0 = vec![0.0; n_max + 2];
    y0[0] = 1.0;
    let times = output_times(opts.t_end, opts.samples);
    let mut p = Vec::with_capacity(times.len());
    let mut leak = Vec::with_capacity(times.len());
    let mut mass_error: f64 = 0.0;
    let mut negative_count = 0;
    let stats = dopri::integrate(&gen, &y0, &times, Tolerance { rtol: opts.rtol, atol: opts.atol }, |_, _, y| {
        let s: f64 = y.iter().sum();
        mass_error = mass_error.max((s - 1.0).abs());
        negative_count += y[..=n_max].iter().filter(|&&v| v < -1e-12).count();
        p.push(y[..=n_max].iter().map(|&v| v.max(0.0)).collect::<Vec<f64>>());
        leak.push(y[n_max + 1]);
    });
    let mut sol = CkSolution {
        n_max,
        times,
        p,
        leak,
        mass_error,
        negative_count,
        q: vec![],
        q_raw: vec![],
        q_error: vec![],
        plateau_error: f64::INFINITY,
        converged: false,
        steps: stats.accepted + stats.rejected,
    };
    let n_report = opts
        .n_report
        .unwrap_or_else(|| ((opts.t_end * sys.jump_second_moment()).sqrt().floor() as usize).max(1))
        .min(n_max);
    let ex = extract_q(&sol, n_report, opts.degree, opts.plateau_tol)?;
    sol.q = ex.q;
    sol.q_raw = ex.q_raw;
    sol.q_error = ex.q_error;
    sol.plateau_error = ex.plateau_error;
    sol.converged = ex.converged;
    Ok(sol)
}

/// Extrapolated ratios with diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct QExtract {
    pub q: Vec<f64>,
    /// Plain `p_n(t_end) / p_0(t_end)`.
    pub q_raw: Vec<f64>,
    /// `|fit(degree) - fit(degree - 1)|` per state.
    pub q_error: Vec<f64>,
    /// Max relative change between the fit ending at `0.9 t_end` and at `t_end`.
    pub plateau_error: f64,
    pub converged: bool,
}

/// Weights `w` with `w · y` = least-squares polynomial in `1/t` evaluated at `1/t = 0`.
fn extrapolation_weights(times: &[f64], degree: usize) -> Option<Vec<f64>> {
    let u: Vec<f64> = times.iter().map(|t| 1.0 / t).collect();
    let (lo, hi) = u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    if !(h > 0.0) || u.len() <= degree {
        return None;
    }
    let m = DMatrix::from_fn(u.len(), degree + 1, |i, j| ((u[i] - c) / h).powi(j as i32));
    let x0 = -c / h;
    let e = DVector::from_fn(degree + 1, |j, _| x0.powi(j as i32));
    let pinv = m.pseudo_inverse(1e-14).ok()?;
    let w = pinv.transpose() * e;
    Some(w.iter().copied().collect())
}

/// Extracts `q_n` for `n = 0..=n_report` from the sampled trajectory.
pub fn extract_q(sol: &CkSolution, n_report: usize, degree: usize, tol: f64) -> Result<QExtract> {
    let t_end = *sol.times.last().ok_or_else(|| Error::Unconverged("no samples".into()))?;
    let n_report = n_report.min(sol.n_max);
    let idx_b: Vec<usize> = (0..sol.times.len()).filter(|&k| sol.times[k] >= 0.5 * t_end * (1.0 - 1e-12)).collect();
    let idx_a: Vec<usize> = (0..sol.times.len())
        .filter(|&k| sol.times[k] >= 0.45 * t_end * (1.0 - 1e-12) && sol.times[k] <= 0.9 * t_end * (1.0 + 1e-12))
        .collect();
    for &k in idx_a.iter().chain(&idx_b) {
        let p0 = sol.p[k][0];
        if !(p0 > f64::MIN_POSITIVE) {
            return Err(Error::P0Underflow(sol.times[k]));
        }
    }
    let ratios = |idx: &[usize], n: usize| -> Vec<f64> { idx.iter().map(|&k| sol.p[k][n] / sol.p[k][0]).collect() };
    let tb: Vec<f64> = idx_b.iter().map(|&k| sol.times[k]).collect();
    let ta: Vec<f64> = idx_a.iter().map(|&k| sol.times[k]).collect();
    let wb = extrapolation_weights(&tb, degree);
    let wb_low = extrapolation_weights(&tb, degree.saturating_sub(1));
    let wa = extrapolation_weights(&ta, degree);
    let dot = |w: &[f64], y: &[f64]| w.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let last = sol.p.last().expect("samples exist");
    let mut q = vec![1.0; n_report + 1];
    let mut q_raw = vec![1.0; n_report + 1];
    let mut q_error = vec![0.0; n_report + 1];
    let mut plateau: f64 = 0.0;
    for n in 1..=n_report {
        q_raw[n] = last[n] / last[0];
        match (&wb, &wb_low, &wa) {
            (Some(wb), Some(wl), Some(wa)) => {
                let yb = ratios(&idx_b, n);
                let ya = ratios(&idx_a, n);
                q[n] = dot(wb, &yb);
                q_error[n] = (q[n] - dot(wl, &yb)).abs();
                let qa = dot(wa, &ya);
                plateau = plateau.max((qa - q[n]).abs() / q[n].abs().max(1e-300));
            }
            _ => {
                q[n] = q_raw[n];
                plateau = f64::INFINITY;
            }
        }
    }
    if n_report == 0 {
        plateau = 0.0;
    }
    Ok(QExtract { q, q_raw, q_error, plateau_error: plateau, converged: plateau <= tol })
}

/// Writes `t,n,p_n` rows.
pub fn write_solution_csv<W: Write>(sol: &CkSolution, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["t", "n", "p_n"])?;
    for (t, row) in sol.times.iter().zip(&sol.p) {
        for (n, v) in row.iter().enumerate() {
            w.write_record([format!("{t}"), n.to_string(), format!("{v:e}")])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Ratios of one class together with its lattice unit.
#[derive(Debug, Clone)]
pub struct ClassSolution {
    pub system: CkSystem,
    pub spec: LatticeSpec,
    pub solution: CkSolution,
}

/// Solves every class of a member concurrently.
pub fn solve_member(member: &Member, opts: &CkOptions) -> Result<Vec<ClassSolution>> {
    member
        .laws
        .par_iter()
        .map(|law| {
            let (system, spec) = CkSystem::from_law(law)?;
            let solution = integrate_ck(&system, opts)?;
            Ok(ClassSolution { system, spec, solution })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    /// Max over pairs and `l <= L` of the ratio deviation.
    pub max_deviation: f64,
    /// Deviation per `l`.
    pub per_level: Vec<f64>,
    /// Jump laws coincide after relabelling by the class gcd.
    pub pmf_identity: bool,
    /// `a^(j) g_i = a^(i) g_j` (within a member) or the two-member analogue.
    pub gcd_identity: bool,
    pub converged: bool,
    pub gcds: Vec<String>,
}

fn opts_for(l_max: usize, opts: &CkOptions) -> CkOptions {
    let mut o = opts.clone();
    o.n_report = Some(o.n_report.unwrap_or(0).max(l_max));
    o
}

fn deviation(a: &[f64], b: &[f64], l_max: usize, per: &mut [f64]) {
    for l in 0..=l_max {
        per[l] = per[l].max((a[l] - b[l]).abs());
    }
}

/// Within-member identity `q^(i)_{l g_i} = q^(j)_{l g_j}`.
pub fn verify_property1(family: &ScaledFamily, a: &FamilyParameter, l_max: usize, opts: &CkOptions) -> Result<PropertyReport> {
    if !family.base.is_lattice() {
        return Err(Error::Unsupported("property checks need a lattice family".into()));
    }
    let member = family.member(a)?;
    let ex = a.rationals().ok_or_else(|| Error::Unsupported("property checks need rational a".into()))?;
    let sols = solve_member(&member, &opts_for(l_max, opts))?;
    let mut per = vec![0.0; l_max + 1];
    let mut pmf_identity = true;
    let mut gcd_identity = true;
    for i in 0..sols.len() {
        for j in i + 1..sols.len() {
            deviation(&sols[i].solution.q, &sols[j].solution.q, l_max, &mut per);
            pmf_identity &= sols[i].system == sols[j].system;
            gcd_identity &= ex[j] * sols[i].spec.g == ex[i] * sols[j].spec.g;
        }
    }
    Ok(PropertyReport {
        max_deviation: per.iter().copied().fold(0.0, f64::max),
        per_level: per,
        pmf_identity,
        gcd_identity,
        converged: sols.iter().all(|s| s.solution.converged),
        gcds: sols.iter().map(|s| s.spec.g.to_string()).collect(),
    })
}

/// Cross-member identity `q^(i)_{l g_i(a1)}(a1) = q^(i)_{l g_i(a2)}(a2)`.
pub fn verify_property2(family: &ScaledFamily, a1: &FamilyParameter, a2: &FamilyParameter, l_max: usize, opts: &CkOptions) -> Result<PropertyReport> {
    verify_property2_members(&family.member(a1)?, &family.member(a2)?, l_max, opts)
}

/// As [`verify_property2`] for members that may come from different families.
pub fn verify_property2_members(m1: &Member, m2: &Member, l_max: usize, opts: &CkOptions) -> Result<PropertyReport> {
    if m1.laws.len() != m2.laws.len() {
        return Err(Error::Unsupported("members have different dimensions".into()));
    }
    if m1.laws.iter().zip(&m2.laws).any(|(x, y)| x.base != y.base) {
        return Err(Error::Unsupported("members must share the base distribution".into()));
    }
    if m1.laws.iter().any(|l| !l.base.is_lattice()) {
        return Err(Error::Unsupported("property checks need a lattice family".into()));
    }
    let e1 = m1.a.rationals().ok_or_else(|| Error::Unsupported("property checks need rational a".into()))?;
    let e2 = m2.a.rationals().ok_or_else(|| Error::Unsupported("property checks need rational a".into()))?;
    let o = opts_for(l_max, opts);
    let (s1, s2) = rayon::join(|| solve_member(m1, &o), || solve_member(m2, &o));
    let (s1, s2) = (s1?, s2?);
    let mut per = vec![0.0; l_max + 1];
    let mut pmf_identity = true;
    let mut gcd_identity = true;
    for i in 0..s1.len() {
        deviation(&s1[i].solution.q, &s2[i].solution.q, l_max, &mut per);
        pmf_identity &= s1[i].system == s2[i].system;
        gcd_identity &= e2[i] * s1[i].spec.g == e1[i] * s2[i].spec.g;
    }
    Ok(PropertyReport {
        max_deviation: per.iter().copied().fold(0.0, f64::max),
        per_level: per,
        pmf_identity,
        gcd_identity,
        converged: s1.iter().chain(&s2).all(|s| s.solution.converged),
        gcds: s1.iter().chain(&s2).map(|s| s.spec.g.to_string()).collect(),
    })
}

/// Cyclic structure of the discrete-time reflected chain on `0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicClasses {
    pub period: u64,
    /// `class[n] = Some(c)` means state `n` is visited only at times `≡ c (mod period)`.
    pub class: Vec<Option<u64>>,
}

/// Breadth-first levels from state 0; the period is the gcd of level defects over edges.
pub fn cyclic_classes(sys: &CkSystem, n_max: usize) -> CyclicClasses {
    let mut level: Vec<Option<u64>> = vec![None; n_max + 1];
    level[0] = Some(0);
    let mut frontier = vec![0usize];
    let mut edges: Vec<(usize, usize)> = Vec::new();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &u in &frontier {
            for (v, w) in sys.transitions(u) {
                if w <= 0.0 || v > n_max {
                    continue;
                }
                edges.push((u, v));
                if level[v].is_none() {
                    level[v] = Some(level[u].expect("frontier is leveled") + 1);
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
    let period = edges.iter().fold(0u64, |g, &(u, v)| {
        let d = (level[u].unwrap() as i64 + 1 - level[v].unwrap() as i64).unsigned_abs();
        num_integer::gcd(g, d)
    });
    let period = period.max(1);
    CyclicClasses { period, class: level.iter().map(|l| l.map(|x| x % period)).collect() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64) -> Rational64 {
        Rational64::from_integer(p)
    }

    #[test]
    fn support_gcd_examples() {
        let g = gcd_of_support(&[r(0), r(2), r(4), r(6)], &[r(1), r(2), r(3), r(6)]).unwrap();
        assert_eq!(g, r(1));
        assert_eq!(gcd_of_support(&[r(0), r(2)], &[r(2), r(4)]).unwrap(), r(2));
        assert_eq!(gcd_of_support(&[r(3)], &[r(3)]).unwrap(), r(3));
        assert_eq!(gcd_of_support(&[r(0)], &[]), Err(Error::UndefinedGcd));
        assert!(gcd_of_support(&[], &[r(0)]).is_err());
    }

    #[test]
    fn initial_condition_and_mass() {
        let sol = integrate_ck(&CkSystem::pm_one(), &CkOptions { t_end: 20.0, ..Default::default() }).unwrap();
        assert_eq!(sol.times[0], 0.0);
        assert_eq!(sol.p[0][0], 1.0);
        assert!(sol.p[0][1..].iter().all(|&v| v == 0.0));
        assert!(sol.mass_error < 1e-9);
    }

    #[test]
    fn pm_one_chain_ratios() {
        let sol = integrate_ck(&CkSystem::pm_one(), &CkOptions::default()).unwrap();
        assert!(sol.converged, "plateau {}", sol.plateau_error);
        assert_eq!(sol.q[0], 1.0);
        assert!((sol.q[5] - 2.0).abs() < 1e-4);
    }

    #[test]
    fn short_horizon_is_unconverged() {
        let sol = integrate_ck(&CkSystem::pm_one(), &CkOptions { t_end: 1.0, n_report: Some(5), ..Default::default() }).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.q[0], 1.0);
    }

    #[test]
    fn explicit_small_truncation_errors() {
        let o = CkOptions { t_end: 200.0, n_max: Some(5), ..Default::default() };
        match integrate_ck(&CkSystem::pm_one(), &o) {
            Err(Error::TruncationTooSmall { suggested, .. }) => assert_eq!(suggested, 10),
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn periodicity_of_pm_one() {
        let c = cyclic_classes(&CkSystem::pm_one(), 10);
        assert_eq!(c.period, 2);
        assert_eq!(c.class[3], Some(1));
        assert_eq!(c.class[4], Some(0));
        let lazy = CkSystem::new(0.75, vec![(0, 2.0 / 3.0), (1, 1.0 / 3.0)], vec![(1, 1.0)]).unwrap();
        assert_eq!(cyclic_classes(&lazy, 10).period, 1);
    }
}
