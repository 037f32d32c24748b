//! Exact `N / D` evaluation of the outward-step probability at a norm level.
//!
//! Asymptotically the reflected walk sits at coordinate state `k_i g_i`
//! with weight proportional to `Π q_{k_i}`, restricted to the compositions
//! the discrete-time walk can actually occupy at a common time. `D` sums
//! those weights over all compositions with `Σ k_i g_i = z`; `N` adds the
//! exact probability that one more step raises the norm. The per-coordinate
//! norm change from state `s` is `|s + x| - s`: `+B` for a positive draw,
//! `-B̃` when `B̃ <= s`, and `B̃ - 2s` in the reflection case.

use super::ConditionalEstimate;
use crate::ck_solver::{cyclic_classes, integrate_ck, CkOptions, CkSystem, CyclicClasses};
use crate::error::{invalid, Error, Result};
use crate::exact::{integer_multiple, to_f64};
use crate::families::{FamilyParameter, Member, SymmetricFamily};
use crate::walker::LatticeWalk;
use num_rational::Rational64;
use num_traits::Zero;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NdMode {
    /// `a = 1`: every coordinate shares the same lattice unit.
    Simple,
    /// General member; ratios come from the base member relabelled by each class gcd.
    Regular,
}

/// Where the occupancy ratios come from.
#[derive(Debug, Clone)]
pub enum QSource {
    /// Integrate the base class system; `t_end` grows with the largest state needed.
    Ck(CkOptions),
    /// Ratios of the base class system, indexed in gcd units.
    Given(Vec<f64>),
}

impl Default for QSource {
    fn default() -> Self {
        QSource::Ck(CkOptions::default())
    }
}

#[derive(Debug, Clone)]
pub struct NdOptions {
    pub q: QSource,
    /// Refuse instances whose `#compositions × Π |support_i|` exceeds this.
    pub budget: f64,
}

impl Default for NdOptions {
    fn default() -> Self {
        Self { q: QSource::default(), budget: 1e8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NdResult {
    pub z: f64,
    pub n: f64,
    pub d: f64,
    pub ratio: f64,
    /// Probability that the norm decreases.
    pub down: f64,
    pub compositions: usize,
    pub reachable: usize,
    pub numerical_error: f64,
}

impl NdResult {
    pub fn estimate(&self) -> ConditionalEstimate {
        ConditionalEstimate::exact(self.ratio, self.numerical_error, self.z, self.reachable as u64)
    }
}

struct Coordinate {
    /// Class gcd in walk units.
    g: i64,
    /// Step atoms in walk units.
    atoms: Vec<(i64, f64)>,
    classes: CyclicClasses,
}

/// Prepared evaluator for one member up to a largest level.
pub struct NdContext {
    unit: Rational64,
    coords: Vec<Coordinate>,
    q: Vec<f64>,
    q_rel_error: f64,
    budget: f64,
    k_max: usize,
}

fn q_for(sys: &CkSystem, k_max: usize, src: &QSource) -> Result<(Vec<f64>, f64)> {
    match src {
        QSource::Given(q) => {
            if q.len() <= k_max {
                return Err(invalid(format!("given ratios cover states up to {}, need {k_max}", q.len().saturating_sub(1))));
            }
            Ok((q.clone(), 0.0))
        }
        QSource::Ck(base) => {
            let mut o = base.clone();
            let var = sys.jump_second_moment();
            o.t_end = o.t_end.max(20.0 * (k_max * k_max) as f64 / var);
            o.n_report = Some(k_max.max(1));
            let sol = integrate_ck(sys, &o)?;
            if !sol.converged {
                return Err(Error::Unconverged(format!(
                    "occupancy ratios plateau error {:.3e} exceeds {:.1e} at t_end={}",
                    sol.plateau_error, o.plateau_tol, o.t_end
                )));
            }
            let rel = (1..=k_max).map(|n| sol.q_error[n] / sol.q[n].abs().max(1e-300)).fold(0.0, f64::max);
            Ok((sol.q, rel.max(sol.plateau_error)))
        }
    }
}

impl NdContext {
    /// Prepares evaluation of levels up to `z_max` for `member`.
    pub fn new(member: &Member, mode: NdMode, z_max: Rational64, opts: &NdOptions) -> Result<Self> {
        if mode == NdMode::Simple && !member.a.is_simple() {
            return Err(invalid(format!("simple mode needs a = 1, got {}", member.a.label())));
        }
        let walk = LatticeWalk::from_member(member)?;
        let unit = walk.exact_unit();
        let base_member = member_with_unit_scale(member)?;
        let mut systems = Vec::new();
        let mut coords = Vec::new();
        for (law, base_law) in member.laws.iter().zip(&base_member.laws) {
            let (sys, spec) = CkSystem::from_law(law)?;
            let (base_sys, _) = CkSystem::from_law(base_law)?;
            if sys != base_sys {
                return Err(Error::ContractViolation("class system differs from the base system after relabelling".into()));
            }
            let g = integer_multiple(spec.g, unit).ok_or_else(|| invalid("walk unit must divide the class gcd"))?;
            let atoms = law
                .atoms()
                .expect("lattice")
                .into_iter()
                .map(|(v, p)| (integer_multiple(v, unit).expect("unit divides steps"), p))
                .collect();
            systems.push(sys);
            coords.push(Coordinate { g, atoms, classes: CyclicClasses { period: 1, class: vec![] } });
        }
        let z_units = integer_multiple(z_max, unit).ok_or_else(|| Error::NoComposition(format!("{z_max} is off the norm lattice")))?;
        let k_max = coords.iter().map(|c| (z_units / c.g) as usize).max().unwrap_or(0);
        for (c, sys) in coords.iter_mut().zip(&systems) {
            c.classes = cyclic_classes(sys, k_max + 2 * sys.max_jump() + 2);
        }
        let (q, q_rel_error) = q_for(&systems[0], k_max, &opts.q)?;
        Ok(Self { unit, coords, q, q_rel_error, budget: opts.budget, k_max })
    }

    pub fn unit(&self) -> Rational64 {
        self.unit
    }

    fn reachable(&self, k: &[usize]) -> bool {
        let mut periods = Vec::with_capacity(k.len());
        let mut classes = Vec::with_capacity(k.len());
        for (c, &ki) in self.coords.iter().zip(k) {
            match c.classes.class.get(ki).copied().flatten() {
                Some(cl) => {
                    periods.push(c.classes.period);
                    classes.push(cl);
                }
                None => return false,
            }
        }
        let l = periods.iter().fold(1u64, |a, &b| num_integer::lcm(a, b));
        (0..l).any(|t| periods.iter().zip(&classes).all(|(&p, &c)| t % p == c))
    }

    fn compositions(&self, z_units: i64) -> Vec<Vec<usize>> {
        fn rec(coords: &[Coordinate], i: usize, rem: i64, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            let g = coords[i].g;
            if i + 1 == coords.len() {
                if rem % g == 0 {
                    cur.push((rem / g) as usize);
                    out.push(cur.clone());
                    cur.pop();
                }
                return;
            }
            for k in 0..=(rem / g) {
                cur.push(k as usize);
                rec(coords, i + 1, rem - k * g, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(&self.coords, 0, z_units, &mut Vec::new(), &mut out);
        out
    }

    /// `(N, D)` and the down-probability mass at level `z`.
    pub fn evaluate(&self, z: Rational64) -> Result<NdResult> {
        if !(z > Rational64::zero()) {
            return Err(invalid("level must be positive"));
        }
        let z_units = integer_multiple(z, self.unit).ok_or_else(|| Error::NoComposition(format!("{z} is off the norm lattice")))?;
        let comps = self.compositions(z_units);
        if comps.iter().any(|k| k.iter().any(|&ki| ki > self.k_max)) {
            return Err(invalid(format!("level {z} exceeds the prepared range")));
        }
        let support: f64 = self.coords.iter().map(|c| c.atoms.len() as f64).product();
        let estimate = comps.len() as f64 * support;
        if estimate > self.budget {
            return Err(Error::CostExceeded { estimate, budget: self.budget });
        }
        let (mut n, mut d, mut down) = (0.0, 0.0, 0.0);
        let mut reachable = 0;
        for k in comps.iter().filter(|k| self.reachable(k)) {
            reachable += 1;
            let w: f64 = k.iter().map(|&ki| self.q[ki]).product();
            let (up, dn) = self.step_outcome(k);
            d += w;
            n += w * up;
            down += w * dn;
        }
        if reachable == 0 {
            return Err(Error::NoComposition(format!("{z}")));
        }
        let err = 2.0 * self.coords.len() as f64 * self.q_rel_error;
        Ok(NdResult {
            z: to_f64(z),
            n,
            d,
            ratio: n / d,
            down: down / d,
            compositions: comps.len(),
            reachable,
            numerical_error: err,
        })
    }

    /// `(P{ΣΔ > 0}, P{ΣΔ < 0})` from the composition `k`.
    fn step_outcome(&self, k: &[usize]) -> (f64, f64) {
        let mut dist: Vec<f64> = vec![1.0];
        let mut offset: i64 = 0;
        for (c, &ki) in self.coords.iter().zip(k) {
            let s = ki as i64 * c.g;
            let deltas: Vec<(i64, f64)> = c.atoms.iter().map(|&(x, p)| ((s + x).abs() - s, p)).collect();
            let lo = deltas.iter().map(|e| e.0).min().unwrap();
            let hi = deltas.iter().map(|e| e.0).max().unwrap();
            let mut next = vec![0.0; dist.len() + (hi - lo) as usize];
            for (i, &pi) in dist.iter().enumerate() {
                if pi == 0.0 {
                    continue;
                }
                for &(dl, p) in &deltas {
                    next[i + (dl - lo) as usize] += pi * p;
                }
            }
            dist = next;
            offset += lo;
        }
        let mut up = 0.0;
        let mut dn = 0.0;
        for (i, &p) in dist.iter().enumerate() {
            let v = i as i64 + offset;
            if v > 0 {
                up += p;
            } else if v < 0 {
                dn += p;
            }
        }
        (up, dn)
    }
}

/// The member of the same family with `a = 1`.
fn member_with_unit_scale(member: &Member) -> Result<Member> {
    let base = member.laws.first().ok_or_else(|| invalid("empty member"))?.base.clone();
    let fam = crate::families::ScaledFamily::new(base, member.laws.len())?;
    fam.member(&FamilyParameter::simple(member.laws.len()))
}

/// One-shot evaluation at level `z`.
pub fn exact_nd(member: &Member, z: Rational64, mode: NdMode, opts: &NdOptions) -> Result<NdResult> {
    NdContext::new(member, mode, z, opts)?.evaluate(z)
}

/// Exact up/down probabilities of the nearest-neighbour family at level `n`.
///
/// Points of one level share a parity class, so no reachability filter is
/// needed. `q` holds the ratios of one coordinate marginal.
pub fn exact_level_symmetric(family: &SymmetricFamily, n: usize, q: &[f64]) -> Result<NdResult> {
    if n == 0 {
        return Err(invalid("level must be positive"));
    }
    if q.len() <= n {
        return Err(invalid("ratios do not cover the level"));
    }
    let alphas = family.alphas();
    let d = alphas.len();
    let mut comps = Vec::new();
    let mut cur = Vec::new();
    fn rec(d: usize, rem: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() + 1 == d {
            cur.push(rem);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=rem {
            cur.push(k);
            rec(d, rem - k, cur, out);
            cur.pop();
        }
    }
    rec(d, n, &mut cur, &mut comps);
    let (mut nn, mut dd, mut down) = (0.0, 0.0, 0.0);
    for k in &comps {
        let w: f64 = k.iter().map(|&ki| q[ki]).product();
        let up: f64 = k.iter().zip(alphas).map(|(&ki, &a)| if ki > 0 { a } else { 2.0 * a }).sum();
        let dn: f64 = k.iter().zip(alphas).map(|(&ki, &a)| if ki > 0 { a } else { 0.0 }).sum();
        dd += w;
        nn += w * up;
        down += w * dn;
    }
    Ok(NdResult {
        z: n as f64,
        n: nn,
        d: dd,
        ratio: nn / dd,
        down: down / dd,
        compositions: comps.len(),
        reachable: comps.len(),
        numerical_error: 0.0,
    })
}

/// Marginal class system of coordinate `i` of the nearest-neighbour family.
pub fn symmetric_marginal_system(family: &SymmetricFamily, i: usize) -> Result<CkSystem> {
    let a = family.alphas()[i];
    let p_plus = 1.0 - a;
    let stay = (1.0 - 2.0 * a) / p_plus;
    let r = if stay > 0.0 { vec![(0, stay), (1, a / p_plus)] } else { vec![(1, 1.0)] };
    CkSystem::new(p_plus, r, vec![(1, 1.0)])
}
