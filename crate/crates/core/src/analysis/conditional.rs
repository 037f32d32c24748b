//! Monte Carlo estimators of outward-step probabilities.
//!
//! The `t → ∞` limit is approached on a geometric ladder of conditioning
//! times `[T, 2T), [2T, 4T), …`. Finite-horizon conditional ratios drift
//! like `c / t`, so the reported value is the weighted least-squares
//! intercept of the rung values against their event-averaged `1/t`; the
//! plain last-rung value is kept alongside. Standard errors are
//! cluster-robust over paths, with every rung's cross moments kept so the
//! correlation between rungs of the same path enters the variance.

use super::{ConditionalEstimate, Method};
use crate::error::{invalid, Error, Result};
use crate::exact::to_f64;
use crate::families::{BaseDistribution, Member, ScaledFamily};
use crate::rng::{domain, RngStream};
use crate::walker::{ContinuousWalk, LatticeLevels, LatticeWalk, LevelSet, Stepper, WalkModel, Windows};
use num_rational::Rational64;
use rayon::prelude::*;
use serde::Serialize;

/// Paths per work unit; fixed so reductions do not depend on the thread count.
const CHUNK: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LimitRule {
    /// Intercept of the rung values regressed on `1/t`.
    #[default]
    Extrapolate,
    /// Value of the last rung.
    LastRung,
}

#[derive(Debug, Clone)]
pub struct LadderOptions {
    /// First conditioning time `T`; times below it are burn-in.
    pub base_horizon: u64,
    pub rungs: u32,
    pub paths: u64,
    pub seed: u64,
    /// Condition on the reflected walk instead of the plain walk.
    pub reflected: bool,
    pub limit: LimitRule,
    /// Window half-widths for continuous members; `None` uses the default rule.
    pub windows: Option<Vec<f64>>,
}

impl Default for LadderOptions {
    fn default() -> Self {
        Self {
            base_horizon: 1000,
            rungs: 3,
            paths: 100_000,
            seed: 0,
            reflected: false,
            limit: LimitRule::Extrapolate,
            windows: None,
        }
    }
}

impl LadderOptions {
    pub fn horizon(&self) -> u64 {
        self.base_horizon << self.rungs
    }

    fn validate(&self) -> Result<()> {
        if self.base_horizon == 0 || self.paths == 0 || self.rungs == 0 || self.rungs > 16 {
            return Err(invalid("ladder needs T >= 1, paths >= 1 and 1..=16 rungs"));
        }
        Ok(())
    }
}

/// Per-level totals over paths, rung by rung, with cross moments.
#[derive(Debug, Clone, PartialEq)]
struct LadderSums {
    r: usize,
    clusters: u64,
    events: Vec<u64>,
    successes: Vec<u64>,
    /// `Σ_p e_r e_s`, `Σ_p o_r o_s`, `Σ_p o_r e_s`, row-major `r × r`.
    ee: Vec<u128>,
    oo: Vec<u128>,
    oe: Vec<u128>,
    inv_t: Vec<f64>,
}

impl LadderSums {
    fn new(r: usize) -> Self {
        Self {
            r,
            clusters: 0,
            events: vec![0; r],
            successes: vec![0; r],
            ee: vec![0; r * r],
            oo: vec![0; r * r],
            oe: vec![0; r * r],
            inv_t: vec![0.0; r],
        }
    }

    fn add_path(&mut self, e: &[u64], o: &[u64], inv_t: &[f64]) {
        if e.iter().all(|&v| v == 0) {
            return;
        }
        self.clusters += 1;
        for i in 0..self.r {
            self.events[i] += e[i];
            self.successes[i] += o[i];
            self.inv_t[i] += inv_t[i];
            for j in 0..self.r {
                let k = i * self.r + j;
                self.ee[k] += e[i] as u128 * e[j] as u128;
                self.oo[k] += o[i] as u128 * o[j] as u128;
                self.oe[k] += o[i] as u128 * e[j] as u128;
            }
        }
    }

    fn merge(&mut self, other: &Self) {
        self.clusters += other.clusters;
        for i in 0..self.r {
            self.events[i] += other.events[i];
            self.successes[i] += other.successes[i];
            self.inv_t[i] += other.inv_t[i];
        }
        for k in 0..self.r * self.r {
            self.ee[k] += other.ee[k];
            self.oo[k] += other.oo[k];
            self.oe[k] += other.oe[k];
        }
    }

    fn value(&self, i: usize) -> Option<f64> {
        (self.events[i] > 0).then(|| self.successes[i] as f64 / self.events[i] as f64)
    }

    /// Cluster-robust covariance of the rung ratios `i`, `j`.
    fn cov(&self, i: usize, j: usize) -> f64 {
        let (Some(vi), Some(vj)) = (self.value(i), self.value(j)) else { return f64::NAN };
        let r = self.r;
        let s = self.oo[i * r + j] as f64 - vj * self.oe[i * r + j] as f64 - vi * self.oe[j * r + i] as f64
            + vi * vj * self.ee[i * r + j] as f64;
        let n = self.clusters as f64;
        let corr = if n > 1.0 { n / (n - 1.0) } else { 1.0 };
        s * corr / (self.events[i] as f64 * self.events[j] as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RungSummary {
    /// Conditioning times `t_lo <= t - 1 < t_hi`.
    pub t_lo: u64,
    pub t_hi: u64,
    pub value: Option<f64>,
    pub stderr: Option<f64>,
    pub events: u64,
    /// Event-averaged `1/(t-1)`.
    pub mean_inv_t: Option<f64>,
}

/// Ladder result for one level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderEstimate {
    pub estimate: ConditionalEstimate,
    pub rungs: Vec<RungSummary>,
    pub last_rung: f64,
    pub last_rung_stderr: f64,
    /// The last two populated rungs agree within 3 combined standard errors.
    pub plateau: bool,
    pub paths_with_events: u64,
}

/// Runs the ladder for every level of `levels`; entry `l` is `Err` when no event hit level `l`.
pub fn ladder<M, L>(model: &M, levels: &L, z_real: &[f64], opts: &LadderOptions) -> Result<Vec<Result<LadderEstimate>>>
where
    M: WalkModel,
    L: LevelSet<M::C>,
{
    opts.validate()?;
    let nlev = levels.len();
    let r = opts.rungs as usize;
    if z_real.len() != nlev {
        return Err(invalid("one real level per level index"));
    }
    let chunks = opts.paths.div_ceil(CHUNK);
    let partial: Vec<Vec<LadderSums>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut sums = vec![LadderSums::new(r); nlev];
            let mut stepper = Stepper::new(model, opts.reflected);
            let mut e = vec![0u64; nlev * r];
            let mut o = vec![0u64; nlev * r];
            let mut it = vec![0f64; nlev * r];
            for p in c * CHUNK..((c + 1) * CHUNK).min(opts.paths) {
                let mut rng = RngStream::new(opts.seed, p).rng(domain::WALK);
                stepper.reset();
                e.fill(0);
                o.fill(0);
                it.fill(0.0);
                for _ in 0..opts.base_horizon {
                    stepper.advance(&mut rng);
                }
                for k in 0..r {
                    let lo = opts.base_horizon << k;
                    let hi = lo << 1;
                    for s in lo..hi {
                        let (prev, cur) = stepper.advance(&mut rng);
                        if let Some(l) = levels.locate(prev) {
                            let idx = l * r + k;
                            e[idx] += 1;
                            o[idx] += u64::from(cur > prev);
                            it[idx] += 1.0 / s as f64;
                        }
                    }
                }
                for (l, sm) in sums.iter_mut().enumerate() {
                    sm.add_path(&e[l * r..(l + 1) * r], &o[l * r..(l + 1) * r], &it[l * r..(l + 1) * r]);
                }
            }
            sums
        })
        .collect();
    let mut total = vec![LadderSums::new(r); nlev];
    for part in &partial {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    Ok(total.iter().zip(z_real).map(|(s, &z)| summarize(s, z, opts)).collect())
}

fn summarize(s: &LadderSums, z: f64, opts: &LadderOptions) -> Result<LadderEstimate> {
    let r = s.r;
    let rungs: Vec<RungSummary> = (0..r)
        .map(|k| RungSummary {
            t_lo: opts.base_horizon << k,
            t_hi: opts.base_horizon << (k + 1),
            value: s.value(k),
            stderr: s.value(k).map(|_| s.cov(k, k).max(0.0).sqrt()),
            events: s.events[k],
            mean_inv_t: (s.events[k] > 0).then(|| s.inv_t[k] / s.events[k] as f64),
        })
        .collect();
    let live: Vec<usize> = (0..r).filter(|&k| s.events[k] > 0).collect();
    let Some(&last) = live.last() else {
        return Err(Error::InsufficientData(format!("no conditioning events at level {z}")));
    };
    let last_rung = s.value(last).unwrap();
    let last_se = s.cov(last, last).max(0.0).sqrt();
    let plateau = match live.len() {
        1 => false,
        n => {
            let (a, b) = (live[n - 2], live[n - 1]);
            let diff = s.value(a).unwrap() - s.value(b).unwrap();
            let var = s.cov(a, a) + s.cov(b, b) - 2.0 * s.cov(a, b);
            diff.abs() <= 3.0 * var.max(0.0).sqrt()
        }
    };
    // Rungs with a degenerate variance cannot be weighted; fall back to the last rung.
    let usable: Vec<usize> = live.iter().copied().filter(|&k| s.cov(k, k) > 0.0).collect();
    let weights: Vec<(usize, f64)> = match opts.limit {
        LimitRule::Extrapolate if usable.len() >= 2 => intercept_weights(&usable, s),
        _ => vec![(last, 1.0)],
    };
    let value: f64 = weights.iter().map(|&(k, w)| w * s.value(k).unwrap()).sum();
    let var: f64 = weights.iter().map(|&(i, wi)| weights.iter().map(|&(j, wj)| wi * wj * s.cov(i, j)).sum::<f64>()).sum();
    let events: u64 = s.events.iter().sum();
    Ok(LadderEstimate {
        estimate: ConditionalEstimate {
            value,
            stderr: var.max(0.0).sqrt(),
            numerical_error: 0.0,
            method: Method::MonteCarlo,
            z,
            t: opts.horizon(),
            samples: events,
        },
        rungs,
        last_rung,
        last_rung_stderr: last_se,
        plateau,
        paths_with_events: s.clusters,
    })
}

/// Linear weights `w` with `Σ w_k v_k` the WLS intercept of `v_k ≈ a + b u_k`.
fn intercept_weights(ks: &[usize], s: &LadderSums) -> Vec<(usize, f64)> {
    let u: Vec<f64> = ks.iter().map(|&k| s.inv_t[k] / s.events[k] as f64).collect();
    let w: Vec<f64> = ks.iter().map(|&k| 1.0 / s.cov(k, k)).collect();
    let (sw, su, suu) = u.iter().zip(&w).fold((0.0, 0.0, 0.0), |(a, b, c), (&u, &w)| (a + w, b + w * u, c + w * u * u));
    let det = sw * suu - su * su;
    ks.iter().zip(u.iter().zip(&w)).map(|(&k, (&uk, &wk))| (k, wk * (suu - su * uk) / det)).collect()
}

/// The `a = 1` total step variance `d · var(F)`; window widths use it for every member.
pub fn reference_variance(member: &Member) -> f64 {
    member.laws.first().map(|l| l.base.variance() * member.laws.len() as f64).unwrap_or(0.0)
}

/// Ladder estimates at each level of `z_grid` for a family member.
///
/// Lattice members condition on exact norm levels and report an error for
/// levels off the norm lattice; continuous members use windows.
pub fn estimate_conditional_grid(member: &Member, z_grid: &[Rational64], opts: &LadderOptions) -> Result<Vec<Result<LadderEstimate>>> {
    if z_grid.iter().any(|z| *z <= Rational64::from_integer(0)) {
        return Err(invalid("levels must be positive"));
    }
    let z_real: Vec<f64> = z_grid.iter().map(|&z| to_f64(z)).collect();
    match &member.laws.first().ok_or_else(|| invalid("empty member"))?.base {
        BaseDistribution::Lattice(_) => {
            let walk = LatticeWalk::from_member(member)?;
            let mut on = Vec::new();
            let mut idx = Vec::new();
            for (i, &z) in z_grid.iter().enumerate() {
                if let Some(n) = walk.level_units(z) {
                    idx.push(i);
                    on.push(n);
                }
            }
            let mut out: Vec<Result<LadderEstimate>> =
                z_grid.iter().map(|z| Err(Error::NoComposition(format!("{z} is off the norm lattice")))).collect();
            if !on.is_empty() {
                let levels = LatticeLevels::new(&on)?;
                let z_on: Vec<f64> = idx.iter().map(|&i| z_real[i]).collect();
                for (res, i) in ladder(&walk, &levels, &z_on, opts)?.into_iter().zip(idx) {
                    out[i] = res;
                }
            }
            Ok(out)
        }
        BaseDistribution::Continuous(_) => {
            let walk = ContinuousWalk::from_member(member)?;
            let windows = match &opts.windows {
                Some(d) => Windows::new(&z_real, d)?,
                None => Windows::with_default_delta(&z_real, reference_variance(member))?,
            };
            ladder(&walk, &windows, &z_real, opts)
        }
    }
}

/// Ladder estimate at a single level.
pub fn estimate_conditional_outward(member: &Member, z: Rational64, opts: &LadderOptions) -> Result<LadderEstimate> {
    estimate_conditional_grid(member, &[z], opts)?.pop().expect("one level")
}

/// Convenience for family-level calls.
pub fn estimate_conditional_member(
    family: &ScaledFamily,
    a: &crate::families::FamilyParameter,
    z: Rational64,
    opts: &LadderOptions,
) -> Result<LadderEstimate> {
    estimate_conditional_outward(&family.member(a)?, z, opts)
}

/// Outward fraction after the `j`-th hit of a level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HitPoint {
    pub j: u64,
    pub hits: u64,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HittingEstimate {
    pub per_j: Vec<HitPoint>,
    /// Indices averaged for the `j → ∞` proxy.
    pub tail: (u64, u64),
    pub tail_value: f64,
    pub tail_stderr: f64,
    /// The tail is short or thin: fewer hits than requested, so treat the stderr with care.
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct HittingOptions {
    pub horizon: u64,
    pub paths: u64,
    pub seed: u64,
    /// Largest hit index tracked.
    pub j_max: u64,
    /// Hit indices with fewer paths than this are excluded from the tail.
    pub min_hits: u64,
}

impl Default for HittingOptions {
    fn default() -> Self {
        Self { horizon: 10_000, paths: 10_000, seed: 0, j_max: 50, min_hits: 100 }
    }
}

/// `P{‖S_{t_j + 1}‖ = n + 1 | ‖S_{t_j}‖ = n}` where `t_j` is the `j`-th visit to level `n`.
///
/// `n` is an integer level in model units.
pub fn estimate_hitting_conditional<M>(model: &M, n: i64, opts: &HittingOptions) -> Result<HittingEstimate>
where
    M: WalkModel<C = i64>,
{
    if n < 1 || opts.j_max == 0 || opts.paths == 0 || opts.horizon == 0 {
        return Err(invalid("hitting estimate needs n >= 1 and positive horizon, paths, j_max"));
    }
    let jm = opts.j_max as usize;
    let chunks = opts.paths.div_ceil(CHUNK);
    // Per chunk: hits[j], ups[j] and, per path, the outward flags by hit index.
    let parts: Vec<(Vec<u64>, Vec<u64>, Vec<Vec<bool>>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut hits = vec![0u64; jm];
            let mut ups = vec![0u64; jm];
            let mut flags = Vec::new();
            let mut stepper = Stepper::new(model, false);
            for p in c * CHUNK..((c + 1) * CHUNK).min(opts.paths) {
                let mut rng = RngStream::new(opts.seed, p).rng(domain::WALK);
                stepper.reset();
                let mut f = Vec::new();
                for _ in 0..opts.horizon {
                    let (prev, cur) = stepper.advance(&mut rng);
                    if prev == n {
                        let j = f.len();
                        let up = cur > prev;
                        hits[j] += 1;
                        ups[j] += u64::from(up);
                        f.push(up);
                        if f.len() == jm {
                            break;
                        }
                    }
                }
                flags.push(f);
            }
            (hits, ups, flags)
        })
        .collect();
    let mut hits = vec![0u64; jm];
    let mut ups = vec![0u64; jm];
    for (h, u, _) in &parts {
        for j in 0..jm {
            hits[j] += h[j];
            ups[j] += u[j];
        }
    }
    let per_j: Vec<HitPoint> = (0..jm)
        .filter(|&j| hits[j] > 0)
        .map(|j| {
            let v = ups[j] as f64 / hits[j] as f64;
            HitPoint { j: j as u64 + 1, hits: hits[j], value: v, stderr: (v * (1.0 - v) / hits[j] as f64).sqrt() }
        })
        .collect();
    if per_j.is_empty() {
        return Err(Error::InsufficientData(format!("level {n} was never hit")));
    }
    let deep = (0..jm).rev().find(|&j| hits[j] >= opts.min_hits);
    let (hi, flagged) = match deep {
        Some(j) => (j, j + 1 < jm),
        None => (per_j.last().unwrap().j as usize - 1, true),
    };
    let lo = hi / 2;
    let mut sums = crate::stats::RatioSums::default();
    for (_, _, flags) in &parts {
        for f in flags {
            let seg = &f[lo.min(f.len())..(hi + 1).min(f.len())];
            sums.add_cluster(seg.len() as u64, seg.iter().filter(|&&b| b).count() as u64);
        }
    }
    let tail_value = sums.ratio().unwrap_or(f64::NAN);
    let tail_stderr = sums.stderr().unwrap_or(f64::NAN);
    Ok(HittingEstimate {
        per_j,
        tail: (lo as u64 + 1, hi as u64 + 1),
        tail_value,
        tail_stderr,
        flagged: flagged || sums.events < 10 * opts.min_hits,
    })
}

/// Iterates conditioning events of a single path; used for small diagnostics and tests.
pub fn path_events<M: WalkModel>(model: &M, reflected: bool, horizon: u64, seed: u64, path: u64) -> Vec<(u64, f64, f64)> {
    let mut rng = RngStream::new(seed, path).rng(domain::WALK);
    let mut stepper = Stepper::new(model, reflected);
    (1..=horizon)
        .map(|t| {
            let (p, c) = stepper.advance(&mut rng);
            (t - 1, model.real(p), model.real(c))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{ContinuousLaw, FamilyParameter, LatticeLaw};
    use crate::walker::JointWalk;

    fn r(p: i64, q: i64) -> Rational64 {
        Rational64::new(p, q)
    }

    fn lattice(v: i64, a: Vec<Rational64>) -> Member {
        let fam = ScaledFamily::new(BaseDistribution::Lattice(LatticeLaw::two_point(r(v, 1)).unwrap()), a.len()).unwrap();
        fam.member(&FamilyParameter::exact(a).unwrap()).unwrap()
    }

    #[test]
    fn simple_walk_is_fair() {
        let m = lattice(1, vec![r(1, 1)]);
        let o = LadderOptions { base_horizon: 200, paths: 4000, limit: LimitRule::LastRung, ..Default::default() };
        let e = estimate_conditional_outward(&m, r(5, 1), &o).unwrap();
        assert!((e.estimate.value - 0.5).abs() < 4.0 * e.estimate.stderr, "{e:?}");
        assert_eq!(e.estimate.t, 1600);
    }

    #[test]
    fn continuous_far_level_is_fair() {
        let fam = ScaledFamily::new(BaseDistribution::Continuous(ContinuousLaw::Uniform { c: 1.0 }), 1).unwrap();
        let m = fam.member(&FamilyParameter::simple(1)).unwrap();
        let o = LadderOptions { base_horizon: 500, paths: 2000, ..Default::default() };
        let e = estimate_conditional_outward(&m, r(10, 1), &o).unwrap();
        assert!((e.estimate.value - 0.5).abs() < 4.0 * e.estimate.stderr + 0.01, "{e:?}");
    }

    #[test]
    fn off_lattice_and_unreached_levels() {
        let m = lattice(2, vec![r(1, 1), r(1, 1)]);
        let o = LadderOptions { base_horizon: 50, paths: 200, ..Default::default() };
        let out = estimate_conditional_grid(&m, &[r(3, 1), r(6, 1), r(8, 1)], &o).unwrap();
        assert!(matches!(out[0], Err(Error::NoComposition(_))));
        assert!(matches!(out[1], Err(Error::InsufficientData(_))));
        assert!(out[2].is_ok());
    }

    #[test]
    fn deterministic_given_seed() {
        let m = lattice(2, vec![r(3, 2), r(1, 2)]);
        let o = LadderOptions { base_horizon: 40, paths: 3000, seed: 9, ..Default::default() };
        let a = estimate_conditional_outward(&m, r(6, 1), &o).unwrap();
        let b = estimate_conditional_outward(&m, r(6, 1), &o).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn intercept_weights_sum_to_one() {
        let mut s = LadderSums::new(3);
        for p in 0..50u64 {
            let e = [1 + p % 3, 2 + p % 2, 3];
            let o = [p % 2, 1, 1 + p % 2];
            s.add_path(&e, &o, &[e[0] as f64 / 10.0, e[1] as f64 / 20.0, e[2] as f64 / 40.0]);
        }
        let w = intercept_weights(&[0, 1, 2], &s);
        let total: f64 = w.iter().map(|x| x.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let slope: f64 = w.iter().map(|&(k, x)| x * s.inv_t[k] / s.events[k] as f64).sum();
        assert!(slope.abs() < 1e-12);
    }

    #[test]
    fn hitting_on_simple_walk() {
        let m = lattice(1, vec![r(1, 1)]);
        let w = LatticeWalk::from_member(&m).unwrap();
        let o = HittingOptions { horizon: 4000, paths: 2000, j_max: 20, min_hits: 50, seed: 3 };
        let h = estimate_hitting_conditional(&w, 3, &o).unwrap();
        assert!((h.tail_value - 0.5).abs() < 4.0 * h.tail_stderr);
        assert!(h.per_j.iter().all(|p| (p.value - 0.5).abs() < 5.0 * p.stderr + 1e-9));
    }

    #[test]
    fn sparse_hits_are_flagged() {
        let f = crate::families::make_symmetric_family(&[0.25, 0.25]).unwrap();
        let w = JointWalk::symmetric(&f).unwrap();
        let o = HittingOptions { horizon: 200, paths: 50, j_max: 40, min_hits: 100, seed: 1 };
        let h = estimate_hitting_conditional(&w, 6, &o).unwrap();
        assert!(h.flagged);
    }
}
