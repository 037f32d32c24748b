//! Multiclass workload queue with positive and negative batch arrivals.
//!
//! Every arrival carries one customer batch per class. A positive batch of
//! size `B` adds `B`; a negative batch of size `B̃` removes `B̃` when
//! `W >= B̃` and otherwise leaves `B̃ - W`. There is no service mechanism.
//! In walk-consistent mode the signed sizes are drawn from the walk's own
//! increment stream, so `W_j = |W_{j-1} + x_j|` holds draw for draw.

use crate::error::{invalid, Error, Result};
use crate::families::{split_signed, ContinuousLaw, BaseDistribution, Member};
use crate::exact::{gcd_all, integer_multiple};
use crate::rng::{domain, PathRng, RngStream};
use crate::sampler::DiscreteSampler;
use crate::walker::{fmt_real, Coord, LatticeWalk, WalkModel};
use num_rational::Rational64;
use rayon::prelude::*;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival<C> {
    pub sign: Sign,
    pub size: C,
}

/// One simultaneous arrival of all classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalBatch<C> {
    pub classes: Vec<Arrival<C>>,
}

impl<C: Coord> ArrivalBatch<C> {
    /// Splits signed increments: `x >= 0` is a positive batch of size `x`.
    pub fn from_increments(x: &[C]) -> Self {
        Self {
            classes: x
                .iter()
                .map(|&v| {
                    if v.is_negative() {
                        Arrival { sign: Sign::Negative, size: v.abs() }
                    } else {
                        Arrival { sign: Sign::Positive, size: v }
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueState<C> {
    pub workloads: Vec<C>,
    pub arrivals: u64,
    pub clock: f64,
}

impl<C: Coord> QueueState<C> {
    pub fn empty(d: usize) -> Self {
        Self { workloads: vec![C::default(); d], arrivals: 0, clock: 0.0 }
    }
}

#[inline]
fn update_one<C: Coord>(w: C, a: Arrival<C>) -> C {
    match a.sign {
        Sign::Positive => w.add(a.size),
        Sign::Negative if w >= a.size => w.sub(a.size),
        Sign::Negative => a.size.sub(w),
    }
}

/// Applies one batch. Clock is left untouched.
pub fn arrival_update<C: Coord>(state: &QueueState<C>, batch: &ArrivalBatch<C>) -> Result<QueueState<C>> {
    if batch.classes.len() != state.workloads.len() {
        return Err(Error::ContractViolation("batch and state dimensions differ".into()));
    }
    for a in &batch.classes {
        if a.size.is_negative() {
            return Err(Error::ContractViolation(format!("negative batch size {:?}", a.size)));
        }
        if a.sign == Sign::Negative && !(a.size > C::default()) {
            return Err(Error::ContractViolation("negative arrivals need a strictly positive size".into()));
        }
    }
    if let Some(w) = state.workloads.iter().find(|w| w.is_negative()) {
        return Err(Error::ContractViolation(format!("negative workload {w:?}")));
    }
    Ok(QueueState {
        workloads: state.workloads.iter().zip(&batch.classes).map(|(&w, &a)| update_one(w, a)).collect(),
        arrivals: state.arrivals + 1,
        clock: state.clock,
    })
}

/// Sign and size distribution of the arrivals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QueueMode {
    /// Sizes and signs come from the walk increment itself.
    #[default]
    WalkConsistent,
    /// Signs are fair coins; sizes from the sign-conditioned laws.
    Strict,
}

/// Fair-sign source for lattice classes, in walk units.
#[derive(Debug, Clone)]
pub struct StrictLattice {
    b: Vec<DiscreteSampler>,
    bt: Vec<DiscreteSampler>,
}

impl StrictLattice {
    pub fn new(member: &Member, unit: Rational64) -> Result<Self> {
        let mut b = Vec::new();
        let mut bt = Vec::new();
        for (i, law) in member.laws.iter().enumerate() {
            let s = split_signed(law)?;
            check_strict(i, s.p_plus, s.mean_b(), s.mean_bt())?;
            let conv = |pmf: &[(Rational64, f64)]| -> Result<DiscreteSampler> {
                let ints: Vec<(i64, f64)> = pmf
                    .iter()
                    .map(|&(v, p)| integer_multiple(v, unit).map(|k| (k, p)).ok_or_else(|| invalid("unit must divide sizes")))
                    .collect::<Result<_>>()?;
                DiscreteSampler::new(&ints)
            };
            b.push(conv(&s.b_pmf)?);
            bt.push(conv(&s.bt_pmf)?);
        }
        Ok(Self { b, bt })
    }
}

fn check_strict(i: usize, p_plus: f64, mean_b: f64, mean_bt: f64) -> Result<()> {
    if (p_plus - 0.5).abs() > 1e-12 {
        return Err(Error::Config(format!("strict mode needs P(x >= 0) = 1/2; class {} has {p_plus}", i + 1)));
    }
    if (mean_b - mean_bt).abs() > 1e-12 * mean_b.abs().max(1.0) {
        return Err(Error::Config(format!("strict mode needs E B = E B~; class {} has {mean_b} vs {mean_bt}", i + 1)));
    }
    Ok(())
}

impl WalkModel for StrictLattice {
    type C = i64;
    fn dim(&self) -> usize {
        self.b.len()
    }
    #[inline]
    fn increment(&self, _pos: &[i64], rng: &mut PathRng, out: &mut [i64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = if rng.bits(1) == 1 { self.b[i].sample(rng) } else { -self.bt[i].sample(rng) };
        }
    }
    fn unit(&self) -> f64 {
        1.0
    }
}

/// Fair-sign source for continuous symmetric classes.
#[derive(Debug, Clone)]
pub struct StrictContinuous {
    laws: Vec<(ContinuousLaw, f64)>,
}

impl StrictContinuous {
    pub fn new(member: &Member) -> Result<Self> {
        let laws = member
            .laws
            .iter()
            .map(|l| match &l.base {
                BaseDistribution::Continuous(c) => Ok((*c, l.scale.value)),
                BaseDistribution::Lattice(_) => Err(Error::Unsupported("expected a continuous base".into())),
            })
            .collect::<Result<_>>()?;
        Ok(Self { laws })
    }
}

impl WalkModel for StrictContinuous {
    type C = f64;
    fn dim(&self) -> usize {
        self.laws.len()
    }
    #[inline]
    fn increment(&self, _pos: &[f64], rng: &mut PathRng, out: &mut [f64]) {
        for (o, (law, s)) in out.iter_mut().zip(&self.laws) {
            let u = rng.uniform_open();
            // The built-in continuous laws are symmetric, so |x| has quantile F^{-1}((1+u)/2).
            let size = s * law.quantile(0.5 + 0.5 * u).abs();
            *o = if rng.bits(1) == 1 { size } else { -size };
        }
    }
    fn unit(&self) -> f64 {
        1.0
    }
}

/// Workload lattice of each class, `gcd(B^(i) ∪ B̃^(i))`, in walk units.
pub fn class_gcds(member: &Member, walk: &LatticeWalk) -> Result<Vec<i64>> {
    member
        .laws
        .iter()
        .map(|l| {
            let atoms = l.atoms().ok_or_else(|| Error::Unsupported("lattice only".into()))?;
            let g = gcd_all(atoms.iter().map(|a| a.0)).ok_or(Error::UndefinedGcd)?;
            integer_multiple(g, walk.exact_unit()).ok_or_else(|| invalid("unit must divide class gcd"))
        })
        .collect()
}

/// Drives one path for `arrivals` batches, calling `visit(j, state)` after each.
pub fn run_queue_path<M, F>(source: &M, arrivals: u64, seed: u64, path: u64, mut visit: F)
where
    M: WalkModel,
    F: FnMut(&QueueState<M::C>),
{
    let stream = RngStream::new(seed, path);
    let mut rng = stream.rng(domain::WALK);
    let mut clock_rng = stream.rng(domain::CLOCK);
    let d = source.dim();
    let mut state = QueueState::<M::C>::empty(d);
    let mut inc = vec![M::C::default(); d];
    for _ in 0..arrivals {
        source.increment(&state.workloads, &mut rng, &mut inc);
        for (w, &x) in state.workloads.iter_mut().zip(&inc) {
            let a = if x.is_negative() { Arrival { sign: Sign::Negative, size: x.abs() } } else { Arrival { sign: Sign::Positive, size: x } };
            *w = update_one(*w, a);
        }
        state.arrivals += 1;
        state.clock += clock_rng.exp1();
        visit(&state);
    }
}

/// Per-path trajectories at every arrival epoch `j = 1..=arrivals`.
pub fn simulate_queue<M: WalkModel>(source: &M, arrivals: u64, paths: u64, seed: u64) -> Result<Vec<Vec<QueueState<M::C>>>> {
    if arrivals == 0 || paths == 0 {
        return Err(invalid("horizon and path count must be at least 1"));
    }
    Ok((0..paths)
        .into_par_iter()
        .map(|p| {
            let mut traj = Vec::with_capacity(arrivals as usize);
            run_queue_path(source, arrivals, seed, p, |s| traj.push(s.clone()));
            traj
        })
        .collect())
}

/// Workloads of each path after exactly `j` arrivals.
pub fn workloads_at<M: WalkModel>(source: &M, j: u64, paths: u64, seed: u64) -> Vec<Vec<M::C>> {
    (0..paths)
        .into_par_iter()
        .map(|p| {
            let mut last = Vec::new();
            run_queue_path(source, j, seed, p, |s| {
                if s.arrivals == j {
                    last = s.workloads.clone();
                }
            });
            last
        })
        .collect()
}

/// Writes `path,j,clock,W_1..W_d` rows.
pub fn write_queue_csv<M: WalkModel, W: Write>(source: &M, unit: f64, arrivals: u64, paths: u64, seed: u64, out: W) -> Result<()> {
    let d = source.dim();
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header = vec!["path".to_string(), "j".to_string(), "clock".to_string()];
    header.extend((1..=d).map(|i| format!("W_{i}")));
    w.write_record(&header)?;
    for p in 0..paths {
        let mut rows = Vec::new();
        run_queue_path(source, arrivals, seed, p, |s| {
            let mut rec = vec![p.to_string(), s.arrivals.to_string(), fmt_real(s.clock)];
            rec.extend(s.workloads.iter().map(|c| fmt_real(c.to_f64() * unit)));
            rows.push(rec);
        });
        for r in rows {
            w.write_record(&r)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(w: i64) -> QueueState<i64> {
        QueueState { workloads: vec![w], arrivals: 0, clock: 0.0 }
    }

    fn batch(sign: Sign, size: i64) -> ArrivalBatch<i64> {
        ArrivalBatch { classes: vec![Arrival { sign, size }] }
    }

    #[test]
    fn update_cases() {
        assert_eq!(arrival_update(&st(5), &batch(Sign::Negative, 3)).unwrap().workloads, vec![2]);
        assert_eq!(arrival_update(&st(2), &batch(Sign::Negative, 5)).unwrap().workloads, vec![3]);
        assert_eq!(arrival_update(&st(2), &batch(Sign::Positive, 4)).unwrap().workloads, vec![6]);
        assert_eq!(arrival_update(&st(3), &batch(Sign::Negative, 3)).unwrap().workloads, vec![0]);
    }

    #[test]
    fn bad_batches_rejected() {
        assert!(matches!(arrival_update(&st(2), &batch(Sign::Positive, -1)), Err(Error::ContractViolation(_))));
        assert!(matches!(arrival_update(&st(2), &batch(Sign::Negative, 0)), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn increments_split_by_sign() {
        let b = ArrivalBatch::from_increments(&[-3i64, 0, 2]);
        assert_eq!(b.classes[0], Arrival { sign: Sign::Negative, size: 3 });
        assert_eq!(b.classes[1], Arrival { sign: Sign::Positive, size: 0 });
        assert_eq!(b.classes[2], Arrival { sign: Sign::Positive, size: 2 });
    }
}
