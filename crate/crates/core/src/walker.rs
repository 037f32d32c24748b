//! Plain and reflected walks, level hitting records and path dumps.
//!
//! Lattice walks run on `i64` coordinates measured in a common unit `u`
//! (the rational gcd of every coordinate step), so norms are exact integers.
//! Continuous walks run on `f64`.

use crate::error::{invalid, Error, Result};
use crate::exact::{gcd_all, integer_multiple, to_f64};
use crate::families::{BaseDistribution, ContinuousLaw, KlebanerWalk, Member, SymmetricFamily};
use crate::rng::{domain, PathRng, RngStream};
use crate::sampler::DiscreteSampler;
use num_rational::Rational64;
use rayon::prelude::*;
use std::io::Write;

/// Coordinate arithmetic shared by lattice and continuous walks.
pub trait Coord: Copy + Send + Sync + PartialOrd + Default + std::fmt::Debug + 'static {
    fn add(self, other: Self) -> Self;
    fn sub(self, other: Self) -> Self;
    fn abs(self) -> Self;
    fn is_negative(self) -> bool;
    fn to_f64(self) -> f64;
}

impl Coord for i64 {
    #[inline]
    fn add(self, o: Self) -> Self {
        self + o
    }
    #[inline]
    fn sub(self, o: Self) -> Self {
        self - o
    }
    #[inline]
    fn abs(self) -> Self {
        i64::abs(self)
    }
    #[inline]
    fn is_negative(self) -> bool {
        self < 0
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Coord for f64 {
    #[inline]
    fn add(self, o: Self) -> Self {
        self + o
    }
    #[inline]
    fn sub(self, o: Self) -> Self {
        self - o
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn is_negative(self) -> bool {
        self < 0.0
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

/// One-step dynamics. `increment` may read the current position.
pub trait WalkModel: Sync {
    type C: Coord;
    fn dim(&self) -> usize;
    fn increment(&self, pos: &[Self::C], rng: &mut PathRng, out: &mut [Self::C]);
    /// Real length of one coordinate unit.
    fn unit(&self) -> f64;
    /// Real value of a coordinate.
    fn real(&self, c: Self::C) -> f64 {
        c.to_f64() * self.unit()
    }
}

/// Product lattice walk built from a family member.
#[derive(Debug, Clone)]
pub struct LatticeWalk {
    unit: Rational64,
    samplers: Vec<DiscreteSampler>,
    /// Step gcd of each coordinate, in units of `unit`.
    coord_gcd: Vec<i64>,
}

impl LatticeWalk {
    pub fn from_member(member: &Member) -> Result<Self> {
        let atoms: Vec<Vec<(Rational64, f64)>> = member
            .laws
            .iter()
            .map(|l| l.atoms().ok_or_else(|| Error::Unsupported("lattice walk needs a lattice base".into())))
            .collect::<Result<_>>()?;
        let unit = gcd_all(atoms.iter().flatten().map(|a| a.0)).ok_or_else(|| invalid("degenerate steps"))?;
        let mut samplers = Vec::with_capacity(atoms.len());
        let mut coord_gcd = Vec::with_capacity(atoms.len());
        for coord in &atoms {
            let ints: Vec<(i64, f64)> = coord
                .iter()
                .map(|&(v, p)| (integer_multiple(v, unit).expect("unit divides every step"), p))
                .collect();
            coord_gcd.push(ints.iter().fold(0i64, |g, a| num_integer::gcd(g, a.0)));
            samplers.push(DiscreteSampler::new(&ints)?);
        }
        Ok(Self { unit, samplers, coord_gcd })
    }

    pub fn exact_unit(&self) -> Rational64 {
        self.unit
    }

    /// Norm level `z` in units, if `z` is a multiple of the unit.
    pub fn level_units(&self, z: Rational64) -> Option<i64> {
        integer_multiple(z, self.unit)
    }

    /// Lattice closure of a state.
    pub fn check_state(&self, state: &WalkState<i64>) -> bool {
        state.position.iter().zip(&self.coord_gcd).all(|(x, g)| x % g == 0)
    }
}

impl WalkModel for LatticeWalk {
    type C = i64;
    fn dim(&self) -> usize {
        self.samplers.len()
    }
    #[inline]
    fn increment(&self, _pos: &[i64], rng: &mut PathRng, out: &mut [i64]) {
        for (o, s) in out.iter_mut().zip(&self.samplers) {
            *o = s.sample(rng);
        }
    }
    fn unit(&self) -> f64 {
        to_f64(self.unit)
    }
}

/// Nearest-neighbour walk: exactly one coordinate moves by ±1 per step.
#[derive(Debug, Clone)]
pub struct JointWalk {
    dim: usize,
    sampler: DiscreteSampler,
    moves: Vec<(usize, i64)>,
}

impl JointWalk {
    pub fn symmetric(family: &SymmetricFamily) -> Result<Self> {
        let moves = family.moves();
        let atoms: Vec<(i64, f64)> = moves.iter().enumerate().map(|(k, m)| (k as i64, m.2)).collect();
        Ok(Self {
            dim: family.dim(),
            sampler: DiscreteSampler::new(&atoms)?,
            moves: moves.iter().map(|m| (m.0, m.1)).collect(),
        })
    }
}

impl WalkModel for JointWalk {
    type C = i64;
    fn dim(&self) -> usize {
        self.dim
    }
    #[inline]
    fn increment(&self, _pos: &[i64], rng: &mut PathRng, out: &mut [i64]) {
        out.fill(0);
        let (i, s) = self.moves[self.sampler.sample(rng) as usize];
        out[i] = s;
    }
    fn unit(&self) -> f64 {
        1.0
    }
}

/// Product walk with continuous coordinates.
#[derive(Debug, Clone)]
pub struct ContinuousWalk {
    laws: Vec<(ContinuousLaw, f64)>,
}

impl ContinuousWalk {
    pub fn from_member(member: &Member) -> Result<Self> {
        let laws = member
            .laws
            .iter()
            .map(|l| match &l.base {
                BaseDistribution::Continuous(c) => Ok((*c, l.scale.value)),
                BaseDistribution::Lattice(_) => Err(Error::Unsupported("continuous walk needs a continuous base".into())),
            })
            .collect::<Result<_>>()?;
        Ok(Self { laws })
    }

    #[inline]
    fn draw(law: &ContinuousLaw, scale: f64, u: f64) -> f64 {
        match *law {
            ContinuousLaw::Uniform { c } => scale * c * (2.0 * u - 1.0),
            _ => scale * law.quantile(u),
        }
    }
}

impl WalkModel for ContinuousWalk {
    type C = f64;
    fn dim(&self) -> usize {
        self.laws.len()
    }
    #[inline]
    fn increment(&self, _pos: &[f64], rng: &mut PathRng, out: &mut [f64]) {
        let mut k = 0;
        while k + 1 < out.len() {
            let (u, v) = rng.uniform_pair32();
            out[k] = Self::draw(&self.laws[k].0, self.laws[k].1, u);
            out[k + 1] = Self::draw(&self.laws[k + 1].0, self.laws[k + 1].1, v);
            k += 2;
        }
        if k < out.len() {
            out[k] = Self::draw(&self.laws[k].0, self.laws[k].1, rng.uniform_open());
        }
    }
    fn unit(&self) -> f64 {
        1.0
    }
}

/// The state-dependent walk on `|S|`; positions stay nonnegative.
#[derive(Debug, Clone)]
pub struct KlebanerModel {
    thresholds: Vec<u64>,
}

impl KlebanerModel {
    /// Precomputes up-probabilities for levels `0..=n_max`.
    pub fn new(walk: &KlebanerWalk, n_max: u64) -> Result<Self> {
        let scale = (1u64 << 53) as f64;
        let thresholds = walk.table(n_max)?.into_iter().map(|p| (p * scale).round() as u64).collect();
        Ok(Self { thresholds })
    }
}

impl WalkModel for KlebanerModel {
    type C = i64;
    fn dim(&self) -> usize {
        1
    }
    #[inline]
    fn increment(&self, pos: &[i64], rng: &mut PathRng, out: &mut [i64]) {
        let n = pos[0] as usize;
        let th = self.thresholds[n.min(self.thresholds.len() - 1)];
        out[0] = if (rng.next_u64() >> 11) < th { 1 } else { -1 };
    }
    fn unit(&self) -> f64 {
        1.0
    }
}

/// Position and time.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkState<C> {
    pub position: Vec<C>,
    pub time: u64,
}

impl<C: Coord> WalkState<C> {
    pub fn origin(d: usize) -> Self {
        Self { position: vec![C::default(); d], time: 0 }
    }

    pub fn norm(&self) -> C {
        norm(&self.position)
    }
}

#[inline]
pub fn norm<C: Coord>(x: &[C]) -> C {
    x.iter().fold(C::default(), |acc, c| acc.add(c.abs()))
}

/// `S_t = S_{t-1} + x_t`.
pub fn step<M: WalkModel>(model: &M, state: &WalkState<M::C>, rng: &mut PathRng) -> WalkState<M::C> {
    let mut inc = vec![M::C::default(); model.dim()];
    model.increment(&state.position, rng, &mut inc);
    WalkState {
        position: state.position.iter().zip(&inc).map(|(x, dx)| x.add(*dx)).collect(),
        time: state.time + 1,
    }
}

/// `S_t = |S_{t-1} + x_t|` coordinate-wise.
pub fn reflect_step<M: WalkModel>(model: &M, state: &WalkState<M::C>, rng: &mut PathRng) -> Result<WalkState<M::C>> {
    if let Some(x) = state.position.iter().find(|x| x.is_negative()) {
        return Err(Error::ContractViolation(format!("reflected walk coordinate {x:?} is negative")));
    }
    let mut inc = vec![M::C::default(); model.dim()];
    model.increment(&state.position, rng, &mut inc);
    Ok(WalkState {
        position: state.position.iter().zip(&inc).map(|(x, dx)| x.add(*dx).abs()).collect(),
        time: state.time + 1,
    })
}

/// Incremental path driver holding the position and its norm.
pub struct Stepper<'m, M: WalkModel> {
    model: &'m M,
    reflected: bool,
    pos: Vec<M::C>,
    inc: Vec<M::C>,
    norm: M::C,
}

impl<'m, M: WalkModel> Stepper<'m, M> {
    pub fn new(model: &'m M, reflected: bool) -> Self {
        let d = model.dim();
        Self { model, reflected, pos: vec![M::C::default(); d], inc: vec![M::C::default(); d], norm: M::C::default() }
    }

    /// Back to the origin.
    pub fn reset(&mut self) {
        self.pos.fill(M::C::default());
        self.norm = M::C::default();
    }

    /// One step; returns `(‖S_{t-1}‖, ‖S_t‖)`.
    #[inline]
    pub fn advance(&mut self, rng: &mut PathRng) -> (M::C, M::C) {
        self.model.increment(&self.pos, rng, &mut self.inc);
        let prev = self.norm;
        let mut acc = M::C::default();
        for (x, dx) in self.pos.iter_mut().zip(&self.inc) {
            let y = x.add(*dx);
            *x = if self.reflected { y.abs() } else { y };
            acc = acc.add(x.abs());
        }
        self.norm = acc;
        (prev, acc)
    }

    pub fn position(&self) -> &[M::C] {
        &self.pos
    }
}

/// Runs one path for `horizon` steps, calling `visit(t, ‖S_{t-1}‖, ‖S_t‖, S_t)`.
#[inline]
pub fn run_path<M, F>(stepper: &mut Stepper<'_, M>, horizon: u64, rng: &mut PathRng, mut visit: F)
where
    M: WalkModel,
    F: FnMut(u64, M::C, M::C, &[M::C]),
{
    stepper.reset();
    for t in 1..=horizon {
        let (prev, cur) = stepper.advance(rng);
        visit(t, prev, cur, &stepper.pos);
    }
}

/// Maps a norm to a level index.
pub trait LevelSet<C>: Sync {
    fn locate(&self, norm: C) -> Option<usize>;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Exact integer levels.
#[derive(Debug, Clone)]
pub struct LatticeLevels {
    levels: Vec<i64>,
    table: Vec<u16>,
}

impl LatticeLevels {
    pub fn new(levels: &[i64]) -> Result<Self> {
        if levels.iter().any(|&n| n <= 0) {
            return Err(invalid("lattice levels must be positive"));
        }
        let max = levels.iter().copied().max().unwrap_or(0) as usize;
        let mut table = vec![u16::MAX; max + 1];
        for (i, &n) in levels.iter().enumerate() {
            table[n as usize] = i as u16;
        }
        Ok(Self { levels: levels.to_vec(), table })
    }

    pub fn levels(&self) -> &[i64] {
        &self.levels
    }
}

impl LevelSet<i64> for LatticeLevels {
    #[inline]
    fn locate(&self, norm: i64) -> Option<usize> {
        match self.table.get(norm as usize) {
            Some(&i) if i != u16::MAX => Some(i as usize),
            _ => None,
        }
    }
    fn len(&self) -> usize {
        self.levels.len()
    }
}

/// Disjoint windows `[z - δ, z + δ]` for continuous norms.
#[derive(Debug, Clone)]
pub struct Windows {
    centers: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    order: Vec<usize>,
}

impl Windows {
    /// Default half-width `max(0.01 z, 0.05 sqrt(var))`.
    pub fn default_delta(z: f64, var: f64) -> f64 {
        (0.01 * z).max(0.05 * var.sqrt())
    }

    pub fn new(centers: &[f64], deltas: &[f64]) -> Result<Self> {
        if centers.len() != deltas.len() {
            return Err(invalid("one half-width per window"));
        }
        for (&z, &d) in centers.iter().zip(deltas) {
            if !(z > d && d > 0.0) {
                return Err(invalid(format!("window needs z > delta > 0, got z={z}, delta={d}")));
            }
        }
        let mut order: Vec<usize> = (0..centers.len()).collect();
        order.sort_by(|&a, &b| centers[a].total_cmp(&centers[b]));
        let lo: Vec<f64> = order.iter().map(|&i| centers[i] - deltas[i]).collect();
        let hi: Vec<f64> = order.iter().map(|&i| centers[i] + deltas[i]).collect();
        if lo.iter().skip(1).zip(&hi).any(|(l, h)| l <= h) {
            return Err(invalid("windows overlap"));
        }
        Ok(Self { centers: centers.to_vec(), lo, hi, order })
    }

    pub fn with_default_delta(centers: &[f64], var: f64) -> Result<Self> {
        let d: Vec<f64> = centers.iter().map(|&z| Self::default_delta(z, var)).collect();
        Self::new(centers, &d)
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn half_width(&self, i: usize) -> f64 {
        let k = self.order.iter().position(|&j| j == i).expect("index in range");
        0.5 * (self.hi[k] - self.lo[k])
    }
}

impl LevelSet<f64> for Windows {
    #[inline]
    fn locate(&self, norm: f64) -> Option<usize> {
        let k = self.hi.partition_point(|&h| h < norm);
        (k < self.lo.len() && self.lo[k] <= norm).then(|| self.order[k])
    }
    fn len(&self) -> usize {
        self.centers.len()
    }
}

/// Hits of one level by one path.
#[derive(Debug, Clone, PartialEq)]
pub struct HittingRecord {
    pub path: u64,
    pub level: usize,
    /// Times `t` with the norm at the level and `t < horizon`.
    pub times: Vec<u64>,
    /// Whether `‖S_{t+1}‖ > ‖S_t‖` after each hit.
    pub outward: Vec<bool>,
}

/// Records level hits of every path; paths without hits contribute empty records.
pub fn record_hittings<M, L>(model: &M, levels: &L, horizon: u64, paths: u64, seed: u64) -> Result<Vec<HittingRecord>>
where
    M: WalkModel,
    L: LevelSet<M::C>,
{
    if horizon == 0 || paths == 0 {
        return Err(invalid("horizon and path count must be at least 1"));
    }
    let nlev = levels.len();
    let out: Vec<Vec<HittingRecord>> = (0..paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = RngStream::new(seed, p).rng(domain::WALK);
            let mut stepper = Stepper::new(model, false);
            let mut recs: Vec<HittingRecord> =
                (0..nlev).map(|l| HittingRecord { path: p, level: l, times: vec![], outward: vec![] }).collect();
            run_path(&mut stepper, horizon, &mut rng, |t, prev, cur, _| {
                if let Some(l) = levels.locate(prev) {
                    recs[l].times.push(t - 1);
                    recs[l].outward.push(cur > prev);
                }
            });
            recs
        })
        .collect();
    Ok(out.into_iter().flatten().collect())
}

/// Writes `path,t,coord_1..coord_d,norm` rows for `paths` paths, `t = 0..=horizon`.
pub fn write_paths_csv<M: WalkModel, W: Write>(
    model: &M,
    reflected: bool,
    horizon: u64,
    paths: u64,
    seed: u64,
    out: W,
) -> Result<()> {
    let d = model.dim();
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header = vec!["path".to_string(), "t".to_string()];
    header.extend((1..=d).map(|i| format!("coord_{i}")));
    header.push("norm".into());
    w.write_record(&header)?;
    let mut stepper = Stepper::new(model, reflected);
    for p in 0..paths {
        let mut rng = RngStream::new(seed, p).rng(domain::WALK);
        let mut row = |t: u64, pos: &[M::C], nrm: M::C| -> Result<()> {
            let mut rec = vec![p.to_string(), t.to_string()];
            rec.extend(pos.iter().map(|&c| fmt_real(model.real(c))));
            rec.push(fmt_real(model.real(nrm)));
            w.write_record(&rec).map_err(Error::from)
        };
        row(0, &vec![M::C::default(); d], M::C::default())?;
        let mut err = Ok(());
        run_path(&mut stepper, horizon, &mut rng, |t, _, nrm, pos| {
            if err.is_ok() {
                err = row(t, pos, nrm);
            }
        });
        err?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn fmt_real(x: f64) -> String {
    let s = format!("{x}");
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{make_symmetric_family, FamilyParameter, LatticeLaw, ScaledFamily};

    fn r(p: i64, q: i64) -> Rational64 {
        Rational64::new(p, q)
    }

    fn pm2(a: Vec<Rational64>) -> LatticeWalk {
        let fam = ScaledFamily::new(BaseDistribution::Lattice(LatticeLaw::two_point(r(2, 1)).unwrap()), a.len()).unwrap();
        LatticeWalk::from_member(&fam.member(&FamilyParameter::exact(a).unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn scaled_supports() {
        let w = pm2(vec![r(3, 2), r(1, 2)]);
        assert_eq!(w.exact_unit(), r(1, 1));
        let mut rng = RngStream::new(5, 0).rng(domain::WALK);
        let mut seen = std::collections::BTreeSet::new();
        let mut s = WalkState::origin(2);
        for _ in 0..200 {
            let n = step(&w, &s, &mut rng);
            seen.insert((n.position[0] - s.position[0], n.position[1] - s.position[1]));
            assert!(w.check_state(&n));
            s = n;
        }
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), vec![(-3, -1), (-3, 1), (3, -1), (3, 1)]);
    }

    #[test]
    fn reflect_rules() {
        struct Fixed(i64);
        impl WalkModel for Fixed {
            type C = i64;
            fn dim(&self) -> usize {
                1
            }
            fn increment(&self, _: &[i64], _: &mut PathRng, out: &mut [i64]) {
                out[0] = self.0;
            }
            fn unit(&self) -> f64 {
                1.0
            }
        }
        let mut rng = RngStream::new(0, 0).rng(domain::WALK);
        let s = WalkState { position: vec![2i64], time: 0 };
        assert_eq!(reflect_step(&Fixed(-5), &s, &mut rng).unwrap().position, vec![3]);
        let s = WalkState { position: vec![0i64], time: 0 };
        assert_eq!(reflect_step(&Fixed(1), &s, &mut rng).unwrap().position, vec![1]);
        let s = WalkState { position: vec![-1i64], time: 0 };
        assert!(matches!(reflect_step(&Fixed(1), &s, &mut rng), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn unreachable_level_yields_empty_records() {
        let w = JointWalk::symmetric(&make_symmetric_family(&[0.5]).unwrap()).unwrap();
        let lv = LatticeLevels::new(&[50]).unwrap();
        let recs = record_hittings(&w, &lv, 10, 20, 1).unwrap();
        assert_eq!(recs.len(), 20);
        assert!(recs.iter().all(|r| r.times.is_empty()));
    }

    #[test]
    fn hitting_times_increase() {
        let w = JointWalk::symmetric(&make_symmetric_family(&[0.25, 0.25]).unwrap()).unwrap();
        let lv = LatticeLevels::new(&[2, 3]).unwrap();
        for rec in record_hittings(&w, &lv, 500, 20, 3).unwrap() {
            assert_eq!(rec.times.len(), rec.outward.len());
            assert!(rec.times.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn windows_locate() {
        let w = Windows::new(&[2.0, 1.0], &[0.1, 0.05]).unwrap();
        assert_eq!(w.locate(0.97), Some(1));
        assert_eq!(w.locate(2.1), Some(0));
        assert_eq!(w.locate(1.5), None);
        assert_eq!(w.locate(3.0), None);
        assert!(Windows::new(&[1.0, 1.1], &[0.1, 0.1]).is_err());
        assert!(Windows::new(&[0.05], &[0.1]).is_err());
    }

    #[test]
    fn klebaner_model_stays_nonnegative() {
        use crate::families::{make_klebaner_family, AlphaSeq, KlebanerFamily};
        let k = make_klebaner_family(KlebanerFamily { alpha: AlphaSeq::Constant { alpha: 0.1 }, bound: 1.0 }).unwrap();
        let m = KlebanerModel::new(&k, 300).unwrap();
        let mut rng = RngStream::new(2, 0).rng(domain::WALK);
        let mut st = Stepper::new(&m, false);
        run_path(&mut st, 300, &mut rng, |_, _, n, _| assert!(n >= 0));
    }
}
