//! Index of a family: `ψ = lim n · ln(up_n / down_n)`.
//!
//! `φ(n) = n ln(up/down)` is fitted by weighted least squares on
//! `1, 1/n, …, 1/n^degree`; the intercept is the estimate of `ψ`.

use super::exact_nd::{exact_level_symmetric, symmetric_marginal_system};
use crate::ck_solver::{integrate_ck, CkOptions};
use crate::error::{invalid, Error, Result};
use crate::families::{KlebanerWalk, SymmetricFamily};
use crate::rng::{domain, RngStream};
use crate::stats::wls;
use crate::walker::{JointWalk, KlebanerModel, LatticeLevels, LevelSet, Stepper, WalkModel};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

const CHUNK: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexMode {
    Exact,
    Formula,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexPoint {
    pub n: u64,
    pub up: f64,
    pub down: f64,
    /// `(up/down)^n`.
    pub ratio_pow: f64,
    pub phi: f64,
    pub phi_stderr: f64,
    pub events: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexFit {
    pub degree: usize,
    pub coefficients: Vec<f64>,
    pub reduced_chi2: Option<f64>,
    pub used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexEstimate {
    pub mode: IndexMode,
    pub points: Vec<IndexPoint>,
    pub psi: f64,
    pub psi_stderr: f64,
    pub fit: Option<IndexFit>,
    /// Grid levels left out because a probability was zero.
    pub excluded: Vec<u64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct IndexOptions {
    pub n_grid: Vec<u64>,
    /// Polynomial degree in `1/n` of the extrapolation.
    pub degree: usize,
    pub paths: u64,
    pub horizon: u64,
    /// Steps before events are counted.
    pub burn_in: u64,
    pub seed: u64,
    /// Level at which formula mode evaluates `φ(n)` for `ψ`.
    pub formula_n: u64,
    pub ck: CkOptions,
}

impl Default for IndexOptions {
    fn default() -> Self {
        Self {
            n_grid: vec![4, 8, 16, 32, 64],
            degree: 2,
            paths: 100_000,
            horizon: 2000,
            burn_in: 0,
            seed: 0,
            formula_n: 1_000_000,
            ck: CkOptions::default(),
        }
    }
}

/// `n ln(up/down)` without cancellation when `up ≈ down`.
pub fn phi(n: u64, up: f64, down: f64) -> f64 {
    let mid = 0.5 * (up + down);
    let h = 0.5 * (up - down) / mid;
    n as f64 * (h.ln_1p() - (-h).ln_1p())
}

fn point(n: u64, up: f64, down: f64, phi_stderr: f64, events: u64) -> IndexPoint {
    IndexPoint { n, up, down, ratio_pow: (up / down).powf(n as f64), phi: phi(n, up, down), phi_stderr, events }
}

/// Extrapolates `φ(n)` to `n → ∞`. Exact points (zero stderr) get unit weights.
pub fn fit_psi(points: &[IndexPoint], degree: usize) -> Result<(f64, f64, IndexFit)> {
    let p = degree + 1;
    if points.len() < p {
        return Err(Error::InsufficientData(format!("{} points cannot fit degree {degree}", points.len())));
    }
    let exact = points.iter().all(|q| q.phi_stderr == 0.0);
    let x = DMatrix::from_fn(points.len(), p, |i, j| (1.0 / points[i].n as f64).powi(j as i32));
    let y: Vec<f64> = points.iter().map(|q| q.phi).collect();
    let w: Vec<f64> = points.iter().map(|q| if exact { 1.0 } else { 1.0 / (q.phi_stderr * q.phi_stderr) }).collect();
    let (beta, cov) = wls(&x, &y, &w, !exact).ok_or_else(|| Error::InsufficientData("singular index fit".into()))?;
    let chi2 = (!exact && points.len() > p).then(|| {
        let r: f64 = points
            .iter()
            .zip(&w)
            .map(|(q, &wi)| {
                let f: f64 = beta.iter().enumerate().map(|(j, b)| b * (1.0 / q.n as f64).powi(j as i32)).sum();
                wi * (q.phi - f).powi(2)
            })
            .sum();
        r / (points.len() - p) as f64
    });
    let se = if exact { 0.0 } else { cov[(0, 0)].max(0.0).sqrt() };
    Ok((beta[0], se, IndexFit { degree, coefficients: beta, reduced_chi2: chi2, used: points.len() }))
}

fn finish(mode: IndexMode, points: Vec<IndexPoint>, excluded: Vec<u64>, degree: usize, mut warnings: Vec<String>) -> Result<IndexEstimate> {
    if !excluded.is_empty() {
        warnings.push(format!("levels {excluded:?} excluded: zero up or down probability"));
    }
    let (psi, psi_stderr, fit) = fit_psi(&points, degree.min(points.len().saturating_sub(1)))?;
    Ok(IndexEstimate { mode, points, psi, psi_stderr, fit: Some(fit), excluded, warnings })
}

/// Klebaner walk in formula or Monte Carlo mode.
pub fn estimate_index_klebaner(walk: &KlebanerWalk, mode: IndexMode, opts: &IndexOptions) -> Result<IndexEstimate> {
    match mode {
        IndexMode::Formula | IndexMode::Exact => {
            let pts: Vec<IndexPoint> = opts
                .n_grid
                .iter()
                .map(|&n| walk.up_probability(n).map(|u| point(n, u, 1.0 - u, 0.0, 0)))
                .collect::<Result<_>>()?;
            let (_, _, fit) = fit_psi(&pts, opts.degree.min(pts.len().saturating_sub(1)))?;
            let u = walk.up_probability(opts.formula_n)?;
            Ok(IndexEstimate {
                mode,
                points: pts,
                psi: phi(opts.formula_n, u, 1.0 - u),
                psi_stderr: 0.0,
                fit: Some(fit),
                excluded: vec![],
                warnings: vec![],
            })
        }
        IndexMode::MonteCarlo => {
            let n_max = opts.n_grid.iter().max().copied().unwrap_or(1).max(opts.horizon);
            let model = KlebanerModel::new(walk, n_max)?;
            estimate_index_mc(&model, opts)
        }
    }
}

/// Nearest-neighbour family in exact (occupancy ratios from the marginal system) or Monte Carlo mode.
pub fn estimate_index_symmetric(family: &SymmetricFamily, mode: IndexMode, opts: &IndexOptions) -> Result<IndexEstimate> {
    match mode {
        IndexMode::Exact | IndexMode::Formula => {
            let n_max = opts.n_grid.iter().copied().max().ok_or_else(|| invalid("empty level grid"))? as usize;
            let q = if family.dim() == 1 {
                vec![1.0; n_max + 1]
            } else {
                // Marginals differ only in laziness, which leaves the ratios unchanged; solve one.
                let sys = symmetric_marginal_system(family, 0)?;
                let mut o = opts.ck.clone();
                o.n_report = Some(n_max);
                o.t_end = o.t_end.max(20.0 * (n_max * n_max) as f64 / sys.jump_second_moment());
                let sol = integrate_ck(&sys, &o)?;
                if !sol.converged {
                    return Err(Error::Unconverged(format!("marginal ratios plateau error {:.3e}", sol.plateau_error)));
                }
                sol.q
            };
            let mut pts = Vec::new();
            let mut excluded = Vec::new();
            for &n in &opts.n_grid {
                let r = exact_level_symmetric(family, n as usize, &q)?;
                if r.ratio > 0.0 && r.down > 0.0 {
                    pts.push(point(n, r.ratio, r.down, 0.0, 0));
                } else {
                    excluded.push(n);
                }
            }
            finish(IndexMode::Exact, pts, excluded, opts.degree, vec![])
        }
        IndexMode::MonteCarlo => estimate_index_mc(&JointWalk::symmetric(family)?, opts),
    }
}

/// Up/down frequencies at each grid level from plain-walk paths.
///
/// The `φ` standard error is the cluster-robust delta-method error of
/// `ln(Σup) - ln(Σdown)`.
pub fn estimate_index_mc<M: WalkModel<C = i64>>(model: &M, opts: &IndexOptions) -> Result<IndexEstimate> {
    if opts.paths == 0 || opts.horizon <= opts.burn_in {
        return Err(invalid("index Monte Carlo needs paths >= 1 and horizon > burn-in"));
    }
    let levels: Vec<i64> = opts.n_grid.iter().map(|&n| n as i64).collect();
    let lv = LatticeLevels::new(&levels)?;
    let nl = levels.len();
    let chunks = opts.paths.div_ceil(CHUNK);
    // Per level: events, up, down, Σu², Σd², Σud over paths.
    let parts: Vec<Vec<[u128; 6]>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![[0u128; 6]; nl];
            let mut stepper = Stepper::new(model, false);
            let mut local = vec![[0u64; 3]; nl];
            for p in c * CHUNK..((c + 1) * CHUNK).min(opts.paths) {
                let mut rng = RngStream::new(opts.seed, p).rng(domain::WALK);
                stepper.reset();
                local.iter_mut().for_each(|l| *l = [0; 3]);
                for t in 0..opts.horizon {
                    let (prev, cur) = stepper.advance(&mut rng);
                    if t < opts.burn_in {
                        continue;
                    }
                    if let Some(l) = lv.locate(prev) {
                        local[l][0] += 1;
                        if cur > prev {
                            local[l][1] += 1;
                        } else if cur < prev {
                            local[l][2] += 1;
                        }
                    }
                }
                for (a, l) in acc.iter_mut().zip(&local) {
                    let (e, u, d) = (l[0] as u128, l[1] as u128, l[2] as u128);
                    a[0] += e;
                    a[1] += u;
                    a[2] += d;
                    a[3] += u * u;
                    a[4] += d * d;
                    a[5] += u * d;
                }
            }
            acc
        })
        .collect();
    let mut tot = vec![[0u128; 6]; nl];
    for part in &parts {
        for (t, a) in tot.iter_mut().zip(part) {
            for k in 0..6 {
                t[k] += a[k];
            }
        }
    }
    let mut pts = Vec::new();
    let mut excluded = Vec::new();
    for (&n, a) in opts.n_grid.iter().zip(&tot) {
        let (e, u, d) = (a[0] as f64, a[1] as f64, a[2] as f64);
        if u == 0.0 || d == 0.0 {
            excluded.push(n);
            continue;
        }
        let var = a[3] as f64 / (u * u) - 2.0 * a[5] as f64 / (u * d) + a[4] as f64 / (d * d);
        pts.push(point(n, u / e, d / e, n as f64 * var.max(0.0).sqrt(), a[0] as u64));
    }
    finish(IndexMode::MonteCarlo, pts, excluded, opts.degree, vec![])
}

/// Per-level rows for CSV output.
pub fn write_index_csv<W: std::io::Write>(est: &IndexEstimate, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["n", "up", "down", "ratio_pow", "phi", "phi_stderr", "events"])?;
    let f = crate::walker::fmt_real;
    for p in &est.points {
        w.write_record([p.n.to_string(), f(p.up), f(p.down), f(p.ratio_pow), f(p.phi), f(p.phi_stderr), p.events.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{make_klebaner_family, make_symmetric_family, AlphaSeq, KlebanerFamily};

    #[test]
    fn phi_is_stable_near_balance() {
        assert_eq!(phi(10, 0.5, 0.5), 0.0);
        let a = 0.1;
        let n = 1_000_000u64;
        let v = phi(n, 0.5 + a / n as f64, 0.5 - a / n as f64);
        assert!((v - 4.0 * a).abs() < 1e-9);
    }

    #[test]
    fn one_dimensional_symmetric_index_is_zero() {
        let f = make_symmetric_family(&[0.5]).unwrap();
        let e = estimate_index_symmetric(&f, IndexMode::Exact, &IndexOptions::default()).unwrap();
        assert_eq!(e.psi, 0.0);
        assert!(e.points.iter().all(|p| p.ratio_pow == 1.0));
    }

    #[test]
    fn planar_symmetric_index_is_one() {
        let f = make_symmetric_family(&[0.25, 0.25]).unwrap();
        let e = estimate_index_symmetric(&f, IndexMode::Exact, &IndexOptions::default()).unwrap();
        assert!((e.psi - 1.0).abs() < 1e-3, "{e:?}");
    }

    #[test]
    fn klebaner_formula() {
        for a in [0.1, 0.25] {
            let w = make_klebaner_family(KlebanerFamily { alpha: AlphaSeq::Constant { alpha: a }, bound: 1.0 }).unwrap();
            let e = estimate_index_klebaner(&w, IndexMode::Formula, &IndexOptions::default()).unwrap();
            assert!((e.psi - 4.0 * a).abs() < 1e-3);
            assert!((e.fit.unwrap().coefficients[0] - 4.0 * a).abs() < 1e-3);
        }
    }

    #[test]
    fn klebaner_monte_carlo_small() {
        let w = make_klebaner_family(KlebanerFamily { alpha: AlphaSeq::Constant { alpha: 0.25 }, bound: 1.0 }).unwrap();
        let o = IndexOptions { paths: 4000, horizon: 2000, n_grid: vec![2, 4, 8], degree: 1, ..Default::default() };
        let e = estimate_index_klebaner(&w, IndexMode::MonteCarlo, &o).unwrap();
        assert!((e.psi - 1.0).abs() < 5.0 * e.psi_stderr + 0.05, "{:?}", e);
        for p in &e.points {
            let exact = phi(p.n, 0.5 + 0.25 / p.n as f64, 0.5 - 0.25 / p.n as f64);
            assert!((p.phi - exact).abs() < 5.0 * p.phi_stderr, "{p:?}");
        }
    }

    #[test]
    fn zero_down_probability_is_excluded() {
        let e = finish(IndexMode::MonteCarlo, vec![point(2, 0.6, 0.4, 0.1, 10), point(4, 0.55, 0.45, 0.1, 10)], vec![8], 2, vec![]).unwrap();
        assert_eq!(e.excluded, vec![8]);
        assert_eq!(e.warnings.len(), 1);
    }
}
