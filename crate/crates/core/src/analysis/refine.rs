//! Lattice approximations of a continuous base with span `2^-m · scale`.

use super::weak::{check_weak_semiconservative, CheckMethod, WeakOptions, WeakSemiReport};
use crate::error::{invalid, Result};
use crate::exact::{rational_from_f64, to_f64};
use crate::families::{BaseDistribution, ContinuousLaw, FamilyParameter, LatticeLaw, ScaledFamily};
use num_rational::Rational64;
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct RefineOptions {
    /// Span at `m = 0`; `None` uses the support bound `c`.
    pub scale: Option<f64>,
    /// Largest accepted atom count per coordinate.
    pub max_atoms: usize,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self { scale: None, max_atoms: 4097 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinedLevel {
    pub m: u32,
    pub span: f64,
    pub atoms: usize,
    pub mass: f64,
    pub mean: f64,
    pub variance: f64,
    /// `variance - var(F)`.
    pub variance_error: f64,
    #[serde(skip)]
    pub law: LatticeLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Refinement {
    pub base_variance: f64,
    pub levels: Vec<RefinedLevel>,
}

/// Atoms `kα`, `|k| <= ⌈c/α⌉`, with `p_k = F((k+½)α) - F((k-½)α)`, renormalised and re-centred.
pub fn lattice_approximation(base: &ContinuousLaw, m: u32, scale: Rational64, max_atoms: usize) -> Result<LatticeLaw> {
    base.validate()?;
    if m > 40 {
        return Err(invalid("refinement exponent too large"));
    }
    let span = scale / Rational64::from_integer(1i64 << m);
    let alpha = to_f64(span);
    let c = base.bound();
    let k_max = (c / alpha - 1e-9).ceil() as i64;
    let atoms = 2 * k_max as usize + 1;
    if atoms > max_atoms {
        let fit = ((to_f64(scale) * (max_atoms as f64 - 1.0) / (2.0 * c)).log2().floor()).max(0.0) as u32;
        return Err(invalid(format!("span 2^-{m} needs {atoms} atoms (budget {max_atoms}); largest feasible m is {fit}")));
    }
    let mut p: Vec<(i64, f64)> = (-k_max..=k_max)
        .map(|k| {
            let hi = (((k as f64) + 0.5) * alpha).min(c);
            let lo = (((k as f64) - 0.5) * alpha).max(-c);
            (k, (base.cdf(hi) - base.cdf(lo)).max(0.0))
        })
        .collect();
    let total: f64 = p.iter().map(|a| a.1).sum();
    p.iter_mut().for_each(|a| a.1 /= total);
    // Symmetric bases give mean 0 up to rounding; move the residue between ±k_max.
    let mean: f64 = p.iter().map(|&(k, q)| k as f64 * q).sum();
    if mean != 0.0 {
        let shift = mean / (2.0 * k_max as f64);
        let n = p.len();
        p[0].1 += shift;
        p[n - 1].1 -= shift;
    }
    LatticeLaw::new(span, p)
}

/// Lattice approximations for every `m` in `m_list`.
pub fn refine_lattice(base: &ContinuousLaw, m_list: &[u32], opts: &RefineOptions) -> Result<Refinement> {
    let scale = rational_from_f64(opts.scale.unwrap_or(base.bound()))?;
    let var = base.variance();
    let levels = m_list
        .iter()
        .map(|&m| {
            let law = lattice_approximation(base, m, scale, opts.max_atoms)?;
            Ok(RefinedLevel {
                m,
                span: to_f64(law.span()),
                atoms: law.atoms().len(),
                mass: law.atoms().iter().map(|a| a.1).sum(),
                mean: law.mean(),
                variance: law.variance(),
                variance_error: law.variance() - var,
                law,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Refinement { base_variance: var, levels })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftPoint {
    pub a: String,
    pub z: f64,
    /// `(m, margin, band)` per refinement level where the level is reachable.
    pub margins: Vec<(u32, f64, f64)>,
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementCheck {
    pub refinement: Refinement,
    pub reports: Vec<(u32, WeakSemiReport)>,
    pub drift: Vec<DriftPoint>,
}

/// Runs the weak-semiconservativity check on every refinement level.
pub fn refinement_margins(
    refinement: Refinement,
    dim: usize,
    members: &[FamilyParameter],
    z_grid: &[Rational64],
    method: CheckMethod,
    opts: &WeakOptions,
) -> Result<RefinementCheck> {
    let mut reports = Vec::new();
    for lvl in &refinement.levels {
        let fam = ScaledFamily::new(BaseDistribution::Lattice(lvl.law.clone()), dim)?;
        reports.push((lvl.m, check_weak_semiconservative(&fam, members, z_grid, method, opts)?));
    }
    let mut drift = Vec::new();
    if let Some((_, first)) = reports.first() {
        for (mi, mem) in first.members.iter().enumerate() {
            for (zi, p) in mem.margins.iter().enumerate() {
                let margins: Vec<(u32, f64, f64)> = reports
                    .iter()
                    .filter_map(|(m, r)| {
                        let q = r.members.get(mi)?.margins.get(zi)?;
                        q.margin.map(|v| (*m, v, q.band.max(q.sigma)))
                    })
                    .collect();
                let hi = margins.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
                let lo = margins.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
                drift.push(DriftPoint { a: mem.a.clone(), z: p.z, spread: if margins.is_empty() { 0.0 } else { hi - lo }, margins });
            }
        }
    }
    Ok(RefinementCheck { refinement, reports, drift })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_m4_mass_is_one() {
        let law = lattice_approximation(&ContinuousLaw::Uniform { c: 1.0 }, 4, Rational64::from_integer(1), 4097).unwrap();
        let mass: f64 = law.atoms().iter().map(|a| a.1).sum();
        assert_eq!(mass, 1.0);
        assert_eq!(law.atoms().len(), 33);
        assert_eq!(law.mean(), 0.0);
        assert_eq!(law.atoms()[0].1, 1.0 / 64.0);
        assert_eq!(law.atoms()[1].1, 1.0 / 32.0);
    }

    #[test]
    fn variance_converges_quadratically() {
        let r = refine_lattice(&ContinuousLaw::Uniform { c: 1.0 }, &[3, 4, 5, 6], &RefineOptions::default()).unwrap();
        for w in r.levels.windows(2) {
            let ratio = w[0].variance_error.abs() / w[1].variance_error.abs();
            assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
        }
        // Midpoint cells with half-weight endpoints: var = 1/3 + α²/6.
        for l in &r.levels {
            assert!((l.variance_error - l.span * l.span / 6.0).abs() < 1e-14);
        }
    }

    #[test]
    fn truncated_normal_is_centred() {
        let base = ContinuousLaw::TruncatedNormal { sigma: 1.0, c: 3.0 };
        let r = refine_lattice(&base, &[2, 5], &RefineOptions::default()).unwrap();
        for l in &r.levels {
            assert!(l.mean.abs() < 1e-15);
            assert!((l.mass - 1.0).abs() < 1e-14);
        }
        assert!(r.levels[1].variance_error.abs() < r.levels[0].variance_error.abs());
    }

    #[test]
    fn too_fine_span_is_refused() {
        let err = lattice_approximation(&ContinuousLaw::Uniform { c: 1.0 }, 13, Rational64::from_integer(1), 4097).unwrap_err();
        assert!(err.to_string().contains("largest feasible m is 11"), "{err}");
    }
}
