//! Discrete samplers over integer atoms.

use crate::error::{invalid, Result};
use crate::rng::PathRng;

const MAX_DYADIC_BITS: u32 = 16;

/// Draws integer atoms with given probabilities.
///
/// Dyadic pmfs use a lookup table indexed by raw bits, so their
/// probabilities are exact. Anything else goes through an alias table whose
/// acceptance thresholds carry 32 bits.
#[derive(Debug, Clone)]
pub enum DiscreteSampler {
    Dyadic { bits: u32, table: Vec<i64> },
    Alias { values: Vec<i64>, aliases: Vec<i64>, thresholds: Vec<u64> },
}

impl DiscreteSampler {
    pub fn new(atoms: &[(i64, f64)]) -> Result<Self> {
        if atoms.is_empty() {
            return Err(invalid("sampler needs at least one atom"));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if atoms.iter().any(|a| !(a.1 >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(invalid("sampler weights must be a pmf"));
        }
        if let Some(s) = Self::dyadic(atoms) {
            return Ok(s);
        }
        Ok(Self::alias(atoms, total))
    }

    fn dyadic(atoms: &[(i64, f64)]) -> Option<Self> {
        for bits in 0..=MAX_DYADIC_BITS {
            let n = 1u64 << bits;
            let counts: Option<Vec<u64>> = atoms
                .iter()
                .map(|a| {
                    let c = a.1 * n as f64;
                    (c.fract() == 0.0).then_some(c as u64)
                })
                .collect();
            if let Some(counts) = counts {
                if counts.iter().sum::<u64>() == n && bits > 0 {
                    let mut table = Vec::with_capacity(n as usize);
                    for (a, c) in atoms.iter().zip(&counts) {
                        table.extend(std::iter::repeat(a.0).take(*c as usize));
                    }
                    return Some(DiscreteSampler::Dyadic { bits, table });
                }
            }
        }
        None
    }

    fn alias(atoms: &[(i64, f64)], total: f64) -> Self {
        let n = atoms.len();
        let mut scaled: Vec<f64> = atoms.iter().map(|a| a.1 / total * n as f64).collect();
        let values: Vec<i64> = atoms.iter().map(|a| a.0).collect();
        let mut aliases = values.clone();
        let mut thresholds = vec![1u64 << 32; n];
        let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| scaled[i] < 1.0);
        while let (Some(s), Some(&l)) = (small.pop(), large.last()) {
            thresholds[s] = (scaled[s] * 4_294_967_296.0).round() as u64;
            aliases[s] = values[l];
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        DiscreteSampler::Alias { values, aliases, thresholds }
    }

    #[inline]
    pub fn sample(&self, rng: &mut PathRng) -> i64 {
        match self {
            DiscreteSampler::Dyadic { bits, table } => table[rng.bits(*bits) as usize],
            DiscreteSampler::Alias { values, aliases, thresholds } => {
                let w = rng.next_u64();
                let i = (((w >> 32) * values.len() as u64) >> 32) as usize;
                if (w & 0xffff_ffff) < thresholds[i] {
                    values[i]
                } else {
                    aliases[i]
                }
            }
        }
    }

    /// Probability of each atom as realised by the sampler.
    pub fn realised_pmf(&self) -> Vec<(i64, f64)> {
        let mut out: Vec<(i64, f64)> = Vec::new();
        let mut add = |v: i64, p: f64| match out.iter_mut().find(|e| e.0 == v) {
            Some(e) => e.1 += p,
            None => out.push((v, p)),
        };
        match self {
            DiscreteSampler::Dyadic { table, .. } => {
                let w = 1.0 / table.len() as f64;
                table.iter().for_each(|&v| add(v, w));
            }
            DiscreteSampler::Alias { values, aliases, thresholds } => {
                let w = 1.0 / values.len() as f64;
                for i in 0..values.len() {
                    let keep = thresholds[i] as f64 / 4_294_967_296.0;
                    add(values[i], w * keep);
                    add(aliases[i], w * (1.0 - keep));
                }
            }
        }
        out.retain(|e| e.1 > 0.0);
        out.sort_by_key(|e| e.0);
        out
    }
}
