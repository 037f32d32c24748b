//! Small statistical helpers: two-sample KS, cluster-robust ratio sums,
//! weighted least squares.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 1.0;
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (na, nb) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic KS critical value at level `alpha` for sample sizes `n`, `m`.
pub fn ks_critical(n: usize, m: usize, alpha: f64) -> f64 {
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Per-path totals of events `e` and successes `o`, folded across paths.
///
/// The ratio `Σo / Σe` has the cluster-robust (delta-method) variance
/// `Σ (o_p - r e_p)^2 / (Σe)^2`; keeping integer moments makes the fold
/// order-independent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RatioSums {
    pub clusters: u64,
    pub events: u64,
    pub successes: u64,
    pub ee: u128,
    pub oo: u128,
    pub oe: u128,
}

impl RatioSums {
    #[inline]
    pub fn add_cluster(&mut self, e: u64, o: u64) {
        if e == 0 {
            return;
        }
        self.clusters += 1;
        self.events += e;
        self.successes += o;
        self.ee += (e as u128) * (e as u128);
        self.oo += (o as u128) * (o as u128);
        self.oe += (o as u128) * (e as u128);
    }

    pub fn merge(&mut self, other: &RatioSums) {
        self.clusters += other.clusters;
        self.events += other.events;
        self.successes += other.successes;
        self.ee += other.ee;
        self.oo += other.oo;
        self.oe += other.oe;
    }

    pub fn ratio(&self) -> Option<f64> {
        (self.events > 0).then(|| self.successes as f64 / self.events as f64)
    }

    /// Cluster-robust standard error of [`ratio`](Self::ratio).
    pub fn stderr(&self) -> Option<f64> {
        let r = self.ratio()?;
        let e = self.events as f64;
        let ss = self.oo as f64 - 2.0 * r * self.oe as f64 + r * r * self.ee as f64;
        let n = self.clusters as f64;
        let corr = if n > 1.0 { n / (n - 1.0) } else { 1.0 };
        Some((ss.max(0.0) * corr).sqrt() / e)
    }

    /// Binomial standard error, ignoring within-path correlation.
    pub fn binomial_stderr(&self) -> Option<f64> {
        let r = self.ratio()?;
        Some((r * (1.0 - r) / self.events as f64).sqrt())
    }
}

/// Weighted least squares `y ≈ X β`; returns `(β, cov(β))`.
///
/// `cov` is `(XᵀWX)^{-1}` scaled by the reduced chi-square when
/// `scale_by_residuals` is set.
pub fn wls(x: &DMatrix<f64>, y: &[f64], w: &[f64], scale_by_residuals: bool) -> Option<(Vec<f64>, DMatrix<f64>)> {
    let n = y.len();
    let p = x.ncols();
    if n < p || x.nrows() != n || w.len() != n {
        return None;
    }
    let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let xw = DMatrix::from_fn(n, p, |i, j| x[(i, j)] * sw[i]);
    let yw = DVector::from_fn(n, |i, _| y[i] * sw[i]);
    let xtx = xw.transpose() * &xw;
    let inv = xtx.clone().try_inverse()?;
    let beta = &inv * (xw.transpose() * &yw);
    let mut cov = inv;
    if scale_by_residuals && n > p {
        let res = &yw - &xw * &beta;
        let chi2 = res.norm_squared() / (n - p) as f64;
        cov *= chi2.max(1.0);
    }
    Some((beta.iter().copied().collect(), cov))
}
