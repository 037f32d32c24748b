//! Experiment configuration: one TOML file per experiment.
//!
//! Every field is checked against a documented bound by [`ExperimentConfig::validate`]
//! before a run starts. The hash is taken over the raw file bytes, so two runs
//! share a hash exactly when their files are byte-identical.

use crate::error::{Error, Result};
use crate::exact::{parse_rational, rational_from_f64};
use crate::families::{
    make_klebaner_family, make_symmetric_family, AlphaSeq, BaseDistribution, ContinuousLaw, FamilyParameter, KlebanerFamily,
    KlebanerWalk, LatticeLaw, ScaledFamily, SymmetricFamily,
};
use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// A number written as an integer, a float, or a string such as `"6/5"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Num {
    pub fn rational(&self) -> Result<Rational64> {
        match self {
            Num::Int(i) => Ok(Rational64::from_integer(*i)),
            Num::Float(x) => rational_from_f64(*x),
            Num::Text(s) => parse_rational(s),
        }
    }

    pub fn real(&self) -> Result<f64> {
        match self {
            Num::Int(i) => Ok(*i as f64),
            Num::Float(x) => Ok(*x),
            Num::Text(s) => parse_rational(s).map(crate::exact::to_f64),
        }
    }

    /// Whether the literal was written exactly (integer or fraction string).
    fn is_exact(&self) -> bool {
        !matches!(self, Num::Float(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseKind {
    /// Inline `(value, probability)` pairs in `atoms`.
    Lattice,
    /// `±value` with probability ½ each.
    TwoPoint,
    /// Uniform on `{-m, ..., m} · span`.
    SymmetricUniform,
    /// Uniform on `(-c, c)`.
    Uniform,
    /// Centered normal with scale `sigma` truncated to `[-c, c]`.
    TruncatedNormal,
}

/// Flat so that type errors point at the offending key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseSpec {
    pub kind: BaseKind,
    pub atoms: Option<Vec<(Num, f64)>>,
    pub value: Option<Num>,
    pub m: Option<i64>,
    pub span: Option<Num>,
    pub c: Option<f64>,
    pub sigma: Option<f64>,
}

fn required<'a, T>(field: &str, kind: &str, v: &'a Option<T>) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| Error::Config(format!("{field}: required for kind {kind}")))
}

impl BaseSpec {
    pub fn build(&self) -> Result<BaseDistribution> {
        let k = serde_json::to_value(self.kind)?.as_str().unwrap_or_default().to_string();
        Ok(match self.kind {
            BaseKind::Lattice => {
                let atoms = required("family.base.atoms", &k, &self.atoms)?;
                let pairs = atoms.iter().map(|(v, p)| Ok((v.rational()?, *p))).collect::<Result<Vec<_>>>()?;
                BaseDistribution::Lattice(LatticeLaw::from_values(&pairs)?)
            }
            BaseKind::TwoPoint => BaseDistribution::Lattice(LatticeLaw::two_point(required("family.base.value", &k, &self.value)?.rational()?)?),
            BaseKind::SymmetricUniform => BaseDistribution::Lattice(LatticeLaw::symmetric_uniform(
                *required("family.base.m", &k, &self.m)?,
                required("family.base.span", &k, &self.span)?.rational()?,
            )?),
            BaseKind::Uniform => {
                let law = ContinuousLaw::Uniform { c: *required("family.base.c", &k, &self.c)? };
                law.validate()?;
                BaseDistribution::Continuous(law)
            }
            BaseKind::TruncatedNormal => {
                let law = ContinuousLaw::TruncatedNormal {
                    sigma: *required("family.base.sigma", &k, &self.sigma)?,
                    c: *required("family.base.c", &k, &self.c)?,
                };
                law.validate()?;
                BaseDistribution::Continuous(law)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// `F(x / a_i)` per coordinate; needs `base`, `dim`, optional `members`.
    Scaled,
    /// Nearest-neighbour walk on `Z^d` with axis weights `alphas`.
    Symmetric,
    /// One-dimensional walk with state-dependent drift; needs `alpha`, `bound`.
    Klebaner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub base: Option<BaseSpec>,
    pub dim: Option<usize>,
    #[serde(default)]
    pub members: Vec<Vec<Num>>,
    pub alphas: Option<Vec<f64>>,
    pub alpha: Option<AlphaSeq>,
    pub bound: Option<f64>,
}

/// What [`FamilySpec`] builds into.
#[derive(Debug, Clone)]
pub enum Family {
    Scaled { family: ScaledFamily, members: Vec<FamilyParameter> },
    Symmetric(SymmetricFamily),
    Klebaner(KlebanerWalk),
}

impl FamilySpec {
    pub fn build(&self) -> Result<Family> {
        match self.kind {
            FamilyKind::Scaled => {
                let base = required("family.base", "scaled", &self.base)?.build()?;
                let family = ScaledFamily::new(base, *required("family.dim", "scaled", &self.dim)?)?;
                let members = self
                    .members
                    .iter()
                    .enumerate()
                    .map(|(k, m)| member_parameter(m).map_err(|e| Error::Config(format!("family.members[{k}]: {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Family::Scaled { family, members })
            }
            FamilyKind::Symmetric => Ok(Family::Symmetric(make_symmetric_family(required("family.alphas", "symmetric", &self.alphas)?)?)),
            FamilyKind::Klebaner => Ok(Family::Klebaner(make_klebaner_family(KlebanerFamily {
                alpha: *required("family.alpha", "klebaner", &self.alpha)?,
                bound: *required("family.bound", "klebaner", &self.bound)?,
            })?)),
        }
    }
}

fn member_parameter(m: &[Num]) -> Result<FamilyParameter> {
    if m.iter().all(Num::is_exact) {
        FamilyParameter::exact(m.iter().map(Num::rational).collect::<Result<_>>()?)
    } else {
        FamilyParameter::real(m.iter().map(Num::real).collect::<Result<_>>()?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SimulateKind {
    #[default]
    Walk,
    Queue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum QueueModeSpec {
    #[default]
    WalkConsistent,
    Strict,
}

fn default_paths() -> u64 {
    10
}
fn default_horizon() -> u64 {
    100
}
fn default_n_max() -> u64 {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpec {
    #[serde(default)]
    pub kind: SimulateKind,
    /// Index into `family.members`; ignored for symmetric and Klebaner families.
    #[serde(default)]
    pub member: usize,
    #[serde(default = "default_paths")]
    pub paths: u64,
    /// Steps for walks, arrivals for queues.
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default)]
    pub reflected: bool,
    #[serde(default)]
    pub queue_mode: QueueModeSpec,
    /// State cap for the Klebaner walk.
    #[serde(default = "default_n_max")]
    pub n_max: u64,
}

impl Default for SimulateSpec {
    fn default() -> Self {
        Self {
            kind: SimulateKind::Walk,
            member: 0,
            paths: default_paths(),
            horizon: default_horizon(),
            reflected: false,
            queue_mode: QueueModeSpec::WalkConsistent,
            n_max: default_n_max(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Property1,
    Property2,
    WeakSemi,
    TailCrossing,
    Index,
    NdOracle,
}

impl Check {
    pub fn name(self) -> &'static str {
        match self {
            Check::Property1 => "property1",
            Check::Property2 => "property2",
            Check::WeakSemi => "weak-semi",
            Check::TailCrossing => "tail-crossing",
            Check::Index => "index",
            Check::NdOracle => "nd-oracle",
        }
    }
}

impl std::str::FromStr for Check {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        [Check::Property1, Check::Property2, Check::WeakSemi, Check::TailCrossing, Check::Index, Check::NdOracle]
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown check '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodSpec {
    Exact,
    Formula,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TransformSpec {
    #[default]
    Laplace,
    Characteristic,
}

/// Chapman–Kolmogorov integration overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CkSpec {
    pub t_end: Option<f64>,
    pub n_max: Option<usize>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub plateau_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    pub check: Option<Check>,
    pub method: Option<MethodSpec>,
    /// Norm levels, in the units of the base law.
    pub z_grid: Option<Vec<Num>>,
    /// Highest level `l` for the property checks.
    pub l_max: Option<usize>,
    /// Deviation tolerance for the property checks; ψ tolerance for `index`.
    pub tolerance: Option<f64>,
    pub k_sigma: Option<f64>,
    pub extend: Option<bool>,
    /// Monte Carlo paths.
    pub paths: Option<u64>,
    /// Ladder base horizon `T`; overrides the automatic choice.
    pub base_horizon: Option<u64>,
    pub rungs: Option<u32>,
    pub horizon_factor: Option<f64>,
    pub last_rung: Option<bool>,
    pub budget: Option<f64>,
    pub n_grid: Option<Vec<u64>>,
    pub degree: Option<usize>,
    pub horizon: Option<u64>,
    pub burn_in: Option<u64>,
    pub formula_n: Option<u64>,
    /// Expected ψ for `index`.
    pub expected: Option<f64>,
    /// `(value, probability)` atoms of the positive law `X_1`.
    pub x1: Option<Vec<(Num, Num)>>,
    pub s_grid: Option<Vec<f64>>,
    pub transform: Option<TransformSpec>,
    #[serde(default)]
    pub ck: CkSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub family: FamilySpec,
    #[serde(default)]
    pub simulate: SimulateSpec,
    #[serde(default)]
    pub verify: VerifySpec,
}

/// A parsed, validated config plus its provenance.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub hash: String,
    pub source: Option<PathBuf>,
}

pub const MAX_DIM: usize = 16;
pub const MAX_PATHS: u64 = 1_000_000_000;
pub const MAX_HORIZON: u64 = 1_000_000_000;
pub const MAX_LEVEL: usize = 100_000;

fn bound<T: PartialOrd + std::fmt::Display>(field: &str, v: T, lo: T, hi: T) -> Result<()> {
    if v < lo || v > hi {
        return Err(Error::Config(format!("{field}: {v} outside [{lo}, {hi}]")));
    }
    Ok(())
}

fn positive(field: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::Config(format!("{field}: must be positive and finite, got {v}")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Bounds on every numeric field; family construction errors are reported with their field.
    pub fn validate(&self) -> Result<()> {
        let f = &self.family;
        if let Some(dim) = f.dim {
            bound("family.dim", dim, 1, MAX_DIM)?;
            for (k, m) in f.members.iter().enumerate() {
                if m.len() != dim {
                    return Err(Error::Config(format!("family.members[{k}]: has {} components, dim is {dim}", m.len())));
                }
            }
        }
        if let Some(a) = &f.alphas {
            bound("family.alphas (length)", a.len(), 1, MAX_DIM)?;
        }
        if let Some(c) = f.bound {
            positive("family.bound", c)?;
        }
        self.family.build().map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(format!("family: {other}")),
        })?;
        let s = &self.simulate;
        bound("simulate.paths", s.paths, 1, MAX_PATHS)?;
        bound("simulate.horizon", s.horizon, 1, MAX_HORIZON)?;
        bound("simulate.n_max", s.n_max, 2, u64::MAX / 4)?;
        if !f.members.is_empty() && s.member >= f.members.len() {
            return Err(Error::Config(format!("simulate.member: {} but only {} members", s.member, f.members.len())));
        }
        let v = &self.verify;
        if let Some(z) = &v.z_grid {
            bound("verify.z_grid (length)", z.len(), 1, 10_000)?;
            for (k, x) in z.iter().enumerate() {
                let r = x.real().map_err(|e| Error::Config(format!("verify.z_grid[{k}]: {e}")))?;
                positive(&format!("verify.z_grid[{k}]"), r)?;
            }
        }
        if let Some(l) = v.l_max {
            bound("verify.l_max", l, 0, MAX_LEVEL)?;
        }
        for (f, x) in [("verify.tolerance", v.tolerance), ("verify.k_sigma", v.k_sigma), ("verify.horizon_factor", v.horizon_factor), ("verify.budget", v.budget)] {
            if let Some(x) = x {
                positive(f, x)?;
            }
        }
        if let Some(p) = v.paths {
            bound("verify.paths", p, 1, MAX_PATHS)?;
        }
        for (f, x) in [("verify.base_horizon", v.base_horizon), ("verify.horizon", v.horizon)] {
            if let Some(x) = x {
                bound(f, x, 1, MAX_HORIZON)?;
            }
        }
        if let Some(b) = v.burn_in {
            bound("verify.burn_in", b, 0, MAX_HORIZON)?;
        }
        if let Some(r) = v.rungs {
            bound("verify.rungs", r, 1, 16)?;
        }
        if let Some(n) = &v.n_grid {
            bound("verify.n_grid (length)", n.len(), 1, 1000)?;
            for (k, &x) in n.iter().enumerate() {
                bound(&format!("verify.n_grid[{k}]"), x, 1, 1u64 << 40)?;
            }
        }
        if let Some(d) = v.degree {
            bound("verify.degree", d, 0, 8)?;
        }
        if let Some(n) = v.formula_n {
            bound("verify.formula_n", n, 1, 1u64 << 40)?;
        }
        if let Some(x1) = &v.x1 {
            bound("verify.x1 (length)", x1.len(), 1, 64)?;
            for (k, (a, p)) in x1.iter().enumerate() {
                a.rational().and_then(|_| p.rational()).map_err(|e| Error::Config(format!("verify.x1[{k}]: {e}")))?;
            }
        }
        if let Some(s) = &v.s_grid {
            for (k, &x) in s.iter().enumerate() {
                if !x.is_finite() {
                    return Err(Error::Config(format!("verify.s_grid[{k}]: not finite")));
                }
            }
        }
        let ck = &v.ck;
        for (f, x) in [("verify.ck.t_end", ck.t_end), ("verify.ck.rtol", ck.rtol), ("verify.ck.atol", ck.atol), ("verify.ck.plateau_tol", ck.plateau_tol)] {
            if let Some(x) = x {
                positive(f, x)?;
            }
        }
        if let Some(n) = ck.n_max {
            bound("verify.ck.n_max", n, 2, 1 << 20)?;
        }
        Ok(())
    }

    pub fn z_grid(&self) -> Result<Option<Vec<Rational64>>> {
        self.verify.z_grid.as_ref().map(|z| z.iter().map(Num::rational).collect()).transpose()
    }
}

/// Lower-case hex sha256.
pub fn hash_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl LoadedConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        Ok(Self { config: ExperimentConfig::parse(text)?, hash: hash_bytes(text.as_bytes()), source: None })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut c = Self::from_text(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        c.source = Some(path.to_path_buf());
        Ok(c)
    }
}

/// Seed for runs whose config omits one; recorded in every output it affects.
pub fn generate_seed() -> u64 {
    let nanos = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_nanos() as u64).unwrap_or(0);
    crate::rng::derive_seed(nanos, std::process::id() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 7
[family]
kind = "scaled"
dim = 1
members = [[1]]
[family.base]
kind = "two_point"
value = 1
"#;

    #[test]
    fn minimal_config_parses() {
        let c = LoadedConfig::from_text(MINIMAL).unwrap();
        assert_eq!(c.config.seed, Some(7));
        assert_eq!(c.config.simulate.paths, 10);
        assert_eq!(c.hash.len(), 64);
        assert!(matches!(c.config.family.build().unwrap(), Family::Scaled { .. }));
    }

    #[test]
    fn unknown_field_reports_line() {
        let bad = MINIMAL.replace("dim = 1", "dim = 1\ndimm = 2");
        let err = ExperimentConfig::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("dimm") && err.contains("line"), "{err}");
    }

    #[test]
    fn type_error_points_at_key() {
        let bad = MINIMAL.replace("dim = 1", "dim = \"x\"");
        let err = ExperimentConfig::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("line 5") && err.contains("dim"), "{err}");
    }

    #[test]
    fn missing_kind_field_is_named() {
        let bad = MINIMAL.replace("value = 1", "");
        let err = ExperimentConfig::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("family.base.value"), "{err}");
    }

    #[test]
    fn bounds_name_the_field() {
        let bad = format!("{MINIMAL}\n[simulate]\npaths = 0\n");
        let err = ExperimentConfig::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("simulate.paths"), "{err}");
    }

    #[test]
    fn members_accept_fractions_and_decimals() {
        let text = r#"
[family]
kind = "scaled"
dim = 2
members = [["3/2", "1/2"], [1.2, 0.8]]
[family.base]
kind = "lattice"
atoms = [[-2, 0.5], [2, 0.5]]
"#;
        let c = ExperimentConfig::parse(text).unwrap();
        let Family::Scaled { members, .. } = c.family.build().unwrap() else { panic!() };
        assert!(members[0].rationals().is_some());
        assert_eq!(members[1].rationals().unwrap()[0], Rational64::new(6, 5));
    }

    #[test]
    fn hash_tracks_bytes() {
        let a = LoadedConfig::from_text(MINIMAL).unwrap().hash;
        let b = LoadedConfig::from_text(&MINIMAL.replace("seed = 7", "seed = 8")).unwrap().hash;
        assert_ne!(a, b);
    }
}
