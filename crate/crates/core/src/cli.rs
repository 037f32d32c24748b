//! Batch front door: `simulate`, `verify` and `report`.
//!
//! Exit codes: 0 pass, 1 fail, 2 usage or configuration error, 3 inconclusive.
//! Every output is a pure function of the config bytes and the seed; the
//! thread count only changes wall time.

use crate::analysis::conditional::{estimate_conditional_grid, LadderOptions, LimitRule};
use crate::analysis::exact_nd::{NdContext, NdMode, NdOptions, QSource};
use crate::analysis::index::{estimate_index_klebaner, estimate_index_symmetric, write_index_csv, IndexMode, IndexOptions};
use crate::analysis::tail::{moment_expansion_check, tail_crossing, PositiveLaw, TransformMode, X1Law};
use crate::analysis::weak::{auto_horizon, check_weak_semiconservative, write_margins_csv, CheckMethod, Verdict, WeakOptions};
use crate::ck_solver::{verify_property1, verify_property2, CkOptions, PropertyReport};
use crate::config::{Check, ExperimentConfig, Family, LoadedConfig, MethodSpec, QueueModeSpec, SimulateKind, TransformSpec, VerifySpec};
use crate::error::{Error, Result};
use crate::exact::to_f64;
use crate::families::{FamilyParameter, ScaledFamily};
use crate::queue::{write_queue_csv, StrictContinuous, StrictLattice};
use crate::report::{summarize, write_summary_csv, write_table, Envelope, Format};
use crate::rng::derive_seed;
use crate::walker::{fmt_real, write_paths_csv, ContinuousWalk, JointWalk, KlebanerModel, LatticeWalk};
use clap::{Args, Parser, Subcommand};
use num_rational::Rational64;
use serde_json::{json, Value};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "semiwalk", version = crate::version(), about = "Simulate and verify semiconservative random walk families")]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides the config's `out`.
    #[arg(long, env = "SEMIWALK_OUT")]
    pub out: Option<PathBuf>,
    /// Master seed; overrides the config's `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Table format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dump walk or queue trajectories.
    Simulate(RunArgs),
    /// Run one verification check and exit with its verdict.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        /// property1 | property2 | weak-semi | tail-crossing | index | nd-oracle; overrides `verify.check`.
        #[arg(long)]
        check: Option<Check>,
    },
    /// Consolidate every report under a run directory.
    Report {
        dir: PathBuf,
        /// Where to write the summary (default: the run directory).
        #[arg(long, env = "SEMIWALK_OUT")]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

/// Maps an error to its exit code.
pub fn error_code(e: &Error) -> i32 {
    match e {
        Error::Unconverged(_) | Error::InsufficientData(_) | Error::TruncationTooSmall { .. } | Error::P0Underflow(_) => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return 2;
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match pool.install(|| dispatch(&cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            error_code(&e)
        }
    }
}

fn dispatch(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Simulate(args) => {
            let ctx = RunContext::new(args)?;
            cmd_simulate(&ctx)?;
            Ok(0)
        }
        Command::Verify { run, check } => {
            let ctx = RunContext::new(run)?;
            let check = check
                .or(ctx.config.verify.check)
                .ok_or_else(|| Error::Config("no check given: pass --check or set verify.check".into()))?;
            let v = cmd_verify(&ctx, check)?;
            println!("{}: {}", check.name(), verdict_name(v));
            Ok(v.exit_code())
        }
        Command::Report { dir, out, format } => {
            let (n, corrupt) = cmd_report(dir, out.as_deref().unwrap_or(dir), *format)?;
            println!("{n} report(s), {corrupt} corrupt");
            Ok(if corrupt > 0 { 1 } else { 0 })
        }
    }
}

/// Resolved config, seed and output directory for one run.
pub struct RunContext {
    pub config: ExperimentConfig,
    pub hash: String,
    pub seed: u64,
    pub out: PathBuf,
    pub format: Format,
}

impl RunContext {
    pub fn new(args: &RunArgs) -> Result<Self> {
        let loaded = LoadedConfig::load(&args.config)?;
        let seed = args.seed.or(loaded.config.seed).unwrap_or_else(crate::config::generate_seed);
        let out = args.out.clone().or_else(|| loaded.config.out.clone()).unwrap_or_else(|| PathBuf::from("semiwalk-out"));
        std::fs::create_dir_all(&out)?;
        Ok(Self { config: loaded.config, hash: loaded.hash, seed, out, format: args.format })
    }

    fn envelope(&self, command: &str, check: Option<&str>, body: Value) -> Envelope {
        Envelope::new(command, check, &self.hash, self.seed, body)
    }
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
        Verdict::Inconclusive => "INCONCLUSIVE",
    }
}

fn scaled(config: &ExperimentConfig) -> Result<(ScaledFamily, Vec<FamilyParameter>)> {
    match config.family.build()? {
        Family::Scaled { family, members } => Ok((family, members)),
        _ => Err(Error::Unsupported("this command needs a scaled family".into())),
    }
}

/// Trajectory dumps; writes `paths.<ext>` or `queue.<ext>` plus an envelope.
pub fn cmd_simulate(ctx: &RunContext) -> Result<()> {
    let s = &ctx.config.simulate;
    let (seed, fmt) = (ctx.seed, ctx.format);
    let (stem, label) = match (ctx.config.family.build()?, s.kind) {
        (Family::Scaled { family, members }, kind) => {
            let a = members.get(s.member).cloned().unwrap_or_else(|| FamilyParameter::simple(family.dim));
            let member = family.member(&a)?;
            let stem = match kind {
                SimulateKind::Walk => "paths",
                SimulateKind::Queue => "queue",
            };
            if family.base.is_lattice() {
                let walk = LatticeWalk::from_member(&member)?;
                let unit = walk.exact_unit();
                write_table(&ctx.out, stem, fmt, |buf| match (kind, s.queue_mode) {
                    (SimulateKind::Walk, _) => write_paths_csv(&walk, s.reflected, s.horizon, s.paths, seed, buf),
                    (SimulateKind::Queue, QueueModeSpec::WalkConsistent) => write_queue_csv(&walk, to_f64(unit), s.horizon, s.paths, seed, buf),
                    (SimulateKind::Queue, QueueModeSpec::Strict) => {
                        write_queue_csv(&StrictLattice::new(&member, unit)?, to_f64(unit), s.horizon, s.paths, seed, buf)
                    }
                })?;
            } else {
                let walk = ContinuousWalk::from_member(&member)?;
                write_table(&ctx.out, stem, fmt, |buf| match (kind, s.queue_mode) {
                    (SimulateKind::Walk, _) => write_paths_csv(&walk, s.reflected, s.horizon, s.paths, seed, buf),
                    (SimulateKind::Queue, QueueModeSpec::WalkConsistent) => write_queue_csv(&walk, 1.0, s.horizon, s.paths, seed, buf),
                    (SimulateKind::Queue, QueueModeSpec::Strict) => write_queue_csv(&StrictContinuous::new(&member)?, 1.0, s.horizon, s.paths, seed, buf),
                })?;
            }
            (stem, a.label())
        }
        (Family::Symmetric(f), SimulateKind::Walk) => {
            let walk = JointWalk::symmetric(&f)?;
            write_table(&ctx.out, "paths", fmt, |buf| write_paths_csv(&walk, s.reflected, s.horizon, s.paths, seed, buf))?;
            ("paths", format!("{:?}", f.alphas()))
        }
        (Family::Klebaner(k), SimulateKind::Walk) => {
            let model = KlebanerModel::new(&k, s.n_max)?;
            write_table(&ctx.out, "paths", fmt, |buf| write_paths_csv(&model, s.reflected, s.horizon, s.paths, seed, buf))?;
            ("paths", "klebaner".into())
        }
        (_, SimulateKind::Queue) => return Err(Error::Unsupported("queue dumps need a scaled family".into())),
    };
    let mut env = ctx.envelope(
        "simulate",
        None,
        json!({ "kind": s.kind, "member": label, "paths": s.paths, "horizon": s.horizon, "reflected": s.reflected }),
    );
    env.tables.push(format!("{stem}.{}", fmt.extension()));
    env.write(&ctx.out, "simulate")?;
    Ok(())
}

fn ck_options(v: &VerifySpec) -> CkOptions {
    let mut o = CkOptions::default();
    let c = &v.ck;
    if let Some(t) = c.t_end {
        o.t_end = t;
    }
    o.n_max = c.n_max.or(o.n_max);
    o.rtol = c.rtol.unwrap_or(o.rtol);
    o.atol = c.atol.unwrap_or(o.atol);
    o.plateau_tol = c.plateau_tol.unwrap_or(o.plateau_tol);
    o
}

fn ladder_options(v: &VerifySpec, seed: u64) -> LadderOptions {
    let d = LadderOptions::default();
    LadderOptions {
        base_horizon: v.base_horizon.unwrap_or(d.base_horizon),
        rungs: v.rungs.unwrap_or(d.rungs),
        paths: v.paths.unwrap_or(d.paths),
        seed,
        limit: if v.last_rung.unwrap_or(false) { LimitRule::LastRung } else { LimitRule::Extrapolate },
        ..d
    }
}

fn weak_options(v: &VerifySpec, seed: u64) -> WeakOptions {
    let d = WeakOptions::default();
    // An explicit base horizon is taken as given unless a factor is also set.
    let horizon_factor = match (v.base_horizon, v.horizon_factor) {
        (_, Some(f)) => Some(f),
        (Some(_), None) => None,
        (None, None) => d.horizon_factor,
    };
    WeakOptions {
        nd: NdOptions { q: QSource::Ck(ck_options(v)), budget: v.budget.unwrap_or(d.nd.budget) },
        ladder: ladder_options(v, seed),
        k_sigma: v.k_sigma.unwrap_or(d.k_sigma),
        extend: v.extend.unwrap_or(d.extend),
        horizon_factor,
        ..d
    }
}

fn need_z_grid(config: &ExperimentConfig) -> Result<Vec<Rational64>> {
    config.z_grid()?.ok_or_else(|| Error::Config("verify.z_grid is required for this check".into()))
}

fn members_or_simple(family: &ScaledFamily, members: Vec<FamilyParameter>) -> Vec<FamilyParameter> {
    if members.is_empty() {
        vec![FamilyParameter::simple(family.dim)]
    } else {
        members
    }
}

fn property_verdict(r: &PropertyReport, tol: f64) -> Verdict {
    if !r.converged {
        Verdict::Inconclusive
    } else if r.max_deviation < tol && r.pmf_identity && r.gcd_identity {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn write_property_table(out: &Path, stem: &str, fmt: Format, rows: &[(String, PropertyReport)]) -> Result<String> {
    write_table(out, stem, fmt, |buf| {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(buf);
        w.write_record(["pair", "l", "deviation"])?;
        for (label, r) in rows {
            for (l, d) in r.per_level.iter().enumerate() {
                w.write_record([label.clone(), l.to_string(), fmt_real(*d)])?;
            }
        }
        w.flush()?;
        Ok(())
    })
}

/// Runs `check`, writes `verify-<check>.report.json` and its tables, and returns the verdict.
pub fn cmd_verify(ctx: &RunContext, check: Check) -> Result<Verdict> {
    let v = &ctx.config.verify;
    let (fmt, out) = (ctx.format, ctx.out.as_path());
    let mut tables = Vec::new();
    let (verdict, body) = match check {
        Check::Property1 => {
            let (family, members) = scaled(&ctx.config)?;
            let (l_max, tol) = (v.l_max.unwrap_or(20), v.tolerance.unwrap_or(1e-6));
            let rows = members_or_simple(&family, members)
                .iter()
                .map(|a| Ok((a.label(), verify_property1(&family, a, l_max, &ck_options(v))?)))
                .collect::<Result<Vec<_>>>()?;
            let verdict = rows.iter().fold(Verdict::Pass, |acc, (_, r)| acc.combine(property_verdict(r, tol)));
            tables.push(write_property_table(out, "property1", fmt, &rows)?);
            let body: Vec<Value> = rows.iter().map(|(a, r)| json!({ "a": a, "report": r })).collect();
            (verdict, json!({ "l_max": l_max, "tolerance": tol, "members": body }))
        }
        Check::Property2 => {
            let (family, members) = scaled(&ctx.config)?;
            let (l_max, tol) = (v.l_max.unwrap_or(20), v.tolerance.unwrap_or(1e-6));
            let simple = FamilyParameter::simple(family.dim);
            let pairs: Vec<(FamilyParameter, FamilyParameter)> = match members.len() {
                0 => return Err(Error::Config("property2 needs at least one entry in family.members".into())),
                1 => vec![(members[0].clone(), simple)],
                _ => members[1..].iter().map(|m| (members[0].clone(), m.clone())).collect(),
            };
            let rows = pairs
                .iter()
                .map(|(a1, a2)| Ok((format!("{} vs {}", a1.label(), a2.label()), verify_property2(&family, a1, a2, l_max, &ck_options(v))?)))
                .collect::<Result<Vec<_>>>()?;
            let verdict = rows.iter().fold(Verdict::Pass, |acc, (_, r)| acc.combine(property_verdict(r, tol)));
            tables.push(write_property_table(out, "property2", fmt, &rows)?);
            let body: Vec<Value> = rows.iter().map(|(p, r)| json!({ "pair": p, "report": r })).collect();
            (verdict, json!({ "l_max": l_max, "tolerance": tol, "pairs": body }))
        }
        Check::WeakSemi => {
            let (family, members) = scaled(&ctx.config)?;
            if members.is_empty() {
                return Err(Error::Config("weak-semi needs family.members".into()));
            }
            let method = match v.method {
                None if family.base.is_lattice() => CheckMethod::Exact,
                None | Some(MethodSpec::MonteCarlo) => CheckMethod::MonteCarlo,
                Some(MethodSpec::Exact) => CheckMethod::Exact,
                Some(MethodSpec::Formula) => return Err(Error::Unsupported("weak-semi has no formula method".into())),
            };
            let report = check_weak_semiconservative(&family, &members, &need_z_grid(&ctx.config)?, method, &weak_options(v, ctx.seed))?;
            tables.push(write_table(out, "margins", fmt, |buf| write_margins_csv(&report, buf))?);
            (report.verdict, serde_json::to_value(&report)?)
        }
        Check::TailCrossing => verify_tail(ctx, &mut tables)?,
        Check::Index => verify_index(ctx, &mut tables)?,
        Check::NdOracle => verify_nd_oracle(ctx, &mut tables)?,
    };
    let mut env = ctx.envelope("verify", Some(check.name()), body);
    env.verdict = Some(verdict_name(verdict).into());
    env.tables = tables;
    env.write(out, &format!("verify-{}", check.name()))?;
    Ok(verdict)
}

fn verify_tail(ctx: &RunContext, tables: &mut Vec<String>) -> Result<(Verdict, Value)> {
    let v = &ctx.config.verify;
    let (family, members) = scaled(&ctx.config)?;
    let atoms = v.x1.as_ref().ok_or_else(|| Error::Config("tail-crossing needs verify.x1".into()))?;
    let atoms = atoms.iter().map(|(x, p)| Ok((x.rational()?, p.rational()?))).collect::<Result<Vec<_>>>()?;
    let law = PositiveLaw::new(&atoms)?;
    let tol = v.tolerance.unwrap_or(1e-8);
    let mode = match v.transform.unwrap_or_default() {
        TransformSpec::Laplace => TransformMode::Laplace,
        TransformSpec::Characteristic => TransformMode::Characteristic,
    };
    let mut verdict = Verdict::Pass;
    let mut rows = Vec::new();
    for a in members_or_simple(&family, members) {
        let t = tail_crossing(&law, &a)?;
        let mut ok = t.tail_holds && t.means_equal && t.var_identity_holds && t.stop_loss_holds;
        let moment = match &v.s_grid {
            Some(s) => {
                let m = moment_expansion_check(&X1Law::from_positive(&law), &a, s, mode)?;
                ok &= m.holds_on_grid && m.coefficient_error <= tol;
                Some(m)
            }
            None => None,
        };
        if !ok {
            verdict = Verdict::Fail;
        }
        rows.push((a.label(), t, moment));
    }
    tables.push(write_table(&ctx.out, "tail", ctx.format, |buf| {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(buf);
        w.write_record(["a", "x_star", "tail_holds", "var_x", "var_y", "stop_loss_holds", "s_star", "coefficient_error"])?;
        for (a, t, m) in &rows {
            w.write_record([
                a.clone(),
                t.x_star_exact.clone(),
                t.tail_holds.to_string(),
                fmt_real(t.var_x),
                fmt_real(t.var_y),
                t.stop_loss_holds.to_string(),
                m.as_ref().and_then(|m| m.s_star).map(fmt_real).unwrap_or_default(),
                m.as_ref().map(|m| fmt_real(m.coefficient_error)).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?);
    let body: Vec<Value> = rows.iter().map(|(a, t, m)| json!({ "a": a, "tail": t, "moment": m })).collect();
    Ok((verdict, json!({ "tolerance": tol, "members": body })))
}

fn verify_index(ctx: &RunContext, tables: &mut Vec<String>) -> Result<(Verdict, Value)> {
    let v = &ctx.config.verify;
    let d = IndexOptions::default();
    let opts = IndexOptions {
        n_grid: v.n_grid.clone().unwrap_or(d.n_grid),
        degree: v.degree.unwrap_or(d.degree),
        paths: v.paths.unwrap_or(d.paths),
        horizon: v.horizon.unwrap_or(d.horizon),
        burn_in: v.burn_in.unwrap_or(d.burn_in),
        seed: ctx.seed,
        formula_n: v.formula_n.unwrap_or(d.formula_n),
        ck: ck_options(v),
    };
    let mode = match v.method {
        Some(MethodSpec::Exact) => IndexMode::Exact,
        Some(MethodSpec::Formula) => IndexMode::Formula,
        Some(MethodSpec::MonteCarlo) => IndexMode::MonteCarlo,
        None => IndexMode::Exact,
    };
    let est = match ctx.config.family.build()? {
        Family::Klebaner(k) => estimate_index_klebaner(&k, mode, &opts)?,
        Family::Symmetric(f) => estimate_index_symmetric(&f, mode, &opts)?,
        Family::Scaled { .. } => return Err(Error::Unsupported("index needs a symmetric or Klebaner family".into())),
    };
    let tol = v.tolerance.unwrap_or(if mode == IndexMode::MonteCarlo { 0.05 } else { 1e-3 });
    let verdict = match v.expected {
        Some(_) if !est.psi.is_finite() => Verdict::Inconclusive,
        Some(e) if (est.psi - e).abs() <= tol => Verdict::Pass,
        Some(_) => Verdict::Fail,
        None if est.psi.is_finite() => Verdict::Pass,
        None => Verdict::Inconclusive,
    };
    tables.push(write_table(&ctx.out, "index", ctx.format, |buf| write_index_csv(&est, buf))?);
    Ok((verdict, json!({ "psi": est.psi, "psi_stderr": est.psi_stderr, "expected": v.expected, "tolerance": tol, "estimate": est })))
}

#[derive(serde::Serialize)]
struct OraclePoint {
    a: String,
    z: f64,
    exact: Option<f64>,
    numerical_error: Option<f64>,
    monte_carlo: Option<f64>,
    stderr: Option<f64>,
    deviation_sigma: Option<f64>,
    status: &'static str,
}

fn verify_nd_oracle(ctx: &RunContext, tables: &mut Vec<String>) -> Result<(Verdict, Value)> {
    let v = &ctx.config.verify;
    let (family, members) = scaled(&ctx.config)?;
    if !family.base.is_lattice() {
        return Err(Error::Unsupported("nd-oracle needs a lattice base".into()));
    }
    let zs = need_z_grid(&ctx.config)?;
    let wo = weak_options(v, ctx.seed);
    let z_max = *zs.iter().max().expect("validated nonempty");
    let mut points = Vec::new();
    for (k, a) in members_or_simple(&family, members).iter().enumerate() {
        let member = family.member(a)?;
        let mode = if a.is_simple() { NdMode::Simple } else { NdMode::Regular };
        let nd = NdContext::new(&member, mode, z_max, &wo.nd)?;
        let mut lo = wo.ladder.clone();
        lo.seed = derive_seed(ctx.seed, k as u64);
        if let Some(f) = wo.horizon_factor {
            lo.base_horizon = lo.base_horizon.max(auto_horizon(&member, &zs, f));
        }
        let mc = estimate_conditional_grid(&member, &zs, &lo)?;
        for (&z, m) in zs.iter().zip(mc) {
            let e = nd.evaluate(z);
            let mut p = OraclePoint {
                a: a.label(),
                z: to_f64(z),
                exact: None,
                numerical_error: None,
                monte_carlo: None,
                stderr: None,
                deviation_sigma: None,
                status: "",
            };
            p.status = match (e, m) {
                (Ok(e), Ok(m)) => {
                    let se = m.estimate.stderr;
                    let dev = m.estimate.value - e.ratio;
                    p.exact = Some(e.ratio);
                    p.numerical_error = Some(e.numerical_error);
                    p.monte_carlo = Some(m.estimate.value);
                    p.stderr = Some(se);
                    p.deviation_sigma = (se > 0.0).then(|| dev / se);
                    if dev.abs() <= wo.k_sigma * se + e.numerical_error {
                        "agree"
                    } else {
                        "disagree"
                    }
                }
                (Err(Error::NoComposition(_)), Err(Error::NoComposition(_) | Error::InsufficientData(_))) => "unreachable",
                (Err(Error::NoComposition(_)), Ok(m)) => {
                    p.monte_carlo = Some(m.estimate.value);
                    "disagree"
                }
                (Ok(e), Err(Error::InsufficientData(_))) => {
                    p.exact = Some(e.ratio);
                    "no-events"
                }
                (Err(e), _) | (_, Err(e)) => return Err(e),
            };
            points.push(p);
        }
    }
    let verdict = points.iter().fold(Verdict::Pass, |acc, p| {
        acc.combine(match p.status {
            "disagree" => Verdict::Fail,
            "no-events" => Verdict::Inconclusive,
            _ => Verdict::Pass,
        })
    });
    tables.push(write_table(&ctx.out, "oracle", ctx.format, |buf| {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(buf);
        w.write_record(["a", "z", "exact", "numerical_error", "monte_carlo", "stderr", "deviation_sigma", "status"])?;
        let f = |x: Option<f64>| x.map(fmt_real).unwrap_or_default();
        for p in &points {
            w.write_record([p.a.clone(), fmt_real(p.z), f(p.exact), f(p.numerical_error), f(p.monte_carlo), f(p.stderr), f(p.deviation_sigma), p.status.into()])?;
        }
        w.flush()?;
        Ok(())
    })?);
    Ok((verdict, json!({ "k_sigma": wo.k_sigma, "paths": wo.ladder.paths, "points": points })))
}

/// Writes `summary.<ext>` for every report under `dir`; returns `(rows, corrupt)`.
pub fn cmd_report(dir: &Path, out: &Path, format: Format) -> Result<(usize, usize)> {
    let summary = summarize(dir)?;
    std::fs::create_dir_all(out)?;
    write_table(out, "summary", format, |buf| write_summary_csv(&summary, buf))?;
    for r in summary.rows.iter().filter(|r| r.status != "ok") {
        eprintln!("corrupt report {}: {}", r.file, r.error);
    }
    if summary.distinct_hashes > 1 {
        eprintln!("warning: {} distinct config hashes", summary.distinct_hashes);
    }
    Ok((summary.rows.len(), summary.corrupt))
}
