//! Command implementations for the `xns11` binary.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use xns_core::derive::{self, Constants, Report, Stage};
use xns_core::Error;
use xns_periods::riemann::PeriodMatrix;
use xns_periods::{elliptic_lattices, isom, lattice_membership, msym, riemann};

pub const SCHEMA: &str = "xns11-report/1";
pub const CACHE_ENV: &str = "XNS11_CACHE_DIR";
/// precision of the check that the plane model vanishes on the (T, Z) series
pub const SERIES_CHECK_ORDER: usize = 60;

#[derive(Parser, Debug, Clone)]
#[command(
    name = "xns11",
    version,
    about = "Verification driver for X_ns(11), its modular units and its period lattices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub config: RunConfig,
}

#[derive(clap::Args, Debug, Clone, Serialize)]
pub struct RunConfig {
    /// q_*-series precision for the exact checks
    #[arg(long, global = true, default_value_t = 400, value_parser = clap::value_parser!(u32).range(50..))]
    pub order: u32,
    /// working precision in bits for branch points
    #[arg(long, global = true, default_value_t = 256, value_parser = clap::value_parser!(u32).range(64..))]
    pub bits: u32,
    /// tolerance for numerical period integrals
    #[arg(long, global = true, default_value_t = 1e-10, value_parser = positive)]
    pub tol: f64,
    /// number of newform coefficients a_n
    #[arg(long, global = true, default_value_t = msym::DEFAULT_NMAX, value_parser = at_least_1000)]
    pub nmax: usize,
    /// directory for cached a_n tables
    #[arg(long, global = true, env = CACHE_ENV)]
    pub cache_dir: Option<PathBuf>,
    /// write the JSON report here
    #[arg(long, global = true)]
    pub json: Option<PathBuf>,
    /// dump branch points, permutations and cycle words
    #[arg(long, global = true)]
    pub audit: bool,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

fn at_least_1000(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 1000 => Ok(v),
        _ => Err(format!("`{s}` is not an integer ≥ 1000")),
    }
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Run the exact series checks
    Verify {
        #[arg(value_enum)]
        scope: Scope,
    },
    /// Compute a period matrix and check it against the elliptic lattices
    Periods {
        #[arg(value_enum)]
        target: Target,
    },
    /// Compare Ω_ns with Ω_new and compute the lattice quotients
    Isom,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Units,
    Generators,
    Trace,
    Remarks,
    Maps,
    All,
}

impl Scope {
    fn stage(self) -> Stage {
        match self {
            Scope::Units => Stage::Units,
            Scope::Generators => Stage::Generators,
            Scope::Trace => Stage::Trace,
            Scope::Remarks => Stage::Remarks,
            Scope::Maps | Scope::All => Stage::Maps,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Target {
    #[value(name = "x0121-new")]
    #[serde(rename = "x0121-new")]
    X0121New,
    #[value(name = "xns11")]
    #[serde(rename = "xns11")]
    Xns11,
    #[value(name = "genus2")]
    #[serde(rename = "genus2")]
    Genus2,
}

/// Result of a command: the checks, any command-specific data, and an optional audit dump.
pub struct Outcome {
    pub report: Report,
    pub data: Value,
    pub audit: Option<Value>,
    pub summary: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.report.all_pass() {
            0
        } else {
            1
        }
    }
}

pub fn constants_digest() -> String {
    let d = Sha256::digest(derive::CONSTANTS_TEXT.as_bytes());
    d.iter().map(|b| format!("{b:02x}")).collect()
}

fn progress(msg: &str) {
    eprintln!("[xns11] {msg}");
}

pub fn execute(cli: &Cli) -> Result<Outcome, Error> {
    let cfg = &cli.config;
    let mut out = match cli.command {
        Command::Verify { scope } => verify(scope, cfg)?,
        Command::Periods { target } => periods(target, cfg)?,
        Command::Isom => isom_cmd(cfg)?,
    };
    out.report.provenance.constants_sha256 = Some(constants_digest());
    Ok(out)
}

pub fn verify(scope: Scope, cfg: &RunConfig) -> Result<Outcome, Error> {
    progress(&format!("series checks up to {scope:?} at O(q_*^{})", cfg.order));
    let (report, _) = derive::run(cfg.order as usize, scope.stage(), &Constants::builtin())?;
    let summary = vec![format!("{} checks, {} failed", report.records.len(), report.failures().len())];
    Ok(Outcome { report, data: json!({ "scope": scope }), audit: None, summary })
}

fn c2(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn matrix_json(m: &[Vec<Complex64>]) -> Value {
    json!(m.iter().map(|r| r.iter().map(|&z| c2(z)).collect::<Vec<_>>()).collect::<Vec<_>>())
}

/// Lattice membership of each entry; row r is compared with elliptic lattice `rows[r]`.
fn membership_checks(
    report: &mut Report,
    prefix: &str,
    omega: &[Vec<Complex64>],
    rows: &[usize],
    limit: f64,
) -> Result<Value, Error> {
    let ell = elliptic_lattices()?;
    let names = ['A', 'B', 'C', 'D'];
    let mut coords = Vec::new();
    for (r, &e) in rows.iter().enumerate() {
        let mut row = Vec::new();
        for (j, &v) in omega[r].iter().enumerate() {
            let m = lattice_membership(v, ell[e]);
            report.push(
                &format!("{prefix}.{}{}", names[e], j + 1),
                &format!("period lies in Λ_{}", names[e]),
                m.rel_error < limit,
                None,
                Some(format!("{}ω₁ + {}ω₂, relative error {:.1e}", m.m, m.n, m.rel_error)),
            );
            row.push(json!({ "m": m.m, "n": m.n, "rel_error": m.rel_error }));
        }
        coords.push(row);
    }
    Ok(json!(coords))
}

fn surface_checks(report: &mut Report, prefix: &str, pm: &PeriodMatrix, genus: usize) {
    let m = &pm.monodromy;
    report.push(
        &format!("{prefix}.genus"),
        "Riemann–Hurwitz genus from the monodromy",
        m.genus == genus,
        None,
        Some(format!("genus {}, expected {genus}", m.genus)),
    );
    report.push(&format!("{prefix}.transitive"), "monodromy group is transitive", m.transitive, None, None);
    report.push(
        &format!("{prefix}.infinity"),
        "product of loop permutations equals the permutation at ∞",
        m.relation_holds,
        None,
        None,
    );
    report.push(
        &format!("{prefix}.homology"),
        "basis intersection matrix unimodular, Riemann bilinear relations",
        pm.homology_consistent(1e-8),
        None,
        Some(format!("det J = {}, |ΩJ⁻¹Ωᵀ| = {:.1e}", pm.intersection_det, pm.riemann_first)),
    );
}

fn audit_json(pm: &PeriodMatrix) -> Value {
    let m = &pm.monodromy;
    json!({
        "curve": pm.curve,
        "basepoint": [m.basepoint.0, m.basepoint.1],
        "fiber": m.fiber.iter().map(|&z| c2(z)).collect::<Vec<_>>(),
        "loops": m.loops,
        "infinity": m.infinity,
        "cycles": pm.cycles.iter().map(|c| &c.word).collect::<Vec<_>>(),
        "basis": pm.basis,
        "intersection": pm.intersection,
    })
}

pub fn omega_new(cfg: &RunConfig) -> Result<msym::OmegaNew, Error> {
    progress(&format!("newform coefficients to n = {}", cfg.nmax));
    let tables = msym::load_tables(cfg.nmax, cfg.cache_dir.as_deref())?;
    progress("modular symbol integrals");
    msym::omega_new(&tables, cfg.tol)
}

pub fn periods(target: Target, cfg: &RunConfig) -> Result<Outcome, Error> {
    let mut report = Report::default();
    let mut summary = Vec::new();
    let started = Instant::now();
    let (data, audit) = match target {
        Target::X0121New => {
            let om = omega_new(cfg)?;
            let coords = membership_checks(&mut report, "periods.new", &om.omega, &[0, 1, 2, 3], 1e-6)?;
            report.push(
                "periods.new.doubling",
                "entries stable under doubling the number of terms",
                om.doubling_change < 1e-8,
                None,
                Some(format!("largest change {:.1e}", om.doubling_change)),
            );
            summary.push(format!("Ω_new: 4×8, largest doubling change {:.1e}", om.doubling_change));
            (json!({ "omega": matrix_json(&om.omega), "coordinates": coords, "integrals": om.info }), None)
        }
        Target::Xns11 | Target::Genus2 => {
            let (pm, rows, genus, prefix) = if target == Target::Xns11 {
                progress("monodromy and periods of the (T, Z) model");
                (riemann::omega_ns(cfg.bits, cfg.tol)?, vec![0, 1, 2, 3], 4, "periods.ns")
            } else {
                progress("monodromy and periods of the genus-2 quotient");
                (riemann::omega_genus2(cfg.bits, cfg.tol)?, vec![0, 3], 2, "periods.x")
            };
            surface_checks(&mut report, prefix, &pm, genus);
            let coords = membership_checks(&mut report, prefix, &pm.omega, &rows, 1e-5)?;
            if target == Target::Xns11 {
                progress("plane model on the series point");
                let series = riemann::series_check(&riemann::plane_model_xns().f, SERIES_CHECK_ORDER)?;
                report.records.extend(series.records.into_iter().filter(|r| r.check_id.starts_with("riemann.")));
            }
            summary.push(format!(
                "{}: {}×{}, genus {}, {} branch points, condition {:.2e}",
                pm.curve,
                pm.omega.len(),
                pm.omega[0].len(),
                pm.genus,
                pm.monodromy.loops.len(),
                pm.condition
            ));
            let data = json!({
                "omega": matrix_json(&pm.omega),
                "labels": pm.labels,
                "coordinates": coords,
                "condition": pm.condition,
                "evaluations": pm.monodromy.evaluations,
            });
            (data, cfg.audit.then(|| audit_json(&pm)))
        }
    };
    progress(&format!("done in {:.1}s", started.elapsed().as_secs_f64()));
    Ok(Outcome { report, data: json!({ "target": target, "result": data }), audit, summary })
}

pub fn isom_cmd(cfg: &RunConfig) -> Result<Outcome, Error> {
    let om = omega_new(cfg)?;
    progress("Ω_ns");
    let ns = riemann::omega_ns(cfg.bits, cfg.tol)?;
    progress("genus-2 periods");
    let x = riemann::omega_genus2(cfg.bits, cfg.tol)?;
    let ell = elliptic_lattices()?;
    let mut report = Report::default();
    let r = match isom::compare(&om.omega, &ns.omega, &x.omega, &ell) {
        Ok(r) => r,
        Err(Error::CheckFailed(msg)) => {
            report.push("isom.gl8", "M = [Re;Im(sΩ_ns)]⁻¹[Re;Im(Ω_new)] lies in GL₈(Z)", false, None, Some(msg));
            return Ok(Outcome { report, data: Value::Null, audit: None, summary: vec![] });
        }
        Err(e) => return Err(e),
    };
    let ints = |v: &[i64]| v.iter().map(|&x| rug::Integer::from(x)).collect::<Vec<_>>();
    report.push(
        "isom.gl8",
        "M = [Re;Im(sΩ_ns)]⁻¹[Re;Im(Ω_new)] lies in GL₈(Z)",
        r.gl8.residual < isom::INTEGRALITY_TOL && rug::Integer::from(r.gl8.det.abs_ref()) == 1,
        None,
        Some(format!("signs {:?}, det {}, residual {:.1e}", r.gl8.signs, r.gl8.det, r.gl8.residual)),
    );
    for (id, anchor, q, want) in [
        (
            "isom.quotient_new",
            "(Λ_A×Λ_B×Λ_C×Λ_D)/Λ_new ≅ (Z/2Z)²×(Z/6Z)²",
            &r.new_in_product,
            [1, 1, 1, 1, 2, 2, 6, 6].as_slice(),
        ),
        ("isom.quotient_ns", "(Λ_A×Λ_B×Λ_C×Λ_D)/Λ_ns ≅ (Z/2Z)²×(Z/6Z)²", &r.ns_in_product, &[1, 1, 1, 1, 2, 2, 6, 6]),
        ("isom.quotient_x", "(Λ_A×Λ_D)/Λ_X ≅ (Z/3Z)²", &r.x_in_ad, &[1, 1, 3, 3]),
    ] {
        report.push(
            id,
            anchor,
            q.invariant_factors == ints(want),
            None,
            Some(format!(
                "invariant factors {:?}",
                q.invariant_factors.iter().map(|x| x.to_string()).collect::<Vec<_>>()
            )),
        );
    }
    report.push(
        "isom.kernel",
        "kernel ≅ (Z/2Z)⁴×(Z/3Z)²",
        r.kernel == ints(&[2, 2, 2, 2, 3, 3]),
        None,
        Some(isom::group_string(&r.kernel)),
    );
    let summary = vec![
        format!("M ∈ GL₈(Z): det {}, signs {:?}, residual {:.1e}", r.gl8.det, r.gl8.signs, r.gl8.residual),
        format!("Λ_new quotient: {}", isom::group_string(&r.new_in_product.invariant_factors)),
        format!("Λ_ns quotient:  {}", isom::group_string(&r.ns_in_product.invariant_factors)),
        format!("Λ_X quotient:   {}", isom::group_string(&r.x_in_ad.invariant_factors)),
        format!("kernel:         {}", isom::group_string(&r.kernel)),
    ];
    let audit = cfg.audit.then(|| json!({ "xns11": audit_json(&ns), "genus2": audit_json(&x) }));
    Ok(Outcome { report, data: serde_json::to_value(&r).map_err(|e| Error::Io(e.to_string()))?, audit, summary })
}

/// JSON report; everything except `elapsed_seconds` is determined by the configuration and cache.
pub fn report_json(cli: &Cli, out: &Outcome, elapsed: f64) -> Value {
    let command = match &cli.command {
        Command::Verify { scope } => json!({ "verify": scope }),
        Command::Periods { target } => json!({ "periods": target }),
        Command::Isom => json!("isom"),
    };
    json!({
        "schema": SCHEMA,
        "command": command,
        "config": cli.config,
        "status": if out.report.all_pass() { "pass" } else { "fail" },
        "checks": out.report.records,
        "provenance": out.report.provenance,
        "data": out.data,
        "elapsed_seconds": elapsed,
    })
}

pub fn write_json(path: &Path, v: &Value) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Audit file written next to the JSON report.
pub fn audit_path(report: &Path) -> PathBuf {
    let stem = report.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    report.with_file_name(format!("{stem}.audit.json"))
}
