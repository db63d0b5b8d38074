//! Command-line front end: ingest group/action specifications, run defect
//! profiles, mean solves, and approximate-fixed-point traces, and emit
//! machine-readable reports.
//!
//! Exit codes: `0` success, `2` parse/validation failure, `3` resource
//! cap exceeded, `1` anything else. Reports are assembled in memory and
//! written only on success, so a nonzero exit never leaves partial output
//! files. Floats print with `.` decimal and 17 significant digits
//! (lossless round-trip for 64-bit values); identical inputs and flags
//! reproduce CSV bodies byte-for-byte except the `millis` column, whose
//! canonical home is the run manifest written next to each output file.
//!
//! The `DAYFLOW_CAP` environment variable overrides the enumeration cap
//! of every loaded group spec. All sampling (`selftest`) is seeded via
//! `--seed`, default 0.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::action::{afp_pipeline, canonical_action, AffineAction, AffineMap, Domain};
use crate::error::Error;
use crate::group::{Element, GroupSpec};
use crate::measure::MolecularMeasure;
use crate::solver::{
    day_convexify, defect_profile_jobs, folner_box, folner_uniform, generator_defect,
    max_defect, solve_invariant_mean, DefectKind, SolveConfig,
};
use crate::testfn::{defect_blip, displacement, LipschitzBallSpec, MetricSource, TestFunction};

/// Entry point for the `dayflow` binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            failure.code
        }
    }
}

#[derive(Parser)]
#[command(
    name = "dayflow",
    version,
    about = "Finitely supported means on discrete groups: defect minimization \
             and approximate fixed points for affine actions"
)]
struct Cli {
    /// Seed for all sampled checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for row-parallel profiles.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Defect profile over radii 0..=RADIUS: Følner baseline next to the
    /// LP optimum, one CSV row per radius, plus a run manifest.
    Defect {
        /// Path to a group spec JSON file, e.g. {"kind": "zd", "d": 1}.
        group: PathBuf,
        #[arg(long)]
        radius: u32,
        #[arg(long, value_enum, default_value_t = KindFlag::Tv)]
        kind: KindFlag,
        /// Metric for --kind blip.
        #[arg(long, value_enum, default_value_t = MetricFlag::Word)]
        metric: MetricFlag,
        /// Test-function family JSON (array) for --kind weak.
        #[arg(long)]
        family: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Minimize the worst per-generator defect at one radius; JSON report
    /// embedding the optimal mean.
    Solve {
        group: PathBuf,
        #[arg(long)]
        radius: u32,
        #[arg(long, value_enum, default_value_t = KindFlag::Tv)]
        kind: KindFlag,
        #[arg(long, value_enum, default_value_t = MetricFlag::Word)]
        metric: MetricFlag,
        #[arg(long)]
        family: Option<PathBuf>,
        /// Write the report here (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Push Følner or LP-optimal means through an affine action's orbit
    /// map and trace the fixed-point residuals (CSV + manifest).
    Afp {
        group: PathBuf,
        action: PathBuf,
        /// Base point, comma-separated, e.g. --x0 2.0,0.0
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        x0: Vec<f64>,
        /// Radius range, e.g. --radii 1..60 or a single radius.
        #[arg(long)]
        radii: String,
        #[arg(long, value_enum, default_value_t = MeanFlag::Folner)]
        mean: MeanFlag,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report the LP defect floor at one radius as JSON: a strictly
    /// positive floor is evidence (never proof) of non-amenability.
    Witness {
        group: PathBuf,
        #[arg(long)]
        radius: u32,
        /// Write the report here (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in invariant suite and exit nonzero on any failure.
    Selftest,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindFlag {
    Tv,
    Blip,
    Weak,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricFlag {
    Word,
    Discrete,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MeanFlag {
    Folner,
    Lp,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidArgument(_)
            | Error::UnsupportedOperation(_)
            | Error::Precondition(_) => 2,
            Error::ResourceLimit(_) => 3,
            Error::Solver(_) | Error::Internal(_) => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let jobs = cli.jobs.max(1);
    match cli.command {
        Command::Defect { group, radius, kind, metric, family, out } => {
            cmd_defect(&group, radius, kind, metric, family.as_deref(), &out, jobs)
        }
        Command::Solve { group, radius, kind, metric, family, out } => {
            cmd_solve(&group, radius, kind, metric, family.as_deref(), out.as_deref())
        }
        Command::Afp { group, action, x0, radii, mean, out } => {
            cmd_afp(&group, &action, &x0, &radii, mean, &out)
        }
        Command::Witness { group, radius, out } => cmd_witness(&group, radius, out.as_deref()),
        Command::Selftest => selftest(cli.seed),
    }
}

// ---------------------------------------------------------------------
// Input loading
// ---------------------------------------------------------------------

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| invalid(format!("{} is not valid JSON: {e}", path.display())))
}

fn load_group(path: &Path) -> Result<Arc<GroupSpec>, Failure> {
    let value = read_json(path)?;
    let mut spec = GroupSpec::from_json(&value)?;
    if let Ok(cap) = std::env::var("DAYFLOW_CAP") {
        let cap: usize = cap
            .parse()
            .map_err(|_| invalid(format!("DAYFLOW_CAP must be a positive integer, got {cap:?}")))?;
        spec.set_enumeration_cap(cap);
    }
    Ok(Arc::new(spec))
}

fn load_kind(
    spec: &Arc<GroupSpec>,
    kind: KindFlag,
    metric: MetricFlag,
    family: Option<&Path>,
) -> Result<DefectKind, Failure> {
    match kind {
        KindFlag::Tv => Ok(DefectKind::Tv),
        KindFlag::Blip => {
            let source = match metric {
                MetricFlag::Word => MetricSource::WordMetric,
                MetricFlag::Discrete => MetricSource::Discrete,
            };
            Ok(DefectKind::Blip(LipschitzBallSpec::new(source)))
        }
        KindFlag::Weak => {
            let path = family
                .ok_or_else(|| invalid("--kind weak requires --family <file>"))?;
            let value = read_json(path)?;
            let entries = value
                .as_array()
                .ok_or_else(|| invalid("family file must hold a JSON array"))?;
            let functions = entries
                .iter()
                .map(|v| TestFunction::from_json(spec.clone(), v))
                .collect::<Result<Vec<_>, _>>()?;
            if functions.is_empty() {
                return Err(invalid("family file holds an empty array"));
            }
            Ok(DefectKind::Weak(functions))
        }
    }
}

// ---------------------------------------------------------------------
// Output plumbing
// ---------------------------------------------------------------------

/// `.` decimal, 17 significant digits: lossless for 64-bit floats, and
/// `-0` is normalized so reruns are byte-identical.
fn fmt_float(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

/// Minimal CSV quoting: only needed for labels that carry commas
/// (e.g. direct-product group names).
fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// Write the run manifest next to `out`. Every listed output exists by
/// the time the manifest itself is written (it is written last).
fn write_manifest(
    out: &Path,
    command: &str,
    inputs: &[&Path],
    config: Value,
    started: Instant,
    timing: Value,
) -> Result<(), Failure> {
    let mpath = manifest_path(out);
    let manifest = json!({
        "command": command,
        "inputs": inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "config": config,
        "versions": {
            "dayflow": env!("CARGO_PKG_VERSION"),
            "profile_csv": 1,
            "afp_csv": 1,
            "report_json": 1,
        },
        "outputs": [out.display().to_string(), mpath.display().to_string()],
        "wall_millis": started.elapsed().as_millis() as u64,
        "timing": timing,
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&mpath, text)
        .map_err(|e| invalid(format!("cannot write {}: {e}", mpath.display())))?;
    Ok(())
}

fn write_output(path: &Path, body: &str) -> Result<(), Failure> {
    std::fs::write(path, body)
        .map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))
}

// ---------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------

fn kind_flag_label(kind: KindFlag, metric: MetricFlag) -> String {
    match kind {
        KindFlag::Tv => "tv".into(),
        KindFlag::Weak => "weak".into(),
        KindFlag::Blip => match metric {
            MetricFlag::Word => "blip:word".into(),
            MetricFlag::Discrete => "blip:discrete".into(),
        },
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_defect(
    group: &Path,
    radius: u32,
    kind_flag: KindFlag,
    metric: MetricFlag,
    family: Option<&Path>,
    out: &Path,
    jobs: usize,
) -> Result<(), Failure> {
    let started = Instant::now();
    let spec = load_group(group)?;
    let kind = load_kind(&spec, kind_flag, metric, family)?;
    let rows = defect_profile_jobs(&spec, radius, &kind, jobs)?;

    let group_label = csv_field(&spec.to_string());
    let kind_label = kind_flag_label(kind_flag, metric);
    let mut csv = String::from("r,group,kind,folner_defect,lp_defect,lp_status,millis\n");
    let mut row_millis = Vec::with_capacity(rows.len());
    for row in &rows {
        let millis = row.wall.as_millis() as u64;
        row_millis.push(millis);
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.radius,
            group_label,
            kind_label,
            fmt_float(row.folner_defect),
            fmt_float(row.lp_defect),
            row.status,
            millis,
        ));
    }
    write_output(out, &csv)?;
    write_manifest(
        out,
        "defect",
        &[group],
        json!({
            "radius": radius,
            "kind": kind_label,
            "family": family.map(|p| p.display().to_string()),
            "jobs": jobs,
        }),
        started,
        json!({ "row_millis": row_millis }),
    )
}

fn solve_report_json(
    spec: &Arc<GroupSpec>,
    report: &crate::solver::DefectReport,
    kind_label: &str,
) -> Result<Value, Failure> {
    let defects = report
        .generator_defects
        .iter()
        .map(|(g, d)| {
            Ok(json!({
                "generator": spec.element_to_json(g)?,
                "defect": d,
            }))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(json!({
        "group": spec.to_string(),
        "radius": report.radius,
        "kind": kind_label,
        "status": report.status.to_string(),
        "max_defect": report.max_defect,
        "generator_defects": defects,
        "measure": report.measure.to_json(None)?,
    }))
}

fn cmd_solve(
    group: &Path,
    radius: u32,
    kind_flag: KindFlag,
    metric: MetricFlag,
    family: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let started = Instant::now();
    let spec = load_group(group)?;
    let kind = load_kind(&spec, kind_flag, metric, family)?;
    let report = solve_invariant_mean(&spec, &SolveConfig::new(radius, kind))?;
    let kind_label = kind_flag_label(kind_flag, metric);
    let body = serde_json::to_string_pretty(&solve_report_json(&spec, &report, &kind_label)?)
        .expect("report serializes");
    match out {
        None => println!("{body}"),
        Some(path) => {
            write_output(path, &body)?;
            write_manifest(
                path,
                "solve",
                &[group],
                json!({
                    "radius": radius,
                    "kind": kind_label,
                    "family": family.map(|p| p.display().to_string()),
                }),
                started,
                Value::Null,
            )?;
        }
    }
    Ok(())
}

/// Parse `a..b` (inclusive) or a single radius `n`.
fn parse_radii(text: &str) -> Result<std::ops::RangeInclusive<u32>, Failure> {
    let bad = || invalid(format!("bad --radii {text:?}: expected N or A..B"));
    if let Some((a, b)) = text.split_once("..") {
        let a: u32 = a.trim().parse().map_err(|_| bad())?;
        let b: u32 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        Ok(a..=b)
    } else {
        let r: u32 = text.trim().parse().map_err(|_| bad())?;
        Ok(r..=r)
    }
}

fn cmd_afp(
    group: &Path,
    action_path: &Path,
    x0: &[f64],
    radii: &str,
    mean: MeanFlag,
    out: &Path,
) -> Result<(), Failure> {
    let started = Instant::now();
    let spec = load_group(group)?;
    let action_json = read_json(action_path)?;
    let action = AffineAction::from_json(spec.clone(), &action_json)?;
    let radii = parse_radii(radii)?;

    let mut means = Vec::new();
    for r in radii.clone() {
        let mu = match mean {
            MeanFlag::Folner => folner_uniform(&spec, r)?,
            MeanFlag::Lp => {
                solve_invariant_mean(&spec, &SolveConfig::new(r, DefectKind::Tv))?.measure
            }
        };
        means.push((r, mu));
    }
    let trace = afp_pipeline(&action, x0, &means)?;

    let generators = action.spec().generators().to_vec();
    let mut csv = String::from("r,tv_defect");
    for i in 0..generators.len() {
        csv.push_str(&format!(",residual_g{i}"));
    }
    csv.push_str(",residual_identity_error,residual_bound,orbit_diameter,orbit_escaped\n");
    for row in &trace.rows {
        csv.push_str(&format!("{},{}", row.radius, fmt_float(row.tv_defect)));
        for (g, r) in &row.residuals {
            debug_assert!(generators.contains(g));
            csv.push_str(&format!(",{}", fmt_float(*r)));
        }
        csv.push_str(&format!(
            ",{},{},{},{}\n",
            fmt_float(row.residual_identity_error),
            fmt_float(row.residual_bound),
            fmt_float(row.orbit_diameter),
            row.orbit_escaped,
        ));
    }
    write_output(out, &csv)?;
    let generator_names = generators
        .iter()
        .map(|g| spec.element_to_json(g))
        .collect::<Result<Vec<_>, Error>>()?;
    write_manifest(
        out,
        "afp",
        &[group, action_path],
        json!({
            "x0": x0,
            "radii": format!("{}..{}", radii.start(), radii.end()),
            "mean": match mean { MeanFlag::Folner => "folner", MeanFlag::Lp => "lp" },
            "generators": generator_names,
            "dimension": trace.dimension,
        }),
        started,
        Value::Null,
    )
}

fn cmd_witness(group: &Path, radius: u32, out: Option<&Path>) -> Result<(), Failure> {
    let started = Instant::now();
    let spec = load_group(group)?;
    let report = solve_invariant_mean(&spec, &SolveConfig::new(radius, DefectKind::Tv))?;
    // Either way the evidence is one radius deep, and the wording must not
    // overclaim: a positive floor rules out near-invariant means on this
    // ball only, and a zero floor says nothing about larger balls.
    let interpretation = if report.max_defect > 1e-9 {
        "defect>0 at this radius; not a proof of non-amenability"
    } else {
        "defect~0 at this radius; not a proof of amenability"
    };
    let body = serde_json::to_string_pretty(&json!({
        "group": spec.to_string(),
        "radius": radius,
        "lp_defect": report.max_defect,
        "lp_status": report.status.to_string(),
        "interpretation": interpretation,
    }))
    .expect("witness serializes");
    match out {
        None => println!("{body}"),
        Some(path) => {
            write_output(path, &body)?;
            write_manifest(
                path,
                "witness",
                &[group],
                json!({ "radius": radius }),
                started,
                Value::Null,
            )?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------
// Selftest
// ---------------------------------------------------------------------

/// One named selftest check.
type Check = (&'static str, Box<dyn Fn() -> Result<(), String>>);

/// Run the built-in invariant suite: one line per check, nonzero exit on
/// any failure. Sampled checks draw from `seed`.
fn selftest(seed: u64) -> Result<(), Failure> {
    let checks: Vec<Check> = vec![
        ("folner-decay-integers", Box::new(check_folner_decay)),
        ("folner-box-lattice", Box::new(check_folner_box)),
        ("finite-groups-exact", Box::new(check_finite_exact)),
        ("canonical-afp", Box::new(check_canonical_afp)),
        ("duality-rotation", Box::new(move || check_duality(seed))),
        ("equivariance-sample", Box::new(move || check_equivariance(seed))),
        ("blip-discrete-matches-tv", Box::new(move || check_blip_discrete(seed))),
        ("day-midpoint", Box::new(check_day_midpoint)),
        ("free-group-floor", Box::new(check_free_group_floor)),
    ];
    let mut failures = 0;
    for (name, check) in checks {
        match check() {
            Ok(()) => println!("ok   {name}"),
            Err(msg) => {
                println!("FAIL {name}: {msg}");
                failures += 1;
            }
        }
    }
    if failures > 0 {
        return Err(Failure {
            code: 1,
            message: format!("{failures} selftest check(s) failed"),
        });
    }
    println!("selftest: all checks passed");
    Ok(())
}

fn ints(v: &[i64]) -> Element {
    Element::Ints(v.to_vec())
}

fn check<T: std::fmt::Debug>(ok: bool, context: &str, value: T) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(format!("{context} (got {value:?})"))
    }
}

fn check_folner_decay() -> Result<(), String> {
    let z = crate::group::shared(crate::group::GroupKind::Zd { d: 1 }).map_err(|e| e.to_string())?;
    for r in [0u32, 1, 5, 20] {
        let mu = folner_uniform(&z, r).map_err(|e| e.to_string())?;
        let d = generator_defect(&mu, &ints(&[1]), &DefectKind::Tv).map_err(|e| e.to_string())?;
        let expect = 2.0 / (2.0 * r as f64 + 1.0);
        check((d - expect).abs() <= 1e-12, &format!("defect at r={r}"), d)?;
    }
    Ok(())
}

fn check_folner_box() -> Result<(), String> {
    let z2 = crate::group::shared(crate::group::GroupKind::Zd { d: 2 }).map_err(|e| e.to_string())?;
    for n in [2u64, 5, 10] {
        let mu = folner_box(&z2, &[n, n]).map_err(|e| e.to_string())?;
        for s in z2.generators() {
            let d = generator_defect(&mu, s, &DefectKind::Tv).map_err(|e| e.to_string())?;
            check((d - 2.0 / n as f64).abs() <= 1e-12, &format!("box defect n={n}"), d)?;
        }
    }
    Ok(())
}

fn check_finite_exact() -> Result<(), String> {
    for (kind, radius) in [
        (crate::group::GroupKind::FiniteCyclic { n: 6 }, 3),
        (crate::group::GroupKind::Symmetric { n: 3 }, 3),
    ] {
        let spec = crate::group::shared(kind).map_err(|e| e.to_string())?;
        let report = solve_invariant_mean(&spec, &SolveConfig::new(radius, DefectKind::Tv))
            .map_err(|e| e.to_string())?;
        check(report.max_defect <= 1e-9, &format!("{spec} optimum"), report.max_defect)?;
    }
    Ok(())
}

fn check_canonical_afp() -> Result<(), String> {
    let c6 = crate::group::shared(crate::group::GroupKind::FiniteCyclic { n: 6 })
        .map_err(|e| e.to_string())?;
    let action = canonical_action(&c6).map_err(|e| e.to_string())?;
    let mut x0 = vec![0.0; 6];
    x0[0] = 1.0;
    let mu = solve_invariant_mean(&c6, &SolveConfig::new(3, DefectKind::Tv))
        .map_err(|e| e.to_string())?
        .measure;
    let trace = afp_pipeline(&action, &x0, &[(3, mu)]).map_err(|e| e.to_string())?;
    let row = &trace.rows[0];
    check(row.max_residual <= 1e-9, "canonical residual", row.max_residual)?;
    check(
        row.residual_identity_error <= 1e-10,
        "residual identity",
        row.residual_identity_error,
    )
}

fn rotation_about(center: [f64; 2], angle: f64) -> Result<AffineAction, Error> {
    let z = crate::group::shared(crate::group::GroupKind::Zd { d: 1 })?;
    let (s, c) = angle.sin_cos();
    let forward = [[c, -s], [s, c]];
    let backward = [[c, s], [-s, c]];
    let build = |m: [[f64; 2]; 2]| -> Result<AffineMap, Error> {
        let offset = [
            center[0] - m[0][0] * center[0] - m[0][1] * center[1],
            center[1] - m[1][0] * center[0] - m[1][1] * center[1],
        ];
        AffineMap::new(vec![m[0].to_vec(), m[1].to_vec()], offset.to_vec())
    };
    AffineAction::new(
        z,
        [(ints(&[1]), build(forward)?), (ints(&[-1]), build(backward)?)],
        Domain::Ball { center: center.to_vec(), radius: 8.0 },
    )
}

fn check_duality(seed: u64) -> Result<(), String> {
    let action = rotation_about([1.0, 0.0], std::f64::consts::FRAC_PI_3)
        .map_err(|e| e.to_string())?;
    let spec = action.spec().clone();
    let x0 = [2.0, 0.0];
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd0a1);
    for _ in 0..200 {
        let xi = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let pairs: Vec<(Element, f64)> = (-3..=3)
            .map(|k| (ints(&[k]), rng.random_range(-1.0..1.0)))
            .collect();
        let mu = MolecularMeasure::from_weights(spec.clone(), pairs).map_err(|e| e.to_string())?;
        let lhs = {
            let point =
                crate::action::orbit_average(&mu, &action, &x0).map_err(|e| e.to_string())?;
            xi[0] * point[0] + xi[1] * point[1]
        };
        let pulled = crate::action::pullback_functional(&xi, &action, &x0, 3)
            .map_err(|e| e.to_string())?;
        let rhs = mu.evaluate(&pulled).map_err(|e| e.to_string())?;
        check((lhs - rhs).abs() <= 1e-12, "duality pairing", lhs - rhs)?;
    }
    Ok(())
}

fn check_equivariance(seed: u64) -> Result<(), String> {
    use crate::group::GroupKind;
    let kinds = [
        GroupKind::Zd { d: 2 },
        GroupKind::FiniteCyclic { n: 7 },
        GroupKind::Symmetric { n: 4 },
        GroupKind::FreeGroup { rank: 2 },
        GroupKind::Lamplighter,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0e11);
    for kind in kinds {
        let spec = crate::group::shared(kind).map_err(|e| e.to_string())?;
        let ball = spec.ball(2).map_err(|e| e.to_string())?;
        for _ in 0..50 {
            let s = ball[rng.random_range(0..ball.len())].clone();
            let t = ball[rng.random_range(0..ball.len())].clone();
            let delta = MolecularMeasure::point_mass(spec.clone(), t.clone())
                .map_err(|e| e.to_string())?;
            let moved = delta.convolve_left(&s).map_err(|e| e.to_string())?;
            let st = spec.multiply(&s, &t).map_err(|e| e.to_string())?;
            let expect =
                MolecularMeasure::point_mass(spec.clone(), st).map_err(|e| e.to_string())?;
            if moved != expect {
                return Err(format!("point-mass convolution mismatch on {spec}"));
            }
            let pairs: Vec<(Element, f64)> = ball
                .iter()
                .map(|e| (e.clone(), rng.random_range(0.0..1.0)))
                .collect();
            let total: f64 = pairs.iter().map(|(_, w)| w).sum();
            let mu = MolecularMeasure::from_weights(
                spec.clone(),
                pairs.into_iter().map(|(e, w)| (e, w / total)),
            )
            .map_err(|e| e.to_string())?;
            let assoc_a = mu
                .convolve_left(&t)
                .and_then(|m| m.convolve_left(&s))
                .map_err(|e| e.to_string())?;
            let st = spec.multiply(&s, &t).map_err(|e| e.to_string())?;
            let assoc_b = mu.convolve_left(&st).map_err(|e| e.to_string())?;
            if assoc_a != assoc_b {
                return Err(format!("convolution associativity mismatch on {spec}"));
            }
            if !assoc_a.is_mean(0.0) && mu.is_mean(0.0) {
                return Err(format!("convolution broke a mean on {spec}"));
            }
        }
    }
    Ok(())
}

fn check_blip_discrete(seed: u64) -> Result<(), String> {
    let z = crate::group::shared(crate::group::GroupKind::Zd { d: 1 }).map_err(|e| e.to_string())?;
    let ball = LipschitzBallSpec::new(MetricSource::Discrete);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb119);
    for _ in 0..10 {
        let pairs: Vec<(Element, f64)> = (-2..=2)
            .map(|k| (ints(&[k]), rng.random_range(0.0..1.0)))
            .collect();
        let total: f64 = pairs.iter().map(|(_, w)| w).sum();
        let mu = MolecularMeasure::from_weights(
            z.clone(),
            pairs.into_iter().map(|(e, w)| (e, w / total)),
        )
        .map_err(|e| e.to_string())?;
        let s = ints(&[1]);
        let blip = defect_blip(&mu, &s, &ball).map_err(|e| e.to_string())?;
        let tv = displacement(&mu, &s).map_err(|e| e.to_string())?.tv_norm();
        let expect = tv.min(2.0);
        check((blip - expect).abs() <= 1e-7, "discrete-metric defect", blip - expect)?;
    }
    Ok(())
}

fn check_day_midpoint() -> Result<(), String> {
    let action =
        rotation_about([0.0, 0.0], std::f64::consts::PI).map_err(|e| e.to_string())?;
    let x = vec![1.0, 0.5];
    let sx = action.act_generator(&ints(&[1]), &x).map_err(|e| e.to_string())?;
    let report = day_convexify(&[x, sx], &action).map_err(|e| e.to_string())?;
    check(report.max_residual <= 1e-9, "midpoint residual", report.max_residual)
}

fn check_free_group_floor() -> Result<(), String> {
    let f2 = crate::group::shared(crate::group::GroupKind::FreeGroup { rank: 2 })
        .map_err(|e| e.to_string())?;
    let report = solve_invariant_mean(&f2, &SolveConfig::new(1, DefectKind::Tv))
        .map_err(|e| e.to_string())?;
    check((report.max_defect - 1.2).abs() <= 1e-7, "radius-1 floor", report.max_defect)?;
    let z = crate::group::shared(crate::group::GroupKind::Zd { d: 1 }).map_err(|e| e.to_string())?;
    let zr = solve_invariant_mean(&z, &SolveConfig::new(4, DefectKind::Tv))
        .map_err(|e| e.to_string())?;
    check(zr.max_defect <= 2.0 / 9.0 + 1e-9, "integer window bound", zr.max_defect)?;
    let _ = max_defect(
        &folner_uniform(&z, 4).map_err(|e| e.to_string())?,
        z.generators(),
        &DefectKind::Tv,
    )
    .map_err(|e| e.to_string())?;
    Ok(())
}
