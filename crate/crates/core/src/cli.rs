//! Command-line front end. Every command writes one report (JSON, or CSV for
//! tables) to `--out` or stdout. Exit codes: 0 when every check passes, 1 on
//! a failed check, 2 on bad input.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::One;
use serde_json::{json, Value};

use crate::cfl::{
    cfl_conflict_graph, cfl_core, exact_ef, exact_ef_check, first_gap_above_one, fmt_set,
    gap_table, make_instance, parse_set, sample_pairs, verify_pair, CapacitatedInstance,
    PairOptions,
};
use crate::corelab::{build_conflicts, separation_bound_report, valid_rho, verify_edges, Core};
use crate::exactlp::{contains, fmt_rat, parse_rat, project_onto, HPolyhedron, Rational};
use crate::hull::{conv_hull_hrep, mixed_integer_vertices, VPolytope};
use crate::product::{
    check_sandwich, translate_ef, translate_mixed_ef, MixedSectionTable, SectionTable, Translation,
};
use crate::sa::{max_level_within_budget, sa_lift, sa_project, sa_size_bound};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "prodrel",
    version,
    about = "Exact lift-and-project and extended formulation checks"
)]
struct Cli {
    /// Seed for every sampled key set and pair.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Report path (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sherali-Adams lift of a polyhedron file, optionally projected back.
    Sa(SaArgs),
    /// Size bound r·C(n,t)·2^t and the largest level within 2^(δn).
    SaBound(SaBoundArgs),
    /// Translate an extended formulation along a section and check both inclusions.
    Translate(TranslateArgs),
    /// Capacitated facility location suites.
    #[command(subcommand)]
    Cfl(CflCommand),
    /// Conflict hypergraph and chromatic bound for a core.
    Corelab(CorelabArgs),
}

#[derive(Debug, Args)]
struct SaArgs {
    /// Polyhedron file (`vars:` header, one row per line).
    file: PathBuf,
    #[arg(long)]
    level: usize,
    /// Comma-separated integer variables (default: all).
    #[arg(long, value_delimiter = ',')]
    integer: Option<Vec<String>>,
    /// Project back and compare with the previous level.
    #[arg(long)]
    project: bool,
    /// Write the lifted (or projected) system here.
    #[arg(long)]
    system: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SaBoundArgs {
    /// Rows of the input system.
    #[arg(long)]
    r: u64,
    /// Integer variables.
    #[arg(long)]
    n: usize,
    /// Budget exponent: sizes up to 2^(delta·n).
    #[arg(long, value_parser = rational)]
    delta: Rational,
    /// Levels to tabulate (default: 0..=n).
    #[arg(long, value_delimiter = ',')]
    t: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
struct TranslateArgs {
    /// Extended formulation `Q(x, [w,] y)`.
    q: PathBuf,
    /// Section file.
    section: PathBuf,
    /// Number of leading 0/1 variables.
    #[arg(long)]
    dx: usize,
    /// Number of fractional original variables; a positive value reads a
    /// mixed-linear section.
    #[arg(long, default_value_t = 0)]
    dw: usize,
    /// Write T[Q] here.
    #[arg(long)]
    system: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum CflCommand {
    /// Core of the instance family at size n, optionally with sampled pair checks.
    Core(CflCoreArgs),
    /// All checks for one pair of core members.
    VerifyPair(VerifyPairArgs),
    /// Exact fractional cost and gap ratio per n.
    GapTable(GapTableArgs),
    /// The 2^N-size exact formulation of a small capacitated instance.
    ExactEf(ExactEfArgs),
}

#[derive(Debug, Args)]
struct CflCoreArgs {
    #[arg(long)]
    n: usize,
    /// Pairs to verify directly; the rest follow by symmetry.
    #[arg(long, default_value_t = 0)]
    pairs: usize,
    #[arg(long, value_parser = rational, default_value = "1")]
    rho: Rational,
    /// Skip the conflict LP in pair checks.
    #[arg(long)]
    no_lp: bool,
}

#[derive(Debug, Args)]
struct VerifyPairArgs {
    #[arg(long)]
    n: usize,
    /// 1-based facility set, e.g. `{6,7,8,9,10}`.
    #[arg(long)]
    l: String,
    #[arg(long = "lp")]
    lp: String,
    /// Largest pure key size in the check window.
    #[arg(long, default_value_t = 3)]
    window: usize,
    /// Seeded large keys added to the window.
    #[arg(long, default_value_t = 200)]
    extra: usize,
    #[arg(long)]
    no_lp: bool,
}

#[derive(Debug, Args)]
struct GapTableArgs {
    #[arg(long, default_value_t = 4)]
    from: usize,
    #[arg(long, default_value_t = 32)]
    to: usize,
}

#[derive(Debug, Args)]
struct ExactEfArgs {
    /// Comma-separated capacities, one per facility.
    #[arg(long, value_delimiter = ',', value_parser = rational, required = true)]
    capacities: Vec<Rational>,
    #[arg(long)]
    clients: usize,
    /// Project onto (y, x) and compare with the mixed-integer hull.
    #[arg(long)]
    check: bool,
    #[arg(long)]
    system: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CorelabArgs {
    /// Core points (`dims:` header, one point per line).
    #[arg(long)]
    core: PathBuf,
    /// Vertices of the canonical relaxation, same format.
    #[arg(long)]
    dhat: PathBuf,
    /// Gap tags: lines `index: w1 w2 … | opt` (index 0-based).
    #[arg(long)]
    tags: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    max_arity: usize,
    #[arg(long, value_parser = rational, default_value = "1")]
    rho: Rational,
}

fn rational(s: &str) -> std::result::Result<Rational, String> {
    parse_rat(s).ok_or_else(|| format!("`{s}` is not a rational number"))
}

/// What a command produced: the report body and whether every check passed.
struct Outcome {
    report: Report,
    passed: bool,
}

enum Report {
    Json(Value),
    Table {
        header: Vec<String>,
        rows: Vec<Vec<String>>,
    },
}

impl Report {
    fn render(&self, format: Format) -> Result<String> {
        match (self, format) {
            (Report::Json(v), Format::Json) => {
                Ok(serde_json::to_string_pretty(v).expect("serializable") + "\n")
            }
            (Report::Table { header, rows }, Format::Csv) => {
                let mut s = header.join(",") + "\n";
                for r in rows {
                    s += &r.join(",");
                    s.push('\n');
                }
                Ok(s)
            }
            (Report::Json(_), Format::Csv) => {
                Err(Error::Input("this command only reports JSON".into()))
            }
            (Report::Table { .. }, Format::Json) => unreachable!("tables are built for CSV only"),
        }
    }
}

fn check(name: &str, passed: bool, witness: Option<Value>) -> Value {
    let mut v = json!({"name": name, "status": if passed { "PASS" } else { "FAIL" }});
    if let Some(w) = witness {
        v["witness"] = w;
    }
    v
}

fn all_pass(checks: &[Value]) -> bool {
    checks.iter().all(|c| c["status"] == "PASS")
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn read_poly(path: &Path) -> Result<HPolyhedron> {
    HPolyhedron::parse(&read(path)?).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

/// `conv` of the mixed-integer points of `p`, in `p`'s variable order.
fn integer_hull(p: &HPolyhedron, ints: &[String]) -> Result<HPolyhedron> {
    let mut order: Vec<String> = ints.to_vec();
    order.extend(p.vars().iter().filter(|v| !ints.contains(v)).cloned());
    let mut points = Vec::new();
    for (a, verts) in mixed_integer_vertices(p, ints)? {
        for w in verts {
            let mut q = a.int_values();
            q.extend(w);
            points.push(q);
        }
    }
    conv_hull_hrep(&order, &points)?.reorder(p.vars())
}

fn cmd_sa(a: &SaArgs) -> Result<Outcome> {
    let p = read_poly(&a.file)?;
    let ints = a.integer.clone().unwrap_or_else(|| p.vars().to_vec());
    let lifted = sa_lift(&p, &ints, a.level)?;
    let mut report = json!({
        "command": "sa",
        "level": a.level,
        "integer_vars": ints,
        "input_rows": p.num_rows(),
        "lifted_vars": lifted.lifted.len(),
        "lifted_rows": lifted.base.num_rows(),
    });
    let mut checks = Vec::new();
    let system = if a.project {
        let proj = sa_project(&lifted)?;
        if a.level > 0 {
            let prev = sa_project(&sa_lift(&p, &ints, a.level - 1)?)?;
            checks.push(check("contains-previous", contains(&prev, &proj)?, None));
        }
        let hull = integer_hull(&p, &ints)?;
        checks.push(check(
            "contains-integer-hull",
            contains(&proj, &hull)?,
            None,
        ));
        if a.level >= ints.len() {
            checks.push(check("equals-integer-hull", contains(&hull, &proj)?, None));
        }
        report["projected_rows"] = json!(proj.num_rows());
        proj.to_string()
    } else {
        lifted.base.to_string()
    };
    match &a.system {
        Some(path) => write(path, &system)?,
        None => report["system"] = json!(system),
    }
    let passed = all_pass(&checks);
    report["checks"] = json!(checks);
    Ok(Outcome {
        report: Report::Json(report),
        passed,
    })
}

fn cmd_sa_bound(a: &SaBoundArgs, format: Format) -> Result<Outcome> {
    let levels: Vec<usize> = a.t.clone().unwrap_or_else(|| (0..=a.n).collect());
    let max = max_level_within_budget(a.r, a.n, &a.delta)?;
    let mut rows = Vec::new();
    for &t in &levels {
        let b = sa_size_bound(a.r, a.n, t)?;
        rows.push((t, b.to_string(), max.is_some_and(|m| t <= m)));
    }
    let report = match format {
        Format::Csv => Report::Table {
            header: vec!["t".into(), "bound".into(), "within_budget".into()],
            rows: rows
                .iter()
                .map(|(t, b, w)| vec![t.to_string(), b.clone(), w.to_string()])
                .collect(),
        },
        Format::Json => Report::Json(json!({
            "command": "sa-bound",
            "formula": "r * C(n,t) * 2^t",
            "r": a.r,
            "n": a.n,
            "delta": fmt_rat(&a.delta),
            "budget_log2": fmt_rat(&(&a.delta * Rational::from_integer(a.n.into()))),
            "max_level": max,
            "rows": rows
                .iter()
                .map(|(t, b, w)| json!({"t": t, "bound": b, "within_budget": w}))
                .collect::<Vec<_>>(),
        })),
    };
    Ok(Outcome {
        report,
        passed: true,
    })
}

fn sandwich_points(
    q: &HPolyhedron,
    original: &[String],
    ints: &[String],
) -> Result<Vec<Vec<Rational>>> {
    let dom = project_onto(q, original)?;
    let mut points = Vec::new();
    for (a, verts) in mixed_integer_vertices(&dom, ints)? {
        for w in verts {
            let mut p = a.int_values();
            p.extend(w);
            points.push(p);
        }
    }
    Ok(points)
}

fn cmd_translate(a: &TranslateArgs) -> Result<Outcome> {
    let q = read_poly(&a.q)?;
    let text = read(&a.section)?;
    if a.dx + a.dw > q.dim() {
        return Err(Error::Input("more original variables than columns".into()));
    }
    let built: Result<Translation> = if a.dw == 0 {
        SectionTable::parse(&text, q.vars(), a.dx).and_then(|g| translate_ef(&q, a.dx, &g))
    } else {
        MixedSectionTable::parse(&text, q.vars(), a.dx, a.dw)
            .and_then(|g| translate_mixed_ef(&q, a.dx, a.dw, &g, None))
    };
    let t = match built {
        Ok(t) => t,
        Err(e @ (Error::Section(_) | Error::Precondition(_))) => {
            let report = json!({
                "command": "translate",
                "checks": [check("section", false, Some(json!(e.to_string())))],
            });
            return Ok(Outcome {
                report: Report::Json(report),
                passed: false,
            });
        }
        Err(e) => return Err(e),
    };
    let original = q.vars()[..a.dx + a.dw].to_vec();
    let points = sandwich_points(&q, &original, &original[..a.dx])?;
    let s = check_sandwich(&q, &t, &points)?;
    let witness = s.failure.clone().map(Value::String);
    let checks = vec![
        check("section", true, None),
        check(
            "proj(T[Q]) <= proj(Q)",
            s.upper,
            if s.upper { None } else { witness.clone() },
        ),
        check(
            "conv(X) <= proj(T[Q])",
            s.lower,
            if s.lower { None } else { witness.clone() },
        ),
        check(
            "images-feasible",
            s.images_feasible,
            if s.images_feasible { None } else { witness },
        ),
        check(
            "row-count",
            s.rows_q == s.rows_t,
            Some(json!({"Q": s.rows_q, "T[Q]": s.rows_t})),
        ),
    ];
    let mut report = json!({
        "command": "translate",
        "d_x": a.dx,
        "d_w": a.dw,
        "points": points.len(),
        "rows_q": s.rows_q,
        "rows_t": s.rows_t,
        "keys": t.keys.iter().map(|k| k.to_string()).collect::<Vec<_>>(),
    });
    let system = t.poly.to_string();
    match &a.system {
        Some(path) => write(path, &system)?,
        None => report["translation"] = json!(system),
    }
    let passed = s.passed();
    report["checks"] = json!(checks);
    Ok(Outcome {
        report: Report::Json(report),
        passed,
    })
}

fn cmd_cfl_core(a: &CflCoreArgs, seed: u64) -> Result<Outcome> {
    let inst = make_instance(a.n)?;
    let (sets, core) = cfl_core(&inst)?;
    let expected = crate::sa::binomial(2 * a.n, a.n);
    let mut checks = vec![check(
        "core-size",
        expected == core.len().into(),
        Some(json!({"size": core.len(), "expected": expected.to_string()})),
    )];
    let tag = core.gap_tags[0].as_ref().expect("tagged");
    let mut report = json!({
        "command": "cfl core",
        "instance": {"n": a.n, "m": inst.m(), "U": fmt_rat(inst.capacity())},
        "seed": seed,
        "core_size": core.len(),
        "window": core.keys.len(),
        "frac_cost": fmt_rat(&tag.frac_value),
        "int_opt_lower_bound": fmt_rat(&tag.int_opt),
        "gap_inducing": tag.holds(&Rational::one()),
    });
    if a.pairs > 0 {
        let pairs = sample_pairs(&sets, a.pairs, seed);
        let mut opts = PairOptions::standard(&inst, seed);
        opts.conflict_lp = !a.no_lp;
        let (h, reports) = cfl_conflict_graph(&inst, &sets, &pairs, &opts)?;
        let failed: Vec<Value> = reports
            .iter()
            .filter(|r| !r.passed())
            .map(|r| json!({"l": fmt_set(r.l), "l'": fmt_set(r.lp)}))
            .collect();
        checks.push(check(
            "pairs",
            failed.is_empty(),
            Some(json!({"verified": reports.len(), "failed": failed})),
        ));
        let sep = separation_bound_report(&core, &h, &a.rho);
        checks.push(check(
            "clique-bound",
            sep.chromatic.bound == core.len(),
            Some(json!({"bound": sep.chromatic.bound})),
        ));
        report["pairs"] = json!(reports
            .iter()
            .map(|r| json!({
                "l": fmt_set(r.l),
                "l'": fmt_set(r.lp),
                "overlap": (r.l & r.lp).count_ones(),
                "status": if r.passed() { "PASS" } else { "FAIL" },
            }))
            .collect::<Vec<_>>());
        report["separation"] = sep.to_json();
    }
    let passed = all_pass(&checks);
    report["checks"] = json!(checks);
    Ok(Outcome {
        report: Report::Json(report),
        passed,
    })
}

fn cmd_verify_pair(a: &VerifyPairArgs, seed: u64) -> Result<Outcome> {
    let inst = make_instance(a.n)?;
    let l = parse_set(&a.l)?;
    let lp = parse_set(&a.lp)?;
    let mut opts = PairOptions::standard(&inst, seed);
    opts.window.max_pure = a.window;
    opts.window.extra = a.extra;
    opts.conflict_lp = !a.no_lp;
    let r = verify_pair(&inst, l, lp, &opts)?;
    let mut report = r.to_json();
    report["seed"] = json!(seed);
    Ok(Outcome {
        passed: r.passed(),
        report: Report::Json(report),
    })
}

fn cmd_gap_table(a: &GapTableArgs, format: Format) -> Result<Outcome> {
    if a.from > a.to {
        return Err(Error::Input("empty range".into()));
    }
    let rows = gap_table(a.from, a.to);
    let report = match format {
        Format::Csv => Report::Table {
            header: vec![
                "n".into(),
                "frac_cost".into(),
                "ratio".into(),
                "normalized".into(),
            ],
            rows: rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        fmt_rat(&r.frac_cost),
                        fmt_rat(&r.ratio),
                        fmt_rat(&r.normalized),
                    ]
                })
                .collect(),
        },
        Format::Json => Report::Json(json!({
            "command": "cfl gap-table",
            "formula": "frac_cost = 20*2^(n-1)/(n(1+1/n)(2^n-1)); ratio = 1/frac_cost; normalized = ratio*10/(n+1)",
            "rows": rows.iter().map(|r| json!({
                "n": r.n,
                "frac_cost": fmt_rat(&r.frac_cost),
                "ratio": fmt_rat(&r.ratio),
                "normalized": fmt_rat(&r.normalized),
            })).collect::<Vec<_>>(),
            "first_ratio_above_one": first_gap_above_one(&rows),
        })),
    };
    Ok(Outcome {
        report,
        passed: true,
    })
}

fn cmd_exact_ef(a: &ExactEfArgs) -> Result<Outcome> {
    let inst = CapacitatedInstance::new(a.capacities.clone(), a.clients)?;
    let mut report = json!({
        "command": "cfl exact-ef",
        "facilities": inst.facilities(),
        "clients": a.clients,
        "capacities": a.capacities.iter().map(fmt_rat).collect::<Vec<_>>(),
    });
    let ef = exact_ef(&inst)?;
    report["rows"] = json!(ef.num_rows());
    report["vars"] = json!(ef.dim());
    if let Some(path) = &a.system {
        write(path, &ef.to_string())?;
    }
    let mut passed = true;
    if a.check {
        let r = exact_ef_check(&inst)?;
        passed = r.passed();
        report["checks"] = json!([
            check("projection <= hull", r.projection_in_hull, None),
            check("hull <= projection", r.hull_in_projection, None),
            check(
                "integral-y",
                r.integral_y,
                Some(json!({"vertices": r.vertices.len()})),
            ),
        ]);
    }
    Ok(Outcome {
        report: Report::Json(report),
        passed,
    })
}

/// Lines `index: w1 w2 … | opt`.
fn parse_tags(text: &str, core: &mut Core) -> Result<()> {
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |m: &str| Error::Parse {
            line: i + 1,
            msg: m.to_string(),
        };
        let (idx, rest) = line.split_once(':').ok_or_else(|| bad("missing `:`"))?;
        let (w, opt) = rest.split_once('|').ok_or_else(|| bad("missing `|`"))?;
        let idx: usize = idx.trim().parse().map_err(|_| bad("bad index"))?;
        if idx >= core.len() {
            return Err(bad("index out of range"));
        }
        let w = w
            .split_whitespace()
            .map(|t| parse_rat(t).ok_or_else(|| bad("bad number")))
            .collect::<Result<Vec<_>>>()?;
        let opt = parse_rat(opt.trim()).ok_or_else(|| bad("bad optimum"))?;
        core.tag(idx, w, opt).map_err(|e| bad(&e.to_string()))?;
    }
    Ok(())
}

fn cmd_corelab(a: &CorelabArgs) -> Result<Outcome> {
    if !valid_rho(&a.rho) {
        return Err(Error::Input("rho must be at least 1".into()));
    }
    let pts = VPolytope::parse(&read(&a.core)?)?;
    let mut core = Core::new(
        a.core.display().to_string(),
        pts.labels().to_vec(),
        pts.vertices().to_vec(),
    )?;
    if let Some(t) = &a.tags {
        parse_tags(&read(t)?, &mut core)?;
    }
    let dhat = VPolytope::parse(&read(&a.dhat)?)?.select(&core.keys)?;
    let h = build_conflicts(&core, &dhat, a.max_arity)?;
    let verified = verify_edges(&core, &dhat, &h);
    let sep = separation_bound_report(&core, &h, &a.rho);
    let mut report = json!({"command": "corelab", "max_arity": a.max_arity});
    report["separation"] = sep.to_json();
    report["edges"] = json!(h
        .edges
        .iter()
        .map(|e| e.vertices.clone())
        .collect::<Vec<_>>());
    report["checks"] = json!([check("edges-verified", verified, None)]);
    Ok(Outcome {
        report: Report::Json(report),
        passed: verified,
    })
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Sa(a) => cmd_sa(a),
        Command::SaBound(a) => cmd_sa_bound(a, cli.format),
        Command::Translate(a) => cmd_translate(a),
        Command::Cfl(CflCommand::Core(a)) => cmd_cfl_core(a, cli.seed),
        Command::Cfl(CflCommand::VerifyPair(a)) => cmd_verify_pair(a, cli.seed),
        Command::Cfl(CflCommand::GapTable(a)) => cmd_gap_table(a, cli.format),
        Command::Cfl(CflCommand::ExactEf(a)) => cmd_exact_ef(a),
        Command::Corelab(a) => cmd_corelab(a),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Validity(_) | Error::Precondition(_) | Error::Infeasible(_) | Error::Section(_) => 1,
        _ => 2,
    }
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code.
pub fn run<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match cli.jobs {
        Some(0) => Err(Error::Input("--jobs must be positive".into())),
        Some(j) => match rayon::ThreadPoolBuilder::new().num_threads(j).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(Error::Input(e.to_string())),
        },
        None => dispatch(&cli),
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let text = match outcome.report.render(cli.format) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = write(path, &text) {
                eprintln!("error: {e}");
                return 2;
            }
        }
        None => print!("{text}"),
    }
    if outcome.passed {
        0
    } else {
        1
    }
}
