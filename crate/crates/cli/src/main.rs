//! `toric-ding` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid polytope, 3 solve refused
//! (unstable), 4 solver did not converge.

mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use num_traits::{Signed, Zero};
use serde_json::Value;

use toric_ding::catalog::{builtin_catalog, lookup};
use toric_ding::functional::{prekopa_suite, properness_family, properness_probe, DEFAULT_SPACING, DEFAULT_TAIL_TOL};
use toric_ding::invariants::{solve_l, stability_report_for, StabilityReport, DEFAULT_WEDGE_STEPS};
use toric_ding::report::{self, PolytopeDoc};
use toric_ding::scalar::{rational_string, rational_to_f64, Rational};
use toric_ding::solver::{export_metric, solve, SolverConfig};
use toric_ding::{Error, ReflexivePolytope};

/// Overrides the default output directory of `solve` and of plots.
const OUT_DIR_VAR: &str = "TORIC_DING_OUT";

#[derive(Debug, Parser)]
#[command(name = "toric-ding", version, about = "Ding stability invariants and generalized Kähler-Einstein solver for toric Fano manifolds")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Also write plots.
    #[arg(long, global = true, value_enum)]
    plot: Option<Plot>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Plot {
    Svg,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Built-in polytopes.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Validate a polytope and print its facets and moments.
    Info { target: String },
    /// The affine function l, alpha and lambda.
    Alpha { target: String },
    /// Full stability report with wedge probes.
    Stability {
        target: String,
        /// Wedge steps per vertex.
        #[arg(long, default_value_t = DEFAULT_WEDGE_STEPS)]
        steps: usize,
    },
    /// Properness probe and Prékopa convexity checks.
    Probe {
        target: String,
        #[arg(long, default_value_t = 50)]
        members: usize,
        #[arg(long, default_value_t = 10)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Grid spacing in log coordinates.
        #[arg(long, default_value_t = DEFAULT_SPACING)]
        spacing: f64,
    },
    /// Minimize the modified Ding functional.
    Solve {
        target: String,
        /// Sample the polytope at (1/k)Z^n.
        #[arg(long = "refine", default_value_t = 2)]
        refine: u32,
        /// Gradient-norm tolerance.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long = "max-iter", default_value_t = 5000)]
        max_iter: usize,
        /// Fixed box radius; chosen from the tail bound when omitted.
        #[arg(long = "grid-radius")]
        grid_radius: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_SPACING)]
        spacing: f64,
        /// Start from random weights instead of zero.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for report.json, convergence.csv and metric.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Alpha for every polytope JSON file in a directory.
    Scan { dir: PathBuf },
}

#[derive(Debug, Subcommand)]
enum CatalogAction {
    List,
}

/// A failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn usage(error: anyhow::Error) -> Self {
        Self { code: 1, error }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<Error>() {
            Some(Error::UnstablePolytope { .. }) => 3,
            Some(e) if e.is_invalid_polytope() => 2,
            Some(Error::TailBoundViolated { .. } | Error::LegendreNoConvergence { .. } | Error::NoConvergence { .. }) => 4,
            _ => 1,
        };
        Self { code, error }
    }
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        anyhow::Error::from(error).into()
    }
}

type Outcome = std::result::Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Catalog { action: CatalogAction::List } => catalog_list(cli.format),
        Command::Info { target } => info(cli.format, target),
        Command::Alpha { target } => alpha(cli.format, target),
        Command::Stability { target, steps } => stability(cli, target, *steps),
        Command::Probe {
            target,
            members,
            pairs,
            seed,
            spacing,
        } => probe(cli.format, target, *members, *pairs, *seed, *spacing),
        Command::Solve {
            target,
            refine,
            tol,
            max_iter,
            grid_radius,
            spacing,
            seed,
            out,
        } => {
            let cfg = SolverConfig {
                refinement: *refine,
                spacing: *spacing,
                radius: *grid_radius,
                grad_tol: *tol,
                max_iter: *max_iter,
                seed: *seed,
                ..SolverConfig::default()
            };
            cfg.validate().map_err(|e| Failure::usage(e.into()))?;
            solve_cmd(cli, target, &cfg, out.as_deref())
        }
        Command::Scan { dir } => scan(cli.format, dir),
    }
}

/// Catalog key (case-insensitive) or path to a polytope JSON file.
fn load(target: &str) -> std::result::Result<ReflexivePolytope, Failure> {
    if let Some(entry) = lookup(target) {
        return Ok(entry.polytope);
    }
    let path = Path::new(target);
    if !path.is_file() {
        return Err(Failure::usage(anyhow!("'{target}' is neither a catalog key nor a file")));
    }
    load_file(path)
}

fn load_file(path: &Path) -> std::result::Result<ReflexivePolytope, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::usage)?;
    let mut doc: PolytopeDoc = serde_json::from_str(&text)
        .map_err(Error::from)
        .with_context(|| format!("parsing {}", path.display()))?;
    if doc.name.is_empty() {
        doc.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    }
    doc.validate()
        .with_context(|| format!("validating {}", path.display()))
        .map_err(Failure::from)
}

fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_VAR).map_or_else(|| PathBuf::from("."), PathBuf::from)
}

fn write_file(path: &Path, contents: &str) -> std::result::Result<(), Failure> {
    fs::write(path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::usage)
}

fn print_json(value: &Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json values serialize"));
}

fn exact(q: &Rational) -> String {
    format!("{} ({:.10})", rational_string(q), rational_to_f64(q))
}

fn vector(v: &[i64]) -> String {
    format!("({})", v.iter().map(i64::to_string).collect::<Vec<_>>().join(", "))
}

fn catalog_list(format: Format) -> Outcome {
    let catalog = builtin_catalog();
    match format {
        Format::Json => {
            let entries: Vec<Value> = catalog
                .iter()
                .map(|e| {
                    serde_json::json!({
                        "key": e.key,
                        "dim": e.polytope.dim(),
                        "vertices": e.polytope.vertices().iter().map(|v| v.0.clone()).collect::<Vec<_>>(),
                        "notes": e.notes,
                    })
                })
                .collect();
            print_json(&Value::Array(entries));
        }
        Format::Csv => {
            println!("key,dim,vertices,notes");
            for e in &catalog {
                let verts: Vec<String> = e.polytope.vertices().iter().map(|v| vector(&v.0)).collect();
                println!(
                    "{},{},{},{}",
                    report::csv_field(e.key),
                    e.polytope.dim(),
                    report::csv_field(&verts.join(" ")),
                    report::csv_field(e.notes)
                );
            }
        }
        Format::Text => {
            for e in &catalog {
                let verts: Vec<String> = e.polytope.vertices().iter().map(|v| vector(&v.0)).collect();
                println!("{:<7} n={}  {}  [{}]", e.key, e.polytope.dim(), e.notes, verts.join(" "));
            }
        }
    }
    Ok(0)
}

fn info(format: Format, target: &str) -> Outcome {
    let p = load(target)?;
    match format {
        Format::Json => print_json(&report::info_json(&p)),
        Format::Csv => {
            println!("facet,normal,vertices");
            for (i, f) in p.facets().iter().enumerate() {
                let vs: Vec<String> = f.vertices.iter().map(usize::to_string).collect();
                println!("{i},{},{}", report::csv_field(&vector(&f.normal)), report::csv_field(&vs.join(" ")));
            }
        }
        Format::Text => {
            let mom = p.moments();
            println!("{}: smooth reflexive polytope of dimension {}", p.name(), p.dim());
            println!("vertices:");
            for v in p.vertices() {
                println!("  {}", vector(&v.0));
            }
            println!("facets (normal, vertex indices):");
            for f in p.facets() {
                println!("  {}  {:?}", vector(&f.normal), f.vertices);
            }
            println!("volume: {}", exact(&mom.volume));
            let first: Vec<String> = mom.first.iter().map(exact).collect();
            println!("first moments: {}", first.join(", "));
        }
    }
    Ok(0)
}

fn report_for(p: &ReflexivePolytope, steps: usize) -> std::result::Result<StabilityReport, Failure> {
    let l = solve_l(&p.moments())?;
    Ok(stability_report_for(p, &l, steps)?)
}

fn alpha_text(p: &ReflexivePolytope, r: &StabilityReport) -> String {
    let mut out = format!("{}\n", p.name());
    let mut l = rational_string(&r.l.a);
    for (i, b) in r.l.b.iter().enumerate() {
        if b.is_zero() {
            continue;
        }
        let sign = if b.is_negative() { '-' } else { '+' };
        l.push_str(&format!(" {sign} {}·x{}", rational_string(&b.abs()), i + 1));
    }
    out.push_str(&format!("  l(x)   = {l}\n"));
    out.push_str(&format!("  volume = {}\n", exact(&r.volume)));
    out.push_str(&format!("  alpha  = {}\n", exact(&r.alpha)));
    out.push_str(&format!("  lambda = {}\n", exact(&r.lambda)));
    out.push_str(&format!("  stable = {}\n", r.stable));
    out
}

/// `alpha` output for one polytope, newline-terminated. `scan` concatenates these.
fn alpha_output(format: Format, p: &ReflexivePolytope, r: &StabilityReport) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report::alpha_json(p, r)).expect("json values serialize");
            s.push('\n');
            s
        }
        Format::Csv => format!("{}\n", report::alpha_csv_row(p, r)),
        Format::Text => alpha_text(p, r),
    }
}

fn alpha(format: Format, target: &str) -> Outcome {
    let p = load(target)?;
    let r = report_for(&p, 0)?;
    if format == Format::Csv {
        println!("{}", report::ALPHA_CSV_HEADER);
    }
    print!("{}", alpha_output(format, &p, &r));
    Ok(0)
}

fn stability(cli: &Cli, target: &str, steps: usize) -> Outcome {
    let p = load(target)?;
    let r = report_for(&p, steps)?;
    match cli.format {
        Format::Json => print_json(&report::stability_json(&p, &r)),
        Format::Csv => print!("{}", report::probe_csv(&r)),
        Format::Text => {
            print!("{}", alpha_text(&p, &r));
            println!("  wedge probes (ratio at last step -> l(vertex); extrapolated):");
            for probe in &r.probes {
                println!(
                    "    {:<14} {:>12.8} -> {} ({:.8}); {:.8}",
                    vector(&probe.vertex.0),
                    probe.last_ratio().unwrap_or(f64::NAN),
                    rational_string(&probe.limit),
                    rational_to_f64(&probe.limit),
                    probe.extrapolated
                );
            }
        }
    }
    if cli.plot == Some(Plot::Svg) {
        match svg::polytope_plot(&p, &r) {
            Some(doc) => {
                let dir = default_out_dir();
                fs::create_dir_all(&dir)
                    .with_context(|| format!("creating {}", dir.display()))
                    .map_err(Failure::usage)?;
                let path = dir.join(format!("{}-polytope.svg", p.name()));
                write_file(&path, &doc)?;
                eprintln!("wrote {}", path.display());
            }
            None => eprintln!("note: plots are drawn for two-dimensional polytopes only"),
        }
    }
    Ok(0)
}

fn probe(format: Format, target: &str, members: usize, pairs: usize, seed: u64, spacing: f64) -> Outcome {
    if !(spacing > 0.0) || members < 2 {
        return Err(Failure::usage(anyhow!("need a positive spacing and at least two members")));
    }
    let p = load(target)?;
    let l = solve_l(&p.moments())?;
    let family = properness_family(&p, members, seed)?;
    let fit = properness_probe::<f64>(&p, &l, &family, spacing, DEFAULT_TAIL_TOL)?;
    let prekopa = prekopa_suite::<f64>(&p, 1, pairs, seed, spacing, DEFAULT_TAIL_TOL)?;
    match format {
        Format::Json => print_json(&report::properness_json(&fit, &prekopa)),
        Format::Csv => print!("{}", report::properness_csv(&fit)),
        Format::Text => {
            let worst = fit.members.iter().map(|m| m.margin).fold(f64::INFINITY, f64::min);
            println!("{}: {} members", p.name(), fit.members.len());
            println!("  fitted bound D(u) >= {:.8} * int(u) - {:.8}", fit.delta, fit.c);
            println!("  smallest margin {worst:.3e}");
            let failed = prekopa.iter().filter(|o| !o.holds).count();
            let min_slack = prekopa.iter().map(|o| o.slack).fold(f64::INFINITY, f64::min);
            println!("  Prékopa midpoint: {} pairs, {failed} failed, smallest slack {min_slack:.3e}", prekopa.len());
        }
    }
    Ok(0)
}

fn solve_cmd(cli: &Cli, target: &str, cfg: &SolverConfig, out: Option<&Path>) -> Outcome {
    let p = load(target)?;
    let l = solve_l(&p.moments())?;
    let r = solve::<f64>(&p, &l, cfg)?;
    let dir = out.map_or_else(|| default_out_dir().join(format!("{}-solve", p.name())), Path::to_path_buf);
    fs::create_dir_all(&dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(Failure::usage)?;
    let json = report::solver_json(&p, cfg.refinement, &r);
    let mut text = serde_json::to_string_pretty(&json).expect("json values serialize");
    text.push('\n');
    write_file(&dir.join("report.json"), &text)?;
    write_file(&dir.join("convergence.csv"), &report::convergence_csv(&r))?;
    let grid = toric_ding::duality::GridSpec::with_spacing(p.dim(), 10.0, 0.5)?;
    write_file(&dir.join("metric.csv"), &report::metric_csv(&export_metric(&r.potential(), &grid)))?;
    if cli.plot == Some(Plot::Svg) {
        write_file(&dir.join("convergence.svg"), &svg::convergence_plot(&r.history))?;
    }
    match cli.format {
        Format::Json => print!("{text}"),
        Format::Csv => print!("{}", report::convergence_csv(&r)),
        Format::Text => {
            println!("{} (k = {}): {}", p.name(), cfg.refinement, if r.converged { "converged" } else { "NOT converged" });
            println!("  iterations       {}", r.iterations);
            println!("  D                {:.12}", r.d_value);
            println!("  gradient norm    {:.3e}", r.grad_norm);
            println!("  residual L1      {:.3e}", r.residual_l1);
            println!("  residual sup     {:.3e}", r.residual_sup);
            println!("  pushforward mass {:.12}", r.pushforward_mass);
            println!("  pushforward W1   {:.3e}", r.pushforward_w1);
            println!("  box radius {:.2}, {} nodes per axis", r.radius, r.nodes);
            println!("  wrote {}", dir.display());
        }
    }
    if r.converged {
        Ok(0)
    } else {
        eprintln!(
            "error: solver stopped after {} iterations with gradient norm {:.3e} > {:.1e}",
            r.iterations, r.grad_norm, cfg.grad_tol
        );
        Ok(4)
    }
}

fn scan(format: Format, dir: &Path) -> Outcome {
    let entries = fs::read_dir(dir)
        .with_context(|| format!("reading directory {}", dir.display()))
        .map_err(Failure::usage)?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let results: Vec<std::result::Result<String, Failure>> = std::thread::scope(|s| {
        let handles: Vec<_> = files
            .iter()
            .map(|path| {
                s.spawn(move || -> std::result::Result<String, Failure> {
                    let p = load_file(path)?;
                    let r = report_for(&p, 0)?;
                    Ok(alpha_output(format, &p, &r))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("scan worker panicked")).collect()
    });
    if format == Format::Csv {
        println!("{}", report::ALPHA_CSV_HEADER);
    }
    let mut code = 0;
    for (path, result) in files.iter().zip(results) {
        match result {
            Ok(text) => print!("{text}"),
            Err(f) => {
                eprintln!("{}: {:#}", path.display(), f.error);
                code = code.max(f.code);
            }
        }
    }
    Ok(code)
}
