use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use causal_fa_core::counterexample::{verdict, Verdict};
use causal_fa_core::klein_gordon::{
    check_propagators, commutator_table, green, GreenKind, KernelKind, KgConfig, KgModel, LatticeField,
};
use causal_fa_core::suites::run_scenario;
use causal_fa_core::{CheckEntry, CheckReport, Gen, LatticeSpacetime, Monomial, Point, Poly, Scenario, Suite, Topology};
use clap::{Parser, Subcommand};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "causal-fa", version, about = "Causal lattice field theories: checks, counterexample and propagator demo")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checker suites of a scenario file and write a JSON report.
    Verify {
        scenario: PathBuf,
        /// Restrict to this suite; repeatable.
        #[arg(long = "suite", value_name = "NAME", value_parser = parse_suite)]
        suites: Vec<Suite>,
        /// Report path; defaults to `<scenario stem>.report.json` in the working directory.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// The wrapping pair on a cylinder that no permutation orders.
    Counterexample,
    /// Propagator kernels, commutators and time-ordered samples of the free field.
    KgDemo {
        #[arg(long, default_value_t = 0.0)]
        mass_squared: f64,
        #[arg(long, default_value_t = 8)]
        x: usize,
        #[arg(long, default_value_t = 24)]
        t: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value = "kg-demo")]
        out: PathBuf,
    },
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    Suite::parse(s).ok_or_else(|| {
        let names: Vec<String> = Suite::ALL.iter().map(|s| s.name()).collect();
        format!("unknown suite `{s}`, expected one of {}", names.join(", "))
    })
}

/// Largest lattice `kg-demo` accepts; the dense kernels are quadratic in it.
const KG_DEMO_MAX_POINTS: usize = 4096;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify { scenario, suites, report, seed } => return verify(&scenario, &suites, report, seed),
        Command::Counterexample => counterexample(),
        Command::KgDemo { mass_squared, x, t, seed, out } => kg_demo(mass_squared, x, t, seed, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn verify(path: &Path, suites: &[Suite], report_path: Option<PathBuf>, seed: Option<u64>) -> ExitCode {
    let mut sc = match Scenario::load(path) {
        Ok(sc) => sc,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = seed {
        sc.seed = seed;
    }
    let selected = if suites.is_empty() { sc.suites.clone() } else { suites.to_vec() };
    sc.faults.retain(|f| f.suites().iter().any(|s| selected.contains(s)));
    let report = match run_scenario(&sc, &selected) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let out = report_path.unwrap_or_else(|| {
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scenario".into());
        PathBuf::from(format!("{stem}.report.json"))
    });
    if let Err(e) = write_json(&out, &report) {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    print_summary(&report, &out);
    if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn print_summary(report: &CheckReport, out: &Path) {
    let mut groups: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for c in &report.checks {
        let group = c.name.split('/').next().unwrap_or("");
        if group == "fault" {
            continue;
        }
        let g = groups.entry(group).or_default();
        g.0 += 1;
        if !c.pass && !c.degenerate {
            g.1 += 1;
        }
    }
    println!("scenario {} (seed {})", report.scenario, report.seed);
    for (group, (n, bad)) in &groups {
        println!("  {group:<12} {n:>4} checks, {bad} failing");
    }
    for c in report.failures().iter().filter(|c| !c.name.starts_with("fault/")) {
        println!("  FAIL {} deviation {:.3e} (tolerance {:.0e}) {}", c.name, c.deviation, c.tolerance, c.witness.as_deref().unwrap_or(""));
    }
    for f in &report.faults {
        let status = if f.caught { "caught" } else { "NOT CAUGHT" };
        println!("  fault {:<30} {status} by {:?}", f.fault, f.failing_checks);
    }
    println!("report: {}", out.display());
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn counterexample() -> Result<()> {
    for v in [verdict(Topology::Cylinder), verdict(Topology::Strip)] {
        print_verdict(&v);
    }
    Ok(())
}

fn print_verdict(v: &Verdict) {
    let show = |w: &Option<(Point, Point)>| w.map(|(a, b)| format!("{a} ≤ {b}")).unwrap_or_else(|| "none".into());
    println!("{:?}:", v.topology);
    match &v.search {
        Some(p) => println!("  find_time_ordering: {p:?}"),
        None => println!("  find_time_ordering: none"),
    }
    println!("  brute force over all permutations: {} ordering(s) {:?}", v.brute_force.len(), v.brute_force);
    println!("  A reaches B: {}", show(&v.a_reaches_b));
    println!("  B reaches A: {}", show(&v.b_reaches_a));
    println!("{}", v.picture);
}

#[derive(Serialize)]
struct KernelRow {
    p: String,
    q: String,
    re_g: f64,
    im_g: f64,
    re_g_dirac: f64,
}

#[derive(Serialize)]
struct CommutatorRow {
    p: String,
    q: String,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct DiracRow {
    p: String,
    q: String,
    re_dirac: f64,
    im_dirac: f64,
    re_retarded_form: f64,
    im_retarded_form: f64,
    re_advanced_form: f64,
    im_advanced_form: f64,
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn kg_demo(mass_squared: f64, x: usize, t: usize, seed: u64, out: &Path) -> Result<()> {
    anyhow::ensure!(
        x * t <= KG_DEMO_MAX_POINTS,
        "lattice {t} × {x} exceeds the demo budget of {KG_DEMO_MAX_POINTS} points"
    );
    let amb = LatticeSpacetime::new(t, x, Topology::Cylinder)?;
    let cfg = KgConfig::new(&amb, mass_squared, 2)?;
    let model = KgModel::new(cfg.clone());
    let props = model.propagators();
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;

    let n = amb.capacity();
    let mut kernels = Vec::with_capacity(n * n);
    for p in 0..n {
        for q in 0..n {
            kernels.push(KernelRow {
                p: amb.point(p).to_string(),
                q: amb.point(q).to_string(),
                re_g: props.causal(p, q),
                im_g: 0.0,
                re_g_dirac: props.dirac(p, q),
            });
        }
    }
    write_csv(&out.join("propagators.csv"), &kernels)?;

    let (lo, hi) = cfg.safe_rows();
    let origin = Point::new((lo + hi) / 2, 0);
    let safe: Vec<Point> = amb.points().into_iter().filter(|p| (lo..=hi).contains(&p.t)).collect();
    let pairs: Vec<(Point, Point)> = safe.iter().map(|&q| (origin, q)).collect();
    let table = commutator_table(&model, &pairs)?;
    let rows: Vec<CommutatorRow> =
        table.iter().map(|(p, q, c)| CommutatorRow { p: p.to_string(), q: q.to_string(), re: c.re, im: c.im }).collect();
    write_csv(&out.join("commutators.csv"), &rows)?;

    let mut dirac = Vec::new();
    for &(p, q) in &pairs {
        let (a, b) = (Poly::generator(amb.index(p) as Gen), Poly::generator(amb.index(q) as Gen));
        let constant = |kind| -> Result<_> { Ok(model.star_product(&a, &b, kind)?.coefficient(&Monomial::one())) };
        let (d, r, v) = (constant(KernelKind::Dirac)?, constant(KernelKind::Retarded)?, constant(KernelKind::Advanced)?);
        dirac.push(DiracRow {
            p: p.to_string(),
            q: q.to_string(),
            re_dirac: d.re,
            im_dirac: d.im,
            re_retarded_form: r.re,
            im_retarded_form: r.im,
            re_advanced_form: v.re,
            im_advanced_form: v.im,
        });
    }
    write_csv(&out.join("dirac_samples.csv"), &dirac)?;

    let mut checks = check_propagators(&cfg, props, 16, seed);
    let zero = LatticeField::zeros(&amb);
    let zero_dev = [GreenKind::Retarded, GreenKind::Advanced]
        .into_iter()
        .map(|k| green(&cfg, &zero, k).map(|f| f.max_abs()))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    checks.push(CheckEntry::measured("zero_source", zero_dev, 0.0));
    let comm_dev = table
        .iter()
        .map(|(p, q, c)| (c.re.abs()).max((c.im - props.causal(amb.index(*p), amb.index(*q))).abs()))
        .fold(0.0, f64::max);
    checks.push(CheckEntry::measured("commutator_is_i_g", comm_dev, 1e-12));
    let report = CheckReport::new(format!("kg-demo m²={mass_squared} X={x} T={t}"), seed, checks);
    write_json(&out.join("report.json"), &report)?;

    println!("wrote {} kernel rows, {} commutators, {} time-ordered samples to {}", kernels.len(), rows.len(), dirac.len(), out.display());
    for c in &report.checks {
        println!("  {} {:<40} {:.3e}", if c.pass { "ok  " } else { "FAIL" }, c.name, c.deviation);
    }
    anyhow::ensure!(report.all_pass(), "propagator checks failed");
    Ok(())
}
