//! Command-line front end. Exit codes: 0 success, 2 argument error,
//! 3 numeric/verification failure. All outputs are deterministic given the
//! flag set, including the worker count.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::arith::{sieve_primes, Rational};
use crate::census::{
    ap_census, dq_census, k3_census, write_report_files, CensusReport,
};
use crate::curves::{
    clausen_curve, frobenius_trace, read_cache, short_curve, trace_sweep, write_cache,
    TraceRecord, WeierstrassCurve,
};
use crate::error::{Error, Result};
use crate::measures::{Interval, Law, LawKind};
use crate::surfaces::{k3_excluded_prime, k3_trace, k3_trace_oracle};

/// Parses a curve spec: either `A,B` (short form y² = x³ + Ax + B with
/// rational A, B) or `clausen:λ`.
pub fn parse_curve_spec(spec: &str) -> Result<WeierstrassCurve> {
    if let Some(lambda) = spec.strip_prefix("clausen:") {
        return clausen_curve(Rational::from_str(lambda)?);
    }
    let (a, b) = spec
        .split_once(',')
        .ok_or_else(|| Error::arg(format!("curve spec {spec:?}: expected `A,B` or `clausen:L`")))?;
    short_curve(Rational::from_str(a.trim())?, Rational::from_str(b.trim())?)
}

/// Parses `lo,hi` as a closed angle interval inside [0, π].
pub fn parse_interval(spec: &str) -> Result<Interval> {
    let (lo, hi) = spec
        .split_once(',')
        .ok_or_else(|| Error::arg(format!("interval {spec:?}: expected `lo,hi`")))?;
    let lo: f64 = lo.trim().parse().map_err(|e| Error::arg(format!("interval lo: {e}")))?;
    let hi: f64 = hi.trim().parse().map_err(|e| Error::arg(format!("interval hi: {e}")))?;
    Interval::new(lo, hi)
}

#[derive(Parser)]
#[command(name = "stcensus", version, about = "Frobenius-trace censuses against exact limiting laws")]
pub struct Cli {
    /// Worker threads (0 = machine parallelism). Affects wall time only.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Sweep Frobenius traces of one curve and maintain its binary cache.
    Trace(TraceArgs),
    /// Census of normalized K3 traces of X_λ against its limiting law.
    K3(K3Args),
    /// Census of normalized double quadric traces for a pair of curves.
    Dq(DqArgs),
    /// Dump a law's density on a uniform grid as CSV.
    Density(DensityArgs),
    /// Dump Beurling–Selberg sandwich polynomial coefficients as CSV.
    Selberg(SelbergArgs),
    /// Census of Frobenius angles in an arithmetic progression of primes.
    Ap(ApArgs),
}

#[derive(Args)]
pub struct TraceArgs {
    /// Curve spec: `A,B` or `clausen:λ`.
    pub curve: String,
    #[arg(long)]
    pub pmax: u64,
    /// Cache file to read/extend/write.
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

#[derive(Args)]
pub struct K3Args {
    #[arg(long)]
    pub lambda: String,
    #[arg(long)]
    pub pmax: u64,
    /// Cross-check against the O(p²) character-sum oracle for p ≤ 199.
    #[arg(long)]
    pub verify: bool,
    /// Directory for the JSON/CSV report files.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct DqArgs {
    #[arg(long)]
    pub curve1: String,
    #[arg(long)]
    pub curve2: String,
    #[arg(long)]
    pub pmax: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct DensityArgs {
    /// Law name (e.g. batman, sqrt-k3, c1, cm-angle).
    #[arg(long)]
    pub law: String,
    /// Number of uniform grid points.
    #[arg(long, default_value_t = 512)]
    pub grid: usize,
    /// Output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SelbergArgs {
    /// Angle interval `lo,hi` inside [0, π].
    #[arg(long)]
    pub interval: String,
    /// Second interval: emits the 2D coefficient grid instead.
    #[arg(long)]
    pub interval2: Option<String>,
    #[arg(long, name = "M")]
    pub m: usize,
    /// `major` or `minor`.
    #[arg(long, default_value = "major")]
    pub side: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ApArgs {
    /// Curve spec: `A,B` or `clausen:λ`.
    #[arg(long)]
    pub curve: String,
    #[arg(long)]
    pub pmax: u64,
    /// Modulus.
    #[arg(long)]
    pub q: u64,
    /// Residue class, coprime to q.
    #[arg(long)]
    pub a: u64,
    /// Angle interval `lo,hi`.
    #[arg(long, default_value = "0,3.141592653589793")]
    pub interval: String,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

fn embed_flags(report: &mut CensusReport, flags: &[(&str, String)], threads: usize) {
    let mut map = BTreeMap::new();
    for (k, v) in flags {
        map.insert((*k).to_string(), v.clone());
    }
    map.insert("threads".into(), threads.to_string());
    report.flags = map;
}

fn cmd_trace(args: &TraceArgs) -> Result<()> {
    let curve = parse_curve_spec(&args.curve)?;
    let records: Vec<TraceRecord> = match &args.cache {
        Some(path) if path.exists() => {
            let cached = read_cache(path, &curve)?;
            if cached.x >= args.pmax {
                // warm cache: no recompute
                cached.records.into_iter().filter(|r| r.p <= args.pmax).collect()
            } else {
                let mut records = cached.records;
                let primes = sieve_primes(args.pmax)?.primes;
                for &p in primes.iter().filter(|&&p| p > cached.x) {
                    records.push(frobenius_trace(&curve, p)?);
                }
                write_cache(path, &curve, args.pmax, &records)?;
                records
            }
        }
        _ => {
            let records = trace_sweep(&curve, args.pmax)?;
            if let Some(path) = &args.cache {
                write_cache(path, &curve, args.pmax, &records)?;
            }
            records
        }
    };
    let n_good = records.iter().filter(|r| r.good).count();
    let max_ratio = records
        .iter()
        .filter(|r| r.good)
        .map(|r| r.a_p.unwrap().unsigned_abs() as f64 / (2.0 * (r.p as f64).sqrt()))
        .fold(0.0f64, f64::max);
    let zero_fraction = if n_good > 0 {
        records.iter().filter(|r| r.a_p == Some(0)).count() as f64 / n_good as f64
    } else {
        0.0
    };
    println!(
        "curve={} pmax={} n_good={n_good} max|a_p|/2sqrt(p)={max_ratio:.6} zero_fraction={zero_fraction:.4}",
        curve.canonical_descriptor(),
        args.pmax
    );
    Ok(())
}

/// Dual-route verification: the O(p) sweep against the character-sum oracle
/// at every good prime p ≤ 199.
fn verify_k3(lambda: &Rational) -> Result<()> {
    let curve = crate::curves::census_clausen_curve(lambda)?;
    for &p in sieve_primes(199)?.primes.iter().filter(|&&p| p >= 5) {
        if !curve.is_good(p) || k3_excluded_prime(lambda, p)? {
            continue;
        }
        let rec = frobenius_trace(&curve, p)?;
        let fast = k3_trace(lambda, &rec)?.expect("good prime");
        let slow = k3_trace_oracle(lambda, p)?;
        if (fast - slow).abs() >= 1e-6 * p as f64 {
            return Err(Error::Verification(format!(
                "K3 trace mismatch at lambda = {lambda}, p = {p}: sweep {fast} vs oracle {slow}"
            )));
        }
    }
    Ok(())
}

fn cmd_k3(args: &K3Args, threads: usize) -> Result<()> {
    let lambda = Rational::from_str(&args.lambda)?;
    if args.verify {
        verify_k3(&lambda)?;
        println!("verify: sweep/oracle agreement for all good p <= 199");
    }
    let mut report = k3_census(&lambda, args.pmax)?;
    embed_flags(
        &mut report,
        &[
            ("lambda", args.lambda.clone()),
            ("pmax", args.pmax.to_string()),
            ("verify", args.verify.to_string()),
        ],
        threads,
    );
    let law = Law::new(LawKind::from_name(&report.law)?);
    let base = write_report_files(&report, &law, &args.out)?;
    println!(
        "case={} law={} n_good={} discrepancy={:.6} envelope_ratio={:.6} files={base}.{{json,csv}}",
        report.case_id, report.law, report.n_good, report.discrepancy, report.envelope_ratio
    );
    Ok(())
}

fn cmd_dq(args: &DqArgs, threads: usize) -> Result<()> {
    let e = parse_curve_spec(&args.curve1)?;
    let ep = parse_curve_spec(&args.curve2)?;
    let mut report = dq_census(&e, &ep, args.pmax)?;
    embed_flags(
        &mut report,
        &[
            ("curve1", args.curve1.clone()),
            ("curve2", args.curve2.clone()),
            ("pmax", args.pmax.to_string()),
        ],
        threads,
    );
    let law = Law::new(LawKind::from_name(&report.law)?);
    let base = write_report_files(&report, &law, &args.out)?;
    println!(
        "case={} law={} n_good={} discrepancy={:.6} envelope_ratio={:.6} files={base}.{{json,csv}}",
        report.case_id, report.law, report.n_good, report.discrepancy, report.envelope_ratio
    );
    Ok(())
}

fn cmd_ap(args: &ApArgs, threads: usize) -> Result<()> {
    let curve = parse_curve_spec(&args.curve)?;
    let interval = parse_interval(&args.interval)?;
    let mut report = ap_census(&curve, args.pmax, args.q, args.a, &interval)?;
    embed_flags(
        &mut report,
        &[
            ("curve", args.curve.clone()),
            ("pmax", args.pmax.to_string()),
            ("q", args.q.to_string()),
            ("a", args.a.to_string()),
            ("interval", args.interval.clone()),
        ],
        threads,
    );
    let law = Law::new(LawKind::from_name(&report.law)?);
    let base = write_report_files(&report, &law, &args.out)?;
    println!(
        "case={} law={} n_good={} deviation={:.6} envelope_ratio={:.6} files={base}.{{json,csv}}",
        report.case_id, report.law, report.n_good, report.discrepancy, report.envelope_ratio
    );
    Ok(())
}

/// (t, density) CSV on a uniform grid; singular abscissae skipped; atoms in
/// a trailing block.
pub fn density_dump(kind: LawKind, grid: usize) -> Result<String> {
    if grid < 2 {
        return Err(Error::arg("density grid needs at least 2 points"));
    }
    let law = Law::new(kind);
    let mut out = String::from("t,density\n");
    let span = law.support.length();
    for k in 0..=grid {
        let t = law.support.lo + span * k as f64 / grid as f64;
        let d = law.density(t);
        if !d.is_finite() {
            continue; // singular abscissa
        }
        out.push_str(&format!("{t:.12},{d:.12}\n"));
    }
    out.push_str("# atoms: location,mass\n");
    for atom in &law.atoms {
        out.push_str(&format!("# atom,{:.12},{}/{}\n", atom.location, atom.mass_num, atom.mass_den));
    }
    Ok(out)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => Ok(std::fs::write(path, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_density(args: &DensityArgs) -> Result<()> {
    let kind = LawKind::from_name(&args.law)?;
    emit(&args.out, &density_dump(kind, args.grid)?)
}

/// Selberg coefficient CSV: `m,coeff` rows (M+1 of them), or `m,mp,coeff`
/// for the 2D grid.
pub fn selberg_dump(
    i: &Interval,
    ip: Option<&Interval>,
    m: usize,
    major: bool,
) -> Result<String> {
    match ip {
        None => {
            let poly = crate::approx::selberg_polynomial(i, m, major)?;
            let mut out = String::from("m,coeff\n");
            for (k, c) in poly.coeffs.iter().enumerate() {
                out.push_str(&format!("{k},{c:.15}\n"));
            }
            Ok(out)
        }
        Some(ip) => {
            let poly = crate::approx::selberg_polynomial_2d(i, ip, m, major)?;
            let mut out = String::from("m,mp,coeff\n");
            for (j, row) in poly.coeffs.iter().enumerate() {
                for (k, c) in row.iter().enumerate() {
                    out.push_str(&format!("{j},{k},{c:.15}\n"));
                }
            }
            Ok(out)
        }
    }
}

fn cmd_selberg(args: &SelbergArgs) -> Result<()> {
    let i = parse_interval(&args.interval)?;
    let ip = args.interval2.as_deref().map(parse_interval).transpose()?;
    let major = match args.side.as_str() {
        "major" => true,
        "minor" => false,
        other => return Err(Error::arg(format!("side must be major or minor, got {other:?}"))),
    };
    emit(&args.out, &selberg_dump(&i, ip.as_ref(), args.m, major)?)
}

pub fn run(cli: &Cli) -> Result<()> {
    if cli.threads > 0 {
        // ignore failure: the global pool may already exist (e.g. in tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    match &cli.command {
        Command::Trace(args) => cmd_trace(args),
        Command::K3(args) => cmd_k3(args, cli.threads),
        Command::Dq(args) => cmd_dq(args, cli.threads),
        Command::Ap(args) => cmd_ap(args, cli.threads),
        Command::Density(args) => cmd_density(args),
        Command::Selberg(args) => cmd_selberg(args),
    }
}

/// Entry point used by the binary; maps errors to process exit codes.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are successful exits
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
