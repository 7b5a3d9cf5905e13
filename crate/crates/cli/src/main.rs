//! `streamcover` command-line tool.
//!
//! Exit codes: 0 success, 1 parse or usage error, 2 infeasible instance,
//! 3 budget or guess failure.

mod bench;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use streamcover::generate::{generate_instance, GeneratorKind};
use streamcover::geom::{generate_planted_discs, geom_solve_traced, load_geo, save_geo, DiscStream, GeomOptions, Threshold};
use streamcover::io::{load_instance, save_instance, LoadOptions};
use streamcover::iter_cover::solve_traced;
use streamcover::model::verify_cover;
use streamcover::oracle::{brute_force_optimal, MAX_ORACLE_SETS};
use streamcover::recovery::{default_budget, random_family, recover_family, DisjointnessOracle};
use streamcover::reduction::{build_gadget, load_isc, save_isc, verify_equivalence, IscInstance};
use streamcover::sampling::{check_relative_approx, draw_sample, SampleSpec};
use streamcover::stream::{PassStream, SpaceLedger};
use streamcover::{Cover, Error, OfflineMode, SolveParams};

#[derive(Parser, Debug)]
#[command(name = "streamcover", version, about = "Multi-pass streaming set cover")]
pub struct Cli {
    /// Master random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for bench rows and recovery trials.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Reproducible mode: requires --seed and omits wall-clock times.
    #[arg(long, global = true)]
    ci: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an instance file.
    Gen(GenArgs),
    /// Solve a `.ssc`, `SSC1` or `.geo` instance.
    Solve(SolveArgs),
    /// Run solvers over many instances and emit one CSV row per run.
    Bench(bench::BenchArgs),
    /// Brute-force optimum of a small instance.
    Oracle { path: PathBuf },
    /// Build the set-chasing gadget and optionally check its optimum.
    Reduce(ReduceArgs),
    /// Recover random families through a disjointness oracle.
    Recover(RecoverArgs),
    /// Check a uniform sample for the relative-approximation property.
    CheckSample(CheckSampleArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GenKind {
    Uniform,
    Planted,
    Sparse,
    Discs,
    Isc,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(value_enum)]
    kind: GenKind,
    #[arg(long)]
    n: u32,
    /// Number of sets (noise discs for `discs`).
    #[arg(long, default_value_t = 0)]
    m: u32,
    /// Planted optimum, or the number of clusters for `discs`.
    #[arg(long, default_value_t = 4)]
    opt: u32,
    #[arg(long, default_value_t = 0.1)]
    density: f64,
    #[arg(long, default_value_t = 8)]
    s_cap: u32,
    /// Chase depth for `isc`.
    #[arg(long, default_value_t = 1)]
    p: u32,
    /// Write the `SSC1` binary format.
    #[arg(long)]
    binary: bool,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Pass/space trade-off, e.g. `0.5` or `1/3`.
    #[arg(long, default_value = "1/2", value_parser = parse_delta)]
    pub delta: f64,
    /// Sampling constant.
    #[arg(long, default_value_t = 2.0)]
    pub c: f64,
    #[arg(long, value_enum, default_value_t = Offline::Exact)]
    pub offline: Offline,
    /// Size-test threshold for discs.
    #[arg(long, value_enum, default_value_t = ThresholdArg::Full)]
    pub threshold: ThresholdArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Offline {
    Exact,
    Greedy,
}

impl From<Offline> for OfflineMode {
    fn from(o: Offline) -> Self {
        match o {
            Offline::Exact => OfflineMode::Exact,
            Offline::Greedy => OfflineMode::Greedy,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ThresholdArg {
    Full,
    Leftover,
}

impl SolverArgs {
    pub fn params(&self, seed: u64) -> SolveParams {
        SolveParams { delta: self.delta, c: self.c, offline: self.offline.into(), seed }
    }

    pub fn geom_options(&self) -> GeomOptions {
        let threshold = match self.threshold {
            ThresholdArg::Full => Threshold::Full,
            ThresholdArg::Leftover => Threshold::Leftover,
        };
        GeomOptions { threshold }
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    path: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    /// Also compute the brute-force optimum (at most 26 sets).
    #[arg(long)]
    oracle: bool,
}

#[derive(Args, Debug)]
struct ReduceArgs {
    #[arg(long, default_value_t = 2)]
    n: u32,
    #[arg(long, default_value_t = 1)]
    p: u32,
    /// Read the chase instance from an `.isc` file instead of drawing one.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Solve the gadget exactly and check it against the chase.
    #[arg(long)]
    verify: bool,
    /// Write the gadget as `.ssc` plus a `.names` sidecar.
    #[arg(long)]
    export: Option<PathBuf>,
    /// Write the chase instance as `.isc`.
    #[arg(long)]
    save_isc: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RecoverArgs {
    #[arg(long, default_value_t = 64)]
    n: u32,
    #[arg(long, default_value_t = 8)]
    m: u32,
    #[arg(long, default_value_t = 2)]
    c1: u32,
    /// Random probes per trial; defaults to m^(c1+3)·log m.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long, default_value_t = 10)]
    trials: u64,
    #[arg(long, default_value_t = 0.0)]
    oracle_error_rate: f64,
}

#[derive(Args, Debug)]
struct CheckSampleArgs {
    path: PathBuf,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    q: f64,
    /// Sample-size constant.
    #[arg(long, default_value_t = 0.25)]
    c_prime: f64,
}

pub fn parse_delta(s: &str) -> Result<f64, String> {
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| format!("bad numerator in '{s}'"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("bad denominator in '{s}'"))?;
            a / b
        }
        None => s.trim().parse().map_err(|_| format!("bad number '{s}'"))?,
    };
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("delta must be in (0, 1], got {s}"))
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Infeasible(_) => 2,
        Error::BudgetExceeded(_) | Error::AllGuessesFailed => 3,
        _ => 1,
    }
}

pub struct Ctx {
    pub seed: u64,
    pub ci: bool,
    pub format: Format,
}

impl Ctx {
    pub fn wall_ms(&self, start: Instant) -> String {
        if self.ci {
            "-".into()
        } else {
            start.elapsed().as_millis().to_string()
        }
    }
}

pub fn is_geo(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "geo")
}

/// Runs the streaming or geometric solver on the file at `path`.
pub fn solve_file(path: &Path, solver: &SolverArgs, seed: u64) -> streamcover::Result<(Cover, streamcover::SetSystem)> {
    let params = solver.params(seed);
    let mut ledger = SpaceLedger::new();
    if is_geo(path) {
        let inst = load_geo(path)?;
        let discs = inst.discs()?;
        let sys = inst.to_set_system()?;
        let report = geom_solve_traced(&inst.points, &mut DiscStream::new(discs), &params, solver.geom_options(), &mut ledger)?;
        Ok((report.cover, sys))
    } else {
        let sys = load_instance(path, LoadOptions::default())?;
        if let Some(e) = sys.first_uncoverable() {
            return Err(Error::Infeasible(e));
        }
        let mut stream = PassStream::open(path)?;
        let report = solve_traced(&mut stream, &params, &mut ledger)?;
        Ok((report.cover, sys))
    }
}

fn emit<T: Serialize>(ctx: &Ctx, value: &T, text: impl FnOnce() -> String) -> streamcover::Result<()> {
    match ctx.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(value).expect("serializable")),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            w.serialize(value).map_err(|e| Error::Io(std::io::Error::other(e)))?;
            w.flush()?;
        }
        Format::Text => print!("{}", text()),
    }
    Ok(())
}

#[derive(Serialize)]
struct SolveOutput {
    path: String,
    size: usize,
    sets: String,
    passes: u64,
    peak_space_units: i64,
    ground_space_units: i64,
    guess_k: u32,
    valid: bool,
    sample_capped: bool,
    oracle_opt: Option<usize>,
    ratio: Option<f64>,
    seed: u64,
    wall_ms: String,
}

fn cmd_solve(ctx: &Ctx, args: &SolveArgs) -> streamcover::Result<()> {
    let start = Instant::now();
    let (cover, sys) = solve_file(&args.path, &args.solver, ctx.seed)?;
    let wall_ms = ctx.wall_ms(start);
    let valid = verify_cover(&sys, &cover.chosen)?;
    let mut oracle_note = None;
    let oracle_opt = if args.oracle {
        match brute_force_optimal(&sys) {
            Ok(r) => Some(r.opt_size),
            Err(Error::TooLarge(msg)) => {
                oracle_note = Some(msg);
                None
            }
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let ratio = oracle_opt.filter(|&o| o > 0).map(|o| cover.len() as f64 / o as f64);
    let out = SolveOutput {
        path: args.path.display().to_string(),
        size: cover.len(),
        sets: cover.chosen.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" "),
        passes: cover.stats.passes,
        peak_space_units: cover.stats.peak_space_units,
        ground_space_units: cover.stats.ground_space_units,
        guess_k: cover.stats.guess_k,
        valid,
        sample_capped: cover.stats.sample_capped,
        oracle_opt,
        ratio,
        seed: ctx.seed,
        wall_ms,
    };
    emit(ctx, &out, || {
        let mut s = format!(
            "cover size: {}\nsets: {}\npasses: {}\npeak space units: {}\nground space units: {}\nguess k: {}\nvalid: {}\nsample capped: {}\nwall ms: {}\n",
            out.size,
            out.sets,
            out.passes,
            out.peak_space_units,
            out.ground_space_units,
            out.guess_k,
            out.valid,
            out.sample_capped,
            out.wall_ms
        );
        if let (Some(o), Some(r)) = (out.oracle_opt, out.ratio) {
            s.push_str(&format!("oracle opt: {o}\nratio: {r:.3}\n"));
        }
        if let Some(note) = &oracle_note {
            s.push_str(&format!("oracle skipped: {note}\n"));
        }
        s
    })
}

fn cmd_gen(ctx: &Ctx, a: &GenArgs) -> streamcover::Result<()> {
    match a.kind {
        GenKind::Discs => {
            let g = generate_planted_discs(a.opt, a.n, a.m, ctx.seed)?;
            save_geo(&g.instance, &a.output)?;
        }
        GenKind::Isc => save_isc(&IscInstance::random(a.n, a.p, ctx.seed)?, &a.output)?,
        kind => {
            let gk = match kind {
                GenKind::Uniform => GeneratorKind::UniformRandom { density: a.density },
                GenKind::Planted => GeneratorKind::PlantedCover { opt_size: a.opt },
                _ => GeneratorKind::Sparse { s_cap: a.s_cap },
            };
            let g = generate_instance(gk, a.n, a.m.max(1), ctx.seed)?;
            save_instance(&g.system, &a.output, a.binary)?;
            if !g.system.is_feasible() {
                eprintln!("warning: generated instance is infeasible");
            }
        }
    }
    if ctx.format == Format::Text {
        println!("wrote {}", a.output.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct OracleOutput {
    opt: usize,
    witness: String,
}

fn cmd_oracle(ctx: &Ctx, path: &Path) -> streamcover::Result<()> {
    let sys = if is_geo(path) { load_geo(path)?.to_set_system()? } else { load_instance(path, LoadOptions::default())? };
    if sys.m() > MAX_ORACLE_SETS {
        return Err(Error::TooLarge(format!("oracle handles at most {MAX_ORACLE_SETS} sets, got {}", sys.m())));
    }
    let r = brute_force_optimal(&sys)?;
    let out = OracleOutput {
        opt: r.opt_size,
        witness: r.witness.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" "),
    };
    emit(ctx, &out, || format!("opt: {}\nwitness: {}\n", out.opt, out.witness))
}

#[derive(Serialize)]
struct ReduceOutput {
    n: u32,
    p: u32,
    elements: u32,
    sets: u32,
    chase: bool,
    opt: Option<usize>,
    lower_bound: usize,
    result: Option<&'static str>,
}

fn cmd_reduce(ctx: &Ctx, a: &ReduceArgs) -> streamcover::Result<bool> {
    let isc = match &a.input {
        Some(p) => load_isc(p)?,
        None => IscInstance::random(a.n, a.p, ctx.seed)?,
    };
    if let Some(p) = &a.save_isc {
        save_isc(&isc, p)?;
    }
    let gadget = build_gadget(&isc)?;
    if let Some(p) = &a.export {
        save_instance(&gadget.system, p, false)?;
        fs::write(p.with_extension("names"), gadget.names_string())?;
    }
    let report = if a.verify { Some(verify_equivalence(&isc)?) } else { None };
    let out = ReduceOutput {
        n: isc.n,
        p: isc.p,
        elements: gadget.system.n(),
        sets: gadget.system.m(),
        chase: streamcover::reduction::chase(&isc),
        opt: report.as_ref().map(|r| r.opt),
        lower_bound: ((2 * isc.p + 1) * isc.n + 1) as usize,
        result: report.as_ref().map(|r| if r.pass { "PASS" } else { "FAIL" }),
    };
    emit(ctx, &out, || {
        let mut s = format!(
            "gadget: {} elements, {} sets\nchase intersects: {}\nlower bound: {}\n",
            out.elements, out.sets, out.chase, out.lower_bound
        );
        if let (Some(o), Some(r)) = (out.opt, out.result) {
            s.push_str(&format!("opt: {o}\nequivalence: {r}\n"));
        }
        s
    })?;
    Ok(report.is_none_or(|r| r.pass))
}

#[derive(Serialize)]
struct RecoverRow {
    trial: u64,
    success: bool,
    queries_used: u64,
    recovered: usize,
}

fn cmd_recover(ctx: &Ctx, a: &RecoverArgs) -> streamcover::Result<()> {
    let budget = a.budget.unwrap_or_else(|| default_budget(a.m, a.c1));
    let rows = (0..a.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            rng.set_stream(trial);
            let family = random_family(a.n, a.m, &mut rng);
            let mut oracle = DisjointnessOracle::with_error(a.n, family, a.oracle_error_rate, ctx.seed ^ trial)?;
            let run = recover_family(&mut oracle, a.m, a.c1, budget, &mut rng)?;
            Ok(RecoverRow { trial, success: run.success, queries_used: run.queries_used, recovered: run.recovered.len() })
        })
        .collect::<streamcover::Result<Vec<_>>>()?;
    if ctx.format == Format::Json {
        println!("{}", serde_json::to_string_pretty(&rows).expect("serializable"));
        return Ok(());
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(std::io::stdout());
    w.write_record(["trial", "success", "queries_used", "recovered"]).map_err(csv_err)?;
    for r in &rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[derive(Serialize)]
struct CheckOutput {
    sample_size: usize,
    ranges: usize,
    heavy: usize,
    failures: usize,
    failing_sets: String,
}

fn cmd_check_sample(ctx: &Ctx, a: &CheckSampleArgs) -> streamcover::Result<bool> {
    let sys = load_instance(&a.path, LoadOptions { allow_empty: true })?;
    let spec = SampleSpec::new(a.p, a.eps, a.q, sys.m().max(1) as usize)?;
    let size = spec.sample_size(a.c_prime) as usize;
    let ground: Vec<u32> = (0..sys.n()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let sample = draw_sample(&ground, size, &mut rng);
    let report = check_relative_approx(&sys, &sample, &spec)?;
    let out = CheckOutput {
        sample_size: report.sample_size,
        ranges: report.ranges.len(),
        heavy: report.ranges.iter().filter(|r| r.heavy).count(),
        failures: report.failures,
        failing_sets: report.ranges.iter().filter(|r| !r.pass).map(|r| r.set.to_string()).collect::<Vec<_>>().join(" "),
    };
    emit(ctx, &out, || {
        let mut s = format!(
            "sample size: {} of {}\nranges: {} ({} heavy)\nfailures: {}\n",
            out.sample_size,
            sys.n(),
            out.ranges,
            out.heavy,
            out.failures
        );
        for r in report.ranges.iter().filter(|r| !r.pass) {
            s.push_str(&format!("  set {}: size {}, hits {}, heavy {}\n", r.set, r.size, r.hits, r.heavy));
        }
        s
    })?;
    Ok(report.all_pass())
}

fn run(cli: Cli) -> streamcover::Result<bool> {
    let ctx = Ctx { seed: cli.seed.unwrap_or(0), ci: cli.ci, format: cli.format };
    match &cli.command {
        Command::Gen(a) => cmd_gen(&ctx, a).map(|_| true),
        Command::Solve(a) => cmd_solve(&ctx, a).map(|_| true),
        Command::Bench(a) => bench::cmd_bench(&ctx, a).map(|_| true),
        Command::Oracle { path } => cmd_oracle(&ctx, path).map(|_| true),
        Command::Reduce(a) => cmd_reduce(&ctx, a),
        Command::Recover(a) => cmd_recover(&ctx, a).map(|_| true),
        Command::CheckSample(a) => cmd_check_sample(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.ci && cli.seed.is_none() {
        eprintln!("error: --ci requires an explicit --seed");
        return ExitCode::from(1);
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.max(1)).build_global() {
        eprintln!("warning: could not size the thread pool: {e}");
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_syntax() {
        assert_eq!(parse_delta("1/3").unwrap(), 1.0 / 3.0);
        assert_eq!(parse_delta("0.5").unwrap(), 0.5);
        assert_eq!(parse_delta(" 1 / 4 ").unwrap(), 0.25);
        assert!(parse_delta("0").is_err());
        assert!(parse_delta("3/2").is_err());
        assert!(parse_delta("x").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Infeasible(0)), 2);
        assert_eq!(exit_code(&Error::AllGuessesFailed), 3);
        assert_eq!(exit_code(&Error::BudgetExceeded(1)), 3);
        assert_eq!(exit_code(&Error::Parse { line: 1, msg: String::new() }), 1);
    }

    #[test]
    fn cli_is_well_formed() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
