//! `bench` subcommand: one CSV row per (instance, delta, offline mode).

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use streamcover::generate::{generate_instance, GeneratorKind};
use streamcover::geom::{geom_solve_traced, load_geo, DiscStream, GeoInstance, GeomOptions};
use streamcover::io::{load_instance, LoadOptions};
use streamcover::iter_cover::solve_traced;
use streamcover::oracle::{brute_force_optimal, MAX_ORACLE_SETS};
use streamcover::stream::{PassStream, SpaceLedger};
use streamcover::{Error, OfflineMode, SetSystem, SolveParams};

use crate::{csv_err, is_geo, parse_delta, Ctx, Format, Offline};

pub const HEADER: [&str; 12] =
    ["instance", "n", "m", "algorithm", "delta", "size", "opt", "ratio", "passes", "peak_space_units", "wall_ms", "seed"];

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Benchmark every instance file in this directory.
    #[arg(long, conflicts_with = "gen")]
    dir: Option<PathBuf>,
    /// Generate instances instead: uniform, planted or sparse.
    #[arg(long)]
    gen: Option<String>,
    #[arg(long, default_value_t = 10)]
    count: u32,
    #[arg(long, default_value_t = 64)]
    n: u32,
    #[arg(long, default_value_t = 32)]
    m: u32,
    #[arg(long, default_value_t = 4)]
    opt: u32,
    #[arg(long, default_value_t = 0.1)]
    density: f64,
    #[arg(long, default_value_t = 8)]
    s_cap: u32,
    /// Comma-separated trade-off values.
    #[arg(long, default_value = "1,1/2,1/3", value_delimiter = ',', value_parser = parse_delta)]
    deltas: Vec<f64>,
    #[arg(long, value_enum, default_value = "exact,greedy", value_delimiter = ',')]
    offline: Vec<Offline>,
    #[arg(long, default_value_t = 2.0)]
    c: f64,
    /// Output CSV file; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

enum Loaded {
    Sets(SetSystem),
    Geo(GeoInstance),
}

struct Instance {
    name: String,
    data: Loaded,
}

#[derive(Serialize)]
struct Row {
    instance: String,
    n: u32,
    m: u32,
    algorithm: String,
    delta: String,
    size: String,
    opt: String,
    ratio: String,
    passes: String,
    peak_space_units: String,
    wall_ms: String,
    seed: u64,
}

fn load_dir(dir: &PathBuf) -> streamcover::Result<Vec<Instance>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "ssc" || e == "bin" || e == "geo"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let data =
                if is_geo(&p) { Loaded::Geo(load_geo(&p)?) } else { Loaded::Sets(load_instance(&p, LoadOptions::default())?) };
            Ok(Instance { name, data })
        })
        .collect()
}

fn generate(a: &BenchArgs, kind: &str, seed: u64) -> streamcover::Result<Vec<Instance>> {
    let gk = match kind {
        "uniform" => GeneratorKind::UniformRandom { density: a.density },
        "planted" => GeneratorKind::PlantedCover { opt_size: a.opt },
        "sparse" => GeneratorKind::Sparse { s_cap: a.s_cap },
        other => return Err(Error::BadParams(format!("unknown generator '{other}'"))),
    };
    (0..a.count)
        .map(|i| {
            let g = generate_instance(gk, a.n, a.m, seed.wrapping_add(i as u64))?;
            Ok(Instance { name: format!("{kind}-{i}"), data: Loaded::Sets(g.system) })
        })
        .collect()
}

fn dash<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".into(), |v| v.to_string())
}

fn run_row(ctx: &Ctx, inst: &Instance, opt: Option<usize>, params: &SolveParams, c: f64) -> Row {
    let start = Instant::now();
    let mut ledger = SpaceLedger::new();
    let (n, m, result) = match &inst.data {
        Loaded::Sets(sys) => {
            let r = match sys.first_uncoverable() {
                Some(e) => Err(Error::Infeasible(e)),
                None => solve_traced(&mut PassStream::from_system(sys), params, &mut ledger).map(|r| r.cover),
            };
            (sys.n(), sys.m(), r)
        }
        Loaded::Geo(g) => {
            let r = g.discs().and_then(|d| {
                geom_solve_traced(&g.points, &mut DiscStream::new(d), params, GeomOptions::default(), &mut ledger)
                    .map(|r| r.cover)
            });
            (g.points.len() as u32, g.shapes.len() as u32, r)
        }
    };
    let wall_ms = ctx.wall_ms(start);
    let algorithm = match (&inst.data, params.offline) {
        (Loaded::Geo(_), OfflineMode::Exact) => "geom-exact",
        (Loaded::Geo(_), OfflineMode::Greedy) => "geom-greedy",
        (Loaded::Sets(_), OfflineMode::Exact) => "iter-exact",
        (Loaded::Sets(_), OfflineMode::Greedy) => "iter-greedy",
    };
    let cover = match result {
        Ok(c) => Some(c),
        Err(e) => {
            eprintln!("{}: {algorithm} delta={:.4} c={c}: {e}", inst.name, params.delta);
            None
        }
    };
    let size = cover.as_ref().map(|c| c.len());
    let ratio = match (size, opt) {
        (Some(s), Some(o)) if o > 0 => Some(format!("{:.4}", s as f64 / o as f64)),
        _ => None,
    };
    Row {
        instance: inst.name.clone(),
        n,
        m,
        algorithm: algorithm.into(),
        delta: format!("{:.4}", params.delta),
        size: dash(size),
        opt: dash(opt),
        ratio: dash(ratio),
        passes: dash(cover.as_ref().map(|c| c.stats.passes)),
        peak_space_units: dash(cover.as_ref().map(|c| c.stats.peak_space_units)),
        wall_ms,
        seed: params.seed,
    }
}

fn optimum(inst: &Instance) -> Option<usize> {
    let sys = match &inst.data {
        Loaded::Sets(s) => s.clone(),
        Loaded::Geo(g) => g.to_set_system().ok()?,
    };
    if sys.m() > MAX_ORACLE_SETS {
        return None;
    }
    brute_force_optimal(&sys).ok().map(|r| r.opt_size)
}

pub fn cmd_bench(ctx: &Ctx, a: &BenchArgs) -> streamcover::Result<()> {
    let instances = match (&a.dir, &a.gen) {
        (Some(d), _) => load_dir(d)?,
        (None, Some(kind)) => generate(a, kind, ctx.seed)?,
        (None, None) => return Err(Error::BadParams("bench needs --dir or --gen".into())),
    };
    let opts: Vec<Option<usize>> = instances.par_iter().map(optimum).collect();
    let mut jobs = Vec::new();
    for (i, _) in instances.iter().enumerate() {
        for &delta in &a.deltas {
            for &off in &a.offline {
                jobs.push((i, SolveParams { delta, c: a.c, offline: off.into(), seed: ctx.seed }));
            }
        }
    }
    let rows: Vec<Row> = jobs.par_iter().map(|(i, p)| run_row(ctx, &instances[*i], opts[*i], p, a.c)).collect();

    if ctx.format == Format::Json {
        let text = serde_json::to_string_pretty(&rows).expect("serializable");
        match &a.output {
            Some(p) => fs::write(p, text + "\n")?,
            None => println!("{text}"),
        }
        return Ok(());
    }
    let sink: Box<dyn std::io::Write> = match &a.output {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
    w.write_record(HEADER).map_err(csv_err)?;
    for r in &rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
