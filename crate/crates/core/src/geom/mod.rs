//! Points in the plane covered by closed discs.
//!
//! Coordinates are integers in units of `1/scale`; all containment tests are
//! exact. The `.geo` text format:
//!
//! ```text
//! n=<points> m=<shapes> scale=<int>
//! p <x> <y>
//! d <cx> <cy> <r>
//! ```
//!
//! Values may be written as decimals as long as they become integers after
//! multiplication by `scale`. Shape ids follow shape-line order. Rectangle
//! (`r`) and triangle (`t`) lines are parsed and kept but cannot be solved.

mod solve;

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{is_skippable, parse_header};
use crate::model::{SetId, SetRecord, SetSystem};
use crate::stream::SpaceLedger;

pub use solve::{geom_solve, geom_solve_traced, GeomOptions, GeomReport, GeomTrace, Threshold};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Point2 {
    pub x: i64,
    pub y: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disc {
    pub cx: i64,
    pub cy: i64,
    pub r: i64,
    pub id: SetId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    Disc(Disc),
    /// Raw coordinates of a rectangle or triangle line, tagged `r` or `t`.
    Other { tag: char, id: SetId, coords: Vec<i64> },
}

impl Shape {
    pub fn id(&self) -> SetId {
        match self {
            Shape::Disc(d) => d.id,
            Shape::Other { id, .. } => *id,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeoInstance {
    pub scale: u64,
    pub points: Vec<Point2>,
    pub shapes: Vec<Shape>,
}

impl GeoInstance {
    /// All shapes as discs, or `UnsupportedShape` for the first non-disc.
    pub fn discs(&self) -> Result<Vec<Disc>> {
        self.shapes
            .iter()
            .map(|s| match s {
                Shape::Disc(d) => Ok(*d),
                Shape::Other { tag, .. } => Err(Error::UnsupportedShape(*tag)),
            })
            .collect()
    }

    /// The equivalent abstract set system (discs may be empty).
    pub fn to_set_system(&self) -> Result<SetSystem> {
        let records = self
            .discs()?
            .iter()
            .map(|d| Ok(SetRecord { id: d.id, elements: points_in_disc(&self.points, d)? }))
            .collect::<Result<Vec<_>>>()?;
        SetSystem::new(self.points.len() as u32, records, true)
    }
}

/// Indices of the points in the closed disc, ascending.
pub fn points_in_disc(points: &[Point2], d: &Disc) -> Result<Vec<u32>> {
    let r2 = (d.r as i128).checked_mul(d.r as i128).ok_or(Error::Overflow)?;
    let mut out = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let dx = p.x as i128 - d.cx as i128;
        let dy = p.y as i128 - d.cy as i128;
        let dist = dx
            .checked_mul(dx)
            .and_then(|a| dy.checked_mul(dy).and_then(|b| a.checked_add(b)))
            .ok_or(Error::Overflow)?;
        if dist <= r2 {
            out.push(i as u32);
        }
    }
    Ok(out)
}

/// Distinct shallow projections onto a point sample, each with the first
/// disc that produced it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CanonicalFamily {
    pub entries: Vec<(Vec<u32>, SetId)>,
    /// Discs skipped for hitting more than `w` sampled points.
    pub skipped_deep: usize,
}

/// Incremental dedup of projections; the first disc seen with a given
/// projection becomes its witness.
pub(crate) struct CanonicalBuilder {
    seen: HashSet<Vec<u32>>,
    w: usize,
    fam: CanonicalFamily,
}

impl CanonicalBuilder {
    pub(crate) fn new(w: usize) -> Self {
        CanonicalBuilder { seen: HashSet::new(), w, fam: CanonicalFamily::default() }
    }

    /// Offers a sorted projection; returns the units charged.
    pub(crate) fn offer(&mut self, proj: Vec<u32>, id: SetId, ledger: &mut SpaceLedger) -> Result<i64> {
        if proj.is_empty() {
            return Ok(0);
        }
        if proj.len() > self.w {
            self.fam.skipped_deep += 1;
            return Ok(0);
        }
        if self.seen.contains(&proj) {
            return Ok(0);
        }
        let units = proj.len() as i64 + 1;
        ledger.charge(units)?;
        self.seen.insert(proj.clone());
        self.fam.entries.push((proj, id));
        Ok(units)
    }

    pub(crate) fn finish(self) -> CanonicalFamily {
        self.fam
    }
}

/// Builds the canonical family in one pass over `discs`.
///
/// `sample` holds point indices; each disc's projection onto it is kept if
/// it is nonempty, has at most `w` points and was not seen before. Entries
/// are charged to `ledger` (projection size plus one) and left charged.
pub fn canonical_discs(
    points: &[Point2],
    sample: &[u32],
    discs: &mut DiscStream,
    w: usize,
    ledger: &mut SpaceLedger,
) -> Result<CanonicalFamily> {
    let sub: Vec<Point2> = sample.iter().map(|&i| points[i as usize]).collect();
    let mut b = CanonicalBuilder::new(w);
    discs.scan(|d| {
        let mut proj: Vec<u32> = points_in_disc(&sub, d)?.into_iter().map(|j| sample[j as usize]).collect();
        proj.sort_unstable();
        b.offer(proj, d.id, ledger).map(|_| ())
    })?;
    Ok(b.finish())
}

/// Pass-counted sequence of discs.
#[derive(Clone, Debug)]
pub struct DiscStream {
    discs: Vec<Disc>,
    passes: u64,
}

impl DiscStream {
    pub fn new(discs: Vec<Disc>) -> Self {
        DiscStream { discs, passes: 0 }
    }

    pub fn len(&self) -> usize {
        self.discs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.discs.is_empty()
    }

    pub fn pass_count(&self) -> u64 {
        self.passes
    }

    /// One full pass; counted even if `f` fails part-way.
    pub fn scan<F>(&mut self, f: F) -> Result<()>
    where
        F: FnMut(&Disc) -> Result<()>,
    {
        self.passes += 1;
        self.discs.iter().try_for_each(f)
    }
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Parses a decimal like `-1.25` into an integer number of `1/scale` units.
fn parse_scaled(tok: &str, scale: u64, line: usize) -> Result<i64> {
    let (neg, body) = match tok.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, tok.strip_prefix('+').unwrap_or(tok)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    let digits_ok = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    if int.is_empty() && frac.is_empty() || !digits_ok(int) || !digits_ok(frac) {
        return Err(perr(line, format!("bad number '{tok}'")));
    }
    let frac = frac.trim_end_matches('0');
    let den = 10i128.checked_pow(frac.len() as u32).ok_or(Error::Overflow)?;
    let mut num: i128 = 0;
    for b in int.bytes().chain(frac.bytes()) {
        num = num.checked_mul(10).and_then(|v| v.checked_add((b - b'0') as i128)).ok_or(Error::Overflow)?;
    }
    let scaled = num.checked_mul(scale as i128).ok_or(Error::Overflow)?;
    if scaled % den != 0 {
        return Err(perr(line, format!("'{tok}' is not a multiple of 1/{scale}")));
    }
    let v = scaled / den;
    let v = if neg { -v } else { v };
    i64::try_from(v).map_err(|_| Error::Overflow)
}

fn format_scaled(v: i64, scale: u64) -> Result<String> {
    let s = scale as i128;
    let v = v as i128;
    if v % s == 0 {
        return Ok((v / s).to_string());
    }
    let digits = scale.ilog10();
    if 10u64.pow(digits) != scale {
        return Err(Error::BadParams(format!("cannot write {v}/{scale} as a decimal")));
    }
    let sign = if v < 0 { "-" } else { "" };
    let a = v.abs();
    let frac = format!("{:0width$}", a % s, width = digits as usize);
    Ok(format!("{sign}{}.{}", a / s, frac.trim_end_matches('0')))
}

pub fn parse_geo(text: &str) -> Result<GeoInstance> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !is_skippable(l));
    let (hline, header) = lines.next().ok_or_else(|| perr(1, "missing header"))?;
    let h = parse_header(header, hline, &["n", "m", "scale"])?;
    let (n, m, scale) = (h[0], h[1], h[2]);
    if scale == 0 {
        return Err(perr(hline, "scale must be positive"));
    }
    let mut points = Vec::new();
    let mut shapes = Vec::new();
    for (lineno, line) in lines {
        let mut toks = line.split_whitespace();
        let tag = toks.next().unwrap();
        let vals = toks.map(|t| parse_scaled(t, scale, lineno)).collect::<Result<Vec<_>>>()?;
        let id = shapes.len() as SetId;
        match (tag, vals.len()) {
            ("p", 2) => points.push(Point2 { x: vals[0], y: vals[1] }),
            ("d", 3) => {
                if vals[2] < 0 {
                    return Err(perr(lineno, "negative radius"));
                }
                shapes.push(Shape::Disc(Disc { cx: vals[0], cy: vals[1], r: vals[2], id }));
            }
            ("r", 4) | ("t", 6) => shapes.push(Shape::Other { tag: tag.chars().next().unwrap(), id, coords: vals }),
            ("p" | "d" | "r" | "t", k) => return Err(perr(lineno, format!("wrong number of values ({k}) for '{tag}'"))),
            _ => return Err(perr(lineno, format!("unknown line tag '{tag}'"))),
        }
    }
    if points.len() as u64 != n || shapes.len() as u64 != m {
        return Err(perr(
            hline,
            format!("header says n={n} m={m}, found {} points and {} shapes", points.len(), shapes.len()),
        ));
    }
    Ok(GeoInstance { scale, points, shapes })
}

pub fn to_geo_string(inst: &GeoInstance) -> Result<String> {
    let f = |v| format_scaled(v, inst.scale);
    let mut out = format!("n={} m={} scale={}\n", inst.points.len(), inst.shapes.len(), inst.scale);
    for p in &inst.points {
        writeln!(out, "p {} {}", f(p.x)?, f(p.y)?).unwrap();
    }
    for s in &inst.shapes {
        match s {
            Shape::Disc(d) => writeln!(out, "d {} {} {}", f(d.cx)?, f(d.cy)?, f(d.r)?).unwrap(),
            Shape::Other { tag, coords, .. } => {
                let vals = coords.iter().map(|&v| f(v)).collect::<Result<Vec<_>>>()?;
                writeln!(out, "{tag} {}", vals.join(" ")).unwrap();
            }
        }
    }
    Ok(out)
}

pub fn load_geo(path: &Path) -> Result<GeoInstance> {
    parse_geo(&std::fs::read_to_string(path)?)
}

pub fn save_geo(inst: &GeoInstance, path: &Path) -> Result<()> {
    std::fs::write(path, to_geo_string(inst)?)?;
    Ok(())
}

/// A planted instance and the ids of its cluster discs.
#[derive(Clone, Debug)]
pub struct PlantedGeo {
    pub instance: GeoInstance,
    pub planted: Vec<SetId>,
}

/// `clusters` far-apart groups of points, each exactly covered by one disc
/// of radius `radius`, plus `noise` smaller discs centred on random points.
/// No disc reaches two clusters, so the optimum is `clusters`.
pub fn generate_planted_discs(clusters: u32, n: u32, noise: u32, seed: u64) -> Result<PlantedGeo> {
    if clusters == 0 || n < clusters {
        return Err(Error::BadParams(format!("need 1 <= clusters <= n, got clusters={clusters} n={n}")));
    }
    const RADIUS: i64 = 1000;
    let spacing = 5 * RADIUS;
    let side = (clusters as f64).sqrt().ceil() as i64;
    let centers: Vec<Point2> =
        (0..clusters as i64).map(|c| Point2 { x: (c % side) * spacing, y: (c / side) * spacing }).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n as usize);
    for i in 0..n as usize {
        let c = centers[i % clusters as usize];
        let (dx, dy) = loop {
            let (dx, dy) = (rng.gen_range(-RADIUS..=RADIUS), rng.gen_range(-RADIUS..=RADIUS));
            if dx * dx + dy * dy <= RADIUS * RADIUS {
                break (dx, dy);
            }
        };
        points.push(Point2 { x: c.x + dx, y: c.y + dy });
    }
    let total = clusters + noise;
    let planted_pos: Vec<u32> = {
        let mut ids = rand::seq::index::sample(&mut rng, total as usize, clusters as usize).into_vec();
        ids.sort_unstable();
        ids.into_iter().map(|i| i as u32).collect()
    };
    let mut shapes = Vec::with_capacity(total as usize);
    let mut next_cluster = 0usize;
    for id in 0..total {
        let d = if planted_pos.binary_search(&id).is_ok() {
            let c = centers[next_cluster];
            next_cluster += 1;
            Disc { cx: c.x, cy: c.y, r: RADIUS, id }
        } else {
            let p = points[rng.gen_range(0..points.len())];
            Disc { cx: p.x, cy: p.y, r: rng.gen_range(RADIUS / 10..=RADIUS), id }
        };
        shapes.push(Shape::Disc(d));
    }
    Ok(PlantedGeo { instance: GeoInstance { scale: 1, points, shapes }, planted: planted_pos })
}
