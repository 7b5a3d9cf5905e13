//! Set-chasing instances and the set-cover gadget built from them.
//!
//! An [`IscInstance`] holds two chases of depth `p` over `n` vertices per
//! layer. The forward chase starts from vertex 1 of layer `p+1` and applies
//! `f_p, …, f_1`; the backward chase does the same with `g`. The gadget has
//! minimum cover `(2p+1)n + 1` when the two results intersect and
//! `(2p+1)n + 2` otherwise.
//!
//! Element layout (0-based ids):
//! - v-layers `1..=p+1`, `2n` each: `in(v_i^j)`, `out(v_i^j)` interleaved.
//!   Layer 1 is shared with the u-side: `out(v_1^j)` doubles as `in(u_1^j)`.
//! - u-layers `2..=p+1`, `2n` each, same interleaving.
//! - `e_1 … e_2p`.
//!
//! Set layout: forward chase sets `S_i^j`, pair sets `R_i^j`, backward chase
//! sets `S_{p+i}^j`, pair sets `T_i^j`, then the two escape sets `E_v`, `E_u`.
//!
//! The `.isc` format is a header `n=<int> p=<int>` followed by lines
//! `f <i> <j>: <l1> <l2> …` (and `g` for the backward chase), all 1-based.
//! Missing lines mean an empty image.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{is_skippable, parse_header};
use crate::model::{ElementId, SetRecord, SetSystem};
use crate::offline::{exact_cover, ProjectedInstance};

/// Gadgets with more elements than this are refused by [`verify_equivalence`].
pub const MAX_VERIFY_ELEMENTS: u32 = 256;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IscInstance {
    pub n: u32,
    pub p: u32,
    /// `f[i][j]`: image of vertex `j` of layer `i+2` in layer `i+1` (0-based).
    pub f: Vec<Vec<Vec<u32>>>,
    pub g: Vec<Vec<Vec<u32>>>,
}

impl IscInstance {
    /// All images empty.
    pub fn empty(n: u32, p: u32) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::BadParams(format!("need n, p >= 1, got n={n} p={p}")));
        }
        let table = vec![vec![Vec::new(); n as usize]; p as usize];
        Ok(IscInstance { n, p, f: table.clone(), g: table })
    }

    /// Every image is a uniformly random subset.
    pub fn random(n: u32, p: u32, seed: u64) -> Result<Self> {
        let mut isc = Self::empty(n, p)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for table in [&mut isc.f, &mut isc.g] {
            for img in table.iter_mut().flatten() {
                *img = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
            }
        }
        Ok(isc)
    }

    fn validate(&self) -> Result<()> {
        let shape_ok = |t: &Vec<Vec<Vec<u32>>>| {
            t.len() == self.p as usize && t.iter().all(|layer| layer.len() == self.n as usize)
        };
        if self.n == 0 || self.p == 0 || !shape_ok(&self.f) || !shape_ok(&self.g) {
            return Err(Error::BadParams("function tables do not match n and p".into()));
        }
        if self.f.iter().chain(&self.g).flatten().flatten().any(|&l| l >= self.n) {
            return Err(Error::BadParams("image outside [n]".into()));
        }
        Ok(())
    }
}

fn chase_one(table: &[Vec<Vec<u32>>], n: u32) -> Vec<bool> {
    let mut cur = vec![false; n as usize];
    cur[0] = true;
    for layer in table.iter().rev() {
        let mut next = vec![false; n as usize];
        for (j, img) in layer.iter().enumerate() {
            if cur[j] {
                for &l in img {
                    next[l as usize] = true;
                }
            }
        }
        cur = next;
    }
    cur
}

/// Whether the forward and backward chase results intersect.
pub fn chase(isc: &IscInstance) -> bool {
    let a = chase_one(&isc.f, isc.n);
    let b = chase_one(&isc.g, isc.n);
    a.iter().zip(&b).any(|(x, y)| *x && *y)
}

pub fn parse_isc(text: &str) -> Result<IscInstance> {
    let perr = |line, msg: String| Error::Parse { line, msg };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !is_skippable(l));
    let (hline, header) = lines.next().ok_or_else(|| perr(1, "missing header".into()))?;
    let h = parse_header(header, hline, &["n", "p"])?;
    let (n, p) = (h[0], h[1]);
    if n == 0 || p == 0 || n > u32::MAX as u64 || p > u32::MAX as u64 {
        return Err(perr(hline, format!("need n, p >= 1, got n={n} p={p}")));
    }
    let mut isc = IscInstance::empty(n as u32, p as u32)?;
    let mut seen = std::collections::HashSet::new();
    for (lineno, line) in lines {
        let (head, rest) = line.split_once(':').ok_or_else(|| perr(lineno, "expected '<f|g> <i> <j>: ...'".into()))?;
        let head: Vec<&str> = head.split_whitespace().collect();
        let [tag, i, j] = head[..] else {
            return Err(perr(lineno, "expected '<f|g> <i> <j>: ...'".into()));
        };
        let num = |t: &str, hi: u64| match t.parse::<u64>() {
            Ok(v) if (1..=hi).contains(&v) => Ok(v as u32 - 1),
            _ => Err(perr(lineno, format!("'{t}' is not in 1..={hi}"))),
        };
        let (i, j) = (num(i, p)?, num(j, n)?);
        let table = match tag {
            "f" => &mut isc.f,
            "g" => &mut isc.g,
            _ => return Err(perr(lineno, format!("unknown tag '{tag}'"))),
        };
        if !seen.insert((tag.to_string(), i, j)) {
            return Err(perr(lineno, format!("duplicate line for {tag} {} {}", i + 1, j + 1)));
        }
        let mut img = rest.split_whitespace().map(|t| num(t, n)).collect::<Result<Vec<_>>>()?;
        img.sort_unstable();
        img.dedup();
        table[i as usize][j as usize] = img;
    }
    Ok(isc)
}

pub fn to_isc_string(isc: &IscInstance) -> String {
    let mut out = format!("n={} p={}\n", isc.n, isc.p);
    for (tag, table) in [("f", &isc.f), ("g", &isc.g)] {
        for (i, layer) in table.iter().enumerate() {
            for (j, img) in layer.iter().enumerate() {
                write!(out, "{tag} {} {}:", i + 1, j + 1).unwrap();
                for l in img {
                    write!(out, " {}", l + 1).unwrap();
                }
                out.push('\n');
            }
        }
    }
    out
}

pub fn load_isc(path: &Path) -> Result<IscInstance> {
    parse_isc(&std::fs::read_to_string(path)?)
}

pub fn save_isc(isc: &IscInstance, path: &Path) -> Result<()> {
    std::fs::write(path, to_isc_string(isc))?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct GadgetInstance {
    pub system: SetSystem,
    pub element_names: Vec<String>,
    pub set_names: Vec<String>,
}

impl GadgetInstance {
    /// Sidecar listing `e <id> <name>` and `s <id> <name>` lines.
    pub fn names_string(&self) -> String {
        let mut out = String::new();
        for (i, name) in self.element_names.iter().enumerate() {
            writeln!(out, "e {i} {name}").unwrap();
        }
        for (i, name) in self.set_names.iter().enumerate() {
            writeln!(out, "s {i} {name}").unwrap();
        }
        out
    }
}

/// `(2p+1)·2n + 2p`.
pub fn gadget_element_count(n: u32, p: u32) -> u32 {
    (2 * p + 1) * 2 * n + 2 * p
}

struct Layout {
    n: u32,
    p: u32,
}

impl Layout {
    /// `in(v_i^j)`, 1-based layer, 0-based vertex.
    fn v_in(&self, i: u32, j: u32) -> ElementId {
        (i - 1) * 2 * self.n + 2 * j
    }
    fn v_out(&self, i: u32, j: u32) -> ElementId {
        self.v_in(i, j) + 1
    }
    fn u_in(&self, i: u32, j: u32) -> ElementId {
        if i == 1 {
            self.v_out(1, j)
        } else {
            (self.p + 1) * 2 * self.n + (i - 2) * 2 * self.n + 2 * j
        }
    }
    fn u_out(&self, i: u32, j: u32) -> ElementId {
        debug_assert!(i >= 2);
        self.u_in(i, j) + 1
    }
    /// `e_i`, 1-based.
    fn e(&self, i: u32) -> ElementId {
        (2 * self.p + 1) * 2 * self.n + i - 1
    }
}

pub fn build_gadget(isc: &IscInstance) -> Result<GadgetInstance> {
    isc.validate()?;
    let (n, p) = (isc.n, isc.p);
    let lay = Layout { n, p };
    let total = gadget_element_count(n, p);

    let mut element_names = vec![String::new(); total as usize];
    for j in 0..n {
        element_names[lay.v_in(1, j) as usize] = format!("in(v_1^{})", j + 1);
        element_names[lay.v_out(1, j) as usize] = format!("out(v_1^{})=in(u_1^{})", j + 1, j + 1);
        for i in 2..=p + 1 {
            element_names[lay.v_in(i, j) as usize] = format!("in(v_{i}^{})", j + 1);
            element_names[lay.v_out(i, j) as usize] = format!("out(v_{i}^{})", j + 1);
            element_names[lay.u_in(i, j) as usize] = format!("in(u_{i}^{})", j + 1);
            element_names[lay.u_out(i, j) as usize] = format!("out(u_{i}^{})", j + 1);
        }
    }
    for i in 1..=2 * p {
        element_names[lay.e(i) as usize] = format!("e_{i}");
    }

    let mut sets: Vec<(String, Vec<ElementId>)> = Vec::new();
    // forward chase: S_i^j links out(v_{i+1}^j) to the ins of its image;
    // at the top layer only the start vertex gets one
    for i in 1..=p {
        let js = if i == p { 0..1 } else { 0..n };
        for j in js {
            let mut s = vec![lay.v_out(i + 1, j), lay.e(i)];
            s.extend(isc.f[i as usize - 1][j as usize].iter().map(|&l| lay.v_in(i, l)));
            sets.push((format!("S_{i}^{}", j + 1), s));
        }
    }
    for i in 2..=p + 1 {
        for j in 0..n {
            sets.push((format!("R_{i}^{}", j + 1), vec![lay.v_in(i, j), lay.v_out(i, j)]));
        }
    }
    // backward chase: S_{p+i}^j links in(u_i^j) to the outs of its preimage
    for i in 1..=p {
        let table = &isc.g[i as usize - 1];
        for j in 0..n {
            let mut s = vec![lay.u_in(i, j), lay.e(p + i)];
            if i == p {
                if !table[0].contains(&j) {
                    continue;
                }
                s.push(lay.u_out(p + 1, 0));
            } else {
                s.extend((0..n).filter(|&l| table[l as usize].contains(&j)).map(|l| lay.u_out(i + 1, l)));
            }
            sets.push((format!("S_{}^{}", p + i, j + 1), s));
        }
    }
    for j in 0..n {
        sets.push((format!("T_1^{}", j + 1), vec![lay.v_in(1, j), lay.v_out(1, j)]));
    }
    for i in 2..=p + 1 {
        for j in 0..n {
            sets.push((format!("T_{i}^{}", j + 1), vec![lay.u_in(i, j), lay.u_out(i, j)]));
        }
    }
    sets.push(("E_v".into(), (1..=p).map(|i| lay.e(i)).collect()));
    sets.push(("E_u".into(), (p + 1..=2 * p).map(|i| lay.e(i)).collect()));

    let (set_names, elems): (Vec<_>, Vec<_>) = sets.into_iter().unzip();
    let records = elems.into_iter().enumerate().map(|(id, e)| SetRecord::normalized(id as u32, e).0).collect();
    let system = SetSystem::new(total, records, false)?;
    Ok(GadgetInstance { system, element_names, set_names })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub n: u32,
    pub p: u32,
    pub opt: usize,
    pub chase: bool,
    /// `(2p+1)n + 1`.
    pub lower_bound: usize,
    pub pass: bool,
}

/// Solves the gadget exactly and checks that its optimum is the lower bound
/// precisely when the chases intersect, and one more otherwise.
pub fn verify_equivalence(isc: &IscInstance) -> Result<EquivalenceReport> {
    isc.validate()?;
    let total = gadget_element_count(isc.n, isc.p);
    if total > MAX_VERIFY_ELEMENTS {
        return Err(Error::TooLarge(format!("gadget has {total} elements, limit {MAX_VERIFY_ELEMENTS}")));
    }
    let gadget = build_gadget(isc)?;
    let sys = &gadget.system;
    let inst = ProjectedInstance::new((0..sys.n()).collect(), sys.records().iter().map(|r| (r.id, r.elements.clone())));
    let opt = exact_cover(&inst, None)?.len();
    let hit = chase(isc);
    let lower_bound = ((2 * isc.p + 1) * isc.n + 1) as usize;
    let expected = if hit { lower_bound } else { lower_bound + 1 };
    Ok(EquivalenceReport { n: isc.n, p: isc.p, opt, chase: hit, lower_bound, pass: opt == expected })
}

/// All `2^(2pn²)` instances of the given size, in a fixed order.
pub fn enumerate_isc(n: u32, p: u32) -> Result<impl Iterator<Item = IscInstance>> {
    let cells = 2 * p * n;
    let bits = cells * n;
    if bits > 24 {
        return Err(Error::TooLarge(format!("{bits} function-table bits")));
    }
    let base = IscInstance::empty(n, p)?;
    Ok((0u64..1 << bits).map(move |code| {
        let mut isc = base.clone();
        let mut cell = 0;
        for table in [&mut isc.f, &mut isc.g] {
            for img in table.iter_mut().flatten() {
                *img = (0..n).filter(|&l| code >> (cell * n + l) & 1 == 1).collect();
                cell += 1;
            }
        }
        isc
    }))
}
