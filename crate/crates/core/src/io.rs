//! `.ssc` text and `SSC1` binary instance formats.
//!
//! Text: a header `n=<int> m=<int>`, then one `<set_id>: <e1> <e2> ...` line
//! per set with ids ascending. Lines starting with `#` are comments.
//!
//! Binary: magic `SSC1`, little-endian `u32 n`, `u32 m`, then per set
//! `u32 id`, `u32 len` and `len` element ids.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{ElementId, SetId, SetRecord, SetSystem};

pub const BINARY_MAGIC: &[u8; 4] = b"SSC1";

#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    pub allow_empty: bool,
}

/// Parses a `key=value` header token list, e.g. `n=3 m=2`.
pub(crate) fn parse_header(line: &str, lineno: usize, keys: &[&str]) -> Result<Vec<u64>> {
    let mut out = vec![None; keys.len()];
    for tok in line.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: lineno, msg: format!("bad header token '{tok}'") })?;
        let slot = keys
            .iter()
            .position(|&key| key == k)
            .ok_or_else(|| Error::Parse { line: lineno, msg: format!("unknown header key '{k}'") })?;
        let v: u64 = v
            .parse()
            .map_err(|_| Error::Parse { line: lineno, msg: format!("bad value for {k}: '{v}'") })?;
        out[slot] = Some(v);
    }
    keys.iter()
        .zip(out)
        .map(|(k, v)| v.ok_or_else(|| Error::Parse { line: lineno, msg: format!("header missing '{k}'") }))
        .collect()
}

pub(crate) fn is_skippable(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

/// Parses one `<id>: <elements>` line. Element ids are returned raw (not range-checked).
pub(crate) fn parse_set_line(line: &str, lineno: usize) -> Result<(SetId, Vec<u64>)> {
    let (id, rest) = line
        .split_once(':')
        .ok_or_else(|| Error::Parse { line: lineno, msg: "expected '<id>: ...'".into() })?;
    let id: SetId = id
        .trim()
        .parse()
        .map_err(|_| Error::Parse { line: lineno, msg: format!("bad set id '{}'", id.trim()) })?;
    let elements = rest
        .split_whitespace()
        .map(|t| t.parse::<u64>().map_err(|_| Error::Parse { line: lineno, msg: format!("bad element '{t}'") }))
        .collect::<Result<Vec<_>>>()?;
    Ok((id, elements))
}

pub(crate) fn check_elements(id: SetId, raw: Vec<u64>, n: u32) -> Result<Vec<ElementId>> {
    raw.into_iter()
        .map(|e| if e < n as u64 { Ok(e as ElementId) } else { Err(Error::IdOutOfRange { set: id, element: e, n }) })
        .collect()
}

/// Parses `.ssc` text.
pub fn parse_ssc(text: &str, opts: LoadOptions) -> Result<SetSystem> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !is_skippable(l));
    let (hl, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "missing header".into() })?;
    let hv = parse_header(header, hl, &["n", "m"])?;
    let n = u32::try_from(hv[0]).map_err(|_| Error::Parse { line: hl, msg: "n too large".into() })?;
    let m = hv[1];
    let mut records = Vec::new();
    let mut last_line = hl;
    for (lineno, line) in lines {
        last_line = lineno;
        let (id, raw) = parse_set_line(line, lineno)?;
        if id as usize != records.len() {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("set ids must ascend from 0; expected {}, found {id}", records.len()),
            });
        }
        records.push(SetRecord { id, elements: check_elements(id, raw, n)? });
    }
    if records.len() as u64 != m {
        return Err(Error::Parse { line: last_line, msg: format!("header declares m={m}, found {} sets", records.len()) });
    }
    SetSystem::new(n, records, opts.allow_empty)
}

/// Canonical `.ssc` text: header, then one line per set, no comments.
pub fn to_ssc_string(sys: &SetSystem) -> String {
    let mut s = format!("n={} m={}\n", sys.n(), sys.m());
    for r in sys.records() {
        let _ = write!(s, "{}:", r.id);
        for e in &r.elements {
            let _ = write!(s, " {e}");
        }
        s.push('\n');
    }
    s
}

pub fn to_binary(sys: &SetSystem) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + sys.records().iter().map(|r| 8 + 4 * r.len()).sum::<usize>());
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&sys.n().to_le_bytes());
    out.extend_from_slice(&sys.m().to_le_bytes());
    for r in sys.records() {
        out.extend_from_slice(&r.id.to_le_bytes());
        out.extend_from_slice(&(r.len() as u32).to_le_bytes());
        for e in &r.elements {
            out.extend_from_slice(&e.to_le_bytes());
        }
    }
    out
}

pub(crate) fn read_u32(r: &mut impl Read) -> Result<Option<u32>> {
    let mut buf = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut buf[got..])? {
            0 if got == 0 => return Ok(None),
            0 => return Err(Error::Parse { line: 0, msg: "truncated binary record".into() }),
            k => got += k,
        }
    }
    Ok(Some(u32::from_le_bytes(buf)))
}

pub(crate) fn need_u32(r: &mut impl Read) -> Result<u32> {
    read_u32(r)?.ok_or(Error::Parse { line: 0, msg: "unexpected end of binary data".into() })
}

/// Reads one binary set record; `Ok(None)` at clean end of input.
pub(crate) fn read_binary_record(r: &mut impl Read, n: u32) -> Result<Option<SetRecord>> {
    let Some(id) = read_u32(r)? else { return Ok(None) };
    let len = need_u32(r)?;
    let mut raw = Vec::with_capacity(len as usize);
    for _ in 0..len {
        raw.push(need_u32(r)? as u64);
    }
    Ok(Some(SetRecord { id, elements: check_elements(id, raw, n)? }))
}

pub fn parse_binary(bytes: &[u8], opts: LoadOptions) -> Result<SetSystem> {
    let mut r = bytes;
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| Error::Parse { line: 0, msg: "missing magic".into() })?;
    if &magic != BINARY_MAGIC {
        return Err(Error::Parse { line: 0, msg: "bad magic".into() });
    }
    let n = need_u32(&mut r)?;
    let m = need_u32(&mut r)?;
    let mut records = Vec::with_capacity(m as usize);
    while let Some(rec) = read_binary_record(&mut r, n)? {
        records.push(rec);
    }
    if records.len() != m as usize {
        return Err(Error::Parse { line: 0, msg: format!("header declares m={m}, found {} sets", records.len()) });
    }
    SetSystem::new(n, records, opts.allow_empty)
}

/// Whether the file at `path` starts with the binary magic.
pub fn is_binary_file(path: &Path) -> Result<bool> {
    let mut f = File::open(path)?;
    let mut magic = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match f.read(&mut magic[got..])? {
            0 => break,
            k => got += k,
        }
    }
    Ok(got == 4 && &magic == BINARY_MAGIC)
}

/// Loads a `.ssc` or `SSC1` file, detecting the format from the magic bytes.
pub fn load_instance(path: &Path, opts: LoadOptions) -> Result<SetSystem> {
    if is_binary_file(path)? {
        parse_binary(&std::fs::read(path)?, opts)
    } else {
        let mut text = String::new();
        BufReader::new(File::open(path)?).read_to_string(&mut text)?;
        parse_ssc(&text, opts)
    }
}

pub fn save_instance(sys: &SetSystem, path: &Path, binary: bool) -> Result<()> {
    let mut f = std::io::BufWriter::new(File::create(path)?);
    if binary {
        f.write_all(&to_binary(sys))?;
    } else {
        f.write_all(to_ssc_string(sys).as_bytes())?;
    }
    f.flush()?;
    Ok(())
}

/// Reads the `n=.. m=..` header of a text file, returning `(n, m, header_line)`.
pub(crate) fn read_text_header(reader: &mut impl BufRead) -> Result<(u32, u32, usize)> {
    let mut line = String::new();
    let mut lineno = 0;
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Err(Error::Parse { line: lineno + 1, msg: "missing header".into() });
        }
        lineno += 1;
        if !is_skippable(&line) {
            break;
        }
    }
    let hv = parse_header(&line, lineno, &["n", "m"])?;
    let n = u32::try_from(hv[0]).map_err(|_| Error::Parse { line: lineno, msg: "n too large".into() })?;
    let m = u32::try_from(hv[1]).map_err(|_| Error::Parse { line: lineno, msg: "m too large".into() })?;
    Ok((n, m, lineno))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_examples() {
        let sys = parse_ssc("n=3 m=2\n0: 0 1\n1: 2\n", LoadOptions::default()).unwrap();
        assert_eq!((sys.n(), sys.m(), sys.is_feasible()), (3, 2, true));
        let sys = parse_ssc("n=3 m=1\n0: 0 1\n", LoadOptions::default()).unwrap();
        assert!(!sys.is_feasible());
        let sys = parse_ssc("# comment\nn=3 m=1\n\n0: 1 1 2\n", LoadOptions::default()).unwrap();
        assert_eq!(sys.records()[0].elements, vec![1, 2]);
        assert_eq!(sys.dup_warnings(), 1);
    }

    #[test]
    fn parse_errors() {
        let o = LoadOptions::default();
        assert!(matches!(parse_ssc("n=3\n", o), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_ssc("n=3 m=1\n0 1 2\n", o), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_ssc("n=3 m=1\n0: 1 x\n", o), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_ssc("n=3 m=2\n0: 1\n", o), Err(Error::Parse { .. })));
        assert!(matches!(parse_ssc("n=3 m=1\n1: 1\n", o), Err(Error::Parse { .. })));
        assert!(matches!(parse_ssc("n=3 m=1\n0: 3\n", o), Err(Error::IdOutOfRange { element: 3, .. })));
        assert!(matches!(parse_ssc("n=3 m=1\n0:\n", o), Err(Error::EmptySet(0))));
        assert!(parse_ssc("n=3 m=1\n0:\n", LoadOptions { allow_empty: true }).is_ok());
    }

    #[test]
    fn canonical_text_is_stable() {
        let text = "n=4 m=3\n0: 0 1\n1: 2 3\n2: 1\n";
        let sys = parse_ssc(text, LoadOptions::default()).unwrap();
        assert_eq!(to_ssc_string(&sys), text);
    }

    #[test]
    fn binary_matches_text() {
        let sys = parse_ssc("n=5 m=2\n0: 0 4\n1: 1 2 3\n", LoadOptions::default()).unwrap();
        let bytes = to_binary(&sys);
        assert_eq!(&bytes[..4], b"SSC1");
        assert_eq!(parse_binary(&bytes, LoadOptions::default()).unwrap(), sys);
        assert!(parse_binary(&bytes[..bytes.len() - 2], LoadOptions::default()).is_err());
    }

    #[test]
    fn load_detects_format() {
        let dir = tempfile::tempdir().unwrap();
        let sys = parse_ssc("n=2 m=1\n0: 0 1\n", LoadOptions::default()).unwrap();
        let t = dir.path().join("a.ssc");
        let b = dir.path().join("a.bin");
        save_instance(&sys, &t, false).unwrap();
        save_instance(&sys, &b, true).unwrap();
        assert_eq!(load_instance(&t, LoadOptions::default()).unwrap(), sys);
        assert_eq!(load_instance(&b, LoadOptions::default()).unwrap(), sys);
    }
}
