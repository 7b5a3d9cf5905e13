//! Pass-counted access to a set family and the space ledger.
//!
//! A [`PassStream`] yields the family in the same order on every pass and
//! counts completed passes. It can be backed by memory, a `.ssc` text file or
//! an `SSC1` binary file; file-backed streams re-read the file on each pass and
//! hold one record at a time.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io::{self, read_binary_record, read_text_header};
use crate::model::{SetRecord, SetSystem};

pub const BUFFER_ENV: &str = "STREAMCOVER_BUFFER";
const DEFAULT_BUFFER: usize = 1 << 20;

fn buffer_size() -> usize {
    std::env::var(BUFFER_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&b: &usize| b > 0)
        .unwrap_or(DEFAULT_BUFFER)
}

enum Source {
    Memory(Vec<SetRecord>),
    Text(PathBuf),
    Binary(PathBuf),
}

enum Cursor {
    Idle,
    Memory { next: usize },
    Text { reader: BufReader<File>, lineno: usize, line: String, buf: SetRecord },
    Binary { reader: BufReader<File>, buf: SetRecord },
}

pub struct PassStream {
    source: Source,
    n: u32,
    m: u32,
    passes: u64,
    cursor: Cursor,
}

impl PassStream {
    pub fn from_system(sys: &SetSystem) -> Self {
        PassStream {
            source: Source::Memory(sys.records().to_vec()),
            n: sys.n(),
            m: sys.m(),
            passes: 0,
            cursor: Cursor::Idle,
        }
    }

    /// Opens a `.ssc` or `SSC1` file without loading its sets.
    pub fn open(path: &Path) -> Result<Self> {
        let binary = io::is_binary_file(path)?;
        let (n, m) = if binary {
            let mut r = BufReader::new(File::open(path)?);
            let mut magic = [0u8; 4];
            std::io::Read::read_exact(&mut r, &mut magic)?;
            (io::need_u32(&mut r)?, io::need_u32(&mut r)?)
        } else {
            let mut r = BufReader::new(File::open(path)?);
            let (n, m, _) = read_text_header(&mut r)?;
            (n, m)
        };
        let source = if binary { Source::Binary(path.to_owned()) } else { Source::Text(path.to_owned()) };
        Ok(PassStream { source, n, m, passes: 0, cursor: Cursor::Idle })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Completed passes.
    pub fn pass_count(&self) -> u64 {
        self.passes
    }

    pub fn in_pass(&self) -> bool {
        !matches!(self.cursor, Cursor::Idle)
    }

    pub fn begin_pass(&mut self) -> Result<()> {
        if self.in_pass() {
            return Err(Error::NestedPass);
        }
        self.cursor = match &self.source {
            Source::Memory(_) => Cursor::Memory { next: 0 },
            Source::Text(p) => {
                let mut reader = BufReader::with_capacity(buffer_size(), File::open(p)?);
                let (_, _, lineno) = read_text_header(&mut reader)?;
                Cursor::Text { reader, lineno, line: String::new(), buf: empty_record() }
            }
            Source::Binary(p) => {
                let mut reader = BufReader::with_capacity(buffer_size(), File::open(p)?);
                let mut head = [0u8; 12];
                std::io::Read::read_exact(&mut reader, &mut head)?;
                Cursor::Binary { reader, buf: empty_record() }
            }
        };
        Ok(())
    }

    /// Next record of the open pass, or `None` once the family is exhausted.
    pub fn next_record(&mut self) -> Result<Option<&SetRecord>> {
        let n = self.n;
        match &mut self.cursor {
            Cursor::Idle => Err(Error::NotInPass),
            Cursor::Memory { next } => {
                let Source::Memory(records) = &self.source else { unreachable!() };
                if *next < records.len() {
                    *next += 1;
                    Ok(Some(&records[*next - 1]))
                } else {
                    Ok(None)
                }
            }
            Cursor::Text { reader, lineno, line, buf } => loop {
                line.clear();
                if reader.read_line(line)? == 0 {
                    return Ok(None);
                }
                *lineno += 1;
                if io::is_skippable(line) {
                    continue;
                }
                let (id, raw) = io::parse_set_line(line, *lineno)?;
                let elements = io::check_elements(id, raw, n)?;
                *buf = SetRecord::normalized(id, elements).0;
                return Ok(Some(buf));
            },
            Cursor::Binary { reader, buf } => match read_binary_record(reader, n)? {
                Some(rec) => {
                    *buf = SetRecord::normalized(rec.id, rec.elements).0;
                    Ok(Some(buf))
                }
                None => Ok(None),
            },
        }
    }

    /// Closes the open pass; counts it even if it was abandoned early.
    pub fn end_pass(&mut self) -> Result<()> {
        if !self.in_pass() {
            return Err(Error::NotInPass);
        }
        self.cursor = Cursor::Idle;
        self.passes += 1;
        Ok(())
    }

    /// One complete pass, feeding every record to `f`.
    pub fn scan<F>(&mut self, mut f: F) -> Result<()>
    where
        F: FnMut(&SetRecord) -> Result<()>,
    {
        self.begin_pass()?;
        let res = (|| {
            while let Some(rec) = self.next_record()? {
                f(rec)?;
            }
            Ok(())
        })();
        self.end_pass()?;
        res
    }
}

fn empty_record() -> SetRecord {
    SetRecord { id: 0, elements: Vec::new() }
}

/// Semantic memory accounting in element-slot units: one unit per stored
/// element index, set id or sampled element id.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SpaceLedger {
    current: i64,
    peak: i64,
    ground: i64,
}

impl SpaceLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charge(&mut self, units: i64) -> Result<()> {
        let next = self.current + units;
        if next < 0 {
            return Err(Error::NegativeBalance { current: self.current, delta: units });
        }
        self.current = next;
        self.peak = self.peak.max(next);
        Ok(())
    }

    /// Charges storage of the ground set; tracked on its own line as well.
    pub fn charge_ground(&mut self, units: i64) -> Result<()> {
        self.charge(units)?;
        self.ground += units;
        Ok(())
    }

    pub fn current(&self) -> i64 {
        self.current
    }

    pub fn peak(&self) -> i64 {
        self.peak
    }

    pub fn ground(&self) -> i64 {
        self.ground
    }
}
