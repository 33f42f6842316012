//! Nucleotide alphabet, sequences, base-count histograms and FASTA ingestion.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::SeqError;

/// Default k-mer length.
pub const DEFAULT_K: usize = 64;

/// Longest k supported by the packed representations (2-bit planes in a `u64`,
/// 6-bit histogram fields).
pub const MAX_K: usize = 64;

/// Largest count a single 6-bit histogram key field can hold.
pub const KEY_FIELD_MAX: u32 = 63;

/// Number of slots addressable by an 18-bit histogram key.
pub const KEY_SPACE: usize = 1 << 18;

/// A DNA base. The discriminant is the 2-bit code stored in the crossbar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Base {
    A = 0b00,
    T = 0b01,
    G = 0b10,
    C = 0b11,
}

impl Base {
    pub const ALL: [Base; 4] = [Base::A, Base::T, Base::G, Base::C];

    #[inline]
    pub fn code(self) -> u8 {
        self as u8
    }

    #[inline]
    pub fn from_code(code: u8) -> Base {
        Base::ALL[(code & 0b11) as usize]
    }

    pub fn from_char(symbol: char) -> Result<Base, SeqError> {
        match symbol.to_ascii_uppercase() {
            'A' => Ok(Base::A),
            'T' => Ok(Base::T),
            'G' => Ok(Base::G),
            'C' => Ok(Base::C),
            _ => Err(SeqError::InvalidBase(symbol)),
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Base::A => 'A',
            Base::T => 'T',
            Base::G => 'G',
            Base::C => 'C',
        }
    }
}

/// Encodes one nucleotide symbol (case-insensitive) to its 2-bit code.
pub fn encode_base(symbol: char) -> Result<u8, SeqError> {
    Base::from_char(symbol).map(Base::code)
}

/// A non-empty string over {A, T, G, C}.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Sequence(Vec<Base>);

impl Sequence {
    pub fn new(bases: Vec<Base>) -> Result<Self, SeqError> {
        if bases.is_empty() {
            return Err(SeqError::Empty);
        }
        Ok(Sequence(bases))
    }

    pub fn bases(&self) -> &[Base] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false; kept for API symmetry with slices.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn histogram(&self) -> BaseHistogram {
        compute_histogram(&self.0)
    }

    /// Sub-sequence `[start, start + len)`. Panics when out of range.
    pub fn window(&self, start: usize, len: usize) -> Sequence {
        Sequence(self.0[start..start + len].to_vec())
    }

    pub fn into_bases(self) -> Vec<Base> {
        self.0
    }
}

impl FromStr for Sequence {
    type Err = SeqError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bases = s.chars().map(Base::from_char).collect::<Result<Vec<_>, _>>()?;
        Sequence::new(bases)
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{}", b.to_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sequence({self})")
    }
}

/// Base-count vector (#A, #T, #G, #C).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct BaseHistogram {
    pub a: u32,
    pub t: u32,
    pub g: u32,
    pub c: u32,
}

impl BaseHistogram {
    pub const fn new(a: u32, t: u32, g: u32, c: u32) -> Self {
        BaseHistogram { a, t, g, c }
    }

    pub fn total(&self) -> u32 {
        self.a + self.t + self.g + self.c
    }

    pub fn counts(&self) -> [u32; 4] {
        [self.a, self.t, self.g, self.c]
    }

    pub fn from_counts(c: [u32; 4]) -> Self {
        BaseHistogram::new(c[0], c[1], c[2], c[3])
    }

    /// L1 distance between two count vectors.
    pub fn l1(&self, other: &BaseHistogram) -> u32 {
        self.a.abs_diff(other.a)
            + self.t.abs_diff(other.t)
            + self.g.abs_diff(other.g)
            + self.c.abs_diff(other.c)
    }
}

impl fmt::Display for BaseHistogram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{})", self.a, self.t, self.g, self.c)
    }
}

pub fn compute_histogram(bases: &[Base]) -> BaseHistogram {
    let mut counts = [0u32; 4];
    for b in bases {
        counts[b.code() as usize] += 1;
    }
    // code order is A, T, G, C
    BaseHistogram::from_counts(counts)
}

/// Packs a histogram into its 18-bit key: `A << 12 | T << 6 | G`.
/// The C count is implied by k.
pub fn pack_histogram_key(h: &BaseHistogram) -> Result<u32, SeqError> {
    for (name, v) in [('A', h.a), ('T', h.t), ('G', h.g)] {
        if v > KEY_FIELD_MAX {
            return Err(SeqError::KeyOverflow { base: name, count: v });
        }
    }
    Ok((h.a << 12) | (h.t << 6) | h.g)
}

/// Inverse of [`pack_histogram_key`] for sequences of length `k`.
/// Returns `None` when the stored fields already exceed `k`.
pub fn unpack_histogram_key(key: u32, k: u32) -> Option<BaseHistogram> {
    let a = (key >> 12) & 0x3f;
    let t = (key >> 6) & 0x3f;
    let g = key & 0x3f;
    let atg = a + t + g;
    if key >= KEY_SPACE as u32 || atg > k {
        return None;
    }
    Some(BaseHistogram::new(a, t, g, k - atg))
}

/// Number of histograms of a length-`k` sequence, `C(k + 3, 3)`.
pub fn count_valid_histograms(k: u64) -> u64 {
    (k + 3) * (k + 2) * (k + 1) / 6
}

/// Every histogram whose counts sum to `k`, in lexicographic (A, T, G) order.
pub fn all_histograms(k: u32) -> impl Iterator<Item = BaseHistogram> {
    (0..=k).flat_map(move |a| {
        (0..=k - a).flat_map(move |t| (0..=k - a - t).map(move |g| BaseHistogram::new(a, t, g, k - a - t - g)))
    })
}

/// A fixed-length k-mer together with its origin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KMerRecord {
    pub sequence: Sequence,
    pub species_id: u32,
    pub source_offset: u64,
}

/// A maximal run of canonical bases inside a FASTA record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    /// 0-based position of the first base within the record.
    pub offset: u64,
    pub sequence: Sequence,
}

/// A genome (or read) as ingested from FASTA. Non-ACGT symbols split the
/// record into [`Segment`]s so that no k-mer window spans them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Genome {
    pub segments: Vec<Segment>,
    /// Total record length including ambiguity symbols.
    pub len: u64,
}

impl Genome {
    /// Whether the record is made only of canonical bases.
    pub fn is_clean(&self) -> bool {
        self.segments.len() == 1 && self.segments[0].sequence.len() as u64 == self.len
    }

    /// The record as a single [`Sequence`], if it is clean.
    pub fn as_sequence(&self) -> Option<&Sequence> {
        self.is_clean().then(|| &self.segments[0].sequence)
    }

    pub fn canonical_len(&self) -> u64 {
        self.segments.iter().map(|s| s.sequence.len() as u64).sum()
    }
}

impl From<Sequence> for Genome {
    fn from(sequence: Sequence) -> Self {
        Genome {
            len: sequence.len() as u64,
            segments: vec![Segment { offset: 0, sequence }],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FastaRecord {
    pub name: String,
    pub genome: Genome,
}

pub fn parse_fasta(path: impl AsRef<Path>) -> Result<Vec<FastaRecord>, SeqError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| SeqError::Io(format!("{}: {e}", path.display())))?;
    parse_fasta_reader(file)
}

/// Parses multi-record, line-wrapped FASTA.
pub fn parse_fasta_reader(reader: impl Read) -> Result<Vec<FastaRecord>, SeqError> {
    let mut records = Vec::new();
    let mut current: Option<(String, RecordBuilder, usize)> = None;

    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| SeqError::Io(e.to_string()))?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('>') {
            if let Some((name, builder, start)) = current.take() {
                records.push(builder.finish(name, start)?);
            }
            let name = header.trim().to_string();
            if name.is_empty() {
                return Err(SeqError::Parse { line: line_no, msg: "empty record name".into() });
            }
            current = Some((name, RecordBuilder::default(), line_no));
            continue;
        }
        if line.starts_with(';') {
            continue;
        }
        let Some((_, builder, _)) = current.as_mut() else {
            return Err(SeqError::Parse { line: line_no, msg: "sequence data before first header".into() });
        };
        for ch in line.chars() {
            if ch.is_whitespace() {
                continue;
            }
            if !ch.is_ascii_alphabetic() {
                return Err(SeqError::Parse { line: line_no, msg: format!("unexpected symbol {ch:?}") });
            }
            builder.push(Base::from_char(ch).ok());
        }
    }
    if let Some((name, builder, start)) = current.take() {
        records.push(builder.finish(name, start)?);
    }
    if records.is_empty() {
        return Err(SeqError::Parse { line: 0, msg: "no FASTA records".into() });
    }
    Ok(records)
}

#[derive(Default)]
struct RecordBuilder {
    segments: Vec<Segment>,
    run: Vec<Base>,
    run_start: u64,
    pos: u64,
}

impl RecordBuilder {
    fn push(&mut self, base: Option<Base>) {
        match base {
            Some(b) => {
                if self.run.is_empty() {
                    self.run_start = self.pos;
                }
                self.run.push(b);
            }
            None => self.close_run(),
        }
        self.pos += 1;
    }

    fn close_run(&mut self) {
        if !self.run.is_empty() {
            let bases = std::mem::take(&mut self.run);
            self.segments.push(Segment { offset: self.run_start, sequence: Sequence(bases) });
        }
    }

    fn finish(mut self, name: String, header_line: usize) -> Result<FastaRecord, SeqError> {
        self.close_run();
        if self.pos == 0 {
            return Err(SeqError::Parse { line: header_line, msg: format!("record {name:?} has no sequence") });
        }
        Ok(FastaRecord { name, genome: Genome { segments: self.segments, len: self.pos } })
    }
}

/// Writes records as FASTA wrapped at `width` columns.
pub fn write_fasta<W: std::io::Write>(mut out: W, records: &[(String, Sequence)], width: usize) -> std::io::Result<()> {
    for (name, seq) in records {
        writeln!(out, ">{name}")?;
        let s = seq.to_string();
        for chunk in s.as_bytes().chunks(width.max(1)) {
            out.write_all(chunk)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Reads whole-file FASTA and returns clean sequences, failing on any
/// record with ambiguity symbols. Used for read sets.
pub fn read_clean_fasta(path: impl AsRef<Path>) -> Result<Vec<(String, Sequence)>, SeqError> {
    parse_fasta(path)?
        .into_iter()
        .map(|r| match r.genome.as_sequence() {
            Some(s) => Ok((r.name, s.clone())),
            None => Err(SeqError::Ambiguous(r.name)),
        })
        .collect()
}
