//! Functional model of the neighbor-match search and the sense-amplifier
//! hit decision.
//!
//! A k-mer (k <= 64) is held as two bit planes, one for the high bit and one
//! for the low bit of each 2-bit base code. Comparing a query against the
//! co-located, left and right stored bases is then three plane comparisons
//! with shifts, which is what the crossbar computes column by column.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LengthError, MatchError};
use crate::seq::{Base, MAX_K};

/// A k-mer packed into high/low bit planes. Bit `i` is base `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PackedKmer {
    hi: u64,
    lo: u64,
    len: u8,
}

impl PackedKmer {
    pub fn pack(bases: &[Base]) -> Result<Self, MatchError> {
        if bases.is_empty() || bases.len() > MAX_K {
            return Err(MatchError::UnsupportedK(bases.len()));
        }
        let (mut hi, mut lo) = (0u64, 0u64);
        for (i, b) in bases.iter().enumerate() {
            let code = b.code() as u64;
            hi |= (code >> 1) << i;
            lo |= (code & 1) << i;
        }
        Ok(PackedKmer { hi, lo, len: bases.len() as u8 })
    }

    /// Rebuilds a k-mer from its bit planes; bits above `len` must be clear.
    pub fn from_planes(hi: u64, lo: u64, len: usize) -> Result<Self, MatchError> {
        if len == 0 || len > MAX_K {
            return Err(MatchError::UnsupportedK(len));
        }
        let k = PackedKmer { hi, lo, len: len as u8 };
        if (hi | lo) & !k.mask() != 0 {
            return Err(MatchError::UnsupportedK(len));
        }
        Ok(k)
    }

    pub fn planes(&self) -> (u64, u64) {
        (self.hi, self.lo)
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Base counts without unpacking.
    pub fn histogram(&self) -> crate::seq::BaseHistogram {
        // codes: A=00, T=01, G=10, C=11
        let m = self.mask();
        let (hi, lo) = (self.hi & m, self.lo & m);
        let c = (hi & lo).count_ones();
        let g = (hi & !lo).count_ones();
        let t = (!hi & lo & m).count_ones();
        crate::seq::BaseHistogram::new(self.len as u32 - c - g - t, t, g, c)
    }

    pub fn base(&self, i: usize) -> Base {
        Base::from_code((((self.hi >> i) & 1) << 1 | ((self.lo >> i) & 1)) as u8)
    }

    pub fn unpack(&self) -> Vec<Base> {
        (0..self.len()).map(|i| self.base(i)).collect()
    }

    fn mask(&self) -> u64 {
        if self.len as usize == 64 {
            u64::MAX
        } else {
            (1u64 << self.len) - 1
        }
    }
}

/// Per-position edit flags of one query/k-mer comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EditsVector {
    bits: u64,
    len: u8,
}

impl EditsVector {
    pub fn from_bits(bits: u64, len: usize) -> Self {
        debug_assert!(len <= 64);
        let mask = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
        EditsVector { bits: bits & mask, len: len as u8 }
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn edit_count(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn get(&self, i: usize) -> bool {
        (self.bits >> i) & 1 == 1
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }
}

/// Neighbor-match comparison of `query` against a stored `kmer`.
pub fn edits_vector(kmer: &PackedKmer, query: &PackedKmer) -> Result<EditsVector, LengthError> {
    if kmer.len != query.len {
        return Err(LengthError { expected: kmer.len(), actual: query.len() });
    }
    let mask = kmer.mask();
    let last = 1u64 << (kmer.len - 1);
    let eq = |mh: u64, ml: u64| !(mh ^ query.hi) & !(ml ^ query.lo);

    let center = eq(kmer.hi, kmer.lo);
    // bit i of the shifted planes holds stored base i-1 / i+1
    let left = eq(kmer.hi << 1, kmer.lo << 1) & !1;
    let right = eq(kmer.hi >> 1, kmer.lo >> 1) & !last;
    Ok(EditsVector::from_bits(!(center | left | right) & mask, kmer.len()))
}

/// Convenience wrapper over unpacked bases.
pub fn edits_vector_bases(kmer: &[Base], query: &[Base]) -> Result<EditsVector, MatchError> {
    Ok(edits_vector(&PackedKmer::pack(kmer)?, &PackedKmer::pack(query)?)?)
}

/// Measured hit probabilities of the sense amplifier, keyed by
/// (threshold, number of set bits in the row).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceTable {
    points: BTreeMap<(u32, u32), f64>,
}

/// Monte Carlo hit confidence (%) for thresholds 1..=9 at edit counts 1..=13.
const SA_CONFIDENCE_PERCENT: [[f64; 13]; 9] = [
    [71.9, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [100.0, 77.13, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [100.0, 99.7, 79.1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [100.0, 100.0, 99.05, 79.8, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [100.0, 100.0, 100.0, 97.4, 79.0, 0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [100.0, 100.0, 100.0, 100.0, 93.6, 77.76, 0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [100.0, 100.0, 100.0, 100.0, 100.0, 89.4, 76.7, 0.6, 0.0, 0.0, 0.0, 0.0, 0.0],
    [100.0, 100.0, 100.0, 100.0, 100.0, 99.8, 86.4, 75.1, 1.7, 0.1, 0.0, 0.0, 0.0],
    [100.0, 100.0, 100.0, 100.0, 100.0, 100.0, 100.0, 98.7, 75.6, 27.1, 3.28, 0.2, 0.0],
];

impl ConfidenceTable {
    pub fn empty() -> Self {
        ConfidenceTable { points: BTreeMap::new() }
    }

    /// The built-in measured table (thresholds 1..=9, edit counts 1..=13).
    pub fn builtin() -> Self {
        let mut points = BTreeMap::new();
        for (ti, row) in SA_CONFIDENCE_PERCENT.iter().enumerate() {
            for (ci, pct) in row.iter().enumerate() {
                points.insert((ti as u32 + 1, ci as u32 + 1), pct / 100.0);
            }
        }
        ConfidenceTable { points }
    }

    pub fn from_points(points: impl IntoIterator<Item = ((u32, u32), f64)>) -> Result<Self, MatchError> {
        let table = ConfidenceTable { points: points.into_iter().collect() };
        table.validate()?;
        Ok(table)
    }

    /// Probability of a hit; pairs absent from the table follow the ideal step.
    pub fn probability(&self, threshold: u32, edit_count: u32) -> f64 {
        match self.points.get(&(threshold, edit_count)) {
            Some(&p) => p,
            None if edit_count <= threshold => 1.0,
            None => 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn thresholds(&self) -> impl Iterator<Item = u32> + '_ {
        let mut last = None;
        self.points.keys().filter_map(move |&(t, _)| {
            if last == Some(t) {
                None
            } else {
                last = Some(t);
                Some(t)
            }
        })
    }

    /// Probabilities in [0, 1] and, per threshold, non-increasing in the
    /// edit count once the step fallback is applied to missing points.
    pub fn validate(&self) -> Result<(), MatchError> {
        for (&(t, c), &p) in &self.points {
            if !(0.0..=1.0).contains(&p) || p.is_nan() {
                return Err(MatchError::Table { line: 0, msg: format!("probability {p} at ({t},{c}) outside [0,1]") });
            }
        }
        for t in self.thresholds().collect::<Vec<_>>() {
            let max_c = self.points.range((t, 0)..=(t, u32::MAX)).map(|(&(_, c), _)| c).max().unwrap_or(0);
            let mut prev = 1.0;
            for c in 0..=max_c + 1 {
                let p = self.probability(t, c);
                if p > prev {
                    return Err(MatchError::Table {
                        line: 0,
                        msg: format!("threshold {t}: probability rises from {prev} to {p} at edit count {c}"),
                    });
                }
                prev = p;
            }
        }
        Ok(())
    }

    /// Parses `threshold edit_count probability` rows. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, MatchError> {
        let mut points = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| MatchError::Table { line: idx + 1, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(err(format!("expected 3 fields, got {}", fields.len())));
            }
            let t: u32 = fields[0].parse().map_err(|_| err(format!("bad threshold {:?}", fields[0])))?;
            let c: u32 = fields[1].parse().map_err(|_| err(format!("bad edit count {:?}", fields[1])))?;
            let p: f64 = fields[2].parse().map_err(|_| err(format!("bad probability {:?}", fields[2])))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(err(format!("probability {p} outside [0,1]")));
            }
            if points.insert((t, c), p).is_some() {
                return Err(err(format!("duplicate entry ({t},{c})")));
            }
        }
        let table = ConfidenceTable { points };
        table.validate()?;
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MatchError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| MatchError::Table { line: 0, msg: format!("{}: {e}", path.display()) })?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# threshold edit_count probability\n");
        for (&(t, c), p) in &self.points {
            let _ = writeln!(out, "{t} {c} {p}");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SaMode {
    Ideal,
    Stochastic,
}

impl std::str::FromStr for SaMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ideal" => Ok(SaMode::Ideal),
            "stochastic" => Ok(SaMode::Stochastic),
            other => Err(format!("unknown SA mode {other:?} (expected ideal|stochastic)")),
        }
    }
}

/// Count-and-compare sense amplifier.
#[derive(Debug, Clone, PartialEq)]
pub struct SaModel {
    pub mode: SaMode,
    pub threshold: u32,
    pub table: Arc<ConfidenceTable>,
}

impl SaModel {
    pub fn ideal(threshold: u32) -> Self {
        SaModel { mode: SaMode::Ideal, threshold, table: Arc::new(ConfidenceTable::empty()) }
    }

    pub fn stochastic(threshold: u32, table: ConfidenceTable) -> Self {
        SaModel { mode: SaMode::Stochastic, threshold, table: Arc::new(table) }
    }

    pub fn with_threshold(&self, threshold: u32) -> Self {
        SaModel { threshold, ..self.clone() }
    }

    pub fn hit_probability(&self, edit_count: u32) -> f64 {
        match self.mode {
            SaMode::Ideal => f64::from(u8::from(edit_count <= self.threshold)),
            SaMode::Stochastic => self.table.probability(self.threshold, edit_count),
        }
    }

    /// Decides one sensing event. Stochastic mode consumes exactly one draw
    /// from `rng` per call; ideal mode consumes none.
    pub fn decide<R: Rng + ?Sized>(&self, edit_count: u32, rng: &mut R) -> bool {
        match self.mode {
            SaMode::Ideal => edit_count <= self.threshold,
            SaMode::Stochastic => {
                let p = self.table.probability(self.threshold, edit_count);
                rng.gen::<f64>() < p
            }
        }
    }
}

pub fn is_hit<R: Rng + ?Sized>(ev: &EditsVector, sa: &SaModel, rng: &mut R) -> bool {
    sa.decide(ev.edit_count(), rng)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowMatches {
    pub hits: Vec<bool>,
    pub hit_count: usize,
}

/// Runs the search of `query` against every stored row, one sensing event
/// per row in row order.
pub fn match_query_against_rows<R: Rng + ?Sized>(
    rows: &[PackedKmer],
    query: &PackedKmer,
    sa: &SaModel,
    rng: &mut R,
) -> Result<RowMatches, LengthError> {
    let mut hits = Vec::with_capacity(rows.len());
    for row in rows {
        let ev = edits_vector(row, query)?;
        hits.push(is_hit(&ev, sa, rng));
    }
    let hit_count = hits.iter().filter(|&&h| h).count();
    Ok(RowMatches { hits, hit_count })
}
