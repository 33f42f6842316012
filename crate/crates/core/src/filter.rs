//! Base-count filtering, neighbor-histogram tracing and query batching.
//!
//! Two sequences within edit distance `eth` always have histograms within
//! L1 distance `2 * eth` (each edit moves at most two counts by one). The
//! filter therefore only routes a query to crossbars whose histogram is a
//! neighbor of the query's histogram in that sense.

use std::collections::{BTreeMap, VecDeque};
use std::io::{Read, Write};

use crate::error::FilterError;
use crate::seq::{
    compute_histogram, count_valid_histograms, pack_histogram_key, unpack_histogram_key, Base, BaseHistogram, Sequence,
    KEY_FIELD_MAX, KEY_SPACE, MAX_K,
};

/// Largest crossbar index representable in three bytes.
pub const MAX_CROSSBAR_INDEX: u32 = (1 << 24) - 1;
/// Default number of queries examined per batch.
pub const DEFAULT_EXAMINE_LIMIT: usize = 350;

const EMPTY_SLOT: u32 = u32::MAX;
const TABLE_MAGIC: &[u8; 4] = b"XMTT";
const TABLE_VERSION: u16 = 1;

/// Inclusive range of crossbar indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct CrossbarRange {
    pub start: u32,
    pub end: u32,
}

impl CrossbarRange {
    pub fn new(start: u32, end: u32) -> Result<Self, FilterError> {
        if start > end || end > MAX_CROSSBAR_INDEX {
            return Err(FilterError::Build(format!("invalid crossbar range {start}..={end}")));
        }
        Ok(CrossbarRange { start, end })
    }

    pub fn single(index: u32) -> Result<Self, FilterError> {
        Self::new(index, index)
    }

    pub fn len(&self) -> usize {
        (self.end - self.start + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, index: u32) -> bool {
        (self.start..=self.end).contains(&index)
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<u32> {
        self.start..=self.end
    }
}

/// Sorts ranges and merges overlapping or adjacent ones.
pub fn normalize_ranges(mut ranges: Vec<CrossbarRange>) -> Vec<CrossbarRange> {
    ranges.sort_unstable();
    let mut out: Vec<CrossbarRange> = Vec::with_capacity(ranges.len());
    for r in ranges {
        match out.last_mut() {
            Some(last) if r.start <= last.end.saturating_add(1) => last.end = last.end.max(r.end),
            _ => out.push(r),
        }
    }
    out
}

/// True iff the two histograms are within L1 distance `2 * eth`.
pub fn base_count_pass(h1: &BaseHistogram, h2: &BaseHistogram, eth: u32) -> bool {
    h1.l1(h2) <= 2 * eth
}

/// All histograms of length `k` within L1 distance `2 * eth` of `h`,
/// including `h`, in lexicographic order.
pub fn enumerate_neighbors(h: &BaseHistogram, eth: u32, k: u32) -> Vec<BaseHistogram> {
    let radius = 2 * eth;
    let span = |x: u32| x.saturating_sub(radius)..=(x + radius).min(k);
    let mut out = Vec::new();
    for a in span(h.a) {
        for t in span(h.t) {
            if a + t > k {
                break;
            }
            for g in span(h.g) {
                if a + t + g > k {
                    break;
                }
                let cand = BaseHistogram::new(a, t, g, k - a - t - g);
                if cand.l1(h) <= radius {
                    out.push(cand);
                }
            }
        }
    }
    out
}

/// Largest neighborhood over every histogram of length `k`.
pub fn max_neighbor_count(k: u32, eth: u32) -> usize {
    crate::seq::all_histograms(k).map(|h| enumerate_neighbors(&h, eth, k).len()).max().unwrap_or(0)
}

/// Tracing-table slot of a histogram. The packed 18-bit key is used when it
/// fits; the three single-base histograms of k = 64 whose count is 64 use
/// escape slots at the top of the key space, which no real histogram of
/// length <= 64 can occupy.
pub fn table_slot(h: &BaseHistogram) -> Result<u32, FilterError> {
    match pack_histogram_key(h) {
        Ok(key) => Ok(key),
        Err(e) => {
            let total = h.total();
            let escape = match (h.a, h.t, h.g) {
                (a, 0, 0) if a == total && a == KEY_FIELD_MAX + 1 => 0,
                (0, t, 0) if t == total && t == KEY_FIELD_MAX + 1 => 1,
                (0, 0, g) if g == total && g == KEY_FIELD_MAX + 1 => 2,
                _ => return Err(e.into()),
            };
            Ok(KEY_SPACE as u32 - 1 - escape)
        }
    }
}

/// Inverse of [`table_slot`] for histograms of length `k`.
pub fn slot_histogram(slot: u32, k: u32) -> Option<BaseHistogram> {
    if k == KEY_FIELD_MAX + 1 && slot >= KEY_SPACE as u32 - 3 && (slot as usize) < KEY_SPACE {
        let mut counts = [0; 4];
        counts[(KEY_SPACE as u32 - 1 - slot) as usize] = k;
        return Some(BaseHistogram::from_counts(counts));
    }
    unpack_histogram_key(slot, k)
}

/// Precomputed map from a query histogram to the crossbar ranges of every
/// neighboring histogram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TracingTable {
    k: u32,
    eth: u32,
    slots: Vec<u32>,
    lists: Vec<Vec<CrossbarRange>>,
}

impl TracingTable {
    /// Builds the table from the crossbar placements of each stored
    /// histogram. Every histogram must have length `k`.
    pub fn build(placements: &BTreeMap<BaseHistogram, Vec<CrossbarRange>>, eth: u32, k: u32) -> Result<Self, FilterError> {
        if k == 0 || k as usize > MAX_K {
            return Err(FilterError::Build(format!("k = {k} outside 1..={MAX_K}")));
        }
        let mut pending: BTreeMap<u32, Vec<CrossbarRange>> = BTreeMap::new();
        for (h, ranges) in placements {
            if h.total() != k {
                return Err(FilterError::Build(format!("histogram {h} does not sum to k = {k}")));
            }
            for r in ranges {
                CrossbarRange::new(r.start, r.end)?;
            }
            // h is a neighbor of each of its own neighbors
            for n in enumerate_neighbors(h, eth, k) {
                pending.entry(table_slot(&n)?).or_default().extend_from_slice(ranges);
            }
        }
        let mut slots = vec![EMPTY_SLOT; KEY_SPACE];
        let mut lists = Vec::with_capacity(pending.len());
        for (slot, ranges) in pending {
            let ranges = normalize_ranges(ranges);
            if ranges.is_empty() {
                continue;
            }
            slots[slot as usize] = lists.len() as u32;
            lists.push(ranges);
        }
        Ok(TracingTable { k, eth, slots, lists })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn eth(&self) -> u32 {
        self.eth
    }

    pub fn populated_slots(&self) -> usize {
        self.lists.len()
    }

    pub fn lookup(&self, h: &BaseHistogram) -> &[CrossbarRange] {
        match table_slot(h) {
            Ok(slot) => match self.slots[slot as usize] {
                EMPTY_SLOT => &[],
                idx => &self.lists[idx as usize],
            },
            Err(_) => &[],
        }
    }

    /// Crossbar ranges a query must be searched against.
    pub fn trace_query(&self, query: &[Base]) -> Result<&[CrossbarRange], FilterError> {
        if query.len() != self.k as usize {
            return Err(FilterError::Build(format!("query length {} != k = {}", query.len(), self.k)));
        }
        Ok(self.lookup(&compute_histogram(query)))
    }

    /// Pointer array plus 6 bytes per stored range.
    pub fn memory_bytes(&self) -> usize {
        KEY_SPACE * 4 + self.lists.iter().map(|l| l.len() * 6).sum::<usize>()
    }

    /// (slot, ranges) pairs in slot order.
    pub fn entries(&self) -> impl Iterator<Item = (u32, &[CrossbarRange])> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter(|(_, &idx)| idx != EMPTY_SLOT)
            .map(|(slot, &idx)| (slot as u32, self.lists[idx as usize].as_slice()))
    }

    /// Binary layout, little-endian:
    ///
    /// ```text
    /// magic "XMTT" | version u16 | k u8 | eth u8 | entry_count u32
    /// entry_count x ( slot u32 | range_count u32 | range_count x (start u24 | end u24) )
    /// ```
    ///
    /// Entries are sorted by slot.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(TABLE_MAGIC)?;
        out.write_all(&TABLE_VERSION.to_le_bytes())?;
        out.write_all(&[self.k as u8, self.eth as u8])?;
        out.write_all(&(self.lists.len() as u32).to_le_bytes())?;
        for (slot, ranges) in self.entries() {
            out.write_all(&slot.to_le_bytes())?;
            out.write_all(&(ranges.len() as u32).to_le_bytes())?;
            for r in ranges {
                out.write_all(&r.start.to_le_bytes()[..3])?;
                out.write_all(&r.end.to_le_bytes()[..3])?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self, FilterError> {
        let err = |m: &str| FilterError::Load(m.to_string());
        let mut buf = Vec::new();
        input.read_to_end(&mut buf).map_err(|e| FilterError::Load(e.to_string()))?;
        let mut cur = Cursor { buf: &buf, pos: 0 };
        if cur.take(4).ok_or_else(|| err("truncated header"))? != TABLE_MAGIC {
            return Err(err("bad magic"));
        }
        let version = u16::from_le_bytes(cur.array().ok_or_else(|| err("truncated header"))?);
        if version != TABLE_VERSION {
            return Err(FilterError::Load(format!("unsupported version {version}")));
        }
        let [k, eth] = cur.array::<2>().ok_or_else(|| err("truncated header"))?;
        let (k, eth) = (k as u32, eth as u32);
        if k == 0 || k as usize > MAX_K {
            return Err(FilterError::Load(format!("k = {k} outside 1..={MAX_K}")));
        }
        let count = u32::from_le_bytes(cur.array().ok_or_else(|| err("truncated header"))?);
        let mut slots = vec![EMPTY_SLOT; KEY_SPACE];
        let mut lists = Vec::with_capacity(count as usize);
        let mut last_slot = None;
        for _ in 0..count {
            let slot = u32::from_le_bytes(cur.array().ok_or_else(|| err("truncated entry"))?);
            if slot as usize >= KEY_SPACE || last_slot.is_some_and(|l| l >= slot) {
                return Err(FilterError::Load(format!("slot {slot} out of range or out of order")));
            }
            if slot_histogram(slot, k).is_none() {
                return Err(FilterError::Load(format!("slot {slot} is not a histogram of length {k}")));
            }
            last_slot = Some(slot);
            let n = u32::from_le_bytes(cur.array().ok_or_else(|| err("truncated entry"))?);
            let mut ranges = Vec::with_capacity(n as usize);
            for _ in 0..n {
                let raw = cur.take(6).ok_or_else(|| err("truncated range"))?;
                let start = u32::from_le_bytes([raw[0], raw[1], raw[2], 0]);
                let end = u32::from_le_bytes([raw[3], raw[4], raw[5], 0]);
                ranges.push(CrossbarRange::new(start, end).map_err(|e| FilterError::Load(e.to_string()))?);
            }
            slots[slot as usize] = lists.len() as u32;
            lists.push(ranges);
        }
        if cur.pos != buf.len() {
            return Err(err("trailing bytes"));
        }
        Ok(TracingTable { k, eth, slots, lists })
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<(), FilterError> {
        let file = std::fs::File::create(path.as_ref()).map_err(|e| FilterError::Load(e.to_string()))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w).and_then(|_| w.flush()).map_err(|e| FilterError::Load(e.to_string()))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, FilterError> {
        let file = std::fs::File::open(path.as_ref()).map_err(|e| FilterError::Load(e.to_string()))?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let s = self.buf.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(s)
    }

    fn array<const N: usize>(&mut self) -> Option<[u8; N]> {
        self.take(N).map(|s| s.try_into().expect("length checked"))
    }
}

/// Upper bound on table size for `k`, `eth`: pointer array plus the
/// largest neighborhood's worth of 6-byte ranges for every histogram.
pub fn table_memory_bound(k: u32, eth: u32) -> u64 {
    KEY_SPACE as u64 * 4 + count_valid_histograms(k as u64) * max_neighbor_count(k, eth) as u64 * 6
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchedQuery {
    /// Position of the query in the examined stream.
    pub index: usize,
    pub query: Sequence,
    pub histogram: BaseHistogram,
    pub ranges: Vec<CrossbarRange>,
}

/// Queries whose histogram neighborhoods are pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QueryBatch {
    pub queries: Vec<BatchedQuery>,
}

impl QueryBatch {
    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BatchOutcome {
    pub batch: QueryBatch,
    /// Examined but not admitted, with their stream positions.
    pub deferred: Vec<(usize, Sequence)>,
}

/// Two neighborhoods of radius `2 * eth` are disjoint iff the centers are
/// more than `4 * eth` apart.
fn admissible(h: &BaseHistogram, admitted: &[BaseHistogram], eth: u32) -> bool {
    admitted.iter().all(|a| a.l1(h) > 4 * eth)
}

/// Greedy first-fit batching over at most `examine_limit` queries taken
/// from `stream`. When a table is given, each admitted query carries its
/// traced ranges.
pub fn batch_queries<I>(stream: &mut I, eth: u32, examine_limit: usize, table: Option<&TracingTable>) -> BatchOutcome
where
    I: Iterator<Item = Sequence>,
{
    let mut out = BatchOutcome::default();
    let mut admitted: Vec<BaseHistogram> = Vec::new();
    for (index, query) in stream.take(examine_limit.max(1)).enumerate() {
        let histogram = query.histogram();
        if admissible(&histogram, &admitted, eth) {
            admitted.push(histogram);
            let ranges = table.map(|t| t.lookup(&histogram).to_vec()).unwrap_or_default();
            out.batch.queries.push(BatchedQuery { index, query, histogram, ranges });
        } else {
            out.deferred.push((index, query));
        }
    }
    out
}

/// Splits a whole query set into batches. Each round examines the first
/// `examine_limit` still-pending queries in order; the rest wait for later
/// rounds. Returns query indices per batch.
pub fn schedule_batches(histograms: &[BaseHistogram], eth: u32, examine_limit: usize) -> Vec<Vec<usize>> {
    let mut pending: VecDeque<usize> = (0..histograms.len()).collect();
    let mut batches = Vec::new();
    while !pending.is_empty() {
        let examined = examine_limit.max(1).min(pending.len());
        let mut admitted_h = Vec::new();
        let mut batch = Vec::new();
        let mut keep = VecDeque::with_capacity(pending.len());
        for (n, idx) in pending.drain(..).enumerate() {
            if n < examined && admissible(&histograms[idx], &admitted_h, eth) {
                admitted_h.push(histograms[idx]);
                batch.push(idx);
            } else {
                keep.push_back(idx);
            }
        }
        pending = keep;
        batches.push(batch);
    }
    batches
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::histogram_l1;
    use crate::seq::all_histograms;
    use std::collections::BTreeSet;

    fn h(a: u32, t: u32, g: u32, c: u32) -> BaseHistogram {
        BaseHistogram::new(a, t, g, c)
    }

    fn seq(s: &str) -> Sequence {
        s.parse().unwrap()
    }

    #[test]
    fn filter_examples() {
        assert!(!base_count_pass(&seq("CAC").histogram(), &seq("AAA").histogram(), 1));
        assert!(base_count_pass(&h(3, 1, 4, 1), &h(3, 1, 4, 1), 0));
        assert!(base_count_pass(&h(2, 1, 1, 0), &h(0, 1, 1, 2), 2));
        assert!(!base_count_pass(&h(2, 1, 1, 0), &h(0, 1, 1, 2), 1));
    }

    #[test]
    fn neighbors_brute_force() {
        for k in 0..=9u32 {
            let all: Vec<_> = all_histograms(k).collect();
            for eth in 0..=3 {
                for center in &all {
                    let fast = enumerate_neighbors(center, eth, k);
                    let brute: Vec<_> = all.iter().copied().filter(|x| histogram_l1(x, center) <= 2 * eth).collect();
                    let mut brute_sorted = brute.clone();
                    brute_sorted.sort();
                    assert_eq!(fast, brute_sorted, "k={k} eth={eth} h={center}");
                }
            }
        }
        assert_eq!(enumerate_neighbors(&h(7, 3, 2, 4), 0, 16), vec![h(7, 3, 2, 4)]);
        // the three histograms sharing no base with AT are 4 away
        assert_eq!(enumerate_neighbors(&h(1, 1, 0, 0), 1, 2).len(), 7);
    }

    #[test]
    fn neighbors_symmetric() {
        let k = 12;
        for a in all_histograms(k) {
            for b in enumerate_neighbors(&a, 2, k) {
                assert!(enumerate_neighbors(&b, 2, k).contains(&a));
            }
        }
    }

    #[test]
    fn interior_neighborhood_is_309() {
        assert_eq!(enumerate_neighbors(&h(16, 16, 16, 16), 4, 64).len(), 309);
        assert!(enumerate_neighbors(&h(64, 0, 0, 0), 4, 64).len() < 309);
    }

    #[test]
    fn slots_are_unique() {
        let mut seen = BTreeSet::new();
        for x in all_histograms(64) {
            let s = table_slot(&x).unwrap();
            assert!(seen.insert(s));
            assert_eq!(slot_histogram(s, 64), Some(x));
        }
        assert_eq!(seen.len(), 47_905);
        assert!(table_slot(&h(70, 0, 0, 0)).is_err());
    }

    #[test]
    fn range_rules() {
        assert!(CrossbarRange::new(3, 2).is_err());
        assert!(CrossbarRange::new(0, MAX_CROSSBAR_INDEX).is_ok());
        assert!(CrossbarRange::new(0, MAX_CROSSBAR_INDEX + 1).is_err());
        let merged = normalize_ranges(vec![
            CrossbarRange::new(5, 6).unwrap(),
            CrossbarRange::new(0, 1).unwrap(),
            CrossbarRange::new(2, 2).unwrap(),
            CrossbarRange::new(6, 9).unwrap(),
            CrossbarRange::new(11, 11).unwrap(),
        ]);
        assert_eq!(
            merged,
            vec![CrossbarRange::new(0, 2).unwrap(), CrossbarRange::new(5, 9).unwrap(), CrossbarRange::new(11, 11).unwrap()]
        );
    }

    fn toy_table(eth: u32) -> (BTreeMap<BaseHistogram, Vec<CrossbarRange>>, TracingTable) {
        let mut placements = BTreeMap::new();
        placements.insert(h(4, 0, 0, 0), vec![CrossbarRange::new(0, 0).unwrap()]);
        placements.insert(h(2, 2, 0, 0), vec![CrossbarRange::new(1, 2).unwrap()]);
        placements.insert(h(0, 0, 0, 4), vec![CrossbarRange::new(3, 3).unwrap(), CrossbarRange::new(4, 4).unwrap()]);
        let table = TracingTable::build(&placements, eth, 4).unwrap();
        (placements, table)
    }

    #[test]
    fn tracing_lookups() {
        let (_, table) = toy_table(1);
        assert_eq!(table.trace_query(seq("AAAA").bases()).unwrap(), &[CrossbarRange::new(0, 0).unwrap()]);
        assert_eq!(table.trace_query(seq("AATA").bases()).unwrap(), &[CrossbarRange::new(0, 2).unwrap()]);
        assert_eq!(table.trace_query(seq("CCCC").bases()).unwrap(), &[CrossbarRange::new(3, 4).unwrap()]);
        assert!(table.trace_query(seq("GGGG").bases()).unwrap().is_empty());
        assert!(table.trace_query(seq("GGG").bases()).is_err());
    }

    #[test]
    fn tracing_equals_placement_scan() {
        let k = 6;
        let all: Vec<_> = all_histograms(k).collect();
        let mut placements = BTreeMap::new();
        let mut next = 0u32;
        for (i, x) in all.iter().enumerate() {
            if i % 3 == 0 {
                let n = (i % 4) as u32;
                placements.insert(*x, vec![CrossbarRange::new(next, next + n).unwrap()]);
                next += n + 1;
            }
        }
        for eth in 0..=3 {
            let table = TracingTable::build(&placements, eth, k).unwrap();
            for q in &all {
                let got: BTreeSet<u32> = table.lookup(q).iter().flat_map(|r| r.indices()).collect();
                let want: BTreeSet<u32> = placements
                    .iter()
                    .filter(|(p, _)| base_count_pass(p, q, eth))
                    .flat_map(|(_, rs)| rs.iter().flat_map(|r| r.indices()))
                    .collect();
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn build_rejects_bad_histograms() {
        let mut placements = BTreeMap::new();
        placements.insert(h(1, 1, 1, 1), vec![CrossbarRange::new(0, 0).unwrap()]);
        assert!(matches!(TracingTable::build(&placements, 1, 5), Err(FilterError::Build(_))));
        assert!(TracingTable::build(&BTreeMap::new(), 1, 65).is_err());
    }

    #[test]
    fn binary_roundtrip_and_corruption() {
        let (_, table) = toy_table(1);
        let mut buf = Vec::new();
        table.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"XMTT");
        assert_eq!(TracingTable::read_from(buf.as_slice()).unwrap(), table);
        assert!(TracingTable::read_from(&buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[4] = 9;
        assert!(TracingTable::read_from(bad.as_slice()).is_err());
        let mut extra = buf.clone();
        extra.push(0);
        assert!(TracingTable::read_from(extra.as_slice()).is_err());
    }

    #[test]
    fn escape_slots_roundtrip() {
        let mut placements = BTreeMap::new();
        placements.insert(h(64, 0, 0, 0), vec![CrossbarRange::new(7, 7).unwrap()]);
        let table = TracingTable::build(&placements, 0, 64).unwrap();
        let mut buf = Vec::new();
        table.write_to(&mut buf).unwrap();
        let back = TracingTable::read_from(buf.as_slice()).unwrap();
        assert_eq!(back.lookup(&h(64, 0, 0, 0)), &[CrossbarRange::new(7, 7).unwrap()]);
        assert!(back.lookup(&h(63, 1, 0, 0)).is_empty());
    }

    #[test]
    fn batching_rules() {
        let same = vec![seq("ACGTACGT"); 5];
        let out = batch_queries(&mut same.into_iter(), 1, 350, None);
        assert_eq!(out.batch.len(), 1);
        assert_eq!(out.deferred.len(), 4);

        // exactly 4*eth apart: a shared midpoint exists, so the second is rejected
        let eth = 1;
        let q1 = seq("AAAAAAAA");
        let q2 = seq("AAAAAATT");
        assert_eq!(q1.histogram().l1(&q2.histogram()), 4 * eth);
        let n1: BTreeSet<_> = enumerate_neighbors(&q1.histogram(), eth, 8).into_iter().collect();
        let n2: BTreeSet<_> = enumerate_neighbors(&q2.histogram(), eth, 8).into_iter().collect();
        assert!(!n1.is_disjoint(&n2));
        let out = batch_queries(&mut vec![q1.clone(), q2].into_iter(), eth, 350, None);
        assert_eq!(out.batch.len(), 1);

        let q3 = seq("AAAAATTT");
        let out = batch_queries(&mut vec![q1, q3].into_iter(), eth, 350, None);
        assert_eq!(out.batch.len(), 2);

        let many = vec![seq("ACGT"); 10];
        let out = batch_queries(&mut many.into_iter(), 0, 3, None);
        assert_eq!(out.batch.len() + out.deferred.len(), 3);
    }

    #[test]
    fn batch_neighborhoods_disjoint() {
        let k = 12;
        let all: Vec<_> = all_histograms(k).collect();
        for eth in 0..=2 {
            let queries: Vec<Sequence> = all
                .iter()
                .map(|x| {
                    let mut b = Vec::new();
                    for (base, n) in Base::ALL.iter().zip(x.counts()) {
                        b.extend(std::iter::repeat_n(*base, n as usize));
                    }
                    Sequence::new(b).unwrap()
                })
                .collect();
            let out = batch_queries(&mut queries.into_iter(), eth, 10_000, None);
            let hoods: Vec<BTreeSet<_>> =
                out.batch.queries.iter().map(|q| enumerate_neighbors(&q.histogram, eth, k).into_iter().collect()).collect();
            for i in 0..hoods.len() {
                for j in i + 1..hoods.len() {
                    assert!(hoods[i].is_disjoint(&hoods[j]));
                }
            }
        }
    }

    #[test]
    fn schedule_covers_everything() {
        let hs: Vec<_> = all_histograms(10).collect();
        let batches = schedule_batches(&hs, 1, 50);
        let mut seen: Vec<usize> = batches.iter().flatten().copied().collect();
        seen.sort();
        assert_eq!(seen, (0..hs.len()).collect::<Vec<_>>());
        assert!(batches.iter().all(|b| !b.is_empty() && b.len() <= 50));
    }
}
