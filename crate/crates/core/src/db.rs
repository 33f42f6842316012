//! Reference database construction: k-mer extraction and crossbar packing.
//!
//! K-mers are grouped by (histogram, species); each group fills whole
//! crossbars, spilling into the next crossbar when it exceeds the row count.
//! Crossbar indices follow the sorted (histogram key, species) order, so all
//! crossbars of one histogram are contiguous and the output does not depend
//! on the order genomes are supplied in.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::DbError;
use crate::filter::{table_slot, CrossbarRange, TracingTable, MAX_CROSSBAR_INDEX};
use crate::magic::DEFAULT_ROWS;
use crate::matcher::PackedKmer;
use crate::seq::{BaseHistogram, Genome, KMerRecord, Sequence, DEFAULT_K, MAX_K};

/// Crossbars per 8 GB chip.
pub const CROSSBARS_PER_CHIP: u64 = 1 << 20;

const LAYOUT_MAGIC: &[u8; 4] = b"XMDB";
const LAYOUT_VERSION: u16 = 1;
const CHECKSUM_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    pub k: usize,
    pub stride: usize,
    pub dedup: bool,
    pub rows: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { k: DEFAULT_K, stride: 1, dedup: false, rows: DEFAULT_ROWS }
    }
}

impl BuildOptions {
    pub fn with_k(k: usize) -> Self {
        BuildOptions { k, ..Default::default() }
    }

    fn validate(&self) -> Result<(), DbError> {
        if self.k == 0 || self.k > MAX_K {
            return Err(DbError::Config(format!("k = {} outside 1..={MAX_K}", self.k)));
        }
        if self.stride == 0 {
            return Err(DbError::Config("stride must be at least 1".into()));
        }
        if self.rows == 0 || self.rows > u16::MAX as usize {
            return Err(DbError::Config(format!("unsupported row count {}", self.rows)));
        }
        Ok(())
    }
}

/// A reference genome labeled with its species.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeciesGenome {
    pub species_id: u32,
    pub name: String,
    pub genome: Genome,
}

impl SpeciesGenome {
    pub fn new(species_id: u32, name: impl Into<String>, genome: impl Into<Genome>) -> Self {
        SpeciesGenome { species_id, name: name.into(), genome: genome.into() }
    }
}

/// Stride-1 windows of length `k`. Windows never span ambiguity symbols.
pub fn extract_kmers(genome: &Genome, k: usize, species_id: u32) -> Result<Vec<KMerRecord>, DbError> {
    extract_kmers_with_stride(genome, k, 1, species_id)
}

pub fn extract_kmers_with_stride(genome: &Genome, k: usize, stride: usize, species_id: u32) -> Result<Vec<KMerRecord>, DbError> {
    check_window(genome, k, stride)?;
    let mut out = Vec::new();
    for seg in &genome.segments {
        let bases = seg.sequence.bases();
        if bases.len() < k {
            continue;
        }
        for pos in (0..=bases.len() - k).step_by(stride) {
            out.push(KMerRecord {
                sequence: Sequence::new(bases[pos..pos + k].to_vec()).expect("window is non-empty"),
                species_id,
                source_offset: seg.offset + pos as u64,
            });
        }
    }
    Ok(out)
}

fn check_window(genome: &Genome, k: usize, stride: usize) -> Result<(), DbError> {
    if k == 0 || stride == 0 {
        return Err(DbError::Config("k and stride must be at least 1".into()));
    }
    if genome.len < k as u64 {
        return Err(DbError::TooShort { len: genome.len as usize, k });
    }
    Ok(())
}

fn packed_windows(genome: &Genome, k: usize, stride: usize) -> Result<Vec<(PackedKmer, u64)>, DbError> {
    check_window(genome, k, stride)?;
    let mut out = Vec::new();
    for seg in &genome.segments {
        let bases = seg.sequence.bases();
        if bases.len() < k {
            continue;
        }
        for pos in (0..=bases.len() - k).step_by(stride) {
            let packed = PackedKmer::pack(&bases[pos..pos + k]).map_err(|e| DbError::Config(e.to_string()))?;
            out.push((packed, seg.offset + pos as u64));
        }
    }
    Ok(out)
}

/// One crossbar: k-mers of a single (species, histogram) group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossbarDesc {
    pub species_id: u32,
    pub histogram: BaseHistogram,
    pub kmers: Vec<PackedKmer>,
    /// Genome position of each row's k-mer.
    pub offsets: Vec<u64>,
}

impl CrossbarDesc {
    pub fn rows_used(&self) -> usize {
        self.kmers.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatabaseLayout {
    k: usize,
    rows: usize,
    species: BTreeMap<u32, String>,
    crossbars: Vec<CrossbarDesc>,
    placements: BTreeMap<BaseHistogram, Vec<CrossbarRange>>,
}

type GroupKey = (u32, u32);

fn group_key(h: &BaseHistogram, species_id: u32) -> Result<GroupKey, DbError> {
    Ok((table_slot(h).map_err(|e| DbError::Config(e.to_string()))?, species_id))
}

/// Packs every genome's k-mers into crossbars.
pub fn build_layout(genomes: &[SpeciesGenome], opts: &BuildOptions) -> Result<DatabaseLayout, DbError> {
    opts.validate()?;
    if genomes.is_empty() {
        return Err(DbError::Config("no reference genomes".into()));
    }
    let mut species = BTreeMap::new();
    for g in genomes {
        if species.insert(g.species_id, g.name.clone()).is_some() {
            return Err(DbError::Config(format!("duplicate species id {}", g.species_id)));
        }
    }

    let per_genome: Vec<Vec<(PackedKmer, u64)>> =
        genomes.par_iter().map(|g| packed_windows(&g.genome, opts.k, opts.stride)).collect::<Result<_, _>>()?;

    let mut groups: BTreeMap<GroupKey, (BaseHistogram, Vec<(PackedKmer, u64)>)> = BTreeMap::new();
    for (g, windows) in genomes.iter().zip(per_genome) {
        for (kmer, offset) in windows {
            let h = kmer.histogram();
            groups.entry(group_key(&h, g.species_id)?).or_insert_with(|| (h, Vec::new())).1.push((kmer, offset));
        }
    }

    let mut crossbars = Vec::new();
    for ((_, species_id), (histogram, mut members)) in groups {
        if opts.dedup {
            let mut seen = std::collections::HashSet::new();
            members.retain(|(k, _)| seen.insert(*k));
        }
        for chunk in members.chunks(opts.rows) {
            crossbars.push(CrossbarDesc {
                species_id,
                histogram,
                kmers: chunk.iter().map(|(k, _)| *k).collect(),
                offsets: chunk.iter().map(|(_, o)| *o).collect(),
            });
        }
    }
    DatabaseLayout::assemble(opts.k, opts.rows, species, crossbars)
}

impl DatabaseLayout {
    fn assemble(
        k: usize,
        rows: usize,
        species: BTreeMap<u32, String>,
        crossbars: Vec<CrossbarDesc>,
    ) -> Result<Self, DbError> {
        if crossbars.len() > MAX_CROSSBAR_INDEX as usize + 1 {
            return Err(DbError::Config(format!("{} crossbars exceed the 24-bit index space", crossbars.len())));
        }
        let mut placements: BTreeMap<BaseHistogram, Vec<CrossbarRange>> = BTreeMap::new();
        let mut i = 0;
        while i < crossbars.len() {
            let h = crossbars[i].histogram;
            let mut j = i;
            while j + 1 < crossbars.len() && crossbars[j + 1].histogram == h {
                j += 1;
            }
            let range = CrossbarRange::new(i as u32, j as u32).map_err(|e| DbError::Config(e.to_string()))?;
            if placements.insert(h, vec![range]).is_some() {
                return Err(DbError::Config(format!("histogram {h} is not contiguous")));
            }
            i = j + 1;
        }
        Ok(DatabaseLayout { k, rows, species, crossbars, placements })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn species(&self) -> &BTreeMap<u32, String> {
        &self.species
    }

    pub fn crossbars(&self) -> &[CrossbarDesc] {
        &self.crossbars
    }

    pub fn crossbar(&self, index: u32) -> &CrossbarDesc {
        &self.crossbars[index as usize]
    }

    pub fn placements(&self) -> &BTreeMap<BaseHistogram, Vec<CrossbarRange>> {
        &self.placements
    }

    pub fn total_kmers(&self) -> usize {
        self.crossbars.iter().map(|c| c.kmers.len()).sum()
    }

    /// Populated rows over all provisioned rows.
    pub fn utilization(&self) -> f64 {
        if self.crossbars.is_empty() {
            return 0.0;
        }
        self.total_kmers() as f64 / (self.crossbars.len() * self.rows) as f64
    }

    pub fn chips_required(&self) -> u64 {
        (self.crossbars.len() as u64).div_ceil(CROSSBARS_PER_CHIP)
    }

    /// Indices of the crossbars holding `species_id`.
    pub fn species_crossbars(&self, species_id: u32) -> impl Iterator<Item = u32> + '_ {
        self.crossbars.iter().enumerate().filter(move |(_, c)| c.species_id == species_id).map(|(i, _)| i as u32)
    }

    pub fn tracing_table(&self, eth: u32) -> Result<TracingTable, DbError> {
        TracingTable::build(&self.placements, eth, self.k as u32).map_err(|e| DbError::Config(e.to_string()))
    }

    pub fn stats(&self) -> LayoutStats {
        let mut per_species: BTreeMap<u32, SpeciesStats> = self
            .species
            .iter()
            .map(|(&id, name)| (id, SpeciesStats { species_id: id, name: name.clone(), kmers: 0, crossbars: 0 }))
            .collect();
        for c in &self.crossbars {
            let s = per_species.get_mut(&c.species_id).expect("species registered");
            s.kmers += c.kmers.len();
            s.crossbars += 1;
        }
        LayoutStats {
            k: self.k,
            rows_per_crossbar: self.rows,
            total_kmers: self.total_kmers(),
            crossbars: self.crossbars.len(),
            distinct_histograms: self.placements.len(),
            utilization: self.utilization(),
            chips_required: self.chips_required(),
            species: per_species.into_values().collect(),
        }
    }

    /// Binary layout, little-endian:
    ///
    /// ```text
    /// magic "XMDB" | version u16 | k u8 | rows u16
    /// species_count u32 | species_count x ( id u32 | name_len u16 | name utf-8 )
    /// crossbar_count u32 | crossbar_count x ( species u32 | row_count u16 | row_count x ( hi u64 | lo u64 | offset u64 ) )
    /// sha-256 of every preceding byte
    /// ```
    ///
    /// `hi`/`lo` are the k-mer's bit planes: bit i holds the high/low bit of
    /// base i's 2-bit code.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut buf = Vec::new();
        buf.extend_from_slice(LAYOUT_MAGIC);
        buf.extend_from_slice(&LAYOUT_VERSION.to_le_bytes());
        buf.push(self.k as u8);
        buf.extend_from_slice(&(self.rows as u16).to_le_bytes());
        buf.extend_from_slice(&(self.species.len() as u32).to_le_bytes());
        for (id, name) in &self.species {
            let name = &name.as_bytes()[..name.len().min(u16::MAX as usize)];
            buf.extend_from_slice(&id.to_le_bytes());
            buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
            buf.extend_from_slice(name);
        }
        buf.extend_from_slice(&(self.crossbars.len() as u32).to_le_bytes());
        for c in &self.crossbars {
            buf.extend_from_slice(&c.species_id.to_le_bytes());
            buf.extend_from_slice(&(c.kmers.len() as u16).to_le_bytes());
            for (kmer, offset) in c.kmers.iter().zip(&c.offsets) {
                let (hi, lo) = kmer.planes();
                buf.extend_from_slice(&hi.to_le_bytes());
                buf.extend_from_slice(&lo.to_le_bytes());
                buf.extend_from_slice(&offset.to_le_bytes());
            }
        }
        let digest = Sha256::digest(&buf);
        out.write_all(&buf)?;
        out.write_all(&digest[..])
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self, DbError> {
        let mut buf = Vec::new();
        input.read_to_end(&mut buf).map_err(|e| DbError::Load(e.to_string()))?;
        if buf.len() < CHECKSUM_LEN + LAYOUT_MAGIC.len() {
            return Err(DbError::Load("file too short".into()));
        }
        let (body, checksum) = buf.split_at(buf.len() - CHECKSUM_LEN);
        if &body[..4] != LAYOUT_MAGIC {
            return Err(DbError::Load("bad magic".into()));
        }
        if Sha256::digest(body)[..] != *checksum {
            return Err(DbError::Load("checksum mismatch".into()));
        }
        let mut r = Reader { buf: &body[4..] };
        let version = r.u16()?;
        if version != LAYOUT_VERSION {
            return Err(DbError::Load(format!("unsupported layout version {version}")));
        }
        let k = r.u8()? as usize;
        let rows = r.u16()? as usize;
        BuildOptions { k, rows, stride: 1, dedup: false }.validate().map_err(|e| DbError::Load(e.to_string()))?;

        let mut species = BTreeMap::new();
        for _ in 0..r.u32()? {
            let id = r.u32()?;
            let len = r.u16()? as usize;
            let name = String::from_utf8(r.take(len)?.to_vec()).map_err(|_| DbError::Load("species name is not utf-8".into()))?;
            if species.insert(id, name).is_some() {
                return Err(DbError::Load(format!("duplicate species id {id}")));
            }
        }

        let count = r.u32()? as usize;
        let mut crossbars = Vec::with_capacity(count.min(1 << 20));
        let mut prev: Option<(GroupKey, usize)> = None;
        for idx in 0..count {
            let species_id = r.u32()?;
            if !species.contains_key(&species_id) {
                return Err(DbError::Load(format!("crossbar {idx} references unknown species {species_id}")));
            }
            let n = r.u16()? as usize;
            if n == 0 || n > rows {
                return Err(DbError::Load(format!("crossbar {idx} has {n} rows")));
            }
            let mut kmers = Vec::with_capacity(n);
            let mut offsets = Vec::with_capacity(n);
            for _ in 0..n {
                let (hi, lo, offset) = (r.u64()?, r.u64()?, r.u64()?);
                kmers.push(PackedKmer::from_planes(hi, lo, k).map_err(|e| DbError::Load(e.to_string()))?);
                offsets.push(offset);
            }
            let histogram = kmers[0].histogram();
            if kmers.iter().any(|m| m.histogram() != histogram) {
                return Err(DbError::Load(format!("crossbar {idx} mixes histograms")));
            }
            let key = group_key(&histogram, species_id).map_err(|e| DbError::Load(e.to_string()))?;
            if let Some((pk, prev_rows)) = prev {
                if key < pk || (key == pk && prev_rows != rows) {
                    return Err(DbError::Load(format!("crossbar {idx} is out of order")));
                }
            }
            prev = Some((key, n));
            crossbars.push(CrossbarDesc { species_id, histogram, kmers, offsets });
        }
        if !r.buf.is_empty() {
            return Err(DbError::Load("trailing bytes".into()));
        }
        DatabaseLayout::assemble(k, rows, species, crossbars).map_err(|e| DbError::Load(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DbError> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| DbError::Io(format!("{}: {e}", path.display())))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w).and_then(|_| w.flush()).map_err(|e| DbError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DbError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| DbError::Io(format!("{}: {e}", path.display())))?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

pub fn persist_layout(layout: &DatabaseLayout, path: impl AsRef<Path>) -> Result<(), DbError> {
    layout.save(path)
}

pub fn load_layout(path: impl AsRef<Path>) -> Result<DatabaseLayout, DbError> {
    DatabaseLayout::load(path)
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DbError> {
        if self.buf.len() < n {
            return Err(DbError::Load("truncated layout".into()));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8, DbError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, DbError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32, DbError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, DbError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeciesStats {
    pub species_id: u32,
    pub name: String,
    pub kmers: usize,
    pub crossbars: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayoutStats {
    pub k: usize,
    pub rows_per_crossbar: usize,
    pub total_kmers: usize,
    pub crossbars: usize,
    pub distinct_histograms: usize,
    pub utilization: f64,
    pub chips_required: u64,
    pub species: Vec<SpeciesStats>,
}

impl fmt::Display for LayoutStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "k\t{}", self.k)?;
        writeln!(f, "rows_per_crossbar\t{}", self.rows_per_crossbar)?;
        writeln!(f, "kmers\t{}", self.total_kmers)?;
        writeln!(f, "crossbars\t{}", self.crossbars)?;
        writeln!(f, "distinct_histograms\t{}", self.distinct_histograms)?;
        writeln!(f, "utilization\t{:.4}", self.utilization)?;
        writeln!(f, "chips_required\t{}", self.chips_required)?;
        for s in &self.species {
            writeln!(f, "species\t{}\t{}\tkmers={}\tcrossbars={}", s.species_id, s.name, s.kmers, s.crossbars)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq::parse_fasta_reader;

    fn seq(s: &str) -> Sequence {
        s.parse().unwrap()
    }

    fn strings(v: &[KMerRecord]) -> Vec<String> {
        v.iter().map(|r| r.sequence.to_string()).collect()
    }

    #[test]
    fn extraction_examples() {
        let g: Genome = seq("ACGTA").into();
        assert_eq!(strings(&extract_kmers(&g, 4, 0).unwrap()), ["ACGT", "CGTA"]);
        assert_eq!(extract_kmers(&g, 5, 0).unwrap().len(), 1);
        assert!(matches!(extract_kmers(&g, 6, 0), Err(DbError::TooShort { len: 5, k: 6 })));
        let rep: Genome = seq("AAAAAAA").into();
        let recs = extract_kmers(&rep, 3, 2).unwrap();
        assert_eq!(recs.len(), 5);
        assert!(recs.iter().all(|r| r.sequence.to_string() == "AAA" && r.species_id == 2));
        assert_eq!(extract_kmers_with_stride(&seq("ACGTACGTA").into(), 4, 2, 0).unwrap().len(), 3);
    }

    #[test]
    fn windows_skip_ambiguity() {
        let recs = parse_fasta_reader("> x\nACGTNACGTA\n".as_bytes()).unwrap();
        let out = extract_kmers(&recs[0].genome, 4, 0).unwrap();
        assert_eq!(strings(&out), ["ACGT", "ACGT", "CGTA"]);
        assert_eq!(out.iter().map(|r| r.source_offset).collect::<Vec<_>>(), [0, 5, 6]);
    }

    fn repeat_genome(unit: &str, n: usize) -> Genome {
        seq(&unit.repeat(n)).into()
    }

    #[test]
    fn packing_arithmetic() {
        // a homopolymer yields one (species, histogram) group
        let opts = BuildOptions::with_k(8);
        let one = build_layout(&[SpeciesGenome::new(0, "a", repeat_genome("A", 135))], &opts).unwrap();
        assert_eq!(one.crossbars().len(), 1);
        assert_eq!(one.utilization(), 1.0);

        let two = build_layout(&[SpeciesGenome::new(0, "a", repeat_genome("A", 136))], &opts).unwrap();
        assert_eq!(two.crossbars().len(), 2);
        assert_eq!(two.total_kmers(), 129);
        assert!((two.utilization() - 129.0 / 256.0).abs() < 1e-12);
        assert_eq!(two.placements().len(), 1);
        assert_eq!(two.placements().values().next().unwrap(), &vec![CrossbarRange::new(0, 1).unwrap()]);
        assert_eq!(two.chips_required(), 1);

        let dedup = BuildOptions { dedup: true, ..opts };
        assert_eq!(build_layout(&[SpeciesGenome::new(0, "a", repeat_genome("A", 136))], &dedup).unwrap().total_kmers(), 1);
    }

    fn sample_genomes() -> Vec<SpeciesGenome> {
        vec![
            SpeciesGenome::new(3, "gamma", seq(&"ACGTTGCAAGCT".repeat(20))),
            SpeciesGenome::new(1, "alpha", seq(&"AACCGGTTAC".repeat(25))),
            SpeciesGenome::new(2, "beta", seq(&"ACGTTGCAAGCT".repeat(10))),
        ]
    }

    #[test]
    fn layout_invariants() {
        let genomes = sample_genomes();
        let layout = build_layout(&genomes, &BuildOptions::with_k(10)).unwrap();
        let expected: usize = genomes.iter().map(|g| g.genome.len as usize - 9).sum();
        assert_eq!(layout.total_kmers(), expected);

        let mut covered = vec![0u32; layout.crossbars().len()];
        for (h, ranges) in layout.placements() {
            for r in ranges {
                for i in r.indices() {
                    covered[i as usize] += 1;
                    assert_eq!(&layout.crossbar(i).histogram, h);
                }
            }
        }
        assert!(covered.iter().all(|&c| c == 1));
        for c in layout.crossbars() {
            assert!(c.kmers.iter().all(|m| m.histogram() == c.histogram));
            assert!(c.rows_used() <= layout.rows());
        }

        let mut reversed = genomes.clone();
        reversed.reverse();
        assert_eq!(build_layout(&reversed, &BuildOptions::with_k(10)).unwrap(), layout);
    }

    #[test]
    fn self_retrievable() {
        let layout = build_layout(&sample_genomes(), &BuildOptions::with_k(10)).unwrap();
        let table = layout.tracing_table(0).unwrap();
        for (i, c) in layout.crossbars().iter().enumerate() {
            for m in &c.kmers {
                let ranges = table.trace_query(&m.unpack()).unwrap();
                assert!(ranges.iter().any(|r| r.contains(i as u32)));
            }
        }
    }

    #[test]
    fn persistence_roundtrip() {
        let layout = build_layout(&sample_genomes(), &BuildOptions::with_k(10)).unwrap();
        let mut buf = Vec::new();
        layout.write_to(&mut buf).unwrap();
        assert_eq!(DatabaseLayout::read_from(buf.as_slice()).unwrap(), layout);

        let mut flipped = buf.clone();
        let mid = flipped.len() / 2;
        flipped[mid] ^= 1;
        assert!(matches!(DatabaseLayout::read_from(flipped.as_slice()), Err(DbError::Load(_))));
        assert!(DatabaseLayout::read_from(&buf[..buf.len() - 3]).is_err());

        // version bump with a valid checksum
        let mut body = buf[..buf.len() - CHECKSUM_LEN].to_vec();
        body[4] = 2;
        let digest = Sha256::digest(&body);
        body.extend_from_slice(&digest[..]);
        let err = DatabaseLayout::read_from(body.as_slice()).unwrap_err();
        assert!(err.to_string().contains("version"));
    }

    #[test]
    fn stats_report() {
        let layout = build_layout(&sample_genomes(), &BuildOptions::with_k(10)).unwrap();
        let stats = layout.stats();
        assert_eq!(stats.species.len(), 3);
        assert_eq!(stats.species.iter().map(|s| s.kmers).sum::<usize>(), layout.total_kmers());
        let text = stats.to_string();
        assert!(text.contains("utilization\t"));
        assert!(text.contains("species\t1\talpha"));
    }

    #[test]
    fn rejects_bad_config() {
        let g = sample_genomes();
        assert!(build_layout(&[], &BuildOptions::default()).is_err());
        assert!(build_layout(&g, &BuildOptions::with_k(65)).is_err());
        assert!(build_layout(&g, &BuildOptions { stride: 0, ..BuildOptions::with_k(8) }).is_err());
        let dup = vec![g[0].clone(), g[0].clone()];
        assert!(build_layout(&dup, &BuildOptions::with_k(8)).is_err());
    }
}
