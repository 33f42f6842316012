//! Read classification and detection on top of the database layout.
//!
//! A read is split into stride-1 k-mers. Each k-mer is traced through the
//! tracing table (or sent to every crossbar when the filter is off) and
//! searched against the rows of each selected crossbar. Hits are summed per
//! species and the read goes to the species with the most hits.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::db::DatabaseLayout;
use crate::error::{PipelineError, SimError};
use crate::filter::{schedule_batches, TracingTable};
use crate::magic::{CrossbarState, SearchStats, DEFAULT_COLS, SA_COUNTS};
use crate::matcher::{edits_vector, match_query_against_rows, PackedKmer, SaModel};
use crate::readgen::read_rng;
use crate::seq::{compute_histogram, Base, BaseHistogram, Sequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Backend {
    Functional,
    GateLevel,
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "functional" => Ok(Backend::Functional),
            "gate-level" | "gate" => Ok(Backend::GateLevel),
            other => Err(format!("unknown backend {other:?} (expected functional or gate-level)")),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Functional => "functional",
            Backend::GateLevel => "gate-level",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub eth: u32,
    pub sa: SaModel,
    pub num_sas: usize,
    pub backend: Backend,
    pub use_filter: bool,
}

impl EngineConfig {
    /// Ideal sense amplifier with threshold `eth`, filter on.
    pub fn ideal(eth: u32) -> Self {
        EngineConfig { eth, sa: SaModel::ideal(eth), num_sas: 32, backend: Backend::Functional, use_filter: true }
    }
}

/// Counters accumulated while searching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SearchCounters {
    pub kmer_queries: u64,
    pub crossbar_searches: u64,
    /// (query k-mer, stored k-mer) pairs actually compared.
    pub row_comparisons: u64,
    /// Pairs a full scan would compare.
    pub full_scan_pairs: u64,
}

impl SearchCounters {
    pub fn add(&mut self, o: &SearchCounters) {
        self.kmer_queries += o.kmer_queries;
        self.crossbar_searches += o.crossbar_searches;
        self.row_comparisons += o.row_comparisons;
        self.full_scan_pairs += o.full_scan_pairs;
    }

    /// Fraction of candidate pairs that survive the filter.
    pub fn pass_fraction(&self) -> f64 {
        if self.full_scan_pairs == 0 {
            0.0
        } else {
            self.row_comparisons as f64 / self.full_scan_pairs as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub read_id: String,
    /// `None` means unclassified.
    pub assigned_species: Option<u32>,
    /// Every database species, including those with zero hits.
    pub per_species_hits: BTreeMap<u32, u64>,
    pub counters: SearchCounters,
}

/// Species with the most hits; ties go to the lowest id; `None` when no
/// species has a hit.
pub fn assign_species(hits: &BTreeMap<u32, u64>) -> Option<u32> {
    let mut best: Option<(u32, u64)> = None;
    for (&s, &h) in hits {
        if h > 0 && best.is_none_or(|(_, bh)| h > bh) {
            best = Some((s, h));
        }
    }
    best.map(|(s, _)| s)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub read_id: String,
    pub detected: bool,
    pub counters: SearchCounters,
}

/// Immutable search context shared by all reads.
pub struct Engine<'a> {
    layout: &'a DatabaseLayout,
    table: Option<&'a TracingTable>,
    cfg: EngineConfig,
    all_crossbars: Vec<u32>,
}

impl<'a> Engine<'a> {
    pub fn new(layout: &'a DatabaseLayout, table: Option<&'a TracingTable>, cfg: EngineConfig) -> Result<Self, PipelineError> {
        if !SA_COUNTS.contains(&cfg.num_sas) || cfg.num_sas > layout.rows() {
            return Err(SimError::SaCount(cfg.num_sas).into());
        }
        if cfg.use_filter {
            let t = table.ok_or_else(|| PipelineError::Config("filter enabled without a tracing table".into()))?;
            if t.eth() != cfg.eth {
                return Err(PipelineError::Config(format!("tracing table built for eth {} but eth is {}", t.eth(), cfg.eth)));
            }
            if t.k() as usize != layout.k() {
                return Err(PipelineError::Config(format!("tracing table k {} != layout k {}", t.k(), layout.k())));
            }
        }
        let all_crossbars = (0..layout.crossbars().len() as u32).collect();
        Ok(Engine { layout, table: if cfg.use_filter { table } else { None }, cfg, all_crossbars })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn layout(&self) -> &DatabaseLayout {
        self.layout
    }

    fn kmers(&self, read: &[Base]) -> Result<Vec<PackedKmer>, PipelineError> {
        let k = self.layout.k();
        if read.len() < k {
            return Err(PipelineError::TooShort { len: read.len(), k });
        }
        read.windows(k).map(|w| PackedKmer::pack(w).map_err(PipelineError::from)).collect()
    }

    fn candidates(&self, kmer: &PackedKmer) -> Vec<u32> {
        match self.table {
            Some(t) => t.lookup(&kmer.histogram()).iter().flat_map(|r| r.indices()).collect(),
            None => self.all_crossbars.clone(),
        }
    }

    fn new_crossbar(&self) -> Result<Option<CrossbarState>, PipelineError> {
        Ok(match self.cfg.backend {
            Backend::GateLevel => Some(CrossbarState::new(self.layout.rows(), DEFAULT_COLS, self.layout.k())?),
            Backend::Functional => None,
        })
    }

    /// Hit count of `query` in crossbar `index`.
    fn search(
        &self,
        xb: &mut Option<CrossbarState>,
        index: u32,
        query: &PackedKmer,
        rng: &mut ChaCha8Rng,
    ) -> Result<u64, PipelineError> {
        let rows = &self.layout.crossbar(index).kmers;
        match xb {
            None => Ok(match_query_against_rows(rows, query, &self.cfg.sa, rng).map_err(SimError::from)?.hit_count as u64),
            Some(state) => {
                state.load_kmers(rows)?;
                Ok(state.run_search_program(query, &self.cfg.sa, self.cfg.num_sas, rng)?.hit_count as u64)
            }
        }
    }

    /// Classifies one read. `rng` feeds the stochastic sense amplifier.
    pub fn classify_read(&self, read_id: &str, read: &[Base], rng: &mut ChaCha8Rng) -> Result<ClassificationResult, PipelineError> {
        let kmers = self.kmers(read)?;
        let mut xb = self.new_crossbar()?;
        let mut hits: BTreeMap<u32, u64> = self.layout.species().keys().map(|&s| (s, 0)).collect();
        let mut counters = SearchCounters::default();
        let db_size = self.layout.total_kmers() as u64;
        for q in &kmers {
            counters.kmer_queries += 1;
            counters.full_scan_pairs += db_size;
            for idx in self.candidates(q) {
                let desc = self.layout.crossbar(idx);
                counters.crossbar_searches += 1;
                counters.row_comparisons += desc.kmers.len() as u64;
                *hits.get_mut(&desc.species_id).expect("species registered") += self.search(&mut xb, idx, q, rng)?;
            }
        }
        Ok(ClassificationResult {
            read_id: read_id.to_string(),
            assigned_species: assign_species(&hits),
            per_species_hits: hits,
            counters,
        })
    }

    /// True iff some k-mer of the read hits some crossbar of `target`.
    pub fn detect_read(&self, read_id: &str, read: &[Base], target: u32, rng: &mut ChaCha8Rng) -> Result<DetectionResult, PipelineError> {
        if !self.layout.species().contains_key(&target) {
            return Err(PipelineError::Config(format!("species {target} is not in the database")));
        }
        let kmers = self.kmers(read)?;
        let mut xb = self.new_crossbar()?;
        let mut counters = SearchCounters::default();
        let target_size = self.layout.species_crossbars(target).map(|i| self.layout.crossbar(i).kmers.len() as u64).sum::<u64>();
        for q in &kmers {
            counters.kmer_queries += 1;
            counters.full_scan_pairs += target_size;
            for idx in self.candidates(q) {
                let desc = self.layout.crossbar(idx);
                if desc.species_id != target {
                    continue;
                }
                counters.crossbar_searches += 1;
                counters.row_comparisons += desc.kmers.len() as u64;
                if self.search(&mut xb, idx, q, rng)? > 0 {
                    return Ok(DetectionResult { read_id: read_id.to_string(), detected: true, counters });
                }
            }
        }
        Ok(DetectionResult { read_id: read_id.to_string(), detected: false, counters })
    }

    /// Classifies every read in parallel. Read `i` draws from RNG stream
    /// `i` of `seed`, so results do not depend on scheduling.
    pub fn classify_all(&self, reads: &[(String, Sequence)], seed: u64) -> Result<Vec<ClassificationResult>, PipelineError> {
        reads
            .par_iter()
            .enumerate()
            .map(|(i, (id, s))| self.classify_read(id, s.bases(), &mut read_rng(seed, i as u64)))
            .collect()
    }

    pub fn detect_all(&self, reads: &[(String, Sequence)], target: u32, seed: u64) -> Result<Vec<DetectionResult>, PipelineError> {
        reads
            .par_iter()
            .enumerate()
            .map(|(i, (id, s))| self.detect_read(id, s.bases(), target, &mut read_rng(seed, i as u64)))
            .collect()
    }
}

/// Average number of queries per batch when every k-mer of `reads` is
/// scheduled with [`schedule_batches`].
pub fn batch_parallelism(reads: &[(String, Sequence)], k: usize, eth: u32, examine_limit: usize) -> f64 {
    let hs: Vec<BaseHistogram> =
        reads.iter().flat_map(|(_, s)| s.bases().windows(k).map(compute_histogram).collect::<Vec<_>>()).collect();
    if hs.is_empty() {
        return 0.0;
    }
    let batches = schedule_batches(&hs, eth, examine_limit);
    hs.len() as f64 / batches.len() as f64
}

/// Filter counters for every k-mer of `reads` without running any search:
/// traced rows against all stored rows.
pub fn filter_counters(layout: &DatabaseLayout, table: &TracingTable, reads: &[Sequence]) -> SearchCounters {
    let k = layout.k();
    let db_size = layout.total_kmers() as u64;
    reads
        .par_iter()
        .map(|s| {
            let mut c = SearchCounters::default();
            for w in s.bases().windows(k) {
                c.kmer_queries += 1;
                c.full_scan_pairs += db_size;
                for r in table.lookup(&compute_histogram(w)) {
                    c.crossbar_searches += r.len() as u64;
                    c.row_comparisons += r.indices().map(|i| layout.crossbar(i).kmers.len() as u64).sum::<u64>();
                }
            }
            c
        })
        .reduce(SearchCounters::default, |mut a, b| {
            a.add(&b);
            a
        })
}

/// Cycle and write figures of one search on a fully populated crossbar.
pub fn reference_search_stats(k: usize, rows: usize, num_sas: usize) -> Result<SearchStats, PipelineError> {
    let mut xb = CrossbarState::new(rows, DEFAULT_COLS, k)?;
    let kmer = PackedKmer::pack(&vec![Base::A; k])?;
    xb.load_kmers(&vec![kmer; rows])?;
    let mut rng = read_rng(0, 0);
    Ok(xb.run_search_program(&kmer, &SaModel::ideal(0), num_sas, &mut rng)?.stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityMetrics {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub sensitivity: f64,
    pub precision: f64,
    pub f1: f64,
}

impl QualityMetrics {
    /// Undefined ratios (zero denominators) are reported as 0.
    pub fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        let ratio = |n: u64, d: u64| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        let sensitivity = ratio(tp, tp + fn_);
        let precision = ratio(tp, tp + fp);
        let f1 = if sensitivity + precision == 0.0 { 0.0 } else { 2.0 * sensitivity * precision / (sensitivity + precision) };
        QualityMetrics { tp, fp, fn_, sensitivity, precision, f1 }
    }
}

/// Scores (assigned, truth) pairs. A read counts as TP when assigned its
/// true species, as FP when assigned any other species, and as FN when its
/// true species is in `known` but it was not assigned to it.
pub fn compute_metrics(pairs: &[(Option<u32>, Option<u32>)], known: &BTreeSet<u32>) -> QualityMetrics {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for &(assigned, truth) in pairs {
        let correct = assigned.is_some() && assigned == truth;
        if correct {
            tp += 1;
        } else {
            if assigned.is_some() {
                fp += 1;
            }
            if truth.is_some_and(|t| known.contains(&t)) {
                fn_ += 1;
            }
        }
    }
    QualityMetrics::from_counts(tp, fp, fn_)
}

/// Scores (detected, is_target) pairs.
pub fn detection_metrics(pairs: &[(bool, bool)]) -> QualityMetrics {
    let tp = pairs.iter().filter(|&&(d, t)| d && t).count() as u64;
    let fp = pairs.iter().filter(|&&(d, t)| d && !t).count() as u64;
    let fn_ = pairs.iter().filter(|&&(d, t)| !d && t).count() as u64;
    QualityMetrics::from_counts(tp, fp, fn_)
}

/// Per-read hit counts for several thresholds at once, with and without
/// the filter, under the ideal sense amplifier (threshold = eth).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepHits {
    pub eths: Vec<u32>,
    /// `[eth index][filter as usize]` -> species -> hits.
    pub hits: Vec<[BTreeMap<u32, u64>; 2]>,
}

impl SweepHits {
    pub fn assigned(&self, eth_idx: usize, filter: bool) -> Option<u32> {
        assign_species(&self.hits[eth_idx][usize::from(filter)])
    }
}

/// Full scan computing the edit count and histogram distance of every
/// (read k-mer, stored k-mer) pair once.
pub fn sweep_read(layout: &DatabaseLayout, read: &[Base], eths: &[u32]) -> Result<SweepHits, PipelineError> {
    let k = layout.k();
    if read.len() < k {
        return Err(PipelineError::TooShort { len: read.len(), k });
    }
    let max_eth = eths.iter().copied().max().unwrap_or(0);
    let zero: BTreeMap<u32, u64> = layout.species().keys().map(|&s| (s, 0)).collect();
    let mut hits: Vec<[BTreeMap<u32, u64>; 2]> = eths.iter().map(|_| [zero.clone(), zero.clone()]).collect();
    for w in read.windows(k) {
        let q = PackedKmer::pack(w)?;
        let qh = q.histogram();
        for desc in layout.crossbars() {
            let l1 = desc.histogram.l1(&qh);
            for m in &desc.kmers {
                let ec = edits_vector(m, &q).map_err(SimError::from)?.edit_count();
                if ec > max_eth {
                    continue;
                }
                for (i, &e) in eths.iter().enumerate() {
                    if ec <= e {
                        *hits[i][0].get_mut(&desc.species_id).expect("species") += 1;
                        if l1 <= 2 * e {
                            *hits[i][1].get_mut(&desc.species_id).expect("species") += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(SweepHits { eths: eths.to_vec(), hits })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eth: u32,
    pub filter: bool,
    pub metrics: QualityMetrics,
}

/// Quality metrics for every eth, with and without the filter.
pub fn eth_sweep(
    layout: &DatabaseLayout,
    reads: &[(Sequence, Option<u32>)],
    eths: &[u32],
) -> Result<Vec<SweepRow>, PipelineError> {
    let per_read: Vec<SweepHits> = reads.par_iter().map(|(s, _)| sweep_read(layout, s.bases(), eths)).collect::<Result<_, _>>()?;
    let known: BTreeSet<u32> = layout.species().keys().copied().collect();
    let mut rows = Vec::new();
    for (i, &eth) in eths.iter().enumerate() {
        for filter in [false, true] {
            let pairs: Vec<_> = per_read.iter().zip(reads).map(|(h, (_, truth))| (h.assigned(i, filter), *truth)).collect();
            rows.push(SweepRow { eth, filter, metrics: compute_metrics(&pairs, &known) });
        }
    }
    Ok(rows)
}

/// Detection metrics for every eth, with and without the filter. A read is
/// detected when any k-mer of a `targets` species is a hit; the bool next to
/// each read says whether it truly comes from a target.
pub fn detection_sweep(
    layout: &DatabaseLayout,
    reads: &[(Sequence, bool)],
    targets: &BTreeSet<u32>,
    eths: &[u32],
) -> Result<Vec<SweepRow>, PipelineError> {
    let per_read: Vec<SweepHits> = reads.par_iter().map(|(s, _)| sweep_read(layout, s.bases(), eths)).collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for (i, &eth) in eths.iter().enumerate() {
        for filter in [false, true] {
            let pairs: Vec<(bool, bool)> = per_read
                .iter()
                .zip(reads)
                .map(|(h, (_, truth))| (targets.iter().any(|t| h.hits[i][usize::from(filter)].get(t).is_some_and(|&n| n > 0)), *truth))
                .collect();
            rows.push(SweepRow { eth, filter, metrics: detection_metrics(&pairs) });
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(out, "eth,filter,tp,fp,fn,sensitivity,precision,f1")?;
    for r in rows {
        let m = &r.metrics;
        writeln!(out, "{},{},{},{},{},{:.6},{:.6},{:.6}", r.eth, r.filter, m.tp, m.fp, m.fn_, m.sensitivity, m.precision, m.f1)?;
    }
    Ok(())
}

/// One line per read: id, assigned species (or `unclassified`), then the
/// hit count of every database species in id order.
pub fn write_classifications_tsv<W: Write>(mut out: W, species: &[u32], results: &[ClassificationResult]) -> std::io::Result<()> {
    write!(out, "#read_id\tassigned")?;
    for s in species {
        write!(out, "\thits_{s}")?;
    }
    writeln!(out)?;
    for r in results {
        match r.assigned_species {
            Some(s) => write!(out, "{}\t{}", r.read_id, s)?,
            None => write!(out, "{}\tunclassified", r.read_id)?,
        }
        for s in species {
            write!(out, "\t{}", r.per_species_hits.get(s).copied().unwrap_or(0))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_detections_tsv<W: Write>(mut out: W, target: u32, results: &[DetectionResult]) -> std::io::Result<()> {
    writeln!(out, "#read_id\tdetected_{target}")?;
    for r in results {
        writeln!(out, "{}\t{}", r.read_id, u8::from(r.detected))?;
    }
    Ok(())
}
