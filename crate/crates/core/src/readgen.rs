//! Synthetic genomes and reads with sequencing-error injection.
//!
//! Each base of the source draws one uniform number that selects at most one
//! event, checked in the order deletion, insertion (a random base emitted
//! before the source base), substitution. Reads are consumed from the
//! genome until the requested length is reached, so deletions never shorten
//! the final read.

use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ReadGenError;
use crate::seq::{Base, Sequence};

/// Read length used throughout the evaluation.
pub const DEFAULT_READ_LEN: usize = 64;
const MAX_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorProfile {
    pub substitution_rate: f64,
    pub insertion_rate: f64,
    pub deletion_rate: f64,
}

impl ErrorProfile {
    pub fn new(substitution_rate: f64, insertion_rate: f64, deletion_rate: f64) -> Result<Self, ReadGenError> {
        let p = ErrorProfile { substitution_rate, insertion_rate, deletion_rate };
        p.validate()?;
        Ok(p)
    }

    pub const fn none() -> Self {
        ErrorProfile { substitution_rate: 0.0, insertion_rate: 0.0, deletion_rate: 0.0 }
    }

    pub fn validate(&self) -> Result<(), ReadGenError> {
        let rates = [self.substitution_rate, self.insertion_rate, self.deletion_rate];
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(ReadGenError::Profile(format!("rates must lie in [0, 1]: {self}")));
        }
        if rates.iter().sum::<f64>() >= 1.0 {
            return Err(ReadGenError::Profile(format!("rates must sum to less than 1: {self}")));
        }
        Ok(())
    }

    pub fn total(&self) -> f64 {
        self.substitution_rate + self.insertion_rate + self.deletion_rate
    }
}

impl fmt::Display for ErrorProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sub={} ins={} del={}", self.substitution_rate, self.insertion_rate, self.deletion_rate)
    }
}

/// Accepts `none`, `low`, `high` or `sub,ins,del`.
impl FromStr for ErrorProfile {
    type Err = ReadGenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (low, high) = builtin_profiles();
        match s.trim() {
            "none" | "zero" => Ok(ErrorProfile::none()),
            "low" => Ok(low),
            "high" => Ok(high),
            other => {
                let parts: Vec<f64> = other
                    .split(',')
                    .map(|p| p.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| ReadGenError::Profile(format!("unknown profile {other:?}")))?;
                match parts[..] {
                    [s, i, d] => ErrorProfile::new(s, i, d),
                    _ => Err(ReadGenError::Profile(format!("expected sub,ins,del, got {other:?}"))),
                }
            }
        }
    }
}

/// (low, high): second- and third-generation sequencing error rates.
pub fn builtin_profiles() -> (ErrorProfile, ErrorProfile) {
    (
        ErrorProfile { substitution_rate: 0.036, insertion_rate: 0.002, deletion_rate: 0.002 },
        ErrorProfile { substitution_rate: 0.01, insertion_rate: 0.07, deletion_rate: 0.07 },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ErrorCounts {
    pub source_bases: u64,
    pub substitutions: u64,
    pub insertions: u64,
    pub deletions: u64,
}

impl ErrorCounts {
    fn add(&mut self, other: &ErrorCounts) {
        self.source_bases += other.source_bases;
        self.substitutions += other.substitutions;
        self.insertions += other.insertions;
        self.deletions += other.deletions;
    }
}

fn random_base<R: Rng + ?Sized>(rng: &mut R) -> Base {
    Base::from_code(rng.gen_range(0..4))
}

fn other_base<R: Rng + ?Sized>(b: Base, rng: &mut R) -> Base {
    let shift = rng.gen_range(1..4u8);
    Base::from_code((b.code() + shift) % 4)
}

/// Applies one source base's event to `out`.
fn mutate_base<R: Rng + ?Sized>(b: Base, p: &ErrorProfile, rng: &mut R, out: &mut Vec<Base>, counts: &mut ErrorCounts) {
    counts.source_bases += 1;
    let u: f64 = rng.gen();
    if u < p.deletion_rate {
        counts.deletions += 1;
    } else if u < p.deletion_rate + p.insertion_rate {
        counts.insertions += 1;
        out.push(random_base(rng));
        out.push(b);
    } else if u < p.deletion_rate + p.insertion_rate + p.substitution_rate {
        counts.substitutions += 1;
        out.push(other_base(b, rng));
    } else {
        out.push(b);
    }
}

/// Injects errors into every base of `bases`. The output may be shorter
/// or longer than the input.
pub fn inject_errors_with<R: Rng + ?Sized>(bases: &[Base], profile: &ErrorProfile, rng: &mut R) -> (Vec<Base>, ErrorCounts) {
    let mut out = Vec::with_capacity(bases.len() + bases.len() / 8);
    let mut counts = ErrorCounts::default();
    for &b in bases {
        mutate_base(b, profile, rng, &mut out, &mut counts);
    }
    (out, counts)
}

/// Seeded form of [`inject_errors_with`].
pub fn inject_errors(seq: &Sequence, profile: &ErrorProfile, seed: u64) -> Vec<Base> {
    inject_errors_with(seq.bases(), profile, &mut ChaCha8Rng::seed_from_u64(seed)).0
}

/// Substitutes each base with probability `rate`.
pub fn mutate_substitutions<R: Rng + ?Sized>(seq: &Sequence, rate: f64, rng: &mut R) -> Sequence {
    let bases = seq.bases().iter().map(|&b| if rng.gen::<f64>() < rate { other_base(b, rng) } else { b }).collect();
    Sequence::new(bases).expect("length preserved")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticRead {
    pub index: usize,
    pub sequence: Sequence,
    pub truth_species: u32,
    pub origin_offset: u64,
}

impl SyntheticRead {
    pub fn name(&self) -> String {
        format!("read_{}|species={}|pos={}", self.index, self.truth_species, self.origin_offset)
    }
}

/// (read index, species, position) from a `read_<n>|species=<id>|pos=<p>`
/// record name.
pub fn parse_read_name(name: &str) -> Option<(usize, u32, u64)> {
    let mut parts = name.split_whitespace().next()?.split('|');
    let n = parts.next()?.strip_prefix("read_")?.parse().ok()?;
    let mut species = None;
    let mut pos = None;
    for p in parts {
        if let Some(v) = p.strip_prefix("species=") {
            species = v.parse().ok();
        } else if let Some(v) = p.strip_prefix("pos=") {
            pos = v.parse().ok();
        }
    }
    Some((n, species?, pos?))
}

/// Species label of a read record name, if present.
pub fn truth_from_name(name: &str) -> Option<u32> {
    name.split_whitespace().next()?.split('|').find_map(|p| p.strip_prefix("species=")?.parse().ok())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleConfig {
    pub reads_per_genome: usize,
    pub read_len: usize,
    pub profile: ErrorProfile,
    pub seed: u64,
}

impl SampleConfig {
    pub fn new(reads_per_genome: usize, profile: ErrorProfile, seed: u64) -> Self {
        SampleConfig { reads_per_genome, read_len: DEFAULT_READ_LEN, profile, seed }
    }
}

/// The RNG of read `index` under `seed`: one ChaCha stream per read.
pub fn read_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn draw_read(genome: &[Base], read_len: usize, profile: &ErrorProfile, rng: &mut ChaCha8Rng) -> Result<(Vec<Base>, u64), ReadGenError> {
    for _ in 0..MAX_ATTEMPTS {
        let start = rng.gen_range(0..=genome.len() - read_len);
        let mut out = Vec::with_capacity(read_len + 2);
        let mut counts = ErrorCounts::default();
        for &b in &genome[start..] {
            mutate_base(b, profile, rng, &mut out, &mut counts);
            if out.len() >= read_len {
                out.truncate(read_len);
                return Ok((out, start as u64));
            }
        }
    }
    Err(ReadGenError::Config(format!("could not fill a {read_len}-base read after {MAX_ATTEMPTS} attempts")))
}

/// Draws `reads_per_genome` reads from each genome at uniform positions.
/// Read `n` of the sample uses its own RNG stream, so the output does not
/// depend on thread count.
pub fn generate_sample(genomes: &[(u32, Sequence)], cfg: &SampleConfig) -> Result<Vec<SyntheticRead>, ReadGenError> {
    cfg.profile.validate()?;
    if cfg.read_len == 0 {
        return Err(ReadGenError::Config("read length must be positive".into()));
    }
    for (_, g) in genomes {
        if g.len() < cfg.read_len {
            return Err(ReadGenError::TooShort { len: g.len(), read_len: cfg.read_len });
        }
    }
    let total = genomes.len() * cfg.reads_per_genome;
    (0..total)
        .into_par_iter()
        .map(|index| {
            let (species, genome) = &genomes[index / cfg.reads_per_genome];
            let mut rng = read_rng(cfg.seed, index as u64);
            let (bases, pos) = draw_read(genome.bases(), cfg.read_len, &cfg.profile, &mut rng)?;
            Ok(SyntheticRead {
                index,
                sequence: Sequence::new(bases).expect("read_len > 0"),
                truth_species: *species,
                origin_offset: pos,
            })
        })
        .collect()
}

/// Writes reads as FASTA with labeled record names.
pub fn write_reads_fasta<W: std::io::Write>(out: W, reads: &[SyntheticRead]) -> std::io::Result<()> {
    let records: Vec<(String, Sequence)> = reads.iter().map(|r| (r.name(), r.sequence.clone())).collect();
    crate::seq::write_fasta(out, &records, 80)
}

/// I.i.d. uniform bases.
pub fn random_genome<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Sequence {
    Sequence::new((0..len.max(1)).map(|_| random_base(rng)).collect()).expect("non-empty")
}

/// Regional composition model: the genome is a concatenation of regions,
/// each with its own GC content and strand skews.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionModel {
    pub min_region: usize,
    pub max_region: usize,
    pub gc: (f64, f64),
    pub skew: (f64, f64),
}

impl Default for RegionModel {
    fn default() -> Self {
        RegionModel { min_region: 2_000, max_region: 8_000, gc: (0.25, 0.75), skew: (-0.2, 0.2) }
    }
}

/// Genome whose base composition varies from region to region.
pub fn heterogeneous_genome<R: Rng + ?Sized>(len: usize, model: &RegionModel, rng: &mut R) -> Result<Sequence, ReadGenError> {
    let ok_range = |(lo, hi): (f64, f64), min: f64, max: f64| lo <= hi && lo >= min && hi <= max;
    if model.min_region == 0
        || model.min_region > model.max_region
        || !ok_range(model.gc, 0.0, 1.0)
        || !ok_range(model.skew, -1.0, 1.0)
    {
        return Err(ReadGenError::Config("invalid region model".into()));
    }
    let mut bases = Vec::with_capacity(len);
    while bases.len() < len.max(1) {
        let region = rng.gen_range(model.min_region..=model.max_region).min(len.max(1) - bases.len());
        let gc = rng.gen_range(model.gc.0..=model.gc.1);
        let at_skew = rng.gen_range(model.skew.0..=model.skew.1);
        let gc_skew = rng.gen_range(model.skew.0..=model.skew.1);
        let at = 1.0 - gc;
        // weights follow Base::ALL order: A, T, G, C
        let weights = [at / 2.0 * (1.0 + at_skew), at / 2.0 * (1.0 - at_skew), gc / 2.0 * (1.0 + gc_skew), gc / 2.0 * (1.0 - gc_skew)];
        let dist = WeightedIndex::new(weights).map_err(|e| ReadGenError::Config(e.to_string()))?;
        bases.extend((0..region).map(|_| Base::ALL[dist.sample(rng)]));
    }
    Ok(Sequence::new(bases).expect("non-empty"))
}

/// Aggregate event counts of `n` injections of random sequences, used to
/// check empirical rates.
pub fn measure_rates(profile: &ErrorProfile, bases: usize, seed: u64) -> ErrorCounts {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = ErrorCounts::default();
    let chunk = 1 << 12;
    let mut left = bases;
    while left > 0 {
        let n = left.min(chunk);
        let src: Vec<Base> = (0..n).map(|_| random_base(&mut rng)).collect();
        total.add(&inject_errors_with(&src, profile, &mut rng).1);
        left -= n;
    }
    total
}
