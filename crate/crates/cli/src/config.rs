//! Run configuration: defaults, `key = value` config files, flag overrides.

use std::path::{Path, PathBuf};

use crossmer::filter::DEFAULT_EXAMINE_LIMIT;
use crossmer::magic::SA_COUNTS;
use crossmer::matcher::SaMode;
use crossmer::perf::PerfConstants;
use crossmer::pipeline::Backend;
use crossmer::readgen::{ErrorProfile, DEFAULT_READ_LEN};
use crossmer::seq::{DEFAULT_K, MAX_K};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub k: usize,
    pub eth: u32,
    /// Sense-amplifier threshold; follows `eth` unless set.
    pub threshold: Option<u32>,
    pub num_sas: usize,
    pub sa_mode: SaMode,
    pub backend: Backend,
    pub seed: u64,
    /// 0 lets the thread pool pick.
    pub threads: usize,
    pub examine_limit: usize,
    pub out: PathBuf,
    pub genomes: Vec<PathBuf>,
    pub reads: Option<PathBuf>,
    pub layout: Option<PathBuf>,
    pub table: Option<PathBuf>,
    pub confidence_table: Option<PathBuf>,
    pub profile: ErrorProfile,
    pub reads_per_genome: usize,
    pub read_len: usize,
    pub stride: usize,
    pub dedup: bool,
    pub filter: bool,
    pub target_species: Option<u32>,
    pub eth_sweep: Option<Vec<u32>>,
    pub magic_cycles: Option<u64>,
    pub batch_parallelism: Option<f64>,
    pub filter_reduction: Option<f64>,
    pub perf: PerfConstants,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            k: DEFAULT_K,
            eth: 4,
            threshold: None,
            num_sas: 32,
            sa_mode: SaMode::Ideal,
            backend: Backend::Functional,
            seed: 0,
            threads: 0,
            examine_limit: DEFAULT_EXAMINE_LIMIT,
            out: PathBuf::from("."),
            genomes: Vec::new(),
            reads: None,
            layout: None,
            table: None,
            confidence_table: None,
            profile: ErrorProfile::none(),
            reads_per_genome: 100,
            read_len: DEFAULT_READ_LEN,
            stride: 1,
            dedup: false,
            filter: true,
            target_species: None,
            eth_sweep: None,
            magic_cycles: None,
            batch_parallelism: None,
            filter_reduction: None,
            perf: PerfConstants::default(),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.trim().parse().map_err(|_| CliError::Usage(format!("{key}: invalid value {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(CliError::Usage(format!("{key}: expected a boolean, got {other:?}"))),
    }
}

/// `0..9` (inclusive) or a comma-separated list.
pub fn parse_eth_list(value: &str) -> Result<Vec<u32>, CliError> {
    let bad = || CliError::Usage(format!("eth_sweep: invalid list {value:?}"));
    let v = value.trim();
    let list: Vec<u32> = if let Some((a, b)) = v.split_once("..") {
        let (a, b): (u32, u32) = (a.trim().parse().map_err(|_| bad())?, b.trim().trim_start_matches('=').parse().map_err(|_| bad())?);
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        v.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if list.is_empty() {
        return Err(bad());
    }
    Ok(list)
}

impl RunConfig {
    /// Sets one option by name; `-` and `_` are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.trim().replace('-', "_");
        let k = key.as_str();
        match k {
            "k" => self.k = parse(k, value)?,
            "eth" => self.eth = parse(k, value)?,
            "threshold" => self.threshold = Some(parse(k, value)?),
            "num_sas" => self.num_sas = parse(k, value)?,
            "sa_mode" => self.sa_mode = value.trim().parse().map_err(CliError::Usage)?,
            "backend" => self.backend = value.trim().parse().map_err(CliError::Usage)?,
            "seed" => self.seed = parse(k, value)?,
            "threads" => self.threads = parse(k, value)?,
            "examine_limit" => self.examine_limit = parse(k, value)?,
            "out" => self.out = PathBuf::from(value.trim()),
            "genomes" => self.genomes = value.split(',').map(|p| PathBuf::from(p.trim())).filter(|p| !p.as_os_str().is_empty()).collect(),
            "reads" => self.reads = Some(PathBuf::from(value.trim())),
            "layout" => self.layout = Some(PathBuf::from(value.trim())),
            "table" => self.table = Some(PathBuf::from(value.trim())),
            "confidence_table" => self.confidence_table = Some(PathBuf::from(value.trim())),
            "profile" => self.profile = value.parse().map_err(|e: crossmer::error::ReadGenError| CliError::Usage(e.to_string()))?,
            "reads_per_genome" => self.reads_per_genome = parse(k, value)?,
            "read_len" => self.read_len = parse(k, value)?,
            "stride" => self.stride = parse(k, value)?,
            "dedup" => self.dedup = parse_bool(k, value)?,
            "filter" => self.filter = parse_bool(k, value)?,
            "target_species" => self.target_species = Some(parse(k, value)?),
            "eth_sweep" => self.eth_sweep = Some(parse_eth_list(value)?),
            "magic_cycles" => self.magic_cycles = Some(parse(k, value)?),
            "batch_parallelism" => self.batch_parallelism = Some(parse(k, value)?),
            "filter_reduction" => self.filter_reduction = Some(parse(k, value)?),
            _ if PerfConstants::is_key(k) => self.perf.set(k, value).map_err(|e| CliError::Usage(e.to_string()))?,
            _ => return Err(CliError::Usage(format!("unknown option {key:?}"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of a config file. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", n + 1)))?;
            self.set(key, value).map_err(|e| CliError::Usage(format!("config line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.k == 0 || self.k > MAX_K {
            return Err(CliError::Usage(format!("k must be in 1..={MAX_K}")));
        }
        if !SA_COUNTS.contains(&self.num_sas) {
            return Err(CliError::Usage(format!("num_sas must be one of {SA_COUNTS:?}")));
        }
        if self.examine_limit == 0 || self.stride == 0 || self.read_len == 0 {
            return Err(CliError::Usage("examine_limit, stride and read_len must be positive".into()));
        }
        if self.read_len < self.k {
            return Err(CliError::Usage(format!("read_len {} is shorter than k {}", self.read_len, self.k)));
        }
        Ok(())
    }

    pub fn sa_threshold(&self) -> u32 {
        self.threshold.unwrap_or(self.eth)
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}
