//! Analytical latency, throughput, energy, lifetime and area model.
//!
//! Energy figures are per (query, stored k-mer) comparison: the writes one
//! row performs during a search plus one sense-amplifier read. Filtering
//! divides the number of comparisons, so it divides the energy and the
//! wear by the same reduction factor.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::PerfError;
use crate::magic::{DEFAULT_ROWS, SA_COUNTS};

/// MAGIC cycles of one search program.
pub const REFERENCE_MAGIC_CYCLES: u64 = 2167;
/// Per-row writes that reproduce the 37.87 pJ per-comparison energy.
pub const CALIBRATED_WRITES: u64 = 4120;
pub const DEFAULT_FILTER_REDUCTION: f64 = 250.0;

const AREA_OVERHEAD: [(usize, f64); 8] =
    [(1, 0.0), (2, 0.0), (4, 0.01), (8, 0.02), (16, 0.04), (32, 0.09), (64, 0.16), (128, 0.28)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfConstants {
    pub magic_cycle_ns: f64,
    pub switching_energy_fj: f64,
    pub sa_latency_ns: f64,
    pub sa_energy_pj: f64,
    pub cell_area_um2: f64,
    pub rows: usize,
    pub bases_per_query: usize,
    pub endurance: f64,
    pub writes_per_cell: f64,
}

impl Default for PerfConstants {
    fn default() -> Self {
        PerfConstants {
            magic_cycle_ns: 3.0,
            switching_energy_fj: 6.4,
            sa_latency_ns: 36.0,
            sa_energy_pj: 11.5,
            cell_area_um2: 9e-4,
            rows: DEFAULT_ROWS,
            bases_per_query: 64,
            endurance: 1e9,
            writes_per_cell: 7.0,
        }
    }
}

impl PerfConstants {
    /// Applies one `key = value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), PerfError> {
        let num = || value.trim().parse::<f64>().map_err(|_| PerfError::Config(format!("{key}: bad number {value:?}")));
        match key.trim() {
            "magic_cycle_ns" => self.magic_cycle_ns = num()?,
            "switching_energy_fj" => self.switching_energy_fj = num()?,
            "sa_latency_ns" => self.sa_latency_ns = num()?,
            "sa_energy_pj" => self.sa_energy_pj = num()?,
            "cell_area_um2" => self.cell_area_um2 = num()?,
            "endurance" => self.endurance = num()?,
            "writes_per_cell" => self.writes_per_cell = num()?,
            "rows" => self.rows = num()? as usize,
            "bases_per_query" => self.bases_per_query = num()? as usize,
            other => return Err(PerfError::Config(format!("unknown constant {other:?}"))),
        }
        self.validate()
    }

    pub fn is_key(key: &str) -> bool {
        matches!(
            key,
            "magic_cycle_ns"
                | "switching_energy_fj"
                | "sa_latency_ns"
                | "sa_energy_pj"
                | "cell_area_um2"
                | "endurance"
                | "writes_per_cell"
                | "rows"
                | "bases_per_query"
        )
    }

    pub fn validate(&self) -> Result<(), PerfError> {
        let all = [
            self.magic_cycle_ns,
            self.switching_energy_fj,
            self.sa_latency_ns,
            self.sa_energy_pj,
            self.cell_area_um2,
            self.endurance,
            self.writes_per_cell,
            self.rows as f64,
            self.bases_per_query as f64,
        ];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(PerfError::Config("constants must be finite and strictly positive".into()))
        }
    }
}

/// Sense-amplifier phase: `ceil(rows / num_sas)` sequential reads.
pub fn step5_latency_ns(num_sas: usize, c: &PerfConstants) -> Result<f64, PerfError> {
    if num_sas < 1 {
        return Err(PerfError::Config("num_sas must be at least 1".into()));
    }
    Ok(c.sa_latency_ns * c.rows.div_ceil(num_sas) as f64)
}

pub fn search_latency_us(num_sas: usize, magic_cycles: u64, c: &PerfConstants) -> Result<f64, PerfError> {
    Ok((magic_cycles as f64 * c.magic_cycle_ns + step5_latency_ns(num_sas, c)?) / 1000.0)
}

/// Bases searched per minute, in Gbases, with `batch_parallelism` queries in
/// flight per search.
pub fn throughput_gbases_per_min(batch_parallelism: f64, latency_us: f64, bases_per_query: usize) -> Result<f64, PerfError> {
    if !(batch_parallelism > 0.0 && latency_us > 0.0 && bases_per_query > 0) {
        return Err(PerfError::Config("throughput inputs must be positive".into()));
    }
    let per_second = batch_parallelism * bases_per_query as f64 / (latency_us * 1e-6);
    Ok(per_second * 60.0 / 1e9)
}

/// `writes * switching energy + sa_reads * SA energy`, divided by the
/// filter reduction when one is given.
pub fn energy_per_search_pj(
    writes: u64,
    sa_reads: u64,
    filter_reduction: Option<f64>,
    c: &PerfConstants,
) -> Result<f64, PerfError> {
    let raw = writes as f64 * c.switching_energy_fj / 1000.0 + sa_reads as f64 * c.sa_energy_pj;
    match filter_reduction {
        None => Ok(raw),
        Some(r) if r.is_finite() && r >= 1.0 => Ok(raw / r),
        Some(r) => Err(PerfError::Config(format!("filter reduction {r} must be >= 1"))),
    }
}

pub fn lifetime_searches(endurance: f64, filter_reduction: f64, writes_per_cell: f64) -> Result<f64, PerfError> {
    if !(endurance > 0.0 && filter_reduction > 0.0 && writes_per_cell > 0.0) {
        return Err(PerfError::Config("lifetime inputs must be positive".into()));
    }
    Ok(endurance * filter_reduction / writes_per_cell)
}

/// Periphery area overhead for the supported sense-amplifier counts.
pub fn area_overhead(num_sas: usize) -> Result<f64, PerfError> {
    AREA_OVERHEAD
        .iter()
        .find(|(n, _)| *n == num_sas)
        .map(|(_, a)| *a)
        .ok_or_else(|| PerfError::Config(format!("no area figure for {num_sas} sense amplifiers")))
}

/// Reduction in compared (query, k-mer) pairs for a measured filter pass
/// fraction.
pub fn filter_reduction_from_pass_fraction(pass_fraction: f64) -> Result<f64, PerfError> {
    if !(pass_fraction > 0.0 && pass_fraction <= 1.0) {
        return Err(PerfError::Config(format!("pass fraction {pass_fraction} outside (0, 1]")));
    }
    Ok(1.0 / pass_fraction)
}

/// Measured or assumed inputs of one report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfInputs {
    pub num_sas: usize,
    pub magic_cycles: u64,
    /// Writes one row performs per search.
    pub writes_per_row: u64,
    /// Queries searched concurrently thanks to batching.
    pub batch_parallelism: f64,
    /// `None` models a run without the filter.
    pub filter_reduction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfReport {
    pub num_sas: usize,
    pub filter: bool,
    pub magic_cycles: u64,
    pub writes_per_row: u64,
    pub batch_parallelism: f64,
    pub filter_reduction: f64,
    pub search_latency_us: f64,
    pub throughput_gbases_per_min: f64,
    pub energy_per_search_pj: f64,
    pub lifetime_searches: f64,
    pub area_overhead_fraction: f64,
}

pub fn perf_report(inputs: &PerfInputs, c: &PerfConstants) -> Result<PerfReport, PerfError> {
    c.validate()?;
    let latency = search_latency_us(inputs.num_sas, inputs.magic_cycles, c)?;
    let reduction = inputs.filter_reduction.unwrap_or(1.0);
    Ok(PerfReport {
        num_sas: inputs.num_sas,
        filter: inputs.filter_reduction.is_some(),
        magic_cycles: inputs.magic_cycles,
        writes_per_row: inputs.writes_per_row,
        batch_parallelism: inputs.batch_parallelism,
        filter_reduction: reduction,
        search_latency_us: latency,
        throughput_gbases_per_min: throughput_gbases_per_min(inputs.batch_parallelism, latency, c.bases_per_query)?,
        energy_per_search_pj: energy_per_search_pj(inputs.writes_per_row, 1, inputs.filter_reduction, c)?,
        lifetime_searches: lifetime_searches(c.endurance, reduction, c.writes_per_cell)?,
        area_overhead_fraction: area_overhead(inputs.num_sas)?,
    })
}

/// Reports for every supported SA count, without and with the filter.
/// Batching needs the filter, so runs without it use parallelism 1.
pub fn perf_sweep(
    magic_cycles: u64,
    writes_per_row: u64,
    batch_parallelism: f64,
    filter_reduction: f64,
    c: &PerfConstants,
) -> Result<Vec<PerfReport>, PerfError> {
    let mut out = Vec::new();
    for &num_sas in &SA_COUNTS {
        for filter in [false, true] {
            let inputs = PerfInputs {
                num_sas,
                magic_cycles,
                writes_per_row,
                batch_parallelism: if filter { batch_parallelism } else { 1.0 },
                filter_reduction: filter.then_some(filter_reduction),
            };
            out.push(perf_report(&inputs, c)?);
        }
    }
    Ok(out)
}

impl fmt::Display for PerfReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "sas={} filter={} latency={:.3}us throughput={:.2}Gb/min energy={:.3}pJ lifetime={:.3e} area={:.0}%",
            self.num_sas,
            self.filter,
            self.search_latency_us,
            self.throughput_gbases_per_min,
            self.energy_per_search_pj,
            self.lifetime_searches,
            self.area_overhead_fraction * 100.0
        )
    }
}
