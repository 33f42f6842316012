use std::collections::BTreeSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crossmer::db::{build_layout, BuildOptions, DatabaseLayout, SpeciesGenome};
use crossmer::filter::TracingTable;
use crossmer::matcher::{ConfidenceTable, SaMode, SaModel};
use crossmer::perf::{perf_report, perf_sweep, PerfInputs, PerfReport, DEFAULT_FILTER_REDUCTION};
use crossmer::pipeline::{
    batch_parallelism, compute_metrics, detection_metrics, detection_sweep, eth_sweep, filter_counters, reference_search_stats,
    write_classifications_tsv, write_detections_tsv, write_sweep_csv, Engine, EngineConfig, QualityMetrics, SearchCounters,
};
use crossmer::readgen::{generate_sample, truth_from_name, write_reads_fasta, SampleConfig};
use crossmer::seq::{parse_fasta, read_clean_fasta, Sequence};

use crate::config::RunConfig;
use crate::error::CliError;

/// Batch parallelism assumed by `bench` when no reads are given.
const REFERENCE_PARALLELISM: f64 = 29.0;

fn create_out_dir(cfg: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    write_file(path, |w| writeln!(w, "{text}"))
}

fn require<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a PathBuf, CliError> {
    p.as_ref().ok_or_else(|| CliError::Usage(format!("--{what} is required")))
}

/// Reference genomes from every `--genomes` file. A `species=<id>` tag in a
/// record name sets its id; otherwise records are numbered in input order.
pub fn load_references(cfg: &RunConfig) -> Result<Vec<SpeciesGenome>, CliError> {
    if cfg.genomes.is_empty() {
        return Err(CliError::Usage("--genomes is required".into()));
    }
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    for path in &cfg.genomes {
        for rec in parse_fasta(path)? {
            let id = truth_from_name(&rec.name).unwrap_or(out.len() as u32);
            if !ids.insert(id) {
                return Err(CliError::Data(format!("{}: duplicate species id {id}", path.display())));
            }
            let name = rec.name.split(['|', ' ', '\t']).next().unwrap_or_default().to_string();
            out.push(SpeciesGenome { species_id: id, name, genome: rec.genome });
        }
    }
    Ok(out)
}

pub fn build_db(cfg: &RunConfig) -> Result<(), CliError> {
    let refs = load_references(cfg)?;
    let opts = BuildOptions { k: cfg.k, stride: cfg.stride, dedup: cfg.dedup, ..Default::default() };
    let layout = build_layout(&refs, &opts)?;
    let table = layout.tracing_table(cfg.eth)?;
    create_out_dir(cfg)?;
    layout.save(cfg.out_path("layout.xmdb"))?;
    table.save(cfg.out_path("table.xmtt"))?;
    let mut report = layout.stats().to_string();
    report.push_str(&format!("tracing_eth\t{}\ntracing_entries\t{}\ntracing_bytes\t{}\n", cfg.eth, table.populated_slots(), table.memory_bytes()));
    write_file(&cfg.out_path("stats.txt"), |w| w.write_all(report.as_bytes()))?;
    print!("{report}");
    Ok(())
}

pub fn gen_reads(cfg: &RunConfig) -> Result<(), CliError> {
    let refs = load_references(cfg)?;
    let genomes: Vec<(u32, Sequence)> = refs
        .into_iter()
        .map(|g| {
            let seq = match g.genome.as_sequence() {
                Some(s) => s.clone(),
                None => {
                    eprintln!("warning: {} contains non-ACGT symbols; sampling its longest clean segment", g.name);
                    g.genome.segments.iter().max_by_key(|s| s.sequence.len()).expect("non-empty record").sequence.clone()
                }
            };
            (g.species_id, seq)
        })
        .collect();
    let sample = SampleConfig { reads_per_genome: cfg.reads_per_genome, read_len: cfg.read_len, profile: cfg.profile, seed: cfg.seed };
    let reads = generate_sample(&genomes, &sample)?;
    create_out_dir(cfg)?;
    let path = cfg.out_path("reads.fa");
    write_file(&path, |w| write_reads_fasta(w, &reads))?;
    println!("wrote {} reads to {}", reads.len(), path.display());
    Ok(())
}

struct Inputs {
    layout: DatabaseLayout,
    table: Option<TracingTable>,
    reads: Vec<(String, Sequence)>,
    sa: SaModel,
}

fn load_inputs(cfg: &RunConfig, need_table: bool) -> Result<Inputs, CliError> {
    let layout = DatabaseLayout::load(require(&cfg.layout, "layout")?)?;
    let table = match (&cfg.table, need_table) {
        (_, false) => None,
        (Some(p), true) => Some(TracingTable::load(p)?),
        (None, true) => Some(layout.tracing_table(cfg.eth)?),
    };
    let reads = read_clean_fasta(require(&cfg.reads, "reads")?)?;
    let threshold = cfg.sa_threshold();
    let sa = match cfg.sa_mode {
        SaMode::Ideal => SaModel::ideal(threshold),
        SaMode::Stochastic => {
            let t = match &cfg.confidence_table {
                Some(p) => ConfidenceTable::load(p)?,
                None => ConfidenceTable::builtin(),
            };
            SaModel::stochastic(threshold, t)
        }
    };
    Ok(Inputs { layout, table, reads, sa })
}

fn engine_config(cfg: &RunConfig, sa: &SaModel) -> EngineConfig {
    EngineConfig { eth: cfg.eth, sa: sa.clone(), num_sas: cfg.num_sas, backend: cfg.backend, use_filter: cfg.filter }
}

#[derive(Serialize)]
struct RunSettings {
    eth: u32,
    threshold: u32,
    sa_mode: SaMode,
    backend: String,
    num_sas: usize,
    filter: bool,
    seed: u64,
    k: usize,
}

fn settings(cfg: &RunConfig, k: usize) -> RunSettings {
    RunSettings {
        eth: cfg.eth,
        threshold: cfg.sa_threshold(),
        sa_mode: cfg.sa_mode,
        backend: cfg.backend.to_string(),
        num_sas: cfg.num_sas,
        filter: cfg.filter,
        seed: cfg.seed,
        k,
    }
}

#[derive(Serialize)]
struct ClassifySummary {
    settings: RunSettings,
    reads: usize,
    labeled_reads: usize,
    unclassified: usize,
    metrics: QualityMetrics,
    counters: SearchCounters,
    pass_fraction: f64,
}

fn run_perf(cfg: &RunConfig, k: usize, rows: usize, parallelism: f64, reduction: Option<f64>) -> Result<PerfReport, CliError> {
    let stats = reference_search_stats(k, rows, cfg.num_sas)?;
    let inputs = PerfInputs {
        num_sas: cfg.num_sas,
        magic_cycles: cfg.magic_cycles.unwrap_or(stats.magic_cycles),
        writes_per_row: stats.writes / stats.active_rows as u64,
        batch_parallelism: parallelism,
        filter_reduction: reduction,
    };
    Ok(perf_report(&inputs, &cfg.perf)?)
}

pub fn classify(cfg: &RunConfig) -> Result<(), CliError> {
    let inp = load_inputs(cfg, cfg.filter)?;
    let engine = Engine::new(&inp.layout, inp.table.as_ref(), engine_config(cfg, &inp.sa))?;
    let results = engine.classify_all(&inp.reads, cfg.seed)?;

    for r in &results {
        let best = r.per_species_hits.values().copied().max().unwrap_or(0);
        let ok = match r.assigned_species {
            None => best == 0,
            Some(s) => r.per_species_hits.get(&s) == Some(&best) && best > 0,
        };
        if !ok {
            return Err(CliError::Internal(format!("read {} assigned against its hit counts", r.read_id)));
        }
    }

    let known: BTreeSet<u32> = inp.layout.species().keys().copied().collect();
    let truths: Vec<Option<u32>> = inp.reads.iter().map(|(id, _)| truth_from_name(id)).collect();
    let pairs: Vec<_> = results.iter().zip(&truths).map(|(r, t)| (r.assigned_species, *t)).collect();
    let mut counters = SearchCounters::default();
    results.iter().for_each(|r| counters.add(&r.counters));

    create_out_dir(cfg)?;
    let species: Vec<u32> = known.iter().copied().collect();
    write_file(&cfg.out_path("classifications.tsv"), |w| write_classifications_tsv(w, &species, &results))?;
    let summary = ClassifySummary {
        settings: settings(cfg, inp.layout.k()),
        reads: results.len(),
        labeled_reads: truths.iter().filter(|t| t.is_some()).count(),
        unclassified: results.iter().filter(|r| r.assigned_species.is_none()).count(),
        metrics: compute_metrics(&pairs, &known),
        counters,
        pass_fraction: counters.pass_fraction(),
    };
    write_json(&cfg.out_path("metrics.json"), &summary)?;

    let (parallelism, reduction) = if cfg.filter && counters.row_comparisons > 0 {
        (batch_parallelism(&inp.reads, inp.layout.k(), cfg.eth, cfg.examine_limit), Some(1.0 / counters.pass_fraction()))
    } else {
        (1.0, None)
    };
    let perf = run_perf(cfg, inp.layout.k(), inp.layout.rows(), parallelism.max(1.0), reduction)?;
    write_json(&cfg.out_path("perf.json"), &perf)?;

    if let Some(eths) = &cfg.eth_sweep {
        let labeled: Vec<(Sequence, Option<u32>)> = inp.reads.iter().zip(&truths).map(|((_, s), t)| (s.clone(), *t)).collect();
        let rows = eth_sweep(&inp.layout, &labeled, eths)?;
        write_file(&cfg.out_path("sweep.csv"), |w| write_sweep_csv(w, &rows))?;
    }

    let m = &summary.metrics;
    println!(
        "reads={} unclassified={} sensitivity={:.4} precision={:.4} f1={:.4} pass_fraction={:.6}",
        summary.reads, summary.unclassified, m.sensitivity, m.precision, m.f1, summary.pass_fraction
    );
    Ok(())
}

#[derive(Serialize)]
struct DetectSummary {
    settings: RunSettings,
    target_species: u32,
    reads: usize,
    detected: usize,
    metrics: QualityMetrics,
    counters: SearchCounters,
}

pub fn detect(cfg: &RunConfig) -> Result<(), CliError> {
    let target = cfg.target_species.ok_or_else(|| CliError::Usage("--target-species is required".into()))?;
    let inp = load_inputs(cfg, cfg.filter)?;
    let engine = Engine::new(&inp.layout, inp.table.as_ref(), engine_config(cfg, &inp.sa))?;
    let results = engine.detect_all(&inp.reads, target, cfg.seed)?;
    let pairs: Vec<(bool, bool)> =
        results.iter().zip(&inp.reads).map(|(r, (id, _))| (r.detected, truth_from_name(id) == Some(target))).collect();
    let mut counters = SearchCounters::default();
    results.iter().for_each(|r| counters.add(&r.counters));

    create_out_dir(cfg)?;
    write_file(&cfg.out_path("detections.tsv"), |w| write_detections_tsv(w, target, &results))?;
    let summary = DetectSummary {
        settings: settings(cfg, inp.layout.k()),
        target_species: target,
        reads: results.len(),
        detected: results.iter().filter(|r| r.detected).count(),
        metrics: detection_metrics(&pairs),
        counters,
    };
    write_json(&cfg.out_path("metrics.json"), &summary)?;
    if let Some(eths) = &cfg.eth_sweep {
        let labeled: Vec<(Sequence, bool)> = inp.reads.iter().zip(&pairs).map(|((_, s), p)| (s.clone(), p.1)).collect();
        let rows = detection_sweep(&inp.layout, &labeled, &BTreeSet::from([target]), eths)?;
        write_file(&cfg.out_path("sweep.csv"), |w| write_sweep_csv(w, &rows))?;
    }
    println!(
        "reads={} detected={} sensitivity={:.4} precision={:.4} f1={:.4}",
        summary.reads, summary.detected, summary.metrics.sensitivity, summary.metrics.precision, summary.metrics.f1
    );
    Ok(())
}

#[derive(Serialize)]
struct BenchOutput {
    magic_cycles: u64,
    writes_per_row: u64,
    batch_parallelism: f64,
    filter_reduction: f64,
    /// Whether parallelism and reduction were measured on reads.
    measured: bool,
    reports: Vec<PerfReport>,
}

pub fn bench(cfg: &RunConfig) -> Result<(), CliError> {
    let (k, rows, measured) = match (&cfg.layout, &cfg.reads) {
        (Some(_), Some(_)) => {
            let inp = load_inputs(cfg, true)?;
            let table = inp.table.as_ref().expect("table requested");
            let seqs: Vec<Sequence> = inp.reads.iter().map(|(_, s)| s.clone()).collect();
            let counters = filter_counters(&inp.layout, table, &seqs);
            if counters.row_comparisons == 0 {
                return Err(CliError::Data("no read k-mer passed the filter; reduction undefined".into()));
            }
            let p = batch_parallelism(&inp.reads, inp.layout.k(), cfg.eth, cfg.examine_limit);
            (inp.layout.k(), inp.layout.rows(), Some((p, 1.0 / counters.pass_fraction())))
        }
        _ => (cfg.k, crossmer::magic::DEFAULT_ROWS, None),
    };
    let stats = reference_search_stats(k, rows, 32)?;
    let magic_cycles = cfg.magic_cycles.unwrap_or(stats.magic_cycles);
    let writes_per_row = stats.writes / stats.active_rows as u64;
    let (measured_p, measured_r) = measured.unwrap_or((REFERENCE_PARALLELISM, DEFAULT_FILTER_REDUCTION));
    let parallelism = cfg.batch_parallelism.unwrap_or(measured_p);
    let reduction = cfg.filter_reduction.unwrap_or(measured_r);
    let reports = perf_sweep(magic_cycles, writes_per_row, parallelism, reduction, &cfg.perf)?;
    for r in &reports {
        println!("{r}");
    }
    create_out_dir(cfg)?;
    write_json(
        &cfg.out_path("perf_sweep.json"),
        &BenchOutput { magic_cycles, writes_per_row, batch_parallelism: parallelism, filter_reduction: reduction, measured: measured.is_some(), reports },
    )
}
