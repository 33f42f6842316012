mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "crossmer", version, about = "Edit-tolerant k-mer classification on a simulated memristive crossbar")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the crossbar layout and tracing table from reference genomes.
    BuildDb(Opts),
    /// Generate a labeled synthetic read set.
    GenReads(Opts),
    /// Classify reads; writes classifications.tsv, metrics.json, perf.json.
    Classify(Opts),
    /// Detect reads of one target species; writes detections.tsv, metrics.json.
    Detect(Opts),
    /// Performance sweep over sense-amplifier counts, with and without the filter.
    Bench(Opts),
}

/// Every option can also come from `--config` as `key = value`; flags win.
#[derive(Args, Debug, Default)]
struct Opts {
    /// key = value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<String>,
    /// Edit-distance threshold used by the filter.
    #[arg(long)]
    eth: Option<String>,
    /// Sense-amplifier threshold (defaults to --eth).
    #[arg(long)]
    threshold: Option<String>,
    #[arg(long)]
    num_sas: Option<String>,
    /// ideal | stochastic
    #[arg(long)]
    sa_mode: Option<String>,
    /// functional | gate-level
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    threads: Option<String>,
    #[arg(long)]
    examine_limit: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Reference FASTA files (repeatable).
    #[arg(long)]
    genomes: Vec<String>,
    #[arg(long)]
    reads: Option<String>,
    #[arg(long)]
    layout: Option<String>,
    #[arg(long)]
    table: Option<String>,
    /// "threshold edit_count probability" lines.
    #[arg(long)]
    confidence_table: Option<String>,
    /// none | low | high | sub,ins,del
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    reads_per_genome: Option<String>,
    #[arg(long)]
    read_len: Option<String>,
    #[arg(long)]
    stride: Option<String>,
    #[arg(long)]
    dedup: bool,
    /// Search every crossbar instead of the traced ones.
    #[arg(long)]
    no_filter: bool,
    #[arg(long)]
    target_species: Option<String>,
    /// Thresholds for the quality sweep, e.g. 0..9 or 0,2,4.
    #[arg(long)]
    eth_sweep: Option<String>,
    #[arg(long)]
    magic_cycles: Option<String>,
    #[arg(long)]
    batch_parallelism: Option<String>,
    #[arg(long)]
    filter_reduction: Option<String>,
    /// Performance constant override, key=value (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Opts {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let pairs = [
            ("k", &self.k),
            ("eth", &self.eth),
            ("threshold", &self.threshold),
            ("num_sas", &self.num_sas),
            ("sa_mode", &self.sa_mode),
            ("backend", &self.backend),
            ("seed", &self.seed),
            ("threads", &self.threads),
            ("examine_limit", &self.examine_limit),
            ("out", &self.out),
            ("reads", &self.reads),
            ("layout", &self.layout),
            ("table", &self.table),
            ("confidence_table", &self.confidence_table),
            ("profile", &self.profile),
            ("reads_per_genome", &self.reads_per_genome),
            ("read_len", &self.read_len),
            ("stride", &self.stride),
            ("target_species", &self.target_species),
            ("eth_sweep", &self.eth_sweep),
            ("magic_cycles", &self.magic_cycles),
            ("batch_parallelism", &self.batch_parallelism),
            ("filter_reduction", &self.filter_reduction),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if !self.genomes.is_empty() {
            cfg.set("genomes", &self.genomes.join(","))?;
        }
        if self.dedup {
            cfg.dedup = true;
        }
        if self.no_filter {
            cfg.filter = false;
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (opts, cmd): (&Opts, fn(&RunConfig) -> Result<(), CliError>) = match &cli.command {
        Command::BuildDb(o) => (o, commands::build_db),
        Command::GenReads(o) => (o, commands::gen_reads),
        Command::Classify(o) => (o, commands::classify),
        Command::Detect(o) => (o, commands::detect),
        Command::Bench(o) => (o, commands::bench),
    };
    let cfg = opts.resolve()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    pool.install(|| cmd(&cfg))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("crossmer: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
