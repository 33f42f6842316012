//! Edit-tolerant k-mer classification on a simulated memristive
//! processing-in-memory substrate.
//!
//! The crate is layered bottom-up:
//!
//! - [`seq`]: bases, sequences, base-count histograms, FASTA ingestion.
//! - [`oracle`]: slow reference implementations (Levenshtein, neighbor scan).
//! - [`matcher`]: bit-parallel neighbor matching and the sense-amplifier model.
//! - [`magic`]: gate-level crossbar simulation of the search program.
//! - [`filter`]: base-count filter, tracing table and query batching.
//! - [`db`]: k-mer extraction and crossbar layout of the reference database.
//! - [`pipeline`]: per-read classification/detection and quality metrics.
//! - [`perf`]: analytical latency, throughput, energy and lifetime model.
//! - [`readgen`]: synthetic genomes and reads with sequencing-error injection.

pub mod db;
pub mod error;
pub mod filter;
pub mod magic;
pub mod matcher;
pub mod oracle;
pub mod perf;
pub mod pipeline;
pub mod readgen;
pub mod seq;
