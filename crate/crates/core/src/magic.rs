//! Gate-level model of a memristive crossbar running the in-memory search.
//!
//! Cells are stored column-major as row bitsets, so one MAGIC gate applied
//! to a column triple updates every row at once, as the array does.
//!
//! Column map for k = 64 in a 128x512 array:
//!
//! | columns   | content                                   |
//! |-----------|-------------------------------------------|
//! | 0..128    | stored k-mer, base i at (2i = high, 2i+1 = low) |
//! | 128..256  | query, same encoding                      |
//! | 256..320  | Edits Vector, bit i at column 256+i       |
//! | 320..485  | 5 scratch slots of 33 columns             |
//! | 485..512  | unused                                    |
//!
//! A scratch slot holds six XOR blocks of five cells each
//! (`a'`, `b'`, `(a'+b')'`, `(a+b)'`, result) followed by `MC`, `ML`, `MR`.
//!
//! Canonical schedule: bases are processed in groups of `slots` (5). Each
//! group starts with one initialization cycle that sets every scratch cell
//! the group will drive (and, for the first group, the Edits Vector) to 1.
//! Then, per base, each present comparison (co-located, left, right) runs
//! two 5-NOR XORs and one NOR into `M`, and a final 2- or 3-input NOR writes
//! the Edits Vector bit. Interior bases cost 34 evaluations, edge bases 23,
//! so k = 64 takes 62*34 + 2*23 = 2154 evaluations plus 13 initialization
//! cycles, 2167 MAGIC cycles in total. The query write and the sensing step
//! are accounted separately.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{LengthError, SimError};
use crate::matcher::{EditsVector, PackedKmer, SaModel};
use crate::seq::{Base, MAX_K};

pub const DEFAULT_ROWS: usize = 128;
pub const DEFAULT_COLS: usize = 512;
/// Cycles to write the query into every row (one SET and one RESET phase).
pub const QUERY_WRITE_CYCLES: u64 = 2;
/// Sense-amplifier counts supported by the row multiplexing.
pub const SA_COUNTS: [usize; 8] = [1, 2, 4, 8, 16, 32, 64, 128];

const XOR_CELLS: usize = 5;
const SLOT_WIDTH: usize = 6 * XOR_CELLS + 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighbor {
    Center = 0,
    Left = 1,
    Right = 2,
}

impl Neighbor {
    pub const ALL: [Neighbor; 3] = [Neighbor::Center, Neighbor::Left, Neighbor::Right];

    fn offset(self) -> isize {
        match self {
            Neighbor::Center => 0,
            Neighbor::Left => -1,
            Neighbor::Right => 1,
        }
    }
}

/// Assignment of data to crossbar columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnLayout {
    pub k: usize,
    pub cols: usize,
    pub kmer_start: usize,
    pub query_start: usize,
    pub edits_start: usize,
    pub scratch_start: usize,
    pub slots: usize,
}

impl ColumnLayout {
    pub fn new(k: usize, cols: usize) -> Result<Self, SimError> {
        if k == 0 || k > MAX_K {
            return Err(SimError::Layout(format!("k = {k} outside 1..={MAX_K}")));
        }
        let scratch_start = 5 * k;
        if cols < scratch_start + SLOT_WIDTH {
            return Err(SimError::Layout(format!(
                "{cols} columns cannot hold k = {k} plus one {SLOT_WIDTH}-column scratch slot"
            )));
        }
        Ok(ColumnLayout {
            k,
            cols,
            kmer_start: 0,
            query_start: 2 * k,
            edits_start: 4 * k,
            scratch_start,
            slots: (cols - scratch_start) / SLOT_WIDTH,
        })
    }

    /// Column of the high (`hi = true`) or low bit of stored base `i`.
    pub fn kmer_col(&self, i: usize, hi: bool) -> usize {
        self.kmer_start + 2 * i + usize::from(!hi)
    }

    pub fn query_col(&self, i: usize, hi: bool) -> usize {
        self.query_start + 2 * i + usize::from(!hi)
    }

    pub fn edits_col(&self, i: usize) -> usize {
        self.edits_start + i
    }

    /// The five cells of XOR block `(neighbor, bit)` in a slot; the last one
    /// is the XOR result.
    pub fn xor_cols(&self, slot: usize, n: Neighbor, hi: bool) -> [usize; XOR_CELLS] {
        let base = self.scratch_start + slot * SLOT_WIDTH + (2 * n as usize + usize::from(!hi)) * XOR_CELLS;
        std::array::from_fn(|j| base + j)
    }

    /// Match column `M_C`, `M_L` or `M_R` of a slot.
    pub fn match_col(&self, slot: usize, n: Neighbor) -> usize {
        self.scratch_start + slot * SLOT_WIDTH + 6 * XOR_CELLS + n as usize
    }

    pub fn scratch_cols(&self) -> std::ops::Range<usize> {
        self.scratch_start..self.scratch_start + self.slots * SLOT_WIDTH
    }

    /// Neighbors compared for base `i`; edge bases skip the absent one.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = Neighbor> + '_ {
        Neighbor::ALL.into_iter().filter(move |n| {
            let j = i as isize + n.offset();
            (0..self.k as isize).contains(&j)
        })
    }

    /// MAGIC cycles of the canonical schedule.
    pub fn program_cycles(&self) -> u64 {
        let evals: usize = (0..self.k).map(|i| self.neighbors(i).count() * (2 * XOR_CELLS + 1) + 1).sum();
        (evals + self.k.div_ceil(self.slots)) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceOp {
    Write(Vec<usize>),
    Init(Vec<usize>),
    Nor { out: usize, inputs: Vec<usize> },
    Sense { rows: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub cycle: u64,
    pub op: TraceOp,
}

fn join(cols: &[usize]) -> String {
    cols.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

/// Plain-text trace, one line per cycle: `cycle op out_col in_cols`.
pub fn format_trace(entries: &[TraceEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        let _ = match &e.op {
            TraceOp::Write(cols) => writeln!(out, "{} WRITE - {}", e.cycle, join(cols)),
            TraceOp::Init(cols) => writeln!(out, "{} INIT - {}", e.cycle, join(cols)),
            TraceOp::Nor { out: o, inputs } => writeln!(out, "{} NOR {} {}", e.cycle, o, join(inputs)),
            TraceOp::Sense { rows } => writeln!(out, "{} SENSE - {}", e.cycle, join(rows)),
        };
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SearchStats {
    /// Query write + MAGIC program + sensing cycles.
    pub cycles: u64,
    pub magic_cycles: u64,
    pub write_cycles: u64,
    pub sa_reads: u64,
    /// Cell writes driven during the search (all rows).
    pub writes: u64,
    /// Rows that took part in the computation.
    pub active_rows: usize,
}

impl SearchStats {
    pub fn writes_per_row(&self) -> f64 {
        if self.active_rows == 0 {
            0.0
        } else {
            self.writes as f64 / self.active_rows as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    /// One entry per populated row.
    pub hits: Vec<bool>,
    pub hit_count: usize,
    pub stats: SearchStats,
}

/// Cell matrix, write counters and cycle counter of one crossbar.
#[derive(Debug, Clone)]
pub struct CrossbarState {
    rows: usize,
    words: usize,
    layout: ColumnLayout,
    cells: Vec<u64>,
    active: Vec<u64>,
    populated: usize,
    write_counts: Vec<u64>,
    // writes applied to every active row / every row since the last flush
    pending_active: Vec<u64>,
    pending_all: Vec<u64>,
    total_writes: u64,
    cycle_counter: u64,
    trace: Option<Vec<TraceEntry>>,
}

impl CrossbarState {
    pub fn new(rows: usize, cols: usize, k: usize) -> Result<Self, SimError> {
        if rows == 0 {
            return Err(SimError::Layout("crossbar needs at least one row".into()));
        }
        let layout = ColumnLayout::new(k, cols)?;
        let words = rows.div_ceil(64);
        Ok(CrossbarState {
            rows,
            words,
            cells: vec![0; cols * words],
            active: vec![0; words],
            populated: 0,
            write_counts: vec![0; rows * cols],
            pending_active: vec![0; cols],
            pending_all: vec![0; cols],
            total_writes: 0,
            cycle_counter: 0,
            trace: None,
            layout,
        })
    }

    /// 128x512 crossbar for 64-mers.
    pub fn standard() -> Self {
        Self::new(DEFAULT_ROWS, DEFAULT_COLS, 64).expect("default geometry is valid")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.layout.cols
    }

    pub fn layout(&self) -> &ColumnLayout {
        &self.layout
    }

    pub fn cycle_counter(&self) -> u64 {
        self.cycle_counter
    }

    pub fn total_writes(&self) -> u64 {
        self.total_writes
    }

    pub fn populated_rows(&self) -> usize {
        self.populated
    }

    pub fn utilization(&self) -> f64 {
        self.populated as f64 / self.rows as f64
    }

    pub fn row_used(&self, row: usize) -> bool {
        row < self.rows && (self.active[row / 64] >> (row % 64)) & 1 == 1
    }

    pub fn enable_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn take_trace(&mut self) -> Vec<TraceEntry> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn cell(&self, row: usize, col: usize) -> bool {
        (self.cells[col * self.words + row / 64] >> (row % 64)) & 1 == 1
    }

    /// Number of times cell `(row, col)` has been driven.
    pub fn write_count(&self, row: usize, col: usize) -> u64 {
        let mut n = self.write_counts[row * self.layout.cols + col] + self.pending_all[col];
        if self.row_used(row) {
            n += self.pending_active[col];
        }
        n
    }

    fn column_mut(&mut self, col: usize) -> &mut [u64] {
        &mut self.cells[col * self.words..(col + 1) * self.words]
    }

    fn check_col(&self, col: usize) -> Result<(), SimError> {
        if col >= self.layout.cols {
            return Err(SimError::Layout(format!("column {col} out of range")));
        }
        Ok(())
    }

    fn flush_writes(&mut self) {
        let cols = self.layout.cols;
        for row in 0..self.rows {
            let used = self.row_used(row);
            for col in 0..cols {
                let mut add = self.pending_all[col];
                if used {
                    add += self.pending_active[col];
                }
                self.write_counts[row * cols + col] += add;
            }
        }
        self.pending_active.iter_mut().for_each(|x| *x = 0);
        self.pending_all.iter_mut().for_each(|x| *x = 0);
    }

    fn record(&mut self, op: TraceOp) {
        if let Some(t) = self.trace.as_mut() {
            t.push(TraceEntry { cycle: self.cycle_counter, op });
        }
    }

    /// Programs up to `rows` k-mers into rows `0..n`; the other rows are
    /// flagged unused and take no part in later gates.
    pub fn load_kmers(&mut self, kmers: &[PackedKmer]) -> Result<(), SimError> {
        if kmers.len() > self.rows {
            return Err(SimError::Capacity { capacity: self.rows, requested: kmers.len() });
        }
        let k = self.layout.k;
        if let Some(bad) = kmers.iter().find(|m| m.len() != k) {
            return Err(LengthError { expected: k, actual: bad.len() }.into());
        }
        self.flush_writes();
        for w in self.active.iter_mut() {
            *w = 0;
        }
        for (row, kmer) in kmers.iter().enumerate() {
            self.active[row / 64] |= 1 << (row % 64);
            for i in 0..k {
                let code = kmer.base(i).code();
                for (hi, bit) in [(true, code >> 1), (false, code & 1)] {
                    let col = self.layout.kmer_col(i, hi);
                    let word = &mut self.cells[col * self.words + row / 64];
                    if bit == 1 {
                        *word |= 1 << (row % 64);
                    } else {
                        *word &= !(1 << (row % 64));
                    }
                    self.write_counts[row * self.layout.cols + col] += 1;
                    self.total_writes += 1;
                }
            }
        }
        self.populated = kmers.len();
        Ok(())
    }

    pub fn load_sequences(&mut self, kmers: &[&[Base]]) -> Result<(), SimError> {
        let packed = kmers
            .iter()
            .map(|m| PackedKmer::pack(m).map_err(|_| SimError::Length(LengthError { expected: self.layout.k, actual: m.len() })))
            .collect::<Result<Vec<_>, _>>()?;
        self.load_kmers(&packed)
    }

    /// Writes the query into the query columns of every row.
    pub fn write_query(&mut self, query: &PackedKmer) -> Result<(), SimError> {
        let k = self.layout.k;
        if query.len() != k {
            return Err(LengthError { expected: k, actual: query.len() }.into());
        }
        let full = self.full_mask();
        let mut cols = Vec::with_capacity(2 * k);
        for i in 0..k {
            let code = query.base(i).code();
            for (hi, bit) in [(true, code >> 1), (false, code & 1)] {
                let col = self.layout.query_col(i, hi);
                let fill = if bit == 1 { full.clone() } else { vec![0; self.words] };
                self.column_mut(col).copy_from_slice(&fill);
                self.pending_all[col] += 1;
                self.total_writes += self.rows as u64;
                cols.push(col);
            }
        }
        self.record(TraceOp::Write(cols));
        self.cycle_counter += QUERY_WRITE_CYCLES;
        Ok(())
    }

    fn full_mask(&self) -> Vec<u64> {
        (0..self.words)
            .map(|w| {
                let rows_here = (self.rows - w * 64).min(64);
                if rows_here == 64 {
                    u64::MAX
                } else {
                    (1u64 << rows_here) - 1
                }
            })
            .collect()
    }

    fn active_count(&self) -> u64 {
        self.active.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// One initialization cycle: drives every listed column to 1 in all
    /// active rows.
    pub fn init_columns(&mut self, cols: &[usize]) -> Result<(), SimError> {
        for &c in cols {
            self.check_col(c)?;
        }
        let n = self.active_count();
        for &c in cols {
            for w in 0..self.words {
                let a = self.active[w];
                self.cells[c * self.words + w] |= a;
            }
            self.pending_active[c] += 1;
            self.total_writes += n;
        }
        self.record(TraceOp::Init(cols.to_vec()));
        self.cycle_counter += 1;
        Ok(())
    }

    /// One evaluation cycle of a MAGIC NOR. The output can only switch from
    /// 1 to 0, so it must have been initialized.
    fn eval_nor(&mut self, inputs: &[usize], out: usize) {
        let n = self.active_count();
        for w in 0..self.words {
            let mut or = 0u64;
            for &c in inputs {
                or |= self.cells[c * self.words + w];
            }
            let a = self.active[w];
            let cell = &mut self.cells[out * self.words + w];
            *cell &= !(or & a);
        }
        self.pending_active[out] += 1;
        self.total_writes += n;
        self.record(TraceOp::Nor { out, inputs: inputs.to_vec() });
        self.cycle_counter += 1;
    }

    /// Stand-alone MAGIC NOR with 1 to 3 inputs: initialization plus
    /// evaluation, two cycles.
    pub fn exec_nor(&mut self, in_cols: &[usize], out_col: usize) -> Result<(), SimError> {
        if in_cols.is_empty() || in_cols.len() > 3 {
            return Err(SimError::Layout(format!("NOR takes 1 to 3 inputs, got {}", in_cols.len())));
        }
        if in_cols.contains(&out_col) {
            return Err(SimError::Layout(format!("output column {out_col} is also an input")));
        }
        for &c in in_cols {
            self.check_col(c)?;
        }
        self.init_columns(&[out_col])?;
        self.eval_nor(in_cols, out_col);
        Ok(())
    }

    /// `a XOR b = ((a' + b')' + (a + b)')'`: five NOR evaluations, cells
    /// assumed initialized.
    fn xor_evals(&mut self, a: usize, b: usize, cells: [usize; XOR_CELLS]) {
        let [na, nb, and, nor, out] = cells;
        self.eval_nor(&[a], na);
        self.eval_nor(&[b], nb);
        self.eval_nor(&[na, nb], and);
        self.eval_nor(&[a, b], nor);
        self.eval_nor(&[and, nor], out);
    }

    /// Stand-alone XOR: one batched initialization cycle for the four
    /// scratch cells and the output, then five NOR evaluations.
    pub fn exec_xor(&mut self, a_col: usize, b_col: usize, out_col: usize, scratch_cols: &[usize]) -> Result<(), SimError> {
        if scratch_cols.len() < 4 {
            return Err(SimError::Layout(format!("XOR needs 4 scratch columns, got {}", scratch_cols.len())));
        }
        let mut all = vec![a_col, b_col, out_col];
        all.extend_from_slice(&scratch_cols[..4]);
        for &c in &all {
            self.check_col(c)?;
        }
        let mut dedup = all.clone();
        dedup.sort_unstable();
        dedup.dedup();
        if dedup.len() != all.len() {
            return Err(SimError::Layout("XOR columns must be distinct".into()));
        }
        let cells = [scratch_cols[0], scratch_cols[1], scratch_cols[2], scratch_cols[3], out_col];
        self.init_columns(&cells)?;
        self.xor_evals(a_col, b_col, cells);
        Ok(())
    }

    /// Edits Vector currently held by `row`.
    pub fn row_edits(&self, row: usize) -> EditsVector {
        let mut bits = 0u64;
        for i in 0..self.layout.k {
            if self.cell(row, self.layout.edits_col(i)) {
                bits |= 1 << i;
            }
        }
        EditsVector::from_bits(bits, self.layout.k)
    }

    /// Step 5 for one row: the sense amplifier compares the number of set
    /// Edits Vector cells against the threshold.
    pub fn sa_count_and_compare<R: Rng + ?Sized>(&self, row: usize, sa: &SaModel, rng: &mut R) -> bool {
        sa.decide(self.row_edits(row).edit_count(), rng)
    }

    /// Writes `query`, runs the canonical MAGIC program and senses every
    /// populated row with `num_sas` sense amplifiers.
    pub fn run_search_program<R: Rng + ?Sized>(
        &mut self,
        query: &PackedKmer,
        sa: &SaModel,
        num_sas: usize,
        rng: &mut R,
    ) -> Result<SearchOutcome, SimError> {
        if !SA_COUNTS.contains(&num_sas) || num_sas > self.rows {
            return Err(SimError::SaCount(num_sas));
        }
        if self.populated == 0 {
            return Err(SimError::EmptyCrossbar);
        }
        let start_cycles = self.cycle_counter;
        let start_writes = self.total_writes;

        self.write_query(query)?;
        let magic_start = self.cycle_counter;
        self.run_compute();
        let magic_cycles = self.cycle_counter - magic_start;

        let sa_reads = self.rows.div_ceil(num_sas) as u64;
        let mut hits = Vec::with_capacity(self.populated);
        for read in 0..sa_reads as usize {
            let rows: Vec<usize> = (read * num_sas..((read + 1) * num_sas).min(self.rows)).collect();
            for &row in &rows {
                if self.row_used(row) {
                    hits.push(self.sa_count_and_compare(row, sa, rng));
                }
            }
            self.record(TraceOp::Sense { rows });
            self.cycle_counter += 1;
        }
        let hit_count = hits.iter().filter(|&&h| h).count();
        let stats = SearchStats {
            cycles: self.cycle_counter - start_cycles,
            magic_cycles,
            write_cycles: QUERY_WRITE_CYCLES,
            sa_reads,
            writes: self.total_writes - start_writes,
            active_rows: self.populated,
        };
        Ok(SearchOutcome { hits, hit_count, stats })
    }

    /// The MAGIC part of the search (steps 1 to 4) on the loaded query.
    fn run_compute(&mut self) {
        let layout = self.layout.clone();
        let k = layout.k;
        let bases: Vec<usize> = (0..k).collect();
        for (group_idx, group) in bases.chunks(layout.slots).enumerate() {
            let mut init = Vec::new();
            if group_idx == 0 {
                init.extend((0..k).map(|i| layout.edits_col(i)));
            }
            for (slot, &i) in group.iter().enumerate() {
                for n in layout.neighbors(i) {
                    for hi in [true, false] {
                        init.extend(layout.xor_cols(slot, n, hi));
                    }
                    init.push(layout.match_col(slot, n));
                }
            }
            self.init_columns(&init).expect("layout columns are in range");

            for (slot, &i) in group.iter().enumerate() {
                let mut matches = Vec::with_capacity(3);
                for n in layout.neighbors(i) {
                    let j = (i as isize + n.offset()) as usize;
                    let mut xors = [0usize; 2];
                    for (x, hi) in [true, false].into_iter().enumerate() {
                        let cells = layout.xor_cols(slot, n, hi);
                        self.xor_evals(layout.query_col(i, hi), layout.kmer_col(j, hi), cells);
                        xors[x] = cells[XOR_CELLS - 1];
                    }
                    // both bit XORs zero <=> bases equal
                    let m = layout.match_col(slot, n);
                    self.eval_nor(&xors, m);
                    matches.push(m);
                }
                self.eval_nor(&matches, layout.edits_col(i));
            }
        }
    }
}
