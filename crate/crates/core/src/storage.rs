//! Synthetic paged storage and the page-access ledger.
//!
//! A [`Dataset`] is a heap table of `(rowid, a, b)` rows laid out in rowid
//! order plus three B-tree leaf levels: a single-column index on `a`, one on
//! `b`, and a composite `(a, b)` index. Inner B-tree levels are not modeled;
//! descending to a leaf is free and only leaf and table pages are charged.
//!
//! Every page touched by an operator goes through an [`AccessLedger`], which
//! classifies the access as sequential (the page right after the previous
//! page of the same structure) or random. The ledger is the only source of
//! cost in this crate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Odd multiplier of the affine rowid bijection.
const ROW_MULTIPLIER: u64 = 0x9E37_79B9_7F4A_7C15;
/// Odd multiplier used inside the bit mixer.
const MIX_MULTIPLIER: u64 = 0xBF58_476D_1CE4_E5B9;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DatasetError {
    #[error("{0} must be at least 1")]
    ZeroSized(&'static str),
    #[error("{name} = {value} does not divide row_count = {rows}")]
    NotDivisible {
        name: &'static str,
        value: usize,
        rows: usize,
    },
    #[error("row_count = {0} must be a power of two in permutation mode")]
    NotPowerOfTwo(usize),
    #[error("row_count = {0} exceeds the supported maximum of 2^31")]
    TooLarge(usize),
    #[error("explicit column {column} has {got} values, expected {expected}")]
    ExplicitLength {
        column: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("explicit column {column} holds value {value} at row {row}, outside [0, {domain})")]
    ExplicitRange {
        column: &'static str,
        row: usize,
        value: u32,
        domain: usize,
    },
}

/// How column values are assigned to rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ValueMode {
    /// Values derived from a seeded bijection over rowids.
    #[default]
    Permutation,
    /// Caller-supplied fixture columns, one value per row.
    Explicit { col_a: Vec<u32>, col_b: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub row_count: usize,
    pub rows_per_table_page: usize,
    pub entries_per_index_page: usize,
    pub distinct_a: usize,
    pub distinct_b: usize,
    pub seed: u64,
    pub values: ValueMode,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            row_count: 1 << 20,
            rows_per_table_page: 64,
            entries_per_index_page: 256,
            distinct_a: 1 << 16,
            distinct_b: 1 << 16,
            seed: 0,
            values: ValueMode::Permutation,
        }
    }
}

impl DatasetConfig {
    /// Default geometry with `2^log2_rows` rows; distinct counts are capped
    /// at the row count.
    pub fn with_rows(log2_rows: u32) -> Self {
        let defaults = Self::default();
        let rows = 1usize << log2_rows;
        Self {
            row_count: rows,
            distinct_a: defaults.distinct_a.min(rows),
            distinct_b: defaults.distinct_b.min(rows),
            ..defaults
        }
    }

    /// The 16-row fixture used throughout the tests: `a = i mod 4`,
    /// `b = floor(i / 4) mod 4`, four rows per table page, eight entries per
    /// leaf page.
    pub fn fixture_t16() -> Self {
        let col_a = (0..16u32).map(|i| i % 4).collect();
        let col_b = (0..16u32).map(|i| (i / 4) % 4).collect();
        Self {
            row_count: 16,
            rows_per_table_page: 4,
            entries_per_index_page: 8,
            distinct_a: 4,
            distinct_b: 4,
            seed: 0,
            values: ValueMode::Explicit { col_a, col_b },
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        for (name, value) in [
            ("row_count", self.row_count),
            ("rows_per_table_page", self.rows_per_table_page),
            ("entries_per_index_page", self.entries_per_index_page),
            ("distinct_a", self.distinct_a),
            ("distinct_b", self.distinct_b),
        ] {
            if value == 0 {
                return Err(DatasetError::ZeroSized(name));
            }
        }
        if self.row_count > 1 << 31 {
            return Err(DatasetError::TooLarge(self.row_count));
        }
        for (name, value) in [("distinct_a", self.distinct_a), ("distinct_b", self.distinct_b)] {
            if self.row_count % value != 0 {
                return Err(DatasetError::NotDivisible {
                    name,
                    value,
                    rows: self.row_count,
                });
            }
        }
        match &self.values {
            ValueMode::Permutation => {
                if !self.row_count.is_power_of_two() {
                    return Err(DatasetError::NotPowerOfTwo(self.row_count));
                }
            }
            ValueMode::Explicit { col_a, col_b } => {
                for (column, values, domain) in
                    [("col_a", col_a, self.distinct_a), ("col_b", col_b, self.distinct_b)]
                {
                    if values.len() != self.row_count {
                        return Err(DatasetError::ExplicitLength {
                            column,
                            got: values.len(),
                            expected: self.row_count,
                        });
                    }
                    if let Some((row, &value)) =
                        values.iter().enumerate().find(|(_, &v)| v as usize >= domain)
                    {
                        return Err(DatasetError::ExplicitRange {
                            column,
                            row,
                            value,
                            domain,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn table_pages(&self) -> usize {
        self.row_count.div_ceil(self.rows_per_table_page)
    }

    pub fn index_leaf_pages(&self) -> usize {
        self.row_count.div_ceil(self.entries_per_index_page)
    }
}

/// Bijective mixer on `bits`-bit words: xorshift and odd multiplication are
/// both invertible modulo `2^bits`.
fn mix(mut x: u64, bits: u32) -> u64 {
    if bits == 0 {
        return 0;
    }
    let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
    let shift = bits.div_ceil(2);
    x ^= x >> shift;
    x = x.wrapping_mul(MIX_MULTIPLIER) & mask;
    x ^= x >> shift;
    x = x.wrapping_mul(ROW_MULTIPLIER) & mask;
    x ^= x >> shift;
    x
}

fn reverse_low_bits(x: u64, bits: u32) -> u64 {
    if bits == 0 {
        0
    } else {
        x.reverse_bits() >> (64 - bits)
    }
}

/// Column values in permutation mode.
///
/// Row `i` is mapped through the affine bijection `(i * m + seed) mod N` and a
/// bit mixer to a code `h` in `[0, N)`. Column `a` takes the high bits of `h`
/// and column `b` the high bits of `h` bit-reversed, so each value occurs
/// exactly `N / D` times, and the dyadic predicates `a < D_A / 2^ea` and
/// `b < D_B / 2^eb` constrain disjoint bits of `h` whenever
/// `ea + eb <= log2 N`.
fn permutation_columns(config: &DatasetConfig) -> (Vec<u32>, Vec<u32>) {
    let n = config.row_count as u64;
    let bits = n.trailing_zeros();
    let mask = n - 1;
    let shift_a = bits - (config.distinct_a as u64).trailing_zeros();
    let shift_b = bits - (config.distinct_b as u64).trailing_zeros();
    let offset = config.seed & mask;
    let mut col_a = Vec::with_capacity(config.row_count);
    let mut col_b = Vec::with_capacity(config.row_count);
    for i in 0..n {
        let code = mix(i.wrapping_mul(ROW_MULTIPLIER).wrapping_add(offset) & mask, bits);
        col_a.push((code >> shift_a) as u32);
        col_b.push((reverse_low_bits(code, bits) >> shift_b) as u32);
    }
    (col_a, col_b)
}

/// Position of an entry in a leaf level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LeafPosition {
    pub page: usize,
    pub slot: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndexEntry<K> {
    pub key: K,
    pub rowid: u32,
}

/// The leaf level of a B-tree: entries sorted by `(key, rowid)` and packed
/// densely into fixed-capacity pages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafLevel<K> {
    entries: Vec<IndexEntry<K>>,
    entries_per_page: usize,
}

impl<K: Ord + Copy> LeafLevel<K> {
    fn build(mut entries: Vec<IndexEntry<K>>, entries_per_page: usize) -> Self {
        entries.sort_unstable();
        Self {
            entries,
            entries_per_page,
        }
    }

    pub fn entries(&self) -> &[IndexEntry<K>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries_per_page(&self) -> usize {
        self.entries_per_page
    }

    pub fn page_count(&self) -> usize {
        self.entries.len().div_ceil(self.entries_per_page)
    }

    pub fn page_of(&self, ordinal: usize) -> usize {
        ordinal / self.entries_per_page
    }

    pub fn position(&self, ordinal: usize) -> LeafPosition {
        LeafPosition {
            page: ordinal / self.entries_per_page,
            slot: ordinal % self.entries_per_page,
        }
    }

    /// Ordinal of the first entry whose key is `>= key`; `len()` when every
    /// key is smaller.
    pub fn lower_bound(&self, key: K) -> usize {
        self.entries.partition_point(|e| e.key < key)
    }

    /// Position of the first entry `>= key`. Descending the inner levels is
    /// free; the caller charges the leaf when it reads it. A key past the last
    /// entry yields the one-past-end position.
    pub fn locate_key(&self, key: K) -> LeafPosition {
        self.position(self.lower_bound(key))
    }

    /// The one-past-end position.
    pub fn end_position(&self) -> LeafPosition {
        self.position(self.entries.len())
    }
}

pub type SingleIndex = LeafLevel<u32>;
pub type CompositeIndex = LeafLevel<(u32, u32)>;

/// Immutable table plus indexes. Rows are stored in rowid order; a row is
/// never materialized beyond its two indexed columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    config: DatasetConfig,
    col_a: Vec<u32>,
    col_b: Vec<u32>,
    index_a: SingleIndex,
    index_b: SingleIndex,
    index_ab: CompositeIndex,
}

pub fn build_dataset(config: DatasetConfig) -> Result<Dataset, DatasetError> {
    config.validate()?;
    let (col_a, col_b) = match &config.values {
        ValueMode::Permutation => permutation_columns(&config),
        ValueMode::Explicit { col_a, col_b } => (col_a.clone(), col_b.clone()),
    };
    let per_page = config.entries_per_index_page;
    let rowids = 0..config.row_count as u32;
    let index_a = LeafLevel::build(
        rowids
            .clone()
            .map(|r| IndexEntry {
                key: col_a[r as usize],
                rowid: r,
            })
            .collect(),
        per_page,
    );
    let index_b = LeafLevel::build(
        rowids
            .clone()
            .map(|r| IndexEntry {
                key: col_b[r as usize],
                rowid: r,
            })
            .collect(),
        per_page,
    );
    let index_ab = LeafLevel::build(
        rowids
            .map(|r| IndexEntry {
                key: (col_a[r as usize], col_b[r as usize]),
                rowid: r,
            })
            .collect(),
        per_page,
    );
    Ok(Dataset {
        config,
        col_a,
        col_b,
        index_a,
        index_b,
        index_ab,
    })
}

impl Dataset {
    pub fn config(&self) -> &DatasetConfig {
        &self.config
    }

    pub fn row_count(&self) -> usize {
        self.config.row_count
    }

    pub fn col_a(&self) -> &[u32] {
        &self.col_a
    }

    pub fn col_b(&self) -> &[u32] {
        &self.col_b
    }

    pub fn index_a(&self) -> &SingleIndex {
        &self.index_a
    }

    pub fn index_b(&self) -> &SingleIndex {
        &self.index_b
    }

    pub fn index_ab(&self) -> &CompositeIndex {
        &self.index_ab
    }

    pub fn table_pages(&self) -> usize {
        self.config.table_pages()
    }

    pub fn table_page_of(&self, rowid: u32) -> usize {
        rowid as usize / self.config.rows_per_table_page
    }

    /// Rowids stored on table page `page`.
    pub fn rows_on_page(&self, page: usize) -> std::ops::Range<u32> {
        let per = self.config.rows_per_table_page;
        let start = page * per;
        let end = ((page + 1) * per).min(self.config.row_count);
        start as u32..end as u32
    }
}

/// Page-bearing structures of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StructureId {
    Table,
    IndexA,
    IndexB,
    IndexAb,
}

impl StructureId {
    pub const ALL: [StructureId; 4] = [
        StructureId::Table,
        StructureId::IndexA,
        StructureId::IndexB,
        StructureId::IndexAb,
    ];

    fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessClass {
    Sequential,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScratchDirection {
    Write,
    Read,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostWeights {
    /// Cost units per sequential page access.
    pub seq: u64,
    /// Cost units per random page access.
    pub rand: u64,
    /// Cost units per scratch page written or read.
    pub scratch: u64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            seq: 1,
            rand: 10,
            scratch: 1,
        }
    }
}

impl CostWeights {
    pub fn is_valid(&self) -> bool {
        self.seq > 0 && self.rand > 0 && self.scratch > 0 && self.rand >= self.seq
    }
}

/// Per-execution access counters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AccessLedger {
    pub seq_pages: u64,
    pub rand_pages: u64,
    pub scratch_pages_written: u64,
    pub scratch_pages_read: u64,
    pub rows_examined: u64,
    last_page: [Option<usize>; 4],
}

impl AccessLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Charges one page access and reports how it was classified.
    pub fn record_access(&mut self, structure: StructureId, page: usize) -> AccessClass {
        let last = &mut self.last_page[structure.slot()];
        let class = match *last {
            Some(prev) if prev + 1 == page => AccessClass::Sequential,
            _ => AccessClass::Random,
        };
        *last = Some(page);
        match class {
            AccessClass::Sequential => self.seq_pages += 1,
            AccessClass::Random => self.rand_pages += 1,
        }
        class
    }

    pub fn record_scratch(&mut self, pages: u64, direction: ScratchDirection) {
        match direction {
            ScratchDirection::Write => self.scratch_pages_written += pages,
            ScratchDirection::Read => self.scratch_pages_read += pages,
        }
    }

    pub fn examine(&mut self, rows: u64) {
        self.rows_examined += rows;
    }

    pub fn last_page(&self, structure: StructureId) -> Option<usize> {
        self.last_page[structure.slot()]
    }

    pub fn page_accesses(&self) -> u64 {
        self.seq_pages + self.rand_pages
    }

    pub fn scratch_pages(&self) -> u64 {
        self.scratch_pages_written + self.scratch_pages_read
    }
}

pub fn ledger_cost(ledger: &AccessLedger, weights: &CostWeights) -> u64 {
    ledger.seq_pages * weights.seq
        + ledger.rand_pages * weights.rand
        + ledger.scratch_pages() * weights.scratch
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t16() -> Dataset {
        build_dataset(DatasetConfig::fixture_t16()).unwrap()
    }

    #[test]
    fn t16_page_counts() {
        let ds = t16();
        assert_eq!(ds.table_pages(), 4);
        assert_eq!(ds.index_a().page_count(), 2);
        assert_eq!(ds.index_b().page_count(), 2);
        assert_eq!(ds.index_ab().page_count(), 2);
    }

    #[test]
    fn default_table_page_count() {
        assert_eq!(DatasetConfig::default().table_pages(), 16384);
    }

    #[test]
    fn locate_key_on_t16() {
        let ds = t16();
        let idx = ds.index_a();
        assert_eq!(idx.locate_key(1), LeafPosition { page: 0, slot: 4 });
        assert_eq!(idx.locate_key(0), LeafPosition { page: 0, slot: 0 });
        assert_eq!(idx.locate_key(4), idx.end_position());
        assert_eq!(idx.end_position(), LeafPosition { page: 2, slot: 0 });
    }

    #[test]
    fn full_range_predicate_selects_everything() {
        for seed in [0, 1, 77, u64::MAX] {
            let config = DatasetConfig {
                seed,
                distinct_a: 256,
                distinct_b: 64,
                ..DatasetConfig::with_rows(12)
            };
            let ds = build_dataset(config).unwrap();
            assert!(ds.col_a().iter().all(|&a| (a as usize) < 256));
            assert_eq!(ds.index_a().lower_bound(256), ds.row_count());
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let base = DatasetConfig::fixture_t16();
        let bad = DatasetConfig {
            distinct_a: 3,
            values: ValueMode::Permutation,
            ..base.clone()
        };
        assert!(matches!(
            build_dataset(bad),
            Err(DatasetError::NotDivisible { name: "distinct_a", .. })
        ));
        let zero = DatasetConfig {
            rows_per_table_page: 0,
            ..base.clone()
        };
        assert_eq!(
            build_dataset(zero),
            Err(DatasetError::ZeroSized("rows_per_table_page"))
        );
        let odd_rows = DatasetConfig {
            row_count: 24,
            distinct_a: 4,
            distinct_b: 4,
            values: ValueMode::Permutation,
            ..base.clone()
        };
        assert_eq!(build_dataset(odd_rows), Err(DatasetError::NotPowerOfTwo(24)));
        let out_of_domain = DatasetConfig {
            values: ValueMode::Explicit {
                col_a: vec![9; 16],
                col_b: vec![0; 16],
            },
            ..base
        };
        assert!(matches!(
            build_dataset(out_of_domain),
            Err(DatasetError::ExplicitRange { column: "col_a", .. })
        ));
    }

    #[test]
    fn leaf_pages_are_sorted_and_dense() {
        let ds = build_dataset(DatasetConfig::with_rows(10)).unwrap();
        let entries = ds.index_ab().entries();
        assert_eq!(entries.len(), 1024);
        assert!(entries.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(ds.index_ab().page_count(), 4);
    }

    #[test]
    fn record_access_classification() {
        let mut ledger = AccessLedger::new();
        assert_eq!(ledger.record_access(StructureId::Table, 0), AccessClass::Random);
        assert_eq!(ledger.record_access(StructureId::Table, 1), AccessClass::Sequential);
        assert_eq!(ledger.record_access(StructureId::Table, 3), AccessClass::Random);
        // Other structures keep their own predecessor.
        assert_eq!(ledger.record_access(StructureId::IndexA, 4), AccessClass::Random);
        assert_eq!(ledger.record_access(StructureId::Table, 4), AccessClass::Sequential);
        assert_eq!(ledger.seq_pages, 2);
        assert_eq!(ledger.rand_pages, 3);
    }

    #[test]
    fn scratch_counters_are_additive() {
        let mut ledger = AccessLedger::new();
        ledger.record_scratch(0, ScratchDirection::Write);
        assert_eq!(ledger, AccessLedger::new());
        ledger.record_scratch(3, ScratchDirection::Write);
        ledger.record_scratch(3, ScratchDirection::Read);
        assert_eq!((ledger.scratch_pages_written, ledger.scratch_pages_read), (3, 3));

        let mut two = AccessLedger::new();
        two.record_scratch(1, ScratchDirection::Write);
        two.record_scratch(2, ScratchDirection::Write);
        assert_eq!(two.scratch_pages_written, 3);
    }

    #[test]
    fn ledger_cost_examples() {
        let w = CostWeights::default();
        let ledger = AccessLedger {
            seq_pages: 3,
            rand_pages: 1,
            ..AccessLedger::default()
        };
        assert_eq!(ledger_cost(&ledger, &w), 13);
        assert_eq!(ledger_cost(&AccessLedger::new(), &w), 0);
        let spilled = AccessLedger {
            rand_pages: 2,
            scratch_pages_written: 1,
            scratch_pages_read: 1,
            ..AccessLedger::default()
        };
        assert_eq!(ledger_cost(&spilled, &w), 22);
    }

    #[test]
    fn mixer_is_a_bijection() {
        for bits in 0..=12 {
            let n = 1u64 << bits;
            let mut seen = vec![false; n as usize];
            for x in 0..n {
                let y = mix(x, bits);
                assert!(y < n);
                assert!(!seen[y as usize]);
                seen[y as usize] = true;
            }
        }
    }

    #[test]
    fn build_is_deterministic() {
        let config = DatasetConfig {
            seed: 42,
            ..DatasetConfig::with_rows(12)
        };
        assert_eq!(
            build_dataset(config.clone()).unwrap(),
            build_dataset(config).unwrap()
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn exact_selectivity(log_rows in 4u32..=16, log_da in 0u32..=16, log_db in 0u32..=16, seed: u64) {
            let log_da = log_da.min(log_rows);
            let log_db = log_db.min(log_rows);
            let config = DatasetConfig {
                row_count: 1 << log_rows,
                distinct_a: 1 << log_da,
                distinct_b: 1 << log_db,
                seed,
                ..DatasetConfig::default()
            };
            let ds = build_dataset(config.clone()).unwrap();
            let n = config.row_count;
            for (column, domain) in [(ds.col_a(), config.distinct_a), (ds.col_b(), config.distinct_b)] {
                let mut histogram = vec![0usize; domain];
                for &value in column {
                    histogram[value as usize] += 1;
                }
                let mut below = 0;
                for v in 0..=domain {
                    prop_assert_eq!(below, v * n / domain);
                    if v < domain {
                        below += histogram[v];
                    }
                }
            }
        }

        #[test]
        fn dyadic_predicates_are_jointly_exact(log_rows in 4u32..=14, seed: u64, ea in 0u32..=8, eb in 0u32..=8) {
            let config = DatasetConfig {
                row_count: 1 << log_rows,
                distinct_a: 1 << log_rows.min(8),
                distinct_b: 1 << log_rows.min(8),
                seed,
                ..DatasetConfig::default()
            };
            let ea = ea.min(log_rows.min(8));
            let eb = eb.min(log_rows.min(8));
            prop_assume!(ea + eb <= log_rows);
            let ds = build_dataset(config.clone()).unwrap();
            let va = (config.distinct_a >> ea) as u32;
            let vb = (config.distinct_b >> eb) as u32;
            let count = ds.col_a().iter().zip(ds.col_b())
                .filter(|(&a, &b)| a < va && b < vb)
                .count();
            prop_assert_eq!(count, config.row_count >> (ea + eb));
        }

        #[test]
        fn classification_matches_predecessor_oracle(
            accesses in proptest::collection::vec((0usize..4, 0usize..8), 0..200)
        ) {
            let mut ledger = AccessLedger::new();
            let mut prev: [Option<usize>; 4] = [None; 4];
            let (mut seq, mut rand) = (0u64, 0u64);
            for &(s, page) in &accesses {
                ledger.record_access(StructureId::ALL[s], page);
                if prev[s].map(|p| p + 1) == Some(page) { seq += 1 } else { rand += 1 }
                prev[s] = Some(page);
            }
            prop_assert_eq!((ledger.seq_pages, ledger.rand_pages), (seq, rand));
            prop_assert_eq!(ledger.page_accesses(), accesses.len() as u64);
        }

        #[test]
        fn cost_is_monotone_in_counters(
            seq in 0u64..1000, rand in 0u64..1000, w in 0u64..1000, r in 0u64..1000, bump in 0usize..4
        ) {
            let weights = CostWeights::default();
            let base = AccessLedger {
                seq_pages: seq, rand_pages: rand,
                scratch_pages_written: w, scratch_pages_read: r,
                ..AccessLedger::default()
            };
            let mut more = base.clone();
            match bump {
                0 => more.seq_pages += 1,
                1 => more.rand_pages += 1,
                2 => more.scratch_pages_written += 1,
                _ => more.scratch_pages_read += 1,
            }
            prop_assert!(ledger_cost(&more, &weights) > ledger_cost(&base, &weights));
        }
    }
}
