//! Forced query-execution plans over a [`Dataset`].
//!
//! Every plan really computes the query result; the cost it reports is
//! whatever its page accesses add up to in the [`AccessLedger`]. CPU work
//! (comparisons, sorting rowid lists, hashing) is counted in
//! `rows_examined` but carries no weight.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::storage::{
    ledger_cost, AccessLedger, CostWeights, Dataset, LeafLevel, ScratchDirection, StructureId,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExecError {
    #[error("plan {plan} cannot answer this query: {reason}")]
    Inapplicable { plan: PlanId, reason: &'static str },
    #[error("threshold {value} on column {column} is outside [0, {domain}]")]
    ThresholdOutOfRange {
        column: char,
        value: u32,
        domain: usize,
    },
    #[error("query has no predicate")]
    NoPredicate,
    #[error("hash memory must hold at least one entry")]
    ZeroMemory,
    #[error("cost weights must be positive with rand >= seq")]
    InvalidWeights,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFlavor {
    /// Qualifying rowids only; covering plans may skip the table.
    #[default]
    Rowids,
    /// Full rows; every result row's table page must be read.
    Rows,
}

/// `a < threshold_a AND b < threshold_b`; an absent threshold is always true.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Query {
    pub threshold_a: Option<u32>,
    pub threshold_b: Option<u32>,
    pub output: OutputFlavor,
}

impl Query {
    pub fn both(va: u32, vb: u32, output: OutputFlavor) -> Self {
        Self {
            threshold_a: Some(va),
            threshold_b: Some(vb),
            output,
        }
    }

    pub fn only_a(va: u32, output: OutputFlavor) -> Self {
        Self {
            threshold_a: Some(va),
            threshold_b: None,
            output,
        }
    }

    pub fn only_b(vb: u32, output: OutputFlavor) -> Self {
        Self {
            threshold_a: None,
            threshold_b: Some(vb),
            output,
        }
    }

    pub fn matches(&self, a: u32, b: u32) -> bool {
        self.threshold_a.is_none_or(|va| a < va) && self.threshold_b.is_none_or(|vb| b < vb)
    }

    fn validate(&self, dataset: &Dataset) -> Result<(), ExecError> {
        if self.threshold_a.is_none() && self.threshold_b.is_none() {
            return Err(ExecError::NoPredicate);
        }
        let config = dataset.config();
        for (column, threshold, domain) in [
            ('a', self.threshold_a, config.distinct_a),
            ('b', self.threshold_b, config.distinct_b),
        ] {
            if let Some(value) = threshold {
                if value as usize > domain {
                    return Err(ExecError::ThresholdOutOfRange {
                        column,
                        value,
                        domain,
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PlanId {
    TableScan,
    TradIndexA,
    TradIndexB,
    ImprovedIndexA,
    ImprovedIndexB,
    MergeIntersect,
    HashIntersectAB,
    HashIntersectBA,
    CoveringScanAB,
    MdamAB,
    CoveringFetchAB,
}

impl PlanId {
    pub const ALL: [PlanId; 11] = [
        PlanId::TableScan,
        PlanId::TradIndexA,
        PlanId::TradIndexB,
        PlanId::ImprovedIndexA,
        PlanId::ImprovedIndexB,
        PlanId::MergeIntersect,
        PlanId::HashIntersectAB,
        PlanId::HashIntersectBA,
        PlanId::CoveringScanAB,
        PlanId::MdamAB,
        PlanId::CoveringFetchAB,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlanId::TableScan => "TableScan",
            PlanId::TradIndexA => "TradIndexA",
            PlanId::TradIndexB => "TradIndexB",
            PlanId::ImprovedIndexA => "ImprovedIndexA",
            PlanId::ImprovedIndexB => "ImprovedIndexB",
            PlanId::MergeIntersect => "MergeIntersect",
            PlanId::HashIntersectAB => "HashIntersectAB",
            PlanId::HashIntersectBA => "HashIntersectBA",
            PlanId::CoveringScanAB => "CoveringScanAB",
            PlanId::MdamAB => "MdamAB",
            PlanId::CoveringFetchAB => "CoveringFetchAB",
        }
    }

    /// Checks the plan against the query shape.
    pub fn check_applicable(self, query: &Query) -> Result<(), ExecError> {
        let fail = |reason| Err(ExecError::Inapplicable { plan: self, reason });
        let both = query.threshold_a.is_some() && query.threshold_b.is_some();
        match self {
            PlanId::TableScan => Ok(()),
            PlanId::TradIndexA | PlanId::ImprovedIndexA if query.threshold_a.is_none() => {
                fail("needs a predicate on column a")
            }
            PlanId::TradIndexB | PlanId::ImprovedIndexB if query.threshold_b.is_none() => {
                fail("needs a predicate on column b")
            }
            PlanId::TradIndexA
            | PlanId::TradIndexB
            | PlanId::ImprovedIndexA
            | PlanId::ImprovedIndexB => Ok(()),
            PlanId::CoveringFetchAB if !both => fail("needs predicates on both columns"),
            PlanId::CoveringFetchAB => Ok(()),
            _ if !both => fail("needs predicates on both columns"),
            _ if query.output != OutputFlavor::Rowids => {
                fail("covers rowids only and cannot return rows")
            }
            _ => Ok(()),
        }
    }

    pub fn applicable_to(self, query: &Query) -> bool {
        self.check_applicable(query).is_ok()
    }

    /// Every catalog plan that can answer `query`, in catalog order.
    pub fn applicable_plans(query: &Query) -> Vec<PlanId> {
        PlanId::ALL
            .into_iter()
            .filter(|p| p.applicable_to(query))
            .collect()
    }
}

impl fmt::Display for PlanId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown plan name `{0}`")]
pub struct UnknownPlan(pub String);

impl FromStr for PlanId {
    type Err = UnknownPlan;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlanId::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| UnknownPlan(s.to_string()))
    }
}

impl Serialize for PlanId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for PlanId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let name = String::deserialize(deserializer)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpillPolicy {
    /// Spill both inputs entirely once the build side overflows.
    #[default]
    Abrupt,
    /// Spill only the overflowing fraction of each input.
    Graceful,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecConfig {
    /// Hash table capacity in entries.
    pub hash_memory: usize,
    pub spill_policy: SpillPolicy,
    pub weights: CostWeights,
}

impl Default for ExecConfig {
    fn default() -> Self {
        Self {
            hash_memory: 1 << 16,
            spill_policy: SpillPolicy::Abrupt,
            weights: CostWeights::default(),
        }
    }
}

impl ExecConfig {
    pub fn validate(&self) -> Result<(), ExecError> {
        if self.hash_memory == 0 {
            return Err(ExecError::ZeroMemory);
        }
        if !self.weights.is_valid() {
            return Err(ExecError::InvalidWeights);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanResult {
    pub result_count: u64,
    /// Sum of qualifying rowids modulo 2^64.
    pub result_checksum: u64,
    pub cost: u64,
    pub ledger: AccessLedger,
}

pub fn rowid_checksum(rowids: &[u32]) -> u64 {
    rowids
        .iter()
        .fold(0u64, |acc, &r| acc.wrapping_add(u64::from(r)))
}

/// Runs `plan` against `query` with a fresh ledger.
pub fn execute_plan(
    dataset: &Dataset,
    plan: PlanId,
    query: &Query,
    exec: &ExecConfig,
) -> Result<PlanResult, ExecError> {
    query.validate(dataset)?;
    exec.validate()?;
    plan.check_applicable(query)?;
    let mut ledger = AccessLedger::new();
    let ledger_ref = &mut ledger;
    let rowids = match plan {
        PlanId::TableScan => table_scan(dataset, ledger_ref, query),
        PlanId::TradIndexA => trad_index_scan(dataset, ledger_ref, query, Column::A),
        PlanId::TradIndexB => trad_index_scan(dataset, ledger_ref, query, Column::B),
        PlanId::ImprovedIndexA => {
            improved_index_scan(dataset, ledger_ref, query, Column::A, &exec.weights)
        }
        PlanId::ImprovedIndexB => {
            improved_index_scan(dataset, ledger_ref, query, Column::B, &exec.weights)
        }
        PlanId::MergeIntersect => merge_intersect(dataset, ledger_ref, query),
        PlanId::HashIntersectAB => hash_intersect(dataset, ledger_ref, query, Column::A, exec),
        PlanId::HashIntersectBA => hash_intersect(dataset, ledger_ref, query, Column::B, exec),
        PlanId::CoveringScanAB => covering_scan_ab(dataset, ledger_ref, query),
        PlanId::MdamAB => mdam_scan_ab(dataset, ledger_ref, query),
        PlanId::CoveringFetchAB => covering_fetch_ab(dataset, ledger_ref, query, &exec.weights),
    };
    Ok(PlanResult {
        result_count: rowids.len() as u64,
        result_checksum: rowid_checksum(&rowids),
        cost: ledger_cost(&ledger, &exec.weights),
        ledger,
    })
}

fn index_for(dataset: &Dataset, column: Column) -> (&LeafLevel<u32>, StructureId) {
    match column {
        Column::A => (dataset.index_a(), StructureId::IndexA),
        Column::B => (dataset.index_b(), StructureId::IndexB),
    }
}

fn threshold(query: &Query, column: Column) -> u32 {
    match column {
        Column::A => query.threshold_a,
        Column::B => query.threshold_b,
    }
    .expect("plan applicability checked by caller")
}

/// Reads leaf pages `[start, end)` of an index in order, charging each page
/// once, and returns the entries in that range.
fn scan_leaf_range<'a, K: Ord + Copy>(
    index: &'a LeafLevel<K>,
    structure: StructureId,
    start: usize,
    end: usize,
    ledger: &mut AccessLedger,
) -> &'a [crate::storage::IndexEntry<K>] {
    if start >= end {
        return &[];
    }
    for page in index.page_of(start)..=index.page_of(end - 1) {
        ledger.record_access(structure, page);
    }
    ledger.examine((end - start) as u64);
    &index.entries()[start..end]
}

/// Rowids of all index entries with key below `threshold`, in index order.
fn single_index_range(
    dataset: &Dataset,
    ledger: &mut AccessLedger,
    column: Column,
    threshold: u32,
) -> Vec<u32> {
    let (index, structure) = index_for(dataset, column);
    let end = index.lower_bound(threshold);
    scan_leaf_range(index, structure, 0, end, ledger)
        .iter()
        .map(|e| e.rowid)
        .collect()
}

/// Reads every table page in ascending order and filters rows.
pub fn table_scan(dataset: &Dataset, ledger: &mut AccessLedger, query: &Query) -> Vec<u32> {
    let (col_a, col_b) = (dataset.col_a(), dataset.col_b());
    let mut out = Vec::new();
    for page in 0..dataset.table_pages() {
        ledger.record_access(StructureId::Table, page);
        let rows = dataset.rows_on_page(page);
        ledger.examine(rows.len() as u64);
        out.extend(rows.filter(|&r| query.matches(col_a[r as usize], col_b[r as usize])));
    }
    out
}

/// Range scan on one single-column index that fetches each qualifying row's
/// table page as soon as its index entry is read.
pub fn trad_index_scan(
    dataset: &Dataset,
    ledger: &mut AccessLedger,
    query: &Query,
    column: Column,
) -> Vec<u32> {
    let (index, structure) = index_for(dataset, column);
    let end = index.lower_bound(threshold(query, column));
    let (col_a, col_b) = (dataset.col_a(), dataset.col_b());
    let mut out = Vec::new();
    let mut current_leaf = None;
    for (ordinal, entry) in index.entries()[..end].iter().enumerate() {
        let leaf = index.page_of(ordinal);
        if current_leaf != Some(leaf) {
            ledger.record_access(structure, leaf);
            current_leaf = Some(leaf);
        }
        ledger.record_access(StructureId::Table, dataset.table_page_of(entry.rowid));
        ledger.examine(2);
        let r = entry.rowid as usize;
        if query.matches(col_a[r], col_b[r]) {
            out.push(entry.rowid);
        }
    }
    out
}

/// Fetch phase shared by the improved index scan and the covering fetch.
///
/// Marks the table pages holding `rowids` in a bitmap, then either visits the
/// marked pages in ascending order or, when `marked * rand > pages * seq`,
/// sweeps the whole table. Returns the rowids that satisfy `query`, in
/// ascending order.
fn bitmap_fetch(
    dataset: &Dataset,
    ledger: &mut AccessLedger,
    rowids: &[u32],
    query: &Query,
    weights: &CostWeights,
) -> Vec<u32> {
    let mut sorted = rowids.to_vec();
    sorted.sort_unstable();
    let mut pages: Vec<usize> = sorted.iter().map(|&r| dataset.table_page_of(r)).collect();
    pages.dedup();
    if pages.is_empty() {
        return Vec::new();
    }
    let total_pages = dataset.table_pages();
    if pages.len() as u64 * weights.rand > total_pages as u64 * weights.seq {
        for page in 0..total_pages {
            ledger.record_access(StructureId::Table, page);
        }
        ledger.examine(dataset.row_count() as u64);
    } else {
        for &page in &pages {
            ledger.record_access(StructureId::Table, page);
        }
        ledger.examine(sorted.len() as u64);
    }
    let (col_a, col_b) = (dataset.col_a(), dataset.col_b());
    sorted.retain(|&r| query.matches(col_a[r as usize], col_b[r as usize]));
    sorted
}

/// Range scan that collects rowids first and fetches table pages in page
/// order, switching to a full sweep when that is estimated cheaper.
pub fn improved_index_scan(
    dataset: &Dataset,
    ledger: &mut AccessLedger,
    query: &Query,
    column: Column,
    weights: &CostWeights,
) -> Vec<u32> {
    let rowids = single_index_range(dataset, ledger, column, threshold(query, column));
    bitmap_fetch(dataset, ledger, &rowids, query, weights)
}

/// Intersects the two single-column index ranges by sorting both rowid lists
/// and merging. No table access.
pub fn merge_intersect(dataset: &Dataset, ledger: &mut AccessLedger, query: &Query) -> Vec<u32> {
    let mut left = single_index_range(dataset, ledger, Column::A, threshold(query, Column::A));
    let mut right = single_index_range(dataset, ledger, Column::B, threshold(query, Column::B));
    left.sort_unstable();
    right.sort_unstable();
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < left.len() && j < right.len() {
        match left[i].cmp(&right[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(left[i]);
                i += 1;
                j += 1;
            }
        }
    }
    ledger.examine((left.len() + right.len()) as u64);
    out
}

/// Scratch pages each side writes (and later re-reads) when the build input
/// of `build_rows` entries overflows a table of `memory` entries.
pub fn spill_pages(
    build_rows: u64,
    probe_rows: u64,
    memory: u64,
    per_page: u64,
    policy: SpillPolicy,
) -> (u64, u64) {
    if build_rows <= memory {
        return (0, 0);
    }
    match policy {
        SpillPolicy::Abrupt => (build_rows.div_ceil(per_page), probe_rows.div_ceil(per_page)),
        SpillPolicy::Graceful => {
            let overflow = build_rows - memory;
            let build = overflow.div_ceil(per_page);
            // ceil(probe * overflow / build / per_page) without rounding twice
            let numerator = u128::from(probe_rows) * u128::from(overflow);
            let denominator = u128::from(build_rows) * u128::from(per_page);
            (build, numerator.div_ceil(denominator) as u64)
        }
    }
}

/// Hash intersection of the two single-column index ranges with `build` as
/// the build side. Overflowing the hash memory adds scratch traffic.
pub fn hash_intersect(
    dataset: &Dataset,
    ledger: &mut AccessLedger,
    query: &Query,
    build: Column,
    exec: &ExecConfig,
) -> Vec<u32> {
    let probe = match build {
        Column::A => Column::B,
        Column::B => Column::A,
    };
    let build_rows = single_index_range(dataset, ledger, build, threshold(query, build));
    let probe_rows = single_index_range(dataset, ledger, probe, threshold(query, probe));
    let (build_spill, probe_spill) = spill_pages(
        build_rows.len() as u64,
        probe_rows.len() as u64,
        exec.hash_memory as u64,
        dataset.config().entries_per_index_page as u64,
        exec.spill_policy,
    );
    for pages in [build_spill, probe_spill] {
        ledger.record_scratch(pages, ScratchDirection::Write);
        ledger.record_scratch(pages, ScratchDirection::Read);
    }
    let table: HashSet<u32> = build_rows.iter().copied().collect();
    let mut out: Vec<u32> = probe_rows
        .iter()
        .copied()
        .filter(|r| table.contains(r))
        .collect();
    ledger.examine((build_rows.len() + probe_rows.len()) as u64);
    out.sort_unstable();
    out
}

/// Reads the composite index from its first entry through the last entry
/// with `a < va`, filtering `b < vb` per entry.
pub fn covering_scan_ab(dataset: &Dataset, ledger: &mut AccessLedger, query: &Query) -> Vec<u32> {
    let index = dataset.index_ab();
    let va = threshold(query, Column::A);
    let vb = threshold(query, Column::B);
    let start = index.lower_bound((0, 0));
    let end = index.lower_bound((va, 0));
    scan_leaf_range(index, StructureId::IndexAb, start, end, ledger)
        .iter()
        .filter(|e| e.key.1 < vb)
        .map(|e| e.rowid)
        .collect()
}

/// Multi-dimensional access on the composite index: one probe per leading
/// value `a < va`, reading only the entries with `b < vb`. A leaf page is
/// charged only when it differs from the last leaf page read.
pub fn mdam_scan_ab(dataset: &Dataset, ledger: &mut AccessLedger, query: &Query) -> Vec<u32> {
    let index = dataset.index_ab();
    let va = threshold(query, Column::A);
    let vb = threshold(query, Column::B);
    let mut last_leaf = None;
    let mut read = |page: usize, ledger: &mut AccessLedger| {
        if last_leaf != Some(page) {
            ledger.record_access(StructureId::IndexAb, page);
            last_leaf = Some(page);
        }
    };
    let mut out = Vec::new();
    for a in 0..va {
        let start = index.lower_bound((a, 0));
        if start == index.len() {
            break;
        }
        let end = index.lower_bound((a, vb));
        if start == end {
            // The probe still has to look at the leaf it lands on.
            read(index.page_of(start), ledger);
            ledger.examine(1);
            continue;
        }
        for page in index.page_of(start)..=index.page_of(end - 1) {
            read(page, ledger);
        }
        ledger.examine((end - start) as u64);
        out.extend(index.entries()[start..end].iter().map(|e| e.rowid));
    }
    out
}

/// The covering scan followed by a bitmap-ordered fetch of every matching
/// row, as when row visibility can only be decided from the table.
pub fn covering_fetch_ab(
    dataset: &Dataset,
    ledger: &mut AccessLedger,
    query: &Query,
    weights: &CostWeights,
) -> Vec<u32> {
    let rowids = covering_scan_ab(dataset, ledger, query);
    bitmap_fetch(dataset, ledger, &rowids, query, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::storage::{build_dataset, DatasetConfig};

    fn t16() -> Dataset {
        build_dataset(DatasetConfig::fixture_t16()).unwrap()
    }

    fn run(ds: &Dataset, plan: PlanId, query: Query) -> PlanResult {
        execute_plan(ds, plan, &query, &ExecConfig::default()).unwrap()
    }

    fn sorted(mut v: Vec<u32>) -> Vec<u32> {
        v.sort_unstable();
        v
    }

    #[test]
    fn t16_table_scan() {
        let ds = t16();
        let full = run(&ds, PlanId::TableScan, Query::both(4, 4, OutputFlavor::Rowids));
        assert_eq!((full.result_count, full.cost), (16, 13));
        let none = run(&ds, PlanId::TableScan, Query::only_a(0, OutputFlavor::Rowids));
        assert_eq!((none.result_count, none.cost), (0, 13));
    }

    #[test]
    fn t16_merge_intersect() {
        let ds = t16();
        let q = Query::both(2, 2, OutputFlavor::Rowids);
        let mut ledger = AccessLedger::new();
        assert_eq!(sorted(merge_intersect(&ds, &mut ledger, &q)), vec![0, 1, 4, 5]);
        let r = run(&ds, PlanId::MergeIntersect, q);
        assert_eq!((r.result_count, r.cost), (4, 20));
        assert_eq!(r.result_checksum, 10);
    }

    #[test]
    fn merge_intersect_with_empty_side_still_scans_other_index() {
        let ds = t16();
        let mut ledger = AccessLedger::new();
        let out = merge_intersect(&ds, &mut ledger, &Query::both(0, 2, OutputFlavor::Rowids));
        assert!(out.is_empty());
        assert_eq!(ledger.last_page(StructureId::IndexB), Some(0));
        assert_eq!(ledger.last_page(StructureId::IndexA), None);
    }

    #[test]
    fn t16_trad_index_scan() {
        let ds = t16();
        let one = run(&ds, PlanId::TradIndexA, Query::only_a(1, OutputFlavor::Rows));
        assert_eq!((one.result_count, one.cost), (4, 23));
        let all = run(&ds, PlanId::TradIndexA, Query::only_a(4, OutputFlavor::Rows));
        assert_eq!((all.result_count, all.cost), (16, 63));
        let empty = run(&ds, PlanId::TradIndexA, Query::only_a(0, OutputFlavor::Rows));
        assert_eq!((empty.result_count, empty.cost), (0, 0));
    }

    #[test]
    fn t16_improved_index_scan() {
        let ds = t16();
        let all = run(&ds, PlanId::ImprovedIndexA, Query::only_a(4, OutputFlavor::Rows));
        assert_eq!((all.result_count, all.cost), (16, 24));
        let one = run(&ds, PlanId::ImprovedIndexA, Query::only_a(1, OutputFlavor::Rows));
        assert_eq!((one.result_count, one.cost), (4, 23));
        for va in 0..=4 {
            let q = Query::only_a(va, OutputFlavor::Rows);
            let (mut l1, mut l2) = (AccessLedger::new(), AccessLedger::new());
            assert_eq!(
                sorted(trad_index_scan(&ds, &mut l1, &q, Column::A)),
                improved_index_scan(&ds, &mut l2, &q, Column::A, &CostWeights::default())
            );
        }
    }

    #[test]
    fn t16_hash_intersect() {
        let ds = t16();
        let q = Query::both(2, 2, OutputFlavor::Rowids);
        let fits = run(&ds, PlanId::HashIntersectAB, q);
        assert_eq!((fits.result_count, fits.cost), (4, 20));
        assert_eq!(fits.ledger.scratch_pages(), 0);

        let tight = ExecConfig {
            hash_memory: 2,
            ..ExecConfig::default()
        };
        let spilled = execute_plan(&ds, PlanId::HashIntersectAB, &q, &tight).unwrap();
        assert_eq!(spilled.cost, 24);
        assert_eq!(
            (spilled.ledger.scratch_pages_written, spilled.ledger.scratch_pages_read),
            (2, 2)
        );
        let merge = run(&ds, PlanId::MergeIntersect, q);
        assert_eq!(
            (spilled.result_count, spilled.result_checksum),
            (merge.result_count, merge.result_checksum)
        );
    }

    #[test]
    fn spill_page_arithmetic() {
        assert_eq!(spill_pages(8, 8, 8, 8, SpillPolicy::Abrupt), (0, 0));
        assert_eq!(spill_pages(9, 8, 8, 8, SpillPolicy::Abrupt), (2, 1));
        assert_eq!(spill_pages(9, 8, 8, 8, SpillPolicy::Graceful), (1, 1));
        // Half the build side overflows: half of each input spills.
        assert_eq!(spill_pages(1024, 512, 512, 256, SpillPolicy::Graceful), (2, 1));
        assert_eq!(spill_pages(1024, 4096, 512, 256, SpillPolicy::Graceful), (2, 8));
    }

    #[test]
    fn t16_covering_and_mdam() {
        let ds = t16();
        let q = Query::both(2, 2, OutputFlavor::Rowids);
        let cover = run(&ds, PlanId::CoveringScanAB, q);
        assert_eq!((cover.result_count, cover.cost), (4, 10));
        let mdam = run(&ds, PlanId::MdamAB, q);
        assert_eq!((mdam.result_count, mdam.cost), (4, 10));
        assert_eq!(mdam.result_checksum, cover.result_checksum);

        let full = run(&ds, PlanId::CoveringScanAB, Query::both(4, 4, OutputFlavor::Rowids));
        assert_eq!(full.cost, 10 + 1);
        let empty = run(&ds, PlanId::CoveringScanAB, Query::both(0, 4, OutputFlavor::Rowids));
        assert_eq!(empty.cost, 0);

        let single = Query::both(1, 4, OutputFlavor::Rowids);
        let (mut l1, mut l2) = (AccessLedger::new(), AccessLedger::new());
        assert_eq!(
            sorted(mdam_scan_ab(&ds, &mut l1, &single)),
            sorted(covering_scan_ab(&ds, &mut l2, &single))
        );
    }

    #[test]
    fn t16_covering_fetch() {
        let ds = t16();
        let r = run(&ds, PlanId::CoveringFetchAB, Query::both(2, 2, OutputFlavor::Rowids));
        assert_eq!((r.result_count, r.cost), (4, 23));
        let q = Query::both(4, 4, OutputFlavor::Rows);
        let fetch = run(&ds, PlanId::CoveringFetchAB, q);
        let cover = run(&ds, PlanId::CoveringScanAB, Query { output: OutputFlavor::Rowids, ..q });
        assert!(fetch.cost >= cover.cost);
        assert_eq!(fetch.result_checksum, cover.result_checksum);
    }

    #[test]
    fn applicability() {
        let ds = t16();
        let one_d = Query::only_a(2, OutputFlavor::Rows);
        assert_eq!(
            execute_plan(&ds, PlanId::MdamAB, &one_d, &ExecConfig::default()),
            Err(ExecError::Inapplicable {
                plan: PlanId::MdamAB,
                reason: "needs predicates on both columns"
            })
        );
        let rows = Query::both(2, 2, OutputFlavor::Rows);
        assert!(!PlanId::MergeIntersect.applicable_to(&rows));
        assert!(PlanId::CoveringFetchAB.applicable_to(&rows));
        assert_eq!(
            PlanId::applicable_plans(&one_d),
            vec![PlanId::TableScan, PlanId::TradIndexA, PlanId::ImprovedIndexA]
        );
        assert_eq!(
            PlanId::applicable_plans(&Query::both(1, 1, OutputFlavor::Rowids)).len(),
            11
        );
        assert!(matches!(
            execute_plan(&ds, PlanId::TableScan, &Query::only_a(5, OutputFlavor::Rows), &ExecConfig::default()),
            Err(ExecError::ThresholdOutOfRange { column: 'a', .. })
        ));
    }

    #[test]
    fn plan_names_round_trip() {
        for plan in PlanId::ALL {
            assert_eq!(plan.name().parse::<PlanId>(), Ok(plan));
        }
        assert_eq!(
            "Nope".parse::<PlanId>(),
            Err(UnknownPlan("Nope".to_string()))
        );
    }

    #[test]
    fn switch_estimate_can_lose_on_tiny_tables() {
        // 4 table pages, two qualifying rows on adjacent pages: the estimate
        // 2 * 10 > 4 picks the sweep (13) over the ordered fetch (11).
        let ds = build_dataset(DatasetConfig::with_rows(8)).unwrap();
        let query = Query::only_a(2, OutputFlavor::Rows);
        let trad = run(&ds, PlanId::TradIndexA, query);
        let improved = run(&ds, PlanId::ImprovedIndexA, query);
        assert_eq!((trad.cost, improved.cost), (21, 23));
    }

    fn small_config() -> impl proptest::strategy::Strategy<Value = DatasetConfig> {
        use proptest::prelude::*;
        (6u32..=11, 1usize..=32, 2usize..=64, 0u32..=6, 0u32..=6, any::<u64>()).prop_map(
            |(n, pt, pi, da, db, seed)| DatasetConfig {
                row_count: 1 << n,
                rows_per_table_page: pt,
                entries_per_index_page: pi,
                distinct_a: 1 << da.min(n),
                distinct_b: 1 << db.min(n),
                seed,
                ..DatasetConfig::default()
            },
        )
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]

        #[test]
        fn every_plan_returns_the_brute_force_result(
            config in small_config(),
            ua in 0f64..=1.0,
            ub in 0f64..=1.0,
            memory in 1usize..300,
            graceful in proptest::bool::ANY,
        ) {
            let ds = build_dataset(config.clone()).unwrap();
            let va = (ua * config.distinct_a as f64) as u32;
            let vb = (ub * config.distinct_b as f64) as u32;
            let exec = ExecConfig {
                hash_memory: memory,
                spill_policy: if graceful { SpillPolicy::Graceful } else { SpillPolicy::Abrupt },
                ..ExecConfig::default()
            };
            for query in [
                Query::both(va, vb, OutputFlavor::Rowids),
                Query::both(va, vb, OutputFlavor::Rows),
                Query::only_a(va, OutputFlavor::Rows),
                Query::only_b(vb, OutputFlavor::Rowids),
            ] {
                let expected: Vec<u64> = (0..config.row_count)
                    .filter(|&i| query.matches(ds.col_a()[i], ds.col_b()[i]))
                    .map(|i| i as u64)
                    .collect();
                let checksum = expected.iter().fold(0u64, |acc, &r| acc.wrapping_add(r));
                for plan in PlanId::applicable_plans(&query) {
                    let got = execute_plan(&ds, plan, &query, &exec).unwrap();
                    proptest::prop_assert_eq!(got.result_count, expected.len() as u64, "{}", plan);
                    proptest::prop_assert_eq!(got.result_checksum, checksum, "{}", plan);
                }
            }
        }

        #[test]
        fn table_scan_matches_closed_form(config in small_config(), ua in 0f64..=1.0) {
            let ds = build_dataset(config.clone()).unwrap();
            let va = (ua * config.distinct_a as f64) as u32;
            let got = run(&ds, PlanId::TableScan, Query::only_a(va, OutputFlavor::Rows));
            let pages = config.row_count.div_ceil(config.rows_per_table_page) as u64;
            proptest::prop_assert_eq!(got.cost, 10 + (pages - 1));
        }

        #[test]
        fn improved_never_loses_to_traditional_on_dyadic_thresholds(
            n in 14u32..=16,
            e in 0u32..=16,
        ) {
            let config = DatasetConfig::with_rows(n);
            let ds = build_dataset(config.clone()).unwrap();
            let va = (config.distinct_a >> e.min(config.distinct_a.trailing_zeros())) as u32;
            let query = Query::only_a(va, OutputFlavor::Rows);
            let trad = run(&ds, PlanId::TradIndexA, query);
            let improved = run(&ds, PlanId::ImprovedIndexA, query);
            proptest::prop_assert!(improved.cost <= trad.cost + 1, "{} > {}", improved.cost, trad.cost);
        }

        #[test]
        fn merge_intersect_is_symmetric(seed in proptest::prelude::any::<u64>(), i in 0u32..=6, j in 0u32..=6) {
            let config = DatasetConfig { seed, ..DatasetConfig::with_rows(12) };
            let ds = build_dataset(config.clone()).unwrap();
            let d = config.distinct_a as u32;
            let forward = run(&ds, PlanId::MergeIntersect, Query::both(d >> i, d >> j, OutputFlavor::Rowids));
            let back = run(&ds, PlanId::MergeIntersect, Query::both(d >> j, d >> i, OutputFlavor::Rowids));
            proptest::prop_assert_eq!(forward.cost, back.cost);
        }

        #[test]
        fn traditional_scan_ignores_the_other_column(config in small_config(), ua in 0f64..=1.0, ub in 0f64..=1.0) {
            let ds = build_dataset(config.clone()).unwrap();
            let va = (ua * config.distinct_a as f64) as u32;
            let vb = (ub * config.distinct_b as f64) as u32;
            let with_b = run(&ds, PlanId::TradIndexA, Query::both(va, vb, OutputFlavor::Rowids));
            let all_b = run(&ds, PlanId::TradIndexA, Query::both(va, config.distinct_b as u32, OutputFlavor::Rowids));
            proptest::prop_assert_eq!(with_b.cost, all_b.cost);
        }
    }
}
