//! Selectivity grids and cost surfaces.
//!
//! A grid axis sweeps an exponent `e`; the threshold at `e` is `D / 2^e`, so
//! neighbouring points differ in selectivity by a factor of `2^step`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{execute_plan, ExecConfig, ExecError, OutputFlavor, PlanId, Query};
use crate::storage::{Dataset, DatasetConfig};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SweepError {
    #[error("grid needs one or two axes, got {0}")]
    AxisCount(usize),
    #[error("a two-dimensional grid sweeps column a on axis 1 and column b on axis 2")]
    AxisOrder,
    #[error("axis exponent range [{min}, {max}] with step {step} is invalid")]
    AxisRange { min: u32, max: u32, step: u32 },
    #[error("exponent {exponent} does not give an integer threshold for {distinct} distinct values")]
    ExponentTooLarge { exponent: u32, distinct: usize },
    #[error("no plans requested")]
    NoPlans,
    #[error("surface needs at least two plans to compare, has {0}")]
    TooFewPlans(usize),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub dimension: Dimension,
    #[serde(default)]
    pub exponent_min: u32,
    #[serde(default = "default_exponent_max")]
    pub exponent_max: u32,
    #[serde(default = "default_step")]
    pub step: u32,
}

fn default_exponent_max() -> u32 {
    16
}

fn default_step() -> u32 {
    1
}

impl AxisSpec {
    pub fn new(dimension: Dimension, exponent_min: u32, exponent_max: u32) -> Self {
        Self {
            dimension,
            exponent_min,
            exponent_max,
            step: 1,
        }
    }

    pub fn exponents(&self) -> impl Iterator<Item = u32> {
        (self.exponent_min..=self.exponent_max).step_by(self.step.max(1) as usize)
    }

    fn validate(&self, config: &DatasetConfig) -> Result<(), SweepError> {
        if self.step == 0 || self.exponent_min > self.exponent_max {
            return Err(SweepError::AxisRange {
                min: self.exponent_min,
                max: self.exponent_max,
                step: self.step,
            });
        }
        let distinct = match self.dimension {
            Dimension::A => config.distinct_a,
            Dimension::B => config.distinct_b,
        };
        let max = self.exponents().last().unwrap_or(self.exponent_min);
        if max >= usize::BITS || distinct % (1usize << max) != 0 {
            return Err(SweepError::ExponentTooLarge {
                exponent: max,
                distinct,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub axes: Vec<AxisSpec>,
    #[serde(default)]
    pub output_flavor: OutputFlavor,
    /// Empty means every plan applicable to the grid's query form.
    #[serde(default)]
    pub plans: Vec<PlanId>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::two_d(0, 16, Vec::new())
    }
}

impl GridSpec {
    /// 1-D sweep over column `a` returning full rows.
    pub fn one_d(exponent_max: u32, plans: Vec<PlanId>) -> Self {
        Self {
            axes: vec![AxisSpec::new(Dimension::A, 0, exponent_max)],
            output_flavor: OutputFlavor::Rows,
            plans,
        }
    }

    /// Square 2-D sweep returning rowids.
    pub fn two_d(exponent_min: u32, exponent_max: u32, plans: Vec<PlanId>) -> Self {
        Self {
            axes: vec![
                AxisSpec::new(Dimension::A, exponent_min, exponent_max),
                AxisSpec::new(Dimension::B, exponent_min, exponent_max),
            ],
            output_flavor: OutputFlavor::Rowids,
            plans,
        }
    }

    /// The query shape every grid point shares (thresholds are placeholders).
    pub fn query_form(&self) -> Query {
        let has = |d| self.axes.iter().any(|a| a.dimension == d);
        Query {
            threshold_a: has(Dimension::A).then_some(1),
            threshold_b: has(Dimension::B).then_some(1),
            output: self.output_flavor,
        }
    }

    /// The requested plans in catalog order, or the applicable catalog when
    /// none were requested.
    pub fn resolved_plans(&self) -> Vec<PlanId> {
        if self.plans.is_empty() {
            return PlanId::applicable_plans(&self.query_form());
        }
        let mut plans = self.plans.clone();
        plans.sort_unstable();
        plans.dedup();
        plans
    }

    pub fn validate(&self, config: &DatasetConfig) -> Result<(), SweepError> {
        match self.axes.as_slice() {
            [_] => {}
            [first, second] => {
                if first.dimension != Dimension::A || second.dimension != Dimension::B {
                    return Err(SweepError::AxisOrder);
                }
            }
            other => return Err(SweepError::AxisCount(other.len())),
        }
        for axis in &self.axes {
            axis.validate(config)?;
        }
        let form = self.query_form();
        for plan in self.resolved_plans() {
            plan.check_applicable(&form)?;
        }
        Ok(())
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }
}

/// Exponents of one grid point. 1-D points have no second exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridPoint {
    pub axis1: u32,
    pub axis2: Option<u32>,
}

impl GridPoint {
    pub fn one(e: u32) -> Self {
        Self {
            axis1: e,
            axis2: None,
        }
    }

    pub fn two(e1: u32, e2: u32) -> Self {
        Self {
            axis1: e1,
            axis2: Some(e2),
        }
    }

    pub fn exponent(&self, axis: usize) -> Option<u32> {
        match axis {
            0 => Some(self.axis1),
            1 => self.axis2,
            _ => None,
        }
    }
}

pub fn make_grid(spec: &GridSpec, config: &DatasetConfig) -> Result<Vec<GridPoint>, SweepError> {
    spec.validate(config)?;
    let first: Vec<u32> = spec.axes[0].exponents().collect();
    Ok(match spec.axes.get(1) {
        None => first.into_iter().map(GridPoint::one).collect(),
        Some(second) => {
            let second: Vec<u32> = second.exponents().collect();
            first
                .iter()
                .flat_map(|&e1| second.iter().map(move |&e2| GridPoint::two(e1, e2)))
                .collect()
        }
    })
}

/// The query evaluated at `point`.
pub fn query_at(spec: &GridSpec, config: &DatasetConfig, point: GridPoint) -> Query {
    let mut query = Query {
        threshold_a: None,
        threshold_b: None,
        output: spec.output_flavor,
    };
    for (i, axis) in spec.axes.iter().enumerate() {
        let e = point.exponent(i).expect("point matches grid");
        match axis.dimension {
            Dimension::A => query.threshold_a = Some((config.distinct_a >> e) as u32),
            Dimension::B => query.threshold_b = Some((config.distinct_b >> e) as u32),
        }
    }
    query
}

/// One plan's measurement at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Measurement {
    pub cost: u64,
    pub rand_pages: u64,
    pub seq_pages: u64,
    pub scratch_read: u64,
    pub scratch_write: u64,
    pub rows_examined: u64,
    pub result_count: u64,
    pub result_checksum: u64,
}

/// Per-plan measurements over a grid. `cells[p][i]` belongs to `plans[p]`
/// at `points[i]`; points are sorted lexicographically and plans are in
/// catalog order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostSurface {
    pub dims: usize,
    pub points: Vec<GridPoint>,
    pub plans: Vec<PlanId>,
    pub cells: Vec<Vec<Measurement>>,
}

impl CostSurface {
    pub fn plan_index(&self, plan: PlanId) -> Option<usize> {
        self.plans.iter().position(|&p| p == plan)
    }

    pub fn measurements(&self, plan: PlanId) -> Option<&[Measurement]> {
        self.plan_index(plan).map(|i| self.cells[i].as_slice())
    }

    pub fn costs(&self, plan: PlanId) -> Option<Vec<u64>> {
        self.measurements(plan)
            .map(|m| m.iter().map(|c| c.cost).collect())
    }

    pub fn point_index(&self, point: GridPoint) -> Option<usize> {
        self.points.binary_search(&point).ok()
    }

    /// Distinct exponents along `axis`, ascending.
    pub fn axis_exponents(&self, axis: usize) -> Vec<u32> {
        let mut exps: Vec<u32> = self.points.iter().filter_map(|p| p.exponent(axis)).collect();
        exps.sort_unstable();
        exps.dedup();
        exps
    }

    /// `(rows, cols)` of the grid; a 1-D grid is a single row.
    pub fn shape(&self) -> (usize, usize) {
        match self.dims {
            1 => (1, self.points.len()),
            _ => (self.axis_exponents(0).len(), self.axis_exponents(1).len()),
        }
    }

    /// Point indices of every line parallel to `axis`, each ordered by
    /// ascending exponent along `axis`.
    pub fn lines(&self, axis: usize) -> Vec<Vec<usize>> {
        let (rows, cols) = self.shape();
        match (self.dims, axis) {
            (1, 0) => vec![(0..self.points.len()).collect()],
            (2, 0) => (0..cols)
                .map(|c| (0..rows).map(|r| r * cols + c).collect())
                .collect(),
            (2, 1) => (0..rows)
                .map(|r| (0..cols).map(|c| r * cols + c).collect())
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Structural invariants: sorted unique points matching `dims`, one
    /// measurement per point per plan.
    pub fn is_well_formed(&self) -> bool {
        let dims_ok = self
            .points
            .iter()
            .all(|p| p.axis2.is_some() == (self.dims == 2));
        let (rows, cols) = self.shape();
        dims_ok
            && (self.dims == 1 || self.dims == 2)
            && self.points.windows(2).all(|w| w[0] < w[1])
            && rows * cols == self.points.len()
            && self.plans.windows(2).all(|w| w[0] < w[1])
            && self.cells.len() == self.plans.len()
            && self.cells.iter().all(|c| c.len() == self.points.len())
    }
}

fn measure(
    dataset: &Dataset,
    spec: &GridSpec,
    exec: &ExecConfig,
    point: GridPoint,
    plan: PlanId,
) -> Result<Measurement, SweepError> {
    let query = query_at(spec, dataset.config(), point);
    let r = execute_plan(dataset, plan, &query, exec)?;
    Ok(Measurement {
        cost: r.cost,
        rand_pages: r.ledger.rand_pages,
        seq_pages: r.ledger.seq_pages,
        scratch_read: r.ledger.scratch_pages_read,
        scratch_write: r.ledger.scratch_pages_written,
        rows_examined: r.ledger.rows_examined,
        result_count: r.result_count,
        result_checksum: r.result_checksum,
    })
}

fn prepare(
    dataset: &Dataset,
    spec: &GridSpec,
    exec: &ExecConfig,
) -> Result<(Vec<GridPoint>, Vec<PlanId>), SweepError> {
    exec.validate()?;
    let points = make_grid(spec, dataset.config())?;
    let plans = spec.resolved_plans();
    if plans.is_empty() {
        return Err(SweepError::NoPlans);
    }
    Ok((points, plans))
}

/// Measures the `(point, plan)` pairs in the given order and assembles the
/// surface. `order` indexes the row-major `points x plans` task list.
pub fn run_sweep_in_order(
    dataset: &Dataset,
    spec: &GridSpec,
    exec: &ExecConfig,
    order: &[usize],
) -> Result<CostSurface, SweepError> {
    let (points, plans) = prepare(dataset, spec, exec)?;
    let tasks = points.len() * plans.len();
    let mut cells = vec![vec![Measurement::default(); points.len()]; plans.len()];
    let mut done = vec![false; tasks];
    for task in order.iter().copied().chain(0..tasks).filter(|&t| t < tasks) {
        if std::mem::replace(&mut done[task], true) {
            continue;
        }
        let (pi, pl) = (task / plans.len(), task % plans.len());
        cells[pl][pi] = measure(dataset, spec, exec, points[pi], plans[pl])?;
    }
    Ok(CostSurface {
        dims: spec.dims(),
        points,
        plans,
        cells,
    })
}

/// Measures every plan at every grid point, each with a fresh ledger.
pub fn run_sweep_sequential(
    dataset: &Dataset,
    spec: &GridSpec,
    exec: &ExecConfig,
) -> Result<CostSurface, SweepError> {
    run_sweep_in_order(dataset, spec, exec, &[])
}

/// Like [`run_sweep_sequential`], spreading grid points over worker threads
/// when the `parallel` feature is on. The result does not depend on
/// scheduling.
pub fn run_sweep(
    dataset: &Dataset,
    spec: &GridSpec,
    exec: &ExecConfig,
) -> Result<CostSurface, SweepError> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;

        let (points, plans) = prepare(dataset, spec, exec)?;
        let per_plan: Vec<Vec<Measurement>> = plans
            .iter()
            .map(|&plan| {
                points
                    .par_iter()
                    .map(|&point| measure(dataset, spec, exec, point, plan))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<_, _>>()?;
        Ok(CostSurface {
            dims: spec.dims(),
            points,
            plans,
            cells: per_plan,
        })
    }
    #[cfg(not(feature = "parallel"))]
    run_sweep_sequential(dataset, spec, exec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MismatchKind {
    Count,
    Checksum,
}

/// Two plans that disagree on the result at one point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub point: GridPoint,
    pub plans: (PlanId, PlanId),
    pub kind: MismatchKind,
}

/// Every `(point, plan pair)` whose result counts or checksums differ.
pub fn validate_surface(surface: &CostSurface) -> Result<Vec<Mismatch>, SweepError> {
    if surface.plans.len() < 2 {
        return Err(SweepError::TooFewPlans(surface.plans.len()));
    }
    let mut out = Vec::new();
    for (pi, &point) in surface.points.iter().enumerate() {
        for i in 0..surface.plans.len() {
            for j in i + 1..surface.plans.len() {
                let (x, y) = (&surface.cells[i][pi], &surface.cells[j][pi]);
                let pair = (surface.plans[i], surface.plans[j]);
                if x.result_count != y.result_count {
                    out.push(Mismatch {
                        point,
                        plans: pair,
                        kind: MismatchKind::Count,
                    });
                } else if x.result_checksum != y.result_checksum {
                    out.push(Mismatch {
                        point,
                        plans: pair,
                        kind: MismatchKind::Checksum,
                    });
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::storage::build_dataset;

    fn t16() -> Dataset {
        build_dataset(DatasetConfig::fixture_t16()).unwrap()
    }

    #[test]
    fn grid_enumeration() {
        let config = DatasetConfig::fixture_t16();
        let one = GridSpec::one_d(2, vec![PlanId::TableScan]);
        assert_eq!(
            make_grid(&one, &config).unwrap(),
            vec![GridPoint::one(0), GridPoint::one(1), GridPoint::one(2)]
        );
        let two = GridSpec::two_d(0, 1, vec![PlanId::MergeIntersect]);
        assert_eq!(
            make_grid(&two, &config).unwrap(),
            vec![
                GridPoint::two(0, 0),
                GridPoint::two(0, 1),
                GridPoint::two(1, 0),
                GridPoint::two(1, 1)
            ]
        );
        let default = GridSpec::default();
        assert_eq!(make_grid(&default, &DatasetConfig::default()).unwrap().len(), 289);
        let default_1d = GridSpec::one_d(16, vec![PlanId::TableScan]);
        assert_eq!(make_grid(&default_1d, &DatasetConfig::default()).unwrap().len(), 17);
    }

    #[test]
    fn grid_rejects_fractional_thresholds() {
        let config = DatasetConfig::fixture_t16();
        let spec = GridSpec::one_d(3, vec![PlanId::TableScan]);
        assert_eq!(
            make_grid(&spec, &config),
            Err(SweepError::ExponentTooLarge {
                exponent: 3,
                distinct: 4
            })
        );
    }

    #[test]
    fn grid_rejects_inapplicable_plans() {
        let spec = GridSpec::one_d(2, vec![PlanId::MdamAB]);
        assert!(matches!(
            make_grid(&spec, &DatasetConfig::fixture_t16()),
            Err(SweepError::Exec(ExecError::Inapplicable { .. }))
        ));
    }

    #[test]
    fn t16_table_scan_sweep() {
        let ds = t16();
        let spec = GridSpec::one_d(2, vec![PlanId::TableScan]);
        let s = run_sweep(&ds, &spec, &ExecConfig::default()).unwrap();
        assert_eq!(s.costs(PlanId::TableScan).unwrap(), vec![13, 13, 13]);
        assert!(s.is_well_formed());
    }

    #[test]
    fn t16_two_plan_sweep_agrees() {
        let ds = t16();
        let spec = GridSpec::two_d(0, 1, vec![PlanId::CoveringScanAB, PlanId::MergeIntersect]);
        let s = run_sweep(&ds, &spec, &ExecConfig::default()).unwrap();
        assert_eq!(s.cells.iter().map(Vec::len).sum::<usize>(), 8);
        assert_eq!(validate_surface(&s).unwrap(), Vec::new());
        let counts: Vec<u64> = s.cells[0].iter().map(|m| m.result_count).collect();
        assert_eq!(counts, vec![16, 8, 8, 4]);
    }

    #[test]
    fn empty_plan_list_selects_applicable_catalog() {
        let ds = t16();
        let spec = GridSpec {
            axes: vec![AxisSpec::new(Dimension::A, 0, 1)],
            output_flavor: OutputFlavor::Rows,
            plans: vec![],
        };
        let s = run_sweep(&ds, &spec, &ExecConfig::default()).unwrap();
        assert_eq!(
            s.plans,
            vec![PlanId::TableScan, PlanId::TradIndexA, PlanId::ImprovedIndexA]
        );
    }

    #[test]
    fn validate_surface_reports_injected_fault() {
        let ds = t16();
        let spec = GridSpec::two_d(0, 1, vec![PlanId::CoveringScanAB, PlanId::MergeIntersect]);
        let mut s = run_sweep(&ds, &spec, &ExecConfig::default()).unwrap();
        s.cells[1][2].result_checksum ^= 1;
        assert_eq!(
            validate_surface(&s).unwrap(),
            vec![Mismatch {
                point: GridPoint::two(1, 0),
                plans: (PlanId::MergeIntersect, PlanId::CoveringScanAB),
                kind: MismatchKind::Checksum,
            }]
        );
        let single = CostSurface {
            plans: vec![s.plans[0]],
            cells: vec![s.cells[0].clone()],
            ..s
        };
        assert_eq!(validate_surface(&single), Err(SweepError::TooFewPlans(1)));
    }

    #[test]
    fn order_independence() {
        let config = DatasetConfig {
            distinct_a: 1 << 6,
            distinct_b: 1 << 6,
            ..DatasetConfig::with_rows(12)
        };
        let ds = build_dataset(config).unwrap();
        let spec = GridSpec::two_d(0, 4, vec![]);
        let exec = ExecConfig::default();
        let forward = run_sweep_sequential(&ds, &spec, &exec).unwrap();
        let tasks = forward.points.len() * forward.plans.len();
        let reversed: Vec<usize> = (0..tasks).rev().collect();
        let strided: Vec<usize> = (0..tasks).map(|i| (i * 7) % tasks).collect();
        assert_eq!(run_sweep_in_order(&ds, &spec, &exec, &reversed).unwrap(), forward);
        assert_eq!(run_sweep_in_order(&ds, &spec, &exec, &strided).unwrap(), forward);
        assert_eq!(run_sweep(&ds, &spec, &exec).unwrap(), forward);
    }

    #[test]
    fn result_counts_halve_per_step() {
        let config = DatasetConfig {
            distinct_a: 1 << 6,
            distinct_b: 1 << 6,
            ..DatasetConfig::with_rows(12)
        };
        let ds = build_dataset(config).unwrap();
        let spec = GridSpec::two_d(0, 6, vec![PlanId::CoveringScanAB]);
        let s = run_sweep(&ds, &spec, &ExecConfig::default()).unwrap();
        for (point, m) in s.points.iter().zip(&s.cells[0]) {
            let e = point.axis1 + point.axis2.unwrap();
            if e <= 12 {
                assert_eq!(m.result_count, 4096 >> e, "at {point:?}");
            }
        }
        for axis in 0..2 {
            for line in s.lines(axis) {
                for w in line.windows(2) {
                    assert!(s.cells[0][w[1]].result_count <= s.cells[0][w[0]].result_count);
                }
            }
        }
    }
}
