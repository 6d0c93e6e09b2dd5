//! Robustness diagnostics over cost surfaces.
//!
//! Curve-level checks work on plain slices so they can be applied to any
//! measured series; the surface-level wrappers walk every grid line of one
//! plan and report offending point pairs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::PlanId;
use crate::sweep::{validate_surface, CostSurface, GridPoint, Mismatch, SweepError};

/// Relative slack applied to monotonicity and flattening comparisons.
pub const SLACK: f64 = 1e-9;

/// Default jump factor for discontinuity detection. Neighbouring grid points
/// differ by 2x in result size, so linear-cost plans move by about 2x.
pub const DEFAULT_JUMP_FACTOR: f64 = 3.0;

#[derive(Debug, Error, PartialEq)]
pub enum AnalyzeError {
    #[error("plan {0} is not part of the surface")]
    UnknownPlan(PlanId),
    #[error("surface has no axis {0}")]
    UnknownAxis(usize),
    #[error("surface has no plans")]
    NoPlans,
    #[error("a curve needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("curve parameters must be strictly increasing")]
    NotIncreasing,
    #[error("curves have different lengths")]
    LengthMismatch,
    #[error("tolerance must be finite and non-negative, got {0}")]
    InvalidTolerance(f64),
    #[error("jump factor must exceed 1, got {0}")]
    InvalidJumpFactor(f64),
    #[error("plans disagree on results at {} (point, plan pair) cells", .0.len())]
    Validation(Vec<Mismatch>),
    #[error(transparent)]
    Sweep(#[from] SweepError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Monotonicity,
    Flattening,
    Discontinuity,
}

/// A pair of neighbouring measurements that breaks a robustness rule.
///
/// `points` and `values` are ordered by ascending exponent along `axis`
/// (ascending row count for flattening). For monotonicity and discontinuity
/// the values are the two costs; for flattening they are the two slopes and
/// the points delimit the interval whose slope rose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// `None` for the best-plan envelope.
    pub plan: Option<PlanId>,
    pub axis: usize,
    pub points: (GridPoint, GridPoint),
    pub values: (f64, f64),
}

/// A violation located by index in a plain series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveViolation {
    pub index: usize,
    pub values: (f64, f64),
}

/// Pairs `(i, i + 1)` of a cost series ordered by increasing result size
/// where the smaller result costs more.
pub fn monotone_violations(costs: &[f64]) -> Vec<CurveViolation> {
    costs
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] > w[1] * (1.0 + SLACK))
        .map(|(index, w)| CurveViolation {
            index,
            values: (w[0], w[1]),
        })
        .collect()
}

/// Slopes per result row between consecutive points of `(rows, cost)`.
fn slopes(curve: &[(f64, f64)]) -> Vec<f64> {
    curve
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
        .collect()
}

/// Flags `i` where the slope over `[i+1, i+2]` exceeds the slope over
/// `[i, i+1]`: the cost curve should flatten as results grow.
pub fn check_flattening(curve: &[(f64, f64)]) -> Result<Vec<CurveViolation>, AnalyzeError> {
    if curve.len() < 3 {
        return Err(AnalyzeError::TooFewPoints {
            needed: 3,
            got: curve.len(),
        });
    }
    if curve.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(AnalyzeError::NotIncreasing);
    }
    let d = slopes(curve);
    Ok(d.windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] > w[0] + w[0].abs() * SLACK)
        .map(|(index, w)| CurveViolation {
            index,
            values: (w[0], w[1]),
        })
        .collect())
}

/// Neighbouring pairs whose cost ratio exceeds `jump_factor`. Costs below one
/// unit are treated as one unit in the denominator.
pub fn jump_violations(costs: &[f64], jump_factor: f64) -> Vec<CurveViolation> {
    costs
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0].max(w[1]) / w[0].min(w[1]).max(1.0) > jump_factor)
        .map(|(index, w)| CurveViolation {
            index,
            values: (w[0], w[1]),
        })
        .collect()
}

fn plan_costs(surface: &CostSurface, plan: PlanId) -> Result<Vec<f64>, AnalyzeError> {
    surface
        .measurements(plan)
        .map(|m| m.iter().map(|c| c.cost as f64).collect())
        .ok_or(AnalyzeError::UnknownPlan(plan))
}

fn check_axis(surface: &CostSurface, axis: usize) -> Result<(), AnalyzeError> {
    if axis >= surface.dims {
        Err(AnalyzeError::UnknownAxis(axis))
    } else {
        Ok(())
    }
}

/// Along every line parallel to `axis`, flags neighbours where the point
/// with the larger exponent (fewer result rows) costs more.
pub fn check_monotone(
    surface: &CostSurface,
    plan: PlanId,
    axis: usize,
) -> Result<Vec<Violation>, AnalyzeError> {
    check_axis(surface, axis)?;
    let costs = plan_costs(surface, plan)?;
    let mut out = Vec::new();
    for line in surface.lines(axis) {
        // Reverse so the series runs from few rows to many.
        let by_rows: Vec<f64> = line.iter().rev().map(|&i| costs[i]).collect();
        for v in monotone_violations(&by_rows) {
            let (more, fewer) = (line[line.len() - 2 - v.index], line[line.len() - 1 - v.index]);
            out.push(Violation {
                kind: ViolationKind::Monotonicity,
                plan: Some(plan),
                axis,
                points: (surface.points[more], surface.points[fewer]),
                values: (costs[more], costs[fewer]),
            });
        }
    }
    out.sort_by_key(|v| v.points);
    Ok(out)
}

/// Flattening check for a 1-D surface, using measured result counts as the
/// row axis. Returns an empty list when the curve has fewer than three
/// distinct result sizes.
pub fn check_flattening_surface(
    surface: &CostSurface,
    plan: PlanId,
) -> Result<Vec<Violation>, AnalyzeError> {
    check_axis(surface, 0)?;
    let cells = surface
        .measurements(plan)
        .ok_or(AnalyzeError::UnknownPlan(plan))?;
    if surface.dims != 1 {
        return Ok(Vec::new());
    }
    let order: Vec<usize> = (0..surface.points.len()).rev().collect();
    let curve: Vec<(f64, f64)> = order
        .iter()
        .map(|&i| (cells[i].result_count as f64, cells[i].cost as f64))
        .collect();
    let flagged = match check_flattening(&curve) {
        Ok(v) => v,
        Err(AnalyzeError::TooFewPoints { .. } | AnalyzeError::NotIncreasing) => {
            return Ok(Vec::new())
        }
        Err(e) => return Err(e),
    };
    Ok(flagged
        .into_iter()
        .map(|v| Violation {
            kind: ViolationKind::Flattening,
            plan: Some(plan),
            axis: 0,
            points: (
                surface.points[order[v.index + 1]],
                surface.points[order[v.index + 2]],
            ),
            values: v.values,
        })
        .collect())
}

fn discontinuities_in(
    surface: &CostSurface,
    costs: &[f64],
    plan: Option<PlanId>,
    jump_factor: f64,
) -> Result<Vec<Violation>, AnalyzeError> {
    if !(jump_factor > 1.0) {
        return Err(AnalyzeError::InvalidJumpFactor(jump_factor));
    }
    let mut out = Vec::new();
    for axis in 0..surface.dims {
        for line in surface.lines(axis) {
            let series: Vec<f64> = line.iter().map(|&i| costs[i]).collect();
            for v in jump_violations(&series, jump_factor) {
                let (from, to) = (line[v.index], line[v.index + 1]);
                out.push(Violation {
                    kind: ViolationKind::Discontinuity,
                    plan,
                    axis,
                    points: (surface.points[from], surface.points[to]),
                    values: v.values,
                });
            }
        }
    }
    out.sort_by(|x, y| (x.axis, x.points).cmp(&(y.axis, y.points)));
    Ok(out)
}

/// Neighbouring grid points (along either axis) whose costs jump by more
/// than `jump_factor`.
pub fn detect_discontinuities(
    surface: &CostSurface,
    plan: PlanId,
    jump_factor: f64,
) -> Result<Vec<Violation>, AnalyzeError> {
    let costs = plan_costs(surface, plan)?;
    discontinuities_in(surface, &costs, Some(plan), jump_factor)
}

/// Per-point minimum cost and the exact set of plans that reach it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Envelope {
    pub min: Vec<u64>,
    pub argmin: Vec<Vec<PlanId>>,
}

pub fn best_envelope(surface: &CostSurface) -> Result<Envelope, AnalyzeError> {
    if surface.plans.is_empty() {
        return Err(AnalyzeError::NoPlans);
    }
    let mut min = Vec::with_capacity(surface.points.len());
    let mut argmin = Vec::with_capacity(surface.points.len());
    for pi in 0..surface.points.len() {
        let best = surface.cells.iter().map(|c| c[pi].cost).min().unwrap_or(0);
        min.push(best);
        argmin.push(
            surface
                .plans
                .iter()
                .zip(&surface.cells)
                .filter(|(_, c)| c[pi].cost == best)
                .map(|(&p, _)| p)
                .collect(),
        );
    }
    Ok(Envelope { min, argmin })
}

/// Discontinuities of the best-plan envelope.
pub fn envelope_discontinuities(
    surface: &CostSurface,
    jump_factor: f64,
) -> Result<Vec<Violation>, AnalyzeError> {
    let envelope = best_envelope(surface)?;
    let costs: Vec<f64> = envelope.min.iter().map(|&c| c as f64).collect();
    discontinuities_in(surface, &costs, None, jump_factor)
}

/// Cost over the cheapest cost at one point. With a zero minimum, zero-cost
/// plans get 1 and every other plan gets `+inf`.
pub fn quotients_at(costs: &[f64]) -> Vec<f64> {
    let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    costs
        .iter()
        .map(|&c| {
            if c == min {
                1.0
            } else if min == 0.0 {
                f64::INFINITY
            } else {
                c / min
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuotientStats {
    /// Largest finite quotient and where it occurs (first in point order).
    pub max_finite: f64,
    pub max_point: GridPoint,
    pub infinite_points: usize,
}

/// `per_plan[p][i]` is the quotient of `plans[p]` at `points[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quotients {
    pub per_plan: Vec<Vec<f64>>,
    pub stats: Vec<QuotientStats>,
}

pub fn relative_quotients(surface: &CostSurface) -> Result<Quotients, AnalyzeError> {
    if surface.plans.is_empty() {
        return Err(AnalyzeError::NoPlans);
    }
    let mut per_plan = vec![Vec::with_capacity(surface.points.len()); surface.plans.len()];
    for pi in 0..surface.points.len() {
        let costs: Vec<f64> = surface.cells.iter().map(|c| c[pi].cost as f64).collect();
        for (p, q) in quotients_at(&costs).into_iter().enumerate() {
            per_plan[p].push(q);
        }
    }
    let stats = per_plan
        .iter()
        .map(|qs| {
            let mut stat = QuotientStats {
                max_finite: 1.0,
                max_point: surface.points[0],
                infinite_points: 0,
            };
            for (i, &q) in qs.iter().enumerate() {
                if q.is_infinite() {
                    stat.infinite_points += 1;
                } else if q > stat.max_finite {
                    stat.max_finite = q;
                    stat.max_point = surface.points[i];
                }
            }
            stat
        })
        .collect();
    Ok(Quotients { per_plan, stats })
}

/// Equivalence tolerance for optimality: absolute cost units or a fraction
/// of the best cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum Tolerance {
    Absolute(f64),
    Relative(f64),
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::Relative(0.01)
    }
}

impl Tolerance {
    pub fn value(self) -> f64 {
        match self {
            Tolerance::Absolute(v) | Tolerance::Relative(v) => v,
        }
    }

    pub fn validate(self) -> Result<(), AnalyzeError> {
        let v = self.value();
        if v.is_finite() && v >= 0.0 {
            Ok(())
        } else {
            Err(AnalyzeError::InvalidTolerance(v))
        }
    }

    pub fn admits(self, cost: f64, min: f64) -> bool {
        match self {
            Tolerance::Absolute(t) => cost <= min + t,
            Tolerance::Relative(t) => cost <= min * (1.0 + t),
        }
    }
}

/// Indices of the costs within `tolerance` of the minimum.
pub fn optimal_set(costs: &[f64], tolerance: Tolerance) -> Vec<usize> {
    let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    (0..costs.len())
        .filter(|&i| tolerance.admits(costs[i], min))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityMap {
    pub tolerance: Tolerance,
    /// Near-optimal plans per point, in catalog order.
    pub sets: Vec<Vec<PlanId>>,
    /// `masks[p][i]`: `plans[p]` is near-optimal at `points[i]`.
    pub masks: Vec<Vec<bool>>,
    pub counts: Vec<usize>,
}

pub fn optimal_sets(
    surface: &CostSurface,
    tolerance: Tolerance,
) -> Result<OptimalityMap, AnalyzeError> {
    tolerance.validate()?;
    if surface.plans.is_empty() {
        return Err(AnalyzeError::NoPlans);
    }
    let mut masks = vec![vec![false; surface.points.len()]; surface.plans.len()];
    let mut sets = Vec::with_capacity(surface.points.len());
    for pi in 0..surface.points.len() {
        let costs: Vec<f64> = surface.cells.iter().map(|c| c[pi].cost as f64).collect();
        let set = optimal_set(&costs, tolerance);
        for &p in &set {
            masks[p][pi] = true;
        }
        sets.push(set.into_iter().map(|p| surface.plans[p]).collect::<Vec<_>>());
    }
    let counts = sets.iter().map(Vec::len).collect();
    Ok(OptimalityMap {
        tolerance,
        sets,
        masks,
        counts,
    })
}

/// A boolean grid in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<bool>,
}

impl Mask {
    pub fn new(rows: usize, cols: usize, cells: Vec<bool>) -> Self {
        assert_eq!(rows * cols, cells.len(), "mask dimensions");
        Self { rows, cols, cells }
    }

    pub fn from_rows(rows: &[&[bool]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.cells[r * self.cols + c]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BoundingBox {
    pub row_min: usize,
    pub row_max: usize,
    pub col_min: usize,
    pub col_max: usize,
}

impl BoundingBox {
    pub fn area(&self) -> usize {
        (self.row_max - self.row_min + 1) * (self.col_max - self.col_min + 1)
    }
}

/// A maximal 4-connected set of true cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Region {
    /// `(row, col)` cells in row-major order.
    pub members: Vec<(usize, usize)>,
    pub size: usize,
    pub bounding_box: BoundingBox,
    pub fill_ratio: f64,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Two-pass connected-component labelling with union-find. Regions are
/// ordered by their first cell in row-major order.
pub fn extract_regions(mask: &Mask) -> Vec<Region> {
    let (rows, cols) = (mask.rows, mask.cols);
    let mut parent: Vec<usize> = (0..rows * cols).collect();
    for r in 0..rows {
        for c in 0..cols {
            if !mask.get(r, c) {
                continue;
            }
            let here = r * cols + c;
            if c > 0 && mask.get(r, c - 1) {
                let (a, b) = (find(&mut parent, here), find(&mut parent, here - 1));
                parent[a.max(b)] = a.min(b);
            }
            if r > 0 && mask.get(r - 1, c) {
                let (a, b) = (find(&mut parent, here), find(&mut parent, here - cols));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut by_root: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for r in 0..rows {
        for c in 0..cols {
            if mask.get(r, c) {
                let root = find(&mut parent, r * cols + c);
                by_root.entry(root).or_default().push((r, c));
            }
        }
    }
    // Roots are the smallest index of each component, i.e. its first cell.
    by_root
        .into_values()
        .map(|members| {
            let bounding_box = BoundingBox {
                row_min: members.iter().map(|m| m.0).min().unwrap_or(0),
                row_max: members.iter().map(|m| m.0).max().unwrap_or(0),
                col_min: members.iter().map(|m| m.1).min().unwrap_or(0),
                col_max: members.iter().map(|m| m.1).max().unwrap_or(0),
            };
            let size = members.len();
            Region {
                fill_ratio: size as f64 / bounding_box.area() as f64,
                members,
                size,
                bounding_box,
            }
        })
        .collect()
}

/// A sign change between two curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    /// Parameters bracketing the crossing.
    pub interval: (f64, f64),
    /// Interpolated crossing parameter.
    pub param: f64,
    /// The curves tie exactly at grid points instead of crossing between them.
    pub degenerate: bool,
}

/// Where `first - second` changes sign. Between grid points the crossing is
/// interpolated linearly in (parameter, log cost). Runs of exact ties that
/// do not cover the whole curve are reported as degenerate crossings at the
/// tied parameters.
pub fn find_break_even(
    first: &[f64],
    second: &[f64],
    params: &[f64],
) -> Result<Vec<Crossing>, AnalyzeError> {
    if first.len() != second.len() || first.len() != params.len() {
        return Err(AnalyzeError::LengthMismatch);
    }
    if params.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AnalyzeError::NotIncreasing);
    }
    let sign = |i: usize| {
        first[i]
            .partial_cmp(&second[i])
            .map_or(0, |o| o as i8)
    };
    let n = params.len();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        if sign(i) == 0 {
            let start = i;
            while i < n && sign(i) == 0 {
                i += 1;
            }
            if !(start == 0 && i == n) {
                out.push(Crossing {
                    interval: (params[start], params[i - 1]),
                    param: params[start],
                    degenerate: true,
                });
            }
            continue;
        }
        if i + 1 < n && sign(i) * sign(i + 1) < 0 {
            out.push(Crossing {
                interval: (params[i], params[i + 1]),
                param: interpolate_crossing(
                    (params[i], params[i + 1]),
                    (first[i], first[i + 1]),
                    (second[i], second[i + 1]),
                ),
                degenerate: false,
            });
        }
        i += 1;
    }
    Ok(out)
}

fn interpolate_crossing(p: (f64, f64), c1: (f64, f64), c2: (f64, f64)) -> f64 {
    let positive = c1.0 > 0.0 && c1.1 > 0.0 && c2.0 > 0.0 && c2.1 > 0.0;
    let (d0, d1) = if positive {
        (c1.0.ln() - c2.0.ln(), c1.1.ln() - c2.1.ln())
    } else {
        (c1.0 - c2.0, c1.1 - c2.1)
    };
    p.0 + d0 / (d0 - d1) * (p.1 - p.0)
}

/// Break-even points of two plans on a 1-D surface.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakEven {
    pub plans: (PlanId, PlanId),
    /// Crossings in exponent units.
    pub crossings: Vec<Crossing>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanReport {
    pub plan: PlanId,
    pub violations: Vec<Violation>,
    pub max_quotient: f64,
    pub max_quotient_point: GridPoint,
    pub infinite_quotient_points: usize,
    pub optimal_points: usize,
    pub regions: Vec<Region>,
    pub fragmented: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessReport {
    pub dims: usize,
    pub point_count: usize,
    pub tolerance: Tolerance,
    pub jump_factor: f64,
    pub plans: Vec<PlanReport>,
    pub break_evens: Vec<BreakEven>,
    /// Number of points per optimal-set size.
    pub optimal_count_histogram: BTreeMap<usize, usize>,
    pub envelope_discontinuities: Vec<Violation>,
}

/// Near-optimal mask of plan index `p` shaped like the surface grid.
pub fn plan_mask(surface: &CostSurface, map: &OptimalityMap, p: usize) -> Mask {
    let (rows, cols) = surface.shape();
    Mask::new(rows, cols, map.masks[p].clone())
}

pub fn build_report(
    surface: &CostSurface,
    tolerance: Tolerance,
    jump_factor: f64,
) -> Result<RobustnessReport, AnalyzeError> {
    tolerance.validate()?;
    if !(jump_factor > 1.0) {
        return Err(AnalyzeError::InvalidJumpFactor(jump_factor));
    }
    if surface.plans.len() >= 2 {
        let mismatches = validate_surface(surface)?;
        if !mismatches.is_empty() {
            return Err(AnalyzeError::Validation(mismatches));
        }
    }
    let quotients = relative_quotients(surface)?;
    let optimality = optimal_sets(surface, tolerance)?;

    let mut plans = Vec::with_capacity(surface.plans.len());
    for (p, &plan) in surface.plans.iter().enumerate() {
        let mut violations = Vec::new();
        for axis in 0..surface.dims {
            violations.extend(check_monotone(surface, plan, axis)?);
        }
        violations.extend(check_flattening_surface(surface, plan)?);
        violations.extend(detect_discontinuities(surface, plan, jump_factor)?);
        let regions = extract_regions(&plan_mask(surface, &optimality, p));
        let stats = &quotients.stats[p];
        plans.push(PlanReport {
            plan,
            violations,
            max_quotient: stats.max_finite,
            max_quotient_point: stats.max_point,
            infinite_quotient_points: stats.infinite_points,
            optimal_points: optimality.masks[p].iter().filter(|&&m| m).count(),
            fragmented: regions.len() > 1,
            regions,
        });
    }

    let mut break_evens = Vec::new();
    if surface.dims == 1 {
        let params: Vec<f64> = surface.points.iter().map(|p| p.axis1 as f64).collect();
        for i in 0..surface.plans.len() {
            for j in i + 1..surface.plans.len() {
                let c = |k: usize| -> Vec<f64> {
                    surface.cells[k].iter().map(|m| m.cost as f64).collect()
                };
                break_evens.push(BreakEven {
                    plans: (surface.plans[i], surface.plans[j]),
                    crossings: find_break_even(&c(i), &c(j), &params)?,
                });
            }
        }
    }

    let mut optimal_count_histogram = BTreeMap::new();
    for &count in &optimality.counts {
        *optimal_count_histogram.entry(count).or_insert(0) += 1;
    }

    Ok(RobustnessReport {
        dims: surface.dims,
        point_count: surface.points.len(),
        tolerance,
        jump_factor,
        plans,
        break_evens,
        optimal_count_histogram,
        envelope_discontinuities: envelope_discontinuities(surface, jump_factor)?,
    })
}
