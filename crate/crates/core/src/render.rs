//! Deterministic SVG robustness maps.
//!
//! Every document is emitted in a fixed element order (row-major for grids)
//! with coordinates printed to three decimals, so identical inputs give
//! identical bytes.

use std::fmt::Write;

use thiserror::Error;

use crate::analyze::{optimal_sets, relative_quotients, AnalyzeError, Tolerance};
use crate::exec::PlanId;
use crate::sweep::CostSurface;

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("nothing to render")]
    Empty,
    #[error("value {0} must be positive")]
    NonPositive(f64),
    #[error("cost {cost} is below the reference minimum {reference}")]
    BelowReference { cost: f64, reference: f64 },
    #[error("quotient {0} is below 1")]
    QuotientBelowOne(f64),
    #[error("cell ({row}, {col}) has an optimal-plan count of zero")]
    ZeroCount { row: usize, col: usize },
    #[error("grid of {rows}x{cols} does not match {values} values")]
    Shape {
        rows: usize,
        cols: usize,
        values: usize,
    },
    #[error("curve {0} does not share the parameters of the first curve")]
    ParamMismatch(String),
}

/// Order-of-magnitude colors, green through red to black.
pub const PALETTE: [&str; 6] = [
    "#1a9850", "#91cf60", "#fee08b", "#fc8d59", "#d73027", "#000000",
];

/// Optimal-plan count shades, lightest for a single optimal plan.
pub const GRAY_RAMP: [&str; 6] = [
    "#f2f2f2", "#cccccc", "#a6a6a6", "#7f7f7f", "#595959", "#262626",
];

const CURVE_COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

pub const MAX_BUCKET: usize = PALETTE.len() - 1;

pub fn palette_color(bucket: usize) -> &'static str {
    PALETTE[bucket.min(MAX_BUCKET)]
}

/// Number of whole decades in `ratio` (>= 1), clamped to the palette.
fn decades(ratio: f64) -> usize {
    let mut bucket = 0;
    let mut bound = 10.0;
    while bucket < MAX_BUCKET && ratio >= bound {
        bucket += 1;
        bound *= 10.0;
    }
    bucket
}

/// `floor(log10(cost / reference_min))` clamped to `[0, 5]`.
pub fn bucket_absolute(cost: f64, reference_min: f64) -> Result<usize, RenderError> {
    if !(reference_min > 0.0) {
        return Err(RenderError::NonPositive(reference_min));
    }
    if !(cost > 0.0) {
        return Err(RenderError::NonPositive(cost));
    }
    if cost < reference_min {
        return Err(RenderError::BelowReference {
            cost,
            reference: reference_min,
        });
    }
    Ok(decades(cost / reference_min))
}

/// `floor(log10(quotient))` clamped to `[0, 5]`; an infinite quotient lands
/// in the last bucket.
pub fn bucket_relative(quotient: f64) -> Result<usize, RenderError> {
    if !(quotient >= 1.0) {
        return Err(RenderError::QuotientBelowOne(quotient));
    }
    Ok(decades(quotient))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapMode {
    Curve,
    Absolute,
    Relative,
    Optimality,
}

impl MapMode {
    pub fn name(self) -> &'static str {
        match self {
            MapMode::Curve => "curve",
            MapMode::Absolute => "absolute",
            MapMode::Relative => "relative",
            MapMode::Optimality => "optimality",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderSpec {
    pub mode: MapMode,
    /// Heatmap cell edge in pixels.
    pub cell_size: u32,
    pub legend: bool,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
}

impl RenderSpec {
    pub fn new(mode: MapMode, title: impl Into<String>) -> Self {
        let (x_label, y_label) = match mode {
            MapMode::Curve => ("selectivity (log2)", "cost units (log10)"),
            _ => ("selectivity of b < vb", "selectivity of a < va"),
        };
        Self {
            mode,
            cell_size: 24,
            legend: true,
            title: title.into(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
        }
    }
}

/// A row-major matrix with the exponent of each row and column.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatGrid<T> {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<T>,
    pub row_exponents: Vec<u32>,
    pub col_exponents: Vec<u32>,
}

impl<T> HeatGrid<T> {
    pub fn new(rows: usize, cols: usize, values: Vec<T>) -> Self {
        Self {
            rows,
            cols,
            values,
            row_exponents: (0..rows as u32).collect(),
            col_exponents: (0..cols as u32).collect(),
        }
    }

    fn check(&self) -> Result<(), RenderError> {
        if self.values.is_empty() {
            return Err(RenderError::Empty);
        }
        if self.rows * self.cols != self.values.len()
            || self.row_exponents.len() != self.rows
            || self.col_exponents.len() != self.cols
        {
            return Err(RenderError::Shape {
                rows: self.rows,
                cols: self.cols,
                values: self.values.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bucketing {
    /// Decades above `reference_min`.
    Absolute { reference_min: f64 },
    /// Decades of a quotient against the best plan.
    Relative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub name: String,
    /// `(parameter, cost)`; both must be positive.
    pub points: Vec<(f64, f64)>,
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(ch),
        }
    }
    out
}

fn open_svg(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.3}" height="{height:.3}" viewBox="0 0 {width:.3} {height:.3}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        out,
        r##"<rect x="0.000" y="0.000" width="{width:.3}" height="{height:.3}" fill="#ffffff"/>"##
    );
}

fn text(out: &mut String, x: f64, y: f64, anchor: &str, body: &str) {
    let _ = writeln!(
        out,
        r#"<text x="{x:.3}" y="{y:.3}" text-anchor="{anchor}">{}</text>"#,
        escape(body)
    );
}

fn fmt_value(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v:.3}")
    }
}

/// One polyline per curve on log2 x / log10 y axes, with a legend.
pub fn render_curves_svg(curves: &[Curve], spec: &RenderSpec) -> Result<String, RenderError> {
    let first = curves.first().ok_or(RenderError::Empty)?;
    if first.points.is_empty() {
        return Err(RenderError::Empty);
    }
    for curve in curves {
        let same = curve.points.len() == first.points.len()
            && curve.points.iter().zip(&first.points).all(|(p, q)| p.0 == q.0);
        if !same {
            return Err(RenderError::ParamMismatch(curve.name.clone()));
        }
        for &(param, cost) in &curve.points {
            for v in [param, cost] {
                if !(v > 0.0) {
                    return Err(RenderError::NonPositive(v));
                }
            }
        }
    }

    let xs: Vec<f64> = first.points.iter().map(|p| p.0.log2()).collect();
    let (mut x_min, mut x_max) = (xs.iter().copied().fold(f64::INFINITY, f64::min), xs.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    if x_max - x_min < 1.0 {
        x_min -= 0.5;
        x_max += 0.5;
    }
    let ys = curves.iter().flat_map(|c| c.points.iter().map(|p| p.1.log10()));
    let (lo, hi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    let y_min = lo.floor();
    let y_max = if hi.ceil() > y_min { hi.ceil() } else { y_min + 1.0 };

    let (left, top, plot_w, plot_h) = (70.0, 40.0, 520.0, 320.0);
    let legend_w = if spec.legend { 170.0 } else { 0.0 };
    let width = left + plot_w + 30.0 + legend_w;
    let height = top + plot_h + 60.0;
    let px = |x: f64| left + (x - x_min) / (x_max - x_min) * plot_w;
    let py = |y: f64| top + plot_h - (y - y_min) / (y_max - y_min) * plot_h;

    let mut out = String::new();
    open_svg(&mut out, width, height);
    text(&mut out, left + plot_w / 2.0, 22.0, "middle", &spec.title);
    let _ = writeln!(
        out,
        r##"<rect class="frame" x="{left:.3}" y="{top:.3}" width="{plot_w:.3}" height="{plot_h:.3}" fill="none" stroke="#333333"/>"##
    );
    let mut tick = x_min.ceil();
    while tick <= x_max {
        let x = px(tick);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.3}" y1="{:.3}" x2="{x:.3}" y2="{:.3}" stroke="#999999"/>"##,
            top + plot_h,
            top + plot_h + 5.0
        );
        text(&mut out, x, top + plot_h + 18.0, "middle", &format!("2^{}", tick as i64));
        tick += 1.0;
    }
    let mut decade = y_min;
    while decade <= y_max {
        let y = py(decade);
        let _ = writeln!(
            out,
            r##"<line x1="{:.3}" y1="{y:.3}" x2="{:.3}" y2="{y:.3}" stroke="#dddddd"/>"##,
            left,
            left + plot_w
        );
        text(&mut out, left - 8.0, y + 4.0, "end", &format!("1e{}", decade as i64));
        decade += 1.0;
    }
    text(&mut out, left + plot_w / 2.0, top + plot_h + 40.0, "middle", &spec.x_label);
    let _ = writeln!(
        out,
        r#"<text x="16.000" y="{:.3}" text-anchor="middle" transform="rotate(-90 16.000 {:.3})">{}</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0,
        escape(&spec.y_label)
    );

    for (i, curve) in curves.iter().enumerate() {
        let color = CURVE_COLORS[i % CURVE_COLORS.len()];
        let coords: Vec<String> = curve
            .points
            .iter()
            .map(|&(p, c)| format!("{:.3},{:.3}", px(p.log2()), py(c.log10())))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline class="curve" data-plan="{}" points="{}" fill="none" stroke="{color}" stroke-width="2.000"/>"#,
            escape(&curve.name),
            coords.join(" ")
        );
    }
    if spec.legend {
        let lx = left + plot_w + 30.0;
        for (i, curve) in curves.iter().enumerate() {
            let color = CURVE_COLORS[i % CURVE_COLORS.len()];
            let y = top + 10.0 + 20.0 * i as f64;
            let _ = writeln!(
                out,
                r#"<line class="legend" x1="{lx:.3}" y1="{y:.3}" x2="{:.3}" y2="{y:.3}" stroke="{color}" stroke-width="2.000"/>"#,
                lx + 24.0
            );
            text(&mut out, lx + 30.0, y + 4.0, "start", &curve.name);
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

struct Cell {
    fill: &'static str,
    tooltip: String,
}

fn grid_document<T>(
    grid: &HeatGrid<T>,
    spec: &RenderSpec,
    cells: Vec<Cell>,
    legend: &[(&'static str, String)],
) -> String {
    let size = f64::from(spec.cell_size.max(1));
    let (left, top) = (80.0, 50.0);
    let plot_w = size * grid.cols as f64;
    let plot_h = size * grid.rows as f64;
    let legend_w = if spec.legend { 190.0 } else { 0.0 };
    let width = left + plot_w + 20.0 + legend_w;
    let legend_h = if spec.legend { 20.0 * legend.len() as f64 + 20.0 } else { 0.0 };
    let height = top + plot_h.max(legend_h) + 60.0;

    let mut out = String::new();
    open_svg(&mut out, width, height);
    text(&mut out, left + plot_w / 2.0, 24.0, "middle", &spec.title);
    for (idx, cell) in cells.iter().enumerate() {
        let (r, c) = (idx / grid.cols, idx % grid.cols);
        let _ = writeln!(
            out,
            r#"<rect class="cell" x="{:.3}" y="{:.3}" width="{size:.3}" height="{size:.3}" fill="{}"><title>{}</title></rect>"#,
            left + size * c as f64,
            top + size * r as f64,
            cell.fill,
            escape(&cell.tooltip)
        );
    }
    for (c, e) in grid.col_exponents.iter().enumerate() {
        text(
            &mut out,
            left + size * (c as f64 + 0.5),
            top + plot_h + 16.0,
            "middle",
            &format!("-{e}"),
        );
    }
    for (r, e) in grid.row_exponents.iter().enumerate() {
        text(
            &mut out,
            left - 6.0,
            top + size * (r as f64 + 0.5) + 4.0,
            "end",
            &format!("-{e}"),
        );
    }
    text(
        &mut out,
        left + plot_w / 2.0,
        top + plot_h + 36.0,
        "middle",
        &format!("{} (log2)", spec.x_label),
    );
    let _ = writeln!(
        out,
        r#"<text x="16.000" y="{:.3}" text-anchor="middle" transform="rotate(-90 16.000 {:.3})">{}</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0,
        escape(&format!("{} (log2)", spec.y_label))
    );
    if spec.legend {
        let lx = left + plot_w + 20.0;
        for (i, (fill, label)) in legend.iter().enumerate() {
            let y = top + 20.0 * i as f64;
            let _ = writeln!(
                out,
                r##"<rect class="legend" x="{lx:.3}" y="{y:.3}" width="14.000" height="14.000" fill="{fill}" stroke="#333333"/>"##
            );
            text(&mut out, lx + 20.0, y + 11.0, "start", label);
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Heatmap colored by order-of-magnitude buckets, with a six-entry legend.
pub fn render_heatmap_svg(
    grid: &HeatGrid<f64>,
    bucketing: Bucketing,
    spec: &RenderSpec,
) -> Result<String, RenderError> {
    grid.check()?;
    let cells = grid
        .values
        .iter()
        .map(|&v| {
            let bucket = match bucketing {
                Bucketing::Absolute { reference_min } => bucket_absolute(v, reference_min)?,
                Bucketing::Relative => bucket_relative(v)?,
            };
            Ok(Cell {
                fill: palette_color(bucket),
                tooltip: fmt_value(v),
            })
        })
        .collect::<Result<Vec<_>, RenderError>>()?;
    let legend: Vec<(&'static str, String)> = (0..PALETTE.len())
        .map(|b| {
            let range = if b == MAX_BUCKET {
                format!(">= 1e{b}")
            } else {
                format!("1e{b} .. 1e{}", b + 1)
            };
            let label = match bucketing {
                Bucketing::Absolute { .. } => format!("{range} x min"),
                Bucketing::Relative => format!("{range} x best"),
            };
            (PALETTE[b], label)
        })
        .collect();
    Ok(grid_document(grid, spec, cells, &legend))
}

/// Optimality map shaded by the number of near-optimal plans per point.
pub fn render_optimality_svg(
    grid: &HeatGrid<usize>,
    spec: &RenderSpec,
) -> Result<String, RenderError> {
    grid.check()?;
    let cells = grid
        .values
        .iter()
        .enumerate()
        .map(|(i, &count)| {
            if count == 0 {
                return Err(RenderError::ZeroCount {
                    row: i / grid.cols,
                    col: i % grid.cols,
                });
            }
            Ok(Cell {
                fill: GRAY_RAMP[(count - 1).min(GRAY_RAMP.len() - 1)],
                tooltip: format!("{count} optimal"),
            })
        })
        .collect::<Result<Vec<_>, RenderError>>()?;
    let legend: Vec<(&'static str, String)> = (0..GRAY_RAMP.len())
        .map(|i| {
            let label = match i {
                0 => "1 plan".to_string(),
                i if i == GRAY_RAMP.len() - 1 => format!("{}+ plans", i + 1),
                i => format!("{} plans", i + 1),
            };
            (GRAY_RAMP[i], label)
        })
        .collect();
    Ok(grid_document(grid, spec, cells, &legend))
}

/// Failure to turn a cost surface into a map.
#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Analyze(#[from] AnalyzeError),
    #[error("{mode} maps need a {needed}-D surface, got {got}-D")]
    Dims {
        mode: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("{0} maps need a plan")]
    PlanRequired(&'static str),
    #[error("plan {0} is not part of the surface")]
    UnknownPlan(PlanId),
}

fn require_dims(surface: &CostSurface, mode: MapMode, needed: usize) -> Result<(), MapError> {
    if surface.dims == needed {
        Ok(())
    } else {
        Err(MapError::Dims {
            mode: mode.name(),
            needed,
            got: surface.dims,
        })
    }
}

fn heat_grid<T>(surface: &CostSurface, values: Vec<T>) -> HeatGrid<T> {
    let (rows, cols) = surface.shape();
    HeatGrid {
        rows,
        cols,
        values,
        row_exponents: surface.axis_exponents(0),
        col_exponents: surface.axis_exponents(1),
    }
}

/// Draws one map of `surface`.
///
/// `curve` takes a 1-D surface and draws every plan, or only `plan` when
/// given. `absolute` and `relative` draw `plan` over a 2-D surface;
/// absolute buckets are decades above the cheapest positive cost anywhere
/// on the surface, and zero-cost cells share the lowest bucket.
/// `optimality` shades each 2-D point by its number of plans within
/// `tolerance` of the best.
pub fn render_surface(
    surface: &CostSurface,
    mode: MapMode,
    plan: Option<PlanId>,
    tolerance: Tolerance,
) -> Result<String, MapError> {
    let plan_index = |plan: Option<PlanId>| -> Result<usize, MapError> {
        let plan = plan.ok_or(MapError::PlanRequired(mode.name()))?;
        surface.plan_index(plan).ok_or(MapError::UnknownPlan(plan))
    };
    match mode {
        MapMode::Curve => {
            require_dims(surface, mode, 1)?;
            let selected: Vec<usize> = match plan {
                Some(_) => vec![plan_index(plan)?],
                None => (0..surface.plans.len()).collect(),
            };
            let curves: Vec<Curve> = selected
                .into_iter()
                .map(|p| Curve {
                    name: surface.plans[p].name().to_string(),
                    points: surface
                        .points
                        .iter()
                        .zip(&surface.cells[p])
                        .map(|(pt, m)| ((-f64::from(pt.axis1)).exp2(), m.cost as f64))
                        .collect(),
                })
                .collect();
            let spec = RenderSpec::new(mode, "cost by selectivity");
            Ok(render_curves_svg(&curves, &spec)?)
        }
        MapMode::Absolute => {
            require_dims(surface, mode, 2)?;
            let p = plan_index(plan)?;
            let reference_min = surface
                .cells
                .iter()
                .flatten()
                .map(|m| m.cost)
                .filter(|&c| c > 0)
                .min()
                .unwrap_or(1) as f64;
            let values = surface.cells[p]
                .iter()
                .map(|m| (m.cost as f64).max(reference_min))
                .collect();
            let spec = RenderSpec::new(mode, format!("{} cost", surface.plans[p]));
            Ok(render_heatmap_svg(
                &heat_grid(surface, values),
                Bucketing::Absolute { reference_min },
                &spec,
            )?)
        }
        MapMode::Relative => {
            require_dims(surface, mode, 2)?;
            let p = plan_index(plan)?;
            let quotients = relative_quotients(surface)?;
            let spec = RenderSpec::new(mode, format!("{} cost over best plan", surface.plans[p]));
            Ok(render_heatmap_svg(
                &heat_grid(surface, quotients.per_plan[p].clone()),
                Bucketing::Relative,
                &spec,
            )?)
        }
        MapMode::Optimality => {
            require_dims(surface, mode, 2)?;
            let map = optimal_sets(surface, tolerance)?;
            let spec = RenderSpec::new(mode, "plans within tolerance of the best");
            Ok(render_optimality_svg(&heat_grid(surface, map.counts), &spec)?)
        }
    }
}
