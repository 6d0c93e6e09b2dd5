//! Browser demo: each export sweeps a freshly generated dataset and returns
//! an SVG document for the page to drop into the DOM.

use robustmap::analyze::Tolerance;
use robustmap::render::{render_surface, MapMode};
use robustmap::sweep::run_sweep_sequential;
use robustmap::{build_dataset, DatasetConfig, ExecConfig, GridSpec, PlanId, SpillPolicy};
use wasm_bindgen::prelude::*;

/// Row counts beyond this take too long for an interactive page.
pub const MAX_LOG2_ROWS: u32 = 18;
/// Largest exponent on either axis of the 2-D maps.
pub const MAX_GRID_EXPONENT: u32 = 12;

fn dataset_config(log2_rows: u32, rows_per_page: usize) -> Result<DatasetConfig, String> {
    if !(4..=MAX_LOG2_ROWS).contains(&log2_rows) {
        return Err(format!("row count must be 2^4 .. 2^{MAX_LOG2_ROWS}"));
    }
    let config = DatasetConfig {
        rows_per_table_page: rows_per_page,
        ..DatasetConfig::with_rows(log2_rows)
    };
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

fn grid_max(config: &DatasetConfig) -> u32 {
    config.distinct_a.trailing_zeros().min(MAX_GRID_EXPONENT)
}

/// Table scan, traditional and improved index scans over a 1-D sweep.
pub fn curves(log2_rows: u32, rows_per_page: usize, rand_weight: u64) -> Result<String, String> {
    let config = dataset_config(log2_rows, rows_per_page)?;
    let mut exec = ExecConfig::default();
    exec.weights.rand = rand_weight;
    let spec = GridSpec::one_d(config.distinct_a.trailing_zeros(), Vec::new());
    let dataset = build_dataset(config).map_err(|e| e.to_string())?;
    let surface = run_sweep_sequential(&dataset, &spec, &exec).map_err(|e| e.to_string())?;
    render_surface(&surface, MapMode::Curve, None, Tolerance::default()).map_err(|e| e.to_string())
}

/// Absolute or relative map of one plan over a 2-D sweep.
pub fn plan_map(
    log2_rows: u32,
    plan: &str,
    relative: bool,
    hash_memory: usize,
    graceful: bool,
) -> Result<String, String> {
    let plan: PlanId = plan.parse().map_err(|e: robustmap::exec::UnknownPlan| e.to_string())?;
    let config = dataset_config(log2_rows, 64)?;
    let exec = ExecConfig {
        hash_memory,
        spill_policy: if graceful {
            SpillPolicy::Graceful
        } else {
            SpillPolicy::Abrupt
        },
        ..ExecConfig::default()
    };
    // Relative maps need every competitor; absolute maps only the one plan.
    let plans = if relative { Vec::new() } else { vec![plan] };
    let spec = GridSpec::two_d(0, grid_max(&config), plans);
    let dataset = build_dataset(config).map_err(|e| e.to_string())?;
    let surface = run_sweep_sequential(&dataset, &spec, &exec).map_err(|e| e.to_string())?;
    let mode = if relative {
        MapMode::Relative
    } else {
        MapMode::Absolute
    };
    render_surface(&surface, mode, Some(plan), Tolerance::default()).map_err(|e| e.to_string())
}

/// Number of plans within `tolerance_percent` of the best at each point.
pub fn optimality(log2_rows: u32, tolerance_percent: f64) -> Result<String, String> {
    let config = dataset_config(log2_rows, 64)?;
    let spec = GridSpec::two_d(0, grid_max(&config), Vec::new());
    let dataset = build_dataset(config).map_err(|e| e.to_string())?;
    let surface = run_sweep_sequential(&dataset, &spec, &ExecConfig::default())
        .map_err(|e| e.to_string())?;
    let tolerance = Tolerance::Relative(tolerance_percent / 100.0);
    render_surface(&surface, MapMode::Optimality, None, tolerance).map_err(|e| e.to_string())
}

/// Names of every plan usable in a 2-D map.
#[wasm_bindgen(js_name = planNames)]
pub fn plan_names() -> Vec<String> {
    PlanId::ALL.iter().map(|p| p.name().to_string()).collect()
}

#[wasm_bindgen(js_name = curveSvg)]
pub fn curve_svg(log2_rows: u32, rows_per_page: u32, rand_weight: u32) -> Result<String, JsError> {
    curves(log2_rows, rows_per_page as usize, u64::from(rand_weight)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = planMapSvg)]
pub fn plan_map_svg(
    log2_rows: u32,
    plan: &str,
    relative: bool,
    hash_memory: u32,
    graceful: bool,
) -> Result<String, JsError> {
    plan_map(log2_rows, plan, relative, hash_memory as usize, graceful)
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = optimalitySvg)]
pub fn optimality_svg(log2_rows: u32, tolerance_percent: f64) -> Result<String, JsError> {
    optimality(log2_rows, tolerance_percent).map_err(|e| JsError::new(&e))
}
