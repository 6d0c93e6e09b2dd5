//! Cost surfaces as CSV, one row per (grid point, plan).

use std::collections::BTreeMap;

use thiserror::Error;

use crate::exec::PlanId;
use crate::sweep::{CostSurface, GridPoint, Measurement};

pub const HEADER: [&str; 11] = [
    "axis1_exp",
    "axis2_exp",
    "plan",
    "cost_units",
    "rand_pages",
    "seq_pages",
    "scratch_read",
    "scratch_write",
    "rows_examined",
    "result_count",
    "result_checksum",
];

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("header must be `{}`", HEADER.join(","))]
    Header,
    #[error("line {line}: column {column} is not a valid number: {value:?}")]
    Number {
        line: u64,
        column: &'static str,
        value: String,
    },
    #[error("line {line}: unknown plan {name:?}")]
    Plan { line: u64, name: String },
    #[error("line {line}: duplicate row for plan {plan}")]
    Duplicate { line: u64, plan: PlanId },
    #[error("rows mix one- and two-dimensional points")]
    MixedDims,
    #[error("no data rows")]
    Empty,
    #[error("rows do not cover every plan at every point of a full grid")]
    Incomplete,
}

/// Rows sorted by exponents, then plan name.
pub fn write_surface_csv(surface: &CostSurface) -> String {
    let mut rows: Vec<(GridPoint, &'static str, &Measurement)> = Vec::new();
    for (p, plan) in surface.plans.iter().enumerate() {
        for (i, point) in surface.points.iter().enumerate() {
            rows.push((*point, plan.name(), &surface.cells[p][i]));
        }
    }
    rows.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));

    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(HEADER).expect("in-memory write");
    for (point, plan, m) in rows {
        let axis2 = point.axis2.map(|e| e.to_string()).unwrap_or_default();
        writer
            .write_record([
                point.axis1.to_string(),
                axis2,
                plan.to_string(),
                m.cost.to_string(),
                m.rand_pages.to_string(),
                m.seq_pages.to_string(),
                m.scratch_read.to_string(),
                m.scratch_write.to_string(),
                m.rows_examined.to_string(),
                m.result_count.to_string(),
                m.result_checksum.to_string(),
            ])
            .expect("in-memory write");
    }
    let bytes = writer.into_inner().expect("in-memory flush");
    String::from_utf8(bytes).expect("ascii output")
}

fn number<T: std::str::FromStr>(
    record: &csv::StringRecord,
    index: usize,
    line: u64,
) -> Result<T, CsvError> {
    let value = record.get(index).unwrap_or("");
    value.parse().map_err(|_| CsvError::Number {
        line,
        column: HEADER[index],
        value: value.to_string(),
    })
}

pub fn read_surface_csv(text: &str) -> Result<CostSurface, CsvError> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    if reader.headers()?.iter().ne(HEADER) {
        return Err(CsvError::Header);
    }
    let mut cells: BTreeMap<(GridPoint, PlanId), Measurement> = BTreeMap::new();
    let mut dims = None;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let axis1 = number(&record, 0, line)?;
        let axis2 = match record.get(1).unwrap_or("") {
            "" => None,
            _ => Some(number(&record, 1, line)?),
        };
        let row_dims = if axis2.is_some() { 2 } else { 1 };
        if *dims.get_or_insert(row_dims) != row_dims {
            return Err(CsvError::MixedDims);
        }
        let name = record.get(2).unwrap_or("");
        let plan: PlanId = name.parse().map_err(|_| CsvError::Plan {
            line,
            name: name.to_string(),
        })?;
        let m = Measurement {
            cost: number(&record, 3, line)?,
            rand_pages: number(&record, 4, line)?,
            seq_pages: number(&record, 5, line)?,
            scratch_read: number(&record, 6, line)?,
            scratch_write: number(&record, 7, line)?,
            rows_examined: number(&record, 8, line)?,
            result_count: number(&record, 9, line)?,
            result_checksum: number(&record, 10, line)?,
        };
        if cells.insert((GridPoint { axis1, axis2 }, plan), m).is_some() {
            return Err(CsvError::Duplicate { line, plan });
        }
    }
    let dims = dims.ok_or(CsvError::Empty)?;

    let mut points: Vec<GridPoint> = cells.keys().map(|k| k.0).collect();
    points.dedup();
    let mut plans: Vec<PlanId> = cells.keys().map(|k| k.1).collect();
    plans.sort_unstable();
    plans.dedup();
    let mut grid = vec![Vec::with_capacity(points.len()); plans.len()];
    for (p, &plan) in plans.iter().enumerate() {
        for &point in &points {
            grid[p].push(*cells.get(&(point, plan)).ok_or(CsvError::Incomplete)?);
        }
    }
    let surface = CostSurface {
        dims,
        points,
        plans,
        cells: grid,
    };
    if !surface.is_well_formed() {
        return Err(CsvError::Incomplete);
    }
    Ok(surface)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::ExecConfig;
    use crate::storage::{build_dataset, DatasetConfig};
    use crate::sweep::{run_sweep_sequential, GridSpec};

    fn t16_trio() -> CostSurface {
        let ds = build_dataset(DatasetConfig::fixture_t16()).unwrap();
        let spec = GridSpec::one_d(
            2,
            vec![PlanId::TableScan, PlanId::TradIndexA, PlanId::ImprovedIndexA],
        );
        run_sweep_sequential(&ds, &spec, &ExecConfig::default()).unwrap()
    }

    #[test]
    fn one_d_layout() {
        let text = write_surface_csv(&t16_trio());
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), HEADER.join(","));
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 9);
        assert!(rows.iter().all(|r| r.split(',').nth(1) == Some("")));
        assert!(rows[0].starts_with("0,,ImprovedIndexA,"));
        assert!(rows[2].starts_with("0,,TradIndexA,"));
        assert!(rows[1].starts_with("0,,TableScan,13,"));
    }

    #[test]
    fn round_trip() {
        let surface = t16_trio();
        assert_eq!(read_surface_csv(&write_surface_csv(&surface)).unwrap(), surface);
    }

    #[test]
    fn malformed_inputs() {
        let text = write_surface_csv(&t16_trio());
        let mut lines: Vec<&str> = text.lines().collect();

        let dup = format!("{}\n{}\n", text.trim_end(), lines[1]);
        assert!(matches!(read_surface_csv(&dup), Err(CsvError::Duplicate { .. })));

        let header = text.replacen("cost_units", "cost", 1);
        assert!(matches!(read_surface_csv(&header), Err(CsvError::Header)));

        let bad = text.replacen("0,,TableScan,13,", "0,,TableScan,x13,", 1);
        assert!(matches!(
            read_surface_csv(&bad),
            Err(CsvError::Number { column: "cost_units", .. })
        ));

        let unknown = text.replacen("TableScan", "SeqScan", 1);
        assert!(matches!(read_surface_csv(&unknown), Err(CsvError::Plan { .. })));

        lines.remove(3);
        let missing = lines.join("\n");
        assert!(matches!(read_surface_csv(&missing), Err(CsvError::Incomplete)));

        assert!(matches!(read_surface_csv(&HEADER.join(",")), Err(CsvError::Empty)));
    }
}
