use std::io::Write;

use crate::config::ExperimentKind;
use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnType {
    Int,
    Float,
    Bool,
    Text,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn column_type(&self) -> ColumnType {
        match self {
            Cell::Int(_) => ColumnType::Int,
            Cell::Float(_) => ColumnType::Float,
            Cell::Bool(_) => ColumnType::Bool,
            Cell::Text(_) => ColumnType::Text,
        }
    }

    /// Floats use Rust's shortest round-trip formatting, so a CSV value
    /// parses back to the identical f64.
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format!("{x:?}"),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Int(i) => Some(i as f64),
            Cell::Float(x) => Some(x),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}
impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}
impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}
impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}
impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}
impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

use ColumnType::{Bool, Float, Int, Text};

/// The stable CSV columns of each experiment family.
pub fn schema(kind: ExperimentKind) -> &'static [(&'static str, ColumnType)] {
    match kind {
        ExperimentKind::TdConvergence => &[("step", Int), ("tv_error_m", Float), ("value_error", Float)],
        ExperimentKind::SsipeBound => &[
            ("trial_id", Int),
            ("t", Int),
            ("tv_error_m", Float),
            ("rho_error_v", Float),
            ("m_bound", Float),
            ("v_bound", Float),
            ("within_bound", Bool),
        ],
        ExperimentKind::BnPathlen => {
            &[("step", Int), ("n", Int), ("exact", Bool), ("n_forward", Int), ("n_backward", Int)]
        }
        ExperimentKind::FbFixedpoint => &[
            ("variant", Text),
            ("rank", Int),
            ("steps", Int),
            ("converged", Bool),
            ("fixed_point_residual", Float),
            ("svd_residual_1", Float),
            ("svd_residual_2", Float),
            ("svd_holds", Bool),
            ("stability_residual", Float),
            ("stability_holds", Bool),
            ("projection_residual", Float),
            ("projection_holds", Bool),
            ("weak_inverse_residual", Float),
            ("weak_inverse_holds", Bool),
        ],
        ExperimentKind::FlowRates => &[("t", Float), ("frob_error", Float), ("tv_error", Float), ("fitted_rate", Float)],
        ExperimentKind::GoalGrid => &[
            ("samples", Int),
            ("optimal_path_fraction", Float),
            ("pairs", Int),
            ("max_q_error", Float),
            ("max_value_error", Float),
        ],
        ExperimentKind::TraceEquivalence => &[
            ("s", Int),
            ("s_tilde", Int),
            ("estimate", Float),
            ("std_error", Float),
            ("formula", Float),
            ("z_score", Float),
        ],
        ExperimentKind::Thm25 => &[("step", Int), ("max_deviation", Float)],
        ExperimentKind::RelativeTd => &[("step", Int), ("relative_error", Float), ("td0_norm", Float)],
        ExperimentKind::DyadicMass => &[("t", Int), ("mass", Float), ("closed_form", Float), ("abs_error", Float)],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub kind: ExperimentKind,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(kind: ExperimentKind) -> Self {
        Self { kind, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    pub fn columns(&self) -> Vec<&'static str> {
        schema(self.kind).iter().map(|c| c.0).collect()
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let idx = schema(self.kind).iter().position(|c| c.0 == name)?;
        Some(self.rows.iter().map(|r| &r[idx]).collect())
    }

    pub fn validate(&self) -> Result<()> {
        let cols = schema(self.kind);
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != cols.len() {
                return Err(LabError::Schema(format!("{}: row {i} has {} cells, expected {}", self.kind, row.len(), cols.len())));
            }
            for (cell, (name, ty)) in row.iter().zip(cols) {
                if cell.column_type() != *ty {
                    return Err(LabError::Schema(format!("{}: row {i} column {name} is {cell:?}, expected {ty:?}", self.kind)));
                }
                if let Cell::Text(s) = cell {
                    if s.contains([',', '"', '\n', '\r']) {
                        return Err(LabError::Schema(format!("{}: row {i} column {name} needs quoting", self.kind)));
                    }
                }
            }
        }
        Ok(())
    }

    /// Validates, then writes header and rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        self.validate()?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.columns())?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        let mut t = Table::new(ExperimentKind::Thm25);
        let xs = [0.1 + 0.2, 1e-300, 12345.678901234567, -0.0, 3.0];
        for (i, &x) in xs.iter().enumerate() {
            t.push(vec![i.into(), x.into()]);
        }
        let text = t.to_csv_string().unwrap();
        let parsed: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
        assert_eq!(parsed.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), xs.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        assert!(text.starts_with("step,max_deviation\n0,0.30000000000000004\n"));
    }

    #[test]
    fn schema_violations_are_rejected() {
        let mut t = Table::new(ExperimentKind::Thm25);
        t.push(vec![Cell::Float(1.0), Cell::Float(0.0)]);
        assert!(matches!(t.to_csv_string(), Err(LabError::Schema(_))));
        let mut t = Table::new(ExperimentKind::Thm25);
        t.push(vec![Cell::Int(1)]);
        assert!(matches!(t.validate(), Err(LabError::Schema(_))));
    }

    #[test]
    fn every_kind_has_unique_columns() {
        for k in ExperimentKind::ALL {
            let mut names: Vec<_> = schema(k).iter().map(|c| c.0).collect();
            names.sort_unstable();
            names.dedup();
            assert_eq!(names.len(), schema(k).len(), "{k}");
        }
    }
}
