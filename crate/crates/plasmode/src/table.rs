//! Node attribute tables: typed columns over a fixed row count.
//!
//! Categorical columns carry an ordered level list plus per-row codes;
//! the level order fixes indicator layout in design matrices and the
//! integer codes used by distance terms. CSV ingestion infers the level
//! order per column: numeric sort when every distinct value parses as an
//! integer (so grade "10" sorts after "9"), lexicographic otherwise, and
//! a column becomes numeric only if some value is not integer-formatted.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a column is used downstream; informational, not enforced here.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Covariate,
    Exposure,
    Outcome,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum ColumnData {
    Categorical { levels: Vec<String>, codes: Vec<u32> },
    Numeric(Vec<f64>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub role: Role,
    pub data: ColumnData,
}

impl Column {
    pub fn len(&self) -> usize {
        match &self.data {
            ColumnData::Categorical { codes, .. } => codes.len(),
            ColumnData::Numeric(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.data, ColumnData::Categorical { .. })
    }

    pub fn levels(&self) -> Option<&[String]> {
        match &self.data {
            ColumnData::Categorical { levels, .. } => Some(levels),
            ColumnData::Numeric(_) => None,
        }
    }

    pub fn codes(&self) -> Option<&[u32]> {
        match &self.data {
            ColumnData::Categorical { codes, .. } => Some(codes),
            ColumnData::Numeric(_) => None,
        }
    }

    pub fn numeric(&self) -> Option<&[f64]> {
        match &self.data {
            ColumnData::Numeric(v) => Some(v),
            ColumnData::Categorical { .. } => None,
        }
    }

    /// Per-row values as f64: numeric values as-is, category codes otherwise.
    pub fn as_numeric(&self) -> Vec<f64> {
        match &self.data {
            ColumnData::Numeric(v) => v.clone(),
            ColumnData::Categorical { codes, .. } => codes.iter().map(|&c| c as f64).collect(),
        }
    }

    /// Code for a level name, if this is a categorical column holding it.
    pub fn level_code(&self, level: &str) -> Option<u32> {
        self.levels()?.iter().position(|l| l == level).map(|p| p as u32)
    }
}

/// A set of equally long named columns describing one node population.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NodeTable {
    n_rows: usize,
    columns: Vec<Column>,
}

impl NodeTable {
    pub fn new(n_rows: usize) -> Self {
        NodeTable { n_rows, columns: Vec::new() }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Like [`NodeTable::column`] but failing with a named error.
    pub fn require(&self, name: &str) -> Result<&Column> {
        self.column(name).ok_or_else(|| Error::MissingColumn(name.into()))
    }

    /// Codes of a categorical column, erroring on numeric columns.
    pub fn codes(&self, name: &str) -> Result<&[u32]> {
        self.require(name)?.codes().ok_or_else(|| Error::BadColumn {
            column: name.into(),
            reason: "expected a categorical column".into(),
        })
    }

    pub fn set_role(&mut self, name: &str, role: Role) -> Result<()> {
        let col = self
            .columns
            .iter_mut()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::MissingColumn(name.into()))?;
        col.role = role;
        Ok(())
    }

    fn check_new_column(&self, name: &str, len: usize) -> Result<()> {
        if name.is_empty() {
            return Err(Error::BadColumn { column: name.into(), reason: "empty name".into() });
        }
        if self.column(name).is_some() {
            return Err(Error::BadColumn { column: name.into(), reason: "duplicate name".into() });
        }
        if len != self.n_rows {
            return Err(Error::BadColumn {
                column: name.into(),
                reason: format!("{} values for a table of {} rows", len, self.n_rows),
            });
        }
        Ok(())
    }

    pub fn push_categorical(
        &mut self,
        name: &str,
        role: Role,
        levels: Vec<String>,
        codes: Vec<u32>,
    ) -> Result<()> {
        self.check_new_column(name, codes.len())?;
        if levels.is_empty() {
            return Err(Error::BadColumn { column: name.into(), reason: "no levels".into() });
        }
        for (i, l) in levels.iter().enumerate() {
            if levels[..i].contains(l) {
                return Err(Error::BadColumn {
                    column: name.into(),
                    reason: format!("duplicate level {l:?}"),
                });
            }
        }
        if let Some(&bad) = codes.iter().find(|&&c| c as usize >= levels.len()) {
            return Err(Error::BadColumn {
                column: name.into(),
                reason: format!("code {bad} out of range for {} levels", levels.len()),
            });
        }
        self.columns.push(Column {
            name: name.into(),
            role,
            data: ColumnData::Categorical { levels, codes },
        });
        Ok(())
    }

    pub fn push_numeric(&mut self, name: &str, role: Role, values: Vec<f64>) -> Result<()> {
        self.check_new_column(name, values.len())?;
        self.columns.push(Column { name: name.into(), role, data: ColumnData::Numeric(values) });
        Ok(())
    }

    /// Read a table from CSV with a header row; all roles start as covariate.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let names: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
        let mut cells: Vec<Vec<String>> = vec![Vec::new(); names.len()];
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != names.len() {
                return Err(Error::Parse {
                    line: line + 2,
                    reason: format!("{} fields, expected {}", rec.len(), names.len()),
                });
            }
            for (j, field) in rec.iter().enumerate() {
                cells[j].push(field.trim().to_string());
            }
        }
        let n_rows = cells.first().map_or(0, |c| c.len());
        let mut table = NodeTable::new(n_rows);
        for (name, values) in names.iter().zip(cells) {
            table.push_inferred(name, values)?;
        }
        Ok(table)
    }

    pub fn read_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    fn push_inferred(&mut self, name: &str, values: Vec<String>) -> Result<()> {
        let all_int = values.iter().all(|v| v.parse::<i64>().is_ok());
        let all_num = values.iter().all(|v| v.parse::<f64>().is_ok());
        if all_num && !all_int && !values.is_empty() {
            let nums = values.iter().map(|v| v.parse::<f64>().unwrap()).collect();
            return self.push_numeric(name, Role::Covariate, nums);
        }
        let mut levels: Vec<String> = values.to_vec();
        levels.sort();
        levels.dedup();
        if all_int {
            levels.sort_by_key(|v| v.parse::<i64>().unwrap());
        }
        let codes = values
            .iter()
            .map(|v| levels.iter().position(|l| l == v).unwrap() as u32)
            .collect();
        self.push_categorical(name, Role::Covariate, levels, codes)
    }

    /// Write as CSV; categorical cells are level labels, numeric cells
    /// shortest round-trip decimal.
    pub fn to_csv_writer<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        for row in 0..self.n_rows {
            let rec: Vec<String> = self
                .columns
                .iter()
                .map(|c| match &c.data {
                    ColumnData::Categorical { levels, codes } => {
                        levels[codes[row] as usize].clone()
                    }
                    ColumnData::Numeric(v) => format!("{}", v[row]),
                })
                .collect();
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.to_csv_writer(std::fs::File::create(path)?)
    }
}
