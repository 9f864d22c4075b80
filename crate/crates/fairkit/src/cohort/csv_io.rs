//! CSV ingestion and emission. RFC-4180-style, UTF-8, mandatory header,
//! "." decimal separator, empty cell = missing.

use std::path::Path;

use super::{Cohort, ColumnData, ColumnKind, Role, Schema, MISSING_LEVEL};
use crate::error::{Error, Result};

impl Cohort {
    /// Load and validate a CSV file against a declared schema.
    ///
    /// The header must contain exactly the schema's column names (any
    /// order). Missing categorical cells become an explicit `Missing`
    /// level, appended to the declared levels when absent; missing
    /// numeric/ordinal cells stay missing and are imputed at encode time.
    pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Cohort> {
        schema.validate()?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path.as_ref())?;

        let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let mut seen = std::collections::BTreeSet::new();
        for h in &headers {
            if !seen.insert(h.as_str()) {
                return Err(Error::DuplicateColumn(h.clone()));
            }
        }
        let mut positions = Vec::with_capacity(schema.columns.len());
        for spec in &schema.columns {
            let pos = headers
                .iter()
                .position(|h| h == &spec.name)
                .ok_or_else(|| Error::MissingColumn(spec.name.clone()))?;
            positions.push(pos);
        }
        for h in &headers {
            if !schema.columns.iter().any(|c| &c.name == h) {
                return Err(Error::InvalidSchema(format!(
                    "header column '{h}' is not in the schema"
                )));
            }
        }

        // Missing categorical cells may force an appended "Missing" level.
        let mut schema = schema.clone();
        let mut columns: Vec<ColumnData> = schema
            .columns
            .iter()
            .map(|c| match (c.kind, c.role) {
                (_, Role::Identifier) => ColumnData::Text(Vec::new()),
                (ColumnKind::Numeric, _) => ColumnData::Numeric(Vec::new()),
                _ => ColumnData::Categorical(Vec::new()),
            })
            .collect();

        let mut n = 0usize;
        for (row_idx, record) in reader.records().enumerate() {
            let record = record?;
            n += 1;
            for (col_idx, &pos) in positions.iter().enumerate() {
                let raw = record.get(pos).unwrap_or("").trim();
                let spec = &mut schema.columns[col_idx];
                match &mut columns[col_idx] {
                    ColumnData::Text(v) => v.push(raw.to_string()),
                    ColumnData::Numeric(v) => {
                        if raw.is_empty() {
                            v.push(None);
                        } else {
                            let parsed: f64 = raw.parse().map_err(|_| Error::BadValue {
                                column: spec.name.clone(),
                                row: row_idx + 1,
                                value: raw.to_string(),
                            })?;
                            v.push(Some(parsed));
                        }
                    }
                    ColumnData::Categorical(v) => {
                        if raw.is_empty() {
                            match spec.kind {
                                ColumnKind::Categorical => {
                                    let idx = match spec.level_index(MISSING_LEVEL) {
                                        Some(i) => i,
                                        None => {
                                            spec.levels.push(MISSING_LEVEL.to_string());
                                            (spec.levels.len() - 1) as u32
                                        }
                                    };
                                    v.push(Some(idx));
                                }
                                _ => v.push(None),
                            }
                        } else {
                            let idx = spec.level_index(raw).ok_or_else(|| Error::BadValue {
                                column: spec.name.clone(),
                                row: row_idx + 1,
                                value: raw.to_string(),
                            })?;
                            v.push(Some(idx));
                        }
                    }
                }
            }
        }
        if n == 0 {
            return Err(Error::EmptyFile);
        }
        Cohort::from_columns(schema, columns)
    }

    /// Write the cohort back out as CSV in schema order. Numeric cells use
    /// the shortest round-trip representation, so reloading with the same
    /// schema reproduces the cohort exactly.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut writer = csv::Writer::from_path(path.as_ref())?;
        let names: Vec<&str> = self.schema.columns.iter().map(|c| c.name.as_str()).collect();
        writer.write_record(&names)?;
        for row in 0..self.n() {
            let mut record = Vec::with_capacity(self.columns.len());
            for (spec, col) in self.schema.columns.iter().zip(&self.columns) {
                let cell = match col {
                    ColumnData::Numeric(v) => v[row].map_or(String::new(), |x| x.to_string()),
                    ColumnData::Categorical(v) => v[row]
                        .map_or(String::new(), |i| spec.levels[i as usize].clone()),
                    ColumnData::Text(v) => v[row].clone(),
                };
                record.push(cell);
            }
            writer.write_record(&record)?;
        }
        writer.flush()?;
        Ok(())
    }
}
