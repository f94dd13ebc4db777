//! CSV ingestion and emission with configurable missing-value tokens.
//!
//! Input cells whose trimmed text matches one of the missing tokens are
//! loaded as masked cells. Column kinds are inferred (numeric iff every
//! observed cell parses as a finite real) unless a schema hint overrides
//! the inference.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tabular::{Column, ColumnKind, Table};

/// Options for [`load_csv`].
#[derive(Clone, Debug)]
pub struct CsvOptions {
    /// Trimmed cell texts treated as missing. Must be nonempty.
    pub missing_tokens: Vec<String>,
    /// Per-column kind overrides; unlisted columns are inferred.
    pub schema_hint: BTreeMap<String, ColumnKind>,
}

impl Default for CsvOptions {
    /// The default token set is case-sensitive except that "NA" also
    /// matches "na".
    fn default() -> Self {
        CsvOptions {
            missing_tokens: ["NaN", "", "null", "undefined", "NA", "na"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            schema_hint: BTreeMap::new(),
        }
    }
}

impl CsvOptions {
    pub fn with_tokens<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Self {
        CsvOptions {
            missing_tokens: tokens.into_iter().map(Into::into).collect(),
            schema_hint: BTreeMap::new(),
        }
    }

    pub fn hint(mut self, column: impl Into<String>, kind: ColumnKind) -> Self {
        self.schema_hint.insert(column.into(), kind);
        self
    }

    fn is_missing(&self, trimmed: &str) -> bool {
        self.missing_tokens.iter().any(|t| t == trimmed)
    }
}

fn parse_real(text: &str) -> Option<f64> {
    text.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a comma-delimited, header-first table from `reader`.
pub fn load_csv<R: Read>(reader: R, options: &CsvOptions) -> Result<Table> {
    if options.missing_tokens.is_empty() {
        return Err(Error::Domain("missing_tokens must be nonempty".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse {
            row: 0,
            message: e.to_string(),
        })?
        .iter()
        .map(|h| h.to_string())
        .collect();
    for (i, name) in headers.iter().enumerate() {
        if headers[..i].contains(name) {
            return Err(Error::Schema(format!("duplicate header name '{name}'")));
        }
    }

    // Cells as raw text; missingness resolved immediately, kinds afterwards.
    let mut cells: Vec<Vec<Option<String>>> = vec![Vec::new(); headers.len()];
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            row: row_idx,
            message: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row: row_idx,
                message: format!(
                    "expected {} fields, found {}",
                    headers.len(),
                    record.len()
                ),
            });
        }
        for (col, field) in record.iter().enumerate() {
            if options.is_missing(field.trim()) {
                cells[col].push(None);
            } else {
                cells[col].push(Some(field.to_string()));
            }
        }
    }
    let n_rows = cells.first().map_or(0, |c| c.len());

    let mut columns = Vec::with_capacity(headers.len());
    for (name, column_cells) in headers.into_iter().zip(cells) {
        let hinted = options.schema_hint.get(&name).copied();
        let numeric = match hinted {
            Some(kind) => kind == ColumnKind::Numeric,
            None => column_cells
                .iter()
                .flatten()
                .all(|text| parse_real(text.trim()).is_some()),
        };
        if numeric {
            let mut values = Vec::with_capacity(column_cells.len());
            for (row, cell) in column_cells.iter().enumerate() {
                match cell {
                    Some(text) => match parse_real(text.trim()) {
                        Some(v) => values.push(Some(v)),
                        None => {
                            return Err(Error::CellType {
                                row,
                                column: name,
                                message: format!("'{text}' is not a finite real number"),
                            })
                        }
                    },
                    None => values.push(None),
                }
            }
            columns.push(Column::numeric(name, values)?);
        } else {
            columns.push(Column::categorical(
                name,
                column_cells
                    .iter()
                    .map(|c| c.as_deref())
                    .collect::<Vec<Option<&str>>>(),
            ));
        }
    }
    Table::with_row_count(n_rows, columns)
}

/// Serializes a table as CSV, writing `missing_token` at masked cells.
///
/// `load_csv(write_csv(t))` reproduces values, kinds, and masks for tables
/// whose category labels neither collide with the missing tokens nor all
/// parse as numbers.
pub fn write_csv<W: Write>(table: &Table, writer: W, missing_token: &str) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().from_writer(writer);
    let header: Vec<&str> = table.columns().iter().map(|c| c.name()).collect();
    writer
        .write_record(&header)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    for row in 0..table.n_rows() {
        let record: Vec<String> = table
            .columns()
            .iter()
            .map(|c| match c.kind() {
                ColumnKind::Numeric => c
                    .number(row)
                    .map(|v| v.to_string())
                    .unwrap_or_else(|| missing_token.to_string()),
                ColumnKind::Categorical => c
                    .label(row)
                    .map(|l| l.to_string())
                    .unwrap_or_else(|| missing_token.to_string()),
            })
            .collect();
        writer
            .write_record(&record)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    writer
        .flush()
        .map_err(Error::Io)?;
    Ok(())
}

/// Reads a CSV file from disk.
pub fn load_csv_path(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Table> {
    let file = File::open(path)?;
    load_csv(file, options)
}

/// Writes a CSV file to disk.
pub fn write_csv_path(table: &Table, path: impl AsRef<Path>, missing_token: &str) -> Result<()> {
    let file = File::create(path)?;
    write_csv(table, file, missing_token)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Table {
        load_csv(text.as_bytes(), &CsvOptions::default()).unwrap()
    }

    #[test]
    fn token_cells_become_missing() {
        let table = load("a,b\n1,NaN\n2,3\n");
        let a = table.column("a").unwrap();
        let b = table.column("b").unwrap();
        assert_eq!(a.kind(), ColumnKind::Numeric);
        assert_eq!(a.number(0), Some(1.0));
        assert_eq!(a.number(1), Some(2.0));
        assert!(!b.is_observed(0));
        assert_eq!(b.number(1), Some(3.0));
    }

    #[test]
    fn header_only_gives_empty_table() {
        let table = load("a,b\n");
        assert_eq!(table.n_rows(), 0);
        assert_eq!(table.n_columns(), 2);
    }

    #[test]
    fn kind_inference_mixed_column_is_categorical() {
        let table = load("x,y\n1.5,red\n2,blue\n");
        assert_eq!(table.column("x").unwrap().kind(), ColumnKind::Numeric);
        let y = table.column("y").unwrap();
        assert_eq!(y.kind(), ColumnKind::Categorical);
        assert_eq!(y.vocabulary().unwrap(), &["red".to_string(), "blue".to_string()]);
    }

    #[test]
    fn housing_fragment_kinds() {
        let text = "LotFrontage,LotArea,MasVnrType,MasVnrArea,BsmtQual\n\
                    NaN,21453,NaN,0.0,TA\n\
                    67.0,5604,NaN,0.0,TA\n\
                    64.0,7301,BrkFace,500.0,NaN\n\
                    NaN,12692,NaN,0.0,Gd\n\
                    NaN,2117,BrkFace,513.0,Gd\n\
                    NaN,8963,BrkFace,289.0,TA\n\
                    NaN,7000,BrkFace,90.0,TA\n\
                    35.0,4274,NaN,NaN,Gd\n";
        let table = load(text);
        assert_eq!(table.n_rows(), 8);
        assert_eq!(
            table.column("LotFrontage").unwrap().kind(),
            ColumnKind::Numeric
        );
        assert_eq!(
            table.column("MasVnrType").unwrap().kind(),
            ColumnKind::Categorical
        );
        let profile = table.profile();
        assert_eq!(profile.columns[0].missing_count, 5);
        assert_eq!(profile.columns[1].missing_count, 0);
        assert_eq!(profile.columns[2].missing_count, 4);
        assert_eq!(profile.columns[3].missing_count, 1);
        assert_eq!(profile.columns[4].missing_count, 1);
    }

    #[test]
    fn ragged_row_errors_with_row_index() {
        let err = load_csv("a,b\n1,2\n3\n".as_bytes(), &CsvOptions::default()).unwrap_err();
        match err {
            Error::Parse { row, .. } => assert_eq!(row, 1),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn duplicate_headers_rejected() {
        let err = load_csv("a,a\n1,2\n".as_bytes(), &CsvOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn numeric_hint_on_unparsable_cell_names_it() {
        let options = CsvOptions::default().hint("y", ColumnKind::Numeric);
        let err = load_csv("y\n1\nred\n".as_bytes(), &options).unwrap_err();
        match err {
            Error::CellType { row, column, .. } => {
                assert_eq!(row, 1);
                assert_eq!(column, "y");
            }
            other => panic!("expected type error, got {other}"),
        }
    }

    #[test]
    fn categorical_hint_keeps_numbers_as_labels() {
        let options = CsvOptions::default().hint("y", ColumnKind::Categorical);
        let table = load_csv("y\n1\n2\n".as_bytes(), &options).unwrap();
        let y = table.column("y").unwrap();
        assert_eq!(y.kind(), ColumnKind::Categorical);
        assert_eq!(y.label(0), Some("1"));
    }

    #[test]
    fn na_matches_both_cases_by_default() {
        let table = load("a\nNA\nna\n5\n");
        let a = table.column("a").unwrap();
        assert!(!a.is_observed(0));
        assert!(!a.is_observed(1));
        assert_eq!(a.number(2), Some(5.0));
    }

    #[test]
    fn non_finite_numeric_text_is_categorical() {
        // "inf" parses as f64 infinity, which is not a finite real, so the
        // column falls back to categorical.
        let table = load("a\n1\ninf\n");
        assert_eq!(table.column("a").unwrap().kind(), ColumnKind::Categorical);
    }

    #[test]
    fn write_then_load_round_trips() {
        let table = Table::new(vec![
            Column::numeric("n", vec![Some(1.5), None, Some(-0.0), Some(3e-7)]).unwrap(),
            Column::categorical("c", vec![Some("x"), Some("y,z"), None, Some("x")]),
        ])
        .unwrap();
        let mut buffer = Vec::new();
        write_csv(&table, &mut buffer, "NaN").unwrap();
        let reloaded = load_csv(buffer.as_slice(), &CsvOptions::default()).unwrap();
        assert_eq!(reloaded, table);
    }

    #[test]
    fn empty_table_writes_header_only() {
        let table = Table::with_row_count(
            0,
            vec![Column::numeric("a", vec![]).unwrap(), Column::numeric("b", vec![]).unwrap()],
        )
        .unwrap();
        let mut buffer = Vec::new();
        write_csv(&table, &mut buffer, "NaN").unwrap();
        assert_eq!(String::from_utf8(buffer).unwrap(), "a,b\n");
    }

    #[test]
    fn missing_cell_serialized_as_token() {
        let table = Table::new(vec![Column::numeric("a", vec![None, Some(7.0)]).unwrap()])
            .unwrap();
        let mut buffer = Vec::new();
        write_csv(&table, &mut buffer, "NaN").unwrap();
        assert_eq!(String::from_utf8(buffer).unwrap(), "a\nNaN\n7\n");
    }

    #[test]
    fn empty_token_set_rejected() {
        let options = CsvOptions {
            missing_tokens: vec![],
            schema_hint: BTreeMap::new(),
        };
        assert!(load_csv("a\n1\n".as_bytes(), &options).is_err());
    }
}
