//! Columnar tables with an explicit per-cell observed/missing mask.
//!
//! Missingness is carried by the mask, never by in-band sentinels: an
//! observed zero and a missing cell are distinct states. Values stored at
//! masked positions are fixed placeholders and are never read back through
//! the public accessors.

mod csv_io;

pub use csv_io::{load_csv, load_csv_path, write_csv, write_csv_path, CsvOptions};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Placeholder stored at missing numeric positions. Never observable.
const NUMERIC_PLACEHOLDER: f64 = f64::NAN;
/// Placeholder stored at missing categorical positions. Never observable.
const CODE_PLACEHOLDER: u32 = u32::MAX;

/// The two column kinds the toolkit distinguishes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

impl std::fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ColumnKind::Numeric => write!(f, "numeric"),
            ColumnKind::Categorical => write!(f, "categorical"),
        }
    }
}

#[derive(Clone, Debug)]
enum ColumnData {
    Numeric(Vec<f64>),
    Categorical {
        codes: Vec<u32>,
        vocabulary: Vec<String>,
    },
}

/// A named column: values plus a parallel observed/missing mask.
#[derive(Clone, Debug)]
pub struct Column {
    name: String,
    data: ColumnData,
    /// `true` = observed, `false` = missing.
    mask: Vec<bool>,
}

impl Column {
    /// Builds a numeric column; `None` cells are missing.
    ///
    /// Every observed value must be finite.
    pub fn numeric(name: impl Into<String>, cells: Vec<Option<f64>>) -> Result<Self> {
        let name = name.into();
        let mut values = Vec::with_capacity(cells.len());
        let mut mask = Vec::with_capacity(cells.len());
        for (row, cell) in cells.into_iter().enumerate() {
            match cell {
                Some(v) => {
                    if !v.is_finite() {
                        return Err(Error::CellType {
                            row,
                            column: name,
                            message: format!("observed numeric value {v} is not finite"),
                        });
                    }
                    values.push(v);
                    mask.push(true);
                }
                None => {
                    values.push(NUMERIC_PLACEHOLDER);
                    mask.push(false);
                }
            }
        }
        Ok(Column {
            name,
            data: ColumnData::Numeric(values),
            mask,
        })
    }

    /// Builds a categorical column from labels; the vocabulary is collected
    /// in first-occurrence order.
    pub fn categorical<S: AsRef<str>>(name: impl Into<String>, cells: Vec<Option<S>>) -> Self {
        let mut vocabulary: Vec<String> = Vec::new();
        let mut codes = Vec::with_capacity(cells.len());
        let mut mask = Vec::with_capacity(cells.len());
        for cell in &cells {
            match cell {
                Some(label) => {
                    let label = label.as_ref();
                    let code = match vocabulary.iter().position(|v| v == label) {
                        Some(i) => i as u32,
                        None => {
                            vocabulary.push(label.to_string());
                            (vocabulary.len() - 1) as u32
                        }
                    };
                    codes.push(code);
                    mask.push(true);
                }
                None => {
                    codes.push(CODE_PLACEHOLDER);
                    mask.push(false);
                }
            }
        }
        Column {
            name: name.into(),
            data: ColumnData::Categorical { codes, vocabulary },
            mask,
        }
    }

    /// Builds a categorical column from an explicit vocabulary and codes.
    pub fn categorical_with_vocabulary(
        name: impl Into<String>,
        vocabulary: Vec<String>,
        cells: Vec<Option<u32>>,
    ) -> Result<Self> {
        let name = name.into();
        let mut codes = Vec::with_capacity(cells.len());
        let mut mask = Vec::with_capacity(cells.len());
        for (row, cell) in cells.into_iter().enumerate() {
            match cell {
                Some(code) => {
                    if code as usize >= vocabulary.len() {
                        return Err(Error::CellType {
                            row,
                            column: name,
                            message: format!(
                                "category code {code} out of range for vocabulary of {}",
                                vocabulary.len()
                            ),
                        });
                    }
                    codes.push(code);
                    mask.push(true);
                }
                None => {
                    codes.push(CODE_PLACEHOLDER);
                    mask.push(false);
                }
            }
        }
        Ok(Column {
            name,
            data: ColumnData::Categorical { codes, vocabulary },
            mask,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ColumnKind {
        match self.data {
            ColumnData::Numeric(_) => ColumnKind::Numeric,
            ColumnData::Categorical { .. } => ColumnKind::Categorical,
        }
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn is_observed(&self, row: usize) -> bool {
        self.mask[row]
    }

    pub fn missing_count(&self) -> usize {
        self.mask.iter().filter(|&&m| !m).count()
    }

    pub fn fully_observed(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }

    /// The observed numeric value at `row`, or `None` if missing or the
    /// column is categorical.
    pub fn number(&self, row: usize) -> Option<f64> {
        match &self.data {
            ColumnData::Numeric(values) if self.mask[row] => Some(values[row]),
            _ => None,
        }
    }

    /// The observed category code at `row`, or `None` if missing or numeric.
    pub fn code(&self, row: usize) -> Option<u32> {
        match &self.data {
            ColumnData::Categorical { codes, .. } if self.mask[row] => Some(codes[row]),
            _ => None,
        }
    }

    /// The observed category label at `row`.
    pub fn label(&self, row: usize) -> Option<&str> {
        match &self.data {
            ColumnData::Categorical { codes, vocabulary } if self.mask[row] => {
                Some(vocabulary[codes[row] as usize].as_str())
            }
            _ => None,
        }
    }

    pub fn vocabulary(&self) -> Option<&[String]> {
        match &self.data {
            ColumnData::Categorical { vocabulary, .. } => Some(vocabulary),
            ColumnData::Numeric(_) => None,
        }
    }

    /// All cells of a numeric column as options; `None` for categorical.
    pub fn numeric_cells(&self) -> Option<Vec<Option<f64>>> {
        match &self.data {
            ColumnData::Numeric(values) => Some(
                values
                    .iter()
                    .zip(&self.mask)
                    .map(|(&v, &m)| if m { Some(v) } else { None })
                    .collect(),
            ),
            ColumnData::Categorical { .. } => None,
        }
    }

    /// All cells of a categorical column as option codes.
    pub fn categorical_cells(&self) -> Option<Vec<Option<u32>>> {
        match &self.data {
            ColumnData::Categorical { codes, .. } => Some(
                codes
                    .iter()
                    .zip(&self.mask)
                    .map(|(&c, &m)| if m { Some(c) } else { None })
                    .collect(),
            ),
            ColumnData::Numeric(_) => None,
        }
    }

    /// Observed numeric values in row order.
    pub fn observed_numeric(&self) -> Vec<f64> {
        match &self.data {
            ColumnData::Numeric(values) => values
                .iter()
                .zip(&self.mask)
                .filter_map(|(&v, &m)| if m { Some(v) } else { None })
                .collect(),
            ColumnData::Categorical { .. } => Vec::new(),
        }
    }

    /// Observed category codes in row order.
    pub fn observed_codes(&self) -> Vec<u32> {
        match &self.data {
            ColumnData::Categorical { codes, .. } => codes
                .iter()
                .zip(&self.mask)
                .filter_map(|(&c, &m)| if m { Some(c) } else { None })
                .collect(),
            ColumnData::Numeric(_) => Vec::new(),
        }
    }

    /// The column restricted to `rows`, in the given order. Categorical
    /// vocabulary is preserved unchanged.
    pub fn take_rows(&self, rows: &[usize]) -> Column {
        let mask = rows.iter().map(|&r| self.mask[r]).collect();
        let data = match &self.data {
            ColumnData::Numeric(values) => {
                ColumnData::Numeric(rows.iter().map(|&r| values[r]).collect())
            }
            ColumnData::Categorical { codes, vocabulary } => ColumnData::Categorical {
                codes: rows.iter().map(|&r| codes[r]).collect(),
                vocabulary: vocabulary.clone(),
            },
        };
        Column {
            name: self.name.clone(),
            data,
            mask,
        }
    }
}

impl PartialEq for Column {
    /// Equality on (name, kind, vocabulary, mask, observed values);
    /// placeholder values at missing positions are ignored. Numeric cells
    /// compare bit-exactly.
    fn eq(&self, other: &Self) -> bool {
        if self.name != other.name || self.mask != other.mask {
            return false;
        }
        match (&self.data, &other.data) {
            (ColumnData::Numeric(a), ColumnData::Numeric(b)) => self
                .mask
                .iter()
                .enumerate()
                .all(|(i, &m)| !m || a[i].to_bits() == b[i].to_bits()),
            (
                ColumnData::Categorical {
                    codes: a,
                    vocabulary: va,
                },
                ColumnData::Categorical {
                    codes: b,
                    vocabulary: vb,
                },
            ) => {
                va == vb
                    && self
                        .mask
                        .iter()
                        .enumerate()
                        .all(|(i, &m)| !m || a[i] == b[i])
            }
            _ => false,
        }
    }
}

/// An immutable table: ordered columns sharing one row count.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    n_rows: usize,
    columns: Vec<Column>,
}

impl Table {
    /// Builds a table from at least one column; all columns must agree on
    /// length and names must be pairwise distinct.
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let n_rows = columns
            .first()
            .map(|c| c.len())
            .ok_or_else(|| Error::Schema("a table needs at least one column".into()))?;
        Self::with_row_count(n_rows, columns)
    }

    /// Builds a table with an explicit row count (allows zero columns).
    pub fn with_row_count(n_rows: usize, columns: Vec<Column>) -> Result<Self> {
        for column in &columns {
            if column.len() != n_rows {
                return Err(Error::Schema(format!(
                    "column '{}' has {} rows, expected {}",
                    column.name(),
                    column.len(),
                    n_rows
                )));
            }
        }
        for (i, a) in columns.iter().enumerate() {
            if columns[..i].iter().any(|b| b.name() == a.name()) {
                return Err(Error::Schema(format!("duplicate column name '{}'", a.name())));
            }
        }
        Ok(Table { n_rows, columns })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name() == name)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name() == name)
    }

    /// Looks a column up, erroring with the missing name.
    pub fn require_column(&self, name: &str) -> Result<&Column> {
        self.column(name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn total_missing_cells(&self) -> usize {
        self.columns.iter().map(Column::missing_count).sum()
    }

    /// The table restricted to `rows`, in the given order.
    pub fn take_rows(&self, rows: &[usize]) -> Table {
        Table {
            n_rows: rows.len(),
            columns: self.columns.iter().map(|c| c.take_rows(rows)).collect(),
        }
    }

    /// A copy with one column replaced (matched by name).
    pub fn replace_column(&self, column: Column) -> Result<Table> {
        let idx = self
            .column_index(column.name())
            .ok_or_else(|| Error::UnknownColumn(column.name().to_string()))?;
        if column.len() != self.n_rows {
            return Err(Error::Schema(format!(
                "replacement column '{}' has {} rows, expected {}",
                column.name(),
                column.len(),
                self.n_rows
            )));
        }
        let mut columns = self.columns.clone();
        columns[idx] = column;
        Ok(Table {
            n_rows: self.n_rows,
            columns,
        })
    }

    /// A copy without the named column.
    pub fn without_column(&self, name: &str) -> Result<Table> {
        let idx = self
            .column_index(name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))?;
        let mut columns = self.columns.clone();
        columns.remove(idx);
        Ok(Table {
            n_rows: self.n_rows,
            columns,
        })
    }

    /// A copy with `column` inserted at `index`.
    pub fn insert_column(&self, index: usize, column: Column) -> Result<Table> {
        if column.len() != self.n_rows {
            return Err(Error::Schema(format!(
                "column '{}' has {} rows, expected {}",
                column.name(),
                column.len(),
                self.n_rows
            )));
        }
        let mut columns = self.columns.clone();
        columns.insert(index.min(columns.len()), column);
        Table::with_row_count(self.n_rows, columns)
    }

    /// Counts missing cells per column from the mask alone.
    pub fn profile(&self) -> MissingnessProfile {
        let columns: Vec<ColumnProfile> = self
            .columns
            .iter()
            .map(|c| {
                let missing_count = c.missing_count();
                let missing_fraction = if self.n_rows == 0 {
                    0.0
                } else {
                    missing_count as f64 / self.n_rows as f64
                };
                ColumnProfile {
                    name: c.name().to_string(),
                    missing_count,
                    missing_fraction,
                }
            })
            .collect();
        let total_missing_cells = columns.iter().map(|c| c.missing_count).sum();
        MissingnessProfile {
            n_rows: self.n_rows,
            total_missing_cells,
            columns,
        }
    }

    /// Splits rows into a train and a test part by a seeded shuffle.
    ///
    /// The train size is `round(train_fraction * n_rows)` (half-up), clamped
    /// so both parts are nonempty when `0 < train_fraction < 1`. Row order
    /// inside each part follows the shuffled permutation.
    pub fn train_test_split(&self, train_fraction: f64, seed: u64) -> Result<(Table, Table)> {
        if !(train_fraction > 0.0 && train_fraction <= 1.0) {
            return Err(Error::Domain(format!(
                "train_fraction must be in (0, 1], got {train_fraction}"
            )));
        }
        if train_fraction < 1.0 && self.n_rows < 2 {
            return Err(Error::Precondition(
                "a fractional split needs at least 2 rows".into(),
            ));
        }
        let mut order: Vec<usize> = (0..self.n_rows).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        let train_count = if train_fraction >= 1.0 {
            self.n_rows
        } else {
            let rounded = (train_fraction * self.n_rows as f64 + 0.5).floor() as usize;
            rounded.clamp(1, self.n_rows - 1)
        };
        let train = self.take_rows(&order[..train_count]);
        let test = self.take_rows(&order[train_count..]);
        Ok((train, test))
    }

    /// Retains exactly the rows whose every cell is observed.
    pub fn drop_rows_with_missing(&self) -> Table {
        let rows: Vec<usize> = (0..self.n_rows)
            .filter(|&r| self.columns.iter().all(|c| c.is_observed(r)))
            .collect();
        self.take_rows(&rows)
    }

    /// Removes columns whose missing fraction strictly exceeds `max_fraction`.
    pub fn drop_columns_by_missing_fraction(&self, max_fraction: f64) -> Table {
        let columns: Vec<Column> = self
            .columns
            .iter()
            .filter(|c| {
                let fraction = if self.n_rows == 0 {
                    0.0
                } else {
                    c.missing_count() as f64 / self.n_rows as f64
                };
                fraction <= max_fraction
            })
            .cloned()
            .collect();
        Table {
            n_rows: self.n_rows,
            columns,
        }
    }
}

/// Per-column missing counts, in table column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnProfile {
    pub name: String,
    pub missing_count: usize,
    pub missing_fraction: f64,
}

/// Missing-cell summary of a table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissingnessProfile {
    pub n_rows: usize,
    pub total_missing_cells: usize,
    pub columns: Vec<ColumnProfile>,
}

impl MissingnessProfile {
    /// Column profiles sorted by missing count descending; ties keep table
    /// order. This is the presentation order of the column-wise figures.
    pub fn sorted_by_missing_desc(&self) -> Vec<&ColumnProfile> {
        let mut rows: Vec<&ColumnProfile> = self.columns.iter().collect();
        rows.sort_by(|a, b| b.missing_count.cmp(&a.missing_count));
        rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The eight-row housing fragment used across the module tests.
    pub(crate) fn housing_fragment() -> Table {
        let lot_frontage = Column::numeric(
            "LotFrontage",
            vec![
                None,
                Some(67.0),
                Some(64.0),
                None,
                None,
                None,
                None,
                Some(35.0),
            ],
        )
        .unwrap();
        let lot_area = Column::numeric(
            "LotArea",
            vec![
                Some(21453.0),
                Some(5604.0),
                Some(7301.0),
                Some(12692.0),
                Some(2117.0),
                Some(8963.0),
                Some(7000.0),
                Some(4274.0),
            ],
        )
        .unwrap();
        let mas_vnr_type = Column::categorical(
            "MasVnrType",
            vec![
                None,
                None,
                Some("BrkFace"),
                None,
                Some("BrkFace"),
                Some("BrkFace"),
                Some("BrkFace"),
                None,
            ],
        );
        let mas_vnr_area = Column::numeric(
            "MasVnrArea",
            vec![
                Some(0.0),
                Some(0.0),
                Some(500.0),
                Some(0.0),
                Some(513.0),
                Some(289.0),
                Some(90.0),
                None,
            ],
        )
        .unwrap();
        let bsmt_qual = Column::categorical(
            "BsmtQual",
            vec![
                Some("TA"),
                Some("TA"),
                None,
                Some("Gd"),
                Some("Gd"),
                Some("TA"),
                Some("TA"),
                Some("Gd"),
            ],
        );
        Table::new(vec![lot_frontage, lot_area, mas_vnr_type, mas_vnr_area, bsmt_qual]).unwrap()
    }

    #[test]
    fn profile_counts_housing_fragment() {
        let table = housing_fragment();
        let profile = table.profile();
        let by_name: std::collections::BTreeMap<_, _> = profile
            .columns
            .iter()
            .map(|c| (c.name.as_str(), c.missing_count))
            .collect();
        assert_eq!(by_name["LotFrontage"], 5);
        assert_eq!(by_name["LotArea"], 0);
        assert_eq!(by_name["MasVnrType"], 4);
        assert_eq!(by_name["MasVnrArea"], 1);
        assert_eq!(by_name["BsmtQual"], 1);
        assert_eq!(profile.total_missing_cells, 11);
        assert_eq!(profile.n_rows, 8);
    }

    #[test]
    fn profile_fully_observed_is_zero() {
        let table = Table::new(vec![
            Column::numeric("a", vec![Some(1.0), Some(2.0)]).unwrap(),
            Column::categorical("b", vec![Some("x"), Some("y")]),
        ])
        .unwrap();
        let profile = table.profile();
        assert!(profile.columns.iter().all(|c| c.missing_fraction == 0.0));
        assert_eq!(profile.total_missing_cells, 0);
    }

    #[test]
    fn drop_rows_with_missing_keeps_only_complete_rows() {
        let table = Table::new(vec![
            Column::numeric("a", vec![Some(1.0), None, Some(3.0)]).unwrap(),
            Column::numeric("b", vec![Some(4.0), Some(5.0), Some(6.0)]).unwrap(),
        ])
        .unwrap();
        let dropped = table.drop_rows_with_missing();
        assert_eq!(dropped.n_rows(), 2);
        assert_eq!(dropped.column("a").unwrap().number(0), Some(1.0));
        assert_eq!(dropped.column("a").unwrap().number(1), Some(3.0));
        assert_eq!(dropped.total_missing_cells(), 0);
    }

    #[test]
    fn drop_rows_on_fully_observed_table_is_identity() {
        let table = Table::new(vec![Column::numeric("a", vec![Some(1.0), Some(2.0)]).unwrap()])
            .unwrap();
        assert_eq!(table.drop_rows_with_missing(), table);
    }

    // Every row of the housing fragment carries at least one gap, so row
    // removal drops the whole fragment.
    #[test]
    fn drop_rows_on_housing_fragment_is_empty() {
        let table = housing_fragment();
        for row in 0..table.n_rows() {
            assert!(table.columns().iter().any(|c| !c.is_observed(row)));
        }
        assert_eq!(table.drop_rows_with_missing().n_rows(), 0);
    }

    #[test]
    fn drop_columns_threshold_is_strict() {
        let table = housing_fragment();
        assert_eq!(table.drop_columns_by_missing_fraction(1.0), table);

        let only_complete = table.drop_columns_by_missing_fraction(0.0);
        assert_eq!(only_complete.n_columns(), 1);
        assert_eq!(only_complete.columns()[0].name(), "LotArea");

        // A column at exactly the threshold is kept: MasVnrArea is 1/8.
        let at_bound = table.drop_columns_by_missing_fraction(1.0 / 8.0);
        assert!(at_bound.column("MasVnrArea").is_some());
        assert!(at_bound.column("BsmtQual").is_some());
        assert!(at_bound.column("MasVnrType").is_none());
    }

    #[test]
    fn split_counts_and_determinism() {
        let cells: Vec<Option<f64>> = (0..10).map(|i| Some(i as f64)).collect();
        let table = Table::new(vec![Column::numeric("a", cells).unwrap()]).unwrap();

        let (train, test) = table.train_test_split(0.3, 7).unwrap();
        assert_eq!(train.n_rows(), 3);
        assert_eq!(test.n_rows(), 7);

        let mut seen: Vec<f64> = (0..train.n_rows())
            .map(|r| train.column("a").unwrap().number(r).unwrap())
            .chain((0..test.n_rows()).map(|r| test.column("a").unwrap().number(r).unwrap()))
            .collect();
        seen.sort_by(f64::total_cmp);
        assert_eq!(seen, (0..10).map(|i| i as f64).collect::<Vec<_>>());

        let (train2, test2) = table.train_test_split(0.3, 7).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);
    }

    #[test]
    fn split_full_fraction_and_domain_errors() {
        let table = Table::new(vec![Column::numeric("a", vec![Some(1.0), Some(2.0)]).unwrap()])
            .unwrap();
        let (train, test) = table.train_test_split(1.0, 3).unwrap();
        assert_eq!(train.n_rows(), 2);
        assert_eq!(test.n_rows(), 0);

        assert!(table.train_test_split(0.0, 1).is_err());
        assert!(table.train_test_split(1.5, 1).is_err());
    }

    #[test]
    fn split_clamps_both_parts_nonempty() {
        let table = Table::new(vec![Column::numeric("a", vec![Some(1.0), Some(2.0)]).unwrap()])
            .unwrap();
        let (train, test) = table.train_test_split(0.01, 5).unwrap();
        assert_eq!(train.n_rows(), 1);
        assert_eq!(test.n_rows(), 1);
        let (train, test) = table.train_test_split(0.99, 5).unwrap();
        assert_eq!(train.n_rows(), 1);
        assert_eq!(test.n_rows(), 1);
    }

    #[test]
    fn duplicate_column_names_rejected() {
        let a = Column::numeric("a", vec![Some(1.0)]).unwrap();
        let b = Column::numeric("a", vec![Some(2.0)]).unwrap();
        assert!(matches!(Table::new(vec![a, b]), Err(Error::Schema(_))));
    }

    #[test]
    fn non_finite_observed_numeric_rejected() {
        assert!(Column::numeric("a", vec![Some(f64::NAN)]).is_err());
        assert!(Column::numeric("a", vec![Some(f64::INFINITY)]).is_err());
    }

    #[test]
    fn vocabulary_first_occurrence_order() {
        let col = Column::categorical("c", vec![Some("b"), Some("a"), Some("b"), None]);
        assert_eq!(
            col.vocabulary().unwrap(),
            &["b".to_string(), "a".to_string()]
        );
        assert_eq!(col.code(0), Some(0));
        assert_eq!(col.code(1), Some(1));
        assert_eq!(col.code(3), None);
    }
}
