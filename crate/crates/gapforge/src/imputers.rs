//! The imputation catalog: constant and statistic fills, next-valid fill,
//! KNN over partially observed rows, and predictive (regression / iterative)
//! imputation backed by the learner module.
//!
//! Fitting and transforming are strictly separated: every fill parameter
//! derives from the training table alone, so transforming a test table
//! leaks nothing from it.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::learners::{DesignMatrix, FittedLearner, LearnerSpec, Predictions, Targets};
use crate::tabular::{Column, ColumnKind, Table};

/// Which columns an imputer touches: every applicable column, or a named set.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum TargetColumns {
    #[default]
    All,
    Named(Vec<String>),
}

impl Serialize for TargetColumns {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TargetColumns::All => serializer.serialize_str("all"),
            TargetColumns::Named(names) => names.serialize(serializer),
        }
    }
}

impl<'de> Deserialize<'de> for TargetColumns {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct TargetVisitor;
        impl<'de> Visitor<'de> for TargetVisitor {
            type Value = TargetColumns;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "\"all\" or a list of column names")
            }

            fn visit_str<E: de::Error>(self, value: &str) -> std::result::Result<Self::Value, E> {
                if value == "all" {
                    Ok(TargetColumns::All)
                } else {
                    Err(E::custom(format!(
                        "expected \"all\" or a list of column names, got \"{value}\""
                    )))
                }
            }

            fn visit_seq<A: SeqAccess<'de>>(
                self,
                mut seq: A,
            ) -> std::result::Result<Self::Value, A::Error> {
                let mut names = Vec::new();
                while let Some(name) = seq.next_element::<String>()? {
                    names.push(name);
                }
                Ok(TargetColumns::Named(names))
            }
        }
        deserializer.deserialize_any(TargetVisitor)
    }
}

fn default_rounds() -> usize {
    3
}

/// The imputation strategies of the catalog.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum Strategy {
    Zero,
    Constant {
        value: f64,
    },
    Mean,
    Median,
    Mode,
    NewCategory {
        label: String,
    },
    NextValid,
    Knn {
        k: usize,
    },
    Regression {
        learner: LearnerSpec,
    },
    Iterative {
        learner: LearnerSpec,
        #[serde(default = "default_rounds")]
        rounds: usize,
    },
}

impl Strategy {
    /// Column kinds the strategy can fill.
    fn applies_to(&self, kind: ColumnKind) -> bool {
        match self {
            Strategy::Zero
            | Strategy::Constant { .. }
            | Strategy::Mean
            | Strategy::Median
            | Strategy::Knn { .. }
            | Strategy::Regression { .. }
            | Strategy::Iterative { .. } => kind == ColumnKind::Numeric,
            Strategy::Mode | Strategy::NewCategory { .. } => kind == ColumnKind::Categorical,
            Strategy::NextValid => true,
        }
    }

    /// Whether fitting needs at least one observed training cell per target.
    fn needs_observed_cells(&self) -> bool {
        !matches!(
            self,
            Strategy::Zero | Strategy::Constant { .. } | Strategy::NewCategory { .. }
        )
    }
}

/// An imputation strategy plus the columns it targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImputerSpec {
    #[serde(flatten)]
    pub strategy: Strategy,
    #[serde(default)]
    pub target_columns: TargetColumns,
}

impl ImputerSpec {
    pub fn new(strategy: Strategy) -> Self {
        ImputerSpec {
            strategy,
            target_columns: TargetColumns::All,
        }
    }

    pub fn zero() -> Self {
        Self::new(Strategy::Zero)
    }

    pub fn constant(value: f64) -> Self {
        Self::new(Strategy::Constant { value })
    }

    pub fn mean() -> Self {
        Self::new(Strategy::Mean)
    }

    pub fn median() -> Self {
        Self::new(Strategy::Median)
    }

    pub fn mode() -> Self {
        Self::new(Strategy::Mode)
    }

    pub fn new_category(label: impl Into<String>) -> Self {
        Self::new(Strategy::NewCategory {
            label: label.into(),
        })
    }

    pub fn next_valid() -> Self {
        Self::new(Strategy::NextValid)
    }

    pub fn knn(k: usize) -> Self {
        Self::new(Strategy::Knn { k })
    }

    pub fn regression(learner: LearnerSpec) -> Self {
        Self::new(Strategy::Regression { learner })
    }

    pub fn iterative(learner: LearnerSpec, rounds: usize) -> Self {
        Self::new(Strategy::Iterative { learner, rounds })
    }

    pub fn on_columns<S: Into<String>>(mut self, names: impl IntoIterator<Item = S>) -> Self {
        self.target_columns = TargetColumns::Named(names.into_iter().map(Into::into).collect());
        self
    }

    pub fn validate(&self) -> Result<()> {
        match &self.strategy {
            Strategy::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::Domain(format!(
                        "constant.value must be finite, got {value}"
                    )));
                }
            }
            Strategy::Knn { k } => {
                if *k < 1 {
                    return Err(Error::Domain("knn.k must be >= 1".into()));
                }
            }
            Strategy::Regression { learner } => learner.validate()?,
            Strategy::Iterative { learner, rounds } => {
                if *rounds < 1 {
                    return Err(Error::Domain("iterative.rounds must be >= 1".into()));
                }
                learner.validate()?;
            }
            _ => {}
        }
        Ok(())
    }

    /// Compact human-readable tag used in report headers.
    pub fn label(&self) -> String {
        match &self.strategy {
            Strategy::Zero => "zero".to_string(),
            Strategy::Constant { value } => format!("constant({value})"),
            Strategy::Mean => "mean".to_string(),
            Strategy::Median => "median".to_string(),
            Strategy::Mode => "mode".to_string(),
            Strategy::NewCategory { label } => format!("new_category({label})"),
            Strategy::NextValid => "next_valid".to_string(),
            Strategy::Knn { k } => format!("knn(k={k})"),
            Strategy::Regression { learner } => format!("regression({})", learner.label()),
            Strategy::Iterative { learner, rounds } => {
                format!("iterative({},rounds={rounds})", learner.label())
            }
        }
    }
}

/// A constant fill learned at fit time.
#[derive(Clone, Debug)]
enum FillValue {
    Number(f64),
    Label(String),
}

#[derive(Clone, Debug)]
struct KnnState {
    k: usize,
    /// Numeric training columns, in table order.
    numeric_names: Vec<String>,
    means: Vec<f64>,
    stds: Vec<f64>,
    /// Standardized training rows over the numeric columns.
    standardized: Vec<Vec<Option<f64>>>,
    /// Unstandardized originals, same shape.
    originals: Vec<Vec<Option<f64>>>,
    /// Observed training mean per target column, the zero-overlap fallback.
    fallback_means: BTreeMap<String, f64>,
}

#[derive(Clone, Debug)]
struct ImputeStep {
    column: String,
    model: FittedLearner,
}

#[derive(Clone, Debug)]
struct PredictiveState {
    /// Mean/mode pre-fill for every training column.
    initial_fills: BTreeMap<String, FillValue>,
    /// Training vocabularies backing the one-hot layout per categorical column.
    vocabularies: BTreeMap<String, Vec<String>>,
    steps: Vec<ImputeStep>,
    /// Whether step predictions refresh the working fills sequentially.
    refresh: bool,
}

#[derive(Clone, Debug)]
enum FitState {
    /// Zero / Constant / Mean / Median / Mode / NewCategory.
    Fill(BTreeMap<String, FillValue>),
    /// NextValid with per-column fallbacks for entirely missing columns.
    NextValid(BTreeMap<String, FillValue>),
    Knn(KnnState),
    Predictive(PredictiveState),
}

/// A train-fitted imputer; `transform` is deterministic and reads only the
/// table it is given plus training-derived parameters.
#[derive(Clone, Debug)]
pub struct FittedImputer {
    spec: ImputerSpec,
    schema: Vec<(String, ColumnKind)>,
    targets: Vec<String>,
    state: FitState,
}

impl FittedImputer {
    pub fn spec(&self) -> &ImputerSpec {
        &self.spec
    }

    /// Target columns resolved against the training schema, in table order.
    pub fn target_columns(&self) -> &[String] {
        &self.targets
    }
}

fn table_schema(table: &Table) -> Vec<(String, ColumnKind)> {
    table
        .columns()
        .iter()
        .map(|c| (c.name().to_string(), c.kind()))
        .collect()
}

/// Resolves the spec's target set against a table, checking kinds.
fn resolve_targets(spec: &ImputerSpec, table: &Table) -> Result<Vec<String>> {
    match &spec.target_columns {
        TargetColumns::All => Ok(table
            .columns()
            .iter()
            .filter(|c| spec.strategy.applies_to(c.kind()))
            .map(|c| c.name().to_string())
            .collect()),
        TargetColumns::Named(names) => {
            let mut resolved = Vec::new();
            for column in table.columns() {
                if !names.iter().any(|n| n == column.name()) {
                    continue;
                }
                if !spec.strategy.applies_to(column.kind()) {
                    return Err(Error::Fit(format!(
                        "strategy {} does not apply to {} column '{}'",
                        spec.label(),
                        column.kind(),
                        column.name()
                    )));
                }
                resolved.push(column.name().to_string());
            }
            for name in names {
                if table.column(name).is_none() {
                    return Err(Error::UnknownColumn(name.clone()));
                }
            }
            Ok(resolved)
        }
    }
}

fn observed_mean(column: &Column) -> Result<f64> {
    let values = column.observed_numeric();
    if values.is_empty() {
        return Err(Error::Fit(format!(
            "column '{}' has no observed training cells",
            column.name()
        )));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

fn observed_median(column: &Column) -> Result<f64> {
    let mut values = column.observed_numeric();
    if values.is_empty() {
        return Err(Error::Fit(format!(
            "column '{}' has no observed training cells",
            column.name()
        )));
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Ok(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

/// Most frequent observed label; ties break to the earliest vocabulary entry.
fn observed_mode(column: &Column) -> Result<String> {
    let vocabulary = column.vocabulary().expect("categorical column");
    let mut counts = vec![0_usize; vocabulary.len()];
    for code in column.observed_codes() {
        counts[code as usize] += 1;
    }
    let mut best: Option<usize> = None;
    for (code, &count) in counts.iter().enumerate() {
        if count > 0 && best.is_none_or(|b| count > counts[b]) {
            best = Some(code);
        }
    }
    match best {
        Some(code) => Ok(vocabulary[code].clone()),
        None => Err(Error::Fit(format!(
            "column '{}' has no observed training cells",
            column.name()
        ))),
    }
}

/// Fits an imputation strategy on training data.
pub fn fit(spec: &ImputerSpec, train: &Table) -> Result<FittedImputer> {
    spec.validate()?;
    let targets = resolve_targets(spec, train)?;
    if spec.strategy.needs_observed_cells() {
        for name in &targets {
            let column = train.require_column(name)?;
            if column.len() > 0 && column.missing_count() == column.len() {
                return Err(Error::Fit(format!(
                    "column '{name}' has no observed training cells"
                )));
            }
        }
    }

    let state = match &spec.strategy {
        Strategy::Zero => FitState::Fill(
            targets
                .iter()
                .map(|n| (n.clone(), FillValue::Number(0.0)))
                .collect(),
        ),
        Strategy::Constant { value } => FitState::Fill(
            targets
                .iter()
                .map(|n| (n.clone(), FillValue::Number(*value)))
                .collect(),
        ),
        Strategy::Mean => {
            let mut fills = BTreeMap::new();
            for name in &targets {
                fills.insert(
                    name.clone(),
                    FillValue::Number(observed_mean(train.require_column(name)?)?),
                );
            }
            FitState::Fill(fills)
        }
        Strategy::Median => {
            let mut fills = BTreeMap::new();
            for name in &targets {
                fills.insert(
                    name.clone(),
                    FillValue::Number(observed_median(train.require_column(name)?)?),
                );
            }
            FitState::Fill(fills)
        }
        Strategy::Mode => {
            let mut fills = BTreeMap::new();
            for name in &targets {
                fills.insert(
                    name.clone(),
                    FillValue::Label(observed_mode(train.require_column(name)?)?),
                );
            }
            FitState::Fill(fills)
        }
        Strategy::NewCategory { label } => FitState::Fill(
            targets
                .iter()
                .map(|n| (n.clone(), FillValue::Label(label.clone())))
                .collect(),
        ),
        Strategy::NextValid => {
            let mut fallbacks = BTreeMap::new();
            for name in &targets {
                let column = train.require_column(name)?;
                let fallback = match column.kind() {
                    ColumnKind::Numeric => FillValue::Number(observed_mean(column)?),
                    ColumnKind::Categorical => FillValue::Label(observed_mode(column)?),
                };
                fallbacks.insert(name.clone(), fallback);
            }
            FitState::NextValid(fallbacks)
        }
        Strategy::Knn { k } => FitState::Knn(fit_knn_state(train, &targets, *k)?),
        Strategy::Regression { learner } => FitState::Predictive(fit_predictive(
            train, &targets, learner, 1, false,
        )?),
        Strategy::Iterative { learner, rounds } => FitState::Predictive(fit_predictive(
            train, &targets, learner, *rounds, true,
        )?),
    };

    Ok(FittedImputer {
        spec: spec.clone(),
        schema: table_schema(train),
        targets,
        state,
    })
}

fn fit_knn_state(train: &Table, targets: &[String], k: usize) -> Result<KnnState> {
    let numeric_columns: Vec<&Column> = train
        .columns()
        .iter()
        .filter(|c| c.kind() == ColumnKind::Numeric)
        .collect();
    let numeric_names: Vec<String> = numeric_columns
        .iter()
        .map(|c| c.name().to_string())
        .collect();

    let mut means = Vec::with_capacity(numeric_columns.len());
    let mut stds = Vec::with_capacity(numeric_columns.len());
    for column in &numeric_columns {
        let observed = column.observed_numeric();
        if observed.is_empty() {
            // A column with no observed values contributes no coordinates.
            means.push(0.0);
            stds.push(1.0);
            continue;
        }
        let mean = observed.iter().sum::<f64>() / observed.len() as f64;
        let var = observed.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / observed.len() as f64;
        means.push(mean);
        stds.push(if var > 0.0 { var.sqrt() } else { 1.0 });
    }

    let mut standardized = Vec::with_capacity(train.n_rows());
    let mut originals = Vec::with_capacity(train.n_rows());
    for row in 0..train.n_rows() {
        let mut z_row = Vec::with_capacity(numeric_columns.len());
        let mut o_row = Vec::with_capacity(numeric_columns.len());
        for (j, column) in numeric_columns.iter().enumerate() {
            match column.number(row) {
                Some(value) => {
                    z_row.push(Some((value - means[j]) / stds[j]));
                    o_row.push(Some(value));
                }
                None => {
                    z_row.push(None);
                    o_row.push(None);
                }
            }
        }
        standardized.push(z_row);
        originals.push(o_row);
    }

    let mut fallback_means = BTreeMap::new();
    for name in targets {
        fallback_means.insert(name.clone(), observed_mean(train.require_column(name)?)?);
    }

    Ok(KnnState {
        k,
        numeric_names,
        means,
        stds,
        standardized,
        originals,
        fallback_means,
    })
}

/// A complete working copy of a table used while fitting and applying the
/// predictive imputers. The original mask is kept alongside the fills.
struct Working {
    names: Vec<String>,
    kinds: Vec<ColumnKind>,
    /// Numeric value or label per cell, complete after pre-fill.
    numeric: Vec<Option<Vec<f64>>>,
    labels: Vec<Option<Vec<String>>>,
    observed: Vec<Vec<bool>>,
    n_rows: usize,
}

impl Working {
    fn from_table(table: &Table, fills: &BTreeMap<String, FillValue>) -> Result<Working> {
        let mut numeric = Vec::new();
        let mut labels = Vec::new();
        let mut observed = Vec::new();
        let mut names = Vec::new();
        let mut kinds = Vec::new();
        for column in table.columns() {
            names.push(column.name().to_string());
            kinds.push(column.kind());
            let fill = fills.get(column.name());
            match column.kind() {
                ColumnKind::Numeric => {
                    let fill_value = match fill {
                        Some(FillValue::Number(v)) => *v,
                        _ => {
                            return Err(Error::Fit(format!(
                                "no numeric pre-fill for column '{}'",
                                column.name()
                            )))
                        }
                    };
                    let values: Vec<f64> = (0..table.n_rows())
                        .map(|r| column.number(r).unwrap_or(fill_value))
                        .collect();
                    numeric.push(Some(values));
                    labels.push(None);
                }
                ColumnKind::Categorical => {
                    let fill_label = match fill {
                        Some(FillValue::Label(l)) => l.clone(),
                        _ => {
                            return Err(Error::Fit(format!(
                                "no categorical pre-fill for column '{}'",
                                column.name()
                            )))
                        }
                    };
                    let values: Vec<String> = (0..table.n_rows())
                        .map(|r| {
                            column
                                .label(r)
                                .map(str::to_string)
                                .unwrap_or_else(|| fill_label.clone())
                        })
                        .collect();
                    labels.push(Some(values));
                    numeric.push(None);
                }
            }
            observed.push((0..table.n_rows()).map(|r| column.is_observed(r)).collect());
        }
        Ok(Working {
            names,
            kinds,
            numeric,
            labels,
            observed,
            n_rows: table.n_rows(),
        })
    }

    fn column_index(&self, name: &str) -> usize {
        self.names.iter().position(|n| n == name).expect("schema checked")
    }

    /// Encodes row `row` against the training vocabularies, excluding the
    /// `exclude` column. Labels outside the training vocabulary one-hot to
    /// all zeros.
    fn encode_row(
        &self,
        row: usize,
        exclude: usize,
        vocabularies: &BTreeMap<String, Vec<String>>,
    ) -> Vec<f64> {
        let mut encoded = Vec::new();
        for j in 0..self.names.len() {
            if j == exclude {
                continue;
            }
            match self.kinds[j] {
                ColumnKind::Numeric => {
                    encoded.push(self.numeric[j].as_ref().expect("numeric")[row]);
                }
                ColumnKind::Categorical => {
                    let vocabulary = &vocabularies[&self.names[j]];
                    let label = &self.labels[j].as_ref().expect("categorical")[row];
                    for entry in vocabulary {
                        encoded.push(if entry == label { 1.0 } else { 0.0 });
                    }
                }
            }
        }
        encoded
    }

    fn feature_names(
        &self,
        exclude: usize,
        vocabularies: &BTreeMap<String, Vec<String>>,
    ) -> Vec<String> {
        let mut names = Vec::new();
        for j in 0..self.names.len() {
            if j == exclude {
                continue;
            }
            match self.kinds[j] {
                ColumnKind::Numeric => names.push(self.names[j].clone()),
                ColumnKind::Categorical => {
                    for entry in &vocabularies[&self.names[j]] {
                        names.push(format!("{}={entry}", self.names[j]));
                    }
                }
            }
        }
        names
    }
}

fn fit_predictive(
    train: &Table,
    targets: &[String],
    learner: &LearnerSpec,
    rounds: usize,
    refresh: bool,
) -> Result<PredictiveState> {
    // Every column doubles as a feature, so all need a pre-fill statistic.
    let mut initial_fills = BTreeMap::new();
    let mut vocabularies = BTreeMap::new();
    for column in train.columns() {
        match column.kind() {
            ColumnKind::Numeric => {
                initial_fills.insert(
                    column.name().to_string(),
                    FillValue::Number(observed_mean(column)?),
                );
            }
            ColumnKind::Categorical => {
                initial_fills.insert(
                    column.name().to_string(),
                    FillValue::Label(observed_mode(column)?),
                );
                vocabularies.insert(
                    column.name().to_string(),
                    column.vocabulary().expect("categorical").to_vec(),
                );
            }
        }
    }

    let mut working = Working::from_table(train, &initial_fills)?;

    // Fewest-missing columns first, ties in table order.
    let mut ordered: Vec<String> = targets.to_vec();
    ordered.sort_by_key(|name| train.require_column(name).map(Column::missing_count).unwrap_or(0));

    let mut steps = Vec::new();
    for _ in 0..rounds {
        for name in &ordered {
            let target_idx = working.column_index(name);
            let observed_rows: Vec<usize> = (0..working.n_rows)
                .filter(|&r| working.observed[target_idx][r])
                .collect();
            if observed_rows.len() < 2 {
                return Err(Error::Fit(format!(
                    "predictive imputation of '{name}' needs at least 2 rows with the column observed, found {}",
                    observed_rows.len()
                )));
            }
            let features: Vec<Vec<f64>> = observed_rows
                .iter()
                .map(|&r| working.encode_row(r, target_idx, &vocabularies))
                .collect();
            let values: Vec<f64> = observed_rows
                .iter()
                .map(|&r| working.numeric[target_idx].as_ref().expect("numeric target")[r])
                .collect();
            let matrix = DesignMatrix::from_parts(
                features,
                working.feature_names(target_idx, &vocabularies),
                Targets::Numeric(values),
            )?;
            let model = learner.fit(&matrix)?;

            if refresh {
                let missing_rows: Vec<usize> = (0..working.n_rows)
                    .filter(|&r| !working.observed[target_idx][r])
                    .collect();
                if !missing_rows.is_empty() {
                    let queries: Vec<Vec<f64>> = missing_rows
                        .iter()
                        .map(|&r| working.encode_row(r, target_idx, &vocabularies))
                        .collect();
                    let predicted = numeric_predictions(model.predict_rows(&queries)?)?;
                    let column_values =
                        working.numeric[target_idx].as_mut().expect("numeric target");
                    for (&row, value) in missing_rows.iter().zip(predicted) {
                        column_values[row] = value;
                    }
                }
            }
            steps.push(ImputeStep {
                column: name.clone(),
                model,
            });
        }
    }

    Ok(PredictiveState {
        initial_fills,
        vocabularies,
        steps,
        refresh,
    })
}

fn numeric_predictions(predictions: Predictions) -> Result<Vec<f64>> {
    match predictions {
        Predictions::Numeric(values) => Ok(values),
        Predictions::Classes(_) => Err(Error::Fit(
            "predictive imputation requires a regression learner".into(),
        )),
    }
}

/// Applies a fitted imputer to a schema-compatible table.
///
/// Previously observed cells come through bit-identical; targeted missing
/// cells become observed.
pub fn transform(model: &FittedImputer, table: &Table) -> Result<Table> {
    let schema = table_schema(table);
    if schema != model.schema {
        return Err(Error::Transform(format!(
            "table schema does not match the fit schema (expected {:?}, got {:?})",
            model.schema, schema
        )));
    }

    match &model.state {
        FitState::Fill(fills) => {
            let mut out = table.clone();
            for (name, fill) in fills {
                let column = out.require_column(name)?.clone();
                out = out.replace_column(fill_column(&column, fill)?)?;
            }
            Ok(out)
        }
        FitState::NextValid(fallbacks) => {
            let mut out = table.clone();
            for (name, fallback) in fallbacks {
                let column = out.require_column(name)?.clone();
                out = out.replace_column(next_valid_column(&column, fallback)?)?;
            }
            Ok(out)
        }
        FitState::Knn(state) => transform_knn(model, state, table),
        FitState::Predictive(state) => transform_predictive(model, state, table),
    }
}

/// Fits, then transforms the same table.
pub fn fit_transform(spec: &ImputerSpec, table: &Table) -> Result<Table> {
    let model = fit(spec, table)?;
    transform(&model, table)
}

fn fill_column(column: &Column, fill: &FillValue) -> Result<Column> {
    match (column.kind(), fill) {
        (ColumnKind::Numeric, FillValue::Number(value)) => {
            let cells: Vec<Option<f64>> = column
                .numeric_cells()
                .expect("numeric")
                .into_iter()
                .map(|c| c.or(Some(*value)))
                .collect();
            Column::numeric(column.name(), cells)
        }
        (ColumnKind::Categorical, FillValue::Label(label)) => {
            let mut vocabulary = column.vocabulary().expect("categorical").to_vec();
            let code = match vocabulary.iter().position(|l| l == label) {
                Some(i) => i as u32,
                None => {
                    vocabulary.push(label.clone());
                    (vocabulary.len() - 1) as u32
                }
            };
            let cells: Vec<Option<u32>> = column
                .categorical_cells()
                .expect("categorical")
                .into_iter()
                .map(|c| c.or(Some(code)))
                .collect();
            Column::categorical_with_vocabulary(column.name(), vocabulary, cells)
        }
        _ => Err(Error::Transform(format!(
            "fill value kind does not match column '{}'",
            column.name()
        ))),
    }
}

/// Fills each gap with the next observed value below it; trailing gaps take
/// the column's last observed value, and entirely missing columns take the
/// training fallback.
fn next_valid_column(column: &Column, fallback: &FillValue) -> Result<Column> {
    match column.kind() {
        ColumnKind::Numeric => {
            let cells = column.numeric_cells().expect("numeric");
            let filled = next_valid_fill(&cells, match fallback {
                FillValue::Number(v) => Some(*v),
                FillValue::Label(_) => None,
            })
            .ok_or_else(|| {
                Error::Transform(format!(
                    "no fallback statistic for entirely missing column '{}'",
                    column.name()
                ))
            })?;
            Column::numeric(column.name(), filled.into_iter().map(Some).collect())
        }
        ColumnKind::Categorical => {
            let mut vocabulary = column.vocabulary().expect("categorical").to_vec();
            let fallback_code = match fallback {
                FillValue::Label(label) => match vocabulary.iter().position(|l| l == label) {
                    Some(i) => Some(i as u32),
                    None => {
                        vocabulary.push(label.clone());
                        Some((vocabulary.len() - 1) as u32)
                    }
                },
                FillValue::Number(_) => None,
            };
            let cells = column.categorical_cells().expect("categorical");
            let filled = next_valid_fill(&cells, fallback_code).ok_or_else(|| {
                Error::Transform(format!(
                    "no fallback statistic for entirely missing column '{}'",
                    column.name()
                ))
            })?;
            Column::categorical_with_vocabulary(
                column.name(),
                vocabulary,
                filled.into_iter().map(Some).collect(),
            )
        }
    }
}

fn next_valid_fill<T: Copy>(cells: &[Option<T>], fallback: Option<T>) -> Option<Vec<T>> {
    let last_observed = cells.iter().rev().find_map(|c| *c).or(fallback)?;
    let mut filled = Vec::with_capacity(cells.len());
    // The value each gap takes: next observed below, found by a backward scan.
    let mut next_below = last_observed;
    let mut from_below = vec![last_observed; cells.len()];
    for (i, cell) in cells.iter().enumerate().rev() {
        if let Some(value) = cell {
            next_below = *value;
        }
        from_below[i] = next_below;
    }
    for (cell, below) in cells.iter().zip(from_below) {
        filled.push(cell.unwrap_or(below));
    }
    Some(filled)
}

fn transform_knn(model: &FittedImputer, state: &KnnState, table: &Table) -> Result<Table> {
    // Standardized query rows over the numeric columns, using training stats.
    let mut queries: Vec<Vec<Option<f64>>> = Vec::with_capacity(table.n_rows());
    for row in 0..table.n_rows() {
        let mut q = Vec::with_capacity(state.numeric_names.len());
        for (j, name) in state.numeric_names.iter().enumerate() {
            let column = table.require_column(name)?;
            q.push(
                column
                    .number(row)
                    .map(|v| (v - state.means[j]) / state.stds[j]),
            );
        }
        queries.push(q);
    }

    let total_coordinates = state.numeric_names.len() as f64;
    let mut out = table.clone();
    for target in &model.targets {
        let target_idx = state
            .numeric_names
            .iter()
            .position(|n| n == target)
            .expect("targets are numeric");
        let column = table.require_column(target)?;
        let mut cells = column.numeric_cells().expect("numeric");
        for (row, cell) in cells.iter_mut().enumerate() {
            if cell.is_some() {
                continue;
            }
            // Candidate neighbors: training rows where the target is observed.
            let mut ranked: Vec<(f64, usize)> = Vec::new();
            for (train_idx, train_row) in state.standardized.iter().enumerate() {
                if state.originals[train_idx][target_idx].is_none() {
                    continue;
                }
                let mut used = 0.0;
                let mut sum = 0.0;
                for (q, t) in queries[row].iter().zip(train_row) {
                    if let (Some(q), Some(t)) = (q, t) {
                        used += 1.0;
                        sum += (q - t) * (q - t);
                    }
                }
                if used > 0.0 {
                    ranked.push(((total_coordinates / used * sum).sqrt(), train_idx));
                }
            }
            if ranked.is_empty() {
                *cell = Some(state.fallback_means[target]);
                continue;
            }
            ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let take = state.k.min(ranked.len());
            let sum: f64 = ranked[..take]
                .iter()
                .map(|&(_, i)| state.originals[i][target_idx].expect("candidate"))
                .sum();
            *cell = Some(sum / take as f64);
        }
        out = out.replace_column(Column::numeric(target, cells)?)?;
    }
    Ok(out)
}

fn transform_predictive(
    model: &FittedImputer,
    state: &PredictiveState,
    table: &Table,
) -> Result<Table> {
    let mut working = Working::from_table(table, &state.initial_fills)?;

    // Without refresh every step predicts from the initial pre-fill; with
    // refresh each step feeds the next one, replaying the fit schedule.
    let mut pending: Vec<(usize, Vec<usize>, Vec<f64>)> = Vec::new();
    for step in &state.steps {
        let target_idx = working.column_index(&step.column);
        let missing_rows: Vec<usize> = (0..working.n_rows)
            .filter(|&r| !working.observed[target_idx][r])
            .collect();
        if missing_rows.is_empty() {
            continue;
        }
        let queries: Vec<Vec<f64>> = missing_rows
            .iter()
            .map(|&r| working.encode_row(r, target_idx, &state.vocabularies))
            .collect();
        let predicted = numeric_predictions(step.model.predict_rows(&queries).map_err(
            |e| Error::Transform(e.to_string()),
        )?)?;
        if state.refresh {
            let values = working.numeric[target_idx].as_mut().expect("numeric");
            for (&row, value) in missing_rows.iter().zip(predicted) {
                values[row] = value;
            }
        } else {
            pending.push((target_idx, missing_rows, predicted));
        }
    }
    for (target_idx, rows, predicted) in pending {
        let values = working.numeric[target_idx].as_mut().expect("numeric");
        for (row, value) in rows.into_iter().zip(predicted) {
            values[row] = value;
        }
    }

    // Only targeted columns receive fills; everything else passes through.
    let mut out = table.clone();
    for target in &model.targets {
        let target_idx = working.column_index(target);
        let column = table.require_column(target)?;
        let values = working.numeric[target_idx].as_ref().expect("numeric");
        let cells: Vec<Option<f64>> = (0..table.n_rows())
            .map(|r| Some(column.number(r).unwrap_or(values[r])))
            .collect();
        out = out.replace_column(Column::numeric(target, cells)?)?;
    }
    Ok(out)
}
