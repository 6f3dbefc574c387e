//! Column-typed tabular data, schemas and CSV ingestion.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::stats::ColumnView;

/// Categorical columns may not exceed this many distinct values.
pub const MAX_CATEGORIES: usize = 1 << 16;

/// Numeric columns with more distinct values than this are inferred continuous.
pub const INFER_CONTINUOUS_DISTINCT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Continuous,
    Categorical { cardinality: u32 },
    Binary,
}

impl FeatureKind {
    pub fn categorical(cardinality: u32) -> Self {
        if cardinality == 2 {
            FeatureKind::Binary
        } else {
            FeatureKind::Categorical { cardinality }
        }
    }

    /// Number of categories, `None` for continuous features.
    pub fn cardinality(&self) -> Option<usize> {
        match self {
            FeatureKind::Continuous => None,
            FeatureKind::Categorical { cardinality } => Some(*cardinality as usize),
            FeatureKind::Binary => Some(2),
        }
    }

    pub fn is_categorical(&self) -> bool {
        !matches!(self, FeatureKind::Continuous)
    }

    fn tag(&self) -> String {
        match self {
            FeatureKind::Continuous => "continuous".into(),
            FeatureKind::Categorical { cardinality } => format!("categorical({cardinality})"),
            FeatureKind::Binary => "binary".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDescriptor {
    pub name: String,
    pub kind: FeatureKind,
    /// Category names by code; may be shorter than the cardinality.
    pub levels: Vec<String>,
}

impl FeatureDescriptor {
    pub fn continuous(name: impl Into<String>) -> Self {
        FeatureDescriptor {
            name: name.into(),
            kind: FeatureKind::Continuous,
            levels: Vec::new(),
        }
    }

    /// Categorical feature whose levels are the code numbers themselves.
    pub fn categorical(name: impl Into<String>, cardinality: u32) -> Self {
        FeatureDescriptor {
            name: name.into(),
            kind: FeatureKind::categorical(cardinality),
            levels: (0..cardinality).map(|c| c.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelKind {
    Class { num_classes: u32 },
    Real,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelDescriptor {
    pub name: String,
    pub kind: LabelKind,
    pub levels: Vec<String>,
}

impl LabelDescriptor {
    pub fn class(name: impl Into<String>, num_classes: u32) -> Self {
        LabelDescriptor {
            name: name.into(),
            kind: LabelKind::Class { num_classes },
            levels: (0..num_classes).map(|c| c.to_string()).collect(),
        }
    }

    pub fn real(name: impl Into<String>) -> Self {
        LabelDescriptor {
            name: name.into(),
            kind: LabelKind::Real,
            levels: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub features: Vec<FeatureDescriptor>,
    pub label: LabelDescriptor,
}

impl Schema {
    pub fn new(features: Vec<FeatureDescriptor>, label: LabelDescriptor) -> Result<Self> {
        let schema = Schema { features, label };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for f in &self.features {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::Schema(format!("duplicate feature name `{}`", f.name)));
            }
            if let FeatureKind::Categorical { cardinality } = f.kind {
                if cardinality < 2 {
                    return Err(Error::Schema(format!(
                        "feature `{}` has cardinality {cardinality}, need at least 2",
                        f.name
                    )));
                }
                if cardinality as usize > MAX_CATEGORIES {
                    return Err(Error::TooManyCategories {
                        column: f.name.clone(),
                        limit: MAX_CATEGORIES,
                    });
                }
            }
            if let Some(k) = f.kind.cardinality() {
                if f.levels.len() > k {
                    return Err(Error::Schema(format!(
                        "feature `{}` lists more levels than its cardinality",
                        f.name
                    )));
                }
            }
        }
        if seen.contains(self.label.name.as_str()) {
            return Err(Error::Schema(format!(
                "label `{}` clashes with a feature name",
                self.label.name
            )));
        }
        if let LabelKind::Class { num_classes } = self.label.kind {
            if num_classes < 2 {
                return Err(Error::Schema(format!(
                    "label has {num_classes} classes, need at least 2"
                )));
            }
            if self.label.levels.len() > num_classes as usize {
                return Err(Error::Schema("label lists more levels than classes".into()));
            }
        }
        Ok(())
    }

    pub fn num_features(&self) -> usize {
        self.features.len()
    }

    /// Stable hash of names and kinds (category level names excluded).
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for f in &self.features {
            h.update(format!("f:{}:{};", f.name, f.kind.tag()));
        }
        let label = match self.label.kind {
            LabelKind::Class { num_classes } => format!("class({num_classes})"),
            LabelKind::Real => "real".into(),
        };
        h.update(format!("l:{}:{}", self.label.name, label));
        let digest = h.finalize();
        digest[..16].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Schema restricted to the given feature indices (in that order).
    pub fn select(&self, features: &[usize]) -> Schema {
        Schema {
            features: features.iter().map(|&i| self.features[i].clone()).collect(),
            label: self.label.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SchemaDoc = serde_json::from_str(text)?;
        doc.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SchemaDoc::from(self)).expect("schema serializes")
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }
}

// Sidecar schema file layout.
#[derive(Serialize, Deserialize)]
struct SchemaDoc {
    features: Vec<FeatureDoc>,
    label: LabelDoc,
}

#[derive(Serialize, Deserialize)]
struct FeatureDoc {
    name: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cardinality: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    levels: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct LabelDoc {
    name: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    num_classes: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    levels: Vec<String>,
}

impl From<&Schema> for SchemaDoc {
    fn from(s: &Schema) -> Self {
        SchemaDoc {
            features: s
                .features
                .iter()
                .map(|f| {
                    let (kind, cardinality) = match f.kind {
                        FeatureKind::Continuous => ("continuous", None),
                        FeatureKind::Categorical { cardinality } => ("categorical", Some(cardinality)),
                        FeatureKind::Binary => ("binary", None),
                    };
                    FeatureDoc {
                        name: f.name.clone(),
                        kind: kind.into(),
                        cardinality,
                        levels: f.levels.clone(),
                    }
                })
                .collect(),
            label: match s.label.kind {
                LabelKind::Class { num_classes } => LabelDoc {
                    name: s.label.name.clone(),
                    kind: "class".into(),
                    num_classes: Some(num_classes),
                    levels: s.label.levels.clone(),
                },
                LabelKind::Real => LabelDoc {
                    name: s.label.name.clone(),
                    kind: "real".into(),
                    num_classes: None,
                    levels: Vec::new(),
                },
            },
        }
    }
}

impl TryFrom<SchemaDoc> for Schema {
    type Error = Error;

    fn try_from(doc: SchemaDoc) -> Result<Schema> {
        let features = doc
            .features
            .into_iter()
            .map(|f| {
                let kind = match (f.kind.as_str(), f.cardinality) {
                    ("continuous", _) => FeatureKind::Continuous,
                    ("binary", _) => FeatureKind::Binary,
                    ("categorical", Some(c)) => FeatureKind::categorical(c),
                    ("categorical", None) => {
                        return Err(Error::Schema(format!("feature `{}` needs a cardinality", f.name)))
                    }
                    (other, _) => return Err(Error::Schema(format!("unknown feature kind `{other}`"))),
                };
                Ok(FeatureDescriptor {
                    name: f.name,
                    kind,
                    levels: f.levels,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let kind = match (doc.label.kind.as_str(), doc.label.num_classes) {
            ("class", Some(k)) => LabelKind::Class { num_classes: k },
            ("class", None) => return Err(Error::Schema("class label needs num_classes".into())),
            ("real", _) => LabelKind::Real,
            (other, _) => return Err(Error::Schema(format!("unknown label kind `{other}`"))),
        };
        Schema::new(
            features,
            LabelDescriptor {
                name: doc.label.name,
                kind,
                levels: doc.label.levels,
            },
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Continuous(Vec<f64>),
    Categorical(Vec<u32>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Continuous(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Value as a real; categorical codes are returned as exact integers.
    #[inline]
    pub fn value(&self, row: usize) -> f64 {
        match self {
            Column::Continuous(v) => v[row],
            Column::Categorical(v) => f64::from(v[row]),
        }
    }

    fn gather(&self, rows: &[usize]) -> Column {
        match self {
            Column::Continuous(v) => Column::Continuous(rows.iter().map(|&r| v[r]).collect()),
            Column::Categorical(v) => Column::Categorical(rows.iter().map(|&r| v[r]).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Labels {
    Class(Vec<u32>),
    Real(Vec<f64>),
}

impl Labels {
    pub fn len(&self) -> usize {
        match self {
            Labels::Class(v) => v.len(),
            Labels::Real(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn gather(&self, rows: &[usize]) -> Labels {
        match self {
            Labels::Class(v) => Labels::Class(rows.iter().map(|&r| v[r]).collect()),
            Labels::Real(v) => Labels::Real(rows.iter().map(|&r| v[r]).collect()),
        }
    }
}

/// Feature columns without labels, e.g. data to predict on.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    schema: Schema,
    columns: Vec<Column>,
    rows: usize,
}

impl FeatureTable {
    pub fn new(schema: Schema, columns: Vec<Column>) -> Result<Self> {
        schema.validate()?;
        if columns.len() != schema.features.len() {
            return Err(Error::Schema(format!(
                "{} columns for {} features",
                columns.len(),
                schema.features.len()
            )));
        }
        let rows = columns.first().map_or(0, Column::len);
        for (col, desc) in columns.iter().zip(&schema.features) {
            if col.len() != rows {
                return Err(Error::Schema(format!(
                    "column `{}` has {} rows, expected {rows}",
                    desc.name,
                    col.len()
                )));
            }
            match (col, desc.kind.cardinality()) {
                (Column::Continuous(_), None) => {}
                (Column::Categorical(codes), Some(k)) => {
                    if let Some(bad) = codes.iter().find(|&&c| c as usize >= k) {
                        return Err(Error::Schema(format!(
                            "column `{}` has code {bad} outside [0, {k})",
                            desc.name
                        )));
                    }
                }
                _ => {
                    return Err(Error::Schema(format!(
                        "column `{}` storage does not match its kind",
                        desc.name
                    )))
                }
            }
        }
        Ok(FeatureTable { schema, columns, rows })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, feature: usize) -> &Column {
        &self.columns[feature]
    }

    pub fn row_count(&self) -> usize {
        self.rows
    }

    pub fn num_features(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, row: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c.value(row)).collect()
    }

    pub fn column_view(&self, feature: usize) -> ColumnView<'_> {
        match &self.columns[feature] {
            Column::Continuous(v) => ColumnView::Continuous(v),
            Column::Categorical(codes) => ColumnView::Categorical {
                codes,
                cardinality: self.schema.features[feature].kind.cardinality().unwrap_or(0),
            },
        }
    }
}

/// Immutable labelled dataset with columnar storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    table: FeatureTable,
    labels: Labels,
    label_values: Vec<f64>,
}

impl Dataset {
    pub fn new(schema: Schema, columns: Vec<Column>, labels: Labels) -> Result<Self> {
        let table = FeatureTable::new(schema, columns)?;
        if table.schema.features.is_empty() && !labels.is_empty() {
            // no columns to infer the row count from; labels define it
            return Self::from_parts(
                FeatureTable {
                    rows: labels.len(),
                    ..table
                },
                labels,
            );
        }
        Self::from_parts(table, labels)
    }

    fn from_parts(table: FeatureTable, labels: Labels) -> Result<Self> {
        if labels.len() != table.rows {
            return Err(Error::Schema(format!(
                "{} labels for {} rows",
                labels.len(),
                table.rows
            )));
        }
        let label_values = match (&labels, table.schema.label.kind) {
            (Labels::Class(codes), LabelKind::Class { num_classes }) => {
                if let Some(bad) = codes.iter().find(|&&c| c >= num_classes) {
                    return Err(Error::Schema(format!("class code {bad} outside [0, {num_classes})")));
                }
                codes.iter().map(|&c| f64::from(c)).collect()
            }
            (Labels::Real(v), LabelKind::Real) => {
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Schema("labels must be finite".into()));
                }
                v.clone()
            }
            _ => return Err(Error::Schema("label storage does not match label kind".into())),
        };
        Ok(Dataset {
            table,
            labels,
            label_values,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.table.schema
    }

    pub fn features(&self) -> &FeatureTable {
        &self.table
    }

    pub fn column(&self, feature: usize) -> &Column {
        &self.table.columns[feature]
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    /// Labels as reals (class codes for classification).
    pub fn label_values(&self) -> &[f64] {
        &self.label_values
    }

    pub fn label_view(&self) -> ColumnView<'_> {
        match (&self.labels, self.schema().label.kind) {
            (Labels::Class(codes), LabelKind::Class { num_classes }) => ColumnView::Categorical {
                codes,
                cardinality: num_classes as usize,
            },
            _ => ColumnView::Continuous(&self.label_values),
        }
    }

    pub fn num_classes(&self) -> Option<usize> {
        match self.schema().label.kind {
            LabelKind::Class { num_classes } => Some(num_classes as usize),
            LabelKind::Real => None,
        }
    }

    pub fn row_count(&self) -> usize {
        self.table.rows
    }

    pub fn num_features(&self) -> usize {
        self.table.columns.len()
    }

    /// Copy of the given rows, in the given order (repeats allowed).
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let columns = self.table.columns.iter().map(|c| c.gather(rows)).collect();
        let labels = self.labels.gather(rows);
        Dataset {
            table: FeatureTable {
                schema: self.table.schema.clone(),
                columns,
                rows: rows.len(),
            },
            label_values: rows.iter().map(|&r| self.label_values[r]).collect(),
            labels,
        }
    }

    /// Copy restricted to the given feature indices.
    pub fn select_features(&self, features: &[usize]) -> Dataset {
        Dataset {
            table: FeatureTable {
                schema: self.table.schema.select(features),
                columns: features.iter().map(|&i| self.table.columns[i].clone()).collect(),
                rows: self.table.rows,
            },
            labels: self.labels.clone(),
            label_values: self.label_values.clone(),
        }
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(file)
    }

    pub fn write_csv_to<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let schema = self.schema();
        let mut header: Vec<&str> = schema.features.iter().map(|f| f.name.as_str()).collect();
        header.push(&schema.label.name);
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(header.len());
        for row in 0..self.row_count() {
            record.clear();
            for (col, desc) in self.table.columns.iter().zip(&schema.features) {
                record.push(match col {
                    Column::Continuous(v) => v[row].to_string(),
                    Column::Categorical(v) => level_name(&desc.levels, v[row]),
                });
            }
            record.push(match &self.labels {
                Labels::Class(v) => level_name(&schema.label.levels, v[row]),
                Labels::Real(v) => v[row].to_string(),
            });
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

pub(crate) fn level_name(levels: &[String], code: u32) -> String {
    levels.get(code as usize).cloned().unwrap_or_else(|| code.to_string())
}

/// Where the schema for [`load_csv`] comes from.
#[derive(Debug, Clone)]
pub enum SchemaSource {
    Given(Schema),
    Infer,
}

struct RawTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_raw(path: &Path) -> Result<RawTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        // data rows are numbered from 1, after the header
        if rec.len() != header.len() {
            return Err(Error::RaggedRow {
                row: i + 1,
                expected: header.len(),
                found: rec.len(),
            });
        }
        rows.push(rec.iter().map(|s| s.trim().to_string()).collect());
    }
    Ok(RawTable { header, rows })
}

fn column_index(header: &[String], name: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::MissingColumn(name.to_string()))
}

fn parse_real(cell: &str, row: usize, column: &str) -> Result<f64> {
    if cell.is_empty() {
        return Err(Error::MissingValue {
            row,
            column: column.to_string(),
        });
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::UnparseableCell {
            row,
            column: column.to_string(),
            value: cell.to_string(),
        }),
    }
}

/// Maps category strings to codes: known levels first, unseen strings appended
/// in first-appearance order up to `capacity`.
fn encode_categories(raw: &RawTable, col: usize, levels: &mut Vec<String>, capacity: usize) -> Result<Vec<u32>> {
    let name = &raw.header[col];
    let mut index: HashMap<String, u32> = levels.iter().enumerate().map(|(i, l)| (l.clone(), i as u32)).collect();
    let mut codes = Vec::with_capacity(raw.rows.len());
    for (r, row) in raw.rows.iter().enumerate() {
        let cell = &row[col];
        if cell.is_empty() {
            return Err(Error::MissingValue {
                row: r + 1,
                column: name.clone(),
            });
        }
        let code = match index.get(cell) {
            Some(&c) => c,
            None => {
                if levels.len() >= capacity {
                    return if capacity >= MAX_CATEGORIES {
                        Err(Error::TooManyCategories {
                            column: name.clone(),
                            limit: MAX_CATEGORIES,
                        })
                    } else {
                        Err(Error::UnparseableCell {
                            row: r + 1,
                            column: name.clone(),
                            value: cell.clone(),
                        })
                    };
                }
                let c = levels.len() as u32;
                levels.push(cell.clone());
                index.insert(cell.clone(), c);
                c
            }
        };
        codes.push(code);
    }
    Ok(codes)
}

enum Inferred {
    Continuous,
    Categorical,
}

/// Numeric columns are continuous when they have more than
/// [`INFER_CONTINUOUS_DISTINCT`] distinct values, hold a non-integer value,
/// or (with at least 3 rows) never repeat a value. Everything else is
/// categorical.
fn infer_column(raw: &RawTable, col: usize) -> Inferred {
    let mut distinct = HashSet::new();
    let mut fractional = false;
    for row in &raw.rows {
        match row[col].parse::<f64>() {
            Ok(v) if v.is_finite() => {
                fractional |= v.fract() != 0.0;
                distinct.insert(v.to_bits());
            }
            _ => return Inferred::Categorical,
        }
    }
    let n = raw.rows.len();
    if n == 0 {
        return Inferred::Continuous;
    }
    if distinct.len() > INFER_CONTINUOUS_DISTINCT || fractional || (n >= 3 && distinct.len() == n) {
        Inferred::Continuous
    } else {
        Inferred::Categorical
    }
}

fn build_columns(raw: &RawTable, features: &mut [FeatureDescriptor]) -> Result<Vec<Column>> {
    features
        .iter_mut()
        .map(|desc| {
            let col = column_index(&raw.header, &desc.name)?;
            match desc.kind.cardinality() {
                None => raw
                    .rows
                    .iter()
                    .enumerate()
                    .map(|(r, row)| parse_real(&row[col], r + 1, &desc.name))
                    .collect::<Result<Vec<_>>>()
                    .map(Column::Continuous),
                Some(k) => encode_categories(raw, col, &mut desc.levels, k).map(Column::Categorical),
            }
        })
        .collect()
}

fn build_labels(raw: &RawTable, col: usize, label: &mut LabelDescriptor) -> Result<Labels> {
    match label.kind {
        LabelKind::Class { num_classes } => {
            encode_categories(raw, col, &mut label.levels, num_classes as usize).map(Labels::Class)
        }
        LabelKind::Real => raw
            .rows
            .iter()
            .enumerate()
            .map(|(r, row)| parse_real(&row[col], r + 1, &label.name))
            .collect::<Result<Vec<_>>>()
            .map(Labels::Real),
    }
}

fn infer_schema(raw: &RawTable, label_column: &str) -> Result<Schema> {
    let label_col = column_index(&raw.header, label_column)?;
    let mut features = Vec::new();
    let mut label = None;
    for (col, name) in raw.header.iter().enumerate() {
        let kind = infer_column(raw, col);
        if col == label_col {
            label = Some(match kind {
                Inferred::Continuous => LabelDescriptor::real(name.clone()),
                Inferred::Categorical => {
                    let mut levels = Vec::new();
                    encode_categories(raw, col, &mut levels, MAX_CATEGORIES)?;
                    LabelDescriptor {
                        name: name.clone(),
                        kind: LabelKind::Class {
                            num_classes: levels.len().max(2) as u32,
                        },
                        levels,
                    }
                }
            });
            continue;
        }
        features.push(match kind {
            Inferred::Continuous => FeatureDescriptor::continuous(name.clone()),
            Inferred::Categorical => {
                let mut levels = Vec::new();
                encode_categories(raw, col, &mut levels, MAX_CATEGORIES)?;
                FeatureDescriptor {
                    name: name.clone(),
                    kind: FeatureKind::categorical(levels.len().max(2) as u32),
                    levels,
                }
            }
        });
    }
    Schema::new(features, label.expect("label column located above"))
}

/// Loads a labelled CSV file. With [`SchemaSource::Infer`] column kinds are
/// inferred and category codes follow first appearance; with a given schema,
/// feature columns are matched by name and extra columns are ignored.
pub fn load_csv(path: impl AsRef<Path>, schema: SchemaSource, label_column: &str) -> Result<Dataset> {
    let raw = read_raw(path.as_ref())?;
    let mut schema = match schema {
        SchemaSource::Given(s) => {
            if s.label.name != label_column {
                return Err(Error::Schema(format!(
                    "schema label is `{}`, requested `{label_column}`",
                    s.label.name
                )));
            }
            s
        }
        SchemaSource::Infer => infer_schema(&raw, label_column)?,
    };
    let label_col = column_index(&raw.header, label_column)?;
    let columns = build_columns(&raw, &mut schema.features)?;
    let labels = build_labels(&raw, label_col, &mut schema.label)?;
    let mut table = FeatureTable::new(schema, columns)?;
    table.rows = raw.rows.len();
    Dataset::from_parts(table, labels)
}

/// Loads feature columns only; a label column, if present, is ignored.
pub fn load_features_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<FeatureTable> {
    let raw = read_raw(path.as_ref())?;
    let mut schema = schema.clone();
    let columns = build_columns(&raw, &mut schema.features)?;
    let mut table = FeatureTable::new(schema, columns)?;
    table.rows = raw.rows.len();
    Ok(table)
}

/// Shuffles rows under `seed` and returns `(train, valid)` with
/// `round(valid_fraction · N)` validation rows. Each side keeps original row order.
pub fn split_train_valid(d: &Dataset, valid_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, valid) = split_indices(d.row_count(), valid_fraction, seed)?;
    Ok((d.subset(&train), d.subset(&valid)))
}

pub fn split_indices(n: usize, valid_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(valid_fraction > 0.0 && valid_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "validation fraction {valid_fraction} outside (0, 1)"
        )));
    }
    let n_valid = (valid_fraction * n as f64).round() as usize;
    if n_valid == 0 || n_valid >= n {
        return Err(Error::invalid(format!(
            "fraction {valid_fraction} of {n} rows leaves an empty side"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut valid = order[..n_valid].to_vec();
    let mut train = order[n_valid..].to_vec();
    valid.sort_unstable();
    train.sort_unstable();
    Ok((train, valid))
}

/// Strictly increasing row indices into a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SampleIndexSet(Vec<u32>);

impl SampleIndexSet {
    pub fn all(n: usize) -> Self {
        SampleIndexSet((0..n as u32).collect())
    }

    /// Wraps indices that are already strictly increasing.
    pub fn from_sorted(indices: Vec<u32>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invariant("sample indices not strictly increasing".into()));
        }
        Ok(SampleIndexSet(indices))
    }

    pub fn from_unsorted(mut indices: Vec<u32>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        SampleIndexSet(indices)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&i| i as usize)
    }

    /// Sorted union of two index sets.
    pub fn union(&self, other: &SampleIndexSet) -> SampleIndexSet {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        SampleIndexSet(out)
    }

    /// Label values of the referenced rows.
    pub fn gather(&self, values: &[f64]) -> Vec<f64> {
        self.0.iter().map(|&i| values[i as usize]).collect()
    }
}
