//! Tabular training data, schemas and queries.
//!
//! A [`TrainingTable`] is the whole "model" of a lazy learner: the matrix of
//! attribute values plus one outcome label per row. Categorical cells are
//! stored as indices into their column's category list and continuous cells
//! as `f64`; the [`Schema`] owns the mapping back to text.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Category code used for query values never seen in training. It matches
/// no training cell.
pub const UNSEEN_CATEGORY: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    Categorical,
    Continuous,
}

fn default_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttributeKind,
    #[serde(default = "default_weight")]
    pub weight: f64,
    /// Ordered category set. `None` on a categorical column means "learn the
    /// categories from the data, in first-seen order".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<String>>,
    /// max − min over the training column; filled in when a table is built.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_width: Option<f64>,
}

impl AttributeSpec {
    pub fn categorical(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Categorical,
            weight: 1.0,
            categories: None,
            range_width: None,
        }
    }

    pub fn continuous(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Continuous,
            weight: 1.0,
            categories: None,
            range_width: None,
        }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_categories<I, S>(mut self, categories: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.categories = Some(categories.into_iter().map(Into::into).collect());
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.weight >= 0.0 && self.weight.is_finite()) {
            return Err(Error::InvalidSchema(format!(
                "attribute `{}` has invalid weight {}",
                self.name, self.weight
            )));
        }
        match self.kind {
            AttributeKind::Continuous => {
                if self.categories.is_some() {
                    return Err(Error::InvalidSchema(format!(
                        "continuous attribute `{}` cannot enumerate categories",
                        self.name
                    )));
                }
                if let Some(w) = self.range_width {
                    if !(w >= 0.0 && w.is_finite()) {
                        return Err(Error::InvalidSchema(format!(
                            "attribute `{}` has invalid range width {w}",
                            self.name
                        )));
                    }
                }
            }
            AttributeKind::Categorical => {
                if self.range_width.is_some() {
                    return Err(Error::InvalidSchema(format!(
                        "categorical attribute `{}` cannot carry a range width",
                        self.name
                    )));
                }
                if let Some(cats) = &self.categories {
                    let mut seen = HashSet::new();
                    if let Some(dup) = cats.iter().find(|c| !seen.insert(c.as_str())) {
                        return Err(Error::InvalidSchema(format!(
                            "attribute `{}` lists category {dup:?} twice",
                            self.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn category_code(&self, value: &str) -> Option<u32> {
        self.categories
            .as_ref()?
            .iter()
            .position(|c| c == value)
            .map(|i| i as u32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub attributes: Vec<AttributeSpec>,
    pub outcome_labels: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct SchemaFile {
    version: u32,
    #[serde(flatten)]
    schema: Schema,
}

impl Schema {
    pub fn new(attributes: Vec<AttributeSpec>, outcome_labels: Vec<String>) -> Result<Self> {
        let schema = Self {
            attributes,
            outcome_labels,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.attributes.is_empty() {
            return Err(Error::InvalidSchema("no attribute columns".into()));
        }
        let mut names = HashSet::new();
        for attr in &self.attributes {
            attr.validate()?;
            if !names.insert(attr.name.as_str()) {
                return Err(Error::InvalidSchema(format!(
                    "duplicate attribute name `{}`",
                    attr.name
                )));
            }
        }
        if self.outcome_labels.is_empty() {
            return Err(Error::InvalidSchema("no outcome labels".into()));
        }
        let mut labels = HashSet::new();
        if let Some(dup) = self
            .outcome_labels
            .iter()
            .find(|l| !labels.insert(l.as_str()))
        {
            return Err(Error::InvalidSchema(format!(
                "duplicate outcome label {dup:?}"
            )));
        }
        if !(self.total_weight() > 0.0) {
            return Err(Error::InvalidSchema(
                "total attribute weight must be positive".into(),
            ));
        }
        Ok(())
    }

    /// N_TAC.
    pub fn n_attributes(&self) -> usize {
        self.attributes.len()
    }

    pub fn n_labels(&self) -> usize {
        self.outcome_labels.len()
    }

    /// Sum of the raw attribute weights; the maximal entry match score.
    pub fn total_weight(&self) -> f64 {
        self.attributes.iter().map(|a| a.weight).sum()
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.outcome_labels.iter().position(|l| l == label)
    }

    /// Same attribute names and kinds in the same order.
    pub fn attributes_compatible(&self, other: &Schema) -> bool {
        self.attributes.len() == other.attributes.len()
            && self
                .attributes
                .iter()
                .zip(&other.attributes)
                .all(|(a, b)| a.name == b.name && a.kind == b.kind)
    }

    /// Copy of the schema with categories and ranges dropped, so that a table
    /// with other observed values can be loaded against the same columns.
    pub fn relaxed(&self) -> Schema {
        Schema {
            attributes: self
                .attributes
                .iter()
                .map(|a| AttributeSpec {
                    categories: None,
                    range_width: None,
                    ..a.clone()
                })
                .collect(),
            outcome_labels: self.outcome_labels.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let file = SchemaFile {
            version: SCHEMA_VERSION,
            schema: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SchemaFile = serde_json::from_str(text)?;
        if file.version != SCHEMA_VERSION {
            return Err(Error::UnsupportedVersion {
                what: "schema",
                found: file.version,
                expected: SCHEMA_VERSION,
            });
        }
        file.schema.validate()?;
        Ok(file.schema)
    }
}

/// One encoded cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Category(u32),
    Number(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTable {
    schema: Schema,
    values: Vec<Value>,
    outcomes: Vec<usize>,
}

impl TrainingTable {
    /// Builds a table from encoded rows. Categorical columns must have their
    /// categories enumerated; range widths are (re)computed from the data.
    pub fn new(schema: Schema, rows: Vec<Vec<Value>>, outcomes: Vec<usize>) -> Result<Self> {
        schema.validate()?;
        if rows.is_empty() {
            return Err(Error::EmptyTable);
        }
        if rows.len() != outcomes.len() {
            return Err(Error::Contract(format!(
                "{} rows but {} outcomes",
                rows.len(),
                outcomes.len()
            )));
        }
        let n = schema.n_attributes();
        let mut values = Vec::with_capacity(rows.len() * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::RaggedRow {
                    line: i as u64 + 1,
                    expected: n,
                    found: row.len(),
                });
            }
            for (attr, value) in schema.attributes.iter().zip(&row) {
                check_cell(attr, *value)?;
            }
            values.extend(row);
        }
        if let Some(&bad) = outcomes.iter().find(|&&o| o >= schema.n_labels()) {
            return Err(Error::Contract(format!("outcome index {bad} out of range")));
        }
        let mut table = Self {
            schema,
            values,
            outcomes,
        };
        table.store_ranges();
        Ok(table)
    }

    fn store_ranges(&mut self) {
        let ranges = column_ranges(self);
        for (attr, range) in self.schema.attributes.iter_mut().zip(ranges) {
            attr.range_width = range;
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    /// M_TEN.
    pub fn n_rows(&self) -> usize {
        self.outcomes.len()
    }

    /// N_TAC.
    pub fn n_attributes(&self) -> usize {
        self.schema.n_attributes()
    }

    pub fn row(&self, i: usize) -> &[Value] {
        let n = self.n_attributes();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[Value]> + '_ {
        self.values.chunks_exact(self.n_attributes())
    }

    pub fn outcome(&self, i: usize) -> usize {
        self.outcomes[i]
    }

    pub fn outcomes(&self) -> &[usize] {
        &self.outcomes
    }

    /// The row viewed as a query against this table.
    pub fn row_query(&self, i: usize) -> Query {
        Query {
            values: self.row(i).to_vec(),
        }
    }

    /// Text rendering of one cell.
    pub fn cell_text(&self, row: usize, col: usize) -> String {
        render_value(&self.schema.attributes[col], self.row(row)[col])
    }

    /// Writes the table as CSV (header, attribute columns, outcome last).
    pub fn write_csv<W: Write>(&self, writer: W, outcome_name: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self
            .schema
            .attributes
            .iter()
            .map(|a| a.name.as_str())
            .collect();
        header.push(outcome_name);
        w.write_record(&header)?;
        for i in 0..self.n_rows() {
            let mut record: Vec<String> = (0..self.n_attributes())
                .map(|j| self.cell_text(i, j))
                .collect();
            record.push(self.schema.outcome_labels[self.outcomes[i]].clone());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_cell(attr: &AttributeSpec, value: Value) -> Result<()> {
    match (attr.kind, value) {
        (AttributeKind::Categorical, Value::Category(code)) => {
            let n = attr.categories.as_ref().map_or(0, Vec::len);
            if (code as usize) < n {
                Ok(())
            } else {
                Err(Error::Contract(format!(
                    "category code {code} out of range for attribute `{}`",
                    attr.name
                )))
            }
        }
        (AttributeKind::Continuous, Value::Number(x)) if x.is_finite() => Ok(()),
        (AttributeKind::Continuous, Value::Number(x)) => Err(Error::Contract(format!(
            "non-finite value {x} in attribute `{}`",
            attr.name
        ))),
        _ => Err(Error::KindMismatch(attr.name.clone())),
    }
}

pub(crate) fn render_value(attr: &AttributeSpec, value: Value) -> String {
    match value {
        Value::Number(x) => x.to_string(),
        Value::Category(UNSEEN_CATEGORY) => "?".to_string(),
        Value::Category(code) => attr
            .categories
            .as_ref()
            .and_then(|c| c.get(code as usize))
            .cloned()
            .unwrap_or_else(|| "?".to_string()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub values: Vec<Value>,
}

impl Query {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn parse_number(text: &str) -> Option<f64> {
    text.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Infers column kinds from text rows. `header` and every row include the
/// outcome column as their last cell.
pub fn infer_schema<S: AsRef<str>>(raw_rows: &[Vec<S>], header: &[S]) -> Result<Schema> {
    if raw_rows.is_empty() {
        return Err(Error::EmptyTable);
    }
    if header.len() < 2 {
        return Err(Error::InvalidSchema(
            "need at least one attribute column and the outcome column".into(),
        ));
    }
    let n_attr = header.len() - 1;
    if let Some((i, row)) = raw_rows
        .iter()
        .enumerate()
        .find(|(_, r)| r.len() != header.len())
    {
        return Err(Error::RaggedRow {
            line: i as u64 + 2,
            expected: header.len(),
            found: row.len(),
        });
    }
    let mut attributes = Vec::with_capacity(n_attr);
    for (j, name) in header[..n_attr].iter().enumerate() {
        let numeric = raw_rows
            .iter()
            .all(|r| parse_number(r[j].as_ref()).is_some());
        let attr = if numeric {
            AttributeSpec::continuous(name.as_ref())
        } else {
            AttributeSpec::categorical(name.as_ref())
                .with_categories(first_seen(raw_rows.iter().map(|r| r[j].as_ref())))
        };
        attributes.push(attr);
    }
    let labels = first_seen(raw_rows.iter().map(|r| r[n_attr].as_ref()));
    Schema::new(attributes, labels)
}

fn first_seen<'a>(values: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen = HashSet::new();
    values
        .filter(|v| seen.insert(*v))
        .map(str::to_string)
        .collect()
}

/// Width of every continuous column (`None` for categorical ones).
pub fn column_ranges(table: &TrainingTable) -> Vec<Option<f64>> {
    table
        .schema
        .attributes
        .iter()
        .enumerate()
        .map(|(j, attr)| match attr.kind {
            AttributeKind::Categorical => None,
            AttributeKind::Continuous => {
                let (lo, hi) = table.rows().fold(
                    (f64::INFINITY, f64::NEG_INFINITY),
                    |(lo, hi), row| match row[j] {
                        Value::Number(x) => (lo.min(x), hi.max(x)),
                        Value::Category(_) => (lo, hi),
                    },
                );
                Some(hi - lo)
            }
        })
        .collect()
}

/// Parses one query. Unknown categorical values are accepted and encoded as
/// [`UNSEEN_CATEGORY`].
pub fn validate_query<S: AsRef<str>>(raw: &[S], schema: &Schema) -> Result<Query> {
    if raw.len() != schema.n_attributes() {
        return Err(Error::ArityMismatch {
            expected: schema.n_attributes(),
            found: raw.len(),
        });
    }
    let values = schema
        .attributes
        .iter()
        .zip(raw)
        .map(|(attr, cell)| {
            let cell = cell.as_ref();
            match attr.kind {
                AttributeKind::Categorical => Ok(Value::Category(
                    attr.category_code(cell).unwrap_or(UNSEEN_CATEGORY),
                )),
                AttributeKind::Continuous => {
                    parse_number(cell)
                        .map(Value::Number)
                        .ok_or_else(|| Error::InvalidQueryNumber {
                            column: attr.name.clone(),
                            value: cell.to_string(),
                        })
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Query { values })
}

/// Loads a CSV table whose last column is the outcome.
pub fn load_table<R: Read>(source: R, schema: Option<&Schema>) -> Result<TrainingTable> {
    load_table_with_outcome(source, schema, None)
}

/// Loads a CSV table, taking the outcome from the named column (default: the
/// last column).
pub fn load_table_with_outcome<R: Read>(
    source: R,
    schema: Option<&Schema>,
    outcome_column: Option<&str>,
) -> Result<TrainingTable> {
    let raw = read_csv(source)?;
    let width = raw.header.len();
    if width < 2 {
        return Err(Error::InvalidSchema(
            "need at least one attribute column and the outcome column".into(),
        ));
    }
    let outcome_at = match outcome_column {
        None => width - 1,
        Some(name) => raw
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::SchemaMismatch(format!("no column named `{name}`")))?,
    };
    // Move the outcome column last.
    let reorder = |mut cells: Vec<String>| {
        let outcome = cells.remove(outcome_at);
        cells.push(outcome);
        cells
    };
    let header = reorder(raw.header);
    let lines: Vec<u64> = raw.rows.iter().map(|(line, _)| *line).collect();
    let rows: Vec<Vec<String>> = raw.rows.into_iter().map(|(_, r)| reorder(r)).collect();
    if rows.is_empty() {
        return Err(Error::EmptyTable);
    }

    let mut schema = match schema {
        Some(s) => {
            s.validate()?;
            let names: Vec<&str> = s.attributes.iter().map(|a| a.name.as_str()).collect();
            let found: Vec<&str> = header[..width - 1].iter().map(String::as_str).collect();
            if names != found {
                return Err(Error::SchemaMismatch(format!(
                    "header columns {found:?} do not match schema attributes {names:?}"
                )));
            }
            s.clone()
        }
        None => infer_schema(&rows, &header)?,
    };

    let n_attr = width - 1;
    let mut learned: Vec<Option<HashMap<String, u32>>> = schema
        .attributes
        .iter()
        .map(|a| match (a.kind, &a.categories) {
            (AttributeKind::Categorical, None) => Some(HashMap::new()),
            _ => None,
        })
        .collect();
    let mut learned_order: Vec<Vec<String>> = vec![Vec::new(); n_attr];

    let mut encoded = Vec::with_capacity(rows.len());
    let mut outcomes = Vec::with_capacity(rows.len());
    for (row, &line) in rows.iter().zip(&lines) {
        let mut values = Vec::with_capacity(n_attr);
        for j in 0..n_attr {
            let attr = &schema.attributes[j];
            let cell = row[j].as_str();
            let value = match attr.kind {
                AttributeKind::Continuous => {
                    Value::Number(parse_number(cell).ok_or_else(|| Error::UnparseableNumber {
                        line,
                        column: attr.name.clone(),
                        value: cell.to_string(),
                    })?)
                }
                AttributeKind::Categorical => match &mut learned[j] {
                    Some(map) => {
                        let next = map.len() as u32;
                        let code = *map.entry(cell.to_string()).or_insert_with(|| {
                            learned_order[j].push(cell.to_string());
                            next
                        });
                        Value::Category(code)
                    }
                    None => Value::Category(attr.category_code(cell).ok_or_else(|| {
                        Error::UnknownCategory {
                            line,
                            column: attr.name.clone(),
                            value: cell.to_string(),
                        }
                    })?),
                },
            };
            values.push(value);
        }
        let label = row[n_attr].as_str();
        let outcome = schema
            .label_index(label)
            .ok_or_else(|| Error::UnknownLabel {
                line,
                value: label.to_string(),
            })?;
        encoded.push(values);
        outcomes.push(outcome);
    }
    for (attr, (map, order)) in schema
        .attributes
        .iter_mut()
        .zip(learned.iter().zip(learned_order))
    {
        if map.is_some() {
            attr.categories = Some(order);
        }
    }
    TrainingTable::new(schema, encoded, outcomes)
}

struct RawCsv {
    header: Vec<String>,
    /// (line number, cells)
    rows: Vec<(u64, Vec<String>)>,
}

fn read_csv<R: Read>(source: R) -> Result<RawCsv> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(Error::RaggedRow {
                line,
                expected: header.len(),
                found: record.len(),
            });
        }
        if let Some(j) = record.iter().position(|c| c.trim().is_empty()) {
            return Err(Error::MissingValue {
                line,
                column: header[j].clone(),
            });
        }
        rows.push((line, record.iter().map(str::to_string).collect()));
    }
    Ok(RawCsv { header, rows })
}

/// Reads a CSV of queries (header row required). A trailing column named
/// `outcome_column` is ignored. Returns (line number, raw cells) per query.
pub fn read_query_rows<R: Read>(source: R, schema: &Schema) -> Result<Vec<(u64, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let header_len = reader.headers()?.len();
    let n = schema.n_attributes();
    let drop_last = header_len == n + 1;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let mut cells: Vec<String> = record.iter().map(str::to_string).collect();
        if drop_last && cells.len() == n + 1 {
            cells.pop();
        }
        out.push((line, cells));
    }
    Ok(out)
}
