//! Microdata: rows of `(y, d, cluster, weight)` plus free-form columns used
//! for subgroup filters, and the CSV reader/writer for them.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub y: bool,
    pub d: bool,
    /// Index into [`MicroSample::cluster_labels`].
    pub cluster: Option<u32>,
    pub weight: f64,
    /// Values of [`MicroSample::extra_columns`], in order.
    pub extra: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MicroSample {
    rows: Vec<Row>,
    extra_columns: Vec<String>,
    cluster_labels: Vec<String>,
    cluster_index: HashMap<String, u32>,
}

/// Column names used when reading or writing CSV files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub y: String,
    pub d: String,
    pub cluster: Option<String>,
    pub weight: Option<String>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            y: "y".into(),
            d: "d".into(),
            cluster: None,
            weight: None,
        }
    }
}

impl MicroSample {
    pub fn new(extra_columns: Vec<String>) -> Self {
        MicroSample {
            extra_columns,
            ..Default::default()
        }
    }

    pub fn with_capacity(extra_columns: Vec<String>, rows: usize) -> Self {
        MicroSample {
            rows: Vec::with_capacity(rows),
            extra_columns,
            ..Default::default()
        }
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn extra_columns(&self) -> &[String] {
        &self.extra_columns
    }

    pub fn cluster_labels(&self) -> &[String] {
        &self.cluster_labels
    }

    /// Whether rows carry cluster identifiers.
    pub fn is_clustered(&self) -> bool {
        self.rows.first().is_some_and(|r| r.cluster.is_some())
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.extra_columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    fn intern(&mut self, label: &str) -> u32 {
        if let Some(&id) = self.cluster_index.get(label) {
            return id;
        }
        let id = self.cluster_labels.len() as u32;
        self.cluster_labels.push(label.to_string());
        self.cluster_index.insert(label.to_string(), id);
        id
    }

    /// Appends a row. Either every row has a cluster or none does.
    pub fn push(
        &mut self,
        y: bool,
        d: bool,
        cluster: Option<&str>,
        weight: f64,
        extra: Vec<String>,
    ) -> Result<()> {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::InvalidSample(format!(
                "weights must be finite and positive, got {weight}"
            )));
        }
        if extra.len() != self.extra_columns.len() {
            return Err(Error::InvalidSample(format!(
                "row has {} extra values, expected {}",
                extra.len(),
                self.extra_columns.len()
            )));
        }
        if !self.rows.is_empty() && self.is_clustered() != cluster.is_some() {
            return Err(Error::InvalidSample(
                "cluster identifiers must be given for all rows or none".into(),
            ));
        }
        let cluster = cluster.map(|c| self.intern(c));
        self.rows.push(Row {
            y,
            d,
            cluster,
            weight,
            extra,
        });
        Ok(())
    }

    /// Fast path for generated data: unit weight, numeric cluster label.
    pub(crate) fn push_generated(&mut self, y: bool, d: bool, cluster: usize) {
        while self.cluster_labels.len() <= cluster {
            let label = format!("c{}", self.cluster_labels.len());
            self.intern(&label);
        }
        let id = cluster as u32;
        self.rows.push(Row {
            y,
            d,
            cluster: Some(id),
            weight: 1.0,
            extra: Vec::new(),
        });
    }

    pub fn from_csv_path(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref()).map_err(|e| {
            Error::InvalidSample(format!("cannot open {}: {e}", path.as_ref().display()))
        })?;
        Self::from_csv_reader(file, schema)
    }

    /// Reads a headed, comma-delimited CSV. `y` and `d` must be 0 or 1;
    /// columns not named in `schema` are kept for filtering.
    pub fn from_csv_reader<R: Read>(reader: R, schema: &CsvSchema) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::InvalidSample(format!("bad header: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        let find = |name: &str| {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::UnknownColumn(name.to_string()))
        };
        let y_idx = find(&schema.y)?;
        let d_idx = find(&schema.d)?;
        let c_idx = schema.cluster.as_deref().map(find).transpose()?;
        let w_idx = schema.weight.as_deref().map(find).transpose()?;
        let reserved = [Some(y_idx), Some(d_idx), c_idx, w_idx];
        let extra_idx: Vec<usize> = (0..header.len())
            .filter(|i| !reserved.contains(&Some(*i)))
            .collect();

        let mut sample = MicroSample::new(extra_idx.iter().map(|&i| header[i].clone()).collect());
        for (line, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::InvalidSample(format!("row {}: {e}", line + 1)))?;
            let binary = |idx: usize, name: &str| -> Result<bool> {
                match record.get(idx) {
                    Some("0") => Ok(false),
                    Some("1") => Ok(true),
                    other => Err(Error::InvalidSample(format!(
                        "row {}: {name} must be 0 or 1, got {:?}",
                        line + 1,
                        other.unwrap_or("")
                    ))),
                }
            };
            let y = binary(y_idx, &schema.y)?;
            let d = binary(d_idx, &schema.d)?;
            let weight = match w_idx {
                Some(i) => record.get(i).unwrap_or("").parse::<f64>().map_err(|e| {
                    Error::InvalidSample(format!("row {}: bad weight: {e}", line + 1))
                })?,
                None => 1.0,
            };
            let cluster = c_idx.map(|i| record.get(i).unwrap_or(""));
            let extra = extra_idx
                .iter()
                .map(|&i| record.get(i).unwrap_or("").to_string())
                .collect();
            sample
                .push(y, d, cluster, weight, extra)
                .map_err(|e| match e {
                    Error::InvalidSample(msg) => Error::InvalidSample(format!("row {}: {msg}", line + 1)),
                    other => other,
                })?;
        }
        Ok(sample)
    }

    /// Writes `y,d[,cluster][,weight],extra...` with a header row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let io = |e: csv::Error| Error::InvalidSample(format!("write failed: {e}"));
        let mut wtr = csv::Writer::from_writer(writer);
        let clustered = self.is_clustered();
        let weighted = self.rows.iter().any(|r| r.weight != 1.0);
        let mut header = vec!["y".to_string(), "d".to_string()];
        if clustered {
            header.push("cluster".into());
        }
        if weighted {
            header.push("weight".into());
        }
        header.extend(self.extra_columns.iter().cloned());
        wtr.write_record(&header).map_err(io)?;
        for row in &self.rows {
            let mut rec = vec![
                u8::from(row.y).to_string(),
                u8::from(row.d).to_string(),
            ];
            if let Some(c) = row.cluster {
                rec.push(self.cluster_labels[c as usize].clone());
            }
            if weighted {
                rec.push(row.weight.to_string());
            }
            rec.extend(row.extra.iter().cloned());
            wtr.write_record(&rec).map_err(io)?;
        }
        wtr.flush()
            .map_err(|e| Error::InvalidSample(format!("write failed: {e}")))
    }
}

/// Conjunction of `column = value` conditions on extra columns.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Filter {
    pub conditions: Vec<(String, String)>,
}

impl Filter {
    pub fn new() -> Self {
        Filter::default()
    }

    pub fn eq(mut self, column: impl Into<String>, value: impl Into<String>) -> Self {
        self.conditions.push((column.into(), value.into()));
        self
    }

    /// Parses `col=val`.
    pub fn parse_condition(&mut self, spec: &str) -> Result<()> {
        let (col, val) = spec
            .split_once('=')
            .ok_or_else(|| Error::DomainError(format!("filter `{spec}` is not col=val")))?;
        self.conditions
            .push((col.trim().to_string(), val.trim().to_string()));
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }

    /// Resolves column names against `sample`, returning a row predicate.
    pub fn compile(&self, sample: &MicroSample) -> Result<impl Fn(&Row) -> bool + '_> {
        let resolved: Vec<(usize, &str)> = self
            .conditions
            .iter()
            .map(|(c, v)| Ok((sample.column_index(c)?, v.as_str())))
            .collect::<Result<_>>()?;
        Ok(move |row: &Row| resolved.iter().all(|(i, v)| row.extra[*i] == *v))
    }
}
