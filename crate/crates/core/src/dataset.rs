//! Noisy-label datasets and their CSV / provenance sidecar format.
//!
//! CSV columns are `x_1..x_S, r_1..r_d, y, ytilde_1..ytilde_p`. Labels and
//! feature categories are 1-based in the file and 0-based in memory. The
//! provenance sidecar lives next to the CSV as `<stem>.provenance.json`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    /// Continuous instance features.
    pub x: Vec<f64>,
    /// Categorical features, 0-based categories.
    pub r: Vec<usize>,
    /// Clean (hidden) label, 0-based.
    pub y: usize,
    /// Noisy labels, 0-based.
    pub noisy: Vec<usize>,
}

/// Which model produced a dataset and with what seed and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub model: String,
    pub seed: u64,
    #[serde(rename = "K")]
    pub k: usize,
    pub p: usize,
    #[serde(default)]
    pub feature_cardinalities: Vec<usize>,
    pub params: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyDataset {
    pub records: Vec<Record>,
    /// Label cardinality (also the hidden cardinality unless features use a
    /// product hidden space).
    pub k: usize,
    pub p: usize,
    /// Cardinality of each categorical feature column.
    pub feature_cardinalities: Vec<usize>,
    pub provenance: Provenance,
}

impl NoisyDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Length of the continuous feature vector.
    pub fn feature_len(&self) -> usize {
        self.records.first().map_or(0, |r| r.x.len())
    }

    pub fn noisy_column(&self, i: usize) -> Vec<usize> {
        self.records.iter().map(|r| r.noisy[i]).collect()
    }

    pub fn feature_column(&self, i: usize) -> Vec<usize> {
        self.records.iter().map(|r| r.r[i]).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.feature_len();
        let d = self.feature_cardinalities.len();
        for (n, rec) in self.records.iter().enumerate() {
            if rec.x.len() != s || rec.r.len() != d || rec.noisy.len() != self.p {
                return Err(Error::Dimension(format!("record {n} has inconsistent width")));
            }
            if rec.noisy.iter().any(|&l| l >= self.k) {
                return Err(Error::Invalid(format!("record {n}: noisy label out of range")));
            }
            if let Some((i, _)) = rec
                .r
                .iter()
                .zip(&self.feature_cardinalities)
                .enumerate()
                .find(|(_, (v, c))| v >= c)
            {
                return Err(Error::Invalid(format!("record {n}: feature r_{} out of range", i + 1)));
            }
        }
        Ok(())
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = (1..=self.feature_len()).map(|i| format!("x_{i}")).collect();
        h.extend((1..=self.feature_cardinalities.len()).map(|i| format!("r_{i}")));
        h.push("y".into());
        h.extend((1..=self.p).map(|i| format!("ytilde_{i}")));
        h
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.header())?;
        let mut row: Vec<String> = Vec::new();
        for rec in &self.records {
            row.clear();
            row.extend(rec.x.iter().map(|v| v.to_string()));
            row.extend(rec.r.iter().map(|v| (v + 1).to_string()));
            row.push((rec.y + 1).to_string());
            row.extend(rec.noisy.iter().map(|v| (v + 1).to_string()));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Writes the CSV and its provenance sidecar; returns the sidecar path.
    pub fn save(&self, path: &Path) -> Result<PathBuf> {
        self.write_csv(BufWriter::new(File::create(path)?))?;
        let side = provenance_path(path);
        let mut f = BufWriter::new(File::create(&side)?);
        serde_json::to_writer_pretty(&mut f, &self.provenance)?;
        f.write_all(b"\n")?;
        f.flush()?;
        Ok(side)
    }

    /// Reads a dataset. The sidecar, when present, supplies `K` and the
    /// feature cardinalities; otherwise they are inferred from the largest
    /// values seen.
    pub fn load(path: &Path) -> Result<Self> {
        let side = provenance_path(path);
        let provenance: Option<Provenance> = if side.exists() {
            Some(serde_json::from_reader(File::open(&side)?)?)
        } else {
            None
        };
        let mut ds = Self::read_csv(File::open(path)?, provenance.as_ref())?;
        if let Some(p) = provenance {
            ds.provenance = p;
        }
        ds.validate()?;
        Ok(ds)
    }

    pub fn read_csv<R: std::io::Read>(r: R, provenance: Option<&Provenance>) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers()?.clone();
        let mut x_cols = Vec::new();
        let mut r_cols = Vec::new();
        let mut y_col = None;
        let mut noisy_cols = Vec::new();
        for (i, name) in header.iter().enumerate() {
            let name = name.trim();
            if let Some(rest) = name.strip_prefix("x_") {
                x_cols.push((column_number(rest, name)?, i));
            } else if let Some(rest) = name.strip_prefix("r_") {
                r_cols.push((column_number(rest, name)?, i));
            } else if let Some(rest) = name.strip_prefix("ytilde_") {
                noisy_cols.push((column_number(rest, name)?, i));
            } else if name == "y" {
                y_col = Some(i);
            } else {
                return Err(Error::Invalid(format!("unknown column '{name}'")));
            }
        }
        let y_col = y_col.ok_or_else(|| Error::Invalid("missing column 'y'".into()))?;
        for cols in [&mut x_cols, &mut r_cols, &mut noisy_cols] {
            cols.sort_unstable();
        }
        let label = |field: &str, line: usize| -> Result<usize> {
            let v: usize = field
                .trim()
                .parse()
                .map_err(|_| Error::Invalid(format!("line {line}: '{field}' is not a label")))?;
            v.checked_sub(1)
                .ok_or_else(|| Error::Invalid(format!("line {line}: labels are 1-based")))
        };
        let mut records = Vec::new();
        for (n, row) in rdr.records().enumerate() {
            let row = row?;
            let line = n + 2;
            let x = x_cols
                .iter()
                .map(|&(_, c)| {
                    row[c].trim().parse::<f64>().map_err(|_| {
                        Error::Invalid(format!("line {line}: '{}' is not a number", &row[c]))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let r = r_cols
                .iter()
                .map(|&(_, c)| label(&row[c], line))
                .collect::<Result<Vec<_>>>()?;
            let y = label(&row[y_col], line)?;
            let noisy = noisy_cols
                .iter()
                .map(|&(_, c)| label(&row[c], line))
                .collect::<Result<Vec<_>>>()?;
            records.push(Record { x, r, y, noisy });
        }
        let inferred_k = records
            .iter()
            .flat_map(|r| r.noisy.iter().chain(std::iter::once(&r.y)))
            .max()
            .map_or(2, |&m| (m + 1).max(2));
        let k = provenance.map_or(inferred_k, |p| p.k);
        let feature_cardinalities = match provenance {
            Some(p) if p.feature_cardinalities.len() == r_cols.len() => p.feature_cardinalities.clone(),
            _ => (0..r_cols.len())
                .map(|i| records.iter().map(|r| r.r[i] + 1).max().unwrap_or(2).max(2))
                .collect(),
        };
        let p = noisy_cols.len();
        Ok(Self {
            records,
            k,
            p,
            feature_cardinalities: feature_cardinalities.clone(),
            provenance: Provenance {
                model: "unknown".into(),
                seed: 0,
                k,
                p,
                feature_cardinalities,
                params: serde_json::Value::Null,
            },
        })
    }
}

fn column_number(rest: &str, name: &str) -> Result<usize> {
    rest.parse()
        .map_err(|_| Error::Invalid(format!("malformed column name '{name}'")))
}

pub fn provenance_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    csv_path.with_file_name(format!("{stem}.provenance.json"))
}
