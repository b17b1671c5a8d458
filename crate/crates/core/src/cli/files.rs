//! Sequence CSV and model JSON formats.
//!
//! CSV files carry a header row. Frame indices and states are 1-based.
//! Model files are a single JSON document with a schema version.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::TransitionModel;
use crate::kernel::KernelBasis;
use crate::learning::{FitMetadata, FittedDrHmm};
use crate::posterior::PosteriorModel;

pub const MODEL_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_LABEL_COLUMN: &str = "state";

/// Observations read from a sequence CSV, with optional 0-based labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceData {
    pub frames: Vec<u64>,
    pub observations: Vec<Vec<f64>>,
    pub labels: Option<Vec<usize>>,
}

fn parse_error(path: &Path, line: usize, what: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{}:{line}: {what}", path.display()))
}

/// Read `frame,y1,…,y_d[,label]`. Every column other than `frame` and the
/// label column is an observation coordinate, in file order. A missing
/// `frame` column numbers rows from 1.
pub fn read_sequence(path: &Path, label_column: &str) -> Result<SequenceData> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let frame_col = headers.iter().position(|h| h == "frame");
    let label_col = headers.iter().position(|h| h == label_column);
    let value_cols: Vec<usize> = (0..headers.len())
        .filter(|&c| Some(c) != frame_col && Some(c) != label_col)
        .collect();
    if value_cols.is_empty() {
        return Err(Error::Data(format!("{}: no observation columns", path.display())));
    }
    let mut data = SequenceData {
        frames: Vec::new(),
        observations: Vec::new(),
        labels: label_col.map(|_| Vec::new()),
    };
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| csv_error(path, e))?;
        let field = |c: usize| record.get(c).unwrap_or("");
        let frame = match frame_col {
            Some(c) => field(c)
                .parse::<u64>()
                .map_err(|_| parse_error(path, line, format!("frame {:?} is not an integer", field(c))))?,
            None => row as u64 + 1,
        };
        let y = value_cols
            .iter()
            .map(|&c| {
                let v: f64 = field(c)
                    .parse()
                    .map_err(|_| parse_error(path, line, format!("{:?} is not a number", field(c))))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Data(format!("{}:{line}: non-finite observation", path.display())))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if let (Some(c), Some(labels)) = (label_col, data.labels.as_mut()) {
            let state: usize = field(c)
                .parse()
                .map_err(|_| parse_error(path, line, format!("state {:?} is not a positive integer", field(c))))?;
            if state == 0 {
                return Err(Error::Data(format!("{}:{line}: states are numbered from 1", path.display())));
            }
            labels.push(state - 1);
        }
        data.frames.push(frame);
        data.observations.push(y);
    }
    if data.observations.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    Ok(data)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        }
    } else {
        Error::Parse(format!("{}: {e}", path.display()))
    }
}

/// Write a header and rows of already formatted fields.
pub fn write_csv<I, R>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut writer = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
    writer.write_record(header).map_err(io)?;
    for row in rows {
        writer.write_record(row).map_err(io)?;
    }
    writer.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Error::Data(e.to_string()))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// On-disk form of a fitted model. Field names follow the published schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema_version: u32,
    #[serde(rename = "S")]
    pub num_states: usize,
    pub d_y: usize,
    #[serde(rename = "A")]
    pub transitions: Vec<Vec<f64>>,
    pub pi: Vec<f64>,
    pub sigma: f64,
    pub rho: f64,
    pub centers: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    pub class_counts: Vec<f64>,
    pub metadata: FitMetadata,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(rows: &[Vec<f64>], ncols: usize, what: &str) -> Result<DMatrix<f64>> {
    if let Some(r) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::Parse(format!("{what}: row of length {} where {ncols} expected", r.len())));
    }
    Ok(DMatrix::from_row_iterator(rows.len(), ncols, rows.iter().flatten().copied()))
}

impl From<&FittedDrHmm> for ModelFile {
    fn from(model: &FittedDrHmm) -> Self {
        let pm = &model.posterior_model;
        let tm = &model.transition_model;
        Self {
            schema_version: MODEL_SCHEMA_VERSION,
            num_states: model.num_states(),
            d_y: model.dim(),
            transitions: rows(tm.transitions()),
            pi: tm.initial().iter().copied().collect(),
            sigma: pm.basis().sigma(),
            rho: pm.ridge(),
            centers: pm.basis().centers().to_vec(),
            theta: rows(pm.coefficients()),
            class_counts: pm.class_counts().to_vec(),
            metadata: model.metadata.clone(),
        }
    }
}

impl ModelFile {
    pub fn into_model(self) -> Result<FittedDrHmm> {
        if self.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "unsupported schema_version {} (expected {MODEL_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let s = self.num_states;
        if self.transitions.len() != s || self.pi.len() != s || self.theta.len() != s || self.class_counts.len() != s {
            return Err(Error::Parse(format!("model arrays disagree with S = {s}")));
        }
        if self.centers.iter().any(|c| c.len() != self.d_y) {
            return Err(Error::Parse(format!("centers disagree with d_y = {}", self.d_y)));
        }
        let tm = TransitionModel::new(matrix(&self.transitions, s, "A")?, DVector::from_vec(self.pi))?;
        let basis = KernelBasis::from_centers(self.centers, self.sigma)?;
        let theta = matrix(&self.theta, basis.len(), "theta")?;
        let pm = PosteriorModel::from_parts(theta, self.class_counts, basis, self.rho)?;
        FittedDrHmm::new(tm, pm, self.metadata)
    }
}

pub fn save_model(path: &Path, model: &FittedDrHmm) -> Result<()> {
    write_json(path, &ModelFile::from(model))
}

/// Parse and validate a model file. Malformed JSON and inconsistent
/// contents are both reported as parse errors.
pub fn load_model(path: &Path) -> Result<FittedDrHmm> {
    let text = std::fs::read_to_string(path)?;
    let file: ModelFile =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    file.into_model().map_err(|e| match e {
        Error::Parse(_) => e,
        other => Error::Parse(format!("{}: {other}", path.display())),
    })
}
