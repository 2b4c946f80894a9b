use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Result, RnnError};
use crate::mlrnn::LabeledDataset;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
    Last,
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    MinMax,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetFormat {
    Csv { path: PathBuf, label: LabelColumn },
    IdxPair { images: PathBuf, labels: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSource {
    pub format: DatasetFormat,
    pub normalization: Normalization,
}

impl DatasetSource {
    pub fn csv(path: impl Into<PathBuf>, label: LabelColumn) -> Self {
        Self {
            format: DatasetFormat::Csv {
                path: path.into(),
                label,
            },
            normalization: Normalization::None,
        }
    }

    pub fn idx(images: impl Into<PathBuf>, labels: impl Into<PathBuf>) -> Self {
        Self {
            format: DatasetFormat::IdxPair {
                images: images.into(),
                labels: labels.into(),
            },
            normalization: Normalization::None,
        }
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }
}

/// Per-attribute affine map to `[0, 1]` fitted on one split and reused on
/// others. Constant attributes map to 0; values outside the fitted range are
/// clipped.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    pub min: Array1<f64>,
    pub max: Array1<f64>,
}

impl MinMaxScaler {
    pub fn fit(x: ArrayView2<f64>) -> Self {
        let min = x.fold_axis(Axis(0), f64::INFINITY, |&a, &b| a.min(b));
        let max = x.fold_axis(Axis(0), f64::NEG_INFINITY, |&a, &b| a.max(b));
        Self { min, max }
    }

    pub fn width(&self) -> usize {
        self.min.len()
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.width() {
            return Err(RnnError::arg(format!(
                "scaler fitted on {} attributes, got {}",
                self.width(),
                x.ncols()
            )));
        }
        let mut out = x.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (lo, hi) = (self.min[j], self.max[j]);
            if hi > lo {
                col.mapv_inplace(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0));
            } else {
                col.fill(0.0);
            }
        }
        Ok(out)
    }
}

pub fn load_dataset(src: &DatasetSource) -> Result<LabeledDataset> {
    let mut data = match &src.format {
        DatasetFormat::Csv { path, label } => read_csv(path, label)?,
        DatasetFormat::IdxPair { images, labels } => read_idx_pair(images, labels)?,
    };
    if src.normalization == Normalization::MinMax {
        data.x = MinMaxScaler::fit(data.x.view()).transform(data.x.view())?;
    }
    LabeledDataset::new(data.x, data.y, data.class_names)
}

fn csv_location(path: &Path, pos: Option<&csv::Position>) -> String {
    match pos {
        Some(p) => format!("{}:{}", path.display(), p.line()),
        None => path.display().to_string(),
    }
}

/// Reads a headed CSV file. Classes are numbered in order of first
/// appearance of their label.
pub fn read_csv(path: &Path, label: &LabelColumn) -> Result<LabeledDataset> {
    let file = File::open(path)?;
    read_csv_from(BufReader::new(file), path, label)
}

pub(crate) fn read_csv_from<R: Read>(reader: R, path: &Path, label: &LabelColumn) -> Result<LabeledDataset> {
    let (x, raw) = read_table(reader, path, Some(label))?;
    let mut classes: Vec<String> = Vec::new();
    let mut class_index: HashMap<String, usize> = HashMap::new();
    let labels: Vec<usize> = raw
        .into_iter()
        .map(|key| {
            let next = classes.len();
            *class_index.entry(key.clone()).or_insert_with(|| {
                classes.push(key);
                next
            })
        })
        .collect();
    LabeledDataset::from_labels(x, &labels, classes)
}

/// Reads a headed CSV file in which every column is an attribute.
pub fn read_csv_features(path: &Path) -> Result<Array2<f64>> {
    let file = File::open(path)?;
    Ok(read_table(BufReader::new(file), path, None)?.0)
}

fn read_table<R: Read>(reader: R, path: &Path, label: Option<&LabelColumn>) -> Result<(Array2<f64>, Vec<String>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| RnnError::parse(csv_location(path, e.position()), e.to_string()))?
        .clone();
    if headers.is_empty() {
        return Err(RnnError::parse(csv_location(path, None), "missing header row"));
    }
    let label_idx = match label {
        None => None,
        Some(LabelColumn::Name(name)) => Some(
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| RnnError::parse(format!("{}:1", path.display()), format!("label column '{name}' not found")))?,
        ),
        Some(LabelColumn::Index(i)) if *i < headers.len() => Some(*i),
        Some(LabelColumn::Index(i)) => {
            return Err(RnnError::parse(
                format!("{}:1", path.display()),
                format!("label column index {i} out of range for {} columns", headers.len()),
            ))
        }
        Some(LabelColumn::Last) => Some(headers.len() - 1),
    };
    let width = headers.len() - usize::from(label_idx.is_some());

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut rows = 0;
    for record in rdr.records() {
        let record = record.map_err(|e| RnnError::parse(csv_location(path, e.position()), e.to_string()))?;
        let loc = csv_location(path, record.position());
        for (j, cell) in record.iter().enumerate() {
            if Some(j) == label_idx {
                labels.push(cell.trim().to_string());
            } else {
                let v: f64 = cell
                    .trim()
                    .parse()
                    .map_err(|_| RnnError::parse(loc.clone(), format!("non-numeric cell '{cell}' in column {}", j + 1)))?;
                values.push(v);
            }
        }
        rows += 1;
    }
    let x = Array2::from_shape_vec((rows, width), values).expect("rows have equal length");
    Ok((x, labels))
}

/// Writes attributes at full precision followed by a `label` column holding
/// class names.
pub fn write_csv(path: &Path, data: &LabeledDataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| RnnError::Io(e.into()))?;
    let mut header: Vec<String> = (0..data.x.ncols()).map(|j| format!("x{j}")).collect();
    header.push("label".into());
    w.write_record(&header).map_err(|e| RnnError::Io(e.into()))?;
    for (row, label) in data.x.rows().into_iter().zip(data.labels()) {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(data.class_names[label].clone());
        w.write_record(&rec).map_err(|e| RnnError::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn read_u32_be(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| RnnError::parse(format!("{} @ byte {offset}", path.display()), "truncated header"))
}

/// Image file of unsigned bytes, returned as a `count × (rows·cols)` matrix
/// scaled by 1/255.
pub fn read_idx_images(path: &Path) -> Result<Array2<f64>> {
    let bytes = std::fs::read(path)?;
    let magic = read_u32_be(&bytes, 0, path)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(RnnError::parse(
            format!("{} @ byte 0", path.display()),
            format!("bad magic 0x{magic:08x}, expected 0x{IDX_IMAGES_MAGIC:08x}"),
        ));
    }
    let count = read_u32_be(&bytes, 4, path)? as usize;
    let rows = read_u32_be(&bytes, 8, path)? as usize;
    let cols = read_u32_be(&bytes, 12, path)? as usize;
    let pixels = count * rows * cols;
    let body = bytes
        .get(16..16 + pixels)
        .ok_or_else(|| RnnError::parse(format!("{} @ byte 16", path.display()), format!("expected {pixels} pixel bytes")))?;
    Ok(Array2::from_shape_fn((count, rows * cols), |(i, j)| {
        body[i * rows * cols + j] as f64 / 255.0
    }))
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path)?;
    let magic = read_u32_be(&bytes, 0, path)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(RnnError::parse(
            format!("{} @ byte 0", path.display()),
            format!("bad magic 0x{magic:08x}, expected 0x{IDX_LABELS_MAGIC:08x}"),
        ));
    }
    let count = read_u32_be(&bytes, 4, path)? as usize;
    bytes
        .get(8..8 + count)
        .map(<[u8]>::to_vec)
        .ok_or_else(|| RnnError::parse(format!("{} @ byte 8", path.display()), format!("expected {count} label bytes")))
}

/// Image/label pair; classes are the distinct label values in ascending
/// order.
pub fn read_idx_pair(images: &Path, labels: &Path) -> Result<LabeledDataset> {
    let x = read_idx_images(images)?;
    let raw = read_idx_labels(labels)?;
    if raw.len() != x.nrows() {
        return Err(RnnError::parse(
            labels.display().to_string(),
            format!("{} labels for {} images", raw.len(), x.nrows()),
        ));
    }
    let mut values: Vec<u8> = raw.clone();
    values.sort_unstable();
    values.dedup();
    let ids: Vec<usize> = raw.iter().map(|v| values.binary_search(v).unwrap()).collect();
    let names = values.iter().map(u8::to_string).collect();
    LabeledDataset::from_labels(x, &ids, names)
}

/// Writes an IDX image file (`u8` pixels).
pub fn write_idx_images(path: &Path, images: &[Vec<u8>], rows: usize, cols: usize) -> Result<()> {
    let mut f = File::create(path)?;
    f.write_all(&IDX_IMAGES_MAGIC.to_be_bytes())?;
    for d in [images.len(), rows, cols] {
        f.write_all(&(d as u32).to_be_bytes())?;
    }
    for img in images {
        if img.len() != rows * cols {
            return Err(RnnError::arg("image has the wrong number of pixels"));
        }
        f.write_all(img)?;
    }
    Ok(())
}

pub fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<()> {
    let mut f = File::create(path)?;
    f.write_all(&IDX_LABELS_MAGIC.to_be_bytes())?;
    f.write_all(&(labels.len() as u32).to_be_bytes())?;
    f.write_all(labels)?;
    Ok(())
}
