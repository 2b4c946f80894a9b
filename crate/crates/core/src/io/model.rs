//! Binary model container.
//!
//! ```text
//! "MLRN"  u32 version
//! payload:
//!   u32 layer-size count, u64 sizes…
//!   u32 channel count
//!     per channel: u64 input width, u32 layer count
//!       per layer: f64 rate, matrix W⁻
//!   matrix W⁺_L, matrix W⁻_L, f64 α
//!   matrix W⁺_readout, matrix λ_out (1 × n), f64 offset
//!   u32 class-name count (0 or output width)
//!     per name: u32 byte length, UTF-8 bytes
//!   u32 scaler count (0 or channel count)
//!     per scaler: matrix (2 × width), rows min and max
//! u64 checksum: first 8 bytes of SHA-256(payload)
//! ```
//!
//! Every integer and float is little-endian; a matrix is `u64 rows, u64 cols`
//! followed by the entries in row-major order.

use std::path::Path;

use ndarray::{Array1, Array2};
use sha2::{Digest, Sha256};

use crate::error::{Result, RnnError};
use crate::io::dataset::MinMaxScaler;
use crate::mlrnn::{Channel, EncoderLayer, MlrnnModel};

pub const MODEL_MAGIC: &[u8; 4] = b"MLRN";
pub const MODEL_VERSION: u32 = 1;

/// A trained model together with the input scaling it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: MlrnnModel,
    /// Empty, or one name per output cell.
    pub class_names: Vec<String>,
    /// Empty, or one scaler per channel.
    pub input_scaling: Vec<MinMaxScaler>,
}

impl From<MlrnnModel> for ModelFile {
    fn from(model: MlrnnModel) -> Self {
        Self {
            model,
            class_names: Vec::new(),
            input_scaling: Vec::new(),
        }
    }
}

pub fn checksum(payload: &[u8]) -> u64 {
    let digest = Sha256::digest(payload);
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn matrix(&mut self, m: &Array2<f64>) {
        self.u64(m.nrows() as u64);
        self.u64(m.ncols() as u64);
        for v in m.iter() {
            self.f64(*v);
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(RnnError::ModelFile(format!("truncated while reading {what} at byte {}", self.pos))),
        }
    }
    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
    fn usize(&mut self, what: &str) -> Result<usize> {
        usize::try_from(self.u64(what)?).map_err(|_| RnnError::ModelFile(format!("{what} does not fit in memory")))
    }
    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
    fn matrix(&mut self, what: &str) -> Result<Array2<f64>> {
        let rows = self.usize(what)?;
        let cols = self.usize(what)?;
        let len = rows
            .checked_mul(cols)
            .filter(|n| n.checked_mul(8).is_some_and(|b| b <= self.bytes.len() - self.pos))
            .ok_or_else(|| RnnError::ModelFile(format!("truncated while reading {what} ({rows} x {cols})")))?;
        let raw = self.take(len * 8, what)?;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Array2::from_shape_vec((rows, cols), values).unwrap())
    }
}

pub fn encode_model(file: &ModelFile) -> Vec<u8> {
    let m = &file.model;
    let mut p = Writer(Vec::new());
    let sizes = m.layer_sizes();
    p.u32(sizes.len() as u32);
    for s in sizes {
        p.u64(s as u64);
    }
    p.u32(m.channels.len() as u32);
    for ch in &m.channels {
        p.u64(ch.input_width as u64);
        p.u32(ch.layers.len() as u32);
        for layer in &ch.layers {
            p.f64(layer.rate);
            p.matrix(&layer.w_minus);
        }
    }
    p.matrix(&m.w_plus_l);
    p.matrix(&m.w_minus_l);
    p.f64(m.alpha);
    p.matrix(&m.w_plus_readout);
    p.matrix(&m.output_lambda.clone().insert_axis(ndarray::Axis(0)));
    p.f64(m.offset);
    p.u32(file.class_names.len() as u32);
    for name in &file.class_names {
        p.u32(name.len() as u32);
        p.0.extend_from_slice(name.as_bytes());
    }
    p.u32(file.input_scaling.len() as u32);
    for s in &file.input_scaling {
        let mut both = Array2::zeros((2, s.width()));
        both.row_mut(0).assign(&s.min);
        both.row_mut(1).assign(&s.max);
        p.matrix(&both);
    }

    let mut out = Vec::with_capacity(p.0.len() + 16);
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    let sum = checksum(&p.0);
    out.extend_from_slice(&p.0);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

pub fn decode_model(bytes: &[u8]) -> Result<ModelFile> {
    if bytes.len() < 4 || &bytes[..4] != MODEL_MAGIC {
        return Err(RnnError::ModelFile("magic check failed: not an MLRN file".into()));
    }
    if bytes.len() < 16 {
        return Err(RnnError::ModelFile("truncated header".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != MODEL_VERSION {
        return Err(RnnError::ModelFile(format!(
            "version check failed: file has version {version}, supported is {MODEL_VERSION}"
        )));
    }
    let payload = &bytes[8..bytes.len() - 8];
    let stored = u64::from_le_bytes(bytes[bytes.len() - 8..].try_into().unwrap());
    let actual = checksum(payload);
    if stored != actual {
        return Err(RnnError::ModelFile(format!(
            "checksum check failed: stored {stored:016x}, computed {actual:016x}"
        )));
    }

    let mut r = Reader { bytes: payload, pos: 0 };
    let n_sizes = r.u32("layer size count")? as usize;
    let mut sizes = Vec::with_capacity(n_sizes.min(1024));
    for _ in 0..n_sizes {
        sizes.push(r.usize("layer size")?);
    }
    let n_channels = r.u32("channel count")? as usize;
    if n_channels == 0 {
        return Err(RnnError::ModelFile("structure check failed: no channels".into()));
    }
    let mut channels = Vec::with_capacity(n_channels.min(1024));
    for _ in 0..n_channels {
        let input_width = r.usize("input width")?;
        let n_layers = r.u32("layer count")? as usize;
        let mut layers = Vec::with_capacity(n_layers.min(1024));
        for _ in 0..n_layers {
            let rate = r.f64("encoder rate")?;
            let w_minus = r.matrix("encoder weights")?;
            layers.push(EncoderLayer { w_minus, rate });
        }
        channels.push(Channel { input_width, layers });
    }
    let w_plus_l = r.matrix("W+_L")?;
    let w_minus_l = r.matrix("W-_L")?;
    let alpha = r.f64("alpha")?;
    let w_plus_readout = r.matrix("readout weights")?;
    let lambda = r.matrix("output lambda")?;
    let offset = r.f64("offset")?;
    let n_names = r.u32("class-name count")? as usize;
    let mut class_names = Vec::with_capacity(n_names.min(1024));
    for _ in 0..n_names {
        let len = r.u32("class-name length")? as usize;
        let raw = r.take(len, "class name")?;
        let name = std::str::from_utf8(raw)
            .map_err(|_| RnnError::ModelFile("structure check failed: class name is not UTF-8".into()))?;
        class_names.push(name.to_string());
    }
    let n_scalers = r.u32("scaler count")? as usize;
    let mut input_scaling = Vec::with_capacity(n_scalers.min(1024));
    for _ in 0..n_scalers {
        let both = r.matrix("input scaling")?;
        if both.nrows() != 2 {
            return Err(RnnError::ModelFile("structure check failed: input scaling must have 2 rows".into()));
        }
        input_scaling.push(MinMaxScaler {
            min: both.row(0).to_owned(),
            max: both.row(1).to_owned(),
        });
    }
    if r.pos != payload.len() {
        return Err(RnnError::ModelFile(format!(
            "structure check failed: {} trailing payload bytes",
            payload.len() - r.pos
        )));
    }
    if lambda.nrows() != 1 {
        return Err(RnnError::ModelFile("structure check failed: output lambda must be a row".into()));
    }
    let output_lambda: Array1<f64> = lambda.row(0).to_owned();

    let model = MlrnnModel {
        channels,
        w_plus_l,
        w_minus_l,
        alpha,
        w_plus_readout,
        output_lambda,
        offset,
    };
    let problems = model.audit();
    if !problems.is_empty() {
        return Err(RnnError::ModelFile(format!("audit check failed: {}", problems.join("; "))));
    }
    if model.layer_sizes() != sizes {
        return Err(RnnError::ModelFile(format!(
            "structure check failed: header sizes {sizes:?} disagree with matrices {:?}",
            model.layer_sizes()
        )));
    }
    if !class_names.is_empty() && class_names.len() != model.output_width() {
        return Err(RnnError::ModelFile(format!(
            "structure check failed: {} class names for {} outputs",
            class_names.len(),
            model.output_width()
        )));
    }
    if !input_scaling.is_empty()
        && (input_scaling.len() != model.channels.len()
            || input_scaling.iter().zip(&model.channels).any(|(s, c)| s.width() != c.input_width))
    {
        return Err(RnnError::ModelFile("structure check failed: input scaling does not match channels".into()));
    }
    Ok(ModelFile {
        model,
        class_names,
        input_scaling,
    })
}

pub fn save_model(file: &ModelFile, path: &Path) -> Result<()> {
    std::fs::write(path, encode_model(file))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    decode_model(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn tiny() -> ModelFile {
        // one encoder layer 2 -> 2, two paired cells, one output class
        let model = MlrnnModel {
            channels: vec![Channel {
                input_width: 2,
                layers: vec![EncoderLayer {
                    w_minus: array![[0.1, 0.2], [0.3, 0.0]],
                    rate: 0.6,
                }],
            }],
            w_plus_l: array![[0.0, 0.1], [0.0, 0.05]],
            w_minus_l: array![[0.1, 0.1], [0.05, 0.05]],
            alpha: 0.5,
            w_plus_readout: array![[0.2], [0.0]],
            output_lambda: array![0.0],
            offset: 0.0,
        };
        ModelFile {
            model,
            class_names: vec!["only".into()],
            input_scaling: vec![MinMaxScaler {
                min: array![0.0, 1.0],
                max: array![2.0, 1.0],
            }],
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let f = tiny();
        assert!(f.model.audit().is_empty(), "{:?}", f.model.audit());
        let bytes = encode_model(&f);
        assert_eq!(&bytes[..4], b"MLRN");
        let back = decode_model(&bytes).unwrap();
        assert_eq!(back, f);
        assert_eq!(encode_model(&back), bytes);
    }

    #[test]
    fn every_check_is_named() {
        let bytes = encode_model(&tiny());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_model(&bad).unwrap_err().to_string().contains("magic"));

        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(decode_model(&bad).unwrap_err().to_string().contains("version"));

        let mut bad = bytes.clone();
        bad[40] ^= 1;
        assert!(decode_model(&bad).unwrap_err().to_string().contains("checksum"));

        let mut f = tiny();
        f.model.channels[0].layers[0].w_minus[[0, 0]] = 5.0;
        let err = decode_model(&encode_model(&f)).unwrap_err().to_string();
        assert!(err.contains("audit"), "{err}");

        assert!(decode_model(&bytes[..10]).is_err());
    }
}
