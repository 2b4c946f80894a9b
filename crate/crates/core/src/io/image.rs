use std::path::Path;

use image::ImageFormat;
use ndarray::Array2;

use crate::conv::Image;
use crate::error::{Result, RnnError};

/// Affine map `byte = round((value - offset) * scale)` applied when writing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rescale {
    pub offset: f64,
    pub scale: f64,
}

impl Rescale {
    /// Map `[min, max]` of `values` onto `[0, 255]`; a constant image maps to 0.
    pub fn fit(values: &Array2<f64>) -> Self {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let scale = if hi > lo { 255.0 / (hi - lo) } else { 0.0 };
        Self {
            offset: if lo.is_finite() { lo } else { 0.0 },
            scale,
        }
    }

    /// Inverse of [`Rescale::apply`] up to byte rounding.
    pub fn invert(&self, byte: u8) -> f64 {
        if self.scale == 0.0 {
            self.offset
        } else {
            self.offset + byte as f64 / self.scale
        }
    }

    pub fn apply(&self, v: f64) -> u8 {
        ((v - self.offset) * self.scale).round().clamp(0.0, 255.0) as u8
    }
}

/// Reads a PGM (P2 or P5) as intensities in `[0, 1]`.
pub fn read_pgm(path: &Path) -> Result<Image> {
    let bytes = std::fs::read(path)?;
    let img = image::load_from_memory_with_format(&bytes, ImageFormat::Pnm)
        .map_err(|e| RnnError::parse(path.display().to_string(), e.to_string()))?;
    let gray = img.to_luma32f();
    let (w, h) = gray.dimensions();
    let pixels = Array2::from_shape_vec((h as usize, w as usize), gray.into_raw().into_iter().map(f64::from).collect())
        .expect("buffer matches dimensions");
    Image::new(pixels)
}

/// Writes a binary P5 graymap after affine rescaling to `[0, 255]`.
pub fn write_pgm(path: &Path, values: &Array2<f64>) -> Result<Rescale> {
    let rescale = Rescale::fit(values);
    let (h, w) = values.dim();
    let raw: Vec<u8> = values.iter().map(|&v| rescale.apply(v)).collect();
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    bytes.extend(raw);
    std::fs::write(path, bytes)?;
    Ok(rescale)
}

/// Matrix of numbers, one row per line, whitespace- or comma-separated;
/// `#` starts a comment.
pub fn parse_matrix(text: &str, source: &str) -> Result<Array2<f64>> {
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let loc = format!("{source}:{}", n + 1);
        let before = values.len();
        for tok in line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            values.push(
                tok.parse::<f64>()
                    .map_err(|_| RnnError::parse(loc.clone(), format!("'{tok}' is not a number")))?,
            );
        }
        let len = values.len() - before;
        match width {
            None => width = Some(len),
            Some(w) if w != len => {
                return Err(RnnError::parse(loc, format!("row has {len} values, expected {w}")));
            }
            _ => {}
        }
        rows += 1;
    }
    let width = width.ok_or_else(|| RnnError::parse(source.to_string(), "empty matrix"))?;
    Ok(Array2::from_shape_vec((rows, width), values).unwrap())
}

pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    parse_matrix(&std::fs::read_to_string(path)?, &path.display().to_string())
}

pub fn format_matrix(m: &Array2<f64>) -> String {
    let mut s = String::new();
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(f64::to_string).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn pgm_round_trip_through_rescale() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.pgm");
        let v = array![[-1.0, 0.0, 1.0], [0.5, 0.25, -0.5]];
        let r = write_pgm(&p, &v).unwrap();
        assert_eq!(r.offset, -1.0);
        assert_eq!(r.scale, 127.5);
        assert!(std::fs::read(&p).unwrap().starts_with(b"P5"));
        let img = read_pgm(&p).unwrap();
        assert_eq!(img.pixels().dim(), (2, 3));
        assert_eq!(img.pixels()[[0, 0]], 0.0);
        assert_eq!(img.pixels()[[0, 2]], 1.0);
        for (a, b) in img.pixels().iter().zip(&v) {
            let back = r.invert((a * 255.0).round() as u8);
            assert!((back - b).abs() <= 0.5 / r.scale + 1e-12);
        }
    }

    #[test]
    fn constant_image_writes_zeros() {
        let r = Rescale::fit(&Array2::from_elem((2, 2), 3.0));
        assert_eq!(r.scale, 0.0);
        assert_eq!(r.apply(3.0), 0);
    }

    #[test]
    fn matrix_text() {
        let m = parse_matrix("# k\n1 -2\n0.5, 3\n", "k.txt").unwrap();
        assert_eq!(m, array![[1.0, -2.0], [0.5, 3.0]]);
        assert_eq!(parse_matrix(&format_matrix(&m), "x").unwrap(), m);
        let err = parse_matrix("1 2\n3\n", "k.txt").unwrap_err();
        assert!(err.to_string().contains("k.txt:2"));
        assert!(parse_matrix("\n#\n", "k.txt").is_err());
    }
}
