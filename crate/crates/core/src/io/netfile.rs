//! Plain-text network description.
//!
//! ```text
//! # two neurons inhibiting each other
//! L = 2
//! r = 1 1
//! Lambda = 0.5 0.5
//! lambda = 0 0
//! [W_minus]
//! 0 1
//! 1 0
//! ```
//!
//! `L`, `r` and `Lambda` are required. `lambda` and the `[W_plus]` /
//! `[W_minus]` blocks default to zeros. Values are whitespace- or
//! comma-separated; `#` starts a comment.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{Result, RnnError};
use crate::network::RnnNetwork;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Block {
    WPlus,
    WMinus,
}

fn numbers(text: &str, loc: &str) -> Result<Vec<f64>> {
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| RnnError::parse(loc.to_string(), format!("'{t}' is not a number")))
        })
        .collect()
}

pub fn parse_network(text: &str, source: &str) -> Result<RnnNetwork> {
    let mut size: Option<usize> = None;
    let mut rate = None;
    let mut exc = None;
    let mut inh = None;
    let mut rows: [Vec<(usize, Vec<f64>)>; 2] = [Vec::new(), Vec::new()];
    let mut block: Option<Block> = None;

    for (n, raw) in text.lines().enumerate() {
        let loc = format!("{source}:{}", n + 1);
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            block = Some(match name.trim() {
                "W_plus" | "W+" => Block::WPlus,
                "W_minus" | "W-" => Block::WMinus,
                other => return Err(RnnError::parse(loc, format!("unknown block [{other}]"))),
            });
            continue;
        }
        if let Some((key, value)) = line.split_once('=') {
            block = None;
            let slot = match key.trim() {
                "L" => {
                    let v = value.trim();
                    size = Some(v.parse().map_err(|_| RnnError::parse(loc.clone(), format!("L = '{v}' is not a count")))?);
                    continue;
                }
                "r" => &mut rate,
                "Lambda" => &mut exc,
                "lambda" => &mut inh,
                other => return Err(RnnError::parse(loc, format!("unknown key '{other}'"))),
            };
            if slot.is_some() {
                return Err(RnnError::parse(loc, format!("duplicate key '{}'", key.trim())));
            }
            *slot = Some((loc.clone(), numbers(value, &loc)?));
            continue;
        }
        match block {
            Some(b) => rows[b as usize].push((n + 1, numbers(line, &loc)?)),
            None => return Err(RnnError::parse(loc, "expected 'key = value' or a [block] header")),
        }
    }

    let at = |line: usize| format!("{source}:{line}");
    let size = size.ok_or_else(|| RnnError::parse(source.to_string(), "missing 'L'"))?;
    let vector = |v: Option<(String, Vec<f64>)>, name: &str, default: bool| -> Result<Array1<f64>> {
        match v {
            Some((_, vals)) if vals.len() == size => Ok(Array1::from(vals)),
            Some((loc, vals)) => Err(RnnError::parse(loc, format!("'{name}' has {} values, expected {size}", vals.len()))),
            None if default => Ok(Array1::zeros(size)),
            None => Err(RnnError::parse(source.to_string(), format!("missing '{name}'"))),
        }
    };
    let rate = vector(rate, "r", false)?;
    let exc = vector(exc, "Lambda", false)?;
    let inh = vector(inh, "lambda", true)?;

    let mut mats = Vec::with_capacity(2);
    for (name, block_rows) in ["W_plus", "W_minus"].iter().zip(rows) {
        let mut m = Array2::zeros((size, size));
        if !block_rows.is_empty() {
            if block_rows.len() != size {
                return Err(RnnError::parse(
                    at(block_rows.last().unwrap().0),
                    format!("[{name}] has {} rows, expected {size}", block_rows.len()),
                ));
            }
            for (i, (line, vals)) in block_rows.into_iter().enumerate() {
                if vals.len() != size {
                    return Err(RnnError::parse(at(line), format!("[{name}] row has {} values, expected {size}", vals.len())));
                }
                m.row_mut(i).assign(&Array1::from(vals));
            }
        }
        mats.push(m);
    }
    let w_minus = mats.pop().unwrap();
    let w_plus = mats.pop().unwrap();
    RnnNetwork::new(w_plus, w_minus, rate, exc, inh)
}

pub fn read_network(path: &Path) -> Result<RnnNetwork> {
    let text = std::fs::read_to_string(path)?;
    parse_network(&text, &path.display().to_string())
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

/// Inverse of [`parse_network`]; values are written at full precision.
pub fn format_network(net: &RnnNetwork) -> String {
    let mut s = String::new();
    writeln!(s, "L = {}", net.len()).unwrap();
    writeln!(s, "r = {}", join(net.rate().iter().copied())).unwrap();
    writeln!(s, "Lambda = {}", join(net.ext_excitatory().iter().copied())).unwrap();
    writeln!(s, "lambda = {}", join(net.ext_inhibitory().iter().copied())).unwrap();
    for (name, m) in [("W_plus", net.w_plus()), ("W_minus", net.w_minus())] {
        writeln!(s, "[{name}]").unwrap();
        for row in m.rows() {
            writeln!(s, "{}", join(row.iter().copied())).unwrap();
        }
    }
    s
}

pub fn write_network(path: &Path, net: &RnnNetwork) -> Result<()> {
    std::fs::write(path, format_network(net))?;
    Ok(())
}
