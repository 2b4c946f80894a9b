//! Flat `key = value` training configuration.
//!
//! ```text
//! hidden_layer_sizes = [100]
//! readout_width = 200
//! reg = 1.0
//! fista_max_iter = 100
//! # fista_step = 0.01      (omit for the automatic 1/Lipschitz step)
//! rate_divisor = 5.0
//! slann_weight_scale = 1.0
//! seed = 0
//! train_fraction = 0.75
//! normalization = "minmax"
//! ```
//!
//! Every key is optional; unknown keys are rejected.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Result, RnnError};
use crate::io::dataset::Normalization;
use crate::mlrnn::TrainConfig;
use crate::numeric::{FistaConfig, StepSize};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainFile {
    pub hidden_layer_sizes: Vec<usize>,
    pub readout_width: usize,
    pub reg: f64,
    pub fista_max_iter: usize,
    pub fista_step: Option<f64>,
    pub rate_divisor: f64,
    pub slann_weight_scale: f64,
    pub seed: u64,
    pub train_fraction: f64,
    pub normalization: String,
}

impl Default for TrainFile {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            hidden_layer_sizes: t.hidden_layer_sizes,
            readout_width: t.readout_width,
            reg: t.reg,
            fista_max_iter: t.fista.max_iter,
            fista_step: None,
            rate_divisor: t.rate_divisor,
            slann_weight_scale: t.slann_weight_scale,
            seed: t.seed,
            train_fraction: 0.75,
            normalization: "minmax".into(),
        }
    }
}

impl TrainFile {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let cfg: TrainFile = toml::from_str(text).map_err(|e| {
            let loc = match e.span() {
                Some(span) => format!("{source}:{}", text[..span.start].matches('\n').count() + 1),
                None => source.to_string(),
            };
            RnnError::parse(loc, e.message().to_string())
        })?;
        cfg.normalization()?;
        if !(cfg.train_fraction > 0.0 && cfg.train_fraction <= 1.0) {
            return Err(RnnError::parse(source.to_string(), "train_fraction must lie in (0, 1]"));
        }
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, &path.display().to_string())
    }

    pub fn normalization(&self) -> Result<Normalization> {
        match self.normalization.as_str() {
            "minmax" => Ok(Normalization::MinMax),
            "none" => Ok(Normalization::None),
            other => Err(RnnError::arg(format!("normalization must be 'minmax' or 'none', got '{other}'"))),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            hidden_layer_sizes: self.hidden_layer_sizes.clone(),
            readout_width: self.readout_width,
            fista: FistaConfig {
                max_iter: self.fista_max_iter,
                step: self.fista_step.map_or(StepSize::Auto, StepSize::Fixed),
                seed: self.seed,
            },
            reg: self.reg,
            seed: self.seed,
            rate_divisor: self.rate_divisor,
            slann_weight_scale: self.slann_weight_scale,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(TrainFile::parse("", "c").unwrap(), TrainFile::default());
    }

    #[test]
    fn values_are_read() {
        let c = TrainFile::parse("hidden_layer_sizes = [20, 10]\nreg = 0.5\nfista_step = 0.01\n", "c").unwrap();
        let t = c.train_config();
        assert_eq!(t.hidden_layer_sizes, vec![20, 10]);
        assert_eq!(t.reg, 0.5);
        assert!(matches!(t.fista.step, StepSize::Fixed(s) if s == 0.01));
    }

    #[test]
    fn unknown_key_fails_with_line() {
        let err = TrainFile::parse("reg = 1.0\nlearning_rate = 3\n", "c.toml").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("c.toml:2") && msg.contains("learning_rate"), "{msg}");
        assert!(TrainFile::parse("normalization = \"zscore\"\n", "c").is_err());
        assert!(TrainFile::parse("train_fraction = 0\n", "c").is_err());
    }
}
