//! Run configuration: a flat `key = value` text file mirroring the runtime
//! defaults. Missing keys fall back to the defaults; unknown keys are errors.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::filter::{FilterParams, Method};
use crate::io::{atomic_write, read_to_string};
use crate::pipeline::PipelineParams;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub brain_dilation_mm: f64,
    pub cvs_expand_mm: f64,
    pub confidence_threshold: f64,
    pub unexpanded_brain_box: bool,
    pub method: Method,
    pub iou_threshold: f64,
    pub m2_min_voxels: u64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            brain_dilation_mm: 3.6,
            cvs_expand_mm: 3.2,
            confidence_threshold: 0.8,
            unexpanded_brain_box: false,
            method: Method::M5,
            iou_threshold: 0.3,
            m2_min_voxels: 1,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn pipeline_params(&self) -> PipelineParams {
        PipelineParams {
            brain_dilation_mm: self.brain_dilation_mm,
            cvs_expand_mm: self.cvs_expand_mm,
            confidence_threshold: self.confidence_threshold,
            unexpanded_brain_box: self.unexpanded_brain_box,
        }
    }

    pub fn filter_params(&self) -> FilterParams {
        FilterParams {
            m2_min_voxels: self.m2_min_voxels,
        }
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = read_to_string(path)?;
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::parse(path, format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| {
                Error::parse(
                    path,
                    format!("line {}: {key} = '{value}' is not {what}", lineno + 1),
                )
            };
            match key {
                "brain_dilation_mm" => {
                    cfg.brain_dilation_mm = value.parse().map_err(|_| bad("a number"))?
                }
                "cvs_expand_mm" => {
                    cfg.cvs_expand_mm = value.parse().map_err(|_| bad("a number"))?
                }
                "confidence_threshold" => {
                    cfg.confidence_threshold = value.parse().map_err(|_| bad("a number"))?
                }
                "unexpanded_brain_box" => {
                    cfg.unexpanded_brain_box = value.parse().map_err(|_| bad("true or false"))?
                }
                "method" => {
                    let n: u8 = value.parse().map_err(|_| bad("a method number 1-5"))?;
                    cfg.method =
                        Method::from_number(n).map_err(|_| bad("a method number 1-5"))?;
                }
                "iou_threshold" => {
                    cfg.iou_threshold = value.parse().map_err(|_| bad("a number"))?
                }
                "m2_min_voxels" => {
                    cfg.m2_min_voxels = value.parse().map_err(|_| bad("a non-negative integer"))?
                }
                "output_dir" => cfg.output_dir = PathBuf::from(value),
                other => {
                    return Err(Error::parse(
                        path,
                        format!("line {}: unknown key '{other}'", lineno + 1),
                    ))
                }
            }
        }
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = format!(
            "brain_dilation_mm = {}\n\
             cvs_expand_mm = {}\n\
             confidence_threshold = {}\n\
             unexpanded_brain_box = {}\n\
             method = {}\n\
             iou_threshold = {}\n\
             m2_min_voxels = {}\n\
             output_dir = {}\n",
            self.brain_dilation_mm,
            self.cvs_expand_mm,
            self.confidence_threshold,
            self.unexpanded_brain_box,
            self.method.number(),
            self.iou_threshold,
            self.m2_min_voxels,
            self.output_dir.display(),
        );
        atomic_write(path, text.as_bytes())
    }
}
