//! Run configuration: a flat key = value text format that round-trips
//! losslessly (floats use shortest round-trip formatting), plus validation
//! and hashing for report provenance.

use crate::mesh::Fnv;
use crate::spectrum::SpectrumConfig;
use crate::LabError;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunConfig {
    pub example: String,
    pub refine: usize,
    pub seed: u64,
    pub samples: usize,
    pub fd_step_verify: f64,
    pub fd_step_f: f64,
    pub fd_step_kuranishi: f64,
    pub window_lo: f64,
    pub window_hi: f64,
    pub gamma: f64,
    pub cluster_gap: f64,
    pub lobpcg_tol: f64,
    pub max_iter: usize,
    pub dense_threshold: usize,
    pub min_quality: f64,
    pub sup_bound: f64,
    pub lambda: f64,
    pub out_dir: String,
    pub convention: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            example: "L0".into(),
            refine: 2,
            seed: 20260809,
            samples: 1000,
            fd_step_verify: 1e-4,
            fd_step_f: 0.05,
            fd_step_kuranishi: 0.1,
            window_lo: 2.5,
            window_hi: 3.5,
            gamma: 10.0,
            cluster_gap: 0.2,
            lobpcg_tol: 1e-8,
            max_iter: 250,
            dense_threshold: 3000,
            min_quality: 1e-3,
            sup_bound: 0.5,
            lambda: 1.0,
            out_dir: "nk6-out".into(),
            convention: "standard".into(),
        }
    }
}

const KEYS: [&str; 19] = [
    "example",
    "refine",
    "seed",
    "samples",
    "fd_step_verify",
    "fd_step_f",
    "fd_step_kuranishi",
    "window_lo",
    "window_hi",
    "gamma",
    "cluster_gap",
    "lobpcg_tol",
    "max_iter",
    "dense_threshold",
    "min_quality",
    "sup_bound",
    "lambda",
    "out_dir",
    "convention",
];

impl RunConfig {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let value = match key {
                "example" => self.example.clone(),
                "refine" => self.refine.to_string(),
                "seed" => self.seed.to_string(),
                "samples" => self.samples.to_string(),
                "fd_step_verify" => self.fd_step_verify.to_string(),
                "fd_step_f" => self.fd_step_f.to_string(),
                "fd_step_kuranishi" => self.fd_step_kuranishi.to_string(),
                "window_lo" => self.window_lo.to_string(),
                "window_hi" => self.window_hi.to_string(),
                "gamma" => self.gamma.to_string(),
                "cluster_gap" => self.cluster_gap.to_string(),
                "lobpcg_tol" => self.lobpcg_tol.to_string(),
                "max_iter" => self.max_iter.to_string(),
                "dense_threshold" => self.dense_threshold.to_string(),
                "min_quality" => self.min_quality.to_string(),
                "sup_bound" => self.sup_bound.to_string(),
                "lambda" => self.lambda.to_string(),
                "out_dir" => self.out_dir.clone(),
                "convention" => self.convention.clone(),
                _ => unreachable!(),
            };
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&value);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, LabError> {
        let mut cfg = RunConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| LabError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim();
            let bad = |e: String| LabError::Config(format!("key {key}: {e}"));
            match key {
                "example" => cfg.example = value.to_string(),
                "refine" => cfg.refine = value.parse().map_err(|e| bad(format!("{e}")))?,
                "seed" => cfg.seed = value.parse().map_err(|e| bad(format!("{e}")))?,
                "samples" => cfg.samples = value.parse().map_err(|e| bad(format!("{e}")))?,
                "fd_step_verify" => cfg.fd_step_verify = value.parse().map_err(|e| bad(format!("{e}")))?,
                "fd_step_f" => cfg.fd_step_f = value.parse().map_err(|e| bad(format!("{e}")))?,
                "fd_step_kuranishi" => {
                    cfg.fd_step_kuranishi = value.parse().map_err(|e| bad(format!("{e}")))?
                }
                "window_lo" => cfg.window_lo = value.parse().map_err(|e| bad(format!("{e}")))?,
                "window_hi" => cfg.window_hi = value.parse().map_err(|e| bad(format!("{e}")))?,
                "gamma" => cfg.gamma = value.parse().map_err(|e| bad(format!("{e}")))?,
                "cluster_gap" => cfg.cluster_gap = value.parse().map_err(|e| bad(format!("{e}")))?,
                "lobpcg_tol" => cfg.lobpcg_tol = value.parse().map_err(|e| bad(format!("{e}")))?,
                "max_iter" => cfg.max_iter = value.parse().map_err(|e| bad(format!("{e}")))?,
                "dense_threshold" => {
                    cfg.dense_threshold = value.parse().map_err(|e| bad(format!("{e}")))?
                }
                "min_quality" => cfg.min_quality = value.parse().map_err(|e| bad(format!("{e}")))?,
                "sup_bound" => cfg.sup_bound = value.parse().map_err(|e| bad(format!("{e}")))?,
                "lambda" => cfg.lambda = value.parse().map_err(|e| bad(format!("{e}")))?,
                "out_dir" => cfg.out_dir = value.to_string(),
                "convention" => cfg.convention = value.to_string(),
                other => return Err(LabError::Config(format!("unknown key {other:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), LabError> {
        if self.refine > 8 {
            return Err(LabError::Config("refine must be <= 8".into()));
        }
        if !(self.fd_step_kuranishi > 0.0 && self.fd_step_kuranishi <= 0.2) {
            return Err(LabError::Config("fd_step_kuranishi must lie in (0, 0.2]".into()));
        }
        if !(self.window_lo < self.window_hi) {
            return Err(LabError::Config("window_lo must be below window_hi".into()));
        }
        if self.lambda < 0.0 {
            return Err(LabError::Config("lambda must be nonnegative".into()));
        }
        if !(self.sup_bound > 0.0) {
            return Err(LabError::Config("sup_bound must be positive".into()));
        }
        if self.convention != "standard" && self.convention != "flipped" {
            return Err(LabError::Config(
                "convention must be 'standard' or 'flipped'".into(),
            ));
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        let mut h = Fnv::new();
        h.write_bytes(self.to_text().as_bytes());
        format!("{:016x}", h.finish())
    }

    pub fn spectrum_config(&self) -> SpectrumConfig {
        SpectrumConfig {
            window_lo: self.window_lo,
            window_hi: self.window_hi,
            gamma: self.gamma,
            cluster_gap: self.cluster_gap,
            lobpcg_tol: self.lobpcg_tol,
            max_iter: self.max_iter,
            dense_threshold: self.dense_threshold,
            seed: self.seed,
            min_quality: self.min_quality,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_roundtrips_losslessly() {
        let mut cfg = RunConfig::default();
        cfg.fd_step_f = 0.037_219_481_113;
        cfg.window_hi = 3.507_712_000_1;
        cfg.seed = 987654321;
        let text = cfg.to_text();
        let back = RunConfig::from_text(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(text, back.to_text());
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(RunConfig::from_text("fd_step_kuranishi = 0.5").is_err());
        assert!(RunConfig::from_text("convention = sideways").is_err());
        assert!(RunConfig::from_text("nonsense = 1").is_err());
    }
}
