//! Trained-model persistence: a versioned plain-text format with sections
//! for hyperparameters, site parameters, and the training inputs prediction
//! needs.

use std::fmt::Write as _;
use std::path::Path;

use crate::data::{InputMatrix, Standardization};
use crate::ep::{predict, state_from_sites, Prediction, SiteParams};
use crate::error::ConfigError;
use crate::kernel::{build_kernel_values, Hyperparams, KernelKind};

const MAGIC: &str = "csgp-model v1";

/// Everything needed to predict: hyperparameters, sites, training inputs,
/// and the feature transform applied at training time.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub hyp: Hyperparams,
    pub jitter_rel: f64,
    pub nu_tilde: Vec<f64>,
    pub tau_tilde: Vec<f64>,
    pub x_train: InputMatrix,
    pub standardization: Option<Standardization>,
}

impl TrainedModel {
    /// Predict at raw inputs, applying the stored feature transform.
    pub fn predict(&self, x_star_raw: &InputMatrix) -> Result<Vec<Prediction>, crate::SparseError> {
        let x_star = match &self.standardization {
            Some(s) => s.apply(x_star_raw),
            None => x_star_raw.clone(),
        };
        let k = build_kernel_values(&self.x_train, &self.hyp, self.jitter_rel);
        let sites = SiteParams {
            nu_tilde: self.nu_tilde.clone(),
            tau_tilde: self.tau_tilde.clone(),
            gamma: vec![0.0; self.nu_tilde.len()],
        };
        let state = state_from_sites(&k, sites)?;
        Ok(predict(&state, &k, &self.x_train, &x_star, &self.hyp))
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<(), ConfigError> {
        let n = self.x_train.n();
        let d = self.x_train.d();
        let mut out = String::new();
        writeln!(out, "{MAGIC}").unwrap();
        writeln!(out, "[hyperparams]").unwrap();
        writeln!(out, "kernel = {}", self.hyp.kind).unwrap();
        writeln!(out, "sigma2 = {:.17e}", self.hyp.sigma2).unwrap();
        writeln!(out, "length_scales = {}", join(&self.hyp.length_scales)).unwrap();
        writeln!(out, "jitter_rel = {:.17e}", self.jitter_rel).unwrap();
        if let Some(s) = &self.standardization {
            writeln!(out, "[standardization]").unwrap();
            writeln!(out, "mean = {}", join(&s.mean)).unwrap();
            writeln!(out, "scale = {}", join(&s.scale)).unwrap();
        }
        writeln!(out, "[sites]").unwrap();
        writeln!(out, "n = {n}").unwrap();
        for i in 0..n {
            writeln!(out, "{:.17e} {:.17e}", self.nu_tilde[i], self.tau_tilde[i]).unwrap();
        }
        writeln!(out, "[inputs]").unwrap();
        writeln!(out, "n = {n}").unwrap();
        writeln!(out, "d = {d}").unwrap();
        for i in 0..n {
            let row: Vec<String> = self
                .x_train
                .row(i)
                .iter()
                .map(|v| format!("{v:.17e}"))
                .collect();
            writeln!(out, "{}", row.join(" ")).unwrap();
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(MAGIC) {
            return Err(ConfigError::ModelFile(format!(
                "missing '{MAGIC}' header"
            )));
        }

        let mut kind: Option<KernelKind> = None;
        let mut sigma2: Option<f64> = None;
        let mut length_scales: Option<Vec<f64>> = None;
        let mut jitter_rel = 1e-8;
        let mut mean: Option<Vec<f64>> = None;
        let mut scale: Option<Vec<f64>> = None;
        let mut nu = Vec::new();
        let mut tau = Vec::new();
        let mut data = Vec::new();
        let mut d = 0usize;
        let mut section = String::new();

        for line in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                section = line.to_string();
                continue;
            }
            match section.as_str() {
                "[hyperparams]" | "[standardization]" => {
                    let (key, value) = line
                        .split_once('=')
                        .ok_or_else(|| ConfigError::ModelFile(format!("bad line '{line}'")))?;
                    let (key, value) = (key.trim(), value.trim());
                    match key {
                        "kernel" => {
                            kind = Some(KernelKind::parse(value).ok_or_else(|| {
                                ConfigError::ModelFile(format!("unknown kernel '{value}'"))
                            })?)
                        }
                        "sigma2" => sigma2 = Some(parse_f64(value)?),
                        "length_scales" => length_scales = Some(parse_list(value)?),
                        "jitter_rel" => jitter_rel = parse_f64(value)?,
                        "mean" => mean = Some(parse_list(value)?),
                        "scale" => scale = Some(parse_list(value)?),
                        "n" | "d" => {}
                        other => {
                            return Err(ConfigError::ModelFile(format!("unknown key '{other}'")))
                        }
                    }
                }
                "[sites]" => {
                    if let Some((k, _)) = line.split_once('=') {
                        let _ = k;
                        continue; // the n = … line
                    }
                    let mut it = line.split_whitespace();
                    nu.push(parse_f64(it.next().unwrap_or(""))?);
                    tau.push(parse_f64(it.next().unwrap_or(""))?);
                }
                "[inputs]" => {
                    if let Some((key, value)) = line.split_once('=') {
                        if key.trim() == "d" {
                            d = value
                                .trim()
                                .parse()
                                .map_err(|_| ConfigError::ModelFile("bad d".into()))?;
                        }
                        continue;
                    }
                    for tok in line.split_whitespace() {
                        data.push(parse_f64(tok)?);
                    }
                }
                _ => return Err(ConfigError::ModelFile(format!("stray line '{line}'"))),
            }
        }

        let kind = kind.ok_or_else(|| ConfigError::ModelFile("missing kernel".into()))?;
        let sigma2 = sigma2.ok_or_else(|| ConfigError::ModelFile("missing sigma2".into()))?;
        let ls = length_scales
            .ok_or_else(|| ConfigError::ModelFile("missing length_scales".into()))?;
        if d == 0 || nu.len() != tau.len() || data.len() != nu.len() * d {
            return Err(ConfigError::ModelFile(
                "inconsistent sites/inputs sections".into(),
            ));
        }
        let standardization = match (mean, scale) {
            (Some(mean), Some(scale)) => Some(Standardization { mean, scale }),
            (None, None) => None,
            _ => {
                return Err(ConfigError::ModelFile(
                    "standardization needs both mean and scale".into(),
                ))
            }
        };
        Ok(Self {
            hyp: Hyperparams::new(kind, sigma2, ls),
            jitter_rel,
            x_train: InputMatrix::new(nu.len(), d, data),
            nu_tilde: nu,
            tau_tilde: tau,
            standardization,
        })
    }
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.17e}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_f64(s: &str) -> Result<f64, ConfigError> {
    s.parse()
        .map_err(|_| ConfigError::ModelFile(format!("cannot parse number '{s}'")))
}

fn parse_list(s: &str) -> Result<Vec<f64>, ConfigError> {
    s.split(',').map(|v| parse_f64(v.trim())).collect()
}
