//! Flat `key = value` configuration files with CLI flag overrides.
//!
//! One format serves run configuration and benchmark scenarios: blank
//! lines and `#` comments are skipped, later keys win, and every key can
//! also arrive as a `--set key=value` flag.

use std::path::Path;

use crate::bench::BenchScenario;
use crate::ep::SiteOrder;
use crate::error::ConfigError;
use crate::kernel::KernelKind;
use crate::model::ModelConfig;

/// Parse flat key=value text.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(ConfigError::Malformed {
                line: no + 1,
                text: trimmed.to_string(),
            });
        };
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

fn bad(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| bad(key, format!("cannot parse '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "on" | "1" | "yes" => Ok(true),
        "false" | "off" | "0" | "no" => Ok(false),
        _ => Err(bad(key, format!("expected a boolean, got '{value}'"))),
    }
}

/// Runtime settings: model configuration plus data-handling flags.
#[derive(Debug, Clone)]
pub struct Settings {
    pub model: ModelConfig,
    /// Standardize features of loaded CSVs (synthetic data is used as-is).
    pub standardize: bool,
    /// Label in the last CSV column (false: first column).
    pub label_last: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            standardize: true,
            label_last: true,
        }
    }
}

impl Settings {
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let m = &mut self.model;
        match key {
            "kernel" => {
                m.kind = KernelKind::parse(value)
                    .ok_or_else(|| bad(key, format!("unknown kernel '{value}'")))?;
            }
            "jitter_rel" => m.jitter_rel = parse_num(key, value)?,
            "seed" => {
                m.seed = parse_num(key, value)?;
                m.ep.seed = m.seed;
            }
            "ep_tol" => m.ep.tol = parse_num(key, value)?,
            "ep_max_sweeps" => m.ep.max_sweeps = parse_num(key, value)?,
            "ep_damping" => m.ep.damping = parse_num(key, value)?,
            "ep_site_order" => {
                m.ep.site_order = match value.to_ascii_lowercase().as_str() {
                    "natural" => SiteOrder::Natural,
                    "random" => SiteOrder::Random,
                    _ => return Err(bad(key, "expected 'natural' or 'random'")),
                };
            }
            "ep_clamp" => m.ep.clamp_negative_tau = parse_bool(key, value)?,
            "prior_df" => m.prior.df = parse_num(key, value)?,
            "prior_scale" => m.prior.scale = parse_num(key, value)?,
            "opt_max_iters" => m.opt.max_iterations = parse_num(key, value)?,
            "opt_grad_tol" => m.opt.grad_tol = parse_num(key, value)?,
            "opt_init" => {
                let parsed: Result<Vec<f64>, _> =
                    value.split(',').map(|v| v.trim().parse()).collect();
                m.opt.init_log_params =
                    Some(parsed.map_err(|_| bad(key, "expected comma-separated numbers"))?);
            }
            "wolfe_c1" => m.opt.wolfe_c1 = parse_num(key, value)?,
            "wolfe_c2" => m.opt.wolfe_c2 = parse_num(key, value)?,
            "warm_start_threshold" => m.warm_start_threshold = parse_num(key, value)?,
            "standardize" => self.standardize = parse_bool(key, value)?,
            "label_last" => self.label_last = parse_bool(key, value)?,
            _ => return Err(ConfigError::UnknownKey { key: key.into() }),
        }
        Ok(())
    }

    pub fn load_file<P: AsRef<Path>>(&mut self, path: P) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)?;
        for (k, v) in parse_kv(&text)? {
            self.apply(&k, &v)?;
        }
        Ok(())
    }
}

/// Parse a benchmark scenario file. Model keys are shared with
/// [`Settings`]; scenario-specific keys configure the grid.
pub fn load_scenario<P: AsRef<Path>>(path: P) -> Result<BenchScenario, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    let mut scenario = BenchScenario::default();
    let mut settings = Settings::default();
    for (key, value) in parse_kv(&text)? {
        match key.as_str() {
            "name" => scenario.name = value,
            "kernels" => {
                let parsed: Option<Vec<KernelKind>> =
                    value.split(',').map(KernelKind::parse).collect();
                scenario.kernels =
                    parsed.ok_or_else(|| bad("kernels", format!("bad list '{value}'")))?;
            }
            "sizes" => {
                let parsed: Result<Vec<usize>, _> =
                    value.split(',').map(|v| v.trim().parse()).collect();
                scenario.sizes = parsed.map_err(|_| bad("sizes", "expected integers"))?;
            }
            "seeds" => {
                let parsed: Result<Vec<u64>, _> =
                    value.split(',').map(|v| v.trim().parse()).collect();
                scenario.seeds = parsed.map_err(|_| bad("seeds", "expected integers"))?;
            }
            "d" => scenario.d = parse_num("d", &value)?,
            "centers" => scenario.n_centers = parse_num("centers", &value)?,
            "box_side" => scenario.box_side = parse_num("box_side", &value)?,
            "test_size" => scenario.test_size = parse_num("test_size", &value)?,
            "opt_cap" => scenario.opt_cap = parse_num("opt_cap", &value)?,
            _ => settings.apply(&key, &value)?,
        }
    }
    scenario.model = settings.model;
    Ok(scenario)
}
