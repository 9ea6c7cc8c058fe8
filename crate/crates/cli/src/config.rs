//! The line-oriented experiment configuration: flat `key=value` lines,
//! optional `[section]` headers (organizational only), comma-separated
//! lists, `#` comments. Unknown and duplicate keys are rejected.

use std::collections::HashSet;
use std::path::PathBuf;

use marginlab_core::bounds::RICH_LOWER_DEFAULT_C;

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Bounds,
    Simulate,
    Rates,
    Lowerlab,
    Regress,
    Verify,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Bounds => "bounds",
            Kind::Simulate => "simulate",
            Kind::Rates => "rates",
            Kind::Lowerlab => "lowerlab",
            Kind::Regress => "regress",
            Kind::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Assouad,
    Sparse,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassSpec {
    /// Power set over the family's domain (the default for assouad).
    Powerset,
    /// All weight-D subsets of the family's N points (sparse default).
    Sparse,
    /// Members listed in a text file.
    Explicit(PathBuf),
}

/// Configurable absolute constants; unspecified constants default to 1
/// and proof-pinned ones to their proof values.
#[derive(Debug, Clone, PartialEq)]
pub struct Constants {
    pub c: f64,
    pub k: f64,
    pub kappa: f64,
    pub kappa_h: f64,
    pub c41: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self { c: 1.0, k: 1.0, kappa: 1.0, kappa_h: 1.0, c41: RICH_LOWER_DEFAULT_C }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub id: String,
    pub kind: Kind,
    pub seed: u64,
    pub replications: u64,
    pub n_values: Vec<u64>,
    pub h_values: Vec<f64>,
    pub v: Option<u32>,
    pub big_n_values: Vec<u32>,
    pub d_values: Vec<u32>,
    pub theta: f64,
    pub family: Family,
    pub class: Option<ClassSpec>,
    pub bits: Option<Vec<bool>>,
    pub p_atom: Option<f64>,
    /// Explicit marginal weights; together with `eta` this bypasses the
    /// family construction for simulate/rates.
    pub mu: Option<Vec<f64>>,
    pub eta: Option<Vec<f64>>,
    pub rho: f64,
    pub constants: Constants,
    pub r: Option<f64>,
    pub l0: Option<f64>,
    pub holder_l: f64,
    pub holder_alpha: f64,
    pub color_a: f64,
    pub color_b: f64,
    pub bins: Vec<u64>,
    pub trials: u64,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            id: "exp".into(),
            kind: Kind::Verify,
            seed: 0,
            replications: 1000,
            n_values: Vec::new(),
            h_values: Vec::new(),
            v: None,
            big_n_values: Vec::new(),
            d_values: Vec::new(),
            theta: 1.0,
            family: Family::Assouad,
            class: None,
            bits: None,
            p_atom: None,
            mu: None,
            eta: None,
            rho: 0.0,
            constants: Constants::default(),
            r: None,
            l0: None,
            holder_l: 1.0,
            holder_alpha: 1.0,
            color_a: 0.25,
            color_b: 0.75,
            bins: Vec::new(),
            trials: 1000,
            out: None,
        }
    }
}

fn parse_list<T: std::str::FromStr>(value: &str, line: usize, key: &str) -> CliResult<Vec<T>> {
    value
        .split(',')
        .map(|item| {
            item.trim()
                .parse::<T>()
                .map_err(|_| CliError::config_at(line, format!("invalid {key} entry '{item}'")))
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(value: &str, line: usize, key: &str) -> CliResult<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| CliError::config_at(line, format!("invalid {key} value '{value}'")))
}

/// Parse and validate a configuration from text.
pub fn parse_config(text: &str) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut kind_seen = false;
    let mut seen: HashSet<String> = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') || line.len() < 3 {
                return Err(CliError::config_at(lineno, format!("malformed section '{line}'")));
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::config_at(lineno, format!("expected key=value, got '{line}'")));
        };
        let key = key.trim();
        let value = value.trim();
        if !seen.insert(key.to_string()) {
            return Err(CliError::config_at(lineno, format!("duplicate key '{key}'")));
        }
        match key {
            "id" => {
                if value.is_empty()
                    || !value.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
                {
                    return Err(CliError::config_at(
                        lineno,
                        "id must be nonempty alphanumeric/_/-".to_string(),
                    ));
                }
                cfg.id = value.to_string();
            }
            "kind" => {
                cfg.kind = match value {
                    "bounds" => Kind::Bounds,
                    "simulate" => Kind::Simulate,
                    "rates" => Kind::Rates,
                    "lowerlab" => Kind::Lowerlab,
                    "regress" => Kind::Regress,
                    "verify" => Kind::Verify,
                    _ => {
                        return Err(CliError::config_at(lineno, format!("unknown kind '{value}'")))
                    }
                };
                kind_seen = true;
            }
            "seed" => cfg.seed = parse_one(value, lineno, key)?,
            "replications" => cfg.replications = parse_one(value, lineno, key)?,
            "trials" => cfg.trials = parse_one(value, lineno, key)?,
            "n" => cfg.n_values = parse_list(value, lineno, key)?,
            "h" => {
                cfg.h_values = parse_list(value, lineno, key)?;
                if let Some(bad) = cfg.h_values.iter().find(|h| !(0.0..=1.0).contains(*h)) {
                    return Err(CliError::config_at(
                        lineno,
                        format!("margin h must lie in [0, 1], got {bad}"),
                    ));
                }
            }
            "V" => cfg.v = Some(parse_one(value, lineno, key)?),
            "N" => cfg.big_n_values = parse_list(value, lineno, key)?,
            "D" => cfg.d_values = parse_list(value, lineno, key)?,
            "theta" => {
                cfg.theta = parse_one(value, lineno, key)?;
                if cfg.theta < 1.0 {
                    return Err(CliError::config_at(lineno, "theta must be >= 1".to_string()));
                }
            }
            "family" => {
                cfg.family = match value {
                    "assouad" => Family::Assouad,
                    "sparse" => Family::Sparse,
                    _ => {
                        return Err(CliError::config_at(
                            lineno,
                            format!("unknown family '{value}'"),
                        ))
                    }
                };
            }
            "class" => {
                cfg.class = Some(match value {
                    "powerset" => ClassSpec::Powerset,
                    "sparse" => ClassSpec::Sparse,
                    other => match other.strip_prefix("explicit:") {
                        Some(path) if !path.is_empty() => ClassSpec::Explicit(path.into()),
                        _ => {
                            return Err(CliError::config_at(
                                lineno,
                                format!("class must be powerset, sparse or explicit:<path>, got '{value}'"),
                            ))
                        }
                    },
                });
            }
            "bits" => {
                let raw: Vec<u8> = parse_list(value, lineno, key)?;
                if raw.iter().any(|&b| b > 1) {
                    return Err(CliError::config_at(lineno, "bits entries must be 0 or 1".to_string()));
                }
                cfg.bits = Some(raw.into_iter().map(|b| b == 1).collect());
            }
            "p" => {
                cfg.p_atom = Some(parse_one(value, lineno, key)?);
                if cfg.p_atom.unwrap() < 0.0 {
                    return Err(CliError::config_at(lineno, "p must be nonnegative".to_string()));
                }
            }
            "mu" => {
                let mu: Vec<f64> = parse_list(value, lineno, key)?;
                if mu.iter().any(|&w| w < 0.0) {
                    return Err(CliError::config_at(lineno, "mu weights must be >= 0".to_string()));
                }
                cfg.mu = Some(mu);
            }
            "eta" => {
                let eta: Vec<f64> = parse_list(value, lineno, key)?;
                if eta.iter().any(|e| !(0.0..=1.0).contains(e)) {
                    return Err(CliError::config_at(
                        lineno,
                        "eta values must lie in [0, 1]".to_string(),
                    ));
                }
                cfg.eta = Some(eta);
            }
            "rho" => {
                cfg.rho = parse_one(value, lineno, key)?;
                if cfg.rho < 0.0 {
                    return Err(CliError::config_at(lineno, "rho must be nonnegative".to_string()));
                }
            }
            "C" => cfg.constants.c = parse_one(value, lineno, key)?,
            "K" => cfg.constants.k = parse_one(value, lineno, key)?,
            "kappa" => cfg.constants.kappa = parse_one(value, lineno, key)?,
            "kappa_h" => cfg.constants.kappa_h = parse_one(value, lineno, key)?,
            "c41" => cfg.constants.c41 = parse_one(value, lineno, key)?,
            "r" => {
                let r: f64 = parse_one(value, lineno, key)?;
                if !(0.0 < r && r < 1.0) {
                    return Err(CliError::config_at(lineno, "r must lie in (0, 1)".to_string()));
                }
                cfg.r = Some(r);
            }
            "L0" => cfg.l0 = Some(parse_one(value, lineno, key)?),
            "L" => cfg.holder_l = parse_one(value, lineno, key)?,
            "alpha" => {
                cfg.holder_alpha = parse_one(value, lineno, key)?;
                if !(0.0 < cfg.holder_alpha && cfg.holder_alpha <= 1.0) {
                    return Err(CliError::config_at(lineno, "alpha must lie in (0, 1]".to_string()));
                }
            }
            "color_a" => cfg.color_a = parse_one(value, lineno, key)?,
            "color_b" => cfg.color_b = parse_one(value, lineno, key)?,
            "bins" => cfg.bins = parse_list(value, lineno, key)?,
            "out" => cfg.out = Some(PathBuf::from(value)),
            _ => return Err(CliError::config_at(lineno, format!("unknown key '{key}'"))),
        }
    }
    if !kind_seen {
        return Err(CliError::config("missing required key 'kind'"));
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &ExperimentConfig) -> CliResult<()> {
    let explicit_dist = cfg.mu.is_some() || cfg.eta.is_some();
    if explicit_dist {
        if !matches!(cfg.kind, Kind::Simulate | Kind::Rates) {
            return Err(CliError::config("mu/eta only apply to simulate and rates"));
        }
        let (Some(mu), Some(eta)) = (&cfg.mu, &cfg.eta) else {
            return Err(CliError::config("mu and eta must be given together"));
        };
        if mu.len() != eta.len() || mu.is_empty() {
            return Err(CliError::config("mu and eta need matching nonempty lengths"));
        }
    }
    let needs_sweep = matches!(cfg.kind, Kind::Bounds | Kind::Simulate | Kind::Rates);
    if needs_sweep {
        if cfg.n_values.is_empty() {
            return Err(CliError::config("this kind needs a nonempty n sweep"));
        }
        if cfg.h_values.is_empty() && !explicit_dist {
            return Err(CliError::config("this kind needs a nonempty h sweep"));
        }
    }
    if matches!(cfg.kind, Kind::Regress) && cfg.n_values.is_empty() {
        return Err(CliError::config("regress needs a nonempty n sweep"));
    }
    if matches!(cfg.kind, Kind::Simulate | Kind::Rates | Kind::Regress) && cfg.replications < 2 {
        return Err(CliError::config("simulation kinds need replications >= 2"));
    }
    if matches!(cfg.kind, Kind::Bounds | Kind::Simulate | Kind::Rates) && !explicit_dist {
        match cfg.family {
            Family::Assouad => {
                if cfg.v.is_none() {
                    return Err(CliError::config("the assouad family needs V"));
                }
            }
            Family::Sparse => {
                if cfg.big_n_values.len() != 1 || cfg.d_values.len() != 1 {
                    return Err(CliError::config(
                        "the sparse family needs single-valued N and D",
                    ));
                }
            }
        }
    }
    if matches!(cfg.kind, Kind::Lowerlab) && (cfg.big_n_values.is_empty() || cfg.d_values.is_empty())
    {
        return Err(CliError::config("lowerlab needs N and D grids"));
    }
    if matches!(cfg.kind, Kind::Regress) {
        let levels_ok = 0.0 < cfg.color_a && cfg.color_a < cfg.color_b && cfg.color_b < 1.0;
        if !levels_ok {
            return Err(CliError::config("color levels must satisfy 0 < a < b < 1"));
        }
        if !cfg.bins.is_empty() && cfg.bins.len() != cfg.n_values.len() {
            return Err(CliError::config("bins list must match the n sweep length"));
        }
        if cfg.holder_l <= 0.0 {
            return Err(CliError::config("L must be positive"));
        }
    }
    if cfg.n_values.contains(&0) {
        return Err(CliError::config("sample sizes must be positive"));
    }
    Ok(())
}
