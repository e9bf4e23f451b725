//! Sectioned key-value configuration files.
//!
//! ```text
//! schema_version = 1
//!
//! [kernel]
//! family = fractional
//! alpha = 0.75
//!
//! [model]
//! kind = affine
//! b0 = 0.3
//! B = -0.5
//! sigma = 0.4
//! x0 = 0.2
//! ```
//!
//! Sections may appear in any order; `#` starts a comment. Unknown sections
//! and unknown keys are errors, as is a missing or unsupported
//! `schema_version`. The full schema is documented in the repository README.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::domains::{AffineParams, CoefficientModel, ConvexDomain};
use crate::kernels::{
    smooth_kernel, AffineProfile, CmAtom, CumulativeMeasure, GFunction, Kernel, TimeChange,
};
use crate::linalg::Mat;
use crate::riccati::{RiccatiConfig, WeightMode};
use crate::scheme::{DomainMode, SchemeConfig, Variant};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown section [{0}]")]
    UnknownSection(String),
    #[error("unknown key '{key}' in section [{section}]")]
    UnknownKey { section: String, key: String },
    #[error("missing key '{key}' in section [{section}]")]
    MissingKey { section: String, key: String },
    #[error("section [{0}] is required but absent")]
    MissingSection(String),
    #[error("invalid value for '{key}': {message}")]
    BadValue { key: String, message: String },
    #[error("schema_version must be {expected}, got {got}")]
    SchemaVersion { expected: u64, got: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

const SECTIONS: &[&str] = &["kernel", "model", "domain", "scheme", "riccati"];

const KERNEL_KEYS: &[&str] = &[
    "family", "alpha", "time_change", "terms", "value", "intercept", "slope", "b", "c", "rate",
    "atom", "smooth_level", "smooth_horizon", "horizon",
];
const MODEL_KEYS: &[&str] = &["kind", "b0", "B", "sigma", "x0", "a", "b", "dimension"];
const DOMAIN_KEYS: &[&str] = &["kind", "dimension"];
const SCHEME_KEYS: &[&str] =
    &["steps", "paths", "substeps", "horizon", "variant", "domain_mode", "seed"];
const RICCATI_KEYS: &[&str] =
    &["grid_steps", "f_const", "max_iters", "tol", "weight_mode", "alpha"];

/// Raw parsed file: per-section multimaps plus the schema version.
#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    sections: BTreeMap<String, Vec<(String, String)>>,
}

impl FileConfig {
    /// Parse and validate the sectioned key-value text.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut sections: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
        let mut current: Option<String> = None;
        let mut version: Option<String> = None;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim().to_string();
                if !SECTIONS.contains(&name.as_str()) {
                    return Err(ConfigError::UnknownSection(name));
                }
                sections.entry(name.clone()).or_default();
                current = Some(name);
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("expected 'key = value', got '{content}'"),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            match &current {
                None => {
                    if key == "schema_version" {
                        version = Some(value);
                    } else {
                        return Err(ConfigError::Parse {
                            line,
                            message: format!("key '{key}' before any section (only schema_version is allowed)"),
                        });
                    }
                }
                Some(section) => {
                    let allowed = match section.as_str() {
                        "kernel" => KERNEL_KEYS,
                        "model" => MODEL_KEYS,
                        "domain" => DOMAIN_KEYS,
                        "scheme" => SCHEME_KEYS,
                        "riccati" => RICCATI_KEYS,
                        _ => unreachable!(),
                    };
                    if !allowed.contains(&key.as_str()) {
                        return Err(ConfigError::UnknownKey { section: section.clone(), key });
                    }
                    sections.get_mut(section).expect("section registered").push((key, value));
                }
            }
        }

        match version {
            Some(v) if v.trim() == SCHEMA_VERSION.to_string() => {}
            Some(v) => {
                return Err(ConfigError::SchemaVersion { expected: SCHEMA_VERSION, got: v })
            }
            None => {
                return Err(ConfigError::SchemaVersion {
                    expected: SCHEMA_VERSION,
                    got: "absent".into(),
                })
            }
        }
        Ok(FileConfig { sections })
    }

    fn section(&self, name: &str) -> Result<&[(String, String)], ConfigError> {
        self.sections
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| ConfigError::MissingSection(name.to_string()))
    }

    pub fn has_section(&self, name: &str) -> bool {
        self.sections.contains_key(name)
    }

    fn get<'a>(&'a self, section: &str, key: &str) -> Result<Option<&'a str>, ConfigError> {
        Ok(self.section(section)?.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str()))
    }

    fn require<'a>(&'a self, section: &str, key: &str) -> Result<&'a str, ConfigError> {
        self.get(section, key)?.ok_or_else(|| ConfigError::MissingKey {
            section: section.to_string(),
            key: key.to_string(),
        })
    }

    fn get_all<'a>(&'a self, section: &str, key: &str) -> Result<Vec<&'a str>, ConfigError> {
        Ok(self
            .section(section)?
            .iter()
            .filter(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .collect())
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::BadValue {
        key: key.into(),
        message: format!("'{value}' is not a number"),
    })
}

fn parse_usize(key: &str, value: &str) -> Result<usize, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::BadValue {
        key: key.into(),
        message: format!("'{value}' is not a nonnegative integer"),
    })
}

fn parse_vec(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value.split(',').map(|p| parse_f64(key, p)).collect()
}

/// `rows` separated by `;`, entries by `,`.
fn parse_matrix(key: &str, value: &str) -> Result<Mat<f64>, ConfigError> {
    let rows: Vec<Vec<f64>> =
        value.split(';').map(|row| parse_vec(key, row)).collect::<Result<_, _>>()?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(ConfigError::BadValue { key: key.into(), message: "matrix must be square".into() });
    }
    Ok(Mat::from_rows(&rows.iter().map(|r| r.as_slice()).collect::<Vec<_>>()))
}

fn parse_measure(key: &str, tag: &str) -> Result<CumulativeMeasure<f64>, ConfigError> {
    let tag = tag.trim();
    let bad = |m: &str| ConfigError::BadValue { key: key.into(), message: m.into() };
    if tag == "exp" {
        return Ok(CumulativeMeasure::Exp);
    }
    let (name, args) = tag.split_once(':').ok_or_else(|| bad("expected tag like linear:<c>"))?;
    let args: Vec<f64> = parse_vec(key, args)?;
    match (name.trim(), args.as_slice()) {
        ("linear", [c]) => Ok(CumulativeMeasure::Linear { c: *c }),
        ("affine_density", [a, b]) => Ok(CumulativeMeasure::AffineDensity { a: *a, b: *b }),
        ("power", [beta]) => Ok(CumulativeMeasure::Power { beta: *beta }),
        _ => Err(bad("expected linear:<c> | affine_density:<a>,<b> | power:<beta> | exp")),
    }
}

fn parse_profile(key: &str, tag: &str) -> Result<AffineProfile<f64>, ConfigError> {
    let bad = |m: &str| ConfigError::BadValue { key: key.into(), message: m.into() };
    let (name, args) = tag.trim().split_once(':').ok_or_else(|| bad("expected const:<c> or affine:<a>,<b>"))?;
    let args: Vec<f64> = parse_vec(key, args)?;
    match (name.trim(), args.as_slice()) {
        ("const", [c]) => Ok(AffineProfile::constant(*c)),
        ("affine", [a, b]) => Ok(AffineProfile { intercept: *a, slope: *b }),
        _ => Err(bad("expected const:<c> or affine:<a>,<b>")),
    }
}

fn parse_time_change(tag: &str) -> Result<TimeChange<f64>, ConfigError> {
    let bad = |m: String| ConfigError::BadValue { key: "time_change".into(), message: m };
    match tag.trim() {
        "identity" => Ok(TimeChange::Identity),
        "exp" => Ok(TimeChange::Exponential),
        other => {
            if let Some(args) = other.strip_prefix("power_plus:") {
                let v = parse_vec("time_change", args)?;
                if let [beta, c] = v.as_slice() {
                    return Ok(TimeChange::PowerPlus { beta: *beta, c: *c });
                }
            } else if let Some(arg) = other.strip_prefix("power:") {
                return Ok(TimeChange::Power { beta: parse_f64("time_change", arg)? });
            }
            Err(bad(format!("unknown time change '{other}'")))
        }
    }
}

impl FileConfig {
    /// Build the kernel described by the `[kernel]` section.
    pub fn kernel(&self) -> Result<Kernel<f64>, ConfigError> {
        let family = self.require("kernel", "family")?;
        let change = match self.get("kernel", "time_change")? {
            Some(tag) => parse_time_change(tag)?,
            None => TimeChange::Identity,
        };
        let invalid = |e: crate::error::KernelError| ConfigError::Invalid(e.to_string());
        let base = match family {
            "fractional" => {
                let alpha = parse_f64("alpha", self.require("kernel", "alpha")?)?;
                Kernel::time_changed(
                    GFunction::Fractional(
                        crate::kernels::FractionalG::new(alpha).map_err(invalid)?,
                    ),
                    change,
                )
                .map_err(invalid)?
            }
            "exp_mixture" => {
                let spec = self.require("kernel", "terms")?;
                let terms: Vec<(f64, f64)> = spec
                    .split(',')
                    .map(|pair| {
                        let (w, r) = pair.split_once(':').ok_or_else(|| ConfigError::BadValue {
                            key: "terms".into(),
                            message: "expected weight:rate pairs".into(),
                        })?;
                        Ok((parse_f64("terms", w)?, parse_f64("terms", r)?))
                    })
                    .collect::<Result<_, ConfigError>>()?;
                Kernel::time_changed(GFunction::ExpMixture(terms), change).map_err(invalid)?
            }
            "affine" => {
                let intercept = parse_f64("intercept", self.require("kernel", "intercept")?)?;
                let slope = parse_f64("slope", self.require("kernel", "slope")?)?;
                Kernel::time_changed(GFunction::Affine { intercept, slope }, change)
                    .map_err(invalid)?
            }
            "constant" => {
                let value = parse_f64("value", self.require("kernel", "value")?)?;
                Kernel::constant(value)
            }
            "exp_product" => {
                let b = parse_profile("b", self.require("kernel", "b")?)?;
                let c = parse_profile("c", self.require("kernel", "c")?)?;
                let rate = parse_measure("rate", self.require("kernel", "rate")?)?;
                Kernel::exp_product(b, c, rate).map_err(invalid)?
            }
            "completely_monotone" => {
                let atoms: Vec<CmAtom<f64>> = self
                    .get_all("kernel", "atom")?
                    .iter()
                    .map(|spec| {
                        let parts: Vec<&str> = spec.splitn(4, ',').collect();
                        if parts.len() != 4 {
                            return Err(ConfigError::BadValue {
                                key: "atom".into(),
                                message: "expected <alpha>,<weight>,<scale>,<measure-tag>".into(),
                            });
                        }
                        Ok(CmAtom {
                            alpha: parse_f64("atom", parts[0])?,
                            weight: parse_f64("atom", parts[1])?,
                            scale: parse_f64("atom", parts[2])?,
                            measure: parse_measure("atom", parts[3])?,
                        })
                    })
                    .collect::<Result<_, ConfigError>>()?;
                if atoms.is_empty() {
                    return Err(ConfigError::MissingKey {
                        section: "kernel".into(),
                        key: "atom".into(),
                    });
                }
                Kernel::completely_monotone(atoms).map_err(invalid)?
            }
            other => {
                return Err(ConfigError::BadValue {
                    key: "family".into(),
                    message: format!("unknown kernel family '{other}'"),
                })
            }
        };
        if let Some(level) = self.get("kernel", "smooth_level")? {
            let level = parse_usize("smooth_level", level)? as u32;
            let horizon = parse_f64(
                "smooth_horizon",
                self.get("kernel", "smooth_horizon")?.or(self.get("kernel", "horizon")?).ok_or(
                    ConfigError::MissingKey { section: "kernel".into(), key: "smooth_horizon".into() },
                )?,
            )?;
            return Ok(smooth_kernel(&base, level, horizon));
        }
        Ok(base)
    }

    /// Build the model from the `[model]` section; affine models also return
    /// their parameters for the Riccati side.
    pub fn model(&self) -> Result<(CoefficientModel<f64>, Option<AffineParams<f64>>, Vec<f64>), ConfigError> {
        let kind = self.get("model", "kind")?.unwrap_or("affine");
        match kind {
            "affine" => {
                let b0 = parse_vec("b0", self.require("model", "b0")?)?;
                let mat_b = parse_matrix("B", self.require("model", "B")?)?;
                let sigmas = parse_vec("sigma", self.require("model", "sigma")?)?;
                let x0 = parse_vec("x0", self.require("model", "x0")?)?;
                let params = AffineParams { b0: b0.clone(), mat_b: mat_b.clone(), sigmas: sigmas.clone() };
                let model = CoefficientModel::affine_square_root(b0, mat_b, sigmas)
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
                if x0.len() != model.dim() {
                    return Err(ConfigError::Invalid("x0 dimension mismatch".into()));
                }
                Ok((model, Some(params), x0))
            }
            "wright_fisher" => {
                let a = parse_f64("a", self.require("model", "a")?)?;
                let b = parse_f64("b", self.require("model", "b")?)?;
                let sigma = parse_vec("sigma", self.require("model", "sigma")?)?;
                let x0 = parse_vec("x0", self.require("model", "x0")?)?;
                Ok((CoefficientModel::wright_fisher(a, b, sigma[0]), None, x0))
            }
            "brownian" => {
                let dim = parse_usize("dimension", self.get("model", "dimension")?.unwrap_or("1"))?;
                let sigma = parse_f64("sigma", self.get("model", "sigma")?.unwrap_or("1.0"))?;
                let x0 = match self.get("model", "x0")? {
                    Some(v) => parse_vec("x0", v)?,
                    None => vec![0.0; dim],
                };
                Ok((CoefficientModel::brownian(dim, sigma), None, x0))
            }
            other => Err(ConfigError::BadValue {
                key: "kind".into(),
                message: format!("unknown model kind '{other}'"),
            }),
        }
    }

    pub fn domain(&self) -> Result<ConvexDomain<f64>, ConfigError> {
        let kind = self.require("domain", "kind")?;
        let dim = parse_usize("dimension", self.require("domain", "dimension")?)?;
        match kind {
            "orthant" => Ok(ConvexDomain::orthant(dim)),
            "unit_interval_box" => Ok(ConvexDomain::unit_interval_box(dim)),
            "unit_ball" => Ok(ConvexDomain::unit_ball(dim)),
            "psd_cone" => Ok(ConvexDomain::psd_cone(dim)),
            other => Err(ConfigError::BadValue {
                key: "kind".into(),
                message: format!("unknown domain kind '{other}'"),
            }),
        }
    }

    /// Scheme settings plus the requested path count.
    pub fn scheme(&self) -> Result<(SchemeConfig<f64>, usize), ConfigError> {
        let steps = parse_usize("steps", self.require("scheme", "steps")?)?;
        let horizon = parse_f64("horizon", self.require("scheme", "horizon")?)?;
        let paths = parse_usize("paths", self.get("scheme", "paths")?.unwrap_or("1000"))?;
        let mut config = SchemeConfig::new(steps, horizon);
        if let Some(m) = self.get("scheme", "substeps")? {
            config = config.substeps(parse_usize("substeps", m)?);
        }
        if let Some(v) = self.get("scheme", "variant")? {
            config = config.variant(match v {
                "hat" => Variant::Hat,
                "check" => Variant::Check,
                other => {
                    return Err(ConfigError::BadValue {
                        key: "variant".into(),
                        message: format!("expected hat|check, got '{other}'"),
                    })
                }
            });
        }
        if let Some(v) = self.get("scheme", "domain_mode")? {
            config = config.domain_mode(match v {
                "enforce" => DomainMode::Enforce,
                "off" => DomainMode::Off,
                other => {
                    return Err(ConfigError::BadValue {
                        key: "domain_mode".into(),
                        message: format!("expected enforce|off, got '{other}'"),
                    })
                }
            });
        }
        if let Some(s) = self.get("scheme", "seed")? {
            config = config.seed(parse_usize("seed", s)? as u64);
        }
        Ok((config, paths))
    }

    /// Riccati solver settings: `(config, f_const, optional alpha)`.
    pub fn riccati(&self, horizon: f64) -> Result<(RiccatiConfig<f64>, Vec<f64>, Option<f64>), ConfigError> {
        let steps = parse_usize("grid_steps", self.get("riccati", "grid_steps")?.unwrap_or("1000"))?;
        let mut config = RiccatiConfig::uniform(steps, horizon);
        if let Some(v) = self.get("riccati", "max_iters")? {
            config.max_picard_iters = parse_usize("max_iters", v)?;
        }
        if let Some(v) = self.get("riccati", "tol")? {
            config.tol = parse_f64("tol", v)?;
        }
        if let Some(v) = self.get("riccati", "weight_mode")? {
            config.weight_mode = match v {
                "closed_form" => WeightMode::ClosedForm,
                "adaptive" => WeightMode::AdaptiveQuadrature,
                other => {
                    return Err(ConfigError::BadValue {
                        key: "weight_mode".into(),
                        message: format!("expected closed_form|adaptive, got '{other}'"),
                    })
                }
            };
        }
        let f_const = parse_vec("f_const", self.get("riccati", "f_const")?.unwrap_or("-1.0"))?;
        let alpha = match self.get("riccati", "alpha")? {
            Some(v) => Some(parse_f64("alpha", v)?),
            None => None,
        };
        Ok((config, f_const, alpha))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "
schema_version = 1

[kernel]
family = fractional
alpha = 0.75

[model]
kind = affine
b0 = 0.3
B = -0.5
sigma = 0.4
x0 = 0.2

[domain]
kind = orthant
dimension = 1

[scheme]
steps = 100
horizon = 1.0
paths = 50
variant = check
seed = 9

[riccati]
grid_steps = 200
f_const = -1.0
";

    #[test]
    fn full_round_trip_builds_every_component() {
        let cfg = FileConfig::parse(GOOD).unwrap();
        let kernel = cfg.kernel().unwrap();
        assert!(kernel.singular_on_diagonal());
        let (model, params, x0) = cfg.model().unwrap();
        assert_eq!(model.dim(), 1);
        assert!(params.is_some());
        assert_eq!(x0, vec![0.2]);
        let domain = cfg.domain().unwrap();
        assert_eq!(domain.dimension(), 1);
        let (scheme, paths) = cfg.scheme().unwrap();
        assert_eq!(scheme.n_steps, 100);
        assert_eq!(paths, 50);
        let (riccati, f, alpha) = cfg.riccati(1.0).unwrap();
        assert_eq!(riccati.grid.len(), 201);
        assert_eq!(f, vec![-1.0]);
        assert!(alpha.is_none());
    }

    #[test]
    fn unknown_keys_and_sections_are_rejected() {
        let bad_key = "schema_version = 1\n[kernel]\nfamily = constant\nvalue = 1.0\nwhatever = 2\n";
        assert!(matches!(
            FileConfig::parse(bad_key).unwrap_err(),
            ConfigError::UnknownKey { .. }
        ));
        let bad_section = "schema_version = 1\n[plots]\nx = 1\n";
        assert!(matches!(
            FileConfig::parse(bad_section).unwrap_err(),
            ConfigError::UnknownSection(_)
        ));
    }

    #[test]
    fn schema_version_is_mandatory() {
        let missing = "[kernel]\nfamily = constant\nvalue = 1.0\n";
        assert!(matches!(
            FileConfig::parse(missing).unwrap_err(),
            ConfigError::SchemaVersion { .. }
        ));
        let wrong = "schema_version = 7\n[kernel]\nfamily = constant\nvalue = 1.0\n";
        assert!(matches!(
            FileConfig::parse(wrong).unwrap_err(),
            ConfigError::SchemaVersion { .. }
        ));
    }

    #[test]
    fn mixture_and_product_families_parse() {
        let text = "
schema_version = 1
[kernel]
family = exp_product
b = const:1.0
c = affine:1.0,1.0
rate = affine_density:1.0,1.0
";
        let cfg = FileConfig::parse(text).unwrap();
        let k = cfg.kernel().unwrap();
        assert!((k.eval_unchecked(0.5, 0.5) - 1.5).abs() < 1e-12);

        let text = "
schema_version = 1
[kernel]
family = completely_monotone
atom = 1.0,1.0,1.0,affine_density:1.0,1.0
atom = 2.0,1.0,2.0,affine_density:1.0,1.0
";
        let cfg = FileConfig::parse(text).unwrap();
        let k = cfg.kernel().unwrap();
        assert_eq!(k.diagonal(0.3).unwrap(), 2.0);
    }

    #[test]
    fn smoothing_wrapper_applies() {
        let text = "
schema_version = 1
[kernel]
family = fractional
alpha = 0.75
smooth_level = 4
smooth_horizon = 1.0
";
        let cfg = FileConfig::parse(text).unwrap();
        let k = cfg.kernel().unwrap();
        assert!(!k.singular_on_diagonal());
        assert_eq!(k.horizon_hint(), Some(1.0));
    }
}
