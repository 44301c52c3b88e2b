use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("missing key `experiment`")]
    MissingExperiment,
    #[error("unknown experiment `{0}`; run `renorm-lab list` for the choices")]
    UnknownExperiment(String),
    #[error("unknown key `{key}` for experiment {experiment}")]
    UnknownKey { key: String, experiment: Experiment },
    #[error("key `{key}`: {message}")]
    InvalidValue { key: String, message: String },
    #[error("cannot read config: {0}")]
    Io(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Experiment {
    FixedPoint,
    Spectrum,
    Cascade,
    Eq1Check,
    TowerCheck,
    Contraction,
    HakimNormalform,
    Petal,
    MultiplicityInvariance,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    /// Positive integer.
    Count,
    /// Positive real.
    Real,
    /// Comma-separated positive integers.
    CountList,
    Flag,
    /// Any `u64`, zero included.
    Seed,
    Path,
}

/// An accepted key with its default, or `None` when the key is optional and
/// has no default.
#[derive(Clone, Copy, Debug)]
pub struct Param {
    pub key: &'static str,
    pub kind: Kind,
    pub default: Option<&'static str>,
}

const fn p(key: &'static str, kind: Kind, default: &'static str) -> Param {
    Param {
        key,
        kind,
        default: Some(default),
    }
}

const OUTPUT: Param = Param {
    key: "output_path",
    kind: Kind::Path,
    default: None,
};

const OPERATOR: [Param; 3] = [
    p("norm_radius", Kind::Real, "0.8"),
    p("cascade_depth", Kind::Count, "9"),
    OUTPUT,
];

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::FixedPoint,
        Experiment::Spectrum,
        Experiment::Cascade,
        Experiment::Eq1Check,
        Experiment::TowerCheck,
        Experiment::Contraction,
        Experiment::HakimNormalform,
        Experiment::Petal,
        Experiment::MultiplicityInvariance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::FixedPoint => "fixed-point",
            Experiment::Spectrum => "spectrum",
            Experiment::Cascade => "cascade",
            Experiment::Eq1Check => "eq1-check",
            Experiment::TowerCheck => "tower-check",
            Experiment::Contraction => "contraction",
            Experiment::HakimNormalform => "hakim-normalform",
            Experiment::Petal => "petal",
            Experiment::MultiplicityInvariance => "multiplicity-invariance",
        }
    }

    pub fn params(self) -> Vec<Param> {
        use Kind::*;
        let mut out = match self {
            Experiment::FixedPoint => vec![p("truncation_order", Count, "80")],
            Experiment::Spectrum => vec![p("truncation_order", Count, "60")],
            Experiment::Eq1Check => vec![p("truncation_order", Count, "80")],
            Experiment::TowerCheck => vec![p("truncation_order", Count, "80"), p("levels", Count, "5")],
            Experiment::Contraction => vec![
                p("truncation_order", Count, "60"),
                p("steps", Count, "15"),
                p("project", Flag, "true"),
            ],
            Experiment::Cascade => {
                return vec![
                    p("cascade_depth", Count, "9"),
                    p("bracket_far", Real, "1.5"),
                    p("bracket_near", Real, "0.5"),
                    p("initial_ratio", Real, "4"),
                    OUTPUT,
                ]
            }
            Experiment::HakimNormalform => {
                return vec![
                    p("nvars", Count, "2"),
                    p("degree_cap", Count, "10"),
                    p("up_to", Count, "8"),
                    p("trials", Count, "10"),
                    p("seed", Seed, "0"),
                    OUTPUT,
                ]
            }
            Experiment::Petal => {
                return vec![
                    p("k", Count, "2"),
                    p("coupled", Flag, "false"),
                    p("degree_cap", Count, "8"),
                    p("steps", Count, "100000"),
                    p("window_start", Count, "1000"),
                    p("seed_w", Real, "0.05"),
                    p("y0", Real, "0.01"),
                    p("petal_radius", Real, "0.1"),
                    p("petal_rho", Real, "0.1"),
                    p("stride", Count, "1000"),
                    OUTPUT,
                ]
            }
            Experiment::MultiplicityInvariance => {
                return vec![
                    p("multiplicity", Count, "3"),
                    p("degree_cap", Count, "10"),
                    p("trials", Count, "20"),
                    p("k_values", CountList, "2, 3"),
                    p("seed", Seed, "0"),
                    OUTPUT,
                ]
            }
        };
        out.extend(OPERATOR);
        out
    }

    /// Named tolerances with their defaults.
    pub fn tolerances(self) -> &'static [(&'static str, f64)] {
        match self {
            Experiment::FixedPoint => &[("residual", 1e-10)],
            Experiment::Spectrum => &[("delta", 1e-5), ("unit_band", 0.05), ("conjugation", 1e-9)],
            Experiment::Cascade => &[("residual", 1e-13)],
            Experiment::Eq1Check => &[("eq1", 1e-6)],
            Experiment::TowerCheck => &[("tower", 1e-9)],
            Experiment::Contraction => &[("slope", 0.10)],
            Experiment::HakimNormalform => &[("defect", 1e-10), ("replay", 1e-9)],
            Experiment::Petal => &[("exponent", 0.03), ("sandwich", 10.0)],
            Experiment::MultiplicityInvariance => &[],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| ConfigError::UnknownExperiment(s.to_string()))
    }
}

/// A validated config with every default filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Resolved parameter values, in their normalized text form.
    pub values: BTreeMap<String, String>,
    pub tolerances: BTreeMap<String, f64>,
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        message: message.into(),
    }
}

fn positive_count(key: &str, s: &str) -> Result<u64, ConfigError> {
    match s.parse::<u64>() {
        Ok(0) => Err(invalid(key, "must be positive")),
        Ok(n) => Ok(n),
        Err(_) => Err(invalid(key, format!("`{s}` is not a positive integer"))),
    }
}

fn positive_real(key: &str, s: &str) -> Result<f64, ConfigError> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() && x > 0.0 => Ok(x),
        Ok(_) => Err(invalid(key, "must be positive and finite")),
        Err(_) => Err(invalid(key, format!("`{s}` is not a number"))),
    }
}

/// Checks `raw` against `kind` and returns its normalized text.
fn normalize(key: &str, kind: Kind, raw: &str) -> Result<String, ConfigError> {
    Ok(match kind {
        Kind::Count => positive_count(key, raw)?.to_string(),
        Kind::Real => format!("{:?}", positive_real(key, raw)?),
        Kind::CountList => {
            let items = raw
                .split(',')
                .map(|s| positive_count(key, s.trim()).map(|n| n.to_string()))
                .collect::<Result<Vec<_>, _>>()?;
            items.join(",")
        }
        Kind::Flag => match raw {
            "true" | "false" => raw.to_string(),
            _ => return Err(invalid(key, format!("`{raw}` is not `true` or `false`"))),
        },
        Kind::Seed => raw
            .parse::<u64>()
            .map_err(|_| invalid(key, format!("`{raw}` is not an unsigned integer")))?
            .to_string(),
        Kind::Path if raw.is_empty() => return Err(invalid(key, "empty path")),
        Kind::Path => raw.to_string(),
    })
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: line_no,
                    text: content.to_string(),
                });
            };
            let key = key.trim();
            if key.is_empty() {
                return Err(ConfigError::Syntax {
                    line: line_no,
                    text: content.to_string(),
                });
            }
            if raw.insert(key.to_string(), (line_no, value.trim().to_string())).is_some() {
                return Err(ConfigError::Duplicate {
                    line: line_no,
                    key: key.to_string(),
                });
            }
        }
        let (_, name) = raw.remove("experiment").ok_or(ConfigError::MissingExperiment)?;
        let experiment: Experiment = name.parse()?;
        let params = experiment.params();
        let mut values = BTreeMap::new();
        let mut tolerances: BTreeMap<String, f64> =
            experiment.tolerances().iter().map(|&(n, v)| (n.to_string(), v)).collect();
        for (key, (_, value)) in &raw {
            if let Some(name) = key.strip_prefix("tol.") {
                if !tolerances.contains_key(name) {
                    return Err(ConfigError::UnknownKey {
                        key: key.clone(),
                        experiment,
                    });
                }
                tolerances.insert(name.to_string(), positive_real(key, value)?);
            } else if let Some(param) = params.iter().find(|p| p.key == key) {
                values.insert(key.clone(), normalize(key, param.kind, value)?);
            } else {
                return Err(ConfigError::UnknownKey {
                    key: key.clone(),
                    experiment,
                });
            }
        }
        for param in &params {
            if let (false, Some(d)) = (values.contains_key(param.key), param.default) {
                values.insert(param.key.to_string(), normalize(param.key, param.kind, d)?);
            }
        }
        Ok(Self {
            experiment,
            values,
            tolerances,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Replaces the seed of an experiment that draws random trials; other
    /// experiments ignore it.
    pub fn with_seed(mut self, seed: u64) -> Self {
        if let Some(v) = self.values.get_mut("seed") {
            *v = seed.to_string();
        }
        self
    }

    fn value(&self, key: &str) -> &str {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("no parameter `{key}` for experiment {}", self.experiment))
    }

    pub fn count(&self, key: &str) -> usize {
        self.value(key).parse().expect("validated count")
    }

    pub fn real(&self, key: &str) -> f64 {
        self.value(key).parse().expect("validated real")
    }

    pub fn flag(&self, key: &str) -> bool {
        self.value(key) == "true"
    }

    pub fn seed(&self) -> u64 {
        self.value("seed").parse().expect("validated seed")
    }

    pub fn counts(&self, key: &str) -> Vec<usize> {
        self.value(key).split(',').map(|s| s.parse().expect("validated count")).collect()
    }

    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances[name]
    }

    pub fn output_path(&self) -> Option<PathBuf> {
        self.values.get("output_path").map(PathBuf::from)
    }
}
