//! JSON scan configuration. Every validation error names the config line it refers to.

use std::fmt;
use std::path::{Path, PathBuf};

use ptqgt_core::xy_chain::XYParams;
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// 1-based line in the JSON text; `None` for settings given on the command line.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "config line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Real number written either as a JSON number or as a string such as `"1/3"` or `"-0.25"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum RealValue {
    Number(f64),
    Text(String),
}

/// Parses `"a"`, `"a/b"` with real `a`, `b`.
pub fn parse_real(s: &str) -> Option<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?,
        None => s.parse().ok()?,
    };
    v.is_finite().then_some(v)
}

impl RealValue {
    fn value(&self) -> Option<f64> {
        match self {
            RealValue::Number(x) => x.is_finite().then_some(*x),
            RealValue::Text(s) => parse_real(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    XyChain,
    MatrixFile,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    #[serde(rename = "J")]
    j: RealValue,
    #[serde(rename = "Js")]
    js: RealValue,
    #[serde(rename = "Gamma")]
    gamma: RealValue,
    #[serde(rename = "Gammas")]
    gammas: RealValue,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: ModelKind,
    params: Option<RawParams>,
    model_file: Option<PathBuf>,
    level: Option<usize>,
    h_range: (f64, f64, usize),
    eta_range: (f64, f64, usize),
    n_quad: Option<usize>,
    outputs: Option<Vec<Entry>>,
    out_path: PathBuf,
    workers: Option<usize>,
}

/// Metric entries that can be written to the scan CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entry {
    G11,
    G12,
    G22,
}

impl Entry {
    pub const ALL: [Entry; 3] = [Entry::G11, Entry::G12, Entry::G22];

    pub fn name(self) -> &'static str {
        match self {
            Entry::G11 => "g11",
            Entry::G12 => "g12",
            Entry::G22 => "g22",
        }
    }

    pub fn index(self) -> (usize, usize) {
        match self {
            Entry::G11 => (0, 0),
            Entry::G12 => (0, 1),
            Entry::G22 => (1, 1),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s.trim())
    }
}

/// `count` equally spaced values from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridRange {
    pub fn values(&self) -> Vec<f64> {
        let n = self.count;
        (0..n)
            .map(|i| match i {
                0 => self.min,
                i if i == n - 1 => self.max,
                i => self.min + (self.max - self.min) * i as f64 / (n - 1) as f64,
            })
            .collect()
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScanModel {
    XyChain(XYParams),
    /// A two-parameter model file scanned over `(λ1, λ2) = (h, η)` at one level.
    MatrixFile {
        path: PathBuf,
        level: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub model: ScanModel,
    pub h_range: GridRange,
    pub eta_range: GridRange,
    pub n_quad: usize,
    pub outputs: Vec<Entry>,
    pub out_path: PathBuf,
    pub workers: usize,
}

pub const DEFAULT_N_QUAD: usize = 129;
pub const MIN_N_QUAD: usize = 16;

/// Line of the first occurrence of `"key"` in the JSON text.
fn key_line(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

/// Settings that may come from a file or from flags, validated the same way.
#[derive(Debug, Clone, Default)]
pub struct ScanSettings {
    pub model: Option<ModelKind>,
    pub params: Option<[Option<f64>; 4]>,
    pub model_file: Option<PathBuf>,
    pub level: Option<usize>,
    pub h_range: Option<(f64, f64, usize)>,
    pub eta_range: Option<(f64, f64, usize)>,
    pub n_quad: Option<usize>,
    pub outputs: Option<Vec<Entry>>,
    pub out_path: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl ScanSettings {
    /// Parse a JSON config. Relative `model_file` paths are resolved against `base_dir`.
    pub fn from_json(text: &str, base_dir: Option<&Path>) -> Result<(Self, LineMap), ConfigError> {
        let raw: RawConfig =
            serde_json::from_str(text).map_err(|e| ConfigError { line: Some(e.line()), message: format!("{e}") })?;
        let lines = LineMap { text: text.to_owned() };
        if let Some(p) = &raw.params {
            let checks = [("J", &p.j), ("Js", &p.js), ("Gamma", &p.gamma), ("Gammas", &p.gammas)];
            for (name, v) in checks {
                if v.value().is_none() {
                    return Err(lines.error(name, format!("params.{name} is not a finite number or ratio: {v:?}")));
                }
            }
        }
        let params = raw.params.map(|p| [p.j.value(), p.js.value(), p.gamma.value(), p.gammas.value()]);
        let model_file = raw.model_file.map(|f| match base_dir {
            Some(dir) if f.is_relative() => dir.join(f),
            _ => f,
        });
        let settings = Self {
            model: Some(raw.model),
            params,
            model_file,
            level: raw.level,
            h_range: Some(raw.h_range),
            eta_range: Some(raw.eta_range),
            n_quad: raw.n_quad,
            outputs: raw.outputs,
            out_path: Some(raw.out_path),
            workers: raw.workers,
        };
        Ok((settings, lines))
    }

    pub fn validate(self, lines: &LineMap) -> Result<ScanConfig, ConfigError> {
        let model_kind = self.model.unwrap_or(ModelKind::XyChain);
        let model = match model_kind {
            ModelKind::XyChain => {
                if self.model_file.is_some() {
                    return Err(lines.error("model_file", "model_file is only valid with model \"matrix_file\"".into()));
                }
                let p = self.params.ok_or_else(|| {
                    lines.error("model", "model \"xy_chain\" needs params {J, Js, Gamma, Gammas}".into())
                })?;
                let [Some(j), Some(js), Some(g), Some(gs)] = p else {
                    return Err(lines.error("params", "params must be finite numbers".into()));
                };
                let xy = XYParams::new(j, js, g, gs).map_err(|e| lines.error("params", e.to_string()))?;
                xy.case().map_err(|e| lines.error("params", e.to_string()))?;
                ScanModel::XyChain(xy)
            }
            ModelKind::MatrixFile => {
                if self.params.is_some() {
                    return Err(lines.error("params", "params is only valid with model \"xy_chain\"".into()));
                }
                let path = self
                    .model_file
                    .ok_or_else(|| lines.error("model", "model \"matrix_file\" needs model_file".into()))?;
                ScanModel::MatrixFile { path, level: self.level.unwrap_or(0) }
            }
        };
        let range = |key: &str, r: Option<(f64, f64, usize)>| -> Result<GridRange, ConfigError> {
            let (min, max, count) = r.ok_or_else(|| lines.error(key, format!("{key} is required")))?;
            if !(min.is_finite() && max.is_finite()) {
                return Err(lines.error(key, format!("{key} bounds must be finite")));
            }
            if min > max {
                return Err(lines.error(key, format!("{key} has min {min} > max {max}")));
            }
            if count < 2 {
                return Err(lines.error(key, format!("{key} count must be at least 2, got {count}")));
            }
            Ok(GridRange { min, max, count })
        };
        let h_range = range("h_range", self.h_range)?;
        let eta_range = range("eta_range", self.eta_range)?;
        let n_quad = self.n_quad.unwrap_or(DEFAULT_N_QUAD);
        if n_quad < MIN_N_QUAD {
            return Err(lines.error("n_quad", format!("n_quad must be at least {MIN_N_QUAD}, got {n_quad}")));
        }
        let mut outputs = self.outputs.unwrap_or_else(|| Entry::ALL.to_vec());
        outputs.sort();
        let before = outputs.len();
        outputs.dedup();
        if outputs.is_empty() || outputs.len() != before {
            return Err(
                lines.error("outputs", "outputs must be a non-empty list of distinct entries g11, g12, g22".into())
            );
        }
        let out_path = self.out_path.ok_or_else(|| lines.error("out_path", "out_path is required".into()))?;
        let workers = self.workers.unwrap_or(1);
        if workers == 0 {
            return Err(lines.error("workers", "workers must be at least 1".into()));
        }
        Ok(ScanConfig { model, h_range, eta_range, n_quad, outputs, out_path, workers })
    }
}

/// Maps config keys back to source lines for error messages.
#[derive(Debug, Clone, Default)]
pub struct LineMap {
    text: String,
}

impl LineMap {
    fn error(&self, key: &str, message: String) -> ConfigError {
        ConfigError { line: key_line(&self.text, key), message }
    }
}

impl ScanConfig {
    pub fn from_json(text: &str, base_dir: Option<&Path>) -> Result<Self, ConfigError> {
        let (settings, lines) = ScanSettings::from_json(text, base_dir)?;
        settings.validate(&lines)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
        Ok(Self::from_json(&text, path.parent())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{
  "model": "xy_chain",
  "params": {"J": 1, "Js": 0.5, "Gamma": "1/3", "Gammas": "1/6"},
  "h_range": [0, 3, 41],
  "eta_range": [-0.95, 0.95, 41],
  "n_quad": 65,
  "outputs": ["g22", "g11"],
  "out_path": "scan.csv",
  "workers": 4
}"#;

    #[test]
    fn parses_reference_config() {
        let c = ScanConfig::from_json(GOOD, None).unwrap();
        let ScanModel::XyChain(p) = c.model else { panic!("wrong model") };
        assert!((p.gamma - 1.0 / 3.0).abs() < 1e-16);
        assert_eq!(c.outputs, vec![Entry::G11, Entry::G22]);
        assert_eq!(c.h_range.values().len(), 41);
        assert_eq!(c.h_range.values()[40], 3.0);
        assert_eq!(c.workers, 4);
    }

    fn line_of(text: &str) -> Option<usize> {
        ScanConfig::from_json(text, None).unwrap_err().line
    }

    #[test]
    fn errors_point_at_the_offending_line() {
        assert_eq!(line_of(&GOOD.replace("[0, 3, 41]", "[0, 3, 1]")), Some(4));
        assert_eq!(line_of(&GOOD.replace("\"n_quad\": 65", "\"n_quad\": 8")), Some(6));
        assert_eq!(line_of(&GOOD.replace("\"1/6\"", "\"1/x\"")), Some(3));
        assert_eq!(line_of(&GOOD.replace("\"g22\", \"g11\"", "\"g22\", \"g33\"")), Some(7));
        assert_eq!(line_of(&GOOD.replace("\"workers\": 4", "\"workers\": 0")), Some(9));
        assert_eq!(line_of(&GOOD.replace("[-0.95, 0.95, 41]", "[0.95, -0.95, 41]")), Some(5));
        // Unsupported parameter case.
        assert_eq!(line_of(&GOOD.replace("\"1/6\"", "0.2")), Some(3));
        // Syntax errors come with serde's own line.
        assert_eq!(line_of(&GOOD.replace("\"n_quad\": 65,", "\"n_quad\": 65")), Some(7));
    }

    #[test]
    fn rationals() {
        assert_eq!(parse_real("1/4"), Some(0.25));
        assert_eq!(parse_real(" -3 "), Some(-3.0));
        assert_eq!(parse_real("1/0"), None);
        assert_eq!(parse_real("a"), None);
    }
}
