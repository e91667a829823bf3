//! Run configuration: flat `key = value` lines with `#` comments.
//!
//! ```text
//! length = 40
//! points = 1024
//! final_time = 100
//! steps = 8192
//! target_energy = 0.5
//! window = hann
//! ```
//!
//! Relative table paths are resolved against the directory of the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::circuit::Mode;
use crate::error::{Error, Result};
use crate::evolution::PotentialSpec;
use crate::filter::{FilterPlan, QuadratureRule, TrialSpec};
use crate::numerics::GridSpec;
use crate::spectrum::AutocorrMode;
use crate::table::Table;
use crate::windows::{Window, WindowKind};

const KEYS: &[&str] = &[
    "length",
    "points",
    "potential",
    "potential_table",
    "trial",
    "trial_width",
    "trial_table",
    "final_time",
    "steps",
    "target_energy",
    "window",
    "window_sigma",
    "window_table",
    "quadrature",
    "quadrature_weights",
    "spectrum_window",
    "spectrum_sigma",
    "spectrum_table",
    "spectrum_padding",
    "peak_threshold",
    "autocorrelation",
    "mode",
    "max_restarts",
    "trials",
    "seed",
    "levels",
    "alt_steps",
    "error_constant",
    "error_order",
    "target_accuracy",
    "out",
];

const REQUIRED: &[&str] = &["length", "points", "final_time", "steps", "target_energy", "window"];

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Builtin,
    Table(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowChoice {
    pub kind: WindowKind,
    pub table: Option<PathBuf>,
}

impl WindowChoice {
    pub fn build(&self, steps: usize) -> Result<Window> {
        match (&self.kind, &self.table) {
            (WindowKind::CustomTable, Some(p)) => Window::from_table(steps, &Table::load(p, 2)?),
            (kind, _) => Window::of_kind(*kind, steps),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub length: f64,
    pub points: usize,
    pub potential: Source,
    pub trial: Source,
    pub trial_width: f64,
    pub final_time: f64,
    pub steps: usize,
    pub target_energy: f64,
    pub window: WindowChoice,
    pub quadrature: Option<PathBuf>,
    pub spectrum_window: WindowChoice,
    pub spectrum_padding: usize,
    pub peak_threshold: f64,
    pub autocorrelation: AutocorrMode,
    pub mode: Mode,
    pub max_restarts: usize,
    pub trials: usize,
    pub seed: u64,
    /// Number of oracle eigenpairs to compute.
    pub levels: usize,
    pub alt_steps: Option<usize>,
    pub error_constant: Option<f64>,
    pub error_order: Option<f64>,
    pub target_accuracy: f64,
    pub out: Option<PathBuf>,
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
    base: PathBuf,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.map.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn required(&self, key: &str) -> Result<(usize, &str)> {
        self.raw(key)
            .ok_or_else(|| Error::config(0, format!("missing required key `{key}`")))
    }

    fn number<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
        v.parse::<T>()
            .map_err(|_| Error::config(line, format!("`{key}`: cannot parse {v:?}")))
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            Some((l, v)) => Self::number(l, key, v),
            None => Ok(default),
        }
    }

    fn opt<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key).map(|(l, v)| Self::number(l, key, v)).transpose()
    }

    fn need<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let (l, v) = self.required(key)?;
        Self::number(l, key, v)
    }

    fn positive(&self, key: &str, value: f64) -> Result<f64> {
        if value.is_finite() && value > 0.0 {
            return Ok(value);
        }
        let line = self.raw(key).map_or(0, |(l, _)| l);
        Err(Error::config(line, format!("`{key}` must be positive, got {value}")))
    }

    fn path(&self, key: &str) -> Result<PathBuf> {
        let (_, v) = self.required(key)?;
        Ok(self.base.join(v))
    }

    fn window(&self, key: &str, sigma_key: &str, table_key: &str, default: Option<&str>) -> Result<WindowChoice> {
        let (line, name) = match (self.raw(key), default) {
            (Some(v), _) => v,
            (None, Some(d)) => (0, d),
            (None, None) => self.required(key)?,
        };
        let kind = match name {
            "rectangular" | "rect" => WindowKind::Rectangular,
            "hann" => WindowKind::Hann,
            "gaussian" => WindowKind::Gaussian {
                sigma_fraction: self.positive(sigma_key, self.get(sigma_key, 1.0 / 14.0)?)?,
            },
            "table" => WindowKind::CustomTable,
            other => {
                return Err(Error::config(
                    line,
                    format!("`{key}`: unknown window {other:?} (rectangular, hann, gaussian, table)"),
                ))
            }
        };
        let table = match kind {
            WindowKind::CustomTable => Some(self.path(table_key)?),
            _ => None,
        };
        Ok(WindowChoice { kind, table })
    }

    fn choice<T: Copy>(&self, key: &str, default: T, options: &[(&str, T)]) -> Result<T> {
        let Some((line, v)) = self.raw(key) else {
            return Ok(default);
        };
        options.iter().find(|(n, _)| *n == v).map(|(_, t)| *t).ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            Error::config(line, format!("`{key}`: expected one of {names:?}, got {v:?}"))
        })
    }
}

fn tokenize(text: &str) -> Result<BTreeMap<String, (usize, String)>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| Error::config(line, format!("expected `key = value`, got {content:?}")))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(Error::config(line, format!("unknown key `{k}`")));
        }
        if v.is_empty() {
            return Err(Error::config(line, format!("`{k}` has no value")));
        }
        if let Some((first, _)) = map.insert(k.to_string(), (line, v.to_string())) {
            return Err(Error::config(line, format!("duplicate key `{k}` (first set on line {first})")));
        }
    }
    Ok(map)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(0, format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Parses config text; `base` anchors relative paths.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let e = Entries {
            map: tokenize(text)?,
            base: base.to_path_buf(),
        };
        for key in REQUIRED {
            e.required(key)?;
        }
        let length = e.positive("length", e.need("length")?)?;
        let points: usize = e.need("points")?;
        let final_time = e.positive("final_time", e.need("final_time")?)?;
        let steps: usize = e.need("steps")?;
        if steps == 0 {
            return Err(Error::config(e.required("steps")?.0, "`steps` must be at least 1"));
        }
        let target_energy: f64 = e.need("target_energy")?;
        if !target_energy.is_finite() {
            return Err(Error::config(e.required("target_energy")?.0, "`target_energy` must be finite"));
        }

        let potential = match e.choice("potential", "harmonic", &[("harmonic", "harmonic"), ("table", "table")])? {
            "table" => Source::Table(e.path("potential_table")?),
            _ => Source::Builtin,
        };
        let trial = match e.choice("trial", "cos2", &[("cos2", "cos2"), ("table", "table")])? {
            "table" => Source::Table(e.path("trial_table")?),
            _ => Source::Builtin,
        };
        let quadrature = match e.choice("quadrature", "trapezoidal", &[("trapezoidal", "trapezoidal"), ("custom", "custom")])? {
            "custom" => Some(e.path("quadrature_weights")?),
            _ => None,
        };
        let threshold: f64 = e.get("peak_threshold", 0.05)?;
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(Error::config(
                e.raw("peak_threshold").map_or(0, |r| r.0),
                "`peak_threshold` must lie in (0, 1]",
            ));
        }
        let target_accuracy = e.positive("target_accuracy", e.get("target_accuracy", 1e-6)?)?;
        let error_constant = e.opt::<f64>("error_constant")?.map(|c| e.positive("error_constant", c)).transpose()?;
        let error_order = e.opt::<f64>("error_order")?.map(|q| e.positive("error_order", q)).transpose()?;

        Ok(Self {
            length,
            points,
            potential,
            trial,
            trial_width: e.positive("trial_width", e.get("trial_width", 10.0)?)?,
            final_time,
            steps,
            target_energy,
            window: e.window("window", "window_sigma", "window_table", None)?,
            quadrature,
            spectrum_window: e.window("spectrum_window", "spectrum_sigma", "spectrum_table", Some("gaussian"))?,
            spectrum_padding: e.get("spectrum_padding", 4)?,
            peak_threshold: threshold,
            autocorrelation: e.choice(
                "autocorrelation",
                AutocorrMode::Direct,
                &[("direct", AutocorrMode::Direct), ("circuit", AutocorrMode::Circuit)],
            )?,
            mode: e.choice(
                "mode",
                Mode::Deterministic,
                &[("deterministic", Mode::Deterministic), ("sampled", Mode::Sampled)],
            )?,
            max_restarts: e.get("max_restarts", 1000)?,
            trials: e.get("trials", 1000)?,
            seed: e.get("seed", 0)?,
            levels: e.get("levels", 8)?,
            alt_steps: e.opt("alt_steps")?,
            error_constant,
            error_order,
            target_accuracy,
            out: e.raw("out").map(|(_, v)| e.base.join(v)),
        })
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.length, self.points).map_err(|err| Error::config(0, err.to_string()))
    }

    pub fn potential(&self, grid: &GridSpec) -> Result<PotentialSpec> {
        match &self.potential {
            Source::Builtin => Ok(PotentialSpec::harmonic(grid)),
            Source::Table(p) => PotentialSpec::from_table(grid, &Table::load(p, 2)?),
        }
    }

    pub fn trial_spec(&self) -> Result<TrialSpec> {
        match &self.trial {
            Source::Builtin => TrialSpec::cos2(self.trial_width),
            Source::Table(p) => TrialSpec::from_table(Table::load(p, 2)?),
        }
    }

    pub fn quadrature_rule(&self, steps: usize) -> Result<QuadratureRule> {
        match &self.quadrature {
            None => QuadratureRule::trapezoidal(steps),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Table { path: p.display().to_string(), message: e.to_string() })?;
                let weights = parse_weights(&text, &p.display().to_string())?;
                if weights.len() != steps + 1 {
                    return Err(Error::Table {
                        path: p.display().to_string(),
                        message: format!("expected {} weights, found {}", steps + 1, weights.len()),
                    });
                }
                QuadratureRule::custom(weights)
            }
        }
    }

    pub fn plan(&self) -> Result<FilterPlan> {
        let grid = self.grid()?;
        FilterPlan::new(
            self.potential(&grid)?,
            self.trial_spec()?,
            self.target_energy,
            self.final_time,
            self.window.build(self.steps)?,
            self.quadrature_rule(self.steps)?,
        )
    }
}

/// Whitespace- or comma-separated numbers with `#` comments.
fn parse_weights(text: &str, source: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        for field in raw.split('#').next().unwrap_or("").split(|c: char| c == ',' || c.is_whitespace()) {
            if field.is_empty() {
                continue;
            }
            out.push(field.parse::<f64>().map_err(|_| Error::Table {
                path: source.to_string(),
                message: format!("line {}: bad number {field:?}", i + 1),
            })?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "length = 40\npoints = 1024\nfinal_time = 100\nsteps = 8192\ntarget_energy = 0.5\nwindow = hann\n";

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::parse(text, Path::new("."))
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse(BASE).unwrap();
        assert_eq!(c.points, 1024);
        assert_eq!(c.window.kind, WindowKind::Hann);
        assert_eq!(c.trial, Source::Builtin);
        assert_eq!(c.trial_width, 10.0);
        assert_eq!(c.mode, Mode::Deterministic);
        assert!(c.quadrature.is_none());
    }

    #[test]
    fn missing_window_is_named() {
        let text = BASE.replace("window = hann\n", "");
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("`window`"), "{err}");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = format!("{BASE}# comment\n\nbogus = 3\n");
        match parse(&text) {
            Err(Error::Config { line, message }) => {
                assert_eq!(line, 9);
                assert!(message.contains("bogus"));
            }
            other => panic!("{other:?}"),
        }
        let text = BASE.replace("steps = 8192", "steps = many");
        assert!(matches!(parse(&text), Err(Error::Config { line: 4, .. })));
        let text = format!("{BASE}window = rectangular\n");
        assert!(matches!(parse(&text), Err(Error::Config { line: 7, .. })));
        let text = format!("{BASE}length\n");
        assert!(matches!(parse(&text), Err(Error::Config { line: 7, .. })));
    }

    #[test]
    fn comments_and_gaussian_sigma() {
        let text = format!("{BASE}spectrum_window = gaussian # narrow\nspectrum_sigma = 0.1\n");
        let c = parse(&text).unwrap();
        assert_eq!(c.spectrum_window.kind, WindowKind::Gaussian { sigma_fraction: 0.1 });
    }

    #[test]
    fn table_paths_resolve_against_base() {
        let text = BASE.replace("window = hann", "window = table\nwindow_table = w.txt");
        let c = RunConfig::parse(&text, Path::new("/data")).unwrap();
        assert_eq!(c.window.table, Some(PathBuf::from("/data/w.txt")));
        assert!(parse(&BASE.replace("window = hann", "window = table")).is_err());
    }

    #[test]
    fn weights_parse() {
        assert_eq!(parse_weights("0.5 1, 1\n# x\n0.5\n", "w").unwrap(), vec![0.5, 1.0, 1.0, 0.5]);
        assert!(parse_weights("0.5 x\n", "w").is_err());
    }
}
