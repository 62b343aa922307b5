//! Flag and config-file merging.

use std::path::{Path, PathBuf};

use sl_iosp::ProblemSpec;

use crate::args::{CommonArgs, Format, Method};
use crate::error::{CliError, CliResult};

pub const DEFAULT_GRID: usize = 8192;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const MIN_GRID: usize = 256;

const KNOWN_KEYS: &[&str] = &[
    "q0",
    "lambda-star",
    "m",
    "p",
    "grid",
    "tol",
    "output",
    "format",
    "method",
    "eig-tol",
    "norm-tol",
    "x-min",
    "x-max",
    "steps",
    "jobs",
    "threshold",
];

/// Values from an optional flat TOML file, consulted when a flag is absent.
#[derive(Debug, Clone, Default)]
pub struct FileValues {
    path: Option<PathBuf>,
    table: toml::Table,
}

impl FileValues {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(FileValues::default());
        };
        let bad = |reason: String| CliError::Config {
            path: path.to_path_buf(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Input(reason) => bad(reason),
            other => other,
        })
        .map(|v| FileValues {
            path: Some(path.to_path_buf()),
            ..v
        })
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Input(e.message().to_string()))?;
        for (key, value) in &table {
            let key = key.replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Input(format!("unknown config key `{key}`")));
            }
            if value.is_table() || value.is_array() {
                return Err(CliError::Input(format!("config key `{key}` must be a scalar")));
            }
        }
        Ok(FileValues { path: None, table })
    }

    fn get(&self, key: &str) -> Option<&toml::Value> {
        self.table
            .get(key)
            .or_else(|| self.table.get(&key.replace('-', "_")))
    }

    fn type_error(&self, key: &str, want: &str) -> CliError {
        let origin = match &self.path {
            Some(p) => format!(" in {}", p.display()),
            None => String::new(),
        };
        CliError::Input(format!("config key `{key}`{origin} must be {want}"))
    }

    pub fn real(&self, flag: Option<f64>, key: &str) -> CliResult<Option<f64>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(v)) => Ok(Some(*v)),
            Some(toml::Value::Integer(v)) => Ok(Some(*v as f64)),
            Some(_) => Err(self.type_error(key, "a number")),
        }
    }

    pub fn integer(&self, flag: Option<i64>, key: &str) -> CliResult<Option<i64>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Integer(v)) => Ok(Some(*v)),
            Some(_) => Err(self.type_error(key, "an integer")),
        }
    }

    pub fn count(&self, flag: Option<usize>, key: &str) -> CliResult<Option<usize>> {
        let v = self.integer(flag.map(|v| v as i64), key)?;
        match v {
            Some(v) if v < 0 => Err(self.type_error(key, "a non-negative integer")),
            v => Ok(v.map(|v| v as usize)),
        }
    }

    pub fn text(&self, key: &str) -> CliResult<Option<String>> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(self.type_error(key, "a string")),
        }
    }

    pub fn format(&self, flag: Option<Format>) -> CliResult<Option<Format>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.text("format")?.as_deref() {
            None => Ok(None),
            Some("csv") => Ok(Some(Format::Csv)),
            Some("json") => Ok(Some(Format::Json)),
            Some(other) => Err(CliError::Input(format!("unknown format `{other}`"))),
        }
    }

    pub fn method(&self, flag: Option<Method>) -> CliResult<Method> {
        if let Some(m) = flag {
            return Ok(m);
        }
        match self.text("method")?.as_deref() {
            None | Some("auto") => Ok(Method::Auto),
            Some("ode") => Ok(Method::Ode),
            Some("closed-form") => Ok(Method::ClosedForm),
            Some(other) => Err(CliError::Input(format!("unknown method `{other}`"))),
        }
    }

    pub fn output(&self, flag: Option<PathBuf>) -> CliResult<Option<PathBuf>> {
        if flag.is_some() {
            return Ok(flag);
        }
        Ok(self.text("output")?.map(PathBuf::from))
    }
}

/// Settings shared by every subcommand, before a spec is required.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub q0: Option<f64>,
    pub lambda_star: Option<f64>,
    pub m: Option<i64>,
    pub p: Option<f64>,
    pub grid_n: usize,
    pub tol: f64,
    pub output_path: Option<PathBuf>,
    pub format: Option<Format>,
}

impl Settings {
    pub fn resolve(args: &CommonArgs, file: &FileValues) -> CliResult<Self> {
        let grid_n = file.count(args.grid, "grid")?.unwrap_or(DEFAULT_GRID);
        if grid_n < MIN_GRID {
            return Err(CliError::Input(format!("--grid {grid_n} is below the minimum {MIN_GRID}")));
        }
        let tol = file.real(args.tol, "tol")?.unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0 && tol < 1e-2) {
            return Err(CliError::Input(format!("--tol {tol} must lie in (0, 1e-2)")));
        }
        Ok(Settings {
            q0: file.real(args.q0, "q0")?,
            lambda_star: file.real(args.lambda_star, "lambda-star")?,
            m: file.integer(args.m, "m")?,
            p: file.real(args.p, "p")?,
            grid_n,
            tol,
            output_path: file.output(args.output.clone())?,
            format: file.format(args.format)?,
        })
    }

    /// `(m, p)` validated on their own, for commands that scan the gap.
    pub fn index_and_exponent(&self) -> CliResult<(u32, f64)> {
        let m = self.m.ok_or_else(|| missing("--m"))?;
        let p = self.p.ok_or_else(|| missing("--p"))?;
        // A throwaway spec reuses the library's validation.
        let spec = ProblemSpec::new(0.0, 0.0, m, p)?;
        Ok((spec.m, spec.p))
    }
}

fn missing(flag: &str) -> CliError {
    CliError::Input(format!("missing required flag {flag}"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spec: ProblemSpec,
    pub grid_n: usize,
    pub tol: f64,
    pub output_path: Option<PathBuf>,
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn from_settings(s: &Settings) -> CliResult<Self> {
        let q0 = s.q0.ok_or_else(|| missing("--q0"))?;
        let lambda_star = s.lambda_star.ok_or_else(|| missing("--lambda-star"))?;
        let m = s.m.ok_or_else(|| missing("--m"))?;
        let p = s.p.ok_or_else(|| missing("--p"))?;
        Ok(RunConfig {
            spec: ProblemSpec::new(q0, lambda_star, m, p)?,
            grid_n: s.grid_n,
            tol: s.tol,
            output_path: s.output_path.clone(),
            format: s.format,
        })
    }

    pub fn resolve(args: &CommonArgs, file: &FileValues) -> CliResult<Self> {
        Self::from_settings(&Settings::resolve(args, file)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags() -> CommonArgs {
        CommonArgs {
            q0: Some(0.0),
            lambda_star: Some(20.0),
            m: Some(1),
            p: Some(2.0),
            ..CommonArgs::default()
        }
    }

    #[test]
    fn defaults() {
        let cfg = RunConfig::resolve(&flags(), &FileValues::default()).unwrap();
        assert_eq!(cfg.grid_n, DEFAULT_GRID);
        assert_eq!(cfg.tol, DEFAULT_TOL);
        assert_eq!(cfg.format, None);
    }

    #[test]
    fn flags_win_over_file() {
        let file = FileValues::parse("q0 = 3\nlambda-star = 1.0\ngrid = 512\nformat = \"json\"\n").unwrap();
        let cfg = RunConfig::resolve(&flags(), &file).unwrap();
        assert_eq!(cfg.spec.q0, 0.0);
        assert_eq!(cfg.spec.lambda_star, 20.0);
        assert_eq!(cfg.grid_n, 512);
        assert_eq!(cfg.format, Some(Format::Json));

        let only_file = CommonArgs::default();
        let file = FileValues::parse("q0 = 3\nlambda_star = 1\nm = 2\np = 1.5\n").unwrap();
        let cfg = RunConfig::resolve(&only_file, &file).unwrap();
        assert_eq!((cfg.spec.q0, cfg.spec.lambda_star, cfg.spec.m, cfg.spec.p), (3.0, 1.0, 2, 1.5));
    }

    #[test]
    fn rejects_bad_values() {
        assert!(FileValues::parse("nonsense = 1").is_err());
        assert!(FileValues::parse("[section]\nq0 = 1").is_err());
        let file = FileValues::parse("m = 1.5").unwrap();
        assert!(RunConfig::resolve(&CommonArgs { m: None, ..flags() }, &file).is_err());
        let mut a = flags();
        a.grid = Some(100);
        assert!(RunConfig::resolve(&a, &FileValues::default()).is_err());
        let mut a = flags();
        a.tol = Some(0.5);
        assert!(RunConfig::resolve(&a, &FileValues::default()).is_err());
        let mut a = flags();
        a.q0 = None;
        let e = RunConfig::resolve(&a, &FileValues::default()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let mut a = flags();
        a.m = Some(0);
        let e = RunConfig::resolve(&a, &FileValues::default()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
