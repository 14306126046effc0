//! TOML run configuration with sections `[mesh]`, `[model]`, `[time]`,
//! `[solver]` and `[output]`. Every field is optional; command-line flags
//! take precedence.
//!
//! ```toml
//! [mesh]
//! kind = "icosphere"   # or "fibonacci" (with `points`) or "file" (with `path`)
//! level = 3
//!
//! [model]
//! experiment = "exp3"
//! method = "lsfem"
//!
//! [time]
//! tau = 1e-3
//! t_final = 5.0
//!
//! [solver]
//! kind = "gauss-seidel"  # or "cg"
//! tol = 1e-12
//! max_iter = 10000
//!
//! [output]
//! dir = "out/exp3"
//! snapshot_stride = 500
//! ```

use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;
use toml::Spanned;

use super::presets::Experiment;
use crate::timestepper::{LinearSolver, MassMode};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("{0}")]
    Argument(String),
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSpec {
    Icosphere(u32),
    Fibonacci(usize),
    File(PathBuf),
}

pub fn parse_method(s: &str) -> Result<MassMode, String> {
    match s.to_ascii_lowercase().as_str() {
        "lsfem" | "lumped" => Ok(MassMode::Lumped),
        "sfem" | "consistent" => Ok(MassMode::Consistent),
        _ => Err(format!("unknown method '{s}' (expected sfem or lsfem)")),
    }
}

pub fn method_name(mode: MassMode) -> &'static str {
    match mode {
        MassMode::Lumped => "lsfem",
        MassMode::Consistent => "sfem",
    }
}

pub fn parse_solver(s: &str) -> Result<LinearSolver, String> {
    match s.to_ascii_lowercase().as_str() {
        "cg" => Ok(LinearSolver::ConjugateGradient),
        "gauss-seidel" | "gs" => Ok(LinearSolver::GaussSeidel),
        _ => Err(format!("unknown solver '{s}' (expected cg or gauss-seidel)")),
    }
}

/// Values read from a config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig {
    pub mesh: Option<MeshSpec>,
    pub experiment: Option<Experiment>,
    pub method: Option<MassMode>,
    pub diffusion: Option<Vec<f64>>,
    pub tau: Option<f64>,
    pub t_final: Option<f64>,
    pub solver: Option<LinearSolver>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub out: Option<PathBuf>,
    pub snapshot_stride: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct Raw {
    mesh: Option<RawMesh>,
    model: Option<RawModel>,
    time: Option<RawTime>,
    solver: Option<RawSolver>,
    output: Option<RawOutput>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMesh {
    kind: Option<Spanned<String>>,
    level: Option<Spanned<i64>>,
    points: Option<Spanned<i64>>,
    path: Option<Spanned<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    experiment: Option<Spanned<String>>,
    method: Option<Spanned<String>>,
    diffusion: Option<Spanned<Vec<f64>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    tau: Option<Spanned<f64>>,
    t_final: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    kind: Option<Spanned<String>>,
    tol: Option<Spanned<f64>>,
    max_iter: Option<Spanned<i64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<Spanned<String>>,
    snapshot_stride: Option<Spanned<i64>>,
}

fn line_of(text: &str, span: Range<usize>) -> usize {
    text[..span.start.min(text.len())].matches('\n').count() + 1
}

pub fn parse_config(text: &str) -> Result<FileConfig, ConfigError> {
    let raw: Raw = toml::from_str(text).map_err(|e| ConfigError::Invalid {
        line: e.span().map_or(0, |s| line_of(text, s)),
        message: e.message().to_string(),
    })?;
    let invalid = |span: Range<usize>, message: String| ConfigError::Invalid {
        line: line_of(text, span),
        message,
    };
    let positive_f = |v: &Spanned<f64>, name: &str| -> Result<f64, ConfigError> {
        let x = *v.get_ref();
        if x > 0.0 && x.is_finite() {
            Ok(x)
        } else {
            Err(invalid(v.span(), format!("{name} must be positive, got {x}")))
        }
    };
    let count = |v: &Spanned<i64>, name: &str, min: i64| -> Result<i64, ConfigError> {
        let x = *v.get_ref();
        if x >= min {
            Ok(x)
        } else {
            Err(invalid(v.span(), format!("{name} must be at least {min}, got {x}")))
        }
    };
    let mut cfg = FileConfig::default();

    if let Some(m) = raw.mesh {
        let kind = m.kind.as_ref().map_or("icosphere", |k| k.get_ref().as_str());
        cfg.mesh = Some(match kind {
            "icosphere" => {
                let level = m
                    .level
                    .as_ref()
                    .ok_or_else(|| invalid(m.kind.as_ref().map_or(0..0, Spanned::span), "icosphere needs `level`".into()))?;
                let l = count(level, "level", 0)?;
                if l > crate::mesh::MAX_ICOSPHERE_LEVEL as i64 {
                    return Err(invalid(
                        level.span(),
                        format!("level {l} exceeds {}", crate::mesh::MAX_ICOSPHERE_LEVEL),
                    ));
                }
                MeshSpec::Icosphere(l as u32)
            }
            "fibonacci" => {
                let points = m
                    .points
                    .as_ref()
                    .ok_or_else(|| invalid(m.kind.as_ref().map_or(0..0, Spanned::span), "fibonacci needs `points`".into()))?;
                MeshSpec::Fibonacci(count(points, "points", 4)? as usize)
            }
            "file" => {
                let path = m
                    .path
                    .as_ref()
                    .ok_or_else(|| invalid(m.kind.as_ref().map_or(0..0, Spanned::span), "file mesh needs `path`".into()))?;
                MeshSpec::File(PathBuf::from(path.get_ref()))
            }
            other => {
                return Err(invalid(
                    m.kind.as_ref().map_or(0..0, Spanned::span),
                    format!("unknown mesh kind '{other}' (expected icosphere, fibonacci or file)"),
                ))
            }
        });
    }
    if let Some(m) = raw.model {
        if let Some(e) = &m.experiment {
            cfg.experiment = Some(e.get_ref().parse().map_err(|msg| invalid(e.span(), msg))?);
        }
        if let Some(v) = &m.method {
            cfg.method = Some(parse_method(v.get_ref()).map_err(|msg| invalid(v.span(), msg))?);
        }
        if let Some(d) = &m.diffusion {
            if d.get_ref().is_empty() || d.get_ref().iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(invalid(d.span(), "diffusion coefficients must be positive".into()));
            }
            cfg.diffusion = Some(d.get_ref().clone());
        }
    }
    if let Some(t) = raw.time {
        if let Some(v) = &t.tau {
            cfg.tau = Some(positive_f(v, "tau")?);
        }
        if let Some(v) = &t.t_final {
            cfg.t_final = Some(positive_f(v, "t_final")?);
        }
    }
    if let Some(s) = raw.solver {
        if let Some(v) = &s.kind {
            cfg.solver = Some(parse_solver(v.get_ref()).map_err(|msg| invalid(v.span(), msg))?);
        }
        if let Some(v) = &s.tol {
            cfg.tol = Some(positive_f(v, "tol")?);
        }
        if let Some(v) = &s.max_iter {
            cfg.max_iter = Some(count(v, "max_iter", 1)? as usize);
        }
    }
    if let Some(o) = raw.output {
        if let Some(v) = &o.dir {
            cfg.out = Some(PathBuf::from(v.get_ref()));
        }
        if let Some(v) = &o.snapshot_stride {
            cfg.snapshot_stride = Some(count(v, "snapshot_stride", 0)? as usize);
        }
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_config() {
        let text = r#"
[mesh]
kind = "icosphere"
level = 3

[model]
experiment = "exp3"
method = "sfem"

[time]
tau = 1e-3
t_final = 0.5

[solver]
kind = "cg"
tol = 1e-11
max_iter = 500

[output]
dir = "out"
snapshot_stride = 10
"#;
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.mesh, Some(MeshSpec::Icosphere(3)));
        assert_eq!(cfg.experiment, Some(Experiment::Exp3));
        assert_eq!(cfg.method, Some(MassMode::Consistent));
        assert_eq!(cfg.tau, Some(1e-3));
        assert_eq!(cfg.t_final, Some(0.5));
        assert_eq!(cfg.solver, Some(LinearSolver::ConjugateGradient));
        assert_eq!(cfg.max_iter, Some(500));
        assert_eq!(cfg.out, Some(PathBuf::from("out")));
        assert_eq!(cfg.snapshot_stride, Some(10));
    }

    #[test]
    fn empty_config_is_all_defaults() {
        assert_eq!(parse_config("").unwrap(), FileConfig::default());
    }

    fn error_line(text: &str) -> usize {
        match parse_config(text) {
            Err(ConfigError::Invalid { line, .. }) => line,
            other => panic!("expected error, got {other:?}"),
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(error_line("[time]\ntau = -1.0\n"), 2);
        assert_eq!(error_line("[model]\n\nexperiment = \"exp9\"\n"), 3);
        assert_eq!(error_line("[mesh]\nlevel = 2\nkind = \"torus\"\n"), 3);
        assert_eq!(error_line("[mesh]\nkind = \"icosphere\"\nlevel = 12\n"), 3);
        assert_eq!(error_line("[time]\ntau = \n"), 2);
        assert_eq!(error_line("[output]\n\n\ncolour = 1\n"), 4);
        assert_eq!(error_line("[model]\nmethod = \"fem\"\n"), 2);
    }

    #[test]
    fn method_and_solver_names() {
        assert_eq!(parse_method("LSFEM").unwrap(), MassMode::Lumped);
        assert_eq!(method_name(parse_method("sfem").unwrap()), "sfem");
        assert_eq!(parse_solver("gs").unwrap(), LinearSolver::GaussSeidel);
        assert!(parse_solver("lu").is_err());
    }
}
