//! Mesh sources, parameter strings and the `key = value` config file.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use meshshape::fem::RhsField;
use meshshape::mesh::{make_disc_mesh, make_square5_mesh};
use meshshape::mesh_io::read_mesh;
use meshshape::penalty::PenaltyParams;
use meshshape::{Mesh, SmoothingParam};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    File(PathBuf),
    Disc(usize),
    Square5,
}

impl FromStr for MeshSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "square5" {
            return Ok(MeshSource::Square5);
        }
        if let Some(rings) = s.strip_prefix("disc:") {
            return match rings.parse::<usize>() {
                Ok(r) if r >= 1 => Ok(MeshSource::Disc(r)),
                _ => Err(format!("bad ring count in {s:?}")),
            };
        }
        if s.is_empty() {
            return Err("empty mesh source".into());
        }
        Ok(MeshSource::File(PathBuf::from(s)))
    }
}

impl fmt::Display for MeshSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshSource::File(p) => write!(f, "{}", p.display()),
            MeshSource::Disc(r) => write!(f, "disc:{r}"),
            MeshSource::Square5 => f.write_str("square5"),
        }
    }
}

impl MeshSource {
    pub fn load(&self) -> Result<Mesh, CliError> {
        Ok(match self {
            MeshSource::File(p) => read_mesh(p)?,
            MeshSource::Disc(r) => make_disc_mesh(*r),
            MeshSource::Square5 => make_square5_mesh(),
        })
    }
}

/// `set1`, `set2`, `set3`, `none`, or a comma list of `a1..a4`, `mu`,
/// `cutoff` assignments, optionally after a preset name
/// (`set1,a3=0.01`). Unassigned coefficients are zero without a preset.
pub fn parse_penalty(s: &str) -> Result<PenaltyParams, String> {
    let mut params = PenaltyParams::zero();
    for (i, token) in s.split(',').map(str::trim).enumerate() {
        match token {
            "none" | "zero" if i == 0 => params = PenaltyParams::zero(),
            "set1" if i == 0 => params = PenaltyParams::set1(),
            "set2" if i == 0 => params = PenaltyParams::set2(),
            "set3" if i == 0 => params = PenaltyParams::set3(),
            "metric" if i == 0 => params = PenaltyParams::metric_preset(),
            _ => {
                let (key, value) = token
                    .split_once('=')
                    .ok_or_else(|| format!("expected a preset or key=value, got {token:?}"))?;
                let value: f64 = value.trim().parse().map_err(|_| format!("bad number in {token:?}"))?;
                if !value.is_finite() || value < 0.0 {
                    return Err(format!("{token:?} must be finite and non-negative"));
                }
                match key.trim() {
                    "a1" => params.alpha[0] = value,
                    "a2" => params.alpha[1] = value,
                    "a3" => params.alpha[2] = value,
                    "a4" => params.alpha[3] = value,
                    "mu" => params.mu = SmoothingParam::new(value).ok_or("mu must be positive")?,
                    "cutoff" if value > 0.0 => params.cutoff_threshold = Some(value),
                    "cutoff" => params.cutoff_threshold = None,
                    k => return Err(format!("unknown penalty key {k:?}")),
                }
            }
        }
    }
    Ok(params)
}

/// `model` or `const:<c>`.
pub fn parse_rhs(s: &str) -> Result<RhsField, String> {
    if s == "model" {
        return Ok(RhsField::Model);
    }
    s.strip_prefix("const:")
        .and_then(|c| c.parse::<f64>().ok())
        .filter(|c| c.is_finite())
        .map(RhsField::Constant)
        .ok_or_else(|| format!("expected `model` or `const:<value>`, got {s:?}"))
}

/// Plain `key = value` lines; `#` starts a comment.
#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    entries: HashMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut entries = HashMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected `key = value`", n + 1))?;
            entries.insert(k.trim().replace('_', "-"), v.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("reading config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// The flag value if given, else the parsed config entry.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.entries
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("config key {key}: {e}")))
            })
            .transpose()
    }
}

/// Output directory: flag, then `MESHSHAPE_OUT`, then the config file, then
/// `meshshape-out`.
pub fn output_dir(flag: Option<PathBuf>, config: &ConfigFile) -> Result<PathBuf, CliError> {
    if let Some(p) = flag {
        return Ok(p);
    }
    if let Some(p) = std::env::var_os("MESHSHAPE_OUT").filter(|v| !v.is_empty()) {
        return Ok(PathBuf::from(p));
    }
    Ok(config
        .pick::<PathBuf>(None, "out")?
        .unwrap_or_else(|| PathBuf::from("meshshape-out")))
}
