//! Run configuration files and the IFS file format.
//!
//! ```json
//! {
//!   "ifs": {"alphabet": ["a", "b", "c"],
//!           "maps": {"a": {"r": 0.5, "angle": 0.0, "tx": 0.0, "ty": 0.0, "reflect": false}, ...},
//!           "part_one": ["a"]},
//!   "constants": {"rho": 0.00390625, "epsilon": 0.3},
//!   "grid": {"phi_samples": 32},
//!   "seed": 1
//! }
//! ```
//! `ifs` may also be a path to a file holding only the IFS object, resolved
//! relative to the configuration file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ifs::{IfsSpec, Similarity};
use crate::params::{Constants, GridConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IfsFile {
    pub alphabet: Vec<String>,
    pub maps: BTreeMap<String, Similarity>,
    #[serde(default)]
    pub part_one: Option<Vec<String>>,
}

impl IfsFile {
    pub fn to_spec(&self) -> Result<IfsSpec> {
        let mut maps = Vec::with_capacity(self.alphabet.len());
        for s in &self.alphabet {
            maps.push(*self.maps.get(s).ok_or_else(|| Error::MissingMap(s.clone()))?);
        }
        if let Some(extra) = self.maps.keys().find(|k| !self.alphabet.contains(k)) {
            return Err(Error::UnknownSymbol(extra.clone()));
        }
        let part_one = match &self.part_one {
            Some(names) => Some(
                names
                    .iter()
                    .map(|n| {
                        self.alphabet
                            .iter()
                            .position(|s| s == n)
                            .ok_or_else(|| Error::UnknownSymbol(n.clone()))
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            None => None,
        };
        IfsSpec::new(self.alphabet.clone(), maps, part_one)
    }

    pub fn from_spec(spec: &IfsSpec) -> Self {
        IfsFile {
            alphabet: spec.symbols().to_vec(),
            maps: spec
                .symbols()
                .iter()
                .cloned()
                .zip(spec.maps().iter().copied())
                .collect(),
            part_one: Some(spec.part_one().iter().map(|&a| spec.symbols()[a].clone()).collect()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub ifs: serde_json::Value,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    base_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(ifs: &IfsFile) -> Self {
        RunConfig {
            ifs: serde_json::to_value(ifs).expect("IFS files serialize"),
            constants: Constants::default(),
            grid: GridConfig::default(),
            seed: 0,
            out: None,
            base_dir: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg: RunConfig = serde_json::from_str(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn ifs_file(&self) -> Result<IfsFile> {
        match &self.ifs {
            serde_json::Value::String(p) => {
                let p = PathBuf::from(p);
                let p = match (&self.base_dir, p.is_relative()) {
                    (Some(dir), true) => dir.join(p),
                    _ => p,
                };
                Ok(serde_json::from_str(&std::fs::read_to_string(p)?)?)
            }
            v @ serde_json::Value::Object(_) => Ok(serde_json::from_value(v.clone())?),
            _ => Err(invalid("ifs", "expected an IFS object or a path")),
        }
    }

    pub fn ifs_spec(&self) -> Result<IfsSpec> {
        self.ifs_file()?.to_spec()
    }

    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        self.grid.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIERPINSKI: &str = r#"{
        "alphabet": ["a", "b", "c"],
        "maps": {
            "a": {"r": 0.5, "angle": 0.0, "tx": 0.0, "ty": 0.0},
            "b": {"r": 0.5, "angle": 0.0, "tx": 0.5, "ty": 0.0},
            "c": {"r": 0.5, "angle": 0.0, "tx": 0.25, "ty": 0.5}
        }
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let f: IfsFile = serde_json::from_str(SIERPINSKI).unwrap();
        let spec = f.to_spec().unwrap();
        assert!((spec.dimension() - 3f64.ln() / 2f64.ln()).abs() < 1e-10);
        let back = IfsFile::from_spec(&spec).to_spec().unwrap();
        assert_eq!(back.maps(), spec.maps());
        assert_eq!(back.part_one(), spec.part_one());
    }

    #[test]
    fn missing_map_is_named() {
        let mut f: IfsFile = serde_json::from_str(SIERPINSKI).unwrap();
        f.maps.remove("c");
        assert_eq!(f.to_spec().unwrap_err().to_string(), "maps: missing symbol 'c'");
    }

    #[test]
    fn inline_and_path_sources() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("s.json"), SIERPINSKI).unwrap();
        std::fs::write(dir.path().join("run.json"), r#"{"ifs": "s.json", "seed": 4}"#).unwrap();
        let cfg = RunConfig::load(&dir.path().join("run.json")).unwrap();
        assert_eq!(cfg.seed, 4);
        assert_eq!(cfg.ifs_spec().unwrap().len(), 3);
        assert_eq!(cfg.constants, Constants::default());
    }
}
