//! TOML floor-plan documents.
//!
//! ```toml
//! width = 20.0
//! height = 10.0
//! mask = [[1, 1, 0], ...]        # optional, rows of 0/1 flags
//!
//! [[walls]]
//! x1 = 5.0
//! y1 = 0.0
//! x2 = 5.0
//! y2 = 6.0
//! atten_db = 8.0
//! dissociating = true
//!
//! [[aps]]
//! x = 1.0
//! y = 1.0
//! tx_dbm = 0.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AccessPoint, Environment, FloorPlan, Position, Wall};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentFile {
    pub width: f64,
    pub height: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Vec<Vec<u8>>>,
    #[serde(default)]
    pub walls: Vec<Wall>,
    pub aps: Vec<ApEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApEntry {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub tx_dbm: f64,
}

impl TryFrom<EnvironmentFile> for Environment {
    type Error = Error;

    fn try_from(f: EnvironmentFile) -> Result<Self> {
        let plan = FloorPlan::new(f.width, f.height, f.walls)?;
        let aps = f
            .aps
            .iter()
            .enumerate()
            .map(|(n, ap)| AccessPoint {
                id: n + 1,
                position: Position::new(ap.x, ap.y),
                tx_dbm: ap.tx_dbm,
            })
            .collect();
        let mask = f
            .mask
            .map(|rows| {
                rows.into_iter()
                    .map(|row| {
                        row.into_iter()
                            .map(|flag| match flag {
                                0 => Ok(false),
                                1 => Ok(true),
                                other => Err(Error::config(format!(
                                    "mask flags must be 0 or 1, got {other}"
                                ))),
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        Environment::new(plan, aps, mask)
    }
}

impl From<&Environment> for EnvironmentFile {
    fn from(env: &Environment) -> Self {
        Self {
            width: env.plan.width,
            height: env.plan.height,
            mask: env.mask.as_ref().map(|rows| {
                rows.iter()
                    .map(|row| row.iter().map(|&b| u8::from(b)).collect())
                    .collect()
            }),
            walls: env.plan.walls.clone(),
            aps: env
                .aps
                .iter()
                .map(|ap| ApEntry {
                    x: ap.position.x,
                    y: ap.position.y,
                    tx_dbm: ap.tx_dbm,
                })
                .collect(),
        }
    }
}

impl Environment {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: EnvironmentFile =
            toml::from_str(text).map_err(|e| Error::config(format!("floor plan: {e}")))?;
        file.try_into()
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(&EnvironmentFile::from(self))
            .map_err(|e| Error::config(format!("cannot serialize floor plan: {e}")))
    }
}

pub fn load_environment(path: &Path) -> Result<Environment> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Environment::from_toml_str(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn save_environment(env: &Environment, path: &Path) -> Result<()> {
    std::fs::write(path, env.to_toml_string()?).map_err(|e| Error::io(path, e))
}
