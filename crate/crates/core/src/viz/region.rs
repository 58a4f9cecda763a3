use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: String,
    pub name: String,
    /// Report row this region is coloured by.
    pub class: String,
    /// Vertices in planar coordinates, y pointing up.
    pub polygon: Vec<[f64; 2]>,
}

/// Region geometry: `{ "regions": [ { "id", "name", "class", "polygon": [[x, y], ...] } ] }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionMap {
    pub regions: Vec<Region>,
}

impl RegionMap {
    pub fn from_json(text: &str) -> Result<Self> {
        let map: Self =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("region map: {e}")))?;
        map.validate()?;
        Ok(map)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.regions.is_empty() {
            return Err(Error::Export("region map has no regions".into()));
        }
        let mut seen = HashSet::new();
        for r in &self.regions {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::Export(format!("duplicate region id `{}`", r.id)));
            }
            if r.polygon.len() < 3 {
                return Err(Error::Export(format!(
                    "region `{}` has {} vertices; polygons need at least 3",
                    r.id,
                    r.polygon.len()
                )));
            }
            if r.polygon.iter().flatten().any(|c| !c.is_finite()) {
                return Err(Error::Export(format!(
                    "region `{}` has a non-finite vertex",
                    r.id
                )));
            }
        }
        Ok(())
    }

    /// `(min_x, min_y, max_x, max_y)` over all vertices.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        let mut b = (
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        );
        for [x, y] in self.regions.iter().flat_map(|r| r.polygon.iter().copied()) {
            b = (b.0.min(x), b.1.min(y), b.2.max(x), b.3.max(y));
        }
        b
    }
}
