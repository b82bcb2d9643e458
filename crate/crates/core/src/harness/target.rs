use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ctqw::{ConcatenatedDistribution, TimeGrid};
use crate::error::{Error, Result};

/// On-disk measured distributions: `{"n": .., "times": [..], "slices": [[..], ..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetFile {
    pub n: usize,
    pub times: Vec<f64>,
    pub slices: Vec<Vec<f64>>,
}

impl TargetFile {
    pub fn new(grid: &TimeGrid, dist: &ConcatenatedDistribution) -> Self {
        TargetFile {
            n: dist.n(),
            times: grid.times().to_vec(),
            slices: dist.to_nested(),
        }
    }

    /// Checks the contents and splits them into the grid and the distribution.
    pub fn into_parts(self) -> Result<(TimeGrid, ConcatenatedDistribution)> {
        let grid = TimeGrid::new(self.times)?;
        if grid.len() != self.slices.len() {
            return Err(Error::Shape(format!(
                "{} times but {} slices",
                grid.len(),
                self.slices.len()
            )));
        }
        let dist = ConcatenatedDistribution::from_slices(self.n, &self.slices)?;
        Ok((grid, dist))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data serialises")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctqw::{concatenated_distribution, ProbeState};
    use crate::graph::Topology;

    #[test]
    fn file_round_trip_is_exact() {
        let grid = TimeGrid::new(vec![0.5, 0.6, 1.0]).unwrap();
        let dist = concatenated_distribution(&Topology::Circle.build(7).unwrap(), &ProbeState::ramp(7), &grid).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("target.json");
        TargetFile::new(&grid, &dist).write(&path).unwrap();
        let (g, d) = TargetFile::read(&path).unwrap().into_parts().unwrap();
        assert_eq!(g, grid);
        assert_eq!(d.as_flat(), dist.as_flat());
    }

    #[test]
    fn rejects_inconsistent_files() {
        let bad = TargetFile {
            n: 2,
            times: vec![0.5, 0.6],
            slices: vec![vec![0.5, 0.5]],
        };
        assert!(bad.into_parts().is_err());
        let bad = TargetFile {
            n: 2,
            times: vec![0.5],
            slices: vec![vec![0.7, 0.5]],
        };
        assert!(bad.into_parts().is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("broken.json");
        std::fs::write(&path, "{ not json").unwrap();
        assert!(matches!(TargetFile::read(&path), Err(Error::Parse { .. })));
    }
}
