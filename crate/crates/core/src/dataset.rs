//! Landmark dataset files.
//!
//! A dataset is a JSON manifest naming groups of specimen files. Each
//! specimen file is a comma separated table with one landmark per row,
//! `landmark_id,x,y,z` (or `landmark_id,x,y,z,w` for homogeneous input).
//! Rows are taken in file order; an optional header row and `#` comments
//! are allowed. Specimen paths are resolved against the manifest's
//! directory.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::means::GroupSample;
use crate::projective::{
    point_from_affine, projective_coordinates, HomogeneousPoint, LandmarkConfig, ProjectiveShape,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordinateKind {
    /// `x,y,z`, homogenized as `(x,y,z,1)`.
    #[default]
    Affine,
    /// Raw `x,y,z,w`.
    Homogeneous,
}

impl CoordinateKind {
    fn width(self) -> usize {
        match self {
            CoordinateKind::Affine => 3,
            CoordinateKind::Homogeneous => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupEntry {
    pub name: String,
    pub specimens: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format_version: u32,
    /// Landmarks per specimen.
    pub k: usize,
    /// 1-based positions of the five frame landmarks.
    pub frame_indices: [usize; 5],
    #[serde(default)]
    pub coordinates: CoordinateKind,
    pub groups: Vec<GroupEntry>,
}

impl DatasetManifest {
    /// Parses and validates a manifest without touching specimen files.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let manifest: Self = serde_json::from_str(&text).map_err(|e| Error::Manifest {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        manifest.validate().map_err(|reason| Error::Manifest {
            path: path.to_path_buf(),
            reason,
        })?;
        Ok(manifest)
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.format_version != FORMAT_VERSION {
            return Err(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                self.format_version
            ));
        }
        if self.k < 6 {
            return Err(format!("k must be at least 6, got {}", self.k));
        }
        let mut seen = HashSet::new();
        for &i in &self.frame_indices {
            if i == 0 || i > self.k {
                return Err(format!("frame index {i} outside 1..={}", self.k));
            }
            if !seen.insert(i) {
                return Err(format!("frame index {i} repeated"));
            }
        }
        if self.groups.is_empty() {
            return Err("no groups".into());
        }
        let mut names = HashSet::new();
        for g in &self.groups {
            if g.name.trim().is_empty() {
                return Err("group with empty name".into());
            }
            if !names.insert(g.name.as_str()) {
                return Err(format!("group name {:?} repeated", g.name));
            }
            if g.specimens.is_empty() {
                return Err(format!("group {:?} has no specimens", g.name));
            }
        }
        Ok(())
    }

    /// Zero-based frame indices.
    pub fn frame_positions(&self) -> [usize; 5] {
        self.frame_indices.map(|i| i - 1)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Registered shapes grouped as in the manifest.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub groups: Vec<GroupSample<f64>>,
}

impl Dataset {
    pub fn specimen_count(&self) -> usize {
        self.groups.iter().map(GroupSample::len).sum()
    }

    pub fn group_names(&self) -> Vec<String> {
        self.manifest
            .groups
            .iter()
            .map(|g| g.name.clone())
            .collect()
    }
}

/// Reads one specimen table, requiring exactly `k` landmarks.
pub fn read_specimen(
    path: &Path,
    k: usize,
    kind: CoordinateKind,
) -> Result<Vec<HomogeneousPoint<f64>>> {
    let points = read_landmarks(path, kind)?;
    if points.len() != k {
        return Err(Error::InconsistentK {
            file: path.to_path_buf(),
            expected: k,
            found: points.len(),
        });
    }
    Ok(points)
}

/// Reads every landmark row of a specimen table.
pub fn read_landmarks(path: &Path, kind: CoordinateKind) -> Result<Vec<HomogeneousPoint<f64>>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let parse_err = |line: usize, reason: String| Error::Parse {
        file: path.to_path_buf(),
        line,
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut points = Vec::new();
    let mut ids = HashSet::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let numeric: Vec<Option<f64>> = record.iter().skip(1).map(|f| f.parse().ok()).collect();
        if first && numeric.iter().all(Option::is_none) {
            // header row
            first = false;
            continue;
        }
        first = false;
        if record.len() != kind.width() + 1 {
            return Err(parse_err(
                line,
                format!(
                    "expected {} fields, found {}",
                    kind.width() + 1,
                    record.len()
                ),
            ));
        }
        let id = record[0].to_string();
        if !ids.insert(id.clone()) {
            return Err(parse_err(line, format!("landmark id {id:?} repeated")));
        }
        let mut coords = [0.0; 4];
        for (c, (value, raw)) in numeric.iter().zip(record.iter().skip(1)).enumerate() {
            coords[c] = value
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(line, format!("not a finite number: {raw:?}")))?;
        }
        let point = match kind {
            CoordinateKind::Affine => point_from_affine([coords[0], coords[1], coords[2]]),
            CoordinateKind::Homogeneous => HomogeneousPoint::new(coords),
        }
        .map_err(|e| parse_err(line, e.to_string()))?;
        points.push(point);
    }
    Ok(points)
}

/// Writes an affine specimen table with a header row.
pub fn write_specimen(path: &Path, landmarks: &[[f64; 3]]) -> Result<()> {
    let mut text = String::from("landmark_id,x,y,z\n");
    for (i, p) in landmarks.iter().enumerate() {
        text.push_str(&format!("{},{},{},{}\n", i + 1, p[0], p[1], p[2]));
    }
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Projective coordinates of a landmark list under the given zero-based
/// frame positions.
pub fn register(
    landmarks: Vec<HomogeneousPoint<f64>>,
    frame: [usize; 5],
) -> Result<ProjectiveShape<f64>> {
    projective_coordinates(&LandmarkConfig::new(landmarks, frame)?)
}

fn resolve(root: &Path, specimen: &str) -> PathBuf {
    root.join(specimen)
}

/// Loads and registers every specimen named by the manifest at `path`.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let manifest = DatasetManifest::from_path(path)?;
    let root = path.parent().unwrap_or(Path::new("")).to_path_buf();
    let frame = manifest.frame_positions();

    let mut raw = Vec::with_capacity(manifest.groups.len());
    for group in &manifest.groups {
        let mut specimens = Vec::with_capacity(group.specimens.len());
        for spec in &group.specimens {
            let points = read_specimen(&resolve(&root, spec), manifest.k, manifest.coordinates)?;
            specimens.push((spec, points));
        }
        raw.push(specimens);
    }

    let mut groups = Vec::with_capacity(raw.len());
    for specimens in raw {
        let shapes = specimens
            .into_iter()
            .map(|(id, points)| {
                register(points, frame).map_err(|e| Error::Specimen {
                    specimen: id.clone(),
                    source: Box::new(e),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        groups.push(GroupSample::new(shapes)?);
    }
    Ok(Dataset { manifest, groups })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest() -> DatasetManifest {
        DatasetManifest {
            format_version: 1,
            k: 6,
            frame_indices: [1, 2, 3, 4, 5],
            coordinates: CoordinateKind::Affine,
            groups: vec![GroupEntry {
                name: "a".into(),
                specimens: vec!["s1.csv".into()],
            }],
        }
    }

    #[test]
    fn validation_rules() {
        assert!(manifest().validate().is_ok());
        let mut m = manifest();
        m.frame_indices = [1, 2, 3, 3, 5];
        assert!(m.validate().unwrap_err().contains("repeated"));
        let mut m = manifest();
        m.frame_indices = [0, 2, 3, 4, 5];
        assert!(m.validate().is_err());
        let mut m = manifest();
        m.frame_indices = [1, 2, 3, 4, 7];
        assert!(m.validate().is_err());
        let mut m = manifest();
        m.groups[0].specimens.clear();
        assert!(m.validate().is_err());
        let mut m = manifest();
        m.format_version = 2;
        assert!(m.validate().is_err());
    }

    #[test]
    fn coordinate_kind_defaults_to_affine() {
        let m: DatasetManifest = serde_json::from_str(
            r#"{"format_version":1,"k":6,"frame_indices":[1,2,3,4,5],
                "groups":[{"name":"a","specimens":["x.csv"]}]}"#,
        )
        .unwrap();
        assert_eq!(m.coordinates, CoordinateKind::Affine);
    }

    #[test]
    fn specimen_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        fs::write(
            &p,
            "# exported\nid,x,y,z\n1,0,0,0\n2,1,0,0\n\n3, 0, 1, 0\n4,0,0,1\n5,1,1,1\n6,2,3,4\n",
        )
        .unwrap();
        let pts = read_specimen(&p, 6, CoordinateKind::Affine).unwrap();
        assert_eq!(pts.len(), 6);
        let e = read_specimen(&p, 7, CoordinateKind::Affine).unwrap_err();
        assert!(matches!(
            e,
            Error::InconsistentK {
                expected: 7,
                found: 6,
                ..
            }
        ));

        fs::write(&p, "1,0,0,0\n2,1,zero,0\n").unwrap();
        match read_specimen(&p, 2, CoordinateKind::Affine).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("{e}"),
        }
        fs::write(&p, "1,0,0,0\n1,1,0,0\n").unwrap();
        assert!(matches!(
            read_specimen(&p, 2, CoordinateKind::Affine),
            Err(Error::Parse { .. })
        ));
        fs::write(&p, "1,0,0,0,1\n2,0,0,0,0\n").unwrap();
        assert!(read_specimen(&p, 2, CoordinateKind::Homogeneous).is_err());
    }
}
